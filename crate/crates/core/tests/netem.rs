mod common;

use common::desc;
use philsim_core::bench::{run_time_domain, PhilLoop};
use philsim_core::cosim::{
    merge_split_traces, run_conservative, HardwareUnit, SimTime, SimUnit, SimulatorUnit, Wiring,
};
use philsim_core::netem::{make_netem_unit, sample_stream, NetemError, NetworkSpec};
use philsim_core::stability::{classify, Classification, UncertaintyMargin};

const DT: f64 = 1e-5;

fn spec(base: f64, jitter: f64, loss: f64, seed: u64) -> NetworkSpec {
    NetworkSpec {
        base_latency_s: base,
        jitter_s: jitter,
        loss_probability: loss,
        seed,
    }
}

fn feed(unit: &mut dyn SimUnit, sends: &[(f64, f64)], until: f64) -> Vec<(SimTime, f64)> {
    for &(t, v) in sends {
        unit.receive(0, SimTime::from_secs(t).unwrap(), v);
    }
    let mut out = Vec::new();
    unit.advance(SimTime::from_secs(until).unwrap(), &mut out).unwrap();
    let mut got: Vec<_> = out.iter().map(|e| (e.time, e.value)).collect();
    got.sort_by_key(|x| x.0);
    got
}

#[test]
fn fixed_latency_pipe() {
    let mut u = make_netem_unit("net", spec(0.02, 0.0, 0.0, 1)).unwrap();
    let sends: Vec<(f64, f64)> = (0..100).map(|k| (k as f64 * 1e-3, k as f64)).collect();
    let got = feed(&mut u, &sends, 1.0);
    assert_eq!(got.len(), 100);
    for (k, (t, v)) in got.iter().enumerate() {
        assert_eq!(*t, SimTime::from_secs(k as f64 * 1e-3).unwrap().saturating_add(SimTime::from_secs(0.02).unwrap()));
        assert_eq!(*v, k as f64);
    }
    assert_eq!(u.lookahead(), SimTime::from_secs(0.02).unwrap());
}

#[test]
fn total_loss_delivers_nothing() {
    let mut u = make_netem_unit("net", spec(0.02, 0.0, 1.0, 1)).unwrap();
    let sends: Vec<(f64, f64)> = (0..1000).map(|k| (k as f64 * 1e-3, 1.0)).collect();
    assert!(feed(&mut u, &sends, 2.0).is_empty());
    assert_eq!(u.transmissions().len(), 1000);
    assert_eq!(u.delivered_count(), 0);
}

#[test]
fn seeded_loss_is_replayable() {
    let s = spec(0.02, 0.0, 0.1, 0x5EED);
    let a = sample_stream(&s, 10_000);
    let lost: Vec<usize> = (0..a.len()).filter(|&i| !a[i].delivered).collect();
    // recorded from the reference generator (checked against an independent
    // implementation of the same mixing function)
    assert_eq!(lost.len(), 968);
    assert_eq!(&lost[..8], &[0, 2, 12, 19, 23, 30, 41, 42]);
    assert_eq!(sample_stream(&s, 10_000), a);
}

#[test]
fn stream_statistics() {
    let n = 100_000;
    for seed in [1u64, 77, 0xDEAD_BEEF] {
        let half = sample_stream(&spec(0.02, 0.0, 0.5, seed), n);
        let frac = half.iter().filter(|o| o.delivered).count() as f64 / n as f64;
        assert!((0.49..=0.51).contains(&frac), "seed {seed}: {frac}");

        let jit = sample_stream(&spec(0.02, 0.005, 0.0, seed), n);
        assert!(jit.iter().all(|o| o.delivered));
        assert!(jit.iter().all(|o| (0.015..=0.025).contains(&o.delay_s)));
        let mean = jit.iter().map(|o| o.delay_s).sum::<f64>() / n as f64;
        assert!((mean / 0.02 - 1.0).abs() < 0.01);
    }
    assert!(sample_stream(&spec(0.02, 0.0, 0.0, 3), 1000)
        .iter()
        .all(|o| o.delay_s == 0.02));
}

#[test]
fn seeds_give_different_streams() {
    let a = sample_stream(&spec(0.02, 0.005, 0.3, 1), 100);
    let b = sample_stream(&spec(0.02, 0.005, 0.3, 2), 100);
    assert!(a.iter().zip(&b).any(|(x, y)| x != y));
}

#[test]
fn spec_validation() {
    assert!(matches!(
        make_netem_unit("n", spec(0.0, 0.0, 0.0, 1)),
        Err(NetemError::NoLookahead { .. })
    ));
    assert!(make_netem_unit("n", spec(0.01, 0.02, 0.0, 1)).is_err());
    assert!(make_netem_unit("n", spec(0.01, 0.0, -0.1, 1)).is_err());
    assert!(make_netem_unit("n", spec(f64::NAN, 0.0, 0.0, 1)).is_err());
}

#[test]
fn small_jitter_keeps_order() {
    let mut u = make_netem_unit("net", spec(0.01, 4e-4, 0.0, 8)).unwrap();
    let sends: Vec<(f64, f64)> = (0..500).map(|k| (k as f64 * 1e-3, k as f64)).collect();
    let got = feed(&mut u, &sends, 1.0);
    assert!(got.windows(2).all(|w| w[0].1 < w[1].1));
}

#[test]
fn large_jitter_reorders_deterministically() {
    let run = || {
        let mut u = make_netem_unit("net", spec(0.01, 0.005, 0.0, 8)).unwrap();
        let sends: Vec<(f64, f64)> = (0..500).map(|k| (k as f64 * 1e-3, k as f64)).collect();
        feed(&mut u, &sends, 1.0)
    };
    let a = run();
    assert!(a.windows(2).any(|w| w[0].1 > w[1].1));
    assert!(a.windows(2).all(|w| w[0].0 <= w[1].0));
    assert_eq!(a, run());
}

fn remote_loop(ratio: f64, bandwidth_hz: f64, amp: f64, sensor: f64) -> PhilLoop {
    let mut d = desc(ratio, 1.0, amp, sensor);
    d.amplifier.bandwidth_hz = bandwidth_hz;
    PhilLoop::new(d).unwrap()
}

fn remote_run(lp: &PhilLoop, latency: f64, end: f64) -> (SimulatorUnit, HardwareUnit) {
    let mut sim = SimulatorUnit::new("sim", lp, DT).unwrap();
    let mut hw = HardwareUnit::new("hw", lp, DT).unwrap();
    let mut net = make_netem_unit("net", spec(latency, 0.0, 0.0, 4)).unwrap();
    let w = Wiring::new()
        .link(("sim", "v_cmd"), ("hw", "v_cmd"))
        .link(("hw", "i_hut"), ("net", "in"))
        .link(("net", "out"), ("sim", "i_meas"));
    let mut units: Vec<&mut dyn SimUnit> = vec![&mut sim, &mut hw, &mut net];
    run_conservative(&mut units, &w, end).unwrap();
    (sim, hw)
}

#[test]
fn network_latency_adds_to_loop_delay() {
    let lp = remote_loop(0.5, 5000.0, 1e-3, 1e-4);
    let (sim, hw) = remote_run(&lp, 2e-3, 0.2);
    let got = merge_split_traces(&sim.trace().unwrap(), &hw.trace().unwrap()).unwrap();
    let longer = remote_loop(0.5, 5000.0, 1e-3, 1e-4 + 2e-3);
    let want = run_time_domain(&longer, DT, 0.2).unwrap();
    assert_eq!(got, want);
}

#[test]
fn remote_verdict_matches_time_domain() {
    let m = UncertaintyMargin::none();
    let local = remote_loop(1.1, 1000.0, 1e-4, 1e-4);
    assert_eq!(classify(&local, m).unwrap().classification, Classification::Stable);
    let with_net = remote_loop(1.1, 1000.0, 1e-4, 1e-4 + 2e-3);
    let v = classify(&with_net, m).unwrap();
    assert_eq!(v.classification, Classification::Unstable);
    assert!(v.worst_magnitude > 1.05);

    let peak = |lat: f64| {
        let (_, hw) = remote_run(&local, lat, 1.0);
        let tr = hw.trace().unwrap();
        let v = tr.channel("v_pcc").unwrap();
        v[v.len() - 5000..].iter().fold(0.0f64, |a, x| a.max(x.abs()))
    };
    // boundedness oracle: 10x the open-circuit amplitude
    assert!(peak(1e-5) < 100.0);
    assert!(peak(2e-3) > 100.0);
}
