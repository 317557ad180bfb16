mod common;

use common::{angle_deg, desc, pure_delay_loop, rms_diff, tone, F0};
use philsim_core::bench::{channel, run_time_domain, Disturbance, PhilLoop, Trace};
use philsim_core::cosim::{
    merge_split_traces, run_conservative, run_conservative_ordered, run_hub, run_lockstep,
    ConstantUnit, CosimError, Event, EventQueue, GainUnit, HardwareUnit, PhilLoopUnit, SimTime,
    SimUnit, SimulatorUnit, SineSourceUnit, Wiring,
};
use philsim_core::netem::{make_netem_unit, NetworkSpec};
use philsim_core::rng::SplitMix64;

const DT: f64 = 1e-5;

fn split_wiring() -> Wiring {
    Wiring::new()
        .link(("sim", "v_cmd"), ("hw", "v_cmd"))
        .link(("hw", "i_hut"), ("sim", "i_meas"))
}

fn lagged_loop() -> PhilLoop {
    let mut d = desc(0.6, 1.0, 1e-3, 2e-4);
    d.amplifier.bandwidth_hz = 5000.0;
    PhilLoop::new(d).unwrap()
}

fn split(lp: &PhilLoop) -> (SimulatorUnit, HardwareUnit) {
    (
        SimulatorUnit::new("sim", lp, DT).unwrap(),
        HardwareUnit::new("hw", lp, DT).unwrap(),
    )
}

fn merged(run: &philsim_core::cosim::CosimRun) -> Trace {
    merge_split_traces(run.trace("sim").unwrap(), run.trace("hw").unwrap()).unwrap()
}

fn assert_traces_close(a: &Trace, b: &Trace, tol: f64) {
    assert_eq!(a.len(), b.len());
    for ((na, x), (nb, y)) in a.channels().zip(b.channels()) {
        assert_eq!(na, nb);
        let e = rms_diff(x, y);
        assert!(e <= tol, "{na}: rms {e}");
    }
}

#[test]
fn chained_gains_shift_one_exchange() {
    let dt = 1e-4;
    let mut src = SineSourceUnit::new("src", 1.0, 50.0, dt).unwrap();
    let mut g1 = GainUnit::new("g1", 1.0, dt).unwrap();
    let mut g2 = GainUnit::new("g2", 1.0, dt).unwrap();
    let w = Wiring::new()
        .link(("src", "out"), ("g1", "in"))
        .link(("g1", "out"), ("g2", "in"));
    let mut units: Vec<&mut dyn SimUnit> = vec![&mut src, &mut g1, &mut g2];
    let run = run_lockstep(&mut units, &w, dt, 0.04).unwrap();
    let s = run.trace("src").unwrap().channel("out").unwrap();
    let a = run.trace("g1").unwrap().channel("out").unwrap();
    let b = run.trace("g2").unwrap().channel("out").unwrap();
    assert_eq!(a.len(), 400);
    assert_eq!(a, s);
    assert_eq!(b[0], 0.0);
    assert_eq!(&b[1..], &a[..a.len() - 1]);
}

#[test]
fn no_units_no_result() {
    let mut units: Vec<&mut dyn SimUnit> = Vec::new();
    let run = run_lockstep(&mut units, &Wiring::new(), 1e-3, 1.0).unwrap();
    assert!(run.traces.is_empty());
    assert!(run.log.entries.is_empty());
}

#[test]
fn mismatched_step_is_refused() {
    let mut src = SineSourceUnit::new("src", 1.0, 50.0, 1e-4).unwrap();
    let mut slow = GainUnit::new("slow", 1.0, 2e-4).unwrap();
    let w = Wiring::new().link(("src", "out"), ("slow", "in"));
    let mut units: Vec<&mut dyn SimUnit> = vec![&mut src, &mut slow];
    match run_lockstep(&mut units, &w, 1e-4, 0.01) {
        Err(CosimError::Refused { unit, .. }) => assert_eq!(unit, "slow"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn loop_unit_with_constant_load_matches_monolithic() {
    let lp = lagged_loop();
    let mut with_d = lp.description().clone();
    with_d.disturbance = Some(Disturbance::Constant { value_v: 0.75 });
    let mono = run_time_domain(&PhilLoop::new(with_d).unwrap(), DT, 0.2).unwrap();

    let mut phil = PhilLoopUnit::new("phil", &lp, DT).unwrap();
    let mut load = ConstantUnit::new("load", 0.75);
    let w = Wiring::new().link(("load", "out"), ("phil", "extra_v"));
    let mut units: Vec<&mut dyn SimUnit> = vec![&mut phil, &mut load];
    let run = run_lockstep(&mut units, &w, DT, 0.2).unwrap();
    assert_traces_close(run.trace("phil").unwrap(), &mono, 1e-9);
}

#[test]
fn split_lockstep_matches_monolithic() {
    let lp = lagged_loop();
    let mono = run_time_domain(&lp, DT, 0.2).unwrap();
    let (mut sim, mut hw) = split(&lp);
    let mut units: Vec<&mut dyn SimUnit> = vec![&mut sim, &mut hw];
    let run = run_lockstep(&mut units, &split_wiring(), DT, 0.2).unwrap();
    let got = merged(&run);
    assert_traces_close(&got, &mono, 1e-9);
    assert_eq!(got, mono);
}

#[test]
fn zero_delay_boundary_adds_one_step() {
    let mut d = desc(0.6, 1.0, 1e-3, 0.0);
    d.amplifier.bandwidth_hz = 5000.0;
    let lp = PhilLoop::new(d.clone()).unwrap();
    d.sensor_delay_s = DT;
    let shifted = run_time_domain(&PhilLoop::new(d).unwrap(), DT, 0.2).unwrap();
    let plain = run_time_domain(&lp, DT, 0.2).unwrap();

    let (mut sim, mut hw) = split(&lp);
    let mut units: Vec<&mut dyn SimUnit> = vec![&mut sim, &mut hw];
    let got = merged(&run_lockstep(&mut units, &split_wiring(), DT, 0.2).unwrap());
    assert_traces_close(&got, &shifted, 1e-9);
    assert!(rms_diff(got.channel(channel::V_CMD).unwrap(), plain.channel(channel::V_CMD).unwrap()) > 1e-3);
}

#[test]
fn conservative_split_matches_monolithic() {
    let lp = lagged_loop();
    let mono = run_time_domain(&lp, DT, 0.2).unwrap();
    let (mut sim, mut hw) = split(&lp);
    let mut units: Vec<&mut dyn SimUnit> = vec![&mut sim, &mut hw];
    let run = run_conservative(&mut units, &split_wiring(), 0.2).unwrap();
    assert_eq!(merged(&run), mono);
    assert!(run.stats.causality_checks > 0);
}

#[test]
fn zero_lag_hub_is_lockstep() {
    let lp = lagged_loop();
    let (mut a1, mut a2) = split(&lp);
    let (mut b1, mut b2) = split(&lp);
    let mut ua: Vec<&mut dyn SimUnit> = vec![&mut a1, &mut a2];
    let mut ub: Vec<&mut dyn SimUnit> = vec![&mut b1, &mut b2];
    let lock = run_lockstep(&mut ua, &split_wiring(), DT, 0.1).unwrap();
    let hub = run_hub(&mut ub, &split_wiring(), &[0, 0], DT, 0.1).unwrap();
    assert_eq!(lock.traces, hub.traces);
    assert_eq!(hub.skew.unwrap().max_s(), 0.0);
}

fn hub_run(lp: &PhilLoop, lag: usize) -> philsim_core::cosim::CosimRun {
    let (mut sim, mut hw) = split(lp);
    let mut units: Vec<&mut dyn SimUnit> = vec![&mut sim, &mut hw];
    run_hub(&mut units, &split_wiring(), &[0, lag], DT, 0.4).unwrap()
}

#[test]
fn hub_lag_shows_up_as_skew_and_phase_error() {
    let lp = pure_delay_loop(1e-3, 2e-4);
    let base = merged(&hub_run(&lp, 0));
    let mut last_rms = 0.0;
    for lag in [0usize, 2, 5] {
        let run = hub_run(&lp, lag);
        let skew = run.skew.as_ref().unwrap();
        assert!((skew.max_s() - lag as f64 * DT).abs() < 1e-15);
        let tr = merged(&run);
        let fb = tr.channel(channel::I_FB).unwrap();
        let fb0 = base.channel(channel::I_FB).unwrap();
        for h in [1u32, 5, 7] {
            let f = h as f64 * F0;
            let (_, p) = tone(fb, DT, f, 5);
            let (_, p0) = tone(fb0, DT, f, 5);
            let err = angle_deg(p0, p);
            assert!((err - 360.0 * f * lag as f64 * DT).abs() < 0.1, "lag {lag} h{h}: {err}");
        }
        let rms = rms_diff(fb, fb0);
        assert!(rms >= last_rms);
        last_rms = rms;
    }
}

#[test]
fn first_grant_is_peer_lookahead() {
    let dt = 1e-4;
    let mut a = GainUnit::new("a", 0.5, dt).unwrap().with_latency_steps(10);
    let mut b = GainUnit::new("b", 0.5, dt).unwrap().with_latency_steps(10);
    let w = Wiring::new().link(("a", "out"), ("b", "in")).link(("b", "out"), ("a", "in"));
    let mut units: Vec<&mut dyn SimUnit> = vec![&mut a, &mut b];
    let run = run_conservative(&mut units, &w, 0.005).unwrap();
    let first: Vec<String> = run.log.entries[..2].iter().map(|e| e.to_string()).collect();
    assert_eq!(
        first,
        [
            "0.000000000000\ta\tgrant to=0.001000000000 emitted=10",
            "0.000000000000\tb\tgrant to=0.001000000000 emitted=10",
        ]
    );
    assert_eq!(run.stats.grants, vec![5, 5]);
}

#[test]
fn slow_peer_bounds_grants() {
    let dt = 1e-4;
    let end = 0.1;
    let mut a = GainUnit::new("a", 0.5, dt).unwrap().with_latency_steps(10);
    let mut b = GainUnit::new("b", 0.5, dt).unwrap().with_latency_steps(100);
    let w = Wiring::new().link(("a", "out"), ("b", "in")).link(("b", "out"), ("a", "in"));
    let mut units: Vec<&mut dyn SimUnit> = vec![&mut a, &mut b];
    let run = run_conservative(&mut units, &w, end).unwrap();

    // replay of the min-peer-horizon rule on plain integers (units of 0.1 ms)
    let (la, lb, e) = (10u64, 100u64, 1000u64);
    let (mut ca, mut cb) = (0u64, 0u64);
    let mut want_a = Vec::new();
    while ca < e || cb < e {
        let ga = (cb + lb).min(e);
        let gb = (ca + la).min(e);
        if ga > ca {
            want_a.push(ga);
            ca = ga;
        }
        if gb > cb {
            cb = gb;
        }
    }
    let got_a: Vec<u64> = run
        .log
        .entries
        .iter()
        .filter(|x| x.unit == "a")
        .map(|x| {
            let to = x.action.split("to=").nth(1).unwrap().split(' ').next().unwrap();
            (to.parse::<f64>().unwrap() * 1e4).round() as u64
        })
        .collect();
    assert_eq!(got_a, want_a);
    assert_eq!(run.stats.grants[0] as usize, want_a.len());
}

#[test]
fn zero_lookahead_cycle_deadlocks() {
    let dt = 1e-4;
    let mut a = GainUnit::new("a", 0.5, dt).unwrap();
    let mut b = GainUnit::new("b", 0.5, dt).unwrap();
    let mut c = ConstantUnit::new("c", 1.0);
    let mut s = GainUnit::new("s", 1.0, dt).unwrap();
    let w = Wiring::new()
        .link(("a", "out"), ("b", "in"))
        .link(("b", "out"), ("a", "in"))
        .link(("c", "out"), ("s", "in"));
    let mut units: Vec<&mut dyn SimUnit> = vec![&mut c, &mut s, &mut a, &mut b];
    match run_conservative(&mut units, &w, 0.01) {
        Err(CosimError::Deadlock { cycle }) => {
            let mut sorted = cycle.clone();
            sorted.sort();
            assert_eq!(sorted, ["a", "b"]);
        }
        other => panic!("unexpected {other:?}"),
    }
}

fn three_unit_run(
    seed: u64,
    poll: Option<&[usize]>,
) -> Result<philsim_core::cosim::CosimRun, CosimError> {
    let lp = lagged_loop();
    let (mut sim, mut hw) = split(&lp);
    let mut net = make_netem_unit(
        "net",
        NetworkSpec {
            base_latency_s: 2e-3,
            jitter_s: 5e-4,
            loss_probability: 0.1,
            seed,
        },
    )
    .unwrap();
    let w = Wiring::new()
        .link(("sim", "v_cmd"), ("hw", "v_cmd"))
        .link(("hw", "i_hut"), ("net", "in"))
        .link(("net", "out"), ("sim", "i_meas"));
    let mut units: Vec<&mut dyn SimUnit> = vec![&mut sim, &mut hw, &mut net];
    run_conservative_ordered(&mut units, &w, 0.1, poll)
}

#[test]
fn polling_order_does_not_matter() {
    let base = three_unit_run(5, None).unwrap();
    let text = base.log.to_string();
    let mut rng = SplitMix64::new(2024);
    for _ in 0..10 {
        let mut p = vec![0usize, 1, 2];
        for i in (1..p.len()).rev() {
            let j = (rng.next_u64() % (i as u64 + 1)) as usize;
            p.swap(i, j);
        }
        let run = three_unit_run(5, Some(&p)).unwrap();
        assert_eq!(run.traces, base.traces);
        assert_eq!(run.log.to_string(), text);
    }
}

#[test]
fn no_causality_violations_across_seeds() {
    for seed in 0..20 {
        let run = three_unit_run(seed, None).unwrap();
        assert!(run.stats.causality_checks > 1000);
    }
}

#[test]
fn repeated_runs_are_identical() {
    let a = three_unit_run(9, None).unwrap();
    let b = three_unit_run(9, None).unwrap();
    assert_eq!(a, b);
    let c = three_unit_run(10, None).unwrap();
    assert_ne!(a.traces, c.traces);
}

#[test]
fn wiring_is_validated() {
    let lp = lagged_loop();
    let (mut sim, mut hw) = split(&lp);
    let mut units: Vec<&mut dyn SimUnit> = vec![&mut sim, &mut hw];
    let half = Wiring::new().link(("sim", "v_cmd"), ("hw", "v_cmd"));
    assert!(matches!(
        run_lockstep(&mut units, &half, DT, 0.01),
        Err(CosimError::InputWiring { count: 0, .. })
    ));
    let typo = split_wiring().link(("sim", "v_cmdd"), ("hw", "v_cmd"));
    assert!(matches!(
        run_lockstep(&mut units, &typo, DT, 0.01),
        Err(CosimError::UnknownPort { .. })
    ));
    let twice = split_wiring().link(("sim", "v_cmd"), ("hw", "v_cmd"));
    assert!(matches!(
        run_lockstep(&mut units, &twice, DT, 0.01),
        Err(CosimError::InputWiring { count: 2, .. })
    ));
    let mut c1 = ConstantUnit::new("same", 1.0);
    let mut c2 = ConstantUnit::new("same", 2.0);
    let mut dup: Vec<&mut dyn SimUnit> = vec![&mut c1, &mut c2];
    assert!(matches!(
        run_lockstep(&mut dup, &Wiring::new(), DT, 0.01),
        Err(CosimError::DuplicateUnit(_))
    ));
}

#[test]
fn queue_orders_by_time_then_source_then_seq() {
    let mut q = EventQueue::new();
    let ev = |t: u64, s: usize, n: u64| Event {
        time: SimTime::from_ticks(t),
        source: s,
        seq: n,
        payload: (t, s, n),
    };
    for e in [ev(2, 1, 0), ev(2, 0, 3), ev(1, 5, 0), ev(2, 0, 1)] {
        q.push(e);
    }
    let order: Vec<_> = std::iter::from_fn(|| q.pop()).map(|e| e.payload).collect();
    assert_eq!(order, [(1, 5, 0), (2, 0, 1), (2, 0, 3), (2, 1, 0)]);
}
