use std::path::PathBuf;

use philsim::scenario::{DisturbanceSpec, MasterKind, UnitSpec};
use philsim::{Scenario, ScenarioError};
use philsim_core::bench::{Impedance, InterfaceAlgorithm};
use proptest::prelude::*;

fn golden(name: &str) -> String {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    std::fs::read_to_string(p).unwrap()
}

const MINIMAL: &str = r#"
[run]
dt = "10 us"
duration = "0.1 s"

[source]
f0 = "50 Hz"
harmonics = [{ order = 1, amplitude = "10 V" }]
impedance = { kind = "resistive", r = "1 ohm" }

[amplifier]
delay = "1 ms"

[hut]
kind = "resistive"
r = "2 ohm"
"#;

fn errors(text: &str) -> Vec<philsim::scenario::ValidationError> {
    match Scenario::parse(text) {
        Err(ScenarioError::Invalid(v)) => v,
        other => panic!("expected validation errors, got {other:?}"),
    }
}

#[test]
fn minimal_file_takes_documented_defaults() {
    let s = Scenario::parse(&golden("minimal_resistive.toml")).unwrap();
    assert_eq!(s.run.dt_s, 1e-5);
    assert_eq!(s.run.seed, 0);
    assert_eq!(s.interface, InterfaceAlgorithm::Itm);
    assert_eq!(s.amplifier.gain, 1.0);
    assert!(s.amplifier.bandwidth_hz.is_infinite());
    assert_eq!(s.amplifier.saturation_v, None);
    assert_eq!(s.sensor_delay_s, 0.0);
    assert_eq!(s.epsilon, 0.0);
    assert!(!s.compensation.phase_advance);
    assert_eq!(s.disturbance, None);
    assert_eq!(s.hut, Impedance::Resistive { r_ohm: 2.0 });
    assert_eq!(s.source.harmonics[0].amplitude_v, 325.0);
}

#[test]
fn golden_files_parse_and_round_trip() {
    for name in [
        "minimal_resistive.toml",
        "sweep_21x21.toml",
        "phase_advance.toml",
        "cosim_netem.toml",
        "cosim_hub.toml",
    ] {
        let s = Scenario::parse(&golden(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        let again = Scenario::parse(&s.to_toml()).unwrap();
        assert_eq!(again, s, "{name}");
    }
}

#[test]
fn readme_example_is_valid() {
    let readme = include_str!("../../../README.md");
    let start = readme.find("```toml\n").unwrap() + "```toml\n".len();
    let text = &readme[start..start + readme[start..].find("```").unwrap()];
    let s = Scenario::parse(text).unwrap_or_else(|e| panic!("{e}"));
    assert_eq!(s.cosim.unwrap().units.len(), 3);
    assert_eq!(s.sweep.unwrap().delay.values().len(), 50);
}

#[test]
fn unknown_key_is_fatal() {
    let text = MINIMAL.replace("delay = \"1 ms\"", "delay = \"1 ms\"\ndelya = 3");
    match Scenario::parse(&text) {
        Err(ScenarioError::Syntax { line, message }) => {
            assert!(message.contains("delya"), "{message}");
            assert_eq!(line, Some(13));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn non_integer_delay_is_reported() {
    let text = MINIMAL.replace("\"10 us\"", "\"0.3 ms\"");
    let e = errors(&text);
    assert_eq!(e.len(), 1);
    assert!(e[0].message.contains("delay/dt not integer"), "{}", e[0]);
    assert_eq!(e[0].path, "amplifier.delay");
    assert_eq!(e[0].line, Some(12));
}

#[test]
fn negative_epsilon_names_the_constraint() {
    let text = format!("{MINIMAL}\n[stability]\nepsilon = -0.1\n");
    let e = errors(&text);
    assert_eq!(e.len(), 1);
    assert!(e[0].message.contains("epsilon >= 0"), "{}", e[0]);
    assert_eq!(e[0].line, Some(19));
}

#[test]
fn unit_mismatch_is_named() {
    let text = MINIMAL.replace("delay = \"1 ms\"", "delay = \"1 kHz\"");
    let e = errors(&text);
    assert!(e[0].message.contains("expected a time"), "{}", e[0]);
    assert!(e[0].message.contains("frequency"), "{}", e[0]);
}

#[test]
fn all_semantic_errors_are_collected() {
    let text = MINIMAL
        .replace("\"10 us\"", "\"0.3 ms\"")
        .replace("r = \"2 ohm\"", "r = \"-2 ohm\"")
        .replace("f0 = \"50 Hz\"", "f0 = \"50 V\"");
    let e = errors(&text);
    let paths: Vec<&str> = e.iter().map(|x| x.path.as_str()).collect();
    assert_eq!(paths, ["source.f0", "amplifier.delay", "hut.r"]);
    assert!(e.iter().all(|x| x.line.is_some()));
}

#[test]
fn interface_parameters_are_checked() {
    let ff = format!("{MINIMAL}\n[interface]\nalgorithm = \"feedback_filter\"\ncutoff = \"1 kHz\"\n");
    assert_eq!(
        Scenario::parse(&ff).unwrap().interface,
        InterfaceAlgorithm::FeedbackFilter { cutoff_hz: 1000.0 }
    );
    let missing = format!("{MINIMAL}\n[interface]\nalgorithm = \"shifting_impedance\"\n");
    assert!(errors(&missing)[0].message.contains("z_shift_ohm"));
    let stray = format!("{MINIMAL}\n[interface]\nalgorithm = \"itm\"\ncutoff = \"1 kHz\"\n");
    assert_eq!(errors(&stray)[0].path, "interface.cutoff");
}

#[test]
fn cosim_wiring_is_checked() {
    let base = golden("cosim_netem.toml");
    let s = Scenario::parse(&base).unwrap();
    let c = s.cosim.as_ref().unwrap();
    assert_eq!(c.master, MasterKind::Conservative);
    assert_eq!(c.units.len(), 3);

    let typo = base.replace("to = \"hw.v_cmd\"", "to = \"hw.v_cmdd\"");
    let e = errors(&typo);
    assert_eq!(e.len(), 1);
    assert_eq!(e[0].path, "cosim.link[0].to");
    assert!(e[0].message.contains("no input port 'v_cmdd'"));

    let ghost = base.replace("from = \"net.out\"", "from = \"ghost.out\"");
    assert!(errors(&ghost)[0].message.contains("unknown unit 'ghost'"));

    let dup = base.replace("id = \"net\"", "id = \"hw\"");
    assert!(errors(&dup).iter().any(|e| e.message.contains("duplicate unit id")));

    let lags = base.replace("master = \"conservative\"", "master = \"conservative\"\nlags = { hw = 1 }");
    assert!(errors(&lags)[0].message.contains("hub master only"));
}

#[test]
fn derived_seeds_follow_the_master_seed() {
    let mut s = Scenario::parse(&golden("cosim_netem.toml")).unwrap();
    let net = s.cosim.as_ref().unwrap().units[2].clone();
    assert!(matches!(net, UnitSpec::Netem { seed: None, .. }));
    let a = s.network_spec(&net).unwrap().seed;
    assert_eq!(a, philsim_core::rng::SplitMix64::output_at(7, 1));
    s.run.seed = 8;
    assert_ne!(s.network_spec(&net).unwrap().seed, a);

    let noisy = format!("{MINIMAL}\n[disturbance]\nkind = \"white_noise\"\namplitude = \"1 V\"\n");
    let s = Scenario::parse(&noisy).unwrap();
    assert_eq!(s.disturbance, Some(DisturbanceSpec::WhiteNoise { amplitude_v: 1.0, seed: None }));
}

#[test]
fn large_seeds_survive_round_trip() {
    let text = MINIMAL.replace("duration = \"0.1 s\"", "duration = \"0.1 s\"\nseed = \"0xFFFFFFFFFFFFFFFF\"");
    let s = Scenario::parse(&text).unwrap();
    assert_eq!(s.run.seed, u64::MAX);
    assert_eq!(Scenario::parse(&s.to_toml()).unwrap(), s);
}

proptest! {
    #[test]
    fn round_trip_holds_for_arbitrary_values(
        rs in 1e-3f64..10.0,
        rh in 1e-3f64..10.0,
        amp in 1e-3f64..1e3,
        phase in -3.0f64..3.0,
        na in 0usize..200,
        ns in 0usize..200,
        eps in 0.0f64..2.0,
        bw in proptest::option::of(10.0f64..1e5),
        seed in any::<u64>(),
    ) {
        let dt = 1e-5;
        let bandwidth = bw.map_or(String::new(), |b| format!("bandwidth = {b:e}\n"));
        let text = format!(
            "[run]\ndt = {dt:e}\nduration = 0.1\nseed = \"{seed:#x}\"\n\
             [source]\nf0 = 50\nharmonics = [{{ order = 1, amplitude = {amp:e}, phase = {phase:e} }}]\n\
             impedance = {{ kind = \"parallel_rc\", r = {rs:e}, c = 1e-6 }}\n\
             [amplifier]\n{bandwidth}delay = {:e}\n\
             [sensor]\ndelay = {:e}\n\
             [hut]\nkind = \"series_rl\"\nr = {rh:e}\nl = 1e-3\n\
             [stability]\nepsilon = {eps:e}\n",
            na as f64 * dt,
            ns as f64 * dt,
        );
        let s = Scenario::parse(&text).unwrap();
        prop_assert_eq!(Scenario::parse(&s.to_toml()).unwrap(), s);
    }
}
