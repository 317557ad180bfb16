//! The four run modes. Each returns its artifacts in memory; writing them is
//! left to the caller.

use std::fmt::Write as _;

use philsim_core::bench::{
    accuracy_metrics, channel, reference_direct, run_time_domain, BenchError, PhilLoop, Trace,
};
use philsim_core::compensation::CompensationError;
use philsim_core::cosim::{
    merge_split_traces, run_master, ConstantUnit, CosimError, CosimRun, GainUnit, HardwareUnit,
    MasterConfig, MasterMode, PhilLoopUnit, SimUnit, SimulatorUnit, SineSourceUnit, UnitError,
    Wiring,
};
use philsim_core::netem::{make_netem_unit, NetemError};
use philsim_core::stability::{classify, map_cell, open_loop_response, default_grid, MapCell, StabilityError};
use rayon::prelude::*;

use crate::artifacts::{accuracy_rows, num, trace_csv, Artifact, ACCURACY_HEADER};
use crate::scenario::{MasterKind, Scenario, ScenarioError, UnitSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Analyze,
    Simulate,
    Sweep,
    Cosim,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Analyze => "analyze",
            Mode::Simulate => "simulate",
            Mode::Sweep => "sweep",
            Mode::Cosim => "cosim",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("scenario has no [{0}] section")]
    MissingSection(&'static str),
    #[error(transparent)]
    Compensation(#[from] CompensationError),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error(transparent)]
    Cosim(#[from] CosimError),
    #[error(transparent)]
    Unit(#[from] UnitError),
    #[error(transparent)]
    Netem(#[from] NetemError),
}

impl RunError {
    /// Stable identifier for the error line.
    pub fn code(&self) -> &'static str {
        match self {
            RunError::Scenario(ScenarioError::Syntax { .. }) => "scenario_syntax",
            RunError::Scenario(ScenarioError::Invalid(_)) => "scenario_invalid",
            RunError::MissingSection(_) => "missing_section",
            RunError::Compensation(_) => "compensation",
            RunError::Bench(_) => "bench",
            RunError::Stability(_) => "stability",
            RunError::Cosim(CosimError::Deadlock { .. }) => "deadlock",
            RunError::Cosim(CosimError::Causality { .. }) => "causality",
            RunError::Cosim(_) | RunError::Unit(_) => "cosim",
            RunError::Netem(_) => "netem",
        }
    }
}

pub fn run(mode: Mode, scenario: &Scenario) -> Result<Vec<Artifact>, RunError> {
    match mode {
        Mode::Analyze => analyze(scenario),
        Mode::Simulate => simulate(scenario),
        Mode::Sweep => sweep(scenario),
        Mode::Cosim => cosim(scenario),
    }
}

pub const VERDICT_HEADER: &str =
    "classification,worst_magnitude,gain_margin_db,epsilon,threshold,crossover_count,first_crossover_hz";

/// `verdict.csv` and `frequency_response.csv`.
pub fn analyze(sc: &Scenario) -> Result<Vec<Artifact>, RunError> {
    let lp = sc.phil_loop()?;
    let v = classify(&lp, sc.margin())?;
    let first = v
        .phase_crossovers
        .first()
        .map_or(String::new(), |w| num(w / std::f64::consts::TAU));
    let verdict = format!(
        "{VERDICT_HEADER}\n{},{},{},{},{},{},{first}\n",
        v.classification,
        num(v.worst_magnitude),
        num(v.gain_margin_db),
        num(v.epsilon_used),
        num(v.threshold),
        v.phase_crossovers.len(),
    );

    let grid = default_grid(lp.total_delay_s());
    let mut fr = String::from("omega_rad_s,frequency_hz,magnitude,magnitude_db,phase_rad\n");
    for p in open_loop_response(&lp, &grid)? {
        writeln!(
            fr,
            "{},{},{},{},{}",
            num(p.omega_rad_s),
            num(p.omega_rad_s / std::f64::consts::TAU),
            num(p.magnitude),
            num(20.0 * p.magnitude.log10()),
            num(p.phase_rad)
        )
        .unwrap();
    }
    Ok(vec![
        Artifact::new("verdict.csv", verdict),
        Artifact::new("frequency_response.csv", fr),
    ])
}

/// `trace.csv` and `accuracy.csv`. Divergence is a result, not an error.
/// The fed-back current is scored against the reference HUT current.
pub fn simulate(sc: &Scenario) -> Result<Vec<Artifact>, RunError> {
    let lp = sc.phil_loop()?;
    let trace = run_time_domain(&lp, sc.run.dt_s, sc.run.duration_s)?;
    let reference = reference_direct(&lp, sc.run.dt_s, sc.run.duration_s)?;
    let accuracy = accuracy_csv(
        &lp,
        &trace,
        &reference,
        &[
            (channel::V_PCC, channel::V_PCC),
            (channel::I_HUT, channel::I_HUT),
            (channel::I_FB, channel::I_HUT),
        ],
    );
    Ok(vec![
        Artifact::new("trace.csv", trace_csv(&trace)),
        Artifact::new("accuracy.csv", accuracy),
    ])
}

/// Accuracy of `trace` channels against `reference` channels, paired as
/// `(trace channel, reference channel)`.
fn accuracy_csv(lp: &PhilLoop, trace: &Trace, reference: &Trace, pairs: &[(&str, &str)]) -> String {
    let mut out = String::new();
    if trace.diverged() {
        out.push_str("# unavailable: trace diverged\n");
    }
    out.push_str(ACCURACY_HEADER);
    out.push('\n');
    if trace.diverged() {
        return out;
    }
    let side = lp.simulated_side();
    for &(name, ref_name) in pairs {
        let Some(r) = reference.channel(ref_name) else {
            continue;
        };
        let renamed = Trace::from_channels(reference.dt_s(), vec![(name.to_string(), r.to_vec())]);
        match accuracy_metrics(trace, &renamed, name, side.f0_hz, &side.orders()) {
            Ok(report) => accuracy_rows(&mut out, name, &report),
            Err(e) => {
                out.insert_str(0, &format!("# unavailable for {name}: {e}\n"));
            }
        }
    }
    out
}

pub const MAP_HEADER: &str = "ratio,delay_s,classification,worst_magnitude,gain_margin_db";

/// Stability map cells, ratio outer, delay inner, evaluated in parallel.
pub fn sweep_cells(sc: &Scenario) -> Result<Vec<MapCell>, RunError> {
    let s = sc.sweep.as_ref().ok_or(RunError::MissingSection("sweep"))?;
    let base = sc.phil_loop()?;
    let margin = sc.margin();
    let delays = s.delay.values();
    let points: Vec<(f64, f64)> = s
        .ratio
        .values()
        .into_iter()
        .flat_map(|r| delays.iter().map(move |&d| (r, d)))
        .collect();
    Ok(points
        .par_iter()
        .map(|&(r, d)| map_cell(&base, r, d, margin))
        .collect())
}

/// `stability_map.csv`. A cell whose loop cannot be built is written as
/// `error` with NaN metrics.
pub fn sweep(sc: &Scenario) -> Result<Vec<Artifact>, RunError> {
    let mut out = String::from(MAP_HEADER);
    out.push('\n');
    for c in sweep_cells(sc)? {
        let (class, m, g) = match &c.verdict {
            Ok(v) => (v.classification.as_str(), v.worst_magnitude, v.gain_margin_db),
            Err(_) => ("error", f64::NAN, f64::NAN),
        };
        writeln!(out, "{},{},{class},{},{}", num(c.ratio), num(c.delay_s), num(m), num(g)).unwrap();
    }
    Ok(vec![Artifact::new("stability_map.csv", out)])
}

fn build_unit(sc: &Scenario, lp: &PhilLoop, spec: &UnitSpec) -> Result<Box<dyn SimUnit>, RunError> {
    let dt = sc.run.dt_s;
    let id = spec.id();
    Ok(match *spec {
        UnitSpec::Simulator { .. } => Box::new(SimulatorUnit::new(id, lp, dt)?),
        UnitSpec::Hardware { .. } => Box::new(HardwareUnit::new(id, lp, dt)?),
        UnitSpec::Loop { .. } => Box::new(PhilLoopUnit::new(id, lp, dt)?),
        UnitSpec::Netem { .. } => {
            let net = sc.network_spec(spec).expect("netem unit of this scenario");
            Box::new(make_netem_unit(id, net)?)
        }
        UnitSpec::Constant { value, .. } => Box::new(ConstantUnit::new(id, value)),
        UnitSpec::Gain {
            gain, latency_steps, ..
        } => Box::new(GainUnit::new(id, gain, dt)?.with_latency_steps(latency_steps)),
        UnitSpec::Sine {
            amplitude,
            frequency_hz,
            ..
        } => Box::new(SineSourceUnit::new(id, amplitude, frequency_hz, dt)?),
    })
}

/// Runs the scenario's co-simulation and returns the raw result.
pub fn cosim_run(sc: &Scenario) -> Result<CosimRun, RunError> {
    let c = sc.cosim.as_ref().ok_or(RunError::MissingSection("cosim"))?;
    let lp = sc.phil_loop()?;
    let mut units = c
        .units
        .iter()
        .map(|u| build_unit(sc, &lp, u))
        .collect::<Result<Vec<_>, _>>()?;
    let wiring = c.links.iter().fold(Wiring::new(), |w, (from, to)| {
        let (fu, fp) = from.split_once('.').expect("validated link");
        let (tu, tp) = to.split_once('.').expect("validated link");
        w.link((fu, fp), (tu, tp))
    });
    let index = |id: &str| c.units.iter().position(|u| u.id() == id).expect("validated id");
    let mode = match c.master {
        MasterKind::Lockstep => MasterMode::Lockstep { dt_s: sc.run.dt_s },
        MasterKind::Hub => MasterMode::Hub {
            dt_s: sc.run.dt_s,
            lags: c
                .units
                .iter()
                .map(|u| c.lags.get(u.id()).copied().unwrap_or(0))
                .collect(),
        },
        MasterKind::Conservative => MasterMode::Conservative {
            poll_order: c
                .poll_order
                .as_ref()
                .map(|o| o.iter().map(|id| index(id)).collect()),
        },
    };
    let config = MasterConfig {
        mode,
        end_time_s: c.end_s.unwrap_or(sc.run.duration_s),
        wiring,
    };
    let mut refs: Vec<&mut dyn SimUnit> = units.iter_mut().map(|u| u.as_mut() as &mut dyn SimUnit).collect();
    let run = run_master(&config, &mut refs)?;
    Ok(run)
}

/// Per-unit `trace_<id>.csv`, `master_log.txt`, `skew.csv` for the hub and,
/// when the loop is split into one simulator and one hardware unit, the
/// merged `trace_loop.csv` with `accuracy.csv`.
pub fn cosim(sc: &Scenario) -> Result<Vec<Artifact>, RunError> {
    let c = sc.cosim.as_ref().ok_or(RunError::MissingSection("cosim"))?;
    let run = cosim_run(sc)?;
    let mut out = Vec::new();
    for (id, trace) in &run.traces {
        if let Some(t) = trace {
            out.push(Artifact::new(format!("trace_{id}.csv"), trace_csv(t)));
        }
    }
    out.push(Artifact::new("master_log.txt", run.log.to_string()));
    if let Some(skew) = &run.skew {
        let mut s = String::from("unit,max_s,mean_s,routed\n");
        for u in &skew.units {
            writeln!(s, "{},{},{},{}", u.unit, num(u.max_s), num(u.mean_s), u.routed).unwrap();
        }
        out.push(Artifact::new("skew.csv", s));
    }

    let find = |pred: fn(&UnitSpec) -> bool| {
        let mut it = c.units.iter().filter(|u| pred(u));
        match (it.next(), it.next()) {
            (Some(u), None) => run.trace(u.id()),
            _ => None,
        }
    };
    let sim = find(|u| matches!(u, UnitSpec::Simulator { .. }));
    let hw = find(|u| matches!(u, UnitSpec::Hardware { .. }));
    if let Some(merged) = sim.zip(hw).and_then(|(s, h)| merge_split_traces(s, h)) {
        let lp = sc.phil_loop()?;
        let end = merged.len() as f64 * sc.run.dt_s;
        let reference = reference_direct(&lp, sc.run.dt_s, end)?;
        let accuracy = accuracy_csv(
            &lp,
            &merged,
            &reference,
            &[(channel::I_HUT, channel::I_HUT), (channel::I_FB, channel::I_HUT)],
        );
        out.push(Artifact::new("trace_loop.csv", trace_csv(&merged)));
        out.push(Artifact::new("accuracy.csv", accuracy));
    }
    Ok(out)
}
