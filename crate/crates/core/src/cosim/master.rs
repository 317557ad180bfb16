use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::queue::{Event, EventQueue};
use super::unit::{Emission, SimUnit, UnitError};
use super::SimTime;
use crate::bench::Trace;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CosimError {
    #[error("duplicate unit identity {0:?}")]
    DuplicateUnit(String),
    #[error("unknown unit {0:?}")]
    UnknownUnit(String),
    #[error("unit {unit:?} has no port {port:?}")]
    UnknownPort { unit: String, port: String },
    #[error("input {unit}.{port} is driven by {count} outputs, expected exactly one")]
    InputWiring {
        unit: String,
        port: String,
        count: usize,
    },
    #[error("invalid master parameter: {0}")]
    Config(String),
    #[error("unit {unit:?} refused the granted step: {reason}")]
    Refused { unit: String, reason: String },
    #[error("unit {unit:?} failed: {source}")]
    Unit { unit: String, source: UnitError },
    #[error("zero-lookahead deadlock in cycle {}", .cycle.join(" -> "))]
    Deadlock { cycle: Vec<String> },
    #[error("causality violation: {unit}.{port} committed at {committed} received event at {time}")]
    Causality {
        unit: String,
        port: String,
        time: SimTime,
        committed: SimTime,
    },
    #[error("unit {unit:?} emitted at {time}, earlier than its horizon {earliest}")]
    Lookahead {
        unit: String,
        time: SimTime,
        earliest: SimTime,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PortRef {
    pub unit: String,
    pub port: String,
}

impl PortRef {
    pub fn new(unit: impl Into<String>, port: impl Into<String>) -> Self {
        Self {
            unit: unit.into(),
            port: port.into(),
        }
    }
}

impl fmt::Display for PortRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.unit, self.port)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Link {
    pub from: PortRef,
    pub to: PortRef,
}

impl Link {
    /// Parses `"unit.port"` references.
    pub fn parse(from: &str, to: &str) -> Result<Self, CosimError> {
        fn split(s: &str) -> Result<PortRef, CosimError> {
            match s.split_once('.') {
                Some((u, p)) if !u.is_empty() && !p.is_empty() => Ok(PortRef::new(u, p)),
                _ => Err(CosimError::Config(format!(
                    "port reference {s:?} is not of the form unit.port"
                ))),
            }
        }
        Ok(Self {
            from: split(from)?,
            to: split(to)?,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Wiring {
    pub links: Vec<Link>,
}

impl Wiring {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn link(mut self, from: (&str, &str), to: (&str, &str)) -> Self {
        self.links.push(Link {
            from: PortRef::new(from.0, from.1),
            to: PortRef::new(to.0, to.1),
        });
        self
    }
}

/// Wiring resolved against a unit list.
struct Routes {
    // [unit][output port] -> (unit, input port)
    fanout: Vec<Vec<Vec<(usize, usize)>>>,
    // sorted unique source units per unit
    upstream: Vec<Vec<usize>>,
    // position of each unit in identity order
    rank: Vec<usize>,
    ids: Vec<String>,
}

impl Routes {
    fn resolve(units: &[&mut dyn SimUnit], wiring: &Wiring) -> Result<Self, CosimError> {
        let ids: Vec<String> = units.iter().map(|u| u.id().to_string()).collect();
        let mut order: Vec<usize> = (0..ids.len()).collect();
        order.sort_by(|&a, &b| ids[a].cmp(&ids[b]));
        for w in order.windows(2) {
            if ids[w[0]] == ids[w[1]] {
                return Err(CosimError::DuplicateUnit(ids[w[0]].clone()));
            }
        }
        let mut rank = vec![0; ids.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }
        let find = |p: &PortRef, output: bool| -> Result<(usize, usize), CosimError> {
            let u = ids
                .iter()
                .position(|id| *id == p.unit)
                .ok_or_else(|| CosimError::UnknownUnit(p.unit.clone()))?;
            let ports = if output {
                units[u].outputs()
            } else {
                units[u].inputs()
            };
            let k = ports
                .iter()
                .position(|s| s.name == p.port)
                .ok_or_else(|| CosimError::UnknownPort {
                    unit: p.unit.clone(),
                    port: p.port.clone(),
                })?;
            Ok((u, k))
        };
        let mut fanout: Vec<Vec<Vec<(usize, usize)>>> = units
            .iter()
            .map(|u| vec![Vec::new(); u.outputs().len()])
            .collect();
        let mut drivers: Vec<Vec<usize>> = units.iter().map(|u| vec![0; u.inputs().len()]).collect();
        let mut upstream = vec![Vec::new(); units.len()];
        for l in &wiring.links {
            let (su, sp) = find(&l.from, true)?;
            let (tu, tp) = find(&l.to, false)?;
            fanout[su][sp].push((tu, tp));
            drivers[tu][tp] += 1;
            upstream[tu].push(su);
        }
        for (u, counts) in drivers.iter().enumerate() {
            for (p, &count) in counts.iter().enumerate() {
                if count != 1 {
                    return Err(CosimError::InputWiring {
                        unit: ids[u].clone(),
                        port: units[u].inputs()[p].name.to_string(),
                        count,
                    });
                }
            }
        }
        for up in &mut upstream {
            up.sort_unstable();
            up.dedup();
        }
        Ok(Self {
            fanout,
            upstream,
            rank,
            ids,
        })
    }
}

/// One line of the master log: `<time>\t<unit>\t<action>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogEntry {
    pub time: SimTime,
    pub unit: String,
    pub action: String,
}

impl LogEntry {
    pub fn new(time: SimTime, unit: impl Into<String>, action: impl Into<String>) -> Self {
        Self {
            time,
            unit: unit.into(),
            action: action.into(),
        }
    }
}

impl fmt::Display for LogEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}", self.time, self.unit, self.action)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MasterLog {
    pub entries: Vec<LogEntry>,
}

impl fmt::Display for MasterLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(f, "{e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunStats {
    /// Exchange steps (stepped masters) or grant rounds (conservative).
    pub rounds: u64,
    /// Advances per unit, in unit order.
    pub grants: Vec<u64>,
    pub deliveries: u64,
    /// Deliveries checked against the receiver's committed time.
    pub causality_checks: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitSkew {
    pub unit: String,
    /// Largest delay of a routed value beyond its lockstep exchange, seconds.
    pub max_s: f64,
    pub mean_s: f64,
    pub routed: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SkewReport {
    pub units: Vec<UnitSkew>,
}

impl SkewReport {
    pub fn max_s(&self) -> f64 {
        self.units.iter().map(|u| u.max_s).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CosimRun {
    /// Unit identities and traces, in unit order.
    pub traces: Vec<(String, Option<Trace>)>,
    pub log: MasterLog,
    pub stats: RunStats,
    pub skew: Option<SkewReport>,
}

impl CosimRun {
    fn empty() -> Self {
        Self {
            traces: Vec::new(),
            log: MasterLog::default(),
            stats: RunStats::default(),
            skew: None,
        }
    }

    pub fn trace(&self, unit: &str) -> Option<&Trace> {
        self.traces
            .iter()
            .find(|(id, _)| id == unit)
            .and_then(|(_, t)| t.as_ref())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MasterMode {
    Lockstep { dt_s: f64 },
    /// Lags in exchange steps, in unit order.
    Hub { dt_s: f64, lags: Vec<usize> },
    Conservative { poll_order: Option<Vec<usize>> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterConfig {
    pub mode: MasterMode,
    pub end_time_s: f64,
    pub wiring: Wiring,
}

pub fn run_master(
    config: &MasterConfig,
    units: &mut [&mut dyn SimUnit],
) -> Result<CosimRun, CosimError> {
    let (w, end) = (&config.wiring, config.end_time_s);
    match &config.mode {
        MasterMode::Lockstep { dt_s } => run_lockstep(units, w, *dt_s, end),
        MasterMode::Hub { dt_s, lags } => run_hub(units, w, lags, *dt_s, end),
        MasterMode::Conservative { poll_order } => {
            run_conservative_ordered(units, w, end, poll_order.as_deref())
        }
    }
}

fn to_time(s: f64, what: &str) -> Result<SimTime, CosimError> {
    SimTime::from_secs(s).ok_or_else(|| CosimError::Config(format!("invalid {what} {s}")))
}

fn unit_error(units: &[&mut dyn SimUnit], i: usize, e: UnitError) -> CosimError {
    CosimError::Unit {
        unit: units[i].id().to_string(),
        source: e,
    }
}

fn collect_traces(units: &[&mut dyn SimUnit]) -> Vec<(String, Option<Trace>)> {
    units.iter().map(|u| (u.id().to_string(), u.trace())).collect()
}

struct Pending {
    // exchange index at which lockstep would route the value
    lockstep_at: u64,
    ready_at: u64,
    source: usize,
    seq: u64,
    emission: Emission,
}

/// Fixed-step master: at step `k` every pending output valid at `k*dt` is
/// routed, then every unit advances to `(k+1)*dt`.
pub fn run_lockstep(
    units: &mut [&mut dyn SimUnit],
    wiring: &Wiring,
    dt_s: f64,
    end_time_s: f64,
) -> Result<CosimRun, CosimError> {
    let lags = vec![0; units.len()];
    run_stepped(units, wiring, &lags, dt_s, end_time_s, false)
}

/// Message hub: like lockstep, but outputs of unit `i` reach the hub
/// `lags[i]` exchange steps late.
pub fn run_hub(
    units: &mut [&mut dyn SimUnit],
    wiring: &Wiring,
    lags: &[usize],
    dt_s: f64,
    end_time_s: f64,
) -> Result<CosimRun, CosimError> {
    if lags.len() != units.len() {
        return Err(CosimError::Config(format!(
            "{} lags given for {} units",
            lags.len(),
            units.len()
        )));
    }
    run_stepped(units, wiring, lags, dt_s, end_time_s, true)
}

fn run_stepped(
    units: &mut [&mut dyn SimUnit],
    wiring: &Wiring,
    lags: &[usize],
    dt_s: f64,
    end_time_s: f64,
    hub: bool,
) -> Result<CosimRun, CosimError> {
    if units.is_empty() {
        return Ok(CosimRun::empty());
    }
    let routes = Routes::resolve(units, wiring)?;
    let dt = to_time(dt_s, "step").and_then(|d| {
        if d.ticks() == 0 {
            Err(CosimError::Config(format!("invalid step {dt_s}")))
        } else {
            Ok(d)
        }
    })?;
    let end = to_time(end_time_s, "end time")?;
    for u in units.iter() {
        if let Some(s) = u.step_size() {
            if s != dt {
                return Err(CosimError::Refused {
                    unit: u.id().to_string(),
                    reason: format!("unit step {s} differs from master step {dt}"),
                });
            }
        }
    }

    let n = units.len();
    let mut seq = vec![0u64; n];
    let mut pending: Vec<Pending> = Vec::new();
    let mut stats = RunStats {
        grants: vec![0; n],
        ..RunStats::default()
    };
    let mut skew_sum = vec![(0u64, 0u64, 0u64); n]; // (max ticks, total ticks, count)
    let mut log = MasterLog::default();
    let mut buf = Vec::new();

    let enqueue = |pending: &mut Vec<Pending>, seq: &mut [u64], i: usize, e: Emission, first: u64| {
        let lockstep_at = first.max(e.time.div_ceil(dt));
        pending.push(Pending {
            lockstep_at,
            ready_at: lockstep_at + lags[i] as u64,
            source: i,
            seq: seq[i],
            emission: e,
        });
        seq[i] += 1;
    };

    for i in 0..n {
        for e in units[i].initial_outputs() {
            enqueue(&mut pending, &mut seq, i, e, 0);
        }
    }

    let steps = end.div_ceil(dt);
    let action = if hub { "route" } else { "exchange" };
    for k in 0..steps {
        let now = dt.mul(k);
        let mut ready: Vec<Pending> = Vec::new();
        let mut j = 0;
        while j < pending.len() {
            if pending[j].ready_at <= k {
                ready.push(pending.swap_remove(j));
            } else {
                j += 1;
            }
        }
        ready.sort_by_key(|p| (p.emission.time, routes.rank[p.source], p.seq));
        let mut delivered = 0u64;
        for p in &ready {
            for &(tu, tp) in &routes.fanout[p.source][p.emission.port] {
                units[tu].receive(tp, p.emission.time, p.emission.value);
                delivered += 1;
            }
            let extra = dt.mul(k - p.lockstep_at).ticks();
            let s = &mut skew_sum[p.source];
            s.0 = s.0.max(extra);
            s.1 += extra;
            s.2 += 1;
        }
        stats.deliveries += delivered;
        log.entries
            .push(LogEntry::new(now, "*", format!("{action} delivered={delivered}")));

        let to = dt.mul(k + 1);
        for i in 0..n {
            buf.clear();
            units[i]
                .advance(to, &mut buf)
                .map_err(|e| unit_error(units, i, e))?;
            stats.grants[i] += 1;
            for &e in &buf {
                enqueue(&mut pending, &mut seq, i, e, k + 1);
            }
            units[i].drain_log(&mut log.entries);
        }
        stats.rounds += 1;
    }

    let skew = hub.then(|| SkewReport {
        units: (0..n)
            .map(|i| {
                let (max, total, count) = skew_sum[i];
                UnitSkew {
                    unit: routes.ids[i].clone(),
                    max_s: SimTime::from_ticks(max).as_secs(),
                    mean_s: if count == 0 {
                        0.0
                    } else {
                        SimTime::from_ticks(total).as_secs() / count as f64
                    },
                    routed: count,
                }
            })
            .collect(),
    });
    Ok(CosimRun {
        traces: collect_traces(units),
        log,
        stats,
        skew,
    })
}

/// Conservative master polling units in their given order.
pub fn run_conservative(
    units: &mut [&mut dyn SimUnit],
    wiring: &Wiring,
    end_time_s: f64,
) -> Result<CosimRun, CosimError> {
    run_conservative_ordered(units, wiring, end_time_s, None)
}

/// Conservative master: each round grants every unit the earliest time at
/// which an upstream peer could still affect it (peer committed time plus
/// peer lookahead), advances the units in `poll_order`, then delivers the
/// emitted events in [`EventQueue`] order. Units only interact at round
/// boundaries, so the result does not depend on the polling order.
pub fn run_conservative_ordered(
    units: &mut [&mut dyn SimUnit],
    wiring: &Wiring,
    end_time_s: f64,
    poll_order: Option<&[usize]>,
) -> Result<CosimRun, CosimError> {
    if units.is_empty() {
        return Ok(CosimRun::empty());
    }
    let routes = Routes::resolve(units, wiring)?;
    let end = to_time(end_time_s, "end time")?;
    let n = units.len();
    let poll: Vec<usize> = match poll_order {
        Some(p) => {
            let mut sorted = p.to_vec();
            sorted.sort_unstable();
            if sorted != (0..n).collect::<Vec<_>>() {
                return Err(CosimError::Config(
                    "poll order is not a permutation of the units".into(),
                ));
            }
            p.to_vec()
        }
        None => (0..n).collect(),
    };
    let mut by_rank: Vec<usize> = (0..n).collect();
    by_rank.sort_by_key(|&i| routes.rank[i]);

    let lookahead: Vec<SimTime> = units.iter().map(|u| u.lookahead()).collect();
    let mut committed: Vec<SimTime> = units.iter().map(|u| u.committed()).collect();
    let mut seq = vec![0u64; n];
    let mut queue: EventQueue<Emission> = EventQueue::new();
    let mut stats = RunStats {
        grants: vec![0; n],
        ..RunStats::default()
    };
    let mut log = MasterLog::default();

    for i in 0..n {
        for e in units[i].initial_outputs() {
            queue.push(Event {
                time: e.time,
                source: routes.rank[i],
                seq: seq[i],
                payload: e,
            });
            seq[i] += 1;
        }
    }
    let source_of = |rank: usize| by_rank[rank];
    deliver(units, &routes, &mut queue, &committed, &mut stats, &source_of)?;

    let mut emitted: Vec<Vec<Emission>> = vec![Vec::new(); n];
    let mut unit_logs: Vec<Vec<LogEntry>> = vec![Vec::new(); n];
    while committed.iter().any(|&c| c < end) {
        let grants: Vec<SimTime> = (0..n)
            .map(|i| {
                routes.upstream[i]
                    .iter()
                    .map(|&p| committed[p].saturating_add(lookahead[p]))
                    .fold(end, SimTime::min)
            })
            .collect();
        if (0..n).all(|i| grants[i] <= committed[i]) {
            return Err(deadlock(&routes, &committed, &lookahead, &grants, end));
        }
        stats.rounds += 1;
        for &i in &poll {
            if grants[i] <= committed[i] {
                continue;
            }
            emitted[i].clear();
            units[i]
                .advance(grants[i], &mut emitted[i])
                .map_err(|e| unit_error(units, i, e))?;
            units[i].drain_log(&mut unit_logs[i]);
        }
        for &i in &by_rank {
            if grants[i] <= committed[i] {
                continue;
            }
            let earliest = committed[i].saturating_add(lookahead[i]);
            if let Some(e) = emitted[i].iter().find(|e| e.time < earliest) {
                return Err(CosimError::Lookahead {
                    unit: routes.ids[i].clone(),
                    time: e.time,
                    earliest,
                });
            }
            if units[i].committed() != grants[i] {
                return Err(CosimError::Refused {
                    unit: routes.ids[i].clone(),
                    reason: format!(
                        "granted {} but committed {}",
                        grants[i],
                        units[i].committed()
                    ),
                });
            }
            log.entries.push(LogEntry::new(
                committed[i],
                routes.ids[i].clone(),
                format!("grant to={} emitted={}", grants[i], emitted[i].len()),
            ));
            log.entries.append(&mut unit_logs[i]);
            stats.grants[i] += 1;
            committed[i] = grants[i];
            for &e in &emitted[i] {
                queue.push(Event {
                    time: e.time,
                    source: routes.rank[i],
                    seq: seq[i],
                    payload: e,
                });
                seq[i] += 1;
            }
        }
        deliver(units, &routes, &mut queue, &committed, &mut stats, &source_of)?;
    }
    Ok(CosimRun {
        traces: collect_traces(units),
        log,
        stats,
        skew: None,
    })
}

fn deliver(
    units: &mut [&mut dyn SimUnit],
    routes: &Routes,
    queue: &mut EventQueue<Emission>,
    committed: &[SimTime],
    stats: &mut RunStats,
    source_of: &dyn Fn(usize) -> usize,
) -> Result<(), CosimError> {
    while let Some(ev) = queue.pop() {
        let src = source_of(ev.source);
        for &(tu, tp) in &routes.fanout[src][ev.payload.port] {
            stats.causality_checks += 1;
            if ev.time < committed[tu] {
                return Err(CosimError::Causality {
                    unit: routes.ids[tu].clone(),
                    port: units[tu].inputs()[tp].name.to_string(),
                    time: ev.time,
                    committed: committed[tu],
                });
            }
            units[tu].receive(tp, ev.time, ev.payload.value);
            stats.deliveries += 1;
        }
    }
    Ok(())
}

/// Follows the binding upstream constraint from the first blocked unit until
/// a unit repeats.
fn deadlock(
    routes: &Routes,
    committed: &[SimTime],
    lookahead: &[SimTime],
    grants: &[SimTime],
    end: SimTime,
) -> CosimError {
    let blocked = |i: usize| committed[i] < end && grants[i] <= committed[i];
    let start = (0..committed.len())
        .filter(|&i| blocked(i))
        .min_by_key(|&i| routes.rank[i])
        .unwrap_or(0);
    let mut path = vec![start];
    let mut cur = start;
    loop {
        let next = routes.upstream[cur]
            .iter()
            .copied()
            .min_by_key(|&p| (committed[p].saturating_add(lookahead[p]), routes.rank[p]));
        let Some(next) = next else { break };
        if let Some(pos) = path.iter().position(|&p| p == next) {
            path.drain(..pos);
            break;
        }
        path.push(next);
        cur = next;
    }
    // report the cycle in signal-flow order
    path.reverse();
    CosimError::Deadlock {
        cycle: path.into_iter().map(|i| routes.ids[i].clone()).collect(),
    }
}
