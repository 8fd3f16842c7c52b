//! Scenario execution: a single-threaded 1 s event loop over agents, the
//! defense layer and the engine, plus replay of recorded probe files.
//!
//! Each simulated second every agent acts in a fixed order (benign drivers,
//! bots, report flooders, invalidators, observers). On evaluation ticks the
//! sentinel then rescores sessions, the engine expires reports and updates
//! congestion, and a metrics row is captured.

pub mod metrics;
pub mod scenario;

use std::collections::BTreeMap;
use std::fs;
use std::net::Ipv4Addr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::fixtures;
use crate::geomap::{load_map, route_polyline, MapError, NodeId, Point, RoadGraph};
use crate::navcore::replay::{parse_replay, write_replay, ReplayError, ReplayRecord};
use crate::navcore::{Engine, EngineParams, NavError, SessionId, UserId, Viewport};
use crate::sentinel::{CarrierOracle, DeviceLocation, Sentinel};
use crate::sybil::{
    nth_ip, open_client, BotnetPlan, DdosDevice, Driver, EventSink, Invalidator, IpAssignment,
    ReportSchedule, SybilError, Tracker, TrackingEstimate,
};
use crate::tracegen::{generate_trace, Phase, SpeedPattern, TraceError};

pub use metrics::{
    BotPattern, MetricsLog, RouteSummary, SegmentRow, Summary, TickRecord, WeightRow,
};
pub use scenario::{AttackSpec, BenignPattern, RawScenario, Scenario, ScenarioError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("map: {0}")]
    Map(#[from] MapError),
    #[error(transparent)]
    Sybil(#[from] SybilError),
    #[error(transparent)]
    Nav(#[from] NavError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
    #[error("map file {0:?} not found")]
    UnknownMap(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SimError + '_ {
    move |source| SimError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Resolve a map reference: a file relative to `base_dir` if it exists,
/// otherwise a shipped fixture of that name.
pub fn load_map_ref(name: &str, base_dir: Option<&Path>) -> Result<RoadGraph, SimError> {
    let candidate = match base_dir {
        Some(d) => d.join(name),
        None => PathBuf::from(name),
    };
    if candidate.is_file() {
        let text = fs::read_to_string(&candidate).map_err(io_err(&candidate))?;
        return Ok(load_map(&text)?);
    }
    let stem = Path::new(name)
        .file_name()
        .and_then(|s| s.to_str())
        .unwrap_or(name);
    let text = fixtures::map_by_name(stem).ok_or_else(|| SimError::UnknownMap(name.to_string()))?;
    Ok(load_map(text)?)
}

/// Map bounds grown by 100 m on every side.
pub fn default_viewport(graph: &RoadGraph) -> Viewport {
    let (lo, hi) = graph.bounds();
    Viewport::new(lo.x - 100.0, lo.y - 100.0, hi.x + 100.0, hi.y + 100.0)
}

fn is_tick(now: f64, tick_s: f64) -> bool {
    (now / tick_s).fract() == 0.0
}

/// Live-run sink: records replay lines, registers devices with the carrier
/// oracle and lets the sentinel sample fixes for verification.
struct Recorder<'a> {
    sentinel: &'a mut Sentinel,
    replay: &'a mut Vec<ReplayRecord>,
}

impl EventSink for Recorder<'_> {
    fn record(&mut self, rec: ReplayRecord) {
        if let ReplayRecord::Probe { session, fix } = &rec {
            self.sentinel.on_probe(*session, fix.position);
        }
        self.replay.push(rec);
    }

    fn device(&mut self, session: SessionId, location: DeviceLocation) {
        self.sentinel.oracle.register_device(session, location);
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub log: MetricsLog,
    pub summary: Summary,
    pub replay: Vec<ReplayRecord>,
    pub bots: Vec<BotPattern>,
    pub tracking: Option<TrackingEstimate>,
    pub benign_sessions: Vec<SessionId>,
    pub bot_sessions: Vec<SessionId>,
}

fn random_benign_pattern(rng: &mut ChaCha8Rng, lo: f64, hi: f64, needed_s: u32) -> SpeedPattern {
    let mut phases = Vec::new();
    let mut total = 0;
    while total < needed_s.max(1) {
        let speed = if hi > lo { rng.gen_range(lo..hi) } else { lo };
        let dur: u32 = rng.gen_range(120..=600);
        phases.push(Phase::cruise(speed, dur));
        total += dur;
    }
    SpeedPattern {
        phases,
        loop_route: true,
    }
}

fn build_benign(engine: &mut Engine, sc: &Scenario, seed: u64) -> Result<Vec<Driver>, SimError> {
    let spec = &sc.benign;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xbe_1191);
    let mut spawn = spec.spawn_start_s.round();
    let mut drivers = Vec::with_capacity(spec.count);
    for k in 0..spec.count {
        if k > 0 {
            let gap = if spec.spawn_gap_max_s > spec.spawn_gap_min_s {
                rng.gen_range(spec.spawn_gap_min_s..=spec.spawn_gap_max_s)
            } else {
                spec.spawn_gap_min_s
            };
            spawn += gap.round();
        }
        let route = &spec.routes[k % spec.routes.len()];
        let polyline = route_polyline(engine.graph(), route)?;
        let needed = (f64::from(sc.duration_s) - spawn + 1.0).max(1.0) as u32;
        let pattern = match &spec.pattern {
            BenignPattern::Fixed(p) => p.clone(),
            BenignPattern::Random {
                speed_min_kph,
                speed_max_kph,
            } => random_benign_pattern(&mut rng, *speed_min_kph, *speed_max_kph, needed),
        };
        let name = format!("driver{k}");
        let user: UserId = engine.register_user(&name, &format!("{name}@example.org"), 0.0)?;
        let acc = engine.account_mut(user).expect("just registered");
        acc.phone_verified = spec.verified;
        acc.captcha_passed = spec.verified;
        acc.points = spec.points;
        let trace = generate_trace(&polyline, &pattern, spawn, None)?;
        let mut d = Driver::new(
            name,
            Some(user),
            nth_ip(Ipv4Addr::new(198, 51, 100, 0), k as u32 + 1),
            trace,
            pattern,
        );
        d.spawn_t = spawn;
        d.probe_every = sc.probe_interval_s;
        if spec.report_every_s > 0.0 {
            d.reports = Some(ReportSchedule {
                every_s: spec.report_every_s,
                until_t: spec.report_until_s.unwrap_or(f64::from(sc.duration_s)),
                kind: spec.report_kind,
            });
        }
        drivers.push(d);
    }
    Ok(drivers)
}

fn replay_params(
    params: &EngineParams,
    od: Option<(&NodeId, &NodeId)>,
    viewport: &Viewport,
) -> Vec<ReplayRecord> {
    let mut out: Vec<ReplayRecord> = params
        .entries()
        .into_iter()
        .map(|(k, v)| ReplayRecord::Param {
            key: k.to_string(),
            value: v,
        })
        .collect();
    let mut extra = |k: &str, v: String| {
        out.push(ReplayRecord::Param {
            key: k.to_string(),
            value: v,
        })
    };
    extra("seed", params.seed.to_string());
    if let Some((o, d)) = od {
        extra("origin", o.to_string());
        extra("destination", d.to_string());
    }
    extra(
        "viewport",
        format!(
            "{},{},{},{}",
            viewport.min.x, viewport.min.y, viewport.max.x, viewport.max.y
        ),
    );
    out
}

/// Execute `sc` with `seed`. Identical inputs give identical results.
pub fn run_scenario(
    sc: &Scenario,
    graph: Arc<RoadGraph>,
    seed: u64,
) -> Result<RunResult, SimError> {
    sc.validate_against(&graph)?;
    let mut params = sc.engine.clone();
    params.seed = seed;
    let tick_s = params.tick_s;
    let viewport = sc.map.viewport.unwrap_or_else(|| default_viewport(&graph));
    let od = sc.map.origin.as_ref().zip(sc.map.destination.as_ref());

    let mut engine = Engine::new(graph.clone(), params.clone());
    let mut sentinel = Sentinel::new(
        sc.defense.params.clone(),
        CarrierOracle::new(sc.defense.antennas.clone()),
        seed,
    );
    let mut replay = replay_params(&params, od, &viewport);

    let mut benign = build_benign(&mut engine, sc, seed)?;
    let mut bots: Vec<Driver> = Vec::new();
    let mut ddos: Vec<DdosDevice> = Vec::new();
    let mut invalidator: Option<Invalidator> = None;
    let mut tracker: Option<Tracker> = None;

    match &sc.attack {
        AttackSpec::TrafficJam(j) => {
            let plan = BotnetPlan {
                n_bots: j.n_bots,
                label_prefix: "bot".into(),
                start_t: j.start_s.round(),
                schedule: j.spawn,
                accounts: j.accounts,
                train_hours: j.train_hours,
                route: j.route.clone(),
                pattern: j.pattern.clone(),
                randomize: j.randomize,
                jitter_m: j.jitter_m,
                scatter_m: j.scatter_m,
                ips: match &j.ip {
                    scenario::IpMode::Shared(ip) => IpAssignment::Shared(ip.clone()),
                    scenario::IpMode::Distinct => {
                        IpAssignment::Distinct(Ipv4Addr::new(198, 18, 0, 0))
                    }
                },
                device: j.farm,
                probe_every: sc.probe_interval_s,
                seed,
            };
            bots = plan.build(&mut engine, 0.0)?;
        }
        AttackSpec::ReportDdos { n_devices, cfg } => {
            ddos = (0..*n_devices)
                .map(|k| {
                    DdosDevice::new(
                        nth_ip(Ipv4Addr::new(203, 0, 113, 0), k as u32 + 1),
                        viewport,
                        cfg.clone(),
                        seed.wrapping_add(k as u64),
                    )
                })
                .collect();
        }
        AttackSpec::None | AttackSpec::Invalidation { .. } | AttackSpec::Tracking { .. } => {}
    }

    let mut log = MetricsLog::default();
    log.header.push(("scenario".into(), sc.name.clone()));
    log.header.push(("seed".into(), seed.to_string()));
    log.header.push(("scenario_hash".into(), sc.hash()));
    log.header.extend(sc.canonical_entries());

    for step in 0..=sc.duration_s {
        let now = f64::from(step);
        let mut sink = Recorder {
            sentinel: &mut sentinel,
            replay: &mut replay,
        };
        for d in benign.iter_mut().chain(bots.iter_mut()) {
            d.step(&mut engine, now, &mut sink)?;
        }
        for dev in &mut ddos {
            dev.step(&mut engine, now, &mut sink)?;
        }
        if let AttackSpec::Invalidation { n_bots, start_s } = &sc.attack {
            if invalidator.is_none() && now >= *start_s {
                let mut sessions = Vec::new();
                for k in 0..*n_bots {
                    let ip = nth_ip(Ipv4Addr::new(203, 0, 113, 100), k as u32);
                    sessions.push(open_client(
                        &mut engine,
                        None,
                        &ip,
                        DeviceLocation::CoLocated,
                        now,
                        &mut sink,
                    )?);
                }
                invalidator = Some(Invalidator::new(sessions, viewport));
            }
            if let Some(inv) = invalidator.as_mut() {
                if is_tick(now, tick_s) {
                    inv.poll(&mut engine, now, &mut sink);
                }
            }
        }
        if let AttackSpec::Tracking {
            target,
            n_observers,
            view_w,
            view_h,
            start_s,
            epochs,
        } = &sc.attack
        {
            if tracker.is_none() && now >= *start_s {
                tracker = Some(Tracker::spawn(
                    &mut engine,
                    target,
                    *n_observers,
                    viewport,
                    (*view_w, *view_h),
                    now,
                    *epochs,
                    &mut sink,
                )?);
            }
            if let Some(tr) = tracker.as_mut() {
                tr.step(&engine, now);
            }
        }

        if is_tick(now, tick_s) {
            let labels: BTreeMap<SessionId, &str> = benign
                .iter()
                .chain(bots.iter())
                .filter_map(|d| d.session().map(|s| (s, d.label.as_str())))
                .collect();
            for a in sentinel.assess(&engine, now) {
                let current = engine.session(a.session).map(|s| s.weight);
                if current != Some(a.final_weight) {
                    engine.set_session_weight(a.session, a.final_weight)?;
                    replay.push(ReplayRecord::Weight {
                        t: now,
                        session: a.session,
                        weight: a.final_weight,
                    });
                }
                log.weights.push(WeightRow {
                    t: now,
                    label: labels
                        .get(&a.session)
                        .map_or_else(|| format!("s{}", a.session), |l| l.to_string()),
                    assessment: a,
                });
            }
            engine.evaluate_tick(now);
            log.push(TickRecord::capture(&engine, now, &viewport, od));
        }
    }
    replay.push(ReplayRecord::End {
        t: f64::from(sc.duration_s),
    });

    let benign_sessions: Vec<SessionId> = benign.iter().filter_map(Driver::session).collect();
    let bot_sessions: Vec<SessionId> = bots.iter().filter_map(Driver::session).collect();
    let targets = match &sc.attack {
        AttackSpec::TrafficJam(j) => j.route.clone(),
        _ => Vec::new(),
    };

    let mut summary = Summary {
        scenario: sc.name.clone(),
        seed,
        hash: sc.hash(),
        attack: sc.attack.kind().to_string(),
        ticks: log.ticks.len(),
        targets: metrics::summarize_targets(&log, &targets),
        congested_ticks: log
            .ticks
            .iter()
            .filter(|t| t.segments.iter().any(|s| s.congested))
            .count(),
        last_bot_fix_t: bots
            .iter()
            .filter_map(Driver::last_fix_t)
            .map(|t| t.min(f64::from(sc.duration_s)))
            .max_by(f64::total_cmp),
        reports_submitted: engine.obstacles().submitted,
        active_reports_max: log
            .ticks
            .iter()
            .map(|t| t.active_reports)
            .max()
            .unwrap_or(0),
        active_reports_final: log.ticks.last().map_or(0, |t| t.active_reports),
        carrier_checks: sentinel.checks_run,
        carrier_failures: engine
            .sessions()
            .filter(|s| sentinel.carrier_failed(s.session_id))
            .count(),
        ..Summary::default()
    };
    if od.is_some() {
        summary.pre_route = log
            .ticks
            .first()
            .and_then(|t| t.route.clone().map(|route| RouteSummary { t: t.t, route }));
        summary.post_route = log
            .ticks
            .iter()
            .find(|t| targets.iter().any(|s| t.is_congested(s)))
            .and_then(|t| t.route.clone().map(|route| RouteSummary { t: t.t, route }));
    }
    if let Some(inv) = &invalidator {
        summary.benign_reports = replay
            .iter()
            .filter(|r| matches!(r, ReplayRecord::Report { session, .. } if benign_sessions.contains(session)))
            .count();
        summary.benign_removed = inv.removed;
    }
    if let Some(tr) = &tracker {
        summary.tracking_epochs = Some((
            tr.estimate.epochs_observed,
            tr.estimate.epochs_with_sighting,
        ));
    }
    if !benign_sessions.is_empty() {
        summary.min_benign_weight_ratio = metrics::min_weight_ratio(&log, &benign_sessions);
    }
    if let Some(last_t) = log
        .weights
        .iter()
        .filter(|w| bot_sessions.contains(&w.assessment.session))
        .map(|w| w.t)
        .max_by(f64::total_cmp)
    {
        let finals: Vec<f64> = log
            .weights
            .iter()
            .filter(|w| w.t == last_t && bot_sessions.contains(&w.assessment.session))
            .map(|w| w.assessment.final_weight)
            .collect();
        summary.mean_bot_weight_final = Some(finals.iter().sum::<f64>() / finals.len() as f64);
    }

    Ok(RunResult {
        log,
        summary,
        replay,
        bots: bots
            .iter()
            .map(|d| BotPattern {
                label: d.label.clone(),
                spawn_t: d.spawn_t,
                pattern: d.pattern.clone(),
            })
            .collect(),
        tracking: tracker.map(|t| t.estimate),
        benign_sessions,
        bot_sessions,
    })
}

fn parse_viewport(s: &str) -> Option<Viewport> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse().ok())
        .collect::<Option<_>>()?;
    match v.as_slice() {
        [a, b, c, d] => Some(Viewport::new(*a, *b, *c, *d)),
        _ => None,
    }
}

fn bad_param(key: &str, value: &str) -> SimError {
    SimError::Nav(NavError::BadParam {
        key: key.to_string(),
        value: value.to_string(),
    })
}

/// Re-ingest a recorded probe file and rebuild the tick log. Ticks run
/// lazily: every tick strictly before a record's time is evaluated before
/// the record is applied, and `end` flushes ticks up to its time.
pub fn run_replay(records: &[ReplayRecord], graph: Arc<RoadGraph>) -> Result<MetricsLog, SimError> {
    let mut params = EngineParams::default();
    let mut od: Option<(NodeId, NodeId)> = None;
    let mut origin: Option<NodeId> = None;
    let mut viewport = default_viewport(&graph);
    for r in records {
        if let ReplayRecord::Param { key, value } = r {
            match key.as_str() {
                "seed" => params.seed = value.parse().map_err(|_| bad_param(key, value))?,
                "origin" => origin = Some(NodeId::from(value.as_str())),
                "destination" => {
                    let o = origin.clone().ok_or_else(|| bad_param(key, value))?;
                    od = Some((o, NodeId::from(value.as_str())));
                }
                "viewport" => {
                    viewport = parse_viewport(value).ok_or_else(|| bad_param(key, value))?
                }
                _ => params.set(key, value)?,
            }
        }
    }
    let tick_s = params.tick_s;
    let mut engine = Engine::new(graph, params);
    let mut log = MetricsLog::default();
    log.header.push(("source".into(), "replay".into()));
    log.header
        .push(("seed".into(), engine.params().seed.to_string()));
    for (k, v) in engine.params().entries() {
        log.header.push((format!("engine.{k}"), v));
    }
    let od_ref = od.as_ref().map(|(o, d)| (o, d));
    let mut next_tick = 0.0_f64;
    let mut run_ticks = |engine: &mut Engine, log: &mut MetricsLog, upto: f64, inclusive: bool| {
        while next_tick < upto || (inclusive && next_tick == upto) {
            engine.evaluate_tick(next_tick);
            log.push(TickRecord::capture(engine, next_tick, &viewport, od_ref));
            next_tick += tick_s;
        }
    };

    for r in records {
        let Some(t) = r.time() else { continue };
        run_ticks(
            &mut engine,
            &mut log,
            t,
            matches!(r, ReplayRecord::End { .. }),
        );
        match r {
            ReplayRecord::Param { .. } | ReplayRecord::End { .. } => {}
            ReplayRecord::Session {
                t,
                session,
                username,
                source_ip,
            } => {
                let user = match username {
                    None => None,
                    Some(name) => Some(match engine.accounts().by_username(name) {
                        Some(a) => a.user_id,
                        None => {
                            engine.register_user(name, &format!("{name}@replay.invalid"), *t)?
                        }
                    }),
                };
                engine.open_session(*session, user, source_ip, *t)?;
            }
            ReplayRecord::Weight {
                session, weight, ..
            } => engine.set_session_weight(*session, *weight)?,
            ReplayRecord::Probe { session, fix } => {
                engine.ingest_probe(*session, *fix, fix.t)?;
            }
            ReplayRecord::Report {
                t,
                session,
                kind,
                position,
                note,
            } => {
                engine.submit_obstacle(*session, *kind, *position, note.clone(), *t)?;
            }
            ReplayRecord::Confirm { t, session, report } => {
                engine.confirm_obstacle(*session, *report, *t)?;
            }
            ReplayRecord::Invalidate { t, session, report } => {
                engine.invalidate_obstacle(*session, *report, *t)?;
            }
            ReplayRecord::Logout { t, session } => engine.logout(*session, *t)?,
        }
    }
    Ok(log)
}

pub fn replay_text(text: &str, graph: Arc<RoadGraph>) -> Result<MetricsLog, SimError> {
    run_replay(&parse_replay(text)?, graph)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, SimError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(io_err(&path))?;
    Ok(path)
}

/// Write `metrics.csv`, `summary.txt`, `speeds.csv`, `weights.csv` and
/// `probes.replay` into `out_dir`.
pub fn emit_outputs(result: &RunResult, out_dir: &Path) -> Result<Vec<PathBuf>, SimError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    Ok(vec![
        write_file(out_dir, "metrics.csv", &result.log.render_csv())?,
        write_file(out_dir, "summary.txt", &result.summary.render())?,
        write_file(
            out_dir,
            "speeds.csv",
            &metrics::render_speeds_csv(&result.bots),
        )?,
        write_file(out_dir, "weights.csv", &result.log.render_weights_csv())?,
        write_file(out_dir, "probes.replay", &write_replay(&result.replay))?,
    ])
}

/// Outputs of a replay run: `metrics.csv` and a short `summary.txt`.
pub fn emit_replay_outputs(log: &MetricsLog, out_dir: &Path) -> Result<Vec<PathBuf>, SimError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut summary = format!("source: replay\nticks: {}\n", log.ticks.len());
    let segments: Vec<_> = log
        .ticks
        .first()
        .map(|t| t.segments.iter().map(|s| s.segment.clone()).collect())
        .unwrap_or_default();
    for s in metrics::summarize_targets(log, &segments) {
        if let Some(first) = s.first_congested_t {
            summary.push_str(&format!(
                "segment {}: first_flag_t={} cleared_t={} congested_ticks={}\n",
                s.segment,
                first,
                s.cleared_t.map_or("-".into(), |c| c.to_string()),
                s.congested_ticks
            ));
        }
    }
    Ok(vec![
        write_file(out_dir, "metrics.csv", &log.render_csv())?,
        write_file(out_dir, "summary.txt", &summary)?,
    ])
}

/// Convenience for callers holding scenario text.
pub fn run_scenario_text(
    name: &str,
    text: &str,
    overrides: &[String],
    seed: u64,
    base_dir: Option<&Path>,
) -> Result<RunResult, SimError> {
    let sc = Scenario::parse_with_overrides(name, text, overrides)?;
    let graph = Arc::new(load_map_ref(&sc.map.file, base_dir)?);
    run_scenario(&sc, graph, seed)
}

/// A fix position used by the tracking check: where the target truly was.
pub fn probe_positions(replay: &[ReplayRecord], session: SessionId) -> Vec<(f64, Point)> {
    replay
        .iter()
        .filter_map(|r| match r {
            ReplayRecord::Probe { session: s, fix } if *s == session => Some((fix.t, fix.position)),
            _ => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn campus() -> Arc<RoadGraph> {
        Arc::new(load_map(fixtures::CAMPUS_MAP).unwrap())
    }

    #[test]
    fn empty_scenario_has_quiet_windows() {
        let sc = Scenario::parse("empty", "[engine]\nduration_s = 600\n").unwrap();
        let r = run_scenario(&sc, campus(), 1).unwrap();
        assert_eq!(r.log.ticks.len(), 11);
        assert!(r
            .log
            .ticks
            .iter()
            .flat_map(|t| &t.segments)
            .all(|s| s.samples == 0 && !s.congested && s.moving_avg.is_none()));
        assert_eq!(r.summary.congested_ticks, 0);
    }

    #[test]
    fn lane_jam_flags_and_replays() {
        let text = "[attack]\nkind = traffic_jam\nroute = s11\npattern = 70:600;8:600:10/10\n[engine]\nduration_s = 1500\n";
        let sc = Scenario::parse("mini", text).unwrap();
        let r = run_scenario(&sc, campus(), 3).unwrap();
        let s = &r.summary.targets[0];
        assert!(s.first_congested_t.is_some_and(|t| t <= 720.0), "{s:?}");
        let replayed = run_replay(&r.replay, campus()).unwrap();
        assert_eq!(replayed.render_rows(), r.log.render_rows());
        let again = replay_text(&write_replay(&r.replay), campus()).unwrap();
        assert_eq!(again.render_rows(), r.log.render_rows());
    }

    #[test]
    fn unknown_route_is_a_field_error() {
        let sc = Scenario::parse("x", "[attack]\nkind = traffic_jam\nroute = s99\n").unwrap();
        let err = run_scenario(&sc, campus(), 1).unwrap_err();
        assert!(err.to_string().contains("attack.route"), "{err}");
    }

    #[test]
    fn outputs_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let sc = Scenario::parse("empty", "[engine]\nduration_s = 120\n").unwrap();
        let r = run_scenario(&sc, campus(), 1).unwrap();
        let files = emit_outputs(&r, dir.path()).unwrap();
        assert_eq!(files.len(), 5);
        let metrics = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
        assert!(metrics.starts_with("# scenario=empty\n# seed=1\n# scenario_hash="));
        let speeds = fs::read_to_string(dir.path().join("speeds.csv")).unwrap();
        assert_eq!(speeds, "t,bot,commanded_kph\n");
    }
}
