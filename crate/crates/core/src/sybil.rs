//! Attack orchestration: botnet construction, reputation training, the
//! traffic-jam attack, report flooding, invalidation combing and live-map
//! tracking.
//!
//! Every agent here talks to the engine only through its public API, the
//! same calls a benign client makes.

use std::collections::BTreeSet;
use std::net::Ipv4Addr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geomap::{route_polyline, MapError, Point, SegmentId};
use crate::navcore::replay::ReplayRecord;
use crate::navcore::{
    Engine, LiveMapEntry, NavError, ObstacleKind, PointEvent, ProbeReport, ReportId, SessionId,
    UserAccount, UserId, Viewport, VoteOutcome,
};
use crate::sentinel::DeviceLocation;
use crate::tracegen::{generate_trace, GpsTrace, Jitter, SpeedPattern, TraceError};

#[derive(Debug, Error)]
pub enum SybilError {
    #[error(transparent)]
    Nav(#[from] NavError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("invalid plan: {0}")]
    Plan(String),
}

/// Receives every successful client action, in order.
pub trait EventSink {
    fn record(&mut self, _rec: ReplayRecord) {}
    fn device(&mut self, _session: SessionId, _location: DeviceLocation) {}
}

pub struct NullSink;

impl EventSink for NullSink {}

/// Collects records in memory.
#[derive(Debug, Default)]
pub struct VecSink {
    pub records: Vec<ReplayRecord>,
}

impl EventSink for VecSink {
    fn record(&mut self, rec: ReplayRecord) {
        self.records.push(rec);
    }
}

/// Log a client in and announce the session together with its initial weight.
pub fn open_client(
    engine: &mut Engine,
    user: Option<UserId>,
    ip: &str,
    device: DeviceLocation,
    now: f64,
    sink: &mut dyn EventSink,
) -> Result<SessionId, NavError> {
    let sid = engine.login(user, ip, now)?;
    let username = user
        .and_then(|u| engine.accounts().get(u))
        .map(|a| a.username.clone());
    sink.record(ReplayRecord::Session {
        t: now,
        session: sid,
        username,
        source_ip: ip.to_string(),
    });
    let weight = engine.session(sid).map_or(1.0, |s| s.weight);
    sink.record(ReplayRecord::Weight {
        t: now,
        session: sid,
        weight,
    });
    sink.device(sid, device);
    Ok(sid)
}

pub fn close_client(
    engine: &mut Engine,
    session: SessionId,
    now: f64,
    sink: &mut dyn EventSink,
) -> Result<(), NavError> {
    engine.logout(session, now)?;
    sink.record(ReplayRecord::Logout { t: now, session });
    Ok(())
}

pub fn nth_ip(base: Ipv4Addr, n: u32) -> String {
    Ipv4Addr::from(u32::from(base).wrapping_add(n)).to_string()
}

fn is_tick(now: f64, tick_s: f64) -> bool {
    (now / tick_s).fract() == 0.0
}

// ---- botnet plans ---------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpawnSchedule {
    Simultaneous,
    /// Spacing drawn uniformly from `[0.5, 1.5] x mean`, rounded to seconds.
    Gradual {
        mean_spacing_s: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccountMode {
    Reputed,
    Anonymous,
}

#[derive(Debug, Clone, PartialEq)]
pub enum IpAssignment {
    Shared(String),
    /// Consecutive addresses from `base + 1`.
    Distinct(Ipv4Addr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BotnetPlan {
    pub n_bots: usize,
    pub label_prefix: String,
    pub start_t: f64,
    pub schedule: SpawnSchedule,
    pub accounts: AccountMode,
    pub train_hours: f64,
    pub route: Vec<SegmentId>,
    pub pattern: SpeedPattern,
    pub randomize: bool,
    pub jitter_m: f64,
    /// Constant offset radius applied to each bot's whole trace.
    pub scatter_m: f64,
    pub ips: IpAssignment,
    /// Where the handsets physically sit; `None` means they are where they report.
    pub device: Option<Point>,
    pub probe_every: u32,
    pub seed: u64,
}

impl BotnetPlan {
    pub fn new(n_bots: usize, route: Vec<SegmentId>, pattern: SpeedPattern) -> Self {
        BotnetPlan {
            n_bots,
            label_prefix: "bot".into(),
            start_t: 0.0,
            schedule: SpawnSchedule::Simultaneous,
            accounts: AccountMode::Reputed,
            train_hours: 3.0,
            route,
            pattern,
            randomize: false,
            jitter_m: 0.0,
            scatter_m: 0.0,
            ips: IpAssignment::Shared("203.0.113.7".into()),
            device: None,
            probe_every: 1,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SybilError> {
        if self.route.is_empty() {
            return Err(SybilError::Plan("route is empty".into()));
        }
        if let SpawnSchedule::Gradual { mean_spacing_s } = self.schedule {
            if !(mean_spacing_s >= 0.0 && mean_spacing_s.is_finite()) {
                return Err(SybilError::Plan(format!(
                    "bad spawn spacing {mean_spacing_s}"
                )));
            }
        }
        if self.probe_every == 0 {
            return Err(SybilError::Plan("probe interval must be positive".into()));
        }
        self.pattern.validate()?;
        Ok(())
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed ^ 0xb07_5eed)
    }

    /// Non-decreasing spawn times, deterministic in the plan seed.
    pub fn spawn_times(&self) -> Vec<f64> {
        let mut rng = self.rng();
        let mut t = self.start_t;
        (0..self.n_bots)
            .map(|k| {
                if let SpawnSchedule::Gradual { mean_spacing_s } = self.schedule {
                    if k > 0 {
                        t += (rng.gen_range(0.5..=1.5) * mean_spacing_s).round();
                    }
                }
                t
            })
            .collect()
    }

    /// Register (and, for reputed plans, train) accounts and build one
    /// driver per bot.
    pub fn build(&self, engine: &mut Engine, now: f64) -> Result<Vec<Driver>, SybilError> {
        self.validate()?;
        let polyline = route_polyline(engine.graph(), &self.route)?;
        let spawns = self.spawn_times();
        let mut users = Vec::new();
        if self.accounts == AccountMode::Reputed {
            for k in 0..self.n_bots {
                let name = format!("{}{k}", self.label_prefix);
                users.push(engine.register_user(&name, &format!("{name}@botfarm.example"), now)?);
            }
            train_bots(engine, &users, self.train_hours);
        }

        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x5ca7_7e72);
        let mut drivers = Vec::with_capacity(self.n_bots);
        for (k, &spawn_t) in spawns.iter().enumerate() {
            let pattern = if self.randomize {
                self.pattern.randomized(&mut rng)
            } else {
                self.pattern.clone()
            };
            let jitter = (self.jitter_m > 0.0).then(|| Jitter {
                seed: self.seed.wrapping_mul(1_000_003).wrapping_add(k as u64),
                max_m: self.jitter_m,
            });
            let mut trace = generate_trace(&polyline, &pattern, spawn_t, jitter)?;
            if self.scatter_m > 0.0 {
                let r = self.scatter_m * rng.gen::<f64>().sqrt();
                let a = rng.gen_range(0.0..std::f64::consts::TAU);
                for f in &mut trace.fixes {
                    f.pos.x += r * a.cos();
                    f.pos.y += r * a.sin();
                }
            }
            let ip = match &self.ips {
                IpAssignment::Shared(ip) => ip.clone(),
                IpAssignment::Distinct(base) => nth_ip(*base, k as u32 + 1),
            };
            let mut d = Driver::new(
                format!("{}{k}", self.label_prefix),
                users.get(k).copied(),
                ip,
                trace,
                pattern,
            );
            d.spawn_t = spawn_t;
            d.probe_every = self.probe_every;
            d.device = self
                .device
                .map_or(DeviceLocation::CoLocated, DeviceLocation::Fixed);
            drivers.push(d);
        }
        Ok(drivers)
    }
}

/// Length-weighted mean initial baseline of the graph, kph.
pub fn typical_speed_kph(engine: &Engine) -> f64 {
    let segs = engine.graph().segments();
    let total: f64 = segs.iter().map(|s| s.length).sum();
    if total <= 0.0 {
        return 0.0;
    }
    segs.iter()
        .map(|s| s.length * s.initial_baseline_kph)
        .sum::<f64>()
        / total
}

/// Simulated benign driving at typical speed for `hours`, topped up with
/// report filings (within the report rate limit) until each account
/// crosses into level 2.
pub fn train_bots(engine: &mut Engine, users: &[UserId], hours: f64) -> Vec<UserAccount> {
    if hours <= 0.0 {
        return users
            .iter()
            .filter_map(|&u| engine.accounts().get(u).cloned())
            .collect();
    }
    let km = (typical_speed_kph(engine) * hours).floor() as u64;
    let policy = engine.params().reports.clone();
    let max_reports = policy.limit as u64 * (hours * 3600.0 / policy.window_s).floor() as u64;
    let mut out = Vec::new();
    for &u in users {
        let Some(acc) = engine.account_mut(u) else {
            continue;
        };
        for _ in 0..km {
            acc.award(PointEvent::DroveKm);
        }
        let missing = 100u64.saturating_sub(acc.points);
        let per = PointEvent::FiledReport.points();
        let reports = missing.div_ceil(per).min(max_reports);
        for _ in 0..reports {
            acc.award(PointEvent::FiledReport);
        }
        out.push(acc.clone());
    }
    out
}

// ---- drivers ----------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct ReportSchedule {
    pub every_s: f64,
    pub until_t: f64,
    pub kind: ObstacleKind,
}

/// A client that logs in at `spawn_t`, streams its precomputed trace and
/// logs out one second after its last fix.
#[derive(Debug, Clone)]
pub struct Driver {
    pub label: String,
    pub user: Option<UserId>,
    pub ip: String,
    pub spawn_t: f64,
    pub trace: GpsTrace,
    pub pattern: SpeedPattern,
    pub device: DeviceLocation,
    pub probe_every: u32,
    pub reports: Option<ReportSchedule>,
    session: Option<SessionId>,
    next_fix: usize,
    next_report_t: f64,
    finished: bool,
}

impl Driver {
    pub fn new(
        label: String,
        user: Option<UserId>,
        ip: String,
        trace: GpsTrace,
        pattern: SpeedPattern,
    ) -> Self {
        let spawn_t = trace.fixes.first().map_or(0.0, |f| f.t);
        Driver {
            label,
            user,
            ip,
            spawn_t,
            trace,
            pattern,
            device: DeviceLocation::CoLocated,
            probe_every: 1,
            reports: None,
            session: None,
            next_fix: 0,
            next_report_t: f64::INFINITY,
            finished: false,
        }
    }

    pub fn session(&self) -> Option<SessionId> {
        self.session
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn last_fix_t(&self) -> Option<f64> {
        self.trace.fixes.last().map(|f| f.t)
    }

    /// Commanded pattern speed at `now`, if the driver is mid-pattern.
    pub fn commanded_speed(&self, now: f64) -> Option<f64> {
        if now < self.spawn_t {
            return None;
        }
        self.pattern.commanded_speed_at((now - self.spawn_t) as u32)
    }

    pub fn step(
        &mut self,
        engine: &mut Engine,
        now: f64,
        sink: &mut dyn EventSink,
    ) -> Result<(), SybilError> {
        if self.finished {
            return Ok(());
        }
        if self.session.is_none() {
            if now < self.spawn_t {
                return Ok(());
            }
            self.session = Some(open_client(
                engine,
                self.user,
                &self.ip,
                self.device,
                now,
                sink,
            )?);
            if let Some(r) = &self.reports {
                self.next_report_t = now + r.every_s;
            }
        }
        let sid = self.session.expect("logged in");

        if let Some(fix) = self.trace.fixes.get(self.next_fix).copied() {
            if fix.t <= now {
                if self.next_fix.is_multiple_of(self.probe_every as usize) {
                    let probe = ProbeReport {
                        t: fix.t,
                        position: fix.pos,
                        speed_kph: fix.speed_kph,
                        heading: fix.heading,
                    };
                    engine.ingest_probe(sid, probe, now)?;
                    sink.record(ReplayRecord::Probe {
                        session: sid,
                        fix: probe,
                    });
                }
                self.next_fix += 1;
            }
        } else if self.last_fix_t().is_none_or(|t| now > t) {
            close_client(engine, sid, now, sink)?;
            self.finished = true;
            return Ok(());
        }

        if let Some(r) = &self.reports {
            if now >= self.next_report_t && now <= r.until_t {
                let position = engine
                    .session(sid)
                    .and_then(|s| s.last_fix())
                    .map(|f| f.position);
                if let Some(position) = position {
                    if engine
                        .submit_obstacle(sid, r.kind, position, None, now)
                        .is_ok()
                    {
                        sink.record(ReplayRecord::Report {
                            t: now,
                            session: sid,
                            kind: r.kind,
                            position,
                            note: None,
                        });
                    }
                }
                self.next_report_t += r.every_s;
            }
        }
        Ok(())
    }
}

/// Per-tick congestion flags of the attacked route's segments.
#[derive(Debug, Clone, PartialEq)]
pub struct JamOutcome {
    pub segments: Vec<SegmentId>,
    pub flags: Vec<(f64, Vec<bool>)>,
}

impl JamOutcome {
    pub fn ever_congested(&self) -> bool {
        self.flags.iter().any(|(_, f)| f.iter().any(|&c| c))
    }

    pub fn first_all_congested(&self) -> Option<f64> {
        self.flags
            .iter()
            .find(|(_, f)| !f.is_empty() && f.iter().all(|&c| c))
            .map(|(t, _)| *t)
    }
}

/// Run the plan against `engine` with defenses off until `until`,
/// evaluating congestion every engine tick.
pub fn create_traffic_jam(
    engine: &mut Engine,
    plan: &BotnetPlan,
    until: f64,
) -> Result<JamOutcome, SybilError> {
    let mut bots = plan.build(engine, plan.start_t)?;
    let tick = engine.params().tick_s;
    let mut out = JamOutcome {
        segments: plan.route.clone(),
        flags: Vec::new(),
    };
    let mut t = plan.start_t.floor();
    while t <= until {
        for b in &mut bots {
            b.step(engine, t, &mut NullSink)?;
        }
        if is_tick(t, tick) {
            engine.evaluate_tick(t);
            let f = plan
                .route
                .iter()
                .map(|s| engine.is_congested(s, t))
                .collect();
            out.flags.push((t, f));
        }
        t += 1.0;
    }
    Ok(out)
}

// ---- report flooding ---------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct DdosConfig {
    pub relogin: bool,
    pub relogin_delay_s: f64,
    pub report_spacing_s: f64,
    pub kinds: Vec<ObstacleKind>,
    pub start_t: f64,
    pub stop_t: f64,
}

impl Default for DdosConfig {
    fn default() -> Self {
        DdosConfig {
            relogin: true,
            relogin_delay_s: 10.0,
            report_spacing_s: 5.0,
            kinds: vec![ObstacleKind::Police],
            start_t: 0.0,
            stop_t: f64::INFINITY,
        }
    }
}

/// One flooding device: files reports until rate limited, then (with
/// relogin) closes the app, waits, and comes back as a fresh session.
#[derive(Debug, Clone)]
pub struct DdosDevice {
    pub ip: String,
    pub viewport: Viewport,
    pub cfg: DdosConfig,
    rng: ChaCha8Rng,
    session: Option<SessionId>,
    next_action_t: f64,
    filed_this_session: usize,
    pub filed: usize,
    pub sessions_used: usize,
}

impl DdosDevice {
    pub fn new(ip: String, viewport: Viewport, cfg: DdosConfig, seed: u64) -> Self {
        let start = cfg.start_t;
        DdosDevice {
            ip,
            viewport,
            cfg,
            rng: ChaCha8Rng::seed_from_u64(seed),
            session: None,
            next_action_t: start,
            filed_this_session: 0,
            filed: 0,
            sessions_used: 0,
        }
    }

    pub fn step(
        &mut self,
        engine: &mut Engine,
        now: f64,
        sink: &mut dyn EventSink,
    ) -> Result<(), SybilError> {
        if now < self.next_action_t || now > self.cfg.stop_t {
            return Ok(());
        }
        let limit = engine.params().reports.limit;
        let sid = match self.session {
            Some(s) => s,
            None => {
                let s = open_client(engine, None, &self.ip, DeviceLocation::CoLocated, now, sink)?;
                self.session = Some(s);
                self.sessions_used += 1;
                self.filed_this_session = 0;
                s
            }
        };
        if self.filed_this_session >= limit {
            if self.cfg.relogin {
                close_client(engine, sid, now, sink)?;
                self.session = None;
                self.next_action_t = now + self.cfg.relogin_delay_s;
            } else {
                self.next_action_t = f64::INFINITY;
            }
            return Ok(());
        }
        let kind = self.cfg.kinds[self.filed % self.cfg.kinds.len().max(1)];
        let v = &self.viewport;
        let position = Point::new(
            self.rng.gen_range(v.min.x..=v.max.x),
            self.rng.gen_range(v.min.y..=v.max.y),
        );
        match engine.submit_obstacle(sid, kind, position, None, now) {
            Ok(_) => {
                sink.record(ReplayRecord::Report {
                    t: now,
                    session: sid,
                    kind,
                    position,
                    note: None,
                });
                self.filed += 1;
                self.filed_this_session += 1;
            }
            Err(NavError::RateLimited(_)) => self.filed_this_session = limit,
            Err(e) => return Err(e.into()),
        }
        self.next_action_t = now + self.cfg.report_spacing_s;
        Ok(())
    }
}

/// Flood `viewport` from `n_sessions` devices for `duration_s` seconds and
/// return the number of active reports inside it at the end.
pub fn report_ddos(
    engine: &mut Engine,
    n_sessions: usize,
    viewport: Viewport,
    cfg: DdosConfig,
    duration_s: f64,
    seed: u64,
) -> Result<usize, SybilError> {
    if cfg.kinds.is_empty() {
        return Err(SybilError::Plan("no report kinds".into()));
    }
    let mut devices: Vec<DdosDevice> = (0..n_sessions)
        .map(|k| {
            DdosDevice::new(
                nth_ip(Ipv4Addr::new(203, 0, 113, 0), k as u32 + 1),
                viewport,
                cfg.clone(),
                seed.wrapping_add(k as u64),
            )
        })
        .collect();
    let end = cfg.start_t + duration_s;
    let mut t = cfg.start_t;
    while t < end {
        for d in &mut devices {
            d.step(engine, t, &mut NullSink)?;
        }
        t += 1.0;
    }
    Ok(engine.active_reports_in(&viewport, end).len())
}

// ---- invalidation -------------------------------------------------------------

/// Bot sessions that comb a viewport and invalidate every report they did
/// not file themselves.
#[derive(Debug, Clone)]
pub struct Invalidator {
    pub sessions: Vec<SessionId>,
    pub viewport: Viewport,
    voted: BTreeSet<(SessionId, ReportId)>,
    pub removed: usize,
}

impl Invalidator {
    pub fn new(sessions: Vec<SessionId>, viewport: Viewport) -> Self {
        Invalidator {
            sessions,
            viewport,
            voted: BTreeSet::new(),
            removed: 0,
        }
    }

    /// One polling pass; returns the number of reports removed by it.
    pub fn poll(&mut self, engine: &mut Engine, now: f64, sink: &mut dyn EventSink) -> usize {
        let own: BTreeSet<SessionId> = self.sessions.iter().copied().collect();
        let targets: Vec<ReportId> = engine
            .active_reports_in(&self.viewport, now)
            .into_iter()
            .filter(|r| !own.contains(&r.reporter_session))
            .map(|r| r.report_id)
            .collect();
        let mut removed = 0;
        for rid in targets {
            for &sid in &self.sessions {
                if !self.voted.insert((sid, rid)) {
                    continue;
                }
                match engine.invalidate_obstacle(sid, rid, now) {
                    Ok(outcome) => {
                        sink.record(ReplayRecord::Invalidate {
                            t: now,
                            session: sid,
                            report: rid,
                        });
                        if matches!(outcome, VoteOutcome::Removed(_)) {
                            removed += 1;
                            break;
                        }
                    }
                    Err(_) => break,
                }
            }
        }
        self.removed += removed;
        removed
    }
}

/// Log in `n_bots` anonymous sessions and run one combing pass over
/// `viewport`. Returns the number of reports removed.
pub fn invalidation_attack(
    engine: &mut Engine,
    n_bots: usize,
    viewport: Viewport,
    now: f64,
) -> Result<usize, SybilError> {
    let mut sessions = Vec::new();
    for k in 0..n_bots {
        let ip = nth_ip(Ipv4Addr::new(203, 0, 113, 100), k as u32);
        sessions.push(open_client(
            engine,
            None,
            &ip,
            DeviceLocation::CoLocated,
            now,
            &mut NullSink,
        )?);
    }
    Ok(Invalidator::new(sessions, viewport).poll(engine, now, &mut NullSink))
}

// ---- tracking ------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct Sighting {
    pub observed_t: f64,
    pub observer: SessionId,
    pub shown_position: Point,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrackingEstimate {
    pub target_username: String,
    pub sightings: Vec<Sighting>,
    pub epochs_observed: usize,
    pub epochs_with_sighting: usize,
}

impl TrackingEstimate {
    /// Sighting positions in time order, consecutive duplicates dropped.
    pub fn reconstructed_route(&self) -> Vec<Point> {
        let mut out: Vec<Point> = Vec::new();
        for s in &self.sightings {
            if out.last() != Some(&s.shown_position) {
                out.push(s.shown_position);
            }
        }
        out
    }

    pub fn sighting_rate(&self) -> f64 {
        if self.epochs_observed == 0 {
            0.0
        } else {
            self.epochs_with_sighting as f64 / self.epochs_observed as f64
        }
    }
}

/// Split `region` into viewport-sized tiles, row-major.
pub fn tile_region(region: Viewport, view_w: f64, view_h: f64) -> Vec<Viewport> {
    let nx = (region.width() / view_w).ceil().max(1.0) as usize;
    let ny = (region.height() / view_h).ceil().max(1.0) as usize;
    let mut tiles = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let x0 = region.min.x + i as f64 * view_w;
            let y0 = region.min.y + j as f64 * view_h;
            tiles.push(Viewport::new(
                x0,
                y0,
                (x0 + view_w).min(region.max.x),
                (y0 + view_h).min(region.max.y),
            ));
        }
    }
    tiles
}

/// Observer sessions scanning live maps for one username, one query per
/// observer per epoch.
#[derive(Debug, Clone)]
pub struct Tracker {
    pub observers: Vec<(SessionId, Viewport)>,
    pub estimate: TrackingEstimate,
    pub start_t: f64,
    pub epochs: usize,
}

impl Tracker {
    #[allow(clippy::too_many_arguments)]
    pub fn spawn(
        engine: &mut Engine,
        target_username: &str,
        n_observers: usize,
        region: Viewport,
        view: (f64, f64),
        start_t: f64,
        epochs: usize,
        sink: &mut dyn EventSink,
    ) -> Result<Tracker, SybilError> {
        let tiles = tile_region(region, view.0, view.1);
        let mut observers = Vec::with_capacity(n_observers);
        for k in 0..n_observers {
            let ip = nth_ip(Ipv4Addr::new(192, 0, 2, 0), k as u32 + 1);
            let sid = open_client(engine, None, &ip, DeviceLocation::CoLocated, start_t, sink)?;
            observers.push((sid, tiles[k % tiles.len()]));
        }
        Ok(Tracker {
            observers,
            estimate: TrackingEstimate {
                target_username: target_username.to_string(),
                ..TrackingEstimate::default()
            },
            start_t,
            epochs,
        })
    }

    pub fn step(&mut self, engine: &Engine, now: f64) {
        let epoch_s = engine.params().live.epoch_s;
        if now < self.start_t || self.estimate.epochs_observed >= self.epochs {
            return;
        }
        if ((now - self.start_t) / epoch_s).fract() != 0.0 {
            return;
        }
        let target = &self.estimate.target_username;
        let target_online = engine.sessions().any(|s| {
            s.is_active()
                && s.last_fix().is_some()
                && s.user
                    .and_then(|u| engine.accounts().get(u))
                    .is_some_and(|a| &a.username == target)
        });
        if !target_online {
            return;
        }
        self.estimate.epochs_observed += 1;
        let mut seen = false;
        for &(sid, vp) in &self.observers {
            let hits: Vec<LiveMapEntry> = engine
                .live_map(sid, &vp, now)
                .into_iter()
                .filter(|e| e.username.as_deref() == Some(target.as_str()))
                .collect();
            for e in hits {
                seen = true;
                self.estimate.sightings.push(Sighting {
                    observed_t: now,
                    observer: sid,
                    shown_position: e.shown_position,
                });
            }
        }
        if seen {
            self.estimate.epochs_with_sighting += 1;
        }
    }
}

/// Track `target_username` while `drivers` (which must include the target)
/// move, for `epochs` live-map epochs starting at `start_t`.
#[allow(clippy::too_many_arguments)]
pub fn track_user(
    engine: &mut Engine,
    drivers: &mut [Driver],
    target_username: &str,
    n_observers: usize,
    region: Viewport,
    view: (f64, f64),
    start_t: f64,
    epochs: usize,
) -> Result<TrackingEstimate, SybilError> {
    let mut tracker = Tracker::spawn(
        engine,
        target_username,
        n_observers,
        region,
        view,
        start_t,
        epochs,
        &mut NullSink,
    )?;
    let end = start_t + epochs as f64 * engine.params().live.epoch_s;
    let mut t = start_t;
    while t < end {
        for d in drivers.iter_mut() {
            d.step(engine, t, &mut NullSink)?;
        }
        tracker.step(engine, t);
        t += 1.0;
    }
    Ok(tracker.estimate)
}
