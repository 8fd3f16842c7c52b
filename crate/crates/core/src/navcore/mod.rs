//! The social-navigation engine: accounts, sessions, probe ingestion,
//! congestion inference, routing, obstacle reports and the live map.
//!
//! All mutations go through one `&mut Engine`; the simulator's event loop
//! is the single writer. Queries take `&self`.

pub mod accounts;
pub mod livemap;
pub mod obstacles;
pub mod replay;
pub mod routing;
pub mod traffic;

use std::collections::{BTreeMap, VecDeque};
use std::sync::Arc;

use thiserror::Error;

use crate::geomap::{match_fix, MatchedFix, NodeId, Point, RoadGraph, SegmentId};

pub use accounts::{
    award_points, level_of, level_weight, AccountBook, Level, PointEvent, UserAccount, UserId,
    ANONYMOUS_WEIGHT,
};
pub use livemap::{LiveMapEntry, LiveMapParams, Viewport};
pub use obstacles::{
    ObstacleBoard, ObstacleKind, ObstacleReport, ReportId, ReportPolicy, VoteOutcome,
};
pub use routing::{fastest_route, travel_time_s, RouteResult};
pub use traffic::{SegmentTrafficState, TickOutcome, TrafficParams, WindowSample, WindowStats};

pub type SessionId = u64;

/// How long per-session fix history is retained, seconds.
pub const HISTORY_S: f64 = 900.0;

#[derive(Debug, Error, PartialEq)]
pub enum NavError {
    #[error("username {0:?} is taken")]
    DuplicateUsername(String),
    #[error("malformed email address {0:?}")]
    MalformedEmail(String),
    #[error("unknown session {0}")]
    UnknownSession(SessionId),
    #[error("unknown user {0}")]
    UnknownUser(UserId),
    #[error("session {0} already exists")]
    DuplicateSession(SessionId),
    #[error("session {0} is logged out")]
    SessionClosed(SessionId),
    #[error("fix at t={t} is newer than now={now}")]
    FutureFix { t: f64, now: f64 },
    #[error("session {0} exceeded the report rate limit")]
    RateLimited(SessionId),
    #[error("report {0} is unknown or expired")]
    UnknownReport(ReportId),
    #[error("session already voted on report {0}")]
    DuplicateVote(ReportId),
    #[error("reporter cannot vote on own report {0}")]
    SelfVote(ReportId),
    #[error("unknown node {0}")]
    UnknownNode(String),
    #[error("origin and destination are both {0}")]
    SameOriginDest(String),
    #[error("no path from {0} to {1}")]
    NoPath(String, String),
    #[error("unknown parameter {0:?}")]
    UnknownParam(String),
    #[error("invalid value {value:?} for {key}")]
    BadParam { key: String, value: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineParams {
    pub traffic: TrafficParams,
    pub reports: ReportPolicy,
    pub live: LiveMapParams,
    pub tick_s: f64,
    pub seed: u64,
}

impl Default for EngineParams {
    fn default() -> Self {
        EngineParams {
            traffic: TrafficParams::default(),
            reports: ReportPolicy::default(),
            live: LiveMapParams::default(),
            tick_s: 60.0,
            seed: 0,
        }
    }
}

impl EngineParams {
    pub const KEYS: &'static [&'static str] = &[
        "window_s",
        "speed_window_s",
        "tick_s",
        "v_crawl_kph",
        "d_min_m",
        "alpha",
        "learn_min_count",
        "b_min_kph",
        "theta",
        "w_min",
        "t_persist_s",
        "report_limit",
        "report_window_s",
        "report_ttl_s",
        "confirm_extension_s",
        "report_max_life_s",
        "live_sample",
        "live_epoch_s",
        "live_staleness_s",
        "live_speed_lo",
        "live_speed_hi",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), NavError> {
        let bad = || NavError::BadParam {
            key: key.to_string(),
            value: value.to_string(),
        };
        let num = || -> Result<f64, NavError> {
            value
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v >= 0.0)
                .ok_or_else(bad)
        };
        let positive = || num().and_then(|v| if v > 0.0 { Ok(v) } else { Err(bad()) });
        let t = &mut self.traffic;
        let r = &mut self.reports;
        let l = &mut self.live;
        match key {
            "window_s" => t.window_s = positive()?,
            "speed_window_s" => t.speed_window_s = positive()?,
            "tick_s" => self.tick_s = positive()?,
            "v_crawl_kph" => t.v_crawl_kph = num()?,
            "d_min_m" => t.d_min_m = num()?,
            "alpha" => {
                let a = num()?;
                if a > 1.0 {
                    return Err(bad());
                }
                t.alpha = a;
            }
            "learn_min_count" => t.learn_min_count = num()?,
            "b_min_kph" => t.b_min_kph = num()?,
            "theta" => t.theta = positive()?,
            "w_min" => t.w_min = num()?,
            "t_persist_s" => t.t_persist_s = num()?,
            "report_limit" => r.limit = value.parse().map_err(|_| bad())?,
            "report_window_s" => r.window_s = positive()?,
            "report_ttl_s" => r.ttl_s = positive()?,
            "confirm_extension_s" => r.confirm_extension_s = num()?,
            "report_max_life_s" => r.max_life_s = positive()?,
            "live_sample" => {
                l.sample = value.parse().map_err(|_| bad())?;
                if l.sample == 0 {
                    return Err(bad());
                }
            }
            "live_epoch_s" => l.epoch_s = positive()?,
            "live_staleness_s" => l.max_staleness_s = num()?,
            "live_speed_lo" => l.speed_factor_lo = num()?,
            "live_speed_hi" => l.speed_factor_hi = num()?,
            _ => return Err(NavError::UnknownParam(key.to_string())),
        }
        Ok(())
    }

    /// Every tunable as `(key, value)`, in `KEYS` order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let t = &self.traffic;
        let r = &self.reports;
        let l = &self.live;
        let vals = [
            t.window_s.to_string(),
            t.speed_window_s.to_string(),
            self.tick_s.to_string(),
            t.v_crawl_kph.to_string(),
            t.d_min_m.to_string(),
            t.alpha.to_string(),
            t.learn_min_count.to_string(),
            t.b_min_kph.to_string(),
            t.theta.to_string(),
            t.w_min.to_string(),
            t.t_persist_s.to_string(),
            r.limit.to_string(),
            r.window_s.to_string(),
            r.ttl_s.to_string(),
            r.confirm_extension_s.to_string(),
            r.max_life_s.to_string(),
            l.sample.to_string(),
            l.epoch_s.to_string(),
            l.max_staleness_s.to_string(),
            l.speed_factor_lo.to_string(),
            l.speed_factor_hi.to_string(),
        ];
        Self::KEYS.iter().copied().zip(vals).collect()
    }
}

/// A GPS fix as sent by a client.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeReport {
    pub t: f64,
    pub position: Point,
    pub speed_kph: f64,
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub session_id: SessionId,
    pub user: Option<UserId>,
    pub source_ip: String,
    pub start_t: f64,
    pub end_t: Option<f64>,
    pub total_displacement: f64,
    pub max_speed_seen: f64,
    /// Fixes of the last `HISTORY_S` seconds, oldest first.
    pub history: VecDeque<ProbeReport>,
    report_times: VecDeque<f64>,
    /// Current trust weight; set by the defense layer, defaults to the
    /// reputation weight of the owning account.
    pub weight: f64,
    unawarded_m: f64,
}

impl Session {
    pub fn is_active(&self) -> bool {
        self.end_t.is_none()
    }

    pub fn last_fix(&self) -> Option<&ProbeReport> {
        self.history.back()
    }

    pub fn reports_in_window(&self, now: f64, window_s: f64) -> usize {
        self.report_times
            .iter()
            .filter(|&&t| t > now - window_s && t <= now)
            .count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IngestOutcome {
    Matched(MatchedFix),
    NoMatch,
    Stale,
}

#[derive(Debug, Clone)]
pub struct Engine {
    graph: Arc<RoadGraph>,
    params: EngineParams,
    accounts: AccountBook,
    sessions: BTreeMap<SessionId, Session>,
    next_session: SessionId,
    traffic: Vec<SegmentTrafficState>,
    obstacles: ObstacleBoard,
}

impl Engine {
    pub fn new(graph: Arc<RoadGraph>, params: EngineParams) -> Self {
        let traffic = graph
            .segments()
            .iter()
            .map(|s| SegmentTrafficState::new(s.id.clone(), s.initial_baseline_kph))
            .collect();
        Engine {
            graph,
            params,
            accounts: AccountBook::default(),
            sessions: BTreeMap::new(),
            next_session: 1,
            traffic,
            obstacles: ObstacleBoard::default(),
        }
    }

    pub fn graph(&self) -> &Arc<RoadGraph> {
        &self.graph
    }

    pub fn params(&self) -> &EngineParams {
        &self.params
    }

    // ---- accounts ------------------------------------------------------

    pub fn register_user(
        &mut self,
        username: &str,
        email: &str,
        now: f64,
    ) -> Result<UserId, NavError> {
        self.accounts
            .register_user(username, email, now)
            .map(|a| a.user_id)
    }

    pub fn accounts(&self) -> &AccountBook {
        &self.accounts
    }

    pub fn account_mut(&mut self, id: UserId) -> Option<&mut UserAccount> {
        self.accounts.get_mut(id)
    }

    // ---- sessions ------------------------------------------------------

    pub fn login(
        &mut self,
        user: Option<UserId>,
        source_ip: &str,
        now: f64,
    ) -> Result<SessionId, NavError> {
        let id = self.next_session;
        self.open_session(id, user, source_ip, now)?;
        Ok(id)
    }

    /// Open a session under a caller-chosen id (replay).
    pub fn open_session(
        &mut self,
        id: SessionId,
        user: Option<UserId>,
        source_ip: &str,
        now: f64,
    ) -> Result<(), NavError> {
        if self.sessions.contains_key(&id) {
            return Err(NavError::DuplicateSession(id));
        }
        if let Some(u) = user {
            if self.accounts.get(u).is_none() {
                return Err(NavError::UnknownUser(u));
            }
        }
        let weight = level_weight(user.and_then(|u| self.accounts.get(u)));
        self.sessions.insert(
            id,
            Session {
                session_id: id,
                user,
                source_ip: source_ip.to_string(),
                start_t: now,
                end_t: None,
                total_displacement: 0.0,
                max_speed_seen: 0.0,
                history: VecDeque::new(),
                report_times: VecDeque::new(),
                weight,
                unawarded_m: 0.0,
            },
        );
        self.next_session = self.next_session.max(id + 1);
        Ok(())
    }

    /// Closing the app ends the session; its reports stay on the map.
    pub fn logout(&mut self, session: SessionId, now: f64) -> Result<(), NavError> {
        let s = self
            .sessions
            .get_mut(&session)
            .ok_or(NavError::UnknownSession(session))?;
        if s.end_t.is_none() {
            s.end_t = Some(now);
        }
        Ok(())
    }

    pub fn session(&self, id: SessionId) -> Option<&Session> {
        self.sessions.get(&id)
    }

    pub fn sessions(&self) -> impl Iterator<Item = &Session> {
        self.sessions.values()
    }

    pub fn set_session_weight(&mut self, id: SessionId, weight: f64) -> Result<(), NavError> {
        let s = self
            .sessions
            .get_mut(&id)
            .ok_or(NavError::UnknownSession(id))?;
        s.weight = weight;
        Ok(())
    }

    /// Reputation weight of the session's account (defenses off).
    pub fn level_weight_of(&self, id: SessionId) -> f64 {
        let user = self.sessions.get(&id).and_then(|s| s.user);
        level_weight(user.and_then(|u| self.accounts.get(u)))
    }

    pub fn account_of(&self, id: SessionId) -> Option<&UserAccount> {
        self.sessions
            .get(&id)
            .and_then(|s| s.user)
            .and_then(|u| self.accounts.get(u))
    }

    // ---- probes and traffic ---------------------------------------------

    pub fn ingest_probe(
        &mut self,
        session: SessionId,
        fix: ProbeReport,
        now: f64,
    ) -> Result<IngestOutcome, NavError> {
        if fix.t > now {
            return Err(NavError::FutureFix { t: fix.t, now });
        }
        let window_s = self.params.traffic.window_s;
        if fix.t <= now - window_s {
            return Ok(IngestOutcome::Stale);
        }
        let s = self
            .sessions
            .get_mut(&session)
            .ok_or(NavError::UnknownSession(session))?;
        if s.end_t.is_some() {
            return Err(NavError::SessionClosed(session));
        }
        let step = s
            .history
            .back()
            .map(|prev| prev.position.distance(fix.position))
            .unwrap_or(0.0);
        s.total_displacement += step;
        s.max_speed_seen = s.max_speed_seen.max(fix.speed_kph);
        s.history.push_back(fix);
        while s.history.front().is_some_and(|f| f.t < fix.t - HISTORY_S) {
            s.history.pop_front();
        }
        let weight = s.weight;
        let mut km = 0;
        if s.user.is_some() {
            s.unawarded_m += step;
            while s.unawarded_m >= 1000.0 {
                s.unawarded_m -= 1000.0;
                km += 1;
            }
        }
        if km > 0 {
            if let Some(acc) = s.user.and_then(|u| self.accounts.get_mut(u)) {
                for _ in 0..km {
                    acc.award(PointEvent::DroveKm);
                }
            }
        }

        let Some(m) = match_fix(
            &self.graph,
            fix.position,
            fix.heading,
            fix.speed_kph,
            fix.t,
            session,
        ) else {
            return Ok(IngestOutcome::NoMatch);
        };
        let idx = self
            .graph
            .segment_idx(&m.segment)
            .expect("matched segment exists");
        let st = &mut self.traffic[idx];
        st.push(WindowSample {
            session,
            t: m.t,
            speed_kph: m.speed_kph,
            offset: m.offset,
            weight,
        });
        st.prune(now, window_s);
        Ok(IngestOutcome::Matched(m))
    }

    fn qualified_lookup(&self) -> impl Fn(u64, f64) -> Option<f64> + '_ {
        |sid, d_min| {
            self.sessions
                .get(&sid)
                .filter(|s| s.total_displacement >= d_min)
                .map(|s| s.weight)
        }
    }

    pub fn traffic_state(&self, seg: &SegmentId) -> Option<&SegmentTrafficState> {
        self.graph.segment_idx(seg).map(|i| &self.traffic[i])
    }

    pub fn traffic_states(&self) -> &[SegmentTrafficState] {
        &self.traffic
    }

    pub fn window_stats(&self, seg: &SegmentId, now: f64) -> Option<WindowStats> {
        let st = self.traffic_state(seg)?;
        Some(st.stats(now, &self.params.traffic, &self.qualified_lookup()))
    }

    pub fn update_congestion(&mut self, seg: &SegmentId, now: f64) -> Option<TickOutcome> {
        let idx = self.graph.segment_idx(seg)?;
        Some(self.update_idx(idx, now))
    }

    fn update_idx(&mut self, idx: usize, now: f64) -> TickOutcome {
        let p = self.params.traffic.clone();
        self.traffic[idx].prune(now, p.window_s);
        let stats = self.traffic[idx].stats(now, &p, &self.qualified_lookup());
        self.traffic[idx].update(&stats, now, &p)
    }

    /// Evaluation tick: retire expired reports and update every segment.
    pub fn evaluate_tick(&mut self, now: f64) -> Vec<TickOutcome> {
        self.obstacles.expire(now);
        (0..self.traffic.len())
            .map(|i| self.update_idx(i, now))
            .collect()
    }

    pub fn is_congested(&self, seg: &SegmentId, now: f64) -> bool {
        self.traffic_state(seg)
            .is_some_and(|st| st.is_congested(now, &self.params.traffic))
    }

    pub fn effective_speed(&self, idx: usize, now: f64) -> f64 {
        self.traffic[idx].effective_speed(now, &self.params.traffic)
    }

    /// Fastest route under current effective speeds. Obstacle reports of any
    /// kind play no part.
    pub fn route(&self, origin: &NodeId, dest: &NodeId, now: f64) -> Result<RouteResult, NavError> {
        fastest_route(&self.graph, origin, dest, |i| self.effective_speed(i, now))
    }

    // ---- obstacle reports -------------------------------------------------

    pub fn submit_obstacle(
        &mut self,
        session: SessionId,
        kind: ObstacleKind,
        position: Point,
        note: Option<String>,
        now: f64,
    ) -> Result<ReportId, NavError> {
        let policy = &self.params.reports;
        let s = self
            .sessions
            .get_mut(&session)
            .ok_or(NavError::UnknownSession(session))?;
        if s.end_t.is_some() {
            return Err(NavError::SessionClosed(session));
        }
        while s
            .report_times
            .front()
            .is_some_and(|&t| t <= now - policy.window_s)
        {
            s.report_times.pop_front();
        }
        if s.reports_in_window(now, policy.window_s) >= policy.limit {
            return Err(NavError::RateLimited(session));
        }
        s.report_times.push_back(now);
        if let Some(acc) = s.user.and_then(|u| self.accounts.get_mut(u)) {
            acc.award(PointEvent::FiledReport);
        }
        Ok(self
            .obstacles
            .create(policy, session, kind, position, note, now))
    }

    pub fn confirm_obstacle(
        &mut self,
        session: SessionId,
        report: ReportId,
        now: f64,
    ) -> Result<VoteOutcome, NavError> {
        let user = self
            .sessions
            .get(&session)
            .ok_or(NavError::UnknownSession(session))?
            .user;
        let out = self
            .obstacles
            .confirm(&self.params.reports, session, report, now)?;
        if let Some(acc) = user.and_then(|u| self.accounts.get_mut(u)) {
            acc.award(PointEvent::ConfirmedReport);
        }
        Ok(out)
    }

    pub fn invalidate_obstacle(
        &mut self,
        session: SessionId,
        report: ReportId,
        now: f64,
    ) -> Result<VoteOutcome, NavError> {
        if !self.sessions.contains_key(&session) {
            return Err(NavError::UnknownSession(session));
        }
        self.obstacles
            .invalidate(&self.params.reports, session, report, now)
    }

    pub fn obstacles(&self) -> &ObstacleBoard {
        &self.obstacles
    }

    pub fn active_reports(&self, now: f64) -> impl Iterator<Item = &ObstacleReport> {
        self.obstacles.active(now)
    }

    pub fn active_reports_in(&self, viewport: &Viewport, now: f64) -> Vec<&ObstacleReport> {
        self.obstacles
            .active(now)
            .filter(|r| viewport.contains(r.position))
            .collect()
    }

    // ---- live map ---------------------------------------------------------

    /// Fellow users shown to `viewer` in `viewport`. Each user appears with
    /// probability 1/S per epoch, at a position up to five minutes stale and
    /// with a distorted speed; profile fields are exact.
    pub fn live_map(&self, viewer: SessionId, viewport: &Viewport, now: f64) -> Vec<LiveMapEntry> {
        let lp = &self.params.live;
        let seed = self.params.seed;
        let epoch = livemap::epoch_of(now, lp);
        let viewer_user = self.sessions.get(&viewer).and_then(|s| s.user);
        let mut out = Vec::new();
        for s in self.sessions.values() {
            if s.session_id == viewer || !s.is_active() {
                continue;
            }
            if viewer_user.is_some() && s.user == viewer_user {
                continue;
            }
            let Some(current) = s.last_fix() else {
                continue;
            };
            if !viewport.contains(current.position) {
                continue;
            }
            if !livemap::is_visible(seed, viewer, s.session_id, epoch, lp) {
                continue;
            }
            let shown_at = now - livemap::staleness(seed, s.session_id, epoch, lp);
            let shown = s
                .history
                .iter()
                .rev()
                .find(|f| f.t <= shown_at)
                .or_else(|| s.history.front())
                .expect("history non-empty");
            let account = s.user.and_then(|u| self.accounts.get(u));
            out.push(LiveMapEntry {
                session: s.session_id,
                username: account.map(|a| a.username.clone()),
                shown_position: shown.position,
                shown_speed: current.speed_kph
                    * livemap::speed_factor(seed, viewer, s.session_id, epoch, lp),
                points: account.map_or(0, |a| a.points),
                level: account.map_or(1, |a| a.level().number()),
                seniority_s: account.map_or(0.0, |a| now - a.created_t),
            });
        }
        out
    }
}
