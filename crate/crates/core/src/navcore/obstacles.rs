//! Obstacle reports: creation, TTL, confirmation, invalidation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::geomap::Point;

use super::NavError;

pub type ReportId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ObstacleKind {
    Police,
    Hazard,
    TrafficJam,
    Accident,
}

impl ObstacleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ObstacleKind::Police => "police",
            ObstacleKind::Hazard => "hazard",
            ObstacleKind::TrafficJam => "traffic_jam",
            ObstacleKind::Accident => "accident",
        }
    }
}

impl fmt::Display for ObstacleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ObstacleKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "police" => Ok(ObstacleKind::Police),
            "hazard" => Ok(ObstacleKind::Hazard),
            "traffic_jam" => Ok(ObstacleKind::TrafficJam),
            "accident" => Ok(ObstacleKind::Accident),
            other => Err(format!("unknown obstacle kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportPolicy {
    /// Reports one session may file per `window_s`.
    pub limit: usize,
    pub window_s: f64,
    pub ttl_s: f64,
    pub confirm_extension_s: f64,
    /// Confirmations never push expiry past `created_t + max_life_s`.
    pub max_life_s: f64,
}

impl Default for ReportPolicy {
    fn default() -> Self {
        ReportPolicy {
            limit: 3,
            window_s: 600.0,
            ttl_s: 1200.0,
            confirm_extension_s: 600.0,
            max_life_s: 3600.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleReport {
    pub report_id: ReportId,
    pub kind: ObstacleKind,
    pub position: Point,
    pub note: Option<String>,
    pub reporter_session: u64,
    pub created_t: f64,
    pub confirmations: u32,
    pub invalidations: u32,
    pub expires_t: f64,
    voters: BTreeSet<u64>,
}

impl ObstacleReport {
    pub fn is_active(&self, now: f64) -> bool {
        now < self.expires_t
    }

    fn removal_threshold(&self) -> u32 {
        2.max(self.confirmations + 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VoteOutcome {
    Updated(ObstacleReport),
    Removed(ReportId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Vote {
    Confirm,
    Invalidate,
}

#[derive(Debug, Clone, Default)]
pub struct ObstacleBoard {
    reports: BTreeMap<ReportId, ObstacleReport>,
    next_id: ReportId,
    pub submitted: u64,
    pub expired: u64,
    pub removed: u64,
}

impl ObstacleBoard {
    pub(crate) fn create(
        &mut self,
        policy: &ReportPolicy,
        reporter_session: u64,
        kind: ObstacleKind,
        position: Point,
        note: Option<String>,
        now: f64,
    ) -> ReportId {
        let report_id = self.next_id;
        self.next_id += 1;
        self.submitted += 1;
        self.reports.insert(
            report_id,
            ObstacleReport {
                report_id,
                kind,
                position,
                note,
                reporter_session,
                created_t: now,
                confirmations: 0,
                invalidations: 0,
                expires_t: now + policy.ttl_s,
                voters: BTreeSet::new(),
            },
        );
        report_id
    }

    fn vote(
        &mut self,
        policy: &ReportPolicy,
        session: u64,
        id: ReportId,
        vote: Vote,
        now: f64,
    ) -> Result<VoteOutcome, NavError> {
        let report = self
            .reports
            .get_mut(&id)
            .filter(|r| r.is_active(now))
            .ok_or(NavError::UnknownReport(id))?;
        if report.reporter_session == session {
            return Err(NavError::SelfVote(id));
        }
        if !report.voters.insert(session) {
            return Err(NavError::DuplicateVote(id));
        }
        match vote {
            Vote::Confirm => {
                report.confirmations += 1;
                report.expires_t = (report.expires_t + policy.confirm_extension_s)
                    .min(report.created_t + policy.max_life_s);
            }
            Vote::Invalidate => {
                report.invalidations += 1;
                if report.invalidations >= report.removal_threshold() {
                    self.reports.remove(&id);
                    self.removed += 1;
                    return Ok(VoteOutcome::Removed(id));
                }
            }
        }
        Ok(VoteOutcome::Updated(report.clone()))
    }

    pub(crate) fn confirm(
        &mut self,
        policy: &ReportPolicy,
        session: u64,
        id: ReportId,
        now: f64,
    ) -> Result<VoteOutcome, NavError> {
        self.vote(policy, session, id, Vote::Confirm, now)
    }

    pub(crate) fn invalidate(
        &mut self,
        policy: &ReportPolicy,
        session: u64,
        id: ReportId,
        now: f64,
    ) -> Result<VoteOutcome, NavError> {
        self.vote(policy, session, id, Vote::Invalidate, now)
    }

    /// Retire reports whose TTL has run out. Returns how many expired.
    pub fn expire(&mut self, now: f64) -> usize {
        let before = self.reports.len();
        self.reports.retain(|_, r| r.is_active(now));
        let n = before - self.reports.len();
        self.expired += n as u64;
        n
    }

    pub fn active(&self, now: f64) -> impl Iterator<Item = &ObstacleReport> {
        self.reports.values().filter(move |r| r.is_active(now))
    }

    pub fn get(&self, id: ReportId) -> Option<&ObstacleReport> {
        self.reports.get(&id)
    }

    /// Reports still held (active or awaiting `expire`).
    pub fn held(&self) -> usize {
        self.reports.len()
    }
}
