//! Per-tick metrics, the run summary, and their text renderings.

use std::fmt::Write as _;

use crate::geomap::SegmentId;
use crate::navcore::{Engine, RouteResult, SessionId, Viewport};
use crate::sentinel::TrustAssessment;
use crate::tracegen::SpeedPattern;

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentRow {
    pub segment: SegmentId,
    pub moving_avg: Option<f64>,
    pub baseline: f64,
    pub congested: bool,
    pub congestion_avg: f64,
    pub qualified_count: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub t: f64,
    pub active_reports: usize,
    pub route: Option<RouteResult>,
    pub segments: Vec<SegmentRow>,
}

impl TickRecord {
    /// Snapshot the engine right after a tick has been evaluated.
    pub fn capture(
        engine: &Engine,
        now: f64,
        viewport: &Viewport,
        od: Option<(&crate::geomap::NodeId, &crate::geomap::NodeId)>,
    ) -> Self {
        let segments = engine
            .traffic_states()
            .iter()
            .map(|st| {
                let stats = engine.window_stats(&st.segment, now).unwrap_or_default();
                SegmentRow {
                    segment: st.segment.clone(),
                    moving_avg: stats.moving_avg,
                    baseline: st.baseline,
                    congested: engine.is_congested(&st.segment, now),
                    congestion_avg: st.congestion_avg,
                    qualified_count: stats.qualified_count,
                    samples: stats.samples,
                }
            })
            .collect();
        TickRecord {
            t: now,
            active_reports: engine.active_reports_in(viewport, now).len(),
            route: od.and_then(|(o, d)| engine.route(o, d, now).ok()),
            segments,
        }
    }

    pub fn is_congested(&self, seg: &SegmentId) -> bool {
        self.segments
            .iter()
            .any(|r| &r.segment == seg && r.congested)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightRow {
    pub t: f64,
    pub label: String,
    pub assessment: TrustAssessment,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsLog {
    pub header: Vec<(String, String)>,
    pub ticks: Vec<TickRecord>,
    pub weights: Vec<WeightRow>,
}

pub const METRICS_COLUMNS: &str = "t,segment,moving_avg,baseline,congested,congestion_avg,qualified_count,samples,active_reports,route,route_length_m,route_eta_s";

impl MetricsLog {
    pub fn push(&mut self, tick: TickRecord) {
        debug_assert!(self.ticks.last().is_none_or(|last| last.t < tick.t));
        self.ticks.push(tick);
    }

    pub fn render_header(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.header {
            let _ = writeln!(out, "# {k}={v}");
        }
        out
    }

    /// Data rows without the `#` header, one per (tick, segment).
    pub fn render_rows(&self) -> String {
        let mut out = String::new();
        for tick in &self.ticks {
            let (route, len, eta) = match &tick.route {
                Some(r) => (r.route_id(), r.length.to_string(), r.eta.to_string()),
                None => (String::new(), String::new(), String::new()),
            };
            for s in &tick.segments {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{},{},{}",
                    tick.t,
                    s.segment,
                    s.moving_avg.map(|v| v.to_string()).unwrap_or_default(),
                    s.baseline,
                    u8::from(s.congested),
                    s.congestion_avg,
                    s.qualified_count,
                    s.samples,
                    tick.active_reports,
                    route,
                    len,
                    eta
                );
            }
        }
        out
    }

    pub fn render_csv(&self) -> String {
        format!(
            "{}{METRICS_COLUMNS}\n{}",
            self.render_header(),
            self.render_rows()
        )
    }

    pub fn render_weights_csv(&self) -> String {
        let mut out = String::from("t,label,session,level_weight,carrier,carrier_factor,phone_factor,login_factor,ip_factor,behavior_factor,final_weight\n");
        for w in &self.weights {
            let a = &w.assessment;
            let _ = writeln!(
                out,
                "{},{},{},{},{:?},{},{},{},{},{},{}",
                w.t,
                w.label,
                a.session,
                a.level_weight,
                a.carrier,
                a.carrier_factor,
                a.phone_factor,
                a.login_factor,
                a.ip_factor,
                a.behavior_factor,
                a.final_weight
            );
        }
        out
    }

    /// Congestion flags of `seg` as `(t, congested)` per tick.
    pub fn flag_series(&self, seg: &SegmentId) -> Vec<(f64, bool)> {
        self.ticks
            .iter()
            .map(|t| (t.t, t.is_congested(seg)))
            .collect()
    }

    pub fn all_flags(&self) -> Vec<(f64, Vec<bool>)> {
        self.ticks
            .iter()
            .map(|t| (t.t, t.segments.iter().map(|s| s.congested).collect()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RouteSummary {
    pub t: f64,
    pub route: RouteResult,
}

impl RouteSummary {
    pub fn render(&self) -> String {
        format!(
            "{} {} m / {} s",
            self.route.route_id(),
            self.route.length.round(),
            self.route.eta.round()
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSummary {
    pub segment: SegmentId,
    pub first_congested_t: Option<f64>,
    pub cleared_t: Option<f64>,
    pub congestion_avg: Option<f64>,
    pub congested_ticks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BotPattern {
    pub label: String,
    pub spawn_t: f64,
    pub pattern: SpeedPattern,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Summary {
    pub scenario: String,
    pub seed: u64,
    pub hash: String,
    pub attack: String,
    pub ticks: usize,
    pub targets: Vec<SegmentSummary>,
    /// Ticks on which any segment of the map was congested.
    pub congested_ticks: usize,
    pub last_bot_fix_t: Option<f64>,
    pub pre_route: Option<RouteSummary>,
    pub post_route: Option<RouteSummary>,
    pub reports_submitted: u64,
    pub active_reports_max: usize,
    pub active_reports_final: usize,
    pub benign_reports: usize,
    pub benign_removed: usize,
    pub tracking_epochs: Option<(usize, usize)>,
    pub carrier_checks: u64,
    pub carrier_failures: usize,
    pub min_benign_weight_ratio: Option<f64>,
    pub mean_bot_weight_final: Option<f64>,
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "-".to_string(), T::to_string)
}

impl Summary {
    pub fn route_flipped(&self) -> bool {
        match (&self.pre_route, &self.post_route) {
            (Some(a), Some(b)) => a.route.segments != b.route.segments,
            _ => false,
        }
    }

    pub fn removed_fraction(&self) -> Option<f64> {
        (self.benign_reports > 0).then(|| self.benign_removed as f64 / self.benign_reports as f64)
    }

    pub fn sighting_rate(&self) -> Option<f64> {
        self.tracking_epochs
            .map(|(n, hit)| if n == 0 { 0.0 } else { hit as f64 / n as f64 })
    }

    pub fn render(&self) -> String {
        let mut o = String::new();
        let _ = writeln!(o, "scenario: {}", self.scenario);
        let _ = writeln!(o, "seed: {}", self.seed);
        let _ = writeln!(o, "scenario_hash: {}", self.hash);
        let _ = writeln!(o, "attack: {}", self.attack);
        let _ = writeln!(o, "ticks: {}", self.ticks);
        let _ = writeln!(
            o,
            "congestion_observed: {}",
            yes_no(self.congested_ticks > 0)
        );
        let _ = writeln!(o, "congested_ticks: {}", self.congested_ticks);
        for s in &self.targets {
            let _ = writeln!(
                o,
                "target {}: congested={} first_flag_t={} cleared_t={} congestion_avg_kph={} congested_ticks={}",
                s.segment,
                yes_no(s.first_congested_t.is_some()),
                opt(&s.first_congested_t),
                opt(&s.cleared_t),
                opt(&s.congestion_avg),
                s.congested_ticks
            );
        }
        let _ = writeln!(o, "last_bot_fix_t: {}", opt(&self.last_bot_fix_t));
        if let (Some(last), Some(s)) = (self.last_bot_fix_t, self.targets.first()) {
            if let Some(c) = s.cleared_t {
                let _ = writeln!(o, "persistence_after_last_fix_s: {}", c - last);
            }
        }
        if let Some(r) = &self.pre_route {
            let _ = writeln!(o, "pre_route: {}", r.render());
        }
        if let Some(r) = &self.post_route {
            let _ = writeln!(o, "post_route: {} (t={})", r.render(), r.t);
        }
        if self.pre_route.is_some() {
            let _ = writeln!(o, "route_flipped: {}", yes_no(self.route_flipped()));
        }
        let _ = writeln!(o, "reports_submitted: {}", self.reports_submitted);
        let _ = writeln!(o, "active_reports_max: {}", self.active_reports_max);
        let _ = writeln!(o, "active_reports_final: {}", self.active_reports_final);
        if let Some(f) = self.removed_fraction() {
            let _ = writeln!(
                o,
                "benign_reports_removed: {}/{} ({:.3})",
                self.benign_removed, self.benign_reports, f
            );
        }
        if let (Some((n, hit)), Some(rate)) = (self.tracking_epochs, self.sighting_rate()) {
            let _ = writeln!(o, "tracking_epochs_with_sighting: {hit}/{n} ({rate:.3})");
        }
        let _ = writeln!(o, "carrier_checks: {}", self.carrier_checks);
        let _ = writeln!(o, "carrier_failures: {}", self.carrier_failures);
        if let Some(r) = self.min_benign_weight_ratio {
            let _ = writeln!(o, "min_benign_weight_ratio: {r:.4}");
        }
        if let Some(w) = self.mean_bot_weight_final {
            let _ = writeln!(o, "mean_bot_weight_final: {w:.4}");
        }
        o
    }
}

/// Commanded speed of every bot for every second of its pattern.
pub fn render_speeds_csv(bots: &[BotPattern]) -> String {
    let mut out = String::from("t,bot,commanded_kph\n");
    for b in bots {
        for s in 0..b.pattern.total_duration_s() {
            if let Some(v) = b.pattern.commanded_speed_at(s) {
                let _ = writeln!(out, "{},{},{}", b.spawn_t + f64::from(s), b.label, v);
            }
        }
    }
    out
}

/// Summaries of `targets` derived from the tick log.
pub fn summarize_targets(log: &MetricsLog, targets: &[SegmentId]) -> Vec<SegmentSummary> {
    targets
        .iter()
        .map(|seg| {
            let mut first = None;
            let mut cleared = None;
            let mut avg = None;
            let mut count = 0;
            for tick in &log.ticks {
                let Some(row) = tick.segments.iter().find(|r| &r.segment == seg) else {
                    continue;
                };
                if row.congested {
                    count += 1;
                    if first.is_none() {
                        first = Some(tick.t);
                        avg = Some(row.congestion_avg);
                    }
                } else if first.is_some() && cleared.is_none() {
                    cleared = Some(tick.t);
                }
            }
            SegmentSummary {
                segment: seg.clone(),
                first_congested_t: first,
                cleared_t: cleared,
                congestion_avg: avg,
                congested_ticks: count,
            }
        })
        .collect()
}

/// Lowest ratio of final to reputation-only weight among `sessions`.
pub fn min_weight_ratio(log: &MetricsLog, sessions: &[SessionId]) -> Option<f64> {
    log.weights
        .iter()
        .filter(|w| sessions.contains(&w.assessment.session) && w.assessment.level_weight > 0.0)
        .map(|w| w.assessment.final_weight / w.assessment.level_weight)
        .min_by(f64::total_cmp)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(seg: &str, congested: bool) -> SegmentRow {
        SegmentRow {
            segment: seg.into(),
            moving_avg: None,
            baseline: 20.0,
            congested,
            congestion_avg: if congested { 8.0 } else { 0.0 },
            qualified_count: 0.0,
            samples: 0,
        }
    }

    fn log(flags: &[bool]) -> MetricsLog {
        let mut l = MetricsLog::default();
        for (i, &f) in flags.iter().enumerate() {
            l.push(TickRecord {
                t: 60.0 * i as f64,
                active_reports: 0,
                route: None,
                segments: vec![row("a", f)],
            });
        }
        l
    }

    #[test]
    fn empty_log_is_header_only() {
        let mut l = MetricsLog::default();
        l.header.push(("seed".into(), "1".into()));
        assert_eq!(l.render_csv(), format!("# seed=1\n{METRICS_COLUMNS}\n"));
    }

    #[test]
    fn target_summary_finds_episode() {
        let l = log(&[false, true, true, false, true]);
        let s = &summarize_targets(&l, &["a".into()])[0];
        assert_eq!(s.first_congested_t, Some(60.0));
        assert_eq!(s.cleared_t, Some(180.0));
        assert_eq!(s.congested_ticks, 3);
        assert_eq!(s.congestion_avg, Some(8.0));
    }

    #[test]
    fn rows_render_empty_average_as_blank() {
        let l = log(&[false]);
        assert_eq!(l.render_rows(), "0,a,,20,0,0,0,0,0,,,\n");
    }

    #[test]
    fn speeds_follow_pattern() {
        let bots = [BotPattern {
            label: "bot0".into(),
            spawn_t: 10.0,
            pattern: "70:2;8:1".parse().unwrap(),
        }];
        assert_eq!(
            render_speeds_csv(&bots),
            "t,bot,commanded_kph\n10,bot0,70\n11,bot0,70\n12,bot0,8\n"
        );
    }
}
