//! Per-segment sliding-window statistics and relative congestion inference.

use std::collections::{BTreeMap, VecDeque};

use crate::geomap::SegmentId;

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    pub session: u64,
    pub t: f64,
    pub speed_kph: f64,
    pub offset: f64,
    /// Trust weight of the session when the sample was ingested.
    pub weight: f64,
}

/// Tunables of the inference model. Defaults are model parameters, not
/// measured properties of any production service.
#[derive(Debug, Clone, PartialEq)]
pub struct TrafficParams {
    /// Retention horizon W for samples and for counting contributing users.
    pub window_s: f64,
    /// Horizon of the "current average speed".
    pub speed_window_s: f64,
    /// Samples at or below this speed are crawling and excluded from the average.
    pub v_crawl_kph: f64,
    /// Sessions that have not moved this far do not count as drivers.
    pub d_min_m: f64,
    pub alpha: f64,
    /// Weighted users needed before the baseline learns.
    pub learn_min_count: f64,
    /// Segments whose baseline is at or below this never flag.
    pub b_min_kph: f64,
    pub theta: f64,
    /// Weighted users needed to flag.
    pub w_min: f64,
    pub t_persist_s: f64,
}

impl Default for TrafficParams {
    fn default() -> Self {
        TrafficParams {
            window_s: 300.0,
            speed_window_s: 60.0,
            v_crawl_kph: 5.0,
            d_min_m: 100.0,
            alpha: 0.3,
            learn_min_count: 3.0,
            b_min_kph: 25.0,
            theta: 0.5,
            w_min: 10.0,
            t_persist_s: 1200.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WindowStats {
    pub moving_avg: Option<f64>,
    /// Sum of trust weights over distinct qualified sessions in the window.
    pub qualified_count: f64,
    pub samples: usize,
    /// Newest sample time from a qualified session with non-zero weight.
    pub newest_qualified_t: Option<f64>,
}

/// What the engine knows about a session when scoring a window.
pub trait SessionLookup {
    /// Trust weight if the session has moved at least `d_min_m`, else `None`.
    fn qualified_weight(&self, session: u64, d_min_m: f64) -> Option<f64>;
}

impl<F: Fn(u64, f64) -> Option<f64>> SessionLookup for F {
    fn qualified_weight(&self, session: u64, d_min_m: f64) -> Option<f64> {
        self(session, d_min_m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TickOutcome {
    Idle,
    Learned,
    Flagged,
    Maintained,
    Cleared,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentTrafficState {
    pub segment: SegmentId,
    pub window: VecDeque<WindowSample>,
    pub baseline: f64,
    pub congested: bool,
    pub congestion_avg: f64,
    pub last_qualifying_t: f64,
}

impl SegmentTrafficState {
    pub fn new(segment: SegmentId, initial_baseline: f64) -> Self {
        assert!(initial_baseline > 0.0);
        SegmentTrafficState {
            segment,
            window: VecDeque::new(),
            baseline: initial_baseline,
            congested: false,
            congestion_avg: 0.0,
            last_qualifying_t: f64::NEG_INFINITY,
        }
    }

    pub fn push(&mut self, sample: WindowSample) {
        self.window.push_back(sample);
    }

    /// Drop samples that can no longer fall inside the retention window.
    pub fn prune(&mut self, now: f64, window_s: f64) {
        while self.window.front().is_some_and(|s| s.t <= now - window_s) {
            self.window.pop_front();
        }
    }

    pub fn in_window<'a>(
        &'a self,
        now: f64,
        horizon_s: f64,
    ) -> impl Iterator<Item = &'a WindowSample> + 'a {
        self.window
            .iter()
            .filter(move |s| s.t > now - horizon_s && s.t <= now)
    }

    pub fn stats(&self, now: f64, p: &TrafficParams, sessions: &impl SessionLookup) -> WindowStats {
        let (mut sum, mut n) = (0.0, 0usize);
        for s in self.in_window(now, p.speed_window_s) {
            if s.speed_kph > p.v_crawl_kph {
                sum += s.speed_kph;
                n += 1;
            }
        }
        let moving_avg = (n > 0).then(|| sum / n as f64);

        let mut newest: BTreeMap<u64, f64> = BTreeMap::new();
        let mut samples = 0;
        for s in self.in_window(now, p.window_s) {
            samples += 1;
            let e = newest.entry(s.session).or_insert(s.t);
            *e = e.max(s.t);
        }
        let mut qualified_count = 0.0;
        let mut newest_qualified_t: Option<f64> = None;
        for (&session, &t) in &newest {
            if let Some(w) = sessions.qualified_weight(session, p.d_min_m) {
                qualified_count += w;
                if w > 0.0 {
                    newest_qualified_t = Some(newest_qualified_t.map_or(t, |cur: f64| cur.max(t)));
                }
            }
        }
        WindowStats {
            moving_avg,
            qualified_count,
            samples,
            newest_qualified_t,
        }
    }

    /// One evaluation tick. The flag test uses the baseline as it stood
    /// before this tick; the baseline only learns on ticks that neither
    /// flag nor sit inside a congestion episode.
    pub fn update(&mut self, stats: &WindowStats, now: f64, p: &TrafficParams) -> TickOutcome {
        if self.congested {
            let refresh = match stats.moving_avg {
                Some(avg) => avg < p.theta * self.baseline,
                None => stats.newest_qualified_t.is_some(),
            };
            let mut outcome = TickOutcome::Idle;
            if refresh {
                if let Some(t) = stats.newest_qualified_t {
                    self.last_qualifying_t = self.last_qualifying_t.max(t);
                    outcome = TickOutcome::Maintained;
                }
            }
            if now - self.last_qualifying_t > p.t_persist_s {
                self.congested = false;
                return TickOutcome::Cleared;
            }
            return outcome;
        }

        let Some(avg) = stats.moving_avg else {
            return TickOutcome::Idle;
        };
        if self.baseline > p.b_min_kph
            && avg < p.theta * self.baseline
            && stats.qualified_count >= p.w_min
        {
            self.congested = true;
            self.congestion_avg = avg.round();
            self.last_qualifying_t = stats.newest_qualified_t.unwrap_or(now);
            return TickOutcome::Flagged;
        }
        if stats.qualified_count >= p.learn_min_count {
            self.baseline = (1.0 - p.alpha) * self.baseline + p.alpha * avg;
            return TickOutcome::Learned;
        }
        TickOutcome::Idle
    }

    /// Congestion as seen by queries at `now`; expiry is applied lazily so a
    /// jam never outlives `last_qualifying_t + t_persist`.
    pub fn is_congested(&self, now: f64, p: &TrafficParams) -> bool {
        self.congested && now - self.last_qualifying_t <= p.t_persist_s
    }

    pub fn effective_speed(&self, now: f64, p: &TrafficParams) -> f64 {
        if self.is_congested(now, p) {
            self.congestion_avg
        } else {
            self.baseline
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_qualified(w: f64) -> impl Fn(u64, f64) -> Option<f64> {
        move |_, _| Some(w)
    }

    fn state(baseline: f64) -> SegmentTrafficState {
        SegmentTrafficState::new("s".into(), baseline)
    }

    fn sample(session: u64, t: f64, speed: f64) -> WindowSample {
        WindowSample {
            session,
            t,
            speed_kph: speed,
            offset: 0.0,
            weight: 1.0,
        }
    }

    #[test]
    fn empty_window() {
        let st = state(20.0);
        let stats = st.stats(100.0, &TrafficParams::default(), &all_qualified(1.0));
        assert_eq!(stats.moving_avg, None);
        assert_eq!(stats.qualified_count, 0.0);
    }

    #[test]
    fn stationary_sessions_do_not_count() {
        let mut st = state(20.0);
        for s in 0..15 {
            for t in 0..300 {
                st.push(sample(s, t as f64, 0.0));
            }
        }
        // nobody has moved
        let stats = st.stats(299.0, &TrafficParams::default(), &|_, _| None);
        assert_eq!(stats.moving_avg, None);
        assert_eq!(stats.qualified_count, 0.0);
        assert_eq!(stats.samples, 4500);
    }

    #[test]
    fn stop_and_go_average_ignores_halts() {
        let mut st = state(20.0);
        for s in 0..15 {
            for t in 0..300u32 {
                let v = if t % 20 < 10 { 8.0 } else { 0.0 };
                st.push(sample(s, t as f64, v));
            }
        }
        let stats = st.stats(299.0, &TrafficParams::default(), &all_qualified(1.5));
        assert_eq!(stats.moving_avg, Some(8.0));
        assert_eq!(stats.qualified_count, 22.5);
    }

    #[test]
    fn ewma_recurrence() {
        // independent recurrence: b_{k+1} = 0.7 b_k + 0.3 * 70
        let mut expected = vec![20.0_f64];
        for _ in 0..4 {
            let b = *expected.last().unwrap();
            expected.push(b - 0.3 * (b - 70.0));
        }
        let p = TrafficParams::default();
        let mut st = state(20.0);
        let stats = WindowStats {
            moving_avg: Some(70.0),
            qualified_count: 22.5,
            samples: 100,
            newest_qualified_t: Some(0.0),
        };
        let mut got = vec![st.baseline];
        for k in 0..4 {
            assert_eq!(st.update(&stats, 60.0 * k as f64, &p), TickOutcome::Learned);
            got.push(st.baseline);
        }
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1e-9, "{got:?} vs {expected:?}");
        }
        assert!((got[4] - 58.0).abs() < 0.05);
        assert!((got[1] - 35.0).abs() < 1e-12);
    }

    #[test]
    fn relative_drop_flags() {
        let p = TrafficParams::default();
        let mut st = state(58.0);
        let stats = WindowStats {
            moving_avg: Some(8.0),
            qualified_count: 22.5,
            samples: 100,
            newest_qualified_t: Some(1259.0),
        };
        assert_eq!(st.update(&stats, 1260.0, &p), TickOutcome::Flagged);
        assert!(st.congested);
        assert_eq!(st.congestion_avg, 8.0);
        assert_eq!(st.baseline, 58.0);
        assert_eq!(st.last_qualifying_t, 1259.0);
    }

    #[test]
    fn low_speed_zone_never_flags() {
        let p = TrafficParams::default();
        let mut st = state(20.0);
        let stats = WindowStats {
            moving_avg: Some(8.0),
            qualified_count: 1000.0,
            samples: 100,
            newest_qualified_t: Some(0.0),
        };
        for k in 0..100 {
            assert_ne!(st.update(&stats, 60.0 * k as f64, &p), TickOutcome::Flagged);
        }
        assert!(!st.congested);
    }

    #[test]
    fn too_few_users_do_not_flag() {
        let p = TrafficParams::default();
        let mut st = state(60.0);
        let stats = WindowStats {
            moving_avg: Some(8.0),
            qualified_count: 7.5,
            samples: 100,
            newest_qualified_t: Some(0.0),
        };
        st.update(&stats, 60.0, &p);
        assert!(!st.congested);
    }

    #[test]
    fn persistence_and_clearing() {
        let p = TrafficParams::default();
        let mut st = state(60.0);
        st.congested = true;
        st.congestion_avg = 8.0;
        st.last_qualifying_t = 1000.0;
        // crawl-only evidence keeps the jam alive
        let crawl = WindowStats {
            moving_avg: None,
            qualified_count: 22.5,
            samples: 50,
            newest_qualified_t: Some(2000.0),
        };
        assert_eq!(st.update(&crawl, 2000.0, &p), TickOutcome::Maintained);
        assert_eq!(st.last_qualifying_t, 2000.0);
        let empty = WindowStats::default();
        assert!(st.is_congested(3200.0, &p));
        assert!(!st.is_congested(3200.5, &p));
        assert_eq!(st.update(&empty, 3180.0, &p), TickOutcome::Idle);
        assert_eq!(st.update(&empty, 3240.0, &p), TickOutcome::Cleared);
        assert!(!st.congested);
        assert_eq!(st.effective_speed(3240.0, &p), 60.0);
    }

    #[test]
    fn free_flow_does_not_refresh() {
        let p = TrafficParams::default();
        let mut st = state(60.0);
        st.congested = true;
        st.last_qualifying_t = 0.0;
        let fast = WindowStats {
            moving_avg: Some(55.0),
            qualified_count: 22.5,
            samples: 50,
            newest_qualified_t: Some(600.0),
        };
        st.update(&fast, 600.0, &p);
        assert_eq!(st.last_qualifying_t, 0.0);
    }

    #[test]
    fn prune_drops_old_samples() {
        let mut st = state(20.0);
        for t in 0..10 {
            st.push(sample(1, t as f64 * 100.0, 30.0));
        }
        st.prune(900.0, 300.0);
        assert_eq!(st.window.front().unwrap().t, 700.0);
    }
}
