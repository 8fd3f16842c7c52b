use approx::assert_relative_eq;
use proptest::prelude::*;

use sybilnav_core::fixtures;
use sybilnav_core::geomap::{load_map, match_fix, polyline_length, Point, RoadGraph};
use sybilnav_core::navcore::travel_time_s;
use sybilnav_core::sentinel::{ip_cluster_factor, pearson, SentinelParams};
use sybilnav_core::sim::Scenario;
use sybilnav_core::tracegen::{generate_trace, Phase, SpeedPattern};

fn campus() -> RoadGraph {
    load_map(fixtures::CAMPUS_MAP).unwrap()
}

proptest! {
    #[test]
    fn on_road_fix_matches_its_own_segment(idx in 0usize..12, frac in 0.01f64..0.99) {
        let g = campus();
        let seg = &g.segments()[idx];
        let offset = frac * seg.length;
        let (pos, heading) = seg.point_at(offset);
        let m = match_fix(&g, pos, heading, 30.0, 5.0, 1).expect("on-road fix matches");
        prop_assert_eq!(&m.segment, &seg.id);
        prop_assert!((m.offset - offset).abs() < 1e-6);
    }

    #[test]
    fn far_fix_never_matches(x in -5000.0f64..5000.0, heading in 0.0f64..360.0) {
        let g = campus();
        let p = Point { x, y: 2000.0 };
        prop_assert!(match_fix(&g, p, heading, 30.0, 0.0, 1).is_none());
    }

    #[test]
    fn cruise_trace_steps_at_commanded_speed(kph in 1.0f64..130.0, secs in 2u32..60) {
        let line = vec![Point { x: 0.0, y: 0.0 }, Point { x: 0.0, y: 10_000.0 }];
        let pattern = SpeedPattern::new(vec![Phase::cruise(kph, secs)], false).unwrap();
        let trace = generate_trace(&line, &pattern, 100.0, None).unwrap();
        prop_assert_eq!(trace.fixes.len(), secs as usize);
        for (i, pair) in trace.fixes.windows(2).enumerate() {
            prop_assert_eq!(pair[0].t, 100.0 + i as f64);
            let step = pair[0].pos.distance(pair[1].pos);
            prop_assert!((step - kph / 3.6).abs() < 1e-9);
        }
        prop_assert!((trace.fixes[0].pos.y - kph / 3.6).abs() < 1e-9);
    }

    #[test]
    fn pearson_is_symmetric_and_bounded(
        a in prop::collection::vec(prop::option::of(0.0f64..100.0), 60..200),
        b in prop::collection::vec(prop::option::of(0.0f64..100.0), 60..200),
    ) {
        let ab = pearson(&a, &b, 10);
        let ba = pearson(&b, &a, 10);
        prop_assert_eq!(ab.is_some(), ba.is_some());
        if let (Some(x), Some(y)) = (ab, ba) {
            prop_assert!((x - y).abs() < 1e-12);
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&x));
        }
    }

    #[test]
    fn affine_copy_correlates_perfectly(
        a in prop::collection::vec(0.0f64..100.0, 60..200),
        scale in 0.1f64..10.0,
        shift in -50.0f64..50.0,
    ) {
        let xs: Vec<Option<f64>> = a.iter().map(|&v| Some(v)).collect();
        let ys: Vec<Option<f64>> = a.iter().map(|&v| Some(scale * v + shift)).collect();
        if let Some(r) = pearson(&xs, &ys, 60) {
            prop_assert!((r - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn crowding_an_address_never_raises_its_factor(n in 1usize..40) {
        let p = SentinelParams::default();
        let ips: Vec<(u64, &str)> = (0..n as u64).map(|s| (s, "203.0.113.9")).collect();
        let more: Vec<(u64, &str)> = (0..=n as u64).map(|s| (s, "203.0.113.9")).collect();
        let f = ip_cluster_factor(&ips, &p)[&0];
        let g = ip_cluster_factor(&more, &p)[&0];
        prop_assert!(g <= f);
        prop_assert!(f <= 1.0 && f > 0.0);
    }
}

#[test]
fn travel_time_is_length_over_speed() {
    assert_relative_eq!(travel_time_s(500.0, 30.0), 60.0);
    assert_relative_eq!(travel_time_s(800.0, 24.0), 120.0);
}

#[test]
fn campus_segment_lengths_follow_geometry() {
    let g = campus();
    for s in g.segments() {
        assert_relative_eq!(s.length, polyline_length(&s.points), max_relative = 1e-12);
    }
    let total: f64 = ["s07", "s08"]
        .iter()
        .map(|id| g.segment(&(*id).into()).unwrap().length)
        .sum();
    assert_relative_eq!(total, 1600.0);
}

#[test]
fn scenario_hash_tracks_content_not_name() {
    let text = fixtures::scenario_by_name("fig_speedgraph").unwrap();
    let a = Scenario::parse("one", text).unwrap();
    let b = Scenario::parse("two", text).unwrap();
    assert_eq!(a.hash(), b.hash());
    let c = Scenario::parse_with_overrides("one", text, &["engine.theta=0.4".to_string()]).unwrap();
    assert_ne!(a.hash(), c.hash());
}

#[test]
fn unknown_override_key_is_rejected() {
    let text = fixtures::scenario_by_name("fig_speedgraph").unwrap();
    let err = Scenario::parse_with_overrides("x", text, &["attack.wobble=3".to_string()]);
    assert!(err.is_err());
}

#[test]
fn every_shipped_scenario_parses_and_validates() {
    let g = campus();
    for (name, text) in fixtures::SCENARIOS {
        let sc = Scenario::parse(name, text).unwrap_or_else(|e| panic!("{name}: {e}"));
        sc.validate_against(&g)
            .unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}
