//! Shipped map and scenario fixtures, embedded so the CLI works from any
//! directory.

pub const CAMPUS_MAP: &str = include_str!("../fixtures/campus.map");

/// `(file name, contents)` of every shipped scenario.
pub const SCENARIOS: &[(&str, &str)] = &[
    (
        "static_bots.scn",
        include_str!("../fixtures/scenarios/static_bots.scn"),
    ),
    (
        "slow_only.scn",
        include_str!("../fixtures/scenarios/slow_only.scn"),
    ),
    (
        "fig_speedgraph.scn",
        include_str!("../fixtures/scenarios/fig_speedgraph.scn"),
    ),
    (
        "route_flip.scn",
        include_str!("../fixtures/scenarios/route_flip.scn"),
    ),
    ("ddos.scn", include_str!("../fixtures/scenarios/ddos.scn")),
    (
        "invalidate.scn",
        include_str!("../fixtures/scenarios/invalidate.scn"),
    ),
    (
        "tracking.scn",
        include_str!("../fixtures/scenarios/tracking.scn"),
    ),
    (
        "defended_carrier.scn",
        include_str!("../fixtures/scenarios/defended_carrier.scn"),
    ),
    (
        "defended_ip.scn",
        include_str!("../fixtures/scenarios/defended_ip.scn"),
    ),
    (
        "defended_behavior.scn",
        include_str!("../fixtures/scenarios/defended_behavior.scn"),
    ),
    (
        "benign_baseline.scn",
        include_str!("../fixtures/scenarios/benign_baseline.scn"),
    ),
];

/// Embedded map files addressable by name from a scenario's `[map] file`.
pub fn map_by_name(name: &str) -> Option<&'static str> {
    match name {
        "campus.map" => Some(CAMPUS_MAP),
        _ => None,
    }
}

pub fn scenario_by_name(name: &str) -> Option<&'static str> {
    let stem = name.strip_suffix(".scn").unwrap_or(name);
    SCENARIOS
        .iter()
        .find(|(n, _)| n.strip_suffix(".scn") == Some(stem))
        .map(|(_, text)| *text)
}
