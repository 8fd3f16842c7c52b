//! Deterministic desk-scale simulator of a probe-based social navigation
//! service, Sybil "bot driver" attacks against it, and defenses.
//!
//! Module map:
//! - [`geomap`]: road network, map matching, route geometry
//! - [`tracegen`]: mock GPS traces under speed patterns
//! - [`navcore`]: the navigation engine (accounts, congestion, routing,
//!   reports, live map)
//! - [`sentinel`]: defenses composed into per-session trust weights
//! - [`sybil`]: attack orchestration
//! - [`sim`]: scenarios, the event loop, metrics and outputs

pub mod fixtures;
pub mod geomap;
pub mod navcore;
pub mod sentinel;
pub mod sim;
pub mod sybil;
pub mod tracegen;

pub use geomap::{load_map, match_fix, route_polyline, MatchedFix, Point, RoadGraph, SegmentId};
pub use navcore::{Engine, EngineParams, ProbeReport, RouteResult};
pub use tracegen::{attack_pattern_fig_speedgraph, generate_trace, GpsTrace, SpeedPattern};
