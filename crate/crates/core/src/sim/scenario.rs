//! Scenario files: a sectioned `key = value` format.
//!
//! ```text
//! [map]
//! file = campus.map
//! origin = O
//! destination = D
//!
//! [engine]
//! duration_s = 4860
//!
//! [attack]
//! kind = traffic_jam
//! n_bots = 15
//! route = s11
//! pattern = fig_speedgraph
//!
//! [defense]
//! ip = on
//! ```
//!
//! Unknown sections or keys are rejected. Every value can be replaced with
//! an override of the form `section.key=value`; engine and defense keys may
//! omit the section.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::net::Ipv4Addr;
use std::str::FromStr;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geomap::{NodeId, Point, RoadGraph, SegmentId};
use crate::navcore::{EngineParams, ObstacleKind, Viewport};
use crate::sentinel::{Antenna, Cidr, SentinelParams};
use crate::sybil::{AccountMode, DdosConfig, SpawnSchedule};
use crate::tracegen::{attack_pattern_fig_speedgraph, SpeedPattern};

pub const SECTIONS: &[&str] = &["map", "engine", "benign", "attack", "defense"];

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{field}: {msg}")]
    Invalid { field: String, msg: String },
    #[error("bad override {0:?}: expected section.key=value")]
    BadOverride(String),
}

fn invalid(field: &str, msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.to_string(),
        msg: msg.into(),
    }
}

/// Scenario text as parsed, before typing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawScenario {
    pub values: BTreeMap<(String, String), String>,
}

impl RawScenario {
    pub fn parse(text: &str) -> Result<RawScenario, ScenarioError> {
        let mut raw = RawScenario::default();
        let mut section: Option<String> = None;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(rest) = content.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ScenarioError::Syntax {
                        line: line_no,
                        msg: format!("unterminated section header {content:?}"),
                    })?;
                let name = name.trim();
                if !SECTIONS.contains(&name) {
                    return Err(ScenarioError::Syntax {
                        line: line_no,
                        msg: format!("unknown section [{name}]"),
                    });
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| ScenarioError::Syntax {
                    line: line_no,
                    msg: format!("expected key = value, got {content:?}"),
                })?;
            let sec = section.clone().ok_or_else(|| ScenarioError::Syntax {
                line: line_no,
                msg: "key outside of any section".into(),
            })?;
            let key = key.trim().to_string();
            if raw
                .values
                .insert((sec.clone(), key.clone()), value.trim().to_string())
                .is_some()
            {
                return Err(ScenarioError::Syntax {
                    line: line_no,
                    msg: format!("duplicate key {sec}.{key}"),
                });
            }
        }
        Ok(raw)
    }

    /// Apply `section.key=value`, or `key=value` for engine and defense keys.
    pub fn apply_override(&mut self, spec: &str) -> Result<(), ScenarioError> {
        let bad = || ScenarioError::BadOverride(spec.to_string());
        let (path, value) = spec.split_once('=').ok_or_else(bad)?;
        let path = path.trim();
        let (section, key) = match path.split_once('.') {
            Some((s, k)) if SECTIONS.contains(&s) => (s.to_string(), k.to_string()),
            Some(_) => return Err(bad()),
            None if ENGINE_KEYS.contains(&path) || EngineParams::KEYS.contains(&path) => {
                ("engine".to_string(), path.to_string())
            }
            None if DEFENSE_KEYS.contains(&path) => ("defense".to_string(), path.to_string()),
            None => return Err(bad()),
        };
        if key.is_empty() {
            return Err(bad());
        }
        self.values.insert((section, key), value.trim().to_string());
        Ok(())
    }
}

const ENGINE_KEYS: &[&str] = &["duration_s", "probe_interval_s"];
const DEFENSE_KEYS: &[&str] = &[
    "carrier",
    "registration",
    "ip",
    "behavior",
    "p_check",
    "unknown_device_factor",
    "phone_unverified_factor",
    "captcha_missing_factor",
    "c_max",
    "ip_window_s",
    "carrier_ip_boost",
    "carrier_ip_ranges",
    "antennas",
    "burst_n",
    "burst_window_s",
    "corr_threshold",
    "corr_group",
    "corr_window_s",
    "corr_min_overlap",
    "behavior_penalty",
];

/// Typed reader that tracks which keys were consumed.
struct Reader<'a> {
    raw: &'a RawScenario,
    used: std::collections::BTreeSet<(String, String)>,
}

impl<'a> Reader<'a> {
    fn get(&mut self, section: &str, key: &str) -> Option<&'a str> {
        let k = (section.to_string(), key.to_string());
        let v = self.raw.values.get(&k).map(String::as_str);
        if v.is_some() {
            self.used.insert(k);
        }
        v
    }

    fn parse<T: FromStr>(
        &mut self,
        section: &str,
        key: &str,
        default: T,
    ) -> Result<T, ScenarioError>
    where
        T::Err: Display,
    {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|e: T::Err| invalid(&format!("{section}.{key}"), format!("{v:?}: {e}"))),
        }
    }

    fn float(&mut self, section: &str, key: &str, default: f64) -> Result<f64, ScenarioError> {
        let v: f64 = self.parse(section, key, default)?;
        if !v.is_finite() || v < 0.0 {
            return Err(invalid(
                &format!("{section}.{key}"),
                "must be a non-negative number",
            ));
        }
        Ok(v)
    }

    fn flag(&mut self, section: &str, key: &str, default: bool) -> Result<bool, ScenarioError> {
        match self.get(section, key) {
            None => Ok(default),
            Some(v) => match v.to_ascii_lowercase().as_str() {
                "on" | "true" | "yes" | "1" => Ok(true),
                "off" | "false" | "no" | "0" => Ok(false),
                _ => Err(invalid(
                    &format!("{section}.{key}"),
                    format!("{v:?} is not a boolean"),
                )),
            },
        }
    }

    fn finish(self) -> Result<(), ScenarioError> {
        if let Some((s, k)) = self.raw.values.keys().find(|k| !self.used.contains(*k)) {
            return Err(invalid(&format!("{s}.{k}"), "unknown key"));
        }
        Ok(())
    }
}

fn parse_route(field: &str, s: &str) -> Result<Vec<SegmentId>, ScenarioError> {
    let ids: Vec<SegmentId> = s
        .split('>')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(SegmentId::from)
        .collect();
    if ids.is_empty() {
        return Err(invalid(field, "empty route"));
    }
    Ok(ids)
}

fn render_route(r: &[SegmentId]) -> String {
    r.iter().map(|s| s.0.as_str()).collect::<Vec<_>>().join(">")
}

fn parse_point(field: &str, s: &str) -> Result<Point, ScenarioError> {
    let nums: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| invalid(field, format!("{s:?} is not x,y")))?;
    match nums.as_slice() {
        [x, y] if x.is_finite() && y.is_finite() => Ok(Point::new(*x, *y)),
        _ => Err(invalid(field, format!("{s:?} is not x,y"))),
    }
}

fn parse_pattern(field: &str, s: &str) -> Result<SpeedPattern, ScenarioError> {
    if s == "fig_speedgraph" {
        return Ok(attack_pattern_fig_speedgraph());
    }
    s.parse().map_err(|e| invalid(field, format!("{e}")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapSpec {
    pub file: String,
    pub origin: Option<NodeId>,
    pub destination: Option<NodeId>,
    pub viewport: Option<Viewport>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BenignPattern {
    /// Piecewise-constant cruising with random phase speeds and lengths.
    Random {
        speed_min_kph: f64,
        speed_max_kph: f64,
    },
    Fixed(SpeedPattern),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenignSpec {
    pub count: usize,
    pub routes: Vec<Vec<SegmentId>>,
    pub pattern: BenignPattern,
    pub spawn_start_s: f64,
    pub spawn_gap_min_s: f64,
    pub spawn_gap_max_s: f64,
    pub verified: bool,
    pub points: u64,
    pub report_every_s: f64,
    pub report_until_s: Option<f64>,
    pub report_kind: ObstacleKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum IpMode {
    Shared(String),
    Distinct,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JamSpec {
    pub n_bots: usize,
    pub route: Vec<SegmentId>,
    pub pattern: SpeedPattern,
    pub spawn: SpawnSchedule,
    pub start_s: f64,
    pub accounts: AccountMode,
    pub train_hours: f64,
    pub randomize: bool,
    pub jitter_m: f64,
    pub scatter_m: f64,
    pub ip: IpMode,
    pub farm: Option<Point>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AttackSpec {
    None,
    TrafficJam(JamSpec),
    ReportDdos {
        n_devices: usize,
        cfg: DdosConfig,
    },
    Invalidation {
        n_bots: usize,
        start_s: f64,
    },
    Tracking {
        target: String,
        n_observers: usize,
        view_w: f64,
        view_h: f64,
        start_s: f64,
        epochs: usize,
    },
}

impl AttackSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            AttackSpec::None => "none",
            AttackSpec::TrafficJam(_) => "traffic_jam",
            AttackSpec::ReportDdos { .. } => "report_ddos",
            AttackSpec::Invalidation { .. } => "invalidation",
            AttackSpec::Tracking { .. } => "tracking",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefenseSpec {
    pub params: SentinelParams,
    pub antennas: Vec<Antenna>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub map: MapSpec,
    pub engine: EngineParams,
    pub duration_s: u32,
    pub probe_interval_s: u32,
    pub benign: BenignSpec,
    pub attack: AttackSpec,
    pub defense: DefenseSpec,
}

impl Scenario {
    pub fn parse(name: &str, text: &str) -> Result<Scenario, ScenarioError> {
        Scenario::from_raw(name, &RawScenario::parse(text)?)
    }

    pub fn parse_with_overrides(
        name: &str,
        text: &str,
        overrides: &[String],
    ) -> Result<Scenario, ScenarioError> {
        let mut raw = RawScenario::parse(text)?;
        for o in overrides {
            raw.apply_override(o)?;
        }
        Scenario::from_raw(name, &raw)
    }

    pub fn from_raw(name: &str, raw: &RawScenario) -> Result<Scenario, ScenarioError> {
        let mut r = Reader {
            raw,
            used: Default::default(),
        };

        let map = MapSpec {
            file: r.get("map", "file").unwrap_or("campus.map").to_string(),
            origin: r.get("map", "origin").map(NodeId::from),
            destination: r.get("map", "destination").map(NodeId::from),
            viewport: match r.get("map", "viewport") {
                None => None,
                Some(v) => {
                    let nums: Vec<f64> = v
                        .split(',')
                        .map(|p| p.trim().parse::<f64>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| invalid("map.viewport", "expected x0,y0,x1,y1"))?;
                    match nums.as_slice() {
                        [a, b, c, d] => Some(Viewport::new(*a, *b, *c, *d)),
                        _ => return Err(invalid("map.viewport", "expected x0,y0,x1,y1")),
                    }
                }
            },
        };
        if map.origin.is_some() != map.destination.is_some() {
            return Err(invalid("map.origin", "origin and destination go together"));
        }

        let duration_s: u32 = r.parse("engine", "duration_s", 3600)?;
        if duration_s == 0 {
            return Err(invalid("engine.duration_s", "must be positive"));
        }
        let probe_interval_s: u32 = r.parse("engine", "probe_interval_s", 1)?;
        if probe_interval_s == 0 {
            return Err(invalid("engine.probe_interval_s", "must be positive"));
        }
        let mut engine = EngineParams::default();
        for key in EngineParams::KEYS {
            if let Some(v) = r.get("engine", key) {
                engine
                    .set(key, v)
                    .map_err(|e| invalid(&format!("engine.{key}"), e.to_string()))?;
            }
        }
        if engine.tick_s.fract() != 0.0 {
            return Err(invalid(
                "engine.tick_s",
                "must be a whole number of seconds",
            ));
        }

        let benign = Self::read_benign(&mut r, duration_s)?;
        let attack = Self::read_attack(&mut r, duration_s)?;
        let defense = Self::read_defense(&mut r)?;
        r.finish()?;

        Ok(Scenario {
            name: name.to_string(),
            map,
            engine,
            duration_s,
            probe_interval_s,
            benign,
            attack,
            defense,
        })
    }

    fn read_benign(r: &mut Reader, _duration_s: u32) -> Result<BenignSpec, ScenarioError> {
        let count: usize = r.parse("benign", "count", 0)?;
        let routes = match r.get("benign", "routes") {
            None => Vec::new(),
            Some(v) => v
                .split('|')
                .map(|p| parse_route("benign.routes", p))
                .collect::<Result<Vec<_>, _>>()?,
        };
        if count > 0 && routes.is_empty() {
            return Err(invalid("benign.routes", "required when count > 0"));
        }
        let speed_min_kph = r.float("benign", "speed_min_kph", 15.0)?;
        let speed_max_kph = r.float("benign", "speed_max_kph", 45.0)?;
        let pattern = match r.get("benign", "pattern") {
            None | Some("random") => {
                if speed_min_kph > speed_max_kph || speed_max_kph <= 0.0 {
                    return Err(invalid("benign.speed_min_kph", "empty speed range"));
                }
                BenignPattern::Random {
                    speed_min_kph,
                    speed_max_kph,
                }
            }
            Some(p) => BenignPattern::Fixed(parse_pattern("benign.pattern", p)?),
        };
        let spawn_gap_min_s = r.float("benign", "spawn_gap_min_s", 20.0)?;
        let spawn_gap_max_s = r.float("benign", "spawn_gap_max_s", 60.0)?;
        if spawn_gap_min_s > spawn_gap_max_s {
            return Err(invalid("benign.spawn_gap_min_s", "exceeds spawn_gap_max_s"));
        }
        let report_until_s = match r.get("benign", "report_until_s") {
            None => None,
            Some(v) => Some(
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite() && *x >= 0.0)
                    .ok_or_else(|| {
                        invalid("benign.report_until_s", format!("{v:?} is not a time"))
                    })?,
            ),
        };
        Ok(BenignSpec {
            count,
            routes,
            pattern,
            spawn_start_s: r.float("benign", "spawn_start_s", 0.0)?,
            spawn_gap_min_s,
            spawn_gap_max_s,
            verified: r.flag("benign", "verified", true)?,
            points: r.parse("benign", "points", 0)?,
            report_every_s: r.float("benign", "report_every_s", 0.0)?,
            report_until_s,
            report_kind: r.parse("benign", "report_kind", ObstacleKind::Hazard)?,
        })
    }

    fn read_attack(r: &mut Reader, duration_s: u32) -> Result<AttackSpec, ScenarioError> {
        let kind = r.get("attack", "kind").unwrap_or("none");
        let spec = match kind {
            "none" => AttackSpec::None,
            "traffic_jam" => {
                let n_bots: usize = r.parse("attack", "n_bots", 15)?;
                if n_bots == 0 {
                    return Err(invalid("attack.n_bots", "must be at least 1"));
                }
                let route = parse_route(
                    "attack.route",
                    r.get("attack", "route")
                        .ok_or_else(|| invalid("attack.route", "required for traffic_jam"))?,
                )?;
                let pattern = parse_pattern(
                    "attack.pattern",
                    r.get("attack", "pattern").unwrap_or("fig_speedgraph"),
                )?;
                let spawn_mean_s = r.float("attack", "spawn_mean_s", 30.0)?;
                let spawn = match r.get("attack", "spawn").unwrap_or("simultaneous") {
                    "simultaneous" => SpawnSchedule::Simultaneous,
                    "gradual" => SpawnSchedule::Gradual {
                        mean_spacing_s: spawn_mean_s,
                    },
                    other => {
                        return Err(invalid(
                            "attack.spawn",
                            format!("unknown schedule {other:?}"),
                        ))
                    }
                };
                let accounts = match r.get("attack", "accounts").unwrap_or("reputed") {
                    "reputed" => AccountMode::Reputed,
                    "anonymous" => AccountMode::Anonymous,
                    other => {
                        return Err(invalid(
                            "attack.accounts",
                            format!("unknown mode {other:?}"),
                        ))
                    }
                };
                let ip = match r.get("attack", "ip").unwrap_or("shared") {
                    "shared" => IpMode::Shared(
                        r.get("attack", "shared_ip")
                            .unwrap_or("203.0.113.7")
                            .to_string(),
                    ),
                    "distinct" => IpMode::Distinct,
                    other => return Err(invalid("attack.ip", format!("unknown mode {other:?}"))),
                };
                if let IpMode::Shared(addr) = &ip {
                    addr.parse::<Ipv4Addr>().map_err(|_| {
                        invalid(
                            "attack.shared_ip",
                            format!("{addr:?} is not an IPv4 address"),
                        )
                    })?;
                }
                let farm = match r.get("attack", "device").unwrap_or("colocated") {
                    "colocated" => None,
                    "farm" => Some(parse_point(
                        "attack.farm",
                        r.get("attack", "farm").unwrap_or("20000,0"),
                    )?),
                    other => {
                        return Err(invalid(
                            "attack.device",
                            format!("unknown device mode {other:?}"),
                        ))
                    }
                };
                AttackSpec::TrafficJam(JamSpec {
                    n_bots,
                    route,
                    pattern,
                    spawn,
                    start_s: r.float("attack", "start_s", 0.0)?,
                    accounts,
                    train_hours: r.float("attack", "train_hours", 3.0)?,
                    randomize: r.flag("attack", "randomize", false)?,
                    jitter_m: r.float("attack", "jitter_m", 0.0)?,
                    scatter_m: r.float("attack", "scatter_m", 0.0)?,
                    ip,
                    farm,
                })
            }
            "report_ddos" => {
                let kinds = r
                    .get("attack", "kinds")
                    .unwrap_or("police")
                    .split(',')
                    .map(|k| k.trim().parse::<ObstacleKind>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| invalid("attack.kinds", e))?;
                let cfg = DdosConfig {
                    relogin: r.flag("attack", "relogin", true)?,
                    relogin_delay_s: r.float("attack", "relogin_delay_s", 10.0)?,
                    report_spacing_s: r.float("attack", "report_spacing_s", 5.0)?,
                    kinds,
                    start_t: r.float("attack", "start_s", 0.0)?,
                    stop_t: r.float("attack", "stop_s", f64::from(duration_s))?,
                };
                if cfg.report_spacing_s <= 0.0 {
                    return Err(invalid("attack.report_spacing_s", "must be positive"));
                }
                AttackSpec::ReportDdos {
                    n_devices: r.parse("attack", "n_devices", 1)?,
                    cfg,
                }
            }
            "invalidation" => AttackSpec::Invalidation {
                n_bots: r.parse("attack", "n_bots", 2)?,
                start_s: r.float("attack", "start_s", 0.0)?,
            },
            "tracking" => {
                let view_w = r.float("attack", "view_w", 2000.0)?;
                let view_h = r.float("attack", "view_h", 2000.0)?;
                if view_w <= 0.0 || view_h <= 0.0 {
                    return Err(invalid("attack.view_w", "viewport must have positive size"));
                }
                AttackSpec::Tracking {
                    target: r.get("attack", "target").unwrap_or("driver0").to_string(),
                    n_observers: r.parse("attack", "n_observers", 8)?,
                    view_w,
                    view_h,
                    start_s: r.float("attack", "start_s", 0.0)?,
                    epochs: r.parse("attack", "epochs", 30)?,
                }
            }
            other => return Err(invalid("attack.kind", format!("unknown attack {other:?}"))),
        };
        Ok(spec)
    }

    fn read_defense(r: &mut Reader) -> Result<DefenseSpec, ScenarioError> {
        let d = SentinelParams::default();
        let mut p = SentinelParams {
            p_check: r.float("defense", "p_check", d.p_check)?,
            unknown_device_factor: r.float(
                "defense",
                "unknown_device_factor",
                d.unknown_device_factor,
            )?,
            phone_unverified_factor: r.float(
                "defense",
                "phone_unverified_factor",
                d.phone_unverified_factor,
            )?,
            captcha_missing_factor: r.float(
                "defense",
                "captcha_missing_factor",
                d.captcha_missing_factor,
            )?,
            c_max: r.float("defense", "c_max", d.c_max)?,
            ip_window_s: r.float("defense", "ip_window_s", d.ip_window_s)?,
            carrier_ip_boost: r.float("defense", "carrier_ip_boost", d.carrier_ip_boost)?,
            burst_n: r.parse("defense", "burst_n", d.burst_n)?,
            burst_window_s: r.float("defense", "burst_window_s", d.burst_window_s)?,
            corr_threshold: r.parse("defense", "corr_threshold", d.corr_threshold)?,
            corr_group: r.parse("defense", "corr_group", d.corr_group)?,
            corr_window_s: r.float("defense", "corr_window_s", d.corr_window_s)?,
            corr_min_overlap: r.parse("defense", "corr_min_overlap", d.corr_min_overlap)?,
            behavior_penalty: r.float("defense", "behavior_penalty", d.behavior_penalty)?,
            ..d
        };
        p.toggles.carrier = r.flag("defense", "carrier", false)?;
        p.toggles.registration = r.flag("defense", "registration", false)?;
        p.toggles.ip = r.flag("defense", "ip", false)?;
        p.toggles.behavior = r.flag("defense", "behavior", false)?;
        if p.p_check > 1.0 {
            return Err(invalid("defense.p_check", "must be a probability"));
        }
        if p.corr_window_s < 1.0 || p.corr_window_s.fract() != 0.0 {
            return Err(invalid(
                "defense.corr_window_s",
                "must be a whole number of seconds",
            ));
        }
        for (key, v) in [
            ("unknown_device_factor", p.unknown_device_factor),
            ("phone_unverified_factor", p.phone_unverified_factor),
            ("captcha_missing_factor", p.captcha_missing_factor),
            ("behavior_penalty", p.behavior_penalty),
        ] {
            if v > 1.0 {
                return Err(invalid(
                    &format!("defense.{key}"),
                    "defense factors never exceed 1",
                ));
            }
        }
        if p.c_max <= 0.0 {
            return Err(invalid("defense.c_max", "must be positive"));
        }
        if let Some(v) = r.get("defense", "carrier_ip_ranges") {
            p.carrier_ip_ranges = v
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(Cidr::parse)
                .collect::<Result<_, _>>()
                .map_err(|e| invalid("defense.carrier_ip_ranges", e.to_string()))?;
        }
        let antennas = r
            .get("defense", "antennas")
            .unwrap_or("campus:750,200")
            .split(';')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(Antenna::parse)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| invalid("defense.antennas", e.to_string()))?;
        Ok(DefenseSpec {
            params: p,
            antennas,
        })
    }

    /// Checks that need the road network.
    pub fn validate_against(&self, graph: &RoadGraph) -> Result<(), ScenarioError> {
        for (field, node) in [
            ("map.origin", &self.map.origin),
            ("map.destination", &self.map.destination),
        ] {
            if let Some(n) = node {
                if graph.node(n).is_none() {
                    return Err(invalid(field, format!("unknown node {n}")));
                }
            }
        }
        for r in &self.benign.routes {
            graph
                .resolve_route(r)
                .map_err(|e| invalid("benign.routes", e.to_string()))?;
        }
        if let AttackSpec::TrafficJam(j) = &self.attack {
            graph
                .resolve_route(&j.route)
                .map_err(|e| invalid("attack.route", e.to_string()))?;
        }
        Ok(())
    }

    /// Every effective parameter as `section.key = value`, in a fixed order.
    pub fn canonical_entries(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| out.push((k.to_string(), v));

        put("map.file", self.map.file.clone());
        if let (Some(o), Some(d)) = (&self.map.origin, &self.map.destination) {
            put("map.origin", o.to_string());
            put("map.destination", d.to_string());
        }
        if let Some(v) = &self.map.viewport {
            put(
                "map.viewport",
                format!("{},{},{},{}", v.min.x, v.min.y, v.max.x, v.max.y),
            );
        }

        put("engine.duration_s", self.duration_s.to_string());
        put("engine.probe_interval_s", self.probe_interval_s.to_string());
        for (k, v) in self.engine.entries() {
            put(&format!("engine.{k}"), v);
        }

        let b = &self.benign;
        put("benign.count", b.count.to_string());
        if b.count > 0 {
            put(
                "benign.routes",
                b.routes
                    .iter()
                    .map(|r| render_route(r))
                    .collect::<Vec<_>>()
                    .join("|"),
            );
            match &b.pattern {
                BenignPattern::Random {
                    speed_min_kph,
                    speed_max_kph,
                } => {
                    put("benign.pattern", "random".into());
                    put("benign.speed_min_kph", speed_min_kph.to_string());
                    put("benign.speed_max_kph", speed_max_kph.to_string());
                }
                BenignPattern::Fixed(p) => put("benign.pattern", p.to_string()),
            }
            put("benign.spawn_start_s", b.spawn_start_s.to_string());
            put("benign.spawn_gap_min_s", b.spawn_gap_min_s.to_string());
            put("benign.spawn_gap_max_s", b.spawn_gap_max_s.to_string());
            put("benign.verified", b.verified.to_string());
            put("benign.points", b.points.to_string());
            put("benign.report_every_s", b.report_every_s.to_string());
            if b.report_every_s > 0.0 {
                put(
                    "benign.report_until_s",
                    b.report_until_s.map_or("end".into(), |t| t.to_string()),
                );
                put("benign.report_kind", b.report_kind.to_string());
            }
        }

        put("attack.kind", self.attack.kind().into());
        match &self.attack {
            AttackSpec::None => {}
            AttackSpec::TrafficJam(j) => {
                put("attack.n_bots", j.n_bots.to_string());
                put("attack.route", render_route(&j.route));
                put("attack.pattern", j.pattern.to_string());
                match j.spawn {
                    SpawnSchedule::Simultaneous => put("attack.spawn", "simultaneous".into()),
                    SpawnSchedule::Gradual { mean_spacing_s } => {
                        put("attack.spawn", "gradual".into());
                        put("attack.spawn_mean_s", mean_spacing_s.to_string());
                    }
                }
                put("attack.start_s", j.start_s.to_string());
                match j.accounts {
                    AccountMode::Reputed => {
                        put("attack.accounts", "reputed".into());
                        put("attack.train_hours", j.train_hours.to_string());
                    }
                    AccountMode::Anonymous => put("attack.accounts", "anonymous".into()),
                }
                put("attack.randomize", j.randomize.to_string());
                put("attack.jitter_m", j.jitter_m.to_string());
                put("attack.scatter_m", j.scatter_m.to_string());
                match &j.ip {
                    IpMode::Shared(a) => {
                        put("attack.ip", "shared".into());
                        put("attack.shared_ip", a.clone());
                    }
                    IpMode::Distinct => put("attack.ip", "distinct".into()),
                }
                match j.farm {
                    None => put("attack.device", "colocated".into()),
                    Some(p) => {
                        put("attack.device", "farm".into());
                        put("attack.farm", format!("{},{}", p.x, p.y));
                    }
                }
            }
            AttackSpec::ReportDdos { n_devices, cfg } => {
                put("attack.n_devices", n_devices.to_string());
                put("attack.relogin", cfg.relogin.to_string());
                put("attack.relogin_delay_s", cfg.relogin_delay_s.to_string());
                put("attack.report_spacing_s", cfg.report_spacing_s.to_string());
                put(
                    "attack.kinds",
                    cfg.kinds
                        .iter()
                        .map(|k| k.as_str())
                        .collect::<Vec<_>>()
                        .join(","),
                );
                put("attack.start_s", cfg.start_t.to_string());
                put("attack.stop_s", cfg.stop_t.to_string());
            }
            AttackSpec::Invalidation { n_bots, start_s } => {
                put("attack.n_bots", n_bots.to_string());
                put("attack.start_s", start_s.to_string());
            }
            AttackSpec::Tracking {
                target,
                n_observers,
                view_w,
                view_h,
                start_s,
                epochs,
            } => {
                put("attack.target", target.clone());
                put("attack.n_observers", n_observers.to_string());
                put("attack.view_w", view_w.to_string());
                put("attack.view_h", view_h.to_string());
                put("attack.start_s", start_s.to_string());
                put("attack.epochs", epochs.to_string());
            }
        }

        let p = &self.defense.params;
        let t = p.toggles;
        put("defense.carrier", t.carrier.to_string());
        put("defense.registration", t.registration.to_string());
        put("defense.ip", t.ip.to_string());
        put("defense.behavior", t.behavior.to_string());
        if t.carrier {
            put("defense.p_check", p.p_check.to_string());
            put(
                "defense.unknown_device_factor",
                p.unknown_device_factor.to_string(),
            );
            put(
                "defense.antennas",
                self.defense
                    .antennas
                    .iter()
                    .map(|a| format!("{}:{},{},{}", a.id, a.position.x, a.position.y, a.radius_m))
                    .collect::<Vec<_>>()
                    .join(";"),
            );
        }
        if t.registration {
            put(
                "defense.phone_unverified_factor",
                p.phone_unverified_factor.to_string(),
            );
            put(
                "defense.captcha_missing_factor",
                p.captcha_missing_factor.to_string(),
            );
        }
        if t.ip {
            put("defense.c_max", p.c_max.to_string());
            put("defense.ip_window_s", p.ip_window_s.to_string());
            put("defense.carrier_ip_boost", p.carrier_ip_boost.to_string());
            put(
                "defense.carrier_ip_ranges",
                p.carrier_ip_ranges
                    .iter()
                    .map(|c| c.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
            );
        }
        if t.behavior {
            put("defense.burst_n", p.burst_n.to_string());
            put("defense.burst_window_s", p.burst_window_s.to_string());
            put("defense.corr_threshold", p.corr_threshold.to_string());
            put("defense.corr_group", p.corr_group.to_string());
            put("defense.corr_window_s", p.corr_window_s.to_string());
            put("defense.corr_min_overlap", p.corr_min_overlap.to_string());
            put("defense.behavior_penalty", p.behavior_penalty.to_string());
        }
        out
    }

    /// SHA-256 over the canonical effective parameters, hex encoded.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.canonical_entries() {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const JAM: &str = "\
        # comment\n\
        [map]\n\
        file = campus.map\n\
        origin = O\n\
        destination = D\n\
        [engine]\n\
        duration_s = 4860\n\
        [attack]\n\
        kind = traffic_jam\n\
        route = s11\n";

    #[test]
    fn parses_with_defaults() {
        let sc = Scenario::parse("jam", JAM).unwrap();
        assert_eq!(sc.duration_s, 4860);
        assert_eq!(sc.engine.tick_s, 60.0);
        let AttackSpec::TrafficJam(j) = &sc.attack else {
            panic!()
        };
        assert_eq!(j.n_bots, 15);
        assert_eq!(j.pattern, attack_pattern_fig_speedgraph());
        assert!(!sc.defense.params.toggles.any());
    }

    #[test]
    fn errors_name_the_field() {
        let err = Scenario::parse("x", "[engine]\nduration_s = 0\n").unwrap_err();
        assert_eq!(err, invalid("engine.duration_s", "must be positive"));
        let err = Scenario::parse("x", "[attack]\nkind = traffic_jam\n").unwrap_err();
        assert!(matches!(err, ScenarioError::Invalid { ref field, .. } if field == "attack.route"));
        let err = Scenario::parse("x", "[attack]\nkind = none\nn_bots = 3\n").unwrap_err();
        assert!(
            matches!(err, ScenarioError::Invalid { ref field, .. } if field == "attack.n_bots")
        );
        let err = Scenario::parse("x", "[defense]\nip = maybe\n").unwrap_err();
        assert!(matches!(err, ScenarioError::Invalid { ref field, .. } if field == "defense.ip"));
        let err = Scenario::parse("x", "[engine]\ntheta = -1\n").unwrap_err();
        assert!(matches!(err, ScenarioError::Invalid { ref field, .. } if field == "engine.theta"));
    }

    #[test]
    fn syntax_errors_carry_lines() {
        assert!(matches!(
            RawScenario::parse("[map]\nfile campus.map\n"),
            Err(ScenarioError::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            RawScenario::parse("[weather]\n"),
            Err(ScenarioError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            RawScenario::parse("x = 1\n"),
            Err(ScenarioError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn overrides_apply() {
        let sc = Scenario::parse_with_overrides(
            "jam",
            JAM,
            &["attack.n_bots=7".into(), "w_min=5".into(), "ip=on".into()],
        )
        .unwrap();
        let AttackSpec::TrafficJam(j) = &sc.attack else {
            panic!()
        };
        assert_eq!(j.n_bots, 7);
        assert_eq!(sc.engine.traffic.w_min, 5.0);
        assert!(sc.defense.params.toggles.ip);
        let mut raw = RawScenario::default();
        assert!(raw.apply_override("nonsense").is_err());
        assert!(raw.apply_override("weather.rain=1").is_err());
        assert!(raw.apply_override("mystery=1").is_err());
    }

    #[test]
    fn hash_tracks_effective_parameters() {
        let base = Scenario::parse("jam", JAM).unwrap().hash();
        let same =
            Scenario::parse_with_overrides("renamed", JAM, &["engine.duration_s=4860.0".into()]);
        // integral key with a float spelling is rejected rather than silently accepted
        assert!(same.is_err());
        let explicit = Scenario::parse_with_overrides(
            "jam",
            JAM,
            &["attack.n_bots=15".into(), "theta=0.50".into()],
        )
        .unwrap()
        .hash();
        assert_eq!(base, explicit);
        let changed = Scenario::parse_with_overrides("jam", JAM, &["attack.n_bots=14".into()])
            .unwrap()
            .hash();
        assert_ne!(base, changed);
        let changed = Scenario::parse_with_overrides("jam", JAM, &["alpha=0.31".into()])
            .unwrap()
            .hash();
        assert_ne!(base, changed);
        assert_eq!(base.len(), 64);
    }
}
