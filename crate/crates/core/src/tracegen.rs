//! Mock GPS trace synthesis along a route polyline.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geomap::{point_along, polyline_length, Point};

/// Seconds between emitted fixes.
pub const EMIT_INTERVAL_S: f64 = 1.0;
/// Upper bound on perpendicular position jitter, meters.
pub const MAX_JITTER_M: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopSpec {
    pub move_s: u32,
    pub halt_s: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase {
    pub speed_kph: f64,
    pub duration_s: u32,
    pub stop: Option<StopSpec>,
}

impl Phase {
    pub fn cruise(speed_kph: f64, duration_s: u32) -> Self {
        Phase {
            speed_kph,
            duration_s,
            stop: None,
        }
    }

    pub fn stop_and_go(speed_kph: f64, duration_s: u32, move_s: u32, halt_s: u32) -> Self {
        Phase {
            speed_kph,
            duration_s,
            stop: Some(StopSpec { move_s, halt_s }),
        }
    }

    /// Whether the vehicle is moving during second `s` of this phase.
    fn moving_at(&self, s: u32) -> bool {
        match self.stop {
            None => true,
            Some(StopSpec { move_s, halt_s }) => s % (move_s + halt_s) < move_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeedPattern {
    pub phases: Vec<Phase>,
    pub loop_route: bool,
}

#[derive(Debug, Error, PartialEq)]
pub enum TraceError {
    #[error("polyline is empty or has zero length")]
    EmptyPolyline,
    #[error("speed pattern has no phases")]
    NoPhases,
    #[error("phase {index}: {msg}")]
    BadPhase { index: usize, msg: String },
}

impl SpeedPattern {
    pub fn new(phases: Vec<Phase>, loop_route: bool) -> Result<Self, TraceError> {
        let pattern = SpeedPattern { phases, loop_route };
        pattern.validate()?;
        Ok(pattern)
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        if self.phases.is_empty() {
            return Err(TraceError::NoPhases);
        }
        for (index, p) in self.phases.iter().enumerate() {
            let bad = |msg: &str| TraceError::BadPhase {
                index,
                msg: msg.to_string(),
            };
            if !(p.speed_kph >= 0.0 && p.speed_kph.is_finite()) {
                return Err(bad("speed must be >= 0"));
            }
            if p.duration_s == 0 {
                return Err(bad("duration must be > 0"));
            }
            if let Some(s) = p.stop {
                if s.move_s == 0 || s.halt_s == 0 {
                    return Err(bad("stop spec needs move_s > 0 and halt_s > 0"));
                }
            }
        }
        Ok(())
    }

    pub fn total_duration_s(&self) -> u32 {
        self.phases.iter().map(|p| p.duration_s).sum()
    }

    /// Commanded phase speed `offset_s` seconds into the pattern, or `None`
    /// once the pattern has finished.
    pub fn commanded_speed_at(&self, offset_s: u32) -> Option<f64> {
        let mut start = 0;
        for p in &self.phases {
            if offset_s < start + p.duration_s {
                return Some(p.speed_kph);
            }
            start += p.duration_s;
        }
        None
    }

    /// Per-bot variation: phase speeds scaled by U[0.9, 1.1] and stop-cycle
    /// timings shifted by up to 2 s.
    pub fn randomized<R: Rng>(&self, rng: &mut R) -> SpeedPattern {
        let phases = self
            .phases
            .iter()
            .map(|p| Phase {
                speed_kph: p.speed_kph * rng.gen_range(0.9..=1.1),
                duration_s: p.duration_s,
                stop: p.stop.map(|s| StopSpec {
                    move_s: jitter_secs(rng, s.move_s),
                    halt_s: jitter_secs(rng, s.halt_s),
                }),
            })
            .collect();
        SpeedPattern {
            phases,
            loop_route: self.loop_route,
        }
    }
}

fn jitter_secs<R: Rng>(rng: &mut R, base: u32) -> u32 {
    let delta: i64 = rng.gen_range(-2..=2);
    (i64::from(base) + delta).max(1) as u32
}

/// Phase list syntax: `speed:duration[:move/halt]` joined by `;`,
/// e.g. `70:1200;8:1200:10/10`.
impl FromStr for SpeedPattern {
    type Err = TraceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut phases = Vec::new();
        for (index, part) in s
            .split(';')
            .map(str::trim)
            .filter(|p| !p.is_empty())
            .enumerate()
        {
            let bad = |msg: String| TraceError::BadPhase { index, msg };
            let fields: Vec<&str> = part.split(':').collect();
            if !(2..=3).contains(&fields.len()) {
                return Err(bad(format!(
                    "expected speed:duration[:move/halt], got {part:?}"
                )));
            }
            let speed_kph: f64 = fields[0]
                .parse()
                .map_err(|_| bad(format!("bad speed {:?}", fields[0])))?;
            let duration_s: u32 = fields[1]
                .parse()
                .map_err(|_| bad(format!("bad duration {:?}", fields[1])))?;
            let stop = match fields.get(2) {
                None => None,
                Some(spec) => {
                    let (m, h) = spec
                        .split_once('/')
                        .ok_or_else(|| bad(format!("bad stop spec {spec:?}")))?;
                    Some(StopSpec {
                        move_s: m.parse().map_err(|_| bad(format!("bad move_s {m:?}")))?,
                        halt_s: h.parse().map_err(|_| bad(format!("bad halt_s {h:?}")))?,
                    })
                }
            };
            phases.push(Phase {
                speed_kph,
                duration_s,
                stop,
            });
        }
        SpeedPattern::new(phases, true)
    }
}

impl fmt::Display for SpeedPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.phases.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{}:{}", p.speed_kph, p.duration_s)?;
            if let Some(s) = p.stop {
                write!(f, ":{}/{}", s.move_s, s.halt_s)?;
            }
        }
        Ok(())
    }
}

/// The three-phase pattern of the successful jam: 20 min at 70 kph, then
/// 20 min at 8 kph and 20 min at 2 kph, both halting 10 s every 10 s.
/// Bots restart from the route origin whenever they reach its end.
pub fn attack_pattern_fig_speedgraph() -> SpeedPattern {
    SpeedPattern {
        phases: vec![
            Phase::cruise(70.0, 1200),
            Phase::stop_and_go(8.0, 1200, 10, 10),
            Phase::stop_and_go(2.0, 1200, 10, 10),
        ],
        loop_route: true,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fix {
    pub t: f64,
    pub pos: Point,
    pub speed_kph: f64,
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GpsTrace {
    pub fixes: Vec<Fix>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jitter {
    pub seed: u64,
    pub max_m: f64,
}

/// Emit one fix per second for the whole pattern. Fix `i` carries time
/// `start_t + i` and the position reached at the end of that second.
pub fn generate_trace(
    polyline: &[Point],
    pattern: &SpeedPattern,
    start_t: f64,
    jitter: Option<Jitter>,
) -> Result<GpsTrace, TraceError> {
    if polyline.len() < 2 {
        return Err(TraceError::EmptyPolyline);
    }
    let route_len = polyline_length(polyline);
    if route_len <= 0.0 {
        return Err(TraceError::EmptyPolyline);
    }
    pattern.validate()?;

    let mut rng = jitter.map(|j| ChaCha8Rng::seed_from_u64(j.seed));
    let jitter_max = jitter
        .map(|j| j.max_m.clamp(0.0, MAX_JITTER_M))
        .unwrap_or(0.0);

    let mut fixes = Vec::with_capacity(pattern.total_duration_s() as usize);
    // distance travelled, unwrapped
    let mut travelled = 0.0_f64;
    let mut t = start_t;
    for phase in &pattern.phases {
        let step = phase.speed_kph / 3.6 * EMIT_INTERVAL_S;
        for s in 0..phase.duration_s {
            let mut speed = 0.0;
            if phase.moving_at(s) && step > 0.0 {
                let at_end = !pattern.loop_route && travelled >= route_len;
                if !at_end {
                    travelled += step;
                    speed = phase.speed_kph;
                    if !pattern.loop_route && travelled >= route_len {
                        travelled = route_len;
                    }
                }
            }
            let along = if pattern.loop_route {
                travelled.rem_euclid(route_len)
            } else {
                travelled.min(route_len)
            };
            let (mut pos, heading) = point_along(polyline, along);
            if let Some(rng) = rng.as_mut() {
                let off: f64 = rng.gen_range(-1.0..=1.0) * jitter_max;
                let rad = heading.to_radians();
                // unit normal to the left of the direction of travel
                pos.x += -rad.cos() * off;
                pos.y += rad.sin() * off;
            }
            fixes.push(Fix {
                t,
                pos,
                speed_kph: speed,
                heading,
            });
            t += EMIT_INTERVAL_S;
        }
    }
    Ok(GpsTrace { fixes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(len: f64) -> Vec<Point> {
        vec![Point::new(0.0, 0.0), Point::new(len, 0.0)]
    }

    #[test]
    fn constant_speed_kinematics() {
        let pat = SpeedPattern::new(vec![Phase::cruise(36.0, 10)], false).unwrap();
        let tr = generate_trace(&line(200.0), &pat, 0.0, None).unwrap();
        assert_eq!(tr.fixes.len(), 10);
        let last = tr.fixes.last().unwrap();
        assert!((last.pos.x - 100.0).abs() < 1e-9);
        assert_eq!(last.t, 9.0);
    }

    #[test]
    fn zero_speed_stays_at_origin() {
        let pat = SpeedPattern::new(vec![Phase::cruise(0.0, 30)], true).unwrap();
        let tr = generate_trace(&line(200.0), &pat, 5.0, None).unwrap();
        assert_eq!(tr.fixes.len(), 30);
        assert!(tr
            .fixes
            .iter()
            .all(|f| f.pos == Point::new(0.0, 0.0) && f.speed_kph == 0.0));
    }

    #[test]
    fn non_loop_holds_at_end() {
        let pat = SpeedPattern::new(vec![Phase::cruise(36.0, 30)], false).unwrap();
        let tr = generate_trace(&line(100.0), &pat, 0.0, None).unwrap();
        let tail = &tr.fixes[10..];
        assert!(tail.iter().all(|f| f.pos.x == 100.0 && f.speed_kph == 0.0));
        assert_eq!(tr.fixes[9].speed_kph, 36.0);
    }

    #[test]
    fn loop_wraps_to_origin() {
        let pat = SpeedPattern::new(vec![Phase::cruise(36.0, 15)], true).unwrap();
        let tr = generate_trace(&line(100.0), &pat, 0.0, None).unwrap();
        assert!((tr.fixes[9].pos.x - 0.0).abs() < 1e-9);
        assert!((tr.fixes[14].pos.x - 50.0).abs() < 1e-9);
        assert!(tr.fixes.iter().all(|f| f.speed_kph == 36.0));
    }

    #[test]
    fn stop_and_go_alternates() {
        let pat = SpeedPattern::new(vec![Phase::stop_and_go(8.0, 40, 10, 10)], true).unwrap();
        let tr = generate_trace(&line(1000.0), &pat, 0.0, None).unwrap();
        let speeds: Vec<f64> = tr.fixes.iter().map(|f| f.speed_kph).collect();
        assert!(speeds[..10].iter().all(|&v| v == 8.0));
        assert!(speeds[10..20].iter().all(|&v| v == 0.0));
        assert!(speeds[20..30].iter().all(|&v| v == 8.0));
        assert_eq!(tr.fixes[10].pos, tr.fixes[19].pos);
    }

    #[test]
    fn canonical_attack_pattern() {
        let p = attack_pattern_fig_speedgraph();
        assert_eq!(p.phases.len(), 3);
        assert_eq!(p.phases[0].speed_kph, 70.0);
        assert_eq!(p.phases[0].duration_s, 1200);
        assert_eq!(p.phases[0].stop, None);
        for ph in &p.phases[1..] {
            assert_eq!(
                ph.stop,
                Some(StopSpec {
                    move_s: 10,
                    halt_s: 10
                })
            );
        }
        assert_eq!(p.total_duration_s(), 3600);
        assert!(p.loop_route);
    }

    #[test]
    fn parse_and_display_round_trip() {
        let p: SpeedPattern = "70:1200;8:1200:10/10;2:1200:10/10".parse().unwrap();
        assert_eq!(p, attack_pattern_fig_speedgraph());
        assert_eq!(p.to_string(), "70:1200;8:1200:10/10;2:1200:10/10");
        assert!("70".parse::<SpeedPattern>().is_err());
        assert!("70:0".parse::<SpeedPattern>().is_err());
        assert!("8:60:0/10".parse::<SpeedPattern>().is_err());
        assert_eq!("".parse::<SpeedPattern>(), Err(TraceError::NoPhases));
    }

    #[test]
    fn empty_polyline_rejected() {
        let pat = attack_pattern_fig_speedgraph();
        assert_eq!(
            generate_trace(&[Point::new(0.0, 0.0)], &pat, 0.0, None),
            Err(TraceError::EmptyPolyline)
        );
        let degenerate = [Point::new(1.0, 1.0), Point::new(1.0, 1.0)];
        assert!(generate_trace(&degenerate, &pat, 0.0, None).is_err());
    }

    #[test]
    fn jitter_is_bounded_and_seeded() {
        let pat = SpeedPattern::new(vec![Phase::cruise(30.0, 100)], true).unwrap();
        let j = Some(Jitter {
            seed: 9,
            max_m: 2.0,
        });
        let a = generate_trace(&line(500.0), &pat, 0.0, j).unwrap();
        let b = generate_trace(&line(500.0), &pat, 0.0, j).unwrap();
        assert_eq!(a, b);
        assert!(a.fixes.iter().all(|f| f.pos.y.abs() <= 2.0));
        assert!(a.fixes.iter().any(|f| f.pos.y != 0.0));
    }

    #[test]
    fn commanded_speed_timeline() {
        let p = attack_pattern_fig_speedgraph();
        assert_eq!(p.commanded_speed_at(0), Some(70.0));
        assert_eq!(p.commanded_speed_at(1199), Some(70.0));
        assert_eq!(p.commanded_speed_at(1200), Some(8.0));
        assert_eq!(p.commanded_speed_at(2400), Some(2.0));
        assert_eq!(p.commanded_speed_at(3600), None);
    }
}
