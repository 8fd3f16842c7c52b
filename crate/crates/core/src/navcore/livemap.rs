//! Live map: which fellow users a viewer sees, where, and how stale.

use crate::geomap::Point;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viewport {
    pub min: Point,
    pub max: Point,
}

impl Viewport {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Viewport {
            min: Point::new(x0.min(x1), y0.min(y1)),
            max: Point::new(x0.max(x1), y0.max(y1)),
        }
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiveMapParams {
    /// Each user is shown to a given viewer in roughly one epoch out of `sample`.
    pub sample: u32,
    pub epoch_s: f64,
    pub max_staleness_s: f64,
    pub speed_factor_lo: f64,
    pub speed_factor_hi: f64,
}

impl Default for LiveMapParams {
    fn default() -> Self {
        LiveMapParams {
            sample: 4,
            epoch_s: 60.0,
            max_staleness_s: 300.0,
            speed_factor_lo: 0.7,
            speed_factor_hi: 1.3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LiveMapEntry {
    pub session: u64,
    pub username: Option<String>,
    pub shown_position: Point,
    pub shown_speed: f64,
    pub points: u64,
    pub level: u8,
    pub seniority_s: f64,
}

const TAG_VISIBLE: u64 = 0x5649_5349;
const TAG_DELAY: u64 = 0x4445_4c41;
const TAG_SPEED: u64 = 0x5350_4545;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic uniform draw in [0, 1) keyed by the given words.
pub(crate) fn keyed_unit(words: &[u64]) -> f64 {
    let h = words.iter().fold(0u64, |acc, &w| splitmix(acc ^ w));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

pub fn epoch_of(now: f64, p: &LiveMapParams) -> u64 {
    (now / p.epoch_s).floor().max(0.0) as u64
}

pub fn is_visible(seed: u64, viewer: u64, user: u64, epoch: u64, p: &LiveMapParams) -> bool {
    p.sample <= 1
        || keyed_unit(&[seed, TAG_VISIBLE, viewer, user, epoch]) < 1.0 / f64::from(p.sample)
}

/// Delay in [0, max_staleness] of the position shown for `user` this epoch.
pub fn staleness(seed: u64, user: u64, epoch: u64, p: &LiveMapParams) -> f64 {
    keyed_unit(&[seed, TAG_DELAY, user, epoch]) * p.max_staleness_s
}

pub fn speed_factor(seed: u64, viewer: u64, user: u64, epoch: u64, p: &LiveMapParams) -> f64 {
    let u = keyed_unit(&[seed, TAG_SPEED, viewer, user, epoch]);
    p.speed_factor_lo + u * (p.speed_factor_hi - p.speed_factor_lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_rate_is_one_in_s() {
        let p = LiveMapParams::default();
        let n = 40_000u64;
        let hits = (0..n).filter(|&e| is_visible(7, 1, 2, e, &p)).count();
        let rate = hits as f64 / n as f64;
        assert!((rate - 0.25).abs() < 0.01, "{rate}");
    }

    #[test]
    fn sample_one_always_visible() {
        let p = LiveMapParams {
            sample: 1,
            ..LiveMapParams::default()
        };
        assert!((0..100).all(|e| is_visible(3, 1, 2, e, &p)));
    }

    #[test]
    fn draws_are_bounded() {
        let p = LiveMapParams::default();
        for e in 0..1000 {
            let d = staleness(1, 5, e, &p);
            assert!((0.0..=300.0).contains(&d));
            let f = speed_factor(1, 2, 5, e, &p);
            assert!((0.7..=1.3).contains(&f));
        }
    }

    #[test]
    fn viewport_contains() {
        let v = Viewport::new(10.0, 10.0, -10.0, -10.0);
        assert!(v.contains(Point::new(0.0, 10.0)));
        assert!(!v.contains(Point::new(0.0, 10.1)));
        assert_eq!(v.width(), 20.0);
    }
}
