//! Defenses: carrier location verification, registration weighting, IP
//! clustering and behavioral analysis, combined multiplicatively into a
//! per-session trust weight that the engine uses when counting drivers.

use std::collections::{BTreeMap, BTreeSet};
use std::net::Ipv4Addr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geomap::Point;
use crate::navcore::{Engine, SessionId, UserAccount};

#[derive(Debug, Error, PartialEq)]
pub enum SentinelError {
    #[error("invalid CIDR range {0:?}")]
    BadCidr(String),
    #[error("invalid antenna spec {0:?}")]
    BadAntenna(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DefenseToggles {
    pub carrier: bool,
    pub registration: bool,
    pub ip: bool,
    pub behavior: bool,
}

impl DefenseToggles {
    pub fn all() -> Self {
        DefenseToggles {
            carrier: true,
            registration: true,
            ip: true,
            behavior: true,
        }
    }

    pub fn any(&self) -> bool {
        self.carrier || self.registration || self.ip || self.behavior
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SentinelParams {
    pub toggles: DefenseToggles,
    /// Probability that any single fix triggers a carrier check.
    pub p_check: f64,
    pub unknown_device_factor: f64,
    pub phone_unverified_factor: f64,
    pub captcha_missing_factor: f64,
    /// Concurrent sessions per IP tolerated without penalty.
    pub c_max: f64,
    /// How far back a session's last fix may lie and still count as concurrent.
    pub ip_window_s: f64,
    pub carrier_ip_boost: f64,
    pub carrier_ip_ranges: Vec<Cidr>,
    pub burst_n: usize,
    pub burst_window_s: f64,
    pub corr_threshold: f64,
    pub corr_group: usize,
    pub corr_window_s: f64,
    /// Fewest overlapping seconds for a correlation to be computed.
    pub corr_min_overlap: usize,
    pub behavior_penalty: f64,
}

impl Default for SentinelParams {
    fn default() -> Self {
        SentinelParams {
            toggles: DefenseToggles::default(),
            p_check: 1.0 / 300.0,
            unknown_device_factor: 0.5,
            phone_unverified_factor: 0.5,
            captcha_missing_factor: 0.75,
            c_max: 3.0,
            ip_window_s: 300.0,
            carrier_ip_boost: 1.25,
            carrier_ip_ranges: Vec::new(),
            burst_n: 5,
            burst_window_s: 10.0,
            corr_threshold: 0.99,
            corr_group: 5,
            corr_window_s: 600.0,
            corr_min_overlap: 60,
            behavior_penalty: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cidr {
    pub base: Ipv4Addr,
    pub prefix: u8,
}

impl Cidr {
    pub fn parse(s: &str) -> Result<Cidr, SentinelError> {
        let bad = || SentinelError::BadCidr(s.to_string());
        let (addr, prefix) = s.split_once('/').unwrap_or((s, "32"));
        let base: Ipv4Addr = addr.trim().parse().map_err(|_| bad())?;
        let prefix: u8 = prefix.trim().parse().map_err(|_| bad())?;
        if prefix > 32 {
            return Err(bad());
        }
        Ok(Cidr { base, prefix })
    }

    fn mask(&self) -> u32 {
        if self.prefix == 0 {
            0
        } else {
            u32::MAX << (32 - self.prefix)
        }
    }

    pub fn contains(&self, ip: &str) -> bool {
        ip.parse::<Ipv4Addr>()
            .is_ok_and(|a| u32::from(a) & self.mask() == u32::from(self.base) & self.mask())
    }
}

impl std::fmt::Display for Cidr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.base, self.prefix)
    }
}

// ---- carrier verification ---------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct Antenna {
    pub id: String,
    pub position: Point,
    pub radius_m: f64,
}

pub const DEFAULT_ANTENNA_RADIUS_M: f64 = 2000.0;

impl Antenna {
    /// `id:x,y[,radius]`
    pub fn parse(spec: &str) -> Result<Antenna, SentinelError> {
        let bad = || SentinelError::BadAntenna(spec.to_string());
        let (id, rest) = spec.split_once(':').ok_or_else(bad)?;
        let nums: Vec<f64> = rest
            .split(',')
            .map(|t| t.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        let (x, y, radius_m) = match nums.as_slice() {
            [x, y] => (*x, *y, DEFAULT_ANTENNA_RADIUS_M),
            [x, y, r] if *r > 0.0 => (*x, *y, *r),
            _ => return Err(bad()),
        };
        Ok(Antenna {
            id: id.trim().to_string(),
            position: Point::new(x, y),
            radius_m,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeviceLocation {
    /// The handset sits at a fixed place regardless of what it reports.
    Fixed(Point),
    /// The handset really is where it says it is.
    CoLocated,
}

#[derive(Debug, Clone, Default)]
pub struct CarrierOracle {
    pub antennas: Vec<Antenna>,
    devices: BTreeMap<SessionId, DeviceLocation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CarrierVerdict {
    Pass,
    Fail,
    Unchecked,
    UnknownDevice,
}

impl CarrierOracle {
    pub fn new(antennas: Vec<Antenna>) -> Self {
        CarrierOracle {
            antennas,
            devices: BTreeMap::new(),
        }
    }

    pub fn register_device(&mut self, session: SessionId, location: DeviceLocation) {
        self.devices.insert(session, location);
    }

    pub fn knows(&self, session: SessionId) -> bool {
        self.devices.contains_key(&session)
    }

    /// Nearest antenna whose radius covers `p`.
    pub fn serving_antenna(&self, p: Point) -> Option<&Antenna> {
        self.antennas
            .iter()
            .filter(|a| a.position.distance(p) <= a.radius_m)
            .min_by(|a, b| {
                a.position
                    .distance(p)
                    .total_cmp(&b.position.distance(p))
                    .then_with(|| a.id.cmp(&b.id))
            })
    }
}

/// Compare a reported fix with the antenna actually carrying the device.
pub fn carrier_check(
    oracle: &CarrierOracle,
    session: SessionId,
    reported: Point,
) -> CarrierVerdict {
    let Some(&device) = oracle.devices.get(&session) else {
        return CarrierVerdict::UnknownDevice;
    };
    let true_pos = match device {
        DeviceLocation::Fixed(p) => p,
        DeviceLocation::CoLocated => reported,
    };
    match oracle.serving_antenna(true_pos) {
        Some(a) if a.position.distance(reported) <= a.radius_m => CarrierVerdict::Pass,
        _ => CarrierVerdict::Fail,
    }
}

// ---- registration -------------------------------------------------------------

/// `(phone_factor, login_factor)`; sessions without an account count as
/// unverified on both.
pub fn registration_factors(account: Option<&UserAccount>, p: &SentinelParams) -> (f64, f64) {
    let phone = account.is_some_and(|a| a.phone_verified);
    let login = account.is_some_and(|a| a.captcha_passed);
    (
        if phone {
            1.0
        } else {
            p.phone_unverified_factor
        },
        if login { 1.0 } else { p.captcha_missing_factor },
    )
}

// ---- IP clustering -------------------------------------------------------------

/// Per-session IP factor: `min(1, boost * min(1, c_max / c))` where `c` is
/// the number of concurrent sessions sharing the IP and `boost` applies to
/// declared 3G carrier ranges.
pub fn ip_cluster_factor(
    sessions: &[(SessionId, &str)],
    p: &SentinelParams,
) -> BTreeMap<SessionId, f64> {
    let mut per_ip: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, ip) in sessions {
        *per_ip.entry(ip).or_default() += 1;
    }
    sessions
        .iter()
        .map(|&(sid, ip)| {
            let c = per_ip[ip] as f64;
            let cluster = (p.c_max / c).min(1.0);
            let boost = if p.carrier_ip_ranges.iter().any(|r| r.contains(ip)) {
                p.carrier_ip_boost
            } else {
                1.0
            };
            (sid, (boost * cluster).min(1.0))
        })
        .collect()
}

// ---- behavioral analysis ---------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct BehaviorProfile {
    pub session: SessionId,
    pub start_t: f64,
    /// Per-second speeds over the analysis window; `None` where no fix arrived.
    pub speeds: Vec<Option<f64>>,
}

/// Pearson correlation over seconds where both profiles have data. `None`
/// when the overlap is too short or either side has zero variance.
pub fn pearson(a: &[Option<f64>], b: &[Option<f64>], min_overlap: usize) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = a
        .iter()
        .zip(b)
        .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
        .collect();
    if pairs.len() < min_overlap.max(2) {
        return None;
    }
    let n = pairs.len() as f64;
    let (mx, my) = pairs
        .iter()
        .fold((0.0, 0.0), |(sx, sy), (x, y)| (sx + x, sy + y));
    let (mx, my) = (mx / n, my / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in &pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx <= 1e-12 || syy <= 1e-12 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Spawn-burst and trace-similarity detectors. Flagged sessions get
/// `behavior_penalty`, everyone else 1.0.
pub fn behavior_factor(
    profiles: &[BehaviorProfile],
    p: &SentinelParams,
) -> BTreeMap<SessionId, f64> {
    let mut flagged: BTreeSet<SessionId> = BTreeSet::new();
    if profiles.len() >= 2 {
        let mut starts: Vec<(f64, SessionId)> =
            profiles.iter().map(|x| (x.start_t, x.session)).collect();
        starts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for i in 0..starts.len() {
            let group: Vec<SessionId> = starts[i..]
                .iter()
                .take_while(|(t, _)| *t <= starts[i].0 + p.burst_window_s)
                .map(|&(_, s)| s)
                .collect();
            if group.len() >= p.burst_n {
                flagged.extend(group);
            }
        }

        let n = profiles.len();
        let mut parent: Vec<usize> = (0..n).collect();
        for i in 0..n {
            for j in i + 1..n {
                let similar = pearson(&profiles[i].speeds, &profiles[j].speeds, p.corr_min_overlap)
                    .is_some_and(|r| r > p.corr_threshold);
                if similar {
                    let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<SessionId>> = BTreeMap::new();
        for (i, prof) in profiles.iter().enumerate() {
            let root = find(&mut parent, i);
            groups.entry(root).or_default().push(prof.session);
        }
        for members in groups.into_values() {
            if members.len() >= p.corr_group {
                flagged.extend(members);
            }
        }
    }
    profiles
        .iter()
        .map(|x| {
            let f = if flagged.contains(&x.session) {
                p.behavior_penalty
            } else {
                1.0
            };
            (x.session, f)
        })
        .collect()
}

// ---- composition -------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct TrustAssessment {
    pub session: SessionId,
    pub level_weight: f64,
    pub carrier: CarrierVerdict,
    pub carrier_factor: f64,
    pub phone_factor: f64,
    pub login_factor: f64,
    pub ip_factor: f64,
    pub behavior_factor: f64,
    pub final_weight: f64,
}

impl TrustAssessment {
    /// All factors neutral.
    pub fn neutral(session: SessionId, level_weight: f64) -> Self {
        TrustAssessment {
            session,
            level_weight,
            carrier: CarrierVerdict::Unchecked,
            carrier_factor: 1.0,
            phone_factor: 1.0,
            login_factor: 1.0,
            ip_factor: 1.0,
            behavior_factor: 1.0,
            final_weight: level_weight,
        }
    }

    pub fn recompute(&mut self) {
        self.final_weight = trust_weight(self);
    }
}

pub fn trust_weight(a: &TrustAssessment) -> f64 {
    a.level_weight
        * a.carrier_factor
        * a.phone_factor
        * a.login_factor
        * a.ip_factor
        * a.behavior_factor
}

/// Stateful defense layer driven by the simulation loop.
#[derive(Debug, Clone)]
pub struct Sentinel {
    pub params: SentinelParams,
    pub oracle: CarrierOracle,
    failed: BTreeSet<SessionId>,
    passed: BTreeSet<SessionId>,
    rng: ChaCha8Rng,
    pub checks_run: u64,
}

impl Sentinel {
    pub fn new(params: SentinelParams, oracle: CarrierOracle, seed: u64) -> Self {
        Sentinel {
            params,
            oracle,
            failed: BTreeSet::new(),
            passed: BTreeSet::new(),
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x5e47_1e1c_a441_e500),
            checks_run: 0,
        }
    }

    pub fn carrier_failed(&self, session: SessionId) -> bool {
        self.failed.contains(&session)
    }

    /// Called for every ingested fix. Returns the verdict when the random
    /// draw selects this fix for verification.
    pub fn on_probe(&mut self, session: SessionId, reported: Point) -> Option<CarrierVerdict> {
        if !self.params.toggles.carrier || self.failed.contains(&session) {
            return None;
        }
        if !self.oracle.knows(session) {
            return None;
        }
        if self.rng.gen::<f64>() >= self.params.p_check {
            return None;
        }
        self.checks_run += 1;
        let verdict = carrier_check(&self.oracle, session, reported);
        match verdict {
            CarrierVerdict::Fail => {
                self.failed.insert(session);
            }
            CarrierVerdict::Pass => {
                self.passed.insert(session);
            }
            _ => {}
        }
        Some(verdict)
    }

    fn carrier_state(&self, session: SessionId) -> (CarrierVerdict, f64) {
        if !self.params.toggles.carrier {
            return (CarrierVerdict::Unchecked, 1.0);
        }
        if self.failed.contains(&session) {
            (CarrierVerdict::Fail, 0.0)
        } else if !self.oracle.knows(session) {
            (
                CarrierVerdict::UnknownDevice,
                self.params.unknown_device_factor,
            )
        } else if self.passed.contains(&session) {
            (CarrierVerdict::Pass, 1.0)
        } else {
            (CarrierVerdict::Unchecked, 1.0)
        }
    }

    /// Score every active session against the engine's current state.
    pub fn assess(&self, engine: &Engine, now: f64) -> Vec<TrustAssessment> {
        let p = &self.params;
        let active: Vec<_> = engine.sessions().filter(|s| s.is_active()).collect();

        let ip_factors = if p.toggles.ip {
            let concurrent: Vec<(SessionId, &str)> = active
                .iter()
                .filter(|s| s.last_fix().map_or(s.start_t, |f| f.t) > now - p.ip_window_s)
                .map(|s| (s.session_id, s.source_ip.as_str()))
                .collect();
            ip_cluster_factor(&concurrent, p)
        } else {
            BTreeMap::new()
        };

        let behavior = if p.toggles.behavior {
            let first = now - p.corr_window_s + 1.0;
            let len = p.corr_window_s as usize;
            let profiles: Vec<BehaviorProfile> = active
                .iter()
                .map(|s| {
                    let mut speeds = vec![None; len];
                    for f in s.history.iter().filter(|f| f.t >= first && f.t <= now) {
                        let k = (f.t - first).floor() as usize;
                        if k < len {
                            speeds[k] = Some(f.speed_kph);
                        }
                    }
                    BehaviorProfile {
                        session: s.session_id,
                        start_t: s.start_t,
                        speeds,
                    }
                })
                .collect();
            behavior_factor(&profiles, p)
        } else {
            BTreeMap::new()
        };

        active
            .iter()
            .map(|s| {
                let mut a =
                    TrustAssessment::neutral(s.session_id, engine.level_weight_of(s.session_id));
                let (verdict, cf) = self.carrier_state(s.session_id);
                a.carrier = verdict;
                a.carrier_factor = cf;
                if p.toggles.registration {
                    let (ph, lg) = registration_factors(engine.account_of(s.session_id), p);
                    a.phone_factor = ph;
                    a.login_factor = lg;
                }
                a.ip_factor = ip_factors.get(&s.session_id).copied().unwrap_or(1.0);
                a.behavior_factor = behavior.get(&s.session_id).copied().unwrap_or(1.0);
                a.recompute();
                a
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oracle() -> CarrierOracle {
        let mut o = CarrierOracle::new(vec![
            Antenna {
                id: "A".into(),
                position: Point::new(0.0, 0.0),
                radius_m: 2000.0,
            },
            Antenna {
                id: "F".into(),
                position: Point::new(20_000.0, 0.0),
                radius_m: 2000.0,
            },
        ]);
        o.register_device(1, DeviceLocation::Fixed(Point::new(100.0, 0.0)));
        o.register_device(2, DeviceLocation::Fixed(Point::new(20_100.0, 0.0)));
        o
    }

    #[test]
    fn carrier_pass_and_fail() {
        let o = oracle();
        assert_eq!(
            carrier_check(&o, 1, Point::new(500.0, 0.0)),
            CarrierVerdict::Pass
        );
        // farm far away, reporting on campus
        assert_eq!(
            carrier_check(&o, 2, Point::new(500.0, 0.0)),
            CarrierVerdict::Fail
        );
        assert_eq!(
            carrier_check(&o, 9, Point::new(500.0, 0.0)),
            CarrierVerdict::UnknownDevice
        );
    }

    #[test]
    fn failure_is_permanent_and_disabled_is_unchecked() {
        let mut params = SentinelParams::default();
        params.toggles.carrier = true;
        params.p_check = 1.0;
        let mut s = Sentinel::new(params.clone(), oracle(), 1);
        assert_eq!(
            s.on_probe(2, Point::new(0.0, 0.0)),
            Some(CarrierVerdict::Fail)
        );
        assert!(s.carrier_failed(2));
        assert_eq!(s.carrier_state(2), (CarrierVerdict::Fail, 0.0));
        // no further checks once failed
        assert_eq!(s.on_probe(2, Point::new(20_000.0, 0.0)), None);
        assert_eq!(s.carrier_state(9), (CarrierVerdict::UnknownDevice, 0.5));

        params.toggles.carrier = false;
        let mut off = Sentinel::new(params, oracle(), 1);
        assert_eq!(off.on_probe(2, Point::new(0.0, 0.0)), None);
        assert_eq!(off.carrier_state(2), (CarrierVerdict::Unchecked, 1.0));
    }

    #[test]
    fn check_rate_follows_p_check() {
        let mut params = SentinelParams::default();
        params.toggles.carrier = true;
        let mut s = Sentinel::new(params, oracle(), 42);
        for _ in 0..300_000 {
            s.on_probe(1, Point::new(0.0, 0.0));
        }
        assert!(
            (s.checks_run as f64 - 1000.0).abs() < 120.0,
            "{}",
            s.checks_run
        );
    }

    #[test]
    fn registration_table() {
        let p = SentinelParams::default();
        let mut acc = UserAccount {
            user_id: 0,
            username: "u".into(),
            registered: true,
            email: Some("u@x.io".into()),
            phone_verified: true,
            captcha_passed: true,
            points: 0,
            created_t: 0.0,
        };
        let product = |a: &UserAccount| {
            let (x, y) = registration_factors(Some(a), &p);
            x * y
        };
        assert_eq!(product(&acc), 1.0);
        acc.phone_verified = false;
        assert_eq!(product(&acc), 0.5);
        acc.phone_verified = true;
        acc.captcha_passed = false;
        assert_eq!(product(&acc), 0.75);
        acc.phone_verified = false;
        assert_eq!(product(&acc), 0.375);
        assert_eq!(registration_factors(None, &p), (0.5, 0.75));
    }

    #[test]
    fn ip_clusters() {
        let p = SentinelParams::default();
        let f = ip_cluster_factor(&[(1, "1.2.3.4")], &p);
        assert_eq!(f[&1], 1.0);
        let many: Vec<(SessionId, &str)> = (0..15).map(|i| (i, "9.9.9.9")).collect();
        let f = ip_cluster_factor(&many, &p);
        assert!(f.values().all(|&v| (v - 0.2).abs() < 1e-12));
        // composition: 15 level-2 bots behind one IP
        let count: f64 = f.values().map(|v| 1.5 * v).sum();
        assert!((count - 4.5).abs() < 1e-9 && count < 10.0);
    }

    #[test]
    fn carrier_ranges_soften_but_never_exceed_one() {
        let p = SentinelParams {
            carrier_ip_ranges: vec![Cidr::parse("10.64.0.0/10").unwrap()],
            ..SentinelParams::default()
        };
        let six: Vec<(SessionId, &str)> = (0..6).map(|i| (i, "10.65.0.1")).collect();
        let f = ip_cluster_factor(&six, &p);
        assert!((f[&0] - 0.625).abs() < 1e-12);
        let f = ip_cluster_factor(&[(7, "10.65.0.2")], &p);
        assert_eq!(f[&7], 1.0);
        assert!(!Cidr::parse("10.64.0.0/10").unwrap().contains("10.128.0.1"));
        assert!(Cidr::parse("10.0.0.0/33").is_err());
    }

    fn square_wave(offset: usize, len: usize) -> Vec<Option<f64>> {
        (0..len)
            .map(|k| Some(if (k + offset) % 20 < 10 { 8.0 } else { 0.0 }))
            .collect()
    }

    #[test]
    fn identical_simultaneous_bots_flagged() {
        let p = SentinelParams::default();
        let bots: Vec<BehaviorProfile> = (0..15)
            .map(|i| BehaviorProfile {
                session: i,
                start_t: 0.0,
                speeds: square_wave(0, 600),
            })
            .collect();
        let f = behavior_factor(&bots, &p);
        assert!(f.values().all(|&v| v == 0.2));
    }

    #[test]
    fn similarity_alone_flags_a_group() {
        let p = SentinelParams::default();
        let bots: Vec<BehaviorProfile> = (0..6)
            .map(|i| BehaviorProfile {
                session: i,
                start_t: 100.0 * i as f64,
                speeds: square_wave(0, 600),
            })
            .collect();
        assert!(behavior_factor(&bots, &p).values().all(|&v| v == 0.2));
    }

    #[test]
    fn staggered_varied_bots_pass() {
        let p = SentinelParams::default();
        let bots: Vec<BehaviorProfile> = (0..15)
            .map(|i| BehaviorProfile {
                session: i,
                start_t: 30.0 * i as f64,
                speeds: square_wave(i as usize * 3, 600),
            })
            .collect();
        assert!(behavior_factor(&bots, &p).values().all(|&v| v == 1.0));
    }

    #[test]
    fn small_groups_pass() {
        let p = SentinelParams::default();
        let pair: Vec<BehaviorProfile> = (0..2)
            .map(|i| BehaviorProfile {
                session: i,
                start_t: 0.0,
                speeds: square_wave(0, 600),
            })
            .collect();
        assert!(behavior_factor(&pair, &p).values().all(|&v| v == 1.0));
    }

    #[test]
    fn pearson_edge_cases() {
        let flat = vec![Some(70.0); 100];
        assert_eq!(pearson(&flat, &flat, 10), None);
        let a = square_wave(0, 100);
        let b: Vec<Option<f64>> = a.iter().map(|v| v.map(|x| 3.0 * x + 1.0)).collect();
        assert!((pearson(&a, &b, 10).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(pearson(&a[..5], &b[..5], 10), None);
    }

    #[test]
    fn composition_examples() {
        let mut a = TrustAssessment::neutral(1, 1.5);
        assert_eq!(trust_weight(&a), 1.5);
        a.phone_factor = 0.5;
        a.login_factor = 0.75;
        a.ip_factor = 0.2;
        a.recompute();
        assert!((a.final_weight - 0.1125).abs() < 1e-12);
        a.carrier_factor = 0.0;
        a.recompute();
        assert_eq!(a.final_weight, 0.0);
    }

    #[test]
    fn antenna_spec() {
        let a = Antenna::parse("campus:750,0").unwrap();
        assert_eq!(a.radius_m, 2000.0);
        assert_eq!(Antenna::parse("f:1,2,500").unwrap().radius_m, 500.0);
        assert!(Antenna::parse("bad").is_err());
        assert!(Antenna::parse("x:1").is_err());
    }
}
