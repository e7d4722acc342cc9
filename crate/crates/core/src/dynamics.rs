//! Trajectories of the planar map, empirical attractor detection and exact
//! periodic-orbit search on the line `s = 1`.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{AttractorPrediction, Case, PeriodPrediction};
use crate::error::{Error, Result};
use crate::hitting_map;
use crate::planar::{equilibrium_segment, step, two_cycle, PlanarParams, PlanarState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    /// Iterations dropped before the window is recorded.
    pub transient: u64,
    pub window: usize,
    pub tol: f64,
    pub period_max: usize,
    pub seed: u64,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig { transient: 10_000, window: 1_000, tol: 1e-9, period_max: 64, seed: 0 }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::Domain(format!("tol must be positive, got {}", self.tol)));
        }
        if self.period_max == 0 {
            return Err(Error::Domain("period_max must be >= 1".into()));
        }
        if self.window < 2 * self.period_max {
            return Err(Error::Domain(format!(
                "window ({}) must be at least 2 * period_max ({})",
                self.window,
                2 * self.period_max
            )));
        }
        Ok(())
    }
}

pub fn simulate(p: &PlanarParams, st0: PlanarState, n: usize) -> Vec<PlanarState> {
    let mut out = Vec::with_capacity(n + 1);
    let mut st = st0;
    out.push(st);
    for _ in 0..n {
        st = step(p, st);
        out.push(st);
    }
    out
}

/// Whether the map translates interior points along lines `p = const`.
fn translates(p: &PlanarParams) -> bool {
    p.beta() == 1.0
}

/// Number of steps from an interior state that stay strictly inside the
/// strip when `β = 1`.
fn interior_run(p: &PlanarParams, st: PlanarState) -> u64 {
    let d = p.a() * st.p();
    if st.s().abs() >= 1.0 || d == 0.0 {
        return 0;
    }
    let room = if d > 0.0 { st.s() + 1.0 } else { 1.0 - st.s() };
    let j = (room / d.abs()).floor() - 1.0;
    if j < 1.0 {
        0
    } else if j >= u64::MAX as f64 {
        u64::MAX
    } else {
        j as u64
    }
}

fn jump(p: &PlanarParams, st: PlanarState, j: u64) -> PlanarState {
    let shift = j as f64 * p.a() * st.p();
    PlanarState::raw(st.x() - shift, st.s() - shift)
}

/// State after `n` steps. At `β = 1` interior stretches (where the map is a
/// translation by `-a p` in both coordinates) are crossed in one jump, so
/// `n` may be astronomically large.
pub fn fast_forward(p: &PlanarParams, st0: PlanarState, n: u64) -> PlanarState {
    let mut st = st0;
    let mut left = n;
    let fast = translates(p);
    while left > 0 {
        if fast {
            if st.p() == 0.0 && st.s().abs() < 1.0 {
                return st;
            }
            let j = interior_run(p, st).min(left);
            if j > 1 {
                st = jump(p, st, j);
                left -= j;
                continue;
            }
        }
        let next = step(p, st);
        if next == st {
            return st;
        }
        st = next;
        left -= 1;
    }
    st
}

/// Arrival on a boundary line `|s| = 1` from inside the strip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryEvent {
    /// Iteration index of `at`.
    pub n: u64,
    pub before: PlanarState,
    pub at: PlanarState,
    pub after: PlanarState,
}

/// The next arrival on `|s| = 1` from the interior, within `cap` steps.
pub fn next_boundary_hit(p: &PlanarParams, st0: PlanarState, cap: u64) -> Option<BoundaryEvent> {
    let mut st = st0;
    let mut n = 0u64;
    let fast = translates(p);
    while n < cap {
        if fast {
            let j = interior_run(p, st).min(cap - n);
            if j > 1 {
                st = jump(p, st, j - 1);
                n += j - 1;
            }
        }
        let next = step(p, st);
        n += 1;
        if next == st {
            return None;
        }
        if next.s().abs() == 1.0 && st.s().abs() < 1.0 {
            return Some(BoundaryEvent { n, before: st, at: next, after: step(p, next) });
        }
        st = next;
    }
    None
}

/// Successive boundary arrivals, at most `count` of them.
pub fn boundary_events(p: &PlanarParams, st0: PlanarState, count: usize, cap: u64) -> Vec<BoundaryEvent> {
    let mut out = Vec::with_capacity(count);
    let mut st = st0;
    let mut offset = 0u64;
    while out.len() < count {
        let Some(mut ev) = next_boundary_hit(p, st, cap) else { break };
        ev.n += offset;
        offset = ev.n;
        st = ev.at;
        out.push(ev);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AttractorKind {
    #[serde(rename = "fixed_point")]
    FixedPoint,
    #[serde(rename = "cycle")]
    Cycle,
    #[serde(rename = "segment_EF")]
    SegmentEF,
    #[serde(rename = "undetermined")]
    Undetermined,
}

impl fmt::Display for AttractorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AttractorKind::FixedPoint => "fixed_point",
            AttractorKind::Cycle => "cycle",
            AttractorKind::SegmentEF => "segment_EF",
            AttractorKind::Undetermined => "undetermined",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttractorReport {
    pub kind: AttractorKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<u32>,
    pub witness: Vec<PlanarState>,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum EquilibriumLocation {
    E,
    F,
    Interior,
}

impl AttractorReport {
    /// Where a fixed point sits on `EF`; `None` for other kinds.
    pub fn location(&self, p: &PlanarParams, tol: f64) -> Option<EquilibriumLocation> {
        if self.kind != AttractorKind::FixedPoint {
            return None;
        }
        let w = self.witness.last()?;
        let seg = equilibrium_segment(p);
        Some(if w.dist(&seg.e) <= tol {
            EquilibriumLocation::E
        } else if w.dist(&seg.f) <= tol {
            EquilibriumLocation::F
        } else {
            EquilibriumLocation::Interior
        })
    }
}

fn max_shift_deviation(w: &[PlanarState], q: usize) -> f64 {
    w.iter().zip(&w[q..]).map(|(a, b)| a.dist(b)).fold(0.0, f64::max)
}

/// At `β = 1` a state with `p ≠ 0` off the boundary lines keeps moving along
/// `EF`, however slowly.
fn creeping(p: &PlanarParams, st: &PlanarState) -> bool {
    translates(p) && st.p() != 0.0 && st.s().abs() < 1.0
}

pub fn detect_attractor(p: &PlanarParams, st0: PlanarState, cfg: &DetectionConfig) -> Result<AttractorReport> {
    cfg.validate()?;
    let start = fast_forward(p, st0, cfg.transient);
    let w = simulate(p, start, cfg.window - 1);
    let seg = equilibrium_segment(p);
    let last = *w.last().unwrap();

    let found = (1..=cfg.period_max)
        .find(|&q| w.iter().zip(&w[q..]).all(|(a, b)| a.dist(b) <= cfg.tol))
        .map(|q| (q, max_shift_deviation(&w, q)));
    let on_segment = || w.iter().all(|st| seg.distance(st) <= cfg.tol);
    match found {
        Some((1, dev)) => {
            let drift = w[0].dist(&last);
            if drift <= cfg.tol && !creeping(p, &last) {
                Ok(AttractorReport { kind: AttractorKind::FixedPoint, period: Some(1), witness: vec![last], residual: dev })
            } else if on_segment() {
                Ok(AttractorReport { kind: AttractorKind::SegmentEF, period: None, witness: vec![last], residual: seg.distance(&last) })
            } else {
                Ok(undetermined(last))
            }
        }
        Some((q, dev)) => Ok(AttractorReport {
            kind: AttractorKind::Cycle,
            period: Some(q as u32),
            witness: w[w.len() - q..].to_vec(),
            residual: dev,
        }),
        None if on_segment() => Ok(AttractorReport {
            kind: AttractorKind::SegmentEF,
            period: None,
            witness: vec![last],
            residual: seg.distance(&last),
        }),
        None => Ok(undetermined(last)),
    }
}

fn undetermined(last: PlanarState) -> AttractorReport {
    AttractorReport { kind: AttractorKind::Undetermined, period: None, witness: vec![last], residual: f64::NAN }
}

/// Default sample count for [`find_periodic_orbits`].
pub const ORBIT_GRID: usize = 10_000;

const BISECT_TOL: f64 = 1e-12;
const ORBIT_VALIDATE_TOL: f64 = 1e-8;

fn return_gap(p: &PlanarParams, period: u32, x: f64) -> f64 {
    let mut st = PlanarState::raw(x, 1.0);
    for _ in 0..period {
        st = step(p, st);
    }
    st.x() - x
}

/// Points `(x, 1)` with `f^period(x, 1) = (x, 1)`, found from sign changes
/// of `x ↦ [f^period(x, 1)]_x - x` on a uniform grid. Orbits between two
/// neighbouring grid points with no sign change are missed.
pub fn find_periodic_orbits(
    p: &PlanarParams,
    period: u32,
    x_range: (f64, f64),
    grid: usize,
) -> Result<Vec<PlanarState>> {
    if period == 0 {
        return Err(Error::Domain("period must be >= 1".into()));
    }
    if grid < 2 {
        return Err(Error::Domain("grid must have at least 2 points".into()));
    }
    let (lo, hi) = x_range;
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Domain(format!("invalid x range [{lo}, {hi}]")));
    }
    let xs: Vec<f64> = (0..grid).map(|i| lo + (hi - lo) * i as f64 / (grid - 1) as f64).collect();
    let gs: Vec<f64> = xs.iter().map(|&x| return_gap(p, period, x)).collect();

    let mut roots: Vec<f64> = Vec::new();
    for i in 0..grid {
        if gs[i] == 0.0 {
            roots.push(xs[i]);
            continue;
        }
        if i + 1 < grid && gs[i + 1] != 0.0 && (gs[i] < 0.0) != (gs[i + 1] < 0.0) {
            roots.push(refine_root(p, period, (xs[i], gs[i]), (xs[i + 1], gs[i + 1])));
        }
    }

    let mut out: Vec<PlanarState> = Vec::new();
    for x in roots {
        let st = PlanarState::raw(x, 1.0);
        let mut back = st;
        for _ in 0..period {
            back = step(p, back);
        }
        if back.dist(&st) > ORBIT_VALIDATE_TOL * (1.0 + x.abs()) {
            log::debug!("rejecting candidate x = {x}: returns to {back}");
            continue;
        }
        if out.iter().all(|o| (o.x() - x).abs() > 1e-9 * (1.0 + x.abs())) {
            out.push(st);
        }
    }
    Ok(out)
}

fn refine_root(p: &PlanarParams, period: u32, mut a: (f64, f64), mut b: (f64, f64)) -> f64 {
    while b.0 - a.0 > BISECT_TOL * (1.0 + a.0.abs()) {
        let m = 0.5 * (a.0 + b.0);
        if m <= a.0 || m >= b.0 {
            break;
        }
        let gm = return_gap(p, period, m);
        if gm == 0.0 {
            return m;
        }
        if (gm < 0.0) == (a.1 < 0.0) {
            a = (m, gm);
        } else {
            b = (m, gm);
        }
    }
    // the bracket now lies (generically) on one linear piece
    let x = a.0 - a.1 * (b.0 - a.0) / (b.1 - a.1);
    if x.is_finite() && x >= a.0 && x <= b.0 {
        x
    } else {
        0.5 * (a.0 + b.0)
    }
}

/// Empirical outcome of one detection run, with fixed points located on `EF`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Outcome {
    FixedPoint(EquilibriumLocation),
    Cycle(u32),
    SegmentEF,
    Undetermined,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::FixedPoint(EquilibriumLocation::E) => f.write_str("fixed_point@E"),
            Outcome::FixedPoint(EquilibriumLocation::F) => f.write_str("fixed_point@F"),
            Outcome::FixedPoint(EquilibriumLocation::Interior) => f.write_str("fixed_point"),
            Outcome::Cycle(q) => write!(f, "cycle:{q}"),
            Outcome::SegmentEF => f.write_str("segment_EF"),
            Outcome::Undetermined => f.write_str("undetermined"),
        }
    }
}

/// Tolerance used to decide whether a detected fixed point is `E` or `F`.
pub fn location_tol(cfg: &DetectionConfig) -> f64 {
    (cfg.tol * 1e3).max(1e-7)
}

pub fn outcome_of(p: &PlanarParams, report: &AttractorReport, cfg: &DetectionConfig) -> Outcome {
    match report.kind {
        AttractorKind::FixedPoint => {
            Outcome::FixedPoint(report.location(p, location_tol(cfg)).unwrap_or(EquilibriumLocation::Interior))
        }
        AttractorKind::Cycle => Outcome::Cycle(report.period.unwrap_or(0)),
        AttractorKind::SegmentEF => Outcome::SegmentEF,
        AttractorKind::Undetermined => Outcome::Undetermined,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasinSample {
    pub starts: Vec<PlanarState>,
    pub reports: Vec<AttractorReport>,
    pub outcomes: Vec<Outcome>,
}

impl BasinSample {
    pub fn push(&mut self, p: &PlanarParams, start: PlanarState, report: AttractorReport, cfg: &DetectionConfig) {
        self.outcomes.push(outcome_of(p, &report, cfg));
        self.starts.push(start);
        self.reports.push(report);
    }

    pub fn tally(&self) -> BTreeMap<Outcome, usize> {
        let mut t = BTreeMap::new();
        for o in &self.outcomes {
            *t.entry(*o).or_insert(0) += 1;
        }
        t
    }
}

/// Half-width of the sampling box in `x`.
pub fn start_box(p: &PlanarParams) -> f64 {
    2.0 * p.x_star().abs().max(1.0) + 2.0
}

/// The `index`-th random start for `seed`, independent of how starts are
/// distributed across workers.
pub fn random_start(p: &PlanarParams, seed: u64, index: u64) -> PlanarState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let half = start_box(p);
    let mut x = rng.gen_range(-half..=half);
    let s = rng.gen_range(-1.0..=1.0);
    if equilibrium_segment(p).distance(&PlanarState::raw(x, s)) < 1e-12 {
        x += 1e-6 * half;
    }
    PlanarState::raw(x, s)
}

pub fn basin_sample(p: &PlanarParams, n_starts: usize, cfg: &DetectionConfig) -> Result<BasinSample> {
    if n_starts == 0 {
        return Err(Error::Domain("n_starts must be >= 1".into()));
    }
    cfg.validate()?;
    let starts: Vec<PlanarState> = (0..n_starts as u64).map(|i| random_start(p, cfg.seed, i)).collect();
    let reports: Vec<AttractorReport> = starts
        .par_iter()
        .map(|st| detect_attractor(p, *st, cfg))
        .collect::<Result<_>>()?;
    let outcomes = reports.iter().map(|r| outcome_of(p, r, cfg)).collect();
    Ok(BasinSample { starts, reports, outcomes })
}

/// Detection from a slightly perturbed point of the predicted stable
/// `(2k+2)`-cycle, when the parameters lie in some `Ω_k`. Random starts can
/// miss a small basin; this checks the cycle is there and attracting.
pub fn stable_cycle_probe(p: &PlanarParams, cfg: &DetectionConfig) -> Result<Option<(PlanarState, AttractorReport)>> {
    if !(p.lambda() < 0.0 && p.beta() > 1.0) {
        return Ok(None);
    }
    let k_max = hitting_map::default_k_max(p)?;
    let Some(fp) = hitting_map::fixed_points(p, k_max)?.into_iter().find(|f| f.stable) else {
        return Ok(None);
    };
    let gap = fp.x - p.x_star();
    let start = PlanarState::raw(fp.x + 1e-6 * gap, 1.0);
    Ok(Some((start, detect_attractor(p, start, cfg)?)))
}

fn near_two_cycle(p: &PlanarParams, report: &AttractorReport, tol: f64) -> bool {
    let Ok((q, mq)) = two_cycle(p) else { return false };
    report.witness.iter().all(|w| w.dist(&q) <= tol || w.dist(&mq) <= tol)
}

/// Whether a basin sample is consistent with the predicted attractor set.
pub fn agrees(p: &PlanarParams, pred: &AttractorPrediction, sample: &BasinSample, cfg: &DetectionConfig) -> bool {
    use EquilibriumLocation::{E, F};
    let wtol = location_tol(cfg);
    let pairs = || sample.outcomes.iter().zip(&sample.reports);
    match pred.case {
        Case::A => sample.outcomes.iter().all(|o| matches!(o, Outcome::FixedPoint(_))),
        Case::B => sample.outcomes.iter().all(|o| matches!(o, Outcome::FixedPoint(E | F))),
        Case::C => pairs().all(|(o, r)| match o {
            Outcome::FixedPoint(E | F) => true,
            Outcome::Cycle(2) => near_two_cycle(p, r, wtol),
            _ => false,
        }),
        Case::D => pairs().all(|(o, r)| matches!(o, Outcome::Cycle(2)) && near_two_cycle(p, r, wtol)),
        Case::E => match pred.period {
            Some(PeriodPrediction::StablePeriod { period, .. }) => {
                sample.outcomes.iter().all(|o| *o == Outcome::Cycle(period) || *o == Outcome::Undetermined)
                    && sample.outcomes.contains(&Outcome::Cycle(period))
            }
            _ => sample.outcomes.iter().all(|o| *o == Outcome::Undetermined),
        },
        Case::F => sample
            .outcomes
            .iter()
            .all(|o| matches!(o, Outcome::SegmentEF | Outcome::FixedPoint(E | F))),
        Case::G => sample
            .outcomes
            .iter()
            .all(|o| matches!(o, Outcome::FixedPoint(_) | Outcome::Cycle(2))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::predict_attractor;
    use crate::planar::step_n;

    fn pb(l: f64, b: f64) -> PlanarParams {
        PlanarParams::from_beta(l, b).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(DetectionConfig::default().validate().is_ok());
        let bad = DetectionConfig { window: 100, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = DetectionConfig { tol: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let cfg: DetectionConfig = serde_json::from_str(r#"{"tol": 1e-8}"#).unwrap();
        assert_eq!(cfg.window, 1000);
        assert_eq!(cfg.tol, 1e-8);
    }

    #[test]
    fn simulate_examples() {
        let p = PlanarParams::new(0.3, -1.8).unwrap();
        let seg = equilibrium_segment(&p);
        let e = seg.point_at(0.4);
        assert!(simulate(&p, e, 20).iter().all(|st| st.dist(&e) < 1e-15));
        let (q, mq) = two_cycle(&p).unwrap();
        let tr = simulate(&p, q, 6);
        assert_eq!(tr.len(), 7);
        for (i, st) in tr.iter().enumerate() {
            let want = if i % 2 == 0 { q } else { mq };
            assert!(st.dist(&want) < 1e-12);
        }
    }

    #[test]
    fn boundedness() {
        let p = PlanarParams::new(-0.5, 2.0).unwrap();
        for i in 0..100 {
            let st = random_start(&p, 11, i);
            let m = simulate(&p, st, 10_000).iter().map(|s| s.x().abs()).fold(0.0, f64::max);
            assert!(m.is_finite() && m < 100.0);
        }
    }

    #[test]
    fn fast_forward_matches_stepping() {
        // arrival phases on the boundary lines amplify rounding by ~2/|p| per
        // crossing, so only short horizons are compared pointwise
        let p = pb(-0.5, 1.0);
        for i in 0..50 {
            let st = random_start(&p, 3, i);
            let a = fast_forward(&p, st, 100);
            let b = step_n(&p, st, 100);
            assert!(a.dist(&b) < 1e-9, "{a} vs {b}");
        }
        let st = PlanarState::new(0.3, 0.2999).unwrap();
        let run = interior_run(&p, st);
        assert!(run > 1000);
        assert!(fast_forward(&p, st, run).dist(&step_n(&p, st, run)) < 1e-12);
        let q = pb(0.3, -1.5);
        let st = PlanarState::new(0.7, 0.2).unwrap();
        assert_eq!(fast_forward(&q, st, 333), step_n(&q, st, 333));
    }

    #[test]
    fn case_f_reaches_segment() {
        let p = pb(-0.5, 1.0);
        let seg = equilibrium_segment(&p);
        let cfg = DetectionConfig { transient: 1 << 50, ..Default::default() };
        for i in 0..20 {
            let st = random_start(&p, 8, i);
            let end = fast_forward(&p, st, cfg.transient);
            assert!(seg.distance(&end) < 1e-8, "{st} -> {end}");
            let r = detect_attractor(&p, st, &cfg).unwrap();
            let o = outcome_of(&p, &r, &cfg);
            assert!(
                matches!(o, Outcome::SegmentEF | Outcome::FixedPoint(EquilibriumLocation::E | EquilibriumLocation::F)),
                "{o}"
            );
        }
    }

    #[test]
    fn detect_examples() {
        let cfg = DetectionConfig::default();
        let st = PlanarState::new(1.7, -0.3).unwrap();
        let r = detect_attractor(&pb(0.5, 0.5), st, &cfg).unwrap();
        assert_eq!(r.kind, AttractorKind::FixedPoint);
        assert!(equilibrium_segment(&pb(0.5, 0.5)).distance(&r.witness[0]) < 1e-9);

        let p = pb(-0.5, -1.5);
        let r = detect_attractor(&p, st, &cfg).unwrap();
        assert_eq!((r.kind, r.period), (AttractorKind::Cycle, Some(2)));
        assert!(near_two_cycle(&p, &r, 1e-9));

        // an aperiodic attractor coexists with the stable 4-cycle here
        let p = pb(-2.0 / 3.0, 2.0);
        let sample = basin_sample(&p, 20, &cfg).unwrap();
        let cycles: Vec<_> = sample.reports.iter().filter(|r| r.kind == AttractorKind::Cycle).collect();
        assert!(!cycles.is_empty());
        for r in cycles {
            assert_eq!(r.period, Some(4));
            let w0 = r.witness[0];
            assert!(step_n(&p, w0, 4).dist(&w0) <= cfg.tol);
            assert!(step_n(&p, w0, 2).dist(&w0) > cfg.tol);
        }
    }

    #[test]
    fn probe_finds_small_basin_cycle() {
        let cfg = DetectionConfig { tol: 1e-8, ..Default::default() };
        let p = pb(-0.589, 1.8);
        let (_, r) = stable_cycle_probe(&p, &cfg).unwrap().unwrap();
        assert_eq!((r.kind, r.period), (AttractorKind::Cycle, Some(4)));
        assert!(stable_cycle_probe(&pb(-0.5, 2.0), &cfg).unwrap().is_none());
        assert!(stable_cycle_probe(&pb(0.5, 0.5), &cfg).unwrap().is_none());
    }

    #[test]
    fn periodic_orbit_examples() {
        let p = PlanarParams::new(0.3, -1.8).unwrap();
        let r = find_periodic_orbits(&p, 1, (-5.0, 5.0), ORBIT_GRID).unwrap();
        assert!(r.iter().any(|st| (st.x() - p.x_star()).abs() < 1e-9));
        let r = find_periodic_orbits(&p, 2, (-5.0, 5.0), ORBIT_GRID).unwrap();
        assert!(r.iter().any(|st| (st.x() - 18.0 / 13.0).abs() < 1e-9), "{r:?}");

        let p = PlanarParams::new(-0.5, 2.0).unwrap();
        let r = find_periodic_orbits(&p, 6, (p.x_star(), 8.0), ORBIT_GRID).unwrap();
        assert!(r.iter().any(|st| (st.x() - p.x_star()).abs() > 1e-6));
        assert!(find_periodic_orbits(&p, 0, (0.0, 1.0), 10).is_err());
        assert!(find_periodic_orbits(&p, 1, (0.0, 1.0), 1).is_err());
    }

    #[test]
    fn basin_examples() {
        let cfg = DetectionConfig { tol: 1e-8, ..Default::default() };
        for (l, b) in [(0.3, -1.5), (0.5, 1.2), (-0.3, -1.0)] {
            let p = pb(l, b);
            let s = basin_sample(&p, 40, &cfg).unwrap();
            let pred = predict_attractor(&p).unwrap();
            assert!(agrees(&p, &pred, &s, &cfg), "({l}, {b}): {:?}", s.tally());
        }
    }

    #[test]
    fn basin_is_deterministic() {
        let p = pb(-0.6, 1.7);
        let cfg = DetectionConfig { seed: 99, ..Default::default() };
        let a = basin_sample(&p, 16, &cfg).unwrap();
        let b = basin_sample(&p, 16, &cfg).unwrap();
        assert_eq!(a.starts, b.starts);
        assert_eq!(a.outcomes, b.outcomes);
    }

    #[test]
    fn case_f_events_contract() {
        let p = pb(-0.5, 1.0);
        for i in 0..20 {
            let st = random_start(&p, 5, i);
            for ev in boundary_events(&p, st, 12, u64::MAX) {
                assert!(ev.after.p().abs() <= 0.5 * ev.before.p().abs() * (1.0 + 1e-9) + 1e-15, "{ev:?}");
            }
        }
    }
}
