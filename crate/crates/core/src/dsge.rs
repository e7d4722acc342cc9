//! Four-dimensional macroeconomic model: output gap `y`, inflation `u`,
//! interest rate `v` and expected inflation `σ = u - ρ s`, where `s` is the
//! stop state driven by `u / ρ`.
//!
//! One step is implicit because `σ_{n+1}` depends on `u_{n+1}` through the
//! stop. It is resolved by trying each branch of `Φ` in turn.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::hysteresis::clip_unchecked;

const PIVOT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDsgeParams")]
pub struct DsgeParams {
    pub a1: f64,
    pub b1: f64,
    pub b2: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub rho: f64,
    pub u_target: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDsgeParams {
    a1: f64,
    b1: f64,
    b2: f64,
    c1: f64,
    c2: f64,
    c3: f64,
    rho: f64,
    #[serde(default)]
    u_target: f64,
}

impl TryFrom<RawDsgeParams> for DsgeParams {
    type Error = Error;

    fn try_from(r: RawDsgeParams) -> Result<Self> {
        DsgeParams::new(r.a1, (r.b1, r.b2), (r.c1, r.c2, r.c3), r.rho, r.u_target)
    }
}

impl DsgeParams {
    pub fn new(a1: f64, b: (f64, f64), c: (f64, f64, f64), rho: f64, u_target: f64) -> Result<Self> {
        let p = DsgeParams { a1, b1: b.0, b2: b.1, c1: c.0, c2: c.1, c3: c.2, rho, u_target };
        for (name, v) in [
            ("a1", a1),
            ("b1", p.b1),
            ("b2", p.b2),
            ("c1", p.c1),
            ("c2", p.c2),
            ("c3", p.c3),
            ("rho", rho),
            ("u_target", u_target),
        ] {
            ensure_finite(name, v)?;
        }
        for (name, v) in [("a1", a1), ("b2", p.b2), ("c1", p.c1), ("c2", p.c2), ("c3", p.c3)] {
            if v < 0.0 {
                return Err(Error::Domain(format!("{name} must be non-negative, got {v}")));
            }
        }
        if !(0.0..1.0).contains(&p.b1) {
            return Err(Error::Domain(format!("b1 must lie in [0, 1), got {}", p.b1)));
        }
        if rho <= 0.0 {
            return Err(Error::Domain(format!("rho must be positive, got {rho}")));
        }
        for branch in Branch::ALL {
            let det = p.branch_matrix(branch).determinant();
            if det.abs() < PIVOT_EPS {
                return Err(Error::Singular(format!("{branch} branch determinant is {det}")));
            }
        }
        Ok(p)
    }

    /// `1 + a1 (c1 b2 + c2)`, the pivot of the interior elimination.
    pub fn interior_determinant(&self) -> f64 {
        1.0 + self.a1 * (self.c1 * self.b2 + self.c2)
    }

    /// `(1 - b1) - a1 b2 + a1 (b2 c1 + (1 - b1) c2)`, shared by both saturated branches.
    pub fn saturated_determinant(&self) -> f64 {
        (1.0 - self.b1) - self.a1 * self.b2 + self.a1 * (self.b2 * self.c1 + (1.0 - self.b1) * self.c2)
    }

    fn branch_matrix(&self, branch: Branch) -> Matrix3<f64> {
        let alpha = branch.alpha();
        Matrix3::new(
            1.0, -self.a1 * alpha, self.a1,
            -self.b2, 1.0 - self.b1 * alpha, 0.0,
            -self.c2, -self.c1, 1.0,
        )
    }
}

/// Branch of `Φ` taken by a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Interior,
    Upper,
    Lower,
}

impl Branch {
    pub const ALL: [Branch; 3] = [Branch::Interior, Branch::Upper, Branch::Lower];

    /// Coefficient of `u'` in `σ'`.
    fn alpha(self) -> f64 {
        match self {
            Branch::Interior => 0.0,
            _ => 1.0,
        }
    }

    /// Constant part of `σ'` given the current `u`, `s`.
    fn gamma(self, p: &DsgeParams, u: f64, s: f64) -> f64 {
        match self {
            Branch::Interior => u - p.rho * s,
            Branch::Upper => -p.rho,
            Branch::Lower => p.rho,
        }
    }

    fn accepts(self, t: f64) -> bool {
        match self {
            Branch::Interior => t.abs() <= 1.0,
            Branch::Upper => t >= 1.0,
            Branch::Lower => t <= -1.0,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Interior => "interior",
            Branch::Upper => "upper",
            Branch::Lower => "lower",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DsgeState {
    pub y: f64,
    pub u: f64,
    pub v: f64,
    pub s: f64,
    pub sigma: f64,
}

impl DsgeState {
    pub fn new(p: &DsgeParams, y: f64, u: f64, v: f64, s: f64) -> Result<Self> {
        for (name, x) in [("y", y), ("u", u), ("v", v), ("s", s)] {
            ensure_finite(name, x)?;
        }
        if s.abs() > 1.0 {
            return Err(Error::Domain(format!("s must lie in [-1, 1], got {s}")));
        }
        Ok(DsgeState { y, u, v, s, sigma: u - p.rho * s })
    }

    pub fn zero() -> Self {
        DsgeState { y: 0.0, u: 0.0, v: 0.0, s: 0.0, sigma: 0.0 }
    }

    pub fn z(&self) -> Vector3<f64> {
        Vector3::new(self.y, self.u, self.v)
    }

    /// Sup-norm distance over `(y, u, v, s)`.
    pub fn dist(&self, o: &DsgeState) -> f64 {
        [self.y - o.y, self.u - o.u, self.v - o.v, self.s - o.s]
            .iter()
            .fold(0.0, |m, d| m.max(d.abs()))
    }

    pub fn sup_norm(&self) -> f64 {
        self.dist(&DsgeState::zero())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Shock {
    pub eps: f64,
    pub eta: f64,
    pub xi: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ShockSequence {
    eps: Vec<f64>,
    eta: Vec<f64>,
    xi: Vec<f64>,
}

impl ShockSequence {
    pub fn new(eps: Vec<f64>, eta: Vec<f64>, xi: Vec<f64>) -> Result<Self> {
        if eps.len() != eta.len() || eps.len() != xi.len() {
            return Err(Error::Domain(format!(
                "shock lengths differ: {}, {}, {}",
                eps.len(),
                eta.len(),
                xi.len()
            )));
        }
        if eps.iter().chain(&eta).chain(&xi).any(|v| !v.is_finite()) {
            return Err(Error::Domain("shocks must be finite".into()));
        }
        Ok(ShockSequence { eps, eta, xi })
    }

    pub fn zero() -> Self {
        ShockSequence::default()
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    /// Shock at step `n`; an empty sequence is zero noise.
    pub fn get(&self, n: usize) -> Shock {
        if self.is_empty() {
            return Shock::default();
        }
        Shock { eps: self.eps[n], eta: self.eta[n], xi: self.xi[n] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepOutcome {
    pub state: DsgeState,
    pub branch: Branch,
    /// How many branches were consistent; more than one is logged.
    pub consistent: usize,
}

fn solve_branch(p: &DsgeParams, st: &DsgeState, sh: Shock, branch: Branch) -> Result<(Vector3<f64>, f64)> {
    let alpha = branch.alpha();
    let gamma = branch.gamma(p, st.u, st.s);
    let m = p.branch_matrix(branch);
    let rhs = Vector3::new(
        st.y + p.a1 * gamma + sh.eps,
        p.b1 * gamma + (1.0 - p.b1) * st.u + sh.eta,
        -p.c1 * p.u_target + p.c3 * st.v + sh.xi,
    );
    let z = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular(format!("{branch} branch is singular")))?;
    debug_assert!(alpha == 0.0 || alpha == 1.0);
    let t = st.s + (z[1] - st.u) / p.rho;
    Ok((z, t))
}

pub fn dsge_step_detailed(p: &DsgeParams, st: &DsgeState, sh: Shock) -> Result<StepOutcome> {
    let mut chosen: Option<(Branch, Vector3<f64>, f64)> = None;
    let mut consistent = 0;
    for branch in Branch::ALL {
        let (z, t) = solve_branch(p, st, sh, branch)?;
        if branch.accepts(t) {
            consistent += 1;
            if chosen.is_none() {
                chosen = Some((branch, z, t));
            }
        }
    }
    let Some((branch, z, t)) = chosen else {
        return Err(Error::ModelInconsistency(format!("no branch of the stop is consistent at {st:?}")));
    };
    if consistent > 1 {
        log::warn!("{consistent} branches consistent at {st:?}; taking {branch}");
    }
    let s = clip_unchecked(t);
    let state = DsgeState { y: z[0], u: z[1], v: z[2], s, sigma: z[1] - p.rho * s };
    if ![state.y, state.u, state.v].iter().all(|v| v.is_finite()) {
        return Err(Error::Domain("state left the finite range".into()));
    }
    Ok(StepOutcome { state, branch, consistent })
}

pub fn dsge_step(p: &DsgeParams, st: &DsgeState, sh: Shock) -> Result<DsgeState> {
    Ok(dsge_step_detailed(p, st, sh)?.state)
}

/// `(y, u, v)' = Λ (y, u, v) + A s + offset` on interior steps with zero
/// noise. `offset` vanishes when `u_target = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteriorForm {
    pub lambda: Matrix3<f64>,
    pub a: Vector3<f64>,
    pub offset: Vector3<f64>,
}

impl InteriorForm {
    /// `Λ` as row-major arrays.
    pub fn lambda_rows(&self) -> [[f64; 3]; 3] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.lambda[(i, j)]))
    }

    pub fn apply(&self, st: &DsgeState) -> Vector3<f64> {
        self.lambda * st.z() + self.a * st.s + self.offset
    }
}

pub fn interior_form(p: &DsgeParams) -> Result<InteriorForm> {
    let d = p.interior_determinant();
    if d.abs() < PIVOT_EPS {
        return Err(Error::Singular(format!("interior elimination pivot is {d}")));
    }
    let (a1, b1, b2, c1, c2, c3, rho) = (p.a1, p.b1, p.b2, p.c1, p.c2, p.c3, p.rho);
    let ly = Vector3::new(1.0, a1 * (1.0 - c1), -a1 * c3) / d;
    let ay = -a1 * rho * (1.0 - c1 * b1) / d;
    let oy = a1 * c1 * p.u_target / d;

    let lu = Vector3::new(0.0, 1.0, 0.0) + ly * b2;
    let au = -b1 * rho + b2 * ay;
    let ou = b2 * oy;

    let lv = lu * c1 + ly * c2 + Vector3::new(0.0, 0.0, c3);
    let av = c1 * au + c2 * ay;
    let ov = c1 * ou + c2 * oy - c1 * p.u_target;

    Ok(InteriorForm {
        lambda: Matrix3::from_rows(&[ly.transpose(), lu.transpose(), lv.transpose()]),
        a: Vector3::new(ay, au, av),
        offset: Vector3::new(oy, ou, ov),
    })
}

pub fn simulate_dsge(p: &DsgeParams, st0: DsgeState, n: usize, shocks: &ShockSequence) -> Result<Vec<DsgeState>> {
    if !shocks.is_empty() && shocks.len() < n {
        return Err(Error::Domain(format!("{} shocks supplied for {n} steps", shocks.len())));
    }
    let mut out = Vec::with_capacity(n + 1);
    let mut st = st0;
    out.push(st);
    for k in 0..n {
        st = dsge_step(p, &st, shocks.get(k))?;
        out.push(st);
    }
    Ok(out)
}

/// `(u, y)` pairs of a trajectory.
pub fn project_uy(traj: &[DsgeState]) -> Vec<(f64, f64)> {
    traj.iter().map(|st| (st.u, st.y)).collect()
}

/// Noise-free equilibrium with stop state `s`: `y = b1 ρ s / b2`,
/// `v = σ = u - ρ s`, and `u` from the policy rule.
pub fn equilibrium(p: &DsgeParams, s: f64) -> Result<DsgeState> {
    if s.abs() > 1.0 {
        return Err(Error::Domain(format!("s must lie in [-1, 1], got {s}")));
    }
    let f = interior_form(p)?;
    let m = Matrix3::identity() - f.lambda;
    let rhs = f.a * s + f.offset;
    let z = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("I - Λ is singular; equilibria are not isolated per s".into()))?;
    DsgeState::new(p, z[0], z[1], z[2], s)
}

/// Smallest `q ≤ period_max` with `max_i |w[i+q] - w[i]| ≤ tol` over the window.
pub fn tail_period(window: &[DsgeState], tol: f64, period_max: usize) -> Option<usize> {
    (1..=period_max.min(window.len().saturating_sub(1))).find(|&q| {
        window.iter().zip(&window[q..]).all(|(a, b)| a.dist(b) <= tol)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DsgeTail {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<usize>,
    pub last: DsgeState,
    /// Largest sup-norm over the window.
    pub bound: f64,
}

impl DsgeTail {
    pub fn is_fixed_point(&self) -> bool {
        self.period == Some(1)
    }
}

pub fn dsge_tail(
    p: &DsgeParams,
    st0: DsgeState,
    transient: usize,
    window: usize,
    tol: f64,
    period_max: usize,
) -> Result<DsgeTail> {
    if window < 2 * period_max {
        return Err(Error::Domain(format!("window ({window}) must be at least 2 * period_max ({period_max})")));
    }
    let mut st = st0;
    for _ in 0..transient {
        st = dsge_step(p, &st, Shock::default())?;
    }
    let w = simulate_dsge(p, st, window - 1, &ShockSequence::zero())?;
    Ok(DsgeTail {
        period: tail_period(&w, tol, period_max),
        last: *w.last().unwrap(),
        bound: w.iter().map(DsgeState::sup_norm).fold(0.0, f64::max),
    })
}

/// Start with `(y, u, v)` uniform in `[-scale, scale]³` and `s` uniform in `[-1, 1]`.
pub fn random_dsge_start(p: &DsgeParams, seed: u64, index: u64, scale: f64) -> DsgeState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut c = || rng.gen_range(-scale..=scale);
    let (y, u, v) = (c(), c(), c());
    let s = rng.gen_range(-1.0..=1.0);
    DsgeState { y, u, v, s, sigma: u - p.rho * s }
}

/// The five parameter sets of the reference attractor portraits, all with `ρ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Fig7a,
    Fig7b,
    Fig7c,
    Fig7d,
    Fig7e,
}

impl Preset {
    pub const ALL: [Preset; 5] = [Preset::Fig7a, Preset::Fig7b, Preset::Fig7c, Preset::Fig7d, Preset::Fig7e];

    pub fn params(self) -> DsgeParams {
        let (a1, b, c) = match self {
            Preset::Fig7a => (0.99, (0.76, 0.9), (1.4, 9.7, 0.025)),
            Preset::Fig7b => (0.7, (0.75, 0.5), (4.8, 3.6, 3.45)),
            Preset::Fig7c => (0.9, (0.73, 0.9), (1.2, 3.15, 1.3)),
            Preset::Fig7d => (0.7, (0.7, 0.55), (4.8, 4.15, 3.8)),
            Preset::Fig7e => (0.01, (0.01, 0.03), (1.0, 6.0, 0.54)),
        };
        DsgeParams::new(a1, b, c, 1.0, 0.0).expect("preset parameters are valid")
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig7a => "fig7a",
            Preset::Fig7b => "fig7b",
            Preset::Fig7c => "fig7c",
            Preset::Fig7d => "fig7d",
            Preset::Fig7e => "fig7e",
        }
    }

    /// Period of the portrayed attractor; `None` for the quasi-periodic and
    /// equilibrium portraits.
    pub fn expected_period(self) -> Option<usize> {
        match self {
            Preset::Fig7a => Some(2),
            Preset::Fig7b => Some(4),
            Preset::Fig7c => Some(8),
            Preset::Fig7d | Preset::Fig7e => None,
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown preset {s:?}; expected fig7a..fig7e")))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
