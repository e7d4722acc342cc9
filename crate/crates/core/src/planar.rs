//! The planar map `x' = λx + a s`, `s' = Φ(s + x' - x)` on the strip
//! `ℝ × [-1, 1]`, together with its closed-form invariant objects.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::hysteresis::clip_unchecked;

/// Parameters `(λ, a)` of the planar map with `β = λ + a`.
///
/// `β` is fixed at construction: `new` sets it to `λ + a`, `from_beta`
/// keeps the caller's `β` and derives `a = β - λ`, so regime boundaries such
/// as `β = -1` are represented exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanarParams {
    lambda: f64,
    a: f64,
    beta: f64,
}

impl PlanarParams {
    pub fn new(lambda: f64, a: f64) -> Result<Self> {
        ensure_finite("lambda", lambda)?;
        ensure_finite("a", a)?;
        check_lambda(lambda)?;
        Ok(PlanarParams { lambda, a, beta: lambda + a })
    }

    pub fn from_beta(lambda: f64, beta: f64) -> Result<Self> {
        ensure_finite("lambda", lambda)?;
        ensure_finite("beta", beta)?;
        check_lambda(lambda)?;
        Ok(PlanarParams { lambda, a: beta - lambda, beta })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `x* = a / (1 - λ)`, the x-coordinate of `E`.
    pub fn x_star(&self) -> f64 {
        self.a / (1.0 - self.lambda)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.abs() >= 1.0 {
        return Err(Error::Domain(format!("|lambda| must be < 1, got {lambda}")));
    }
    Ok(())
}

/// A point `(x, s)` of the strip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarState {
    x: f64,
    s: f64,
}

impl PlanarState {
    pub fn new(x: f64, s: f64) -> Result<Self> {
        ensure_finite("x", x)?;
        ensure_finite("s", s)?;
        if s.abs() > 1.0 {
            return Err(Error::Domain(format!("s must lie in [-1, 1], got {s}")));
        }
        Ok(PlanarState { x, s })
    }

    pub(crate) fn raw(x: f64, s: f64) -> Self {
        debug_assert!(s.abs() <= 1.0);
        PlanarState { x, s }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Play coordinate `p = x - s`.
    pub fn p(&self) -> f64 {
        self.x - self.s
    }

    /// Sup-norm distance.
    pub fn dist(&self, other: &PlanarState) -> f64 {
        (self.x - other.x).abs().max((self.s - other.s).abs())
    }
}

impl std::ops::Neg for PlanarState {
    type Output = PlanarState;

    fn neg(self) -> PlanarState {
        PlanarState { x: -self.x, s: -self.s }
    }
}

impl fmt::Display for PlanarState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.s)
    }
}

/// One application of the map.
#[inline]
pub fn step(p: &PlanarParams, st: PlanarState) -> PlanarState {
    let x = p.lambda * st.x + p.a * st.s;
    PlanarState { x, s: clip_unchecked(st.s + (x - st.x)) }
}

pub fn step_n(p: &PlanarParams, st: PlanarState, n: u64) -> PlanarState {
    (0..n).fold(st, |acc, _| step(p, acc))
}

/// The segment of equilibria `x = a s / (1 - λ)`, `|s| ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentEF {
    pub e: PlanarState,
    pub f: PlanarState,
}

impl SegmentEF {
    /// The equilibrium with stop coordinate `s`.
    pub fn point_at(&self, s: f64) -> PlanarState {
        let s = clip_unchecked(s);
        PlanarState { x: self.e.x * s, s }
    }

    /// Euclidean distance from `st` to the closed segment.
    pub fn distance(&self, st: &PlanarState) -> f64 {
        let (dx, ds) = (self.e.x - self.f.x, self.e.s - self.f.s);
        let len2 = dx * dx + ds * ds;
        let t = (((st.x - self.f.x) * dx + (st.s - self.f.s) * ds) / len2).clamp(0.0, 1.0);
        let (px, ps) = (self.f.x + t * dx, self.f.s + t * ds);
        ((st.x - px).powi(2) + (st.s - ps).powi(2)).sqrt()
    }
}

pub fn equilibrium_segment(p: &PlanarParams) -> SegmentEF {
    let xs = p.x_star();
    SegmentEF { e: PlanarState { x: xs, s: 1.0 }, f: PlanarState { x: -xs, s: -1.0 } }
}

/// The 2-cycle `±Q = (∓ a/(1+λ), ±1)`, returned as `(Q, -Q)`. Exists for `β ≤ -1`.
pub fn two_cycle(p: &PlanarParams) -> Result<(PlanarState, PlanarState)> {
    if p.beta > -1.0 {
        return Err(Error::UnsupportedRegime(format!(
            "2-cycle requires beta <= -1, got {}",
            p.beta
        )));
    }
    let qx = if p.beta == -1.0 { 1.0 } else { -p.a / (1.0 + p.lambda) };
    let q = PlanarState { x: qx, s: 1.0 };
    Ok((q, -q))
}

/// Convex quadrilateral in the strip, vertices in counter-clockwise order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Parallelogram {
    pub vertices: [PlanarState; 4],
}

impl Parallelogram {
    fn from_ring(mut vertices: [PlanarState; 4]) -> Self {
        let area2: f64 = (0..4)
            .map(|i| {
                let (u, v) = (vertices[i], vertices[(i + 1) % 4]);
                u.x * v.s - v.x * u.s
            })
            .sum();
        if area2 < 0.0 {
            vertices.reverse();
        }
        Parallelogram { vertices }
    }

    /// Membership with absolute slack `tol` (distance outside each edge line).
    /// Degenerate (zero-length) edges are skipped, so a collapsed
    /// parallelogram reduces to its remaining edges.
    pub fn contains(&self, st: &PlanarState, tol: f64) -> bool {
        if st.s.abs() > 1.0 + tol {
            return false;
        }
        (0..4).all(|i| {
            let (u, v) = (self.vertices[i], self.vertices[(i + 1) % 4]);
            let (ex, es) = (v.x - u.x, v.s - u.s);
            let len = ex.hypot(es);
            if len == 0.0 {
                return true;
            }
            let cross = ex * (st.s - u.s) - es * (st.x - u.x);
            cross / len >= -tol
        })
    }

    /// Horizontal extent of the edge lying on `s = level` (for `level = ±1`).
    pub fn edge_on(&self, level: f64) -> Option<(f64, f64)> {
        let xs: Vec<f64> = self.vertices.iter().filter(|v| v.s == level).map(|v| v.x).collect();
        if xs.is_empty() {
            return None;
        }
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Some((lo, hi))
    }
}

/// Half-width `|x* - 1|` of the play band bounding Π.
pub fn pi_half_width(p: &PlanarParams) -> f64 {
    (p.x_star() - 1.0).abs()
}

/// Π: `|x - s| ≤ |x* - 1|`, `|s| ≤ 1`. Diagonal `EF`, sides of slope one.
pub fn pi_region(p: &PlanarParams) -> Parallelogram {
    let w = pi_half_width(p);
    Parallelogram::from_ring([
        PlanarState { x: -1.0 - w, s: -1.0 },
        PlanarState { x: -1.0 + w, s: -1.0 },
        PlanarState { x: 1.0 + w, s: 1.0 },
        PlanarState { x: 1.0 - w, s: 1.0 },
    ])
}

/// Exact membership in Π from its defining inequalities.
pub fn in_pi(p: &PlanarParams, st: &PlanarState, tol: f64) -> bool {
    st.p().abs() <= pi_half_width(p) + tol && st.s.abs() <= 1.0
}

/// Σ, the parallelogram `E, Q=(1,1), F, -Q` of 2-periodic points at `β = -1`.
pub fn sigma_region(p: &PlanarParams) -> Result<Parallelogram> {
    if p.beta != -1.0 {
        return Err(Error::UnsupportedRegime(format!(
            "Sigma exists only at beta = -1, got {}",
            p.beta
        )));
    }
    let seg = equilibrium_segment(p);
    let q = PlanarState { x: 1.0, s: 1.0 };
    Ok(Parallelogram::from_ring([-q, seg.f, q, seg.e]))
}

/// Closed interval on the line `s = 1`, possibly unbounded above.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Interval {
    Bounded { lo: f64, hi: f64 },
    HalfLine { lo: f64 },
}

impl Interval {
    pub fn lo(&self) -> f64 {
        match *self {
            Interval::Bounded { lo, .. } | Interval::HalfLine { lo } => lo,
        }
    }

    pub fn hi(&self) -> Option<f64> {
        match *self {
            Interval::Bounded { hi, .. } => Some(hi),
            Interval::HalfLine { .. } => None,
        }
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        x >= self.lo() - tol && self.hi().map_or(true, |hi| x <= hi + tol)
    }
}

/// The `f²`-invariant segment `AB` on `s = 1` for `λ ≥ 0, β < -1`, with
/// `A_x = (a+2)/(1-λ)` and `B_x = (-(a+2)/(1-λ) - a)/λ`; a half-line when `λ = 0`.
pub fn ab_segment(p: &PlanarParams) -> Result<Interval> {
    if !(p.lambda >= 0.0 && p.beta < -1.0) {
        return Err(Error::UnsupportedRegime(format!(
            "segment AB requires lambda >= 0 and beta < -1, got ({}, {})",
            p.lambda, p.beta
        )));
    }
    let ax = (p.a + 2.0) / (1.0 - p.lambda);
    if p.lambda == 0.0 {
        Ok(Interval::HalfLine { lo: ax })
    } else {
        Ok(Interval::Bounded { lo: ax, hi: (-ax - p.a) / p.lambda })
    }
}
