//! First-hitting map `T` on the half-line `{x > x*, s = 1}` for `λ < 0, β > 1`.
//!
//! A trajectory started at `(x, 1)` with `x > x*` slides along `p = const`
//! and, after finitely many steps, lands on the half-line
//! `{x ≤ -x*, s = -1}` at `(-T(x), -1)`. `T` is continuous and piecewise
//! linear, with breakpoints `r_k` (the k-th iterate reaches `s = -1`
//! exactly) and `q_k` (the k-th iterate is `F`) accumulating at `x*`.
//!
//! Breakpoints are kept both as absolute positions and as gaps above `x*`:
//! `r_k - x* = 2 / ((1-λ) g_k)` and `q_k - x* = 2x* / ((1-λ) g_k - 1)` with
//! `g_k = (β^k - 1)/(β - 1)`. The gaps stay resolvable long after the
//! absolute positions round to `x*`.

use serde::Serialize;

use crate::classifier::k0;
use crate::error::{Error, Result};
use crate::planar::{step, PlanarParams, PlanarState};

/// Default iteration cap for [`eval_numeric`].
pub const EVAL_CAP: usize = 1_000_000;

/// Inputs this close to `x*` evaluate to `x*`.
pub const ACCUMULATION_EPS: f64 = 1e-12;

fn require_case_e(p: &PlanarParams) -> Result<()> {
    if !(p.lambda() < 0.0 && p.beta() > 1.0) {
        return Err(Error::UnsupportedRegime(format!(
            "first-hitting map requires lambda < 0 and beta > 1, got ({}, {})",
            p.lambda(),
            p.beta()
        )));
    }
    Ok(())
}

fn require_k(k: u32) -> Result<()> {
    if k == 0 {
        return Err(Error::Domain("ladder index k must be >= 1".into()));
    }
    Ok(())
}

/// `g_k = 1 + β + ... + β^(k-1)`.
fn geometric(beta: f64, k: u32) -> f64 {
    (k as f64 * (beta - 1.0).ln_1p()).exp_m1() / (beta - 1.0)
}

/// `r_k = (2 + a g_k) / (1 - β^k + a g_k)`.
pub fn r_k(p: &PlanarParams, k: u32) -> Result<f64> {
    require_case_e(p)?;
    require_k(k)?;
    let g = geometric(p.beta(), k);
    let den = 1.0 - p.beta().powi(k as i32) + p.a() * g;
    if den == 0.0 || !den.is_finite() {
        return Err(Error::Singular(format!("r_{k}: denominator {den}")));
    }
    Ok((2.0 + p.a() * g) / den)
}

/// `q_k = (-x* - a g_k) / (β^k - a g_k)`.
pub fn q_k(p: &PlanarParams, k: u32) -> Result<f64> {
    require_case_e(p)?;
    require_k(k)?;
    let g = geometric(p.beta(), k);
    let den = p.beta().powi(k as i32) - p.a() * g;
    if den == 0.0 || !den.is_finite() {
        return Err(Error::Singular(format!("q_{k}: denominator {den}")));
    }
    Ok((-p.x_star() - p.a() * g) / den)
}

/// `T(r_k) = a - λ (r_k - 2)`.
pub fn t_at_rk(p: &PlanarParams, k: u32) -> Result<f64> {
    Ok(p.a() - p.lambda() * (r_k(p, k)? - 2.0))
}

/// `T* = 2λ(1 - a - λ)/(1 - λ)`, the limit of `T(r_k) - x*`.
pub fn t_star(p: &PlanarParams) -> Result<f64> {
    require_case_e(p)?;
    let l = p.lambda();
    Ok(2.0 * l * (1.0 - p.a() - l) / (1.0 - l))
}

/// `max(50, k0 + 10)`.
pub fn default_k_max(p: &PlanarParams) -> Result<u32> {
    Ok(50.max(k0(p)? + 10))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakpointLadder {
    pub k_max: u32,
    /// `r_1, ..., r_kmax`.
    pub r: Vec<f64>,
    /// `q_1, ..., q_kmax`.
    pub q: Vec<f64>,
    pub r_gap: Vec<f64>,
    pub q_gap: Vec<f64>,
    /// `T(r_k) - x*`.
    pub t_r_gap: Vec<f64>,
    pub x_star: f64,
    pub t_star: f64,
}

impl BreakpointLadder {
    pub fn t_at_r(&self, k: u32) -> f64 {
        self.x_star + self.t_r_gap[k as usize - 1]
    }
}

struct Gaps {
    r: f64,
    q: f64,
    g: f64,
}

fn gaps(p: &PlanarParams, k: u32) -> Result<Gaps> {
    let g = geometric(p.beta(), k);
    let scaled = (1.0 - p.lambda()) * g;
    let r = 2.0 / scaled;
    let q = 2.0 * p.x_star() / (scaled - 1.0);
    if !(g.is_finite() && r.is_finite() && q.is_finite()) || scaled == 1.0 {
        return Err(Error::Singular(format!("ladder level {k} is not representable")));
    }
    Ok(Gaps { r, q, g })
}

pub fn ladder(p: &PlanarParams, k_max: u32) -> Result<BreakpointLadder> {
    require_case_e(p)?;
    require_k(k_max)?;
    let xs = p.x_star();
    let ts = t_star(p)?;
    let mut out = BreakpointLadder {
        k_max,
        r: Vec::with_capacity(k_max as usize),
        q: Vec::with_capacity(k_max as usize),
        r_gap: Vec::with_capacity(k_max as usize),
        q_gap: Vec::with_capacity(k_max as usize),
        t_r_gap: Vec::with_capacity(k_max as usize),
        x_star: xs,
        t_star: ts,
    };
    for k in 1..=k_max {
        let gp = gaps(p, k)?;
        out.r.push(xs + gp.r);
        out.q.push(xs + gp.q);
        out.r_gap.push(gp.r);
        out.q_gap.push(gp.q);
        out.t_r_gap.push(ts - p.lambda() * gp.r);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PieceKind {
    /// `(q_1, ∞)`: one step reaches the landing half-line.
    Tail,
    /// `(r_k, q_k)`: `k` interior steps, then one step along `s = -1`.
    Falling { k: u32 },
    /// `(q_{k+1}, r_k)`: `k + 1` steps, the last one saturating.
    Rising { k: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearPiece {
    pub left: f64,
    /// `+∞` for the tail piece.
    pub right: f64,
    pub slope: f64,
    pub intercept: f64,
    pub kind: PieceKind,
    #[serde(skip)]
    anchor_gap: f64,
    #[serde(skip)]
    anchor_value_gap: f64,
    #[serde(skip)]
    left_gap: f64,
}

impl LinearPiece {
    fn eval_gap(&self, u: f64) -> f64 {
        self.anchor_value_gap + self.slope * (u - self.anchor_gap)
    }
}

/// Analytic `T` over `[q_{kmax+1}, ∞)`, pieces in ascending order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PiecewiseLinearT {
    pub pieces: Vec<LinearPiece>,
    pub domain_min: f64,
    pub x_star: f64,
    pub k_max: u32,
}

const CONTINUITY_TOL: f64 = 1e-9;

pub fn build_t(p: &PlanarParams, k_max: u32) -> Result<PiecewiseLinearT> {
    let lad = ladder(p, k_max)?;
    let l = p.lambda();
    let xs = lad.x_star;
    let mut pieces = Vec::with_capacity(2 * k_max as usize + 1);

    let check = |what: &str, got: f64, want: f64| -> Result<()> {
        if (got - want).abs() > CONTINUITY_TOL * (1.0 + want.abs()) {
            return Err(Error::Inconsistent(format!("{what}: {got} vs pinned {want}")));
        }
        Ok(())
    };

    let mut q_next_gap = gaps(p, k_max + 1)?.q;
    for k in (1..=k_max).rev() {
        let i = k as usize - 1;
        let (rg, qg, trg) = (lad.r_gap[i], lad.q_gap[i], lad.t_r_gap[i]);
        let g_k = gaps(p, k)?.g;
        let g_next = gaps(p, k + 1)?.g;

        // rising piece (q_{k+1}, r_k), anchored at T(r_k)
        let slope = (1.0 - l) * g_next - 1.0;
        let rising = LinearPiece {
            left: xs + q_next_gap,
            right: lad.r[i],
            slope,
            intercept: 0.0,
            kind: PieceKind::Rising { k },
            anchor_gap: rg,
            anchor_value_gap: trg,
            left_gap: q_next_gap,
        };
        check(&format!("T(q_{}) on rising piece {k}", k + 1), rising.eval_gap(q_next_gap), 0.0)?;

        // falling piece (r_k, q_k), anchored at T(q_k) = x*
        let slope = l * ((1.0 - l) * g_k - 1.0);
        let falling = LinearPiece {
            left: lad.r[i],
            right: lad.q[i],
            slope,
            intercept: 0.0,
            kind: PieceKind::Falling { k },
            anchor_gap: qg,
            anchor_value_gap: 0.0,
            left_gap: rg,
        };
        check(&format!("T(r_{k}) on falling piece"), falling.eval_gap(rg), trg)?;

        pieces.push(rising);
        pieces.push(falling);
        q_next_gap = qg;
    }
    pieces.push(LinearPiece {
        left: lad.q[0],
        right: f64::INFINITY,
        slope: -l,
        intercept: 0.0,
        kind: PieceKind::Tail,
        anchor_gap: lad.q_gap[0],
        anchor_value_gap: 0.0,
        left_gap: lad.q_gap[0],
    });
    for piece in &mut pieces {
        let anchor_x = xs + piece.anchor_gap;
        piece.intercept = xs + piece.anchor_value_gap - piece.slope * anchor_x;
    }
    Ok(PiecewiseLinearT { domain_min: pieces[0].left, pieces, x_star: xs, k_max })
}

impl PiecewiseLinearT {
    /// Whether `x` lies where the truncated ladder defines `T`.
    pub fn covers(&self, x: f64) -> bool {
        x - self.x_star <= ACCUMULATION_EPS || x - self.x_star >= self.pieces[0].left_gap
    }

    fn piece_index(&self, u: f64) -> usize {
        // half-open [left, right): the last piece whose left end is <= x
        self.pieces.partition_point(|pc| pc.left_gap <= u).saturating_sub(1)
    }

    pub fn piece_at(&self, x: f64) -> Option<&LinearPiece> {
        let u = x - self.x_star;
        if u < self.pieces[0].left_gap {
            return None;
        }
        Some(&self.pieces[self.piece_index(u)])
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let u = x - self.x_star;
        if u < -ACCUMULATION_EPS {
            return Err(Error::Domain(format!("T is defined for x >= x* = {}, got {x}", self.x_star)));
        }
        if u <= ACCUMULATION_EPS {
            return Ok(self.x_star);
        }
        if u < self.pieces[0].left_gap {
            return Err(Error::Domain(format!(
                "x = {x} lies below q_{} = {}; rebuild with a deeper ladder",
                self.k_max + 1,
                self.domain_min
            )));
        }
        let pc = &self.pieces[self.piece_index(u)];
        Ok(self.x_star + pc.eval_gap(u))
    }
}

/// Smallest ladder depth whose coverage reaches down to `x* + gap`.
pub fn depth_for_gap(p: &PlanarParams, gap: f64) -> Result<u32> {
    require_case_e(p)?;
    let mut k = 1;
    while gaps(p, k + 1)?.q > gap {
        k += 1;
    }
    Ok(k)
}

/// `T(x)` by direct iteration of the map from `(x, 1)`.
pub fn eval_numeric(p: &PlanarParams, x: f64) -> Result<f64> {
    eval_numeric_capped(p, x, EVAL_CAP)
}

pub fn eval_numeric_capped(p: &PlanarParams, x: f64, cap: usize) -> Result<f64> {
    require_case_e(p)?;
    let xs = p.x_star();
    if !x.is_finite() || x - xs < -ACCUMULATION_EPS {
        return Err(Error::Domain(format!("T is defined for x >= x* = {xs}, got {x}")));
    }
    if x - xs <= ACCUMULATION_EPS {
        return Ok(xs);
    }
    let mut st = PlanarState::raw(x, 1.0);
    for _ in 0..cap {
        st = step(p, st);
        if st.s() == -1.0 && st.x() <= -xs {
            return Ok(-st.x());
        }
    }
    Err(Error::NonTermination { cap })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalKind {
    /// `(q_{k+1}, r_k]`, where `T' > 1`.
    Rising,
    /// `(r_k, q_k)`, where `T' < 0`.
    Falling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TFixedPoint {
    pub x: f64,
    pub interval_kind: IntervalKind,
    pub k: u32,
    pub stable: bool,
    pub system_period: u32,
    /// Slope of `T` at the fixed point.
    pub multiplier: f64,
}

/// Fixed points of `T` in `(q_{k+1}, q_k)` for `k ≤ k_max`, solved in closed form.
pub fn fixed_points(p: &PlanarParams, k_max: u32) -> Result<Vec<TFixedPoint>> {
    require_case_e(p)?;
    let l = p.lambda();
    let beta = p.beta();
    let ts = t_star(p)?;
    let xs = p.x_star();
    let mut out = Vec::new();
    for k in 1..=k_max {
        let bk = beta.powi(k as i32);
        let existence = 1.0 + l * bk;
        if existence > 0.0 {
            continue;
        }
        let here = gaps(p, k)?;
        let next = gaps(p, k + 1)?;
        let t_r = ts - l * here.r;
        let rising_slope = (1.0 - l) * next.g - 1.0;
        let period = 2 * k + 2;
        if existence == 0.0 {
            out.push(TFixedPoint {
                x: xs + here.r,
                interval_kind: IntervalKind::Rising,
                k,
                stable: false,
                system_period: period,
                multiplier: rising_slope,
            });
            continue;
        }
        let u = (t_r - rising_slope * here.r) / (1.0 - rising_slope);
        out.push(TFixedPoint {
            x: xs + u,
            interval_kind: IntervalKind::Rising,
            k,
            stable: false,
            system_period: period,
            multiplier: rising_slope,
        });
        let falling_slope = l * ((1.0 - l) * here.g - 1.0);
        let u = (t_r - falling_slope * here.r) / (1.0 - falling_slope);
        out.push(TFixedPoint {
            x: xs + u,
            interval_kind: IntervalKind::Falling,
            k,
            stable: l * bk + p.a() - 1.0 >= 0.0,
            system_period: period,
            multiplier: falling_slope,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planar::step_n;

    fn p_ex() -> PlanarParams {
        PlanarParams::new(-0.5, 2.0).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn r_k_examples() {
        let p = p_ex();
        assert!(close(r_k(&p, 1).unwrap(), 8.0 / 3.0, 1e-14));
        let lad = ladder(&p, 100).unwrap();
        assert!(close(*lad.r.last().unwrap(), 4.0 / 3.0, 1e-12));
        // defining property: f^k(r_k, 1) = (r_k - 2, -1)
        for k in 1..=4 {
            let r = r_k(&p, k).unwrap();
            let end = step_n(&p, PlanarState::new(r, 1.0).unwrap(), k as u64);
            assert!(close(end.x(), r - 2.0, 1e-12), "k={k}");
            assert!(close(end.s(), -1.0, 1e-12));
        }
    }

    #[test]
    fn q_k_examples() {
        let p = p_ex();
        assert!(close(q_k(&p, 1).unwrap(), 20.0 / 3.0, 1e-14));
        let alt = (1.0 / p.lambda()) * (-p.a() - p.x_star());
        assert!(close(q_k(&p, 1).unwrap(), alt, 1e-14));
        let (q1, r1, q2) = (q_k(&p, 1).unwrap(), r_k(&p, 1).unwrap(), q_k(&p, 2).unwrap());
        assert!(q2 < r1 && r1 < q1);
        let f1 = step(&p, PlanarState::new(q1, 1.0).unwrap());
        assert!(close(f1.x(), -p.x_star(), 1e-14) && f1.s() == -1.0);
    }

    #[test]
    fn gap_form_matches_closed_formulas() {
        for (l, a) in [(-0.5, 2.0), (-0.3, 1.6), (-0.8, 2.9)] {
            let p = PlanarParams::new(l, a).unwrap();
            let lad = ladder(&p, 12).unwrap();
            for k in 1..=12u32 {
                let i = k as usize - 1;
                assert!(close(lad.r[i], r_k(&p, k).unwrap(), 1e-12));
                assert!(close(lad.q[i], q_k(&p, k).unwrap(), 1e-12));
                assert!(close(lad.t_at_r(k), t_at_rk(&p, k).unwrap(), 1e-12));
            }
        }
    }

    #[test]
    fn t_at_rk_examples() {
        let p = p_ex();
        assert!(close(t_at_rk(&p, 1).unwrap(), 7.0 / 3.0, 1e-14));
        assert!(t_at_rk(&p, 1).unwrap() > t_at_rk(&p, 2).unwrap());
        assert!(close(t_star(&p).unwrap(), 1.0 / 3.0, 1e-15));
        assert!(close(eval_numeric(&p, 8.0 / 3.0).unwrap(), 7.0 / 3.0, 1e-12));
    }

    #[test]
    fn build_t_examples() {
        let p = p_ex();
        let t = build_t(&p, 10).unwrap();
        let tail = t.pieces.last().unwrap();
        assert_eq!(tail.kind, PieceKind::Tail);
        assert_eq!(tail.slope, 0.5);
        let falling1 = t.pieces.iter().find(|pc| pc.kind == PieceKind::Falling { k: 1 }).unwrap();
        assert!(close(falling1.slope, -0.25, 1e-15));
        for k in 1..=10 {
            let q = q_k(&p, k).unwrap();
            assert!(close(t.eval(q).unwrap(), p.x_star(), 1e-12));
        }
        // pieces tile the covered domain
        for w in t.pieces.windows(2) {
            assert!(close(w[0].right, w[1].left, 0.0));
        }
        // intercept form agrees with anchored evaluation
        for pc in &t.pieces {
            let x = if pc.right.is_finite() { 0.5 * (pc.left + pc.right) } else { pc.left + 1.0 };
            assert!(close(pc.slope * x + pc.intercept, t.eval(x).unwrap(), 1e-9));
        }
    }

    #[test]
    fn eval_numeric_examples_and_errors() {
        let p = p_ex();
        let q1 = q_k(&p, 1).unwrap();
        assert!(close(eval_numeric(&p, q1).unwrap(), p.x_star(), 1e-12));
        assert_eq!(eval_numeric(&p, p.x_star()).unwrap(), p.x_star());
        assert_eq!(eval_numeric(&p, p.x_star() + 5e-13).unwrap(), p.x_star());
        assert!(matches!(eval_numeric(&p, 0.0), Err(Error::Domain(_))));
        assert!(matches!(
            eval_numeric_capped(&p, r_k(&p, 5).unwrap(), 1),
            Err(Error::NonTermination { cap: 1 })
        ));
        let t = build_t(&p, 10).unwrap();
        assert!(t.eval(p.x_star() + 1e-9).is_err());
        assert!(!t.covers(p.x_star() + 1e-9));
    }

    #[test]
    fn analytic_and_iterative_agree() {
        let p = p_ex();
        let t = build_t(&p, 50).unwrap();
        let hi = q_k(&p, 1).unwrap() + 5.0;
        let span = hi - p.x_star();
        for i in 1..=1000 {
            let x = p.x_star() + span * i as f64 / 1000.0;
            let (a, b) = (t.eval(x).unwrap(), eval_numeric(&p, x).unwrap());
            assert!(close(a, b, 1e-9), "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn unsupported_regimes() {
        let p = PlanarParams::new(0.5, 1.0).unwrap();
        assert!(matches!(r_k(&p, 1), Err(Error::UnsupportedRegime(_))));
        assert!(build_t(&p, 5).is_err());
        assert!(r_k(&p_ex(), 0).is_err());
    }

    #[test]
    fn fixed_point_examples() {
        // λ = -2/3, β = 2: two fixed points at k = 1, the falling one stable
        let p = PlanarParams::from_beta(-2.0 / 3.0, 2.0).unwrap();
        let fps = fixed_points(&p, 20).unwrap();
        let k1: Vec<_> = fps.iter().filter(|f| f.k == 1).collect();
        assert_eq!(k1.len(), 2);
        let stable: Vec<_> = fps.iter().filter(|f| f.stable).collect();
        assert_eq!(stable.len(), 1);
        assert_eq!(stable[0].interval_kind, IntervalKind::Falling);
        assert_eq!(stable[0].system_period, 4);
        let (q1, r1, q2) = (q_k(&p, 1).unwrap(), r_k(&p, 1).unwrap(), q_k(&p, 2).unwrap());
        assert!(stable[0].x > r1 && stable[0].x < q1);
        let rising = k1.iter().find(|f| f.interval_kind == IntervalKind::Rising).unwrap();
        assert!(rising.x > q2 && rising.x < r1);
        for fp in &fps {
            assert!(close(eval_numeric(&p, fp.x).unwrap(), fp.x, 1e-8), "{fp:?}");
        }

        // λ = -0.5, β = 2: equality at k = 1, the single fixed point r_1 is unstable
        let p = PlanarParams::from_beta(-0.5, 2.0).unwrap();
        let fps = fixed_points(&p, 20).unwrap();
        let k1: Vec<_> = fps.iter().filter(|f| f.k == 1).collect();
        assert_eq!(k1.len(), 1);
        assert!(!k1[0].stable);
        assert!(close(k1[0].x, r_k(&p, 1).unwrap(), 1e-14));
        assert!(fps.iter().all(|f| !f.stable));
    }

    #[test]
    fn lifted_fixed_points_are_periodic() {
        let p = PlanarParams::from_beta(-1.0 / 3.5, 2.0).unwrap();
        for fp in fixed_points(&p, 6).unwrap() {
            let start = PlanarState::new(fp.x, 1.0).unwrap();
            let back = step_n(&p, start, fp.system_period as u64);
            assert!(back.dist(&start) < 1e-9, "{fp:?} -> {back}");
            let half = step_n(&p, start, fp.system_period as u64 / 2);
            assert!(half.dist(&-start) < 1e-9);
        }
    }
}
