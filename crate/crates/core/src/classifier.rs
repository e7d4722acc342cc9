//! Regime classification of `(λ, β)` and the period prediction for the
//! `λ < 0, β > 1` regime.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::planar::{two_cycle, PlanarParams, PlanarState};

/// Cutoff for the `Ω_k` scan.
pub const OMEGA_K_MAX: u32 = 200;

/// Hard cap for the `k0` scan (reached only for `β` within ~1e-6 of 1).
const K0_CAP: u32 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Case {
    A,
    B,
    C,
    D,
    E,
    F,
    G,
}

impl Case {
    pub fn letter(self) -> char {
        match self {
            Case::A => 'a',
            Case::B => 'b',
            Case::C => 'c',
            Case::D => 'd',
            Case::E => 'e',
            Case::F => 'f',
            Case::G => 'g',
        }
    }

    fn descriptor(self) -> &'static str {
        match self {
            Case::A => "|beta| < 1: segment of stable equilibria attracts every trajectory",
            Case::B => "lambda >= 0, beta >= 1: E and F semi-stable, trajectories converge to E or F",
            Case::C => {
                "lambda >= 0, beta < -1: E and F semi-stable, stable 2-cycle +-Q coexists"
            }
            Case::D => "lambda < 0, beta < -1: equilibria unstable, global stable 2-cycle +-Q",
            Case::E => {
                "lambda < 0, beta > 1: equilibria unstable, periodic orbits of all large periods, at most one stable"
            }
            Case::F => "lambda < 0, beta = 1: equilibria unstable, trajectories end at E, F or approach EF",
            Case::G => "beta = -1: stable equilibria and parallelogram Sigma of 2-periodic orbits",
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegimeLabel {
    pub case: Case,
    pub descriptor: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PeriodPrediction {
    StablePeriod { k: u32, period: u32 },
    AllUnstable,
}

impl PeriodPrediction {
    pub fn period(&self) -> Option<u32> {
        match self {
            PeriodPrediction::StablePeriod { period, .. } => Some(*period),
            PeriodPrediction::AllUnstable => None,
        }
    }
}

fn require_domain(p: &PlanarParams) -> Result<()> {
    if p.lambda().abs() >= 1.0 {
        return Err(Error::Domain(format!("|lambda| must be < 1, got {}", p.lambda())));
    }
    Ok(())
}

/// Case label; the tests run in the order g, f, b, a, c, d, e.
pub fn classify(p: &PlanarParams) -> Result<RegimeLabel> {
    require_domain(p)?;
    let case = case_of(p.lambda(), p.beta());
    Ok(RegimeLabel { case, descriptor: case.descriptor().to_string() })
}

pub(crate) fn case_of(lambda: f64, beta: f64) -> Case {
    if beta == -1.0 {
        Case::G
    } else if beta == 1.0 && lambda < 0.0 {
        Case::F
    } else if lambda >= 0.0 && beta >= 1.0 {
        Case::B
    } else if beta.abs() < 1.0 {
        Case::A
    } else if lambda >= 0.0 && beta < -1.0 {
        Case::C
    } else if lambda < 0.0 && beta < -1.0 {
        Case::D
    } else {
        Case::E
    }
}

fn require_case_e(p: &PlanarParams) -> Result<()> {
    require_domain(p)?;
    if !(p.lambda() < 0.0 && p.beta() > 1.0) {
        return Err(Error::UnsupportedRegime(format!(
            "requires lambda < 0 and beta > 1, got ({}, {})",
            p.lambda(),
            p.beta()
        )));
    }
    Ok(())
}

/// Whether `(λ, β) ∈ Ω_k`: `(β^k - 1)/(β - 1) ≤ -1/λ < β^k`.
pub fn in_omega(lambda: f64, beta: f64, k: u32) -> bool {
    let w = -1.0 / lambda;
    let bk = beta.powi(k as i32);
    beta > 1.0 && w > 1.0 && (bk - 1.0) / (beta - 1.0) <= w && w < bk
}

/// The unique `k` with `(λ, β) ∈ Ω_k`, scanning `k = 1..=200`.
pub fn omega_index(p: &PlanarParams) -> Result<Option<u32>> {
    require_case_e(p)?;
    let w = -1.0 / p.lambda();
    let beta = p.beta();
    let mut bk = 1.0;
    for k in 1..=OMEGA_K_MAX {
        bk *= beta;
        let lower = (bk - 1.0) / (beta - 1.0);
        if lower > w {
            // both bounds increase with k; nothing further can match
            return Ok(None);
        }
        if w < bk {
            return Ok(if w > 1.0 { Some(k) } else { None });
        }
    }
    log::warn!("omega_index: no decision within k <= {OMEGA_K_MAX} for {p:?}");
    Ok(None)
}

/// Smallest `k ≥ 1` with `1 + λ β^k ≤ 0`.
pub fn k0(p: &PlanarParams) -> Result<u32> {
    require_case_e(p)?;
    let mut bk = 1.0;
    for k in 1..=K0_CAP {
        bk *= p.beta();
        if 1.0 + p.lambda() * bk <= 0.0 {
            return Ok(k);
        }
    }
    Err(Error::NonTermination { cap: K0_CAP as usize })
}

pub fn predict_period(p: &PlanarParams) -> Result<PeriodPrediction> {
    Ok(match omega_index(p)? {
        Some(k) => PeriodPrediction::StablePeriod { k, period: 2 * k + 2 },
        None => PeriodPrediction::AllUnstable,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    SemiStable,
    Unstable,
}

/// A set that may attract trajectories.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "set", rename_all = "snake_case")]
pub enum LimitSet {
    /// Any point of the segment `EF`.
    Equilibrium,
    EndpointE,
    EndpointF,
    TwoCycle { q: PlanarState },
    /// 2-periodic points filling Σ.
    SigmaCycles,
    /// Convergence to `EF` without settling on a point.
    SegmentEF,
    StableCycle { period: u32 },
    /// Non-periodic long-run behavior (no stable periodic orbit).
    Irregular,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttractorPrediction {
    pub case: Case,
    /// Stability of the interior points of `EF`.
    pub equilibria: Stability,
    /// Stability of the endpoints `E`, `F`.
    pub endpoints: Stability,
    pub limit_sets: Vec<LimitSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<PeriodPrediction>,
    pub description: String,
}

impl AttractorPrediction {
    /// Period of the stable orbit, `1` for equilibria-only regimes.
    pub fn predicted_period(&self) -> Option<u32> {
        match self.case {
            Case::A | Case::B => Some(1),
            Case::C | Case::D | Case::G => Some(2),
            Case::E => self.period.and_then(|p| p.period()),
            Case::F => None,
        }
    }
}

pub fn predict_attractor(p: &PlanarParams) -> Result<AttractorPrediction> {
    let label = classify(p)?;
    use LimitSet::*;
    use Stability::*;
    let q = || two_cycle(p).map(|(q, _)| q);
    let (equilibria, endpoints, limit_sets, period, description) = match label.case {
        Case::A => (
            Stable,
            Stable,
            vec![Equilibrium],
            None,
            "all equilibria stable; every trajectory converges to an equilibrium".to_string(),
        ),
        Case::B => (
            Unstable,
            SemiStable,
            vec![EndpointE, EndpointF],
            None,
            "E, F semi-stable, other equilibria unstable; every non-equilibrium trajectory converges to E or F"
                .to_string(),
        ),
        Case::C => (
            Unstable,
            SemiStable,
            vec![EndpointE, EndpointF, TwoCycle { q: q()? }],
            None,
            "E, F semi-stable; stable 2-cycle +-Q; trajectories converge to E, F or the 2-cycle"
                .to_string(),
        ),
        Case::D => (
            Unstable,
            Unstable,
            vec![TwoCycle { q: q()? }],
            None,
            "all equilibria unstable; every non-equilibrium trajectory converges to the stable 2-cycle +-Q"
                .to_string(),
        ),
        Case::E => {
            let pred = predict_period(p)?;
            let (sets, text) = match pred {
                PeriodPrediction::StablePeriod { period, .. } => (
                    vec![StableCycle { period }, Irregular],
                    format!(
                        "all equilibria unstable; unique stable {period}-periodic orbit among infinitely many unstable ones"
                    ),
                ),
                PeriodPrediction::AllUnstable => (
                    vec![Irregular],
                    "all equilibria unstable; all periodic orbits unstable".to_string(),
                ),
            };
            (Unstable, Unstable, sets, Some(pred), text)
        }
        Case::F => (
            Unstable,
            Unstable,
            vec![EndpointE, EndpointF, SegmentEF],
            None,
            "all equilibria unstable; trajectories end at E or F or converge to the segment EF"
                .to_string(),
        ),
        Case::G => (
            Stable,
            Stable,
            vec![Equilibrium, SigmaCycles],
            None,
            "all equilibria stable; Sigma filled with stable 2-periodic orbits; trajectories converge to E, F or a 2-cycle in Sigma"
                .to_string(),
        ),
    };
    Ok(AttractorPrediction { case: label.case, equilibria, endpoints, limit_sets, period, description })
}

/// Distance from `(λ, β)` to the nearest regime boundary (`β = ±1`, and
/// `λ = 0` where `|β| ≥ 1`).
pub fn boundary_distance(lambda: f64, beta: f64) -> f64 {
    let d = (beta - 1.0).abs().min((beta + 1.0).abs());
    if beta.abs() >= 1.0 {
        d.min(lambda.abs())
    } else {
        d
    }
}
