//! Parameter sweeps: the regime atlas over `(λ, β)` cross-checked against
//! simulation, and the atlas of the stable-period domains.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{boundary_distance, classify, omega_index, predict_attractor, Case};
use crate::dynamics::{agrees, basin_sample, stable_cycle_probe, DetectionConfig, Outcome};
use crate::error::{Error, Result};
use crate::planar::PlanarParams;

/// One axis sampled at `n` cell centers of `[lo, hi]`; `n = 1` with
/// `lo = hi` samples that single value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("axis resolution must be >= 1".into()));
        }
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::Domain(format!("invalid axis range [{lo}, {hi}]")));
        }
        Ok(Axis { lo, hi, n })
    }

    pub fn value(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * (self.hi - self.lo) / self.n as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.value(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub lambda: Axis,
    pub beta: Axis,
    /// Random starts per cell.
    pub starts: usize,
    /// Cells closer than this to a regime boundary are skipped.
    pub exclude_within: f64,
    pub detection: DetectionConfig,
}

impl SweepConfig {
    /// 50×50 over `(-0.95, 0.95) × (-2, 2)`, 20 starts, tol `1e-8`.
    pub fn atlas() -> Self {
        SweepConfig {
            lambda: Axis { lo: -0.95, hi: 0.95, n: 50 },
            beta: Axis { lo: -2.0, hi: 2.0, n: 50 },
            starts: 20,
            exclude_within: 0.02,
            detection: DetectionConfig { tol: 1e-8, ..Default::default() },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda.lo <= -1.0 || self.lambda.hi >= 1.0 {
            return Err(Error::Domain("lambda range must lie inside (-1, 1)".into()));
        }
        if self.starts == 0 {
            return Err(Error::Domain("starts must be >= 1".into()));
        }
        self.detection.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Agree,
    Disagree,
    Excluded,
    Error,
}

impl fmt::Display for CellStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CellStatus::Agree => "agree",
            CellStatus::Disagree => "disagree",
            CellStatus::Excluded => "excluded",
            CellStatus::Error => "error",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub i: usize,
    pub j: usize,
    pub lambda: f64,
    pub beta: f64,
    pub case: Option<Case>,
    pub predicted_period: Option<u32>,
    pub observed_period: Option<u32>,
    /// Outcome tally, e.g. `cycle:2=14;fixed_point@E=6`. In a stable-period
    /// domain where no random start found the cycle, a probe started next to
    /// the predicted orbit is included.
    pub observed: String,
    pub status: CellStatus,
    pub error: Option<String>,
}

/// Most frequent cycle period, or 1 when only fixed points were seen.
fn observed_period(outcomes: &[Outcome]) -> Option<u32> {
    let mut counts = std::collections::BTreeMap::new();
    for o in outcomes {
        if let Outcome::Cycle(q) = o {
            *counts.entry(*q).or_insert(0usize) += 1;
        }
    }
    if let Some((q, _)) = counts.iter().max_by_key(|(q, c)| (**c, std::cmp::Reverse(**q))) {
        return Some(*q);
    }
    if !outcomes.is_empty() && outcomes.iter().all(|o| matches!(o, Outcome::FixedPoint(_))) {
        return Some(1);
    }
    None
}

fn cell_seed(seed: u64, i: usize, j: usize) -> u64 {
    seed ^ ((i as u64) << 32 | j as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn sweep_cell(cfg: &SweepConfig, i: usize, j: usize) -> SweepRow {
    let (lambda, beta) = (cfg.lambda.value(i), cfg.beta.value(j));
    let mut row = SweepRow {
        i,
        j,
        lambda,
        beta,
        case: None,
        predicted_period: None,
        observed_period: None,
        observed: String::new(),
        status: CellStatus::Excluded,
        error: None,
    };
    let mut run = || -> Result<()> {
        let p = PlanarParams::from_beta(lambda, beta)?;
        let pred = predict_attractor(&p)?;
        row.case = Some(pred.case);
        row.predicted_period = pred.predicted_period();
        if boundary_distance(lambda, beta) < cfg.exclude_within {
            return Ok(());
        }
        let det = DetectionConfig { seed: cell_seed(cfg.detection.seed, i, j), ..cfg.detection };
        let mut sample = basin_sample(&p, cfg.starts, &det)?;
        let seen_cycle = sample.outcomes.iter().any(|o| matches!(o, Outcome::Cycle(_)));
        if pred.case == Case::E && row.predicted_period.is_some() && !seen_cycle {
            if let Some((start, report)) = stable_cycle_probe(&p, &det)? {
                sample.push(&p, start, report, &det);
            }
        }
        row.observed_period = observed_period(&sample.outcomes);
        row.observed = sample
            .tally()
            .iter()
            .map(|(o, c)| format!("{o}={c}"))
            .collect::<Vec<_>>()
            .join(";");
        row.status = if agrees(&p, &pred, &sample, &det) { CellStatus::Agree } else { CellStatus::Disagree };
        Ok(())
    };
    if let Err(e) = run() {
        row.status = CellStatus::Error;
        row.error = Some(e.to_string());
    }
    row
}

/// All cells in row-major `(i, j)` order; rows are computed in parallel.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let rows: Vec<Vec<SweepRow>> = (0..cfg.lambda.n)
        .into_par_iter()
        .map(|i| (0..cfg.beta.n).map(|j| sweep_cell(cfg, i, j)).collect())
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSummary {
    pub cells: usize,
    pub checked: usize,
    pub agree: usize,
    pub errors: usize,
}

impl SweepSummary {
    pub fn of(rows: &[SweepRow]) -> Self {
        let count = |s| rows.iter().filter(|r| r.status == s).count();
        let agree = count(CellStatus::Agree);
        SweepSummary {
            cells: rows.len(),
            checked: agree + count(CellStatus::Disagree),
            agree,
            errors: count(CellStatus::Error),
        }
    }

    pub fn agreement(&self) -> f64 {
        if self.checked == 0 {
            return 1.0;
        }
        self.agree as f64 / self.checked as f64
    }
}

/// Grid over `β` and `m = -1/λ` for the stable-period domains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaGrid {
    pub beta: Axis,
    pub m: Axis,
}

impl Default for OmegaGrid {
    fn default() -> Self {
        OmegaGrid { beta: Axis { lo: 1.0, hi: 3.0, n: 200 }, m: Axis { lo: 1.0, hi: 9.0, n: 200 } }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaRow {
    pub beta: f64,
    pub m: f64,
    pub lambda: f64,
    pub k: Option<u32>,
    pub period: Option<u32>,
}

pub fn omega_map(grid: &OmegaGrid) -> Result<Vec<OmegaRow>> {
    if grid.beta.lo < 1.0 || grid.m.lo < 1.0 {
        return Err(Error::Domain("omega map needs beta > 1 and -1/lambda > 1".into()));
    }
    let rows: Vec<Vec<OmegaRow>> = grid
        .beta
        .values()
        .into_par_iter()
        .map(|beta| {
            grid.m
                .values()
                .into_iter()
                .map(|m| {
                    let lambda = -1.0 / m;
                    let k = PlanarParams::from_beta(lambda, beta)
                        .ok()
                        .filter(|p| classify(p).map(|l| l.case == Case::E).unwrap_or(false))
                        .and_then(|p| omega_index(&p).ok().flatten());
                    OmegaRow { beta, m, lambda, k, period: k.map(|k| 2 * k + 2) }
                })
                .collect()
        })
        .collect();
    Ok(rows.into_iter().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_cells() {
        let a = Axis::new(-2.0, 2.0, 50).unwrap();
        assert!((a.value(0) - -1.96).abs() < 1e-12);
        assert!((a.value(49) - 1.96).abs() < 1e-12);
        assert_eq!(Axis::new(0.3, 0.3, 1).unwrap().values(), vec![0.3]);
        assert!(Axis::new(1.0, 0.0, 3).is_err());
        assert!(Axis::new(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn degenerate_grid_matches_classify() {
        let cfg = SweepConfig {
            lambda: Axis::new(-2.0 / 3.0, -2.0 / 3.0, 1).unwrap(),
            beta: Axis::new(2.0, 2.0, 1).unwrap(),
            starts: 8,
            ..SweepConfig::atlas()
        };
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 1);
        let p = PlanarParams::from_beta(-2.0 / 3.0, 2.0).unwrap();
        assert_eq!(rows[0].case, Some(classify(&p).unwrap().case));
        assert_eq!(rows[0].predicted_period, Some(4));
    }

    #[test]
    fn small_sweep_is_ordered_and_deterministic() {
        let cfg = SweepConfig {
            lambda: Axis::new(-0.9, 0.9, 4).unwrap(),
            beta: Axis::new(-1.9, 1.9, 5).unwrap(),
            starts: 4,
            ..SweepConfig::atlas()
        };
        let a = run_sweep(&cfg).unwrap();
        let b = run_sweep(&cfg).unwrap();
        assert_eq!(a, b);
        let idx: Vec<_> = a.iter().map(|r| (r.i, r.j)).collect();
        let mut sorted = idx.clone();
        sorted.sort();
        assert_eq!(idx, sorted);
    }

    #[test]
    fn omega_bands_are_ordered() {
        // at fixed β, larger -1/λ never lowers k
        let grid = OmegaGrid { beta: Axis::new(1.5, 2.5, 5).unwrap(), m: Axis::new(1.0, 9.0, 80).unwrap() };
        let rows = omega_map(&grid).unwrap();
        for chunk in rows.chunks(80) {
            let ks: Vec<u32> = chunk.iter().filter_map(|r| r.k).collect();
            assert!(ks.windows(2).all(|w| w[0] <= w[1]), "{ks:?}");
            assert!(!ks.is_empty());
        }
        let r = rows.iter().find(|r| (r.beta - 1.8).abs() < 1e-9 && r.k.is_some()).unwrap();
        assert_eq!(r.period, Some(2 * r.k.unwrap() + 2));
    }
}
