//! Rate sweeps, two-point lower-bound constructions and threshold probes.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{losses, min_distance_fit, LossRecord, SearchConfig};
use crate::filter_kl::log_ratio;
use crate::params::{
    phipsi_to_theta, sample_phipsi, uniform_density, validate_phipsi, witness, witness_psi2,
    ConstraintBox, PhiPsiParams,
};
use crate::seed;
use crate::simulator::{empirical_triple_law, sample_path};
use crate::triple_law::{r_of_phi, rho};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    Phi1Phi3,
    Phi2,
    Psi1,
    Psi2,
}

impl PairKind {
    pub const ALL: [PairKind; 4] = [Self::Phi1Phi3, Self::Phi2, Self::Psi1, Self::Psi2];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Phi1Phi3 => "phi1_phi3",
            Self::Phi2 => "phi2",
            Self::Psi1 => "psi1",
            Self::Psi2 => "psi2",
        }
    }
}

impl fmt::Display for PairKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PairKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Validation(format!("unknown pair kind {s:?}")))
    }
}

/// Default `c` for the lower-bound constructions.
pub const DEFAULT_C: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisPair {
    pub kind: PairKind,
    pub a: PhiPsiParams,
    pub b: PhiPsiParams,
    #[serde(rename = "R")]
    pub r_param: f64,
    /// Only for `phi1_phi3`.
    #[serde(rename = "S")]
    pub s_param: Option<f64>,
    /// Only for `psi2`: the mixing weight `R / (2 - R)`.
    pub alpha: Option<f64>,
    /// Only for `psi2`: `|psi2~ - psi2|` after renormalizing `psi2~`.
    pub realized_psi2_distance: Option<f64>,
    pub r_a: f64,
    pub r_b: f64,
    pub separation: LossRecord,
    pub rho: f64,
}

fn infeasible(msg: String) -> Error {
    Error::Infeasible(msg)
}

fn check_member(label: &str, pp: &PhiPsiParams, bx: &ConstraintBox) -> Result<()> {
    pp.validate()
        .map_err(|e| infeasible(format!("member {label} is not a valid parameter: {e}")))?;
    let rep = validate_phipsi(pp, bx);
    if let Some(c) = rep.failures().next() {
        return Err(infeasible(format!(
            "member {label} fails {} (slack {:e})",
            c.name, c.slack
        )));
    }
    Ok(())
}

/// Builds the two-point hypothesis pair of the given kind at sample size `n`.
/// Feasibility is checked, never clipped.
pub fn lower_bound_pair(
    kind: PairKind,
    n: f64,
    bx: &ConstraintBox,
    c: f64,
) -> Result<HypothesisPair> {
    bx.validate()?;
    if !(n >= 1.0) || !n.is_finite() {
        return Err(Error::Validation(format!("n = {n} must be at least 1")));
    }
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::Validation(format!("c = {c} must be >= 0")));
    }
    if !bx.is_compatible() {
        return Err(infeasible(format!(
            "compatibility condition zeta <= {} violated by zeta = {}",
            bx.compatibility_bound(),
            bx.zeta
        )));
    }
    let w = witness(bx);
    check_member("witness", &w, bx)?;
    let (delta, eps, zeta) = (bx.delta, bx.epsilon, bx.zeta);
    let root_n = n.sqrt();
    let (mut s_param, mut alpha, mut realized) = (None, None, None);

    let (r_param, a, b) = match kind {
        PairKind::Phi1Phi3 => {
            let r = c / (eps * eps * zeta.powi(3) * root_n);
            if delta > 1.0 / 6.0 {
                return Err(infeasible(format!("requires delta <= 1/6, got {delta}")));
            }
            if r > delta {
                return Err(infeasible(format!(
                    "requires R <= delta, got R = {r} > {delta}"
                )));
            }
            let s = (2.0 - 6.0 * delta - r) * r / (6.0 * delta - 9.0 * delta * delta);
            s_param = Some(s);
            let phi1 = 1.0 - 3.0 * delta;
            let a = PhiPsiParams {
                phi: [phi1, eps, zeta * (1.0 + s).sqrt()],
                ..w.clone()
            };
            let b = PhiPsiParams {
                phi: [phi1 - r, eps, zeta],
                ..w.clone()
            };
            (r, a, b)
        }
        PairKind::Phi2 => {
            let r = c / (delta * eps * zeta * zeta * root_n);
            if eps > 1.0 / 3.0 {
                return Err(infeasible(format!("requires epsilon <= 1/3, got {eps}")));
            }
            if r > eps {
                return Err(infeasible(format!(
                    "requires R <= epsilon, got R = {r} > {eps}"
                )));
            }
            let phi1 = 1.0 - 3.0 * delta;
            let a = PhiPsiParams {
                phi: [phi1, eps, zeta * (1.0 + r / eps).sqrt()],
                ..w.clone()
            };
            let b = PhiPsiParams {
                phi: [phi1, eps + r, zeta],
                ..w.clone()
            };
            (r, a, b)
        }
        PairKind::Psi1 => {
            let r = c / root_n;
            let b = PhiPsiParams {
                psi1: w.psi1.iter().zip(&w.psi2).map(|(x, y)| x + r * y).collect(),
                ..w.clone()
            };
            (r, w.clone(), b)
        }
        PairKind::Psi2 => {
            if bx.k <= 2 {
                return Err(infeasible(format!("requires K > 2, got K = {}", bx.k)));
            }
            let r = c / (root_n * delta * eps * zeta * zeta);
            if r >= 2.0 {
                return Err(infeasible(format!("requires R < 2, got R = {r}")));
            }
            let al = r / (2.0 - r);
            let psi2 = witness_psi2(bx.k);
            let mut h = vec![0.0; bx.k];
            h[0] = 0.5f64.sqrt();
            h[2] = -(0.5f64.sqrt());
            let mut tilde: Vec<f64> = psi2
                .iter()
                .zip(&h)
                .map(|(x, y)| (x + al * y) / (1.0 + al))
                .collect();
            let nrm = tilde.iter().map(|v| v * v).sum::<f64>().sqrt();
            tilde.iter_mut().for_each(|v| *v /= nrm);
            realized = Some(crate::params::dist(&tilde, &psi2));
            alpha = Some(al);
            let phi = [1.0 - 3.0 * delta, eps, zeta];
            let a = PhiPsiParams {
                phi,
                psi1: uniform_density(bx.k),
                psi2,
            };
            let b = PhiPsiParams {
                psi2: tilde,
                ..a.clone()
            };
            (r, a, b)
        }
    };
    check_member("a", &a, bx)?;
    check_member("b", &b, bx)?;
    Ok(HypothesisPair {
        kind,
        r_a: r_of_phi(&a.phi),
        r_b: r_of_phi(&b.phi),
        separation: losses(&b, &a),
        rho: rho(&a, &b),
        r_param,
        s_param,
        alpha,
        realized_psi2_distance: realized,
        a,
        b,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdProbe {
    pub pair: HypothesisPair,
    pub n: usize,
    pub replicas: usize,
    /// Monte-Carlo `K(P_a^(n); P_b^(n))` from the paths drawn under `a`.
    pub kl_mean: f64,
    pub kl_stderr: f64,
    /// Fraction of `a`-paths the likelihood-ratio test assigns to `b`.
    pub type_one: f64,
    /// Fraction of `b`-paths assigned to `a`.
    pub type_two: f64,
    /// `(type_one + type_two) / 2`; ties count as half an error.
    pub test_error: f64,
    pub rho: f64,
    pub n_rho_sq: f64,
}

fn decision_error(llr: f64, truth_is_a: bool) -> f64 {
    if llr == 0.0 {
        0.5
    } else if (llr > 0.0) != truth_is_a {
        1.0
    } else {
        0.0
    }
}

/// Likelihood-ratio testing of the constructed pair on `replicas` paths per
/// hypothesis. Replica `r` uses seeds `derive(seed, 2r)` (under `a`) and
/// `derive(seed, 2r + 1)` (under `b`).
pub fn threshold_probe(
    kind: PairKind,
    bx: &ConstraintBox,
    n: usize,
    c: f64,
    replicas: usize,
    seed: u64,
) -> Result<ThresholdProbe> {
    if replicas < 2 {
        return Err(Error::Validation("need at least 2 replicas".into()));
    }
    if n == 0 {
        return Err(Error::Validation("n must be positive".into()));
    }
    let pair = lower_bound_pair(kind, n as f64, bx, c)?;
    let ta = phipsi_to_theta(&pair.a)?;
    let tb = phipsi_to_theta(&pair.b)?;
    let rows = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let ya = sample_path(&ta, n, seed::derive(seed, 2 * r))?;
            let yb = sample_path(&tb, n, seed::derive(seed, 2 * r + 1))?;
            Ok((
                log_ratio(&pair.a, &pair.b, &ya.observed)?,
                log_ratio(&pair.a, &pair.b, &yb.observed)?,
            ))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let m = replicas as f64;
    let kl_mean = rows.iter().map(|r| r.0).sum::<f64>() / m;
    let var = rows.iter().map(|r| (r.0 - kl_mean).powi(2)).sum::<f64>() / (m - 1.0);
    let type_one = rows.iter().map(|r| decision_error(r.0, true)).sum::<f64>() / m;
    let type_two = rows.iter().map(|r| decision_error(r.1, false)).sum::<f64>() / m;
    let rho = pair.rho;
    Ok(ThresholdProbe {
        n,
        replicas,
        kl_mean,
        kl_stderr: (var / m).sqrt(),
        type_one,
        type_two,
        test_error: 0.5 * (type_one + type_two),
        rho,
        n_rho_sq: n as f64 * rho * rho,
        pair,
    })
}

/// Loss column of a sweep record.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossColumn {
    Phi1,
    Phi2,
    Phi3,
    Psi1,
    Psi2,
    Pq,
    F,
    Objective,
}

impl LossColumn {
    pub const ALL: [LossColumn; 8] = [
        Self::Phi1,
        Self::Phi2,
        Self::Phi3,
        Self::Psi1,
        Self::Psi2,
        Self::Pq,
        Self::F,
        Self::Objective,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Phi1 => "phi1",
            Self::Phi2 => "phi2",
            Self::Phi3 => "phi3",
            Self::Psi1 => "psi1",
            Self::Psi2 => "psi2",
            Self::Pq => "pq",
            Self::F => "f",
            Self::Objective => "objective",
        }
    }
}

impl FromStr for LossColumn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.strip_prefix("loss_").unwrap_or(s);
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Validation(format!("unknown loss column {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(rename = "box")]
    pub bx: ConstraintBox,
    pub n_grid: Vec<usize>,
    pub replicas: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_target")]
    pub target: LossColumn,
    #[serde(default)]
    pub output_path: Option<String>,
    /// Fixed truth; drawn from the box with the master seed when absent.
    #[serde(default)]
    pub truth: Option<PhiPsiParams>,
    /// Draw a fresh truth for every row.
    #[serde(default)]
    pub resample_truth: bool,
    #[serde(default)]
    pub search: SearchConfig,
}

fn default_target() -> LossColumn {
    LossColumn::Phi2
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.bx.validate()?;
        self.search.validate()?;
        if self.n_grid.is_empty() {
            return Err(Error::Validation("n_grid is empty".into()));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Validation(format!(
                "n_grid {:?} is not strictly increasing",
                self.n_grid
            )));
        }
        if self.n_grid[0] < 3 {
            return Err(Error::Validation("every n must be at least 3".into()));
        }
        if self.replicas == 0 {
            return Err(Error::Validation("replicas must be positive".into()));
        }
        if let Some(t) = &self.truth {
            let rep = validate_phipsi(t, &self.bx);
            let failed: Vec<_> = rep.failures().map(|c| c.name).collect();
            if !failed.is_empty() {
                return Err(Error::Validation(format!("truth fails {failed:?}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub n: usize,
    pub replica: usize,
    pub seed: u64,
    pub bx: ConstraintBox,
    pub losses: Option<LossRecord>,
    pub objective: Option<f64>,
    pub wall_ms: f64,
    pub error: Option<String>,
}

impl SweepRecord {
    pub fn value(&self, col: LossColumn) -> Option<f64> {
        let l = self.losses.as_ref()?;
        match col {
            LossColumn::Phi1 => Some(l.phi1),
            LossColumn::Phi2 => Some(l.phi2),
            LossColumn::Phi3 => Some(l.phi3),
            LossColumn::Psi1 => Some(l.psi1),
            LossColumn::Psi2 => Some(l.psi2),
            LossColumn::Pq => l.pq,
            LossColumn::F => l.f,
            LossColumn::Objective => self.objective,
        }
    }
}

pub const SWEEP_HEADER: &str =
    "n,replica,seed,delta,epsilon,zeta,L,K,loss_phi1,loss_phi2,loss_phi3,\
loss_psi1,loss_psi2,loss_pq,loss_f,objective,wall_ms,error";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV with one row per record; missing values are empty fields.
pub fn sweep_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in records {
        let cols: Vec<String> = [
            LossColumn::Phi1,
            LossColumn::Phi2,
            LossColumn::Phi3,
            LossColumn::Psi1,
            LossColumn::Psi2,
            LossColumn::Pq,
            LossColumn::F,
            LossColumn::Objective,
        ]
        .into_iter()
        .map(|c| opt(r.value(c)))
        .collect();
        let err = r
            .error
            .as_deref()
            .map(|e| format!("\"{}\"", e.replace('"', "'")))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{:.3},{}\n",
            r.n,
            r.replica,
            r.seed,
            r.bx.delta,
            r.bx.epsilon,
            r.bx.zeta,
            r.bx.l,
            r.bx.k,
            cols.join(","),
            r.wall_ms,
            err
        ));
    }
    out
}

/// Seed of the fixed truth when none is configured.
pub fn truth_seed(master: u64) -> u64 {
    seed::derive(master, u64::MAX)
}

fn sweep_row(
    cfg: &SweepConfig,
    truth: Option<&PhiPsiParams>,
    n: usize,
    replica: usize,
) -> SweepRecord {
    let row_seed = seed::derive(seed::derive(cfg.master_seed, n as u64), replica as u64);
    let start = Instant::now();
    let run = || -> Result<(LossRecord, f64)> {
        let truth = match truth {
            Some(t) => t.clone(),
            None => sample_phipsi(&cfg.bx, seed::derive(row_seed, 1))?,
        };
        let theta = phipsi_to_theta(&truth)?;
        let path = sample_path(&theta, n, row_seed)?;
        let phat = empirical_triple_law(&path.observed, cfg.bx.k)?;
        let search = SearchConfig {
            seed: seed::derive(row_seed, 2),
            ..cfg.search
        };
        let fit = min_distance_fit(&phat, &cfg.bx, &search)?;
        Ok((losses(&fit.estimate, &truth), fit.objective))
    };
    let outcome = run();
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let (losses, objective, error) = match outcome {
        Ok((l, o)) => (Some(l), Some(o), None),
        Err(e) => (None, None, Some(e.to_string())),
    };
    SweepRecord {
        n,
        replica,
        seed: row_seed,
        bx: cfg.bx,
        losses,
        objective,
        wall_ms,
        error,
    }
}

/// One record per `(n, replica)`, ordered by `n` then replica. Row errors
/// are recorded and do not stop the sweep.
pub fn rate_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRecord>> {
    cfg.validate()?;
    let truth = if cfg.resample_truth {
        None
    } else {
        Some(match &cfg.truth {
            Some(t) => t.clone(),
            None => sample_phipsi(&cfg.bx, truth_seed(cfg.master_seed))?,
        })
    };
    let jobs: Vec<(usize, usize)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| (0..cfg.replicas).map(move |r| (n, r)))
        .collect();
    Ok(jobs
        .into_par_iter()
        .map(|(n, r)| sweep_row(cfg, truth.as_ref(), n, r))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub groups: usize,
}

/// Ordinary least squares of `log y` on `log x`. Points with nonpositive or
/// non-finite coordinates are dropped; fewer than two distinct `x` values is
/// a degenerate fit.
pub fn loglog_fit(x: &[f64], y: &[f64]) -> Result<SlopeFit> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| a.is_finite() && b.is_finite() && **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    let m = pts.len() as f64;
    let xbar = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ybar = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - xbar).powi(2)).sum();
    if pts.len() < 2 || !(sxx > 0.0) {
        return Err(Error::DegenerateFit(format!(
            "need two distinct positive x values, got {} usable points",
            pts.len()
        )));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - xbar) * (p.1 - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - ybar).powi(2)).sum();
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    Ok(SlopeFit {
        slope,
        intercept,
        r_squared: if ss_tot > 0.0 {
            1.0 - ss_res / ss_tot
        } else {
            1.0
        },
        groups: pts.len(),
    })
}

pub fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

/// `(n, median)` of a loss column, ignoring missing and non-finite values.
pub fn medians(records: &[SweepRecord], col: LossColumn) -> Vec<(usize, f64)> {
    let mut ns: Vec<usize> = records.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    ns.into_iter()
        .filter_map(|n| {
            let mut v: Vec<f64> = records
                .iter()
                .filter(|r| r.n == n)
                .filter_map(|r| r.value(col))
                .filter(|x| x.is_finite())
                .collect();
            median(&mut v).map(|m| (n, m))
        })
        .collect()
}

/// Log-log slope of the median loss against `n`.
pub fn slope_fit(records: &[SweepRecord], col: LossColumn) -> Result<SlopeFit> {
    let med = medians(records, col);
    let x: Vec<f64> = med.iter().map(|p| p.0 as f64).collect();
    let y: Vec<f64> = med.iter().map(|p| p.1).collect();
    loglog_fit(&x, &y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn reference_box() -> ConstraintBox {
        ConstraintBox::new(0.1, 0.2, 0.1, 0.3, 3).unwrap()
    }

    #[test]
    fn phi1_phi3_example() {
        let p = lower_bound_pair(PairKind::Phi1Phi3, 1e7, &reference_box(), 0.01).unwrap();
        assert_abs_diff_eq!(p.r_param, 0.07905694, epsilon = 1e-8);
        // the quoted 0.2047687 is rounded loosely; the closed form gives 0.2047642
        assert_abs_diff_eq!(p.s_param.unwrap(), 0.2047687, epsilon = 5e-6);
        let r = p.r_param;
        assert_abs_diff_eq!(p.s_param.unwrap(), (1.4 - r) * r / 0.51, epsilon = 1e-15);
        assert_abs_diff_eq!(p.a.phi[0], 0.7, epsilon = 1e-12);
        assert_abs_diff_eq!(p.a.phi[2], 0.10976, epsilon = 1e-5);
        assert_abs_diff_eq!(p.b.phi[0], 0.62094, epsilon = 1e-5);
        assert_abs_diff_eq!(p.r_a, 3.07215e-4, epsilon = 1e-9);
        assert!((p.r_a - p.r_b).abs() <= 1e-12);
    }

    #[test]
    fn phi2_pair_has_equal_r() {
        let p = lower_bound_pair(PairKind::Phi2, 1e7, &reference_box(), 0.01).unwrap();
        assert!((p.r_a - p.r_b).abs() <= 1e-12);
        assert_abs_diff_eq!(p.separation.phi2, p.r_param, epsilon = 1e-15);
    }

    #[test]
    fn psi1_example() {
        let p = lower_bound_pair(PairKind::Psi1, 1e4, &reference_box(), 0.01).unwrap();
        assert_abs_diff_eq!(p.separation.psi1, 1e-4, epsilon = 1e-15);
        assert_abs_diff_eq!(p.rho, 1e-4, epsilon = 1e-15);
    }

    #[test]
    fn psi2_pair_is_renormalized() {
        let p = lower_bound_pair(PairKind::Psi2, 1e7, &reference_box(), 0.01).unwrap();
        let nrm: f64 = p.b.psi2.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert_abs_diff_eq!(nrm, 1.0, epsilon = 1e-15);
        assert!(p.realized_psi2_distance.unwrap() > 0.0);
        assert_abs_diff_eq!(
            p.realized_psi2_distance.unwrap(),
            p.separation.psi2,
            epsilon = 1e-15
        );
    }

    #[test]
    fn zero_c_gives_identical_pair() {
        for kind in PairKind::ALL {
            let p = lower_bound_pair(kind, 1e5, &reference_box(), 0.0).unwrap();
            assert_eq!(p.a, p.b, "{kind}");
            assert_eq!(p.rho, 0.0);
        }
    }

    #[test]
    fn infeasible_constructions_name_the_inequality() {
        let err = lower_bound_pair(PairKind::Phi1Phi3, 10.0, &reference_box(), 0.01).unwrap_err();
        assert!(err.is_infeasible());
        assert!(err.to_string().contains("R <= delta"), "{err}");
        let k2 = ConstraintBox::new(0.1, 0.2, 0.1, 0.3, 2).unwrap();
        let err = lower_bound_pair(PairKind::Psi2, 1e7, &k2, 0.01).unwrap_err();
        assert!(err.to_string().contains("K > 2"));
        let wide = ConstraintBox::new(0.1, 0.2, 0.3, 0.3, 3).unwrap();
        let err = lower_bound_pair(PairKind::Psi1, 1e7, &wide, 0.01).unwrap_err();
        assert!(err.to_string().contains("compatibility"));
    }

    #[test]
    fn kind_parsing() {
        for k in PairKind::ALL {
            assert_eq!(k.as_str().parse::<PairKind>().unwrap(), k);
        }
        assert!("phi3".parse::<PairKind>().is_err());
        assert_eq!("loss_psi2".parse::<LossColumn>().unwrap(), LossColumn::Psi2);
    }

    #[test]
    fn identical_pair_probe_is_at_chance() {
        let t = threshold_probe(PairKind::Psi1, &reference_box(), 50, 0.0, 20, 3).unwrap();
        assert_eq!(t.test_error, 0.5);
        assert_eq!(t.kl_mean, 0.0);
    }

    #[test]
    fn exact_power_law_slope() {
        let x = [1e3, 1e4, 1e5];
        let y = [1.0, 10f64.powf(-0.5), 0.1];
        let f = loglog_fit(&x, &y).unwrap();
        assert_abs_diff_eq!(f.slope, -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(f.r_squared, 1.0, epsilon = 1e-12);
        let flat = loglog_fit(&x, &[0.3; 3]).unwrap();
        assert_abs_diff_eq!(flat.slope, 0.0, epsilon = 1e-15);
        assert!(loglog_fit(&[1e3], &[1.0]).is_err());
        assert!(loglog_fit(&x, &[0.0; 3]).is_err());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&mut []), None);
    }

    fn small_sweep() -> SweepConfig {
        SweepConfig {
            bx: ConstraintBox::new(0.1, 0.3, 0.3, 0.3, 3).unwrap(),
            n_grid: vec![1000],
            replicas: 1,
            master_seed: 5,
            target: LossColumn::Phi2,
            output_path: None,
            truth: None,
            resample_truth: false,
            search: SearchConfig {
                random_starts: 1,
                ..SearchConfig::default()
            },
        }
    }

    #[test]
    fn sweep_single_row_and_determinism() {
        let cfg = small_sweep();
        let a = rate_sweep(&cfg).unwrap();
        assert_eq!(a.len(), 1);
        assert!(a[0].error.is_none());
        let b = rate_sweep(&cfg).unwrap();
        let strip = |r: &[SweepRecord]| {
            r.iter()
                .map(|x| SweepRecord {
                    wall_ms: 0.0,
                    ..x.clone()
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(sweep_csv(&strip(&a)), sweep_csv(&strip(&b)));
        let csv = sweep_csv(&a);
        assert_eq!(csv.lines().count(), 2);
        assert_eq!(csv.lines().next().unwrap().split(',').count(), 18);
    }

    #[test]
    fn sweep_rejects_bad_grids() {
        let mut cfg = small_sweep();
        cfg.n_grid = vec![1000, 1000];
        assert!(rate_sweep(&cfg).is_err());
        cfg.n_grid = vec![];
        assert!(rate_sweep(&cfg).is_err());
    }

    #[test]
    fn slope_fit_requires_two_sizes() {
        let rec = rate_sweep(&small_sweep()).unwrap();
        assert!(matches!(
            slope_fit(&rec, LossColumn::Phi2),
            Err(Error::DegenerateFit(_))
        ));
    }

    #[test]
    fn config_parses_with_defaults() {
        let cfg: SweepConfig = serde_json::from_str(
            r#"{"box": {"delta": 0.1, "epsilon": 0.3, "zeta": 0.3, "L": 0.3, "K": 3},
                "n_grid": [1000, 10000], "replicas": 10}"#,
        )
        .unwrap();
        assert_eq!(cfg.target, LossColumn::Phi2);
        assert_eq!(cfg.search, SearchConfig::default());
        cfg.validate().unwrap();
    }
}
