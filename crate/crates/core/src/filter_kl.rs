//! Prediction filters, exact log-likelihoods and Monte-Carlo
//! Kullback-Leibler estimates between two parameters.
//!
//! `P_k(x) = P(X_{k+1} = x | Y_1..Y_k)` is the prediction filter. In
//! `(phi, psi)` coordinates it is summarised by the scalar
//! `V_k = phi3 (1 - 2 P_k(1) - phi1)`, and the one-step predictive density of
//! `Y_{k+1}` is `psi1 + V_k psi2 / 2`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{phipsi_to_theta, theta_to_phipsi, PhiPsiParams, ThetaParams};
use crate::seed;
use crate::simulator::sample_path;
use crate::triple_law::{m_of_phi, r_of_phi, rho};

/// Predictive probabilities are floored here before taking logs, except
/// exact zeros which give `-inf`.
pub const LOG_FLOOR: f64 = 1e-300;

/// Default bound on `max(|phi2|, |phi2~|)` under which the `n rho^2` bound on
/// the divergence is expected to hold.
pub const DEFAULT_PHI2_GATE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FilterTrace {
    /// `V_1..V_n`.
    pub v: Vec<f64>,
    /// `P_1(1)..P_n(1)`.
    pub predfilter: Vec<f64>,
    /// `log p(Y_1..Y_n)`.
    pub loglik: f64,
    /// Set when some observation had zero predictive probability.
    pub impossible: bool,
}

fn log_density(d: f64) -> f64 {
    if d > 0.0 {
        d.max(LOG_FLOOR).ln()
    } else {
        f64::NEG_INFINITY
    }
}

fn check_symbols(observed: &[usize], k: usize) -> Result<()> {
    if observed.is_empty() {
        return Err(Error::Validation("observation sequence is empty".into()));
    }
    if let Some((i, y)) = observed.iter().enumerate().find(|(_, y)| **y >= k) {
        return Err(Error::Validation(format!(
            "observation {i} is symbol {y}, outside 0..{k}"
        )));
    }
    Ok(())
}

/// Forward prediction filter in native coordinates.
pub fn forward_filter(theta: &ThetaParams, observed: &[usize]) -> Result<FilterTrace> {
    theta.validate()?;
    check_symbols(observed, theta.k())?;
    let q = theta.transition();
    let [phi1, _, phi3] = theta_to_phipsi(theta)?.params.phi;
    let n = observed.len();
    let mut v = Vec::with_capacity(n);
    let mut predfilter = Vec::with_capacity(n);
    let mut loglik = 0.0;
    let mut impossible = false;
    // law of X_k given Y_1..Y_{k-1}; starts at the stationary law of X_1
    let mut pred = theta.stationary()?;
    for &y in observed {
        let joint = [theta.f0[y] * pred[0], theta.f1[y] * pred[1]];
        let d = joint[0] + joint[1];
        loglik += log_density(d);
        let post = if d > 0.0 {
            [joint[0] / d, joint[1] / d]
        } else {
            impossible = true;
            pred
        };
        pred = [
            post[0] * q[0][0] + post[1] * q[1][0],
            post[0] * q[0][1] + post[1] * q[1][1],
        ];
        predfilter.push(pred[1]);
        v.push(phi3 * (1.0 - 2.0 * pred[1] - phi1));
    }
    Ok(FilterTrace {
        v,
        predfilter,
        loglik,
        impossible,
    })
}

/// The same filter run through the scalar `V_k` recursion in `(phi, psi)`
/// coordinates.
pub fn v_recursion(pp: &PhiPsiParams, observed: &[usize]) -> Result<FilterTrace> {
    check_symbols(observed, pp.k())?;
    let [phi1, phi2, phi3] = pp.phi;
    let m1 = m_of_phi(&pp.phi).m1;
    let r = r_of_phi(&pp.phi);
    let (s1, s2) = (&pp.psi1, &pp.psi2);
    let n = observed.len();
    let mut v = Vec::with_capacity(n);
    let to_pred = |vk: f64| {
        if phi3 > 0.0 {
            0.5 * (1.0 - phi1 - vk / phi3)
        } else {
            0.5 * (1.0 - phi1)
        }
    };
    let y1 = observed[0];
    if !(s1[y1] > 0.0) {
        return Err(Error::NumericalDegeneracy {
            step: 1,
            value: s1[y1],
        });
    }
    let mut loglik = log_density(s1[y1]);
    let mut prev = 2.0 * m1 * s2[y1] / s1[y1];
    v.push(prev);
    for (i, &y) in observed.iter().enumerate().skip(1) {
        let denom = s1[y] + 0.5 * s2[y] * prev;
        if !(denom > 0.0) {
            return Err(Error::NumericalDegeneracy {
                step: i + 1,
                value: denom,
            });
        }
        loglik += log_density(denom);
        prev = (phi2 * (s1[y] - phi1 * phi3 * s2[y]) * prev + 2.0 * r * s2[y]) / denom;
        v.push(prev);
    }
    let predfilter = v.iter().map(|&vk| to_pred(vk)).collect();
    Ok(FilterTrace {
        v,
        predfilter,
        loglik,
        impossible: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KlEstimate {
    pub mean: f64,
    /// Standard error of the mean.
    pub stderr: f64,
    pub replicates_used: usize,
    /// Replicates whose log-likelihood ratio was not finite; excluded from
    /// the mean.
    pub contaminated: usize,
}

/// Monte-Carlo estimate of `K(P_a^(n); P_b^(n)) = E_a[log p_a - log p_b]`.
pub fn kl_estimate(
    a: &PhiPsiParams,
    b: &PhiPsiParams,
    n: usize,
    replicates: usize,
    seed: u64,
) -> Result<KlEstimate> {
    if replicates < 2 {
        return Err(Error::Validation("need at least 2 replicates".into()));
    }
    let theta_a = phipsi_to_theta(a)?;
    let diffs = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let path = sample_path(&theta_a, n, seed::derive(seed, r))?;
            log_ratio(a, b, &path.observed)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(summarize(&diffs))
}

/// `log p_a(y) - log p_b(y)` via the `V_k` recursion.
pub fn log_ratio(a: &PhiPsiParams, b: &PhiPsiParams, observed: &[usize]) -> Result<f64> {
    Ok(v_recursion(a, observed)?.loglik - v_recursion(b, observed)?.loglik)
}

fn summarize(diffs: &[f64]) -> KlEstimate {
    let finite: Vec<f64> = diffs.iter().copied().filter(|d| d.is_finite()).collect();
    let m = finite.len();
    let mean = finite.iter().sum::<f64>() / m as f64;
    let var = if m > 1 {
        finite.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (m - 1) as f64
    } else {
        f64::NAN
    };
    KlEstimate {
        mean,
        stderr: (var / m as f64).sqrt(),
        replicates_used: m,
        contaminated: diffs.len() - m,
    }
}

/// `n rho(a, b)^2`, the structural factor of the divergence bound.
pub fn kl_rho_bound(a: &PhiPsiParams, b: &PhiPsiParams, n: usize) -> f64 {
    let r = rho(a, b);
    n as f64 * r * r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KlProbeRow {
    pub n: usize,
    pub rho: f64,
    pub rho_sq_times_n: f64,
    pub kl_mean: f64,
    pub kl_stderr: f64,
    /// `kl_mean / (n rho^2)`; an empirical constant of the bound.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KlProbe {
    pub rows: Vec<KlProbeRow>,
    pub phi2_gate: f64,
    /// `max(|phi2|, |phi2~|)` exceeded the gate.
    pub gate_exceeded: bool,
}

impl KlProbe {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,rho,rho_sq_times_n,kl_mean,kl_stderr,ratio\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.n, r.rho, r.rho_sq_times_n, r.kl_mean, r.kl_stderr, r.ratio
            ));
        }
        out
    }
}

/// Divergence estimates over a grid of sample sizes for one pair.
pub fn kl_probe(
    a: &PhiPsiParams,
    b: &PhiPsiParams,
    n_grid: &[usize],
    replicates: usize,
    seed: u64,
    phi2_gate: f64,
) -> Result<KlProbe> {
    let rho_ab = rho(a, b);
    let rows = n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let kl = kl_estimate(a, b, n, replicates, seed::derive(seed, i as u64))?;
            let bound = kl_rho_bound(a, b, n);
            Ok(KlProbeRow {
                n,
                rho: rho_ab,
                rho_sq_times_n: bound,
                kl_mean: kl.mean,
                kl_stderr: kl.stderr,
                ratio: kl.mean / bound,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KlProbe {
        rows,
        phi2_gate,
        gate_exceeded: a.phi[1].abs().max(b.phi[1].abs()) > phi2_gate,
    })
}

/// Least-squares slope of `y` on `x` through the origin, with the centred
/// coefficient of determination.
pub fn fit_through_origin(x: &[f64], y: &[f64]) -> (f64, f64) {
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let slope = sxy / sxx;
    let ybar = y.iter().sum::<f64>() / y.len() as f64;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - slope * a).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - ybar).powi(2)).sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else {
        1.0
    };
    (slope, r2)
}
