//! Minimum-distance estimation of `(phi, psi)` from an empirical triple law.
//!
//! The search runs a Nelder-Mead descent from several starts in unconstrained
//! coordinates `(phi1, phi2, phi3, log-ratio psi1, tangent psi2)`. Every
//! evaluated point is projected onto the constraint box first; the squared
//! distance to the projection is added as a penalty so the descent is pulled
//! back towards the feasible set without moving feasible optima.

mod simplex;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{
    canonicalize, dist, dot, phipsi_to_theta, sample_phipsi, validate_phipsi, witness,
    witness_psi2, ConstraintBox, PhiPsiParams, ThetaParams,
};
use crate::seed;
use crate::simulator::empirical_triple_law;
use crate::triple_law::{alignment, phi_of_m, triple_law_unchecked, MomentVector, TripleLaw};

pub use simplex::{minimize, SimplexOptions, SimplexResult};

/// `|m1|` below this (relative to the mass of `phat`) counts as zero in
/// [`moment_init`].
pub const MOMENT_ZERO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Extra starts drawn with [`sample_phipsi`].
    pub random_starts: usize,
    /// Objective evaluations per start, shared across restarts.
    pub max_evals: usize,
    pub initial_step: f64,
    pub shrink: f64,
    pub tol: f64,
    /// Points per scalar coordinate in the `grid_floor` grid.
    pub grid_points: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            random_starts: 4,
            max_evals: 2000,
            initial_step: 0.05,
            shrink: 0.5,
            tol: 1e-12,
            grid_points: 9,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_evals == 0 {
            return Err(Error::Validation("max_evals must be positive".into()));
        }
        if !(self.initial_step > 0.0) || !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::Validation(format!(
                "need initial_step > 0 and shrink in (0,1), got {} and {}",
                self.initial_step, self.shrink
            )));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::Validation(format!(
                "tol = {} must be >= 0",
                self.tol
            )));
        }
        if self.grid_points < 2 {
            return Err(Error::Validation("grid_points must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    /// Canonical best-found parameter; always a member of the box.
    pub estimate: PhiPsiParams,
    /// Euclidean distance between the estimate's triple law and `phat`.
    pub objective: f64,
    /// Minimum objective over a coarse `phi` grid with `psi` fixed at the
    /// estimate.
    pub grid_floor: f64,
    pub starts: usize,
    /// The winning start stopped on the convergence test rather than the
    /// evaluation budget.
    pub converged: bool,
    /// The moment initializer fell back to the box centre.
    pub init_fallback: bool,
    pub evaluations: usize,
}

impl FitResult {
    /// `objective <= 2 grid_floor + 1e-9`.
    pub fn near_minimal(&self) -> bool {
        self.objective <= 2.0 * self.grid_floor + 1e-9
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentInit {
    pub params: PhiPsiParams,
    pub moments: MomentVector,
    pub fallback: bool,
}

/// Orthonormal basis of `{x : sum x = 0}` in `R^K` (Helmert vectors).
fn helmert(k: usize) -> Vec<Vec<f64>> {
    (1..k)
        .map(|j| {
            let s = ((j * (j + 1)) as f64).sqrt();
            (0..k)
                .map(|i| match i.cmp(&j) {
                    std::cmp::Ordering::Less => 1.0 / s,
                    std::cmp::Ordering::Equal => -(j as f64) / s,
                    std::cmp::Ordering::Greater => 0.0,
                })
                .collect()
        })
        .collect()
}

/// Euclidean projection of `y` onto `{z >= 0, sum z = mass}`.
fn project_simplex(y: &[f64], mass: f64) -> Vec<f64> {
    let mut u = y.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = u[0];
    let mut tau = u[0] - mass;
    for (i, ui) in u.iter().enumerate().skip(1) {
        cum += ui;
        let t = (cum - mass) / (i + 1) as f64;
        if ui - t > 0.0 {
            tau = t;
        }
    }
    y.iter().map(|v| (v - tau).max(0.0)).collect()
}

/// Raw search coordinates and their decoding.
struct Coords {
    k: usize,
    basis: Vec<Vec<f64>>,
}

struct Decoded {
    phi: [f64; 3],
    psi1: Vec<f64>,
    psi2: Vec<f64>,
    psi2_norm: f64,
}

impl Coords {
    fn new(k: usize) -> Self {
        Self {
            k,
            basis: helmert(k),
        }
    }

    fn encode(&self, pp: &PhiPsiParams) -> Vec<f64> {
        let mut x = Vec::with_capacity(2 * self.k + 1);
        x.extend_from_slice(&pp.phi);
        let last = pp.psi1[self.k - 1].max(1e-12).ln();
        x.extend(
            pp.psi1[..self.k - 1]
                .iter()
                .map(|v| v.max(1e-12).ln() - last),
        );
        x.extend(self.basis.iter().map(|e| dot(e, &pp.psi2)));
        x
    }

    fn decode(&self, x: &[f64]) -> Decoded {
        let k = self.k;
        let logits = &x[3..k + 2];
        let top = logits.iter().fold(0.0f64, |m, v| m.max(*v));
        let mut psi1: Vec<f64> = logits.iter().map(|v| (v - top).exp()).collect();
        psi1.push((-top).exp());
        let s: f64 = psi1.iter().sum();
        psi1.iter_mut().for_each(|v| *v /= s);

        let mut psi2 = vec![0.0; k];
        for (c, e) in x[k + 2..].iter().zip(&self.basis) {
            for (p, b) in psi2.iter_mut().zip(e) {
                *p += c * b;
            }
        }
        let psi2_norm = dot(&psi2, &psi2).sqrt();
        if psi2_norm > 0.0 {
            psi2.iter_mut().for_each(|v| *v /= psi2_norm);
        }
        Decoded {
            phi: [x[0], x[1], x[2]],
            psi1,
            psi2,
            psi2_norm,
        }
    }
}

/// Nearest-in-spirit member of the box: `psi2` is kept, `phi` is clamped
/// coordinate-wise and `psi1` is projected onto the densities dominating the
/// emission lower bounds. `None` when `psi2` admits no `phi3 >= zeta`.
fn project(bx: &ConstraintBox, phi: [f64; 3], psi1: &[f64], psi2: &[f64]) -> Option<PhiPsiParams> {
    let l1: f64 = psi2.iter().map(|v| v.abs()).sum();
    if !(l1 > 0.0) || phi.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let phi3_hi = 2.0 / l1;
    if bx.zeta > phi3_hi {
        return None;
    }

    let mut positive = phi[1] >= 0.0;
    if bx.phi2_upper(positive) < bx.epsilon {
        positive = !positive;
    }
    let mag = phi[1].abs().clamp(bx.epsilon, bx.phi2_upper(positive));
    let phi2 = if positive { mag } else { -mag };
    let lim = bx.phi1_limit(phi2);
    let phi1 = phi[0].clamp(-lim, lim);
    let phi3 = phi[2].clamp(bx.zeta, phi3_hi);

    let lower: Vec<f64> = psi2
        .iter()
        .map(|b| 0.5 * phi3 * (phi1 * b + b.abs()))
        .collect();
    let psi1 = if psi1.iter().zip(&lower).all(|(a, b)| a >= b) {
        psi1.to_vec()
    } else {
        let mass = (1.0 - lower.iter().sum::<f64>()).max(0.0);
        let shifted: Vec<f64> = psi1.iter().zip(&lower).map(|(a, b)| a - b).collect();
        project_simplex(&shifted, mass)
            .into_iter()
            .zip(&lower)
            .map(|(z, b)| z + b)
            .collect()
    };
    Some(PhiPsiParams {
        phi: [phi1, phi2, phi3],
        psi1,
        psi2: psi2.to_vec(),
    })
}

struct Objective<'a> {
    phat: &'a TripleLaw,
    bx: &'a ConstraintBox,
    coords: Coords,
}

impl Objective<'_> {
    fn point(&self, x: &[f64]) -> Option<(PhiPsiParams, f64)> {
        let d = self.coords.decode(x);
        let pp = project(self.bx, d.phi, &d.psi1, &d.psi2)?;
        let penalty = (0..3).map(|i| (d.phi[i] - pp.phi[i]).powi(2)).sum::<f64>()
            + dist(&d.psi1, &pp.psi1).powi(2)
            + (d.psi2_norm - 1.0).powi(2);
        Some((pp, penalty))
    }

    fn value(&self, x: &[f64]) -> f64 {
        match self.point(x) {
            Some((pp, penalty)) => self.distance(&pp) + penalty,
            None => f64::INFINITY,
        }
    }

    fn distance(&self, pp: &PhiPsiParams) -> f64 {
        triple_law_unchecked(pp).distance(self.phat)
    }
}

fn outer_residual(m: &[f64], psi1: &[f64]) -> DMatrix<f64> {
    let k = psi1.len();
    let mut r = DMatrix::from_fn(k, k, |i, j| m[i * k + j] - psi1[i] * psi1[j]);
    let t = r.transpose();
    r += t;
    r * 0.5
}

fn quad(r: &DMatrix<f64>, v: &[f64]) -> f64 {
    let k = v.len();
    let mut s = 0.0;
    for i in 0..k {
        for j in 0..k {
            s += v[i] * r[(i, j)] * v[j];
        }
    }
    s
}

fn box_centre(
    bx: &ConstraintBox,
    positive: bool,
    psi1: &[f64],
    psi2: &[f64],
) -> Option<PhiPsiParams> {
    let phi2 = 0.5 * (bx.epsilon + bx.phi2_upper(positive));
    let l1: f64 = psi2.iter().map(|v| v.abs()).sum();
    let phi3 = 0.5 * (bx.zeta + (2.0 / l1).min(2f64.sqrt()));
    project(
        bx,
        [0.0, if positive { phi2 } else { -phi2 }, phi3],
        psi1,
        psi2,
    )
}

/// Moment-contraction starting point for the search.
///
/// `psi1` is the first marginal, `(m1, psi2)` the leading eigenpair of the
/// `(1,2)` marginal residual, `m2` and `m3` contractions of the `(1,3)`
/// marginal and the full residual against `psi2`. The implied `phi` is
/// projected into the box; when `m` cannot be inverted the box centre is used.
pub fn moment_init(phat: &TripleLaw, bx: &ConstraintBox) -> Result<MomentInit> {
    bx.validate()?;
    let k = phat.k();
    if k != bx.k {
        return Err(Error::Validation(format!(
            "law has K = {k}, box has K = {}",
            bx.k
        )));
    }
    let mass = phat.total_mass();
    if !(mass > 0.0) {
        return Err(Error::Validation(format!("triple law has mass {mass}")));
    }
    let p: Vec<f64> = phat.as_slice().iter().map(|v| v / mass).collect();
    let law = TripleLaw::from_flat(k, p)?;
    let psi1 = law.first_marginal();

    let r12 = outer_residual(&law.pair_marginal(2), &psi1);
    let eig = SymmetricEigen::new(r12.clone());
    let lead = (0..k)
        .max_by(|&a, &b| {
            eig.eigenvalues[a]
                .abs()
                .total_cmp(&eig.eigenvalues[b].abs())
        })
        .expect("K >= 2");
    let mut psi2: Vec<f64> = eig.eigenvectors.column(lead).iter().copied().collect();
    let mean = psi2.iter().sum::<f64>() / k as f64;
    psi2.iter_mut().for_each(|v| *v -= mean);
    let nrm = dot(&psi2, &psi2).sqrt();
    let have_direction = nrm > 1e-8;
    if have_direction {
        psi2.iter_mut().for_each(|v| *v /= nrm);
    } else {
        psi2 = witness_psi2(k);
    }
    let psi2 = canonicalize(&PhiPsiParams {
        phi: [0.0; 3],
        psi1: psi1.clone(),
        psi2,
    })
    .psi2;

    let m1 = quad(&r12, &psi2);
    let m2 = quad(&outer_residual(&law.pair_marginal(1), &psi1), &psi2);
    let mut resid = law.clone();
    resid.add_outer(-1.0, &psi1, &psi1, &psi1);
    resid.add_outer(-m1, &psi2, &psi2, &psi1);
    resid.add_outer(-m1, &psi1, &psi2, &psi2);
    resid.add_outer(-m2, &psi2, &psi1, &psi2);
    let m3 = -resid.contract(&psi2, &psi2, &psi2);
    let moments = MomentVector { m1, m2, m3 };

    let inverted = if have_direction && m1.abs() > MOMENT_ZERO {
        phi_of_m(&moments).ok()
    } else {
        None
    };
    let projected = match inverted {
        Some(phi) => project(bx, phi, &psi1, &psi2),
        None => None,
    };
    let (params, fallback) = match projected {
        Some(pp) => (pp, false),
        None => {
            let pp = box_centre(bx, m1 >= 0.0, &psi1, &psi2)
                .or_else(|| {
                    let w = witness(bx);
                    box_centre(bx, m1 >= 0.0, &psi1, &w.psi2)
                })
                .unwrap_or_else(|| witness(bx));
            (pp, true)
        }
    };
    Ok(MomentInit {
        params,
        moments,
        fallback,
    })
}

struct StartOutcome {
    params: PhiPsiParams,
    objective: f64,
    converged: bool,
    evals: usize,
}

fn refine(obj: &Objective<'_>, start: &PhiPsiParams, cfg: &SearchConfig) -> StartOutcome {
    let mut x = obj.coords.encode(start);
    let mut best = obj.value(&x);
    let mut evals = 1usize;
    let mut converged = false;
    while evals < cfg.max_evals {
        let opts = SimplexOptions {
            initial_step: cfg.initial_step,
            shrink: cfg.shrink,
            max_evals: cfg.max_evals - evals,
            tol: cfg.tol,
        };
        let res = minimize(|v| obj.value(v), &x, &opts);
        evals += res.evals;
        converged = res.converged;
        let improved = best - res.f;
        if res.f < best {
            best = res.f;
            x = res.x;
        }
        if !(improved > cfg.tol) || !res.converged {
            break;
        }
    }
    let params = match obj.point(&x) {
        Some((pp, _)) => pp,
        None => start.clone(),
    };
    let objective = obj.distance(&params);
    StartOutcome {
        params: canonicalize(&params),
        objective,
        converged,
        evals,
    }
}

fn lex_phi(a: &PhiPsiParams, b: &PhiPsiParams) -> std::cmp::Ordering {
    a.phi
        .iter()
        .zip(&b.phi)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

fn linspace(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
}

fn grid_floor(obj: &Objective<'_>, best: &PhiPsiParams, n: usize) -> f64 {
    let bx = obj.bx;
    let l1: f64 = best.psi2.iter().map(|v| v.abs()).sum();
    let phi3_hi = (2.0 / l1).min(2f64.sqrt()).max(bx.zeta);
    let mut floor = f64::INFINITY;
    for positive in [true, false] {
        let hi = bx.phi2_upper(positive);
        if hi < bx.epsilon {
            continue;
        }
        for mag in linspace(bx.epsilon, hi, n) {
            let phi2 = if positive { mag } else { -mag };
            for phi1 in linspace(-1.0, 1.0, n) {
                for phi3 in linspace(bx.zeta, phi3_hi, n) {
                    if let Some(pp) = project(bx, [phi1, phi2, phi3], &best.psi1, &best.psi2) {
                        floor = floor.min(obj.distance(&pp));
                    }
                }
            }
        }
    }
    floor
}

/// The starting points used by [`min_distance_fit`], in order.
pub fn search_starts(
    phat: &TripleLaw,
    bx: &ConstraintBox,
    cfg: &SearchConfig,
) -> Result<(Vec<PhiPsiParams>, bool)> {
    let init = moment_init(phat, bx)?;
    let mut flipped = init.params.clone();
    flipped.phi[1] = -flipped.phi[1];
    let mut starts = vec![init.params.clone()];
    if let Some(pp) = project(bx, flipped.phi, &flipped.psi1, &flipped.psi2) {
        starts.push(pp);
    }
    starts.push(witness(bx));
    for i in 0..cfg.random_starts {
        starts.push(sample_phipsi(bx, seed::derive(cfg.seed, i as u64))?);
    }
    Ok((starts, init.fallback))
}

/// Multi-start minimum-distance fit of `phat` over the box.
pub fn min_distance_fit(
    phat: &TripleLaw,
    bx: &ConstraintBox,
    cfg: &SearchConfig,
) -> Result<FitResult> {
    cfg.validate()?;
    bx.validate()?;
    let w = witness(bx);
    let report = validate_phipsi(&w, bx);
    if !report.is_member() {
        let failed: Vec<_> = report.failures().map(|c| c.name).collect();
        return Err(Error::NoMember(format!("witness fails {failed:?}")));
    }
    let (starts, init_fallback) = search_starts(phat, bx, cfg)?;
    let obj = Objective {
        phat,
        bx,
        coords: Coords::new(bx.k),
    };
    let outcomes: Vec<StartOutcome> = starts.par_iter().map(|s| refine(&obj, s, cfg)).collect();
    let evaluations = outcomes.iter().map(|o| o.evals).sum();
    let best = outcomes
        .into_iter()
        .min_by(|a, b| {
            a.objective
                .total_cmp(&b.objective)
                .then_with(|| lex_phi(&a.params, &b.params))
        })
        .expect("at least one start");
    let floor = grid_floor(&obj, &best.params, cfg.grid_points);
    Ok(FitResult {
        estimate: best.params,
        objective: best.objective,
        grid_floor: floor,
        starts: starts.len(),
        converged: best.converged,
        init_fallback,
        evaluations,
    })
}

/// Plug-in estimate of `theta` from 0-based observations.
pub fn estimate_theta(
    observed: &[usize],
    bx: &ConstraintBox,
    cfg: &SearchConfig,
) -> Result<(ThetaParams, FitResult)> {
    let phat = empirical_triple_law(observed, bx.k)?;
    let fit = min_distance_fit(&phat, bx, cfg)?;
    let theta = phipsi_to_theta(&fit.estimate)?;
    Ok((theta, fit))
}

/// Losses between an estimate and the truth. Relative variants are `None`
/// when the truth component is zero; `theta`-level losses are `None` when
/// either side cannot be inverted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    /// `min(|phi1^ - phi1|, |phi1^ + phi1|)`.
    pub phi1: f64,
    pub phi2: f64,
    pub phi3: f64,
    pub psi1: f64,
    /// `min(|psi2^ - psi2|, |psi2^ + psi2|)`.
    pub psi2: f64,
    pub rel_phi2: Option<f64>,
    pub rel_phi3: Option<f64>,
    pub rel_one_minus_phi1_sq: Option<f64>,
    /// `max(|p^ - p|, |q^ - q|)` after aligning labels.
    pub pq: Option<f64>,
    /// `max(|f0^ - f0|, |f1^ - f1|)` after aligning labels.
    pub f: Option<f64>,
}

fn relative(est: f64, truth: f64) -> Option<f64> {
    (truth != 0.0).then(|| (est / truth - 1.0).abs())
}

pub fn losses(est: &PhiPsiParams, truth: &PhiPsiParams) -> LossRecord {
    let neg: Vec<f64> = est.psi2.iter().map(|v| -v).collect();
    let one_minus = |p: &PhiPsiParams| 1.0 - p.phi[0] * p.phi[0];
    let aligned = if alignment(est, truth) < 0.0 {
        est.switched()
    } else {
        est.clone()
    };
    let (pq, f) = match (phipsi_to_theta(&aligned), phipsi_to_theta(truth)) {
        (Ok(a), Ok(b)) => (
            Some((a.p - b.p).abs().max((a.q - b.q).abs())),
            Some(dist(&a.f0, &b.f0).max(dist(&a.f1, &b.f1))),
        ),
        _ => (None, None),
    };
    LossRecord {
        phi1: (est.phi[0] - truth.phi[0])
            .abs()
            .min((est.phi[0] + truth.phi[0]).abs()),
        phi2: (est.phi[1] - truth.phi[1]).abs(),
        phi3: (est.phi[2] - truth.phi[2]).abs(),
        psi1: dist(&est.psi1, &truth.psi1),
        psi2: dist(&est.psi2, &truth.psi2).min(dist(&neg, &truth.psi2)),
        rel_phi2: relative(est.phi[1], truth.phi[1]),
        rel_phi3: relative(est.phi[2], truth.phi[2]),
        rel_one_minus_phi1_sq: relative(one_minus(est), one_minus(truth)),
        pq,
        f,
    }
}

impl LossRecord {
    /// Largest of the absolute and `theta`-level losses.
    pub fn max_abs(&self) -> f64 {
        [self.phi1, self.phi2, self.phi3, self.psi1, self.psi2]
            .into_iter()
            .chain(self.pq)
            .chain(self.f)
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::theta_to_phipsi;
    use crate::triple_law::triple_law_phipsi;
    use approx::assert_abs_diff_eq;

    fn worked_pp() -> PhiPsiParams {
        let theta = ThetaParams::new(0.2, 0.3, vec![0.5, 0.3, 0.2], vec![0.2, 0.3, 0.5]).unwrap();
        theta_to_phipsi(&theta).unwrap().params
    }

    fn worked_box() -> ConstraintBox {
        ConstraintBox::new(0.1, 0.3, 0.3, 0.3, 3).unwrap()
    }

    #[test]
    fn helmert_is_orthonormal() {
        for k in 2..7 {
            let b = helmert(k);
            for i in 0..k - 1 {
                assert_abs_diff_eq!(b[i].iter().sum::<f64>(), 0.0, epsilon = 1e-15);
                for j in 0..k - 1 {
                    let e = if i == j { 1.0 } else { 0.0 };
                    assert_abs_diff_eq!(dot(&b[i], &b[j]), e, epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn simplex_projection() {
        let z = project_simplex(&[0.5, 0.5, -0.2], 0.6);
        assert_abs_diff_eq!(z[0], 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(z[1], 0.3, epsilon = 1e-15);
        assert_eq!(z[2], 0.0);
        assert_eq!(project_simplex(&[0.2, 0.8], 1.0), vec![0.2, 0.8]);
    }

    #[test]
    fn encode_decode_round_trip() {
        let pp = worked_pp();
        let c = Coords::new(3);
        let d = c.decode(&c.encode(&pp));
        assert_eq!(d.phi, pp.phi);
        for i in 0..3 {
            assert_abs_diff_eq!(d.psi1[i], pp.psi1[i], epsilon = 1e-14);
            assert_abs_diff_eq!(d.psi2[i], pp.psi2[i], epsilon = 1e-14);
        }
        assert_abs_diff_eq!(d.psi2_norm, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn projection_lands_in_box() {
        let bx = worked_box();
        let c = Coords::new(3);
        for raw in [
            vec![3.0, -0.01, 5.0, 2.0, -4.0, 1.0, 1.0],
            vec![-0.99, 0.99, 0.0, 0.0, 0.0, 0.3, -2.0],
            vec![0.0, 0.0, 0.3, -9.0, 9.0, 0.0, 1.0],
        ] {
            let d = c.decode(&raw);
            let pp = project(&bx, d.phi, &d.psi1, &d.psi2).unwrap();
            let rep = validate_phipsi(&pp, &bx);
            assert!(
                rep.is_member(),
                "{pp:?} {:?}",
                rep.failures().collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn members_are_fixed_by_projection() {
        let pp = worked_pp();
        let q = project(&worked_box(), pp.phi, &pp.psi1, &pp.psi2).unwrap();
        assert_eq!(pp, q);
    }

    #[test]
    fn moment_init_exact_law() {
        let pp = worked_pp();
        let law = triple_law_phipsi(&pp).unwrap();
        let init = moment_init(&law, &worked_box()).unwrap();
        assert!(!init.fallback);
        let target = canonicalize(&pp);
        for i in 0..3 {
            assert_abs_diff_eq!(init.params.phi[i], target.phi[i], epsilon = 1e-6);
            assert_abs_diff_eq!(init.params.psi1[i], target.psi1[i], epsilon = 1e-6);
            assert_abs_diff_eq!(init.params.psi2[i], target.psi2[i], epsilon = 1e-6);
        }
    }

    #[test]
    fn moment_init_marginal_matches_mass() {
        let pp = worked_pp();
        let mut law = triple_law_phipsi(&pp).unwrap();
        law.as_mut_slice().iter_mut().for_each(|v| *v *= 0.5);
        let init = moment_init(&law, &worked_box()).unwrap();
        let marg = law.first_marginal();
        for i in 0..3 {
            assert_abs_diff_eq!(marg[i], 0.5 * pp.psi1[i], epsilon = 1e-15);
        }
        assert!(!init.fallback);
    }

    #[test]
    fn moment_init_falls_back_without_dependence() {
        let psi1 = vec![0.3, 0.3, 0.4];
        let mut law = TripleLaw::zeros(3);
        law.add_outer(1.0, &psi1, &psi1, &psi1);
        let bx = worked_box();
        let init = moment_init(&law, &bx).unwrap();
        assert!(init.fallback);
        assert!(init.moments.m1.abs() < 1e-12);
        assert!(validate_phipsi(&init.params, &bx).is_member());
    }

    #[test]
    fn moment_init_rejects_empty_law() {
        assert!(moment_init(&TripleLaw::zeros(3), &worked_box()).is_err());
    }

    #[test]
    fn noiseless_recovery_of_worked_example() {
        let pp = worked_pp();
        let law = triple_law_phipsi(&pp).unwrap();
        let bx = worked_box();
        let fit = min_distance_fit(&law, &bx, &SearchConfig::default()).unwrap();
        assert!(fit.objective < 1e-8, "{fit:?}");
        assert!(losses(&fit.estimate, &pp).max_abs() < 1e-3);
        assert!(validate_phipsi(&fit.estimate, &bx).is_member());
        assert_eq!(fit.estimate, canonicalize(&fit.estimate));
        assert!(fit.near_minimal());
    }

    #[test]
    fn label_switched_law_gives_same_estimate() {
        let pp = worked_pp();
        let bx = worked_box();
        let cfg = SearchConfig::default();
        let a = min_distance_fit(&triple_law_phipsi(&pp).unwrap(), &bx, &cfg).unwrap();
        let b = min_distance_fit(&triple_law_phipsi(&pp.switched()).unwrap(), &bx, &cfg).unwrap();
        assert!(losses(&a.estimate, &b.estimate).max_abs() < 1e-6);
        assert!(a.estimate.is_canonical() && b.estimate.is_canonical());
    }

    #[test]
    fn noisy_fit_respects_start_objectives() {
        let theta = phipsi_to_theta(&worked_pp()).unwrap();
        let path = crate::simulator::sample_path(&theta, 2000, 11).unwrap();
        let phat = empirical_triple_law(&path.observed, 3).unwrap();
        let bx = worked_box();
        let cfg = SearchConfig::default();
        let fit = min_distance_fit(&phat, &bx, &cfg).unwrap();
        let (starts, _) = search_starts(&phat, &bx, &cfg).unwrap();
        for s in &starts {
            let at_start = triple_law_unchecked(s).distance(&phat);
            assert!(fit.objective <= at_start + 1e-12);
        }
        assert!(validate_phipsi(&fit.estimate, &bx).is_member());
    }

    #[test]
    fn constant_sequence_hits_boundary() {
        let bx = worked_box();
        let (theta, fit) = estimate_theta(&[1; 50], &bx, &SearchConfig::default()).unwrap();
        assert!(validate_phipsi(&fit.estimate, &bx).is_member());
        assert!(theta.validate().is_ok());
        assert!(fit.objective > 0.0);
    }

    #[test]
    fn estimate_theta_short_input() {
        assert!(matches!(
            estimate_theta(&[0, 1], &worked_box(), &SearchConfig::default()),
            Err(Error::InsufficientData { .. })
        ));
    }

    #[test]
    fn empty_box_is_no_member() {
        // zeta far above the emission limit for every direction
        let bx = ConstraintBox::new(0.1, 0.3, 1.3, 0.3, 3).unwrap();
        let law = triple_law_phipsi(&worked_pp()).unwrap();
        let err = min_distance_fit(&law, &bx, &SearchConfig::default()).unwrap_err();
        assert!(matches!(err, Error::NoMember(_)), "{err}");
    }

    #[test]
    fn losses_of_truth_are_zero() {
        let pp = worked_pp();
        let l = losses(&pp, &pp);
        assert_eq!(l.max_abs(), 0.0);
        assert_eq!(l.rel_phi2, Some(0.0));
        let s = losses(&pp.switched(), &pp);
        assert!(s.max_abs() < 1e-15, "{s:?}");
    }

    #[test]
    fn phi1_sign_flip_only_affects_other_losses() {
        let pp = worked_pp();
        let mut est = pp.clone();
        est.phi[0] = -pp.phi[0];
        let l = losses(&est, &pp);
        assert_eq!(l.phi1, 0.0);
        assert_eq!(l.phi2, 0.0);
        assert!(l.pq.unwrap() > 0.0);
    }

    #[test]
    fn relative_losses_not_applicable_at_zero() {
        let bx = worked_box();
        let mut truth = witness(&bx);
        truth.phi[0] = 1.0;
        let l = losses(&witness(&bx), &truth);
        assert_eq!(l.rel_one_minus_phi1_sq, None);
        assert!(l.rel_phi3.is_some());
    }

    #[test]
    fn config_defaults_from_empty_json() {
        let cfg: SearchConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, SearchConfig::default());
        assert!(serde_json::from_str::<SearchConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
