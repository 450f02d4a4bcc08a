//! Law of three consecutive observations and the moment coordinates that
//! describe it.
//!
//! In `(phi, psi)` coordinates the triple law is
//!
//! ```text
//! p3 = psi1⊗psi1⊗psi1 + m1 (psi2⊗psi2⊗psi1 + psi1⊗psi2⊗psi2)
//!      + m2 psi2⊗psi1⊗psi2 - m3 psi2⊗psi2⊗psi2
//! ```
//!
//! with `m = (r, phi2 r, phi1 phi2 phi3 r)` and `r = (1 - phi1^2) phi2 phi3^2 / 4`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use rand_distr::{Distribution, StandardNormal};

use crate::params::{
    dist, dot, phipsi_to_theta, sample_phipsi, validate_phipsi, ConstraintBox, PhiPsiParams,
    ThetaParams,
};
use crate::seed;

/// Dense `K x K x K` tensor, row-major with the first index slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct TripleLaw {
    k: usize,
    probs: Vec<f64>,
}

impl TripleLaw {
    pub fn zeros(k: usize) -> Self {
        Self {
            k,
            probs: vec![0.0; k * k * k],
        }
    }

    pub fn from_flat(k: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != k * k * k {
            return Err(Error::Validation(format!(
                "flat tensor has {} entries, expected {}",
                probs.len(),
                k * k * k
            )));
        }
        Ok(Self { k, probs })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn index(&self, a: usize, b: usize, c: usize) -> usize {
        (a * self.k + b) * self.k + c
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.probs[self.index(a, b, c)]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.probs
    }

    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Accumulates `weight * x⊗y⊗z`.
    pub fn add_outer(&mut self, weight: f64, x: &[f64], y: &[f64], z: &[f64]) {
        let k = self.k;
        for a in 0..k {
            let wa = weight * x[a];
            for b in 0..k {
                let wab = wa * y[b];
                let row = &mut self.probs[(a * k + b) * k..(a * k + b + 1) * k];
                for (cell, zc) in row.iter_mut().zip(z) {
                    *cell += wab * zc;
                }
            }
        }
    }

    /// Euclidean (Frobenius) distance.
    pub fn distance(&self, other: &TripleLaw) -> f64 {
        dist(&self.probs, &other.probs)
    }

    pub fn max_abs_diff(&self, other: &TripleLaw) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `<self, x⊗y⊗z>`.
    pub fn contract(&self, x: &[f64], y: &[f64], z: &[f64]) -> f64 {
        let k = self.k;
        let mut total = 0.0;
        for a in 0..k {
            for b in 0..k {
                let row = &self.probs[(a * k + b) * k..(a * k + b + 1) * k];
                total += x[a] * y[b] * dot(row, z);
            }
        }
        total
    }

    /// Marginal over the coordinate `axis` (0, 1 or 2) that is summed out,
    /// returned as a row-major `K x K` matrix over the two remaining axes.
    pub fn pair_marginal(&self, axis: usize) -> Vec<f64> {
        let k = self.k;
        let mut out = vec![0.0; k * k];
        for a in 0..k {
            for b in 0..k {
                for c in 0..k {
                    let v = self.get(a, b, c);
                    let (i, j) = match axis {
                        0 => (b, c),
                        1 => (a, c),
                        _ => (a, b),
                    };
                    out[i * k + j] += v;
                }
            }
        }
        out
    }

    /// Law of the first coordinate.
    pub fn first_marginal(&self) -> Vec<f64> {
        let k = self.k;
        (0..k)
            .map(|a| self.probs[a * k * k..(a + 1) * k * k].iter().sum())
            .collect()
    }

    /// CSV rows `a,b,c,prob` with 1-based symbols.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("a,b,c,prob\n");
        for a in 0..self.k {
            for b in 0..self.k {
                for c in 0..self.k {
                    out.push_str(&format!(
                        "{},{},{},{}\n",
                        a + 1,
                        b + 1,
                        c + 1,
                        self.get(a, b, c)
                    ));
                }
            }
        }
        out
    }

    /// Flat JSON array in row-major order.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.probs).expect("f64 slice serializes")
    }

    pub fn from_json(k: usize, s: &str) -> Result<Self> {
        Self::from_flat(k, serde_json::from_str(s)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentVector {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
}

pub fn r_of_phi(phi: &[f64; 3]) -> f64 {
    0.25 * (1.0 - phi[0] * phi[0]) * phi[1] * phi[2] * phi[2]
}

pub fn m_of_phi(phi: &[f64; 3]) -> MomentVector {
    let r = r_of_phi(phi);
    MomentVector {
        m1: r,
        m2: phi[1] * r,
        m3: phi[0] * phi[1] * phi[2] * r,
    }
}

/// Inverse of [`m_of_phi`] on `{r(phi) != 0}`.
pub fn phi_of_m(m: &MomentVector) -> Result<[f64; 3]> {
    if m.m1 == 0.0 || !m.m1.is_finite() {
        return Err(Error::NonInvertible(format!("m1 = {}", m.m1)));
    }
    if !(m.m2 > 0.0) {
        return Err(Error::NonInvertible(format!(
            "m2 = {} is not positive",
            m.m2
        )));
    }
    let g = 4.0 * m.m1 * m.m1 * m.m2 + m.m3 * m.m3;
    if !(g > 0.0) {
        return Err(Error::NonInvertible(format!("4 m1^2 m2 + m3^2 = {g}")));
    }
    let s = g.sqrt();
    Ok([m.m3 / s, m.m2 / m.m1, s / m.m2])
}

pub fn triple_law_theta(theta: &ThetaParams) -> Result<TripleLaw> {
    theta.validate()?;
    let [w0, w1] = theta.stationary()?;
    let (p, q) = (theta.p, theta.q);
    let g: Vec<f64> = theta
        .f0
        .iter()
        .zip(&theta.f1)
        .map(|(a, b)| (1.0 - p) * a + p * b)
        .collect();
    let h: Vec<f64> = theta
        .f0
        .iter()
        .zip(&theta.f1)
        .map(|(a, b)| q * a + (1.0 - q) * b)
        .collect();
    let mut law = TripleLaw::zeros(theta.k());
    law.add_outer(w0, &g, &theta.f0, &g);
    law.add_outer(w1, &h, &theta.f1, &h);
    Ok(law)
}

/// Triple law from `(phi, psi)` directly; no validation, so it can be used
/// inside optimizers on arbitrary points.
pub(crate) fn triple_law_unchecked(pp: &PhiPsiParams) -> TripleLaw {
    let m = m_of_phi(&pp.phi);
    let (s1, s2) = (&pp.psi1, &pp.psi2);
    let mut law = TripleLaw::zeros(pp.k());
    law.add_outer(1.0, s1, s1, s1);
    law.add_outer(m.m1, s2, s2, s1);
    law.add_outer(m.m1, s1, s2, s2);
    law.add_outer(m.m2, s2, s1, s2);
    law.add_outer(-m.m3, s2, s2, s2);
    law
}

pub fn triple_law_phipsi(pp: &PhiPsiParams) -> Result<TripleLaw> {
    pp.validate()?;
    Ok(triple_law_unchecked(pp))
}

fn sgn(x: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Alignment sign `sgn(<psi2, psi2~>)` with `sgn(0) = +1`.
pub fn alignment(a: &PhiPsiParams, b: &PhiPsiParams) -> f64 {
    sgn(dot(&a.psi2, &b.psi2))
}

/// The `rho` pseudo-distance between two parameters.
pub fn rho(a: &PhiPsiParams, b: &PhiPsiParams) -> f64 {
    let ma = m_of_phi(&a.phi);
    let mb = m_of_phi(&b.phi);
    let s = alignment(a, b);
    let psi2_gap = a
        .psi2
        .iter()
        .zip(&b.psi2)
        .map(|(x, y)| (x - s * y) * (x - s * y))
        .sum::<f64>()
        .sqrt();
    [
        (ma.m1 - mb.m1).abs(),
        (ma.m2 - mb.m2).abs(),
        (ma.m3 - s * mb.m3).abs(),
        dist(&a.psi1, &b.psi1),
        ma.m1.abs().max(mb.m1.abs()) * psi2_gap,
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// Extreme sampled pairs refined on each side, and local-search steps per pair.
pub const REFINE_STARTS: usize = 8;
pub const REFINE_STEPS: usize = 1000;

/// Empirical equivalence constants between `rho` and the triple-law distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioSummary {
    /// Smallest ratio `|p3 - p3~| / rho` after refinement; an empirical `c1`.
    pub min: f64,
    /// Largest ratio after refinement; an empirical `c2`.
    pub max: f64,
    /// Extremes over the sampled pairs alone.
    pub sampled_min: f64,
    pub sampled_max: f64,
    pub pairs_used: usize,
    pub pairs_skipped: usize,
}

/// Ratio `|p3(a) - p3(b)| / rho(a, b)` over `pairs` random pairs drawn from
/// the box, followed by a seeded local search from the most extreme pairs
/// on either side. Pair `i` depends only on `(seed, i)`, so a larger probe
/// extends a smaller one.
pub fn equivalence_ratio_probe(
    bx: &ConstraintBox,
    pairs: usize,
    seed: u64,
) -> Result<RatioSummary> {
    if pairs == 0 {
        return Err(Error::Validation("pair count must be at least 1".into()));
    }
    let pair = |i: u64| -> Result<(PhiPsiParams, PhiPsiParams)> {
        Ok((
            sample_phipsi(bx, seed::derive(seed, 2 * i))?,
            sample_phipsi(bx, seed::derive(seed, 2 * i + 1))?,
        ))
    };
    let mut ratios: Vec<(f64, u64)> = Vec::with_capacity(pairs);
    for i in 0..pairs as u64 {
        let (a, b) = pair(i)?;
        if let Some(r) = pair_ratio(&a, &b) {
            ratios.push((r, i));
        }
    }
    let plain: Vec<f64> = ratios.iter().map(|r| r.0).collect();
    let mut summary = summarize_ratios(&plain, pairs)?;
    ratios.sort_by(|x, y| x.0.total_cmp(&y.0));
    let m = REFINE_STARTS.min(ratios.len());
    for (j, &(r, i)) in ratios[..m].iter().enumerate() {
        let (a, b) = pair(i)?;
        let s = seed::derive(seed::derive(seed, u64::MAX), j as u64);
        summary.min = summary.min.min(refine_ratio(bx, a, b, r, false, s));
    }
    for (j, &(r, i)) in ratios[ratios.len() - m..].iter().enumerate() {
        let (a, b) = pair(i)?;
        let s = seed::derive(seed::derive(seed, u64::MAX - 1), j as u64);
        summary.max = summary.max.max(refine_ratio(bx, a, b, r, true, s));
    }
    Ok(summary)
}

fn jitter(pp: &PhiPsiParams, sigma: f64, rng: &mut seed::Rng) -> PhiPsiParams {
    let mut noise = |n: usize| -> Vec<f64> {
        let g: Vec<f64> = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                sigma * z
            })
            .collect();
        let mean = g.iter().sum::<f64>() / n as f64;
        g.into_iter().map(|x| x - mean).collect()
    };
    let mut phi = pp.phi;
    for (p, d) in phi.iter_mut().zip(noise(3)) {
        *p += d;
    }
    let psi1: Vec<f64> = pp
        .psi1
        .iter()
        .zip(noise(pp.k()))
        .map(|(a, b)| a + b)
        .collect();
    let mut psi2: Vec<f64> = pp
        .psi2
        .iter()
        .zip(noise(pp.k()))
        .map(|(a, b)| a + b)
        .collect();
    let n = dot(&psi2, &psi2).sqrt();
    psi2.iter_mut().for_each(|v| *v /= n);
    PhiPsiParams { phi, psi1, psi2 }
}

/// Random-perturbation ascent (or descent) of the ratio inside the box.
fn refine_ratio(
    bx: &ConstraintBox,
    mut a: PhiPsiParams,
    mut b: PhiPsiParams,
    mut best: f64,
    maximize: bool,
    seed: u64,
) -> f64 {
    let mut rng = seed::rng(seed);
    let inside = |pp: &PhiPsiParams| validate_phipsi(pp, bx).is_member();
    for t in 0..REFINE_STEPS {
        let sigma = 0.05 * 0.995f64.powi(t as i32);
        let a2 = jitter(&a, sigma, &mut rng);
        let b2 = jitter(&b, sigma, &mut rng);
        if !inside(&a2) || !inside(&b2) {
            continue;
        }
        if let Some(r) = pair_ratio(&a2, &b2) {
            if (maximize && r > best) || (!maximize && r < best) {
                best = r;
                a = a2;
                b = b2;
            }
        }
    }
    best
}

/// `|p3(a) - p3(b)| / rho(a, b)`, or `None` when `rho = 0`.
pub fn pair_ratio(a: &PhiPsiParams, b: &PhiPsiParams) -> Option<f64> {
    let r = rho(a, b);
    if r > 0.0 {
        Some(triple_law_unchecked(a).distance(&triple_law_unchecked(b)) / r)
    } else {
        None
    }
}

fn summarize_ratios(ratios: &[f64], pairs: usize) -> Result<RatioSummary> {
    if ratios.is_empty() {
        return Err(Error::DegenerateProbe(
            "every sampled pair had rho = 0".into(),
        ));
    }
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().copied().fold(0.0, f64::max);
    Ok(RatioSummary {
        min,
        max,
        sampled_min: min,
        sampled_max: max,
        pairs_used: ratios.len(),
        pairs_skipped: pairs - ratios.len(),
    })
}

/// Structural factors of the pointwise moduli of continuity, with the
/// unspecified constants set to one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModulusBounds {
    /// Whether `eta` is below each bound's admissibility threshold.
    pub applicable: [bool; 3],
    /// Rate factors for `phi1` (sign-adjusted), `phi2` and `phi3`.
    pub factors: [f64; 3],
}

pub fn modulus_bounds(phi: &[f64; 3], eta: f64) -> Result<ModulusBounds> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::Validation(format!("eta = {eta} outside [0,1]")));
    }
    let [phi1, phi2, phi3] = *phi;
    let a = 1.0 - phi1 * phi1;
    let t13 = a * phi2 * phi2 * phi3.powi(3);
    let t2 = a * phi2.abs() * phi3 * phi3;
    let ratio = |d: f64| if eta == 0.0 { 0.0 } else { eta / d };
    Ok(ModulusBounds {
        applicable: [eta < t13, eta < t2, eta < t13],
        factors: [
            ratio(phi2 * phi2 * phi3.powi(3)),
            ratio(t2),
            ratio(a * phi2 * phi2 * phi3 * phi3),
        ],
    })
}

/// Convenience: triple law of `(phi, psi)` through the native parameters.
pub fn triple_law_via_theta(pp: &PhiPsiParams) -> Result<TripleLaw> {
    triple_law_theta(&phipsi_to_theta(pp)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::theta_to_phipsi;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn worked_theta() -> ThetaParams {
        ThetaParams::new(0.2, 0.3, vec![0.5, 0.3, 0.2], vec![0.2, 0.3, 0.5]).unwrap()
    }

    fn worked_pp() -> PhiPsiParams {
        theta_to_phipsi(&worked_theta()).unwrap().params
    }

    #[test]
    fn r_examples() {
        assert_abs_diff_eq!(r_of_phi(&[0.0, 0.5, 0.2]), 0.005, epsilon = 1e-15);
        assert_eq!(r_of_phi(&[1.0, 0.3, 0.7]), 0.0);
        assert_eq!(r_of_phi(&[-1.0, 0.3, 0.7]), 0.0);
        assert_abs_diff_eq!(
            r_of_phi(&[0.2, 0.5, 0.4242640687119285]),
            0.0216,
            epsilon = 1e-12
        );
    }

    #[test]
    fn m_examples() {
        let m = m_of_phi(&worked_pp().phi);
        assert_abs_diff_eq!(m.m1, 0.0216, epsilon = 1e-12);
        assert_abs_diff_eq!(m.m2, 0.0108, epsilon = 1e-12);
        assert_abs_diff_eq!(m.m3, 9.16410e-4, epsilon = 1e-8);
        let z = m_of_phi(&[0.3, 0.0, 0.5]);
        assert_eq!((z.m1, z.m2, z.m3), (0.0, 0.0, 0.0));
        assert_eq!(m_of_phi(&[0.0, 0.4, 0.5]).m3, 0.0);
    }

    #[test]
    fn phi_of_m_examples() {
        let m = MomentVector {
            m1: 0.0216,
            m2: 0.0108,
            m3: 0.1 * 0.4242640687119285 * 0.0216,
        };
        let phi = phi_of_m(&m).unwrap();
        assert_abs_diff_eq!(phi[0], 0.2, epsilon = 1e-8);
        assert_abs_diff_eq!(phi[1], 0.5, epsilon = 1e-8);
        assert_abs_diff_eq!(phi[2], 0.4242640687, epsilon = 1e-8);
        assert!(matches!(
            phi_of_m(&MomentVector {
                m1: 0.0,
                m2: 0.1,
                m3: 0.0
            }),
            Err(Error::NonInvertible(_))
        ));
    }

    #[test]
    fn phi_of_m_handles_negative_phi2() {
        let phi = [-0.3, -0.4, 0.6];
        let back = phi_of_m(&m_of_phi(&phi)).unwrap();
        for (a, b) in back.iter().zip(phi) {
            assert_relative_eq!(*a, b, max_relative = 1e-12);
        }
    }

    #[test]
    fn worked_triple_law_entry() {
        let law = triple_law_theta(&worked_theta()).unwrap();
        let want = 0.6 * 0.44 * 0.5 * 0.44 + 0.4 * 0.29 * 0.2 * 0.29;
        assert_abs_diff_eq!(law.get(0, 0, 0), want, epsilon = 1e-15);
        assert_abs_diff_eq!(want, 0.064808, epsilon = 1e-12);
        assert_abs_diff_eq!(law.total_mass(), 1.0, epsilon = 1e-14);
        let dual = triple_law_phipsi(&worked_pp()).unwrap();
        assert_abs_diff_eq!(dual.get(0, 0, 0), 0.064808, epsilon = 1e-13);
        assert!(law.max_abs_diff(&dual) <= 1e-15);
    }

    #[test]
    fn equal_emissions_give_product_law() {
        let f = vec![0.1, 0.6, 0.3];
        let theta = ThetaParams::new(0.37, 0.11, f.clone(), f.clone()).unwrap();
        let law = triple_law_theta(&theta).unwrap();
        let mut prod = TripleLaw::zeros(3);
        prod.add_outer(1.0, &f, &f, &f);
        assert!(law.max_abs_diff(&prod) < 1e-15);
    }

    #[test]
    fn independent_chain_gives_product_of_psi1() {
        let theta = ThetaParams::new(0.5, 0.5, vec![0.5, 0.3, 0.2], vec![0.2, 0.3, 0.5]).unwrap();
        let pp = theta_to_phipsi(&theta).unwrap().params;
        assert_eq!(pp.phi[1], 0.0);
        let law = triple_law_theta(&theta).unwrap();
        let mut prod = TripleLaw::zeros(3);
        prod.add_outer(1.0, &pp.psi1, &pp.psi1, &pp.psi1);
        assert!(law.max_abs_diff(&prod) < 1e-15);
        let mut zero_sep = pp.clone();
        zero_sep.phi[2] = 0.0;
        assert!(triple_law_phipsi(&zero_sep).unwrap().max_abs_diff(&prod) < 1e-15);
    }

    #[test]
    fn label_switch_leaves_law_unchanged() {
        let pp = worked_pp();
        let a = triple_law_phipsi(&pp).unwrap();
        let b = triple_law_phipsi(&pp.switched()).unwrap();
        assert!(a.max_abs_diff(&b) <= 1e-14);
    }

    #[test]
    fn rho_examples() {
        let a = worked_pp();
        assert_eq!(rho(&a, &a), 0.0);
        assert_eq!(rho(&a, &a.switched()), 0.0);
        let mut b = a.clone();
        b.psi1 = vec![0.39, 0.30, 0.31];
        assert_abs_diff_eq!(rho(&a, &b), 0.01414213562373095, epsilon = 1e-12);
    }

    #[test]
    fn rho_sign_convention_on_orthogonal_psi2() {
        let s = 0.5f64.sqrt();
        let a = PhiPsiParams {
            phi: [0.1, 0.4, 0.3],
            psi1: vec![0.25; 4],
            psi2: vec![s, -s, 0.0, 0.0],
        };
        let mut b = a.clone();
        b.psi2 = vec![0.0, 0.0, s, -s];
        assert_eq!(alignment(&a, &b), 1.0);
        let m1 = m_of_phi(&a.phi).m1;
        assert_abs_diff_eq!(rho(&a, &b), m1 * 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn modulus_examples() {
        let phi = [0.2, 0.5, 0.4242640687119285];
        let z = modulus_bounds(&phi, 0.0).unwrap();
        assert_eq!(z.factors, [0.0; 3]);
        let b = modulus_bounds(&phi, 1e-4).unwrap();
        assert_relative_eq!(b.factors[1], 1.1574074074074073e-3, max_relative = 1e-9);
        assert!(b.applicable.iter().all(|x| *x));
        let flat = modulus_bounds(&[0.2, 0.5, 0.0], 0.3).unwrap();
        assert_eq!(flat.applicable, [false; 3]);
        assert!(modulus_bounds(&phi, 1.5).is_err());
    }

    #[test]
    fn marginals_of_exact_law() {
        let pp = worked_pp();
        let law = triple_law_phipsi(&pp).unwrap();
        for (a, b) in law.first_marginal().iter().zip(&pp.psi1) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-15);
        }
        let m1 = m_of_phi(&pp.phi).m1;
        let m12 = law.pair_marginal(2);
        for i in 0..3 {
            for j in 0..3 {
                let want = pp.psi1[i] * pp.psi1[j] + m1 * pp.psi2[i] * pp.psi2[j];
                assert_abs_diff_eq!(m12[i * 3 + j], want, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn serialization_formats() {
        let law = triple_law_theta(&worked_theta()).unwrap();
        let csv = law.to_csv();
        assert_eq!(csv.lines().count(), 28);
        assert!(csv.lines().nth(1).unwrap().starts_with("1,1,1,"));
        let back = TripleLaw::from_json(3, &law.to_json()).unwrap();
        assert_eq!(back, law);
        assert!(TripleLaw::from_json(2, &law.to_json()).is_err());
    }

    #[test]
    fn probe_rejects_zero_pairs() {
        let bx = ConstraintBox::new(0.05, 0.1, 0.1, 0.3, 3).unwrap();
        assert!(equivalence_ratio_probe(&bx, 0, 1).is_err());
        let s = equivalence_ratio_probe(&bx, 50, 1).unwrap();
        assert!(s.min > 0.0 && s.max.is_finite() && s.min <= s.max);
        assert!(s.min <= s.sampled_min && s.max >= s.sampled_max);
        let a = sample_phipsi(&bx, 3).unwrap();
        assert!(pair_ratio(&a, &a.switched()).is_none());
        assert!(summarize_ratios(&[], 1).is_err());
    }
}
