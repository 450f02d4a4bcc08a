//! Parametrizations of the two-state HMM and the constraint boxes they live in.
//!
//! The native parameters are `theta = (p, q, f0, f1)`: `p = P(X' = 1 | X = 0)`,
//! `q = P(X' = 0 | X = 1)` and one emission density per hidden state. The
//! reparametrization separates the scalar part
//! `phi = ((q - p)/(p + q), 1 - p - q, |f0 - f1|)` from the vector part
//! `psi = ((q f0 + p f1)/(p + q), (f0 - f1)/|f0 - f1|)`, so that each i.i.d.
//! limit corresponds to a single coordinate of `phi` going to zero.

use rand::Rng as _;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Tolerance for "sums to one" and "unit norm" checks.
pub const DENSITY_TOL: f64 = 1e-12;
/// Coordinates of `psi2` with magnitude below this count as zero when
/// choosing the canonical label.
pub const CANONICAL_ZERO: f64 = 1e-12;
/// Rejections before [`sample_phipsi`] falls back to the deterministic witness.
pub const MAX_REJECTIONS: usize = 10_000;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn check_density(name: &str, f: &[f64]) -> Result<()> {
    if f.len() < 2 {
        return Err(Error::Validation(format!(
            "{name} must have at least 2 entries, got {}",
            f.len()
        )));
    }
    if let Some((i, x)) = f
        .iter()
        .enumerate()
        .find(|(_, x)| !x.is_finite() || **x < 0.0)
    {
        return Err(Error::Validation(format!(
            "{name}[{i}] = {x} is not a nonnegative number"
        )));
    }
    let s: f64 = f.iter().sum();
    if (s - 1.0).abs() > DENSITY_TOL {
        return Err(Error::Validation(format!("{name} sums to {s}, not 1")));
    }
    Ok(())
}

/// Native HMM parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaParams {
    pub p: f64,
    pub q: f64,
    pub f0: Vec<f64>,
    pub f1: Vec<f64>,
}

impl ThetaParams {
    pub fn new(p: f64, q: f64, f0: Vec<f64>, f1: Vec<f64>) -> Result<Self> {
        let theta = Self { p, q, f0, f1 };
        theta.validate()?;
        Ok(theta)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("p", self.p), ("q", self.q)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Validation(format!("{name} = {v} is outside (0, 1]")));
            }
        }
        check_density("f0", &self.f0)?;
        check_density("f1", &self.f1)?;
        if self.f0.len() != self.f1.len() {
            return Err(Error::Validation(format!(
                "f0 has {} entries but f1 has {}",
                self.f0.len(),
                self.f1.len()
            )));
        }
        Ok(())
    }

    /// Alphabet size.
    pub fn k(&self) -> usize {
        self.f0.len()
    }

    pub fn stationary(&self) -> Result<[f64; 2]> {
        stationary_dist(self.p, self.q)
    }

    /// Transition matrix `Q[x][x']`.
    pub fn transition(&self) -> [[f64; 2]; 2] {
        [[1.0 - self.p, self.p], [self.q, 1.0 - self.q]]
    }

    pub fn emission(&self, state: usize) -> &[f64] {
        if state == 0 {
            &self.f0
        } else {
            &self.f1
        }
    }

    pub fn min_emission(&self) -> f64 {
        self.f0
            .iter()
            .chain(&self.f1)
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Reparametrized HMM parameters `(phi, psi1, psi2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhiPsiParams {
    pub phi: [f64; 3],
    pub psi1: Vec<f64>,
    pub psi2: Vec<f64>,
}

impl PhiPsiParams {
    pub fn new(phi: [f64; 3], psi1: Vec<f64>, psi2: Vec<f64>) -> Result<Self> {
        let pp = Self { phi, psi1, psi2 };
        pp.validate()?;
        Ok(pp)
    }

    pub fn k(&self) -> usize {
        self.psi1.len()
    }

    /// Type invariants: ranges of `phi`, `psi1` a density, `psi2` a unit
    /// vector orthogonal to the constants, and nonnegative induced emissions.
    pub fn validate(&self) -> Result<()> {
        let [phi1, phi2, phi3] = self.phi;
        if !(phi1.abs() <= 1.0) || !(phi2.abs() <= 1.0) || !(phi3 >= 0.0) || !phi3.is_finite() {
            return Err(Error::Validation(format!(
                "phi = {:?} outside [-1,1] x [-1,1] x [0,inf)",
                self.phi
            )));
        }
        check_density("psi1", &self.psi1)?;
        if self.psi2.len() != self.psi1.len() {
            return Err(Error::Validation(format!(
                "psi1 has {} entries but psi2 has {}",
                self.psi1.len(),
                self.psi2.len()
            )));
        }
        if self.psi2.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation("psi2 has a non-finite entry".into()));
        }
        let n2 = norm(&self.psi2);
        if (n2 - 1.0).abs() > DENSITY_TOL {
            return Err(Error::Validation(format!("|psi2| = {n2}, not 1")));
        }
        let s2: f64 = self.psi2.iter().sum();
        if s2.abs() > DENSITY_TOL {
            return Err(Error::Validation(format!("psi2 sums to {s2}, not 0")));
        }
        if let Some((index, value)) = self
            .emission_slack()
            .into_iter()
            .enumerate()
            .find(|(_, s)| *s < -DENSITY_TOL)
        {
            return Err(Error::ConstraintViolation {
                what: "emission nonnegativity",
                index,
                value,
            });
        }
        Ok(())
    }

    /// `psi1(k) - phi1 phi3 psi2(k)/2 - phi3 |psi2(k)|/2`, the smaller of the
    /// two induced emission probabilities at each symbol.
    pub fn emission_slack(&self) -> Vec<f64> {
        let [phi1, _, phi3] = self.phi;
        self.psi1
            .iter()
            .zip(&self.psi2)
            .map(|(a, b)| a - 0.5 * phi1 * phi3 * b - 0.5 * phi3 * b.abs())
            .collect()
    }

    /// The label-switched parameter `(-phi1, phi2, phi3, psi1, -psi2)`.
    pub fn switched(&self) -> Self {
        Self {
            phi: [-self.phi[0], self.phi[1], self.phi[2]],
            psi1: self.psi1.clone(),
            psi2: self.psi2.iter().map(|x| -x).collect(),
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.psi2
            .iter()
            .find(|x| x.abs() > CANONICAL_ZERO)
            .is_none_or(|x| *x > 0.0)
    }
}

/// `(phi, psi)` together with a flag marking the i.i.d. case `f0 = f1`, where
/// `psi2` carries no information and is set to [`witness_psi2`].
#[derive(Debug, Clone, PartialEq)]
pub struct Reparametrized {
    pub params: PhiPsiParams,
    pub degenerate: bool,
}

/// Box `Theta_L(delta, epsilon, zeta)` of native parameters, or equivalently
/// `Phi_L` in reparametrized coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintBox {
    /// Lower bound on `p` and `q`.
    pub delta: f64,
    /// Lower bound on `|1 - p - q|`.
    pub epsilon: f64,
    /// Lower bound on `|f0 - f1|`.
    pub zeta: f64,
    /// Lower bound on the absolute spectral gap `1 - |1 - p - q|`.
    #[serde(rename = "L", alias = "l")]
    pub l: f64,
    /// Alphabet size.
    #[serde(rename = "K", alias = "k")]
    pub k: usize,
}

impl ConstraintBox {
    pub fn new(delta: f64, epsilon: f64, zeta: f64, l: f64, k: usize) -> Result<Self> {
        let b = Self {
            delta,
            epsilon,
            zeta,
            l,
            k,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Validation(format!(
                "delta = {} outside (0,1)",
                self.delta
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::Validation(format!(
                "epsilon = {} outside (0,1)",
                self.epsilon
            )));
        }
        if !(self.zeta > 0.0 && self.zeta.is_finite()) {
            return Err(Error::Validation(format!(
                "zeta = {} is not positive",
                self.zeta
            )));
        }
        if !(self.l > 0.0 && self.l <= 1.0) {
            return Err(Error::Validation(format!("L = {} outside (0,1]", self.l)));
        }
        if self.k < 2 {
            return Err(Error::Validation(format!(
                "K = {} must be at least 2",
                self.k
            )));
        }
        Ok(())
    }

    /// Largest `zeta` allowed by the compatibility condition.
    pub fn compatibility_bound(&self) -> f64 {
        compatibility_bound(self.k)
    }

    /// `zeta <= sqrt(2 floor(K/2)) / (4K)`. Only lower-bound constructions
    /// require it; elsewhere it is reported as a warning.
    pub fn is_compatible(&self) -> bool {
        self.zeta <= self.compatibility_bound()
    }

    /// Largest admissible `|phi2|` for the given sign of `phi2`.
    pub(crate) fn phi2_upper(&self, positive: bool) -> f64 {
        let gap = 1.0 - self.l;
        if positive {
            gap.min(1.0 - 2.0 * self.delta)
        } else {
            gap.min(1.0)
        }
    }

    /// Largest admissible `|phi1|` given `phi2`.
    pub(crate) fn phi1_limit(&self, phi2: f64) -> f64 {
        let a = 1.0 - phi2;
        (1.0 - 2.0 * self.delta / a).min(2.0 / a - 1.0).max(0.0)
    }

    /// The `r(phi)` lower bound `delta epsilon zeta^2 / 4` implied by membership.
    pub fn r_lower_bound(&self) -> f64 {
        self.delta * self.epsilon * self.zeta * self.zeta / 4.0
    }
}

pub fn compatibility_bound(k: usize) -> f64 {
    ((2 * (k / 2)) as f64).sqrt() / (4.0 * k as f64)
}

/// Stationary law `(q/(p+q), p/(p+q))` of the hidden chain.
pub fn stationary_dist(p: f64, q: f64) -> Result<[f64; 2]> {
    let s = p + q;
    if !(s > 0.0) {
        return Err(Error::DegenerateChain);
    }
    Ok([q / s, p / s])
}

pub fn theta_to_phipsi(theta: &ThetaParams) -> Result<Reparametrized> {
    theta.validate()?;
    let ThetaParams { p, q, f0, f1 } = theta;
    let s = p + q;
    let diff: Vec<f64> = f0.iter().zip(f1).map(|(a, b)| a - b).collect();
    let phi3 = norm(&diff);
    let psi1 = f0
        .iter()
        .zip(f1)
        .map(|(a, b)| (q * a + p * b) / s)
        .collect();
    let degenerate = phi3 == 0.0;
    let psi2 = if degenerate {
        witness_psi2(theta.k())
    } else {
        diff.iter().map(|d| d / phi3).collect()
    };
    Ok(Reparametrized {
        params: PhiPsiParams {
            phi: [(q - p) / s, 1.0 - s, phi3],
            psi1,
            psi2,
        },
        degenerate,
    })
}

pub fn phipsi_to_theta(pp: &PhiPsiParams) -> Result<ThetaParams> {
    let [phi1, phi2, phi3] = pp.phi;
    let p = 0.5 * (1.0 - phi2) * (1.0 - phi1);
    let q = 0.5 * (1.0 - phi2) * (1.0 + phi1);
    let shift = 0.5 * phi1 * phi3;
    let half = 0.5 * phi3;
    let f0: Vec<f64> = pp
        .psi1
        .iter()
        .zip(&pp.psi2)
        .map(|(a, b)| a - shift * b + half * b)
        .collect();
    let f1: Vec<f64> = pp
        .psi1
        .iter()
        .zip(&pp.psi2)
        .map(|(a, b)| a - shift * b - half * b)
        .collect();
    for (what, f) in [("f0 nonnegativity", &f0), ("f1 nonnegativity", &f1)] {
        if let Some((index, &value)) = f.iter().enumerate().find(|(_, x)| **x < -DENSITY_TOL) {
            return Err(Error::ConstraintViolation { what, index, value });
        }
    }
    // entries in [-1e-12, 0) are rounding noise
    let clip = |f: Vec<f64>| f.into_iter().map(|x| x.max(0.0)).collect::<Vec<_>>();
    let theta = ThetaParams {
        p,
        q,
        f0: clip(f0),
        f1: clip(f1),
    };
    theta.validate()?;
    Ok(theta)
}

/// One inequality of the membership test. `slack >= 0` means satisfied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipReport {
    pub checks: Vec<Check>,
    /// Compatibility of the box itself; informational only.
    pub box_compatible: bool,
}

impl MembershipReport {
    pub fn is_member(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Membership of `pp` in `Phi_L(delta, epsilon, zeta)`.
pub fn validate_phipsi(pp: &PhiPsiParams, bx: &ConstraintBox) -> MembershipReport {
    let [phi1, phi2, phi3] = pp.phi;
    let check = |name, slack: f64| Check {
        name,
        pass: slack >= -DENSITY_TOL,
        slack,
    };
    let structure = match pp.validate() {
        Ok(()) if pp.k() == bx.k => 0.0,
        Ok(()) => -1.0,
        // emission violations are reported by their own check
        Err(Error::ConstraintViolation { .. }) => 0.0,
        Err(_) => -1.0,
    };
    let emission = pp
        .emission_slack()
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let r = crate::triple_law::r_of_phi(&pp.phi);
    let checks = vec![
        check("structure", structure),
        check(
            "p_q_lower",
            0.5 * (1.0 - phi2) * (1.0 - phi1.abs()) - bx.delta,
        ),
        check("p_q_upper", 1.0 - 0.5 * (1.0 - phi2) * (1.0 + phi1.abs())),
        check("mixing_lower", phi2.abs() - bx.epsilon),
        check("separation_lower", phi3 - bx.zeta),
        check("emission_nonnegative", emission),
        check("spectral_gap", 1.0 - bx.l - phi2.abs()),
        check("r_lower", r.abs() - bx.r_lower_bound()),
    ];
    MembershipReport {
        checks,
        box_compatible: bx.is_compatible(),
    }
}

/// Resolves label switching: the first coordinate of `psi2` exceeding
/// [`CANONICAL_ZERO`] in magnitude is made positive.
pub fn canonicalize(pp: &PhiPsiParams) -> PhiPsiParams {
    if pp.is_canonical() {
        pp.clone()
    } else {
        pp.switched()
    }
}

/// `(2 floor(K/2))^{-1/2} (1{k odd, k < K} - 1{k even})` for 1-based `k`.
pub fn witness_psi2(k: usize) -> Vec<f64> {
    let scale = ((2 * (k / 2)) as f64).powf(-0.5);
    (1..=k)
        .map(|j| {
            if j % 2 == 0 {
                -scale
            } else if j < k {
                scale
            } else {
                0.0
            }
        })
        .collect()
}

pub fn uniform_density(k: usize) -> Vec<f64> {
    vec![1.0 / k as f64; k]
}

/// Deterministic member `phi = (0, epsilon, zeta)`, uniform `psi1` and the
/// alternating `psi2`.
pub fn witness(bx: &ConstraintBox) -> PhiPsiParams {
    PhiPsiParams {
        phi: [0.0, bx.epsilon, bx.zeta],
        psi1: uniform_density(bx.k),
        psi2: witness_psi2(bx.k),
    }
}

fn sample_simplex(rng: &mut seed::Rng, k: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

fn sample_direction(rng: &mut seed::Rng, k: usize) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..k).map(|_| StandardNormal.sample(rng)).collect();
        let mean = g.iter().sum::<f64>() / k as f64;
        let c: Vec<f64> = g.into_iter().map(|x| x - mean).collect();
        let n = norm(&c);
        if n > 1e-8 {
            return c.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Seeded random member of `Phi_L` by rejection, falling back to [`witness`].
///
/// Proposals draw `phi1`, `|phi2|` (with a random sign) and `phi3` uniformly on
/// the ranges implied by the box, `psi1` uniformly on the simplex and `psi2`
/// uniformly on the unit sphere of the sum-zero hyperplane.
pub fn sample_phipsi(bx: &ConstraintBox, seed: u64) -> Result<PhiPsiParams> {
    bx.validate()?;
    let fallback = witness(bx);
    let report = validate_phipsi(&fallback, bx);
    if !report.is_member() {
        let failed: Vec<_> = report.failures().map(|c| c.name).collect();
        return Err(Error::NoMember(format!(
            "witness (0, epsilon, zeta) fails {failed:?}"
        )));
    }
    let mut rng = seed::rng(seed);
    let phi1_max = (1.0 - bx.delta) / (1.0 + bx.delta);
    for _ in 0..MAX_REJECTIONS {
        let positive = rng.random_bool(0.5);
        let hi = bx.phi2_upper(positive);
        if hi < bx.epsilon {
            continue;
        }
        let mag = rng.random_range(bx.epsilon..=hi);
        let phi2 = if positive { mag } else { -mag };
        let phi1 = rng.random_range(-phi1_max..=phi1_max);
        let psi2 = sample_direction(&mut rng, bx.k);
        // beyond this phi3 the emission constraints cannot hold for any psi1
        let phi3_hi = (2.0 / psi2.iter().map(|x| x.abs()).sum::<f64>()).min(2f64.sqrt());
        if phi3_hi < bx.zeta {
            continue;
        }
        let phi3 = rng.random_range(bx.zeta..=phi3_hi);
        let psi1 = sample_simplex(&mut rng, bx.k);
        let pp = PhiPsiParams {
            phi: [phi1, phi2, phi3],
            psi1,
            psi2,
        };
        if validate_phipsi(&pp, bx).is_member() {
            return Ok(pp);
        }
    }
    Ok(fallback)
}
