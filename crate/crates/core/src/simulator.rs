//! Path sampling from the stationary two-state chain and the empirical
//! triple law.

use rand::distr::weighted::WeightedIndex;
use rand::Rng as _;
use rand_distr::Distribution;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::ThetaParams;
use crate::seed;
use crate::triple_law::TripleLaw;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSample {
    pub hidden: Vec<u8>,
    /// Observed symbols, 0-based.
    pub observed: Vec<usize>,
    pub seed: u64,
}

impl PathSample {
    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    /// Two-column CSV `x,y`; `y` is written 1-based.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(8 * self.len() + 4);
        out.push_str("x,y\n");
        for (x, y) in self.hidden.iter().zip(&self.observed) {
            out.push_str(&format!("{},{}\n", x, y + 1));
        }
        out
    }
}

fn emission_sampler(f: &[f64]) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(f).map_err(|e| Error::Validation(format!("emission density: {e}")))
}

/// Draws `(X_1..X_n, Y_1..Y_n)` with `X_1` stationary.
pub fn sample_path(theta: &ThetaParams, n: usize, seed: u64) -> Result<PathSample> {
    theta.validate()?;
    let [_, w1] = theta.stationary()?;
    let emit = [emission_sampler(&theta.f0)?, emission_sampler(&theta.f1)?];
    let mut rng = seed::rng(seed);
    let mut hidden = Vec::with_capacity(n);
    let mut observed = Vec::with_capacity(n);
    if n > 0 {
        let mut x = u8::from(rng.random::<f64>() < w1);
        for j in 0..n {
            if j > 0 {
                let u: f64 = rng.random();
                x = match x {
                    0 => u8::from(u < theta.p),
                    _ => u8::from(u >= theta.q),
                };
            }
            hidden.push(x);
            observed.push(emit[x as usize].sample(&mut rng));
        }
    }
    Ok(PathSample {
        hidden,
        observed,
        seed,
    })
}

/// Counts of consecutive triples divided by `n` (not `n - 2`), so the total
/// mass is `(n - 2) / n`.
pub fn empirical_triple_law(observed: &[usize], k: usize) -> Result<TripleLaw> {
    let n = observed.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    if let Some((i, y)) = observed.iter().enumerate().find(|(_, y)| **y >= k) {
        return Err(Error::Validation(format!(
            "observation {i} is symbol {y}, outside 0..{k}"
        )));
    }
    let mut law = TripleLaw::zeros(k);
    let idx: Vec<usize> = observed
        .windows(3)
        .map(|w| law.index(w[0], w[1], w[2]))
        .collect();
    let cells = law.as_mut_slice();
    for i in idx {
        cells[i] += 1.0;
    }
    let inv = 1.0 / n as f64;
    for c in cells.iter_mut() {
        *c *= inv;
    }
    Ok(law)
}
