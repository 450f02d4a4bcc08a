//! JSON configuration files, one shape per subcommand. Every field is
//! optional unless noted; unknown fields are rejected.

use serde::Deserialize;

use hmm_frontier::estimator::SearchConfig;
use hmm_frontier::experiments::{PairKind, DEFAULT_C};
use hmm_frontier::params::{ConstraintBox, PhiPsiParams, ThetaParams};
use hmm_frontier::{Error, Result};

/// Box with every field optional; missing fields fall back to
/// `(delta, epsilon, zeta, L, K) = (0.1, 0.3, 0.3, 0.3, 3)`.
#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialBox {
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub zeta: Option<f64>,
    #[serde(rename = "L", alias = "l")]
    pub l: Option<f64>,
    #[serde(rename = "K", alias = "k")]
    pub k: Option<usize>,
}

impl PartialBox {
    pub fn overlay(self, top: PartialBox) -> PartialBox {
        PartialBox {
            delta: top.delta.or(self.delta),
            epsilon: top.epsilon.or(self.epsilon),
            zeta: top.zeta.or(self.zeta),
            l: top.l.or(self.l),
            k: top.k.or(self.k),
        }
    }

    pub fn resolve(self) -> Result<ConstraintBox> {
        ConstraintBox::new(
            self.delta.unwrap_or(0.1),
            self.epsilon.unwrap_or(0.3),
            self.zeta.unwrap_or(0.3),
            self.l.unwrap_or(0.3),
            self.k.unwrap_or(3),
        )
    }
}

impl From<ConstraintBox> for PartialBox {
    fn from(b: ConstraintBox) -> Self {
        PartialBox {
            delta: Some(b.delta),
            epsilon: Some(b.epsilon),
            zeta: Some(b.zeta),
            l: Some(b.l),
            k: Some(b.k),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    /// Native parameters; takes precedence over `params`.
    pub theta: Option<ThetaParams>,
    pub params: Option<PhiPsiParams>,
    pub n: usize,
    pub seed: u64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        Self {
            theta: None,
            params: None,
            n: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimateConfig {
    /// Observation file: one symbol per line, or CSV with a `y` column.
    pub input: Option<String>,
    #[serde(rename = "box")]
    pub bx: PartialBox,
    pub search: SearchConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KlProbeConfig {
    /// Both members are required.
    pub a: Option<PhiPsiParams>,
    pub b: Option<PhiPsiParams>,
    pub n_grid: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub phi2_gate: f64,
}

impl Default for KlProbeConfig {
    fn default() -> Self {
        Self {
            a: None,
            b: None,
            n_grid: (1..=10).map(|i| 100 * i).collect(),
            replicates: 200,
            seed: 0,
            phi2_gate: hmm_frontier::filter_kl::DEFAULT_PHI2_GATE,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquivProbeConfig {
    #[serde(rename = "box")]
    pub bx: PartialBox,
    pub pairs: usize,
    pub seed: u64,
}

impl Default for EquivProbeConfig {
    fn default() -> Self {
        Self {
            bx: PartialBox::default(),
            pairs: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LbPairConfig {
    pub kind: PairKind,
    pub n: f64,
    pub c: f64,
    #[serde(rename = "box")]
    pub bx: PartialBox,
}

impl Default for LbPairConfig {
    fn default() -> Self {
        Self {
            kind: PairKind::Phi1Phi3,
            n: 1e7,
            c: DEFAULT_C,
            bx: PartialBox::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdProbeConfig {
    pub kind: PairKind,
    pub n: usize,
    pub c: f64,
    pub replicas: usize,
    pub seed: u64,
    #[serde(rename = "box")]
    pub bx: PartialBox,
}

impl Default for ThresholdProbeConfig {
    fn default() -> Self {
        Self {
            kind: PairKind::Phi1Phi3,
            n: 100_000,
            c: DEFAULT_C,
            replicas: 500,
            seed: 0,
            bx: PartialBox::default(),
        }
    }
}

/// Reads a config file, or the defaults when no path is given.
pub fn load<T: for<'de> Deserialize<'de> + Default>(path: Option<&std::path::Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => read_json(p),
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &std::path::Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Validation(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Validation(format!("config {}: {e}", path.display())))
}

/// Parses observations given 1-based in a text file: one symbol per line, or
/// CSV whose header names a `y` column (the first column otherwise).
pub fn parse_observations(text: &str, k: usize) -> Result<Vec<usize>> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .peekable();
    let mut column = 0;
    if let Some(first) = lines.peek() {
        let cells: Vec<&str> = first.split(',').map(str::trim).collect();
        if cells.iter().any(|c| c.parse::<f64>().is_err()) {
            column = cells.iter().position(|c| *c == "y").unwrap_or(0);
            lines.next();
        }
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let cell = line.split(',').nth(column).map(str::trim).unwrap_or("");
            let y: usize = cell.parse().map_err(|_| {
                Error::Validation(format!("observation {}: {cell:?} is not a symbol", i + 1))
            })?;
            if y == 0 || y > k {
                return Err(Error::Validation(format!(
                    "observation {}: symbol {y} outside 1..={k}",
                    i + 1
                )));
            }
            Ok(y - 1)
        })
        .collect()
}
