//! Command-line front end for simulation, estimation and the rate and
//! lower-bound experiments.
//!
//! Exit codes: 0 on success, 1 on invalid input or configuration, 2 when a
//! requested construction is infeasible for the given box.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use hmm_frontier::estimator::min_distance_fit;
use hmm_frontier::experiments::{
    lower_bound_pair, rate_sweep, slope_fit, sweep_csv, threshold_probe, PairKind, SweepConfig,
};
use hmm_frontier::filter_kl::kl_probe;
use hmm_frontier::params::{phipsi_to_theta, ThetaParams};
use hmm_frontier::simulator::{empirical_triple_law, sample_path};
use hmm_frontier::triple_law::equivalence_ratio_probe;
use hmm_frontier::{Error, Result};

use config::{
    load, parse_observations, read_json, EquivProbeConfig, EstimateConfig, KlProbeConfig,
    LbPairConfig, PartialBox, SimulateConfig, ThresholdProbeConfig,
};

#[derive(Parser)]
#[command(
    name = "hmm-frontier",
    version,
    about = "Two-state HMM estimation near independence"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sample size (overrides the config)
    #[arg(long)]
    n: Option<u64>,
    /// Random seed (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Clone, Copy)]
struct BoxFlags {
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    zeta: Option<f64>,
    /// Spectral-gap lower bound L
    #[arg(long = "l")]
    l: Option<f64>,
    /// Alphabet size K
    #[arg(long = "k")]
    k: Option<usize>,
}

impl BoxFlags {
    fn partial(self) -> PartialBox {
        PartialBox {
            delta: self.delta,
            epsilon: self.epsilon,
            zeta: self.zeta,
            l: self.l,
            k: self.k,
        }
    }
}

#[derive(Args, Clone)]
struct PairFlags {
    /// Pair construction: phi1_phi3, phi2, psi1 or psi2
    #[arg(long)]
    kind: Option<String>,
    /// Construction constant c
    #[arg(long)]
    c: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a path; writes CSV `x,y`
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Fit (phi, psi) and theta to an observation file; writes JSON
    Estimate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        bx: BoxFlags,
        /// Observation file (overrides the config)
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Monte-Carlo estimation-rate sweep; writes CSV
    RateSweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        bx: BoxFlags,
    },
    /// Divergence between two parameters over a grid of sample sizes; writes CSV
    KlProbe {
        #[command(flatten)]
        common: Common,
    },
    /// Equivalence constants between rho and the triple-law distance; writes JSON
    EquivProbe {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        bx: BoxFlags,
    },
    /// Construct a two-point lower-bound pair; writes JSON
    LbPair {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        bx: BoxFlags,
        #[command(flatten)]
        pair: PairFlags,
    },
    /// Likelihood-ratio testing of a lower-bound pair; writes JSON
    ThresholdProbe {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        bx: BoxFlags,
        #[command(flatten)]
        pair: PairFlags,
        /// Paths per hypothesis
        #[arg(long)]
        replicas: Option<usize>,
    },
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(Error::from),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn worked_theta() -> ThetaParams {
    ThetaParams {
        p: 0.2,
        q: 0.3,
        f0: vec![0.5, 0.3, 0.2],
        f1: vec![0.2, 0.3, 0.5],
    }
}

fn kind_of(flag: Option<&str>, fallback: PairKind) -> Result<PairKind> {
    flag.map_or(Ok(fallback), str::parse)
}

fn usize_of(n: u64) -> Result<usize> {
    usize::try_from(n).map_err(|_| Error::Validation(format!("n = {n} is too large")))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { common } => {
            let mut cfg: SimulateConfig = load(common.config.as_deref())?;
            if let Some(n) = common.n {
                cfg.n = usize_of(n)?;
            }
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            let theta = match (cfg.theta, cfg.params) {
                (Some(t), _) => t,
                (None, Some(pp)) => phipsi_to_theta(&pp)?,
                (None, None) => worked_theta(),
            };
            let path = sample_path(&theta, cfg.n, cfg.seed)?;
            emit(common.out.as_deref(), &path.to_csv())
        }
        Command::Estimate { common, bx, input } => {
            let cfg: EstimateConfig = load(common.config.as_deref())?;
            let bx = cfg.bx.overlay(bx.partial()).resolve()?;
            let mut search = cfg.search;
            if let Some(s) = common.seed {
                search.seed = s;
            }
            let input = input
                .or_else(|| cfg.input.map(PathBuf::from))
                .ok_or_else(|| Error::Validation("no observation file given (--input)".into()))?;
            let text = std::fs::read_to_string(&input)
                .map_err(|e| Error::Validation(format!("cannot read {}: {e}", input.display())))?;
            let observed = parse_observations(&text, bx.k)?;
            let phat = empirical_triple_law(&observed, bx.k)?;
            let fit = min_distance_fit(&phat, &bx, &search)?;
            let theta = phipsi_to_theta(&fit.estimate)?;
            #[derive(Serialize)]
            struct Out<'a> {
                n: usize,
                #[serde(rename = "box")]
                bx: hmm_frontier::ConstraintBox,
                theta: ThetaParams,
                fit: &'a hmm_frontier::estimator::FitResult,
                near_minimal: bool,
            }
            let out = Out {
                n: observed.len(),
                bx,
                theta,
                fit: &fit,
                near_minimal: fit.near_minimal(),
            };
            emit(common.out.as_deref(), &json(&out)?)
        }
        Command::RateSweep { common, bx } => {
            let path = common
                .config
                .as_deref()
                .ok_or_else(|| Error::Validation("rate-sweep requires --config".into()))?;
            let mut cfg: SweepConfig = read_json(path)?;
            cfg.bx = PartialBox::from(cfg.bx).overlay(bx.partial()).resolve()?;
            if let Some(n) = common.n {
                cfg.n_grid = vec![usize_of(n)?];
            }
            if let Some(s) = common.seed {
                cfg.master_seed = s;
            }
            let out = common
                .out
                .clone()
                .or_else(|| cfg.output_path.clone().map(PathBuf::from));
            let records = rate_sweep(&cfg)?;
            emit(out.as_deref(), &sweep_csv(&records))?;
            if let Ok(fit) = slope_fit(&records, cfg.target) {
                eprintln!(
                    "median loss_{} slope {:.4} (R^2 {:.4}) over {} sample sizes",
                    cfg.target.as_str(),
                    fit.slope,
                    fit.r_squared,
                    fit.groups
                );
            }
            Ok(())
        }
        Command::KlProbe { common } => {
            let mut cfg: KlProbeConfig = load(common.config.as_deref())?;
            if let Some(n) = common.n {
                cfg.n_grid = vec![usize_of(n)?];
            }
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            let (a, b) = match (cfg.a, cfg.b) {
                (Some(a), Some(b)) => (a, b),
                _ => {
                    return Err(Error::Validation(
                        "kl-probe config must give both parameters a and b".into(),
                    ))
                }
            };
            a.validate()?;
            b.validate()?;
            let probe = kl_probe(&a, &b, &cfg.n_grid, cfg.replicates, cfg.seed, cfg.phi2_gate)?;
            if probe.gate_exceeded {
                eprintln!("warning: |phi2| exceeds the gate {}", probe.phi2_gate);
            }
            emit(common.out.as_deref(), &probe.to_csv())
        }
        Command::EquivProbe { common, bx } => {
            let mut cfg: EquivProbeConfig = load(common.config.as_deref())?;
            if let Some(n) = common.n {
                cfg.pairs = usize_of(n)?;
            }
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            let bx = cfg.bx.overlay(bx.partial()).resolve()?;
            let summary = equivalence_ratio_probe(&bx, cfg.pairs, cfg.seed)?;
            emit(common.out.as_deref(), &json(&summary)?)
        }
        Command::LbPair { common, bx, pair } => {
            let mut cfg: LbPairConfig = load(common.config.as_deref())?;
            cfg.kind = kind_of(pair.kind.as_deref(), cfg.kind)?;
            if let Some(c) = pair.c {
                cfg.c = c;
            }
            if let Some(n) = common.n {
                cfg.n = n as f64;
            }
            let bx = cfg.bx.overlay(bx.partial()).resolve()?;
            let p = lower_bound_pair(cfg.kind, cfg.n, &bx, cfg.c)?;
            emit(common.out.as_deref(), &json(&p)?)
        }
        Command::ThresholdProbe {
            common,
            bx,
            pair,
            replicas,
        } => {
            let mut cfg: ThresholdProbeConfig = load(common.config.as_deref())?;
            cfg.kind = kind_of(pair.kind.as_deref(), cfg.kind)?;
            if let Some(c) = pair.c {
                cfg.c = c;
            }
            if let Some(n) = common.n {
                cfg.n = usize_of(n)?;
            }
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            if let Some(r) = replicas {
                cfg.replicas = r;
            }
            let bx = cfg.bx.overlay(bx.partial()).resolve()?;
            let t = threshold_probe(cfg.kind, &bx, cfg.n, cfg.c, cfg.replicas, cfg.seed)?;
            emit(common.out.as_deref(), &json(&t)?)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_infeasible() { 2 } else { 1 })
        }
    }
}
