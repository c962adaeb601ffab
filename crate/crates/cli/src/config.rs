use std::path::PathBuf;

use clap::ValueEnum;
use minorant_core::{Error, Result, StableParams};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Fig3RuntimeTail,
    Fig4Moments,
    Fig5FirstPassage,
    Fig6Excursion,
    TimingTable,
    SampleMeander,
    SampleMinorant,
    SampleFdd,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Which moment `fig4-moments` estimates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Target {
    #[default]
    Mean,
    NegMoment,
}

/// Full description of one run. Every field except `experiment` has a default,
/// so a config file may be as small as `{"experiment": "fig3-runtime-tail"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub rho: Option<f64>,
    #[serde(default)]
    pub mu: Option<f64>,
    /// Explicit `(alpha, rho)` grid; overrides the experiment's default grid.
    #[serde(default)]
    pub grid: Option<Vec<(f64, f64)>>,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub jobs: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    #[serde(default)]
    pub trace: Option<PathBuf>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Barrier level of the first-passage experiment.
    #[serde(default = "one")]
    pub x: f64,
    /// Time of the excursion marginal.
    #[serde(default = "half")]
    pub t: f64,
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    #[serde(default)]
    pub target: Target,
    #[serde(default = "default_bootstrap")]
    pub bootstrap: usize,
}

fn default_eps() -> f64 {
    2f64.powi(-32)
}

fn default_delta() -> f64 {
    2.0
}

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn default_bootstrap() -> usize {
    1000
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            alpha: None,
            rho: None,
            mu: None,
            grid: None,
            eps: default_eps(),
            n: None,
            seed: 0,
            jobs: 0,
            out: None,
            format: Format::Csv,
            trace: None,
            delta: default_delta(),
            x: one(),
            t: half(),
            times: None,
            target: Target::Mean,
            bootstrap: default_bootstrap(),
        }
    }

    pub fn replications(&self) -> usize {
        self.n.unwrap_or(match self.experiment {
            Experiment::TimingTable => 1_000,
            Experiment::SampleMeander | Experiment::SampleMinorant | Experiment::SampleFdd => 100,
            _ => 10_000,
        })
    }

    /// Parameter grid: explicit grid, then a single `--alpha/--rho` point,
    /// then the experiment's default grid.
    pub fn points(&self) -> Result<Vec<StableParams>> {
        let raw: Vec<(f64, f64)> = if let Some(g) = &self.grid {
            g.clone()
        } else if let Some(a) = self.alpha {
            vec![(a, self.rho.unwrap_or(0.5))]
        } else if let Some(r) = self.rho {
            vec![(1.5, r)]
        } else {
            default_grid(self.experiment)
        };
        if raw.is_empty() {
            return Err(Error::ParameterDomain("empty parameter grid".into()));
        }
        raw.into_iter().map(|(a, r)| StableParams::new(a, r)).collect()
    }

    /// Checks everything that can be checked before sampling.
    pub fn validate(&self) -> Result<Vec<StableParams>> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::ParameterDomain(format!("eps = {} outside (0, 1)", self.eps)));
        }
        if self.replications() == 0 {
            return Err(Error::ParameterDomain("n must be positive".into()));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::ParameterDomain(format!("delta = {} must be positive", self.delta)));
        }
        if let Some(mu) = self.mu {
            if !mu.is_finite() {
                return Err(Error::ParameterDomain("mu must be finite".into()));
            }
        }
        if let Some(ts) = &self.times {
            if ts.is_empty() || ts.iter().any(|t| !(*t > 0.0 && *t <= 1.0)) || ts.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::ParameterDomain("times must be increasing and lie in (0, 1]".into()));
            }
        }
        let pts = self.points()?;
        if self.trace.is_some() && self.experiment != Experiment::SampleMeander {
            return Err(Error::ParameterDomain("--trace is only available for sample-meander".into()));
        }
        if self.experiment == Experiment::SampleMeander && self.trace.is_some() && pts.len() != 1 {
            return Err(Error::ParameterDomain("--trace needs a single parameter point".into()));
        }
        Ok(pts)
    }
}

fn classes(alphas: &[f64]) -> Vec<(f64, f64)> {
    let mut g = Vec::new();
    for &a in alphas {
        for r in [1.0 / a, 0.5, 1.0 - 1.0 / a] {
            if !g.contains(&(a, r)) {
                g.push((a, r));
            }
        }
    }
    g
}

pub fn default_grid(e: Experiment) -> Vec<(f64, f64)> {
    match e {
        Experiment::Fig3RuntimeTail => classes(&[1.5]),
        Experiment::Fig4Moments => classes(&(0..20).map(|k| (105 + 5 * k) as f64 / 100.0).collect::<Vec<_>>()),
        Experiment::Fig5FirstPassage => classes(&[1.2, 1.4, 1.6, 1.8, 2.0]),
        Experiment::Fig6Excursion => [1.2, 1.4, 1.6, 1.8, 1.95].iter().map(|&a| (a, 0.5)).collect(),
        Experiment::TimingTable => {
            let mut g = Vec::new();
            for a in [0.5, 0.1, 0.05] {
                for r in [0.95, 0.5, 0.1, 0.05, 0.01, 0.005] {
                    g.push((a, r));
                }
            }
            g
        }
        Experiment::SampleMeander | Experiment::SampleMinorant | Experiment::SampleFdd => vec![(1.5, 0.5)],
    }
}

/// Name of the symmetry class of `p`, or its `rho` otherwise.
pub fn case_name(p: &StableParams) -> String {
    let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
    if close(p.rho, 0.5) {
        "symmetric".into()
    } else if p.alpha > 1.0 && close(p.rho, 1.0 / p.alpha) {
        "spectrally_negative".into()
    } else if p.alpha > 1.0 && close(p.rho, 1.0 - 1.0 / p.alpha) {
        "spectrally_positive".into()
    } else {
        format!("rho={}", p.rho)
    }
}
