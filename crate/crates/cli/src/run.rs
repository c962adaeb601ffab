use minorant_core::estimators::{
    excursion_ratio, first_passage_moment, moment_experiment, EstimatorOptions, EstimatorReport, MomentTarget,
};
use minorant_core::experiments::{
    log_tail, meander_trace, runtime_samples, sample_fdds, sample_meanders, sample_minorants, timing, TimingRow,
};
use minorant_core::StableParams;
use serde::Serialize;

use crate::config::{case_name, Experiment, ExperimentConfig, Target};
use crate::output::{Sink, TraceRow};
use crate::CliError;

#[derive(Serialize)]
struct TailRow {
    alpha: f64,
    rho: f64,
    n: usize,
    log_tail: f64,
}

#[derive(Serialize)]
struct MomentOut {
    alpha: f64,
    rho: f64,
    #[serde(rename = "true")]
    truth: f64,
    estimate: f64,
    ci_lo: f64,
    ci_hi: f64,
}

#[derive(Serialize)]
struct PassageOut {
    alpha: f64,
    case: String,
    estimate: f64,
    ci_lo: f64,
    ci_hi: f64,
}

#[derive(Serialize)]
struct ExcursionOut {
    alpha: f64,
    estimate: f64,
    ci_lo: f64,
    ci_hi: f64,
}

#[derive(Serialize)]
struct MeanderOut {
    alpha: f64,
    rho: f64,
    rep: u64,
    lo: f64,
    hi: f64,
    faces: usize,
}

#[derive(Serialize)]
struct MinorantOut {
    alpha: f64,
    rho: f64,
    mu: f64,
    rep: u64,
    split: f64,
    end_lo: f64,
    end_hi: f64,
    min_lo: f64,
    min_hi: f64,
    argmin_lo: f64,
    argmin_hi: f64,
    gap: f64,
}

#[derive(Serialize)]
struct FddOut {
    alpha: f64,
    rho: f64,
    rep: u64,
    t: f64,
    lo: f64,
    hi: f64,
    attempts: usize,
}

fn options(cfg: &ExperimentConfig) -> EstimatorOptions {
    EstimatorOptions { eps: cfg.eps, bootstrap: cfg.bootstrap, jobs: cfg.jobs, ..EstimatorOptions::default() }
}

/// Grid point `k` draws from seed `seed + k`.
fn point_seed(cfg: &ExperimentConfig, k: usize) -> u64 {
    cfg.seed.wrapping_add(k as u64)
}

fn with_mu(p: &StableParams, mu: f64) -> Result<StableParams, CliError> {
    Ok(StableParams::with_drift(p.alpha, p.rho, mu, 1.0)?)
}

pub fn run(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let pts = cfg.validate()?;
    options(cfg).validate()?;
    let n = cfg.replications();
    let mut sink = Sink::open(cfg)?;
    match cfg.experiment {
        Experiment::Fig3RuntimeTail => {
            let mut rows = Vec::new();
            for (k, p) in pts.iter().enumerate() {
                let ns = runtime_samples(p, cfg.eps, n, point_seed(cfg, k), cfg.jobs)?;
                rows.extend(log_tail(&ns).into_iter().map(|t| TailRow {
                    alpha: p.alpha,
                    rho: p.rho,
                    n: t.n,
                    log_tail: t.log_tail,
                }));
            }
            sink.write(&rows)
        }
        Experiment::Fig4Moments => {
            let which = match cfg.target {
                Target::Mean => MomentTarget::Mean,
                Target::NegMoment => MomentTarget::NegMoment,
            };
            let rows: Vec<MomentOut> = moment_experiment(&pts, which, n, cfg.seed, &options(cfg))?
                .into_iter()
                .map(|r| MomentOut {
                    alpha: r.alpha,
                    rho: r.rho,
                    truth: r.truth.unwrap_or(f64::NAN),
                    estimate: r.report.estimate,
                    ci_lo: r.report.ci_lo,
                    ci_hi: r.report.ci_hi,
                })
                .collect();
            sink.write(&rows)
        }
        Experiment::Fig5FirstPassage => {
            let mu = cfg.mu.unwrap_or(1.0);
            let mut rows = Vec::new();
            for (k, p) in pts.iter().enumerate() {
                let q = with_mu(p, mu)?;
                let r: EstimatorReport = first_passage_moment(&q, cfg.x, cfg.delta, n, point_seed(cfg, k), &options(cfg))?;
                rows.push(PassageOut {
                    alpha: p.alpha,
                    case: case_name(p),
                    estimate: r.estimate,
                    ci_lo: r.ci_lo,
                    ci_hi: r.ci_hi,
                });
            }
            sink.write(&rows)
        }
        Experiment::Fig6Excursion => {
            let mut rows = Vec::new();
            for (k, p) in pts.iter().enumerate() {
                let r = excursion_ratio(p, cfg.t, n, point_seed(cfg, k), &options(cfg))?.ratio;
                rows.push(ExcursionOut { alpha: p.alpha, estimate: r.estimate, ci_lo: r.ci_lo, ci_hi: r.ci_hi });
            }
            sink.write(&rows)
        }
        Experiment::TimingTable => {
            let rows: Vec<TimingRow> = pts
                .iter()
                .enumerate()
                .map(|(k, p)| timing(p, cfg.eps, n, point_seed(cfg, k), cfg.jobs))
                .collect::<Result<_, _>>()?;
            sink.write(&rows)
        }
        Experiment::SampleMeander => {
            let mut rows = Vec::new();
            for (k, p) in pts.iter().enumerate() {
                let seed = point_seed(cfg, k);
                rows.extend(sample_meanders(p, cfg.eps, n, seed, cfg.jobs)?.into_iter().map(|s| MeanderOut {
                    alpha: p.alpha,
                    rho: p.rho,
                    rep: s.rep,
                    lo: s.lo,
                    hi: s.hi,
                    faces: s.faces,
                }));
                if let Some(path) = &cfg.trace {
                    let recs: Vec<TraceRow> = meander_trace(p, cfg.eps, seed, 0)?.iter().map(TraceRow::from).collect();
                    crate::output::write_trace(path, &recs)?;
                }
            }
            sink.write(&rows)
        }
        Experiment::SampleMinorant => {
            let mu = cfg.mu.unwrap_or(0.0);
            let mut rows = Vec::new();
            for (k, p) in pts.iter().enumerate() {
                let q = with_mu(p, mu)?;
                rows.extend(sample_minorants(&q, cfg.eps, n, point_seed(cfg, k), cfg.jobs)?.into_iter().map(|s| {
                    let m = s.summary;
                    MinorantOut {
                        alpha: p.alpha,
                        rho: p.rho,
                        mu,
                        rep: s.rep,
                        split: s.split,
                        end_lo: m.end.0,
                        end_hi: m.end.1,
                        min_lo: m.min.0,
                        min_hi: m.min.1,
                        argmin_lo: m.argmin.0,
                        argmin_hi: m.argmin.1,
                        gap: m.gap,
                    }
                }));
            }
            sink.write(&rows)
        }
        Experiment::SampleFdd => {
            let times = cfg.times.clone().unwrap_or_else(|| vec![0.25, 0.5, 0.75, 1.0]);
            let mut rows = Vec::new();
            for (k, p) in pts.iter().enumerate() {
                for s in sample_fdds(p, &times, cfg.eps, n, point_seed(cfg, k), cfg.jobs)? {
                    for (t, v) in times.iter().zip(&s.values) {
                        rows.push(FddOut {
                            alpha: p.alpha,
                            rho: p.rho,
                            rep: s.rep,
                            t: *t,
                            lo: v.0,
                            hi: v.1,
                            attempts: s.attempts,
                        });
                    }
                }
            }
            sink.write(&rows)
        }
    }
}
