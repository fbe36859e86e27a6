//! Monte Carlo harness: sample from `θ*`, refit, and collect the
//! standardized estimates `p_i = √n (θ̂_i − θ*_i) / √(I⁻¹_ii(θ*))` or the
//! order-test statistic for every replication.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{suff_stats_uni, Membership, Support, ThetaUni};
use crate::error::{Error, Result};
use crate::inference::{self, FitOptions, Mode};
use crate::oracle::{replication_seed, UniSampler};
use crate::stats;

/// What each replication reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    /// Standardized MLE components.
    Standardized,
    /// Score test of the effective order against `len(θ*)`.
    ScoreTest,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub theta_star: Vec<f64>,
    pub n: usize,
    pub replications: usize,
    pub seed: u64,
    /// Defaults to the score test when `θ*` ends in a zero, else standardized estimates.
    pub statistic: Option<Statistic>,
    pub alpha: f64,
}

impl ExperimentConfig {
    pub fn new(mode: Mode, theta_star: Vec<f64>, n: usize, replications: usize, seed: u64) -> Self {
        Self {
            mode,
            theta_star,
            n,
            replications,
            seed,
            statistic: None,
            alpha: 0.05,
        }
    }

    pub fn statistic(&self) -> Statistic {
        self.statistic.unwrap_or(if self.theta_star.last() == Some(&0.0) {
            Statistic::ScoreTest
        } else {
            Statistic::Standardized
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RepStatus {
    Ok,
    NotConverged,
    Boundary,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct Replication {
    pub replication: usize,
    pub seed: u64,
    pub status: RepStatus,
    /// `p_1..p_d`, or the single test statistic.
    pub values: Vec<f64>,
    pub theta_hat: Vec<f64>,
    pub message: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ColumnSummary {
    pub name: String,
    pub reference: String,
    pub mean: f64,
    pub variance: f64,
    pub mean_abs: f64,
    pub ks_statistic: Option<f64>,
    pub ks_pvalue: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub statistic: Statistic,
    pub completed: usize,
    pub failed: usize,
    /// False when fewer than two replications completed.
    pub ks_defined: bool,
    pub columns: Vec<ColumnSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentOutput {
    pub summary: ExperimentSummary,
    pub replications: Vec<Replication>,
}

impl ExperimentOutput {
    pub fn column_names(&self) -> Vec<String> {
        self.summary.columns.iter().map(|c| c.name.clone()).collect()
    }
}

fn support_of(mode: Mode) -> Result<Support> {
    match mode {
        Mode::HalfLine => Ok(Support::HalfLine),
        Mode::RealLine => Ok(Support::RealLine),
        Mode::Bivariate => Err(Error::UnsupportedOrder(
            "simulation is univariate only: there is no bivariate sampler".into(),
        )),
    }
}

/// Runs all replications (in parallel; results do not depend on scheduling).
pub fn simulate(config: &ExperimentConfig, opts: &FitOptions) -> Result<ExperimentOutput> {
    if config.n == 0 || config.replications == 0 {
        return Err(Error::InvalidParameter("n and replications must be >= 1".into()));
    }
    let support = support_of(config.mode)?;
    let theta_star = ThetaUni::new(config.theta_star.clone(), support)?;
    let d = theta_star.order();
    let eff = match theta_star.classify() {
        Membership::Interior => theta_star.clone(),
        Membership::Boundary { order } => theta_star.truncated(order)?,
        Membership::Outside => return Err(Error::OutsideDomain("theta_star is not a density".into())),
    };
    let statistic = config.statistic();
    let sampler = UniSampler::new(&eff)?;

    let (names, reference, inv_diag) = match statistic {
        Statistic::Standardized => {
            theta_star.require_interior()?;
            let info = inference::fisher_info_uni(&theta_star, &opts.ode)?;
            let inv = info.try_inverse().ok_or(Error::SingularInformation)?;
            let diag: Vec<f64> = (0..d).map(|i| inv[(i, i)]).collect();
            ((1..=d).map(|i| format!("p{i}")).collect::<Vec<_>>(), "N(0,1)", diag)
        }
        Statistic::ScoreTest => {
            let reference = match support {
                Support::HalfLine => "N(0,1)",
                Support::RealLine => "chi2(2)",
            };
            (vec!["T".to_string()], reference, vec![])
        }
    };

    let run = |r: usize| -> Replication {
        let seed = replication_seed(config.seed, r as u64);
        let sample = sampler.sample(config.n, seed);
        let mut rep = Replication {
            replication: r,
            seed,
            status: RepStatus::Ok,
            values: vec![],
            theta_hat: vec![],
            message: None,
        };
        let outcome = (|| -> Result<(Vec<f64>, Vec<f64>)> {
            let st = suff_stats_uni(&sample, d, support)?;
            match statistic {
                Statistic::Standardized => {
                    let fit = inference::fit_mle_uni(&st, d, opts)?;
                    let sn = (config.n as f64).sqrt();
                    let p = (0..d)
                        .map(|i| sn * (fit.theta_hat[i] - config.theta_star[i]) / inv_diag[i].sqrt())
                        .collect();
                    Ok((p, fit.theta_hat))
                }
                Statistic::ScoreTest => {
                    let t = match support {
                        Support::HalfLine => inference::score_test_halfline(&st, d, config.alpha, opts)?,
                        Support::RealLine => inference::score_test_realline(&st, d, config.alpha, opts)?,
                    };
                    Ok((vec![t.statistic], t.theta_hat_null))
                }
            }
        })();
        match outcome {
            Ok((values, theta_hat)) => {
                rep.values = values;
                rep.theta_hat = theta_hat;
            }
            Err(e) => {
                rep.status = match e {
                    Error::NotConverged(_) => RepStatus::NotConverged,
                    Error::BoundaryEscape(_) => RepStatus::Boundary,
                    _ => RepStatus::Failed,
                };
                if let Some(fit) = e.partial_fit() {
                    rep.theta_hat = fit.theta_hat.clone();
                }
                rep.message = Some(e.to_string());
            }
        }
        rep
    };
    let replications: Vec<Replication> = (0..config.replications).into_par_iter().map(run).collect();

    let ok: Vec<&Replication> = replications.iter().filter(|r| r.status == RepStatus::Ok).collect();
    let ks_defined = ok.len() >= 2;
    let columns = names
        .iter()
        .enumerate()
        .map(|(c, name)| {
            let xs: Vec<f64> = ok.iter().map(|r| r.values[c]).collect();
            let m = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / m;
            let variance = if xs.len() > 1 {
                xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)
            } else {
                f64::NAN
            };
            let mean_abs = xs.iter().map(|x| x.abs()).sum::<f64>() / m;
            let ks = ks_defined.then(|| {
                if reference == "N(0,1)" {
                    stats::ks_test(&xs, stats::normal_cdf)
                } else {
                    stats::ks_test(&xs, |x| stats::chi2_cdf(x, 2.0))
                }
            });
            ColumnSummary {
                name: name.clone(),
                reference: reference.to_string(),
                mean,
                variance,
                mean_abs,
                ks_statistic: ks.map(|k| k.statistic),
                ks_pvalue: ks.map(|k| k.p_value),
            }
        })
        .collect();

    Ok(ExperimentOutput {
        summary: ExperimentSummary {
            config: config.clone(),
            statistic,
            completed: ok.len(),
            failed: replications.len() - ok.len(),
            ks_defined,
            columns,
        },
        replications,
    })
}
