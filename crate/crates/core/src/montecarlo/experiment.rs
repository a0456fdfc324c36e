//! Executes an [`ExperimentConfig`] into a [`Report`].

use crate::asymptotic::expected_z_s;
use crate::bounds::BoundSpec;
use crate::cli::config::{ExperimentConfig, TaskConfig, TaskKind};
use crate::cli::report::{ConfigEcho, Report, ResultRow};
use crate::distributions::SimplexVector;
use crate::error::{Error, Result};

use super::{curve_from_values, exact_tail_small, mean_from_values, tail_from_values, Estimator, Outcome, Source};

pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    let estimator = Estimator::new(config.workers.count()).with_ci_level(config.ci_level)?;
    let mut rows = Vec::new();
    for task in &config.tasks {
        run_task(&estimator, config, task, &mut rows)?;
    }
    let echo = ConfigEcho {
        master_seed: config.master_seed,
        ci_level: config.ci_level,
        band_alpha: config.band_alpha,
        tasks: config.tasks.clone(),
    };
    Ok(Report::new(echo, rows))
}

fn family_label(task: &TaskConfig) -> String {
    task.family.map(|f| f.as_str().to_string()).unwrap_or_else(|| "limit".to_string())
}

fn source_for(task: &TaskConfig, s: usize, n: Option<u64>) -> Result<Source> {
    match (task.family, n) {
        (Some(family), Some(n)) => Source::finite(family, SimplexVector::uniform(s)?, n),
        (None, None) => Source::limit(s, task.d),
        _ => Err(Error::Validation(format!("task '{}': family and n must be given together", task.id))),
    }
}

fn base_row(task: &TaskConfig, s: usize, n: Option<u64>) -> ResultRow {
    ResultRow {
        task_id: task.id.clone(),
        kind: task.kind,
        family: family_label(task),
        s,
        n,
        delta: None,
        d: task.d,
        threshold: None,
        epsilon: None,
        point: 0.0,
        ci_low: 0.0,
        ci_high: 0.0,
        outcome: None,
        trials: task.trials,
        seed: task.seed,
        expected: None,
        bound_valid: None,
    }
}

fn run_task(estimator: &Estimator, config: &ExperimentConfig, task: &TaskConfig, rows: &mut Vec<ResultRow>) -> Result<()> {
    let ns: Vec<Option<u64>> = if task.n.is_empty() { vec![None] } else { task.n.iter().map(|&n| Some(n)).collect() };
    match task.kind {
        TaskKind::Falsify => {
            let family = task.bound.ok_or_else(|| Error::Validation(format!("task '{}' has no bound", task.id)))?;
            for &s in &task.s {
                for &n in &ns {
                    let n = n.ok_or_else(|| Error::Validation(format!("task '{}' has no n", task.id)))?;
                    let values = estimator.sample(&source_for(task, s, Some(n))?, task.trials, task.seed)?;
                    for &delta in &task.delta {
                        let bound = BoundSpec::new(family, n, s, delta)?.evaluate()?;
                        let est = tail_from_values(&values, bound.epsilon, estimator.ci_level())?;
                        rows.push(ResultRow {
                            delta: Some(delta),
                            threshold: Some(bound.epsilon),
                            epsilon: Some(bound.epsilon),
                            point: est.point,
                            ci_low: est.ci_low,
                            ci_high: est.ci_high,
                            outcome: Some(Outcome::classify(&est, delta)),
                            bound_valid: Some(bound.valid),
                            ..base_row(task, s, Some(n))
                        });
                    }
                }
            }
        }
        TaskKind::Tail => {
            for &s in &task.s {
                for &n in &ns {
                    let values = estimator.sample(&source_for(task, s, n)?, task.trials, task.seed)?;
                    for &t in &task.threshold {
                        let est = tail_from_values(&values, t, estimator.ci_level())?;
                        let expected = match (task.exact, n) {
                            (true, Some(n)) => Some(exact_tail_small(&SimplexVector::uniform(s)?, n, t)?),
                            _ => None,
                        };
                        rows.push(ResultRow {
                            threshold: Some(t),
                            point: est.point,
                            ci_low: est.ci_low,
                            ci_high: est.ci_high,
                            expected,
                            ..base_row(task, s, n)
                        });
                    }
                }
            }
        }
        TaskKind::Quantiles => {
            for &s in &task.s {
                for &n in &ns {
                    let values = estimator.sample(&source_for(task, s, n)?, task.trials, task.seed)?;
                    let curve = curve_from_values(values, &task.threshold, config.band_alpha)?;
                    for ((&t, &f), (lo, hi)) in curve.grid.iter().zip(&curve.cdf_estimates).zip(curve.band()) {
                        rows.push(ResultRow {
                            threshold: Some(t),
                            point: f,
                            ci_low: lo,
                            ci_high: hi,
                            ..base_row(task, s, n)
                        });
                    }
                }
            }
        }
        TaskKind::AsymptoticMean => {
            for &s in &task.s {
                let values = estimator.sample(&Source::limit(s, task.d)?, task.trials, task.seed)?;
                let m = mean_from_values(&values, estimator.ci_level())?;
                rows.push(ResultRow {
                    point: m.mean,
                    ci_low: m.ci_low,
                    ci_high: m.ci_high,
                    expected: Some(task.d * expected_z_s(s)?),
                    ..base_row(task, s, None)
                });
            }
        }
    }
    Ok(())
}
