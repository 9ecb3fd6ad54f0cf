//! Ensembles of independent trajectories with return and escape
//! diagnostics.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad_comb::{csv_err, Config, QuadCombSpec, Walker};
use crate::stats::{chi_square_homogeneity, ChiSquare};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TrialDiagnostics {
    pub trial: u64,
    /// Visits to the origin at times `1..=T`.
    pub returns_to_origin: u64,
    pub first_return_time: Option<u64>,
    /// Zero when the walk never returns.
    pub last_return_time: u64,
    /// `min_{burn_in ≤ t ≤ T} |S_t|`, Euclidean.
    pub min_dist_after_burnin: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EnsembleOptions {
    pub horizon: u64,
    pub trials: u64,
    pub seed: u64,
    /// Defaults to `horizon / 10`.
    pub burn_in: Option<u64>,
    /// Worker threads; zero uses the global pool.
    pub jobs: usize,
}

impl EnsembleOptions {
    pub fn new(horizon: u64, trials: u64, seed: u64) -> EnsembleOptions {
        EnsembleOptions {
            horizon,
            trials,
            seed,
            burn_in: None,
            jobs: 0,
        }
    }

    pub fn burn_in(&self) -> u64 {
        self.burn_in.unwrap_or(self.horizon / 10).max(1)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub returned_fraction: f64,
    pub mean_returns: f64,
    /// `(q, value)` for the 10%, 50% and 90% quantiles.
    pub min_dist_quantiles: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ensemble {
    pub options: EnsembleOptions,
    pub start: String,
    pub trials: Vec<TrialDiagnostics>,
    pub summary: EnsembleSummary,
}

impl Ensemble {
    /// Fraction of trials with a first return at or before `t`.
    pub fn returned_by(&self, t: u64) -> f64 {
        let n = self
            .trials
            .iter()
            .filter(|d| d.first_return_time.is_some_and(|f| f <= t))
            .count();
        n as f64 / self.trials.len().max(1) as f64
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "trial",
            "returns_to_origin",
            "first_return_time",
            "last_return_time",
            "min_dist_after_burnin",
        ])
        .map_err(csv_err)?;
        for d in &self.trials {
            w.write_record(&[
                d.trial.to_string(),
                d.returns_to_origin.to_string(),
                d.first_return_time.map_or(String::new(), |t| t.to_string()),
                d.last_return_time.to_string(),
                d.min_dist_after_burnin.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn run_trial(
    spec: &QuadCombSpec,
    start: Config,
    opts: &EnsembleOptions,
    stream: u64,
    trial: u64,
) -> TrialDiagnostics {
    let mut walker = Walker::starting_at(spec, start, opts.seed, stream);
    let burn_in = opts.burn_in();
    let mut returns = 0;
    let mut first = None;
    let mut last = 0;
    let mut min_sq = i128::MAX;
    for t in 1..=opts.horizon {
        walker.step();
        let (x, y) = walker.position();
        if x == 0 && y == 0 {
            returns += 1;
            first.get_or_insert(t);
            last = t;
        }
        if t >= burn_in {
            min_sq = min_sq.min(x as i128 * x as i128 + y as i128 * y as i128);
        }
    }
    TrialDiagnostics {
        trial,
        returns_to_origin: returns,
        first_return_time: first,
        last_return_time: last,
        min_dist_after_burnin: if min_sq == i128::MAX {
            f64::NAN
        } else {
            (min_sq as f64).sqrt()
        },
    }
}

/// Runs `f` on a pool of `jobs` threads, or on the global pool for zero.
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if jobs == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::input(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let i = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[i]
}

fn summarize(trials: &[TrialDiagnostics]) -> EnsembleSummary {
    let n = trials.len().max(1) as f64;
    let mut dists: Vec<f64> = trials
        .iter()
        .map(|d| d.min_dist_after_burnin)
        .filter(|d| !d.is_nan())
        .collect();
    dists.sort_by(f64::total_cmp);
    EnsembleSummary {
        returned_fraction: trials.iter().filter(|d| d.returns_to_origin > 0).count() as f64 / n,
        mean_returns: trials
            .iter()
            .map(|d| d.returns_to_origin as f64)
            .sum::<f64>()
            / n,
        min_dist_quantiles: [0.1, 0.5, 0.9]
            .iter()
            .map(|&q| (q, quantile(&dists, q)))
            .collect(),
    }
}

fn ensemble_from(
    spec: &QuadCombSpec,
    start: Config,
    opts: &EnsembleOptions,
    stream_base: u64,
) -> Result<Ensemble> {
    if opts.horizon == 0 || opts.trials == 0 {
        return Err(Error::input("horizon and trials must be positive"));
    }
    if spec.law(start).is_none() {
        return Err(Error::input(format!(
            "no law for start configuration {start}"
        )));
    }
    let trials = with_jobs(opts.jobs, || {
        (0..opts.trials)
            .into_par_iter()
            .map(|i| run_trial(spec, start, opts, stream_base + i, i))
            .collect::<Vec<_>>()
    })?;
    Ok(Ensemble {
        options: *opts,
        start: start.to_string(),
        summary: summarize(&trials),
        trials,
    })
}

/// Independent trajectories from `(X_0, X_1) = (n, e)`; trial `i` uses
/// stream `i` of `seed`, so results do not depend on the worker count.
pub fn ensemble(spec: &QuadCombSpec, opts: &EnsembleOptions) -> Result<Ensemble> {
    ensemble_from(spec, Config::INITIAL, opts, 0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StartRow {
    pub start: String,
    pub returned: u64,
    pub trials: u64,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DichotomyReport {
    pub horizon: u64,
    pub rows: Vec<StartRow>,
    /// Homogeneity of the return indicator across starts.
    pub chi_square: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Some starts return in at most a quarter of trials while others
    /// return in at least three quarters.
    pub split: bool,
}

/// Return fractions from every reachable starting configuration.
pub fn dichotomy_probe(spec: &QuadCombSpec, opts: &EnsembleOptions) -> Result<DichotomyReport> {
    let starts = spec.reachable()?;
    let mut rows = Vec::new();
    let mut tables: Vec<BTreeMap<bool, u64>> = Vec::new();
    for (i, &start) in starts.iter().enumerate() {
        let e = ensemble_from(spec, start, opts, (i as u64 + 1) << 40)?;
        let returned = e.trials.iter().filter(|d| d.returns_to_origin > 0).count() as u64;
        tables.push(
            [(true, returned), (false, opts.trials - returned)]
                .into_iter()
                .collect(),
        );
        rows.push(StartRow {
            start: start.to_string(),
            returned,
            trials: opts.trials,
            fraction: returned as f64 / opts.trials as f64,
        });
    }
    let refs: Vec<&BTreeMap<bool, u64>> = tables.iter().collect();
    let ChiSquare {
        statistic,
        dof,
        p_value,
    } = chi_square_homogeneity(&refs);
    let low = rows.iter().any(|r| r.fraction <= 0.25);
    let high = rows.iter().any(|r| r.fraction >= 0.75);
    Ok(DichotomyReport {
        horizon: opts.horizon,
        rows,
        chi_square: statistic,
        dof,
        p_value,
        split: low && high,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrendRow {
    pub horizon: u64,
    pub returned_fraction: f64,
    pub min_dist_quantiles: Vec<(f64, f64)>,
}

/// Ensemble summaries for increasing horizons with common seeds.
pub fn distance_trend(
    spec: &QuadCombSpec,
    horizons: &[u64],
    trials: u64,
    seed: u64,
    jobs: usize,
) -> Result<Vec<TrendRow>> {
    horizons
        .iter()
        .map(|&h| {
            let mut o = EnsembleOptions::new(h, trials, seed);
            o.jobs = jobs;
            let e = ensemble(spec, &o)?;
            Ok(TrendRow {
                horizon: h,
                returned_fraction: e.summary.returned_fraction,
                min_dist_quantiles: e.summary.min_dist_quantiles,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad_comb::{ConfigLaw, TailRule};

    fn srw_like() -> QuadCombSpec {
        let law = ConfigLaw::new(vec![0.75], vec![[1.0 / 3.0; 3]]).unwrap();
        QuadCombSpec::uniform(law, TailRule::Const).unwrap()
    }

    #[test]
    fn diagnostics_are_consistent() {
        let spec = srw_like();
        let e = ensemble(&spec, &EnsembleOptions::new(2000, 40, 9)).unwrap();
        for d in &e.trials {
            assert!(d.last_return_time <= 2000);
            assert_eq!(d.returns_to_origin == 0, d.first_return_time.is_none());
            assert!(d.first_return_time.unwrap_or(0) <= d.last_return_time);
            // returns happen at even times only
            assert_eq!(d.last_return_time % 2, 0);
        }
        assert!(e.summary.returned_fraction > 0.3);
    }

    #[test]
    fn worker_count_does_not_matter() {
        let spec = srw_like();
        let mut o = EnsembleOptions::new(500, 16, 3);
        o.jobs = 1;
        let a = ensemble(&spec, &o).unwrap();
        o.jobs = 8;
        let b = ensemble(&spec, &o).unwrap();
        assert_eq!(a.trials, b.trials);
    }

    #[test]
    fn probe_covers_reachable_starts() {
        let spec = srw_like();
        let r = dichotomy_probe(&spec, &EnsembleOptions::new(400, 20, 5)).unwrap();
        assert_eq!(r.rows.len(), 12);
        assert!(!r.split);
    }
}
