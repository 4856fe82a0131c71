//! Replica ensembles: parallel experiment drivers whose results do not
//! depend on the thread count.
//!
//! Each driver maps replicas through a streaming observer in parallel,
//! collects per-replica results in replica order, and reduces them
//! sequentially, so a run with one worker and a run with eight produce
//! bit-identical output.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::ExperimentConfig;
use crate::occupation::{concentration_fraction, OccupationAccumulator, OccupationMeasure};
use crate::ssa::{simulate_with_observer, GridSampler, ZvPathRecorder};
use crate::stats::{fit_rate, sup_norm_error_from_zv, ConvergenceReport};
use crate::tqssa::{solve_flln_ode, OdePath};

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    if threads == 0 {
        return f();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(f)
}

/// Deterministic limit of the slow path on the config's output grid,
/// started from the realized (integer-rounded) initial state.
pub fn limit_path(cfg: &ExperimentConfig) -> Result<OdePath> {
    let z0 = cfg.initial_copy_state()?.to_scaled(cfg.n, &cfg.regime);
    let k2_tot = cfg.conserved()?.k2_tot;
    solve_flln_ode(z0.zv(), k2_tot, &cfg.rates, &cfg.grid())
}

/// Ensemble mean of the slow path next to its deterministic limit.
#[derive(Debug, Clone)]
pub struct MeanPathStudy {
    pub times: Vec<f64>,
    pub zv_mean: Vec<f64>,
    pub zv_limit: Vec<f64>,
    /// Largest pointwise gap between the mean and the limit on the grid.
    pub sup_gap: f64,
    pub replicas: usize,
}

/// Average the slow path over `cfg.replicas` independent runs and compare
/// it to the limit path on the output grid.
pub fn mean_slow_path(cfg: &ExperimentConfig) -> Result<MeanPathStudy> {
    cfg.validate()?;
    let grid = cfg.grid();
    let limit = limit_path(cfg)?;
    let per_replica: Vec<Vec<f64>> = in_pool(cfg.threads, || {
        (0..cfg.replicas as u64)
            .into_par_iter()
            .map(|k| {
                let mut sampler = GridSampler::new(cfg, grid.clone())?;
                simulate_with_observer(cfg, k, &mut sampler)?;
                Ok(sampler.finish().iter().map(|z| z.zv()).collect())
            })
            .collect()
    })?;
    let mut zv_mean = vec![0.0f64; grid.len()];
    for path in &per_replica {
        for (m, v) in zv_mean.iter_mut().zip(path) {
            *m += v;
        }
    }
    for m in &mut zv_mean {
        *m /= cfg.replicas as f64;
    }
    let zv_limit = limit.values().to_vec();
    let sup_gap = zv_mean
        .iter()
        .zip(&zv_limit)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(MeanPathStudy {
        times: grid,
        zv_mean,
        zv_limit,
        sup_gap,
        replicas: cfg.replicas,
    })
}

/// Mean sup-norm error of the slow path at each scale in `n_values`, with
/// a fitted convergence rate.
pub fn convergence_study(cfg: &ExperimentConfig, n_values: &[u64]) -> Result<ConvergenceReport> {
    let mut mean_sup_errors = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let cfg_n = ExperimentConfig { n, ..cfg.clone() };
        cfg_n.validate()?;
        let grid = cfg_n.grid();
        let limit = limit_path(&cfg_n)?;
        let errors: Vec<f64> = in_pool(cfg.threads, || {
            (0..cfg_n.replicas as u64)
                .into_par_iter()
                .map(|k| {
                    let mut recorder = ZvPathRecorder::new(&cfg_n);
                    simulate_with_observer(&cfg_n, k, &mut recorder)?;
                    sup_norm_error_from_zv(&recorder.finish(), &limit, &grid)
                })
                .collect()
        })?;
        mean_sup_errors.push(errors.iter().sum::<f64>() / errors.len() as f64);
    }
    let fit = fit_rate(n_values, &mean_sup_errors)?;
    Ok(ConvergenceReport {
        n_values: n_values.to_vec(),
        mean_sup_errors,
        fit,
    })
}

/// Centered and sqrt(n)-rescaled slow-path deviation of each replica at
/// time `t`, against the limit started from the realized initial state.
pub fn empirical_terminal_fluctuations(cfg: &ExperimentConfig, t: f64) -> Result<Vec<f64>> {
    cfg.validate()?;
    if !(t > 0.0 && t <= cfg.t_end) {
        return Err(Error::InvalidConfig(format!(
            "fluctuation time {t} outside (0, {}]",
            cfg.t_end
        )));
    }
    let limit = limit_path(cfg)?;
    let limit_at_t = limit.value_at(t)?;
    let sqrt_n = (cfg.n as f64).sqrt();
    in_pool(cfg.threads, || {
        (0..cfg.replicas as u64)
            .into_par_iter()
            .map(|k| {
                let mut recorder = ZvPathRecorder::new(cfg);
                simulate_with_observer(cfg, k, &mut recorder)?;
                Ok(sqrt_n * (recorder.finish().value_at(t)? - limit_at_t))
            })
            .collect()
    })
}

/// Pooled occupation measure over all replicas, with the fraction of
/// post-burn-in mass inside the tube around the stable equilibrium branch.
pub fn occupation_for_config(cfg: &ExperimentConfig) -> Result<(OccupationMeasure, f64)> {
    cfg.validate()?;
    let limit = limit_path(cfg)?;
    let k2_tot = cfg.conserved()?.k2_tot;
    let measures: Vec<OccupationMeasure> = in_pool(cfg.threads, || {
        (0..cfg.replicas as u64)
            .into_par_iter()
            .map(|k| {
                let mut acc = OccupationAccumulator::new(cfg)?;
                simulate_with_observer(cfg, k, &mut acc)?;
                Ok(acc.finish())
            })
            .collect()
    })?;
    let mut merged = measures[0].clone();
    for m in &measures[1..] {
        merged.merge(m)?;
    }
    let fraction = concentration_fraction(
        &merged,
        &limit,
        k2_tot,
        &cfg.rates,
        cfg.occ_eps,
        cfg.occ_burn_in,
    )?;
    Ok((merged, fraction))
}

/// Concentration fraction at one scale.
#[derive(Debug, Clone)]
pub struct OccupationPoint {
    pub n: u64,
    pub fraction: f64,
    pub measure: OccupationMeasure,
}

/// Occupation concentration across scales, pooling `cfg.replicas` runs at
/// each n.
pub fn occupation_study(cfg: &ExperimentConfig, n_values: &[u64]) -> Result<Vec<OccupationPoint>> {
    n_values
        .iter()
        .map(|&n| {
            let cfg_n = ExperimentConfig { n, ..cfg.clone() };
            let (measure, fraction) = occupation_for_config(&cfg_n)?;
            Ok(OccupationPoint {
                n,
                fraction,
                measure,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ScaledState;

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig {
            n: 100,
            t_end: 2.0,
            replicas: 8,
            grid_points: 201,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn mean_path_tracks_the_limit() {
        let study = mean_slow_path(&small_cfg()).unwrap();
        assert_eq!(study.times.len(), 201);
        assert_eq!(study.zv_mean[0], study.zv_limit[0]);
        assert!(study.sup_gap < 0.15, "sup gap {}", study.sup_gap);
        assert!(study.zv_limit.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn results_do_not_depend_on_thread_count() {
        let mut cfg = small_cfg();
        cfg.threads = 1;
        let one = mean_slow_path(&cfg).unwrap();
        cfg.threads = 3;
        let three = mean_slow_path(&cfg).unwrap();
        assert_eq!(one.zv_mean, three.zv_mean);
        assert_eq!(one.sup_gap, three.sup_gap);

        let samples_one = {
            cfg.threads = 1;
            empirical_terminal_fluctuations(&cfg, 1.0).unwrap()
        };
        let samples_three = {
            cfg.threads = 3;
            empirical_terminal_fluctuations(&cfg, 1.0).unwrap()
        };
        assert_eq!(samples_one, samples_three);
    }

    #[test]
    fn convergence_errors_shrink_with_n() {
        let cfg = ExperimentConfig {
            t_end: 1.0,
            replicas: 6,
            grid_points: 101,
            ..ExperimentConfig::default()
        };
        let report = convergence_study(&cfg, &[50, 200, 800]).unwrap();
        assert_eq!(report.mean_sup_errors.len(), 3);
        assert!(report.mean_sup_errors.windows(2).all(|w| w[1] < w[0]));
        assert!(report.fit.slope < -0.2, "slope {}", report.fit.slope);
    }

    #[test]
    fn enzyme_free_fluctuations_vanish() {
        let cfg = ExperimentConfig {
            z0: ScaledState::new(1.0, 0.0, 0.0, 0.0),
            n: 50,
            t_end: 1.0,
            replicas: 4,
            ..ExperimentConfig::default()
        };
        let samples = empirical_terminal_fluctuations(&cfg, 1.0).unwrap();
        assert_eq!(samples, vec![0.0; 4]);
        assert!(empirical_terminal_fluctuations(&cfg, 2.0).is_err());
    }

    #[test]
    fn pooled_occupation_mass_counts_every_replica() {
        let cfg = ExperimentConfig {
            n: 100,
            t_end: 2.0,
            replicas: 3,
            occ_bins_state: 50,
            occ_bins_time: 10,
            ..ExperimentConfig::default()
        };
        let (measure, fraction) = occupation_for_config(&cfg).unwrap();
        assert!((measure.total_mass() - 3.0 * 2.0).abs() < 1e-9);
        assert!((0.0..=1.0).contains(&fraction));

        let points = occupation_study(&cfg, &[50, 100]).unwrap();
        assert_eq!(points.len(), 2);
        assert!(points.iter().all(|p| (0.0..=1.0).contains(&p.fraction)));
    }
}
