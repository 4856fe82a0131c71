//! Verification statistics: sup-norm path errors, log-log convergence-rate
//! fits, and Kolmogorov-Smirnov distances.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{replica_rng, Trajectory, ZvPath};
use crate::tqssa::OdePath;

/// Fixed stream for the bootstrap so fitted intervals are reproducible.
const BOOTSTRAP_SEED: u64 = 0x5eed_0f17;
const BOOTSTRAP_RESAMPLES: usize = 200;

/// Sup-norm distance between a piecewise-constant slow path and a
/// continuous limit path.
///
/// The supremum is evaluated at both ends of every constant segment as well
/// as on `grid`; because the limit is monotone between evaluations, the
/// segment endpoints realize the exact supremum, which a fixed grid alone
/// can miss by a whole jump.
pub fn sup_norm_error_from_zv(zv: &ZvPath, zv_limit: &OdePath, grid: &[f64]) -> Result<f64> {
    if zv.t_end > zv_limit.t_end() + 1e-9 {
        return Err(Error::HorizonMismatch {
            t: zv.t_end,
            t0: zv_limit.times()[0],
            t1: zv_limit.t_end(),
        });
    }
    let mut sup = 0.0f64;
    for i in 0..zv.times.len() {
        let v = zv.values[i];
        let t0 = zv.times[i];
        let t1 = if i + 1 < zv.times.len() {
            zv.times[i + 1]
        } else {
            zv.t_end
        };
        sup = sup.max((v - zv_limit.value_at(t0)?).abs());
        sup = sup.max((v - zv_limit.value_at(t1)?).abs());
    }
    for &g in grid {
        sup = sup.max((zv.value_at(g)? - zv_limit.value_at(g)?).abs());
    }
    Ok(sup)
}

/// Sup-norm distance of a recorded trajectory's slow component from the
/// limit path.
pub fn sup_norm_error(traj: &Trajectory, zv_limit: &OdePath, grid: &[f64]) -> Result<f64> {
    sup_norm_error_from_zv(&traj.zv_path(), zv_limit, grid)
}

/// Least-squares slope of log(error) against log(n), with a bootstrap
/// 90% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// (5th, 95th) percentile of the bootstrap slope distribution.
    pub ci_90: (f64, f64),
}

/// Mean sup-norm errors per scale, with the fitted convergence rate.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub n_values: Vec<u64>,
    pub mean_sup_errors: Vec<f64>,
    pub fit: RateFit,
}

/// Fit error ~ C n^slope by ordinary least squares in log-log coordinates.
///
/// Needs at least three strictly increasing n with positive errors. The
/// interval comes from 200 seeded resamples of the (n, error) pairs;
/// resamples with fewer than two distinct n carry no slope and are redrawn.
pub fn fit_rate(n_values: &[u64], errors: &[f64]) -> Result<RateFit> {
    if n_values.len() != errors.len() {
        return Err(Error::InvalidConfig(
            "rate fit needs one error per n".into(),
        ));
    }
    if n_values.len() < 3 {
        return Err(Error::DegenerateFit);
    }
    if !n_values.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidConfig(
            "rate fit needs strictly increasing n".into(),
        ));
    }
    if errors.iter().any(|e| *e <= 0.0 || !e.is_finite()) {
        return Err(Error::InvalidConfig(
            "rate fit needs positive finite errors".into(),
        ));
    }
    let x: Vec<f64> = n_values.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let (slope, intercept) = ols(&x, &y)?;

    let mut rng = replica_rng(BOOTSTRAP_SEED, 0);
    let m = x.len();
    let mut slopes = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    while slopes.len() < BOOTSTRAP_RESAMPLES {
        let mut xs = Vec::with_capacity(m);
        let mut ys = Vec::with_capacity(m);
        for _ in 0..m {
            let idx = rng.random_range(0..m);
            xs.push(x[idx]);
            ys.push(y[idx]);
        }
        if let Ok((s, _)) = ols(&xs, &ys) {
            slopes.push(s);
        }
    }
    slopes.sort_by(f64::total_cmp);
    let lo = slopes[(0.05 * BOOTSTRAP_RESAMPLES as f64) as usize];
    let hi = slopes[(0.95 * BOOTSTRAP_RESAMPLES as f64) as usize - 1];
    Ok(RateFit {
        slope,
        intercept,
        ci_90: (lo, hi),
    })
}

fn ols(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let n = x.len() as f64;
    let xm = x.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - xm) * (v - xm)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit);
    }
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - xm) * (v - ym)).sum();
    let slope = sxy / sxx;
    Ok((slope, ym - slope * xm))
}

/// Exact two-sample Kolmogorov-Smirnov statistic by sorted merge.
pub fn ks_distance(samples_a: &[f64], samples_b: &[f64]) -> Result<f64> {
    if samples_a.is_empty() || samples_b.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut a = samples_a.to_vec();
    let mut b = samples_b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// One-sample Kolmogorov-Smirnov statistic between an empirical sample and
/// a discrete distribution given as sorted (value, probability) atoms.
pub fn ks_distance_discrete(samples: &[f64], atoms: &[(f64, f64)]) -> Result<f64> {
    if samples.is_empty() || atoms.is_empty() {
        return Err(Error::EmptySample);
    }
    if !atoms.windows(2).all(|w| w[0].0 < w[1].0) {
        return Err(Error::InvalidConfig(
            "discrete atoms must have strictly increasing values".into(),
        ));
    }
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    if (total - 1.0).abs() > 1e-9 || atoms.iter().any(|a| a.1 < 0.0) {
        return Err(Error::InvalidConfig(format!(
            "atom probabilities must be a distribution, sum {total}"
        )));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let below = |x: f64| s.partition_point(|&v| v < x) as f64 / n;
    let at_or_below = |x: f64| s.partition_point(|&v| v <= x) as f64 / n;
    let mut d = 0.0f64;
    let mut cdf_prev = 0.0f64;
    for &(v, p) in atoms {
        let cdf = cdf_prev + p;
        d = d.max((below(v) - cdf_prev).abs());
        d = d.max((at_or_below(v) - cdf).abs());
        cdf_prev = cdf;
    }
    Ok(d)
}

/// Sample mean and unbiased variance.
pub fn sample_moments(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return Ok((mean, 0.0));
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, var))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ExperimentConfig, RateConstants, ScaledState};
    use crate::ssa::simulate;
    use crate::tqssa::solve_flln_ode;
    use rand_distr::StandardNormal;

    fn grid(t_end: f64, points: usize) -> Vec<f64> {
        (0..points)
            .map(|i| t_end * i as f64 / (points - 1) as f64)
            .collect()
    }

    fn constant_limit(value: f64, t_end: f64) -> OdePath {
        let frozen = RateConstants {
            k1: 1.0,
            km1: 1.0,
            k2: 0.0,
        };
        solve_flln_ode(value, 0.1, &frozen, &grid(t_end, 11)).unwrap()
    }

    fn constant_zv(value: f64, t_end: f64) -> ZvPath {
        ZvPath {
            times: vec![0.0],
            values: vec![value],
            t_end,
        }
    }

    #[test]
    fn sup_norm_trivial_cases() {
        let limit = constant_limit(0.7, 2.0);
        let same = constant_zv(0.7, 2.0);
        assert_eq!(
            sup_norm_error_from_zv(&same, &limit, &grid(2.0, 5)).unwrap(),
            0.0
        );
        let offset = constant_zv(0.9, 2.0);
        let e = sup_norm_error_from_zv(&offset, &limit, &grid(2.0, 5)).unwrap();
        assert!((e - 0.2).abs() < 1e-15);
    }

    #[test]
    fn sup_norm_is_exact_against_dense_evaluation() {
        let cfg = ExperimentConfig {
            n: 100,
            t_end: 2.0,
            ..ExperimentConfig::default()
        };
        let traj = simulate(&cfg, 6).unwrap();
        let limit = solve_flln_ode(1.0, 0.1, &cfg.rates, &grid(2.0, 201)).unwrap();
        let sup = sup_norm_error(&traj, &limit, &grid(2.0, 21)).unwrap();

        let zv = traj.zv_path();
        let dense = grid(2.0, 100_001);
        let mut brute = 0.0f64;
        for &t in &dense {
            brute = brute.max((zv.value_at(t).unwrap() - limit.value_at(t).unwrap()).abs());
        }
        assert!(sup >= brute - 1e-12);
        // The limit moves at most k2 K1 per unit time, so a 2e-5 grid can
        // undershoot the true supremum by at most ~1.5e-6.
        assert!(sup - brute <= 2e-6, "sup {sup} vs dense scan {brute}");
    }

    #[test]
    fn sup_norm_triangle_instance() {
        let a = constant_zv(0.9, 1.0);
        let limit_b = constant_limit(0.75, 1.0);
        let limit_c = constant_limit(0.6, 1.0);
        let g = grid(1.0, 3);
        let e_ac = sup_norm_error_from_zv(&a, &limit_c, &g).unwrap();
        let e_ab = sup_norm_error_from_zv(&a, &limit_b, &g).unwrap();
        let gap_bc = 0.15;
        assert!(e_ac <= e_ab + gap_bc + 1e-15);
    }

    #[test]
    fn sup_norm_rejects_horizon_overrun() {
        let zv = constant_zv(1.0, 5.0);
        let limit = constant_limit(1.0, 2.0);
        assert!(sup_norm_error_from_zv(&zv, &limit, &[]).is_err());
    }

    #[test]
    fn fit_rate_recovers_exact_power_laws() {
        let n = [100u64, 400, 1600, 6400];
        let half: Vec<f64> = n.iter().map(|&v| 3.0 * (v as f64).powf(-0.5)).collect();
        let fit = fit_rate(&n, &half).unwrap();
        assert!((fit.slope - (-0.5)).abs() < 1e-10);
        assert!(fit.ci_90.0 <= fit.slope && fit.slope <= fit.ci_90.1);

        let flat = [2.0f64, 2.0, 2.0, 2.0];
        let fit = fit_rate(&n, &flat).unwrap();
        assert!(fit.slope.abs() < 1e-12);
    }

    #[test]
    fn fit_rate_is_scale_invariant_and_validated() {
        let n = [100u64, 400, 1600, 6400];
        let e: Vec<f64> = n.iter().map(|&v| (v as f64).powf(-0.45) * 1.7).collect();
        let a = fit_rate(&n, &e).unwrap();
        let scaled: Vec<f64> = e.iter().map(|v| 123.0 * v).collect();
        let b = fit_rate(&n, &scaled).unwrap();
        assert!((a.slope - b.slope).abs() < 1e-12);
        assert!((a.ci_90.0 - b.ci_90.0).abs() < 1e-12);

        assert!(fit_rate(&n[..2], &e[..2]).is_err());
        assert!(fit_rate(&[100, 100, 200], &[1.0, 1.0, 1.0]).is_err());
        assert!(fit_rate(&[100, 200, 400], &[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn ks_distance_reference_cases() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_distance(&a, &a).unwrap(), 0.0);
        let b = [10.0, 11.0];
        assert_eq!(ks_distance(&a, &b).unwrap(), 1.0);
        assert_eq!(ks_distance(&[1.0, 3.0], &[2.0, 4.0]).unwrap(), 0.5);
        assert!(ks_distance(&a, &[]).is_err());
    }

    #[test]
    fn ks_distance_is_symmetric_and_bounded() {
        let mut rng = replica_rng(99, 0);
        let a: Vec<f64> = (0..500)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let b: Vec<f64> = (0..300)
            .map(|_| 0.3 + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let d1 = ks_distance(&a, &b).unwrap();
        let d2 = ks_distance(&b, &a).unwrap();
        assert_eq!(d1, d2);
        assert!((0.0..=1.0).contains(&d1));
    }

    #[test]
    fn ks_distance_of_matching_normal_samples_is_small() {
        let mut rng_a = replica_rng(2001, 0);
        let mut rng_b = replica_rng(2001, 1);
        let a: Vec<f64> = (0..2000)
            .map(|_| rng_a.sample::<f64, _>(StandardNormal))
            .collect();
        let b: Vec<f64> = (0..2000)
            .map(|_| rng_b.sample::<f64, _>(StandardNormal))
            .collect();
        let d = ks_distance(&a, &b).unwrap();
        assert!(d < 0.06, "KS distance {d}");
    }

    #[test]
    fn discrete_ks_hand_checked() {
        let samples = [0.0, 0.0, 0.0, 1.0];
        let atoms = [(0.0, 0.5), (1.0, 0.5)];
        let d = ks_distance_discrete(&samples, &atoms).unwrap();
        assert!((d - 0.25).abs() < 1e-15);

        let exact = [0.0, 0.0, 1.0, 1.0];
        assert_eq!(ks_distance_discrete(&exact, &atoms).unwrap(), 0.0);

        assert!(ks_distance_discrete(&samples, &[(0.0, 0.7), (1.0, 0.7)]).is_err());
        assert!(ks_distance_discrete(&[], &atoms).is_err());
    }

    #[test]
    fn moments_of_known_sample() {
        let (m, v) = sample_moments(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m, 2.5);
        assert!((v - 5.0 / 3.0).abs() < 1e-15);
        assert_eq!(sample_moments(&[7.0]).unwrap(), (7.0, 0.0));
        assert!(sample_moments(&[]).is_err());
    }

    #[test]
    fn enzyme_free_runs_have_zero_sup_error() {
        let cfg = ExperimentConfig {
            n: 50,
            t_end: 1.0,
            z0: ScaledState::new(1.0, 0.0, 0.0, 0.0),
            ..ExperimentConfig::default()
        };
        let traj = simulate(&cfg, 0).unwrap();
        let limit = solve_flln_ode(1.0, 0.0, &cfg.rates, &grid(1.0, 11)).unwrap();
        assert_eq!(sup_norm_error(&traj, &limit, &grid(1.0, 5)).unwrap(), 0.0);
    }
}
