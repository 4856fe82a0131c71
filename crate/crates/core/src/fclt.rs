//! Fluctuations of the slow variable around its deterministic limit.
//!
//! The centered, sqrt(n)-scaled deviation U = sqrt(n)(Z_V^(n) - Z_V)
//! converges to a linear diffusion whose coefficients depend on time only
//! through the limit path Z_V. This module extracts empirical fluctuation
//! paths from simulations, integrates the limiting SDE by Euler-Maruyama,
//! and evaluates the SDE's exact mean and variance recursions for
//! verification without Monte Carlo error.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{replica_rng, RateConstants, Trajectory, ZvPath};
use crate::ssa;
use crate::tqssa::{equilibria, OdePath};

/// Inputs of the limiting SDE: initial deviation, enzyme-total deviation
/// limit, conserved enzyme total, rates, the deterministic slow path, the
/// integrator step, and the noise seed.
#[derive(Debug, Clone)]
pub struct FcltParams {
    pub u0: f64,
    /// Limit of sqrt(n) (K_2^(n) - K_2); zero when the initial condition is
    /// exactly representable at scale n.
    pub k2_tilde: f64,
    pub k2_tot: f64,
    pub rates: RateConstants,
    /// Deterministic slow limit covering the integration horizon.
    pub zv_path: OdePath,
    pub dt: f64,
    pub seed: u64,
}

impl FcltParams {
    pub fn validate(&self) -> Result<()> {
        self.rates.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "SDE step must be positive, got {}",
                self.dt
            )));
        }
        Ok(())
    }
}

/// One fluctuation path sampled on a fixed time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FluctuationPath {
    times: Vec<f64>,
    u_values: Vec<f64>,
}

impl FluctuationPath {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn u_values(&self) -> &[f64] {
        &self.u_values
    }

    pub fn terminal(&self) -> f64 {
        *self.u_values.last().unwrap()
    }
}

/// Drift of the limiting SDE at deviation `u` and time `t`:
/// -k2 k2_tilde k1 (Z_V - z_minus)/sqrt(disc) - k2 dz_minus u.
///
/// The first term is -k2 k2_tilde times the sensitivity of the stable root
/// to the enzyme total; the second reverts the deviation toward zero at
/// rate k2 dz_minus >= 0.
pub fn fclt_drift(u: f64, t: f64, params: &FcltParams) -> Result<f64> {
    let zv = params.zv_path.value_at(t)?;
    let e = equilibria(params.k2_tot, zv, &params.rates);
    let k_sens = params.rates.k1 * (zv - e.z_minus) / e.disc.sqrt();
    Ok(-params.rates.k2 * params.k2_tilde * k_sens - params.rates.k2 * e.dz_minus * u)
}

/// Diffusion of the limiting SDE: sqrt(k2 z_minus(k2_tot, Z_V(t))).
pub fn fclt_diffusion(t: f64, params: &FcltParams) -> Result<f64> {
    let zv = params.zv_path.value_at(t)?;
    let e = equilibria(params.k2_tot, zv, &params.rates);
    Ok((params.rates.k2 * e.z_minus.max(0.0)).sqrt())
}

/// SDE coefficients frozen on the Euler-Maruyama grid, shared by every
/// replica and by the exact moment recursions so they all see identical
/// numbers.
struct CoefficientTable {
    /// Grid 0 = t_0 < ... < t_m = t_end.
    times: Vec<f64>,
    /// Step sizes, len m.
    h: Vec<f64>,
    /// Constant drift term at the left endpoint of each step.
    kterm: Vec<f64>,
    /// Linear drift slope at the left endpoint of each step.
    slope: Vec<f64>,
    /// Diffusion at the left endpoint of each step.
    sigma: Vec<f64>,
}

fn coefficient_table(params: &FcltParams, t_end: f64) -> Result<CoefficientTable> {
    params.validate()?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "SDE horizon must be positive, got {t_end}"
        )));
    }
    let m = ((t_end / params.dt).ceil() as usize).max(1);
    let mut times = Vec::with_capacity(m + 1);
    for k in 0..m {
        times.push(k as f64 * params.dt);
    }
    times.push(t_end);
    let mut h = Vec::with_capacity(m);
    let mut kterm = Vec::with_capacity(m);
    let mut slope = Vec::with_capacity(m);
    let mut sigma = Vec::with_capacity(m);
    for k in 0..m {
        h.push(times[k + 1] - times[k]);
        let zv = params.zv_path.value_at(times[k])?;
        let e = equilibria(params.k2_tot, zv, &params.rates);
        let k_sens = params.rates.k1 * (zv - e.z_minus) / e.disc.sqrt();
        kterm.push(-params.rates.k2 * params.k2_tilde * k_sens);
        slope.push(-params.rates.k2 * e.dz_minus);
        sigma.push((params.rates.k2 * e.z_minus.max(0.0)).sqrt());
    }
    Ok(CoefficientTable {
        times,
        h,
        kterm,
        slope,
        sigma,
    })
}

fn em_path(
    table: &CoefficientTable,
    u0: f64,
    noise: Option<&mut crate::model::ReplicaRng>,
) -> Vec<f64> {
    let mut u = u0;
    let mut out = Vec::with_capacity(table.times.len());
    out.push(u);
    match noise {
        Some(rng) => {
            for k in 0..table.h.len() {
                let h = table.h[k];
                let xi: f64 = rng.sample(StandardNormal);
                u += h * (table.kterm[k] + table.slope[k] * u) + table.sigma[k] * h.sqrt() * xi;
                out.push(u);
            }
        }
        None => {
            for k in 0..table.h.len() {
                let h = table.h[k];
                u += h * (table.kterm[k] + table.slope[k] * u);
                out.push(u);
            }
        }
    }
    out
}

/// Euler-Maruyama paths of the limiting SDE on [0, horizon of zv_path],
/// one per replica, each driven by its own deterministic stream.
pub fn simulate_fclt_sde(params: &FcltParams, replicas: usize) -> Result<Vec<FluctuationPath>> {
    let table = coefficient_table(params, params.zv_path.t_end())?;
    let mut out = Vec::with_capacity(replicas);
    for r in 0..replicas {
        let mut rng = replica_rng(params.seed, r as u64);
        out.push(FluctuationPath {
            times: table.times.clone(),
            u_values: em_path(&table, params.u0, Some(&mut rng)),
        });
    }
    Ok(out)
}

/// Terminal SDE samples u(t) for `replicas` independent paths, without
/// retaining the paths.
pub fn terminal_samples(params: &FcltParams, replicas: usize, t: f64) -> Result<Vec<f64>> {
    let table = coefficient_table(params, t)?;
    let mut out = Vec::with_capacity(replicas);
    for r in 0..replicas {
        let mut rng = replica_rng(params.seed, r as u64);
        out.push(*em_path(&table, params.u0, Some(&mut rng)).last().unwrap());
    }
    Ok(out)
}

/// The noise-free Euler path: the same scheme with the Brownian increments
/// removed, solving the drift ODE du/dt = kterm(t) + slope(t) u.
pub fn drift_ode_path(params: &FcltParams) -> Result<FluctuationPath> {
    let table = coefficient_table(params, params.zv_path.t_end())?;
    Ok(FluctuationPath {
        u_values: em_path(&table, params.u0, None),
        times: table.times,
    })
}

/// Exact mean and variance of the Euler-Maruyama chain at `t`, from the
/// closed recursions m <- (1 + h s) m + h c and v <- (1 + h s)^2 v + h sigma^2.
/// This is the infinite-replica limit of the sampler at the same step size.
pub fn em_moments(params: &FcltParams, t: f64) -> Result<(f64, f64)> {
    let table = coefficient_table(params, t)?;
    let mut mean = params.u0;
    let mut var = 0.0f64;
    for k in 0..table.h.len() {
        let h = table.h[k];
        let g = 1.0 + h * table.slope[k];
        mean = g * mean + h * table.kterm[k];
        var = g * g * var + h * table.sigma[k] * table.sigma[k];
    }
    Ok((mean, var))
}

/// Variance of the limiting SDE itself at `t`, from the variance ODE
/// v' = 2 slope(t) v + sigma(t)^2 solved by fine-step RK4. Independent of
/// the Euler-Maruyama discretization.
pub fn sde_variance_quadrature(params: &FcltParams, t: f64, steps: usize) -> Result<f64> {
    params.validate()?;
    if steps == 0 {
        return Err(Error::InvalidConfig(
            "quadrature needs at least 1 step".into(),
        ));
    }
    let coeff = |s: f64| -> Result<(f64, f64)> {
        let zv = params.zv_path.value_at(s)?;
        let e = equilibria(params.k2_tot, zv, &params.rates);
        Ok((
            -params.rates.k2 * e.dz_minus,
            params.rates.k2 * e.z_minus.max(0.0),
        ))
    };
    let h = t / steps as f64;
    let mut v = 0.0f64;
    for k in 0..steps {
        let t0 = k as f64 * h;
        let (s0, q0) = coeff(t0)?;
        let (sh, qh) = coeff(t0 + 0.5 * h)?;
        let (s1, q1) = coeff(t0 + h)?;
        let f = |s: f64, q: f64, v: f64| 2.0 * s * v + q;
        let k1 = f(s0, q0, v);
        let k2 = f(sh, qh, v + 0.5 * h * k1);
        let k3 = f(sh, qh, v + 0.5 * h * k2);
        let k4 = f(s1, q1, v + h * k3);
        v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    Ok(v)
}

/// Empirical fluctuation path sqrt(n) (Z_V^(n)(t) - Z_V(t)) on `grid`.
pub fn empirical_fluctuation(
    traj: &Trajectory,
    zv_limit: &OdePath,
    grid: &[f64],
) -> Result<FluctuationPath> {
    let samples = ssa::sample_on_grid(traj, grid)?;
    let scale = (traj.n() as f64).sqrt();
    let mut u_values = Vec::with_capacity(grid.len());
    for (t, z) in grid.iter().zip(&samples) {
        u_values.push(scale * (z.zv() - zv_limit.value_at(*t)?));
    }
    Ok(FluctuationPath {
        times: grid.to_vec(),
        u_values,
    })
}

/// Same statistic computed from a compact slow-variable path, for
/// simulations too large to record in full.
pub fn empirical_fluctuation_from_zv(
    zv: &ZvPath,
    n: u64,
    zv_limit: &OdePath,
    grid: &[f64],
) -> Result<FluctuationPath> {
    let samples = zv.sample_on_grid(grid)?;
    let scale = (n as f64).sqrt();
    let mut u_values = Vec::with_capacity(grid.len());
    for (t, zv_n) in grid.iter().zip(&samples) {
        u_values.push(scale * (zv_n - zv_limit.value_at(*t)?));
    }
    Ok(FluctuationPath {
        times: grid.to_vec(),
        u_values,
    })
}

/// Pointwise mean and variance of a set of fluctuation paths sharing a grid.
#[derive(Debug, Clone)]
pub struct FluctuationSummary {
    pub times: Vec<f64>,
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub n_replicas: usize,
}

pub fn summarize(paths: &[FluctuationPath]) -> Result<FluctuationSummary> {
    let Some(first) = paths.first() else {
        return Err(Error::EmptySample);
    };
    let m = first.times.len();
    for p in paths {
        if p.times != first.times {
            return Err(Error::InvalidGrid(
                "fluctuation paths must share one grid to be summarized".into(),
            ));
        }
    }
    let nf = paths.len() as f64;
    let mut mean = vec![0.0f64; m];
    for p in paths {
        for (acc, u) in mean.iter_mut().zip(&p.u_values) {
            *acc += u / nf;
        }
    }
    let mut var = vec![0.0f64; m];
    if paths.len() > 1 {
        for p in paths {
            for ((acc, u), mu) in var.iter_mut().zip(&p.u_values).zip(&mean) {
                *acc += (u - mu) * (u - mu) / (nf - 1.0);
            }
        }
    }
    Ok(FluctuationSummary {
        times: first.times.clone(),
        mean,
        var,
        n_replicas: paths.len(),
    })
}
