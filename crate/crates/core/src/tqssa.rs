//! Equilibrium analytics of the fast binding-unbinding dynamics and
//! fixed-step integrators for the reduced slow models.
//!
//! The fast complex level relaxes under the drift
//! k1 (z_v - z_c)(k_tot - z_c) - km1 z_c, whose two roots organize
//! everything downstream: the slow limit ODE follows the stable root, the
//! fluctuation SDE is built from the root's derivatives, and the
//! occupation diagnostic measures concentration around the root.

use crate::error::{Error, Result};
use crate::model::RateConstants;

/// Both equilibrium points of the fast drift at fixed (k_tot, z_v), together
/// with the discriminant and the first two z_v-derivatives of each root.
///
/// With km1 = 0 and z_v = k_tot the roots collide and the derivative fields
/// are NaN; any km1 > 0 keeps the discriminant strictly positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibria {
    /// Stable root, in [0, min(z_v, k_tot)].
    pub z_minus: f64,
    /// Unstable root, at least km1 / (2 k1) above z_v.
    pub z_plus: f64,
    /// Discriminant ((z_v + k_tot) k1 + km1)^2 - 4 k1^2 z_v k_tot.
    pub disc: f64,
    /// d z_minus / d z_v, in [0, 1].
    pub dz_minus: f64,
    /// d z_plus / d z_v, in [0, 1].
    pub dz_plus: f64,
    /// Second z_v-derivative of z_minus (concave, so non-positive).
    pub d2z_minus: f64,
    /// Second z_v-derivative of z_plus.
    pub d2z_plus: f64,
}

/// Equilibrium analysis of the fast drift.
///
/// The unstable root uses the explicit quadratic formula; the stable root
/// comes from the product identity z_minus * z_plus = z_v * k_tot, which
/// stays accurate when the explicit formula would cancel catastrophically.
/// The discriminant is computed in the cancellation-free arrangement
/// a^2 + 4 k1 km1 k_tot with a = (z_v - k_tot) k1 + km1.
pub fn equilibria(k_tot: f64, z_v: f64, rates: &RateConstants) -> Equilibria {
    let k1 = rates.k1;
    let km1 = rates.km1;
    let a = (z_v - k_tot) * k1 + km1;
    let disc = a * a + 4.0 * k1 * km1 * k_tot;
    let sq = disc.sqrt();
    let b = (z_v + k_tot) * k1 + km1;
    let z_plus = (b + sq) / (2.0 * k1);
    let z_minus = if z_plus > 0.0 {
        z_v * k_tot / z_plus
    } else {
        0.0
    };
    let (dz_minus, dz_plus) = if a >= 0.0 {
        let dm = 2.0 * k1 * km1 * k_tot / (sq * (sq + a));
        (dm, 1.0 - dm)
    } else {
        let dp = 2.0 * k1 * km1 * k_tot / (sq * (sq - a));
        (1.0 - dp, dp)
    };
    let d2 = 2.0 * k1 * k1 * km1 * k_tot / (disc * sq);
    Equilibria {
        z_minus,
        z_plus,
        disc,
        dz_minus,
        dz_plus,
        d2z_minus: -d2,
        d2z_plus: d2,
    }
}

/// Relaxation drift of the complex level at fixed totals:
/// k1 (z_v - z_c)(k_tot - z_c) - km1 z_c.
pub fn fast_drift(k_tot: f64, z_v: f64, z_c: f64, rates: &RateConstants) -> f64 {
    rates.k1 * (z_v - z_c) * (k_tot - z_c) - rates.km1 * z_c
}

/// Fast generator applied to a function with derivative `g_prime`:
/// drift times g'(z_c).
pub fn apply_generator_b<G: Fn(f64) -> f64>(
    g_prime: G,
    k_tot: f64,
    z_v: f64,
    z_c: f64,
    rates: &RateConstants,
) -> f64 {
    fast_drift(k_tot, z_v, z_c, rates) * g_prime(z_c)
}

/// Which reduced slow model an `OdePath` solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReducedModel {
    /// Stochastic-limit total-substrate ODE: dZ_V/dt = -k2 z_minus(K2, Z_V).
    FllnTqssa,
    /// Classical total-substrate reduction, same root with km1 -> km1 + k2.
    DetTqssa,
    /// Classical free-substrate reduction dS/dt = -k2 e0 S / (km + S).
    DetSqssa,
}

impl ReducedModel {
    pub fn label(&self) -> &'static str {
        match self {
            ReducedModel::FllnTqssa => "flln_tqssa",
            ReducedModel::DetTqssa => "det_tqssa",
            ReducedModel::DetSqssa => "det_sqssa",
        }
    }
}

/// Smooth solution path of a reduced model on a fixed time grid.
///
/// Stores the value and the ODE right-hand side at every grid node, so
/// evaluation between nodes uses cubic Hermite interpolation of matching
/// fourth-order accuracy.
#[derive(Debug, Clone)]
pub struct OdePath {
    times: Vec<f64>,
    values: Vec<f64>,
    derivs: Vec<f64>,
    model: ReducedModel,
    clamped: bool,
}

impl OdePath {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn model(&self) -> ReducedModel {
        self.model
    }

    /// True when any integration step undershot zero and was clamped.
    pub fn clamped(&self) -> bool {
        self.clamped
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Value at `t` by cubic Hermite interpolation on the containing
    /// grid interval; exact at grid nodes.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let t0 = self.times[0];
        let t1 = self.t_end();
        if !(t0..=t1).contains(&t) {
            return Err(Error::HorizonMismatch { t, t0, t1 });
        }
        let i = self
            .times
            .partition_point(|&s| s <= t)
            .clamp(1, self.times.len() - 1)
            - 1;
        let (ta, tb) = (self.times[i], self.times[i + 1]);
        let dt = tb - ta;
        if dt == 0.0 {
            return Ok(self.values[i]);
        }
        let s = (t - ta) / dt;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Ok(h00 * self.values[i]
            + h10 * dt * self.derivs[i]
            + h01 * self.values[i + 1]
            + h11 * dt * self.derivs[i + 1])
    }
}

/// Substep count per grid interval: enough for a step of at most 1e-3,
/// never fewer than 10.
fn auto_substeps(spacing: f64) -> usize {
    ((spacing / 1e-3).ceil() as usize).max(10)
}

/// Classical fixed-step RK4 for dy/dt = rhs(t, y) recorded on `grid`.
///
/// A step landing below zero is clamped to zero and flagged; the reduced
/// models all have non-positive drift vanishing at zero, so the clamp only
/// absorbs rounding near an absorbing boundary.
fn integrate<R: Fn(f64, f64) -> f64>(
    rhs: R,
    y0: f64,
    grid: &[f64],
    model: ReducedModel,
    substeps: Option<usize>,
) -> Result<OdePath> {
    if grid.len() < 2 {
        return Err(Error::InvalidGrid(
            "ODE grid needs at least 2 points".into(),
        ));
    }
    let mut prev = f64::NEG_INFINITY;
    for &t in grid {
        if !t.is_finite() || t < prev {
            return Err(Error::InvalidGrid(
                "ODE grid must be finite and non-decreasing".into(),
            ));
        }
        prev = t;
    }
    if !(y0.is_finite() && y0 >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "initial ODE value must be finite and non-negative, got {y0}"
        )));
    }
    let mut values = Vec::with_capacity(grid.len());
    let mut derivs = Vec::with_capacity(grid.len());
    let mut clamped = false;
    let mut y = y0;
    values.push(y);
    derivs.push(rhs(grid[0], y));
    for w in grid.windows(2) {
        let (ta, tb) = (w[0], w[1]);
        let spacing = tb - ta;
        let m = substeps.unwrap_or_else(|| auto_substeps(spacing));
        let h = spacing / m as f64;
        let mut t = ta;
        for _ in 0..m {
            let k1 = rhs(t, y);
            let k2 = rhs(t + 0.5 * h, y + 0.5 * h * k1);
            let k3 = rhs(t + 0.5 * h, y + 0.5 * h * k2);
            let k4 = rhs(t + h, y + h * k3);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if y < 0.0 {
                y = 0.0;
                clamped = true;
            }
            t += h;
        }
        values.push(y);
        derivs.push(rhs(tb, y));
    }
    Ok(OdePath {
        times: grid.to_vec(),
        values,
        derivs,
        model,
        clamped,
    })
}

/// Slow limit of the total substrate: dZ_V/dt = -k2 z_minus(k2_tot, Z_V).
pub fn solve_flln_ode(
    z_v0: f64,
    k2_tot: f64,
    rates: &RateConstants,
    grid: &[f64],
) -> Result<OdePath> {
    let r = *rates;
    integrate(
        move |_, y| -r.k2 * equilibria(k2_tot, y, &r).z_minus,
        z_v0,
        grid,
        ReducedModel::FllnTqssa,
        None,
    )
}

/// Classical total-substrate reduction: the same stable root with the
/// unbinding constant enlarged to km1 + k2.
pub fn solve_det_tqssa(t0: f64, e0: f64, rates: &RateConstants, grid: &[f64]) -> Result<OdePath> {
    let shifted = RateConstants {
        k1: rates.k1,
        km1: rates.km1 + rates.k2,
        k2: rates.k2,
    };
    let k2 = rates.k2;
    integrate(
        move |_, y| -k2 * equilibria(e0, y, &shifted).z_minus,
        t0,
        grid,
        ReducedModel::DetTqssa,
        None,
    )
}

/// Classical free-substrate reduction: dS/dt = -k2 e0 S / (km + S).
pub fn solve_det_sqssa(s0: f64, e0: f64, rates: &RateConstants, grid: &[f64]) -> Result<OdePath> {
    let km = rates.km();
    let k2 = rates.k2;
    integrate(
        move |_, y| -k2 * e0 * y / (km + y),
        s0,
        grid,
        ReducedModel::DetSqssa,
        None,
    )
}
