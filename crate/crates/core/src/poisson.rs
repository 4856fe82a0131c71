//! Closed-form solution of the Poisson equation for the fast generator.
//!
//! The function F satisfies drift(z_c) * dF/dz_c = -(z_c - z_minus) with
//! F(z_v, z_minus) = 0, and its derivatives carry explicit bounds in terms
//! of the rate constants alone. Those bounds, and the residual of the
//! equation itself, are the analytic backbone checked by the verification
//! suites.

use crate::error::{Error, Result};
use crate::model::RateConstants;
use crate::tqssa::{equilibria, fast_drift, Equilibria};

/// Slack tolerated on the boundary z_c = z_v so rounding at the edge of the
/// domain does not trip the guard.
const DOMAIN_SLACK: f64 = 1e-12;

/// Evaluation context fixing the conserved enzyme total and the rates.
#[derive(Debug, Clone, Copy)]
pub struct PoissonContext {
    k2_tot: f64,
    rates: RateConstants,
}

impl PoissonContext {
    /// Requires k2_tot > 0 and km1 > 0: the closed form and all of its
    /// bounds degenerate when either vanishes.
    pub fn new(k2_tot: f64, rates: RateConstants) -> Result<Self> {
        rates.validate()?;
        if !(k2_tot > 0.0 && k2_tot.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "Poisson analytics need a positive enzyme total, got {k2_tot}"
            )));
        }
        if rates.km1 <= 0.0 {
            return Err(Error::InvalidConfig(
                "Poisson analytics need km1 > 0".into(),
            ));
        }
        Ok(Self { k2_tot, rates })
    }

    pub fn k2_tot(&self) -> f64 {
        self.k2_tot
    }

    pub fn rates(&self) -> &RateConstants {
        &self.rates
    }

    /// Fast-drift equilibria at this context's enzyme total.
    pub fn equilibria(&self, z_v: f64) -> Equilibria {
        equilibria(self.k2_tot, z_v, &self.rates)
    }

    fn check_domain(&self, z_v: f64, z_c: f64) -> Result<()> {
        if z_c > z_v + DOMAIN_SLACK || z_c < -DOMAIN_SLACK || !(z_v.is_finite() && z_c.is_finite())
        {
            return Err(Error::DomainViolation { z_v, z_c });
        }
        Ok(())
    }

    /// F(z_v, z_c) = -(1/k1) ln[(z_plus - z_c) / (z_plus - z_minus)].
    ///
    /// Evaluated as -ln_1p((z_minus - z_c)/(z_plus - z_minus)) / k1, which
    /// is exact at the centering point and stable near it.
    pub fn f(&self, z_v: f64, z_c: f64) -> Result<f64> {
        self.check_domain(z_v, z_c)?;
        let e = self.equilibria(z_v);
        Ok(-((e.z_minus - z_c) / (e.z_plus - e.z_minus)).ln_1p() / self.rates.k1)
    }

    /// The same value via the expanded form
    /// -(1/k1)[ln(z_plus - z_c) - ln(disc)/2 + ln(k1)], kept as a
    /// cross-check of the primary evaluation only.
    pub fn f_expanded(&self, z_v: f64, z_c: f64) -> Result<f64> {
        self.check_domain(z_v, z_c)?;
        let e = self.equilibria(z_v);
        Ok(-((e.z_plus - z_c).ln() - 0.5 * e.disc.ln() + self.rates.k1.ln()) / self.rates.k1)
    }

    /// dF/dz_c = 1 / (k1 (z_plus - z_c)); positive and at most 2/km1.
    pub fn df_dzc(&self, z_v: f64, z_c: f64) -> Result<f64> {
        self.check_domain(z_v, z_c)?;
        let e = self.equilibria(z_v);
        Ok(1.0 / (self.rates.k1 * (e.z_plus - z_c)))
    }

    /// d2F/dz_c2 = 1 / (k1 (z_plus - z_c)^2); at most 4 k1 / km1^2.
    pub fn d2f_dzc2(&self, z_v: f64, z_c: f64) -> Result<f64> {
        self.check_domain(z_v, z_c)?;
        let e = self.equilibria(z_v);
        Ok(1.0 / (self.rates.k1 * (e.z_plus - z_c).powi(2)))
    }

    /// dF/dz_v = -(1/k1)[dz_plus / (z_plus - z_c) - k1 a / disc], where
    /// a = (z_v - k2_tot) k1 + km1 so that 2 k1 a is the z_v-derivative of
    /// the discriminant.
    pub fn df_dzv(&self, z_v: f64, z_c: f64) -> Result<f64> {
        self.check_domain(z_v, z_c)?;
        let e = self.equilibria(z_v);
        let a = (z_v - self.k2_tot) * self.rates.k1 + self.rates.km1;
        Ok(-(e.dz_plus / (e.z_plus - z_c) - self.rates.k1 * a / e.disc) / self.rates.k1)
    }

    /// Residual of the Poisson equation: drift * dF/dz_c + (z_c - z_minus).
    /// Vanishes identically in exact arithmetic.
    pub fn residual(&self, z_v: f64, z_c: f64) -> Result<f64> {
        self.check_domain(z_v, z_c)?;
        let e = self.equilibria(z_v);
        let drift = fast_drift(self.k2_tot, z_v, z_c, &self.rates);
        Ok(drift / (self.rates.k1 * (e.z_plus - z_c)) + (z_c - e.z_minus))
    }

    /// Explicit pointwise bound on |F|: ln(2 b / km1) / k1 with
    /// b = (z_v + k2_tot) k1 + km1, a concrete instance of the logarithmic
    /// growth estimate.
    pub fn f_bound(&self, z_v: f64) -> f64 {
        let b = (z_v + self.k2_tot) * self.rates.k1 + self.rates.km1;
        (2.0 * b / self.rates.km1).ln() / self.rates.k1
    }
}
