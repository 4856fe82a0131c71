//! Domain types for the three-reaction Michaelis-Menten network
//! S + E <-> C -> P + E, in copy-number and scaled coordinates.
//!
//! The scale parameter n controls species abundance (X / n^alpha) and rate
//! magnitudes (kappa * n^beta), so one `ScalingRegime` value selects which
//! multiscale family a simulation lives in. The slow variable Z_V = Z_S + Z_C
//! is never stored; it is derived wherever needed so it can't drift out of
//! sync with its components.

use rand::SeedableRng;

use crate::error::{Error, Result};

/// Rate constants (kappa_1, kappa_{-1}, kappa_2), free of the scale parameter.
///
/// `km1` may be zero (irreversible binding); the equilibrium and Poisson
/// analytics additionally require `km1 > 0` and document that separately.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateConstants {
    /// Binding rate kappa_1, per concentration per time.
    pub k1: f64,
    /// Unbinding rate kappa_{-1}, per time.
    pub km1: f64,
    /// Product-formation rate kappa_2, per time.
    pub k2: f64,
}

impl RateConstants {
    pub fn new(k1: f64, km1: f64, k2: f64) -> Result<Self> {
        let r = Self { k1, km1, k2 };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.k1 > 0.0
            && self.km1 >= 0.0
            && self.k2 > 0.0
            && self.k1.is_finite()
            && self.km1.is_finite()
            && self.k2.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidRates {
                k1: self.k1,
                km1: self.km1,
                k2: self.k2,
            })
        }
    }

    /// Michaelis constant kappa_M = (kappa_{-1} + kappa_2) / kappa_1.
    pub fn km(&self) -> f64 {
        (self.km1 + self.k2) / self.k1
    }
}

/// Abundance and rate exponents (alpha_S, alpha_E, alpha_C, alpha_P,
/// beta_1, beta_{-1}, beta_2, gamma) defining a multiscale regime.
///
/// Species i has O(n^alpha_i) copies; reaction j fires with rate constant
/// kappa_j * n^beta_j; gamma speeds up the clock by n^gamma.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingRegime {
    pub alpha_s: f64,
    pub alpha_e: f64,
    pub alpha_c: f64,
    pub alpha_p: f64,
    pub beta_1: f64,
    pub beta_m1: f64,
    pub beta_2: f64,
    pub gamma: f64,
}

impl ScalingRegime {
    /// Total QSSA regime: every species abundant, unbinding sped up by n.
    pub const TQSSA: Self = Self {
        alpha_s: 1.0,
        alpha_e: 1.0,
        alpha_c: 1.0,
        alpha_p: 1.0,
        beta_1: 0.0,
        beta_m1: 1.0,
        beta_2: 0.0,
        gamma: 0.0,
    };

    /// Standard QSSA regime: enzyme and complex stay at O(1) copies.
    pub const SQSSA: Self = Self {
        alpha_s: 1.0,
        alpha_e: 0.0,
        alpha_c: 0.0,
        alpha_p: 1.0,
        beta_1: 0.0,
        beta_m1: 1.0,
        beta_2: 1.0,
        gamma: 0.0,
    };

    /// n^alpha for each species in (S, E, C, P) order.
    pub fn species_scales(&self, n: u64) -> [f64; 4] {
        [
            npow(n, self.alpha_s),
            npow(n, self.alpha_e),
            npow(n, self.alpha_c),
            npow(n, self.alpha_p),
        ]
    }
}

/// n^e, exact for the exponents 0 and 1 used by the built-in regimes.
pub(crate) fn npow(n: u64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if e == 1.0 {
        n as f64
    } else {
        (n as f64).powf(e)
    }
}

/// Integer copy numbers of (S, E, C, P).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CopyState {
    pub xs: u64,
    pub xe: u64,
    pub xc: u64,
    pub xp: u64,
}

impl CopyState {
    pub fn new(xs: u64, xe: u64, xc: u64, xp: u64) -> Self {
        Self { xs, xe, xc, xp }
    }

    /// Integer conserved pair (xs + xc + xp, xe + xc).
    pub fn conserved_copies(&self) -> (u64, u64) {
        (self.xs + self.xc + self.xp, self.xe + self.xc)
    }

    /// Scaled coordinates X_i / n^alpha_i.
    pub fn to_scaled(&self, n: u64, regime: &ScalingRegime) -> ScaledState {
        let s = regime.species_scales(n);
        ScaledState {
            zs: self.xs as f64 / s[0],
            ze: self.xe as f64 / s[1],
            zc: self.xc as f64 / s[2],
            zp: self.xp as f64 / s[3],
        }
    }
}

/// Scaled species levels (Z_S, Z_E, Z_C, Z_P).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledState {
    pub zs: f64,
    pub ze: f64,
    pub zc: f64,
    pub zp: f64,
}

impl ScaledState {
    pub fn new(zs: f64, ze: f64, zc: f64, zp: f64) -> Self {
        Self { zs, ze, zc, zp }
    }

    /// Slow variable Z_V = Z_S + Z_C (always derived, never stored).
    pub fn zv(&self) -> f64 {
        self.zs + self.zc
    }

    pub fn non_negative(&self) -> bool {
        self.zs >= 0.0 && self.ze >= 0.0 && self.zc >= 0.0 && self.zp >= 0.0
    }
}

/// Conserved totals K_1 = Z_S + Z_C + Z_P and K_2 = Z_E + Z_C in scaled units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservedQuantities {
    pub k1_tot: f64,
    pub k2_tot: f64,
}

/// Conserved totals of a scaled state.
pub fn conserved(z: &ScaledState) -> ConservedQuantities {
    ConservedQuantities {
        k1_tot: z.zs + z.zc + z.zp,
        k2_tot: z.ze + z.zc,
    }
}

/// Conserved totals of an integer copy state, reported in scaled units.
pub fn conserved_from_copy(x: &CopyState, n: u64, regime: &ScalingRegime) -> ConservedQuantities {
    conserved(&x.to_scaled(n, regime))
}

/// Initial copy numbers floor(n^alpha * z0), per species.
///
/// The product is snapped to the nearest integer first when it sits within
/// 1e-9 (relative) of one, so that a real product which is mathematically an
/// integer cannot land one below it through binary rounding.
pub fn initial_copy_state(z0: &ScaledState, n: u64, regime: &ScalingRegime) -> Result<CopyState> {
    if n == 0 {
        return Err(Error::InvalidConfig(
            "scale parameter n must be >= 1".into(),
        ));
    }
    if !z0.non_negative() {
        return Err(Error::InvalidConfig(format!(
            "initial scaled state has a negative component: {z0:?}"
        )));
    }
    let s = regime.species_scales(n);
    Ok(CopyState {
        xs: floor_count(s[0] * z0.zs),
        xe: floor_count(s[1] * z0.ze),
        xc: floor_count(s[2] * z0.zc),
        xp: floor_count(s[3] * z0.zp),
    })
}

fn floor_count(v: f64) -> u64 {
    let r = v.round();
    if (v - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r as u64
    } else {
        v.floor() as u64
    }
}

/// Piecewise-constant sample path of the jump process.
///
/// `times[i]` is the start of the i-th constant segment; the state on
/// [times[i], times[i+1]) is `states[i]`, and the last segment extends to
/// `t_end`. States are stored as exact integer copy numbers and scaled on
/// access.
#[derive(Debug, Clone)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<CopyState>,
    n: u64,
    regime: ScalingRegime,
    seed: u64,
    t_end: f64,
}

impl Trajectory {
    pub(crate) fn from_parts(
        times: Vec<f64>,
        states: Vec<CopyState>,
        n: u64,
        regime: ScalingRegime,
        seed: u64,
        t_end: f64,
    ) -> Self {
        debug_assert_eq!(times.len(), states.len());
        debug_assert!(!times.is_empty() && times[0] == 0.0);
        Self {
            times,
            states,
            n,
            regime,
            seed,
            t_end,
        }
    }

    /// Number of constant segments (jump count + 1).
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn regime(&self) -> &ScalingRegime {
        &self.regime
    }

    /// Seed of the replica RNG stream that produced this path.
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn copy_state(&self, i: usize) -> &CopyState {
        &self.states[i]
    }

    pub fn copy_states(&self) -> &[CopyState] {
        &self.states
    }

    pub fn scaled_state(&self, i: usize) -> ScaledState {
        self.states[i].to_scaled(self.n, &self.regime)
    }

    pub fn scaled_states(&self) -> impl Iterator<Item = ScaledState> + '_ {
        self.states
            .iter()
            .map(|x| x.to_scaled(self.n, &self.regime))
    }

    /// The slow component as a compact piecewise-constant path, keeping only
    /// the segments where Z_V actually changes.
    pub fn zv_path(&self) -> ZvPath {
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (t, z) in self.times.iter().zip(self.scaled_states()) {
            let zv = z.zv();
            if values.last() != Some(&zv) {
                times.push(*t);
                values.push(zv);
            }
        }
        ZvPath {
            times,
            values,
            t_end: self.t_end,
        }
    }
}

/// Piecewise-constant path of the slow variable Z_V alone.
///
/// `values[i]` holds on [times[i], times[i+1]), the final value to `t_end`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZvPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub t_end: f64,
}

impl ZvPath {
    /// Value at time t under the cadlag convention.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.t_end).contains(&t) {
            return Err(Error::GridOutOfRange {
                value: t,
                t_end: self.t_end,
            });
        }
        let idx = self.times.partition_point(|&s| s <= t);
        Ok(self.values[idx - 1])
    }

    /// Cadlag samples on a non-decreasing grid within [0, t_end].
    pub fn sample_on_grid(&self, grid: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(grid.len());
        let mut i = 0usize;
        let mut prev = f64::NEG_INFINITY;
        for &g in grid {
            if g < prev {
                return Err(Error::InvalidGrid("grid must be non-decreasing".into()));
            }
            prev = g;
            if !(0.0..=self.t_end).contains(&g) {
                return Err(Error::GridOutOfRange {
                    value: g,
                    t_end: self.t_end,
                });
            }
            while i + 1 < self.times.len() && self.times[i + 1] <= g {
                i += 1;
            }
            out.push(self.values[i]);
        }
        Ok(out)
    }
}

/// Everything needed to run one experiment: model, scale, horizon, replica
/// count, seeding, output grid, and the knobs of the downstream analyses.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub rates: RateConstants,
    pub regime: ScalingRegime,
    pub n: u64,
    pub z0: ScaledState,
    pub t_end: f64,
    pub replicas: usize,
    pub master_seed: u64,
    /// Number of points of the uniform output grid on [0, t_end], ends included.
    pub grid_points: usize,
    /// Limit of sqrt(n) * (K_2^(n) - K_2) fed to the fluctuation SDE drift.
    pub k2_tilde: f64,
    /// Euler-Maruyama step of the fluctuation SDE.
    pub sde_dt: f64,
    /// Abort threshold for the jump count of a single replica.
    pub jump_cap: u64,
    /// Worker threads for replica-parallel runs; 0 means all available.
    pub threads: usize,
    /// Half-width of the concentration tube around the stable equilibrium.
    pub occ_eps: f64,
    /// Initial time span excluded by the occupation concentration diagnostic.
    pub occ_burn_in: f64,
    /// State-space bins per axis of the occupation measure.
    pub occ_bins_state: usize,
    /// Time bins of the occupation measure.
    pub occ_bins_time: usize,
}

impl Default for ExperimentConfig {
    /// The reference experiment: kappa = (1, 1, 0.75), K_1 = 1.0, K_2 = 0.1,
    /// all substrate unbound at t = 0, n = 1000, horizon 10.
    fn default() -> Self {
        Self {
            rates: RateConstants {
                k1: 1.0,
                km1: 1.0,
                k2: 0.75,
            },
            regime: ScalingRegime::TQSSA,
            n: 1000,
            z0: ScaledState::new(1.0, 0.1, 0.0, 0.0),
            t_end: 10.0,
            replicas: 100,
            master_seed: 42,
            grid_points: 1001,
            k2_tilde: 0.0,
            sde_dt: 1e-3,
            jump_cap: 1_000_000_000,
            threads: 0,
            occ_eps: 0.05,
            occ_burn_in: 0.1,
            occ_bins_state: 200,
            occ_bins_time: 50,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.rates.validate()?;
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n == 0 {
            return fail("n must be >= 1".into());
        }
        if !z_finite(&self.z0) || !self.z0.non_negative() {
            return fail(format!(
                "z0 must be finite and non-negative, got {:?}",
                self.z0
            ));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return fail(format!(
                "t_end must be positive and finite, got {}",
                self.t_end
            ));
        }
        if self.replicas == 0 {
            return fail("replicas must be >= 1".into());
        }
        if self.grid_points < 2 {
            return fail("grid_points must be >= 2".into());
        }
        if !(self.sde_dt > 0.0 && self.sde_dt.is_finite()) {
            return fail(format!("sde_dt must be positive, got {}", self.sde_dt));
        }
        if self.jump_cap == 0 {
            return fail("jump_cap must be >= 1".into());
        }
        if self.occ_eps <= 0.0 || self.occ_eps.is_nan() {
            return fail(format!("occ_eps must be positive, got {}", self.occ_eps));
        }
        if !(0.0..self.t_end).contains(&self.occ_burn_in) {
            return fail(format!(
                "occ_burn_in must lie in [0, t_end), got {}",
                self.occ_burn_in
            ));
        }
        if self.occ_bins_state == 0 || self.occ_bins_time == 0 {
            return fail("occupation bin counts must be >= 1".into());
        }
        Ok(())
    }

    /// Uniform output grid on [0, t_end] with `grid_points` points.
    pub fn grid(&self) -> Vec<f64> {
        let m = self.grid_points;
        (0..m)
            .map(|i| self.t_end * i as f64 / (m - 1) as f64)
            .collect()
    }

    pub fn initial_copy_state(&self) -> Result<CopyState> {
        initial_copy_state(&self.z0, self.n, &self.regime)
    }

    /// Conserved totals of the realized (floored) initial copy state.
    pub fn conserved(&self) -> Result<ConservedQuantities> {
        Ok(conserved_from_copy(
            &self.initial_copy_state()?,
            self.n,
            &self.regime,
        ))
    }
}

fn z_finite(z: &ScaledState) -> bool {
    z.zs.is_finite() && z.ze.is_finite() && z.zc.is_finite() && z.zp.is_finite()
}

/// The RNG driving every stochastic component; algorithm pinned so that a
/// (master_seed, replica) pair reproduces bit-identical output across runs,
/// platforms, and thread counts.
pub type ReplicaRng = rand_chacha::ChaCha8Rng;

/// Deterministic, collision-free per-replica seed.
///
/// For a fixed master seed the map replica -> seed is a composition of
/// bijections on u64 (odd-multiplier affine step, xor, and the SplitMix64
/// finalizer twice), so distinct replicas can never collide.
pub fn derive_seed(master_seed: u64, replica_index: u64) -> u64 {
    let injected = mix64(
        replica_index
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(0x6a09_e667_f3bc_c909),
    );
    mix64(master_seed ^ injected)
}

/// RNG for one replica stream.
pub fn replica_rng(master_seed: u64, replica_index: u64) -> ReplicaRng {
    ReplicaRng::seed_from_u64(derive_seed(master_seed, replica_index))
}

fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
