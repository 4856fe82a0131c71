//! Empirical occupation measure of (Z_C, Z_V) over time, and the
//! concentration diagnostic showing the fast coordinate collapsing onto the
//! stable equilibrium curve as n grows.
//!
//! Sojourn times of the piecewise-constant path are accumulated exactly
//! into a 3-d histogram over (z_c, z_v, t). The accumulator is a
//! `PathObserver`, so large-n paths can be binned while they stream out of
//! the simulator without being stored.

use crate::error::{Error, Result};
use crate::model::{ExperimentConfig, RateConstants, Trajectory};
use crate::ssa::PathObserver;
use crate::tqssa::{equilibria, OdePath};

/// Relative slack tolerated above the upper edges before a value counts as
/// outside the binned region.
const EDGE_SLACK: f64 = 1e-12;

/// Uniform binning of [0, zc_max] x [0, zv_max] x [0, t_end].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinSpec {
    pub zc_max: f64,
    pub zv_max: f64,
    pub t_end: f64,
    pub bins_state: usize,
    pub bins_time: usize,
}

impl BinSpec {
    pub fn new(
        zc_max: f64,
        zv_max: f64,
        t_end: f64,
        bins_state: usize,
        bins_time: usize,
    ) -> Result<Self> {
        if !(zc_max > 0.0 && zv_max > 0.0 && t_end > 0.0) || bins_state == 0 || bins_time == 0 {
            return Err(Error::InvalidConfig(
                "occupation bins need positive extents and at least one bin per axis".into(),
            ));
        }
        Ok(Self {
            zc_max,
            zv_max,
            t_end,
            bins_state,
            bins_time,
        })
    }

    /// Bins covering the conserved substrate total [0, K_1] on both state
    /// axes and the configured horizon in time.
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let k1_tot = cfg.conserved()?.k1_tot;
        Self::new(
            k1_tot,
            k1_tot,
            cfg.t_end,
            cfg.occ_bins_state,
            cfg.occ_bins_time,
        )
    }

    fn index(&self, v: f64, max: f64, bins: usize) -> Option<usize> {
        if v < 0.0 || v > max * (1.0 + EDGE_SLACK) {
            return None;
        }
        let i = (v / max * bins as f64).floor() as usize;
        Some(i.min(bins - 1))
    }
}

/// Time spent in each (z_c, z_v, t) cell, exact for piecewise-constant
/// paths.
#[derive(Debug, Clone)]
pub struct OccupationMeasure {
    spec: BinSpec,
    /// Flattened [zc][zv][t] row-major mass array.
    mass: Vec<f64>,
}

/// One nonzero cell with its edges, for export.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMass {
    pub zc_lo: f64,
    pub zc_hi: f64,
    pub zv_lo: f64,
    pub zv_hi: f64,
    pub t_lo: f64,
    pub t_hi: f64,
    pub mass: f64,
}

impl OccupationMeasure {
    pub fn new(spec: BinSpec) -> Self {
        let len = spec.bins_state * spec.bins_state * spec.bins_time;
        Self {
            spec,
            mass: vec![0.0; len],
        }
    }

    pub fn spec(&self) -> &BinSpec {
        &self.spec
    }

    pub fn total_mass(&self) -> f64 {
        self.mass.iter().sum()
    }

    fn flat(&self, ic: usize, iv: usize, it: usize) -> usize {
        (ic * self.spec.bins_state + iv) * self.spec.bins_time + it
    }

    pub fn cell_mass(&self, ic: usize, iv: usize, it: usize) -> f64 {
        self.mass[self.flat(ic, iv, it)]
    }

    /// Add a sojourn of the state (z_c, z_v) over [t0, t1).
    fn deposit(&mut self, z_c: f64, z_v: f64, t0: f64, t1: f64) -> Result<()> {
        if t1 <= t0 {
            return Ok(());
        }
        let s = self.spec;
        let (Some(ic), Some(iv)) = (
            s.index(z_c, s.zc_max, s.bins_state),
            s.index(z_v, s.zv_max, s.bins_state),
        ) else {
            return Err(Error::BinCoverage { z_c, z_v, t: t0 });
        };
        let dt_bin = s.t_end / s.bins_time as f64;
        let it0 = s
            .index(t0, s.t_end, s.bins_time)
            .ok_or(Error::BinCoverage { z_c, z_v, t: t0 })?;
        let it1 = s
            .index(t1, s.t_end, s.bins_time)
            .ok_or(Error::BinCoverage { z_c, z_v, t: t1 })?;
        for it in it0..=it1 {
            let lo = (it as f64 * dt_bin).max(t0);
            let hi = ((it + 1) as f64 * dt_bin).min(t1);
            if hi > lo {
                let idx = self.flat(ic, iv, it);
                self.mass[idx] += hi - lo;
            }
        }
        Ok(())
    }

    /// Elementwise merge of a measure accumulated over another path with the
    /// same binning.
    pub fn merge(&mut self, other: &OccupationMeasure) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::InvalidConfig(
                "cannot merge occupation measures with different bins".into(),
            ));
        }
        for (a, b) in self.mass.iter_mut().zip(&other.mass) {
            *a += b;
        }
        Ok(())
    }

    /// Mass summed over z_c and time bin `it`, one value per z_v bin.
    pub fn zv_marginal_at(&self, it: usize) -> Vec<f64> {
        let s = self.spec;
        let mut out = vec![0.0; s.bins_state];
        for ic in 0..s.bins_state {
            for (iv, acc) in out.iter_mut().enumerate() {
                *acc += self.cell_mass(ic, iv, it);
            }
        }
        out
    }

    pub fn nonzero_cells(&self) -> Vec<CellMass> {
        let s = self.spec;
        let wc = s.zc_max / s.bins_state as f64;
        let wv = s.zv_max / s.bins_state as f64;
        let wt = s.t_end / s.bins_time as f64;
        let mut out = Vec::new();
        for ic in 0..s.bins_state {
            for iv in 0..s.bins_state {
                for it in 0..s.bins_time {
                    let m = self.cell_mass(ic, iv, it);
                    if m > 0.0 {
                        out.push(CellMass {
                            zc_lo: ic as f64 * wc,
                            zc_hi: (ic + 1) as f64 * wc,
                            zv_lo: iv as f64 * wv,
                            zv_hi: (iv + 1) as f64 * wv,
                            t_lo: it as f64 * wt,
                            t_hi: (it + 1) as f64 * wt,
                            mass: m,
                        });
                    }
                }
            }
        }
        out
    }
}

/// Streaming accumulator: bins each path segment as it arrives.
pub struct OccupationAccumulator {
    measure: OccupationMeasure,
    n: u64,
    regime: crate::model::ScalingRegime,
}

impl OccupationAccumulator {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        Ok(Self {
            measure: OccupationMeasure::new(BinSpec::from_config(cfg)?),
            n: cfg.n,
            regime: cfg.regime,
        })
    }

    pub fn finish(self) -> OccupationMeasure {
        self.measure
    }
}

impl PathObserver for OccupationAccumulator {
    fn segment(
        &mut self,
        t0: f64,
        t1: f64,
        x: &crate::model::CopyState,
        _last: bool,
    ) -> Result<()> {
        let z = x.to_scaled(self.n, &self.regime);
        self.measure.deposit(z.zc, z.zv(), t0, t1)
    }
}

/// Exact occupation measure of a recorded trajectory.
pub fn compute_occupation(traj: &Trajectory, spec: BinSpec) -> Result<OccupationMeasure> {
    let mut m = OccupationMeasure::new(spec);
    let times = traj.times();
    for i in 0..times.len() {
        let t1 = if i + 1 < times.len() {
            times[i + 1]
        } else {
            traj.t_end()
        };
        let z = traj.scaled_state(i);
        m.deposit(z.zc, z.zv(), times[i], t1)?;
    }
    Ok(m)
}

/// Fraction of post-burn-in mass lying in the tube
/// |z_c - z_minus(k2_tot, Z_V(t))| <= eps, with cell centers standing in
/// for the cell and time-bin mass clipped by its overlap with [t_burn, T].
pub fn concentration_fraction(
    occ: &OccupationMeasure,
    zv_limit: &OdePath,
    k2_tot: f64,
    rates: &RateConstants,
    eps: f64,
    t_burn: f64,
) -> Result<f64> {
    if eps <= 0.0 || eps.is_nan() {
        return Err(Error::InvalidConfig(format!(
            "tube half-width must be positive, got {eps}"
        )));
    }
    let s = *occ.spec();
    if !(0.0..s.t_end).contains(&t_burn) {
        return Err(Error::InvalidConfig(format!(
            "burn-in must lie in [0, t_end), got {t_burn}"
        )));
    }
    let wc = s.zc_max / s.bins_state as f64;
    let wt = s.t_end / s.bins_time as f64;
    let mut inside = 0.0f64;
    let mut total = 0.0f64;
    for it in 0..s.bins_time {
        let t_lo = it as f64 * wt;
        let t_hi = t_lo + wt;
        let weight = ((t_hi - t_lo.max(t_burn)) / wt).clamp(0.0, 1.0);
        if weight == 0.0 {
            continue;
        }
        let t_center = (t_lo + t_hi) / 2.0;
        let zv_lim = zv_limit.value_at(t_center.min(zv_limit.t_end()))?;
        let target = equilibria(k2_tot, zv_lim, rates).z_minus;
        for ic in 0..s.bins_state {
            let zc_center = (ic as f64 + 0.5) * wc;
            let in_tube = (zc_center - target).abs() <= eps;
            for iv in 0..s.bins_state {
                let m = occ.cell_mass(ic, iv, it) * weight;
                total += m;
                if in_tube {
                    inside += m;
                }
            }
        }
    }
    if total <= 0.0 {
        return Err(Error::EmptySample);
    }
    Ok(inside / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CopyState, ScalingRegime};
    use crate::ssa::{simulate, simulate_with_observer};
    use crate::tqssa::solve_flln_ode;

    fn fig_cfg(n: u64, t_end: f64) -> ExperimentConfig {
        ExperimentConfig {
            n,
            t_end,
            ..ExperimentConfig::default()
        }
    }

    fn manual_trajectory(
        times: Vec<f64>,
        states: Vec<CopyState>,
        n: u64,
        t_end: f64,
    ) -> Trajectory {
        Trajectory::from_parts(times, states, n, ScalingRegime::TQSSA, 0, t_end)
    }

    #[test]
    fn constant_trajectory_fills_one_state_cell_across_time() {
        let spec = BinSpec::new(1.0, 1.0, 4.0, 10, 4).unwrap();
        let traj = manual_trajectory(vec![0.0], vec![CopyState::new(40, 0, 15, 0)], 100, 4.0);
        let occ = compute_occupation(&traj, spec).unwrap();
        assert!((occ.total_mass() - 4.0).abs() < 1e-12);
        for it in 0..4 {
            assert!((occ.cell_mass(1, 5, it) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_segment_path_splits_mass_evenly() {
        let spec = BinSpec::new(1.0, 1.0, 2.0, 4, 1).unwrap();
        let traj = manual_trajectory(
            vec![0.0, 1.0],
            vec![CopyState::new(10, 9, 0, 0), CopyState::new(7, 6, 3, 0)],
            10,
            2.0,
        );
        let occ = compute_occupation(&traj, spec).unwrap();
        assert!((occ.total_mass() - 2.0).abs() < 1e-12);
        assert!((occ.cell_mass(0, 3, 0) - 1.0).abs() < 1e-12);
        assert!((occ.cell_mass(1, 3, 0) - 1.0).abs() < 1e-12);
        let nonzero = occ.nonzero_cells();
        assert_eq!(nonzero.len(), 2);
        assert!(nonzero.iter().all(|c| (c.mass - 1.0).abs() < 1e-12));
    }

    #[test]
    fn simulated_path_conserves_mass_and_support() {
        let cfg = fig_cfg(80, 3.0);
        let traj = simulate(&cfg, 9).unwrap();
        let spec = BinSpec::from_config(&cfg).unwrap();
        let occ = compute_occupation(&traj, spec).unwrap();
        assert!((occ.total_mass() - cfg.t_end).abs() <= 1e-10 * cfg.t_end);

        let wc = spec.zc_max / spec.bins_state as f64;
        let wv = spec.zv_max / spec.bins_state as f64;
        for ic in 0..spec.bins_state {
            for iv in 0..spec.bins_state {
                let zc_lo = ic as f64 * wc;
                let zv_hi = (iv + 1) as f64 * wv;
                if zc_lo > zv_hi {
                    for it in 0..spec.bins_time {
                        assert_eq!(occ.cell_mass(ic, iv, it), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn streaming_accumulator_matches_recorded_path() {
        let cfg = fig_cfg(60, 2.0);
        let traj = simulate(&cfg, 4).unwrap();
        let direct = compute_occupation(&traj, BinSpec::from_config(&cfg).unwrap()).unwrap();
        let mut acc = OccupationAccumulator::new(&cfg).unwrap();
        simulate_with_observer(&cfg, 4, &mut acc).unwrap();
        let streamed = acc.finish();
        assert_eq!(direct.mass, streamed.mass);
    }

    #[test]
    fn merge_requires_matching_bins_and_adds_mass() {
        let cfg = fig_cfg(50, 2.0);
        let spec = BinSpec::from_config(&cfg).unwrap();
        let mut a = compute_occupation(&simulate(&cfg, 0).unwrap(), spec).unwrap();
        let b = compute_occupation(&simulate(&cfg, 1).unwrap(), spec).unwrap();
        let sum_before = a.total_mass() + b.total_mass();
        a.merge(&b).unwrap();
        assert!((a.total_mass() - sum_before).abs() < 1e-10);

        let other = OccupationMeasure::new(BinSpec::new(1.0, 1.0, 2.0, 3, 3).unwrap());
        assert!(a.merge(&other).is_err());
    }

    #[test]
    fn pinned_trajectory_concentrates_fully() {
        let rates = RateConstants::new(1.0, 1.0, 0.75).unwrap();
        let target = equilibria(0.1, 1.0, &rates).z_minus;
        let xc = (1000.0 * target).round() as u64;
        let traj = manual_trajectory(
            vec![0.0],
            vec![CopyState::new(1000 - xc, 100 - xc, xc, 0)],
            1000,
            2.0,
        );
        let occ = compute_occupation(&traj, BinSpec::new(1.0, 1.0, 2.0, 200, 5).unwrap()).unwrap();
        let frozen = RateConstants {
            k1: 1.0,
            km1: 1.0,
            k2: 0.0,
        };
        let grid: Vec<f64> = (0..21).map(|i| 2.0 * i as f64 / 20.0).collect();
        let constant_limit = solve_flln_ode(1.0, 0.1, &frozen, &grid).unwrap();
        let f = concentration_fraction(&occ, &constant_limit, 0.1, &rates, 0.05, 0.1).unwrap();
        assert_eq!(f, 1.0);

        let f_wide = concentration_fraction(&occ, &constant_limit, 0.1, &rates, 1.0, 0.1).unwrap();
        assert_eq!(f_wide, 1.0);
    }

    #[test]
    fn late_time_zv_marginal_tracks_the_limit_path() {
        let cfg = fig_cfg(10_000, 4.0);
        let spec = BinSpec::from_config(&cfg).unwrap();
        let mut acc = OccupationAccumulator::new(&cfg).unwrap();
        simulate_with_observer(&cfg, 2, &mut acc).unwrap();
        let occ = acc.finish();
        let limit = solve_flln_ode(1.0, 0.1, &cfg.rates, &cfg.grid()).unwrap();

        let it = spec.bins_time - 1;
        let marginal = occ.zv_marginal_at(it);
        let best = marginal
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        let wt = spec.t_end / spec.bins_time as f64;
        let t_center = (it as f64 + 0.5) * wt;
        let wv = spec.zv_max / spec.bins_state as f64;
        let predicted = (limit.value_at(t_center).unwrap() / wv).floor() as usize;
        // A single replica's slow path sits O(1/sqrt(n)) from the limit,
        // about two bins here.
        assert!(
            best.abs_diff(predicted) <= 3,
            "marginal peak bin {best}, limit path bin {predicted}"
        );
    }

    #[test]
    fn small_system_concentration_meets_threshold() {
        let cfg = fig_cfg(100, 2.0);
        let mut acc = OccupationAccumulator::new(&cfg).unwrap();
        simulate_with_observer(&cfg, 0, &mut acc).unwrap();
        let occ = acc.finish();
        let limit = solve_flln_ode(1.0, 0.1, &cfg.rates, &cfg.grid()).unwrap();
        let f = concentration_fraction(&occ, &limit, 0.1, &cfg.rates, 0.05, 0.1).unwrap();
        assert!(f >= 0.9, "concentration fraction {f}");
    }

    #[test]
    fn guards_reject_bad_inputs() {
        let cfg = fig_cfg(50, 2.0);
        let occ = compute_occupation(
            &simulate(&cfg, 0).unwrap(),
            BinSpec::from_config(&cfg).unwrap(),
        )
        .unwrap();
        let limit = solve_flln_ode(1.0, 0.1, &cfg.rates, &cfg.grid()).unwrap();
        assert!(concentration_fraction(&occ, &limit, 0.1, &cfg.rates, 0.0, 0.1).is_err());
        assert!(concentration_fraction(&occ, &limit, 0.1, &cfg.rates, 0.05, 2.0).is_err());
        assert!(BinSpec::new(0.0, 1.0, 1.0, 10, 10).is_err());
        assert!(BinSpec::new(1.0, 1.0, 1.0, 0, 10).is_err());

        let tiny = BinSpec::new(0.001, 0.001, 2.0, 4, 4).unwrap();
        assert!(compute_occupation(&simulate(&cfg, 0).unwrap(), tiny).is_err());
    }
}
