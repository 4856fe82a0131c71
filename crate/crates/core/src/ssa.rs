//! Exact stochastic simulation of the scaled jump process.
//!
//! The direct Gillespie method drives one kernel, `simulate_with_observer`,
//! which streams constant path segments to a `PathObserver`. Everything else
//! (full trajectory recording, grid sampling, slow-variable extraction,
//! conservation auditing) is an observer, so a memory-heavy analysis at
//! large n never has to materialize the jump sequence.

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::model::{
    npow, replica_rng, CopyState, ExperimentConfig, RateConstants, ScaledState, ScalingRegime,
    Trajectory, ZvPath,
};

/// The three reactions of the network, in propensity order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reaction {
    /// S + E -> C
    Bind,
    /// C -> S + E
    Unbind,
    /// C -> P + E
    Produce,
}

impl Reaction {
    /// Copy-number change (dS, dE, dC, dP).
    pub fn jump(&self) -> [i64; 4] {
        match self {
            Reaction::Bind => [-1, -1, 1, 0],
            Reaction::Unbind => [1, 1, -1, 0],
            Reaction::Produce => [0, 1, -1, 1],
        }
    }

    fn apply(&self, x: CopyState) -> CopyState {
        match self {
            Reaction::Bind => CopyState::new(x.xs - 1, x.xe - 1, x.xc + 1, x.xp),
            Reaction::Unbind => CopyState::new(x.xs + 1, x.xe + 1, x.xc - 1, x.xp),
            Reaction::Produce => CopyState::new(x.xs, x.xe + 1, x.xc - 1, x.xp + 1),
        }
    }
}

/// Firing rates of (bind, unbind, produce) at one state, in the sped-up
/// clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropensityVector {
    pub a1: f64,
    pub am1: f64,
    pub a2: f64,
}

impl PropensityVector {
    pub fn total(&self) -> f64 {
        self.a1 + self.am1 + self.a2
    }
}

/// Propensities a1 = n^{beta_1 + gamma} k1 xs xe, am1 = n^{beta_-1 + gamma}
/// km1 xc, a2 = n^{beta_2 + gamma} k2 xc.
pub fn propensities(
    x: &CopyState,
    rates: &RateConstants,
    regime: &ScalingRegime,
    n: u64,
) -> Result<PropensityVector> {
    let p = PropensityVector {
        a1: npow(n, regime.beta_1 + regime.gamma) * rates.k1 * x.xs as f64 * x.xe as f64,
        am1: npow(n, regime.beta_m1 + regime.gamma) * rates.km1 * x.xc as f64,
        a2: npow(n, regime.beta_2 + regime.gamma) * rates.k2 * x.xc as f64,
    };
    if p.total().is_finite() {
        Ok(p)
    } else {
        Err(Error::NonFinitePropensity {
            xs: x.xs,
            xe: x.xe,
            xc: x.xc,
            xp: x.xp,
        })
    }
}

/// Receives each constant segment of a sample path in time order.
///
/// `segment(t0, t1, x, last)` states that the path equals `x` on [t0, t1);
/// the one call with `last = true` closes the path, with t1 = t_end and the
/// segment closed on the right. Every path produces exactly one final call.
pub trait PathObserver {
    fn segment(&mut self, t0: f64, t1: f64, x: &CopyState, last: bool) -> Result<()>;
}

/// Jump count and termination mode of one simulated path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimStats {
    pub jumps: u64,
    /// True when the total propensity hit zero before t_end.
    pub absorbed: bool,
}

/// Run one exact path of replica `replica`, streaming segments to `obs`.
///
/// Pure given (config, replica): the same pair always produces the same
/// segment sequence, regardless of which observer consumes it.
pub fn simulate_with_observer(
    cfg: &ExperimentConfig,
    replica: u64,
    obs: &mut dyn PathObserver,
) -> Result<SimStats> {
    let mut rng = replica_rng(cfg.master_seed, replica);
    let mut x = cfg.initial_copy_state()?;
    let mut t = 0.0f64;
    let mut jumps = 0u64;
    loop {
        let p = propensities(&x, &cfg.rates, &cfg.regime, cfg.n)?;
        let a0 = p.total();
        if a0 <= 0.0 {
            obs.segment(t, cfg.t_end, &x, true)?;
            return Ok(SimStats {
                jumps,
                absorbed: true,
            });
        }
        let wait: f64 = rng.sample::<f64, _>(Exp1) / a0;
        let t_next = t + wait;
        if t_next >= cfg.t_end {
            obs.segment(t, cfg.t_end, &x, true)?;
            return Ok(SimStats {
                jumps,
                absorbed: false,
            });
        }
        obs.segment(t, t_next, &x, false)?;
        let u = rng.random::<f64>() * a0;
        // The final branches keep a rounding artifact (u == a0 exactly) from
        // ever selecting a reaction whose propensity is zero.
        let reaction = if u < p.a1 {
            Reaction::Bind
        } else if u < p.a1 + p.am1 {
            Reaction::Unbind
        } else if p.a2 > 0.0 {
            Reaction::Produce
        } else if p.am1 > 0.0 {
            Reaction::Unbind
        } else {
            Reaction::Bind
        };
        x = reaction.apply(x);
        t = t_next;
        jumps += 1;
        if jumps > cfg.jump_cap {
            return Err(Error::JumpCapExceeded {
                cap: cfg.jump_cap,
                t,
            });
        }
    }
}

/// Run one exact path and record every jump.
pub fn simulate(cfg: &ExperimentConfig, replica: u64) -> Result<Trajectory> {
    let mut rec = Recorder::default();
    simulate_with_observer(cfg, replica, &mut rec)?;
    Ok(Trajectory::from_parts(
        rec.times,
        rec.states,
        cfg.n,
        cfg.regime,
        crate::model::derive_seed(cfg.master_seed, replica),
        cfg.t_end,
    ))
}

#[derive(Default)]
struct Recorder {
    times: Vec<f64>,
    states: Vec<CopyState>,
}

impl PathObserver for Recorder {
    fn segment(&mut self, t0: f64, _t1: f64, x: &CopyState, _last: bool) -> Result<()> {
        self.times.push(t0);
        self.states.push(*x);
        Ok(())
    }
}

/// Cadlag samples of the scaled state on a non-decreasing grid in [0, t_end].
pub fn sample_on_grid(traj: &Trajectory, grid: &[f64]) -> Result<Vec<ScaledState>> {
    let times = traj.times();
    let mut out = Vec::with_capacity(grid.len());
    let mut i = 0usize;
    let mut prev = f64::NEG_INFINITY;
    for &g in grid {
        if g < prev {
            return Err(Error::InvalidGrid("grid must be non-decreasing".into()));
        }
        prev = g;
        if !(0.0..=traj.t_end()).contains(&g) {
            return Err(Error::GridOutOfRange {
                value: g,
                t_end: traj.t_end(),
            });
        }
        while i + 1 < times.len() && times[i + 1] <= g {
            i += 1;
        }
        out.push(traj.scaled_state(i));
    }
    Ok(out)
}

/// Predictable quadratic variation of the slow martingale part over the whole
/// path: k2 / n times the exact time integral of the scaled complex level.
pub fn qv_martingale_mv(traj: &Trajectory, rates: &RateConstants) -> f64 {
    let times = traj.times();
    let mut integral = 0.0f64;
    for i in 0..times.len() {
        let t1 = if i + 1 < times.len() {
            times[i + 1]
        } else {
            traj.t_end()
        };
        integral += traj.scaled_state(i).zc * (t1 - times[i]);
    }
    rates.k2 * integral / traj.n() as f64
}

/// Observer that keeps only the slow variable, deduplicating segments where
/// Z_V did not move.
pub struct ZvPathRecorder {
    times: Vec<f64>,
    values: Vec<f64>,
    n: u64,
    regime: ScalingRegime,
    t_end: f64,
}

impl ZvPathRecorder {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        Self {
            times: Vec::new(),
            values: Vec::new(),
            n: cfg.n,
            regime: cfg.regime,
            t_end: cfg.t_end,
        }
    }

    pub fn finish(self) -> ZvPath {
        ZvPath {
            times: self.times,
            values: self.values,
            t_end: self.t_end,
        }
    }
}

impl PathObserver for ZvPathRecorder {
    fn segment(&mut self, t0: f64, _t1: f64, x: &CopyState, _last: bool) -> Result<()> {
        let zv = x.to_scaled(self.n, &self.regime).zv();
        if self.values.last() != Some(&zv) {
            self.times.push(t0);
            self.values.push(zv);
        }
        Ok(())
    }
}

/// Observer sampling the scaled state on a fixed grid while the path streams
/// by, cadlag convention; equivalent to `sample_on_grid` on a recorded
/// trajectory driven by the same replica.
pub struct GridSampler {
    grid: Vec<f64>,
    out: Vec<ScaledState>,
    next: usize,
    n: u64,
    regime: ScalingRegime,
}

impl GridSampler {
    /// `grid` must be non-decreasing and contained in [0, t_end].
    pub fn new(cfg: &ExperimentConfig, grid: Vec<f64>) -> Result<Self> {
        let mut prev = f64::NEG_INFINITY;
        for &g in &grid {
            if g < prev {
                return Err(Error::InvalidGrid("grid must be non-decreasing".into()));
            }
            prev = g;
            if !(0.0..=cfg.t_end).contains(&g) {
                return Err(Error::GridOutOfRange {
                    value: g,
                    t_end: cfg.t_end,
                });
            }
        }
        Ok(Self {
            out: Vec::with_capacity(grid.len()),
            grid,
            next: 0,
            n: cfg.n,
            regime: cfg.regime,
        })
    }

    pub fn finish(self) -> Vec<ScaledState> {
        debug_assert_eq!(self.out.len(), self.grid.len());
        self.out
    }
}

impl PathObserver for GridSampler {
    fn segment(&mut self, _t0: f64, t1: f64, x: &CopyState, last: bool) -> Result<()> {
        while self.next < self.grid.len() {
            let g = self.grid[self.next];
            if g < t1 || (last && g <= t1) {
                self.out.push(x.to_scaled(self.n, &self.regime));
                self.next += 1;
            } else {
                break;
            }
        }
        Ok(())
    }
}

/// Observer asserting both integer conservation laws at every segment.
pub struct ConservationAuditor {
    expected: Option<(u64, u64)>,
    pub segments_checked: u64,
}

impl ConservationAuditor {
    pub fn new() -> Self {
        Self {
            expected: None,
            segments_checked: 0,
        }
    }
}

impl Default for ConservationAuditor {
    fn default() -> Self {
        Self::new()
    }
}

impl PathObserver for ConservationAuditor {
    fn segment(&mut self, _t0: f64, _t1: f64, x: &CopyState, _last: bool) -> Result<()> {
        let c = x.conserved_copies();
        match self.expected {
            None => self.expected = Some(c),
            Some(e) => {
                if c != e {
                    return Err(Error::InvalidConfig(format!(
                        "conservation violated: expected totals {e:?}, found {c:?} at state {x:?}"
                    )));
                }
            }
        }
        self.segments_checked += 1;
        Ok(())
    }
}

/// Fan-out observer feeding the same segment stream to several consumers.
pub struct Tee<'a> {
    observers: Vec<&'a mut dyn PathObserver>,
}

impl<'a> Tee<'a> {
    pub fn new(observers: Vec<&'a mut dyn PathObserver>) -> Self {
        Self { observers }
    }
}

impl PathObserver for Tee<'_> {
    fn segment(&mut self, t0: f64, t1: f64, x: &CopyState, last: bool) -> Result<()> {
        for obs in &mut self.observers {
            obs.segment(t0, t1, x, last)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::conserved_from_copy;

    fn fig_cfg() -> ExperimentConfig {
        ExperimentConfig::default()
    }

    #[test]
    fn propensity_reference_values() {
        let rates = RateConstants::new(1.0, 1.0, 0.75).unwrap();
        let p = propensities(
            &CopyState::new(900, 100, 0, 0),
            &rates,
            &ScalingRegime::TQSSA,
            1000,
        )
        .unwrap();
        assert_eq!((p.a1, p.am1, p.a2), (90000.0, 0.0, 0.0));

        let unit = RateConstants::new(1.0, 1.0, 1.0).unwrap();
        let p = propensities(&CopyState::new(1, 1, 1, 0), &unit, &ScalingRegime::TQSSA, 1).unwrap();
        assert_eq!((p.a1, p.am1, p.a2), (1.0, 1.0, 1.0));
    }

    #[test]
    fn propensity_zero_at_absorbing_states() {
        let rates = RateConstants::new(1.0, 1.0, 0.75).unwrap();
        for xe in [0u64, 5] {
            let p = propensities(
                &CopyState::new(0, xe, 0, 3),
                &rates,
                &ScalingRegime::TQSSA,
                100,
            )
            .unwrap();
            assert_eq!((p.a1, p.am1, p.a2), (0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn sqssa_scales_product_rate_by_n() {
        let rates = RateConstants::new(1.0, 1.0, 2.0).unwrap();
        let p = propensities(
            &CopyState::new(10, 1, 3, 0),
            &rates,
            &ScalingRegime::SQSSA,
            50,
        )
        .unwrap();
        assert_eq!(p.a1, 10.0);
        assert_eq!(p.am1, 50.0 * 3.0);
        assert_eq!(p.a2, 50.0 * 2.0 * 3.0);
    }

    #[test]
    fn zero_propensity_start_gives_single_constant_segment() {
        let cfg = ExperimentConfig {
            z0: ScaledState::new(0.0, 0.1, 0.0, 0.5),
            ..fig_cfg()
        };
        let traj = simulate(&cfg, 0).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.times(), &[0.0]);
        assert_eq!(traj.scaled_state(0).zp, 0.5);
    }

    #[test]
    fn jumps_match_reaction_stoichiometry_and_monotonicity() {
        let cfg = ExperimentConfig {
            n: 50,
            t_end: 2.0,
            ..fig_cfg()
        };
        let traj = simulate(&cfg, 3).unwrap();
        assert!(
            traj.len() > 10,
            "expected an active path, got {}",
            traj.len()
        );
        let allowed: Vec<[i64; 4]> = [Reaction::Bind, Reaction::Unbind, Reaction::Produce]
            .iter()
            .map(|r| r.jump())
            .collect();
        for w in traj.copy_states().windows(2) {
            let d = [
                w[1].xs as i64 - w[0].xs as i64,
                w[1].xe as i64 - w[0].xe as i64,
                w[1].xc as i64 - w[0].xc as i64,
                w[1].xp as i64 - w[0].xp as i64,
            ];
            assert!(allowed.contains(&d), "illegal jump {d:?}");
            assert!(w[1].xp >= w[0].xp);
            assert!(w[1].xs + w[1].xc <= w[0].xs + w[0].xc);
        }
    }

    #[test]
    fn conservation_holds_at_every_jump() {
        let cfg = ExperimentConfig {
            n: 80,
            t_end: 3.0,
            ..fig_cfg()
        };
        let traj = simulate(&cfg, 11).unwrap();
        let c0 = traj.copy_state(0).conserved_copies();
        for x in traj.copy_states() {
            assert_eq!(x.conserved_copies(), c0);
        }
        let c = conserved_from_copy(traj.copy_state(0), cfg.n, &cfg.regime);
        assert_eq!((c.k1_tot, c.k2_tot), (1.0, 0.1));
    }

    #[test]
    fn simulation_is_deterministic_per_replica() {
        let cfg = ExperimentConfig {
            n: 60,
            t_end: 1.0,
            ..fig_cfg()
        };
        let a = simulate(&cfg, 7).unwrap();
        let b = simulate(&cfg, 7).unwrap();
        assert_eq!(a.times(), b.times());
        assert_eq!(a.copy_states(), b.copy_states());
        let c = simulate(&cfg, 8).unwrap();
        assert_ne!(a.times(), c.times());
    }

    #[test]
    fn grid_sampling_is_cadlag_and_round_trips_jump_times() {
        let cfg = ExperimentConfig {
            n: 40,
            t_end: 1.5,
            ..fig_cfg()
        };
        let traj = simulate(&cfg, 2).unwrap();
        let at_jumps = sample_on_grid(&traj, traj.times()).unwrap();
        let direct: Vec<ScaledState> = traj.scaled_states().collect();
        assert_eq!(at_jumps, direct);

        let constant = simulate(
            &ExperimentConfig {
                z0: ScaledState::new(0.0, 0.0, 0.0, 0.0),
                ..fig_cfg()
            },
            0,
        )
        .unwrap();
        let s = sample_on_grid(&constant, &[0.0, 5.0, 10.0]).unwrap();
        assert!(s.iter().all(|z| *z == s[0]));

        assert!(sample_on_grid(&traj, &[2.0]).is_err());
        assert!(sample_on_grid(&traj, &[0.5, 0.2]).is_err());
    }

    #[test]
    fn streaming_observers_match_recorded_trajectory() {
        let cfg = ExperimentConfig {
            n: 70,
            t_end: 2.0,
            grid_points: 41,
            ..fig_cfg()
        };
        let traj = simulate(&cfg, 5).unwrap();

        let mut zv_rec = ZvPathRecorder::new(&cfg);
        let mut sampler = GridSampler::new(&cfg, cfg.grid()).unwrap();
        let mut audit = ConservationAuditor::new();
        {
            let mut tee = Tee::new(vec![&mut zv_rec, &mut sampler, &mut audit]);
            simulate_with_observer(&cfg, 5, &mut tee).unwrap();
        }

        assert_eq!(zv_rec.finish(), traj.zv_path());
        let streamed = sampler.finish();
        let recorded = sample_on_grid(&traj, &cfg.grid()).unwrap();
        assert_eq!(streamed, recorded);
        assert_eq!(audit.segments_checked as usize, traj.len());
    }

    #[test]
    fn qv_closed_forms() {
        let cfg = fig_cfg();
        let rates = cfg.rates;
        let constant_zero = simulate(
            &ExperimentConfig {
                z0: ScaledState::new(0.4, 0.0, 0.0, 0.0),
                ..cfg.clone()
            },
            0,
        )
        .unwrap();
        assert_eq!(qv_martingale_mv(&constant_zero, &rates), 0.0);

        let manual = Trajectory::from_parts(
            vec![0.0],
            vec![CopyState::new(0, 0, 30, 0)],
            100,
            ScalingRegime::TQSSA,
            0,
            4.0,
        );
        let expect = 0.75 * 0.3 * 4.0 / 100.0;
        assert!((qv_martingale_mv(&manual, &rates) - expect).abs() < 1e-15);
    }

    #[test]
    fn jump_cap_is_enforced() {
        let cfg = ExperimentConfig {
            jump_cap: 10,
            ..fig_cfg()
        };
        match simulate(&cfg, 0) {
            Err(Error::JumpCapExceeded { cap, .. }) => assert_eq!(cap, 10),
            other => panic!("expected JumpCapExceeded, got {other:?}"),
        }
    }

    #[test]
    fn absorbed_path_reports_absorption() {
        let cfg = ExperimentConfig {
            n: 1,
            z0: ScaledState::new(1.0, 1.0, 0.0, 0.0),
            rates: RateConstants::new(1.0, 0.0, 1.0).unwrap(),
            t_end: 200.0,
            ..fig_cfg()
        };
        let mut rec = ZvPathRecorder::new(&cfg);
        let stats = simulate_with_observer(&cfg, 1, &mut rec).unwrap();
        assert!(stats.absorbed);
        assert_eq!(stats.jumps, 2);
        let path = rec.finish();
        assert_eq!(path.values.first(), Some(&1.0));
        assert_eq!(path.values.last(), Some(&0.0));
    }
}
