//! Exact transient law of the copy-number chain at unit scale.
//!
//! Enumerates the reachable state graph and solves the forward equation by
//! uniformization. The per-reaction rates are written out literally here,
//! independent of the propensity code used by the jump-path sampler, so the
//! two implementations can check each other.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::model::{CopyState, RateConstants};

const TAIL_TOLERANCE: f64 = 1e-14;
const MAX_UNIFORMIZATION_TERMS: usize = 100_000;

/// Transient distribution over the reachable states at a fixed time.
#[derive(Debug, Clone)]
pub struct CtmcSolution {
    states: Vec<CopyState>,
    probabilities: Vec<f64>,
}

impl CtmcSolution {
    /// Reachable states in breadth-first discovery order.
    pub fn states(&self) -> &[CopyState] {
        &self.states
    }

    /// Probability of each state, aligned with `states`.
    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// Total probability of the states satisfying a predicate.
    pub fn probability_where(&self, pred: impl Fn(&CopyState) -> bool) -> f64 {
        self.states
            .iter()
            .zip(&self.probabilities)
            .filter(|(s, _)| pred(s))
            .map(|(_, p)| p)
            .sum()
    }

    /// Law of the complex count as sorted (value, probability) atoms.
    pub fn complex_atoms(&self) -> Vec<(f64, f64)> {
        let mut by_count: Vec<(u64, f64)> = Vec::new();
        for (s, &p) in self.states.iter().zip(&self.probabilities) {
            match by_count.iter_mut().find(|(c, _)| *c == s.xc) {
                Some((_, acc)) => *acc += p,
                None => by_count.push((s.xc, p)),
            }
        }
        by_count.sort_by_key(|&(c, _)| c);
        by_count.into_iter().map(|(c, p)| (c as f64, p)).collect()
    }
}

/// Outgoing transitions of one state: bind, unbind, produce, with the
/// unit-scale rates kappa_1 xs xe, kappa_{-1} xc, kappa_2 xc.
fn transitions(x: &CopyState, rates: &RateConstants) -> Vec<(CopyState, f64)> {
    let mut out = Vec::with_capacity(3);
    let bind = rates.k1 * x.xs as f64 * x.xe as f64;
    if bind > 0.0 {
        out.push((CopyState::new(x.xs - 1, x.xe - 1, x.xc + 1, x.xp), bind));
    }
    if x.xc > 0 {
        let unbind = rates.km1 * x.xc as f64;
        if unbind > 0.0 {
            out.push((CopyState::new(x.xs + 1, x.xe + 1, x.xc - 1, x.xp), unbind));
        }
        let produce = rates.k2 * x.xc as f64;
        if produce > 0.0 {
            out.push((CopyState::new(x.xs, x.xe + 1, x.xc - 1, x.xp + 1), produce));
        }
    }
    out
}

/// All states reachable from `x0`, in breadth-first order.
pub fn reachable_states(x0: CopyState, rates: &RateConstants) -> Vec<CopyState> {
    let mut states = vec![x0];
    let mut seen: HashMap<CopyState, usize> = HashMap::from([(x0, 0)]);
    let mut head = 0;
    while head < states.len() {
        let current = states[head];
        head += 1;
        for (next, _) in transitions(&current, rates) {
            seen.entry(next).or_insert_with(|| {
                states.push(next);
                states.len() - 1
            });
        }
    }
    states
}

/// Distribution of the chain at time `t`, started from `x0`.
///
/// Uniformization with rate Lambda = max total exit rate: the law is the
/// Poisson(Lambda t) mixture of powers of the discrete jump kernel
/// I + Q / Lambda, summed until the remaining Poisson tail is below 1e-14.
pub fn transient_distribution(
    x0: CopyState,
    rates: &RateConstants,
    t: f64,
) -> Result<CtmcSolution> {
    rates.validate()?;
    if t < 0.0 || !t.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "transient solve needs a finite time >= 0, got {t}"
        )));
    }
    let states = reachable_states(x0, rates);
    let index: HashMap<CopyState, usize> =
        states.iter().enumerate().map(|(i, s)| (*s, i)).collect();
    let rows: Vec<Vec<(usize, f64)>> = states
        .iter()
        .map(|s| {
            transitions(s, rates)
                .into_iter()
                .map(|(next, rate)| (index[&next], rate))
                .collect()
        })
        .collect();
    let exit: Vec<f64> = rows
        .iter()
        .map(|row| row.iter().map(|(_, r)| r).sum())
        .collect();
    let lambda = exit.iter().fold(0.0f64, |m, &r| m.max(r));

    let mut current = vec![0.0; states.len()];
    current[0] = 1.0;
    if lambda == 0.0 || t == 0.0 {
        return Ok(CtmcSolution {
            states,
            probabilities: current,
        });
    }

    let lt = lambda * t;
    let mut weight = (-lt).exp();
    let mut accumulated = weight;
    let mut result: Vec<f64> = current.iter().map(|p| p * weight).collect();
    let mut k = 0usize;
    while 1.0 - accumulated > TAIL_TOLERANCE {
        k += 1;
        if k > MAX_UNIFORMIZATION_TERMS {
            return Err(Error::InvalidConfig(format!(
                "uniformization did not converge within {MAX_UNIFORMIZATION_TERMS} terms \
                 (Lambda t = {lt})"
            )));
        }
        let mut next = vec![0.0; current.len()];
        for (i, &p) in current.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            next[i] += p * (1.0 - exit[i] / lambda);
            for &(j, rate) in &rows[i] {
                next[j] += p * rate / lambda;
            }
        }
        current = next;
        weight *= lt / k as f64;
        accumulated += weight;
        for (r, &p) in result.iter_mut().zip(&current) {
            *r += weight * p;
        }
    }
    let total: f64 = result.iter().sum();
    for r in &mut result {
        *r /= total;
    }
    Ok(CtmcSolution {
        states,
        probabilities: result,
    })
}
