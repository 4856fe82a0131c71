//! Self-contained invariant suites runnable by users as a health check.
//!
//! Each suite bundles named checks of one subsystem; a check either passes
//! or fails with a message. The command-line `verify` front end prints one
//! line per suite and exits nonzero when anything fails, so the suites
//! double as an installation smoke test.

use rand::Rng;

use crate::ctmc::{reachable_states, transient_distribution};
use crate::experiments::limit_path;
use crate::fclt::{
    drift_ode_path, em_moments, sde_variance_quadrature, simulate_fclt_sde, FcltParams,
};
use crate::model::{replica_rng, CopyState, ExperimentConfig, RateConstants};
use crate::occupation::{compute_occupation, concentration_fraction, BinSpec};
use crate::poisson::PoissonContext;
use crate::ssa::{
    sample_on_grid, simulate, simulate_with_observer, ConservationAuditor, GridSampler,
};
use crate::stats::{fit_rate, ks_distance, sup_norm_error};
use crate::tqssa::{equilibria, fast_drift, solve_det_tqssa, solve_flln_ode};

type CheckResult = std::result::Result<(), String>;
type Check = fn() -> CheckResult;

/// Result of a single named check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    /// Failure message; empty when the check passed.
    pub detail: String,
}

/// Results of one suite.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub name: &'static str,
    pub outcomes: Vec<CheckOutcome>,
}

impl SuiteReport {
    pub fn passed(&self) -> usize {
        self.outcomes.iter().filter(|o| o.passed).count()
    }

    pub fn total(&self) -> usize {
        self.outcomes.len()
    }

    pub fn all_passed(&self) -> bool {
        self.passed() == self.total()
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> CheckResult {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run_checks(name: &'static str, checks: &[(&'static str, Check)]) -> SuiteReport {
    let outcomes = checks
        .iter()
        .map(|(check_name, check)| match check() {
            Ok(()) => CheckOutcome {
                name: check_name,
                passed: true,
                detail: String::new(),
            },
            Err(detail) => CheckOutcome {
                name: check_name,
                passed: false,
                detail,
            },
        })
        .collect();
    SuiteReport { name, outcomes }
}

/// Run every suite.
pub fn run_all() -> Vec<SuiteReport> {
    vec![
        run_checks(
            "equilibria",
            &[
                ("branch-bounds", check_equilibria_bounds),
                ("drift-factorization", check_drift_factorization),
                ("derivative-finite-difference", check_equilibria_derivatives),
            ],
        ),
        run_checks(
            "transfer-function",
            &[
                ("residual-sweep", check_poisson_residual),
                ("derivative-bounds", check_poisson_bounds),
                ("form-consistency", check_poisson_forms),
            ],
        ),
        run_checks(
            "jump-paths",
            &[
                ("conservation-and-monotonicity", check_jump_conservation),
                ("replica-determinism", check_jump_determinism),
                ("streaming-equivalence", check_streaming_equivalence),
            ],
        ),
        run_checks(
            "reduced-models",
            &[
                ("step-halving", check_ode_step_halving),
                ("shifted-rate-identity", check_shifted_rate_identity),
                ("fast-unbinding-exponential", check_sqssa_exponential),
            ],
        ),
        run_checks(
            "fluctuation-sde",
            &[
                ("moment-recursion-vs-quadrature", check_sde_moments),
                ("pathwise-affinity", check_sde_affinity),
                ("mean-vs-drift-ode", check_sde_mean),
            ],
        ),
        run_checks(
            "statistics",
            &[
                ("ks-properties", check_ks_properties),
                ("rate-fit-exactness", check_rate_fit),
                ("sup-norm-vs-dense-scan", check_sup_norm),
            ],
        ),
        run_checks(
            "unit-scale-oracle",
            &[
                ("frozen-transient-value", check_ctmc_frozen),
                ("irreversible-closed-form", check_ctmc_closed_form),
                ("long-time-absorption", check_ctmc_absorption),
            ],
        ),
        run_checks(
            "occupation",
            &[
                ("mass-conservation", check_occupation_mass),
                ("support-inside-simplex", check_occupation_support),
                ("full-tube-captures-everything", check_occupation_tube),
            ],
        ),
    ]
}

/// True when every check of every suite passed.
pub fn all_passed(reports: &[SuiteReport]) -> bool {
    reports.iter().all(SuiteReport::all_passed)
}

/// One line per suite plus a detail line per failing check.
pub fn render_text(reports: &[SuiteReport]) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    for r in reports {
        writeln!(
            out,
            "suite {}: {}/{} checks passed",
            r.name,
            r.passed(),
            r.total()
        )
        .expect("string write");
        for o in &r.outcomes {
            if !o.passed {
                writeln!(out, "  FAIL {}: {}", o.name, o.detail).expect("string write");
            }
        }
    }
    let failed: usize = reports.iter().map(|r| r.total() - r.passed()).sum();
    if failed == 0 {
        out.push_str("all suites passed\n");
    } else {
        writeln!(out, "{failed} checks failed").expect("string write");
    }
    out
}

fn reference_rates() -> RateConstants {
    RateConstants {
        k1: 1.0,
        km1: 1.0,
        k2: 0.75,
    }
}

fn check_equilibria_bounds() -> CheckResult {
    let mut rng = replica_rng(0xA11, 0);
    for trial in 0..2000 {
        let rates = RateConstants {
            k1: 0.2 + 2.0 * rng.random::<f64>(),
            km1: 0.1 + 2.0 * rng.random::<f64>(),
            k2: 0.75,
        };
        let k_tot = 10.0 * rng.random::<f64>();
        let z_v = 10.0 * rng.random::<f64>();
        let eq = equilibria(k_tot, z_v, &rates);
        ensure(
            eq.z_minus >= 0.0 && eq.z_minus <= z_v.min(k_tot) + 1e-12,
            || {
                format!(
                    "trial {trial}: z_minus {} outside [0, min(z_v, K)]",
                    eq.z_minus
                )
            },
        )?;
        ensure(
            eq.z_plus >= z_v + rates.km1 / (2.0 * rates.k1) - 1e-12,
            || format!("trial {trial}: z_plus {} too close to z_v {z_v}", eq.z_plus),
        )?;
        ensure((0.0..=1.0).contains(&eq.dz_minus), || {
            format!("trial {trial}: dz_minus {} outside [0, 1]", eq.dz_minus)
        })?;
        ensure((eq.dz_minus + eq.dz_plus - 1.0).abs() < 1e-12, || {
            format!("trial {trial}: branch slopes do not sum to 1")
        })?;
        let curb = 2.0 * rates.k1 * rates.k1 * k_tot / (rates.km1 * rates.km1);
        ensure(eq.d2z_minus.abs() <= curb * (1.0 + 1e-12), || {
            format!(
                "trial {trial}: curvature {} above bound {curb}",
                eq.d2z_minus
            )
        })?;
    }
    Ok(())
}

fn check_drift_factorization() -> CheckResult {
    let rates = reference_rates();
    let mut rng = replica_rng(0xA12, 0);
    for _ in 0..2000 {
        let k_tot = 5.0 * rng.random::<f64>();
        let z_v = 5.0 * rng.random::<f64>();
        let z_c = z_v.min(k_tot) * rng.random::<f64>();
        let eq = equilibria(k_tot, z_v, &rates);
        let direct = fast_drift(k_tot, z_v, z_c, &rates);
        let factored = rates.k1 * (z_c - eq.z_minus) * (z_c - eq.z_plus);
        ensure(
            (direct - factored).abs() <= 1e-10 * (1.0 + direct.abs()),
            || {
                format!("drift {direct} vs factored {factored} at (K, z_v, z_c) = ({k_tot}, {z_v}, {z_c})")
            },
        )?;
    }
    Ok(())
}

fn check_equilibria_derivatives() -> CheckResult {
    let rates = reference_rates();
    let h = 1e-6;
    for &(k_tot, z_v) in &[(0.1, 1.0), (2.0, 0.5), (4.0, 4.0)] {
        let eq = equilibria(k_tot, z_v, &rates);
        let up = equilibria(k_tot, z_v + h, &rates);
        let dn = equilibria(k_tot, z_v - h, &rates);
        let fd = (up.z_minus - dn.z_minus) / (2.0 * h);
        ensure((fd - eq.dz_minus).abs() < 1e-4, || {
            format!(
                "dz_minus {} vs finite difference {fd} at ({k_tot}, {z_v})",
                eq.dz_minus
            )
        })?;
        let fd2 = (up.dz_minus - dn.dz_minus) / (2.0 * h);
        ensure((fd2 - eq.d2z_minus).abs() < 1e-4, || {
            format!(
                "d2z_minus {} vs finite difference {fd2} at ({k_tot}, {z_v})",
                eq.d2z_minus
            )
        })?;
    }
    Ok(())
}

fn check_poisson_residual() -> CheckResult {
    let rates = reference_rates();
    let mut rng = replica_rng(0xB01, 0);
    for _ in 0..2000 {
        let k_tot = 0.05 + 5.0 * rng.random::<f64>();
        let ctx = PoissonContext::new(k_tot, rates).map_err(|e| e.to_string())?;
        let z_v = 5.0 * rng.random::<f64>();
        let z_c = z_v.min(k_tot) * rng.random::<f64>();
        let r = ctx.residual(z_v, z_c).map_err(|e| e.to_string())?;
        ensure(r.abs() < 1e-9, || {
            format!("residual {r} at (K, z_v, z_c) = ({k_tot}, {z_v}, {z_c})")
        })?;
    }
    Ok(())
}

fn check_poisson_bounds() -> CheckResult {
    let rates = reference_rates();
    let mut rng = replica_rng(0xB02, 0);
    for _ in 0..2000 {
        let k_tot = 0.05 + 5.0 * rng.random::<f64>();
        let ctx = PoissonContext::new(k_tot, rates).map_err(|e| e.to_string())?;
        let z_v = 5.0 * rng.random::<f64>();
        let z_c = z_v.min(k_tot) * rng.random::<f64>();
        let d2 = ctx.df_dzc(z_v, z_c).map_err(|e| e.to_string())?;
        let d22 = ctx.d2f_dzc2(z_v, z_c).map_err(|e| e.to_string())?;
        let d1 = ctx.df_dzv(z_v, z_c).map_err(|e| e.to_string())?;
        let f = ctx.f(z_v, z_c).map_err(|e| e.to_string())?;
        ensure(d2 > 0.0 && d2 <= 2.0 / rates.km1 + 1e-12, || {
            format!("df_dzc {d2} outside (0, 2/km1]")
        })?;
        ensure(
            d22 <= 4.0 * rates.k1 / (rates.km1 * rates.km1) + 1e-12,
            || format!("d2f_dzc2 {d22} above quadratic bound"),
        )?;
        ensure(d1.abs() <= 4.0 / rates.km1 + 1e-12, || {
            format!("df_dzv {d1} above linear bound")
        })?;
        ensure(f.abs() <= ctx.f_bound(z_v) + 1e-12, || {
            format!("f {f} above growth bound {}", ctx.f_bound(z_v))
        })?;
    }
    Ok(())
}

fn check_poisson_forms() -> CheckResult {
    let rates = reference_rates();
    let ctx = PoissonContext::new(0.1, rates).map_err(|e| e.to_string())?;
    let mut rng = replica_rng(0xB03, 0);
    for _ in 0..500 {
        let z_v = 3.0 * rng.random::<f64>();
        let z_c = z_v.min(0.1) * rng.random::<f64>();
        let a = ctx.f(z_v, z_c).map_err(|e| e.to_string())?;
        let b = ctx.f_expanded(z_v, z_c).map_err(|e| e.to_string())?;
        ensure((a - b).abs() <= 1e-12f64.max(1e-12 * a.abs()), || {
            format!("log forms disagree: {a} vs {b}")
        })?;
    }
    Ok(())
}

fn small_jump_config() -> ExperimentConfig {
    ExperimentConfig {
        n: 100,
        t_end: 2.0,
        replicas: 4,
        grid_points: 101,
        ..ExperimentConfig::default()
    }
}

fn check_jump_conservation() -> CheckResult {
    let cfg = small_jump_config();
    for k in 0..cfg.replicas as u64 {
        let mut auditor = ConservationAuditor::new();
        simulate_with_observer(&cfg, k, &mut auditor).map_err(|e| e.to_string())?;
        let traj = simulate(&cfg, k).map_err(|e| e.to_string())?;
        let mut prev_zv = f64::INFINITY;
        let mut prev_p = 0u64;
        for i in 0..traj.len() {
            let x = traj.copy_state(i);
            let zv = (x.xs + x.xc) as f64;
            ensure(zv <= prev_zv, || {
                format!("replica {k}: substrate pool grew")
            })?;
            ensure(x.xp >= prev_p, || {
                format!("replica {k}: product count fell")
            })?;
            prev_zv = zv;
            prev_p = x.xp;
        }
    }
    Ok(())
}

fn check_jump_determinism() -> CheckResult {
    let cfg = small_jump_config();
    let a = simulate(&cfg, 0).map_err(|e| e.to_string())?;
    let b = simulate(&cfg, 0).map_err(|e| e.to_string())?;
    ensure(a.times() == b.times(), || {
        "same replica, different jump times".into()
    })?;
    let c = simulate(&cfg, 1).map_err(|e| e.to_string())?;
    ensure(a.times() != c.times(), || {
        "distinct replicas share a path".into()
    })
}

fn check_streaming_equivalence() -> CheckResult {
    let cfg = small_jump_config();
    let grid = cfg.grid();
    let mut sampler = GridSampler::new(&cfg, grid.clone()).map_err(|e| e.to_string())?;
    simulate_with_observer(&cfg, 2, &mut sampler).map_err(|e| e.to_string())?;
    let streamed = sampler.finish();
    let traj = simulate(&cfg, 2).map_err(|e| e.to_string())?;
    let recorded = sample_on_grid(&traj, &grid).map_err(|e| e.to_string())?;
    ensure(streamed == recorded, || {
        "streamed grid samples differ from recorded trajectory".into()
    })
}

fn check_ode_step_halving() -> CheckResult {
    let rates = reference_rates();
    let coarse: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let fine: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
    let a = solve_flln_ode(1.0, 0.1, &rates, &coarse).map_err(|e| e.to_string())?;
    let b = solve_flln_ode(1.0, 0.1, &rates, &fine).map_err(|e| e.to_string())?;
    let gap = (a.values().last().unwrap() - b.values().last().unwrap()).abs();
    ensure(gap < 1e-8, || {
        format!("step halving moved the endpoint by {gap}")
    })
}

fn check_shifted_rate_identity() -> CheckResult {
    let rates = reference_rates();
    let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 4.0).collect();
    let det = solve_det_tqssa(1.0, 0.1, &rates, &grid).map_err(|e| e.to_string())?;
    let shifted = RateConstants {
        k1: rates.k1,
        km1: rates.km1 + rates.k2,
        k2: rates.k2,
    };
    let flln = solve_flln_ode(1.0, 0.1, &shifted, &grid).map_err(|e| e.to_string())?;
    ensure(det.values() == flln.values(), || {
        "shifted-rate limit differs from the reduced model".into()
    })
}

fn check_sqssa_exponential() -> CheckResult {
    let rates = RateConstants {
        k1: 1.0,
        km1: 999.0,
        k2: 1.0,
    };
    let grid: Vec<f64> = (0..=10).map(|i| 100.0 * i as f64 / 10.0).collect();
    let path =
        crate::tqssa::solve_det_sqssa(1.0, 0.001, &rates, &grid).map_err(|e| e.to_string())?;
    let e0 = 0.001;
    for (t, v) in grid.iter().zip(path.values()) {
        let exact = (-rates.k2 * e0 * t / rates.km()).exp();
        ensure((v / exact - 1.0).abs() < 1e-2, || {
            format!("dilute-enzyme decay off at t = {t}: {v} vs {exact}")
        })?;
    }
    Ok(())
}

fn fclt_reference_params(dt: f64) -> std::result::Result<FcltParams, String> {
    let cfg = ExperimentConfig::default();
    let zv_path = limit_path(&cfg).map_err(|e| e.to_string())?;
    Ok(FcltParams {
        u0: 0.0,
        k2_tilde: 0.0,
        k2_tot: cfg.conserved().map_err(|e| e.to_string())?.k2_tot,
        rates: cfg.rates,
        zv_path,
        dt,
        seed: 7,
    })
}

fn check_sde_moments() -> CheckResult {
    let params = fclt_reference_params(1e-4)?;
    let (_, var) = em_moments(&params, 1.0).map_err(|e| e.to_string())?;
    let quad = sde_variance_quadrature(&params, 1.0, 20_000).map_err(|e| e.to_string())?;
    ensure((var / quad - 1.0).abs() < 0.05, || {
        format!("integrator variance {var} vs quadrature {quad}")
    })
}

fn check_sde_affinity() -> CheckResult {
    let mut params = fclt_reference_params(1e-3)?;
    let path0 = simulate_fclt_sde(&params, 1).map_err(|e| e.to_string())?;
    params.u0 = 0.5;
    let path_half = simulate_fclt_sde(&params, 1).map_err(|e| e.to_string())?;
    params.u0 = 1.0;
    let path_one = simulate_fclt_sde(&params, 1).map_err(|e| e.to_string())?;
    for i in 0..path0[0].u_values().len() {
        let expected = 2.0 * path_half[0].u_values()[i] - path0[0].u_values()[i];
        let got = path_one[0].u_values()[i];
        ensure((got - expected).abs() < 1e-10, || {
            format!("linearity in the initial condition broken at step {i}")
        })?;
    }
    Ok(())
}

fn check_sde_mean() -> CheckResult {
    let mut params = fclt_reference_params(1e-4)?;
    params.u0 = 1.0;
    let (mean, _) = em_moments(&params, 1.0).map_err(|e| e.to_string())?;
    let ode = drift_ode_path(&params).map_err(|e| e.to_string())?;
    let idx = ode
        .times()
        .iter()
        .position(|&t| (t - 1.0).abs() < 1e-9)
        .ok_or("drift grid misses t = 1")?;
    let ref_mean = ode.u_values()[idx];
    ensure((mean - ref_mean).abs() < 1e-3, || {
        format!("integrator mean {mean} vs drift solution {ref_mean}")
    })
}

fn check_ks_properties() -> CheckResult {
    let a = [0.0, 1.0, 2.0, 3.0];
    ensure(
        ks_distance(&a, &a).map_err(|e| e.to_string())? == 0.0,
        || "identical samples should be at distance zero".into(),
    )?;
    let b = [10.0, 11.0];
    ensure(
        ks_distance(&a, &b).map_err(|e| e.to_string())? == 1.0,
        || "disjoint samples should be at distance one".into(),
    )?;
    let mut rng = replica_rng(0xC01, 0);
    let x: Vec<f64> = (0..200).map(|_| rng.random::<f64>()).collect();
    let y: Vec<f64> = (0..150).map(|_| rng.random::<f64>()).collect();
    let d1 = ks_distance(&x, &y).map_err(|e| e.to_string())?;
    let d2 = ks_distance(&y, &x).map_err(|e| e.to_string())?;
    ensure(d1 == d2 && (0.0..=1.0).contains(&d1), || {
        "distance must be symmetric and in [0, 1]".into()
    })
}

fn check_rate_fit() -> CheckResult {
    let n = [100u64, 400, 1600, 6400];
    let e: Vec<f64> = n.iter().map(|&v| 2.0 * (v as f64).powf(-0.5)).collect();
    let fit = fit_rate(&n, &e).map_err(|e| e.to_string())?;
    ensure((fit.slope + 0.5).abs() < 1e-10, || {
        format!("exact half-order data fit as {}", fit.slope)
    })?;
    let scaled: Vec<f64> = e.iter().map(|v| 77.0 * v).collect();
    let fit2 = fit_rate(&n, &scaled).map_err(|e| e.to_string())?;
    ensure((fit.slope - fit2.slope).abs() < 1e-12, || {
        "slope not invariant under error rescaling".into()
    })
}

fn check_sup_norm() -> CheckResult {
    let cfg = small_jump_config();
    let traj = simulate(&cfg, 3).map_err(|e| e.to_string())?;
    let limit = limit_path(&cfg).map_err(|e| e.to_string())?;
    let grid = cfg.grid();
    let sup = sup_norm_error(&traj, &limit, &grid).map_err(|e| e.to_string())?;
    let zv = traj.zv_path();
    let mut dense_max = 0.0f64;
    for i in 0..=20_000 {
        let t = cfg.t_end * i as f64 / 20_000.0;
        let gap = (zv.value_at(t).map_err(|e| e.to_string())?
            - limit.value_at(t).map_err(|e| e.to_string())?)
        .abs();
        dense_max = dense_max.max(gap);
    }
    ensure(sup >= dense_max - 1e-12 && sup - dense_max < 1e-5, || {
        format!("sup-norm {sup} vs dense scan {dense_max}")
    })
}

fn check_ctmc_frozen() -> CheckResult {
    let rates = reference_rates();
    let sol = transient_distribution(CopyState::new(2, 1, 0, 0), &rates, 1.0)
        .map_err(|e| e.to_string())?;
    let p1 = sol.probability_where(|s| s.xc == 1);
    ensure((p1 - 0.478270362931).abs() < 1e-9, || {
        format!("unit-scale complex occupancy {p1}")
    })?;
    ensure(
        reachable_states(CopyState::new(2, 1, 0, 0), &rates).len() == 5,
        || "state graph has the wrong size".into(),
    )
}

fn check_ctmc_closed_form() -> CheckResult {
    let rates = RateConstants {
        k1: 1.0,
        km1: 0.0,
        k2: 0.75,
    };
    let sol = transient_distribution(CopyState::new(1, 1, 0, 0), &rates, 1.0)
        .map_err(|e| e.to_string())?;
    let pc = sol.probability_where(|s| s.xc == 1);
    let exact = rates.k1 * ((-rates.k1).exp() - (-rates.k2).exp()) / (rates.k2 - rates.k1);
    ensure((pc - exact).abs() < 1e-10, || {
        format!("two-stage chain occupancy {pc} vs {exact}")
    })
}

fn check_ctmc_absorption() -> CheckResult {
    let rates = reference_rates();
    let sol = transient_distribution(CopyState::new(2, 1, 0, 0), &rates, 50.0)
        .map_err(|e| e.to_string())?;
    let done = sol.probability_where(|s| s.xp == 2);
    ensure(done > 0.9999, || format!("absorbed mass only {done}"))
}

fn check_occupation_mass() -> CheckResult {
    let cfg = small_jump_config();
    let traj = simulate(&cfg, 1).map_err(|e| e.to_string())?;
    let spec = BinSpec::from_config(&cfg).map_err(|e| e.to_string())?;
    let occ = compute_occupation(&traj, spec).map_err(|e| e.to_string())?;
    let total = occ.total_mass();
    ensure((total - cfg.t_end).abs() < 1e-9, || {
        format!(
            "occupation mass {total} differs from the horizon {}",
            cfg.t_end
        )
    })
}

fn check_occupation_support() -> CheckResult {
    let cfg = small_jump_config();
    let traj = simulate(&cfg, 1).map_err(|e| e.to_string())?;
    let spec = BinSpec::from_config(&cfg).map_err(|e| e.to_string())?;
    let occ = compute_occupation(&traj, spec).map_err(|e| e.to_string())?;
    for c in occ.nonzero_cells() {
        ensure(c.zc_lo < c.zv_hi + 1e-12, || {
            format!(
                "mass at zc in [{}, {}] above zv {}",
                c.zc_lo, c.zc_hi, c.zv_hi
            )
        })?;
    }
    Ok(())
}

fn check_occupation_tube() -> CheckResult {
    let cfg = small_jump_config();
    let traj = simulate(&cfg, 1).map_err(|e| e.to_string())?;
    let spec = BinSpec::from_config(&cfg).map_err(|e| e.to_string())?;
    let occ = compute_occupation(&traj, spec).map_err(|e| e.to_string())?;
    let limit = limit_path(&cfg).map_err(|e| e.to_string())?;
    let k2_tot = cfg.conserved().map_err(|e| e.to_string())?.k2_tot;
    let wide = concentration_fraction(&occ, &limit, k2_tot, &cfg.rates, 10.0, cfg.occ_burn_in)
        .map_err(|e| e.to_string())?;
    ensure((wide - 1.0).abs() < 1e-12, || {
        format!("an all-covering tube captured only {wide}")
    })?;
    let frac = concentration_fraction(
        &occ,
        &limit,
        k2_tot,
        &cfg.rates,
        cfg.occ_eps,
        cfg.occ_burn_in,
    )
    .map_err(|e| e.to_string())?;
    ensure((0.0..=1.0).contains(&frac), || {
        format!("tube fraction {frac} outside [0, 1]")
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_suite_passes() {
        let reports = run_all();
        let text = render_text(&reports);
        assert!(all_passed(&reports), "{text}");
        assert_eq!(reports.len(), 8);
        assert!(text.ends_with("all suites passed\n"));
    }

    #[test]
    fn failures_render_with_details() {
        let reports = vec![SuiteReport {
            name: "demo",
            outcomes: vec![
                CheckOutcome {
                    name: "good",
                    passed: true,
                    detail: String::new(),
                },
                CheckOutcome {
                    name: "bad",
                    passed: false,
                    detail: "broke".into(),
                },
            ],
        }];
        assert!(!all_passed(&reports));
        let text = render_text(&reports);
        assert!(text.contains("suite demo: 1/2 checks passed"));
        assert!(text.contains("FAIL bad: broke"));
        assert!(text.ends_with("1 checks failed\n"));
    }
}
