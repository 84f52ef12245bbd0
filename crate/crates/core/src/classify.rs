//! Spreading-vanishing decision engine.
//!
//! Static rules use only eigenvalues: delta = 1 always vanishes; a
//! nonnegative spatial-independent eigenvalue forces vanishing; a negative
//! one combined with a nonpositive interval eigenvalue on the initial
//! interval forces spreading. Everything else is Undetermined statically
//! and can be resolved dynamically: a per-period free-boundary eigenvalue
//! dipping below zero certifies spreading, while sustained decay of the
//! sup norms together with stalled boundaries is taken as vanishing.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fb_sim::{simulate, FieldState, SimSettings};
use crate::model::{Kernel, ModelParams};
use crate::nonlocal_eigen::{lambda1_f, lambda1_p};
use crate::ode_eigen::lambda1_o;

pub const SPREAD_TOL: f64 = 1e-10;
pub const VANISH_NORM_FACTOR: f64 = 1e-6;
pub const STALL_TOL: f64 = 1e-8;
const STALL_PERIODS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Verdict {
    Spreading,
    Vanishing,
    /// undecided after simulating up to the given time
    Undetermined { t_max: f64 },
}

#[derive(Debug, Clone, Serialize, Default)]
pub struct Evidence {
    pub lambda_o: Option<f64>,
    pub lambda_p_h0: Option<f64>,
    pub lambda_f_trace: Vec<(usize, f64)>,
    pub final_interval: Option<f64>,
    pub final_sup_u1: Option<f64>,
    pub final_sup_u2: Option<f64>,
    /// exactly one rule name
    pub rule: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    pub verdict: Verdict,
    pub evidence: Evidence,
}

fn outcome(verdict: Verdict, evidence: Evidence) -> Outcome {
    Outcome { verdict, evidence }
}

/// Eigenvalue-only classification. `Undetermined` here means the theory
/// gives no verdict without simulating.
pub fn classify_static(p: &ModelParams, j1: &Kernel, j2: &Kernel, dx: f64) -> Result<Outcome> {
    let p = (*p).validated()?;
    let mut ev = Evidence::default();
    if j1.kind != j2.kind {
        ev.rule = "kernel_mismatch".to_string();
        return Ok(outcome(Verdict::Undetermined { t_max: 0.0 }, ev));
    }
    if p.delta >= 1.0 {
        ev.rule = "delta_one".to_string();
        return Ok(outcome(Verdict::Vanishing, ev));
    }
    let lam_o = lambda1_o(&p)?.kind.upper();
    ev.lambda_o = Some(lam_o);
    if lam_o >= 0.0 {
        ev.rule = "lambda_o_nonnegative".to_string();
        return Ok(outcome(Verdict::Vanishing, ev));
    }
    let lam_p = lambda1_p(&p, j1, (-p.h0, p.h0), dx)?.kind.upper();
    ev.lambda_p_h0 = Some(lam_p);
    if lam_p <= 0.0 {
        ev.rule = "lambda_p_nonpositive".to_string();
        return Ok(outcome(Verdict::Spreading, ev));
    }
    ev.rule = "static_undetermined".to_string();
    Ok(outcome(Verdict::Undetermined { t_max: 0.0 }, ev))
}

/// Simulate up to `max_periods` periods and watch the dynamic triggers:
/// lambda1_F on the current interval crossing below -1e-10 (spreading), or
/// sup norms below 1e-6 min(e1, e2) with per-period boundary growth below
/// 1e-8 for three consecutive periods (vanishing).
pub fn classify_dynamic(
    p: &ModelParams,
    j1: &Kernel,
    j2: &Kernel,
    init: FieldState,
    max_periods: usize,
    settings: &SimSettings,
) -> Result<Outcome> {
    let p = (*p).validated()?;
    let kernels_equal = j1.kind == j2.kind;
    let one_period = SimSettings {
        compute_lambda_f: false,
        snapshot_every: 0,
        ..*settings
    };
    let norm_floor = VANISH_NORM_FACTOR * p.e1.min(p.e2);
    let mut ev = Evidence::default();
    let mut state = init;
    let mut stalled = 0usize;
    for period in 0..max_periods {
        if kernels_equal {
            let eigen_dx = settings.eigen_dx.unwrap_or(settings.dx);
            let lam_f = lambda1_f(&p, j1, state.g, state.h, eigen_dx)?;
            ev.lambda_f_trace.push((period, lam_f));
            if lam_f < -SPREAD_TOL {
                ev.rule = "lambda_f_negative".to_string();
                finish_evidence(&mut ev, &state);
                return Ok(outcome(Verdict::Spreading, ev));
            }
        }
        let width_before = state.h - state.g;
        let traj = simulate(&p, j1, j2, state, 1, &one_period)?;
        state = traj.final_state;
        let (n1, n2) = state.sup_norms();
        let growth = (state.h - state.g) - width_before;
        if n1 < norm_floor && n2 < norm_floor && growth < STALL_TOL {
            stalled += 1;
            if stalled >= STALL_PERIODS {
                ev.rule = "decay_and_stall".to_string();
                finish_evidence(&mut ev, &state);
                return Ok(outcome(Verdict::Vanishing, ev));
            }
        } else {
            stalled = 0;
        }
    }
    ev.rule = "horizon_exhausted".to_string();
    finish_evidence(&mut ev, &state);
    Ok(outcome(
        Verdict::Undetermined {
            t_max: max_periods as f64 * p.omega,
        },
        ev,
    ))
}

fn finish_evidence(ev: &mut Evidence, state: &FieldState) {
    ev.final_interval = Some(state.h - state.g);
    let (n1, n2) = state.sup_norms();
    ev.final_sup_u1 = Some(n1);
    ev.final_sup_u2 = Some(n2);
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdResult {
    pub low: f64,
    pub high: f64,
    pub verdict_low: Verdict,
    pub verdict_high: Verdict,
    pub iterations: usize,
    /// smallness search only: the unscaled data already vanishes
    pub degenerate: bool,
}

/// relative bracket width at which the search stops
pub const BRACKET_RATIO: f64 = 1.05;

fn is_spreading(o: &Outcome) -> bool {
    o.verdict == Verdict::Spreading
}

fn is_vanishing(o: &Outcome) -> bool {
    o.verdict == Verdict::Vanishing
}

/// Bisect in mu (with mu1 = mu2 = mu) between a vanishing low endpoint and
/// a spreading high endpoint; an Undetermined run counts as the low side
/// (not yet spreading), which is safe because spreading is monotone in mu.
pub fn mu_threshold(
    p: &ModelParams,
    j1: &Kernel,
    j2: &Kernel,
    mu_range: (f64, f64),
    max_periods: usize,
    settings: &SimSettings,
) -> Result<ThresholdResult> {
    let (mut lo, mut hi) = mu_range;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Bracket(format!(
            "mu range ({lo}, {hi}) must be positive and increasing"
        )));
    }
    let run = |mu: f64| -> Result<Outcome> {
        let mut q = *p;
        q.mu1 = mu;
        q.mu2 = mu;
        let init = crate::fb_sim::default_init(&q, settings.dx)?;
        classify_dynamic(&q, j1, j2, init, max_periods, settings)
    };
    let out_lo = run(lo)?;
    if is_spreading(&out_lo) {
        return Err(Error::Bracket(format!("mu = {lo} already spreads")));
    }
    let out_hi = run(hi)?;
    if !is_spreading(&out_hi) {
        return Err(Error::Bracket(format!("mu = {hi} does not spread")));
    }
    let mut verdict_low = out_lo.verdict;
    let verdict_high = out_hi.verdict;
    let mut iterations = 0usize;
    while hi / lo > BRACKET_RATIO {
        let mid = (lo * hi).sqrt();
        let out = run(mid)?;
        iterations += 1;
        if is_spreading(&out) {
            hi = mid;
        } else {
            lo = mid;
            verdict_low = out.verdict;
        }
    }
    Ok(ThresholdResult {
        low: lo,
        high: hi,
        verdict_low,
        verdict_high,
        iterations,
        degenerate: false,
    })
}

/// Bisect in the initial-data scale sigma between vanishing (small sigma)
/// and the behavior of the unscaled data (sigma = 1). If sigma = 1 already
/// vanishes the search is degenerate and returned as such.
pub fn smallness_threshold(
    p: &ModelParams,
    j1: &Kernel,
    j2: &Kernel,
    base_init: &FieldState,
    sigma_low: f64,
    max_periods: usize,
    settings: &SimSettings,
) -> Result<ThresholdResult> {
    if !(sigma_low > 0.0 && sigma_low < 1.0) {
        return Err(Error::Bracket(format!(
            "sigma_low {sigma_low} must lie in (0, 1)"
        )));
    }
    let run = |sigma: f64| -> Result<Outcome> {
        let mut init = base_init.clone();
        for v in init.u1.iter_mut().chain(init.u2.iter_mut()) {
            *v *= sigma;
        }
        classify_dynamic(p, j1, j2, init, max_periods, settings)
    };
    let out_one = run(1.0)?;
    if is_vanishing(&out_one) {
        return Ok(ThresholdResult {
            low: 1.0,
            high: 1.0,
            verdict_low: out_one.verdict,
            verdict_high: out_one.verdict,
            iterations: 0,
            degenerate: true,
        });
    }
    let out_lo = run(sigma_low)?;
    if !is_vanishing(&out_lo) {
        return Err(Error::Bracket(format!(
            "sigma = {sigma_low} does not vanish"
        )));
    }
    let (mut lo, mut hi) = (sigma_low, 1.0);
    let mut verdict_low = out_lo.verdict;
    let mut verdict_high = out_one.verdict;
    let mut iterations = 0usize;
    while hi / lo > BRACKET_RATIO {
        let mid = (lo * hi).sqrt();
        let out = run(mid)?;
        iterations += 1;
        if is_vanishing(&out) {
            lo = mid;
            verdict_low = out.verdict;
        } else {
            hi = mid;
            verdict_high = out.verdict;
        }
    }
    Ok(ThresholdResult {
        low: lo,
        high: hi,
        verdict_low,
        verdict_high,
        iterations,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fb_sim::default_init;
    use crate::model::{make_kernel, KernelKind};
    use crate::testutil::unit_params;

    fn tent1() -> Kernel {
        make_kernel(KernelKind::Tent { radius: 1.0 }).unwrap()
    }

    #[test]
    fn static_delta_one_vanishes() {
        let mut p = unit_params();
        p.delta = 1.0;
        let k = tent1();
        let o = classify_static(&p, &k, &k, 0.05).unwrap();
        assert_eq!(o.verdict, Verdict::Vanishing);
        assert_eq!(o.evidence.rule, "delta_one");
    }

    #[test]
    fn static_subcritical_vanishes() {
        let mut p = unit_params();
        p.delta = 0.0;
        p.b1 = 2.0;
        p.b2 = 2.0; // R0 = 1/2
        let k = tent1();
        let o = classify_static(&p, &k, &k, 0.05).unwrap();
        assert_eq!(o.verdict, Verdict::Vanishing);
        assert_eq!(o.evidence.rule, "lambda_o_nonnegative");
    }

    #[test]
    fn static_supercritical_large_interval_spreads() {
        let mut p = unit_params();
        p.delta = 0.0;
        p.b1 = 0.25;
        p.b2 = 0.25;
        p.d1 = 0.05;
        p.d2 = 0.05;
        p.h0 = 2.0;
        let k = tent1();
        let o = classify_static(&p, &k, &k, 0.05).unwrap();
        assert_eq!(o.verdict, Verdict::Spreading);
        assert_eq!(o.evidence.rule, "lambda_p_nonpositive");
        assert!(o.evidence.lambda_p_h0.unwrap() <= 0.0);
    }

    #[test]
    fn static_distinct_kernels_undetermined() {
        let p = unit_params();
        let a = tent1();
        let b = make_kernel(KernelKind::TruncatedGaussian { sigma: 0.5 }).unwrap();
        let o = classify_static(&p, &a, &b, 0.05).unwrap();
        assert!(matches!(o.verdict, Verdict::Undetermined { .. }));
        assert_eq!(o.evidence.rule, "kernel_mismatch");
    }

    #[test]
    fn dynamic_agrees_with_static_spreading() {
        let mut p = unit_params();
        p.delta = 0.0;
        p.b1 = 0.25;
        p.b2 = 0.25;
        p.d1 = 0.05;
        p.d2 = 0.05;
        p.h0 = 2.0;
        let k = tent1();
        let s = SimSettings {
            dx: 0.05,
            ..SimSettings::default()
        };
        let init = default_init(&p, s.dx).unwrap();
        let o = classify_dynamic(&p, &k, &k, init, 10, &s).unwrap();
        assert_eq!(o.verdict, Verdict::Spreading);
        assert_eq!(o.evidence.rule, "lambda_f_negative");
    }

    #[test]
    fn dynamic_detects_vanishing_at_delta_one() {
        let mut p = unit_params();
        p.delta = 1.0;
        let k = tent1();
        let s = SimSettings {
            dx: 0.05,
            ..SimSettings::default()
        };
        let init = default_init(&p, s.dx).unwrap();
        let o = classify_dynamic(&p, &k, &k, init, 40, &s).unwrap();
        assert_eq!(o.verdict, Verdict::Vanishing);
        assert_eq!(o.evidence.rule, "decay_and_stall");
        assert!(o.evidence.final_sup_u1.unwrap() < 1e-6);
    }

    #[test]
    fn mu_threshold_rejects_non_bracketing_range() {
        let mut p = unit_params();
        p.delta = 1.0; // vanishes at every mu
        let k = tent1();
        let s = SimSettings {
            dx: 0.1,
            ..SimSettings::default()
        };
        match mu_threshold(&p, &k, &k, (0.1, 1.0), 30, &s) {
            Err(Error::Bracket(_)) => {}
            other => panic!("expected a bracket error, got {other:?}"),
        }
    }
}
