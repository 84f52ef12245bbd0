//! Principal eigenvalue of the nonlocal dispersal operator
//!
//!   L[u](x) = int_{L1}^{L2} J(x-y) u(y) dy - u(x)
//!
//! on an interval, and its composition with the spatial-independent
//! eigenvalue: the full periodic nonlocal system on [L1, L2] has principal
//! eigenvalue lambda1_P equal to lambda1_O with the removal rates shifted,
//! b_i -> b_i - d_i lambda1_star (cold-season mosquito decay k is not
//! shifted because mosquitoes do not disperse in the cold season).
//!
//! Discretization: composite trapezoid on a uniform grid. With trapezoid
//! weights w the quadrature matrix K_ij = w_j J(x_i - x_j) is similar to
//! the symmetric banded matrix S_ij = sqrt(w_i w_j) J(x_i - x_j), whose
//! dominant eigenpair is found by power iteration with a shift-invert
//! refinement (banded Cholesky of sigma I - S with sigma a certified upper
//! bound on the spectral radius).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::BandedCholesky;
use crate::model::{Kernel, ModelParams};
use crate::ode_eigen::{lambda1_o, spectral_constants, EigenKind, EigenResultODE};

/// Eigenpair of the discretized nonlocal operator on one interval.
#[derive(Debug, Clone)]
pub struct NonlocalEigen {
    /// principal eigenvalue; always in (-1, 0)
    pub lambda_star: f64,
    /// positive eigenfunction samples, sup-normalized
    pub eigvec: Vec<f64>,
    pub interval: (f64, f64),
    /// actual grid spacing (the requested dx snapped so that an integer
    /// number of cells tiles the interval)
    pub dx: f64,
}

#[derive(Debug, Clone)]
pub struct EigenResultNonlocal {
    /// lambda1_P (principal, or the generalized pair when delta = 1 and
    /// the shifted bird rate differs from k)
    pub kind: EigenKind,
    /// spectral constants of the shifted rates
    pub s1: f64,
    pub s2: f64,
    pub star: NonlocalEigen,
    /// the underlying spatial-independent solve at shifted rates
    pub ode: EigenResultODE,
}

const MAX_ITERS: usize = 100_000;
const POWER_WARMUP: usize = 200;
const THETA_TOL: f64 = 1e-12;

fn snapped_grid(interval: (f64, f64), dx: f64) -> Result<(usize, f64)> {
    let (l1, l2) = interval;
    let len = l2 - l1;
    if !(len > 0.0) || !len.is_finite() {
        return Err(Error::InvalidParams(vec![format!(
            "interval ({l1}, {l2}) must satisfy L1 < L2"
        )]));
    }
    if !(dx > 0.0) {
        return Err(Error::InvalidParams(vec![format!("dx {dx} nonpositive")]));
    }
    let n_cells = (len / dx).round().max(4.0) as usize;
    Ok((n_cells, len / n_cells as f64))
}

/// Banded symmetric matvec: (S v)_i = sum_j sqrt(w_i w_j) J(|i-j| dx) v_j.
fn band_matvec(n: usize, bw: usize, sw: &[f64], jvals: &[f64], v: &[f64], out: &mut [f64]) {
    for i in 0..n {
        let lo = i.saturating_sub(bw);
        let hi = (i + bw).min(n - 1);
        let mut acc = 0.0;
        for j in lo..=hi {
            acc += jvals[i.abs_diff(j)] * sw[j] * v[j];
        }
        out[i] = sw[i] * acc;
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Principal eigenpair of u -> int J(.-y)u(y)dy - u on [L1, L2].
pub fn lambda1_star(kernel: &Kernel, interval: (f64, f64), dx: f64) -> Result<NonlocalEigen> {
    let (n_cells, dx) = snapped_grid(interval, dx)?;
    let n = n_cells + 1;
    // trapezoid weights and their square roots
    let mut sw = vec![dx.sqrt(); n];
    sw[0] = (0.5 * dx).sqrt();
    sw[n - 1] = (0.5 * dx).sqrt();
    // kernel samples by lattice offset; the band half-width
    let bw = ((kernel.support_radius / dx).ceil() as usize).min(n - 1);
    let jvals: Vec<f64> = (0..=bw).map(|d| kernel.density(d as f64 * dx)).collect();

    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut sv = vec![0.0; n];
    let mut theta = 0.0;
    let mut resid = f64::INFINITY;
    let mut iters = 0usize;
    // plain power iteration first: cheap, and it certifies a shift
    while iters < POWER_WARMUP {
        band_matvec(n, bw, &sw, &jvals, &v, &mut sv);
        theta = v.iter().zip(&sv).map(|(a, b)| a * b).sum();
        let nv = norm2(&sv);
        // computed component-wise: the identity ||S v||^2 - theta^2 cancels
        // catastrophically once the residual nears sqrt(eps) * theta
        resid = v
            .iter()
            .zip(&sv)
            .map(|(a, b)| (b - theta * a) * (b - theta * a))
            .sum::<f64>()
            .sqrt();
        for (vi, si) in v.iter_mut().zip(&sv) {
            *vi = si / nv;
        }
        iters += 1;
        if resid <= 1e-14 * theta.abs().max(1.0) {
            break;
        }
    }
    if resid > 1e-14 * theta.abs().max(1.0) {
        // shift-invert refinement: sigma = theta + ||S v - theta v|| is a
        // rigorous upper bound on rho(S), so sigma I - S is positive
        // definite and admits a banded Cholesky factorization
        let mut sigma = theta + resid.max(1e-14 * theta.abs().max(1.0));
        let mut chol = None;
        for _ in 0..60 {
            let entry = |i: usize, j: usize| {
                let d = if i == j { sigma } else { 0.0 };
                d - if i.abs_diff(j) <= bw {
                    sw[i] * sw[j] * jvals[i.abs_diff(j)]
                } else {
                    0.0
                }
            };
            match BandedCholesky::factor(n, bw, entry) {
                Some(f) => {
                    chol = Some(f);
                    break;
                }
                None => sigma += 2.0 * (sigma - theta).max(1e-14),
            }
        }
        let chol = chol.ok_or_else(|| {
            Error::NonConvergence("shifted operator not positive definite".to_string())
        })?;
        let mut y = vec![0.0; n];
        let mut converged = false;
        while iters < MAX_ITERS {
            y.copy_from_slice(&v);
            chol.solve(&mut y);
            let ny = norm2(&y);
            for (vi, yi) in v.iter_mut().zip(&y) {
                *vi = yi / ny;
            }
            band_matvec(n, bw, &sw, &jvals, &v, &mut sv);
            let new_theta: f64 = v.iter().zip(&sv).map(|(a, b)| a * b).sum();
            let mut r2 = 0.0;
            for i in 0..n {
                let r = sv[i] - new_theta * v[i];
                r2 += r * r;
            }
            let dtheta = (new_theta - theta).abs();
            theta = new_theta;
            iters += 1;
            if r2.sqrt() <= 1e-13 * theta.abs().max(1.0)
                && dtheta <= THETA_TOL * theta.abs().max(1.0)
            {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence(format!(
                "eigenvalue iteration did not converge within {MAX_ITERS} steps"
            )));
        }
    }
    // back to the quadrature eigenvector u = v / sqrt(w), sup-normalized
    let mut eigvec: Vec<f64> = v.iter().zip(&sw).map(|(vi, si)| vi / si).collect();
    let sup = eigvec.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let flip = if eigvec[n / 2] < 0.0 { -1.0 } else { 1.0 };
    for u in eigvec.iter_mut() {
        *u *= flip / sup;
    }
    Ok(NonlocalEigen {
        lambda_star: theta - 1.0,
        eigvec,
        interval,
        dx,
    })
}

/// Sup-norm residual of the eigenpair under the same quadrature:
/// || sum_j w_j J(x_i - x_j) u_j - u_i - lambda u_i ||_inf.
pub fn residual_sup(kernel: &Kernel, e: &NonlocalEigen) -> f64 {
    let n = e.eigvec.len();
    let dx = e.dx;
    let bw = ((kernel.support_radius / dx).ceil() as usize).min(n - 1);
    let jvals: Vec<f64> = (0..=bw).map(|d| kernel.density(d as f64 * dx)).collect();
    let mut worst = 0.0f64;
    for i in 0..n {
        let lo = i.saturating_sub(bw);
        let hi = (i + bw).min(n - 1);
        let mut conv = 0.0;
        for j in lo..=hi {
            let w = if j == 0 || j == n - 1 { 0.5 * dx } else { dx };
            conv += w * jvals[i.abs_diff(j)] * e.eigvec[j];
        }
        worst = worst.max((conv - e.eigvec[i] - e.lambda_star * e.eigvec[i]).abs());
    }
    worst
}

/// Principal eigenvalue of the full periodic nonlocal system on an
/// interval: lambda1_O at rates b_i - d_i lambda1_star.
pub fn lambda1_p(
    p: &ModelParams,
    kernel: &Kernel,
    interval: (f64, f64),
    dx: f64,
) -> Result<EigenResultNonlocal> {
    let p = (*p).validated()?;
    let star = lambda1_star(kernel, interval, dx)?;
    let mut shifted = p;
    shifted.b1 = p.b1 - p.d1 * star.lambda_star;
    shifted.b2 = p.b2 - p.d2 * star.lambda_star;
    let ode = lambda1_o(&shifted)?;
    let sc = spectral_constants(&shifted);
    Ok(EigenResultNonlocal {
        kind: ode.kind,
        s1: sc.c1,
        s2: sc.c2,
        star,
        ode,
    })
}

/// lambda1_P on the current free-boundary interval [g, h], with the grid
/// spacing snapped to the interval. For delta = 1 with distinct decay
/// rates the lower generalized value is returned; it is the safe choice
/// for spreading detection (never negative when the pair is nonnegative).
pub fn lambda1_f(p: &ModelParams, kernel: &Kernel, g: f64, h: f64, dx: f64) -> Result<f64> {
    if !(g < h) {
        return Err(Error::InvalidParams(vec![format!(
            "boundary interval ({g}, {h}) must satisfy g < h"
        )]));
    }
    let r = lambda1_p(p, kernel, (g, h), dx)?;
    Ok(r.kind.lower())
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LimitRow {
    pub l: f64,
    pub lambda_p: f64,
    /// |lambda1_P([-L, L]) - lambda1_O|
    pub gap: f64,
}

/// Convergence of lambda1_P([-L, L]) to the spatial-independent lambda1_O
/// as L grows; the gaps must decrease to 0.
pub fn lambda1_o_limit_check(
    p: &ModelParams,
    kernel: &Kernel,
    l_sequence: &[f64],
    dx: f64,
) -> Result<Vec<LimitRow>> {
    if p.delta >= 1.0 {
        return Err(Error::InvalidParams(vec![
            "delta must be < 1 for the infinite-interval limit".to_string(),
        ]));
    }
    let target = lambda1_o(p)?
        .kind
        .principal()
        .expect("delta < 1 gives a principal value");
    l_sequence
        .iter()
        .map(|&l| {
            let r = lambda1_p(p, kernel, (-l, l), dx)?;
            let lam = r.kind.principal().expect("delta < 1 gives a principal value");
            Ok(LimitRow {
                l,
                lambda_p: lam,
                gap: (lam - target).abs(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_kernel, KernelKind};
    use crate::testutil::unit_params;

    fn tent1() -> Kernel {
        make_kernel(KernelKind::Tent { radius: 1.0 }).unwrap()
    }

    #[test]
    fn tent_reference_value() {
        let e = lambda1_star(&tent1(), (-1.0, 1.0), 0.01).unwrap();
        assert!((e.lambda_star - (-0.1284914338126768)).abs() < 1e-11);
        assert!(e.lambda_star > -1.0 && e.lambda_star < 0.0);
        assert!(e.eigvec.iter().all(|&u| u > 0.0));
        let sup = e.eigvec.iter().cloned().fold(0.0f64, f64::max);
        assert!((sup - 1.0).abs() < 1e-15);
    }

    #[test]
    fn tent_reference_values_larger_intervals() {
        for (l, want) in [
            (2.0, -0.04072139640536454),
            (4.0, -0.011450556278622792),
            (8.0, -0.003033642756256949),
        ] {
            let e = lambda1_star(&tent1(), (-l, l), 0.01).unwrap();
            assert!(
                (e.lambda_star - want).abs() < 1e-10,
                "L={l}: {} vs {want}",
                e.lambda_star
            );
        }
    }

    #[test]
    fn gaussian_reference_value() {
        let k = make_kernel(KernelKind::TruncatedGaussian { sigma: 1.0 }).unwrap();
        let e = lambda1_star(&k, (-2.0, 2.0), 0.02).unwrap();
        assert!((e.lambda_star - (-0.16826741229644837)).abs() < 1e-10);
    }

    #[test]
    fn translation_invariance() {
        let a = lambda1_star(&tent1(), (-1.0, 1.0), 0.01).unwrap();
        let b = lambda1_star(&tent1(), (0.0, 2.0), 0.01).unwrap();
        assert!((a.lambda_star - b.lambda_star).abs() < 1e-12);
    }

    #[test]
    fn monotone_in_interval_length() {
        let mut prev = f64::NEG_INFINITY;
        for l in [1.0, 2.0, 4.0, 8.0] {
            let e = lambda1_star(&tent1(), (-l, l), 0.01).unwrap();
            assert!(e.lambda_star > prev, "not increasing at L={l}");
            assert!(e.lambda_star < 0.0);
            prev = e.lambda_star;
        }
    }

    #[test]
    fn residual_small() {
        let k = tent1();
        let e = lambda1_star(&k, (-2.0, 2.0), 0.02).unwrap();
        assert!(residual_sup(&k, &e) <= 1e-8);
    }

    #[test]
    fn dense_oracle_agreement() {
        let k = tent1();
        let (l1, l2, dx) = (-1.5, 1.5, 0.02);
        let e = lambda1_star(&k, (l1, l2), dx).unwrap();
        let n = e.eigvec.len();
        let mut s = nalgebra::DMatrix::<f64>::zeros(n, n);
        let w = |j: usize| if j == 0 || j == n - 1 { 0.5 * dx } else { dx };
        for i in 0..n {
            for j in 0..n {
                s[(i, j)] = (w(i) * w(j)).sqrt() * k.density((i as f64 - j as f64) * dx);
            }
        }
        let rho = s
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((e.lambda_star - (rho - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn lambda_p_reduces_to_ode_without_dispersal() {
        let mut p = unit_params();
        p.d1 = 0.0;
        p.d2 = 0.0;
        let r = lambda1_p(&p, &tent1(), (-1.0, 1.0), 0.01).unwrap();
        let ode = lambda1_o(&p).unwrap();
        assert_eq!(r.kind.principal(), ode.kind.principal());
    }

    #[test]
    fn lambda_p_decreasing_in_interval() {
        let p = unit_params();
        let small = lambda1_p(&p, &tent1(), (-1.0, 1.0), 0.01).unwrap();
        let large = lambda1_p(&p, &tent1(), (-2.0, 2.0), 0.01).unwrap();
        assert!(small.kind.principal().unwrap() > large.kind.principal().unwrap());
    }

    #[test]
    fn lambda_f_matches_lambda_p_and_rejects_empty() {
        let p = unit_params();
        let f = lambda1_f(&p, &tent1(), -1.0, 1.0, 0.01).unwrap();
        let r = lambda1_p(&p, &tent1(), (-1.0, 1.0), 0.01).unwrap();
        assert_eq!(f, r.kind.principal().unwrap());
        assert!(lambda1_f(&p, &tent1(), 1.0, 1.0, 0.01).is_err());
    }

    #[test]
    fn limit_check_gaps_decrease() {
        let mut p = unit_params();
        p.d1 = 0.1;
        p.d2 = 0.1;
        let rows = lambda1_o_limit_check(&p, &tent1(), &[2.0, 4.0, 8.0], 0.02).unwrap();
        assert!(rows[0].gap > rows[1].gap && rows[1].gap > rows[2].gap);
    }

    #[test]
    fn delta_one_pair_propagates() {
        let mut p = unit_params();
        p.delta = 1.0;
        p.k = 3.0;
        p.d1 = 0.5;
        let r = lambda1_p(&p, &tent1(), (-1.0, 1.0), 0.01).unwrap();
        match r.kind {
            EigenKind::GeneralizedPair { upper, lower } => {
                assert_eq!(upper, 3.0);
                assert!(lower > 1.0); // b1 - d1 lambda_star > b1
            }
            _ => panic!("expected a generalized pair"),
        }
        let f = lambda1_f(&p, &tent1(), -1.0, 1.0, 0.01).unwrap();
        assert_eq!(f, r.kind.lower());
    }
}
