//! Principal (and generalized) eigenvalues of the spatial-independent
//! switched periodic system
//!
//!   phi' = a1 e1 psi - b1 phi + lambda phi   (warm)
//!   psi' = a2 e2 phi - b2 psi + lambda psi   (warm)
//!   phi' = -b1 phi + lambda phi              (cold)
//!   psi' = -k  psi + lambda psi              (cold)
//!
//! with period omega and cold fraction delta. For delta < 1 a principal
//! eigenvalue with a positive periodic eigenfunction pair exists; it is
//! computed from a quadratic in Lambda = exp(lambda omega) obtained by
//! matching the warm-season fundamental solution to the cold-season
//! exponentials. For delta = 1 only the generalized pair
//! (max{b1,k}, min{b1,k}) exists.
//!
//! An independent monodromy oracle (product of closed-form 2x2 matrix
//! exponentials over one period) is provided as a cross-check.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dominant_eig2, expm2, matmul2, Mat2};
use crate::model::ModelParams;

/// Roots of the warm-season characteristic equation and the shifted
/// analogues used by the nonlocal composition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConstants {
    pub c1: f64,
    pub c2: f64,
    pub c0: f64,
    /// c1/c2 with b_i replaced by b_i - d_i lambda1_star; populated by the
    /// nonlocal module, absent for a plain spatial-independent computation.
    pub s1: Option<f64>,
    pub s2: Option<f64>,
}

/// c_{1,2} = [-(b1+b2) +- sqrt((b1-b2)^2 + 4 a1 a2 e1 e2)]/2,
/// C0 = a1 a2 e1 e2 + (b1+c1)^2. Always real; c1 >= c2 and
/// b1 + c1 = -(b2 + c2) > 0.
pub fn spectral_constants(p: &ModelParams) -> SpectralConstants {
    let q = p.a1 * p.a2 * p.e1 * p.e2;
    let disc = ((p.b1 - p.b2).powi(2) + 4.0 * q).sqrt();
    let c1 = 0.5 * (-(p.b1 + p.b2) + disc);
    let c2 = 0.5 * (-(p.b1 + p.b2) - disc);
    SpectralConstants {
        c1,
        c2,
        c0: q + (p.b1 + c1).powi(2),
        s1: None,
        s2: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EigenKind {
    Principal(f64),
    GeneralizedPair { upper: f64, lower: f64 },
}

impl EigenKind {
    pub fn principal(&self) -> Option<f64> {
        match self {
            EigenKind::Principal(v) => Some(*v),
            EigenKind::GeneralizedPair { .. } => None,
        }
    }

    pub fn upper(&self) -> f64 {
        match self {
            EigenKind::Principal(v) => *v,
            EigenKind::GeneralizedPair { upper, .. } => *upper,
        }
    }

    pub fn lower(&self) -> f64 {
        match self {
            EigenKind::Principal(v) => *v,
            EigenKind::GeneralizedPair { lower, .. } => *lower,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseTag {
    KEqualsB1,
    KGreater,
    KLess,
    DeltaOne,
}

#[derive(Debug, Clone)]
pub struct EigenResultODE {
    pub kind: EigenKind,
    /// mixture coefficient of the second fundamental mode
    pub m: f64,
    /// Lambda = exp(lambda omega)
    pub lambda_cap: f64,
    pub case_tag: CaseTag,
    /// eigenfunction samples over [0, omega], normalized psi(0) = 1;
    /// empty for the delta = 1 generalized pair
    pub times: Vec<f64>,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    /// the eight A_ij coefficients of the matching system (diagnostics);
    /// present only on the quadratic path
    pub a_coeffs: Option<[f64; 8]>,
}

/// Sample count for eigenfunction reconstruction.
const N_SAMPLES: usize = 256;

/// The eight matching coefficients: A11..A14, A21..A24 (all positive).
fn a_coefficients(p: &ModelParams, sc: &SpectralConstants) -> [f64; 8] {
    let w = (1.0 - p.delta) * p.omega;
    let dw = p.delta * p.omega;
    [
        p.a1 * p.e1 * (sc.c1 * w).exp(),
        (p.b1 + sc.c1) * (sc.c2 * w).exp(),
        (p.b1 + sc.c1) * (p.b1 * dw).exp(),
        p.a1 * p.e1 * (p.b1 * dw).exp(),
        -(p.b2 + sc.c2) * (sc.c1 * w).exp(),
        p.a2 * p.e2 * (sc.c2 * w).exp(),
        p.a2 * p.e2 * (p.k * dw).exp(),
        -(p.b2 + sc.c2) * (p.k * dw).exp(),
    ]
}

/// Coefficients (A, B, C) of the Lambda-quadratic A L^2 - B L + C = 0.
/// Note: eliminating m from the matching system gives
/// B = A13 A21 + A11 A23 + A22 A14 + A12 A24 (all plus), and A, C > 0.
fn lambda_quadratic(a: &[f64; 8]) -> (f64, f64, f64) {
    let [a11, a12, a13, a14, a21, a22, a23, a24] = *a;
    (
        a11 * a22 + a12 * a21,
        a13 * a21 + a11 * a23 + a22 * a14 + a12 * a24,
        a23 * a14 + a13 * a24,
    )
}

/// Recover m from Lambda via whichever matching equation is better
/// conditioned.
fn recover_m(a: &[f64; 8], cap: f64) -> f64 {
    let [a11, a12, a13, a14, a21, a22, a23, a24] = *a;
    let den1 = a13 - a12 * cap;
    let den2 = a22 * cap - a23;
    if den1.abs() >= den2.abs() {
        (a14 - a11 * cap) / den1
    } else {
        (a24 - a21 * cap) / den2
    }
}

/// Sample the candidate eigenfunction pair over [0, omega] for a given
/// (lambda, m): the warm-season fundamental combination continued through
/// the cold season by the decoupled exponentials. Returns (times, phi, psi)
/// unnormalized.
fn sample_pair(
    p: &ModelParams,
    sc: &SpectralConstants,
    lambda: f64,
    m: f64,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let tw = (1.0 - p.delta) * p.omega;
    let n_w = ((N_SAMPLES as f64) * (1.0 - p.delta)).round().max(2.0) as usize;
    let n_c = if p.delta > 0.0 {
        ((N_SAMPLES as f64) * p.delta).round().max(2.0) as usize
    } else {
        0
    };
    let mu1 = lambda + sc.c1;
    let mu2 = lambda + sc.c2;
    let warm_phi = |t: f64| (p.a1 * p.e1 * (mu1 * t).exp() - (p.b1 + sc.c1) * m * (mu2 * t).exp()) / sc.c0;
    let warm_psi =
        |t: f64| (-(p.b2 + sc.c2) * (mu1 * t).exp() + p.a2 * p.e2 * m * (mu2 * t).exp()) / sc.c0;
    let mut times = Vec::with_capacity(n_w + n_c + 1);
    let mut phi = Vec::with_capacity(n_w + n_c + 1);
    let mut psi = Vec::with_capacity(n_w + n_c + 1);
    for i in 0..=n_w {
        let t = tw * i as f64 / n_w as f64;
        times.push(t);
        phi.push(warm_phi(t));
        psi.push(warm_psi(t));
    }
    if n_c > 0 {
        let (pw, qw) = (phi[n_w], psi[n_w]);
        for i in 1..=n_c {
            let t = tw + (p.omega - tw) * i as f64 / n_c as f64;
            times.push(t);
            phi.push(pw * ((lambda - p.b1) * (t - tw)).exp());
            psi.push(qw * ((lambda - p.k) * (t - tw)).exp());
        }
    }
    (times, phi, psi)
}

fn is_positive_pair(phi: &[f64], psi: &[f64]) -> bool {
    let scale = phi
        .iter()
        .chain(psi.iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let slack = -1e-12 * scale.max(f64::MIN_POSITIVE);
    phi.iter().all(|&v| v > slack) && psi.iter().all(|&v| v > slack)
}

/// Assemble a principal result: normalize psi(0) = 1 and package.
fn principal_result(
    p: &ModelParams,
    sc: &SpectralConstants,
    lambda: f64,
    m: f64,
    case_tag: CaseTag,
    a_coeffs: Option<[f64; 8]>,
) -> EigenResultODE {
    let (times, mut phi, mut psi) = sample_pair(p, sc, lambda, m);
    let norm = psi[0];
    for v in phi.iter_mut().chain(psi.iter_mut()) {
        *v /= norm;
    }
    EigenResultODE {
        kind: EigenKind::Principal(lambda),
        m,
        lambda_cap: (lambda * p.omega).exp(),
        case_tag,
        times,
        phi,
        psi,
        a_coeffs,
    }
}

/// Principal eigenvalue of the switched spatial-independent system, or the
/// generalized pair when delta = 1 and b1 != k.
pub fn lambda1_o(p: &ModelParams) -> Result<EigenResultODE> {
    let p = (*p).validated()?;
    if p.delta >= 1.0 {
        let kind = if p.b1 == p.k {
            EigenKind::Principal(p.b1)
        } else {
            EigenKind::GeneralizedPair {
                upper: p.b1.max(p.k),
                lower: p.b1.min(p.k),
            }
        };
        return Ok(EigenResultODE {
            kind,
            m: 0.0,
            lambda_cap: f64::NAN,
            case_tag: CaseTag::DeltaOne,
            times: Vec::new(),
            phi: Vec::new(),
            psi: Vec::new(),
            a_coeffs: None,
        });
    }
    let sc = spectral_constants(&p);
    if p.k == p.b1 {
        // closed form: the matching system collapses to m = 0,
        // Lambda = exp(b1 delta omega - c1 (1-delta) omega)
        let lambda = (p.b1 + sc.c1) * p.delta - sc.c1;
        return Ok(principal_result(&p, &sc, lambda, 0.0, CaseTag::KEqualsB1, None));
    }
    let a = a_coefficients(&p, &sc);
    let (qa, qb, qc) = lambda_quadratic(&a);
    let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
    // stable pair: qa, qb, qc > 0, so the + branch has no cancellation
    let cap1 = (qb + disc.sqrt()) / (2.0 * qa);
    let cap2 = qc / (qa * cap1);
    let mut selected: Option<(f64, f64)> = None;
    let mut n_positive = 0;
    for cap in [cap1, cap2] {
        if !(cap > 0.0) {
            continue;
        }
        let m = recover_m(&a, cap);
        let lambda = cap.ln() / p.omega;
        let (_, phi, psi) = sample_pair(&p, &sc, lambda, m);
        if is_positive_pair(&phi, &psi) {
            n_positive += 1;
            selected = Some((lambda, m));
        }
    }
    if n_positive != 1 {
        return Err(Error::RootSelection(format!(
            "{n_positive} of 2 candidate roots have positive eigenfunctions \
             (Lambda candidates {cap1}, {cap2})"
        )));
    }
    let (lambda, m) = selected.unwrap();
    let case_tag = if p.k > p.b1 {
        CaseTag::KGreater
    } else {
        CaseTag::KLess
    };
    Ok(principal_result(&p, &sc, lambda, m, case_tag, Some(a)))
}

/// Region membership diagnostic for the quadratic path: the admissible root
/// lies in D1 = ((b2+c2)/(a2 e2), 0) x (e^{b1 dw - c1 w}, e^{k dw - c1 w})
/// when k > b1 and in D4 = (0, a1 e1/(b1+c1)) x (e^{k dw - c1 w},
/// e^{b1 dw - c1 w}) when k < b1.
pub fn in_admissible_region(p: &ModelParams, m: f64, cap: f64) -> bool {
    let sc = spectral_constants(p);
    let w = (1.0 - p.delta) * p.omega;
    let dw = p.delta * p.omega;
    let cap_b1 = (p.b1 * dw - sc.c1 * w).exp();
    let cap_k = (p.k * dw - sc.c1 * w).exp();
    if p.k > p.b1 {
        let m_lo = (p.b2 + sc.c2) / (p.a2 * p.e2);
        m_lo < m && m < 0.0 && cap_b1 < cap && cap < cap_k
    } else {
        let m_hi = p.a1 * p.e1 / (p.b1 + sc.c1);
        0.0 < m && m < m_hi && cap_k < cap && cap < cap_b1
    }
}

/// Monodromy oracle: the period map M = exp(A_c delta omega)
/// exp(A_w (1-delta) omega) of the unshifted generators has Perron root
/// rho = exp(-lambda omega), so lambda = -ln(rho)/omega.
pub fn lambda1_o_oracle(p: &ModelParams) -> f64 {
    let aw: Mat2 = [[-p.b1, p.a1 * p.e1], [p.a2 * p.e2, -p.b2]];
    let ac: Mat2 = [[-p.b1, 0.0], [0.0, -p.k]];
    let w = (1.0 - p.delta) * p.omega;
    let dw = p.delta * p.omega;
    let m = matmul2(&expm2(&scale2(&ac, dw)), &expm2(&scale2(&aw, w)));
    -dominant_eig2(&m).ln() / p.omega
}

fn scale2(a: &Mat2, s: f64) -> Mat2 {
    [[a[0][0] * s, a[0][1] * s], [a[1][0] * s, a[1][1] * s]]
}

/// LHS - RHS of the zero-level condition for 0 < delta < 1:
///
///   a1 e1 (e^{c1 w} - e^{b1 dw}) / [(b1+c1)(e^{c2 w} - e^{b1 dw})]
///     = (b2+c2)(e^{c1 w} - e^{k dw}) / [a2 e2 (e^{c2 w} - e^{k dw})]
///
/// which vanishes exactly when lambda1_O = 0.
pub fn zero_level_residual(p: &ModelParams) -> Result<f64> {
    if !(p.delta > 0.0 && p.delta < 1.0) {
        return Err(Error::InvalidParams(vec![
            "delta must be in (0,1) for the zero-level condition".to_string(),
        ]));
    }
    let sc = spectral_constants(p);
    let w = (1.0 - p.delta) * p.omega;
    let dw = p.delta * p.omega;
    let e_c1 = (sc.c1 * w).exp();
    let e_c2 = (sc.c2 * w).exp();
    let e_b1 = (p.b1 * dw).exp();
    let e_k = (p.k * dw).exp();
    let den1 = (p.b1 + sc.c1) * (e_c2 - e_b1);
    let den2 = p.a2 * p.e2 * (e_c2 - e_k);
    let scale = e_c1.max(e_c2).max(e_b1).max(e_k);
    if den1.abs() < 1e-12 * scale || den2.abs() < 1e-12 * scale {
        return Err(Error::DegenerateDenominator);
    }
    Ok(p.a1 * p.e1 * (e_c1 - e_b1) / den1 - (p.b2 + sc.c2) * (e_c1 - e_k) / den2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SignBounds {
    pub sufficient_positive: bool,
    pub necessary_positive: bool,
    pub sufficient_negative: bool,
    pub necessary_negative: bool,
}

/// Sign conditions for lambda1_O on 0 < delta < 1, in terms of
/// min/max{b1,k} delta versus c1 (1-delta).
pub fn sign_bounds(p: &ModelParams) -> SignBounds {
    let sc = spectral_constants(p);
    let lo = p.b1.min(p.k) * p.delta;
    let hi = p.b1.max(p.k) * p.delta;
    let rhs = sc.c1 * (1.0 - p.delta);
    SignBounds {
        sufficient_positive: lo > rhs,
        necessary_positive: hi > rhs,
        sufficient_negative: hi < rhs,
        necessary_negative: lo < rhs,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContourResult {
    /// (delta, b1) with lambda1_O(b1; delta) = 0
    pub points: Vec<(f64, f64)>,
    /// deltas where b1_range did not bracket a sign change
    pub skipped: Vec<f64>,
}

/// For each delta in the grid, bisect in b1 for the zero level of
/// lambda1_O. lambda1_O is strictly increasing in b1, and the delta = 0
/// endpoint is b1 = a1 a2 e1 e2 / b2.
pub fn contour_zero(
    p: &ModelParams,
    delta_grid: &[f64],
    b1_range: (f64, f64),
) -> Result<ContourResult> {
    let (b_lo, b_hi) = b1_range;
    if !(b_lo > 0.0 && b_hi > b_lo) {
        return Err(Error::Bracket(format!(
            "b1 range ({b_lo}, {b_hi}) must be positive and increasing"
        )));
    }
    let eval = |delta: f64, b1: f64| -> Result<f64> {
        let mut q = *p;
        q.delta = delta;
        q.b1 = b1;
        match lambda1_o(&q) {
            Ok(r) => Ok(r.kind.principal().expect("delta < 1 gives a principal value")),
            // near-degenerate root geometry: fall back to the oracle
            Err(Error::RootSelection(_)) => Ok(lambda1_o_oracle(&q)),
            Err(e) => Err(e),
        }
    };
    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for &delta in delta_grid {
        if !(0.0..1.0).contains(&delta) {
            skipped.push(delta);
            continue;
        }
        let f_lo = eval(delta, b_lo)?;
        let f_hi = eval(delta, b_hi)?;
        if f_lo > 0.0 || f_hi < 0.0 {
            skipped.push(delta);
            continue;
        }
        let (mut lo, mut hi) = (b_lo, b_hi);
        let mut root = None;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let f = eval(delta, mid)?;
            if f.abs() <= 1e-9 {
                root = Some(mid);
                break;
            }
            if f < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        match root {
            Some(b1) => points.push((delta, b1)),
            None => skipped.push(delta),
        }
    }
    Ok(ContourResult { points, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::unit_params;

    #[test]
    fn spectral_constants_all_ones() {
        let sc = spectral_constants(&unit_params());
        assert_eq!(sc.c1, 0.0);
        assert_eq!(sc.c2, -2.0);
        assert_eq!(sc.c0, 2.0);
    }

    #[test]
    fn spectral_constants_balanced_product() {
        let mut p = unit_params();
        p.b1 = 2.0;
        p.b2 = 0.5; // a1 a2 e1 e2 = 1 = b1 b2
        let sc = spectral_constants(&p);
        assert!(sc.c1.abs() < 1e-14);
    }

    #[test]
    fn spectral_constants_symmetric() {
        // b1 = b2 = b, q = product: c1 = -b + sqrt(q), c2 = -b - sqrt(q)
        let mut p = unit_params();
        p.b1 = 0.7;
        p.b2 = 0.7;
        p.a1 = 2.0; // q = 2
        let sc = spectral_constants(&p);
        assert!((sc.c1 - (-0.7 + 2f64.sqrt())).abs() < 1e-14);
        assert!((sc.c2 - (-0.7 - 2f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn case1_closed_form() {
        let p = unit_params(); // k = b1 = 1, c1 = 0, delta = 0.5
        let r = lambda1_o(&p).unwrap();
        assert_eq!(r.case_tag, CaseTag::KEqualsB1);
        assert!((r.kind.principal().unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(r.m, 0.0);
    }

    #[test]
    fn delta_zero_balanced_is_zero() {
        let mut p = unit_params();
        p.delta = 0.0;
        let r = lambda1_o(&p).unwrap();
        assert!(r.kind.principal().unwrap().abs() < 1e-14);
    }

    #[test]
    fn delta_one_pair() {
        let mut p = unit_params();
        p.delta = 1.0;
        p.k = 2.0;
        let r = lambda1_o(&p).unwrap();
        assert_eq!(
            r.kind,
            EigenKind::GeneralizedPair {
                upper: 2.0,
                lower: 1.0
            }
        );
        assert_eq!(r.case_tag, CaseTag::DeltaOne);
    }

    #[test]
    fn k_greater_bracket_and_oracle() {
        let mut p = unit_params();
        p.k = 2.0;
        let r = lambda1_o(&p).unwrap();
        let lam = r.kind.principal().unwrap();
        assert!(lam > 0.5 && lam < 1.0, "bracket violated: {lam}");
        assert!((lam - lambda1_o_oracle(&p)).abs() < 1e-12);
        assert_eq!(r.case_tag, CaseTag::KGreater);
        assert!(in_admissible_region(&p, r.m, r.lambda_cap));
    }

    #[test]
    fn oracle_case1_agreement() {
        let p = unit_params();
        assert!((lambda1_o_oracle(&p) - 0.5).abs() < 1e-13);
    }

    #[test]
    fn eigenfunctions_positive_and_periodic() {
        let mut p = unit_params();
        p.k = 0.4;
        p.b2 = 0.7;
        p.delta = 0.3;
        let r = lambda1_o(&p).unwrap();
        assert!((r.psi[0] - 1.0).abs() < 1e-15);
        assert!(r.phi.iter().all(|&v| v > 0.0));
        assert!(r.psi.iter().all(|&v| v > 0.0));
        let n = r.times.len() - 1;
        assert!((r.phi[0] - r.phi[n]).abs() <= 1e-8 * r.phi[0].abs());
        assert!((r.psi[0] - r.psi[n]).abs() <= 1e-8 * r.psi[0].abs());
        let lam = r.kind.principal().unwrap();
        assert!((r.lambda_cap - (lam * p.omega).exp()).abs() <= 1e-12 * r.lambda_cap);
    }

    #[test]
    fn zero_level_residual_matches_sign() {
        let mut p = unit_params();
        p.k = 0.8;
        p.delta = 0.4;
        // lambda1_O > 0 here (b's and k large relative to coupling)
        let lam = lambda1_o(&p).unwrap().kind.principal().unwrap();
        assert!(lam > 0.0);
        let res = zero_level_residual(&p).unwrap();
        assert!(res.abs() > 1e-10, "residual should be nonzero when lambda != 0");
    }

    #[test]
    fn zero_level_requires_interior_delta() {
        let mut p = unit_params();
        p.delta = 0.0;
        assert!(zero_level_residual(&p).is_err());
    }

    #[test]
    fn sign_bounds_case1_iff() {
        let mut p = unit_params();
        p.b1 = 0.6;
        p.k = 0.6;
        p.b2 = 1.1;
        for delta in [0.1, 0.3, 0.5, 0.7, 0.9] {
            p.delta = delta;
            let lam = lambda1_o(&p).unwrap().kind.principal().unwrap();
            let sb = sign_bounds(&p);
            if lam > 0.0 {
                assert!(sb.sufficient_positive && sb.necessary_positive);
            }
            if lam < 0.0 {
                assert!(sb.sufficient_negative || sb.necessary_negative);
                assert!(!sb.sufficient_positive);
            }
        }
    }

    #[test]
    fn contour_delta_zero_endpoint() {
        let mut p = unit_params();
        p.b2 = 0.8;
        p.k = 1.3;
        let r = contour_zero(&p, &[0.0], (0.05, 10.0)).unwrap();
        assert_eq!(r.points.len(), 1);
        let expected = p.a1 * p.a2 * p.e1 * p.e2 / p.b2;
        assert!(
            (r.points[0].1 - expected).abs() < 1e-6,
            "contour endpoint {} vs b1* {}",
            r.points[0].1,
            expected
        );
    }

    #[test]
    fn contour_flags_unbracketed_delta() {
        let mut p = unit_params();
        p.k = 1.0;
        // with delta close to 1 the eigenvalue is positive on the whole
        // b1 range, so no zero is bracketed
        let r = contour_zero(&p, &[0.95], (0.5, 2.0)).unwrap();
        assert!(r.points.is_empty());
        assert_eq!(r.skipped, vec![0.95]);
    }
}
