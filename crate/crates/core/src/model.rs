//! Model parameters, dispersal kernels and the seasonal clock.
//!
//! A year of length `omega` is split into a warm season `(mω, mω+(1−δ)ω]`
//! with the full coupled dynamics and a cold season with frozen fronts and
//! pure decay. All rates are per unit time; densities are capped by the
//! carrying values `e1`, `e2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// transmission coefficients (host <- vector, vector <- host)
    pub a1: f64,
    pub a2: f64,
    /// total bird / adult-mosquito densities
    pub e1: f64,
    pub e2: f64,
    /// bird removal rate
    pub b1: f64,
    /// warm-season mosquito death rate
    pub b2: f64,
    /// cold-season mosquito decay rate
    pub k: f64,
    /// dispersal rates
    pub d1: f64,
    pub d2: f64,
    /// period length
    pub omega: f64,
    /// cold-season fraction, in [0,1]
    pub delta: f64,
    /// boundary expansion coefficients
    pub mu1: f64,
    pub mu2: f64,
    /// initial half-interval
    pub h0: f64,
}

/// Check every parameter invariant; returns one message per violation.
/// An empty report means the parameters are valid.
pub fn validate_params(p: &ModelParams) -> Vec<String> {
    let mut report = Vec::new();
    let positive = [
        ("a1", p.a1),
        ("a2", p.a2),
        ("e1", p.e1),
        ("e2", p.e2),
        ("b1", p.b1),
        ("b2", p.b2),
        ("k", p.k),
        ("omega", p.omega),
        ("h0", p.h0),
    ];
    for (name, v) in positive {
        if !(v > 0.0) {
            report.push(format!("{name} nonpositive"));
        }
    }
    let nonnegative = [("d1", p.d1), ("d2", p.d2), ("mu1", p.mu1), ("mu2", p.mu2)];
    for (name, v) in nonnegative {
        if !(v >= 0.0) {
            report.push(format!("{name} negative"));
        }
    }
    if !(0.0..=1.0).contains(&p.delta) || p.delta.is_nan() {
        report.push("delta out of [0,1]".to_string());
    }
    report
}

impl ModelParams {
    /// Validate and return self, or the full violation report as an error.
    pub fn validated(self) -> Result<Self> {
        let report = validate_params(&self);
        if report.is_empty() {
            Ok(self)
        } else {
            Err(Error::InvalidParams(report))
        }
    }

    pub fn clock(&self) -> SeasonClock {
        SeasonClock {
            omega: self.omega,
            delta: self.delta,
        }
    }
}

/// R0 = sqrt(a1 a2 e1 e2 / (b1 b2)). At delta = 0, R0 > 1 iff the principal
/// eigenvalue of the switched system is negative (high risk).
pub fn basic_reproduction_number(p: &ModelParams) -> f64 {
    (p.a1 * p.a2 * p.e1 * p.e2 / (p.b1 * p.b2)).sqrt()
}

/// Builtin dispersal kernel shapes. `Box` violates the continuity
/// assumption and is rejected by `make_kernel`; it exists so that the
/// rejection path is exercised.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelKind {
    Tent { radius: f64 },
    TruncatedGaussian { sigma: f64 },
    Box { radius: f64 },
}

/// Gaussian truncation point in units of sigma. Tail mass beyond 6 sigma is
/// below 1e-8, so renormalizing keeps the density compactly supported while
/// perturbing it only in the 9th digit.
const GAUSS_CUTOFF_SIGMAS: f64 = 6.0;

/// A symmetric dispersal density with unit mass, compact support and a
/// closed-form tail integral z -> int_z^inf J.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kernel {
    pub kind: KernelKind,
    pub support_radius: f64,
}

impl Kernel {
    pub fn density(&self, z: f64) -> f64 {
        match self.kind {
            KernelKind::Tent { radius } => {
                let a = z.abs();
                if a >= radius {
                    0.0
                } else {
                    (1.0 - a / radius) / radius
                }
            }
            KernelKind::TruncatedGaussian { sigma } => {
                let r = GAUSS_CUTOFF_SIGMAS * sigma;
                if z.abs() > r {
                    0.0
                } else {
                    let mass = libm::erf(GAUSS_CUTOFF_SIGMAS / std::f64::consts::SQRT_2);
                    (-z * z / (2.0 * sigma * sigma)).exp()
                        / (sigma * (2.0 * std::f64::consts::PI).sqrt() * mass)
                }
            }
            KernelKind::Box { radius } => {
                if z.abs() > radius {
                    0.0
                } else {
                    0.5 / radius
                }
            }
        }
    }

    /// Closed-form tail integral int_z^inf J(s) ds.
    pub fn tail(&self, z: f64) -> f64 {
        if z <= -self.support_radius {
            return 1.0;
        }
        if z >= self.support_radius {
            return 0.0;
        }
        if z < 0.0 {
            return 1.0 - self.tail(-z);
        }
        match self.kind {
            KernelKind::Tent { radius } => {
                let s = 1.0 - z / radius;
                0.5 * s * s
            }
            KernelKind::TruncatedGaussian { sigma } => {
                let mass = libm::erf(GAUSS_CUTOFF_SIGMAS / std::f64::consts::SQRT_2);
                let r = GAUSS_CUTOFF_SIGMAS / std::f64::consts::SQRT_2;
                let zz = z / (sigma * std::f64::consts::SQRT_2);
                (libm::erf(r) - libm::erf(zz)) / (2.0 * mass)
            }
            KernelKind::Box { radius } => 0.5 * (1.0 - z / radius),
        }
    }

    /// Sample-based checks of the kernel assumptions: symmetry, unit mass,
    /// positivity at the origin, boundedness and a discrete continuity
    /// modulus (which is what rejects a box kernel). Quadrature for the mass
    /// uses composite Simpson so the tolerance 1e-10 is attainable.
    pub fn check_invariants(&self) -> Vec<String> {
        let mut report = Vec::new();
        let r = self.support_radius;
        if !(r > 0.0) {
            report.push("support radius nonpositive".to_string());
            return report;
        }
        let n = 10_000usize; // even, so +-r, 0 are Simpson panel ends
        let dx = 2.0 * r / n as f64;
        let mut vals = Vec::with_capacity(n + 1);
        for i in 0..=n {
            vals.push(self.density(-r + i as f64 * dx));
        }
        // symmetry
        let sup = vals.iter().cloned().fold(0.0, f64::max);
        for i in 0..=n / 2 {
            if (vals[i] - vals[n - i]).abs() > 1e-12 * sup.max(1.0) {
                report.push("density not symmetric".to_string());
                break;
            }
        }
        // unit mass (Simpson)
        let mut mass = vals[0] + vals[n];
        for (i, v) in vals.iter().enumerate().take(n).skip(1) {
            mass += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
        }
        mass *= dx / 3.0;
        if (mass - 1.0).abs() > 1e-10 {
            report.push(format!("mass {mass} deviates from 1"));
        }
        if !(self.density(0.0) > 0.0) {
            report.push("density(0) not positive".to_string());
        }
        if !sup.is_finite() {
            report.push("density unbounded".to_string());
        }
        // discrete continuity modulus: successive differences must scale
        // with dx; a jump discontinuity stays O(1) no matter how fine the grid
        let slope_cap = 100.0 * sup / r;
        for w in vals.windows(2) {
            if (w[1] - w[0]).abs() > slope_cap * dx {
                report.push("density violates the continuity modulus".to_string());
                break;
            }
        }
        // the density is 0 outside the support, so continuity also forces
        // it to vanish at the support edge (rejects a box kernel, whose
        // jump sits exactly at +-r where the sweep above cannot see it)
        if vals[0].abs() > slope_cap * dx || vals[n].abs() > slope_cap * dx {
            report.push("density violates the continuity modulus at the support edge".to_string());
        }
        // tail sanity
        if (self.tail(0.0) - 0.5).abs() > 1e-12 {
            report.push("tail(0) != 1/2".to_string());
        }
        report
    }
}

/// Construct a builtin kernel and verify the kernel assumptions.
pub fn make_kernel(kind: KernelKind) -> Result<Kernel> {
    let support_radius = match kind {
        KernelKind::Tent { radius } | KernelKind::Box { radius } => {
            if !(radius > 0.0) {
                return Err(Error::Kernel("nonpositive radius".to_string()));
            }
            radius
        }
        KernelKind::TruncatedGaussian { sigma } => {
            if !(sigma > 0.0) {
                return Err(Error::Kernel("nonpositive sigma".to_string()));
            }
            GAUSS_CUTOFF_SIGMAS * sigma
        }
    };
    let kernel = Kernel {
        kind,
        support_radius,
    };
    let report = kernel.check_invariants();
    if report.is_empty() {
        Ok(kernel)
    } else {
        Err(Error::Kernel(report.join("; ")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Warm,
    Cold,
}

/// Season clock: warm on (0, (1-delta) omega] within each period, cold on
/// the rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeasonClock {
    pub omega: f64,
    pub delta: f64,
}

impl SeasonClock {
    pub fn warm_len(&self) -> f64 {
        (1.0 - self.delta) * self.omega
    }

    pub fn cold_len(&self) -> f64 {
        self.delta * self.omega
    }

    pub fn phase(&self, t: f64) -> Phase {
        let r = t.rem_euclid(self.omega);
        if r > 0.0 && r <= self.warm_len() {
            Phase::Warm
        } else {
            Phase::Cold
        }
    }
}
