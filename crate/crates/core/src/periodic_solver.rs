//! Seasonal dynamics on a fixed interval and the associated periodic
//! solutions.
//!
//! Three solvers:
//! - `solve_fixed`: time-marches the coupled system on a fixed interval
//!   (warm season: nonlocal dispersal + cooperative reaction; cold season:
//!   nonlocal decay for u1, exact exponential decay for u2).
//! - `periodic_from_above` / `periodic_from_below`: monotone iteration of
//!   the period map from the constant upper solution (e1, e2) or from a
//!   small multiple of the principal eigenfunction pair; both converge to
//!   the unique positive periodic solution when it exists.
//! - `ode_periodic`: the spatial-independent periodic solution via the
//!   maximal-sequence iteration with shifts K1 = a1 e2 + b1 and
//!   K2 = a2 e1 + b2 + k, integrated exactly against the linear part.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fb_sim::positivity_dt_bound;
use crate::model::{Kernel, ModelParams, Phase};
use crate::nonlocal_eigen::lambda1_p;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Origin {
    FromAbove,
    FromBelow,
    MaximalSequence,
}

/// A periodic solution of the fixed-interval problem, sampled at the
/// period start (t = 0).
#[derive(Debug, Clone)]
pub struct PeriodicSolution {
    pub x: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    /// sup difference between the last two period-start snapshots
    pub residual: f64,
    pub origin: Origin,
    pub periods: usize,
}

/// The spatial-independent periodic solution sampled over one period.
#[derive(Debug, Clone)]
pub struct OdePeriodic {
    pub times: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub residual: f64,
    pub origin: Origin,
    pub iterations: usize,
}

impl OdePeriodic {
    /// Linear interpolation at time t in [0, omega].
    pub fn at(&self, t: f64) -> (f64, f64) {
        let n = self.times.len();
        let mut j = 1;
        while j < n - 1 && self.times[j] < t {
            j += 1;
        }
        let (t0, t1) = (self.times[j - 1], self.times[j]);
        let s = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
        (
            self.u1[j - 1] + s * (self.u1[j] - self.u1[j - 1]),
            self.u2[j - 1] + s * (self.u2[j] - self.u2[j - 1]),
        )
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolverSettings {
    pub dx: f64,
    /// cap on the time step; the positivity bound applies in addition
    pub dt_max: Option<f64>,
    /// period-map convergence: sup difference between successive
    /// period-start snapshots
    pub period_tol: f64,
    pub max_periods: usize,
    /// record a snapshot every this many steps (0 = endpoints only)
    pub record_every: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            dx: 0.05,
            dt_max: None,
            period_tol: 1e-8,
            max_periods: 5000,
            record_every: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FixedTrajectory {
    pub x: Vec<f64>,
    pub dx: f64,
    /// snapshot times (always includes t = 0 and t = t_end)
    pub times: Vec<f64>,
    pub snaps_u1: Vec<Vec<f64>>,
    pub snaps_u2: Vec<Vec<f64>>,
}

impl FixedTrajectory {
    pub fn final_u1(&self) -> &[f64] {
        self.snaps_u1.last().expect("trajectory has snapshots")
    }
    pub fn final_u2(&self) -> &[f64] {
        self.snaps_u2.last().expect("trajectory has snapshots")
    }
}

/// Uniform closed grid on the interval; dx snapped so cells tile exactly.
pub fn grid_points(interval: (f64, f64), dx: f64) -> Result<(Vec<f64>, f64)> {
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
    let dx = len / n_cells as f64;
    Ok(((0..=n_cells).map(|i| l1 + i as f64 * dx).collect(), dx))
}

/// Quadrature convolution sum_j w_j J(x_i - x_j) u_j with trapezoid
/// weights, restricted to the kernel support band.
fn convolve(jvals: &[f64], dx: f64, u: &[f64], out: &mut [f64]) {
    let n = u.len();
    let bw = jvals.len() - 1;
    for i in 0..n {
        let lo = i.saturating_sub(bw);
        let hi = (i + bw).min(n - 1);
        let mut acc = 0.0;
        for j in lo..=hi {
            let w = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
            acc += w * jvals[i.abs_diff(j)] * u[j];
        }
        out[i] = acc * dx;
    }
}

fn kernel_band(kernel: &Kernel, dx: f64, n: usize) -> Vec<f64> {
    let bw = ((kernel.support_radius / dx).ceil() as usize).min(n - 1);
    (0..=bw).map(|d| kernel.density(d as f64 * dx)).collect()
}

struct FixedStepper<'a> {
    p: &'a ModelParams,
    dx: f64,
    j1: Vec<f64>,
    j2: Vec<f64>,
    dt_max: f64,
    conv: Vec<f64>,
}

impl<'a> FixedStepper<'a> {
    fn new(p: &'a ModelParams, j1: &Kernel, j2: &Kernel, n: usize, dx: f64, s: &SolverSettings) -> Self {
        let mut dt_max = positivity_dt_bound(p);
        if let Some(cap) = s.dt_max {
            dt_max = dt_max.min(cap);
        }
        FixedStepper {
            p,
            dx,
            j1: kernel_band(j1, dx, n),
            j2: kernel_band(j2, dx, n),
            dt_max,
            conv: vec![0.0; n],
        }
    }

    fn step_warm(&mut self, u1: &mut [f64], u2: &mut [f64], dt: f64) {
        let p = self.p;
        convolve(&self.j1, self.dx, u1, &mut self.conv);
        let new1: Vec<f64> = u1
            .iter()
            .zip(u2.iter())
            .zip(&self.conv)
            .map(|((&v1, &v2), &c)| {
                v1 + dt * (p.d1 * (c - v1) + p.a1 * (p.e1 - v1) * v2 - p.b1 * v1)
            })
            .collect();
        convolve(&self.j2, self.dx, u2, &mut self.conv);
        for (i, (v2, &c)) in u2.iter_mut().zip(&self.conv).enumerate() {
            *v2 += dt * (p.d2 * (c - *v2) + p.a2 * (p.e2 - *v2) * u1[i] - p.b2 * *v2);
        }
        u1.copy_from_slice(&new1);
    }

    fn step_cold_u1(&mut self, u1: &mut [f64], dt: f64) {
        let p = self.p;
        convolve(&self.j1, self.dx, u1, &mut self.conv);
        for (v1, &c) in u1.iter_mut().zip(&self.conv) {
            *v1 += dt * (p.d1 * (c - *v1) - p.b1 * *v1);
        }
    }
}

/// Time-march the fixed-interval seasonal system from `init` to `t_end`.
pub fn solve_fixed(
    p: &ModelParams,
    j1: &Kernel,
    j2: &Kernel,
    interval: (f64, f64),
    init: (&[f64], &[f64]),
    t_end: f64,
    settings: &SolverSettings,
) -> Result<FixedTrajectory> {
    let p = (*p).validated()?;
    let (x, dx) = grid_points(interval, settings.dx)?;
    let n = x.len();
    if init.0.len() != n || init.1.len() != n {
        return Err(Error::InvalidParams(vec![format!(
            "initial data length {} does not match grid size {n}",
            init.0.len()
        )]));
    }
    let mut u1 = init.0.to_vec();
    let mut u2 = init.1.to_vec();
    let mut stepper = FixedStepper::new(&p, j1, j2, n, dx, settings);
    let mut traj = FixedTrajectory {
        x,
        dx,
        times: vec![0.0],
        snaps_u1: vec![u1.clone()],
        snaps_u2: vec![u2.clone()],
    };
    let clock = p.clock();
    let eps = 1e-12 * p.omega;
    let mut t = 0.0;
    let mut step_count = 0usize;
    while t < t_end - eps {
        // segment = remainder of the current phase, clipped to t_end
        let r = t - p.omega * (t / p.omega).floor();
        let (phase, phase_end) = if p.delta >= 1.0 {
            (Phase::Cold, t - r + p.omega)
        } else if r < clock.warm_len() - eps {
            (Phase::Warm, t - r + clock.warm_len())
        } else {
            (Phase::Cold, t - r + p.omega)
        };
        let seg_end = phase_end.min(t_end);
        let seg_len = seg_end - t;
        let n_steps = (seg_len / stepper.dt_max).ceil().max(1.0) as usize;
        let dt = seg_len / n_steps as f64;
        let u2_seg_start = if phase == Phase::Cold { Some(u2.clone()) } else { None };
        for s in 1..=n_steps {
            match phase {
                Phase::Warm => stepper.step_warm(&mut u1, &mut u2, dt),
                Phase::Cold => {
                    stepper.step_cold_u1(&mut u1, dt);
                    // u2 decays in closed form from the segment start
                    let factor = (-p.k * dt * s as f64).exp();
                    for (v, &v0) in u2.iter_mut().zip(u2_seg_start.as_ref().unwrap()) {
                        *v = v0 * factor;
                    }
                }
            }
            step_count += 1;
            let t_now = t + dt * s as f64;
            let at_end = s == n_steps && seg_end >= t_end - eps;
            if at_end || (settings.record_every > 0 && step_count.is_multiple_of(settings.record_every)) {
                traj.times.push(t_now);
                traj.snaps_u1.push(u1.clone());
                traj.snaps_u2.push(u2.clone());
            }
        }
        t = seg_end;
    }
    Ok(traj)
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn iterate_period_map(
    p: &ModelParams,
    kernel: &Kernel,
    interval: (f64, f64),
    mut u1: Vec<f64>,
    mut u2: Vec<f64>,
    settings: &SolverSettings,
    origin: Origin,
) -> Result<PeriodicSolution> {
    let one_period = SolverSettings {
        record_every: 0,
        ..*settings
    };
    for period in 1..=settings.max_periods {
        let traj = solve_fixed(
            p,
            kernel,
            kernel,
            interval,
            (&u1, &u2),
            p.omega,
            &one_period,
        )?;
        let r = sup_diff(traj.final_u1(), &u1).max(sup_diff(traj.final_u2(), &u2));
        u1 = traj.final_u1().to_vec();
        u2 = traj.final_u2().to_vec();
        if r <= settings.period_tol {
            let (x, _) = grid_points(interval, settings.dx)?;
            return Ok(PeriodicSolution {
                x,
                u1,
                u2,
                residual: r,
                origin,
                periods: period,
            });
        }
    }
    Err(Error::NonConvergence(format!(
        "period map not converged within {} periods",
        settings.max_periods
    )))
}

/// Maximal periodic solution: iterate the period map from the constant
/// upper solution (e1, e2). Converges to the positive periodic solution
/// when one exists, to (0, 0) otherwise.
pub fn periodic_from_above(
    p: &ModelParams,
    kernel: &Kernel,
    interval: (f64, f64),
    settings: &SolverSettings,
) -> Result<PeriodicSolution> {
    let (x, _) = grid_points(interval, settings.dx)?;
    let u1 = vec![p.e1; x.len()];
    let u2 = vec![p.e2; x.len()];
    iterate_period_map(p, kernel, interval, u1, u2, settings, Origin::FromAbove)
}

/// Minimal iteration: start from eps times the separable principal
/// eigenfunction pair at t = 0. Requires lambda1_P(interval) < 0 so the
/// start is a lower solution; by uniqueness the limit matches
/// `periodic_from_above`.
pub fn periodic_from_below(
    p: &ModelParams,
    kernel: &Kernel,
    interval: (f64, f64),
    eps: f64,
    settings: &SolverSettings,
) -> Result<PeriodicSolution> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParams(vec![format!("eps {eps} nonpositive")]));
    }
    let r = lambda1_p(p, kernel, interval, settings.dx)?;
    let lam = r.kind.upper();
    if lam >= 0.0 {
        return Err(Error::InvalidParams(vec![format!(
            "lambda1_P = {lam} >= 0: no positive periodic solution to approach"
        )]));
    }
    let phi0 = r.ode.phi[0];
    let psi0 = r.ode.psi[0];
    // scale so the start stays below (e1, e2)
    let sup_g = 1.0; // eigvec is sup-normalized
    let cap = (p.e1 / (phi0 * sup_g)).min(p.e2 / (psi0 * sup_g));
    let eps = eps.min(0.5 * cap);
    let u1: Vec<f64> = r.star.eigvec.iter().map(|&g| eps * phi0 * g).collect();
    let u2: Vec<f64> = r.star.eigvec.iter().map(|&g| eps * psi0 * g).collect();
    iterate_period_map(p, kernel, interval, u1, u2, settings, Origin::FromBelow)
}

/// The spatial-independent periodic solution via the maximal-sequence
/// iteration: each sweep solves the linear system u' + K u = F(previous)
/// over one period with u(0) = previous(omega), using an exact exponential
/// integrator for the linear part (so constant equilibria are fixed points
/// of the discretization).
pub fn ode_periodic(p: &ModelParams, settings: &SolverSettings) -> Result<OdePeriodic> {
    let p = (*p).validated()?;
    let clock = p.clock();
    let mut dt_max = positivity_dt_bound(&p);
    if let Some(cap) = settings.dt_max {
        dt_max = dt_max.min(cap);
    }
    // time grid tiling warm then cold exactly
    let n_w = if p.delta < 1.0 {
        (clock.warm_len() / dt_max).ceil().max(1.0) as usize
    } else {
        0
    };
    let n_c = if p.delta > 0.0 {
        (clock.cold_len() / dt_max).ceil().max(1.0) as usize
    } else {
        0
    };
    let mut times = Vec::with_capacity(n_w + n_c + 1);
    for i in 0..=n_w {
        times.push(clock.warm_len() * i as f64 / n_w.max(1) as f64);
    }
    for i in 1..=n_c {
        times.push(clock.warm_len() + clock.cold_len() * i as f64 / n_c as f64);
    }
    if p.delta >= 1.0 {
        times.insert(0, 0.0);
    }
    let n = times.len();
    let k1 = p.a1 * p.e2 + p.b1;
    let k2 = p.a2 * p.e1 + p.b2 + p.k;
    // F such that the periodic problem reads u' + K u = F(u)
    let f_of = |idx: usize, v1: f64, v2: f64| -> (f64, f64) {
        let warm = idx < n_w || p.delta <= 0.0;
        if warm {
            (
                k1 * v1 + p.a1 * (p.e1 - v1) * v2 - p.b1 * v1,
                k2 * v2 + p.a2 * (p.e2 - v2) * v1 - p.b2 * v2,
            )
        } else {
            ((k1 - p.b1) * v1, (k2 - p.k) * v2)
        }
    };
    let mut u1 = vec![p.e1; n];
    let mut u2 = vec![p.e2; n];
    for iter in 1..=settings.max_periods {
        let prev1 = u1.clone();
        let prev2 = u2.clone();
        let mut v1 = prev1[n - 1];
        let mut v2 = prev2[n - 1];
        u1[0] = v1;
        u2[0] = v2;
        for j in 0..n - 1 {
            let dt = times[j + 1] - times[j];
            let (f1a, f2a) = f_of(j, prev1[j], prev2[j]);
            let (f1b, f2b) = f_of(j, prev1[j + 1], prev2[j + 1]);
            v1 = expint_step(v1, k1, f1a, f1b, dt);
            v2 = expint_step(v2, k2, f2a, f2b, dt);
            u1[j + 1] = v1;
            u2[j + 1] = v2;
        }
        let r = sup_diff(&u1, &prev1).max(sup_diff(&u2, &prev2));
        if r <= settings.period_tol {
            let residual = (u1[0] - u1[n - 1]).abs().max((u2[0] - u2[n - 1]).abs());
            return Ok(OdePeriodic {
                times,
                u1,
                u2,
                residual: residual.max(r),
                origin: Origin::MaximalSequence,
                iterations: iter,
            });
        }
    }
    Err(Error::NonConvergence(format!(
        "maximal sequence not converged within {} sweeps",
        settings.max_periods
    )))
}

/// One step of u' + K u = F(t) with F linear in t between f_a and f_b:
/// exact variation-of-constants formula.
fn expint_step(u: f64, k: f64, f_a: f64, f_b: f64, dt: f64) -> f64 {
    let alpha = (-k * dt).exp();
    let i0 = if k.abs() > 1e-300 { (1.0 - alpha) / k } else { dt };
    let i1 = if k.abs() > 1e-300 {
        (dt - i0) / k
    } else {
        0.5 * dt * dt
    };
    alpha * u + f_a * i0 + (f_b - f_a) * i1 / dt
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct DomainLimitRow {
    pub l: f64,
    pub mid_u1: f64,
    pub mid_u2: f64,
    /// sup gap of the mid-interval values to the spatial-independent
    /// periodic solution at t = 0
    pub gap: f64,
}

/// Convergence of the maximal periodic solution on [-L, L] to the
/// spatial-independent one as L grows.
pub fn domain_limit_check(
    p: &ModelParams,
    kernel: &Kernel,
    l_sequence: &[f64],
    settings: &SolverSettings,
) -> Result<Vec<DomainLimitRow>> {
    let target = ode_periodic(p, settings)?;
    let (t1, t2) = (target.u1[0], target.u2[0]);
    l_sequence
        .iter()
        .map(|&l| {
            let sol = periodic_from_above(p, kernel, (-l, l), settings)?;
            let mid = sol.x.len() / 2;
            Ok(DomainLimitRow {
                l,
                mid_u1: sol.u1[mid],
                mid_u2: sol.u2[mid],
                gap: (sol.u1[mid] - t1).abs().max((sol.u2[mid] - t2).abs()),
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

    fn settings(dx: f64) -> SolverSettings {
        SolverSettings {
            dx,
            ..SolverSettings::default()
        }
    }

    #[test]
    fn from_constant_upper_solution_nonincreasing() {
        let p = unit_params();
        let k = tent1();
        let (x, _) = grid_points((-1.0, 1.0), 0.1).unwrap();
        let e1 = vec![p.e1; x.len()];
        let e2 = vec![p.e2; x.len()];
        let s = SolverSettings {
            dx: 0.1,
            record_every: 1,
            ..SolverSettings::default()
        };
        let traj = solve_fixed(&p, &k, &k, (-1.0, 1.0), (&e1, &e2), 2.0, &s).unwrap();
        for w in traj.snaps_u1.windows(2) {
            for (a, b) in w[0].iter().zip(&w[1]) {
                assert!(b <= a, "u1 increased somewhere");
            }
        }
        for w in traj.snaps_u2.windows(2) {
            for (a, b) in w[0].iter().zip(&w[1]) {
                assert!(b <= a, "u2 increased somewhere");
            }
        }
    }

    #[test]
    fn zero_initial_data_stays_zero() {
        let p = unit_params();
        let k = tent1();
        let (x, _) = grid_points((-1.0, 1.0), 0.1).unwrap();
        let z = vec![0.0; x.len()];
        let traj = solve_fixed(&p, &k, &k, (-1.0, 1.0), (&z, &z), 1.0, &settings(0.1)).unwrap();
        assert!(traj.final_u1().iter().all(|&v| v == 0.0));
        assert!(traj.final_u2().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn cold_season_mosquito_decay_exact() {
        let mut p = unit_params();
        p.k = 1.7;
        let k = tent1();
        let (x, _) = grid_points((-1.0, 1.0), 0.1).unwrap();
        let e1 = vec![p.e1; x.len()];
        let e2 = vec![p.e2; x.len()];
        let s = SolverSettings {
            dx: 0.1,
            record_every: 1,
            ..SolverSettings::default()
        };
        let traj = solve_fixed(&p, &k, &k, (-1.0, 1.0), (&e1, &e2), 1.0, &s).unwrap();
        // locate the warm-end snapshot (t = 0.5) and the period end (t = 1)
        let warm_end = traj
            .times
            .iter()
            .position(|&t| (t - 0.5).abs() < 1e-12)
            .unwrap();
        let expect = (-p.k * 0.5).exp();
        for (a, b) in traj.snaps_u2[warm_end].iter().zip(traj.final_u2()) {
            assert!((b / a - expect).abs() <= 1e-14 * expect);
        }
    }

    #[test]
    fn ordered_initial_data_stay_ordered() {
        let p = unit_params();
        let k = tent1();
        let (x, _) = grid_points((-1.0, 1.0), 0.1).unwrap();
        let lo1: Vec<f64> = x.iter().map(|&xi| 0.3 * (1.0 - xi * xi)).collect();
        let hi1: Vec<f64> = x.iter().map(|&xi| 0.6 * (1.0 - 0.5 * xi * xi)).collect();
        let s = settings(0.1);
        let a = solve_fixed(&p, &k, &k, (-1.0, 1.0), (&lo1, &lo1), 3.0, &s).unwrap();
        let b = solve_fixed(&p, &k, &k, (-1.0, 1.0), (&hi1, &hi1), 3.0, &s).unwrap();
        for (va, vb) in a.final_u1().iter().zip(b.final_u1()) {
            assert!(va <= vb);
        }
        for (va, vb) in a.final_u2().iter().zip(b.final_u2()) {
            assert!(va <= vb);
        }
    }

    #[test]
    fn invariant_region_preserved() {
        let p = unit_params();
        let k = tent1();
        let (x, _) = grid_points((-1.0, 1.0), 0.1).unwrap();
        let e1 = vec![p.e1; x.len()];
        let e2 = vec![p.e2; x.len()];
        let s = SolverSettings {
            dx: 0.1,
            record_every: 1,
            ..SolverSettings::default()
        };
        let traj = solve_fixed(&p, &k, &k, (-1.0, 1.0), (&e1, &e2), 2.0, &s).unwrap();
        for snap in traj.snaps_u1.iter().chain(traj.snaps_u2.iter()) {
            assert!(snap.iter().all(|&v| (0.0..=1.0 + 1e-12).contains(&v)));
        }
    }

    fn spreading_params() -> ModelParams {
        let mut p = unit_params();
        p.delta = 0.0;
        p.b1 = 0.25;
        p.b2 = 0.25;
        p.d1 = 0.1;
        p.d2 = 0.1;
        p
    }

    #[test]
    fn ode_periodic_endemic_equilibrium() {
        let p = spreading_params();
        let sol = ode_periodic(&p, &SolverSettings::default()).unwrap();
        for v in sol.u1.iter().chain(sol.u2.iter()) {
            assert!((v - 0.75).abs() < 1e-6, "equilibrium off: {v}");
        }
        assert!(sol.residual <= 1e-6);
    }

    #[test]
    fn ode_periodic_trivial_when_eigenvalue_nonnegative() {
        let p = unit_params(); // lambda1_O = 0.5 > 0
        let sol = ode_periodic(&p, &SolverSettings::default()).unwrap();
        assert!(sol.u1.iter().chain(sol.u2.iter()).all(|&v| v < 1e-6));
    }

    #[test]
    fn ode_periodic_seasonal_positive_solution() {
        let mut p = spreading_params();
        p.delta = 0.2;
        p.k = 0.5;
        let sol = ode_periodic(&p, &SolverSettings::default()).unwrap();
        assert!(sol.u1.iter().all(|&v| v > 0.0 && v <= p.e1));
        assert!(sol.u2.iter().all(|&v| v > 0.0 && v <= p.e2));
        assert!((sol.u2[sol.u2.len() - 1] - sol.u2[0]).abs() <= 1e-7);
        let (a1, a2) = sol.at(0.0);
        assert!((a1 - sol.u1[0]).abs() < 1e-14 && (a2 - sol.u2[0]).abs() < 1e-14);
    }

    #[test]
    fn from_above_and_below_agree() {
        let p = spreading_params();
        let k = tent1();
        let s = settings(0.05);
        let above = periodic_from_above(&p, &k, (-2.0, 2.0), &s).unwrap();
        let below = periodic_from_below(&p, &k, (-2.0, 2.0), 0.05, &s).unwrap();
        let d = sup_diff(&above.u1, &below.u1).max(sup_diff(&above.u2, &below.u2));
        assert!(d <= 1e-6, "limits differ by {d}");
        assert!(above.u1.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn from_above_trivial_when_eigenvalue_nonnegative() {
        let p = unit_params();
        let k = tent1();
        let sol = periodic_from_above(&p, &k, (-1.0, 1.0), &settings(0.1)).unwrap();
        assert!(sol.u1.iter().chain(sol.u2.iter()).all(|&v| v < 1e-6));
    }

    #[test]
    fn nested_intervals_ordered() {
        let p = spreading_params();
        let k = tent1();
        let s = settings(0.1);
        let small = periodic_from_above(&p, &k, (-1.0, 1.0), &s).unwrap();
        let large = periodic_from_above(&p, &k, (-2.0, 2.0), &s).unwrap();
        // overlap [-1, 1] sits at offset 10 in the larger grid
        for (i, &v) in small.u1.iter().enumerate() {
            assert!(large.u1[i + 10] >= v - 1e-9);
        }
    }

    #[test]
    fn domain_limit_gap_decreasing() {
        let p = spreading_params();
        let k = tent1();
        let rows = domain_limit_check(&p, &k, &[2.0, 4.0, 8.0], &settings(0.1)).unwrap();
        assert!(rows[0].gap > rows[1].gap && rows[1].gap > rows[2].gap);
        assert!(rows[2].gap < 0.05);
    }
}
