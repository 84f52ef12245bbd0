//! Free-boundary simulator: moving-domain nonlocal dynamics in warm
//! seasons, frozen boundaries with decay in cold seasons, and flux-driven
//! boundary motion.
//!
//! Densities live on the fixed global lattice x_i = i * dx; a node is
//! active when strictly inside (g, h) and activates at value 0 when the
//! interval expands over it. Boundaries g, h are continuous real
//! positions, advanced by the outward kernel flux
//!
//!   h'(t) =  sum_i mu_i int_g^h u_i(x) tail_i(h - x) dx,
//!   g'(t) = -sum_i mu_i int_g^h u_i(x) tail_i(x - g) dx,
//!
//! where tail_i(z) = int_z^inf J_i. Time stepping is explicit first order
//! under a positivity bound that keeps the update a monotone map
//! preserving [0, e1] x [0, e2].

use crate::error::{Error, Result};
use crate::model::{Kernel, ModelParams};
use crate::nonlocal_eigen::lambda1_f;

/// Largest time step for which the explicit update preserves positivity
/// and the invariant region.
pub fn positivity_dt_bound(p: &ModelParams) -> f64 {
    let r1 = p.d1 + p.b1 + p.a1 * p.e2;
    let r2 = p.d2 + p.b2 + p.a2 * p.e1;
    0.9 / r1.max(r2).max(p.k)
}

#[derive(Debug, Clone)]
pub struct FieldState {
    pub t: f64,
    pub g: f64,
    pub h: f64,
    pub dx: f64,
    /// lattice index of the first active node; node j sits at
    /// (i_lo + j) * dx
    pub i_lo: i64,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub period_index: usize,
}

impl FieldState {
    pub fn x(&self, j: usize) -> f64 {
        (self.i_lo + j as i64) as f64 * self.dx
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.u1.len()).map(|j| self.x(j)).collect()
    }

    pub fn sup_norms(&self) -> (f64, f64) {
        (
            self.u1.iter().cloned().fold(0.0, f64::max),
            self.u2.iter().cloned().fold(0.0, f64::max),
        )
    }

    /// first lattice index strictly right of g
    fn lo_index(g: f64, dx: f64) -> i64 {
        let mut i = (g / dx).ceil() as i64;
        if i as f64 * dx <= g {
            i += 1;
        }
        i
    }

    /// last lattice index strictly left of h
    fn hi_index(h: f64, dx: f64) -> i64 {
        let mut i = (h / dx).floor() as i64;
        if i as f64 * dx >= h {
            i -= 1;
        }
        i
    }

    /// Extend the active set after boundary motion; new nodes start at 0.
    fn reactivate(&mut self) {
        let new_lo = Self::lo_index(self.g, self.dx);
        let new_hi = Self::hi_index(self.h, self.dx);
        let old_hi = self.i_lo + self.u1.len() as i64 - 1;
        for _ in old_hi..new_hi {
            self.u1.push(0.0);
            self.u2.push(0.0);
        }
        if new_lo < self.i_lo {
            let extra = (self.i_lo - new_lo) as usize;
            let mut u1 = vec![0.0; extra];
            u1.extend_from_slice(&self.u1);
            self.u1 = u1;
            let mut u2 = vec![0.0; extra];
            u2.extend_from_slice(&self.u2);
            self.u2 = u2;
            self.i_lo = new_lo;
        }
    }
}

/// Initial state with custom density profiles on (-h0, h0).
pub fn initial_state_from(
    p: &ModelParams,
    dx: f64,
    f1: impl Fn(f64) -> f64,
    f2: impl Fn(f64) -> f64,
) -> Result<FieldState> {
    if !(dx > 0.0) {
        return Err(Error::InvalidParams(vec![format!("dx {dx} nonpositive")]));
    }
    let p = (*p).validated()?;
    let i_lo = FieldState::lo_index(-p.h0, dx);
    let i_hi = FieldState::hi_index(p.h0, dx);
    if i_hi < i_lo + 3 {
        return Err(Error::InvalidParams(vec![format!(
            "dx {dx} too coarse for initial half-interval {}",
            p.h0
        )]));
    }
    let mut u1 = Vec::with_capacity((i_hi - i_lo + 1) as usize);
    let mut u2 = Vec::with_capacity(u1.capacity());
    for i in i_lo..=i_hi {
        let x = i as f64 * dx;
        u1.push(f1(x));
        u2.push(f2(x));
    }
    if u1.iter().any(|&v| !(0.0..=p.e1).contains(&v)) || u2.iter().any(|&v| !(0.0..=p.e2).contains(&v))
    {
        return Err(Error::InvalidParams(vec![
            "initial data outside [0, e_i]".to_string(),
        ]));
    }
    Ok(FieldState {
        t: 0.0,
        g: -p.h0,
        h: p.h0,
        dx,
        i_lo,
        u1,
        u2,
        period_index: 0,
    })
}

/// Default initial data u_{i,0}(x) = e_i cos(pi x / (2 h0)): continuous,
/// positive inside (-h0, h0), vanishing at the endpoints.
pub fn default_init(p: &ModelParams, dx: f64) -> Result<FieldState> {
    let (e1, e2, h0) = (p.e1, p.e2, p.h0);
    let half_pi = std::f64::consts::FRAC_PI_2;
    initial_state_from(
        p,
        dx,
        move |x| e1 * (half_pi * x / h0).cos().max(0.0),
        move |x| e2 * (half_pi * x / h0).cos().max(0.0),
    )
}

/// Outward flux rates (g_rate <= 0, h_rate >= 0) of the current state.
pub fn boundary_flux(
    state: &FieldState,
    p: &ModelParams,
    j1: &Kernel,
    j2: &Kernel,
) -> (f64, f64) {
    let n = state.u1.len();
    let mut h_rate = 0.0;
    let mut g_rate = 0.0;
    for (mu, kern, u) in [(p.mu1, j1, &state.u1), (p.mu2, j2, &state.u2)] {
        if mu == 0.0 {
            continue;
        }
        let mut sh = 0.0;
        let mut sg = 0.0;
        // mirrored summation order keeps symmetric states exactly
        // symmetric in floating point
        for j in 0..n {
            sh += u[j] * kern.tail(state.h - state.x(j));
            sg += u[n - 1 - j] * kern.tail(state.x(n - 1 - j) - state.g);
        }
        h_rate += mu * state.dx * sh;
        g_rate -= mu * state.dx * sg;
    }
    (g_rate, h_rate)
}

fn band(kernel: &Kernel, dx: f64, n: usize) -> Vec<f64> {
    let bw = ((kernel.support_radius / dx).ceil() as usize).min(n.saturating_sub(1));
    (0..=bw).map(|d| kernel.density(d as f64 * dx)).collect()
}

fn convolve_open(jvals: &[f64], dx: f64, u: &[f64], out: &mut Vec<f64>) {
    let n = u.len();
    let bw = jvals.len() - 1;
    out.clear();
    out.resize(n, 0.0);
    for i in 0..n {
        let lo = i.saturating_sub(bw);
        let hi = (i + bw).min(n - 1);
        let mut acc = 0.0;
        for j in lo..=hi {
            acc += jvals[i.abs_diff(j)] * u[j];
        }
        out[i] = acc * dx;
    }
}

fn check_dt(p: &ModelParams, dt: f64) -> Result<()> {
    let bound = positivity_dt_bound(p);
    if dt > bound * (1.0 + 1e-12) {
        return Err(Error::DtTooLarge { dt, bound });
    }
    Ok(())
}

/// One explicit warm-season step: coupled nonlocal reaction update on the
/// active nodes, then boundary motion and node activation.
pub fn step_warm(
    state: &mut FieldState,
    p: &ModelParams,
    j1: &Kernel,
    j2: &Kernel,
    dt: f64,
) -> Result<()> {
    check_dt(p, dt)?;
    let n = state.u1.len();
    let (g_rate, h_rate) = boundary_flux(state, p, j1, j2);
    let mut conv = Vec::with_capacity(n);
    convolve_open(&band(j1, state.dx, n), state.dx, &state.u1, &mut conv);
    let new1: Vec<f64> = (0..n)
        .map(|i| {
            let (v1, v2) = (state.u1[i], state.u2[i]);
            v1 + dt * (p.d1 * (conv[i] - v1) + p.a1 * (p.e1 - v1) * v2 - p.b1 * v1)
        })
        .collect();
    convolve_open(&band(j2, state.dx, n), state.dx, &state.u2, &mut conv);
    for i in 0..n {
        let (v1, v2) = (state.u1[i], state.u2[i]);
        state.u2[i] = v2 + dt * (p.d2 * (conv[i] - v2) + p.a2 * (p.e2 - v2) * v1 - p.b2 * v2);
    }
    state.u1 = new1;
    state.g += dt * g_rate;
    state.h += dt * h_rate;
    state.t += dt;
    state.reactivate();
    Ok(())
}

/// One cold-season step: u1 nonlocal decay; u2 is rescaled in closed form
/// by the caller (see `simulate`); boundaries frozen.
pub fn step_cold_u1(state: &mut FieldState, p: &ModelParams, j1: &Kernel, dt: f64) -> Result<()> {
    check_dt(p, dt)?;
    let n = state.u1.len();
    let mut conv = Vec::with_capacity(n);
    convolve_open(&band(j1, state.dx, n), state.dx, &state.u1, &mut conv);
    for i in 0..n {
        let v1 = state.u1[i];
        state.u1[i] = v1 + dt * (p.d1 * (conv[i] - v1) - p.b1 * v1);
    }
    state.t += dt;
    Ok(())
}

/// Boundary-growth energy bound, valid when a1 a2 e1 e2 <= b1 b2:
/// h(t) - g(t) <= 2 h0 + (1/D) int [u1(0) + (a1 e1 / b2) u2(0)] dx with
/// D = min{d1, a1 e1 d2 / b2} / max{mu1, mu2}.
#[derive(Debug, Clone, Copy)]
pub struct EnergyBound {
    pub d: f64,
    pub bound: f64,
}

pub fn energy_bound(p: &ModelParams, init: &FieldState) -> EnergyBound {
    let mu = p.mu1.max(p.mu2);
    if mu == 0.0 {
        return EnergyBound {
            d: f64::INFINITY,
            bound: 2.0 * p.h0,
        };
    }
    let d = p.d1.min(p.a1 * p.e1 * p.d2 / p.b2) / mu;
    if d == 0.0 {
        return EnergyBound {
            d,
            bound: f64::INFINITY,
        };
    }
    let mass: f64 = init
        .u1
        .iter()
        .zip(&init.u2)
        .map(|(&v1, &v2)| v1 + p.a1 * p.e1 / p.b2 * v2)
        .sum::<f64>()
        * init.dx;
    EnergyBound {
        d,
        bound: 2.0 * p.h0 + mass / d,
    }
}

#[derive(Debug, Clone)]
pub struct FieldSnapshot {
    pub t: f64,
    pub x: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// (t, g, h) at every step
    pub boundary: Vec<(f64, f64, f64)>,
    /// (t, sup u1, sup u2) at every step
    pub norms: Vec<(f64, f64, f64)>,
    /// (period index, lambda1_F at the period start); empty when the two
    /// kernels differ
    pub lambda_f: Vec<(usize, f64)>,
    pub snapshots: Vec<FieldSnapshot>,
    pub final_state: FieldState,
}

#[derive(Debug, Clone, Copy)]
pub struct SimSettings {
    pub dx: f64,
    pub dt_max: Option<f64>,
    /// emit a field snapshot every this many periods (0 = none)
    pub snapshot_every: usize,
    /// grid spacing for the per-period lambda1_F solve (defaults to dx)
    pub eigen_dx: Option<f64>,
    pub compute_lambda_f: bool,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings {
            dx: 0.02,
            dt_max: None,
            snapshot_every: 0,
            eigen_dx: None,
            compute_lambda_f: true,
        }
    }
}

fn record(traj: &mut Trajectory, state: &FieldState) {
    traj.boundary.push((state.t, state.g, state.h));
    let (n1, n2) = state.sup_norms();
    traj.norms.push((state.t, n1, n2));
}

/// Run the free-boundary simulation for `n_periods` whole periods.
pub fn simulate(
    p: &ModelParams,
    j1: &Kernel,
    j2: &Kernel,
    init: FieldState,
    n_periods: usize,
    settings: &SimSettings,
) -> Result<Trajectory> {
    let p = (*p).validated()?;
    let clock = p.clock();
    let dt_bound = positivity_dt_bound(&p).min(settings.dt_max.unwrap_or(f64::INFINITY));
    let kernels_equal = j1.kind == j2.kind;
    let mut state = init;
    let mut traj = Trajectory {
        boundary: Vec::new(),
        norms: Vec::new(),
        lambda_f: Vec::new(),
        snapshots: Vec::new(),
        final_state: state.clone(),
    };
    record(&mut traj, &state);
    for period in 0..n_periods {
        state.period_index = period;
        if settings.compute_lambda_f && kernels_equal {
            let eigen_dx = settings.eigen_dx.unwrap_or(settings.dx);
            let lam = lambda1_f(&p, j1, state.g, state.h, eigen_dx)?;
            traj.lambda_f.push((period, lam));
        }
        if p.delta < 1.0 {
            let len = clock.warm_len();
            let n_steps = (len / dt_bound).ceil().max(1.0) as usize;
            let dt = len / n_steps as f64;
            for _ in 0..n_steps {
                step_warm(&mut state, &p, j1, j2, dt)?;
                record(&mut traj, &state);
            }
        }
        if p.delta > 0.0 {
            let len = clock.cold_len();
            let n_steps = (len / dt_bound).ceil().max(1.0) as usize;
            let dt = len / n_steps as f64;
            let u2_start = state.u2.clone();
            for s in 1..=n_steps {
                step_cold_u1(&mut state, &p, j1, dt)?;
                let factor = (-p.k * dt * s as f64).exp();
                for (v, &v0) in state.u2.iter_mut().zip(&u2_start) {
                    *v = v0 * factor;
                }
                record(&mut traj, &state);
            }
        }
        if settings.snapshot_every > 0 && (period + 1) % settings.snapshot_every == 0 {
            traj.snapshots.push(FieldSnapshot {
                t: state.t,
                x: state.xs(),
                u1: state.u1.clone(),
                u2: state.u2.clone(),
            });
        }
    }
    state.period_index = n_periods;
    traj.final_state = state;
    Ok(traj)
}
