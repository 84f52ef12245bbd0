//! Numerical toolkit for a two-species epidemic model with nonlocal
//! dispersal, seasonal switching and free boundaries: a warm season with
//! fully coupled dynamics and flux-driven front motion alternates with a
//! cold season in which the fronts freeze and both populations decay.
//!
//! Modules:
//! - [`model`]: parameters, dispersal kernels, season clock.
//! - [`ode_eigen`]: principal eigenvalue of the spatial-independent
//!   switched periodic system (closed forms + monodromy oracle).
//! - [`nonlocal_eigen`]: nonlocal-operator eigenvalue on an interval and
//!   its composition into the full interval eigenvalue.
//! - [`periodic_solver`]: fixed-interval dynamics and periodic solutions
//!   by monotone iteration.
//! - [`fb_sim`]: the free-boundary simulator.
//! - [`classify`]: spreading/vanishing verdicts and threshold searches.
//! - [`cli_io`]: config parsing, command dispatch, CSV/JSON emission.

// validation uses `!(x > 0.0)` on purpose: unlike `x <= 0.0` it also
// rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// the numeric kernels index several slices with one loop variable; iterator
// zips would obscure the stencil structure
#![allow(clippy::needless_range_loop)]

pub mod classify;
pub mod cli_io;
pub mod error;
pub mod fb_sim;
mod linalg;
pub mod model;
pub mod nonlocal_eigen;
pub mod ode_eigen;
pub mod periodic_solver;
