//! Configuration parsing, command dispatch and deterministic CSV/JSON
//! emission.
//!
//! A run is described by one TOML file: a mandatory `[model]` section with
//! the parameter fields, an optional `[kernel]` (and `[kernel2]` for
//! simulations with distinct dispersal kernels), an optional `[numerics]`
//! section, and one optional section per command. Unknown keys are
//! rejected; every defaulted value is echoed into the `#`-prefixed header
//! of each output file, so outputs are self-describing and bitwise
//! reproducible.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classify::{classify_dynamic, classify_static, mu_threshold, Verdict};
use crate::error::{Error, Result};
use crate::fb_sim::{default_init, simulate, SimSettings};
use crate::model::{make_kernel, Kernel, KernelKind, ModelParams};
use crate::nonlocal_eigen::{lambda1_p, lambda1_star};
use crate::ode_eigen::{contour_zero, lambda1_o, EigenKind};
use crate::periodic_solver::{ode_periodic, periodic_from_above, periodic_from_below, SolverSettings};

fn default_kernel() -> KernelKind {
    KernelKind::Tent { radius: 1.0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    /// grid spacing (default: kernel support radius / 100)
    pub dx: f64,
    /// optional cap on the time step (the positivity bound always applies)
    pub dt: Option<f64>,
    /// simulated periods for `simulate`
    pub periods: usize,
    /// period-map convergence tolerance for the periodic solvers
    pub period_tol: f64,
    /// iteration cap for periodic solvers and dynamic classification
    pub max_periods: usize,
    /// field snapshot cadence in periods (0 = no field snapshots)
    pub snapshot_every: usize,
    /// lower-solution scale for `periodic_from_below`
    pub eps: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NumericsRaw {
    dx: Option<f64>,
    dt: Option<f64>,
    periods: Option<usize>,
    period_tol: Option<f64>,
    max_periods: Option<usize>,
    snapshot_every: Option<usize>,
    eps: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenSection {
    /// also emit eigenfunction samples (t, phi, psi)
    pub samples: bool,
}

fn default_ls() -> Vec<f64> {
    vec![1.0, 2.0, 4.0, 8.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LamPSection {
    /// half-lengths L; each row evaluates the interval [-L, L]
    pub ls: Vec<f64>,
}

impl Default for LamPSection {
    fn default() -> Self {
        LamPSection { ls: default_ls() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PeriodicSection {
    pub l1: f64,
    pub l2: f64,
    /// cross-check the limit from a small lower solution
    pub from_below: bool,
}

impl Default for PeriodicSection {
    fn default() -> Self {
        PeriodicSection {
            l1: -2.0,
            l2: 2.0,
            from_below: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifySection {
    /// optional mu bisection range; when set, a threshold search runs
    /// after classification
    pub mu_range: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub delta: Option<Vec<f64>>,
    pub b1: Option<Vec<f64>>,
    pub mu: Option<Vec<f64>>,
    pub h0: Option<Vec<f64>>,
}

fn default_delta_grid() -> Vec<f64> {
    (0..10).map(|i| i as f64 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContourSection {
    pub delta_grid: Vec<f64>,
    pub b1_min: f64,
    pub b1_max: f64,
}

impl Default for ContourSection {
    fn default() -> Self {
        ContourSection {
            delta_grid: default_delta_grid(),
            b1_min: 0.05,
            b1_max: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: ModelParams,
    kernel: Option<KernelKind>,
    kernel2: Option<KernelKind>,
    numerics: Option<NumericsRaw>,
    eigen: Option<EigenSection>,
    lamp: Option<LamPSection>,
    periodic: Option<PeriodicSection>,
    classify: Option<ClassifySection>,
    sweep: Option<SweepSection>,
    contour: Option<ContourSection>,
}

/// A fully resolved run description: every default filled in and echoed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelParams,
    pub kernel: KernelKind,
    pub kernel2: Option<KernelKind>,
    pub numerics: Numerics,
    pub eigen: Option<EigenSection>,
    pub lamp: Option<LamPSection>,
    pub periodic: Option<PeriodicSection>,
    pub classify: Option<ClassifySection>,
    pub sweep: Option<SweepSection>,
    pub contour: Option<ContourSection>,
}

impl RunConfig {
    pub fn kernels(&self) -> Result<(Kernel, Kernel)> {
        let j1 = make_kernel(self.kernel)?;
        let j2 = make_kernel(self.kernel2.unwrap_or(self.kernel))?;
        Ok((j1, j2))
    }

    pub fn require_single_kernel(&self) -> Result<Kernel> {
        if let Some(k2) = self.kernel2 {
            if k2 != self.kernel {
                return Err(Error::KernelMismatch(
                    "this command requires J1 = J2 (drop [kernel2] or make it equal)".to_string(),
                ));
            }
        }
        make_kernel(self.kernel)
    }

    pub fn solver_settings(&self) -> SolverSettings {
        SolverSettings {
            dx: self.numerics.dx,
            dt_max: self.numerics.dt,
            period_tol: self.numerics.period_tol,
            max_periods: self.numerics.max_periods,
            record_every: 0,
        }
    }

    pub fn sim_settings(&self) -> SimSettings {
        SimSettings {
            dx: self.numerics.dx,
            dt_max: self.numerics.dt,
            snapshot_every: self.numerics.snapshot_every,
            eigen_dx: None,
            compute_lambda_f: true,
        }
    }
}

/// Parse and resolve a TOML run description.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let model = raw.model.validated()?;
    let kernel = raw.kernel.unwrap_or_else(default_kernel);
    let j1 = make_kernel(kernel)?;
    if let Some(k2) = raw.kernel2 {
        make_kernel(k2)?;
    }
    let n = raw.numerics.unwrap_or_default();
    let numerics = Numerics {
        dx: n.dx.unwrap_or(j1.support_radius / 100.0),
        dt: n.dt,
        periods: n.periods.unwrap_or(10),
        period_tol: n.period_tol.unwrap_or(1e-8),
        max_periods: n.max_periods.unwrap_or(5000),
        snapshot_every: n.snapshot_every.unwrap_or(0),
        eps: n.eps.unwrap_or(0.01),
    };
    if !(numerics.dx > 0.0) {
        return Err(Error::Config("numerics.dx must be positive".to_string()));
    }
    Ok(RunConfig {
        model,
        kernel,
        kernel2: raw.kernel2,
        numerics,
        eigen: raw.eigen,
        lamp: raw.lamp,
        periodic: raw.periodic,
        classify: raw.classify,
        sweep: raw.sweep,
        contour: raw.contour,
    })
}

/// Serialize a resolved config back to TOML; `parse_config(emit(c)) == c`.
pub fn emit_config(cfg: &RunConfig) -> String {
    toml::to_string_pretty(cfg).expect("config serializes")
}

/// 17 significant digits: round-trips every f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn header(cfg: &RunConfig) -> String {
    let mut s = String::new();
    for line in emit_config(cfg).lines() {
        let _ = writeln!(s, "# {line}");
    }
    s
}

fn verdict_str(v: &Verdict) -> &'static str {
    match v {
        Verdict::Spreading => "spreading",
        Verdict::Vanishing => "vanishing",
        Verdict::Undetermined { .. } => "undetermined",
    }
}

fn write_file(dir: &Path, name: &str, contents: &str, out: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    out.push(path);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Eigen,
    LamP,
    Periodic,
    Simulate,
    Classify,
    Sweep,
    Contour,
}

/// Execute a command; returns the paths of the files written.
pub fn run(cmd: Command, cfg: &RunConfig, outdir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(outdir)?;
    let mut written = Vec::new();
    match cmd {
        Command::Eigen => run_eigen(cfg, outdir, &mut written)?,
        Command::LamP => run_lamp(cfg, outdir, &mut written)?,
        Command::Periodic => run_periodic(cfg, outdir, &mut written)?,
        Command::Simulate => run_simulate(cfg, outdir, &mut written)?,
        Command::Classify => run_classify(cfg, outdir, &mut written)?,
        Command::Sweep => run_sweep(cfg, outdir, &mut written)?,
        Command::Contour => run_contour(cfg, outdir, &mut written)?,
    }
    Ok(written)
}

fn run_eigen(cfg: &RunConfig, outdir: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    let r = lambda1_o(&cfg.model)?;
    let mut s = header(cfg);
    s.push_str("case,lambda_upper,lambda_lower,m\n");
    let (up, lo) = match r.kind {
        EigenKind::Principal(v) => (v, v),
        EigenKind::GeneralizedPair { upper, lower } => (upper, lower),
    };
    let _ = writeln!(
        s,
        "{:?},{},{},{}",
        r.case_tag,
        fmt_f64(up),
        fmt_f64(lo),
        fmt_f64(r.m)
    );
    write_file(outdir, "eigen.csv", &s, written)?;
    let section = cfg.eigen.clone().unwrap_or_default();
    if section.samples && !r.times.is_empty() {
        let mut s = header(cfg);
        s.push_str("t,phi,psi\n");
        for i in 0..r.times.len() {
            let _ = writeln!(
                s,
                "{},{},{}",
                fmt_f64(r.times[i]),
                fmt_f64(r.phi[i]),
                fmt_f64(r.psi[i])
            );
        }
        write_file(outdir, "eigenfunction.csv", &s, written)?;
    }
    Ok(())
}

fn run_lamp(cfg: &RunConfig, outdir: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    let kernel = cfg.require_single_kernel()?;
    let section = cfg.lamp.clone().unwrap_or_default();
    let mut s = header(cfg);
    s.push_str("L,lambda_star,lambda_P_upper,lambda_P_lower\n");
    for &l in &section.ls {
        let star = lambda1_star(&kernel, (-l, l), cfg.numerics.dx)?;
        let r = lambda1_p(&cfg.model, &kernel, (-l, l), cfg.numerics.dx)?;
        let _ = writeln!(
            s,
            "{},{},{},{}",
            fmt_f64(l),
            fmt_f64(star.lambda_star),
            fmt_f64(r.kind.upper()),
            fmt_f64(r.kind.lower())
        );
    }
    write_file(outdir, "lamP.csv", &s, written)
}

fn run_periodic(cfg: &RunConfig, outdir: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    let kernel = cfg.require_single_kernel()?;
    let section = cfg.periodic.clone().unwrap_or_default();
    let settings = cfg.solver_settings();
    let above = periodic_from_above(&cfg.model, &kernel, (section.l1, section.l2), &settings)?;
    let ode = ode_periodic(&cfg.model, &settings)?;
    let mut s = header(cfg);
    s.push_str("t,x,U1,U2\n");
    for i in 0..above.x.len() {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            fmt_f64(0.0),
            fmt_f64(above.x[i]),
            fmt_f64(above.u1[i]),
            fmt_f64(above.u2[i])
        );
    }
    write_file(outdir, "periodic.csv", &s, written)?;

    let mut below_gap = None;
    if section.from_below {
        let lam = lambda1_p(&cfg.model, &kernel, (section.l1, section.l2), settings.dx)?
            .kind
            .upper();
        if lam < 0.0 {
            let below = periodic_from_below(
                &cfg.model,
                &kernel,
                (section.l1, section.l2),
                cfg.numerics.eps,
                &settings,
            )?;
            let gap = above
                .u1
                .iter()
                .zip(&below.u1)
                .chain(above.u2.iter().zip(&below.u2))
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            below_gap = Some(gap);
        }
    }
    let summary = serde_json::json!({
        "origin": above.origin,
        "periods": above.periods,
        "residual": above.residual,
        "from_below_gap": below_gap,
        "ode_iterations": ode.iterations,
        "ode_residual": ode.residual,
        "ode_u1_start": ode.u1[0],
        "ode_u2_start": ode.u2[0],
    });
    let body = format!("{}\n", serde_json::to_string_pretty(&summary).expect("json"));
    write_file(outdir, "periodic_summary.json", &body, written)
}

fn run_simulate(cfg: &RunConfig, outdir: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    let (j1, j2) = cfg.kernels()?;
    let settings = cfg.sim_settings();
    let init = default_init(&cfg.model, settings.dx)?;
    let traj = simulate(&cfg.model, &j1, &j2, init, cfg.numerics.periods, &settings)?;

    let mut s = header(cfg);
    s.push_str("t,g,h\n");
    for &(t, g, h) in &traj.boundary {
        let _ = writeln!(s, "{},{},{}", fmt_f64(t), fmt_f64(g), fmt_f64(h));
    }
    write_file(outdir, "boundaries.csv", &s, written)?;

    let mut s = header(cfg);
    s.push_str("t,sup_u1,sup_u2\n");
    for &(t, n1, n2) in &traj.norms {
        let _ = writeln!(s, "{},{},{}", fmt_f64(t), fmt_f64(n1), fmt_f64(n2));
    }
    write_file(outdir, "norms.csv", &s, written)?;

    let mut s = header(cfg);
    s.push_str("period,lambda_F\n");
    for &(period, lam) in &traj.lambda_f {
        let _ = writeln!(s, "{period},{}", fmt_f64(lam));
    }
    write_file(outdir, "lambdaF.csv", &s, written)?;

    for snap in &traj.snapshots {
        let mut s = header(cfg);
        s.push_str("x,u1,u2\n");
        for i in 0..snap.x.len() {
            let _ = writeln!(
                s,
                "{},{},{}",
                fmt_f64(snap.x[i]),
                fmt_f64(snap.u1[i]),
                fmt_f64(snap.u2[i])
            );
        }
        write_file(outdir, &format!("field_{:.6}.csv", snap.t), &s, written)?;
    }
    Ok(())
}

fn run_classify(cfg: &RunConfig, outdir: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    let (j1, j2) = cfg.kernels()?;
    let settings = cfg.sim_settings();
    let section = cfg.classify.clone().unwrap_or_default();
    let static_outcome = classify_static(&cfg.model, &j1, &j2, cfg.numerics.dx)?;
    let dynamic_outcome = if matches!(static_outcome.verdict, Verdict::Undetermined { .. }) {
        let init = default_init(&cfg.model, settings.dx)?;
        Some(classify_dynamic(
            &cfg.model,
            &j1,
            &j2,
            init,
            cfg.numerics.max_periods.min(200),
            &settings,
        )?)
    } else {
        None
    };
    let threshold = match section.mu_range {
        Some((lo, hi)) => Some(mu_threshold(
            &cfg.model,
            &j1,
            &j2,
            (lo, hi),
            cfg.numerics.max_periods.min(200),
            &settings,
        )?),
        None => None,
    };
    let final_verdict = dynamic_outcome
        .as_ref()
        .map(|o| o.verdict)
        .unwrap_or(static_outcome.verdict);
    let summary = serde_json::json!({
        "verdict": verdict_str(&final_verdict),
        "static": static_outcome,
        "dynamic": dynamic_outcome,
        "mu_threshold": threshold,
    });
    let body = format!("{}\n", serde_json::to_string_pretty(&summary).expect("json"));
    write_file(outdir, "classify.json", &body, written)
}

fn run_sweep(cfg: &RunConfig, outdir: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    let (j1, j2) = cfg.kernels()?;
    let settings = cfg.sim_settings();
    let section = cfg.sweep.clone().unwrap_or_default();
    let deltas = section.delta.unwrap_or_else(|| vec![cfg.model.delta]);
    let b1s = section.b1.unwrap_or_else(|| vec![cfg.model.b1]);
    let mus = section.mu.unwrap_or_else(|| vec![cfg.model.mu1]);
    let h0s = section.h0.unwrap_or_else(|| vec![cfg.model.h0]);
    let mut s = header(cfg);
    s.push_str("delta,b1,mu,h0,verdict,rule\n");
    for &delta in &deltas {
        for &b1 in &b1s {
            for &mu in &mus {
                for &h0 in &h0s {
                    let mut p = cfg.model;
                    p.delta = delta;
                    p.b1 = b1;
                    p.mu1 = mu;
                    p.mu2 = mu;
                    p.h0 = h0;
                    let mut out = classify_static(&p, &j1, &j2, cfg.numerics.dx)?;
                    if matches!(out.verdict, Verdict::Undetermined { .. }) {
                        let init = default_init(&p, settings.dx)?;
                        out = classify_dynamic(
                            &p,
                            &j1,
                            &j2,
                            init,
                            cfg.numerics.max_periods.min(60),
                            &settings,
                        )?;
                    }
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{}",
                        fmt_f64(delta),
                        fmt_f64(b1),
                        fmt_f64(mu),
                        fmt_f64(h0),
                        verdict_str(&out.verdict),
                        out.evidence.rule
                    );
                }
            }
        }
    }
    write_file(outdir, "sweep.csv", &s, written)
}

fn run_contour(cfg: &RunConfig, outdir: &Path, written: &mut Vec<PathBuf>) -> Result<()> {
    let section = cfg.contour.clone().unwrap_or_default();
    let r = contour_zero(
        &cfg.model,
        &section.delta_grid,
        (section.b1_min, section.b1_max),
    )?;
    let mut s = header(cfg);
    for &d in &r.skipped {
        let _ = writeln!(s, "# skipped delta={} (no sign change in range)", fmt_f64(d));
    }
    s.push_str("delta,b1\n");
    for &(delta, b1) in &r.points {
        let _ = writeln!(s, "{},{}", fmt_f64(delta), fmt_f64(b1));
    }
    write_file(outdir, "contour.csv", &s, written)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
[model]
a1 = 1.0
a2 = 1.0
e1 = 1.0
e2 = 1.0
b1 = 1.0
b2 = 1.0
k = 1.0
d1 = 1.0
d2 = 1.0
omega = 1.0
delta = 0.5
mu1 = 1.0
mu2 = 1.0
h0 = 1.0
";

    #[test]
    fn minimal_config_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.kernel, KernelKind::Tent { radius: 1.0 });
        assert_eq!(cfg.numerics.dx, 0.01);
        assert_eq!(cfg.numerics.periods, 10);
        assert!(cfg.kernel2.is_none());
    }

    #[test]
    fn round_trip_identity() {
        let mut cfg = parse_config(MINIMAL).unwrap();
        cfg.lamp = Some(LamPSection { ls: vec![1.0, 3.0] });
        cfg.eigen = Some(EigenSection { samples: true });
        cfg.kernel2 = Some(KernelKind::TruncatedGaussian { sigma: 0.7 });
        let text = emit_config(&cfg);
        let back = parse_config(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_key_rejected() {
        let text = format!("{MINIMAL}\n[numerics]\nbogus = 1\n");
        match parse_config(&text) {
            Err(Error::Config(msg)) => assert!(msg.contains("bogus")),
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_delta_names_the_key() {
        let text = MINIMAL.replace("delta = 0.5", "delta = 1.5");
        match parse_config(&text) {
            Err(Error::InvalidParams(report)) => {
                assert!(report.iter().any(|m| m.contains("delta")));
            }
            other => panic!("expected invalid params, got {other:?}"),
        }
    }

    #[test]
    fn mismatched_kernels_rejected_for_eigen_commands() {
        let text = format!(
            "{MINIMAL}\n[kernel]\nkind = \"tent\"\nradius = 1.0\n\n\
             [kernel2]\nkind = \"truncated_gaussian\"\nsigma = 1.0\n"
        );
        let cfg = parse_config(&text).unwrap();
        match cfg.require_single_kernel() {
            Err(Error::KernelMismatch(_)) => {}
            other => panic!("expected kernel mismatch, got {other:?}"),
        }
        assert!(cfg.kernels().is_ok());
    }

    #[test]
    fn formatted_floats_have_17_digits() {
        let s = fmt_f64(0.5);
        assert_eq!(s, "5.0000000000000000e-1");
        let x = 0.123_456_789_012_345_68_f64;
        assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }
}
