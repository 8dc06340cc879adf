//! Time integration of `g_t = A g + f(g)` on a [`Domain`].
//!
//! Two schemes are provided: IMEX Euler (explicit reaction, backward-Euler
//! diffusion solved by preconditioned conjugate gradients) and classical RK4 on
//! the full semi-discrete right-hand side. [`run`] marches a state to `t_end`
//! and records [`MonitorSample`]s, probe values and snapshots.

use std::io::Write;

use log::warn;

use crate::analysis::{compute_constants, ConstantsReport, LyapunovTracker, MonitorSample};
use crate::error::{HrError, Result};
use crate::grid::{apply_helmholtz_dot, apply_laplacian, dot, laplacian_diagonal, Domain, Field};
use crate::model::{Component, HrParameters, State};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    ImexEuler,
    Rk4,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::ImexEuler => "imex_euler",
            Scheme::Rk4 => "rk4",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "imex_euler" | "imex" => Some(Scheme::ImexEuler),
            "rk4" => Some(Scheme::Rk4),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    /// Relative residual target of the implicit diffusion solve.
    pub linear_tol: f64,
    pub monitor_every: usize,
    pub snapshot_every: Option<usize>,
    /// Flat cell index recorded at every `probe_every`-th step.
    pub probe: Option<usize>,
    pub probe_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            dt: 1e-3,
            t_end: 0.0,
            scheme: Scheme::ImexEuler,
            linear_tol: 1e-10,
            monitor_every: 100,
            snapshot_every: None,
            probe: None,
            probe_every: 1,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(HrError::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(HrError::InvalidParameter(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if !(self.linear_tol.is_finite() && self.linear_tol > 0.0) {
            return Err(HrError::InvalidParameter(format!(
                "linear_tol must be positive, got {}",
                self.linear_tol
            )));
        }
        if self.monitor_every == 0 || self.probe_every == 0 || self.snapshot_every == Some(0) {
            return Err(HrError::InvalidParameter("sampling strides must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of fixed steps; `t_end` is rounded to a whole number of `dt`.
    pub fn num_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

/// `10 * max N_i * ceil(h_max / h_min)`: equals `10 * (prod N_i)^(1/dim)` on
/// cubic grids with cubic cells and grows with the longest axis otherwise.
fn iteration_cap(dom: &Domain) -> usize {
    let longest = dom.counts().iter().copied().max().unwrap_or(1);
    let h = dom.spacing();
    let h_max = h.iter().copied().fold(0.0, f64::max);
    let aspect = (h_max / dom.min_spacing()).ceil() as usize;
    10 * longest * aspect.max(1)
}

/// Matrix-free preconditioned CG for `(I - kappa Lap) x = b` with a Jacobi
/// preconditioner. Scratch vectors are reused between solves.
pub struct HelmholtzSolver {
    dom: Domain,
    lap_diag: Vec<f64>,
    inv_diag: Vec<f64>,
    kappa: f64,
    r: Vec<f64>,
    z: Vec<f64>,
    p: Vec<f64>,
    ap: Vec<f64>,
    max_iter: usize,
    /// Iterations used by the most recent solve.
    pub last_iterations: usize,
}

impl HelmholtzSolver {
    pub fn new(dom: &Domain) -> Self {
        let n = dom.num_cells();
        let max_iter = iteration_cap(dom);
        HelmholtzSolver {
            dom: *dom,
            lap_diag: laplacian_diagonal(dom),
            inv_diag: vec![1.0; n],
            kappa: 0.0,
            r: vec![0.0; n],
            z: vec![0.0; n],
            p: vec![0.0; n],
            ap: vec![0.0; n],
            max_iter,
            last_iterations: 0,
        }
    }

    /// Solves in place; `x` holds the initial guess on entry.
    pub fn solve_into(&mut self, kappa: f64, b: &[f64], x: &mut [f64], tol: f64) -> Result<()> {
        self.last_iterations = 0;
        if kappa == 0.0 {
            x.copy_from_slice(b);
            return Ok(());
        }
        if kappa != self.kappa {
            for (inv, d) in self.inv_diag.iter_mut().zip(&self.lap_diag) {
                *inv = 1.0 / (1.0 + kappa * d);
            }
            self.kappa = kappa;
        }
        let b_norm = dot(b, b).sqrt();
        if b_norm == 0.0 {
            x.fill(0.0);
            return Ok(());
        }
        let target_sq = (tol * b_norm).powi(2);
        let dom = self.dom;
        let (r, z, p, ap) = (&mut self.r, &mut self.z, &mut self.p, &mut self.ap);

        apply_helmholtz_dot(&dom, kappa, x, ap);
        for ((((ri, zi), bi), ai), di) in r.iter_mut().zip(z.iter_mut()).zip(b).zip(ap.iter()).zip(&self.inv_diag) {
            *ri = bi - ai;
            *zi = *ri * di;
        }
        let (mut rr, mut rz) = (dot(r, r), dot(r, z));
        if rr <= target_sq {
            return Ok(());
        }
        p.copy_from_slice(z);
        let mut it = 0;
        loop {
            if it == self.max_iter {
                self.last_iterations = it;
                return Err(HrError::NoConvergence {
                    iterations: it,
                    residual: rr.sqrt() / b_norm,
                });
            }
            it += 1;
            let pap = apply_helmholtz_dot(&dom, kappa, p, ap);
            let alpha = rz / pap;
            {
                let n = x.len();
                let (rs, zs, ps, aps, inv) = (&mut r[..n], &mut z[..n], &p[..n], &ap[..n], &self.inv_diag[..n]);
                for i in 0..n {
                    x[i] += alpha * ps[i];
                    rs[i] -= alpha * aps[i];
                    zs[i] = rs[i] * inv[i];
                }
            }
            rr = dot(r, r);
            let rz_new = dot(r, z);
            if !rr.is_finite() {
                self.last_iterations = it;
                return Err(HrError::NoConvergence {
                    iterations: it,
                    residual: rr,
                });
            }
            if rr <= target_sq {
                break;
            }
            let beta = rz_new / rz;
            rz = rz_new;
            for (pi, zi) in p.iter_mut().zip(z.iter()) {
                *pi = zi + beta * *pi;
            }
        }
        self.last_iterations = it;
        Ok(())
    }
}

/// Solves `(I - kappa Lap) x = b` to relative residual `tol`, starting from `b`.
pub fn solve_helmholtz_neumann(dom: &Domain, kappa: f64, b: &Field, tol: f64) -> Result<Field> {
    b.check_domain(dom)?;
    if !(kappa.is_finite() && kappa >= 0.0) {
        return Err(HrError::InvalidParameter(format!("kappa must be >= 0, got {kappa}")));
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(HrError::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let mut x = b.values().to_vec();
    HelmholtzSolver::new(dom).solve_into(kappa, b.values(), &mut x, tol)?;
    Ok(Field::from_values_unchecked(dom, x))
}

/// Reusable workspace for stepping one run.
pub struct Stepper {
    dom: Domain,
    params: HrParameters,
    tol: f64,
    solver: HelmholtzSolver,
    rhs: State,
    /// `x - b` from the last two implicit solves of each component; the next
    /// solve starts from `b` plus their linear extrapolation.
    correction: [Vec<f64>; 3],
    previous_correction: [Vec<f64>; 3],
    stages: Option<Box<[State; 4]>>,
    /// Total CG iterations since construction.
    pub cg_iterations: usize,
}

impl Stepper {
    pub fn new(dom: &Domain, params: &HrParameters, linear_tol: f64) -> Result<Self> {
        params.validate_structure(Some(dom))?;
        Ok(Stepper {
            dom: *dom,
            params: params.clone(),
            tol: linear_tol,
            solver: HelmholtzSolver::new(dom),
            rhs: State::constant(dom, [0.0; 3]),
            correction: std::array::from_fn(|_| vec![0.0; dom.num_cells()]),
            previous_correction: std::array::from_fn(|_| vec![0.0; dom.num_cells()]),
            stages: None,
            cg_iterations: 0,
        })
    }

    pub fn params(&self) -> &HrParameters {
        &self.params
    }

    /// One IMEX Euler step: `g* = g + dt f(g)`, then `(I - dt d_i Lap) g_i = g*_i`
    /// for each diffusing component. `t_new` only labels blow-up errors.
    pub fn step_imex(&mut self, g: &mut State, dt: f64, t_new: f64) -> Result<()> {
        self.params.reaction_slices(g.slices(), self.rhs.slices_mut());
        for c in Component::ALL {
            let k = c.index();
            let d = self.params.diffusion[k];
            let f = self.rhs.component_mut(c).values_mut();
            let x = g.component_mut(c).values_mut();
            if d > 0.0 {
                let (corr, prev) = (&mut self.correction[k], &mut self.previous_correction[k]);
                for (((fi, xi), ci), pi) in f.iter_mut().zip(x.iter_mut()).zip(corr.iter()).zip(prev.iter()) {
                    *fi = *xi + dt * *fi;
                    *xi = *fi + 2.0 * ci - pi;
                }
                self.solver.solve_into(dt * d, f, x, self.tol)?;
                self.cg_iterations += self.solver.last_iterations;
                std::mem::swap(corr, prev);
                for ((ci, xi), fi) in corr.iter_mut().zip(x.iter()).zip(f.iter()) {
                    *ci = xi - fi;
                }
            } else {
                for (xi, fi) in x.iter_mut().zip(f.iter()) {
                    *xi += dt * fi;
                }
            }
        }
        check_finite(g, t_new)
    }

    fn full_rhs(params: &HrParameters, dom: &Domain, g: &State, out: &mut State) {
        params.reaction_slices(g.slices(), out.slices_mut());
        let mut lap = Vec::new();
        for c in Component::ALL {
            let d = params.diffusion[c.index()];
            if d > 0.0 {
                lap.resize(dom.num_cells(), 0.0);
                apply_laplacian(dom, g.component(c).values(), &mut lap);
                for (o, l) in out.component_mut(c).values_mut().iter_mut().zip(&lap) {
                    *o += d * l;
                }
            }
        }
    }

    /// One classical RK4 step of `g_t = D Lap g + f(g)`.
    pub fn step_rk4(&mut self, g: &mut State, dt: f64, t_new: f64) -> Result<()> {
        let dom = self.dom;
        let stages = self.stages.get_or_insert_with(|| {
            let z = State::constant(&dom, [0.0; 3]);
            Box::new([z.clone(), z.clone(), z.clone(), z])
        });
        let [k1, k2, k3, k4] = &mut **stages;
        let tmp = &mut self.rhs;

        Self::full_rhs(&self.params, &dom, g, k1);
        axpy_state(tmp, g, 0.5 * dt, k1);
        Self::full_rhs(&self.params, &dom, tmp, k2);
        axpy_state(tmp, g, 0.5 * dt, k2);
        Self::full_rhs(&self.params, &dom, tmp, k3);
        axpy_state(tmp, g, dt, k3);
        Self::full_rhs(&self.params, &dom, tmp, k4);

        let h6 = dt / 6.0;
        for c in Component::ALL {
            let x = g.component_mut(c).values_mut();
            let (a, b, cc, d) = (
                k1.component(c).values(),
                k2.component(c).values(),
                k3.component(c).values(),
                k4.component(c).values(),
            );
            for i in 0..x.len() {
                x[i] += h6 * (a[i] + 2.0 * b[i] + 2.0 * cc[i] + d[i]);
            }
        }
        check_finite(g, t_new)
    }

    pub fn step(&mut self, scheme: Scheme, g: &mut State, dt: f64, t_new: f64) -> Result<()> {
        match scheme {
            Scheme::ImexEuler => self.step_imex(g, dt, t_new),
            Scheme::Rk4 => self.step_rk4(g, dt, t_new),
        }
    }
}

/// `out = base + s * k`
fn axpy_state(out: &mut State, base: &State, s: f64, k: &State) {
    for c in Component::ALL {
        let o = out.component_mut(c).values_mut();
        let (b, kk) = (base.component(c).values(), k.component(c).values());
        for i in 0..o.len() {
            o[i] = b[i] + s * kk[i];
        }
    }
}

fn check_finite(g: &State, t: f64) -> Result<()> {
    match g.first_non_finite() {
        Some(component) => Err(HrError::BlowUp { component, t }),
        None => Ok(()),
    }
}

fn prepare(dom: &Domain, p: &HrParameters, g: &State, dt: f64) -> Result<()> {
    g.u.check_domain(dom)?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(HrError::InvalidParameter(format!("dt must be positive, got {dt}")));
    }
    p.validate_structure(Some(dom))
}

/// One IMEX Euler step from `g`. Blow-up times are measured from the start of
/// the step.
pub fn step_imex(dom: &Domain, p: &HrParameters, g: &State, dt: f64, tol: f64) -> Result<State> {
    prepare(dom, p, g, dt)?;
    let mut next = g.clone();
    Stepper::new(dom, p, tol)?.step_imex(&mut next, dt, dt)?;
    Ok(next)
}

/// One classical RK4 step from `g`.
pub fn step_rk4(dom: &Domain, p: &HrParameters, g: &State, dt: f64) -> Result<State> {
    prepare(dom, p, g, dt)?;
    warn_explicit_limit(dom, p, dt);
    let mut next = g.clone();
    Stepper::new(dom, p, 1e-10)?.step_rk4(&mut next, dt, dt)?;
    Ok(next)
}

/// Largest stable explicit step for the diffusion part, `h_min^2 / (2 dim d_max)`.
pub fn explicit_diffusion_limit(dom: &Domain, p: &HrParameters) -> f64 {
    let dmax = p.diffusion.iter().copied().fold(0.0, f64::max);
    if dmax == 0.0 {
        return f64::INFINITY;
    }
    let h = dom.min_spacing();
    h * h / (2.0 * dom.dim() as f64 * dmax)
}

fn warn_explicit_limit(dom: &Domain, p: &HrParameters, dt: f64) {
    let limit = explicit_diffusion_limit(dom, p);
    if dt > limit {
        warn!("rk4: dt = {dt} exceeds the explicit diffusion limit {limit:.3e}");
    }
}

/// Where a run stopped early.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlowUp {
    pub component: Component,
    pub t: f64,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub samples: Vec<MonitorSample>,
    pub snapshots: Vec<(f64, State)>,
    /// `(t, [u, v, w])` at the probe cell.
    pub probe: Vec<(f64, [f64; 3])>,
    pub constants: Option<ConstantsReport>,
    pub final_state: State,
    pub final_time: f64,
    pub blow_up: Option<BlowUp>,
    pub cg_iterations: usize,
}

impl Trajectory {
    pub fn is_complete(&self) -> bool {
        self.blow_up.is_none()
    }

    pub fn write_monitor_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", MonitorSample::CSV_HEADER)?;
        for s in &self.samples {
            writeln!(out, "{}", s.csv_row())?;
        }
        out.flush()
    }

    pub fn write_probe_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,u,v,w")?;
        for (t, [u, v, w]) in &self.probe {
            writeln!(out, "{t},{u},{v},{w}")?;
        }
        out.flush()
    }
}

/// Marches `g0` to `cfg.t_end` with fixed steps.
///
/// A non-finite value stops the run; the partial trajectory comes back with
/// `blow_up` set. Solver failures are returned as errors.
pub fn run(dom: &Domain, p: &HrParameters, cfg: &SolverConfig, g0: &State) -> Result<Trajectory> {
    cfg.validate()?;
    g0.u.check_domain(dom)?;
    p.validate_structure(Some(dom))?;
    if let Some(cell) = cfg.probe {
        if cell >= dom.num_cells() {
            return Err(HrError::InvalidParameter(format!(
                "probe cell {cell} outside domain of {} cells",
                dom.num_cells()
            )));
        }
    }
    if cfg.scheme == Scheme::Rk4 {
        warn_explicit_limit(dom, p, cfg.dt);
    }
    let constants = compute_constants(p, dom.volume()).ok();
    let mut stepper = Stepper::new(dom, p, cfg.linear_tol)?;
    let mut g = g0.clone();
    let mut prev = g0.clone();
    let n_steps = cfg.num_steps();

    let mut lyap = LyapunovTracker::new(p, &g);
    let initial_weighted = constants.as_ref().map(|c| c.weighted(&g));
    let measure = |t: f64, g: &State, lyap: &LyapunovTracker| {
        let envelope = match (&constants, initial_weighted) {
            (Some(c), Some(w0)) => c.envelope(w0, t),
            _ => f64::NAN,
        };
        MonitorSample::measure(t, g, constants.as_ref(), envelope, lyap.gamma(), lyap.residual())
    };

    let mut traj = Trajectory {
        samples: vec![measure(0.0, &g, &lyap)],
        snapshots: Vec::new(),
        probe: Vec::new(),
        constants,
        final_state: g0.clone(),
        final_time: 0.0,
        blow_up: None,
        cg_iterations: 0,
    };
    if cfg.snapshot_every.is_some() {
        traj.snapshots.push((0.0, g.clone()));
    }
    if let Some(cell) = cfg.probe {
        traj.probe.push((0.0, g.at(cell)));
    }

    let mut t = 0.0;
    for n in 1..=n_steps {
        let t_new = n as f64 * cfg.dt;
        for c in Component::ALL {
            prev.component_mut(c)
                .values_mut()
                .copy_from_slice(g.component(c).values());
        }
        match stepper.step(cfg.scheme, &mut g, cfg.dt, t_new) {
            Ok(()) => {}
            Err(HrError::BlowUp { component, t }) => {
                traj.blow_up = Some(BlowUp { component, t });
                // keep the last finite state
                g = prev;
                break;
            }
            Err(e) => return Err(e),
        }
        t = t_new;
        lyap.accumulate(p, &prev, &g, cfg.dt);

        if n % cfg.monitor_every == 0 || n == n_steps {
            lyap.refresh(&prev, &g);
            traj.samples.push(measure(t, &g, &lyap));
        }
        if let Some(every) = cfg.snapshot_every {
            if n % every == 0 {
                traj.snapshots.push((t, g.clone()));
            }
        }
        if let Some(cell) = cfg.probe {
            if n % cfg.probe_every == 0 {
                traj.probe.push((t, g.at(cell)));
            }
        }
    }
    traj.final_time = t;
    traj.final_state = g;
    traj.cg_iterations = stepper.cg_iterations;
    Ok(traj)
}

/// Least-squares slope of `log(error)` against `log(step)`.
///
/// Returns `+inf` when any error is exactly zero.
pub fn estimate_convergence_order(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 3 {
        return Err(HrError::InsufficientData(format!(
            "need at least 3 (step, error) pairs, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(h, e)| !(h > 0.0 && h.is_finite() && e >= 0.0 && e.is_finite())) {
        return Err(HrError::InvalidParameter("steps must be positive and errors finite and >= 0".into()));
    }
    if points.iter().any(|&(_, e)| e == 0.0) {
        return Ok(f64::INFINITY);
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(HrError::InvalidParameter("all step sizes are equal".into()));
    }
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{laplacian_neumann, make_grid, mean, norm_lp};
    use crate::model::{typical_parameters, Current};

    /// Only the linear coupling `v - w`, `-v` remains, so `u` diffuses freely
    /// while `v = w = 0`.
    fn zero_reaction(d: [f64; 3]) -> HrParameters {
        HrParameters {
            diffusion: d,
            a: 0.0,
            b: 0.0,
            alpha: 0.0,
            beta: 0.0,
            q: 0.0,
            r: 0.0,
            current: Current::Constant(0.0),
            c: 0.0,
        }
    }

    fn u_only(g: State) -> State {
        let d = *g.domain();
        State::new(g.u, Field::zeros(&d), Field::zeros(&d)).unwrap()
    }

    #[test]
    fn helmholtz_trivial_cases() {
        let d = make_grid(2, &[1.0, 1.0], &[8, 8]).unwrap();
        let b = Field::constant(&d, 2.5);
        assert_eq!(solve_helmholtz_neumann(&d, 3.0, &b, 1e-10).unwrap(), b);
        let b = State::random_uniform(&d, -1.0, 1.0, 1).u;
        assert_eq!(solve_helmholtz_neumann(&d, 0.0, &b, 1e-10).unwrap(), b);
        assert!(solve_helmholtz_neumann(&d, -1.0, &b, 1e-10).is_err());
    }

    #[test]
    fn helmholtz_residual_below_tolerance() {
        for (dim, n) in [(1, 50), (2, 16), (3, 8)] {
            let d = make_grid(dim, &vec![1.0; dim], &vec![n; dim]).unwrap();
            let b = State::random_uniform(&d, -1.0, 1.0, 7).v;
            for kappa in [1e-4, 1e-2, 1.0] {
                let tol = 1e-10;
                let x = solve_helmholtz_neumann(&d, kappa, &b, tol).unwrap();
                let lap = laplacian_neumann(&d, &x).unwrap();
                let res: f64 = b
                    .values()
                    .iter()
                    .zip(x.values())
                    .zip(lap.values())
                    .map(|((bi, xi), li)| (bi - (xi - kappa * li)).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let bn = b.values().iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!(res / bn <= tol, "dim {dim} kappa {kappa}: {}", res / bn);
            }
        }
    }

    #[test]
    fn helmholtz_on_uneven_boxes() {
        let boxes = [
            (vec![0.9, 0.4], vec![9, 4]),
            (vec![0.8, 0.3, 0.5], vec![8, 3, 5]),
            (vec![0.2, 0.7, 0.6], vec![2, 7, 6]),
            (vec![0.3, 3.0], vec![8, 8]),
            (vec![0.3, 3.0, 1.0], vec![8, 8, 4]),
            (vec![1.0, 1.5, 2.0], vec![8, 6, 5]),
        ];
        for (l, n) in boxes {
            let d = make_grid(n.len(), &l, &n).unwrap();
            let b = State::random_uniform(&d, -1.0, 1.0, 3).u;
            for kappa in [1.0, 1e2, 1e4] {
                let x = solve_helmholtz_neumann(&d, kappa, &b, 1e-10)
                    .unwrap_or_else(|e| panic!("{n:?} kappa {kappa}: {e}"));
                let lap = laplacian_neumann(&d, &x).unwrap();
                let res = b
                    .values()
                    .iter()
                    .zip(x.values())
                    .zip(lap.values())
                    .map(|((bi, xi), li)| (bi - (xi - kappa * li)).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let bn = b.values().iter().map(|v| v * v).sum::<f64>().sqrt();
                // the recursive residual meets 1e-10; rounding grows with kappa
                assert!(res / bn <= 1e-8, "{n:?} kappa {kappa}: {}", res / bn);
            }
        }
    }

    #[test]
    fn helmholtz_reports_the_iteration_cap() {
        let d = make_grid(3, &[0.3, 3.0, 1.0], &[8, 8, 4]).unwrap();
        let b = State::random_uniform(&d, -1.0, 1.0, 3).u;
        match solve_helmholtz_neumann(&d, 1e4, &b, 1e-300) {
            Err(HrError::NoConvergence { iterations, .. }) => assert_eq!(iterations, 800),
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn imex_hand_step() {
        let d = make_grid(1, &[1.0], &[3]).unwrap();
        let p = typical_parameters();
        let g = step_imex(&d, &p, &State::constant(&d, [0.0; 3]), 0.1, 1e-10).unwrap();
        let expect = [0.3281, 0.1, 0.001344];
        for i in 0..3 {
            for k in 0..3 {
                assert!((g.at(i)[k] - expect[k]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn constant_state_stays_constant() {
        let d = make_grid(2, &[1.0, 1.0], &[6, 5]).unwrap();
        let p = typical_parameters().with_diffusion([0.1, 0.2, 0.3]);
        let mut g = State::constant(&d, [1.0, -0.5, 0.2]);
        for _ in 0..20 {
            g = step_imex(&d, &p, &g, 0.01, 1e-10).unwrap();
            assert_eq!(g.max_spread(), 0.0);
        }
        let g = step_rk4(&d, &p, &g, 1e-4).unwrap();
        assert_eq!(g.max_spread(), 0.0);
    }

    #[test]
    fn imex_local_error_is_second_order() {
        // ||step(g, dt) - g - dt (Lap part + f)|| = O(dt^2)
        let d = make_grid(1, &[1.0], &[16]).unwrap();
        let p = typical_parameters().with_diffusion([0.1, 0.1, 0.1]);
        let g = State::new(
            Field::from_fn(&d, |x| (std::f64::consts::PI * x[0]).cos()),
            Field::from_fn(&d, |x| 0.5 * x[0]),
            Field::constant(&d, 0.2),
        )
        .unwrap();
        let rhs = {
            let mut out = State::constant(&d, [0.0; 3]);
            Stepper::full_rhs(&p, &d, &g, &mut out);
            out
        };
        let defect = |dt: f64| {
            let next = step_imex(&d, &p, &g, dt, 1e-13).unwrap();
            let mut acc: f64 = 0.0;
            for c in Component::ALL {
                for ((n, g0), r) in next
                    .component(c)
                    .values()
                    .iter()
                    .zip(g.component(c).values())
                    .zip(rhs.component(c).values())
                {
                    acc = acc.max((n - g0 - dt * r).abs());
                }
            }
            acc
        };
        let (e1, e2) = (defect(1e-3), defect(5e-4));
        let ratio = e1 / e2;
        assert!((3.5..4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn rk4_step_doubling_is_fifth_order() {
        let d = make_grid(1, &[1.0], &[2]).unwrap();
        let p = typical_parameters();
        let g = State::constant(&d, [1.0, 0.0, 0.0]);
        let gap = |dt: f64| {
            let one = step_rk4(&d, &p, &g, dt).unwrap();
            let half = step_rk4(&d, &p, &step_rk4(&d, &p, &g, dt / 2.0).unwrap(), dt / 2.0).unwrap();
            (0..3).map(|k| (one.at(0)[k] - half.at(0)[k]).abs()).fold(0.0, f64::max)
        };
        let ratio = gap(0.02) / gap(0.01);
        // O(dt^5): ratio near 32
        assert!((24.0..40.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn pure_diffusion_norm_never_increases() {
        let d = make_grid(2, &[1.0, 1.0], &[16, 16]).unwrap();
        let p = zero_reaction([1.0, 0.5, 0.0]);
        for (scheme, dt) in [(Scheme::ImexEuler, 10.0), (Scheme::ImexEuler, 1e-3), (Scheme::Rk4, 1e-4)] {
            let mut g = u_only(State::random_uniform(&d, -1.0, 1.0, 5));
            let mut st = Stepper::new(&d, &p, 1e-12).unwrap();
            let mut last = norm_lp(&d, &g.u, 2.0).unwrap();
            for _ in 0..30 {
                st.step(scheme, &mut g, dt, 0.0).unwrap();
                let now = norm_lp(&d, &g.u, 2.0).unwrap();
                assert!(now <= last * (1.0 + 1e-12), "{scheme:?} dt {dt}: {now} > {last}");
                last = now;
            }
        }
    }

    #[test]
    fn run_with_zero_end_time() {
        let d = make_grid(1, &[1.0], &[4]).unwrap();
        let cfg = SolverConfig::default();
        let traj = run(&d, &typical_parameters(), &cfg, &State::constant(&d, [0.0; 3])).unwrap();
        assert_eq!(traj.samples.len(), 1);
        assert_eq!(traj.samples[0].t, 0.0);
        assert!(traj.is_complete());
    }

    #[test]
    fn run_conserves_mean_without_reaction() {
        let d = make_grid(2, &[1.0, 1.0], &[12, 12]).unwrap();
        let p = zero_reaction([0.3, 0.3, 0.3]);
        let g0 = u_only(State::random_uniform(&d, -1.0, 1.0, 9));
        let m0 = mean(&d, &g0.u).unwrap();
        let cfg = SolverConfig {
            t_end: 1.0,
            dt: 0.01,
            linear_tol: 1e-14,
            monitor_every: 10,
            ..SolverConfig::default()
        };
        let traj = run(&d, &p, &cfg, &g0).unwrap();
        let m1 = mean(&d, &traj.final_state.u).unwrap();
        assert!((m1 - m0).abs() <= 1e-12, "{m0} -> {m1}");
        // times strictly increasing and starting at zero
        assert_eq!(traj.samples[0].t, 0.0);
        assert!(traj.samples.windows(2).all(|w| w[1].t > w[0].t));
        assert_eq!(traj.samples.len(), 11);
    }

    #[test]
    fn run_reports_blow_up() {
        let d = make_grid(1, &[1.0], &[2]).unwrap();
        let p = typical_parameters();
        let cfg = SolverConfig {
            t_end: 10.0,
            dt: 1.0,
            scheme: Scheme::ImexEuler,
            ..SolverConfig::default()
        };
        let traj = run(&d, &p, &cfg, &State::constant(&d, [5.0, 0.0, 0.0])).unwrap();
        let bu = traj.blow_up.expect("explicit cubic with dt = 1 must blow up");
        assert_eq!(bu.component, Component::U);
        assert!(traj.final_state.first_non_finite().is_none());
        assert!(traj.final_time < bu.t);
    }

    #[test]
    fn probe_and_snapshots() {
        let d = make_grid(1, &[1.0], &[3]).unwrap();
        let cfg = SolverConfig {
            t_end: 0.01,
            dt: 1e-3,
            monitor_every: 4,
            snapshot_every: Some(5),
            probe: Some(1),
            probe_every: 2,
            ..SolverConfig::default()
        };
        let traj = run(&d, &typical_parameters(), &cfg, &State::constant(&d, [0.0; 3])).unwrap();
        let ts: Vec<f64> = traj.samples.iter().map(|s| s.t).collect();
        assert_eq!(ts.len(), 4); // 0, 4, 8, and the final step 10
        assert_eq!(traj.snapshots.len(), 3);
        assert_eq!(traj.probe.len(), 6);
        assert!(run(
            &d,
            &typical_parameters(),
            &SolverConfig {
                probe: Some(3),
                ..cfg.clone()
            },
            &State::constant(&d, [0.0; 3])
        )
        .is_err());
    }

    #[test]
    fn convergence_order_synthetic() {
        let linear: Vec<(f64, f64)> = [0.1, 0.05, 0.025, 0.0125].iter().map(|&h| (h, 3.0 * h)).collect();
        assert!((estimate_convergence_order(&linear).unwrap() - 1.0).abs() < 1e-12);
        let quartic: Vec<(f64, f64)> = [0.1, 0.05, 0.025].iter().map(|&h: &f64| (h, 0.5 * h.powi(4))).collect();
        assert!((estimate_convergence_order(&quartic).unwrap() - 4.0).abs() < 1e-12);
        assert!(estimate_convergence_order(&linear[..2]).is_err());
        let with_zero = [(0.1, 1.0), (0.05, 0.0), (0.025, 0.2)];
        assert_eq!(estimate_convergence_order(&with_zero).unwrap(), f64::INFINITY);
    }

    #[test]
    fn config_validation() {
        let ok = SolverConfig::default();
        ok.validate().unwrap();
        assert!(SolverConfig { dt: 0.0, ..ok.clone() }.validate().is_err());
        assert!(SolverConfig { t_end: -1.0, ..ok.clone() }.validate().is_err());
        assert!(SolverConfig { monitor_every: 0, ..ok.clone() }.validate().is_err());
        assert!(SolverConfig { linear_tol: 0.0, ..ok }.validate().is_err());
    }
}
