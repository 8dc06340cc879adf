//! Lyapunov functional along computed trajectories.
//!
//! `Gamma(g) = 1/2 sum_i d_i ||grad g_i||^2 - int F(g)`, where `int F` is the
//! path integral of the reaction, accumulated step by step with the midpoint
//! rule `<f((g^n + g^{n+1}) / 2), g^{n+1} - g^n>`. The gradient part changes by
//! exactly `-<D Lap g_mid, g^{n+1} - g^n>` over a step, so
//! `dGamma/dt = -||g_t||^2` holds to the accuracy of the midpoint quadrature.

use crate::error::{HrError, Result};
use crate::grid::gradient_square_sum;
use crate::model::{HrParameters, State};

/// One step of the dissipation identity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LyapunovRecord {
    /// End of the step.
    pub t: f64,
    pub gamma: f64,
    /// `-||g_t||^2` with `g_t = (g^{n+1} - g^n) / dt`.
    pub dissipation: f64,
    /// `(Gamma^{n+1} - Gamma^n) / dt - dissipation`.
    pub residual: f64,
}

/// Running accumulator used by the integrator and by [`lyapunov_series`].
#[derive(Clone, Debug)]
pub struct LyapunovTracker {
    diffusion: [f64; 3],
    path_integral: f64,
    previous_path_integral: f64,
    dt: f64,
    gamma: f64,
    dissipation: f64,
    residual: f64,
}

fn gradient_energy(diffusion: [f64; 3], g: &State) -> f64 {
    let dom = g.domain();
    let vol = dom.cell_volume();
    g.slices()
        .into_iter()
        .zip(diffusion)
        .filter(|(_, d)| *d > 0.0)
        .map(|(s, d)| 0.5 * d * gradient_square_sum(dom, s) * vol)
        .sum()
}

impl LyapunovTracker {
    pub fn new(p: &HrParameters, g0: &State) -> Self {
        LyapunovTracker {
            diffusion: p.diffusion,
            path_integral: 0.0,
            previous_path_integral: 0.0,
            dt: f64::NAN,
            gamma: gradient_energy(p.diffusion, g0),
            dissipation: 0.0,
            residual: 0.0,
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Residual of the most recent step (zero before the first step).
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn dissipation(&self) -> f64 {
        self.dissipation
    }

    pub fn advance(&mut self, p: &HrParameters, prev: &State, next: &State, dt: f64) {
        let before = self.gamma;
        self.accumulate(p, prev, next, dt);
        self.gamma = gradient_energy(self.diffusion, next) - self.path_integral;
        self.residual = (self.gamma - before) / dt - self.dissipation;
    }

    /// Adds one step to the path integral and the dissipation without
    /// touching `gamma`; call [`Self::refresh`] before reading it again.
    pub(crate) fn accumulate(&mut self, p: &HrParameters, prev: &State, next: &State, dt: f64) {
        let vol = prev.domain().cell_volume();
        let [pu, pv, pw] = prev.slices();
        let [nu, nv, nw] = next.slices();
        let (mut work, mut speed) = (0.0, 0.0);
        for i in 0..pu.len() {
            let d = [nu[i] - pu[i], nv[i] - pv[i], nw[i] - pw[i]];
            let mid = [0.5 * (pu[i] + nu[i]), 0.5 * (pv[i] + nv[i]), 0.5 * (pw[i] + nw[i])];
            let f = p.reaction_point(mid, p.current.at(i));
            work += f[0] * d[0] + f[1] * d[1] + f[2] * d[2];
            speed += d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
        }
        self.previous_path_integral = self.path_integral;
        self.path_integral += work * vol;
        self.dissipation = -speed * vol / (dt * dt);
        self.dt = dt;
    }

    /// Recomputes `gamma` and the residual of the last accumulated step from
    /// its end points.
    pub(crate) fn refresh(&mut self, prev: &State, next: &State) {
        let before = gradient_energy(self.diffusion, prev) - self.previous_path_integral;
        self.gamma = gradient_energy(self.diffusion, next) - self.path_integral;
        self.residual = (self.gamma - before) / self.dt - self.dissipation;
    }
}

/// Evaluates the functional and the dissipation identity over consecutive
/// stored states; one record per step.
pub fn lyapunov_series(states: &[(f64, State)], p: &HrParameters) -> Result<Vec<LyapunovRecord>> {
    if states.len() < 2 {
        return Err(HrError::InsufficientData(format!(
            "need at least 2 states, got {}",
            states.len()
        )));
    }
    let dom = *states[0].1.domain();
    p.validate_structure(Some(&dom))?;
    let mut tracker = LyapunovTracker::new(p, &states[0].1);
    let mut out = Vec::with_capacity(states.len() - 1);
    for pair in states.windows(2) {
        let ((t0, g0), (t1, g1)) = (&pair[0], &pair[1]);
        g1.u.check_domain(&dom)?;
        let dt = t1 - t0;
        // also rejects NaN
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(dt > 0.0) {
            return Err(HrError::InvalidParameter(format!("times must increase ({t0} then {t1})")));
        }
        tracker.advance(p, g0, g1, dt);
        out.push(LyapunovRecord {
            t: *t1,
            gamma: tracker.gamma(),
            dissipation: tracker.dissipation(),
            residual: tracker.residual(),
        });
    }
    Ok(out)
}
