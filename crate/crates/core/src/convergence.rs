//! Observed convergence orders on fixed test problems.

use std::f64::consts::PI;
use std::io::Write;

use crate::error::Result;
use crate::grid::{make_grid, Domain, Field};
use crate::integrate::{estimate_convergence_order, Scheme, Stepper};
use crate::model::{Current, HrParameters, State};

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceStudy {
    pub name: &'static str,
    /// `(step, error)` pairs, coarsest first.
    pub points: Vec<(f64, f64)>,
    pub order: f64,
    pub band: (f64, f64),
}

impl ConvergenceStudy {
    pub fn passed(&self) -> bool {
        self.band.0 <= self.order && self.order <= self.band.1
    }
}

pub fn write_order_table<W: Write>(studies: &[ConvergenceStudy], mut out: W) -> std::io::Result<()> {
    writeln!(out, "study,order,lo,hi,pass")?;
    for s in studies {
        writeln!(out, "{},{},{},{},{}", s.name, s.order, s.band.0, s.band.1, u8::from(s.passed()))?;
    }
    writeln!(out)?;
    writeln!(out, "study,step,error")?;
    for s in studies {
        for (h, e) in &s.points {
            writeln!(out, "{},{h},{e}", s.name)?;
        }
    }
    out.flush()
}

/// L2 norm of the difference of two states.
fn state_distance(a: &State, b: &State) -> f64 {
    let vol = a.domain().cell_volume();
    let mut sum = 0.0;
    for (x, y) in a.fields().into_iter().zip(b.fields()) {
        sum += x.values().iter().zip(y.values()).map(|(p, q)| (p - q) * (p - q)).sum::<f64>();
    }
    (sum * vol).sqrt()
}

fn integrate(dom: &Domain, p: &HrParameters, g0: &State, scheme: Scheme, dt: f64, t_end: f64) -> Result<State> {
    let mut st = Stepper::new(dom, p, 1e-13)?;
    let mut g = g0.clone();
    let steps = (t_end / dt).round() as usize;
    for n in 1..=steps {
        st.step(scheme, &mut g, dt, n as f64 * dt)?;
    }
    Ok(g)
}

#[allow(clippy::too_many_arguments)]
fn temporal_study(
    name: &'static str,
    dom: &Domain,
    p: &HrParameters,
    g0: &State,
    scheme: Scheme,
    steps: &[f64],
    t_end: f64,
    band: (f64, f64),
) -> Result<ConvergenceStudy> {
    let finest = steps.iter().copied().fold(f64::INFINITY, f64::min);
    let reference = integrate(dom, p, g0, scheme, finest / 100.0, t_end)?;
    let mut points = Vec::with_capacity(steps.len());
    for &dt in steps {
        let g = integrate(dom, p, g0, scheme, dt, t_end)?;
        points.push((dt, state_distance(&g, &reference)));
    }
    Ok(ConvergenceStudy {
        name,
        order: estimate_convergence_order(&points)?,
        points,
        band,
    })
}

/// IMEX Euler in time on a smooth 1D problem with all three components
/// diffusing; the reaction coefficients come from `p`.
pub fn imex_temporal_study(p: &HrParameters) -> Result<ConvergenceStudy> {
    let dom = make_grid(1, &[1.0], &[32])?;
    let p = p.clone().with_diffusion([0.1; 3]);
    let g0 = State::new(
        Field::from_fn(&dom, |x| 0.5 * (PI * x[0]).cos()),
        Field::from_fn(&dom, |x| -0.3 * (2.0 * PI * x[0]).cos()),
        Field::constant(&dom, 0.1),
    )?;
    temporal_study("imex_temporal", &dom, &p, &g0, Scheme::ImexEuler, &[0.04, 0.02, 0.01, 0.005], 1.0, (0.9, 1.1))
}

/// RK4 in time for the ODE from `(1, 0, 0)`.
pub fn rk4_temporal_study(p: &HrParameters) -> Result<ConvergenceStudy> {
    let dom = make_grid(1, &[1.0], &[2])?;
    let p = p.ode();
    let g0 = State::constant(&dom, [1.0, 0.0, 0.0]);
    temporal_study("rk4_temporal", &dom, &p, &g0, Scheme::Rk4, &[0.05, 0.025, 0.0125, 0.00625], 2.0, (3.8, 4.2))
}

/// Pure diffusion `u_t = d u_xx` on `[0, 1]` against the exact solution
/// `cos(pi x) exp(-d pi^2 t)`, integrated with RK4 at a step far below the
/// spatial error.
pub fn spatial_study() -> Result<ConvergenceStudy> {
    let d = 0.1;
    let t_end = 0.1;
    let p = HrParameters {
        diffusion: [d, 0.0, 0.0],
        a: 0.0,
        b: 0.0,
        alpha: 0.0,
        beta: 0.0,
        q: 0.0,
        r: 0.0,
        current: Current::Constant(0.0),
        c: 0.0,
    };
    let mut points = Vec::new();
    for n in [16, 32, 64, 128] {
        let dom = make_grid(1, &[1.0], &[n])?;
        let g0 = State::new(
            Field::from_fn(&dom, |x| (PI * x[0]).cos()),
            Field::zeros(&dom),
            Field::zeros(&dom),
        )?;
        let g = integrate(&dom, &p, &g0, Scheme::Rk4, 1e-4, t_end)?;
        let decay = (-d * PI * PI * t_end).exp();
        let exact = State::new(
            Field::from_fn(&dom, |x| (PI * x[0]).cos() * decay),
            Field::zeros(&dom),
            Field::zeros(&dom),
        )?;
        points.push((1.0 / n as f64, state_distance(&g, &exact)));
    }
    Ok(ConvergenceStudy {
        name: "spatial",
        order: estimate_convergence_order(&points)?,
        points,
        band: (1.8, 2.2),
    })
}

pub fn all_studies(p: &HrParameters) -> Result<Vec<ConvergenceStudy>> {
    Ok(vec![imex_temporal_study(p)?, rk4_temporal_study(p)?, spatial_study()?])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::typical_parameters;

    #[test]
    fn orders_within_bands() {
        for s in all_studies(&typical_parameters()).unwrap() {
            assert!(s.passed(), "{}: order {} points {:?}", s.name, s.order, s.points);
        }
    }

    #[test]
    fn table_lists_every_study() {
        let s = ConvergenceStudy {
            name: "x",
            points: vec![(0.1, 1.0), (0.05, 0.5)],
            order: 1.0,
            band: (0.9, 1.1),
        };
        let mut buf = Vec::new();
        write_order_table(&[s], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("study,order,lo,hi,pass\nx,1,0.9,1.1,1\n"));
        assert!(text.contains("x,0.05,0.5"));
    }
}
