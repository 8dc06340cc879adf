//! Spatially homogeneous steady states.
//!
//! Setting the reaction to zero gives `v = psi(u)`, `w = (q/r)(u - c)` and the
//! cubic `-b u^3 + (a - beta) u^2 - (q/r) u + (alpha + J + q c / r) = 0`.

use nalgebra::{Complex, Matrix3};

use crate::error::{HrError, Result};
use crate::model::{Current, HrParameters};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    /// Largest real part within `1e-10` of zero.
    Marginal,
}

impl Stability {
    pub fn label(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Marginal => "marginal",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Equilibrium {
    pub state: [f64; 3],
    pub eigenvalues: [Complex<f64>; 3],
    pub stability: Stability,
    /// Max-norm of the reaction at `state`.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumSet {
    /// Sorted by `u`.
    pub points: Vec<Equilibrium>,
}

impl EquilibriumSet {
    pub fn write_table<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "u,v,w,re1,im1,re2,im2,re3,im3,stability,residual")?;
        for e in &self.points {
            let [u, v, w] = e.state;
            write!(out, "{u},{v},{w}")?;
            for z in &e.eigenvalues {
                write!(out, ",{},{}", z.re, z.im)?;
            }
            writeln!(out, ",{},{}", e.stability.label(), e.residual)?;
        }
        out.flush()
    }
}

const DEDUP_TOL: f64 = 1e-8;
const RESIDUAL_TOL: f64 = 1e-10;
const DEAD_BAND: f64 = 1e-10;
const SCAN_INTERVALS: usize = 4096;

/// Coefficients `[c0, c1, c2, c3]` of the reduced cubic in `u`.
pub fn reduced_cubic(p: &HrParameters, j: f64) -> [f64; 4] {
    let qr = p.q / p.r;
    [p.alpha + j + qr * p.c, -qr, p.a - p.beta, -p.b]
}

fn eval(c: &[f64; 4], u: f64) -> (f64, f64) {
    let val = ((c[3] * u + c[2]) * u + c[1]) * u + c[0];
    let der = (3.0 * c[3] * u + 2.0 * c[2]) * u + c[1];
    (val, der)
}

fn newton(c: &[f64; 4], mut u: f64, iters: usize) -> Option<f64> {
    for _ in 0..iters {
        let (f, df) = eval(c, u);
        if f == 0.0 {
            return Some(u);
        }
        if df == 0.0 || !df.is_finite() {
            return None;
        }
        let next = u - f / df;
        if !next.is_finite() {
            return None;
        }
        if (next - u).abs() <= 1e-15 * u.abs().max(1.0) {
            return Some(next);
        }
        u = next;
    }
    Some(u)
}

fn bisect(c: &[f64; 4], mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = eval(c, lo).0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = eval(c, mid).0;
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All real roots of the reduced cubic with leading coefficient `c[3] != 0`.
fn real_roots(c: &[f64; 4], a_over_b: f64) -> Vec<f64> {
    let lead = c[3].abs();
    let cauchy = 1.0 + c[..3].iter().map(|x| x.abs() / lead).fold(0.0, f64::max);
    let bound = (10.0 + a_over_b.abs()).max(cauchy);

    let mut candidates = Vec::new();
    let step = 2.0 * bound / SCAN_INTERVALS as f64;
    let mut x0 = -bound;
    let mut f0 = eval(c, x0).0;
    for k in 1..=SCAN_INTERVALS {
        let x1 = -bound + k as f64 * step;
        let f1 = eval(c, x1).0;
        if f0 == 0.0 {
            candidates.push(x0);
        } else if (f0 < 0.0) != (f1 < 0.0) && f1 != 0.0 {
            candidates.push(bisect(c, x0, x1));
        }
        x0 = x1;
        f0 = f1;
    }
    if f0 == 0.0 {
        candidates.push(x0);
    }
    for seed in [-bound, 0.0, bound] {
        if let Some(u) = newton(c, seed, 200) {
            candidates.push(u);
        }
    }
    let mut roots: Vec<f64> = candidates
        .into_iter()
        .filter_map(|u| newton(c, u, 8))
        .filter(|u| u.is_finite())
        .collect();
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() <= DEDUP_TOL);
    roots
}

fn classify(eigs: &[Complex<f64>; 3]) -> Stability {
    let max_re = eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    if max_re > DEAD_BAND {
        Stability::Unstable
    } else if max_re < -DEAD_BAND {
        Stability::Stable
    } else {
        Stability::Marginal
    }
}

/// Spatially constant steady states with their linearisation.
pub fn homogeneous_equilibria(p: &HrParameters) -> Result<EquilibriumSet> {
    if p.r == 0.0 {
        return Err(HrError::InvalidParameter("r must be nonzero".into()));
    }
    if p.b == 0.0 {
        return Err(HrError::InvalidParameter("b must be nonzero for a cubic".into()));
    }
    p.validate_structure(None)?;
    let j = match &p.current {
        Current::Constant(j) => *j,
        Current::Field(f) if f.spread() == 0.0 => f.values()[0],
        Current::Field(_) => {
            return Err(HrError::InvalidParameter(
                "homogeneous equilibria need a spatially constant current".into(),
            ))
        }
    };
    let coeffs = reduced_cubic(p, j);
    let mut points = Vec::new();
    for u in real_roots(&coeffs, p.a / p.b) {
        let state = [u, p.psi(u), p.q / p.r * (u - p.c)];
        let residual = p
            .reaction_point(state, j)
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()));
        if residual > RESIDUAL_TOL {
            continue;
        }
        let jac = p.jacobian_point(state);
        let m = Matrix3::from_fn(|i, k| jac[i][k]);
        let ev = m.complex_eigenvalues();
        let mut eigenvalues = [ev[0], ev[1], ev[2]];
        eigenvalues.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
        points.push(Equilibrium {
            state,
            stability: classify(&eigenvalues),
            eigenvalues,
            residual,
        });
    }
    Ok(EquilibriumSet { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::model::{reaction, typical_parameters, State};

    #[test]
    fn typical_has_one_equilibrium() {
        let p = typical_parameters();
        let set = homogeneous_equilibria(&p).unwrap();
        assert_eq!(set.points.len(), 1);
        let [u, v, w] = set.points[0].state;
        assert!((u + 0.684).abs() < 1e-3, "u* = {u}");
        assert!((v + 1.34).abs() < 1e-2, "v* = {v}");
        assert!((w - 3.67).abs() < 1e-2, "w* = {w}");
        assert!((w - 4.0 * (u + 1.6)).abs() < 1e-12);
        assert!(set.points[0].residual <= 1e-12);

        let d = make_grid(1, &[1.0], &[3]).unwrap();
        let f = reaction(&p, &State::constant(&d, set.points[0].state)).unwrap();
        assert!(f.fields().iter().all(|c| c.max_abs() <= 1e-10));
    }

    #[test]
    fn constructed_cubic_has_root_at_zero() {
        // a = beta, q/r = 1, alpha + J + q c / r = 0  =>  -u^3 - u = 0
        let mut p = typical_parameters();
        p.a = 5.0;
        p.beta = 5.0;
        p.q = p.r;
        p.c = -(p.alpha + 3.281);
        let set = homogeneous_equilibria(&p).unwrap();
        assert_eq!(set.points.len(), 1);
        assert!(set.points[0].state[0].abs() < 1e-14);
    }

    #[test]
    fn three_real_roots() {
        // -u^3 + 3u^2 - u - 1 = -(u - 1)(u^2 - 2u - 1): roots 1, 1 +- sqrt(2)
        let mut p = typical_parameters();
        p.a = 8.0;
        p.beta = 5.0;
        p.q = p.r;
        p.current = Current::Constant(0.0);
        p.alpha = 1.0;
        p.c = -2.0; // alpha + J + q c / r = 1 - 2 = -1
        let set = homogeneous_equilibria(&p).unwrap();
        let us: Vec<f64> = set.points.iter().map(|e| e.state[0]).collect();
        let expect = [1.0 - 2f64.sqrt(), 1.0, 1.0 + 2f64.sqrt()];
        assert_eq!(us.len(), 3, "{us:?}");
        for (a, b) in us.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        for e in &set.points {
            assert!(e.residual <= 1e-10);
        }
    }

    #[test]
    fn eigenvalues_match_characteristic_polynomial() {
        let p = typical_parameters();
        let e = &homogeneous_equilibria(&p).unwrap().points[0];
        let jac = p.jacobian_point(e.state);
        let m = Matrix3::from_fn(|i, k| jac[i][k]);
        let (tr, det) = (m.trace(), m.determinant());
        let sum: Complex<f64> = e.eigenvalues.iter().sum();
        let prod: Complex<f64> = e.eigenvalues.iter().product();
        assert!((sum.re - tr).abs() < 1e-10 && sum.im.abs() < 1e-10);
        assert!((prod.re - det).abs() < 1e-10 && prod.im.abs() < 1e-10);
    }

    #[test]
    fn errors() {
        let mut p = typical_parameters();
        p.r = 0.0;
        assert!(homogeneous_equilibria(&p).is_err());
    }

    #[test]
    fn stability_dead_band() {
        let z = |re: f64| Complex::new(re, 0.0);
        assert_eq!(classify(&[z(-1.0), z(-2.0), z(-1e-3)]), Stability::Stable);
        assert_eq!(classify(&[z(-1.0), z(1e-3), z(-1e-3)]), Stability::Unstable);
        assert_eq!(classify(&[z(-1.0), z(1e-12), z(-1e-3)]), Stability::Marginal);
    }
}
