//! Hindmarsh-Rose coefficients, the cubic/quadratic nonlinearities and the
//! pointwise reaction field
//!
//! ```text
//! u_t = d1 Lap u + a u^2 - b u^3 + v - w + J
//! v_t = d2 Lap v + alpha - beta u^2 - v
//! w_t = d3 Lap w + q (u - c) - r w
//! ```
//!
//! Zero diffusion coefficients select the partly diffusive systems and the
//! ODE; there is a single code path for all of them.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{HrError, Result};
use crate::grid::{Domain, Field};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Component {
    U,
    V,
    W,
}

impl Component {
    pub const ALL: [Component; 3] = [Component::U, Component::V, Component::W];

    pub fn index(self) -> usize {
        match self {
            Component::U => 0,
            Component::V => 1,
            Component::W => 2,
        }
    }

    pub fn as_char(self) -> char {
        ['u', 'v', 'w'][self.index()]
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "u" => Some(Component::U),
            "v" => Some(Component::V),
            "w" => Some(Component::W),
            _ => None,
        }
    }
}

impl fmt::Display for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// Which components diffuse.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// All three components diffuse.
    Full,
    /// Only `u` diffuses.
    Phr,
    /// `u` and `v` diffuse.
    Qhr,
    /// No diffusion; every cell is an independent ODE.
    Ode,
}

impl Variant {
    pub fn label(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::Phr => "phr",
            Variant::Qhr => "qhr",
            Variant::Ode => "ode",
        }
    }

    pub fn from_label(s: &str) -> Option<Self> {
        match s {
            "full" => Some(Variant::Full),
            "phr" => Some(Variant::Phr),
            "qhr" => Some(Variant::Qhr),
            "ode" => Some(Variant::Ode),
            _ => None,
        }
    }

    /// Classifies a diffusion triple; mixed patterns such as `d1 = 0, d2 > 0`
    /// have no name.
    pub fn from_diffusion(d: [f64; 3]) -> Option<Self> {
        match (d[0] > 0.0, d[1] > 0.0, d[2] > 0.0) {
            (true, true, true) => Some(Variant::Full),
            (true, false, false) => Some(Variant::Phr),
            (true, true, false) => Some(Variant::Qhr),
            (false, false, false) => Some(Variant::Ode),
            _ => None,
        }
    }

    /// Keeps the diffusion coefficients that this variant allows.
    pub fn mask(self, d: [f64; 3]) -> [f64; 3] {
        match self {
            Variant::Full => d,
            Variant::Phr => [d[0], 0.0, 0.0],
            Variant::Qhr => [d[0], d[1], 0.0],
            Variant::Ode => [0.0; 3],
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Injected current: a constant or a per-cell field.
#[derive(Clone, Debug, PartialEq)]
pub enum Current {
    Constant(f64),
    Field(Field),
}

impl Current {
    pub fn at(&self, cell: usize) -> f64 {
        match self {
            Current::Constant(j) => *j,
            Current::Field(f) => f.values()[cell],
        }
    }

    /// Largest absolute value of the current.
    pub fn sup(&self) -> f64 {
        match self {
            Current::Constant(j) => j.abs(),
            Current::Field(f) => f.max_abs(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HrParameters {
    pub diffusion: [f64; 3],
    pub a: f64,
    pub b: f64,
    pub alpha: f64,
    pub beta: f64,
    pub q: f64,
    pub r: f64,
    pub current: Current,
    pub c: f64,
}

/// `J = 3.281, r = 0.0021, S = 4, q = rS, c = -1.6`, `phi(s) = 3 s^2 - s^3`,
/// `psi(s) = 1 - 5 s^2`; no diffusion.
pub fn typical_parameters() -> HrParameters {
    HrParameters::typical([0.0; 3])
}

impl HrParameters {
    pub fn typical(diffusion: [f64; 3]) -> Self {
        let r = 0.0021;
        let s = 4.0;
        HrParameters {
            diffusion,
            a: 3.0,
            b: 1.0,
            alpha: 1.0,
            beta: 5.0,
            q: r * s,
            r,
            current: Current::Constant(3.281),
            c: -1.6,
        }
    }

    pub fn with_diffusion(mut self, diffusion: [f64; 3]) -> Self {
        self.diffusion = diffusion;
        self
    }

    pub fn variant(&self) -> Option<Variant> {
        Variant::from_diffusion(self.diffusion)
    }

    /// The same coefficients with every diffusion coefficient set to zero.
    pub fn ode(&self) -> Self {
        self.clone().with_diffusion([0.0; 3])
    }

    /// Checks the sign conventions: `a, b, alpha, beta, q, r > 0`, `d_i >= 0`,
    /// everything finite, and a field-valued current on `dom` if one is given.
    pub fn validate(&self, dom: Option<&Domain>) -> Result<()> {
        for (name, v) in [
            ("a", self.a),
            ("b", self.b),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("q", self.q),
            ("r", self.r),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(HrError::InvalidParameter(format!("{name} must be positive and finite, got {v}")));
            }
        }
        self.validate_structure(dom)
    }

    /// Diffusion signs, finiteness and the current's domain, without the
    /// positivity requirements on the reaction coefficients.
    pub fn validate_structure(&self, dom: Option<&Domain>) -> Result<()> {
        for (i, d) in self.diffusion.iter().enumerate() {
            if !(d.is_finite() && *d >= 0.0) {
                return Err(HrError::InvalidParameter(format!("d{} must be nonnegative, got {d}", i + 1)));
            }
        }
        for (name, v) in [
            ("a", self.a),
            ("b", self.b),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("q", self.q),
            ("r", self.r),
            ("c", self.c),
        ] {
            if !v.is_finite() {
                return Err(HrError::InvalidParameter(format!("{name} is not finite")));
            }
        }
        match (&self.current, dom) {
            (Current::Constant(j), _) if !j.is_finite() => {
                Err(HrError::InvalidParameter("J is not finite".into()))
            }
            (Current::Field(f), Some(dom)) => f.check_domain(dom),
            _ => Ok(()),
        }
    }

    pub fn phi(&self, u: f64) -> f64 {
        u * u * (self.a - self.b * u)
    }

    pub fn psi(&self, u: f64) -> f64 {
        self.alpha - self.beta * u * u
    }

    /// Reaction at one point with injected current `j`.
    #[inline]
    pub fn reaction_point(&self, [u, v, w]: [f64; 3], j: f64) -> [f64; 3] {
        [
            self.phi(u) + v - w + j,
            self.psi(u) - v,
            self.q * (u - self.c) - self.r * w,
        ]
    }

    /// Jacobian of the reaction at a point (independent of `J`).
    pub fn jacobian_point(&self, [u, _, _]: [f64; 3]) -> [[f64; 3]; 3] {
        [
            [2.0 * self.a * u - 3.0 * self.b * u * u, 1.0, -1.0],
            [-2.0 * self.beta * u, -1.0, 0.0],
            [self.q, 0.0, -self.r],
        ]
    }

    /// Writes the reaction of `(u, v, w)` into `out`, cell by cell.
    pub(crate) fn reaction_slices(&self, g: [&[f64]; 3], out: [&mut [f64]; 3]) {
        let [fu, fv, fw] = out;
        let n = g[0].len();
        match &self.current {
            Current::Constant(j) => {
                for i in 0..n {
                    let [a, b, c] = self.reaction_point([g[0][i], g[1][i], g[2][i]], *j);
                    fu[i] = a;
                    fv[i] = b;
                    fw[i] = c;
                }
            }
            Current::Field(jf) => {
                let jv = jf.values();
                for i in 0..n {
                    let [a, b, c] = self.reaction_point([g[0][i], g[1][i], g[2][i]], jv[i]);
                    fu[i] = a;
                    fv[i] = b;
                    fw[i] = c;
                }
            }
        }
    }
}

pub fn phi(p: &HrParameters, u: f64) -> f64 {
    p.phi(u)
}

pub fn psi(p: &HrParameters, u: f64) -> f64 {
    p.psi(u)
}

pub fn reaction_jacobian_point(p: &HrParameters, g: [f64; 3]) -> [[f64; 3]; 3] {
    p.jacobian_point(g)
}

/// The triple `(u, v, w)` of fields on one domain.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub u: Field,
    pub v: Field,
    pub w: Field,
}

impl State {
    pub fn new(u: Field, v: Field, w: Field) -> Result<Self> {
        let dom = *u.domain();
        v.check_domain(&dom)?;
        w.check_domain(&dom)?;
        Ok(State { u, v, w })
    }

    pub fn constant(dom: &Domain, value: [f64; 3]) -> Self {
        State {
            u: Field::constant(dom, value[0]),
            v: Field::constant(dom, value[1]),
            w: Field::constant(dom, value[2]),
        }
    }

    /// Independent uniform samples on `[lo, hi)` per cell and component from a
    /// ChaCha8 stream seeded with `seed`.
    pub fn random_uniform(dom: &Domain, lo: f64, hi: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = dom.num_cells();
        let mut draw = || {
            let vals = (0..n).map(|_| rng.gen_range(lo..hi)).collect();
            Field::from_values_unchecked(dom, vals)
        };
        let u = draw();
        let v = draw();
        let w = draw();
        State { u, v, w }
    }

    pub fn domain(&self) -> &Domain {
        self.u.domain()
    }

    pub fn component(&self, c: Component) -> &Field {
        match c {
            Component::U => &self.u,
            Component::V => &self.v,
            Component::W => &self.w,
        }
    }

    pub(crate) fn component_mut(&mut self, c: Component) -> &mut Field {
        match c {
            Component::U => &mut self.u,
            Component::V => &mut self.v,
            Component::W => &mut self.w,
        }
    }

    pub fn fields(&self) -> [&Field; 3] {
        [&self.u, &self.v, &self.w]
    }

    pub(crate) fn slices(&self) -> [&[f64]; 3] {
        [self.u.values(), self.v.values(), self.w.values()]
    }

    pub(crate) fn slices_mut(&mut self) -> [&mut [f64]; 3] {
        [self.u.values_mut(), self.v.values_mut(), self.w.values_mut()]
    }

    pub fn at(&self, cell: usize) -> [f64; 3] {
        [self.u.values()[cell], self.v.values()[cell], self.w.values()[cell]]
    }

    /// `||u||^2 + ||v||^2 + ||w||^2` in `L^2`.
    pub fn norm_sq(&self) -> f64 {
        let vol = self.domain().cell_volume();
        self.slices().iter().map(|s| crate::grid::dot(s, s)).sum::<f64>() * vol
    }

    /// First component that contains a non-finite value.
    pub fn first_non_finite(&self) -> Option<Component> {
        Component::ALL.into_iter().find(|&c| !self.component(c).is_finite())
    }

    /// Largest spatial spread over the three components.
    pub fn max_spread(&self) -> f64 {
        self.fields().iter().map(|f| f.spread()).fold(0.0, f64::max)
    }
}

/// Pointwise reaction `f(g)` as a state-shaped increment.
pub fn reaction(p: &HrParameters, g: &State) -> Result<State> {
    let dom = *g.domain();
    if let Current::Field(j) = &p.current {
        j.check_domain(&dom)?;
    }
    let mut out = State::constant(&dom, [0.0; 3]);
    p.reaction_slices(g.slices(), out.slices_mut());
    Ok(out)
}
