//! Explicit dissipativity constants and the Gronwall envelope for the weighted
//! norm `C1 ||u||^2 + ||v||^2 + ||w||^2`.

use std::io::Write;

use crate::error::{HrError, Result};
use crate::model::{HrParameters, State};

/// `C1 -> C2 -> r1 -> M -> K1` for one parameter set and domain volume.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConstantsReport {
    pub c1: f64,
    pub c2: f64,
    pub r1: f64,
    pub m: f64,
    pub k1: f64,
    pub volume: f64,
}

/// Evaluates the constants. A field-valued current enters through its sup
/// norm, which only enlarges the bounds.
pub fn compute_constants(p: &HrParameters, volume: f64) -> Result<ConstantsReport> {
    if p.b == 0.0 || p.r == 0.0 {
        return Err(HrError::InvalidParameter("b and r must be nonzero".into()));
    }
    p.validate(None)?;
    if !(volume.is_finite() && volume > 0.0) {
        return Err(HrError::InvalidParameter(format!("volume must be positive, got {volume}")));
    }
    let HrParameters {
        a,
        b,
        alpha,
        beta,
        q,
        r,
        c,
        ..
    } = *p;
    let j = p.current.sup();

    let c1 = (beta * beta + 4.0) / b;
    let big = c1 * c1 * (2.0 + 1.0 / r) + c1;
    let c2 = (c1 * a).powi(4) + c1 * j * j + big * big + 2.0 * alpha * alpha + q * q * c * c / r + q.powi(4) / (r * r);
    let r1 = 0.5 * r.min(1.0);
    let m = (2.0 * c2 + c1 * c1 / 32.0) / r1;
    let k1 = m * volume / c1.min(1.0) + 1.0;

    for (name, v) in [("C1", c1), ("C2", c2), ("r1", r1), ("M", m), ("K1", k1)] {
        if !v.is_finite() {
            return Err(HrError::Overflow { name });
        }
    }
    Ok(ConstantsReport {
        c1,
        c2,
        r1,
        m,
        k1,
        volume,
    })
}

impl ConstantsReport {
    /// `C1 ||u||^2 + ||v||^2 + ||w||^2`.
    pub fn weighted(&self, g: &State) -> f64 {
        weighted_norm(self.c1, g)
    }

    /// `e^{-r1 t} w0 + M |Omega|`
    pub fn envelope(&self, initial_weighted: f64, t: f64) -> f64 {
        (-self.r1 * t).exp() * initial_weighted + self.m * self.volume
    }

    /// Time after which every trajectory from the ball of radius `radius` stays
    /// in the absorbing ball `||g||^2 <= K1`. Negative for small radii.
    pub fn absorbing_time(&self, radius: f64) -> Result<f64> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(HrError::InvalidParameter(format!("radius must be positive, got {radius}")));
        }
        Ok((radius * radius * self.c1.max(1.0)).ln() / self.r1)
    }

    /// Flat `key=value` lines.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "C1={}", self.c1)?;
        writeln!(out, "C2={}", self.c2)?;
        writeln!(out, "r1={}", self.r1)?;
        writeln!(out, "M={}", self.m)?;
        writeln!(out, "K1={}", self.k1)?;
        writeln!(out, "volume={}", self.volume)?;
        out.flush()
    }
}

pub(crate) fn weighted_norm(c1: f64, g: &State) -> f64 {
    let vol = g.domain().cell_volume();
    let [u, v, w] = g.slices();
    let sq = |s: &[f64]| s.iter().map(|x| x * x).sum::<f64>();
    (c1 * sq(u) + sq(v) + sq(w)) * vol
}

pub fn absorbing_time(rep: &ConstantsReport, radius: f64) -> Result<f64> {
    rep.absorbing_time(radius)
}

pub fn gronwall_envelope(rep: &ConstantsReport, initial_weighted: f64, t: f64) -> f64 {
    rep.envelope(initial_weighted, t)
}
