//! Checks a monitored trajectory against the Gronwall envelope and the
//! absorbing ball.

use std::io::Write;

use super::constants::ConstantsReport;
use super::monitor::MonitorSample;
use crate::error::{HrError, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyRow {
    pub t: f64,
    pub weighted: f64,
    pub envelope: f64,
    /// `||u||^2 + ||v||^2 + ||w||^2`.
    pub norm_sq: f64,
    /// `None` before the absorbing time.
    pub in_ball: Option<bool>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DissipativityReport {
    pub rows: Vec<VerifyRow>,
    pub slack: f64,
    /// Radius of the initial ball used for the absorbing time.
    pub radius: f64,
    pub absorbing_time: f64,
    pub k1: f64,
    /// Index into `rows`.
    pub first_violation: Option<usize>,
}

impl DissipativityReport {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }

    /// Largest `weighted / envelope` over all rows.
    pub fn worst_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.weighted / r.envelope).fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,weighted,envelope,pass")?;
        for r in &self.rows {
            writeln!(out, "{},{},{},{}", r.t, r.weighted, r.envelope, u8::from(r.pass))?;
        }
        out.flush()
    }
}

/// Uses `sqrt(||g(0)||^2)` from the first sample as the initial radius.
pub fn verify_dissipativity(
    rep: &ConstantsReport,
    samples: &[MonitorSample],
    slack: f64,
) -> Result<DissipativityReport> {
    let first = samples
        .first()
        .ok_or_else(|| HrError::InsufficientData("trajectory has no samples".into()))?;
    verify_dissipativity_in_ball(rep, samples, slack, first.norm_sq().sqrt())
}

/// As [`verify_dissipativity`] with an explicit initial radius. Samples
/// without recorded bound values are evaluated from `rep`.
pub fn verify_dissipativity_in_ball(
    rep: &ConstantsReport,
    samples: &[MonitorSample],
    slack: f64,
    radius: f64,
) -> Result<DissipativityReport> {
    let first = samples
        .first()
        .ok_or_else(|| HrError::InsufficientData("trajectory has no samples".into()))?;
    if !(slack >= 0.0 && slack.is_finite()) {
        return Err(HrError::InvalidParameter(format!("slack must be >= 0, got {slack}")));
    }
    let weighted_of = |s: &MonitorSample| {
        if s.weighted.is_finite() {
            s.weighted
        } else {
            rep.c1 * s.l2[0] * s.l2[0] + s.l2[1] * s.l2[1] + s.l2[2] * s.l2[2]
        }
    };
    let w0 = weighted_of(first);
    // a zero initial ball is absorbed at once
    let absorbing_time = if radius > 0.0 {
        rep.absorbing_time(radius)?
    } else {
        f64::NEG_INFINITY
    };
    let ball_from = absorbing_time.max(0.0);

    let mut rows = Vec::with_capacity(samples.len());
    let mut first_violation = None;
    for (i, s) in samples.iter().enumerate() {
        let weighted = weighted_of(s);
        let envelope = if s.envelope.is_finite() {
            s.envelope
        } else {
            rep.envelope(w0, s.t)
        };
        let norm_sq = s.norm_sq();
        let in_ball = (s.t >= ball_from).then_some(norm_sq <= rep.k1);
        let pass = weighted <= (1.0 + slack) * envelope && in_ball != Some(false);
        if !pass && first_violation.is_none() {
            first_violation = Some(i);
        }
        rows.push(VerifyRow {
            t: s.t,
            weighted,
            envelope,
            norm_sq,
            in_ball,
            pass,
        });
    }
    Ok(DissipativityReport {
        rows,
        slack,
        radius,
        absorbing_time,
        k1: rep.k1,
        first_violation,
    })
}
