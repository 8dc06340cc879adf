use super::constants::{weighted_norm, ConstantsReport};
use crate::grid::gradient_square_sum;
use crate::model::State;

/// Norms and bound values recorded at one sample time. Per-component arrays
/// are ordered `[u, v, w]`.
///
/// `weighted` and `envelope` are NaN when the constants cannot be formed
/// (for example with zero reaction coefficients).
#[derive(Clone, Debug, PartialEq)]
pub struct MonitorSample {
    pub t: f64,
    pub l2: [f64; 3],
    pub l4: [f64; 3],
    pub l6: [f64; 3],
    pub h1: [f64; 3],
    pub linf: [f64; 3],
    pub weighted: f64,
    pub envelope: f64,
    pub gamma: f64,
    pub gamma_residual: f64,
}

impl MonitorSample {
    pub const CSV_HEADER: &'static str = "t,L2u,L2v,L2w,L4u,L4v,L4w,L6u,L6v,L6w,H1u,H1v,H1w,Linfu,Linfv,Linfw,weighted,envelope,gamma,gamma_residual";

    pub fn measure(
        t: f64,
        g: &State,
        constants: Option<&ConstantsReport>,
        envelope: f64,
        gamma: f64,
        gamma_residual: f64,
    ) -> Self {
        let dom = *g.domain();
        let vol = dom.cell_volume();
        let mut s = MonitorSample {
            t,
            l2: [0.0; 3],
            l4: [0.0; 3],
            l6: [0.0; 3],
            h1: [0.0; 3],
            linf: [0.0; 3],
            weighted: constants.map_or(f64::NAN, |c| weighted_norm(c.c1, g)),
            envelope,
            gamma,
            gamma_residual,
        };
        for (k, vals) in g.slices().into_iter().enumerate() {
            let (mut s2, mut s4, mut s6, mut mx) = (0.0, 0.0, 0.0, 0.0f64);
            for &x in vals {
                let x2 = x * x;
                s2 += x2;
                s4 += x2 * x2;
                s6 += x2 * x2 * x2;
                mx = mx.max(x.abs());
            }
            s.l2[k] = (s2 * vol).sqrt();
            s.l4[k] = (s4 * vol).powf(0.25);
            s.l6[k] = (s6 * vol).powf(1.0 / 6.0);
            s.linf[k] = mx;
            s.h1[k] = (gradient_square_sum(&dom, vals) * vol).sqrt();
        }
        s
    }

    /// `||u||^2 + ||v||^2 + ||w||^2`.
    pub fn norm_sq(&self) -> f64 {
        self.l2.iter().map(|x| x * x).sum()
    }

    /// `||(u, v, w)||_{L^4}`.
    pub fn triple_l4(&self) -> f64 {
        self.l4.iter().map(|x| x.powi(4)).sum::<f64>().powf(0.25)
    }

    /// `||(u, v, w)||_{L^6}`.
    pub fn triple_l6(&self) -> f64 {
        self.l6.iter().map(|x| x.powi(6)).sum::<f64>().powf(1.0 / 6.0)
    }

    /// `||grad (u, v, w)||_{L^2}`.
    pub fn triple_h1(&self) -> f64 {
        self.h1.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn triple_linf(&self) -> f64 {
        self.linf.iter().copied().fold(0.0, f64::max)
    }

    pub fn csv_row(&self) -> String {
        let mut row = format!("{}", self.t);
        for block in [&self.l2, &self.l4, &self.l6, &self.h1, &self.linf] {
            for x in block {
                row.push_str(&format!(",{x}"));
            }
        }
        row.push_str(&format!(
            ",{},{},{},{}",
            self.weighted, self.envelope, self.gamma, self.gamma_residual
        ));
        row
    }
}

/// Growth diagnostics of a scalar series over the second half of its time
/// span.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailTrend {
    /// Least-squares slope over `t >= t_mid`.
    pub slope: f64,
    pub head_max: f64,
    pub tail_max: f64,
}

/// Fits a line to the samples with `t >= (t_first + t_last) / 2`.
pub fn tail_trend(series: &[(f64, f64)]) -> Option<TailTrend> {
    let (first, last) = (series.first()?.0, series.last()?.0);
    let mid = 0.5 * (first + last);
    type Series = Vec<(f64, f64)>;
    let (head, tail): (Series, Series) = series.iter().partition(|(t, _)| *t < mid);
    if tail.len() < 2 {
        return None;
    }
    let n = tail.len() as f64;
    let mt = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let mv = tail.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = tail.iter().map(|(t, v)| (t - mt) * (v - mv)).sum();
    let sxx: f64 = tail.iter().map(|(t, _)| (t - mt) * (t - mt)).sum();
    let max = |v: &[(f64, f64)]| v.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    Some(TailTrend {
        slope: sxy / sxx,
        head_max: max(&head),
        tail_max: max(&tail),
    })
}
