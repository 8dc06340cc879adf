//! Cell-centred discretisation of axis-aligned boxes in one to three
//! dimensions.
//!
//! Values are stored row-major (last axis fastest). The Laplacian uses mirror
//! ghost cells so the discrete normal derivative vanishes on every face, and
//! all integrals use the midpoint rule (cell value times cell volume).

mod snapshot;

pub use snapshot::{read_snapshot, read_snapshot_file, write_snapshot, write_snapshot_file, Snapshot};

use crate::error::{HrError, Result};

/// Rectangular domain `[0, L1] x ... x [0, Ln]` split into uniform cells.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    dim: usize,
    lengths: [f64; 3],
    counts: [usize; 3],
    spacing: [f64; 3],
}

impl Domain {
    pub fn new(dim: usize, lengths: &[f64], counts: &[usize]) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(HrError::InvalidDomain(format!("dim must be 1, 2 or 3, got {dim}")));
        }
        if lengths.len() != dim || counts.len() != dim {
            return Err(HrError::InvalidDomain(format!(
                "dim = {dim} but {} lengths and {} counts given",
                lengths.len(),
                counts.len()
            )));
        }
        let mut dom = Domain {
            dim,
            lengths: [1.0; 3],
            counts: [1; 3],
            spacing: [1.0; 3],
        };
        let mut total: usize = 1;
        for axis in 0..dim {
            let (l, n) = (lengths[axis], counts[axis]);
            if !(l.is_finite() && l > 0.0) {
                return Err(HrError::InvalidDomain(format!("extent along axis {axis} must be positive, got {l}")));
            }
            if n < 2 {
                return Err(HrError::InvalidDomain(format!("need at least 2 cells along axis {axis}, got {n}")));
            }
            total = total
                .checked_mul(n)
                .ok_or_else(|| HrError::InvalidDomain("total cell count overflows usize".into()))?;
            dom.lengths[axis] = l;
            dom.counts[axis] = n;
            dom.spacing[axis] = l / n as f64;
        }
        Ok(dom)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths[..self.dim]
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts[..self.dim]
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing[..self.dim]
    }

    pub fn volume(&self) -> f64 {
        self.lengths().iter().product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().iter().product()
    }

    pub fn num_cells(&self) -> usize {
        self.counts().iter().product()
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Shape padded to three axes, leading axes of length one.
    pub(crate) fn shape3(&self) -> [usize; 3] {
        let mut s = [1; 3];
        s[3 - self.dim..].copy_from_slice(self.counts());
        s
    }

    fn inv_h2_3(&self) -> [f64; 3] {
        let mut c = [0.0; 3];
        for (slot, h) in c[3 - self.dim..].iter_mut().zip(self.spacing()) {
            *slot = 1.0 / (h * h);
        }
        c
    }

    /// Cell-centre coordinates of a flat index.
    pub fn cell_center(&self, index: usize) -> Vec<f64> {
        let mut rem = index;
        let mut coords = vec![0.0; self.dim];
        for axis in (0..self.dim).rev() {
            let n = self.counts[axis];
            coords[axis] = (rem % n) as f64 * self.spacing[axis] + 0.5 * self.spacing[axis];
            rem /= n;
        }
        coords
    }
}

/// Convenience wrapper matching the usual `(dim, lengths, counts)` call.
pub fn make_grid(dim: usize, lengths: &[f64], counts: &[usize]) -> Result<Domain> {
    Domain::new(dim, lengths, counts)
}

/// One real value per cell of a [`Domain`].
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    dom: Domain,
    values: Vec<f64>,
}

impl Field {
    pub fn from_values(dom: &Domain, values: Vec<f64>) -> Result<Self> {
        if values.len() != dom.num_cells() {
            return Err(HrError::InvalidDomain(format!(
                "field has {} values but domain has {} cells",
                values.len(),
                dom.num_cells()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(HrError::InvalidParameter(format!("non-finite field value at cell {bad}")));
        }
        Ok(Field { dom: *dom, values })
    }

    pub(crate) fn from_values_unchecked(dom: &Domain, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), dom.num_cells());
        Field { dom: *dom, values }
    }

    pub fn constant(dom: &Domain, value: f64) -> Self {
        Field {
            dom: *dom,
            values: vec![value; dom.num_cells()],
        }
    }

    pub fn zeros(dom: &Domain) -> Self {
        Self::constant(dom, 0.0)
    }

    /// Samples `f` at every cell centre.
    pub fn from_fn(dom: &Domain, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let values = (0..dom.num_cells()).map(|i| f(&dom.cell_center(i))).collect();
        Field { dom: *dom, values }
    }

    pub fn domain(&self) -> &Domain {
        &self.dom
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check_domain(&self, dom: &Domain) -> Result<()> {
        if &self.dom == dom {
            Ok(())
        } else {
            Err(HrError::DomainMismatch)
        }
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field {
            dom: self.dom,
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// Cell-volume weighted inner product.
    pub fn dot(&self, other: &Field) -> Result<f64> {
        other.check_domain(&self.dom)?;
        Ok(dot(&self.values, &other.values) * self.dom.cell_volume())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest minus smallest value.
    pub fn spread(&self) -> f64 {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        hi - lo
    }
}

/// Four interleaved partial sums: a fixed summation order that does not
/// serialise on add latency.
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Writes the mirror-ghost Laplacian of `src` into `dst`.
///
/// Every face contributes `(neighbour - self) / h^2`, so boundary faces with a
/// mirrored ghost contribute nothing.
pub(crate) fn apply_laplacian(dom: &Domain, src: &[f64], dst: &mut [f64]) {
    laplacian_rows(dom, src, dst, |_, _| {});
}

/// `dst = src - kappa Lap src`; returns `<src, dst>` (unweighted).
pub(crate) fn apply_helmholtz_dot(dom: &Domain, kappa: f64, src: &[f64], dst: &mut [f64]) -> f64 {
    let mut acc = 0.0;
    laplacian_rows(dom, src, dst, |row, out| {
        for (o, &x) in out.iter_mut().zip(row) {
            *o = x - kappa * *o;
        }
        acc += dot(row, out);
    });
    acc
}

/// Computes the Laplacian one grid row (last axis) at a time and hands each
/// finished `(src_row, dst_row)` to `finish` while it is still in cache.
#[inline]
fn laplacian_rows(dom: &Domain, src: &[f64], dst: &mut [f64], mut finish: impl FnMut(&[f64], &mut [f64])) {
    let [n0, n1, n2] = dom.shape3();
    let [c0, c1, c2] = dom.inv_h2_3();
    let plane = n1 * n2;
    for i in 0..n0 {
        for j in 0..n1 {
            let base = i * plane + j * n2;
            let row = &src[base..base + n2];
            let out = &mut dst[base..base + n2];
            if n2 == 1 {
                out[0] = 0.0;
            } else {
                out[0] = (row[1] - row[0]) * c2;
                let inner = out[1..n2 - 1].iter_mut().zip(&row[2..]).zip(&row[1..n2 - 1]).zip(&row[..n2 - 2]);
                for (((o, &right), &mid), &left) in inner {
                    *o = ((right - mid) + (left - mid)) * c2;
                }
                out[n2 - 1] = (row[n2 - 2] - row[n2 - 1]) * c2;
            }
            if j > 0 {
                add_face(out, row, &src[base - n2..base], c1);
            }
            if j + 1 < n1 {
                add_face(out, row, &src[base + n2..base + 2 * n2], c1);
            }
            if i > 0 {
                add_face(out, row, &src[base - plane..base - plane + n2], c0);
            }
            if i + 1 < n0 {
                add_face(out, row, &src[base + plane..base + plane + n2], c0);
            }
            finish(row, out);
        }
    }
}

#[inline]
fn add_face(out: &mut [f64], row: &[f64], nb: &[f64], c: f64) {
    for ((o, &s), &n) in out.iter_mut().zip(row).zip(nb) {
        *o += (n - s) * c;
    }
}

/// Diagonal of the (negated) Laplacian: number of interior faces per axis
/// weighted by `1 / h^2`.
pub(crate) fn laplacian_diagonal(dom: &Domain) -> Vec<f64> {
    let shape = dom.shape3();
    let inv = dom.inv_h2_3();
    let mut diag = Vec::with_capacity(dom.num_cells());
    for i in 0..shape[0] {
        for j in 0..shape[1] {
            for k in 0..shape[2] {
                let idx = [i, j, k];
                let mut d = 0.0;
                for axis in 0..3 {
                    let n = shape[axis];
                    if n > 1 {
                        let faces = if idx[axis] == 0 || idx[axis] == n - 1 { 1.0 } else { 2.0 };
                        d += faces * inv[axis];
                    }
                }
                diag.push(d);
            }
        }
    }
    diag
}

/// `sum over interior faces of ((f_a - f_b) / h)^2`, without the cell volume.
pub(crate) fn gradient_square_sum(dom: &Domain, src: &[f64]) -> f64 {
    let [n0, n1, n2] = dom.shape3();
    let [c0, c1, c2] = dom.inv_h2_3();
    let plane = n1 * n2;
    let mut acc = 0.0;
    for i in 0..n0 {
        for j in 0..n1 {
            let base = i * plane + j * n2;
            let row = &src[base..base + n2];
            let mut s2 = 0.0;
            for w in row.windows(2) {
                let d = w[1] - w[0];
                s2 += d * d;
            }
            acc += s2 * c2;
            if j + 1 < n1 {
                acc += face_sq(row, &src[base + n2..base + 2 * n2]) * c1;
            }
            if i + 1 < n0 {
                acc += face_sq(row, &src[base + plane..base + plane + n2]) * c0;
            }
        }
    }
    acc
}

#[inline]
fn face_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (y - x) * (y - x)).sum()
}

pub fn laplacian_neumann(dom: &Domain, f: &Field) -> Result<Field> {
    f.check_domain(dom)?;
    let mut out = vec![0.0; dom.num_cells()];
    apply_laplacian(dom, &f.values, &mut out);
    Ok(Field::from_values_unchecked(dom, out))
}

/// Midpoint-rule `L^p` norm; `p = f64::INFINITY` gives the max norm.
pub fn norm_lp(dom: &Domain, f: &Field, p: f64) -> Result<f64> {
    f.check_domain(dom)?;
    lp_of_slice(dom, &f.values, p)
}

pub(crate) fn lp_of_slice(dom: &Domain, values: &[f64], p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(HrError::InvalidExponent(p));
    }
    if p == f64::INFINITY {
        return Ok(values.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    let vol = dom.cell_volume();
    let sum: f64 = if p == 2.0 {
        values.iter().map(|v| v * v).sum()
    } else {
        values.iter().map(|v| v.abs().powf(p)).sum()
    };
    Ok((sum * vol).powf(1.0 / p))
}

/// `||grad f||_{L^2}` from face differences; boundary faces carry zero flux.
pub fn h1_seminorm(dom: &Domain, f: &Field) -> Result<f64> {
    f.check_domain(dom)?;
    Ok((gradient_square_sum(dom, &f.values) * dom.cell_volume()).sqrt())
}

pub fn mean(dom: &Domain, f: &Field) -> Result<f64> {
    f.check_domain(dom)?;
    Ok(f.values.iter().sum::<f64>() / dom.num_cells() as f64)
}

/// Result of [`shift_field`]: the shifted field and the offset actually applied
/// after snapping to whole cells.
#[derive(Clone, Debug, PartialEq)]
pub struct Shifted {
    pub field: Field,
    pub offset: Vec<f64>,
    pub cells: Vec<isize>,
}

/// Returns `x -> f(x + y)` with `f` extended by zero outside the box. Each
/// component of `y` is rounded to the nearest multiple of the spacing.
pub fn shift_field(dom: &Domain, f: &Field, y: &[f64]) -> Result<Shifted> {
    f.check_domain(dom)?;
    if y.len() != dom.dim() {
        return Err(HrError::InvalidDomain(format!(
            "offset has {} components, domain has dim {}",
            y.len(),
            dom.dim()
        )));
    }
    let mut cells = Vec::with_capacity(dom.dim());
    for (yi, h) in y.iter().zip(dom.spacing()) {
        if !yi.is_finite() {
            return Err(HrError::InvalidParameter(format!("offset component {yi} is not finite")));
        }
        let k = (yi / h).round();
        let bound = 1e12;
        cells.push(k.clamp(-bound, bound) as isize);
    }
    let offset: Vec<f64> = cells.iter().zip(dom.spacing()).map(|(&k, h)| k as f64 * h).collect();

    let shape = dom.shape3();
    let mut k3 = [0isize; 3];
    k3[3 - dom.dim()..].copy_from_slice(&cells);
    let mut out = vec![0.0; dom.num_cells()];
    let (n1, n2) = (shape[1], shape[2]);
    for i in 0..shape[0] {
        let si = i as isize + k3[0];
        if si < 0 || si >= shape[0] as isize {
            continue;
        }
        for j in 0..n1 {
            let sj = j as isize + k3[1];
            if sj < 0 || sj >= n1 as isize {
                continue;
            }
            for k in 0..n2 {
                let sk = k as isize + k3[2];
                if sk < 0 || sk >= n2 as isize {
                    continue;
                }
                out[(i * n1 + j) * n2 + k] = f.values[(si as usize * n1 + sj as usize) * n2 + sk as usize];
            }
        }
    }
    Ok(Shifted {
        field: Field::from_values_unchecked(dom, out),
        offset,
        cells,
    })
}
