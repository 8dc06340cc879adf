use crate::error::Result;
use crate::grid::{lp_of_slice, shift_field, Domain, Field};

/// `(int |f(x + y) - f(x)|^p dx)^{1/p}` with `f` extended by zero outside the
/// box; `y` is snapped to whole cells.
pub fn translation_modulus(dom: &Domain, f: &Field, y: &[f64], p: f64) -> Result<f64> {
    let shifted = shift_field(dom, f, y)?;
    let diff: Vec<f64> = shifted
        .field
        .values()
        .iter()
        .zip(f.values())
        .map(|(a, b)| a - b)
        .collect();
    lp_of_slice(dom, &diff, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use proptest::prelude::*;

    #[test]
    fn analytic_cases() {
        let d = make_grid(1, &[1.0], &[64]).unwrap();
        let one = Field::constant(&d, 1.0);
        assert!((translation_modulus(&d, &one, &[0.25], 2.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((translation_modulus(&d, &one, &[-0.25], 1.0).unwrap() - 0.25).abs() < 1e-12);
        assert_eq!(translation_modulus(&d, &Field::zeros(&d), &[0.25], 2.0).unwrap(), 0.0);
        let f = Field::from_fn(&d, |x| x[0].sin());
        assert_eq!(translation_modulus(&d, &f, &[0.0], 2.0).unwrap(), 0.0);
        assert!(translation_modulus(&d, &f, &[0.1], 0.5).is_err());
    }

    #[test]
    fn decays_along_dyadic_offsets() {
        let d = make_grid(2, &[1.0, 1.0], &[64, 64]).unwrap();
        let f = Field::from_fn(&d, |x| (3.0 * x[0]).cos() * (1.0 + x[1] * x[1]));
        let mut last = f64::INFINITY;
        for k in 0..6 {
            let y = 0.5f64.powi(k + 1);
            let m = translation_modulus(&d, &f, &[y, y], 2.0).unwrap();
            assert!(m < last, "k = {k}: {m} >= {last}");
            last = m;
        }
    }

    proptest! {
        #[test]
        fn nonnegative_and_symmetric_for_constants(c in -5.0..5.0f64, k in -10i32..10) {
            let d = make_grid(1, &[2.0], &[20]).unwrap();
            let f = Field::constant(&d, c);
            let y = k as f64 * 0.1;
            let fwd = translation_modulus(&d, &f, &[y], 2.0).unwrap();
            let back = translation_modulus(&d, &f, &[-y], 2.0).unwrap();
            prop_assert!(fwd >= 0.0);
            prop_assert!((fwd - back).abs() <= 1e-12 * fwd.max(1.0));
        }
    }
}
