//! Bessel functions of the first kind by Miller's downward recurrence.
//!
//! Always evaluated in f64; callers convert to their working precision.

use crate::error::{Error, Result};

const RESCALE_LIMIT: f64 = 1e250;

/// Returns `J_0(x) .. J_K(x)` with `K` chosen so the dropped tail of
/// Chebyshev coefficients `2 J_k` stays below `tol`: the table ends at
/// the first run of three consecutive orders beyond `x` whose
/// magnitudes are all below `tol / 2`.
pub fn jn_table(x: f64, tol: f64) -> Result<Vec<f64>> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("bessel table needs x > 0, got {x}")));
    }
    if x < 1e-6 {
        return Ok(small_argument(x, tol));
    }

    let k_query = (x + 14.0 * (x + 1.0).cbrt() + 44.0).ceil() as usize;
    let start = k_query + (40.0 * k_query as f64).sqrt().ceil() as usize + 20;

    let mut b = vec![0.0f64; start + 2];
    b[start + 1] = 0.0;
    b[start] = 1e-280;
    for j in (1..=start).rev() {
        b[j - 1] = (2.0 * j as f64 / x) * b[j] - b[j + 1];
        if b[j - 1].abs() > RESCALE_LIMIT {
            for v in b[j - 1..].iter_mut() {
                *v *= 1.0 / RESCALE_LIMIT;
            }
        }
    }
    let mut norm = b[0];
    let mut j = 2;
    while j <= start {
        norm += 2.0 * b[j];
        j += 2;
    }
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::domain(format!(
            "bessel normalization failed at x = {x}"
        )));
    }
    for v in b.iter_mut() {
        *v /= norm;
    }

    let keep = tol / 2.0;
    let min_k = x.ceil() as usize;
    let mut run = 0;
    for (k, &v) in b.iter().enumerate().take(k_query + 1) {
        if k >= min_k && v.abs() < keep {
            run += 1;
            if run == 3 {
                b.truncate(k + 1);
                return Ok(b);
            }
        } else {
            run = 0;
        }
    }
    Err(Error::domain(format!(
        "bessel series did not converge below {tol} by order {k_query} at x = {x}"
    )))
}

/// Leading series terms for tiny arguments, where the recurrence
/// starting point degenerates.
fn small_argument(x: f64, tol: f64) -> Vec<f64> {
    let mut out = vec![1.0 - x * x / 4.0];
    let mut term = x / 2.0;
    let mut k = 1.0;
    while term.abs() >= tol / 2.0 {
        out.push(term);
        k += 1.0;
        term *= x / (2.0 * k);
    }
    // Trailing sub-threshold orders so the truncation run exists.
    out.push(term);
    out
}
