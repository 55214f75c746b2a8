//! Localization and percolation observables.

use crate::error::{Error, Result};
use crate::lattice::{Lattice, Site};
use crate::scalar::{lit, Scalar};
use num_complex::Complex;
use num_traits::Float;

/// Site intensities `|psi|^2` of a state.
pub fn intensities<T: Scalar>(psi: &[Complex<T>]) -> Vec<T> {
    psi.iter().map(|a| a.re * a.re + a.im * a.im).collect()
}

/// Inverse participation ratio of an intensity distribution,
/// `sum I^2 / (sum I)^2`.
///
/// Lies in `[1/N, 1]`; the lower bound is attained by a uniform
/// distribution, the upper by a single occupied site.
pub fn ipr<T: Scalar>(intensity: &[T]) -> Result<T> {
    if intensity.is_empty() {
        return Err(Error::Degenerate("ipr of an empty distribution".into()));
    }
    let mut total = T::zero();
    let mut sq = T::zero();
    for &v in intensity {
        if v < T::zero() {
            return Err(Error::domain("negative intensity"));
        }
        total += v;
        sq += v * v;
    }
    if !(total > T::zero()) {
        return Err(Error::Degenerate("ipr of an all-zero distribution".into()));
    }
    Ok(sq / (total * total))
}

/// Effective wavepacket width `IPR^(-1/2)` in site counts.
pub fn effective_width<T: Scalar>(ipr: T) -> Result<T> {
    if !(ipr > T::zero()) {
        return Err(Error::domain("effective width needs ipr > 0"));
    }
    Ok(Float::powf(ipr, lit::<T>(-0.5)))
}

/// Fraction of intensity outside the square bound centered on the
/// injection site.
///
/// The bound covers index positions `injection - half ..= injection + half - 1`
/// on both axes, a `2 half x 2 half` block, so with the default
/// `half = 8` exactly 16x16 positions count as inside. `sites[i]` is
/// the grid site carrying `intensity[i]`.
pub fn bound_fraction<T: Scalar>(
    lattice: &Lattice<T>,
    sites: &[Site],
    intensity: &[T],
    half: usize,
) -> Result<T> {
    if sites.len() != intensity.len() {
        return Err(Error::validation(format!(
            "{} sites against {} intensities",
            sites.len(),
            intensity.len()
        )));
    }
    let spec = lattice.spec();
    if 2 * half > spec.rows.min(spec.cols) {
        return Err(Error::domain(format!(
            "bound of side {} exceeds the {}x{} lattice",
            2 * half,
            spec.rows,
            spec.cols
        )));
    }
    let inj = lattice.injection();
    let h = half as isize;
    let mut total = T::zero();
    let mut outside = T::zero();
    for (s, &v) in sites.iter().zip(intensity) {
        let dr = s.row as isize - inj.row as isize;
        let dc = s.col as isize - inj.col as isize;
        total += v;
        if dr < -h || dr >= h || dc < -h || dc >= h {
            outside += v;
        }
    }
    if !(total > T::zero()) {
        return Err(Error::Degenerate("bound fraction of zero intensity".into()));
    }
    Ok(outside / total)
}

/// Percolation event: at least `threshold` of the intensity escaped the
/// bound. The comparison is inclusive.
pub fn percolation_event<T: Scalar>(bound_fraction: T, threshold: T) -> bool {
    bound_fraction >= threshold
}

/// Power-law fit `y = exp(intercept) * x^exponent` over a data window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit<T: Scalar> {
    pub exponent: T,
    pub intercept: T,
    /// Root-mean-square residual in log space.
    pub residual: T,
}

/// Least-squares fit of `ln y` against `ln x` restricted to
/// `lo <= x <= hi`.
pub fn fit_power_law<T: Scalar>(xs: &[T], ys: &[T], lo: T, hi: T) -> Result<PowerLawFit<T>> {
    if xs.len() != ys.len() {
        return Err(Error::validation("x and y lengths differ"));
    }
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for (&x, &y) in xs.iter().zip(ys) {
        if x < lo || x > hi {
            continue;
        }
        if !(x > T::zero()) || !(y > T::zero()) {
            return Err(Error::domain("power-law fit needs positive data"));
        }
        lx.push(Float::ln(x));
        ly.push(Float::ln(y));
    }
    let n = lx.len();
    if n < 3 {
        return Err(Error::domain(format!(
            "power-law fit needs at least 3 points in the window, found {n}"
        )));
    }
    let nt = lit::<T>(n as f64);
    let mx = lx.iter().copied().sum::<T>() / nt;
    let my = ly.iter().copied().sum::<T>() / nt;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for (&x, &y) in lx.iter().zip(&ly) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if !(sxx > T::zero()) {
        return Err(Error::Degenerate("all x in the fit window coincide".into()));
    }
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let mut ss = T::zero();
    for (&x, &y) in lx.iter().zip(&ly) {
        let r = y - (intercept + exponent * x);
        ss += r * r;
    }
    Ok(PowerLawFit {
        exponent,
        intercept,
        residual: Float::sqrt(ss / nt),
    })
}

/// Sample mean and standard deviation (n - 1 denominator).
pub fn mean_std<T: Scalar>(xs: &[T]) -> Result<(T, T)> {
    if xs.len() < 2 {
        return Err(Error::Degenerate(
            "standard deviation needs at least 2 samples".into(),
        ));
    }
    let n = lit::<T>(xs.len() as f64);
    let mean = xs.iter().copied().sum::<T>() / n;
    let mut ss = T::zero();
    for &x in xs {
        ss += (x - mean) * (x - mean);
    }
    let var = ss / (n - T::one());
    Ok((mean, Float::sqrt(var)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeSpec;
    use approx::assert_relative_eq;

    #[test]
    fn ipr_bounds_attained() {
        let delta = [0.0, 1.0, 0.0, 0.0];
        assert_relative_eq!(ipr(&delta).unwrap(), 1.0);
        let uniform = [0.25; 8];
        assert_relative_eq!(ipr(&uniform).unwrap(), 0.125);
        assert_relative_eq!(effective_width(0.125f64).unwrap(), 8f64.sqrt());
    }

    #[test]
    fn ipr_is_scale_invariant() {
        let a = [0.3, 0.1, 0.4, 0.2];
        let b: Vec<f64> = a.iter().map(|v| v * 7.5).collect();
        assert_relative_eq!(ipr(&a).unwrap(), ipr(&b).unwrap(), epsilon = 1e-15);
    }

    #[test]
    fn ipr_degenerate_inputs() {
        assert!(matches!(ipr::<f64>(&[]), Err(Error::Degenerate(_))));
        assert!(matches!(ipr(&[0.0, 0.0]), Err(Error::Degenerate(_))));
        assert!(ipr(&[0.2, -0.1]).is_err());
        assert!(effective_width(0.0f64).is_err());
    }

    #[test]
    fn uniform_bound_fraction_on_paper_geometry() {
        let lat = Lattice::generate(LatticeSpec::new(40, 40, 15.0), 1.0, 0).unwrap();
        let sites: Vec<Site> = lat.occupied_sites().collect();
        let intensity = vec![1.0 / 1600.0; sites.len()];
        let f = bound_fraction(&lat, &sites, &intensity, 8).unwrap();
        assert_relative_eq!(f, 0.84, epsilon = 1e-12);
    }

    #[test]
    fn delta_at_injection_never_escapes() {
        let lat = Lattice::generate(LatticeSpec::new(40, 40, 15.0), 1.0, 0).unwrap();
        let sites: Vec<Site> = lat.occupied_sites().collect();
        let inj = lat.injection();
        let intensity: Vec<f64> = sites
            .iter()
            .map(|&s| if s == inj { 1.0 } else { 0.0 })
            .collect();
        let f = bound_fraction(&lat, &sites, &intensity, 8).unwrap();
        assert_eq!(f, 0.0);
        let corner: Vec<f64> = sites
            .iter()
            .map(|&s| if s == Site::new(0, 0) { 1.0 } else { 0.0 })
            .collect();
        assert_eq!(bound_fraction(&lat, &sites, &corner, 8).unwrap(), 1.0);
    }

    #[test]
    fn bound_shrinks_with_larger_half_width() {
        let spec = LatticeSpec::new(30, 30, 15.0);
        let lat =
            Lattice::from_occupied(spec, 1.0, 0, Site::new(15, 15), vec![true; 900]).unwrap();
        let sites: Vec<Site> = lat.occupied_sites().collect();
        let intensity = vec![1.0; sites.len()];
        let mut prev = 2.0;
        for half in [1, 3, 6, 10, 15] {
            let f = bound_fraction(&lat, &sites, &intensity, half).unwrap();
            assert!(f <= prev);
            prev = f;
        }
        assert_eq!(prev, 0.0);
    }

    #[test]
    fn oversized_bound_is_rejected() {
        let lat = Lattice::generate(LatticeSpec::new(16, 20, 15.0), 1.0, 0).unwrap();
        let sites: Vec<Site> = lat.occupied_sites().collect();
        let intensity = vec![1.0; sites.len()];
        assert!(matches!(
            bound_fraction(&lat, &sites, &intensity, 9),
            Err(Error::Domain(_))
        ));
        assert!(bound_fraction(&lat, &sites, &intensity, 8).is_ok());
    }

    #[test]
    fn event_threshold_is_inclusive() {
        assert!(percolation_event(0.10f64, 0.10));
        assert!(!percolation_event(0.0999f64, 0.10));
        assert!(percolation_event(0.5f64, 0.10));
    }

    #[test]
    fn exact_power_law_recovered() {
        let xs: Vec<f64> = (1..=30).map(|k| k as f64 * 0.7).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(0.5)).collect();
        let fit = fit_power_law(&xs, &ys, 2.0, 15.0).unwrap();
        assert_relative_eq!(fit.exponent, 0.5, epsilon = 1e-12);
        assert_relative_eq!(fit.intercept, 3f64.ln(), epsilon = 1e-12);
        assert!(fit.residual < 1e-13);
    }

    #[test]
    fn window_filters_points() {
        let xs = [1.0, 2.0, 3.0, 100.0];
        let ys = [1.0, 4.0, 9.0, 1.0];
        let fit = fit_power_law(&xs, &ys, 0.5, 10.0).unwrap();
        assert_relative_eq!(fit.exponent, 2.0, epsilon = 1e-12);
        assert!(fit_power_law(&xs, &ys, 2.5, 10.0).is_err());
        assert!(fit_power_law(&xs, &[1.0, -4.0, 9.0, 1.0], 0.5, 10.0).is_err());
    }

    #[test]
    fn mean_std_reference() {
        let (m, s) = mean_std(&[1.0f64, 2.0, 3.0, 4.0]).unwrap();
        assert_relative_eq!(m, 2.5);
        assert_relative_eq!(s, (5.0f64 / 3.0).sqrt(), epsilon = 1e-14);
        assert!(mean_std(&[1.0f64]).is_err());
    }
}
