//! Classical fluid flow through the occupied lattice.
//!
//! The classical analogue replaces coherent propagation with a flow
//! front: fluid injected at the injection site advances one occupied
//! nearest-neighbor bond per time step. There is no tunneling, so a
//! vacancy blocks a pipe completely. The distribution over the `N(t)`
//! reached sites is taken uniform, giving `IPR = 1/N` and an effective
//! width `sqrt(N)`.

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::scalar::{lit, Scalar};
use nalgebra::{Matrix3, Vector3};
use num_traits::Float;

/// Ball sizes of the flow front, `sizes[t]` after `t` steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrontTrace {
    pub sizes: Vec<usize>,
}

impl FrontTrace {
    pub fn final_size(&self) -> usize {
        *self.sizes.last().expect("trace never empty")
    }
}

/// Advances the flow front `t_max` steps from the injection site.
pub fn flow_front<T: Scalar>(lattice: &Lattice<T>, t_max: usize) -> Result<FrontTrace> {
    let spec = lattice.spec();
    let inj = lattice.injection();
    if !lattice.is_occupied(inj) {
        return Err(Error::domain("injection site is vacant"));
    }
    let mut reached = vec![false; spec.n_sites()];
    reached[spec.linear_index(inj)] = true;
    let mut frontier = vec![inj];
    let mut sizes = Vec::with_capacity(t_max + 1);
    let mut count = 1usize;
    sizes.push(count);
    let mut next = Vec::new();
    for _ in 0..t_max {
        next.clear();
        for &s in &frontier {
            for nb in spec.nn_sites(s) {
                let j = spec.linear_index(nb);
                if !reached[j] && lattice.occupied()[j] {
                    reached[j] = true;
                    next.push(nb);
                }
            }
        }
        count += next.len();
        sizes.push(count);
        std::mem::swap(&mut frontier, &mut next);
    }
    Ok(FrontTrace { sizes })
}

/// Marks the whole connected cluster of the injection site.
///
/// Breadth-first exhaustion over occupied nearest-neighbor bonds, the
/// `t -> infinity` limit of [`flow_front`].
pub fn flood_fill_cluster<T: Scalar>(lattice: &Lattice<T>) -> Result<Vec<bool>> {
    let spec = lattice.spec();
    let inj = lattice.injection();
    if !lattice.is_occupied(inj) {
        return Err(Error::domain("injection site is vacant"));
    }
    let mut marked = vec![false; spec.n_sites()];
    marked[spec.linear_index(inj)] = true;
    let mut stack = vec![inj];
    while let Some(s) = stack.pop() {
        for nb in spec.nn_sites(s) {
            let j = spec.linear_index(nb);
            if !marked[j] && lattice.occupied()[j] {
                marked[j] = true;
                stack.push(nb);
            }
        }
    }
    Ok(marked)
}

/// Knee locator options, see [`knee_estimate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KneeOptions<T: Scalar> {
    /// Points this far above the base (as a fraction of the full drop)
    /// belong to the descending branch.
    pub descend_fraction: T,
    /// Width of the acceptance band around the base in tail standard
    /// deviations.
    pub band_sigmas: T,
    /// Resolution of the crossing scan.
    pub grid_step: T,
}

impl<T: Scalar> Default for KneeOptions<T> {
    fn default() -> Self {
        KneeOptions {
            descend_fraction: lit::<T>(0.15),
            band_sigmas: lit::<T>(3.0),
            grid_step: lit::<T>(0.01),
        }
    }
}

/// Estimates the probability where a decreasing curve flattens onto its
/// base level.
///
/// The base is the mean of the smallest quarter of the curve values.
/// Points standing clearly proud of the base form the descending
/// branch; a quadratic fitted to that branch is scanned forward until
/// it enters the base band, and that probability is the knee. If the
/// parabola never enters the band its vertex is used, clamped to the
/// grid.
pub fn knee_estimate<T: Scalar>(ps: &[T], curve: &[T], opts: &KneeOptions<T>) -> Result<T> {
    let n = ps.len();
    if n != curve.len() {
        return Err(Error::validation("probability and curve lengths differ"));
    }
    if n < 5 {
        return Err(Error::validation(format!(
            "knee estimate needs at least 5 grid points, got {n}"
        )));
    }
    for w in ps.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::validation("probability grid must be increasing"));
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| curve[a].partial_cmp(&curve[b]).expect("finite curve"));
    let ntail = (n / 4).max(2);
    let tail: Vec<T> = order[..ntail].iter().map(|&i| curve[i]).collect();
    let base = tail.iter().copied().sum::<T>() / lit::<T>(ntail as f64);
    let mut ss = T::zero();
    for &v in &tail {
        ss += (v - base) * (v - base);
    }
    let tail_std = Float::sqrt(ss / lit::<T>((ntail - 1) as f64));

    let peak = curve
        .iter()
        .copied()
        .fold(T::neg_infinity(), |a, b| if b > a { b } else { a });
    let drop = peak - base;
    if !(drop > T::zero()) {
        return Err(Error::domain("curve is flat, no knee exists"));
    }

    let steep: Vec<usize> = (0..n)
        .filter(|&i| curve[i] - base > opts.descend_fraction * drop)
        .collect();
    if steep.len() < 3 {
        return Err(Error::domain(
            "no descending branch above the base, no knee exists".to_string(),
        ));
    }

    let quad = fit_quadratic(
        &steep.iter().map(|&i| ps[i]).collect::<Vec<_>>(),
        &steep.iter().map(|&i| curve[i]).collect::<Vec<_>>(),
    )?;
    let band = base + opts.band_sigmas * tail_std;
    let start = ps[*steep.last().expect("nonempty")];
    let last = ps[n - 1];
    let eps = lit::<T>(1e-9);
    let mut k = 0usize;
    loop {
        let g = start + lit::<T>(k as f64) * opts.grid_step;
        if g > last + eps {
            break;
        }
        if quad.0 + quad.1 * g + quad.2 * g * g <= band {
            return Ok(if g > last { last } else { g });
        }
        k += 1;
    }
    if quad.2 > T::zero() {
        let vertex = -quad.1 / (lit::<T>(2.0) * quad.2);
        return Ok(if vertex > last { last } else { vertex });
    }
    Err(Error::domain(
        "descending branch never reaches the base level".to_string(),
    ))
}

/// Least-squares quadratic `c0 + c1 x + c2 x^2`.
fn fit_quadratic<T: Scalar>(xs: &[T], ys: &[T]) -> Result<(T, T, T)> {
    let mut s = [T::zero(); 5];
    let mut b = [T::zero(); 3];
    for (&x, &y) in xs.iter().zip(ys) {
        let mut xp = T::one();
        for sk in s.iter_mut() {
            *sk += xp;
            xp *= x;
        }
        b[0] += y;
        b[1] += y * x;
        b[2] += y * x * x;
    }
    let m = Matrix3::new(s[0], s[1], s[2], s[1], s[2], s[3], s[2], s[3], s[4]);
    let rhs = Vector3::new(b[0], b[1], b[2]);
    let sol = m
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Degenerate("quadratic fit is singular".into()))?;
    Ok((sol[0], sol[1], sol[2]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{LatticeSpec, Site};
    use crate::unionfind::UnionFind;

    fn full(rows: usize, cols: usize) -> Lattice<f64> {
        Lattice::generate(LatticeSpec::new(rows, cols, 15.0), 1.0, 0).unwrap()
    }

    #[test]
    fn bulk_ball_growth_is_honeycomb() {
        let lat = full(20, 20);
        let trace = flow_front(&lat, 4).unwrap();
        // 1 + 1.5 t (t + 1) sites after t unobstructed steps
        assert_eq!(trace.sizes, vec![1, 4, 10, 19, 31]);
    }

    #[test]
    fn front_saturates_at_cluster_size() {
        let lat = Lattice::generate(LatticeSpec::new(10, 10, 15.0), 0.6, 17).unwrap();
        let trace = flow_front(&lat, 60).unwrap();
        for w in trace.sizes.windows(2) {
            assert!(w[1] >= w[0]);
        }
        let cluster = flood_fill_cluster(&lat).unwrap();
        let csize = cluster.iter().filter(|&&m| m).count();
        assert_eq!(trace.final_size(), csize);
    }

    #[test]
    fn vacancy_blocks_the_pipe() {
        let spec = LatticeSpec::new(3, 5, 15.0);
        let mut mask = vec![false; 15];
        for c in 0..5 {
            mask[5 + c] = true;
        }
        mask[5 + 3] = false;
        let lat = Lattice::from_occupied(spec, 0.3, 0, Site::new(1, 1), mask).unwrap();
        let trace = flow_front(&lat, 10).unwrap();
        assert_eq!(trace.final_size(), 3);
        let cluster = flood_fill_cluster(&lat).unwrap();
        assert!(!cluster[spec.linear_index(Site::new(1, 4))]);
    }

    #[test]
    fn vacant_injection_is_an_error() {
        let spec = LatticeSpec::new(4, 4, 15.0);
        let lat =
            Lattice::from_occupied(spec, 0.0, 0, Site::new(1, 1), vec![false; 16]).unwrap();
        assert!(flow_front(&lat, 3).is_err());
        assert!(flood_fill_cluster(&lat).is_err());
    }

    #[test]
    fn flood_fill_agrees_with_union_find() {
        for seed in 0..50 {
            let lat = Lattice::generate(LatticeSpec::new(6, 6, 15.0), 0.55, seed).unwrap();
            let spec = lat.spec();
            let cluster = flood_fill_cluster(&lat).unwrap();
            let mut uf = UnionFind::new(spec.n_sites());
            for i in 0..spec.n_sites() {
                if !lat.occupied()[i] {
                    continue;
                }
                for nb in spec.nn_sites(spec.site_at(i)) {
                    let j = spec.linear_index(nb);
                    if lat.occupied()[j] {
                        uf.union(i, j);
                    }
                }
            }
            let inj = spec.linear_index(lat.injection());
            for (i, &in_cluster) in cluster.iter().enumerate() {
                let same = lat.occupied()[i] && uf.connected(i, inj);
                assert_eq!(in_cluster, same, "seed {seed} site {i}");
            }
        }
    }

    #[test]
    fn planted_knee_is_recovered() {
        let ps: Vec<f64> = (0..13).map(|k| 0.40 + 0.05 * k as f64).collect();
        let base = 0.012;
        let curve: Vec<f64> = ps
            .iter()
            .map(|&p| {
                if p < 0.63 {
                    base + 8.0 * (0.63 - p) * (0.63 - p)
                } else {
                    base
                }
            })
            .collect();
        let knee = knee_estimate(&ps, &curve, &KneeOptions::default()).unwrap();
        assert!((knee - 0.63).abs() <= 0.011, "knee {knee}");
    }

    #[test]
    fn flat_curve_has_no_knee() {
        let ps: Vec<f64> = (0..10).map(|k| 0.1 * k as f64 + 0.05).collect();
        let flat = vec![0.5; 10];
        assert!(matches!(
            knee_estimate(&ps, &flat, &KneeOptions::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn knee_input_validation() {
        let opts = KneeOptions::default();
        assert!(knee_estimate(&[0.1, 0.2], &[1.0, 0.5], &opts).is_err());
        assert!(knee_estimate(&[0.3, 0.2, 0.4, 0.5, 0.6], &[1.0; 5], &opts).is_err());
        assert!(knee_estimate(&[0.1, 0.2, 0.3], &[1.0, 0.5], &opts).is_err());
    }

    #[test]
    fn quadratic_fit_is_exact_on_quadratics() {
        let xs: Vec<f64> = (0..8).map(|k| 0.3 + 0.1 * k as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 3.0 * x + 1.5 * x * x).collect();
        let (c0, c1, c2) = fit_quadratic(&xs, &ys).unwrap();
        assert!((c0 - 2.0).abs() < 1e-10);
        assert!((c1 + 3.0).abs() < 1e-10);
        assert!((c2 - 1.5).abs() < 1e-10);
    }
}
