//! Wavepacket propagation under the coupling Hamiltonian.
//!
//! Two engines compute `psi(z) = exp(-i H z) psi(0)`:
//!
//! * a dense eigendecomposition, exact up to LAPACK rounding, used as
//!   the reference and the default for small problems;
//! * a Chebyshev polynomial expansion of the propagator with Bessel
//!   function coefficients, which only needs sparse matrix-vector
//!   products and scales to ensemble work.

use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::scalar::{lit, Scalar};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use num_traits::Float;
use serde::{Deserialize, Serialize};

mod bessel;

/// Propagation engine selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Dense up to [`PropagatorOptions::dense_dim_cap`], Chebyshev above.
    #[default]
    Auto,
    Dense,
    Chebyshev,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorOptions<T: Scalar> {
    pub method: Method,
    /// Truncation threshold for Chebyshev coefficients.
    pub tol: T,
    /// Largest dimension the dense engine accepts.
    pub dense_dim_cap: usize,
}

impl<T: Scalar> Default for PropagatorOptions<T> {
    fn default() -> Self {
        PropagatorOptions {
            method: Method::Auto,
            tol: lit::<T>(1e-12),
            dense_dim_cap: 2000,
        }
    }
}

/// Wavefunction amplitude vector over the dense site ordering.
pub type State<T> = Vec<Complex<T>>;

/// Delta excitation of a single dense index.
pub fn delta_state<T: Scalar>(dim: usize, index: usize) -> State<T> {
    let mut psi = vec![Complex::new(T::zero(), T::zero()); dim];
    psi[index] = Complex::new(T::one(), T::zero());
    psi
}

/// Squared-norm of a state.
pub fn norm_sq<T: Scalar>(psi: &[Complex<T>]) -> T {
    psi.iter()
        .map(|a| a.re * a.re + a.im * a.im)
        .fold(T::zero(), |s, v| s + v)
}

/// Eigendecomposition-backed exact propagator.
pub struct DenseEngine<T: Scalar> {
    eigenvalues: DVector<T>,
    eigenvectors: DMatrix<T>,
}

impl<T: Scalar> DenseEngine<T> {
    pub fn new(h: &Hamiltonian<T>) -> Self {
        let eig = h.to_dense().symmetric_eigen();
        DenseEngine {
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Applies `exp(-i H z)` to a state.
    pub fn evolve(&self, psi0: &[Complex<T>], z: T) -> State<T> {
        let re = DVector::from_iterator(psi0.len(), psi0.iter().map(|a| a.re));
        let im = DVector::from_iterator(psi0.len(), psi0.iter().map(|a| a.im));
        let c_re = self.eigenvectors.tr_mul(&re);
        let c_im = self.eigenvectors.tr_mul(&im);
        let mut d_re = DVector::zeros(psi0.len());
        let mut d_im = DVector::zeros(psi0.len());
        for k in 0..psi0.len() {
            let theta = self.eigenvalues[k] * z;
            let (s, c) = (Float::sin(theta), Float::cos(theta));
            d_re[k] = c_re[k] * c + c_im[k] * s;
            d_im[k] = c_im[k] * c - c_re[k] * s;
        }
        let out_re = &self.eigenvectors * d_re;
        let out_im = &self.eigenvectors * d_im;
        out_re
            .iter()
            .zip(out_im.iter())
            .map(|(&a, &b)| Complex::new(a, b))
            .collect()
    }
}

/// One-shot propagation by `z`.
pub fn evolve<T: Scalar>(
    h: &Hamiltonian<T>,
    psi0: &[Complex<T>],
    z: T,
    opts: &PropagatorOptions<T>,
) -> Result<State<T>> {
    check_state(h, psi0, z)?;
    match resolve(h, opts)? {
        Method::Dense => Ok(DenseEngine::new(h).evolve(psi0, z)),
        _ => chebyshev_evolve(h, psi0, z, opts.tol),
    }
}

/// Propagation sampled on a strictly increasing grid of distances.
///
/// The dense engine evaluates every sample directly from `psi0`; the
/// Chebyshev engine steps from sample to sample.
pub fn evolve_trace<T: Scalar>(
    h: &Hamiltonian<T>,
    psi0: &[Complex<T>],
    zs: &[T],
    opts: &PropagatorOptions<T>,
) -> Result<Vec<State<T>>> {
    for w in zs.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::validation("z grid must be strictly increasing"));
        }
    }
    match resolve(h, opts)? {
        Method::Dense => {
            if let Some(&z0) = zs.first() {
                check_state(h, psi0, z0)?;
            }
            let engine = DenseEngine::new(h);
            Ok(zs.iter().map(|&z| engine.evolve(psi0, z)).collect())
        }
        _ => {
            let mut out = Vec::with_capacity(zs.len());
            let mut prev_z = T::zero();
            let mut state = psi0.to_vec();
            for &z in zs {
                state = {
                    check_state(h, &state, z)?;
                    chebyshev_evolve(h, &state, z - prev_z, opts.tol)?
                };
                prev_z = z;
                out.push(state.clone());
            }
            Ok(out)
        }
    }
}

fn resolve<T: Scalar>(h: &Hamiltonian<T>, opts: &PropagatorOptions<T>) -> Result<Method> {
    match opts.method {
        Method::Auto => {
            if h.dim() <= opts.dense_dim_cap {
                Ok(Method::Dense)
            } else {
                Ok(Method::Chebyshev)
            }
        }
        Method::Dense if h.dim() > opts.dense_dim_cap => Err(Error::Resource(format!(
            "dense propagation of dimension {} exceeds the cap of {}",
            h.dim(),
            opts.dense_dim_cap
        ))),
        m => Ok(m),
    }
}

fn check_state<T: Scalar>(h: &Hamiltonian<T>, psi: &[Complex<T>], z: T) -> Result<()> {
    if psi.len() != h.dim() {
        return Err(Error::validation(format!(
            "state length {} does not match dimension {}",
            psi.len(),
            h.dim()
        )));
    }
    if !(z >= T::zero()) {
        return Err(Error::validation("propagation distance must be >= 0"));
    }
    Ok(())
}

/// Chebyshev expansion of `exp(-i H z)` applied to a state.
///
/// With `rho` the Gershgorin bound of `H` and `x = rho * z`, the
/// propagator expands as `sum_k (2 - delta_k0) (-i)^k J_k(x) T_k(H / rho)`.
/// Coefficients below `tol` truncate the series; the Bessel tail decays
/// faster than exponentially beyond `k > x`, so truncation is sharp.
pub fn chebyshev_evolve<T: Scalar>(
    h: &Hamiltonian<T>,
    psi0: &[Complex<T>],
    z: T,
    tol: T,
) -> Result<State<T>> {
    check_state(h, psi0, z)?;
    let rho = h.spectral_bound().to_f64().expect("finite bound");
    let x = rho * z.to_f64().expect("finite z");
    if x == 0.0 {
        return Ok(psi0.to_vec());
    }
    let tol64 = tol.to_f64().expect("finite tol").max(1e-15);
    let coeffs = bessel::jn_table(x, tol64)?;

    let inv_rho = lit::<T>(1.0 / rho);
    let two_inv_rho = lit::<T>(2.0 / rho);
    let zero = Complex::new(T::zero(), T::zero());
    let dim = psi0.len();

    // T_0 and T_1 of the scaled Hamiltonian applied to psi0.
    let mut phi_prev: State<T> = psi0.to_vec();
    let mut phi: State<T> = vec![zero; dim];
    h.matvec(&phi_prev, &mut phi);
    for a in phi.iter_mut() {
        *a = Complex::new(a.re * inv_rho, a.im * inv_rho);
    }

    let mut acc: State<T> = vec![zero; dim];
    axpy_phase(&mut acc, coeffs[0], 0, &phi_prev);
    if coeffs.len() > 1 {
        axpy_phase(&mut acc, 2.0 * coeffs[1], 1, &phi);
    }

    let mut scratch: State<T> = vec![zero; dim];
    for (k, &jk) in coeffs.iter().enumerate().skip(2) {
        h.matvec(&phi, &mut scratch);
        for i in 0..dim {
            let next_re = scratch[i].re * two_inv_rho - phi_prev[i].re;
            let next_im = scratch[i].im * two_inv_rho - phi_prev[i].im;
            scratch[i] = Complex::new(next_re, next_im);
        }
        std::mem::swap(&mut phi_prev, &mut phi);
        std::mem::swap(&mut phi, &mut scratch);
        axpy_phase(&mut acc, 2.0 * jk, k, &phi);
    }
    Ok(acc)
}

/// acc += c * (-i)^k * v
fn axpy_phase<T: Scalar>(acc: &mut [Complex<T>], c: f64, k: usize, v: &[Complex<T>]) {
    let c = lit::<T>(c);
    match k % 4 {
        0 => {
            for (a, b) in acc.iter_mut().zip(v) {
                a.re += c * b.re;
                a.im += c * b.im;
            }
        }
        1 => {
            for (a, b) in acc.iter_mut().zip(v) {
                a.re += c * b.im;
                a.im -= c * b.re;
            }
        }
        2 => {
            for (a, b) in acc.iter_mut().zip(v) {
                a.re -= c * b.re;
                a.im -= c * b.im;
            }
        }
        _ => {
            for (a, b) in acc.iter_mut().zip(v) {
                a.re -= c * b.im;
                a.im += c * b.re;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::CouplingModel;
    use crate::lattice::{Lattice, LatticeSpec, Site};
    use approx::assert_relative_eq;

    fn model() -> CouplingModel<f64> {
        CouplingModel::from_ratio(0.45, 0.15, 15.0).unwrap()
    }

    fn two_site() -> (Lattice<f64>, Hamiltonian<f64>) {
        let spec = LatticeSpec::new(2, 2, 15.0);
        let mask = vec![true, true, false, false];
        let lat = Lattice::from_occupied(spec, 0.5, 0, Site::new(0, 0), mask).unwrap();
        let h = Hamiltonian::build(&lat, &model()).unwrap();
        (lat, h)
    }

    #[test]
    fn two_site_rabi_oscillation() {
        let (_, h) = two_site();
        assert_eq!(h.dim(), 2);
        let psi0 = delta_state::<f64>(2, 0);
        for engine in [Method::Dense, Method::Chebyshev] {
            let opts = PropagatorOptions {
                method: engine,
                ..Default::default()
            };
            for step in 0..40 {
                let z = 0.5 * step as f64;
                let psi = evolve(&h, &psi0, z, &opts).unwrap();
                let expect = (0.45 * z).sin().powi(2);
                assert_relative_eq!(psi[1].norm_sqr(), expect, epsilon = 1e-12);
                assert_relative_eq!(norm_sq(&psi), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn chebyshev_matches_dense() {
        let spec = LatticeSpec::new(10, 10, 15.0);
        for (p, seed) in [(1.0, 1u64), (0.7, 2), (0.5, 3)] {
            let lat = Lattice::generate(spec, p, seed).unwrap();
            let h = Hamiltonian::build(&lat, &model()).unwrap();
            let inj = h.dense_index_of(&lat, lat.injection()).unwrap();
            let psi0 = delta_state::<f64>(h.dim(), inj);
            for z in [1.0, 10.0, 20.0] {
                let dense = DenseEngine::new(&h).evolve(&psi0, z);
                let cheb = chebyshev_evolve(&h, &psi0, z, 1e-12).unwrap();
                let err = dense
                    .iter()
                    .zip(&cheb)
                    .map(|(a, b)| (a - b).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                assert!(err < 1e-10, "p={p} z={z} err={err:e}");
            }
        }
    }

    #[test]
    fn zero_distance_is_identity() {
        let (_, h) = two_site();
        let psi0 = delta_state::<f64>(2, 1);
        let out = chebyshev_evolve(&h, &psi0, 0.0, 1e-12).unwrap();
        assert_eq!(out[1], Complex::new(1.0, 0.0));
        assert_eq!(out[0], Complex::new(0.0, 0.0));
    }

    #[test]
    fn semigroup_property() {
        let spec = LatticeSpec::new(8, 8, 15.0);
        let lat = Lattice::generate(spec, 0.8, 11).unwrap();
        let h = Hamiltonian::build(&lat, &model()).unwrap();
        let inj = h.dense_index_of(&lat, lat.injection()).unwrap();
        let psi0 = delta_state::<f64>(h.dim(), inj);
        let one_shot = chebyshev_evolve(&h, &psi0, 9.0, 1e-13).unwrap();
        let part = chebyshev_evolve(&h, &psi0, 4.0, 1e-13).unwrap();
        let stepped = chebyshev_evolve(&h, &part, 5.0, 1e-13).unwrap();
        for (a, b) in one_shot.iter().zip(&stepped) {
            assert_relative_eq!(a.re, b.re, epsilon = 1e-11);
            assert_relative_eq!(a.im, b.im, epsilon = 1e-11);
        }
    }

    #[test]
    fn trace_matches_one_shot_and_conserves_norm() {
        let spec = LatticeSpec::new(9, 9, 15.0);
        let lat = Lattice::generate(spec, 0.9, 21).unwrap();
        let h = Hamiltonian::build(&lat, &model()).unwrap();
        let inj = h.dense_index_of(&lat, lat.injection()).unwrap();
        let psi0 = delta_state::<f64>(h.dim(), inj);
        let zs: Vec<f64> = (1..=20).map(|k| k as f64).collect();
        for method in [Method::Dense, Method::Chebyshev] {
            let opts = PropagatorOptions {
                method,
                ..Default::default()
            };
            let trace = evolve_trace(&h, &psi0, &zs, &opts).unwrap();
            for state in &trace {
                assert!((norm_sq(state) - 1.0).abs() < 1e-11);
            }
            let last = evolve(&h, &psi0, 20.0, &opts).unwrap();
            for (a, b) in trace.last().unwrap().iter().zip(&last) {
                assert!((a - b).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn mirror_symmetric_lattice_evolves_symmetrically() {
        let spec = LatticeSpec::new(6, 7, 15.0);
        let lat = Lattice::generate(spec, 1.0, 0).unwrap();
        let h = Hamiltonian::build(&lat, &model()).unwrap();
        let inj = h.dense_index_of(&lat, Site::new(2, 3)).unwrap();
        let psi0 = delta_state::<f64>(h.dim(), inj);
        let psi = evolve(&h, &psi0, 7.0, &PropagatorOptions::default()).unwrap();
        for r in 0..6 {
            for c in 0..7 {
                let a = h.dense_index_of(&lat, Site::new(r, c)).unwrap();
                let b = h.dense_index_of(&lat, Site::new(r, 6 - c)).unwrap();
                assert_relative_eq!(psi[a].norm_sqr(), psi[b].norm_sqr(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn dense_cap_is_enforced() {
        let spec = LatticeSpec::new(8, 8, 15.0);
        let lat = Lattice::generate(spec, 1.0, 0).unwrap();
        let h = Hamiltonian::build(&lat, &model()).unwrap();
        let psi0 = delta_state::<f64>(h.dim(), 0);
        let opts = PropagatorOptions {
            method: Method::Dense,
            dense_dim_cap: 10,
            ..Default::default()
        };
        assert!(matches!(
            evolve(&h, &psi0, 1.0, &opts),
            Err(Error::Resource(_))
        ));
        let auto = PropagatorOptions {
            method: Method::Auto,
            dense_dim_cap: 10,
            ..Default::default()
        };
        assert!(evolve(&h, &psi0, 1.0, &auto).is_ok());
    }

    #[test]
    fn negative_distance_is_rejected() {
        let (_, h) = two_site();
        let psi0 = delta_state::<f64>(2, 0);
        assert!(evolve(&h, &psi0, -1.0, &PropagatorOptions::default()).is_err());
    }

    #[test]
    fn f32_evolution_is_close_to_f64() {
        let spec64 = LatticeSpec::new(6, 6, 15.0);
        let spec32 = LatticeSpec::new(6, 6, 15.0f32);
        let lat64 = Lattice::generate(spec64, 1.0, 0).unwrap();
        let lat32 = Lattice::<f32>::generate(spec32, 1.0, 0).unwrap();
        let h64 = Hamiltonian::build(&lat64, &model()).unwrap();
        let h32 =
            Hamiltonian::build(&lat32, &CouplingModel::from_ratio(0.45f32, 0.15, 15.0).unwrap())
                .unwrap();
        let psi64 = delta_state::<f64>(h64.dim(), 17);
        let psi32 = delta_state::<f32>(h32.dim(), 17);
        let a = evolve(&h64, &psi64, 5.0, &PropagatorOptions::default()).unwrap();
        let b = evolve(&h32, &psi32, 5.0f32, &PropagatorOptions::default()).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.re - y.re as f64).abs() < 1e-4);
            assert!((x.im - y.im as f64).abs() < 1e-4);
        }
    }
}
