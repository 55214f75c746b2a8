//! Tight-binding coupling matrix over the occupied sites.
//!
//! Couplings decay exponentially with waveguide separation, so only
//! nearest (distance `pitch`) and next-nearest (distance
//! `sqrt(3) * pitch`) pairs are kept. Next-nearest couplings are
//! present whether or not the intermediate site is occupied; the
//! evanescent field tunnels across vacancies.

use crate::error::{Error, Result};
use crate::lattice::{Lattice, Site};
use crate::scalar::{lit, Scalar};
use nalgebra::DMatrix;
use num_complex::Complex;
use num_traits::Float;
use std::sync::Arc;

/// Exponential distance-decay model for waveguide coupling.
///
/// `strength(d) = t1 * exp(-beta * (d - reference_um))`, with `t1` in
/// 1/mm and distances in micrometers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingModel<T: Scalar> {
    pub t1: T,
    pub beta: T,
    pub reference_um: T,
}

impl<T: Scalar> CouplingModel<T> {
    pub fn new(t1: T, beta: T, reference_um: T) -> Result<Self> {
        if !(t1 > T::zero()) || !(beta >= T::zero()) || !(reference_um > T::zero()) {
            return Err(Error::validation(
                "coupling model needs t1 > 0, beta >= 0, reference > 0",
            ));
        }
        Ok(CouplingModel {
            t1,
            beta,
            reference_um,
        })
    }

    /// Fixes `beta` so that the next-nearest coupling on a lattice of
    /// the given pitch equals `ratio * t1`.
    pub fn from_ratio(t1: T, ratio: T, pitch_um: T) -> Result<Self> {
        if !(ratio > T::zero() && ratio < T::one()) {
            return Err(Error::validation(
                "next-nearest coupling ratio must be in (0, 1)",
            ));
        }
        let sqrt3 = lit::<T>(f64::sqrt(3.0));
        let beta = Float::ln(T::one() / ratio) / (pitch_um * (sqrt3 - T::one()));
        Self::new(t1, beta, pitch_um)
    }

    /// Coupling strength in 1/mm at separation `d_um`.
    pub fn strength(&self, d_um: T) -> T {
        self.t1 * Float::exp(-self.beta * (d_um - self.reference_um))
    }
}

/// Sparse symmetric coupling matrix in compressed row storage.
///
/// Row/column indices refer to the dense ordering of occupied sites
/// (row-major over the underlying grid), available as [`Hamiltonian::site_order`].
#[derive(Debug, Clone)]
pub struct Hamiltonian<T: Scalar> {
    dim: usize,
    row_ptr: Vec<usize>,
    col_ind: Vec<u32>,
    values: Vec<T>,
    site_order: Arc<[Site]>,
    gershgorin: T,
}

impl<T: Scalar> Hamiltonian<T> {
    /// Assembles the coupling matrix of a lattice realization.
    pub fn build(lattice: &Lattice<T>, coupling: &CouplingModel<T>) -> Result<Self> {
        let spec = lattice.spec();
        let site_order: Vec<Site> = lattice.occupied_sites().collect();
        if site_order.is_empty() {
            return Err(Error::domain("lattice has no occupied site"));
        }
        let mut dense_index = vec![u32::MAX; spec.n_sites()];
        for (k, &s) in site_order.iter().enumerate() {
            dense_index[spec.linear_index(s)] = k as u32;
        }

        let dim = site_order.len();
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_ind = Vec::new();
        let mut values = Vec::new();
        let mut gershgorin = T::zero();
        let mut entries: Vec<(u32, T)> = Vec::with_capacity(9);
        row_ptr.push(0);
        for &s in &site_order {
            entries.clear();
            for nb in spec.nn_sites(s).chain(spec.nnn_sites(s)) {
                let j = dense_index[spec.linear_index(nb)];
                if j != u32::MAX {
                    entries.push((j, coupling.strength(spec.distance(s, nb))));
                }
            }
            entries.sort_unstable_by_key(|&(j, _)| j);
            let mut radius = T::zero();
            for &(j, v) in &entries {
                col_ind.push(j);
                values.push(v);
                radius += Float::abs(v);
            }
            if radius > gershgorin {
                gershgorin = radius;
            }
            row_ptr.push(col_ind.len());
        }

        Ok(Hamiltonian {
            dim,
            row_ptr,
            col_ind,
            values,
            site_order: site_order.into(),
            gershgorin,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Occupied sites in the dense index order used by the matrix.
    pub fn site_order(&self) -> &Arc<[Site]> {
        &self.site_order
    }

    /// Upper bound on the spectral radius from Gershgorin disks.
    pub fn spectral_bound(&self) -> T {
        self.gershgorin
    }

    /// Iterates one matrix row as `(column, value)` pairs.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        self.col_ind[lo..hi]
            .iter()
            .zip(&self.values[lo..hi])
            .map(|(&j, &v)| (j as usize, v))
    }

    /// y = H x for real vectors.
    pub fn matvec_real(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = T::zero();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_ind[k] as usize];
            }
            *yi = acc;
        }
    }

    /// y = H x for complex vectors.
    pub fn matvec(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut re = T::zero();
            let mut im = T::zero();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let v = self.values[k];
                let xj = x[self.col_ind[k] as usize];
                re += v * xj.re;
                im += v * xj.im;
            }
            *yi = Complex::new(re, im);
        }
    }

    /// Dense copy of the matrix.
    pub fn to_dense(&self) -> DMatrix<T> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Dense index of a grid site, if occupied.
    pub fn dense_index_of(&self, lattice: &Lattice<T>, site: Site) -> Option<usize> {
        if !lattice.is_occupied(site) {
            return None;
        }
        self.site_order.binary_search_by_key(
            &lattice.spec().linear_index(site),
            |s| lattice.spec().linear_index(*s),
        )
        .ok()
    }
}
