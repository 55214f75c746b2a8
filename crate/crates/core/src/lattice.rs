//! Honeycomb lattice geometry, random occupancy, cluster queries.
//!
//! Sites live on a rows x cols brick-wall grid indexed `(row, col)` in
//! row-major order. The physical embedding of site `(r, c)` is
//!
//! ```text
//! x = c * (sqrt(3) / 2) * pitch
//! y = r * 1.5 * pitch + ((r + c) mod 2) * pitch / 2
//! ```
//!
//! which reproduces the honeycomb coordination: every site has its two
//! horizontal neighbors at distance `pitch`, plus one vertical neighbor
//! at the same distance, upward when `r + c` is odd and downward when
//! it is even. The six next-nearest sites sit at distance
//! `sqrt(3) * pitch`.

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::{lit, Scalar};
use crate::unionfind::UnionFind;
use num_traits::Float;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

/// Grid coordinates of one waveguide site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Site {
    pub row: usize,
    pub col: usize,
}

impl Site {
    pub fn new(row: usize, col: usize) -> Self {
        Site { row, col }
    }
}

/// Lattice dimensions and spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound = "")]
pub struct LatticeSpec<T: Scalar> {
    pub rows: usize,
    pub cols: usize,
    pub pitch_um: T,
}

impl<T: Scalar> LatticeSpec<T> {
    pub fn new(rows: usize, cols: usize, pitch_um: T) -> Self {
        LatticeSpec {
            rows,
            cols,
            pitch_um,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows < 2 || self.cols < 2 {
            return Err(Error::validation(format!(
                "lattice must be at least 2x2, got {}x{}",
                self.rows, self.cols
            )));
        }
        if !(self.pitch_um > T::zero()) {
            return Err(Error::validation("pitch must be positive"));
        }
        Ok(())
    }

    pub fn n_sites(&self) -> usize {
        self.rows * self.cols
    }

    pub fn linear_index(&self, site: Site) -> usize {
        site.row * self.cols + site.col
    }

    pub fn site_at(&self, linear: usize) -> Site {
        Site::new(linear / self.cols, linear % self.cols)
    }

    pub fn contains(&self, row: isize, col: isize) -> bool {
        row >= 0 && col >= 0 && (row as usize) < self.rows && (col as usize) < self.cols
    }

    /// Physical position of a site in micrometers.
    pub fn position(&self, site: Site) -> (T, T) {
        let sqrt3_half = lit::<T>(f64::sqrt(3.0) / 2.0);
        let x = lit::<T>(site.col as f64) * sqrt3_half * self.pitch_um;
        let stagger = if (site.row + site.col) % 2 == 1 {
            self.pitch_um / lit::<T>(2.0)
        } else {
            T::zero()
        };
        let y = lit::<T>(site.row as f64) * lit::<T>(1.5) * self.pitch_um + stagger;
        (x, y)
    }

    /// Euclidean distance between two sites in micrometers.
    pub fn distance(&self, a: Site, b: Site) -> T {
        let (xa, ya) = self.position(a);
        let (xb, yb) = self.position(b);
        Float::sqrt((xa - xb) * (xa - xb) + (ya - yb) * (ya - yb))
    }

    /// Row of the vertical nearest neighbor of `(row, col)`, if any.
    pub fn vertical_neighbor_row(&self, row: usize, col: usize) -> Option<usize> {
        if (row + col) % 2 == 1 {
            (row + 1 < self.rows).then_some(row + 1)
        } else {
            row.checked_sub(1)
        }
    }

    /// The up to three nearest neighbors of a site.
    pub fn nn_sites(&self, site: Site) -> impl Iterator<Item = Site> {
        let mut out = [None; 3];
        if site.col > 0 {
            out[0] = Some(Site::new(site.row, site.col - 1));
        }
        if site.col + 1 < self.cols {
            out[1] = Some(Site::new(site.row, site.col + 1));
        }
        if let Some(r) = self.vertical_neighbor_row(site.row, site.col) {
            out[2] = Some(Site::new(r, site.col));
        }
        out.into_iter().flatten()
    }

    /// The up to six next-nearest neighbors of a site.
    pub fn nnn_sites(&self, site: Site) -> impl Iterator<Item = Site> + '_ {
        const OFFSETS: [(isize, isize); 6] = [(0, -2), (0, 2), (1, -1), (1, 1), (-1, -1), (-1, 1)];
        let (r, c) = (site.row as isize, site.col as isize);
        OFFSETS
            .into_iter()
            .filter(move |&(dr, dc)| self.contains(r + dr, c + dc))
            .map(move |(dr, dc)| Site::new((r + dr) as usize, (c + dc) as usize))
    }

    /// Site closest to the geometric centroid, row-major order breaking ties.
    pub fn centroid_site(&self) -> Site {
        let n = lit::<T>(self.n_sites() as f64);
        let mut cx = T::zero();
        let mut cy = T::zero();
        for i in 0..self.n_sites() {
            let (x, y) = self.position(self.site_at(i));
            cx += x;
            cy += y;
        }
        cx /= n;
        cy /= n;
        let mut best = Site::new(0, 0);
        let mut best_d2 = T::infinity();
        for i in 0..self.n_sites() {
            let s = self.site_at(i);
            let (x, y) = self.position(s);
            let d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
            if d2 < best_d2 {
                best_d2 = d2;
                best = s;
            }
        }
        best
    }
}

/// Which boundaries a cluster must touch to count as spanning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpanRule {
    /// One cluster touches all four boundaries.
    #[default]
    CornerToCorner,
    /// One cluster touches both the first and last row.
    Rows,
    /// One cluster touches both the first and last column.
    Cols,
    /// Spanning along either axis qualifies.
    Either,
}

/// A honeycomb lattice with random site occupancy.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice<T: Scalar> {
    spec: LatticeSpec<T>,
    p: T,
    seed: u64,
    injection: Site,
    occupied: Vec<bool>,
}

impl<T: Scalar> Lattice<T> {
    /// Draws site occupancy at probability `p` and forces the injection
    /// site (the one nearest the centroid) to be occupied.
    ///
    /// Site `i` is occupied when the `i`-th uniform of `seed` falls
    /// below `p`, so for a fixed seed the occupied set grows
    /// monotonically with `p`.
    pub fn generate(spec: LatticeSpec<T>, p: T, seed: u64) -> Result<Self> {
        let mut lat = Self::generate_unconditioned(spec, p, seed)?;
        let inj = lat.spec.linear_index(lat.injection);
        lat.occupied[inj] = true;
        Ok(lat)
    }

    /// Same draw as [`Lattice::generate`] but without forcing the
    /// injection site, for pure percolation statistics.
    pub fn generate_unconditioned(spec: LatticeSpec<T>, p: T, seed: u64) -> Result<Self> {
        spec.validate()?;
        if !(p >= T::zero() && p <= T::one()) {
            return Err(Error::validation(format!(
                "occupation probability must be in [0, 1], got {p}"
            )));
        }
        let p64 = p.to_f64().expect("p is finite");
        let occupied = (0..spec.n_sites())
            .map(|i| rng::uniform_at(seed, i as u64) < p64)
            .collect();
        Ok(Lattice {
            spec,
            p,
            seed,
            injection: spec.centroid_site(),
            occupied,
        })
    }

    /// Builds a lattice from an explicit occupancy mask.
    pub fn from_occupied(
        spec: LatticeSpec<T>,
        p: T,
        seed: u64,
        injection: Site,
        occupied: Vec<bool>,
    ) -> Result<Self> {
        spec.validate()?;
        if occupied.len() != spec.n_sites() {
            return Err(Error::validation(format!(
                "occupancy mask has {} entries, lattice has {} sites",
                occupied.len(),
                spec.n_sites()
            )));
        }
        if injection.row >= spec.rows || injection.col >= spec.cols {
            return Err(Error::validation("injection site outside lattice"));
        }
        Ok(Lattice {
            spec,
            p,
            seed,
            injection,
            occupied,
        })
    }

    pub fn spec(&self) -> &LatticeSpec<T> {
        &self.spec
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn injection(&self) -> Site {
        self.injection
    }

    pub fn occupied(&self) -> &[bool] {
        &self.occupied
    }

    pub fn is_occupied(&self, site: Site) -> bool {
        self.occupied[self.spec.linear_index(site)]
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    pub fn occupied_fraction(&self) -> T {
        lit::<T>(self.occupied_count() as f64 / self.spec.n_sites() as f64)
    }

    /// Occupied sites in row-major order.
    pub fn occupied_sites(&self) -> impl Iterator<Item = Site> + '_ {
        self.occupied
            .iter()
            .enumerate()
            .filter(|(_, &o)| o)
            .map(|(i, _)| self.spec.site_at(i))
    }

    /// Union-find over occupied sites joined by nearest-neighbor bonds.
    fn nn_components(&self) -> UnionFind {
        let mut uf = UnionFind::new(self.spec.n_sites());
        for i in 0..self.spec.n_sites() {
            if !self.occupied[i] {
                continue;
            }
            let s = self.spec.site_at(i);
            for nb in self.spec.nn_sites(s) {
                let j = self.spec.linear_index(nb);
                if j > i && self.occupied[j] {
                    uf.union(i, j);
                }
            }
        }
        uf
    }

    pub fn largest_cluster_size(&self) -> usize {
        let mut uf = self.nn_components();
        let mut best = 0;
        for i in 0..self.spec.n_sites() {
            if self.occupied[i] {
                best = best.max(uf.set_size(i));
            }
        }
        best
    }

    /// Tests whether any occupied cluster spans the lattice under `rule`.
    pub fn spans(&self, rule: SpanRule) -> bool {
        let mut uf = self.nn_components();
        let spec = &self.spec;
        let mut roots: HashMap<usize, [bool; 4]> = HashMap::new();
        for i in 0..spec.n_sites() {
            if !self.occupied[i] {
                continue;
            }
            let s = spec.site_at(i);
            let touches = [
                s.row == 0,
                s.row == spec.rows - 1,
                s.col == 0,
                s.col == spec.cols - 1,
            ];
            if touches.iter().any(|&t| t) {
                let r = uf.find(i);
                let e = roots.entry(r).or_insert([false; 4]);
                for (slot, t) in e.iter_mut().zip(touches) {
                    *slot |= t;
                }
            }
        }
        roots.values().any(|e| {
            let row_span = e[0] && e[1];
            let col_span = e[2] && e[3];
            match rule {
                SpanRule::CornerToCorner => row_span && col_span,
                SpanRule::Rows => row_span,
                SpanRule::Cols => col_span,
                SpanRule::Either => row_span || col_span,
            }
        })
    }
}

/// Nearest occupied site to the centroid, for lattices loaded from
/// plain masks that carry no injection metadata.
pub fn nearest_occupied_to_centroid<T: Scalar>(
    spec: &LatticeSpec<T>,
    occupied: &[bool],
) -> Result<Site> {
    let center = spec.centroid_site();
    let (cx, cy) = spec.position(center);
    let mut best: Option<(T, Site)> = None;
    for (i, &occ) in occupied.iter().enumerate() {
        if !occ {
            continue;
        }
        let s = spec.site_at(i);
        let (x, y) = spec.position(s);
        let d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        if best.is_none_or(|(bd, _)| d2 < bd) {
            best = Some((d2, s));
        }
    }
    best.map(|(_, s)| s)
        .ok_or_else(|| Error::domain("mask has no occupied site"))
}
