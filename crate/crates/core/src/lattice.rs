//! Uniform subdivision of a box domain into half-open square cells.
//!
//! Cells are numbered row-major (x fastest). Every downstream sum iterates
//! cells in this order, which is what makes results reproducible bit for bit.

use std::f64::consts::SQRT_2;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Rect, Region, Vec2};

/// Relative tolerance for the extent/kappa divisibility check.
const CONFORMITY_TOL: f64 = 1e-12;

/// Axis-aligned box domain `origin + [0, extent.x] x [0, extent.y]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxDomain {
    pub origin: Vec2,
    pub extent: Vec2,
}

impl BoxDomain {
    pub fn new(origin: Vec2, extent: Vec2) -> Result<Self> {
        if !(extent.x > 0.0 && extent.y > 0.0) {
            return Err(Error::InvalidRegion(format!(
                "domain extent must be positive, got ({}, {})",
                extent.x, extent.y
            )));
        }
        Ok(BoxDomain { origin, extent })
    }

    pub fn rect(&self) -> Rect {
        Rect::new(self.origin, self.extent)
    }

    pub fn area(&self) -> f64 {
        self.extent.x * self.extent.y
    }

    /// Cell counts per axis for `kappa`, or `NonconformingKappa`.
    pub fn cell_counts(&self, kappa: f64) -> Result<(usize, usize)> {
        let count = |extent: f64| -> Result<usize> {
            let ratio = extent / kappa;
            let n = ratio.round();
            if !(kappa > 0.0) || n < 1.0 || (ratio - n).abs() > CONFORMITY_TOL * n {
                return Err(Error::NonconformingKappa { extent, kappa });
            }
            Ok(n as usize)
        };
        Ok((count(self.extent.x)?, count(self.extent.y)?))
    }
}

/// Uniform lattice over a box domain with an optional constrained set.
#[derive(Clone, Debug)]
pub struct Lattice {
    domain: BoxDomain,
    kappa: f64,
    nx: usize,
    ny: usize,
    midpoints: Vec<Vec2>,
    constrained: Vec<bool>,
    free_index: Vec<Option<usize>>,
    free_cells: Vec<usize>,
}

impl Lattice {
    pub fn new(domain: BoxDomain, kappa: f64) -> Result<Self> {
        let (nx, ny) = domain.cell_counts(kappa)?;
        let mut midpoints = Vec::with_capacity(nx * ny);
        for q in 0..ny {
            for p in 0..nx {
                midpoints.push(Vec2::new(
                    domain.origin.x + kappa * (p as f64 + 0.5),
                    domain.origin.y + kappa * (q as f64 + 0.5),
                ));
            }
        }
        let n = nx * ny;
        Ok(Lattice {
            domain,
            kappa,
            nx,
            ny,
            midpoints,
            constrained: vec![false; n],
            free_index: (0..n).map(Some).collect(),
            free_cells: (0..n).collect(),
        })
    }

    /// Mark every cell whose intersection with `theta` has positive area.
    ///
    /// `theta` is clipped to the domain; parts outside only trigger a warning.
    pub fn with_constraint(mut self, theta: &Region) -> Self {
        let dom = self.domain.rect();
        let bounds = theta.bounding_rect();
        if bounds.min.x < dom.min.x
            || bounds.min.y < dom.min.y
            || bounds.max.x > dom.max.x
            || bounds.max.y > dom.max.y
        {
            warn!("constraint region {theta:?} extends beyond the domain; clipping");
        }
        let eps_area = 1e-14 * self.kappa * self.kappa;
        let flags: Vec<bool> = (0..self.len())
            .map(|i| {
                self.constrained[i]
                    || theta.overlap_area(&self.cell_rect(i).intersect(&dom)) > eps_area
            })
            .collect();
        self.set_constrained(flags);
        self
    }

    fn set_constrained(&mut self, flags: Vec<bool>) {
        self.free_cells.clear();
        for (i, &c) in flags.iter().enumerate() {
            if c {
                self.free_index[i] = None;
            } else {
                self.free_index[i] = Some(self.free_cells.len());
                self.free_cells.push(i);
            }
        }
        self.constrained = flags;
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn counts(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn len(&self) -> usize {
        self.midpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.midpoints.is_empty()
    }

    /// Every cell is a full square, so `V_i = kappa²`.
    pub fn cell_volume(&self) -> f64 {
        self.kappa * self.kappa
    }

    pub fn midpoint(&self, i: usize) -> Vec2 {
        self.midpoints[i]
    }

    pub fn midpoints(&self) -> &[Vec2] {
        &self.midpoints
    }

    /// Integer grid coordinates `(p, q)` of cell `i`.
    #[inline]
    pub fn coords(&self, i: usize) -> (usize, usize) {
        (i % self.nx, i / self.nx)
    }

    #[inline]
    pub fn index(&self, p: usize, q: usize) -> usize {
        q * self.nx + p
    }

    /// Cell index at integer offset from `i`, if inside the lattice.
    #[inline]
    pub fn offset(&self, i: usize, dp: i64, dq: i64) -> Option<usize> {
        let (p, q) = self.coords(i);
        let p = p as i64 + dp;
        let q = q as i64 + dq;
        if p < 0 || q < 0 || p >= self.nx as i64 || q >= self.ny as i64 {
            None
        } else {
            Some(self.index(p as usize, q as usize))
        }
    }

    /// Bond vector `x_j - x_i`, computed from integer offsets so that it is
    /// exactly antisymmetric in `(i, j)`.
    #[inline]
    pub fn bond(&self, i: usize, j: usize) -> Vec2 {
        let (pi, qi) = self.coords(i);
        let (pj, qj) = self.coords(j);
        Vec2::new(
            self.kappa * (pj as f64 - pi as f64),
            self.kappa * (qj as f64 - qi as f64),
        )
    }

    pub fn cell_rect(&self, i: usize) -> Rect {
        let h = 0.5 * self.kappa;
        let c = self.midpoints[i];
        Rect {
            min: c - Vec2::new(h, h),
            max: c + Vec2::new(h, h),
        }
    }

    pub fn is_constrained(&self, i: usize) -> bool {
        self.constrained[i]
    }

    pub fn constrained(&self) -> &[bool] {
        &self.constrained
    }

    pub fn free_index(&self, i: usize) -> Option<usize> {
        self.free_index[i]
    }

    /// Cell indices of the free (unconstrained) cells, in reduced order.
    pub fn free_cells(&self) -> &[usize] {
        &self.free_cells
    }

    pub fn free_count(&self) -> usize {
        self.free_cells.len()
    }

    /// Candidate radius around a node for a horizon `radius`.
    pub fn candidate_radius(&self, radius: f64) -> f64 {
        radius + SQRT_2 * self.kappa / 2.0
    }

    /// All `j != i` with `|x_j - x_i| < radius + sqrt(2) kappa / 2`, row-major.
    pub fn neighbors(&self, i: usize, radius: f64) -> Vec<usize> {
        let cutoff = self.candidate_radius(radius);
        let reach = (cutoff / self.kappa).ceil() as i64;
        let mut out = Vec::new();
        for dq in -reach..=reach {
            for dp in -reach..=reach {
                if dp == 0 && dq == 0 {
                    continue;
                }
                if let Some(j) = self.offset(i, dp, dq) {
                    if self.bond(i, j).norm() < cutoff {
                        out.push(j);
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bar_domain() -> BoxDomain {
        BoxDomain::new(Vec2::ZERO, Vec2::new(2.0, 1.0)).unwrap()
    }

    #[test]
    fn bar_cell_counts() {
        let l = Lattice::new(bar_domain(), 1.0 / 40.0).unwrap();
        assert_eq!(l.counts(), (80, 40));
        assert_eq!(l.len(), 3200);
        let l = Lattice::new(bar_domain(), 1.0 / 360.0).unwrap();
        assert_eq!(l.len(), 259_200);
    }

    #[test]
    fn single_cell() {
        let d = BoxDomain::new(Vec2::ZERO, Vec2::new(1.0, 1.0)).unwrap();
        let l = Lattice::new(d, 1.0).unwrap();
        assert_eq!(l.len(), 1);
        assert_eq!(l.midpoint(0), Vec2::new(0.5, 0.5));
        assert_eq!(l.cell_volume(), 1.0);
        assert!(l.neighbors(0, 0.5).is_empty());
    }

    #[test]
    fn nonconforming_kappa_rejected() {
        let err = Lattice::new(bar_domain(), 0.3).unwrap_err();
        assert!(matches!(err, Error::NonconformingKappa { .. }));
    }

    #[test]
    fn volumes_tile_domain() {
        let l = Lattice::new(bar_domain(), 1.0 / 60.0).unwrap();
        let total: f64 = (0..l.len()).map(|_| l.cell_volume()).sum();
        assert!((total - 2.0).abs() <= 1e-12 * 2.0);
    }

    #[test]
    fn box_constraint_marks_four_columns() {
        let theta = Region::boxed(Vec2::ZERO, Vec2::new(0.1, 1.0)).unwrap();
        let l = Lattice::new(bar_domain(), 1.0 / 40.0)
            .unwrap()
            .with_constraint(&theta);
        assert_eq!(l.len() - l.free_count(), 160);
        for i in 0..l.len() {
            let (p, _) = l.coords(i);
            assert_eq!(l.is_constrained(i), p < 4);
        }
        // reduced indices are contiguous
        for (r, &c) in l.free_cells().iter().enumerate() {
            assert_eq!(l.free_index(c), Some(r));
        }
    }

    #[test]
    fn empty_constraint_marks_nothing() {
        let theta = Region::boxed(Vec2::new(0.5, 0.5), Vec2::ZERO).unwrap();
        let l = Lattice::new(bar_domain(), 1.0 / 40.0)
            .unwrap()
            .with_constraint(&theta);
        assert_eq!(l.free_count(), l.len());
    }

    #[test]
    fn corner_has_fewer_neighbors() {
        let d = BoxDomain::new(Vec2::ZERO, Vec2::new(1.0, 1.0)).unwrap();
        let l = Lattice::new(d, 1.0 / 40.0).unwrap();
        let interior = l.neighbors(l.index(20, 20), 0.05).len();
        let corner = l.neighbors(0, 0.05).len();
        assert!(corner < interior);
    }

    #[test]
    fn interior_candidate_count_matches_brute_force() {
        let delta = 1.0 / 20.0;
        let kappa = 1.0 / 80.0;
        let d = BoxDomain::new(Vec2::ZERO, Vec2::new(1.0, 1.0)).unwrap();
        let l = Lattice::new(d, kappa).unwrap();
        let i = l.index(40, 40);
        let cutoff = delta + SQRT_2 * kappa / 2.0;
        let brute: Vec<usize> = (0..l.len())
            .filter(|&j| j != i && (l.midpoint(j) - l.midpoint(i)).norm() < cutoff)
            .collect();
        let fast = l.neighbors(i, delta);
        assert_eq!(fast, brute);
        let estimate = std::f64::consts::PI * cutoff * cutoff / (kappa * kappa);
        assert!(((fast.len() as f64) - estimate).abs() <= 0.05 * estimate);
    }
}
