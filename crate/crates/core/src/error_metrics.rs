//! Exact L2 norms of piecewise-constant vector fields, including
//! differences between fields on non-nested grids.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::lattice::{BoxDomain, Lattice};

/// Relative tolerance for deciding that two domains coincide.
const DOMAIN_TOL: f64 = 1e-12;

/// A field constant on each cell of a uniform lattice; values are
/// node-major `(u_x, u_y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseConstantField {
    pub domain: BoxDomain,
    pub kappa: f64,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl PiecewiseConstantField {
    pub fn new(lattice: &Lattice, values: Vec<f64>) -> Result<Self> {
        if values.len() != 2 * lattice.len() {
            return Err(Error::DimensionMismatch {
                expected: 2 * lattice.len(),
                actual: values.len(),
            });
        }
        let (nx, ny) = lattice.counts();
        Ok(PiecewiseConstantField {
            domain: *lattice.domain(),
            kappa: lattice.kappa(),
            nx,
            ny,
            values,
        })
    }

    pub fn from_fn(lattice: &Lattice, f: impl Fn(Vec2) -> Vec2) -> Self {
        let values = lattice.midpoints().iter().flat_map(|&x| {
            let v = f(x);
            [v.x, v.y]
        });
        PiecewiseConstantField::new(lattice, values.collect()).expect("length matches")
    }

    pub fn value(&self, p: usize, q: usize) -> Vec2 {
        let i = q * self.nx + p;
        Vec2::new(self.values[2 * i], self.values[2 * i + 1])
    }

    pub fn cell_volume(&self) -> f64 {
        self.kappa * self.kappa
    }

    /// Cell boundaries along one axis.
    fn edges(&self, axis: usize) -> Vec<f64> {
        let (origin, n) = if axis == 0 {
            (self.domain.origin.x, self.nx)
        } else {
            (self.domain.origin.y, self.ny)
        };
        (0..=n).map(|k| origin + self.kappa * k as f64).collect()
    }
}

/// `sqrt(sum_i V_i |u_i|^2)`.
pub fn l2_norm(f: &PiecewiseConstantField) -> f64 {
    let vol = f.cell_volume();
    let sq: Vec<f64> = f
        .values
        .chunks_exact(2)
        .map(|v| vol * (v[0] * v[0] + v[1] * v[1]))
        .collect();
    crate::par::sum(&sq).sqrt()
}

/// Overlaps `(cell_a, cell_b, length)` of two partitions of the same interval.
fn overlaps(a: &[f64], b: &[f64]) -> Vec<(usize, usize, f64)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut ia, mut ib) = (0, 0);
    while ia + 1 < a.len() && ib + 1 < b.len() {
        let lo = a[ia].max(b[ib]);
        let hi = a[ia + 1].min(b[ib + 1]);
        if hi > lo {
            out.push((ia, ib, hi - lo));
        }
        if a[ia + 1] <= b[ib + 1] {
            ia += 1;
        } else {
            ib += 1;
        }
    }
    out
}

fn same_domain(a: &BoxDomain, b: &BoxDomain) -> bool {
    let scale = a.extent.x.abs().max(a.extent.y.abs());
    let close = |x: f64, y: f64| (x - y).abs() <= DOMAIN_TOL * scale;
    close(a.origin.x, b.origin.x)
        && close(a.origin.y, b.origin.y)
        && close(a.extent.x, b.extent.x)
        && close(a.extent.y, b.extent.y)
}

/// Exact `|f - g|_{L2}` for fields on possibly different grids of one domain.
pub fn l2_diff(f: &PiecewiseConstantField, g: &PiecewiseConstantField) -> Result<f64> {
    if !same_domain(&f.domain, &g.domain) {
        return Err(Error::DomainMismatch);
    }
    let xs = overlaps(&f.edges(0), &g.edges(0));
    let ys = overlaps(&f.edges(1), &g.edges(1));
    let rows: Vec<f64> = ys
        .par_iter()
        .map(|&(qf, qg, hy)| {
            let mut acc = 0.0;
            for &(pf, pg, hx) in &xs {
                let d = f.value(pf, qf) - g.value(pg, qg);
                acc += hx * d.norm_sq();
            }
            hy * acc
        })
        .collect();
    Ok(rows.iter().sum::<f64>().sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(kappa: f64) -> Lattice {
        Lattice::new(
            BoxDomain::new(Vec2::ZERO, Vec2::new(1.0, 1.0)).unwrap(),
            kappa,
        )
        .unwrap()
    }

    #[test]
    fn constant_on_bar() {
        let l = Lattice::new(
            BoxDomain::new(Vec2::ZERO, Vec2::new(2.0, 1.0)).unwrap(),
            0.25,
        )
        .unwrap();
        let f = PiecewiseConstantField::from_fn(&l, |_| Vec2::new(1.0, 0.0));
        assert!((l2_norm(&f) - 2f64.sqrt()).abs() < 1e-15);
        let z = PiecewiseConstantField::from_fn(&l, |_| Vec2::ZERO);
        assert_eq!(l2_norm(&z), 0.0);
    }

    #[test]
    fn checkerboard_norm_matches_constant() {
        let l = unit(0.125);
        let cb = PiecewiseConstantField::from_fn(&l, |x| {
            let s = if ((x.x / 0.125) as i64 + (x.y / 0.125) as i64) % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            Vec2::new(s, 0.0)
        });
        let one = PiecewiseConstantField::from_fn(&l, |_| Vec2::new(1.0, 0.0));
        assert!((l2_norm(&cb) - l2_norm(&one)).abs() < 1e-15);
    }

    #[test]
    fn diff_basic_cases() {
        let a = unit(0.5);
        let b = unit(1.0 / 3.0);
        let f = PiecewiseConstantField::from_fn(&a, |_| Vec2::new(1.0, 0.0));
        let g = PiecewiseConstantField::from_fn(&b, |_| Vec2::ZERO);
        assert!((l2_diff(&f, &g).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(l2_diff(&f, &f).unwrap(), 0.0);
    }

    #[test]
    fn domain_mismatch() {
        let a = unit(0.5);
        let other = Lattice::new(
            BoxDomain::new(Vec2::ZERO, Vec2::new(2.0, 1.0)).unwrap(),
            0.5,
        )
        .unwrap();
        let f = PiecewiseConstantField::from_fn(&a, |_| Vec2::ZERO);
        let g = PiecewiseConstantField::from_fn(&other, |_| Vec2::ZERO);
        assert!(matches!(l2_diff(&f, &g), Err(Error::DomainMismatch)));
    }

    #[test]
    fn overlap_lengths_cover_interval() {
        let a: Vec<f64> = (0..=80).map(|k| k as f64 / 80.0).collect();
        let b: Vec<f64> = (0..=360).map(|k| k as f64 / 360.0).collect();
        let total: f64 = overlaps(&a, &b).iter().map(|o| o.2).sum();
        assert!((total - 1.0).abs() < 1e-13);
    }
}
