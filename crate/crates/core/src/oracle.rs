//! Tensor-product Gauss–Legendre evaluation of the cell-pair and cell-triple
//! integrals that the one-point rule approximates.
//!
//! Material coefficients are frozen to constants, so the comparison against
//! the one-point blocks isolates quadrature error. Only cell combinations on
//! which the integrand is smooth are admitted: cells must not touch and must
//! lie entirely inside the horizon of the base cell.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::kernels::Kernel;
use crate::lattice::Lattice;
use crate::operator::{Mat2, ZERO_BLOCK};

/// Gauss–Legendre rule on `[-1/2, 1/2]` with weights summing to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn gauss_legendre(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for k in 0..n.div_ceil(2) {
            // Newton iteration on P_n from the Chebyshev-like initial guess
            let mut x = (PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // map [-1, 1] -> [-1/2, 1/2]; weights scale by 1/2
            nodes[k] = -0.5 * x;
            nodes[n - 1 - k] = 0.5 * x;
            weights[k] = 0.5 * w;
            weights[n - 1 - k] = 0.5 * w;
        }
        QuadratureRule { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Points and weights on the square cell of side `kappa` around `center`;
    /// weights sum to the cell area.
    fn cell_points(&self, center: Vec2, kappa: f64) -> Vec<(Vec2, f64)> {
        let area = kappa * kappa;
        let mut out = Vec::with_capacity(self.order() * self.order());
        for (yn, yw) in self.nodes.iter().zip(&self.weights) {
            for (xn, xw) in self.nodes.iter().zip(&self.weights) {
                out.push((center + Vec2::new(xn * kappa, yn * kappa), xw * yw * area));
            }
        }
        out
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

fn touching(lattice: &Lattice, a: usize, b: usize) -> bool {
    let (pa, qa) = lattice.coords(a);
    let (pb, qb) = lattice.coords(b);
    pa.abs_diff(pb) <= 1 && qa.abs_diff(qb) <= 1
}

fn fully_inside(lattice: &Lattice, kernel: &Kernel, a: usize, b: usize) -> bool {
    lattice.bond(a, b).norm() + SQRT_2 * lattice.kappa() < kernel.delta()
}

/// `∫_{Ω_i} ∫_{Ω_j} 2 alpha rho(x'-x) (x'-x)(x'-x)^T / |x'-x|^2 dx' dx`.
pub fn oracle_i1(
    lattice: &Lattice,
    kernel: &Kernel,
    i: usize,
    j: usize,
    alpha: f64,
    rule: &QuadratureRule,
) -> Result<Mat2> {
    if i == j || touching(lattice, i, j) || !fully_inside(lattice, kernel, i, j) {
        return Err(Error::PairNotSmooth { i, j });
    }
    let kappa = lattice.kappa();
    let pi = rule.cell_points(lattice.midpoint(i), kappa);
    let pj = rule.cell_points(lattice.midpoint(j), kappa);
    let mut acc = ZERO_BLOCK;
    for &(x, wx) in &pi {
        let mut inner = ZERO_BLOCK;
        for &(xp, wp) in &pj {
            let z = xp - x;
            let s = wp * kernel.rho(z)? / z.norm_sq();
            inner[0][0] += s * z.x * z.x;
            inner[0][1] += s * z.x * z.y;
            inner[1][1] += s * z.y * z.y;
        }
        for (r, c) in [(0, 0), (0, 1), (1, 1)] {
            acc[r][c] += wx * inner[r][c];
        }
    }
    acc[1][0] = acc[0][1];
    for row in acc.iter_mut() {
        for v in row.iter_mut() {
            *v *= 2.0 * alpha;
        }
    }
    Ok(acc)
}

/// `∫_{Ω_i} tau (∫_{Ω_j} rho (x'-x)(x'-x) dx') (∫_{Ω_m} rho (p-x)(p-x) dp)^T dx`.
#[allow(clippy::too_many_arguments)]
pub fn oracle_i2(
    lattice: &Lattice,
    kernel: &Kernel,
    i: usize,
    j: usize,
    m: usize,
    tau: f64,
    rule: &QuadratureRule,
) -> Result<Mat2> {
    let ok = i != j
        && i != m
        && j != m
        && !touching(lattice, i, j)
        && !touching(lattice, i, m)
        && !touching(lattice, j, m)
        && fully_inside(lattice, kernel, i, j)
        && fully_inside(lattice, kernel, i, m);
    if !ok {
        return Err(Error::TripleNotSmooth { i, j, m });
    }
    let kappa = lattice.kappa();
    let pi = rule.cell_points(lattice.midpoint(i), kappa);
    let pj = rule.cell_points(lattice.midpoint(j), kappa);
    let pm = rule.cell_points(lattice.midpoint(m), kappa);
    let moment = |x: Vec2, pts: &[(Vec2, f64)]| -> Result<Vec2> {
        let mut v = Vec2::ZERO;
        for &(y, w) in pts {
            let z = y - x;
            v = v + z * (w * kernel.rho(z)?);
        }
        Ok(v)
    };
    let mut acc = ZERO_BLOCK;
    for &(x, wx) in &pi {
        let a = moment(x, &pj)?;
        let b = moment(x, &pm)?;
        acc[0][0] += wx * a.x * b.x;
        acc[0][1] += wx * a.x * b.y;
        acc[1][0] += wx * a.y * b.x;
        acc[1][1] += wx * a.y * b.y;
    }
    for row in acc.iter_mut() {
        for v in row.iter_mut() {
            *v *= tau;
        }
    }
    Ok(acc)
}

/// Frobenius norm of a block.
pub fn frobenius(b: &Mat2) -> f64 {
    (b[0][0].powi(2) + b[0][1].powi(2) + b[1][0].powi(2) + b[1][1].powi(2)).sqrt()
}

/// Frobenius norm of `a - b` relative to `b`.
pub fn relative_block_error(a: &Mat2, b: &Mat2) -> f64 {
    let d = [
        [a[0][0] - b[0][0], a[0][1] - b[0][1]],
        [a[1][0] - b[1][0], a[1][1] - b[1][1]],
    ];
    frobenius(&d) / frobenius(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::BoxDomain;

    #[test]
    fn weights_sum_to_one_and_integrate_polynomials() {
        for order in 1..=10 {
            let r = QuadratureRule::gauss_legendre(order);
            let s: f64 = r.weights.iter().sum();
            assert!((s - 1.0).abs() < 1e-14, "order {order}: {s}");
            // exact for degree 2 order - 1: ∫_{-1/2}^{1/2} x^k dx
            for k in 0..2 * order {
                let exact = if k % 2 == 1 {
                    0.0
                } else {
                    2.0 * 0.5f64.powi(k as i32 + 1) / (k as f64 + 1.0)
                };
                let q: f64 = r
                    .nodes
                    .iter()
                    .zip(&r.weights)
                    .map(|(x, w)| w * x.powi(k as i32))
                    .sum();
                assert!((q - exact).abs() < 1e-14, "order {order}, degree {k}");
            }
        }
    }

    fn setup() -> (Lattice, Kernel) {
        let kappa = 0.005;
        let l = Lattice::new(
            BoxDomain::new(Vec2::ZERO, Vec2::new(40.0 * kappa, 40.0 * kappa)).unwrap(),
            kappa,
        )
        .unwrap();
        (l, Kernel::inverse_distance(0.05).unwrap())
    }

    #[test]
    fn i1_symmetric_and_self_consistent() {
        let (l, k) = setup();
        let i = l.index(20, 20);
        let j = l.index(24, 22);
        let r8 = QuadratureRule::gauss_legendre(8);
        let a = oracle_i1(&l, &k, i, j, 1.5, &r8).unwrap();
        let b = oracle_i1(&l, &k, j, i, 1.5, &r8).unwrap();
        assert!(relative_block_error(&a, &b) < 1e-14);
        assert_eq!(a[0][1], a[1][0]);
        let r2 = QuadratureRule::gauss_legendre(2);
        // order 2 is only accurate once the bond spans many cells
        let kap = 2e-4;
        let far = Lattice::new(
            BoxDomain::new(Vec2::ZERO, Vec2::new(0.06, 0.06)).unwrap(),
            kap,
        )
        .unwrap();
        let (i, j) = (far.index(100, 100), far.index(160, 120));
        let a = oracle_i1(&far, &k, i, j, 1.5, &r8).unwrap();
        let c = oracle_i1(&far, &k, i, j, 1.5, &r2).unwrap();
        assert!(relative_block_error(&c, &a) < 1e-8);
    }

    #[test]
    fn i2_zero_tau_and_transpose() {
        let (l, k) = setup();
        let i = l.index(20, 20);
        let j = l.index(24, 22);
        let m = l.index(17, 23);
        let r = QuadratureRule::gauss_legendre(6);
        let z = oracle_i2(&l, &k, i, j, m, 0.0, &r).unwrap();
        assert_eq!(frobenius(&z), 0.0);
        let a = oracle_i2(&l, &k, i, j, m, 2.0, &r).unwrap();
        let b = oracle_i2(&l, &k, i, m, j, 2.0, &r).unwrap();
        for rr in 0..2 {
            for cc in 0..2 {
                assert!((a[rr][cc] - b[cc][rr]).abs() <= 1e-14 * frobenius(&a));
            }
        }
    }

    #[test]
    fn inadmissible_cells_rejected() {
        let (l, k) = setup();
        let r = QuadratureRule::gauss_legendre(4);
        let i = l.index(20, 20);
        assert!(matches!(
            oracle_i1(&l, &k, i, l.index(21, 21), 1.0, &r),
            Err(Error::PairNotSmooth { .. })
        ));
        assert!(matches!(
            oracle_i1(&l, &k, i, l.index(30, 20), 1.0, &r),
            Err(Error::PairNotSmooth { .. })
        ));
        assert!(matches!(
            oracle_i2(&l, &k, i, l.index(23, 20), l.index(23, 20), 1.0, &r),
            Err(Error::TripleNotSmooth { .. })
        ));
    }
}
