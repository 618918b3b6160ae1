//! Reduced linear system on the free nodes and its conjugate-gradient solve.

use std::time::Instant;

use log::debug;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::material::VectorField;
use crate::operator::{Mat2, MatrixFreeOperator};
use crate::par;

/// Right-hand side `V_i b(x_i)` on the free nodes, in reduced order.
pub fn build_rhs(lattice: &Lattice, load: &VectorField) -> Vec<f64> {
    let vol = lattice.cell_volume();
    lattice
        .free_cells()
        .iter()
        .flat_map(|&i| {
            let b = load.sample(lattice.midpoint(i));
            [vol * b.x, vol * b.y]
        })
        .collect()
}

/// The operator restricted to free nodes together with its right-hand side.
#[derive(Debug)]
pub struct ReducedSystem {
    op: MatrixFreeOperator,
    rhs: Vec<f64>,
    state: bool,
}

impl ReducedSystem {
    pub fn new(op: MatrixFreeOperator, load: &VectorField) -> Self {
        let rhs = build_rhs(op.lattice(), load);
        ReducedSystem {
            op,
            rhs,
            state: true,
        }
    }

    pub fn with_rhs(op: MatrixFreeOperator, rhs: Vec<f64>) -> Result<Self> {
        let expected = 2 * op.lattice().free_count();
        if rhs.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: rhs.len(),
            });
        }
        Ok(ReducedSystem {
            op,
            rhs,
            state: true,
        })
    }

    /// Drop the state-based terms from every product.
    pub fn bond_only(mut self) -> Self {
        self.state = false;
        self
    }

    pub fn operator(&self) -> &MatrixFreeOperator {
        &self.op
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    /// Zero-extend a reduced vector to the full lattice.
    pub fn embed(&self, reduced: &[f64]) -> Vec<f64> {
        let lat = self.op.lattice();
        let mut full = vec![0.0; 2 * lat.len()];
        for (r, &c) in lat.free_cells().iter().enumerate() {
            full[2 * c] = reduced[2 * r];
            full[2 * c + 1] = reduced[2 * r + 1];
        }
        full
    }

    /// Free-node entries of a full vector.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.op
            .lattice()
            .free_cells()
            .iter()
            .flat_map(|&c| [full[2 * c], full[2 * c + 1]])
            .collect()
    }

    /// Reduced product: constrained inputs forced to 0, constrained outputs dropped.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        let mut full = vec![0.0; self.op.dim()];
        self.op.apply_into(&self.embed(x), &mut full, self.state)?;
        Ok(self.restrict(&full))
    }

    /// Inverted 2x2 diagonal blocks of the reduced operator.
    pub fn jacobi_precondition(&self) -> Result<BlockJacobi> {
        let lat = self.op.lattice();
        let blocks = lat
            .free_cells()
            .par_iter()
            .map(|&i| {
                invert_spd(&self.op.diagonal_block_terms(i, self.state))
                    .ok_or(Error::SingularBlock { node: i })
            })
            .collect::<Result<Vec<Mat2>>>()?;
        Ok(BlockJacobi {
            inverse_blocks: blocks,
        })
    }
}

fn invert_spd(b: &Mat2) -> Option<Mat2> {
    let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
    if !(b[0][0] > 0.0 && det > 0.0) || !det.is_finite() {
        return None;
    }
    let inv = 1.0 / det;
    Some([
        [b[1][1] * inv, -b[0][1] * inv],
        [-b[1][0] * inv, b[0][0] * inv],
    ])
}

/// Block-diagonal preconditioner.
#[derive(Clone, Debug)]
pub struct BlockJacobi {
    pub inverse_blocks: Vec<Mat2>,
}

impl BlockJacobi {
    pub fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.par_chunks_mut(2)
            .with_min_len(par::MIN_LEN)
            .zip(r.par_chunks(2))
            .zip(self.inverse_blocks.par_iter())
            .for_each(|((z, r), b)| {
                z[0] = b[0][0] * r[0] + b[0][1] * r[1];
                z[1] = b[1][0] * r[0] + b[1][1] * r[1];
            });
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Preconditioner {
    None,
    #[default]
    Jacobi,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// `None`: `20 * sqrt(dof)`.
    #[serde(default)]
    pub max_iter: Option<usize>,
    #[serde(default)]
    pub precond: Preconditioner,
}

fn default_tol() -> f64 {
    1e-10
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            tol: default_tol(),
            max_iter: None,
            precond: Preconditioner::Jacobi,
        }
    }
}

impl SolverSettings {
    pub fn max_iter_for(&self, dof: usize) -> usize {
        self.max_iter
            .unwrap_or_else(|| (20.0 * (dof as f64).sqrt()).ceil() as usize)
            .max(1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// `|b - A x| / |b|` recomputed from the final iterate.
    pub final_relative_residual: f64,
    pub wall_time: f64,
}

/// Result of [`solve_cg`]: the full-lattice field with zeros on constrained
/// nodes, plus statistics.
#[derive(Clone, Debug)]
pub struct Solution {
    pub field: Vec<f64>,
    pub reduced: Vec<f64>,
    pub stats: SolveStats,
}

/// Preconditioned conjugate gradients on the reduced system.
///
/// Stops once the recursively updated residual drops below `tol`, then
/// confirms with the true residual and restarts from it if they disagree.
pub fn solve_cg(system: &ReducedSystem, settings: &SolverSettings) -> Result<Solution> {
    let start = Instant::now();
    let tol = settings.tol;
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Config(format!(
            "solver tolerance must lie in (0, 1), got {tol}"
        )));
    }
    let n = system.dim();
    let max_iter = settings.max_iter_for(n);
    let b = system.rhs();
    let b_norm = par::norm(b);
    let mut x = vec![0.0; n];
    if b_norm == 0.0 {
        return Ok(Solution {
            field: system.embed(&x),
            reduced: x,
            stats: SolveStats {
                iterations: 0,
                final_relative_residual: 0.0,
                wall_time: start.elapsed().as_secs_f64(),
            },
        });
    }
    let precond = match settings.precond {
        Preconditioner::Jacobi => Some(system.jacobi_precondition()?),
        Preconditioner::None => None,
    };
    let precondition = |r: &[f64], z: &mut Vec<f64>| match &precond {
        Some(p) => p.apply(r, z),
        None => z.copy_from_slice(r),
    };

    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = par::dot(&r, &z);
    let mut iterations = 0;
    let mut true_residual = 1.0;
    while iterations < max_iter {
        let ap = system.apply(&p)?;
        let pap = par::dot(&p, &ap);
        if !(pap > 0.0) {
            debug!("CG breakdown: p^T A p = {pap}");
            break;
        }
        let step = rz / pap;
        par::axpy(step, &p, &mut x);
        par::axpy(-step, &ap, &mut r);
        iterations += 1;
        let rel = par::norm(&r) / b_norm;
        if rel <= tol {
            let ax = system.apply(&x)?;
            r.par_iter_mut()
                .zip(b.par_iter().zip(ax.par_iter()))
                .for_each(|(r, (b, a))| *r = b - a);
            true_residual = par::norm(&r) / b_norm;
            if true_residual <= tol {
                break;
            }
            debug!("CG restart at iteration {iterations}: true residual {true_residual:e}");
            precondition(&r, &mut z);
            p.copy_from_slice(&z);
            rz = par::dot(&r, &z);
            continue;
        }
        precondition(&r, &mut z);
        let rz_new = par::dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut()
            .zip(z.par_iter())
            .for_each(|(p, z)| *p = z + beta * *p);
    }
    if true_residual > tol {
        let ax = system.apply(&x)?;
        let res: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        true_residual = par::norm(&res) / b_norm;
    }
    if true_residual > tol {
        return Err(Error::NotConverged {
            max_iter,
            residual: true_residual,
        });
    }
    Ok(Solution {
        field: system.embed(&x),
        reduced: x,
        stats: SolveStats {
            iterations,
            final_relative_residual: true_residual,
            wall_time: start.elapsed().as_secs_f64(),
        },
    })
}
