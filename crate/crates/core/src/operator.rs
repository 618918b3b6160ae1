//! The discrete quadratic form `B^num` of the one-point model.
//!
//! Three routes to the same matrix:
//! * [`assemble_dense`] sums the quadrature blocks `I1`, `I2` literally
//!   (oracle, small lattices only);
//! * [`MatrixFreeOperator::apply`] factors the state-based part through
//!   per-node dilatations `theta_i` and costs `O(N * stencil)`;
//! * [`MatrixFreeOperator::energy`] evaluates the nodal potential, with
//!   `u^T B u = 2 * energy(u)`.
//!
//! `apply` returns the algebraic product `B u`. The per-volume operator
//! `L u` of the strong form relates to it by `(B u)_i = -V_i (L u)_i`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::kernels::Kernel;
use crate::lattice::Lattice;
use crate::material::{NodalMaterial, ScalarField, DIM};
use crate::par;
use crate::weights::{ensure_valid, WeightTable};

/// Largest lattice accepted by [`assemble_dense`].
pub const DENSE_LIMIT: usize = 5000;

/// 2x2 block, row-major.
pub type Mat2 = [[f64; 2]; 2];

pub const ZERO_BLOCK: Mat2 = [[0.0; 2]; 2];

#[inline]
fn outer(a: Vec2, b: Vec2) -> Mat2 {
    [[a.x * b.x, a.x * b.y], [a.y * b.x, a.y * b.y]]
}

#[inline]
fn scale(m: Mat2, s: f64) -> Mat2 {
    [[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]]
}

#[inline]
fn add_assign(acc: &mut Mat2, m: &Mat2) {
    for r in 0..2 {
        for c in 0..2 {
            acc[r][c] += m[r][c];
        }
    }
}

#[inline]
fn sub_assign(acc: &mut Mat2, m: &Mat2) {
    for r in 0..2 {
        for c in 0..2 {
            acc[r][c] -= m[r][c];
        }
    }
}

/// One-point bond block
/// `V_i V_j rho (alpha_i + alpha_j) (bond bond^T / |bond|^2) w`.
pub fn i1_block(
    vol_i: f64,
    vol_j: f64,
    rho: f64,
    alpha_i: f64,
    alpha_j: f64,
    bond: Vec2,
    w: f64,
) -> Mat2 {
    let s = vol_i * vol_j * rho * (alpha_i + alpha_j) * w / bond.norm_sq();
    scale(outer(bond, bond), s)
}

/// One-point dilatation block
/// `V_i V_j V_m tau_i rho_ij rho_im bond_ij bond_im^T w_ij w_im`.
#[allow(clippy::too_many_arguments)]
pub fn i2_block(
    vol_i: f64,
    vol_j: f64,
    vol_m: f64,
    tau_i: f64,
    rho_ij: f64,
    rho_im: f64,
    bond_ij: Vec2,
    bond_im: Vec2,
    w_ij: f64,
    w_im: f64,
) -> Mat2 {
    let s = vol_i * vol_j * vol_m * tau_i * rho_ij * rho_im * w_ij * w_im;
    scale(outer(bond_ij, bond_im), s)
}

/// Lattice, kernel, weights and nodal material of one discretization.
#[derive(Clone, Debug)]
pub struct Model {
    pub lattice: Lattice,
    pub kernel: Kernel,
    pub weights: WeightTable,
    pub material: NodalMaterial,
}

impl Model {
    /// Validates the weight table and computes the nodal material.
    pub fn new(
        lattice: Lattice,
        kernel: Kernel,
        weights: WeightTable,
        k: &ScalarField,
        l: &ScalarField,
    ) -> Result<Self> {
        ensure_valid(&weights, &lattice)?;
        Model::new_unchecked(lattice, kernel, weights, k, l)
    }

    /// As [`Model::new`] without the weight validation.
    pub fn new_unchecked(
        lattice: Lattice,
        kernel: Kernel,
        weights: WeightTable,
        k: &ScalarField,
        l: &ScalarField,
    ) -> Result<Self> {
        let material = NodalMaterial::compute(&lattice, &kernel, &weights, k, l)?;
        Ok(Model {
            lattice,
            kernel,
            weights,
            material,
        })
    }

    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }

    fn rho(&self, i: usize, j: usize) -> f64 {
        self.kernel
            .rho(self.lattice.bond(i, j))
            .expect("bond between distinct cells has positive length")
    }

    /// `I1^num_ij`; zero when `w_ij = 0`.
    pub fn integral_i1_num(&self, i: usize, j: usize) -> Mat2 {
        let w = self.weights.weight(i, j);
        if i == j || w == 0.0 {
            return ZERO_BLOCK;
        }
        let v = self.lattice.cell_volume();
        let a = &self.material.alpha_num;
        i1_block(v, v, self.rho(i, j), a[i], a[j], self.lattice.bond(i, j), w)
    }

    /// `I2^num_ijm`; zero when either weight vanishes.
    pub fn integral_i2_num(&self, i: usize, j: usize, m: usize) -> Mat2 {
        if i == j || i == m {
            return ZERO_BLOCK;
        }
        let w_ij = self.weights.weight(i, j);
        let w_im = self.weights.weight(i, m);
        if w_ij == 0.0 || w_im == 0.0 {
            return ZERO_BLOCK;
        }
        let v = self.lattice.cell_volume();
        i2_block(
            v,
            v,
            v,
            self.material.tau_num[i],
            self.rho(i, j),
            self.rho(i, m),
            self.lattice.bond(i, j),
            self.lattice.bond(i, m),
            w_ij,
            w_im,
        )
    }
}

/// Dense `2N x 2N` matrix of 2x2 blocks, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    n: usize,
    data: Vec<f64>,
}

impl DenseOperator {
    pub fn zeros(nodes: usize) -> Self {
        DenseOperator {
            n: nodes,
            data: vec![0.0; 4 * nodes * nodes],
        }
    }

    pub fn from_row_major(nodes: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != 4 * nodes * nodes {
            return Err(Error::DimensionMismatch {
                expected: 4 * nodes * nodes,
                actual: data.len(),
            });
        }
        Ok(DenseOperator { n: nodes, data })
    }

    pub fn nodes(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.dim() + c]
    }

    pub fn block(&self, i: usize, j: usize) -> Mat2 {
        [
            [self.get(2 * i, 2 * j), self.get(2 * i, 2 * j + 1)],
            [self.get(2 * i + 1, 2 * j), self.get(2 * i + 1, 2 * j + 1)],
        ]
    }

    fn set_block(&mut self, i: usize, j: usize, b: &Mat2) {
        let dim = self.dim();
        for r in 0..2 {
            for c in 0..2 {
                self.data[(2 * i + r) * dim + 2 * j + c] = b[r][c];
            }
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn matvec(&self, u: &[f64]) -> Vec<f64> {
        let dim = self.dim();
        self.data
            .chunks_exact(dim)
            .map(|row| row.iter().zip(u).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Rows and columns of the listed nodes only.
    pub fn restrict(&self, nodes: &[usize]) -> nalgebra::DMatrix<f64> {
        let k = 2 * nodes.len();
        nalgebra::DMatrix::from_fn(k, k, |r, c| {
            let gr = 2 * nodes[r / 2] + r % 2;
            let gc = 2 * nodes[c / 2] + c % 2;
            self.get(gr, gc)
        })
    }

    pub fn to_nalgebra(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.dim(), self.dim(), &self.data)
    }
}

/// Dense assembly by literal summation of the quadrature blocks.
pub fn assemble_dense(model: &Model) -> Result<DenseOperator> {
    assemble_dense_terms(model, true)
}

/// Dense assembly of the bond (`I1`) terms only.
pub fn assemble_dense_bond_only(model: &Model) -> Result<DenseOperator> {
    assemble_dense_terms(model, false)
}

fn assemble_dense_terms(model: &Model, state: bool) -> Result<DenseOperator> {
    let n = model.len();
    if n > DENSE_LIMIT {
        return Err(Error::TooLargeForDense {
            cells: n,
            limit: DENSE_LIMIT,
        });
    }
    let rows: Vec<Vec<usize>> = (0..n)
        .map(|i| model.weights.row(i).into_iter().map(|(j, _)| j).collect())
        .collect();
    let mut dense = DenseOperator::zeros(n);
    for i in 0..n {
        // i itself, its neighbours, and neighbours of neighbours
        let mut partners: Vec<usize> = vec![i];
        for &m in &rows[i] {
            partners.push(m);
            partners.extend(rows[m].iter().copied());
        }
        partners.sort_unstable();
        partners.dedup();
        for j in partners {
            let mut acc = ZERO_BLOCK;
            if i == j {
                if state {
                    for &a in &rows[i] {
                        for &b in &rows[i] {
                            add_assign(&mut acc, &model.integral_i2_num(i, a, b));
                        }
                    }
                    for &m in &rows[i] {
                        add_assign(&mut acc, &model.integral_i2_num(m, i, i));
                    }
                }
                for &m in &rows[i] {
                    add_assign(&mut acc, &model.integral_i1_num(i, m));
                }
            } else {
                if state {
                    for &m in &rows[i] {
                        if m != j {
                            add_assign(&mut acc, &model.integral_i2_num(m, i, j));
                        }
                    }
                    for &m in &rows[i] {
                        sub_assign(&mut acc, &model.integral_i2_num(i, m, j));
                    }
                    for &m in &rows[j] {
                        sub_assign(&mut acc, &model.integral_i2_num(j, i, m));
                    }
                }
                sub_assign(&mut acc, &model.integral_i1_num(i, j));
            }
            dense.set_block(i, j, &acc);
        }
    }
    Ok(dense)
}

/// Per-entry constants of the weight table.
#[derive(Clone, Copy, Debug)]
struct BondData {
    bond: Vec2,
    /// `w V rho`, so that `w V rho bond` is the dilatation coefficient.
    dil: f64,
    /// `V^2 w rho / |bond|^2`, the bond-term scale before `alpha_i + alpha_j`.
    bnd: f64,
}

/// Production operator: `B^num u` without forming the matrix.
#[derive(Clone, Debug)]
pub struct MatrixFreeOperator {
    model: Model,
    entries: Vec<BondData>,
    // custom tables carry per-entry data for every stored (i, j)
    /// `g_i = sum_j w_ij V_j rho (x_j - x_i) (x_j - x_i)`
    g: Vec<Vec2>,
}

impl MatrixFreeOperator {
    pub fn new(model: Model) -> Self {
        let lat = &model.lattice;
        let vol = lat.cell_volume();
        let per_node_entries = model.weights.stencil().is_none();
        let mut entries = Vec::with_capacity(model.weights.entry_count());
        let fill = |entries: &mut Vec<BondData>, i: usize| {
            model.weights.for_each_in_row(i, |j, _, w| {
                let bond = lat.bond(i, j);
                let rho = model.kernel.rho(bond).expect("nonzero bond");
                entries.push(BondData {
                    bond,
                    dil: w * vol * rho,
                    bnd: vol * vol * w * rho / bond.norm_sq(),
                });
            });
        };
        if per_node_entries {
            for i in 0..lat.len() {
                fill(&mut entries, i);
            }
        } else {
            let stencil = model.weights.stencil().unwrap();
            for s in stencil {
                let bond = Vec2::new(lat.kappa() * s.dp as f64, lat.kappa() * s.dq as f64);
                let rho = model.kernel.rho(bond).expect("nonzero bond");
                entries.push(BondData {
                    bond,
                    dil: s.weight * vol * rho,
                    bnd: vol * vol * s.weight * rho / bond.norm_sq(),
                });
            }
        }
        let mut op = MatrixFreeOperator {
            model,
            entries,
            g: Vec::new(),
        };
        op.g = (0..op.len())
            .into_par_iter()
            .map(|i| {
                let mut g = Vec2::ZERO;
                op.for_each_bond(i, |_, b| g = g + b.bond * b.dil);
                g
            })
            .collect();
        op
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn lattice(&self) -> &Lattice {
        &self.model.lattice
    }

    pub fn len(&self) -> usize {
        self.model.len()
    }

    pub fn is_empty(&self) -> bool {
        self.model.is_empty()
    }

    pub fn dim(&self) -> usize {
        2 * self.len()
    }

    /// Weighted bond-vector sums `g_i`.
    pub fn g(&self) -> &[Vec2] {
        &self.g
    }

    #[inline]
    fn for_each_bond(&self, i: usize, mut f: impl FnMut(usize, &BondData)) {
        self.model
            .weights
            .for_each_in_row(i, |j, e, _| f(j, &self.entries[e]));
    }

    fn check_dim(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: u.len(),
            });
        }
        Ok(())
    }

    /// Discrete dilatations `theta_i = sum_j w_ij V_j rho (x_j - x_i) . (u_j - u_i)`.
    pub fn dilatation(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(u)?;
        Ok((0..self.len())
            .into_par_iter()
            .with_min_len(par::MIN_LEN)
            .map(|i| self.theta_at(u, i))
            .collect())
    }

    #[inline]
    fn theta_at(&self, u: &[f64], i: usize) -> f64 {
        let ui = Vec2::new(u[2 * i], u[2 * i + 1]);
        let mut theta = 0.0;
        self.for_each_bond(i, |j, b| {
            let du = Vec2::new(u[2 * j], u[2 * j + 1]) - ui;
            theta += b.dil * b.bond.dot(du);
        });
        theta
    }

    /// `B^num u`.
    pub fn apply(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(u, &mut out, true)?;
        Ok(out)
    }

    /// `B^num u` with the state-based terms dropped.
    pub fn apply_bond_only(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim()];
        self.apply_into(u, &mut out, false)?;
        Ok(out)
    }

    pub fn apply_into(&self, u: &[f64], out: &mut [f64], state: bool) -> Result<()> {
        self.check_dim(u)?;
        self.check_dim(out)?;
        let vol = self.model.lattice.cell_volume();
        let tau = &self.model.material.tau_num;
        let alpha = &self.model.material.alpha_num;
        // pass 1: s_i = V_i tau_i theta_i
        let s: Vec<f64> = if state {
            (0..self.len())
                .into_par_iter()
                .with_min_len(par::MIN_LEN)
                .map(|i| vol * tau[i] * self.theta_at(u, i))
                .collect()
        } else {
            Vec::new()
        };
        // pass 2
        out.par_chunks_mut(2)
            .with_min_len(par::MIN_LEN)
            .enumerate()
            .for_each(|(i, o)| {
                let ui = Vec2::new(u[2 * i], u[2 * i + 1]);
                let ai = alpha[i];
                let mut acc = Vec2::ZERO;
                if state {
                    let si = s[i];
                    self.for_each_bond(i, |j, b| {
                        let du = ui - Vec2::new(u[2 * j], u[2 * j + 1]);
                        let bond_term = b.bnd * (ai + alpha[j]) * b.bond.dot(du);
                        let state_term = -b.dil * (si + s[j]);
                        acc = acc + b.bond * (bond_term + state_term);
                    });
                } else {
                    self.for_each_bond(i, |j, b| {
                        let du = ui - Vec2::new(u[2 * j], u[2 * j + 1]);
                        acc = acc + b.bond * (b.bnd * (ai + alpha[j]) * b.bond.dot(du));
                    });
                }
                o[0] = acc.x;
                o[1] = acc.y;
            });
        Ok(())
    }

    /// Total potential `sum_i V_i W_i(u)`.
    pub fn energy(&self, u: &[f64]) -> Result<f64> {
        let per_node = self.energy_density(u)?;
        let vol = self.model.lattice.cell_volume();
        let weighted: Vec<f64> = per_node.iter().map(|w| vol * w).collect();
        Ok(par::sum(&weighted))
    }

    /// Nodal potential `W_i(u)`: the `k`-weighted squared dilatation plus the
    /// `alpha`-weighted squared deviatoric bond stretches.
    pub fn energy_density(&self, u: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(u)?;
        let mat = &self.model.material;
        let lat = &self.model.lattice;
        let vol = lat.cell_volume();
        Ok((0..self.len())
            .into_par_iter()
            .with_min_len(par::MIN_LEN)
            .map(|i| {
                let ui = Vec2::new(u[2 * i], u[2 * i + 1]);
                let m = mat.m_num[i];
                let rows = self.model.weights.row(i);
                let rho = |j: usize| self.model.kernel.rho(lat.bond(i, j)).expect("nonzero bond");
                let mut dil = 0.0;
                for &(j, w) in &rows {
                    let du = Vec2::new(u[2 * j], u[2 * j + 1]) - ui;
                    dil += vol * w * rho(j) * lat.bond(i, j).dot(du);
                }
                let mean = dil / m;
                let mut dev = 0.0;
                for &(j, w) in &rows {
                    let bond = lat.bond(i, j);
                    let du = Vec2::new(u[2 * j], u[2 * j + 1]) - ui;
                    let r2 = bond.norm_sq();
                    let e = bond.dot(du) / r2 - mean;
                    dev += vol * w * rho(j) * r2 * e * e;
                }
                let scaled = DIM as f64 * mean;
                0.5 * mat.k[i] * scaled * scaled + 0.5 * mat.alpha_num[i] * dev
            })
            .collect())
    }

    /// Diagonal 2x2 block `B_ii`.
    pub fn diagonal_block(&self, i: usize) -> Mat2 {
        self.diagonal_block_terms(i, true)
    }

    pub fn diagonal_block_terms(&self, i: usize, state: bool) -> Mat2 {
        let vol = self.model.lattice.cell_volume();
        let mat = &self.model.material;
        let mut acc = if state {
            scale(outer(self.g[i], self.g[i]), vol * mat.tau_num[i])
        } else {
            ZERO_BLOCK
        };
        let ai = mat.alpha_num[i];
        self.for_each_bond(i, |j, b| {
            if state {
                let c = b.bond * b.dil;
                add_assign(&mut acc, &scale(outer(c, c), vol * mat.tau_num[j]));
            }
            add_assign(
                &mut acc,
                &scale(outer(b.bond, b.bond), b.bnd * (ai + mat.alpha_num[j])),
            );
        });
        acc
    }

    /// The four operator components `-V_i [L u]_i` (bond term, own-node,
    /// neighbour-node and third-node dilatation couplings), each summed
    /// literally over pairs and triples. `O(N * stencil^2)`; reference only.
    pub fn apply_split(&self, u: &[f64]) -> Result<SplitApply> {
        self.check_dim(u)?;
        let m = &self.model;
        let lat = &m.lattice;
        let vol = lat.cell_volume();
        let mat = &m.material;
        let n = self.len();
        let rows: Vec<Vec<(usize, f64)>> = (0..n).map(|i| m.weights.row(i)).collect();
        let rho = |a: usize, b: usize| m.kernel.rho(lat.bond(a, b)).expect("nonzero bond");
        let uv = |i: usize| Vec2::new(u[2 * i], u[2 * i + 1]);
        let mv = |b: &Mat2, v: Vec2| {
            Vec2::new(b[0][0] * v.x + b[0][1] * v.y, b[1][0] * v.x + b[1][1] * v.y)
        };
        let mut split = SplitApply {
            bond: vec![0.0; 2 * n],
            own: vec![0.0; 2 * n],
            neighbor: vec![0.0; 2 * n],
            third: vec![0.0; 2 * n],
        };
        let put = |dst: &mut Vec<f64>, i: usize, v: Vec2| {
            dst[2 * i] = v.x;
            dst[2 * i + 1] = v.y;
        };
        for i in 0..n {
            let (mut l1, mut l2x, mut l2xp, mut l2p) =
                (Vec2::ZERO, Vec2::ZERO, Vec2::ZERO, Vec2::ZERO);
            for &(j, w_ij) in &rows[i] {
                let du = uv(j) - uv(i);
                let b = i1_block(
                    vol,
                    vol,
                    rho(i, j),
                    mat.alpha_num[i],
                    mat.alpha_num[j],
                    lat.bond(i, j),
                    w_ij,
                );
                l1 = l1 + mv(&b, du);
                for &(mm, w_im) in &rows[i] {
                    let blk = scale(
                        outer(lat.bond(i, mm), lat.bond(i, j)),
                        vol * vol * w_im * vol * w_ij * mat.tau_num[i] * rho(i, mm) * rho(i, j),
                    );
                    l2x = l2x + mv(&blk, du);
                }
                let w_ji = m.weights.weight(j, i);
                for &(mm, w_jm) in &rows[j] {
                    let blk = scale(
                        outer(lat.bond(j, i), lat.bond(mm, j)),
                        vol * vol * w_ji * vol * w_jm * mat.tau_num[j] * rho(i, j) * rho(mm, j),
                    );
                    l2xp = l2xp - mv(&blk, du);
                }
            }
            // third nodes p whose stencil holds both i and j; j may lie
            // outside the stencil of i
            for &(p, w_pi) in &rows[i] {
                for &(j, w_pj) in &rows[p] {
                    if j == i {
                        continue;
                    }
                    let du = uv(j) - uv(i);
                    let blk = scale(
                        outer(lat.bond(p, i), lat.bond(j, p)),
                        vol * vol * w_pi * vol * w_pj * mat.tau_num[p] * rho(p, i) * rho(p, j),
                    );
                    l2p = l2p + mv(&blk, du);
                }
            }
            // the 1/V_i of L cancels against V_i
            put(&mut split.bond, i, -l1);
            put(&mut split.own, i, -l2x);
            put(&mut split.neighbor, i, -l2xp);
            put(&mut split.third, i, -l2p);
        }
        Ok(split)
    }
}

/// Components of [`MatrixFreeOperator::apply_split`].
#[derive(Clone, Debug)]
pub struct SplitApply {
    pub bond: Vec<f64>,
    pub own: Vec<f64>,
    pub neighbor: Vec<f64>,
    pub third: Vec<f64>,
}

impl SplitApply {
    pub fn total(&self) -> Vec<f64> {
        (0..self.bond.len())
            .map(|k| self.bond[k] + self.own[k] + self.neighbor[k] + self.third[k])
            .collect()
    }
}
