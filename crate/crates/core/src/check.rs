//! Built-in verification suite behind the `check` subcommand, plus the small
//! "desk" problems it runs on.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::error_metrics::{l2_diff, l2_norm, PiecewiseConstantField};
use crate::geometry::{Region, Vec2};
use crate::kernels::Kernel;
use crate::lattice::{BoxDomain, Lattice};
use crate::material::{ScalarField, VectorField, DIM_SQ};
use crate::operator::{
    assemble_dense, assemble_dense_bond_only, i1_block, i2_block, DenseOperator,
    MatrixFreeOperator, Model,
};
use crate::oracle::{oracle_i1, oracle_i2, relative_block_error, QuadratureRule};
use crate::study::ProblemSpec;
use crate::system::{solve_cg, ReducedSystem, SolverSettings};
use crate::weights::{build_weights, validate_weights, WeightRule, WeightScheme, WeightTable};

/// Grid spacing of the desk problems; the horizon spans three cells.
pub const DESK_KAPPA: f64 = 1.0 / 60.0;
pub const DESK_DELTA: f64 = 1.0 / 20.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeskMaterial {
    /// `k = 100`, `l = 800` everywhere.
    Bar,
    /// The soft disc of the inclusion problem; the lattice sits on the disc
    /// boundary so that both materials appear.
    Inclusion,
    /// `k = 100`, `l = 4 k`: every state-based coefficient vanishes.
    BondBased,
}

impl DeskMaterial {
    pub const ALL: [DeskMaterial; 3] = [
        DeskMaterial::Bar,
        DeskMaterial::Inclusion,
        DeskMaterial::BondBased,
    ];

    fn origin(self) -> Vec2 {
        match self {
            DeskMaterial::Inclusion => Vec2::new(1.25, 0.45),
            _ => Vec2::ZERO,
        }
    }
}

impl fmt::Display for DeskMaterial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DeskMaterial::Bar => "bar",
            DeskMaterial::Inclusion => "inclusion",
            DeskMaterial::BondBased => "bond-based",
        })
    }
}

/// An `nx x ny` problem at [`DESK_KAPPA`] with the first column constrained
/// and the last column pulled in `x`.
pub fn desk_problem(nx: usize, ny: usize, material: DeskMaterial) -> Result<ProblemSpec> {
    let o = material.origin();
    let (w, h) = (nx as f64 * DESK_KAPPA, ny as f64 * DESK_KAPPA);
    let domain = BoxDomain::new(o, Vec2::new(w, h))?;
    let theta = Region::boxed(o, Vec2::new(DESK_KAPPA, h))?;
    let load = VectorField::constant(Vec2::ZERO).with_override(
        Region::boxed(
            Vec2::new(o.x + w - DESK_KAPPA, o.y),
            Vec2::new(DESK_KAPPA, h),
        )?,
        Vec2::new(100.0, 0.0),
    );
    let (k_field, l_field) = match material {
        DeskMaterial::Bar => (ScalarField::constant(100.0), ScalarField::constant(800.0)),
        DeskMaterial::BondBased => (
            ScalarField::constant(100.0),
            ScalarField::constant(DIM_SQ * 100.0),
        ),
        DeskMaterial::Inclusion => {
            let disc = Region::disc(Vec2::new(1.0, 0.5), 0.3)?;
            (
                ScalarField::constant(100.0).with_override(disc, 0.01),
                ScalarField::constant(800.0).with_override(disc, 0.08),
            )
        }
    };
    Ok(ProblemSpec {
        domain,
        delta: DESK_DELTA,
        theta,
        load,
        k_field,
        l_field,
        kernel: Kernel::inverse_distance(DESK_DELTA)?,
    })
}

pub fn desk_model(
    nx: usize,
    ny: usize,
    scheme: WeightScheme,
    material: DeskMaterial,
) -> Result<Model> {
    desk_problem(nx, ny, material)?.model(DESK_KAPPA, scheme)
}

/// Uniform `[-1, 1]` entries from a fixed seed.
pub fn random_vector(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

/// Matrix of the matrix-free operator, one basis vector at a time.
pub fn matrix_free_columns(op: &MatrixFreeOperator) -> Result<DenseOperator> {
    let dim = op.dim();
    let mut cols = Vec::with_capacity(dim);
    let mut e = vec![0.0; dim];
    for c in 0..dim {
        e[c] = 1.0;
        cols.push(op.apply(&e)?);
        e[c] = 0.0;
    }
    let data: Vec<f64> = (0..dim * dim).map(|k| cols[k % dim][k / dim]).collect();
    DenseOperator::from_row_major(op.len(), data)
}

/// `max |a - b| / max |a|`.
pub fn max_relative_deviation(a: &DenseOperator, b: &DenseOperator) -> f64 {
    let diff = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    diff / a.max_abs()
}

/// Copy of a built-in table as a custom one with `w_ij` halved for a
/// single pair, breaking symmetry.
pub fn inject_asymmetry(table: &WeightTable, lattice: &Lattice) -> Result<WeightTable> {
    let i = lattice.len() / 2;
    let target = table
        .row(i)
        .first()
        .map(|&(j, _)| j)
        .ok_or_else(|| Error::Config("empty weight row".into()))?;
    let entries = (0..lattice.len()).flat_map(|a| {
        table
            .row(a)
            .into_iter()
            .map(move |(b, w)| (a, b, if a == i && b == target { 0.5 * w } else { w }))
    });
    WeightTable::custom(lattice, table.delta(), entries.collect::<Vec<_>>())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    /// Halve one weight of the validated table without its mirror entry.
    WeightAsymmetry,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &str, result: Result<(bool, String)>) -> CheckOutcome {
    let (passed, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    CheckOutcome {
        name: name.to_string(),
        passed,
        detail,
    }
}

pub fn run_checks(level: Level, fault: Option<Fault>) -> Vec<CheckOutcome> {
    let mut out = weight_checks(fault);
    let mut add = |name: &str, r: Result<(bool, String)>| out.push(outcome(name, r));
    add("operator.potential_form", check_potential_form());
    let sizes: &[(usize, usize)] = match level {
        Level::Quick => &[(4, 2), (6, 3)],
        Level::Full => &[(4, 2), (6, 3), (10, 5)],
    };
    add(
        "operator.dense_vs_matrix_free",
        check_dense_vs_matrix_free(sizes),
    );
    add("operator.split_decomposition", check_split());
    add("operator.null_space", check_null_space());
    add("operator.bond_based_reduction", check_bond_based());
    add("system.spd", check_spd());
    add("system.cg_vs_dense", check_cg());
    add("oracle.one_point_blocks", check_one_point(1));
    add("error_metrics.cross_grid", check_cross_grid());
    if level == Level::Full {
        add("oracle.self_consistency", check_oracle_self_consistency());
        add("oracle.refinement_sweep", check_one_point(4));
        add("material.m_num_refinement", check_m_num_refinement());
    }
    out
}

fn weight_checks(fault: Option<Fault>) -> Vec<CheckOutcome> {
    let mut found = Vec::new();
    let mut failure = None;
    for scheme in [WeightScheme::Fa, WeightScheme::Paac] {
        let built = desk_problem(10, 5, DeskMaterial::Bar).and_then(|p| {
            let lat = p.lattice(DESK_KAPPA)?;
            let t = build_weights(&lat, &p.kernel, scheme)?;
            let t = match fault {
                Some(Fault::WeightAsymmetry) => inject_asymmetry(&t, &lat)?,
                None => t,
            };
            Ok(validate_weights(&t, &lat))
        });
        match built {
            Ok(v) => found.extend(v),
            Err(e) => failure = Some(e.to_string()),
        }
    }
    [
        WeightRule::ZeroOutside,
        WeightRule::OneInside,
        WeightRule::Range,
        WeightRule::Symmetric,
    ]
    .into_iter()
    .map(|rule| {
        let hits: Vec<_> = found.iter().filter(|v| v.rule == rule).collect();
        let detail = match (&failure, hits.first()) {
            (Some(e), _) => format!("error: {e}"),
            (None, None) => "no violations".to_string(),
            (None, Some(v)) => format!("{} violation(s), first {v}", hits.len()),
        };
        CheckOutcome {
            name: rule.to_string(),
            passed: failure.is_none() && hits.is_empty(),
            detail,
        }
    })
    .collect()
}

fn check_potential_form() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for scheme in [WeightScheme::Fa, WeightScheme::Paac] {
        let op = MatrixFreeOperator::new(desk_model(10, 5, scheme, DeskMaterial::Bar)?);
        for seed in 0..5 {
            let u = random_vector(op.dim(), seed);
            let bu = op.apply(&u)?;
            let quad: f64 = u.iter().zip(&bu).map(|(a, b)| a * b).sum();
            worst = worst.max((quad - 2.0 * op.energy(&u)?).abs() / quad.abs());
        }
    }
    Ok((
        worst <= 1e-10,
        format!("max relative defect {worst:.3e} (tol 1e-10)"),
    ))
}

fn check_dense_vs_matrix_free(sizes: &[(usize, usize)]) -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for &(nx, ny) in sizes {
        for scheme in [WeightScheme::Fa, WeightScheme::Paac] {
            for material in [DeskMaterial::Bar, DeskMaterial::Inclusion] {
                let model = desk_model(nx, ny, scheme, material)?;
                let dense = assemble_dense(&model)?;
                let cols = matrix_free_columns(&MatrixFreeOperator::new(model))?;
                worst = worst.max(max_relative_deviation(&dense, &cols));
            }
        }
    }
    Ok((
        worst <= 1e-12,
        format!("max relative entry deviation {worst:.3e} (tol 1e-12)"),
    ))
}

fn check_split() -> Result<(bool, String)> {
    let op = MatrixFreeOperator::new(desk_model(
        6,
        3,
        WeightScheme::Paac,
        DeskMaterial::Inclusion,
    )?);
    let u = random_vector(op.dim(), 7);
    let a = op.apply(&u)?;
    let s = op.apply_split(&u)?.total();
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let dev = a
        .iter()
        .zip(&s)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        / scale;
    Ok((
        dev <= 1e-12,
        format!("relative deviation {dev:.3e} (tol 1e-12)"),
    ))
}

/// `|B u|_inf / (|u|_inf * max row sum of |B|)` for the rigid motions.
pub fn null_space_ratio(model: &Model) -> Result<f64> {
    let dense = assemble_dense(model)?;
    let dim = dense.dim();
    let row_bound = (0..dim)
        .map(|r| (0..dim).map(|c| dense.get(r, c).abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let op = MatrixFreeOperator::new(model.clone());
    let lat = &model.lattice;
    let fields: [Box<dyn Fn(Vec2) -> Vec2>; 3] = [
        Box::new(|_| Vec2::new(1.0, 0.0)),
        Box::new(|_| Vec2::new(0.0, 1.0)),
        Box::new(|x| Vec2::new(-x.y, x.x)),
    ];
    let mut worst = 0.0f64;
    for f in &fields {
        let u: Vec<f64> = lat
            .midpoints()
            .iter()
            .flat_map(|&x| {
                let v = f(x);
                [v.x, v.y]
            })
            .collect();
        let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let out = op.apply(&u)?;
        let inf = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        worst = worst.max(inf / (scale * row_bound));
    }
    Ok(worst)
}

fn check_null_space() -> Result<(bool, String)> {
    let mut worst = 0.0f64;
    for scheme in [WeightScheme::Fa, WeightScheme::Paac] {
        for material in [DeskMaterial::Bar, DeskMaterial::Inclusion] {
            worst = worst.max(null_space_ratio(&desk_model(10, 5, scheme, material)?)?);
        }
    }
    Ok((
        worst <= 1e-9,
        format!("max scaled residual {worst:.3e} (tol 1e-9)"),
    ))
}

fn check_bond_based() -> Result<(bool, String)> {
    let mut same = true;
    for scheme in [WeightScheme::Fa, WeightScheme::Paac] {
        let model = desk_model(6, 3, scheme, DeskMaterial::BondBased)?;
        same &= assemble_dense(&model)? == assemble_dense_bond_only(&model)?;
    }
    Ok((
        same,
        if same {
            "bitwise equal".into()
        } else {
            "matrices differ".into()
        },
    ))
}

/// Reduced dense matrix of a model (free nodes only).
pub fn reduced_dense(model: &Model) -> Result<nalgebra::DMatrix<f64>> {
    Ok(assemble_dense(model)?.restrict(model.lattice.free_cells()))
}

fn check_spd() -> Result<(bool, String)> {
    let mut lowest = f64::INFINITY;
    for scheme in [WeightScheme::Fa, WeightScheme::Paac] {
        let m = reduced_dense(&desk_model(8, 4, scheme, DeskMaterial::Bar)?)?;
        lowest = lowest.min(m.symmetric_eigenvalues().min());
    }
    Ok((lowest > 0.0, format!("smallest eigenvalue {lowest:.3e}")))
}

fn check_cg() -> Result<(bool, String)> {
    let model = desk_model(8, 4, WeightScheme::Paac, DeskMaterial::Inclusion)?;
    let load = desk_problem(8, 4, DeskMaterial::Inclusion)?.load;
    let dense = reduced_dense(&model)?;
    let system = ReducedSystem::new(MatrixFreeOperator::new(model), &load);
    let rhs = nalgebra::DVector::from_column_slice(system.rhs());
    let exact = dense
        .cholesky()
        .ok_or_else(|| Error::Config("reduced matrix not SPD".into()))?
        .solve(&rhs);
    let sol = solve_cg(&system, &SolverSettings::default())?;
    let got = nalgebra::DVector::from_column_slice(&sol.reduced);
    let rel = (&got - &exact).norm() / exact.norm();
    Ok((
        rel <= 1e-8,
        format!(
            "relative error {rel:.3e} after {} iterations (tol 1e-8)",
            sol.stats.iterations
        ),
    ))
}

/// Fixed-geometry lattice for one-point vs oracle comparisons: cells of side
/// `0.005 / 2^halvings` with the base cell at the centre.
pub fn refinement_lattice(halvings: u32) -> Result<(Lattice, usize)> {
    let kappa = 0.005 / f64::from(1u32 << halvings);
    let n = 20usize << halvings;
    let lat = Lattice::new(
        BoxDomain::new(Vec2::ZERO, Vec2::new(n as f64 * kappa, n as f64 * kappa))?,
        kappa,
    )?;
    let i = lat.index(n / 2, n / 2);
    Ok((lat, i))
}

/// Cell offsets of the fixed pair/triple, in units of the coarsest spacing.
pub const REFINEMENT_J: (i64, i64) = (4, 2);
pub const REFINEMENT_M: (i64, i64) = (-3, 3);

/// Relative errors of the one-point `I1` and `I2` blocks against the
/// order-8 oracle for `halvings = 0..levels`.
pub fn one_point_errors(levels: u32) -> Result<Vec<(f64, f64, f64)>> {
    let kernel = Kernel::inverse_distance(0.05)?;
    let rule = QuadratureRule::gauss_legendre(8);
    let (alpha, tau) = (2.0, -3.0);
    (0..levels)
        .map(|h| {
            let (lat, i) = refinement_lattice(h)?;
            let s = 1i64 << h;
            let j = lat
                .offset(i, REFINEMENT_J.0 * s, REFINEMENT_J.1 * s)
                .ok_or(Error::DomainMismatch)?;
            let m = lat
                .offset(i, REFINEMENT_M.0 * s, REFINEMENT_M.1 * s)
                .ok_or(Error::DomainMismatch)?;
            let v = lat.cell_volume();
            let (bj, bm) = (lat.bond(i, j), lat.bond(i, m));
            let (rj, rm) = (kernel.rho(bj)?, kernel.rho(bm)?);
            let one1 = i1_block(v, v, rj, alpha, alpha, bj, 1.0);
            let one2 = i2_block(v, v, v, tau, rj, rm, bj, bm, 1.0, 1.0);
            let e1 = relative_block_error(&one1, &oracle_i1(&lat, &kernel, i, j, alpha, &rule)?);
            let e2 = relative_block_error(&one2, &oracle_i2(&lat, &kernel, i, j, m, tau, &rule)?);
            Ok((lat.kappa(), e1, e2))
        })
        .collect()
}

fn sci(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

fn check_one_point(levels: u32) -> Result<(bool, String)> {
    let errs = one_point_errors(levels)?;
    let e1: Vec<f64> = errs.iter().map(|e| e.1).collect();
    let e2: Vec<f64> = errs.iter().map(|e| e.2).collect();
    let ok = strictly_decreasing(&e1) && strictly_decreasing(&e2) && e1[0] < 0.05 && e2[0] < 0.05;
    Ok((
        ok,
        format!("I1 errors {}, I2 errors {}", sci(&e1), sci(&e2)),
    ))
}

fn check_oracle_self_consistency() -> Result<(bool, String)> {
    let kernel = Kernel::inverse_distance(0.05)?;
    let (lat, i) = refinement_lattice(0)?;
    let j = lat
        .offset(i, REFINEMENT_J.0, REFINEMENT_J.1)
        .ok_or(Error::DomainMismatch)?;
    let m = lat
        .offset(i, REFINEMENT_M.0, REFINEMENT_M.1)
        .ok_or(Error::DomainMismatch)?;
    let (r8, r16) = (
        QuadratureRule::gauss_legendre(8),
        QuadratureRule::gauss_legendre(16),
    );
    let d1 = relative_block_error(
        &oracle_i1(&lat, &kernel, i, j, 1.0, &r8)?,
        &oracle_i1(&lat, &kernel, i, j, 1.0, &r16)?,
    );
    let d2 = relative_block_error(
        &oracle_i2(&lat, &kernel, i, j, m, 1.0, &r8)?,
        &oracle_i2(&lat, &kernel, i, j, m, 1.0, &r16)?,
    );
    Ok((
        d1.max(d2) <= 1e-10,
        format!("order 8 vs 16: I1 {d1:.3e}, I2 {d2:.3e} (tol 1e-10)"),
    ))
}

/// `|m_num - 2 pi delta^3 / 3|` at an interior node for `kappa = delta / 4, / 8, / 16`.
pub fn m_num_errors() -> Result<Vec<(f64, f64)>> {
    let delta = 0.05;
    let kernel = Kernel::inverse_distance(delta)?;
    let exact = 2.0 * std::f64::consts::PI * delta.powi(3) / 3.0;
    [4.0, 8.0, 16.0]
        .into_iter()
        .map(|d: f64| {
            let kappa = delta / d;
            let n = 4 * d as usize;
            let lat = Lattice::new(
                BoxDomain::new(Vec2::ZERO, Vec2::new(n as f64 * kappa, n as f64 * kappa))?,
                kappa,
            )?;
            let w = build_weights(&lat, &kernel, WeightScheme::Paac)?;
            let mat = crate::material::NodalMaterial::compute(
                &lat,
                &kernel,
                &w,
                &ScalarField::constant(1.0),
                &ScalarField::constant(1.0),
            )?;
            Ok((kappa, (mat.m_num[lat.index(n / 2, n / 2)] - exact).abs()))
        })
        .collect()
}

fn check_m_num_refinement() -> Result<(bool, String)> {
    let errs: Vec<f64> = m_num_errors()?.iter().map(|e| e.1).collect();
    Ok((
        strictly_decreasing(&errs),
        format!("absolute errors {}", sci(&errs)),
    ))
}

/// Random piecewise-constant fields on the unit square at spacing `kappa`.
pub fn random_unit_square_field(kappa: f64, seed: u64) -> Result<PiecewiseConstantField> {
    let lat = Lattice::new(BoxDomain::new(Vec2::ZERO, Vec2::new(1.0, 1.0))?, kappa)?;
    PiecewiseConstantField::new(&lat, random_vector(2 * lat.len(), seed))
}

/// `|f - g|` evaluated on a common refinement of spacing `kappa`, which both
/// grids must divide.
pub fn l2_diff_on_refinement(
    f: &PiecewiseConstantField,
    g: &PiecewiseConstantField,
    kappa: f64,
) -> Result<f64> {
    let lat = Lattice::new(f.domain, kappa)?;
    let locate = |h: &PiecewiseConstantField, x: Vec2| {
        let p = ((x.x - h.domain.origin.x) / h.kappa).floor() as usize;
        let q = ((x.y - h.domain.origin.y) / h.kappa).floor() as usize;
        h.value(p.min(h.nx - 1), q.min(h.ny - 1))
    };
    let diff = PiecewiseConstantField::from_fn(&lat, |x| locate(f, x) - locate(g, x));
    Ok(l2_norm(&diff))
}

fn check_cross_grid() -> Result<(bool, String)> {
    let f = random_unit_square_field(0.5, 1)?;
    let g = random_unit_square_field(1.0 / 3.0, 2)?;
    let a = l2_diff(&f, &g)?;
    let b = l2_diff_on_refinement(&f, &g, 1.0 / 6.0)?;
    let rel = (a - b).abs() / b;
    Ok((
        rel <= 1e-12,
        format!("exact {a:.17e}, refinement {b:.17e}, relative {rel:.3e}"),
    ))
}
