//! Problem definitions, single solves and convergence studies.

use std::f64::consts::SQRT_2;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::info;

use crate::error::{Error, Result};
use crate::error_metrics::{l2_diff, PiecewiseConstantField};
use crate::field_io;
use crate::geometry::{Region, Vec2};
use crate::kernels::Kernel;
use crate::lattice::{BoxDomain, Lattice};
use crate::material::{ScalarField, VectorField};
use crate::operator::{MatrixFreeOperator, Model};
use crate::system::{solve_cg, ReducedSystem, SolveStats, SolverSettings};
use crate::weights::{build_weights, WeightScheme, WeightTable};

/// Header of the study CSV.
pub const CSV_HEADER: &str = "kappa,scheme,l2_error,cg_iterations,residual,wall_time,dof_count";

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub domain: BoxDomain,
    pub delta: f64,
    pub theta: Region,
    pub load: VectorField,
    pub k_field: ScalarField,
    pub l_field: ScalarField,
    pub kernel: Kernel,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        self.theta.validate()?;
        if !(self.theta.area() > 0.0) {
            return Err(Error::Config("theta must have positive area".into()));
        }
        if !(self.delta > 0.0) {
            return Err(Error::Config(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        if self.kernel.delta() != self.delta {
            return Err(Error::Config("kernel horizon differs from delta".into()));
        }
        for o in &self.load.overrides {
            o.region.validate()?;
        }
        for f in [&self.k_field, &self.l_field] {
            for o in &f.overrides {
                o.region.validate()?;
            }
            if f.values().any(|v| !v.is_finite()) {
                return Err(Error::Config("material fields must be finite".into()));
            }
        }
        Ok(())
    }

    /// Same problem with `l = d^2 k` everywhere (the bond-based special case).
    pub fn bond_based(&self) -> ProblemSpec {
        let mut out = self.clone();
        out.l_field = ScalarField {
            background: crate::material::DIM_SQ * self.k_field.background,
            overrides: self
                .k_field
                .overrides
                .iter()
                .map(|o| crate::material::Override {
                    region: o.region,
                    value: crate::material::DIM_SQ * o.value,
                })
                .collect(),
        };
        out
    }

    /// Lattice for `kappa` with the constraint region applied.
    pub fn lattice(&self, kappa: f64) -> Result<Lattice> {
        Ok(Lattice::new(self.domain, kappa)?.with_constraint(&self.theta))
    }

    pub fn model(&self, kappa: f64, scheme: WeightScheme) -> Result<Model> {
        let lattice = self.lattice(kappa)?;
        let weights = build_weights(&lattice, &self.kernel, scheme)?;
        Model::new(
            lattice,
            self.kernel.clone(),
            weights,
            &self.k_field,
            &self.l_field,
        )
    }

    pub fn model_with_weights(&self, kappa: f64, weights: WeightTable) -> Result<Model> {
        let lattice = self.lattice(kappa)?;
        Model::new(
            lattice,
            self.kernel.clone(),
            weights,
            &self.k_field,
            &self.l_field,
        )
    }
}

/// The built-in problems: `bar` (a short bar pulled on its right end and
/// held on its left) and `inclusion` (the same bar with a soft disc).
pub fn builtin_problem(name: &str) -> Result<ProblemSpec> {
    let delta = 1.0 / 20.0;
    let domain = BoxDomain::new(Vec2::ZERO, Vec2::new(2.0, 1.0))?;
    let theta = Region::boxed(Vec2::ZERO, Vec2::new(2.0 * delta, 1.0))?;
    let load = VectorField::constant(Vec2::ZERO).with_override(
        Region::boxed(
            Vec2::new(2.0 - 2.0 * delta, 0.0),
            Vec2::new(2.0 * delta, 1.0),
        )?,
        Vec2::new(100.0, 0.0),
    );
    let kernel = Kernel::inverse_distance(delta)?;
    let (k_field, l_field) = match name {
        "bar" => (ScalarField::constant(100.0), ScalarField::constant(800.0)),
        "inclusion" => {
            let disc = Region::disc(Vec2::new(1.0, 0.5), 0.3)?;
            (
                ScalarField::constant(100.0).with_override(disc, 0.01),
                ScalarField::constant(800.0).with_override(disc, 0.08),
            )
        }
        other => return Err(Error::UnknownProblem(other.to_string())),
    };
    Ok(ProblemSpec {
        domain,
        delta,
        theta,
        load,
        k_field,
        l_field,
        kernel,
    })
}

/// Outcome of a single solve.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub field: PiecewiseConstantField,
    pub stats: SolveStats,
    pub dof_count: usize,
}

/// Lattice, weights, material, reduced system and CG for one `kappa`.
pub fn run_problem(
    problem: &ProblemSpec,
    kappa: f64,
    scheme: WeightScheme,
    solver: &SolverSettings,
) -> Result<RunResult> {
    let model = problem.model(kappa, scheme)?;
    run_model(model, &problem.load, solver, true)
}

/// Solve on a prepared model; `state = false` runs the bond-only operator.
pub fn run_model(
    model: Model,
    load: &VectorField,
    solver: &SolverSettings,
    state: bool,
) -> Result<RunResult> {
    let lattice = model.lattice.clone();
    let mut system = ReducedSystem::new(MatrixFreeOperator::new(model), load);
    if !state {
        system = system.bond_only();
    }
    let dof_count = system.dim();
    let solution = solve_cg(&system, solver)?;
    Ok(RunResult {
        field: PiecewiseConstantField::new(&lattice, solution.field)?,
        stats: solution.stats,
        dof_count,
    })
}

#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub problem: ProblemSpec,
    pub kappas: Vec<f64>,
    pub reference_kappa: f64,
    pub schemes: Vec<WeightScheme>,
    pub reference_scheme: WeightScheme,
    pub solver: SolverSettings,
    /// Write `wall_time` as 0 so that reruns produce identical bytes.
    pub record_timing: bool,
    /// Directory for per-run binary field dumps.
    pub field_dir: Option<PathBuf>,
}

impl StudyConfig {
    /// The scaled-down default study: `kappa` in {1/40, 1/60, 1/80}, reference 1/160.
    pub fn scaled(problem: ProblemSpec) -> Self {
        StudyConfig {
            problem,
            kappas: vec![1.0 / 40.0, 1.0 / 60.0, 1.0 / 80.0],
            reference_kappa: 1.0 / 160.0,
            schemes: vec![WeightScheme::Fa, WeightScheme::Paac],
            reference_scheme: WeightScheme::Paac,
            solver: SolverSettings::default(),
            record_timing: true,
            field_dir: None,
        }
    }

    /// The full sequence `kappa_n = 1/(40 + 20 n)`, `n = 0..7`, reference 1/360.
    pub fn full(problem: ProblemSpec) -> Self {
        StudyConfig {
            kappas: (0..8).map(|n| 1.0 / (40.0 + 20.0 * n as f64)).collect(),
            reference_kappa: 1.0 / 360.0,
            ..StudyConfig::scaled(problem)
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.problem.validate()?;
        if self.kappas.is_empty() || self.schemes.is_empty() {
            return Err(Error::Config(
                "study needs at least one kappa and one scheme".into(),
            ));
        }
        let min = self.kappas.iter().copied().fold(f64::INFINITY, f64::min);
        if !(self.reference_kappa < min) {
            return Err(Error::Config(format!(
                "reference_kappa {} must be smaller than every kappa (min {min})",
                self.reference_kappa
            )));
        }
        let limit = self.problem.delta / SQRT_2;
        for &k in self
            .kappas
            .iter()
            .chain(std::iter::once(&self.reference_kappa))
        {
            self.problem.domain.cell_counts(k)?;
            if k >= limit {
                return Err(Error::KappaTooLarge { kappa: k, limit });
            }
        }
        if self.schemes.contains(&WeightScheme::Custom)
            || self.reference_scheme == WeightScheme::Custom
        {
            return Err(Error::Config(
                "studies run built-in weight schemes only".into(),
            ));
        }
        Ok(())
    }

    /// Rough operation count, for a heads-up before long runs.
    pub fn estimated_cost(&self) -> String {
        let bonds = |kappa: f64| {
            let (nx, ny) = self.problem.domain.cell_counts(kappa).unwrap_or((0, 0));
            let r = self.problem.delta / kappa + SQRT_2 / 2.0;
            (nx * ny) as f64 * std::f64::consts::PI * r * r
        };
        let reference = bonds(self.reference_kappa);
        let rest: f64 =
            self.kappas.iter().map(|&k| bonds(k)).sum::<f64>() * self.schemes.len() as f64;
        format!(
            "{} solves; reference lattice {:.3e} bonds, all runs {:.3e} bonds per operator apply (about {:.1} GFLOP per CG iteration sweep)",
            1 + self.kappas.len() * self.schemes.len(),
            reference,
            reference + rest,
            30.0 * (reference + rest) / 1e9
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyRow {
    pub kappa: f64,
    pub scheme: WeightScheme,
    pub l2_error: f64,
    pub cg_iterations: usize,
    pub residual: f64,
    pub wall_time: f64,
    pub dof_count: usize,
}

impl StudyRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            fmt17(self.kappa),
            self.scheme,
            fmt17(self.l2_error),
            self.cg_iterations,
            fmt17(self.residual),
            fmt17(self.wall_time),
            self.dof_count
        )
    }
}

/// 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

fn row_from(
    kappa: f64,
    scheme: WeightScheme,
    l2_error: f64,
    run: &RunResult,
    timing: bool,
) -> StudyRow {
    StudyRow {
        kappa,
        scheme,
        l2_error,
        cg_iterations: run.stats.iterations,
        residual: run.stats.final_relative_residual,
        wall_time: if timing { run.stats.wall_time } else { 0.0 },
        dof_count: run.dof_count,
    }
}

fn dump_field(dir: &Path, label: &str, field: &PiecewiseConstantField) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join(format!("{label}.pdf1"));
    field_io::write_field_file(&path, field)
}

/// Run a study, streaming rows into `csv` (if given) as they complete.
///
/// On failure the rows finished so far stay in the CSV, followed by a
/// `# ABORTED: ...` line.
pub fn run_convergence_study(config: &StudyConfig, csv: Option<&Path>) -> Result<Vec<StudyRow>> {
    config.validate()?;
    let mut sink = match csv {
        Some(path) => {
            let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
            writeln!(f, "{CSV_HEADER}").map_err(|e| Error::io(path, e))?;
            Some((path, f))
        }
        None => None,
    };
    let mut rows = Vec::new();
    let result = study_rows(config, |row| {
        if let Some((path, f)) = sink.as_mut() {
            writeln!(f, "{}", row.to_csv())
                .and_then(|_| f.flush())
                .map_err(|e| Error::io(*path, e))?;
        }
        rows.push(row);
        Ok(())
    });
    if let Err(e) = &result {
        if let Some((path, f)) = sink.as_mut() {
            writeln!(f, "# ABORTED: {e}").map_err(|err| Error::io(*path, err))?;
        }
    }
    result.map(|_| rows)
}

fn study_rows(config: &StudyConfig, mut emit: impl FnMut(StudyRow) -> Result<()>) -> Result<()> {
    let p = &config.problem;
    info!(
        "reference solve at kappa = {} ({})",
        config.reference_kappa, config.reference_scheme
    );
    let reference = run_problem(
        p,
        config.reference_kappa,
        config.reference_scheme,
        &config.solver,
    )?;
    if let Some(dir) = &config.field_dir {
        dump_field(
            dir,
            &format!("reference_{}", config.reference_scheme),
            &reference.field,
        )?;
    }
    for &kappa in &config.kappas {
        for &scheme in &config.schemes {
            info!("solve at kappa = {kappa} ({scheme})");
            let run = run_problem(p, kappa, scheme, &config.solver)?;
            let err = l2_diff(&run.field, &reference.field)?;
            if let Some(dir) = &config.field_dir {
                dump_field(
                    dir,
                    &format!("kappa_{}_{}", (1.0 / kappa).round(), scheme),
                    &run.field,
                )?;
            }
            emit(row_from(kappa, scheme, err, &run, config.record_timing))?;
        }
    }
    Ok(())
}

/// Render rows as CSV text including the header.
pub fn rows_to_csv(rows: &[StudyRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{CSV_HEADER}");
    for r in rows {
        let _ = writeln!(s, "{}", r.to_csv());
    }
    s
}
