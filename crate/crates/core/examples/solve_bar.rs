//! Solve the built-in bar problem once and inspect the displacement.
//!
//! `cargo run --release --example solve_bar -- [kappa] [FA|PAAC] [dump.pdf1]`

use peristatic::field_io::write_field_file;
use peristatic::{builtin_problem, run_problem, SolverSettings, WeightScheme};

fn main() -> peristatic::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let kappa = args
        .first()
        .map(|s| peristatic::config::parse_kappa(s))
        .transpose()
        .map_err(peristatic::Error::Config)?
        .unwrap_or(1.0 / 40.0);
    let scheme: WeightScheme = args
        .get(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(WeightScheme::Paac);

    let problem = builtin_problem("bar")?;
    let run = run_problem(&problem, kappa, scheme, &SolverSettings::default())?;
    println!(
        "kappa {kappa}, {scheme}: {} unknowns, {} CG iterations, residual {:.2e}, {:.2} s",
        run.dof_count, run.stats.iterations, run.stats.final_relative_residual, run.stats.wall_time
    );
    let f = &run.field;
    for p in (0..f.nx).step_by(f.nx / 8) {
        let u = f.value(p, f.ny / 2);
        println!(
            "  x = {:.3}: u = ({:+.5e}, {:+.5e})",
            (p as f64 + 0.5) * f.kappa,
            u.x,
            u.y
        );
    }
    if let Some(path) = args.get(2) {
        write_field_file(path.as_ref(), f)?;
        println!("field written to {path}");
    }
    Ok(())
}
