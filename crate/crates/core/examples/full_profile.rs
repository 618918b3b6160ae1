//! The full refinement sequence `kappa_n = 1/(40 + 20 n)`, `n = 0..7`, with a
//! 1/360 reference. Prints the cost estimate; pass `--run` to execute (hours).

use peristatic::{builtin_problem, run_convergence_study, StudyConfig};

fn main() -> peristatic::Result<()> {
    let run = std::env::args().any(|a| a == "--run");
    for name in ["bar", "inclusion"] {
        let config = StudyConfig::full(builtin_problem(name)?);
        println!("{name}: {}", config.estimated_cost());
        if run {
            let csv = format!("{name}_full.csv");
            run_convergence_study(&config, Some(csv.as_ref()))?;
            println!("  wrote {csv}");
        }
    }
    Ok(())
}
