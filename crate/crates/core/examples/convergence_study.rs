//! The scaled convergence study: FA and PAAC errors against a PAAC reference.
//!
//! `cargo run --release --example convergence_study -- [bar|inclusion] [out.csv]`

use peristatic::study::rows_to_csv;
use peristatic::{builtin_problem, run_convergence_study, StudyConfig, WeightScheme};

fn main() -> peristatic::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let name = args.first().map(String::as_str).unwrap_or("bar");
    let config = StudyConfig::scaled(builtin_problem(name)?);
    eprintln!("{}", config.estimated_cost());
    let rows = run_convergence_study(&config, args.get(1).map(|s| s.as_ref()))?;
    print!("{}", rows_to_csv(&rows));
    for scheme in [WeightScheme::Fa, WeightScheme::Paac] {
        let errs: Vec<String> = rows
            .iter()
            .filter(|r| r.scheme == scheme)
            .map(|r| format!("{:.3e}", r.l2_error))
            .collect();
        eprintln!("{scheme:>4}: {}", errs.join(" -> "));
    }
    Ok(())
}
