//! A configuration written by hand: conical kernel, a stiff square insert and
//! a shear load, solved with both weight schemes.

use peristatic::config::RunConfig;
use peristatic::study::run_problem;
use peristatic::WeightScheme;

const CONFIG: &str = r#"{
  "domain": {"origin": [0, 0], "extent": [1, 0.5]},
  "delta": 0.06,
  "theta": {"box": {"origin": [0, 0], "extent": [0.12, 0.5]}},
  "load": {"background": [0, 0], "overrides": [
    {"region": {"box": {"origin": [0.9, 0], "extent": [0.1, 0.5]}}, "value": [0, -50]}
  ]},
  "k_field": {"background": 100, "overrides": [
    {"region": {"box": {"origin": [0.4, 0.15], "extent": [0.2, 0.2]}}, "value": 1000}
  ]},
  "l_field": {"background": 400},
  "kernel": {"name": "conical", "params": {"scale": 1.0}},
  "kappas": ["1/50"],
  "reference_kappa": "1/100"
}"#;

fn main() -> peristatic::Result<()> {
    let config = RunConfig::from_json(CONFIG)?;
    let problem = config.problem()?;
    for scheme in [WeightScheme::Fa, WeightScheme::Paac] {
        let run = run_problem(&problem, 1.0 / 50.0, scheme, &config.solver)?;
        let tip = run.field.value(run.field.nx - 1, run.field.ny / 2);
        println!(
            "{scheme:>4}: {} iterations, tip deflection {:+.6e}",
            run.stats.iterations, tip.y
        );
    }
    Ok(())
}
