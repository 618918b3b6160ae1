//! JSON run configuration.
//!
//! ```json
//! {
//!   "domain": {"origin": [0, 0], "extent": [2, 1]},
//!   "delta": 0.05,
//!   "theta": {"box": {"origin": [0, 0], "extent": [0.1, 1]}},
//!   "load": {"background": [0, 0], "overrides": [
//!     {"region": {"box": {"origin": [1.9, 0], "extent": [0.1, 1]}}, "value": [100, 0]}]},
//!   "k_field": {"background": 100},
//!   "l_field": {"background": 800},
//!   "kernel": {"name": "inverse_distance"},
//!   "schemes": ["FA", "PAAC"],
//!   "kappas": ["1/40", "1/60", 0.0125],
//!   "reference_kappa": "1/160",
//!   "solver": {"tol": 1e-10, "precond": "jacobi"},
//!   "output": {"csv": "study.csv"}
//! }
//! ```
//!
//! Kappas are numbers or strings holding a number or a fraction `a/b`.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::geometry::Region;
use crate::kernels::{Kernel, KernelVariant};
use crate::lattice::BoxDomain;
use crate::material::{ScalarField, VectorField};
use crate::study::{builtin_problem, ProblemSpec, StudyConfig};
use crate::system::SolverSettings;
use crate::weights::WeightScheme;

/// A grid spacing as written in the config.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kappa(pub f64);

/// Parses `"0.025"`, `"1/40"`, `"1 / 40"`.
pub fn parse_kappa(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a
                .trim()
                .parse()
                .map_err(|_| format!("bad numerator in {s:?}"))?;
            let b: f64 = b
                .trim()
                .parse()
                .map_err(|_| format!("bad denominator in {s:?}"))?;
            a / b
        }
        None => s.parse().map_err(|_| format!("bad number {s:?}"))?,
    };
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("kappa must be positive and finite, got {s:?}"))
    }
}

impl Serialize for Kappa {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Kappa {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Kappa;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a positive number or a string like \"1/40\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Kappa, E> {
                if v > 0.0 && v.is_finite() {
                    Ok(Kappa(v))
                } else {
                    Err(E::custom(format!(
                        "kappa must be positive and finite, got {v}"
                    )))
                }
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Kappa, E> {
                self.visit_f64(v as f64)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Kappa, E> {
                self.visit_f64(v as f64)
            }
            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Kappa, E> {
                parse_kappa(v).map(Kappa).map_err(E::custom)
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    /// Study CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    /// Directory receiving binary field dumps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fields: Option<PathBuf>,
}

fn default_schemes() -> Vec<WeightScheme> {
    vec![WeightScheme::Fa, WeightScheme::Paac]
}

fn default_reference_scheme() -> WeightScheme {
    WeightScheme::Paac
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: BoxDomain,
    pub delta: f64,
    pub theta: Region,
    pub load: VectorField,
    pub k_field: ScalarField,
    pub l_field: ScalarField,
    pub kernel: KernelVariant,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<WeightScheme>,
    pub kappas: Vec<Kappa>,
    pub reference_kappa: Kappa,
    #[serde(default = "default_reference_scheme")]
    pub reference_scheme: WeightScheme,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default)]
    pub output: OutputPaths,
    /// Write measured wall times into the CSV; `false` gives reproducible bytes.
    #[serde(default = "default_true")]
    pub record_timing: bool,
    /// `i,j,w` CSV used when the scheme is `custom`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub custom_weights: Option<PathBuf>,
    /// Accept custom tables that break the range or inside/outside rules.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub allow_invalid_weights: bool,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.problem()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// A built-in problem with the scaled study settings.
    pub fn builtin(name: &str) -> Result<Self> {
        let p = builtin_problem(name)?;
        let study = StudyConfig::scaled(p.clone());
        Ok(RunConfig {
            domain: p.domain,
            delta: p.delta,
            theta: p.theta,
            load: p.load,
            k_field: p.k_field,
            l_field: p.l_field,
            kernel: p.kernel.variant().clone(),
            schemes: study.schemes,
            kappas: study.kappas.into_iter().map(Kappa).collect(),
            reference_kappa: Kappa(study.reference_kappa),
            reference_scheme: study.reference_scheme,
            solver: study.solver,
            output: OutputPaths::default(),
            record_timing: true,
            custom_weights: None,
            allow_invalid_weights: false,
        })
    }

    pub fn problem(&self) -> Result<ProblemSpec> {
        let field = |name: &str, e: Error| Error::Config(format!("{name}: {e}"));
        let kernel =
            Kernel::new(self.delta, self.kernel.clone()).map_err(|e| field("kernel", e))?;
        let spec = ProblemSpec {
            domain: BoxDomain::new(self.domain.origin, self.domain.extent)
                .map_err(|e| field("domain", e))?,
            delta: self.delta,
            theta: self.theta,
            load: self.load.clone(),
            k_field: self.k_field.clone(),
            l_field: self.l_field.clone(),
            kernel,
        };
        self.theta.validate().map_err(|e| field("theta", e))?;
        spec.validate().map_err(|e| field("problem", e))?;
        Ok(spec)
    }

    pub fn study(&self) -> Result<StudyConfig> {
        let field = |name: &str, e: Error| Error::Config(format!("{name}: {e}"));
        let problem = self.problem()?;
        for (n, k) in self.kappas.iter().enumerate() {
            problem
                .domain
                .cell_counts(k.0)
                .map_err(|e| field(&format!("kappas[{n}]"), e))?;
        }
        let cfg = StudyConfig {
            problem,
            kappas: self.kappas.iter().map(|k| k.0).collect(),
            reference_kappa: self.reference_kappa.0,
            schemes: self.schemes.clone(),
            reference_scheme: self.reference_scheme,
            solver: self.solver,
            record_timing: self.record_timing,
            field_dir: self.output.fields.clone(),
        };
        cfg.validate().map_err(|e| match e {
            Error::Config(m) => Error::Config(m),
            other => field("study", other),
        })?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kappa_forms() {
        assert_eq!(parse_kappa("1/40").unwrap(), 1.0 / 40.0);
        assert_eq!(parse_kappa(" 0.25 ").unwrap(), 0.25);
        assert!(parse_kappa("0").is_err());
        assert!(parse_kappa("1/x").is_err());
        let v: Vec<Kappa> = serde_json::from_str(r#"[0.5, 1, "1/60"]"#).unwrap();
        assert_eq!(v, vec![Kappa(0.5), Kappa(1.0), Kappa(1.0 / 60.0)]);
    }

    #[test]
    fn builtin_round_trip() {
        for name in ["bar", "inclusion"] {
            let c = RunConfig::builtin(name).unwrap();
            let back = RunConfig::from_json(&c.to_json()).unwrap();
            assert_eq!(c, back);
            assert_eq!(back.problem().unwrap(), builtin_problem(name).unwrap());
            back.study().unwrap();
        }
    }

    #[test]
    fn unknown_field_is_named() {
        let mut v: serde_json::Value =
            serde_json::from_str(&RunConfig::builtin("bar").unwrap().to_json()).unwrap();
        v["dleta"] = serde_json::json!(0.05);
        let err = RunConfig::from_json(&v.to_string())
            .unwrap_err()
            .to_string();
        assert!(err.contains("dleta"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn bad_kappa_is_located() {
        let mut c = RunConfig::builtin("bar").unwrap();
        c.kappas.push(Kappa(0.3));
        let err = c.study().unwrap_err().to_string();
        assert!(err.contains("kappas[3]"), "{err}");
    }
}
