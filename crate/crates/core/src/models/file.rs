//! JSON model files.
//!
//! ```json
//! {
//!   "name": "pendulum",
//!   "base_dim": 1, "rank": 1,
//!   "coord_names": ["q"],
//!   "domain": [null],
//!   "anchor": [["1"]],
//!   "structure": [[["0"]]],
//!   "cometric": [["1"]],
//!   "potential": "1 - cos(q)",
//!   "base_log_density": "0",
//!   "fiber_log_density": "0",
//!   "certificate_sigma": "0"
//! }
//! ```
//!
//! `domain` entries are `[lower, upper]` or `null` for an unbounded axis. Expressions
//! (see [`crate::expr`]) range over the coordinate names; `potential` may also use them,
//! and entries may be given as plain numbers. Instead of `cometric`/`potential`,
//! `"builtin_hamiltonian": "kinetic"` selects `G = 1, V = 0`. A file may instead name a
//! built-in model with `"builtin"` and override its parameters with `"params"`.
//!
//! File models are assembled unchecked so that `validate` can report their residuals.

use super::{
    builtin, make_beanie, make_heavy_top, make_lie_algebra, make_trivial_atiyah, Casimir,
    ExpectedProperties, HeavyTopParams, LieAlgebraName, ModelBundle, SamplingHints,
};
use crate::algebroid::{BaseChart, ChartedAlgebroid, StructureTensor};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fields::BaseField;
use crate::modular::{UnimodularityCertificate, VolumeSpec};
use crate::poisson::MechanicalHamiltonian;
use crate::sampling::SampleBox;
use nalgebra::DMatrix;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Entry {
    Number(f64),
    Text(String),
}

impl Entry {
    fn parse(&self, vars: &[String]) -> Result<Expr> {
        match self {
            Entry::Number(v) => Ok(Expr::Num(*v)),
            Entry::Text(s) => Expr::parse(s, vars),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    name: Option<String>,
    base_dim: Option<usize>,
    rank: Option<usize>,
    coord_names: Option<Vec<String>>,
    domain: Option<Vec<Option<[f64; 2]>>>,
    builtin: Option<String>,
    #[serde(default)]
    params: BTreeMap<String, f64>,
    anchor: Option<Vec<Vec<Entry>>>,
    structure: Option<Vec<Vec<Vec<Entry>>>>,
    cometric: Option<Vec<Vec<Entry>>>,
    potential: Option<Entry>,
    builtin_hamiltonian: Option<String>,
    base_log_density: Option<Entry>,
    fiber_log_density: Option<Entry>,
    certificate_sigma: Option<Entry>,
}

pub fn load_model_file(path: &Path) -> Result<ModelBundle> {
    parse_model_file(&std::fs::read_to_string(path)?)
}

pub fn parse_model_file(text: &str) -> Result<ModelBundle> {
    let file: ModelFile = serde_json::from_str(text)?;
    match file.builtin.clone() {
        Some(name) => from_builtin(&name, file),
        None => from_expressions(file),
    }
}

fn take(params: &mut BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.remove(key).unwrap_or(default)
}

fn diagonal_inertia(params: &mut BTreeMap<String, f64>, default: &DMatrix<f64>) -> DMatrix<f64> {
    let mut inertia = default.clone();
    for i in 0..inertia.nrows() {
        inertia[(i, i)] = take(params, &format!("I{}", i + 1), inertia[(i, i)]);
    }
    inertia
}

fn from_builtin(name: &str, file: ModelFile) -> Result<ModelBundle> {
    let expression_keys = [
        ("anchor", file.anchor.is_some()),
        ("structure", file.structure.is_some()),
        ("cometric", file.cometric.is_some()),
        ("potential", file.potential.is_some()),
        ("builtin_hamiltonian", file.builtin_hamiltonian.is_some()),
        ("coord_names", file.coord_names.is_some()),
        ("domain", file.domain.is_some()),
        ("base_log_density", file.base_log_density.is_some()),
        ("fiber_log_density", file.fiber_log_density.is_some()),
        ("certificate_sigma", file.certificate_sigma.is_some()),
    ];
    if let Some((key, _)) = expression_keys.iter().find(|(_, present)| *present) {
        return Err(Error::Model(format!(
            "`{key}` cannot be combined with `builtin`"
        )));
    }
    let mut params = file.params;
    let bundle = match name {
        "so3" | "se2" | "aff1" | "heisenberg" => {
            let lie = LieAlgebraName::parse(name)?;
            let inertia = diagonal_inertia(&mut params, &lie.default_inertia());
            make_lie_algebra(name, Some(inertia))?
        }
        "heavy-top" => {
            let d = HeavyTopParams::default();
            let inertia = diagonal_inertia(&mut params, &d.inertia);
            make_heavy_top(HeavyTopParams {
                mass: take(&mut params, "mass", d.mass),
                gravity: take(&mut params, "gravity", d.gravity),
                length: take(&mut params, "length", d.length),
                inertia,
                axis: [
                    take(&mut params, "e1", d.axis[0]),
                    take(&mut params, "e2", d.axis[1]),
                    take(&mut params, "e3", d.axis[2]),
                ],
            })?
        }
        "beanie" => make_beanie(
            take(&mut params, "mass", 1.0),
            take(&mut params, "I1", 1.0),
            take(&mut params, "I2", 0.5),
        )?,
        "atiyah-so3" | "atiyah-aff1" => {
            let m_base = take(&mut params, "m_base", 1.0);
            if m_base.fract() != 0.0 || m_base < 1.0 {
                return Err(Error::Model(format!(
                    "m_base must be a positive integer, got {m_base}"
                )));
            }
            make_trivial_atiyah(&name["atiyah-".len()..], m_base as usize)?
        }
        other => builtin(other)?,
    };
    if let Some(key) = params.keys().next() {
        return Err(Error::Model(format!(
            "unknown parameter `{key}` for {name}"
        )));
    }
    if file.base_dim.is_some_and(|m| m != bundle.base_dim())
        || file.rank.is_some_and(|n| n != bundle.rank())
    {
        return Err(Error::Dimension(format!(
            "{name} has base_dim {} and rank {}",
            bundle.base_dim(),
            bundle.rank()
        )));
    }
    Ok(match file.name {
        Some(n) => ModelBundle { name: n, ..bundle },
        None => bundle,
    })
}

fn matrix_of(
    label: &str,
    rows: &[Vec<Entry>],
    shape: (usize, usize),
    vars: &[String],
) -> Result<Vec<Vec<Expr>>> {
    if rows.len() != shape.0 || rows.iter().any(|r| r.len() != shape.1) {
        return Err(Error::Dimension(format!(
            "`{label}` must be {}x{}",
            shape.0, shape.1
        )));
    }
    rows.iter()
        .map(|r| r.iter().map(|e| e.parse(vars)).collect())
        .collect()
}

fn eval_matrix(exprs: &[Vec<Expr>], cols: usize, q: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(exprs.len(), cols, |r, c| exprs[r][c].eval(q))
}

fn derivative_matrices(exprs: &[Vec<Expr>], m: usize) -> Vec<Vec<Vec<Expr>>> {
    (0..m)
        .map(|j| {
            exprs
                .iter()
                .map(|row| row.iter().map(|e| e.derivative(j)).collect())
                .collect()
        })
        .collect()
}

fn optional_field(entry: &Option<Entry>, vars: &[String]) -> Result<BaseField> {
    match entry {
        Some(e) => Ok(BaseField::from_expr(e.parse(vars)?, vars.len())),
        None => Ok(BaseField::zero()),
    }
}

fn from_expressions(file: ModelFile) -> Result<ModelBundle> {
    let missing = |key: &str| Error::Model(format!("model file needs `{key}` (or `builtin`)"));
    let m = file.base_dim.ok_or_else(|| missing("base_dim"))?;
    let n = file.rank.ok_or_else(|| missing("rank"))?;
    if !file.params.is_empty() {
        return Err(Error::Model(
            "`params` only applies to `builtin` models".into(),
        ));
    }
    let names = file
        .coord_names
        .unwrap_or_else(|| (1..=m).map(|i| format!("q{i}")).collect());
    if names.len() != m {
        return Err(Error::Dimension(format!(
            "coord_names has {} entries, base_dim is {m}",
            names.len()
        )));
    }
    let domain: Vec<(f64, f64)> = match file.domain {
        None => vec![(f64::NEG_INFINITY, f64::INFINITY); m],
        Some(d) => d
            .into_iter()
            .map(|axis| axis.map_or((f64::NEG_INFINITY, f64::INFINITY), |[lo, hi]| (lo, hi)))
            .collect(),
    };
    let chart = BaseChart::new(names.clone(), domain)?;

    let anchor_rows = match (&file.anchor, m) {
        (Some(a), _) => a.clone(),
        (None, 0) => Vec::new(),
        (None, _) => return Err(missing("anchor")),
    };
    let anchor = matrix_of("anchor", &anchor_rows, (m, n), &names)?;
    let anchor_d = derivative_matrices(&anchor, m);

    let structure: Vec<Vec<Vec<Expr>>> = match &file.structure {
        None => vec![vec![vec![Expr::Num(0.0); n]; n]; n],
        Some(s) => {
            if s.len() != n {
                return Err(Error::Dimension(format!("`structure` must be {n}x{n}x{n}")));
            }
            s.iter()
                .map(|layer| matrix_of("structure", layer, (n, n), &names))
                .collect::<Result<_>>()?
        }
    };
    let structure_d: Vec<Vec<Vec<Vec<Expr>>>> = (0..m)
        .map(|j| {
            structure
                .iter()
                .map(|layer| derivative_matrices(layer, m).swap_remove(j))
                .collect()
        })
        .collect();
    let to_tensor = move |layers: &[Vec<Vec<Expr>>], q: &[f64]| {
        let mut c = StructureTensor::zeros(layers.len());
        for (g, layer) in layers.iter().enumerate() {
            for (a, row) in layer.iter().enumerate() {
                for (b, e) in row.iter().enumerate() {
                    c.set(g, a, b, e.eval(q));
                }
            }
        }
        c
    };

    let alg = {
        let (anchor_v, anchor_dv) = (anchor.clone(), anchor_d.clone());
        let (structure_v, structure_dv) = (structure.clone(), structure_d.clone());
        let to_tensor_d = to_tensor;
        ChartedAlgebroid::builder(chart.clone(), n)
            .anchor(move |q| eval_matrix(&anchor_v, n, q))
            .anchor_jacobian(move |q| anchor_dv.iter().map(|d| eval_matrix(d, n, q)).collect())
            .structure(move |q| to_tensor(&structure_v, q))
            .structure_jacobian(move |q| structure_dv.iter().map(|d| to_tensor_d(d, q)).collect())
            .build()?
    };

    let hamiltonian = match (&file.builtin_hamiltonian, &file.cometric, &file.potential) {
        (Some(kind), None, None) if kind == "kinetic" => {
            MechanicalHamiltonian::kinetic(DMatrix::identity(n, n))
        }
        (Some(kind), None, None) => {
            return Err(Error::Model(format!(
                "unknown builtin_hamiltonian {kind:?} (expected \"kinetic\")"
            )))
        }
        (Some(_), _, _) => {
            return Err(Error::Model(
                "`builtin_hamiltonian` excludes `cometric` and `potential`".into(),
            ))
        }
        (None, cometric, potential) => {
            let g = match cometric {
                Some(rows) => matrix_of("cometric", rows, (n, n), &names)?,
                None => return Err(missing("cometric")),
            };
            let g_d = derivative_matrices(&g, m);
            let potential = optional_field(potential, &names)?;
            let g_v = g.clone();
            MechanicalHamiltonian::new(move |q| eval_matrix(&g_v, n, q), potential)
                .with_cometric_jacobian(move |q| g_d.iter().map(|d| eval_matrix(d, n, q)).collect())
        }
    };

    let volume = VolumeSpec::new(
        optional_field(&file.base_log_density, &names)?,
        optional_field(&file.fiber_log_density, &names)?,
    );
    let certificate = file
        .certificate_sigma
        .as_ref()
        .map(|e| optional_field(&Some(e.clone()), &names).map(UnimodularityCertificate::new))
        .transpose()?;
    let unimodular = if certificate.is_some() {
        Some(true)
    } else if m == 0 {
        Some(crate::modular::modular_character(&alg)?.amax() == 0.0)
    } else {
        None
    };
    let base = if m == 0 {
        SampleBox::new(vec![])
    } else {
        chart.sample_box(2.0, 0.01)
    };
    Ok(ModelBundle::unchecked(
        file.name.unwrap_or_else(|| "model-file".into()),
        "Model defined by expressions",
        alg,
        hamiltonian,
        volume,
        certificate,
        BTreeMap::new(),
        ExpectedProperties {
            unimodular,
            casimirs: Vec::<Casimir>::new(),
        },
        SamplingHints::new(base, 2.0, n),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    const PENDULUM: &str = r#"{
        "name": "pendulum", "base_dim": 1, "rank": 1, "coord_names": ["q"],
        "domain": [null], "anchor": [["1"]], "cometric": [[1]], "potential": "1 - cos(q)"
    }"#;

    #[test]
    fn expression_model_matches_hand_values() {
        let b = parse_model_file(PENDULUM).unwrap();
        assert_eq!(b.name, "pendulum");
        assert_eq!(b.hamiltonian.potential().value(&[0.5]), 1.0 - 0.5f64.cos());
        assert!(b.structure_report(0).unwrap().passes(1e-12));
        assert_eq!(b.expected.unimodular, None);
    }

    #[test]
    fn builtin_with_params() {
        let b = parse_model_file(r#"{"builtin": "beanie", "params": {"I2": 2.0}}"#).unwrap();
        assert_eq!(b.params["I2"], 2.0);
        let so3 = parse_model_file(r#"{"builtin": "so3", "params": {"I3": 5}}"#).unwrap();
        assert_eq!(so3.params["I3"], 5.0);
    }

    #[test]
    fn malformed_files_are_input_errors() {
        for text in [
            "{",
            r#"{"builtin": "beanie", "params": {"bogus": 1}}"#,
            r#"{"builtin": "beanie", "anchor": [["1"]]}"#,
            r#"{"base_dim": 1, "rank": 1, "anchor": [["1", "2"]], "builtin_hamiltonian": "kinetic"}"#,
            r#"{"base_dim": 1, "rank": 1, "anchor": [["q +"]], "builtin_hamiltonian": "kinetic"}"#,
            r#"{"base_dim": 1, "rank": 1, "anchor": [["1"]], "unknown": 3}"#,
            r#"{"base_dim": 0, "rank": 2, "structure": [[["0","1"],["1","0"]],[["0","0"],["0","0"]]], "builtin_hamiltonian": "kinetic"}"#,
        ] {
            let err = parse_model_file(text).unwrap_err();
            assert!(err.is_input_error(), "{text}: {err}");
        }
    }

    #[test]
    fn file_lie_algebra_reports_character() {
        let b = parse_model_file(
            r#"{"base_dim": 0, "rank": 2, "structure": [[["0","0"],["0","0"]],[["0","1"],["-1","0"]]], "builtin_hamiltonian": "kinetic"}"#,
        )
        .unwrap();
        assert_eq!(b.expected.unimodular, Some(false));
    }
}
