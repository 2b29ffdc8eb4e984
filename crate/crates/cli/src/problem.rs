//! Problem-file schema: JSON in, validated algebra/states/generators out.
//!
//! Complex entries are `[re, im]` pairs, matrices are row-major nested
//! arrays. Hermiticity and block support are validated on load, never
//! silently repaired.

use serde::{Deserialize, Serialize};

use vnwass::algebra::{make_state, FdAlgebra, GeneratorSet, State};
use vnwass::linalg::{CMatrix, C64};
use vnwass::solver::{Mode, SolverOptions};

pub type MatrixJson = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgebraJson {
    pub block_dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tensor_factors: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedMatrix {
    pub name: String,
    pub matrix: MatrixJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    pub algebra: AlgebraJson,
    /// named density matrices
    pub states: std::collections::BTreeMap<String, MatrixJson>,
    /// ordered generator list
    pub generators: Vec<NamedMatrix>,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverOptions>,
}

fn default_mode() -> Mode {
    Mode::Modular
}

pub fn matrix_from_json(m: &MatrixJson) -> Result<CMatrix, String> {
    let rows = m.len();
    if rows == 0 {
        return Err("matrix has no rows".into());
    }
    let cols = m[0].len();
    for (i, row) in m.iter().enumerate() {
        if row.len() != cols {
            return Err(format!(
                "row {i} has {} entries, expected {cols}",
                row.len()
            ));
        }
    }
    let data: Vec<C64> = m
        .iter()
        .flat_map(|row| row.iter().map(|&[re, im]| C64::new(re, im)))
        .collect();
    CMatrix::new(rows, cols, data).map_err(|e| e.to_string())
}

#[derive(Debug)]
pub struct LoadedProblem {
    pub states: std::collections::BTreeMap<String, State>,
    pub generators: GeneratorSet,
    pub generator_names: Vec<String>,
    pub mode: Mode,
    pub solver: SolverOptions,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text).map_err(|e| format!("problem file: {e}"))
    }

    pub fn load(&self) -> Result<LoadedProblem, String> {
        let algebra = match self.algebra.tensor_factors {
            Some((d1, d2)) => {
                if self.algebra.block_dims != vec![d1 * d2] {
                    return Err(format!(
                        "tensor factors ({d1},{d2}) need block_dims [{}]",
                        d1 * d2
                    ));
                }
                FdAlgebra::tensor_product(d1, d2).map_err(|e| e.to_string())?
            }
            None => FdAlgebra::new(self.algebra.block_dims.clone()).map_err(|e| e.to_string())?,
        };
        let mut states = std::collections::BTreeMap::new();
        for (name, mj) in &self.states {
            let m = matrix_from_json(mj).map_err(|e| format!("state {name}: {e}"))?;
            let st = make_state(&algebra, m).map_err(|e| format!("state {name}: {e}"))?;
            states.insert(name.clone(), st);
        }
        if self.generators.is_empty() {
            return Err("no generators given".into());
        }
        let mut mats = Vec::new();
        let mut generator_names = Vec::new();
        for g in &self.generators {
            mats.push(
                matrix_from_json(&g.matrix).map_err(|e| format!("generator {}: {e}", g.name))?,
            );
            generator_names.push(g.name.clone());
        }
        let generators = GeneratorSet::new(&algebra, mats).map_err(|e| e.to_string())?;
        Ok(LoadedProblem {
            states,
            generators,
            generator_names,
            mode: self.mode,
            solver: self.solver.clone().unwrap_or_default(),
        })
    }
}
