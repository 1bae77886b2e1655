use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{validate_assumptions, PomdpModel};
use crate::docfmt::to_json_f17;
use crate::{Error, Result};

/// Portable model document. Nested arrays use `transition[a][s][s']` and
/// `observation[a][o][s]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct ModelDocument {
    pub S: usize,
    pub A: usize,
    pub O: usize,
    pub transition: Vec<Vec<Vec<f64>>>,
    pub observation: Vec<Vec<Vec<f64>>>,
    pub reward: Vec<f64>,
    pub nu: Vec<f64>,
    pub seed: Option<u64>,
    pub epsilon: f64,
    pub alpha: f64,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>], nrows: usize, ncols: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Structure(format!("{what} is not {nrows}x{ncols}")));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |r, c| rows[r][c]))
}

impl ModelDocument {
    pub fn from_model(model: &PomdpModel, seed: Option<u64>) -> Self {
        let rep = validate_assumptions(model);
        Self {
            S: model.num_states(),
            A: model.num_actions(),
            O: model.num_observations(),
            transition: model.transition().iter().map(rows).collect(),
            observation: model.observation().iter().map(rows).collect(),
            reward: model.reward().to_vec(),
            nu: model.init_dist().to_vec(),
            seed,
            epsilon: rep.epsilon,
            alpha: rep.alpha,
        }
    }

    pub fn to_model(&self) -> Result<PomdpModel> {
        if self.transition.len() != self.A || self.observation.len() != self.A {
            return Err(Error::Structure(format!("expected {} action matrices", self.A)));
        }
        if self.reward.len() != self.O || self.nu.len() != self.S {
            return Err(Error::Structure("reward or nu length mismatch".into()));
        }
        let t = self
            .transition
            .iter()
            .enumerate()
            .map(|(a, m)| from_rows(m, self.S, self.S, &format!("transition[{a}]")))
            .collect::<Result<Vec<_>>>()?;
        let o = self
            .observation
            .iter()
            .enumerate()
            .map(|(a, m)| from_rows(m, self.O, self.S, &format!("observation[{a}]")))
            .collect::<Result<Vec<_>>>()?;
        PomdpModel::new(t, o, self.reward.clone(), self.nu.clone())
    }

    pub fn to_text(&self) -> Result<String> {
        to_json_f17(self)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}
