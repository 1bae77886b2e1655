use nalgebra::DMatrix;

use crate::pomdp::sigma_s;
use crate::{Error, Result};

/// Singular values below this are treated as rank deficiency.
pub const SVD_CUTOFF: f64 = 1e-10;

/// `B_a`: the block-diagonal map from `(a', s, s')` to `(a', o, o')`
/// distributions for first action `a`. Block `a'` is `O_a ⊗ O_{a'}` with rows
/// indexed `o * O + o'` and columns `s * S + s'`.
#[derive(Debug, Clone)]
pub struct BlockDiagObservationOperator {
    action: usize,
    num_states: usize,
    num_observations: usize,
    blocks: Vec<DMatrix<f64>>,
    pinv: Vec<DMatrix<f64>>,
    block_sigma_min: Vec<f64>,
    sigma_min: f64,
}

pub fn build_block_diag(observation: &[DMatrix<f64>], action: usize) -> Result<BlockDiagObservationOperator> {
    let oa = observation
        .get(action)
        .ok_or_else(|| Error::Structure(format!("action {action} out of range")))?;
    let (num_observations, num_states) = oa.shape();
    let mut blocks = Vec::with_capacity(observation.len());
    let mut pinv = Vec::with_capacity(observation.len());
    let mut block_sigma_min = Vec::with_capacity(observation.len());
    for (other, ob) in observation.iter().enumerate() {
        if ob.shape() != oa.shape() {
            return Err(Error::Structure(format!(
                "observation[{other}] has shape {:?}, expected {:?}",
                ob.shape(),
                oa.shape()
            )));
        }
        let block = oa.kronecker(ob);
        // singular values of a Kronecker product are the pairwise products
        let smin = if block.nrows() < block.ncols() {
            0.0
        } else {
            sigma_s(oa) * sigma_s(ob)
        };
        if !(smin >= SVD_CUTOFF) {
            return Err(Error::RankDeficient {
                action,
                other_action: other,
                sigma_min: smin,
            });
        }
        // Full column rank, so the pseudoinverse is the left inverse R^-1 Q^T.
        // QR keeps it accurate to machine precision where an SVD of the
        // whole block can lose several digits.
        let qr = block.clone().qr();
        let p = qr
            .r()
            .try_inverse()
            .ok_or_else(|| Error::Structure("singular triangular factor".into()))?
            * qr.q().transpose();
        blocks.push(block);
        pinv.push(p);
        block_sigma_min.push(smin);
    }
    let sigma_min = block_sigma_min.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(BlockDiagObservationOperator {
        action,
        num_states,
        num_observations,
        blocks,
        pinv,
        block_sigma_min,
        sigma_min,
    })
}

/// One operator per action.
pub fn build_operators(observation: &[DMatrix<f64>]) -> Result<Vec<BlockDiagObservationOperator>> {
    (0..observation.len())
        .map(|a| build_block_diag(observation, a))
        .collect()
}

impl BlockDiagObservationOperator {
    pub fn action(&self) -> usize {
        self.action
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_observations(&self) -> usize {
        self.num_observations
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block(&self, other_action: usize) -> &DMatrix<f64> {
        &self.blocks[other_action]
    }

    pub fn block_pinv(&self, other_action: usize) -> &DMatrix<f64> {
        &self.pinv[other_action]
    }

    pub fn block_sigma_min(&self) -> &[f64] {
        &self.block_sigma_min
    }

    /// Smallest singular value of `B_a`.
    pub fn sigma_min(&self) -> f64 {
        self.sigma_min
    }

    /// `B_a x` for `x` of length `A S^2`.
    pub fn forward(&self, d_as2: &[f64]) -> Vec<f64> {
        self.apply_blocks(&self.blocks, d_as2, self.num_states * self.num_states)
    }

    /// `B_a^† y` for `y` of length `A O^2`.
    pub fn apply_pinv(&self, d_ao2: &[f64]) -> Vec<f64> {
        self.apply_blocks(&self.pinv, d_ao2, self.num_observations * self.num_observations)
    }

    fn apply_blocks(&self, blocks: &[DMatrix<f64>], x: &[f64], in_len: usize) -> Vec<f64> {
        assert_eq!(x.len(), in_len * blocks.len(), "operator input length");
        let mut out = Vec::with_capacity(blocks.len() * blocks[0].nrows());
        for (b, chunk) in blocks.iter().zip(x.chunks(in_len)) {
            for r in 0..b.nrows() {
                let mut acc = 0.0;
                for (c, &v) in chunk.iter().enumerate() {
                    acc += b[(r, c)] * v;
                }
                out.push(acc);
            }
        }
        out
    }
}
