use crate::{Error, Result};

/// Largest grid [`discretize`] builds without an explicit budget.
pub const DEFAULT_GRID_BUDGET: usize = 1_000_000;

/// All compositions of `m` into `S` non-negative parts, scaled by `1/m`, in
/// lexicographic order of the integer compositions.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefGrid {
    num_states: usize,
    resolution: usize,
    points: Vec<f64>,
}

fn binomial(n: u128, k: u128) -> Option<u128> {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul(n - i)? / (i + 1);
    }
    Some(acc)
}

pub fn discretize(num_states: usize, resolution: usize) -> Result<BeliefGrid> {
    discretize_with_budget(num_states, resolution, DEFAULT_GRID_BUDGET)
}

pub fn discretize_with_budget(num_states: usize, resolution: usize, budget: usize) -> Result<BeliefGrid> {
    if num_states == 0 || resolution == 0 {
        return Err(Error::Domain("grid needs S >= 1 and m >= 1".into()));
    }
    let count = binomial((resolution + num_states - 1) as u128, (num_states - 1) as u128).unwrap_or(u128::MAX);
    if count > budget as u128 {
        return Err(Error::GridTooLarge { points: count, budget });
    }
    let mut points = Vec::with_capacity(count as usize * num_states);
    let mut comp = vec![0usize; num_states];
    enumerate(&mut comp, 0, resolution, resolution, &mut points);
    debug_assert_eq!(points.len(), count as usize * num_states);
    Ok(BeliefGrid {
        num_states,
        resolution,
        points,
    })
}

fn enumerate(comp: &mut [usize], pos: usize, remaining: usize, m: usize, out: &mut Vec<f64>) {
    if pos + 1 == comp.len() {
        comp[pos] = remaining;
        out.extend(comp.iter().map(|&c| c as f64 / m as f64));
        return;
    }
    for c in 0..=remaining {
        comp[pos] = c;
        enumerate(comp, pos + 1, remaining - c, m, out);
    }
}

impl BeliefGrid {
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.num_states
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, index: usize) -> &[f64] {
        &self.points[index * self.num_states..(index + 1) * self.num_states]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks(self.num_states)
    }

    /// Index of the L1-nearest grid point; ties go to the lowest index.
    pub fn project(&self, b: &[f64]) -> usize {
        assert_eq!(b.len(), self.num_states, "belief length");
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.points().enumerate() {
            let mut d = 0.0;
            for (x, y) in p.iter().zip(b) {
                d += (x - y).abs();
                if d >= best_d {
                    break;
                }
            }
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}
