use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::corpus::{Instance, N_LABELS};
use crate::numerics::SparseVector;
use crate::optim::{OptimizerConfig, Problem};

use super::{decision_value, sign, train_binary, BinarySvm, SvmError};

/// Adjacent label pairs (0,1), (1,2), (2,3), (3,4).
pub const N_PAIRS: usize = N_LABELS - 1;

/// Signs of the four pairwise decision values, ordered by pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignPattern(pub [i8; N_PAIRS]);

impl SignPattern {
    pub fn of(models: &[BinarySvm; N_PAIRS], x: &SparseVector) -> Self {
        SignPattern(std::array::from_fn(|j| sign(decision_value(&models[j], x))))
    }
}

/// Label counts per sign pattern plus the overall label prior.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PatternTable {
    pub counts: BTreeMap<SignPattern, [u64; N_LABELS]>,
    pub prior: [u64; N_LABELS],
}

/// Lowest label with the maximal count.
fn argmax(counts: &[u64; N_LABELS]) -> u8 {
    let mut best = 0;
    for (label, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = label;
        }
    }
    best as u8
}

impl PatternTable {
    pub fn total(&self) -> u64 {
        self.counts.values().flatten().sum()
    }

    /// Most frequent label for `pattern`, falling back to the prior for unseen patterns.
    pub fn most_likely(&self, pattern: &SignPattern) -> u8 {
        argmax(self.counts.get(pattern).unwrap_or(&self.prior))
    }
}

/// Four adjacent-pair models and the pattern table built over the full training set.
#[derive(Debug, Clone, PartialEq)]
pub struct MulticlassSvm {
    pub pairwise: [BinarySvm; N_PAIRS],
    pub table: PatternTable,
}

pub fn build_pattern_table(models: &[BinarySvm; N_PAIRS], data: &[Instance]) -> PatternTable {
    let mut table = PatternTable::default();
    for inst in data {
        let s = SignPattern::of(models, &inst.features);
        table.counts.entry(s).or_default()[inst.sentiment as usize] += 1;
        table.prior[inst.sentiment as usize] += 1;
    }
    table
}

/// Trains the model for pair `(lo, lo+1)` on the instances carrying either label;
/// `lo` maps to −1 and `lo+1` to +1.
fn train_pair(
    data: &[Instance],
    dim: usize,
    lo: u8,
    cfg: &OptimizerConfig,
) -> Result<BinarySvm, SvmError> {
    let hi = lo + 1;
    let pairs: Vec<(&SparseVector, f64)> = data
        .iter()
        .filter(|i| i.sentiment == lo || i.sentiment == hi)
        .map(|i| (&i.features, if i.sentiment == hi { 1.0 } else { -1.0 }))
        .collect();
    for (label, y) in [(lo, -1.0), (hi, 1.0)] {
        if !pairs.iter().any(|p| p.1 == y) {
            return Err(SvmError::MissingClass {
                lo,
                hi,
                missing: label,
            });
        }
    }
    let problem = Problem::from_pairs(pairs, dim)?;
    Ok(train_binary(&problem, cfg)?)
}

/// Trains the four pairwise models (pair `j` reseeded with `seed + j`) and the
/// pattern table.
pub fn train_multiclass(
    data: &[Instance],
    dim: usize,
    cfg: &OptimizerConfig,
    seed: u64,
) -> Result<MulticlassSvm, SvmError> {
    if data.is_empty() {
        return Err(SvmError::Empty);
    }
    let models: Vec<BinarySvm> = (0..N_PAIRS)
        .into_par_iter()
        .map(|j| {
            train_pair(
                data,
                dim,
                j as u8,
                &cfg.with_seed(seed.wrapping_add(j as u64)),
            )
        })
        .collect::<Result<_, _>>()?;
    let pairwise: [BinarySvm; N_PAIRS] = models.try_into().expect("exactly four pair models");
    let table = build_pattern_table(&pairwise, data);
    Ok(MulticlassSvm { pairwise, table })
}

pub fn predict_multiclass(model: &MulticlassSvm, x: &SparseVector) -> u8 {
    model
        .table
        .most_likely(&SignPattern::of(&model.pairwise, x))
}
