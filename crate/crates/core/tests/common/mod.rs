#![allow(dead_code)]

use primal_svm::corpus::{
    featurize_all, synth_corpus, Document, FeatureMode, Instance, SynthVocab, Vocabulary,
};
use primal_svm::eval::FeaturizedSet;
use primal_svm::SparseVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random sparse vector with roughly `density` of `dim` coordinates set, values in [-1, 1].
pub fn random_sparse(rng: &mut ChaCha8Rng, dim: usize, density: f64) -> SparseVector {
    let dense: Vec<f64> = (0..dim)
        .map(|_| {
            if rng.gen_bool(density) {
                rng.gen_range(-1.0..1.0)
            } else {
                0.0
            }
        })
        .collect();
    SparseVector::from_dense(&dense)
}

/// Linearly separable set through the origin: labels are the sign of `u·x` for a hidden
/// unit vector `u`, and points with `|u·x| < margin` are rejected.
pub fn separable_set(seed: u64, n: usize, dim: usize, margin: f64) -> FeaturizedSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let len = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    u.iter_mut().for_each(|v| *v /= len);
    let mut instances = Vec::with_capacity(n);
    while instances.len() < n {
        let x = random_sparse(&mut rng, dim, 0.6);
        let s = x.dot_dense(&u);
        if s.abs() < margin {
            continue;
        }
        let sentiment = if s > 0.0 { 4 } else { 0 };
        instances.push(Instance::new(x, sentiment).unwrap());
    }
    FeaturizedSet { instances, dim }
}

/// Synthetic ordinal phrase corpus, tokenized.
pub fn ordinal_docs(seed: u64, n: usize) -> Vec<Document> {
    synth_corpus(seed, n, SynthVocab::default(), (4, 12))
        .unwrap()
        .iter()
        .map(Document::from_record)
        .collect()
}

/// Featurizes `docs` against a vocabulary built from all of them.
pub fn featurize_docs(docs: &[Document], mode: FeatureMode) -> (Vec<Instance>, Vocabulary) {
    let vocab = Vocabulary::from_tokens(docs.iter().map(|d| &d.tokens)).unwrap();
    (featurize_all(docs, &vocab, mode).unwrap(), vocab)
}
