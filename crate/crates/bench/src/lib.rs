//! Synthetic data shared by the benchmark targets: a planted-dialect corpus
//! with its lexicon and embedding table, mirroring the shape of real runs.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use moralmap_core::embedding::EmbeddingTable;
use moralmap_core::lexicon::{Foundation, MoralLexicon};

pub struct SyntheticCorpus {
    pub lexicon: MoralLexicon,
    pub table: EmbeddingTable,
    pub documents: Vec<Vec<String>>,
}

/// Documents drawn from four disjoint pole vocabularies plus junk tokens.
pub fn dialect_corpus(seed: u64, n_docs: usize) -> SyntheticCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 10;
    let mut rows: Vec<(String, [f64; 5], f64)> = Vec::new();
    let mut pairs: Vec<(String, Vec<f64>)> = Vec::new();
    let mut pole_terms: Vec<Vec<String>> = Vec::new();

    for f in Foundation::ALL {
        let mut probs = [0.0; 5];
        probs[f.index()] = 0.9;
        for (tag, sign) in [("v", 1.0f64), ("w", -1.0f64)] {
            let mut terms = Vec::new();
            for t in 0..12 {
                let term = format!("{}_{tag}{t}", f.name());
                let mut vec: Vec<f64> = (0..dim)
                    .map(|_| 0.12 * rng.random_range(-1.0..1.0))
                    .collect();
                vec[2 * f.index()] += sign * (1.0 + 0.1 * rng.random_range(-1.0..1.0));
                rows.push((term.clone(), probs, sign * 0.8));
                pairs.push((term.clone(), vec));
                terms.push(term);
            }
            pole_terms.push(terms);
        }
    }
    let lexicon = MoralLexicon::from_rows(rows).unwrap().0;
    let table = EmbeddingTable::from_entries(dim, pairs).unwrap();

    let dialects = [0usize, 3, 4, 9]; // care virtue, fairness vice, loyalty virtue, sanctity vice
    let documents = (0..n_docs)
        .map(|i| {
            let vocabulary = &pole_terms[dialects[i % 4]];
            let len = rng.random_range(3..=8);
            let mut tokens: Vec<String> = (0..len)
                .map(|_| vocabulary[rng.random_range(0..vocabulary.len())].clone())
                .collect();
            for _ in 0..rng.random_range(0..=2) {
                tokens.push(format!("junk{}", rng.random_range(0..50)));
            }
            tokens
        })
        .collect();

    SyntheticCorpus {
        lexicon,
        table,
        documents,
    }
}
