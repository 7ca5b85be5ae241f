//! Foundation axes and document scoring: maps a bag of tokens to bias,
//! intensity, and virtue/vice activations on each of the five foundation
//! axes, and packs those into the 10-dimensional moral embedding.
//!
//! An axis points from the vice-pole centroid to the virtue-pole centroid,
//! normalized to unit length. A document's bias on an axis is the
//! count-weighted mean cosine projection of its contributing tokens;
//! intensity is the count-weighted second moment of the projections about a
//! corpus baseline bias.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::embedding::{self, EmbeddingTable};
use crate::error::{Error, Result};
use crate::lexicon::{Foundation, MoralLexicon, Pole};

/// One unit-norm semantic axis anchored by a foundation's pole centroids.
#[derive(Debug, Clone, Serialize)]
pub struct FoundationAxis {
    pub foundation: Foundation,
    /// Unit vector from the vice centroid toward the virtue centroid.
    pub direction: Vec<f64>,
    pub virtue_centroid: Vec<f64>,
    pub vice_centroid: Vec<f64>,
    pub virtue_terms_resolved: usize,
    pub virtue_terms_requested: usize,
    pub vice_terms_resolved: usize,
    pub vice_terms_requested: usize,
}

/// The five axes in canonical order plus the per-foundation corpus baseline
/// bias used by intensity scoring.
#[derive(Debug, Clone, Serialize)]
pub struct AxisSet {
    pub axes: Vec<FoundationAxis>,
    pub baseline_bias: [f64; 5],
}

impl AxisSet {
    pub fn axis(&self, foundation: Foundation) -> &FoundationAxis {
        &self.axes[foundation.index()]
    }

    /// Same axes with a different baseline.
    pub fn with_baseline(mut self, baseline: [f64; 5]) -> AxisSet {
        self.baseline_bias = baseline;
        self
    }
}

/// Where intensity's reference point comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMode {
    /// Corpus-level weighted mean projection per axis.
    #[default]
    Corpus,
    /// Force the baseline to zero on every axis.
    Zero,
}

impl std::fmt::Display for BaselineMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BaselineMode::Corpus => "corpus",
            BaselineMode::Zero => "zero",
        })
    }
}

impl std::str::FromStr for BaselineMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corpus" => Ok(BaselineMode::Corpus),
            "zero" => Ok(BaselineMode::Zero),
            other => Err(Error::Config(format!("unknown baseline mode `{other}`"))),
        }
    }
}

/// Build the five axes from the lexicon's pole sets. Every foundation needs
/// at least one resolvable term per pole.
pub fn build_axes(lexicon: &MoralLexicon, table: &EmbeddingTable) -> Result<AxisSet> {
    let mut axes = Vec::with_capacity(5);
    for foundation in Foundation::ALL {
        let mut centroids = [const { None::<embedding::Centroid> }; 2];
        for pole in Pole::BOTH {
            let terms = lexicon.pole_terms(foundation, pole);
            let c = embedding::centroid(terms.iter().map(String::as_str), table)
                .map_err(|_| Error::UnresolvablePole { foundation, pole })?;
            centroids[pole.index()] = Some(c);
        }
        let virtue = centroids[Pole::Virtue.index()].take().unwrap();
        let vice = centroids[Pole::Vice.index()].take().unwrap();

        let diff: Vec<f64> = virtue
            .vector
            .iter()
            .zip(&vice.vector)
            .map(|(a, b)| a - b)
            .collect();
        if embedding::norm(&diff) < 1e-12 {
            return Err(Error::DegenerateAxis { foundation });
        }
        let direction = embedding::normalize(&diff)?;

        axes.push(FoundationAxis {
            foundation,
            direction,
            virtue_centroid: virtue.vector,
            vice_centroid: vice.vector,
            virtue_terms_resolved: virtue.resolved,
            virtue_terms_requested: virtue.requested,
            vice_terms_resolved: vice.resolved,
            vice_terms_requested: vice.requested,
        });
    }
    Ok(AxisSet {
        axes,
        baseline_bias: [0.0; 5],
    })
}

/// Cosine projection of a term onto an axis; `None` when the term does not
/// resolve in the table.
pub fn project_word(term: &str, axis: &FoundationAxis, table: &EmbeddingTable) -> Option<f64> {
    let v = table.get(term)?;
    embedding::cosine(v, &axis.direction).ok()
}

/// Per-document activations on every axis.
#[derive(Debug, Clone, Serialize)]
pub struct MoralScore {
    pub doc_id: String,
    /// Count-weighted mean projection per foundation, in [-1, 1].
    pub bias: [f64; 5],
    /// Count-weighted second moment about the baseline, >= 0.
    pub intensity: [f64; 5],
    /// Positive-projection mass per foundation.
    pub virtue: [f64; 5],
    /// Negative-projection mass per foundation (as a positive number).
    pub vice: [f64; 5],
    /// Number of contributing token occurrences.
    pub contributing_tokens: usize,
}

/// Layout of the 10-dimensional vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingMode {
    /// `[virtue_f, vice_f]` per foundation, canonical order.
    #[default]
    Poles,
    /// `[bias_f, intensity_f]` per foundation, canonical order.
    Frameaxis,
}

impl std::fmt::Display for EmbeddingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EmbeddingMode::Poles => "poles",
            EmbeddingMode::Frameaxis => "frameaxis",
        })
    }
}

impl std::str::FromStr for EmbeddingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "poles" => Ok(EmbeddingMode::Poles),
            "frameaxis" => Ok(EmbeddingMode::Frameaxis),
            other => Err(Error::Config(format!("unknown embedding mode `{other}`"))),
        }
    }
}

/// A document's position in the moral embedding space.
#[derive(Debug, Clone, Serialize)]
pub struct MoralEmbedding {
    pub doc_id: String,
    pub mode: EmbeddingMode,
    pub values: [f64; 10],
}

/// Pack a score into the fixed 10-vector layout.
pub fn embed(score: &MoralScore, mode: EmbeddingMode) -> MoralEmbedding {
    let mut values = [0.0; 10];
    for f in Foundation::ALL {
        let i = f.index();
        match mode {
            EmbeddingMode::Poles => {
                values[2 * i] = score.virtue[i];
                values[2 * i + 1] = score.vice[i];
            }
            EmbeddingMode::Frameaxis => {
                values[2 * i] = score.bias[i];
                values[2 * i + 1] = score.intensity[i];
            }
        }
    }
    MoralEmbedding {
        doc_id: score.doc_id.clone(),
        mode,
        values,
    }
}

/// Column names matching the 10-vector layout for a mode.
pub fn embedding_dim_names(mode: EmbeddingMode) -> [String; 10] {
    let mut names: Vec<String> = Vec::with_capacity(10);
    for f in Foundation::ALL {
        match mode {
            EmbeddingMode::Poles => {
                names.push(format!("{}_virtue", f.name()));
                names.push(format!("{}_vice", f.name()));
            }
            EmbeddingMode::Frameaxis => {
                names.push(format!("{}_bias", f.name()));
                names.push(format!("{}_intensity", f.name()));
            }
        }
    }
    names.try_into().unwrap()
}

/// Precomputed scoring state: per-term axis projections for every lexicon
/// term that resolves in the embedding table, plus the active baseline.
///
/// Projections are taken once via unit-normalized term vectors (the
/// pre-normalized cosine fast path); scoring a document is then a pure
/// function of its token counts. Token counts are grouped through a sorted
/// map, so scores are exactly invariant under token permutation.
pub struct Scorer {
    projections: HashMap<String, [f64; 5]>,
    baseline: [f64; 5],
}

impl Scorer {
    pub fn new(lexicon: &MoralLexicon, axes: &AxisSet, table: &EmbeddingTable) -> Scorer {
        let mut projections = HashMap::new();
        for term in lexicon.terms() {
            let Some(v) = table.get(term) else { continue };
            let Ok(unit) = embedding::normalize(v) else {
                continue;
            };
            let mut proj = [0.0; 5];
            for f in Foundation::ALL {
                proj[f.index()] = embedding::cosine_unit(&unit, &axes.axis(f).direction);
            }
            projections.insert(term.to_string(), proj);
        }
        Scorer {
            projections,
            baseline: axes.baseline_bias,
        }
    }

    pub fn baseline(&self) -> [f64; 5] {
        self.baseline
    }

    pub fn set_baseline(&mut self, baseline: [f64; 5]) {
        self.baseline = baseline;
    }

    /// Number of scorable terms (lexicon members that resolve in the table).
    pub fn scorable_terms(&self) -> usize {
        self.projections.len()
    }

    /// Whether a document with these tokens would contribute to scoring.
    pub fn is_moral(&self, tokens: &[String]) -> bool {
        tokens.iter().any(|t| self.projections.contains_key(t))
    }

    /// Score one document. Returns `None` when no token contributes (the
    /// document is non-moral and excluded from analysis).
    pub fn score(&self, doc_id: &str, tokens: &[String]) -> Option<MoralScore> {
        let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
        for token in tokens {
            if self.projections.contains_key(token.as_str()) {
                *counts.entry(token.as_str()).or_insert(0) += 1;
            }
        }
        let total: u64 = counts.values().sum();
        if total == 0 {
            return None;
        }
        let n = total as f64;

        let mut bias = [0.0; 5];
        let mut virtue = [0.0; 5];
        let mut vice = [0.0; 5];
        let mut intensity = [0.0; 5];
        for (term, count) in &counts {
            let w = *count as f64 / n;
            let proj = &self.projections[*term];
            for i in 0..5 {
                let p = proj[i];
                bias[i] += w * p;
                if p > 0.0 {
                    virtue[i] += w * p;
                } else if p < 0.0 {
                    vice[i] += w * (-p);
                }
                let d = p - self.baseline[i];
                intensity[i] += w * d * d;
            }
        }
        Some(MoralScore {
            doc_id: doc_id.to_string(),
            bias,
            intensity,
            virtue,
            vice,
            contributing_tokens: total as usize,
        })
    }

    /// Corpus baseline: per-axis weighted mean projection over every
    /// contributing token occurrence in the given documents. Summation order
    /// is fixed by document order and sorted term order within a document.
    pub fn corpus_baseline<'a, I>(&self, docs: I) -> Result<[f64; 5]>
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let mut weighted = [0.0; 5];
        let mut total: u64 = 0;
        for tokens in docs {
            let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
            for token in tokens {
                if self.projections.contains_key(token.as_str()) {
                    *counts.entry(token.as_str()).or_insert(0) += 1;
                }
            }
            for (term, count) in &counts {
                let proj = &self.projections[*term];
                for i in 0..5 {
                    weighted[i] += *count as f64 * proj[i];
                }
            }
            total += counts.values().sum::<u64>();
        }
        if total == 0 {
            return Err(Error::EmptyMoralCorpus);
        }
        let n = total as f64;
        Ok(weighted.map(|w| w / n))
    }
}

/// One vocabulary row: a corpus term with its axis projection and frequency.
#[derive(Debug, Clone, Serialize)]
pub struct VocabTerm {
    pub term: String,
    pub projection: f64,
    pub count: u64,
}

/// Per-foundation virtue/vice vocabulary rankings.
#[derive(Debug, Clone, Serialize)]
pub struct FoundationVocabulary {
    pub foundation: Foundation,
    pub virtue: Vec<VocabTerm>,
    pub vice: Vec<VocabTerm>,
}

/// Rank lexicon-member corpus terms along each axis: the most positive
/// projections head the virtue list, the most negative head the vice list.
pub fn foundation_vocabulary(
    corpus_terms: &BTreeMap<String, u64>,
    lexicon: &MoralLexicon,
    axes: &AxisSet,
    table: &EmbeddingTable,
    top_n: usize,
) -> Vec<FoundationVocabulary> {
    let mut out = Vec::with_capacity(5);
    for foundation in Foundation::ALL {
        let axis = axes.axis(foundation);
        let mut projected: Vec<VocabTerm> = corpus_terms
            .iter()
            .filter(|(term, _)| lexicon.contains(term))
            .filter_map(|(term, &count)| {
                project_word(term, axis, table).map(|projection| VocabTerm {
                    term: term.clone(),
                    projection,
                    count,
                })
            })
            .collect();

        let mut virtue: Vec<VocabTerm> = projected
            .iter()
            .filter(|t| t.projection > 0.0)
            .cloned()
            .collect();
        virtue.sort_by(|a, b| {
            b.projection
                .partial_cmp(&a.projection)
                .unwrap()
                .then_with(|| a.term.cmp(&b.term))
        });
        virtue.truncate(top_n);

        projected.retain(|t| t.projection < 0.0);
        projected.sort_by(|a, b| {
            a.projection
                .partial_cmp(&b.projection)
                .unwrap()
                .then_with(|| a.term.cmp(&b.term))
        });
        projected.truncate(top_n);

        out.push(FoundationVocabulary {
            foundation,
            virtue,
            vice: projected,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_table() -> EmbeddingTable {
        EmbeddingTable::from_entries(
            2,
            [
                ("vplus", vec![1.0, 0.0]),
                ("vminus", vec![-1.0, 0.0]),
                ("help", vec![1.0, 0.0]),
                ("kill", vec![-1.0, 0.0]),
                ("diag", vec![1.0, 1.0]),
            ],
        )
        .unwrap()
    }

    /// Lexicon with a single Care virtue/vice pole pair; other foundations
    /// borrow the same pole terms so all five axes resolve.
    fn toy_lexicon() -> MoralLexicon {
        let mut rows: Vec<(String, [f64; 5], f64)> = Vec::new();
        for f in Foundation::ALL {
            let mut probs = [0.0; 5];
            probs[f.index()] = 1.0;
            rows.push((format!("{}good", f.name()), probs, 0.9));
            rows.push((format!("{}bad", f.name()), probs, -0.9));
        }
        MoralLexicon::from_rows(rows).unwrap().0
    }

    fn care_lexicon() -> MoralLexicon {
        MoralLexicon::from_rows([
            ("help", [1.0, 0.0, 0.0, 0.0, 0.0], 0.9),
            ("kill", [1.0, 0.0, 0.0, 0.0, 0.0], -0.9),
            ("diag", [1.0, 0.0, 0.0, 0.0, 0.0], 0.0),
        ])
        .unwrap()
        .0
    }

    fn care_axes(_table: &EmbeddingTable) -> AxisSet {
        // Care axis (1, 0); remaining axes reuse the same geometry.
        let mut axes = Vec::new();
        for foundation in Foundation::ALL {
            axes.push(FoundationAxis {
                foundation,
                direction: vec![1.0, 0.0],
                virtue_centroid: vec![1.0, 0.0],
                vice_centroid: vec![-1.0, 0.0],
                virtue_terms_resolved: 1,
                virtue_terms_requested: 1,
                vice_terms_resolved: 1,
                vice_terms_requested: 1,
            });
        }
        AxisSet {
            axes,
            baseline_bias: [0.0; 5],
        }
    }

    /// Pole pair per foundation with vectors (+1, 0) / (-1, 0).
    fn antipodal_fixture() -> (MoralLexicon, EmbeddingTable) {
        let mut rows: Vec<(String, [f64; 5], f64)> = Vec::new();
        let mut pairs: Vec<(String, Vec<f64>)> = Vec::new();
        for f in Foundation::ALL {
            let mut probs = [0.0; 5];
            probs[f.index()] = 1.0;
            rows.push((format!("{}good", f.name()), probs, 0.9));
            rows.push((format!("{}bad", f.name()), probs, -0.9));
            pairs.push((format!("{}good", f.name()), vec![1.0, 0.0]));
            pairs.push((format!("{}bad", f.name()), vec![-1.0, 0.0]));
        }
        (
            MoralLexicon::from_rows(rows).unwrap().0,
            EmbeddingTable::from_entries(2, pairs).unwrap(),
        )
    }

    #[test]
    fn antipodal_singleton_axis() {
        let (lexicon, table) = antipodal_fixture();
        let axes = build_axes(&lexicon, &table).unwrap();
        assert_eq!(axes.axes.len(), 5);
        let care = axes.axis(Foundation::Care);
        assert!((care.direction[0] - 1.0).abs() < 1e-12);
        assert!(care.direction[1].abs() < 1e-12);
    }

    #[test]
    fn centroid_difference_axis_is_normalized() {
        // care poles: virtue {(2,0),(0,2)}, vice {(-2,0),(0,-2)}
        let mut rows: Vec<(String, [f64; 5], f64)> = vec![
            ("v1".into(), [1.0, 0.0, 0.0, 0.0, 0.0], 0.9),
            ("v2".into(), [1.0, 0.0, 0.0, 0.0, 0.0], 0.9),
            ("w1".into(), [1.0, 0.0, 0.0, 0.0, 0.0], -0.9),
            ("w2".into(), [1.0, 0.0, 0.0, 0.0, 0.0], -0.9),
        ];
        let mut pairs: Vec<(String, Vec<f64>)> = vec![
            ("v1".into(), vec![2.0, 0.0]),
            ("v2".into(), vec![0.0, 2.0]),
            ("w1".into(), vec![-2.0, 0.0]),
            ("w2".into(), vec![0.0, -2.0]),
        ];
        for f in Foundation::ALL.into_iter().skip(1) {
            let mut probs = [0.0; 5];
            probs[f.index()] = 1.0;
            rows.push((format!("v_{}", f.name()), probs, 0.9));
            rows.push((format!("w_{}", f.name()), probs, -0.9));
            pairs.push((format!("v_{}", f.name()), vec![1.0, 0.0]));
            pairs.push((format!("w_{}", f.name()), vec![-1.0, 0.0]));
        }
        let table = EmbeddingTable::from_entries(2, pairs).unwrap();
        let lexicon = MoralLexicon::from_rows(rows).unwrap().0;
        let axes = build_axes(&lexicon, &table).unwrap();
        let care = axes.axis(Foundation::Care);
        let inv = 1.0 / 2.0f64.sqrt();
        assert!((care.direction[0] - inv).abs() < 1e-12);
        assert!((care.direction[1] - inv).abs() < 1e-12);
        assert!((embedding::norm(&care.direction) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn unresolvable_pole_is_fatal_and_names_the_pole() {
        let lexicon = toy_lexicon();
        // table resolves nothing for sanctity vice
        let mut pairs: Vec<(String, Vec<f64>)> = Vec::new();
        for f in Foundation::ALL {
            pairs.push((format!("{}good", f.name()), vec![1.0, 0.0]));
            if f != Foundation::Sanctity {
                pairs.push((format!("{}bad", f.name()), vec![-1.0, 0.0]));
            }
        }
        let table = EmbeddingTable::from_entries(2, pairs).unwrap();
        let err = build_axes(&lexicon, &table).unwrap_err();
        match err {
            Error::UnresolvablePole { foundation, pole } => {
                assert_eq!(foundation, Foundation::Sanctity);
                assert_eq!(pole, Pole::Vice);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn degenerate_axis_is_fatal() {
        let mut rows: Vec<(String, [f64; 5], f64)> = Vec::new();
        let mut pairs: Vec<(String, Vec<f64>)> = Vec::new();
        for f in Foundation::ALL {
            let mut probs = [0.0; 5];
            probs[f.index()] = 1.0;
            rows.push((format!("{}good", f.name()), probs, 0.9));
            rows.push((format!("{}bad", f.name()), probs, -0.9));
            // same vector for both poles => zero difference
            pairs.push((format!("{}good", f.name()), vec![1.0, 1.0]));
            pairs.push((format!("{}bad", f.name()), vec![1.0, 1.0]));
        }
        let lexicon = MoralLexicon::from_rows(rows).unwrap().0;
        let table = EmbeddingTable::from_entries(2, pairs).unwrap();
        assert!(matches!(
            build_axes(&lexicon, &table),
            Err(Error::DegenerateAxis { .. })
        ));
    }

    #[test]
    #[allow(clippy::approx_constant)] // 0.707107 is the frozen expected value
    fn project_word_values() {
        let table = toy_table();
        let axes = care_axes(&table);
        let axis = axes.axis(Foundation::Care);
        assert!((project_word("help", axis, &table).unwrap() - 1.0).abs() < 1e-12);
        assert!(project_word("zzz", axis, &table).is_none());
        let d = project_word("diag", axis, &table).unwrap();
        assert!((d - 0.707_107).abs() < 1e-6);
    }

    #[test]
    fn score_three_token_document() {
        let table = toy_table();
        let axes = care_axes(&table);
        let scorer = Scorer::new(&care_lexicon(), &axes, &table);
        let tokens: Vec<String> = ["help", "kill", "help"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let score = scorer.score("d1", &tokens).unwrap();
        let care = Foundation::Care.index();
        assert!((score.bias[care] - 1.0 / 3.0).abs() < 1e-12);
        assert!((score.virtue[care] - 2.0 / 3.0).abs() < 1e-12);
        assert!((score.vice[care] - 1.0 / 3.0).abs() < 1e-12);
        assert!((score.intensity[care] - 1.0).abs() < 1e-12);
        assert_eq!(score.contributing_tokens, 3);
    }

    #[test]
    fn non_moral_document_is_absent() {
        let table = toy_table();
        let axes = care_axes(&table);
        let scorer = Scorer::new(&care_lexicon(), &axes, &table);
        let tokens: Vec<String> = ["nothing", "here"].iter().map(|s| s.to_string()).collect();
        assert!(scorer.score("d1", &tokens).is_none());
        assert!(!scorer.is_moral(&tokens));
    }

    #[test]
    fn single_virtue_token_has_no_vice_mass() {
        let table = toy_table();
        let axes = care_axes(&table);
        let scorer = Scorer::new(&care_lexicon(), &axes, &table);
        let tokens = vec!["help".to_string()];
        let score = scorer.score("d1", &tokens).unwrap();
        for i in 0..5 {
            assert!(score.bias[i] >= 0.0);
            assert_eq!(score.vice[i], 0.0);
        }
    }

    #[test]
    fn corpus_baseline_single_and_balanced() {
        let table = toy_table();
        let axes = care_axes(&table);
        let scorer = Scorer::new(&care_lexicon(), &axes, &table);
        let one = vec!["help".to_string()];
        let b = scorer.corpus_baseline([one.as_slice()]).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-12);

        let up = vec!["help".to_string()];
        let down = vec!["kill".to_string()];
        let b = scorer
            .corpus_baseline([up.as_slice(), down.as_slice()])
            .unwrap();
        assert!(b[0].abs() < 1e-12);

        let empty = vec!["nothing".to_string()];
        assert!(matches!(
            scorer.corpus_baseline([empty.as_slice()]),
            Err(Error::EmptyMoralCorpus)
        ));
    }

    #[test]
    fn embed_layouts() {
        let table = toy_table();
        let axes = care_axes(&table);
        let scorer = Scorer::new(&care_lexicon(), &axes, &table);
        let tokens: Vec<String> = ["help", "kill", "help"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let score = scorer.score("d1", &tokens).unwrap();

        let poles = embed(&score, EmbeddingMode::Poles);
        assert_eq!(poles.values.len(), 10);
        assert!((poles.values[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((poles.values[1] - 1.0 / 3.0).abs() < 1e-12);

        let fa = embed(&score, EmbeddingMode::Frameaxis);
        assert!((fa.values[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((fa.values[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn vocabulary_ranks_attack_first_on_care_vice() {
        let table = EmbeddingTable::from_entries(
            2,
            [
                ("help", vec![1.0, 0.0]),
                ("attack", vec![-1.0, 0.0]),
                ("hurt", vec![-0.8, 0.6]),
            ],
        )
        .unwrap();
        let lexicon = MoralLexicon::from_rows([
            ("help", [1.0, 0.0, 0.0, 0.0, 0.0], 0.9),
            ("attack", [1.0, 0.0, 0.0, 0.0, 0.0], -0.9),
            ("hurt", [1.0, 0.0, 0.0, 0.0, 0.0], -0.7),
        ])
        .unwrap()
        .0;
        let axes = care_axes(&table);
        let mut terms = BTreeMap::new();
        terms.insert("help".to_string(), 5u64);
        terms.insert("attack".to_string(), 3u64);
        terms.insert("hurt".to_string(), 4u64);
        terms.insert("unlisted".to_string(), 9u64);

        let vocab = foundation_vocabulary(&terms, &lexicon, &axes, &table, 10);
        let care = &vocab[Foundation::Care.index()];
        assert_eq!(care.vice[0].term, "attack");
        assert_eq!(care.virtue[0].term, "help");
        assert!(care.virtue.iter().all(|t| t.term != "unlisted"));

        let empty = foundation_vocabulary(&terms, &lexicon, &axes, &table, 0);
        assert!(empty[0].virtue.is_empty() && empty[0].vice.is_empty());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn scorer_fixture() -> (EmbeddingTable, MoralLexicon) {
            let table = EmbeddingTable::from_entries(
                3,
                [
                    ("w0", vec![1.0, 0.2, -0.1]),
                    ("w1", vec![-0.7, 0.5, 0.3]),
                    ("w2", vec![0.1, -0.9, 0.4]),
                    ("w3", vec![0.3, 0.3, 0.9]),
                    ("w4", vec![-0.2, -0.2, -0.8]),
                ],
            )
            .unwrap();
            let lexicon = MoralLexicon::from_rows([
                ("w0", [0.9, 0.1, 0.0, 0.0, 0.0], 0.5),
                ("w1", [0.1, 0.9, 0.0, 0.0, 0.0], -0.5),
                ("w2", [0.0, 0.0, 0.9, 0.1, 0.0], 0.5),
                ("w3", [0.0, 0.0, 0.1, 0.9, 0.0], -0.5),
                ("w4", [0.0, 0.0, 0.0, 0.1, 0.9], 0.5),
            ])
            .unwrap()
            .0;
            (table, lexicon)
        }

        fn fixture_axes() -> AxisSet {
            let dirs = [
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
                vec![1.0 / 3f64.sqrt(); 3],
                vec![
                    -std::f64::consts::FRAC_1_SQRT_2,
                    std::f64::consts::FRAC_1_SQRT_2,
                    0.0,
                ],
            ];
            AxisSet {
                axes: Foundation::ALL
                    .into_iter()
                    .zip(dirs)
                    .map(|(foundation, direction)| FoundationAxis {
                        foundation,
                        direction,
                        virtue_centroid: vec![0.0; 3],
                        vice_centroid: vec![0.0; 3],
                        virtue_terms_resolved: 1,
                        virtue_terms_requested: 1,
                        vice_terms_resolved: 1,
                        vice_terms_requested: 1,
                    })
                    .collect(),
                baseline_bias: [0.1, -0.05, 0.0, 0.2, -0.15],
            }
        }

        proptest! {
            #[test]
            fn score_bounds_and_identity(
                idx in proptest::collection::vec(0usize..5, 1..40)
            ) {
                let (table, lexicon) = scorer_fixture();
                let axes = fixture_axes();
                let scorer = Scorer::new(&lexicon, &axes, &table);
                let tokens: Vec<String> = idx.iter().map(|i| format!("w{i}")).collect();
                let score = scorer.score("d", &tokens).unwrap();
                for i in 0..5 {
                    prop_assert!(score.bias[i] >= -1.0 - 1e-12 && score.bias[i] <= 1.0 + 1e-12);
                    prop_assert!(score.virtue[i] >= 0.0 && score.virtue[i] <= 1.0 + 1e-12);
                    prop_assert!(score.vice[i] >= 0.0 && score.vice[i] <= 1.0 + 1e-12);
                    prop_assert!(score.intensity[i] >= 0.0 && score.intensity[i] <= 4.0 + 1e-12);
                    prop_assert!((score.bias[i] - (score.virtue[i] - score.vice[i])).abs() < 1e-9);
                }
            }

            #[test]
            fn score_is_bag_of_words(
                idx in proptest::collection::vec(0usize..5, 2..30),
                rot in 1usize..29,
            ) {
                let (table, lexicon) = scorer_fixture();
                let axes = fixture_axes();
                let scorer = Scorer::new(&lexicon, &axes, &table);
                let tokens: Vec<String> = idx.iter().map(|i| format!("w{i}")).collect();
                let mut rotated = tokens.clone();
                rotated.rotate_left(rot % tokens.len());
                let a = scorer.score("d", &tokens).unwrap();
                let b = scorer.score("d", &rotated).unwrap();
                for i in 0..5 {
                    prop_assert_eq!(a.bias[i], b.bias[i]);
                    prop_assert_eq!(a.intensity[i], b.intensity[i]);
                }
            }

            #[test]
            fn score_scale_invariant(
                idx in proptest::collection::vec(0usize..5, 1..30),
                scale in 0.01f64..100.0,
            ) {
                let (table, lexicon) = scorer_fixture();
                let axes = fixture_axes();
                let scorer = Scorer::new(&lexicon, &axes, &table);
                let scaled_table = EmbeddingTable::from_entries(
                    3,
                    table.iter().map(|(t, v)| {
                        (t.to_string(), v.iter().map(|x| x * scale).collect::<Vec<f64>>())
                    }),
                ).unwrap();
                let scaled_scorer = Scorer::new(&lexicon, &axes, &scaled_table);
                let tokens: Vec<String> = idx.iter().map(|i| format!("w{i}")).collect();
                let a = scorer.score("d", &tokens).unwrap();
                let b = scaled_scorer.score("d", &tokens).unwrap();
                for i in 0..5 {
                    prop_assert!((a.bias[i] - b.bias[i]).abs() < 1e-9);
                    prop_assert!((a.intensity[i] - b.intensity[i]).abs() < 1e-9);
                }
            }

            #[test]
            fn bias_monotone_under_high_projection_token(
                idx in proptest::collection::vec(0usize..5, 1..20)
            ) {
                let (table, lexicon) = scorer_fixture();
                let axes = fixture_axes();
                let scorer = Scorer::new(&lexicon, &axes, &table);
                let tokens: Vec<String> = idx.iter().map(|i| format!("w{i}")).collect();
                let before = scorer.score("d", &tokens).unwrap();
                // w0 has the highest care-axis projection of the fixture
                let care = Foundation::Care.index();
                let p_w0 = {
                    let unit = embedding::normalize(table.get("w0").unwrap()).unwrap();
                    embedding::cosine_unit(&unit, &axes.axis(Foundation::Care).direction)
                };
                prop_assume!(p_w0 > before.bias[care]);
                let mut more = tokens.clone();
                more.push("w0".to_string());
                let after = scorer.score("d", &more).unwrap();
                prop_assert!(after.bias[care] > before.bias[care]);
            }
        }
    }
}
