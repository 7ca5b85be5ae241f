//! Moral-foundation dictionary: per-term foundation probabilities plus a
//! sentiment polarity that sorts terms into virtue/vice pole sets.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The five moral foundations, in canonical order. The order is load-bearing:
/// it fixes vector layouts and argmax tie-breaking everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Foundation {
    Care,
    Fairness,
    Loyalty,
    Authority,
    Sanctity,
}

impl Foundation {
    pub const ALL: [Foundation; 5] = [
        Foundation::Care,
        Foundation::Fairness,
        Foundation::Loyalty,
        Foundation::Authority,
        Foundation::Sanctity,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Foundation::Care => "care",
            Foundation::Fairness => "fairness",
            Foundation::Loyalty => "loyalty",
            Foundation::Authority => "authority",
            Foundation::Sanctity => "sanctity",
        }
    }
}

impl fmt::Display for Foundation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One side of a foundation axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pole {
    Virtue,
    Vice,
}

impl Pole {
    pub const BOTH: [Pole; 2] = [Pole::Virtue, Pole::Vice];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Pole::Virtue => "virtue",
            Pole::Vice => "vice",
        }
    }
}

impl fmt::Display for Pole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Sign of a term's sentiment score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Virtue,
    Vice,
    Neutral,
}

impl Polarity {
    /// The pole this polarity anchors, if any. Neutral terms define no pole.
    pub fn pole(self) -> Option<Pole> {
        match self {
            Polarity::Virtue => Some(Pole::Virtue),
            Polarity::Vice => Some(Pole::Vice),
            Polarity::Neutral => None,
        }
    }
}

/// Foundation with the highest probability; ties break to the earliest
/// foundation in canonical order.
pub fn assign_foundation(probs: &[f64; 5]) -> Result<Foundation> {
    for (i, p) in probs.iter().enumerate() {
        if !(0.0..=1.0).contains(p) {
            return Err(Error::InvalidInput(format!(
                "{} probability {p} outside [0, 1]",
                Foundation::ALL[i]
            )));
        }
    }
    let mut best = Foundation::Care;
    let mut best_p = probs[0];
    for f in Foundation::ALL.into_iter().skip(1) {
        if probs[f.index()] > best_p {
            best = f;
            best_p = probs[f.index()];
        }
    }
    Ok(best)
}

/// Sign mapping: positive sentiment is virtue, negative is vice, zero is
/// neutral.
pub fn assign_polarity(sentiment: f64) -> Result<Polarity> {
    if !(-1.0..=1.0).contains(&sentiment) {
        return Err(Error::InvalidInput(format!(
            "sentiment {sentiment} outside [-1, 1]"
        )));
    }
    Ok(if sentiment > 0.0 {
        Polarity::Virtue
    } else if sentiment < 0.0 {
        Polarity::Vice
    } else {
        Polarity::Neutral
    })
}

/// One dictionary term with its derived labels.
#[derive(Debug, Clone, Serialize)]
pub struct LexiconEntry {
    pub term: String,
    pub probs: [f64; 5],
    pub sentiment: f64,
    pub foundation: Foundation,
    pub polarity: Polarity,
}

/// Per-pole-set and neutral counts from a lexicon load.
#[derive(Debug, Clone, Default, Serialize)]
pub struct LexiconLoadReport {
    pub entries: usize,
    /// `pole_counts[foundation][pole]` in canonical order.
    pub pole_counts: [[usize; 2]; 5],
    pub neutral: usize,
    /// Entries whose sentiment came from the sentiment file.
    pub sentiment_joined: usize,
    /// Entries absent from the sentiment file, defaulted to 0.
    pub sentiment_defaulted: usize,
    pub duplicates_ignored: usize,
}

/// The loaded dictionary plus the ten pole term sets.
#[derive(Debug, Clone)]
pub struct MoralLexicon {
    entries: HashMap<String, LexiconEntry>,
    /// `pole_sets[foundation][pole]`, each sorted for byte-stable iteration.
    pole_sets: [[Vec<String>; 2]; 5],
}

impl MoralLexicon {
    /// Load a lexicon CSV with header
    /// `word,care_p,fairness_p,loyalty_p,authority_p,sanctity_p[,sentiment]`.
    /// When the sentiment column is absent a `word,score` CSV is required and
    /// joined on word; unjoined words get sentiment 0.
    pub fn load(
        lexicon_path: &Path,
        sentiment_path: Option<&Path>,
    ) -> Result<(Self, LexiconLoadReport)> {
        let lex_err = |reason: String| Error::Lexicon {
            path: lexicon_path.to_path_buf(),
            reason,
        };

        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_path(lexicon_path)
            .map_err(|e| lex_err(e.to_string()))?;
        let headers = reader
            .headers()
            .map_err(|e| lex_err(e.to_string()))?
            .clone();
        let col = |name: &str| -> Result<usize> {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| lex_err(format!("missing header column `{name}`")))
        };
        let word_col = col("word")?;
        let prob_cols = [
            col("care_p")?,
            col("fairness_p")?,
            col("loyalty_p")?,
            col("authority_p")?,
            col("sanctity_p")?,
        ];
        let sentiment_col = headers.iter().position(|h| h.trim() == "sentiment");

        let sentiments: Option<HashMap<String, f64>> = match (sentiment_col, sentiment_path) {
            (Some(_), _) => None,
            (None, Some(path)) => Some(load_sentiment_file(path)?),
            (None, None) => {
                return Err(lex_err(
                    "no sentiment column and no sentiment file given".into(),
                ))
            }
        };

        let mut report = LexiconLoadReport::default();
        let mut entries: HashMap<String, LexiconEntry> = HashMap::new();

        for (idx, record) in reader.records().enumerate() {
            let record = record.map_err(|e| lex_err(e.to_string()))?;
            let row = idx + 2; // 1-based, after header
            let field = |i: usize| -> Result<&str> {
                record
                    .get(i)
                    .ok_or_else(|| lex_err(format!("row {row}: missing field {i}")))
            };
            let term = field(word_col)?.trim().to_lowercase();
            if term.is_empty() {
                return Err(lex_err(format!("row {row}: empty word")));
            }
            let mut probs = [0.0; 5];
            for (slot, &i) in probs.iter_mut().zip(&prob_cols) {
                let raw = field(i)?;
                *slot = raw
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| lex_err(format!("row {row}: bad probability `{raw}`")))?;
            }
            let sentiment = match sentiment_col {
                Some(i) => {
                    let raw = field(i)?;
                    raw.trim()
                        .parse::<f64>()
                        .map_err(|_| lex_err(format!("row {row}: bad sentiment `{raw}`")))?
                }
                None => {
                    let joined = sentiments.as_ref().and_then(|m| m.get(&term)).copied();
                    if joined.is_some() {
                        report.sentiment_joined += 1;
                    } else {
                        report.sentiment_defaulted += 1;
                    }
                    joined.unwrap_or(0.0)
                }
            };

            let foundation =
                assign_foundation(&probs).map_err(|e| lex_err(format!("row {row}: {e}")))?;
            let polarity =
                assign_polarity(sentiment).map_err(|e| lex_err(format!("row {row}: {e}")))?;

            if entries.contains_key(&term) {
                report.duplicates_ignored += 1;
                continue;
            }
            entries.insert(
                term.clone(),
                LexiconEntry {
                    term,
                    probs,
                    sentiment,
                    foundation,
                    polarity,
                },
            );
        }

        if entries.is_empty() {
            return Err(lex_err("empty lexicon".into()));
        }
        Ok(Self::from_entry_map(entries, report))
    }

    /// Build a lexicon from already-labeled entries, recomputing the derived
    /// fields. Used by synthetic corpora and tests.
    pub fn from_rows<I, S>(rows: I) -> Result<(Self, LexiconLoadReport)>
    where
        I: IntoIterator<Item = (S, [f64; 5], f64)>,
        S: Into<String>,
    {
        let mut report = LexiconLoadReport::default();
        let mut entries = HashMap::new();
        for (term, probs, sentiment) in rows {
            let term = term.into().trim().to_lowercase();
            let foundation = assign_foundation(&probs)?;
            let polarity = assign_polarity(sentiment)?;
            if entries.contains_key(&term) {
                report.duplicates_ignored += 1;
                continue;
            }
            entries.insert(
                term.clone(),
                LexiconEntry {
                    term,
                    probs,
                    sentiment,
                    foundation,
                    polarity,
                },
            );
        }
        if entries.is_empty() {
            return Err(Error::InvalidInput("empty lexicon".into()));
        }
        Ok(Self::from_entry_map(entries, report))
    }

    fn from_entry_map(
        entries: HashMap<String, LexiconEntry>,
        mut report: LexiconLoadReport,
    ) -> (Self, LexiconLoadReport) {
        let mut pole_sets: [[Vec<String>; 2]; 5] = Default::default();
        for entry in entries.values() {
            match entry.polarity.pole() {
                Some(pole) => {
                    pole_sets[entry.foundation.index()][pole.index()].push(entry.term.clone())
                }
                None => report.neutral += 1,
            }
        }
        for per_foundation in pole_sets.iter_mut() {
            for set in per_foundation.iter_mut() {
                set.sort();
            }
        }
        for f in Foundation::ALL {
            for p in Pole::BOTH {
                report.pole_counts[f.index()][p.index()] = pole_sets[f.index()][p.index()].len();
            }
        }
        report.entries = entries.len();
        (MoralLexicon { entries, pole_sets }, report)
    }

    /// Keep only entries whose dominant-foundation probability clears the
    /// threshold; 0 keeps everything. Pole sets and the report are rebuilt.
    pub fn with_min_probability(&self, threshold: f64) -> Result<(Self, LexiconLoadReport)> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::InvalidInput(format!(
                "moral threshold {threshold} outside [0, 1]"
            )));
        }
        let rows: Vec<(String, [f64; 5], f64)> = self
            .entries
            .values()
            .filter(|e| e.probs[e.foundation.index()] >= threshold)
            .map(|e| (e.term.clone(), e.probs, e.sentiment))
            .collect();
        if rows.is_empty() {
            return Err(Error::InvalidInput(format!(
                "moral threshold {threshold} removed every lexicon entry"
            )));
        }
        Self::from_rows(rows)
    }

    pub fn get(&self, term: &str) -> Option<&LexiconEntry> {
        if let Some(e) = self.entries.get(term) {
            return Some(e);
        }
        if term.chars().any(char::is_uppercase) {
            return self.entries.get(&term.to_lowercase());
        }
        None
    }

    pub fn contains(&self, term: &str) -> bool {
        self.get(term).is_some()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Member terms of one pole set, sorted.
    pub fn pole_terms(&self, foundation: Foundation, pole: Pole) -> &[String] {
        &self.pole_sets[foundation.index()][pole.index()]
    }

    /// All entries, keyed by term, in sorted term order.
    pub fn entries_sorted(&self) -> BTreeMap<&str, &LexiconEntry> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v)).collect()
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

fn load_sentiment_file(path: &Path) -> Result<HashMap<String, f64>> {
    let err = |reason: String| Error::Lexicon {
        path: path.to_path_buf(),
        reason,
    };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| err(e.to_string()))?;
    let headers = reader.headers().map_err(|e| err(e.to_string()))?.clone();
    let word_col = headers
        .iter()
        .position(|h| h.trim() == "word")
        .ok_or_else(|| err("missing header column `word`".into()))?;
    let score_col = headers
        .iter()
        .position(|h| h.trim() == "score")
        .ok_or_else(|| err("missing header column `score`".into()))?;

    let mut map = HashMap::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| err(e.to_string()))?;
        let row = idx + 2;
        let word = record
            .get(word_col)
            .ok_or_else(|| err(format!("row {row}: missing word")))?
            .trim()
            .to_lowercase();
        let raw = record
            .get(score_col)
            .ok_or_else(|| err(format!("row {row}: missing score")))?;
        let score: f64 = raw
            .trim()
            .parse()
            .map_err(|_| err(format!("row {row}: bad score `{raw}`")))?;
        if !(-1.0..=1.0).contains(&score) {
            return Err(err(format!("row {row}: score {score} outside [-1, 1]")));
        }
        map.entry(word).or_insert(score);
    }
    Ok(map)
}
