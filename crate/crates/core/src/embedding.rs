//! Word-vector storage and the vector algebra used downstream.
//!
//! Vectors come from a plain-text file, one term per line followed by its
//! components, with an optional `count dimension` header. Terms are
//! lowercased at load and vectors are stored exactly as parsed; cosine
//! normalizes on the fly.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};

/// Lookup table from lowercase term to a fixed-dimension real vector.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dimension: usize,
    entries: HashMap<String, Vec<f64>>,
    source_path: PathBuf,
}

/// What happened while parsing a vector file.
#[derive(Debug, Clone, Default, Serialize)]
pub struct EmbeddingLoadReport {
    pub lines_read: usize,
    pub loaded: usize,
    /// Lines whose components failed to parse as numbers.
    pub skipped_malformed: usize,
    /// Lines carrying an all-zero vector.
    pub skipped_zero_norm: usize,
    /// Later occurrences of an already-seen term.
    pub duplicates_ignored: usize,
    /// Lines dropped by the vocabulary filter.
    pub filtered_out: usize,
    pub header_skipped: bool,
}

impl EmbeddingTable {
    /// Load a whitespace-separated vector file. When `vocab_filter` is given,
    /// only listed terms (compared lowercase) are retained.
    ///
    /// Malformed lines are skipped and counted; a line whose components all
    /// parse but disagree with the established dimension is fatal.
    pub fn load(
        path: &Path,
        vocab_filter: Option<&HashSet<String>>,
    ) -> Result<(Self, EmbeddingLoadReport)> {
        let file = File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let reader = BufReader::new(file);

        let mut report = EmbeddingLoadReport::default();
        let mut entries: HashMap<String, Vec<f64>> = HashMap::new();
        let mut dimension: Option<usize> = None;

        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })?;
            report.lines_read += 1;
            let mut fields = line.split_whitespace();
            let Some(term) = fields.next() else {
                continue; // blank line
            };
            let rest: Vec<&str> = fields.collect();

            // Optional "count dimension" header on the first line.
            if idx == 0
                && rest.len() == 1
                && term.parse::<usize>().is_ok()
                && rest[0].parse::<usize>().is_ok()
            {
                report.header_skipped = true;
                continue;
            }

            let mut vector = Vec::with_capacity(rest.len());
            let mut malformed = false;
            for raw in &rest {
                match raw.parse::<f64>() {
                    Ok(v) if v.is_finite() => vector.push(v),
                    _ => {
                        malformed = true;
                        break;
                    }
                }
            }
            if malformed || vector.is_empty() {
                report.skipped_malformed += 1;
                continue;
            }

            match dimension {
                None => dimension = Some(vector.len()),
                Some(dim) if dim != vector.len() => {
                    return Err(Error::DimensionMismatch {
                        path: path.to_path_buf(),
                        line: idx + 1,
                        expected: dim,
                        found: vector.len(),
                    });
                }
                Some(_) => {}
            }

            if norm(&vector) == 0.0 {
                report.skipped_zero_norm += 1;
                continue;
            }

            let term = term.trim().to_lowercase();
            if let Some(filter) = vocab_filter {
                if !filter.contains(&term) {
                    report.filtered_out += 1;
                    continue;
                }
            }
            if entries.contains_key(&term) {
                report.duplicates_ignored += 1;
                continue;
            }
            entries.insert(term, vector);
            report.loaded += 1;
        }

        let dimension =
            dimension
                .filter(|_| !entries.is_empty())
                .ok_or_else(|| Error::EmptyEmbedding {
                    path: path.to_path_buf(),
                })?;

        Ok((
            EmbeddingTable {
                dimension,
                entries,
                source_path: path.to_path_buf(),
            },
            report,
        ))
    }

    /// Build a table directly from (term, vector) pairs. Used by synthetic
    /// corpora and tests; applies the same lowercase/zero-norm rules as
    /// [`EmbeddingTable::load`].
    pub fn from_entries<I, S>(dimension: usize, pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut entries = HashMap::new();
        for (term, vector) in pairs {
            if vector.len() != dimension {
                return Err(Error::LengthMismatch {
                    left: dimension,
                    right: vector.len(),
                });
            }
            if norm(&vector) == 0.0 {
                return Err(Error::ZeroNorm);
            }
            entries
                .entry(term.into().trim().to_lowercase())
                .or_insert(vector);
        }
        if entries.is_empty() {
            return Err(Error::EmptyEmbedding {
                path: PathBuf::from("<memory>"),
            });
        }
        Ok(EmbeddingTable {
            dimension,
            entries,
            source_path: PathBuf::from("<memory>"),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn source_path(&self) -> &Path {
        &self.source_path
    }

    /// Look a term up, lowercasing the argument if needed.
    pub fn get(&self, term: &str) -> Option<&[f64]> {
        if let Some(v) = self.entries.get(term) {
            return Some(v.as_slice());
        }
        if term.chars().any(char::is_uppercase) {
            return self.entries.get(&term.to_lowercase()).map(Vec::as_slice);
        }
        None
    }

    pub fn contains(&self, term: &str) -> bool {
        self.get(term).is_some()
    }

    /// Iterate stored (term, vector) pairs in unspecified order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }
}

/// Euclidean norm.
pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Dot product; panics on length mismatch only in debug builds.
pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Cosine similarity `u·v / (‖u‖‖v‖)`, normalizing on the fly.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(dot(u, v) / (nu * nv))
}

/// Fast path for vectors already normalized to unit length: a plain dot
/// product. Must agree with [`cosine`] to 1e-12 on unit inputs.
pub fn cosine_unit(u: &[f64], v: &[f64]) -> f64 {
    dot(u, v)
}

/// Divide a vector by its norm. Errors on zero norm.
pub fn normalize(v: &[f64]) -> Result<Vec<f64>> {
    let n = norm(v);
    if n == 0.0 {
        return Err(Error::ZeroNorm);
    }
    Ok(v.iter().map(|x| x / n).collect())
}

/// Arithmetic mean of the vectors behind `terms`, skipping terms that do not
/// resolve in the table.
#[derive(Debug, Clone)]
pub struct Centroid {
    pub vector: Vec<f64>,
    pub resolved: usize,
    pub requested: usize,
}

pub fn centroid<'a, I>(terms: I, table: &EmbeddingTable) -> Result<Centroid>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut sum = vec![0.0; table.dimension()];
    let mut resolved = 0usize;
    let mut requested = 0usize;
    for term in terms {
        requested += 1;
        if let Some(v) = table.get(term) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            resolved += 1;
        }
    }
    if resolved == 0 {
        return Err(Error::NoTermResolved);
    }
    for s in sum.iter_mut() {
        *s /= resolved as f64;
    }
    Ok(Centroid {
        vector: sum,
        resolved,
        requested,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for line in lines {
            writeln!(f, "{line}").unwrap();
        }
        f.flush().unwrap();
        f
    }

    #[test]
    fn loads_two_entries() {
        let f = write_file(&["a 1 0", "b 0 1"]);
        let (table, report) = EmbeddingTable::load(f.path(), None).unwrap();
        assert_eq!(table.dimension(), 2);
        assert_eq!(table.len(), 2);
        assert_eq!(report.loaded, 2);
        assert_eq!(table.get("a").unwrap(), &[1.0, 0.0]);
    }

    #[test]
    fn vocab_filter_retains_listed_terms_only() {
        let f = write_file(&["a 1 0", "b 0 1"]);
        let filter: HashSet<String> = ["a".to_string()].into_iter().collect();
        let (table, report) = EmbeddingTable::load(f.path(), Some(&filter)).unwrap();
        assert_eq!(table.len(), 1);
        assert!(table.contains("a"));
        assert_eq!(report.filtered_out, 1);
    }

    #[test]
    fn inconsistent_dimension_is_fatal() {
        let f = write_file(&["a 1 0", "b 0 1 1"]);
        let err = EmbeddingTable::load(f.path(), None).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                found: 3,
                expected: 2,
                ..
            }
        ));
    }

    #[test]
    fn header_line_is_tolerated() {
        let f = write_file(&["2 3", "a 1 0 0", "b 0 1 0"]);
        let (table, report) = EmbeddingTable::load(f.path(), None).unwrap();
        assert!(report.header_skipped);
        assert_eq!(table.dimension(), 3);
        assert_eq!(table.len(), 2);
    }

    #[test]
    fn malformed_and_zero_lines_skip_and_count() {
        let f = write_file(&["a 1 0", "new york 0.5", "zero 0 0", "b 0 2"]);
        let (table, report) = EmbeddingTable::load(f.path(), None).unwrap();
        assert_eq!(table.len(), 2);
        assert_eq!(report.skipped_malformed, 1);
        assert_eq!(report.skipped_zero_norm, 1);
    }

    #[test]
    fn duplicate_terms_keep_first() {
        let f = write_file(&["a 1 0", "A 5 5"]);
        let (table, report) = EmbeddingTable::load(f.path(), None).unwrap();
        assert_eq!(report.duplicates_ignored, 1);
        assert_eq!(table.get("a").unwrap(), &[1.0, 0.0]);
    }

    #[test]
    fn lookup_lowercases_argument() {
        let f = write_file(&["Mixed 1 1"]);
        let (table, _) = EmbeddingTable::load(f.path(), None).unwrap();
        assert!(table.contains("mixed"));
        assert!(table.contains("MIXED"));
    }

    #[test]
    fn empty_file_is_fatal() {
        let f = write_file(&[]);
        assert!(matches!(
            EmbeddingTable::load(f.path(), None),
            Err(Error::EmptyEmbedding { .. })
        ));
    }

    #[test]
    fn cosine_orthogonal_and_colinear() {
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(cosine(&[2.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn cosine_hand_value() {
        // 32 / (sqrt(14) * sqrt(77))
        let c = cosine(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert!((c - 0.974_632).abs() < 1e-6, "got {c}");
    }

    #[test]
    fn cosine_rejects_zero_norm_and_length_mismatch() {
        assert!(matches!(
            cosine(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::ZeroNorm)
        ));
        assert!(matches!(
            cosine(&[1.0], &[1.0, 0.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn cosine_unit_matches_cosine() {
        let u = normalize(&[3.0, 4.0, 0.5]).unwrap();
        let v = normalize(&[-1.0, 2.0, 7.0]).unwrap();
        let slow = cosine(&u, &v).unwrap();
        assert!((cosine_unit(&u, &v) - slow).abs() < 1e-12);
    }

    #[test]
    fn centroid_mean_and_skip_semantics() {
        let table = EmbeddingTable::from_entries(2, [("a", vec![2.0, 0.0]), ("b", vec![0.0, 2.0])])
            .unwrap();
        let c = centroid(["a", "b"], &table).unwrap();
        assert_eq!(c.vector, vec![1.0, 1.0]);

        let single = centroid(["a"], &table).unwrap();
        assert_eq!(single.vector, vec![2.0, 0.0]);

        let skipped = centroid(["a", "zzz"], &table).unwrap();
        assert_eq!(skipped.vector, vec![2.0, 0.0]);
        assert_eq!(skipped.resolved, 1);
        assert_eq!(skipped.requested, 2);

        assert!(matches!(
            centroid(["zzz"], &table),
            Err(Error::NoTermResolved)
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn nonzero_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
            (2usize..8)
                .prop_flat_map(|len| {
                    (
                        proptest::collection::vec(-100.0f64..100.0, len),
                        proptest::collection::vec(-100.0f64..100.0, len),
                    )
                })
                .prop_filter("nonzero", |(u, w)| norm(u) > 1e-6 && norm(w) > 1e-6)
        }

        proptest! {
            #[test]
            fn cosine_scale_invariant((u, v) in nonzero_pair(), c in 0.001f64..1000.0) {
                let base = cosine(&u, &v).unwrap();
                let scaled_u: Vec<f64> = u.iter().map(|x| x * c).collect();
                let scaled = cosine(&scaled_u, &v).unwrap();
                prop_assert!((base - scaled).abs() < 1e-12);
            }

            #[test]
            fn cosine_bounded((u, w) in nonzero_pair()) {
                let c = cosine(&u, &w).unwrap();
                prop_assert!(c.abs() <= 1.0 + 1e-12);
            }

            #[test]
            fn centroid_permutation_invariant(perm_seed in 0u64..1000) {
                let table = EmbeddingTable::from_entries(
                    3,
                    [
                        ("a", vec![1.0, 2.0, 3.0]),
                        ("b", vec![-1.0, 0.5, 2.0]),
                        ("c", vec![0.1, 0.1, 0.1]),
                        ("d", vec![4.0, -4.0, 0.0]),
                    ],
                ).unwrap();
                let mut terms = ["a", "b", "c", "d"];
                // cheap deterministic shuffle
                let mut s = perm_seed;
                for i in (1..terms.len()).rev() {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    terms.swap(i, (s >> 33) as usize % (i + 1));
                }
                let shuffled = centroid(terms.iter().copied(), &table).unwrap();
                let base = centroid(["a", "b", "c", "d"], &table).unwrap();
                for (x, y) in shuffled.vector.iter().zip(&base.vector) {
                    prop_assert!((x - y).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn load_lookup_round_trip() {
            use std::io::Write;
            let mut f = tempfile::NamedTempFile::new().unwrap();
            let rows = [
                ("alpha", [0.25, -1.5, 3.0]),
                ("beta", [1e-3, 2.5, -0.75]),
                ("gamma", [9.0, 8.0, 7.0]),
            ];
            for (t, v) in &rows {
                writeln!(f, "{t} {} {} {}", v[0], v[1], v[2]).unwrap();
            }
            f.flush().unwrap();
            let (table, _) = EmbeddingTable::load(f.path(), None).unwrap();
            for (t, v) in &rows {
                assert_eq!(table.get(t).unwrap(), v.as_slice());
            }
        }
    }
}
