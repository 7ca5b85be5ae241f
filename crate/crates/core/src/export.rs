//! Artifact writers and readers. Every artifact references the run id: JSON
//! artifacts carry a top-level `run_id` field, CSV artifacts start with a
//! `# run_id=...` comment line that [`csv_reader`] skips.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::cluster::{ActivationSummary, SelectionRow, VocabularyReport};
use crate::corpus::{DailyCounts, Document, KeywordGroup};
use crate::error::{Error, Result};
use crate::framing::{FoundationVocabulary, MoralScore};
use crate::lexicon::Foundation;

fn write_err(path: &Path) -> impl Fn(std::io::Error) -> Error + '_ {
    move |source| Error::Write {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_writer(path: &Path, run_id: &str) -> Result<csv::Writer<BufWriter<File>>> {
    let mut file = BufWriter::new(File::create(path).map_err(write_err(path))?);
    writeln!(file, "# run_id={run_id}").map_err(write_err(path))?;
    Ok(csv::Writer::from_writer(file))
}

/// CSV reader that tolerates the `# run_id=` comment line.
pub fn csv_reader(path: &Path) -> Result<csv::Reader<File>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

/// The 21 column names of `scores.csv`: doc_id, ten pole columns, then ten
/// bias/intensity columns.
pub fn score_columns() -> Vec<String> {
    let mut columns = vec!["doc_id".to_string()];
    for f in Foundation::ALL {
        columns.push(format!("{}_virtue", f.name()));
        columns.push(format!("{}_vice", f.name()));
    }
    for f in Foundation::ALL {
        columns.push(format!("{}_bias", f.name()));
        columns.push(format!("{}_intensity", f.name()));
    }
    columns
}

pub fn write_scores_csv(path: &Path, scores: &[MoralScore], run_id: &str) -> Result<()> {
    let mut writer = csv_writer(path, run_id)?;
    let map_err = |e: csv::Error| Error::InvalidInput(format!("{}: {e}", path.display()));
    writer.write_record(score_columns()).map_err(map_err)?;
    for score in scores {
        let mut record = vec![score.doc_id.clone()];
        for f in Foundation::ALL {
            record.push(score.virtue[f.index()].to_string());
            record.push(score.vice[f.index()].to_string());
        }
        for f in Foundation::ALL {
            record.push(score.bias[f.index()].to_string());
            record.push(score.intensity[f.index()].to_string());
        }
        writer.write_record(&record).map_err(map_err)?;
    }
    writer.flush().map_err(write_err(path))?;
    Ok(())
}

/// One `scores.csv` row read back for the staged subcommands.
#[derive(Debug, Clone)]
pub struct ScoreRow {
    pub doc_id: String,
    /// `[virtue_f, vice_f]` per foundation.
    pub poles: [f64; 10],
    /// `[bias_f, intensity_f]` per foundation.
    pub frameaxis: [f64; 10],
}

pub fn read_scores_csv(path: &Path) -> Result<Vec<ScoreRow>> {
    let mut reader = csv_reader(path)?;
    let bad = |msg: String| Error::InvalidInput(format!("{}: {msg}", path.display()));
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let expected = score_columns();
    if headers.iter().ne(expected.iter().map(String::as_str)) {
        return Err(bad("unexpected scores.csv header".into()));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        if record.len() != 21 {
            return Err(bad(format!("row has {} fields, expected 21", record.len())));
        }
        let parse = |i: usize| -> Result<f64> {
            record[i]
                .parse()
                .map_err(|_| bad(format!("bad number `{}`", &record[i])))
        };
        let mut poles = [0.0; 10];
        let mut frameaxis = [0.0; 10];
        for i in 0..10 {
            poles[i] = parse(i + 1)?;
            frameaxis[i] = parse(i + 11)?;
        }
        rows.push(ScoreRow {
            doc_id: record[0].to_string(),
            poles,
            frameaxis,
        });
    }
    Ok(rows)
}

pub fn write_labels_csv(
    path: &Path,
    doc_ids: &[String],
    labels: &[usize],
    run_id: &str,
) -> Result<()> {
    let mut writer = csv_writer(path, run_id)?;
    let map_err = |e: csv::Error| Error::InvalidInput(format!("{}: {e}", path.display()));
    writer
        .write_record(["doc_id", "cluster"])
        .map_err(map_err)?;
    for (doc_id, label) in doc_ids.iter().zip(labels) {
        writer
            .write_record([doc_id.as_str(), &label.to_string()])
            .map_err(map_err)?;
    }
    writer.flush().map_err(write_err(path))?;
    Ok(())
}

pub fn read_labels_csv(path: &Path) -> Result<Vec<(String, usize)>> {
    let mut reader = csv_reader(path)?;
    let bad = |msg: String| Error::InvalidInput(format!("{}: {msg}", path.display()));
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let label: usize = record
            .get(1)
            .ok_or_else(|| bad("missing cluster field".into()))?
            .parse()
            .map_err(|_| bad("bad cluster index".into()))?;
        out.push((record[0].to_string(), label));
    }
    Ok(out)
}

pub fn write_selection_csv(path: &Path, rows: &[SelectionRow], run_id: &str) -> Result<()> {
    let mut writer = csv_writer(path, run_id)?;
    let map_err = |e: csv::Error| Error::InvalidInput(format!("{}: {e}", path.display()));
    writer
        .write_record([
            "k",
            "mean_silhouette",
            "inertia",
            "min_fraction",
            "max_fraction",
            "chosen",
        ])
        .map_err(map_err)?;
    for row in rows {
        writer
            .write_record([
                row.k.to_string(),
                row.mean_silhouette.to_string(),
                row.inertia.to_string(),
                row.min_fraction.to_string(),
                row.max_fraction.to_string(),
                (row.chosen as u8).to_string(),
            ])
            .map_err(map_err)?;
    }
    writer.flush().map_err(write_err(path))?;
    Ok(())
}

pub fn write_daily_counts_csv(path: &Path, counts: &DailyCounts, run_id: &str) -> Result<()> {
    let mut writer = csv_writer(path, run_id)?;
    let map_err = |e: csv::Error| Error::InvalidInput(format!("{}: {e}", path.display()));
    let mut header = vec!["date".to_string()];
    header.extend(KeywordGroup::ALL.iter().map(|g| g.name().to_string()));
    header.push("total".to_string());
    writer.write_record(&header).map_err(map_err)?;
    for (i, date) in counts.dates.iter().enumerate() {
        let mut record = vec![date.to_string()];
        for group in KeywordGroup::ALL {
            record.push(counts.per_group[group.index()][i].to_string());
        }
        record.push(counts.total[i].to_string());
        writer.write_record(&record).map_err(map_err)?;
    }
    writer.flush().map_err(write_err(path))?;
    Ok(())
}

pub fn write_tsne_csv(
    path: &Path,
    doc_ids: &[String],
    coordinates: &[[f64; 2]],
    labels: &[usize],
    run_id: &str,
) -> Result<()> {
    let mut writer = csv_writer(path, run_id)?;
    let map_err = |e: csv::Error| Error::InvalidInput(format!("{}: {e}", path.display()));
    writer
        .write_record(["doc_id", "x", "y", "cluster"])
        .map_err(map_err)?;
    for ((doc_id, xy), label) in doc_ids.iter().zip(coordinates).zip(labels) {
        writer
            .write_record([
                doc_id.as_str(),
                &xy[0].to_string(),
                &xy[1].to_string(),
                &label.to_string(),
            ])
            .map_err(map_err)?;
    }
    writer.flush().map_err(write_err(path))?;
    Ok(())
}

/// Serialize a JSON artifact with a stable field order and trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
    text.push('\n');
    std::fs::write(path, text).map_err(write_err(path))
}

/// `clusters.json` payload.
#[derive(Debug, Serialize)]
pub struct ClustersArtifact<'a> {
    pub run_id: &'a str,
    pub k: usize,
    pub sizes: Vec<usize>,
    pub inertia: f64,
    pub mean_silhouette: f64,
    pub centroids: &'a [Vec<f64>],
    pub activations: &'a [ActivationSummary],
}

/// `vocabulary.json` payload.
#[derive(Debug, Serialize)]
pub struct VocabularyArtifact<'a> {
    pub run_id: &'a str,
    #[serde(flatten)]
    pub report: &'a VocabularyReport,
}

/// `foundation_vocab.json` payload.
#[derive(Debug, Serialize)]
pub struct FoundationVocabArtifact<'a> {
    pub run_id: &'a str,
    pub top_n: usize,
    pub foundations: &'a [FoundationVocabulary],
}

pub fn write_documents_jsonl(path: &Path, documents: &[Document]) -> Result<()> {
    let mut file = BufWriter::new(File::create(path).map_err(write_err(path))?);
    for doc in documents {
        let line = serde_json::to_string(doc)
            .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))?;
        writeln!(file, "{line}").map_err(write_err(path))?;
    }
    file.flush().map_err(write_err(path))?;
    Ok(())
}

pub fn read_documents_jsonl(path: &Path) -> Result<Vec<Document>> {
    use std::io::BufRead;
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = std::io::BufReader::new(file);
    let mut documents = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line)
            .map_err(|e| Error::InvalidInput(format!("{} line {}: {e}", path.display(), i + 1)))?;
        documents.push(doc);
    }
    Ok(documents)
}
