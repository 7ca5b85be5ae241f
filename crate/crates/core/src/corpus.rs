//! Corpus ingestion: JSONL posts, geo/date filters, keyword matching and
//! grouping, unique-text dedup, and daily count series.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{normalize_text, tokenize};

/// One post as it appears in the input JSONL. Unknown fields are ignored.
#[derive(Debug, Clone, Deserialize)]
pub struct RawPost {
    #[serde(deserialize_with = "string_or_number")]
    pub id: String,
    pub text: String,
    pub created_at: String,
    #[serde(default)]
    pub latitude: Option<f64>,
    #[serde(default)]
    pub longitude: Option<f64>,
    #[serde(default)]
    pub place: Option<String>,
}

fn string_or_number<'de, D>(deserializer: D) -> std::result::Result<String, D::Error>
where
    D: serde::Deserializer<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        S(String),
        N(u64),
    }
    Ok(match Raw::deserialize(deserializer)? {
        Raw::S(s) => s,
        Raw::N(n) => n.to_string(),
    })
}

/// A post whose id and timestamp parsed cleanly.
#[derive(Debug, Clone)]
pub struct IngestedPost {
    pub id: String,
    pub text: String,
    pub created_at: DateTime<Utc>,
    pub coordinates: Option<(f64, f64)>,
    pub place: Option<String>,
}

/// Read a JSONL corpus. Lines that fail to parse (bad JSON, empty id,
/// unparseable timestamp) are skipped and counted.
pub fn read_jsonl(path: &Path) -> Result<(Vec<IngestedPost>, usize)> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut posts = Vec::new();
    let mut malformed = 0usize;
    for line in reader.lines() {
        let line = line.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let Ok(raw) = serde_json::from_str::<RawPost>(&line) else {
            malformed += 1;
            continue;
        };
        if raw.id.trim().is_empty() {
            malformed += 1;
            continue;
        }
        let Ok(created_at) = DateTime::parse_from_rfc3339(&raw.created_at) else {
            malformed += 1;
            continue;
        };
        let coordinates = match (raw.latitude, raw.longitude) {
            (Some(lat), Some(lon)) => Some((lat, lon)),
            _ => None,
        };
        posts.push(IngestedPost {
            id: raw.id,
            text: raw.text,
            created_at: created_at.with_timezone(&Utc),
            coordinates,
            place: raw.place,
        });
    }
    Ok((posts, malformed))
}

/// Inclusive geographic bounding box in decimal degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub lat_min: f64,
    pub lon_min: f64,
    pub lat_max: f64,
    pub lon_max: f64,
}

impl BoundingBox {
    /// Greater Los Angeles collection box.
    pub const LOS_ANGELES: BoundingBox = BoundingBox {
        lat_min: 32.75,
        lon_min: -118.95,
        lat_max: 34.82,
        lon_max: -117.646374,
    };

    pub fn new(lat_min: f64, lon_min: f64, lat_max: f64, lon_max: f64) -> Result<Self> {
        if lat_min >= lat_max || lon_min >= lon_max {
            return Err(Error::Config(format!(
                "invalid bounding box ({lat_min}, {lon_min}, {lat_max}, {lon_max})"
            )));
        }
        Ok(BoundingBox {
            lat_min,
            lon_min,
            lat_max,
            lon_max,
        })
    }

    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        lat >= self.lat_min && lat <= self.lat_max && lon >= self.lon_min && lon <= self.lon_max
    }
}

impl Default for BoundingBox {
    fn default() -> Self {
        BoundingBox::LOS_ANGELES
    }
}

/// Inclusive date range in UTC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if start > end {
            return Err(Error::Config(format!("date range {start}..{end} is empty")));
        }
        Ok(DateRange { start, end })
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        date >= self.start && date <= self.end
    }

    pub fn num_days(&self) -> usize {
        (self.end - self.start).num_days() as usize + 1
    }

    pub fn iter(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.start.iter_days().take(self.num_days())
    }
}

impl Default for DateRange {
    /// The collection window: 2020-02-24 through 2020-08-24, inclusive.
    fn default() -> Self {
        DateRange {
            start: NaiveDate::from_ymd_opt(2020, 2, 24).unwrap(),
            end: NaiveDate::from_ymd_opt(2020, 8, 24).unwrap(),
        }
    }
}

/// Keep a post if its coordinates fall inside the box (inclusive). Posts
/// without coordinates pass only when `allow_place` is set and a non-empty
/// place is attached.
pub fn geo_keep(post: &IngestedPost, bbox: &BoundingBox, allow_place: bool) -> bool {
    match post.coordinates {
        Some((lat, lon)) => bbox.contains(lat, lon),
        None => allow_place && post.place.as_deref().is_some_and(|p| !p.trim().is_empty()),
    }
}

/// Keep a post if its UTC date falls inside the range (inclusive).
pub fn date_keep(post: &IngestedPost, range: &DateRange) -> bool {
    range.contains(post.created_at.date_naive())
}

/// The three report groups, in precedence order: a post matching keywords
/// from several groups is assigned to the earliest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeywordGroup {
    BlackLivesMatter,
    DefundThePolice,
    AllBlueLivesMatter,
}

impl KeywordGroup {
    pub const ALL: [KeywordGroup; 3] = [
        KeywordGroup::BlackLivesMatter,
        KeywordGroup::DefundThePolice,
        KeywordGroup::AllBlueLivesMatter,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            KeywordGroup::BlackLivesMatter => "black_lives_matter",
            KeywordGroup::DefundThePolice => "defund_the_police",
            KeywordGroup::AllBlueLivesMatter => "all_blue_lives_matter",
        }
    }
}

impl fmt::Display for KeywordGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for KeywordGroup {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "black_lives_matter" | "blacklivesmatter" => Ok(KeywordGroup::BlackLivesMatter),
            "defund_the_police" | "defundthepolice" => Ok(KeywordGroup::DefundThePolice),
            "all_blue_lives_matter" | "allbluelivesmatter" => Ok(KeywordGroup::AllBlueLivesMatter),
            other => Err(Error::Config(format!("unknown keyword group `{other}`"))),
        }
    }
}

/// How one search term matches a document.
#[derive(Debug, Clone, PartialEq, Eq)]
enum KeywordPattern {
    /// `#tag`: the de-hashed word must appear as a token.
    Hashtag(String),
    /// Bare word: whole-token match.
    Word(String),
    /// Quoted phrase: contiguous token subsequence.
    Phrase(Vec<String>),
}

/// One search term with the group it reports under.
#[derive(Debug, Clone)]
pub struct Keyword {
    /// The term as written (hashes and quotes included).
    pub raw: String,
    pub group: KeywordGroup,
    pattern: KeywordPattern,
}

impl Keyword {
    pub fn parse(raw: &str, group: KeywordGroup) -> Result<Keyword> {
        let trimmed = raw.trim();
        let unquoted = trimmed
            .strip_prefix('"')
            .and_then(|s| s.strip_suffix('"'))
            .unwrap_or(trimmed);
        let pattern = if let Some(tag) = unquoted.strip_prefix('#') {
            let word = normalize_text(tag);
            if word.is_empty() || word.contains(' ') {
                return Err(Error::Config(format!("bad hashtag keyword `{raw}`")));
            }
            KeywordPattern::Hashtag(word)
        } else {
            let tokens = tokenize(&normalize_text(unquoted));
            match tokens.len() {
                0 => return Err(Error::Config(format!("empty keyword `{raw}`"))),
                1 => KeywordPattern::Word(tokens.into_iter().next().unwrap()),
                _ => KeywordPattern::Phrase(tokens),
            }
        };
        Ok(Keyword {
            raw: trimmed.to_string(),
            group,
            pattern,
        })
    }

    fn matches(&self, tokens: &[String]) -> bool {
        match &self.pattern {
            KeywordPattern::Hashtag(word) | KeywordPattern::Word(word) => {
                tokens.iter().any(|t| t == word)
            }
            KeywordPattern::Phrase(phrase) => {
                tokens.windows(phrase.len()).any(|w| w == phrase.as_slice())
            }
        }
    }
}

/// The active search terms.
#[derive(Debug, Clone)]
pub struct KeywordSet {
    keywords: Vec<Keyword>,
}

impl Default for KeywordSet {
    /// The nine default search terms and their report groups.
    fn default() -> Self {
        use KeywordGroup::*;
        let defaults = [
            ("#blacklivesmatter", BlackLivesMatter),
            ("blm", BlackLivesMatter),
            ("#blm", BlackLivesMatter),
            ("\"black lives matter\"", BlackLivesMatter),
            ("#defundthepolice", DefundThePolice),
            ("\"all lives matter\"", AllBlueLivesMatter),
            ("\"defund the police\"", DefundThePolice),
            ("#allivesmatter", AllBlueLivesMatter),
            ("#bluelivesmatter", AllBlueLivesMatter),
        ];
        KeywordSet {
            keywords: defaults
                .into_iter()
                .map(|(raw, group)| Keyword::parse(raw, group).unwrap())
                .collect(),
        }
    }
}

impl KeywordSet {
    pub fn new(keywords: Vec<Keyword>) -> Result<Self> {
        if keywords.is_empty() {
            return Err(Error::Config("keyword set is empty".into()));
        }
        Ok(KeywordSet { keywords })
    }

    /// Load `keyword,group` lines (CSV with those two headers). Lines
    /// starting with `#` would read as hashtag keywords, so comments are not
    /// supported in this file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let err = |reason: String| Error::Lexicon {
            path: path.to_path_buf(),
            reason,
        };
        let mut reader = csv::ReaderBuilder::new()
            .from_path(path)
            .map_err(|e| err(e.to_string()))?;
        let headers = reader.headers().map_err(|e| err(e.to_string()))?.clone();
        let kw_col = headers
            .iter()
            .position(|h| h.trim() == "keyword")
            .ok_or_else(|| err("missing header column `keyword`".into()))?;
        let group_col = headers
            .iter()
            .position(|h| h.trim() == "group")
            .ok_or_else(|| err("missing header column `group`".into()))?;
        let mut keywords = Vec::new();
        for (idx, record) in reader.records().enumerate() {
            let record = record.map_err(|e| err(e.to_string()))?;
            let row = idx + 2;
            let raw = record
                .get(kw_col)
                .ok_or_else(|| err(format!("row {row}: missing keyword")))?;
            let group: KeywordGroup = record
                .get(group_col)
                .ok_or_else(|| err(format!("row {row}: missing group")))?
                .parse()?;
            keywords.push(Keyword::parse(raw, group)?);
        }
        KeywordSet::new(keywords)
    }

    pub fn keywords(&self) -> &[Keyword] {
        &self.keywords
    }

    /// Match a tokenized document: the matched raw terms (in set order) and
    /// the report group resolved by precedence.
    pub fn match_tokens(&self, tokens: &[String]) -> (Vec<String>, Option<KeywordGroup>) {
        let mut matched = Vec::new();
        let mut group: Option<KeywordGroup> = None;
        for keyword in &self.keywords {
            if keyword.matches(tokens) {
                matched.push(keyword.raw.clone());
                group = Some(match group {
                    None => keyword.group,
                    Some(g) => g.min(keyword.group),
                });
            }
        }
        (matched, group)
    }
}

/// All filters applied before scoring.
#[derive(Debug, Clone, Default)]
pub struct CorpusFilter {
    pub bbox: BoundingBox,
    pub dates: DateRange,
    pub keywords: KeywordSet,
    pub allow_place: bool,
}

/// A filtered, normalized, keyword-matched document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub normalized_text: String,
    pub tokens: Vec<String>,
    pub day: NaiveDate,
    pub matched_keywords: Vec<String>,
    pub keyword_group: KeywordGroup,
}

impl Document {
    /// Normalize, tokenize, and keyword-match one post. `None` when no
    /// keyword matches.
    pub fn from_post(post: &IngestedPost, keywords: &KeywordSet) -> Option<Document> {
        let normalized_text = normalize_text(&post.text);
        let tokens = tokenize(&normalized_text);
        let (matched_keywords, group) = keywords.match_tokens(&tokens);
        let keyword_group = group?;
        Some(Document {
            doc_id: post.id.clone(),
            normalized_text,
            tokens,
            day: post.created_at.date_naive(),
            matched_keywords,
            keyword_group,
        })
    }
}

/// Totals per keyword group (plus the sum), used for stage-count reporting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupCounts {
    pub total: usize,
    pub black_lives_matter: usize,
    pub defund_the_police: usize,
    pub all_blue_lives_matter: usize,
}

impl GroupCounts {
    pub fn add(&mut self, group: KeywordGroup) {
        self.total += 1;
        match group {
            KeywordGroup::BlackLivesMatter => self.black_lives_matter += 1,
            KeywordGroup::DefundThePolice => self.defund_the_police += 1,
            KeywordGroup::AllBlueLivesMatter => self.all_blue_lives_matter += 1,
        }
    }

    pub fn tally<'a, I: IntoIterator<Item = &'a Document>>(docs: I) -> GroupCounts {
        let mut counts = GroupCounts::default();
        for doc in docs {
            counts.add(doc.keyword_group);
        }
        counts
    }
}

/// Keep the first occurrence of each exact normalized text, preserving input
/// order. Returns the survivors plus total/unique counts per group.
pub fn dedup(documents: Vec<Document>) -> (Vec<Document>, GroupCounts, GroupCounts) {
    let total = GroupCounts::tally(&documents);
    let mut seen = std::collections::HashSet::new();
    let mut unique_docs = Vec::with_capacity(documents.len());
    for doc in documents {
        if seen.insert(doc.normalized_text.clone()) {
            unique_docs.push(doc);
        }
    }
    let unique = GroupCounts::tally(&unique_docs);
    (unique_docs, total, unique)
}

/// Zero-filled daily counts across a date range, per group and total.
#[derive(Debug, Clone, Serialize)]
pub struct DailyCounts {
    pub dates: Vec<NaiveDate>,
    /// Row-aligned with `dates`; indexed by [`KeywordGroup::index`].
    pub per_group: [Vec<u64>; 3],
    pub total: Vec<u64>,
}

pub fn daily_counts<'a, I>(documents: I, range: &DateRange) -> DailyCounts
where
    I: IntoIterator<Item = &'a Document>,
{
    let dates: Vec<NaiveDate> = range.iter().collect();
    let index: BTreeMap<NaiveDate, usize> =
        dates.iter().enumerate().map(|(i, &d)| (d, i)).collect();
    let mut per_group: [Vec<u64>; 3] = [
        vec![0; dates.len()],
        vec![0; dates.len()],
        vec![0; dates.len()],
    ];
    let mut total = vec![0; dates.len()];
    for doc in documents {
        if let Some(&i) = index.get(&doc.day) {
            per_group[doc.keyword_group.index()][i] += 1;
            total[i] += 1;
        }
    }
    DailyCounts {
        dates,
        per_group,
        total,
    }
}
