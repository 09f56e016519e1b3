//! Multi-annotator occupation-taxonomy correspondence.
//!
//! Several annotators independently map each target occupation to zero or
//! more source occupations. Vote aggregation keeps matches at or above a
//! threshold; rows with no qualifying match go to an adjudication queue and
//! stay all-zero until resolved. Once every row is resolved (or explicitly
//! overridden to zero), per-occupation risk transfers from the source
//! taxonomy to the target as the unweighted mean over matched sources.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};
use std::path::Path;

use thiserror::Error;

use crate::dataset::RiskTable;

#[derive(Debug, Error)]
pub enum CrosswalkError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed row: {message}")]
    MalformedRow { line: u64, message: String },
    #[error("vote {votes} for ({target}, {source_code}) exceeds annotator count {annotators}")]
    VoteOutOfRange {
        target: String,
        source_code: String,
        votes: u32,
        annotators: u32,
    },
    #[error("unknown target occupation '{0}'")]
    UnknownTargetId(String),
    #[error("unknown source occupation '{0}'")]
    UnknownSourceId(String),
    #[error("row '{0}' is not pending adjudication")]
    RowNotPending(String),
    #[error("row '{0}' is unresolved; adjudicate or add it to the zero-override list")]
    UnresolvedRow(String),
    #[error("source risk table does not cover matched occupation '{0}'")]
    MissingSourceRisk(String),
    #[error("chosen source set is empty")]
    EmptyChoice,
    #[error("duplicate key '{0}'")]
    DuplicateKey(String),
}

pub type Result<T> = std::result::Result<T, CrosswalkError>;

/// Raw annotator votes: target occupations on rows, source on columns,
/// each entry counting how many annotators proposed the match.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteMatrix {
    targets: Vec<String>,
    sources: Vec<String>,
    votes: Vec<u32>,
    annotators: u32,
}

impl VoteMatrix {
    pub fn new(
        targets: Vec<String>,
        sources: Vec<String>,
        votes: Vec<u32>,
        annotators: u32,
    ) -> Result<Self> {
        assert_eq!(votes.len(), targets.len() * sources.len(), "vote matrix shape");
        check_unique(&targets)?;
        check_unique(&sources)?;
        for (i, target) in targets.iter().enumerate() {
            for (j, source) in sources.iter().enumerate() {
                let v = votes[i * sources.len() + j];
                if v > annotators {
                    return Err(CrosswalkError::VoteOutOfRange {
                        target: target.clone(),
                        source_code: source.clone(),
                        votes: v,
                        annotators,
                    });
                }
            }
        }
        Ok(VoteMatrix {
            targets,
            sources,
            votes,
            annotators,
        })
    }

    /// Loads long-format votes: `target_code,source_code,votes`.
    ///
    /// Targets and sources appear in first-encounter order; unlisted pairs
    /// hold zero votes. Targets known only from a zero-vote row are valid.
    pub fn load(path: impl AsRef<Path>, annotators: u32) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .from_path(path.as_ref())
            .map_err(csv_error)?;
        let mut records = reader.records();
        let header = match records.next() {
            Some(rec) => rec.map_err(csv_error)?,
            None => {
                return Err(CrosswalkError::MalformedRow {
                    line: 0,
                    message: "empty votes file".into(),
                })
            }
        };
        let actual: Vec<&str> = header.iter().map(str::trim).collect();
        if actual != ["target_code", "source_code", "votes"] {
            return Err(CrosswalkError::MalformedRow {
                line: 1,
                message: "votes header must be 'target_code,source_code,votes'".into(),
            });
        }
        let mut targets: Vec<String> = Vec::new();
        let mut sources: Vec<String> = Vec::new();
        let mut t_index: BTreeMap<String, usize> = BTreeMap::new();
        let mut s_index: BTreeMap<String, usize> = BTreeMap::new();
        let mut entries: Vec<(usize, usize, u32)> = Vec::new();
        for rec in records {
            let rec = rec.map_err(csv_error)?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            if rec.len() != 3 {
                return Err(CrosswalkError::MalformedRow {
                    line,
                    message: "expected 3 fields".into(),
                });
            }
            let target = rec[0].trim().to_string();
            let source = rec[1].trim().to_string();
            for code in [&target, &source] {
                crate::dataset::check_code(code).map_err(|e| CrosswalkError::MalformedRow {
                    line,
                    message: e.to_string(),
                })?;
            }
            let votes: u32 = rec[2].trim().parse().map_err(|_| CrosswalkError::MalformedRow {
                line,
                message: format!("'{}' is not a vote count", &rec[2]),
            })?;
            let t = *t_index.entry(target.clone()).or_insert_with(|| {
                targets.push(target.clone());
                targets.len() - 1
            });
            let s = *s_index.entry(source.clone()).or_insert_with(|| {
                sources.push(source.clone());
                sources.len() - 1
            });
            entries.push((t, s, votes));
        }
        let mut votes = vec![0u32; targets.len() * sources.len()];
        let width = sources.len();
        for (t, s, v) in entries {
            votes[t * width + s] = v;
        }
        VoteMatrix::new(targets, sources, votes, annotators)
    }

    pub fn targets(&self) -> &[String] {
        &self.targets
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn vote(&self, target_idx: usize, source_idx: usize) -> u32 {
        self.votes[target_idx * self.sources.len() + source_idx]
    }

    fn row(&self, target_idx: usize) -> &[u32] {
        &self.votes[target_idx * self.sources.len()..(target_idx + 1) * self.sources.len()]
    }
}

fn check_unique(ids: &[String]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(CrosswalkError::DuplicateKey(id.clone()));
        }
    }
    Ok(())
}

/// How a crosswalk row was decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowTag {
    /// Kept every match voted at or above the threshold.
    Consensus,
    /// Decided by hand after aggregation left the row empty.
    Adjudicated,
    /// Deliberately mapped to nothing; transfers as zero risk.
    Override,
    /// Awaiting adjudication; all-zero in the matrix.
    Pending,
}

impl RowTag {
    pub fn as_str(self) -> &'static str {
        match self {
            RowTag::Consensus => "consensus",
            RowTag::Adjudicated => "adjudicated",
            RowTag::Override => "override",
            RowTag::Pending => "pending",
        }
    }
}

/// Binary target-by-source correspondence with per-row provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct CrosswalkMatrix {
    targets: Vec<String>,
    sources: Vec<String>,
    entries: Vec<bool>,
    tags: Vec<RowTag>,
}

impl CrosswalkMatrix {
    pub fn targets(&self) -> &[String] {
        &self.targets
    }

    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    pub fn tag(&self, target_idx: usize) -> RowTag {
        self.tags[target_idx]
    }

    pub fn entry(&self, target_idx: usize, source_idx: usize) -> bool {
        self.entries[target_idx * self.sources.len() + source_idx]
    }

    /// One target row of the binary matrix, ordered like [`Self::sources`].
    pub fn row(&self, target_idx: usize) -> &[bool] {
        &self.entries[target_idx * self.sources.len()..(target_idx + 1) * self.sources.len()]
    }

    /// Target codes still awaiting adjudication, in row order.
    pub fn pending(&self) -> Vec<String> {
        self.targets
            .iter()
            .zip(&self.tags)
            .filter(|(_, tag)| **tag == RowTag::Pending)
            .map(|(t, _)| t.clone())
            .collect()
    }

    fn target_position(&self, code: &str) -> Result<usize> {
        self.targets
            .iter()
            .position(|t| t == code)
            .ok_or_else(|| CrosswalkError::UnknownTargetId(code.to_string()))
    }

    /// Resolves one pending row to the chosen source set.
    pub fn resolve(&mut self, target_code: &str, chosen: &BTreeSet<String>) -> Result<()> {
        let row = self.target_position(target_code)?;
        if self.tags[row] != RowTag::Pending {
            return Err(CrosswalkError::RowNotPending(target_code.to_string()));
        }
        if chosen.is_empty() {
            return Err(CrosswalkError::EmptyChoice);
        }
        let mut cols = Vec::with_capacity(chosen.len());
        for code in chosen {
            let j = self
                .sources
                .iter()
                .position(|s| s == code)
                .ok_or_else(|| CrosswalkError::UnknownSourceId(code.clone()))?;
            cols.push(j);
        }
        let width = self.sources.len();
        for j in 0..width {
            self.entries[row * width + j] = false;
        }
        for j in cols {
            self.entries[row * width + j] = true;
        }
        self.tags[row] = RowTag::Adjudicated;
        Ok(())
    }

    /// Marks a row as intentionally unmapped (zero risk on transfer).
    pub fn mark_override(&mut self, target_code: &str) -> Result<()> {
        let row = self.target_position(target_code)?;
        let width = self.sources.len();
        for j in 0..width {
            self.entries[row * width + j] = false;
        }
        self.tags[row] = RowTag::Override;
        Ok(())
    }

    /// Writes the 1-entries as `target_code,source_code` plus a sidecar
    /// `target_code,tag` provenance file.
    pub fn write(&self, matrix_path: impl AsRef<Path>, tags_path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(matrix_path.as_ref()).map_err(csv_error)?;
        w.write_record(["target_code", "source_code"]).map_err(csv_error)?;
        for (i, target) in self.targets.iter().enumerate() {
            for (j, source) in self.sources.iter().enumerate() {
                if self.entry(i, j) {
                    w.write_record([target.as_str(), source.as_str()]).map_err(csv_error)?;
                }
            }
        }
        w.flush()?;
        let mut tw = csv::Writer::from_path(tags_path.as_ref()).map_err(csv_error)?;
        tw.write_record(["target_code", "tag"]).map_err(csv_error)?;
        for (target, tag) in self.targets.iter().zip(&self.tags) {
            tw.write_record([target.as_str(), tag.as_str()]).map_err(csv_error)?;
        }
        tw.flush()?;
        Ok(())
    }
}

/// Keeps every match with votes at or above `threshold`. Rows with no
/// qualifying match are queued for adjudication and left all-zero.
pub fn aggregate_votes(votes: &VoteMatrix, threshold: u32) -> (CrosswalkMatrix, Vec<String>) {
    assert!(threshold >= 1, "threshold must be at least 1");
    let width = votes.sources.len();
    let mut entries = vec![false; votes.targets.len() * width];
    let mut tags = Vec::with_capacity(votes.targets.len());
    let mut queue = Vec::new();
    for (i, target) in votes.targets.iter().enumerate() {
        let row = votes.row(i);
        if row.iter().any(|&v| v >= threshold) {
            for (j, &v) in row.iter().enumerate() {
                entries[i * width + j] = v >= threshold;
            }
            tags.push(RowTag::Consensus);
        } else {
            // Covers the all-zero row as well: queued, never an error.
            tags.push(RowTag::Pending);
            queue.push(target.clone());
        }
    }
    (
        CrosswalkMatrix {
            targets: votes.targets.clone(),
            sources: votes.sources.clone(),
            entries,
            tags,
        },
        queue,
    )
}

/// Transfers source risks onto the target taxonomy: each resolved row gets
/// the unweighted mean of its matched sources' risks, override rows get 0.
pub fn transfer_risk(
    crosswalk: &CrosswalkMatrix,
    source_risk: &RiskTable,
    zero_override: &BTreeSet<String>,
) -> Result<RiskTable> {
    let mut out = RiskTable::new();
    for (i, target) in crosswalk.targets.iter().enumerate() {
        if zero_override.contains(target) || crosswalk.tags[i] == RowTag::Override {
            out.insert(target.clone(), 0.0)
                .map_err(|_| CrosswalkError::DuplicateKey(target.clone()))?;
            continue;
        }
        let mut sum = 0.0;
        let mut matched = 0usize;
        for (j, source) in crosswalk.sources.iter().enumerate() {
            if crosswalk.entry(i, j) {
                let risk = source_risk
                    .get(source)
                    .ok_or_else(|| CrosswalkError::MissingSourceRisk(source.clone()))?;
                sum += risk;
                matched += 1;
            }
        }
        if matched == 0 {
            return Err(CrosswalkError::UnresolvedRow(target.clone()));
        }
        let mean = sum / matched as f64;
        out.insert(target.clone(), mean.clamp(0.0, 1.0))
            .map_err(|_| CrosswalkError::DuplicateKey(target.clone()))?;
    }
    Ok(out)
}

/// Reads a zero-override list: one target code per line, blank lines and
/// `#` comments skipped.
pub fn load_zero_override(path: impl AsRef<Path>) -> Result<BTreeSet<String>> {
    let file = std::fs::File::open(path.as_ref())?;
    let mut out = BTreeSet::new();
    for line in std::io::BufReader::new(file).lines() {
        let line = line?;
        let trimmed = line.trim();
        if !trimmed.is_empty() && !trimmed.starts_with('#') {
            out.insert(trimmed.to_string());
        }
    }
    Ok(out)
}

/// Reads adjudication resolutions: `target_code,source_code` rows, one per
/// chosen match, grouped by target.
pub fn load_resolutions(path: impl AsRef<Path>) -> Result<BTreeMap<String, BTreeSet<String>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_path(path.as_ref())
        .map_err(csv_error)?;
    let mut records = reader.records();
    let header = match records.next() {
        Some(rec) => rec.map_err(csv_error)?,
        None => return Ok(BTreeMap::new()),
    };
    let actual: Vec<&str> = header.iter().map(str::trim).collect();
    if actual != ["target_code", "source_code"] {
        return Err(CrosswalkError::MalformedRow {
            line: 1,
            message: "resolutions header must be 'target_code,source_code'".into(),
        });
    }
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for rec in records {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != 2 {
            return Err(CrosswalkError::MalformedRow {
                line,
                message: "expected 2 fields".into(),
            });
        }
        out.entry(rec[0].trim().to_string())
            .or_default()
            .insert(rec[1].trim().to_string());
    }
    Ok(out)
}

/// Writes the adjudication queue, one target code per line.
pub fn write_queue(path: impl AsRef<Path>, queue: &[String]) -> Result<()> {
    let mut file = std::fs::File::create(path.as_ref())?;
    for code in queue {
        writeln!(file, "{code}")?;
    }
    Ok(())
}

fn csv_error(err: csv::Error) -> CrosswalkError {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    match err.into_kind() {
        csv::ErrorKind::Io(io) => CrosswalkError::Io(io),
        other => CrosswalkError::MalformedRow {
            line,
            message: format!("{other:?}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn votes_4x4(rows: [[u32; 4]; 4]) -> VoteMatrix {
        let targets = vec!["t1".into(), "t2".into(), "t3".into(), "t4".into()];
        let sources = vec!["k1".into(), "k2".into(), "k3".into(), "k4".into()];
        let flat: Vec<u32> = rows.iter().flatten().copied().collect();
        VoteMatrix::new(targets, sources, flat, 3).unwrap()
    }

    #[test]
    fn threshold_keeps_commonly_matched() {
        let votes = votes_4x4([[3, 2, 1, 0], [1, 1, 1, 0], [0, 0, 0, 0], [2, 0, 0, 2]]);
        let (matrix, queue) = aggregate_votes(&votes, 2);
        assert_eq!(matrix.row(0), [true, true, false, false]);
        assert_eq!(matrix.tag(0), RowTag::Consensus);
        assert_eq!(matrix.row(3), [true, false, false, true]);
        assert_eq!(queue, ["t2", "t3"]);
        assert!(matrix.row(1).iter().all(|&b| !b));
        assert!(matrix.row(2).iter().all(|&b| !b));
    }

    #[test]
    fn resolve_sets_exactly_chosen_entries() {
        let votes = votes_4x4([[3, 0, 0, 0], [1, 1, 0, 0], [0, 0, 0, 0], [2, 0, 0, 0]]);
        let (mut matrix, queue) = aggregate_votes(&votes, 2);
        assert_eq!(queue, ["t2", "t3"]);

        matrix.resolve("t2", &["k2".to_string()].into()).unwrap();
        assert_eq!(matrix.row(1), [false, true, false, false]);
        assert_eq!(matrix.tag(1), RowTag::Adjudicated);
        assert_eq!(matrix.pending(), ["t3"]);

        matrix
            .resolve("t3", &["k1".to_string(), "k3".to_string()].into())
            .unwrap();
        assert_eq!(matrix.row(2), [true, false, true, false]);
    }

    #[test]
    fn resolving_consensus_row_is_rejected() {
        let votes = votes_4x4([[3, 0, 0, 0], [2, 0, 0, 0], [2, 0, 0, 0], [2, 0, 0, 0]]);
        let (mut matrix, _) = aggregate_votes(&votes, 2);
        assert!(matches!(
            matrix.resolve("t1", &["k1".to_string()].into()),
            Err(CrosswalkError::RowNotPending(_))
        ));
    }

    #[test]
    fn resolve_unknown_source_rejected() {
        let votes = votes_4x4([[1, 0, 0, 0], [2, 0, 0, 0], [2, 0, 0, 0], [2, 0, 0, 0]]);
        let (mut matrix, _) = aggregate_votes(&votes, 2);
        assert!(matches!(
            matrix.resolve("t1", &["nope".to_string()].into()),
            Err(CrosswalkError::UnknownSourceId(_))
        ));
    }

    #[test]
    fn transfer_takes_unweighted_mean() {
        let votes = votes_4x4([[2, 2, 0, 0], [3, 0, 0, 0], [0, 2, 0, 0], [0, 0, 2, 0]]);
        let (matrix, _) = aggregate_votes(&votes, 2);
        let risk = RiskTable::from_pairs([("k1", 0.8), ("k2", 0.4), ("k3", 0.73), ("k4", 0.1)]).unwrap();
        let out = transfer_risk(&matrix, &risk, &BTreeSet::new()).unwrap();
        assert!((out.get("t1").unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(out.get("t2"), Some(0.8));
        assert_eq!(out.get("t4"), Some(0.73));
    }

    #[test]
    fn zero_override_wins_over_matches() {
        let votes = votes_4x4([[2, 2, 0, 0], [3, 0, 0, 0], [2, 0, 0, 0], [2, 0, 0, 0]]);
        let (matrix, _) = aggregate_votes(&votes, 2);
        let risk = RiskTable::from_pairs([("k1", 0.8), ("k2", 0.4)]).unwrap();
        let over: BTreeSet<String> = ["t1".to_string()].into();
        let out = transfer_risk(&matrix, &risk, &over).unwrap();
        assert_eq!(out.get("t1"), Some(0.0));
    }

    #[test]
    fn unresolved_row_blocks_transfer() {
        let votes = votes_4x4([[1, 1, 0, 0], [3, 0, 0, 0], [2, 0, 0, 0], [2, 0, 0, 0]]);
        let (matrix, queue) = aggregate_votes(&votes, 2);
        assert_eq!(queue, ["t1"]);
        let risk = RiskTable::from_pairs([("k1", 0.8)]).unwrap();
        assert!(matches!(
            transfer_risk(&matrix, &risk, &BTreeSet::new()),
            Err(CrosswalkError::UnresolvedRow(t)) if t == "t1"
        ));
    }

    #[test]
    fn missing_source_risk_is_reported() {
        let votes = votes_4x4([[2, 0, 0, 0], [3, 0, 0, 0], [2, 0, 0, 0], [0, 0, 0, 2]]);
        let (matrix, _) = aggregate_votes(&votes, 2);
        let risk = RiskTable::from_pairs([("k1", 0.8)]).unwrap();
        assert!(matches!(
            transfer_risk(&matrix, &risk, &BTreeSet::new()),
            Err(CrosswalkError::MissingSourceRisk(s)) if s == "k4"
        ));
    }

    #[test]
    fn raising_a_vote_never_removes_consensus() {
        // Monotonicity at fixed threshold.
        let base = votes_4x4([[2, 1, 0, 0], [0, 2, 0, 0], [2, 0, 0, 0], [0, 0, 3, 0]]);
        let (matrix_before, _) = aggregate_votes(&base, 2);
        for i in 0..4 {
            for j in 0..4 {
                let mut rows = [[0u32; 4]; 4];
                for (r, row) in rows.iter_mut().enumerate() {
                    for (c, cell) in row.iter_mut().enumerate() {
                        *cell = base.vote(r, c);
                    }
                }
                if rows[i][j] < 3 {
                    rows[i][j] += 1;
                }
                let (matrix_after, _) = aggregate_votes(&votes_4x4(rows), 2);
                for r in 0..4 {
                    for c in 0..4 {
                        if matrix_before.entry(r, c) {
                            assert!(matrix_after.entry(r, c), "consensus lost at ({r},{c})");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn vote_exceeding_annotators_rejected() {
        let err = VoteMatrix::new(
            vec!["t".into()],
            vec!["s".into()],
            vec![4],
            3,
        )
        .unwrap_err();
        assert!(matches!(err, CrosswalkError::VoteOutOfRange { .. }));
    }
}
