//! The ternary label matrix: n artifacts x m heuristics, cells in {-1, 0, +1}.

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A single heuristic vote. `Abstain` means the heuristic declined to label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Vote {
    Negative,
    Abstain,
    Positive,
}

impl Vote {
    pub fn as_i8(self) -> i8 {
        match self {
            Vote::Negative => -1,
            Vote::Abstain => 0,
            Vote::Positive => 1,
        }
    }

    pub fn from_i8(v: i8) -> Option<Vote> {
        match v {
            -1 => Some(Vote::Negative),
            0 => Some(Vote::Abstain),
            1 => Some(Vote::Positive),
            _ => None,
        }
    }

    /// Swap the voted class; abstain stays abstain.
    pub fn flipped(self) -> Vote {
        match self {
            Vote::Negative => Vote::Positive,
            Vote::Abstain => Vote::Abstain,
            Vote::Positive => Vote::Negative,
        }
    }

    pub fn is_abstain(self) -> bool {
        matches!(self, Vote::Abstain)
    }
}

impl std::fmt::Display for Vote {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.as_i8())
    }
}

/// Dense row-major vote matrix with stable row and column identity.
///
/// Row order follows the dataset, column order follows the registry; both
/// are deterministic, which makes the matrix (and its hash) reproducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMatrix {
    row_ids: Vec<String>,
    column_names: Vec<String>,
    cells: Vec<Vote>,
}

impl LabelMatrix {
    pub fn new(row_ids: Vec<String>, column_names: Vec<String>, cells: Vec<Vote>) -> Result<Self> {
        let expected = row_ids.len() * column_names.len();
        if cells.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: cells.len(),
            });
        }
        Ok(LabelMatrix {
            row_ids,
            column_names,
            cells,
        })
    }

    /// Build from per-row vote slices; handy in tests.
    pub fn from_rows(
        row_ids: Vec<String>,
        column_names: Vec<String>,
        rows: Vec<Vec<Vote>>,
    ) -> Result<Self> {
        let m = column_names.len();
        for row in &rows {
            if row.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    actual: row.len(),
                });
            }
        }
        let cells = rows.into_iter().flatten().collect();
        LabelMatrix::new(row_ids, column_names, cells)
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.column_names.len()
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn cell(&self, row: usize, col: usize) -> Vote {
        self.cells[row * self.column_names.len() + col]
    }

    pub fn row(&self, row: usize) -> &[Vote] {
        let m = self.column_names.len();
        &self.cells[row * m..(row + 1) * m]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Vote]> + '_ {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = Vote> + '_ {
        (0..self.n_rows()).map(move |i| self.cell(i, col))
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|n| n == name)
    }

    /// Copy of the matrix with one column removed.
    pub fn without_column(&self, col: usize) -> LabelMatrix {
        let names = self
            .column_names
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != col)
            .map(|(_, n)| n.clone())
            .collect();
        let cells = (0..self.n_rows())
            .flat_map(|i| {
                self.row(i)
                    .iter()
                    .enumerate()
                    .filter(move |(j, _)| *j != col)
                    .map(|(_, v)| *v)
            })
            .collect();
        LabelMatrix {
            row_ids: self.row_ids.clone(),
            column_names: names,
            cells,
        }
    }

    /// Canonical CSV serialization: header `artifact_id,<names...>`, one row
    /// per artifact, cells in {-1,0,1}. This is both the on-disk format and
    /// the input to `content_hash`.
    pub fn to_csv_string(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let mut header = Vec::with_capacity(1 + self.column_names.len());
        header.push("artifact_id".to_string());
        header.extend(self.column_names.iter().cloned());
        writer.write_record(&header).expect("in-memory write");
        for (i, id) in self.row_ids.iter().enumerate() {
            let mut record = Vec::with_capacity(1 + self.column_names.len());
            record.push(id.clone());
            record.extend(self.row(i).iter().map(|v| v.as_i8().to_string()));
            writer.write_record(&record).expect("in-memory write");
        }
        let bytes = writer.into_inner().expect("in-memory flush");
        String::from_utf8(bytes).expect("csv output is utf-8")
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<LabelMatrix> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        LabelMatrix::parse_csv(&text, path)
    }

    pub fn parse_csv(text: &str, origin: &Path) -> Result<LabelMatrix> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| Error::parse(origin, Some(1), e.to_string()))?
            .clone();
        if headers.is_empty() || &headers[0] != "artifact_id" {
            return Err(Error::parse(
                origin,
                Some(1),
                "first column must be `artifact_id`",
            ));
        }
        let column_names: Vec<String> = headers.iter().skip(1).map(|s| s.to_string()).collect();
        let mut row_ids = Vec::new();
        let mut cells = Vec::new();
        for (idx, record) in reader.records().enumerate() {
            let line = idx + 2;
            let record = record.map_err(|e| Error::parse(origin, Some(line), e.to_string()))?;
            if record.len() != column_names.len() + 1 {
                return Err(Error::parse(
                    origin,
                    Some(line),
                    format!(
                        "expected {} fields, got {}",
                        column_names.len() + 1,
                        record.len()
                    ),
                ));
            }
            row_ids.push(record[0].to_string());
            for cell in record.iter().skip(1) {
                let value: i8 = cell.parse().map_err(|_| {
                    Error::parse(origin, Some(line), format!("invalid cell `{cell}`"))
                })?;
                let vote = Vote::from_i8(value).ok_or_else(|| {
                    Error::parse(
                        origin,
                        Some(line),
                        format!("cell value {value} not in {{-1,0,1}}"),
                    )
                })?;
                cells.push(vote);
            }
        }
        LabelMatrix::new(row_ids, column_names, cells)
    }

    /// SHA-256 over the canonical CSV serialization.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_csv_string().as_bytes());
        hex::encode(hasher.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::path::PathBuf;

    fn sample() -> LabelMatrix {
        LabelMatrix::from_rows(
            vec!["a".into(), "b".into()],
            vec!["h1".into(), "h2".into()],
            vec![
                vec![Vote::Positive, Vote::Abstain],
                vec![Vote::Positive, Vote::Negative],
            ],
        )
        .unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let m = sample();
        let text = m.to_csv_string();
        assert_eq!(text, "artifact_id,h1,h2\na,1,0\nb,1,-1\n");
        let back = LabelMatrix::parse_csv(&text, &PathBuf::from("mem")).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn empty_dims_round_trip() {
        let no_rows = LabelMatrix::new(vec![], vec!["h1".into()], vec![]).unwrap();
        let text = no_rows.to_csv_string();
        let back = LabelMatrix::parse_csv(&text, &PathBuf::from("mem")).unwrap();
        assert_eq!(no_rows, back);

        let no_cols = LabelMatrix::new(vec!["a".into()], vec![], vec![]).unwrap();
        let text = no_cols.to_csv_string();
        let back = LabelMatrix::parse_csv(&text, &PathBuf::from("mem")).unwrap();
        assert_eq!(no_cols, back);
    }

    #[test]
    fn rejects_bad_cells() {
        let err = LabelMatrix::parse_csv("artifact_id,h1\na,2\n", &PathBuf::from("mem"));
        assert!(err.is_err());
        let err = LabelMatrix::parse_csv("artifact_id,h1\na,x\n", &PathBuf::from("mem"));
        assert!(err.is_err());
    }

    #[test]
    fn without_column_drops_exactly_one() {
        let m = sample();
        let reduced = m.without_column(0);
        assert_eq!(reduced.column_names(), &["h2".to_string()]);
        assert_eq!(reduced.cell(0, 0), Vote::Abstain);
        assert_eq!(reduced.cell(1, 0), Vote::Negative);
    }

    #[test]
    fn content_hash_tracks_cells() {
        let m = sample();
        let mut other = sample();
        assert_eq!(m.content_hash(), other.content_hash());
        other.cells[0] = Vote::Negative;
        assert_ne!(m.content_hash(), other.content_hash());
    }

    #[test]
    fn quotes_ids_with_commas() {
        let m = LabelMatrix::from_rows(
            vec!["a,b".into()],
            vec!["h1".into()],
            vec![vec![Vote::Positive]],
        )
        .unwrap();
        let text = m.to_csv_string();
        let back = LabelMatrix::parse_csv(&text, &PathBuf::from("mem")).unwrap();
        assert_eq!(back.row_ids()[0], "a,b");
    }
}
