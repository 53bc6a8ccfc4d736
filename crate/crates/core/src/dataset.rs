//! LETOR / SVMlight-style learning-to-rank data.
//!
//! A LETOR line looks like
//!
//! ```text
//! 2 qid:10 1:0.5 3:1.0 # docid = GX000-00-0000000
//! ```
//!
//! Lines sharing a `qid` form one [`Query`]; queries keep the order in which
//! their id first appears. Feature ids are 1-based and anything absent from a
//! line is `0.0`.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while reading datasets from disk.
#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("missing dataset file {path}")]
    MissingFile { path: PathBuf },
    #[error("query {query_id} appears in more than one partition of fold {fold}")]
    OverlappingPartitions { fold: usize, query_id: String },
    #[error("{path}: relevance grade {grade} exceeds the dataset maximum {max_grade}")]
    GradeOutOfRange {
        path: PathBuf,
        grade: u8,
        max_grade: u8,
    },
    #[error("unknown dataset `{0}`")]
    UnknownDataset(String),
    #[error("invalid dataset descriptor: {0}")]
    InvalidDescriptor(String),
}

/// One query-document pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub features: Vec<f64>,
    pub relevance: u8,
    /// Position of the document within its query, in file order.
    pub doc_index: usize,
}

/// A query and its preselected candidate documents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub query_id: String,
    pub documents: Vec<Document>,
}

impl Query {
    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn grades(&self) -> Vec<u8> {
        self.documents.iter().map(|d| d.relevance).collect()
    }

    pub fn feature_dim(&self) -> usize {
        self.documents.first().map_or(0, |d| d.features.len())
    }

    /// Serializes the query back into LETOR lines, one per document.
    pub fn to_letor(&self) -> String {
        let mut out = String::new();
        for doc in &self.documents {
            let _ = write!(out, "{} qid:{}", doc.relevance, self.query_id);
            for (i, value) in doc.features.iter().enumerate() {
                let _ = write!(out, " {}:{}", i + 1, value);
            }
            out.push('\n');
        }
        out
    }
}

/// Train / validation / test partitions of one fold.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<Query>,
    pub validation: Vec<Query>,
    pub test: Vec<Query>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QueryDataset {
    pub name: String,
    pub feature_dim: usize,
    pub max_grade: u8,
    pub folds: Vec<Fold>,
}

/// Describes where a dataset lives and what shape it has.
///
/// Multi-fold datasets are expected in `Fold1/`, `Fold2/`, ... subdirectories
/// of the root; single-fold datasets keep `train.txt`, `vali.txt` and
/// `test.txt` directly in the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub feature_dim: usize,
    pub max_grade: u8,
    pub folds: usize,
    #[serde(default = "default_true")]
    pub normalize: bool,
}

fn default_true() -> bool {
    true
}

impl DatasetSpec {
    pub fn new(name: &str, feature_dim: usize, max_grade: u8, folds: usize) -> Self {
        DatasetSpec {
            name: name.to_string(),
            feature_dim,
            max_grade,
            folds,
            normalize: true,
        }
    }

    pub fn mq2007() -> Self {
        Self::new("MQ2007", 46, 2, 5)
    }

    pub fn mq2008() -> Self {
        Self::new("MQ2008", 46, 2, 5)
    }

    pub fn mslr_web10k() -> Self {
        Self::new("MSLR-WEB10k", 136, 4, 5)
    }

    pub fn yahoo() -> Self {
        Self::new("Yahoo", 700, 4, 1)
    }

    pub fn istella() -> Self {
        Self::new("istella", 220, 4, 1)
    }

    /// Looks up one of the built-in descriptors, ignoring case and dashes.
    pub fn by_name(name: &str) -> Result<Self, DatasetError> {
        let key: String = name
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "mq2007" => Ok(Self::mq2007()),
            "mq2008" => Ok(Self::mq2008()),
            "mslrweb10k" | "mslr10k" => Ok(Self::mslr_web10k()),
            "yahoo" => Ok(Self::yahoo()),
            "istella" => Ok(Self::istella()),
            _ => Err(DatasetError::UnknownDataset(name.to_string())),
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.feature_dim == 0 {
            return Err(DatasetError::InvalidDescriptor(
                "feature_dim must be positive".into(),
            ));
        }
        if self.max_grade != 2 && self.max_grade != 4 {
            return Err(DatasetError::InvalidDescriptor(format!(
                "max_grade must be 2 or 4, got {}",
                self.max_grade
            )));
        }
        if self.folds == 0 {
            return Err(DatasetError::InvalidDescriptor(
                "folds must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Directory holding the partition files of `fold` (0-based).
    pub fn fold_dir(&self, root: &Path, fold: usize) -> PathBuf {
        if self.folds == 1 {
            root.to_path_buf()
        } else {
            root.join(format!("Fold{}", fold + 1))
        }
    }
}

/// Parses a LETOR file into queries grouped by qid.
pub fn parse_letor_file(path: &Path, feature_dim: usize) -> Result<Vec<Query>, DatasetError> {
    let file = File::open(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            DatasetError::MissingFile {
                path: path.to_path_buf(),
            }
        } else {
            DatasetError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    parse_letor(BufReader::new(file), feature_dim, path)
}

/// Parses LETOR lines from any reader. `source` only labels error messages.
pub fn parse_letor<R: BufRead>(
    reader: R,
    feature_dim: usize,
    source: &Path,
) -> Result<Vec<Query>, DatasetError> {
    let mut queries: Vec<Query> = Vec::new();
    let mut by_id: HashMap<String, usize> = HashMap::new();

    for (line_no, line) in reader.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line.map_err(|e| DatasetError::Io {
            path: source.to_path_buf(),
            source: e,
        })?;
        let parse_err = |message: String| DatasetError::Parse {
            path: source.to_path_buf(),
            line: line_no,
            message,
        };

        let content = match line.find('#') {
            Some(pos) => &line[..pos],
            None => &line[..],
        };
        let mut tokens = content.split_whitespace();
        let Some(grade_token) = tokens.next() else {
            continue;
        };
        let relevance = parse_grade(grade_token)
            .ok_or_else(|| parse_err(format!("invalid relevance grade `{grade_token}`")))?;

        let qid_token = tokens
            .next()
            .ok_or_else(|| parse_err("missing qid".to_string()))?;
        let query_id = qid_token
            .strip_prefix("qid:")
            .filter(|id| !id.is_empty())
            .ok_or_else(|| parse_err(format!("expected `qid:<id>`, found `{qid_token}`")))?;

        let mut features = vec![0.0; feature_dim];
        for token in tokens {
            let (id, value) = token
                .split_once(':')
                .ok_or_else(|| parse_err(format!("expected `<fid>:<value>`, found `{token}`")))?;
            let id: usize = id
                .parse()
                .map_err(|_| parse_err(format!("invalid feature id `{id}`")))?;
            if id == 0 || id > feature_dim {
                return Err(parse_err(format!(
                    "feature id {id} outside 1..={feature_dim}"
                )));
            }
            let value: f64 = value
                .parse()
                .map_err(|_| parse_err(format!("invalid feature value `{value}`")))?;
            if !value.is_finite() {
                return Err(parse_err(format!("non-finite feature value `{value}`")));
            }
            features[id - 1] = value;
        }

        let slot = *by_id.entry(query_id.to_string()).or_insert_with(|| {
            queries.push(Query {
                query_id: query_id.to_string(),
                documents: Vec::new(),
            });
            queries.len() - 1
        });
        let query = &mut queries[slot];
        let doc_index = query.documents.len();
        query.documents.push(Document {
            features,
            relevance,
            doc_index,
        });
    }
    Ok(queries)
}

// Some LETOR dumps write integral grades as `2.0`.
fn parse_grade(token: &str) -> Option<u8> {
    if let Ok(g) = token.parse::<u8>() {
        return Some(g);
    }
    let g: f64 = token.parse().ok()?;
    (g >= 0.0 && g.fract() == 0.0 && g <= f64::from(u8::MAX)).then_some(g as u8)
}

/// Min-max scales every feature column to `[0, 1]` within the query.
///
/// Columns that are constant across the query's documents become `0.0`.
pub fn normalize_per_query(mut query: Query) -> Query {
    let dim = query.feature_dim();
    for column in 0..dim {
        let (lo, hi) = query
            .documents
            .iter()
            .map(|d| d.features[column])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        let range = hi - lo;
        for doc in &mut query.documents {
            let v = &mut doc.features[column];
            *v = if range > 0.0 { (*v - lo) / range } else { 0.0 };
        }
    }
    query
}

/// Loads every fold of a dataset described by `spec` from `root`.
pub fn load_dataset(root: &Path, spec: &DatasetSpec) -> Result<QueryDataset, DatasetError> {
    spec.validate()?;
    let mut folds = Vec::with_capacity(spec.folds);
    for fold in 0..spec.folds {
        let dir = spec.fold_dir(root, fold);
        let load = |file: &str| -> Result<Vec<Query>, DatasetError> {
            let path = dir.join(file);
            let queries = parse_letor_file(&path, spec.feature_dim)?;
            for query in &queries {
                for doc in &query.documents {
                    if doc.relevance > spec.max_grade {
                        return Err(DatasetError::GradeOutOfRange {
                            path: path.clone(),
                            grade: doc.relevance,
                            max_grade: spec.max_grade,
                        });
                    }
                }
            }
            Ok(if spec.normalize {
                queries.into_iter().map(normalize_per_query).collect()
            } else {
                queries
            })
        };
        let fold_data = Fold {
            train: load("train.txt")?,
            validation: load("vali.txt")?,
            test: load("test.txt")?,
        };
        check_disjoint(fold, &fold_data)?;
        folds.push(fold_data);
    }
    Ok(QueryDataset {
        name: spec.name.clone(),
        feature_dim: spec.feature_dim,
        max_grade: spec.max_grade,
        folds,
    })
}

fn check_disjoint(fold: usize, data: &Fold) -> Result<(), DatasetError> {
    let mut seen = HashSet::new();
    for query in data.train.iter().chain(&data.validation).chain(&data.test) {
        if !seen.insert(query.query_id.as_str()) {
            return Err(DatasetError::OverlappingPartitions {
                fold: fold + 1,
                query_id: query.query_id.clone(),
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn parse(text: &str, dim: usize) -> Result<Vec<Query>, DatasetError> {
        parse_letor(Cursor::new(text), dim, Path::new("mem"))
    }

    #[test]
    fn single_line_maps_fields() {
        let q = parse("2 qid:10 1:0.5 3:1.0", 3).unwrap();
        assert_eq!(q.len(), 1);
        assert_eq!(q[0].query_id, "10");
        assert_eq!(q[0].documents[0].features, vec![0.5, 0.0, 1.0]);
        assert_eq!(q[0].documents[0].relevance, 2);
    }

    #[test]
    fn groups_by_qid_in_file_order() {
        let q = parse("1 qid:10 1:1\n0 qid:11 1:2\n2 qid:10 1:3 # trailing\n", 1).unwrap();
        assert_eq!(q.len(), 2);
        assert_eq!(q[0].query_id, "10");
        assert_eq!(q[0].documents.len(), 2);
        assert_eq!(q[0].documents[1].features, vec![3.0]);
        assert_eq!(q[0].documents[1].doc_index, 1);
        assert_eq!(q[1].query_id, "11");
    }

    #[test]
    fn out_of_range_feature_names_line() {
        let err = parse("1 qid:1 1:0\n2 qid:10 5:1.0", 3).unwrap_err();
        match err {
            DatasetError::Parse { line, message, .. } => {
                assert_eq!(line, 2);
                assert!(message.contains('5'), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_lines_are_rejected() {
        for bad in [
            "x qid:1 1:1",
            "1 1:1",
            "1 qid:1 1=2",
            "1 qid:1 0:1",
            "1 qid:1 a:1",
        ] {
            assert!(
                matches!(parse(bad, 3), Err(DatasetError::Parse { line: 1, .. })),
                "{bad}"
            );
        }
    }

    #[test]
    fn empty_input_is_not_an_error() {
        assert!(parse("", 3).unwrap().is_empty());
        assert!(parse("\n   \n# only comment\n", 3).unwrap().is_empty());
    }

    #[test]
    fn float_grades_accepted() {
        let q = parse("2.0 qid:1 1:1", 1).unwrap();
        assert_eq!(q[0].documents[0].relevance, 2);
        assert!(parse("1.5 qid:1 1:1", 1).is_err());
    }

    fn column_query(col: &[f64]) -> Query {
        Query {
            query_id: "q".into(),
            documents: col
                .iter()
                .enumerate()
                .map(|(i, &v)| Document {
                    features: vec![v],
                    relevance: 1,
                    doc_index: i,
                })
                .collect(),
        }
    }

    fn column(q: &Query) -> Vec<f64> {
        q.documents.iter().map(|d| d.features[0]).collect()
    }

    #[test]
    fn min_max_scaling() {
        assert_eq!(
            column(&normalize_per_query(column_query(&[2.0, 4.0, 6.0]))),
            vec![0.0, 0.5, 1.0]
        );
        assert_eq!(
            column(&normalize_per_query(column_query(&[3.0, 3.0]))),
            vec![0.0, 0.0]
        );
        assert_eq!(
            column(&normalize_per_query(column_query(&[7.5]))),
            vec![0.0]
        );
    }

    #[test]
    fn normalization_keeps_grades() {
        let q = parse("2 qid:1 1:5\n0 qid:1 1:9\n", 1).unwrap().remove(0);
        let n = normalize_per_query(q.clone());
        assert_eq!(n.grades(), q.grades());
    }

    #[test]
    fn descriptors() {
        let mq = DatasetSpec::by_name("MQ2008").unwrap();
        assert_eq!((mq.feature_dim, mq.max_grade, mq.folds), (46, 2, 5));
        let mslr = DatasetSpec::by_name("mslr-web10k").unwrap();
        assert_eq!((mslr.feature_dim, mslr.max_grade, mslr.folds), (136, 4, 5));
        assert!(DatasetSpec::by_name("nope").is_err());
        assert!(DatasetSpec::new("x", 3, 3, 1).validate().is_err());
    }
}
