//! Loading and serving per-language embedding spaces and aligned item sets.
//!
//! The on-disk format is the standard `.vec` text layout: a `<count> <dim>`
//! header line, then one `token v1 v2 ... vdim` line per row, single-space
//! separated, UTF-8, LF or CRLF. Values are stored as `f32` (the text format
//! carries at most 7 significant digits) and normalization arithmetic runs in
//! `f64`.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::language::LanguageId;
use crate::numeric::norm_f32_as_f64;

/// Default vocabulary cap applied when loading word spaces.
pub const DEFAULT_VOCAB_CAP: usize = 200_000;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: cannot read file: {source}")]
    Io {
        path: PathBuf,
        source: io::Error,
    },
    #[error("{path}:1: malformed header {found:?}, expected \"<count> <dim>\"")]
    MalformedHeader { path: PathBuf, found: String },
    #[error("{path}:{line}: row has {got} values, expected {expected}")]
    RowArity {
        path: PathBuf,
        line: usize,
        expected: usize,
        got: usize,
    },
    #[error("{path}:{line}: non-finite value {value:?}")]
    NonFinite {
        path: PathBuf,
        line: usize,
        value: String,
    },
    #[error("{path}:{line}: zero-norm row {token:?} cannot be normalized")]
    ZeroNorm {
        path: PathBuf,
        line: usize,
        token: String,
    },
    #[error("{path}: no rows loaded")]
    EmptyVocabulary { path: PathBuf },
    #[error("vocabulary cap must be positive")]
    ZeroCap,
    #[error("duplicate token {0:?} in programmatic construction")]
    DuplicateToken(String),
    #[error("rows have inconsistent dimensions: {expected} vs {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("aligned item ids differ across languages; not shared by all: {missing:?}")]
    ItemIdMismatch { missing: Vec<String> },
    #[error("duplicate language {0} in aligned-item inputs")]
    DuplicateLanguage(LanguageId),
    #[error("aligned-item inputs are empty")]
    NoAlignedInputs,
    #[error("{path}: manifest error: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("manifest lists language {0} more than once for the same role")]
    ManifestDuplicateLanguage(LanguageId),
}

/// One language's vocabulary mapped to fixed-dimension vectors.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug)]
pub struct EmbeddingSpace {
    language: LanguageId,
    dim: usize,
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    matrix: Vec<f32>,
    row_norms: Option<Vec<f64>>,
    unit_normalized: bool,
}

impl EmbeddingSpace {
    /// Build a space from `(token, vector)` rows.
    ///
    /// Rows keep their given order. Duplicate tokens are rejected here;
    /// the file loader deduplicates before calling.
    pub fn from_rows(
        language: LanguageId,
        rows: Vec<(String, Vec<f32>)>,
        normalize: bool,
    ) -> Result<Self, StoreError> {
        let dim = match rows.first() {
            Some((_, v)) => v.len(),
            None => {
                return Err(StoreError::EmptyVocabulary {
                    path: PathBuf::from("<memory>"),
                })
            }
        };
        let mut tokens = Vec::with_capacity(rows.len());
        let mut index = HashMap::with_capacity(rows.len());
        let mut matrix = Vec::with_capacity(rows.len() * dim);
        for (token, vector) in rows {
            if vector.len() != dim {
                return Err(StoreError::DimMismatch {
                    expected: dim,
                    got: vector.len(),
                });
            }
            if index.insert(token.clone(), tokens.len()).is_some() {
                return Err(StoreError::DuplicateToken(token));
            }
            tokens.push(token);
            matrix.extend_from_slice(&vector);
        }
        let mut space = EmbeddingSpace {
            language,
            dim,
            tokens,
            index,
            matrix,
            row_norms: None,
            unit_normalized: false,
        };
        if normalize {
            space.normalize_in_place().map_err(|token| StoreError::ZeroNorm {
                path: PathBuf::from("<memory>"),
                line: 0,
                token,
            })?;
        } else {
            space.compute_norms();
        }
        Ok(space)
    }

    /// Load a `.vec` file.
    ///
    /// The first `vocab_cap` distinct tokens are kept in file order;
    /// duplicate tokens keep their first occurrence. When the header count
    /// disagrees with the actual number of rows, the actual rows win and a
    /// warning is logged.
    pub fn load_vec_file(
        path: &Path,
        language: LanguageId,
        vocab_cap: usize,
        normalize: bool,
    ) -> Result<Self, StoreError> {
        if vocab_cap == 0 {
            return Err(StoreError::ZeroCap);
        }
        let file = File::open(path).map_err(|source| StoreError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut reader = BufReader::new(file);

        let mut header = String::new();
        reader
            .read_line(&mut header)
            .map_err(|source| StoreError::Io {
                path: path.to_path_buf(),
                source,
            })?;
        let header = header.trim_end_matches(['\n', '\r']);
        let mut parts = header.split(' ');
        let (count, dim) = match (
            parts.next().and_then(|s| s.parse::<usize>().ok()),
            parts.next().and_then(|s| s.parse::<usize>().ok()),
            parts.next(),
        ) {
            (Some(c), Some(d), None) if d > 0 => (c, d),
            _ => {
                return Err(StoreError::MalformedHeader {
                    path: path.to_path_buf(),
                    found: header.to_string(),
                })
            }
        };

        let mut tokens: Vec<String> = Vec::new();
        let mut index: HashMap<String, usize> = HashMap::new();
        let mut matrix: Vec<f32> = Vec::new();
        let mut data_lines = 0usize;
        let mut line_no = 1usize;
        let mut line = String::new();
        loop {
            line.clear();
            let read = reader
                .read_line(&mut line)
                .map_err(|source| StoreError::Io {
                    path: path.to_path_buf(),
                    source,
                })?;
            if read == 0 {
                break;
            }
            line_no += 1;
            let row = line.trim_end_matches(['\n', '\r']);
            if row.is_empty() {
                continue;
            }
            data_lines += 1;
            if tokens.len() >= vocab_cap {
                // keep counting lines for the header-consistency warning
                continue;
            }
            let mut fields = row.split(' ');
            let token = fields.next().unwrap_or("");
            let mut values = Vec::with_capacity(dim);
            for field in fields.by_ref() {
                let v: f32 = field.parse().map_err(|_| StoreError::NonFinite {
                    path: path.to_path_buf(),
                    line: line_no,
                    value: field.to_string(),
                })?;
                if !v.is_finite() {
                    return Err(StoreError::NonFinite {
                        path: path.to_path_buf(),
                        line: line_no,
                        value: field.to_string(),
                    });
                }
                values.push(v);
            }
            if values.len() != dim {
                return Err(StoreError::RowArity {
                    path: path.to_path_buf(),
                    line: line_no,
                    expected: dim,
                    got: values.len(),
                });
            }
            if index.contains_key(token) {
                continue;
            }
            if normalize {
                let norm = norm_f32_as_f64(&values);
                if norm == 0.0 {
                    return Err(StoreError::ZeroNorm {
                        path: path.to_path_buf(),
                        line: line_no,
                        token: token.to_string(),
                    });
                }
                for v in &mut values {
                    *v = (f64::from(*v) / norm) as f32;
                }
            }
            index.insert(token.to_string(), tokens.len());
            tokens.push(token.to_string());
            matrix.extend_from_slice(&values);
        }

        if tokens.is_empty() {
            return Err(StoreError::EmptyVocabulary {
                path: path.to_path_buf(),
            });
        }
        if data_lines != count {
            log::warn!(
                "{}: header declares {} rows but file has {}; using actual rows",
                path.display(),
                count,
                data_lines
            );
        }

        let mut space = EmbeddingSpace {
            language,
            dim,
            tokens,
            index,
            matrix,
            row_norms: None,
            unit_normalized: normalize,
        };
        if !normalize {
            space.compute_norms();
        }
        Ok(space)
    }

    /// Write the space back out in `.vec` format.
    ///
    /// Values are printed with the shortest representation that parses back
    /// to the stored `f32`, so a load/write round trip preserves values to
    /// at least 6 significant digits.
    pub fn write_vec_file(&self, path: &Path) -> io::Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "{} {}", self.len(), self.dim)?;
        for (i, token) in self.tokens.iter().enumerate() {
            write!(w, "{token}")?;
            for v in self.row(i) {
                write!(w, " {v}")?;
            }
            writeln!(w)?;
        }
        w.flush()
    }

    /// Byte-exact token lookup; no case folding or Unicode normalization.
    pub fn lookup(&self, token: &str) -> Option<&[f32]> {
        self.index.get(token).map(|&i| self.row(i))
    }

    pub fn language(&self) -> &LanguageId {
        &self.language
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of vocabulary entries.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, row: usize) -> &str {
        &self.tokens[row]
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.matrix[i * self.dim..(i + 1) * self.dim]
    }

    /// Precomputed row L2 norm; 1.0 for unit-normalized spaces.
    pub fn row_norm(&self, i: usize) -> f64 {
        match &self.row_norms {
            Some(norms) => norms[i],
            None => 1.0,
        }
    }

    pub fn is_unit_normalized(&self) -> bool {
        self.unit_normalized
    }

    /// L2-normalize every row. Idempotent: a space already flagged
    /// unit-normalized is left untouched.
    pub fn normalize(&mut self) -> Result<(), StoreError> {
        if self.unit_normalized {
            return Ok(());
        }
        self.normalize_in_place().map_err(|token| StoreError::ZeroNorm {
            path: PathBuf::from("<memory>"),
            line: 0,
            token,
        })
    }

    fn normalize_in_place(&mut self) -> Result<(), String> {
        for i in 0..self.len() {
            let norm = norm_f32_as_f64(self.row(i));
            if norm == 0.0 {
                return Err(self.tokens[i].clone());
            }
            for v in &mut self.matrix[i * self.dim..(i + 1) * self.dim] {
                *v = (f64::from(*v) / norm) as f32;
            }
        }
        self.unit_normalized = true;
        self.row_norms = None;
        Ok(())
    }

    fn compute_norms(&mut self) {
        let norms = (0..self.len()).map(|i| norm_f32_as_f64(self.row(i))).collect();
        self.row_norms = Some(norms);
    }
}

/// Item-aligned vectors for several languages: one row per item per
/// language, identical item ids and ordering everywhere.
#[derive(Debug)]
pub struct AlignedItemSet {
    item_ids: Vec<String>,
    dim: usize,
    languages: Vec<LanguageId>,
    matrices: Vec<Vec<f32>>,
}

impl AlignedItemSet {
    /// Build from per-language `(item_id, vector)` rows.
    ///
    /// Item ordering follows the first language; every other language must
    /// cover exactly the same ids.
    pub fn from_rows(
        entries: Vec<(LanguageId, Vec<(String, Vec<f32>)>)>,
    ) -> Result<Self, StoreError> {
        if entries.is_empty() {
            return Err(StoreError::NoAlignedInputs);
        }
        let mut seen = BTreeSet::new();
        for (lang, _) in &entries {
            if !seen.insert(lang.clone()) {
                return Err(StoreError::DuplicateLanguage(lang.clone()));
            }
        }
        let reference: Vec<String> = entries[0].1.iter().map(|(id, _)| id.clone()).collect();
        let ref_set: BTreeSet<&String> = reference.iter().collect();
        let dim = entries[0]
            .1
            .first()
            .map(|(_, v)| v.len())
            .ok_or(StoreError::NoAlignedInputs)?;

        let mut languages = Vec::with_capacity(entries.len());
        let mut matrices = Vec::with_capacity(entries.len());
        for (lang, rows) in &entries {
            let ids: BTreeSet<&String> = rows.iter().map(|(id, _)| id).collect();
            if ids != ref_set || rows.len() != reference.len() {
                let missing: Vec<String> = ref_set
                    .symmetric_difference(&ids)
                    .map(|s| s.to_string())
                    .collect();
                return Err(StoreError::ItemIdMismatch { missing });
            }
            let by_id: HashMap<&String, &Vec<f32>> =
                rows.iter().map(|(id, v)| (id, v)).collect();
            let mut matrix = Vec::with_capacity(reference.len() * dim);
            for id in &reference {
                let v = by_id[id];
                if v.len() != dim {
                    return Err(StoreError::DimMismatch {
                        expected: dim,
                        got: v.len(),
                    });
                }
                matrix.extend_from_slice(v);
            }
            languages.push(lang.clone());
            matrices.push(matrix);
        }
        Ok(AlignedItemSet {
            item_ids: reference,
            dim,
            languages,
            matrices,
        })
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn len(&self) -> usize {
        self.item_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.item_ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn languages(&self) -> &[LanguageId] {
        &self.languages
    }

    pub fn language_index(&self, language: &LanguageId) -> Option<usize> {
        self.languages.iter().position(|l| l == language)
    }

    pub fn row(&self, language_idx: usize, item_idx: usize) -> &[f32] {
        &self.matrices[language_idx][item_idx * self.dim..(item_idx + 1) * self.dim]
    }
}

/// Load aligned per-item vectors from `.vec`-style files, one per language.
///
/// Item ids are the tokens; ordering follows the first entry's file. Id sets
/// must be identical across files; the error lists ids not shared by all.
pub fn load_aligned_items(
    entries: &[(LanguageId, PathBuf)],
) -> Result<AlignedItemSet, StoreError> {
    let loaded: Vec<(LanguageId, Vec<(String, Vec<f32>)>)> = entries
        .iter()
        .map(|(lang, path)| {
            let space =
                EmbeddingSpace::load_vec_file(path, lang.clone(), usize::MAX, false)?;
            let rows = (0..space.len())
                .map(|i| (space.token(i).to_string(), space.row(i).to_vec()))
                .collect();
            Ok((lang.clone(), rows))
        })
        .collect::<Result<_, StoreError>>()?;
    AlignedItemSet::from_rows(loaded)
}

/// Role of one manifest entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpaceRole {
    WordSpace,
    AlignedItems,
}

/// One line of the workspace manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub language: LanguageId,
    pub path: String,
    pub role: SpaceRole,
}

/// A workspace manifest: the JSON file is a list of
/// `{language, path, role}` objects. Relative paths are resolved against
/// the manifest's directory.
#[derive(Debug, Clone)]
pub struct Manifest {
    base: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self, StoreError> {
        let text = std::fs::read_to_string(path).map_err(|source| StoreError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let entries: Vec<ManifestEntry> =
            serde_json::from_str(&text).map_err(|e| StoreError::Manifest {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        if entries.is_empty() {
            return Err(StoreError::Manifest {
                path: path.to_path_buf(),
                message: "manifest has no entries".to_string(),
            });
        }
        for role in [SpaceRole::WordSpace, SpaceRole::AlignedItems] {
            let mut seen = BTreeSet::new();
            for e in entries.iter().filter(|e| e.role == role) {
                if !seen.insert(e.language.clone()) {
                    return Err(StoreError::ManifestDuplicateLanguage(e.language.clone()));
                }
            }
        }
        let base = path
            .parent()
            .map(|p| p.to_path_buf())
            .unwrap_or_else(|| PathBuf::from("."));
        Ok(Manifest { base, entries })
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        let p = Path::new(&entry.path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    pub fn entries_with_role(&self, role: SpaceRole) -> Vec<&ManifestEntry> {
        self.entries.iter().filter(|e| e.role == role).collect()
    }

    /// Load every word-space entry, in manifest order. Files load in
    /// parallel; each file is read single-threaded.
    pub fn load_word_spaces(
        &self,
        vocab_cap: usize,
        normalize: bool,
    ) -> Result<Vec<EmbeddingSpace>, StoreError> {
        self.entries_with_role(SpaceRole::WordSpace)
            .par_iter()
            .map(|e| {
                EmbeddingSpace::load_vec_file(
                    &self.resolve(e),
                    e.language.clone(),
                    vocab_cap,
                    normalize,
                )
            })
            .collect()
    }

    /// Load the aligned-items entries as one AlignedItemSet, in manifest order.
    pub fn load_aligned_items(&self) -> Result<AlignedItemSet, StoreError> {
        let entries: Vec<(LanguageId, PathBuf)> = self
            .entries_with_role(SpaceRole::AlignedItems)
            .iter()
            .map(|e| (e.language.clone(), self.resolve(e)))
            .collect();
        load_aligned_items(&entries)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        use std::io::Write as _;
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn lang(code: &str) -> LanguageId {
        LanguageId::new(code).unwrap()
    }

    #[test]
    fn loads_small_file() {
        let f = write_tmp("3 4\na 1 2 3 4\nb 0.5 0 0 0\nc -1 -2 -3 -4\n");
        let space =
            EmbeddingSpace::load_vec_file(f.path(), lang("en"), DEFAULT_VOCAB_CAP, false)
                .unwrap();
        assert_eq!(space.len(), 3);
        assert_eq!(space.dim(), 4);
        assert_eq!(space.lookup("a").unwrap(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(space.lookup("missing"), None);
    }

    #[test]
    fn cap_truncates_vocab() {
        let mut content = String::from("5 2\n");
        for i in 0..5 {
            content.push_str(&format!("t{i} {i} {i}\n"));
        }
        let f = write_tmp(&content);
        let space = EmbeddingSpace::load_vec_file(f.path(), lang("en"), 3, false).unwrap();
        assert_eq!(space.len(), 3);
        assert_eq!(space.tokens(), &["t0", "t1", "t2"]);
    }

    #[test]
    fn cap_prefix_property() {
        let mut content = String::from("6 2\n");
        for i in 0..6 {
            content.push_str(&format!("t{i} {i} 1\n"));
        }
        let f = write_tmp(&content);
        let small = EmbeddingSpace::load_vec_file(f.path(), lang("en"), 4, false).unwrap();
        let big = EmbeddingSpace::load_vec_file(f.path(), lang("en"), 5, false).unwrap();
        assert_eq!(small.tokens(), &big.tokens()[..4]);
    }

    #[test]
    fn arity_error_names_line() {
        let f = write_tmp("2 4\na 1 2 3 4\nfoo 1 2\n");
        let err = EmbeddingSpace::load_vec_file(f.path(), lang("en"), 10, false).unwrap_err();
        match err {
            StoreError::RowArity { line, expected, got, .. } => {
                assert_eq!((line, expected, got), (3, 4, 2));
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn non_finite_rejected() {
        let f = write_tmp("1 2\na nan 1\n");
        assert!(matches!(
            EmbeddingSpace::load_vec_file(f.path(), lang("en"), 10, false),
            Err(StoreError::NonFinite { line: 2, .. })
        ));
        let f = write_tmp("1 2\na 1e9999 1\n");
        assert!(matches!(
            EmbeddingSpace::load_vec_file(f.path(), lang("en"), 10, false),
            Err(StoreError::NonFinite { line: 2, .. })
        ));
    }

    #[test]
    fn zero_norm_rejected_under_normalize() {
        let f = write_tmp("2 2\na 1 1\nz 0 0\n");
        assert!(matches!(
            EmbeddingSpace::load_vec_file(f.path(), lang("en"), 10, true),
            Err(StoreError::ZeroNorm { line: 3, .. })
        ));
        // same file loads fine without normalization
        assert!(EmbeddingSpace::load_vec_file(f.path(), lang("en"), 10, false).is_ok());
    }

    #[test]
    fn malformed_header() {
        let f = write_tmp("not a header\na 1 2\n");
        assert!(matches!(
            EmbeddingSpace::load_vec_file(f.path(), lang("en"), 10, false),
            Err(StoreError::MalformedHeader { .. })
        ));
    }

    #[test]
    fn duplicates_keep_first() {
        let f = write_tmp("3 2\na 1 0\na 9 9\nb 0 1\n");
        let space = EmbeddingSpace::load_vec_file(f.path(), lang("en"), 10, false).unwrap();
        assert_eq!(space.len(), 2);
        assert_eq!(space.lookup("a").unwrap(), &[1.0, 0.0]);
    }

    #[test]
    fn crlf_accepted() {
        let f = write_tmp("2 2\r\na 1 0\r\nb 0 1\r\n");
        let space = EmbeddingSpace::load_vec_file(f.path(), lang("en"), 10, false).unwrap();
        assert_eq!(space.len(), 2);
    }

    #[test]
    fn normalization_unit_norm() {
        let f = write_tmp("2 3\na 3 4 0\nb 1 1 1\n");
        let space = EmbeddingSpace::load_vec_file(f.path(), lang("en"), 10, true).unwrap();
        assert!(space.is_unit_normalized());
        for i in 0..space.len() {
            let norm = norm_f32_as_f64(space.row(i));
            assert!((norm - 1.0).abs() < 1e-6, "row {i} norm {norm}");
        }
    }

    #[test]
    fn normalize_is_idempotent() {
        let f = write_tmp("2 3\na 3 4 0\nb 1 1 1\n");
        let mut space = EmbeddingSpace::load_vec_file(f.path(), lang("en"), 10, true).unwrap();
        let before = space.row(0).to_vec();
        space.normalize().unwrap();
        for (x, y) in before.iter().zip(space.row(0)) {
            assert!((f64::from(*x) - f64::from(*y)).abs() <= 1e-12);
        }
    }

    #[test]
    fn round_trip_preserves_values() {
        let f = write_tmp("2 3\nalpha 0.123456 -9.87654 3.5\nbeta 1 2 3\n");
        let space = EmbeddingSpace::load_vec_file(f.path(), lang("en"), 10, false).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        space.write_vec_file(out.path()).unwrap();
        let reread =
            EmbeddingSpace::load_vec_file(out.path(), lang("en"), 10, false).unwrap();
        assert_eq!(space.tokens(), reread.tokens());
        for i in 0..space.len() {
            assert_eq!(space.row(i), reread.row(i), "row {i} changed in round trip");
        }
    }

    #[test]
    fn aligned_items_consistent_ordering() {
        let a = write_tmp("3 2\ns1 1 0\ns2 0 1\ns3 1 1\n");
        let b = write_tmp("3 2\ns3 2 2\ns1 2 0\ns2 0 2\n");
        let set = load_aligned_items(&[
            (lang("en"), a.path().to_path_buf()),
            (lang("de"), b.path().to_path_buf()),
        ])
        .unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(set.languages().len(), 2);
        assert_eq!(set.item_ids(), &["s1", "s2", "s3"]);
        // de rows follow en's ordering
        assert_eq!(set.row(1, 0), &[2.0, 0.0]);
    }

    #[test]
    fn aligned_items_id_mismatch() {
        let a = write_tmp("2 2\ns1 1 0\ns2 0 1\n");
        let b = write_tmp("2 2\ns1 1 0\ns3 0 1\n");
        let err = load_aligned_items(&[
            (lang("en"), a.path().to_path_buf()),
            (lang("de"), b.path().to_path_buf()),
        ])
        .unwrap_err();
        match err {
            StoreError::ItemIdMismatch { missing } => {
                assert_eq!(missing, vec!["s2".to_string(), "s3".to_string()]);
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let vec_path = dir.path().join("en.vec");
        std::fs::write(&vec_path, "1 2\na 1 0\n").unwrap();
        let manifest_path = dir.path().join("manifest.json");
        std::fs::write(
            &manifest_path,
            r#"[{"language": "en", "path": "en.vec", "role": "word-space"}]"#,
        )
        .unwrap();
        let manifest = Manifest::read(&manifest_path).unwrap();
        let spaces = manifest.load_word_spaces(100, true).unwrap();
        assert_eq!(spaces.len(), 1);
        assert_eq!(spaces[0].language().as_str(), "en");
    }
}
