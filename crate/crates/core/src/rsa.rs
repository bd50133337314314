//! Representational similarity analysis: per-language cosine matrices,
//! Spearman rank correlation of similarity vectors, and the second-order
//! language-similarity matrix.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::align::ConceptSet;
use crate::language::LanguageId;
use crate::numeric::{cosine_f32, population_variance};

#[derive(Debug, Error)]
pub enum RsaError {
    #[error("vectors have different lengths: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 values, got {0}")]
    TooShort(usize),
    #[error("language {0} is not resolved in the concept set")]
    UnresolvedLanguage(LanguageId),
    #[error("concept orderings differ between the two matrices")]
    ConceptOrderMismatch,
    #[error("need at least 2 languages, got {0}")]
    TooFewLanguages(usize),
    #[error("similarity vectors have fewer than 2 entries with the diagonal excluded")]
    DegenerateRowLength,
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}: malformed matrix csv: {message}")]
    MatrixParse { path: String, message: String },
    #[error(transparent)]
    Language(#[from] crate::language::LanguageIdError),
}

/// Options shared by the row-correlation operations.
#[derive(Debug, Clone, Copy)]
pub struct RsaOptions {
    /// Include each concept's self-similarity entry in its similarity
    /// vector (the default; the worked form of the method keeps it).
    pub include_diagonal: bool,
}

impl Default for RsaOptions {
    fn default() -> Self {
        RsaOptions {
            include_diagonal: true,
        }
    }
}

/// N x N cosine matrix over one language's resolved concept vectors.
#[derive(Debug, Clone, Serialize)]
pub struct Rsm {
    pub language: LanguageId,
    pub concepts: Vec<String>,
    /// Row-major N x N values; symmetric, unit diagonal.
    pub values: Vec<f64>,
}

impl Rsm {
    pub fn n(&self) -> usize {
        self.concepts.len()
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n() + j]
    }

    /// Row i: the similarity vector of concept i.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n()..(i + 1) * self.n()]
    }

    /// CSV with a label header row and a label first column, values with
    /// 9 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), RsaError> {
        write_labeled_matrix(w, &self.concepts, &self.values)
    }
}

/// Symmetric L x L matrix of pairwise language similarities.
#[derive(Debug, Clone, Serialize)]
pub struct LanguageSimilarityMatrix {
    pub languages: Vec<LanguageId>,
    /// Row-major L x L values; symmetric, unit diagonal.
    pub values: Vec<f64>,
    /// Total count of degenerate (constant) similarity vectors encountered
    /// while averaging; those rows entered the means at value 0.
    pub degenerate_rows: usize,
}

impl LanguageSimilarityMatrix {
    pub fn len(&self) -> usize {
        self.languages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.languages.is_empty()
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.len()..(i + 1) * self.len()]
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), RsaError> {
        let labels: Vec<String> = self.languages.iter().map(|l| l.to_string()).collect();
        write_labeled_matrix(w, &labels, &self.values)
    }

    /// Read a matrix previously written by `write_csv`. Lines starting with
    /// `#` are skipped.
    pub fn read_csv(path: &std::path::Path) -> Result<Self, RsaError> {
        let text = std::fs::read_to_string(path)?;
        let parse_err = |message: &str| RsaError::MatrixParse {
            path: path.display().to_string(),
            message: message.to_string(),
        };
        let mut rows = text
            .lines()
            .filter(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty());
        let header = rows.next().ok_or_else(|| parse_err("empty file"))?;
        let labels: Vec<&str> = header.split(',').skip(1).collect();
        let languages: Vec<LanguageId> = labels
            .iter()
            .map(|l| LanguageId::new(l.trim()))
            .collect::<Result<_, _>>()?;
        let n = languages.len();
        if n < 2 {
            return Err(RsaError::TooFewLanguages(n));
        }
        let mut values = vec![0.0; n * n];
        let mut count = 0usize;
        for (i, line) in rows.enumerate() {
            let mut fields = line.split(',');
            let row_label = fields.next().ok_or_else(|| parse_err("missing row label"))?;
            if i >= n || row_label.trim() != labels[i].trim() {
                return Err(parse_err("row labels do not match header"));
            }
            for j in 0..n {
                let field = fields
                    .next()
                    .ok_or_else(|| parse_err("row has too few values"))?;
                values[i * n + j] = field
                    .trim()
                    .parse()
                    .map_err(|_| parse_err("unparseable value"))?;
            }
            if fields.next().is_some() {
                return Err(parse_err("row has too many values"));
            }
            count += 1;
        }
        if count != n {
            return Err(parse_err("row count does not match header"));
        }
        Ok(LanguageSimilarityMatrix {
            languages,
            values,
            degenerate_rows: 0,
        })
    }
}

fn write_labeled_matrix<W: Write>(
    mut w: W,
    labels: &[String],
    values: &[f64],
) -> Result<(), RsaError> {
    let n = labels.len();
    let mut writer = csv::WriterBuilder::new().from_writer(&mut w);
    let mut header = vec![String::new()];
    header.extend(labels.iter().cloned());
    writer.write_record(&header)?;
    for i in 0..n {
        let mut record = vec![labels[i].clone()];
        record.extend((0..n).map(|j| format!("{:.8e}", values[i * n + j])));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

/// Spearman correlation plus a degeneracy flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpearmanResult {
    pub rho: f64,
    /// Set when either input was constant; `rho` is then 0 by convention
    /// so downstream means stay defined.
    pub degenerate: bool,
}

/// Spearman rank correlation: Pearson correlation of average ranks.
/// Tied values receive the mean of the rank positions they span.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<SpearmanResult, RsaError> {
    if x.len() != y.len() {
        return Err(RsaError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(RsaError::TooShort(x.len()));
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    if rx == ry {
        // identical rank vectors correlate exactly; also keeps
        // sim(A, A) = 1 free of rounding
        return Ok(SpearmanResult {
            rho: 1.0,
            degenerate: false,
        });
    }
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        let dx = a - mx;
        let dy = b - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(SpearmanResult {
            rho: 0.0,
            degenerate: true,
        });
    }
    Ok(SpearmanResult {
        rho: sxy / (sxx.sqrt() * syy.sqrt()),
        degenerate: false,
    })
}

/// Average ranks, 1-based; ties get the mean of the positions they cover.
fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Build the cosine similarity matrix for one language of a concept set.
pub fn build_rsm(set: &ConceptSet, language: &LanguageId) -> Result<Rsm, RsaError> {
    let lang_idx = set
        .language_index(language)
        .ok_or_else(|| RsaError::UnresolvedLanguage(language.clone()))?;
    let n = set.n();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        values[i * n + i] = 1.0;
        for j in (i + 1)..n {
            let c = cosine_f32(
                &set.resolution(lang_idx, i).vector,
                &set.resolution(lang_idx, j).vector,
            );
            values[i * n + j] = c;
            values[j * n + i] = c;
        }
    }
    Ok(Rsm {
        language: language.clone(),
        concepts: set.concepts().to_vec(),
        values,
    })
}

/// Similarity of two languages: the mean over concepts of the Spearman
/// correlation between their similarity vectors.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PairSimilarity {
    pub value: f64,
    /// Number of concept rows whose correlation was degenerate (entered
    /// the mean at 0).
    pub degenerate_rows: usize,
}

pub fn language_pair_similarity(
    a: &Rsm,
    b: &Rsm,
    opts: &RsaOptions,
) -> Result<PairSimilarity, RsaError> {
    if a.concepts != b.concepts {
        return Err(RsaError::ConceptOrderMismatch);
    }
    let n = a.n();
    if !opts.include_diagonal && n < 3 {
        return Err(RsaError::DegenerateRowLength);
    }
    let mut sum = 0.0;
    let mut degenerate_rows = 0usize;
    let mut xa = Vec::with_capacity(n);
    let mut xb = Vec::with_capacity(n);
    for i in 0..n {
        let (ra, rb) = if opts.include_diagonal {
            (a.row(i), b.row(i))
        } else {
            xa.clear();
            xb.clear();
            for j in 0..n {
                if j != i {
                    xa.push(a.value(i, j));
                    xb.push(b.value(i, j));
                }
            }
            (xa.as_slice(), xb.as_slice())
        };
        let r = spearman(ra, rb)?;
        if r.degenerate {
            degenerate_rows += 1;
        }
        sum += r.rho;
    }
    Ok(PairSimilarity {
        value: sum / n as f64,
        degenerate_rows,
    })
}

/// Build one RSM per language of the set, in language order.
pub fn build_all_rsms(set: &ConceptSet) -> Result<Vec<Rsm>, RsaError> {
    set.languages()
        .par_iter()
        .map(|lang| build_rsm(set, lang))
        .collect()
}

/// Second-order similarity matrix over all language pairs of the set.
pub fn build_language_matrix(
    set: &ConceptSet,
    opts: &RsaOptions,
) -> Result<LanguageSimilarityMatrix, RsaError> {
    language_matrix_from_rsms(&build_all_rsms(set)?, opts)
}

/// Second-order matrix from precomputed RSMs (one per language, shared
/// concept ordering). Symmetric with unit diagonal by construction.
pub fn language_matrix_from_rsms(
    rsms: &[Rsm],
    opts: &RsaOptions,
) -> Result<LanguageSimilarityMatrix, RsaError> {
    let l = rsms.len();
    if l < 2 {
        return Err(RsaError::TooFewLanguages(l));
    }
    let pairs: Vec<(usize, usize)> = (0..l)
        .flat_map(|i| ((i + 1)..l).map(move |j| (i, j)))
        .collect();
    let computed: Vec<PairSimilarity> = pairs
        .par_iter()
        .map(|&(i, j)| language_pair_similarity(&rsms[i], &rsms[j], opts))
        .collect::<Result<_, _>>()?;
    let mut values = vec![0.0; l * l];
    let mut degenerate_rows = 0usize;
    for i in 0..l {
        values[i * l + i] = 1.0;
    }
    for (&(i, j), sim) in pairs.iter().zip(&computed) {
        values[i * l + j] = sim.value;
        values[j * l + i] = sim.value;
        degenerate_rows += sim.degenerate_rows;
    }
    Ok(LanguageSimilarityMatrix {
        languages: rsms.iter().map(|r| r.language.clone()).collect(),
        values,
        degenerate_rows,
    })
}

/// One unordered concept pair with its per-language cosines and their
/// population variance.
#[derive(Debug, Clone, Serialize)]
pub struct WordPairVariance {
    pub concept_a: String,
    pub concept_b: String,
    pub cosines: Vec<f64>,
    pub variance: f64,
}

/// All unordered concept pairs ranked by cross-language variance,
/// descending.
#[derive(Debug, Clone, Serialize)]
pub struct WordPairVarianceReport {
    pub languages: Vec<LanguageId>,
    pub pairs: Vec<WordPairVariance>,
}

impl WordPairVarianceReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), RsaError> {
        let mut writer = csv::WriterBuilder::new().from_writer(w);
        let mut header = vec!["concept_a".to_string(), "concept_b".to_string(), "variance".to_string()];
        header.extend(self.languages.iter().map(|l| l.to_string()));
        writer.write_record(&header)?;
        for pair in &self.pairs {
            let mut record = vec![
                pair.concept_a.clone(),
                pair.concept_b.clone(),
                format!("{:.8e}", pair.variance),
            ];
            record.extend(pair.cosines.iter().map(|c| format!("{c:.8e}")));
            writer.write_record(&record)?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Variance of each concept pair's cosine across languages.
pub fn word_pair_variance(set: &ConceptSet) -> Result<WordPairVarianceReport, RsaError> {
    if set.languages().len() < 2 {
        return Err(RsaError::TooFewLanguages(set.languages().len()));
    }
    word_pair_variance_from_rsms(&build_all_rsms(set)?)
}

/// Variance report from precomputed RSMs (shared concept ordering).
pub fn word_pair_variance_from_rsms(
    rsms: &[Rsm],
) -> Result<WordPairVarianceReport, RsaError> {
    if rsms.len() < 2 {
        return Err(RsaError::TooFewLanguages(rsms.len()));
    }
    if rsms.iter().any(|r| r.concepts != rsms[0].concepts) {
        return Err(RsaError::ConceptOrderMismatch);
    }
    let concepts = &rsms[0].concepts;
    let n = concepts.len();
    let index_pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .collect();
    let mut pairs: Vec<WordPairVariance> = index_pairs
        .par_iter()
        .map(|&(i, j)| {
            let cosines: Vec<f64> = rsms.iter().map(|r| r.value(i, j)).collect();
            WordPairVariance {
                concept_a: concepts[i].clone(),
                concept_b: concepts[j].clone(),
                variance: population_variance(&cosines),
                cosines,
            }
        })
        .collect();
    // descending variance; stable order for equal variances
    pairs.sort_by(|a, b| {
        b.variance
            .total_cmp(&a.variance)
            .then_with(|| a.concept_a.cmp(&b.concept_a))
            .then_with(|| a.concept_b.cmp(&b.concept_b))
    });
    Ok(WordPairVarianceReport {
        languages: rsms.iter().map(|r| r.language.clone()).collect(),
        pairs,
    })
}
