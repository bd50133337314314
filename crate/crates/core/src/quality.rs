//! Translation-quality evaluation: dictionary matching with fuzzy close
//! matches and loanword identity for word spaces, similarity-search accuracy
//! for aligned item sets.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::align::ConceptSet;
use crate::embedding::AlignedItemSet;
use crate::language::LanguageId;
use crate::numeric::cosine_f32;

/// Default close-match threshold for the sequence-similarity ratio.
pub const DEFAULT_FUZZY_CUTOFF: f64 = 0.6;

#[derive(Debug, Error)]
pub enum QualityError {
    #[error("{path}:{line}: expected `source<TAB>target`")]
    DictionaryFormat { path: String, line: usize },
    #[error("{path}:{line}: empty token")]
    EmptyToken { path: String, line: usize },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("no dictionary covers language {0}")]
    NoDictionary(LanguageId),
    #[error("cannot merge dictionaries for different language pairs")]
    PairMismatch,
    #[error("fuzzy cutoff must be in (0, 1], got {0}")]
    InvalidCutoff(f64),
    #[error("language {0} is not resolved in the input")]
    UnknownLanguage(LanguageId),
    #[error("source and target language must differ")]
    SameLanguage,
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Accepted translations per source token for one language pair.
#[derive(Debug, Clone)]
pub struct BilingualDictionary {
    pub source_lang: LanguageId,
    pub target_lang: LanguageId,
    entries: HashMap<String, std::collections::BTreeSet<String>>,
}

impl BilingualDictionary {
    pub fn new(source_lang: LanguageId, target_lang: LanguageId) -> Self {
        BilingualDictionary {
            source_lang,
            target_lang,
            entries: HashMap::new(),
        }
    }

    /// Read a UTF-8 TSV of `source<TAB>target` lines; repeated sources
    /// accumulate their targets.
    pub fn read_tsv(
        path: &Path,
        source_lang: LanguageId,
        target_lang: LanguageId,
    ) -> Result<Self, QualityError> {
        let text = std::fs::read_to_string(path).map_err(|source| QualityError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut dict = BilingualDictionary::new(source_lang, target_lang);
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let (source, target) =
                line.split_once('\t')
                    .ok_or_else(|| QualityError::DictionaryFormat {
                        path: path.display().to_string(),
                        line: i + 1,
                    })?;
            if source.is_empty() || target.is_empty() {
                return Err(QualityError::EmptyToken {
                    path: path.display().to_string(),
                    line: i + 1,
                });
            }
            dict.insert(source, target);
        }
        Ok(dict)
    }

    pub fn insert(&mut self, source: &str, target: &str) {
        self.entries
            .entry(source.to_string())
            .or_default()
            .insert(target.to_string());
    }

    /// Union another dictionary for the same language pair into this one.
    pub fn merge(&mut self, other: &BilingualDictionary) -> Result<(), QualityError> {
        if self.source_lang != other.source_lang || self.target_lang != other.target_lang {
            return Err(QualityError::PairMismatch);
        }
        for (source, targets) in &other.entries {
            let entry = self.entries.entry(source.clone()).or_default();
            entry.extend(targets.iter().cloned());
        }
        Ok(())
    }

    /// Case-preserving, byte-exact lookup.
    pub fn translations(&self, source: &str) -> Option<&std::collections::BTreeSet<String>> {
        self.entries.get(source)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// How a nearest neighbor matched the accepted translations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchKind {
    Exact,
    Fuzzy,
    Loanword,
}

/// Per-language evaluation result.
#[derive(Debug, Clone, Serialize)]
pub struct LanguageQuality {
    pub language: LanguageId,
    pub evaluated: usize,
    pub matched: usize,
    /// 100 * matched / evaluated.
    pub accuracy: f64,
    pub exact: usize,
    pub fuzzy: usize,
    pub loanword: usize,
    /// Non-matches whose neighbor equals the source concept after ASCII
    /// lowercasing only; reported separately, still non-matches.
    pub case_only_identity: usize,
    /// Concepts without a dictionary entry, with the reason.
    pub skipped: Vec<(String, String)>,
    /// Non-matching `(concept, nearest_neighbor)` pairs for inspection.
    pub misses: Vec<(String, String)>,
}

/// Evaluation results for one run.
#[derive(Debug, Clone, Serialize)]
pub struct QualityReport {
    pub per_language: Vec<LanguageQuality>,
}

impl QualityReport {
    /// CSV with languages as columns and metric rows, accuracies in percent.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), QualityError> {
        let mut writer = csv::WriterBuilder::new().from_writer(w);
        let mut header = vec!["metric".to_string()];
        header.extend(self.per_language.iter().map(|l| l.language.to_string()));
        writer.write_record(&header)?;
        let rows: [(&str, fn(&LanguageQuality) -> String); 7] = [
            ("evaluated", |l| l.evaluated.to_string()),
            ("matched", |l| l.matched.to_string()),
            ("accuracy", |l| format!("{:.2}", l.accuracy)),
            ("exact", |l| l.exact.to_string()),
            ("fuzzy", |l| l.fuzzy.to_string()),
            ("loanword", |l| l.loanword.to_string()),
            ("skipped", |l| l.skipped.len().to_string()),
        ];
        for (name, get) in rows {
            let mut record = vec![name.to_string()];
            record.extend(self.per_language.iter().map(get));
            writer.write_record(&record)?;
        }
        writer.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Sequence-similarity ratio `2*M / (len(a)+len(b))` over Unicode scalar
/// values, where M is the total length of the matching blocks found by
/// recursive longest-common-substring decomposition. 1.0 for two empty
/// strings.
pub fn similarity_ratio(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let total = a.len() + b.len();
    if total == 0 {
        return 1.0;
    }
    let matches = matching_total(&a, &b);
    2.0 * matches as f64 / total as f64
}

fn matching_total(a: &[char], b: &[char]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let (i, j, size) = longest_match(a, b);
    if size == 0 {
        return 0;
    }
    size + matching_total(&a[..i], &b[..j]) + matching_total(&a[i + size..], &b[j + size..])
}

/// Longest common contiguous block; ties prefer the earliest start in `a`,
/// then in `b`.
fn longest_match(a: &[char], b: &[char]) -> (usize, usize, usize) {
    let mut best = (0usize, 0usize, 0usize);
    // lengths[j] = length of the common suffix ending at a[i], b[j]
    let mut lengths = vec![0usize; b.len() + 1];
    for i in 0..a.len() {
        let mut prev = 0usize;
        for j in 0..b.len() {
            let current = lengths[j];
            lengths[j] = if a[i] == b[j] { prev + 1 } else { 0 };
            if lengths[j] > best.2 {
                best = (i + 1 - lengths[j], j + 1 - lengths[j], lengths[j]);
            }
            prev = current;
        }
    }
    best
}

/// Evaluate nearest-neighbor translation quality against dictionaries.
///
/// A neighbor counts as a match when it equals an accepted translation,
/// when its similarity ratio to one reaches the cutoff, or when it equals
/// the source concept itself (loanword). Concepts without dictionary
/// coverage are skipped and reported.
pub fn word_quality(
    set: &ConceptSet,
    dicts: &[BilingualDictionary],
    languages: &[LanguageId],
    fuzzy_cutoff: f64,
) -> Result<QualityReport, QualityError> {
    if !(fuzzy_cutoff > 0.0 && fuzzy_cutoff <= 1.0) {
        return Err(QualityError::InvalidCutoff(fuzzy_cutoff));
    }
    // merge all dictionaries from the anchor into each requested language
    let mut merged: HashMap<LanguageId, BilingualDictionary> = HashMap::new();
    for dict in dicts {
        if dict.source_lang != *set.anchor() {
            continue;
        }
        match merged.get_mut(&dict.target_lang) {
            Some(existing) => existing.merge(dict)?,
            None => {
                merged.insert(dict.target_lang.clone(), dict.clone());
            }
        }
    }

    let mut per_language = Vec::with_capacity(languages.len());
    for language in languages {
        if set.language_index(language).is_none() {
            return Err(QualityError::UnknownLanguage(language.clone()));
        }
        let dict = merged
            .get(language)
            .ok_or_else(|| QualityError::NoDictionary(language.clone()))?;
        let resolutions = set.resolutions(language).expect("checked above");

        let mut quality = LanguageQuality {
            language: language.clone(),
            evaluated: 0,
            matched: 0,
            accuracy: 0.0,
            exact: 0,
            fuzzy: 0,
            loanword: 0,
            case_only_identity: 0,
            skipped: Vec::new(),
            misses: Vec::new(),
        };
        for (concept, resolution) in set.concepts().iter().zip(resolutions) {
            let Some(accepted) = dict.translations(concept) else {
                quality
                    .skipped
                    .push((concept.clone(), "no-dictionary-entry".to_string()));
                continue;
            };
            quality.evaluated += 1;
            let neighbor = &resolution.token;
            if accepted.contains(neighbor) {
                quality.matched += 1;
                quality.exact += 1;
            } else if accepted
                .iter()
                .any(|t| similarity_ratio(neighbor, t) >= fuzzy_cutoff)
            {
                quality.matched += 1;
                quality.fuzzy += 1;
            } else if neighbor == concept {
                quality.matched += 1;
                quality.loanword += 1;
            } else {
                if neighbor.to_lowercase() == concept.to_lowercase() {
                    quality.case_only_identity += 1;
                }
                quality.misses.push((concept.clone(), neighbor.clone()));
            }
        }
        quality.accuracy = if quality.evaluated > 0 {
            100.0 * quality.matched as f64 / quality.evaluated as f64
        } else {
            0.0
        };
        per_language.push(quality);
    }
    Ok(QualityReport { per_language })
}

/// For every item, search the nearest target-language row to the source row
/// by cosine over the item set; a match means the aligned counterpart came
/// out on top. Ties break toward the earlier item.
pub fn similarity_search_accuracy(
    items: &AlignedItemSet,
    source: &LanguageId,
    target: &LanguageId,
) -> Result<QualityReport, QualityError> {
    let source_idx = items
        .language_index(source)
        .ok_or_else(|| QualityError::UnknownLanguage(source.clone()))?;
    let target_idx = items
        .language_index(target)
        .ok_or_else(|| QualityError::UnknownLanguage(target.clone()))?;
    if source_idx == target_idx {
        return Err(QualityError::SameLanguage);
    }
    let n = items.len();
    let mut matched = 0usize;
    let mut misses = Vec::new();
    for i in 0..n {
        let query = items.row(source_idx, i);
        let mut best = 0usize;
        let mut best_score = cosine_f32(query, items.row(target_idx, 0));
        for j in 1..n {
            let score = cosine_f32(query, items.row(target_idx, j));
            if score > best_score {
                best = j;
                best_score = score;
            }
        }
        if best == i {
            matched += 1;
        } else {
            misses.push((
                items.item_ids()[i].clone(),
                items.item_ids()[best].clone(),
            ));
        }
    }
    Ok(QualityReport {
        per_language: vec![LanguageQuality {
            language: target.clone(),
            evaluated: n,
            matched,
            accuracy: if n > 0 {
                100.0 * matched as f64 / n as f64
            } else {
                0.0
            },
            exact: matched,
            fuzzy: 0,
            loanword: 0,
            case_only_identity: 0,
            skipped: Vec::new(),
            misses,
        }],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::build_concept_set;
    use crate::embedding::EmbeddingSpace;

    fn lang(code: &str) -> LanguageId {
        LanguageId::new(code).unwrap()
    }

    #[test]
    fn ratio_basics() {
        assert_eq!(similarity_ratio("abc", "abc"), 1.0);
        assert_eq!(similarity_ratio("abc", "xyz"), 0.0);
        assert_eq!(similarity_ratio("", ""), 1.0);
        assert_eq!(similarity_ratio("abcd", "bcde"), 0.75);
    }

    #[test]
    fn ratio_symmetric_and_identity_only_at_one() {
        let pairs = [
            ("pequeño", "pequeños"),
            ("haus", "häuser"),
            ("a", "ab"),
            ("kitten", "sitting"),
        ];
        for (a, b) in pairs {
            let r1 = similarity_ratio(a, b);
            let r2 = similarity_ratio(b, a);
            assert!((r1 - r2).abs() < 1e-15);
            assert!(r1 < 1.0);
        }
        // inflected form stays above the default cutoff
        assert!(similarity_ratio("pequeño", "pequeños") >= DEFAULT_FUZZY_CUTOFF);
    }

    #[test]
    fn ratio_counts_unicode_scalars() {
        // block "eña" of length 3 over lengths 4 + 4
        assert_eq!(similarity_ratio("peña", "seña"), 0.75);
    }

    fn quality_fixture() -> (ConceptSet, BilingualDictionary) {
        let anchor = EmbeddingSpace::from_rows(
            lang("en"),
            vec![
                ("small".to_string(), vec![1.0, 0.0, 0.0]),
                ("silly".to_string(), vec![0.0, 1.0, 0.0]),
                ("big".to_string(), vec![0.0, 0.0, 1.0]),
                ("rare".to_string(), vec![0.5, 0.5, 0.0]),
            ],
            true,
        )
        .unwrap();
        let de = EmbeddingSpace::from_rows(
            lang("de"),
            vec![
                ("kleine".to_string(), vec![1.0, 0.0, 0.0]),
                ("lächerlich".to_string(), vec![0.0, 1.0, 0.0]),
                ("big".to_string(), vec![0.0, 0.0, 1.0]),
                ("selten".to_string(), vec![0.5, 0.5, 0.0]),
            ],
            true,
        )
        .unwrap();
        let concepts: Vec<String> = ["small", "silly", "big", "rare"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let set = build_concept_set(&concepts, &anchor, &[&de]).unwrap();
        let mut dict = BilingualDictionary::new(lang("en"), lang("de"));
        dict.insert("small", "klein"); // fuzzy hit for "kleine"
        dict.insert("silly", "albern"); // miss: NN is "lächerlich"
        dict.insert("silly", "dumm");
        dict.insert("big", "groß"); // loanword hit: NN is "big"
        (set, dict)
    }

    #[test]
    fn word_quality_match_kinds() {
        let (set, dict) = quality_fixture();
        let report =
            word_quality(&set, &[dict], &[lang("de")], DEFAULT_FUZZY_CUTOFF).unwrap();
        let de = &report.per_language[0];
        assert_eq!(de.evaluated, 3); // "rare" skipped
        assert_eq!(de.skipped.len(), 1);
        assert_eq!(de.skipped[0].0, "rare");
        assert_eq!(de.matched, 2);
        assert_eq!(de.fuzzy, 1);
        assert_eq!(de.loanword, 1);
        assert_eq!(de.exact, 0);
        assert_eq!(de.misses, vec![("silly".to_string(), "lächerlich".to_string())]);
        assert!((de.accuracy - 200.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn word_quality_monotone_in_cutoff() {
        let (set, dict) = quality_fixture();
        let strict =
            word_quality(&set, &[dict.clone()], &[lang("de")], 0.95).unwrap();
        let loose = word_quality(&set, &[dict], &[lang("de")], 0.4).unwrap();
        assert!(loose.per_language[0].matched >= strict.per_language[0].matched);
    }

    #[test]
    fn word_quality_requires_dictionary() {
        let (set, dict) = quality_fixture();
        assert!(matches!(
            word_quality(&set, &[dict], &[lang("fi")], 0.6),
            Err(QualityError::UnknownLanguage(_))
        ));
        assert!(matches!(
            word_quality(&set, &[], &[lang("de")], 0.6),
            Err(QualityError::NoDictionary(_))
        ));
    }

    #[test]
    fn word_quality_invalid_cutoff() {
        let (set, dict) = quality_fixture();
        for cutoff in [0.0, -0.5, 1.5] {
            assert!(matches!(
                word_quality(&set, std::slice::from_ref(&dict), &[lang("de")], cutoff),
                Err(QualityError::InvalidCutoff(_))
            ));
        }
    }

    #[test]
    fn dictionaries_merge_by_union() {
        let mut d1 = BilingualDictionary::new(lang("en"), lang("de"));
        d1.insert("dog", "hund");
        let mut d2 = BilingualDictionary::new(lang("en"), lang("de"));
        d2.insert("dog", "rüde");
        d2.insert("cat", "katze");
        d1.merge(&d2).unwrap();
        assert_eq!(d1.translations("dog").unwrap().len(), 2);
        assert_eq!(d1.translations("cat").unwrap().len(), 1);

        let d3 = BilingualDictionary::new(lang("en"), lang("fr"));
        assert!(matches!(d1.merge(&d3), Err(QualityError::PairMismatch)));
    }

    #[test]
    fn dictionary_tsv_parsing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dict.tsv");
        std::fs::write(&path, "dog\thund\ndog\trüde\ncat\tkatze\n").unwrap();
        let dict = BilingualDictionary::read_tsv(&path, lang("en"), lang("de")).unwrap();
        assert_eq!(dict.len(), 2);
        assert!(dict.translations("dog").unwrap().contains("rüde"));

        std::fs::write(&path, "dog hund\n").unwrap();
        assert!(matches!(
            BilingualDictionary::read_tsv(&path, lang("en"), lang("de")),
            Err(QualityError::DictionaryFormat { line: 1, .. })
        ));
    }

    fn aligned_fixture(n: usize) -> AlignedItemSet {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
        let rows: Vec<(String, Vec<f32>)> = (0..n)
            .map(|i| {
                (
                    format!("s{i}"),
                    (0..6).map(|_| rng.gen_range(-1.0f32..1.0)).collect(),
                )
            })
            .collect();
        AlignedItemSet::from_rows(vec![(lang("en"), rows.clone()), (lang("de"), rows)])
            .unwrap()
    }

    #[test]
    fn similarity_search_identical_is_perfect() {
        let items = aligned_fixture(10);
        let report =
            similarity_search_accuracy(&items, &lang("en"), &lang("de")).unwrap();
        assert_eq!(report.per_language[0].accuracy, 100.0);
    }

    #[test]
    fn similarity_search_swapped_pair() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let rows: Vec<(String, Vec<f32>)> = (0..10)
            .map(|i| {
                (
                    format!("s{i}"),
                    (0..6).map(|_| rng.gen_range(-1.0f32..1.0)).collect(),
                )
            })
            .collect();
        let mut swapped = rows.clone();
        let tmp = swapped[2].1.clone();
        swapped[2].1 = swapped[7].1.clone();
        swapped[7].1 = tmp;
        let items =
            AlignedItemSet::from_rows(vec![(lang("en"), rows), (lang("de"), swapped)])
                .unwrap();
        let report =
            similarity_search_accuracy(&items, &lang("en"), &lang("de")).unwrap();
        assert_eq!(report.per_language[0].evaluated, 10);
        assert_eq!(report.per_language[0].matched, 8);
        assert!((report.per_language[0].accuracy - 80.0).abs() < 1e-12);
    }
}
