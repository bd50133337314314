//! Concept resolution: nearest-neighbor translation of anchor-language
//! concepts into every target language, or direct adoption of corpus-aligned
//! items.

use rayon::prelude::*;
use thiserror::Error;

use crate::embedding::{AlignedItemSet, EmbeddingSpace};
use crate::language::LanguageId;
use crate::numeric::{cosine_f32, dot_f32, norm_f32_as_f64};

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("vector dimension {got} does not match target space dimension {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("no concept survives anchor-vocabulary filtering")]
    EmptyConceptSet,
    #[error("language {0} is not resolved in this concept set")]
    UnresolvedLanguage(LanguageId),
    #[error("concept {0:?} is not in the retained concept list")]
    UnknownConcept(String),
    #[error("duplicate language {0} among target spaces")]
    DuplicateLanguage(LanguageId),
}

/// Ranked nearest-neighbor translations for one concept in one language.
#[derive(Debug, Clone)]
pub struct TranslationCandidates {
    pub concept: String,
    pub language: LanguageId,
    /// `(token, cosine)` pairs, cosine non-increasing.
    pub top_k: Vec<(String, f64)>,
}

/// One concept resolved in one language.
#[derive(Debug, Clone)]
pub struct Resolution {
    pub token: String,
    pub vector: Vec<f32>,
    /// Cosine between the anchor vector and this resolution's vector.
    pub score: f64,
}

/// A concept dropped during resolution, with the reason.
#[derive(Debug, Clone, serde::Serialize)]
pub struct DroppedConcept {
    pub concept: String,
    pub reason: String,
}

/// An ordered concept list resolved in every requested language.
///
/// Immutable after construction; rows are shared freely across threads.
pub struct ConceptSet {
    anchor: LanguageId,
    concepts: Vec<String>,
    languages: Vec<LanguageId>,
    /// `resolutions[language_idx][concept_idx]`
    resolutions: Vec<Vec<Resolution>>,
    dropped: Vec<DroppedConcept>,
    dim: usize,
}

impl ConceptSet {
    pub fn anchor(&self) -> &LanguageId {
        &self.anchor
    }

    /// Retained concepts, in list order. Its length is the N of the
    /// similarity-vector math.
    pub fn concepts(&self) -> &[String] {
        &self.concepts
    }

    pub fn n(&self) -> usize {
        self.concepts.len()
    }

    pub fn languages(&self) -> &[LanguageId] {
        &self.languages
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dropped(&self) -> &[DroppedConcept] {
        &self.dropped
    }

    pub fn language_index(&self, language: &LanguageId) -> Option<usize> {
        self.languages.iter().position(|l| l == language)
    }

    pub fn concept_index(&self, concept: &str) -> Option<usize> {
        self.concepts.iter().position(|c| c == concept)
    }

    pub fn resolutions(&self, language: &LanguageId) -> Result<&[Resolution], AlignError> {
        let idx = self
            .language_index(language)
            .ok_or_else(|| AlignError::UnresolvedLanguage(language.clone()))?;
        Ok(&self.resolutions[idx])
    }

    pub fn resolution(&self, language_idx: usize, concept_idx: usize) -> &Resolution {
        &self.resolutions[language_idx][concept_idx]
    }
}

/// Nearest neighbors of `source_vec` in a target space, by cosine.
///
/// Ties break toward the earlier vocabulary row. Selection scans every row
/// (exact, no index), so results are reproducible bit for bit.
pub fn translate(
    concept: &str,
    source_vec: &[f32],
    target: &EmbeddingSpace,
    k: usize,
) -> Result<TranslationCandidates, AlignError> {
    if k == 0 {
        return Err(AlignError::ZeroK);
    }
    if source_vec.len() != target.dim() {
        return Err(AlignError::DimMismatch {
            expected: target.dim(),
            got: source_vec.len(),
        });
    }
    let indices = top_k_rows(source_vec, target, k);
    let source_norm = norm_f32_as_f64(source_vec);
    let top_k = indices
        .into_iter()
        .map(|i| {
            let score = if source_norm == 0.0 {
                0.0
            } else {
                cosine_f32(source_vec, target.row(i))
            };
            (target.token(i).to_string(), score)
        })
        .collect();
    Ok(TranslationCandidates {
        concept: concept.to_string(),
        language: target.language().clone(),
        top_k,
    })
}

/// Indices of the k best rows by the f32 scoring kernel, ties toward
/// earlier rows. Scores are dot products over unit-normalized spaces and
/// norm-corrected dot products otherwise; the ranking equals the cosine
/// ranking because the query norm is a common positive factor.
fn top_k_rows(source_vec: &[f32], target: &EmbeddingSpace, k: usize) -> Vec<usize> {
    let k = k.min(target.len());
    if k == 1 {
        let mut best = 0usize;
        let mut best_score = row_score(source_vec, target, 0);
        for i in 1..target.len() {
            let score = row_score(source_vec, target, i);
            if score > best_score {
                best = i;
                best_score = score;
            }
        }
        return vec![best];
    }
    let mut scored: Vec<(f64, usize)> = (0..target.len())
        .map(|i| (row_score(source_vec, target, i), i))
        .collect();
    // stable order: descending score, ascending row index
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.truncate(k);
    scored.into_iter().map(|(_, i)| i).collect()
}

#[inline]
fn row_score(source_vec: &[f32], target: &EmbeddingSpace, i: usize) -> f64 {
    let dot = f64::from(dot_f32(source_vec, target.row(i)));
    if target.is_unit_normalized() {
        dot
    } else {
        let norm = target.row_norm(i);
        if norm == 0.0 {
            f64::MIN
        } else {
            dot / norm
        }
    }
}

/// Resolve a concept list against an anchor space and any number of targets.
///
/// Concepts missing from the anchor vocabulary are dropped with reason
/// `anchor-oov`; each retained concept resolves in every target to its
/// nearest neighbor, and to itself in the anchor.
pub fn build_concept_set(
    concepts: &[String],
    anchor: &EmbeddingSpace,
    targets: &[&EmbeddingSpace],
) -> Result<ConceptSet, AlignError> {
    for t in targets {
        if t.dim() != anchor.dim() {
            return Err(AlignError::DimMismatch {
                expected: anchor.dim(),
                got: t.dim(),
            });
        }
    }
    let mut languages = vec![anchor.language().clone()];
    for t in targets {
        if languages.contains(t.language()) {
            return Err(AlignError::DuplicateLanguage(t.language().clone()));
        }
        languages.push(t.language().clone());
    }

    let mut retained = Vec::new();
    let mut anchor_rows: Vec<Resolution> = Vec::new();
    let mut dropped = Vec::new();
    for concept in concepts {
        match anchor.lookup(concept) {
            Some(row) => {
                retained.push(concept.clone());
                anchor_rows.push(Resolution {
                    token: concept.clone(),
                    vector: row.to_vec(),
                    score: 1.0,
                });
            }
            None => dropped.push(DroppedConcept {
                concept: concept.clone(),
                reason: "anchor-oov".to_string(),
            }),
        }
    }
    if retained.is_empty() {
        return Err(AlignError::EmptyConceptSet);
    }

    let mut resolutions = vec![anchor_rows];
    for target in targets {
        let per_concept: Vec<Resolution> = retained
            .par_iter()
            .enumerate()
            .map(|(i, concept)| {
                let source = &resolutions[0][i].vector;
                let cand = translate(concept, source, target, 1)
                    .expect("dims validated above");
                let (token, score) = cand.top_k.into_iter().next().expect("k >= 1");
                let vector = target.lookup(&token).expect("token came from target").to_vec();
                Resolution { token, vector, score }
            })
            .collect();
        resolutions.push(per_concept);
    }

    Ok(ConceptSet {
        anchor: anchor.language().clone(),
        concepts: retained,
        languages,
        resolutions,
        dropped,
        dim: anchor.dim(),
    })
}

/// Adopt corpus-aligned items directly: each item resolves in each language
/// to its own aligned row, no nearest-neighbor search.
///
/// The anchor defaults to `en` when present, else the first language.
pub fn concept_set_from_aligned(
    items: &AlignedItemSet,
    anchor: Option<&LanguageId>,
) -> Result<ConceptSet, AlignError> {
    let anchor = match anchor {
        Some(lang) => {
            if items.language_index(lang).is_none() {
                return Err(AlignError::UnresolvedLanguage(lang.clone()));
            }
            lang.clone()
        }
        None => {
            let english = LanguageId::new("en").expect("static code");
            if items.language_index(&english).is_some() {
                english
            } else {
                items.languages()[0].clone()
            }
        }
    };
    let anchor_idx = items.language_index(&anchor).expect("validated above");

    let resolutions: Vec<Vec<Resolution>> = (0..items.languages().len())
        .map(|l| {
            (0..items.len())
                .map(|i| {
                    let row = items.row(l, i);
                    let score = if l == anchor_idx {
                        1.0
                    } else {
                        cosine_f32(items.row(anchor_idx, i), row)
                    };
                    Resolution {
                        token: items.item_ids()[i].clone(),
                        vector: row.to_vec(),
                        score,
                    }
                })
                .collect()
        })
        .collect();

    Ok(ConceptSet {
        anchor,
        concepts: items.item_ids().to_vec(),
        languages: items.languages().to_vec(),
        resolutions,
        dropped: Vec::new(),
        dim: items.dim(),
    })
}

/// Parse a concept list: one concept per line, `#` starts a comment,
/// blank lines ignored, duplicates keep the first occurrence.
pub fn read_concept_list(text: &str) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    let mut concepts = Vec::new();
    for line in text.lines() {
        let entry = match line.find('#') {
            Some(pos) => &line[..pos],
            None => line,
        }
        .trim();
        if entry.is_empty() {
            continue;
        }
        if seen.insert(entry.to_string()) {
            concepts.push(entry.to_string());
        } else {
            log::warn!("duplicate concept {entry:?} ignored");
        }
    }
    concepts
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::EmbeddingSpace;

    fn lang(code: &str) -> LanguageId {
        LanguageId::new(code).unwrap()
    }

    fn space(code: &str, rows: &[(&str, &[f32])], normalize: bool) -> EmbeddingSpace {
        EmbeddingSpace::from_rows(
            lang(code),
            rows.iter().map(|(t, v)| (t.to_string(), v.to_vec())).collect(),
            normalize,
        )
        .unwrap()
    }

    #[test]
    fn exact_copy_scores_one() {
        let target = space("de", &[("hund", &[0.6, 0.8]), ("katze", &[1.0, 0.0])], true);
        let cand = translate("dog", &[0.6, 0.8], &target, 1).unwrap();
        assert_eq!(cand.top_k[0].0, "hund");
        assert!((cand.top_k[0].1 - 1.0).abs() < 1e-6);
    }

    #[test]
    fn k_equals_vocab_is_permutation() {
        let target = space(
            "de",
            &[
                ("a", &[1.0, 0.0, 0.0]),
                ("b", &[0.0, 1.0, 0.0]),
                ("c", &[0.0, 0.0, 1.0]),
                ("d", &[0.5, 0.5, 0.0]),
            ],
            true,
        );
        let cand = translate("x", &[0.2, 0.3, 0.9], &target, 4).unwrap();
        let mut tokens: Vec<&str> = cand.top_k.iter().map(|(t, _)| t.as_str()).collect();
        tokens.sort_unstable();
        assert_eq!(tokens, vec!["a", "b", "c", "d"]);
        for w in cand.top_k.windows(2) {
            assert!(w[0].1 >= w[1].1);
        }
    }

    #[test]
    fn tie_breaks_toward_earlier_row() {
        let target = space("de", &[("first", &[1.0, 0.0]), ("second", &[1.0, 0.0])], true);
        let cand = translate("x", &[1.0, 0.0], &target, 2).unwrap();
        assert_eq!(cand.top_k[0].0, "first");
        assert_eq!(cand.top_k[1].0, "second");
    }

    #[test]
    fn dim_mismatch_rejected() {
        let target = space("de", &[("a", &[1.0, 0.0])], true);
        assert!(matches!(
            translate("x", &[1.0, 0.0, 0.0], &target, 1),
            Err(AlignError::DimMismatch { .. })
        ));
    }

    #[test]
    fn scaling_does_not_change_argmax() {
        let target = space(
            "de",
            &[("a", &[0.9, 0.1, 0.2]), ("b", &[0.1, 0.9, 0.3]), ("c", &[0.2, 0.2, 0.9])],
            true,
        );
        let q = [0.4f32, 0.2, 0.8];
        let scaled: Vec<f32> = q.iter().map(|v| v * 17.5).collect();
        let a = translate("x", &q, &target, 3).unwrap();
        let b = translate("x", &scaled, &target, 3).unwrap();
        let ta: Vec<&str> = a.top_k.iter().map(|(t, _)| t.as_str()).collect();
        let tb: Vec<&str> = b.top_k.iter().map(|(t, _)| t.as_str()).collect();
        assert_eq!(ta, tb);
    }

    #[test]
    fn anchor_oov_dropped() {
        let anchor = space("en", &[("dog", &[1.0, 0.0]), ("cat", &[0.0, 1.0])], true);
        let de = space("de", &[("hund", &[1.0, 0.0]), ("katze", &[0.0, 1.0])], true);
        let concepts: Vec<String> =
            ["dog", "cat", "argumentatively"].iter().map(|s| s.to_string()).collect();
        let set = build_concept_set(&concepts, &anchor, &[&de]).unwrap();
        assert_eq!(set.n(), 2);
        assert_eq!(set.dropped().len(), 1);
        assert_eq!(set.dropped()[0].concept, "argumentatively");
        assert_eq!(set.dropped()[0].reason, "anchor-oov");
    }

    #[test]
    fn fully_resolved_synthetic_workspace() {
        let anchor = space("en", &[("dog", &[1.0, 0.0]), ("cat", &[0.0, 1.0])], true);
        let de = space("de", &[("hund", &[1.0, 0.0]), ("katze", &[0.0, 1.0])], true);
        let es = space("es", &[("perro", &[0.9, 0.1]), ("gato", &[0.1, 0.9])], true);
        let concepts: Vec<String> = ["dog", "cat"].iter().map(|s| s.to_string()).collect();
        let set = build_concept_set(&concepts, &anchor, &[&de, &es]).unwrap();
        assert!(set.dropped().is_empty());
        assert_eq!(set.languages().len(), 3);
        let de_res = set.resolutions(&lang("de")).unwrap();
        assert_eq!(de_res[0].token, "hund");
        assert!((de_res[0].score - 1.0).abs() < 1e-6);
        let es_res = set.resolutions(&lang("es")).unwrap();
        assert_eq!(es_res[0].token, "perro");
        assert_eq!(es_res[1].token, "gato");
    }

    #[test]
    fn empty_surviving_list_is_error() {
        let anchor = space("en", &[("dog", &[1.0, 0.0])], true);
        let concepts = vec!["nothere".to_string()];
        assert!(matches!(
            build_concept_set(&concepts, &anchor, &[]),
            Err(AlignError::EmptyConceptSet)
        ));
    }

    #[test]
    fn deterministic_rebuild() {
        let anchor = space("en", &[("a", &[0.3, 0.7]), ("b", &[0.9, 0.2])], true);
        let de = space("de", &[("x", &[0.4, 0.6]), ("y", &[0.8, 0.3])], true);
        let concepts: Vec<String> = ["a", "b"].iter().map(|s| s.to_string()).collect();
        let s1 = build_concept_set(&concepts, &anchor, &[&de]).unwrap();
        let s2 = build_concept_set(&concepts, &anchor, &[&de]).unwrap();
        for lang_idx in 0..2 {
            for c in 0..2 {
                let (a, b) = (s1.resolution(lang_idx, c), s2.resolution(lang_idx, c));
                assert_eq!(a.token, b.token);
                assert_eq!(a.score.to_bits(), b.score.to_bits());
            }
        }
    }

    #[test]
    fn aligned_identical_matrices_score_one() {
        let rows = vec![
            ("s1".to_string(), vec![1.0f32, 2.0]),
            ("s2".to_string(), vec![3.0, 4.0]),
        ];
        let set = AlignedItemSet::from_rows(vec![
            (lang("en"), rows.clone()),
            (lang("de"), rows),
        ])
        .unwrap();
        let cs = concept_set_from_aligned(&set, None).unwrap();
        assert_eq!(cs.anchor().as_str(), "en");
        for res in cs.resolutions(&lang("de")).unwrap() {
            assert!((res.score - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn aligned_negated_rows_score_minus_one() {
        let rows = vec![
            ("s1".to_string(), vec![1.0f32, 2.0]),
            ("s2".to_string(), vec![3.0, 4.0]),
        ];
        let negated: Vec<(String, Vec<f32>)> = rows
            .iter()
            .map(|(id, v)| (id.clone(), v.iter().map(|x| -x).collect()))
            .collect();
        let set = AlignedItemSet::from_rows(vec![
            (lang("aa"), rows),
            (lang("bb"), negated),
        ])
        .unwrap();
        let cs = concept_set_from_aligned(&set, None).unwrap();
        assert_eq!(cs.anchor().as_str(), "aa");
        for res in cs.resolutions(&lang("bb")).unwrap() {
            assert!((res.score + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn concept_list_parsing() {
        let text = "# header\n dog \ncat # trailing comment\n\ncat\nhouse\n";
        assert_eq!(read_concept_list(text), vec!["dog", "cat", "house"]);
    }
}
