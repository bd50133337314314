//! Per-word semantic drift between language clusters: intra-cluster vs
//! cross-cluster correlation of similarity vectors, plus 2-D projections for
//! qualitative inspection.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::align::ConceptSet;
use crate::language::LanguageId;
use crate::numeric::{cosine_f32, mean};
use crate::rsa::{build_rsm, spearman, Rsm, RsaError, RsaOptions};

#[derive(Debug, Error)]
pub enum DriftError {
    #[error("a partition needs at least 2 clusters, got {0}")]
    TooFewClusters(usize),
    #[error("cluster {0} is empty")]
    EmptyCluster(usize),
    #[error("language {0} appears in more than one cluster")]
    OverlappingClusters(LanguageId),
    #[error("language {0} is duplicated within a cluster")]
    DuplicateInCluster(LanguageId),
    #[error("every cluster has size 1, so no intra-cluster pair exists")]
    NoIntraPairs,
    #[error("language {0} is not resolved in the concept set")]
    UnresolvedLanguage(LanguageId),
    #[error("concept {0:?} is not in the retained concept list")]
    UnknownConcept(String),
    #[error("need at least {needed} resolved vectors, got {got}")]
    TooFewVectors { needed: usize, got: usize },
    #[error("projection input has rank below 2")]
    RankDeficient,
    #[error("invalid cluster config: {0}")]
    Config(String),
    #[error("k must be at least 1")]
    ZeroK,
    #[error(transparent)]
    Rsa(#[from] RsaError),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Mutually exclusive language clusters, at least two of them.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<LanguageId>>", into = "Vec<Vec<LanguageId>>")]
pub struct ClusterPartition {
    clusters: Vec<Vec<LanguageId>>,
}

impl ClusterPartition {
    pub fn new(clusters: Vec<Vec<LanguageId>>) -> Result<Self, DriftError> {
        if clusters.len() < 2 {
            return Err(DriftError::TooFewClusters(clusters.len()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (i, cluster) in clusters.iter().enumerate() {
            if cluster.is_empty() {
                return Err(DriftError::EmptyCluster(i));
            }
            let mut local = std::collections::BTreeSet::new();
            for lang in cluster {
                if !local.insert(lang.clone()) {
                    return Err(DriftError::DuplicateInCluster(lang.clone()));
                }
                if !seen.insert(lang.clone()) {
                    return Err(DriftError::OverlappingClusters(lang.clone()));
                }
            }
        }
        if clusters.iter().all(|c| c.len() < 2) {
            return Err(DriftError::NoIntraPairs);
        }
        Ok(ClusterPartition { clusters })
    }

    /// Parse the JSON cluster config: a list of lists of language codes.
    pub fn from_json(text: &str) -> Result<Self, DriftError> {
        let clusters: Vec<Vec<LanguageId>> =
            serde_json::from_str(text).map_err(|e| DriftError::Config(e.to_string()))?;
        ClusterPartition::new(clusters)
    }

    pub fn clusters(&self) -> &[Vec<LanguageId>] {
        &self.clusters
    }

    pub fn languages(&self) -> Vec<LanguageId> {
        self.clusters.iter().flatten().cloned().collect()
    }

    fn cluster_of(&self, language: &LanguageId) -> Option<usize> {
        self.clusters
            .iter()
            .position(|c| c.iter().any(|l| l == language))
    }
}

impl TryFrom<Vec<Vec<LanguageId>>> for ClusterPartition {
    type Error = DriftError;

    fn try_from(clusters: Vec<Vec<LanguageId>>) -> Result<Self, Self::Error> {
        ClusterPartition::new(clusters)
    }
}

impl From<ClusterPartition> for Vec<Vec<LanguageId>> {
    fn from(p: ClusterPartition) -> Self {
        p.clusters
    }
}

/// Drift statistics for one concept.
#[derive(Debug, Clone, Serialize)]
pub struct DriftRecord {
    pub concept: String,
    /// Correlations over unordered same-cluster language pairs.
    pub ics: Vec<f64>,
    /// Correlations over unordered different-cluster language pairs.
    pub ccs: Vec<f64>,
    /// mean(ics) - mean(ccs)
    pub drift: f64,
    pub ics_degenerate: usize,
    pub ccs_degenerate: usize,
}

/// Per-concept drift scores for one partition, sorted by drift descending.
#[derive(Debug, Clone, Serialize)]
pub struct DriftReport {
    pub partition: ClusterPartition,
    pub records: Vec<DriftRecord>,
}

impl DriftReport {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), DriftError> {
        let mut writer = csv::WriterBuilder::new().from_writer(w);
        writer.write_record(["concept", "drift", "ics_mean", "ccs_mean", "n_ics", "n_ccs"])?;
        for r in &self.records {
            writer.write_record(&[
                r.concept.clone(),
                format!("{:.8e}", r.drift),
                format!("{:.8e}", mean(&r.ics)),
                format!("{:.8e}", mean(&r.ccs)),
                r.ics.len().to_string(),
                r.ccs.len().to_string(),
            ])?;
        }
        writer.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Compute per-concept drift for a cluster partition.
///
/// For each concept, every unordered pair of partition languages
/// contributes the Spearman correlation of the concept's similarity
/// vectors: same-cluster pairs to ICS, different-cluster pairs to CCS.
pub fn compute_drift(
    set: &ConceptSet,
    partition: &ClusterPartition,
) -> Result<DriftReport, DriftError> {
    compute_drift_with(set, partition, &RsaOptions::default())
}

pub fn compute_drift_with(
    set: &ConceptSet,
    partition: &ClusterPartition,
    opts: &RsaOptions,
) -> Result<DriftReport, DriftError> {
    let languages = partition.languages();
    for lang in &languages {
        if set.language_index(lang).is_none() {
            return Err(DriftError::UnresolvedLanguage(lang.clone()));
        }
    }
    let rsms: Vec<Rsm> = languages
        .par_iter()
        .map(|lang| build_rsm(set, lang))
        .collect::<Result<_, _>>()?;
    let same_cluster: Vec<Vec<bool>> = languages
        .iter()
        .map(|a| {
            languages
                .iter()
                .map(|b| partition.cluster_of(a) == partition.cluster_of(b))
                .collect()
        })
        .collect();

    let n = set.n();
    let mut records: Vec<DriftRecord> = (0..n)
        .into_par_iter()
        .map(|concept_idx| {
            let mut ics = Vec::new();
            let mut ccs = Vec::new();
            let mut ics_degenerate = 0usize;
            let mut ccs_degenerate = 0usize;
            let mut xa = Vec::with_capacity(n);
            let mut xb = Vec::with_capacity(n);
            for a in 0..languages.len() {
                for b in (a + 1)..languages.len() {
                    let (ra, rb) = if opts.include_diagonal {
                        (rsms[a].row(concept_idx), rsms[b].row(concept_idx))
                    } else {
                        xa.clear();
                        xb.clear();
                        for j in 0..n {
                            if j != concept_idx {
                                xa.push(rsms[a].value(concept_idx, j));
                                xb.push(rsms[b].value(concept_idx, j));
                            }
                        }
                        (xa.as_slice(), xb.as_slice())
                    };
                    let r = spearman(ra, rb).expect("rows share length >= 2");
                    if same_cluster[a][b] {
                        ics.push(r.rho);
                        ics_degenerate += usize::from(r.degenerate);
                    } else {
                        ccs.push(r.rho);
                        ccs_degenerate += usize::from(r.degenerate);
                    }
                }
            }
            DriftRecord {
                concept: set.concepts()[concept_idx].clone(),
                drift: mean(&ics) - mean(&ccs),
                ics,
                ccs,
                ics_degenerate,
                ccs_degenerate,
            }
        })
        .collect();

    records.sort_by(|a, b| {
        b.drift
            .total_cmp(&a.drift)
            .then_with(|| a.concept.cmp(&b.concept))
    });
    Ok(DriftReport {
        partition: partition.clone(),
        records,
    })
}

/// The k other concepts of the list closest to `concept` in one language.
pub fn nearest_in_list(
    set: &ConceptSet,
    language: &LanguageId,
    concept: &str,
    k: usize,
) -> Result<Vec<(String, f64)>, DriftError> {
    if k == 0 {
        return Err(DriftError::ZeroK);
    }
    let lang_idx = set
        .language_index(language)
        .ok_or_else(|| DriftError::UnresolvedLanguage(language.clone()))?;
    let concept_idx = set
        .concept_index(concept)
        .ok_or_else(|| DriftError::UnknownConcept(concept.to_string()))?;
    let query = &set.resolution(lang_idx, concept_idx).vector;
    let mut scored: Vec<(usize, f64)> = (0..set.n())
        .filter(|&j| j != concept_idx)
        .map(|j| (j, cosine_f32(query, &set.resolution(lang_idx, j).vector)))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored
        .into_iter()
        .map(|(j, c)| (set.concepts()[j].clone(), c))
        .collect())
}

/// One point of a 2-D projection.
#[derive(Debug, Clone, Serialize)]
pub struct ProjectedPoint {
    pub language: LanguageId,
    pub concept: String,
    pub x: f64,
    pub y: f64,
    /// Whether the point is a focus concept (as opposed to a neighbor).
    pub focus: bool,
}

/// PCA projection of concept vectors onto the top two components.
#[derive(Debug, Clone, Serialize)]
pub struct Projection2D {
    pub points: Vec<ProjectedPoint>,
    /// Fraction of total variance captured by each component,
    /// non-increasing.
    pub explained_variance: [f64; 2],
}

impl Projection2D {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<(), DriftError> {
        writeln!(
            w,
            "# explained-variance: {},{}",
            self.explained_variance[0], self.explained_variance[1]
        )
        .map_err(csv::Error::from)?;
        let mut writer = csv::WriterBuilder::new().from_writer(w);
        writer.write_record(["language", "concept", "x", "y", "focus"])?;
        for p in &self.points {
            writer.write_record(&[
                p.language.to_string(),
                p.concept.clone(),
                format!("{}", p.x),
                format!("{}", p.y),
                p.focus.to_string(),
            ])?;
        }
        writer.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// Fit a 2-component PCA on the union of all resolved vectors of the given
/// languages, then project each focus concept and its `neighbors_k` nearest
/// in-list neighbors per language.
///
/// An empty focus list projects every concept of every given language.
pub fn project_concepts(
    set: &ConceptSet,
    languages: &[LanguageId],
    focus_concepts: &[String],
    neighbors_k: usize,
) -> Result<Projection2D, DriftError> {
    if languages.len() < 2 {
        return Err(DriftError::TooFewVectors {
            needed: 2,
            got: languages.len(),
        });
    }
    let mut lang_indices = Vec::with_capacity(languages.len());
    for lang in languages {
        lang_indices.push(
            set.language_index(lang)
                .ok_or_else(|| DriftError::UnresolvedLanguage(lang.clone()))?,
        );
    }
    for concept in focus_concepts {
        if set.concept_index(concept).is_none() {
            return Err(DriftError::UnknownConcept(concept.clone()));
        }
    }

    let n = set.n();
    let dim = set.dim();
    let total = languages.len() * n;
    if total < 3 {
        return Err(DriftError::TooFewVectors { needed: 3, got: total });
    }

    // mean-centered joint matrix, rows = (language, concept)
    let mut data = DMatrix::<f64>::zeros(total, dim);
    for (li, &lang_idx) in lang_indices.iter().enumerate() {
        for c in 0..n {
            let v = &set.resolution(lang_idx, c).vector;
            for (d, &x) in v.iter().enumerate() {
                data[(li * n + c, d)] = f64::from(x);
            }
        }
    }
    let col_means: Vec<f64> = (0..dim).map(|d| data.column(d).mean()).collect();
    for d in 0..dim {
        for r in 0..total {
            data[(r, d)] -= col_means[d];
        }
    }

    // covariance (population normalization) and its top-2 eigenvectors
    let cov = data.transpose() * &data / total as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let trace: f64 = eig.eigenvalues.iter().map(|&v| v.max(0.0)).sum();
    let lambda = [
        eig.eigenvalues[order[0]].max(0.0),
        eig.eigenvalues[order[1]].max(0.0),
    ];
    if trace <= 0.0 || lambda[1] <= 1e-12 * lambda[0].max(1e-300) {
        return Err(DriftError::RankDeficient);
    }

    let mut components = [
        eig.eigenvectors.column(order[0]).iter().copied().collect::<Vec<f64>>(),
        eig.eigenvectors.column(order[1]).iter().copied().collect::<Vec<f64>>(),
    ];
    // sign convention: the largest-magnitude loading of each component is
    // positive, so plots are reproducible
    for component in &mut components {
        let mut max_idx = 0;
        for (i, v) in component.iter().enumerate() {
            if v.abs() > component[max_idx].abs() {
                max_idx = i;
            }
        }
        if component[max_idx] < 0.0 {
            for v in component.iter_mut() {
                *v = -*v;
            }
        }
    }

    let project = |row: usize| -> (f64, f64) {
        let mut x = 0.0;
        let mut y = 0.0;
        for d in 0..dim {
            x += data[(row, d)] * components[0][d];
            y += data[(row, d)] * components[1][d];
        }
        (x, y)
    };

    // selection: focus concepts plus neighbors, or everything
    let mut points = Vec::new();
    for (li, lang) in languages.iter().enumerate() {
        if focus_concepts.is_empty() {
            for c in 0..n {
                let (x, y) = project(li * n + c);
                points.push(ProjectedPoint {
                    language: lang.clone(),
                    concept: set.concepts()[c].clone(),
                    x,
                    y,
                    focus: false,
                });
            }
            continue;
        }
        let mut chosen: Vec<(usize, bool)> = Vec::new();
        for concept in focus_concepts {
            let idx = set.concept_index(concept).expect("validated above");
            chosen.push((idx, true));
            for (neighbor, _) in nearest_in_list(set, lang, concept, neighbors_k)? {
                let nidx = set.concept_index(&neighbor).expect("from the list");
                if !chosen.iter().any(|&(i, _)| i == nidx) {
                    chosen.push((nidx, false));
                }
            }
        }
        for (idx, focus) in chosen {
            let (x, y) = project(li * n + idx);
            points.push(ProjectedPoint {
                language: lang.clone(),
                concept: set.concepts()[idx].clone(),
                x,
                y,
                focus,
            });
        }
    }

    Ok(Projection2D {
        points,
        explained_variance: [lambda[0] / trace, lambda[1] / trace],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::concept_set_from_aligned;
    use crate::embedding::AlignedItemSet;

    fn lang(code: &str) -> LanguageId {
        LanguageId::new(code).unwrap()
    }

    fn partition(groups: &[&[&str]]) -> ClusterPartition {
        ClusterPartition::new(
            groups
                .iter()
                .map(|g| g.iter().map(|c| lang(c)).collect())
                .collect(),
        )
        .unwrap()
    }

    fn aligned_set(per_lang: Vec<(&str, Vec<Vec<f32>>)>) -> ConceptSet {
        let entries: Vec<(LanguageId, Vec<(String, Vec<f32>)>)> = per_lang
            .into_iter()
            .map(|(code, rows)| {
                (
                    lang(code),
                    rows.into_iter()
                        .enumerate()
                        .map(|(i, v)| (format!("c{i}"), v))
                        .collect(),
                )
            })
            .collect();
        let items = AlignedItemSet::from_rows(entries).unwrap();
        concept_set_from_aligned(&items, None).unwrap()
    }

    #[test]
    fn partition_validation() {
        assert!(matches!(
            ClusterPartition::new(vec![vec![lang("es"), lang("pt")]]),
            Err(DriftError::TooFewClusters(1))
        ));
        assert!(matches!(
            ClusterPartition::new(vec![vec![lang("es")], vec![]]),
            Err(DriftError::EmptyCluster(1))
        ));
        assert!(matches!(
            ClusterPartition::new(vec![
                vec![lang("es"), lang("pt")],
                vec![lang("es"), lang("de")]
            ]),
            Err(DriftError::OverlappingClusters(_))
        ));
        assert!(matches!(
            ClusterPartition::new(vec![vec![lang("es")], vec![lang("de")]]),
            Err(DriftError::NoIntraPairs)
        ));
        assert!(partition(&[&["es", "pt"], &["de", "nl"]]).clusters().len() == 2);
    }

    #[test]
    fn sample_cluster_config_parses() {
        let p = ClusterPartition::from_json(crate::bundled::SAMPLE_CLUSTERS_JSON).unwrap();
        assert_eq!(p.clusters().len(), 3);
        assert_eq!(p.clusters()[0], vec![lang("es"), lang("pt")]);
    }

    fn random_rows(seed: u64, n: usize, dim: usize) -> Vec<Vec<f32>> {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect())
            .collect()
    }

    #[test]
    fn identical_languages_zero_drift() {
        let rows = random_rows(5, 6, 8);
        let set = aligned_set(vec![
            ("aa", rows.clone()),
            ("bb", rows.clone()),
            ("cc", rows.clone()),
            ("dd", rows),
        ]);
        let p = partition(&[&["aa", "bb"], &["cc", "dd"]]);
        let report = compute_drift(&set, &p).unwrap();
        for r in &report.records {
            assert_eq!(r.ics.len(), 2);
            assert_eq!(r.ccs.len(), 4);
            assert!(r.drift.abs() < 1e-12, "drift {} for {}", r.drift, r.concept);
        }
    }

    #[test]
    fn pair_counts_follow_cluster_sizes() {
        // 3 clusters of 2: per concept 3 intra pairs and 12 cross pairs
        let set = aligned_set(
            ["aa", "bb", "cc", "dd", "ee", "ff"]
                .iter()
                .enumerate()
                .map(|(i, code)| (*code, random_rows(i as u64, 5, 6)))
                .collect(),
        );
        let p = partition(&[&["aa", "bb"], &["cc", "dd"], &["ee", "ff"]]);
        let report = compute_drift(&set, &p).unwrap();
        for r in &report.records {
            assert_eq!(r.ics.len(), 3);
            assert_eq!(r.ccs.len(), 12);
        }
    }

    #[test]
    fn swapping_clusters_leaves_drift_unchanged() {
        let set = aligned_set(vec![
            ("aa", random_rows(1, 5, 6)),
            ("bb", random_rows(2, 5, 6)),
            ("cc", random_rows(3, 5, 6)),
            ("dd", random_rows(4, 5, 6)),
        ]);
        let p1 = partition(&[&["aa", "bb"], &["cc", "dd"]]);
        let p2 = partition(&[&["cc", "dd"], &["aa", "bb"]]);
        let r1 = compute_drift(&set, &p1).unwrap();
        let r2 = compute_drift(&set, &p2).unwrap();
        for (a, b) in r1.records.iter().zip(&r2.records) {
            assert_eq!(a.concept, b.concept);
            assert!((a.drift - b.drift).abs() < 1e-15);
        }
    }

    #[test]
    fn unresolved_partition_language_rejected() {
        let set = aligned_set(vec![
            ("aa", random_rows(1, 4, 5)),
            ("bb", random_rows(2, 4, 5)),
        ]);
        let p = partition(&[&["aa", "bb"], &["zz", "yy"]]);
        assert!(matches!(
            compute_drift(&set, &p),
            Err(DriftError::UnresolvedLanguage(_))
        ));
    }

    #[test]
    fn nearest_in_list_finds_duplicate() {
        let set = aligned_set(vec![
            (
                "aa",
                vec![
                    vec![1.0, 0.0, 0.0],
                    vec![0.0, 1.0, 0.0],
                    vec![0.0, 0.0, 1.0],
                    vec![1.0, 0.0, 0.0], // duplicate of c0
                ],
            ),
            (
                "bb",
                vec![
                    vec![1.0, 0.0, 0.0],
                    vec![0.0, 1.0, 0.0],
                    vec![0.0, 0.0, 1.0],
                    vec![0.5, 0.5, 0.0],
                ],
            ),
        ]);
        let nn = nearest_in_list(&set, &lang("aa"), "c0", 1).unwrap();
        assert_eq!(nn[0].0, "c3");
        assert!((nn[0].1 - 1.0).abs() < 1e-12);
        assert!(matches!(
            nearest_in_list(&set, &lang("aa"), "nope", 1),
            Err(DriftError::UnknownConcept(_))
        ));
    }

    #[test]
    fn projection_of_axis_aligned_2d_is_recentering() {
        // already 2-D and axis-aligned: projection is a recentering
        // up to sign
        let set = aligned_set(vec![
            ("aa", vec![vec![3.0, 0.1], vec![5.0, 0.2], vec![7.0, 0.0]]),
            ("bb", vec![vec![4.0, 0.0], vec![6.0, 0.3], vec![8.0, 0.1]]),
        ]);
        let proj =
            project_concepts(&set, &[lang("aa"), lang("bb")], &[], 1).unwrap();
        assert_eq!(proj.points.len(), 6);
        // first component tracks the dominant axis
        let xs: Vec<f64> = proj.points.iter().map(|p| p.x).collect();
        let raw: Vec<f64> = [3.0, 5.0, 7.0, 4.0, 6.0, 8.0]
            .iter()
            .map(|v| v - 5.5)
            .collect();
        for (a, b) in xs.iter().zip(&raw) {
            assert!((a - b).abs() < 0.1, "{a} vs {b}");
        }
        assert!(proj.explained_variance[0] >= proj.explained_variance[1]);
        assert!(proj.explained_variance[0] <= 1.0);
    }

    #[test]
    fn projection_rank_deficient_rejected() {
        let set = aligned_set(vec![
            ("aa", vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]),
            ("bb", vec![vec![4.0, 8.0], vec![5.0, 10.0], vec![6.0, 12.0]]),
        ]);
        assert!(matches!(
            project_concepts(&set, &[lang("aa"), lang("bb")], &[], 1),
            Err(DriftError::RankDeficient)
        ));
    }

    #[test]
    fn projection_focus_points_marked() {
        let set = aligned_set(vec![
            ("aa", random_rows(7, 6, 4)),
            ("bb", random_rows(8, 6, 4)),
        ]);
        let proj =
            project_concepts(&set, &[lang("aa"), lang("bb")], &["c1".to_string()], 2)
                .unwrap();
        // per language: 1 focus + 2 neighbors
        assert_eq!(proj.points.len(), 6);
        assert_eq!(proj.points.iter().filter(|p| p.focus).count(), 2);
    }
}
