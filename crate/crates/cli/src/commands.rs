//! Subcommand implementations.

use std::path::Path;

use serde::Serialize;

use semdrift_core::align::{
    build_concept_set, concept_set_from_aligned, read_concept_list, translate, ConceptSet,
};
use semdrift_core::bundled;
use semdrift_core::drift::{compute_drift_with, project_concepts, ClusterPartition};
use semdrift_core::embedding::{Manifest, SpaceRole};
use semdrift_core::language::LanguageId;
use semdrift_core::phylo::{
    permutation_baseline, random_baseline, score_tree, tree_distance, ward_cluster_with,
    PhyloTree, TreeScore,
};
use semdrift_core::quality::{
    similarity_search_accuracy, word_quality, BilingualDictionary, QualityReport,
};
use semdrift_core::rsa::{
    build_all_rsms, language_matrix_from_rsms, word_pair_variance_from_rsms,
    LanguageSimilarityMatrix, RsaOptions,
};

use crate::config::{Format, RunConfig};
use crate::output::OutputWriter;
use crate::CliError;

fn language_id(code: &str) -> Result<LanguageId, CliError> {
    LanguageId::new(code).map_err(|e| CliError::Validation(e.to_string()))
}

fn rsa_options(config: &RunConfig) -> RsaOptions {
    RsaOptions {
        include_diagonal: !config.exclude_diagonal,
    }
}

/// Which kind of workspace the manifest describes.
enum WorkspaceKind {
    WordSpaces,
    AlignedItems,
}

fn read_manifest(config: &RunConfig) -> Result<(Manifest, WorkspaceKind), CliError> {
    let manifest = Manifest::read(Path::new(&config.manifest))?;
    let words = !manifest.entries_with_role(SpaceRole::WordSpace).is_empty();
    let aligned = !manifest.entries_with_role(SpaceRole::AlignedItems).is_empty();
    match (words, aligned) {
        (true, false) => Ok((manifest, WorkspaceKind::WordSpaces)),
        (false, true) => Ok((manifest, WorkspaceKind::AlignedItems)),
        (true, true) => Err(CliError::Validation(
            "manifest mixes word-space and aligned-items roles; use one role per run"
                .to_string(),
        )),
        (false, false) => Err(CliError::Validation("manifest has no entries".to_string())),
    }
}

fn read_concepts(config: &RunConfig) -> Result<Vec<String>, CliError> {
    let source = config.concepts.as_deref().ok_or_else(|| {
        CliError::Validation("a concept list is required (--concepts name-or-path)".to_string())
    })?;
    let text = match bundled::concept_list(source) {
        Some(text) => text.to_string(),
        None => std::fs::read_to_string(source).map_err(|e| {
            CliError::Validation(format!("cannot read concept list {source:?}: {e}"))
        })?,
    };
    let concepts = read_concept_list(&text);
    if concepts.is_empty() {
        return Err(CliError::Validation(format!(
            "concept list {source:?} is empty"
        )));
    }
    Ok(concepts)
}

fn read_gold_tree(source: &str) -> Result<PhyloTree, CliError> {
    let text = match bundled::gold_tree(source) {
        Some(text) => text.to_string(),
        None => std::fs::read_to_string(source).map_err(|e| {
            CliError::Validation(format!("cannot read gold tree {source:?}: {e}"))
        })?,
    };
    // output trees carry a # provenance header; strip comment lines
    let newick: String = text
        .lines()
        .filter(|l| !l.trim_start().starts_with('#'))
        .collect::<Vec<_>>()
        .join("\n");
    PhyloTree::from_newick(&newick)
        .map_err(|e| CliError::Validation(format!("gold tree {source:?}: {e}")))
}

fn read_partition(config: &RunConfig) -> Result<ClusterPartition, CliError> {
    let source = config.clusters.as_deref().ok_or_else(|| {
        CliError::Validation("a cluster config is required (--clusters name-or-path)".to_string())
    })?;
    let text = match bundled::cluster_config(source) {
        Some(text) => text.to_string(),
        None => std::fs::read_to_string(source).map_err(|e| {
            CliError::Validation(format!("cannot read cluster config {source:?}: {e}"))
        })?,
    };
    ClusterPartition::from_json(&text).map_err(|e| CliError::Validation(e.to_string()))
}

/// Build the concept set the pipeline runs on: nearest-neighbor resolution
/// for word-space manifests, direct adoption for aligned-items manifests.
fn load_concept_set(config: &RunConfig) -> Result<ConceptSet, CliError> {
    let (manifest, kind) = read_manifest(config)?;
    match kind {
        WorkspaceKind::WordSpaces => {
            let concepts = read_concepts(config)?;
            let spaces = manifest.load_word_spaces(config.vocab_cap, config.normalize)?;
            let anchor_code = match &config.anchor {
                Some(code) => language_id(code)?,
                None => {
                    let english = language_id("en")?;
                    if spaces.iter().any(|s| s.language() == &english) {
                        english
                    } else {
                        spaces[0].language().clone()
                    }
                }
            };
            let anchor_idx = spaces
                .iter()
                .position(|s| s.language() == &anchor_code)
                .ok_or_else(|| {
                    CliError::Validation(format!(
                        "anchor language {anchor_code} is not in the manifest"
                    ))
                })?;
            let anchor = &spaces[anchor_idx];
            let targets: Vec<&semdrift_core::EmbeddingSpace> = spaces
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != anchor_idx)
                .map(|(_, s)| s)
                .collect();
            Ok(build_concept_set(&concepts, anchor, &targets)?)
        }
        WorkspaceKind::AlignedItems => {
            if config.concepts.is_some() {
                log::warn!("aligned-items manifest: the concept list is ignored");
            }
            let items = manifest.load_aligned_items()?;
            let anchor = match &config.anchor {
                Some(code) => Some(language_id(code)?),
                None => None,
            };
            Ok(concept_set_from_aligned(&items, anchor.as_ref())?)
        }
    }
}

#[derive(Serialize)]
struct RsaSummary {
    anchor: String,
    languages: Vec<String>,
    concept_count: usize,
    dropped: Vec<semdrift_core::align::DroppedConcept>,
    degenerate_rows: usize,
}

pub fn cmd_rsa(config: &RunConfig) -> Result<(), CliError> {
    let set = load_concept_set(config)?;
    let rsms = build_all_rsms(&set)?;
    let opts = rsa_options(config);
    let matrix = language_matrix_from_rsms(&rsms, &opts)?;
    let variance = word_pair_variance_from_rsms(&rsms)?;

    for dropped in set.dropped() {
        println!("dropped concept: {} ({})", dropped.concept, dropped.reason);
    }

    let mut out = OutputWriter::new(&config.out_dir(), config.provenance())?;
    for rsm in &rsms {
        if config.wants(Format::Csv) {
            out.csv(&format!("rsm_{}.csv", rsm.language), |buf| {
                rsm.write_csv(buf).map_err(CliError::from)
            })?;
        }
        if config.wants(Format::Json) {
            out.json(&format!("rsm_{}.json", rsm.language), rsm)?;
        }
    }
    if config.wants(Format::Csv) {
        out.csv("language_matrix.csv", |buf| {
            matrix.write_csv(buf).map_err(CliError::from)
        })?;
        out.csv("word_pair_variance.csv", |buf| {
            variance.write_csv(buf).map_err(CliError::from)
        })?;
    }
    if config.wants(Format::Json) {
        out.json("language_matrix.json", &matrix)?;
        out.json("word_pair_variance.json", &variance)?;
        out.json(
            "rsa_summary.json",
            &RsaSummary {
                anchor: set.anchor().to_string(),
                languages: set.languages().iter().map(|l| l.to_string()).collect(),
                concept_count: set.n(),
                dropped: set.dropped().to_vec(),
                degenerate_rows: matrix.degenerate_rows,
            },
        )?;
    }
    println!(
        "rsa: {} languages, {} concepts -> {}",
        matrix.len(),
        set.n(),
        config.out_dir().display()
    );
    Ok(())
}

#[derive(Serialize)]
struct MergeRow {
    step: usize,
    left: usize,
    right: usize,
    height: f64,
    size: usize,
}

#[derive(Serialize)]
struct ClusterScores {
    model_distance: f64,
    scores: Vec<TreeScore>,
}

pub fn cmd_cluster(config: &RunConfig) -> Result<(), CliError> {
    let matrix = match &config.matrix {
        Some(path) => LanguageSimilarityMatrix::read_csv(Path::new(path))?,
        None => {
            let set = load_concept_set(config)?;
            let rsms = build_all_rsms(&set)?;
            language_matrix_from_rsms(&rsms, &rsa_options(config))?
        }
    };
    let tree = ward_cluster_with(&matrix, config.ward_input.into())?;

    let mut out = OutputWriter::new(&config.out_dir(), config.provenance())?;
    out.newick("tree.nwk", &tree.to_newick())?;

    let leaf_count = tree.leaf_count();
    let mut sizes = vec![1usize; 2 * leaf_count - 1];
    let merge_rows: Vec<MergeRow> = tree
        .merges()
        .iter()
        .enumerate()
        .map(|(step, m)| {
            let size = sizes[m.left] + sizes[m.right];
            sizes[leaf_count + step] = size;
            MergeRow {
                step,
                left: m.left,
                right: m.right,
                height: m.height,
                size,
            }
        })
        .collect();
    if config.wants(Format::Csv) {
        out.csv("merges.csv", |buf| {
            let mut w = csv::WriterBuilder::new().from_writer(buf);
            w.write_record(["step", "left", "right", "height", "size"])
                .map_err(|e| CliError::Internal(e.to_string()))?;
            for row in &merge_rows {
                w.write_record(&[
                    row.step.to_string(),
                    row.left.to_string(),
                    row.right.to_string(),
                    format!("{:.8e}", row.height),
                    row.size.to_string(),
                ])
                .map_err(|e| CliError::Internal(e.to_string()))?;
            }
            w.flush().map_err(|e| CliError::Internal(e.to_string()))?;
            Ok(())
        })?;
    }
    if config.wants(Format::Json) {
        #[derive(Serialize)]
        struct TreeJson<'a> {
            languages: Vec<String>,
            newick: String,
            merges: &'a [MergeRow],
        }
        out.json(
            "tree.json",
            &TreeJson {
                languages: tree.leaves().iter().map(|l| l.to_string()).collect(),
                newick: tree.to_newick(),
                merges: &merge_rows,
            },
        )?;
    }

    if let Some(gold_source) = &config.gold_tree {
        let gold = read_gold_tree(gold_source)?;
        let model_distance = tree_distance(&tree, &gold)?;
        // separate seeds keep the two baselines' draws independent
        let random = random_baseline(
            &matrix.languages,
            &gold,
            config.baseline_iterations,
            config.baseline_lo,
            config.baseline_hi,
            config.seed,
        )?;
        let permutation = permutation_baseline(
            &matrix,
            &gold,
            config.baseline_iterations,
            config.seed.wrapping_add(1),
        )?;
        let scores = ClusterScores {
            model_distance,
            scores: vec![
                score_tree(&tree, &gold, random)?,
                score_tree(&tree, &gold, permutation)?,
            ],
        };
        out.json("tree_score.json", &scores)?;
        for s in &scores.scores {
            println!(
                "cluster: model distance {} vs {:?} baseline mean {:.3} -> quality change {:+.1}%",
                s.model_distance, s.baseline.kind, s.baseline.mean, s.quality_change_pct
            );
        }
    } else {
        println!(
            "cluster: {} languages -> {}",
            matrix.len(),
            config.out_dir().display()
        );
    }
    Ok(())
}

pub fn cmd_drift(config: &RunConfig) -> Result<(), CliError> {
    let set = load_concept_set(config)?;
    let partition = read_partition(config)?;
    let report = compute_drift_with(&set, &partition, &rsa_options(config))?;

    let mut out = OutputWriter::new(&config.out_dir(), config.provenance())?;
    if config.wants(Format::Csv) {
        out.csv("drift.csv", |buf| report.write_csv(buf).map_err(CliError::from))?;
    }
    if config.wants(Format::Json) {
        out.json("drift.json", &report)?;
    }
    println!(
        "drift: {} concepts over {} clusters -> {}",
        report.records.len(),
        partition.clusters().len(),
        config.out_dir().display()
    );
    Ok(())
}

pub fn cmd_quality(config: &RunConfig) -> Result<(), CliError> {
    let (manifest, kind) = read_manifest(config)?;
    let report: QualityReport = match kind {
        WorkspaceKind::WordSpaces => {
            let set = load_concept_set(config)?;
            let dicts: Vec<BilingualDictionary> = config
                .dictionaries
                .iter()
                .map(|d| {
                    BilingualDictionary::read_tsv(
                        Path::new(&d.path),
                        language_id(&d.source)?,
                        language_id(&d.target)?,
                    )
                    .map_err(|e| CliError::Validation(e.to_string()))
                })
                .collect::<Result<_, _>>()?;
            let requested: Vec<LanguageId> = if config.languages.is_empty() {
                set.languages()
                    .iter()
                    .filter(|l| *l != set.anchor())
                    .cloned()
                    .collect()
            } else {
                config
                    .languages
                    .iter()
                    .map(|c| language_id(c))
                    .collect::<Result<_, _>>()?
            };
            let covered: Vec<LanguageId> = requested
                .iter()
                .filter(|lang| {
                    let has_dict = dicts
                        .iter()
                        .any(|d| d.source_lang == *set.anchor() && d.target_lang == **lang);
                    if !has_dict {
                        log::warn!("no dictionary for language {lang}; skipping it");
                    }
                    has_dict
                })
                .cloned()
                .collect();
            if covered.is_empty() {
                return Err(CliError::Validation(
                    "no evaluated language has a dictionary".to_string(),
                ));
            }
            word_quality(&set, &dicts, &covered, config.fuzzy_cutoff)?
        }
        WorkspaceKind::AlignedItems => {
            let items = manifest.load_aligned_items()?;
            let anchor = match &config.anchor {
                Some(code) => language_id(code)?,
                None => {
                    let english = language_id("en")?;
                    if items.language_index(&english).is_some() {
                        english
                    } else {
                        items.languages()[0].clone()
                    }
                }
            };
            let mut per_language = Vec::new();
            for target in items.languages() {
                if *target == anchor {
                    continue;
                }
                let sub = similarity_search_accuracy(&items, &anchor, target)?;
                per_language.extend(sub.per_language);
            }
            QualityReport { per_language }
        }
    };

    let mut out = OutputWriter::new(&config.out_dir(), config.provenance())?;
    if config.wants(Format::Csv) {
        out.csv("quality.csv", |buf| report.write_csv(buf).map_err(CliError::from))?;
    }
    if config.wants(Format::Json) {
        out.json("quality.json", &report)?;
    }
    for l in &report.per_language {
        println!(
            "quality[{}]: {:.2}% ({} / {} matched)",
            l.language, l.accuracy, l.matched, l.evaluated
        );
    }
    Ok(())
}

pub fn cmd_project(config: &RunConfig) -> Result<(), CliError> {
    let set = load_concept_set(config)?;
    let languages: Vec<LanguageId> = if config.languages.is_empty() {
        set.languages().to_vec()
    } else {
        config
            .languages
            .iter()
            .map(|c| language_id(c))
            .collect::<Result<_, _>>()?
    };
    let projection = project_concepts(&set, &languages, &config.focus, config.neighbors)?;

    let mut out = OutputWriter::new(&config.out_dir(), config.provenance())?;
    if config.wants(Format::Csv) {
        out.csv("projection.csv", |buf| {
            projection.write_csv(buf).map_err(CliError::from)
        })?;
    }
    if config.wants(Format::Json) {
        out.json("projection.json", &projection)?;
    }
    println!(
        "project: {} points, explained variance {:.3} + {:.3} -> {}",
        projection.points.len(),
        projection.explained_variance[0],
        projection.explained_variance[1],
        config.out_dir().display()
    );
    Ok(())
}

pub fn cmd_translate(
    config: &RunConfig,
    token: &str,
    target: &str,
    k: usize,
) -> Result<(), CliError> {
    let (manifest, kind) = read_manifest(config)?;
    if !matches!(kind, WorkspaceKind::WordSpaces) {
        return Err(CliError::Validation(
            "translate needs a word-space manifest".to_string(),
        ));
    }
    let spaces = manifest.load_word_spaces(config.vocab_cap, config.normalize)?;
    let anchor_code = match &config.anchor {
        Some(code) => language_id(code)?,
        None => {
            let english = language_id("en")?;
            if spaces.iter().any(|s| s.language() == &english) {
                english
            } else {
                spaces[0].language().clone()
            }
        }
    };
    let target_code = language_id(target)?;
    let anchor = spaces
        .iter()
        .find(|s| s.language() == &anchor_code)
        .ok_or_else(|| {
            CliError::Validation(format!("anchor language {anchor_code} is not in the manifest"))
        })?;
    let target_space = spaces
        .iter()
        .find(|s| s.language() == &target_code)
        .ok_or_else(|| {
            CliError::Validation(format!("target language {target_code} is not in the manifest"))
        })?;
    let source_vec = anchor.lookup(token).ok_or_else(|| {
        CliError::Validation(format!(
            "token {token:?} is not in the {anchor_code} vocabulary"
        ))
    })?;
    let candidates = translate(token, source_vec, target_space, k)?;
    for (rank, (word, cosine)) in candidates.top_k.iter().enumerate() {
        println!("{}\t{word}\t{cosine:.6}", rank + 1);
    }
    let mut out = OutputWriter::new(&config.out_dir(), config.provenance())?;
    #[derive(Serialize)]
    struct TranslateJson<'a> {
        concept: &'a str,
        language: String,
        top_k: &'a [(String, f64)],
    }
    out.json(
        "translate.json",
        &TranslateJson {
            concept: &candidates.concept,
            language: candidates.language.to_string(),
            top_k: &candidates.top_k,
        },
    )?;
    Ok(())
}
