//! Synthetic workspaces with a planted phylogeny, for tests and demos.
//!
//! An anchor concept matrix is perturbed along the edges of a known tree:
//! each edge adds i.i.d. Gaussian noise to every vector and renormalizes,
//! so leaves that share more of their root path stay more similar.

use std::io;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::embedding::{EmbeddingSpace, ManifestEntry, SpaceRole};
use crate::language::LanguageId;
use crate::phylo::{NewickError, PhyloTree};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid planted tree: {0}")]
    Tree(#[from] NewickError),
    #[error("need at least 2 concepts, got {0}")]
    TooFewConcepts(usize),
    #[error("need a positive dimension")]
    ZeroDim,
    #[error("noise sigma must be non-negative and finite, got {0}")]
    BadSigma(f64),
}

/// Parameters of a planted workspace.
#[derive(Debug, Clone)]
pub struct PlantedConfig {
    /// The planted topology, as Newick over the leaf languages.
    pub tree_newick: String,
    pub n_concepts: usize,
    pub dim: usize,
    /// Per-edge Gaussian noise scale, applied before renormalization.
    pub edge_noise_sigma: f64,
    /// Extra random vocabulary entries appended per language.
    pub distractors: usize,
}

impl PlantedConfig {
    /// A balanced 8-leaf tree at the scale used by the recovery checks.
    pub fn default_eight_leaves() -> Self {
        PlantedConfig {
            tree_newick: "(((l0,l1),(l2,l3)),((l4,l5),(l6,l7)));".to_string(),
            n_concepts: 50,
            dim: 64,
            edge_noise_sigma: 0.05,
            distractors: 0,
        }
    }
}

/// A generated workspace: one embedding space per leaf language, vocabulary
/// keyed by concept names, plus the planted tree itself.
pub struct PlantedWorkspace {
    pub tree: PhyloTree,
    pub concepts: Vec<String>,
    pub spaces: Vec<EmbeddingSpace>,
}

impl PlantedWorkspace {
    pub fn languages(&self) -> Vec<LanguageId> {
        self.spaces.iter().map(|s| s.language().clone()).collect()
    }

    /// Write `.vec` files plus a manifest into `dir`; returns the manifest
    /// path.
    pub fn write_files(&self, dir: &Path) -> io::Result<PathBuf> {
        let mut entries = Vec::with_capacity(self.spaces.len());
        for space in &self.spaces {
            let file = format!("{}.vec", space.language());
            space.write_vec_file(&dir.join(&file))?;
            entries.push(ManifestEntry {
                language: space.language().clone(),
                path: file,
                role: SpaceRole::WordSpace,
            });
        }
        let manifest_path = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(&entries).expect("serializable");
        std::fs::write(&manifest_path, json + "\n")?;
        Ok(manifest_path)
    }
}

fn normalize_rows(matrix: &mut [Vec<f64>]) {
    for row in matrix.iter_mut() {
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in row.iter_mut() {
                *v /= norm;
            }
        }
    }
}

/// Generate a workspace by perturbing an anchor space along the planted
/// tree. Fully determined by `(cfg, seed)`.
pub fn planted_workspace(cfg: &PlantedConfig, seed: u64) -> Result<PlantedWorkspace, SynthError> {
    if cfg.n_concepts < 2 {
        return Err(SynthError::TooFewConcepts(cfg.n_concepts));
    }
    if cfg.dim == 0 {
        return Err(SynthError::ZeroDim);
    }
    if !cfg.edge_noise_sigma.is_finite() || cfg.edge_noise_sigma < 0.0 {
        return Err(SynthError::BadSigma(cfg.edge_noise_sigma));
    }
    let tree = PhyloTree::from_newick(&cfg.tree_newick)?;
    let concepts: Vec<String> = (0..cfg.n_concepts).map(|i| format!("c{i:03}")).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut root: Vec<Vec<f64>> = (0..cfg.n_concepts)
        .map(|_| (0..cfg.dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    normalize_rows(&mut root);

    // walk the tree from the root; each edge perturbs and renormalizes.
    // children are visited in merge order, so generation is deterministic.
    let leaf_count = tree.leaf_count();
    let root_id = 2 * leaf_count - 2;
    let mut spaces: Vec<Option<EmbeddingSpace>> = Vec::new();
    spaces.resize_with(leaf_count, || None);
    let mut stack: Vec<(usize, Vec<Vec<f64>>)> = vec![(root_id, root)];
    while let Some((node, vectors)) = stack.pop() {
        if node < leaf_count {
            let language = tree.leaves()[node].clone();
            let mut rows: Vec<(String, Vec<f32>)> = concepts
                .iter()
                .zip(&vectors)
                .map(|(c, v)| (c.clone(), v.iter().map(|&x| x as f32).collect()))
                .collect();
            let mut distractor_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            distractor_rng.set_stream(node as u64 + 1);
            for d in 0..cfg.distractors {
                let v: Vec<f32> = (0..cfg.dim)
                    .map(|_| distractor_rng.sample::<f64, _>(StandardNormal) as f32)
                    .collect();
                rows.push((format!("x{d:03}"), v));
            }
            let space = EmbeddingSpace::from_rows(language, rows, true)
                .expect("generated rows are well-formed");
            spaces[node] = Some(space);
            continue;
        }
        let merge = tree.merges()[node - leaf_count];
        // right first so the left child is processed first off the stack
        for child in [merge.right, merge.left] {
            let mut perturbed = vectors.clone();
            let mut edge_rng = ChaCha8Rng::seed_from_u64(seed);
            edge_rng.set_stream(child as u64 + 1);
            for row in perturbed.iter_mut() {
                for v in row.iter_mut() {
                    *v += cfg.edge_noise_sigma * edge_rng.sample::<f64, _>(StandardNormal);
                }
            }
            normalize_rows(&mut perturbed);
            stack.push((child, perturbed));
        }
    }

    Ok(PlantedWorkspace {
        tree,
        concepts,
        spaces: spaces.into_iter().map(|s| s.expect("every leaf visited")).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::cosine_f32;

    #[test]
    fn generation_is_deterministic() {
        let cfg = PlantedConfig {
            n_concepts: 5,
            dim: 8,
            ..PlantedConfig::default_eight_leaves()
        };
        let a = planted_workspace(&cfg, 3).unwrap();
        let b = planted_workspace(&cfg, 3).unwrap();
        for (sa, sb) in a.spaces.iter().zip(&b.spaces) {
            assert_eq!(sa.language(), sb.language());
            for i in 0..sa.len() {
                assert_eq!(sa.row(i), sb.row(i));
            }
        }
        let c = planted_workspace(&cfg, 4).unwrap();
        assert_ne!(a.spaces[0].row(0), c.spaces[0].row(0));
    }

    #[test]
    fn siblings_more_similar_than_distant_leaves() {
        let ws = planted_workspace(&PlantedConfig::default_eight_leaves(), 1).unwrap();
        // l0 and l1 are siblings, l0 and l7 sit on opposite sides
        let l0 = &ws.spaces[0];
        let l1 = ws.spaces.iter().find(|s| s.language().as_str() == "l1").unwrap();
        let l7 = ws.spaces.iter().find(|s| s.language().as_str() == "l7").unwrap();
        let mut sib = 0.0;
        let mut far = 0.0;
        for i in 0..l0.len() {
            sib += cosine_f32(l0.row(i), l1.row(i));
            far += cosine_f32(l0.row(i), l7.row(i));
        }
        assert!(sib > far, "sibling sum {sib} should exceed distant sum {far}");
    }

    #[test]
    fn distractors_extend_vocabulary() {
        let cfg = PlantedConfig {
            n_concepts: 4,
            dim: 6,
            distractors: 3,
            ..PlantedConfig::default_eight_leaves()
        };
        let ws = planted_workspace(&cfg, 2).unwrap();
        assert_eq!(ws.spaces[0].len(), 7);
        assert_eq!(ws.spaces[0].tokens()[4], "x000");
    }
}
