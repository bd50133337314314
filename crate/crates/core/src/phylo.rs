//! Phylogenetic reconstruction: Ward-linkage clustering of the second-order
//! matrix, edge-count tree distance, and the random and permutation
//! baselines used to score reconstructed trees.

use rand::distributions::{Distribution, Uniform};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::language::LanguageId;
use crate::numeric::{mean, population_std};
use crate::rsa::LanguageSimilarityMatrix;

#[derive(Debug, Error)]
pub enum PhyloError {
    #[error("similarity matrix is not symmetric at ({0}, {1})")]
    NonSymmetric(usize, usize),
    #[error("need at least 2 languages, got {0}")]
    TooFewLanguages(usize),
    #[error("unknown leaf {0}")]
    UnknownLeaf(LanguageId),
    #[error("leaf_path_edges requires two distinct leaves")]
    SameLeaf,
    #[error("leaf sets differ; not shared by both trees: {missing:?}")]
    LeafSetMismatch { missing: Vec<String> },
    #[error("invalid uniform range [{lo}, {hi})")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("iterations must be at least 1")]
    ZeroIterations,
    #[error("baseline mean must be positive, got {0}")]
    NonPositiveBaseline(f64),
    #[error("invalid tree: {0}")]
    InvalidTree(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum NewickError {
    #[error("unbalanced parentheses at byte {0}")]
    Unbalanced(usize),
    #[error("duplicate leaf label {0:?}")]
    DuplicateLeaf(String),
    #[error("leaf without a label at byte {0}")]
    MissingLabel(usize),
    #[error("internal node at byte {0} has {1} children; trees must be binary")]
    NonBinary(usize, usize),
    #[error("unparseable branch length at byte {0}")]
    BadLength(usize),
    #[error("negative branch length at byte {0}")]
    NegativeLength(usize),
    #[error("unexpected trailing input at byte {0}")]
    Trailing(usize),
    #[error("empty input")]
    Empty,
    #[error("a tree needs at least two leaves")]
    SingleLeaf,
    #[error("invalid leaf label: {0}")]
    BadLabel(#[from] crate::language::LanguageIdError),
    #[error("inconsistent tree structure: {0}")]
    Structure(String),
}

/// One agglomeration step. `left` and `right` are node ids: ids below the
/// leaf count name leaves, id `leaf_count + k` names the cluster formed by
/// merge k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub height: f64,
}

/// A rooted binary tree over language leaves with merge heights.
///
/// Heights are non-decreasing from any leaf to the root. Path queries count
/// edges through the binary topology, branch lengths play no part.
#[derive(Debug, Clone)]
pub struct PhyloTree {
    leaves: Vec<LanguageId>,
    merges: Vec<Merge>,
    parent: Vec<Option<usize>>,
    depth: Vec<usize>,
}

impl PhyloTree {
    pub fn new(leaves: Vec<LanguageId>, merges: Vec<Merge>) -> Result<Self, PhyloError> {
        let m = leaves.len();
        if m < 2 {
            return Err(PhyloError::TooFewLanguages(m));
        }
        if merges.len() != m - 1 {
            return Err(PhyloError::InvalidTree(format!(
                "{} leaves need {} merges, got {}",
                m,
                m - 1,
                merges.len()
            )));
        }
        {
            let mut seen = std::collections::BTreeSet::new();
            for leaf in &leaves {
                if !seen.insert(leaf.clone()) {
                    return Err(PhyloError::InvalidTree(format!(
                        "leaf {leaf} appears more than once"
                    )));
                }
            }
        }
        let node_count = 2 * m - 1;
        let mut parent: Vec<Option<usize>> = vec![None; node_count];
        for (k, merge) in merges.iter().enumerate() {
            let id = m + k;
            for child in [merge.left, merge.right] {
                if child >= id {
                    return Err(PhyloError::InvalidTree(format!(
                        "merge {k} references node {child} that does not exist yet"
                    )));
                }
                if parent[child].is_some() {
                    return Err(PhyloError::InvalidTree(format!(
                        "node {child} has two parents"
                    )));
                }
                parent[child] = Some(id);
            }
            if !merge.height.is_finite() || merge.height < 0.0 {
                return Err(PhyloError::InvalidTree(format!(
                    "merge {k} has invalid height {}",
                    merge.height
                )));
            }
        }
        if parent[..node_count - 1].iter().any(Option::is_none) {
            return Err(PhyloError::InvalidTree(
                "tree is not connected".to_string(),
            ));
        }
        // heights must not decrease toward the root
        for (k, merge) in merges.iter().enumerate() {
            for child in [merge.left, merge.right] {
                if child >= m {
                    let child_height = merges[child - m].height;
                    if merge.height < child_height - 1e-9 {
                        return Err(PhyloError::InvalidTree(format!(
                            "merge {k} height {} is below child height {child_height}",
                            merge.height
                        )));
                    }
                }
            }
        }
        let mut depth = vec![0usize; node_count];
        for id in (0..node_count - 1).rev() {
            depth[id] = depth[parent[id].expect("checked connected")] + 1;
        }
        Ok(PhyloTree {
            leaves,
            merges,
            parent,
            depth,
        })
    }

    pub fn leaves(&self) -> &[LanguageId] {
        &self.leaves
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves.len()
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn leaf_index(&self, language: &LanguageId) -> Option<usize> {
        self.leaves.iter().position(|l| l == language)
    }

    /// Number of edges on the unique path between two leaves.
    pub fn leaf_path_edges(&self, a: &LanguageId, b: &LanguageId) -> Result<usize, PhyloError> {
        let ia = self
            .leaf_index(a)
            .ok_or_else(|| PhyloError::UnknownLeaf(a.clone()))?;
        let ib = self
            .leaf_index(b)
            .ok_or_else(|| PhyloError::UnknownLeaf(b.clone()))?;
        if ia == ib {
            return Err(PhyloError::SameLeaf);
        }
        Ok(self.path_edges_by_index(ia, ib))
    }

    fn path_edges_by_index(&self, ia: usize, ib: usize) -> usize {
        let (mut x, mut y) = (ia, ib);
        while x != y {
            if self.depth[x] >= self.depth[y] {
                x = self.parent[x].expect("root reached without meeting");
            } else {
                y = self.parent[y].expect("root reached without meeting");
            }
        }
        (self.depth[ia] - self.depth[x]) + (self.depth[ib] - self.depth[x])
    }

    /// Serialize to Newick; merge heights become branch lengths.
    pub fn to_newick(&self) -> String {
        let mut out = String::new();
        let root = 2 * self.leaf_count() - 2;
        self.write_newick_node(root, &mut out);
        out.push(';');
        out
    }

    fn node_height(&self, id: usize) -> f64 {
        if id < self.leaf_count() {
            0.0
        } else {
            self.merges[id - self.leaf_count()].height
        }
    }

    fn write_newick_node(&self, id: usize, out: &mut String) {
        if id < self.leaf_count() {
            out.push_str(self.leaves[id].as_str());
            return;
        }
        let merge = self.merges[id - self.leaf_count()];
        out.push('(');
        for (pos, child) in [merge.left, merge.right].into_iter().enumerate() {
            if pos > 0 {
                out.push(',');
            }
            self.write_newick_node(child, out);
            let branch = merge.height - self.node_height(child);
            out.push(':');
            out.push_str(&format!("{branch}"));
        }
        out.push(')');
    }

    /// Parse a binary Newick tree. Branch lengths are optional and only
    /// used to reconstruct merge heights; internal labels are ignored.
    pub fn from_newick(text: &str) -> Result<Self, NewickError> {
        let bytes = text.trim().as_bytes();
        if bytes.is_empty() {
            return Err(NewickError::Empty);
        }
        let mut parser = NewickParser {
            bytes,
            pos: 0,
            leaves: Vec::new(),
            children: Vec::new(),
        };
        let root = parser.parse_node()?;
        parser.skip_ws();
        if parser.pos < bytes.len() && bytes[parser.pos] == b';' {
            parser.pos += 1;
            parser.skip_ws();
        }
        if parser.pos != bytes.len() {
            return Err(NewickError::Trailing(parser.pos));
        }
        let ParsedNode::Internal(_) = root else {
            return Err(NewickError::SingleLeaf);
        };

        // assign ids: leaves in discovery order, then internal nodes in
        // post-order so children always precede their parent
        let leaf_count = parser.leaves.len();
        let mut merges: Vec<Merge> = Vec::with_capacity(leaf_count.saturating_sub(1));
        let mut heights: Vec<f64> = vec![0.0; leaf_count];
        assign_merges(&root, &parser.children, leaf_count, &mut merges, &mut heights);
        PhyloTree::new(parser.leaves, merges).map_err(|e| NewickError::Structure(e.to_string()))
    }
}

enum ParsedNode {
    Leaf(usize),
    Internal(usize),
}

struct ParsedInternal {
    children: [(usize, bool, f64); 2], // (index-or-id, is_leaf, branch_length)
}

struct NewickParser<'a> {
    bytes: &'a [u8],
    pos: usize,
    leaves: Vec<LanguageId>,
    children: Vec<ParsedInternal>,
}

impl<'a> NewickParser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn parse_node(&mut self) -> Result<ParsedNode, NewickError> {
        self.skip_ws();
        if self.pos < self.bytes.len() && self.bytes[self.pos] == b'(' {
            let open = self.pos;
            self.pos += 1;
            let mut kids: Vec<(ParsedNode, f64)> = Vec::new();
            loop {
                let child = self.parse_node()?;
                let len = self.parse_branch_length()?;
                kids.push((child, len));
                self.skip_ws();
                match self.bytes.get(self.pos) {
                    Some(b',') => {
                        self.pos += 1;
                    }
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(NewickError::Unbalanced(open)),
                }
            }
            // optional internal label, ignored
            self.read_label();
            if kids.len() != 2 {
                return Err(NewickError::NonBinary(open, kids.len()));
            }
            let packed: Vec<(usize, bool, f64)> = kids
                .into_iter()
                .map(|(node, len)| match node {
                    ParsedNode::Leaf(i) => (i, true, len),
                    ParsedNode::Internal(i) => (i, false, len),
                })
                .collect();
            self.children.push(ParsedInternal {
                children: [packed[0], packed[1]],
            });
            Ok(ParsedNode::Internal(self.children.len() - 1))
        } else {
            let start = self.pos;
            let label = self.read_label();
            if label.is_empty() {
                return Err(NewickError::MissingLabel(start));
            }
            let id = LanguageId::new(&label)?;
            if self.leaves.contains(&id) {
                return Err(NewickError::DuplicateLeaf(label));
            }
            self.leaves.push(id);
            Ok(ParsedNode::Leaf(self.leaves.len() - 1))
        }
    }

    fn read_label(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && !matches!(self.bytes[self.pos], b'(' | b')' | b',' | b':' | b';')
            && !self.bytes[self.pos].is_ascii_whitespace()
        {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.bytes[start..self.pos]).into_owned()
    }

    /// Parse an optional `:length` suffix; absent lengths default to 1.
    fn parse_branch_length(&mut self) -> Result<f64, NewickError> {
        self.skip_ws();
        if self.bytes.get(self.pos) != Some(&b':') {
            return Ok(1.0);
        }
        self.pos += 1;
        let start = self.pos;
        while self.pos < self.bytes.len()
            && !matches!(self.bytes[self.pos], b'(' | b')' | b',' | b';')
            && !self.bytes[self.pos].is_ascii_whitespace()
        {
            self.pos += 1;
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos])
            .map_err(|_| NewickError::BadLength(start))?;
        let len: f64 = text.parse().map_err(|_| NewickError::BadLength(start))?;
        if !len.is_finite() {
            return Err(NewickError::BadLength(start));
        }
        if len < 0.0 {
            return Err(NewickError::NegativeLength(start));
        }
        Ok(len)
    }
}

/// Post-order walk over parsed internal nodes, emitting merges so that each
/// node's height is max(child height + branch length).
fn assign_merges(
    node: &ParsedNode,
    internals: &[ParsedInternal],
    leaf_count: usize,
    merges: &mut Vec<Merge>,
    heights: &mut Vec<f64>,
) -> usize {
    match node {
        ParsedNode::Leaf(i) => *i,
        ParsedNode::Internal(i) => {
            let info = &internals[*i];
            let mut ids = [0usize; 2];
            let mut height = 0f64;
            for (slot, &(child, is_leaf, branch)) in info.children.iter().enumerate() {
                let child_node = if is_leaf {
                    ParsedNode::Leaf(child)
                } else {
                    ParsedNode::Internal(child)
                };
                let child_id = assign_merges(&child_node, internals, leaf_count, merges, heights);
                ids[slot] = child_id;
                height = height.max(heights[child_id] + branch);
            }
            merges.push(Merge {
                left: ids[0],
                right: ids[1],
                height,
            });
            let id = leaf_count + merges.len() - 1;
            heights.push(height);
            debug_assert_eq!(heights.len() - 1, id);
            id
        }
    }
}

/// How languages are embedded before Ward clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WardInput {
    /// Each language is its row of the similarity matrix; pairwise Euclidean
    /// row distance feeds the clustering (the default).
    MatrixRows,
    /// `1 - similarity` is taken directly as the pairwise distance.
    OneMinusSimilarity,
}

/// Ward minimum-variance clustering of the language-similarity matrix.
///
/// Merge selection scans all active pairs, ties break toward the smallest
/// `(id_a, id_b)` pair; heights follow the convention that the first merge
/// of two singletons sits at their Euclidean distance.
pub fn ward_cluster(matrix: &LanguageSimilarityMatrix) -> Result<PhyloTree, PhyloError> {
    ward_cluster_with(matrix, WardInput::MatrixRows)
}

pub fn ward_cluster_with(
    matrix: &LanguageSimilarityMatrix,
    input: WardInput,
) -> Result<PhyloTree, PhyloError> {
    let l = matrix.len();
    if l < 2 {
        return Err(PhyloError::TooFewLanguages(l));
    }
    for i in 0..l {
        for j in (i + 1)..l {
            if (matrix.value(i, j) - matrix.value(j, i)).abs() > 1e-9 {
                return Err(PhyloError::NonSymmetric(i, j));
            }
        }
    }
    // squared inter-cluster distances, updated in place
    let mut d2 = vec![vec![0f64; l]; l];
    for i in 0..l {
        for j in (i + 1)..l {
            let v = match input {
                WardInput::MatrixRows => matrix
                    .row(i)
                    .iter()
                    .zip(matrix.row(j))
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum(),
                WardInput::OneMinusSimilarity => {
                    let d = 1.0 - matrix.value(i, j);
                    d * d
                }
            };
            d2[i][j] = v;
            d2[j][i] = v;
        }
    }

    // active clusters in ascending node-id order; slot index doubles as the
    // row index into d2
    let mut ids: Vec<usize> = (0..l).collect();
    let mut slots: Vec<usize> = (0..l).collect();
    let mut sizes: Vec<usize> = vec![1; 2 * l - 1];
    let mut merges = Vec::with_capacity(l - 1);

    for step in 0..(l - 1) {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..ids.len() {
            for b in (a + 1)..ids.len() {
                let cost = d2[slots[a]][slots[b]];
                if best.map_or(true, |(c, _, _)| cost < c) {
                    best = Some((cost, a, b));
                }
            }
        }
        let (cost, a, b) = best.expect("at least one active pair");
        let (id_a, id_b) = (ids[a], ids[b]);
        let (slot_a, slot_b) = (slots[a], slots[b]);
        let new_id = l + step;
        let size_a = sizes[id_a];
        let size_b = sizes[id_b];
        sizes[new_id] = size_a + size_b;
        merges.push(Merge {
            left: id_a,
            right: id_b,
            height: cost.sqrt(),
        });

        // Lance-Williams update for Ward linkage on squared distances;
        // the merged cluster reuses slot_a
        for k in 0..ids.len() {
            if k == a || k == b {
                continue;
            }
            let slot_k = slots[k];
            let size_k = sizes[ids[k]];
            let updated = ((size_a + size_k) as f64 * d2[slot_a][slot_k]
                + (size_b + size_k) as f64 * d2[slot_b][slot_k]
                - size_k as f64 * cost)
                / (size_a + size_b + size_k) as f64;
            d2[slot_a][slot_k] = updated;
            d2[slot_k][slot_a] = updated;
        }
        ids.remove(b);
        slots.remove(b);
        ids.remove(a);
        slots.remove(a);
        ids.push(new_id);
        slots.push(slot_a);
    }

    PhyloTree::new(matrix.languages.clone(), merges)
}

/// Eq.-style squared-difference distance between two trees on the same
/// leaf set: the sum over unordered leaf pairs of the squared difference in
/// path edge counts.
pub fn tree_distance(t: &PhyloTree, g: &PhyloTree) -> Result<f64, PhyloError> {
    let set_t: std::collections::BTreeSet<&LanguageId> = t.leaves().iter().collect();
    let set_g: std::collections::BTreeSet<&LanguageId> = g.leaves().iter().collect();
    if set_t != set_g {
        let missing: Vec<String> = set_t
            .symmetric_difference(&set_g)
            .map(|l| l.to_string())
            .collect();
        return Err(PhyloError::LeafSetMismatch { missing });
    }
    let leaves = t.leaves();
    let mut sum = 0.0;
    for i in 0..leaves.len() {
        for j in (i + 1)..leaves.len() {
            let dt = t.path_edges_by_index(i, j) as f64;
            let dg = g
                .leaf_path_edges(&leaves[i], &leaves[j])
                .expect("leaf sets validated") as f64;
            let diff = dt - dg;
            sum += diff * diff;
        }
    }
    Ok(sum)
}

/// Which baseline produced a score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    Random,
    Permutation,
}

/// Summary of a baseline run.
#[derive(Debug, Clone, Serialize)]
pub struct BaselineStats {
    pub kind: BaselineKind,
    pub iterations: usize,
    pub seed: u64,
    pub mean: f64,
    pub std: f64,
}

fn iteration_rng(seed: u64, iteration: u64) -> ChaCha8Rng {
    // per-iteration streams keep results independent of scheduling
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(iteration);
    rng
}

/// Mean tree distance to `gold` over random symmetric similarity matrices
/// with unit diagonal and off-diagonal entries i.i.d. uniform in [lo, hi).
pub fn random_baseline(
    languages: &[LanguageId],
    gold: &PhyloTree,
    iterations: usize,
    lo: f64,
    hi: f64,
    seed: u64,
) -> Result<BaselineStats, PhyloError> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(PhyloError::InvalidRange { lo, hi });
    }
    if iterations == 0 {
        return Err(PhyloError::ZeroIterations);
    }
    let l = languages.len();
    if l < 2 {
        return Err(PhyloError::TooFewLanguages(l));
    }
    check_leaf_cover(languages, gold)?;

    let dist = Uniform::new(lo, hi);
    let distances: Vec<f64> = (0..iterations)
        .into_par_iter()
        .map(|iter| {
            let mut rng = iteration_rng(seed, iter as u64);
            let mut values = vec![0.0; l * l];
            for i in 0..l {
                values[i * l + i] = 1.0;
                for j in (i + 1)..l {
                    let v = dist.sample(&mut rng);
                    values[i * l + j] = v;
                    values[j * l + i] = v;
                }
            }
            let matrix = LanguageSimilarityMatrix {
                languages: languages.to_vec(),
                values,
                degenerate_rows: 0,
            };
            let tree = ward_cluster(&matrix).expect("random matrix is symmetric");
            tree_distance(&tree, gold).expect("leaf sets validated")
        })
        .collect();

    Ok(BaselineStats {
        kind: BaselineKind::Random,
        iterations,
        seed,
        mean: mean(&distances),
        std: population_std(&distances),
    })
}

/// Mean tree distance to `gold` after randomly permuting the strict upper
/// triangle of the model's similarity matrix (mirrored to keep symmetry,
/// unit diagonal kept).
pub fn permutation_baseline(
    matrix: &LanguageSimilarityMatrix,
    gold: &PhyloTree,
    iterations: usize,
    seed: u64,
) -> Result<BaselineStats, PhyloError> {
    if iterations == 0 {
        return Err(PhyloError::ZeroIterations);
    }
    let l = matrix.len();
    if l < 2 {
        return Err(PhyloError::TooFewLanguages(l));
    }
    check_leaf_cover(&matrix.languages, gold)?;

    let mut upper: Vec<f64> = Vec::with_capacity(l * (l - 1) / 2);
    for i in 0..l {
        for j in (i + 1)..l {
            upper.push(matrix.value(i, j));
        }
    }

    let distances: Vec<f64> = (0..iterations)
        .into_par_iter()
        .map(|iter| {
            let mut rng = iteration_rng(seed, iter as u64);
            let mut shuffled = upper.clone();
            shuffled.shuffle(&mut rng);
            let mut values = vec![0.0; l * l];
            let mut next = shuffled.into_iter();
            for i in 0..l {
                values[i * l + i] = 1.0;
                for j in (i + 1)..l {
                    let v = next.next().expect("triangle sized");
                    values[i * l + j] = v;
                    values[j * l + i] = v;
                }
            }
            let scrambled = LanguageSimilarityMatrix {
                languages: matrix.languages.clone(),
                values,
                degenerate_rows: 0,
            };
            let tree = ward_cluster(&scrambled).expect("mirrored matrix is symmetric");
            tree_distance(&tree, gold).expect("leaf sets validated")
        })
        .collect();

    Ok(BaselineStats {
        kind: BaselineKind::Permutation,
        iterations,
        seed,
        mean: mean(&distances),
        std: population_std(&distances),
    })
}

fn check_leaf_cover(languages: &[LanguageId], gold: &PhyloTree) -> Result<(), PhyloError> {
    let a: std::collections::BTreeSet<&LanguageId> = languages.iter().collect();
    let b: std::collections::BTreeSet<&LanguageId> = gold.leaves().iter().collect();
    if a != b {
        let missing: Vec<String> = a.symmetric_difference(&b).map(|l| l.to_string()).collect();
        return Err(PhyloError::LeafSetMismatch { missing });
    }
    Ok(())
}

/// A reconstructed tree scored against a gold tree and a baseline.
#[derive(Debug, Clone, Serialize)]
pub struct TreeScore {
    pub model_distance: f64,
    pub baseline: BaselineStats,
    /// `(baseline_mean - model_distance) / baseline_mean * 100`;
    /// positive means better than baseline.
    pub quality_change_pct: f64,
}

pub fn score_tree(
    model: &PhyloTree,
    gold: &PhyloTree,
    baseline: BaselineStats,
) -> Result<TreeScore, PhyloError> {
    if baseline.mean <= 0.0 {
        return Err(PhyloError::NonPositiveBaseline(baseline.mean));
    }
    let model_distance = tree_distance(model, gold)?;
    let quality_change_pct = (baseline.mean - model_distance) / baseline.mean * 100.0;
    Ok(TreeScore {
        model_distance,
        baseline,
        quality_change_pct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lang(code: &str) -> LanguageId {
        LanguageId::new(code).unwrap()
    }

    fn langs(codes: &[&str]) -> Vec<LanguageId> {
        codes.iter().map(|c| lang(c)).collect()
    }

    fn matrix(languages: &[&str], values: Vec<f64>) -> LanguageSimilarityMatrix {
        LanguageSimilarityMatrix {
            languages: langs(languages),
            values,
            degenerate_rows: 0,
        }
    }

    #[test]
    fn two_languages_single_merge_at_euclidean_distance() {
        let m = matrix(&["aa", "bb"], vec![1.0, 0.5, 0.5, 1.0]);
        let tree = ward_cluster(&m).unwrap();
        assert_eq!(tree.merges().len(), 1);
        // rows (1.0, 0.5) and (0.5, 1.0): distance sqrt(0.25 + 0.25)
        let expected = (0.25f64 + 0.25).sqrt();
        assert!((tree.merges()[0].height - expected).abs() < 1e-12);
    }

    #[test]
    fn non_symmetric_rejected() {
        let m = matrix(&["aa", "bb"], vec![1.0, 0.5, 0.2, 1.0]);
        assert!(matches!(ward_cluster(&m), Err(PhyloError::NonSymmetric(0, 1))));
    }

    #[test]
    fn merge_heights_monotone() {
        let m = matrix(
            &["aa", "bb", "cc", "dd"],
            vec![
                1.0, 0.9, 0.2, 0.1, //
                0.9, 1.0, 0.3, 0.2, //
                0.2, 0.3, 1.0, 0.8, //
                0.1, 0.2, 0.8, 1.0,
            ],
        );
        let tree = ward_cluster(&m).unwrap();
        for w in tree.merges().windows(2) {
            assert!(w[0].height <= w[1].height + 1e-12);
        }
    }

    #[test]
    fn siblings_have_two_path_edges() {
        let tree = PhyloTree::from_newick("((aa,bb),(cc,dd));").unwrap();
        assert_eq!(tree.leaf_path_edges(&lang("aa"), &lang("bb")).unwrap(), 2);
        assert_eq!(tree.leaf_path_edges(&lang("aa"), &lang("cc")).unwrap(), 4);
        assert_eq!(tree.leaf_path_edges(&lang("bb"), &lang("dd")).unwrap(), 4);
    }

    #[test]
    fn path_edges_errors() {
        let tree = PhyloTree::from_newick("((aa,bb),(cc,dd));").unwrap();
        assert!(matches!(
            tree.leaf_path_edges(&lang("aa"), &lang("zz")),
            Err(PhyloError::UnknownLeaf(_))
        ));
        assert!(matches!(
            tree.leaf_path_edges(&lang("aa"), &lang("aa")),
            Err(PhyloError::SameLeaf)
        ));
    }

    #[test]
    fn tree_distance_identity_and_symmetry() {
        let t = PhyloTree::from_newick("((aa,bb),(cc,dd));").unwrap();
        let g = PhyloTree::from_newick("(((aa,bb),cc),dd);").unwrap();
        assert_eq!(tree_distance(&t, &t).unwrap(), 0.0);
        assert_eq!(
            tree_distance(&t, &g).unwrap(),
            tree_distance(&g, &t).unwrap()
        );
    }

    #[test]
    fn tree_distance_caterpillar_vs_balanced() {
        // balanced: pairs (aa,bb)=2 (cc,dd)=2 others=4
        // caterpillar (((aa,bb),cc),dd): (aa,bb)=2 (aa,cc)=3 (bb,cc)=3
        //   (aa,dd)=4 (bb,dd)=4 (cc,dd)=3
        // squared diffs: (2-2)^2=0 (4-3)^2=1 (4-3)^2=1 (4-4)^2=0 (4-4)^2=0 (2-3)^2=1
        let t = PhyloTree::from_newick("((aa,bb),(cc,dd));").unwrap();
        let g = PhyloTree::from_newick("(((aa,bb),cc),dd);").unwrap();
        assert_eq!(tree_distance(&t, &g).unwrap(), 3.0);
    }

    #[test]
    fn tree_distance_leaf_mismatch() {
        let t = PhyloTree::from_newick("((aa,bb),(cc,dd));").unwrap();
        let g = PhyloTree::from_newick("((aa,bb),(cc,ee));").unwrap();
        match tree_distance(&t, &g).unwrap_err() {
            PhyloError::LeafSetMismatch { missing } => {
                assert_eq!(missing, vec!["dd".to_string(), "ee".to_string()]);
            }
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn newick_parse_basics() {
        let tree = PhyloTree::from_newick("((a,b),(c,d));").unwrap();
        assert_eq!(tree.leaf_count(), 4);
        assert_eq!(tree.leaves(), &langs(&["a", "b", "c", "d"])[..]);
    }

    #[test]
    fn newick_parse_rejects_malformed() {
        assert!(matches!(
            PhyloTree::from_newick("((a,b),(c,d);"),
            Err(NewickError::Unbalanced(_))
        ));
        assert!(matches!(
            PhyloTree::from_newick("((a,b),(a,d));"),
            Err(NewickError::DuplicateLeaf(_))
        ));
        assert!(matches!(
            PhyloTree::from_newick("((a,b,c),d);"),
            Err(NewickError::NonBinary(_, 3))
        ));
        assert!(matches!(
            PhyloTree::from_newick("((a,b),(c,d):-1);"),
            Err(NewickError::NegativeLength(_))
        ));
        assert!(matches!(PhyloTree::from_newick(""), Err(NewickError::Empty)));
    }

    #[test]
    fn newick_round_trip_preserves_topology() {
        let text = "((aa:1,bb:1):0.5,(cc:0.2,dd:0.2):1.3);";
        let tree = PhyloTree::from_newick(text).unwrap();
        let rt = PhyloTree::from_newick(&tree.to_newick()).unwrap();
        for i in 0..tree.leaf_count() {
            for j in (i + 1)..tree.leaf_count() {
                let (a, b) = (&tree.leaves()[i], &tree.leaves()[j]);
                assert_eq!(
                    tree.leaf_path_edges(a, b).unwrap(),
                    rt.leaf_path_edges(a, b).unwrap()
                );
            }
        }
    }

    #[test]
    fn random_baseline_deterministic() {
        let gold = PhyloTree::from_newick("((aa,bb),(cc,dd));").unwrap();
        let languages = langs(&["aa", "bb", "cc", "dd"]);
        let b1 = random_baseline(&languages, &gold, 50, 0.3, 0.8, 7).unwrap();
        let b2 = random_baseline(&languages, &gold, 50, 0.3, 0.8, 7).unwrap();
        assert_eq!(b1.mean.to_bits(), b2.mean.to_bits());
        assert_eq!(b1.std.to_bits(), b2.std.to_bits());
        let b3 = random_baseline(&languages, &gold, 50, 0.3, 0.8, 8).unwrap();
        assert_ne!(b1.mean.to_bits(), b3.mean.to_bits());
    }

    #[test]
    fn random_baseline_single_iteration_matches_manual_run() {
        let gold = PhyloTree::from_newick("((aa,bb),(cc,dd));").unwrap();
        let languages = langs(&["aa", "bb", "cc", "dd"]);
        let stats = random_baseline(&languages, &gold, 1, 0.3, 0.8, 11).unwrap();

        // replay the draw by hand
        let mut rng = iteration_rng(11, 0);
        let dist = Uniform::new(0.3, 0.8);
        let l = 4;
        let mut values = vec![0.0; l * l];
        for i in 0..l {
            values[i * l + i] = 1.0;
            for j in (i + 1)..l {
                let v = dist.sample(&mut rng);
                values[i * l + j] = v;
                values[j * l + i] = v;
            }
        }
        let m = LanguageSimilarityMatrix {
            languages,
            values,
            degenerate_rows: 0,
        };
        let manual = tree_distance(&ward_cluster(&m).unwrap(), &gold).unwrap();
        assert_eq!(stats.mean.to_bits(), manual.to_bits());
    }

    #[test]
    fn random_baseline_invalid_range() {
        let gold = PhyloTree::from_newick("(aa,bb);").unwrap();
        let languages = langs(&["aa", "bb"]);
        assert!(matches!(
            random_baseline(&languages, &gold, 1, 0.8, 0.3, 0),
            Err(PhyloError::InvalidRange { .. })
        ));
    }

    #[test]
    fn permutation_baseline_two_leaves_equals_model() {
        // with 2 leaves the upper triangle has one entry, so every
        // permutation is the identity
        let m = matrix(&["aa", "bb"], vec![1.0, 0.4, 0.4, 1.0]);
        let gold = ward_cluster(&m).unwrap();
        let model_distance = tree_distance(&ward_cluster(&m).unwrap(), &gold).unwrap();
        let stats = permutation_baseline(&m, &gold, 5, 3).unwrap();
        assert_eq!(stats.mean, model_distance);
        assert_eq!(stats.std, 0.0);
    }

    #[test]
    fn permutation_invariant_when_entries_equal() {
        let mut values = vec![0.5; 16];
        for i in 0..4 {
            values[i * 4 + i] = 1.0;
        }
        let m = matrix(&["aa", "bb", "cc", "dd"], values);
        let gold = ward_cluster(&m).unwrap();
        let stats = permutation_baseline(&m, &gold, 20, 9).unwrap();
        let model = tree_distance(&ward_cluster(&m).unwrap(), &gold).unwrap();
        assert_eq!(stats.mean, model);
        assert_eq!(stats.std, 0.0);
    }

    #[test]
    fn score_tree_percentages() {
        let gold = PhyloTree::from_newick("((aa,bb),(cc,dd));").unwrap();
        let baseline = BaselineStats {
            kind: BaselineKind::Random,
            iterations: 1,
            seed: 0,
            mean: 10.0,
            std: 0.0,
        };
        let score = score_tree(&gold, &gold, baseline.clone()).unwrap();
        assert_eq!(score.model_distance, 0.0);
        assert_eq!(score.quality_change_pct, 100.0);

        // model at 0.466x the baseline scores +53.4, at 1.389x scores -38.9
        for (factor, expected) in [(0.466f64, 53.4f64), (1.389, -38.9)] {
            let pct = (10.0 - factor * 10.0) / 10.0 * 100.0;
            assert!((pct - expected).abs() < 1e-9);
        }

        let bad = BaselineStats {
            mean: 0.0,
            ..baseline
        };
        assert!(matches!(
            score_tree(&gold, &gold, bad),
            Err(PhyloError::NonPositiveBaseline(_))
        ));
    }

    #[test]
    fn bundled_gold_trees_parse() {
        let g17 = PhyloTree::from_newick(crate::bundled::GOLD_17_SENTENCES_NWK).unwrap();
        assert_eq!(g17.leaf_count(), 17);
        let expected: std::collections::BTreeSet<&str> = [
            "bg", "cs", "da", "nl", "en", "fr", "de", "it", "lv", "lt", "pl", "pt", "ro",
            "sk", "sl", "es", "sv",
        ]
        .into_iter()
        .collect();
        let got: std::collections::BTreeSet<&str> =
            g17.leaves().iter().map(|l| l.as_str()).collect();
        assert_eq!(got, expected);

        let g20 = PhyloTree::from_newick(crate::bundled::GOLD_20_WORDS_NWK).unwrap();
        assert_eq!(g20.leaf_count(), 20);
    }
}
