//! Quick probe of planted-tree recovery rates across seeds.

use std::time::Instant;

use semdrift_core::align::build_concept_set;
use semdrift_core::phylo::{tree_distance, ward_cluster};
use semdrift_core::rsa::{build_language_matrix, RsaOptions};
use semdrift_core::synth::{planted_workspace, PlantedConfig};

fn main() {
    let cfg = PlantedConfig::default_eight_leaves();
    let trials = 100;
    let start = Instant::now();
    let mut recovered = 0;
    let mut distances = Vec::new();
    for seed in 0..trials {
        let ws = planted_workspace(&cfg, seed).unwrap();
        let anchor = &ws.spaces[0];
        let targets: Vec<&semdrift_core::EmbeddingSpace> = ws.spaces[1..].iter().collect();
        let set = build_concept_set(&ws.concepts, anchor, &targets).unwrap();
        let matrix = build_language_matrix(&set, &RsaOptions::default()).unwrap();
        let tree = ward_cluster(&matrix).unwrap();
        let d = tree_distance(&tree, &ws.tree).unwrap();
        if d == 0.0 {
            recovered += 1;
        } else {
            distances.push((seed, d));
        }
    }
    println!(
        "recovered {recovered}/{trials} in {:?}; failures: {distances:?}",
        start.elapsed()
    );
}
