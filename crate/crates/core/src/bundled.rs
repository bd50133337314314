//! Data shipped with the crate: concept lists, gold trees, and a sample
//! cluster config. The CLI resolves these by name before trying the
//! filesystem.

/// 205-entry English core-vocabulary concept list.
pub const SWADESH_205: &str = include_str!("../data/swadesh_205.txt");

/// 180-entry English semantic-concept stimulus list.
pub const PEREIRA_180: &str = include_str!("../data/pereira_180.txt");

/// Reference tree over the 17 languages of the sentence experiments.
pub const GOLD_17_SENTENCES_NWK: &str = include_str!("../data/gold_17_sentences.nwk");

/// Reference tree over 20 Indo-European languages for word experiments.
pub const GOLD_20_WORDS_NWK: &str = include_str!("../data/gold_20_words.nwk");

/// Example cluster partition: (es, pt), (de, nl), (ru, uk).
pub const SAMPLE_CLUSTERS_JSON: &str = include_str!("../data/sample_clusters.json");

/// Bundled concept list by name, or None for unknown names.
pub fn concept_list(name: &str) -> Option<&'static str> {
    match name {
        "swadesh" | "swadesh_205" => Some(SWADESH_205),
        "pereira" | "pereira_180" => Some(PEREIRA_180),
        _ => None,
    }
}

/// Bundled gold tree by name.
pub fn gold_tree(name: &str) -> Option<&'static str> {
    match name {
        "gold_17_sentences" | "gold17" => Some(GOLD_17_SENTENCES_NWK),
        "gold_20_words" | "gold20" => Some(GOLD_20_WORDS_NWK),
        _ => None,
    }
}

/// Bundled cluster config by name.
pub fn cluster_config(name: &str) -> Option<&'static str> {
    match name {
        "sample" | "sample_clusters" => Some(SAMPLE_CLUSTERS_JSON),
        _ => None,
    }
}
