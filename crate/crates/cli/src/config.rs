//! Run configuration: JSON config file, flag overrides (flags win), and the
//! provenance block embedded in every output artifact.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const DEFAULT_VOCAB_CAP: usize = semdrift_core::embedding::DEFAULT_VOCAB_CAP;
pub const DEFAULT_BASELINE_ITERATIONS: usize = 50_000;
pub const DEFAULT_BASELINE_LO: f64 = 0.3;
pub const DEFAULT_BASELINE_HI: f64 = 0.8;
pub const DEFAULT_FUZZY_CUTOFF: f64 = semdrift_core::quality::DEFAULT_FUZZY_CUTOFF;
pub const DEFAULT_NEIGHBORS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum WardInputOpt {
    /// Cluster languages by their similarity-matrix rows (default).
    Rows,
    /// Use 1 - similarity directly as the pairwise distance.
    OneMinusSimilarity,
}

impl From<WardInputOpt> for semdrift_core::phylo::WardInput {
    fn from(opt: WardInputOpt) -> Self {
        match opt {
            WardInputOpt::Rows => semdrift_core::phylo::WardInput::MatrixRows,
            WardInputOpt::OneMinusSimilarity => {
                semdrift_core::phylo::WardInput::OneMinusSimilarity
            }
        }
    }
}

/// One dictionary reference: `source` and `target` language codes plus a
/// TSV path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DictRef {
    pub source: String,
    pub target: String,
    pub path: String,
}

impl DictRef {
    /// Parse the `--dict src:tgt:path` flag form.
    pub fn parse_flag(value: &str) -> Result<Self, CliError> {
        let mut parts = value.splitn(3, ':');
        match (parts.next(), parts.next(), parts.next()) {
            (Some(source), Some(target), Some(path))
                if !source.is_empty() && !target.is_empty() && !path.is_empty() =>
            {
                Ok(DictRef {
                    source: source.to_string(),
                    target: target.to_string(),
                    path: path.to_string(),
                })
            }
            _ => Err(CliError::Validation(format!(
                "--dict expects source:target:path, got {value:?}"
            ))),
        }
    }
}

/// The JSON config file. Every field is optional; command-line flags
/// override whatever the file sets. Relative paths in the file resolve
/// against the file's directory.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub manifest: Option<String>,
    pub concepts: Option<String>,
    pub anchor: Option<String>,
    pub vocab_cap: Option<usize>,
    pub normalize: Option<bool>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub baseline_iterations: Option<usize>,
    pub baseline_lo: Option<f64>,
    pub baseline_hi: Option<f64>,
    pub fuzzy_cutoff: Option<f64>,
    pub clusters: Option<String>,
    pub gold_tree: Option<String>,
    pub matrix: Option<String>,
    pub out_dir: Option<String>,
    pub formats: Option<Vec<Format>>,
    pub exclude_diagonal: Option<bool>,
    pub ward_input: Option<WardInputOpt>,
    pub dictionaries: Option<Vec<DictRef>>,
    pub focus: Option<Vec<String>>,
    pub neighbors: Option<usize>,
    pub languages: Option<Vec<String>>,
}

impl FileConfig {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut config: FileConfig = serde_json::from_str(&text).map_err(|e| {
            CliError::Validation(format!("invalid config {}: {e}", path.display()))
        })?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        config.rebase(base);
        Ok(config)
    }

    /// Resolve the file's relative paths against its own directory.
    /// Bundled-resource names (concepts, gold tree, clusters) are left
    /// alone; they never name existing files next to the config.
    fn rebase(&mut self, base: &Path) {
        let rebase_path = |value: &mut Option<String>| {
            if let Some(v) = value {
                let p = Path::new(v);
                if p.is_relative() {
                    *v = base.join(p).to_string_lossy().into_owned();
                }
            }
        };
        rebase_path(&mut self.manifest);
        rebase_path(&mut self.matrix);
        rebase_path(&mut self.out_dir);
        for field in [&mut self.concepts, &mut self.gold_tree, &mut self.clusters] {
            let is_bundled = match field.as_deref() {
                Some(name) => {
                    semdrift_core::bundled::concept_list(name).is_some()
                        || semdrift_core::bundled::gold_tree(name).is_some()
                        || semdrift_core::bundled::cluster_config(name).is_some()
                }
                None => false,
            };
            if !is_bundled {
                rebase_path(field);
            }
        }
        if let Some(dicts) = &mut self.dictionaries {
            for d in dicts {
                let p = Path::new(&d.path);
                if p.is_relative() {
                    d.path = base.join(p).to_string_lossy().into_owned();
                }
            }
        }
    }
}

/// The fully resolved configuration a command runs with. Serialized (minus
/// the thread count) it defines the config hash in the provenance block.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub manifest: String,
    pub concepts: Option<String>,
    pub anchor: Option<String>,
    pub vocab_cap: usize,
    pub normalize: bool,
    pub seed: u64,
    pub baseline_iterations: usize,
    pub baseline_lo: f64,
    pub baseline_hi: f64,
    pub fuzzy_cutoff: f64,
    pub clusters: Option<String>,
    pub gold_tree: Option<String>,
    pub matrix: Option<String>,
    pub out_dir: String,
    pub formats: Vec<Format>,
    pub exclude_diagonal: bool,
    pub ward_input: WardInputOpt,
    pub dictionaries: Vec<DictRef>,
    pub focus: Vec<String>,
    pub neighbors: usize,
    pub languages: Vec<String>,
    #[serde(skip)]
    pub threads: Option<usize>,
}

impl RunConfig {
    /// Merge a config file (lowest precedence), CLI overrides, and
    /// defaults.
    pub fn resolve(file: FileConfig, cli: FileConfig) -> Result<Self, CliError> {
        let manifest = cli
            .manifest
            .or(file.manifest)
            .ok_or_else(|| CliError::Validation("--manifest is required".to_string()))?;
        let config = RunConfig {
            manifest,
            concepts: cli.concepts.or(file.concepts),
            anchor: cli.anchor.or(file.anchor),
            vocab_cap: cli.vocab_cap.or(file.vocab_cap).unwrap_or(DEFAULT_VOCAB_CAP),
            normalize: cli.normalize.or(file.normalize).unwrap_or(true),
            seed: cli.seed.or(file.seed).unwrap_or(0),
            baseline_iterations: cli
                .baseline_iterations
                .or(file.baseline_iterations)
                .unwrap_or(DEFAULT_BASELINE_ITERATIONS),
            baseline_lo: cli.baseline_lo.or(file.baseline_lo).unwrap_or(DEFAULT_BASELINE_LO),
            baseline_hi: cli.baseline_hi.or(file.baseline_hi).unwrap_or(DEFAULT_BASELINE_HI),
            fuzzy_cutoff: cli
                .fuzzy_cutoff
                .or(file.fuzzy_cutoff)
                .unwrap_or(DEFAULT_FUZZY_CUTOFF),
            clusters: cli.clusters.or(file.clusters),
            gold_tree: cli.gold_tree.or(file.gold_tree),
            matrix: cli.matrix.or(file.matrix),
            out_dir: cli.out_dir.or(file.out_dir).unwrap_or_else(|| "out".to_string()),
            formats: cli
                .formats
                .or(file.formats)
                .unwrap_or_else(|| vec![Format::Csv, Format::Json]),
            exclude_diagonal: cli
                .exclude_diagonal
                .or(file.exclude_diagonal)
                .unwrap_or(false),
            ward_input: cli.ward_input.or(file.ward_input).unwrap_or(WardInputOpt::Rows),
            dictionaries: cli.dictionaries.or(file.dictionaries).unwrap_or_default(),
            focus: cli.focus.or(file.focus).unwrap_or_default(),
            neighbors: cli.neighbors.or(file.neighbors).unwrap_or(DEFAULT_NEIGHBORS),
            languages: cli.languages.or(file.languages).unwrap_or_default(),
            threads: cli.threads.or(file.threads),
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        let must_exist = |label: &str, path: &str| -> Result<(), CliError> {
            if Path::new(path).exists() {
                Ok(())
            } else {
                Err(CliError::Validation(format!(
                    "{label} path {path:?} does not exist"
                )))
            }
        };
        must_exist("manifest", &self.manifest)?;
        if let Some(concepts) = &self.concepts {
            if semdrift_core::bundled::concept_list(concepts).is_none() {
                must_exist("concept list", concepts)?;
            }
        }
        if let Some(gold) = &self.gold_tree {
            if semdrift_core::bundled::gold_tree(gold).is_none() {
                must_exist("gold tree", gold)?;
            }
        }
        if let Some(clusters) = &self.clusters {
            if semdrift_core::bundled::cluster_config(clusters).is_none() {
                must_exist("cluster config", clusters)?;
            }
        }
        if let Some(matrix) = &self.matrix {
            must_exist("matrix", matrix)?;
        }
        for d in &self.dictionaries {
            must_exist("dictionary", &d.path)?;
        }
        if self.vocab_cap == 0 {
            return Err(CliError::Validation("vocab cap must be positive".to_string()));
        }
        if !(self.baseline_lo < self.baseline_hi) {
            return Err(CliError::Validation(format!(
                "baseline range [{}, {}) is empty",
                self.baseline_lo, self.baseline_hi
            )));
        }
        if self.formats.is_empty() {
            return Err(CliError::Validation("at least one output format".to_string()));
        }
        Ok(())
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(&self.out_dir)
    }

    pub fn wants(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }

    /// SHA-256 over the serialized resolved config. The thread count is
    /// excluded: runs with different parallelism must stay byte-identical.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical))
    }

    pub fn provenance(&self) -> Provenance {
        Provenance {
            tool: "semdrift".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_sha256: self.hash(),
            seed: self.seed,
        }
    }
}

/// Identification block embedded in every output file.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub config_sha256: String,
    pub seed: u64,
}

impl Provenance {
    pub fn csv_header(&self) -> String {
        format!(
            "# tool: {} {}\n# config-sha256: {}\n# seed: {}\n",
            self.tool, self.version, self.config_sha256, self.seed
        )
    }
}
