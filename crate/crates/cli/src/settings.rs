//! Engine options from flags and an optional TOML file, resolved into the
//! settings that drive a run and its config fingerprint.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, ValueEnum};
use mbr_ot::sent_utility::{AdapterClient, AdapterConfig, Transport};
use mbr_ot::{DocUtilityConfig, EmbeddingTable, EntropicParams, Formulation, Language, SentenceUtility, WeightScheme};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::failure::{Failure, ResultExt};

pub const ADAPTER_URL_ENV: &str = "MBR_OT_ADAPTER_URL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UtilityKind {
    ExactMatch,
    TokenF1,
    Bleu,
    Chrf,
    Embedding,
    Adapter,
}

/// Options shared by every subcommand. Each one may also come from the
/// `--config` TOML file (same names, snake_case); flags win.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineOptions {
    /// Transport formulation: la, wd or ewd.
    #[arg(long)]
    pub formulation: Option<Formulation>,

    /// Segment weights: uniform or length.
    #[arg(long)]
    pub weights: Option<WeightScheme>,

    /// Entropic regularization strength (ewd only).
    #[arg(long)]
    pub epsilon: Option<f64>,

    /// Sentence utility.
    #[arg(long, value_enum)]
    pub utility: Option<UtilityKind>,

    /// Language tag used for segmentation and tokenization.
    #[arg(long)]
    pub language: Option<Language>,

    /// JSONL embedding table for `--utility embedding`.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,

    /// Base URL of an HTTP metric adapter.
    #[arg(long, env = ADAPTER_URL_ENV)]
    pub adapter_url: Option<String>,

    /// Command line of a stdio metric adapter, split on whitespace.
    #[arg(long, conflicts_with = "adapter_url")]
    pub adapter_cmd: Option<String>,

    /// Metric name sent with every adapter request.
    #[arg(long)]
    pub adapter_metric: Option<String>,

    #[arg(long)]
    pub adapter_timeout_ms: Option<u64>,

    #[arg(long)]
    pub adapter_retries: Option<u32>,

    /// Declare the adapter metric symmetric, enabling the half-matrix path.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", require_equals = true)]
    pub adapter_symmetric: Option<bool>,

    /// Report the plain transport cost for ewd, without the KL term.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", require_equals = true)]
    pub exclude_kl: Option<bool>,

    #[arg(long)]
    pub sinkhorn_max_iter: Option<usize>,

    #[arg(long)]
    pub sinkhorn_tol: Option<f64>,

    /// Worker threads; 0 uses all cores. Does not affect results.
    #[arg(long)]
    pub parallelism: Option<usize>,

    /// Reserved. The engine has no stochastic component.
    #[arg(long)]
    pub seed: Option<u64>,
}

macro_rules! prefer {
    ($flags:ident, $file:ident; $($field:ident),* $(,)?) => {
        EngineOptions { $($field: $flags.$field.or($file.$field)),* }
    };
}

impl EngineOptions {
    /// Reads a TOML options file.
    pub fn from_toml_file(path: &Path) -> Result<EngineOptions, Failure> {
        let text = std::fs::read_to_string(path).or_config(format!("reading config {}", path.display()))?;
        toml::from_str(&text).or_config(format!("parsing config {}", path.display()))
    }

    /// Field-wise merge; values set in `self` take precedence.
    pub fn prefer_over(self, file: EngineOptions) -> EngineOptions {
        prefer!(self, file;
            formulation, weights, epsilon, utility, language, embeddings,
            adapter_url, adapter_cmd, adapter_metric, adapter_timeout_ms,
            adapter_retries, adapter_symmetric, exclude_kl, sinkhorn_max_iter,
            sinkhorn_tol, parallelism, seed,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdapterSettings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<Vec<String>>,
    pub metric: String,
    pub timeout_ms: u64,
    pub retries: u32,
    pub symmetric: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SinkhornSettings {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub tolerance: f64,
    pub include_kl_in_utility: bool,
}

/// Fully resolved, result-affecting settings. Serialized canonically for
/// the config fingerprint; parallelism is deliberately absent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub algorithm: String,
    pub formulation: Formulation,
    pub weights: WeightScheme,
    pub utility: UtilityKind,
    pub language: Language,
    /// Whole-document scoring without segmentation or transport.
    pub baseline: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sinkhorn: Option<SinkhornSettings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adapter: Option<AdapterSettings>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Everything a command needs to score documents.
#[derive(Debug, Clone)]
pub struct Engine {
    pub settings: Settings,
    pub config: DocUtilityConfig,
    pub fingerprint: String,
    pub parallelism: usize,
}

impl Settings {
    pub fn resolve(opts: &EngineOptions, baseline: bool) -> Result<Settings, Failure> {
        let formulation = opts.formulation.unwrap_or(Formulation::Wd);
        let weights = opts.weights.unwrap_or_default();
        let utility = opts.utility.unwrap_or(UtilityKind::TokenF1);

        let sinkhorn = (formulation == Formulation::Ewd && !baseline).then(|| {
            let defaults = EntropicParams::default();
            SinkhornSettings {
                epsilon: opts.epsilon.unwrap_or(defaults.epsilon),
                max_iterations: opts.sinkhorn_max_iter.unwrap_or(defaults.max_iterations),
                tolerance: opts.sinkhorn_tol.unwrap_or(defaults.tolerance),
                include_kl_in_utility: !opts.exclude_kl.unwrap_or(false),
            }
        });

        let embeddings = match (utility, &opts.embeddings) {
            (UtilityKind::Embedding, Some(path)) => Some(path.clone()),
            (UtilityKind::Embedding, None) => {
                return Err(Failure::config("--utility embedding requires --embeddings"));
            }
            _ => None,
        };

        let adapter = if utility == UtilityKind::Adapter {
            let command = opts
                .adapter_cmd
                .as_deref()
                .map(|c| c.split_whitespace().map(str::to_owned).collect::<Vec<_>>());
            if command.as_ref().is_some_and(Vec::is_empty) {
                return Err(Failure::config("--adapter-cmd is empty"));
            }
            // A command given on the command line beats a URL from the
            // environment or the config file.
            let url = if command.is_some() { None } else { opts.adapter_url.clone() };
            if url.is_none() && command.is_none() {
                return Err(Failure::config(format!(
                    "--utility adapter requires --adapter-url, {ADAPTER_URL_ENV} or --adapter-cmd"
                )));
            }
            Some(AdapterSettings {
                url,
                command,
                metric: opts.adapter_metric.clone().unwrap_or_else(|| "default".to_owned()),
                timeout_ms: opts.adapter_timeout_ms.unwrap_or(30_000),
                retries: opts.adapter_retries.unwrap_or(2),
                symmetric: opts.adapter_symmetric.unwrap_or(false),
            })
        } else {
            None
        };

        let algorithm = if baseline {
            "MBR".to_owned()
        } else {
            DocUtilityConfig::new(formulation, weights, SentenceUtility::ExactMatch).algorithm_name()
        };

        Ok(Settings {
            algorithm,
            formulation,
            weights,
            utility,
            language: opts.language.unwrap_or_default(),
            baseline,
            sinkhorn,
            embeddings,
            adapter,
            seed: opts.seed,
        })
    }

    /// Loads embedding tables or connects adapters and assembles the
    /// document-utility configuration.
    pub fn build(self, parallelism: usize) -> Result<Engine, Failure> {
        let mut hasher = Sha256::new();
        hasher.update(env!("CARGO_PKG_VERSION").as_bytes());
        hasher.update(serde_json::to_vec(&self).expect("settings serialize"));

        let sent_utility = match self.utility {
            UtilityKind::ExactMatch => SentenceUtility::ExactMatch,
            UtilityKind::TokenF1 => SentenceUtility::token_f1(self.language),
            UtilityKind::Bleu => SentenceUtility::sentence_bleu(self.language),
            UtilityKind::Chrf => SentenceUtility::chrf(),
            UtilityKind::Embedding => {
                let path = self.embeddings.as_ref().expect("resolved");
                let bytes = std::fs::read(path).or_config(format!("reading embeddings {}", path.display()))?;
                // the table contents, not just its path, decide the scores
                hasher.update(&bytes);
                let table = EmbeddingTable::from_jsonl(BufReader::new(bytes.as_slice()))?;
                SentenceUtility::EmbeddingCosine(Arc::new(table))
            }
            UtilityKind::Adapter => {
                let a = self.adapter.as_ref().expect("resolved");
                let transport = match (&a.url, &a.command) {
                    (_, Some(command)) => Transport::Stdio {
                        command: command.clone(),
                    },
                    (Some(url), None) => Transport::Http { base_url: url.clone() },
                    (None, None) => unreachable!("resolve requires one transport"),
                };
                let client = AdapterClient::connect(AdapterConfig {
                    transport,
                    metric: a.metric.clone(),
                    timeout: Duration::from_millis(a.timeout_ms),
                    retries: a.retries,
                    symmetric: a.symmetric,
                })?;
                SentenceUtility::ExternalAdapter(Arc::new(client))
            }
        };

        let mut config = DocUtilityConfig::new(self.formulation, self.weights, sent_utility);
        if let Some(s) = &self.sinkhorn {
            config.entropic = Some(EntropicParams {
                epsilon: s.epsilon,
                max_iterations: s.max_iterations,
                tolerance: s.tolerance,
            });
            config.include_kl_in_utility = s.include_kl_in_utility;
        }
        config.validate()?;

        Ok(Engine {
            settings: self,
            config,
            fingerprint: hex::encode(hasher.finalize()),
            parallelism,
        })
    }
}

impl Engine {
    /// Resolves flags over the config file and builds the engine.
    pub fn from_options(flags: &EngineOptions, config_file: Option<&Path>, baseline: bool) -> Result<Engine, Failure> {
        let file = match config_file {
            Some(path) => EngineOptions::from_toml_file(path)?,
            None => EngineOptions::default(),
        };
        let opts = flags.clone().prefer_over(file);
        let parallelism = opts.parallelism.unwrap_or(0);
        Settings::resolve(&opts, baseline)?.build(parallelism)
    }

    pub fn thread_pool(&self) -> Result<rayon::ThreadPool, Failure> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.parallelism)
            .build()
            .or_config("building worker pool")
    }
}

/// Opens an input file, reporting a missing path as a configuration error.
pub fn open_input(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .or_config(format!("opening {}", path.display()))
}
