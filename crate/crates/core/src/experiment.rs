//! Ensemble sweeps: sample machines, evaluate `(P(B), P(word))` at the
//! stationary state, write one CSV per ensemble plus a JSON manifest, and bin
//! the results into per-class envelopes.
//!
//! CSV columns are `class,index,p_b,p_word,converged,iterations` followed by
//! the machine parameters in [`Machine::parameter_names`] order. Floats are
//! written with 17 significant digits. Machines whose stationary solve did not
//! converge are left out of the CSV and listed in the manifest.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{Machine, Symbol, Word};
use crate::sampler::{EnsembleSpec, MachineClass};
use crate::stationary::{stationary, SolverSettings};
use crate::trajectory::RNG_ALGORITHM;
use crate::wordprob::word_prob;

/// Environment variable that, when set to an integer, replaces the master seed
/// of every ensemble. The override is recorded in the manifest.
pub const SEED_ENV: &str = "HQMM_MASTER_SEED";

/// Bins with fewer samples than this are flagged in envelope reports.
pub const LOW_CONFIDENCE_COUNT: usize = 50;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterRecord {
    pub machine_class: String,
    pub machine_index: usize,
    pub parameters: Vec<f64>,
    pub p_b: Option<f64>,
    pub p_word: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
}

fn default_word() -> Word {
    "BAAAB".parse().expect("literal word")
}
fn default_tol() -> f64 {
    SolverSettings::default().tol
}
fn default_max_iter() -> usize {
    SolverSettings::default().max_iter
}
fn default_bins() -> usize {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub ensembles: Vec<EnsembleSpec>,
    #[serde(default = "default_word")]
    pub word: Word,
    #[serde(default = "default_tol")]
    pub tolerance: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    pub output_path: PathBuf,
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Worker threads; output does not depend on it. Defaults to all cores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ensembles.is_empty() {
            return Err(Error::Config("at least one ensemble is required".into()));
        }
        for e in &self.ensembles {
            e.validate()?;
        }
        if self.bins < 2 {
            return Err(Error::Config("bins must be at least 2".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(())
    }

    pub fn settings(&self) -> SolverSettings {
        SolverSettings {
            tol: self.tolerance,
            max_iter: self.max_iter,
        }
    }

    /// HMMs with 2, 3 and 4 hidden states.
    pub fn hmm_state_comparison(output_path: impl Into<PathBuf>, n_machines: usize, master_seed: u64) -> Self {
        let ensembles = (2..=4)
            .map(|n| EnsembleSpec {
                machine_class: MachineClass::Hmm,
                n_states: Some(n),
                n_machines,
                master_seed,
            })
            .collect();
        Self::with_ensembles(ensembles, output_path)
    }

    /// Markov models, two-state HMMs and restricted HQMMs.
    pub fn class_comparison(output_path: impl Into<PathBuf>, n_machines: usize, master_seed: u64) -> Self {
        let spec = |machine_class, n_states| EnsembleSpec {
            machine_class,
            n_states,
            n_machines,
            master_seed,
        };
        let ensembles = vec![
            spec(MachineClass::Mm, None),
            spec(MachineClass::Hmm, Some(2)),
            spec(MachineClass::HqmmRestricted, None),
        ];
        Self::with_ensembles(ensembles, output_path)
    }

    fn with_ensembles(ensembles: Vec<EnsembleSpec>, output_path: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            ensembles,
            word: default_word(),
            tolerance: default_tol(),
            max_iter: default_max_iter(),
            output_path: output_path.into(),
            bins: default_bins(),
            workers: None,
        }
    }
}

/// Stationary state plus `P(B)` and `P(word)` for one machine. Index is 0;
/// [`run_scatter`] fills in the ensemble position.
pub fn evaluate_machine(machine: &Machine, word: &Word, settings: &SolverSettings) -> Result<ScatterRecord> {
    let report = stationary(machine, settings);
    let (p_b, p_word) = if report.converged {
        (
            Some(word_prob(machine, &report.state, &Word::single(Symbol::B))?),
            Some(word_prob(machine, &report.state, word)?),
        )
    } else {
        (None, None)
    };
    Ok(ScatterRecord {
        machine_class: machine.class_tag(),
        machine_index: 0,
        parameters: machine.parameters(),
        p_b,
        p_word,
        converged: report.converged,
        iterations: report.iterations,
    })
}

#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub spec: EnsembleSpec,
    pub class_tag: String,
    pub csv_path: PathBuf,
    /// Every sampled machine, converged or not, ordered by index.
    pub records: Vec<ScatterRecord>,
}

impl EnsembleResult {
    pub fn converged(&self) -> impl Iterator<Item = &ScatterRecord> {
        self.records.iter().filter(|r| r.converged)
    }
}

#[derive(Debug, Clone)]
pub struct ScatterOutput {
    pub ensembles: Vec<EnsembleResult>,
    pub manifest_path: PathBuf,
}

impl ScatterOutput {
    pub fn all_records(&self) -> Vec<ScatterRecord> {
        self.ensembles.iter().flat_map(|e| e.records.iter().cloned()).collect()
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    software: SoftwareInfo,
    rng: &'static str,
    word: &'a Word,
    solver: SolverSettings,
    bins: usize,
    seed_override: Option<SeedOverride>,
    ensembles: Vec<ManifestEnsemble>,
}

#[derive(Serialize)]
struct SoftwareInfo {
    name: &'static str,
    version: &'static str,
}

#[derive(Serialize)]
struct SeedOverride {
    variable: &'static str,
    value: u64,
}

#[derive(Serialize)]
struct ManifestEnsemble {
    file: String,
    class: String,
    spec: EnsembleSpec,
    distribution: &'static str,
    n_converged: usize,
    n_excluded: usize,
    excluded_indices: Vec<usize>,
}

fn seed_override_from_env() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

/// Runs every ensemble in `config`, honoring the [`SEED_ENV`] override.
pub fn run_scatter(config: &ExperimentConfig) -> Result<ScatterOutput> {
    run_scatter_with_seed(config, seed_override_from_env()?)
}

/// [`run_scatter`] with an explicit master-seed override instead of the
/// environment.
pub fn run_scatter_with_seed(config: &ExperimentConfig, seed_override: Option<u64>) -> Result<ScatterOutput> {
    config.validate()?;
    let out = &config.output_path;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let probe = out.join(".write_probe");
    fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = config.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let settings = config.settings();

    let mut ensembles = Vec::with_capacity(config.ensembles.len());
    for (k, original) in config.ensembles.iter().enumerate() {
        let mut spec = original.clone();
        if let Some(seed) = seed_override {
            spec.master_seed = seed;
        }
        let class_tag = spec.class_tag();
        let records: Vec<ScatterRecord> = pool.install(|| {
            (0..spec.n_machines)
                .into_par_iter()
                .map(|i| {
                    let machine = spec.sample(i)?;
                    let mut rec = evaluate_machine(&machine, &config.word, &settings)?;
                    rec.machine_index = i;
                    Ok(rec)
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let csv_path = out.join(format!("{k:02}_{class_tag}.csv"));
        write_scatter_csv(&csv_path, &class_tag, &param_names(&spec)?, &records)?;
        ensembles.push(EnsembleResult {
            spec,
            class_tag,
            csv_path,
            records,
        });
    }

    let manifest = Manifest {
        software: SoftwareInfo {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
        },
        rng: RNG_ALGORITHM,
        word: &config.word,
        solver: settings,
        bins: config.bins,
        seed_override: seed_override.map(|value| SeedOverride {
            variable: SEED_ENV,
            value,
        }),
        ensembles: ensembles
            .iter()
            .map(|e| {
                let excluded: Vec<usize> = e
                    .records
                    .iter()
                    .filter(|r| !r.converged)
                    .map(|r| r.machine_index)
                    .collect();
                ManifestEnsemble {
                    file: e.csv_path.file_name().unwrap().to_string_lossy().into_owned(),
                    class: e.class_tag.clone(),
                    spec: e.spec.clone(),
                    distribution: e.spec.machine_class.distribution(),
                    n_converged: e.records.len() - excluded.len(),
                    n_excluded: excluded.len(),
                    excluded_indices: excluded,
                }
            })
            .collect(),
    };
    let manifest_path = out.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)? + "\n";
    fs::write(&manifest_path, text).map_err(|e| Error::io(&manifest_path, e))?;

    Ok(ScatterOutput {
        ensembles,
        manifest_path,
    })
}

fn param_names(spec: &EnsembleSpec) -> Result<Vec<String>> {
    Ok(spec.sample(0)?.parameter_names())
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

const FIXED_COLUMNS: [&str; 6] = ["class", "index", "p_b", "p_word", "converged", "iterations"];

pub fn write_scatter_csv(
    path: &Path,
    class_tag: &str,
    param_names: &[String],
    records: &[ScatterRecord],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("{}: {other:?}", path.display())),
    })?;
    let header: Vec<&str> = FIXED_COLUMNS
        .iter()
        .copied()
        .chain(param_names.iter().map(String::as_str))
        .collect();
    w.write_record(&header)?;
    for r in records.iter().filter(|r| r.converged) {
        let (Some(p_b), Some(p_word)) = (r.p_b, r.p_word) else {
            continue;
        };
        let mut row = vec![
            class_tag.to_string(),
            r.machine_index.to_string(),
            fmt_f64(p_b),
            fmt_f64(p_word),
            r.converged.to_string(),
            r.iterations.to_string(),
        ];
        row.extend(r.parameters.iter().map(|&x| fmt_f64(x)));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_scatter_csv(path: impl AsRef<Path>) -> Result<Vec<ScatterRecord>> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("{}: {other:?}", path.display())),
    })?;
    let header = rdr.headers()?.clone();
    if header.len() < FIXED_COLUMNS.len() || header.iter().zip(FIXED_COLUMNS).any(|(a, b)| a != b) {
        return Err(Error::Config(format!("{}: not a scatter CSV", path.display())));
    }
    let bad = |what: &str| Error::Config(format!("{}: bad {what}", path.display()));
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let num = |i: usize| row[i].parse::<f64>().map_err(|_| bad(FIXED_COLUMNS[i]));
        out.push(ScatterRecord {
            machine_class: row[0].to_string(),
            machine_index: row[1].parse().map_err(|_| bad("index"))?,
            p_b: Some(num(2)?),
            p_word: Some(num(3)?),
            converged: row[4].parse().map_err(|_| bad("converged"))?,
            iterations: row[5].parse().map_err(|_| bad("iterations"))?,
            parameters: (6..row.len())
                .map(|i| row[i].parse::<f64>().map_err(|_| bad("parameter")))
                .collect::<Result<_>>()?,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassBin {
    /// Largest `p_word` among records in the bin; `None` when empty.
    pub max: Option<f64>,
    pub count: usize,
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeBin {
    pub lower: f64,
    pub upper: f64,
    pub center: f64,
    pub classes: BTreeMap<String, ClassBin>,
}

/// Per-bin maximum of `p_word` over equal-width `p_b` bins on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub classes: Vec<String>,
    pub bins: Vec<EnvelopeBin>,
}

/// Bin `k` covers `[k/bins, (k+1)/bins)`; the last bin also includes 1.
pub fn bin_index(p_b: f64, bins: usize) -> usize {
    ((p_b * bins as f64).floor().max(0.0) as usize).min(bins - 1)
}

pub fn envelope(records: &[ScatterRecord], bins: usize) -> Result<EnvelopeReport> {
    if bins < 2 {
        return Err(Error::Contract("envelope needs at least 2 bins".into()));
    }
    let usable: Vec<(&str, f64, f64)> = records
        .iter()
        .filter(|r| r.converged)
        .filter_map(|r| Some((r.machine_class.as_str(), r.p_b?, r.p_word?)))
        .collect();
    if usable.is_empty() {
        return Err(Error::Contract("envelope needs at least one converged record".into()));
    }
    let mut classes: Vec<String> = Vec::new();
    for (c, _, _) in &usable {
        if !classes.iter().any(|x| x == c) {
            classes.push(c.to_string());
        }
    }
    let mut out: Vec<EnvelopeBin> = (0..bins)
        .map(|k| EnvelopeBin {
            lower: k as f64 / bins as f64,
            upper: (k + 1) as f64 / bins as f64,
            center: (k as f64 + 0.5) / bins as f64,
            classes: classes
                .iter()
                .map(|c| {
                    (
                        c.clone(),
                        ClassBin {
                            max: None,
                            count: 0,
                            low_confidence: true,
                        },
                    )
                })
                .collect(),
        })
        .collect();
    for (c, p_b, p_word) in usable {
        let cell = out[bin_index(p_b, bins)].classes.get_mut(c).expect("class registered");
        cell.count += 1;
        cell.max = Some(cell.max.map_or(p_word, |m| m.max(p_word)));
    }
    for b in &mut out {
        for cell in b.classes.values_mut() {
            cell.low_confidence = cell.count < LOW_CONFIDENCE_COUNT;
        }
    }
    Ok(EnvelopeReport { classes, bins: out })
}

impl EnvelopeReport {
    pub fn max(&self, class: &str, bin: usize) -> Option<f64> {
        self.bins.get(bin)?.classes.get(class)?.max
    }

    pub fn count(&self, class: &str, bin: usize) -> usize {
        self.bins
            .get(bin)
            .and_then(|b| b.classes.get(class))
            .map_or(0, |c| c.count)
    }

    /// Bins where `class` has samples and its maximum is strictly larger than
    /// the maximum of every class in `others`, each of which must also have
    /// samples there.
    pub fn strictly_dominant_bins(&self, class: &str, others: &[&str]) -> Vec<usize> {
        (0..self.bins.len())
            .filter(|&k| {
                let Some(top) = self.max(class, k) else {
                    return false;
                };
                others.iter().all(|o| self.max(o, k).is_some_and(|m| top > m))
            })
            .collect()
    }

    /// Largest amount by which `class` exceeds `reference` in any bin. A bin
    /// where `reference` is empty counts as a reference maximum of 0.
    pub fn max_excess(&self, class: &str, reference: &str) -> f64 {
        (0..self.bins.len())
            .filter_map(|k| Some(self.max(class, k)? - self.max(reference, k).unwrap_or(0.0)))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

impl fmt::Display for EnvelopeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:>8}", "p_b")?;
        for c in &self.classes {
            write!(f, " {:>24}", c)?;
        }
        writeln!(f)?;
        for b in &self.bins {
            write!(f, "{:>8.4}", b.center)?;
            for c in &self.classes {
                let cell = &b.classes[c];
                let flag = if cell.low_confidence { "*" } else { " " };
                match cell.max {
                    Some(m) => write!(f, " {:>14.6e} ({:>6}){flag}", m, cell.count)?,
                    None => write!(f, " {:>14} ({:>6}){flag}", "-", 0)?,
                }
            }
            writeln!(f)?;
        }
        if self.bins.iter().any(|b| b.classes.values().any(|c| c.low_confidence)) {
            write!(f, "* fewer than {LOW_CONFIDENCE_COUNT} samples")?;
        }
        Ok(())
    }
}
