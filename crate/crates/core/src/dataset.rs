//! Module × technique EXAM-score matrices: loading, writing, shuffling and
//! synthesis.
//!
//! The on-disk layout is long CSV, one observation per row:
//!
//! ```text
//! module_id,method,formula,exam
//! closure-42,sbfl,ochiai,0.003
//! ```
//!
//! Lines starting with `#` are comments.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::arm::{ensure_unique, ArmId, Method};
use crate::error::{Error, Result};
use crate::exam::ExamScore;
use crate::seed;

pub const CSV_HEADER: [&str; 4] = ["module_id", "method", "formula", "exam"];

/// What to do with a module that lacks a score for some arm.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MissingPolicy {
    /// Drop the module.
    #[default]
    Skip,
    /// Fill the gap with the worst EXAM score, 1.0.
    #[serde(alias = "worst-case")]
    Worst,
}

impl FromStr for MissingPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "skip" => Ok(MissingPolicy::Skip),
            "worst" | "worst-case" => Ok(MissingPolicy::Worst),
            other => Err(Error::config(format!("unknown missing-cell policy {other:?}"))),
        }
    }
}

/// A complete EXAM-score matrix: every module has a score for every arm.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    modules: Vec<String>,
    arms: Vec<ArmId>,
    /// Row-major, `scores[module][arm]`.
    scores: Vec<Vec<ExamScore>>,
}

impl Dataset {
    pub fn new(modules: Vec<String>, arms: Vec<ArmId>, scores: Vec<Vec<ExamScore>>) -> Result<Self> {
        if modules.is_empty() {
            return Err(Error::NoRecords);
        }
        if arms.is_empty() {
            return Err(Error::config("dataset has no arms"));
        }
        ensure_unique(&arms)?;
        for (i, m) in modules.iter().enumerate() {
            if modules[..i].contains(m) {
                return Err(Error::config(format!("duplicate module id {m:?}")));
            }
        }
        if scores.len() != modules.len() || scores.iter().any(|row| row.len() != arms.len()) {
            return Err(Error::config("score matrix does not match modules × arms"));
        }
        Ok(Self { modules, arms, scores })
    }

    pub fn modules(&self) -> &[String] {
        &self.modules
    }

    pub fn arms(&self) -> &[ArmId] {
        &self.arms
    }

    pub fn module_count(&self) -> usize {
        self.modules.len()
    }

    pub fn arm_index(&self, arm: &ArmId) -> Option<usize> {
        self.arms.iter().position(|a| a == arm)
    }

    pub fn score(&self, module: usize, arm: usize) -> ExamScore {
        self.scores[module][arm]
    }

    pub fn row(&self, module: usize) -> &[ExamScore] {
        &self.scores[module]
    }

    pub fn column(&self, arm: usize) -> Vec<ExamScore> {
        self.scores.iter().map(|row| row[arm]).collect()
    }

    /// Full-feedback reward map for one module.
    pub fn rewards(&self, module: usize) -> BTreeMap<ArmId, ExamScore> {
        self.arms.iter().cloned().zip(self.scores[module].iter().copied()).collect()
    }

    /// Projection onto a subset of arms, in the given order.
    pub fn restrict_arms(&self, arms: &[ArmId]) -> Result<Dataset> {
        ensure_unique(arms)?;
        let idx = arms
            .iter()
            .map(|a| self.arm_index(a).ok_or_else(|| Error::config(format!("arm {a} not in dataset"))))
            .collect::<Result<Vec<_>>>()?;
        let scores = self.scores.iter().map(|row| idx.iter().map(|&i| row[i]).collect()).collect();
        Dataset::new(self.modules.clone(), arms.to_vec(), scores)
    }

    /// Writes the long CSV layout accepted by [`load_dataset`].
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(CSV_HEADER).map_err(csv_io)?;
        for (module, row) in self.modules.iter().zip(&self.scores) {
            for (arm, score) in self.arms.iter().zip(row) {
                out.write_record([
                    module.as_str(),
                    arm.method().as_str(),
                    arm.formula(),
                    &score.value().to_string(),
                ])
                .map_err(csv_io)?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

fn csv_io(err: csv::Error) -> Error {
    match err.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Io(std::io::Error::other(format!("{other:?}"))),
    }
}

pub fn load_path(path: impl AsRef<Path>, missing: MissingPolicy) -> Result<Dataset> {
    load_dataset(File::open(path)?, missing)
}

/// Parses the long CSV layout and enforces a complete matrix.
pub fn load_dataset<R: Read>(source: R, missing: MissingPolicy) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(source);

    let mut modules: Vec<String> = Vec::new();
    let mut module_index: HashMap<String, usize> = HashMap::new();
    let mut arms: Vec<ArmId> = Vec::new();
    let mut cells: HashMap<(usize, usize), ExamScore> = HashMap::new();
    let mut saw_header = false;

    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::Io(io),
                other => Error::Parse { line, message: format!("{other:?}") },
            }
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let parse_err = |message: String| Error::Parse { line, message };

        if !saw_header {
            if record.iter().ne(CSV_HEADER) {
                return Err(parse_err(format!(
                    "expected header {:?}, found {:?}",
                    CSV_HEADER.join(","),
                    record.iter().collect::<Vec<_>>().join(",")
                )));
            }
            saw_header = true;
            continue;
        }

        if record.len() != 4 {
            return Err(parse_err(format!("expected 4 fields, found {}", record.len())));
        }
        let module = &record[0];
        if module.is_empty() {
            return Err(parse_err("empty module_id".into()));
        }
        let method: Method = record[1].parse().map_err(|e: Error| parse_err(e.to_string()))?;
        let arm = ArmId::new(method, &record[2]).map_err(|e| parse_err(e.to_string()))?;
        let value: f64 = record[3]
            .parse()
            .map_err(|_| parse_err(format!("exam {:?} is not a number", &record[3])))?;
        let score = ExamScore::new(value).map_err(|e| parse_err(e.to_string()))?;

        let m = *module_index.entry(module.to_owned()).or_insert_with(|| {
            modules.push(module.to_owned());
            modules.len() - 1
        });
        let a = match arms.iter().position(|x| x == &arm) {
            Some(a) => a,
            None => {
                arms.push(arm.clone());
                arms.len() - 1
            }
        };
        if cells.insert((m, a), score).is_some() {
            return Err(parse_err(format!("duplicate score for module {module:?} and arm {arm}")));
        }
    }

    if cells.is_empty() {
        return Err(Error::NoRecords);
    }

    let mut kept_modules = Vec::new();
    let mut scores = Vec::new();
    for (m, module) in modules.into_iter().enumerate() {
        let row: Option<Vec<ExamScore>> = (0..arms.len())
            .map(|a| match (cells.get(&(m, a)), missing) {
                (Some(s), _) => Some(*s),
                (None, MissingPolicy::Worst) => Some(ExamScore::WORST),
                (None, MissingPolicy::Skip) => None,
            })
            .collect();
        if let Some(row) = row {
            kept_modules.push(module);
            scores.push(row);
        }
    }
    Dataset::new(kept_modules, arms, scores)
}

/// A permutation of module indices and the seed that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ordering {
    permutation: Vec<usize>,
    seed: Option<u64>,
}

impl Ordering {
    pub fn identity(n: usize) -> Self {
        Self { permutation: (0..n).collect(), seed: None }
    }

    /// Wraps an explicit permutation, checking that it is one.
    pub fn from_permutation(permutation: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; permutation.len()];
        for &i in &permutation {
            match seen.get_mut(i) {
                Some(s) if !*s => *s = true,
                _ => return Err(Error::config("ordering is not a permutation")),
            }
        }
        Ok(Self { permutation, seed: None })
    }

    pub fn indices(&self) -> &[usize] {
        &self.permutation
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.permutation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permutation.is_empty()
    }
}

/// Uniformly random module order, reproducible from `seed`.
pub fn shuffle_modules(dataset: &Dataset, seed: u64) -> Ordering {
    let mut permutation: Vec<usize> = (0..dataset.module_count()).collect();
    permutation.shuffle(&mut seed::rng(seed));
    Ordering { permutation, seed: Some(seed) }
}

/// Score distribution of one synthetic arm: uniform on
/// `[mean - spread, mean + spread]`, clamped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthArm {
    pub arm: ArmId,
    pub mean: f64,
    pub spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub module_count: usize,
    pub arms: Vec<SynthArm>,
    pub seed: u64,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.module_count < 1 {
            return Err(Error::domain("module_count must be at least 1"));
        }
        if self.arms.is_empty() {
            return Err(Error::domain("at least one arm is required"));
        }
        for a in &self.arms {
            if !(a.mean > 0.0 && a.mean < 1.0) {
                return Err(Error::domain(format!("mean {} of {} outside (0, 1)", a.mean, a.arm)));
            }
            if !(a.spread >= 0.0 && a.spread.is_finite()) {
                return Err(Error::domain(format!("spread {} of {} is negative", a.spread, a.arm)));
            }
        }
        let ids: Vec<ArmId> = self.arms.iter().map(|a| a.arm.clone()).collect();
        ensure_unique(&ids)
    }
}

/// Draws every cell independently; identical configs give identical data.
pub fn generate_synthetic(config: &SynthConfig) -> Result<Dataset> {
    config.validate()?;
    let mut rng = seed::rng(config.seed);
    let width = (config.module_count.max(10) as f64).log10().ceil() as usize;
    let modules = (1..=config.module_count).map(|i| format!("m{i:0width$}")).collect();
    let scores = (0..config.module_count)
        .map(|_| {
            config
                .arms
                .iter()
                .map(|a| {
                    let v = if a.spread == 0.0 {
                        a.mean
                    } else {
                        rng.random_range(a.mean - a.spread..=a.mean + a.spread)
                    };
                    ExamScore::new(v.clamp(0.0, 1.0))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(modules, config.arms.iter().map(|a| a.arm.clone()).collect(), scores)
}
