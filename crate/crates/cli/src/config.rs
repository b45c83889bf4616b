//! Experiment configuration: flat key = value sections in TOML, one file
//! per experiment, every field overridable by a CLI flag.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use fraclt::checks::CHECK_NAMES;
use fraclt::error::{Error, Result};
use fraclt::functional::TestFunction;
use fraclt::process::{ProcessKind, ProcessSpec, SamplerKind};

#[derive(Debug, Deserialize)]
struct FileConfig {
    process: ProcessSection,
    #[serde(default)]
    function: Option<FunctionSection>,
    #[serde(default)]
    experiment: Option<ExperimentSection>,
}

#[derive(Debug, Deserialize)]
struct ProcessSection {
    kind: String,
    tau: f64,
    horizon: f64,
    n_steps: usize,
    sampler: String,
}

#[derive(Debug, Deserialize)]
struct FunctionSection {
    id: String,
    params: Vec<f64>,
}

#[derive(Debug, Deserialize, Default)]
struct ExperimentSection {
    replicates: Option<usize>,
    master_seed: Option<u64>,
    lambda_ladder: Option<Vec<f64>>,
    output_dir: Option<String>,
    checks: Option<Vec<String>>,
}

/// Fully validated experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub spec: ProcessSpec,
    pub function: TestFunction,
    pub replicates: usize,
    pub master_seed: u64,
    pub lambda_ladder: Vec<f64>,
    pub output_dir: PathBuf,
    pub checks: Vec<String>,
}

pub fn load(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)?;
    let file: FileConfig = toml::from_str(&text)
        .map_err(|e| Error::invalid(format!("cannot parse config {}: {e}", path.display())))?;

    let kind = match file.process.kind.as_str() {
        "fbm" => ProcessKind::Fbm,
        "rl" => ProcessKind::Rl,
        other => return Err(Error::invalid(format!("unknown process kind '{other}'"))),
    };
    let sampler = match file.process.sampler.as_str() {
        "cholesky" => SamplerKind::Cholesky,
        "circulant" => SamplerKind::Circulant,
        "kernel_conv" => SamplerKind::KernelConv,
        other => return Err(Error::invalid(format!("unknown sampler '{other}'"))),
    };
    let spec = ProcessSpec::new(
        kind,
        file.process.tau,
        file.process.horizon,
        file.process.n_steps,
        sampler,
    )?;

    let function = match file.function {
        None => TestFunction::gaussian_bump(1.0, 0.0, 0.5)?,
        Some(f) => parse_function(&f)?,
    };

    let exp = file.experiment.unwrap_or_default();
    let replicates = exp.replicates.unwrap_or(100);
    if replicates < 1 {
        return Err(Error::invalid("replicates must be at least 1"));
    }
    let lambda_ladder = exp.lambda_ladder.unwrap_or_else(|| vec![1.0, 4.0, 16.0]);
    if lambda_ladder.is_empty() || lambda_ladder[0] != 1.0 {
        return Err(Error::invalid("lambda_ladder must start at 1"));
    }
    if lambda_ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("lambda_ladder must be strictly increasing"));
    }
    let checks = exp.checks.unwrap_or_default();
    for name in &checks {
        if !CHECK_NAMES.contains(&name.as_str()) {
            return Err(Error::invalid(format!(
                "check '{name}' is not registered; available: {}",
                CHECK_NAMES.join(", ")
            )));
        }
    }

    Ok(ExperimentConfig {
        spec,
        function,
        replicates,
        master_seed: exp.master_seed.unwrap_or(0x5EED),
        lambda_ladder,
        output_dir: PathBuf::from(exp.output_dir.unwrap_or_else(|| "out".to_string())),
        checks,
    })
}

fn parse_function(section: &FunctionSection) -> Result<TestFunction> {
    let p = &section.params;
    let need = |n: usize| -> Result<()> {
        if p.len() == n {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "function '{}' needs {n} params, got {}",
                section.id,
                p.len()
            )))
        }
    };
    match section.id.as_str() {
        "gaussian_bump" => {
            need(3)?;
            TestFunction::gaussian_bump(p[0], p[1], p[2])
        }
        "compact_bump" => {
            need(3)?;
            TestFunction::compact_bump(p[0], p[1], p[2])
        }
        "indicator_interval" => {
            need(2)?;
            TestFunction::indicator_interval(p[0], p[1])
        }
        "signed_difference" => {
            need(3)?;
            TestFunction::signed_difference(p[0], p[1], p[2])
        }
        other => Err(Error::invalid(format!("unknown test function '{other}'"))),
    }
}
