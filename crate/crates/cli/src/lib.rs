//! Batch front end: loads family manifests, dispatches to the certification
//! pipelines, and writes machine-readable JSON reports.
//!
//! Exit-code triage: 0 means certified or computed, 2 means the requested
//! certification is not available at the tabulated resolution (the report
//! names the failing modulus), 1 means a hard error. Absence of a
//! certificate is a resolution verdict, never a disproof.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

use compactkit_core::bv::helly_select;
use compactkit_core::bv::BVFunction;
use compactkit_core::error::Error;
use compactkit_core::fourier::{default_frequency_grid, pego_certify};
use compactkit_core::grid::FunctionFamily;
use compactkit_core::kolmogorov::{greedy_cover, kr_certify, CoverCertificate, PipelineInfo};
use compactkit_core::manifest::load_family;
use compactkit_core::moduli::{default_r_grid, default_rho_grid, family_moduli};
use compactkit_core::sobolev::{rk_certify, wkp_family_reduce};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Moduli,
    Cover,
    Certify,
    Fourier,
    Helly,
    Sobolev,
}

/// Full run configuration; embedded verbatim in every report so a run can be
/// reproduced from its output alone.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub family_path: PathBuf,
    pub p: f64,
    pub q: Option<f64>,
    pub epsilon: Option<f64>,
    pub tau: Option<f64>,
    pub r_grid: Option<Vec<f64>>,
    pub rho_grid: Option<Vec<f64>>,
    pub embedding_constant: Option<f64>,
    pub output_path: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Certified,
    Computed,
    NotCertifiedAtResolution,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub config: RunConfig,
    pub timestamp_unix: u64,
    pub status: Status,
    pub diagnostic: Option<String>,
    pub result: Value,
}

impl Report {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Certified | Status::Computed => 0,
            Status::NotCertifiedAtResolution => 2,
        }
    }
}

fn require_epsilon(config: &RunConfig) -> Result<f64, Error> {
    match config.epsilon {
        Some(e) if e.is_finite() && e > 0.0 => Ok(e),
        Some(e) => Err(Error::InvalidArgument(format!(
            "epsilon must be a positive real, got {e}"
        ))),
        None => Err(Error::InvalidArgument(
            "--epsilon is required by this command".into(),
        )),
    }
}

fn certificate_json(
    family: &FunctionFamily,
    cert: &CoverCertificate,
    pipeline: Option<&PipelineInfo>,
) -> Value {
    let centers: Vec<&str> = cert.centers.iter().map(|&c| family.label(c)).collect();
    let assignment: BTreeMap<&str, &str> = cert
        .assignment
        .iter()
        .enumerate()
        .map(|(i, &slot)| (family.label(i), family.label(cert.centers[slot])))
        .collect();
    let mut value = json!({
        "epsilon": cert.epsilon,
        "radius": cert.radius,
        "centers": centers,
        "assignment": assignment,
        "verified_max_distance": cert.verified_max_distance,
    });
    if let Some(info) = pipeline {
        value["pipeline"] = serde_json::to_value(info).expect("serializable");
    }
    value
}

/// Executes one command against a loaded family. Resolution verdicts come
/// back as reports with exit code 2; hard errors as `Err`.
pub fn run(config: &RunConfig) -> Result<Report, Error> {
    let family = load_family(&config.family_path)?;
    let grid = family.grid();
    let r_grid = config
        .r_grid
        .clone()
        .unwrap_or_else(|| default_r_grid(grid));
    let rho_grid = config
        .rho_grid
        .clone()
        .unwrap_or_else(|| default_rho_grid(grid));

    let timestamp_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let done = |status: Status, diagnostic: Option<String>, result: Value| Report {
        config: config.clone(),
        timestamp_unix,
        status,
        diagnostic,
        result,
    };

    match config.command {
        Command::Moduli => {
            let eps = require_epsilon(config)?;
            let report = family_moduli(&family, config.p, eps, &r_grid, &rho_grid)?;
            let result = serde_json::to_value(&report).expect("serializable");
            Ok(done(Status::Computed, None, result))
        }
        Command::Cover => {
            let eps = require_epsilon(config)?;
            let cert = greedy_cover(&family, config.p, eps)?;
            let result = json!({
                "covering_number": cert.centers.len(),
                "certificate": certificate_json(&family, &cert, None),
            });
            Ok(done(Status::Certified, None, result))
        }
        Command::Certify => {
            let eps = require_epsilon(config)?;
            let moduli = family_moduli(&family, config.p, eps, &r_grid, &rho_grid)?;
            let moduli_value = serde_json::to_value(&moduli).expect("serializable");
            match kr_certify(&family, config.p, eps, &moduli) {
                Ok((cert, info)) => Ok(done(
                    Status::Certified,
                    None,
                    json!({
                        "certificate": certificate_json(&family, &cert, Some(&info)),
                        "moduli": moduli_value,
                    }),
                )),
                Err(e) if e.is_resolution_verdict() => Ok(done(
                    Status::NotCertifiedAtResolution,
                    Some(e.to_string()),
                    json!({ "moduli": moduli_value }),
                )),
                Err(e) => Err(e),
            }
        }
        Command::Fourier => {
            let eps = require_epsilon(config)?;
            if config.p != 2.0 {
                return Err(Error::ExponentError(format!(
                    "the spectral criterion is an L2 criterion; got p = {}",
                    config.p
                )));
            }
            let freq_grid = config
                .rho_grid
                .clone()
                .unwrap_or_else(|| default_frequency_grid(grid));
            match pego_certify(&family, eps, &freq_grid) {
                Ok(spectral) => Ok(done(
                    Status::Certified,
                    None,
                    serde_json::to_value(&spectral).expect("serializable"),
                )),
                Err(e) if e.is_resolution_verdict() => Ok(done(
                    Status::NotCertifiedAtResolution,
                    Some(e.to_string()),
                    json!({}),
                )),
                Err(e) => Err(e),
            }
        }
        Command::Helly => {
            if config.p != 1.0 {
                return Err(Error::ExponentError(format!(
                    "selection runs in L1; got p = {}",
                    config.p
                )));
            }
            let tau = match config.tau {
                Some(t) if t.is_finite() && t > 0.0 => t,
                Some(t) => {
                    return Err(Error::InvalidArgument(format!(
                        "tau must be a positive real, got {t}"
                    )))
                }
                None => {
                    return Err(Error::InvalidArgument(
                        "--tau is required by the helly command".into(),
                    ))
                }
            };
            let members: Vec<BVFunction> = family
                .members()
                .iter()
                .map(|f| BVFunction::new(f.clone()))
                .collect::<Result<_, _>>()?;
            let m_bound = members
                .iter()
                .map(|u| u.total_variation().max(u.sup_norm()))
                .fold(0.0, f64::max)
                .max(f64::MIN_POSITIVE);
            let selection = helly_select(&members, tau, m_bound)?;
            let labels: Vec<&str> = selection.indices.iter().map(|&i| family.label(i)).collect();
            Ok(done(
                Status::Computed,
                None,
                json!({
                    "selection": serde_json::to_value(&selection).expect("serializable"),
                    "selected_labels": labels,
                    "m_bound": m_bound,
                }),
            ))
        }
        Command::Sobolev => {
            let eps = require_epsilon(config)?;
            let q = config.q.ok_or_else(|| {
                Error::InvalidArgument("--q is required by the sobolev command".into())
            })?;
            let constant = config.embedding_constant.unwrap_or(1.0);
            let sobolev = wkp_family_reduce(&family, 1, config.p)?;
            match rk_certify(&sobolev, q, eps, constant, &r_grid, &rho_grid) {
                Ok(outcome) => Ok(done(
                    Status::Certified,
                    None,
                    json!({
                        "certificate":
                            certificate_json(&family, &outcome.certificate, Some(&outcome.pipeline)),
                        "embedding_diagnostic":
                            serde_json::to_value(&outcome.diagnostic).expect("serializable"),
                        "lq_moduli": serde_json::to_value(&outcome.lq_moduli).expect("serializable"),
                    }),
                )),
                Err(e) if e.is_resolution_verdict() => Ok(done(
                    Status::NotCertifiedAtResolution,
                    Some(e.to_string()),
                    json!({}),
                )),
                Err(e) => Err(e),
            }
        }
    }
}

/// Serializes the report and writes it atomically (write temp, then rename).
pub fn write_report(report: &Report, path: &Path) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(report).expect("report is serializable");
    text.push('\n');
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, text)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Full run: execute, write the report, map to the exit code. Hard errors
/// print to stderr and exit 1 without touching the output file.
pub fn run_to_exit_code(config: &RunConfig) -> i32 {
    match run(config) {
        Ok(report) => {
            if let Err(e) = write_report(&report, &config.output_path) {
                eprintln!("compactkit: failed to write report: {e}");
                return 1;
            }
            if let Some(d) = &report.diagnostic {
                eprintln!("compactkit: {d}");
            }
            report.exit_code()
        }
        Err(e) => {
            eprintln!("compactkit: {e}");
            1
        }
    }
}
