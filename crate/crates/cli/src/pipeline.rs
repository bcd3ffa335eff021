//! `pipeline`: field → table → ensemble → report from one JSON config.

use crate::io::{self, field_json, Provenance};
use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::json;
use std::path::{Path, PathBuf};
use tracedist::short_sums::{gof_report, require_compatible, window_sums, GofConfig, OffsetSet};
use tracedist::trace_functions::{build_table, verify_weil, Family, Method};

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub p: u64,
    #[serde(default = "one")]
    pub e: u32,
    #[serde(default)]
    pub modulus: Option<String>,
}

fn one() -> u32 {
    1
}

/// Where intermediate results are written. Not part of the config hash.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Persist {
    pub table: Option<PathBuf>,
    pub ensemble: Option<PathBuf>,
}

/// Checks that decide the exit status. Unset thresholds are skipped.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct Assertions {
    pub weil: bool,
    pub ks_max: Option<f64>,
    pub rect_max: Option<f64>,
    /// Entrywise distance of the empirical covariance from its target.
    pub covariance_tol: Option<f64>,
    /// Largest |empirical − model| over the moment rows.
    pub moment_gap_max: Option<f64>,
    pub max_abs_imag: Option<f64>,
}

impl Default for Assertions {
    fn default() -> Self {
        Self {
            weil: true,
            ks_max: None,
            rect_max: None,
            covariance_tol: None,
            moment_gap_max: None,
            max_abs_imag: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub field: FieldSpec,
    /// Family in its display form, e.g. `kloosterman(n=2)`.
    pub family: String,
    #[serde(default)]
    pub method: Method,
    /// `interval:H`, `box:d1xd2` or `explicit:i1,i2,...`
    pub offsets: String,
    #[serde(default)]
    pub exclude_singular: bool,
    #[serde(default)]
    pub gof: GofConfig,
    #[serde(default)]
    pub assertions: Assertions,
    #[serde(default, skip_serializing)]
    pub persist: Persist,
}

#[derive(Serialize)]
struct Assertion {
    name: &'static str,
    value: f64,
    threshold: f64,
    pass: bool,
}

fn at_most(name: &'static str, value: f64, threshold: Option<f64>) -> Option<Assertion> {
    threshold.map(|t| Assertion {
        name,
        value,
        threshold: t,
        pass: value <= t,
    })
}

pub fn run(config_path: &Path, out: Option<&Path>) -> Result<bool> {
    let text = std::fs::read_to_string(config_path)
        .with_context(|| format!("reading {}", config_path.display()))?;
    let cfg: PipelineConfig = serde_json::from_str(&text).context("invalid pipeline config")?;
    let ctx = io::field(cfg.field.p, cfg.field.e, cfg.field.modulus.as_deref())?;
    let family: Family = cfg.family.parse()?;

    let mut resolved = serde_json::to_value(&cfg)?;
    resolved["command"] = json!("pipeline");
    resolved["field"] = field_json(&ctx);
    resolved["family"] = json!(family.to_string());
    let prov = Provenance::new(resolved, None);

    let mut table = build_table(&ctx, &family, cfg.method)?;
    if cfg.exclude_singular {
        table = table.without_singular();
    }
    if let Some(p) = &cfg.persist.table {
        io::emit(
            Some(p),
            &io::table_csv(&prov, &table, cfg.exclude_singular)?,
        )?;
    }
    let weil = verify_weil(&table);

    let offsets = OffsetSet::parse(&ctx, &cfg.offsets)?;
    require_compatible(&table, offsets.offsets())?;
    let ens = window_sums(&table, &offsets);
    if let Some(p) = &cfg.persist.ensemble {
        io::emit(Some(p), &io::ensemble_csv(&prov, &ens)?)?;
    }
    let gof = gof_report(&ens, &cfg.gof)?;

    let a = &cfg.assertions;
    let cov_dev = (0..2)
        .flat_map(|i| (0..2).map(move |j| (i, j)))
        .map(|(i, j)| (gof.covariance_emp[i][j] - gof.covariance_target[i][j]).abs())
        .fold(0.0, f64::max);
    let gap = gof.moment_rows.iter().map(|m| m.gap).fold(0.0, f64::max);
    let mut assertions: Vec<Assertion> = [
        at_most("ks_real", gof.ks_real, a.ks_max),
        at_most("rect_discrepancy", gof.rect_discrepancy, a.rect_max),
        at_most("covariance", cov_dev, a.covariance_tol),
        at_most("moment_gap", gap, a.moment_gap_max),
        at_most("max_abs_imag", gof.max_abs_imag, a.max_abs_imag),
    ]
    .into_iter()
    .flatten()
    .collect();
    if a.weil {
        assertions.insert(
            0,
            Assertion {
                name: "weil",
                value: weil.max_abs,
                threshold: weil.rank as f64,
                pass: weil.pass,
            },
        );
    }
    let pass = assertions.iter().all(|x| x.pass);

    let report = json!({
        "field": ctx.info(),
        "table": {
            "family": table.family.to_string(),
            "group": table.group,
            "rank": table.rank,
            "self_dual": table.self_dual,
            "conductor_bound": table.conductor_bound,
            "singular": table.singular.len(),
        },
        "weil": weil,
        "offsets": offsets,
        "compatible": true,
        "gof": gof,
        "assertions": assertions,
        "pass": pass,
    });
    io::emit(out, &prov.envelope(&report)?)?;
    Ok(pass)
}
