//! Provenance headers, CSV tables and JSON envelopes.

use anyhow::{anyhow, bail, ensure, Context, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use tracedist::finite_field::FieldCtx;
use tracedist::poly::{FpPoly, IntRational};
use tracedist::short_sums::{OffsetSet, ShortSumEnsemble};
use tracedist::trace_functions::{Family, TraceTable};
use tracedist::GroupKind;

pub const TOOL: &str = "tracedist";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Resolved configuration of one run. Output paths are not part of it, so the
/// hash only changes when the numbers can.
#[derive(Clone, Debug)]
pub struct Provenance {
    pub config: Value,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub threads: usize,
}

impl Provenance {
    pub fn new(config: Value, seed: Option<u64>) -> Self {
        let bytes = serde_json::to_vec(&config).expect("JSON values always serialize");
        Self {
            config_hash: sha256_hex(&bytes),
            config,
            seed,
            threads: rayon::current_num_threads(),
        }
    }

    fn header(&self, meta: &[(&str, String)]) -> String {
        let seed = self.seed.map_or("none".to_string(), |s| s.to_string());
        let mut out = format!(
            "# tool: {TOOL}\n# version: {VERSION}\n# config_hash: {}\n# seed: {seed}\n# threads: {}\n# config: {}\n",
            self.config_hash, self.threads, self.config
        );
        for (k, v) in meta {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out
    }

    pub fn envelope<T: Serialize>(&self, result: &T) -> Result<String> {
        let v = json!({
            "tool": TOOL,
            "version": VERSION,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "threads": self.threads,
            "config": self.config,
            "result": result,
        });
        Ok(serde_json::to_string_pretty(&v)? + "\n")
    }

    /// Header block followed by the CSV rows.
    pub fn csv<R: Serialize>(
        &self,
        meta: &[(&str, String)],
        rows: impl IntoIterator<Item = R>,
    ) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let body = String::from_utf8(w.into_inner().map_err(|e| anyhow!("{e}"))?)?;
        Ok(self.header(meta) + &body)
    }
}

/// Writes to `path`, or to stdout when there is none.
pub fn emit(path: Option<&Path>, contents: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, contents).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

/// A CSV file split into its `# key: value` header and its rows.
pub struct CsvFile<R> {
    pub meta: BTreeMap<String, String>,
    pub rows: Vec<R>,
    pub sha256: String,
}

impl<R> CsvFile<R> {
    pub fn get(&self, key: &str) -> Result<&str> {
        self.meta
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| anyhow!("header is missing '{key}'"))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self.get(key)?;
        v.parse()
            .map_err(|_| anyhow!("header '{key}' has a bad value '{v}'"))
    }
}

pub fn read_csv<R: for<'de> Deserialize<'de>>(path: &Path) -> Result<CsvFile<R>> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let text = std::str::from_utf8(&bytes).context("input is not UTF-8")?;
    let meta = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| l[1..].trim().split_once(": "))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect();
    let mut rd = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(bytes.as_slice());
    let rows = rd
        .deserialize()
        .collect::<std::result::Result<Vec<R>, _>>()
        .with_context(|| format!("parsing {}", path.display()))?;
    Ok(CsvFile {
        meta,
        rows,
        sha256: sha256_hex(&bytes),
    })
}

pub fn parse_modulus(p: u64, s: &str) -> Result<FpPoly> {
    let r = IntRational::parse(s)?.reduce(p)?;
    ensure!(
        r.is_polynomial() && r.den.lead() == 1,
        "modulus '{s}' must be a polynomial"
    );
    Ok(r.num)
}

pub fn field(p: u64, e: u32, modulus: Option<&str>) -> Result<Arc<FieldCtx>> {
    let m = modulus.map(|s| parse_modulus(p, s)).transpose()?;
    Ok(Arc::new(FieldCtx::new(p, e, m)?))
}

pub fn field_json(ctx: &FieldCtx) -> Value {
    json!({ "p": ctx.p(), "e": ctx.e(), "modulus": ctx.modulus().map(|m| m.to_string()) })
}

fn field_meta(ctx: &FieldCtx) -> Vec<(&'static str, String)> {
    vec![
        ("p", ctx.p().to_string()),
        ("e", ctx.e().to_string()),
        (
            "modulus",
            ctx.modulus().map_or("none".to_string(), |m| m.to_string()),
        ),
    ]
}

fn field_from_meta<R>(f: &CsvFile<R>) -> Result<Arc<FieldCtx>> {
    let modulus = f.get("modulus")?;
    field(
        f.parse("p")?,
        f.parse("e")?,
        (modulus != "none").then_some(modulus),
    )
}

fn parse_family(s: &str) -> Family {
    s.parse().unwrap_or_else(|_| Family::Custom {
        name: s.to_string(),
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TableRow {
    pub x_index: u64,
    pub re: f64,
    pub im: f64,
    pub is_singular: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PointRow {
    pub x_index: u64,
    pub re: f64,
    pub im: f64,
}

pub fn table_csv(prov: &Provenance, t: &TraceTable, exclude_singular: bool) -> Result<String> {
    let mut meta = field_meta(&t.ctx);
    meta.extend([
        ("family", t.family.to_string()),
        ("group", t.group.to_string()),
        ("rank", t.rank.to_string()),
        ("self_dual", t.self_dual.to_string()),
        ("conductor_bound", t.conductor_bound.to_string()),
        ("exclude_singular", exclude_singular.to_string()),
    ]);
    let rows = t.values.iter().enumerate().map(|(i, v)| TableRow {
        x_index: i as u64,
        re: v.re,
        im: v.im,
        is_singular: t.is_singular(t.ctx.at(i)),
    });
    prov.csv(&meta, rows)
}

/// Reads a table written by `trace gen`; also returns the file's SHA-256.
pub fn read_table(path: &Path) -> Result<(TraceTable, String)> {
    let f = read_csv::<TableRow>(path)?;
    let ctx = field_from_meta(&f)?;
    check_indices(f.rows.iter().map(|r| r.x_index), ctx.size())?;
    let table = TraceTable {
        values: f.rows.iter().map(|r| Complex64::new(r.re, r.im)).collect(),
        singular: f
            .rows
            .iter()
            .filter(|r| r.is_singular)
            .map(|r| ctx.at(r.x_index as usize))
            .collect(),
        family: parse_family(f.get("family")?),
        rank: f.parse("rank")?,
        self_dual: f.parse("self_dual")?,
        group: f.get("group")?.parse::<GroupKind>()?,
        conductor_bound: f.parse("conductor_bound")?,
        ctx,
    };
    Ok((table, f.sha256))
}

pub fn ensemble_csv(prov: &Provenance, ens: &ShortSumEnsemble) -> Result<String> {
    let mut meta = field_meta(&ens.ctx);
    meta.extend([
        ("family", ens.family.to_string()),
        ("group", ens.group.to_string()),
        ("self_dual", ens.self_dual.to_string()),
        ("offsets", ens.offsets.to_string()),
        ("H", ens.h().to_string()),
    ]);
    prov.csv(&meta, points(&ens.values))
}

pub fn points(values: &[Complex64]) -> impl Iterator<Item = PointRow> + '_ {
    values.iter().enumerate().map(|(i, v)| PointRow {
        x_index: i as u64,
        re: v.re,
        im: v.im,
    })
}

pub fn read_ensemble(path: &Path) -> Result<(ShortSumEnsemble, String)> {
    let f = read_csv::<PointRow>(path)?;
    let ctx = field_from_meta(&f)?;
    check_indices(f.rows.iter().map(|r| r.x_index), ctx.size())?;
    let ens = ShortSumEnsemble {
        offsets: OffsetSet::parse(&ctx, f.get("offsets")?)?,
        values: f.rows.iter().map(|r| Complex64::new(r.re, r.im)).collect(),
        family: parse_family(f.get("family")?),
        group: f.get("group")?.parse()?,
        self_dual: f.parse("self_dual")?,
        ctx,
    };
    Ok((ens, f.sha256))
}

fn check_indices(idx: impl ExactSizeIterator<Item = u64>, q: usize) -> Result<()> {
    if idx.len() != q {
        bail!("expected {q} rows, found {}", idx.len());
    }
    for (i, x) in idx.enumerate() {
        ensure!(
            x == i as u64,
            "row {i} has x_index {x}; rows must be ordered 0..q"
        );
    }
    Ok(())
}
