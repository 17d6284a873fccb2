//! Artifact formats.
//!
//! CSV: one `# key=value; key=value` metadata line, then a header row and
//! data rows.
//!
//! Wigner grid: `# qzd wigner` line, `key=value` header lines (`nx`, `ny`,
//! `re_min`, `re_max`, `im_min`, `im_max`), a `data` line, then one value
//! per line at index `iy * nx + ix`.
//!
//! State dump: `# qzd state` line, `kind=vector|density`, `dim=<d>`,
//! `meta.<key>=<value>` lines, a `data` line, then `re im` pairs; densities
//! are row-major (`i * dim + j`).

use crate::error::{CliError, CliResult};
use qzd::analysis::{GridSpec, WignerGrid};
use qzd::fock::{CMat, CVec, DensityOp, FockVector};
use qzd::C64;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

pub const OUT_DIR_ENV: &str = "QZD_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "qzd-out";

/// Flag, then config file, then environment, then `qzd-out`.
pub fn resolve_out_dir(flag: Option<&Path>, config: Option<&Path>) -> PathBuf {
    if let Some(p) = flag.or(config) {
        return p.to_path_buf();
    }
    match std::env::var_os(OUT_DIR_ENV) {
        Some(v) if !v.is_empty() => PathBuf::from(v),
        _ => PathBuf::from(DEFAULT_OUT_DIR),
    }
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn metadata_line(meta: &[(String, String)]) -> String {
    let parts: Vec<String> = meta.iter().map(|(k, v)| format!("{k}={v}")).collect();
    format!("# {}\n", parts.join("; "))
}

pub fn csv_string(meta: &[(String, String)], header: &[&str], rows: &[Vec<f64>]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Config(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r.iter().map(|x| x.to_string())).map_err(io)?;
    }
    let body = w.into_inner().map_err(|e| CliError::Config(format!("csv: {e}")))?;
    Ok(metadata_line(meta) + &String::from_utf8_lossy(&body))
}

pub fn write_csv(path: &Path, meta: &[(String, String)], header: &[&str], rows: &[Vec<f64>]) -> CliResult<()> {
    write_text(path, &csv_string(meta, header, rows)?)
}

/// Reads a CSV written by [`write_csv`]: `(metadata, header, rows)`.
pub fn read_csv(path: &Path) -> CliResult<(Vec<(String, String)>, Vec<String>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
    let meta = first
        .trim_start_matches('#')
        .split(';')
        .filter_map(|kv| kv.trim().split_once('=').map(|(k, v)| (k.to_string(), v.to_string())))
        .collect();
    let mut r = csv::Reader::from_reader(rest.as_bytes());
    let bad = |e: String| CliError::Config(format!("{}: {e}", path.display()));
    let header = r.headers().map_err(|e| bad(e.to_string()))?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        rows.push(rec.iter().map(|x| x.parse::<f64>().map_err(|e| bad(e.to_string()))).collect::<CliResult<_>>()?);
    }
    Ok((meta, header, rows))
}

pub fn wigner_string(g: &WignerGrid) -> String {
    let s = &g.spec;
    let mut out = String::with_capacity(g.values.len() * 24);
    let _ = writeln!(out, "# qzd wigner");
    let _ = writeln!(out, "nx={}\nny={}", s.nx, s.ny);
    let _ = writeln!(out, "re_min={}\nre_max={}\nim_min={}\nim_max={}", s.re_min, s.re_max, s.im_min, s.im_max);
    out.push_str("data\n");
    for v in &g.values {
        let _ = writeln!(out, "{v}");
    }
    out
}

pub fn write_wigner(path: &Path, g: &WignerGrid) -> CliResult<()> {
    write_text(path, &wigner_string(g))
}

fn header_map<'a>(lines: &mut impl Iterator<Item = &'a str>, path: &Path) -> CliResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    for line in lines.by_ref() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == "data" {
            return Ok(out);
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("{}: malformed header line `{line}`", path.display())))?;
        out.push((k.to_string(), v.to_string()));
    }
    Err(CliError::Config(format!("{}: missing data section", path.display())))
}

fn get<T: std::str::FromStr>(h: &[(String, String)], key: &str, path: &Path) -> CliResult<T> {
    h.iter()
        .find(|(k, _)| k == key)
        .and_then(|(_, v)| v.parse().ok())
        .ok_or_else(|| CliError::Config(format!("{}: missing or invalid `{key}`", path.display())))
}

pub fn read_wigner(path: &Path) -> CliResult<WignerGrid> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines();
    let h = header_map(&mut lines, path)?;
    let spec = GridSpec {
        nx: get(&h, "nx", path)?,
        ny: get(&h, "ny", path)?,
        re_min: get(&h, "re_min", path)?,
        re_max: get(&h, "re_max", path)?,
        im_min: get(&h, "im_min", path)?,
        im_max: get(&h, "im_max", path)?,
    };
    let values: Vec<f64> = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse::<f64>().map_err(|e| CliError::Config(format!("{}: {e}", path.display()))))
        .collect::<CliResult<_>>()?;
    if values.len() != spec.nx * spec.ny {
        return Err(CliError::Config(format!("{}: expected {} values, found {}", path.display(), spec.nx * spec.ny, values.len())));
    }
    Ok(WignerGrid { spec, values })
}

#[derive(Debug, Clone, PartialEq)]
pub enum DumpedState {
    Vector(FockVector),
    Density(DensityOp),
}

impl DumpedState {
    pub fn density(&self) -> DensityOp {
        match self {
            DumpedState::Vector(v) => v.to_density(),
            DumpedState::Density(r) => r.clone(),
        }
    }
}

pub fn state_string(state: &DumpedState, meta: &[(String, String)]) -> String {
    let (kind, dim, data): (&str, usize, Vec<C64>) = match state {
        DumpedState::Vector(v) => ("vector", v.dim(), v.amps.iter().copied().collect()),
        DumpedState::Density(r) => {
            let d = r.dim();
            ("density", d, (0..d * d).map(|k| r.mat[(k / d, k % d)]).collect())
        }
    };
    let mut out = String::with_capacity(data.len() * 48);
    let _ = writeln!(out, "# qzd state\nkind={kind}\ndim={dim}");
    for (k, v) in meta {
        let _ = writeln!(out, "meta.{k}={v}");
    }
    out.push_str("data\n");
    for z in data {
        let _ = writeln!(out, "{} {}", z.re, z.im);
    }
    out
}

pub fn write_state(path: &Path, state: &DumpedState, meta: &[(String, String)]) -> CliResult<()> {
    write_text(path, &state_string(state, meta))
}

pub fn read_state(path: &Path) -> CliResult<(DumpedState, Vec<(String, String)>)> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines();
    let h = header_map(&mut lines, path)?;
    let kind: String = get(&h, "kind", path)?;
    let dim: usize = get(&h, "dim", path)?;
    let bad = |m: String| CliError::Config(format!("{}: {m}", path.display()));
    let mut data = Vec::new();
    for l in lines.filter(|l| !l.trim().is_empty()) {
        let mut it = l.split_whitespace();
        let re: f64 = it.next().and_then(|x| x.parse().ok()).ok_or_else(|| bad(format!("bad pair `{l}`")))?;
        let im: f64 = it.next().and_then(|x| x.parse().ok()).ok_or_else(|| bad(format!("bad pair `{l}`")))?;
        data.push(C64::new(re, im));
    }
    let meta = h
        .iter()
        .filter_map(|(k, v)| k.strip_prefix("meta.").map(|k| (k.to_string(), v.clone())))
        .collect();
    let st = match kind.as_str() {
        "vector" => {
            if data.len() != dim {
                return Err(bad(format!("expected {dim} amplitudes, found {}", data.len())));
            }
            DumpedState::Vector(FockVector { amps: CVec::from_vec(data) })
        }
        "density" => {
            if data.len() != dim * dim {
                return Err(bad(format!("expected {} entries, found {}", dim * dim, data.len())));
            }
            DumpedState::Density(DensityOp { mat: CMat::from_row_slice(dim, dim, &data) })
        }
        other => return Err(bad(format!("unknown kind `{other}`"))),
    };
    Ok((st, meta))
}

/// Flushes summary lines to stdout.
pub fn print_summary(lines: &[(String, String)]) {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    for (k, v) in lines {
        let _ = writeln!(lock, "{k}={v}");
    }
}
