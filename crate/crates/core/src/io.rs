//! Run configuration, presets and file formats.
//!
//! Configuration files are flat `key = value` text with `#` comments. Command-line
//! values override file values. Diagnostics go to CSV, states to JSON snapshots.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::flow::{DiagnosticsRecord, FlowConfig};
use crate::mobius::{self, Point};
use crate::spectral::{basis, GridField, SpectralField, SpectralSpace};

/// Environment variable that overrides the output directory.
pub const OUTPUT_DIR_ENV: &str = "S3FLOW_OUTPUT_DIR";

/// Header of the diagnostics CSV.
pub const CSV_HEADER: &str = "t,alpha,E_f,E,volume,F2,G2,b1,b2,b3,b4,S1,S2,S3,S4,p1,p2,p3,p4,eps,dt_used";

/// Header of shadow trajectory CSV files (a subset of the diagnostics columns).
pub const SHADOW_CSV_HEADER: &str = "t,p1,p2,p3,p4,eps";

/// Prescribed function, by preset or explicit coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FSpec {
    /// `f ≡ 2`.
    Const2,
    /// `f = 2 + δ x4`.
    Axial { delta: f64 },
    /// `f = 2 + Σ a Y_{k,l,m}`.
    Harmonics { terms: Vec<(usize, usize, i64, f64)> },
    /// Raw coefficients `Σ a Y_{k,l,m}`.
    Coefficients { terms: Vec<(usize, usize, i64, f64)> },
}

impl FSpec {
    /// Parses `const2`, `axial:δ`, `harmonics:k.l.m=a,...` or `coeffs:k.l.m=a,...`.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let (head, rest) = text.split_once(':').unwrap_or((text, ""));
        match head {
            "const2" if rest.is_empty() => Ok(Self::Const2),
            "axial" => {
                let delta: f64 = rest.trim().parse().map_err(|_| Error::Parameter(format!("bad axial amplitude `{rest}`")))?;
                Ok(Self::Axial { delta })
            }
            "harmonics" => Ok(Self::Harmonics { terms: parse_terms(rest)? }),
            "coeffs" => Ok(Self::Coefficients { terms: parse_terms(rest)? }),
            _ => Err(Error::Parameter(format!("unknown prescribed function `{text}`"))),
        }
    }

    pub fn to_field(&self) -> Result<SpectralField> {
        let mut f = match self {
            Self::Const2 => SpectralField::constant(0, 2.0),
            Self::Axial { delta } => SpectralField::constant(1, 2.0).add(&SpectralField::coordinate(1, 3).scaled(*delta)),
            Self::Harmonics { terms } => terms_field(terms, true)?,
            Self::Coefficients { terms } => terms_field(terms, false)?,
        };
        if f.band_limit() == 0 {
            f = f.resized(1);
        }
        let k = f.band_limit();
        let space = SpectralSpace::new(k, 4)?;
        let min = space.synthesize(&f)?.min();
        if !(min > 0.0) {
            return Err(Error::Positivity { min });
        }
        Ok(f)
    }
}

impl std::fmt::Display for FSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let terms = |t: &[(usize, usize, i64, f64)]| {
            t.iter().map(|(k, l, m, a)| format!("{k}.{l}.{m}={a}")).collect::<Vec<_>>().join(",")
        };
        match self {
            Self::Const2 => write!(f, "const2"),
            Self::Axial { delta } => write!(f, "axial:{delta}"),
            Self::Harmonics { terms: t } => write!(f, "harmonics:{}", terms(t)),
            Self::Coefficients { terms: t } => write!(f, "coeffs:{}", terms(t)),
        }
    }
}

fn parse_terms(text: &str) -> Result<Vec<(usize, usize, i64, f64)>> {
    let bad = |s: &str| Error::Parameter(format!("bad harmonic term `{s}` (expected k.l.m=value)"));
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|term| {
            let (idx, val) = term.split_once('=').ok_or_else(|| bad(term))?;
            let parts: Vec<&str> = idx.trim().split('.').collect();
            if parts.len() != 3 {
                return Err(bad(term));
            }
            let k: usize = parts[0].parse().map_err(|_| bad(term))?;
            let l: usize = parts[1].parse().map_err(|_| bad(term))?;
            let m: i64 = parts[2].parse().map_err(|_| bad(term))?;
            let a: f64 = val.trim().parse().map_err(|_| bad(term))?;
            if l > k || m.unsigned_abs() as usize > l {
                return Err(bad(term));
            }
            Ok((k, l, m, a))
        })
        .collect()
}

fn terms_field(terms: &[(usize, usize, i64, f64)], add_two: bool) -> Result<SpectralField> {
    let k = terms.iter().map(|t| t.0).max().unwrap_or(0);
    let mut f = if add_two { SpectralField::constant(k, 2.0) } else { SpectralField::zeros(k) };
    for &(k, l, m, a) in terms {
        f.coeffs_mut()[basis::flat_index(k, l, m)] += a;
    }
    Ok(f)
}

/// One additive term of an initial conformal factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitTerm {
    Zero,
    Bubble { p: Point, eps: f64 },
    /// Seeded random field with the given `L²` norm.
    Random { amplitude: f64 },
    Snapshot { path: PathBuf },
}

/// Initial factor as a sum of terms, written `bubble:0,0,0,1,0.6+random:0.05`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitSpec(pub Vec<InitTerm>);

impl InitSpec {
    pub fn parse(text: &str) -> Result<Self> {
        let mut terms = Vec::new();
        for part in text.split('+').map(str::trim).filter(|s| !s.is_empty()) {
            let (head, rest) = part.split_once(':').unwrap_or((part, ""));
            let nums = || -> Result<Vec<f64>> {
                rest.split(',')
                    .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Parameter(format!("bad number in `{part}`"))))
                    .collect()
            };
            terms.push(match head {
                "zero" => InitTerm::Zero,
                "bubble" => {
                    let v = nums()?;
                    if v.len() != 5 {
                        return Err(Error::Parameter(format!("`{part}`: bubble needs p1,p2,p3,p4,eps")));
                    }
                    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3]).sqrt();
                    if !(n > 0.0) {
                        return Err(Error::Parameter(format!("`{part}`: zero centre")));
                    }
                    InitTerm::Bubble { p: [v[0] / n, v[1] / n, v[2] / n, v[3] / n], eps: v[4] }
                }
                "random" => {
                    let v = nums()?;
                    if v.len() != 1 {
                        return Err(Error::Parameter(format!("`{part}`: random needs one amplitude")));
                    }
                    InitTerm::Random { amplitude: v[0] }
                }
                "snapshot" => InitTerm::Snapshot { path: PathBuf::from(rest) },
                _ => return Err(Error::Parameter(format!("unknown initial term `{part}`"))),
            });
        }
        if terms.is_empty() {
            terms.push(InitTerm::Zero);
        }
        Ok(Self(terms))
    }

    pub fn to_field(&self, space: &SpectralSpace, seed: u64) -> Result<SpectralField> {
        let k = space.band_limit();
        let mut w = SpectralField::zeros(k);
        for (n, term) in self.0.iter().enumerate() {
            let add = match term {
                InitTerm::Zero => SpectralField::zeros(k),
                InitTerm::Bubble { p, eps } => mobius::bubble(space, p, *eps)?,
                InitTerm::Random { amplitude } => SpectralSpace::random_field(k, seed.wrapping_add(n as u64), *amplitude),
                InitTerm::Snapshot { path } => load_snapshot(path)?.field.resized(k),
            };
            w = w.add(&add).resized(k);
        }
        Ok(w)
    }
}

impl std::fmt::Display for InitSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|t| match t {
                InitTerm::Zero => "zero".to_string(),
                InitTerm::Bubble { p, eps } => format!("bubble:{},{},{},{},{}", p[0], p[1], p[2], p[3], eps),
                InitTerm::Random { amplitude } => format!("random:{amplitude}"),
                InitTerm::Snapshot { path } => format!("snapshot:{}", path.display()),
            })
            .collect();
        f.write_str(&parts.join("+"))
    }
}

/// Output formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
}

impl Default for Formats {
    fn default() -> Self {
        Self { csv: true, json: true }
    }
}

impl Formats {
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Self { csv: false, json: false };
        for p in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            match p {
                "csv" => out.csv = true,
                "json" => out.json = true,
                other => return Err(Error::Parameter(format!("unknown format `{other}`"))),
            }
        }
        Ok(out)
    }
}

/// Complete run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub flow: FlowConfig,
    pub f: FSpec,
    pub w0: InitSpec,
    pub output_dir: PathBuf,
    pub formats: Formats,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            flow: FlowConfig::default(),
            f: FSpec::Const2,
            w0: InitSpec(vec![InitTerm::Zero]),
            output_dir: PathBuf::from("s3flow-out"),
            formats: Formats::default(),
        }
    }
}

/// Keys accepted in configuration files and as overrides.
pub const CONFIG_KEYS: &[&str] = &[
    "K", "dt", "t_max", "tol_converged", "eps_min", "oversample", "sigma_mode", "seed", "n_diag",
    "max_steps", "normalize_tol", "f", "w0", "output_dir", "formats",
];

/// Where a configuration value came from, for error messages.
#[derive(Debug, Clone)]
pub enum Origin {
    File { path: PathBuf, line: usize },
    Flag,
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let num = |what: &str| -> Result<f64> {
            v.parse::<f64>().map_err(|_| Error::Parameter(format!("{key}: expected {what}, got `{v}`")))
        };
        let int = || -> Result<usize> {
            v.parse::<usize>().map_err(|_| Error::Parameter(format!("{key}: expected a non-negative integer, got `{v}`")))
        };
        match key {
            "K" => self.flow.band_limit = int()?,
            "dt" => self.flow.dt = num("a number")?,
            "t_max" => self.flow.t_max = num("a number")?,
            "tol_converged" => self.flow.tol_converged = num("a number")?,
            "eps_min" => self.flow.eps_min = num("a number")?,
            "oversample" => self.flow.oversample = int()?,
            "sigma_mode" => self.flow.sigma_mode = v.parse()?,
            "seed" => self.flow.seed = v.parse().map_err(|_| Error::Parameter(format!("{key}: expected an integer, got `{v}`")))?,
            "n_diag" => self.flow.n_diag = int()?,
            "max_steps" => self.flow.max_steps = int()?,
            "normalize_tol" => self.flow.normalize_tol = num("a number")?,
            "f" => self.f = FSpec::parse(v)?,
            "w0" => self.w0 = InitSpec::parse(v)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            "formats" => self.formats = Formats::parse(v)?,
            _ => return Err(Error::Parameter(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Builds a configuration from an optional file, then overrides, then the environment.
    pub fn from_sources(file: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(path) = file {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            for (key, value, line) in parse_key_values(&text).map_err(|(line, message)| Error::Config {
                path: path.to_path_buf(),
                line,
                message,
            })? {
                cfg.set(&key, &value).map_err(|e| Error::Config { path: path.to_path_buf(), line, message: e.to_string() })?;
            }
        }
        let mut seen = BTreeMap::new();
        for (key, value) in overrides {
            if let Some(prev) = seen.insert(key.clone(), value.clone()) {
                if prev != *value {
                    return Err(Error::Parameter(format!("{key}: conflicting values `{prev}` and `{value}`")));
                }
            }
            cfg.set(key, value)?;
        }
        if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
            if !dir.is_empty() {
                cfg.output_dir = PathBuf::from(dir);
            }
        }
        cfg.flow.validate()?;
        Ok(cfg)
    }

    /// Canonical `key = value` text of the configuration.
    pub fn to_text(&self) -> String {
        let f = &self.flow;
        let mut s = String::new();
        let _ = writeln!(s, "K = {}", f.band_limit);
        let _ = writeln!(s, "dt = {:e}", f.dt);
        let _ = writeln!(s, "t_max = {:e}", f.t_max);
        let _ = writeln!(s, "tol_converged = {:e}", f.tol_converged);
        let _ = writeln!(s, "eps_min = {:e}", f.eps_min);
        let _ = writeln!(s, "oversample = {}", f.oversample);
        let _ = writeln!(s, "sigma_mode = {}", f.sigma_mode);
        let _ = writeln!(s, "seed = {}", f.seed);
        let _ = writeln!(s, "n_diag = {}", f.n_diag);
        let _ = writeln!(s, "max_steps = {}", f.max_steps);
        let _ = writeln!(s, "normalize_tol = {:e}", f.normalize_tol);
        let _ = writeln!(s, "f = {}", self.f);
        let _ = writeln!(s, "w0 = {}", self.w0);
        let mut formats = Vec::new();
        if self.formats.csv {
            formats.push("csv");
        }
        if self.formats.json {
            formats.push("json");
        }
        let _ = writeln!(s, "formats = {}", formats.join(","));
        s
    }

    /// Short hash of the canonical text; the output directory is excluded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        hex::encode(&digest[..8])
    }
}

/// Splits `key = value` lines, skipping blanks and `#` comments.
pub fn parse_key_values(text: &str) -> std::result::Result<Vec<(String, String, usize)>, (usize, String)> {
    let mut out = Vec::new();
    let mut seen = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err((n + 1, format!("expected `key = value`, got `{line}`")));
        };
        let key = k.trim().to_string();
        if !CONFIG_KEYS.contains(&key.as_str()) {
            return Err((n + 1, format!("unknown key `{key}`")));
        }
        if seen.insert(key.clone(), n + 1).is_some() {
            return Err((n + 1, format!("duplicate key `{key}`")));
        }
        out.push((key, v.trim().to_string(), n + 1));
    }
    Ok(out)
}

/// Writes `contents` to `path` through a temporary file and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Float text with 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_cells(out: &mut String, v: Option<&[f64]>, n: usize) {
    for i in 0..n {
        out.push(',');
        if let Some(v) = v {
            out.push_str(&fmt_float(v[i]));
        }
    }
}

/// Diagnostics as CSV text.
pub fn diagnostics_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let fixed = [r.t, r.alpha, r.energy_f, r.energy, r.volume, r.f2, r.g2];
        out.push_str(&fixed.iter().map(|v| fmt_float(*v)).collect::<Vec<_>>().join(","));
        opt_cells(&mut out, r.b.as_ref().map(|b| &b[..]), 4);
        opt_cells(&mut out, Some(&r.s[..]), 4);
        opt_cells(&mut out, r.p.as_ref().map(|p| &p[..]), 4);
        opt_cells(&mut out, r.eps.as_ref().map(std::slice::from_ref), 1);
        out.push(',');
        out.push_str(&fmt_float(r.dt_used));
        out.push('\n');
    }
    out
}

/// Writes the diagnostics CSV.
pub fn emit_diagnostics(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    write_atomic(path, diagnostics_csv(records).as_bytes())
}

/// Shadow trajectory as CSV text.
pub fn shadow_csv(states: &[crate::shadow::ShadowState]) -> String {
    let mut out = String::from(SHADOW_CSV_HEADER);
    out.push('\n');
    for s in states {
        let row = [s.t, s.p[0], s.p[1], s.p[2], s.p[3], s.eps];
        out.push_str(&row.iter().map(|v| fmt_float(*v)).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

/// Snapshot header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub band_limit: usize,
    /// Node counts `(χ, θ, φ)` of the grid the state was computed on.
    pub grid: (usize, usize, usize),
    pub t: f64,
    pub config_hash: String,
    pub tool_version: String,
}

/// One coefficient with its explicit harmonic index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub k: usize,
    pub l: usize,
    pub m: i64,
    pub value: f64,
}

/// A saved conformal factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotFile {
    pub header: SnapshotHeader,
    pub coefficients: Vec<Coefficient>,
}

/// Loaded snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub field: SpectralField,
}

impl SnapshotFile {
    pub fn new(field: &SpectralField, grid: (usize, usize, usize), t: f64, config_hash: &str) -> Self {
        let coefficients = field
            .coeffs()
            .iter()
            .enumerate()
            .map(|(i, &value)| {
                let (k, l, m) = basis::split_index(i);
                Coefficient { k, l, m, value }
            })
            .collect();
        Self {
            header: SnapshotHeader {
                band_limit: field.band_limit(),
                grid,
                t,
                config_hash: config_hash.to_string(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
            },
            coefficients,
        }
    }

    pub fn to_field(&self) -> Result<SpectralField> {
        let k = self.header.band_limit;
        let mut f = SpectralField::zeros(k);
        for c in &self.coefficients {
            if c.k > k || c.l > c.k || c.m.unsigned_abs() as usize > c.l {
                return Err(Error::Parameter(format!("snapshot coefficient ({}, {}, {}) out of range", c.k, c.l, c.m)));
            }
            f.coeffs_mut()[basis::flat_index(c.k, c.l, c.m)] = c.value;
        }
        Ok(f)
    }
}

pub fn save_snapshot(path: &Path, snap: &SnapshotFile) -> Result<()> {
    let text = serde_json::to_string_pretty(snap)?;
    write_atomic(path, text.as_bytes())
}

pub fn load_snapshot(path: &Path) -> Result<Snapshot> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: SnapshotFile = serde_json::from_str(&text)?;
    let field = file.to_field()?;
    Ok(Snapshot { header: file.header, field })
}

/// Reads a JSON list of critical points.
pub fn load_morse_data(path: &Path) -> Result<Vec<crate::morse::MorseDatum>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    write_atomic(path, text.as_bytes())
}

/// Grid values of a band-limited `f` on a grid, for quick positivity checks.
pub fn sample_on(space: &SpectralSpace, f: &SpectralField) -> Result<GridField> {
    space.synthesize(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fspec_parsing() {
        assert_eq!(FSpec::parse("const2").unwrap(), FSpec::Const2);
        assert_eq!(FSpec::parse("axial:0.3").unwrap(), FSpec::Axial { delta: 0.3 });
        let h = FSpec::parse("harmonics:2.1.0=0.1,1.0.0=-0.2").unwrap();
        assert_eq!(h, FSpec::Harmonics { terms: vec![(2, 1, 0, 0.1), (1, 0, 0, -0.2)] });
        assert_eq!(FSpec::parse(&h.to_string()).unwrap(), h);
        assert!(FSpec::parse("harmonics:1.2.0=1").is_err());
        assert!(FSpec::parse("wobbly").is_err());
        assert!(matches!(FSpec::Axial { delta: 5.0 }.to_field(), Err(Error::Positivity { .. })));
        let f = FSpec::Axial { delta: 0.3 }.to_field().unwrap();
        assert!((f.mean() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn init_parsing() {
        let s = InitSpec::parse("bubble:0,0,0,2,0.6+random:0.05").unwrap();
        assert_eq!(s.0[0], InitTerm::Bubble { p: [0.0, 0.0, 0.0, 1.0], eps: 0.6 });
        assert_eq!(s.0[1], InitTerm::Random { amplitude: 0.05 });
        assert!(InitSpec::parse("bubble:1,2").is_err());
    }

    #[test]
    fn key_value_files() {
        let kv = parse_key_values("# comment\nK = 8\n\ndt=1e-3 # trailing\n").unwrap();
        assert_eq!(kv, vec![("K".into(), "8".into(), 2), ("dt".into(), "1e-3".into(), 4)]);
        assert_eq!(parse_key_values("bogus = 1").unwrap_err().0, 1);
        assert!(parse_key_values("K = 1\nK = 2").is_err());
        assert!(parse_key_values("K 1").is_err());
    }

    #[test]
    fn overrides_and_validation() {
        let o = |k: &str, v: &str| (k.to_string(), v.to_string());
        let cfg = RunConfig::from_sources(None, &[o("K", "12"), o("dt", "1e-3"), o("f", "const2")]).unwrap();
        assert_eq!(cfg.flow.band_limit, 12);
        assert!(RunConfig::from_sources(None, &[o("K", "-4")]).is_err());
        assert!(RunConfig::from_sources(None, &[o("K", "4"), o("K", "5")]).is_err());
        assert!(RunConfig::from_sources(None, &[o("mystery", "1")]).is_err());
    }

    #[test]
    fn config_text_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.set("f", "axial:0.25").unwrap();
        cfg.set("w0", "bubble:0,0,0,1,0.5+random:0.01").unwrap();
        cfg.set("sigma_mode", "max_grid").unwrap();
        let mut back = RunConfig::default();
        for (k, v, _) in parse_key_values(&cfg.to_text()).unwrap() {
            back.set(&k, &v).unwrap();
        }
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn float_text_round_trips() {
        for v in [std::f64::consts::PI, 1e-300, -2.5e17, 0.1 + 0.2] {
            assert_eq!(fmt_float(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn empty_csv_is_header_only() {
        assert_eq!(diagnostics_csv(&[]), format!("{CSV_HEADER}\n"));
    }
}
