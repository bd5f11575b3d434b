//! Truncated single-mode light states used as initial cavity fields.
//!
//! Amplitudes are generated by multiplicative recurrences, so no factorial is
//! ever formed and cutoffs in the hundreds are safe.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default bound on the norm left outside a truncated Fock expansion.
pub const DEFAULT_TRUNCATION_TOLERANCE: f64 = 1e-6;

/// Hard ceiling for automatic cutoff searches.
const MAX_CUTOFF: usize = 100_000;

/// Fock-amplitude expansion of one field mode, indexed by photon number `0..=kmax`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeVector {
    amps: Vec<Complex64>,
}

impl AmplitudeVector {
    /// Wraps raw amplitudes. The squared norm may not exceed one.
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::Domain("amplitude vector must be non-empty".into()));
        }
        if amps.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Domain("amplitudes must be finite".into()));
        }
        let norm: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
        if norm > 1.0 + 1e-12 {
            return Err(Error::Domain(format!(
                "squared norm {norm} exceeds one"
            )));
        }
        Ok(Self { amps })
    }

    pub fn vacuum(kmax: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); kmax + 1];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { amps }
    }

    pub fn kmax(&self) -> usize {
        self.amps.len() - 1
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `1 - sum |c_k|^2`, clamped at zero against roundoff.
    pub fn norm_deficit(&self) -> f64 {
        (1.0 - self.norm_sqr()).max(0.0)
    }

    pub fn mean_photon_number(&self) -> f64 {
        mean_photon_number(self)
    }

    /// Highest photon number carrying a non-zero amplitude.
    pub fn support_max(&self) -> usize {
        self.amps
            .iter()
            .rposition(|c| c.norm_sqr() > 0.0)
            .unwrap_or(0)
    }

    /// Same state on a different cutoff, padding with zeros or dropping the tail.
    pub fn resized(&self, kmax: usize) -> Self {
        let mut amps = self.amps.clone();
        amps.resize(kmax + 1, Complex64::new(0.0, 0.0));
        Self { amps }
    }
}

/// `sum_k k |c_k|^2`.
pub fn mean_photon_number(v: &AmplitudeVector) -> f64 {
    v.amps
        .iter()
        .enumerate()
        .map(|(k, c)| k as f64 * c.norm_sqr())
        .sum()
}

/// Coherent state `|alpha>` truncated at `kmax`, with the default tolerance.
pub fn coherent_amplitudes(alpha: Complex64, kmax: usize) -> Result<AmplitudeVector> {
    truncate(CoherentSeries::new(alpha), kmax, DEFAULT_TRUNCATION_TOLERANCE)
}

/// Squeezed vacuum with squeezing parameter `r e^{i theta}`, truncated at `kmax`.
pub fn squeezed_vacuum_amplitudes(r: f64, theta: f64, kmax: usize) -> Result<AmplitudeVector> {
    truncate(
        SqueezedSeries::new(r, theta)?,
        kmax,
        DEFAULT_TRUNCATION_TOLERANCE,
    )
}

/// Fock state `|n>` on the cutoff `kmax`.
pub fn fock_amplitudes(n: usize, kmax: usize) -> Result<AmplitudeVector> {
    if n > kmax {
        return Err(Error::Domain(format!(
            "Fock state |{n}> does not fit below cutoff kmax = {kmax}"
        )));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); kmax + 1];
    amps[n] = Complex64::new(1.0, 0.0);
    Ok(AmplitudeVector { amps })
}

/// c_{k+1} = c_k * alpha / sqrt(k + 1), starting from exp(-|alpha|^2 / 2).
#[derive(Debug, Clone)]
struct CoherentSeries {
    alpha: Complex64,
    next: Complex64,
    k: usize,
}

impl CoherentSeries {
    fn new(alpha: Complex64) -> Self {
        Self {
            alpha,
            next: Complex64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0),
            k: 0,
        }
    }
}

impl Iterator for CoherentSeries {
    type Item = Complex64;

    fn next(&mut self) -> Option<Complex64> {
        let out = self.next;
        self.k += 1;
        self.next = out * self.alpha / (self.k as f64).sqrt();
        Some(out)
    }
}

/// Amplitude on |2m> is (-1)^m sqrt((2m)!)/(2^m m!) e^{i m theta} tanh^m r / sqrt(cosh r);
/// consecutive even amplitudes differ by -e^{i theta} tanh r sqrt((2m+1)/(2m+2)).
#[derive(Debug, Clone)]
struct SqueezedSeries {
    ratio: Complex64,
    even: Complex64,
    k: usize,
}

impl SqueezedSeries {
    fn new(r: f64, theta: f64) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() || !theta.is_finite() {
            return Err(Error::Domain(format!(
                "squeezing requires finite r >= 0 and finite theta, got r = {r}, theta = {theta}"
            )));
        }
        Ok(Self {
            ratio: -Complex64::from_polar(r.tanh(), theta),
            even: Complex64::new(1.0 / r.cosh().sqrt(), 0.0),
            k: 0,
        })
    }
}

impl Iterator for SqueezedSeries {
    type Item = Complex64;

    fn next(&mut self) -> Option<Complex64> {
        let k = self.k;
        self.k += 1;
        if k % 2 == 1 {
            return Some(Complex64::new(0.0, 0.0));
        }
        let out = self.even;
        let m = (k / 2) as f64;
        self.even = out * self.ratio * ((2.0 * m + 1.0) / (2.0 * m + 2.0)).sqrt();
        Some(out)
    }
}

fn truncate(
    series: impl Iterator<Item = Complex64> + Clone,
    kmax: usize,
    tolerance: f64,
) -> Result<AmplitudeVector> {
    let amps: Vec<Complex64> = series.clone().take(kmax + 1).collect();
    let v = AmplitudeVector::new(amps)?;
    let deficit = v.norm_deficit();
    if deficit <= tolerance {
        return Ok(v);
    }
    let required_kmax = required_cutoff(series, tolerance)?;
    Err(Error::TruncationInsufficient {
        kmax,
        deficit,
        tolerance,
        required_kmax,
    })
}

fn required_cutoff(series: impl Iterator<Item = Complex64>, tolerance: f64) -> Result<usize> {
    let mut norm = 0.0;
    for (k, c) in series.take(MAX_CUTOFF + 1).enumerate() {
        norm += c.norm_sqr();
        if 1.0 - norm <= tolerance {
            return Ok(k);
        }
    }
    Err(Error::Domain(format!(
        "no cutoff below {MAX_CUTOFF} reaches norm deficit {tolerance:.1e}"
    )))
}

/// Photon statistics of an initial field.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldKind {
    Coherent { alpha: Complex64 },
    SqueezedVacuum { r: f64, theta: f64 },
    Fock { n: usize },
    Custom {
        /// File the amplitudes were read from, if any.
        source: Option<PathBuf>,
        amplitudes: Vec<Complex64>,
    },
}

/// An initial field state plus an optional cutoff override.
///
/// Textual form (used on the command line and in config files):
/// `coherent:alpha=<re>[+<im>i]`, `squeezed:r=<r>,theta=<theta>`, `fock:n=<n>`,
/// `custom:file=<path>` or `custom:amps=<re> <im>;<re> <im>;...`,
/// each optionally followed by `,kmax=<cutoff>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct FieldSpec {
    pub kind: FieldKind,
    pub kmax: Option<usize>,
}

impl FieldSpec {
    pub fn coherent(alpha: Complex64) -> Self {
        FieldKind::Coherent { alpha }.into()
    }

    pub fn squeezed_vacuum(r: f64, theta: f64) -> Self {
        FieldKind::SqueezedVacuum { r, theta }.into()
    }

    pub fn fock(n: usize) -> Self {
        FieldKind::Fock { n }.into()
    }

    pub fn vacuum() -> Self {
        Self::fock(0)
    }

    pub fn custom(amplitudes: Vec<Complex64>) -> Self {
        FieldKind::Custom {
            source: None,
            amplitudes,
        }
        .into()
    }

    /// Reads one `re im` pair per line; blank lines and `#` comments are skipped.
    pub fn custom_from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut amplitudes = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            amplitudes.push(parse_pair(line)?);
        }
        Ok(FieldKind::Custom {
            source: Some(path.to_path_buf()),
            amplitudes,
        }
        .into())
    }

    pub fn with_kmax(mut self, kmax: usize) -> Self {
        self.kmax = Some(kmax);
        self
    }

    /// Analytic mean photon number of the untruncated state.
    pub fn mean_photon_number(&self) -> f64 {
        match &self.kind {
            FieldKind::Coherent { alpha } => alpha.norm_sqr(),
            FieldKind::SqueezedVacuum { r, .. } => r.sinh().powi(2),
            FieldKind::Fock { n } => *n as f64,
            FieldKind::Custom { amplitudes, .. } => amplitudes
                .iter()
                .enumerate()
                .map(|(k, c)| k as f64 * c.norm_sqr())
                .sum(),
        }
    }

    /// Cutoff used when none is given explicitly.
    ///
    /// Fock and custom states use their exact support. Coherent and squeezed
    /// states use `ceil(<n> + 5 sqrt(<n> + 1))`, raised until the norm deficit
    /// is within `tolerance`.
    pub fn default_kmax(&self, tolerance: f64) -> Result<usize> {
        if let Some(k) = self.kmax {
            return Ok(k);
        }
        let heuristic = || {
            let n = self.mean_photon_number();
            (n + 5.0 * (n + 1.0).sqrt()).ceil() as usize
        };
        match &self.kind {
            FieldKind::Fock { n } => Ok(*n),
            FieldKind::Custom { amplitudes, .. } => Ok(AmplitudeVector::new(amplitudes.clone())?
                .support_max()),
            FieldKind::Coherent { alpha } => {
                Ok(heuristic().max(required_cutoff(CoherentSeries::new(*alpha), tolerance)?))
            }
            FieldKind::SqueezedVacuum { r, theta } => Ok(heuristic()
                .max(required_cutoff(SqueezedSeries::new(*r, *theta)?, tolerance)?)),
        }
    }

    /// Amplitudes on the cutoff `kmax`.
    pub fn amplitudes(&self, kmax: usize, tolerance: f64) -> Result<AmplitudeVector> {
        match &self.kind {
            FieldKind::Coherent { alpha } => truncate(CoherentSeries::new(*alpha), kmax, tolerance),
            FieldKind::SqueezedVacuum { r, theta } => {
                truncate(SqueezedSeries::new(*r, *theta)?, kmax, tolerance)
            }
            FieldKind::Fock { n } => fock_amplitudes(*n, kmax),
            FieldKind::Custom { amplitudes, .. } => {
                let full = AmplitudeVector::new(amplitudes.clone())?;
                let v = full.resized(kmax);
                let deficit = v.norm_deficit();
                if deficit > tolerance {
                    if full.norm_deficit() > tolerance {
                        return Err(Error::Domain(format!(
                            "custom amplitudes are not normalized (deficit {:.3e})",
                            full.norm_deficit()
                        )));
                    }
                    return Err(Error::TruncationInsufficient {
                        kmax,
                        deficit,
                        tolerance,
                        required_kmax: full.support_max(),
                    });
                }
                Ok(v)
            }
        }
    }
}

impl From<FieldKind> for FieldSpec {
    fn from(kind: FieldKind) -> Self {
        Self { kind, kmax: None }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            FieldKind::Coherent { alpha } => write!(f, "coherent:alpha={}", FmtComplex(*alpha))?,
            FieldKind::SqueezedVacuum { r, theta } => {
                write!(f, "squeezed:r={r},theta={theta}")?
            }
            FieldKind::Fock { n } => write!(f, "fock:n={n}")?,
            FieldKind::Custom {
                source: Some(path), ..
            } => write!(f, "custom:file={}", path.display())?,
            FieldKind::Custom {
                source: None,
                amplitudes,
            } => {
                f.write_str("custom:amps=")?;
                for (i, c) in amplitudes.iter().enumerate() {
                    if i > 0 {
                        f.write_str(";")?;
                    }
                    write!(f, "{} {}", c.re, c.im)?;
                }
            }
        }
        if let Some(k) = self.kmax {
            write!(f, ",kmax={k}")?;
        }
        Ok(())
    }
}

struct FmtComplex(Complex64);

impl fmt::Display for FmtComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.0;
        if c.im == 0.0 {
            write!(f, "{}", c.re)
        } else if c.im.is_sign_negative() {
            write!(f, "{}-{}i", c.re, -c.im)
        } else {
            write!(f, "{}+{}i", c.re, c.im)
        }
    }
}

impl FromStr for FieldSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::parse("field spec", s, "expected `<kind>:<params>`"))?;
        let kind = kind.trim().to_ascii_lowercase();

        // `custom:amps=` carries its own separators, so peel off `,kmax=` first.
        let (params, kmax) = match rest.rsplit_once(",kmax=") {
            Some((head, k)) => (
                head,
                Some(
                    k.trim()
                        .parse::<usize>()
                        .map_err(|e| Error::parse("field spec", s, format!("kmax: {e}")))?,
                ),
            ),
            None => (rest, None),
        };

        let kv = |key: &str| -> Result<Option<&str>> {
            let mut found = None;
            for part in params.split(',') {
                let (k, v) = part
                    .split_once('=')
                    .ok_or_else(|| Error::parse("field spec", s, format!("malformed `{part}`")))?;
                if k.trim() == key {
                    found = Some(v.trim());
                }
            }
            Ok(found)
        };
        let require = |key: &str| -> Result<&str> {
            kv(key)?.ok_or_else(|| Error::parse("field spec", s, format!("missing `{key}=`")))
        };
        let real = |key: &str, v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|e| Error::parse("field spec", s, format!("{key}: {e}")))
        };

        let kind = match kind.as_str() {
            "coherent" => FieldKind::Coherent {
                alpha: parse_complex(require("alpha")?)?,
            },
            "squeezed" => FieldKind::SqueezedVacuum {
                r: real("r", require("r")?)?,
                theta: match kv("theta")? {
                    Some(v) => real("theta", v)?,
                    None => 0.0,
                },
            },
            "fock" => FieldKind::Fock {
                n: require("n")?
                    .parse()
                    .map_err(|e| Error::parse("field spec", s, format!("n: {e}")))?,
            },
            "custom" => {
                if let Some(path) = params.strip_prefix("file=") {
                    FieldSpec::custom_from_file(path.trim())?.kind
                } else if let Some(list) = params.strip_prefix("amps=") {
                    FieldKind::Custom {
                        source: None,
                        amplitudes: list
                            .split(';')
                            .map(parse_pair)
                            .collect::<Result<Vec<_>>>()?,
                    }
                } else {
                    return Err(Error::parse(
                        "field spec",
                        s,
                        "custom fields need `file=<path>` or `amps=<re> <im>;...`",
                    ));
                }
            }
            other => {
                return Err(Error::parse(
                    "field spec",
                    s,
                    format!("unknown kind `{other}` (coherent, squeezed, fock, custom)"),
                ))
            }
        };
        Ok(FieldSpec { kind, kmax })
    }
}

impl TryFrom<String> for FieldSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<FieldSpec> for String {
    fn from(f: FieldSpec) -> String {
        f.to_string()
    }
}

fn parse_pair(line: &str) -> Result<Complex64> {
    let mut it = line.split_whitespace();
    let (Some(re), Some(im), None) = (it.next(), it.next(), it.next()) else {
        return Err(Error::parse("amplitude", line, "expected `<re> <im>`"));
    };
    let num = |v: &str| {
        v.parse::<f64>()
            .map_err(|e| Error::parse("amplitude", line, e.to_string()))
    };
    Ok(Complex64::new(num(re)?, num(im)?))
}

/// Parses `a`, `a+bi`, `a-bi` or `bi`.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let s = s.trim();
    let num = |v: &str| {
        v.parse::<f64>()
            .map_err(|e| Error::parse("complex number", s, e.to_string()))
    };
    let Some(body) = s.strip_suffix('i') else {
        return Ok(Complex64::new(num(s)?, 0.0));
    };
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    match split {
        Some(i) => {
            let im = match &body[i..] {
                "+" => 1.0,
                "-" => -1.0,
                v => num(v)?,
            };
            Ok(Complex64::new(num(&body[..i])?, im))
        }
        None => {
            let im = match body {
                "" | "+" => 1.0,
                "-" => -1.0,
                v => num(v)?,
            };
            Ok(Complex64::new(0.0, im))
        }
    }
}
