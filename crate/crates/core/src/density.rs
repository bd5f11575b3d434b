//! Dense density matrix over the product basis `|n, k, m>` (electronic level,
//! field-1 photons, field-2 photons) and its observables.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::AmplitudeVector;

/// Tolerated Hermiticity defect (and imaginary part of populations).
pub const HERMITICITY_TOLERANCE: f64 = 1e-10;
/// Tolerated negative excursion of diagonal entries.
pub const POSITIVITY_TOLERANCE: f64 = 1e-8;

const SNAPSHOT_MAGIC: &[u8; 4] = b"LCDM";
const SNAPSHOT_VERSION: u32 = 1;

/// Fock cutoffs for the two modes: `k` in `0..=kmax` couples level 1 to 3,
/// `m` in `0..=mmax` couples level 2 to 3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Dims {
    pub kmax: usize,
    pub mmax: usize,
}

impl Dims {
    pub fn new(kmax: usize, mmax: usize) -> Self {
        Self { kmax, mmax }
    }

    /// Hilbert-space dimension `3 (kmax + 1) (mmax + 1)`.
    pub fn dim(&self) -> usize {
        3 * (self.kmax + 1) * (self.mmax + 1)
    }

    /// `((n - 1)(kmax + 1) + k)(mmax + 1) + m`
    #[inline]
    pub fn flat(&self, idx: BasisIndex) -> usize {
        ((idx.level as usize - 1) * (self.kmax + 1) + idx.k) * (self.mmax + 1) + idx.m
    }

    #[inline]
    pub fn index(&self, flat: usize) -> BasisIndex {
        let m = flat % (self.mmax + 1);
        let rest = flat / (self.mmax + 1);
        let k = rest % (self.kmax + 1);
        let level = (rest / (self.kmax + 1)) as u8 + 1;
        BasisIndex { level, k, m }
    }

    /// Flat index of `(level, k, m)` given as signed offsets, if inside the basis.
    #[inline]
    pub fn try_flat(&self, level: i64, k: i64, m: i64) -> Option<usize> {
        if !(1..=3).contains(&level)
            || k < 0
            || m < 0
            || k as usize > self.kmax
            || m as usize > self.mmax
        {
            return None;
        }
        Some(self.flat(BasisIndex {
            level: level as u8,
            k: k as usize,
            m: m as usize,
        }))
    }

    pub fn contains(&self, idx: BasisIndex) -> bool {
        (1..=3).contains(&idx.level) && idx.k <= self.kmax && idx.m <= self.mmax
    }

    pub fn basis(&self) -> impl Iterator<Item = BasisIndex> + '_ {
        (0..self.dim()).map(|i| self.index(i))
    }
}

/// One basis state `|n, k, m>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisIndex {
    pub level: u8,
    pub k: usize,
    pub m: usize,
}

impl BasisIndex {
    pub fn new(level: u8, k: usize, m: usize) -> Self {
        Self { level, k, m }
    }

    /// Quanta conserved by the lossless coupling: photons plus one for the upper level.
    pub fn excitation(&self) -> usize {
        self.k + self.m + usize::from(self.level == 3)
    }
}

impl fmt::Display for BasisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.level, self.k, self.m)
    }
}

impl FromStr for BasisIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [n, k, m] = parts.as_slice() else {
            return Err(Error::parse("basis index", s, "expected `n,k,m`"));
        };
        let level: u8 = n
            .parse()
            .map_err(|e| Error::parse("basis index", s, format!("{e}")))?;
        if !(1..=3).contains(&level) {
            return Err(Error::parse("basis index", s, "level must be 1, 2 or 3"));
        }
        let k = k
            .parse()
            .map_err(|e| Error::parse("basis index", s, format!("{e}")))?;
        let m = m
            .parse()
            .map_err(|e| Error::parse("basis index", s, format!("{e}")))?;
        Ok(Self { level, k, m })
    }
}

/// A density-matrix element `p_{row; col}`, written `n,k,m;n',k',m'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ElementIndex {
    pub row: BasisIndex,
    pub col: BasisIndex,
}

impl ElementIndex {
    pub fn new(row: BasisIndex, col: BasisIndex) -> Self {
        Self { row, col }
    }

    pub fn diagonal(idx: BasisIndex) -> Self {
        Self { row: idx, col: idx }
    }

    pub fn is_diagonal(&self) -> bool {
        self.row == self.col
    }
}

impl fmt::Display for ElementIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};{}", self.row, self.col)
    }
}

impl FromStr for ElementIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (row, col) = s
            .split_once(';')
            .ok_or_else(|| Error::parse("element", s, "expected `n,k,m;n',k',m'`"))?;
        Ok(Self {
            row: row.parse()?,
            col: col.parse()?,
        })
    }
}

impl TryFrom<String> for ElementIndex {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<ElementIndex> for String {
    fn from(e: ElementIndex) -> String {
        e.to_string()
    }
}

/// Row-major `D x D` complex matrix addressed by flat basis indices.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dims: Dims,
    data: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn zeros(dims: Dims) -> Self {
        let d = dims.dim();
        Self {
            dims,
            data: vec![Complex64::new(0.0, 0.0); d * d],
        }
    }

    pub fn from_raw(dims: Dims, data: Vec<Complex64>) -> Result<Self> {
        let d = dims.dim();
        if data.len() != d * d {
            return Err(Error::Integrity(format!(
                "expected {} entries for D = {d}, got {}",
                d * d,
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    /// Matrix with a single unit entry at `(row, col)`.
    pub fn unit(dims: Dims, row: BasisIndex, col: BasisIndex) -> Self {
        let mut dm = Self::zeros(dims);
        dm[(row, col)] = Complex64::new(1.0, 0.0);
        dm
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.dim()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_raw(self) -> Vec<Complex64> {
        self.data
    }

    #[inline]
    pub fn get_flat(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim() + col]
    }

    pub fn element(&self, e: ElementIndex) -> Complex64 {
        self[(e.row, e.col)]
    }

    pub fn trace(&self) -> f64 {
        let d = self.dim();
        (0..d).map(|i| self.data[i * d + i].re).sum()
    }

    /// `sum |p_{r;c}|^2`, equal to `Tr rho^2` for Hermitian input.
    pub fn purity(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `max |p_{r;c} - conj(p_{c;r})|`
    pub fn hermiticity_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in r..d {
                let diff = self.data[r * d + c] - self.data[c * d + r].conj();
                worst = worst.max(diff.norm());
            }
        }
        worst
    }

    /// Replaces the matrix by `(rho + rho^dagger) / 2`.
    pub fn hermitize(&mut self) {
        let d = self.dim();
        for r in 0..d {
            for c in r..d {
                let a = self.data[r * d + c];
                let b = self.data[c * d + r];
                let upper = (a + b.conj()) * 0.5;
                self.data[r * d + c] = upper;
                self.data[c * d + r] = upper.conj();
            }
        }
    }

    /// Level populations `O_n = sum_{k,m} p_{n,k,m; n,k,m}`.
    pub fn populations(&self) -> Result<[f64; 3]> {
        let mut pops = [0.0; 3];
        for (i, idx) in self.dims.basis().enumerate() {
            let p = self.get_flat(i, i);
            if p.im.abs() >= HERMITICITY_TOLERANCE {
                return Err(Error::Integrity(format!(
                    "diagonal element {idx} has imaginary part {:.3e}",
                    p.im
                )));
            }
            pops[idx.level as usize - 1] += p.re;
        }
        Ok(pops)
    }

    /// `(<n_1>, <n_2>)`
    pub fn mean_photon_numbers(&self) -> (f64, f64) {
        let mut n1 = 0.0;
        let mut n2 = 0.0;
        for (i, idx) in self.dims.basis().enumerate() {
            let p = self.get_flat(i, i).re;
            n1 += idx.k as f64 * p;
            n2 += idx.m as f64 * p;
        }
        (n1, n2)
    }

    pub fn min_diagonal(&self) -> f64 {
        (0..self.dim())
            .map(|i| self.get_flat(i, i).re)
            .fold(f64::INFINITY, f64::min)
    }

    /// Binary snapshot: `LCDM`, version, kmax, mmax (u32 LE), then the
    /// row-major entries as little-endian `(re, im)` f64 pairs.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
        w.write_all(&(self.dims.kmax as u32).to_le_bytes())?;
        w.write_all(&(self.dims.mmax as u32).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.data.len() * 16);
        for c in &self.data {
            buf.extend_from_slice(&c.re.to_le_bytes());
            buf.extend_from_slice(&c.im.to_le_bytes());
        }
        w.write_all(&buf)
    }

    pub fn read_snapshot<R: Read>(mut r: R) -> Result<Self> {
        let bad = |what: &str| Error::Integrity(format!("snapshot: {what}"));
        let mut head = [0u8; 16];
        r.read_exact(&mut head).map_err(|_| bad("truncated header"))?;
        if &head[..4] != SNAPSHOT_MAGIC {
            return Err(bad("bad magic"));
        }
        let word = |i: usize| u32::from_le_bytes(head[i..i + 4].try_into().unwrap());
        if word(4) != SNAPSHOT_VERSION {
            return Err(bad("unsupported version"));
        }
        let dims = Dims::new(word(8) as usize, word(12) as usize);
        let n = dims.dim() * dims.dim();
        let mut bytes = vec![0u8; n * 16];
        r.read_exact(&mut bytes).map_err(|_| bad("truncated body"))?;
        let data = bytes
            .chunks_exact(16)
            .map(|b| {
                Complex64::new(
                    f64::from_le_bytes(b[..8].try_into().unwrap()),
                    f64::from_le_bytes(b[8..].try_into().unwrap()),
                )
            })
            .collect();
        Ok(Self { dims, data })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_snapshot(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_snapshot(std::io::BufReader::new(file))
    }
}

impl std::ops::Index<(BasisIndex, BasisIndex)> for DensityMatrix {
    type Output = Complex64;

    fn index(&self, (row, col): (BasisIndex, BasisIndex)) -> &Complex64 {
        &self.data[self.dims.flat(row) * self.dims.dim() + self.dims.flat(col)]
    }
}

impl std::ops::IndexMut<(BasisIndex, BasisIndex)> for DensityMatrix {
    fn index_mut(&mut self, (row, col): (BasisIndex, BasisIndex)) -> &mut Complex64 {
        let d = self.dims.dim();
        let i = self.dims.flat(row) * d + self.dims.flat(col);
        &mut self.data[i]
    }
}

/// Product initial state with the emitter in level 1:
/// `p_{1,k,m; 1,k',m'} = c_k c'_m conj(c_k') conj(c'_m')`, all other entries zero.
pub fn initial_density_matrix(psi1: &AmplitudeVector, psi2: &AmplitudeVector) -> DensityMatrix {
    let dims = Dims::new(psi1.kmax(), psi2.kmax());
    let mut dm = DensityMatrix::zeros(dims);
    let d = dims.dim();
    let block = (dims.kmax + 1) * (dims.mmax + 1);
    // Level 1 occupies the first `block` flat indices, ordered as (k, m).
    let state: Vec<Complex64> = psi1
        .amplitudes()
        .iter()
        .flat_map(|&ck| psi2.amplitudes().iter().map(move |&cm| ck * cm))
        .collect();
    for r in 0..block {
        for c in 0..block {
            dm.data[r * d + c] = state[r] * state[c].conj();
        }
    }
    dm
}

/// Interacting vs. non-interacting density-matrix elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElementClass {
    /// Driven by the lossless coupling.
    Interacting,
    /// Zero time derivative without losses, whatever the rest of the matrix holds.
    NonInteracting,
}

/// Closed-form classification of `p_{row; col}`.
///
/// A side of the element is inert when no coupling term can reach it: level 1
/// with an empty first mode, level 2 with an empty second mode, or level 3 at
/// both cutoffs (where the basis has no partner states left). The element is
/// non-interacting exactly when both sides are inert.
pub fn classify_element(dims: Dims, row: BasisIndex, col: BasisIndex) -> ElementClass {
    let inert = |b: BasisIndex| match b.level {
        1 => b.k == 0,
        2 => b.m == 0,
        _ => b.k == dims.kmax && b.m == dims.mmax,
    };
    if inert(row) && inert(col) {
        ElementClass::NonInteracting
    } else {
        ElementClass::Interacting
    }
}
