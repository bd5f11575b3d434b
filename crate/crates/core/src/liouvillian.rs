//! Right-hand side of the element-wise master equation in the interaction
//! picture at zero detuning, time in units of hbar/g and loss rate in g/hbar.
//!
//! Every element `p_{n,k,m; n',k',m'}` receives eight coupling terms (four on
//! each side, with the 1<->2 dipole-forbidden pairs gated off) and three loss
//! terms (one jump per mode plus the diagonal decay). Reads outside the Fock
//! cutoffs contribute zero.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{BasisIndex, DensityMatrix, Dims, ElementClass};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Offset applied to one side of the target element to find the source element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shift {
    pub level: i8,
    pub k: i8,
    pub m: i8,
}

impl Shift {
    pub const NONE: Shift = Shift::new(0, 0, 0);

    pub const fn new(level: i8, k: i8, m: i8) -> Self {
        Self { level, k, m }
    }

    #[inline]
    fn apply(self, dims: &Dims, b: BasisIndex) -> Option<(usize, u8)> {
        let level = b.level as i64 + self.level as i64;
        let flat = dims.try_flat(level, b.k as i64 + self.k as i64, b.m as i64 + self.m as i64)?;
        Some((flat, level as u8))
    }
}

/// Photon-number factor under the square root of a coupling term, read from
/// the target element on the shifted side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantum {
    K,
    KPlusOne,
    M,
    MPlusOne,
}

impl Quantum {
    #[inline]
    fn of(self, b: BasisIndex) -> f64 {
        match self {
            Quantum::K => b.k as f64,
            Quantum::KPlusOne => (b.k + 1) as f64,
            Quantum::M => b.m as f64,
            Quantum::MPlusOne => (b.m + 1) as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coefficient {
    /// `sign * i * sqrt(quantum)`; `+` for the row side, `-` for the column side.
    Coupling { sign: i8, quantum: Quantum },
    /// `kappa sqrt((k+1)(k'+1))`
    JumpFieldOne,
    /// `kappa sqrt((m+1)(m'+1))`
    JumpFieldTwo,
    /// `-kappa (k + k' + m + m') / 2`
    Decay,
}

/// One source contribution to the derivative of every element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StencilTerm {
    pub row_shift: Shift,
    pub col_shift: Shift,
    pub coefficient: Coefficient,
    /// Drop the term when the shifted side links levels 1 and 2.
    pub forbid_one_two: bool,
}

const fn coupling(row: Shift, col: Shift, sign: i8, quantum: Quantum, gate: bool) -> StencilTerm {
    StencilTerm {
        row_shift: row,
        col_shift: col,
        coefficient: Coefficient::Coupling { sign, quantum },
        forbid_one_two: gate,
    }
}

const fn loss(row: Shift, col: Shift, coefficient: Coefficient) -> StencilTerm {
    StencilTerm {
        row_shift: row,
        col_shift: col,
        coefficient,
        forbid_one_two: false,
    }
}

/// The full stencil: 8 coupling terms followed by 3 loss terms.
pub const STENCIL: [StencilTerm; 11] = [
    // mode 1, 1 <-> 3
    coupling(Shift::new(2, -1, 0), Shift::NONE, 1, Quantum::K, false),
    coupling(Shift::new(-2, 1, 0), Shift::NONE, 1, Quantum::KPlusOne, false),
    coupling(Shift::NONE, Shift::new(2, -1, 0), -1, Quantum::K, false),
    coupling(Shift::NONE, Shift::new(-2, 1, 0), -1, Quantum::KPlusOne, false),
    // mode 2, 2 <-> 3
    coupling(Shift::new(1, 0, -1), Shift::NONE, 1, Quantum::M, true),
    coupling(Shift::new(-1, 0, 1), Shift::NONE, 1, Quantum::MPlusOne, true),
    coupling(Shift::NONE, Shift::new(1, 0, -1), -1, Quantum::M, true),
    coupling(Shift::NONE, Shift::new(-1, 0, 1), -1, Quantum::MPlusOne, true),
    // cavity loss
    loss(Shift::new(0, 1, 0), Shift::new(0, 1, 0), Coefficient::JumpFieldOne),
    loss(Shift::new(0, 0, 1), Shift::new(0, 0, 1), Coefficient::JumpFieldTwo),
    loss(Shift::NONE, Shift::NONE, Coefficient::Decay),
];

impl StencilTerm {
    pub fn is_coupling(&self) -> bool {
        matches!(self.coefficient, Coefficient::Coupling { .. })
    }

    /// Source element `(row, col)` and its non-zero coefficient for the target
    /// `p_{row; col}`, or `None` when the term is out of range, gated off, or zero.
    #[inline]
    pub fn source(
        &self,
        dims: &Dims,
        row: BasisIndex,
        col: BasisIndex,
        kappa: f64,
    ) -> Option<(usize, usize, Complex64)> {
        let (src_row, row_level) = self.row_shift.apply(dims, row)?;
        let (src_col, col_level) = self.col_shift.apply(dims, col)?;
        if self.forbid_one_two {
            let pair = |a: u8, b: u8| (a == 1 && b == 2) || (a == 2 && b == 1);
            if pair(row.level, row_level) || pair(col.level, col_level) {
                return None;
            }
        }
        let coefficient = match self.coefficient {
            Coefficient::Coupling { sign, quantum } => {
                let side = if sign > 0 { row } else { col };
                let q = quantum.of(side);
                if q == 0.0 {
                    return None;
                }
                I * (sign as f64 * q.sqrt())
            }
            Coefficient::JumpFieldOne => {
                Complex64::new(kappa * (((row.k + 1) * (col.k + 1)) as f64).sqrt(), 0.0)
            }
            Coefficient::JumpFieldTwo => {
                Complex64::new(kappa * (((row.m + 1) * (col.m + 1)) as f64).sqrt(), 0.0)
            }
            Coefficient::Decay => Complex64::new(
                -0.5 * kappa * (row.k + col.k + row.m + col.m) as f64,
                0.0,
            ),
        };
        if coefficient == Complex64::new(0.0, 0.0) {
            return None;
        }
        Some((src_row, src_col, coefficient))
    }
}

/// Time derivative of `dm` for loss rate `kappa`, evaluated element by element
/// without forming any superoperator.
pub fn apply_liouvillian(dm: &DensityMatrix, kappa: f64) -> DensityMatrix {
    let dims = dm.dims();
    let d = dims.dim();
    let basis: Vec<BasisIndex> = dims.basis().collect();
    let input = dm.as_slice();
    let mut out = DensityMatrix::zeros(dims);
    out.as_mut_slice()
        .par_chunks_mut(d)
        .enumerate()
        .for_each(|(r, out_row)| {
            let row = basis[r];
            for (c, slot) in out_row.iter_mut().enumerate() {
                let col = basis[c];
                let mut acc = Complex64::new(0.0, 0.0);
                for term in &STENCIL {
                    if let Some((sr, sc, coef)) = term.source(&dims, row, col, kappa) {
                        acc += coef * input[sr * d + sc];
                    }
                }
                *slot = acc;
            }
        });
    out
}

/// Non-interacting elements that feed the electronic steady states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NieElement {
    /// `p_{1,0,m; 1,0,m}`
    Level1 { m: usize },
    /// `p_{2,k,0; 2,k,0}`
    Level2 { k: usize },
}

impl NieElement {
    pub fn index(self) -> BasisIndex {
        match self {
            NieElement::Level1 { m } => BasisIndex::new(1, 0, m),
            NieElement::Level2 { k } => BasisIndex::new(2, k, 0),
        }
    }
}

/// Specialized derivative of a population-carrying non-interacting element:
/// `kappa [p_IE + (q+1) p_NIE(q+1) - q p]` with `q` the photon number of its mode.
///
/// Panics if the element lies outside `dm`'s cutoffs.
pub fn nie_rhs(dm: &DensityMatrix, kappa: f64, which: NieElement) -> f64 {
    let dims = dm.dims();
    let diag = |level: i64, k: i64, m: i64| -> f64 {
        dims.try_flat(level, k, m)
            .map_or(0.0, |i| dm.get_flat(i, i).re)
    };
    let target = which.index();
    assert!(dims.contains(target), "element {target} outside cutoffs");
    match which {
        NieElement::Level1 { m } => {
            let m_ = m as i64;
            let q = m as f64;
            kappa * (diag(1, 1, m_) + (q + 1.0) * diag(1, 0, m_ + 1) - q * diag(1, 0, m_))
        }
        NieElement::Level2 { k } => {
            let k_ = k as i64;
            let q = k as f64;
            kappa * (diag(2, k_, 1) + (q + 1.0) * diag(2, k_ + 1, 0) - q * diag(2, k_, 0))
        }
    }
}

/// Which density-matrix elements the compiled generator tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sector {
    /// Every element.
    Full,
    /// Only elements whose row and column carry equal excitation
    /// (photons plus upper-level occupation). The generator never mixes
    /// excitation differences, so this block evolves on its own and contains
    /// every diagonal element.
    #[default]
    ExcitationDiagonal,
}

const ABSENT: u32 = u32::MAX;

/// The stencil resolved once for fixed cutoffs, loss rate and sector: each
/// tracked element keeps a flat list of `(source position, coefficient)`.
#[derive(Debug, Clone)]
pub struct CompiledLiouvillian {
    dims: Dims,
    kappa: f64,
    sector: Sector,
    elements: Vec<(u32, u32)>,
    position: Vec<u32>,
    offsets: Vec<u32>,
    sources: Vec<u32>,
    coeffs: Vec<Complex64>,
    adjoint: Vec<u32>,
}

/// Work below this many tracked elements stays on the calling thread.
const PARALLEL_THRESHOLD: usize = 1 << 15;
const CHUNK: usize = 4096;

impl CompiledLiouvillian {
    pub fn new(dims: Dims, kappa: f64, sector: Sector) -> Self {
        let d = dims.dim();
        assert!(d * d < ABSENT as usize, "basis too large for 32-bit element positions");
        let basis: Vec<BasisIndex> = dims.basis().collect();

        let elements: Vec<(u32, u32)> = match sector {
            Sector::Full => (0..d)
                .flat_map(|r| (0..d).map(move |c| (r as u32, c as u32)))
                .collect(),
            Sector::ExcitationDiagonal => {
                let max_exc = dims.kmax + dims.mmax + 1;
                let mut shells = vec![Vec::new(); max_exc + 1];
                for (i, b) in basis.iter().enumerate() {
                    shells[b.excitation()].push(i as u32);
                }
                let mut el = Vec::new();
                for (r, b) in basis.iter().enumerate() {
                    for &c in &shells[b.excitation()] {
                        el.push((r as u32, c));
                    }
                }
                el
            }
        };

        let mut position = vec![ABSENT; d * d];
        for (p, &(r, c)) in elements.iter().enumerate() {
            position[r as usize * d + c as usize] = p as u32;
        }

        let mut offsets = Vec::with_capacity(elements.len() + 1);
        let mut sources = Vec::new();
        let mut coeffs = Vec::new();
        offsets.push(0u32);
        for &(r, c) in &elements {
            let (row, col) = (basis[r as usize], basis[c as usize]);
            for term in &STENCIL {
                if let Some((sr, sc, coef)) = term.source(&dims, row, col, kappa) {
                    let p = position[sr * d + sc];
                    assert_ne!(p, ABSENT, "sector not closed under the generator");
                    sources.push(p);
                    coeffs.push(coef);
                }
            }
            offsets.push(sources.len() as u32);
        }

        let adjoint = elements
            .iter()
            .map(|&(r, c)| position[c as usize * d + r as usize])
            .collect();

        Self {
            dims,
            kappa,
            sector,
            elements,
            position,
            offsets,
            sources,
            coeffs,
            adjoint,
        }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn sector(&self) -> Sector {
        self.sector
    }

    /// Number of tracked elements.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Number of stored stencil entries.
    pub fn nnz(&self) -> usize {
        self.sources.len()
    }

    pub fn position(&self, row: BasisIndex, col: BasisIndex) -> Option<usize> {
        if !self.dims.contains(row) || !self.dims.contains(col) {
            return None;
        }
        let d = self.dims.dim();
        let p = self.position[self.dims.flat(row) * d + self.dims.flat(col)];
        (p != ABSENT).then_some(p as usize)
    }

    /// Position of the transposed element for each tracked element.
    pub fn adjoint_positions(&self) -> &[u32] {
        &self.adjoint
    }

    /// Positions and basis states of all diagonal elements.
    pub fn diagonal(&self) -> Vec<(usize, BasisIndex)> {
        self.dims
            .basis()
            .enumerate()
            .map(|(i, b)| {
                let p = self.position[i * self.dims.dim() + i];
                (p as usize, b)
            })
            .collect()
    }

    /// Tracked entries of `dm`, in compiled order.
    pub fn gather(&self, dm: &DensityMatrix) -> Vec<Complex64> {
        assert_eq!(dm.dims(), self.dims);
        self.elements
            .iter()
            .map(|&(r, c)| dm.get_flat(r as usize, c as usize))
            .collect()
    }

    /// Dense matrix holding `state` on tracked elements and zero elsewhere.
    pub fn scatter(&self, state: &[Complex64]) -> DensityMatrix {
        let d = self.dims.dim();
        let mut dm = DensityMatrix::zeros(self.dims);
        let out = dm.as_mut_slice();
        for (&(r, c), &v) in self.elements.iter().zip(state) {
            out[r as usize * d + c as usize] = v;
        }
        dm
    }

    /// `out = L(state)` on tracked elements.
    pub fn apply(&self, state: &[Complex64], out: &mut [Complex64]) {
        assert_eq!(state.len(), self.len());
        assert_eq!(out.len(), self.len());
        let row = |i: usize| -> Complex64 {
            let (a, b) = (self.offsets[i] as usize, self.offsets[i + 1] as usize);
            self.sources[a..b]
                .iter()
                .zip(&self.coeffs[a..b])
                .fold(Complex64::new(0.0, 0.0), |acc, (&s, &c)| acc + c * state[s as usize])
        };
        if self.len() < PARALLEL_THRESHOLD {
            for (i, o) in out.iter_mut().enumerate() {
                *o = row(i);
            }
        } else {
            out.par_chunks_mut(CHUNK).enumerate().for_each(|(ci, chunk)| {
                for (j, o) in chunk.iter_mut().enumerate() {
                    *o = row(ci * CHUNK + j);
                }
            });
        }
    }
}

/// Classifies every element `(row, col)` (row-major over flat indices) by
/// evaluating the lossless generator on each unit matrix and recording which
/// outputs can ever become non-zero.
pub fn brute_force_classification(dims: Dims) -> Vec<ElementClass> {
    let d = dims.dim();
    let mut reached = vec![false; d * d];
    for r in 0..d {
        for c in 0..d {
            let unit = DensityMatrix::unit(dims, dims.index(r), dims.index(c));
            let deriv = apply_liouvillian(&unit, 0.0);
            for (slot, v) in reached.iter_mut().zip(deriv.as_slice()) {
                if v.norm() != 0.0 {
                    *slot = true;
                }
            }
        }
    }
    reached
        .into_iter()
        .map(|hit| {
            if hit {
                ElementClass::Interacting
            } else {
                ElementClass::NonInteracting
            }
        })
        .collect()
}
