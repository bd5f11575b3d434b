//! Reference implementations assembled directly from operator algebra,
//! independent of the element-wise generator.

#![allow(dead_code)]

use lqed::{BasisIndex, Complex64, DensityMatrix, Dims};
use nalgebra::{DMatrix, DVector, Matrix3, SymmetricEigen};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Product basis `|level> ⊗ |k> ⊗ |m>` with its own flat ordering.
pub struct Basis {
    pub kmax: usize,
    pub mmax: usize,
    pub states: Vec<BasisIndex>,
}

impl Basis {
    pub fn new(kmax: usize, mmax: usize) -> Self {
        let mut states = Vec::new();
        for level in 1..=3u8 {
            for k in 0..=kmax {
                for m in 0..=mmax {
                    states.push(BasisIndex::new(level, k, m));
                }
            }
        }
        Self { kmax, mmax, states }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn position(&self, b: BasisIndex) -> Option<usize> {
        self.states.iter().position(|s| *s == b)
    }

    /// Matrix of an operator given by its action on basis kets.
    fn operator(&self, action: impl Fn(BasisIndex) -> Vec<(f64, BasisIndex)>) -> CMatrix {
        let d = self.dim();
        let mut op = CMatrix::zeros(d, d);
        for (j, &ket) in self.states.iter().enumerate() {
            for (amp, out) in action(ket) {
                if let Some(i) = self.position(out) {
                    op[(i, j)] += c(amp);
                }
            }
        }
        op
    }

    pub fn a1(&self) -> CMatrix {
        self.operator(|b| match b.k {
            0 => vec![],
            k => vec![((k as f64).sqrt(), BasisIndex::new(b.level, k - 1, b.m))],
        })
    }

    pub fn a2(&self) -> CMatrix {
        self.operator(|b| match b.m {
            0 => vec![],
            m => vec![((m as f64).sqrt(), BasisIndex::new(b.level, b.k, m - 1))],
        })
    }

    /// `|i><j|` on the atom.
    pub fn sigma(&self, i: u8, j: u8) -> CMatrix {
        self.operator(|b| {
            if b.level == j {
                vec![(1.0, BasisIndex::new(i, b.k, b.m))]
            } else {
                vec![]
            }
        })
    }

    /// Interaction `sum_j a_j^† σ_j3 + a_j σ_3j`.
    pub fn coupling(&self) -> CMatrix {
        let (a1, a2) = (self.a1(), self.a2());
        &a1.adjoint() * self.sigma(1, 3)
            + &a1 * self.sigma(3, 1)
            + &a2.adjoint() * self.sigma(2, 3)
            + &a2 * self.sigma(3, 2)
    }

    pub fn vectorize(&self, dm: &DensityMatrix) -> CVector {
        let d = self.dim();
        CVector::from_fn(d * d, |idx, _| dm[(self.states[idx / d], self.states[idx % d])])
    }

    pub fn unvectorize(&self, v: &CVector, dims: Dims) -> DensityMatrix {
        let d = self.dim();
        let mut dm = DensityMatrix::zeros(dims);
        for (idx, val) in v.iter().enumerate() {
            dm[(self.states[idx / d], self.states[idx % d])] = *val;
        }
        dm
    }

    /// Superoperator of `i[V, ρ] + κ Σ_j (a_j ρ a_j^† - {a_j^† a_j, ρ}/2)` acting
    /// on row-major vectorized ρ, using `vec(A ρ B) = (A ⊗ B^T) vec(ρ)`.
    pub fn generator(&self, kappa: f64) -> CMatrix {
        let d = self.dim();
        let id = CMatrix::identity(d, d);
        let v = self.coupling();
        let i = Complex64::new(0.0, 1.0);
        let mut l = (v.kronecker(&id) - id.kronecker(&v.transpose())) * i;
        for a in [self.a1(), self.a2()] {
            let ad = a.adjoint();
            let n = &ad * &a;
            l += (a.kronecker(&ad.transpose())
                - n.kronecker(&id) * c(0.5)
                - id.kronecker(&n.transpose()) * c(0.5))
                * c(kappa);
        }
        l
    }
}

/// `exp(t L) v` by a Taylor series on substeps short enough that each
/// series converges to machine precision.
pub fn taylor_expm_apply(l: &CMatrix, v: &CVector, t: f64) -> CVector {
    let norm = l
        .row_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let substeps = ((norm * t.abs()) / 0.5).ceil().max(1.0) as usize;
    let h = t / substeps as f64;
    let mut out = v.clone();
    for _ in 0..substeps {
        let mut term = out.clone();
        let mut sum = out.clone();
        for n in 1..60 {
            term = (l * &term) * c(h / n as f64);
            sum += &term;
            if term.norm() < 1e-18 * sum.norm() {
                break;
            }
        }
        out = sum;
    }
    out
}

/// Lossless single-photon populations `(O1, O2, O3)` from diagonalizing the
/// coupling on `{|1,1,0>, |3,0,0>, |2,0,1>}`.
pub fn three_state_populations(t: f64) -> [f64; 3] {
    let v = Matrix3::new(0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0);
    let eig = SymmetricEigen::new(v);
    // ψ(t) = exp(i V t) ψ(0) with ψ(0) = e_0
    let mut amp = [Complex64::new(0.0, 0.0); 3];
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let phase = Complex64::new(0.0, lambda * t).exp();
        let overlap = eig.eigenvectors[(0, j)];
        for (i, a) in amp.iter_mut().enumerate() {
            *a += phase * eig.eigenvectors[(i, j)] * overlap;
        }
    }
    [amp[0].norm_sqr(), amp[2].norm_sqr(), amp[1].norm_sqr()]
}

/// Elements whose κ = 0 derivative row of the dense generator is identically zero.
pub fn dense_inert_elements(basis: &Basis) -> Vec<bool> {
    let l = basis.generator(0.0);
    (0..l.nrows())
        .map(|r| l.row(r).iter().all(|z| *z == Complex64::new(0.0, 0.0)))
        .collect()
}
