//! Seeded random instances: states, channels, POVMs and unitaries.
//!
//! Every generator takes an explicit [`Rng64`]; there is no global randomness.
//! States are normalized `G G†` with complex Gaussian `G`, unitaries and
//! isometries come from QR of Gaussian matrices with the phase correction that
//! makes them Haar distributed, channels are Stinespring isometries cut into
//! Kraus blocks, and POVMs are random PSD families normalized by `S^{-1/2}`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c64, support_pinv, ComplexMatrix, ComplexVector};
use crate::qobjects::{KrausChannel, Povm};

/// Name reported alongside every seed.
pub const GENERATOR_NAME: &str = "ChaCha8Rng::seed_from_u64";

/// The crate's deterministic generator.
#[derive(Debug, Clone)]
pub struct Rng64(ChaCha8Rng);

impl Rng64 {
    pub fn seed(seed: u64) -> Self {
        Rng64(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn uniform(&mut self) -> f64 {
        self.0.random::<f64>()
    }

    pub fn normal(&mut self) -> f64 {
        self.0.sample(StandardNormal)
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.0.random_range(0..n)
    }

    pub fn complex_normal(&mut self) -> Complex64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        c64(self.normal() * s, self.normal() * s)
    }
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut Rng64) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| rng.complex_normal())
}

pub fn random_vector(n: usize, rng: &mut Rng64) -> ComplexVector {
    ComplexVector::from_fn(n, |_, _| rng.complex_normal())
}

pub fn random_unit_vector(n: usize, rng: &mut Rng64) -> ComplexVector {
    random_vector(n, rng).normalize()
}

pub fn random_hermitian(n: usize, rng: &mut Rng64) -> ComplexMatrix {
    let g = gaussian_matrix(n, n, rng);
    (&g + g.adjoint()).scale(0.5)
}

/// Density operator of rank `min(rank, d)`.
pub fn random_density(d: usize, rank: usize, rng: &mut Rng64) -> ComplexMatrix {
    let g = gaussian_matrix(d, rank.min(d).max(1), rng);
    let rho = &g * g.adjoint();
    let t = rho.trace().re;
    crate::linalg::hermitize(&rho.unscale(t))
}

/// Random real probability vector.
pub fn random_probabilities(n: usize, rng: &mut Rng64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| -rng.uniform().max(1e-300).ln()).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

/// `rows x cols` matrix with orthonormal columns (`rows >= cols`).
pub fn random_isometry(rows: usize, cols: usize, rng: &mut Rng64) -> ComplexMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let g = gaussian_matrix(rows, cols, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..cols {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::ONE };
        let col = q.column(k) * phase;
        q.set_column(k, &col);
    }
    q
}

pub fn random_unitary(d: usize, rng: &mut Rng64) -> ComplexMatrix {
    random_isometry(d, d, rng)
}

/// Trace-preserving channel with `n_kraus` Kraus operators.
pub fn random_channel(din: usize, dout: usize, n_kraus: usize, rng: &mut Rng64) -> KrausChannel {
    let n_kraus = n_kraus.max(din.div_ceil(dout));
    let v = random_isometry(dout * n_kraus, din, rng);
    let kraus = (0..n_kraus).map(|mu| v.rows(mu * dout, dout).into_owned()).collect();
    KrausChannel::new(kraus).expect("random Stinespring channel is valid")
}

pub fn random_unitary_channel(d: usize, rng: &mut Rng64) -> KrausChannel {
    KrausChannel::new(vec![random_unitary(d, rng)]).expect("unitary channel is valid")
}

/// POVM with `n` elements in general position.
pub fn random_povm(d: usize, n: usize, rng: &mut Rng64) -> Povm {
    let raw: Vec<ComplexMatrix> = (0..n).map(|_| random_density(d, d, rng)).collect();
    let sum = raw.iter().fold(ComplexMatrix::zeros(d, d), |acc, e| acc + e);
    let (inv_half, _) = support_pinv(&sum, -0.5).expect("sum of PSD is PSD");
    let elements = raw
        .iter()
        .map(|e| crate::linalg::hermitize(&(&inv_half * e * &inv_half)))
        .collect();
    Povm::unlabeled(elements).expect("normalized POVM is valid")
}

/// Column-stochastic matrix with `rows` outcomes and `cols` inputs.
pub fn random_stochastic(rows: usize, cols: usize, rng: &mut Rng64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for j in 0..cols {
        let col = random_probabilities(rows, rng);
        for (i, p) in col.into_iter().enumerate() {
            m[(i, j)] = p;
        }
    }
    m
}
