//! Joint statistics of two measurements: performed in parallel on a bipartite
//! state, or in sequence as preparation, evolution and measurement.

use nalgebra::DMatrix;

use crate::duality::{leifer_forward, BipartiteState, IsoPair};
use crate::error::{Error, Result};
use crate::linalg::{hermitize, kron, psd_sqrt, transpose_in, ComplexMatrix};
use crate::qobjects::{Check, Povm};
use crate::random::{Rng64, GENERATOR_NAME};
use crate::tol;

/// Probabilities indexed by (M outcome, N outcome).
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    probs: DMatrix<f64>,
    m_labels: Vec<String>,
    n_labels: Vec<String>,
}

impl JointTable {
    pub fn new(probs: DMatrix<f64>, m_labels: Vec<String>, n_labels: Vec<String>) -> Result<Self> {
        if probs.nrows() == 0 || probs.ncols() == 0 {
            return Err(Error::Shape("joint table is empty".into()));
        }
        if m_labels.len() != probs.nrows() || n_labels.len() != probs.ncols() {
            return Err(Error::Shape(format!(
                "{}x{} table with {} row and {} column labels",
                probs.nrows(),
                probs.ncols(),
                m_labels.len(),
                n_labels.len()
            )));
        }
        if let Some(bad) = probs.iter().find(|p| !p.is_finite() || **p < -tol::VALIDATION) {
            return Err(Error::validation("nonnegative", format!("table entry {bad}")));
        }
        let probs = probs.map(|p| p.max(0.0));
        let sum = probs.sum();
        if (sum - 1.0).abs() > tol::VALIDATION {
            return Err(Error::validation("normalized", format!("table sums to {sum}")));
        }
        Ok(JointTable {
            probs,
            m_labels,
            n_labels,
        })
    }

    fn labelled(probs: DMatrix<f64>, m: &Povm, n: &Povm) -> Result<Self> {
        Self::new(probs, m.labels().to_vec(), n.labels().to_vec())
    }

    pub fn probs(&self) -> &DMatrix<f64> {
        &self.probs
    }

    pub fn m_labels(&self) -> &[String] {
        &self.m_labels
    }

    pub fn n_labels(&self) -> &[String] {
        &self.n_labels
    }

    pub fn row_marginal(&self) -> Vec<f64> {
        self.probs.row_iter().map(|r| r.sum()).collect()
    }

    pub fn column_marginal(&self) -> Vec<f64> {
        self.probs.column_iter().map(|c| c.sum()).collect()
    }
}

/// `P(M,N) = Tr((M⊗N) τ)`.
pub fn joint_parallel(tau: &BipartiteState, m: &Povm, n: &Povm) -> Result<JointTable> {
    let (da, db) = tau.dims();
    if m.dim() != da || n.dim() != db {
        return Err(Error::Shape(format!(
            "POVM dimensions ({}, {}) do not match state dims ({da}, {db})",
            m.dim(),
            n.dim()
        )));
    }
    let mut probs = DMatrix::zeros(m.len(), n.len());
    for (i, a) in m.elements().iter().enumerate() {
        for (k, b) in n.elements().iter().enumerate() {
            probs[(i, k)] = (kron(a, b)? * tau.matrix()).trace().re;
        }
    }
    JointTable::labelled(probs, m, n)
}

/// `Q(M,N) = Tr(N · E(√ρ Mᵀ √ρ))`, transposes taken in the isomorphism basis.
pub fn joint_sequential(pair: &IsoPair, m: &Povm, n: &Povm, basis: Option<&ComplexMatrix>) -> Result<JointTable> {
    let (da, db) = pair.dims();
    if m.dim() != da || n.dim() != db {
        return Err(Error::Shape(format!(
            "POVM dimensions ({}, {}) do not match pair dims ({da}, {db})",
            m.dim(),
            n.dim()
        )));
    }
    let root = psd_sqrt(pair.rho().matrix())?;
    let mut probs = DMatrix::zeros(m.len(), n.len());
    for (i, a) in m.elements().iter().enumerate() {
        let prepared = hermitize(&(&root * transpose_in(a, basis) * &root));
        let evolved = pair.channel().apply(&prepared);
        for (k, b) in n.elements().iter().enumerate() {
            probs[(i, k)] = (b * &evolved).trace().re;
        }
    }
    JointTable::labelled(probs, m, n)
}

/// Largest elementwise gap between the parallel and sequential tables.
pub fn verify_equivalence(pair: &IsoPair, m: &Povm, n: &Povm, basis: Option<&ComplexMatrix>) -> Result<Check> {
    let parallel = joint_parallel(&leifer_forward(pair, basis)?, m, n)?;
    let sequential = joint_sequential(pair, m, n, basis)?;
    let dev = (parallel.probs() - sequential.probs()).amax();
    Ok(Check::at_most("equivalence", dev, tol::EQUIVALENCE))
}

/// Monte Carlo counts drawn from a joint table.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleReport {
    pub counts: DMatrix<u64>,
    pub trials: u64,
    pub seed: u64,
    pub generator: &'static str,
    pub tv_distance: f64,
}

/// Inverse-CDF sampling over the row-major flattened table.
pub fn sample(table: &JointTable, trials: u64, seed: u64) -> Result<SampleReport> {
    if trials == 0 {
        return Err(Error::validation("trials", "need at least one trial"));
    }
    let probs = table.probs();
    let (rows, cols) = probs.shape();
    let flat: Vec<f64> = (0..rows * cols).map(|c| probs[(c / cols, c % cols)]).collect();
    let mut cdf = Vec::with_capacity(flat.len());
    let mut acc = 0.0;
    for p in &flat {
        acc += p;
        cdf.push(acc);
    }
    let last_positive = flat.iter().rposition(|&p| p > 0.0).expect("normalized table has a positive cell");
    let mut rng = Rng64::seed(seed);
    let mut counts = DMatrix::<u64>::zeros(rows, cols);
    for _ in 0..trials {
        let u = rng.uniform();
        let cell = cdf.partition_point(|&c| c <= u).min(last_positive);
        counts[(cell / cols, cell % cols)] += 1;
    }
    let n = trials as f64;
    let tv_distance = 0.5
        * flat
            .iter()
            .enumerate()
            .map(|(cell, &p)| (counts[(cell / cols, cell % cols)] as f64 / n - p).abs())
            .sum::<f64>();
    Ok(SampleReport {
        counts,
        trials,
        seed,
        generator: GENERATOR_NAME,
        tv_distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{partial_trace, real_diag, Subsystem};
    use crate::qobjects::{born, max_entangled, DensityOperator, KrausChannel};
    use crate::random::{random_channel, random_density, random_povm, random_unitary};
    use proptest::prelude::*;

    fn table_of(rows: usize, cols: usize, entries: &[f64]) -> JointTable {
        let labels = |n: usize| (0..n).map(|k| k.to_string()).collect();
        JointTable::new(DMatrix::from_row_slice(rows, cols, entries), labels(rows), labels(cols)).unwrap()
    }

    fn constant_channel(din: usize, sigma: &ComplexMatrix) -> KrausChannel {
        let eig = crate::linalg::herm_eig(sigma).unwrap();
        let mut kraus = Vec::new();
        for k in 0..sigma.nrows() {
            let col = eig.vector(k).scale(eig.eigenvalues[k].max(0.0).sqrt());
            for j in 0..din {
                kraus.push(ComplexMatrix::from_fn(sigma.nrows(), din, |r, c| {
                    if c == j { col[r] } else { num_complex::Complex64::ZERO }
                }));
            }
        }
        KrausChannel::new(kraus).unwrap()
    }

    #[test]
    fn parallel_examples() {
        let phi = max_entangled(2);
        let bell = BipartiteState::from_matrix(&phi * phi.adjoint(), (2, 2)).unwrap();
        let t = joint_parallel(&bell, &Povm::computational(2), &Povm::computational(2)).unwrap();
        assert!((t.probs() - DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5])).amax() < 1e-15);

        let mut rng = Rng64::seed(1);
        let rho = DensityOperator::new(random_density(2, 2, &mut rng)).unwrap();
        let sigma = DensityOperator::new(random_density(3, 3, &mut rng)).unwrap();
        let product = BipartiteState::from_matrix(kron(rho.matrix(), sigma.matrix()).unwrap(), (2, 3)).unwrap();
        let (m, n) = (random_povm(2, 3, &mut rng), random_povm(3, 4, &mut rng));
        let t = joint_parallel(&product, &m, &n).unwrap();
        let (pm, pn) = (born(&m, &rho).unwrap(), born(&n, &sigma).unwrap());
        for i in 0..3 {
            for k in 0..4 {
                assert!((t.probs()[(i, k)] - pm.weights()[i] * pn.weights()[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn parallel_marginals_are_born_on_reduced_states() {
        let mut rng = Rng64::seed(2);
        let tau = BipartiteState::from_matrix(random_density(6, 6, &mut rng), (2, 3)).unwrap();
        let (m, n) = (random_povm(2, 3, &mut rng), random_povm(3, 2, &mut rng));
        let t = joint_parallel(&tau, &m, &n).unwrap();
        let ra = DensityOperator::new(partial_trace(tau.matrix(), (2, 3), Subsystem::A).unwrap()).unwrap();
        let rb = DensityOperator::new(partial_trace(tau.matrix(), (2, 3), Subsystem::B).unwrap()).unwrap();
        for (a, b) in t.row_marginal().iter().zip(born(&m, &ra).unwrap().weights()) {
            assert!((a - b).abs() < 1e-10);
        }
        for (a, b) in t.column_marginal().iter().zip(born(&n, &rb).unwrap().weights()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn sequential_examples() {
        let pair = IsoPair::new(DensityOperator::maximally_mixed(2), KrausChannel::identity(2)).unwrap();
        let t = joint_sequential(&pair, &Povm::computational(2), &Povm::computational(2), None).unwrap();
        assert!((t.probs() - DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5])).amax() < 1e-15);

        let mut rng = Rng64::seed(3);
        let rho = DensityOperator::new(random_density(3, 3, &mut rng)).unwrap();
        let sigma = DensityOperator::new(random_density(2, 2, &mut rng)).unwrap();
        let pair = IsoPair::new(rho.clone(), constant_channel(3, sigma.matrix())).unwrap();
        let (m, n) = (random_povm(3, 3, &mut rng), random_povm(2, 2, &mut rng));
        let t = joint_sequential(&pair, &m, &n, None).unwrap();
        let pm = born(&m.transposed(None), &rho).unwrap();
        let pn = born(&n, &sigma).unwrap();
        for i in 0..3 {
            for k in 0..2 {
                assert!((t.probs()[(i, k)] - pm.weights()[i] * pn.weights()[k]).abs() < 1e-12);
            }
        }

        let e = random_channel(3, 2, 2, &mut rng);
        let pair = IsoPair::new(rho.clone(), e).unwrap();
        let t = joint_sequential(&pair, &m, &n, None).unwrap();
        assert!((t.probs().sum() - 1.0).abs() < 1e-10);
        for (a, b) in t.row_marginal().iter().zip(pm.weights()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn equivalence_examples() {
        let pair = IsoPair::new(DensityOperator::maximally_mixed(2), KrausChannel::identity(2)).unwrap();
        let c = verify_equivalence(&pair, &Povm::computational(2), &Povm::computational(2), None).unwrap();
        assert!(c.value < 1e-12);

        let mut rng = Rng64::seed(4);
        for trial in 0..60 {
            let (da, db) = (2 + trial % 2, 2 + (trial / 2) % 2);
            let rank = 1 + trial % da;
            let rho = DensityOperator::new(random_density(da, rank, &mut rng)).unwrap();
            let pair = IsoPair::new(rho, random_channel(da, db, 2, &mut rng)).unwrap();
            let (m, n) = (random_povm(da, 2 + trial % 4, &mut rng), random_povm(db, 5, &mut rng));
            assert!(verify_equivalence(&pair, &m, &n, None).unwrap().pass);
            let u = random_unitary(da, &mut rng);
            assert!(verify_equivalence(&pair, &m, &n, Some(&u)).unwrap().pass);
        }
    }

    #[test]
    fn table_validation() {
        let labels = vec!["a".to_string()];
        assert!(JointTable::new(DMatrix::from_element(1, 1, 0.9), labels.clone(), labels.clone()).is_err());
        assert!(JointTable::new(DMatrix::from_element(1, 1, 1.0), labels.clone(), vec![]).is_err());
    }

    #[test]
    fn sample_examples() {
        let point = table_of(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        let r = sample(&point, 1000, 5).unwrap();
        assert_eq!(r.counts[(1, 0)], 1000);
        assert_eq!(r.tv_distance, 0.0);

        let uniform = table_of(2, 2, &[0.25; 4]);
        let a = sample(&uniform, 100_000, 42).unwrap();
        assert!(a.tv_distance <= 0.02);
        assert_eq!(a.counts.sum(), 100_000);
        let b = sample(&uniform, 100_000, 42).unwrap();
        assert_eq!(a.counts, b.counts);
        assert_eq!(a.generator, "ChaCha8Rng::seed_from_u64");

        assert!(sample(&uniform, 0, 1).is_err());
    }

    #[test]
    fn sample_never_lands_on_zero_cells() {
        let t = table_of(1, 4, &[0.5, 0.0, 0.5, 0.0]);
        let r = sample(&t, 10_000, 9).unwrap();
        assert_eq!(r.counts[(0, 1)] + r.counts[(0, 3)], 0);
    }

    #[test]
    fn diagonal_table_from_classical_channel() {
        let rho = DensityOperator::new(real_diag(&[0.25, 0.75])).unwrap();
        let pair = IsoPair::new(rho, KrausChannel::identity(2)).unwrap();
        let t = joint_sequential(&pair, &Povm::computational(2), &Povm::computational(2), None).unwrap();
        assert!((t.probs() - DMatrix::from_row_slice(2, 2, &[0.25, 0.0, 0.0, 0.75])).amax() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn parallel_equals_sequential(seed in any::<u64>(), da in 2usize..4, db in 2usize..4, rank in 1usize..4, nm in 1usize..6, nn in 1usize..6) {
            let mut rng = Rng64::seed(seed);
            let rho = DensityOperator::new(random_density(da, rank, &mut rng)).unwrap();
            let pair = IsoPair::new(rho, random_channel(da, db, 2, &mut rng)).unwrap();
            let (m, n) = (random_povm(da, nm, &mut rng), random_povm(db, nn, &mut rng));
            let c = verify_equivalence(&pair, &m, &n, None).unwrap();
            prop_assert!(c.pass, "{:?}", c);
        }

        #[test]
        fn sequential_m_marginal_is_born_of_transpose(seed in any::<u64>(), da in 2usize..4, rank in 1usize..4) {
            let mut rng = Rng64::seed(seed);
            let rho = DensityOperator::new(random_density(da, rank, &mut rng)).unwrap();
            let pair = IsoPair::new(rho.clone(), random_channel(da, 2, 2, &mut rng)).unwrap();
            let m = random_povm(da, 3, &mut rng);
            let t = joint_sequential(&pair, &m, &Povm::computational(2), None).unwrap();
            let expect = born(&m.transposed(None), &rho).unwrap();
            for (a, b) in t.row_marginal().iter().zip(expect.weights()) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }

        #[test]
        fn sampling_is_deterministic(seed in any::<u64>()) {
            let t = table_of(2, 3, &[0.1, 0.2, 0.05, 0.3, 0.15, 0.2]);
            let a = sample(&t, 500, seed).unwrap();
            let b = sample(&t, 500, seed).unwrap();
            prop_assert_eq!(a.counts.sum(), 500);
            prop_assert_eq!(a.counts, b.counts);
        }
    }
}
