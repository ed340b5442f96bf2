//! Fixed points of channels and the constructions built on their structure:
//! the block decomposition `H = ⊕_α H_{α1}⊗H_{α2}` with invariant states
//! `Σ q_α μ_α⊗ν_α`, obstruction witnesses for broadcasting noncommuting states,
//! and the monogamy, cloning and universal-broadcasting demonstrations.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::duality::{leifer_forward, state_to_operator, std_iso_forward, BipartiteState, IsoPair};
use crate::error::{Error, Result};
use crate::linalg::{
    c64, commutator, herm_eig, hermitize, identity, kron, nullspace, op_norm, partial_trace,
    permute_factors, purity, real_nullspace, real_trace, schmidt, support_isometry, trace_out, unitary_deviation,
    unvectorize, vectorize, ComplexMatrix, ComplexVector, Subsystem,
};
use crate::qobjects::{choi_distance, kraus_from_choi, max_entangled, Check, DensityOperator, Ensemble, KrausChannel};
use crate::random::Rng64;
use crate::tol;

/// Seed for the generic elements drawn while splitting the fixed algebra.
const STRUCTURE_SEED: u64 = 0x5eed_f1c5;

/// Eigenvalues of a generic element closer than this (relative) are one cluster.
const CLUSTER_REL: f64 = 1e-6;

/// Relative singular-value cutoff when extracting a real span.
const SPAN_REL: f64 = 1e-6;

/// Hilbert–Schmidt orthonormal Hermitian basis of `{X : E(X) = X}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedSpace {
    basis: Vec<ComplexMatrix>,
    d: usize,
}

impl FixedSpace {
    pub fn basis(&self) -> &[ComplexMatrix] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.d
    }

    /// Largest `‖E(X) − X‖` over the basis.
    pub fn residual(&self, e: &KrausChannel) -> f64 {
        self.basis.iter().map(|x| op_norm(&(e.apply(x) - x))).fold(0.0, f64::max)
    }

    /// Orthogonal projection of `x` onto the space.
    pub fn project(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.basis.iter().fold(ComplexMatrix::zeros(self.d, self.d), |acc, b| {
            acc + b * crate::linalg::frobenius_inner(b, x)
        })
    }
}

fn superoperator(kraus: &[ComplexMatrix], adjoint: bool) -> ComplexMatrix {
    let d = kraus[0].ncols();
    kraus.iter().fold(ComplexMatrix::zeros(d * d, d * d), |acc, k| {
        let term = if adjoint {
            crate::linalg::kron_limited(&k.adjoint(), &k.transpose(), usize::MAX)
        } else {
            crate::linalg::kron_limited(k, &k.map(|z| z.conj()), usize::MAX)
        };
        acc + term.expect("unbounded kron")
    })
}

fn check_square_channel(e: &KrausChannel) -> Result<usize> {
    if e.din() != e.dout() {
        return Err(Error::Shape(format!("channel maps {} to {}; fixed points need a square channel", e.din(), e.dout())));
    }
    let d = e.din();
    if d * d > tol::MAX_DIM {
        return Err(Error::SizeLimit {
            requested: d * d,
            limit: tol::MAX_DIM,
        });
    }
    Ok(d)
}

/// Orthonormal Hermitian basis of the real span of Hermitian parts of the given matrices.
fn hermitian_span(candidates: &[ComplexMatrix], d: usize) -> Vec<ComplexMatrix> {
    if candidates.is_empty() {
        return Vec::new();
    }
    let n = d * d;
    let mut coords = DMatrix::<f64>::zeros(2 * n, 2 * candidates.len());
    let mut col = 0;
    for x in candidates {
        let herm = [
            (x + x.adjoint()).scale(0.5),
            (x - x.adjoint()).map(|z| z * c64(0.0, 0.5)),
        ];
        for h in herm {
            for (k, z) in vectorize(&h).iter().enumerate() {
                coords[(k, col)] = z.re;
                coords[(n + k, col)] = z.im;
            }
            col += 1;
        }
    }
    // orthonormalize through the Gram matrix of the real coordinate vectors
    let gram = coords.transpose() * &coords;
    let eig = gram.symmetric_eigen();
    let max = eig.eigenvalues.max();
    let mut basis = Vec::new();
    for k in 0..eig.eigenvalues.len() {
        let l = eig.eigenvalues[k];
        if l <= SPAN_REL * SPAN_REL * max || l <= 0.0 {
            continue;
        }
        let w = &coords * eig.eigenvectors.column(k) / l.sqrt();
        let v = ComplexVector::from_fn(n, |i, _| c64(w[i], w[n + i]));
        basis.push(hermitize(&unvectorize(&v, d, d)));
    }
    basis
}

fn fixed_basis(kraus: &[ComplexMatrix], adjoint: bool) -> Vec<ComplexMatrix> {
    let d = kraus[0].ncols();
    let s = superoperator(kraus, adjoint) - identity(d * d);
    let null = nullspace(&s, tol::NULLSPACE);
    let candidates: Vec<ComplexMatrix> = (0..null.ncols())
        .map(|k| unvectorize(&null.column(k).into_owned(), d, d))
        .collect();
    hermitian_span(&candidates, d)
}

/// Nullspace of `E − id` on the `d²`-dimensional operator space.
pub fn fixed_point_space(e: &KrausChannel) -> Result<FixedSpace> {
    let d = check_square_channel(e)?;
    Ok(FixedSpace {
        basis: fixed_basis(e.kraus(), false),
        d,
    })
}

/// Operators fixed by both channels.
pub fn common_fixed_space(e1: &KrausChannel, e2: &KrausChannel) -> Result<FixedSpace> {
    let d = check_square_channel(e1)?;
    if check_square_channel(e2)? != d {
        return Err(Error::Shape(format!("channels act on dimensions {d} and {}", e2.din())));
    }
    let id = identity(d * d);
    let s1 = superoperator(e1.kraus(), false) - &id;
    let s2 = superoperator(e2.kraus(), false) - &id;
    let mut stacked = ComplexMatrix::zeros(2 * d * d, d * d);
    stacked.rows_mut(0, d * d).copy_from(&s1);
    stacked.rows_mut(d * d, d * d).copy_from(&s2);
    let null = nullspace(&stacked, tol::NULLSPACE);
    let candidates: Vec<ComplexMatrix> = (0..null.ncols())
        .map(|k| unvectorize(&null.column(k).into_owned(), d, d))
        .collect();
    Ok(FixedSpace {
        basis: hermitian_span(&candidates, d),
        d,
    })
}

/// Projector onto the eigenvalue-one eigenspace of the superoperator, i.e. the
/// limit of the Cesàro averages `(1/N) Σ_{k<N} E^k`.
fn cesaro_limit(kraus: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    let d = kraus[0].ncols();
    let s = superoperator(kraus, false) - identity(d * d);
    let right = nullspace(&s, tol::NULLSPACE);
    let left = nullspace(&s.adjoint(), tol::NULLSPACE);
    if right.ncols() != left.ncols() || right.ncols() == 0 {
        return Err(Error::Unsupported(format!(
            "eigenvalue 1 has {} right and {} left eigenvectors",
            right.ncols(),
            left.ncols()
        )));
    }
    let gram = left.adjoint() * &right;
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::Unsupported("eigenvalue 1 is not semisimple".into()))?;
    Ok(right * inv * left.adjoint())
}

/// One summand `H_{α1}⊗H_{α2}` of the fixed-point decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedBlock {
    pub d1: usize,
    pub d2: usize,
    /// `d × d1·d2` isometry; column `i·d2 + k` is `|i⟩⊗|k⟩`.
    pub isometry: ComplexMatrix,
    pub nu: DensityOperator,
    /// `q_α`, present only when computed against a reference state.
    pub weight: Option<f64>,
}

impl FixedBlock {
    /// `W (μ⊗ν) W†`.
    pub fn embed(&self, mu: &ComplexMatrix) -> Result<ComplexMatrix> {
        if mu.shape() != (self.d1, self.d1) {
            return Err(Error::Shape(format!("block factor is {}-dimensional", self.d1)));
        }
        Ok(&self.isometry * kron(mu, self.nu.matrix())? * self.isometry.adjoint())
    }

    /// `Tr_2(W† X W)`, the block factor of a fixed operator.
    pub fn factor(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let inner = self.isometry.adjoint() * x * &self.isometry;
        partial_trace(&inner, (self.d1, self.d2), Subsystem::A).expect("block dims")
    }

    /// `(q_α, μ_α)` for a state; `μ_α` is `None` when the weight vanishes.
    pub fn component(&self, state: &ComplexMatrix) -> (f64, Option<ComplexMatrix>) {
        let f = self.factor(state);
        let q = real_trace(&f);
        if q <= tol::ZERO_PROBABILITY {
            (q.max(0.0), None)
        } else {
            (q, Some(hermitize(&f.unscale(q))))
        }
    }

    pub fn projector(&self) -> ComplexMatrix {
        &self.isometry * self.isometry.adjoint()
    }
}

/// Block structure of a channel's fixed points.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub blocks: Vec<FixedBlock>,
    /// Isometry onto the recurrent support when the channel has no full-rank
    /// invariant state.
    pub recurrent: Option<ComplexMatrix>,
    pub fixed_dim: usize,
    pub reconstruction_error: f64,
}

impl Decomposition {
    /// Fills in `q_α = Tr(P_α σ)` for a reference state.
    pub fn weighted(&self, state: &DensityOperator) -> Result<Decomposition> {
        let d = self.blocks.first().map(|b| b.isometry.nrows()).unwrap_or(0);
        if state.dim() != d {
            return Err(Error::Shape(format!("state dimension {} does not match {d}", state.dim())));
        }
        let mut out = self.clone();
        for b in &mut out.blocks {
            b.weight = Some(b.component(state.matrix()).0);
        }
        Ok(out)
    }

    /// `Σ_α W_α (Tr_2(W_α† X W_α) ⊗ ν_α) W_α†`.
    pub fn reconstruct(&self, x: &ComplexMatrix) -> ComplexMatrix {
        self.blocks.iter().fold(ComplexMatrix::zeros(x.nrows(), x.ncols()), |acc, b| {
            acc + b.embed(&b.factor(x)).expect("factor has block shape")
        })
    }
}

fn clusters(values: &[f64]) -> Vec<Vec<usize>> {
    let scale = 1.0 + values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (k, v) in values.iter().enumerate() {
        match out.last_mut() {
            Some(group) if (values[*group.last().unwrap()] - v).abs() <= CLUSTER_REL * scale => group.push(k),
            _ => out.push(vec![k]),
        }
    }
    out
}

fn random_combination(basis: &[ComplexMatrix], rng: &mut Rng64) -> ComplexMatrix {
    let d = basis[0].nrows();
    basis
        .iter()
        .fold(ComplexMatrix::zeros(d, d), |acc, b| acc + b.scale(rng.normal()))
}

/// Real coefficient vectors `c` with `Σ c_i a_i` central in the span of `a`.
fn center(algebra: &[ComplexMatrix]) -> Vec<ComplexMatrix> {
    let n = algebra.len();
    let d = algebra[0].nrows();
    let per = d * d;
    let mut m = DMatrix::<f64>::zeros(2 * n * per, n);
    for (i, a) in algebra.iter().enumerate() {
        for (j, b) in algebra.iter().enumerate() {
            let c = commutator(a, b);
            for (k, z) in c.iter().enumerate() {
                m[(2 * (j * per + k), i)] = z.re;
                m[(2 * (j * per + k) + 1, i)] = z.im;
            }
        }
    }
    let null = real_nullspace(&m, 1e-7);
    (0..null.ncols())
        .map(|c| {
            (0..n).fold(ComplexMatrix::zeros(d, d), |acc, i| acc + algebra[i].scale(null[(i, c)]))
        })
        .collect()
}

/// Splits a central block of the algebra into `M_{d1} ⊗ I_{d2}` and returns
/// the adapted orthonormal basis of the block (as columns, `r × r`).
fn factor_block(block_algebra: &[ComplexMatrix], d1: usize, d2: usize, rng: &mut Rng64) -> Result<ComplexMatrix> {
    let r = d1 * d2;
    if d1 == 1 {
        return Ok(identity(r));
    }
    let h = random_combination(block_algebra, rng);
    let eig = herm_eig(&hermitize(&h))?;
    let groups = clusters(&eig.eigenvalues);
    if groups.len() != d1 || groups.iter().any(|g| g.len() != d2) {
        return Err(Error::Unsupported(format!(
            "generic element of a {d1}x{d1} block has eigenvalue multiplicities {:?}",
            groups.iter().map(Vec::len).collect::<Vec<_>>()
        )));
    }
    let vectors = |g: &Vec<usize>| {
        let mut m = ComplexMatrix::zeros(r, g.len());
        for (c, &k) in g.iter().enumerate() {
            m.set_column(c, &eig.eigenvectors.column(k));
        }
        m
    };
    let f = vectors(&groups[0]);
    let e11 = &f * f.adjoint();
    let mut adapted = ComplexMatrix::zeros(r, r);
    for k in 0..d2 {
        adapted.set_column(k, &f.column(k));
    }
    for (i, g) in groups.iter().enumerate().skip(1) {
        let gi = vectors(g);
        let eii = &gi * gi.adjoint();
        let y = block_algebra
            .iter()
            .map(|b| &eii * b * &e11)
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .expect("nonempty algebra");
        let scale = (y.norm_squared() / d2 as f64).sqrt();
        if scale <= 1e-8 {
            return Err(Error::Unsupported(format!("no partial isometry links units 1 and {}", i + 1)));
        }
        let y = y.unscale(scale);
        for k in 0..d2 {
            adapted.set_column(i * d2 + k, &(&y * f.column(k)));
        }
    }
    let dev = unitary_deviation(&adapted);
    if dev > 1e-8 {
        return Err(Error::Unsupported(format!("matrix units are not orthonormal (deviation {dev:e})")));
    }
    Ok(adapted)
}

fn decompose_kraus(e: &KrausChannel) -> Result<Decomposition> {
    let d = check_square_channel(e)?;
    if !e.is_trace_preserving() {
        return Err(Error::precondition("trace-preserving", "decomposition needs a trace-preserving channel"));
    }
    let fixed = fixed_point_space(e)?;
    let limit = cesaro_limit(e.kraus())?;
    let z = hermitize(&unvectorize(&(&limit * vectorize(&identity(d).unscale(d as f64))), d, d));
    let support = support_isometry(&z)?.ok_or_else(|| Error::Unsupported("Cesàro limit of I/d vanishes".into()))?;
    let recurrent = (support.ncols() < d).then(|| support.clone());
    let vk = recurrent.clone().unwrap_or_else(|| identity(d));
    let compressed: Vec<ComplexMatrix> = e.kraus().iter().map(|k| vk.adjoint() * k * &vk).collect();
    let algebra = fixed_basis(&compressed, true);
    if algebra.is_empty() {
        return Err(Error::Unsupported("dual channel has no fixed points".into()));
    }
    let dk = vk.ncols();

    let mut rng = Rng64::seed(STRUCTURE_SEED);
    let central = center(&algebra);
    let zc = hermitize(&random_combination(&central, &mut rng));
    let zeig = herm_eig(&zc)?;
    let mut blocks = Vec::new();
    for group in clusters(&zeig.eigenvalues) {
        let mut v_alpha = ComplexMatrix::zeros(dk, group.len());
        for (c, &k) in group.iter().enumerate() {
            v_alpha.set_column(c, &zeig.eigenvectors.column(k));
        }
        let r = group.len();
        let compressed_algebra: Vec<ComplexMatrix> =
            algebra.iter().map(|a| v_alpha.adjoint() * a * &v_alpha).collect();
        let block_algebra = hermitian_span(&compressed_algebra, r);
        let n = block_algebra.len();
        let d1 = (n as f64).sqrt().round() as usize;
        if d1 * d1 != n || d1 == 0 || r % d1 != 0 {
            return Err(Error::Unsupported(format!(
                "central block of rank {r} carries a {n}-dimensional algebra"
            )));
        }
        let d2 = r / d1;
        let adapted = factor_block(&block_algebra, d1, d2, &mut rng)?;
        let isometry = &vk * &v_alpha * adapted;
        let local = hermitize(&(isometry.adjoint() * &z * &isometry));
        let nu = DensityOperator::normalized(hermitize(&partial_trace(&local, (d1, d2), Subsystem::B)?))?;
        blocks.push(FixedBlock {
            d1,
            d2,
            isometry,
            nu,
            weight: None,
        });
    }
    blocks.sort_by(|a, b| b.d1.cmp(&a.d1).then(b.d2.cmp(&a.d2)));

    let mut dec = Decomposition {
        blocks,
        recurrent,
        fixed_dim: fixed.dim(),
        reconstruction_error: 0.0,
    };
    let err = fixed
        .basis()
        .iter()
        .map(|x| op_norm(&(dec.reconstruct(x) - x)))
        .fold(0.0, f64::max);
    dec.reconstruction_error = err;
    let algebra_dim: usize = dec.blocks.iter().map(|b| b.d1 * b.d1).sum();
    if err > tol::RECONSTRUCTION || algebra_dim != fixed.dim() {
        return Err(Error::Unsupported(format!(
            "block parametrization reproduces the fixed space within {err:e} with Σ d1² = {algebra_dim} against dimension {}",
            fixed.dim()
        )));
    }
    Ok(dec)
}

/// Direct-sum-of-tensor-products structure of the fixed points of `e`.
pub fn decompose_fixed_algebra(e: &KrausChannel) -> Result<Decomposition> {
    decompose_kraus(e)
}

/// Structure of the operators fixed by both channels, read off their average.
pub fn decompose_common(e1: &KrausChannel, e2: &KrausChannel) -> Result<Decomposition> {
    let common = common_fixed_space(e1, e2)?;
    let avg = KrausChannel::average(e1, e2)?;
    let dec = decompose_kraus(&avg)?;
    if dec.fixed_dim != common.dim() {
        return Err(Error::Unsupported(format!(
            "averaged channel fixes a {}-dimensional space, the common fixed space is {}-dimensional",
            dec.fixed_dim,
            common.dim()
        )));
    }
    Ok(dec)
}

fn fixation_deviation(states: &[&ComplexMatrix], channels: &[&KrausChannel]) -> f64 {
    let mut worst = 0.0f64;
    for e in channels {
        for s in states {
            worst = worst.max(op_norm(&(e.apply(s) - *s)));
        }
    }
    worst
}

struct Premises {
    dec: Decomposition,
    beta: usize,
    mu: [ComplexMatrix; 2],
}

fn check_premises(
    sigma1: &DensityOperator,
    sigma2: &DensityOperator,
    e1: &KrausChannel,
    e2: &KrausChannel,
) -> Result<Premises> {
    let d = sigma1.dim();
    if sigma2.dim() != d || e1.din() != d || e2.din() != d {
        return Err(Error::Shape("states and channels must share one dimension".into()));
    }
    let dev = fixation_deviation(&[sigma1.matrix(), sigma2.matrix()], &[e1, e2]);
    if dev > tol::NULLSPACE {
        return Err(Error::precondition("fixed-inputs", format!("channels move the inputs by {dev:e}")));
    }
    let comm = op_norm(&commutator(sigma1.matrix(), sigma2.matrix()));
    if comm <= tol::COMMUTATOR {
        return Err(Error::precondition("noncommuting", format!("‖[σ1, σ2]‖ = {comm:e}")));
    }
    let dec = decompose_common(e1, e2)?;
    for (beta, block) in dec.blocks.iter().enumerate() {
        let (q1, m1) = block.component(sigma1.matrix());
        let (q2, m2) = block.component(sigma2.matrix());
        if let (Some(m1), Some(m2)) = (m1, m2) {
            if q1 > 0.0 && q2 > 0.0 && op_norm(&commutator(&m1, &m2)) > tol::COMMUTATOR {
                return Ok(Premises { dec, beta, mu: [m1, m2] });
            }
        }
    }
    Err(Error::Unsupported("no block carries noncommuting components of both states".into()))
}

/// Pure states in `H_{β1}` that are fixed by both channels yet neither equal
/// nor orthogonal.
#[derive(Debug, Clone, PartialEq)]
pub struct BroadcastWitness {
    pub block_index: usize,
    pub block: FixedBlock,
    pub factor_states: [ComplexVector; 2],
    /// `W_β (|ψ⟩⟨ψ| ⊗ ν_β) W_β†` for each factor state.
    pub embedded_states: [DensityOperator; 2],
    pub overlap: f64,
    pub checks: Vec<Check>,
}

pub fn broadcast_obstruction(
    sigma1: &DensityOperator,
    sigma2: &DensityOperator,
    e1: &KrausChannel,
    e2: &KrausChannel,
) -> Result<BroadcastWitness> {
    let Premises { dec, beta, mu } = check_premises(sigma1, sigma2, e1, e2)?;
    let block = dec.blocks[beta].clone();
    let (ea, eb) = (herm_eig(&mu[0])?, herm_eig(&mu[1])?);
    let mut best: Option<(f64, ComplexVector, ComplexVector, f64)> = None;
    for i in 0..block.d1 {
        for j in 0..block.d1 {
            let (u, v) = (ea.vector(i), eb.vector(j));
            let o = u.dotc(&v).norm();
            let score = o.min(1.0 - o);
            if best.as_ref().is_none_or(|b| score > b.0) {
                best = Some((score, u, v, o));
            }
        }
    }
    let (score, u, v, overlap) = best.expect("block has dimension at least one");
    if score <= tol::COMMUTATOR {
        return Err(Error::Unsupported("eigenvectors of the block components are all equal or orthogonal".into()));
    }
    let embed = |x: &ComplexVector| -> Result<DensityOperator> {
        DensityOperator::new(hermitize(&block.embed(&(x * x.adjoint()))?))
    };
    let embedded_states = [embed(&u)?, embed(&v)?];
    let dev = fixation_deviation(&[embedded_states[0].matrix(), embedded_states[1].matrix()], &[e1, e2]);
    let checks = vec![
        Check::at_most("witness.fixed", dev, tol::RECONSTRUCTION),
        Check::at_least("witness.overlap_margin", score, tol::COMMUTATOR),
    ];
    Ok(BroadcastWitness {
        block_index: beta,
        block,
        factor_states: [u, v],
        embedded_states,
        overlap,
        checks,
    })
}

/// Outcome of the post-selected construction for one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorVerdict {
    pub probability: f64,
    pub purity: f64,
    pub schmidt_coefficients: Vec<f64>,
    pub schmidt_rank: usize,
    /// State on the two `H_{β2}` copies left after discarding the entangled factor.
    pub spectator: ComplexMatrix,
}

impl FactorVerdict {
    pub fn checks(&self, label: &str) -> Vec<Check> {
        vec![
            Check::at_least(format!("{label}.probability"), self.probability, tol::ZERO_PROBABILITY),
            Check::at_least(format!("{label}.purity"), self.purity, 1.0 - tol::PURITY),
            Check::at_least(format!("{label}.schmidt_rank"), self.schmidt_rank as f64, 2.0),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonogamyReport {
    pub block_index: usize,
    pub d1: usize,
    pub d2: usize,
    pub basis: ComplexMatrix,
    pub verdicts: [FactorVerdict; 2],
    pub checks: Vec<Check>,
}

impl MonogamyReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Eigenbasis of `ρ` adapted to the block structure: `W_α (U_μ ⊗ U_ν)` per
/// block, completed by an orthonormal basis of the transient complement.
fn product_eigenbasis(dec: &Decomposition, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    let d = rho.nrows();
    let mut columns: Vec<ComplexVector> = Vec::new();
    let mut ranges = ComplexMatrix::zeros(d, 0);
    for block in &dec.blocks {
        let (_, mu) = block.component(rho);
        let mu = mu.unwrap_or_else(|| identity(block.d1).unscale(block.d1 as f64));
        let local = kron(&herm_eig(&mu)?.eigenvectors, &herm_eig(block.nu.matrix())?.eigenvectors)?;
        let w = &block.isometry * local;
        for c in 0..w.ncols() {
            columns.push(w.column(c).into_owned());
        }
        let old = ranges.ncols();
        ranges = ranges.insert_columns(old, w.ncols(), Complex64::ZERO);
        ranges.columns_mut(old, w.ncols()).copy_from(&block.isometry);
    }
    if ranges.ncols() < d {
        let rest = nullspace(&ranges.adjoint(), 1e-8);
        for c in 0..rest.ncols() {
            columns.push(rest.column(c).into_owned());
        }
    }
    let u = ComplexMatrix::from_columns(&columns);
    if u.shape() != (d, d) || unitary_deviation(&u) > 1e-8 {
        return Err(Error::Unsupported("block isometries do not assemble into a basis".into()));
    }
    Ok(u)
}

fn post_selected_factor(
    rho: &DensityOperator,
    e: &KrausChannel,
    basis: &ComplexMatrix,
    block: &FixedBlock,
) -> Result<FactorVerdict> {
    let d = rho.dim();
    let tau = leifer_forward(&IsoPair::new(rho.clone(), e.clone())?, Some(basis))?;
    let p = kron(&block.projector(), &identity(d))?;
    let measured = &p * tau.matrix() * &p;
    let probability = real_trace(&measured);
    if probability <= tol::ZERO_PROBABILITY {
        return Err(Error::ZeroProbability {
            outcome: "P_β".into(),
            probability,
        });
    }
    let w = kron(&block.isometry, &block.isometry)?;
    let local = hermitize(&(w.adjoint() * measured * &w).unscale(probability));
    let (d1, d2) = (block.d1, block.d2);
    // (a1, a2, b1, b2) → (a1, b1, a2, b2)
    let reordered = permute_factors(&local, &[d1, d2, d1, d2], &[0, 2, 1, 3])?;
    let entangled = trace_out(&trace_out(&reordered, &[d1, d1, d2, d2], 3)?, &[d1, d1, d2], 2)?;
    let spectator = trace_out(&trace_out(&reordered, &[d1, d1, d2, d2], 0)?, &[d1, d2, d2], 0)?;
    let entangled = hermitize(&entangled);
    let top = herm_eig(&entangled)?.vector(0);
    let sd = schmidt(&top, (d1, d1))?;
    Ok(FactorVerdict {
        probability,
        purity: purity(&entangled),
        schmidt_rank: sd.rank(),
        schmidt_coefficients: sd.coefficients,
        spectator: hermitize(&spectator),
    })
}

/// Post-selects `τ` from `ρ = pσ₁ + (1−p)σ₂` on the block carrying
/// noncommuting components and checks the surviving factor is pure and entangled,
/// separately for both channels.
pub fn monogamy_demo(
    p: f64,
    sigma1: &DensityOperator,
    sigma2: &DensityOperator,
    e1: &KrausChannel,
    e2: &KrausChannel,
) -> Result<MonogamyReport> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::precondition("probability-interior", format!("p = {p} must lie in (0, 1)")));
    }
    let Premises { dec, beta, .. } = check_premises(sigma1, sigma2, e1, e2)?;
    let rho = DensityOperator::new(hermitize(&(sigma1.matrix().scale(p) + sigma2.matrix().scale(1.0 - p))))?;
    let basis = product_eigenbasis(&dec, rho.matrix())?;
    let block = &dec.blocks[beta];
    let verdicts = [
        post_selected_factor(&rho, e1, &basis, block)?,
        post_selected_factor(&rho, e2, &basis, block)?,
    ];
    let mut checks = verdicts[0].checks("channel1");
    checks.extend(verdicts[1].checks("channel2"));
    Ok(MonogamyReport {
        block_index: beta,
        d1: block.d1,
        d2: block.d2,
        basis,
        verdicts,
        checks,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CloningReport {
    pub block_index: usize,
    pub purities: [f64; 2],
    pub schmidt_ranks: [usize; 2],
    pub checks: Vec<Check>,
}

impl CloningReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// For an ensemble of pairwise nonorthogonal, distinct pure states fixed by both
/// channels, the image `τ` of the average state is itself pure and entangled.
pub fn cloning_demo(ens: &Ensemble, e1: &KrausChannel, e2: &KrausChannel) -> Result<CloningReport> {
    if ens.len() < 2 {
        return Err(Error::precondition("two-members", "ensemble needs at least two states"));
    }
    let d = ens.dim();
    if e1.din() != d || e2.din() != d {
        return Err(Error::Shape("channels and ensemble must share one dimension".into()));
    }
    let mut vectors = Vec::new();
    for (j, m) in ens.members().iter().enumerate() {
        if m.weight <= 0.0 {
            return Err(Error::precondition("positive-weights", format!("member {j} has weight {}", m.weight)));
        }
        if m.state.purity() < 1.0 - tol::VALIDATION {
            return Err(Error::precondition("pure-members", format!("member {j} has purity {}", m.state.purity())));
        }
        vectors.push(herm_eig(m.state.matrix())?.vector(0));
    }
    for i in 0..vectors.len() {
        for j in i + 1..vectors.len() {
            let o = vectors[i].dotc(&vectors[j]).norm();
            if o <= tol::COMMUTATOR {
                return Err(Error::precondition("nonorthogonal", format!("members {i} and {j} are orthogonal")));
            }
            if o >= 1.0 - tol::COMMUTATOR {
                return Err(Error::precondition("distinct", format!("members {i} and {j} coincide")));
            }
        }
    }
    let states: Vec<&ComplexMatrix> = ens.members().iter().map(|m| m.state.matrix()).collect();
    let dev = fixation_deviation(&states, &[e1, e2]);
    if dev > tol::NULLSPACE {
        return Err(Error::precondition("fixed-inputs", format!("channels move the members by {dev:e}")));
    }

    let dec = decompose_common(e1, e2)?;
    let mut shared: Option<usize> = None;
    let mut share_dev = 0.0f64;
    for s in &states {
        let weights: Vec<f64> = dec.blocks.iter().map(|b| b.component(s).0).collect();
        let (alpha, top) = weights
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(a, w)| (a, *w))
            .expect("at least one block");
        share_dev = share_dev.max(1.0 - top);
        if shared.is_some_and(|b| b != alpha) {
            share_dev = 1.0;
        }
        shared = Some(alpha);
    }
    let block_index = shared.expect("ensemble is nonempty");

    let rho = DensityOperator::new(hermitize(&ens.average()))?;
    let basis = herm_eig(rho.matrix())?.eigenvectors;
    let mut checks = vec![Check::at_most("shared_block", share_dev, tol::RECONSTRUCTION)];
    let mut purities = [0.0; 2];
    let mut ranks = [0; 2];
    for (k, e) in [e1, e2].into_iter().enumerate() {
        let tau = leifer_forward(&IsoPair::new(rho.clone(), e.clone())?, Some(&basis))?;
        purities[k] = purity(tau.matrix());
        let top = herm_eig(tau.matrix())?.vector(0);
        ranks[k] = schmidt(&top, (d, d))?.rank();
        let label = format!("channel{}", k + 1);
        checks.push(Check::at_least(format!("{label}.purity"), purities[k], 1.0 - tol::VALIDATION));
        checks.push(Check::at_least(format!("{label}.schmidt_rank"), ranks[k] as f64, 2.0));
    }
    Ok(CloningReport {
        block_index,
        purities,
        schmidt_ranks: ranks,
        checks,
    })
}

/// Either side of the universal-broadcasting equivalence.
#[derive(Debug, Clone)]
pub enum UniversalInput {
    /// Channels claimed to be the identity.
    Channels(KrausChannel, KrausChannel),
    /// States claimed to be pure and maximally entangled.
    States(BipartiteState, BipartiteState),
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniversalReport {
    /// `false` means the inputs are not evidence of universal broadcasting.
    pub verdict: bool,
    /// Local unitaries `V` with `(I⊗V)|ψ⟩ = |Φ⁺⟩` (states side only).
    pub corrections: Vec<ComplexMatrix>,
    pub checks: Vec<Check>,
}

pub fn universal_broadcast_equiv(input: &UniversalInput) -> Result<UniversalReport> {
    match input {
        UniversalInput::Channels(e1, e2) => {
            let mut checks = Vec::new();
            for (k, e) in [e1, e2].into_iter().enumerate() {
                if e.din() != e.dout() {
                    return Err(Error::Shape(format!("channel {} is not square", k + 1)));
                }
                let dist = choi_distance(e, &KrausChannel::identity(e.din()));
                if dist > tol::VALIDATION {
                    return Err(Error::precondition("identity-channels", format!("channel {} is {dist:e} from the identity", k + 1)));
                }
                let phi = max_entangled(e.din());
                let dev = op_norm(&(std_iso_forward(e)?.into_matrix() - &phi * phi.adjoint()));
                checks.push(Check::at_most(format!("channel{}.maximally_entangled", k + 1), dev, tol::VALIDATION));
            }
            Ok(UniversalReport {
                verdict: checks.iter().all(|c| c.pass),
                corrections: Vec::new(),
                checks,
            })
        }
        UniversalInput::States(t1, t2) => {
            let mut checks = Vec::new();
            let mut corrections = Vec::new();
            for (k, tau) in [t1, t2].into_iter().enumerate() {
                let label = format!("state{}", k + 1);
                let (da, db) = tau.dims();
                if da != db {
                    return Err(Error::Shape(format!("{label} has unequal factors {da} and {db}")));
                }
                let p = purity(tau.matrix());
                checks.push(Check::at_least(format!("{label}.purity"), p, 1.0 - tol::VALIDATION));
                let flat = op_norm(&(tau.reduced(Subsystem::A) - identity(da).unscale(da as f64)));
                checks.push(Check::at_most(format!("{label}.flat_marginal"), flat, tol::ROUNDTRIP));
                if p < 1.0 - tol::VALIDATION || flat > tol::ROUNDTRIP {
                    continue;
                }
                let psi = herm_eig(tau.matrix())?.vector(0);
                let sd = schmidt(&psi, (da, db))?;
                let mut v = ComplexMatrix::zeros(db, db);
                for c in 0..sd.coefficients.len() {
                    v += sd.left.column(c).map(|z| z.conj()) * sd.right.column(c).adjoint();
                }
                let corrected = kron(&identity(da), &v)? * tau.matrix() * kron(&identity(da), &v.adjoint())?;
                let channel = kraus_from_choi(&hermitize(&corrected), da, db)?;
                checks.push(Check::at_most(
                    format!("{label}.corrected_identity"),
                    choi_distance(&channel, &KrausChannel::identity(da)),
                    tol::ROUNDTRIP,
                ));
                let r = state_to_operator(&psi, (da, db))?;
                checks.push(Check::at_most(format!("{label}.unitary_operator"), unitary_deviation(&r), tol::ROUNDTRIP));
                corrections.push(v);
            }
            Ok(UniversalReport {
                verdict: checks.iter().all(|c| c.pass),
                corrections,
                checks,
            })
        }
    }
}

/// Channel on `C⁴` measuring `{P₁, P₂}` (`P₁` onto `|0⟩,|1⟩`), then acting as the
/// identity on the first block and as the completely depolarizing map on the second.
pub fn block_example_channel() -> KrausChannel {
    let unit = |i: usize, j: usize| {
        let mut m = ComplexMatrix::zeros(4, 4);
        m[(i, j)] = Complex64::ONE;
        m
    };
    let mut kraus = vec![unit(0, 0) + unit(1, 1)];
    for i in 2..4 {
        for j in 2..4 {
            kraus.push(unit(i, j).scale(std::f64::consts::FRAC_1_SQRT_2));
        }
    }
    KrausChannel::new(kraus).expect("block example channel is trace preserving")
}

/// States `0.6 ψ ⊕ 0.4 P₂/2` for `ψ ∈ {|0⟩⟨0|, |+⟩⟨+|}`, fixed by [`block_example_channel`].
pub fn block_example_states() -> (DensityOperator, DensityOperator) {
    let mut s1 = ComplexMatrix::zeros(4, 4);
    s1[(0, 0)] = c64(0.6, 0.0);
    let mut s2 = ComplexMatrix::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            s2[(i, j)] = c64(0.3, 0.0);
        }
    }
    for s in [&mut s1, &mut s2] {
        s[(2, 2)] = c64(0.2, 0.0);
        s[(3, 3)] = c64(0.2, 0.0);
    }
    (
        DensityOperator::new(s1).expect("valid state"),
        DensityOperator::new(s2).expect("valid state"),
    )
}
