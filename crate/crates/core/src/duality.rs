//! Channel-state duality: the standard Jamiołkowski isomorphism and the
//! state-dependent variant between `(ρ_A, E restricted to supp ρ_A)` pairs and
//! bipartite density operators.
//!
//! Bipartite index convention: A is the slow index, so entry `j·d_B + b` of a
//! vector is the amplitude of `|j⟩⊗|b⟩`. All transposes are taken in the
//! isomorphism basis, whose orthonormal vectors are the columns of the optional
//! `basis` argument (computational basis when absent).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    all_finite, herm_eig, hermitian_deviation, hermitize, identity, max_abs_diff, op_norm, partial_trace, psd_sqrt,
    real_trace, support_pinv, trace_out, transpose_in, unitary_deviation, vectorize, ComplexMatrix, ComplexVector,
    Subsystem,
};
use crate::qobjects::{kraus_from_choi, reduced_channel, Check, DensityOperator, KrausChannel, Povm};
use crate::tol;

/// Density operator on `d_A ⊗ d_B` with declared factor dimensions.
///
/// States produced by the standard isomorphism from trace-decreasing maps are
/// subnormalized; every other constructor requires unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    matrix: ComplexMatrix,
    dims: (usize, usize),
}

impl BipartiteState {
    pub fn new(state: DensityOperator, dims: (usize, usize)) -> Result<Self> {
        check_dims(state.matrix(), dims)?;
        Ok(BipartiteState {
            matrix: state.into_matrix(),
            dims,
        })
    }

    pub fn from_matrix(matrix: ComplexMatrix, dims: (usize, usize)) -> Result<Self> {
        check_dims(&matrix, dims)?;
        Self::new(DensityOperator::new(matrix)?, dims)
    }

    /// Positive operator with trace in `(0, 1]`.
    pub fn subnormalized(matrix: ComplexMatrix, dims: (usize, usize)) -> Result<Self> {
        check_dims(&matrix, dims)?;
        if !all_finite(&matrix) {
            return Err(Error::validation("finite", "bipartite operator has a non-finite entry"));
        }
        let dev = hermitian_deviation(&matrix);
        if dev > tol::VALIDATION {
            return Err(Error::validation("hermitian", format!("max |τ - τ†| = {dev:e}")));
        }
        let min = herm_eig(&matrix)?.min_eigenvalue();
        if min < -tol::VALIDATION {
            return Err(Error::validation("positive", format!("min eigenvalue {min:e}")));
        }
        let t = real_trace(&matrix);
        if t <= 0.0 || t > 1.0 + tol::VALIDATION {
            return Err(Error::validation("trace", format!("trace {t} outside (0, 1]")));
        }
        Ok(BipartiteState {
            matrix: hermitize(&matrix),
            dims,
        })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn trace(&self) -> f64 {
        real_trace(&self.matrix)
    }

    pub fn is_normalized(&self) -> bool {
        (self.trace() - 1.0).abs() <= tol::VALIDATION
    }

    /// Reduced operator on the kept factor.
    pub fn reduced(&self, keep: Subsystem) -> ComplexMatrix {
        hermitize(&partial_trace(&self.matrix, self.dims, keep).expect("dims checked at construction"))
    }
}

fn check_dims(m: &ComplexMatrix, dims: (usize, usize)) -> Result<()> {
    let n = dims.0 * dims.1;
    if dims.0 == 0 || dims.1 == 0 || m.nrows() != n || m.ncols() != n {
        return Err(Error::Shape(format!(
            "{}x{} matrix does not match dims {dims:?}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

/// A state together with a channel that is trace preserving on its support.
#[derive(Debug, Clone, PartialEq)]
pub struct IsoPair {
    rho: DensityOperator,
    channel: KrausChannel,
    support_rank: usize,
}

impl IsoPair {
    pub fn new(rho: DensityOperator, channel: KrausChannel) -> Result<Self> {
        if channel.din() != rho.dim() {
            return Err(Error::Shape(format!(
                "channel input dimension {} does not match state dimension {}",
                channel.din(),
                rho.dim()
            )));
        }
        let p = rho.support_projector();
        let dev = max_abs_diff(&(&p * channel.gram() * &p), &p);
        if dev > tol::VALIDATION {
            return Err(Error::validation(
                "tp-on-support",
                format!("P(Σ R†R)P differs from P by {dev:e}"),
            ));
        }
        let support_rank = rho.rank();
        Ok(IsoPair {
            rho,
            channel,
            support_rank,
        })
    }

    pub fn rho(&self) -> &DensityOperator {
        &self.rho
    }

    pub fn channel(&self) -> &KrausChannel {
        &self.channel
    }

    pub fn support_rank(&self) -> usize {
        self.support_rank
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.channel.din(), self.channel.dout())
    }

    /// Orthonormal eigenvectors of `ρ` spanning its support.
    pub fn support_isometry(&self) -> ComplexMatrix {
        herm_eig(self.rho.matrix()).expect("density operator is Hermitian").leading(self.support_rank)
    }

    /// Choi matrix of the channel precomposed with `X ↦ V X V†`.
    pub fn restricted_choi(&self, v: &ComplexMatrix) -> Result<ComplexMatrix> {
        Ok(self.channel.after_isometry(v)?.choi())
    }
}

fn check_basis(basis: Option<&ComplexMatrix>, d: usize) -> Result<()> {
    if let Some(u) = basis {
        if u.shape() != (d, d) {
            return Err(Error::Shape(format!("basis is {}x{}, expected {d}x{d}", u.nrows(), u.ncols())));
        }
        let dev = unitary_deviation(u);
        if dev > tol::VALIDATION {
            return Err(Error::validation("unitary-basis", format!("U†U differs from I by {dev:e}")));
        }
    }
    Ok(())
}

fn check_size(da: usize, db: usize) -> Result<()> {
    let n = da * db;
    if n > tol::MAX_DIM {
        return Err(Error::SizeLimit {
            requested: n,
            limit: tol::MAX_DIM,
        });
    }
    Ok(())
}

/// `τ = (I⊗E)(|Φ⁺⟩⟨Φ⁺|)`; trace-decreasing maps give a subnormalized state.
pub fn std_iso_forward(e: &KrausChannel) -> Result<BipartiteState> {
    check_size(e.din(), e.dout())?;
    BipartiteState::subnormalized(e.choi(), (e.din(), e.dout()))
}

/// Action `E(σ) = d_A² ⟨Φ⁺|σ⊗τ|Φ⁺⟩` of the map encoded by `tau`.
pub fn std_iso_reverse(tau: &BipartiteState, sigma: &DensityOperator) -> Result<ComplexMatrix> {
    std_iso_apply(tau, sigma.matrix())
}

/// Linear extension of [`std_iso_reverse`] to arbitrary operators.
pub fn std_iso_apply(tau: &BipartiteState, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (da, db) = tau.dims();
    if x.shape() != (da, da) {
        return Err(Error::Shape(format!("input is {}x{}, expected {da}x{da}", x.nrows(), x.ncols())));
    }
    let t = tau.matrix();
    let mut out = ComplexMatrix::zeros(db, db);
    for j in 0..da {
        for k in 0..da {
            let s = x[(j, k)];
            if s == Complex64::ZERO {
                continue;
            }
            out += t.view((j * db, k * db), (db, db)) * s;
        }
    }
    Ok(out.scale(da as f64))
}

/// `|Ψ_R⟩ = d_A^{-1/2} Σ_j |j⟩⊗R|j⟩` for `R : C^{d_A} → C^{d_B}`.
pub fn operator_to_state(r: &ComplexMatrix) -> ComplexVector {
    let (db, da) = r.shape();
    let s = 1.0 / (da as f64).sqrt();
    ComplexVector::from_fn(da * db, |i, _| r[(i % db, i / db)] * s)
}

/// Inverse of [`operator_to_state`]; `dims = (d_A, d_B)`.
pub fn state_to_operator(psi: &ComplexVector, dims: (usize, usize)) -> Result<ComplexMatrix> {
    let (da, db) = dims;
    if psi.len() != da * db {
        return Err(Error::Shape(format!("vector length {} does not match dims {dims:?}", psi.len())));
    }
    let s = (da as f64).sqrt();
    Ok(ComplexMatrix::from_fn(db, da, |b, j| psi[j * db + b] * s))
}

/// `τ = (I⊗E)(|Φ⟩⟨Φ|)` with `|Φ⟩ = √d_A (√(ρ^T) ⊗ I)|Φ⁺⟩`.
pub fn leifer_forward(pair: &IsoPair, basis: Option<&ComplexMatrix>) -> Result<BipartiteState> {
    let (da, db) = pair.dims();
    check_basis(basis, da)?;
    check_size(da, db)?;
    let root = psd_sqrt(&transpose_in(pair.rho().matrix(), basis))?;
    // |Φ⟩ reshaped to a d_A×d_A matrix: √d_A·√(ρ^T)·(U Uᵀ)/√d_A
    let phi = match basis {
        None => root,
        Some(u) => root * (u * u.transpose()),
    };
    let n = da * db;
    let mut tau = ComplexMatrix::zeros(n, n);
    for k in pair.channel().kraus() {
        let v = vectorize(&(&phi * k.transpose()));
        tau += &v * v.adjoint();
    }
    BipartiteState::from_matrix(hermitize(&tau), (da, db))
}

/// Recovers the state and the channel on its support from a bipartite state.
///
/// The returned channel is trace preserving on `supp ρ` and annihilates its
/// complement.
pub fn leifer_reverse(tau: &BipartiteState, basis: Option<&ComplexMatrix>) -> Result<IsoPair> {
    let (da, db) = tau.dims();
    check_basis(basis, da)?;
    if !tau.is_normalized() {
        return Err(Error::validation("trace", format!("τ has trace {}", tau.trace())));
    }
    let tau_a = tau.reduced(Subsystem::A);
    let rho = DensityOperator::new(hermitize(&transpose_in(&tau_a, basis)))?;
    let (inv_half, r) = support_pinv(&tau_a, -0.5)?;
    let w = herm_eig(&tau_a)?.leading(r);
    let left = crate::linalg::kron(&inv_half, &identity(db))?;
    let sigma = (&left * tau.matrix() * &left).unscale(r as f64);
    let wi = crate::linalg::kron(&w, &identity(db))?;
    let sigma_c = hermitize(&(wi.adjoint() * sigma * &wi));
    let compressed = kraus_from_choi(&sigma_c, r, db)?;
    // support vectors of ρ paired with the columns of w
    let v = match basis {
        None => w.map(|z| z.conj()),
        Some(u) => u * (u.adjoint() * &w).map(|z| z.conj()),
    };
    let kraus = compressed.kraus().iter().map(|k| k * v.adjoint()).collect();
    IsoPair::new(rho, KrausChannel::new(kraus)?)
}

/// `σ = (τ_A^{-1/2}⊗I) τ (τ_A^{-1/2}⊗I) / r`, unit trace with `Tr_B σ = P_A / r`.
pub fn conditional_state(tau: &BipartiteState) -> Result<BipartiteState> {
    let (_, db) = tau.dims();
    let (inv_half, r) = support_pinv(&tau.reduced(Subsystem::A), -0.5)?;
    let left = crate::linalg::kron(&inv_half, &identity(db))?;
    BipartiteState::from_matrix(hermitize(&(&left * tau.matrix() * &left).unscale(r as f64)), tau.dims())
}

/// Forward then reverse; reports the state deviation and the Choi distance of
/// the channels restricted to `supp ρ`.
pub fn verify_roundtrip(pair: &IsoPair, basis: Option<&ComplexMatrix>) -> Result<Vec<Check>> {
    let tau = leifer_forward(pair, basis)?;
    let back = leifer_reverse(&tau, basis)?;
    let state_dev = op_norm(&(pair.rho().matrix() - back.rho().matrix()));
    let v = pair.support_isometry();
    let channel_dev = if back.support_rank() == pair.support_rank() {
        op_norm(&(pair.restricted_choi(&v)? - back.restricted_choi(&v)?))
    } else {
        f64::INFINITY
    };
    Ok(vec![
        Check::at_most("roundtrip.state", state_dev, tol::ROUNDTRIP),
        Check::at_most("roundtrip.channel_on_support", channel_dev, tol::ROUNDTRIP),
    ])
}

/// `Tr_C` of the image of `E_{BC|A}` against the image of the reduced channel.
pub fn verify_trace_commute(rho: &DensityOperator, e: &KrausChannel, dims: (usize, usize)) -> Result<Check> {
    let (db, dc) = dims;
    let pair = IsoPair::new(rho.clone(), e.clone())?;
    let reduced = reduced_channel(e, dims, Subsystem::A)?;
    let tau = leifer_forward(&pair, None)?;
    let traced = trace_out(tau.matrix(), &[rho.dim(), db, dc], 2)?;
    let direct = leifer_forward(&IsoPair::new(rho.clone(), reduced)?, None)?;
    Ok(Check::at_most(
        "trace_commute",
        op_norm(&(traced - direct.matrix())),
        tol::ROUNDTRIP,
    ))
}

/// Measurement-side diagram: `(√M⊗I)τ(√M⊗I)` against the image of
/// `(√(Mᵀ) ρ √(Mᵀ), E)`, both unnormalized.
///
/// The second check compares the A marginals of the two paths.
pub fn verify_measure_commute(
    rho: &DensityOperator,
    e: &KrausChannel,
    m: &Povm,
    outcome: &str,
) -> Result<Vec<Check>> {
    if m.dim() != rho.dim() {
        return Err(Error::Shape(format!("POVM dimension {} does not match state dimension {}", m.dim(), rho.dim())));
    }
    let k = m.index_of(outcome)?;
    let pair = IsoPair::new(rho.clone(), e.clone())?;
    let (da, db) = pair.dims();
    let tau = leifer_forward(&pair, None)?;
    let root = psd_sqrt(&m.elements()[k])?;
    let lift = crate::linalg::kron(&root, &identity(db))?;
    let measured = &lift * tau.matrix() * &lift;
    let p_parallel = real_trace(&measured);

    let root_t = root.transpose();
    let updated = &root_t * rho.matrix() * &root_t;
    let p_sequential = real_trace(&updated);
    let p = p_parallel.min(p_sequential);
    if p <= tol::ZERO_PROBABILITY {
        return Err(Error::ZeroProbability {
            outcome: outcome.to_string(),
            probability: p,
        });
    }
    let next = IsoPair::new(DensityOperator::new(hermitize(&updated.unscale(p_sequential)))?, e.clone())
        .map_err(|err| Error::precondition("tp-on-updated-support", err.to_string()))?;
    let prepared = leifer_forward(&next, None)?.into_matrix().scale(p_sequential);
    let marginal_dev = op_norm(
        &(partial_trace(&measured, (da, db), Subsystem::A)? - partial_trace(&prepared, (da, db), Subsystem::A)?),
    );
    Ok(vec![
        Check::at_most("measure_commute", op_norm(&(measured - prepared)), tol::ROUNDTRIP),
        Check::at_most("measure_commute.marginal_a", marginal_dev, tol::ROUNDTRIP),
    ])
}
