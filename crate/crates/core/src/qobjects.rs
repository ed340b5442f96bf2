//! Validated quantum objects and the measurement/preparation rules built on them.

use serde::Serialize;

use crate::classical::Distribution;
use crate::error::{Error, Result};
use crate::linalg::{
    all_finite, herm_eig, hermitian_deviation, hermitize, identity, max_abs_diff, op_norm, psd_sqrt, real_trace,
    support_pinv, support_projector, trace_out, ComplexMatrix, ComplexVector, Subsystem,
};
use crate::tol;

fn check_square(m: &ComplexMatrix, what: &str) -> Result<usize> {
    if !m.is_square() || m.nrows() == 0 {
        return Err(Error::Shape(format!("{what} must be a nonempty square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    if !all_finite(m) {
        return Err(Error::validation("finite", format!("{what} has a non-finite entry")));
    }
    Ok(m.nrows())
}

fn check_psd(m: &ComplexMatrix, what: &str) -> Result<()> {
    let dev = hermitian_deviation(m);
    if dev > tol::VALIDATION {
        return Err(Error::validation("hermitian", format!("{what}: max |m - m†| = {dev:e}")));
    }
    let min = herm_eig(m)?.min_eigenvalue();
    if min < -tol::VALIDATION {
        return Err(Error::validation("positive", format!("{what}: min eigenvalue {min:e}")));
    }
    Ok(())
}

/// Unit-trace positive semidefinite Hermitian operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

impl DensityOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        check_square(&matrix, "density operator")?;
        check_psd(&matrix, "density operator")?;
        let t = matrix.trace();
        if (t.re - 1.0).abs() > tol::VALIDATION || t.im.abs() > tol::VALIDATION {
            return Err(Error::validation("trace", format!("trace is {t}, expected 1")));
        }
        Ok(DensityOperator { matrix: hermitize(&matrix) })
    }

    /// Normalizes a nonzero PSD operator first.
    pub fn normalized(matrix: ComplexMatrix) -> Result<Self> {
        let t = real_trace(&matrix);
        if t.abs() <= tol::ZERO_PROBABILITY {
            return Err(Error::validation("trace", "cannot normalize a zero-trace operator"));
        }
        Self::new(matrix.unscale(t))
    }

    pub fn pure(v: &ComplexVector) -> Result<Self> {
        let n = v.norm();
        if n == 0.0 {
            return Err(Error::validation("nonzero", "pure state from the zero vector"));
        }
        let u = v.unscale(n);
        Self::new(&u * u.adjoint())
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityOperator {
            matrix: identity(d).unscale(d as f64),
        }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn purity(&self) -> f64 {
        crate::linalg::purity(&self.matrix)
    }

    pub fn support_projector(&self) -> ComplexMatrix {
        support_projector(&self.matrix).expect("density operator is PSD")
    }

    pub fn rank(&self) -> usize {
        herm_eig(&self.matrix).expect("density operator is Hermitian").rank()
    }

    pub fn sqrt(&self) -> ComplexMatrix {
        psd_sqrt(&self.matrix).expect("density operator is PSD")
    }
}

/// Trace behaviour of a Kraus family.
#[derive(Debug, Clone, PartialEq)]
pub enum TpClass {
    TracePreserving,
    /// Carries the deficit operator `I − Σ R†R`.
    TraceDecreasing { deficit: ComplexMatrix },
}

/// Completely positive map given by Kraus operators `R_μ : C^din → C^dout`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    kraus: Vec<ComplexMatrix>,
    din: usize,
    dout: usize,
    class: TpClass,
}

impl KrausChannel {
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::validation("nonempty", "channel needs at least one Kraus operator"))?;
        let (dout, din) = first.shape();
        if din == 0 || dout == 0 {
            return Err(Error::Shape("Kraus operators must be nonempty".into()));
        }
        for (mu, k) in kraus.iter().enumerate() {
            if k.shape() != (dout, din) {
                return Err(Error::Shape(format!("Kraus operator {mu} is {:?}, expected {:?}", k.shape(), (dout, din))));
            }
            if !all_finite(k) {
                return Err(Error::validation("finite", format!("Kraus operator {mu} has a non-finite entry")));
            }
        }
        let gram = kraus_gram(&kraus, din);
        let max = herm_eig(&gram)?.max_eigenvalue();
        if max > 1.0 + tol::VALIDATION {
            return Err(Error::validation(
                "trace-nonincreasing",
                format!("max eigenvalue of Σ R†R is {max}, exceeds 1"),
            ));
        }
        let deficit = identity(din) - &gram;
        let class = if op_norm(&deficit) <= tol::VALIDATION {
            TpClass::TracePreserving
        } else {
            TpClass::TraceDecreasing { deficit }
        };
        Ok(KrausChannel { kraus, din, dout, class })
    }

    pub fn identity(d: usize) -> Self {
        Self::new(vec![identity(d)]).expect("identity channel")
    }

    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        Self::new(vec![u])
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn din(&self) -> usize {
        self.din
    }

    pub fn dout(&self) -> usize {
        self.dout
    }

    pub fn tp_class(&self) -> &TpClass {
        &self.class
    }

    pub fn is_trace_preserving(&self) -> bool {
        matches!(self.class, TpClass::TracePreserving)
    }

    /// `Σ R†R`.
    pub fn gram(&self) -> ComplexMatrix {
        kraus_gram(&self.kraus, self.din)
    }

    /// `Σ R X R†` for an arbitrary operator `X`.
    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(x.shape(), (self.din, self.din), "channel input dimension");
        self.kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.dout, self.dout), |acc, k| acc + k * x * k.adjoint())
    }

    /// `(I ⊗ E)(|Φ⁺⟩⟨Φ⁺|)`, unit trace for trace-preserving maps.
    pub fn choi(&self) -> ComplexMatrix {
        let n = self.din * self.dout;
        self.kraus.iter().fold(ComplexMatrix::zeros(n, n), |acc, k| {
            let v = crate::duality::operator_to_state(k);
            acc + &v * v.adjoint()
        })
    }

    /// Precomposes with `X ↦ V X V†`.
    pub fn after_isometry(&self, v: &ComplexMatrix) -> Result<KrausChannel> {
        if v.nrows() != self.din {
            return Err(Error::Shape(format!("isometry has {} rows, channel input is {}", v.nrows(), self.din)));
        }
        KrausChannel::new(self.kraus.iter().map(|k| k * v).collect())
    }

    /// Equal-weight mixture of two channels with matching dimensions.
    pub fn average(a: &KrausChannel, b: &KrausChannel) -> Result<KrausChannel> {
        if (a.din, a.dout) != (b.din, b.dout) {
            return Err(Error::Shape("channels have different dimensions".into()));
        }
        let s = std::f64::consts::FRAC_1_SQRT_2;
        KrausChannel::new(a.kraus.iter().chain(b.kraus.iter()).map(|k| k.scale(s)).collect())
    }
}

fn kraus_gram(kraus: &[ComplexMatrix], din: usize) -> ComplexMatrix {
    hermitize(&kraus.iter().fold(ComplexMatrix::zeros(din, din), |acc, k| acc + k.adjoint() * k))
}

/// Operator-norm distance between Choi matrices (channel action distance).
pub fn choi_distance(a: &KrausChannel, b: &KrausChannel) -> f64 {
    if (a.din, a.dout) != (b.din, b.dout) {
        return f64::INFINITY;
    }
    op_norm(&(a.choi() - b.choi()))
}

/// Positive operators summing to the identity, with outcome labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<ComplexMatrix>,
    labels: Vec<String>,
}

impl Povm {
    pub fn new(elements: Vec<ComplexMatrix>, labels: Vec<String>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::validation("nonempty", "POVM has no elements"));
        }
        if labels.len() != elements.len() {
            return Err(Error::Shape(format!("{} labels for {} elements", labels.len(), elements.len())));
        }
        let d = check_square(&elements[0], "POVM element")?;
        let mut sum = ComplexMatrix::zeros(d, d);
        for (k, e) in elements.iter().enumerate() {
            if check_square(e, "POVM element")? != d {
                return Err(Error::Shape(format!("POVM element {k} has dimension {}, expected {d}", e.nrows())));
            }
            check_psd(e, &format!("POVM element {k}"))?;
            sum += e;
        }
        let dev = max_abs_diff(&sum, &identity(d));
        if dev > tol::VALIDATION {
            return Err(Error::validation("completeness", format!("elements sum to I within {dev:e}")));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(Error::validation("unique-labels", format!("label `{dup}` repeated")));
        }
        Ok(Povm {
            elements: elements.iter().map(hermitize).collect(),
            labels,
        })
    }

    /// Labels `"0", "1", …`.
    pub fn unlabeled(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let labels = (0..elements.len()).map(|k| k.to_string()).collect();
        Self::new(elements, labels)
    }

    /// Projective measurement in the computational basis.
    pub fn computational(d: usize) -> Self {
        let elements = (0..d)
            .map(|k| ComplexMatrix::from_fn(d, d, |i, j| if i == k && j == k { num_complex::Complex64::ONE } else { num_complex::Complex64::ZERO }))
            .collect();
        Self::unlabeled(elements).expect("computational basis POVM")
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].nrows()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::validation("known-outcome", format!("no outcome labelled `{label}`")))
    }

    /// Transposes every element in the given orthonormal basis.
    pub fn transposed(&self, basis: Option<&ComplexMatrix>) -> Povm {
        Povm {
            elements: self.elements.iter().map(|e| crate::linalg::transpose_in(e, basis)).collect(),
            labels: self.labels.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleMember {
    pub weight: f64,
    pub state: DensityOperator,
    pub label: Option<String>,
}

/// Finite ensemble `{(p_j, ρ_j)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    members: Vec<EnsembleMember>,
}

impl Ensemble {
    pub fn new(members: Vec<EnsembleMember>) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::validation("nonempty", "ensemble has no members"))?;
        let d = first.state.dim();
        for (j, m) in members.iter().enumerate() {
            if !m.weight.is_finite() || m.weight < 0.0 {
                return Err(Error::validation("nonnegative", format!("member {j} has weight {}", m.weight)));
            }
            if m.state.dim() != d {
                return Err(Error::Shape(format!("member {j} has dimension {}, expected {d}", m.state.dim())));
            }
        }
        let sum: f64 = members.iter().map(|m| m.weight).sum();
        if (sum - 1.0).abs() > tol::VALIDATION {
            return Err(Error::validation("normalized", format!("weights sum to {sum}")));
        }
        Ok(Ensemble { members })
    }

    pub fn from_pairs(pairs: Vec<(f64, DensityOperator)>) -> Result<Self> {
        Self::new(
            pairs
                .into_iter()
                .map(|(weight, state)| EnsembleMember { weight, state, label: None })
                .collect(),
        )
    }

    pub fn members(&self) -> &[EnsembleMember] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.members[0].state.dim()
    }

    /// `Σ p_j ρ_j`.
    pub fn average(&self) -> ComplexMatrix {
        let d = self.dim();
        self.members
            .iter()
            .fold(ComplexMatrix::zeros(d, d), |acc, m| acc + m.state.matrix().scale(m.weight))
    }
}

fn check_dims(expected: usize, got: usize, what: &str) -> Result<()> {
    if expected != got {
        return Err(Error::Shape(format!("{what}: dimension {got}, expected {expected}")));
    }
    Ok(())
}

pub fn apply_channel(e: &KrausChannel, rho: &DensityOperator) -> Result<ComplexMatrix> {
    check_dims(e.din(), rho.dim(), "channel input")?;
    Ok(hermitize(&e.apply(rho.matrix())))
}

/// Generalized Born rule `P(m) = Tr(M_m ρ)`.
pub fn born(m: &Povm, rho: &DensityOperator) -> Result<Distribution> {
    check_dims(m.dim(), rho.dim(), "POVM")?;
    let probs = m
        .elements()
        .iter()
        .map(|e| (e * rho.matrix()).trace().re.max(0.0))
        .collect();
    Distribution::new(probs)
}

/// Outcome probability and Lüders-style update `√M ρ √M / P(M)`.
pub fn m_measure(m: &Povm, outcome: &str, rho: &DensityOperator) -> Result<(f64, DensityOperator)> {
    check_dims(m.dim(), rho.dim(), "POVM")?;
    let k = m.index_of(outcome)?;
    let e = &m.elements()[k];
    let p = (e * rho.matrix()).trace().re;
    if p <= tol::ZERO_PROBABILITY {
        return Err(Error::ZeroProbability {
            outcome: outcome.to_string(),
            probability: p,
        });
    }
    let s = psd_sqrt(e)?;
    let post = DensityOperator::new(hermitize(&(&s * rho.matrix() * &s).unscale(p)))?;
    Ok((p, post))
}

/// Ensemble `{(Tr(Mρ), √ρ M √ρ / Tr(Mρ))}`; impossible outcomes are dropped.
pub fn m_prepare(m: &Povm, rho: &DensityOperator) -> Result<Ensemble> {
    check_dims(m.dim(), rho.dim(), "POVM")?;
    let sqrt_rho = rho.sqrt();
    let mut members = Vec::new();
    for (e, label) in m.elements().iter().zip(m.labels()) {
        let p = (e * rho.matrix()).trace().re;
        if p <= tol::ZERO_PROBABILITY {
            continue;
        }
        let state = DensityOperator::new(hermitize(&(&sqrt_rho * e * &sqrt_rho).unscale(p)))?;
        members.push(EnsembleMember {
            weight: p,
            state,
            label: Some(label.clone()),
        });
    }
    // drop the rounding left over from removed outcomes
    let total: f64 = members.iter().map(|m| m.weight).sum();
    for member in &mut members {
        member.weight /= total;
    }
    Ensemble::new(members)
}

/// POVM whose preparation of `rho` reproduces `ens`.
///
/// On the support of `rho` the elements are `p ρ^{-1/2} ρ_j ρ^{-1/2}`; the
/// complement projector is split evenly across all elements.
pub fn povm_from_ensemble(ens: &Ensemble, rho: &DensityOperator) -> Result<Povm> {
    check_dims(rho.dim(), ens.dim(), "ensemble")?;
    let dev = max_abs_diff(&ens.average(), rho.matrix());
    if dev > tol::MIXTURE {
        return Err(Error::validation("mixture", format!("ensemble average differs from ρ by {dev:e}")));
    }
    let d = rho.dim();
    let (inv_half, _) = support_pinv(rho.matrix(), -0.5)?;
    let complement = identity(d) - rho.support_projector();
    let share = complement.unscale(ens.len() as f64);
    let elements = ens
        .members()
        .iter()
        .map(|m| hermitize(&((&inv_half * m.state.matrix() * &inv_half).scale(m.weight) + &share)))
        .collect();
    let labels = ens
        .members()
        .iter()
        .enumerate()
        .map(|(j, m)| m.label.clone().unwrap_or_else(|| j.to_string()))
        .collect();
    Povm::new(elements, labels)
}

/// Kraus family read off the eigenvectors of a Choi matrix on `din ⊗ dout`.
pub fn kraus_from_choi(choi: &ComplexMatrix, din: usize, dout: usize) -> Result<KrausChannel> {
    if choi.shape() != (din * dout, din * dout) {
        return Err(Error::Shape(format!(
            "Choi matrix is {}x{}, expected {n}x{n}",
            choi.nrows(),
            choi.ncols(),
            n = din * dout
        )));
    }
    check_psd(choi, "Choi matrix")?;
    let eig = herm_eig(choi)?;
    let cut = tol::RANK_REL * eig.max_eigenvalue();
    let mut kraus = Vec::new();
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l <= cut || l <= 0.0 {
            continue;
        }
        let v = eig.vector(k).scale((l * din as f64).sqrt());
        kraus.push(crate::duality::state_to_operator(&v, (din, dout))?.unscale((din as f64).sqrt()));
    }
    if kraus.is_empty() {
        kraus.push(ComplexMatrix::zeros(dout, din));
    }
    KrausChannel::new(kraus)
}

/// Composes a channel into `d_b ⊗ d_c` with a partial trace over one output factor.
///
/// `keep = A` keeps the first output factor, `keep = B` the second.
pub fn reduced_channel(e: &KrausChannel, dims: (usize, usize), keep: Subsystem) -> Result<KrausChannel> {
    let (db, dc) = dims;
    if db * dc != e.dout() {
        return Err(Error::Shape(format!("output dimension {} does not factor as {db} x {dc}", e.dout())));
    }
    let (traced, kept) = match keep {
        Subsystem::A => (2, db),
        Subsystem::B => (1, dc),
    };
    let choi = trace_out(&e.choi(), &[e.din(), db, dc], traced)?;
    kraus_from_choi(&hermitize(&choi), e.din(), kept)
}

/// `|Φ⁺⟩ = d^{-1/2} Σ_j |j⟩⊗|j⟩`.
pub fn max_entangled(d: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(d * d);
    let amp = num_complex::Complex64::new(1.0 / (d as f64).sqrt(), 0.0);
    for j in 0..d {
        v[j * d + j] = amp;
    }
    v
}

/// Deviation summary serialized into reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// `true` when `tolerance` is a lower threshold rather than an upper bound.
    #[serde(skip)]
    pub lower_bound: bool,
}

impl Check {
    /// Passes when `value <= tolerance`.
    pub fn at_most(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
            lower_bound: false,
        }
    }

    /// Passes when `value >= threshold`.
    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Check {
            name: name.into(),
            value,
            tolerance: threshold,
            pass: value >= threshold,
            lower_bound: true,
        }
    }

    /// Re-evaluates an upper-bound check against a new tolerance; lower-bound checks are returned unchanged.
    pub fn with_tolerance(&self, tolerance: f64) -> Self {
        if self.lower_bound {
            self.clone()
        } else {
            Check::at_most(self.name.clone(), self.value, tolerance)
        }
    }
}
