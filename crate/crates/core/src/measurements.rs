//! POVMs, density operators, Choi operators and the measurement families
//! used throughout the crate.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{
    self, c, hermitian_eig, kron, partial_trace, re, CMatrix, Hermitian, Keep, LinalgError, C64,
};

/// Default tolerance for positivity and completeness checks.
pub const POVM_TOL: f64 = 1e-9;
/// Tolerance on `|tr ρ − 1|` for density operators.
pub const TRACE_TOL: f64 = 1e-10;
/// Probabilities in `[-PROB_CLAMP, 0)` are rounded to zero.
pub const PROB_CLAMP: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PovmError {
    #[error("a measurement needs at least one effect")]
    Empty,
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("effect {outcome} is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { outcome: usize, deviation: f64 },
    #[error("effect {outcome} is not positive (most negative eigenvalue {eigenvalue:.3e})")]
    NotPositive { outcome: usize, eigenvalue: f64 },
    #[error("effects do not sum to the identity (‖ΣM_j − I‖_max = {deviation:.3e})")]
    NotComplete { deviation: f64 },
    #[error("invalid state: {0}")]
    InvalidState(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Worst-case violation magnitudes of a candidate POVM.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct PovmDiagnostics {
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
    pub completeness: f64,
}

/// An `n`-outcome measurement on a `d`-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    dim: usize,
    effects: Vec<Hermitian>,
}

impl Povm {
    /// Validates effects at the default tolerance.
    pub fn new(effects: Vec<CMatrix>) -> Result<Povm, PovmError> {
        validate_povm(&effects, POVM_TOL)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn effects(&self) -> &[Hermitian] {
        &self.effects
    }

    pub fn effect(&self, j: usize) -> &Hermitian {
        &self.effects[j]
    }

    pub fn diagnostics(&self) -> PovmDiagnostics {
        let raw: Vec<CMatrix> = self.effects.iter().map(|e| e.matrix().clone()).collect();
        diagnose(&raw).expect("validated POVM has consistent shapes")
    }

    /// Conjugates every effect by a unitary, `U M_j U†`.
    pub fn rotated(&self, u: &CMatrix) -> Result<Povm, PovmError> {
        Povm::new(self.effects.iter().map(|e| e.conjugate_by(u).into_matrix()).collect())
    }

    /// Embeds every effect through an isometry `V` (`d' × d`) and returns
    /// the raw effects `V M_j V†` (not complete on the larger space).
    pub fn embedded_effects(&self, v: &CMatrix) -> Vec<Hermitian> {
        self.effects.iter().map(|e| e.conjugate_by(v)).collect()
    }

    pub fn to_file(&self) -> PovmFile {
        PovmFile {
            dim: self.dim,
            outcomes: self.outcomes(),
            effects: self.effects.iter().map(|e| e.matrix().to_pairs()).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("POVM serializes")
    }
}

/// On-disk measurement encoding: complex entries as `[re, im]`, row-major.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct PovmFile {
    pub dim: usize,
    pub outcomes: usize,
    pub effects: Vec<Vec<Vec<[f64; 2]>>>,
}

impl PovmFile {
    pub fn raw_effects(&self) -> Result<Vec<CMatrix>, PovmError> {
        if self.effects.len() != self.outcomes {
            return Err(PovmError::ShapeMismatch(format!(
                "declared {} outcomes but found {} effects",
                self.outcomes,
                self.effects.len()
            )));
        }
        let mats = self
            .effects
            .iter()
            .map(|e| CMatrix::from_pairs(e))
            .collect::<Result<Vec<_>, _>>()?;
        if mats.iter().any(|m| m.rows() != self.dim || m.cols() != self.dim) {
            return Err(PovmError::ShapeMismatch(format!(
                "every effect must be {0}x{0}",
                self.dim
            )));
        }
        Ok(mats)
    }

    pub fn into_povm(&self, tol: f64) -> Result<Povm, PovmError> {
        validate_povm(&self.raw_effects()?, tol)
    }
}

pub fn povm_from_json(text: &str, tol: f64) -> Result<Povm, crate::Error> {
    let file: PovmFile = serde_json::from_str(text)?;
    Ok(file.into_povm(tol)?)
}

fn check_shapes(raw: &[CMatrix]) -> Result<usize, PovmError> {
    let first = raw.first().ok_or(PovmError::Empty)?;
    let d = first.rows();
    for (j, m) in raw.iter().enumerate() {
        if m.rows() != d || m.cols() != d {
            return Err(PovmError::ShapeMismatch(format!(
                "effect {j} is {}x{}, expected {d}x{d}",
                m.rows(),
                m.cols()
            )));
        }
        if !m.is_finite() {
            return Err(PovmError::Linalg(LinalgError::NonFinite));
        }
    }
    Ok(d)
}

/// Measures how far a list of matrices is from being a POVM.
pub fn diagnose(raw: &[CMatrix]) -> Result<PovmDiagnostics, PovmError> {
    let d = check_shapes(raw)?;
    let hermiticity = raw.iter().map(CMatrix::hermiticity_defect).fold(0.0, f64::max);
    let min_eigenvalue = raw
        .iter()
        .map(|m| Hermitian::from_hermitian_part(m).min_eigenvalue())
        .fold(f64::INFINITY, f64::min);
    let mut total = CMatrix::zeros(d, d);
    for m in raw {
        total = &total + m;
    }
    let completeness = total.distance(&CMatrix::identity(d));
    Ok(PovmDiagnostics {
        hermiticity,
        min_eigenvalue,
        completeness,
    })
}

/// Checks hermiticity, positivity and completeness, in that order.
pub fn validate_povm(raw: &[CMatrix], tol: f64) -> Result<Povm, PovmError> {
    let d = check_shapes(raw)?;
    let mut effects = Vec::with_capacity(raw.len());
    for (outcome, m) in raw.iter().enumerate() {
        let deviation = m.hermiticity_defect();
        if deviation > tol.max(linalg::HERMITICITY_TOL) {
            return Err(PovmError::NotHermitian { outcome, deviation });
        }
        effects.push(Hermitian::from_hermitian_part(m));
    }
    let mut worst: Option<(usize, f64)> = None;
    for (outcome, e) in effects.iter().enumerate() {
        let lo = e.min_eigenvalue();
        if lo < -tol && worst.map_or(true, |(_, w)| lo < w) {
            worst = Some((outcome, lo));
        }
    }
    if let Some((outcome, eigenvalue)) = worst {
        return Err(PovmError::NotPositive { outcome, eigenvalue });
    }
    let mut total = CMatrix::zeros(d, d);
    for e in &effects {
        total = &total + e.matrix();
    }
    let deviation = total.distance(&CMatrix::identity(d));
    if deviation > tol {
        return Err(PovmError::NotComplete { deviation });
    }
    Ok(Povm { dim: d, effects })
}

/// A density operator: PSD with unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator(Hermitian);

impl DensityOperator {
    pub fn new(m: CMatrix) -> Result<Self, PovmError> {
        let h = Hermitian::new(m).map_err(|e| PovmError::InvalidState(e.to_string()))?;
        let tr = h.trace_re();
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(PovmError::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let lo = h.min_eigenvalue();
        if lo < -POVM_TOL {
            return Err(PovmError::InvalidState(format!(
                "not positive (eigenvalue {lo:.3e})"
            )));
        }
        Ok(DensityOperator(h))
    }

    /// `|v⟩⟨v|` for a unit vector.
    pub fn pure(v: &[C64]) -> Result<Self, PovmError> {
        check_unit(v)?;
        Ok(DensityOperator(Hermitian::projector(v)))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityOperator(Hermitian::identity(d).scale(1.0 / d as f64))
    }

    /// Qubit state with Bloch vector `(x, y, z)`, `|r| ≤ 1`.
    pub fn from_bloch(x: f64, y: f64, z: f64) -> Result<Self, PovmError> {
        let r2 = x * x + y * y + z * z;
        if r2 > 1.0 + 1e-12 {
            return Err(PovmError::InvalidState(format!("Bloch vector length {}", r2.sqrt())));
        }
        let m = CMatrix::from_rows(&[
            vec![re(0.5 * (1.0 + z)), c(0.5 * x, -0.5 * y)],
            vec![c(0.5 * x, 0.5 * y), re(0.5 * (1.0 - z))],
        ]);
        Ok(DensityOperator(Hermitian::from_hermitian_part(&m)))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn hermitian(&self) -> &Hermitian {
        &self.0
    }

    pub fn matrix(&self) -> &CMatrix {
        self.0.matrix()
    }
}

fn check_unit(v: &[C64]) -> Result<(), PovmError> {
    let n = linalg::norm(v);
    if (n - 1.0).abs() > 1e-12 {
        return Err(PovmError::InvalidParameter(format!(
            "vector must be normalized (norm {n})"
        )));
    }
    Ok(())
}

/// Clamps a probability computed in floating point.
pub fn clamp_probability(p: f64) -> Result<f64, PovmError> {
    if !(-PROB_CLAMP..=1.0 + PROB_CLAMP).contains(&p) || !p.is_finite() {
        return Err(PovmError::InvalidState(format!("probability {p} out of range")));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// Outcome distribution `p_j = tr(M_j ρ)`.
pub fn apply(m: &Povm, rho: &DensityOperator) -> Result<Vec<f64>, PovmError> {
    if m.dim() != rho.dim() {
        return Err(PovmError::ShapeMismatch(format!(
            "measurement acts on dimension {} but state has dimension {}",
            m.dim(),
            rho.dim()
        )));
    }
    m.effects
        .iter()
        .map(|e| clamp_probability(e.expectation(rho.matrix())))
        .collect()
}

/// Choi operator `Σ_j |j⟩⟨j| ⊗ M_jᵀ` of a measurement seen as a
/// quantum-to-classical channel (unnormalized maximally entangled input).
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiOperator {
    n: usize,
    d: usize,
    matrix: Hermitian,
}

impl ChoiOperator {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &Hermitian {
        &self.matrix
    }

    /// The `d × d` diagonal block for outcome `j`, i.e. `M_jᵀ`.
    pub fn block(&self, j: usize) -> CMatrix {
        self.matrix.matrix().block(j * self.d, j * self.d, self.d, self.d)
    }

    /// True when every off-diagonal block vanishes.
    pub fn is_block_diagonal(&self, tol: f64) -> bool {
        let m = self.matrix.matrix();
        (0..self.n).all(|j| {
            (0..self.n)
                .filter(|&k| k != j)
                .all(|k| m.block(j * self.d, k * self.d, self.d, self.d).max_abs() <= tol)
        })
    }

    /// Inverts [`choi`]: transposes the diagonal blocks back into effects.
    pub fn to_povm(&self) -> Result<Povm, PovmError> {
        Povm::new((0..self.n).map(|j| self.block(j).transpose()).collect())
    }

    /// Trace over the outcome register; equals `I_d` for any POVM.
    pub fn output_marginal(&self) -> CMatrix {
        partial_trace(self.matrix.matrix(), (self.n, self.d), Keep::B)
            .expect("Choi operator has side n·d")
    }
}

pub fn choi(m: &Povm) -> ChoiOperator {
    let (n, d) = (m.outcomes(), m.dim());
    let mut out = CMatrix::zeros(n * d, n * d);
    for (j, e) in m.effects.iter().enumerate() {
        let mut basis = CMatrix::zeros(n, n);
        basis[(j, j)] = re(1.0);
        out = &out + &kron(&basis, &e.matrix().transpose());
    }
    ChoiOperator {
        n,
        d,
        matrix: Hermitian::from_hermitian_part(&out),
    }
}

/// Universal NOT on qubit operators, `X ↦ tr(X)·I − X`.
pub fn universal_not(x: &Hermitian) -> Result<Hermitian, LinalgError> {
    linalg::universal_not_matrix(x.matrix()).map(|m| Hermitian::from_hermitian_part(&m))
}

/// `cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩`
pub fn qubit_ket(theta: f64, phi: f64) -> Vec<C64> {
    let (s, cs) = (0.5 * theta).sin_cos();
    vec![re(cs), C64::from_polar(s, phi)]
}

/// The unit vector orthogonal to a qubit ket, `(−b*, a*)`.
pub fn qubit_perp(v: &[C64]) -> Vec<C64> {
    assert_eq!(v.len(), 2, "qubit_perp needs a qubit vector");
    vec![-v[1].conj(), v[0].conj()]
}

/// Pure qubit state `|φ⟩` defining the projective pair `{|φ⟩⟨φ|, |φ⊥⟩⟨φ⊥|}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveQubitMeasurement {
    state: Vec<C64>,
}

impl ProjectiveQubitMeasurement {
    pub fn new(phi: &[C64]) -> Result<Self, PovmError> {
        if phi.len() != 2 {
            return Err(PovmError::InvalidParameter(format!(
                "projective qubit measurement needs a 2-vector, got length {}",
                phi.len()
            )));
        }
        check_unit(phi)?;
        Ok(ProjectiveQubitMeasurement {
            state: linalg::canonical_phase(phi),
        })
    }

    pub fn state(&self) -> &[C64] {
        &self.state
    }

    pub fn perp(&self) -> Vec<C64> {
        qubit_perp(&self.state)
    }

    pub fn povm(&self) -> Povm {
        Povm {
            dim: 2,
            effects: vec![Hermitian::projector(&self.state), Hermitian::projector(&self.perp())],
        }
    }
}

pub fn make_projective_qubit(phi: &[C64]) -> Result<Povm, PovmError> {
    Ok(ProjectiveQubitMeasurement::new(phi)?.povm())
}

/// `M₁ = μ|φ⟩⟨φ| + (1−μ)I/2`, `M₂ = Γ(M₁)`.
pub fn make_noisy_qubit(phi: &[C64], mu: f64) -> Result<Povm, PovmError> {
    if !(0.0..=1.0).contains(&mu) {
        return Err(PovmError::InvalidParameter(format!(
            "visibility must lie in [0, 1], got {mu}"
        )));
    }
    let p = ProjectiveQubitMeasurement::new(phi)?;
    let mixed = Hermitian::identity(2).scale(0.5 * (1.0 - mu));
    let m1 = Hermitian::projector(p.state()).scale(mu).add(&mixed);
    let m2 = universal_not(&m1)?;
    Povm::new(vec![m1.into_matrix(), m2.into_matrix()])
}

/// `|v±⟩ = ½|0⟩ ± (√3/2)|1⟩`
pub fn trine_vectors() -> [Vec<C64>; 3] {
    let h = 3f64.sqrt() / 2.0;
    [
        vec![re(1.0), re(0.0)],
        vec![re(0.5), re(h)],
        vec![re(0.5), re(-h)],
    ]
}

/// `R_θ = |0⟩⟨0| + e^{iθ}|1⟩⟨1|`
pub fn z_rotation(theta: f64) -> CMatrix {
    CMatrix::from_rows(&[vec![re(1.0), re(0.0)], vec![re(0.0), C64::from_polar(1.0, theta)]])
}

/// Symmetric three-outcome qubit measurement, optionally rotated by `θ`
/// about the z axis.
pub fn make_trine(theta: f64, rotated: bool) -> Povm {
    let effects: Vec<Hermitian> = trine_vectors()
        .iter()
        .map(|v| Hermitian::projector(v).scale(2.0 / 3.0))
        .collect();
    let base = Povm { dim: 2, effects };
    if rotated {
        base.rotated(&z_rotation(theta)).expect("rotation keeps a POVM valid")
    } else {
        base
    }
}

/// Partner of the trine with orthogonal directions, `N_j = Γ(M_j)`.
pub fn make_orthogonal_trine() -> Povm {
    let m = make_trine(0.0, false);
    Povm {
        dim: 2,
        effects: m.effects.iter().map(|e| universal_not(e).unwrap()).collect(),
    }
}

/// Family of `m` perfectly distinguishable `n`-outcome measurements:
/// `M_{lj} = |φ⟩⟨φ|` if `j = l`, else `x_{lj}(I − |φ⟩⟨φ|)`.
///
/// `weights[l][j]` is ignored for `j = l`; `None` uses uniform weights.
pub fn make_perfect_family(
    m: usize,
    n: usize,
    phi: &[C64],
    weights: Option<&[Vec<f64>]>,
) -> Result<Vec<Povm>, PovmError> {
    if m > n {
        return Err(PovmError::InvalidParameter(format!(
            "family needs at least as many outcomes as members (m = {m}, n = {n})"
        )));
    }
    if n < 2 || m == 0 {
        return Err(PovmError::InvalidParameter("need n ≥ 2 and m ≥ 1".into()));
    }
    let d = phi.len();
    if d < 2 {
        return Err(PovmError::InvalidParameter("dimension must be at least 2".into()));
    }
    check_unit(phi)?;
    let uniform: Vec<Vec<f64>> = (0..m)
        .map(|l| (0..n).map(|j| if j == l { 0.0 } else { 1.0 / (n - 1) as f64 }).collect())
        .collect();
    let x = weights.unwrap_or(&uniform);
    if x.len() != m || x.iter().any(|row| row.len() != n) {
        return Err(PovmError::InvalidParameter(format!("weights must be {m}x{n}")));
    }
    let p = CMatrix::projector(phi);
    let complement = &CMatrix::identity(d) - &p;
    let mut family = Vec::with_capacity(m);
    for (l, row) in x.iter().enumerate() {
        let off: f64 = row.iter().enumerate().filter(|&(j, _)| j != l).map(|(_, w)| w).sum();
        if (off - 1.0).abs() > 1e-12 {
            return Err(PovmError::InvalidParameter(format!(
                "off-diagonal weights of row {l} sum to {off}, expected 1"
            )));
        }
        if row.iter().enumerate().any(|(j, &w)| j != l && !(w > 0.0 && w < 1.0 || n == 2 && w == 1.0)) {
            return Err(PovmError::InvalidParameter(format!(
                "off-diagonal weights of row {l} must lie in (0, 1)"
            )));
        }
        let effects = (0..n)
            .map(|j| if j == l { p.clone() } else { complement.scale_re(row[j]) })
            .collect();
        family.push(Povm::new(effects)?);
    }
    Ok(family)
}

/// Random qubit unit vector from two uniforms, uniform on the Bloch sphere.
pub fn bloch_ket(u: f64, v: f64) -> Vec<C64> {
    let theta = (1.0 - 2.0 * u).clamp(-1.0, 1.0).acos();
    qubit_ket(theta, 2.0 * PI * v)
}

/// Eigen-decomposition shortcut for a qubit effect: `(λ_min, λ_max)`.
pub fn qubit_spectrum(h: &Hermitian) -> (f64, f64) {
    let e = hermitian_eig(h);
    (e.values[0], e.values[1])
}
