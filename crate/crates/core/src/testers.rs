//! Testers (process POVMs): block operators `H_j^(c)` with
//! `Σ_c H_j^(c) = ρ` for every device outcome `j`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, kron, partial_trace, re, CMatrix, Hermitian, Keep, C64};
use crate::measurements::{clamp_probability, DensityOperator, Povm, PovmError, POVM_TOL};

/// Tolerance on tester normalization and block positivity.
pub const TESTER_TOL: f64 = 1e-9;
/// Tolerance on `p_s + p_e + p_f = 1` and on summed conditional tables.
pub const SUM_TOL: f64 = 1e-10;

const FAIL_LABEL: &str = "fail";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TesterError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("unknown conclusion `{0}`")]
    UnknownConclusion(String),
    #[error("duplicate conclusion `{0}`")]
    DuplicateConclusion(String),
    #[error("block H_{outcome}^({conclusion}) is not positive (eigenvalue {eigenvalue:.3e})")]
    NotPositive {
        outcome: usize,
        conclusion: String,
        eigenvalue: f64,
    },
    #[error("normalization violated for outcome {outcome} (deviation {deviation:.3e})")]
    Normalization { outcome: usize, deviation: f64 },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid priors: {0}")]
    InvalidPriors(String),
    #[error("probability out of range: {0}")]
    Probability(String),
    #[error(transparent)]
    Povm(#[from] PovmError),
}

/// Figure of merit of a discrimination task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Mode {
    MinError,
    Unambiguous,
    FixedFailure { p_f: f64 },
}

/// Opaque conclusion label; `fail` is reserved for the inconclusive result.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Conclusion(String);

impl Conclusion {
    pub fn new(label: impl Into<String>) -> Self {
        Conclusion(label.into())
    }

    pub fn fail() -> Self {
        Conclusion(FAIL_LABEL.to_string())
    }

    pub fn is_fail(&self) -> bool {
        self.0 == FAIL_LABEL
    }

    pub fn label(&self) -> &str {
        &self.0
    }

    /// `[M, N, fail]`, the conclusion set for a pair of devices.
    pub fn pair() -> Vec<Conclusion> {
        vec![Conclusion::new("M"), Conclusion::new("N"), Conclusion::fail()]
    }

    /// `[M1, …, Mm]` optionally followed by `fail`.
    pub fn numbered(m: usize, with_fail: bool) -> Vec<Conclusion> {
        let mut v: Vec<Conclusion> = (1..=m).map(|l| Conclusion::new(format!("M{l}"))).collect();
        if with_fail {
            v.push(Conclusion::fail());
        }
        v
    }
}

impl fmt::Display for Conclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A discrimination test in block form.
#[derive(Debug, Clone, PartialEq)]
pub struct Tester {
    n: usize,
    d: usize,
    conclusions: Vec<Conclusion>,
    /// `blocks[j][c]`
    blocks: Vec<Vec<Hermitian>>,
    rho: DensityOperator,
}

impl Tester {
    /// Validates positivity of every block and the normalization
    /// `Σ_c H_j^(c) = ρ` with `ρ` read off the first outcome.
    pub fn new(conclusions: Vec<Conclusion>, blocks: Vec<Vec<CMatrix>>) -> Result<Tester, TesterError> {
        Self::with_tolerance(conclusions, blocks, TESTER_TOL)
    }

    pub fn with_tolerance(
        conclusions: Vec<Conclusion>,
        blocks: Vec<Vec<CMatrix>>,
        tol: f64,
    ) -> Result<Tester, TesterError> {
        let n = blocks.len();
        if n == 0 {
            return Err(TesterError::ShapeMismatch("tester needs at least one outcome".into()));
        }
        for (i, c) in conclusions.iter().enumerate() {
            if conclusions[..i].contains(c) {
                return Err(TesterError::DuplicateConclusion(c.0.clone()));
            }
        }
        let nc = conclusions.len();
        if nc == 0 || blocks.iter().any(|row| row.len() != nc) {
            return Err(TesterError::ShapeMismatch(format!(
                "every outcome needs exactly {nc} blocks"
            )));
        }
        let d = blocks[0][0].rows();
        let mut herm = Vec::with_capacity(n);
        for (j, row) in blocks.iter().enumerate() {
            let mut out = Vec::with_capacity(nc);
            for (ci, b) in row.iter().enumerate() {
                if b.rows() != d || b.cols() != d {
                    return Err(TesterError::ShapeMismatch(format!("block ({j}, {ci}) is not {d}x{d}")));
                }
                let h = Hermitian::with_tolerance(b.clone(), tol)
                    .map_err(|e| TesterError::ShapeMismatch(e.to_string()))?;
                let lo = h.min_eigenvalue();
                if lo < -tol {
                    return Err(TesterError::NotPositive {
                        outcome: j,
                        conclusion: conclusions[ci].0.clone(),
                        eigenvalue: lo,
                    });
                }
                out.push(h);
            }
            herm.push(out);
        }
        let sum_row = |row: &[Hermitian]| {
            row.iter()
                .fold(CMatrix::zeros(d, d), |acc, h| &acc + h.matrix())
        };
        let rho_m = sum_row(&herm[0]);
        for (j, row) in herm.iter().enumerate().skip(1) {
            let deviation = sum_row(row).distance(&rho_m);
            if deviation > tol {
                return Err(TesterError::Normalization { outcome: j, deviation });
            }
        }
        let tr = rho_m.trace().re;
        if (tr - 1.0).abs() > tol {
            return Err(TesterError::Normalization {
                outcome: 0,
                deviation: (tr - 1.0).abs(),
            });
        }
        let rho = DensityOperator::new(rho_m.hermitian_part().scale_re(1.0 / tr))
            .map_err(TesterError::from)?;
        Ok(Tester {
            n,
            d,
            conclusions,
            blocks: herm,
            rho,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn conclusions(&self) -> &[Conclusion] {
        &self.conclusions
    }

    pub fn block(&self, j: usize, c: usize) -> &Hermitian {
        &self.blocks[j][c]
    }

    pub fn normalization(&self) -> &DensityOperator {
        &self.rho
    }

    pub fn conclusion_index(&self, c: &Conclusion) -> Result<usize, TesterError> {
        self.conclusions
            .iter()
            .position(|x| x == c)
            .ok_or_else(|| TesterError::UnknownConclusion(c.0.clone()))
    }

    pub fn fail_index(&self) -> Option<usize> {
        self.conclusions.iter().position(Conclusion::is_fail)
    }

    /// Indices of the identifying (non-`fail`) conclusions, in order.
    pub fn identity_indices(&self) -> Vec<usize> {
        (0..self.conclusions.len()).filter(|&i| !self.conclusions[i].is_fail()).collect()
    }

    /// `T_c = Σ_j |j⟩⟨j| ⊗ H_j^(c)` on the `n·d` composite.
    pub fn choi_form(&self, c: usize) -> CMatrix {
        let mut out = CMatrix::zeros(self.n * self.d, self.n * self.d);
        for j in 0..self.n {
            out.set_block(j * self.d, j * self.d, self.blocks[j][c].matrix());
        }
        out
    }

    /// `λ·self + (1−λ)·other`; both must share shape and conclusions.
    pub fn mix(&self, other: &Tester, lambda: f64) -> Result<Tester, TesterError> {
        if self.n != other.n || self.d != other.d || self.conclusions != other.conclusions {
            return Err(TesterError::ShapeMismatch("mixed testers must share shape and conclusions".into()));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(TesterError::InvalidDistribution(format!("mixing weight {lambda}")));
        }
        let blocks = (0..self.n)
            .map(|j| {
                (0..self.conclusions.len())
                    .map(|c| {
                        &self.blocks[j][c].matrix().scale_re(lambda)
                            + &other.blocks[j][c].matrix().scale_re(1.0 - lambda)
                    })
                    .collect()
            })
            .collect();
        Tester::new(self.conclusions.clone(), blocks)
    }

    /// Applies `f` to every block, keeping conclusions (used for embeddings
    /// and symmetry maps). The result is revalidated.
    pub fn map_blocks(
        &self,
        mut f: impl FnMut(usize, usize, &Hermitian) -> CMatrix,
    ) -> Result<Tester, TesterError> {
        let blocks = (0..self.n)
            .map(|j| (0..self.conclusions.len()).map(|c| f(j, c, &self.blocks[j][c])).collect())
            .collect();
        Tester::new(self.conclusions.clone(), blocks)
    }

    pub fn to_file(&self) -> TesterFile {
        TesterFile {
            n: self.n,
            d: self.d,
            conclusions: self.conclusions.iter().map(|c| c.0.clone()).collect(),
            rho: self.rho.matrix().to_pairs(),
            blocks: self
                .blocks
                .iter()
                .map(|row| row.iter().map(|h| h.matrix().to_pairs()).collect())
                .collect(),
        }
    }
}

/// Audit dump of a tester; `blocks[j][c]` uses the measurement encoding.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TesterFile {
    pub n: usize,
    pub d: usize,
    pub conclusions: Vec<String>,
    pub rho: Vec<Vec<[f64; 2]>>,
    pub blocks: Vec<Vec<Vec<Vec<[f64; 2]>>>>,
}

impl TesterFile {
    pub fn into_tester(&self) -> Result<Tester, crate::Error> {
        let blocks = self
            .blocks
            .iter()
            .map(|row| row.iter().map(|b| CMatrix::from_pairs(b)).collect::<Result<Vec<_>, _>>())
            .collect::<Result<Vec<_>, _>>()?;
        let t = Tester::new(self.conclusions.iter().map(Conclusion::new).collect(), blocks)?;
        let rho = CMatrix::from_pairs(&self.rho)?;
        if !rho.approx_eq(t.normalization().matrix(), TESTER_TOL) {
            return Err(TesterError::Normalization {
                outcome: 0,
                deviation: rho.distance(t.normalization().matrix()),
            }
            .into());
        }
        Ok(t)
    }
}

fn check_shape(t: &Tester, m: &Povm) -> Result<(), TesterError> {
    if t.n != m.outcomes() || t.d != m.dim() {
        return Err(TesterError::ShapeMismatch(format!(
            "tester expects {} outcomes on dimension {}, measurement has {} on {}",
            t.n,
            t.d,
            m.outcomes(),
            m.dim()
        )));
    }
    Ok(())
}

fn clamp(p: f64) -> Result<f64, TesterError> {
    clamp_probability(p).map_err(|e| TesterError::Probability(e.to_string()))
}

/// `p(c | M, T) = Σ_j tr(H_j^(c) M_j)`
pub fn conditional_prob(t: &Tester, m: &Povm, c: &Conclusion) -> Result<f64, TesterError> {
    check_shape(t, m)?;
    let ci = t.conclusion_index(c)?;
    clamp(raw_conditional(t, m, ci))
}

fn raw_conditional(t: &Tester, m: &Povm, ci: usize) -> f64 {
    (0..t.n)
        .map(|j| t.blocks[j][ci].expectation(m.effect(j).matrix()))
        .sum()
}

/// Conditional probabilities of every conclusion, in tester order.
pub fn conditional_table(t: &Tester, m: &Povm) -> Result<Vec<f64>, TesterError> {
    check_shape(t, m)?;
    let row = (0..t.conclusions.len())
        .map(|ci| clamp(raw_conditional(t, m, ci)))
        .collect::<Result<Vec<_>, _>>()?;
    let total: f64 = row.iter().sum();
    if (total - 1.0).abs() > SUM_TOL {
        return Err(TesterError::Probability(format!("conditional table sums to {total}")));
    }
    Ok(row)
}

/// `(p_s, p_e, p_f)` with the per-device conditional table.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct DiscriminationReport {
    pub p_s: f64,
    pub p_e: f64,
    pub p_f: f64,
    pub conclusions: Vec<String>,
    /// `table[i][c] = p(c | device i)`
    pub table: Vec<Vec<f64>>,
}

impl DiscriminationReport {
    /// Builds a report from a conditional table whose identifying columns
    /// `identity[i]` belong to hypothesis `i`.
    pub fn from_table(
        conclusions: Vec<String>,
        table: Vec<Vec<f64>>,
        priors: &[f64],
        identity: &[usize],
        fail: Option<usize>,
    ) -> Result<Self, TesterError> {
        let mut p_s = 0.0;
        let mut p_f = 0.0;
        for (i, row) in table.iter().enumerate() {
            p_s += priors[i] * row[identity[i]];
            if let Some(fi) = fail {
                p_f += priors[i] * row[fi];
            }
        }
        let p_s = clamp(p_s)?;
        let p_f = clamp(p_f)?;
        let p_e = clamp(1.0 - p_s - p_f)?;
        Ok(DiscriminationReport {
            p_s,
            p_e,
            p_f,
            conclusions,
            table,
        })
    }
}

pub fn check_priors(priors: &[f64]) -> Result<(), TesterError> {
    if priors.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
        return Err(TesterError::InvalidPriors("priors must be nonnegative".into()));
    }
    let total: f64 = priors.iter().sum();
    if (total - 1.0).abs() > SUM_TOL {
        return Err(TesterError::InvalidPriors(format!("priors sum to {total}")));
    }
    Ok(())
}

/// Evaluates a tester on weighted hypotheses. Hypothesis `i` is identified
/// by the `i`-th non-`fail` conclusion of the tester.
pub fn performance(t: &Tester, hypotheses: &[(&Povm, f64)]) -> Result<DiscriminationReport, TesterError> {
    let priors: Vec<f64> = hypotheses.iter().map(|h| h.1).collect();
    check_priors(&priors)?;
    let identity = t.identity_indices();
    if identity.len() != hypotheses.len() {
        return Err(TesterError::ShapeMismatch(format!(
            "{} hypotheses but {} identifying conclusions",
            hypotheses.len(),
            identity.len()
        )));
    }
    let table = hypotheses
        .iter()
        .map(|(m, _)| conditional_table(t, m))
        .collect::<Result<Vec<_>, _>>()?;
    DiscriminationReport::from_table(
        t.conclusions.iter().map(|c| c.0.clone()).collect(),
        table,
        &priors,
        &identity,
        t.fail_index(),
    )
}

/// Projects arbitrary tester operators `T_c` on `n·d` onto their
/// block-diagonal part `Σ_j π_j T_c π_j`.
pub fn symmetrize(raw: Vec<(Conclusion, CMatrix)>, n: usize, rho: &DensityOperator) -> Result<Tester, TesterError> {
    let d = rho.dim();
    let side = n * d;
    let mut total = CMatrix::zeros(side, side);
    for (c, t) in &raw {
        if t.rows() != side || t.cols() != side {
            return Err(TesterError::ShapeMismatch(format!("T_{c} must be {side}x{side}")));
        }
        let h = Hermitian::with_tolerance(t.clone(), TESTER_TOL)
            .map_err(|e| TesterError::ShapeMismatch(e.to_string()))?;
        let lo = h.min_eigenvalue();
        if lo < -TESTER_TOL {
            return Err(TesterError::NotPositive {
                outcome: usize::MAX,
                conclusion: c.0.clone(),
                eigenvalue: lo,
            });
        }
        total = &total + t;
    }
    let expected = kron(&CMatrix::identity(n), rho.matrix());
    let deviation = total.distance(&expected);
    if deviation > TESTER_TOL {
        return Err(TesterError::Normalization { outcome: 0, deviation });
    }
    let conclusions: Vec<Conclusion> = raw.iter().map(|(c, _)| c.clone()).collect();
    let blocks = (0..n)
        .map(|j| raw.iter().map(|(_, t)| t.block(j * d, j * d, d, d)).collect())
        .collect();
    Tester::new(conclusions, blocks)
}

/// Tester realized by a bipartite probe on `system ⊗ ancilla`, the unknown
/// device on the system and, for device outcome `j`, the ancilla measured
/// by `conditional[j]` whose outcome `k` maps to conclusion
/// `conclusion_of[j][k]`.
///
/// `H_j^(c) = Σ_{k ↦ c} tr_anc[(I ⊗ E_k^(j)) |Ψ⟩⟨Ψ|]`
pub fn tester_from_protocol(
    probe: &[C64],
    dims: (usize, usize),
    conditional: &[Povm],
    conclusion_of: &[Vec<usize>],
    conclusions: Vec<Conclusion>,
) -> Result<Tester, TesterError> {
    let (d, a) = dims;
    if probe.len() != d * a {
        return Err(TesterError::ShapeMismatch(format!(
            "probe has length {}, expected {d}·{a}",
            probe.len()
        )));
    }
    let nrm = linalg::norm(probe);
    if (nrm - 1.0).abs() > 1e-12 {
        return Err(TesterError::ShapeMismatch(format!("probe norm {nrm}, expected 1")));
    }
    if conditional.len() != conclusion_of.len() {
        return Err(TesterError::ShapeMismatch("one conclusion map per device outcome".into()));
    }
    let nc = conclusions.len();
    let projector = CMatrix::projector(probe);
    let id_sys = CMatrix::identity(d);
    let mut blocks = Vec::with_capacity(conditional.len());
    for (j, (pov, map)) in conditional.iter().zip(conclusion_of).enumerate() {
        if pov.dim() != a || map.len() != pov.outcomes() {
            return Err(TesterError::ShapeMismatch(format!(
                "conditional measurement {j} must act on dimension {a} and map every outcome"
            )));
        }
        let mut row = vec![CMatrix::zeros(d, d); nc];
        for (k, &ci) in map.iter().enumerate() {
            if ci >= nc {
                return Err(TesterError::UnknownConclusion(format!("index {ci}")));
            }
            let op = &kron(&id_sys, pov.effect(k).matrix()) * &projector;
            let reduced = partial_trace(&op, (d, a), Keep::A)
                .map_err(|e| TesterError::ShapeMismatch(e.to_string()))?;
            row[ci] = &row[ci] + &reduced.hermitian_part();
        }
        blocks.push(row);
    }
    Tester::new(conclusions, blocks)
}

/// Ancilla-free tester: probe state, then conclusion `c` with probability
/// `assignment[j][c]` on device outcome `j`.
pub fn simple_tester(
    probe: &DensityOperator,
    assignment: &[Vec<f64>],
    conclusions: Vec<Conclusion>,
) -> Result<Tester, TesterError> {
    for (j, q) in assignment.iter().enumerate() {
        if q.len() != conclusions.len() {
            return Err(TesterError::ShapeMismatch(format!(
                "assignment row {j} has {} entries, expected {}",
                q.len(),
                conclusions.len()
            )));
        }
        let total: f64 = q.iter().sum();
        if q.iter().any(|&x| !(x >= 0.0)) || (total - 1.0).abs() > SUM_TOL {
            return Err(TesterError::InvalidDistribution(format!("row {j}: {q:?}")));
        }
    }
    let blocks = assignment
        .iter()
        .map(|q| q.iter().map(|&w| probe.matrix().scale_re(w)).collect())
        .collect();
    Tester::new(conclusions, blocks)
}

/// Deterministic assignment `outcome j ↦ conclusion targets[j]`.
pub fn deterministic_assignment(targets: &[usize], n_conclusions: usize) -> Vec<Vec<f64>> {
    targets
        .iter()
        .map(|&t| (0..n_conclusions).map(|c| if c == t { 1.0 } else { 0.0 }).collect())
        .collect()
}

/// The pure state `(|00⟩ + |11⟩ + …)/√d`.
pub fn maximally_entangled(d: usize) -> Vec<C64> {
    let mut v = vec![re(0.0); d * d];
    let w = 1.0 / (d as f64).sqrt();
    for k in 0..d {
        v[k * d + k] = re(w);
    }
    v
}

/// Validates that a POVM can serve as a conditional ancilla measurement.
pub fn check_conditional(p: &Povm) -> Result<(), TesterError> {
    let raw: Vec<CMatrix> = p.effects().iter().map(|e| e.matrix().clone()).collect();
    crate::measurements::validate_povm(&raw, POVM_TOL)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::measurements::{bloch_ket, choi, make_noisy_qubit, make_orthogonal_trine, make_perfect_family, make_trine};
    use proptest::prelude::*;

    fn trivial(probe: &DensityOperator, n: usize, q: &[f64]) -> Tester {
        let conclusions = (0..q.len()).map(|i| Conclusion::new(format!("c{i}"))).collect();
        simple_tester(probe, &vec![q.to_vec(); n], conclusions).unwrap()
    }

    #[test]
    fn trivial_tester_returns_its_distribution() {
        let q = [0.2, 0.5, 0.3];
        let t = trivial(&DensityOperator::pure(&bloch_ket(0.3, 0.8)).unwrap(), 3, &q);
        let m = make_trine(0.4, true);
        for (i, &qi) in q.iter().enumerate() {
            let p = conditional_prob(&t, &m, &Conclusion::new(format!("c{i}"))).unwrap();
            assert!((p - qi).abs() < 1e-15);
        }
        assert!(matches!(
            conditional_prob(&t, &m, &Conclusion::new("nope")),
            Err(TesterError::UnknownConclusion(_))
        ));
        let wrong = make_noisy_qubit(&bloch_ket(0.1, 0.1), 0.5).unwrap();
        assert!(matches!(conditional_table(&t, &wrong), Err(TesterError::ShapeMismatch(_))));
    }

    #[test]
    fn simple_tester_identifies_family_members() {
        let phi = bloch_ket(0.2, 0.6);
        let fam = make_perfect_family(3, 3, &phi, None).unwrap();
        let t = simple_tester(
            &DensityOperator::pure(&phi).unwrap(),
            &deterministic_assignment(&[0, 1, 2], 3),
            Conclusion::numbered(3, false),
        )
        .unwrap();
        for (l, m) in fam.iter().enumerate() {
            let p = conditional_prob(&t, m, &Conclusion::new(format!("M{}", l + 1))).unwrap();
            assert!((p - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn uniform_assignment_gives_chance() {
        let probe = DensityOperator::pure(&bloch_ket(0.4, 0.2)).unwrap();
        let t = simple_tester(&probe, &vec![vec![1.0 / 3.0; 3]; 3], Conclusion::numbered(3, false)).unwrap();
        let fam = make_perfect_family(3, 3, &bloch_ket(0.9, 0.1), None).unwrap();
        let hyps: Vec<(&Povm, f64)> = fam.iter().map(|m| (m, 1.0 / 3.0)).collect();
        let r = performance(&t, &hyps).unwrap();
        assert!((r.p_s - 1.0 / 3.0).abs() < 1e-14);
        assert!(simple_tester(&probe, &[vec![0.5, 0.6, 0.0]], Conclusion::numbered(3, false)).is_err());
    }

    #[test]
    fn singlet_protocol_discriminates_orthogonal_trines() {
        // Device outcome j heralds orthogonal ancilla states; measure in that basis.
        let m = make_trine(0.0, false);
        let n = make_orthogonal_trine();
        let s = 1.0 / 2f64.sqrt();
        let singlet = vec![re(0.0), re(s), re(-s), re(0.0)];
        let mut conditional = Vec::new();
        for j in 0..3 {
            let e = crate::measurements::qubit_perp(&crate::measurements::trine_vectors()[j]);
            conditional.push(crate::measurements::make_projective_qubit(&e).unwrap());
        }
        let t = tester_from_protocol(&singlet, (2, 2), &conditional, &vec![vec![0, 1]; 3], Conclusion::pair()).unwrap();
        let r = performance(&t, &[(&m, 0.5), (&n, 0.5)]).unwrap();
        assert!((r.p_s - 1.0).abs() < 1e-12, "{r:?}");
        assert!(r.p_e.abs() < 1e-12 && r.p_f.abs() < 1e-12);
    }

    #[test]
    fn identical_devices_give_half() {
        let m = make_trine(0.3, true);
        let probe = DensityOperator::pure(&bloch_ket(0.2, 0.3)).unwrap();
        let t = simple_tester(&probe, &deterministic_assignment(&[0, 1, 0], 3), Conclusion::pair()).unwrap();
        let r = performance(&t, &[(&m, 0.5), (&m, 0.5)]).unwrap();
        assert!((r.p_s - 0.5).abs() < 1e-14 && (r.p_e - 0.5).abs() < 1e-14);
        assert!(performance(&t, &[(&m, 0.7), (&m, 0.5)]).is_err());
    }

    #[test]
    fn product_probe_matches_simple_tester() {
        let psi = bloch_ket(0.35, 0.7);
        let probe = linalg::kron_vec(&psi, &[re(1.0), re(0.0)]);
        let triv = Povm::new(vec![CMatrix::identity(2)]).unwrap();
        let t = tester_from_protocol(&probe, (2, 2), &vec![triv; 3], &[vec![0], vec![1], vec![2]], Conclusion::pair()).unwrap();
        let s = simple_tester(&DensityOperator::pure(&psi).unwrap(), &deterministic_assignment(&[0, 1, 2], 3), Conclusion::pair()).unwrap();
        for j in 0..3 {
            for ci in 0..3 {
                assert!(t.block(j, ci).matrix().approx_eq(s.block(j, ci).matrix(), 1e-15));
            }
        }
    }

    #[test]
    fn schmidt_probe_normalization() {
        let q: f64 = 0.3;
        let probe = vec![re(q.sqrt()), re(0.0), re(0.0), re((1.0 - q).sqrt())];
        let t = tester_from_protocol(
            &probe,
            (2, 2),
            &vec![make_trine(0.0, false); 3],
            &vec![vec![0, 1, 2]; 3],
            Conclusion::pair(),
        )
        .unwrap();
        assert!(t.normalization().matrix().approx_eq(&CMatrix::diag(&[q, 1.0 - q]), 1e-15));
    }

    #[test]
    fn symmetrize_drops_coherences() {
        let rho = DensityOperator::pure(&bloch_ket(0.3, 0.1)).unwrap();
        let n = 2;
        // T_a carries off-block coherence; T_b compensates so the sum is I⊗ρ.
        let base = kron(&CMatrix::identity(n), rho.matrix()).scale_re(0.5);
        let mut coh = CMatrix::zeros(4, 4);
        let x = rho.matrix().scale_re(0.3);
        coh.set_block(0, 2, &x);
        coh.set_block(2, 0, &x.adjoint());
        let ta = &base + &coh;
        let tb = &base - &coh;
        let t = symmetrize(vec![(Conclusion::new("M"), ta.clone()), (Conclusion::new("N"), tb)], n, &rho).unwrap();
        let m = make_noisy_qubit(&bloch_ket(0.8, 0.4), 0.7).unwrap();
        let ch = choi(&m);
        let direct = ta.trace_product(&ch.matrix().matrix().transpose()).re;
        let p = conditional_prob(&t, &m, &Conclusion::new("M")).unwrap();
        assert!((direct - p).abs() < 1e-12);
        // block-diagonal input is untouched
        let bd = t.choi_form(0);
        assert!(bd.approx_eq(&base, 1e-15));
    }

    #[test]
    fn symmetrize_rejects_bad_normalization() {
        let rho = DensityOperator::maximally_mixed(2);
        let t = CMatrix::identity(4).scale_re(0.4);
        assert!(matches!(
            symmetrize(vec![(Conclusion::new("M"), t)], 2, &rho),
            Err(TesterError::Normalization { .. })
        ));
    }

    #[test]
    fn tester_file_round_trip() {
        let probe = DensityOperator::pure(&bloch_ket(0.3, 0.2)).unwrap();
        let t = simple_tester(&probe, &deterministic_assignment(&[0, 2], 3), Conclusion::pair()).unwrap();
        let json = serde_json::to_string(&t.to_file()).unwrap();
        let back: TesterFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.into_tester().unwrap(), t);
    }

    fn random_probe(seed: &[f64]) -> Vec<C64> {
        let mut probe: Vec<C64> = (0..4).map(|k| c(seed[2 * k], seed[2 * k + 1])).collect();
        let nr = linalg::norm(&probe);
        probe.iter_mut().for_each(|z| *z /= nr);
        probe
    }

    fn random_tester(seed: &[f64], n: usize) -> Tester {
        let probe = random_probe(seed);
        let conditional: Vec<Povm> = (0..n)
            .map(|j| make_noisy_qubit(&bloch_ket(seed[8 + j].abs(), seed[12 + j].abs()), seed[16 + j].abs()).unwrap())
            .collect();
        let maps: Vec<Vec<usize>> = (0..n).map(|j| vec![j % 3, (j + 1) % 3]).collect();
        tester_from_protocol(&probe, (2, 2), &conditional, &maps, Conclusion::pair()).unwrap()
    }

    proptest! {
        #[test]
        fn conditional_probabilities_sum_to_one(seed in proptest::collection::vec(-1.0f64..1.0, 20), u in 0.0f64..1.0, v in 0.0f64..1.0, mu in 0.0f64..1.0) {
            let t = random_tester(&seed, 2);
            let m = make_noisy_qubit(&bloch_ket(u, v), mu).unwrap();
            let row = conditional_table(&t, &m).unwrap();
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            let reduced = partial_trace(&CMatrix::projector(&random_probe(&seed)), (2, 2), Keep::A).unwrap();
            prop_assert!(t.normalization().matrix().approx_eq(&reduced, 1e-10));
        }

        #[test]
        fn choi_and_block_forms_agree(seed in proptest::collection::vec(-1.0f64..1.0, 20), t3 in 0.0f64..6.3) {
            let t = random_tester(&seed, 3);
            let m = make_trine(t3, true);
            let ch = choi(&m).matrix().matrix().transpose();
            for ci in 0..3 {
                let via_choi = t.choi_form(ci).trace_product(&ch).re;
                let via_blocks = conditional_prob(&t, &m, &t.conclusions()[ci].clone()).unwrap();
                prop_assert!((via_choi - via_blocks).abs() < 1e-10);
            }
        }

        #[test]
        fn convex_mixtures_stay_valid(s1 in proptest::collection::vec(-1.0f64..1.0, 20), s2 in proptest::collection::vec(-1.0f64..1.0, 20), lam in 0.0f64..1.0) {
            let a = random_tester(&s1, 2);
            let b = random_tester(&s2, 2);
            let mixed = a.mix(&b, lam).unwrap();
            let m = make_noisy_qubit(&bloch_ket(0.2, 0.9), 0.6).unwrap();
            let pa = conditional_table(&a, &m).unwrap();
            let pb = conditional_table(&b, &m).unwrap();
            let pm = conditional_table(&mixed, &m).unwrap();
            for i in 0..3 {
                prop_assert!((pm[i] - (lam * pa[i] + (1.0 - lam) * pb[i])).abs() < 1e-12);
            }
        }
    }
}
