//! Projective and noisy qubit measurements, reduced to discrimination of
//! the states `|φ⟩`, `|ψ⟩` (or the noisy first effects).

use std::f64::consts::PI;

use serde::Serialize;

use crate::linalg::{self, c, canonical_phase, hermitian_eig, inner, re, sqrt_psd, CMatrix, Hermitian, C64};
use crate::measurements::{make_noisy_qubit, make_projective_qubit, qubit_ket, qubit_perp, universal_not, DensityOperator, Povm};
use crate::oracle::{oracle_state_povm, SearchConfig};
use crate::search::{compass, sphere_maximize};
use crate::testers::{
    deterministic_assignment, maximally_entangled, performance, simple_tester, tester_from_protocol, Conclusion,
    DiscriminationReport, Mode, Tester,
};
use crate::{Error, Result};

/// Consistency tolerance between equivalent realizations.
pub const REALIZATION_TOL: f64 = 1e-10;
const ZERO_EIG: f64 = 1e-12;
const UNIT_TOL: f64 = 1e-10;
const GRAM_TOL: f64 = 1e-9;

/// Two pure qubit hypotheses with prior `eta` on `|φ⟩`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PureStateHypotheses {
    phi: Vec<C64>,
    psi: Vec<C64>,
    eta: f64,
}

fn check_prior(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidArgument(format!("prior must lie in [0, 1], got {eta}")));
    }
    Ok(())
}

fn unit_qubit(v: &[C64]) -> Result<Vec<C64>> {
    if v.len() != 2 {
        return Err(Error::InvalidArgument(format!("expected a qubit vector, got length {}", v.len())));
    }
    let n = linalg::norm(v);
    if (n - 1.0).abs() > UNIT_TOL {
        return Err(Error::InvalidArgument(format!("vector norm {n}, expected 1")));
    }
    Ok(canonical_phase(v))
}

impl PureStateHypotheses {
    pub fn new(phi: &[C64], psi: &[C64], eta: f64) -> Result<Self> {
        check_prior(eta)?;
        Ok(PureStateHypotheses {
            phi: unit_qubit(phi)?,
            psi: unit_qubit(psi)?,
            eta,
        })
    }

    /// `|φ⟩ = |0⟩`, `|ψ⟩ = F|0⟩ + √(1−F²)|1⟩`.
    pub fn from_overlap(f: f64, eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::InvalidArgument(format!("overlap must lie in [0, 1], got {f}")));
        }
        Self::new(&[re(1.0), re(0.0)], &[re(f), re((1.0 - f * f).sqrt())], eta)
    }

    pub fn phi(&self) -> &[C64] {
        &self.phi
    }

    pub fn psi(&self) -> &[C64] {
        &self.psi
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn overlap(&self) -> f64 {
        inner(&self.psi, &self.phi).norm().min(1.0)
    }

    /// The two hypotheses as density operators.
    pub fn states(&self) -> (DensityOperator, DensityOperator) {
        (
            DensityOperator::pure(&self.phi).expect("unit vector"),
            DensityOperator::pure(&self.psi).expect("unit vector"),
        )
    }
}

/// State-discrimination POVM; the last effect is the `fail` effect.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDiscriminationPovm {
    conclusions: Vec<Conclusion>,
    effects: Vec<Hermitian>,
}

impl StateDiscriminationPovm {
    pub fn new(conclusions: Vec<Conclusion>, effects: Vec<CMatrix>) -> Result<Self> {
        if conclusions.len() != effects.len() || !conclusions.last().is_some_and(Conclusion::is_fail) {
            return Err(Error::InvalidArgument("one effect per conclusion, fail last".into()));
        }
        let povm = Povm::new(effects)?;
        Ok(StateDiscriminationPovm {
            conclusions,
            effects: povm.effects().to_vec(),
        })
    }

    /// Effects for conclusions `M`, `N`, `fail`.
    pub fn pair(e_m: CMatrix, e_n: CMatrix, e_f: CMatrix) -> Result<Self> {
        Self::new(Conclusion::pair(), vec![e_m, e_n, e_f])
    }

    /// Effects for `M1…Mm` followed by a zero `fail`.
    pub fn identifying(effects: Vec<CMatrix>) -> Result<Self> {
        let d = effects.first().map_or(2, |e| e.rows());
        let m = effects.len();
        let mut all = effects;
        all.push(CMatrix::zeros(d, d));
        let conclusions = if m == 2 { Conclusion::pair() } else { Conclusion::numbered(m, true) };
        Self::new(conclusions, all)
    }

    pub fn conclusions(&self) -> &[Conclusion] {
        &self.conclusions
    }

    pub fn effects(&self) -> &[Hermitian] {
        &self.effects
    }

    pub fn fail_effect(&self) -> &Hermitian {
        self.effects.last().expect("fail effect present")
    }

    pub fn povm(&self) -> Povm {
        Povm::new(self.effects.iter().map(|e| e.matrix().clone()).collect()).expect("validated on construction")
    }

    /// `(p_s, p_e, p_f)` on weighted states, state `i` ↔ conclusion `i`.
    pub fn performance(&self, states: &[(&DensityOperator, f64)]) -> (f64, f64, f64) {
        let fail = self.effects.len() - 1;
        let mut p_s = 0.0;
        let mut p_f = 0.0;
        for (i, (rho, w)) in states.iter().enumerate() {
            p_s += w * self.effects[i].expectation(rho.matrix());
            p_f += w * self.effects[fail].expectation(rho.matrix());
        }
        (p_s, (1.0 - p_s - p_f).max(0.0), p_f)
    }
}

/// `p_e = ½(1 − √(1 − 4η(1−η)F²))`; the effects split the spectrum of
/// `Δ = (1−η)|ψ⟩⟨ψ| − η|φ⟩⟨φ|`, negative part concluding `φ`.
pub fn helstrom_pure(h: &PureStateHypotheses) -> Result<(f64, StateDiscriminationPovm)> {
    let (eta, f) = (h.eta, h.overlap());
    let delta = Hermitian::projector(&h.psi)
        .scale(1.0 - eta)
        .sub(&Hermitian::projector(&h.phi).scale(eta));
    let e_phi = sign_split(&delta, eta >= 0.5);
    let e_psi = &CMatrix::identity(2) - &e_phi;
    let p_e = 0.5 * (1.0 - (1.0 - 4.0 * eta * (1.0 - eta) * f * f).max(0.0).sqrt());
    Ok((p_e, StateDiscriminationPovm::pair(e_phi, e_psi, CMatrix::zeros(2, 2))?))
}

/// Projector onto the negative eigenspace of `x`, plus its kernel when
/// `kernel_negative`.
fn sign_split(x: &Hermitian, kernel_negative: bool) -> CMatrix {
    let scale = x.op_norm().max(1.0);
    hermitian_eig(x).projector_where(|l| l < -ZERO_EIG * scale || (l.abs() <= ZERO_EIG * scale && kernel_negative))
}

/// Optimal unambiguous discrimination of two pure states; `p_e = 0`.
pub fn unambiguous_pure(h: &PureStateHypotheses) -> Result<(f64, StateDiscriminationPovm)> {
    let (eta, f) = (h.eta, h.overlap());
    let f2 = f * f;
    let phi_perp = qubit_perp(&h.phi);
    let psi_perp = qubit_perp(&h.psi);
    let zero = CMatrix::zeros(2, 2);
    let id = CMatrix::identity(2);
    if f >= 1.0 - 1e-12 {
        let p_f = 1.0;
        return Ok((p_f, StateDiscriminationPovm::pair(zero.clone(), zero, id)?));
    }
    let weighted = (1.0 + f2) * eta;
    if weighted <= f2 {
        // only ψ can be confirmed
        let e_n = CMatrix::projector(&phi_perp);
        let e_f = CMatrix::projector(&h.phi);
        return Ok((eta + (1.0 - eta) * f2, StateDiscriminationPovm::pair(zero, e_n, e_f)?));
    }
    if weighted >= 1.0 {
        let e_m = CMatrix::projector(&psi_perp);
        let e_f = CMatrix::projector(&h.psi);
        return Ok((1.0 - eta + eta * f2, StateDiscriminationPovm::pair(e_m, zero, e_f)?));
    }
    // three outcomes; failure rates q_φ q_ψ = F², weighted by the priors
    let q_phi = ((1.0 - eta) / eta).sqrt() * f;
    let q_psi = (eta / (1.0 - eta)).sqrt() * f;
    let e_m = CMatrix::projector(&psi_perp).scale_re((1.0 - q_phi) / (1.0 - f2));
    let e_n = CMatrix::projector(&phi_perp).scale_re((1.0 - q_psi) / (1.0 - f2));
    let e_f = &(&id - &e_m) - &e_n;
    let p_f = 2.0 * (eta * (1.0 - eta)).sqrt() * f;
    Ok((p_f, StateDiscriminationPovm::pair(e_m, e_n, e_f)?))
}

/// `p_e = ½(1 − ‖ηρ₀ − (1−η)ρ₁‖_tr)` with the positive part concluding `ρ₀`.
pub fn helstrom_mixed(rho0: &DensityOperator, rho1: &DensityOperator, eta: f64) -> Result<(f64, Povm)> {
    check_prior(eta)?;
    if rho0.dim() != rho1.dim() {
        return Err(Error::InvalidArgument("states differ in dimension".into()));
    }
    let gamma = rho0.hermitian().scale(eta).sub(&rho1.hermitian().scale(1.0 - eta));
    let p_e = 0.5 * (1.0 - linalg::trace_norm_hermitian(&gamma));
    let e1 = sign_split(&gamma, eta < 0.5);
    let e0 = &CMatrix::identity(rho0.dim()) - &e1;
    Ok((p_e.clamp(0.0, 0.5), Povm::new(vec![e0, e1])?))
}

/// Optimum of a fixed-failure-rate problem.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedFailure {
    pub p_s: f64,
    pub p_e: f64,
    pub p_f: f64,
    pub povm: StateDiscriminationPovm,
    /// The requested rate exceeded the unambiguous rate and was lowered.
    pub clamped: bool,
}

const FF_STEP: f64 = 0.07;
const FF_TOL: f64 = 1e-11;
const FF_STARTS: usize = 6;

fn qubit_trace_norm(tr: f64, det: f64) -> f64 {
    if det >= 0.0 {
        tr.abs()
    } else {
        (tr * tr - 4.0 * det).sqrt()
    }
}

/// Maximizes `p_s` subject to `tr(E_f ρ̄) = p_f` for two qubit states.
///
/// The fail effect is `a|χ⟩⟨χ| + b|χ⊥⟩⟨χ⊥|` with `b` fixed by the
/// constraint; for `Ω = I − E_f` the best split of the rest gives
/// `p_s = (1 − p_f + ‖Ω^½ (ηρ₀ − (1−η)ρ₁) Ω^½‖_tr) / 2`.
pub fn fixed_failure_states(rho0: &DensityOperator, rho1: &DensityOperator, eta: f64, p_f: f64, max_pf: f64) -> Result<FixedFailure> {
    check_prior(eta)?;
    if rho0.dim() != 2 || rho1.dim() != 2 {
        return Err(Error::Unsupported("fixed-failure solver handles qubit states".into()));
    }
    if !(0.0..=1.0).contains(&p_f) || !p_f.is_finite() {
        return Err(Error::Infeasible(format!("failure rate {p_f} outside [0, 1]")));
    }
    let clamped = p_f > max_pf;
    let target = p_f.min(max_pf);
    let gamma = rho0.hermitian().scale(eta).sub(&rho1.hermitian().scale(1.0 - eta));
    let avg = rho0.hermitian().scale(eta).add(&rho1.hermitian().scale(1.0 - eta));
    let g = gamma.matrix();
    let det_g = (g[(0, 0)] * g[(1, 1)] - g[(0, 1)] * g[(1, 0)]).re;
    let weights = |chi: &[C64], perp: &[C64], s: f64| -> (f64, f64) {
        let c1 = avg.matrix().sandwich(chi, chi).re.clamp(0.0, 1.0);
        let c2 = avg.matrix().sandwich(perp, perp).re.clamp(0.0, 1.0);
        let s = s.clamp(0.0, 1.0);
        if c1 < 1e-14 {
            return (s, if c2 > 0.0 { (target / c2).min(1.0) } else { 0.0 });
        }
        if c2 < 1e-14 {
            return ((target / c1).min(1.0), s);
        }
        let lo = ((target - c2) / c1).max(0.0);
        let hi = (target / c1).min(1.0);
        let a = lo + s * (hi - lo).max(0.0);
        (a, ((target - a * c1) / c2).clamp(0.0, 1.0))
    };
    let objective = |x: &[f64]| -> f64 {
        let chi = qubit_ket(x[0], x[1]);
        let perp = qubit_perp(&chi);
        let (a, b) = weights(&chi, &perp, x[2] / PI);
        let tr = (1.0 - a) * g.sandwich(&chi, &chi).re + (1.0 - b) * g.sandwich(&perp, &perp).re;
        qubit_trace_norm(tr, (1.0 - a) * (1.0 - b) * det_g)
    };
    let mut grid = Vec::new();
    let (np, na, ns) = ((PI / FF_STEP).round() as usize, (2.0 * PI / FF_STEP).round() as usize, (PI / FF_STEP).round() as usize);
    for i in 0..=np {
        for k in 0..na {
            for l in 0..=ns {
                let x = [i as f64 * PI / np as f64, k as f64 * 2.0 * PI / na as f64, l as f64 * PI / ns as f64];
                grid.push((x, objective(&x)));
            }
        }
    }
    grid.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut best = (grid[0].0.to_vec(), grid[0].1);
    for (x0, f0) in grid.iter().take(FF_STARTS) {
        let (x, v) = compass(objective, x0.to_vec(), *f0, FF_STEP, FF_TOL);
        if v > best.1 {
            best = (x, v);
        }
    }
    let chi = qubit_ket(best.0[0], best.0[1]);
    let perp = qubit_perp(&chi);
    let (a, b) = weights(&chi, &perp, best.0[2] / PI);
    let e_f = &CMatrix::projector(&chi).scale_re(a) + &CMatrix::projector(&perp).scale_re(b);
    let omega = Hermitian::from_hermitian_part(&(&CMatrix::identity(2) - &e_f));
    let root = sqrt_psd(&omega)?;
    let a_op = gamma.conjugate_by(root.matrix());
    let pi_plus = hermitian_eig(&a_op).projector_where(|l| l > 0.0);
    let e0 = root.matrix().matmul(&pi_plus).matmul(root.matrix()).hermitian_part();
    let e1 = omega.matrix() - &e0;
    let povm = StateDiscriminationPovm::pair(e0, e1, e_f)?;
    let (p_s, p_e, p_f_actual) = povm.performance(&[(rho0, eta), (rho1, 1.0 - eta)]);
    let predicted = 0.5 * (1.0 - target + best.1);
    if (predicted - p_s).abs() > 1e-9 || (p_f_actual - target).abs() > 1e-9 {
        return Err(Error::Consistency(format!(
            "fixed-failure POVM gives p_s = {p_s}, p_f = {p_f_actual}; expected {predicted}, {target}"
        )));
    }
    Ok(FixedFailure {
        p_s,
        p_e,
        p_f: p_f_actual,
        povm,
        clamped,
    })
}

/// Fixed failure rate for pure states; targets above the unambiguous
/// rate are clamped to it.
pub fn fixed_failure_pure(h: &PureStateHypotheses, p_f: f64) -> Result<FixedFailure> {
    let (max_pf, _) = unambiguous_pure(h)?;
    let (rho0, rho1) = h.states();
    fixed_failure_states(&rho0, &rho1, h.eta, p_f, max_pf)
}

/// Tester with probe `(|00⟩+|11⟩)/√2`: device outcome 1 steers the
/// ancilla measurement `{E_cᵀ}`, outcome 2 steers `{Γ(E_c)ᵀ}`.
pub fn measurement_protocol(e: &StateDiscriminationPovm) -> Result<Tester> {
    protocol_with(e, &maximally_entangled(2), |x| Ok(x.transpose()), |x| Ok(universal_not(x)?.transpose()))
}

/// Singlet variant: outcome 1 steers `{Γ(E_c)}`, outcome 2 steers `{E_c}`.
pub fn singlet_protocol(e: &StateDiscriminationPovm) -> Result<Tester> {
    let s = 1.0 / 2f64.sqrt();
    let singlet = [re(0.0), re(s), re(-s), re(0.0)];
    protocol_with(e, &singlet, |x| Ok(universal_not(x)?), |x| Ok(x.clone()))
}

fn protocol_with(
    e: &StateDiscriminationPovm,
    probe: &[C64],
    first: impl Fn(&Hermitian) -> Result<Hermitian>,
    second: impl Fn(&Hermitian) -> Result<Hermitian>,
) -> Result<Tester> {
    if e.effects[0].dim() != 2 {
        return Err(Error::InvalidArgument("protocol needs a qubit POVM".into()));
    }
    let build = |f: &dyn Fn(&Hermitian) -> Result<Hermitian>| -> Result<Povm> {
        let effects = e
            .effects
            .iter()
            .map(|x| f(x).map(Hermitian::into_matrix))
            .collect::<Result<Vec<_>>>()?;
        Ok(Povm::new(effects)?)
    };
    let conditional = vec![build(&first)?, build(&second)?];
    let map: Vec<usize> = (0..e.effects.len()).collect();
    Ok(tester_from_protocol(
        probe,
        (2, 2),
        &conditional,
        &[map.clone(), map],
        e.conclusions.clone(),
    )?)
}

/// Ancilla-free realization when every effect is diagonal with 0/1
/// entries in one orthonormal basis: probe the first basis vector and
/// read device outcome `k` as the conclusion owning basis vector `k`.
pub fn simple_realization(e: &StateDiscriminationPovm) -> Result<Option<Tester>> {
    let basis = e
        .effects
        .iter()
        .map(hermitian_eig)
        .find(|eig| (eig.values[1] - eig.values[0]).abs() > 1e-9)
        .map(|eig| (eig.vector(1), eig.vector(0)))
        .unwrap_or_else(|| (vec![re(1.0), re(0.0)], vec![re(0.0), re(1.0)]));
    let alpha = basis.0;
    let beta = qubit_perp(&alpha);
    let mut owner = [None, None];
    for (ci, x) in e.effects.iter().enumerate() {
        let m = x.matrix();
        if m.sandwich(&alpha, &beta).norm() > 1e-9 {
            return Ok(None);
        }
        for (k, v) in [&alpha, &beta].into_iter().enumerate() {
            let w = m.sandwich(v, v).re;
            if (w - 1.0).abs() <= 1e-9 {
                owner[k] = Some(ci);
            } else if w.abs() > 1e-9 {
                return Ok(None);
            }
        }
    }
    let (Some(o1), Some(o2)) = (owner[0], owner[1]) else {
        return Ok(None);
    };
    let nc = e.conclusions.len();
    let probe = DensityOperator::pure(&alpha)?;
    Ok(Some(simple_tester(&probe, &deterministic_assignment(&[o1, o2], nc), e.conclusions.clone())?))
}

/// Γ-conjugate of a tester for binary qubit devices,
/// `H'_1 = Γ(H_2)`, `H'_2 = Γ(H_1)`; it performs identically on projective
/// pairs.
pub fn gamma_conjugate(t: &Tester) -> Result<Tester> {
    if t.n() != 2 || t.d() != 2 {
        return Err(Error::InvalidArgument("Γ-conjugation needs binary qubit testers".into()));
    }
    let blocks = (0..2)
        .map(|j| {
            (0..t.conclusions().len())
                .map(|ci| universal_not(t.block(1 - j, ci)).map(Hermitian::into_matrix))
                .collect::<std::result::Result<Vec<_>, _>>()
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok(Tester::new(t.conclusions().to_vec(), blocks)?)
}

/// Average of a tester and its Γ-conjugate; normalization becomes `I/2`.
pub fn gamma_symmetrize(t: &Tester) -> Result<Tester> {
    Ok(t.mix(&gamma_conjugate(t)?, 0.5)?)
}

/// Solution of a pair problem with its realizations.
#[derive(Debug, Clone)]
pub struct PairSolution {
    pub report: DiscriminationReport,
    pub tester: Tester,
    /// Ancilla-free tester and its report, when one exists.
    pub simple: Option<(Tester, DiscriminationReport)>,
    pub state_povm: StateDiscriminationPovm,
    pub clamped: bool,
}

fn solve_pure(h: &PureStateHypotheses, mode: Mode) -> Result<(StateDiscriminationPovm, bool)> {
    Ok(match mode {
        Mode::MinError => (helstrom_pure(h)?.1, false),
        Mode::Unambiguous => (unambiguous_pure(h)?.1, false),
        Mode::FixedFailure { p_f } => {
            let r = fixed_failure_pure(h, p_f)?;
            (r.povm, r.clamped)
        }
    })
}

/// Projective pair `{|φ⟩⟨φ|, |φ⊥⟩⟨φ⊥|}` versus `{|ψ⟩⟨ψ|, |ψ⊥⟩⟨ψ⊥|}`.
pub fn discriminate_projective_pair(phi: &[C64], psi: &[C64], eta: f64, mode: Mode) -> Result<PairSolution> {
    let h = PureStateHypotheses::new(phi, psi, eta)?;
    let m = make_projective_qubit(&h.phi)?;
    let n = make_projective_qubit(&h.psi)?;
    let (state_povm, clamped) = solve_pure(&h, mode)?;
    let tester = measurement_protocol(&state_povm)?;
    let hyps = [(&m, eta), (&n, 1.0 - eta)];
    let report = performance(&tester, &hyps)?;
    let simple = match simple_realization(&state_povm)? {
        Some(t) => {
            let r = performance(&t, &hyps)?;
            if (r.p_e - report.p_e).abs() > REALIZATION_TOL || (r.p_f - report.p_f).abs() > REALIZATION_TOL {
                return Err(Error::Consistency(format!(
                    "ancilla-free p_e = {} differs from protocol p_e = {}",
                    r.p_e, report.p_e
                )));
            }
            Some((t, r))
        }
        None => None,
    };
    if mode == Mode::MinError && simple.is_none() {
        return Err(Error::Consistency("minimum-error POVM lacks an ancilla-free realization".into()));
    }
    Ok(PairSolution {
        report,
        tester,
        simple,
        state_povm,
        clamped,
    })
}

/// Noisy pair with first effects `M₁ = μ|φ⟩⟨φ| + (1−μ)I/2` and `N₁`.
#[derive(Debug, Clone)]
pub struct NoisySolution {
    pub report: DiscriminationReport,
    pub tester: Tester,
    pub state_povm: StateDiscriminationPovm,
}

pub fn discriminate_noisy_pair(phi: &[C64], mu: f64, psi: &[C64], nu: f64, eta: f64, mode: Mode) -> Result<NoisySolution> {
    check_prior(eta)?;
    let m = make_noisy_qubit(&unit_qubit(phi)?, mu)?;
    let n = make_noisy_qubit(&unit_qubit(psi)?, nu)?;
    let rho0 = DensityOperator::new(m.effect(0).matrix().clone())?;
    let rho1 = DensityOperator::new(n.effect(0).matrix().clone())?;
    let zero = CMatrix::zeros(2, 2);
    let state_povm = match mode {
        Mode::MinError => {
            let (_, e) = helstrom_mixed(&rho0, &rho1, eta)?;
            StateDiscriminationPovm::pair(e.effect(0).matrix().clone(), e.effect(1).matrix().clone(), zero)?
        }
        Mode::Unambiguous => {
            let pure = |x: f64| (x - 1.0).abs() < 1e-15;
            if mu * nu != 0.0 && !(pure(mu) && pure(nu)) {
                return Err(Error::Infeasible(format!(
                    "unambiguous discrimination impossible: μ = {mu}, ν = {nu} give overlapping supports"
                )));
            }
            if pure(mu) && pure(nu) {
                unambiguous_pure(&PureStateHypotheses::new(phi, psi, eta)?)?.1
            } else if pure(mu) {
                // N₁ full rank: only N can be confirmed, on φ⊥
                let p = CMatrix::projector(&unit_qubit(phi)?);
                StateDiscriminationPovm::pair(zero, &CMatrix::identity(2) - &p, p)?
            } else if pure(nu) {
                let p = CMatrix::projector(&unit_qubit(psi)?);
                StateDiscriminationPovm::pair(&CMatrix::identity(2) - &p, zero, p)?
            } else {
                StateDiscriminationPovm::pair(zero.clone(), zero, CMatrix::identity(2))?
            }
        }
        Mode::FixedFailure { p_f } if (mu - 1.0).abs() < 1e-15 && (nu - 1.0).abs() < 1e-15 => {
            fixed_failure_pure(&PureStateHypotheses::new(phi, psi, eta)?, p_f)?.povm
        }
        Mode::FixedFailure { p_f } => fixed_failure_states(&rho0, &rho1, eta, p_f, 1.0)?.povm,
    };
    let tester = measurement_protocol(&state_povm)?;
    let report = performance(&tester, &[(&m, eta), (&n, 1.0 - eta)])?;
    Ok(NoisySolution {
        report,
        tester,
        state_povm,
    })
}

/// How [`discriminate_multi_projective`] solved the state problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MultiMethod {
    Helstrom,
    Identical,
    SquareRoot,
    Oracle,
}

#[derive(Debug, Clone)]
pub struct MultiSolution {
    pub report: DiscriminationReport,
    pub tester: Tester,
    pub state_povm: StateDiscriminationPovm,
    pub method: MultiMethod,
}

/// Rephases the states so consecutive overlaps agree and tests whether
/// the Gram matrix is then circulant.
pub fn is_circulant_family(phis: &[Vec<C64>]) -> bool {
    let m = phis.len();
    if m < 2 {
        return true;
    }
    let product = (0..m).fold(re(1.0), |acc, k| acc * inner(&phis[k], &phis[(k + 1) % m]));
    let modulus = inner(&phis[0], &phis[1]).norm();
    (0..m).any(|r| {
        let g = C64::from_polar(modulus, (product.arg() + 2.0 * PI * r as f64) / m as f64);
        let mut v = vec![phis[0].clone()];
        for k in 1..m {
            let o = inner(&v[k - 1], &phis[k]);
            let phase = if o.norm() > 1e-12 { g / o * (o.norm() / g.norm().max(1e-300)) } else { re(1.0) };
            let phase = if phase.norm() > 0.0 { phase / phase.norm() } else { re(1.0) };
            v.push(phis[k].iter().map(|z| z * phase).collect());
        }
        (0..m).all(|k| (0..m).all(|l| (inner(&v[k], &v[l]) - inner(&v[0], &v[(l + m - k) % m])).norm() <= GRAM_TOL))
    })
}

/// `E_k = S^{-½}|φ_k⟩⟨φ_k|S^{-½}` with `S = Σ_k |φ_k⟩⟨φ_k|`.
fn square_root_measurement(phis: &[Vec<C64>]) -> Result<Vec<CMatrix>> {
    let s = phis
        .iter()
        .fold(CMatrix::zeros(2, 2), |acc, v| &acc + &CMatrix::projector(v));
    let eig = hermitian_eig(&Hermitian::from_hermitian_part(&s));
    if eig.values[0] <= 1e-12 {
        return Err(Error::Consistency("square-root measurement needs full-rank S".into()));
    }
    let inv_root = eig.map_spectrum(|l| 1.0 / l.sqrt());
    Ok(phis
        .iter()
        .map(|v| {
            let w = inv_root.mul_vec(v);
            CMatrix::projector(&w)
        })
        .collect())
}

/// Minimum-error discrimination of `m` projective qubit measurements via
/// the states `|φ_l⟩`.
pub fn discriminate_multi_projective(phis: &[Vec<C64>], priors: &[f64], cfg: &SearchConfig) -> Result<MultiSolution> {
    let m = phis.len();
    if m < 2 || priors.len() != m {
        return Err(Error::InvalidArgument("need at least two states with one prior each".into()));
    }
    crate::testers::check_priors(priors)?;
    let phis: Vec<Vec<C64>> = phis.iter().map(|v| unit_qubit(v)).collect::<Result<_>>()?;
    let parallel = phis.iter().all(|v| inner(&phis[0], v).norm() > 1.0 - 1e-12);
    let equal = priors.iter().all(|&p| (p - priors[0]).abs() < 1e-12);
    let (effects, method) = if parallel {
        let best = (0..m).fold(0, |b, l| if priors[l] > priors[b] { l } else { b });
        let effects = (0..m)
            .map(|l| if l == best { CMatrix::identity(2) } else { CMatrix::zeros(2, 2) })
            .collect();
        (effects, MultiMethod::Identical)
    } else if m == 2 {
        let (_, e) = helstrom_pure(&PureStateHypotheses::new(&phis[0], &phis[1], priors[0])?)?;
        (vec![e.effects[0].matrix().clone(), e.effects[1].matrix().clone()], MultiMethod::Helstrom)
    } else if equal && is_circulant_family(&phis) {
        (square_root_measurement(&phis)?, MultiMethod::SquareRoot)
    } else {
        let states: Vec<DensityOperator> = phis.iter().map(|v| DensityOperator::pure(v)).collect::<std::result::Result<_, _>>()?;
        let r = oracle_state_povm(&states, priors, Mode::MinError, cfg)?;
        (r.povm.effects().iter().take(m).map(|e| e.matrix().clone()).collect(), MultiMethod::Oracle)
    };
    let state_povm = StateDiscriminationPovm::identifying(effects)?;
    let tester = measurement_protocol(&state_povm)?;
    let devices: Vec<Povm> = phis.iter().map(|v| make_projective_qubit(v)).collect::<std::result::Result<_, _>>()?;
    let hyps: Vec<(&Povm, f64)> = devices.iter().zip(priors).map(|(d, &p)| (d, p)).collect();
    let report = performance(&tester, &hyps)?;
    Ok(MultiSolution {
        report,
        tester,
        state_povm,
        method,
    })
}

/// Best ancilla-free scheme for qubit devices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimpleScheme {
    pub p_s: f64,
    pub probe: Vec<C64>,
    /// `assignment[j]` is the device concluded from outcome `j`.
    pub assignment: Vec<usize>,
    pub polar: f64,
    pub azimuth: f64,
}

impl SimpleScheme {
    /// Angle `ω` of a real probe `cos ω|0⟩ + sin ω|1⟩`.
    pub fn omega(&self) -> f64 {
        let a = self.probe[0];
        let b = self.probe[1] * a.conj() / a.norm().max(1e-300);
        b.re.atan2(a.norm())
    }
}

fn simple_success(measurements: &[Povm], priors: &[f64], psi: &[C64]) -> (f64, Vec<usize>) {
    let n = measurements[0].outcomes();
    let mut total = 0.0;
    let mut assignment = Vec::with_capacity(n);
    for j in 0..n {
        let (mut best, mut arg) = (f64::NEG_INFINITY, 0);
        for (l, m) in measurements.iter().enumerate() {
            let v = priors[l] * m.effect(j).matrix().sandwich(psi, psi).re;
            if v > best + 1e-15 {
                best = v;
                arg = l;
            }
        }
        total += best;
        assignment.push(arg);
    }
    (total, assignment)
}

/// Maximizes `Σ_j max_l η_l tr(M_{lj}ρ)` over pure probes (1° grid).
pub fn best_simple_scheme(measurements: &[Povm], priors: &[f64]) -> Result<SimpleScheme> {
    let first = measurements
        .first()
        .ok_or_else(|| Error::InvalidArgument("no measurements".into()))?;
    if measurements.iter().any(|m| m.dim() != 2 || m.outcomes() != first.outcomes()) || priors.len() != measurements.len() {
        return Err(Error::InvalidArgument("need qubit measurements of equal shape and one prior each".into()));
    }
    crate::testers::check_priors(priors)?;
    let p = sphere_maximize(
        |t, a| simple_success(measurements, priors, &qubit_ket(t, a)).0,
        1f64.to_radians(),
        1e-10,
        8,
    );
    let probe = qubit_ket(p.polar, p.azimuth);
    let (p_s, assignment) = simple_success(measurements, priors, &probe);
    Ok(SimpleScheme {
        p_s,
        probe,
        assignment,
        polar: p.polar,
        azimuth: p.azimuth,
    })
}

/// The Example-style triple of projective measurements on `|0⟩, |v±⟩`.
pub fn trine_state_devices() -> (Vec<Vec<C64>>, Vec<Povm>) {
    let states: Vec<Vec<C64>> = crate::measurements::trine_vectors().to_vec();
    let devices = states.iter().map(|v| make_projective_qubit(v).expect("unit")).collect();
    (states, devices)
}

/// `c(x, y)` re-exported for callers building kets by hand.
pub fn ket(a: (f64, f64), b: (f64, f64)) -> Vec<C64> {
    vec![c(a.0, a.1), c(b.0, b.1)]
}
