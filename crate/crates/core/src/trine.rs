//! Unambiguous discrimination of a trine measurement `M` from its copy
//! `N_θ` rotated about the z axis, with probes `√q|00⟩ + √(1−q)|11⟩`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::linalg::{hermitian_eig, re, trace_norm, CMatrix, Hermitian, C64};
use crate::measurements::{make_trine, DensityOperator, Povm};
use crate::qubit::{unambiguous_pure, PureStateHypotheses};
use crate::search::{bisect, golden_section};
use crate::testers::{performance, tester_from_protocol, Conclusion, DiscriminationReport, Tester};
use crate::{Error, Result};

/// Agreement required between closed forms and their numeric checks.
pub const ARGMIN_TOL: f64 = 1e-8;
pub const VALUE_TOL: f64 = 1e-9;
const TESTER_TOL: f64 = 1e-9;

/// Maps `θ` into `[0, 2π)`.
pub fn canonical_theta(theta: f64) -> f64 {
    let t = theta.rem_euclid(2.0 * PI);
    if t >= 2.0 * PI {
        0.0
    } else {
        t
    }
}

fn check_q(q: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidArgument(format!("Schmidt weight must lie in [0, 1], got {q}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrineInstance {
    theta: f64,
    q: f64,
}

impl TrineInstance {
    pub fn new(q: f64, theta: f64) -> Result<Self> {
        check_q(q)?;
        if !theta.is_finite() {
            return Err(Error::InvalidArgument("θ must be finite".into()));
        }
        Ok(TrineInstance {
            theta: canonical_theta(theta),
            q,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `√q|00⟩ + √(1−q)|11⟩`, system first.
    pub fn probe(&self) -> Vec<C64> {
        vec![re(self.q.sqrt()), re(0.0), re(0.0), re((1.0 - self.q).sqrt())]
    }

    pub fn devices(&self) -> (Povm, Povm) {
        (make_trine(0.0, false), make_trine(self.theta, true))
    }
}

/// `√(q² + 9(1−q)² + 6q(1−q)cos θ)` evaluated as `|q + 3(1−q)e^{iθ}|`, free of cancellation.
fn root_radicand(q: f64, theta: f64) -> f64 {
    let (s, c) = theta.sin_cos();
    (q + 3.0 * (1.0 - q) * c).hypot(3.0 * (1.0 - q) * s)
}

/// `(2q + √(q² + 9(1−q)² + 6q(1−q)cos θ)) / 3`
pub fn trine_lower_bound(q: f64, theta: f64) -> Result<f64> {
    check_q(q)?;
    Ok((2.0 * q + root_radicand(q, theta)) / 3.0)
}

/// `|q + 3e^{iθ}(1−q)| / (3 − 2q)`
pub fn trine_overlap(q: f64, theta: f64) -> Result<f64> {
    check_q(q)?;
    Ok((C64::from_polar(3.0 * (1.0 - q), theta) + q).norm() / (3.0 - 2.0 * q))
}

/// Ancilla states left by outcome `j` of each device, unnormalized:
/// `√ρ|m_j*⟩` and `√ρ|n_j*⟩` with `ρ = diag(q, 1−q)`.
pub fn conditional_states(q: f64, theta: f64, j: usize) -> Result<(Vec<C64>, Vec<C64>)> {
    check_q(q)?;
    let inst = TrineInstance::new(q, theta)?;
    let (m, n) = inst.devices();
    let vec_of = |e: &Hermitian| -> Vec<C64> {
        let eig = hermitian_eig(e);
        let top = eig.values[1].max(0.0).sqrt();
        eig.vector(1).iter().map(|z| z.conj() * top).collect()
    };
    let weights = [q.sqrt(), (1.0 - q).sqrt()];
    let apply = |v: Vec<C64>| -> Vec<C64> { v.iter().zip(weights).map(|(z, w)| z * w).collect() };
    Ok((apply(vec_of(m.effect(j))), apply(vec_of(n.effect(j)))))
}

/// Overlap of the normalized outcome-2 conditional states.
pub fn trine_overlap_from_states(q: f64, theta: f64) -> Result<f64> {
    let (a, b) = conditional_states(q, theta, 1)?;
    let na = crate::linalg::norm(&a);
    let nb = crate::linalg::norm(&b);
    Ok((crate::linalg::inner(&a, &b).norm() / (na * nb)).min(1.0))
}

/// Failure rate of the scheme: outcome 1 always fails (weight `2q/3`);
/// outcomes 2 and 3 (weight `(3−2q)/6` each) fail with the overlap.
pub fn trine_protocol_pf(q: f64, theta: f64) -> Result<f64> {
    Ok(2.0 * q / 3.0 + (3.0 - 2.0 * q) / 3.0 * trine_overlap(q, theta)?)
}

/// Closed-form and numeric optimum over the Schmidt weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrineOptimum {
    pub theta: f64,
    pub q_star: f64,
    pub p_f_star: f64,
    pub q_numeric: f64,
    pub p_f_numeric: f64,
    /// The bound does not depend on `q`, so only values are compared.
    pub flat: bool,
}

/// `q* = (9 − 2√3|cos(θ/2)| − 3cos θ) / (10 − 6cos θ)`
pub fn trine_q_star(theta: f64) -> f64 {
    let c = (theta / 2.0).cos().abs();
    (9.0 - 2.0 * 3f64.sqrt() * c - 3.0 * theta.cos()) / (10.0 - 6.0 * theta.cos())
}

/// `p_f = (1 + √3|cos(θ/2)| + (4 − 2√3|cos(θ/2)|)/(5 − 3cos θ)) / 3`
pub fn trine_optimal_pf(theta: f64) -> f64 {
    let c = 3f64.sqrt() * (theta / 2.0).cos().abs();
    (1.0 + c + (4.0 - 2.0 * c) / (5.0 - 3.0 * theta.cos())) / 3.0
}

fn bound_slope(q: f64, theta: f64) -> f64 {
    let r = root_radicand(q, theta).powi(2);
    let dr = 2.0 * q - 18.0 * (1.0 - q) + 6.0 * theta.cos() * (1.0 - 2.0 * q);
    (2.0 + dr / (2.0 * r.max(1e-300).sqrt())) / 3.0
}

/// Optimal Schmidt weight and failure rate, cross-checked numerically.
pub fn trine_optimal(theta: f64) -> Result<TrineOptimum> {
    let theta = canonical_theta(theta);
    let q_star = trine_q_star(theta);
    let p_f_star = trine_optimal_pf(theta);
    let f = |q: f64| trine_lower_bound(q, theta).expect("q in range");
    let (_, p_f_numeric) = golden_section(f, 0.0, 1.0, 1e-12);
    let q_numeric = if bound_slope(0.0, theta) >= 0.0 {
        0.0
    } else if bound_slope(1.0, theta) <= 0.0 {
        1.0
    } else {
        bisect(|q| bound_slope(q, theta), 0.0, 1.0, 1e-15)
    };
    let p_f_numeric = p_f_numeric.min(f(q_numeric));
    let flat = (1.0 - theta.cos()).abs() < 1e-14;
    if (p_f_numeric - p_f_star).abs() > VALUE_TOL || (f(q_star) - p_f_star).abs() > VALUE_TOL {
        return Err(Error::Consistency(format!(
            "θ = {theta}: closed-form p_f {p_f_star}, numeric {p_f_numeric}"
        )));
    }
    if !flat && (q_numeric - q_star).abs() > ARGMIN_TOL {
        return Err(Error::Consistency(format!("θ = {theta}: q* = {q_star}, numeric argmin {q_numeric}")));
    }
    Ok(TrineOptimum {
        theta,
        q_star,
        p_f_star,
        q_numeric,
        p_f_numeric,
        flat,
    })
}

/// Entangled probe, trine measured on the system; outcome 1 fails and
/// outcomes 2, 3 steer optimal unambiguous discrimination of the two
/// equiprobable ancilla states.
pub fn trine_tester(q: f64, theta: f64) -> Result<Tester> {
    let inst = TrineInstance::new(q, theta)?;
    let all_fail = Povm::new(vec![CMatrix::zeros(2, 2), CMatrix::zeros(2, 2), CMatrix::identity(2)])?;
    let mut conditional = vec![all_fail.clone()];
    for j in 1..3 {
        let (a, b) = conditional_states(q, inst.theta, j)?;
        let (na, nb) = (crate::linalg::norm(&a), crate::linalg::norm(&b));
        if na < 1e-15 || nb < 1e-15 {
            conditional.push(all_fail.clone());
            continue;
        }
        let unit = |v: &[C64], n: f64| -> Vec<C64> { v.iter().map(|z| z / n).collect() };
        let h = PureStateHypotheses::new(&unit(&a, na), &unit(&b, nb), 0.5)?;
        conditional.push(unambiguous_pure(&h)?.1.povm());
    }
    let map = vec![vec![0, 1, 2]; 3];
    Ok(tester_from_protocol(&inst.probe(), (2, 2), &conditional, &map, Conclusion::pair())?)
}

/// Performance of [`trine_tester`] at equal priors.
pub fn trine_tester_report(q: f64, theta: f64) -> Result<DiscriminationReport> {
    let t = trine_tester(q, theta)?;
    let (m, n) = TrineInstance::new(q, theta)?.devices();
    Ok(performance(&t, &[(&m, 0.5), (&n, 0.5)])?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrineSweepRow {
    pub theta: f64,
    pub q_star: f64,
    pub p_f_optimal: f64,
    pub p_f_maxentangled: f64,
    pub gap: f64,
}

/// One row per `θ`, each checked against the assembled testers.
pub fn trine_sweep(thetas: &[f64]) -> Result<Vec<TrineSweepRow>> {
    if thetas.is_empty() {
        return Err(Error::InvalidArgument("empty θ grid".into()));
    }
    thetas
        .iter()
        .map(|&theta| {
            let opt = trine_optimal(theta)?;
            let p_f_maxentangled = trine_lower_bound(0.5, theta)?;
            for (q, expect) in [(opt.q_star, opt.p_f_star), (0.5, p_f_maxentangled)] {
                let r = trine_tester_report(q, theta)?;
                if (r.p_f - expect).abs() > TESTER_TOL || r.p_e > TESTER_TOL {
                    return Err(Error::Consistency(format!(
                        "θ = {theta}, q = {q}: tester p_f {} (p_e {}), expected {expect}",
                        r.p_f, r.p_e
                    )));
                }
            }
            Ok(TrineSweepRow {
                theta,
                q_star: opt.q_star,
                p_f_optimal: opt.p_f_star,
                p_f_maxentangled,
                gap: p_f_maxentangled - opt.p_f_star,
            })
        })
        .collect()
}

/// Evenly spaced grid with `steps` points from `lo` to `hi` inclusive.
pub fn theta_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..steps).map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64).collect(),
    }
}

/// `2√(η_M η_N) Σ_j ‖√(M_jᵀ) ρ √(N_jᵀ)‖_tr`, a lower bound on the
/// failure rate of unambiguous testers with normalization `ρ`.
pub fn ziman_bound(m: &Povm, n: &Povm, priors: [f64; 2], rho: &DensityOperator) -> Result<f64> {
    if m.dim() != n.dim() || m.outcomes() != n.outcomes() || rho.dim() != m.dim() {
        return Err(Error::InvalidArgument("devices and state must share dimension and outcomes".into()));
    }
    crate::testers::check_priors(&priors)?;
    let root = |h: &Hermitian| hermitian_eig(&h.transpose()).map_spectrum(|l| l.max(0.0).sqrt());
    let total: f64 = m
        .effects()
        .iter()
        .zip(n.effects())
        .map(|(a, b)| trace_norm(&root(a).matmul(rho.matrix()).matmul(&root(b))))
        .sum();
    Ok(2.0 * (priors[0] * priors[1]).sqrt() * total)
}

/// Trine-pair bound for `ρ = [[q, z], [z*, 1−q]]` at equal priors.
pub fn trine_bound_with_coherence(q: f64, theta: f64, z: C64) -> Result<f64> {
    check_q(q)?;
    let rho = DensityOperator::new(CMatrix::from_rows(&[vec![re(q), z], vec![z.conj(), re(1.0 - q)]]))?;
    let (m, n) = TrineInstance::new(q, theta)?.devices();
    ziman_bound(&m, &n, [0.5, 0.5], &rho)
}
