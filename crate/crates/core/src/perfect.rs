//! Perfect distinguishability and minimum-error discrimination of
//! measurement pairs.

use serde::Serialize;

use crate::linalg::{self, c, eigenspace_projector, kernel_projector, range_basis, re, subspace_intersection, CMatrix, Hermitian, C64};
use crate::measurements::{apply, qubit_ket, DensityOperator, Povm};
use crate::search::{ball_maximize, compass, sphere_maximize};
use crate::testers::{conditional_table, deterministic_assignment, simple_tester, Conclusion, Tester};
use crate::{Error, Result};

/// Probability tolerance for certainty claims.
pub const CERTAINTY_TOL: f64 = 1e-9;
/// Threshold on `min Σ_j μ_j ν_j` below which a simple scheme is perfect.
pub const OVERLAP_ZERO: f64 = 1e-9;

const SPHERE_STEP_DEG: f64 = 1.0;
const BALL_STEP: f64 = 0.02;
const SPHERE_TOL: f64 = 1e-10;
const BALL_TOL: f64 = 1e-8;
const SPHERE_STARTS: usize = 8;

/// Probe certifying perfect discrimination of a binary pair: under `M` the
/// outcome `certainty_outcome` fires surely, under `N` never.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerfectWitness {
    pub probe: Vec<C64>,
    pub certainty_outcome: usize,
    /// `identified[j]` is the conclusion drawn from outcome `j`.
    pub identified: Vec<Conclusion>,
}

impl PerfectWitness {
    fn binary(probe: Vec<C64>, j: usize) -> Self {
        let mut identified = vec![Conclusion::new("N"); 2];
        identified[j] = Conclusion::new("M");
        PerfectWitness {
            probe,
            certainty_outcome: j,
            identified,
        }
    }

    /// Outcome-to-conclusion map in [`Conclusion::pair`] indices.
    pub fn assignment(&self) -> Vec<usize> {
        self.identified
            .iter()
            .map(|c| if c.label() == "M" { 0 } else { 1 })
            .collect()
    }

    pub fn tester(&self) -> Result<Tester> {
        Ok(simple_tester(
            &DensityOperator::pure(&self.probe)?,
            &deterministic_assignment(&self.assignment(), 3),
            Conclusion::pair(),
        )?)
    }

    /// True when the witness identifies both devices with certainty.
    pub fn verify(&self, m: &Povm, n: &Povm) -> Result<bool> {
        let report = verify_perfect_family(&[m.clone(), n.clone()], &self.probe, Some(&self.assignment()))?;
        Ok(report.all_passed)
    }
}

fn check_pair(m: &Povm, n: &Povm) -> Result<()> {
    if m.dim() != n.dim() || m.outcomes() != n.outcomes() {
        return Err(Error::InvalidArgument(format!(
            "measurements differ in shape: ({}, {}) vs ({}, {})",
            m.outcomes(),
            m.dim(),
            n.outcomes(),
            n.dim()
        )));
    }
    Ok(())
}

/// Binary criterion: the pair is perfectly distinguishable iff for some
/// outcome `j` the unit eigenspace of `M_j` meets the kernel of `N_j`.
pub fn binary_perfect_check(m: &Povm, n: &Povm) -> Result<Option<PerfectWitness>> {
    check_pair(m, n)?;
    if m.outcomes() != 2 {
        return Err(Error::InvalidArgument(format!(
            "binary criterion needs two-outcome measurements, got {}",
            m.outcomes()
        )));
    }
    for j in 0..2 {
        let unit = eigenspace_projector(m.effect(j), 1.0, linalg::RANK_TOL);
        let kernel = kernel_projector(n.effect(j));
        let k = subspace_intersection(&unit, &kernel)?;
        if let Some(v) = range_basis(&k).into_iter().next() {
            return Ok(Some(PerfectWitness::binary(v, j)));
        }
    }
    Ok(None)
}

/// Outcome of a probe search; `exhaustive` is false outside the qubit case.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeSearch {
    pub value: f64,
    pub probe: Vec<C64>,
    pub exhaustive: bool,
}

/// Maximizes `f(|ψ⟩)` over pure probes.
fn probe_maximize(d: usize, f: impl Fn(&[C64]) -> f64) -> ProbeSearch {
    if d == 2 {
        let p = sphere_maximize(
            |t, a| f(&qubit_ket(t, a)),
            SPHERE_STEP_DEG.to_radians(),
            SPHERE_TOL,
            SPHERE_STARTS,
        );
        return ProbeSearch {
            value: p.value,
            probe: qubit_ket(p.polar, p.azimuth),
            exhaustive: true,
        };
    }
    let to_vec = |x: &[f64]| -> Option<Vec<C64>> {
        let v: Vec<C64> = (0..d).map(|k| c(x[2 * k], x[2 * k + 1])).collect();
        linalg::normalize(&v).ok()
    };
    let g = |x: &[f64]| to_vec(x).map_or(f64::NEG_INFINITY, |v| f(&v));
    let mut starts: Vec<Vec<f64>> = (0..d)
        .map(|k| (0..2 * d).map(|i| if i == 2 * k { 1.0 } else { 0.0 }).collect())
        .collect();
    starts.push((0..2 * d).map(|i| if i % 2 == 0 { 1.0 } else { 0.0 }).collect());
    let mut best: Option<(Vec<f64>, f64)> = None;
    for x0 in starts {
        let f0 = g(&x0);
        let (x, v) = compass(g, x0, f0, 0.5, 1e-9);
        if best.as_ref().map_or(true, |b| v > b.1) {
            best = Some((x, v));
        }
    }
    let (x, value) = best.expect("at least one start");
    ProbeSearch {
        value,
        probe: to_vec(&x).expect("search keeps a nonzero vector"),
        exhaustive: false,
    }
}

fn sum_overlap(m: &Povm, n: &Povm, psi: &[C64]) -> f64 {
    (0..m.outcomes())
        .map(|j| m.effect(j).matrix().sandwich(psi, psi).re * n.effect(j).matrix().sandwich(psi, psi).re)
        .sum()
}

/// Ancilla-free perfect discrimination needs a probe with
/// `Σ_j ⟨ψ|M_j|ψ⟩⟨ψ|N_j|ψ⟩ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimpleCheck {
    pub probe: Option<Vec<C64>>,
    pub min_overlap: f64,
    pub argmin: Vec<C64>,
    pub exhaustive: bool,
}

pub fn simple_scheme_perfect_check(m: &Povm, n: &Povm) -> Result<SimpleCheck> {
    check_pair(m, n)?;
    let s = probe_maximize(m.dim(), |psi| -sum_overlap(m, n, psi));
    let min_overlap = (-s.value).max(0.0);
    Ok(SimpleCheck {
        probe: (min_overlap <= OVERLAP_ZERO).then(|| s.probe.clone()),
        min_overlap,
        argmin: s.probe,
        exhaustive: s.exhaustive,
    })
}

/// Report of [`verify_perfect_family`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyReport {
    /// `p(l | M_l)` for each member.
    pub probabilities: Vec<f64>,
    pub passed: Vec<bool>,
    pub injective: bool,
    pub all_passed: bool,
}

/// Checks that the simple scheme with `probe` and outcome map
/// `assignment` (default `j ↦ j`) identifies every member with certainty.
pub fn verify_perfect_family(measurements: &[Povm], probe: &[C64], assignment: Option<&[usize]>) -> Result<FamilyReport> {
    let first = measurements
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty family".into()))?;
    let (n, d) = (first.outcomes(), first.dim());
    if measurements.iter().any(|m| m.outcomes() != n || m.dim() != d) {
        return Err(Error::InvalidArgument("family members differ in shape".into()));
    }
    let m = measurements.len();
    if m > n {
        return Err(Error::InvalidArgument(format!(
            "{m} measurements with {n} outcomes cannot be perfectly distinguishable"
        )));
    }
    let default: Vec<usize> = (0..n).map(|j| j.min(m - 1)).collect();
    let map = assignment.unwrap_or(&default);
    if map.len() != n || map.iter().any(|&l| l >= m) {
        return Err(Error::InvalidArgument("assignment must map every outcome to a member".into()));
    }
    // each member needs its own outcome
    let injective = (0..m).all(|l| map.contains(&l));
    let tester = simple_tester(
        &DensityOperator::pure(probe)?,
        &deterministic_assignment(map, m),
        Conclusion::numbered(m, false),
    )?;
    let mut probabilities = Vec::with_capacity(m);
    for (l, member) in measurements.iter().enumerate() {
        probabilities.push(conditional_table(&tester, member)?[l]);
    }
    let passed: Vec<bool> = probabilities.iter().map(|p| (p - 1.0).abs() <= CERTAINTY_TOL).collect();
    let all_passed = injective && passed.iter().all(|&b| b);
    Ok(FamilyReport {
        probabilities,
        passed,
        injective,
        all_passed,
    })
}

fn differences_transposed(m: &Povm, n: &Povm) -> Vec<CMatrix> {
    (0..m.outcomes())
        .map(|j| (m.effect(j).matrix() - n.effect(j).matrix()).transpose())
        .collect()
}

/// `Σ_j ‖√σ X_j √σ‖_tr` for Hermitian qubit `X_j`; uses
/// `tr(√σX√σ) = tr(σX)` and `det(√σX√σ) = det σ · det X`.
fn qubit_cb_objective(sigma: &[[C64; 2]; 2], xs: &[[[C64; 2]; 2]]) -> f64 {
    let det_s = (sigma[0][0] * sigma[1][1] - sigma[0][1] * sigma[1][0]).re;
    xs.iter()
        .map(|x| {
            let tr = (sigma[0][0] * x[0][0] + sigma[0][1] * x[1][0] + sigma[1][0] * x[0][1] + sigma[1][1] * x[1][1]).re;
            let det = det_s * (x[0][0] * x[1][1] - x[0][1] * x[1][0]).re;
            if det >= 0.0 {
                tr.abs()
            } else {
                (tr * tr - 4.0 * det).sqrt()
            }
        })
        .sum()
}

fn bloch_sigma(r: [f64; 3]) -> [[C64; 2]; 2] {
    [
        [re(0.5 * (1.0 + r[2])), c(0.5 * r[0], -0.5 * r[1])],
        [c(0.5 * r[0], 0.5 * r[1]), re(0.5 * (1.0 - r[2]))],
    ]
}

/// `D(σ) = Σ_j ‖√σ (M_j − N_j)ᵀ √σ‖_tr`
pub fn cb_objective(m: &Povm, n: &Povm, sigma: &DensityOperator) -> Result<f64> {
    check_pair(m, n)?;
    let s = linalg::sqrt_psd(sigma.hermitian())?;
    Ok(differences_transposed(m, n)
        .iter()
        .map(|x| linalg::trace_norm(&s.matrix().matmul(x).matmul(s.matrix())))
        .sum())
}

/// Minimum error of an equiprobable pair with the optimal test state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinErrorPair {
    pub p_e: f64,
    pub cb_value: f64,
    #[serde(skip)]
    pub sigma: DensityOperator,
    pub exhaustive: bool,
}

/// `p_e = ½(1 − ½ max_σ D(σ))` for equal priors.
pub fn minerror_pair(m: &Povm, n: &Povm) -> Result<MinErrorPair> {
    check_pair(m, n)?;
    let d = m.dim();
    let (sigma, value, exhaustive) = if d == 2 {
        let xs: Vec<[[C64; 2]; 2]> = differences_transposed(m, n)
            .iter()
            .map(|x| [[x[(0, 0)], x[(0, 1)]], [x[(1, 0)], x[(1, 1)]]])
            .collect();
        let (r, v) = ball_maximize(|r| qubit_cb_objective(&bloch_sigma(r), &xs), BALL_STEP, BALL_TOL, 4);
        (DensityOperator::from_bloch(r[0], r[1], r[2])?, v, true)
    } else {
        let (s, v) = mixed_state_search(d, |s| cb_objective(m, n, s).unwrap_or(f64::NEG_INFINITY))?;
        (s, v, false)
    };
    let p_e = (0.5 * (1.0 - 0.5 * value)).clamp(0.0, 0.5);
    Ok(MinErrorPair {
        p_e,
        cb_value: value,
        sigma,
        exhaustive,
    })
}

/// Local search over `σ = AA†/tr(AA†)` from the maximally mixed state and
/// the basis projectors.
fn mixed_state_search(d: usize, f: impl Fn(&DensityOperator) -> f64) -> Result<(DensityOperator, f64)> {
    let to_state = |x: &[f64]| -> Option<DensityOperator> {
        let a = CMatrix::from_fn(d, d, |i, j| c(x[2 * (i * d + j)], x[2 * (i * d + j) + 1]));
        let g = a.matmul(&a.adjoint());
        let tr = g.trace().re;
        (tr > 1e-12).then(|| DensityOperator::new(g.scale_re(1.0 / tr)).ok()).flatten()
    };
    let g = |x: &[f64]| to_state(x).map_or(f64::NEG_INFINITY, |s| f(&s));
    let diag_start = |w: &dyn Fn(usize) -> f64| -> Vec<f64> {
        (0..2 * d * d)
            .map(|i| {
                let k = i / 2;
                if i % 2 == 0 && k / d == k % d {
                    w(k / d)
                } else {
                    0.0
                }
            })
            .collect()
    };
    let mut starts = vec![diag_start(&|_| 1.0)];
    for p in 0..d {
        starts.push(diag_start(&move |k| if k == p { 1.0 } else { 0.1 }));
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    for x0 in starts {
        let f0 = g(&x0);
        let (x, v) = compass(g, x0, f0, 0.25, 1e-7);
        if best.as_ref().map_or(true, |b| v > b.1) {
            best = Some((x, v));
        }
    }
    let (x, v) = best.expect("at least one start");
    Ok((to_state(&x).ok_or_else(|| Error::Consistency("degenerate search state".into()))?, v))
}

/// `max_ψ Σ_j |⟨ψ|(M_j − N_j)|ψ⟩|`, the ancilla-free distance.
pub fn simple_scheme_distance(m: &Povm, n: &Povm) -> Result<ProbeSearch> {
    check_pair(m, n)?;
    let diffs: Vec<CMatrix> = (0..m.outcomes())
        .map(|j| m.effect(j).matrix() - n.effect(j).matrix())
        .collect();
    Ok(probe_maximize(m.dim(), |psi| {
        diffs.iter().map(|x| x.sandwich(psi, psi).re.abs()).sum()
    }))
}

/// Outcome distributions of a probe under both devices.
pub fn probe_distributions(m: &Povm, n: &Povm, probe: &[C64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let rho = DensityOperator::pure(probe)?;
    Ok((apply(m, &rho)?, apply(n, &rho)?))
}

/// Convenience: the Hermitian unit-eigenspace projector of an effect.
pub fn unit_eigenspace(e: &Hermitian) -> CMatrix {
    eigenspace_projector(e, 1.0, linalg::RANK_TOL)
}
