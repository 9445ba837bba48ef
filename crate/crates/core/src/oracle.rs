//! Brute-force optimizers used as independent references.
//!
//! Everything here searches over raw parametrizations (random restarts,
//! grids and shrinking pattern search) and never calls the analytic
//! solvers of the other modules.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::{
    columns_to_matrix, hermitian_eig, kernel_projector, range_basis, trace_norm, trace_norm_hermitian, CMatrix,
    Hermitian, C64,
};
use crate::measurements::{qubit_ket, qubit_perp, DensityOperator, Povm};
use crate::search::{compass, golden_section};
use crate::testers::{check_priors, performance, simple_tester, tester_from_protocol, Conclusion, Mode, Tester};
use crate::{Error, Result};

/// Oracle search settings. Identical configs give identical results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Bloch-sphere grid step for probe searches, degrees.
    pub sphere_step_deg: f64,
    /// Grid step for the (Schmidt angle, local basis) probe search, degrees.
    pub ancilla_step_deg: f64,
    /// Local grid refinement rounds around each start.
    pub rounds: usize,
    /// Step factor between rounds.
    pub shrink: f64,
    /// Final pattern-search step tolerance.
    pub tol: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            sphere_step_deg: 2.0,
            ancilla_step_deg: 15.0,
            rounds: 4,
            shrink: 0.25,
            tol: 1e-8,
            restarts: 8,
            seed: 0x5eed,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.sphere_step_deg > 0.0
            && self.sphere_step_deg <= 90.0
            && self.ancilla_step_deg > 0.0
            && self.ancilla_step_deg <= 90.0
            && self.shrink > 0.0
            && self.shrink < 1.0
            && self.tol > 0.0
            && self.restarts >= 1;
        if !ok {
            return Err(Error::InvalidArgument(format!("invalid search config {self:?}")));
        }
        Ok(())
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Machine-readable oracle output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub target: String,
    pub value: f64,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub config: SearchConfig,
}

impl OracleReport {
    pub fn new(target: impl Into<String>, value: f64, config: SearchConfig) -> Self {
        OracleReport {
            target: target.into(),
            value,
            parameters: BTreeMap::new(),
            config,
        }
    }

    pub fn with(mut self, key: &str, value: impl Serialize) -> Self {
        self.parameters
            .insert(key.to_string(), serde_json::to_value(value).expect("serializable parameter"));
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Best state-discrimination POVM found. `value` is `p_f` in unambiguous
/// mode and `p_e` otherwise; the last effect is `fail`.
#[derive(Debug, Clone)]
pub struct StateOracle {
    pub value: f64,
    pub p_s: f64,
    pub p_e: f64,
    pub p_f: f64,
    pub povm: Povm,
}

/// `A A†` for the `r×r` complex matrix packed in `x`.
fn gram(x: &[f64], r: usize) -> CMatrix {
    let a = CMatrix::from_fn(r, r, |i, j| C64::new(x[2 * (i * r + j)], x[2 * (i * r + j) + 1]));
    a.matmul(&a.adjoint())
}

fn inv_sqrt(s: &CMatrix) -> Option<CMatrix> {
    let eig = hermitian_eig(&Hermitian::from_hermitian_part(s));
    if eig.values[0] <= 1e-12 * eig.values.last().copied().unwrap_or(1.0).max(1.0) {
        return None;
    }
    Some(eig.map_spectrum(|l| 1.0 / l.sqrt()))
}

fn ev(e: &CMatrix, w: &CMatrix) -> f64 {
    e.trace_product(w).re
}

/// Effect parametrizations for weighted states `w_l` (priors folded in).
struct Parametrization<'a> {
    w: &'a [CMatrix],
    d: usize,
    mode: Mode,
    /// Orthonormal basis of the subspace each conclusion may use.
    support: Vec<CMatrix>,
}

impl<'a> Parametrization<'a> {
    fn new(w: &'a [CMatrix], mode: Mode) -> Self {
        let d = w[0].rows();
        let support = match mode {
            Mode::Unambiguous => (0..w.len())
                .map(|k| {
                    let others = w
                        .iter()
                        .enumerate()
                        .filter(|(l, _)| *l != k)
                        .fold(CMatrix::zeros(d, d), |acc, (_, x)| &acc + x);
                    let scale = others.max_abs();
                    let kernel = if scale > 0.0 {
                        kernel_projector(&Hermitian::from_hermitian_part(&others.scale_re(1.0 / scale)))
                    } else {
                        CMatrix::identity(d)
                    };
                    columns_to_matrix(d, &range_basis(&kernel))
                })
                .collect(),
            _ => vec![CMatrix::identity(d); w.len() + usize::from(matches!(mode, Mode::FixedFailure { .. }))],
        };
        Parametrization { w, d, mode, support }
    }

    fn sizes(&self) -> Vec<usize> {
        self.support.iter().map(|b| b.cols()).collect()
    }

    fn len(&self) -> usize {
        self.sizes().iter().map(|r| 2 * r * r).sum()
    }

    fn raw(&self, x: &[f64]) -> Vec<CMatrix> {
        let mut out = Vec::with_capacity(self.support.len());
        let mut off = 0;
        for b in &self.support {
            let r = b.cols();
            if r == 0 {
                out.push(CMatrix::zeros(self.d, self.d));
                continue;
            }
            let g = gram(&x[off..off + 2 * r * r], r);
            out.push(b.matmul(&g).matmul(&b.adjoint()));
            off += 2 * r * r;
        }
        out
    }

    /// Effects for the conclusions followed by the fail effect.
    fn effects(&self, x: &[f64]) -> Option<Vec<CMatrix>> {
        let d = self.d;
        let id = CMatrix::identity(d);
        let raw = self.raw(x);
        let s = raw.iter().fold(CMatrix::zeros(d, d), |acc, g| &acc + g);
        match self.mode {
            Mode::MinError => {
                let r = inv_sqrt(&s)?;
                let mut e: Vec<CMatrix> = raw.iter().map(|g| r.matmul(g).matmul(&r).hermitian_part()).collect();
                e.push(CMatrix::zeros(d, d));
                Some(e)
            }
            Mode::Unambiguous => {
                let top = hermitian_eig(&Hermitian::from_hermitian_part(&s)).values[d - 1];
                let mut e: Vec<CMatrix> = if top > 1e-300 {
                    raw.iter().map(|g| g.scale_re(1.0 / top)).collect()
                } else {
                    vec![CMatrix::zeros(d, d); raw.len()]
                };
                let used = e.iter().fold(CMatrix::zeros(d, d), |acc, x| &acc + x);
                e.push((&id - &used).hermitian_part());
                Some(e)
            }
            Mode::FixedFailure { p_f } => {
                let r = inv_sqrt(&s)?;
                let mut e: Vec<CMatrix> = raw.iter().map(|g| r.matmul(g).matmul(&r).hermitian_part()).collect();
                let total = self.w.iter().fold(CMatrix::zeros(d, d), |acc, x| &acc + x);
                let fail = e.len() - 1;
                let current = ev(&e[fail], &total);
                if current < p_f {
                    // mix with the all-fail measurement
                    let s = (p_f - current) / (1.0 - current);
                    for x in e.iter_mut() {
                        *x = x.scale_re(1.0 - s);
                    }
                    e[fail] = &e[fail] + &id.scale_re(s);
                } else if current > p_f {
                    // fold part of the failure into the conclusion gaining most from it
                    let s = 1.0 - p_f / current;
                    let best = (0..fail)
                        .max_by(|&a, &b| ev(&e[fail], &self.w[a]).total_cmp(&ev(&e[fail], &self.w[b])))
                        .unwrap_or(0);
                    e[best] = &e[best] + &e[fail].scale_re(s);
                    e[fail] = e[fail].scale_re(1.0 - s);
                }
                Some(e)
            }
        }
    }

    fn success(&self, e: &[CMatrix]) -> f64 {
        self.w.iter().zip(e).map(|(w, x)| ev(x, w)).sum()
    }
}

/// Maximizes success over effect parametrizations of weighted states.
fn weighted_search(w: &[CMatrix], mode: Mode, cfg: &SearchConfig) -> Vec<CMatrix> {
    let p = Parametrization::new(w, mode);
    let mut rng = cfg.rng();
    let starts: Vec<Vec<f64>> = (0..cfg.restarts).map(|_| (0..p.len()).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    search_from(&p, starts, cfg).1
}

/// Compass search from each start, relaunched until it stops improving;
/// returns the best parameters and effects.
fn search_from(p: &Parametrization, starts: Vec<Vec<f64>>, cfg: &SearchConfig) -> (Vec<f64>, Vec<CMatrix>) {
    let d = p.d;
    if p.len() == 0 {
        let mut e = vec![CMatrix::zeros(d, d); p.w.len()];
        e.push(CMatrix::identity(d));
        return (Vec::new(), e);
    }
    let f = |x: &[f64]| p.effects(x).map_or(f64::NEG_INFINITY, |e| p.success(&e));
    let mut best: Option<(Vec<f64>, f64)> = None;
    for x0 in starts {
        let f0 = f(&x0);
        let (mut x, mut v) = compass(f, x0, f0, 0.5, cfg.tol);
        for _ in 0..RELAUNCHES {
            let (y, u) = compass(f, x.clone(), v, 0.5, cfg.tol);
            if u <= v + 1e-15 {
                break;
            }
            (x, v) = (y, u);
        }
        if best.as_ref().is_none_or(|b| v > b.1) {
            best = Some((x, v));
        }
    }
    let (x, _) = best.expect("at least one start");
    let e = p.effects(&x).expect("best point is feasible");
    (x, e)
}

const RELAUNCHES: usize = 3;

/// Fixed failure rate through the multiplier `λ` of the constraint: for
/// each `λ` the fail effect competes as an extra hypothesis `λ Σ_l w_l` in
/// an unconstrained search, and `λ` is bisected until the failure rates
/// bracket `p_f`. The two bracketing POVMs are mixed.
fn fixed_failure_search(w: &[CMatrix], p_f: f64, cfg: &SearchConfig) -> Vec<CMatrix> {
    let d = w[0].rows();
    let m = w.len();
    let total = w.iter().fold(CMatrix::zeros(d, d), |acc, x| &acc + x);
    let rate = |e: &[CMatrix]| ev(&e[m], &total);
    let mix = |x: &[CMatrix], y: &[CMatrix], t: f64| -> Vec<CMatrix> {
        x.iter().zip(y).map(|(x, y)| &x.scale_re(1.0 - t) + &y.scale_re(t)).collect()
    };
    let mut lo = weighted_search(w, Mode::MinError, cfg);
    if rate(&lo) >= p_f {
        return lo;
    }
    // beyond the unambiguous rate the optimum mixes in the all-fail measurement
    let mut hi = weighted_search(w, Mode::Unambiguous, cfg);
    let r_hi = rate(&hi);
    if r_hi <= p_f {
        let mut all_fail = vec![CMatrix::zeros(d, d); m];
        all_fail.push(CMatrix::identity(d));
        let t = if r_hi < 1.0 { (p_f - r_hi) / (1.0 - r_hi) } else { 0.0 };
        return mix(&hi, &all_fail, t);
    }
    let mut rng = cfg.rng();
    let n = 2 * d * d * (m + 1);
    let mut random = |k: usize| -> Vec<Vec<f64>> { (0..k).map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect() };
    let (mut a, mut b) = (0.0, 1.0);
    let (mut x_lo, mut x_hi): (Option<Vec<f64>>, Option<Vec<f64>>) = (None, None);
    for step in 0..FF_BISECTIONS {
        if rate(&hi) - rate(&lo) < FF_BRACKET {
            break;
        }
        let lambda = 0.5 * (a + b);
        let mut wl = w.to_vec();
        wl.push(total.scale_re(lambda));
        let p = Parametrization::new(&wl, Mode::MinError);
        let mut starts = random(if step == 0 { cfg.restarts } else { 1 });
        starts.extend(x_lo.iter().chain(&x_hi).cloned());
        let (x, mut e) = search_from(&p, starts, cfg);
        e.truncate(m + 1);
        if rate(&e) <= p_f {
            (a, lo, x_lo) = (lambda, e, Some(x));
        } else {
            (b, hi, x_hi) = (lambda, e, Some(x));
        }
    }
    let (r0, r1) = (rate(&lo), rate(&hi));
    let t = if r1 - r0 > 1e-15 { ((p_f - r0) / (r1 - r0)).clamp(0.0, 1.0) } else { 0.0 };
    mix(&lo, &hi, t)
}

const FF_BISECTIONS: usize = 40;
const FF_BRACKET: f64 = 1e-9;

fn check_states(states: &[DensityOperator], priors: &[f64]) -> Result<()> {
    if states.is_empty() || states.len() > 4 || states.len() != priors.len() {
        return Err(Error::Unsupported("oracle handles 1 to 4 states with one prior each".into()));
    }
    if states.iter().any(|s| s.dim() != 2) {
        return Err(Error::Unsupported("oracle handles qubit states only".into()));
    }
    check_priors(priors)?;
    Ok(())
}

/// Searches state-discrimination POVMs: each conclusion's effect is
/// `S^{-½} A_c A_c† S^{-½}` (or a rescaled operator on the common kernel
/// of the competing states in unambiguous mode).
pub fn oracle_state_povm(states: &[DensityOperator], priors: &[f64], mode: Mode, cfg: &SearchConfig) -> Result<StateOracle> {
    cfg.validate()?;
    check_states(states, priors)?;
    if let Mode::FixedFailure { p_f } = mode {
        if !(0.0..=1.0).contains(&p_f) {
            return Err(Error::Infeasible(format!("failure rate {p_f} outside [0, 1]")));
        }
    }
    let w: Vec<CMatrix> = states.iter().zip(priors).map(|(s, &p)| s.matrix().scale_re(p)).collect();
    let effects = match mode {
        Mode::FixedFailure { p_f } => fixed_failure_search(&w, p_f, cfg),
        _ => weighted_search(&w, mode, cfg),
    };
    let fail = effects.len() - 1;
    let p_s: f64 = w.iter().zip(&effects).map(|(w, e)| ev(e, w)).sum();
    let p_f: f64 = w.iter().map(|w| ev(&effects[fail], w)).sum();
    let p_e = (1.0 - p_s - p_f).max(0.0);
    let value = if mode == Mode::Unambiguous { p_f } else { p_e };
    Ok(StateOracle {
        value,
        p_s,
        p_e,
        p_f,
        povm: Povm::new(effects)?,
    })
}

/// Probe scheme searched by [`oracle_measurement_discrimination`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    Simple,
    /// Bipartite probe with an ancilla of the given dimension.
    Ancilla(usize),
}

/// Best tester found for device discrimination; `value` is `p_f` in
/// unambiguous mode and `p_e` otherwise.
#[derive(Debug, Clone)]
pub struct MeasurementOracle {
    pub value: f64,
    pub p_s: f64,
    pub p_e: f64,
    pub p_f: f64,
    /// System-first probe vector.
    pub probe: Vec<C64>,
    /// Searched angles: `[polar, azimuth]` or `[schmidt, polar, azimuth]`.
    pub angles: Vec<f64>,
    pub tester: Tester,
}

impl MeasurementOracle {
    /// Larger Schmidt coefficient `max(cos²α, sin²α)` of the bipartite probe.
    pub fn schmidt_weight(&self) -> Option<f64> {
        (self.angles.len() == 3).then(|| self.angles[0].cos().powi(2).max(self.angles[0].sin().powi(2)))
    }
}

fn conclusions_for(m: usize) -> Vec<Conclusion> {
    if m == 2 {
        Conclusion::pair()
    } else {
        Conclusion::numbered(m, true)
    }
}

/// Simple scheme: per-outcome assignment maximizing success, with the
/// failure budget spent on the outcomes cheapest to abandon.
fn simple_assignment(p: &[Vec<f64>], mode: Mode) -> Option<(f64, Vec<Vec<f64>>)> {
    let m = p.len();
    let n = p[0].len();
    let mut rows = Vec::with_capacity(n);
    let mut gains = Vec::with_capacity(n);
    let mut total = 0.0;
    for j in 0..n {
        let (mut arg, mut best) = (0, f64::NEG_INFINITY);
        for (l, row) in p.iter().enumerate() {
            if row[j] > best + 1e-15 {
                best = row[j];
                arg = l;
            }
        }
        let mass: f64 = p.iter().map(|r| r[j]).sum();
        let mut q = vec![0.0; m + 1];
        q[arg] = 1.0;
        rows.push(q);
        gains.push((best, mass));
        total += best;
    }
    match mode {
        Mode::MinError => Some((total, rows)),
        Mode::Unambiguous => None,
        Mode::FixedFailure { p_f } => {
            let mut order: Vec<usize> = (0..n).filter(|&j| gains[j].1 > 0.0).collect();
            order.sort_by(|&a, &b| (gains[a].0 / gains[a].1).total_cmp(&(gains[b].0 / gains[b].1)));
            let mut budget = p_f;
            for j in order {
                if budget <= 0.0 {
                    break;
                }
                let frac = (budget / gains[j].1).min(1.0);
                budget -= frac * gains[j].1;
                total -= frac * gains[j].0;
                let arg = rows[j].iter().position(|&x| x == 1.0).expect("deterministic row");
                rows[j][arg] = 1.0 - frac;
                rows[j][m] = frac;
            }
            (budget <= 1e-12).then_some((total, rows))
        }
    }
}

/// Conditional ancilla operators `η_l tr_sys[(M_lj ⊗ I)|Ψ⟩⟨Ψ|]` for the
/// probe `cos α|u⟩|0⟩ + sin α|u⊥⟩|1⟩`.
fn conditional_states(devices: &[Povm], priors: &[f64], alpha: f64, u: &[C64]) -> Vec<Vec<CMatrix>> {
    let basis = [u.to_vec(), qubit_perp(u)];
    let coef = [alpha.cos(), alpha.sin()];
    (0..devices[0].outcomes())
        .map(|j| {
            devices
                .iter()
                .zip(priors)
                .map(|(dev, &eta)| {
                    let m = dev.effect(j).matrix();
                    CMatrix::from_fn(2, 2, |k, kk| m.sandwich(&basis[kk], &basis[k]) * (eta * coef[k] * coef[kk]))
                })
                .collect()
        })
        .collect()
}

/// Exact minimum-error split for two weighted operators, else search.
fn inner_effects(w: &[CMatrix], mode: Mode, cfg: &SearchConfig) -> Vec<CMatrix> {
    let d = w[0].rows();
    if mode == Mode::MinError && w.len() == 2 {
        let diff = Hermitian::from_hermitian_part(&(&w[0] - &w[1]));
        let plus = hermitian_eig(&diff).projector_where(|l| l > 0.0);
        return vec![plus.clone(), &CMatrix::identity(d) - &plus, CMatrix::zeros(d, d)];
    }
    if mode == Mode::Unambiguous && w.len() == 2 && d == 2 {
        return unambiguous_pair_effects(w, cfg.tol);
    }
    let inner = SearchConfig { restarts: 2, tol: cfg.tol.max(1e-9), ..*cfg };
    weighted_search(w, mode, &inner)
}

/// Unambiguous split of two qubit operators: `E₀ = a K₁`, `E₁ = b K₀` with
/// `K_l` the kernel projector of `w_l`, scanning `a` along the largest
/// feasible `b`.
fn norm(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn unambiguous_pair_effects(w: &[CMatrix], tol: f64) -> Vec<CMatrix> {
    let kernel = |x: &CMatrix| {
        let e = hermitian_eig(&Hermitian::from_hermitian_part(x));
        let top = e.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let k = e.projector_where(|v| top == 0.0 || v.abs() <= 1e-13 * top);
        if k.trace().re.round() != 1.0 {
            return k;
        }
        let v = (0..2).map(|j| k.column(j)).max_by(|a, b| norm(a).total_cmp(&norm(b))).unwrap();
        let n = norm(&v);
        CMatrix::projector(&v.iter().map(|x| x / n).collect::<Vec<_>>())
    };
    let (k1, k0) = (kernel(&w[1]), kernel(&w[0]));
    let id = CMatrix::identity(2);
    let assemble = |a: f64, b: f64| {
        let e0 = k1.scale_re(a);
        let e1 = k0.scale_re(b);
        let fail = &(&id - &e0) - &e1;
        vec![e0, e1, fail]
    };
    let (r1, r0) = (k1.trace().re.round(), k0.trace().re.round());
    if r1 == 0.0 || r0 == 0.0 || r1 == 2.0 || r0 == 2.0 {
        let (a, b) = if r1 == 2.0 { (1.0, 0.0) } else if r0 == 2.0 { (0.0, 1.0) } else { (1.0, 1.0) };
        let (a, b) = (if r1 == 0.0 { 0.0 } else { a }, if r0 == 0.0 { 0.0 } else { b });
        return assemble(a, b);
    }
    let c = k1.matmul(&k0).trace().re.clamp(0.0, 1.0);
    let b_max = |a: f64| {
        let den = 1.0 - a + a * c;
        if den <= 0.0 { 0.0 } else { ((1.0 - a) / den).clamp(0.0, 1.0) }
    };
    let (x, y) = (ev(&k1, &w[0]), ev(&k0, &w[1]));
    let (a, _) = golden_section(|a| -(a * x + b_max(a) * y), 0.0, 1.0, tol.max(1e-12));
    let b = b_max(a);
    let used = &k1.scale_re(a) + &k0.scale_re(b);
    let top = hermitian_eig(&Hermitian::from_hermitian_part(&used)).values.iter().fold(1.0f64, |m, &v| m.max(v));
    assemble(a / top, b / top)
}

fn inner_value(w: &[CMatrix], e: &[CMatrix]) -> f64 {
    w.iter().zip(e).map(|(w, x)| ev(x, w)).sum()
}

/// Maximizes `f` on a box by a grid, then `rounds` local grids shrunk by
/// `cfg.shrink` around the best `cfg.restarts` points, then pattern search.
fn grid_refine(f: &dyn Fn(&[f64]) -> f64, axes: &[(f64, f64, usize)], step: f64, cfg: &SearchConfig) -> (Vec<f64>, f64) {
    let mut points: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut idx = vec![0usize; axes.len()];
    loop {
        let x: Vec<f64> = idx
            .iter()
            .zip(axes)
            .map(|(&i, &(lo, hi, n))| if n == 0 { lo } else { lo + (hi - lo) * i as f64 / n as f64 })
            .collect();
        let v = f(&x);
        points.push((x, v));
        let mut k = 0;
        loop {
            if k == axes.len() {
                break;
            }
            idx[k] += 1;
            if idx[k] <= axes[k].2 {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == axes.len() {
            break;
        }
    }
    points.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut best = points[0].clone();
    for (x0, v0) in points.into_iter().take(cfg.restarts) {
        let (mut x, mut v) = (x0, v0);
        let mut h = step;
        for _ in 0..cfg.rounds {
            h *= cfg.shrink;
            let mut improved = true;
            while improved {
                improved = false;
                let centre = x.clone();
                let mut offsets = vec![-2i32; axes.len()];
                loop {
                    let y: Vec<f64> = centre.iter().zip(&offsets).map(|(c, &o)| c + o as f64 * h).collect();
                    let fy = f(&y);
                    if fy > v + 1e-15 {
                        x = y;
                        v = fy;
                        improved = true;
                    }
                    let mut k = 0;
                    while k < offsets.len() {
                        offsets[k] += 1;
                        if offsets[k] <= 2 {
                            break;
                        }
                        offsets[k] = -2;
                        k += 1;
                    }
                    if k == offsets.len() {
                        break;
                    }
                }
            }
        }
        let (x, v) = compass(f, x, v, h, cfg.tol);
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

/// Searches probes (and conditional ancilla measurements) for the best
/// tester discriminating qubit devices.
pub fn oracle_measurement_discrimination(
    devices: &[Povm],
    priors: &[f64],
    scheme: Scheme,
    mode: Mode,
    cfg: &SearchConfig,
) -> Result<MeasurementOracle> {
    cfg.validate()?;
    let m = devices.len();
    if m < 2 || m > 4 || priors.len() != m {
        return Err(Error::Unsupported("oracle handles 2 to 4 devices with one prior each".into()));
    }
    if devices.iter().any(|d| d.dim() != 2 || d.outcomes() != devices[0].outcomes()) {
        return Err(Error::Unsupported("oracle handles qubit devices of equal shape".into()));
    }
    check_priors(priors)?;
    let conclusions = conclusions_for(m);
    let hyps: Vec<(&Povm, f64)> = devices.iter().zip(priors).map(|(d, &p)| (d, p)).collect();
    let (tester, probe, angles) = match scheme {
        Scheme::Simple | Scheme::Ancilla(1) => {
            if mode == Mode::Unambiguous {
                return Err(Error::Unsupported("unambiguous simple-scheme search is not continuous".into()));
            }
            let table = |polar: f64, az: f64| -> Vec<Vec<f64>> {
                let psi = qubit_ket(polar, az);
                devices
                    .iter()
                    .zip(priors)
                    .map(|(d, &eta)| d.effects().iter().map(|e| eta * e.matrix().sandwich(&psi, &psi).re).collect())
                    .collect()
            };
            let f = |x: &[f64]| simple_assignment(&table(x[0], x[1]), mode).map_or(f64::NEG_INFINITY, |r| r.0);
            let step = cfg.sphere_step_deg.to_radians();
            let np = (PI / step).round() as usize;
            let na = (2.0 * PI / step).round() as usize;
            let (x, _) = grid_refine(&f, &[(0.0, PI, np), (0.0, 2.0 * PI * (na - 1) as f64 / na as f64, na - 1)], step, cfg);
            let (_, rows) = simple_assignment(&table(x[0], x[1]), mode)
                .ok_or_else(|| Error::Infeasible("failure rate above what any probe allows".into()))?;
            let psi = qubit_ket(x[0], x[1]);
            let t = simple_tester(&DensityOperator::pure(&psi)?, &rows, conclusions)?;
            (t, psi, x)
        }
        Scheme::Ancilla(2) => {
            if matches!(mode, Mode::FixedFailure { .. }) {
                return Err(Error::Unsupported("fixed-failure ancilla search couples device outcomes".into()));
            }
            let value = |x: &[f64]| -> f64 {
                let w = conditional_states(devices, priors, x[0], &qubit_ket(x[1], x[2]));
                w.iter().map(|wj| inner_value(wj, &inner_effects(wj, mode, cfg))).sum()
            };
            let step = cfg.ancilla_step_deg.to_radians();
            let ns = (0.5 * PI / step).round().max(1.0) as usize;
            let np = (PI / step).round() as usize;
            let na = (2.0 * PI / step).round() as usize;
            let axes = [(0.0, 0.5 * PI, ns), (0.0, PI, np), (0.0, 2.0 * PI * (na - 1) as f64 / na as f64, na - 1)];
            let (x, _) = grid_refine(&value, &axes, step, cfg);
            let u = qubit_ket(x[1], x[2]);
            let perp = qubit_perp(&u);
            let probe: Vec<C64> = (0..4)
                .map(|i| {
                    let (s, a) = (i / 2, i % 2);
                    if a == 0 {
                        u[s] * x[0].cos()
                    } else {
                        perp[s] * x[0].sin()
                    }
                })
                .collect();
            let w = conditional_states(devices, priors, x[0], &u);
            let conditional = w
                .iter()
                .map(|wj| Povm::new(inner_effects(wj, mode, cfg)))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let map: Vec<Vec<usize>> = vec![(0..=m).collect(); devices[0].outcomes()];
            let t = tester_from_protocol(&probe, (2, 2), &conditional, &map, conclusions)?;
            (t, probe, x)
        }
        Scheme::Ancilla(a) => return Err(Error::Unsupported(format!("ancilla dimension {a} not searched"))),
    };
    let r = performance(&tester, &hyps)?;
    let value = if mode == Mode::Unambiguous { r.p_f } else { r.p_e };
    Ok(MeasurementOracle {
        value,
        p_s: r.p_s,
        p_e: r.p_e,
        p_f: r.p_f,
        probe,
        angles,
        tester,
    })
}

/// Minimum over pure probes of `Σ_j tr(M_j ρ) tr(N_j ρ)`.
pub fn oracle_min_sum_overlap(m: &Povm, n: &Povm, cfg: &SearchConfig) -> Result<(f64, Vec<C64>)> {
    cfg.validate()?;
    if m.dim() != 2 || n.dim() != 2 || m.outcomes() != n.outcomes() {
        return Err(Error::Unsupported("oracle handles qubit devices of equal shape".into()));
    }
    let f = |x: &[f64]| {
        let psi = qubit_ket(x[0], x[1]);
        -m.effects()
            .iter()
            .zip(n.effects())
            .map(|(a, b)| a.matrix().sandwich(&psi, &psi).re * b.matrix().sandwich(&psi, &psi).re)
            .sum::<f64>()
    };
    let step = cfg.sphere_step_deg.to_radians();
    let np = (PI / step).round() as usize;
    let na = (2.0 * PI / step).round() as usize;
    let (x, v) = grid_refine(&f, &[(0.0, PI, np), (0.0, 2.0 * PI * (na - 1) as f64 / na as f64, na - 1)], step, cfg);
    Ok((-v, qubit_ket(x[0], x[1])))
}

/// Full-space optimum for a device pair in any dimension.
#[derive(Debug, Clone)]
pub struct FullSpaceOracle {
    pub value: f64,
    pub rho: DensityOperator,
}

fn density_from(x: &[f64], d: usize) -> Option<CMatrix> {
    let g = gram(x, d);
    let t = g.trace().re;
    (t > 1e-12).then(|| g.scale_re(1.0 / t))
}

fn full_search(d: usize, f: &dyn Fn(&CMatrix) -> f64, cfg: &SearchConfig) -> Result<FullSpaceOracle> {
    let n = 2 * d * d;
    let g = |x: &[f64]| density_from(x, d).map_or(f64::NEG_INFINITY, |r| f(&r));
    let mut rng = cfg.rng();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for r in 0..cfg.restarts {
        let x0: Vec<f64> = if r == 0 {
            // maximally mixed start
            (0..n).map(|k| if k % (2 * (d + 1)) == 0 { 1.0 } else { 0.0 }).collect()
        } else {
            (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
        };
        let f0 = g(&x0);
        let (x, v) = compass(g, x0, f0, 0.5, cfg.tol);
        if best.as_ref().is_none_or(|b| v > b.1) {
            best = Some((x, v));
        }
    }
    let (x, v) = best.expect("one restart");
    let rho = DensityOperator::new(density_from(&x, d).expect("feasible").hermitian_part())?;
    Ok(FullSpaceOracle { value: v, rho })
}

fn psd_root(h: &Hermitian) -> CMatrix {
    hermitian_eig(h).map_spectrum(|l| l.max(0.0).sqrt())
}

fn check_pair(m: &Povm, n: &Povm, eta: f64) -> Result<()> {
    if m.dim() != n.dim() || m.outcomes() != n.outcomes() {
        return Err(Error::InvalidArgument("devices differ in shape".into()));
    }
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::InvalidArgument(format!("prior must lie in [0, 1], got {eta}")));
    }
    Ok(())
}

/// Minimum-error `p_e` over all testers with a purified probe: for the
/// probe's reduced state `ρ` each device outcome leaves the ancilla in
/// `η √ρ M_jᵀ √ρ`, and the best conditional measurement gains half the
/// trace norm of the weighted difference.
pub fn oracle_full_min_error(m: &Povm, n: &Povm, eta: f64, cfg: &SearchConfig) -> Result<FullSpaceOracle> {
    cfg.validate()?;
    check_pair(m, n, eta)?;
    let diffs: Vec<CMatrix> = m
        .effects()
        .iter()
        .zip(n.effects())
        .map(|(a, b)| (&a.matrix().scale_re(eta) - &b.matrix().scale_re(1.0 - eta)).transpose())
        .collect();
    let f = |rho: &CMatrix| {
        let root = psd_root(&Hermitian::from_hermitian_part(rho));
        diffs
            .iter()
            .map(|x| trace_norm_hermitian(&Hermitian::from_hermitian_part(&root.matmul(x).matmul(&root))))
            .sum::<f64>()
    };
    let best = full_search(m.dim(), &f, cfg)?;
    Ok(FullSpaceOracle {
        value: 0.5 * (1.0 - best.value),
        rho: best.rho,
    })
}

/// Minimum over probe states of the failure lower bound
/// `2√(η(1−η)) Σ_j ‖√M_jᵀ ρ √N_jᵀ‖_tr`; no unambiguous tester does better.
pub fn oracle_full_unambiguous_bound(m: &Povm, n: &Povm, eta: f64, cfg: &SearchConfig) -> Result<FullSpaceOracle> {
    cfg.validate()?;
    check_pair(m, n, eta)?;
    let roots: Vec<(CMatrix, CMatrix)> = m
        .effects()
        .iter()
        .zip(n.effects())
        .map(|(a, b)| (psd_root(&a.transpose()), psd_root(&b.transpose())))
        .collect();
    let scale = 2.0 * (eta * (1.0 - eta)).sqrt();
    let f = |rho: &CMatrix| -> f64 {
        -scale * roots.iter().map(|(a, b)| trace_norm(&a.matmul(rho).matmul(b))).sum::<f64>()
    };
    let best = full_search(m.dim(), &f, cfg)?;
    Ok(FullSpaceOracle {
        value: -best.value,
        rho: best.rho,
    })
}

/// `|ψ⟩` as a JSON-friendly list of `[re, im]` pairs.
pub fn vector_pairs(v: &[C64]) -> Vec<[f64; 2]> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::re;
    use crate::measurements::{make_projective_qubit, make_trine, trine_vectors};

    fn quick() -> SearchConfig {
        SearchConfig {
            restarts: 4,
            ..SearchConfig::default()
        }
    }

    #[test]
    fn orthogonal_states() {
        let a = DensityOperator::pure(&[re(1.0), re(0.0)]).unwrap();
        let b = DensityOperator::pure(&[re(0.0), re(1.0)]).unwrap();
        let r = oracle_state_povm(&[a, b], &[0.5, 0.5], Mode::MinError, &quick()).unwrap();
        assert!(r.p_e < 1e-6);
    }

    #[test]
    fn helstrom_reference() {
        let a = DensityOperator::pure(&[re(1.0), re(0.0)]).unwrap();
        let b = DensityOperator::pure(&[re(0.5), re(0.75f64.sqrt())]).unwrap();
        let r = oracle_state_povm(&[a.clone(), b.clone()], &[0.5, 0.5], Mode::MinError, &quick()).unwrap();
        assert!((r.p_e - 0.5 * (1.0 - 0.75f64.sqrt())).abs() < 1e-3, "{}", r.p_e);
        let u = oracle_state_povm(&[a, b], &[0.5, 0.5], Mode::Unambiguous, &quick()).unwrap();
        assert!((u.p_f - 0.5).abs() < 1e-3 && u.p_e < 1e-9, "{} {}", u.p_f, u.p_e);
    }

    #[test]
    fn trine_states() {
        let states: Vec<DensityOperator> = trine_vectors().iter().map(|v| DensityOperator::pure(v).unwrap()).collect();
        let r = oracle_state_povm(&states, &[1.0 / 3.0; 3], Mode::MinError, &quick()).unwrap();
        assert!((r.p_s - 2.0 / 3.0).abs() < 1e-3, "{}", r.p_s);
    }

    #[test]
    fn deterministic() {
        let m = make_trine(0.0, false);
        let n = make_trine(1.0, true);
        let a = oracle_min_sum_overlap(&m, &n, &quick()).unwrap();
        let b = oracle_min_sum_overlap(&m, &n, &quick()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn trine_self_overlap() {
        let m = make_trine(0.0, false);
        let (v, _) = oracle_min_sum_overlap(&m, &m, &quick()).unwrap();
        assert!(v >= 1.0 / 3.0 - 1e-9);
    }

    #[test]
    fn simple_projective_pair() {
        let m = make_projective_qubit(&[re(1.0), re(0.0)]).unwrap();
        let n = make_projective_qubit(&[re(0.5), re(0.75f64.sqrt())]).unwrap();
        let r = oracle_measurement_discrimination(&[m, n], &[0.5, 0.5], Scheme::Simple, Mode::MinError, &quick()).unwrap();
        assert!((r.p_e - 0.5 * (1.0 - 0.75f64.sqrt())).abs() < 1e-3, "{}", r.p_e);
    }
}
