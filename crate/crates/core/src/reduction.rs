//! Removal of the subspace on which two measurements coincide, and the
//! filter special case.

use serde::Serialize;

use crate::linalg::{self, columns_to_matrix, eigenspace_projector, inner, range_basis, subspace_intersection, CMatrix, Hermitian, C64};
use crate::measurements::{Povm, ProjectiveQubitMeasurement};
use crate::perfect::PerfectWitness;
use crate::testers::{Conclusion, Tester};
use crate::{Error, Result};

const PARALLEL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ReductionResult {
    pub q_projectors: Vec<CMatrix>,
    pub p_projector: CMatrix,
    pub reduced_dim: usize,
    /// `d × reduced_dim` isometry onto `range(I − P)`; `None` when empty.
    pub embedding: Option<CMatrix>,
    /// `None` when `P = I`: every test performs as chance.
    pub reduced_pair: Option<(Povm, Povm)>,
}

impl ReductionResult {
    pub fn identical_on_support(&self) -> bool {
        self.reduced_dim == 0
    }

    pub fn is_identity(&self) -> bool {
        self.reduced_dim == self.p_projector.rows()
    }
}

/// Serializable summary for reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReductionSummary {
    pub dim: usize,
    pub reduced_dim: usize,
    pub q_ranks: Vec<usize>,
}

impl From<&ReductionResult> for ReductionSummary {
    fn from(r: &ReductionResult) -> Self {
        ReductionSummary {
            dim: r.p_projector.rows(),
            reduced_dim: r.reduced_dim,
            q_ranks: r.q_projectors.iter().map(linalg::projector_rank).collect(),
        }
    }
}

fn compress(e: &Hermitian, v: &CMatrix) -> CMatrix {
    v.adjoint().matmul(e.matrix()).matmul(v).hermitian_part()
}

/// `Q_j` is the common unit eigenspace of `M_j` and `N_j`; the pair is
/// compressed onto `range(I − Σ_j Q_j)`.
pub fn reduce_pair(m: &Povm, n: &Povm) -> Result<ReductionResult> {
    if m.dim() != n.dim() || m.outcomes() != n.outcomes() {
        return Err(Error::InvalidArgument("measurements differ in shape".into()));
    }
    let d = m.dim();
    let mut q_projectors = Vec::with_capacity(m.outcomes());
    let mut p = CMatrix::zeros(d, d);
    for j in 0..m.outcomes() {
        let q = subspace_intersection(
            &eigenspace_projector(m.effect(j), 1.0, linalg::RANK_TOL),
            &eigenspace_projector(n.effect(j), 1.0, linalg::RANK_TOL),
        )?;
        p = &p + &q;
        q_projectors.push(q);
    }
    let complement = &CMatrix::identity(d) - &p;
    let basis = range_basis(&complement);
    let reduced_dim = basis.len();
    let (embedding, reduced_pair) = if reduced_dim == 0 {
        (None, None)
    } else {
        let v = columns_to_matrix(d, &basis);
        let shrink = |x: &Povm| Povm::new(x.effects().iter().map(|e| compress(e, &v)).collect());
        let pair = (shrink(m)?, shrink(n)?);
        (Some(v), Some(pair))
    };
    Ok(ReductionResult {
        q_projectors,
        p_projector: p,
        reduced_dim,
        embedding,
        reduced_pair,
    })
}

/// Same-outcome filters `{|φ⟩⟨φ|, I − |φ⟩⟨φ|}` and `{|ψ⟩⟨ψ|, I − |ψ⟩⟨ψ|}`.
pub fn filter_pair(phi: &[C64], psi: &[C64]) -> Result<(Povm, Povm)> {
    let f = |v: &[C64]| -> Result<Povm> {
        let p = CMatrix::projector(&linalg::normalize(v)?);
        Ok(Povm::new(vec![p.clone(), &CMatrix::identity(v.len()) - &p])?)
    };
    Ok((f(phi)?, f(psi)?))
}

/// Opposite-outcome filters: the rank-one effect of `N` is its second one.
pub fn opposite_filter_pair(phi: &[C64], psi: &[C64]) -> Result<(Povm, Povm)> {
    let (m, n) = filter_pair(phi, psi)?;
    let swapped = Povm::new(vec![n.effect(1).matrix().clone(), n.effect(0).matrix().clone()])?;
    Ok((m, swapped))
}

/// Filter pair compressed to `span{φ, ψ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterReduction {
    pub m: ProjectiveQubitMeasurement,
    pub n: ProjectiveQubitMeasurement,
    /// `d × 2` isometry.
    pub embedding: CMatrix,
    pub overlap: f64,
}

fn check_filter_inputs(phi: &[C64], psi: &[C64], d: usize) -> Result<(Vec<C64>, Vec<C64>)> {
    if d < 2 || phi.len() != d || psi.len() != d {
        return Err(Error::InvalidArgument(format!("filters need two vectors of dimension d = {d} ≥ 2")));
    }
    Ok((linalg::normalize(phi)?, linalg::normalize(psi)?))
}

/// Gram–Schmidt on `(φ, ψ)`; in `d = 2` the embedding is the identity.
pub fn reduce_filters(phi: &[C64], psi: &[C64], d: usize) -> Result<FilterReduction> {
    let (phi, psi) = check_filter_inputs(phi, psi, d)?;
    let overlap = inner(&phi, &psi).norm();
    if overlap > 1.0 - PARALLEL_TOL {
        return Err(Error::InvalidArgument("parallel filters describe identical devices".into()));
    }
    let embedding = if d == 2 {
        CMatrix::identity(2)
    } else {
        let g = inner(&phi, &psi);
        let rest: Vec<C64> = psi.iter().zip(&phi).map(|(b, a)| b - g * a).collect();
        columns_to_matrix(d, &[phi.clone(), linalg::normalize(&rest)?])
    };
    let back = embedding.adjoint();
    let m = ProjectiveQubitMeasurement::new(&linalg::normalize(&back.mul_vec(&phi))?)?;
    let n = ProjectiveQubitMeasurement::new(&linalg::normalize(&back.mul_vec(&psi))?)?;
    Ok(FilterReduction {
        m,
        n,
        embedding,
        overlap,
    })
}

/// A probe orthogonal to `φ` and `ψ` separates opposite filters: outcome 2
/// certifies `M`, outcome 1 certifies `N`.
pub fn opposite_filters_witness(phi: &[C64], psi: &[C64], d: usize) -> Result<Option<PerfectWitness>> {
    let (phi, psi) = check_filter_inputs(phi, psi, d)?;
    let span = &CMatrix::projector(&phi) + &CMatrix::projector(&psi);
    let support = linalg::support_projector(&Hermitian::from_hermitian_part(&span));
    let outside = &CMatrix::identity(d) - &support;
    Ok(range_basis(&outside).into_iter().next().map(|chi| PerfectWitness {
        probe: chi,
        certainty_outcome: 1,
        identified: vec![Conclusion::new("N"), Conclusion::new("M")],
    }))
}

/// `H_j^(c) ↦ V H_j^(c) V†` for an isometry `V`.
pub fn embed_tester(t: &Tester, v: &CMatrix) -> Result<Tester> {
    if v.cols() != t.d() {
        return Err(Error::InvalidArgument(format!(
            "embedding has {} columns but tester acts on dimension {}",
            v.cols(),
            t.d()
        )));
    }
    let va = v.adjoint();
    Ok(t.map_blocks(|_, _, h| v.matmul(h.matrix()).matmul(&va).hermitian_part())?)
}

/// Lifts a tester on the reduced space, normalization supported on `I − P`.
pub fn lift_tester(t_reduced: &Tester, r: &ReductionResult) -> Result<Tester> {
    let v = r
        .embedding
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("nothing to lift: the devices coincide".into()))?;
    embed_tester(t_reduced, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, re};
    use crate::measurements::{bloch_ket, make_projective_qubit, make_trine, DensityOperator};
    use crate::testers::{conditional_table, deterministic_assignment, simple_tester};
    use proptest::prelude::*;

    fn basis(d: usize, k: usize) -> Vec<C64> {
        (0..d).map(|i| re(if i == k { 1.0 } else { 0.0 })).collect()
    }

    #[test]
    fn identical_projective_pair_reduces_to_nothing() {
        let m = make_projective_qubit(&bloch_ket(0.3, 0.4)).unwrap();
        let r = reduce_pair(&m, &m).unwrap();
        assert!(r.identical_on_support());
        assert!(r.p_projector.approx_eq(&CMatrix::identity(2), 1e-9));
        assert!(r.reduced_pair.is_none());
    }

    #[test]
    fn distinct_projective_pair_is_irreducible() {
        let m = make_projective_qubit(&bloch_ket(0.3, 0.4)).unwrap();
        let n = make_projective_qubit(&bloch_ket(0.6, 0.1)).unwrap();
        let r = reduce_pair(&m, &n).unwrap();
        assert!(r.is_identity());
        assert!(r.q_projectors.iter().all(|q| q.max_abs() < 1e-12));
        assert!(r.embedding.as_ref().unwrap().approx_eq(&CMatrix::identity(2), 0.0));
    }

    #[test]
    fn filters_in_five_dimensions_reduce_to_a_qubit() {
        let phi = vec![re(1.0), re(0.0), re(0.0), re(0.0), re(0.0)];
        let psi = vec![re(0.5), c(0.0, 0.5), re(0.5), re(0.0), re(0.5)];
        let (m, n) = filter_pair(&phi, &psi).unwrap();
        let r = reduce_pair(&m, &n).unwrap();
        assert_eq!(r.reduced_dim, 2);
        assert_eq!(linalg::projector_rank(&r.q_projectors[1]), 3);
        for (j, q) in r.q_projectors.iter().enumerate() {
            assert!(m.effect(j).sub(&Hermitian::from_hermitian_part(q)).min_eigenvalue() > -1e-8);
            assert!(n.effect(j).sub(&Hermitian::from_hermitian_part(q)).min_eigenvalue() > -1e-8);
        }
        let (rm, rn) = r.reduced_pair.clone().unwrap();
        let again = reduce_pair(&rm, &rn).unwrap();
        assert!(again.is_identity());
        // compressed effects are (I−P)M_j(I−P) seen through the embedding
        let v = r.embedding.as_ref().unwrap();
        let back = v.matmul(rm.effect(1).matrix()).matmul(&v.adjoint());
        let comp = &CMatrix::identity(5) - &r.p_projector;
        assert!(back.approx_eq(&comp.matmul(m.effect(1).matrix()).matmul(&comp), 1e-9));
    }

    #[test]
    fn filter_reduction_preserves_overlap() {
        let phi = basis(4, 0);
        let psi = vec![re(0.5), re(0.0), re(0.75f64.sqrt()), re(0.0)];
        let f = reduce_filters(&phi, &psi, 4).unwrap();
        assert!((f.overlap - 0.5).abs() < 1e-15);
        assert!((inner(f.m.state(), f.n.state()).norm() - 0.5).abs() < 1e-12);
        let ortho = reduce_filters(&basis(2, 0), &basis(2, 1), 2).unwrap();
        assert!(ortho.embedding.approx_eq(&CMatrix::identity(2), 0.0));
        assert!(inner(ortho.m.state(), ortho.n.state()).norm() < 1e-15);
        assert!(reduce_filters(&phi, &phi, 4).is_err());
    }

    #[test]
    fn opposite_filters() {
        let phi = bloch_ket(0.2, 0.3);
        let psi = bloch_ket(0.7, 0.9);
        assert!(opposite_filters_witness(&phi, &psi, 2).unwrap().is_none());
        let lift = |v: &[C64]| vec![v[0], v[1], re(0.0)];
        for (a, b) in [(lift(&phi), lift(&psi)), (lift(&phi), lift(&phi))] {
            let w = opposite_filters_witness(&a, &b, 3).unwrap().expect("witness in d = 3");
            let (m, n) = opposite_filter_pair(&a, &b).unwrap();
            let rho = DensityOperator::pure(&w.probe).unwrap();
            let pm = crate::measurements::apply(&m, &rho).unwrap();
            let pn = crate::measurements::apply(&n, &rho).unwrap();
            assert!(pm[0].abs() < 1e-12 && (pm[1] - 1.0).abs() < 1e-12);
            assert!((pn[0] - 1.0).abs() < 1e-12 && pn[1].abs() < 1e-12);
            assert!(w.verify(&m, &n).unwrap());
        }
    }

    #[test]
    fn identity_lift_keeps_tester() {
        let m = make_trine(0.0, false);
        let n = make_trine(1.0, true);
        let r = reduce_pair(&m, &n).unwrap();
        let t = simple_tester(&DensityOperator::pure(&bloch_ket(0.3, 0.3)).unwrap(), &deterministic_assignment(&[0, 1, 2], 3), Conclusion::pair()).unwrap();
        assert_eq!(lift_tester(&t, &r).unwrap(), t);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn lifting_preserves_conditionals(seed in proptest::collection::vec(-1.0f64..1.0, 16), d in 3usize..6, u in 0.0f64..1.0, v in 0.0f64..1.0) {
            let mk = |off: usize| -> Vec<C64> { (0..d).map(|k| c(seed[off + k], seed[off + 5 + k])).collect() };
            let (phi, psi) = (mk(0), mk(3));
            prop_assume!(linalg::norm(&phi) > 0.1 && linalg::norm(&psi) > 0.1);
            let (m, n) = filter_pair(&phi, &psi).unwrap();
            let r = reduce_pair(&m, &n).unwrap();
            prop_assert_eq!(r.reduced_dim, 2);
            for a in 0..r.q_projectors.len() {
                for b in 0..r.q_projectors.len() {
                    let prod = r.q_projectors[a].matmul(&r.q_projectors[b]);
                    let expect = if a == b { r.q_projectors[a].clone() } else { CMatrix::zeros(d, d) };
                    prop_assert!(prod.approx_eq(&expect, 1e-9));
                }
            }
            let (rm, rn) = r.reduced_pair.clone().unwrap();
            let t = simple_tester(&DensityOperator::pure(&bloch_ket(u, v)).unwrap(), &deterministic_assignment(&[0, 1], 3), Conclusion::pair()).unwrap();
            let lifted = lift_tester(&t, &r).unwrap();
            for (full, red) in [(&m, &rm), (&n, &rn)] {
                let a = conditional_table(&lifted, full).unwrap();
                let b = conditional_table(&t, red).unwrap();
                for k in 0..3 {
                    prop_assert!((a[k] - b[k]).abs() < 1e-10);
                }
            }
        }
    }
}
