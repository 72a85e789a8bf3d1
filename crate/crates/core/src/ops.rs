//! Symbolic second-quantized operator expressions and their dense
//! materialization.
//!
//! An expression is a weighted sum of ordered products of site-local factors.
//! Every factor maps a basis ket to at most one basis ket, so columns of the
//! dense matrix are assembled by walking each product right-to-left over the
//! basis. Products formed symbolically therefore materialize to exact matrix
//! products on the truncated space.

use crate::error::{Error, Result};
use crate::fock::{
    ladder_on_rank, pauli_on_rank, FermionRepresentation, LadderKind, NetworkSpec, PauliAxis,
    StateVector,
};
use ndarray::Array2;
use num_complex::Complex64;
use std::collections::BTreeMap;

/// One site-local factor inside a product.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FactorKind {
    Create,
    Annihilate,
    /// Occupation-number operator; kept primitive so n acts as an exact
    /// integer instead of a rounded √n·√n.
    Number,
    PauliX,
    PauliY,
    PauliZ,
}

impl FactorKind {
    fn dagger(self) -> FactorKind {
        match self {
            FactorKind::Create => FactorKind::Annihilate,
            FactorKind::Annihilate => FactorKind::Create,
            other => other,
        }
    }

    fn is_pauli(self) -> bool {
        matches!(
            self,
            FactorKind::PauliX | FactorKind::PauliY | FactorKind::PauliZ
        )
    }
}

/// A scalar-weighted ordered product of factors. `factors` is written in
/// operator order: the last entry acts first on a ket.
#[derive(Debug, Clone, PartialEq)]
pub struct OpTerm {
    pub weight: Complex64,
    pub factors: Vec<(usize, FactorKind)>,
}

impl OpTerm {
    pub fn new(weight: Complex64, factors: Vec<(usize, FactorKind)>) -> Self {
        OpTerm { weight, factors }
    }

    pub fn identity(weight: Complex64) -> Self {
        OpTerm {
            weight,
            factors: Vec::new(),
        }
    }

    fn dagger(&self) -> OpTerm {
        OpTerm {
            weight: self.weight.conj(),
            factors: self
                .factors
                .iter()
                .rev()
                .map(|&(site, kind)| (site, kind.dagger()))
                .collect(),
        }
    }

    /// Action on a single basis ket: `None` means the ket is annihilated.
    /// Bosonic √n factors are collected as one integer radicand and rooted
    /// once at the end, so ladder compositions whose matrix elements are
    /// whole numbers come out exact.
    pub(crate) fn apply_to_rank(
        &self,
        spec: &NetworkSpec,
        rank: usize,
        rep: FermionRepresentation,
    ) -> Option<(usize, Complex64)> {
        let mut rank = rank;
        let mut amp = self.weight;
        let mut radicand = 1.0f64;
        for &(site, kind) in self.factors.iter().rev() {
            match kind {
                FactorKind::Create => {
                    let (next, sign, rad) =
                        ladder_on_rank(spec, rank, site, LadderKind::Create, rep)?;
                    rank = next;
                    amp *= sign;
                    radicand *= rad as f64;
                }
                FactorKind::Annihilate => {
                    let (next, sign, rad) =
                        ladder_on_rank(spec, rank, site, LadderKind::Annihilate, rep)?;
                    rank = next;
                    amp *= sign;
                    radicand *= rad as f64;
                }
                FactorKind::Number => {
                    let occ = spec.occupation_at(rank, site);
                    if occ == 0 {
                        return None;
                    }
                    amp *= occ as f64;
                }
                FactorKind::PauliX | FactorKind::PauliY | FactorKind::PauliZ => {
                    let axis = match kind {
                        FactorKind::PauliX => PauliAxis::X,
                        FactorKind::PauliY => PauliAxis::Y,
                        _ => PauliAxis::Z,
                    };
                    let (next, factor) = pauli_on_rank(spec, rank, site, axis);
                    rank = next;
                    amp *= factor;
                }
            }
        }
        if radicand != 1.0 {
            amp *= radicand.sqrt();
        }
        Some((rank, amp))
    }
}

/// A weighted sum of factor products; the working representation for every
/// Hamiltonian and supercharge in the library.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OperatorSum {
    terms: Vec<OpTerm>,
}

/// Role alias used by the Hamiltonian builders.
pub type HamiltonianSum = OperatorSum;

impl OperatorSum {
    pub fn new(terms: Vec<OpTerm>) -> Self {
        OperatorSum { terms }
    }

    pub fn zero() -> Self {
        OperatorSum { terms: Vec::new() }
    }

    pub fn identity(weight: Complex64) -> Self {
        OperatorSum {
            terms: vec![OpTerm::identity(weight)],
        }
    }

    pub fn single(site: usize, kind: FactorKind) -> Self {
        OperatorSum {
            terms: vec![OpTerm::new(Complex64::new(1.0, 0.0), vec![(site, kind)])],
        }
    }

    pub fn terms(&self) -> &[OpTerm] {
        &self.terms
    }

    pub fn push(&mut self, term: OpTerm) {
        self.terms.push(term);
    }

    pub fn plus(&self, other: &OperatorSum) -> OperatorSum {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        OperatorSum { terms }
    }

    pub fn scaled(&self, c: Complex64) -> OperatorSum {
        OperatorSum {
            terms: self
                .terms
                .iter()
                .map(|t| OpTerm::new(t.weight * c, t.factors.clone()))
                .collect(),
        }
    }

    /// Operator product `self · other` (other acts first), formed term by
    /// term; factor sequences concatenate so ordering is preserved exactly.
    pub fn product(&self, other: &OperatorSum) -> OperatorSum {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut factors = a.factors.clone();
                factors.extend(b.factors.iter().copied());
                terms.push(OpTerm::new(a.weight * b.weight, factors));
            }
        }
        OperatorSum { terms }
    }

    pub fn dagger(&self) -> OperatorSum {
        OperatorSum {
            terms: self.terms.iter().map(|t| t.dagger()).collect(),
        }
    }

    /// Collect weights by factor sequence, after normalizing each sequence by
    /// the value-preserving reorderings of [`normalized_factors`].
    fn canonical(&self) -> BTreeMap<Vec<(usize, FactorKind)>, Complex64> {
        let mut map: BTreeMap<Vec<(usize, FactorKind)>, Complex64> = BTreeMap::new();
        for t in &self.terms {
            *map.entry(normalized_factors(&t.factors))
                .or_insert(Complex64::new(0.0, 0.0)) += t.weight;
        }
        map.retain(|_, w| w.norm() > 0.0);
        map
    }

    /// Whether the term list is closed under Hermitian conjugation, i.e. the
    /// expression is self-adjoint already at the symbolic level.
    pub fn is_formally_self_adjoint(&self, tol: f64) -> bool {
        let a = self.canonical();
        let b = self.dagger().canonical();
        let keys: std::collections::BTreeSet<_> = a.keys().chain(b.keys()).cloned().collect();
        keys.into_iter().all(|k| {
            let wa = a.get(&k).copied().unwrap_or(Complex64::new(0.0, 0.0));
            let wb = b.get(&k).copied().unwrap_or(Complex64::new(0.0, 0.0));
            (wa - wb).norm() <= tol
        })
    }

    /// Check every factor against the network layout.
    pub fn validate(&self, spec: &NetworkSpec) -> Result<()> {
        for term in &self.terms {
            for &(site, kind) in &term.factors {
                let mode = spec.mode(site)?;
                if kind.is_pauli() && !mode.is_fermion() {
                    return Err(Error::NotFermionic { site });
                }
            }
        }
        Ok(())
    }

    /// Dense matrix in the occupation basis, column by column.
    pub fn matrix(&self, spec: &NetworkSpec, rep: FermionRepresentation) -> Result<Array2<Complex64>> {
        self.validate(spec)?;
        let dim = spec.total_dim();
        let mut m = Array2::zeros((dim, dim));
        for col in 0..dim {
            for term in &self.terms {
                if let Some((row, amp)) = term.apply_to_rank(spec, col, rep) {
                    m[[row, col]] += amp;
                }
            }
        }
        Ok(m)
    }

    /// Apply the expression to a state without materializing the matrix.
    pub fn apply(&self, state: &StateVector, rep: FermionRepresentation) -> Result<StateVector> {
        let spec = state.spec();
        self.validate(spec)?;
        let mut out = StateVector::zero(spec.clone());
        for (rank, amp) in state.amplitudes().iter().enumerate() {
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            for term in &self.terms {
                if let Some((row, factor)) = term.apply_to_rank(spec, rank, rep) {
                    out.amplitudes_mut()[row] += amp * factor;
                }
            }
        }
        Ok(out)
    }
}

/// Whether two adjacent factors on *different* sites can swap without
/// changing the term's value in either fermion representation: Number is
/// diagonal and string-free, so it commutes with anything elsewhere, and
/// Pauli factors (string-free spin operators) commute with each other across
/// sites. Ladder factors stay put — a fermionic ladder operator's parity
/// string can thread through another site's occupancy-flipping factor.
fn swap_is_value_preserving(a: FactorKind, b: FactorKind) -> bool {
    a == FactorKind::Number || b == FactorKind::Number || (a.is_pauli() && b.is_pauli())
}

/// Stable partial sort of a factor sequence by site, performing only swaps
/// that provably preserve the operator's value. Used to put terms and their
/// daggers on a common key for symbolic comparison.
fn normalized_factors(factors: &[(usize, FactorKind)]) -> Vec<(usize, FactorKind)> {
    let mut f = factors.to_vec();
    loop {
        let mut moved = false;
        for i in 1..f.len() {
            let (site_a, kind_a) = f[i - 1];
            let (site_b, kind_b) = f[i];
            if site_b < site_a && swap_is_value_preserving(kind_a, kind_b) {
                f.swap(i - 1, i);
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    f
}

/// Dense matrix of an expression (free-function form of
/// [`OperatorSum::matrix`]).
pub fn operator_matrix(
    spec: &NetworkSpec,
    expr: &OperatorSum,
    rep: FermionRepresentation,
) -> Result<Array2<Complex64>> {
    expr.matrix(spec, rep)
}

/// ⟨ψ|A|ψ⟩ for a normalized state.
pub fn expectation(
    state: &StateVector,
    expr: &OperatorSum,
    rep: FermionRepresentation,
) -> Result<Complex64> {
    if !state.is_normalized(1e-10) {
        return Err(Error::NotNormalized { norm: state.norm() });
    }
    let applied = expr.apply(state, rep)?;
    Ok(state.inner(&applied))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{singlet_state, ModeSpec, OccupationKet};
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    const ONE: Complex64 = Complex64::new(1.0, 0.0);

    fn spin_pair() -> Arc<NetworkSpec> {
        NetworkSpec::shared(vec![ModeSpec::Fermion, ModeSpec::Fermion]).unwrap()
    }

    #[test]
    fn fermion_number_matrix_is_diagonal_zero_one() {
        let spec = NetworkSpec::shared(vec![ModeSpec::Fermion]).unwrap();
        let n = OperatorSum::single(0, FactorKind::Number);
        let m = n.matrix(&spec, FermionRepresentation::SpinTensor).unwrap();
        assert_eq!(m[[0, 0]], Complex64::new(0.0, 0.0));
        assert_eq!(m[[1, 1]], ONE);
        assert_eq!(m[[0, 1]], Complex64::new(0.0, 0.0));
        // In the occupied-first column convention the same operator reads
        // diag(1, 0); the ascending order used here is the reverse.
    }

    #[test]
    fn lowering_matrix_in_ascending_basis() {
        let spec = NetworkSpec::shared(vec![ModeSpec::Fermion]).unwrap();
        let f = OperatorSum::single(0, FactorKind::Annihilate);
        let m = f.matrix(&spec, FermionRepresentation::SpinTensor).unwrap();
        assert_eq!(m[[0, 1]], ONE);
        assert_eq!(m[[1, 0]], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn number_primitive_equals_create_annihilate_product() {
        let spec = NetworkSpec::shared(vec![ModeSpec::Boson { cutoff: 3 }]).unwrap();
        let n = OperatorSum::single(0, FactorKind::Number);
        let product = OperatorSum::single(0, FactorKind::Create)
            .product(&OperatorSum::single(0, FactorKind::Annihilate));
        let a = n.matrix(&spec, FermionRepresentation::SpinTensor).unwrap();
        let b = product
            .matrix(&spec, FermionRepresentation::SpinTensor)
            .unwrap();
        for (x, y) in a.iter().zip(b.iter()) {
            assert_abs_diff_eq!((x - y).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn symbolic_product_matches_matrix_product() {
        let spec = NetworkSpec::shared(vec![
            ModeSpec::Boson { cutoff: 2 },
            ModeSpec::Fermion,
        ])
        .unwrap();
        let rep = FermionRepresentation::StringCorrected;
        let a = OperatorSum::new(vec![
            OpTerm::new(Complex64::new(0.5, 0.3), vec![(0, FactorKind::Create), (1, FactorKind::Annihilate)]),
            OpTerm::identity(Complex64::new(0.0, 1.0)),
        ]);
        let b = OperatorSum::new(vec![
            OpTerm::new(Complex64::new(1.0, -0.2), vec![(1, FactorKind::Create)]),
            OpTerm::new(Complex64::new(0.7, 0.0), vec![(0, FactorKind::Number)]),
        ]);
        let symbolic = a.product(&b).matrix(&spec, rep).unwrap();
        let dense = a.matrix(&spec, rep).unwrap().dot(&b.matrix(&spec, rep).unwrap());
        for (x, y) in symbolic.iter().zip(dense.iter()) {
            assert_abs_diff_eq!((x - y).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn dagger_matches_conjugate_transpose() {
        let spec = NetworkSpec::shared(vec![
            ModeSpec::Boson { cutoff: 2 },
            ModeSpec::Fermion,
        ])
        .unwrap();
        let rep = FermionRepresentation::StringCorrected;
        let expr = OperatorSum::new(vec![
            OpTerm::new(
                Complex64::new(0.4, 1.1),
                vec![(0, FactorKind::Create), (1, FactorKind::Annihilate)],
            ),
            OpTerm::new(Complex64::new(-0.3, 0.2), vec![(1, FactorKind::PauliY)]),
        ]);
        let m = expr.matrix(&spec, rep).unwrap();
        let md = expr.dagger().matrix(&spec, rep).unwrap();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                assert_abs_diff_eq!((md[[i, j]] - m[[j, i]].conj()).norm(), 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn self_adjointness_is_detected_symbolically() {
        let hopping = OperatorSum::new(vec![
            OpTerm::new(
                Complex64::new(0.0, 0.7),
                vec![(0, FactorKind::Create), (1, FactorKind::Annihilate)],
            ),
            OpTerm::new(
                Complex64::new(0.0, -0.7),
                vec![(1, FactorKind::Create), (0, FactorKind::Annihilate)],
            ),
        ]);
        assert!(hopping.is_formally_self_adjoint(1e-12));
        assert!(!OperatorSum::single(0, FactorKind::Create).is_formally_self_adjoint(1e-12));
    }

    #[test]
    fn singlet_z_expectation_vanishes() {
        let spec = spin_pair();
        let singlet = singlet_state(spec.clone(), 0, 1).unwrap();
        let z0 = OperatorSum::single(0, FactorKind::PauliZ);
        let v = expectation(&singlet, &z0, FermionRepresentation::SpinTensor).unwrap();
        assert_abs_diff_eq!(v.re, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn expectation_requires_normalization() {
        let spec = spin_pair();
        let unnormalized = StateVector::basis_ket(spec.clone(), &OccupationKet(vec![0, 1]))
            .unwrap()
            .scaled(Complex64::new(2.0, 0.0));
        let z0 = OperatorSum::single(0, FactorKind::PauliZ);
        assert!(expectation(&unnormalized, &z0, FermionRepresentation::SpinTensor).is_err());
    }

    #[test]
    fn pauli_factor_on_boson_site_is_rejected() {
        let spec = NetworkSpec::shared(vec![ModeSpec::Boson { cutoff: 1 }]).unwrap();
        let bad = OperatorSum::single(0, FactorKind::PauliZ);
        assert!(bad.matrix(&spec, FermionRepresentation::SpinTensor).is_err());
    }

    #[test]
    fn out_of_range_site_is_rejected() {
        let spec = spin_pair();
        let bad = OperatorSum::single(5, FactorKind::Number);
        assert!(bad.matrix(&spec, FermionRepresentation::SpinTensor).is_err());
    }
}
