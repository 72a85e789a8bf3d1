//! Hamiltonian builders over mode networks.
//!
//! Every builder works in the ħ = 2 convention, so the conventional (ħ/2)
//! prefactor of each quadratic form is exactly 1 and energies double as
//! angular frequencies under the e^{−iEt/ħ} propagator.

use crate::error::{Error, Result};
use crate::fock::{NetworkSpec, PauliAxis};
use crate::ops::{FactorKind, HamiltonianSum, OpTerm, OperatorSum};
use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

/// Tolerance for declaring a coupling matrix Hermitian.
pub const COUPLING_HERMITICITY_TOL: f64 = 1e-12;

/// Hermitian mode-coupling coefficients ω_ij.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    entries: Array2<Complex64>,
}

impl CouplingMatrix {
    pub fn new(entries: Array2<Complex64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::NotSquare {
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        let mut max_dev = 0.0f64;
        for i in 0..entries.nrows() {
            for j in 0..entries.ncols() {
                let dev = (entries[[i, j]] - entries[[j, i]].conj()).norm();
                max_dev = max_dev.max(dev);
            }
        }
        if max_dev > COUPLING_HERMITICITY_TOL {
            return Err(Error::NotHermitian {
                max_dev,
                tol: COUPLING_HERMITICITY_TOL,
            });
        }
        Ok(CouplingMatrix { entries })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        let mut entries = Array2::zeros((n, n));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::NotSquare {
                    rows: n,
                    cols: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                entries[[i, j]] = v;
            }
        }
        Self::new(entries)
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&v| Complex64::new(v, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn diagonal(omegas: &[f64]) -> Self {
        let n = omegas.len();
        let mut entries = Array2::zeros((n, n));
        for (i, &w) in omegas.iter().enumerate() {
            entries[[i, i]] = Complex64::new(w, 0.0);
        }
        CouplingMatrix { entries }
    }

    /// Seeded dense Hermitian matrix with entries of magnitude ~`scale`.
    pub fn random_hermitian(n: usize, seed: u64, scale: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut entries = Array2::zeros((n, n));
        for i in 0..n {
            entries[[i, i]] = Complex64::new(rng.gen_range(-scale..scale), 0.0);
            for j in (i + 1)..n {
                let v = Complex64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale));
                entries[[i, j]] = v;
                entries[[j, i]] = v.conj();
            }
        }
        CouplingMatrix { entries }
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.entries[[i, j]]
    }

    pub fn as_array(&self) -> &Array2<Complex64> {
        &self.entries
    }

    /// `self + δ·I`, useful for detuning one sector against another.
    pub fn shifted(&self, delta: f64) -> Self {
        let mut entries = self.entries.clone();
        for i in 0..entries.nrows() {
            entries[[i, i]] += Complex64::new(delta, 0.0);
        }
        CouplingMatrix { entries }
    }
}

fn check_sites_kind(
    spec: &NetworkSpec,
    sites: &[usize],
    want_boson: bool,
) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for &site in sites {
        let mode = spec.mode(site)?;
        if want_boson && !mode.is_boson() {
            return Err(Error::NotBosonic { site });
        }
        if !want_boson && !mode.is_fermion() {
            return Err(Error::NotFermionic { site });
        }
        if !seen.insert(site) {
            return Err(Error::DuplicateSites(sites.to_vec()));
        }
    }
    Ok(())
}

fn hopping_terms(
    sites: &[usize],
    coupling: &CouplingMatrix,
) -> Vec<OpTerm> {
    let n = sites.len();
    let mut terms = Vec::new();
    for i in 0..n {
        let w = coupling.entry(i, i);
        if w.norm() > 0.0 {
            terms.push(OpTerm::new(w, vec![(sites[i], FactorKind::Number)]));
        }
        for j in 0..n {
            if i == j {
                continue;
            }
            let w = coupling.entry(i, j);
            if w.norm() > 0.0 {
                terms.push(OpTerm::new(
                    w,
                    vec![(sites[i], FactorKind::Create), (sites[j], FactorKind::Annihilate)],
                ));
            }
        }
    }
    terms
}

/// Number-conserving quadratic form Σ_ij ω_ij a_i⁺ a_j on the given bosonic
/// sites (diagonal entries become number operators).
pub fn boson_hopping(
    spec: &NetworkSpec,
    sites: &[usize],
    coupling: &CouplingMatrix,
) -> Result<HamiltonianSum> {
    if coupling.n() != sites.len() {
        return Err(Error::DimensionMismatch {
            expected: sites.len(),
            got: coupling.n(),
        });
    }
    check_sites_kind(spec, sites, true)?;
    Ok(OperatorSum::new(hopping_terms(sites, coupling)))
}

/// Same quadratic form built from fermionic ladder operators.
pub fn fermion_hopping(
    spec: &NetworkSpec,
    sites: &[usize],
    coupling: &CouplingMatrix,
) -> Result<HamiltonianSum> {
    if coupling.n() != sites.len() {
        return Err(Error::DimensionMismatch {
            expected: sites.len(),
            got: coupling.n(),
        });
    }
    check_sites_kind(spec, sites, false)?;
    Ok(OperatorSum::new(hopping_terms(sites, coupling)))
}

/// Bosonic network Hamiltonian over an all-boson spec.
pub fn build_boson_network(
    spec: &NetworkSpec,
    coupling: &CouplingMatrix,
) -> Result<HamiltonianSum> {
    let sites: Vec<usize> = (0..spec.n_modes()).collect();
    for &site in &sites {
        if !spec.mode(site)?.is_boson() {
            return Err(Error::NotBosonic { site });
        }
    }
    boson_hopping(spec, &sites, coupling)
}

/// Fermionic network Hamiltonian over an all-fermion spec, in the hopping
/// (ladder-operator) form.
pub fn build_fermion_network_ladder(
    spec: &NetworkSpec,
    coupling: &CouplingMatrix,
) -> Result<HamiltonianSum> {
    let sites: Vec<usize> = (0..spec.n_modes()).collect();
    for &site in &sites {
        if !spec.mode(site)?.is_fermion() {
            return Err(Error::NotFermionic { site });
        }
    }
    fermion_hopping(spec, &sites, coupling)
}

fn pauli_factor(axis: PauliAxis) -> FactorKind {
    match axis {
        PauliAxis::X => FactorKind::PauliX,
        PauliAxis::Y => FactorKind::PauliY,
        PauliAxis::Z => FactorKind::PauliZ,
    }
}

/// Spin-product network Σ_ij ω_ij (σ_i/2)(σ_j/2) over fermionic sites. Each
/// link uses the Pauli axis from `link_axes` (default Z); diagonal ω_ii
/// contribute ω_ii/4 identity offsets since (σ/2)² = 1/4.
///
/// Off-diagonal weights must be real: the commuting Hermitian factor pair
/// silently cancels any imaginary part, which is flagged instead.
pub fn build_fermion_network_spin(
    spec: &NetworkSpec,
    coupling: &CouplingMatrix,
    link_axes: Option<&HashMap<(usize, usize), PauliAxis>>,
) -> Result<HamiltonianSum> {
    let sites: Vec<usize> = (0..spec.n_modes()).collect();
    if coupling.n() != sites.len() {
        return Err(Error::DimensionMismatch {
            expected: sites.len(),
            got: coupling.n(),
        });
    }
    check_sites_kind(spec, &sites, false)?;
    let mut terms = Vec::new();
    for i in 0..sites.len() {
        for j in 0..sites.len() {
            let w = coupling.entry(i, j);
            if w.norm() == 0.0 {
                continue;
            }
            if w.im.abs() > COUPLING_HERMITICITY_TOL {
                return Err(Error::ComplexSpinWeight {
                    detail: format!("omega[{i}][{j}] = {w}"),
                });
            }
            if i == j {
                terms.push(OpTerm::identity(w * 0.25));
            } else {
                let axis = link_axes
                    .and_then(|m| m.get(&(i, j)).or_else(|| m.get(&(j, i))))
                    .copied()
                    .unwrap_or(PauliAxis::Z);
                let k = pauli_factor(axis);
                terms.push(OpTerm::new(w * 0.25, vec![(sites[i], k), (sites[j], k)]));
            }
        }
    }
    Ok(OperatorSum::new(terms))
}

/// System-environment dephasing links: Σ w_se (σ_s/2)(σ_e/2) along one Pauli
/// axis. `weights` is flattened system-major: w[s * env.len() + e].
pub fn build_dephasing_interaction(
    spec: &NetworkSpec,
    system_sites: &[usize],
    env_sites: &[usize],
    weights: &[f64],
    axis: PauliAxis,
) -> Result<HamiltonianSum> {
    check_sites_kind(spec, system_sites, false)?;
    check_sites_kind(spec, env_sites, false)?;
    let mut all: Vec<usize> = system_sites.to_vec();
    all.extend_from_slice(env_sites);
    let unique: std::collections::HashSet<_> = all.iter().collect();
    if unique.len() != all.len() {
        return Err(Error::DuplicateSites(all));
    }
    if weights.len() != system_sites.len() * env_sites.len() {
        return Err(Error::DimensionMismatch {
            expected: system_sites.len() * env_sites.len(),
            got: weights.len(),
        });
    }
    let k = pauli_factor(axis);
    let mut terms = Vec::new();
    for (si, &s) in system_sites.iter().enumerate() {
        for (ei, &e) in env_sites.iter().enumerate() {
            let w = weights[si * env_sites.len() + ei];
            if w != 0.0 {
                terms.push(OpTerm::new(
                    Complex64::new(w * 0.25, 0.0),
                    vec![(s, k), (e, k)],
                ));
            }
        }
    }
    Ok(OperatorSum::new(terms))
}

/// Boson-fermion exchange terms Σ (ω b_i⁺ f_j + ω* b_i f_j⁺).
pub fn build_mixed_interaction(
    spec: &NetworkSpec,
    pairs: &[(usize, usize, Complex64)],
) -> Result<HamiltonianSum> {
    let mut terms = Vec::new();
    for &(b, f, w) in pairs {
        if !spec.mode(b)?.is_boson() {
            return Err(Error::NotBosonic { site: b });
        }
        if !spec.mode(f)?.is_fermion() {
            return Err(Error::NotFermionic { site: f });
        }
        terms.push(OpTerm::new(
            w,
            vec![(b, FactorKind::Create), (f, FactorKind::Annihilate)],
        ));
        // The conjugate written in literal dagger order (the two factors act
        // on different sites, one bosonic, so the order carries no sign) —
        // the symbolic self-adjointness check then sees the pair directly.
        terms.push(OpTerm::new(
            w.conj(),
            vec![(f, FactorKind::Create), (b, FactorKind::Annihilate)],
        ));
    }
    Ok(OperatorSum::new(terms))
}

/// Single bosonic mode ω(n̂ + 1) with the optional +ω ground offset.
pub fn single_boson_mode(site: usize, omega: f64, include_ground_offset: bool) -> HamiltonianSum {
    let mut terms = vec![OpTerm::new(
        Complex64::new(omega, 0.0),
        vec![(site, FactorKind::Number)],
    )];
    if include_ground_offset {
        terms.push(OpTerm::identity(Complex64::new(omega, 0.0)));
    }
    OperatorSum::new(terms)
}

/// Single fermionic mode ω(n̂ − 1) with the optional −ω ground offset.
pub fn single_fermion_mode(site: usize, omega: f64, include_ground_offset: bool) -> HamiltonianSum {
    let mut terms = vec![OpTerm::new(
        Complex64::new(omega, 0.0),
        vec![(site, FactorKind::Number)],
    )];
    if include_ground_offset {
        terms.push(OpTerm::identity(Complex64::new(-omega, 0.0)));
    }
    OperatorSum::new(terms)
}

/// Σ n̂_i over every mode.
pub fn number_total(spec: &NetworkSpec) -> HamiltonianSum {
    OperatorSum::new(
        (0..spec.n_modes())
            .map(|site| OpTerm::new(Complex64::new(1.0, 0.0), vec![(site, FactorKind::Number)]))
            .collect(),
    )
}
