//! Supersymmetric oscillator pairs.
//!
//! A network of N boson-fermion pairs carries a family of supercharges
//! Q_n = Σ_i (ω_i b_i⁺ f_{i+n} + ω_i* b_i f_{i+n}⁺) (site arithmetic mod N).
//! Each Q_n is self-adjoint by construction, its square is a Hamiltonian with
//! an exactly zero ground-state energy, and for n = 0 with genuine fermionic
//! statistics the square collapses to the free Hamiltonian
//! Σ_i |ω_i|² (n̂_B,i + n̂_F,i) on the occupation-≤1 subspace.
//!
//! The two-component entangled states (|1_B 0_F⟩ ± |0_B 1_F⟩)/√2 over a pair
//! are eigenstates of Q with eigenvalues ±1, so ideal evolution moves them
//! only by a common phase — the decoherence-protected qubit this crate is
//! named for. [`susy_qubit_evolution`] develops that qubit in time on quasi
//! modes of independently coupled boson and fermion networks and watches the
//! relative phase and coherence survive (or drift, when the sector spectra
//! are detuned).

use crate::error::{Error, Result};
use crate::evolution::{dense_guard, propagate_quasi, TimeGrid};
use crate::fock::{
    FermionRepresentation, ModeSpec, NetworkSpec, OccupationKet, StateVector,
};
use crate::hamiltonians::{single_boson_mode, single_fermion_mode, CouplingMatrix};
use crate::metrics::{
    coherence, partial_trace_state, relative_phase_from_density, CoherencePair,
};
use crate::ops::{FactorKind, HamiltonianSum, OpTerm, OperatorSum};
use crate::quasiparticle::{
    block_diagonalize, transform_state_to_spec, BlockQuasiBasis, TransformBasis,
    TransformDirection, TransformOptions,
};
use ndarray::Array1;
use num_complex::Complex64;
use std::sync::Arc;

/// Layout of a supersymmetric pair network: N boson modes on sites 0..N
/// followed by N fermion modes on sites N..2N.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SusyNetworkSpec {
    pub n_pairs: usize,
    /// Bosonic occupation cutoff. The default of 2 leaves one level of
    /// headroom above the occupation-≤1 subspace, so squared supercharges
    /// acting there never touch the truncation boundary.
    pub boson_cutoff: u32,
    /// Default pairing shift: supercharge terms couple b_i to f_{i+offset}.
    pub pairing_offset: usize,
}

impl SusyNetworkSpec {
    pub fn new(n_pairs: usize) -> Result<Self> {
        if n_pairs == 0 {
            return Err(Error::EmptyNetwork);
        }
        Ok(SusyNetworkSpec {
            n_pairs,
            boson_cutoff: 2,
            pairing_offset: 0,
        })
    }

    pub fn with_boson_cutoff(mut self, cutoff: u32) -> Result<Self> {
        if cutoff == 0 {
            return Err(Error::ZeroCutoff);
        }
        self.boson_cutoff = cutoff;
        Ok(self)
    }

    pub fn with_pairing_offset(mut self, offset: usize) -> Self {
        self.pairing_offset = offset % self.n_pairs;
        self
    }

    /// Global site index of pair `i`'s boson.
    pub fn boson_site(&self, pair: usize) -> usize {
        pair
    }

    /// Global site index of pair `i`'s fermion.
    pub fn fermion_site(&self, pair: usize) -> usize {
        self.n_pairs + pair
    }

    /// Materialize the mode layout.
    pub fn network(&self) -> Result<Arc<NetworkSpec>> {
        let mut modes = vec![
            ModeSpec::Boson {
                cutoff: self.boson_cutoff,
            };
            self.n_pairs
        ];
        modes.extend(std::iter::repeat(ModeSpec::Fermion).take(self.n_pairs));
        NetworkSpec::shared(modes)
    }
}

/// Sign of the protected superposition (|1_B 0_F⟩ ± |0_B 1_F⟩)/√2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QubitSign {
    Plus,
    Minus,
}

impl QubitSign {
    pub fn factor(self) -> f64 {
        match self {
            QubitSign::Plus => 1.0,
            QubitSign::Minus => -1.0,
        }
    }
}

/// A decoherence-protected qubit living on one boson site and one fermion
/// site of a pair network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SusyQubit {
    pub sign: QubitSign,
    pub boson_site: usize,
    pub fermion_site: usize,
}

impl SusyQubit {
    /// Check the two sites exist and have the right kinds.
    pub fn validate(&self, network: &NetworkSpec) -> Result<()> {
        if !network.mode(self.boson_site)?.is_boson() {
            return Err(Error::NotBosonic {
                site: self.boson_site,
            });
        }
        if !network.mode(self.fermion_site)?.is_fermion() {
            return Err(Error::NotFermionic {
                site: self.fermion_site,
            });
        }
        Ok(())
    }
}

/// The supercharge Q_n = Σ_i (ω_i b_i⁺ f_{i+n} + ω_i* b_i f_{i+n}⁺), with the
/// fermion index taken mod N. Formally self-adjoint for any weights; the
/// fermion representation is chosen later, when the operator is materialized
/// or applied.
pub fn build_supercharge(
    spec: &SusyNetworkSpec,
    offset: usize,
    weights: &[Complex64],
) -> Result<HamiltonianSum> {
    let n = spec.n_pairs;
    if weights.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: weights.len(),
        });
    }
    let mut terms = Vec::with_capacity(2 * n);
    for i in 0..n {
        let b = spec.boson_site(i);
        let f = spec.fermion_site((i + offset) % n);
        terms.push(OpTerm::new(
            weights[i],
            vec![(b, FactorKind::Create), (f, FactorKind::Annihilate)],
        ));
        // Conjugate term in literal dagger order: b and f act on different
        // sites (one bosonic), so the swap carries no sign, and the symbolic
        // self-adjointness check recognizes the pair.
        terms.push(OpTerm::new(
            weights[i].conj(),
            vec![(f, FactorKind::Create), (b, FactorKind::Annihilate)],
        ));
    }
    Ok(OperatorSum::new(terms))
}

/// H = Q², the natural square of a self-adjoint supercharge. Its ground-state
/// (vacuum) energy is exactly zero because every term of Q annihilates the
/// vacuum from one side.
pub fn susy_hamiltonian(q: &HamiltonianSum) -> HamiltonianSum {
    q.product(q)
}

/// Free pair Hamiltonian Σ_i ω_i [(n̂_B,i + 1) + (n̂_F,i − 1)]: with ground
/// offsets on, the bosonic +ω_i and fermionic −ω_i offsets cancel pairwise
/// and the vacuum energy is exactly zero.
pub fn susy_pair_hamiltonian(
    spec: &SusyNetworkSpec,
    omegas: &[f64],
    include_ground_offset: bool,
) -> Result<HamiltonianSum> {
    if omegas.len() != spec.n_pairs {
        return Err(Error::DimensionMismatch {
            expected: spec.n_pairs,
            got: omegas.len(),
        });
    }
    let mut h = OperatorSum::zero();
    for (i, &w) in omegas.iter().enumerate() {
        h = h
            .plus(&single_boson_mode(
                spec.boson_site(i),
                w,
                include_ground_offset,
            ))
            .plus(&single_fermion_mode(
                spec.fermion_site(i),
                w,
                include_ground_offset,
            ));
    }
    Ok(h)
}

fn single_site_ket(network: &NetworkSpec, site: usize) -> OccupationKet {
    let mut occ = vec![0u32; network.n_modes()];
    occ[site] = 1;
    OccupationKet(occ)
}

/// The protected superposition (|1_B 0_F⟩ + sign·|0_B 1_F⟩)/√2 on the qubit's
/// sites, every other mode in vacuum. Equivalently (b⁺ + sign·f⁺)|0⟩/√2.
pub fn build_dfs_state(network: Arc<NetworkSpec>, qubit: &SusyQubit) -> Result<StateVector> {
    qubit.validate(&network)?;
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let boson_ket = single_site_ket(&network, qubit.boson_site);
    let fermion_ket = single_site_ket(&network, qubit.fermion_site);
    let mut amps = Array1::zeros(network.total_dim());
    amps[network.rank_of(&boson_ket)?] = Complex64::new(inv_sqrt2, 0.0);
    amps[network.rank_of(&fermion_ket)?] = Complex64::new(qubit.sign.factor() * inv_sqrt2, 0.0);
    StateVector::from_amplitudes(network, amps)
}

/// The qubit superposition prepared on quasi modes instead of sites:
/// (b′_k⁺ + sign·f′_k'⁺)|0⟩/√2, where k and k' are the pair indices of the
/// qubit's boson and fermion sites in the ascending-frequency quasi ordering.
/// Expressed in the site basis, so it can feed any engine.
pub fn build_quasi_dfs_state(
    spec: &SusyNetworkSpec,
    qubit: &SusyQubit,
    basis: &BlockQuasiBasis,
) -> Result<StateVector> {
    let network = spec.network()?;
    let quasi_initial = quasi_qubit_state(spec, qubit, &network)?;
    let options = TransformOptions {
        rep: FermionRepresentation::StringCorrected,
        allow_multi_excitation: false,
    };
    let back = transform_state_to_spec(
        &quasi_initial,
        TransformBasis::Blocks(basis),
        TransformDirection::FromQuasi,
        network,
        &options,
    )?;
    Ok(back.state)
}

/// The two-amplitude qubit state written in the quasi occupation basis (the
/// layout of quasi modes matches the site layout).
fn quasi_qubit_state(
    spec: &SusyNetworkSpec,
    qubit: &SusyQubit,
    network: &Arc<NetworkSpec>,
) -> Result<StateVector> {
    qubit.validate(network)?;
    if qubit.boson_site >= spec.n_pairs || qubit.fermion_site < spec.n_pairs {
        return Err(Error::SiteOutOfRange {
            site: qubit.boson_site.max(qubit.fermion_site),
            n_modes: network.n_modes(),
        });
    }
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut amps = Array1::zeros(network.total_dim());
    amps[network.rank_of(&single_site_ket(network, qubit.boson_site))?] =
        Complex64::new(inv_sqrt2, 0.0);
    amps[network.rank_of(&single_site_ket(network, qubit.fermion_site))?] =
        Complex64::new(qubit.sign.factor() * inv_sqrt2, 0.0);
    StateVector::from_amplitudes(network.clone(), amps)
}

/// One record of a developing qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct SusyQubitPoint {
    pub time: f64,
    /// Phase of the boson-excited component's site amplitude.
    pub boson_phase: f64,
    /// Phase of the fermion-excited component's site amplitude.
    pub fermion_phase: f64,
    /// arg ρ_{(01),(10)} of the reduced pair: fermion phase minus boson
    /// phase, wrapped into (−π, π].
    pub relative_phase: f64,
    /// |ρ_{(10),(01)}| of the reduced pair.
    pub coherence: f64,
    pub leakage: f64,
}

/// Develop a quasi-mode-prepared qubit in time.
///
/// The boson and fermion networks are diagonalized independently, the qubit
/// is prepared as (b′_k⁺ + sign·f′_k'⁺)|0⟩/√2 on the quasi modes matching its
/// pair indices, each quasi amplitude rotates by its eigenfrequency, and the
/// state is transformed back to the site basis at every grid time. The
/// reported coherence and phases live on the reduced density matrix of the
/// qubit's two sites.
///
/// On matching pair indices (k = k') the coherence is
/// |U_B[i,k]|·|U_F[j,k]|/2 at every time, and the relative phase drifts at
/// rate (Ω_B,k − Ω_F,k')/2 — zero exactly when the sector spectra are
/// matched, growing linearly with the detuning otherwise.
pub fn susy_qubit_evolution(
    spec: &SusyNetworkSpec,
    qubit: &SusyQubit,
    boson_coupling: &CouplingMatrix,
    fermion_coupling: &CouplingMatrix,
    grid: &TimeGrid,
) -> Result<Vec<SusyQubitPoint>> {
    let n = spec.n_pairs;
    if boson_coupling.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: boson_coupling.n(),
        });
    }
    if fermion_coupling.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: fermion_coupling.n(),
        });
    }
    let network = spec.network()?;
    let basis = block_diagonalize(boson_coupling, fermion_coupling)?;
    let quasi_initial = quasi_qubit_state(spec, qubit, &network)?;
    let options = TransformOptions {
        rep: FermionRepresentation::StringCorrected,
        allow_multi_excitation: false,
    };
    let boson_ket = single_site_ket(&network, qubit.boson_site);
    let fermion_ket = single_site_ket(&network, qubit.fermion_site);
    let keep = [qubit.boson_site, qubit.fermion_site];
    let pair = CoherencePair::new(OccupationKet(vec![1, 0]), OccupationKet(vec![0, 1]))?;
    let mut out = Vec::with_capacity(grid.times().len());
    for &t in grid.times() {
        let rotated = propagate_quasi(&quasi_initial, TransformBasis::Blocks(&basis), t)?;
        let back = transform_state_to_spec(
            &rotated,
            TransformBasis::Blocks(&basis),
            TransformDirection::FromQuasi,
            network.clone(),
            &options,
        )?;
        let amp_b = back.state.amplitude_of(&boson_ket)?;
        let amp_f = back.state.amplitude_of(&fermion_ket)?;
        if amp_b.norm() < 1e-12 || amp_f.norm() < 1e-12 {
            return Err(Error::VanishingComponent);
        }
        let state = if (back.state.norm() - 1.0).abs() > 1e-12 {
            back.state.normalized()?
        } else {
            back.state
        };
        let reduced = partial_trace_state(&state, &keep)?;
        out.push(SusyQubitPoint {
            time: t,
            boson_phase: amp_b.arg(),
            fermion_phase: amp_f.arg(),
            relative_phase: relative_phase_from_density(&reduced, &pair)?,
            coherence: coherence(&reduced, &pair)?,
            leakage: back.leakage,
        });
    }
    Ok(out)
}

/// One row of the supersymmetry-algebra table.
#[derive(Debug, Clone, PartialEq)]
pub struct SusyAlgebraCheck {
    pub offset: usize,
    pub rep: FermionRepresentation,
    /// ‖Q_n² − Σ_i |ω_i|² (n̂_B,i + n̂_F,i)‖_max over columns whose
    /// occupations are all ≤ 1.
    pub delta: f64,
}

/// Measure, for each pairing offset and both fermion representations, how far
/// the squared supercharge is from the free Hamiltonian
/// Σ_i |ω_i|² (n̂_B,i + n̂_F,i) on the occupation-≤1 subspace. Exact
/// anticommutation (the string-corrected representation) makes the n = 0
/// distance vanish; the commuting tensor representation and nonzero offsets
/// are reported for contrast, not asserted.
pub fn verify_susy_algebra(
    spec: &SusyNetworkSpec,
    offsets: &[usize],
    weights: &[Complex64],
) -> Result<Vec<SusyAlgebraCheck>> {
    let network = spec.network()?;
    let dim = network.total_dim();
    let guard = dense_guard();
    if dim > guard {
        return Err(Error::DenseGuardExceeded { dim, guard });
    }
    if weights.len() != spec.n_pairs {
        return Err(Error::DimensionMismatch {
            expected: spec.n_pairs,
            got: weights.len(),
        });
    }
    let mut reference_terms = Vec::with_capacity(2 * spec.n_pairs);
    for (i, w) in weights.iter().enumerate() {
        let w2 = Complex64::new(w.norm_sqr(), 0.0);
        reference_terms.push(OpTerm::new(
            w2,
            vec![(spec.boson_site(i), FactorKind::Number)],
        ));
        reference_terms.push(OpTerm::new(
            w2,
            vec![(spec.fermion_site(i), FactorKind::Number)],
        ));
    }
    let reference = OperatorSum::new(reference_terms);
    let below_cutoff: Vec<usize> = (0..dim)
        .filter(|&rank| {
            (0..network.n_modes()).all(|s| network.occupation_at(rank, s) <= 1)
        })
        .collect();
    let mut table = Vec::with_capacity(offsets.len() * 2);
    for &offset in offsets {
        let q = build_supercharge(spec, offset, weights)?;
        let h = susy_hamiltonian(&q);
        for rep in [
            FermionRepresentation::SpinTensor,
            FermionRepresentation::StringCorrected,
        ] {
            let hm = h.matrix(&network, rep)?;
            let rm = reference.matrix(&network, rep)?;
            let mut delta = 0.0f64;
            for &c in &below_cutoff {
                for r in 0..dim {
                    delta = delta.max((hm[[r, c]] - rm[[r, c]]).norm());
                }
            }
            table.push(SusyAlgebraCheck { offset, rep, delta });
        }
    }
    Ok(table)
}
