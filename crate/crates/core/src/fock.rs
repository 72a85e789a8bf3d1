//! Truncated Fock spaces over mixed boson/fermion mode networks.
//!
//! Basis kets are occupation tuples ordered lexicographically with mode 0 most
//! significant and occupation numbers ascending, so rank 0 is always the
//! vacuum. Bosonic modes carry a hard cutoff M (raising past M yields the zero
//! vector); fermionic modes are two-dimensional.

use crate::error::{Error, Result};
use ndarray::Array1;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// One network site: a truncated bosonic mode or a fermionic mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeSpec {
    Boson { cutoff: u32 },
    Fermion,
}

impl ModeSpec {
    pub fn local_dim(&self) -> usize {
        match self {
            ModeSpec::Boson { cutoff } => *cutoff as usize + 1,
            ModeSpec::Fermion => 2,
        }
    }

    pub fn max_occupation(&self) -> u32 {
        match self {
            ModeSpec::Boson { cutoff } => *cutoff,
            ModeSpec::Fermion => 1,
        }
    }

    pub fn is_boson(&self) -> bool {
        matches!(self, ModeSpec::Boson { .. })
    }

    pub fn is_fermion(&self) -> bool {
        matches!(self, ModeSpec::Fermion)
    }
}

/// How cross-site fermionic statistics are realized.
///
/// `SpinTensor` treats fermionic modes as commuting tensor factors (spin
/// sites). `StringCorrected` inserts the occupation-parity string of all
/// preceding fermionic modes, so cross-site anticommutation holds exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FermionRepresentation {
    SpinTensor,
    StringCorrected,
}

/// An occupation-number tuple, one entry per network mode.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OccupationKet(pub Vec<u32>);

impl OccupationKet {
    pub fn occupations(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }
}

/// Fixed layout of modes; owns the mixed-radix ranking of the basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSpec {
    modes: Vec<ModeSpec>,
    strides: Vec<usize>,
    total_dim: usize,
}

impl NetworkSpec {
    pub fn new(modes: Vec<ModeSpec>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::EmptyNetwork);
        }
        for mode in &modes {
            if let ModeSpec::Boson { cutoff: 0 } = mode {
                return Err(Error::ZeroCutoff);
            }
        }
        let mut strides = vec![0usize; modes.len()];
        let mut acc = 1usize;
        for (i, mode) in modes.iter().enumerate().rev() {
            strides[i] = acc;
            acc = acc
                .checked_mul(mode.local_dim())
                .ok_or(Error::DimensionMismatch {
                    expected: usize::MAX,
                    got: 0,
                })?;
        }
        Ok(NetworkSpec {
            modes,
            strides,
            total_dim: acc,
        })
    }

    pub fn shared(modes: Vec<ModeSpec>) -> Result<Arc<Self>> {
        Ok(Arc::new(Self::new(modes)?))
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &[ModeSpec] {
        &self.modes
    }

    pub fn mode(&self, site: usize) -> Result<ModeSpec> {
        self.modes
            .get(site)
            .copied()
            .ok_or(Error::SiteOutOfRange {
                site,
                n_modes: self.modes.len(),
            })
    }

    pub fn total_dim(&self) -> usize {
        self.total_dim
    }

    pub(crate) fn stride(&self, site: usize) -> usize {
        self.strides[site]
    }

    /// Occupation of `site` inside the basis ket of the given rank.
    pub fn occupation_at(&self, rank: usize, site: usize) -> u32 {
        ((rank / self.strides[site]) % self.modes[site].local_dim()) as u32
    }

    pub fn rank_of(&self, ket: &OccupationKet) -> Result<usize> {
        if ket.0.len() != self.modes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.modes.len(),
                got: ket.0.len(),
            });
        }
        let mut rank = 0usize;
        for (site, (&occ, mode)) in ket.0.iter().zip(&self.modes).enumerate() {
            if occ > mode.max_occupation() {
                return Err(Error::OccupationOutOfRange { site, occ });
            }
            rank += occ as usize * self.strides[site];
        }
        Ok(rank)
    }

    pub fn ket_of(&self, rank: usize) -> OccupationKet {
        OccupationKet(
            (0..self.modes.len())
                .map(|site| self.occupation_at(rank, site))
                .collect(),
        )
    }

    pub fn boson_sites(&self) -> Vec<usize> {
        (0..self.modes.len())
            .filter(|&s| self.modes[s].is_boson())
            .collect()
    }

    pub fn fermion_sites(&self) -> Vec<usize> {
        (0..self.modes.len())
            .filter(|&s| self.modes[s].is_fermion())
            .collect()
    }

    /// Occupation parity of all fermionic modes strictly before `site`:
    /// +1 for even, -1 for odd.
    pub(crate) fn fermion_parity_before(&self, rank: usize, site: usize) -> f64 {
        let mut parity = 0u32;
        for s in 0..site {
            if self.modes[s].is_fermion() {
                parity ^= self.occupation_at(rank, s) & 1;
            }
        }
        if parity == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

/// All basis kets in rank order.
pub fn enumerate_basis(spec: &NetworkSpec) -> Vec<OccupationKet> {
    (0..spec.total_dim()).map(|r| spec.ket_of(r)).collect()
}

/// Dense state over a network's truncated Fock space.
#[derive(Debug, Clone)]
pub struct StateVector {
    spec: Arc<NetworkSpec>,
    amplitudes: Array1<Complex64>,
}

impl StateVector {
    pub fn zero(spec: Arc<NetworkSpec>) -> Self {
        let dim = spec.total_dim();
        StateVector {
            spec,
            amplitudes: Array1::zeros(dim),
        }
    }

    pub fn vacuum(spec: Arc<NetworkSpec>) -> Self {
        let mut s = Self::zero(spec);
        s.amplitudes[0] = Complex64::new(1.0, 0.0);
        s
    }

    pub fn basis_ket(spec: Arc<NetworkSpec>, ket: &OccupationKet) -> Result<Self> {
        let rank = spec.rank_of(ket)?;
        let mut s = Self::zero(spec);
        s.amplitudes[rank] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn from_amplitudes(spec: Arc<NetworkSpec>, amplitudes: Array1<Complex64>) -> Result<Self> {
        if amplitudes.len() != spec.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: spec.total_dim(),
                got: amplitudes.len(),
            });
        }
        Ok(StateVector { spec, amplitudes })
    }

    pub fn spec(&self) -> &Arc<NetworkSpec> {
        &self.spec
    }

    pub fn amplitudes(&self) -> &Array1<Complex64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, rank: usize) -> Complex64 {
        self.amplitudes[rank]
    }

    pub fn amplitude_of(&self, ket: &OccupationKet) -> Result<Complex64> {
        Ok(self.amplitudes[self.spec.rank_of(ket)?])
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm();
        if n < 1e-14 {
            return Err(Error::NotNormalized { norm: n });
        }
        Ok(StateVector {
            spec: self.spec.clone(),
            amplitudes: self.amplitudes.mapv(|a| a / n),
        })
    }

    /// ⟨self|other⟩ with the left argument conjugated.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        StateVector {
            spec: self.spec.clone(),
            amplitudes: self.amplitudes.mapv(|a| a * c),
        }
    }

    pub fn plus(&self, other: &StateVector) -> Result<Self> {
        if self.spec.total_dim() != other.spec.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.spec.total_dim(),
                got: other.spec.total_dim(),
            });
        }
        Ok(StateVector {
            spec: self.spec.clone(),
            amplitudes: &self.amplitudes + &other.amplitudes,
        })
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut Array1<Complex64> {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Array1<Complex64> {
        self.amplitudes
    }
}

fn entangled_pair(
    spec: Arc<NetworkSpec>,
    site_a: usize,
    site_b: usize,
    sign: f64,
) -> Result<StateVector> {
    if site_a == site_b {
        return Err(Error::DuplicateSites(vec![site_a, site_b]));
    }
    for site in [site_a, site_b] {
        let mode = spec.mode(site)?;
        if !mode.is_fermion() {
            return Err(Error::NotFermionic { site });
        }
    }
    let mut ket_a = vec![0u32; spec.n_modes()];
    ket_a[site_b] = 1;
    let mut ket_b = vec![0u32; spec.n_modes()];
    ket_b[site_a] = 1;
    let inv_sqrt2 = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let a = StateVector::basis_ket(spec.clone(), &OccupationKet(ket_a))?.scaled(inv_sqrt2);
    let b = StateVector::basis_ket(spec, &OccupationKet(ket_b))?
        .scaled(inv_sqrt2 * Complex64::new(sign, 0.0));
    a.plus(&b)
}

/// (|01⟩ − |10⟩)/√2 on two fermionic sites, vacuum elsewhere.
pub fn singlet_state(spec: Arc<NetworkSpec>, site_a: usize, site_b: usize) -> Result<StateVector> {
    entangled_pair(spec, site_a, site_b, -1.0)
}

/// (|01⟩ + |10⟩)/√2 on two fermionic sites, vacuum elsewhere.
pub fn triplet_state(spec: Arc<NetworkSpec>, site_a: usize, site_b: usize) -> Result<StateVector> {
    entangled_pair(spec, site_a, site_b, 1.0)
}

/// A single quantum at `site` over the vacuum.
pub fn single_excitation(spec: Arc<NetworkSpec>, site: usize) -> Result<StateVector> {
    spec.mode(site)?;
    let mut ket = vec![0u32; spec.n_modes()];
    ket[site] = 1;
    StateVector::basis_ket(spec, &OccupationKet(ket))
}

/// Raising or lowering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LadderKind {
    Create,
    Annihilate,
}

/// Pauli axis on a fermionic (spin) site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

/// Action of a single ladder operator on a basis ket, as `(target_rank,
/// sign, radicand)` with the matrix element equal to sign·√radicand; `None`
/// when the ket is annihilated (hard truncation at a bosonic cutoff, Pauli
/// exclusion on fermions). Returning the radicand unrooted lets a product of
/// ladder factors take a single square root of an integer, so compositions
/// like b b⁺ land exactly on whole numbers.
pub(crate) fn ladder_on_rank(
    spec: &NetworkSpec,
    rank: usize,
    site: usize,
    which: LadderKind,
    rep: FermionRepresentation,
) -> Option<(usize, f64, u32)> {
    let mode = spec.modes[site];
    let occ = spec.occupation_at(rank, site);
    let stride = spec.stride(site);
    match mode {
        ModeSpec::Boson { cutoff } => match which {
            LadderKind::Create => {
                if occ >= cutoff {
                    None
                } else {
                    Some((rank + stride, 1.0, occ + 1))
                }
            }
            LadderKind::Annihilate => {
                if occ == 0 {
                    None
                } else {
                    Some((rank - stride, 1.0, occ))
                }
            }
        },
        ModeSpec::Fermion => {
            let sign = match rep {
                FermionRepresentation::SpinTensor => 1.0,
                FermionRepresentation::StringCorrected => spec.fermion_parity_before(rank, site),
            };
            match which {
                LadderKind::Create => {
                    if occ == 1 {
                        None
                    } else {
                        Some((rank + stride, sign, 1))
                    }
                }
                LadderKind::Annihilate => {
                    if occ == 0 {
                        None
                    } else {
                        Some((rank - stride, sign, 1))
                    }
                }
            }
        }
    }
}

/// Pauli action on a basis ket in the |0⟩,|1⟩ occupation basis with |1⟩ the
/// +1 eigenvector of Z.
pub(crate) fn pauli_on_rank(
    spec: &NetworkSpec,
    rank: usize,
    site: usize,
    axis: PauliAxis,
) -> (usize, Complex64) {
    let occ = spec.occupation_at(rank, site);
    let stride = spec.stride(site);
    match axis {
        PauliAxis::X => {
            if occ == 0 {
                (rank + stride, Complex64::new(1.0, 0.0))
            } else {
                (rank - stride, Complex64::new(1.0, 0.0))
            }
        }
        PauliAxis::Y => {
            if occ == 0 {
                (rank + stride, Complex64::new(0.0, -1.0))
            } else {
                (rank - stride, Complex64::new(0.0, 1.0))
            }
        }
        PauliAxis::Z => {
            if occ == 0 {
                (rank, Complex64::new(-1.0, 0.0))
            } else {
                (rank, Complex64::new(1.0, 0.0))
            }
        }
    }
}

fn check_site(spec: &NetworkSpec, site: usize) -> Result<ModeSpec> {
    spec.mode(site)
}

/// Apply b/b⁺ or f/f⁺ at `site`: b⁺|n⟩ = √(n+1)|n+1⟩ (zero above the cutoff),
/// b|n⟩ = √n|n−1⟩; fermionic ops flip occupancy with the representation's
/// string sign.
pub fn apply_ladder(
    state: &StateVector,
    site: usize,
    which: LadderKind,
    rep: FermionRepresentation,
) -> Result<StateVector> {
    let spec = state.spec();
    check_site(spec, site)?;
    let mut out = StateVector::zero(spec.clone());
    for (rank, amp) in state.amplitudes().iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        if let Some((target, sign, radicand)) = ladder_on_rank(spec, rank, site, which, rep) {
            out.amplitudes_mut()[target] += amp * sign * (radicand as f64).sqrt();
        }
    }
    Ok(out)
}

/// Apply a Pauli operator at a fermionic `site`.
pub fn apply_pauli(state: &StateVector, site: usize, axis: PauliAxis) -> Result<StateVector> {
    let spec = state.spec();
    let mode = check_site(spec, site)?;
    if !mode.is_fermion() {
        return Err(Error::NotFermionic { site });
    }
    let mut out = StateVector::zero(spec.clone());
    for (rank, amp) in state.amplitudes().iter().enumerate() {
        if amp.norm_sqr() == 0.0 {
            continue;
        }
        let (target, factor) = pauli_on_rank(spec, rank, site, axis);
        out.amplitudes_mut()[target] += amp * factor;
    }
    Ok(out)
}
