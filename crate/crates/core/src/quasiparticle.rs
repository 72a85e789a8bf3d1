//! Normal-mode (quasiparticle) machinery for number-conserving quadratic
//! Hamiltonians.
//!
//! Diagonalizing the one-particle coupling matrix ω = U Ω U† turns the
//! network Hamiltonian Σ_ij ω_ij a_i⁺a_j into non-interacting quasi modes
//! Σ_k Ω_k n̂′_k with a′_k⁺ = Σ_i U_ik a_i⁺. States are re-expressed between
//! the site basis and the quasi-mode basis by expanding products of
//! transformed creation operators over the vacuum, which is the same in both
//! bases:
//!
//! * bosons — multivariate polynomial expansion with factorial normalization;
//! * fermions, `SpinTensor` — the same expansion with hard-core pruning at
//!   occupation 1 (lossy: colliding excitations leak);
//! * fermions, `StringCorrected` — Slater-determinant amplitudes (exact).
//!
//! Transforms cover entire kind-sectors (every bosonic site, every fermionic
//! site), so no operator-reordering parity beyond the determinant signs can
//! arise; interleaved bosonic sites never carry occupation strings.
//!
//! Amplitudes that would exceed a target cutoff are dropped and accounted as
//! leakage = ‖input‖² − ‖output‖², which is exactly the squared norm lost to
//! truncation because surviving amplitudes are computed exactly.

use crate::error::{Error, Result};
use crate::fock::{FermionRepresentation, ModeSpec, NetworkSpec, StateVector};
use crate::hamiltonians::CouplingMatrix;
use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Tolerance on ‖U†U − 1‖_max and on the diagonalization residual.
pub const UNITARITY_TOL: f64 = 1e-10;

/// Leakage threshold below which a transformed cutoff is declared adequate.
pub const LEAKAGE_TOL: f64 = 1e-8;

/// Unitary change of basis into quasi modes plus their frequencies.
///
/// Column k of `u` holds the site amplitudes of quasi mode k:
/// a′_k⁺ = Σ_i u[i][k] a_i⁺, with `omega` ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiBasis {
    u: Array2<Complex64>,
    omega: Vec<f64>,
}

impl QuasiBasis {
    /// Identity basis: every site is its own quasi mode at frequency 0.
    pub fn identity(n: usize) -> Self {
        QuasiBasis {
            u: Array2::eye(n),
            omega: vec![0.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.omega.len()
    }

    pub fn u(&self) -> &Array2<Complex64> {
        &self.u
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    /// ‖U†U − 1‖_max.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.n();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let mut dot = Complex64::new(0.0, 0.0);
                for r in 0..n {
                    dot += self.u[[r, i]].conj() * self.u[[r, j]];
                }
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    /// ‖U†ωU − diag(Ω)‖_max against the source coupling.
    pub fn residual(&self, coupling: &CouplingMatrix) -> f64 {
        let n = self.n();
        let w = coupling.as_array();
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for i in 0..n {
                    for j in 0..n {
                        acc += self.u[[i, a]].conj() * w[[i, j]] * self.u[[j, b]];
                    }
                }
                let target = if a == b {
                    Complex64::new(self.omega[a], 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                };
                worst = worst.max((acc - target).norm());
            }
        }
        worst
    }
}

/// Diagonalize a Hermitian coupling matrix into a [`QuasiBasis`].
///
/// Deterministic conventions: frequencies ascending; within each eigenvector
/// the largest-magnitude component (ties broken toward the lowest site index,
/// at 1e-9 relative tolerance) is made real positive; degenerate frequencies
/// are ordered by that component's site index.
pub fn diagonalize_coupling(coupling: &CouplingMatrix) -> Result<QuasiBasis> {
    let n = coupling.n();
    if n == 0 {
        return Ok(QuasiBasis::identity(0));
    }
    let (vals, vecs) = coupling
        .as_array()
        .eigh(UPLO::Lower)
        .map_err(|e| Error::Linalg(e.to_string()))?;
    // The backend hands back eigenvectors of the transposed (= conjugated,
    // for Hermitian input) matrix in its columns; conjugating restores the
    // eigenvectors of the coupling itself. The residual checks below would
    // reject the output if this convention ever shifted.
    let mut u = vecs.mapv(|c| c.conj());
    let mut anchor = vec![0usize; n];
    for k in 0..n {
        let mut mmax = 0.0f64;
        for i in 0..n {
            mmax = mmax.max(u[[i, k]].norm());
        }
        let mut best = 0usize;
        for i in 0..n {
            if u[[i, k]].norm() >= mmax * (1.0 - 1e-9) {
                best = i;
                break;
            }
        }
        anchor[k] = best;
        let pivot = u[[best, k]];
        let mag = pivot.norm();
        if mag > 0.0 {
            let phase = pivot / mag;
            let fix = phase.conj();
            for i in 0..n {
                u[[i, k]] *= fix;
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        vals[a]
            .total_cmp(&vals[b])
            .then(anchor[a].cmp(&anchor[b]))
            .then(a.cmp(&b))
    });
    let mut sorted_u = Array2::zeros((n, n));
    let mut omega = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        omega.push(vals[src]);
        for i in 0..n {
            sorted_u[[i, dst]] = u[[i, src]];
        }
    }
    let basis = QuasiBasis { u: sorted_u, omega };
    let defect = basis.unitarity_defect();
    if defect > UNITARITY_TOL {
        return Err(Error::Linalg(format!(
            "eigenvector matrix deviates from unitarity by {defect:.3e}"
        )));
    }
    let residual = basis.residual(coupling);
    if residual > UNITARITY_TOL {
        return Err(Error::Linalg(format!(
            "diagonalization residual {residual:.3e} exceeds tolerance"
        )));
    }
    Ok(basis)
}

/// Independent quasi bases for the bosonic and fermionic sectors.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockQuasiBasis {
    pub boson: QuasiBasis,
    pub fermion: QuasiBasis,
}

/// Diagonalize the two sector couplings independently; any boson-fermion
/// interaction terms are untouched by construction.
pub fn block_diagonalize(
    boson_coupling: &CouplingMatrix,
    fermion_coupling: &CouplingMatrix,
) -> Result<BlockQuasiBasis> {
    Ok(BlockQuasiBasis {
        boson: diagonalize_coupling(boson_coupling)?,
        fermion: diagonalize_coupling(fermion_coupling)?,
    })
}

/// Which basis change a transform applies.
#[derive(Debug, Clone, Copy)]
pub enum TransformBasis<'a> {
    /// One basis covering every mode; the network must be single-kind.
    Whole(&'a QuasiBasis),
    /// Separate bases for the boson and fermion sectors.
    Blocks(&'a BlockQuasiBasis),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformDirection {
    ToQuasi,
    FromQuasi,
}

#[derive(Debug, Clone, Copy)]
pub struct TransformOptions {
    pub rep: FermionRepresentation,
    /// Expand sectors carrying more than 2 excitations (exponential cost).
    pub allow_multi_excitation: bool,
}

impl Default for TransformOptions {
    fn default() -> Self {
        TransformOptions {
            rep: FermionRepresentation::StringCorrected,
            allow_multi_excitation: false,
        }
    }
}

/// A transformed state plus the squared norm lost to cutoff truncation.
#[derive(Debug, Clone)]
pub struct Transformed {
    pub state: StateVector,
    pub leakage: f64,
}

struct SectorTransform {
    sites: Vec<usize>,
    /// Source operator i expands as Σ_k a[i][k] (target operator k).
    a: Array2<Complex64>,
    fermionic: bool,
}

fn amplitude_matrix(basis: &QuasiBasis, direction: TransformDirection) -> Array2<Complex64> {
    match direction {
        // a_i⁺ = Σ_k U*_ik a′_k⁺
        TransformDirection::ToQuasi => basis.u.mapv(|c| c.conj()),
        // a′_k⁺ = Σ_i U_ik a_i⁺
        TransformDirection::FromQuasi => basis.u.t().to_owned(),
    }
}

fn sector_transforms(
    spec: &NetworkSpec,
    basis: TransformBasis,
    direction: TransformDirection,
) -> Result<Vec<SectorTransform>> {
    let boson_sites = spec.boson_sites();
    let fermion_sites = spec.fermion_sites();
    match basis {
        TransformBasis::Whole(qb) => {
            if !boson_sites.is_empty() && !fermion_sites.is_empty() {
                return Err(Error::InvalidExpression(
                    "a whole-network basis cannot span mixed boson/fermion modes; use the block form"
                        .into(),
                ));
            }
            if qb.n() != spec.n_modes() {
                return Err(Error::DimensionMismatch {
                    expected: spec.n_modes(),
                    got: qb.n(),
                });
            }
            Ok(vec![SectorTransform {
                sites: (0..spec.n_modes()).collect(),
                a: amplitude_matrix(qb, direction),
                fermionic: boson_sites.is_empty(),
            }])
        }
        TransformBasis::Blocks(bb) => {
            if bb.boson.n() != boson_sites.len() {
                return Err(Error::DimensionMismatch {
                    expected: boson_sites.len(),
                    got: bb.boson.n(),
                });
            }
            if bb.fermion.n() != fermion_sites.len() {
                return Err(Error::DimensionMismatch {
                    expected: fermion_sites.len(),
                    got: bb.fermion.n(),
                });
            }
            let mut out = Vec::new();
            if !boson_sites.is_empty() {
                out.push(SectorTransform {
                    sites: boson_sites,
                    a: amplitude_matrix(&bb.boson, direction),
                    fermionic: false,
                });
            }
            if !fermion_sites.is_empty() {
                out.push(SectorTransform {
                    sites: fermion_sites,
                    a: amplitude_matrix(&bb.fermion, direction),
                    fermionic: true,
                });
            }
            Ok(out)
        }
    }
}

fn sqrt_factorial(n: u32) -> f64 {
    (1..=n).map(|k| k as f64).product::<f64>().sqrt()
}

/// Expand Π_i (Σ_k a[i][k] x_k)^{n_i} over monomials, pruning any exponent
/// beyond `max_occ`, and attach the bosonic normalization
/// √(Π m_k!)/√(Π n_i!). With `max_occ` all 1 this is the hard-core
/// (`SpinTensor`) expansion and every normalization factor is 1.
fn expand_polynomial_sector(
    n_in: &[u32],
    a: &Array2<Complex64>,
    max_occ: &[u32],
) -> Vec<(Vec<u32>, Complex64)> {
    let nt = n_in.len();
    let mut poly: BTreeMap<Vec<u32>, Complex64> =
        BTreeMap::from([(vec![0u32; nt], Complex64::new(1.0, 0.0))]);
    for i in 0..nt {
        for _ in 0..n_in[i] {
            let mut next: BTreeMap<Vec<u32>, Complex64> = BTreeMap::new();
            for (m, &coeff) in &poly {
                for k in 0..nt {
                    let aik = a[[i, k]];
                    if aik.re == 0.0 && aik.im == 0.0 {
                        continue;
                    }
                    if m[k] + 1 > max_occ[k] {
                        continue;
                    }
                    let mut grown = m.clone();
                    grown[k] += 1;
                    *next
                        .entry(grown)
                        .or_insert_with(|| Complex64::new(0.0, 0.0)) += coeff * aik;
                }
            }
            poly = next;
        }
    }
    let denom: f64 = n_in.iter().map(|&n| sqrt_factorial(n)).product();
    poly.into_iter()
        .map(|(m, c)| {
            let numer: f64 = m.iter().map(|&n| sqrt_factorial(n)).product();
            (m, c * (numer / denom))
        })
        .collect()
}

/// Lexicographically ascending k-subsets of {0, …, n−1}.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        if k == 0 {
            break;
        }
        let mut i = k as isize - 1;
        while i >= 0 && idx[i as usize] == n - k + i as usize {
            i -= 1;
        }
        if i < 0 {
            break;
        }
        let i = i as usize;
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
    out
}

/// Determinant by Gaussian elimination with partial pivoting (0×0 → 1).
fn determinant(mut m: Vec<Vec<Complex64>>) -> Complex64 {
    let n = m.len();
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let mut piv = col;
        let mut best = m[col][col].norm();
        for row in col + 1..n {
            let mag = m[row][col].norm();
            if mag > best {
                best = mag;
                piv = row;
            }
        }
        if best == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if piv != col {
            m.swap(piv, col);
            det = -det;
        }
        let pivot = m[col][col];
        det *= pivot;
        for row in col + 1..n {
            let factor = m[row][col] / pivot;
            for c in col..n {
                let sub = factor * m[col][c];
                m[row][c] -= sub;
            }
        }
    }
    det
}

/// Exact fermionic sector expansion: amplitude on each same-size target
/// occupation set is the determinant of the corresponding submatrix.
fn expand_fermion_sector_exact(
    n_in: &[u32],
    a: &Array2<Complex64>,
) -> Vec<(Vec<u32>, Complex64)> {
    let nt = n_in.len();
    let occupied: Vec<usize> = (0..nt).filter(|&i| n_in[i] == 1).collect();
    let mut out = Vec::new();
    for target in combinations(nt, occupied.len()) {
        let sub: Vec<Vec<Complex64>> = occupied
            .iter()
            .map(|&i| target.iter().map(|&k| a[[i, k]]).collect())
            .collect();
        let det = determinant(sub);
        if det.re == 0.0 && det.im == 0.0 {
            continue;
        }
        let mut m = vec![0u32; nt];
        for &k in &target {
            m[k] = 1;
        }
        out.push((m, det));
    }
    out
}

fn check_target_spec(
    source: &NetworkSpec,
    target: &NetworkSpec,
    transforms: &[SectorTransform],
) -> Result<()> {
    if source.n_modes() != target.n_modes() {
        return Err(Error::DimensionMismatch {
            expected: source.n_modes(),
            got: target.n_modes(),
        });
    }
    let mut transformed = vec![false; source.n_modes()];
    for tr in transforms {
        for &s in &tr.sites {
            transformed[s] = true;
        }
    }
    for site in 0..source.n_modes() {
        let same_kind = source.modes()[site].is_boson() == target.modes()[site].is_boson();
        if !same_kind {
            return Err(Error::InvalidExpression(format!(
                "target network changes the kind of site {site}"
            )));
        }
        // Only transformed bosonic sites may change cutoff.
        if !transformed[site] && source.modes()[site] != target.modes()[site] {
            return Err(Error::InvalidExpression(format!(
                "target network changes untransformed site {site}"
            )));
        }
    }
    Ok(())
}

/// Re-express a state across the quasi/site bases, onto an explicit target
/// network whose transformed bosonic sites may carry a different cutoff.
pub fn transform_state_to_spec(
    state: &StateVector,
    basis: TransformBasis,
    direction: TransformDirection,
    target: Arc<NetworkSpec>,
    options: &TransformOptions,
) -> Result<Transformed> {
    let spec = state.spec().clone();
    let transforms = sector_transforms(&spec, basis, direction)?;
    check_target_spec(&spec, &target, &transforms)?;

    let mut out = Array1::<Complex64>::zeros(target.total_dim());
    for rank in 0..spec.total_dim() {
        let c = state.amplitude(rank);
        if c.re == 0.0 && c.im == 0.0 {
            continue;
        }
        let ket = spec.ket_of(rank);
        let occ = ket.occupations();

        // Expand each sector independently.
        let mut sector_outputs: Vec<Vec<(Vec<u32>, Complex64)>> = Vec::new();
        for tr in &transforms {
            let n_in: Vec<u32> = tr.sites.iter().map(|&s| occ[s]).collect();
            let excitations: u32 = n_in.iter().sum();
            if excitations > 2 && !options.allow_multi_excitation {
                return Err(Error::UnsupportedExcitationCount { excitations });
            }
            let expanded = if tr.fermionic
                && options.rep == FermionRepresentation::StringCorrected
            {
                expand_fermion_sector_exact(&n_in, &tr.a)
            } else {
                let max_occ: Vec<u32> = tr
                    .sites
                    .iter()
                    .map(|&s| target.modes()[s].max_occupation())
                    .collect();
                expand_polynomial_sector(&n_in, &tr.a, &max_occ)
            };
            sector_outputs.push(expanded);
        }

        // Combine sector expansions with the pass-through occupations.
        let mut combos: Vec<(Vec<u32>, Complex64)> = vec![(occ.to_vec(), c)];
        for (tr, expanded) in transforms.iter().zip(&sector_outputs) {
            let mut next = Vec::with_capacity(combos.len() * expanded.len());
            for (base, amp) in &combos {
                for (m, coeff) in expanded {
                    let mut full = base.clone();
                    for (pos, &s) in tr.sites.iter().enumerate() {
                        full[s] = m[pos];
                    }
                    next.push((full, amp * coeff));
                }
            }
            combos = next;
        }
        for (full, amp) in combos {
            let target_rank = target.rank_of(&crate::fock::OccupationKet(full))?;
            out[target_rank] += amp;
        }
    }

    let norm_in = state.norm();
    let out_state = StateVector::from_amplitudes(target, out)?;
    let norm_out = out_state.norm();
    let leakage = (norm_in * norm_in - norm_out * norm_out).max(0.0);
    Ok(Transformed {
        state: out_state,
        leakage,
    })
}

/// Re-express a state across the quasi/site bases on its own network.
pub fn transform_state(
    state: &StateVector,
    basis: TransformBasis,
    direction: TransformDirection,
    options: &TransformOptions,
) -> Result<Transformed> {
    let target = state.spec().clone();
    transform_state_to_spec(state, basis, direction, target, options)
}

/// Clone a network with every listed bosonic site's cutoff replaced.
pub fn with_boson_cutoffs(
    spec: &NetworkSpec,
    sites: &[usize],
    cutoff: u32,
) -> Result<Arc<NetworkSpec>> {
    let mut modes = spec.modes().to_vec();
    for &s in sites {
        match modes.get(s) {
            Some(ModeSpec::Boson { .. }) => modes[s] = ModeSpec::Boson { cutoff },
            Some(ModeSpec::Fermion) => return Err(Error::NotBosonic { site: s }),
            None => {
                return Err(Error::SiteOutOfRange {
                    site: s,
                    n_modes: spec.n_modes(),
                })
            }
        }
    }
    NetworkSpec::shared(modes)
}

/// Smallest uniform cutoff M′ on the transformed bosonic sites for which the
/// transform of `state` leaks less than [`LEAKAGE_TOL`]. The total
/// excitation count of the occupied sector is an exact upper bound, so the
/// scan always terminates.
pub fn minimal_transformed_cutoff(
    state: &StateVector,
    basis: TransformBasis,
    direction: TransformDirection,
    options: &TransformOptions,
) -> Result<u32> {
    let spec = state.spec().clone();
    let boson_sites = spec.boson_sites();
    if boson_sites.is_empty() {
        return Ok(1);
    }
    let mut worst = 0u32;
    for rank in 0..spec.total_dim() {
        let c = state.amplitude(rank);
        if c.re == 0.0 && c.im == 0.0 {
            continue;
        }
        let total: u32 = boson_sites
            .iter()
            .map(|&s| spec.occupation_at(rank, s))
            .sum();
        worst = worst.max(total);
    }
    let ceiling = worst.max(1);
    for m in 1..=ceiling {
        let target = with_boson_cutoffs(&spec, &boson_sites, m)?;
        let transformed = transform_state_to_spec(state, basis, direction, target, options)?;
        if transformed.leakage < LEAKAGE_TOL {
            return Ok(m);
        }
    }
    Ok(ceiling)
}

/// Per-site quasi frequencies: site i of a quasi-basis state carries the
/// frequency of quasi mode i within its sector.
pub fn quasi_site_frequencies(spec: &NetworkSpec, basis: TransformBasis) -> Result<Vec<f64>> {
    match basis {
        TransformBasis::Whole(qb) => {
            if qb.n() != spec.n_modes() {
                return Err(Error::DimensionMismatch {
                    expected: spec.n_modes(),
                    got: qb.n(),
                });
            }
            let boson_sites = spec.boson_sites();
            let fermion_sites = spec.fermion_sites();
            if !boson_sites.is_empty() && !fermion_sites.is_empty() {
                return Err(Error::InvalidExpression(
                    "a whole-network basis cannot span mixed boson/fermion modes; use the block form"
                        .into(),
                ));
            }
            Ok(qb.omega().to_vec())
        }
        TransformBasis::Blocks(bb) => {
            let boson_sites = spec.boson_sites();
            let fermion_sites = spec.fermion_sites();
            if bb.boson.n() != boson_sites.len() {
                return Err(Error::DimensionMismatch {
                    expected: boson_sites.len(),
                    got: bb.boson.n(),
                });
            }
            if bb.fermion.n() != fermion_sites.len() {
                return Err(Error::DimensionMismatch {
                    expected: fermion_sites.len(),
                    got: bb.fermion.n(),
                });
            }
            let mut freqs = vec![0.0; spec.n_modes()];
            for (pos, &s) in boson_sites.iter().enumerate() {
                freqs[s] = bb.boson.omega()[pos];
            }
            for (pos, &s) in fermion_sites.iter().enumerate() {
                freqs[s] = bb.fermion.omega()[pos];
            }
            Ok(freqs)
        }
    }
}
