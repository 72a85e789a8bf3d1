//! Density matrices, partial trace, and the coherence/relative-phase
//! observables that quantify decoherence.
//!
//! Coherence here is the magnitude of one declared off-diagonal element of a
//! reduced density matrix — the carrier of "the relative phase between two
//! superposition components survives" — rather than an entropy or fidelity
//! measure.

use crate::error::{Error, Result};
use crate::fock::{NetworkSpec, OccupationKet, StateVector};
use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;

/// Hermiticity/trace tolerance for density-matrix construction.
pub const DENSITY_TOL: f64 = 1e-10;

/// Component-amplitude floor below which a relative phase is undefined.
pub const PHASE_FLOOR: f64 = 1e-12;

/// A density matrix over an ordered list of subsystem local dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dims: Vec<usize>,
    entries: Array2<Complex64>,
}

impl DensityMatrix {
    /// Validates shape, Hermiticity, and unit trace (both to 1e-10).
    /// Positive semidefiniteness is checked separately by [`DensityMatrix::validate`]
    /// since it requires an eigendecomposition.
    pub fn new(dims: Vec<usize>, entries: Array2<Complex64>) -> Result<Self> {
        let dim: usize = dims.iter().product();
        if dims.is_empty() || dims.iter().any(|&d| d == 0) {
            return Err(Error::BadKeepSet);
        }
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: entries.nrows().max(entries.ncols()),
            });
        }
        let mut max_dev = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                max_dev = max_dev.max((entries[[i, j]] - entries[[j, i]].conj()).norm());
            }
        }
        if max_dev > DENSITY_TOL {
            return Err(Error::NotHermitian {
                max_dev,
                tol: DENSITY_TOL,
            });
        }
        let trace: Complex64 = (0..dim).map(|i| entries[[i, i]]).sum();
        let trace_dev = (trace - Complex64::new(1.0, 0.0)).norm();
        if trace_dev > DENSITY_TOL {
            return Err(Error::TraceNotOne { dev: trace_dev });
        }
        Ok(DensityMatrix { dims, entries })
    }

    /// Per-subsystem local dimensions, in site order.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[[row, col]]
    }

    /// tr(ρ²), which is 1 exactly for pure states.
    pub fn purity(&self) -> f64 {
        let n = self.dim();
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += self.entries[[i, j]].norm_sqr();
            }
        }
        acc
    }

    /// Full invariant check including positive semidefiniteness
    /// (eigenvalues ≥ −1e-10).
    pub fn validate(&self) -> Result<()> {
        let (vals, _) = self
            .entries
            .eigh(UPLO::Lower)
            .map_err(|e| Error::Linalg(e.to_string()))?;
        for &v in vals.iter() {
            if v < -DENSITY_TOL {
                return Err(Error::NegativeEigenvalue { value: v });
            }
        }
        Ok(())
    }

    /// Row/column index of an occupation ket over the kept sites.
    pub fn index_of(&self, ket: &OccupationKet) -> Result<usize> {
        let occ = ket.occupations();
        if occ.len() != self.dims.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dims.len(),
                got: occ.len(),
            });
        }
        let mut idx = 0usize;
        for (pos, &n) in occ.iter().enumerate() {
            if (n as usize) >= self.dims[pos] {
                return Err(Error::OccupationOutOfRange { site: pos, occ: n });
            }
            idx = idx * self.dims[pos] + n as usize;
        }
        Ok(idx)
    }
}

/// ρ = |ψ⟩⟨ψ| for a normalized pure state, with one subsystem per mode.
pub fn density_from_state(state: &StateVector) -> Result<DensityMatrix> {
    if !state.is_normalized(DENSITY_TOL) {
        return Err(Error::NotNormalized { norm: state.norm() });
    }
    let spec = state.spec();
    let dim = spec.total_dim();
    let mut entries = Array2::zeros((dim, dim));
    for i in 0..dim {
        let ai = state.amplitude(i);
        if ai.re == 0.0 && ai.im == 0.0 {
            continue;
        }
        for j in 0..dim {
            entries[[i, j]] = ai * state.amplitude(j).conj();
        }
    }
    let dims = spec.modes().iter().map(|m| m.local_dim()).collect();
    DensityMatrix::new(dims, entries)
}

fn check_keep(spec: &NetworkSpec, keep: &[usize]) -> Result<()> {
    if keep.is_empty() {
        return Err(Error::BadKeepSet);
    }
    for w in keep.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::BadKeepSet);
        }
    }
    if *keep.last().unwrap() >= spec.n_modes() {
        return Err(Error::BadKeepSet);
    }
    Ok(())
}

/// Reduced density matrix over `keep` (strictly ascending site indices),
/// tracing out every other mode.
///
/// Implemented directly from the pure state: ρ_keep[a, b] =
/// Σ_env ψ(a, env) ψ*(b, env), grouping full-space ranks by their kept-site
/// occupation pattern.
pub fn partial_trace_state(state: &StateVector, keep: &[usize]) -> Result<DensityMatrix> {
    if !state.is_normalized(DENSITY_TOL) {
        return Err(Error::NotNormalized { norm: state.norm() });
    }
    let spec = state.spec();
    check_keep(spec, keep)?;
    let kept_dims: Vec<usize> = keep.iter().map(|&s| spec.modes()[s].local_dim()).collect();
    let reduced_dim: usize = kept_dims.iter().product();
    let traced: Vec<usize> = (0..spec.n_modes()).filter(|s| !keep.contains(s)).collect();

    // Group amplitudes by the environment (traced) occupation pattern.
    let mut entries = Array2::<Complex64>::zeros((reduced_dim, reduced_dim));
    let mut kept_index = vec![0usize; spec.total_dim()];
    let mut env_key = vec![0usize; spec.total_dim()];
    for rank in 0..spec.total_dim() {
        let mut idx = 0usize;
        for (pos, &s) in keep.iter().enumerate() {
            idx = idx * kept_dims[pos] + spec.occupation_at(rank, s) as usize;
        }
        kept_index[rank] = idx;
        let mut key = 0usize;
        for &s in &traced {
            key = key * spec.modes()[s].local_dim() + spec.occupation_at(rank, s) as usize;
        }
        env_key[rank] = key;
    }
    let env_dim: usize = traced.iter().map(|&s| spec.modes()[s].local_dim()).product();
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); env_dim];
    for rank in 0..spec.total_dim() {
        let a = state.amplitude(rank);
        if a.re == 0.0 && a.im == 0.0 {
            continue;
        }
        buckets[env_key[rank]].push(rank);
    }
    for bucket in buckets {
        for &ra in &bucket {
            let aa = state.amplitude(ra);
            for &rb in &bucket {
                entries[[kept_index[ra], kept_index[rb]]] += aa * state.amplitude(rb).conj();
            }
        }
    }
    DensityMatrix::new(kept_dims, entries)
}

/// Partial trace of a general density matrix whose subsystem list matches a
/// network layout; `keep` is strictly ascending positions into `rho.dims()`.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = rho.dims().len();
    if keep.is_empty() || keep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::BadKeepSet);
    }
    if *keep.last().unwrap() >= n {
        return Err(Error::BadKeepSet);
    }
    let dims = rho.dims();
    let kept_dims: Vec<usize> = keep.iter().map(|&p| dims[p]).collect();
    let traced: Vec<usize> = (0..n).filter(|p| !keep.contains(p)).collect();
    let reduced_dim: usize = kept_dims.iter().product();

    // Decompose a flat index into per-subsystem digits (site 0 most
    // significant, matching the network rank convention).
    let digits = |mut idx: usize| -> Vec<usize> {
        let mut out = vec![0usize; n];
        for p in (0..n).rev() {
            out[p] = idx % dims[p];
            idx /= dims[p];
        }
        out
    };
    let kept_of = |dig: &[usize]| -> usize {
        let mut idx = 0usize;
        for (pos, &p) in keep.iter().enumerate() {
            idx = idx * kept_dims[pos] + dig[p];
        }
        idx
    };
    let full_dim = rho.dim();
    let mut entries = Array2::<Complex64>::zeros((reduced_dim, reduced_dim));
    for row in 0..full_dim {
        let drow = digits(row);
        for col in 0..full_dim {
            let dcol = digits(col);
            if traced.iter().any(|&p| drow[p] != dcol[p]) {
                continue;
            }
            entries[[kept_of(&drow), kept_of(&dcol)]] += rho.entry(row, col);
        }
    }
    DensityMatrix::new(kept_dims, entries)
}

/// The declared ket pair whose off-diagonal carries the watched phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoherencePair {
    pub ket_a: OccupationKet,
    pub ket_b: OccupationKet,
}

impl CoherencePair {
    pub fn new(ket_a: OccupationKet, ket_b: OccupationKet) -> Result<Self> {
        if ket_a == ket_b {
            return Err(Error::InvalidExpression(
                "coherence pair kets must be distinct".into(),
            ));
        }
        if ket_a.occupations().len() != ket_b.occupations().len() {
            return Err(Error::DimensionMismatch {
                expected: ket_a.occupations().len(),
                got: ket_b.occupations().len(),
            });
        }
        Ok(CoherencePair { ket_a, ket_b })
    }
}

/// |ρ_ab| for the declared pair; equals |αβ| for a pure α|a⟩ + β|b⟩.
pub fn coherence(rho: &DensityMatrix, pair: &CoherencePair) -> Result<f64> {
    let a = rho.index_of(&pair.ket_a)?;
    let b = rho.index_of(&pair.ket_b)?;
    Ok(rho.entry(a, b).norm())
}

fn wrap_phase(theta: f64) -> f64 {
    // Wrap into (−π, π].
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut t = theta % two_pi;
    if t <= -std::f64::consts::PI {
        t += two_pi;
    } else if t > std::f64::consts::PI {
        t -= two_pi;
    }
    t
}

/// arg(amp_b) − arg(amp_a) on a pure state, wrapped into (−π, π].
pub fn relative_phase(state: &StateVector, pair: &CoherencePair) -> Result<f64> {
    let amp_a = state.amplitude_of(&pair.ket_a)?;
    let amp_b = state.amplitude_of(&pair.ket_b)?;
    if amp_a.norm() < PHASE_FLOOR || amp_b.norm() < PHASE_FLOOR {
        return Err(Error::VanishingComponent);
    }
    Ok(wrap_phase(amp_b.arg() - amp_a.arg()))
}

/// The same relative phase read from a (possibly reduced) density matrix:
/// arg⟨b|ρ|a⟩, which reduces to arg(amp_b) − arg(amp_a) on pure states.
pub fn relative_phase_from_density(rho: &DensityMatrix, pair: &CoherencePair) -> Result<f64> {
    let a = rho.index_of(&pair.ket_a)?;
    let b = rho.index_of(&pair.ket_b)?;
    let elem = rho.entry(b, a);
    if elem.norm() < PHASE_FLOOR {
        return Err(Error::VanishingComponent);
    }
    Ok(wrap_phase(elem.arg()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{singlet_state, triplet_state, ModeSpec, StateVector};
    use approx::assert_abs_diff_eq;
    use ndarray::Array1;
    use std::sync::Arc;

    fn spin_spec(n: usize) -> Arc<NetworkSpec> {
        NetworkSpec::shared(vec![ModeSpec::Fermion; n]).unwrap()
    }

    #[test]
    fn basis_ket_density_is_a_single_diagonal_one() {
        let spec = spin_spec(2);
        let state = StateVector::basis_ket(spec, &OccupationKet(vec![1, 0])).unwrap();
        let rho = density_from_state(&state).unwrap();
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-12);
        let idx = rho.index_of(&OccupationKet(vec![1, 0])).unwrap();
        for i in 0..rho.dim() {
            for j in 0..rho.dim() {
                let expect = if i == idx && j == idx { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(rho.entry(i, j).re, expect, epsilon = 1e-12);
                assert_abs_diff_eq!(rho.entry(i, j).im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn uniform_superposition_density_is_all_halves() {
        let spec = spin_spec(1);
        let amp = Array1::from(vec![
            Complex64::new(1.0 / 2.0f64.sqrt(), 0.0),
            Complex64::new(1.0 / 2.0f64.sqrt(), 0.0),
        ]);
        let state = StateVector::from_amplitudes(spec, amp).unwrap();
        let rho = density_from_state(&state).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(rho.entry(i, j).re, 0.5, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn singlet_density_has_the_half_block_pattern() {
        let spec = spin_spec(2);
        let state = singlet_state(spec.clone(), 0, 1).unwrap();
        let rho = density_from_state(&state).unwrap();
        let a = rho.index_of(&OccupationKet(vec![0, 1])).unwrap();
        let b = rho.index_of(&OccupationKet(vec![1, 0])).unwrap();
        assert_abs_diff_eq!(rho.entry(a, a).re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.entry(b, b).re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.entry(a, b).re, -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.entry(b, a).re, -0.5, epsilon = 1e-12);
        rho.validate().unwrap();
    }

    #[test]
    fn tracing_one_spin_of_the_singlet_is_maximally_mixed() {
        let spec = spin_spec(2);
        let state = singlet_state(spec, 0, 1).unwrap();
        let reduced = partial_trace_state(&state, &[0]).unwrap();
        assert_eq!(reduced.dims(), &[2]);
        assert_abs_diff_eq!(reduced.entry(0, 0).re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(reduced.entry(1, 1).re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(reduced.entry(0, 1).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn product_state_partial_trace_factorizes() {
        // (α|0⟩+β|1⟩) ⊗ |1⟩: tracing the second spin returns the first factor.
        let spec = spin_spec(2);
        let alpha = Complex64::new(0.6, 0.0);
        let beta = Complex64::new(0.0, 0.8);
        let mut amp = Array1::zeros(4);
        let r01 = spec.rank_of(&OccupationKet(vec![0, 1])).unwrap();
        let r11 = spec.rank_of(&OccupationKet(vec![1, 1])).unwrap();
        amp[r01] = alpha;
        amp[r11] = beta;
        let state = StateVector::from_amplitudes(spec, amp).unwrap();
        let reduced = partial_trace_state(&state, &[0]).unwrap();
        assert_abs_diff_eq!(reduced.entry(0, 0).re, 0.36, epsilon = 1e-12);
        assert_abs_diff_eq!(reduced.entry(1, 1).re, 0.64, epsilon = 1e-12);
        assert_abs_diff_eq!(
            (reduced.entry(0, 1) - alpha * beta.conj()).norm(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn state_trace_agrees_with_density_contraction() {
        // Independent oracle: build the full density matrix and contract it
        // with the generic partial_trace; compare against the direct
        // state-level reduction.
        let spec = NetworkSpec::shared(vec![
            ModeSpec::Fermion,
            ModeSpec::Boson { cutoff: 2 },
            ModeSpec::Fermion,
        ])
        .unwrap();
        // An arbitrary normalized state with spread support.
        let dim = spec.total_dim();
        let mut amp = Array1::zeros(dim);
        for rank in 0..dim {
            let x = (rank as f64 + 1.0) / dim as f64;
            amp[rank] = Complex64::new(x, 0.3 - x * x);
        }
        let norm = amp.iter().map(|c: &Complex64| c.norm_sqr()).sum::<f64>().sqrt();
        let amp = amp.mapv(|c| c / norm);
        let state = StateVector::from_amplitudes(spec, amp).unwrap();
        let direct = partial_trace_state(&state, &[0, 2]).unwrap();
        let via_rho = partial_trace(&density_from_state(&state).unwrap(), &[0, 2]).unwrap();
        assert_eq!(direct.dims(), via_rho.dims());
        for i in 0..direct.dim() {
            for j in 0..direct.dim() {
                assert_abs_diff_eq!(
                    (direct.entry(i, j) - via_rho.entry(i, j)).norm(),
                    0.0,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn singlet_pair_coherence_is_half() {
        let spec = spin_spec(3);
        let state = singlet_state(spec, 0, 1).unwrap();
        let reduced = partial_trace_state(&state, &[0, 1]).unwrap();
        let pair = CoherencePair::new(OccupationKet(vec![0, 1]), OccupationKet(vec![1, 0]))
            .unwrap();
        assert_abs_diff_eq!(coherence(&reduced, &pair).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn decohered_mixture_has_zero_coherence() {
        let mut entries = Array2::zeros((2, 2));
        entries[[0, 0]] = Complex64::new(0.5, 0.0);
        entries[[1, 1]] = Complex64::new(0.5, 0.0);
        let rho = DensityMatrix::new(vec![2], entries).unwrap();
        let pair =
            CoherencePair::new(OccupationKet(vec![0]), OccupationKet(vec![1])).unwrap();
        assert_abs_diff_eq!(coherence(&rho, &pair).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn relative_phases_of_entangled_pairs() {
        let spec = spin_spec(2);
        let pair = CoherencePair::new(OccupationKet(vec![0, 1]), OccupationKet(vec![1, 0]))
            .unwrap();
        let plus = triplet_state(spec.clone(), 0, 1).unwrap();
        assert_abs_diff_eq!(relative_phase(&plus, &pair).unwrap(), 0.0, epsilon = 1e-12);
        let minus = singlet_state(spec, 0, 1).unwrap();
        assert_abs_diff_eq!(
            relative_phase(&minus, &pair).unwrap(),
            std::f64::consts::PI,
            epsilon = 1e-12
        );
        // Density-matrix route agrees on pure states.
        let rho = density_from_state(&minus).unwrap();
        assert_abs_diff_eq!(
            relative_phase_from_density(&rho, &pair).unwrap(),
            std::f64::consts::PI,
            epsilon = 1e-12
        );
    }

    #[test]
    fn vanishing_component_is_flagged() {
        let spec = spin_spec(2);
        let state = StateVector::basis_ket(spec, &OccupationKet(vec![0, 1])).unwrap();
        let pair = CoherencePair::new(OccupationKet(vec![0, 1]), OccupationKet(vec![1, 0]))
            .unwrap();
        assert!(matches!(
            relative_phase(&state, &pair),
            Err(Error::VanishingComponent)
        ));
    }

    #[test]
    fn non_density_inputs_are_rejected() {
        let mut entries = Array2::<Complex64>::zeros((2, 2));
        entries[[0, 0]] = Complex64::new(0.9, 0.0);
        entries[[1, 1]] = Complex64::new(0.5, 0.0);
        assert!(matches!(
            DensityMatrix::new(vec![2], entries),
            Err(Error::TraceNotOne { .. })
        ));
        let mut skew = Array2::<Complex64>::zeros((2, 2));
        skew[[0, 0]] = Complex64::new(1.0, 0.0);
        skew[[0, 1]] = Complex64::new(0.2, 0.0);
        assert!(matches!(
            DensityMatrix::new(vec![2], skew),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn keep_set_must_be_ascending_and_in_range() {
        let spec = spin_spec(2);
        let state = singlet_state(spec, 0, 1).unwrap();
        assert!(partial_trace_state(&state, &[]).is_err());
        assert!(partial_trace_state(&state, &[1, 0]).is_err());
        assert!(partial_trace_state(&state, &[0, 5]).is_err());
    }
}
