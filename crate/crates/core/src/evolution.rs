//! Time evolution engines.
//!
//! Three ways to move a state forward, all in the ħ = 2 convention
//! (propagator e^{−iHt/2}):
//!
//! * **quasi** — in the quasi-mode basis every occupation ket is a
//!   Hamiltonian eigenstate, so each amplitude just rotates by
//!   e^{−i(Σ_k n′_k Ω_k)t/2}; cost is polynomial in the occupied support.
//! * **dense** — brute-force oracle: materialize the Hamiltonian, take one
//!   Hermitian eigendecomposition, and rotate eigencomponents. Exactly
//!   unitary (unit-modulus eigenphases) but exponential in network size,
//!   hence the dimension guard.
//! * **phase-kick ensemble** — stochastic dephasing of a two-level
//!   superposition α|0⟩ + β|1⟩ by i.i.d. phase kicks, averaged over a seeded
//!   ensemble with a fixed reduction order.

use crate::error::{Error, Result};
use crate::fock::{FermionRepresentation, NetworkSpec, StateVector};
use crate::metrics::{
    coherence, partial_trace_state, relative_phase_from_density, CoherencePair,
};
use crate::ops::{expectation, FactorKind, HamiltonianSum};
use crate::quasiparticle::{
    quasi_site_frequencies, transform_state_to_spec, with_boson_cutoffs, TransformBasis,
    TransformDirection, TransformOptions,
};
use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use std::sync::Arc;

/// Default ceiling on the dense engine's matrix dimension.
pub const DENSE_GUARD_DEFAULT: usize = 4096;

/// Environment variable overriding the dense-dimension guard.
pub const DENSE_GUARD_ENV: &str = "SUSY_DFS_DENSE_GUARD";

/// Per-point leakage above which a series is marked tainted.
pub const TAINT_THRESHOLD: f64 = 1e-8;

/// Current dense guard: `SUSY_DFS_DENSE_GUARD` if set to a positive integer,
/// else the default of 4096. Non-numeric values fall back to the default.
pub fn dense_guard() -> usize {
    std::env::var(DENSE_GUARD_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&v| v > 0)
        .unwrap_or(DENSE_GUARD_DEFAULT)
}

/// Strictly ascending, non-negative sampling times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times[0] < 0.0 || !times[0].is_finite() {
            return Err(Error::BadTimeGrid);
        }
        for w in times.windows(2) {
            if !(w[1].is_finite() && w[1] > w[0]) {
                return Err(Error::BadTimeGrid);
            }
        }
        Ok(TimeGrid { times })
    }

    /// `points` evenly spaced times from `start` to `stop` inclusive.
    pub fn linspace(start: f64, stop: f64, points: usize) -> Result<Self> {
        if points == 0 {
            return Err(Error::BadTimeGrid);
        }
        if points == 1 {
            return TimeGrid::new(vec![start]);
        }
        let step = (stop - start) / (points - 1) as f64;
        TimeGrid::new((0..points).map(|i| start + step * i as f64).collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }
}

/// Rotate the amplitudes of a quasi-basis state:
/// |n′⟩ ↦ e^{−i(Σ_k n′_k Ω_k)t/2} |n′⟩. Exactly norm-preserving.
pub fn propagate_quasi(
    state: &StateVector,
    basis: TransformBasis,
    t: f64,
) -> Result<StateVector> {
    let spec = state.spec().clone();
    let freqs = quasi_site_frequencies(&spec, basis)?;
    let mut amplitudes = state.amplitudes().clone();
    for rank in 0..spec.total_dim() {
        let amp = amplitudes[rank];
        if amp.re == 0.0 && amp.im == 0.0 {
            continue;
        }
        let energy: f64 = (0..spec.n_modes())
            .map(|s| spec.occupation_at(rank, s) as f64 * freqs[s])
            .sum();
        amplitudes[rank] = amp * Complex64::from_polar(1.0, -energy * t / 2.0);
    }
    StateVector::from_amplitudes(spec, amplitudes)
}

/// Materialized e^{−iHt/2} via one Hermitian eigendecomposition, reusable
/// across grid times.
pub struct DensePropagator {
    spec: Arc<NetworkSpec>,
    eigenvalues: Array1<f64>,
    /// Columns are eigenvectors of the materialized Hamiltonian.
    eigenvectors: Array2<Complex64>,
}

impl DensePropagator {
    pub fn new(
        spec: Arc<NetworkSpec>,
        hamiltonian: &HamiltonianSum,
        rep: FermionRepresentation,
    ) -> Result<Self> {
        let dim = spec.total_dim();
        let guard = dense_guard();
        if dim > guard {
            return Err(Error::DenseGuardExceeded { dim, guard });
        }
        let matrix = hamiltonian.matrix(&spec, rep)?;
        let mut max_dev = 0.0f64;
        for i in 0..dim {
            for j in 0..=i {
                max_dev = max_dev.max((matrix[[i, j]] - matrix[[j, i]].conj()).norm());
            }
        }
        if max_dev > 1e-10 {
            return Err(Error::NotHermitian {
                max_dev,
                tol: 1e-10,
            });
        }
        let (vals, vecs) = matrix
            .eigh(UPLO::Lower)
            .map_err(|e| Error::Linalg(e.to_string()))?;
        // Backend convention: columns hold eigenvectors of the transposed
        // (conjugated) matrix; conjugate to recover eigenvectors of H.
        let eigenvectors = vecs.mapv(|c| c.conj());
        // Spot-check a few eigenpairs so a convention change fails loudly.
        let checks = dim.min(8);
        for k in 0..checks {
            let mut worst = 0.0f64;
            for r in 0..dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for c in 0..dim {
                    acc += matrix[[r, c]] * eigenvectors[[c, k]];
                }
                worst = worst.max((acc - vals[k] * eigenvectors[[r, k]]).norm());
            }
            let scale = 1.0 + vals[k].abs();
            if worst > 1e-8 * scale {
                return Err(Error::Linalg(format!(
                    "eigenpair {k} residual {worst:.3e} exceeds tolerance"
                )));
            }
        }
        Ok(DensePropagator {
            spec,
            eigenvalues: vals,
            eigenvectors,
        })
    }

    pub fn spec(&self) -> &Arc<NetworkSpec> {
        &self.spec
    }

    /// e^{−iHt/2}|ψ⟩ = V e^{−iΛt/2} V†|ψ⟩.
    pub fn apply(&self, state: &StateVector, t: f64) -> Result<StateVector> {
        if state.spec().as_ref() != self.spec.as_ref() {
            return Err(Error::DimensionMismatch {
                expected: self.spec.total_dim(),
                got: state.spec().total_dim(),
            });
        }
        let dim = self.spec.total_dim();
        let amps = state.amplitudes();
        let mut modal = vec![Complex64::new(0.0, 0.0); dim];
        for k in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..dim {
                acc += self.eigenvectors[[r, k]].conj() * amps[r];
            }
            modal[k] = acc * Complex64::from_polar(1.0, -self.eigenvalues[k] * t / 2.0);
        }
        let mut out = Array1::zeros(dim);
        for r in 0..dim {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..dim {
                acc += self.eigenvectors[[r, k]] * modal[k];
            }
            out[r] = acc;
        }
        StateVector::from_amplitudes(self.spec.clone(), out)
    }
}

/// One-shot dense propagation.
pub fn propagate_dense(
    state: &StateVector,
    hamiltonian: &HamiltonianSum,
    t: f64,
    rep: FermionRepresentation,
) -> Result<StateVector> {
    DensePropagator::new(state.spec().clone(), hamiltonian, rep)?.apply(state, t)
}

/// Copy a state into a network with enlarged bosonic cutoffs (kinds and mode
/// count must match; every cutoff must be at least the source's).
pub fn embed_state(state: &StateVector, target: Arc<NetworkSpec>) -> Result<StateVector> {
    let spec = state.spec();
    if spec.n_modes() != target.n_modes() {
        return Err(Error::DimensionMismatch {
            expected: spec.n_modes(),
            got: target.n_modes(),
        });
    }
    for site in 0..spec.n_modes() {
        let src = spec.modes()[site];
        let dst = target.modes()[site];
        if src.is_boson() != dst.is_boson() || dst.max_occupation() < src.max_occupation() {
            return Err(Error::InvalidExpression(format!(
                "target network cannot hold site {site}"
            )));
        }
    }
    let mut out = Array1::zeros(target.total_dim());
    for rank in 0..spec.total_dim() {
        let amp = state.amplitude(rank);
        if amp.re == 0.0 && amp.im == 0.0 {
            continue;
        }
        let ket = spec.ket_of(rank);
        out[target.rank_of(&ket)?] = amp;
    }
    StateVector::from_amplitudes(target, out)
}

/// Instantaneous amplitude flow out of the truncated space: the norm of the
/// component of H|ψ⟩ that lands beyond the bosonic cutoffs, measured by
/// re-applying H in a network enlarged by each term's maximum net creation
/// count. Zero means the cutoff is invisible to the dynamics at this state.
pub fn truncation_flux(
    state: &StateVector,
    hamiltonian: &HamiltonianSum,
    rep: FermionRepresentation,
) -> Result<f64> {
    let spec = state.spec();
    let boson_sites = spec.boson_sites();
    if boson_sites.is_empty() {
        return Ok(0.0);
    }
    // Per-site headroom: the largest net creation count any single term
    // applies to that site.
    let mut headroom = vec![0i64; spec.n_modes()];
    for term in hamiltonian.terms() {
        let mut net = vec![0i64; spec.n_modes()];
        for &(site, kind) in &term.factors {
            match kind {
                FactorKind::Create => net[site] += 1,
                FactorKind::Annihilate => net[site] -= 1,
                _ => {}
            }
        }
        for site in 0..spec.n_modes() {
            headroom[site] = headroom[site].max(net[site].max(0));
        }
    }
    if headroom.iter().all(|&h| h == 0) {
        return Ok(0.0);
    }
    let mut modes = spec.modes().to_vec();
    for &site in &boson_sites {
        let cutoff = modes[site].max_occupation() + headroom[site] as u32;
        modes[site] = crate::fock::ModeSpec::Boson { cutoff };
    }
    let enlarged = NetworkSpec::shared(modes)?;
    let embedded = embed_state(state, enlarged.clone())?;
    let image = hamiltonian.apply(&embedded, rep)?;
    let mut out_norm2 = 0.0;
    for rank in 0..enlarged.total_dim() {
        let amp = image.amplitude(rank);
        if amp.re == 0.0 && amp.im == 0.0 {
            continue;
        }
        let beyond = boson_sites
            .iter()
            .any(|&s| enlarged.occupation_at(rank, s) > spec.modes()[s].max_occupation());
        if beyond {
            out_norm2 += amp.norm_sqr();
        }
    }
    Ok(out_norm2.sqrt())
}

/// Per-kick phase distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KickDistribution {
    /// Zero-mean normal with the given standard deviation.
    GaussianPerKick { sigma: f64 },
    /// Uniform on (−width/2, +width/2).
    UniformPerKick { width: f64 },
}

/// Stochastic dephasing model: kicks arrive at a fixed rate, each drawing an
/// independent phase from the distribution; all randomness flows from `seed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseKickModel {
    pub distribution: KickDistribution,
    pub kicks_per_unit_time: f64,
    pub seed: u64,
}

impl PhaseKickModel {
    pub fn validate(&self) -> Result<()> {
        let width_ok = match self.distribution {
            KickDistribution::GaussianPerKick { sigma } => sigma > 0.0 && sigma.is_finite(),
            KickDistribution::UniformPerKick { width } => width > 0.0 && width.is_finite(),
        };
        if !width_ok || !(self.kicks_per_unit_time > 0.0) {
            return Err(Error::InvalidExpression(
                "phase-kick model needs a positive kick rate and width".into(),
            ));
        }
        Ok(())
    }

    /// Number of kicks accumulated by time `t`.
    pub fn kicks_by(&self, t: f64) -> u64 {
        (self.kicks_per_unit_time * t).floor().max(0.0) as u64
    }
}

/// Closed-form ensemble-mean coherence |E e^{2iφ(t)}| for the model.
pub fn predicted_kick_coherence(model: &PhaseKickModel, t: f64) -> f64 {
    let k = model.kicks_by(t) as f64;
    match model.distribution {
        // E[e^{2iφ}] for φ ~ N(0, kσ²) is e^{−2kσ²}.
        KickDistribution::GaussianPerKick { sigma } => (-2.0 * k * sigma * sigma).exp(),
        // Per kick: (1/w)∫ e^{2iφ} dφ over (−w/2, w/2) = sin(w)/w.
        KickDistribution::UniformPerKick { width } => {
            (width.sin() / width).abs().powf(k)
        }
    }
}

/// Ensemble-averaged coherence series with its standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub times: Vec<f64>,
    /// |mean over samples of e^{2iφ(t)}| — normalized so the t = 0 value is 1.
    pub coherence: Vec<f64>,
    pub std_error: Vec<f64>,
    pub samples: usize,
}

/// Evolve α|0⟩ + β|1⟩ under the phase-kick model. Each kick multiplies the
/// components by e^{±iφ_j}, so the off-diagonal of the ensemble-averaged
/// density matrix is αβ*·E[e^{2iφ}]; reported coherence is |E e^{2iφ}|, the
/// off-diagonal magnitude normalized to its t = 0 value. A one-component
/// superposition (|αβ| below 1e-12) dephases nowhere: the whole series is 1
/// with zero error.
///
/// Sample j draws from stream j+1 of a counter-based generator seeded by the
/// model seed, and the reduction runs in fixed sample order, so the result is
/// bit-identical for a given (model, grid, samples) regardless of platform.
pub fn phase_kick_ensemble(
    alpha: Complex64,
    beta: Complex64,
    model: &PhaseKickModel,
    grid: &TimeGrid,
    samples: usize,
) -> Result<EnsembleResult> {
    model.validate()?;
    if samples == 0 {
        return Err(Error::InvalidExpression(
            "phase-kick ensemble needs at least one sample".into(),
        ));
    }
    let norm = alpha.norm_sqr() + beta.norm_sqr();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized { norm: norm.sqrt() });
    }
    let times = grid.times().to_vec();
    let nt = times.len();
    if (alpha * beta).norm() < 1e-12 {
        return Ok(EnsembleResult {
            times,
            coherence: vec![1.0; nt],
            std_error: vec![0.0; nt],
            samples,
        });
    }
    let kick_counts: Vec<u64> = times.iter().map(|&t| model.kicks_by(t)).collect();

    let mut sum_re = vec![0.0f64; nt];
    let mut sum_im = vec![0.0f64; nt];
    let mut sum_re2 = vec![0.0f64; nt];
    let mut sum_im2 = vec![0.0f64; nt];
    let mut sum_reim = vec![0.0f64; nt];
    for sample in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
        rng.set_stream(sample as u64 + 1);
        let mut drawn = 0u64;
        let mut phi = 0.0f64;
        for g in 0..nt {
            while drawn < kick_counts[g] {
                let kick = match model.distribution {
                    KickDistribution::GaussianPerKick { sigma } => {
                        Normal::new(0.0, sigma).unwrap().sample(&mut rng)
                    }
                    KickDistribution::UniformPerKick { width } => {
                        Uniform::new(-width / 2.0, width / 2.0).sample(&mut rng)
                    }
                };
                phi += kick;
                drawn += 1;
            }
            let z = Complex64::from_polar(1.0, 2.0 * phi);
            sum_re[g] += z.re;
            sum_im[g] += z.im;
            sum_re2[g] += z.re * z.re;
            sum_im2[g] += z.im * z.im;
            sum_reim[g] += z.re * z.im;
        }
    }

    let n = samples as f64;
    let mut coherence_series = Vec::with_capacity(nt);
    let mut std_error = Vec::with_capacity(nt);
    for g in 0..nt {
        let mre = sum_re[g] / n;
        let mim = sum_im[g] / n;
        let c = (mre * mre + mim * mim).sqrt();
        coherence_series.push(c);
        if samples < 2 {
            std_error.push(0.0);
            continue;
        }
        let var_re = (sum_re2[g] - n * mre * mre) / (n - 1.0);
        let var_im = (sum_im2[g] - n * mim * mim) / (n - 1.0);
        let cov = (sum_reim[g] - n * mre * mim) / (n - 1.0);
        let se = if c > 1e-12 {
            // Delta method on |(mre, mim)|.
            let gx = mre / c;
            let gy = mim / c;
            ((gx * gx * var_re + 2.0 * gx * gy * cov + gy * gy * var_im) / n)
                .max(0.0)
                .sqrt()
        } else {
            ((var_re + var_im) / n).max(0.0).sqrt()
        };
        std_error.push(se);
    }
    Ok(EnsembleResult {
        times,
        coherence: coherence_series,
        std_error,
        samples,
    })
}

/// What to record at each grid time.
#[derive(Debug, Clone)]
pub enum Observable {
    /// Re⟨ψ|O|ψ⟩ of a Hermitian expression.
    Expectation { label: String, op: HamiltonianSum },
    /// |ρ_ab| on the reduced density matrix over `keep`.
    Coherence {
        label: String,
        keep: Vec<usize>,
        pair: CoherencePair,
    },
    /// arg⟨b|ρ|a⟩ on the reduced density matrix over `keep`.
    RelativePhase {
        label: String,
        keep: Vec<usize>,
        pair: CoherencePair,
    },
}

impl Observable {
    pub fn label(&self) -> &str {
        match self {
            Observable::Expectation { label, .. } => label,
            Observable::Coherence { label, .. } => label,
            Observable::RelativePhase { label, .. } => label,
        }
    }
}

/// Which deterministic engine drives [`evolve_observable`].
#[derive(Clone, Copy)]
pub enum Engine<'a> {
    Dense { hamiltonian: &'a HamiltonianSum },
    Quasi { basis: TransformBasis<'a> },
}

/// One record of an observable time series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPoint {
    pub time: f64,
    pub observable: String,
    pub value: f64,
    pub leakage: f64,
}

fn eval_observables(
    state: &StateVector,
    observables: &[Observable],
    rep: FermionRepresentation,
    time: f64,
    leakage: f64,
    out: &mut Vec<SeriesPoint>,
) -> Result<()> {
    // Truncation loss leaves the state slightly sub-normalized; metrics are
    // evaluated on the renormalized direction and the loss stays visible in
    // the leakage column.
    let norm = state.norm();
    if norm < 1e-6 {
        return Err(Error::InvalidExpression(
            "state norm collapsed; the truncated network cannot represent this evolution".into(),
        ));
    }
    let normalized = if (norm - 1.0).abs() > 1e-12 {
        state.normalized()?
    } else {
        state.clone()
    };
    for obs in observables {
        let value = match obs {
            Observable::Expectation { op, .. } => expectation(&normalized, op, rep)?.re,
            Observable::Coherence { keep, pair, .. } => {
                let reduced = partial_trace_state(&normalized, keep)?;
                coherence(&reduced, pair)?
            }
            Observable::RelativePhase { keep, pair, .. } => {
                let reduced = partial_trace_state(&normalized, keep)?;
                relative_phase_from_density(&reduced, pair)?
            }
        };
        out.push(SeriesPoint {
            time,
            observable: obs.label().to_string(),
            value,
            leakage,
        });
    }
    Ok(())
}

/// Evolve `initial` across the grid and record every observable at every
/// time. Records arrive sorted by (time, observable order given).
pub fn evolve_observable(
    initial: &StateVector,
    engine: Engine,
    grid: &TimeGrid,
    observables: &[Observable],
    rep: FermionRepresentation,
    allow_multi_excitation: bool,
) -> Result<Vec<SeriesPoint>> {
    let mut out = Vec::with_capacity(grid.times().len() * observables.len());
    match engine {
        Engine::Dense { hamiltonian } => {
            let propagator =
                DensePropagator::new(initial.spec().clone(), hamiltonian, rep)?;
            for &t in grid.times() {
                let state = propagator.apply(initial, t)?;
                let leakage = truncation_flux(&state, hamiltonian, rep)?;
                eval_observables(&state, observables, rep, t, leakage, &mut out)?;
            }
        }
        Engine::Quasi { basis } => {
            let spec = initial.spec().clone();
            let options = TransformOptions {
                rep,
                allow_multi_excitation,
            };
            // Give the quasi-basis representation enough bosonic headroom to
            // hold the state's total excitation count: transforms are then
            // exact and all leakage is attributable to the way back.
            let boson_sites = spec.boson_sites();
            let quasi_spec = if boson_sites.is_empty() {
                spec.clone()
            } else {
                let mut worst = 1u32;
                for rank in 0..spec.total_dim() {
                    let amp = initial.amplitude(rank);
                    if amp.re == 0.0 && amp.im == 0.0 {
                        continue;
                    }
                    let total: u32 = boson_sites
                        .iter()
                        .map(|&s| spec.occupation_at(rank, s))
                        .sum();
                    worst = worst.max(total);
                }
                with_boson_cutoffs(&spec, &boson_sites, worst)?
            };
            let forward = transform_state_to_spec(
                initial,
                basis,
                TransformDirection::ToQuasi,
                quasi_spec,
                &options,
            )?;
            for &t in grid.times() {
                let rotated = propagate_quasi(&forward.state, basis, t)?;
                let back = transform_state_to_spec(
                    &rotated,
                    basis,
                    TransformDirection::FromQuasi,
                    spec.clone(),
                    &options,
                )?;
                let leakage = forward.leakage + back.leakage;
                eval_observables(&back.state, observables, rep, t, leakage, &mut out)?;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{ModeSpec, OccupationKet};
    use crate::hamiltonians::{build_boson_network, number_total, CouplingMatrix};
    use crate::quasiparticle::diagonalize_coupling;
    use approx::assert_abs_diff_eq;

    const REP: FermionRepresentation = FermionRepresentation::StringCorrected;

    #[test]
    fn time_grids_must_ascend() {
        assert!(TimeGrid::new(vec![]).is_err());
        assert!(TimeGrid::new(vec![-1.0]).is_err());
        assert!(TimeGrid::new(vec![0.0, 0.0]).is_err());
        assert!(TimeGrid::new(vec![0.0, 2.0, 1.0]).is_err());
        let g = TimeGrid::linspace(0.0, 10.0, 11).unwrap();
        assert_eq!(g.times().len(), 11);
        assert_abs_diff_eq!(g.times()[3], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn quasi_propagation_is_identity_at_zero_and_unitary() {
        let spec = NetworkSpec::shared(vec![ModeSpec::Boson { cutoff: 2 }; 2]).unwrap();
        let coupling = CouplingMatrix::random_hermitian(2, 4, 1.0);
        let basis = diagonalize_coupling(&coupling).unwrap();
        let r = spec.rank_of(&OccupationKet(vec![1, 1])).unwrap();
        let mut amp = Array1::zeros(spec.total_dim());
        amp[r] = Complex64::new(1.0, 0.0);
        let state = StateVector::from_amplitudes(spec, amp).unwrap();
        let same = propagate_quasi(&state, TransformBasis::Whole(&basis), 0.0).unwrap();
        assert_abs_diff_eq!((same.amplitude(r) - 1.0).norm(), 0.0, epsilon = 1e-15);
        let later = propagate_quasi(&state, TransformBasis::Whole(&basis), 3.7).unwrap();
        assert_abs_diff_eq!(later.norm(), 1.0, epsilon = 1e-12);
        // Single occupied ket: phase e^{−i(Ω_0+Ω_1)t/2}.
        let expect = Complex64::from_polar(
            1.0,
            -(basis.omega()[0] + basis.omega()[1]) * 3.7 / 2.0,
        );
        assert_abs_diff_eq!((later.amplitude(r) - expect).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn dense_engine_matches_quasi_phases_on_eigenstates() {
        let spec = NetworkSpec::shared(vec![ModeSpec::Boson { cutoff: 2 }; 2]).unwrap();
        let coupling = CouplingMatrix::random_hermitian(2, 12, 0.9);
        let h = build_boson_network(&spec, &coupling).unwrap();
        let basis = diagonalize_coupling(&coupling).unwrap();
        // Build the quasi eigenstate b′_1⁺|0⟩ in the site basis.
        let quasi_ket = crate::fock::single_excitation(spec.clone(), 1).unwrap();
        let site_state = crate::quasiparticle::transform_state(
            &quasi_ket,
            TransformBasis::Whole(&basis),
            TransformDirection::FromQuasi,
            &TransformOptions::default(),
        )
        .unwrap()
        .state;
        let t = 2.3;
        let dense = propagate_dense(&site_state, &h, t, REP).unwrap();
        let overlap = site_state.inner(&dense);
        // Eigenstate: the overlap is exactly the eigenphase.
        let expect = Complex64::from_polar(1.0, -basis.omega()[1] * t / 2.0);
        assert_abs_diff_eq!((overlap - expect).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn dense_and_quasi_engines_agree_on_a_seeded_network() {
        let spec = NetworkSpec::shared(vec![ModeSpec::Boson { cutoff: 2 }; 3]).unwrap();
        let coupling = CouplingMatrix::random_hermitian(3, 33, 1.1);
        let h = build_boson_network(&spec, &coupling).unwrap();
        let basis = diagonalize_coupling(&coupling).unwrap();
        // Two-excitation initial state within every cutoff.
        let r = spec.rank_of(&OccupationKet(vec![1, 0, 1])).unwrap();
        let q = spec.rank_of(&OccupationKet(vec![0, 1, 0])).unwrap();
        let mut amp = Array1::zeros(spec.total_dim());
        amp[r] = Complex64::new(0.8, 0.0);
        amp[q] = Complex64::new(0.0, 0.6);
        let state = StateVector::from_amplitudes(spec.clone(), amp).unwrap();
        let opts = TransformOptions {
            rep: REP,
            allow_multi_excitation: false,
        };
        for &t in &[0.0, 0.9, 4.4, 10.0] {
            let dense = propagate_dense(&state, &h, t, REP).unwrap();
            let fwd = crate::quasiparticle::transform_state(
                &state,
                TransformBasis::Whole(&basis),
                TransformDirection::ToQuasi,
                &opts,
            )
            .unwrap();
            let rot = propagate_quasi(&fwd.state, TransformBasis::Whole(&basis), t).unwrap();
            let back = crate::quasiparticle::transform_state(
                &rot,
                TransformBasis::Whole(&basis),
                TransformDirection::FromQuasi,
                &opts,
            )
            .unwrap();
            for rank in 0..spec.total_dim() {
                assert!(
                    (dense.amplitude(rank) - back.state.amplitude(rank)).norm() < 1e-9,
                    "engines disagree at t={t}, rank {rank}"
                );
            }
        }
    }

    #[test]
    fn propagation_composes() {
        let spec = NetworkSpec::shared(vec![ModeSpec::Boson { cutoff: 2 }; 2]).unwrap();
        let coupling = CouplingMatrix::random_hermitian(2, 51, 1.0);
        let h = build_boson_network(&spec, &coupling).unwrap();
        let state = crate::fock::single_excitation(spec.clone(), 0).unwrap();
        let once = propagate_dense(&state, &h, 1.3 + 2.1, REP).unwrap();
        let twice = propagate_dense(
            &propagate_dense(&state, &h, 1.3, REP).unwrap(),
            &h,
            2.1,
            REP,
        )
        .unwrap();
        for rank in 0..spec.total_dim() {
            assert!((once.amplitude(rank) - twice.amplitude(rank)).norm() < 1e-9);
        }
    }

    #[test]
    fn dense_guard_is_enforced_and_overridable() {
        // 6 bosons at cutoff 3 → dim 4^6 = 4096 passes; cutoff 4 → 5^6 > 4096.
        let big = NetworkSpec::shared(vec![ModeSpec::Boson { cutoff: 4 }; 6]).unwrap();
        let h = number_total(&big);
        let state = StateVector::vacuum(big);
        match propagate_dense(&state, &h, 1.0, REP) {
            Err(Error::DenseGuardExceeded { dim, guard }) => {
                assert_eq!(dim, 15625);
                assert_eq!(guard, DENSE_GUARD_DEFAULT);
            }
            other => panic!("expected guard error, got {:?}", other.map(|_| ())),
        }
    }

    #[test]
    fn truncation_flux_vanishes_inside_conserved_sectors() {
        let spec = NetworkSpec::shared(vec![ModeSpec::Boson { cutoff: 2 }; 2]).unwrap();
        let coupling = CouplingMatrix::random_hermitian(2, 3, 1.0);
        let h = build_boson_network(&spec, &coupling).unwrap();
        // Total excitations 2 ≤ cutoff: hopping cannot cross the boundary.
        let r = spec.rank_of(&OccupationKet(vec![1, 1])).unwrap();
        let mut amp = Array1::zeros(spec.total_dim());
        amp[r] = Complex64::new(1.0, 0.0);
        let inside = StateVector::from_amplitudes(spec.clone(), amp).unwrap();
        assert_abs_diff_eq!(truncation_flux(&inside, &h, REP).unwrap(), 0.0, epsilon = 1e-14);

        // A boundary state does radiate through the cutoff.
        let r22 = spec.rank_of(&OccupationKet(vec![2, 2])).unwrap();
        let mut amp = Array1::zeros(spec.total_dim());
        amp[r22] = Complex64::new(1.0, 0.0);
        let boundary = StateVector::from_amplitudes(spec, amp).unwrap();
        assert!(truncation_flux(&boundary, &h, REP).unwrap() > 0.1);
    }

    #[test]
    fn kick_ensemble_is_deterministic_and_tracks_the_gaussian_law() {
        let model = PhaseKickModel {
            distribution: KickDistribution::GaussianPerKick { sigma: 0.12 },
            kicks_per_unit_time: 3.0,
            seed: 1234,
        };
        let grid = TimeGrid::linspace(0.0, 8.0, 9).unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        let alpha = Complex64::new(s, 0.0);
        let beta = Complex64::new(s, 0.0);
        let a = phase_kick_ensemble(alpha, beta, &model, &grid, 4000).unwrap();
        let b = phase_kick_ensemble(alpha, beta, &model, &grid, 4000).unwrap();
        assert_eq!(a, b);
        assert_abs_diff_eq!(a.coherence[0], 1.0, epsilon = 1e-12);
        for g in 0..grid.times().len() {
            let predicted = predicted_kick_coherence(&model, grid.times()[g]);
            let dev = (a.coherence[g] - predicted).abs();
            let budget = 4.0 * a.std_error[g] + 1e-9;
            assert!(
                dev <= budget,
                "t={}: measured {} vs predicted {} (budget {})",
                grid.times()[g],
                a.coherence[g],
                predicted,
                budget
            );
        }
    }

    #[test]
    fn kick_ensemble_leaves_eigenstates_alone() {
        let model = PhaseKickModel {
            distribution: KickDistribution::GaussianPerKick { sigma: 0.5 },
            kicks_per_unit_time: 10.0,
            seed: 9,
        };
        let grid = TimeGrid::linspace(0.0, 5.0, 6).unwrap();
        let r = phase_kick_ensemble(
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            &model,
            &grid,
            64,
        )
        .unwrap();
        assert!(r.coherence.iter().all(|&c| c == 1.0));
        assert!(r.std_error.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn zero_hamiltonian_series_is_flat() {
        let spec = NetworkSpec::shared(vec![ModeSpec::Fermion; 2]).unwrap();
        let h = HamiltonianSum::zero();
        let state = crate::fock::triplet_state(spec.clone(), 0, 1).unwrap();
        let grid = TimeGrid::linspace(0.0, 3.0, 4).unwrap();
        let obs = vec![Observable::Coherence {
            label: "coh".into(),
            keep: vec![0, 1],
            pair: CoherencePair::new(OccupationKet(vec![0, 1]), OccupationKet(vec![1, 0]))
                .unwrap(),
        }];
        let series = evolve_observable(
            &state,
            Engine::Dense { hamiltonian: &h },
            &grid,
            &obs,
            REP,
            false,
        )
        .unwrap();
        assert_eq!(series.len(), 4);
        for p in &series {
            assert_abs_diff_eq!(p.value, 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(p.leakage, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn energy_is_a_constant_of_motion() {
        let spec = NetworkSpec::shared(vec![ModeSpec::Boson { cutoff: 2 }; 2]).unwrap();
        let coupling = CouplingMatrix::random_hermitian(2, 70, 1.0);
        let h = build_boson_network(&spec, &coupling).unwrap();
        let state = crate::fock::single_excitation(spec.clone(), 0).unwrap();
        let grid = TimeGrid::linspace(0.0, 6.0, 7).unwrap();
        let obs = vec![
            Observable::Expectation {
                label: "energy".into(),
                op: h.clone(),
            },
            Observable::Expectation {
                label: "number".into(),
                op: number_total(&spec),
            },
        ];
        let series = evolve_observable(
            &state,
            Engine::Dense { hamiltonian: &h },
            &grid,
            &obs,
            REP,
            false,
        )
        .unwrap();
        let e0 = series
            .iter()
            .find(|p| p.observable == "energy")
            .unwrap()
            .value;
        for p in &series {
            match p.observable.as_str() {
                "energy" => assert_abs_diff_eq!(p.value, e0, epsilon = 1e-9),
                "number" => assert_abs_diff_eq!(p.value, 1.0, epsilon = 1e-9),
                _ => unreachable!(),
            }
        }
    }

    #[test]
    fn quasi_engine_series_matches_dense_series() {
        let spec = NetworkSpec::shared(vec![ModeSpec::Boson { cutoff: 2 }; 3]).unwrap();
        let coupling = CouplingMatrix::random_hermitian(3, 90, 0.8);
        let h = build_boson_network(&spec, &coupling).unwrap();
        let basis = diagonalize_coupling(&coupling).unwrap();
        let state = crate::fock::single_excitation(spec.clone(), 1).unwrap();
        let grid = TimeGrid::linspace(0.0, 9.0, 10).unwrap();
        let obs = vec![Observable::Expectation {
            label: "n0".into(),
            op: crate::ops::OperatorSum::single(0, FactorKind::Number),
        }];
        let dense = evolve_observable(
            &state,
            Engine::Dense { hamiltonian: &h },
            &grid,
            &obs,
            REP,
            false,
        )
        .unwrap();
        let quasi = evolve_observable(
            &state,
            Engine::Quasi {
                basis: TransformBasis::Whole(&basis),
            },
            &grid,
            &obs,
            REP,
            false,
        )
        .unwrap();
        assert_eq!(dense.len(), quasi.len());
        for (d, q) in dense.iter().zip(&quasi) {
            assert_abs_diff_eq!(d.value, q.value, epsilon = 1e-9);
            assert!(q.leakage < 1e-12);
        }
    }
}
