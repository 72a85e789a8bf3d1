//! Python bindings for the oscillator-network simulator. The surface is
//! deliberately small: run a scenario document end to end, evolve a
//! dephasing-protected spin pair, check the supercharge algebra, and
//! diagonalize a coupling matrix — enough to drive the library from Python
//! without mirroring the whole Rust API.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use susy_dfs::{
    build_dephasing_interaction, build_supercharge, diagonalize_coupling, evolve_observable,
    results_csv, run_metadata, run_scenario as run_scenario_core, singlet_state, susy_hamiltonian,
    CoherencePair, CouplingMatrix, Engine, FermionRepresentation, ModeSpec, NetworkSpec,
    Observable, OccupationKet, PauliAxis, Scenario, StateVector, SusyNetworkSpec, TimeGrid,
};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Version string of the underlying simulation library.
#[pyfunction]
fn version() -> &'static str {
    susy_dfs::build_version()
}

/// Run a scenario document (the same JSON the CLI accepts) and return
/// `(results_csv, metadata_json)`.
#[pyfunction]
fn run_scenario(json_text: &str) -> PyResult<(String, String)> {
    let scenario: Scenario = serde_json::from_str(json_text).map_err(err)?;
    let out = run_scenario_core(&scenario).map_err(err)?;
    let csv = results_csv(&out.records);
    let meta = run_metadata(&scenario, &out).map_err(err)?;
    let meta_json = serde_json::to_string_pretty(&meta).map_err(err)?;
    Ok((csv, meta_json))
}

/// Coherence |ρ₀₁| of a two-spin singlet coupled collectively to
/// `len(env_weights)` environment spins along `axis` ("x" | "y" | "z"),
/// evaluated at the given times. Collective coupling makes the whole series
/// 0.5 regardless of axis or weights.
#[pyfunction]
fn singlet_coherence(axis: &str, env_weights: Vec<f64>, times: Vec<f64>) -> PyResult<Vec<f64>> {
    let axis = match axis.to_ascii_lowercase().as_str() {
        "x" => PauliAxis::X,
        "y" => PauliAxis::Y,
        "z" => PauliAxis::Z,
        other => return Err(err(format!("unknown axis {other:?}; expected x, y, or z"))),
    };
    if env_weights.is_empty() {
        return Err(err("need at least one environment spin"));
    }
    let n_env = env_weights.len();
    let spec = NetworkSpec::shared(vec![ModeSpec::Fermion; 2 + n_env]).map_err(err)?;
    let env_sites: Vec<usize> = (2..2 + n_env).collect();
    // Weights are flattened system-major; both system spins get the same
    // environment row — that shared row is what protects the singlet.
    let mut flat = Vec::with_capacity(2 * n_env);
    flat.extend_from_slice(&env_weights);
    flat.extend_from_slice(&env_weights);
    let hamiltonian =
        build_dephasing_interaction(&spec, &[0, 1], &env_sites, &flat, axis).map_err(err)?;
    let initial = singlet_state(spec, 0, 1).map_err(err)?;
    let grid = TimeGrid::new(times).map_err(err)?;
    let observable = Observable::Coherence {
        label: "coherence".into(),
        keep: vec![0, 1],
        pair: CoherencePair::new(OccupationKet(vec![1, 0]), OccupationKet(vec![0, 1]))
            .map_err(err)?,
    };
    let series = evolve_observable(
        &initial,
        Engine::Dense {
            hamiltonian: &hamiltonian,
        },
        &grid,
        std::slice::from_ref(&observable),
        FermionRepresentation::SpinTensor,
        false,
    )
    .map_err(err)?;
    Ok(series.into_iter().map(|p| p.value).collect())
}

/// Worst-case residual of the supercharge algebra on an `n_pairs()`
/// oscillator network: Q must swap the paired single-excitation states, Q²
/// must return them with unit eigenvalue, and both Q and Q² must annihilate
/// the vacuum. Exact arithmetic makes this 0.0.
#[pyfunction]
fn supercharge_residual(n_pairs: usize) -> PyResult<f64> {
    let rep = FermionRepresentation::StringCorrected;
    let spec = SusyNetworkSpec::new(n_pairs).map_err(err)?;
    let network = spec.network().map_err(err)?;
    let weights = vec![Complex64::new(1.0, 0.0); n_pairs];
    let q = build_supercharge(&spec, 0, &weights).map_err(err)?;
    let h = susy_hamiltonian(&q);

    let diff = |a: &StateVector, b: &StateVector| -> f64 {
        a.amplitudes()
            .iter()
            .zip(b.amplitudes().iter())
            .fold(0.0f64, |acc, (x, y)| acc.max((x - y).norm()))
    };

    let mut worst: f64 = 0.0;
    for pair in 0..n_pairs {
        let mut boson_occ = vec![0u32; network.n_modes()];
        boson_occ[spec.boson_site(pair)] = 1;
        let mut fermion_occ = vec![0u32; network.n_modes()];
        fermion_occ[spec.fermion_site(pair)] = 1;
        let boson_one =
            StateVector::basis_ket(network.clone(), &OccupationKet(boson_occ)).map_err(err)?;
        let fermion_one =
            StateVector::basis_ket(network.clone(), &OccupationKet(fermion_occ)).map_err(err)?;
        worst = worst.max(diff(&q.apply(&fermion_one, rep).map_err(err)?, &boson_one));
        worst = worst.max(diff(&q.apply(&boson_one, rep).map_err(err)?, &fermion_one));
        worst = worst.max(diff(&h.apply(&boson_one, rep).map_err(err)?, &boson_one));
        worst = worst.max(diff(&h.apply(&fermion_one, rep).map_err(err)?, &fermion_one));
    }
    let vacuum = StateVector::vacuum(network);
    worst = worst.max(q.apply(&vacuum, rep).map_err(err)?.norm());
    worst = worst.max(h.apply(&vacuum, rep).map_err(err)?.norm());
    Ok(worst)
}

/// Diagonalize a hermitian coupling matrix. Returns `(u, omega, defect)`:
/// the unitary's rows as lists of complex numbers, the real eigenfrequencies,
/// and the max-norm unitarity defect of `u`.
#[pyfunction]
fn diagonalize(matrix: Vec<Vec<Complex64>>) -> PyResult<(Vec<Vec<Complex64>>, Vec<f64>, f64)> {
    let coupling = CouplingMatrix::from_rows(&matrix).map_err(err)?;
    let basis = diagonalize_coupling(&coupling).map_err(err)?;
    let n = coupling.n();
    let u = (0..n)
        .map(|i| (0..n).map(|j| basis.u()[[i, j]]).collect())
        .collect();
    Ok((u, basis.omega().to_vec(), basis.unitarity_defect()))
}

#[pymodule]
fn susy_dfs_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(version, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(singlet_coherence, m)?)?;
    m.add_function(wrap_pyfunction!(supercharge_residual, m)?)?;
    m.add_function(wrap_pyfunction!(diagonalize, m)?)?;
    Ok(())
}
