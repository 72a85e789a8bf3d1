//! Scenario files: the JSON surface describing one simulation run.
//!
//! A scenario names a network, its couplings, an initial state, an engine,
//! a time grid, and the observables to record. Parsing is strict — unknown
//! fields are errors, every site reference is validated against the network,
//! and diagnostics name the offending field — because a silently ignored
//! typo in a coupling block would invalidate the physics downstream.

use crate::error::{Error, Result};
use crate::evolution::{KickDistribution, Observable, PhaseKickModel, TimeGrid};
use crate::fock::{
    singlet_state, triplet_state, FermionRepresentation, ModeSpec, NetworkSpec, OccupationKet,
    PauliAxis, StateVector,
};
use crate::hamiltonians::{
    boson_hopping, build_dephasing_interaction, build_fermion_network_spin, build_mixed_interaction,
    fermion_hopping, CouplingMatrix,
};
use crate::metrics::CoherencePair;
use crate::ops::{FactorKind, HamiltonianSum, OpTerm, OperatorSum};
use crate::quasiparticle::{diagonalize_coupling, BlockQuasiBasis, QuasiBasis};
use crate::susy::{build_dfs_state, build_quasi_dfs_state, QubitSign, SusyNetworkSpec, SusyQubit};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::path::Path;
use std::sync::Arc;

/// The one scenario schema version this build reads and writes.
pub const SCHEMA_VERSION: u32 = 1;

/// A complex number in scenario JSON: either a bare real or an `[re, im]`
/// pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexSpec {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexSpec {
    pub fn to_complex(self) -> Complex64 {
        match self {
            ComplexSpec::Real(re) => Complex64::new(re, 0.0),
            ComplexSpec::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum ModeEntry {
    Boson { cutoff: u32 },
    Fermion,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    pub modes: Vec<ModeEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisSpec {
    X,
    Y,
    Z,
}

impl AxisSpec {
    pub fn to_axis(self) -> PauliAxis {
        match self {
            AxisSpec::X => PauliAxis::X,
            AxisSpec::Y => PauliAxis::Y,
            AxisSpec::Z => PauliAxis::Z,
        }
    }
}

/// Quadratic hopping block over the listed sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoppingBlock {
    pub sites: Vec<usize>,
    pub matrix: Vec<Vec<ComplexSpec>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FermionForm {
    #[default]
    Ladder,
    Spin,
}

/// One off-diagonal link's Pauli axis override for spin-form blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkAxis {
    pub i: usize,
    pub j: usize,
    pub axis: AxisSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FermionBlock {
    pub sites: Vec<usize>,
    pub matrix: Vec<Vec<ComplexSpec>>,
    #[serde(default)]
    pub form: FermionForm,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub link_axes: Vec<LinkAxis>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixedPair {
    pub boson_site: usize,
    pub fermion_site: usize,
    pub weight: ComplexSpec,
}

/// σσ dephasing links between system and environment spins; `weights[s][e]`
/// couples system site s to environment site e.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DephasingLink {
    pub system_sites: Vec<usize>,
    pub env_sites: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub axis: AxisSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CouplingsSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boson: Option<HoppingBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fermion: Option<FermionBlock>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub mixed: Vec<MixedPair>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dephasing: Vec<DephasingLink>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignSpec {
    Plus,
    Minus,
}

impl SignSpec {
    pub fn to_sign(self) -> QubitSign {
        match self {
            SignSpec::Plus => QubitSign::Plus,
            SignSpec::Minus => QubitSign::Minus,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, tag = "type", rename_all = "snake_case")]
pub enum InitialStateSpec {
    #[default]
    Vacuum,
    Singlet {
        sites: [usize; 2],
    },
    Triplet {
        sites: [usize; 2],
    },
    SingleExcitation {
        site: usize,
    },
    SusyQubit {
        sign: SignSpec,
        boson_site: usize,
        fermion_site: usize,
    },
    /// The same superposition prepared on quasi modes of the coupling blocks
    /// (pair indices select the modes), expressed in the site basis.
    SusyQubitQuasi {
        sign: SignSpec,
        boson_site: usize,
        fermion_site: usize,
    },
    Amplitudes {
        values: Vec<ComplexSpec>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "type", rename_all = "snake_case")]
pub enum DistributionSpec {
    Gaussian { sigma: f64 },
    Uniform { width: f64 },
}

impl DistributionSpec {
    pub fn to_distribution(&self) -> KickDistribution {
        match *self {
            DistributionSpec::Gaussian { sigma } => KickDistribution::GaussianPerKick { sigma },
            DistributionSpec::Uniform { width } => KickDistribution::UniformPerKick { width },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, tag = "type", rename_all = "snake_case")]
pub enum EngineSpec {
    Quasi,
    #[default]
    Dense,
    PhaseKick {
        alpha: ComplexSpec,
        beta: ComplexSpec,
        distribution: DistributionSpec,
        kicks_per_unit_time: f64,
        samples: usize,
    },
}

impl EngineSpec {
    pub fn label(&self) -> &'static str {
        match self {
            EngineSpec::Quasi => "quasi",
            EngineSpec::Dense => "dense",
            EngineSpec::PhaseKick { .. } => "phase_kick",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            start: 0.0,
            stop: 10.0,
            points: 11,
        }
    }
}

impl GridSpec {
    pub fn to_grid(&self) -> Result<TimeGrid> {
        TimeGrid::linspace(self.start, self.stop, self.points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FactorName {
    Create,
    Annihilate,
    Number,
    PauliX,
    PauliY,
    PauliZ,
}

impl FactorName {
    pub fn to_kind(self) -> FactorKind {
        match self {
            FactorName::Create => FactorKind::Create,
            FactorName::Annihilate => FactorKind::Annihilate,
            FactorName::Number => FactorKind::Number,
            FactorName::PauliX => FactorKind::PauliX,
            FactorName::PauliY => FactorKind::PauliY,
            FactorName::PauliZ => FactorKind::PauliZ,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub weight: ComplexSpec,
    /// `[site, factor_name]` pairs, applied right to left.
    pub factors: Vec<(usize, FactorName)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "type", rename_all = "snake_case")]
pub enum ObservableSpec {
    Expectation {
        label: String,
        terms: Vec<TermSpec>,
    },
    Coherence {
        label: String,
        keep: Vec<usize>,
        ket_a: Vec<u32>,
        ket_b: Vec<u32>,
    },
    RelativePhase {
        label: String,
        keep: Vec<usize>,
        ket_a: Vec<u32>,
        ket_b: Vec<u32>,
    },
}

impl ObservableSpec {
    pub fn label(&self) -> &str {
        match self {
            ObservableSpec::Expectation { label, .. } => label,
            ObservableSpec::Coherence { label, .. } => label,
            ObservableSpec::RelativePhase { label, .. } => label,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RepSpec {
    SpinTensor,
    #[default]
    StringCorrected,
}

impl RepSpec {
    pub fn to_rep(self) -> FermionRepresentation {
        match self {
            RepSpec::SpinTensor => FermionRepresentation::SpinTensor,
            RepSpec::StringCorrected => FermionRepresentation::StringCorrected,
        }
    }
}

/// A fully described simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    pub network: NetworkSection,
    #[serde(default)]
    pub couplings: CouplingsSection,
    #[serde(default)]
    pub initial_state: InitialStateSpec,
    #[serde(default)]
    pub engine: EngineSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observables: Vec<ObservableSpec>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub fermion_representation: RepSpec,
    /// Permit quasi-basis transforms of sectors holding more than two
    /// excitations (combinatorially expensive).
    #[serde(default)]
    pub allow_multi_excitation: bool,
}

fn fail(path: &str, message: impl Into<String>) -> Error {
    Error::scenario(path, message)
}

fn check_complex_matrix(path: &str, sites: &[usize], matrix: &[Vec<ComplexSpec>]) -> Result<()> {
    if matrix.len() != sites.len() {
        return Err(fail(
            path,
            format!("matrix has {} rows for {} sites", matrix.len(), sites.len()),
        ));
    }
    for (r, row) in matrix.iter().enumerate() {
        if row.len() != sites.len() {
            return Err(fail(
                &format!("{path}[{r}]"),
                format!("row has {} entries for {} sites", row.len(), sites.len()),
            ));
        }
    }
    Ok(())
}

fn check_sites(
    path: &str,
    sites: &[usize],
    spec: &NetworkSpec,
    want_boson: Option<bool>,
) -> Result<()> {
    if sites.is_empty() {
        return Err(fail(path, "site list is empty"));
    }
    let mut seen = std::collections::BTreeSet::new();
    for (i, &s) in sites.iter().enumerate() {
        let item = format!("{path}[{i}]");
        if s >= spec.n_modes() {
            return Err(fail(
                &item,
                format!("site {s} out of range for a {}-mode network", spec.n_modes()),
            ));
        }
        if !seen.insert(s) {
            return Err(fail(&item, format!("site {s} listed twice")));
        }
        if let Some(boson) = want_boson {
            let is = spec.modes()[s].is_boson();
            if is != boson {
                let kind = if boson { "bosonic" } else { "fermionic" };
                return Err(fail(&item, format!("site {s} is not {kind}")));
            }
        }
    }
    Ok(())
}

fn check_ket(path: &str, occupations: &[u32], dims: &[usize]) -> Result<()> {
    if occupations.len() != dims.len() {
        return Err(fail(
            path,
            format!(
                "ket has {} entries for {} kept sites",
                occupations.len(),
                dims.len()
            ),
        ));
    }
    for (i, (&occ, &dim)) in occupations.iter().zip(dims).enumerate() {
        if occ as usize >= dim {
            return Err(fail(
                &format!("{path}[{i}]"),
                format!("occupation {occ} exceeds the site's maximum {}", dim - 1),
            ));
        }
    }
    Ok(())
}

impl Scenario {
    /// Materialize the mode layout.
    pub fn network_spec(&self) -> Result<Arc<NetworkSpec>> {
        let modes: Vec<ModeSpec> = self
            .network
            .modes
            .iter()
            .map(|m| match *m {
                ModeEntry::Boson { cutoff } => ModeSpec::Boson { cutoff },
                ModeEntry::Fermion => ModeSpec::Fermion,
            })
            .collect();
        NetworkSpec::shared(modes)
    }

    /// Validate every cross-reference; diagnostics name the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(fail(
                "schema_version",
                format!(
                    "unsupported version {} (this build reads {})",
                    self.schema_version, SCHEMA_VERSION
                ),
            ));
        }
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(fail(
                "name",
                "must be non-empty and use only [A-Za-z0-9_-] (it names output files)",
            ));
        }
        let spec = self
            .network_spec()
            .map_err(|e| fail("network.modes", e.to_string()))?;

        if let Some(block) = &self.couplings.boson {
            check_sites("couplings.boson.sites", &block.sites, &spec, Some(true))?;
            check_complex_matrix("couplings.boson.matrix", &block.sites, &block.matrix)?;
        }
        if let Some(block) = &self.couplings.fermion {
            check_sites("couplings.fermion.sites", &block.sites, &spec, Some(false))?;
            check_complex_matrix("couplings.fermion.matrix", &block.sites, &block.matrix)?;
            if block.form == FermionForm::Spin {
                let all_fermion = block.sites.len() == spec.n_modes()
                    && (0..spec.n_modes()).all(|s| spec.modes()[s].is_fermion());
                if !all_fermion {
                    return Err(fail(
                        "couplings.fermion.form",
                        "spin form requires the block to cover an all-fermion network",
                    ));
                }
                for (k, link) in block.link_axes.iter().enumerate() {
                    if !block.sites.contains(&link.i) || !block.sites.contains(&link.j) {
                        return Err(fail(
                            &format!("couplings.fermion.link_axes[{k}]"),
                            "link names a site outside the block",
                        ));
                    }
                }
            } else if !block.link_axes.is_empty() {
                return Err(fail(
                    "couplings.fermion.link_axes",
                    "link axes only apply to the spin form",
                ));
            }
        }
        for (k, pair) in self.couplings.mixed.iter().enumerate() {
            let path = format!("couplings.mixed[{k}]");
            if pair.boson_site >= spec.n_modes() || !spec.modes()[pair.boson_site].is_boson() {
                return Err(fail(
                    &format!("{path}.boson_site"),
                    format!("site {} is not a boson of the network", pair.boson_site),
                ));
            }
            if pair.fermion_site >= spec.n_modes() || !spec.modes()[pair.fermion_site].is_fermion()
            {
                return Err(fail(
                    &format!("{path}.fermion_site"),
                    format!("site {} is not a fermion of the network", pair.fermion_site),
                ));
            }
        }
        for (k, link) in self.couplings.dephasing.iter().enumerate() {
            let path = format!("couplings.dephasing[{k}]");
            check_sites(
                &format!("{path}.system_sites"),
                &link.system_sites,
                &spec,
                Some(false),
            )?;
            check_sites(
                &format!("{path}.env_sites"),
                &link.env_sites,
                &spec,
                Some(false),
            )?;
            for s in &link.system_sites {
                if link.env_sites.contains(s) {
                    return Err(fail(
                        &format!("{path}.env_sites"),
                        format!("site {s} appears on both sides of the link"),
                    ));
                }
            }
            if link.weights.len() != link.system_sites.len()
                || link
                    .weights
                    .iter()
                    .any(|row| row.len() != link.env_sites.len())
            {
                return Err(fail(
                    &format!("{path}.weights"),
                    format!(
                        "expected {}×{} weight rows",
                        link.system_sites.len(),
                        link.env_sites.len()
                    ),
                ));
            }
        }

        self.validate_initial_state(&spec)?;
        self.validate_engine(&spec)?;

        self.grid
            .to_grid()
            .map_err(|_| fail("grid", "needs points ≥ 1, start ≥ 0, stop > start"))?;

        let mut labels = std::collections::BTreeSet::new();
        for (k, obs) in self.observables.iter().enumerate() {
            let path = format!("observables[{k}]");
            if obs.label().is_empty()
                || !obs
                    .label()
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                return Err(fail(
                    &format!("{path}.label"),
                    "label must be non-empty and use only [A-Za-z0-9_-] (it names a results column)",
                ));
            }
            if !labels.insert(obs.label().to_string()) {
                return Err(fail(
                    &format!("{path}.label"),
                    format!("label \"{}\" is used twice", obs.label()),
                ));
            }
            match obs {
                ObservableSpec::Expectation { terms, .. } => {
                    for (ti, term) in terms.iter().enumerate() {
                        for (fi, &(site, name)) in term.factors.iter().enumerate() {
                            let fpath = format!("{path}.terms[{ti}].factors[{fi}]");
                            if site >= spec.n_modes() {
                                return Err(fail(
                                    &fpath,
                                    format!("site {site} out of range"),
                                ));
                            }
                            if matches!(
                                name,
                                FactorName::PauliX | FactorName::PauliY | FactorName::PauliZ
                            ) && !spec.modes()[site].is_fermion()
                            {
                                return Err(fail(
                                    &fpath,
                                    format!("Pauli factor on non-fermionic site {site}"),
                                ));
                            }
                        }
                    }
                }
                ObservableSpec::Coherence {
                    keep, ket_a, ket_b, ..
                }
                | ObservableSpec::RelativePhase {
                    keep, ket_a, ket_b, ..
                } => {
                    check_sites(&format!("{path}.keep"), keep, &spec, None)?;
                    if keep.windows(2).any(|w| w[1] <= w[0]) {
                        return Err(fail(
                            &format!("{path}.keep"),
                            "kept sites must be strictly ascending",
                        ));
                    }
                    let dims: Vec<usize> =
                        keep.iter().map(|&s| spec.modes()[s].local_dim()).collect();
                    check_ket(&format!("{path}.ket_a"), ket_a, &dims)?;
                    check_ket(&format!("{path}.ket_b"), ket_b, &dims)?;
                    if ket_a == ket_b {
                        return Err(fail(
                            &format!("{path}.ket_b"),
                            "the two kets must differ",
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn validate_initial_state(&self, spec: &NetworkSpec) -> Result<()> {
        match &self.initial_state {
            InitialStateSpec::Vacuum => Ok(()),
            InitialStateSpec::Singlet { sites } | InitialStateSpec::Triplet { sites } => {
                for (i, &s) in sites.iter().enumerate() {
                    if s >= spec.n_modes() || !spec.modes()[s].is_fermion() {
                        return Err(fail(
                            &format!("initial_state.sites[{i}]"),
                            format!("site {s} is not a fermion of the network"),
                        ));
                    }
                }
                if sites[0] == sites[1] {
                    return Err(fail("initial_state.sites", "the two sites must differ"));
                }
                Ok(())
            }
            InitialStateSpec::SingleExcitation { site } => {
                if *site >= spec.n_modes() {
                    return Err(fail(
                        "initial_state.site",
                        format!("site {site} out of range"),
                    ));
                }
                Ok(())
            }
            InitialStateSpec::SusyQubit {
                boson_site,
                fermion_site,
                ..
            } => {
                if *boson_site >= spec.n_modes() || !spec.modes()[*boson_site].is_boson() {
                    return Err(fail(
                        "initial_state.boson_site",
                        format!("site {boson_site} is not a boson of the network"),
                    ));
                }
                if *fermion_site >= spec.n_modes() || !spec.modes()[*fermion_site].is_fermion() {
                    return Err(fail(
                        "initial_state.fermion_site",
                        format!("site {fermion_site} is not a fermion of the network"),
                    ));
                }
                Ok(())
            }
            InitialStateSpec::SusyQubitQuasi {
                boson_site,
                fermion_site,
                ..
            } => {
                self.susy_layout(spec).map_err(|e| {
                    fail("initial_state", format!("quasi qubit needs a pair layout: {e}"))
                })?;
                let n = spec.n_modes() / 2;
                if *boson_site >= n {
                    return Err(fail(
                        "initial_state.boson_site",
                        format!("site {boson_site} is not a boson of the pair layout"),
                    ));
                }
                if *fermion_site < n || *fermion_site >= 2 * n {
                    return Err(fail(
                        "initial_state.fermion_site",
                        format!("site {fermion_site} is not a fermion of the pair layout"),
                    ));
                }
                Ok(())
            }
            InitialStateSpec::Amplitudes { values } => {
                if values.len() != spec.total_dim() {
                    return Err(fail(
                        "initial_state.values",
                        format!(
                            "{} amplitudes for a dimension-{} space",
                            values.len(),
                            spec.total_dim()
                        ),
                    ));
                }
                let norm: f64 = values
                    .iter()
                    .map(|v| v.to_complex().norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                if (norm - 1.0).abs() > 1e-10 {
                    return Err(fail(
                        "initial_state.values",
                        format!("state norm {norm} is not 1"),
                    ));
                }
                Ok(())
            }
        }
    }

    fn validate_engine(&self, spec: &NetworkSpec) -> Result<()> {
        match &self.engine {
            EngineSpec::Dense => Ok(()),
            EngineSpec::Quasi => {
                if !self.couplings.dephasing.is_empty() {
                    return Err(fail(
                        "engine",
                        "the quasi engine handles quadratic hopping only; dephasing links need the dense engine",
                    ));
                }
                if !self.couplings.mixed.is_empty() {
                    return Err(fail(
                        "engine",
                        "the quasi engine diagonalizes each kind separately; mixed boson-fermion terms need the dense engine",
                    ));
                }
                if let Some(block) = &self.couplings.fermion {
                    if block.form == FermionForm::Spin {
                        return Err(fail(
                            "couplings.fermion.form",
                            "the quasi engine needs the ladder form",
                        ));
                    }
                }
                // A sector without a block keeps the identity basis; a block
                // must cover its whole sector so the mode transform is square.
                let boson_sites: Vec<usize> = (0..spec.n_modes())
                    .filter(|&s| spec.modes()[s].is_boson())
                    .collect();
                let fermion_sites: Vec<usize> = (0..spec.n_modes())
                    .filter(|&s| spec.modes()[s].is_fermion())
                    .collect();
                if let Some(block) = &self.couplings.boson {
                    if block.sites != boson_sites {
                        return Err(fail(
                            "couplings.boson.sites",
                            "the quasi engine needs the boson block to list every bosonic site in ascending order",
                        ));
                    }
                }
                if let Some(block) = &self.couplings.fermion {
                    if block.sites != fermion_sites {
                        return Err(fail(
                            "couplings.fermion.sites",
                            "the quasi engine needs the fermion block to list every fermionic site in ascending order",
                        ));
                    }
                }
                Ok(())
            }
            EngineSpec::PhaseKick {
                alpha,
                beta,
                distribution,
                kicks_per_unit_time,
                samples,
            } => {
                let model = PhaseKickModel {
                    distribution: distribution.to_distribution(),
                    kicks_per_unit_time: *kicks_per_unit_time,
                    seed: self.seed,
                };
                model
                    .validate()
                    .map_err(|e| fail("engine", e.to_string()))?;
                if *samples == 0 {
                    return Err(fail("engine.samples", "needs at least one sample"));
                }
                let norm =
                    alpha.to_complex().norm_sqr() + beta.to_complex().norm_sqr();
                if (norm - 1.0).abs() > 1e-10 {
                    return Err(fail(
                        "engine",
                        format!("|alpha|² + |beta|² = {norm}, expected 1"),
                    ));
                }
                if !self.observables.is_empty() {
                    return Err(fail(
                        "observables",
                        "the phase-kick engine reports its own coherence series; leave observables empty",
                    ));
                }
                Ok(())
            }
        }
    }

    /// The pair layout (N bosons with one shared cutoff, then N fermions)
    /// when the network has it.
    pub fn susy_layout(&self, spec: &NetworkSpec) -> Result<SusyNetworkSpec> {
        let total = spec.n_modes();
        if total == 0 || total % 2 != 0 {
            return Err(Error::InvalidExpression(
                "the network is not N bosons followed by N fermions".into(),
            ));
        }
        let n = total / 2;
        let mut cutoff = None;
        for s in 0..n {
            match spec.modes()[s] {
                ModeSpec::Boson { cutoff: c } => {
                    if *cutoff.get_or_insert(c) != c {
                        return Err(Error::InvalidExpression(
                            "pair-layout bosons must share one cutoff".into(),
                        ));
                    }
                }
                ModeSpec::Fermion => {
                    return Err(Error::InvalidExpression(
                        "the network is not N bosons followed by N fermions".into(),
                    ));
                }
            }
        }
        for s in n..total {
            if !spec.modes()[s].is_fermion() {
                return Err(Error::InvalidExpression(
                    "the network is not N bosons followed by N fermions".into(),
                ));
            }
        }
        SusyNetworkSpec::new(n)?.with_boson_cutoff(cutoff.unwrap_or(2))
    }

    fn coupling_matrix(block: &HoppingBlock) -> Result<CouplingMatrix> {
        let rows: Vec<Vec<Complex64>> = block
            .matrix
            .iter()
            .map(|row| row.iter().map(|c| c.to_complex()).collect())
            .collect();
        CouplingMatrix::from_rows(&rows)
    }

    fn fermion_coupling_matrix(block: &FermionBlock) -> Result<CouplingMatrix> {
        let rows: Vec<Vec<Complex64>> = block
            .matrix
            .iter()
            .map(|row| row.iter().map(|c| c.to_complex()).collect())
            .collect();
        CouplingMatrix::from_rows(&rows)
    }

    /// Sum every coupling block into one Hamiltonian expression.
    pub fn hamiltonian(&self, spec: &Arc<NetworkSpec>) -> Result<HamiltonianSum> {
        let mut h = OperatorSum::zero();
        if let Some(block) = &self.couplings.boson {
            let coupling = Self::coupling_matrix(block)
                .map_err(|e| fail("couplings.boson.matrix", e.to_string()))?;
            h = h.plus(&boson_hopping(spec, &block.sites, &coupling)?);
        }
        if let Some(block) = &self.couplings.fermion {
            let coupling = Self::fermion_coupling_matrix(block)
                .map_err(|e| fail("couplings.fermion.matrix", e.to_string()))?;
            match block.form {
                FermionForm::Ladder => {
                    h = h.plus(&fermion_hopping(spec, &block.sites, &coupling)?);
                }
                FermionForm::Spin => {
                    let axes: HashMap<(usize, usize), PauliAxis> = block
                        .link_axes
                        .iter()
                        .map(|l| ((l.i, l.j), l.axis.to_axis()))
                        .collect();
                    let axes_opt = if axes.is_empty() { None } else { Some(&axes) };
                    h = h.plus(&build_fermion_network_spin(spec, &coupling, axes_opt)?);
                }
            }
        }
        if !self.couplings.mixed.is_empty() {
            let pairs: Vec<(usize, usize, Complex64)> = self
                .couplings
                .mixed
                .iter()
                .map(|p| (p.boson_site, p.fermion_site, p.weight.to_complex()))
                .collect();
            h = h.plus(&build_mixed_interaction(spec, &pairs)?);
        }
        for link in &self.couplings.dephasing {
            let flat: Vec<f64> = link.weights.iter().flatten().copied().collect();
            h = h.plus(&build_dephasing_interaction(
                spec,
                &link.system_sites,
                &link.env_sites,
                &flat,
                link.axis.to_axis(),
            )?);
        }
        Ok(h)
    }

    /// Per-sector quasi bases from the coupling blocks; sectors without a
    /// block get the identity basis (zero frequencies).
    pub fn quasi_basis(&self, spec: &NetworkSpec) -> Result<BlockQuasiBasis> {
        let n_bosons = spec.boson_sites().len();
        let n_fermions = spec.fermion_sites().len();
        let boson = match &self.couplings.boson {
            Some(block) => {
                let coupling = Self::coupling_matrix(block)
                    .map_err(|e| fail("couplings.boson.matrix", e.to_string()))?;
                diagonalize_coupling(&coupling)?
            }
            None => QuasiBasis::identity(n_bosons),
        };
        let fermion = match &self.couplings.fermion {
            Some(block) => {
                let coupling = Self::fermion_coupling_matrix(block)
                    .map_err(|e| fail("couplings.fermion.matrix", e.to_string()))?;
                diagonalize_coupling(&coupling)?
            }
            None => QuasiBasis::identity(n_fermions),
        };
        Ok(BlockQuasiBasis { boson, fermion })
    }

    /// Build the declared initial state in the site basis.
    pub fn initial_state(&self, spec: &Arc<NetworkSpec>) -> Result<StateVector> {
        match &self.initial_state {
            InitialStateSpec::Vacuum => Ok(StateVector::vacuum(spec.clone())),
            InitialStateSpec::Singlet { sites } => {
                singlet_state(spec.clone(), sites[0], sites[1])
            }
            InitialStateSpec::Triplet { sites } => {
                triplet_state(spec.clone(), sites[0], sites[1])
            }
            InitialStateSpec::SingleExcitation { site } => {
                crate::fock::single_excitation(spec.clone(), *site)
            }
            InitialStateSpec::SusyQubit {
                sign,
                boson_site,
                fermion_site,
            } => build_dfs_state(
                spec.clone(),
                &SusyQubit {
                    sign: sign.to_sign(),
                    boson_site: *boson_site,
                    fermion_site: *fermion_site,
                },
            ),
            InitialStateSpec::SusyQubitQuasi {
                sign,
                boson_site,
                fermion_site,
            } => {
                let layout = self.susy_layout(spec)?;
                let basis = self.quasi_basis(spec)?;
                build_quasi_dfs_state(
                    &layout,
                    &SusyQubit {
                        sign: sign.to_sign(),
                        boson_site: *boson_site,
                        fermion_site: *fermion_site,
                    },
                    &basis,
                )
            }
            InitialStateSpec::Amplitudes { values } => {
                let amps = ndarray::Array1::from(
                    values.iter().map(|v| v.to_complex()).collect::<Vec<_>>(),
                );
                StateVector::from_amplitudes(spec.clone(), amps)
            }
        }
    }

    /// Materialize the observable list.
    pub fn observable_list(&self, spec: &NetworkSpec) -> Result<Vec<Observable>> {
        self.observables
            .iter()
            .map(|obs| match obs {
                ObservableSpec::Expectation { label, terms } => {
                    let op = OperatorSum::new(
                        terms
                            .iter()
                            .map(|t| {
                                OpTerm::new(
                                    t.weight.to_complex(),
                                    t.factors
                                        .iter()
                                        .map(|&(site, name)| (site, name.to_kind()))
                                        .collect(),
                                )
                            })
                            .collect(),
                    );
                    op.validate(spec)?;
                    Ok(Observable::Expectation {
                        label: label.clone(),
                        op,
                    })
                }
                ObservableSpec::Coherence {
                    label,
                    keep,
                    ket_a,
                    ket_b,
                } => Ok(Observable::Coherence {
                    label: label.clone(),
                    keep: keep.clone(),
                    pair: CoherencePair::new(
                        OccupationKet(ket_a.clone()),
                        OccupationKet(ket_b.clone()),
                    )?,
                }),
                ObservableSpec::RelativePhase {
                    label,
                    keep,
                    ket_a,
                    ket_b,
                } => Ok(Observable::RelativePhase {
                    label: label.clone(),
                    keep: keep.clone(),
                    pair: CoherencePair::new(
                        OccupationKet(ket_a.clone()),
                        OccupationKet(ket_b.clone()),
                    )?,
                }),
            })
            .collect()
    }
}

/// Read and fully validate a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::scenario(&path.display().to_string(), e.to_string()))?;
    let scenario: Scenario = serde_json::from_str(&text)
        .map_err(|e| Error::scenario(&path.display().to_string(), e.to_string()))?;
    scenario.validate()?;
    Ok(scenario)
}

/// Serialize a scenario back to pretty JSON (the round-trip partner of
/// [`load_scenario`]).
pub fn emit_scenario(scenario: &Scenario) -> Result<String> {
    Ok(serde_json::to_string_pretty(scenario)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json() -> String {
        r#"{
            "schema_version": 1,
            "name": "minimal",
            "network": { "modes": [ {"kind": "fermion"}, {"kind": "fermion"} ] }
        }"#
        .to_string()
    }

    fn parse(text: &str) -> Result<Scenario> {
        let scenario: Scenario =
            serde_json::from_str(text).map_err(|e| Error::scenario("inline", e.to_string()))?;
        scenario.validate()?;
        Ok(scenario)
    }

    #[test]
    fn minimal_scenario_fills_defaults() {
        let s = parse(&minimal_json()).unwrap();
        assert_eq!(s.engine, EngineSpec::Dense);
        assert_eq!(s.initial_state, InitialStateSpec::Vacuum);
        assert_eq!(s.seed, 0);
        assert_eq!(s.fermion_representation, RepSpec::StringCorrected);
        assert_eq!(s.grid, GridSpec::default());
        assert!(s.observables.is_empty());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = minimal_json().replace("\"name\"", "\"naem\"");
        let err = parse(&text).unwrap_err().to_string();
        assert!(err.contains("naem"), "diagnostic was: {err}");
    }

    #[test]
    fn dangling_site_reference_names_the_field() {
        let text = r#"{
            "schema_version": 1,
            "name": "bad",
            "network": { "modes": [ {"kind": "boson", "cutoff": 2}, {"kind": "boson", "cutoff": 2} ] },
            "couplings": { "boson": { "sites": [0, 9], "matrix": [[1.0, 0.0], [0.0, 1.0]] } }
        }"#;
        let err = parse(text).unwrap_err().to_string();
        assert!(
            err.contains("couplings.boson.sites[1]"),
            "diagnostic was: {err}"
        );
    }

    #[test]
    fn schema_version_is_checked() {
        let text = minimal_json().replace("\"schema_version\": 1", "\"schema_version\": 7");
        let err = parse(&text).unwrap_err().to_string();
        assert!(err.contains("schema_version"), "diagnostic was: {err}");
    }

    #[test]
    fn round_trip_preserves_the_scenario() {
        let text = r#"{
            "schema_version": 1,
            "name": "round-trip",
            "network": { "modes": [ {"kind": "boson", "cutoff": 2}, {"kind": "boson", "cutoff": 2} ] },
            "couplings": { "boson": { "sites": [0, 1], "matrix": [[0.0, [0.0, 0.5]], [[0.0, -0.5], 0.0]] } },
            "initial_state": { "type": "single_excitation", "site": 0 },
            "engine": { "type": "quasi" },
            "grid": { "start": 0.0, "stop": 5.0, "points": 6 },
            "observables": [
                { "type": "expectation", "label": "n0",
                  "terms": [ { "weight": 1.0, "factors": [[0, "number"]] } ] }
            ],
            "seed": 42
        }"#;
        let scenario = parse(text).unwrap();
        let emitted = emit_scenario(&scenario).unwrap();
        let reloaded: Scenario = serde_json::from_str(&emitted).unwrap();
        reloaded.validate().unwrap();
        assert_eq!(scenario, reloaded);
    }

    #[test]
    fn quasi_engine_rejects_dephasing_and_mixed_terms() {
        let text = r#"{
            "schema_version": 1,
            "name": "bad-quasi",
            "network": { "modes": [ {"kind": "fermion"}, {"kind": "fermion"}, {"kind": "fermion"} ] },
            "couplings": { "dephasing": [ { "system_sites": [0, 1], "env_sites": [2],
                "weights": [[1.0], [1.0]], "axis": "z" } ] },
            "engine": { "type": "quasi" }
        }"#;
        let err = parse(text).unwrap_err().to_string();
        assert!(err.contains("dense engine"), "diagnostic was: {err}");
    }

    #[test]
    fn quasi_engine_requires_full_sector_blocks() {
        let text = r#"{
            "schema_version": 1,
            "name": "partial",
            "network": { "modes": [ {"kind": "boson", "cutoff": 2}, {"kind": "boson", "cutoff": 2}, {"kind": "boson", "cutoff": 2} ] },
            "couplings": { "boson": { "sites": [0, 1], "matrix": [[0.0, 1.0], [1.0, 0.0]] } },
            "engine": { "type": "quasi" }
        }"#;
        let err = parse(text).unwrap_err().to_string();
        assert!(
            err.contains("every bosonic site"),
            "diagnostic was: {err}"
        );
    }

    #[test]
    fn amplitude_initial_state_must_be_normalized_and_sized() {
        let base = r#"{
            "schema_version": 1,
            "name": "amp",
            "network": { "modes": [ {"kind": "fermion"} ] },
            "initial_state": { "type": "amplitudes", "values": VALUES }
        }"#;
        let err = parse(&base.replace("VALUES", "[1.0, 0.0, 0.0]"))
            .unwrap_err()
            .to_string();
        assert!(err.contains("dimension-2"), "diagnostic was: {err}");
        let err = parse(&base.replace("VALUES", "[0.5, 0.5]"))
            .unwrap_err()
            .to_string();
        assert!(err.contains("norm"), "diagnostic was: {err}");
        parse(&base.replace("VALUES", "[[0.0, 1.0], 0.0]")).unwrap();
    }

    #[test]
    fn phase_kick_engine_checks_its_superposition() {
        let text = r#"{
            "schema_version": 1,
            "name": "kick",
            "network": { "modes": [ {"kind": "fermion"} ] },
            "engine": { "type": "phase_kick", "alpha": 0.8, "beta": 0.7,
                        "distribution": { "type": "gaussian", "sigma": 0.1 },
                        "kicks_per_unit_time": 2.0, "samples": 100 }
        }"#;
        let err = parse(text).unwrap_err().to_string();
        assert!(err.contains("alpha"), "diagnostic was: {err}");
    }

    #[test]
    fn hamiltonian_and_state_build_from_a_full_scenario() {
        let text = r#"{
            "schema_version": 1,
            "name": "full",
            "network": { "modes": [ {"kind": "fermion"}, {"kind": "fermion"}, {"kind": "fermion"} ] },
            "couplings": { "dephasing": [ { "system_sites": [0, 1], "env_sites": [2],
                "weights": [[0.9], [0.9]], "axis": "z" } ] },
            "initial_state": { "type": "singlet", "sites": [0, 1] },
            "observables": [
                { "type": "coherence", "label": "c", "keep": [0, 1],
                  "ket_a": [0, 1], "ket_b": [1, 0] }
            ]
        }"#;
        let scenario = parse(text).unwrap();
        let spec = scenario.network_spec().unwrap();
        let h = scenario.hamiltonian(&spec).unwrap();
        assert!(h.is_formally_self_adjoint(1e-12));
        let state = scenario.initial_state(&spec).unwrap();
        assert!((state.norm() - 1.0).abs() < 1e-12);
        let observables = scenario.observable_list(&spec).unwrap();
        assert_eq!(observables.len(), 1);
    }

    #[test]
    fn susy_qubit_states_build_in_both_preparations() {
        let text = r#"{
            "schema_version": 1,
            "name": "susy",
            "network": { "modes": [ {"kind": "boson", "cutoff": 2}, {"kind": "boson", "cutoff": 2},
                                     {"kind": "fermion"}, {"kind": "fermion"} ] },
            "couplings": {
                "boson": { "sites": [0, 1], "matrix": [[0.0, 0.4], [0.4, 0.0]] },
                "fermion": { "sites": [2, 3], "matrix": [[0.0, 0.4], [0.4, 0.0]] }
            },
            "initial_state": { "type": "STATE", "sign": "plus", "boson_site": 0, "fermion_site": 2 },
            "engine": { "type": "quasi" }
        }"#;
        for kind in ["susy_qubit", "susy_qubit_quasi"] {
            let scenario = parse(&text.replace("STATE", kind)).unwrap();
            let spec = scenario.network_spec().unwrap();
            let state = scenario.initial_state(&spec).unwrap();
            assert!(
                (state.norm() - 1.0).abs() < 1e-12,
                "{kind} norm {}",
                state.norm()
            );
        }
    }
}
