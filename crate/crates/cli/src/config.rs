//! Run configuration: a TOML file naming one experiment (or `all`) with
//! optional overrides of the experiment's preset parameters.
//!
//! ```toml
//! experiment = "tau_rate"
//! seed = 0
//! output = "out"
//!
//! [basis]
//! spectrum = "analytic"
//! max_frequency = 128
//!
//! [conductivity]
//! kind = "constant"
//! value = 1.0
//!
//! [grids]
//! epsilon = [0.1, 0.25, 0.5]
//! tau_points = 25
//! ```

use crate::experiments::{Experiment, Params, Spectrum, TauGrid};
use lognd::harness::{EnsembleRule, MAX_ENSEMBLE};
use lognd::mesh::{boundary_node_count, MAX_MESH_LEVEL};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Syntax(#[from] toml::de::Error),
    #[error("unknown experiment '{0}' (see --list-experiments)")]
    UnknownExperiment(String),
    #[error("experiment {experiment} does not use '{key}'")]
    UnusedKey { experiment: String, key: String },
    #[error("the 'all' suite runs the presets and accepts only seed and output, found '{0}'")]
    SuiteOverride(String),
    #[error("grid '{0}' is empty")]
    EmptyGrid(&'static str),
    #[error("basis order {max_frequency} needs {needed} boundary nodes, mesh level {level} has {available}")]
    Aliasing {
        max_frequency: usize,
        level: u32,
        needed: usize,
        available: usize,
    },
    #[error("invalid value: {0}")]
    Invalid(String),
}

/// A disk of constant conductivity inside the background.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inclusion {
    pub center: [f64; 2],
    pub radius: f64,
    pub value: f64,
}

/// Conductivity of single-field experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConductivitySpec {
    Constant {
        value: f64,
    },
    /// Later inclusions are drawn on top of earlier ones.
    Inclusions {
        background: f64,
        inclusions: Vec<Inclusion>,
    },
    /// One smooth random field with values in `[0.5, 2]`; the seed defaults
    /// to the run seed.
    Random {
        #[serde(default)]
        seed: Option<u64>,
    },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub level: Option<u32>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisSection {
    pub max_frequency: Option<usize>,
    pub spectrum: Option<Spectrum>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub count: Option<usize>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub constant_every: Option<usize>,
    pub rule: Option<EnsembleRule>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub tau: Option<Vec<f64>>,
    /// Log-spaced shifts across the spectrum instead of explicit values.
    pub tau_points: Option<usize>,
    pub epsilon: Option<Vec<f64>>,
    pub r: Option<Vec<f64>>,
    pub steps: Option<Vec<f64>>,
    pub n: Option<Vec<usize>>,
    pub scale: Option<Vec<f64>>,
    pub test_vectors: Option<usize>,
}

/// The file as written.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: String,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub mesh: MeshSection,
    #[serde(default)]
    pub basis: BasisSection,
    pub conductivity: Option<ConductivitySpec>,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub grids: GridSection,
}

impl RawConfig {
    /// Dotted names of the override keys present in the file.
    fn override_keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        let mut add = |present: bool, key: &'static str| {
            if present {
                keys.push(key);
            }
        };
        add(self.mesh.level.is_some(), "mesh.level");
        add(self.basis.max_frequency.is_some(), "basis.max_frequency");
        add(self.basis.spectrum.is_some(), "basis.spectrum");
        add(self.conductivity.is_some(), "conductivity");
        let e = &self.ensemble;
        add(e.count.is_some(), "ensemble.count");
        add(e.lower.is_some(), "ensemble.lower");
        add(e.upper.is_some(), "ensemble.upper");
        add(e.constant_every.is_some(), "ensemble.constant_every");
        add(e.rule.is_some(), "ensemble.rule");
        let g = &self.grids;
        add(g.tau.is_some(), "grids.tau");
        add(g.tau_points.is_some(), "grids.tau_points");
        add(g.epsilon.is_some(), "grids.epsilon");
        add(g.r.is_some(), "grids.r");
        add(g.steps.is_some(), "grids.steps");
        add(g.n.is_some(), "grids.n");
        add(g.scale.is_some(), "grids.scale");
        add(g.test_vectors.is_some(), "grids.test_vectors");
        keys
    }
}

/// A validated run: the experiments with their resolved parameters.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub runs: Vec<Params>,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

pub fn parse(text: &str) -> Result<RawConfig, ConfigError> {
    Ok(toml::from_str(text)?)
}

pub fn load(path: &Path) -> Result<RawConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse(&text)
}

/// Resolves presets and overrides. `seed` takes precedence over the file.
pub fn resolve(raw: RawConfig, seed: Option<u64>) -> Result<RunConfig, ConfigError> {
    let seed = seed.or(raw.seed).unwrap_or(0);
    let keys = raw.override_keys();
    let runs = if raw.experiment == "all" {
        if let Some(k) = keys.first() {
            return Err(ConfigError::SuiteOverride(k.to_string()));
        }
        Experiment::ALL.iter().map(|&e| Params::preset(e, seed)).collect()
    } else {
        let experiment: Experiment = raw
            .experiment
            .parse()
            .map_err(|_| ConfigError::UnknownExperiment(raw.experiment.clone()))?;
        if let Some(k) = keys.iter().find(|k| !experiment.uses(k)) {
            return Err(ConfigError::UnusedKey {
                experiment: experiment.name().into(),
                key: k.to_string(),
            });
        }
        vec![apply(Params::preset(experiment, seed), &raw)?]
    };
    for p in &runs {
        validate(p)?;
    }
    Ok(RunConfig {
        runs,
        seed,
        output: raw.output,
    })
}

fn apply(mut p: Params, raw: &RawConfig) -> Result<Params, ConfigError> {
    if let Some(v) = raw.mesh.level {
        p.level = v;
    }
    if let Some(v) = raw.basis.max_frequency {
        p.max_frequency = v;
    }
    if let Some(v) = raw.basis.spectrum {
        p.spectrum = v;
    }
    if let Some(v) = &raw.conductivity {
        p.conductivity = v.clone();
    }
    let e = &raw.ensemble;
    if let Some(v) = e.count {
        p.ensemble.count = v;
    }
    if let Some(v) = e.lower {
        p.ensemble.lower = v;
    }
    if let Some(v) = e.upper {
        p.ensemble.upper = v;
    }
    if let Some(v) = e.constant_every {
        p.ensemble.constant_every = v;
    }
    if let Some(v) = &e.rule {
        p.ensemble.rule = v.clone();
    }
    let g = &raw.grids;
    match (&g.tau, g.tau_points) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::Invalid("give either grids.tau or grids.tau_points".into()));
        }
        (Some(v), None) => p.tau = TauGrid::Values(v.clone()),
        (None, Some(n)) => p.tau = TauGrid::Window(n),
        (None, None) => {}
    }
    if let Some(v) = &g.epsilon {
        p.epsilon = v.clone();
    }
    if let Some(v) = &g.r {
        p.r = v.clone();
    }
    if let Some(v) = &g.steps {
        p.steps = v.clone();
    }
    if let Some(v) = &g.n {
        p.n_grid = v.clone();
    }
    if let Some(v) = &g.scale {
        p.scale = v.clone();
    }
    if let Some(v) = g.test_vectors {
        p.test_vectors = v;
    }
    Ok(p)
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

fn nonempty<T>(grid: &[T], name: &'static str) -> Result<(), ConfigError> {
    if grid.is_empty() {
        Err(ConfigError::EmptyGrid(name))
    } else {
        Ok(())
    }
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

/// Checks the resolved parameters of one experiment.
pub fn validate(p: &Params) -> Result<(), ConfigError> {
    let ex = p.experiment;
    let uses = |k: &str| ex.uses(k);
    let needs_mesh = !(ex == Experiment::TauRate && p.spectrum == Spectrum::Analytic);
    if needs_mesh {
        // The disk oracle also solves one level finer.
        let top = p.level + u32::from(ex == Experiment::DiskOracle);
        if top > MAX_MESH_LEVEL {
            return Err(invalid(format!("mesh level {top} exceeds {MAX_MESH_LEVEL}")));
        }
    }
    if p.max_frequency == 0 {
        return Err(invalid("basis.max_frequency must be positive"));
    }
    if uses("grids.tau") {
        match &p.tau {
            TauGrid::Values(v) => {
                nonempty(v, "tau")?;
                if v.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
                    return Err(invalid("shifts τ must be finite and nonnegative"));
                }
            }
            TauGrid::Window(n) if *n < 3 => return Err(invalid("grids.tau_points must be at least 3")),
            TauGrid::Window(_) => {}
        }
    }
    if uses("grids.epsilon") {
        nonempty(&p.epsilon, "epsilon")?;
        if p.epsilon.iter().any(|e| !(*e > 0.0 && *e <= 0.5)) {
            return Err(invalid("ε must lie in (0, 1/2]"));
        }
    }
    if uses("grids.r") {
        nonempty(&p.r, "r")?;
        let lo = if ex == Experiment::OrderInequalities { 0.0 } else { -0.5 };
        if p.r.iter().any(|r| !(lo..=0.5).contains(r)) {
            return Err(invalid(format!("r must lie in [{lo}, 1/2]")));
        }
    }
    if uses("grids.steps") {
        nonempty(&p.steps, "steps")?;
        if p.steps.len() < 4 || p.steps.iter().any(|&t| !positive(t)) || p.steps.windows(2).any(|w| w[1] >= w[0]) {
            return Err(invalid("grids.steps needs at least 4 positive, strictly decreasing steps"));
        }
    }
    if uses("grids.n") {
        nonempty(&p.n_grid, "n")?;
        if p.n_grid.len() < 2 || p.n_grid.contains(&0) {
            return Err(invalid("grids.n needs at least two positive basis orders"));
        }
    }
    if uses("grids.scale") {
        nonempty(&p.scale, "scale")?;
        if p.scale.iter().any(|&c| !positive(c)) {
            return Err(invalid("scale factors must be positive"));
        }
    }
    if uses("grids.test_vectors") && p.test_vectors == 0 {
        return Err(invalid("grids.test_vectors must be positive"));
    }
    if uses("conductivity") {
        validate_conductivity(&p.conductivity)?;
        if ex == Experiment::DiskOracle && !matches!(p.conductivity, ConductivitySpec::Constant { .. }) {
            return Err(invalid("the disk oracle needs a constant conductivity"));
        }
        if ex == Experiment::TauRate
            && p.spectrum == Spectrum::Analytic
            && !matches!(p.conductivity, ConductivitySpec::Constant { .. })
        {
            return Err(invalid("the analytic spectrum exists only for constant conductivities"));
        }
    }
    if uses("ensemble.count") {
        let e = &p.ensemble;
        if e.count == 0 || e.count > MAX_ENSEMBLE {
            return Err(invalid(format!("ensemble.count must lie in 1..={MAX_ENSEMBLE}")));
        }
        if e.count < ex.min_ensemble() {
            return Err(invalid(format!("{} needs at least {} samples", ex.name(), ex.min_ensemble())));
        }
        p.ensemble().validate().map_err(|e| invalid(e.to_string()))?;
    }
    if needs_mesh {
        let n_max = p.max_basis_order();
        let available = boundary_node_count(p.level);
        if 8 * n_max > available {
            return Err(ConfigError::Aliasing {
                max_frequency: n_max,
                level: p.level,
                needed: 8 * n_max,
                available,
            });
        }
    }
    Ok(())
}

fn validate_conductivity(c: &ConductivitySpec) -> Result<(), ConfigError> {
    match c {
        ConductivitySpec::Constant { value } if !positive(*value) => {
            Err(invalid("constant conductivity must be positive"))
        }
        ConductivitySpec::Inclusions { background, inclusions } => {
            if !positive(*background) {
                return Err(invalid("background conductivity must be positive"));
            }
            for inc in inclusions {
                if !positive(inc.value) || !positive(inc.radius) || inc.center.iter().any(|c| !c.is_finite()) {
                    return Err(invalid("inclusions need finite centers, positive radii and positive values"));
                }
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve_str(text: &str) -> Result<RunConfig, ConfigError> {
        resolve(parse(text)?, None)
    }

    #[test]
    fn presets_validate() {
        let all = resolve_str("experiment = \"all\"").unwrap();
        assert_eq!(all.runs.len(), Experiment::ALL.len());
        assert_eq!(all.seed, 0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            "experiment = \"tau_rate\"\ncolour = 1",
            "experiment = \"tau_rate\"\n[grids]\ntaus = [0.1]",
            "experiment = \"tau_rate\"\n[conductivity]\nkind = \"constant\"\nvalue = 1.0\nextra = 2",
            "experiment = \"neumann_series\"\n[ensemble]\nrule = { kind = \"smooth_bumps\", bumps = 2, width = 0.5, height = 1 }",
        ] {
            assert!(matches!(resolve_str(text), Err(ConfigError::Syntax(_))), "{text}");
        }
    }

    #[test]
    fn semantic_errors() {
        assert!(matches!(resolve_str("experiment = \"nope\""), Err(ConfigError::UnknownExperiment(_))));
        assert!(matches!(
            resolve_str("experiment = \"tau_rate\"\n[grids]\ntau = []"),
            Err(ConfigError::EmptyGrid("tau"))
        ));
        assert!(matches!(
            resolve_str("experiment = \"order_inequalities\"\n[mesh]\nlevel = 2\n[basis]\nmax_frequency = 16"),
            Err(ConfigError::Aliasing { needed: 128, available: 64, .. })
        ));
        assert!(matches!(
            resolve_str("experiment = \"disk_oracle\"\n[grids]\nsteps = [0.1, 0.05, 0.02, 0.01]"),
            Err(ConfigError::UnusedKey { .. })
        ));
        assert!(matches!(
            resolve_str("experiment = \"all\"\n[mesh]\nlevel = 3"),
            Err(ConfigError::SuiteOverride(_))
        ));
        assert!(matches!(
            resolve_str("experiment = \"tau_rate\"\n[grids]\ntau = [0.1]\ntau_points = 5"),
            Err(ConfigError::Invalid(_))
        ));
    }

    #[test]
    fn overrides_and_seed_precedence() {
        let raw = parse(
            "experiment = \"fd_check\"\nseed = 4\n[mesh]\nlevel = 2\n[grids]\nsteps = [0.2, 0.1, 0.05, 0.025]",
        )
        .unwrap();
        let c = resolve(raw.clone(), None).unwrap();
        assert_eq!(c.seed, 4);
        assert_eq!(c.runs[0].level, 2);
        assert_eq!(c.runs[0].steps, vec![0.2, 0.1, 0.05, 0.025]);
        assert_eq!(resolve(raw, Some(9)).unwrap().seed, 9);
    }
}
