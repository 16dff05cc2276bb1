//! The experiment registry: preset parameters and the driver of each
//! experiment.

use crate::config::ConductivitySpec;
use lognd::basis::boundary_trig_basis;
use lognd::calculus::{apply_spectral_function, positive_eigensystem, SpectralFunction};
use lognd::conductivity::ConductivityField;
use lognd::contour::riesz_dunford_log;
use lognd::derivative::{df_tau_eigen, df_tau_quadrature_matrix, dl};
use lognd::fem::{nd_matrix, FemSpace, ForwardModel};
use lognd::harness::{
    dl_lipschitz_check, fd_derivative_check, linearization_error_compare, near_proportional_direction,
    neumann_series_check, norm_equivalence_survey, order_survey, random_vectors, relative_boundedness_experiment,
    tau_rate_experiment, tau_window_grid, ConductivityEnsemble, Curve, EnsembleRule, ExperimentReport, FdMap, Gate,
    NormSurveySettings, OrderedPair, Table, TauRateSettings,
};
use lognd::io::{nd_to_csv, operator_to_csv};
use lognd::mesh::{build_disk_mesh, DiskMesh};
use lognd::nd::{analytic_nd_constant_order, NdMatrix};
use lognd::quadrature::QuadOptions;
use lognd::sobolev::spectral_norm;
use lognd::{Error, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    DiskOracle,
    ScalingIdentity,
    ContourCrosscheck,
    QuadratureCrosscheck,
    FdCheck,
    TauRate,
    RelativeBoundedness,
    OrderInequalities,
    NormEquivalence,
    DlLipschitz,
    NeumannSeries,
    LinearizationCompare,
}

const ENSEMBLE_KEYS: [&str; 5] = [
    "ensemble.count",
    "ensemble.lower",
    "ensemble.upper",
    "ensemble.constant_every",
    "ensemble.rule",
];

impl Experiment {
    /// Suite order.
    pub const ALL: [Experiment; 12] = [
        Experiment::DiskOracle,
        Experiment::ScalingIdentity,
        Experiment::ContourCrosscheck,
        Experiment::QuadratureCrosscheck,
        Experiment::FdCheck,
        Experiment::TauRate,
        Experiment::RelativeBoundedness,
        Experiment::OrderInequalities,
        Experiment::NormEquivalence,
        Experiment::DlLipschitz,
        Experiment::NeumannSeries,
        Experiment::LinearizationCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::DiskOracle => "disk_oracle",
            Experiment::ScalingIdentity => "scaling_identity",
            Experiment::ContourCrosscheck => "contour_crosscheck",
            Experiment::QuadratureCrosscheck => "quadrature_crosscheck",
            Experiment::FdCheck => "fd_check",
            Experiment::TauRate => "tau_rate",
            Experiment::RelativeBoundedness => "relative_boundedness",
            Experiment::OrderInequalities => "order_inequalities",
            Experiment::NormEquivalence => "norm_equivalence",
            Experiment::DlLipschitz => "dl_lipschitz",
            Experiment::NeumannSeries => "neumann_series",
            Experiment::LinearizationCompare => "linearization_compare",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Experiment::DiskOracle => "FEM ND eigenvalues for constant σ against 1/(σn), and under refinement",
            Experiment::ScalingIdentity => "Λ(cσ) = Λ(σ)/c",
            Experiment::ContourCrosscheck => "contour-integral logarithm against the eigendecomposition",
            Experiment::QuadratureCrosscheck => "closed-form DF_τ against the resolvent quadrature",
            Experiment::FdCheck => "finite-difference convergence of every derivative, plus exact identities",
            Experiment::TauRate => "rates of log Λ - log Λ_τ and of its derivative in τ",
            Experiment::RelativeBoundedness => "L(κ₂) - L(κ₁) stays bounded while log Λ grows like log N",
            Experiment::OrderInequalities => "monotonicity and Löwner-Heinz inequalities on ordered pairs",
            Experiment::NormEquivalence => "σ-norm sandwich and Fourier equivalence constants",
            Experiment::DlLipschitz => "Lipschitz ratio of DL under basis refinement",
            Experiment::NeumannSeries => "Neumann-series remainders against the perturbation norm",
            Experiment::LinearizationCompare => "linearization errors of Λ and L on an inclusion ensemble",
        }
    }

    fn keys(self) -> Vec<&'static str> {
        let mut k = vec!["mesh.level"];
        let basis = ["basis.max_frequency"];
        match self {
            Experiment::DiskOracle => k.extend(basis.iter().chain(&["conductivity"])),
            Experiment::ScalingIdentity => k.extend(basis.iter().chain(&["conductivity", "grids.scale"])),
            Experiment::ContourCrosscheck => k.extend(basis.iter().chain(&ENSEMBLE_KEYS)),
            Experiment::QuadratureCrosscheck => k.extend(basis.iter().chain(&ENSEMBLE_KEYS).chain(&["grids.tau"])),
            Experiment::FdCheck => k.extend(basis.iter().chain(&["conductivity", "grids.steps", "grids.tau"])),
            Experiment::TauRate => k.extend(basis.iter().chain(&[
                "basis.spectrum",
                "conductivity",
                "grids.tau",
                "grids.tau_points",
                "grids.epsilon",
            ])),
            Experiment::RelativeBoundedness | Experiment::DlLipschitz => {
                k.extend(ENSEMBLE_KEYS.iter().chain(&["grids.n"]))
            }
            Experiment::OrderInequalities | Experiment::NormEquivalence => {
                k.extend(basis.iter().chain(&ENSEMBLE_KEYS).chain(&["grids.r", "grids.test_vectors"]))
            }
            Experiment::NeumannSeries => k.extend(basis.iter().chain(&ENSEMBLE_KEYS)),
            Experiment::LinearizationCompare => k.extend(basis.iter().chain(&ENSEMBLE_KEYS).chain(&["conductivity"])),
        }
        k
    }

    /// Whether the dotted config key affects this experiment.
    pub fn uses(self, key: &str) -> bool {
        self.keys().contains(&key)
    }

    /// Smallest ensemble the experiment can use; pair experiments need two
    /// samples per pair.
    pub fn min_ensemble(self) -> usize {
        match self {
            Experiment::RelativeBoundedness
            | Experiment::QuadratureCrosscheck
            | Experiment::DlLipschitz
            | Experiment::NeumannSeries => 2,
            _ => 1,
        }
    }

    /// Added to the run seed so that experiments draw independent samples.
    fn seed_offset(self) -> u64 {
        match self {
            Experiment::DiskOracle => 0,
            Experiment::ScalingIdentity => 1,
            Experiment::ContourCrosscheck => 2,
            Experiment::QuadratureCrosscheck => 3,
            Experiment::FdCheck => 4,
            Experiment::TauRate => 6,
            Experiment::OrderInequalities => 5,
            Experiment::RelativeBoundedness => 11,
            Experiment::NormEquivalence => 21,
            Experiment::DlLipschitz => 31,
            Experiment::NeumannSeries => 41,
            Experiment::LinearizationCompare => 51,
        }
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Experiment::ALL
            .iter()
            .copied()
            .find(|e| e.name() == s)
            .ok_or_else(|| s.to_string())
    }
}

/// Source of the ND spectrum in the τ-rate experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spectrum {
    /// FEM ND matrix of the configured conductivity.
    Fem,
    /// Exact disk matrix `diag(1/(σn))` of a constant conductivity.
    Analytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauGrid {
    Values(Vec<f64>),
    /// Log-spaced points spanning `[λ_min, λ_max]`.
    Window(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    pub count: usize,
    pub rule: EnsembleRule,
    pub lower: f64,
    pub upper: f64,
    pub constant_every: usize,
}

/// Resolved parameters of one experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub experiment: Experiment,
    pub seed: u64,
    pub level: u32,
    pub max_frequency: usize,
    pub spectrum: Spectrum,
    pub conductivity: ConductivitySpec,
    pub ensemble: EnsembleParams,
    pub tau: TauGrid,
    pub epsilon: Vec<f64>,
    pub r: Vec<f64>,
    pub steps: Vec<f64>,
    pub n_grid: Vec<usize>,
    pub scale: Vec<f64>,
    pub test_vectors: usize,
}

const SMOOTH: EnsembleRule = EnsembleRule::SmoothBumps { bumps: 3, width: 0.6 };

impl Params {
    /// The parameters of the acceptance suite.
    pub fn preset(experiment: Experiment, seed: u64) -> Params {
        let mut p = Params {
            experiment,
            seed,
            level: 3,
            max_frequency: 8,
            spectrum: Spectrum::Fem,
            conductivity: ConductivitySpec::Constant { value: 1.0 },
            ensemble: EnsembleParams {
                count: 20,
                rule: SMOOTH,
                lower: 0.5,
                upper: 2.0,
                constant_every: 0,
            },
            tau: TauGrid::Values(Vec::new()),
            epsilon: Vec::new(),
            r: Vec::new(),
            steps: Vec::new(),
            n_grid: Vec::new(),
            scale: Vec::new(),
            test_vectors: 0,
        };
        match experiment {
            Experiment::DiskOracle => p.level = 4,
            Experiment::ScalingIdentity => {
                p.conductivity = ConductivitySpec::Random { seed: None };
                p.scale = vec![0.5, 2.0, 10.0];
            }
            Experiment::ContourCrosscheck => p.ensemble.constant_every = 5,
            Experiment::QuadratureCrosscheck => p.tau = TauGrid::Values(vec![0.0, 0.01, 0.1, 1.0]),
            Experiment::FdCheck => {
                p.conductivity = ConductivitySpec::Random { seed: None };
                p.steps = vec![0.1, 0.05, 0.025, 0.0125, 0.00625];
                p.tau = TauGrid::Values(vec![0.1, 1.0]);
            }
            Experiment::TauRate => {
                p.spectrum = Spectrum::Analytic;
                p.level = 4;
                p.max_frequency = 128;
                p.tau = TauGrid::Window(25);
                p.epsilon = vec![0.1, 0.25, 0.5];
            }
            Experiment::RelativeBoundedness => {
                p.level = 5;
                p.n_grid = vec![8, 16, 32, 64];
                p.ensemble.count = 10;
            }
            Experiment::OrderInequalities => {
                p.level = 4;
                p.max_frequency = 16;
                p.r = vec![0.0, 0.25, 0.5];
                p.test_vectors = 100;
            }
            Experiment::NormEquivalence => {
                p.level = 4;
                p.ensemble.count = 50;
                p.ensemble.constant_every = 10;
                p.r = vec![-0.5, -0.25, 0.0, 0.25, 0.5];
                p.test_vectors = 50;
            }
            Experiment::DlLipschitz => {
                p.level = 4;
                p.n_grid = vec![8, 16];
                p.ensemble.count = 40;
                p.ensemble.constant_every = 7;
            }
            Experiment::NeumannSeries => {
                p.level = 4;
                p.ensemble.count = 10;
            }
            Experiment::LinearizationCompare => {
                p.ensemble.count = 100;
                p.ensemble.rule = EnsembleRule::Inclusions {
                    max_inclusions: 3,
                    contrast: 2.0,
                    background: 1.0,
                };
            }
        }
        p
    }

    /// Seed of the experiment's `stream`-th random source.
    pub fn stream_seed(&self, stream: u64) -> u64 {
        self.seed
            .wrapping_add(self.experiment.seed_offset())
            .wrapping_add(stream.wrapping_mul(1000))
    }

    pub fn ensemble(&self) -> ConductivityEnsemble {
        let e = &self.ensemble;
        ConductivityEnsemble {
            seed: self.stream_seed(0),
            count: e.count,
            rule: e.rule.clone(),
            lower: e.lower,
            upper: e.upper,
            constant_every: e.constant_every,
        }
    }

    /// Largest basis order the experiment solves for on the mesh.
    pub fn max_basis_order(&self) -> usize {
        match self.experiment {
            Experiment::RelativeBoundedness | Experiment::DlLipschitz => self.n_grid.iter().copied().max().unwrap_or(0),
            Experiment::NormEquivalence => 2 * self.max_frequency,
            _ => self.max_frequency,
        }
    }

    /// The parameters the experiment reads, for its report.
    pub fn used(&self) -> serde_json::Value {
        let serde_json::Value::Object(all) = serde_json::to_value(self).expect("parameters serialize") else {
            unreachable!("parameters serialize to an object")
        };
        let keys = self.experiment.keys();
        fn field(key: &str) -> &str {
            match key {
            "grids.tau_points" => "tau",
            "grids.n" => "n_grid",
            k if k.starts_with("ensemble.") => "ensemble",
            k => k.rsplit('.').next().unwrap_or(k),
            }
        }
        let spectrum_only = self.experiment == Experiment::TauRate && self.spectrum == Spectrum::Analytic;
        let kept = all
            .into_iter()
            .filter(|(name, _)| {
                name == "experiment"
                    || name == "seed"
                    || keys.iter().any(|k| field(k) == name && !(spectrum_only && name == "level"))
            })
            .collect();
        serde_json::Value::Object(kept)
    }

    fn taus(&self) -> &[f64] {
        match &self.tau {
            TauGrid::Values(v) => v,
            TauGrid::Window(_) => &[],
        }
    }
}

/// A report plus the matrices worth keeping, as `(file stem, CSV)`.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: ExperimentReport,
    pub matrices: Vec<(String, String)>,
}

impl Outcome {
    fn new(report: ExperimentReport) -> Self {
        Outcome {
            report,
            matrices: Vec::new(),
        }
    }
}

pub fn run(p: &Params) -> Result<Outcome> {
    let mut out = match p.experiment {
        Experiment::DiskOracle => disk_oracle(p),
        Experiment::ScalingIdentity => scaling_identity(p),
        Experiment::ContourCrosscheck => contour_crosscheck(p),
        Experiment::QuadratureCrosscheck => quadrature_crosscheck(p),
        Experiment::FdCheck => fd_suite(p),
        Experiment::TauRate => tau_rate(p),
        Experiment::RelativeBoundedness => relative_boundedness(p),
        Experiment::OrderInequalities => order_inequalities(p),
        Experiment::NormEquivalence => norm_equivalence(p),
        Experiment::DlLipschitz => lipschitz(p),
        Experiment::NeumannSeries => neumann(p),
        Experiment::LinearizationCompare => linearization(p),
    }?;
    out.report.experiment = p.experiment.name().into();
    out.report.param("config", p.used());
    Ok(out)
}

fn space(level: u32) -> Result<FemSpace<f64>> {
    FemSpace::new(build_disk_mesh(level)?)
}

/// The configured single conductivity on `mesh`.
pub fn conductivity(p: &Params, mesh: &DiskMesh<f64>) -> ConductivityField<f64> {
    match &p.conductivity {
        ConductivitySpec::Constant { value } => ConductivityField::constant(mesh, *value),
        ConductivitySpec::Inclusions { background, inclusions } => ConductivityField::from_fn(mesh, |x, y| {
            inclusions
                .iter()
                .rev()
                .find(|i| (x - i.center[0]).powi(2) + (y - i.center[1]).powi(2) < i.radius * i.radius)
                .map_or(*background, |i| i.value)
        }),
        ConductivitySpec::Random { seed } => ConductivityEnsemble {
            seed: seed.unwrap_or_else(|| p.stream_seed(0)),
            count: 1,
            rule: SMOOTH,
            lower: 0.5,
            upper: 2.0,
            constant_every: 0,
        }
        .sample(mesh, 0),
    }
}

fn constant_value(p: &Params) -> Result<f64> {
    match p.conductivity {
        ConductivitySpec::Constant { value } => Ok(value),
        _ => Err(Error::InvalidInput("a constant conductivity is required".into())),
    }
}

fn log_field(s: &ConductivityField<f64>) -> ConductivityField<f64> {
    s.map(f64::ln).into_log()
}

fn log_matrix(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(positive_eigensystem(a)?.reconstruct(f64::ln))
}

fn log_csv(a: &NdMatrix<f64>) -> Result<String> {
    let op = apply_spectral_function(&positive_eigensystem(a.matrix())?, SpectralFunction::Log)?;
    Ok(operator_to_csv(&op, "log_lambda"))
}

fn disk_oracle(p: &Params) -> Result<Outcome> {
    let c = constant_value(p)?;
    let n = p.max_frequency;
    let mut levels = Vec::new();
    let mut coarse = None;
    for level in [p.level, p.level + 1] {
        let sp = space(level)?;
        let basis = boundary_trig_basis(sp.mesh(), n)?;
        let a = nd_matrix(&sp, &ConductivityField::constant(sp.mesh(), c), &basis)?;
        let values: Vec<f64> = positive_eigensystem(a.matrix())?.values().iter().copied().collect();
        levels.push(values);
        coarse.get_or_insert(a);
    }
    let expected = |i: usize| 1.0 / (c * (i / 2 + 1) as f64);
    let err = |v: &[f64], i: usize| (v[i] - expected(i)).abs() / expected(i);
    let mut table = Table::new(
        "eigenvalues",
        &["index", "n", "expected", "eigenvalue", "rel_error", "eigenvalue_refined", "rel_error_refined"],
    );
    let (mut worst, mut worst_refined, mut improves) = (0.0f64, 0.0f64, true);
    for i in 0..2 * n {
        let (e0, e1) = (err(&levels[0], i), err(&levels[1], i));
        worst = worst.max(e0);
        worst_refined = worst_refined.max(e1);
        improves &= e1 < e0;
        table.push(vec![i as f64, (i / 2 + 1) as f64, expected(i), levels[0][i], e0, levels[1][i], e1]);
    }
    let mut report = ExperimentReport::new("disk_oracle");
    report.param("max_rel_error_refined", worst_refined);
    for (k, name) in [(4, "rel_error"), (6, "rel_error_refined")] {
        let points = table.rows.iter().map(|r| [r[1], r[k]]).collect();
        report.curves.push(Curve::new(name, "n", "relative_error", points));
    }
    report.tables.push(table);
    report.gate(Gate::at_most("max_rel_error", worst, 0.02));
    report.gate(Gate::holds("refinement_improves_every_eigenvalue", improves));
    let mut out = Outcome::new(report);
    out.matrices.push(("lambda".into(), nd_to_csv(&coarse.expect("two levels were solved"))));
    Ok(out)
}

fn scaling_identity(p: &Params) -> Result<Outcome> {
    let sp = space(p.level)?;
    let basis = boundary_trig_basis(sp.mesh(), p.max_frequency)?;
    let sigma = conductivity(p, sp.mesh());
    let a = nd_matrix(&sp, &sigma, &basis)?;
    let mut table = Table::new("scaling", &["c", "rel_error"]);
    let mut worst = 0.0f64;
    for &c in &p.scale {
        let b = nd_matrix(&sp, &sigma.scaled(c), &basis)?;
        let target = a.matrix() / c;
        let e = (b.matrix() - &target).amax() / target.amax();
        worst = worst.max(e);
        table.push(vec![c, e]);
    }
    let mut report = ExperimentReport::new("scaling_identity");
    report.param("sigma", sigma.hash_hex());
    report.tables.push(table);
    report.gate(Gate::at_most("max_rel_error", worst, 1e-12));
    let mut out = Outcome::new(report);
    out.matrices.push(("lambda".into(), nd_to_csv(&a)));
    Ok(out)
}

fn contour_crosscheck(p: &Params) -> Result<Outcome> {
    let sp = space(p.level)?;
    let basis = boundary_trig_basis(sp.mesh(), p.max_frequency)?;
    let ens = p.ensemble();
    let mut table = Table::new("contour", &["sample", "difference", "nodes", "imag_residual", "last_change"]);
    let mut worst = 0.0f64;
    let mut matrices = Vec::new();
    for i in 0..ens.count {
        let a = nd_matrix(&sp, &ens.sample(sp.mesh(), i), &basis)?;
        let rd = riesz_dunford_log(&a, 64)?;
        let d = spectral_norm(&(rd.operator.matrix() - log_matrix(a.matrix())?));
        worst = worst.max(d);
        table.push(vec![i as f64, d, rd.nodes as f64, rd.imag_residual, rd.change]);
        if i == 0 {
            matrices.push(("lambda_sample0".to_string(), nd_to_csv(&a)));
            matrices.push(("log_lambda_contour_sample0".to_string(), operator_to_csv(&rd.operator, "log_lambda")));
        }
    }
    let mut report = ExperimentReport::new("contour_crosscheck");
    report.param("ensemble", &ens);
    report.tables.push(table);
    report.gate(Gate::at_most("max_difference", worst, 1e-8));
    Ok(Outcome { report, matrices })
}

fn quadrature_crosscheck(p: &Params) -> Result<Outcome> {
    let sp = space(p.level)?;
    let basis = boundary_trig_basis(sp.mesh(), p.max_frequency)?;
    let ens = p.ensemble();
    let pairs = ens.count / 2;
    let mut table = Table::new("quadrature", &["pair", "tau", "difference", "derivative_norm"]);
    let mut worst = 0.0f64;
    for i in 0..pairs {
        let sigma = ens.sample(sp.mesh(), i);
        let eta = ens.sample(sp.mesh(), i + pairs).map(f64::ln);
        let model = ForwardModel::new(&sp, &sigma, &basis)?;
        let e = positive_eigensystem(model.nd().matrix())?;
        let d = model.dlambda_matrix(&eta)?;
        for &tau in p.taus() {
            let closed = df_tau_eigen(&e, &d, tau)?;
            let quad = df_tau_quadrature_matrix(model.nd().matrix(), &d, tau, QuadOptions::default())?;
            let diff = spectral_norm(&(&closed - quad));
            worst = worst.max(diff);
            table.push(vec![i as f64, tau, diff, spectral_norm(&closed)]);
        }
    }
    let mut report = ExperimentReport::new("quadrature_crosscheck");
    report.param("ensemble", &ens).param("pairs", pairs);
    report.tables.push(table);
    report.gate(Gate::at_most("max_difference", worst, 1e-8));
    Ok(Outcome::new(report))
}

fn fd_suite(p: &Params) -> Result<Outcome> {
    let sp = space(p.level)?;
    let mesh = sp.mesh();
    let basis = boundary_trig_basis(mesh, p.max_frequency)?;
    let sigma = conductivity(p, mesh);
    let kappa = log_field(&sigma);
    let eta = ConductivityField::from_fn(mesh, |x, y| 0.3 * (1.0 + x - y * y));
    let xi = ConductivityField::from_fn(mesh, |x, y| 0.2 * (3.0 * x).cos() * (1.0 + y));

    let mut report = ExperimentReport::new("fd_check");
    report.param("sigma", sigma.hash_hex());
    let mut maps = vec![FdMap::Lambda, FdMap::Lambda2];
    maps.extend(p.taus().iter().map(|&tau| FdMap::LogShifted { tau }));
    maps.extend(p.taus().iter().map(|&tau| FdMap::LogShifted2 { tau }));
    maps.push(FdMap::LogMap);
    for map in maps {
        let base = if map == FdMap::LogMap { &kappa } else { &sigma };
        let sub = fd_derivative_check(&sp, &basis, base, &eta, Some(&xi), map, &p.steps)?;
        report.absorb(&map.label(), sub);
    }

    // Exact identities: homogeneity of degree -1 in σ and the constant case
    // of the log map.
    let model = ForwardModel::new(&sp, &sigma, &basis)?;
    let lambda = model.nd().matrix();
    let scale = spectral_norm(lambda);
    let first = spectral_norm(&(model.dlambda_matrix(&sigma)? + lambda)) / scale;
    let second = spectral_norm(&(model.dk_lambda_matrix(&[&sigma, &sigma])? - lambda * 2.0)) / scale;
    let (k0, e0) = (1.5f64.ln(), 0.7);
    let kappa0 = ConductivityField::constant(mesh, k0).into_log();
    let constant_model = ForwardModel::new(&sp, &kappa0, &basis)?;
    let dl0 = dl(&constant_model, &ConductivityField::constant(mesh, e0))?.into_matrix();
    let dl_err = spectral_norm(&(dl0 + DMatrix::identity(basis.dim(), basis.dim()) * e0));
    report.gate(Gate::at_most("identity_dlambda_sigma_sigma", first, 1e-8));
    report.gate(Gate::at_most("identity_d2lambda_sigma_sigma", second, 2e-8));
    report.gate(Gate::at_most("identity_dl_constant", dl_err, 1e-8));

    // A constant log-conductivity along a constant direction: L is affine,
    // so every difference quotient is exact up to roundoff.
    let k_const = ConductivityField::constant(mesh, 0.3).into_log();
    let one = ConductivityField::constant(mesh, 1.0);
    let max_error = match fd_derivative_check(&sp, &basis, &k_const, &one, None, FdMap::LogMap, &p.steps) {
        Err(Error::DegenerateFit { max_error }) => max_error,
        Err(e) => return Err(e),
        Ok(r) => r
            .find_table("errors")
            .and_then(|t| t.column("error"))
            .map_or(f64::INFINITY, |c| c.into_iter().fold(0.0, f64::max)),
    };
    report.gate(Gate::at_most("constant_log_map_max_error", max_error, 1e-8));
    let mut out = Outcome::new(report);
    out.matrices.push(("lambda".into(), nd_to_csv(model.nd())));
    Ok(out)
}

fn tau_rate(p: &Params) -> Result<Outcome> {
    let (a, d) = match p.spectrum {
        Spectrum::Analytic => {
            // σ ≡ c along η ≡ 1: DΛ(c; 1) = -Λ(c)/c.
            let c = constant_value(p)?;
            let a = analytic_nd_constant_order(c, p.max_frequency)?;
            let d = a.matrix() / -c;
            (a, d)
        }
        Spectrum::Fem => {
            let sp = space(p.level)?;
            let basis = boundary_trig_basis(sp.mesh(), p.max_frequency)?;
            let model = ForwardModel::new(&sp, &conductivity(p, sp.mesh()), &basis)?;
            let d = model.dlambda_matrix(&ConductivityField::constant(sp.mesh(), 1.0))?;
            (model.nd().clone(), d)
        }
    };
    let e = positive_eigensystem(a.matrix())?;
    let taus = match &p.tau {
        TauGrid::Values(v) => v.clone(),
        TauGrid::Window(n) => tau_window_grid(&e, *n),
    };
    let mut report = ExperimentReport::new("tau_rate");
    report
        .param("lambda_min", e.lambda_min())
        .param("lambda_max", e.lambda_max())
        .param("taus", &taus)
        .param("direction", "eta = 1");
    for &eps in &p.epsilon {
        let settings = TauRateSettings {
            epsilon: eps,
            taus: taus.clone(),
        };
        report.absorb(&format!("eps{eps}"), tau_rate_experiment(a.matrix(), &d, 1.0, &settings)?);
    }
    let mut out = Outcome::new(report);
    out.matrices.push(("lambda".into(), nd_to_csv(&a)));
    out.matrices.push(("log_lambda".into(), log_csv(&a)?));
    Ok(out)
}

fn relative_boundedness(p: &Params) -> Result<Outcome> {
    let sp = space(p.level)?;
    let mesh = sp.mesh();
    let basis = boundary_trig_basis(mesh, p.max_basis_order())?;
    let ens = p.ensemble();
    let mut report = ExperimentReport::new("relative_boundedness");
    report.param("ensemble", &ens).param("pairs", ens.count / 2);
    for i in 0..ens.count / 2 {
        let k1 = log_field(&ens.sample(mesh, 2 * i));
        let k2 = log_field(&ens.sample(mesh, 2 * i + 1));
        report.absorb(&format!("pair{i}"), relative_boundedness_experiment(&sp, &basis, &k1, &k2, &p.n_grid)?);
    }
    // κ₂ - κ₁ = log 2 constant: L(κ₂) - L(κ₁) = -log 2·I at every N.
    let k1 = ConductivityField::constant(mesh, 0.0).into_log();
    let k2 = ConductivityField::constant(mesh, 2f64.ln()).into_log();
    let sub = relative_boundedness_experiment(&sp, &basis, &k1, &k2, &p.n_grid)?;
    let deviation = sub
        .find_table("boundedness")
        .and_then(|t| t.column("difference"))
        .map_or(f64::INFINITY, |c| c.iter().map(|d| (d - 2f64.ln()).abs()).fold(0.0, f64::max));
    report.absorb("constant", sub);
    report.gate(Gate::at_most("constant/difference_minus_log2", deviation, 1e-10));
    Ok(Outcome::new(report))
}

fn order_inequalities(p: &Params) -> Result<Outcome> {
    let sp = space(p.level)?;
    let basis = boundary_trig_basis(sp.mesh(), p.max_frequency)?;
    let ens = p.ensemble();
    let fields: Vec<_> = (0..ens.count).map(|i| ens.monotone_pair(sp.mesh(), i)).collect();
    let mats = fields
        .iter()
        .map(|(a, b)| Ok((nd_matrix(&sp, a, &basis)?, nd_matrix(&sp, b, &basis)?)))
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<OrderedPair> = fields
        .iter()
        .zip(&mats)
        .map(|((s1, s2), (l1, l2))| OrderedPair {
            sigma1: s1,
            sigma2: s2,
            lambda1: l1,
            lambda2: l2,
        })
        .collect();
    let vectors = random_vectors(basis.dim(), p.test_vectors, p.stream_seed(1));
    let mut report = order_survey(&pairs, &p.r, &vectors)?;
    report.param("ensemble", &ens);
    Ok(Outcome::new(report))
}

fn norm_equivalence(p: &Params) -> Result<Outcome> {
    let sp = space(p.level)?;
    let basis = boundary_trig_basis(sp.mesh(), 2 * p.max_frequency)?;
    let settings = NormSurveySettings {
        r: p.r.clone(),
        max_frequency: p.max_frequency,
        test_vectors: p.test_vectors,
        vector_seed: p.stream_seed(1),
    };
    Ok(Outcome::new(norm_equivalence_survey(&sp, &basis, &p.ensemble(), &settings)?))
}

fn lipschitz(p: &Params) -> Result<Outcome> {
    let sp = space(p.level)?;
    let mesh = sp.mesh();
    let basis = boundary_trig_basis(mesh, p.max_basis_order())?;
    let ens = p.ensemble();
    let pairs: Vec<_> = (0..ens.count / 2)
        .map(|i| (log_field(&ens.sample(mesh, 2 * i)), log_field(&ens.sample(mesh, 2 * i + 1))))
        .collect();
    let eta = ConductivityField::from_fn(mesh, |x, y| (2.0 * x).cos() + y);
    let mut report = dl_lipschitz_check(&sp, &basis, &pairs, &eta, &p.n_grid)?;
    report.param("ensemble", &ens).param("direction", "eta = cos(2x) + y");
    Ok(Outcome::new(report))
}

fn neumann(p: &Params) -> Result<Outcome> {
    let sp = space(p.level)?;
    let mesh = sp.mesh();
    let basis = boundary_trig_basis(mesh, p.max_frequency)?;
    let ens = p.ensemble();
    let pairs = ens.count / 2;
    let mut report = ExperimentReport::new("neumann_series");
    report.param("ensemble", &ens).param("pairs", pairs).param("delta", 0.05);
    for i in 0..pairs {
        let sigma = ens.sample(mesh, i);
        let wobble = ens.sample(mesh, i + pairs).map(f64::ln);
        let t = 0.1 * (1 + i % 5) as f64;
        let eta = near_proportional_direction(&sigma, &wobble, t, 0.05)?;
        let sub = neumann_series_check(&sp, &basis, &sigma, &eta, p.stream_seed(2 + i as u64))?;
        report.absorb(&format!("pair{i}"), sub);
    }
    // σ ≡ 1, η ≡ t: Λ(1 + t) = Λ(1)/(1 + t), so the k-th remainder is
    // t^{k+1}‖Λ(1)‖/(1 + t).
    let t = 0.3;
    let one = ConductivityField::constant(mesh, 1.0);
    let lambda_max = positive_eigensystem(nd_matrix(&sp, &one, &basis)?.matrix())?.lambda_max();
    let sub = neumann_series_check(&sp, &basis, &one, &ConductivityField::constant(mesh, t), p.stream_seed(1))?;
    let deviation = sub
        .find_table("remainders")
        .map(|tab| {
            tab.rows
                .iter()
                .map(|r| (r[1] - t.powi(r[0] as i32 + 1) * lambda_max / (1.0 + t)).abs() / lambda_max)
                .fold(0.0, f64::max)
        })
        .unwrap_or(f64::INFINITY);
    report.absorb("constant", sub);
    report.gate(Gate::at_most("constant/remainder_oracle", deviation, 1e-10));
    Ok(Outcome::new(report))
}

fn linearization(p: &Params) -> Result<Outcome> {
    let sp = space(p.level)?;
    let mesh = sp.mesh();
    let basis = boundary_trig_basis(mesh, p.max_frequency)?;
    let ens = p.ensemble();
    let kappa0 = log_field(&conductivity(p, mesh));
    let samples: Vec<_> = ens.generate(mesh).iter().map(log_field).collect();
    let mut report = linearization_error_compare(&sp, &basis, &kappa0, &samples)?;
    report.param("ensemble", &ens);
    Ok(Outcome::new(report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
            assert!(e.uses("mesh.level"));
        }
        assert!("tau".parse::<Experiment>().is_err());
    }

    #[test]
    fn report_parameters_are_the_used_ones() {
        let v = Params::preset(Experiment::TauRate, 3).used();
        let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort();
        assert_eq!(
            keys,
            ["conductivity", "epsilon", "experiment", "max_frequency", "seed", "spectrum", "tau"]
        );
        let v = Params::preset(Experiment::DlLipschitz, 0).used();
        assert!(v.get("ensemble").is_some() && v.get("n_grid").is_some() && v.get("r").is_none());
    }

    #[test]
    fn experiments_draw_different_seeds() {
        let mut seeds: Vec<u64> = Experiment::ALL.iter().map(|&e| Params::preset(e, 0).stream_seed(0)).collect();
        seeds.sort();
        seeds.dedup();
        assert_eq!(seeds.len(), Experiment::ALL.len());
    }
}
