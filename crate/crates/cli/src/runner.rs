//! Binds scenarios to library objects and executes them.
//!
//! Every scenario in a file is bound before any is executed, so a typo in
//! the last scenario is reported without running the first.

use std::sync::Arc;
use std::time::Instant;

use conflab::curvature::{CurvatureScalar, CurvatureTensor, DivergenceMethod, ScalarKind, TensorKind};
use conflab::geometry::library::{build_manifold, mercator_sphere};
use conflab::geometry::{
    build_vector_field, conformal_immersion_revolution, library_embedding, sample_points, AnalyticScalar, Bump, Chart, ChartKind,
    ConformalImmersion, EmbeddingSpec, Profile, ScalarField, SymTensorField, VectorFieldSpec,
};
use conflab::identities::{
    codazzi_check, conserved_current_flux, kazdan_warner, mean_curvature_kw, pohozaev_schoen, schoen_scalar, CheckOptions,
    Hypersurfaces, IdentityReport, LevelRecord, ScenarioBinding, Verdict,
};
use conflab::pohozaev_pde::{pohozaev_check, radial_eigenpair, radial_solve, Nonlinearity, OdeOptions};
use conflab::variational::{gradient_consistency, ActionFunctional, GateauxOptions, PerturbationField, StressEnergy};
use conflab::Jet;
use rayon::prelude::*;

use crate::scenario::{to_params, ConfigError, Scenario, ScenarioFile};

pub const IDENTITIES: &[&str] = &[
    "kazdan_warner",
    "pohozaev_schoen",
    "schoen_scalar",
    "conserved_flux",
    "codazzi",
    "mean_curvature_kw",
    "pohozaev",
    "gradient_consistency",
];

const DEFAULT_SAMPLES: usize = 32;
const DEFAULT_SEED: u64 = 7;

enum Job {
    KazdanWarner {
        binding: ScenarioBinding,
        v: Arc<dyn ScalarField>,
        opts: CheckOptions,
    },
    PohozaevSchoen {
        binding: ScenarioBinding,
        b: Arc<dyn SymTensorField>,
        opts: CheckOptions,
    },
    SchoenScalar {
        binding: ScenarioBinding,
        opts: CheckOptions,
    },
    ConservedFlux {
        binding: ScenarioBinding,
        b: Arc<dyn SymTensorField>,
        surfaces: Hypersurfaces,
        opts: CheckOptions,
    },
    Codazzi {
        embedding: EmbeddingSpec,
        samples: Vec<Vec<f64>>,
        tol: f64,
    },
    MeanCurvature {
        immersion: Box<ConformalImmersion>,
        field: VectorFieldSpec,
        opts: CheckOptions,
    },
    Pohozaev {
        problem: PdeProblem,
        tol: f64,
    },
    Gradient {
        action: ActionFunctional,
        candidate: Arc<dyn SymTensorField>,
        chart: Chart,
        probes: Vec<PerturbationField>,
        opts: GateauxOptions,
        tol: f64,
    },
}

enum PdeProblem {
    Shooting { n: usize, f: Nonlinearity, lambda: f64, bracket: (f64, f64), ode: OdeOptions },
    Eigen { n: usize, alpha: f64, bracket: (f64, f64), ode: OdeOptions },
}

pub struct BoundScenario {
    pub scenario: Scenario,
    job: Job,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioResult {
    pub name: String,
    pub identity: String,
    /// The report, or the error that stopped the scenario.
    pub outcome: Result<IdentityReport, String>,
    pub seconds: f64,
}

impl ScenarioResult {
    pub fn verdict_name(&self) -> &'static str {
        match &self.outcome {
            Ok(r) => r.verdict.name(),
            Err(_) => "error",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunReport {
    /// Ordered by scenario name.
    pub results: Vec<ScenarioResult>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.results.iter().all(|r| matches!(&r.outcome, Ok(rep) if rep.passed()))
    }

    /// 0 when everything passes, 2 for any error or failed hypothesis gate,
    /// 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        let config = self
            .results
            .iter()
            .any(|r| r.outcome.is_err() || matches!(&r.outcome, Ok(rep) if rep.verdict == Verdict::PreconditionFailed));
        if config {
            2
        } else if self.passed() {
            0
        } else {
            1
        }
    }
}

fn required<'a>(s: &Scenario, value: &'a Option<String>, key: &str) -> Result<&'a str, ConfigError> {
    value.as_deref().ok_or_else(|| s.error(&format!("`{}` needs `{key}`", s.identity)))
}

fn no_params(s: &Scenario, params: &crate::scenario::ParamTable, what: &str) -> Result<(), ConfigError> {
    match params.keys().next() {
        Some(k) => Err(s.error(&format!("unexpected {what} parameter `{k}`"))),
        None => Ok(()),
    }
}

fn check_options(s: &Scenario) -> CheckOptions {
    CheckOptions { levels: s.levels(), tol: s.tol(), gate_tol: s.gate_tol(), reduce: s.reduce.unwrap_or(false) }
}

fn binding(s: &Scenario) -> Result<ScenarioBinding, ConfigError> {
    let chart = build_manifold(required(s, &s.manifold, "manifold")?, &to_params(&s.manifold_params))?;
    let field = build_vector_field(&chart, required(s, &s.field, "field")?, &to_params(&s.field_params))?;
    Ok(ScenarioBinding::new(chart, field, s.samples.unwrap_or(DEFAULT_SAMPLES), s.seed.unwrap_or(DEFAULT_SEED)))
}

fn scalar_quantity(s: &Scenario) -> Result<Arc<dyn ScalarField>, ConfigError> {
    no_params(s, &s.quantity_params, "quantity")?;
    let kind = ScalarKind::from_name(required(s, &s.quantity, "quantity")?)?;
    Ok(Arc::new(CurvatureScalar::new(kind)))
}

/// Curvature tensors by key with an optional `factor`, and the stress-energy
/// tensors `stress_energy_log_r` (φ = log r on polar charts) and
/// `stress_energy_saddle` (φ = x² − y²) with an optional `trace_free` flag.
fn tensor_quantity(
    s: &Scenario,
    chart: &Chart,
    key: &str,
    table: &crate::scenario::ParamTable,
) -> Result<Arc<dyn SymTensorField>, ConfigError> {
    let params = to_params(table);
    if let Some(phi) = key.strip_prefix("stress_energy_") {
        params.check_keys(key, &["trace_free"])?;
        let trace_free = params.integer("trace_free", 0, 0, 1)? == 1;
        let polar = chart.kind == ChartKind::FlatPolar;
        let phi = match (phi, polar) {
            ("log_r", true) => AnalyticScalar::new("log r", |x: &[Jet]| x[0].ln()),
            ("saddle", true) => AnalyticScalar::new("x² − y²", |x: &[Jet]| (&x[0] * &x[0]) * x[1].scale(2.0).cos()),
            ("saddle", false) if chart.dim >= 2 => {
                AnalyticScalar::new("x² − y²", |x: &[Jet]| &(&x[0] * &x[0]) - &(&x[1] * &x[1]))
            }
            _ => return Err(s.error(&format!("`{key}` is not available on chart `{}`", chart.label))),
        };
        return Ok(Arc::new(StressEnergy { phi: Arc::new(phi), trace_free }));
    }
    params.check_keys(key, &["factor"])?;
    let kind = TensorKind::from_name(key)?;
    Ok(Arc::new(CurvatureTensor::new(kind, params.number_or("factor", 1.0)?)))
}

/// Four axis-0 probes spread over the first coordinate's range.
fn axis0_probes(chart: &Chart) -> Result<Vec<PerturbationField>, ConfigError> {
    let (a, b) = chart.region[0];
    let at = |c: f64, w: f64| Bump::along(0, a + c * (b - a), w * (b - a));
    let n = chart.dim;
    Ok(vec![
        PerturbationField::axis0(&at(0.32, 0.19), n),
        PerturbationField::slice(&at(0.6, 0.22), n),
        PerturbationField::metric(&at(0.45, 0.28), n),
        PerturbationField::axis0(&at(0.73, 0.16).scaled(-0.7), n),
    ])
}

fn pde_problem(s: &Scenario) -> Result<PdeProblem, ConfigError> {
    let params = to_params(&s.params);
    params.check_keys("pohozaev", &["n", "lambda", "bracket", "alpha", "rtol"])?;
    let n = params.integer("n", 3, 1, 12)?;
    let rtol = params.number_or("rtol", OdeOptions::default().rtol)?;
    let ode = if rtol == OdeOptions::default().rtol { OdeOptions::default() } else { OdeOptions::with_rtol(rtol) };
    let bracket = match params.list("bracket")? {
        Some(b) if b.len() == 2 => (b[0], b[1]),
        Some(_) => return Err(s.error("`bracket` needs two numbers")),
        None => return Err(s.error("`pohozaev` needs `bracket`")),
    };
    let q = to_params(&s.quantity_params);
    match required(s, &s.quantity, "quantity")? {
        "linear_eigen" => {
            q.check_keys("linear_eigen", &[])?;
            Ok(PdeProblem::Eigen { n, alpha: params.number_or("alpha", 1.0)?, bracket, ode })
        }
        "power" => {
            q.check_keys("power", &["p"])?;
            let f = Nonlinearity::Power(q.require("p")?);
            f.check()?;
            Ok(PdeProblem::Shooting { n, f, lambda: params.number_or("lambda", 1.0)?, bracket, ode })
        }
        "table" => {
            q.check_keys("table", &["u", "f"])?;
            let u = q.list("u")?.ok_or_else(|| s.error("`table` needs `u`"))?;
            let f = q.list("f")?.ok_or_else(|| s.error("`table` needs `f`"))?;
            let f = Nonlinearity::table(u, f)?;
            Ok(PdeProblem::Shooting { n, f, lambda: params.number_or("lambda", 1.0)?, bracket, ode })
        }
        other => Err(s.error(&format!("unknown nonlinearity `{other}` (expected power, table or linear_eigen)"))),
    }
}

pub fn bind(s: &Scenario) -> Result<BoundScenario, ConfigError> {
    s.validate()?;
    let job = match s.identity.as_str() {
        "kazdan_warner" => Job::KazdanWarner { binding: binding(s)?, v: scalar_quantity(s)?, opts: check_options(s) },
        "pohozaev_schoen" => {
            let binding = binding(s)?;
            let b = tensor_quantity(s, &binding.chart, required(s, &s.quantity, "quantity")?, &s.quantity_params)?;
            Job::PohozaevSchoen { binding, b, opts: check_options(s) }
        }
        "schoen_scalar" => {
            no_params(s, &s.quantity_params, "quantity")?;
            Job::SchoenScalar { binding: binding(s)?, opts: check_options(s) }
        }
        "conserved_flux" => {
            let binding = binding(s)?;
            let b = tensor_quantity(s, &binding.chart, required(s, &s.quantity, "quantity")?, &s.quantity_params)?;
            let p = to_params(&s.params);
            p.check_keys("conserved_flux", &["axis", "first", "second"])?;
            let surfaces = Hypersurfaces {
                axis: p.integer("axis", 0, 0, binding.chart.dim - 1)?,
                first: p.require("first")?,
                second: p.require("second")?,
            };
            Job::ConservedFlux { binding, b, surfaces, opts: check_options(s) }
        }
        "codazzi" => {
            let embedding = library_embedding(required(s, &s.embedding, "embedding")?, &to_params(&s.embedding_params))?;
            let samples = sample_points(&embedding.chart(), s.samples.unwrap_or(100), 0.05, s.seed.unwrap_or(DEFAULT_SEED));
            Job::Codazzi { embedding, samples, tol: s.tol() }
        }
        "mean_curvature_kw" => {
            let p = to_params(&s.embedding_params);
            let profile = match required(s, &s.embedding, "embedding")? {
                "round" => {
                    p.check_keys("round", &[])?;
                    Profile::round()
                }
                "ellipsoid_of_revolution" => {
                    p.check_keys("ellipsoid_of_revolution", &["a", "c"])?;
                    Profile::ellipsoid(p.number_or("a", 1.0)?, p.number_or("c", 1.5)?)
                }
                other => return Err(s.error(&format!("unknown profile `{other}` (expected round or ellipsoid_of_revolution)"))),
            };
            let q = to_params(&s.params);
            q.check_keys("mean_curvature_kw", &["quadrature_tol"])?;
            let immersion = conformal_immersion_revolution(profile, q.number_or("quadrature_tol", 1e-8)?)?;
            let field = build_vector_field(&mercator_sphere(), required(s, &s.field, "field")?, &to_params(&s.field_params))?;
            Job::MeanCurvature { immersion: Box::new(immersion), field, opts: check_options(s) }
        }
        "pohozaev" => Job::Pohozaev { problem: pde_problem(s)?, tol: s.tol() },
        "gradient_consistency" => {
            let chart = build_manifold(required(s, &s.manifold, "manifold")?, &to_params(&s.manifold_params))?;
            no_params(s, &s.quantity_params, "quantity")?;
            let action = ActionFunctional::by_name(required(s, &s.quantity, "quantity")?, chart.dim, None)?;
            let candidate = tensor_quantity(s, &chart, required(s, &s.candidate, "candidate")?, &s.candidate_params)?;
            let p = to_params(&s.params);
            p.check_keys("gradient_consistency", &["steps"])?;
            let mut opts = GateauxOptions::at_level(*s.levels().last().expect("validated"));
            opts.reduce = s.reduce.unwrap_or(false);
            if let Some(steps) = p.list("steps")? {
                opts.steps = steps;
            }
            let probes = axis0_probes(&chart)?;
            Job::Gradient { action, candidate, chart, probes, opts, tol: s.tol() }
        }
        other => return Err(s.error(&format!("unknown identity `{other}` (expected one of {IDENTITIES:?})"))),
    };
    Ok(BoundScenario { scenario: s.clone(), job })
}

fn run_job(job: &Job) -> conflab::Result<IdentityReport> {
    match job {
        Job::KazdanWarner { binding, v, opts } => kazdan_warner(binding, v.clone(), opts),
        Job::PohozaevSchoen { binding, b, opts } => pohozaev_schoen(binding, b.clone(), opts),
        Job::SchoenScalar { binding, opts } => schoen_scalar(binding, opts),
        Job::ConservedFlux { binding, b, surfaces, opts } => conserved_current_flux(binding, b.clone(), *surfaces, opts),
        Job::Codazzi { embedding, samples, tol } => {
            let c = codazzi_check(embedding, samples, DivergenceMethod::Analytic)?;
            // sup residuals are absolute: unit scale
            let record = |lhs: f64| vec![LevelRecord { level: 0, lhs, rhs: 0.0, scale: 1.0 }];
            let name = format!("codazzi[{}]", c.embedding);
            let mut report = IdentityReport::from_history(&name, record(c.codazzi.max(c.conservation)), *tol, None);
            report.secondary.push(IdentityReport::from_history(&format!("{name}.contracted"), record(c.codazzi), *tol, None));
            report.secondary.push(IdentityReport::from_history(
                &format!("{name}.conservation"),
                record(c.conservation),
                *tol,
                None,
            ));
            Ok(report)
        }
        Job::MeanCurvature { immersion, field, opts } => mean_curvature_kw(immersion, field.clone(), opts),
        Job::Pohozaev { problem, tol } => {
            let sol = match problem {
                PdeProblem::Shooting { n, f, lambda, bracket, ode } => radial_solve(*n, f, *lambda, *bracket, *ode)?,
                PdeProblem::Eigen { n, alpha, bracket, ode } => radial_eigenpair(*n, *alpha, *bracket, *ode)?,
            };
            let mut report = pohozaev_check(&sol, *tol);
            let (grad, work) = sol.energy();
            report.message =
                Some(format!("alpha = {:.12e}, lambda = {:.12e}, |u(1)| = {:.3e}", sol.alpha, sol.lambda, sol.boundary_residual));
            report.secondary.push(IdentityReport::from_history(
                &format!("{}.energy", report.name),
                vec![LevelRecord { level: 0, lhs: grad, rhs: work, scale: 0.0 }],
                1e-6,
                None,
            ));
            Ok(report)
        }
        Job::Gradient { action, candidate, chart, probes, opts, tol } => {
            let c = gradient_consistency(action, candidate.clone(), chart, probes, None, opts)?;
            let name = format!("gradient_consistency[{} vs {}]", action.label, candidate.label());
            let mut report = IdentityReport::from_history(
                &name,
                vec![LevelRecord { level: opts.level, lhs: c.residual, rhs: 0.0, scale: 1.0 }],
                *tol,
                None,
            );
            report.message = Some(format!("fitted constant c = {:.12e}", c.constant));
            let scale = c.probes.iter().map(|p| p.derivative.value.abs()).fold(0.0, f64::max);
            for p in &c.probes {
                report.secondary.push(IdentityReport::from_history(
                    &format!("{name}.{}", p.label),
                    vec![LevelRecord { level: opts.level, lhs: p.derivative.value, rhs: c.constant * p.pairing, scale }],
                    *tol,
                    None,
                ));
            }
            Ok(report)
        }
    }
}

pub fn execute(bound: &BoundScenario) -> ScenarioResult {
    let start = Instant::now();
    let outcome = run_job(&bound.job).map_err(|e| e.to_string());
    ScenarioResult {
        name: bound.scenario.name.clone(),
        identity: bound.scenario.identity.clone(),
        outcome,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Command-line overrides applied to every scenario.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub levels: Option<Vec<usize>>,
    pub tol: Option<f64>,
}

pub fn run_file(file: &ScenarioFile, overrides: &Overrides) -> Result<RunReport, ConfigError> {
    let bound = file
        .scenario
        .iter()
        .map(|s| {
            let mut s = s.clone();
            if let Some(l) = &overrides.levels {
                s.levels = Some(l.clone());
            }
            if let Some(t) = overrides.tol {
                s.tol = Some(t);
            }
            bind(&s)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut results: Vec<ScenarioResult> = bound.par_iter().map(execute).collect();
    results.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(RunReport { results })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse;

    fn run(text: &str) -> Result<RunReport, ConfigError> {
        run_file(&parse(text).unwrap(), &Overrides::default())
    }

    #[test]
    fn empty_run_passes() {
        let r = run("").unwrap();
        assert!(r.results.is_empty());
        assert_eq!(r.exit_code(), 0);
    }

    #[test]
    fn unknown_keys_are_configuration_errors() {
        let base = "[[scenario]]\nname = \"a\"\nidentity = \"kazdan_warner\"\nfield = \"boost\"\nquantity = \"Sc\"\n";
        assert!(run(&format!("{base}manifold = \"round_spere_polar\"\n")).unwrap_err().0.contains("round_spere_polar"));
        assert!(run(&format!("{base}manifold = \"round_sphere_polar\"\nmanifold_params = {{ m = 2 }}\n")).is_err());
        let bad_identity = "[[scenario]]\nname = \"a\"\nidentity = \"kazdan\"\n";
        assert!(run(bad_identity).unwrap_err().0.contains("unknown identity"));
    }

    #[test]
    fn ricci_tensor_fails_the_conservation_gate() {
        let r = run(r#"
            [[scenario]]
            name = "ricci"
            identity = "pohozaev_schoen"
            manifold = "hemisphere_cap"
            manifold_params = { n = 3, theta0 = 2.0, linear = [0.15], quadratic = [0.1] }
            field = "boost"
            quantity = "ricci"
            levels = [2]
            reduce = true
            "#)
        .unwrap();
        assert_eq!(r.results[0].verdict_name(), "precondition_failed");
        assert_eq!(r.exit_code(), 2);
    }

    #[test]
    fn failing_identity_exits_one() {
        // A deliberately impossible tolerance on a coarse grid.
        let r = run(r#"
            [[scenario]]
            name = "tight"
            identity = "pohozaev"
            quantity = "power"
            quantity_params = { p = 3 }
            params = { n = 3, bracket = [1, 8], rtol = 1e-4 }
            tol = 1e-15
            "#)
        .unwrap();
        assert_eq!(r.results[0].verdict_name(), "fail");
        assert_eq!(r.exit_code(), 1);
    }

    #[test]
    fn results_are_sorted_by_name() {
        let r = run(r#"
            [[scenario]]
            name = "b"
            identity = "pohozaev"
            quantity = "linear_eigen"
            params = { n = 3, bracket = [5, 15] }
            [[scenario]]
            name = "a"
            identity = "codazzi"
            embedding = "torus"
            samples = 10
            "#)
        .unwrap();
        let names: Vec<&str> = r.results.iter().map(|x| x.name.as_str()).collect();
        assert_eq!(names, ["a", "b"]);
        assert!(r.passed(), "{r:?}");
    }
}
