//! The bundled verification suite: every lemma of the bound's derivation and
//! every model property, checked numerically with an explicit tolerance.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exec::{self, Execution};
use crate::geom::{self, Plane, UnitVec};
use crate::inequality::{self, AveragingMethod, EvaluateOptions};
use crate::models::{
    malus_marginal_check, BiasedMarginal, Coupling, HiddenVariableModel, NlhvModel,
    SourceDistribution,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Quadrature nodes for the rotation-average lemma.
    pub nodes: usize,
    /// Overrides the node-dependent lemma tolerance.
    pub lemma_tolerance: Option<f64>,
    pub lemma_triples: usize,
    pub chord_pairs: usize,
    pub projection_samples: u64,
    pub malus_pairs: usize,
    pub malus_samples: u64,
    pub chain_samples: u64,
    /// Monte Carlo events per rotation-averaged correlation.
    pub samples: u64,
    pub grid_points: usize,
    /// Shifts every NLHV model's Alice-side threshold in the marginal check;
    /// a non-zero value must make that check fail.
    pub inject_bias: Option<f64>,
    pub sigmas: f64,
    pub execution: Execution,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 2007,
            nodes: 1024,
            lemma_tolerance: None,
            lemma_triples: 100,
            chord_pairs: 100,
            projection_samples: 1_000_000,
            malus_pairs: 20,
            malus_samples: 100_000,
            chain_samples: 200_000,
            samples: 160_000,
            grid_points: 19,
            inject_bias: None,
            sigmas: 3.0,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub config: VerifyConfig,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{} {:<28} observed={:<12.6e} tolerance={:<10.3e} {}\n",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.observed,
                c.tolerance,
                c.detail
            ));
        }
        out.push_str(if self.passed { "all checks passed\n" } else { "verification FAILED\n" });
        out
    }
}

fn uniform_models() -> Vec<NlhvModel> {
    Coupling::ALL
        .iter()
        .map(|&c| NlhvModel::new(SourceDistribution::SingularUniform, c))
        .collect()
}

pub fn run(config: &VerifyConfig) -> Result<VerifyReport> {
    let mut checks = vec![
        chord_identity(config),
        projection_lemma(config),
        rotation_average_lemma(config)?,
        rotation_preserves_dots(config),
    ];
    checks.extend(malus_marginals(config)?);
    checks.extend(derivation_chains(config)?);
    checks.extend(bound_satisfaction(config)?);
    checks.push(quantum_violation_region());
    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport {
        config: config.clone(),
        checks,
        passed,
    })
}

fn random_plane<R: Rng + ?Sized>(rng: &mut R) -> Plane {
    loop {
        let p = UnitVec::sample_uniform(rng).as_vec3();
        let q = UnitVec::sample_uniform(rng).as_vec3();
        if let Ok(plane) = Plane::spanned_by(p, q) {
            if p.cross(&q).norm() > 1e-3 {
                return plane;
            }
        }
    }
}

fn chord_identity(config: &VerifyConfig) -> CheckResult {
    let mut rng = exec::stream_rng(exec::derive_seed(config.seed, 1));
    let mut worst = 0.0f64;
    for _ in 0..config.chord_pairs {
        let plane = random_plane(&mut rng);
        let alpha = rng.random_range(-PI..PI);
        let sigma = rng.random_range(0.0..TAU);
        let (a, b) = geom::settings_in_plane(&plane, alpha, sigma);
        let chord = (a.as_vec3() - b.as_vec3()).norm();
        worst = worst.max((chord - geom::chord_length(alpha)).abs());
        worst = worst.max((chord - geom::chord_length(geom::angle_between(&a, &b))).abs());
    }
    CheckResult {
        name: "chord-identity".into(),
        passed: worst <= 1e-12,
        observed: worst,
        tolerance: 1e-12,
        detail: format!("max | |a-b| - 2|sin(a/2)| | over {} pairs", config.chord_pairs),
    }
}

fn projection_lemma(config: &VerifyConfig) -> CheckResult {
    let seed = exec::derive_seed(config.seed, 2);
    let n = config.projection_samples;
    let size = exec::chunk_sizes(n);
    let (xy, xz) = (Plane::xy(), Plane::xz());
    let min = exec::map_indexed(config.execution, exec::chunk_count(n), |i| {
        let mut rng = exec::stream_rng(exec::derive_seed(seed, i));
        (0..size(i))
            .map(|_| {
                let u = UnitVec::sample_uniform(&mut rng);
                geom::project_to_plane(&u, &xy).1 + geom::project_to_plane(&u, &xz).1
            })
            .fold(f64::INFINITY, f64::min)
    })
    .into_iter()
    .fold(f64::INFINITY, f64::min);
    CheckResult {
        name: "projection-lemma".into(),
        passed: min >= 1.0 - 1e-12,
        observed: min,
        tolerance: 1e-12,
        detail: format!("min |u_xy| + |u_xz| over {n} uniform u"),
    }
}

fn rotation_average_lemma(config: &VerifyConfig) -> Result<CheckResult> {
    let mut rng = exec::stream_rng(exec::derive_seed(config.seed, 3));
    let tol = config
        .lemma_tolerance
        .unwrap_or_else(|| inequality::lemma_tolerance(config.nodes));
    let planes = [Plane::xy(), Plane::xz(), Plane::yz()];
    let mut worst = 0.0f64;
    for k in 0..config.lemma_triples {
        let plane = planes[k % 3];
        let (a, _) = geom::settings_in_plane(&plane, 0.0, rng.random_range(0.0..TAU));
        let (b, _) = geom::settings_in_plane(&plane, 0.0, rng.random_range(0.0..TAU));
        let u = UnitVec::sample_uniform(&mut rng);
        let check = inequality::verify_rotation_average_lemma(&a, &b, &u, config.nodes)?;
        worst = worst.max(check.error());
    }
    Ok(CheckResult {
        name: "rotation-average-lemma".into(),
        passed: worst <= tol,
        observed: worst,
        tolerance: tol,
        detail: format!(
            "max |quadrature - (2/pi)|a-b||u_p|| over {} triples, {} nodes",
            config.lemma_triples, config.nodes
        ),
    })
}

fn rotation_preserves_dots(config: &VerifyConfig) -> CheckResult {
    let mut rng = exec::stream_rng(exec::derive_seed(config.seed, 4));
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let axis = UnitVec::sample_uniform(&mut rng);
        let sigma = rng.random_range(-TAU..TAU);
        let v = UnitVec::sample_uniform(&mut rng);
        let w = UnitVec::sample_uniform(&mut rng);
        let (rv, rw) = (v.rotated(&axis, sigma), w.rotated(&axis, sigma));
        worst = worst
            .max((rv.dot(&rw) - v.dot(&w)).abs())
            .max((rv.norm() - 1.0).abs());
    }
    CheckResult {
        name: "rotation-invariance".into(),
        passed: worst <= 1e-12,
        observed: worst,
        tolerance: 1e-12,
        detail: "max change of norms and dot products under 1000 random rotations".into(),
    }
}

fn marginal_check_for<H: HiddenVariableModel>(
    model: &H,
    config: &VerifyConfig,
    seed: u64,
) -> Result<f64> {
    let mut rng = exec::stream_rng(seed);
    let mut worst = 0.0f64;
    for k in 0..config.malus_pairs {
        let u = UnitVec::sample_uniform(&mut rng);
        let a = UnitVec::sample_uniform(&mut rng);
        let check = malus_marginal_check(
            model,
            &a,
            &u,
            config.malus_samples,
            exec::derive_seed(seed, k as u64),
            config.execution,
        )?;
        worst = worst.max(check.max_z());
    }
    Ok(worst)
}

fn malus_marginals(config: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for (k, model) in uniform_models().into_iter().enumerate() {
        let seed = exec::derive_seed(exec::derive_seed(config.seed, 5), k as u64);
        let worst = match config.inject_bias {
            Some(bias) => marginal_check_for(&BiasedMarginal { inner: model, bias }, config, seed)?,
            None => marginal_check_for(&model, config, seed)?,
        };
        out.push(CheckResult {
            name: format!("malus-marginal/{}", model.coupling.name()),
            passed: worst <= config.sigmas,
            observed: worst,
            tolerance: config.sigmas,
            detail: format!(
                "max |mean - u.a| / stderr over {} (u, a) pairs, {} samples each",
                config.malus_pairs, config.malus_samples
            ),
        });
    }
    Ok(out)
}

fn derivation_chains(config: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let mut models = uniform_models();
    models.push(NlhvModel::new(SourceDistribution::ProductUniform, Coupling::Independent));
    let mut out = Vec::new();
    for (k, model) in models.iter().enumerate() {
        let rec = inequality::verify_derivation_chain(
            model,
            FRAC_PI_2,
            &Plane::xy(),
            config.chain_samples,
            exec::derive_seed(exec::derive_seed(config.seed, 6), k as u64),
            config.execution,
        )?;
        let worst = rec
            .links
            .iter()
            .map(|l| if l.sigma > 0.0 { -l.slack() / l.sigma } else if l.slack() < -1e-12 { f64::INFINITY } else { f64::NEG_INFINITY })
            .fold(f64::NEG_INFINITY, f64::max);
        let failing: Vec<&str> = rec
            .links
            .iter()
            .filter(|l| !l.holds(config.sigmas))
            .map(|l| l.name.as_str())
            .collect();
        out.push(CheckResult {
            name: format!("derivation-chain/{}:{}", model.source.name(), model.coupling.name()),
            passed: failing.is_empty(),
            observed: worst.max(0.0),
            tolerance: config.sigmas,
            detail: if failing.is_empty() {
                format!("{} links hold at alpha = pi/2", rec.links.len())
            } else {
                format!("failing links: {}", failing.join(", "))
            },
        });
    }
    Ok(out)
}

fn bound_satisfaction(config: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let nodes = 16usize;
    let method = AveragingMethod::MonteCarlo {
        nodes,
        samples_per_node: (config.samples / nodes as u64).max(10_000),
    };
    let planes = (Plane::xy(), Plane::xz());
    let grid: Vec<f64> = (0..config.grid_points)
        .map(|i| PI * i as f64 / (config.grid_points.max(2) - 1) as f64)
        .collect();
    let mut out = Vec::new();
    for (k, model) in uniform_models().into_iter().enumerate() {
        let seed = exec::derive_seed(exec::derive_seed(config.seed, 7), k as u64);
        let rows = inequality::sweep(&model, &grid, planes, method, EvaluateOptions::default(), seed, config.execution)?;
        let worst = rows
            .iter()
            .map(|r| r.margin + config.sigmas * r.lhs_stderr)
            .fold(f64::INFINITY, f64::min);
        out.push(CheckResult {
            name: format!("bound-satisfaction/{}", model.coupling.name()),
            passed: worst >= 0.0,
            observed: worst,
            tolerance: 0.0,
            detail: format!("min margin + {}sigma over {} angles", config.sigmas, grid.len()),
        });

        let mut two_plane_worst = f64::INFINITY;
        for &alpha in &grid {
            let (lhs, rhs, se) = inequality::two_plane_check(&model, alpha, planes, method, seed, config.execution)?;
            two_plane_worst = two_plane_worst.min(rhs - lhs + config.sigmas * se);
        }
        out.push(CheckResult {
            name: format!("two-plane-lemma/{}", model.coupling.name()),
            passed: two_plane_worst >= 0.0,
            observed: two_plane_worst,
            tolerance: 0.0,
            detail: "min of 2 - (4/pi)|sin(a/2)| + E_xy(a) + E_xz(a) + 3sigma".into(),
        });
    }
    Ok(out)
}

fn quantum_violation_region() -> CheckResult {
    let threshold = inequality::violation_threshold();
    let expected = 2.0 * (1.0 / PI).asin();
    let grid_ok = (1..=1800).all(|i| {
        let alpha = PI * i as f64 / 1800.0;
        let m = inequality::quantum_margin(alpha);
        if (alpha - threshold).abs() < 1e-9 {
            true
        } else if alpha < threshold {
            m < 0.0
        } else {
            m > 0.0
        }
    });
    let err = (threshold - expected).abs();
    CheckResult {
        name: "quantum-violation-region".into(),
        passed: grid_ok && err <= 1e-9,
        observed: threshold,
        tolerance: 1e-9,
        detail: format!("threshold vs 2 asin(1/pi) = {expected:.12}; grid sign pattern ok = {grid_ok}"),
    }
}
