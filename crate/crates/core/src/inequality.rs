//! Rotation-averaged correlations and the Leggett-type two-plane bound
//!
//! `E(α)` is the mean of `C(R(σ)a, R(σ)b)` over all rotations `R(σ)` within
//! the plane of `a` and `b`, where `α` is the angle between the settings.
//! For any hidden-variable model whose subensemble means follow the Malus
//! law,
//!
//! ```text
//! |E_1(α) + E_1(0)| + |E_2(α) + E_2(0)| <= 4 - (4/π)|sin(α/2)|
//! ```
//!
//! for two orthogonal planes 1 and 2. The quantum singlet has
//! `E(α) = -cos α` and exceeds the bound for `0 < α < 2·asin(1/π)`.

use std::f64::consts::{FRAC_2_PI, PI, TAU};
use std::num::NonZeroUsize;

use gauss_quad::GaussLegendre;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::geom::{self, Plane, UnitVec, Vec3};
use crate::models::{HiddenVariableModel, MeasurementModel};
use crate::stats::{self, correlation_stderr};

/// Default node count for σ-averages.
pub const DEFAULT_NODES: usize = 256;

/// Mean of `f` at `nodes` equispaced points of `[0, 2π)`.
pub fn periodic_trapezoid<F: Fn(f64) -> f64>(nodes: usize, f: F) -> f64 {
    let h = TAU / nodes as f64;
    (0..nodes).map(|j| f(j as f64 * h)).sum::<f64>() / nodes as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum AveragingMethod {
    /// Periodic trapezoid over exact per-node correlations.
    Quadrature { nodes: usize },
    /// Periodic trapezoid over simulated per-node correlations.
    MonteCarlo { nodes: usize, samples_per_node: u64 },
    ClosedForm,
}

impl AveragingMethod {
    fn validate(&self) -> Result<()> {
        match *self {
            AveragingMethod::Quadrature { nodes } if nodes < 8 => Err(Error::InvalidParameter(
                format!("quadrature needs at least 8 nodes, got {nodes}"),
            )),
            AveragingMethod::MonteCarlo { nodes: 0, .. } => Err(
                Error::InvalidParameter("Monte Carlo averaging needs at least 1 node".into()),
            ),
            AveragingMethod::MonteCarlo {
                samples_per_node, ..
            } if samples_per_node < 10_000 => Err(Error::InvalidParameter(format!(
                "Monte Carlo averaging needs at least 1e4 samples per node, got {samples_per_node}"
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneAveragedCorrelation {
    pub plane: Plane,
    pub alpha: f64,
    pub value: f64,
    /// Zero for exact methods.
    pub stderr: f64,
    pub method: AveragingMethod,
}

/// `E(α)` in `plane`.
pub fn plane_averaged_correlation<M: MeasurementModel>(
    model: &M,
    plane: &Plane,
    alpha: f64,
    method: AveragingMethod,
    seed: u64,
    exec: Execution,
) -> Result<PlaneAveragedCorrelation> {
    method.validate()?;
    let (value, stderr) = match method {
        AveragingMethod::ClosedForm => (
            model
                .closed_form_average(alpha)
                .ok_or(Error::NoExactCorrelation)?,
            0.0,
        ),
        AveragingMethod::Quadrature { nodes } => {
            let h = TAU / nodes as f64;
            let mut sum = 0.0;
            for j in 0..nodes {
                let (a, b) = geom::settings_in_plane(plane, alpha, j as f64 * h);
                sum += model
                    .exact_correlation(&a, &b)
                    .ok_or(Error::NoExactCorrelation)?;
            }
            (sum / nodes as f64, 0.0)
        }
        AveragingMethod::MonteCarlo {
            nodes,
            samples_per_node,
        } => {
            let h = TAU / nodes as f64;
            let per_node = exec::map_indexed(exec, nodes as u64, |j| {
                let (a, b) = geom::settings_in_plane(plane, alpha, j as f64 * h);
                let counts = stats::tally(
                    model,
                    &a,
                    &b,
                    samples_per_node,
                    exec::derive_seed(seed, j),
                    exec,
                );
                let s = counts.n_same as f64 / counts.n as f64;
                (2.0 * s - 1.0, correlation_stderr(s, counts.n as f64))
            });
            let k = nodes as f64;
            let mean = per_node.iter().map(|p| p.0).sum::<f64>() / k;
            let var = per_node.iter().map(|p| p.1 * p.1).sum::<f64>();
            (mean, var.sqrt() / k)
        }
    };
    Ok(PlaneAveragedCorrelation {
        plane: *plane,
        alpha,
        value,
        stderr,
        method,
    })
}

/// `4 - (4/π)|sin(α/2)|`.
pub fn leggett_bound(alpha: f64) -> f64 {
    4.0 - 4.0 / PI * (0.5 * alpha).sin().abs()
}

/// Left-hand side for the singlet, `E(α) = -cos α` in both planes.
pub fn quantum_lhs(alpha: f64) -> f64 {
    2.0 * (1.0 + alpha.cos()).abs()
}

/// `bound - lhs` for the singlet. Negative means violation.
pub fn quantum_margin(alpha: f64) -> f64 {
    leggett_bound(alpha) - quantum_lhs(alpha)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub alpha: f64,
    pub e_xy_alpha: f64,
    pub e_xy_0: f64,
    pub e_xz_alpha: f64,
    pub e_xz_0: f64,
    pub lhs: f64,
    pub bound: f64,
    pub margin: f64,
    pub violated: bool,
    /// First-order propagated standard error of `lhs`; zero for exact methods.
    pub lhs_stderr: f64,
}

impl InequalityReport {
    /// `xy`/`xz` name the first/second plane of the pair.
    fn assemble(alpha: f64, parts: [&PlaneAveragedCorrelation; 4]) -> Self {
        let [xy_a, xy_0, xz_a, xz_0] = parts;
        let lhs = (xy_a.value + xy_0.value).abs() + (xz_a.value + xz_0.value).abs();
        let bound = leggett_bound(alpha);
        let margin = bound - lhs;
        let lhs_stderr = parts.iter().map(|p| p.stderr * p.stderr).sum::<f64>().sqrt();
        InequalityReport {
            alpha,
            e_xy_alpha: xy_a.value,
            e_xy_0: xy_0.value,
            e_xz_alpha: xz_a.value,
            e_xz_0: xz_0.value,
            lhs,
            bound,
            margin,
            violated: margin < 0.0,
            lhs_stderr,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluateOptions {
    /// Accept non-orthogonal planes. The bound is only proven for orthogonal
    /// ones; this is for exploration.
    pub allow_non_orthogonal: bool,
}

/// Seed for `E(α)` in `plane`, keyed by the plane's normal and by `α` so that
/// results do not depend on plane order or on which other angles are run.
pub fn correlation_seed(seed: u64, plane: &Plane, alpha: f64) -> u64 {
    let n = plane.normal;
    let plane_seed = [n.x(), n.y(), n.z()]
        .iter()
        .fold(seed, |s, c| exec::derive_seed(s, (c + 0.0).to_bits()));
    exec::derive_seed(plane_seed, (alpha + 0.0).to_bits())
}

fn check_planes(planes: &(Plane, Plane), options: EvaluateOptions) -> Result<()> {
    if !options.allow_non_orthogonal && !planes.0.is_orthogonal_to(&planes.1, 1e-9) {
        let angle = planes.0.normal.dot(&planes.1.normal).abs().clamp(0.0, 1.0).acos();
        return Err(Error::OrthogonalityRequired {
            angle_deg: angle.to_degrees(),
        });
    }
    Ok(())
}

pub fn evaluate_inequality<M: MeasurementModel>(
    model: &M,
    alpha: f64,
    planes: (Plane, Plane),
    method: AveragingMethod,
    options: EvaluateOptions,
    seed: u64,
    exec: Execution,
) -> Result<InequalityReport> {
    check_planes(&planes, options)?;
    let e = |plane: &Plane, angle: f64| {
        plane_averaged_correlation(
            model,
            plane,
            angle,
            method,
            correlation_seed(seed, plane, angle),
            exec,
        )
    };
    let xy_a = e(&planes.0, alpha)?;
    let xy_0 = e(&planes.0, 0.0)?;
    let xz_a = e(&planes.1, alpha)?;
    let xz_0 = e(&planes.1, 0.0)?;
    Ok(InequalityReport::assemble(alpha, [&xy_a, &xy_0, &xz_a, &xz_0]))
}

/// Evaluates the inequality over an angle grid. `E(0)` is computed once per
/// plane; every row equals what [`evaluate_inequality`] returns for that
/// angle with the same seed.
pub fn sweep<M: MeasurementModel>(
    model: &M,
    alphas: &[f64],
    planes: (Plane, Plane),
    method: AveragingMethod,
    options: EvaluateOptions,
    seed: u64,
    exec: Execution,
) -> Result<Vec<InequalityReport>> {
    check_planes(&planes, options)?;
    let e = |plane: &Plane, angle: f64| {
        plane_averaged_correlation(
            model,
            plane,
            angle,
            method,
            correlation_seed(seed, plane, angle),
            exec,
        )
    };
    let xy_0 = e(&planes.0, 0.0)?;
    let xz_0 = e(&planes.1, 0.0)?;
    let rows = exec::map_indexed(exec, alphas.len() as u64, |i| {
        let alpha = alphas[i as usize];
        let xy_a = e(&planes.0, alpha)?;
        let xz_a = e(&planes.1, alpha)?;
        Ok(InequalityReport::assemble(alpha, [&xy_a, &xy_0, &xz_a, &xz_0]))
    });
    rows.into_iter().collect()
}

/// Bisects `f` on `[lo, hi]` (opposite signs) down to width `tol`.
fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let f_lo = f(lo);
    debug_assert!(f_lo * f(hi) < 0.0, "root not bracketed");
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (f_lo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Upper end of the singlet's violation region: the root of
/// `2(1 + cos α) = 4 - (4/π) sin(α/2)` on `(0, π)`, by bisection.
pub fn violation_threshold() -> f64 {
    // margin < 0 just above 0 and > 0 at π
    bisect(quantum_margin, 1e-3, PI, 1e-12)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxViolation {
    pub alpha: f64,
    /// `lhs - bound` at `alpha`, positive.
    pub excess: f64,
}

/// Angle of largest singlet violation, found as the zero of
/// `d/dα [2(1 + cos α) - bound(α)] = -2 sin α + (2/π) cos(α/2)`, which
/// decreases on `(0, threshold)`.
pub fn max_violation_angle() -> MaxViolation {
    let slope = |a: f64| -2.0 * a.sin() + FRAC_2_PI * (0.5 * a).cos();
    let alpha = bisect(slope, 1e-6, violation_threshold(), 1e-13);
    MaxViolation {
        alpha,
        excess: -quantum_margin(alpha),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaCheck {
    /// σ-average of `|(R(σ)(a - b))·u|` by quadrature.
    pub lhs: f64,
    /// `(2/π)|a - b||u_plane|`.
    pub rhs: f64,
    pub plane: &'static str,
    pub nodes: usize,
}

impl LemmaCheck {
    pub fn error(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

/// Coordinate plane containing both vectors.
fn common_coordinate_plane(a: &Vec3, b: &Vec3) -> Option<(&'static str, Plane)> {
    [("xy", Plane::xy()), ("xz", Plane::xz()), ("yz", Plane::yz())]
        .into_iter()
        .find(|(_, p)| p.contains(a, 1e-12) && p.contains(b, 1e-12))
}

/// Checks the rotation-average identity
/// `mean_σ |(R(σ)(a - b))·u| = (2/π)|a - b||u_plane|` for settings in a
/// coordinate plane.
///
/// The integrand has kinks where `(R(σ)(a - b))·u` changes sign. They are
/// located by a sign scan on the node grid refined by bisection, and each
/// smooth arc is integrated by Gauss-Legendre, `nodes` points in total.
pub fn verify_rotation_average_lemma(
    a: &UnitVec,
    b: &UnitVec,
    u: &UnitVec,
    nodes: usize,
) -> Result<LemmaCheck> {
    if nodes < 8 {
        return Err(Error::InvalidParameter(format!(
            "lemma quadrature needs at least 8 nodes, got {nodes}"
        )));
    }
    let (name, plane) = common_coordinate_plane(&a.as_vec3(), &b.as_vec3())
        .ok_or_else(|| Error::NotCoplanar("xy, xz or yz".to_string()))?;
    let w = a.as_vec3() - b.as_vec3();
    let wn = w.norm();
    let rhs = FRAC_2_PI * wn * geom::project_to_plane(u, &plane).1;
    let lhs = if wn == 0.0 {
        0.0
    } else {
        let axis = plane.normal;
        let signed = |sigma: f64| -> f64 {
            let (s, c) = sigma.sin_cos();
            let r = c * w + s * axis.as_vec3().cross(&w);
            r.dot(&u.as_vec3())
        };
        arc_split_average(signed, nodes)
    };
    Ok(LemmaCheck {
        lhs,
        rhs,
        plane: name,
        nodes,
    })
}

/// Mean of `|g|` over one period for smooth periodic `g`.
fn arc_split_average<F: Fn(f64) -> f64>(g: F, nodes: usize) -> f64 {
    let h = TAU / nodes as f64;
    let mut cuts = Vec::new();
    let mut prev = g(0.0);
    for j in 1..=nodes {
        let t = j as f64 * h;
        let cur = g(t);
        if prev == 0.0 {
            cuts.push(t - h);
        } else if prev * cur < 0.0 {
            cuts.push(bisect(&g, t - h, t, 1e-15));
        }
        prev = cur;
    }
    let abs_g = |t: f64| g(t).abs();
    if cuts.is_empty() {
        return periodic_trapezoid(nodes, abs_g);
    }
    let per_arc = (nodes / cuts.len()).max(2);
    let rule = GaussLegendre::new(NonZeroUsize::new(per_arc).expect("per_arc >= 2"));
    let start = cuts[0];
    let mut total = 0.0;
    for k in 0..cuts.len() {
        let lo = cuts[k];
        let hi = cuts.get(k + 1).copied().unwrap_or(start + TAU);
        total += rule.integrate(lo, hi, abs_g);
    }
    total / TAU
}

/// Tolerance for [`verify_rotation_average_lemma`] at `nodes` points: the
/// Gauss-Legendre remainder bound for two half-period arcs of an integrand
/// `c·sin` with `c <= 2`, floored at 1e-6.
pub fn lemma_tolerance(nodes: usize) -> f64 {
    let n = (nodes / 2).max(2) as f64;
    // ln[ L^{2n+1} (n!)^4 / ((2n+1) ((2n)!)^3) ], L = π
    let ln_fact = |k: f64| (1..=k as u64).map(|i| (i as f64).ln()).sum::<f64>();
    let ln_rem = (2.0 * n + 1.0) * PI.ln() + 4.0 * ln_fact(n)
        - (2.0 * n + 1.0).ln()
        - 3.0 * ln_fact(2.0 * n);
    let bound = 2.0 * 2.0 * ln_rem.exp() / TAU;
    bound.max(1e-6)
}

/// One inequality `lhs <= rhs` of the derivation, with its Monte Carlo
/// standard error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainLink {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub sigma: f64,
}

impl ChainLink {
    fn new(name: &str, lhs: f64, rhs: f64, sigma: f64) -> Self {
        ChainLink {
            name: name.to_string(),
            lhs,
            rhs,
            sigma,
        }
    }

    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }

    pub fn holds(&self, sigmas: f64) -> bool {
        self.slack() >= -sigmas * self.sigma - 1e-12
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub alpha: f64,
    pub plane: Plane,
    pub samples: u64,
    pub c_ab: f64,
    pub c_aa: f64,
    /// `1 + C(a, a)`: zero when equal settings are perfectly anticorrelated.
    pub anticorrelation_defect: f64,
    /// `mean |a·(u + v)|` over the source: zero iff the source is singular.
    pub singular_support: f64,
    pub links: Vec<ChainLink>,
}

impl ChainRecord {
    pub fn link(&self, name: &str) -> Option<&ChainLink> {
        self.links.iter().find(|l| l.name == name)
    }

    pub fn all_hold(&self, sigmas: f64) -> bool {
        self.links.iter().all(|l| l.holds(sigmas))
    }
}

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.n == 0.0 {
            return o;
        }
        if o.n == 0.0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * o.n / n,
            m2: self.m2 + o.m2 + d * d * self.n * o.n / n,
        }
    }

    fn stderr(&self) -> f64 {
        if self.n < 2.0 {
            return 0.0;
        }
        (self.m2 / (self.n - 1.0) / self.n).sqrt()
    }
}

/// Source averages used by the derivation, indexed by the constants below.
const SRC_TERMS: usize = 10;
const PLUS_AB: usize = 0; // |a·u + b·v|
const PLUS_AA: usize = 1; // |a·u + a·v|
const MINUS_AB: usize = 2; // |a·u - b·v|
const MINUS_AA: usize = 3; // |a·u - a·v|
const BA_V: usize = 4; // |(b - a)·v|
const V_PLANE: usize = 5; // |v_plane|
const SUPPORT: usize = 6; // |a·(u + v)|
const AB_U: usize = 7; // |(a - b)·u|
const U_PLANE: usize = 8; // |u_plane|
const STEP_SUM: usize = 9; // |a·u + b·v| + |a·u + a·v|

fn source_terms(u: &UnitVec, v: &UnitVec, a: &UnitVec, b: &UnitVec, plane: &Plane) -> [f64; SRC_TERMS] {
    let (au, av, bv) = (a.dot(u), a.dot(v), b.dot(v));
    let ba = b.as_vec3() - a.as_vec3();
    let mut t = [0.0; SRC_TERMS];
    t[PLUS_AB] = (au + bv).abs();
    t[PLUS_AA] = (au + av).abs();
    t[MINUS_AB] = (au - bv).abs();
    t[MINUS_AA] = (au - av).abs();
    t[BA_V] = ba.dot(&v.as_vec3()).abs();
    t[V_PLANE] = geom::project_to_plane(v, plane).1;
    t[SUPPORT] = a.as_vec3().dot(&(u.as_vec3() + v.as_vec3())).abs();
    t[AB_U] = ba.dot(&u.as_vec3()).abs();
    t[U_PLANE] = geom::project_to_plane(u, plane).1;
    t[STEP_SUM] = t[PLUS_AB] + t[PLUS_AA];
    t
}

/// Monte Carlo check of every inequality in the derivation of the bound, at
/// settings `a = e1`, `b` at angle `alpha` from `a` in `plane`.
///
/// Links (each `lhs <= rhs`):
/// - `malus-lower`, `malus-upper`: `-1 + ⟨|a·u - b·v|⟩ <= -C(a,b) <= 1 - ⟨|a·u + b·v|⟩`
/// - `pair-sum`: `-C(a,b) - C(a,a) <= 2 - ⟨|a·u + b·v| + |a·u + a·v|⟩`
/// - `triangle`: that right side `<= 2 - ⟨|(b - a)·v|⟩`
/// - `mirror-pair-sum`, `mirror-triangle`: the same with `C` negated
/// - `rotated-upper`, `rotated-lower`, `rotated-abs`: `∓(E(α) + E(0))` and
///   `|E(α) + E(0)|` against `2 - (4/π)|sin(α/2)|⟨|v_plane|⟩`
///
/// and, for singular sources (`v = -u`):
/// - `singular-support`: `⟨|a·(u + v)|⟩ <= 0`
/// - `singular-setting`: `-C(a,b) <= 1 - ⟨|(a - b)·u|⟩`
/// - `singular-plane`: `-E(α) <= 1 - (4/π)|sin(α/2)|⟨|u_plane|⟩`
pub fn verify_derivation_chain<H: HiddenVariableModel>(
    model: &H,
    alpha: f64,
    plane: &Plane,
    samples: u64,
    seed: u64,
    exec: Execution,
) -> Result<ChainRecord> {
    if samples < 100_000 {
        return Err(Error::InvalidParameter(format!(
            "derivation chain needs at least 1e5 samples, got {samples}"
        )));
    }
    let (a, b) = geom::settings_in_plane(plane, alpha, 0.0);

    let estimate = |x: &UnitVec, y: &UnitVec, tag: u64| {
        let c = stats::tally(model, x, y, samples, exec::derive_seed(seed, tag), exec);
        let s = c.n_same as f64 / c.n as f64;
        (2.0 * s - 1.0, correlation_stderr(s, c.n as f64))
    };
    let (c_ab, se_ab) = estimate(&a, &b, 0);
    let (c_aa, se_aa) = estimate(&a, &a, 1);

    let source = model.source();
    let src_seed = exec::derive_seed(seed, 2);
    let size = exec::chunk_sizes(samples);
    let moments = exec::map_indexed(exec, exec::chunk_count(samples), |i| {
        let mut rng = exec::stream_rng(exec::derive_seed(src_seed, i));
        let mut m = [Moments::default(); SRC_TERMS];
        for _ in 0..size(i) {
            let (u, v) = source.sample(&mut rng);
            for (acc, t) in m.iter_mut().zip(source_terms(&u, &v, &a, &b, plane)) {
                acc.push(t);
            }
        }
        m
    })
    .into_iter()
    .fold([Moments::default(); SRC_TERMS], |mut acc, m| {
        for (x, y) in acc.iter_mut().zip(m) {
            *x = x.merge(y);
        }
        acc
    });
    let mean = |k: usize| moments[k].mean;
    let se = |k: usize| moments[k].stderr();
    let quad = |xs: &[f64]| xs.iter().map(|x| x * x).sum::<f64>().sqrt();

    let nodes = 8usize;
    let method = AveragingMethod::MonteCarlo {
        nodes,
        samples_per_node: (samples / nodes as u64).max(10_000),
    };
    let e_alpha = plane_averaged_correlation(model, plane, alpha, method, exec::derive_seed(seed, 3), exec)?;
    let e_zero = plane_averaged_correlation(model, plane, 0.0, method, exec::derive_seed(seed, 4), exec)?;
    let s_half = (0.5 * alpha).sin().abs();
    let plane_rhs = 2.0 - 2.0 * FRAC_2_PI * s_half * mean(V_PLANE);
    let plane_rhs_se = 2.0 * FRAC_2_PI * s_half * se(V_PLANE);
    let e_sum = e_alpha.value + e_zero.value;
    let e_sum_se = quad(&[e_alpha.stderr, e_zero.stderr]);

    // slack of the triangle step is ⟨|a·u + b·v| + |a·u + a·v| - |(b - a)·v|⟩,
    // sample-wise non-negative; its spread is bounded by the spread of the parts
    let tri_se = quad(&[se(STEP_SUM), se(BA_V)]);
    let mirror_sum = mean(MINUS_AB) + mean(MINUS_AA);
    let mirror_se = quad(&[se(MINUS_AB), se(MINUS_AA)]);

    let mut links = vec![
        ChainLink::new("malus-lower", -1.0 + mean(MINUS_AB), -c_ab, quad(&[se(MINUS_AB), se_ab])),
        ChainLink::new("malus-upper", -c_ab, 1.0 - mean(PLUS_AB), quad(&[se(PLUS_AB), se_ab])),
        ChainLink::new(
            "pair-sum",
            -c_ab - c_aa,
            2.0 - mean(STEP_SUM),
            quad(&[se_ab, se_aa, se(STEP_SUM)]),
        ),
        ChainLink::new("triangle", 2.0 - mean(STEP_SUM), 2.0 - mean(BA_V), tri_se),
        ChainLink::new(
            "mirror-pair-sum",
            c_ab + c_aa,
            2.0 - mirror_sum,
            quad(&[se_ab, se_aa, mirror_se]),
        ),
        ChainLink::new(
            "mirror-triangle",
            2.0 - mirror_sum,
            2.0 - mean(BA_V),
            quad(&[mirror_se, se(BA_V)]),
        ),
        ChainLink::new("rotated-upper", -e_sum, plane_rhs, quad(&[e_sum_se, plane_rhs_se])),
        ChainLink::new("rotated-lower", e_sum, plane_rhs, quad(&[e_sum_se, plane_rhs_se])),
        ChainLink::new("rotated-abs", e_sum.abs(), plane_rhs, quad(&[e_sum_se, plane_rhs_se])),
    ];
    if source.is_singular() {
        links.push(ChainLink::new("singular-support", mean(SUPPORT), 0.0, se(SUPPORT)));
        links.push(ChainLink::new(
            "singular-setting",
            -c_ab,
            1.0 - mean(AB_U),
            quad(&[se_ab, se(AB_U)]),
        ));
        links.push(ChainLink::new(
            "singular-plane",
            -e_alpha.value,
            1.0 - 2.0 * FRAC_2_PI * s_half * mean(U_PLANE),
            quad(&[e_alpha.stderr, 2.0 * FRAC_2_PI * s_half * se(U_PLANE)]),
        ));
    }

    Ok(ChainRecord {
        alpha,
        plane: *plane,
        samples,
        c_ab,
        c_aa,
        anticorrelation_defect: 1.0 + c_aa,
        singular_support: mean(SUPPORT),
        links,
    })
}

/// `-E_1(α) - E_2(α)` against `2 - (4/π)|sin(α/2)|` for two orthogonal
/// planes: `(lhs, rhs, stderr of lhs)`.
pub fn two_plane_check<M: MeasurementModel>(
    model: &M,
    alpha: f64,
    planes: (Plane, Plane),
    method: AveragingMethod,
    seed: u64,
    exec: Execution,
) -> Result<(f64, f64, f64)> {
    check_planes(&planes, EvaluateOptions::default())?;
    let e1 = plane_averaged_correlation(model, &planes.0, alpha, method, correlation_seed(seed, &planes.0, alpha), exec)?;
    let e2 = plane_averaged_correlation(model, &planes.1, alpha, method, correlation_seed(seed, &planes.1, alpha), exec)?;
    let rhs = 2.0 - 2.0 * FRAC_2_PI * (0.5 * alpha).sin().abs();
    Ok((
        -e1.value - e2.value,
        rhs,
        (e1.stderr * e1.stderr + e2.stderr * e2.stderr).sqrt(),
    ))
}
