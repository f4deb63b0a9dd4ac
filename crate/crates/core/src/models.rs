//! Measurement models producing paired ±1 outcomes.
//!
//! Two families are provided: the quantum singlet reference and a family of
//! non-local hidden-variable (NLHV) models. In the NLHV family the hidden
//! label is `λ = (u, v, ξ)`: the polarizations delivered to Alice and Bob
//! plus a residual uniform variable. Each station compares its Malus
//! probability `p = (1 + u·a)/2` against a threshold built from `ξ`; the
//! [`Coupling`] decides how the two thresholds are tied together. Whatever
//! the coupling, each station's subensemble mean is exactly `u·a` (resp.
//! `v·b`).

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::geom::UnitVec;

/// A ±1 outcome pair. Both fields are always exactly `1` or `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OutcomePair {
    pub a_out: i8,
    pub b_out: i8,
}

impl OutcomePair {
    pub fn same(&self) -> bool {
        self.a_out == self.b_out
    }
}

/// `sgn(x)` with `sgn(0) = +1`.
#[inline]
fn sign(x: f64) -> i8 {
    if x >= 0.0 {
        1
    } else {
        -1
    }
}

/// Hidden variable carried by one emitted pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HiddenLabel {
    pub u: UnitVec,
    pub v: UnitVec,
    pub xi: f64,
}

/// Distribution `F(u, v)` of emitted polarization pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind", content = "axis")]
pub enum SourceDistribution {
    /// `v = -u`, `u` uniform on the sphere.
    SingularUniform,
    /// `v = -u`, `u` fixed.
    SingularFixedAxis(UnitVec),
    /// `u` and `v` independent and uniform.
    ProductUniform,
}

impl SourceDistribution {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (UnitVec, UnitVec) {
        match self {
            SourceDistribution::SingularUniform => {
                let u = UnitVec::sample_uniform(rng);
                (u, u.antipode())
            }
            SourceDistribution::SingularFixedAxis(u) => (*u, u.antipode()),
            SourceDistribution::ProductUniform => {
                (UnitVec::sample_uniform(rng), UnitVec::sample_uniform(rng))
            }
        }
    }

    /// Support lies on `v = -u`.
    pub fn is_singular(&self) -> bool {
        !matches!(self, SourceDistribution::ProductUniform)
    }

    pub fn name(&self) -> &'static str {
        match self {
            SourceDistribution::SingularUniform => "singular-uniform",
            SourceDistribution::SingularFixedAxis(_) => "singular-fixed-axis",
            SourceDistribution::ProductUniform => "product-uniform",
        }
    }
}

/// How Alice's and Bob's thresholds are tied together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    /// Alice uses `ξ`, Bob uses `1 - ξ`.
    AntiComonotone,
    /// Both use `ξ`.
    Comonotone,
    /// Bob draws a fresh `ξ'`.
    Independent,
}

impl Coupling {
    pub const ALL: [Coupling; 3] = [
        Coupling::AntiComonotone,
        Coupling::Comonotone,
        Coupling::Independent,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Coupling::AntiComonotone => "anti-comonotone",
            Coupling::Comonotone => "comonotone",
            Coupling::Independent => "independent",
        }
    }

    /// `E[AB | u, v]` given `x = u·a`, `y = v·b`.
    pub fn conditional_correlation(&self, x: f64, y: f64) -> f64 {
        match self {
            Coupling::AntiComonotone => (x + y).abs() - 1.0,
            Coupling::Comonotone => 1.0 - (x - y).abs(),
            Coupling::Independent => x * y,
        }
    }
}

/// Anything that produces outcome pairs for settings `(a, b)`.
pub trait MeasurementModel: Sync {
    fn sample_event<R: Rng + ?Sized>(&self, a: &UnitVec, b: &UnitVec, rng: &mut R)
        -> OutcomePair;

    /// `C(a, b)` when it is known in closed form.
    fn exact_correlation(&self, _a: &UnitVec, _b: &UnitVec) -> Option<f64> {
        None
    }

    /// Rotation-averaged `E(α)` when it is known in closed form and does not
    /// depend on the plane.
    fn closed_form_average(&self, _alpha: f64) -> Option<f64> {
        None
    }

    fn label(&self) -> String;
}

/// Models whose outcomes are a local response to an explicit hidden label.
pub trait HiddenVariableModel: MeasurementModel + Sized {
    fn source(&self) -> SourceDistribution;

    fn with_source(&self, source: SourceDistribution) -> Self;

    fn draw_label<R: Rng + ?Sized>(&self, rng: &mut R) -> HiddenLabel {
        let (u, v) = self.source().sample(rng);
        HiddenLabel {
            u,
            v,
            xi: rng.random::<f64>(),
        }
    }

    fn respond<R: Rng + ?Sized>(
        &self,
        label: &HiddenLabel,
        a: &UnitVec,
        b: &UnitVec,
        rng: &mut R,
    ) -> OutcomePair;
}

/// Joint singlet law `P(A, B) = (1 - A·B·(a·b)) / 4`.
pub fn qm_joint_prob(a: &UnitVec, b: &UnitVec, a_out: i8, b_out: i8) -> f64 {
    let ab = f64::from(a_out) * f64::from(b_out);
    (1.0 - ab * a.dot(b)) / 4.0
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QuantumSinglet;

impl MeasurementModel for QuantumSinglet {
    fn sample_event<R: Rng + ?Sized>(
        &self,
        a: &UnitVec,
        b: &UnitVec,
        rng: &mut R,
    ) -> OutcomePair {
        let p_pp = qm_joint_prob(a, b, 1, 1);
        let p_mm = qm_joint_prob(a, b, -1, -1);
        let p_pm = qm_joint_prob(a, b, 1, -1);
        let r: f64 = rng.random();
        // strict comparisons: a zero-probability cell is never selected
        let (a_out, b_out) = if r < p_pp {
            (1, 1)
        } else if r < p_pp + p_mm {
            (-1, -1)
        } else if r < p_pp + p_mm + p_pm {
            (1, -1)
        } else {
            (-1, 1)
        };
        OutcomePair { a_out, b_out }
    }

    fn exact_correlation(&self, a: &UnitVec, b: &UnitVec) -> Option<f64> {
        Some(-a.dot(b))
    }

    fn closed_form_average(&self, alpha: f64) -> Option<f64> {
        Some(-alpha.cos())
    }

    fn label(&self) -> String {
        "qm".to_string()
    }
}

/// Threshold-coupled NLHV model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NlhvModel {
    pub source: SourceDistribution,
    pub coupling: Coupling,
}

impl NlhvModel {
    pub fn new(source: SourceDistribution, coupling: Coupling) -> Self {
        Self { source, coupling }
    }
}

impl MeasurementModel for NlhvModel {
    fn sample_event<R: Rng + ?Sized>(
        &self,
        a: &UnitVec,
        b: &UnitVec,
        rng: &mut R,
    ) -> OutcomePair {
        let label = self.draw_label(rng);
        self.respond(&label, a, b, rng)
    }

    fn exact_correlation(&self, a: &UnitVec, b: &UnitVec) -> Option<f64> {
        let c = match self.source {
            SourceDistribution::SingularUniform => {
                let av = a.as_vec3();
                let bv = b.as_vec3();
                // for uniform u: mean of |w·u| is |w|/2, mean of (u·a)(u·b) is a·b/3
                match self.coupling {
                    Coupling::AntiComonotone => 0.5 * (av - bv).norm() - 1.0,
                    Coupling::Comonotone => 1.0 - 0.5 * (av + bv).norm(),
                    Coupling::Independent => -a.dot(b) / 3.0,
                }
            }
            SourceDistribution::SingularFixedAxis(u) => self
                .coupling
                .conditional_correlation(u.dot(a), u.antipode().dot(b)),
            // u·a and v·b are independent U[-1, 1]; mean |X ± Y| is 2/3
            SourceDistribution::ProductUniform => match self.coupling {
                Coupling::AntiComonotone => -1.0 / 3.0,
                Coupling::Comonotone => 1.0 / 3.0,
                Coupling::Independent => 0.0,
            },
        };
        Some(c)
    }

    fn closed_form_average(&self, alpha: f64) -> Option<f64> {
        closed_form_e(self, alpha).ok()
    }

    fn label(&self) -> String {
        format!("nlhv:{}:{}", self.source.name(), self.coupling.name())
    }
}

impl HiddenVariableModel for NlhvModel {
    fn source(&self) -> SourceDistribution {
        self.source
    }

    fn with_source(&self, source: SourceDistribution) -> Self {
        NlhvModel { source, ..*self }
    }

    fn respond<R: Rng + ?Sized>(
        &self,
        label: &HiddenLabel,
        a: &UnitVec,
        b: &UnitVec,
        rng: &mut R,
    ) -> OutcomePair {
        let p_a = 0.5 * (1.0 + label.u.dot(a));
        let p_b = 0.5 * (1.0 + label.v.dot(b));
        let xi = label.xi;
        let xi_b = match self.coupling {
            Coupling::AntiComonotone => 1.0 - xi,
            Coupling::Comonotone => xi,
            Coupling::Independent => rng.random::<f64>(),
        };
        OutcomePair {
            a_out: sign(p_a - xi),
            b_out: sign(p_b - xi_b),
        }
    }
}

/// NLHV model whose Alice-side threshold is shifted by `bias`, so her
/// subensemble mean is `u·a + 2·bias` (clipped). Violates the Malus
/// marginal on purpose; used to check that the verifiers catch it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasedMarginal {
    pub inner: NlhvModel,
    pub bias: f64,
}

impl MeasurementModel for BiasedMarginal {
    fn sample_event<R: Rng + ?Sized>(
        &self,
        a: &UnitVec,
        b: &UnitVec,
        rng: &mut R,
    ) -> OutcomePair {
        let label = self.draw_label(rng);
        self.respond(&label, a, b, rng)
    }

    fn label(&self) -> String {
        format!("{}+bias{}", self.inner.label(), self.bias)
    }
}

impl HiddenVariableModel for BiasedMarginal {
    fn source(&self) -> SourceDistribution {
        self.inner.source
    }

    fn with_source(&self, source: SourceDistribution) -> Self {
        BiasedMarginal {
            inner: self.inner.with_source(source),
            bias: self.bias,
        }
    }

    fn respond<R: Rng + ?Sized>(
        &self,
        label: &HiddenLabel,
        a: &UnitVec,
        b: &UnitVec,
        rng: &mut R,
    ) -> OutcomePair {
        let mut out = self.inner.respond(label, a, b, rng);
        let p_a = 0.5 * (1.0 + label.u.dot(a));
        out.a_out = sign(p_a + self.bias - label.xi);
        out
    }
}

/// Either of the two model families, as selected by a [`ModelSpec`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    Quantum(QuantumSinglet),
    Nlhv(NlhvModel),
}

impl MeasurementModel for Model {
    fn sample_event<R: Rng + ?Sized>(
        &self,
        a: &UnitVec,
        b: &UnitVec,
        rng: &mut R,
    ) -> OutcomePair {
        match self {
            Model::Quantum(m) => m.sample_event(a, b, rng),
            Model::Nlhv(m) => m.sample_event(a, b, rng),
        }
    }

    fn exact_correlation(&self, a: &UnitVec, b: &UnitVec) -> Option<f64> {
        match self {
            Model::Quantum(m) => m.exact_correlation(a, b),
            Model::Nlhv(m) => m.exact_correlation(a, b),
        }
    }

    fn closed_form_average(&self, alpha: f64) -> Option<f64> {
        match self {
            Model::Quantum(m) => m.closed_form_average(alpha),
            Model::Nlhv(m) => m.closed_form_average(alpha),
        }
    }

    fn label(&self) -> String {
        match self {
            Model::Quantum(m) => m.label(),
            Model::Nlhv(m) => m.label(),
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Qm,
    Nlhv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    SingularUniform,
    SingularFixedAxis,
    ProductUniform,
}

/// JSON model description:
/// `{"model": "qm" | "nlhv", "source": "...", "coupling": "...", "seed": 7}`.
///
/// `source` and `coupling` are required for `nlhv` and ignored for `qm`.
/// A fixed-axis source reads its axis from the optional `axis` field
/// (default `+z`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub model: ModelKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<Coupling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<UnitVec>,
    #[serde(default)]
    pub seed: u64,
}

impl ModelSpec {
    pub fn quantum(seed: u64) -> Self {
        ModelSpec {
            model: ModelKind::Qm,
            source: None,
            coupling: None,
            axis: None,
            seed,
        }
    }

    pub fn nlhv(source: SourceKind, coupling: Coupling, seed: u64) -> Self {
        ModelSpec {
            model: ModelKind::Nlhv,
            source: Some(source),
            coupling: Some(coupling),
            axis: None,
            seed,
        }
    }

    pub fn build(&self) -> Result<Model> {
        match self.model {
            ModelKind::Qm => Ok(Model::Quantum(QuantumSinglet)),
            ModelKind::Nlhv => {
                let source = match self.source {
                    Some(SourceKind::SingularUniform) => SourceDistribution::SingularUniform,
                    Some(SourceKind::SingularFixedAxis) => {
                        SourceDistribution::SingularFixedAxis(self.axis.unwrap_or(UnitVec::Z))
                    }
                    Some(SourceKind::ProductUniform) => SourceDistribution::ProductUniform,
                    None => {
                        return Err(Error::InvalidParameter(
                            "nlhv model needs a 'source'".into(),
                        ))
                    }
                };
                let coupling = self.coupling.ok_or_else(|| {
                    Error::InvalidParameter("nlhv model needs a 'coupling'".into())
                })?;
                Ok(Model::Nlhv(NlhvModel::new(source, coupling)))
            }
        }
    }
}

/// Rotation-averaged correlation `E(α)` in closed form, uniform singular
/// source only.
pub fn closed_form_e(model: &NlhvModel, alpha: f64) -> Result<f64> {
    if model.source != SourceDistribution::SingularUniform {
        return Err(Error::NonUniformSource(model.source.name().to_string()));
    }
    let half = 0.5 * alpha;
    Ok(match model.coupling {
        Coupling::AntiComonotone => half.sin().abs() - 1.0,
        Coupling::Comonotone => 1.0 - half.cos().abs(),
        Coupling::Independent => -alpha.cos() / 3.0,
    })
}

/// Empirical subensemble means at fixed delivered polarization `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalCheck {
    /// Alice's mean outcome at setting `a`.
    pub mean_a: f64,
    pub stderr_a: f64,
    /// `u·a`.
    pub expected_a: f64,
    /// Bob's mean outcome at the same setting `a`.
    pub mean_b: f64,
    pub stderr_b: f64,
    /// `v·a` with `v = -u`.
    pub expected_b: f64,
    pub samples: u64,
}

impl MarginalCheck {
    /// Largest deviation from the Malus prediction, in standard errors.
    /// A zero-variance side that misses its prediction counts as infinite.
    pub fn max_z(&self) -> f64 {
        let z = |mean: f64, se: f64, expected: f64| {
            let d = (mean - expected).abs();
            if se > 0.0 {
                d / se
            } else if d <= 1e-12 {
                0.0
            } else {
                f64::INFINITY
            }
        };
        z(self.mean_a, self.stderr_a, self.expected_a).max(z(
            self.mean_b,
            self.stderr_b,
            self.expected_b,
        ))
    }

    pub fn within(&self, sigmas: f64) -> bool {
        self.max_z() <= sigmas
    }
}

/// Conditions `model`'s source on delivered polarization `u` (with `v = -u`)
/// and estimates both stations' mean outcome at setting `a`.
pub fn malus_marginal_check<H: HiddenVariableModel>(
    model: &H,
    a: &UnitVec,
    u: &UnitVec,
    samples: u64,
    seed: u64,
    exec: Execution,
) -> Result<MarginalCheck> {
    if samples < 10_000 {
        return Err(Error::InvalidParameter(format!(
            "marginal check needs at least 1e4 samples, got {samples}"
        )));
    }
    let conditioned = model.with_source(SourceDistribution::SingularFixedAxis(*u));
    let size = exec::chunk_sizes(samples);
    let sums = exec::map_indexed(exec, exec::chunk_count(samples), |i| {
        let mut rng = exec::stream_rng(exec::derive_seed(seed, i));
        let (mut sa, mut sb) = (0i64, 0i64);
        for _ in 0..size(i) {
            let ev = conditioned.sample_event(a, a, &mut rng);
            sa += i64::from(ev.a_out);
            sb += i64::from(ev.b_out);
        }
        (sa, sb)
    });
    let (sa, sb) = sums
        .into_iter()
        .fold((0i64, 0i64), |acc, s| (acc.0 + s.0, acc.1 + s.1));
    let n = samples as f64;
    // outcomes are ±1, so the sample variance is 1 - mean²
    let summarize = |s: i64| {
        let mean = s as f64 / n;
        (mean, ((1.0 - mean * mean).max(0.0) / n).sqrt())
    };
    let (mean_a, stderr_a) = summarize(sa);
    let (mean_b, stderr_b) = summarize(sb);
    Ok(MarginalCheck {
        mean_a,
        stderr_a,
        expected_a: u.dot(a),
        mean_b,
        stderr_b,
        expected_b: u.antipode().dot(a),
        samples,
    })
}
