use std::f64::consts::{FRAC_2_PI, PI, TAU};

use leggett_core::exec::derive_seed;
use leggett_core::inequality::{self, AveragingMethod, EvaluateOptions};
use leggett_core::{Coupling, Execution, MeasurementModel, Model, NlhvModel, Plane, QuantumSinglet, SourceDistribution, UnitVec};
use proptest::prelude::*;

const EXACT: AveragingMethod = AveragingMethod::Quadrature { nodes: 256 };

fn unit() -> impl Strategy<Value = UnitVec> {
    (-1.0f64..=1.0, 0.0..TAU).prop_map(|(z, phi)| {
        let r = (1.0 - z * z).sqrt();
        UnitVec::new(r * phi.cos(), r * phi.sin(), z).unwrap()
    })
}

fn uniform(c: Coupling) -> NlhvModel {
    NlhvModel::new(SourceDistribution::SingularUniform, c)
}

fn nlhv_models(axis: UnitVec) -> Vec<NlhvModel> {
    let mut v = Vec::new();
    for s in [
        SourceDistribution::SingularUniform,
        SourceDistribution::SingularFixedAxis(axis),
        SourceDistribution::ProductUniform,
    ] {
        for c in Coupling::ALL {
            v.push(NlhvModel::new(s, c));
        }
    }
    v
}

fn evaluate<M: MeasurementModel>(m: &M, alpha: f64, planes: (Plane, Plane), method: AveragingMethod, seed: u64) -> inequality::InequalityReport {
    inequality::evaluate_inequality(m, alpha, planes, method, EvaluateOptions::default(), seed, Execution::default()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_nlhv_model_satisfies_the_bound(alpha in -PI..PI, axis in unit()) {
        for m in nlhv_models(axis) {
            let r = evaluate(&m, alpha, (Plane::xy(), Plane::xz()), EXACT, 0);
            // a fixed-axis source is not rotation invariant; the trapezoid
            // rule on its smooth-but-kinked integrand is accurate to ~1e-5
            prop_assert!(r.margin >= -1e-4, "{} alpha={}: {:?}", m.label(), alpha, r);
            if m.source == SourceDistribution::SingularUniform {
                prop_assert!(r.margin >= -1e-12);
            }
        }
    }

    #[test]
    fn two_plane_lemma_holds_exactly(alpha in -PI..PI) {
        for c in Coupling::ALL {
            let (lhs, rhs, se) = inequality::two_plane_check(&uniform(c), alpha, (Plane::xy(), Plane::xz()), EXACT, 0, Execution::default())
                .unwrap();
            prop_assert_eq!(se, 0.0);
            prop_assert!(lhs <= rhs + 1e-12, "{:?}: {} > {}", c, lhs, rhs);
        }
    }

    #[test]
    fn quantum_margin_sign(alpha in 1e-6f64..PI) {
        let threshold = 2.0 * (1.0 / PI).asin();
        prop_assume!((alpha - threshold).abs() > 1e-6);
        let r = evaluate(&QuantumSinglet, alpha, (Plane::xy(), Plane::xz()), EXACT, 0);
        prop_assert_eq!(r.violated, alpha < threshold);
        prop_assert!((r.margin - inequality::quantum_margin(alpha)).abs() <= 1e-12);
    }

    #[test]
    fn symmetric_under_plane_swap_and_reflection(alpha in -PI..PI, k in 0usize..4) {
        let model = match k {
            0 => Model::Quantum(QuantumSinglet),
            _ => Model::Nlhv(uniform(Coupling::ALL[k - 1])),
        };
        let fwd = evaluate(&model, alpha, (Plane::xy(), Plane::xz()), EXACT, 0);
        let swapped = evaluate(&model, alpha, (Plane::xz(), Plane::xy()), EXACT, 0);
        let reflected = evaluate(&model, -alpha, (Plane::xy(), Plane::xz()), EXACT, 0);
        prop_assert!((fwd.lhs - swapped.lhs).abs() <= 1e-12);
        prop_assert!((fwd.lhs - reflected.lhs).abs() <= 1e-12);
        prop_assert_eq!(fwd.bound, reflected.bound);
    }

    #[test]
    fn quadrature_converges(alpha in 0.0..PI, k in 0usize..4) {
        let model = match k {
            0 => Model::Quantum(QuantumSinglet),
            _ => Model::Nlhv(uniform(Coupling::ALL[k - 1])),
        };
        for plane in [Plane::xy(), Plane::xz(), Plane::yz()] {
            let e = |nodes| {
                inequality::plane_averaged_correlation(&model, &plane, alpha, AveragingMethod::Quadrature { nodes }, 0, Execution::default())
                    .unwrap()
                    .value
            };
            prop_assert!((e(64) - e(128)).abs() < 1e-9);
            prop_assert!((e(256) - e(512)).abs() < 1e-9);
        }
    }
}

#[test]
fn monte_carlo_plane_swap_is_bit_identical() {
    let method = AveragingMethod::MonteCarlo { nodes: 8, samples_per_node: 20_000 };
    let model = uniform(Coupling::Independent);
    let fwd = evaluate(&model, 0.9, (Plane::xy(), Plane::xz()), method, 5);
    let swapped = evaluate(&model, 0.9, (Plane::xz(), Plane::xy()), method, 5);
    assert_eq!(fwd.lhs, swapped.lhs);
    assert_eq!((fwd.e_xy_alpha, fwd.e_xz_alpha), (swapped.e_xz_alpha, swapped.e_xy_alpha));
}

#[test]
fn reflection_agrees_within_monte_carlo_error() {
    let method = AveragingMethod::MonteCarlo { nodes: 16, samples_per_node: 25_000 };
    for c in Coupling::ALL {
        let fwd = evaluate(&uniform(c), 1.2, (Plane::xy(), Plane::xz()), method, 6);
        let back = evaluate(&uniform(c), -1.2, (Plane::xy(), Plane::xz()), method, 6);
        let se = (fwd.lhs_stderr.powi(2) + back.lhs_stderr.powi(2)).sqrt();
        assert!((fwd.lhs - back.lhs).abs() <= 3.0 * se, "{c:?}: {} vs {}", fwd.lhs, back.lhs);
    }
}

#[test]
fn quantum_violation_curve_on_the_grid() {
    let grid: Vec<f64> = (0..=180).map(|k| PI * k as f64 / 180.0).collect();
    let threshold = 2.0 * (1.0 / PI).asin();
    let rows = inequality::sweep(&QuantumSinglet, &grid, (Plane::xy(), Plane::xz()), EXACT, EvaluateOptions::default(), 0, Execution::default())
        .unwrap();
    for r in &rows[1..] {
        assert_eq!(r.lhs - r.bound > 0.0, r.alpha < threshold, "alpha={}", r.alpha);
    }
    assert_eq!(rows[0].margin, 0.0);
}

#[test]
fn bound_holds_on_the_grid_with_monte_carlo() {
    let grid: Vec<f64> = (0..=180).map(|k| PI * k as f64 / 180.0).collect();
    let method = AveragingMethod::MonteCarlo { nodes: 8, samples_per_node: 12_500 };
    for c in Coupling::ALL {
        let rows = inequality::sweep(&uniform(c), &grid, (Plane::xy(), Plane::xz()), method, EvaluateOptions::default(), derive_seed(7, c as u64), Execution::default())
            .unwrap();
        for r in rows {
            assert!(r.margin >= -3.0 * r.lhs_stderr, "{c:?} alpha={}: {r:?}", r.alpha);
        }
    }
}

#[test]
fn two_plane_lemma_with_monte_carlo() {
    let method = AveragingMethod::MonteCarlo { nodes: 16, samples_per_node: 25_000 };
    for c in Coupling::ALL {
        for (i, alpha) in [0.3, 1.0, 2.0, 3.0].into_iter().enumerate() {
            let (lhs, rhs, se) = inequality::two_plane_check(&uniform(c), alpha, (Plane::xy(), Plane::xz()), method, derive_seed(8, i as u64), Execution::default())
                .unwrap();
            assert!(lhs <= rhs + 3.0 * se, "{c:?} alpha={alpha}: {lhs} > {rhs} + 3·{se}");
        }
    }
}

#[test]
fn anti_comonotone_is_tight_on_each_plane() {
    // E(α) = sin(α/2) - 1 and (4/π)|sin(α/2)|·π/4 = |sin(α/2)|: equality
    for k in 0..=36 {
        let alpha = PI * k as f64 / 36.0;
        let e = inequality::plane_averaged_correlation(&uniform(Coupling::AntiComonotone), &Plane::xy(), alpha, EXACT, 0, Execution::default())
            .unwrap()
            .value;
        let per_plane_rhs = 1.0 - 2.0 * FRAC_2_PI * (alpha / 2.0).sin() * (PI / 4.0);
        assert!((-e - per_plane_rhs).abs() <= 1e-12, "alpha={alpha}");
    }
}

#[test]
fn non_orthogonal_planes_need_the_override() {
    let tilted = Plane::from_normal(leggett_core::Vec3::new(1.0, 0.0, 1.0)).unwrap();
    let planes = (Plane::xy(), tilted);
    let strict = inequality::evaluate_inequality(&QuantumSinglet, 0.5, planes, EXACT, EvaluateOptions::default(), 0, Execution::default());
    assert!(strict.is_err());
    let loose = inequality::evaluate_inequality(
        &QuantumSinglet,
        0.5,
        planes,
        EXACT,
        EvaluateOptions { allow_non_orthogonal: true },
        0,
        Execution::default(),
    )
    .unwrap();
    assert!((loose.lhs - inequality::quantum_lhs(0.5)).abs() < 1e-12);
}
