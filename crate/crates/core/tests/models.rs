use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6, PI, TAU};

use leggett_core::exec::{derive_seed, stream_rng};
use leggett_core::geom::{self, Plane, UnitVec};
use leggett_core::inequality::{self, AveragingMethod};
use leggett_core::models::{malus_marginal_check, qm_joint_prob, ModelKind, SourceKind};
use leggett_core::stats;
use leggett_core::{
    Coupling, Execution, MeasurementModel, Model, ModelSpec, NlhvModel, QuantumSinglet, Schedule, SourceDistribution,
};
use proptest::prelude::*;

fn unit() -> impl Strategy<Value = UnitVec> {
    (-1.0f64..=1.0, 0.0..TAU).prop_map(|(z, phi)| {
        let r = (1.0 - z * z).sqrt();
        UnitVec::new(r * phi.cos(), r * phi.sin(), z).unwrap()
    })
}

fn sources(axis: UnitVec) -> [SourceDistribution; 3] {
    [
        SourceDistribution::SingularUniform,
        SourceDistribution::SingularFixedAxis(axis),
        SourceDistribution::ProductUniform,
    ]
}

fn all_models(axis: UnitVec) -> Vec<Model> {
    let mut v = vec![Model::Quantum(QuantumSinglet)];
    for s in sources(axis) {
        for c in Coupling::ALL {
            v.push(Model::Nlhv(NlhvModel::new(s, c)));
        }
    }
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn outcomes_are_plus_or_minus_one(a in unit(), b in unit(), axis in unit(), seed in any::<u64>()) {
        let mut rng = stream_rng(seed);
        for m in all_models(axis) {
            for _ in 0..50 {
                let ev = m.sample_event(&a, &b, &mut rng);
                prop_assert!(ev.a_out == 1 || ev.a_out == -1);
                prop_assert!(ev.b_out == 1 || ev.b_out == -1);
            }
        }
    }

    #[test]
    fn exact_correlations_are_bounded(a in unit(), b in unit(), axis in unit()) {
        for m in all_models(axis) {
            let c = m.exact_correlation(&a, &b).unwrap();
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&c), "{} {}", m, c);
        }
    }

    #[test]
    fn quantum_joint_law_is_a_distribution(a in unit(), b in unit()) {
        let p: Vec<f64> = [(1, 1), (1, -1), (-1, 1), (-1, -1)]
            .iter()
            .map(|&(x, y)| qm_joint_prob(&a, &b, x, y))
            .collect();
        prop_assert!(p.iter().all(|&x| x >= -1e-15));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        // marginals are unbiased
        prop_assert!((p[0] + p[1] - 0.5).abs() <= 1e-12);
        prop_assert!((p[0] - p[1] - p[2] + p[3] + a.dot(&b)).abs() <= 1e-12);
    }

    #[test]
    fn uniform_source_correlations_are_rotation_invariant(a in unit(), b in unit(), axis in unit(), sigma in 0.0..TAU) {
        let (ra, rb) = (a.rotated(&axis, sigma), b.rotated(&axis, sigma));
        for c in Coupling::ALL {
            for s in [SourceDistribution::SingularUniform, SourceDistribution::ProductUniform] {
                let m = NlhvModel::new(s, c);
                let d = m.exact_correlation(&a, &b).unwrap() - m.exact_correlation(&ra, &rb).unwrap();
                prop_assert!(d.abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn anti_comonotone_pairs_are_perfectly_anticorrelated(a in unit(), axis in unit(), n in 1u64..2000, seed in any::<u64>()) {
        let models = [
            Model::Quantum(QuantumSinglet),
            Model::Nlhv(NlhvModel::new(SourceDistribution::SingularUniform, Coupling::AntiComonotone)),
            Model::Nlhv(NlhvModel::new(SourceDistribution::SingularFixedAxis(axis), Coupling::AntiComonotone)),
        ];
        for m in models {
            let c = stats::run_experiment(&m, &a, &a, Schedule::Fixed { n }, seed, Execution::default()).unwrap();
            prop_assert_eq!(c.n_same, 0, "{}", m);
        }
    }
}

#[test]
fn perfect_anticorrelation_at_large_n() {
    let a = UnitVec::new(0.3, -0.2, 0.9).unwrap();
    for m in [
        Model::Quantum(QuantumSinglet),
        Model::Nlhv(NlhvModel::new(SourceDistribution::SingularUniform, Coupling::AntiComonotone)),
    ] {
        let c = stats::run_experiment(&m, &a, &a, Schedule::Fixed { n: 1_000_000 }, 3, Execution::default()).unwrap();
        assert_eq!((c.n_same, c.n_diff), (0, 1_000_000));
    }
}

#[test]
fn marginals_follow_malus_law_for_both_stations() {
    let mut rng = stream_rng(derive_seed(61, 0));
    let pairs: Vec<(UnitVec, UnitVec)> = (0..20)
        .map(|_| (UnitVec::sample_uniform(&mut rng), UnitVec::sample_uniform(&mut rng)))
        .collect();
    for c in Coupling::ALL {
        let model = NlhvModel::new(SourceDistribution::SingularUniform, c);
        for (k, (u, a)) in pairs.iter().enumerate() {
            let m = malus_marginal_check(&model, a, u, 1_000_000, derive_seed(62, k as u64), Execution::default()).unwrap();
            assert_eq!(m.expected_b, -m.expected_a);
            assert!(m.within(3.0), "{c:?} pair {k}: {m:?}");
        }
    }
}

#[test]
fn monte_carlo_matches_closed_forms() {
    let method = AveragingMethod::MonteCarlo { nodes: 16, samples_per_node: 62_500 };
    for c in Coupling::ALL {
        let model = NlhvModel::new(SourceDistribution::SingularUniform, c);
        for (i, alpha) in [0.0, FRAC_PI_6, FRAC_PI_3, FRAC_PI_2, 2.0 * FRAC_PI_3, PI].into_iter().enumerate() {
            let oracle = match c {
                Coupling::AntiComonotone => (alpha / 2.0).sin() - 1.0,
                Coupling::Comonotone => 1.0 - (alpha / 2.0).cos(),
                Coupling::Independent => -alpha.cos() / 3.0,
            };
            let e = inequality::plane_averaged_correlation(&model, &Plane::xz(), alpha, method, derive_seed(63, i as u64), Execution::default())
                .unwrap();
            assert!((e.value - oracle).abs() <= 3.0 * e.stderr + 1e-12, "{c:?} alpha={alpha}: {} vs {oracle} ± {}", e.value, e.stderr);
        }
    }
}

#[test]
fn fixed_axis_monte_carlo_matches_exact_correlation() {
    let axis = UnitVec::new(0.2, 0.5, -0.8).unwrap();
    let (a, b) = geom::settings_in_plane(&Plane::xy(), 1.1, 0.4);
    for c in Coupling::ALL {
        let m = NlhvModel::new(SourceDistribution::SingularFixedAxis(axis), c);
        let counts = stats::run_experiment(&m, &a, &b, Schedule::Fixed { n: 400_000 }, 64, Execution::default()).unwrap();
        let est = stats::estimate_correlation(&counts, stats::VarianceConvention::N).unwrap();
        let exact = m.exact_correlation(&a, &b).unwrap();
        assert!((est.value - exact).abs() <= 3.0 * est.stderr, "{c:?}: {} vs {exact}", est.value);
    }
}

#[test]
fn same_seed_same_outcome_sequence() {
    let (a, b) = geom::settings_in_plane(&Plane::xz(), 0.7, 0.2);
    for m in all_models(UnitVec::Y) {
        let draw = |seed| {
            let mut rng = stream_rng(seed);
            (0..1000).map(|_| m.sample_event(&a, &b, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(5), draw(5));
        assert_ne!(draw(5), draw(6), "{m}");
        let run = |exec| stats::run_experiment(&m, &a, &b, Schedule::Fixed { n: 200_000 }, 8, exec).unwrap();
        assert_eq!(run(Execution::Parallel), run(Execution::Sequential));
    }
}

#[test]
fn model_specs_build_the_named_models() {
    let spec: ModelSpec =
        serde_json::from_str(r#"{"model":"nlhv","source":"singular-fixed-axis","coupling":"comonotone","axis":{"x":0,"y":0,"z":-2},"seed":9}"#)
            .unwrap();
    assert_eq!(spec.model, ModelKind::Nlhv);
    assert_eq!(spec.source, Some(SourceKind::SingularFixedAxis));
    assert_eq!(
        spec.build().unwrap(),
        Model::Nlhv(NlhvModel::new(SourceDistribution::SingularFixedAxis(-UnitVec::Z), Coupling::Comonotone))
    );
    let round: ModelSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
    assert_eq!(round, spec);
    assert!(serde_json::from_str::<ModelSpec>(r#"{"model":"qm","extra":1}"#).is_err());
    assert!(serde_json::from_str::<ModelSpec>(r#"{"model":"lhv"}"#).is_err());
}
