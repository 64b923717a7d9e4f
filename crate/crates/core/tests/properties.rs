mod support;

use approx::assert_relative_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use shapeinv::align::{grid_oracle_2d, angle_profile_2d, objective, optimize, AlignConfig, Rotation};
use shapeinv::fixtures;
use shapeinv::hermite::{encode, to_polynomial};
use shapeinv::invariants::{default_catalog, feature_vector, rotation_equivalence_test};
use shapeinv::pipeline::{self, ScaleMode};
use shapeinv::{MomentSet, Shape, SymTensor};
use support::{all_indices, random_set, DenseSym};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn max_abs_diff(a: &SymTensor, b: &SymTensor) -> f64 {
    a.entries()
        .iter()
        .zip(b.entries())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn moments(s: &Shape, m: usize) -> MomentSet {
    pipeline::moments(s, ScaleMode::default(), m).unwrap().1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rotation_composes(seed in any::<u64>(), dim in 1usize..5, order in 0usize..5) {
        let mut r = rng(seed);
        let t = DenseSym::random(&mut r, dim, order).to_symtensor();
        let o1 = fixtures::random_orthogonal(&mut r, dim);
        let o2 = fixtures::random_orthogonal(&mut r, dim);
        let twice = t.rotate(&o1).unwrap().rotate(&o2).unwrap();
        let once = t.rotate(&(&o2 * &o1)).unwrap();
        prop_assert!(max_abs_diff(&twice, &once) < 1e-12);
    }

    #[test]
    fn frobenius_is_rotation_invariant(seed in any::<u64>(), dim in 1usize..5, order in 0usize..5) {
        let mut r = rng(seed);
        let a = DenseSym::random(&mut r, dim, order).to_symtensor();
        let b = DenseSym::random(&mut r, dim, order).to_symtensor();
        let o = fixtures::random_orthogonal(&mut r, dim);
        let before = a.frobenius(&b).unwrap();
        let after = a.rotate(&o).unwrap().frobenius(&b.rotate(&o).unwrap()).unwrap();
        prop_assert!((before - after).abs() <= 1e-12 * before.abs().max(1.0));
    }

    #[test]
    fn packed_frobenius_matches_dense_sum(seed in any::<u64>(), dim in 1usize..5, order in 0usize..5) {
        let mut r = rng(seed);
        let a = DenseSym::random(&mut r, dim, order);
        let b = DenseSym::random(&mut r, dim, order);
        let dense: f64 = all_indices(dim, order).iter().map(|i| a.at(i) * b.at(i)).sum();
        let packed = a.to_symtensor().frobenius(&b.to_symtensor()).unwrap();
        prop_assert!((dense - packed).abs() <= 1e-12 * dense.abs().max(1.0));
    }

    #[test]
    fn dense_round_trip(seed in any::<u64>(), dim in 1usize..5, order in 0usize..5) {
        let t = DenseSym::random(&mut rng(seed), dim, order).to_symtensor();
        let back = SymTensor::from_dense(dim, order, &t.to_dense()).unwrap();
        prop_assert_eq!(back, t);
    }

    #[test]
    fn moments_follow_the_rotation(seed in any::<u64>(), dim in 2usize..4, n in 3usize..30) {
        let mut r = rng(seed);
        let s = fixtures::random_shape(&mut r, dim, n);
        let o = fixtures::random_orthogonal(&mut r, dim);
        let p = moments(&s, 4).rotate(&o).unwrap();
        let q = moments(&s.transformed(&o).unwrap(), 4);
        for (a, b) in p.tensors.iter().zip(&q.tensors) {
            prop_assert!(max_abs_diff(a, b) < 1e-10);
        }
    }

    #[test]
    fn invariants_ignore_rotation_translation_and_scale(
        seed in any::<u64>(),
        dim in 2usize..4,
        n in 4usize..30,
        log_c in -1.0f64..1.0,
    ) {
        let mut r = rng(seed);
        let s = fixtures::random_shape(&mut r, dim, n);
        let o = fixtures::random_orthogonal(&mut r, dim);
        let t: Vec<f64> = (0..dim).map(|k| 3.0 - k as f64).collect();
        let moved = s.transformed(&o).unwrap().translated(&t).unwrap().scaled(10f64.powf(log_c)).unwrap();
        let report = rotation_equivalence_test(&moments(&s, 4), &moments(&moved, 4), 1e-9).unwrap();
        prop_assert!(report.equivalent, "{:?}", report.worst);
    }

    #[test]
    fn objective_is_equivariant(seed in any::<u64>(), dim in 2usize..5) {
        let mut r = rng(seed);
        let (_, p) = random_set(&mut r, dim, 3);
        let (_, q) = random_set(&mut r, dim, 3);
        let o = fixtures::random_rotation(&mut r, dim);
        let rr = fixtures::random_rotation(&mut r, dim);
        let base = objective_matrix(&p, &q, &o);
        let conj = &rr * &o * rr.transpose();
        let moved = objective_matrix(&p.rotate(&rr).unwrap(), &q.rotate(&rr).unwrap(), &conj);
        prop_assert!((base - moved).abs() < 1e-9);
    }

    #[test]
    fn generator_exponential_is_a_rotation(seed in any::<u64>(), dim in 2usize..6) {
        use rand::Rng;
        let mut r = rng(seed);
        let k = dim * (dim - 1) / 2;
        let params: Vec<f64> = (0..k).map(|_| r.random_range(-4.0..4.0)).collect();
        let rot = Rotation::from_params(dim, params).unwrap();
        let m = rot.matrix();
        let err = (m.transpose() * m - DMatrix::<f64>::identity(dim, dim)).amax();
        prop_assert!(err <= 1e-10);
        prop_assert!((m.determinant() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn shell_energies_are_rotation_invariant(seed in any::<u64>(), n in 3usize..20) {
        let mut r = rng(seed);
        let s = fixtures::random_shape(&mut r, 2, n);
        let o = fixtures::random_orthogonal(&mut r, 2);
        let a = encode(&s.center(), 8).unwrap().shell_energies();
        let b = encode(&s.transformed(&o).unwrap().center(), 8).unwrap().shell_energies();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }
}

fn objective_matrix(p: &MomentSet, q: &MomentSet, o: &DMatrix<f64>) -> f64 {
    // equivalent to the library objective, evaluated through explicit rotation
    let q_rot = q.rotate(o).unwrap();
    p.tensors
        .iter()
        .zip(&q_rot.tensors)
        .map(|(a, b)| a.distance_squared(b).unwrap())
        .sum::<f64>()
        .sqrt()
}

#[test]
fn library_objective_matches_explicit_rotation() {
    let mut r = rng(5);
    let (_, p) = random_set(&mut r, 3, 4);
    let (_, q) = random_set(&mut r, 3, 4);
    let rot = Rotation::from_params(3, vec![0.3, -1.2, 2.0]).unwrap();
    assert_relative_eq!(
        objective(&p, &q, &rot, &[]).unwrap(),
        objective_matrix(&p, &q, rot.matrix()),
        max_relative = 1e-13
    );
}

#[test]
fn polynomial_form_matches_the_expansion() {
    let s = fixtures::asymmetric_2d();
    let prepared = pipeline::prepare(&s, ScaleMode::default()).unwrap();
    let coeffs = encode(&prepared.shape, 7).unwrap();
    let poly = to_polynomial(&coeffs).unwrap();
    for x in [[0.0f64, 0.0], [0.3, -1.1], [-2.0, 0.7], [1.5, 1.5]] {
        let gauss = (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp();
        assert_relative_eq!(poly.evaluate(&x) * gauss, coeffs.evaluate(&x), epsilon = 1e-12);
    }
}

#[test]
fn polynomial_tensors_rotate_with_the_shape() {
    let mut r = rng(9);
    let s = fixtures::molecule_3d();
    let o = fixtures::random_rotation(&mut r, 3);
    let p = to_polynomial(&encode(&s.center(), 5).unwrap()).unwrap();
    let q = to_polynomial(&encode(&s.transformed(&o).unwrap().center(), 5).unwrap()).unwrap();
    for (a, b) in p.homogeneous.iter().zip(&q.homogeneous) {
        let scale = a.norm().max(1.0);
        assert!(max_abs_diff(&a.rotate(&o).unwrap(), b) < 1e-10 * scale);
    }
    // so invariants of the polynomial agree as well
    let catalog = default_catalog(3, 4).unwrap();
    let fa = feature_vector(&p, &catalog, false).unwrap();
    let fb = feature_vector(&q, &catalog, false).unwrap();
    for (x, y) in fa.values.iter().zip(&fb.values) {
        assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
    }
}

#[test]
fn alignment_recovers_a_thirty_degree_turn() {
    let s = fixtures::asymmetric_2d();
    let p = moments(&s, 4);
    let q = p.rotate(&fixtures::rotation_2d(30f64.to_radians())).unwrap();
    let oracle = grid_oracle_2d(&p, &q, 3600, &[]).unwrap();
    let expected = (-30f64).to_radians().rem_euclid(std::f64::consts::TAU);
    assert!((oracle.angle - expected).abs() <= 0.1f64.to_radians() + 1e-12);

    let result = optimize(&p, &q, &AlignConfig::default()).unwrap();
    assert!(result.residual < 1e-6);
    assert!(result.residual <= oracle.residual + 1e-8);
    let angle = result.rotation.params()[0];
    let diff = (angle + 30f64.to_radians()).rem_euclid(std::f64::consts::TAU);
    assert!(diff.min(std::f64::consts::TAU - diff) < 1e-4);
}

#[test]
fn cross_has_four_minima() {
    let p = moments(&fixtures::cross(), 4);
    let profile = angle_profile_2d(&p, &p, 360, &[]).unwrap();
    let zeros: Vec<usize> = (0..360).filter(|&k| profile[k] < 1e-12).collect();
    assert_eq!(zeros, vec![0, 90, 180, 270]);
}

#[test]
fn asymmetric_shape_has_a_unique_minimum() {
    let p = moments(&fixtures::asymmetric_2d(), 4);
    let profile = angle_profile_2d(&p, &p, 3600, &[]).unwrap();
    assert_eq!(profile[0], 0.0);
    assert!(profile[1..].iter().all(|&v| v > 1e-12));
}

#[test]
fn optimize_never_loses_to_identity() {
    let mut r = rng(3);
    for dim in [2, 3] {
        let (_, p) = random_set(&mut r, dim, 3);
        let (_, q) = random_set(&mut r, dim, 3);
        let config = AlignConfig {
            restarts: Some(2),
            max_iter: 20,
            ..AlignConfig::default()
        };
        let result = optimize(&p, &q, &config).unwrap();
        let at_identity = objective(&p, &q, &Rotation::identity(dim), &[]).unwrap();
        assert!(result.residual <= at_identity);
        let recomputed = objective(&p, &q, &result.rotation, &[]).unwrap();
        assert!((recomputed - result.residual).abs() <= 1e-12);
    }
}

#[test]
fn optimize_is_deterministic_for_a_seed() {
    let mut r = rng(4);
    let s = fixtures::random_shape(&mut r, 3, 12);
    let p = moments(&s, 3);
    let q = p.rotate(&fixtures::random_rotation(&mut r, 3)).unwrap();
    let config = AlignConfig {
        seed: 11,
        ..AlignConfig::default()
    };
    assert_eq!(optimize(&p, &q, &config).unwrap(), optimize(&p, &q, &config).unwrap());
}

#[test]
fn alignment_matches_invariant_verdict_on_exact_rotations() {
    let mut r = rng(8);
    for dim in [2, 3] {
        for _ in 0..5 {
            let s = fixtures::random_shape(&mut r, dim, 15);
            let o = fixtures::random_rotation(&mut r, dim);
            let p = moments(&s, 4);
            let q = moments(&s.transformed(&o).unwrap(), 4);
            assert!(rotation_equivalence_test(&p, &q, 1e-10).unwrap().equivalent);
            assert!(optimize(&p, &q, &AlignConfig::default()).unwrap().residual < 1e-6);
        }
    }
}
