mod common;

use common::*;
use elltau::fredholm::determinant;
use elltau::isomon::canonical_q;
use elltau::nekrasov::*;
use elltau::specfun::{gamma_fn, hyp2f1, theta1, TorusModulus};
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn partition() -> impl Strategy<Value = Partition> {
    prop::collection::vec(1u32..7, 0..6).prop_map(|mut rows| {
        rows.sort_unstable_by(|a, b| b.cmp(a));
        Partition::new(rows).unwrap()
    })
}

fn complex(r: f64) -> impl Strategy<Value = Complex64> {
    (-r..r, -r..r).prop_map(|(x, y)| c(x, y))
}

fn modulus() -> impl Strategy<Value = TorusModulus> {
    (-0.5..0.5f64, 0.7..1.6f64).prop_map(|(x, y)| TorusModulus::new(c(x, y)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn maya_energy_is_charge_plus_size(y in partition(), q in -6i64..=6) {
        let size = y.size();
        let m = maya_from_charged(&ChargedPartition { y, charge: q }, 60).unwrap();
        let e: f64 = m.particles.iter().sum::<f64>() + m.holes.iter().sum::<f64>();
        prop_assert!((e - (q * q) as f64 / 2.0 - size as f64).abs() < 1e-12);
        prop_assert_eq!(m.particles.len() as i64 - m.holes.len() as i64, q);
    }
}

proptest! {
    #[test]
    fn z_bif_exchange(x in complex(2.0), yp in partition(), y in partition()) {
        let sign = if (yp.size() + y.size()) % 2 == 0 { 1.0 } else { -1.0 };
        let lhs = z_bif(x, &yp, &y);
        let rhs = sign * z_bif(-x, &y, &yp);
        prop_assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
    }

    #[test]
    fn z_bif_swapped_conventions_agree_on_transposes(x in complex(2.0), yp in partition(), y in partition()) {
        // Swapping arm and leg everywhere is the same as transposing both diagrams.
        let a = z_bif_with(x, &yp, &y, ArmLegConvention::Swapped);
        let b = z_bif(x, &yp.conjugate(), &y.conjugate());
        prop_assert!((a - b).norm() <= 1e-12 * a.norm().max(1.0));
    }

    #[test]
    fn z_inst_diagonal_is_one(s in complex(0.45), y1 in partition(), y2 in partition()) {
        let sigma = [s + 0.013, -s - 0.013];
        let ys = [y1, y2];
        match z_inst(&sigma, &sigma, &ys, &ys) {
            Ok(v) => prop_assert!((v - 1.0).norm() < 1e-9),
            Err(e) => prop_assert!(matches!(e, elltau::Error::Resonance(_))),
        }
    }

    #[test]
    fn z_pert_ratio_composes(s in complex(0.3), m in complex(0.3), q in -2i64..=2, p in -2i64..=2) {
        let sigma = [s + 0.11, -s - 0.11];
        let mu = [s + m + 0.07, -s + m - 0.07];
        let step = |sig: &[Complex64; 2], mu: &[Complex64; 2], a: i64| z_pert_ratio(sig, mu, &[a, -a], &[a, -a]);
        let full = step(&sigma, &mu, q + p);
        let first = step(&sigma, &mu, q);
        let shifted_s = [sigma[0] + q as f64, sigma[1] - q as f64];
        let shifted_m = [mu[0] + q as f64, mu[1] - q as f64];
        let second = step(&shifted_s, &shifted_m, p);
        if let (Ok(f), Ok(a), Ok(b)) = (full, first, second) {
            prop_assert!((f - a * b).norm() <= 1e-9 * f.norm().max(1e-30));
        }
    }

    #[test]
    fn theta1_quasi_periodic(tau in modulus(), z in complex(0.6)) {
        let t = tau.tau();
        let v = theta1(z, &tau, 0).unwrap();
        let shifted = theta1(z + t, &tau, 0).unwrap();
        let want = -(c(0.0, -PI) * t - c(0.0, 2.0 * PI) * z).exp() * v;
        prop_assert!((shifted - want).norm() <= 1e-11 * want.norm().max(1e-3));
        prop_assert!((theta1(z + 1.0, &tau, 0).unwrap() + v).norm() <= 1e-12 * v.norm().max(1e-3));
        prop_assert!((theta1(-z, &tau, 0).unwrap() + v).norm() <= 1e-12 * v.norm().max(1e-3));
    }

    #[test]
    fn theta1_matches_product(tau in modulus(), z in complex(0.5)) {
        let v = theta1(z, &tau, 0).unwrap();
        let p = theta1_product(z, tau.tau());
        prop_assert!((v - p).norm() <= 1e-11 * p.norm().max(1e-3));
    }

    #[test]
    fn canonical_q_invariant(tau in modulus(), q in complex(2.0), n in -3i64..=3, k in -3i64..=3, flip in any::<bool>()) {
        let t = tau.tau();
        let moved = if flip { -q } else { q } + n as f64 + k as f64 * t;
        prop_assert!((canonical_q(moved, &tau) - canonical_q(q, &tau)).norm() < 1e-9);
    }

    #[test]
    fn gamma_recurrence(z in complex(3.0)) {
        prop_assume!((z - z.re.round()).norm() > 1e-3 || z.re > 0.5);
        let g = gamma_fn(z).unwrap();
        let g1 = gamma_fn(z + 1.0).unwrap();
        prop_assert!((g1 - z * g).norm() <= 1e-11 * g1.norm());
    }

    #[test]
    fn hyp2f1_symmetric(a in complex(1.0), b in complex(1.0), x in complex(0.45)) {
        let cc = c(1.37, 0.21);
        let u = hyp2f1(a, b, cc, x).unwrap();
        let v = hyp2f1(b, a, cc, x).unwrap();
        prop_assert!((u - v).norm() <= 1e-12 * u.norm().max(1.0));
    }

    #[test]
    fn determinant_multiplicative(seed in any::<u64>(), n in 1usize..7) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut mat = || DMatrix::from_fn(n, n, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let (a, b) = (mat(), mat());
        let lhs = determinant(&(&a * &b)).value;
        let rhs = determinant(&a).value * determinant(&b).value;
        prop_assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm().max(1e-6));
    }
}
