mod common;

use common::*;
use elltau::fredholm::*;
use elltau::specfun::TorusModulus;
use elltau::threept::{MonodromyData, Space};
use elltau::Error;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn desk() -> MonodromyData {
    MonodromyData::real(0.31, 0.17, 0.05, 0.21).unwrap()
}

fn modulus(re: f64, im: f64) -> TorusModulus {
    TorusModulus::new(c(re, im)).unwrap()
}

fn random_matrix(rng: &mut ChaCha8Rng, r: usize, cols: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(r, cols, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// Leibniz expansion.
fn leibniz(m: &DMatrix<Complex64>) -> Complex64 {
    fn rec(m: &DMatrix<Complex64>, row: usize, free: &mut Vec<usize>) -> Complex64 {
        if row == m.nrows() {
            return c(1.0, 0.0);
        }
        let mut s = c(0.0, 0.0);
        for pos in 0..free.len() {
            let col = free.remove(pos);
            let sign = if pos % 2 == 0 { 1.0 } else { -1.0 };
            s += sign * m[(row, col)] * rec(m, row + 1, free);
            free.insert(pos, col);
        }
        s
    }
    rec(m, 0, &mut (0..m.nrows()).collect())
}

/// The m = 0 determinant from its factorised closed form, written out here
/// without the library: double charge sum times the Euler factor.
fn free_det(md: &MonodromyData, tau: Complex64) -> Complex64 {
    let i2pi = c(0.0, 2.0 * PI);
    let (a, nu_s) = (md.a, md.nu + 0.5);
    let x = md.rho - tau / 2.0;
    let mut sum = c(0.0, 0.0);
    for q1 in -8i64..=8 {
        for q2 in -8i64..=8 {
            let (q1f, q2f) = (q1 as f64, q2 as f64);
            let quad = ((q1f + a) * (q1f + a) + (q2f - a) * (q2f - a)) / 2.0;
            sum += (i2pi * tau * quad + i2pi * (q1f * nu_s - q2f * nu_s - (q1f + q2f) * x)).exp();
        }
    }
    let q = (i2pi * tau).exp();
    let e = euler_product(q);
    (-i2pi * tau * a * a).exp() * sum / (e * e)
}

#[test]
fn determinant_basics() {
    let z = DMatrix::<Complex64>::zeros(5, 5);
    let op = TruncatedOperator { matrix: z, basis: circle_basis(0, 1).into_iter().chain(circle_basis(1, 1)).take(5).collect(), n_modes: 1 };
    assert_eq!(det_i_minus_k(&op).value, c(1.0, 0.0));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u = random_matrix(&mut rng, 6, 1);
    let v = random_matrix(&mut rng, 6, 1);
    let k = &u * v.transpose();
    let m = DMatrix::identity(6, 6) - &k;
    let expect = c(1.0, 0.0) - (v.transpose() * &u)[(0, 0)];
    assert!(rel(determinant(&m).value, expect) < 1e-13);
    let singular = DMatrix::from_fn(3, 3, |i, _| c(i as f64, 1.0));
    assert!(determinant(&singular).value.norm() < 1e-14);
}

#[test]
fn determinant_matches_leibniz_expansion() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in 1..=6 {
        let m = random_matrix(&mut rng, n, n);
        let d = determinant(&m);
        assert!(rel(d.value, leibniz(&m)) < 1e-12, "n = {n}");
        assert!(rel(d.log_value.exp(), d.value) < 1e-12);
    }
}

#[test]
fn balancing_keeps_the_determinant_and_rescues_wide_ranges() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 6;
    let base = random_matrix(&mut rng, n, n);
    let scales: Vec<f64> = (0..n).map(|i| 10f64.powi(30 * i as i32 - 60)).collect();
    let wide = DMatrix::from_fn(n, n, |i, j| base[(i, j)] * scales[i] / scales[j]);
    assert!(rel(determinant(&wide).value, determinant(&base).value) < 1e-12);
    let mut b = wide.clone();
    balance(&mut b);
    let spread = b.iter().map(|x| x.norm()).fold(0.0, f64::max) / b.iter().map(|x| x.norm()).filter(|&x| x > 0.0).fold(f64::INFINITY, f64::min);
    assert!(spread < 1e6);
}

#[test]
fn basis_layout() {
    let op = assemble_k11(&desk(), &modulus(0.0, 1.1), 3).unwrap();
    assert_eq!(op.dim(), 12);
    let mut seen = vec![false; 12];
    for space in [Space::Minus, Space::Plus] {
        for colour in 0..2 {
            for level in 0..3 {
                let i = op.basis_index(BasisLabel { circle: 0, space, colour, level }).unwrap();
                assert!(!seen[i]);
                seen[i] = true;
            }
        }
    }
    assert!(seen.iter().all(|&s| s));
    assert!(op.matrix.iter().all(|x| x.re.is_finite() && x.im.is_finite()));
}

#[test]
fn zero_mass_determinant_equals_closed_form() {
    let md = MonodromyData::real(0.31, 0.0, 0.05, 0.21).unwrap();
    for tau in [modulus(0.0, 0.9), modulus(0.2, 1.2)] {
        let d = det_i_minus_k(&assemble_k11(&md, &tau, 16).unwrap()).value;
        assert!(rel(d, free_det(&md, tau.tau())) < 1e-12, "tau = {}", tau.tau());
    }
}

#[test]
fn single_mode_minor_expansion() {
    let op = assemble_k11(&desk(), &modulus(0.0, 1.1), 1).unwrap();
    assert_eq!(op.dim(), 4);
    let mut sum = c(0.0, 0.0);
    for mask in 0u32..16 {
        let idx: Vec<usize> = (0..4).filter(|i| mask & (1 << i) != 0).collect();
        let minor = if idx.is_empty() { c(1.0, 0.0) } else { leibniz(&op.principal(&idx)) };
        let sign = if idx.len() % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * minor;
    }
    assert!(rel(det_i_minus_k(&op).value, sum) < 1e-13);
}

#[test]
fn spectral_radius_follows_the_leading_plus_mode() {
    // The plus mode with exponent +a picks up |e^{−2πiτa}| = e^{2πa Im τ} from ∇,
    // so the spectrum grows with Im τ at exactly that rate.
    let md = desk();
    let sr: Vec<f64> = [1.0, 1.5, 2.0].iter().map(|&t| assemble_k11(&md, &modulus(0.0, t), 8).unwrap().spectral_radius()).collect();
    let expect = (2.0 * PI * md.a.re * 0.5).exp();
    for w in sr.windows(2) {
        assert!((w[1] / w[0] / expect - 1.0).abs() < 1e-2, "{sr:?}");
    }
}

#[test]
fn truncation_converges_geometrically() {
    let md = desk();
    let tau = modulus(0.0, 0.9);
    let fam = |n| K11Family::new(&md, &tau, n).unwrap().det(md.rho).unwrap();
    let (d4, d8, d16, d32) = (fam(4), fam(8), fam(16), fam(32));
    let e4 = (d4 - d32).norm();
    let e8 = (d8 - d32).norm();
    assert!(e8 < 1e-3 * e4, "{e4:e} {e8:e}");
    assert!((d16 - d32).norm() < 1e-12 * d32.norm());
}

#[test]
fn family_matches_direct_assembly() {
    let md = desk();
    let tau = modulus(0.1, 1.0);
    let fam = K11Family::new(&md, &tau, 8).unwrap();
    for rho in [c(0.21, 0.0), c(0.4, 0.1), c(-0.3, 0.25)] {
        let direct = det_i_minus_k(&assemble_k11(&md.with_rho(rho), &tau, 8).unwrap()).value;
        assert!(rel(fam.det(rho).unwrap(), direct) < 1e-12);
    }
}

#[test]
fn determinant_is_a_degree_two_theta_function_of_rho() {
    // f(ρ) = det·e^{−2πiρ} obeys f(ρ+1) = f(ρ) and f(ρ+τ) = e^{−2πi(2ρ+τ)} f(ρ).
    let md = desk();
    let tau = modulus(0.0, 1.1);
    let t = tau.tau();
    let fam = K11Family::new(&md, &tau, 24).unwrap();
    let f = |rho: Complex64| fam.det(rho).unwrap() * (c(0.0, -2.0 * PI) * rho).exp();
    for rho in [c(0.13, 0.0), c(0.37, -0.2)] {
        assert!(rel(f(rho + 1.0), f(rho)) < 1e-12);
        let expect = (c(0.0, -2.0 * PI) * (2.0 * rho + t)).exp() * f(rho);
        assert!(rel(f(rho + t), expect) < 1e-8);
    }
}

#[test]
fn widom_form_matches_k11() {
    let md = desk();
    for tau in [modulus(0.0, 1.1), modulus(0.2, 1.2)] {
        let k = det_i_minus_k(&assemble_k11(&md, &tau, 16).unwrap()).value;
        let w = det_i_minus_k(&assemble_widom_form(&md, &tau, 16).unwrap()).value;
        assert!(rel(w, k) < 1e-8, "tau = {}", tau.tau());
    }
}

#[test]
fn widom_form_at_zero_mass_is_the_shift_closed_form() {
    let md = MonodromyData::real(0.31, 0.0, 0.0, 0.21).unwrap();
    let tau = modulus(0.0, 1.0);
    let w = det_i_minus_k(&assemble_widom_form(&md, &tau, 16).unwrap()).value;
    assert!(rel(w, free_det(&md, tau.tau())) < 1e-12);
}

#[test]
fn widom_form_degenerates_to_the_plain_constant() {
    let md = desk();
    // At ρ = ρ₀ + τ/2 every shift entry decays like e^{−π Im τ}; at fixed ρ
    // the constant plus mode keeps the entry e^{2πiρ}.
    let gap = |im: f64| {
        let tau = modulus(0.0, im);
        let jump = modulus(0.0, 1.1);
        let opts = WidomOptions { jump_tau: Some(jump), without_shifts: false };
        let balanced = md.with_rho(md.rho + tau.tau() / 2.0);
        let w = det_i_minus_k(&assemble_widom_form_with(&balanced, &tau, 16, &opts).unwrap()).value;
        rel(w, widom_constant(&md, &jump, 16).unwrap())
    };
    let (g2, g3, g4) = (gap(2.0), gap(3.0), gap(4.0));
    for r in [g2 / g3, g3 / g4] {
        assert!((r / PI.exp() - 1.0).abs() < 0.1, "ratio {r}");
    }
    let fixed = |im: f64| {
        let tau = modulus(0.0, im);
        let jump = modulus(0.0, 1.1);
        let opts = WidomOptions { jump_tau: Some(jump), without_shifts: false };
        let w = det_i_minus_k(&assemble_widom_form_with(&md, &tau, 16, &opts).unwrap()).value;
        rel(w, widom_constant(&md, &jump, 16).unwrap())
    };
    assert!(fixed(4.0) > 1.0);
}

fn random_layout(rng: &mut ChaCha8Rng, n: usize, n_modes: usize) -> BlockLayout {
    let modes = CircleModes::twisted(c(0.27, 0.0), n_modes);
    let d = 2 * n_modes;
    let blocks = (0..n)
        .map(|_| TrinionBlocks {
            a: random_matrix(rng, d, d) * c(0.3, 0.0),
            b: random_matrix(rng, d, d) * c(0.3, 0.0),
            c: random_matrix(rng, d, d) * c(0.3, 0.0),
            d: random_matrix(rng, d, d) * c(0.3, 0.0),
        })
        .collect();
    BlockLayout {
        blocks,
        circles: vec![modes.clone(); n],
        last_out: modes,
        shift: ShiftData { rho: c(0.21, 0.0), tau: modulus(0.0, 1.0), lambda_sum: c(0.0, 0.0) },
    }
}

#[test]
fn k1n_with_one_trinion_is_k11() {
    let md = desk();
    let tau = modulus(0.0, 1.1);
    let layout = k11_trinion_layout(&md, &tau, 6).unwrap();
    let k1n = assemble_k1n(&layout).unwrap();
    let k11 = assemble_k11(&md, &tau, 6).unwrap();
    let scale = k11.matrix.iter().map(|x| x.norm()).fold(0.0, f64::max);
    assert!((&k1n.matrix - &k11.matrix).iter().map(|x| x.norm()).fold(0.0, f64::max) < 1e-12 * scale);
    assert!(rel(det_i_minus_k(&k1n).value, det_i_minus_k(&k11).value) < 1e-12);
}

#[test]
fn k1n_block_pattern() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = 3;
    let nm = 2;
    let op = assemble_k1n(&random_layout(&mut rng, n, nm)).unwrap();
    let s = 2 * nm;
    let nonzero = |r: usize, cc: usize| (0..s).any(|i| (0..s).any(|j| op.matrix[(r * s + i, cc * s + j)].norm() > 0.0));
    // 0-based super-blocks: row 0 → cols 2n−2, 2n−1; row 2k−1 → 2k, 2k+1; row 2k → 2k−2, 2k−1; row 2n−1 → 0, 1.
    let mut expected = vec![(0, 2 * n - 2), (0, 2 * n - 1), (2 * n - 1, 0), (2 * n - 1, 1)];
    for k in 1..n {
        expected.extend([(2 * k - 1, 2 * k), (2 * k - 1, 2 * k + 1), (2 * k, 2 * k - 2), (2 * k, 2 * k - 1)]);
    }
    for r in 0..2 * n {
        for cc in 0..2 * n {
            assert_eq!(nonzero(r, cc), expected.contains(&(r, cc)), "super-block ({r}, {cc})");
        }
    }
}

#[test]
fn k1n_broken_chain_is_nilpotent() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut layout = random_layout(&mut rng, 2, 2);
    assert!((det_i_minus_k(&assemble_k1n(&layout).unwrap()).value - 1.0).norm() > 1e-6);
    let d = layout.blocks[0].a.nrows();
    let zero = DMatrix::<Complex64>::zeros(d, d);
    let b = &mut layout.blocks[0];
    b.a = zero.clone();
    b.b = zero.clone();
    b.c = zero.clone();
    b.d = zero;
    assert!((det_i_minus_k(&assemble_k1n(&layout).unwrap()).value - 1.0).norm() < 1e-14);
}

#[test]
fn k1n_rejections() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut layout = random_layout(&mut rng, 2, 2);
    layout.shift.lambda_sum = c(0.5, 0.0);
    assert!(matches!(assemble_k1n(&layout), Err(Error::UnsupportedTwist(_))));
    layout.shift.lambda_sum = c(1.0, 0.0);
    assert!(assemble_k1n(&layout).is_ok());
    layout.shift.lambda_sum = c(0.0, 0.0);
    layout.blocks[1].b = DMatrix::zeros(3, 4);
    assert!(matches!(assemble_k1n(&layout), Err(Error::InconsistentTruncation(_))));
}
