//! Independent oracles shared by the integration tests. Nothing here calls
//! into the library; sums that need extra precision go through a small
//! double-double type.
#![allow(dead_code)]

use num_complex::Complex64;
use std::f64::consts::PI;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// Unevaluated sum hi + lo with |lo| ≤ ulp(hi)/2.
#[derive(Debug, Clone, Copy, Default)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub fn new(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (hi, lo) = two_sum(s, e + self.lo + o.lo);
        Dd { hi, lo }
    }

    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    pub fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let (hi, lo) = two_sum(p, e + self.hi * o.lo + self.lo * o.hi);
        Dd { hi, lo }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Cdd {
    pub re: Dd,
    pub im: Dd,
}

impl Cdd {
    pub fn from(z: Complex64) -> Self {
        Cdd { re: Dd::new(z.re), im: Dd::new(z.im) }
    }

    pub fn add(self, o: Cdd) -> Cdd {
        Cdd { re: self.re.add(o.re), im: self.im.add(o.im) }
    }

    pub fn mul(self, o: Cdd) -> Cdd {
        Cdd {
            re: self.re.mul(o.re).add(self.im.mul(o.im).neg()),
            im: self.re.mul(o.im).add(self.im.mul(o.re)),
        }
    }

    pub fn to_c64(self) -> Complex64 {
        c(self.re.to_f64(), self.im.to_f64())
    }
}

/// θ1 by its defining sum over |k| ≤ n, compensated.
pub fn theta1_series(z: Complex64, tau: Complex64, n: i64) -> Complex64 {
    let mut s = Cdd::default();
    for k in -n..=n {
        let nu = k as f64 + 0.5;
        let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let t = c(0.0, -sign) * (c(0.0, PI) * tau * nu * nu + c(0.0, 2.0 * PI) * nu * z).exp();
        s = s.add(Cdd::from(t));
    }
    s.to_c64()
}

/// θ1 from the Jacobi triple product.
pub fn theta1_product(z: Complex64, tau: Complex64) -> Complex64 {
    let q = (c(0.0, 2.0 * PI) * tau).exp();
    let u = (c(0.0, 2.0 * PI) * z).exp();
    let mut p = 2.0 * (c(0.0, PI / 4.0) * tau).exp() * (PI * z).sin();
    let mut qn = q;
    while qn.norm() > 1e-20 {
        p *= (1.0 - qn) * (1.0 - qn * u) * (1.0 - qn / u);
        qn *= q;
    }
    p
}

/// η(τ) = q^{1/24} ∏(1 − qⁿ).
pub fn eta_product(tau: Complex64) -> Complex64 {
    let q = (c(0.0, 2.0 * PI) * tau).exp();
    let mut p = (c(0.0, 2.0 * PI / 24.0) * tau).exp();
    let mut qn = q;
    while qn.norm() > 1e-20 {
        p *= 1.0 - qn;
        qn *= q;
    }
    p
}

/// ∏_{k≥1} (1 − q^k) truncated at |q^k| < 1e-20.
pub fn euler_product(q: Complex64) -> Complex64 {
    let mut p = c(1.0, 0.0);
    let mut qn = q;
    while qn.norm() > 1e-20 {
        p *= 1.0 - qn;
        qn *= q;
    }
    p
}

/// Gauss series with compensated accumulation.
pub fn hyp2f1_dd(a: Complex64, b: Complex64, cc: Complex64, x: Complex64) -> Complex64 {
    let mut sum = Cdd::from(c(1.0, 0.0));
    let mut term = Cdd::from(c(1.0, 0.0));
    for k in 0..20_000 {
        let kf = k as f64;
        let r = (a + kf) * (b + kf) / ((cc + kf) * (kf + 1.0)) * x;
        term = term.mul(Cdd::from(r));
        sum = sum.add(term);
        if term.to_c64().norm() < 1e-34 * sum.to_c64().norm() {
            break;
        }
    }
    sum.to_c64()
}

/// log Γ(z) by upward recurrence and the Stirling series, Re z > 0.
pub fn ln_gamma_stirling(z: Complex64) -> Complex64 {
    let shift = 20usize;
    let mut w = z;
    let mut log_prod = c(0.0, 0.0);
    for _ in 0..shift {
        log_prod += w.ln();
        w += 1.0;
    }
    // Bernoulli coefficients B_{2k}/(2k(2k−1)).
    let coeffs = [1.0 / 12.0, -1.0 / 360.0, 1.0 / 1260.0, -1.0 / 1680.0, 1.0 / 1188.0, -691.0 / 360360.0, 1.0 / 156.0];
    let mut series = c(0.0, 0.0);
    let w2 = w * w;
    let mut wp = w;
    for cf in coeffs {
        series += cf / wp;
        wp *= w2;
    }
    (w - 0.5) * w.ln() - w + 0.5 * (2.0 * PI).ln() + series - log_prod
}

/// Γ(z) for any non-pole z, by reflection when Re z < 1/2.
pub fn gamma_ref(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        return PI / ((PI * z).sin() * gamma_ref(1.0 - z));
    }
    ln_gamma_stirling(z).exp()
}

pub type M2 = [[Complex64; 2]; 2];

pub fn m2_mul(a: &M2, b: &M2) -> M2 {
    let mut r = [[c(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    r
}

/// The in-solution written straight from its hypergeometric formula.
pub fn y_in_oracle(z: Complex64, a: Complex64, m: Complex64) -> M2 {
    let x = (c(0.0, -2.0 * PI) * z).exp();
    let two_a = 2.0 * a;
    let f11 = hyp2f1_dd(m, m - two_a, -two_a, x);
    let f12 = -m / two_a * hyp2f1_dd(1.0 + m, m - two_a, 1.0 - two_a, x);
    let f21 = m * x / (two_a + 1.0) * hyp2f1_dd(1.0 + m, 1.0 + m + two_a, 2.0 + two_a, x);
    let f22 = hyp2f1_dd(m, 1.0 + m + two_a, 1.0 + two_a, x);
    let pre = (1.0 - x).powc(m);
    let e = (c(0.0, 2.0 * PI) * a * z).exp();
    [[pre * e * f11, pre * e * f12], [pre / e * f21, pre / e * f22]]
}

/// The out-solution from its definition in terms of the in-solution.
pub fn y_out_oracle(z: Complex64, a: Complex64, m: Complex64, nu: Complex64) -> M2 {
    let g = |x: Complex64| gamma_ref(x);
    let dnu = g(-2.0 * a) * g(1.0 + 2.0 * a - m) / (g(1.0 + 2.0 * a) * g(-2.0 * a - m));
    let ph = (c(0.0, 2.0 * PI) * nu).exp() * dnu;
    let y = y_in_oracle(-z, a, m);
    [[ph * y[1][1], ph * y[1][0]], [y[0][1] / ph, y[0][0] / ph]]
}

/// Number of partitions of n by Euler's pentagonal recurrence.
pub fn partition_count(n: usize) -> u64 {
    let mut p = vec![0i64; n + 1];
    p[0] = 1;
    for k in 1..=n {
        let mut s = 0i64;
        let mut j = 1i64;
        loop {
            let g1 = (j * (3 * j - 1) / 2) as usize;
            if g1 > k {
                break;
            }
            let sign = if j % 2 == 1 { 1 } else { -1 };
            s += sign * p[k - g1];
            let g2 = (j * (3 * j + 1) / 2) as usize;
            if g2 <= k {
                s += sign * p[k - g2];
            }
            j += 1;
        }
        p[k] = s;
    }
    p[n] as u64
}
