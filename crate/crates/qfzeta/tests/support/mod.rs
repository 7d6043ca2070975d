//! Shared test oracles.
//!
//! Everything here is independent of the library's evaluation paths:
//! representation numbers of sums of squares (exact integer convolution),
//! theta-power modular bundles whose functional equations are classical
//! facts, a weight-0 Eisenstein expansion with exactly known coefficients,
//! and a high-precision Whittaker oracle (asymptotic seed at large
//! argument plus Taylor marching of the ODE in double-double arithmetic).

#![allow(dead_code)]

use num_complex::Complex64;

use qfzeta::characters::KroneckerCharacter;
use qfzeta::forms::{ConstTerm, FormKind, FourierExpansion};
use qfzeta::series::CoefficientSeries;

// ---------------------------------------------------------------------------
// sums of squares
// ---------------------------------------------------------------------------

/// `r_j(n)` for `n = 0..=n_max`: representation numbers by `j` squares.
pub fn sums_of_squares(j: usize, n_max: usize) -> Vec<u64> {
    let mut r1 = vec![0u64; n_max + 1];
    r1[0] = 1;
    let mut x = 1usize;
    while x * x <= n_max {
        r1[x * x] = 2;
        x += 1;
    }
    let mut acc = vec![0u64; n_max + 1];
    acc[0] = 1;
    for _ in 0..j {
        let mut next = vec![0u64; n_max + 1];
        for a in 0..=n_max {
            if acc[a] == 0 {
                continue;
            }
            for b in 0..=(n_max - a) {
                if r1[b] != 0 {
                    next[a + b] += acc[a] * r1[b];
                }
            }
        }
        acc = next;
    }
    acc
}

// ---------------------------------------------------------------------------
// theta-power bundles on Γ₀(4)
// ---------------------------------------------------------------------------

/// Fricke multiplier of `θ^j`: `θ^j(-1/(4z)) (2z)^{-j/2} = w_j θ^j(z)`
/// with `w_j = (-i)^{j/2}` (principal branch).
pub fn theta_fricke_multiplier(j: u32) -> Complex64 {
    (Complex64::new(0.0, -1.0).ln() * (j as f64 / 2.0)).exp()
}

fn theta_character(j: u32) -> KroneckerCharacter {
    if j % 2 == 1 || j % 4 == 0 {
        KroneckerCharacter::principal()
    } else {
        KroneckerCharacter::from_disc(-4)
    }
}

/// `θ^j` as a holomorphic expansion of weight `j/2` on `Γ₀(4)` with the
/// constant term known exactly.
pub fn theta_power_expansion(j: u32, n_max: usize) -> FourierExpansion {
    let r = sums_of_squares(j as usize, n_max);
    FourierExpansion {
        kind: FormKind::Holomorphic,
        ell: j as i64,
        level: 4,
        character: theta_character(j),
        m: j,
        p: (j + 2) / 2, // placeholder signature consistent with weight parity
        const_growth: ConstTerm::Known(Complex64::new(1.0, 0.0)),
        const_decay: ConstTerm::Known(Complex64::new(0.0, 0.0)),
        coeffs_plus: (1..=n_max).map(|n| Complex64::new(r[n] as f64, 0.0)).collect(),
        coeffs_minus: vec![],
        // the c = ±4 sample geometry needs evaluations down to Im z ≈ 0.2;
        // truncation at n_max ≥ 60 is still far below round-off there
        y_min: 0.15,
    }
}

/// The Fricke partner `G = w_j θ^j`.
pub fn theta_power_partner(j: u32, n_max: usize) -> FourierExpansion {
    let mut g = theta_power_expansion(j, n_max);
    let w = theta_fricke_multiplier(j);
    for c in g.coeffs_plus.iter_mut() {
        *c *= w;
    }
    g.const_growth = ConstTerm::Known(w);
    g
}

/// Functional-equation bundle of `θ^j`: `a(n) = r_j(n)`, `b(n) = w_j r_j(n)`,
/// `a0 = 1`, `b0 = w_j`.
pub fn theta_power_series(j: u32, n_max: usize) -> CoefficientSeries {
    let r = sums_of_squares(j as usize, n_max);
    let w = theta_fricke_multiplier(j);
    let a: Vec<Complex64> = (1..=n_max).map(|n| Complex64::new(r[n] as f64, 0.0)).collect();
    let b: Vec<Complex64> = a.iter().map(|&c| w * c).collect();
    CoefficientSeries::new(
        j,
        4,
        a,
        b,
        Some(Complex64::new(1.0, 0.0)),
        Some(w),
        theta_character(j),
    )
}

// ---------------------------------------------------------------------------
// weight-0 Eisenstein series on SL2(Z)
// ---------------------------------------------------------------------------

/// `ζ(s)` by Euler–Maclaurin (real `s > 1`).
pub fn zeta_em(s: f64) -> f64 {
    let n = 64.0f64;
    let mut sum = 0.0;
    let mut k = 1.0;
    while k < n {
        sum += k.powf(-s);
        k += 1.0;
    }
    sum += n.powf(1.0 - s) / (s - 1.0);
    sum += 0.5 * n.powf(-s);
    sum += s * n.powf(-s - 1.0) / 12.0;
    sum -= s * (s + 1.0) * (s + 2.0) * n.powf(-s - 3.0) / 720.0;
    sum
}

fn sigma_exp(n: usize, e: f64) -> f64 {
    let mut acc = 0.0;
    for d in 1..=n {
        if n % d == 0 {
            acc += (d as f64).powf(e);
        }
    }
    acc
}

/// Real-analytic Eisenstein series `E(z, s)` at `s = m/4` as a weight-0
/// Maass expansion on level 1: constant part `y^s + φ(s) y^{1-s}` and
/// coefficients `π^s n^{s-1} σ_{1-2s}(n)/(Γ(s) ζ(2s))` on both sides.
pub fn eisenstein_expansion(m: u32, n_max: usize) -> FourierExpansion {
    assert!(m % 4 != 0, "λ = m/4 must avoid the weight-0 degenerate cases");
    let s = m as f64 / 4.0;
    let pi = std::f64::consts::PI;
    let gamma_s = qfzeta::special::ln_gamma_real(s).exp();
    let gamma_sh = qfzeta::special::ln_gamma_real(s - 0.5).exp();
    let phi = pi.sqrt() * gamma_sh * zeta_em(2.0 * s - 1.0) / (gamma_s * zeta_em(2.0 * s));
    let coeffs: Vec<Complex64> = (1..=n_max)
        .map(|n| {
            let v = pi.powf(s) * (n as f64).powf(s - 1.0) * sigma_exp(n, 1.0 - 2.0 * s)
                / (gamma_s * zeta_em(2.0 * s));
            Complex64::new(v, 0.0)
        })
        .collect();
    FourierExpansion {
        kind: FormKind::Maass,
        ell: 0,
        level: 1,
        character: KroneckerCharacter::principal(),
        m,
        p: 1, // unused by weight-0 evaluation
        const_growth: ConstTerm::Known(Complex64::new(1.0, 0.0)),
        const_decay: ConstTerm::Known(Complex64::new(phi, 0.0)),
        coeffs_plus: coeffs.clone(),
        coeffs_minus: coeffs,
        y_min: 0.3,
    }
}

// ---------------------------------------------------------------------------
// double-double arithmetic
// ---------------------------------------------------------------------------

/// Unevaluated sum of two doubles, giving ~31 significant digits.
#[derive(Debug, Clone, Copy)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    pub fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, o.hi);
        let s2 = s2 + self.lo + o.lo;
        let (hi, lo) = quick_two_sum(s1, s2);
        Dd { hi, lo }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }

    pub fn mul(self, o: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, o.hi);
        let p2 = p2 + self.hi * o.lo + self.lo * o.hi;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul_f64(q1));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul_f64(q2));
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        let (hi, lo2) = quick_two_sum(hi, lo + q3);
        Dd { hi, lo: lo2 }
    }

    pub fn mul_f64(self, x: f64) -> Dd {
        self.mul(Dd::from(x))
    }

    pub fn abs(self) -> f64 {
        self.to_f64().abs()
    }
}

// ---------------------------------------------------------------------------
// Whittaker oracle
// ---------------------------------------------------------------------------

/// High-precision `W_{κ,μ}(y)`, computed without the production integral
/// representation: the normalized function `w(y) = W e^{y/2} y^{-κ}` is
/// seeded by its asymptotic series at `y₀ = max(60, y)` and marched down
/// to `y` by Taylor steps of the ODE
/// `w'' + (2κ/y - 1) w' + ((κ-1/2)² - μ²)/y² w = 0` in double-double
/// arithmetic.  Marching toward smaller `y` keeps the wanted solution
/// dominant, so the march is stable.
pub fn whittaker_oracle(kappa: f64, mu: f64, y: f64) -> f64 {
    assert!(y > 0.0);
    let y0 = 60.0f64.max(y);
    let (mut w, mut wp) = asymptotic_seed(kappa, mu, y0);
    let c_const = (kappa - 0.5) * (kappa - 0.5) - mu * mu;
    let mut pos = y0;
    while pos > y + 1e-14 {
        let h = -(pos - y).min(0.4).min(pos / 4.0);
        let (nw, nwp) = taylor_step(kappa, c_const, pos, w, wp, h);
        w = nw;
        wp = nwp;
        pos += h;
    }
    (-y / 2.0 + kappa * y.ln()).exp() * w.to_f64()
}

// asymptotic series of w and w' at large y (DD)
fn asymptotic_seed(kappa: f64, mu: f64, y0: f64) -> (Dd, Dd) {
    let ydd = Dd::from(y0);
    let mut c = Dd::from(1.0);
    let mut w = Dd::from(1.0);
    let mut wp = Dd::from(0.0);
    let mut ypow = Dd::from(1.0); // y^{-k}
    let mut last = f64::INFINITY;
    for k in 1..200 {
        let kf = k as f64;
        // c_k = c_{k-1} (μ² - (κ-k+1/2)²)/k
        let t = mu * mu - (kappa - kf + 0.5) * (kappa - kf + 0.5);
        c = c.mul_f64(t / kf);
        ypow = ypow.div(ydd);
        let term = c.mul(ypow);
        if term.abs() > last {
            break; // divergent tail reached
        }
        last = term.abs();
        w = w.add(term);
        // d/dy of c_k y^{-k} = -k c_k y^{-k-1}
        wp = wp.add(term.div(ydd).mul_f64(-kf));
        if last < 1e-34 {
            break;
        }
    }
    (w, wp)
}

// one Taylor step of the normalized ODE, base y0, step h (DD coefficients)
fn taylor_step(kappa: f64, c_const: f64, y0: f64, w: Dd, wp: Dd, h: f64) -> (Dd, Dd) {
    const TERMS: usize = 40;
    let y0dd = Dd::from(y0);
    let y0sq = y0dd.mul(y0dd);
    let mut a = [Dd::from(0.0); TERMS + 2];
    a[0] = w;
    a[1] = wp;
    for j in 0..TERMS {
        let jf = j as f64;
        // y0²(j+2)(j+1) a_{j+2} = -[(j+1)(2y0 j + 2κy0 - y0²) a_{j+1}
        //   + (j(j-1) + (2κ-2y0) j + c) a_j - (j-1) a_{j-1}]
        let coef1 = Dd::from(2.0 * y0 * jf + 2.0 * kappa * y0).sub(y0sq).mul_f64(jf + 1.0);
        let coef0 = Dd::from(jf * (jf - 1.0) + (2.0 * kappa - 2.0 * y0) * jf + c_const);
        let mut rhs = coef1.mul(a[j + 1]).add(coef0.mul(a[j]));
        if j >= 1 {
            rhs = rhs.sub(a[j - 1].mul_f64(jf - 1.0));
        }
        a[j + 2] = rhs.neg().div(y0sq.mul_f64((jf + 2.0) * (jf + 1.0)));
    }
    // Horner evaluation of w and w' at t = h
    let hdd = Dd::from(h);
    let mut val = Dd::from(0.0);
    let mut der = Dd::from(0.0);
    for j in (0..TERMS + 2).rev() {
        val = val.mul(hdd).add(a[j]);
        if j >= 1 {
            der = der.mul(hdd).add(a[j].mul_f64(j as f64));
        }
    }
    // der currently holds Σ j a_j h^{j-1} via the reversed Horner above
    (val, der)
}
