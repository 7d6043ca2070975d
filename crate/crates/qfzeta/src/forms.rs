//! Fourier expansions of the Maass and holomorphic modular forms built
//! from representation measures, and the numerical defects that verify
//! them: modularity under `Γ₀(N)`, the hyperbolic-Laplacian eigenvalue
//! equation, and the Fricke relation between a form and its dual.
//!
//! Coefficients are stored at the *relative* measure normalization; the
//! two constant terms of a Maass expansion (and the single constant of a
//! holomorphic one) absorb archimedean volume data and are obtained by a
//! homogeneous least-squares fit over modularity equations, which are
//! linear in (scale, constants).

use nalgebra::{Complex, DMatrix};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::characters::{theta_multiplier, CharacterError, KroneckerCharacter};
use crate::localdensity::MeasureTable;
use crate::quadform::FormProfile;
use crate::special::{ln_gamma_real, whittaker_w, SpecialError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FormsError {
    #[error("parity violation: {0}")]
    ParityViolation(String),
    #[error("measure table does not cover n = {0}")]
    MissingMeasure(i128),
    #[error("constant terms unresolved; fit or supply them first")]
    UnresolvedConstants,
    #[error("Im z = {y} below the evaluation floor {y_min}")]
    BelowYMin { y: f64, y_min: f64 },
    #[error("matrix is not in Gamma0({0})")]
    BadGamma(u64),
    #[error("fit is ill-conditioned: {0}")]
    IllConditioned(String),
    #[error("character error: {0}")]
    Character(#[from] CharacterError),
    #[error("special function: {0}")]
    Special(#[from] SpecialError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormKind {
    Maass,
    Holomorphic,
}

/// State of a constant term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConstTerm {
    Known(Complex64),
    Fitted(Complex64),
    Unknown,
}

impl ConstTerm {
    pub fn value(&self) -> Option<Complex64> {
        match *self {
            ConstTerm::Known(v) | ConstTerm::Fitted(v) => Some(v),
            ConstTerm::Unknown => None,
        }
    }
}

/// Element of `Γ₀(N)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GammaElement {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    pub d: i64,
}

impl GammaElement {
    pub fn new(a: i64, b: i64, c: i64, d: i64, level: u64) -> Result<Self, FormsError> {
        let g = GammaElement { a, b, c, d };
        if a * d - b * c != 1 || c.rem_euclid(level as i64) != 0 {
            return Err(FormsError::BadGamma(level));
        }
        Ok(g)
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        let num = Complex64::new(self.a as f64, 0.0) * z + Complex64::new(self.b as f64, 0.0);
        let den = Complex64::new(self.c as f64, 0.0) * z + Complex64::new(self.d as f64, 0.0);
        num / den
    }

    pub fn j_factor(&self, z: Complex64) -> Complex64 {
        Complex64::new(self.c as f64, 0.0) * z + Complex64::new(self.d as f64, 0.0)
    }

    pub fn mul(&self, other: &GammaElement) -> GammaElement {
        GammaElement {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
    }

    pub fn inv(&self) -> GammaElement {
        GammaElement { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }
}

/// Fourier expansion of a weight-`ℓ/2` form.
#[derive(Debug, Clone)]
pub struct FourierExpansion {
    pub kind: FormKind,
    /// weight is `ell/2`; a holomorphic build of weight `m/2` has `ell = m`
    pub ell: i64,
    pub level: u64,
    pub character: KroneckerCharacter,
    pub m: u32,
    pub p: u32,
    /// coefficient of `y^{(m-ell)/4}` (Maass) or the constant term `a0`
    /// (holomorphic)
    pub const_growth: ConstTerm,
    /// coefficient of `y^{1-(m+ell)/4}` (Maass only)
    pub const_decay: ConstTerm,
    /// multiplier of the Whittaker/exponential term at `e[nx]`, `n = 1..`
    pub coeffs_plus: Vec<Complex64>,
    /// same at `e[-nx]` (empty for holomorphic kind)
    pub coeffs_minus: Vec<Complex64>,
    pub y_min: f64,
}

/// `λ = m/4` and the Maass eigenvalue `(m-ℓ)(4-m-ℓ)/16`.
impl FourierExpansion {
    pub fn lambda_param(&self) -> f64 {
        self.m as f64 / 4.0
    }

    pub fn eigenvalue(&self) -> Option<f64> {
        match self.kind {
            FormKind::Maass => {
                let m = self.m as f64;
                let l = self.ell as f64;
                Some((m - l) * (4.0 - m - l) / 16.0)
            }
            FormKind::Holomorphic => None,
        }
    }

    pub fn n_max(&self) -> usize {
        self.coeffs_plus.len().max(self.coeffs_minus.len())
    }

    fn constants(&self) -> Result<(Complex64, Complex64), FormsError> {
        let cg = self.const_growth.value().ok_or(FormsError::UnresolvedConstants)?;
        let cd = match self.kind {
            FormKind::Maass => self.const_decay.value().ok_or(FormsError::UnresolvedConstants)?,
            FormKind::Holomorphic => Complex64::new(0.0, 0.0),
        };
        Ok((cg, cd))
    }

    /// Powers of `y` carried by the two constant terms.
    pub fn const_powers(&self) -> (f64, f64) {
        let m = self.m as f64;
        let l = self.ell as f64;
        ((m - l) / 4.0, 1.0 - (m + l) / 4.0)
    }

    /// Whittaker/exponential sum without the constant terms.
    fn coefficient_part(&self, z: Complex64) -> Result<Complex64, FormsError> {
        let y = z.im;
        let x = z.re;
        let mut acc = Complex64::new(0.0, 0.0);
        match self.kind {
            FormKind::Holomorphic => {
                for (i, &c) in self.coeffs_plus.iter().enumerate() {
                    let n = (i + 1) as f64;
                    let phase = 2.0 * std::f64::consts::PI * n * x;
                    let radial = (-2.0 * std::f64::consts::PI * n * y).exp();
                    acc += c * radial * Complex64::new(phase.cos(), phase.sin());
                }
            }
            FormKind::Maass => {
                let l = self.ell as f64;
                let mu = self.m as f64 / 4.0 - 0.5;
                let y_pow = y.powf(-l / 4.0);
                for (i, &c) in self.coeffs_plus.iter().enumerate() {
                    if c.norm() == 0.0 {
                        continue;
                    }
                    let n = (i + 1) as f64;
                    let w = whittaker_w(l / 4.0, mu, 4.0 * std::f64::consts::PI * n * y)?;
                    let phase = 2.0 * std::f64::consts::PI * n * x;
                    acc += c * y_pow * w * Complex64::new(phase.cos(), phase.sin());
                }
                for (i, &c) in self.coeffs_minus.iter().enumerate() {
                    if c.norm() == 0.0 {
                        continue;
                    }
                    let n = (i + 1) as f64;
                    let w = whittaker_w(-l / 4.0, mu, 4.0 * std::f64::consts::PI * n * y)?;
                    let phase = -2.0 * std::f64::consts::PI * n * x;
                    acc += c * y_pow * w * Complex64::new(phase.cos(), phase.sin());
                }
            }
        }
        Ok(acc)
    }

    /// Evaluate at a point of the upper half-plane, with a crude bound on
    /// the truncation tail.
    pub fn evaluate(&self, z: Complex64) -> Result<(Complex64, f64), FormsError> {
        let y = z.im;
        if y < self.y_min {
            return Err(FormsError::BelowYMin { y, y_min: self.y_min });
        }
        let (cg, cd) = self.constants()?;
        let (pow_g, pow_d) = self.const_powers();
        let mut val = cg * y.powf(pow_g);
        if self.kind == FormKind::Maass {
            val += cd * y.powf(pow_d);
        }
        val += self.coefficient_part(z)?;
        Ok((val, self.tail_bound(y)))
    }

    /// Bound on the dropped terms beyond `n_max`, using the exponential
    /// decay `e^{-2πny}` of both kinds.
    pub fn tail_bound(&self, y: f64) -> f64 {
        let n1 = (self.n_max() + 1) as f64;
        let coeff_scale = self
            .coeffs_plus
            .iter()
            .chain(self.coeffs_minus.iter())
            .map(|c| c.norm())
            .fold(0.0f64, f64::max)
            .max(1e-300);
        let rate = 2.0 * std::f64::consts::PI * y;
        // Σ_{n > n_max} scale · e^{-rate n} with a mild polynomial cushion
        2.0 * coeff_scale * n1.powf(self.m as f64 / 2.0) * (-rate * n1).exp()
            / (1.0 - (-rate).exp())
    }

    /// Scale one coefficient by `factor` (sensitivity experiments).
    pub fn perturb_coefficient(&mut self, n: i64, factor: f64) {
        let idx = (n.unsigned_abs() as usize).saturating_sub(1);
        if n > 0 {
            if let Some(c) = self.coeffs_plus.get_mut(idx) {
                *c *= factor;
            }
        } else if let Some(c) = self.coeffs_minus.get_mut(idx) {
            *c *= factor;
        }
    }
}

/// `(-1)^{(2p-m-ℓ)/4}`; the exponent is an integer when `ℓ ≡ 2p-m (4)`.
fn maass_sign(m: u32, p: u32, ell: i64) -> f64 {
    let e = (2 * p as i64 - m as i64 - ell).div_euclid(4);
    if e.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Maass build of Theorem-type data: nonconstant coefficient at `e[nx]` is
/// `(-1)^{(2p-m-ℓ)/4} (M(P;n)/√|D|) π^{m/4} |n|^{-m/4} / Γ((m+sgn(n)ℓ)/4)`.
pub fn build_maass(
    profile: &FormProfile,
    ell: i64,
    measures_plus: &MeasureTable,
    measures_minus: &MeasureTable,
    n_max: usize,
) -> Result<FourierExpansion, FormsError> {
    let m = profile.m as u32;
    let p = profile.p as u32;
    if m % 2 == 0 && p % 2 == 0 {
        return Err(FormsError::ParityViolation(format!(
            "both m={m} and p={p} are even; no Maass build exists"
        )));
    }
    if (ell - (2 * p as i64 - m as i64)).rem_euclid(4) != 0 {
        return Err(FormsError::ParityViolation(format!(
            "ell={ell} is not congruent to 2p-m={} mod 4",
            2 * p as i64 - m as i64
        )));
    }
    if ell.rem_euclid(2) == 1 && profile.level % 4 != 0 {
        return Err(FormsError::ParityViolation(format!(
            "odd ell={ell} requires 4 | N, level is {}",
            profile.level
        )));
    }
    let sign = maass_sign(m, p, ell);
    let sqrt_d = (profile.d.unsigned_abs() as f64).sqrt();
    let pi_pow = std::f64::consts::PI.powf(m as f64 / 4.0);
    let gamma_plus = (ln_gamma_real((m as f64 + ell as f64) / 4.0)).exp();
    let gamma_minus = (ln_gamma_real((m as f64 - ell as f64) / 4.0)).exp();
    let coeff = |table: &MeasureTable, n: usize, gamma: f64| -> Result<Complex64, FormsError> {
        let v = table.value(n).ok_or(FormsError::MissingMeasure(n as i128))?;
        let scale = sign * v / sqrt_d * pi_pow * (n as f64).powf(-(m as f64) / 4.0) / gamma;
        Ok(Complex64::new(scale, 0.0))
    };
    let mut plus = Vec::with_capacity(n_max);
    let mut minus = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        plus.push(coeff(measures_plus, n, gamma_plus)?);
        minus.push(coeff(measures_minus, n, gamma_minus)?);
    }
    Ok(FourierExpansion {
        kind: FormKind::Maass,
        ell,
        level: profile.level,
        character: profile.k_char.clone(),
        m,
        p,
        const_growth: ConstTerm::Unknown,
        const_decay: ConstTerm::Unknown,
        coeffs_plus: plus,
        coeffs_minus: minus,
        y_min: 0.3,
    })
}

/// Dual Maass build `G` with coefficients
/// `i^{-ℓ/2} (|n|/N)^{-m/4} M*(P̂;n) π^{m/4} / Γ((m+sgn(n)ℓ)/4)` and
/// character `χ_{K_N}`.
pub fn build_dual_maass(
    profile: &FormProfile,
    ell: i64,
    dual_measures_plus: &MeasureTable,
    dual_measures_minus: &MeasureTable,
    n_max: usize,
) -> Result<FourierExpansion, FormsError> {
    let mut g = build_maass(profile, ell, dual_measures_plus, dual_measures_minus, n_max)?;
    // replace the primal prefactor by the dual one
    let m = profile.m as f64;
    let sign = maass_sign(profile.m as u32, profile.p as u32, ell);
    let sqrt_d = (profile.d.unsigned_abs() as f64).sqrt();
    let i_pow_ell = (Complex64::new(0.0, -1.0) * std::f64::consts::FRAC_PI_2 * (ell as f64 / 2.0)).exp();
    let n_level = profile.level as f64;
    // build_maass produced sign/sqrt_d · n^{-m/4}; the dual wants
    // i^{-ℓ/2} (n/N)^{-m/4} = i^{-ℓ/2} N^{m/4} n^{-m/4}
    let fix = i_pow_ell * n_level.powf(m / 4.0) * sqrt_d / sign;
    for c in g.coeffs_plus.iter_mut().chain(g.coeffs_minus.iter_mut()) {
        *c *= fix;
    }
    g.character = profile.k_n_char.clone();
    Ok(g)
}

/// Holomorphic build `F(z) = a0 + |D|^{-1/2} Σ M(P;n) e[nz]` of weight `m/2`.
pub fn build_holomorphic(
    profile: &FormProfile,
    measures_plus: &MeasureTable,
    n_max: usize,
) -> Result<FourierExpansion, FormsError> {
    let m = profile.m as u32;
    let p = profile.p as u32;
    if (profile.m - profile.p) % 2 != 0 {
        return Err(FormsError::ParityViolation(format!(
            "m-p = {} is odd; apply the construction to -P (p even case)",
            profile.m - profile.p
        )));
    }
    let sqrt_d = (profile.d.unsigned_abs() as f64).sqrt();
    let mut plus = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let v = measures_plus.value(n).ok_or(FormsError::MissingMeasure(n as i128))?;
        plus.push(Complex64::new(v / sqrt_d, 0.0));
    }
    Ok(FourierExpansion {
        kind: FormKind::Holomorphic,
        ell: m as i64,
        level: profile.level,
        character: profile.k_char.clone(),
        m,
        p,
        const_growth: ConstTerm::Unknown,
        const_decay: ConstTerm::Known(Complex64::new(0.0, 0.0)),
        coeffs_plus: plus,
        coeffs_minus: Vec::new(),
        y_min: 0.3,
    })
}

/// Dual holomorphic build
/// `G(z) = b0 + (-1)^{(m-2p)/4} N^{m/4} Σ M*(P̂;n) e[nz]`, character `χ_{K_N}`.
pub fn build_dual_holomorphic(
    profile: &FormProfile,
    dual_measures_plus: &MeasureTable,
    n_max: usize,
) -> Result<FourierExpansion, FormsError> {
    let mut g = build_holomorphic(profile, dual_measures_plus, n_max)?;
    let m = profile.m as f64;
    let p = profile.p as f64;
    let sqrt_d = (profile.d.unsigned_abs() as f64).sqrt();
    let phase = (Complex64::new(0.0, 1.0) * std::f64::consts::PI * (m - 2.0 * p) / 4.0).exp();
    let fix = phase * (profile.level as f64).powf(m / 4.0) * sqrt_d;
    for c in g.coeffs_plus.iter_mut() {
        *c *= fix;
    }
    g.character = profile.k_n_char.clone();
    Ok(g)
}

/// Deterministic pseudo-random elements of `Γ₀(N)` built from words in
/// `T = [[1,1],[0,1]]`, `L = [[1,0],[N,1]]`, and `-I`, with bounded entries.
/// The generators themselves lead the list.
pub fn sample_gamma0(level: u64, count: usize, seed: u64) -> Vec<GammaElement> {
    let n = level as i64;
    let t = GammaElement { a: 1, b: 1, c: 0, d: 1 };
    let l = GammaElement { a: 1, b: 0, c: n, d: 1 };
    let minus_i = GammaElement { a: -1, b: 0, c: 0, d: -1 };
    let mut out = vec![t, l];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = 10_000i64;
    while out.len() < count {
        let mut g = GammaElement { a: 1, b: 0, c: 0, d: 1 };
        let len = rng.gen_range(1..=6);
        for _ in 0..len {
            let step = match rng.gen_range(0..5) {
                0 => t,
                1 => t.inv(),
                2 => l,
                3 => l.inv(),
                _ => minus_i,
            };
            let cand = g.mul(&step);
            if cand.a.abs().max(cand.b.abs()).max(cand.c.abs()).max(cand.d.abs()) > bound {
                break;
            }
            g = cand;
        }
        out.push(g);
    }
    out.truncate(count);
    out
}

/// Modularity multiplier `χ(γ) j(γ,z)^{ℓ/2}` (even `ℓ`) or
/// `χ(γ) J(γ,z)^ℓ` (odd `ℓ`).
pub fn modularity_multiplier(
    expansion: &FourierExpansion,
    gamma: &GammaElement,
    z: Complex64,
) -> Result<Complex64, FormsError> {
    let chi = expansion.character.eval(gamma.d) as f64;
    if expansion.ell.rem_euclid(2) == 0 {
        let half = expansion.ell / 2;
        let j = gamma.j_factor(z);
        Ok(chi * j.powi(half as i32))
    } else {
        let jt = theta_multiplier(&[gamma.a, gamma.b, gamma.c, gamma.d], z)?;
        Ok(chi * jt.powi(expansion.ell as i32))
    }
}

/// `|F(γz) - χ(γ)(multiplier)F(z)| / max(|multiplier·F(z)|, floor)`.
pub fn modularity_defect(
    expansion: &FourierExpansion,
    gamma: &GammaElement,
    z: Complex64,
) -> Result<f64, FormsError> {
    let gz = gamma.apply(z);
    if gz.im < expansion.y_min {
        return Err(FormsError::BelowYMin { y: gz.im, y_min: expansion.y_min });
    }
    let (fz, _) = expansion.evaluate(z)?;
    let (fgz, _) = expansion.evaluate(gz)?;
    let mult = modularity_multiplier(expansion, gamma, z)?;
    let reference = (mult * fz).norm().max(1e-10);
    Ok((fgz - mult * fz).norm() / reference)
}

/// Feasible `(γ, z)` pairs for modularity sampling: a mix of translations
/// and `c = ±N` elements, with `z` placed so that both `Im z` and
/// `Im γz` clear `y_min` (possible only for `|c| ≤ 1/y_min`).
pub fn sample_modularity_pairs(
    level: u64,
    count: usize,
    seed: u64,
    y_min: f64,
) -> Vec<(GammaElement, Complex64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = level as i64;
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let style = rng.gen_range(0..4);
        if style == 0 {
            // translation (possibly negated)
            let k = rng.gen_range(-4i64..=4);
            let flip = rng.gen_bool(0.5);
            let g = if flip {
                GammaElement { a: -1, b: -k, c: 0, d: -1 }
            } else {
                GammaElement { a: 1, b: k, c: 0, d: 1 }
            };
            let z = Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(0.4..1.4));
            out.push((g, z));
        } else {
            // c = ±N word: T^j L^{±1} T^k
            let j = rng.gen_range(-2i64..=2);
            let k = rng.gen_range(-2i64..=2);
            let sgn = if rng.gen_bool(0.5) { 1 } else { -1 };
            let t = GammaElement { a: 1, b: 1, c: 0, d: 1 };
            let mut tj = GammaElement { a: 1, b: j, c: 0, d: 1 };
            let l = GammaElement { a: 1, b: 0, c: sgn * n, d: 1 };
            tj = tj.mul(&l);
            let g = tj.mul(&GammaElement { a: 1, b: k, c: 0, d: 1 });
            let _ = t;
            let c = g.c as f64;
            if c == 0.0 {
                continue;
            }
            // balanced point: x near -d/c, y near 1/|c|
            let x = -(g.d as f64) / c + rng.gen_range(-0.35..0.35) / c.abs();
            let y = (1.0 / c.abs()) * rng.gen_range(0.85..1.15);
            let z = Complex64::new(x, y);
            let gz = g.apply(z);
            if z.im >= y_min && gz.im >= y_min {
                out.push((g, z));
            }
        }
    }
    out
}

/// Outcome of a constants fit.
#[derive(Debug, Clone)]
pub struct FitReport {
    /// fitted values, normalized to unit coefficient scale
    pub constants: Vec<Complex64>,
    /// scale-invariant residual of the homogeneous system
    pub residual: f64,
    /// smallest over largest eigenvalue of the normal matrix
    pub condition: f64,
}

/// Fit the unknown constants of an expansion from modularity equations.
///
/// Each pair `(γ, z)` yields the homogeneous linear equation
/// `s·[C(γz) - M C(z)] + Σ_j c_j · [g_j(γz) - M g_j(z)] = 0` in the
/// coefficient scale `s` and the constant terms `c_j`; the minimizer is
/// the smallest eigenvector of the normal matrix, normalized to `s = 1`.
pub fn fit_constants(
    expansion: &mut FourierExpansion,
    pairs: &[(GammaElement, Complex64)],
) -> Result<FitReport, FormsError> {
    let unknowns = match expansion.kind {
        FormKind::Maass => 3,
        FormKind::Holomorphic => 2,
    };
    if pairs.len() < 3 * unknowns {
        return Err(FormsError::IllConditioned(format!(
            "need at least {} equations, got {}",
            3 * unknowns,
            pairs.len()
        )));
    }
    let (pow_g, pow_d) = expansion.const_powers();
    let mut rows: Vec<Vec<Complex64>> = Vec::with_capacity(pairs.len());
    for (gamma, z) in pairs {
        let gz = gamma.apply(*z);
        if z.im < expansion.y_min || gz.im < expansion.y_min {
            return Err(FormsError::BelowYMin {
                y: z.im.min(gz.im),
                y_min: expansion.y_min,
            });
        }
        let mult = modularity_multiplier(expansion, gamma, *z)?;
        let c_part = expansion.coefficient_part(gz)? - mult * expansion.coefficient_part(*z)?;
        let g_part = Complex64::new(gz.im.powf(pow_g), 0.0) - mult * z.im.powf(pow_g);
        let mut row = vec![c_part, g_part];
        if unknowns == 3 {
            let d_part = Complex64::new(gz.im.powf(pow_d), 0.0) - mult * z.im.powf(pow_d);
            row.push(d_part);
        }
        // balance rows so that far-field samples do not dominate
        let weight = 1.0 / row.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt().max(1e-8);
        for v in row.iter_mut() {
            *v *= weight;
        }
        rows.push(row);
    }
    // normal matrix AᴴA
    let mut normal = DMatrix::<Complex<f64>>::zeros(unknowns, unknowns);
    for row in &rows {
        for i in 0..unknowns {
            for j in 0..unknowns {
                normal[(i, j)] += Complex::new(row[i].re, -row[i].im) * Complex::new(row[j].re, row[j].im);
            }
        }
    }
    let eig = normal.clone().symmetric_eigen();
    let mut min_idx = 0;
    let mut max_idx = 0;
    for i in 0..unknowns {
        if eig.eigenvalues[i] < eig.eigenvalues[min_idx] {
            min_idx = i;
        }
        if eig.eigenvalues[i] > eig.eigenvalues[max_idx] {
            max_idx = i;
        }
    }
    let lam_min = eig.eigenvalues[min_idx].max(0.0);
    let lam_max = eig.eigenvalues[max_idx].max(1e-300);
    let v = eig.eigenvectors.column(min_idx);
    let s = v[0];
    if s.norm() < 1e-8 {
        return Err(FormsError::IllConditioned(
            "coefficient scale is not identifiable from these samples".into(),
        ));
    }
    let mut constants = Vec::with_capacity(unknowns - 1);
    for i in 1..unknowns {
        let c = v[i] / s;
        constants.push(Complex64::new(c.re, c.im));
    }
    let trace: f64 = (0..unknowns).map(|i| eig.eigenvalues[i].max(0.0)).sum();
    let residual = (lam_min / trace.max(1e-300)).sqrt() * (unknowns as f64).sqrt();
    expansion.const_growth = ConstTerm::Fitted(constants[0]);
    if unknowns == 3 {
        expansion.const_decay = ConstTerm::Fitted(constants[1]);
    }
    Ok(FitReport { constants, residual, condition: lam_min / lam_max })
}

/// `|Δ_{ℓ/2}F(z) - Λ F(z)| / max(|F(z)|, floor)` with 5-point (fourth
/// order) central stencils on each axis.
pub fn laplacian_defect(
    expansion: &FourierExpansion,
    z: Complex64,
    h: f64,
) -> Result<f64, FormsError> {
    if expansion.kind != FormKind::Maass {
        return Err(FormsError::ParityViolation("laplacian defect needs a Maass build".into()));
    }
    if z.im - 2.0 * h < expansion.y_min {
        return Err(FormsError::BelowYMin { y: z.im - 2.0 * h, y_min: expansion.y_min });
    }
    let f = |zz: Complex64| -> Result<Complex64, FormsError> { Ok(expansion.evaluate(zz)?.0) };
    let fz = f(z)?;
    let fxp = f(z + Complex64::new(h, 0.0))?;
    let fxm = f(z - Complex64::new(h, 0.0))?;
    let fxp2 = f(z + Complex64::new(2.0 * h, 0.0))?;
    let fxm2 = f(z - Complex64::new(2.0 * h, 0.0))?;
    let fyp = f(z + Complex64::new(0.0, h))?;
    let fym = f(z - Complex64::new(0.0, h))?;
    let fyp2 = f(z + Complex64::new(0.0, 2.0 * h))?;
    let fym2 = f(z - Complex64::new(0.0, 2.0 * h))?;

    let d1 = |m2: Complex64, m1: Complex64, p1: Complex64, p2: Complex64| {
        (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h)
    };
    let d2 = |m2: Complex64, m1: Complex64, c: Complex64, p1: Complex64, p2: Complex64| {
        (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * h * h)
    };
    let fx = d1(fxm2, fxm, fxp, fxp2);
    let fy = d1(fym2, fym, fyp, fyp2);
    let fxx = d2(fxm2, fxm, fz, fxp, fxp2);
    let fyy = d2(fym2, fym, fz, fyp, fyp2);

    let y = z.im;
    let i = Complex64::new(0.0, 1.0);
    let lap = -y * y * (fxx + fyy)
        + i * (expansion.ell as f64) * y / 2.0 * (fx + i * fy);
    let lambda = expansion.eigenvalue().expect("maass kind");
    Ok((lap - lambda * fz).norm() / fz.norm().max(1e-10))
}

/// Resolve the one remaining relative normalization between a form and
/// its dual build: the global measure scales of `Y` and `Ŷ` are
/// independent positive volume constants, so `G` is determined by the
/// Fricke relation only up to one real positive factor.  Fits that factor
/// by least squares over `|F(-1/(Nz))(√N z)^{-ℓ/2} - s·G(z)|` and applies
/// it to `g` (coefficients and resolved constants alike).  All phase
/// content of the relation stays untouched and testable.
pub fn fit_dual_scale(
    f: &FourierExpansion,
    g: &mut FourierExpansion,
    zs: &[Complex64],
) -> Result<f64, FormsError> {
    let n = f.level as f64;
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for &z in zs {
        let w = -1.0 / (n * z);
        if w.im < f.y_min || z.im < g.y_min {
            return Err(FormsError::BelowYMin { y: w.im.min(z.im), y_min: f.y_min });
        }
        let (fw, _) = f.evaluate(w)?;
        let factor =
            ((-(f.ell as f64) / 2.0) * (Complex64::new(n.sqrt(), 0.0) * z).ln()).exp();
        let lhs = fw * factor;
        let (gz, _) = g.evaluate(z)?;
        num += (gz.conj() * lhs).re;
        den += gz.norm_sqr();
    }
    if den < 1e-280 || num <= 0.0 {
        return Err(FormsError::IllConditioned(
            "dual scale not identifiable from these Fricke samples".into(),
        ));
    }
    let s = num / den;
    for c in g.coeffs_plus.iter_mut().chain(g.coeffs_minus.iter_mut()) {
        *c *= s;
    }
    if let Some(v) = g.const_growth.value() {
        g.const_growth = ConstTerm::Fitted(v * s);
    }
    if let Some(v) = g.const_decay.value() {
        g.const_decay = ConstTerm::Fitted(v * s);
    }
    Ok(s)
}

/// `|F(-1/(Nz)) (√N z)^{-ℓ/2} - G(z)| / max(|G(z)|, floor)`.
pub fn fricke_defect(
    f: &FourierExpansion,
    g: &FourierExpansion,
    z: Complex64,
) -> Result<f64, FormsError> {
    let n = f.level as f64;
    let w = -1.0 / (n * z);
    if w.im < f.y_min {
        return Err(FormsError::BelowYMin { y: w.im, y_min: f.y_min });
    }
    let (fw, _) = f.evaluate(w)?;
    let (gz, _) = g.evaluate(z)?;
    let factor = ((-(f.ell as f64) / 2.0)
        * (Complex64::new(n.sqrt(), 0.0) * z).ln())
    .exp();
    Ok((fw * factor - gz).norm() / gz.norm().max(1e-10))
}
