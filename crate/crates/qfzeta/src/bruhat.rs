//! Schwartz-Bruhat functions on rational lattice points and their finite
//! Fourier transform.
//!
//! A function here has support in `(1/M)Z^m`, is periodic mod `L·Z^m`, and
//! is stored as a dense table over the grid `(Z/K)^m` with `K = L·M`
//! (index `x` represents the point `v = x/M`).  The transform
//!
//! ```text
//! φ̂(v*) = [V_Z : RV_Z]^{-1} Σ_{v mod R V_Z} φ(v) e[-⟨v,v*⟩]
//! ```
//!
//! swaps support denominator and period, and is computed by exact direct
//! summation, reorganized axis by axis (no FFT; the moduli are tiny).

use num_complex::Complex64;
use thiserror::Error;

use crate::characters::{c_lr, gauss_sum, psi_star, DirichletCharacter};
use crate::quadform::QuadraticForm;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BruhatError {
    #[error("character modulus {r} shares a factor with the level {level}")]
    ModulusDividesLevel { r: u64, level: u64 },
    #[error("table of {cells} cells exceeds the budget of {budget}")]
    TableOverflow { cells: u128, budget: u128 },
    #[error("period {0} is not a valid transform modulus here (need a multiple of {1})")]
    BadTransformModulus(u32, u32),
    #[error("form error: {0}")]
    Form(#[from] crate::quadform::QuadFormError),
}

const DEFAULT_CELL_BUDGET: u128 = 10_000_000;

/// Finitely supported periodic function on `(1/M)Z^m`.
#[derive(Debug, Clone)]
pub struct SchwartzBruhatFn {
    m: usize,
    denom: u32,
    period: u32,
    /// dense values over `(Z/K)^m`, `K = denom * period`, row-major in the
    /// mixed-radix index `x_0 + K x_1 + K^2 x_2 + ...`
    table: Vec<Complex64>,
}

impl SchwartzBruhatFn {
    pub fn new(m: usize, denom: u32, period: u32, table: Vec<Complex64>) -> Result<Self, BruhatError> {
        let k = (denom * period) as u128;
        let cells = k.pow(m as u32);
        if cells > DEFAULT_CELL_BUDGET {
            return Err(BruhatError::TableOverflow { cells, budget: DEFAULT_CELL_BUDGET });
        }
        assert_eq!(table.len() as u128, cells, "table size mismatch");
        Ok(SchwartzBruhatFn { m, denom, period, table })
    }

    pub fn dimension(&self) -> usize {
        self.m
    }

    /// Support denominator `M`.
    pub fn denom(&self) -> u32 {
        self.denom
    }

    /// Period `L`.
    pub fn period(&self) -> u32 {
        self.period
    }

    fn grid(&self) -> u32 {
        self.denom * self.period
    }

    /// Value at a rational point given as `(numerators, common denominator)`.
    pub fn eval_rational(&self, num: &[i64], den: i64) -> Complex64 {
        assert_eq!(num.len(), self.m);
        assert!(den > 0);
        let k = self.grid() as i64;
        let m_den = self.denom as i64;
        let mut idx = 0usize;
        let mut stride = 1usize;
        for &ni in num {
            // v_i = ni/den must lie in (1/M)Z: ni * M ≡ 0 mod den
            if (ni * m_den) % den != 0 {
                return Complex64::new(0.0, 0.0);
            }
            let xi = ((ni * m_den / den) % k + k) % k;
            idx += xi as usize * stride;
            stride *= k as usize;
        }
        self.table[idx]
    }

    /// Value at an integer lattice point.
    pub fn eval_integer(&self, v: &[i64]) -> Complex64 {
        self.eval_rational(v, 1)
    }

    /// Characteristic function of `Z^m`.
    pub fn phi0(m: usize) -> SchwartzBruhatFn {
        SchwartzBruhatFn { m, denom: 1, period: 1, table: vec![Complex64::new(1.0, 0.0)] }
    }

    /// `φ_{ψ,P}(v) = τ_ψ(P(v)) · ch_{Z^m}(v)` for an odd prime modulus `r`
    /// coprime to the level of the form.
    pub fn phi_psi_p(form: &QuadraticForm, psi: &DirichletCharacter) -> Result<SchwartzBruhatFn, BruhatError> {
        let r = psi.modulus();
        let level = form.level()?;
        if level % r == 0 {
            return Err(BruhatError::ModulusDividesLevel { r, level });
        }
        let m = form.degree();
        let cells = (r as u128).pow(m as u32);
        if cells > DEFAULT_CELL_BUDGET {
            return Err(BruhatError::TableOverflow { cells, budget: DEFAULT_CELL_BUDGET });
        }
        // Gauss sums depend on P(v) mod r only
        let tau: Vec<Complex64> = (0..r as i64).map(|j| gauss_sum(psi, j)).collect();
        let mut table = vec![Complex64::new(0.0, 0.0); cells as usize];
        let mut v = vec![0i64; m];
        for (idx, cell) in table.iter_mut().enumerate() {
            let mut t = idx;
            for vi in v.iter_mut() {
                *vi = (t % r as usize) as i64;
                t /= r as usize;
            }
            let p_mod_r = form.evaluate(&v).expect("dimension matches").rem_euclid(r as i128) as usize;
            *cell = tau[p_mod_r];
        }
        Ok(SchwartzBruhatFn { m, denom: 1, period: r as u32, table })
    }

    /// Finite Fourier transform; support denominator and period swap.
    pub fn fourier_transform(&self) -> Result<SchwartzBruhatFn, BruhatError> {
        let k = self.grid() as usize;
        let m = self.m;
        // out[x*] = period^{-m} Σ_x in[x] e[-⟨x,x*⟩/K], axis by axis
        let mut cur = self.table.clone();
        let root = |a: usize| {
            let angle = -2.0 * std::f64::consts::PI * a as f64 / k as f64;
            Complex64::new(angle.cos(), angle.sin())
        };
        let roots: Vec<Complex64> = (0..k).map(root).collect();
        let mut next = vec![Complex64::new(0.0, 0.0); cur.len()];
        for axis in 0..m {
            let stride = k.pow(axis as u32);
            for (idx, slot) in next.iter_mut().enumerate() {
                let xi_star = (idx / stride) % k;
                let base = idx - xi_star * stride;
                let mut acc = Complex64::new(0.0, 0.0);
                for x in 0..k {
                    acc += cur[base + x * stride] * roots[(x * xi_star) % k];
                }
                *slot = acc;
            }
            std::mem::swap(&mut cur, &mut next);
        }
        let scale = (self.period as f64).powi(-(m as i32));
        for c in cur.iter_mut() {
            *c *= scale;
        }
        Ok(SchwartzBruhatFn { m, denom: self.period, period: self.denom, table: cur })
    }

    /// Literal double-sum transform with an explicit modulus `R` (any
    /// multiple of the period is valid); used to check that the transform
    /// does not depend on the choice of `R`.
    pub fn fourier_transform_with_r(&self, r_choice: u32) -> Result<SchwartzBruhatFn, BruhatError> {
        if r_choice == 0 || r_choice % self.period != 0 {
            return Err(BruhatError::BadTransformModulus(r_choice, self.period));
        }
        let m = self.m;
        let k_out = self.grid() as usize;
        let out_period = self.denom;
        let out_denom = self.period;
        let rr = r_choice as usize;
        let side = rr * self.denom as usize; // x ranges over Z/(R*M)
        let cells_in: u128 = (side as u128).pow(m as u32);
        let cells_out: u128 = (k_out as u128).pow(m as u32);
        if cells_in.saturating_mul(cells_out) > 400_000_000 {
            return Err(BruhatError::TableOverflow {
                cells: cells_in.saturating_mul(cells_out),
                budget: 400_000_000,
            });
        }
        let norm = (r_choice as f64).powi(-(m as i32));
        let mut table = vec![Complex64::new(0.0, 0.0); cells_out as usize];
        let mut xs = vec![0i64; m];
        let mut x_star = vec![0i64; m];
        for (oidx, slot) in table.iter_mut().enumerate() {
            let mut t = oidx;
            for xi in x_star.iter_mut() {
                *xi = (t % k_out) as i64;
                t /= k_out;
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for iidx in 0..cells_in as usize {
                let mut t = iidx;
                for xi in xs.iter_mut() {
                    *xi = (t % side) as i64;
                    t /= side;
                }
                // v = x/M, v* = x*/L; phase = -⟨v,v*⟩ = -⟨x,x*⟩/(M L)
                let mut dot = 0i64;
                for i in 0..m {
                    dot += xs[i] * x_star[i];
                }
                let phase = -2.0 * std::f64::consts::PI
                    * (dot.rem_euclid(self.grid() as i64)) as f64
                    / self.grid() as f64;
                // φ(x/M): reduce x mod K
                let mut vidx = 0usize;
                let mut stride = 1usize;
                for &xi in xs.iter() {
                    vidx += (xi as usize % self.grid() as usize) * stride;
                    stride *= self.grid() as usize;
                }
                acc += self.table[vidx] * Complex64::new(phase.cos(), phase.sin());
            }
            *slot = acc * norm;
        }
        Ok(SchwartzBruhatFn { m, denom: out_denom, period: out_period, table })
    }

    /// `Σ |φ|^2` over one period cell of the support grid.
    pub fn norm_sq_over_cell(&self) -> f64 {
        self.table.iter().map(|c| c.norm_sqr()).sum()
    }

}

/// Maximum deviation from Stark's identity for the transform of
/// `φ_{ψ,P}`: compares `φ̂_{ψ,P}(r^{-1}v*)` with
/// `r^{-m/2} χ_K(r) C_{2p-m,r} ψ*(-N) τ_{ψ*}(P̂(v*))` over all `v*` mod `r`.
pub fn stark_defect(form: &QuadraticForm, psi: &DirichletCharacter) -> Result<f64, BruhatError> {
    let profile = form.validate()?;
    let r = psi.modulus();
    let m = form.degree();
    let phi = SchwartzBruhatFn::phi_psi_p(form, psi)?;
    let phi_hat = phi.fourier_transform()?;

    let chi_k_r = profile.k_char.eval(r as i64) as f64;
    let c_const = c_lr(2 * profile.p as i64 - m as i64, r).expect("odd prime modulus");
    let star = psi_star(psi, m as i64);
    let star_minus_n = star.eval(-(profile.level as i64));
    let tau_star: Vec<Complex64> = (0..r as i64).map(|j| gauss_sum(&star, j)).collect();
    let scale = (r as f64).powf(-(m as f64) / 2.0) * chi_k_r;

    let cells = (r as usize).pow(m as u32);
    let mut v_star = vec![0i64; m];
    let mut worst = 0.0f64;
    for idx in 0..cells {
        let mut t = idx;
        for vi in v_star.iter_mut() {
            *vi = (t % r as usize) as i64;
            t /= r as usize;
        }
        // LHS: φ̂ at v*/r (numerators v*, denominator r)
        let lhs = phi_hat.eval_rational(&v_star, r as i64);
        let p_hat = profile.dual.evaluate(&v_star).expect("dimension matches");
        let rhs = scale * c_const * star_minus_n * tau_star[p_hat.rem_euclid(r as i128) as usize];
        let defect = (lhs - rhs).norm();
        if defect > worst {
            worst = defect;
        }
    }
    Ok(worst)
}
