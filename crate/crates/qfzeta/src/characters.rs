//! Dirichlet characters mod odd primes, quadratic residue symbols in
//! Shimura's convention, the theta multiplier `J(γ,z)`, Gauss sums, and
//! the twist bookkeeping `ψ*`, `C_{ℓ,r}`.
//!
//! Characters are realized as value tables built from a least primitive
//! root; the moduli in play are small odd primes, so nothing cleverer is
//! warranted.  Character values are machine doubles with `±1, ±i` snapped
//! to exact values.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CharacterError {
    #[error("denominator {0} is even")]
    EvenDenominator(i64),
    #[error("input {0} is even")]
    EvenInput(i64),
    #[error("{0} is not an odd prime")]
    NotOddPrime(u64),
    #[error("matrix is not in Gamma0(4)")]
    NotInGamma04,
    #[error("characters have different moduli: {0} vs {1}")]
    ModulusMismatch(u64, u64),
}

/// Extended Jacobi symbol `(c/d)` for odd `d`, following Shimura's
/// conventions for non-positive arguments:
///
/// * `d > 0`: the usual Jacobi symbol (completely multiplicative in `c`,
///   `(-1/d) = (-1)^{(d-1)/2}`), zero when `gcd(c,d) > 1`;
/// * `(c/-1) = 1` for `c >= 0` and `-1` for `c < 0`;
/// * `d < -1`: `(c/d) = (c/-1) * (c/|d|)`;
/// * `(0/±1) = 1`.
pub fn quad_residue_symbol(c: i64, d: i64) -> Result<i32, CharacterError> {
    if d % 2 == 0 {
        return Err(CharacterError::EvenDenominator(d));
    }
    if d == 1 {
        return Ok(1);
    }
    if d == -1 {
        return Ok(if c < 0 { -1 } else { 1 });
    }
    if d < 0 {
        let sign = if c < 0 { -1 } else { 1 };
        return Ok(sign * jacobi(c, -d as u64));
    }
    Ok(jacobi(c, d as u64))
}

/// Jacobi symbol `(a/n)` for odd `n > 0`; `a` arbitrary.
fn jacobi(a: i64, n: u64) -> i32 {
    debug_assert!(n % 2 == 1);
    let mut n = n;
    let mut a = a.rem_euclid(n as i64) as u64;
    let mut result = 1i32;
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if n % 8 == 3 || n % 8 == 5 {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            result = -result;
        }
        a %= n;
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// Kronecker symbol `(a/n)` for arbitrary integers.
pub fn kronecker_symbol(a: i64, n: i64) -> i32 {
    if n == 0 {
        return if a == 1 || a == -1 { 1 } else { 0 };
    }
    let a = a;
    let mut n = n;
    let mut result = 1i32;
    if n < 0 {
        n = -n;
        if a < 0 {
            result = -result;
        }
    }
    let mut twos = 0u32;
    while n % 2 == 0 {
        n /= 2;
        twos += 1;
    }
    if twos > 0 {
        if a % 2 == 0 {
            return 0;
        }
        let am8 = a.rem_euclid(8);
        let unit = if am8 == 1 || am8 == 7 { 1 } else { -1 };
        if twos % 2 == 1 {
            result *= unit;
        }
    }
    result * jacobi(a, n as u64)
}

/// `ε_d`: 1 when `d ≡ 1 (mod 4)`, `i` when `d ≡ 3 (mod 4)`.
pub fn epsilon_d(d: i64) -> Result<Complex64, CharacterError> {
    if d % 2 == 0 {
        return Err(CharacterError::EvenInput(d));
    }
    Ok(if d.rem_euclid(4) == 1 {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::new(0.0, 1.0)
    })
}

/// Theta multiplier `J(γ,z) = ε_d^{-1} (c/d) (cz+d)^{1/2}` for `γ ∈ Γ₀(4)`.
pub fn theta_multiplier(gamma: &[i64; 4], z: Complex64) -> Result<Complex64, CharacterError> {
    let [a, b, c, d] = *gamma;
    if a * d - b * c != 1 || c.rem_euclid(4) != 0 {
        return Err(CharacterError::NotInGamma04);
    }
    // det 1 with 4|c forces d odd
    let eps = epsilon_d(d)?;
    let sym = quad_residue_symbol(c, d)? as f64;
    let w = Complex64::new(c as f64, 0.0) * z + Complex64::new(d as f64, 0.0);
    Ok(eps.conj() * sym * w.sqrt())
}

/// `i^k` for any integer `k`.
pub fn i_pow(k: i64) -> Complex64 {
    match k.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// `C_{ℓ,r}`: 1 for even `ℓ`, `ε_r^ℓ` for odd `ℓ`.
pub fn c_lr(ell: i64, r: u64) -> Result<Complex64, CharacterError> {
    if ell % 2 == 0 {
        return Ok(Complex64::new(1.0, 0.0));
    }
    let eps = epsilon_d(r as i64)?;
    if eps.im == 0.0 {
        Ok(Complex64::new(1.0, 0.0))
    } else {
        Ok(i_pow(ell))
    }
}

/// A Dirichlet character mod an odd prime `r`, stored as a value table.
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletCharacter {
    r: u64,
    /// `values[k] = ψ(k)` for `0 <= k < r`; `values[0] = 0`.
    values: Vec<Complex64>,
    /// exponent along the generator character (0 = principal)
    index: u64,
    principal: bool,
}

impl DirichletCharacter {
    pub fn modulus(&self) -> u64 {
        self.r
    }

    pub fn is_principal(&self) -> bool {
        self.principal
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// Order of the character in the dual group.
    pub fn order(&self) -> u64 {
        if self.principal {
            return 1;
        }
        let g = gcd(self.index, self.r - 1);
        (self.r - 1) / g
    }

    /// True when the character is the quadratic residue character `(·/r)`.
    pub fn is_quadratic(&self) -> bool {
        !self.principal && 2 * self.index == self.r - 1
    }

    pub fn eval(&self, k: i64) -> Complex64 {
        let k = k.rem_euclid(self.r as i64) as usize;
        self.values[k]
    }

    pub fn conj(&self) -> DirichletCharacter {
        DirichletCharacter {
            r: self.r,
            values: self.values.iter().map(|v| v.conj()).collect(),
            index: if self.index == 0 { 0 } else { self.r - 1 - self.index },
            principal: self.principal,
        }
    }

    /// Pointwise product of two characters with the same modulus.
    pub fn mul(&self, other: &DirichletCharacter) -> Result<DirichletCharacter, CharacterError> {
        if self.r != other.r {
            return Err(CharacterError::ModulusMismatch(self.r, other.r));
        }
        let index = (self.index + other.index) % (self.r - 1);
        let mut values: Vec<Complex64> = (0..self.r as usize)
            .map(|k| snap(self.values[k] * other.values[k]))
            .collect();
        values[0] = Complex64::new(0.0, 0.0);
        Ok(DirichletCharacter { r: self.r, values, index, principal: index == 0 })
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn is_odd_prime(r: u64) -> bool {
    if r < 3 || r % 2 == 0 {
        return false;
    }
    let mut i = 3u64;
    while i * i <= r {
        if r % i == 0 {
            return false;
        }
        i += 2;
    }
    true
}

/// Least primitive root mod an odd prime `r`.
fn least_primitive_root(r: u64) -> u64 {
    let phi = r - 1;
    let mut prime_factors = Vec::new();
    let mut x = phi;
    let mut f = 2u64;
    while f * f <= x {
        if x % f == 0 {
            prime_factors.push(f);
            while x % f == 0 {
                x /= f;
            }
        }
        f += 1;
    }
    if x > 1 {
        prime_factors.push(x);
    }
    'cand: for g in 2..r {
        for &q in &prime_factors {
            if pow_mod(g, phi / q, r) == 1 {
                continue 'cand;
            }
        }
        return g;
    }
    unreachable!("every odd prime has a primitive root")
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    acc
}

fn snap(v: Complex64) -> Complex64 {
    const TOL: f64 = 1e-13;
    let re = if (v.re - v.re.round()).abs() < TOL { v.re.round() } else { v.re };
    let im = if (v.im - v.im.round()).abs() < TOL { v.im.round() } else { v.im };
    Complex64::new(re, im)
}

/// All `r-1` Dirichlet characters mod the odd prime `r`, principal first.
pub fn enumerate_characters(r: u64) -> Result<Vec<DirichletCharacter>, CharacterError> {
    if !is_odd_prime(r) {
        return Err(CharacterError::NotOddPrime(r));
    }
    let g = least_primitive_root(r);
    let phi = r - 1;
    // discrete logs: dlog[g^t mod r] = t
    let mut dlog = vec![0u64; r as usize];
    let mut cur = 1u64;
    for t in 0..phi {
        dlog[cur as usize] = t;
        cur = cur * g % r;
    }
    let mut out = Vec::with_capacity(phi as usize);
    for j in 0..phi {
        let mut values = vec![Complex64::new(0.0, 0.0); r as usize];
        for k in 1..r {
            let t = dlog[k as usize];
            let angle = 2.0 * std::f64::consts::PI * ((j as u128 * t as u128) % phi as u128) as f64
                / phi as f64;
            values[k as usize] = snap(Complex64::new(angle.cos(), angle.sin()));
        }
        out.push(DirichletCharacter { r, values, index: j, principal: j == 0 });
    }
    Ok(out)
}

/// The quadratic character `(·/r)` mod `r`.
pub fn quadratic_character(r: u64) -> Result<DirichletCharacter, CharacterError> {
    let chars = enumerate_characters(r)?;
    Ok(chars[((r - 1) / 2) as usize].clone())
}

/// Gauss sum `τ_ψ(n) = Σ_{m mod r, (m,r)=1} ψ(m) e^{2πimn/r}`.
pub fn gauss_sum(psi: &DirichletCharacter, n: i64) -> Complex64 {
    let r = psi.r;
    let mut acc = Complex64::new(0.0, 0.0);
    for m in 1..r {
        let phase = 2.0 * std::f64::consts::PI * ((m as i128 * n as i128).rem_euclid(r as i128)) as f64
            / r as f64;
        acc += psi.values[m as usize] * Complex64::new(phase.cos(), phase.sin());
    }
    acc
}

/// `τ_ψ = τ_ψ(1)`.
pub fn gauss_sum_1(psi: &DirichletCharacter) -> Complex64 {
    gauss_sum(psi, 1)
}

/// `ψ*(k) = conj(ψ(k)) (k/r)^ℓ`.
pub fn psi_star(psi: &DirichletCharacter, ell: i64) -> DirichletCharacter {
    let conj = psi.conj();
    if ell % 2 == 0 {
        conj
    } else {
        let phi = quadratic_character(psi.r).expect("modulus is an odd prime");
        conj.mul(&phi).expect("same modulus")
    }
}

/// Kronecker character attached to a quadratic field, or the principal
/// marker when the field is `Q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KroneckerCharacter {
    disc: Option<i64>,
}

impl KroneckerCharacter {
    pub fn principal() -> Self {
        KroneckerCharacter { disc: None }
    }

    pub fn from_disc(disc: i64) -> Self {
        KroneckerCharacter { disc: Some(disc) }
    }

    /// Character of `Q(√t)`: fundamental discriminant of the squarefree
    /// kernel of `t`, or the principal marker when `t` is a perfect square.
    pub fn from_radicand(t: i128) -> Self {
        assert!(t != 0, "radicand must be nonzero");
        let sign = t.signum();
        let mut t0 = t.abs();
        // strip square factors
        let mut f = 2i128;
        while f * f <= t0 {
            while t0 % (f * f) == 0 {
                t0 /= f * f;
            }
            f += 1;
        }
        let t0 = sign * t0;
        if t0 == 1 {
            return KroneckerCharacter { disc: None };
        }
        let disc = if t0.rem_euclid(4) == 1 { t0 } else { 4 * t0 };
        KroneckerCharacter { disc: Some(disc as i64) }
    }

    pub fn is_principal(&self) -> bool {
        self.disc.is_none()
    }

    pub fn disc(&self) -> Option<i64> {
        self.disc
    }

    /// `χ(n)`; the principal marker evaluates to 1 everywhere.
    pub fn eval(&self, n: i64) -> i32 {
        match self.disc {
            None => 1,
            Some(d) => kronecker_symbol(d, n),
        }
    }

    /// `χ(-1)` (1 for the principal marker).
    pub fn sign(&self) -> i32 {
        self.eval(-1)
    }
}
