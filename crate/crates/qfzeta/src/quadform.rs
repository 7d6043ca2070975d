//! Exact invariants of non-degenerate half-integral symmetric matrices.
//!
//! A form is stored through its even Gram matrix `2Y` (integer entries,
//! even diagonal), so that `Y` itself is half-integral and `Y[v] = ᵗv Y v`
//! is an integer for every integer vector `v`.  All invariants — the
//! determinant `D = det(2Y)`, the signature `(p, m-p)`, the level `N`
//! (smallest positive integer with `N(2Y)^{-1}` integral and even on the
//! diagonal), the dual form `Ŷ = (N/4) Y^{-1}`, and the Kronecker field
//! discriminants — are computed in exact integer/rational arithmetic.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::characters::KroneckerCharacter;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QuadFormError {
    #[error("gram matrix is not square (row {row} has length {len}, expected {expected})")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("gram matrix is not symmetric at ({i},{j})")]
    NotSymmetric { i: usize, j: usize },
    #[error("diagonal entry {i} of 2Y is odd; Y is not half-integral")]
    OddDiagonal { i: usize },
    #[error("form is singular (det 2Y = 0)")]
    Singular,
    #[error("degree must be at least 2, got {0}")]
    DegreeTooSmall(usize),
    #[error("vector has dimension {got}, form has degree {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("operation requires an indefinite form of degree >= 5 (m={m}, p={p})")]
    NotZetaAdmissible { m: usize, p: usize },
}

/// A non-degenerate quadratic form `Y` of degree `m`, stored as `2Y`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QuadraticForm {
    gram2: Vec<i64>,
    m: usize,
}

/// Derived arithmetic profile of a form.
#[derive(Debug, Clone)]
pub struct FormProfile {
    /// `det(2Y)`.
    pub d: i128,
    /// Number of positive eigenvalues of `Y`.
    pub p: usize,
    /// Degree.
    pub m: usize,
    /// Level `N` of `2Y`.
    pub level: u64,
    /// The dual form `Ŷ = (N/4) Y^{-1}`, itself half-integral.
    pub dual: QuadraticForm,
    /// Kronecker character of `K` (principal marker when `K = Q`).
    pub k_char: KroneckerCharacter,
    /// Kronecker character of `K_N` (differs from `k_char` only for odd `m`).
    pub k_n_char: KroneckerCharacter,
}

impl QuadraticForm {
    /// Build a form from the integer rows of `2Y`.
    pub fn from_gram2_rows(rows: &[Vec<i64>]) -> Result<Self, QuadFormError> {
        let m = rows.len();
        if m < 2 {
            return Err(QuadFormError::DegreeTooSmall(m));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(QuadFormError::NotSquare { row: i, len: row.len(), expected: m });
            }
        }
        let mut gram2 = vec![0i64; m * m];
        for i in 0..m {
            for j in 0..m {
                gram2[i * m + j] = rows[i][j];
            }
        }
        let form = QuadraticForm { gram2, m };
        form.check_shape()?;
        Ok(form)
    }

    /// Diagonal `2Y = diag(d_1, ..., d_m)`.
    pub fn diagonal_gram2(diag: &[i64]) -> Result<Self, QuadFormError> {
        let m = diag.len();
        let mut rows = vec![vec![0i64; m]; m];
        for i in 0..m {
            rows[i][i] = diag[i];
        }
        Self::from_gram2_rows(&rows)
    }

    /// Direct sum of two forms (block diagonal `2Y`).
    pub fn direct_sum(&self, other: &QuadraticForm) -> QuadraticForm {
        let m = self.m + other.m;
        let mut gram2 = vec![0i64; m * m];
        for i in 0..self.m {
            for j in 0..self.m {
                gram2[i * m + j] = self.gram2[i * self.m + j];
            }
        }
        for i in 0..other.m {
            for j in 0..other.m {
                gram2[(self.m + i) * m + (self.m + j)] = other.gram2[i * other.m + j];
            }
        }
        QuadraticForm { gram2, m }
    }

    fn check_shape(&self) -> Result<(), QuadFormError> {
        let m = self.m;
        for i in 0..m {
            for j in (i + 1)..m {
                if self.gram2[i * m + j] != self.gram2[j * m + i] {
                    return Err(QuadFormError::NotSymmetric { i, j });
                }
            }
            if self.gram2[i * m + i].rem_euclid(2) != 0 {
                return Err(QuadFormError::OddDiagonal { i });
            }
        }
        Ok(())
    }

    pub fn degree(&self) -> usize {
        self.m
    }

    /// Entry of `2Y`.
    pub fn gram2(&self, i: usize, j: usize) -> i64 {
        self.gram2[i * self.m + j]
    }

    pub fn gram2_rows(&self) -> Vec<Vec<i64>> {
        (0..self.m).map(|i| (0..self.m).map(|j| self.gram2(i, j)).collect()).collect()
    }

    /// `P(v) = Y[v] = ᵗv Y v`, always an integer for half-integral `Y`.
    pub fn evaluate(&self, v: &[i64]) -> Result<i128, QuadFormError> {
        if v.len() != self.m {
            return Err(QuadFormError::DimensionMismatch { got: v.len(), expected: self.m });
        }
        let mut acc: i128 = 0;
        for i in 0..self.m {
            for j in 0..self.m {
                acc += self.gram2(i, j) as i128 * v[i] as i128 * v[j] as i128;
            }
        }
        // ᵗv(2Y)v is even because the diagonal of 2Y is even.
        debug_assert_eq!(acc % 2, 0);
        Ok(acc / 2)
    }

    /// `det(2Y)` by fraction-free Gaussian elimination.
    pub fn det_gram2(&self) -> i128 {
        let m = self.m;
        let mut a: Vec<i128> = self.gram2.iter().map(|&x| x as i128).collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..m {
            // pivot
            if a[k * m + k] == 0 {
                let mut found = false;
                for r in (k + 1)..m {
                    if a[r * m + k] != 0 {
                        for c in 0..m {
                            a.swap(r * m + c, k * m + c);
                        }
                        sign = -sign;
                        found = true;
                        break;
                    }
                }
                if !found {
                    return 0;
                }
            }
            for i in (k + 1)..m {
                for j in (k + 1)..m {
                    a[i * m + j] = (a[i * m + j] * a[k * m + k] - a[i * m + k] * a[k * m + j]) / prev;
                }
                a[i * m + k] = 0;
            }
            prev = a[k * m + k];
        }
        sign * a[(m - 1) * m + (m - 1)]
    }

    /// Signature `(p, m-p)` of `Y` by Sylvester inertia over exact rationals.
    pub fn signature(&self) -> Result<(usize, usize), QuadFormError> {
        if self.det_gram2() == 0 {
            return Err(QuadFormError::Singular);
        }
        let m = self.m;
        let big = |x: i64| BigRational::from_integer(BigInt::from(x));
        let mut a: Vec<BigRational> = self.gram2.iter().map(|&x| big(x)).collect();
        let mut active: Vec<usize> = (0..m).collect();
        let mut pos = 0usize;
        let mut neg = 0usize;
        while let Some(&first) = active.first() {
            // prefer a nonzero diagonal pivot
            let diag_pivot = active.iter().copied().find(|&i| !a[i * m + i].is_zero());
            let piv = match diag_pivot {
                Some(i) => i,
                None => {
                    // all remaining diagonal entries vanish; mix in a row to
                    // create one (possible since the block is nonsingular)
                    let mut pair = None;
                    'outer: for (ai, &i) in active.iter().enumerate() {
                        for &j in active.iter().skip(ai + 1) {
                            if !a[i * m + j].is_zero() {
                                pair = Some((i, j));
                                break 'outer;
                            }
                        }
                    }
                    let (i, j) = pair.ok_or(QuadFormError::Singular)?;
                    // congruence e_i -> e_i + e_j : row/col i += row/col j
                    for c in 0..m {
                        let t = a[j * m + c].clone();
                        a[i * m + c] += t;
                    }
                    for r in 0..m {
                        let t = a[r * m + j].clone();
                        a[r * m + i] += t;
                    }
                    i
                }
            };
            let _ = first;
            let d = a[piv * m + piv].clone();
            if d.is_positive() {
                pos += 1;
            } else {
                neg += 1;
            }
            active.retain(|&i| i != piv);
            for &i in &active {
                let f = &a[i * m + piv] / &d;
                if f.is_zero() {
                    continue;
                }
                for &j in active.iter() {
                    let t = &f * &a[piv * m + j];
                    a[i * m + j] = &a[i * m + j] - t;
                }
            }
            for &i in &active {
                a[i * m + piv] = BigRational::zero();
                a[piv * m + i] = BigRational::zero();
            }
        }
        Ok((pos, neg))
    }

    /// Integer adjugate of `2Y`, so that `adj(2Y) = det(2Y) * (2Y)^{-1}`.
    fn adjugate_gram2(&self) -> Vec<i128> {
        let m = self.m;
        let mut adj = vec![0i128; m * m];
        for i in 0..m {
            for j in 0..m {
                // cofactor C_{ji}
                let mut minor = Vec::with_capacity((m - 1) * (m - 1));
                for r in 0..m {
                    if r == j {
                        continue;
                    }
                    for c in 0..m {
                        if c == i {
                            continue;
                        }
                        minor.push(self.gram2(r, c) as i128);
                    }
                }
                let det = det_i128(&minor, m - 1);
                let sgn = if (i + j) % 2 == 0 { 1 } else { -1 };
                adj[i * m + j] = sgn * det;
            }
        }
        adj
    }

    /// The level `N`: smallest positive integer with `N(2Y)^{-1}` integral
    /// and even on the diagonal.  Searches the divisors of `2|D|`.
    pub fn level(&self) -> Result<u64, QuadFormError> {
        let d = self.det_gram2();
        if d == 0 {
            return Err(QuadFormError::Singular);
        }
        let adj = self.adjugate_gram2();
        let target = 2u128 * d.unsigned_abs();
        let mut divisors = divisors_u128(target);
        divisors.sort_unstable();
        for n in divisors {
            if self.level_candidate_ok(n as i128, &adj, d) {
                return Ok(n as u64);
            }
        }
        // The divisor-search invariant N | 2|D| has no stated proof in the
        // source material; fall back to an unbounded search if it ever fails.
        let mut n = 1i128;
        loop {
            if self.level_candidate_ok(n, &adj, d) {
                return Ok(n as u64);
            }
            n += 1;
        }
    }

    fn level_candidate_ok(&self, n: i128, adj: &[i128], d: i128) -> bool {
        let m = self.m;
        for i in 0..m {
            for j in 0..m {
                let num = n * adj[i * m + j];
                if num % d != 0 {
                    return false;
                }
                if i == j && (num / d) % 2 != 0 {
                    return false;
                }
            }
        }
        true
    }

    /// The dual form `Ŷ = (N/4) Y^{-1}`, i.e. `2Ŷ = N (2Y)^{-1}`.
    pub fn dual_form(&self) -> Result<QuadraticForm, QuadFormError> {
        let d = self.det_gram2();
        if d == 0 {
            return Err(QuadFormError::Singular);
        }
        let n = self.level()? as i128;
        let adj = self.adjugate_gram2();
        let m = self.m;
        let mut rows = vec![vec![0i64; m]; m];
        for i in 0..m {
            for j in 0..m {
                let num = n * adj[i * m + j];
                debug_assert_eq!(num % d, 0);
                rows[i][j] = (num / d) as i64;
            }
        }
        QuadraticForm::from_gram2_rows(&rows)
    }

    /// Kronecker characters of `K` and `K_N`.
    ///
    /// `K = Q(√((-1)^{m/2} D))` for even `m` and `Q(√(2|D|))` for odd `m`;
    /// `K_N` replaces `2|D|` by `2|D|N` in the odd case.
    pub fn field_characters(&self) -> Result<(KroneckerCharacter, KroneckerCharacter), QuadFormError> {
        let d = self.det_gram2();
        if d == 0 {
            return Err(QuadFormError::Singular);
        }
        let n = self.level()? as i128;
        let (rad_k, rad_kn) = if self.m % 2 == 0 {
            let sign = if (self.m / 2) % 2 == 0 { 1 } else { -1 };
            (sign * d, sign * d)
        } else {
            (2 * d.abs(), 2 * d.abs() * n)
        };
        Ok((
            KroneckerCharacter::from_radicand(rad_k),
            KroneckerCharacter::from_radicand(rad_kn),
        ))
    }

    /// Full validation: all invariants computed and cross-checked.
    pub fn validate(&self) -> Result<FormProfile, QuadFormError> {
        self.check_shape()?;
        let d = self.det_gram2();
        if d == 0 {
            return Err(QuadFormError::Singular);
        }
        let (p, _q) = self.signature()?;
        let level = self.level()?;
        let dual = self.dual_form()?;
        let (k_char, k_n_char) = self.field_characters()?;
        Ok(FormProfile { d, p, m: self.m, level, dual, k_char, k_n_char })
    }

    /// Validation for zeta-level use: additionally `m >= 5` and indefinite.
    pub fn validate_zeta(&self) -> Result<FormProfile, QuadFormError> {
        let profile = self.validate()?;
        if profile.m < 5 || profile.p == 0 || profile.p == profile.m {
            return Err(QuadFormError::NotZetaAdmissible { m: profile.m, p: profile.p });
        }
        Ok(profile)
    }

    /// Stable hex digest of the Gram data, used as a cache key.
    pub fn content_hash(&self) -> String {
        // FNV-1a over the canonical serialization; collisions across the
        // handful of forms in one cache are not a concern.
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        eat(self.m as u64);
        for &g in &self.gram2 {
            eat(g as u64);
        }
        format!("{h:016x}")
    }
}

fn det_i128(a: &[i128], n: usize) -> i128 {
    if n == 0 {
        return 1;
    }
    let mut a = a.to_vec();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k * n + k] == 0 {
            let mut found = false;
            for r in (k + 1)..n {
                if a[r * n + k] != 0 {
                    for c in 0..n {
                        a.swap(r * n + c, k * n + c);
                    }
                    sign = -sign;
                    found = true;
                    break;
                }
            }
            if !found {
                return 0;
            }
        }
        for i in (k + 1)..n {
            for j in (k + 1)..n {
                a[i * n + j] = (a[i * n + j] * a[k * n + k] - a[i * n + k] * a[k * n + j]) / prev;
            }
            a[i * n + k] = 0;
        }
        prev = a[k * n + k];
    }
    sign * a[(n - 1) * n + (n - 1)]
}

fn divisors_u128(x: u128) -> Vec<u128> {
    let mut out = Vec::new();
    let mut i = 1u128;
    while i * i <= x {
        if x % i == 0 {
            out.push(i);
            if i != x / i {
                out.push(x / i);
            }
        }
        i += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn y5() -> QuadraticForm {
        QuadraticForm::diagonal_gram2(&[2, 2, 2, 2, -2]).unwrap()
    }

    #[test]
    fn profile_of_reference_form() {
        let f = y5();
        let p = f.validate().unwrap();
        assert_eq!(p.m, 5);
        assert_eq!(p.p, 4);
        assert_eq!(p.d, -32);
        assert_eq!(p.level, 4);
    }

    #[test]
    fn binary_form_profile() {
        let f = QuadraticForm::from_gram2_rows(&[vec![2, 1], vec![1, 2]]).unwrap();
        let p = f.validate().unwrap();
        assert_eq!(p.d, 3);
        assert_eq!(p.p, 2);
        assert_eq!(p.level, 3);
        assert_eq!(p.dual.gram2_rows(), vec![vec![2, -1], vec![-1, 2]]);
    }

    #[test]
    fn odd_diagonal_rejected() {
        let e = QuadraticForm::diagonal_gram2(&[1, 2]).unwrap_err();
        assert!(matches!(e, QuadFormError::OddDiagonal { i: 0 }));
    }

    #[test]
    fn asymmetric_rejected() {
        let e = QuadraticForm::from_gram2_rows(&[vec![2, 1], vec![0, 2]]).unwrap_err();
        assert!(matches!(e, QuadFormError::NotSymmetric { .. }));
    }

    #[test]
    fn evaluate_examples() {
        let f = y5();
        assert_eq!(f.evaluate(&[1, 0, 0, 0, 2]).unwrap(), -3);
        assert_eq!(f.evaluate(&[1, 1, 1, 1, 1]).unwrap(), 3);
        assert_eq!(f.evaluate(&[0, 0, 0, 0, 0]).unwrap(), 0);
        assert!(matches!(
            f.evaluate(&[1, 2]),
            Err(QuadFormError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn signature_examples() {
        assert_eq!(y5().signature().unwrap(), (4, 1));
        let f = QuadraticForm::diagonal_gram2(&[2, 2, -2, -2, -2, -2]).unwrap();
        assert_eq!(f.signature().unwrap(), (2, 4));
        // hyperbolic plane: zero diagonal forces the mixing step
        let h = QuadraticForm::from_gram2_rows(&[vec![0, 1], vec![1, 0]]).unwrap();
        assert_eq!(h.signature().unwrap(), (1, 1));
    }

    #[test]
    fn level_by_bruteforce_oracle() {
        // independent oracle: smallest N from 1 upward
        let brute = |f: &QuadraticForm| -> u64 {
            let d = f.det_gram2();
            let adj = f.adjugate_gram2();
            (1i128..)
                .find(|&n| f.level_candidate_ok(n, &adj, d))
                .unwrap() as u64
        };
        let cases = [
            QuadraticForm::diagonal_gram2(&[2, 2, 2, 2, -2]).unwrap(),
            QuadraticForm::from_gram2_rows(&[vec![2, 1], vec![1, 2]]).unwrap(),
            QuadraticForm::from_gram2_rows(&[vec![0, 1], vec![1, 0]]).unwrap(),
            QuadraticForm::diagonal_gram2(&[2, 2, -2, -2, -2, -2]).unwrap(),
            QuadraticForm::from_gram2_rows(&[vec![2, 1], vec![1, 2]])
                .unwrap()
                .direct_sum(&QuadraticForm::diagonal_gram2(&[2, 2, -2]).unwrap()),
        ];
        let expected = [4u64, 3, 1, 4, 12];
        for (f, want) in cases.iter().zip(expected) {
            assert_eq!(f.level().unwrap(), want);
            assert_eq!(brute(f), want);
        }
    }

    #[test]
    fn dual_form_examples() {
        let f = y5();
        let dual = f.dual_form().unwrap();
        assert_eq!(dual, f); // self-dual at N = 4

        let g = QuadraticForm::from_gram2_rows(&[vec![2, 1], vec![1, 2]]).unwrap();
        let gd = g.dual_form().unwrap();
        assert_eq!(gd.gram2_rows(), vec![vec![2, -1], vec![-1, 2]]);
        // evaluate(dual, v) = N * P*(v) = N/4 * Y^{-1}[v]; double dual returns
        // to the original for these levels
        assert_eq!(gd.dual_form().unwrap(), g);
    }

    #[test]
    fn dual_relation_exact() {
        // evaluate(dual, v) * 4|D| == N * (adj-based quadratic form) for all v
        let f = QuadraticForm::from_gram2_rows(&[vec![2, 1], vec![1, 2]])
            .unwrap()
            .direct_sum(&QuadraticForm::diagonal_gram2(&[2, 2, -2]).unwrap());
        let profile = f.validate().unwrap();
        let n = profile.level as i128;
        let d = profile.d;
        let adj = f.adjugate_gram2();
        let m = f.degree();
        let vs: Vec<Vec<i64>> = vec![
            vec![1, 0, 0, 0, 0],
            vec![1, -2, 3, 0, 1],
            vec![0, 1, 1, 1, 1],
            vec![2, 1, 0, -1, 3],
        ];
        for v in vs {
            // N * P*(v) = N * (1/4) Y^{-1}[v] = N * ᵗv adj(2Y) v / (2 det)
            let mut q: i128 = 0;
            for i in 0..m {
                for j in 0..m {
                    q += adj[i * m + j] * v[i] as i128 * v[j] as i128;
                }
            }
            let lhs = profile.dual.evaluate(&v).unwrap() * 2 * d;
            assert_eq!(lhs, n * q);
        }
    }

    #[test]
    fn field_character_examples() {
        let f6 = QuadraticForm::diagonal_gram2(&[2, 2, -2, -2, -2, -2]).unwrap();
        assert_eq!(f6.det_gram2(), 64);
        let (k, kn) = f6.field_characters().unwrap();
        assert_eq!(k.disc(), Some(-4));
        assert_eq!(kn.disc(), Some(-4));

        let f5 = y5();
        let (k, kn) = f5.field_characters().unwrap();
        assert!(k.is_principal()); // Q(sqrt(64)) = Q
        assert!(kn.is_principal()); // Q(sqrt(256)) = Q
    }

    #[test]
    fn zeta_validation_gate() {
        let small = QuadraticForm::from_gram2_rows(&[vec![2, 1], vec![1, 2]]).unwrap();
        assert!(matches!(
            small.validate_zeta(),
            Err(QuadFormError::NotZetaAdmissible { .. })
        ));
        let definite = QuadraticForm::diagonal_gram2(&[2, 2, 2, 2, 2]).unwrap();
        assert!(matches!(
            definite.validate_zeta(),
            Err(QuadFormError::NotZetaAdmissible { .. })
        ));
        assert!(y5().validate_zeta().is_ok());
    }

    #[test]
    fn signature_invariant_under_unimodular_change() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let f = y5();
        let m = f.degree();
        for _ in 0..20 {
            // random product of elementary matrices
            let mut u = vec![0i64; m * m];
            for i in 0..m {
                u[i * m + i] = 1;
            }
            for _ in 0..6 {
                let i = rng.gen_range(0..m);
                let mut j = rng.gen_range(0..m);
                while j == i {
                    j = rng.gen_range(0..m);
                }
                let c = rng.gen_range(-2i64..=2);
                // row_i += c * row_j
                for k in 0..m {
                    u[i * m + k] += c * u[j * m + k];
                }
            }
            // conjugate: ᵗU (2Y) U
            let mut t = vec![0i64; m * m];
            for i in 0..m {
                for j in 0..m {
                    let mut acc = 0i64;
                    for k in 0..m {
                        acc += f.gram2(i, k) * u[k * m + j];
                    }
                    t[i * m + j] = acc;
                }
            }
            let mut rows = vec![vec![0i64; m]; m];
            for i in 0..m {
                for j in 0..m {
                    let mut acc = 0i64;
                    for k in 0..m {
                        acc += u[k * m + i] * t[k * m + j];
                    }
                    rows[i][j] = acc;
                }
            }
            let g = QuadraticForm::from_gram2_rows(&rows).unwrap();
            assert_eq!(g.signature().unwrap(), f.signature().unwrap());
        }
    }
}
