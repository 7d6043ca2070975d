//! p-adic representation densities by stabilized counting, and the
//! Euler-product approximation of the measures of representation `M(P;n)`.
//!
//! The local density at `p` is `α_p(n) = count_k / p^{k(m-1)}` with
//! `count_k = #{v mod p^k : Y[v] ≡ n mod p^k}`, where `k` is raised until
//! two consecutive values agree exactly as rationals.  For `p ∤ 2nD` the
//! first exponent already stabilizes.
//!
//! The product `|n|^{m/2-1} ∏_{p ≤ B} α_p(n)` is a *relative* measure:
//! it equals `M(P;n)` up to one global constant independent of `n` (the
//! archimedean volume normalization, absorbed downstream into fitted
//! constants).

pub mod cache;
pub mod counting;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use thiserror::Error;

pub use cache::{CacheKey, CacheStats, CacheVerifyReport, DensityCache};
pub use counting::{count_enumerative, count_reduced, enumerative_cost, reduced_cost};

use crate::quadform::QuadraticForm;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DensityError {
    #[error("counting cost {cost} exceeds budget {budget}")]
    BudgetExceeded { cost: u128, budget: u128 },
    #[error("density at p={p} did not stabilize within k_max={k_max}")]
    NotStabilized { p: u64, k_max: u32 },
    #[error("n must be nonzero")]
    ZeroTarget,
    #[error("working precision exhausted during block reduction")]
    PrecisionExhausted,
    #[error("form error: {0}")]
    Form(#[from] crate::quadform::QuadFormError),
    #[error("cache i/o: {0}")]
    CacheIo(String),
}

/// Tuning knobs for density and measure computation.
#[derive(Debug, Clone)]
pub struct DensityParams {
    pub prime_bound: u64,
    pub k_max: u32,
    /// cost budget for a single count (reduced-route cost model)
    pub budget: u128,
    /// below this many vectors the enumerative route is used directly
    pub brute_budget: u128,
}

impl Default for DensityParams {
    fn default() -> Self {
        DensityParams { prime_bound: 50, k_max: 6, budget: 2_000_000_000, brute_budget: 500_000 }
    }
}

/// One stabilized local density.
#[derive(Debug, Clone)]
pub struct DensityRecord {
    pub p: u64,
    /// exponent at which the value is reported
    pub k: u32,
    /// `#{v mod p^k : Y[v] ≡ n mod p^k}`
    pub count: u128,
    /// `count / p^{k(m-1)}`
    pub alpha: BigRational,
    pub stabilized: bool,
}

/// Relative measure of one target value `n`.
#[derive(Debug, Clone)]
pub struct MeasureEntry {
    /// signed target value
    pub n: i128,
    /// `|n|^{m/2-1} ∏ α_p`
    pub value: f64,
    pub records: Vec<DensityRecord>,
}

/// Table of relative measures `n ↦ M(P; sign·n)`, `n = 1..n_max`.
#[derive(Debug, Clone)]
pub struct MeasureTable {
    pub form_hash: String,
    pub sign: i8,
    pub prime_bound: u64,
    pub entries: Vec<MeasureEntry>,
}

impl MeasureTable {
    /// Relative measure at `n >= 1`.
    pub fn value(&self, n: usize) -> Option<f64> {
        self.entries.get(n - 1).map(|e| e.value)
    }
}

/// Exact solution count, choosing the enumerative route for small state
/// spaces and the block-reduced route otherwise.
pub fn count_solutions(
    form: &QuadraticForm,
    n: i128,
    p: u64,
    k: u32,
    params: &DensityParams,
) -> Result<u128, DensityError> {
    if n == 0 {
        return Err(DensityError::ZeroTarget);
    }
    if enumerative_cost(form.degree(), p, k) <= params.brute_budget {
        count_enumerative(form, n, p, k, params.brute_budget)
    } else {
        count_reduced(form, n, p, k, params.budget)
    }
}

fn count_cached(
    form: &QuadraticForm,
    form_hash: &str,
    n: i128,
    p: u64,
    k: u32,
    params: &DensityParams,
    cache: &mut DensityCache,
) -> Result<u128, DensityError> {
    let key = CacheKey { form_hash: form_hash.to_string(), n, p, k };
    if let Some(c) = cache.get(&key) {
        return Ok(c);
    }
    let c = count_solutions(form, n, p, k, params)?;
    cache.put(key, c).map_err(|e| DensityError::CacheIo(e.to_string()))?;
    Ok(c)
}

fn alpha_of(count: u128, p: u64, k: u32, m: usize) -> BigRational {
    let num = BigInt::from(count);
    let den = BigInt::from(p).pow(k * (m as u32 - 1));
    BigRational::new(num, den)
}

/// Stabilized local density `α_p(n)`.
pub fn local_density(
    form: &QuadraticForm,
    n: i128,
    p: u64,
    params: &DensityParams,
    cache: &mut DensityCache,
) -> Result<DensityRecord, DensityError> {
    if n == 0 {
        return Err(DensityError::ZeroTarget);
    }
    let m = form.degree();
    let hash = form.content_hash();
    let mut prev: Option<(u32, u128, BigRational)> = None;
    for k in 1..=(params.k_max + 1) {
        let count = count_cached(form, &hash, n, p, k, params, cache)?;
        let alpha = alpha_of(count, p, k, m);
        if let Some((pk, pcount, palpha)) = prev {
            if palpha == alpha {
                return Ok(DensityRecord { p, k: pk, count: pcount, alpha: palpha, stabilized: true });
            }
        }
        prev = Some((k, count, alpha));
    }
    let (k, count, alpha) = prev.expect("at least one exponent computed");
    Ok(DensityRecord { p, k, count, alpha, stabilized: false })
}

/// `local_density`, erroring out when stabilization fails within `k_max`.
pub fn local_density_strict(
    form: &QuadraticForm,
    n: i128,
    p: u64,
    params: &DensityParams,
    cache: &mut DensityCache,
) -> Result<DensityRecord, DensityError> {
    let rec = local_density(form, n, p, params, cache)?;
    if !rec.stabilized {
        return Err(DensityError::NotStabilized { p, k_max: params.k_max });
    }
    Ok(rec)
}

pub fn primes_up_to(bound: u64) -> Vec<u64> {
    let mut sieve = vec![true; (bound + 1) as usize];
    let mut out = Vec::new();
    for p in 2..=bound {
        if sieve[p as usize] {
            out.push(p);
            let mut q = p * p;
            while q <= bound {
                sieve[q as usize] = false;
                q += p;
            }
        }
    }
    out
}

/// Whether stabilization at `k = 1` is guaranteed (`p ∤ 2nD`).
pub fn is_good_prime(form: &QuadraticForm, n: i128, p: u64) -> bool {
    let d = form.det_gram2();
    (2 * n * d).rem_euclid(p as i128) != 0
}

/// Relative measure `|n|^{m/2-1} ∏_{p ≤ B} α_p(n)` with per-prime records.
pub fn measure_relative(
    form: &QuadraticForm,
    n: i128,
    params: &DensityParams,
    cache: &mut DensityCache,
) -> Result<MeasureEntry, DensityError> {
    if n == 0 {
        return Err(DensityError::ZeroTarget);
    }
    let m = form.degree();
    let mut records = Vec::new();
    let mut product = (n.unsigned_abs() as f64).powf(m as f64 / 2.0 - 1.0);
    for p in primes_up_to(params.prime_bound) {
        let rec = local_density_strict(form, n, p, params, cache)?;
        product *= rec.alpha.to_f64().expect("alpha is a modest rational");
        records.push(rec);
    }
    Ok(MeasureEntry { n, value: product, records })
}

/// Table of relative measures for `P(v) = sign·n`, `n = 1..n_max`.
pub fn measure_table(
    form: &QuadraticForm,
    sign: i8,
    n_max: usize,
    params: &DensityParams,
    cache: &mut DensityCache,
) -> Result<MeasureTable, DensityError> {
    assert!(sign == 1 || sign == -1);
    let mut entries = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        entries.push(measure_relative(form, sign as i128 * n as i128, params, cache)?);
    }
    Ok(MeasureTable {
        form_hash: form.content_hash(),
        sign,
        prime_bound: params.prime_bound,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn y5() -> QuadraticForm {
        QuadraticForm::diagonal_gram2(&[2, 2, 2, 2, -2]).unwrap()
    }

    #[test]
    fn density_spec_values() {
        let f = y5();
        let params = DensityParams::default();
        let mut cache = DensityCache::in_memory();
        let rec = local_density(&f, 1, 3, &params, &mut cache).unwrap();
        assert!(rec.stabilized);
        assert_eq!(rec.k, 1);
        assert_eq!(rec.count, 72);
        assert_eq!(rec.alpha, BigRational::new(8.into(), 9.into()));

        let rec = local_density(&f, 1, 5, &params, &mut cache).unwrap();
        assert_eq!(rec.alpha, BigRational::new(26.into(), 25.into()));
    }

    #[test]
    fn good_primes_stabilize_at_one() {
        let f = y5(); // D = -32
        let params = DensityParams::default();
        let mut cache = DensityCache::in_memory();
        for &p in &[3u64, 5, 7, 11, 13] {
            for n in [1i128, 2, 7, -3] {
                if !is_good_prime(&f, n, p) {
                    continue;
                }
                let a1 = alpha_of(count_solutions(&f, n, p, 1, &params).unwrap(), p, 1, 5);
                let a2 = alpha_of(count_solutions(&f, n, p, 2, &params).unwrap(), p, 2, 5);
                assert_eq!(a1, a2, "p={p} n={n}");
                let rec = local_density(&f, n, p, &params, &mut cache).unwrap();
                assert!(rec.stabilized && rec.k == 1);
            }
        }
    }

    #[test]
    fn bad_prime_stabilizes_within_limit() {
        let f = y5();
        let params = DensityParams::default();
        let mut cache = DensityCache::in_memory();
        // p = 2 divides 2D
        let rec = local_density_strict(&f, 1, 2, &params, &mut cache).unwrap();
        assert!(rec.stabilized);
        assert!(rec.k <= 6);
    }

    #[test]
    fn measure_composition() {
        let f = y5();
        let params = DensityParams { prime_bound: 5, ..Default::default() };
        let mut cache = DensityCache::in_memory();
        let entry = measure_relative(&f, 1, &params, &mut cache).unwrap();
        // |1|^{3/2} * α_2 * 8/9 * 26/25
        let alpha2 = entry.records.iter().find(|r| r.p == 2).unwrap().alpha.to_f64().unwrap();
        let want = alpha2 * (8.0 / 9.0) * (26.0 / 25.0);
        assert!((entry.value - want).abs() < 1e-12 * want.abs());
        assert!(entry.value >= 0.0);
    }

    #[test]
    fn zero_target_rejected_and_empty_table() {
        let f = y5();
        let params = DensityParams::default();
        let mut cache = DensityCache::in_memory();
        assert!(matches!(
            measure_relative(&f, 0, &params, &mut cache),
            Err(DensityError::ZeroTarget)
        ));
        let t = measure_table(&f, 1, 0, &params, &mut cache).unwrap();
        assert!(t.entries.is_empty());
    }

    #[test]
    fn cache_rebuild_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("density.cache");
        let f = y5();
        let params = DensityParams { prime_bound: 7, ..Default::default() };
        let cold = {
            let mut cache = DensityCache::open(&path).unwrap();
            measure_table(&f, 1, 3, &params, &mut cache).unwrap()
        };
        let warm = {
            let mut cache = DensityCache::open(&path).unwrap();
            measure_table(&f, 1, 3, &params, &mut cache).unwrap()
        };
        for (a, b) in cold.entries.iter().zip(&warm.entries) {
            assert_eq!(a.value.to_bits(), b.value.to_bits());
            for (ra, rb) in a.records.iter().zip(&b.records) {
                assert_eq!(ra.count, rb.count);
                assert_eq!(ra.alpha, rb.alpha);
            }
        }
    }

    #[test]
    fn square_class_invariance_even_degree() {
        // for m = 6 and p ∤ 2 n1 n2 D with n1 n2 a square mod p, the
        // densities agree
        let f = QuadraticForm::diagonal_gram2(&[2, 2, -2, -2, -2, -2]).unwrap();
        let params = DensityParams::default();
        let mut cache = DensityCache::in_memory();
        for &p in &[7u64, 11] {
            for n1 in 1..p as i128 {
                for n2 in n1..p as i128 {
                    let prod = (n1 * n2).rem_euclid(p as i128) as i64;
                    if crate::characters::quad_residue_symbol(prod, p as i64).unwrap() != 1 {
                        continue;
                    }
                    let a1 = local_density(&f, n1, p, &params, &mut cache).unwrap().alpha;
                    let a2 = local_density(&f, n2, p, &params, &mut cache).unwrap().alpha;
                    assert_eq!(a1, a2, "p={p} n1={n1} n2={n2}");
                }
            }
        }
    }

    #[test]
    fn euler_product_partial_products_settle() {
        let f = y5();
        let mut cache = DensityCache::in_memory();
        let mut values = Vec::new();
        for &bound in &[20u64, 50, 100] {
            let params = DensityParams { prime_bound: bound, ..Default::default() };
            let e = measure_relative(&f, 1, &params, &mut cache).unwrap();
            values.push(e.value);
        }
        let gap1 = (values[1] - values[0]).abs() / values[1].abs();
        let gap2 = (values[2] - values[1]).abs() / values[2].abs();
        assert!(gap2 < gap1, "gaps {gap1} {gap2} should decrease");
    }
}
