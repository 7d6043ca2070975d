//! Exact counting of `#{v mod p^k : Y[v] ≡ n mod p^k}`.
//!
//! Two routes compute the same cardinality:
//!
//! * [`count_enumerative`] walks all `p^{km}` vectors (parallel over the
//!   leading coordinate) — simple, and the oracle for everything else;
//! * [`count_reduced`] first splits the even Gram matrix `G = 2Y` into
//!   unary and (2-adic) binary blocks by an exact congruence
//!   transformation over `Z/p^P`, then counts through per-block value
//!   histograms combined by convolution.  Cost grows like `m·p^{2k}`
//!   instead of `p^{km}`, which is what makes degree-6 forms at `p = 13`,
//!   `k = 2` tractable.
//!
//! For odd `p` the congruence `Y[v] ≡ n (p^k)` is counted as
//! `G[v] ≡ 2n (p^k)`; for `p = 2` as `G[v] ≡ 2n (2^{k+1})`, which is
//! well-defined on `v mod 2^k` because the diagonal of `G` is even.

use rayon::prelude::*;

use crate::quadform::QuadraticForm;

use super::DensityError;

/// Cost estimate of the enumerative route (number of vectors).
pub fn enumerative_cost(m: usize, p: u64, k: u32) -> u128 {
    (p as u128).saturating_pow(k * m as u32)
}

/// Direct enumeration.  `budget` caps the number of vectors visited.
pub fn count_enumerative(
    form: &QuadraticForm,
    n: i128,
    p: u64,
    k: u32,
    budget: u128,
) -> Result<u128, DensityError> {
    let m = form.degree();
    let total = enumerative_cost(m, p, k);
    if total > budget {
        return Err(DensityError::BudgetExceeded { cost: total, budget });
    }
    let pk = (p as i128).pow(k);
    let modulus = if p == 2 { 2 * pk } else { pk };
    let target = (2 * n).rem_euclid(modulus);
    let side = pk as u64;
    // gram as i128 once
    let g: Vec<i128> = (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| form.gram2(i, j) as i128)
        .collect();
    let count = (0..side)
        .into_par_iter()
        .map(|v0| {
            let mut v = vec![0i128; m];
            v[0] = v0 as i128;
            let mut local = 0u128;
            let inner = (side as u128).pow(m as u32 - 1);
            for rest in 0..inner {
                let mut t = rest;
                for vi in v.iter_mut().skip(1) {
                    *vi = (t % side as u128) as i128;
                    t /= side as u128;
                }
                let mut acc: i128 = 0;
                for i in 0..m {
                    let mut row = 0i128;
                    for j in 0..m {
                        row += g[i * m + j] * v[j];
                    }
                    acc = (acc + v[i] * (row % modulus)) % modulus;
                }
                if acc.rem_euclid(modulus) == target {
                    local += 1;
                }
            }
            local
        })
        .sum();
    Ok(count)
}

#[derive(Debug, Clone)]
enum Block {
    /// `a x^2`
    Unary { a: i128 },
    /// `a x^2 + 2b xy + c y^2` (2-adic only)
    Binary { a: i128, b: i128, c: i128 },
}

/// Cost estimate of the reduced route.
pub fn reduced_cost(m: usize, p: u64, k: u32) -> u128 {
    let pk = (p as u128).saturating_pow(k);
    let value_mod = if p == 2 { 2 * pk } else { pk };
    // unary histograms, possible 2-adic binary histograms, convolutions
    let hist = (m as u128) * if p == 2 { pk * pk } else { pk };
    hist + (m as u128) * value_mod * value_mod
}

/// Block-diagonalize-and-convolve counting.  For odd `p` coprime to
/// `det(2Y)` and `k >= 3` the count is assembled by the exact
/// stratification over primitivity instead (primitive solutions of a
/// unimodular form lift uniformly from `k = 1`; imprimitive ones reduce
/// to the count at `k - 2`), which keeps ramified targets `p | n` cheap.
pub fn count_reduced(
    form: &QuadraticForm,
    n: i128,
    p: u64,
    k: u32,
    budget: u128,
) -> Result<u128, DensityError> {
    let m = form.degree();
    if k >= 3 && p % 2 == 1 && form.det_gram2().rem_euclid(p as i128) != 0 {
        return count_unimodular_stratified(form, n, p, k, budget);
    }
    let cost = reduced_cost(m, p, k);
    if cost > budget {
        return Err(DensityError::BudgetExceeded { cost, budget });
    }
    let pk = (p as u128).pow(k);
    let value_mod = if p == 2 { 2 * pk } else { pk };

    let det = form.det_gram2();
    let vdet = valuation_i128(det, p);
    // working precision: value modulus exponent + generous slack for the
    // divisions performed during block reduction
    let prec_exp = (if p == 2 { k + 1 } else { k }) + 2 * vdet + 4;
    let blocks = block_split(form, p, prec_exp)?;

    let vm = value_mod as usize;
    let side = pk as u128;
    // histogram per block, values mod value_mod
    let mut conv: Vec<u128> = vec![0; vm];
    conv[0] = 1;
    let mut scratch = vec![0u128; vm];
    for b in &blocks {
        let mut hist = vec![0u128; vm];
        match *b {
            Block::Unary { a } => {
                let a = a.rem_euclid(value_mod as i128);
                for x in 0..side {
                    let xx = (x * x) % value_mod;
                    let val = (a as u128 * xx) % value_mod;
                    hist[val as usize] += 1;
                }
            }
            Block::Binary { a, b, c } => {
                let a = a.rem_euclid(value_mod as i128) as u128;
                let bb = b.rem_euclid(value_mod as i128) as u128;
                let c = c.rem_euclid(value_mod as i128) as u128;
                for x in 0..side {
                    for y in 0..side {
                        let val =
                            (a * ((x * x) % value_mod) + 2 * bb * ((x * y) % value_mod)
                                + c * ((y * y) % value_mod))
                                % value_mod;
                        hist[val as usize] += 1;
                    }
                }
            }
        }
        if vm >= 1024 {
            // gather form parallelizes cleanly: out[z] = Σ conv[z1] hist[z-z1]
            scratch
                .par_iter_mut()
                .enumerate()
                .for_each(|(z, slot)| {
                    let mut acc = 0u128;
                    for (z1, &c1) in conv.iter().enumerate() {
                        if c1 != 0 {
                            let z2 = (z + vm - z1) % vm;
                            acc += c1 * hist[z2];
                        }
                    }
                    *slot = acc;
                });
        } else {
            scratch.iter_mut().for_each(|s| *s = 0);
            for (z1, &c1) in conv.iter().enumerate() {
                if c1 == 0 {
                    continue;
                }
                for (z2, &c2) in hist.iter().enumerate() {
                    if c2 == 0 {
                        continue;
                    }
                    let z = (z1 + z2) % vm;
                    scratch[z] += c1 * c2;
                }
            }
        }
        std::mem::swap(&mut conv, &mut scratch);
    }
    let target = (2 * n).rem_euclid(value_mod as i128) as usize;
    Ok(conv[target])
}

// #{v mod p^k : Q(v) ≡ n (p^k)} for odd p with G = 2Y unimodular mod p.
// Split v by primitivity: a primitive solution mod p has ∇Q ≢ 0 (G is
// invertible mod p), so it lifts to exactly p^{(k-1)(m-1)} solutions
// mod p^k; an imprimitive v = p·w solves Q(w) ≡ n/p² (p^{k-2}), each such
// class contributing p^m lifts.  Recursion depth is v_p(n)/2 + 1.
fn count_unimodular_stratified(
    form: &QuadraticForm,
    n: i128,
    p: u64,
    k: u32,
    budget: u128,
) -> Result<u128, DensityError> {
    let m = form.degree() as u32;
    if k == 0 {
        return Ok(1);
    }
    if k <= 2 {
        return count_reduced(form, n, p, k, budget);
    }
    let count_1 = count_reduced(form, n, p, 1, budget)?;
    let divisible = n.rem_euclid(p as i128) == 0;
    let primitive_1 = count_1 - u128::from(divisible); // v ≡ 0 solves only when p | n
    let mut total = primitive_1 * (p as u128).pow((k - 1) * (m - 1));
    if n.rem_euclid((p as i128) * (p as i128)) == 0 {
        let inner = count_unimodular_stratified(form, n / (p as i128 * p as i128), p, k - 2, budget)?;
        total += (p as u128).pow(m) * inner;
    }
    Ok(total)
}

fn valuation_i128(x: i128, p: u64) -> u32 {
    assert!(x != 0);
    let mut x = x.unsigned_abs();
    let p = p as u128;
    let mut v = 0;
    while x % p == 0 {
        x /= p;
        v += 1;
    }
    v
}

// valuation of a residue, capped at the working precision
fn val_res(x: i128, p: i128, cap: u32) -> u32 {
    if x == 0 {
        return cap;
    }
    let mut x = x;
    let mut v = 0;
    while v < cap && x % p == 0 {
        x /= p;
        v += 1;
    }
    v
}

fn inv_mod(a: i128, modulus: i128) -> i128 {
    // extended euclid; a must be a unit
    let (mut old_r, mut r) = (a.rem_euclid(modulus), modulus);
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        let tmp = old_r - q * r;
        old_r = r;
        r = tmp;
        let tmp = old_s - q * s;
        old_s = s;
        s = tmp;
    }
    assert!(old_r == 1 || old_r == -1, "non-unit in inv_mod");
    (old_s * old_r.signum()).rem_euclid(modulus)
}

// Split G = 2Y into unary/binary blocks by exact symmetric congruence
// transformations over Z/p^prec_exp.  The change of basis has unit
// determinant, so the solution count over (Z/p^k)^m is preserved.
fn block_split(form: &QuadraticForm, p: u64, prec_exp: u32) -> Result<Vec<Block>, DensityError> {
    let m = form.degree();
    let p_i = p as i128;
    let modulus = p_i.checked_pow(prec_exp).ok_or(DensityError::BudgetExceeded {
        cost: u128::MAX,
        budget: 0,
    })?;
    let mut a = vec![0i128; m * m];
    for i in 0..m {
        for j in 0..m {
            a[i * m + j] = (form.gram2(i, j) as i128).rem_euclid(modulus);
        }
    }
    let mut active: Vec<usize> = (0..m).collect();
    let mut blocks = Vec::new();
    let mut prec = prec_exp;

    while !active.is_empty() {
        // minimal valuation over the active block; a diagonal entry wins ties
        let mut best = prec;
        for (ii, &i) in active.iter().enumerate() {
            best = best.min(val_res(a[i * m + i], p_i, prec));
            for &j in active.iter().skip(ii + 1) {
                best = best.min(val_res(a[i * m + j], p_i, prec));
            }
        }
        let best_diag = active
            .iter()
            .copied()
            .find(|&i| val_res(a[i * m + i], p_i, prec) == best);
        let best_off = if best_diag.is_some() {
            None
        } else {
            let mut found = None;
            'scan: for (ii, &i) in active.iter().enumerate() {
                for &j in active.iter().skip(ii + 1) {
                    if val_res(a[i * m + j], p_i, prec) == best {
                        found = Some((i, j));
                        break 'scan;
                    }
                }
            }
            found
        };
        if best >= prec {
            // remaining block vanishes to working precision; cannot happen
            // for nonsingular forms with our precision margin
            return Err(DensityError::PrecisionExhausted);
        }
        let e = best;
        if let Some(i) = best_diag {
            pivot_unary(&mut a, m, &mut active, i, e, p_i, modulus);
            blocks.push(Block::Unary { a: a[i * m + i] });
            active.retain(|&x| x != i);
            prec = prec.saturating_sub(e);
            continue;
        }
        let (i, j) = best_off.expect("some entry attains the minimum");
        if p != 2 {
            // mix e_i ± e_j to move the minimal valuation onto the diagonal
            let plus = (a[i * m + i] + a[j * m + j] + 2 * a[i * m + j]).rem_euclid(modulus);
            let use_plus = val_res(plus, p_i, prec) == e;
            let sgn: i128 = if use_plus { 1 } else { -1 };
            // column op v_i <- v_i (basis e_i <- e_i + sgn e_j): row/col update
            for c in 0..m {
                a[i * m + c] = (a[i * m + c] + sgn * a[j * m + c]).rem_euclid(modulus);
            }
            for r in 0..m {
                a[r * m + i] = (a[r * m + i] + sgn * a[r * m + j]).rem_euclid(modulus);
            }
            debug_assert_eq!(val_res(a[i * m + i], p_i, prec), e);
            continue; // next loop iteration pivots on the new diagonal entry
        }
        // p = 2: intrinsic binary block at (i,j)
        pivot_binary(&mut a, m, &mut active, i, j, e, modulus);
        blocks.push(Block::Binary { a: a[i * m + i], b: a[i * m + j], c: a[j * m + j] });
        active.retain(|&x| x != i && x != j);
        prec = prec.saturating_sub(2 * e + 1);
    }
    Ok(blocks)
}

fn pivot_unary(
    a: &mut [i128],
    m: usize,
    active: &[usize],
    i: usize,
    e: u32,
    p_i: i128,
    modulus: i128,
) {
    let pe = p_i.pow(e);
    let reduced_mod = modulus / pe;
    let unit = (a[i * m + i] / pe).rem_euclid(reduced_mod);
    let inv = inv_mod(unit, reduced_mod);
    let factors: Vec<(usize, i128)> = active
        .iter()
        .filter(|&&j| j != i)
        .map(|&j| {
            let t = ((a[i * m + j].rem_euclid(modulus) / pe) % reduced_mod * inv) % reduced_mod;
            (j, t)
        })
        .collect();
    for &(j, tj) in &factors {
        for &(kk, tk) in &factors {
            let mut val = a[j * m + kk];
            val -= mul_mod(tj, a[i * m + kk], modulus);
            val -= mul_mod(tk, a[j * m + i], modulus);
            val += mul_mod(mul_mod(tj, tk, modulus), a[i * m + i], modulus);
            a[j * m + kk] = val.rem_euclid(modulus);
        }
    }
    for &(j, _) in &factors {
        a[i * m + j] = 0;
        a[j * m + i] = 0;
    }
}

fn pivot_binary(a: &mut [i128], m: usize, active: &[usize], i: usize, j: usize, e: u32, modulus: i128) {
    let p2e = 1i128 << (2 * e); // p = 2 here
    let det =
        (mul_mod(a[i * m + i], a[j * m + j], modulus) - mul_mod(a[i * m + j], a[i * m + j], modulus))
            .rem_euclid(modulus);
    let reduced_mod = modulus / p2e;
    let det_unit = (det / p2e).rem_euclid(reduced_mod);
    let inv_det = inv_mod(det_unit, reduced_mod);
    let others: Vec<usize> = active.iter().copied().filter(|&u| u != i && u != j).collect();
    let mut coeffs = Vec::with_capacity(others.len());
    for &u in &others {
        let nx = (mul_mod(a[j * m + j], a[i * m + u], modulus)
            - mul_mod(a[i * m + j], a[j * m + u], modulus))
        .rem_euclid(modulus);
        let ny = (mul_mod(a[i * m + i], a[j * m + u], modulus)
            - mul_mod(a[i * m + j], a[i * m + u], modulus))
        .rem_euclid(modulus);
        debug_assert_eq!(nx % p2e, 0);
        debug_assert_eq!(ny % p2e, 0);
        let x = mul_mod(nx / p2e, inv_det, reduced_mod);
        let y = mul_mod(ny / p2e, inv_det, reduced_mod);
        coeffs.push((u, x, y));
    }
    for &(u, xu, yu) in &coeffs {
        for &(w, xw, yw) in &coeffs {
            let mut val = a[u * m + w];
            val -= mul_mod(xu, a[i * m + w], modulus) + mul_mod(yu, a[j * m + w], modulus);
            val -= mul_mod(xw, a[u * m + i], modulus) + mul_mod(yw, a[u * m + j], modulus);
            val += mul_mod(mul_mod(xu, xw, modulus), a[i * m + i], modulus);
            val += mul_mod(mul_mod(yu, yw, modulus), a[j * m + j], modulus);
            val += mul_mod(
                (mul_mod(xu, yw, modulus) + mul_mod(yu, xw, modulus)).rem_euclid(modulus),
                a[i * m + j],
                modulus,
            );
            a[u * m + w] = val.rem_euclid(modulus);
        }
    }
    for &(u, _, _) in &coeffs {
        a[i * m + u] = 0;
        a[u * m + i] = 0;
        a[j * m + u] = 0;
        a[u * m + j] = 0;
    }
}

fn mul_mod(x: i128, y: i128, modulus: i128) -> i128 {
    (x.rem_euclid(modulus) * y.rem_euclid(modulus)).rem_euclid(modulus)
}
