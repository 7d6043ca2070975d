//! End-to-end validation of the modularity machinery against exact data:
//! theta powers on `Γ₀(4)` (holomorphic weights 5/2 and 3, including the
//! half-integral theta multiplier) and the weight-0 real-analytic
//! Eisenstein series on level 1 (exactly known Maass data).

mod support;

use num_complex::Complex64;
use qfzeta::forms::{
    fit_constants, fricke_defect, laplacian_defect, modularity_defect, sample_gamma0,
    sample_modularity_pairs, ConstTerm, GammaElement,
};

#[test]
fn theta_sixth_power_modularity() {
    let f = support::theta_power_expansion(6, 60);
    let pairs = sample_modularity_pairs(4, 24, 42, 0.18);
    for (g, z) in &pairs {
        let d = modularity_defect(&f, g, *z).unwrap();
        assert!(d < 1e-9, "gamma {:?} z {z} defect {d}", g);
    }
}

#[test]
fn theta_fifth_power_modularity_half_integral_weight() {
    // weight 5/2 exercises the theta-multiplier path J(γ,z)^5
    let f = support::theta_power_expansion(5, 60);
    let pairs = sample_modularity_pairs(4, 24, 43, 0.18);
    for (g, z) in &pairs {
        let d = modularity_defect(&f, g, *z).unwrap();
        assert!(d < 1e-9, "gamma {:?} z {z} defect {d}", g);
    }
}

#[test]
fn theta_multiplier_matches_theta_series_ratio() {
    // J(γ,z) = θ(γz)/θ(z) with the series truncated at |n| <= 50
    let theta = |z: Complex64| -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for n in 1..=50 {
            let t = Complex64::new(0.0, 2.0 * std::f64::consts::PI * (n * n) as f64) * z;
            acc += 2.0 * t.exp();
        }
        acc
    };
    let gammas = sample_gamma0(4, 20, 9);
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
    for g in &gammas {
        let z = Complex64::new(rng.gen_range(-0.5..0.5), rng.gen_range(0.5..1.5));
        let gz = g.apply(z);
        if gz.im < 0.5 {
            continue;
        }
        let j = qfzeta::characters::theta_multiplier(&[g.a, g.b, g.c, g.d], z).unwrap();
        let ratio = theta(gz) / theta(z);
        assert!((j - ratio).norm() < 1e-10, "gamma {g:?} z {z}");
    }
}

#[test]
fn theta_power_fricke_relation() {
    for &j in &[5u32, 6] {
        let f = support::theta_power_expansion(j, 80);
        let g = support::theta_power_partner(j, 80);
        // points near the fixed circle |z| = 1/2 of z -> -1/(4z)
        let samples = [
            Complex64::new(0.0, 0.5),
            Complex64::new(0.1, 0.52),
            Complex64::new(-0.12, 0.55),
            Complex64::new(0.05, 0.48),
            Complex64::new(-0.03, 0.62),
        ];
        for &z in &samples {
            let d = fricke_defect(&f, &g, z).unwrap();
            assert!(d < 1e-9, "j={j} z={z} defect {d}");
        }
    }
}

#[test]
fn constant_fit_recovers_known_theta_constant() {
    // mask the exactly-known constant term of θ^6 and refit it from
    // modularity equations
    let mut f = support::theta_power_expansion(6, 60);
    f.const_growth = ConstTerm::Unknown;
    let pairs = sample_modularity_pairs(4, 30, 77, 0.18);
    let report = fit_constants(&mut f, &pairs).unwrap();
    let fitted = f.const_growth.value().unwrap();
    assert!(
        (fitted - Complex64::new(1.0, 0.0)).norm() < 1e-8,
        "fitted {fitted}, residual {}",
        report.residual
    );
    assert!(report.residual < 1e-9, "residual {}", report.residual);
}

#[test]
fn constant_fit_stable_across_disjoint_samples() {
    let mut f1 = support::theta_power_expansion(5, 60);
    let mut f2 = support::theta_power_expansion(5, 60);
    f1.const_growth = ConstTerm::Unknown;
    f2.const_growth = ConstTerm::Unknown;
    let pairs_a = sample_modularity_pairs(4, 24, 1001, 0.18);
    let pairs_b = sample_modularity_pairs(4, 24, 2002, 0.18);
    fit_constants(&mut f1, &pairs_a).unwrap();
    fit_constants(&mut f2, &pairs_b).unwrap();
    let c1 = f1.const_growth.value().unwrap();
    let c2 = f2.const_growth.value().unwrap();
    assert!((c1 - c2).norm() < 1e-6 * c1.norm().max(1.0));
}

#[test]
fn eisenstein_weight_zero_modularity() {
    // exactly known Maass form: E(z, 5/4) on SL2(Z)
    let e = support::eisenstein_expansion(5, 40);
    // include the inversion S, unreachable by translations
    let s = GammaElement::new(0, -1, 1, 0, 1).unwrap();
    let samples = [
        Complex64::new(0.0, 1.0),
        Complex64::new(0.2, 1.1),
        Complex64::new(-0.3, 0.9),
    ];
    for &z in &samples {
        let d = modularity_defect(&e, &s, z).unwrap();
        assert!(d < 1e-9, "S at z={z}: defect {d}");
    }
    let pairs = sample_modularity_pairs(1, 20, 5, 0.3);
    for (g, z) in &pairs {
        let d = modularity_defect(&e, g, *z).unwrap();
        assert!(d < 1e-9, "gamma {g:?} z {z} defect {d}");
    }
}

#[test]
fn eisenstein_laplacian_eigenvalue() {
    // eigenvalue λ(1-λ) with λ = 5/4 equals the stored formula value
    let e = support::eisenstein_expansion(5, 40);
    assert!((e.eigenvalue().unwrap() - (-5.0 / 16.0)).abs() < 1e-15);
    for &z in &[Complex64::new(0.1, 1.2), Complex64::new(-0.2, 0.8)] {
        let d = laplacian_defect(&e, z, 1e-3).unwrap();
        assert!(d < 1e-6, "z={z} defect {d}");
    }
}

#[test]
fn modularity_cocycle_consistency() {
    // defect(γ, z) small implies defect(γ^{-1}, γz) small
    let f = support::theta_power_expansion(6, 60);
    let pairs = sample_modularity_pairs(4, 16, 4242, 0.18);
    for (g, z) in &pairs {
        let gz = g.apply(*z);
        let d1 = modularity_defect(&f, g, *z).unwrap();
        let d2 = modularity_defect(&f, &g.inv(), gz).unwrap();
        assert!(d1 < 1e-9 && d2 < 1e-9, "d1={d1} d2={d2}");
    }
}
