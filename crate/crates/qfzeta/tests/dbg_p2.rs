use qfzeta::localdensity::{count_enumerative, count_reduced};
use qfzeta::quadform::QuadraticForm;

#[test]
fn deep_2adic() {
    let y6 = QuadraticForm::diagonal_gram2(&[2, 2, -2, -2, -2, -2]).unwrap();
    let y5 = QuadraticForm::diagonal_gram2(&[2, 2, 2, 2, -2]).unwrap();
    for (name, f) in [("y5", &y5), ("y6", &y6)] {
        let m = f.degree() as u32;
        for k in 3..=4u32 {
            if 2u128.pow(k * m) > 20_000_000 { continue; }
            for n in [1i128, 2, 3, 4, 5, 6, 7, 8, -1, -3] {
                let brute = count_enumerative(f, n, 2, k, 20_000_000).unwrap();
                let fast = count_reduced(f, n, 2, k, 1 << 40).unwrap();
                if brute != fast {
                    println!("MISMATCH {name} p=2 k={k} n={n}: brute={brute} reduced={fast}");
                } else {
                    println!("ok {name} p=2 k={k} n={n}: {brute}");
                }
            }
        }
    }
    panic!("show");
}
