use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use surgecorr_core::eval::{mae, mse, r2, rmse, wilcoxon_signed_rank, WilcoxonMethod};

// Reference p-values below come from scipy.stats.wilcoxon (zero_method="wilcox",
// correction=True, method="approx" or "exact").

#[test]
fn normal_approximation_matches_reference() {
    let a = [
        0.09, 0.24, 0.8, 0.58, 0.09, 0.43, 0.48, 0.16, 0.73, 0.11, 0.39, 0.52, 0.43, 0.59, 0.74, 0.96, 0.28, 0.65, 0.7, 0.29,
    ];
    let b = [
        0.0, 0.97, 0.3, 0.31, 0.89, 0.59, 0.47, 0.77, 0.03, 0.71, 0.37, 0.09, 0.66, 0.93, 0.21, 0.63, 0.3, 0.74, 0.72, 0.22,
    ];
    let w = wilcoxon_signed_rank(&a, &b).unwrap();
    assert_eq!(w.method, WilcoxonMethod::NormalApproximation);
    assert_eq!(w.statistic, 97.5);
    assert!((w.p_value - 0.7938214901244397).abs() < 1e-9, "{}", w.p_value);
}

#[test]
fn normal_approximation_with_ties() {
    let d = [1.0, 1.0, 2.0, 2.0, 2.0, -3.0, 4.0, 4.0, 5.0, -5.0, 6.0, 7.0, 7.0, 8.0, 9.0, -9.0, 10.0, 11.0];
    let w = wilcoxon_signed_rank(&d, &[0.0; 18]).unwrap();
    assert_eq!(w.statistic, 31.0);
    assert!((w.p_value - 0.01856101393788271).abs() < 1e-9, "{}", w.p_value);
}

#[test]
fn exact_matches_reference() {
    let d = [1.0, 2.0, -3.0, 4.0, 5.0, 6.0, -7.0, 8.0];
    let w = wilcoxon_signed_rank(&d, &[0.0; 8]).unwrap();
    assert_eq!((w.statistic, w.p_value, w.method), (10.0, 0.3125, WilcoxonMethod::Exact));
}

fn brute_force_p(d: &[f64]) -> f64 {
    let d: Vec<f64> = d.iter().copied().filter(|v| *v != 0.0).collect();
    let n = d.len();
    let rank2 = |m: f64| {
        let below = d.iter().filter(|o| o.abs() < m).count();
        let equal = d.iter().filter(|o| o.abs() == m).count();
        (2 * below + equal + 1) as u64
    };
    let ranks: Vec<u64> = d.iter().map(|v| rank2(v.abs())).collect();
    let total: u64 = ranks.iter().sum();
    let plus: u64 = (0..n).filter(|&i| d[i] > 0.0).map(|i| ranks[i]).sum();
    let stat = plus.min(total - plus);
    let hits = (0u32..1 << n)
        .filter(|mask| {
            let p: u64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            p.min(total - p) <= stat
        })
        .count();
    hits as f64 / (1u64 << n) as f64
}

#[test]
fn exact_p_equals_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..400 {
        let n = rng.random_range(1..=10);
        let d: Vec<f64> = (0..n).map(|_| rng.random_range(-4i32..=4) as f64).collect();
        match wilcoxon_signed_rank(&d, &vec![0.0; n]) {
            Ok(w) => assert_eq!(w.p_value, brute_force_p(&d), "{d:?}"),
            Err(_) => assert!(d.iter().all(|v| *v == 0.0)),
        }
    }
}

#[test]
fn metrics_match_textbook_definitions() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..200 {
        let n = rng.random_range(2..50);
        let y: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mean = y.iter().sum::<f64>() / n as f64;
        let sse: f64 = y.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum();
        let sst: f64 = y.iter().map(|a| (a - mean) * (a - mean)).sum();
        let sae: f64 = y.iter().zip(&p).map(|(a, b)| (a - b).abs()).sum();
        assert!((mse(&y, &p).unwrap() - sse / n as f64).abs() < 1e-12);
        assert!((rmse(&y, &p).unwrap() - (sse / n as f64).sqrt()).abs() < 1e-12);
        assert!((mae(&y, &p).unwrap() - sae / n as f64).abs() < 1e-12);
        assert!((r2(&y, &p).unwrap() - (1.0 - sse / sst)).abs() < 1e-12);
        assert!(mae(&y, &p).unwrap() <= rmse(&y, &p).unwrap());
    }
}
