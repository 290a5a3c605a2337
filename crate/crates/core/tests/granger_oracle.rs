//! Granger F statistic against an exact-arithmetic normal-equations oracle,
//! plus size and invariance properties.

use infoflow_core::granger::{granger_f_test, TargetFit};
use num::{BigRational, ToPrimitive, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn q(v: f64) -> BigRational {
    BigRational::from_float(v).unwrap()
}

/// Exact RSS of `y` on `cols` by Gauss-Jordan on `X'X b = X'y` over the rationals.
fn exact_rss(y: &[f64], cols: &[Vec<f64>]) -> BigRational {
    let p = cols.len();
    let yq: Vec<BigRational> = y.iter().map(|&v| q(v)).collect();
    let cq: Vec<Vec<BigRational>> = cols.iter().map(|c| c.iter().map(|&v| q(v)).collect()).collect();
    let ip = |a: &[BigRational], b: &[BigRational]| a.iter().zip(b).fold(BigRational::zero(), |s, (u, v)| s + u * v);
    let mut a: Vec<Vec<BigRational>> = (0..p)
        .map(|i| {
            let mut row: Vec<BigRational> = (0..p).map(|j| ip(&cq[i], &cq[j])).collect();
            row.push(ip(&cq[i], &yq));
            row
        })
        .collect();
    let xty: Vec<BigRational> = a.iter().map(|r| r[p].clone()).collect();
    for c in 0..p {
        let piv = (c..p).find(|&r| !a[r][c].is_zero()).expect("full rank");
        a.swap(c, piv);
        for r in 0..p {
            if r != c && !a[r][c].is_zero() {
                let f = &a[r][c] / &a[c][c];
                for k in c..=p {
                    let t = &f * &a[c][k];
                    a[r][k] -= t;
                }
            }
        }
    }
    let fit = (0..p).fold(BigRational::zero(), |s, i| s + (&a[i][p] / &a[i][i]) * &xty[i]);
    ip(&yq, &yq) - fit
}

fn exact_f(x: &[f64], y: &[f64], l: usize) -> f64 {
    let t = y.len();
    let rows = t - l;
    let lags = |s: &[f64]| -> Vec<Vec<f64>> { (1..=l).map(|j| s[l - j..t - j].to_vec()).collect() };
    let mut restricted = vec![vec![1.0; rows]];
    restricted.extend(lags(y));
    let mut full = restricted.clone();
    full.extend(lags(x));
    let target = &y[l..];
    let rss_r = exact_rss(target, &restricted);
    let rss_u = exact_rss(target, &full);
    let df = BigRational::from_integer(((rows - 2 * l - 1) as i64).into());
    let lq = BigRational::from_integer((l as i64).into());
    ((rss_r - &rss_u) / lq / (rss_u / df)).to_f64().unwrap()
}

#[test]
fn f_stat_matches_exact_oracle_on_100_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let l = rng.random_range(1..=3);
        let t = rng.random_range(3 * l + 6..=60);
        let coupling: f64 = rng.random_range(-0.8..0.8);
        let x: Vec<f64> = (0..t).map(|_| StandardNormal.sample(&mut rng)).collect();
        let mut y = vec![0.0; t];
        for s in 0..t {
            let e: f64 = StandardNormal.sample(&mut rng);
            y[s] = e + if s > 0 { coupling * x[s - 1] + 0.3 * y[s - 1] } else { 0.0 };
        }
        let got = granger_f_test(&x, &y, l).unwrap().f_stat;
        let want = exact_f(&x, &y, l);
        let rel = (got - want).abs() / want.abs().max(1e-12);
        worst = worst.max(rel);
        assert!(rel <= 1e-7, "T={t} l={l}: {got} vs {want}");
    }
    eprintln!("worst relative error {worst:e}");
}

fn noise(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

#[test]
fn size_under_the_null() {
    let trials = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let rejections = (0..trials)
        .filter(|_| {
            let x = noise(&mut rng, 1000);
            let y = noise(&mut rng, 1000);
            granger_f_test(&x, &y, 1).unwrap().p_value < 0.05
        })
        .count();
    let rate = rejections as f64 / trials as f64;
    // 0.05 +- 0.02, which is also inside 3 binomial standard errors (0.0207).
    assert!((rate - 0.05).abs() <= 0.02, "rejection rate {rate}");
}

#[test]
fn nested_models_give_non_negative_f() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for l in 1..=5 {
        let y = noise(&mut rng, 200);
        let fit = TargetFit::new(&y, l).unwrap();
        for _ in 0..20 {
            let r = fit.test_source(&noise(&mut rng, 200)).unwrap();
            assert!(r.f_stat >= 0.0);
            assert!((0.0..=1.0).contains(&r.p_value));
            assert_eq!((r.df_num, r.df_den), (l, 200 - l - 2 * l - 1));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn affine_invariance(
        seed in any::<u64>(),
        l in 1usize..4,
        a in prop_oneof![-50.0f64..-0.1, 0.1f64..50.0],
        b in -100.0f64..100.0,
        c in prop_oneof![-50.0f64..-0.1, 0.1f64..50.0],
        d in -100.0f64..100.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = noise(&mut rng, 120);
        let e = noise(&mut rng, 120);
        let y: Vec<f64> = (0..120).map(|t| e[t] + if t > 0 { 0.25 * x[t - 1] } else { 0.0 }).collect();
        let base = granger_f_test(&x, &y, l).unwrap();
        let x2: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let y2: Vec<f64> = y.iter().map(|v| c * v + d).collect();
        let moved = granger_f_test(&x2, &y2, l).unwrap();
        prop_assert!((base.f_stat - moved.f_stat).abs() <= 1e-8 * base.f_stat.max(1e-8));
        prop_assert_eq!(base.p_value < 0.05, moved.p_value < 0.05);
    }
}
