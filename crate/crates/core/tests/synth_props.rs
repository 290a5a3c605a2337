use infoflow_core::granger::granger_f_test;
use infoflow_core::synth::{apen_bruteforce, f_oracle_check, gen_var, SynthSpec, PUBLISHED_F_CRITICAL};

const ALPHA: f64 = 0.05;

fn variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

#[test]
fn white_noise_has_no_autocorrelation() {
    let t = 2000;
    let panel = gen_var(&SynthSpec::independent(10, t, 17)).unwrap();
    for c in panel.columns() {
        let mean = c.iter().sum::<f64>() / t as f64;
        let num: f64 = c.windows(2).map(|w| (w[0] - mean) * (w[1] - mean)).sum();
        let den: f64 = c.iter().map(|x| (x - mean).powi(2)).sum();
        assert!((num / den).abs() <= 3.0 / (t as f64).sqrt());
    }
}

#[test]
fn half_sample_variances_agree() {
    let mut spec = SynthSpec::independent(6, 2000, 8).with_coupling(0, 1, 1, 0.5).with_coupling(1, 2, 2, 0.4);
    spec.ar_coeffs = vec![0.9, 0.5, -0.3, 0.0, 0.95, 0.2];
    let panel = gen_var(&spec).unwrap();
    for c in panel.columns() {
        let (a, b) = c.split_at(c.len() / 2);
        let ratio = variance(b) / variance(a);
        assert!((0.5..=2.0).contains(&ratio), "{ratio}");
    }
}

#[test]
fn same_seed_same_panel() {
    let spec = SynthSpec::independent(4, 300, 99).with_coupling(3, 0, 2, 0.7);
    assert_eq!(gen_var(&spec).unwrap(), gen_var(&spec).unwrap());
    let other = SynthSpec { seed: 100, ..spec.clone() };
    assert_ne!(gen_var(&spec).unwrap(), gen_var(&other).unwrap());
}

#[test]
fn invalid_specs_are_rejected() {
    let base = SynthSpec::independent(3, 100, 0);
    assert!(gen_var(&base.clone().with_coupling(0, 0, 1, 0.5)).is_err());
    assert!(gen_var(&base.clone().with_coupling(0, 1, 0, 0.5)).is_err());
    assert!(gen_var(&base.clone().with_coupling(0, 5, 1, 0.5)).is_err());
    assert!(gen_var(&SynthSpec { ar_coeffs: vec![0.0, 1.0, 0.0], ..base.clone() }).is_err());
    assert!(gen_var(&SynthSpec { noise_sigma: 0.0, ..base }).is_err());
}

fn rejection_rates(coefficient: f64, t: usize, seeds: u64) -> (f64, f64) {
    let (mut fwd, mut rev) = (0, 0);
    for seed in 0..seeds {
        let panel = gen_var(&SynthSpec::independent(2, t, seed).with_coupling(0, 1, 1, coefficient)).unwrap();
        let (a, b) = (panel.column(0), panel.column(1));
        fwd += usize::from(granger_f_test(&a, &b, 1).unwrap().p_value < ALPHA);
        rev += usize::from(granger_f_test(&b, &a, 1).unwrap().p_value < ALPHA);
    }
    (fwd as f64 / seeds as f64, rev as f64 / seeds as f64)
}

fn within_3se(rate: f64, n: u64) -> bool {
    (rate - ALPHA).abs() <= 3.0 * (ALPHA * (1.0 - ALPHA) / n as f64).sqrt()
}

#[test]
fn strong_coupling_is_found_and_reverse_is_not() {
    let (fwd, rev) = rejection_rates(0.5, 2000, 100);
    assert!(fwd >= 0.99, "{fwd}");
    assert!(within_3se(rev, 100), "{rev}");
}

#[test]
fn power_and_size_at_desk_scale() {
    let (fwd, rev) = rejection_rates(0.3, 750, 200);
    assert!(fwd >= 0.95, "{fwd}");
    assert!(within_3se(rev, 200), "{rev}");
    let (null, _) = rejection_rates(0.0, 750, 200);
    assert!(within_3se(null, 200), "{null}");
}

#[test]
fn constant_series_has_zero_entropy() {
    assert_eq!(apen_bruteforce(&[3.5; 40], 2, 0.1).unwrap(), 0.0);
    assert!(apen_bruteforce(&[1.0, 2.0, 3.0], 2, 0.1).is_err());
}

#[test]
fn published_f_table_passes() {
    assert!(PUBLISHED_F_CRITICAL.len() >= 12);
    let report = f_oracle_check(PUBLISHED_F_CRITICAL);
    for row in &report {
        assert!(row.pass, "{row:?}");
    }
    for (alpha, d1, d2, crit) in [(0.05, 1, 10, 4.9646), (0.05, 5, 100, 2.3053), (0.01, 2, 20, 5.8489)] {
        assert!(report.iter().any(|r| r.row.alpha == alpha
            && r.row.d1 == d1
            && r.row.d2 == d2
            && r.row.critical_value == crit
            && r.pass));
    }
}
