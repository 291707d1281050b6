#![allow(dead_code)]

use cirfilter::ModelParams;

pub fn reference_params() -> ModelParams {
    ModelParams::new(0.5, 0.4, 0.5).unwrap()
}

/// Reference parameters plus two contrasting sets, each with a prior rate.
pub fn parameter_sets() -> Vec<(ModelParams, f64)> {
    vec![
        (reference_params(), 4.0),
        (ModelParams::new(1.0, 1.0, 0.8).unwrap(), 2.0),
        (ModelParams::new(0.3, 2.0, 0.4).unwrap(), 1.0),
    ]
}

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// One-sample Kolmogorov–Smirnov p-value (asymptotic, with the usual
/// small-sample correction).
pub fn ks_pvalue(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i as f64 + 1.0) / n - f)
        })
        .fold(0.0, f64::max);
    let lam = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let mut p = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let sign = if k as i64 % 2 == 1 { 1.0 } else { -1.0 };
        p += sign * 2.0 * (-2.0 * k * k * lam * lam).exp();
    }
    p.clamp(0.0, 1.0)
}
