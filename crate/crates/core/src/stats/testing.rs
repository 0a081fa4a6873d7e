//! Two-sample Kolmogorov–Smirnov, χ² goodness of fit, paired bootstrap
//! trend test and least squares through the origin.

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::rng::{substream, StreamTag};

fn sorted(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// KS statistic of two samples already sorted ascending.
pub fn ks_sorted(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySample);
    }
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let x = if a[i].total_cmp(&b[j]).is_le() { a[i] } else { b[j] };
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    Ok(d)
}

pub fn ks_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    ks_sorted(&sorted(a), &sorted(b))
}

/// Asymptotic two-sided critical value of the two-sample statistic.
pub fn ks_critical(alpha: f64, n: usize, m: usize) -> f64 {
    let c = (-(alpha / 2.0).ln() / 2.0).sqrt();
    c * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// `(first value, observed, expected)` per merged bin; the last bin is open-ended.
    pub bins: Vec<(u64, u64, f64)>,
}

/// Goodness of fit of integer draws to `pmf`, merging adjacent values until
/// every bin expects at least `min_expected` counts.
pub fn chi_square_gof(draws: &[u64], pmf: impl Fn(u64) -> f64, min_expected: f64) -> Result<ChiSquareTest> {
    if draws.is_empty() {
        return Err(Error::EmptySample);
    }
    let total = draws.len() as f64;
    let max = *draws.iter().max().expect("non-empty");
    let mut counts = vec![0u64; max as usize + 1];
    for &d in draws {
        counts[d as usize] += 1;
    }

    let mut bins: Vec<(u64, u64, f64)> = Vec::new();
    let mut used = 0.0;
    let (mut start, mut obs, mut exp) = (0u64, 0u64, 0.0);
    let mut l = 0u64;
    loop {
        let p = pmf(l);
        obs += counts.get(l as usize).copied().unwrap_or(0);
        exp += p * total;
        used += p;
        l += 1;
        if exp >= min_expected {
            bins.push((start, obs, exp));
            start = l;
            obs = 0;
            exp = 0.0;
        }
        if l > max && ((1.0 - used) * total < min_expected || l > max + 10_000_000) {
            break;
        }
    }
    // the remainder becomes the open tail, folded into the last bin if thin
    let tail_obs = obs + counts.iter().skip(l as usize).sum::<u64>();
    let tail_exp = exp + (1.0 - used).max(0.0) * total;
    match bins.last_mut() {
        Some(last) if tail_exp < min_expected => {
            last.1 += tail_obs;
            last.2 += tail_exp;
        }
        _ => bins.push((start, tail_obs, tail_exp)),
    }
    if bins.len() < 2 {
        return Err(Error::InvalidArgument("too few draws for a chi-square test".into()));
    }
    let statistic = bins.iter().map(|&(_, o, e)| (o as f64 - e).powi(2) / e).sum();
    let dof = bins.len() - 1;
    let p_value = 1.0 - ChiSquared::new(dof as f64).expect("dof >= 1").cdf(statistic);
    Ok(ChiSquareTest { statistic, dof, p_value, bins })
}

/// Sample mean of `g(x)` and its standard error.
pub fn mean_and_se(xs: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = xs.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Unbiased sample variance and a normal-theory standard error for it,
/// `sqrt((m₄ - s⁴ (n-3)/(n-1)) / n)`.
pub fn variance_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let s2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    (s2, ((m4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt())
}

/// Standard normal quantile.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TrendTest {
    pub ks_coarse: f64,
    pub ks_fine: f64,
    /// `ks_fine - ks_coarse`
    pub diff: f64,
    /// Bootstrap standard error of `diff`.
    pub se: f64,
    pub z: f64,
    /// False when the KS distance grew significantly.
    pub pass: bool,
}

/// One-sided test that the KS distance to `limit` did not increase from the
/// coarse to the fine sample. The three samples are independent, so each is
/// resampled with its own indices; the resampled limit sample is shared by
/// both distances of a replicate, which pairs them.
pub fn paired_trend_test(
    coarse: &[f64],
    fine: &[f64],
    limit: &[f64],
    resamples: usize,
    z_crit: f64,
    seed: u64,
) -> Result<TrendTest> {
    let ks_coarse = ks_distance(coarse, limit)?;
    let ks_fine = ks_distance(fine, limit)?;
    let diff = ks_fine - ks_coarse;
    let mut rng = substream(seed, StreamTag::Bootstrap, 0);
    let mut buf = [vec![0.0; coarse.len()], vec![0.0; fine.len()], vec![0.0; limit.len()]];
    let mut ds = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        for (b, src) in buf.iter_mut().zip([coarse, fine, limit]) {
            for slot in b.iter_mut() {
                *slot = src[rng.random_range(0..src.len())];
            }
            b.sort_by(f64::total_cmp);
        }
        ds.push(ks_sorted(&buf[1], &buf[2])? - ks_sorted(&buf[0], &buf[2])?);
    }
    let (_, se_mean) = mean_and_se(ds.iter().copied());
    let se = se_mean * (resamples as f64).sqrt();
    let z = if se > 0.0 {
        diff / se
    } else if diff > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    Ok(TrendTest { ks_coarse, ks_fine, diff, se, z, pass: z <= z_crit })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct OriginFit {
    pub coef: Vec<f64>,
    /// Centred: `1 - SS_res / Σ(y - ȳ)²`.
    pub r_squared: f64,
}

/// Least squares `y ≈ X β` without intercept.
pub fn fit_through_origin(rows: &[Vec<f64>], y: &[f64]) -> Result<OriginFit> {
    let p = rows.first().map_or(0, Vec::len);
    if rows.len() != y.len() || rows.len() < p || p == 0 || rows.iter().any(|r| r.len() != p) {
        return Err(Error::InvalidArgument("design matrix does not match the response".into()));
    }
    // normal equations [XᵀX | Xᵀy], Gaussian elimination with partial pivoting
    let mut a = vec![vec![0.0; p + 1]; p];
    for (row, &yi) in rows.iter().zip(y) {
        for i in 0..p {
            for j in 0..p {
                a[i][j] += row[i] * row[j];
            }
            a[i][p] += row[i] * yi;
        }
    }
    for c in 0..p {
        let piv = (c..p).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).expect("non-empty");
        a.swap(c, piv);
        if a[c][c].abs() < 1e-300 {
            return Err(Error::InvalidArgument("singular design".into()));
        }
        for r in 0..p {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..=p {
                    a[r][k] -= f * a[c][k];
                }
            }
        }
    }
    let coef: Vec<f64> = (0..p).map(|i| a[i][p] / a[i][i]).collect();
    let ybar = y.iter().sum::<f64>() / y.len() as f64;
    let ss_res: f64 = rows
        .iter()
        .zip(y)
        .map(|(r, &yi)| (yi - r.iter().zip(&coef).map(|(x, b)| x * b).sum::<f64>()).powi(2))
        .sum();
    let ss_tot: f64 = y.iter().map(|yi| (yi - ybar).powi(2)).sum();
    Ok(OriginFit { coef, r_squared: 1.0 - ss_res / ss_tot })
}
