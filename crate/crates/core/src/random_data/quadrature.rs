use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::random_data::partition::MAX_PARTITION_CELLS;

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(domain("quadrature needs at least one node"));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    Ok((nodes, weights))
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    (p1, n as f64 * (x * p1 - p0) / (x * x - 1.0))
}

/// `E[f(omega)]` for `omega` uniform on `[0,1]^k`, by tensor Gauss-Legendre
/// quadrature with `nodes` points per axis.
pub fn latent_expectation(k: usize, nodes: usize, mut f: impl FnMut(&[f64]) -> f64) -> Result<f64> {
    let (x, w) = gauss_legendre(nodes)?;
    let total = (nodes as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if total > MAX_PARTITION_CELLS as u128 {
        return Err(Error::PartitionSize {
            cells: total,
            limit: MAX_PARTITION_CELLS,
        });
    }
    let mut point = vec![0.0; k];
    let mut sum = 0.0;
    for n in 0..total as usize {
        let mut weight = 1.0;
        let mut r = n;
        for p in point.iter_mut() {
            let i = r % nodes;
            r /= nodes;
            *p = x[i];
            weight *= w[i];
        }
        sum += weight * f(&point);
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n).unwrap();
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for p in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                assert!((q - 1.0 / (p + 1) as f64).abs() < 1e-13, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn tensor_expectation() {
        let e = latent_expectation(2, 4, |w| w[0] * w[1] + w[1] * w[1]).unwrap();
        assert!((e - (0.25 + 1.0 / 3.0)).abs() < 1e-14);
        let t = latent_expectation(1, 40, |w| (2.0 * w[0]).tanh()).unwrap();
        assert!((t - 0.5 * (2f64).cosh().ln()).abs() < 1e-13);
    }
}
