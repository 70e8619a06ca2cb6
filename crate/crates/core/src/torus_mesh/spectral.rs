//! Discrete Fourier transform of cell fields and the negative Sobolev norm.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use super::{Field, GridSpec};
use crate::error::{domain, Result};

/// Fourier coefficients of every component of a field, normalised so that
/// the zero mode equals the mean. Index layout matches the field cells.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub grid: GridSpec,
    /// `coeffs[c][j]` is the coefficient of component `c` at spectral index `j`.
    pub coeffs: Vec<Vec<Complex64>>,
}

impl Spectrum {
    /// Integer wave vector of spectral index `j`.
    pub fn wavevector(&self, j: usize) -> [i64; 2] {
        let idx = self.grid.multi_index(j);
        let n = self.grid.cells();
        [
            wavenumber(idx[0], n),
            if self.grid.dim() == 2 {
                wavenumber(idx[1], n)
            } else {
                0
            },
        ]
    }

    /// Coefficient of component `c` at wave vector `k`, if resolved.
    pub fn coefficient(&self, c: usize, k: [i64; 2]) -> Option<Complex64> {
        let n = self.grid.cells() as i64;
        let mut idx = [0usize; 2];
        for a in 0..self.grid.dim() {
            if k[a].abs() > n / 2 {
                return None;
            }
            idx[a] = k[a].rem_euclid(n) as usize;
        }
        if self.grid.dim() == 1 && k[1] != 0 {
            return None;
        }
        Some(self.coeffs[c][self.grid.linear_index(idx)])
    }
}

/// Signed wavenumber of FFT index `j` on `n` points.
pub fn wavenumber(j: usize, n: usize) -> i64 {
    if 2 * j < n {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Forward DFT divided by the cell count, so the zero mode is the mean.
pub fn dft(field: &Field) -> Spectrum {
    let grid = *field.grid();
    let n = grid.cells();
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let scale = 1.0 / grid.cell_count() as f64;
    let coeffs = (0..field.components())
        .map(|c| {
            let mut data: Vec<Complex64> = field
                .values()
                .iter()
                .skip(c)
                .step_by(field.components())
                .map(|&v| Complex64::new(v, 0.0))
                .collect();
            // rows along x are contiguous
            fft.process(&mut data);
            if grid.dim() == 2 {
                let mut column = vec![Complex64::new(0.0, 0.0); n];
                for ix in 0..n {
                    for iy in 0..n {
                        column[iy] = data[ix + n * iy];
                    }
                    fft.process(&mut column);
                    for iy in 0..n {
                        data[ix + n * iy] = column[iy];
                    }
                }
            }
            data.iter_mut().for_each(|z| *z *= scale);
            data
        })
        .collect();
    Spectrum { grid, coeffs }
}

/// `W^{-m,2}` norm: `vol * sum_k |f_k|^2 (1 + |2 pi k / L|^2)^(-m)`, square-rooted.
/// Requires `m > d + 1`.
pub fn neg_sobolev_norm(field: &Field, m: u32) -> Result<f64> {
    let grid = field.grid();
    if (m as usize) <= grid.dim() + 1 {
        return Err(domain(format!(
            "negative Sobolev order must exceed d + 1 = {}, got {m}",
            grid.dim() + 1
        )));
    }
    Ok(neg_sobolev_norm_sq(&dft(field), m).sqrt())
}

pub(crate) fn neg_sobolev_norm_sq(spec: &Spectrum, m: u32) -> f64 {
    let grid = spec.grid;
    let two_pi_over_l = 2.0 * std::f64::consts::PI / grid.period();
    let weights: Vec<f64> = (0..grid.cell_count())
        .map(|j| {
            let k = spec.wavevector(j);
            let k2 = (k[0] * k[0] + k[1] * k[1]) as f64 * two_pi_over_l * two_pi_over_l;
            (1.0 + k2).powi(-(m as i32))
        })
        .collect();
    let sum: f64 = spec
        .coeffs
        .iter()
        .map(|cs| {
            cs.iter()
                .zip(&weights)
                .map(|(z, w)| z.norm_sqr() * w)
                .sum::<f64>()
        })
        .sum();
    grid.volume() * sum
}
