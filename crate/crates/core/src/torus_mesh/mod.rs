//! Uniform periodic grids on the flat torus and cell-centred fields.
//!
//! Cells are indexed with the x index running fastest: in 2-D the linear
//! index of cell `(ix, iy)` is `ix + n * iy`. Integrals use the midpoint
//! rule, which is exact for cell-constant fields.

mod io;
mod spectral;
mod trajectory;

pub use io::{
    read_field_binary, read_field_csv, write_field_binary, write_field_csv, write_trajectory,
};
pub use spectral::{dft, neg_sobolev_norm, wavenumber, Spectrum};
pub use trajectory::{trapezoid, Quantity, Trajectory};

use serde::{Deserialize, Serialize};

use crate::error::{domain, shape, Error, Result};

/// A uniform grid of `cells^dim` cells on the torus `[0, period)^dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    cells: usize,
    period: f64,
}

impl GridSpec {
    pub fn new(dim: usize, cells: usize, period: f64) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(domain(format!("grid dimension must be 1 or 2, got {dim}")));
        }
        if cells < 2 {
            return Err(domain(format!(
                "need at least 2 cells per axis, got {cells}"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(domain(format!("period must be positive, got {period}")));
        }
        Ok(Self { dim, cells, period })
    }

    /// Unit-period grid.
    pub fn unit(dim: usize, cells: usize) -> Result<Self> {
        Self::new(dim, cells, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cells per axis.
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Cell width `h`.
    pub fn spacing(&self) -> f64 {
        self.period / self.cells as f64
    }

    pub fn cell_count(&self) -> usize {
        self.cells.pow(self.dim as u32)
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.period.powi(self.dim as i32)
    }

    /// Multi-index of a linear cell index (unused axes are zero).
    pub fn multi_index(&self, cell: usize) -> [usize; 2] {
        if self.dim == 1 {
            [cell, 0]
        } else {
            [cell % self.cells, cell / self.cells]
        }
    }

    pub fn linear_index(&self, idx: [usize; 2]) -> usize {
        if self.dim == 1 {
            idx[0]
        } else {
            idx[0] + self.cells * idx[1]
        }
    }

    /// Periodic neighbour of `cell` shifted by `offset` along `axis`.
    #[inline]
    pub fn neighbor(&self, cell: usize, axis: usize, offset: isize) -> usize {
        let n = self.cells as isize;
        let mut idx = self.multi_index(cell);
        idx[axis] = (idx[axis] as isize + offset).rem_euclid(n) as usize;
        self.linear_index(idx)
    }

    /// Coordinates of the centre of `cell`.
    pub fn center(&self, cell: usize) -> [f64; 2] {
        let h = self.spacing();
        let idx = self.multi_index(cell);
        let mut x = [0.0; 2];
        for a in 0..self.dim {
            x[a] = (idx[a] as f64 + 0.5) * h;
        }
        x
    }

    /// True when one grid's cell count divides the other's, same dim and period.
    pub fn is_nested_with(&self, other: &GridSpec) -> bool {
        self.dim == other.dim
            && self.period == other.period
            && (self.cells.is_multiple_of(other.cells) || other.cells.is_multiple_of(self.cells))
    }
}

/// Cell-centred field with `components` reals per cell (1 for scalars, `dim`
/// for vector fields). Values are stored cell-major with components
/// innermost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field {
    grid: GridSpec,
    components: usize,
    values: Vec<f64>,
}

impl Field {
    pub fn from_values(grid: GridSpec, components: usize, values: Vec<f64>) -> Result<Self> {
        if components == 0 {
            return Err(shape("field needs at least one component"));
        }
        if values.len() != grid.cell_count() * components {
            return Err(shape(format!(
                "expected {} values, got {}",
                grid.cell_count() * components,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(domain(format!("non-finite field value {v}")));
        }
        Ok(Self {
            grid,
            components,
            values,
        })
    }

    pub fn constant(grid: GridSpec, value: &[f64]) -> Self {
        let values = (0..grid.cell_count())
            .flat_map(|_| value.iter().copied())
            .collect();
        Self {
            grid,
            components: value.len(),
            values,
        }
    }

    pub fn zeros(grid: GridSpec, components: usize) -> Self {
        Self {
            grid,
            components,
            values: vec![0.0; grid.cell_count() * components],
        }
    }

    /// Samples `f` at cell centres.
    pub fn from_fn(
        grid: GridSpec,
        components: usize,
        mut f: impl FnMut([f64; 2], &mut [f64]),
    ) -> Self {
        let mut values = vec![0.0; grid.cell_count() * components];
        for (cell, chunk) in values.chunks_mut(components).enumerate() {
            f(grid.center(cell), chunk);
        }
        Self {
            grid,
            components,
            values,
        }
    }

    /// Builds a field without checking finiteness. Used on hot solver paths.
    pub(crate) fn from_raw(grid: GridSpec, components: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.cell_count() * components);
        Self {
            grid,
            components,
            values,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn cell(&self, cell: usize) -> &[f64] {
        &self.values[cell * self.components..(cell + 1) * self.components]
    }

    /// Extracts one component as a scalar field.
    pub fn component(&self, c: usize) -> Field {
        let values = self
            .values
            .iter()
            .skip(c)
            .step_by(self.components)
            .copied()
            .collect();
        Field::from_raw(self.grid, 1, values)
    }

    /// Pointwise Euclidean magnitude per cell.
    pub fn magnitudes(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.chunks(self.components).map(|c| {
            if c.len() == 1 {
                c[0].abs()
            } else {
                c.iter().map(|v| v * v).sum::<f64>().sqrt()
            }
        })
    }

    /// Midpoint-rule integral of each component.
    pub fn integral(&self) -> Vec<f64> {
        let vol = self.grid.cell_volume();
        (0..self.components)
            .map(|c| {
                vol * neumaier_sum(self.values.iter().skip(c).step_by(self.components).copied())
            })
            .collect()
    }

    /// Mean value of each component over the torus.
    pub fn mean(&self) -> Vec<f64> {
        let n = self.grid.cell_count() as f64;
        (0..self.components)
            .map(|c| neumaier_sum(self.values.iter().skip(c).step_by(self.components).copied()) / n)
            .collect()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn check_compatible(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid || self.components != other.components {
            return Err(shape(format!(
                "field mismatch: {:?}x{} vs {:?}x{}",
                self.grid, self.components, other.grid, other.components
            )));
        }
        Ok(())
    }

    /// `alpha * self + other`.
    pub fn axpy(&self, alpha: f64, other: &Field) -> Result<Field> {
        self.check_compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| alpha * x + y)
            .collect();
        Ok(Field::from_raw(self.grid, self.components, values))
    }

    pub fn scale(&self, alpha: f64) -> Field {
        let values = self.values.iter().map(|x| alpha * x).collect();
        Field::from_raw(self.grid, self.components, values)
    }

    /// `self - other`.
    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.check_compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| x - y)
            .collect();
        Ok(Field::from_raw(self.grid, self.components, values))
    }

    /// Cell-average restriction onto a coarser grid or piecewise-constant
    /// prolongation onto a finer one. The grids must be nested.
    pub fn restrict_or_prolong(&self, target: &GridSpec) -> Result<Field> {
        if !self.grid.is_nested_with(target) {
            return Err(shape(format!(
                "grids not nested: {:?} -> {:?}",
                self.grid, target
            )));
        }
        let src = &self.grid;
        let nc = self.components;
        if target.cells == src.cells {
            return Ok(self.clone());
        }
        let mut out = vec![0.0; target.cell_count() * nc];
        if src.cells > target.cells {
            let r = src.cells / target.cells;
            let inv = 1.0 / (r.pow(src.dim as u32) as f64);
            for cell in 0..src.cell_count() {
                let idx = src.multi_index(cell);
                let t = target.linear_index([idx[0] / r, idx[1] / r]);
                for c in 0..nc {
                    out[t * nc + c] += self.values[cell * nc + c];
                }
            }
            out.iter_mut().for_each(|v| *v *= inv);
        } else {
            let r = target.cells / src.cells;
            for cell in 0..target.cell_count() {
                let idx = target.multi_index(cell);
                let s = src.linear_index([idx[0] / r, idx[1] / r]);
                out[cell * nc..(cell + 1) * nc].copy_from_slice(&self.values[s * nc..(s + 1) * nc]);
            }
        }
        Ok(Field::from_raw(*target, nc, out))
    }
}

/// Midpoint-rule `L^q` norm; `q = f64::INFINITY` gives the max over cells.
/// Vector fields use the pointwise Euclidean magnitude.
pub fn lq_norm(field: &Field, q: f64) -> Result<f64> {
    if q.is_nan() || q < 1.0 {
        return Err(domain(format!("L^q norm needs q >= 1, got {q}")));
    }
    if q.is_infinite() {
        return Ok(field.magnitudes().fold(0.0, f64::max));
    }
    let vol = field.grid().cell_volume();
    let sum = neumaier_sum(field.magnitudes().map(|m| m.powf(q)));
    Ok((vol * sum).powf(1.0 / q))
}

/// Compensated (Neumaier) summation. Keeps conservation checks at round-off level.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub(crate) fn require_same_grid(a: &GridSpec, b: &GridSpec) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("grid mismatch: {a:?} vs {b:?}")));
    }
    Ok(())
}
