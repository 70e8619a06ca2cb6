use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::random_data::Ensemble;
use crate::statistics::functional::{coarsest_grid, TimeSelector};
use crate::statistics::resolved_weights;
use crate::torus_mesh::{require_same_grid, Field, Quantity};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BarycenterOptions {
    /// Stop once the first-order residual is at most this.
    pub tol: f64,
    pub max_iter: usize,
    /// Iterate even when `r = q = 2` has a closed form.
    pub force_iterative: bool,
}

impl Default for BarycenterOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 500,
            force_iterative: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarycenterResult {
    pub minimizer: Field,
    pub r: f64,
    pub q: f64,
    pub time: Option<f64>,
    /// `sum_n w_n |Y_n - Z|_q^r`.
    pub objective: f64,
    pub iterations: usize,
    /// `max_cell |d objective / d Z_cell| / cell_volume`.
    pub first_order_residual: f64,
    pub converged: bool,
}

/// Per-member and per-cell quantities shared by the objective and its gradient.
struct Problem<'a> {
    fields: &'a [&'a Field],
    weights: &'a [f64],
    r: f64,
    q: f64,
    nc: usize,
    cells: usize,
    vol: f64,
}

impl Problem<'_> {
    /// Pointwise magnitudes `|Y_n(x) - Z(x)|` for member `n`.
    fn magnitudes(&self, n: usize, z: &[f64]) -> Vec<f64> {
        let y = self.fields[n].values();
        (0..self.cells)
            .map(|c| {
                let s: f64 = (0..self.nc)
                    .map(|i| (y[c * self.nc + i] - z[c * self.nc + i]).powi(2))
                    .sum();
                s.sqrt()
            })
            .collect()
    }

    fn norm(&self, mags: &[f64]) -> f64 {
        if self.q.is_infinite() {
            return mags.iter().copied().fold(0.0, f64::max);
        }
        (self.vol * mags.iter().map(|m| m.powf(self.q)).sum::<f64>()).powf(1.0 / self.q)
    }

    fn objective(&self, z: &[f64]) -> f64 {
        (0..self.fields.len())
            .map(|n| self.weights[n] * self.norm(&self.magnitudes(n, z)).powf(self.r))
            .sum()
    }

    /// Gradient scaled by `1 / vol` and a positive diagonal curvature
    /// estimate per cell (the exact diagonal when `q = 2`).
    fn gradient(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut g = vec![0.0; z.len()];
        let mut diag = vec![0.0; self.cells];
        let (r, q) = (self.r, self.q);
        for n in 0..self.fields.len() {
            let mags = self.magnitudes(n, z);
            let norm = self.norm(&mags);
            if norm == 0.0 {
                continue;
            }
            let y = self.fields[n].values();
            let outer = self.weights[n] * r * norm.powf(r - q);
            for c in 0..self.cells {
                let m = mags[c];
                if m == 0.0 {
                    continue;
                }
                let coef = outer * m.powf(q - 2.0);
                for i in 0..self.nc {
                    let k = c * self.nc + i;
                    g[k] -= coef * (y[k] - z[k]);
                }
                diag[c] += coef * (q - 1.0).max(1.0)
                    + outer * (r - q).max(0.0) * m.powf(2.0 * q - 2.0) * self.vol / norm.powf(q);
            }
        }
        (g, diag)
    }
}

const LBFGS_MEMORY: usize = 8;
const ROUNDOFF: f64 = 1e-14;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Two-loop recursion with the per-cell curvature estimate as initial
/// inverse Hessian.
fn lbfgs_direction(
    g: &[f64],
    diag: &[f64],
    nc: usize,
    memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>,
) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    for (k, qk) in q.iter_mut().enumerate() {
        *qk /= diag[k / nc].max(f64::MIN_POSITIVE);
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

fn residual(g: &[f64]) -> f64 {
    g.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// Minimiser of `Z -> sum_n w_n |Y_n - Z|_{L^q}^r` over fields on a common
/// grid. Pointwise magnitudes are Euclidean, so vector fields are handled
/// component-coupled.
///
/// Starting from the weighted pointwise mean, the objective is decreased by
/// L-BFGS steps (preconditioned by a per-cell curvature estimate) with
/// Armijo backtracking, so it never exceeds its value at the mean.
pub fn barycenter_of_fields(
    fields: &[&Field],
    weights: &[f64],
    r: f64,
    q: f64,
    opts: &BarycenterOptions,
) -> Result<BarycenterResult> {
    if !(r > 1.0) {
        return Err(domain(format!("barycenter order r must exceed 1, got {r}")));
    }
    if !(q >= 1.0) || q.is_infinite() {
        return Err(domain(format!(
            "ambient exponent q must be finite and >= 1, got {q}"
        )));
    }
    let first = *fields.first().ok_or(Error::EmptyEnsemble)?;
    if fields.len() != weights.len() {
        return Err(crate::error::shape("one weight per field"));
    }
    for f in fields {
        require_same_grid(f.grid(), first.grid())?;
        if f.components() != first.components() {
            return Err(crate::error::shape(
                "fields have different component counts",
            ));
        }
    }
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|w| !(*w > 0.0)) {
        return Err(domain("barycenter weights must be positive"));
    }
    let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let grid = *first.grid();
    let prob = Problem {
        fields,
        weights: &weights,
        r,
        q,
        nc: first.components(),
        cells: grid.cell_count(),
        vol: grid.cell_volume(),
    };

    let mut z = vec![0.0; first.values().len()];
    for (f, w) in fields.iter().zip(&weights) {
        for (zi, yi) in z.iter_mut().zip(f.values()) {
            *zi += w * yi;
        }
    }
    let (mut g, mut diag) = prob.gradient(&z);
    let mut obj = prob.objective(&z);
    let mut res = residual(&g) / prob.vol;
    let mut iterations = 0;
    let closed_form = r == 2.0 && q == 2.0 && !opts.force_iterative;

    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(LBFGS_MEMORY);
    while !closed_form && res > opts.tol && iterations < opts.max_iter {
        iterations += 1;
        let dir = lbfgs_direction(&g, &diag, prob.nc, &memory);
        let mut slope: f64 = dot(&g, &dir) * prob.vol;
        let dir = if slope < 0.0 {
            dir
        } else {
            // curvature pairs went stale; restart from the preconditioned gradient
            memory.clear();
            let d = lbfgs_direction(&g, &diag, prob.nc, &memory);
            slope = dot(&g, &d) * prob.vol;
            d
        };
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let cand: Vec<f64> = z.iter().zip(&dir).map(|(a, b)| a + t * b).collect();
            let o = prob.objective(&cand);
            // near the optimum objective differences fall below round-off
            if o <= obj + 1e-4 * t * slope + ROUNDOFF * obj.abs() {
                accepted = Some((cand, o));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, o)) = accepted else { break };
        let (g_new, diag_new) = prob.gradient(&cand);
        let s_k: Vec<f64> = cand.iter().zip(&z).map(|(a, b)| a - b).collect();
        let y_k: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s_k, &y_k);
        if sy > 1e-300 {
            if memory.len() == LBFGS_MEMORY {
                memory.pop_front();
            }
            memory.push_back((s_k, y_k, 1.0 / sy));
        }
        z = cand;
        obj = o;
        g = g_new;
        diag = diag_new;
        res = residual(&g) / prob.vol;
    }
    Ok(BarycenterResult {
        minimizer: Field::from_values(grid, prob.nc, z)?,
        r,
        q,
        time: None,
        objective: obj,
        iterations,
        first_order_residual: res,
        converged: res <= opts.tol || closed_form,
    })
}

/// `sum_n w_n |Y_n - Z|_{L^q}^r`.
pub fn barycenter_objective(
    fields: &[&Field],
    weights: &[f64],
    z: &Field,
    r: f64,
    q: f64,
) -> Result<f64> {
    let prob = Problem {
        fields,
        weights,
        r,
        q,
        nc: z.components(),
        cells: z.grid().cell_count(),
        vol: z.grid().cell_volume(),
    };
    for f in fields {
        require_same_grid(f.grid(), z.grid())?;
    }
    Ok(prob.objective(z.values()))
}

/// Empirical r-barycenter of one quantity at one time slice, over completed
/// members (weights renormalised) restricted to their coarsest grid.
pub fn r_barycenter(
    ensemble: &Ensemble,
    quantity: Quantity,
    r: f64,
    q: f64,
    time: TimeSelector,
    opts: &BarycenterOptions,
) -> Result<BarycenterResult> {
    let (weights, _, _) = resolved_weights(ensemble);
    if weights.is_empty() {
        return Err(domain("no completed member"));
    }
    let members = ensemble.members();
    let grid = coarsest_grid(weights.iter().map(|(i, _)| &members[*i].report.trajectory))?;
    let mut fields = Vec::with_capacity(weights.len());
    let mut t = None;
    for (i, _) in &weights {
        let traj = &members[*i].report.trajectory;
        let level = match time {
            TimeSelector::Average => return Err(domain("barycenters are taken per time slice")),
            sel => sel.level(traj)?,
        };
        t.get_or_insert(traj.states()[level].time());
        fields.push(traj.field(quantity, level).restrict_or_prolong(&grid)?);
    }
    let refs: Vec<&Field> = fields.iter().collect();
    let w: Vec<f64> = weights.iter().map(|(_, w)| *w).collect();
    let mut res = barycenter_of_fields(&refs, &w, r, q, opts)?;
    res.time = t;
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus_mesh::GridSpec;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_fields(seed: u64, n: usize, cells: usize, nc: usize) -> (Vec<Field>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = GridSpec::unit(1, cells).unwrap();
        let fields = (0..n)
            .map(|_| {
                Field::from_values(
                    grid,
                    nc,
                    (0..cells * nc)
                        .map(|_| rng.random_range(-1.0..1.0))
                        .collect(),
                )
                .unwrap()
            })
            .collect();
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
        let s: f64 = w.iter().sum();
        (fields, w.iter().map(|x| x / s).collect())
    }

    #[test]
    fn two_constants_midpoint() {
        let g = GridSpec::unit(1, 4).unwrap();
        let (a, b) = (Field::constant(g, &[0.0]), Field::constant(g, &[1.0]));
        for r in [2.0, 1.5] {
            let res =
                barycenter_of_fields(&[&a, &b], &[0.5, 0.5], r, 2.0, &Default::default()).unwrap();
            assert!(res
                .minimizer
                .values()
                .iter()
                .all(|v| (v - 0.5).abs() < 1e-9));
        }
    }

    #[test]
    fn closed_form_matches_iteration() {
        let (f, w) = random_fields(1, 5, 16, 2);
        let refs: Vec<&Field> = f.iter().collect();
        let a = barycenter_of_fields(&refs, &w, 2.0, 2.0, &Default::default()).unwrap();
        let opts = BarycenterOptions {
            force_iterative: true,
            ..Default::default()
        };
        let b = barycenter_of_fields(&refs, &w, 2.0, 2.0, &opts).unwrap();
        let d = a.minimizer.sub(&b.minimizer).unwrap();
        assert!(d.values().iter().all(|v| v.abs() <= 1e-10));
        assert_eq!(a.iterations, 0);
    }

    #[test]
    fn rejects_bad_order() {
        let g = GridSpec::unit(1, 4).unwrap();
        let a = Field::constant(g, &[0.0]);
        assert!(barycenter_of_fields(&[&a], &[1.0], 1.0, 2.0, &Default::default()).is_err());
    }

    #[test]
    fn permutation_and_merging_invariant() {
        let (f, w) = random_fields(9, 4, 8, 1);
        let refs: Vec<&Field> = f.iter().collect();
        let base = barycenter_of_fields(&refs, &w, 3.0, 2.0, &Default::default()).unwrap();
        let perm: Vec<&Field> = vec![&f[2], &f[0], &f[3], &f[1]];
        let pw = vec![w[2], w[0], w[3], w[1]];
        let p = barycenter_of_fields(&perm, &pw, 3.0, 2.0, &Default::default()).unwrap();
        // split member 0 into two equal halves
        let split: Vec<&Field> = vec![&f[0], &f[0], &f[1], &f[2], &f[3]];
        let sw = vec![w[0] / 2.0, w[0] / 2.0, w[1], w[2], w[3]];
        let s = barycenter_of_fields(&split, &sw, 3.0, 2.0, &Default::default()).unwrap();
        for other in [&p, &s] {
            let d = base.minimizer.sub(&other.minimizer).unwrap();
            assert!(d.values().iter().all(|v| v.abs() <= 1e-7));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn optimality(seed in 0u64..1000, n in 1usize..=8, cells in 2usize..=32, rq in 0usize..4) {
            let (r, q) = [(1.5, 2.0), (2.0, 4.0), (3.0, 2.0), (2.0, 2.0)][rq];
            let (f, w) = random_fields(seed, n, cells, 1);
            let refs: Vec<&Field> = f.iter().collect();
            let res = barycenter_of_fields(&refs, &w, r, q, &Default::default()).unwrap();
            prop_assert!(res.first_order_residual <= 1e-8, "residual {}", res.first_order_residual);
            let obj = |z: &Field| barycenter_objective(&refs, &w, z, r, q).unwrap();
            let slack = 1e-8;
            let mut mean = Field::zeros(*f[0].grid(), 1);
            for (fi, wi) in f.iter().zip(&w) {
                mean = fi.axpy(*wi, &mean).unwrap();
            }
            prop_assert!(res.objective <= obj(&mean) + slack);
            for fi in &f {
                prop_assert!(res.objective <= obj(fi) + slack);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
            for _ in 0..20 {
                let p: Vec<f64> = res.minimizer.values().iter().map(|v| v + 1e-3 * v.abs().max(1e-3) * rng.random_range(-1.0..1.0)).collect();
                let pf = Field::from_values(*f[0].grid(), 1, p).unwrap();
                prop_assert!(res.objective <= obj(&pf) + slack);
            }
        }
    }
}
