//! Landscape equation and interface weights.
//!
//! The interface weight `a` is built from the solution of
//! `-Δw + Vw = 1` with `w = 0` outside the domain: `a = clamp(δ + w, δ,
//! cap)`. Near the domain boundary `w` is small, so boundary-hugging
//! interfaces become cheap, while `δ > 0` keeps the weight uniformly
//! elliptic.
//!
//! Discretization: 5-point Laplacian on cell centers. The Dirichlet value is
//! enforced *at cell faces*: a face to a masked-out or off-grid neighbor
//! sees `w = 0` half a cell away, contributing `2 w_c / h^2` instead of
//! `(w_c - w_nbr) / h^2`. (Equivalently, the ghost value is the odd
//! reflection `-w_c`.) This keeps the matrix symmetric positive definite and
//! the scheme second-order accurate; enforcing zero at ghost *centers* would
//! shift the boundary by `h/2` and lose an order. Grids of extent 1 in a
//! direction carry no flux in that direction, so an `nx x 1` grid solves the
//! genuine 1D problem.

use std::sync::Arc;

use crate::grid::{Grid, InterfaceFace, ScalarField};
use crate::{Error, Result};

/// Default relative-residual target for the landscape solve.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Default iteration cap: generous for conjugate gradient on these systems.
pub fn default_max_iter(grid: &Grid) -> usize {
    10 * grid.nx() * grid.ny()
}

/// How the weight field is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightSource {
    /// The supplied field is already the weight; it is only clamped.
    Direct,
    /// The supplied field is the landscape solution `w`; the weight is
    /// `clamp(delta + w, delta, cap)`.
    Landscape,
}

/// Parameters of the weight construction.
#[derive(Debug, Clone)]
pub struct WeightSpec {
    pub delta: f64,
    pub cap: f64,
    pub source: WeightSource,
    /// Optional declared Hölder exponent of `a` (used by diagnostics).
    pub beta: Option<f64>,
    /// Optional declared Hölder constant of `a`.
    pub c_beta: Option<f64>,
}

impl WeightSpec {
    pub fn new(delta: f64, cap: f64, source: WeightSource) -> Result<WeightSpec> {
        let spec = WeightSpec { delta, cap, source, beta: None, c_beta: None };
        spec.validate()?;
        Ok(spec)
    }

    /// Declares Hölder data `|a(x) - a(y)| <= c_beta |x - y|^beta`.
    pub fn with_holder(mut self, beta: f64, c_beta: f64) -> Result<WeightSpec> {
        self.beta = Some(beta);
        self.c_beta = Some(c_beta);
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::Invalid(format!("delta = {} must be positive", self.delta)));
        }
        if !(self.cap.is_finite() && self.cap >= self.delta) {
            return Err(Error::Invalid(format!(
                "cap = {} must be at least delta = {}",
                self.cap, self.delta
            )));
        }
        if let Some(beta) = self.beta {
            if !(beta > 0.0 && beta <= 1.0) {
                return Err(Error::Invalid(format!("beta = {beta} outside (0, 1]")));
            }
        }
        if let Some(c) = self.c_beta {
            if !(c.is_finite() && c >= 0.0) {
                return Err(Error::Invalid(format!("c_beta = {c} must be >= 0")));
            }
        }
        Ok(())
    }
}

/// Result of a landscape solve.
#[derive(Debug, Clone)]
pub struct LandscapeSolution {
    /// Solution of `-Δw + Vw = 1`, one value per in-domain cell.
    pub w: ScalarField,
    /// Conjugate-gradient iterations used.
    pub iterations: usize,
    /// Final `||1 - Aw|| / ||1||` (Euclidean norms).
    pub relative_residual: f64,
}

/// Per-cell diagonal face count: interior faces contribute 1, Dirichlet
/// faces 2, skipped (extent-1) directions 0.
fn stencil_diagonals(grid: &Grid) -> Vec<f64> {
    let use_x = grid.nx() > 1;
    let use_y = grid.ny() > 1;
    (0..grid.n_cells())
        .map(|c| {
            let (ix, iy) = grid.coords(c);
            let mut diag = 0.0;
            if use_x {
                diag += if ix > 0 && grid.in_domain(ix - 1, iy) { 1.0 } else { 2.0 };
                diag += if grid.in_domain(ix + 1, iy) { 1.0 } else { 2.0 };
            }
            if use_y {
                diag += if iy > 0 && grid.in_domain(ix, iy - 1) { 1.0 } else { 2.0 };
                diag += if grid.in_domain(ix, iy + 1) { 1.0 } else { 2.0 };
            }
            diag
        })
        .collect()
}

/// Applies `w -> -Δ_h w + V w` into `out`.
fn apply_operator(grid: &Grid, diag: &[f64], v: &[f64], w: &[f64], out: &mut [f64]) {
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let use_x = grid.nx() > 1;
    let use_y = grid.ny() > 1;
    for c in 0..grid.n_cells() {
        let (ix, iy) = grid.coords(c);
        let mut acc = diag[c] * w[c];
        if use_x {
            if ix > 0 {
                if let Some(nb) = grid.cell_at(ix - 1, iy) {
                    acc -= w[nb];
                }
            }
            if let Some(nb) = grid.cell_at(ix + 1, iy) {
                acc -= w[nb];
            }
        }
        if use_y {
            if iy > 0 {
                if let Some(nb) = grid.cell_at(ix, iy - 1) {
                    acc -= w[nb];
                }
            }
            if let Some(nb) = grid.cell_at(ix, iy + 1) {
                acc -= w[nb];
            }
        }
        out[c] = acc * inv_h2 + v[c] * w[c];
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_potential(v: &ScalarField) -> Result<()> {
    for (c, &value) in v.values().iter().enumerate() {
        if value < 0.0 {
            let (ix, iy) = v.grid().coords(c);
            return Err(Error::NegativePotential { ix, iy, value });
        }
    }
    Ok(())
}

/// Solves `-Δw + Vw = 1` with zero Dirichlet data outside the domain.
///
/// The system is symmetric positive definite, so plain conjugate gradient
/// applies; iteration stops once the relative residual drops to `tol`.
/// Errors on a negative potential entry or when `max_iter` is exhausted.
pub fn solve_landscape(v: &ScalarField, tol: f64, max_iter: usize) -> Result<LandscapeSolution> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::Invalid(format!("tol = {tol} must be positive")));
    }
    check_potential(v)?;
    let grid = v.grid().clone();
    let n = grid.n_cells();
    let diag = stencil_diagonals(&grid);

    let b_norm = (n as f64).sqrt(); // right-hand side is identically 1
    let mut x = vec![0.0; n];
    let mut r = vec![1.0; n];
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rs_old = dot(&r, &r);
    let mut iterations = 0;

    while rs_old.sqrt() / b_norm > tol {
        if iterations >= max_iter {
            return Err(Error::SolverDiverged {
                iterations,
                residual: rs_old.sqrt() / b_norm,
            });
        }
        apply_operator(&grid, &diag, v.values(), &p, &mut ap);
        let alpha = rs_old / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new = dot(&r, &r);
        let beta = rs_new / rs_old;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rs_old = rs_new;
        iterations += 1;
    }

    Ok(LandscapeSolution {
        w: ScalarField::new(grid, x)?,
        iterations,
        relative_residual: rs_old.sqrt() / b_norm,
    })
}

/// Relative residual `||1 - Aw|| / ||1||` of a candidate solution; lets
/// callers verify a solve independently of the solver's own bookkeeping.
pub fn residual_norm(v: &ScalarField, w: &ScalarField) -> Result<f64> {
    if !v.grid().same_grid(w.grid()) {
        return Err(Error::Mismatch("potential and solution live on different grids".into()));
    }
    check_potential(v)?;
    let grid = v.grid();
    let diag = stencil_diagonals(grid);
    let mut aw = vec![0.0; grid.n_cells()];
    apply_operator(grid, &diag, v.values(), w.values(), &mut aw);
    let res: f64 = aw.iter().map(|&y| (1.0 - y) * (1.0 - y)).sum();
    Ok(res.sqrt() / (grid.n_cells() as f64).sqrt())
}

/// Builds the interface weight from a field according to `spec`:
/// `clamp(delta + field, delta, cap)` for the landscape source, or
/// `clamp(field, delta, cap)` for a direct field. The result carries its
/// `[delta, cap]` bounds.
pub fn build_weight(field: &ScalarField, spec: &WeightSpec) -> Result<ScalarField> {
    spec.validate()?;
    let grid: Arc<Grid> = field.grid().clone();
    let values = field
        .values()
        .iter()
        .map(|&v| {
            let raw = match spec.source {
                WeightSource::Landscape => spec.delta + v,
                WeightSource::Direct => v,
            };
            raw.clamp(spec.delta, spec.cap)
        })
        .collect();
    let mut a = ScalarField::new(grid, values)?;
    a.set_bounds(spec.delta, spec.cap);
    Ok(a)
}

/// Weight of an interface face: the mean of the two adjacent cell values.
/// Exact for fields that are affine in the face-normal direction, since the
/// face midpoint bisects the segment between the two cell centers.
pub fn face_weight(a: &ScalarField, f: &InterfaceFace) -> f64 {
    0.5 * (a.value(f.cell_a) + a.value(f.cell_b))
}
