//! Grids of square cells, scalar fields, labeled partitions, and interface
//! extraction.
//!
//! A [`Grid`] is an `nx x ny` rectangle of square cells of side `h`, with an
//! optional mask selecting the cells that belong to the domain. Cell `(ix,
//! iy)` has center `((ix + 0.5)h, (iy + 0.5)h)`. Fields and partitions store
//! one value per *in-domain* cell in row-major order; the grid owns the
//! mapping between full-rectangle positions and that compact ordering.
//!
//! Adjacency is the 4-neighborhood everywhere: two cells are neighbors when
//! they share a face of length `h`, and the same relation defines both the
//! interface of a partition and phase connectivity. Areas are `h^2` per cell
//! and interface lengths are `h` per face, so discrete perimeters and volumes
//! scale like their continuum counterparts.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::{Error, Result};

const NO_CELL: u32 = u32::MAX;

/// Rectangular grid of square cells with an optional domain mask.
#[derive(Debug)]
pub struct Grid {
    nx: usize,
    ny: usize,
    h: f64,
    /// One flag per rectangle position, row-major; `true` = in-domain.
    mask: Vec<bool>,
    /// Full index -> compact in-domain index (or `NO_CELL`).
    compact: Vec<u32>,
    /// Compact in-domain index -> full index.
    cells: Vec<u32>,
}

impl Grid {
    /// Builds a grid from an explicit mask (`true` marks in-domain cells).
    pub fn new(nx: usize, ny: usize, h: f64, mask: Vec<bool>) -> Result<Arc<Grid>> {
        if nx == 0 || ny == 0 {
            return Err(Error::Invalid(format!("grid extent {nx} x {ny} is empty")));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::Invalid(format!("cell size h = {h} must be positive")));
        }
        if mask.len() != nx * ny {
            return Err(Error::Invalid(format!(
                "mask has {} entries, expected {}",
                mask.len(),
                nx * ny
            )));
        }
        let mut compact = vec![NO_CELL; nx * ny];
        let mut cells = Vec::new();
        for (full, &inside) in mask.iter().enumerate() {
            if inside {
                compact[full] = cells.len() as u32;
                cells.push(full as u32);
            }
        }
        if cells.is_empty() {
            return Err(Error::Invalid("mask excludes every cell".into()));
        }
        Ok(Arc::new(Grid { nx, ny, h, mask, compact, cells }))
    }

    /// Builds a full rectangle with no masked-out cells.
    pub fn rect(nx: usize, ny: usize, h: f64) -> Result<Arc<Grid>> {
        Grid::new(nx, ny, h, vec![true; nx * ny])
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of in-domain cells.
    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    /// Total domain area `h^2 * n_cells`.
    pub fn domain_area(&self) -> f64 {
        self.h * self.h * self.n_cells() as f64
    }

    /// Whether rectangle position `(ix, iy)` is in the domain.
    pub fn in_domain(&self, ix: usize, iy: usize) -> bool {
        ix < self.nx && iy < self.ny && self.mask[iy * self.nx + ix]
    }

    /// Compact index of cell `(ix, iy)`, if in-domain.
    pub fn cell_at(&self, ix: usize, iy: usize) -> Option<usize> {
        if ix >= self.nx || iy >= self.ny {
            return None;
        }
        match self.compact[iy * self.nx + ix] {
            NO_CELL => None,
            c => Some(c as usize),
        }
    }

    /// Rectangle coordinates of compact cell `c`.
    pub fn coords(&self, c: usize) -> (usize, usize) {
        let full = self.cells[c] as usize;
        (full % self.nx, full / self.nx)
    }

    /// Center of compact cell `c`.
    pub fn center(&self, c: usize) -> [f64; 2] {
        let (ix, iy) = self.coords(c);
        [(ix as f64 + 0.5) * self.h, (iy as f64 + 0.5) * self.h]
    }

    /// In-domain 4-neighbors of compact cell `c`, in -x, +x, -y, +y order.
    pub fn neighbors(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        let (ix, iy) = self.coords(c);
        let deltas = [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)];
        deltas.into_iter().filter_map(move |(dx, dy)| {
            let jx = ix as i64 + dx;
            let jy = iy as i64 + dy;
            if jx < 0 || jy < 0 {
                return None;
            }
            self.cell_at(jx as usize, jy as usize)
        })
    }

    /// Number of rectangle-edge or masked-out faces of compact cell `c`.
    pub fn exterior_faces(&self, c: usize) -> usize {
        4 - self.neighbors(c).count()
    }

    /// Structural equality: two grids are interchangeable when extents, cell
    /// size, and mask agree (fields loaded from different files may share a
    /// grid in this sense without sharing an allocation).
    pub fn same_grid(&self, other: &Grid) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.h == other.h && self.mask == other.mask
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }
}

/// One real value per in-domain cell.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
    /// Set by weight construction: values are guaranteed inside
    /// `[lower, upper]`.
    bounds: Option<(f64, f64)>,
}

impl ScalarField {
    /// Wraps per-cell values; every entry must be finite.
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<ScalarField> {
        if values.len() != grid.n_cells() {
            return Err(Error::Mismatch(format!(
                "field has {} values for a grid of {} cells",
                values.len(),
                grid.n_cells()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let (ix, iy) = grid.coords(pos);
            return Err(Error::Invalid(format!(
                "non-finite field value at cell ({ix}, {iy})"
            )));
        }
        Ok(ScalarField { grid, values, bounds: None })
    }

    /// Constant field.
    pub fn constant(grid: Arc<Grid>, value: f64) -> Result<ScalarField> {
        let n = grid.n_cells();
        ScalarField::new(grid, vec![value; n])
    }

    /// Field sampled at cell centers.
    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(f64, f64) -> f64) -> Result<ScalarField> {
        let values = (0..grid.n_cells())
            .map(|c| {
                let [x, y] = grid.center(c);
                f(x, y)
            })
            .collect();
        ScalarField::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, c: usize) -> f64 {
        self.values[c]
    }

    /// Declared `[lower, upper]` bounds, present on weight fields.
    pub fn bounds(&self) -> Option<(f64, f64)> {
        self.bounds
    }

    pub(crate) fn set_bounds(&mut self, lower: f64, upper: f64) {
        self.bounds = Some((lower, upper));
    }
}

/// Partition of the in-domain cells into `N` labeled phases.
///
/// Labels run from 1 to `N` inclusive; phases may be empty. Each in-domain
/// cell carries exactly one label, so phase volumes always sum to the domain
/// area.
#[derive(Debug, Clone)]
pub struct Partition {
    grid: Arc<Grid>,
    n_labels: u32,
    labels: Vec<u32>,
}

impl Partition {
    /// Wraps per-cell labels, validating the range `1..=n_labels`.
    pub fn new(grid: Arc<Grid>, n_labels: u32, labels: Vec<u32>) -> Result<Partition> {
        if n_labels == 0 {
            return Err(Error::Invalid("a partition needs at least one label".into()));
        }
        if labels.len() != grid.n_cells() {
            return Err(Error::Mismatch(format!(
                "partition has {} labels for a grid of {} cells",
                labels.len(),
                grid.n_cells()
            )));
        }
        if let Some(pos) = labels.iter().position(|&l| l < 1 || l > n_labels) {
            let (ix, iy) = grid.coords(pos);
            return Err(Error::Invalid(format!(
                "label {} at cell ({ix}, {iy}) outside 1..={n_labels}",
                labels[pos]
            )));
        }
        Ok(Partition { grid, n_labels, labels })
    }

    /// Single-phase partition with every cell labeled `label`.
    pub fn uniform(grid: Arc<Grid>, n_labels: u32, label: u32) -> Result<Partition> {
        let n = grid.n_cells();
        Partition::new(grid, n_labels, vec![label; n])
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn n_labels(&self) -> u32 {
        self.n_labels
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label(&self, c: usize) -> u32 {
        self.labels[c]
    }

    /// Copy with one cell relabeled (used by tests and small edits).
    pub fn with_label(&self, c: usize, label: u32) -> Result<Partition> {
        if label < 1 || label > self.n_labels {
            return Err(Error::Invalid(format!(
                "label {label} outside 1..={}",
                self.n_labels
            )));
        }
        let mut labels = self.labels.clone();
        labels[c] = label;
        Ok(Partition { grid: self.grid.clone(), n_labels: self.n_labels, labels })
    }
}

/// One unit of interface: the shared face between two 4-neighbor cells that
/// carry different labels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceFace {
    /// Compact index of the earlier cell in row-major order.
    pub cell_a: usize,
    /// Compact index of the later cell (right or below `cell_a`).
    pub cell_b: usize,
    /// Geometric midpoint of the shared face.
    pub midpoint: [f64; 2],
    /// Face length; always the grid's `h`.
    pub length: f64,
}

/// Collects every interface face of `p`.
///
/// Cells are scanned in row-major order and each cell contributes its +x
/// face before its +y face, so the output order is deterministic and each
/// face appears exactly once.
pub fn extract_interface(p: &Partition) -> Vec<InterfaceFace> {
    let grid = p.grid();
    let h = grid.h();
    let mut faces = Vec::new();
    for c in 0..grid.n_cells() {
        let (ix, iy) = grid.coords(c);
        let la = p.label(c);
        if let Some(cb) = grid.cell_at(ix + 1, iy) {
            if p.label(cb) != la {
                faces.push(InterfaceFace {
                    cell_a: c,
                    cell_b: cb,
                    midpoint: [(ix as f64 + 1.0) * h, (iy as f64 + 0.5) * h],
                    length: h,
                });
            }
        }
        if let Some(cb) = grid.cell_at(ix, iy + 1) {
            if p.label(cb) != la {
                faces.push(InterfaceFace {
                    cell_a: c,
                    cell_b: cb,
                    midpoint: [(ix as f64 + 0.5) * h, (iy as f64 + 1.0) * h],
                    length: h,
                });
            }
        }
    }
    faces
}

/// Phase volumes `h^2 * (cell count)`, indexed by `label - 1`.
pub fn phase_volumes(p: &Partition) -> Vec<f64> {
    let counts = phase_cell_counts(p);
    let cell_area = p.grid().h() * p.grid().h();
    counts.iter().map(|&n| cell_area * n as f64).collect()
}

/// Per-phase cell counts, indexed by `label - 1`.
pub fn phase_cell_counts(p: &Partition) -> Vec<u64> {
    let mut counts = vec![0u64; p.n_labels() as usize];
    for &l in p.labels() {
        counts[(l - 1) as usize] += 1;
    }
    counts
}

/// Symmetric-difference distance `sum_i |W_i xor W_i'|`.
///
/// Each cell whose label differs lies in the symmetric difference of exactly
/// two phases, so the distance is `2 h^2` times the number of differing
/// cells. Errors when the grids or label counts disagree.
pub fn symmetric_difference_distance(p: &Partition, q: &Partition) -> Result<f64> {
    if !p.grid().same_grid(q.grid()) {
        return Err(Error::Mismatch("partitions live on different grids".into()));
    }
    if p.n_labels() != q.n_labels() {
        return Err(Error::Mismatch(format!(
            "partitions have {} and {} labels",
            p.n_labels(),
            q.n_labels()
        )));
    }
    let differing = p
        .labels()
        .iter()
        .zip(q.labels())
        .filter(|(a, b)| a != b)
        .count();
    let h = p.grid().h();
    Ok(2.0 * h * h * differing as f64)
}

/// 4-connected components of phase `label`, each a list of compact cell
/// indices in discovery order. Components are ordered by their smallest
/// cell index, so the output is deterministic.
pub fn connected_components(p: &Partition, label: u32) -> Vec<Vec<usize>> {
    let grid = p.grid();
    let mut seen = vec![false; grid.n_cells()];
    let mut components = Vec::new();
    for start in 0..grid.n_cells() {
        if seen[start] || p.label(start) != label {
            continue;
        }
        let mut component = Vec::new();
        let mut queue = VecDeque::new();
        seen[start] = true;
        queue.push_back(start);
        while let Some(c) = queue.pop_front() {
            component.push(c);
            for nb in grid.neighbors(c) {
                if !seen[nb] && p.label(nb) == label {
                    seen[nb] = true;
                    queue.push_back(nb);
                }
            }
        }
        components.push(component);
    }
    components
}
