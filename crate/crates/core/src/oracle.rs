//! Exhaustive minimization over all label assignments of small instances.
//!
//! Intended as ground truth for optimizer testing: instances up to a few
//! tens of millions of assignments enumerate in seconds thanks to
//! incremental bookkeeping. Assignments are visited in mixed-radix label
//! order (cell 0 is the most significant digit, label 1 sorts first), so
//! the first assignment attaining the minimum is the lexicographically
//! smallest minimizer.
//!
//! The interface sum carried down the search tree is a fold over faces in a
//! fixed canonical order, so the value computed for an assignment does not
//! depend on the enumeration path; tie counting by exact float equality is
//! therefore meaningful.

use crate::energy::{bulk_from_counts, total_energy, BulkKind, EnergySpec};
use crate::grid::{Grid, Partition, ScalarField};
use crate::{Error, Result};
use std::sync::Arc;

/// Default cap on the number of enumerated assignments.
pub const DEFAULT_MAX_ASSIGNMENTS: u64 = 100_000_000;

/// Exact minimization result.
#[derive(Debug, Clone)]
pub struct OracleOutcome {
    /// Lexicographically smallest minimizer.
    pub minimizer: Partition,
    /// Its energy, evaluated by [`total_energy`] for comparability.
    pub j_min: f64,
    /// Number of assignments attaining the enumeration minimum (exact float
    /// equality; label permutations of a minimizer are counted).
    pub minimizer_count: u64,
    /// Total assignments enumerated, `n_labels ^ cells`.
    pub assignments: u64,
}

/// Comparison of a candidate partition against the exact optimum.
#[derive(Debug, Clone)]
pub struct GapReport {
    pub j_candidate: f64,
    pub j_min: f64,
    /// `j_candidate - j_min`; nonnegative up to float noise.
    pub gap: f64,
    /// `gap / max(|j_min|, 1)`.
    pub relative_gap: f64,
    /// Whether the candidate attains the optimum (gap below 1e-9).
    pub optimal: bool,
}

struct Search<'a> {
    n_labels: usize,
    /// Earlier in-domain neighbors of each cell with the face term
    /// `0.5 (a_c + a_d) h` precomputed.
    earlier: Vec<Vec<(usize, f64)>>,
    mult: Vec<f64>,
    spec: &'a EnergySpec,
    h: f64,
    q: Option<&'a ScalarField>,

    labels: Vec<u32>,
    counts: Vec<u64>,
    /// Interface sum of the assignment prefix, per depth.
    f_prefix: Vec<f64>,
    /// Per-depth per-phase q sums (weighted bulk only).
    q_prefix: Vec<Vec<f64>>,

    best_j: f64,
    best_labels: Vec<u32>,
    best_count: u64,
}

impl<'a> Search<'a> {
    fn leaf(&mut self) {
        let n = self.labels.len();
        let q_sums = self.q.map(|_| &self.q_prefix[n][..]);
        let g = bulk_from_counts(self.spec.bulk(), &self.counts, q_sums, self.h);
        let j = self.f_prefix[n] + g;
        if j < self.best_j {
            self.best_j = j;
            self.best_labels.copy_from_slice(&self.labels);
            self.best_count = 1;
        } else if j == self.best_j {
            self.best_count += 1;
        }
    }

    fn descend(&mut self, c: usize) {
        if c == self.labels.len() {
            self.leaf();
            return;
        }
        for l in 1..=self.n_labels as u32 {
            self.labels[c] = l;
            let mut f = self.f_prefix[c];
            for &(d, x) in &self.earlier[c] {
                let ld = self.labels[d];
                if ld != l {
                    f += (self.mult[(l - 1) as usize] + self.mult[(ld - 1) as usize]) * x;
                }
            }
            self.f_prefix[c + 1] = f;
            self.counts[(l - 1) as usize] += 1;
            if let Some(q) = self.q {
                let (head, tail) = self.q_prefix.split_at_mut(c + 1);
                tail[0].copy_from_slice(&head[c]);
                tail[0][(l - 1) as usize] += q.value(c);
            }
            self.descend(c + 1);
            self.counts[(l - 1) as usize] -= 1;
        }
    }
}

/// Number of assignments `n_labels ^ cells`, saturating at `u128::MAX`.
fn assignment_count(n_labels: u32, cells: usize) -> u128 {
    let mut total: u128 = 1;
    for _ in 0..cells {
        total = match total.checked_mul(n_labels as u128) {
            Some(t) => t,
            None => return u128::MAX,
        };
    }
    total
}

/// Enumerates every assignment of `n_labels` labels to the grid's cells and
/// returns the exact minimum of the energy.
///
/// Errors with the computed assignment count when it exceeds
/// `max_assignments`.
pub fn brute_force_min(
    grid: &Arc<Grid>,
    n_labels: u32,
    a: &ScalarField,
    spec: &EnergySpec,
    max_assignments: u64,
) -> Result<OracleOutcome> {
    if n_labels == 0 {
        return Err(Error::Invalid("need at least one label".into()));
    }
    if !grid.same_grid(a.grid()) {
        return Err(Error::Mismatch("weight field lives on a different grid".into()));
    }
    spec_check(spec, n_labels)?;
    let cells = grid.n_cells();
    let total = assignment_count(n_labels, cells);
    if total > max_assignments as u128 {
        return Err(Error::BudgetExceeded { assignments: total, budget: max_assignments });
    }

    let h = grid.h();
    let mut earlier: Vec<Vec<(usize, f64)>> = vec![Vec::new(); cells];
    for c in 0..cells {
        let (ix, iy) = grid.coords(c);
        // Both 4-neighbors that precede c in row-major order.
        for nb in [
            ix.checked_sub(1).and_then(|jx| grid.cell_at(jx, iy)),
            iy.checked_sub(1).and_then(|jy| grid.cell_at(ix, jy)),
        ]
        .into_iter()
        .flatten()
        {
            earlier[c].push((nb, 0.5 * (a.value(c) + a.value(nb)) * h));
        }
    }
    let mult: Vec<f64> = (1..=n_labels)
        .map(|l| spec.multiplier(l))
        .collect();
    let q = match spec.bulk().kind() {
        BulkKind::WeightedVolume => {
            let q = spec.bulk().q_weight().expect("validated");
            if !grid.same_grid(q.grid()) {
                return Err(Error::Mismatch("q field lives on a different grid".into()));
            }
            Some(q)
        }
        _ => None,
    };

    let mut search = Search {
        n_labels: n_labels as usize,
        earlier,
        mult,
        spec,
        h,
        q,
        labels: vec![1; cells],
        counts: vec![0; n_labels as usize],
        f_prefix: vec![0.0; cells + 1],
        q_prefix: vec![vec![0.0; n_labels as usize]; cells + 1],
        best_j: f64::INFINITY,
        best_labels: vec![1; cells],
        best_count: 0,
    };
    search.descend(0);

    let minimizer = Partition::new(grid.clone(), n_labels, search.best_labels)?;
    let j_min = total_energy(&minimizer, a, spec)?.total;
    Ok(OracleOutcome {
        minimizer,
        j_min,
        minimizer_count: search.best_count,
        assignments: total as u64,
    })
}

fn spec_check(spec: &EnergySpec, n_labels: u32) -> Result<()> {
    if spec.bulk().target_volumes().len() != n_labels as usize {
        return Err(Error::Mismatch(format!(
            "bulk term has {} phases, enumeration has {}",
            spec.bulk().target_volumes().len(),
            n_labels
        )));
    }
    if let Some(m) = spec.label_multipliers() {
        if m.len() != n_labels as usize {
            return Err(Error::Mismatch(format!(
                "{} label multipliers for {} labels",
                m.len(),
                n_labels
            )));
        }
    }
    Ok(())
}

/// Compares a candidate partition against the exact optimum of its instance.
/// Candidate and optimum are evaluated by the same [`total_energy`] path, so
/// a candidate equal to some minimizer reports a gap at float-noise level.
pub fn verify_against(
    p: &Partition,
    a: &ScalarField,
    spec: &EnergySpec,
    max_assignments: u64,
) -> Result<GapReport> {
    let outcome = brute_force_min(p.grid(), p.n_labels(), a, spec, max_assignments)?;
    let j_candidate = total_energy(p, a, spec)?.total;
    let gap = j_candidate - outcome.j_min;
    Ok(GapReport {
        j_candidate,
        j_min: outcome.j_min,
        gap,
        relative_gap: gap / outcome.j_min.abs().max(1.0),
        optimal: gap <= 1e-9,
    })
}
