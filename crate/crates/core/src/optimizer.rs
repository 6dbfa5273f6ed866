//! Local-move minimization of the partition energy.
//!
//! The optimizer alternates two move families: single-cell relabels in
//! checkerboard sweeps (iterated conditional modes) and ball "pour" moves
//! that relabel every cell of some source phases inside a Euclidean ball.
//! Both families evaluate exact energy deltas through the same code path
//! as [`crate::energy::energy_delta`], so accepted moves change the energy
//! by precisely the evaluated amount and monotone traces hold exactly.
//!
//! An optional geometric annealing schedule accepts uphill moves with
//! probability `exp(-delta/T)`; it is off by default because monotone
//! traces are part of the output contract.

use crate::energy::{delta_core, total_energy, BulkKind, EnergySpec};
use crate::grid::{extract_interface, phase_cell_counts, Grid, Partition, ScalarField};
use crate::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::sync::Arc;

/// Initial labeling strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitStrategy {
    /// Nearest of N seed cells placed by the RNG; ties go to the
    /// earliest-placed seed.
    VoronoiSeeds,
    /// Independent uniform labels.
    Random,
    /// N equal vertical bands, label increasing with x.
    Stripes,
    /// Basins of steepest ascent on the supplied field, merged down to at
    /// most N regions across the highest connecting saddles.
    WatershedMinusW,
}

/// Geometric cooling schedule: sweep k runs at `t0 * decay^(k-1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemperatureSchedule {
    pub t0: f64,
    pub decay: f64,
}

impl TemperatureSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.t0.is_finite() && self.t0 > 0.0) {
            return Err(Error::Invalid("temperature t0 must be finite and > 0".into()));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::Invalid("temperature decay must lie in (0, 1)".into()));
        }
        Ok(())
    }

    fn at_sweep(&self, sweep: u32) -> f64 {
        self.t0 * self.decay.powi(sweep.saturating_sub(1) as i32)
    }
}

/// Knobs for [`minimize`].
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub init: InitStrategy,
    pub seed: u64,
    pub max_sweeps: u32,
    pub pour_moves_per_sweep: u32,
    /// Sampled pour radii, inclusive on both ends; `radius_range.0 >= h`.
    pub radius_range: (f64, f64),
    /// Annealing schedule; `None` keeps every sweep strictly greedy.
    pub temperature: Option<TemperatureSchedule>,
}

impl OptimizerConfig {
    /// Defaults sized to the grid: pour radii from one cell up to an
    /// eighth of the short side.
    pub fn for_grid(grid: &Grid) -> OptimizerConfig {
        let h = grid.h();
        let short = grid.nx().min(grid.ny()) as f64;
        OptimizerConfig {
            init: InitStrategy::VoronoiSeeds,
            seed: 0,
            max_sweeps: 200,
            pour_moves_per_sweep: 8,
            radius_range: (h, h * (short / 8.0).max(2.0)),
            temperature: None,
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let (r_min, r_max) = self.radius_range;
        if !(r_min.is_finite() && r_max.is_finite() && r_min <= r_max) {
            return Err(Error::Invalid("pour radius range must be finite and ordered".into()));
        }
        if r_min < grid.h() {
            return Err(Error::Invalid(format!(
                "pour radius minimum {} is below the cell size {}",
                r_min,
                grid.h()
            )));
        }
        if self.max_sweeps == 0 {
            return Err(Error::Invalid("max_sweeps must be at least 1".into()));
        }
        if let Some(schedule) = &self.temperature {
            schedule.validate()?;
        }
        Ok(())
    }
}

/// One row of the per-sweep energy trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub sweep: u32,
    /// Interface term F at the end of the sweep.
    pub f: f64,
    /// Bulk term G at the end of the sweep.
    pub g: f64,
    /// Total J = F + G.
    pub j: f64,
    /// Accepted single-cell relabels during the sweep.
    pub flips: u32,
    /// Accepted pour moves during the sweep.
    pub pours: u32,
    /// Temperature in effect (0 when annealing is disabled).
    pub temperature: f64,
}

/// Energy history of a [`minimize`] run. Record 0 is the initial state;
/// each later record closes one sweep.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnergyTrace {
    records: Vec<TraceRecord>,
}

impl EnergyTrace {
    pub fn from_records(records: Vec<TraceRecord>) -> EnergyTrace {
        EnergyTrace { records }
    }

    pub fn records(&self) -> &[TraceRecord] {
        &self.records
    }

    /// True when total energy never increases from record to record.
    pub fn j_non_increasing(&self) -> bool {
        self.records.windows(2).all(|w| w[1].j <= w[0].j)
    }
}

/// Result of a [`minimize`] run: the best partition encountered and the
/// full energy trace.
#[derive(Debug, Clone)]
pub struct MinimizeOutcome {
    pub partition: Partition,
    pub trace: EnergyTrace,
}

/// Relabels every in-ball cell of some source phases to phases outside the
/// source set: cells within `radius` of the center cell whose label is a
/// key of `targets` take the mapped label.
#[derive(Debug, Clone, PartialEq)]
pub struct PourMove {
    center: usize,
    radius: f64,
    targets: BTreeMap<u32, u32>,
}

impl PourMove {
    /// Validates the source/target structure: sources form a nonempty
    /// proper subset of the labels and targets stay outside it.
    pub fn new(
        center: usize,
        radius: f64,
        targets: BTreeMap<u32, u32>,
        n_labels: u32,
    ) -> Result<PourMove> {
        if targets.is_empty() {
            return Err(Error::Invalid("pour move needs at least one source phase".into()));
        }
        if targets.len() >= n_labels as usize {
            return Err(Error::Invalid(
                "pour sources must form a proper subset of the labels".into(),
            ));
        }
        for (&src, &dst) in &targets {
            if src == 0 || src > n_labels || dst == 0 || dst > n_labels {
                return Err(Error::Invalid(format!(
                    "pour relabel {src} -> {dst} is outside 1..={n_labels}"
                )));
            }
            if targets.contains_key(&dst) {
                return Err(Error::Invalid(format!(
                    "pour target {dst} is itself a source phase"
                )));
            }
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::Invalid("pour radius must be finite and positive".into()));
        }
        Ok(PourMove { center, radius, targets })
    }

    pub fn center(&self) -> usize {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn targets(&self) -> &BTreeMap<u32, u32> {
        &self.targets
    }
}

/// In-domain cells whose centers lie within `radius` of the center cell's
/// center, in row-major order.
fn cells_in_ball(grid: &Grid, center: usize, radius: f64) -> Vec<usize> {
    let h = grid.h();
    let (cx, cy) = grid.coords(center);
    let reach = (radius / h).floor() as i64;
    let lo_x = (cx as i64 - reach).max(0) as usize;
    let hi_x = ((cx as i64 + reach) as usize).min(grid.nx() - 1);
    let lo_y = (cy as i64 - reach).max(0) as usize;
    let hi_y = ((cy as i64 + reach) as usize).min(grid.ny() - 1);
    let rr = radius * radius;
    let mut cells = Vec::new();
    for jy in lo_y..=hi_y {
        for jx in lo_x..=hi_x {
            let dx = jx as i64 - cx as i64;
            let dy = jy as i64 - cy as i64;
            if ((dx * dx + dy * dy) as f64) * h * h <= rr {
                if let Some(c) = grid.cell_at(jx, jy) {
                    cells.push(c);
                }
            }
        }
    }
    cells
}

/// The (cell, new label) list a pour move induces on the given labels.
fn pour_changes(grid: &Grid, labels: &[u32], m: &PourMove) -> Vec<(usize, u32)> {
    cells_in_ball(grid, m.center, m.radius)
        .into_iter()
        .filter_map(|c| m.targets.get(&labels[c]).map(|&dst| (c, dst)))
        .collect()
}

/// Applies a pour move, returning the relabeled partition. Because poured
/// cells leave the source set, applying the same move twice equals applying
/// it once.
pub fn apply_pour(p: &Partition, m: &PourMove) -> Result<Partition> {
    let grid = p.grid();
    if m.center >= grid.n_cells() {
        return Err(Error::Invalid(format!(
            "pour center {} is outside the {}-cell domain",
            m.center,
            grid.n_cells()
        )));
    }
    if m.radius < grid.h() {
        return Err(Error::Invalid(format!(
            "pour radius {} is below the cell size {}",
            m.radius,
            grid.h()
        )));
    }
    for (&src, &dst) in &m.targets {
        if src > p.n_labels() || dst > p.n_labels() {
            return Err(Error::Mismatch(format!(
                "pour relabel {src} -> {dst} exceeds the partition's {} labels",
                p.n_labels()
            )));
        }
    }
    let mut labels = p.labels().to_vec();
    for (c, dst) in pour_changes(grid, p.labels(), m) {
        labels[c] = dst;
    }
    Partition::new(grid.clone(), p.n_labels(), labels)
}

/// Enumerates the candidate pours for one (center, radius) ball and their
/// exact energy deltas, cheapest first on ties of enumeration order.
///
/// Candidates: (a) pour every other in-ball phase into the in-ball
/// majority phase; (b) pour each minority phase alone into the phase it
/// shares the most interface weight with near the ball. Returns an empty
/// list when the ball holds a single phase.
pub fn pour_candidates(
    p: &Partition,
    a: &ScalarField,
    spec: &EnergySpec,
    center: usize,
    radius: f64,
) -> Result<Vec<(PourMove, f64)>> {
    let grid = p.grid();
    if center >= grid.n_cells() {
        return Err(Error::Invalid(format!(
            "pour center {} is outside the {}-cell domain",
            center,
            grid.n_cells()
        )));
    }
    let labels = p.labels();
    let ball = cells_in_ball(grid, center, radius);
    let mut in_ball_count: BTreeMap<u32, u32> = BTreeMap::new();
    for &c in &ball {
        *in_ball_count.entry(labels[c]).or_insert(0) += 1;
    }
    if in_ball_count.len() < 2 {
        return Ok(Vec::new());
    }
    // Majority phase in the ball, smallest label on ties.
    let majority = in_ball_count
        .iter()
        .max_by(|(la, ca), (lb, cb)| ca.cmp(cb).then(lb.cmp(la)))
        .map(|(&l, _)| l)
        .expect("ball is nonempty");

    let mut moves: Vec<BTreeMap<u32, u32>> = Vec::new();
    let all_into_majority: BTreeMap<u32, u32> = in_ball_count
        .keys()
        .filter(|&&l| l != majority)
        .map(|&l| (l, majority))
        .collect();
    moves.push(all_into_majority);
    // Each minority alone, into its largest-contact neighbor: weight of the
    // faces its in-ball cells share with each other phase.
    let h = grid.h();
    for &minority in in_ball_count.keys().filter(|&&l| l != majority) {
        let mut contact: BTreeMap<u32, f64> = BTreeMap::new();
        for &c in ball.iter().filter(|&&c| labels[c] == minority) {
            for nb in grid.neighbors(c) {
                if labels[nb] != minority {
                    *contact.entry(labels[nb]).or_insert(0.0) +=
                        0.5 * (a.value(c) + a.value(nb)) * h;
                }
            }
        }
        let best = contact
            .iter()
            .max_by(|(la, wa), (lb, wb)| wa.total_cmp(wb).then(lb.cmp(la)))
            .map(|(&l, _)| l);
        if let Some(dst) = best {
            let single: BTreeMap<u32, u32> = [(minority, dst)].into();
            if !moves.contains(&single) {
                moves.push(single);
            }
        }
    }

    let mut out = Vec::new();
    let counts = phase_cell_counts(p);
    let q_sums = crate::energy::q_sums_for(p, spec.bulk())?;
    for targets in moves {
        let m = PourMove::new(center, radius, targets, p.n_labels())?;
        let changes = pour_changes(grid, labels, &m);
        if changes.is_empty() {
            continue;
        }
        let delta =
            crate::energy::relabel_delta(p, &changes, a, spec, &counts, q_sums.as_deref())?;
        out.push((m, delta));
    }
    Ok(out)
}

/// Samples a ball centered on a random interface cell with a radius from
/// `radius_range` and returns the candidate pour with the lowest exact
/// delta. `None` when the partition has no interface. The returned move
/// may be non-improving; acceptance is the caller's decision.
pub fn propose_pour(
    p: &Partition,
    a: &ScalarField,
    spec: &EnergySpec,
    radius_range: (f64, f64),
    rng: &mut impl Rng,
) -> Result<Option<(PourMove, f64)>> {
    let faces = extract_interface(p);
    if faces.is_empty() {
        return Ok(None);
    }
    let face = &faces[rng.gen_range(0..faces.len())];
    let radius = rng.gen_range(radius_range.0..=radius_range.1);
    let candidates = pour_candidates(p, a, spec, face.cell_a, radius)?;
    Ok(candidates
        .into_iter()
        .reduce(|best, cand| if cand.1 < best.1 { cand } else { best }))
}

/// Mutable optimization state: raw labels plus the integer phase counts
/// (and weighted sums, when the bulk term needs them) that the shared
/// delta evaluation reads.
struct WorkState<'a> {
    grid: &'a Arc<Grid>,
    n_labels: u32,
    a: &'a ScalarField,
    spec: &'a EnergySpec,
    labels: Vec<u32>,
    counts: Vec<u64>,
    q_sums: Option<Vec<f64>>,
}

impl<'a> WorkState<'a> {
    fn new(p: &'a Partition, a: &'a ScalarField, spec: &'a EnergySpec) -> Result<WorkState<'a>> {
        let q_sums = match spec.bulk().kind() {
            BulkKind::WeightedVolume => {
                let q = spec.bulk().q_weight().expect("weighted bulk carries q");
                let mut sums = vec![0.0; p.n_labels() as usize];
                for (c, &l) in p.labels().iter().enumerate() {
                    sums[(l - 1) as usize] += q.value(c);
                }
                Some(sums)
            }
            _ => None,
        };
        Ok(WorkState {
            grid: p.grid(),
            n_labels: p.n_labels(),
            a,
            spec,
            labels: p.labels().to_vec(),
            counts: phase_cell_counts(p),
            q_sums,
        })
    }

    fn delta(&self, changes: &[(usize, u32)]) -> f64 {
        delta_core(
            self.grid,
            &self.labels,
            self.a,
            self.spec,
            &self.counts,
            self.q_sums.as_deref(),
            changes,
        )
    }

    fn apply(&mut self, changes: &[(usize, u32)]) {
        for &(c, new) in changes {
            let old = self.labels[c];
            if old == new {
                continue;
            }
            self.counts[(old - 1) as usize] -= 1;
            self.counts[(new - 1) as usize] += 1;
            if let Some(sums) = &mut self.q_sums {
                let q = self.spec.bulk().q_weight().expect("weighted bulk carries q");
                sums[(old - 1) as usize] -= q.value(c);
                sums[(new - 1) as usize] += q.value(c);
            }
            self.labels[c] = new;
        }
    }

    fn partition(&self) -> Partition {
        Partition::new(self.grid.clone(), self.n_labels, self.labels.clone())
            .expect("state labels stay valid")
    }

    /// One checkerboard sweep: even-parity cells then odd-parity cells,
    /// row-major within each class. Each cell takes the label with the
    /// lowest exact delta; ties keep the current label, then prefer the
    /// smallest label. With annealing, the best non-improving relabel is
    /// accepted with probability `exp(-delta/T)`.
    ///
    /// Returns accepted relabels and whether any had negative delta.
    fn icm_pass(&mut self, mut annealing: Option<(f64, &mut ChaCha8Rng)>) -> (u32, bool) {
        let mut flips = 0;
        let mut improved = false;
        for parity in 0..2 {
            for c in 0..self.labels.len() {
                let (ix, iy) = self.grid.coords(c);
                if (ix + iy) % 2 != parity {
                    continue;
                }
                let current = self.labels[c];
                let mut best = current;
                let mut best_delta = f64::INFINITY;
                for l in 1..=self.n_labels {
                    if l == current {
                        continue;
                    }
                    let d = self.delta(&[(c, l)]);
                    if d < best_delta {
                        best_delta = d;
                        best = l;
                    }
                }
                if best == current {
                    continue;
                }
                if best_delta < 0.0 {
                    self.apply(&[(c, best)]);
                    flips += 1;
                    improved = true;
                } else if let Some((t, rng)) = &mut annealing {
                    if rng.gen::<f64>() < (-best_delta / *t).exp() {
                        self.apply(&[(c, best)]);
                        flips += 1;
                    }
                }
            }
        }
        (flips, improved)
    }

    /// A batch of sampled pour moves; improving moves are always taken,
    /// others only under annealing.
    fn pour_batch(
        &mut self,
        attempts: u32,
        radius_range: (f64, f64),
        temperature: Option<f64>,
        rng: &mut ChaCha8Rng,
    ) -> Result<(u32, bool)> {
        let mut pours = 0;
        let mut improved = false;
        for _ in 0..attempts {
            let p = self.partition();
            let Some((m, delta)) = propose_pour(&p, self.a, self.spec, radius_range, rng)?
            else {
                continue;
            };
            let accept = if delta < 0.0 {
                improved = true;
                true
            } else if let Some(t) = temperature {
                rng.gen::<f64>() < (-delta / t).exp()
            } else {
                false
            };
            if accept {
                let changes = pour_changes(self.grid, &self.labels, &m);
                self.apply(&changes);
                pours += 1;
            }
        }
        Ok((pours, improved))
    }
}

/// One public checkerboard sweep at zero temperature. Returns the updated
/// partition and whether any strict improvement was found.
pub fn icm_sweep(
    p: &Partition,
    a: &ScalarField,
    spec: &EnergySpec,
) -> Result<(Partition, bool)> {
    // Validate inputs once through the full evaluation path.
    total_energy(p, a, spec)?;
    let mut state = WorkState::new(p, a, spec)?;
    let (_, improved) = state.icm_pass(None);
    Ok((state.partition(), improved))
}

/// Builds the initial partition for a strategy, consuming randomness from
/// the caller's generator.
fn init_with_rng(
    grid: &Arc<Grid>,
    n_labels: u32,
    field: &ScalarField,
    strategy: InitStrategy,
    rng: &mut ChaCha8Rng,
) -> Result<Partition> {
    let cells = grid.n_cells();
    if n_labels == 0 {
        return Err(Error::Invalid("need at least one label".into()));
    }
    let labels = match strategy {
        InitStrategy::Stripes => (0..cells)
            .map(|c| {
                let (ix, _) = grid.coords(c);
                (ix as u64 * n_labels as u64 / grid.nx() as u64) as u32 + 1
            })
            .collect(),
        InitStrategy::Random => (0..cells).map(|_| rng.gen_range(1..=n_labels)).collect(),
        InitStrategy::VoronoiSeeds => {
            if n_labels as usize > cells {
                return Err(Error::Invalid(format!(
                    "{n_labels} seeds do not fit in {cells} cells"
                )));
            }
            let mut seeds: Vec<usize> = Vec::with_capacity(n_labels as usize);
            while seeds.len() < n_labels as usize {
                let c = rng.gen_range(0..cells);
                if !seeds.contains(&c) {
                    seeds.push(c);
                }
            }
            (0..cells)
                .map(|c| {
                    let (ix, iy) = grid.coords(c);
                    let mut best = 0u32;
                    let mut best_d = i64::MAX;
                    for (s, &seed) in seeds.iter().enumerate() {
                        let (sx, sy) = grid.coords(seed);
                        let dx = ix as i64 - sx as i64;
                        let dy = iy as i64 - sy as i64;
                        let d = dx * dx + dy * dy;
                        if d < best_d {
                            best_d = d;
                            best = s as u32 + 1;
                        }
                    }
                    best
                })
                .collect()
        }
        InitStrategy::WatershedMinusW => watershed_labels(grid, n_labels, field)?,
    };
    Partition::new(grid.clone(), n_labels, labels)
}

/// Builds the initial partition for [`minimize`]'s configuration. The
/// field steers only the watershed strategy; seeded strategies draw from a
/// generator seeded with `config.seed`.
pub fn initialize(
    grid: &Arc<Grid>,
    n_labels: u32,
    field: &ScalarField,
    config: &OptimizerConfig,
) -> Result<Partition> {
    if !grid.same_grid(field.grid()) {
        return Err(Error::Mismatch("init field lives on a different grid".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    init_with_rng(grid, n_labels, field, config.init, &mut rng)
}

/// Steepest-ascent basins of the field, merged to at most `n_labels`
/// regions across the highest connecting saddles; groups are labeled in
/// order of their smallest cell index.
fn watershed_labels(grid: &Arc<Grid>, n_labels: u32, field: &ScalarField) -> Result<Vec<u32>> {
    if !grid.same_grid(field.grid()) {
        return Err(Error::Mismatch("watershed field lives on a different grid".into()));
    }
    let cells = grid.n_cells();
    // Steepest strictly-ascending neighbor, smallest cell index on ties;
    // cells with no higher neighbor are basin roots.
    let mut ascend: Vec<Option<usize>> = vec![None; cells];
    for c in 0..cells {
        let vc = field.value(c);
        let mut best: Option<usize> = None;
        for nb in grid.neighbors(c) {
            let v = field.value(nb);
            if v <= vc {
                continue;
            }
            match best {
                None => best = Some(nb),
                Some(b) => {
                    if v > field.value(b) || (v == field.value(b) && nb < b) {
                        best = Some(nb);
                    }
                }
            }
        }
        ascend[c] = best;
    }
    // Resolve each cell's root with path memoization.
    let mut root = vec![usize::MAX; cells];
    let mut path = Vec::new();
    for c in 0..cells {
        if root[c] != usize::MAX {
            continue;
        }
        path.clear();
        let mut cur = c;
        let r = loop {
            if root[cur] != usize::MAX {
                break root[cur];
            }
            match ascend[cur] {
                None => break cur,
                Some(up) => {
                    path.push(cur);
                    cur = up;
                }
            }
        };
        root[c] = r;
        for &p in &path {
            root[p] = r;
        }
    }

    // Union-find over roots for saddle merging.
    let mut parent: BTreeMap<usize, usize> = root.iter().map(|&r| (r, r)).collect();
    fn find(parent: &mut BTreeMap<usize, usize>, mut x: usize) -> usize {
        while parent[&x] != x {
            let up = parent[&parent[&x]];
            parent.insert(x, up);
            x = up;
        }
        x
    }
    let mut groups = parent.len();
    if groups > n_labels as usize {
        // Saddle height between adjacent basins: the highest face crossing,
        // measured by the lower endpoint of the face.
        let mut saddles: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for c in 0..cells {
            let (ix, iy) = grid.coords(c);
            for nb in [grid.cell_at(ix + 1, iy), grid.cell_at(ix, iy + 1)]
                .into_iter()
                .flatten()
            {
                if root[c] == root[nb] {
                    continue;
                }
                let key = (root[c].min(root[nb]), root[c].max(root[nb]));
                let height = field.value(c).min(field.value(nb));
                let entry = saddles.entry(key).or_insert(f64::NEG_INFINITY);
                if height > *entry {
                    *entry = height;
                }
            }
        }
        let mut by_height: Vec<((usize, usize), f64)> = saddles.into_iter().collect();
        by_height.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        for ((ra, rb), _) in by_height {
            if groups <= n_labels as usize {
                break;
            }
            let (fa, fb) = (find(&mut parent, ra), find(&mut parent, rb));
            if fa != fb {
                parent.insert(fa.max(fb), fa.min(fb));
                groups -= 1;
            }
        }
    }
    // Label groups by their smallest cell index.
    let reps: Vec<usize> = (0..cells).map(|c| find(&mut parent, root[c])).collect();
    let mut label_of: BTreeMap<usize, u32> = BTreeMap::new();
    let mut labels = vec![0u32; cells];
    for c in 0..cells {
        let next = label_of.len() as u32 + 1;
        let l = *label_of.entry(reps[c]).or_insert(next);
        labels[c] = l;
    }
    Ok(labels)
}

/// Minimizes the energy by alternating checkerboard sweeps with pour
/// batches until a full round finds no improving move, or `max_sweeps`
/// rounds elapse. With annealing the no-improvement stop engages only
/// after the temperature decays below 1e-6, since early sweeps of a
/// schedule are expected to stall on uphill moves. Returns the best
/// partition encountered and the trace; deterministic for a fixed seed
/// and configuration.
pub fn minimize(
    grid: &Arc<Grid>,
    n_labels: u32,
    a: &ScalarField,
    spec: &EnergySpec,
    config: &OptimizerConfig,
) -> Result<MinimizeOutcome> {
    config.validate(grid)?;
    if !grid.same_grid(a.grid()) {
        return Err(Error::Mismatch("weight field lives on a different grid".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let initial = init_with_rng(grid, n_labels, a, config.init, &mut rng)?;
    let breakdown = total_energy(&initial, a, spec)?;

    let mut trace = EnergyTrace::default();
    let initial_t = config.temperature.map_or(0.0, |s| s.t0);
    trace.records.push(TraceRecord {
        sweep: 0,
        f: breakdown.interface_term,
        g: breakdown.bulk_term,
        j: breakdown.total,
        flips: 0,
        pours: 0,
        temperature: initial_t,
    });
    if n_labels == 1 {
        return Ok(MinimizeOutcome { partition: initial, trace });
    }

    let mut state = WorkState::new(&initial, a, spec)?;
    let mut best_labels = state.labels.clone();
    let mut best_j = breakdown.total;
    for sweep in 1..=config.max_sweeps {
        let t = config.temperature.map(|s| s.at_sweep(sweep)).filter(|&t| t > 0.0);
        let (flips, improved_flip) = match t {
            Some(t) => state.icm_pass(Some((t, &mut rng))),
            None => state.icm_pass(None),
        };
        let (pours, improved_pour) =
            state.pour_batch(config.pour_moves_per_sweep, config.radius_range, t, &mut rng)?;
        let breakdown = total_energy(&state.partition(), a, spec)?;
        trace.records.push(TraceRecord {
            sweep,
            f: breakdown.interface_term,
            g: breakdown.bulk_term,
            j: breakdown.total,
            flips,
            pours,
            temperature: t.unwrap_or(0.0),
        });
        if breakdown.total < best_j {
            best_j = breakdown.total;
            best_labels.copy_from_slice(&state.labels);
        }
        // A sweep without improving moves ends the run, but only once the
        // schedule has effectively cooled: a hot stall is the expected
        // state annealing exists to escape.
        let cold = t.map_or(true, |t| t < 1e-6);
        if cold && !(improved_flip || improved_pour) {
            break;
        }
    }
    let partition = Partition::new(grid.clone(), n_labels, best_labels)?;
    Ok(MinimizeOutcome { partition, trace })
}

/// Volume threshold below which [`clean`] tries to absorb a connected
/// component: four cells' worth of area.
pub fn default_min_component_volume(grid: &Grid) -> f64 {
    4.0 * grid.h() * grid.h()
}

/// Absorbs every connected component with volume below the threshold into
/// the neighboring label it shares the most interface weight with, when
/// doing so does not increase the energy. Iterates to a fixpoint; cells
/// outside absorbed components are never touched.
pub fn clean(
    p: &Partition,
    a: &ScalarField,
    spec: &EnergySpec,
    min_component_volume: f64,
) -> Result<Partition> {
    let grid = p.grid().clone();
    let h = grid.h();
    let cell_area = h * h;
    let mut current = p.clone();
    // Each absorption merges a component into an adjacent one, so the
    // total component count strictly decreases and this terminates.
    let initial_count: usize = (1..=p.n_labels())
        .map(|l| crate::grid::connected_components(p, l).len())
        .sum();
    for _ in 0..=initial_count {
        let labels = current.labels().to_vec();
        let mut applied = false;
        'scan: for l in 1..=current.n_labels() {
            for cells in crate::grid::connected_components(&current, l) {
                if cells.len() as f64 * cell_area >= min_component_volume {
                    continue;
                }
                let mut inside = vec![false; grid.n_cells()];
                for &c in &cells {
                    inside[c] = true;
                }
                // Interface weight shared with each neighboring label.
                let mut contact: BTreeMap<u32, f64> = BTreeMap::new();
                for &c in &cells {
                    for nb in grid.neighbors(c) {
                        if !inside[nb] {
                            *contact.entry(labels[nb]).or_insert(0.0) +=
                                0.5 * (a.value(c) + a.value(nb)) * h;
                        }
                    }
                }
                let Some(target) = contact
                    .iter()
                    .max_by(|(la, wa), (lb, wb)| wa.total_cmp(wb).then(lb.cmp(la)))
                    .map(|(&l, _)| l)
                else {
                    continue;
                };
                let delta = crate::energy::energy_delta(&current, &cells, target, a, spec)?;
                if delta <= 0.0 {
                    let mut new_labels = labels.clone();
                    for &c in &cells {
                        new_labels[c] = target;
                    }
                    current = Partition::new(grid.clone(), p.n_labels(), new_labels)?;
                    applied = true;
                    break 'scan;
                }
            }
        }
        if !applied {
            break;
        }
    }
    Ok(current)
}
