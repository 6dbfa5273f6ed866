//! Geometric regularity measurements on computed partitions.
//!
//! Every scan treats the interface as a set of face midpoints and measures
//! Euclidean balls around sample points. Sample points are restricted to an
//! interior window (a margin-shrunk sub-rectangle of the domain), because
//! all of the quantities measured here are interior ones: a ball that leaks
//! out of the domain says something about the domain edge, not about the
//! partition. Reported constants are empirical summaries of one raster; the
//! scans never assert against theoretical values.
//!
//! Conventions shared by the scans:
//! - balls are closed (`|y - x| <= r`), so exact-radius hits count;
//! - interface membership is decided by the face midpoint;
//! - samples appear in deterministic raster order and oversized point sets
//!   are thinned by a fixed stride, never randomly.

use crate::energy::BulkTermSpec;
use crate::error::Error;
use crate::grid::{extract_interface, phase_cell_counts, Grid, InterfaceFace, Partition};
use crate::landscape::WeightSpec;
use crate::Result;

/// Tunable knobs shared by the regularity scans.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsConfig {
    /// Width of the strip removed from each domain edge to form the interior
    /// measurement window.
    pub margin: f64,
    /// Ball radii for the interface-density scans.
    pub scales: Vec<f64>,
    /// Ball radius for the inscribed-ball scan.
    pub condition_b_radius: f64,
    /// Ball radii for the volume-versus-perimeter scan.
    pub isoperimetry_radii: Vec<f64>,
    /// Volume cutoff: ball/phase intersections larger than this are skipped
    /// by the isoperimetry scan. `None` means a tenth of the domain area.
    pub volume_filter: Option<f64>,
    /// Maximum number of sample points per scan; larger point sets are
    /// thinned at a uniform stride.
    pub sample_cap: usize,
    /// Radius of the neighborhood used to fit branch directions at junctions.
    pub junction_fit_radius: f64,
    /// Junction candidates closer than this merge into one reported point.
    pub junction_merge_radius: f64,
}

impl DiagnosticsConfig {
    /// Defaults scaled to the grid: margin `max(4h, 5% of the short side)`,
    /// density scales `{8h, 16h, 32h}`, inscribed-ball radius `16h`,
    /// isoperimetry radii `{4h, 8h, 16h}`, junction fit radius `6h`.
    pub fn for_grid(grid: &Grid) -> DiagnosticsConfig {
        let h = grid.h();
        let short_side = grid.nx().min(grid.ny()) as f64 * h;
        DiagnosticsConfig {
            margin: (4.0 * h).max(0.05 * short_side),
            scales: vec![8.0 * h, 16.0 * h, 32.0 * h],
            condition_b_radius: 16.0 * h,
            isoperimetry_radii: vec![4.0 * h, 8.0 * h, 16.0 * h],
            volume_filter: None,
            sample_cap: 2048,
            junction_fit_radius: 6.0 * h,
            junction_merge_radius: 2.0 * h,
        }
    }
}

/// The interior measurement window: the domain rectangle with a margin strip
/// removed from every edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteriorWindow {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl InteriorWindow {
    /// Shrinks the grid's bounding rectangle by `margin` on every side.
    pub fn from_margin(grid: &Grid, margin: f64) -> Result<InteriorWindow> {
        if !(margin.is_finite() && margin >= 0.0) {
            return Err(Error::Invalid(format!(
                "window margin {margin} must be finite and nonnegative"
            )));
        }
        let lx = grid.nx() as f64 * grid.h();
        let ly = grid.ny() as f64 * grid.h();
        let w = InteriorWindow { x0: margin, x1: lx - margin, y0: margin, y1: ly - margin };
        if w.x0 >= w.x1 || w.y0 >= w.y1 {
            return Err(Error::Invalid(format!(
                "margin {margin} leaves no interior in a {lx} x {ly} domain"
            )));
        }
        Ok(w)
    }

    /// Whether the point lies in the closed window.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        self.x0 <= p[0] && p[0] <= self.x1 && self.y0 <= p[1] && p[1] <= self.y1
    }

    /// Whether the closed ball `B(center, r)` lies entirely in the window.
    pub fn contains_ball(&self, center: [f64; 2], r: f64) -> bool {
        self.x0 + r <= center[0]
            && center[0] <= self.x1 - r
            && self.y0 + r <= center[1]
            && center[1] <= self.y1 - r
    }
}

/// One interface-density measurement: total interface length inside the
/// ball, divided by the radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AhlforsSample {
    pub point: [f64; 2],
    pub radius: f64,
    pub ratio: f64,
}

/// All density samples of one scan plus their range.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AhlforsSection {
    pub samples: Vec<AhlforsSample>,
    pub min_ratio: Option<f64>,
    pub max_ratio: Option<f64>,
}

impl AhlforsSection {
    /// Rebuilds the range summary from the samples; the single way any
    /// density section is assembled, so serialized sections round-trip.
    pub fn from_samples(samples: Vec<AhlforsSample>) -> AhlforsSection {
        let mut section = AhlforsSection { samples, ..AhlforsSection::default() };
        for s in &section.samples {
            section.min_ratio = Some(section.min_ratio.map_or(s.ratio, |m| m.min(s.ratio)));
            section.max_ratio = Some(section.max_ratio.map_or(s.ratio, |m| m.max(s.ratio)));
        }
        section
    }
}

/// Density samples restricted to the boundary of a single phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseAhlforsSection {
    pub label: u32,
    pub section: AhlforsSection,
}

/// Interface length carried by `faces` inside the closed ball `B(x, r)`,
/// divided by `r`. A straight interface through `x` with the ball fully
/// interior gives a value near 2 (one diameter); three straight branches
/// meeting at `x` give a value near 3 (three radii).
pub fn ahlfors_ratio(faces: &[InterfaceFace], x: [f64; 2], r: f64) -> f64 {
    let rr = r * r;
    let mut total = 0.0;
    for f in faces {
        let dx = f.midpoint[0] - x[0];
        let dy = f.midpoint[1] - x[1];
        if dx * dx + dy * dy <= rr {
            total += f.length;
        }
    }
    total / r
}

fn scales_check(scales: &[f64], h: f64) -> Result<()> {
    for &r in scales {
        if !(r.is_finite() && r >= 2.0 * h) {
            return Err(Error::Invalid(format!(
                "scan radius {r} must be finite and at least 2h = {}",
                2.0 * h
            )));
        }
    }
    Ok(())
}

fn cap_check(cap: usize) -> Result<()> {
    if cap == 0 {
        return Err(Error::Invalid("sample cap must be positive".into()));
    }
    Ok(())
}

/// Keeps at most `cap` points, thinning at a uniform stride so the survivors
/// stay spread over the whole input order.
fn thin_to_cap(points: Vec<[f64; 2]>, cap: usize) -> Vec<[f64; 2]> {
    if points.len() <= cap {
        return points;
    }
    (0..cap).map(|i| points[i * points.len() / cap]).collect()
}

fn eligible_points(
    candidates: impl Iterator<Item = [f64; 2]>,
    window: &InteriorWindow,
    cap: usize,
) -> Vec<[f64; 2]> {
    let kept: Vec<[f64; 2]> = candidates.filter(|&p| window.contains(p)).collect();
    thin_to_cap(kept, cap)
}

fn scan_faces(faces: &[InterfaceFace], points: &[[f64; 2]], scales: &[f64]) -> AhlforsSection {
    let mut samples = Vec::with_capacity(points.len() * scales.len());
    for &x in points {
        for &r in scales {
            let ratio = ahlfors_ratio(faces, x, r);
            samples.push(AhlforsSample { point: x, radius: r, ratio });
        }
    }
    AhlforsSection::from_samples(samples)
}

/// Measures the interface density `length(interface in B(x, r)) / r` at every
/// sample point and scale.
///
/// `points` defaults to all interface midpoints. Points outside the interior
/// window are dropped; the survivors are thinned to the sample cap. Scales
/// below `2h` are rejected: a ball that holds at most one face midpoint
/// measures raster noise. The upper end of the usable scale range is the
/// caller's choice — balls reaching past the window pick up edge clipping,
/// which lowers the ratio (a diameter degrades toward a radius).
pub fn ahlfors_scan(
    p: &Partition,
    points: Option<&[[f64; 2]]>,
    scales: &[f64],
    config: &DiagnosticsConfig,
) -> Result<AhlforsSection> {
    scales_check(scales, p.grid().h())?;
    cap_check(config.sample_cap)?;
    let window = InteriorWindow::from_margin(p.grid(), config.margin)?;
    let faces = extract_interface(p);
    if faces.is_empty() {
        return Err(Error::EmptyInterface);
    }
    let pts = match points {
        Some(given) => eligible_points(given.iter().copied(), &window, config.sample_cap),
        None => eligible_points(faces.iter().map(|f| f.midpoint), &window, config.sample_cap),
    };
    Ok(scan_faces(&faces, &pts, scales))
}

/// Runs the density scan once per phase, counting only the faces on that
/// phase's boundary and sampling only that boundary's midpoints. Phases with
/// empty boundary are omitted.
pub fn per_phase_ahlfors(
    p: &Partition,
    scales: &[f64],
    config: &DiagnosticsConfig,
) -> Result<Vec<PhaseAhlforsSection>> {
    scales_check(scales, p.grid().h())?;
    cap_check(config.sample_cap)?;
    let window = InteriorWindow::from_margin(p.grid(), config.margin)?;
    let faces = extract_interface(p);
    if faces.is_empty() {
        return Err(Error::EmptyInterface);
    }
    let mut sections = Vec::new();
    for label in 1..=p.n_labels() {
        let boundary: Vec<InterfaceFace> = faces
            .iter()
            .filter(|f| p.label(f.cell_a) == label || p.label(f.cell_b) == label)
            .copied()
            .collect();
        if boundary.is_empty() {
            continue;
        }
        let pts = eligible_points(boundary.iter().map(|f| f.midpoint), &window, config.sample_cap);
        sections.push(PhaseAhlforsSection { label, section: scan_faces(&boundary, &pts, scales) });
    }
    Ok(sections)
}

/// The largest ball found inside one phase (and inside the scan ball).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseBall {
    pub label: u32,
    pub center: [f64; 2],
    pub radius: f64,
}

/// Inscribed-ball measurement around one sample point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionBSample {
    pub point: [f64; 2],
    /// Scan-ball radius the inscribed balls must fit inside.
    pub radius: f64,
    /// Best inscribed ball per phase present, largest radius first
    /// (ties broken by label).
    pub phases: Vec<PhaseBall>,
    /// The scan ball met fewer than two phases, so the sample says nothing
    /// about the interface; the point is likely far from it.
    pub single_phase: bool,
    /// `radius / second-largest inscribed radius`: the empirical constant
    /// relating the scan scale to the two-phase ball guarantee.
    pub c1: Option<f64>,
}

const FAR: f64 = 1e18;

/// One pass of the exact squared distance transform: `out[q] = min_v
/// (q - v)^2 + f[v]`, evaluated via the lower envelope of the parabolas
/// rooted at each `v`.
fn envelope_pass(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let mut k = 0usize;
    for q in 1..n {
        let fq = f[q] + (q * q) as f64;
        loop {
            let vk = v[k];
            let s = (fq - (f[vk] + (vk * vk) as f64)) / (2 * (q - vk)) as f64;
            if s <= z[k] {
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
                break;
            }
        }
    }
    k = 0;
    for q in 0..n {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        out[q] = d * d + f[v[k]];
    }
}

/// Squared distance, in lattice steps, from every site of the bounding
/// lattice to the nearest site that does not carry `label`; sites outside
/// the domain mask count as obstacles. Indexed `iy * nx + ix`.
fn phase_squared_edt(p: &Partition, label: u32) -> Vec<f64> {
    let grid = p.grid();
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut dist = vec![0.0f64; nx * ny];
    for iy in 0..ny {
        for ix in 0..nx {
            let inside = grid.cell_at(ix, iy).map_or(false, |c| p.label(c) == label);
            dist[iy * nx + ix] = if inside { FAR } else { 0.0 };
        }
    }
    let mut line = vec![0.0f64; ny.max(nx)];
    let mut out = vec![0.0f64; ny.max(nx)];
    for ix in 0..nx {
        for iy in 0..ny {
            line[iy] = dist[iy * nx + ix];
        }
        envelope_pass(&line[..ny], &mut out[..ny]);
        for iy in 0..ny {
            dist[iy * nx + ix] = out[iy];
        }
    }
    for iy in 0..ny {
        line[..nx].copy_from_slice(&dist[iy * nx..(iy + 1) * nx]);
        envelope_pass(&line[..nx], &mut out[..nx]);
        dist[iy * nx..(iy + 1) * nx].copy_from_slice(&out[..nx]);
    }
    dist
}

/// Finds, around each sample point, the largest ball inscribed in each phase
/// within the closed scan ball `B(x, r)`.
///
/// Candidate centers are cell centers; the inscribed radius at a center is
/// the least of the distance to the nearest foreign cell region (transform
/// value minus half a cell), the distance to the domain rectangle edge, and
/// the room left inside the scan ball. A sample whose scan ball meets only
/// one phase is flagged, not an error: it reports that the point is not near
/// the interface.
pub fn condition_b_scan(
    p: &Partition,
    points: Option<&[[f64; 2]]>,
    r: f64,
    config: &DiagnosticsConfig,
) -> Result<Vec<ConditionBSample>> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::Invalid(format!("scan radius {r} must be positive")));
    }
    cap_check(config.sample_cap)?;
    let grid = p.grid();
    let h = grid.h();
    let window = InteriorWindow::from_margin(grid, config.margin)?;
    let pts = match points {
        Some(given) => eligible_points(given.iter().copied(), &window, config.sample_cap),
        None => {
            let faces = extract_interface(p);
            if faces.is_empty() {
                return Err(Error::EmptyInterface);
            }
            eligible_points(faces.iter().map(|f| f.midpoint), &window, config.sample_cap)
        }
    };

    let counts = phase_cell_counts(p);
    let transforms: Vec<Option<Vec<f64>>> = (1..=p.n_labels())
        .map(|label| {
            (counts[(label - 1) as usize] > 0).then(|| phase_squared_edt(p, label))
        })
        .collect();
    let (lx, ly) = (grid.nx() as f64 * h, grid.ny() as f64 * h);

    let mut samples = Vec::with_capacity(pts.len());
    for &x in &pts {
        // Bounding lattice box of the scan ball, then an exact radial test.
        let ix_lo = (((x[0] - r) / h - 0.5).floor().max(0.0)) as usize;
        let iy_lo = (((x[1] - r) / h - 0.5).floor().max(0.0)) as usize;
        let ix_hi = ((((x[0] + r) / h - 0.5).ceil()).max(0.0) as usize).min(grid.nx() - 1);
        let iy_hi = ((((x[1] + r) / h - 0.5).ceil()).max(0.0) as usize).min(grid.ny() - 1);
        let mut best: Vec<Option<PhaseBall>> = vec![None; p.n_labels() as usize];
        for iy in iy_lo..=iy_hi {
            for ix in ix_lo..=ix_hi {
                let Some(c) = grid.cell_at(ix, iy) else { continue };
                let center = grid.center(c);
                let dx = center[0] - x[0];
                let dy = center[1] - x[1];
                let d2 = dx * dx + dy * dy;
                if d2 > r * r {
                    continue;
                }
                let label = p.label(c);
                let edt = transforms[(label - 1) as usize]
                    .as_ref()
                    .expect("phase present in ball has cells");
                let foreign = h * edt[iy * grid.nx() + ix].sqrt() - 0.5 * h;
                let edge = center[0].min(lx - center[0]).min(center[1]).min(ly - center[1]);
                let room = r - d2.sqrt();
                let radius = foreign.min(edge).min(room).max(0.0);
                let slot = &mut best[(label - 1) as usize];
                if slot.map_or(true, |b| radius > b.radius) {
                    *slot = Some(PhaseBall { label, center, radius });
                }
            }
        }
        let mut phases: Vec<PhaseBall> = best.into_iter().flatten().collect();
        phases.sort_by(|a, b| {
            b.radius.partial_cmp(&a.radius).unwrap().then(a.label.cmp(&b.label))
        });
        let single_phase = phases.len() < 2;
        let c1 = (phases.len() >= 2 && phases[1].radius > 0.0).then(|| r / phases[1].radius);
        samples.push(ConditionBSample { point: x, radius: r, phases, single_phase, c1 });
    }
    Ok(samples)
}

/// Volume-versus-perimeter measurement of one phase/ball intersection.
#[derive(Debug, Clone, PartialEq)]
pub struct IsoperimetrySample {
    pub label: u32,
    pub center: [f64; 2],
    pub radius: f64,
    /// Area of `Z`, the part of the phase inside the ball.
    pub volume: f64,
    /// Length of the boundary between `Z` and the rest of its own phase.
    pub perimeter: f64,
    /// `volume / perimeter^2` when the relative perimeter is positive.
    pub ratio: Option<f64>,
    /// `Z` fills a whole piece of its phase: positive volume with no internal
    /// boundary, the case the volume cutoff exists to exclude.
    pub zero_perimeter: bool,
}

/// All isoperimetry samples of one scan.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IsoperimetrySection {
    pub samples: Vec<IsoperimetrySample>,
    pub max_ratio: Option<f64>,
    pub zero_perimeter_flags: usize,
}

impl IsoperimetrySection {
    /// Rebuilds the summary fields from the samples; the single way any
    /// isoperimetry section is assembled, so serialized sections round-trip.
    pub fn from_samples(samples: Vec<IsoperimetrySample>) -> IsoperimetrySection {
        let mut section = IsoperimetrySection { samples, ..IsoperimetrySection::default() };
        for s in &section.samples {
            if let Some(q) = s.ratio {
                section.max_ratio = Some(section.max_ratio.map_or(q, |m| m.max(q)));
            }
            if s.zero_perimeter {
                section.zero_perimeter_flags += 1;
            }
        }
        section
    }
}

/// Measures `|Z| / Per(Z; phase)^2` for `Z = phase ∩ ball` over the given
/// balls, where the relative perimeter counts only faces between `Z` and
/// same-phase cells outside the ball.
///
/// Empty intersections are skipped; intersections with volume above `v0` are
/// filtered out (the bound being probed concerns small pieces); positive
/// volume with zero relative perimeter is reported and flagged. Balls are
/// expected to lie inside the interior window; the caller picks them.
pub fn isoperimetry_scan(
    p: &Partition,
    balls: &[([f64; 2], f64)],
    v0: f64,
) -> IsoperimetrySection {
    let grid = p.grid();
    let h = grid.h();
    let cell_area = h * h;
    let mut samples = Vec::new();
    for &(center, r) in balls {
        if !(r.is_finite() && r > 0.0) {
            continue;
        }
        let rr = r * r;
        let in_ball = |c: usize| {
            let y = grid.center(c);
            let dx = y[0] - center[0];
            let dy = y[1] - center[1];
            dx * dx + dy * dy <= rr
        };
        let ix_lo = (((center[0] - r) / h - 0.5).floor().max(0.0)) as usize;
        let iy_lo = (((center[1] - r) / h - 0.5).floor().max(0.0)) as usize;
        let ix_hi = ((((center[0] + r) / h - 0.5).ceil()).max(0.0) as usize).min(grid.nx() - 1);
        let iy_hi = ((((center[1] + r) / h - 0.5).ceil()).max(0.0) as usize).min(grid.ny() - 1);
        for label in 1..=p.n_labels() {
            let mut z = Vec::new();
            for iy in iy_lo..=iy_hi {
                for ix in ix_lo..=ix_hi {
                    if let Some(c) = grid.cell_at(ix, iy) {
                        if p.label(c) == label && in_ball(c) {
                            z.push(c);
                        }
                    }
                }
            }
            if z.is_empty() {
                continue;
            }
            let volume = cell_area * z.len() as f64;
            if volume > v0 {
                continue;
            }
            let mut perimeter = 0.0;
            for &c in &z {
                for d in grid.neighbors(c) {
                    if p.label(d) == label && !in_ball(d) {
                        perimeter += h;
                    }
                }
            }
            let zero_perimeter = perimeter == 0.0;
            let ratio = (perimeter > 0.0).then(|| volume / (perimeter * perimeter));
            samples.push(IsoperimetrySample {
                label,
                center,
                radius: r,
                volume,
                perimeter,
                ratio,
                zero_perimeter,
            });
        }
    }
    IsoperimetrySection::from_samples(samples)
}

/// A detected triple point: three phases meeting near one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Junction {
    /// Mean position of the merged candidate vertices.
    pub point: [f64; 2],
    /// The three labels, ascending.
    pub labels: [u32; 3],
    /// Branch directions in degrees, one per label pair in the order
    /// `(l0,l1), (l0,l2), (l1,l2)`.
    pub directions: [f64; 3],
    /// Angles between circularly adjacent branches, in degrees. The first
    /// two are the gaps after the smallest direction; the third closes the
    /// circle, so the three sum to 360 up to one rounding.
    pub angles: [f64; 3],
}

/// Detects triple points and estimates their branch angles.
///
/// Candidates are lattice vertices whose surrounding in-domain cells carry
/// exactly three distinct labels; candidates with the same label triple
/// within `merge_radius` of an earlier one collapse into a single reported
/// junction at their mean position. Each branch direction is the principal
/// axis, through the junction point, of the midpoints of that label pair's
/// interface faces within `fit_radius`, signed to point away from the
/// junction. Junctions where some pair has no nearby face are dropped: three
/// branch fits need three populated branches.
pub fn junction_scan(p: &Partition, fit_radius: f64, merge_radius: f64) -> Vec<Junction> {
    let grid = p.grid();
    let h = grid.h();
    let faces = extract_interface(p);
    let mut clusters: Vec<(Vec<[f64; 2]>, [u32; 3])> = Vec::new();
    for vy in 1..grid.ny() {
        for vx in 1..grid.nx() {
            let quad = [
                grid.cell_at(vx - 1, vy - 1),
                grid.cell_at(vx, vy - 1),
                grid.cell_at(vx - 1, vy),
                grid.cell_at(vx, vy),
            ];
            let mut labels: Vec<u32> =
                quad.iter().filter_map(|&c| c.map(|c| p.label(c))).collect();
            labels.sort_unstable();
            labels.dedup();
            if labels.len() != 3 {
                continue;
            }
            let triple = [labels[0], labels[1], labels[2]];
            let pt = [vx as f64 * h, vy as f64 * h];
            let near = clusters.iter_mut().find(|(members, t)| {
                let dx = members[0][0] - pt[0];
                let dy = members[0][1] - pt[1];
                *t == triple && dx * dx + dy * dy <= merge_radius * merge_radius
            });
            match near {
                Some((members, _)) => members.push(pt),
                None => clusters.push((vec![pt], triple)),
            }
        }
    }

    let mut junctions = Vec::new();
    'clusters: for (members, triple) in clusters {
        let n = members.len() as f64;
        let point = [
            members.iter().map(|m| m[0]).sum::<f64>() / n,
            members.iter().map(|m| m[1]).sum::<f64>() / n,
        ];
        let pairs = [
            (triple[0], triple[1]),
            (triple[0], triple[2]),
            (triple[1], triple[2]),
        ];
        let mut directions = [0.0f64; 3];
        for (slot, &(la, lb)) in pairs.iter().enumerate() {
            let mut sxx = 0.0;
            let mut sxy = 0.0;
            let mut syy = 0.0;
            let mut mx = 0.0;
            let mut my = 0.0;
            let mut hits = 0usize;
            for f in &faces {
                let (u, v) = (p.label(f.cell_a), p.label(f.cell_b));
                if !((u == la && v == lb) || (u == lb && v == la)) {
                    continue;
                }
                let dx = f.midpoint[0] - point[0];
                let dy = f.midpoint[1] - point[1];
                if dx * dx + dy * dy > fit_radius * fit_radius {
                    continue;
                }
                sxx += dx * dx;
                sxy += dx * dy;
                syy += dy * dy;
                mx += dx;
                my += dy;
                hits += 1;
            }
            if hits == 0 {
                continue 'clusters;
            }
            let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
            let (mut ux, mut uy) = (theta.cos(), theta.sin());
            if mx * ux + my * uy < 0.0 {
                ux = -ux;
                uy = -uy;
            }
            directions[slot] = uy.atan2(ux).to_degrees().rem_euclid(360.0);
        }
        let mut sorted = directions;
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let g0 = sorted[1] - sorted[0];
        let g1 = sorted[2] - sorted[1];
        let g2 = 360.0 - g0 - g1;
        junctions.push(Junction { point, labels: triple, directions, angles: [g0, g1, g2] });
    }
    junctions
}

/// Declared-smoothness bookkeeping carried into the report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeReport {
    /// Declared growth exponent of the bulk term.
    pub alpha: f64,
    /// Declared smoothness exponent of the weight field.
    pub beta: f64,
    /// `min(beta, 2 alpha - 1)`, the planar decay exponent the two declared
    /// exponents support jointly.
    pub gamma: f64,
}

/// Planar gauge exponent `min(beta, 2 alpha - 1)`.
pub fn gauge_exponent(alpha: f64, beta: f64) -> f64 {
    beta.min(2.0 * alpha - 1.0)
}

/// Number of labels that own at least one cell.
pub fn nontrivial_phases(p: &Partition) -> u32 {
    phase_cell_counts(p).iter().filter(|&&n| n > 0).count() as u32
}

/// Everything the scans can say about one partition.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub ahlfors: AhlforsSection,
    pub per_phase_ahlfors: Vec<PhaseAhlforsSection>,
    pub condition_b: Vec<ConditionBSample>,
    pub isoperimetry: IsoperimetrySection,
    pub junctions: Vec<Junction>,
    pub nontrivial_phases: u32,
    pub gauge: Option<GaugeReport>,
    /// Scan failures, one `section: message` entry each; the failed section
    /// stays empty.
    pub errors: Vec<String>,
}

/// Runs every scan with the configured sampling and collects the results.
///
/// Sample points are the interface midpoints inside the interior window,
/// thinned to the cap; isoperimetry balls keep only centers whose ball stays
/// inside the window. A partition with no interface yields empty sections —
/// there is nothing to measure, which is not an error. Scan failures are
/// collected per section. The gauge entry requires a weight spec with a
/// declared smoothness exponent.
pub fn full_report(
    p: &Partition,
    spec: &BulkTermSpec,
    weight: Option<&WeightSpec>,
    config: &DiagnosticsConfig,
) -> RegularityReport {
    let grid = p.grid();
    let gauge = weight.and_then(|w| w.beta).map(|beta| GaugeReport {
        alpha: spec.alpha(),
        beta,
        gamma: gauge_exponent(spec.alpha(), beta),
    });
    let mut report = RegularityReport {
        ahlfors: AhlforsSection::default(),
        per_phase_ahlfors: Vec::new(),
        condition_b: Vec::new(),
        isoperimetry: IsoperimetrySection::default(),
        junctions: Vec::new(),
        nontrivial_phases: nontrivial_phases(p),
        gauge,
        errors: Vec::new(),
    };
    let faces = extract_interface(p);
    if faces.is_empty() {
        return report;
    }
    match ahlfors_scan(p, None, &config.scales, config) {
        Ok(s) => report.ahlfors = s,
        Err(e) => report.errors.push(format!("ahlfors: {e}")),
    }
    match per_phase_ahlfors(p, &config.scales, config) {
        Ok(s) => report.per_phase_ahlfors = s,
        Err(e) => report.errors.push(format!("per_phase_ahlfors: {e}")),
    }
    match condition_b_scan(p, None, config.condition_b_radius, config) {
        Ok(s) => report.condition_b = s,
        Err(e) => report.errors.push(format!("condition_b: {e}")),
    }
    match InteriorWindow::from_margin(grid, config.margin) {
        Ok(window) => {
            let pts =
                eligible_points(faces.iter().map(|f| f.midpoint), &window, config.sample_cap);
            let mut balls = Vec::new();
            for &r in &config.isoperimetry_radii {
                for &x in &pts {
                    if window.contains_ball(x, r) {
                        balls.push((x, r));
                    }
                }
            }
            let v0 = config.volume_filter.unwrap_or(0.1 * grid.domain_area());
            report.isoperimetry = isoperimetry_scan(p, &balls, v0);
        }
        Err(e) => report.errors.push(format!("isoperimetry: {e}")),
    }
    report.junctions =
        junction_scan(p, config.junction_fit_radius, config.junction_merge_radius);
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Partition;

    /// 64x64 unit square split into left/right halves at x = 1/2.
    fn bisection() -> Partition {
        let grid = Grid::rect(64, 64, 1.0 / 64.0).unwrap();
        let labels = (0..64 * 64)
            .map(|c| if grid.coords(c).0 < 32 { 1 } else { 2 })
            .collect();
        Partition::new(grid, 2, labels).unwrap()
    }

    /// Axis-aligned tripod: phase 1 left of x = 1/2, phases 2/3 stacked on
    /// the right, meeting at (1/2, 1/2).
    fn t_tripod() -> Partition {
        let grid = Grid::rect(64, 64, 1.0 / 64.0).unwrap();
        let labels = (0..64 * 64)
            .map(|c| {
                let (ix, iy) = grid.coords(c);
                if ix < 32 {
                    1
                } else if iy < 32 {
                    2
                } else {
                    3
                }
            })
            .collect();
        Partition::new(grid, 3, labels).unwrap()
    }

    #[test]
    fn straight_interface_density_is_two_in_uncut_balls() {
        let p = bisection();
        let h = p.grid().h();
        // Margin equal to the scan radius keeps every ball uncut: each one
        // then holds 33 face midpoints (the diameter in faces, closed ball).
        let config = DiagnosticsConfig {
            margin: 16.0 * h,
            ..DiagnosticsConfig::for_grid(p.grid())
        };
        let section = ahlfors_scan(&p, None, &[16.0 * h], &config).unwrap();
        assert_eq!(section.samples.len(), 32);
        for s in &section.samples {
            assert_eq!(s.ratio, 33.0 / 16.0);
        }
        assert_eq!(section.min_ratio, Some(33.0 / 16.0));
        assert_eq!(section.max_ratio, Some(33.0 / 16.0));
        assert!(section.min_ratio.unwrap() >= 1.8 && section.max_ratio.unwrap() <= 2.2);
    }

    #[test]
    fn tripod_center_density_is_three() {
        let p = t_tripod();
        let h = p.grid().h();
        let faces = extract_interface(&p);
        // Each branch contributes its radius in faces: 2R vertical + R
        // horizontal midpoints inside the closed ball of lattice radius R.
        for scale in [8.0, 16.0] {
            let ratio = ahlfors_ratio(&faces, [0.5, 0.5], scale * h);
            assert_eq!(ratio, 3.0);
        }
    }

    #[test]
    fn ahlfors_rejects_small_scales_and_empty_interfaces() {
        let p = bisection();
        let h = p.grid().h();
        let config = DiagnosticsConfig::for_grid(p.grid());
        assert!(matches!(
            ahlfors_scan(&p, None, &[h], &config),
            Err(Error::Invalid(_))
        ));
        let uniform = Partition::uniform(p.grid().clone(), 2, 1).unwrap();
        assert!(matches!(
            ahlfors_scan(&uniform, None, &[4.0 * h], &config),
            Err(Error::EmptyInterface)
        ));
    }

    #[test]
    fn ahlfors_ratios_ride_along_with_the_pattern() {
        let grid = Grid::rect(64, 64, 1.0 / 64.0).unwrap();
        let h = grid.h();
        let config = DiagnosticsConfig {
            margin: 8.0 * h,
            ..DiagnosticsConfig::for_grid(&grid)
        };
        let split_at = |col: usize| {
            let labels = (0..64 * 64)
                .map(|c| if grid.coords(c).0 < col { 1 } else { 2 })
                .collect();
            Partition::new(grid.clone(), 2, labels).unwrap()
        };
        let a = ahlfors_scan(&split_at(28), None, &[8.0 * h], &config).unwrap();
        let b = ahlfors_scan(&split_at(29), None, &[8.0 * h], &config).unwrap();
        let ra: Vec<f64> = a.samples.iter().map(|s| s.ratio).collect();
        let rb: Vec<f64> = b.samples.iter().map(|s| s.ratio).collect();
        assert_eq!(ra, rb);
    }

    #[test]
    fn per_phase_sections_cover_exactly_the_phases_with_boundary() {
        let p = t_tripod();
        let h = p.grid().h();
        let config = DiagnosticsConfig::for_grid(p.grid());
        let sections = per_phase_ahlfors(&p, &[8.0 * h], &config).unwrap();
        let labels: Vec<u32> = sections.iter().map(|s| s.label).collect();
        assert_eq!(labels, vec![1, 2, 3]);
        for s in &sections {
            assert!(s.section.min_ratio.unwrap() <= s.section.max_ratio.unwrap());
            // Phase 1's boundary is the full vertical line; phases 2 and 3
            // also border each other, so their boundaries are longer.
            assert!(s.section.max_ratio.unwrap() <= 4.0);
        }
    }

    #[test]
    fn distance_transform_matches_brute_force() {
        let grid = Grid::rect(7, 5, 1.0).unwrap();
        // Deterministic scatter of three labels.
        let labels: Vec<u32> = (0..35).map(|c| (c * 7 + 3) as u32 % 3 + 1).collect();
        let p = Partition::new(grid.clone(), 3, labels.clone()).unwrap();
        for label in 1..=3 {
            let edt = phase_squared_edt(&p, label);
            for iy in 0..5 {
                for ix in 0..7 {
                    let mut want = f64::INFINITY;
                    for jy in 0..5i64 {
                        for jx in 0..7i64 {
                            let c = grid.cell_at(jx as usize, jy as usize).unwrap();
                            if labels[c] != label {
                                let d = (jx - ix as i64).pow(2) + (jy - iy as i64).pow(2);
                                want = want.min(d as f64);
                            }
                        }
                    }
                    assert_eq!(edt[iy as usize * 7 + ix as usize], want, "label {label} at ({ix},{iy})");
                }
            }
        }
    }

    #[test]
    fn distance_transform_treats_masked_cells_as_obstacles() {
        // 4x4 with the left column masked out; phase 1 everywhere else.
        let mut mask = vec![true; 16];
        for iy in 0..4 {
            mask[iy * 4] = false;
        }
        let grid = Grid::new(4, 4, 1.0, mask).unwrap();
        let p = Partition::uniform(grid, 1, 1).unwrap();
        let edt = phase_squared_edt(&p, 1);
        // Site (1, y) sits one step from the masked column.
        assert_eq!(edt[1], 1.0);
        assert_eq!(edt[2], 4.0);
        assert_eq!(edt[0], 0.0);
    }

    #[test]
    fn straight_interface_admits_half_scale_balls_in_both_phases() {
        // Finer raster: 128x128, scan radius 0.25 = 32h. The best centers
        // sit 15.5 or 16.5 cells from the interface plane, giving inscribed
        // radius 15.5h in each phase.
        let grid = Grid::rect(128, 128, 1.0 / 128.0).unwrap();
        let labels = (0..128 * 128)
            .map(|c| if grid.coords(c).0 < 64 { 1 } else { 2 })
            .collect();
        let p = Partition::new(grid.clone(), 2, labels).unwrap();
        let h = grid.h();
        let config = DiagnosticsConfig {
            margin: 32.0 * h,
            ..DiagnosticsConfig::for_grid(&grid)
        };
        let samples = condition_b_scan(&p, None, 0.25, &config).unwrap();
        assert!(!samples.is_empty());
        for s in &samples {
            assert!(!s.single_phase);
            assert_eq!(s.phases.len(), 2);
            assert_eq!(s.phases[0].radius, 15.5 * h);
            assert_eq!(s.phases[1].radius, 15.5 * h);
            assert!(s.phases[1].radius >= 0.12);
            let c1 = s.c1.unwrap();
            assert!((c1 - 0.25 / (15.5 * h)).abs() < 1e-12);
            for b in &s.phases {
                assert!(b.radius <= s.radius);
            }
        }
    }

    #[test]
    fn inscribed_radii_grow_with_the_scan_ball() {
        let p = t_tripod();
        let h = p.grid().h();
        let config = DiagnosticsConfig {
            margin: 4.0 * h,
            ..DiagnosticsConfig::for_grid(p.grid())
        };
        let x = [[0.5, 0.25]];
        let mut last = 0.0;
        for steps in [4.0, 8.0, 12.0, 16.0] {
            let s = &condition_b_scan(&p, Some(&x), steps * h, &config).unwrap()[0];
            assert!(s.phases[0].radius >= last);
            last = s.phases[0].radius;
        }
    }

    #[test]
    fn ball_away_from_the_interface_reports_one_phase() {
        let p = bisection();
        let h = p.grid().h();
        let config = DiagnosticsConfig::for_grid(p.grid());
        let samples = condition_b_scan(&p, Some(&[[0.25, 0.5]]), 8.0 * h, &config).unwrap();
        assert_eq!(samples.len(), 1);
        assert!(samples[0].single_phase);
        assert_eq!(samples[0].phases.len(), 1);
        assert_eq!(samples[0].phases[0].label, 1);
        assert_eq!(samples[0].c1, None);
    }

    #[test]
    fn half_ball_isoperimetry_stays_below_one() {
        let p = bisection();
        let h = p.grid().h();
        let mut balls = Vec::new();
        for steps in [4.0, 8.0, 16.0] {
            balls.push(([0.5, 0.5], steps * h));
        }
        let section = isoperimetry_scan(&p, &balls, 0.1);
        // Two phases per ball, all with positive relative perimeter.
        assert_eq!(section.samples.len(), 6);
        assert_eq!(section.zero_perimeter_flags, 0);
        for s in &section.samples {
            assert!(s.perimeter > 0.0);
            assert!(s.ratio.unwrap() <= 1.0);
        }
        assert!(section.max_ratio.unwrap() <= 1.0);
    }

    #[test]
    fn enclosed_island_raises_the_zero_perimeter_flag() {
        let grid = Grid::rect(16, 16, 1.0).unwrap();
        let labels = (0..256)
            .map(|c| {
                let (ix, iy) = grid.coords(c);
                if (7..9).contains(&ix) && (7..9).contains(&iy) {
                    2
                } else {
                    1
                }
            })
            .collect();
        let p = Partition::new(grid, 2, labels).unwrap();
        // Ball around the island: Z is the whole 2x2 phase, no internal
        // boundary. Unfiltered (v0 large) it must be flagged.
        let section = isoperimetry_scan(&p, &[([8.0, 8.0], 4.0)], 1000.0);
        let island = section.samples.iter().find(|s| s.label == 2).unwrap();
        assert!(island.zero_perimeter);
        assert_eq!(island.volume, 4.0);
        assert_eq!(island.ratio, None);
        assert_eq!(section.zero_perimeter_flags, 1);
        // The volume cutoff removes the same sample.
        let filtered = isoperimetry_scan(&p, &[([8.0, 8.0], 4.0)], 3.9);
        assert!(filtered.samples.iter().all(|s| s.label != 2));
    }

    #[test]
    fn empty_intersections_produce_no_samples() {
        let p = bisection();
        let section = isoperimetry_scan(&p, &[([0.25, 0.5], 0.1)], 1.0);
        assert_eq!(section.samples.len(), 1);
        assert_eq!(section.samples[0].label, 1);
    }

    #[test]
    fn t_tripod_yields_one_junction_with_quarter_turn_gaps() {
        let p = t_tripod();
        let h = p.grid().h();
        let junctions = junction_scan(&p, 6.0 * h, 2.0 * h);
        assert_eq!(junctions.len(), 1);
        let j = &junctions[0];
        assert_eq!(j.labels, [1, 2, 3]);
        assert_eq!(j.point, [0.5, 0.5]);
        // Branches point down (1|2), up (1|3), right (2|3).
        let mut angles = j.angles;
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((angles[0] - 90.0).abs() < 1.0);
        assert!((angles[1] - 90.0).abs() < 1.0);
        assert!((angles[2] - 180.0).abs() < 1.0);
        let sum: f64 = j.angles.iter().sum();
        assert!((sum - 360.0).abs() < 1e-9);
    }

    #[test]
    fn adjacent_candidates_merge_into_one_junction() {
        // Column split 1|2 with a single cell of phase 3 on the seam: the
        // two vertices flanking that cell both see three labels.
        let grid = Grid::rect(8, 8, 1.0).unwrap();
        let labels = (0..64)
            .map(|c| {
                let (ix, iy) = grid.coords(c);
                if ix == 4 && iy == 4 {
                    3
                } else if ix < 4 {
                    1
                } else {
                    2
                }
            })
            .collect();
        let p = Partition::new(grid, 3, labels).unwrap();
        let junctions = junction_scan(&p, 3.0, 2.0);
        assert_eq!(junctions.len(), 1);
        assert_eq!(junctions[0].labels, [1, 2, 3]);
        assert_eq!(junctions[0].point, [4.0, 4.5]);
    }

    #[test]
    fn ideal_tripod_raster_recovers_near_third_turn_angles() {
        // Three sectors meeting at the center with boundaries at 90, 210
        // and 330 degrees, rasterized by cell-center angle at h = 1/128.
        let grid = Grid::rect(128, 128, 1.0 / 128.0).unwrap();
        let labels = (0..128 * 128)
            .map(|c| {
                let y = grid.center(c);
                let deg = (y[1] - 0.5).atan2(y[0] - 0.5).to_degrees().rem_euclid(360.0);
                if (90.0..210.0).contains(&deg) {
                    1
                } else if (210.0..330.0).contains(&deg) {
                    2
                } else {
                    3
                }
            })
            .collect();
        let p = Partition::new(grid.clone(), 3, labels).unwrap();
        let h = grid.h();
        let junctions = junction_scan(&p, 6.0 * h, 2.0 * h);
        assert_eq!(junctions.len(), 1);
        let j = &junctions[0];
        assert!((j.point[0] - 0.5).abs() <= 2.0 * h);
        assert!((j.point[1] - 0.5).abs() <= 2.0 * h);
        for &angle in &j.angles {
            assert!((angle - 120.0).abs() <= 8.0, "angle {angle} off 120");
        }
        assert!((j.angles.iter().sum::<f64>() - 360.0).abs() < 1e-9);
    }

    #[test]
    fn two_phase_partitions_have_no_junctions() {
        assert!(junction_scan(&bisection(), 0.1, 0.05).is_empty());
    }

    #[test]
    fn gauge_exponent_matches_hand_values() {
        assert_eq!(gauge_exponent(1.0, 0.5), 0.5);
        assert_eq!(gauge_exponent(0.75, 1.0), 0.5);
        assert_eq!(gauge_exponent(1.0, 1.0), 1.0);
        // Positive whenever alpha > 1/2 and beta > 0.
        for alpha in [0.51, 0.7, 0.9, 1.3] {
            for beta in [0.05, 0.4, 1.0] {
                assert!(gauge_exponent(alpha, beta) > 0.0);
            }
        }
    }

    #[test]
    fn full_report_on_a_single_phase_partition_is_empty_but_well_formed() {
        let grid = Grid::rect(16, 16, 0.25).unwrap();
        let p = Partition::uniform(grid.clone(), 3, 2).unwrap();
        let spec = BulkTermSpec::volume_quadratic(&grid, 3, 0.5).unwrap();
        let config = DiagnosticsConfig::for_grid(&grid);
        let report = full_report(&p, &spec, None, &config);
        assert!(report.ahlfors.samples.is_empty());
        assert!(report.per_phase_ahlfors.is_empty());
        assert!(report.condition_b.is_empty());
        assert!(report.isoperimetry.samples.is_empty());
        assert!(report.junctions.is_empty());
        assert!(report.errors.is_empty());
        assert_eq!(report.nontrivial_phases, 1);
        assert_eq!(report.gauge, None);
    }

    #[test]
    fn full_report_fills_every_section_on_a_tripod() {
        let p = t_tripod();
        let grid = p.grid().clone();
        let spec = BulkTermSpec::volume_quadratic(&grid, 3, 0.5)
            .unwrap()
            .with_holder(1.0, 2.0)
            .unwrap();
        let weight = WeightSpec::new(
            0.1,
            10.0,
            crate::landscape::WeightSource::Direct,
        )
        .unwrap()
        .with_holder(0.5, 1.0)
        .unwrap();
        let config = DiagnosticsConfig::for_grid(&grid);
        let report = full_report(&p, &spec, Some(&weight), &config);
        assert!(report.errors.is_empty(), "errors: {:?}", report.errors);
        assert!(!report.ahlfors.samples.is_empty());
        assert_eq!(report.per_phase_ahlfors.len(), 3);
        assert!(!report.condition_b.is_empty());
        assert!(!report.isoperimetry.samples.is_empty());
        assert_eq!(report.junctions.len(), 1);
        assert_eq!(report.nontrivial_phases, 3);
        let gauge = report.gauge.unwrap();
        assert_eq!(gauge.gamma, 0.5);
        assert!(report.ahlfors.min_ratio.unwrap() <= report.ahlfors.max_ratio.unwrap());
        for s in &report.condition_b {
            for b in &s.phases {
                assert!(b.radius <= s.radius && b.radius >= 0.0);
            }
        }
    }

    #[test]
    fn sample_cap_thins_deterministically() {
        let p = bisection();
        let h = p.grid().h();
        let config = DiagnosticsConfig {
            margin: 4.0 * h,
            sample_cap: 10,
            ..DiagnosticsConfig::for_grid(p.grid())
        };
        let a = ahlfors_scan(&p, None, &[8.0 * h], &config).unwrap();
        let b = ahlfors_scan(&p, None, &[8.0 * h], &config).unwrap();
        assert_eq!(a.samples.len(), 10);
        assert_eq!(a, b);
    }
}
