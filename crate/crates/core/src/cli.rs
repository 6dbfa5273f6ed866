//! Command-line interface: a plain-text configuration file drives the
//! `landscape`, `partition`, `diagnose`, and `oracle` subcommands.
//!
//! # Configuration format
//!
//! One `key = value` pair per line. Blank lines and lines whose first
//! non-space character is `#` are ignored; there are no inline comments.
//! Line endings are plain LF. Unknown and duplicate keys are rejected with
//! the byte offset of the key; values that fail to parse are rejected with
//! the byte offset of the value (both exit with code 2). Keys that are
//! missing, inconsistent with each other, or out of range for their module
//! exit with code 3. Relative paths — including `output.dir` — resolve
//! against the directory containing the configuration file; `--out` and
//! `--seed` override `output.dir` and `seed` from the command line.
//!
//! | key | meaning |
//! |-----|---------|
//! | `grid.nx`, `grid.ny`, `grid.h` | grid shape (required) and cell size |
//! | `grid.mask` | optional mask raster; `1` keeps a cell in the domain |
//! | `weight.source` | `direct` (file is the weight) or `landscape` (file is the potential `V`) |
//! | `weight.field` / `weight.potential` | input field for the chosen source |
//! | `weight.delta`, `weight.cap` | clamp bounds of the weight |
//! | `weight.beta`, `weight.c_beta` | optional declared weight regularity (pair) |
//! | `weight.tol`, `weight.max_iter` | landscape solver controls |
//! | `labels.n` | number of phases |
//! | `bulk.kind` | only `volume_quadratic` |
//! | `bulk.lambda` | volume penalty strength |
//! | `bulk.targets` | optional per-label target volumes (defaults to equal) |
//! | `bulk.alpha`, `bulk.c_alpha` | optional bulk continuity data (pair) |
//! | `optimizer.init` | `voronoi`, `random`, `stripes`, or `watershed` |
//! | `optimizer.max_sweeps`, `optimizer.pour_moves_per_sweep` | sweep loop bounds |
//! | `optimizer.radius_range` | two numbers: inclusive pour radius bounds |
//! | `optimizer.t0`, `optimizer.decay` | optional annealing schedule (pair) |
//! | `optimizer.clean` | absorb small components after the sweep loop |
//! | `optimizer.min_component_volume` | cleaning threshold (default `4 h^2`) |
//! | `diagnostics.margin` | interior window margin |
//! | `diagnostics.scales` | density scan radii |
//! | `diagnostics.condition_b_radius` | inscribed-ball scan radius |
//! | `diagnostics.isoperimetry_radii` | isoperimetry scan radii |
//! | `diagnostics.volume_filter`, `diagnostics.sample_cap` | scan limits |
//! | `diagnostics.junction_fit_radius`, `diagnostics.junction_merge_radius` | junction detection |
//! | `diagnostics.labels` | label raster to diagnose |
//! | `oracle.max_assignments` | enumeration budget |
//! | `oracle.verify` | optional candidate raster to gap-check |
//! | `output.dir` | output directory (default: the configuration's directory) |
//! | `output.pgm` | also write a PGM preview of the partition |
//! | `seed` | RNG seed (default 0) |
//!
//! # Commands and outputs
//!
//! * `landscape` — solves `-Δw + Vw = 1` for the potential in
//!   `weight.potential`, writes `w.field` and the clamped weight `a.field`,
//!   and prints the iteration count and relative residual.
//! * `partition` — builds the weight, minimizes the energy, and writes
//!   `partition.labels`, the per-sweep `trace.csv`, and `energy.txt` with
//!   the final breakdown (after optional cleaning). With `output.pgm =
//!   true` it also writes `partition.pgm`.
//! * `diagnose` — reads `diagnostics.labels` and writes the regularity
//!   scans to `regularity.report`.
//! * `oracle` — exhaustively minimizes the configured instance, writes the
//!   minimizer to `oracle.labels` and the numbers to `oracle.txt`, and with
//!   `oracle.verify` appends a gap report for the candidate raster.
//!
//! Exit codes: 0 success, 2 malformed input (file syntax, unknown keys,
//! missing files), 3 inconsistent or out-of-range values, 4 oracle budget
//! exceeded, 5 solver divergence.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::diagnostics::{full_report, DiagnosticsConfig};
use crate::energy::{total_energy, BulkTermSpec, EnergySpec};
use crate::error::Error;
use crate::grid::{Grid, ScalarField};
use crate::io;
use crate::landscape::{
    build_weight, default_max_iter, solve_landscape, LandscapeSolution, WeightSource, WeightSpec,
    DEFAULT_TOL,
};
use crate::optimizer::{
    clean, default_min_component_volume, minimize, InitStrategy, OptimizerConfig,
    TemperatureSchedule,
};
use crate::oracle::{brute_force_min, verify_against, DEFAULT_MAX_ASSIGNMENTS};
use crate::Result;

/// How the weight field is produced for a run.
#[derive(Debug, Clone)]
pub struct WeightPlan {
    /// Clamp bounds, source, and declared regularity.
    pub spec: WeightSpec,
    /// The weight file (`direct`) or the potential file (`landscape`).
    pub path: PathBuf,
    /// Landscape solver tolerance.
    pub tol: f64,
    /// Landscape solver iteration cap.
    pub max_iter: usize,
}

/// A fully parsed and validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub grid: Arc<Grid>,
    /// Number of phases; present when `labels.n` is set.
    pub n_labels: Option<u32>,
    /// Bulk term; present when `labels.n` and `bulk.lambda` are set.
    pub bulk: Option<BulkTermSpec>,
    /// Weight construction; present when any `weight.*` key is set.
    pub weight: Option<WeightPlan>,
    pub optimizer: OptimizerConfig,
    /// Absorb small components after the sweep loop.
    pub clean_components: bool,
    /// Cleaning threshold; `None` uses `4 h^2`.
    pub min_component_volume: Option<f64>,
    pub diagnostics: DiagnosticsConfig,
    /// Label raster for the `diagnose` command.
    pub diagnostics_labels: Option<PathBuf>,
    pub oracle_max_assignments: u64,
    /// Candidate raster for the oracle gap check.
    pub oracle_verify: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub write_pgm: bool,
    pub seed: u64,
}

fn ferr(path: &Path, offset: usize, msg: impl Into<String>) -> Error {
    Error::Format { path: path.display().to_string(), offset, msg: msg.into() }
}

fn wrap_io(path: &Path, e: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Errors unless `path` names an existing file.
fn check_file(path: &Path) -> Result<()> {
    std::fs::metadata(path).map(|_| ()).map_err(|e| wrap_io(path, e))
}

struct RawEntry {
    key_offset: usize,
    value_offset: usize,
    value: String,
}

/// Splits the configuration text into `key -> value` entries with byte
/// offsets for error reporting.
fn parse_entries(text: &str, path: &Path) -> Result<BTreeMap<String, RawEntry>> {
    let mut entries: BTreeMap<String, RawEntry> = BTreeMap::new();
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let start = offset;
        offset += line.len();
        let content = line.strip_suffix('\n').unwrap_or(line);
        if content.ends_with('\r') {
            let at = start + content.len() - 1;
            return Err(ferr(path, at, "carriage return; line endings must be plain LF"));
        }
        let body = content.trim_start();
        let lead = content.len() - body.len();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let Some(eq) = body.find('=') else {
            return Err(ferr(path, start + lead, "expected `key = value`"));
        };
        let key = body[..eq].trim_end();
        if key.is_empty() {
            return Err(ferr(path, start + lead, "empty key before `=`"));
        }
        let after = &body[eq + 1..];
        let value = after.trim();
        let value_offset = start + lead + eq + 1 + (after.len() - after.trim_start().len());
        if value.is_empty() {
            return Err(ferr(path, value_offset, format!("key `{key}` has an empty value")));
        }
        let entry = RawEntry {
            key_offset: start + lead,
            value_offset,
            value: value.to_string(),
        };
        if entries.insert(key.to_string(), entry).is_some() {
            return Err(ferr(path, start + lead, format!("duplicate key `{key}`")));
        }
    }
    Ok(entries)
}

/// Typed access to the raw entries; every key must be consumed.
struct ConfigReader {
    path: PathBuf,
    /// Directory of the configuration file; relative paths resolve here.
    base: PathBuf,
    entries: BTreeMap<String, RawEntry>,
}

impl ConfigReader {
    fn take(&mut self, key: &str) -> Option<RawEntry> {
        self.entries.remove(key)
    }

    fn parse<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        let Some(e) = self.take(key) else { return Ok(None) };
        match e.value.parse::<T>() {
            Ok(v) => Ok(Some(v)),
            Err(_) => Err(ferr(
                &self.path,
                e.value_offset,
                format!("cannot parse `{}` for key `{key}`", e.value),
            )),
        }
    }

    fn require<T: FromStr>(&mut self, key: &str) -> Result<T> {
        self.parse(key)?
            .ok_or_else(|| Error::Invalid(format!("config is missing required key `{key}`")))
    }

    /// Whitespace-separated list of numbers.
    fn parse_list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(e) = self.take(key) else { return Ok(None) };
        let mut out = Vec::new();
        for (off, tok) in io::tokens_with_offsets(&e.value, e.value_offset) {
            let v = tok.parse::<f64>().map_err(|_| {
                ferr(&self.path, off, format!("cannot parse `{tok}` in list key `{key}`"))
            })?;
            out.push(v);
        }
        Ok(Some(out))
    }

    fn path_value(&mut self, key: &str) -> Option<PathBuf> {
        let e = self.take(key)?;
        Some(self.base.join(e.value))
    }

    fn weight_source(&mut self) -> Result<Option<WeightSource>> {
        let Some(e) = self.take("weight.source") else { return Ok(None) };
        match e.value.as_str() {
            "direct" => Ok(Some(WeightSource::Direct)),
            "landscape" => Ok(Some(WeightSource::Landscape)),
            other => Err(ferr(
                &self.path,
                e.value_offset,
                format!("unknown weight source `{other}`; expected direct | landscape"),
            )),
        }
    }

    fn init_strategy(&mut self) -> Result<Option<InitStrategy>> {
        let Some(e) = self.take("optimizer.init") else { return Ok(None) };
        match e.value.as_str() {
            "voronoi" => Ok(Some(InitStrategy::VoronoiSeeds)),
            "random" => Ok(Some(InitStrategy::Random)),
            "stripes" => Ok(Some(InitStrategy::Stripes)),
            "watershed" => Ok(Some(InitStrategy::WatershedMinusW)),
            other => Err(ferr(
                &self.path,
                e.value_offset,
                format!("unknown init strategy `{other}`; expected voronoi | random | stripes | watershed"),
            )),
        }
    }

    /// Errors on the earliest remaining (unconsumed, hence unknown) key.
    fn finish(self) -> Result<()> {
        match self.entries.iter().min_by_key(|(_, e)| e.key_offset) {
            Some((key, e)) => Err(ferr(&self.path, e.key_offset, format!("unknown key `{key}`"))),
            None => Ok(()),
        }
    }
}

/// Requires paired optional keys to be set together.
fn both_or_neither<A, B>(
    a: Option<A>,
    b: Option<B>,
    ka: &str,
    kb: &str,
) -> Result<Option<(A, B)>> {
    match (a, b) {
        (Some(a), Some(b)) => Ok(Some((a, b))),
        (None, None) => Ok(None),
        (Some(_), None) => Err(Error::Invalid(format!("`{ka}` needs `{kb}` as well"))),
        (None, Some(_)) => Err(Error::Invalid(format!("`{kb}` needs `{ka}` as well"))),
    }
}

impl RunConfig {
    /// Reads and fully validates a configuration file. Referenced input
    /// files must exist, and every module-level invariant is checked here,
    /// before any run starts.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| wrap_io(path, e))?;
        let base = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
        let entries = parse_entries(&text, path)?;
        let mut r = ConfigReader { path: path.to_path_buf(), base, entries };

        let nx: usize = r.require("grid.nx")?;
        let ny: usize = r.require("grid.ny")?;
        let h: f64 = r.require("grid.h")?;
        let grid = match r.path_value("grid.mask") {
            Some(mask_path) => {
                let (mnx, mny, mask) = io::read_mask(&mask_path)?;
                if (mnx, mny) != (nx, ny) {
                    return Err(Error::Mismatch(format!(
                        "mask file {} is {mnx} x {mny}, config grid is {nx} x {ny}",
                        mask_path.display()
                    )));
                }
                Grid::new(nx, ny, h, mask)?
            }
            None => Grid::rect(nx, ny, h)?,
        };

        let source = r.weight_source()?;
        let field_path = r.path_value("weight.field");
        let potential_path = r.path_value("weight.potential");
        let delta: Option<f64> = r.parse("weight.delta")?;
        let cap: Option<f64> = r.parse("weight.cap")?;
        let beta: Option<f64> = r.parse("weight.beta")?;
        let c_beta: Option<f64> = r.parse("weight.c_beta")?;
        let tol: Option<f64> = r.parse("weight.tol")?;
        let max_iter: Option<usize> = r.parse("weight.max_iter")?;
        let any_weight = source.is_some()
            || field_path.is_some()
            || potential_path.is_some()
            || delta.is_some()
            || cap.is_some()
            || beta.is_some()
            || c_beta.is_some()
            || tol.is_some()
            || max_iter.is_some();
        let weight = if any_weight {
            let source = source.ok_or_else(|| {
                Error::Invalid("weight keys are present but `weight.source` is missing".into())
            })?;
            let input = match source {
                WeightSource::Direct => {
                    if potential_path.is_some() {
                        return Err(Error::Invalid(
                            "`weight.potential` only applies when weight.source = landscape".into(),
                        ));
                    }
                    field_path.ok_or_else(|| {
                        Error::Invalid("weight.source = direct needs `weight.field`".into())
                    })?
                }
                WeightSource::Landscape => {
                    if field_path.is_some() {
                        return Err(Error::Invalid(
                            "`weight.field` only applies when weight.source = direct".into(),
                        ));
                    }
                    potential_path.ok_or_else(|| {
                        Error::Invalid("weight.source = landscape needs `weight.potential`".into())
                    })?
                }
            };
            let delta = delta
                .ok_or_else(|| Error::Invalid("weight section needs `weight.delta`".into()))?;
            let cap =
                cap.ok_or_else(|| Error::Invalid("weight section needs `weight.cap`".into()))?;
            let mut spec = WeightSpec::new(delta, cap, source)?;
            if let Some((b, c)) = both_or_neither(beta, c_beta, "weight.beta", "weight.c_beta")? {
                spec = spec.with_holder(b, c)?;
            }
            check_file(&input)?;
            Some(WeightPlan {
                spec,
                path: input,
                tol: tol.unwrap_or(DEFAULT_TOL),
                max_iter: max_iter.unwrap_or_else(|| default_max_iter(&grid)),
            })
        } else {
            None
        };

        let n_labels: Option<u32> = r.parse("labels.n")?;
        if let Some(e) = r.take("bulk.kind") {
            if e.value != "volume_quadratic" {
                return Err(ferr(
                    &r.path,
                    e.value_offset,
                    format!("unknown bulk kind `{}`; expected volume_quadratic", e.value),
                ));
            }
        }
        let lambda: Option<f64> = r.parse("bulk.lambda")?;
        let targets = r.parse_list("bulk.targets")?;
        let holder = both_or_neither(
            r.parse::<f64>("bulk.alpha")?,
            r.parse::<f64>("bulk.c_alpha")?,
            "bulk.alpha",
            "bulk.c_alpha",
        )?;
        let bulk = match (n_labels, lambda) {
            (Some(n), Some(lambda)) => {
                let mut spec = match targets {
                    Some(t) => {
                        if t.len() != n as usize {
                            return Err(Error::Invalid(format!(
                                "bulk.targets has {} entries for {n} labels",
                                t.len()
                            )));
                        }
                        BulkTermSpec::volume_quadratic_with_targets(&grid, lambda, t)?
                    }
                    None => BulkTermSpec::volume_quadratic(&grid, n, lambda)?,
                };
                if let Some((a, c)) = holder {
                    spec = spec.with_holder(a, c)?;
                }
                Some(spec)
            }
            (None, None) => {
                if targets.is_some() || holder.is_some() {
                    return Err(Error::Invalid(
                        "bulk.targets and bulk.alpha need `labels.n` and `bulk.lambda`".into(),
                    ));
                }
                None
            }
            (Some(_), None) => {
                return Err(Error::Invalid(
                    "`labels.n` needs `bulk.lambda` to define the energy".into(),
                ))
            }
            (None, Some(_)) => {
                return Err(Error::Invalid("`bulk.lambda` needs `labels.n`".into()))
            }
        };

        let mut optimizer = OptimizerConfig::for_grid(&grid);
        if let Some(init) = r.init_strategy()? {
            optimizer.init = init;
        }
        if let Some(v) = r.parse("optimizer.max_sweeps")? {
            optimizer.max_sweeps = v;
        }
        if let Some(v) = r.parse("optimizer.pour_moves_per_sweep")? {
            optimizer.pour_moves_per_sweep = v;
        }
        if let Some(range) = r.parse_list("optimizer.radius_range")? {
            if range.len() != 2 {
                return Err(Error::Invalid(
                    "optimizer.radius_range needs exactly two numbers".into(),
                ));
            }
            optimizer.radius_range = (range[0], range[1]);
        }
        let schedule = both_or_neither(
            r.parse::<f64>("optimizer.t0")?,
            r.parse::<f64>("optimizer.decay")?,
            "optimizer.t0",
            "optimizer.decay",
        )?;
        if let Some((t0, decay)) = schedule {
            optimizer.temperature = Some(TemperatureSchedule { t0, decay });
        }
        let clean_components = r.parse("optimizer.clean")?.unwrap_or(false);
        let min_component_volume: Option<f64> = r.parse("optimizer.min_component_volume")?;
        optimizer.validate(&grid)?;

        let mut diagnostics = DiagnosticsConfig::for_grid(&grid);
        if let Some(v) = r.parse("diagnostics.margin")? {
            diagnostics.margin = v;
        }
        if let Some(v) = r.parse_list("diagnostics.scales")? {
            diagnostics.scales = v;
        }
        if let Some(v) = r.parse("diagnostics.condition_b_radius")? {
            diagnostics.condition_b_radius = v;
        }
        if let Some(v) = r.parse_list("diagnostics.isoperimetry_radii")? {
            diagnostics.isoperimetry_radii = v;
        }
        if let Some(v) = r.parse("diagnostics.volume_filter")? {
            diagnostics.volume_filter = Some(v);
        }
        if let Some(v) = r.parse("diagnostics.sample_cap")? {
            diagnostics.sample_cap = v;
        }
        if let Some(v) = r.parse("diagnostics.junction_fit_radius")? {
            diagnostics.junction_fit_radius = v;
        }
        if let Some(v) = r.parse("diagnostics.junction_merge_radius")? {
            diagnostics.junction_merge_radius = v;
        }
        let diagnostics_labels = r.path_value("diagnostics.labels");
        if let Some(p) = &diagnostics_labels {
            check_file(p)?;
        }

        let oracle_max_assignments =
            r.parse("oracle.max_assignments")?.unwrap_or(DEFAULT_MAX_ASSIGNMENTS);
        let oracle_verify = r.path_value("oracle.verify");
        if let Some(p) = &oracle_verify {
            check_file(p)?;
        }

        let out_dir = match r.take("output.dir") {
            Some(e) => r.base.join(e.value),
            None => r.base.clone(),
        };
        let write_pgm = r.parse("output.pgm")?.unwrap_or(false);
        let seed: u64 = r.parse("seed")?.unwrap_or(0);
        r.finish()?;

        optimizer.seed = seed;
        Ok(RunConfig {
            grid,
            n_labels,
            bulk,
            weight,
            optimizer,
            clean_components,
            min_component_volume,
            diagnostics,
            diagnostics_labels,
            oracle_max_assignments,
            oracle_verify,
            out_dir,
            write_pgm,
            seed,
        })
    }

    /// Applies command-line overrides for the seed and output directory.
    pub fn apply_overrides(&mut self, seed: Option<u64>, out: Option<PathBuf>) {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(o) = out {
            self.out_dir = o;
        }
        self.optimizer.seed = self.seed;
    }

    fn require_n(&self) -> Result<u32> {
        self.n_labels
            .ok_or_else(|| Error::Invalid("this command needs `labels.n`".into()))
    }

    fn require_bulk(&self) -> Result<&BulkTermSpec> {
        self.bulk.as_ref().ok_or_else(|| {
            Error::Invalid("this command needs `labels.n` and `bulk.lambda`".into())
        })
    }

    fn require_weight(&self) -> Result<&WeightPlan> {
        self.weight.as_ref().ok_or_else(|| {
            Error::Invalid(
                "this command needs a weight section (`weight.source`, `weight.delta`, `weight.cap`, and the input file)".into(),
            )
        })
    }
}

/// Smallest and largest value of a field.
fn value_range(field: &ScalarField) -> (f64, f64) {
    field
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Builds the weight field, solving the landscape equation when the
/// configuration asks for it.
fn resolve_weight(config: &RunConfig) -> Result<(ScalarField, Option<LandscapeSolution>)> {
    let plan = config.require_weight()?;
    let input = io::read_field(&plan.path, &config.grid)?;
    match plan.spec.source {
        WeightSource::Direct => Ok((build_weight(&input, &plan.spec)?, None)),
        WeightSource::Landscape => {
            let solution = solve_landscape(&input, plan.tol, plan.max_iter)?;
            let a = build_weight(&solution.w, &plan.spec)?;
            Ok((a, Some(solution)))
        }
    }
}

/// `landscape` command: solve for `w`, clamp into the weight, write both.
pub fn cmd_landscape(config: &RunConfig) -> Result<()> {
    let plan = config.require_weight()?;
    if plan.spec.source != WeightSource::Landscape {
        return Err(Error::Invalid(
            "the landscape command needs weight.source = landscape".into(),
        ));
    }
    let (a, solution) = resolve_weight(config)?;
    let solution = solution.expect("landscape source always produces a solution");
    io::write_field(&config.out_dir.join("w.field"), &solution.w)?;
    io::write_field(&config.out_dir.join("a.field"), &a)?;
    println!(
        "landscape: {} iterations, relative residual {:.3e}",
        solution.iterations, solution.relative_residual
    );
    let (lo, hi) = value_range(&solution.w);
    println!("w range: [{lo}, {hi}]");
    Ok(())
}

/// `partition` command: minimize the energy and write labels, trace, and
/// the final breakdown.
pub fn cmd_partition(config: &RunConfig) -> Result<()> {
    let n = config.require_n()?;
    let bulk = config.require_bulk()?;
    let spec = EnergySpec::new(bulk.clone());
    let (a, _) = resolve_weight(config)?;
    let outcome = minimize(&config.grid, n, &a, &spec, &config.optimizer)?;
    let mut partition = outcome.partition;
    if config.clean_components {
        let threshold = config
            .min_component_volume
            .unwrap_or_else(|| default_min_component_volume(&config.grid));
        partition = clean(&partition, &a, &spec, threshold)?;
    }
    let breakdown = total_energy(&partition, &a, &spec)?;

    io::write_labels(&config.out_dir.join("partition.labels"), &partition)?;
    io::write_trace(&config.out_dir.join("trace.csv"), &outcome.trace)?;
    let mut s = String::new();
    let _ = writeln!(s, "F = {}", breakdown.interface_term);
    let _ = writeln!(s, "G = {}", breakdown.bulk_term);
    let _ = writeln!(s, "J = {}", breakdown.total);
    let _ = writeln!(s, "interface_length = {}", breakdown.interface_length_unweighted);
    s.push_str("per_phase_perimeter =");
    for v in &breakdown.per_phase_perimeter {
        let _ = write!(s, " {v}");
    }
    s.push('\n');
    io::write_atomic(&config.out_dir.join("energy.txt"), s.as_bytes())?;
    if config.write_pgm {
        io::write_pgm(&config.out_dir.join("partition.pgm"), &partition)?;
    }
    println!(
        "partition: J = {} (F = {}, G = {}) after {} sweeps",
        breakdown.total,
        breakdown.interface_term,
        breakdown.bulk_term,
        outcome.trace.records().len().saturating_sub(1)
    );
    Ok(())
}

/// `diagnose` command: scan a label raster and write the regularity report.
pub fn cmd_diagnose(config: &RunConfig) -> Result<()> {
    let n = config.require_n()?;
    let bulk = config.require_bulk()?;
    let labels_path = config
        .diagnostics_labels
        .as_ref()
        .ok_or_else(|| Error::Invalid("the diagnose command needs `diagnostics.labels`".into()))?;
    let partition = io::read_labels(labels_path, &config.grid)?;
    if partition.n_labels() != n {
        return Err(Error::Mismatch(format!(
            "labels file declares {} labels, config labels.n = {n}",
            partition.n_labels()
        )));
    }
    let report = full_report(
        &partition,
        bulk,
        config.weight.as_ref().map(|w| &w.spec),
        &config.diagnostics,
    );
    io::write_report(&config.out_dir.join("regularity.report"), &report)?;
    for e in &report.errors {
        eprintln!("warning: {e}");
    }
    println!(
        "diagnose: {} density samples, {} inscribed-ball samples, {} isoperimetry samples, {} junctions, {} nontrivial phases",
        report.ahlfors.samples.len(),
        report.condition_b.len(),
        report.isoperimetry.samples.len(),
        report.junctions.len(),
        report.nontrivial_phases
    );
    Ok(())
}

/// `oracle` command: exhaustive minimization, optionally with a gap check
/// of a candidate raster.
pub fn cmd_oracle(config: &RunConfig) -> Result<()> {
    let n = config.require_n()?;
    let bulk = config.require_bulk()?;
    let spec = EnergySpec::new(bulk.clone());
    let (a, _) = resolve_weight(config)?;
    let outcome = brute_force_min(&config.grid, n, &a, &spec, config.oracle_max_assignments)?;
    io::write_labels(&config.out_dir.join("oracle.labels"), &outcome.minimizer)?;

    let mut s = String::new();
    let _ = writeln!(s, "j_min = {}", outcome.j_min);
    let _ = writeln!(s, "minimizer_count = {}", outcome.minimizer_count);
    let _ = writeln!(s, "assignments = {}", outcome.assignments);
    if let Some(candidate_path) = &config.oracle_verify {
        let candidate = io::read_labels(candidate_path, &config.grid)?;
        let gap = verify_against(&candidate, &a, &spec, config.oracle_max_assignments)?;
        let _ = writeln!(s, "j_candidate = {}", gap.j_candidate);
        let _ = writeln!(s, "gap = {}", gap.gap);
        let _ = writeln!(s, "relative_gap = {}", gap.relative_gap);
        let _ = writeln!(s, "optimal = {}", gap.optimal);
        println!(
            "oracle: candidate gap {} ({})",
            gap.gap,
            if gap.optimal { "optimal" } else { "suboptimal" }
        );
    }
    io::write_atomic(&config.out_dir.join("oracle.txt"), s.as_bytes())?;
    println!(
        "oracle: J_min = {} over {} assignments, {} minimizers",
        outcome.j_min, outcome.assignments, outcome.minimizer_count
    );
    Ok(())
}

#[derive(Parser)]
#[command(
    name = "minpart",
    about = "Weighted-perimeter partition optimization on 2D grids",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Path to the run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// RNG seed; overrides the config `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; overrides the config `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the landscape equation and write the weight field.
    Landscape(CommonArgs),
    /// Minimize the partition energy; write labels, trace, and breakdown.
    Partition(CommonArgs),
    /// Scan a label raster and write the regularity report.
    Diagnose(CommonArgs),
    /// Exhaustively minimize a small instance; optionally gap-check a candidate.
    Oracle(CommonArgs),
}

fn load_and_run(args: &CommonArgs, run: fn(&RunConfig) -> Result<()>) -> Result<()> {
    let mut config = RunConfig::load(&args.config)?;
    config.apply_overrides(args.seed, args.out.clone());
    std::fs::create_dir_all(&config.out_dir).map_err(|e| wrap_io(&config.out_dir, e))?;
    run(&config)
}

/// Binary entry point: parse arguments, run the command, map errors to
/// exit codes.
pub fn main() {
    let cli = Cli::parse();
    let (args, run): (&CommonArgs, fn(&RunConfig) -> Result<()>) = match &cli.command {
        Command::Landscape(a) => (a, cmd_landscape),
        Command::Partition(a) => (a, cmd_partition),
        Command::Diagnose(a) => (a, cmd_diagnose),
        Command::Oracle(a) => (a, cmd_oracle),
    };
    if let Err(e) = load_and_run(args, run) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
