//! Bit-exact ASCII file formats and atomic file writes.
//!
//! Every format is line-oriented ASCII with LF endings, `.` as the decimal
//! separator, and a final newline. Raster formats store the full bounding
//! rectangle row-major with the top row (largest `y`) first, so a file reads
//! like a plot; sites outside the domain mask are written as `0`. Floats are
//! printed with the shortest representation that parses back to the same
//! bits (energy traces use 17 significant digits instead), so write-then-read
//! reproduces every in-memory value exactly. Read errors report the byte
//! offset of the first offending token.
//!
//! Schemas:
//!
//! ```text
//! FIELD nx ny h          one header line, then ny rows of nx floats
//! MASK nx ny             then ny rows of nx 0/1 flags (1 = in domain)
//! LABELS nx ny N         then ny rows of nx labels in 1..=N (0 = masked out)
//! ```
//!
//! Energy traces are CSV with the fixed header
//! `sweep,F,G,J,flips,pours,temperature`, one row per record.
//!
//! Regularity reports are key-value text in five bracketed sections. Records:
//!
//! ```text
//! [ahlfors]       sample = x y r ratio
//!                 phase = label                 (declares a per-phase block)
//!                 phase_sample = label x y r ratio
//! [condition_b]   sample = x y r single c1 k  (label cx cy radius) * k
//! [isoperimetry]  sample = label cx cy r volume perimeter ratio flag
//! [junctions]     junction = x y l0 l1 l2 d0 d1 d2 a0 a1 a2
//! [summary]       nontrivial_phases = n
//!                 gauge = alpha beta gamma      (only when declared)
//!                 error = section: message
//! ```
//!
//! `-` stands for an absent optional value; `single` and `flag` are 0/1.
//! The summary also carries derived headline lines (`ahlfors_range`,
//! `isoperimetry_max`, `zero_perimeter_flags`, `junction_count`); readers
//! check their shape but recompute the values from the samples.
//!
//! Label rasters can additionally be exported as plain portable graymaps
//! (`P2`, gray level = label, 0 = masked out) for external plotting; that
//! export is not read back.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use crate::diagnostics::{
    AhlforsSample, AhlforsSection, ConditionBSample, GaugeReport, IsoperimetrySample,
    IsoperimetrySection, Junction, PhaseAhlforsSection, PhaseBall, RegularityReport,
};
use crate::error::Error;
use crate::grid::{Grid, Partition, ScalarField};
use crate::optimizer::{EnergyTrace, TraceRecord};
use crate::Result;

/// Writes `bytes` to a same-directory temporary file, then renames it over
/// `path`, so the target never holds a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Invalid(format!("{} has no file name", path.display())))?;
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes)?;
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(Error::Io(e));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Token scanner shared by the whitespace-separated formats.

struct Scanner<'a> {
    path: String,
    text: &'a str,
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn new(path: &Path, text: &'a str) -> Scanner<'a> {
        Scanner { path: path.display().to_string(), text, pos: 0 }
    }

    fn fail<T>(&self, offset: usize, msg: impl Into<String>) -> Result<T> {
        Err(Error::Format { path: self.path.clone(), offset, msg: msg.into() })
    }

    fn skip_spaces(&mut self) {
        let bytes = self.text.as_bytes();
        while self.pos < bytes.len() && (bytes[self.pos] == b' ' || bytes[self.pos] == b'\t') {
            self.pos += 1;
        }
    }

    /// Next whitespace-delimited token on the current line.
    fn token(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.skip_spaces();
        let bytes = self.text.as_bytes();
        if self.pos >= bytes.len() || bytes[self.pos] == b'\n' {
            return self.fail(self.pos, format!("expected {what}, found end of line"));
        }
        let start = self.pos;
        while self.pos < bytes.len() && !bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        Ok((start, &self.text[start..self.pos]))
    }

    fn parse<T: FromStr>(&mut self, what: &str) -> Result<T> {
        let (offset, tok) = self.token(what)?;
        match tok.parse::<T>() {
            Ok(v) => Ok(v),
            Err(_) => self.fail(offset, format!("expected {what}, found {tok:?}")),
        }
    }

    fn literal(&mut self, lit: &str) -> Result<()> {
        let (offset, tok) = self.token(&format!("{lit:?}"))?;
        if tok != lit {
            return self.fail(offset, format!("expected {lit:?}, found {tok:?}"));
        }
        Ok(())
    }

    /// Consumes the end of the current line, LF only.
    fn eol(&mut self) -> Result<()> {
        self.skip_spaces();
        let bytes = self.text.as_bytes();
        if self.pos < bytes.len() && bytes[self.pos] == b'\n' {
            self.pos += 1;
            return Ok(());
        }
        self.fail(self.pos, "expected end of line (LF)")
    }

    fn eof(&mut self) -> Result<()> {
        if self.pos != self.text.len() {
            return self.fail(self.pos, "expected end of file");
        }
        Ok(())
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    Ok(fs::read_to_string(path)?)
}

fn dims_check(path: &Path, grid: &Grid, nx: usize, ny: usize) -> Result<()> {
    if nx != grid.nx() || ny != grid.ny() {
        return Err(Error::Mismatch(format!(
            "{} is {nx} x {ny}, the grid is {} x {}",
            path.display(),
            grid.nx(),
            grid.ny()
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// FIELD

/// Writes a scalar field; masked-out sites become `0`.
pub fn write_field(path: &Path, field: &ScalarField) -> Result<()> {
    let grid = field.grid();
    let mut s = String::new();
    writeln!(s, "FIELD {} {} {}", grid.nx(), grid.ny(), grid.h()).unwrap();
    for iy in (0..grid.ny()).rev() {
        for ix in 0..grid.nx() {
            if ix > 0 {
                s.push(' ');
            }
            match grid.cell_at(ix, iy) {
                Some(c) => write!(s, "{}", field.value(c)).unwrap(),
                None => s.push('0'),
            }
        }
        s.push('\n');
    }
    write_atomic(path, s.as_bytes())
}

/// Reads a scalar field onto an existing grid. The header must match the
/// grid's dimensions and spacing exactly, and masked-out sites must hold `0`.
pub fn read_field(path: &Path, grid: &Arc<Grid>) -> Result<ScalarField> {
    let text = read_to_string(path)?;
    let mut sc = Scanner::new(path, &text);
    sc.literal("FIELD")?;
    let nx: usize = sc.parse("a cell count")?;
    let ny: usize = sc.parse("a cell count")?;
    let (h_off, h_tok) = sc.token("a grid spacing")?;
    let h: f64 = match h_tok.parse() {
        Ok(v) if v > 0.0 => v,
        _ => return sc.fail(h_off, format!("expected a positive grid spacing, found {h_tok:?}")),
    };
    sc.eol()?;
    dims_check(path, grid, nx, ny)?;
    if h != grid.h() {
        return Err(Error::Mismatch(format!(
            "{} has spacing {h}, the grid has {}",
            path.display(),
            grid.h()
        )));
    }
    let mut values = vec![0.0; grid.n_cells()];
    for iy in (0..ny).rev() {
        for ix in 0..nx {
            let (offset, tok) = sc.token("a field value")?;
            let v: f64 = match tok.parse() {
                Ok(v) if f64::is_finite(v) => v,
                _ => return sc.fail(offset, format!("expected a finite value, found {tok:?}")),
            };
            match grid.cell_at(ix, iy) {
                Some(c) => values[c] = v,
                None if v == 0.0 => {}
                None => {
                    return sc.fail(offset, format!("masked-out site ({ix}, {iy}) must hold 0"))
                }
            }
        }
        sc.eol()?;
    }
    sc.eof()?;
    ScalarField::new(grid.clone(), values)
}

// ---------------------------------------------------------------------------
// MASK

/// Writes the grid's domain mask (1 = in domain).
pub fn write_mask(path: &Path, grid: &Grid) -> Result<()> {
    let mut s = String::new();
    writeln!(s, "MASK {} {}", grid.nx(), grid.ny()).unwrap();
    for iy in (0..grid.ny()).rev() {
        for ix in 0..grid.nx() {
            if ix > 0 {
                s.push(' ');
            }
            s.push(if grid.in_domain(ix, iy) { '1' } else { '0' });
        }
        s.push('\n');
    }
    write_atomic(path, s.as_bytes())
}

/// Reads a mask file; returns `(nx, ny, mask)` with the mask indexed
/// `iy * nx + ix`.
pub fn read_mask(path: &Path) -> Result<(usize, usize, Vec<bool>)> {
    let text = read_to_string(path)?;
    let mut sc = Scanner::new(path, &text);
    sc.literal("MASK")?;
    let nx: usize = sc.parse("a cell count")?;
    let ny: usize = sc.parse("a cell count")?;
    sc.eol()?;
    let mut mask = vec![false; nx.checked_mul(ny).ok_or_else(|| Error::Invalid(
        format!("mask dimensions {nx} x {ny} overflow"),
    ))?];
    for iy in (0..ny).rev() {
        for ix in 0..nx {
            let (offset, tok) = sc.token("a 0/1 flag")?;
            mask[iy * nx + ix] = match tok {
                "0" => false,
                "1" => true,
                _ => return sc.fail(offset, format!("expected 0 or 1, found {tok:?}")),
            };
        }
        sc.eol()?;
    }
    sc.eof()?;
    Ok((nx, ny, mask))
}

// ---------------------------------------------------------------------------
// LABELS

/// Writes a label raster; masked-out sites become `0`.
pub fn write_labels(path: &Path, p: &Partition) -> Result<()> {
    let grid = p.grid();
    let mut s = String::new();
    writeln!(s, "LABELS {} {} {}", grid.nx(), grid.ny(), p.n_labels()).unwrap();
    for iy in (0..grid.ny()).rev() {
        for ix in 0..grid.nx() {
            if ix > 0 {
                s.push(' ');
            }
            match grid.cell_at(ix, iy) {
                Some(c) => write!(s, "{}", p.label(c)).unwrap(),
                None => s.push('0'),
            }
        }
        s.push('\n');
    }
    write_atomic(path, s.as_bytes())
}

/// Reads a label raster onto an existing grid. In-domain sites must hold a
/// label in `1..=N`, masked-out sites must hold `0`.
pub fn read_labels(path: &Path, grid: &Arc<Grid>) -> Result<Partition> {
    let text = read_to_string(path)?;
    let mut sc = Scanner::new(path, &text);
    sc.literal("LABELS")?;
    let nx: usize = sc.parse("a cell count")?;
    let ny: usize = sc.parse("a cell count")?;
    let (n_off, n_tok) = sc.token("a label count")?;
    let n_labels: u32 = match n_tok.parse() {
        Ok(n) if n >= 1 => n,
        _ => return sc.fail(n_off, format!("expected a positive label count, found {n_tok:?}")),
    };
    sc.eol()?;
    dims_check(path, grid, nx, ny)?;
    let mut labels = vec![0u32; grid.n_cells()];
    for iy in (0..ny).rev() {
        for ix in 0..nx {
            let (offset, tok) = sc.token("a label")?;
            let v: u32 = match tok.parse() {
                Ok(v) => v,
                Err(_) => return sc.fail(offset, format!("expected a label, found {tok:?}")),
            };
            match grid.cell_at(ix, iy) {
                Some(c) => {
                    if v < 1 || v > n_labels {
                        return sc.fail(
                            offset,
                            format!("label {v} outside 1..={n_labels} at site ({ix}, {iy})"),
                        );
                    }
                    labels[c] = v;
                }
                None => {
                    if v != 0 {
                        return sc.fail(
                            offset,
                            format!("masked-out site ({ix}, {iy}) must hold 0"),
                        );
                    }
                }
            }
        }
        sc.eol()?;
    }
    sc.eof()?;
    Partition::new(grid.clone(), n_labels, labels)
}

// ---------------------------------------------------------------------------
// Energy trace CSV

const TRACE_HEADER: &str = "sweep,F,G,J,flips,pours,temperature";

/// Writes an energy trace as CSV with 17-significant-digit floats.
pub fn write_trace(path: &Path, trace: &EnergyTrace) -> Result<()> {
    let mut s = String::new();
    writeln!(s, "{TRACE_HEADER}").unwrap();
    for r in trace.records() {
        writeln!(
            s,
            "{},{:.16e},{:.16e},{:.16e},{},{},{:.16e}",
            r.sweep, r.f, r.g, r.j, r.flips, r.pours, r.temperature
        )
        .unwrap();
    }
    write_atomic(path, s.as_bytes())
}

/// Reads an energy trace written by [`write_trace`].
pub fn read_trace(path: &Path) -> Result<EnergyTrace> {
    let text = read_to_string(path)?;
    let pathname = path.display().to_string();
    let fail = |offset: usize, msg: String| Error::Format { path: pathname.clone(), offset, msg };
    if !text.ends_with('\n') {
        return Err(fail(text.len(), "missing final newline".into()));
    }
    let mut records = Vec::new();
    let mut offset = 0usize;
    for (row, line) in text.split_inclusive('\n').enumerate() {
        let body = &line[..line.len() - 1];
        if row == 0 {
            if body != TRACE_HEADER {
                return Err(fail(0, format!("expected header {TRACE_HEADER:?}")));
            }
            offset += line.len();
            continue;
        }
        let mut fields = Vec::new();
        let mut field_off = offset;
        for f in body.split(',') {
            fields.push((field_off, f));
            field_off += f.len() + 1;
        }
        if fields.len() != 7 {
            return Err(fail(offset, format!("expected 7 fields, found {}", fields.len())));
        }
        let uint = |(off, tok): (usize, &str), what: &str| -> Result<u32> {
            tok.parse()
                .map_err(|_| fail(off, format!("expected {what}, found {tok:?}")))
        };
        let num = |(off, tok): (usize, &str), what: &str| -> Result<f64> {
            match tok.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(fail(off, format!("expected finite {what}, found {tok:?}"))),
            }
        };
        records.push(TraceRecord {
            sweep: uint(fields[0], "a sweep index")?,
            f: num(fields[1], "F")?,
            g: num(fields[2], "G")?,
            j: num(fields[3], "J")?,
            flips: uint(fields[4], "a flip count")?,
            pours: uint(fields[5], "a pour count")?,
            temperature: num(fields[6], "a temperature")?,
        });
        offset += line.len();
    }
    Ok(EnergyTrace::from_records(records))
}

// ---------------------------------------------------------------------------
// Regularity report

fn opt_f64(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => "-".into(),
    }
}

/// Writes a regularity report in the five-section key-value format.
pub fn write_report(path: &Path, report: &RegularityReport) -> Result<()> {
    let mut s = String::new();

    writeln!(s, "[ahlfors]").unwrap();
    for a in &report.ahlfors.samples {
        writeln!(s, "sample = {} {} {} {}", a.point[0], a.point[1], a.radius, a.ratio).unwrap();
    }
    for ph in &report.per_phase_ahlfors {
        writeln!(s, "phase = {}", ph.label).unwrap();
        for a in &ph.section.samples {
            writeln!(
                s,
                "phase_sample = {} {} {} {} {}",
                ph.label, a.point[0], a.point[1], a.radius, a.ratio
            )
            .unwrap();
        }
    }

    writeln!(s, "[condition_b]").unwrap();
    for c in &report.condition_b {
        write!(
            s,
            "sample = {} {} {} {} {} {}",
            c.point[0],
            c.point[1],
            c.radius,
            u8::from(c.single_phase),
            opt_f64(c.c1),
            c.phases.len()
        )
        .unwrap();
        for b in &c.phases {
            write!(s, " {} {} {} {}", b.label, b.center[0], b.center[1], b.radius).unwrap();
        }
        s.push('\n');
    }

    writeln!(s, "[isoperimetry]").unwrap();
    for i in &report.isoperimetry.samples {
        writeln!(
            s,
            "sample = {} {} {} {} {} {} {} {}",
            i.label,
            i.center[0],
            i.center[1],
            i.radius,
            i.volume,
            i.perimeter,
            opt_f64(i.ratio),
            u8::from(i.zero_perimeter)
        )
        .unwrap();
    }

    writeln!(s, "[junctions]").unwrap();
    for j in &report.junctions {
        writeln!(
            s,
            "junction = {} {} {} {} {} {} {} {} {} {} {}",
            j.point[0],
            j.point[1],
            j.labels[0],
            j.labels[1],
            j.labels[2],
            j.directions[0],
            j.directions[1],
            j.directions[2],
            j.angles[0],
            j.angles[1],
            j.angles[2]
        )
        .unwrap();
    }

    writeln!(s, "[summary]").unwrap();
    writeln!(s, "nontrivial_phases = {}", report.nontrivial_phases).unwrap();
    if let Some(g) = &report.gauge {
        writeln!(s, "gauge = {} {} {}", g.alpha, g.beta, g.gamma).unwrap();
    }
    writeln!(
        s,
        "ahlfors_range = {} {}",
        opt_f64(report.ahlfors.min_ratio),
        opt_f64(report.ahlfors.max_ratio)
    )
    .unwrap();
    writeln!(s, "isoperimetry_max = {}", opt_f64(report.isoperimetry.max_ratio)).unwrap();
    writeln!(s, "zero_perimeter_flags = {}", report.isoperimetry.zero_perimeter_flags).unwrap();
    writeln!(s, "junction_count = {}", report.junctions.len()).unwrap();
    for e in &report.errors {
        writeln!(s, "error = {e}").unwrap();
    }

    write_atomic(path, s.as_bytes())
}

/// Whitespace-delimited tokens of `s` with their byte offsets from `base`.
pub(crate) fn tokens_with_offsets(s: &str, base: usize) -> Vec<(usize, &str)> {
    let bytes = s.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        out.push((base + start, &s[start..i]));
    }
    out
}

/// Reads a regularity report written by [`write_report`]. Derived summary
/// values are recomputed from the parsed samples.
pub fn read_report(path: &Path) -> Result<RegularityReport> {
    let text = read_to_string(path)?;
    let pathname = path.display().to_string();
    let fail = |offset: usize, msg: String| Error::Format { path: pathname.clone(), offset, msg };
    if !text.ends_with('\n') {
        return Err(fail(text.len(), "missing final newline".into()));
    }

    let mut section: Option<&str> = None;
    let mut ahlfors_samples = Vec::new();
    let mut per_phase: Vec<(u32, Vec<AhlforsSample>)> = Vec::new();
    let mut condition_b = Vec::new();
    let mut iso_samples = Vec::new();
    let mut junctions = Vec::new();
    let mut nontrivial: Option<u32> = None;
    let mut gauge: Option<GaugeReport> = None;
    let mut errors = Vec::new();

    let mut offset = 0usize;
    for line in text.split_inclusive('\n') {
        let body = &line[..line.len() - 1];
        let line_off = offset;
        offset += line.len();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[').and_then(|b| b.strip_suffix(']')) {
            match name {
                "ahlfors" | "condition_b" | "isoperimetry" | "junctions" | "summary" => {
                    section = Some(match name {
                        "ahlfors" => "ahlfors",
                        "condition_b" => "condition_b",
                        "isoperimetry" => "isoperimetry",
                        "junctions" => "junctions",
                        _ => "summary",
                    });
                    continue;
                }
                _ => return Err(fail(line_off, format!("unknown section [{name}]"))),
            }
        }
        let Some(eq) = body.find(" = ") else {
            return Err(fail(line_off, "expected `key = value`".into()));
        };
        let key = &body[..eq];
        let rest = &body[eq + 3..];
        let rest_off = line_off + eq + 3;
        let toks = tokens_with_offsets(rest, rest_off);
        let want =
            |n: usize| -> Result<()> {
                if toks.len() != n {
                    return Err(fail(
                        rest_off,
                        format!("{key} takes {n} values, found {}", toks.len()),
                    ));
                }
                Ok(())
            };
        let num = |i: usize, what: &str| -> Result<f64> {
            let (off, tok) = toks[i];
            match tok.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(fail(off, format!("expected finite {what}, found {tok:?}"))),
            }
        };
        let opt_num = |i: usize, what: &str| -> Result<Option<f64>> {
            let (off, tok) = toks[i];
            if tok == "-" {
                return Ok(None);
            }
            match tok.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Some(v)),
                _ => Err(fail(off, format!("expected finite {what} or -, found {tok:?}"))),
            }
        };
        let uint = |i: usize, what: &str| -> Result<u32> {
            let (off, tok) = toks[i];
            tok.parse().map_err(|_| fail(off, format!("expected {what}, found {tok:?}")))
        };
        let flag = |i: usize, what: &str| -> Result<bool> {
            let (off, tok) = toks[i];
            match tok {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(fail(off, format!("expected 0/1 {what}, found {tok:?}"))),
            }
        };

        match (section, key) {
            (Some("ahlfors"), "sample") => {
                want(4)?;
                ahlfors_samples.push(AhlforsSample {
                    point: [num(0, "x")?, num(1, "y")?],
                    radius: num(2, "a radius")?,
                    ratio: num(3, "a ratio")?,
                });
            }
            (Some("ahlfors"), "phase") => {
                want(1)?;
                let label = uint(0, "a label")?;
                if per_phase.iter().all(|(l, _)| *l != label) {
                    per_phase.push((label, Vec::new()));
                }
            }
            (Some("ahlfors"), "phase_sample") => {
                want(5)?;
                let label = uint(0, "a label")?;
                let sample = AhlforsSample {
                    point: [num(1, "x")?, num(2, "y")?],
                    radius: num(3, "a radius")?,
                    ratio: num(4, "a ratio")?,
                };
                match per_phase.iter_mut().find(|(l, _)| *l == label) {
                    Some((_, v)) => v.push(sample),
                    None => per_phase.push((label, vec![sample])),
                }
            }
            (Some("condition_b"), "sample") => {
                if toks.len() < 6 {
                    return Err(fail(rest_off, "sample takes at least 6 values".into()));
                }
                let k = uint(5, "a ball count")? as usize;
                want(6 + 4 * k)?;
                let mut phases = Vec::with_capacity(k);
                for b in 0..k {
                    let at = 6 + 4 * b;
                    phases.push(PhaseBall {
                        label: uint(at, "a label")?,
                        center: [num(at + 1, "x")?, num(at + 2, "y")?],
                        radius: num(at + 3, "a radius")?,
                    });
                }
                condition_b.push(ConditionBSample {
                    point: [num(0, "x")?, num(1, "y")?],
                    radius: num(2, "a radius")?,
                    single_phase: flag(3, "single-phase flag")?,
                    c1: opt_num(4, "c1")?,
                    phases,
                });
            }
            (Some("isoperimetry"), "sample") => {
                want(8)?;
                iso_samples.push(IsoperimetrySample {
                    label: uint(0, "a label")?,
                    center: [num(1, "x")?, num(2, "y")?],
                    radius: num(3, "a radius")?,
                    volume: num(4, "a volume")?,
                    perimeter: num(5, "a perimeter")?,
                    ratio: opt_num(6, "a ratio")?,
                    zero_perimeter: flag(7, "zero-perimeter flag")?,
                });
            }
            (Some("junctions"), "junction") => {
                want(11)?;
                junctions.push(Junction {
                    point: [num(0, "x")?, num(1, "y")?],
                    labels: [uint(2, "a label")?, uint(3, "a label")?, uint(4, "a label")?],
                    directions: [
                        num(5, "a direction")?,
                        num(6, "a direction")?,
                        num(7, "a direction")?,
                    ],
                    angles: [num(8, "an angle")?, num(9, "an angle")?, num(10, "an angle")?],
                });
            }
            (Some("summary"), "nontrivial_phases") => {
                want(1)?;
                nontrivial = Some(uint(0, "a phase count")?);
            }
            (Some("summary"), "gauge") => {
                want(3)?;
                gauge = Some(GaugeReport {
                    alpha: num(0, "alpha")?,
                    beta: num(1, "beta")?,
                    gamma: num(2, "gamma")?,
                });
            }
            (Some("summary"), "ahlfors_range") => {
                want(2)?;
                opt_num(0, "a ratio")?;
                opt_num(1, "a ratio")?;
            }
            (Some("summary"), "isoperimetry_max") => {
                want(1)?;
                opt_num(0, "a ratio")?;
            }
            (Some("summary"), "zero_perimeter_flags") | (Some("summary"), "junction_count") => {
                want(1)?;
                uint(0, "a count")?;
            }
            (Some("summary"), "error") => {
                errors.push(rest.to_string());
            }
            (None, _) => return Err(fail(line_off, "record before any [section]".into())),
            (Some(sec), _) => {
                return Err(fail(line_off, format!("unknown key {key:?} in [{sec}]")))
            }
        }
    }

    let nontrivial_phases = nontrivial
        .ok_or_else(|| fail(text.len(), "missing nontrivial_phases in [summary]".into()))?;
    Ok(RegularityReport {
        ahlfors: AhlforsSection::from_samples(ahlfors_samples),
        per_phase_ahlfors: per_phase
            .into_iter()
            .map(|(label, samples)| PhaseAhlforsSection {
                label,
                section: AhlforsSection::from_samples(samples),
            })
            .collect(),
        condition_b,
        isoperimetry: IsoperimetrySection::from_samples(iso_samples),
        junctions,
        nontrivial_phases,
        gauge,
        errors,
    })
}

// ---------------------------------------------------------------------------
// PGM export

/// Exports a label raster as a plain portable graymap (`P2`): gray level =
/// label, `0` = masked out, maximum gray = the label count.
pub fn write_pgm(path: &Path, p: &Partition) -> Result<()> {
    let grid = p.grid();
    let mut s = String::new();
    writeln!(s, "P2").unwrap();
    writeln!(s, "{} {}", grid.nx(), grid.ny()).unwrap();
    writeln!(s, "{}", p.n_labels()).unwrap();
    for iy in (0..grid.ny()).rev() {
        for ix in 0..grid.nx() {
            if ix > 0 {
                s.push(' ');
            }
            match grid.cell_at(ix, iy) {
                Some(c) => write!(s, "{}", p.label(c)).unwrap(),
                None => s.push('0'),
            }
        }
        s.push('\n');
    }
    write_atomic(path, s.as_bytes())
}
