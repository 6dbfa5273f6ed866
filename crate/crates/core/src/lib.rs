//! Weighted-perimeter partition optimization on 2D cell grids.
//!
//! The crate minimizes an energy `J(W) = F(W) + G(W)` over partitions of a
//! gridded planar domain into `N` labeled phases, where `F` is a
//! weighted interface length (each interface face is counted once per
//! adjacent phase, so `F` is twice the weighted length of the interface)
//! and `G` is a bulk term penalizing deviation from target phase volumes.
//!
//! Main pieces:
//!
//! * [`grid`] — grids, scalar fields, partitions, interface extraction.
//! * [`landscape`] — a torsion-style equation `-Δw + Vw = 1` whose solution
//!   builds the interface weight `a = clamp(δ + w, δ, cap)`.
//! * [`energy`] — exact energy accounting with per-phase perimeters and
//!   incremental move deltas.
//! * [`optimizer`] — label-sweep descent plus ball "pour" moves, optional
//!   annealing, and small-component cleaning.
//! * [`oracle`] — exhaustive minimization for small instances.
//! * [`diagnostics`] — interface density, inscribed-ball, isoperimetry, and
//!   junction-angle reports.
//! * [`io`] / [`cli`] — plain-text file formats and the command-line tool.

pub mod cli;
pub mod diagnostics;
pub mod energy;
pub mod grid;
pub mod io;
pub mod landscape;
pub mod optimizer;
pub mod oracle;

mod error;

pub use error::Error;

/// Crate-wide result type.
pub type Result<T> = std::result::Result<T, Error>;
