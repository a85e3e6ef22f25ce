//! Text renderings of solver output.

use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::to_canonical_json;
use crate::pca::PcaSolution;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Table,
}

fn fmt_row(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join("  ")
}

pub fn solution_table(sol: &PcaSolution) -> String {
    let mut s = String::new();
    let b = &sol.basis;
    let _ = writeln!(s, "variant    {}", sol.variant);
    let _ = writeln!(s, "objective  {:.9}", sol.objective);
    let _ = writeln!(s, "p          {}", b.p());
    let _ = writeln!(s, "q          {}", b.q());
    let _ = writeln!(s, "basis");
    for (k, col) in b.columns().iter().enumerate() {
        let _ = writeln!(s, "  b{:<3} {}", k + 1, fmt_row(col));
    }
    let _ = writeln!(s, "atoms      {}", sol.per_atom.len());
    let _ = writeln!(s, "  {:>5}  {:>12}  coefficients", "atom", "distance");
    for a in &sol.per_atom {
        let _ = writeln!(s, "  {:>5}  {:>12.6}  {}", a.atom, a.distance, fmt_row(&a.coefficients));
    }
    let d = &sol.diagnostics;
    let _ = writeln!(s, "restarts   {} (best {})", d.restarts, d.best_restart);
    let _ = writeln!(s, "converged  {}", d.converged);
    let _ = writeln!(s, "iterations {}", d.iterations);
    if !d.stage_objectives.is_empty() {
        let _ = writeln!(s, "stages     {}", fmt_row(&d.stage_objectives));
    }
    for w in &d.warnings {
        let _ = writeln!(s, "warning    {w}");
    }
    s
}

pub fn render_solution(sol: &PcaSolution, format: Format) -> Result<String> {
    match format {
        Format::Json => to_canonical_json(sol),
        Format::Table => Ok(solution_table(sol)),
    }
}

/// Generic JSON rendering for the other verbs.
pub fn render_json<T: Serialize>(value: &T) -> Result<String> {
    to_canonical_json(value)
}

/// `atom,mu,distance,c1..cp` for plotting.
pub fn write_per_atom_csv<W: Write>(w: W, sol: &PcaSolution, mu: &[f64]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let err = |e: csv::Error| Error::Data(format!("CSV write: {e}"));
    let mut header = vec!["atom".to_string(), "mu".to_string(), "distance".to_string()];
    header.extend((1..=sol.basis.p()).map(|k| format!("c{k}")));
    wtr.write_record(&header).map_err(err)?;
    for a in &sol.per_atom {
        let mut rec = vec![a.atom.to_string(), mu[a.atom].to_string(), a.distance.to_string()];
        rec.extend(a.coefficients.iter().map(|c| c.to_string()));
        wtr.write_record(&rec).map_err(err)?;
    }
    wtr.flush().map_err(|e| Error::Data(format!("CSV write: {e}")))
}
