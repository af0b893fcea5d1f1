//! Grid and curve writers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;
use crate::tracer::IntegralCurve;
use crate::transfer::SolutionGrid;

// Adding +0.0 folds -0.0 into 0.0 so signed zeros never reach the files.
fn num(v: f64) -> String {
    format!("{:.16e}", v + 0.0)
}

/// `x,y,u` rows, `x` fastest, 17 significant digits.
pub fn write_csv(grid: &SolutionGrid, mut w: impl Write) -> std::io::Result<()> {
    let g = &grid.geometry;
    writeln!(w, "x,y,u")?;
    for j in 0..g.ny() {
        for i in 0..g.nx() {
            writeln!(w, "{},{},{}", num(g.x(i)), num(g.y(j)), num(grid.value(i, j)))?;
        }
    }
    Ok(())
}

/// Legacy ASCII VTK structured points with one scalar field `u`.
pub fn write_vtk(grid: &SolutionGrid, mut w: impl Write) -> std::io::Result<()> {
    let g = &grid.geometry;
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "adr-split solution")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {} {} 1", g.nx(), g.ny())?;
    writeln!(w, "ORIGIN {} {} 0", num(g.bbox.x_min), num(g.bbox.y_min))?;
    writeln!(w, "SPACING {} {} 1", num(g.dx()), num(g.dy()))?;
    writeln!(w, "POINT_DATA {}", g.nx() * g.ny())?;
    writeln!(w, "SCALARS u double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for v in &grid.values {
        writeln!(w, "{}", num(*v))?;
    }
    Ok(())
}

/// Polylines as `curve,s,x,y` rows, one block per curve.
pub fn write_curves_csv<'a>(
    curves: impl IntoIterator<Item = &'a IntegralCurve>,
    mut w: impl Write,
) -> std::io::Result<()> {
    writeln!(w, "curve,s,x,y")?;
    for (k, c) in curves.into_iter().enumerate() {
        for (p, s) in c.nodes.iter().zip(&c.arclen) {
            writeln!(w, "{k},{},{},{}", num(*s), num(p.x), num(p.y))?;
        }
    }
    Ok(())
}

fn to_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn save_csv(grid: &SolutionGrid, path: &Path) -> Result<()> {
    to_file(path, |w| write_csv(grid, w))
}

pub fn save_vtk(grid: &SolutionGrid, path: &Path) -> Result<()> {
    to_file(path, |w| write_vtk(grid, w))
}

pub fn save_curves_csv(curves: &[&IntegralCurve], path: &Path) -> Result<()> {
    to_file(path, |w| write_curves_csv(curves.iter().copied(), w))
}
