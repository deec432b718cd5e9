use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::MacroFields;
use crate::error::{Error, Result};

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Legacy ASCII VTK `STRUCTURED_POINTS` file with a `density` scalar and a
/// `velocity` vector per node. Solid nodes are written as zeros.
pub fn write_vtk(path: &Path, fields: &MacroFields, step: u64) -> Result<()> {
    let mut w = create(path)?;
    vtk_body(&mut w, fields, step)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn vtk_body(w: &mut impl Write, fields: &MacroFields, step: u64) -> std::io::Result<()> {
    let [nx, ny, nz] = fields.dims;
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "splbm step {step}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {nx} {ny} {nz}")?;
    writeln!(w, "ORIGIN 0 0 0")?;
    writeln!(w, "SPACING 1 1 1")?;
    writeln!(w, "POINT_DATA {}", fields.n_nodes())?;
    writeln!(w, "SCALARS density double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for (rho, solid) in fields.rho.iter().zip(&fields.solid) {
        writeln!(w, "{}", if *solid { 0.0 } else { *rho })?;
    }
    writeln!(w, "VECTORS velocity double")?;
    for (u, solid) in fields.u.iter().zip(&fields.solid) {
        let u = if *solid { [0.0; 3] } else { *u };
        writeln!(w, "{} {} {}", u[0], u[1], u[2])?;
    }
    Ok(())
}

/// One row per node: `x,y[,z],rho,ux,uy[,uz]`.
pub fn write_csv(path: &Path, fields: &MacroFields) -> Result<()> {
    let mut w = create(path)?;
    csv_body(&mut w, fields)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

fn csv_body(w: &mut impl Write, fields: &MacroFields) -> std::io::Result<()> {
    let [nx, ny, nz] = fields.dims;
    let three = fields.d == 3;
    if three {
        writeln!(w, "x,y,z,rho,ux,uy,uz")?;
    } else {
        writeln!(w, "x,y,rho,ux,uy")?;
    }
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let i = fields.index(x, y, z);
                let (rho, u) = if fields.solid[i] {
                    (0.0, [0.0; 3])
                } else {
                    (fields.rho[i], fields.u[i])
                };
                if three {
                    writeln!(w, "{x},{y},{z},{rho},{},{},{}", u[0], u[1], u[2])?;
                } else {
                    writeln!(w, "{x},{y},{rho},{},{}", u[0], u[1])?;
                }
            }
        }
    }
    Ok(())
}
