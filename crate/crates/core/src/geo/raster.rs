use std::fmt::Write as _;
use std::path::Path;

use super::{ProjectedPoint, ShiftVector};
use crate::{io, Error, Result};

/// Raster cell code for "no data"; also the value returned outside the extent.
pub const NODATA: u8 = 0;

/// A classified image on the projected plane, stored row-major from the top
/// row down. Codes: 0 nodata, 1 thick ice, 2 thin ice, 3 open water.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelRaster {
    ncols: usize,
    nrows: usize,
    /// Lower-left corner as written in the grid header.
    xll: f64,
    yll: f64,
    cell_size: f64,
    cells: Vec<u8>,
}

impl LabelRaster {
    pub fn new(
        ncols: usize,
        nrows: usize,
        xll: f64,
        yll: f64,
        cell_size: f64,
        cells: Vec<u8>,
    ) -> Result<Self> {
        if ncols == 0 || nrows == 0 {
            return Err(Error::invalid("raster dimensions must be positive"));
        }
        if !(cell_size.is_finite() && cell_size > 0.0) {
            return Err(Error::invalid(format!("cell size {cell_size} must be positive")));
        }
        if !xll.is_finite() || !yll.is_finite() {
            return Err(Error::invalid("raster corner must be finite"));
        }
        if cells.len() != ncols * nrows {
            return Err(Error::invalid(format!(
                "raster has {} cells, expected {}x{}",
                cells.len(),
                ncols,
                nrows
            )));
        }
        if let Some(bad) = cells.iter().find(|&&c| c > 3) {
            return Err(Error::invalid(format!("raster code {bad} not in 0..=3")));
        }
        Ok(LabelRaster {
            ncols,
            nrows,
            xll,
            yll,
            cell_size,
            cells,
        })
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn lower_left(&self) -> ProjectedPoint {
        ProjectedPoint::new(self.xll, self.yll)
    }

    pub fn upper_left(&self) -> ProjectedPoint {
        ProjectedPoint::new(self.xll, self.yll + self.nrows as f64 * self.cell_size)
    }

    /// Code at (row from top, column).
    pub fn code(&self, row: usize, col: usize) -> u8 {
        self.cells[row * self.ncols + col]
    }

    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    /// Center of the cell at (row from top, column), unshifted.
    pub fn cell_center(&self, row: usize, col: usize) -> ProjectedPoint {
        ProjectedPoint::new(
            self.xll + (col as f64 + 0.5) * self.cell_size,
            self.yll + (self.nrows - row) as f64 * self.cell_size - 0.5 * self.cell_size,
        )
    }

    /// The same image translated by `shift`.
    pub fn shifted(&self, shift: ShiftVector) -> LabelRaster {
        LabelRaster {
            xll: self.xll + shift.dx,
            yll: self.yll + shift.dy,
            ..self.clone()
        }
    }

    /// Parse an ESRI ASCII grid restricted to the label-code vocabulary.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let mut header = |key: &str| -> Result<String> {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing header line '{key}'")))?;
            let mut parts = line.split_whitespace();
            match (parts.next(), parts.next(), parts.next()) {
                (Some(k), Some(v), None) if k == key => Ok(v.to_string()),
                _ => Err(Error::Parse(format!("expected '{key} <value>', got '{line}'"))),
            }
        };
        let ncols: usize = parse_num(&header("ncols")?, "ncols")?;
        let nrows: usize = parse_num(&header("nrows")?, "nrows")?;
        let xll: f64 = parse_num(&header("xllcorner")?, "xllcorner")?;
        let yll: f64 = parse_num(&header("yllcorner")?, "yllcorner")?;
        let cell: f64 = parse_num(&header("cellsize")?, "cellsize")?;
        let nodata: i64 = parse_num(&header("nodata_value")?, "nodata_value")?;
        if nodata != NODATA as i64 {
            return Err(Error::Parse(format!("nodata_value must be 0, got {nodata}")));
        }

        let mut cells = Vec::with_capacity(ncols.saturating_mul(nrows));
        let mut rows_read = 0;
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            rows_read += 1;
            let before = cells.len();
            for tok in line.split_whitespace() {
                cells.push(parse_num::<u8>(tok, "cell code")?);
            }
            if cells.len() - before != ncols {
                return Err(Error::Parse(format!(
                    "raster row {rows_read} has {} values, expected {ncols}",
                    cells.len() - before
                )));
            }
        }
        if rows_read != nrows {
            return Err(Error::Parse(format!("raster has {rows_read} rows, expected {nrows}")));
        }
        LabelRaster::new(ncols, nrows, xll, yll, cell, cells)
    }

    pub fn to_ascii_grid(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "ncols {}", self.ncols);
        let _ = writeln!(out, "nrows {}", self.nrows);
        let _ = writeln!(out, "xllcorner {}", self.xll);
        let _ = writeln!(out, "yllcorner {}", self.yll);
        let _ = writeln!(out, "cellsize {}", self.cell_size);
        let _ = writeln!(out, "nodata_value {NODATA}");
        for row in self.cells.chunks(self.ncols) {
            let mut first = true;
            for code in row {
                if !first {
                    out.push(' ');
                }
                first = false;
                let _ = write!(out, "{code}");
            }
            out.push('\n');
        }
        out
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&io::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        io::write_atomic(path, self.to_ascii_grid().as_bytes())
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, what: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Parse(format!("bad {what} value '{s}'")))
}

/// Class code of the cell containing `q` after translating the raster by
/// `shift`. Cells are half-open on their east and north edges.
pub fn raster_lookup(r: &LabelRaster, q: ProjectedPoint, shift: ShiftVector) -> u8 {
    let left = r.xll + shift.dx;
    let bottom = r.yll + shift.dy;
    let col = ((q.x - left) / r.cell_size).floor();
    let row_up = ((q.y - bottom) / r.cell_size).floor();
    if !(col >= 0.0 && row_up >= 0.0) {
        return NODATA;
    }
    let (col, row_up) = (col as usize, row_up as usize);
    if col >= r.ncols || row_up >= r.nrows {
        return NODATA;
    }
    r.code(r.nrows - 1 - row_up, col)
}
