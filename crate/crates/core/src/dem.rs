//! Digital elevation model grid and the ESRI ASCII raster format.
//!
//! Grids are row-major with row 0 the northernmost row. Nodata cells are
//! impermeable walls for every downstream computation.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};

/// Scan order for the eight neighbours: N, NE, E, SE, S, SW, W, NW.
/// All tie-breaking in flow routing uses this order.
pub const D8_OFFSETS: [(isize, isize); 8] = [
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
];

/// Terrain raster.
#[derive(Debug, Clone, PartialEq)]
pub struct DemGrid<T> {
    ncols: usize,
    nrows: usize,
    cellsize: T,
    xllcorner: f64,
    yllcorner: f64,
    nodata_value: f64,
    elevation: Vec<T>,
    nodata: Vec<bool>,
}

impl<T: Scalar> DemGrid<T> {
    pub fn new(
        ncols: usize,
        nrows: usize,
        cellsize: T,
        elevation: Vec<T>,
        nodata: Vec<bool>,
    ) -> Result<Self> {
        Self::with_georef(ncols, nrows, cellsize, 0.0, 0.0, -9999.0, elevation, nodata)
    }

    #[allow(clippy::too_many_arguments)]
    pub fn with_georef(
        ncols: usize,
        nrows: usize,
        cellsize: T,
        xllcorner: f64,
        yllcorner: f64,
        nodata_value: f64,
        elevation: Vec<T>,
        nodata: Vec<bool>,
    ) -> Result<Self> {
        if ncols == 0 || nrows == 0 {
            return Err(Error::Validation(format!(
                "grid dimensions must be positive, got {ncols}x{nrows}"
            )));
        }
        if !(cellsize > T::zero()) {
            return Err(Error::Validation(format!(
                "cellsize must be > 0, got {cellsize}"
            )));
        }
        if elevation.len() != ncols * nrows || nodata.len() != ncols * nrows {
            return Err(Error::Validation(format!(
                "grid is {ncols}x{nrows} = {} cells but {} elevations and {} nodata flags supplied",
                ncols * nrows,
                elevation.len(),
                nodata.len()
            )));
        }
        for (i, (&z, &nd)) in elevation.iter().zip(&nodata).enumerate() {
            if !nd && !z.is_finite() {
                return Err(Error::Validation(format!(
                    "elevation at cell ({}, {}) is {z}; must be finite",
                    i / ncols,
                    i % ncols
                )));
            }
        }
        if nodata.iter().all(|&nd| nd) {
            return Err(Error::Validation("grid is all nodata".into()));
        }
        Ok(Self {
            ncols,
            nrows,
            cellsize,
            xllcorner,
            yllcorner,
            nodata_value,
            elevation,
            nodata,
        })
    }

    /// Uniform grid with every cell valid; convenient in tests.
    pub fn from_elevations(ncols: usize, nrows: usize, cellsize: T, elevation: Vec<T>) -> Result<Self> {
        let n = elevation.len();
        Self::new(ncols, nrows, cellsize, elevation, vec![false; n])
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn len(&self) -> usize {
        self.ncols * self.nrows
    }

    pub fn is_empty(&self) -> bool {
        false // construction rejects empty grids
    }

    pub fn cellsize(&self) -> T {
        self.cellsize
    }

    /// Area of one cell in m².
    pub fn cell_area(&self) -> T {
        self.cellsize * self.cellsize
    }

    #[inline]
    pub fn idx(&self, row: usize, col: usize) -> usize {
        row * self.ncols + col
    }

    #[inline]
    pub fn row_col(&self, idx: usize) -> (usize, usize) {
        (idx / self.ncols, idx % self.ncols)
    }

    #[inline]
    pub fn elevation(&self, idx: usize) -> T {
        self.elevation[idx]
    }

    pub fn elevations(&self) -> &[T] {
        &self.elevation
    }

    #[inline]
    pub fn is_nodata(&self, idx: usize) -> bool {
        self.nodata[idx]
    }

    pub fn nodata_mask(&self) -> &[bool] {
        &self.nodata
    }

    #[inline]
    pub fn on_border(&self, idx: usize) -> bool {
        let (r, c) = self.row_col(idx);
        r == 0 || c == 0 || r == self.nrows - 1 || c == self.ncols - 1
    }

    /// Valid (non-nodata, in-bounds) D8 neighbours of `idx`, in scan order.
    pub fn neighbors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let (r, c) = self.row_col(idx);
        D8_OFFSETS.iter().filter_map(move |&(dr, dc)| {
            let nr = r as isize + dr;
            let nc = c as isize + dc;
            if nr < 0 || nc < 0 || nr >= self.nrows as isize || nc >= self.ncols as isize {
                return None;
            }
            let j = nr as usize * self.ncols + nc as usize;
            (!self.nodata[j]).then_some(j)
        })
    }

    /// Copy with `delta` added to the elevation of the given cells.
    /// Nodata cells are left untouched.
    pub fn with_raised_cells(&self, cells: &[usize], delta: T) -> DemGrid<T> {
        let mut out = self.clone();
        for &i in cells {
            if !out.nodata[i] {
                out.elevation[i] = out.elevation[i] + delta;
            }
        }
        out
    }

    /// Parse the ESRI ASCII grid format.
    pub fn parse_ascii(text: &str, source_name: &str) -> Result<Self> {
        let mut ncols: Option<usize> = None;
        let mut nrows: Option<usize> = None;
        let mut cellsize: Option<f64> = None;
        let mut xll = 0.0f64;
        let mut yll = 0.0f64;
        let mut nodata_value: Option<f64> = None;
        let mut values: Vec<f64> = Vec::new();

        let perr = |line: usize, message: String| Error::Parse {
            file: source_name.to_string(),
            line,
            message,
        };

        for (lineno0, line) in text.lines().enumerate() {
            let lineno = lineno0 + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let first = parts.next().unwrap();
            let key = first.to_ascii_lowercase();
            let header = matches!(
                key.as_str(),
                "ncols" | "nrows" | "xllcorner" | "yllcorner" | "cellsize" | "nodata_value"
            );
            if header {
                let val = parts
                    .next()
                    .ok_or_else(|| perr(lineno, format!("header `{first}` missing its value")))?;
                let fval: f64 = val
                    .parse()
                    .map_err(|_| perr(lineno, format!("cannot parse `{val}` for `{first}`")))?;
                match key.as_str() {
                    "ncols" => ncols = Some(fval as usize),
                    "nrows" => nrows = Some(fval as usize),
                    "xllcorner" => xll = fval,
                    "yllcorner" => yll = fval,
                    "cellsize" => cellsize = Some(fval),
                    _ => nodata_value = Some(fval),
                }
            } else {
                for tok in line.split_whitespace() {
                    let v: f64 = tok
                        .parse()
                        .map_err(|_| perr(lineno, format!("cannot parse elevation `{tok}`")))?;
                    values.push(v);
                }
            }
        }

        let ncols = ncols.ok_or_else(|| perr(0, "missing NCOLS header".into()))?;
        let nrows = nrows.ok_or_else(|| perr(0, "missing NROWS header".into()))?;
        let cs = cellsize.ok_or_else(|| perr(0, "missing CELLSIZE header".into()))?;
        if values.len() != ncols * nrows {
            return Err(perr(
                0,
                format!(
                    "expected {} values for a {ncols}x{nrows} grid, found {}",
                    ncols * nrows,
                    values.len()
                ),
            ));
        }
        let nd = nodata_value.unwrap_or(-9999.0);
        let nodata: Vec<bool> = values.iter().map(|&v| v == nd).collect();
        let elevation: Vec<T> = values
            .iter()
            .zip(&nodata)
            .map(|(&v, &is_nd)| if is_nd { T::zero() } else { cast(v) })
            .collect();
        Self::with_georef(ncols, nrows, cast(cs), xll, yll, nd, elevation, nodata)
    }

    pub fn read_ascii(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse_ascii(&text, &path.display().to_string())
    }

    /// Serialize per-cell values over this grid's georeferencing as ESRI ASCII.
    pub fn format_ascii_values(&self, values: &[T]) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "NCOLS {}", self.ncols);
        let _ = writeln!(out, "NROWS {}", self.nrows);
        let _ = writeln!(out, "XLLCORNER {}", self.xllcorner);
        let _ = writeln!(out, "YLLCORNER {}", self.yllcorner);
        let _ = writeln!(out, "CELLSIZE {}", self.cellsize);
        let _ = writeln!(out, "NODATA_VALUE {}", self.nodata_value);
        for r in 0..self.nrows {
            let mut row = String::new();
            for c in 0..self.ncols {
                if c > 0 {
                    row.push(' ');
                }
                let i = self.idx(r, c);
                if self.nodata[i] {
                    let _ = write!(row, "{}", self.nodata_value);
                } else {
                    let _ = write!(row, "{}", values[i]);
                }
            }
            out.push_str(&row);
            out.push('\n');
        }
        out
    }

    pub fn to_ascii(&self) -> String {
        self.format_ascii_values(&self.elevation)
    }

    pub fn write_ascii(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_ascii()).map_err(|e| Error::io(path.display().to_string(), e))
    }
}

/// Per-cell flood water depths over a DEM, plus the volume that left the
/// domain across an open border.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthRaster<T> {
    ncols: usize,
    nrows: usize,
    /// Depth in meters, ≥ 0, 0 on nodata cells.
    depth: Vec<T>,
    /// Water that left the domain, m³.
    pub outflow_m3: T,
    /// Water removed by retention storage and pumping, m³.
    pub absorbed_m3: T,
}

impl<T: Scalar> DepthRaster<T> {
    pub fn new(ncols: usize, nrows: usize, depth: Vec<T>, outflow_m3: T, absorbed_m3: T) -> Self {
        debug_assert_eq!(depth.len(), ncols * nrows);
        Self {
            ncols,
            nrows,
            depth,
            outflow_m3,
            absorbed_m3,
        }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn depths(&self) -> &[T] {
        &self.depth
    }

    #[inline]
    pub fn depth(&self, idx: usize) -> T {
        self.depth[idx]
    }

    /// Maximum depth over a set of cells; 0 for the empty set.
    pub fn max_depth_over(&self, cells: &[usize]) -> Result<T> {
        let mut best = T::zero();
        for &i in cells {
            if i >= self.depth.len() {
                return Err(Error::Domain(format!(
                    "cell index {i} outside {}x{} raster",
                    self.nrows, self.ncols
                )));
            }
            if self.depth[i] > best {
                best = self.depth[i];
            }
        }
        Ok(best)
    }

    /// Number of cells with strictly positive depth.
    pub fn flooded_cell_count(&self) -> usize {
        self.depth.iter().filter(|&&d| d > T::zero()).count()
    }

    /// Total ponded volume, m³.
    pub fn ponded_volume(&self, dem: &DemGrid<T>) -> T {
        let area = dem.cell_area();
        self.depth
            .iter()
            .fold(T::zero(), |acc, &d| acc + d * area)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_round_trip() {
        let dem =
            DemGrid::<f64>::from_elevations(3, 2, 10.0, vec![3.0, 2.5, 1.0, 4.0, 0.125, -1.5])
                .unwrap();
        let text = dem.to_ascii();
        let back = DemGrid::<f64>::parse_ascii(&text, "mem").unwrap();
        assert_eq!(dem, back);
        assert_eq!(back.to_ascii(), text);
    }

    #[test]
    fn ascii_nodata_cells() {
        let text = "NCOLS 2\nNROWS 2\nXLLCORNER 0\nYLLCORNER 0\nCELLSIZE 1\nNODATA_VALUE -9999\n1 -9999\n2 3\n";
        let dem = DemGrid::<f64>::parse_ascii(text, "mem").unwrap();
        assert!(dem.is_nodata(1));
        assert!(!dem.is_nodata(0));
        // nodata round-trips
        assert!(dem.to_ascii().contains("1 -9999"));
    }

    #[test]
    fn parse_error_names_line() {
        let text = "NCOLS 2\nNROWS 1\nXLLCORNER 0\nYLLCORNER 0\nCELLSIZE 1\nNODATA_VALUE -9999\n1 oops\n";
        let err = DemGrid::<f64>::parse_ascii(text, "bad.asc").unwrap_err();
        match err {
            Error::Parse { file, line, .. } => {
                assert_eq!(file, "bad.asc");
                assert_eq!(line, 7);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn rejects_all_nodata() {
        let text =
            "NCOLS 1\nNROWS 1\nXLLCORNER 0\nYLLCORNER 0\nCELLSIZE 1\nNODATA_VALUE -9999\n-9999\n";
        assert!(DemGrid::<f64>::parse_ascii(text, "mem").is_err());
    }

    #[test]
    fn max_depth_over_conventions() {
        let d = DepthRaster::new(2, 2, vec![0.0, 0.9, 0.2, 0.0], 0.0, 0.0);
        assert_eq!(d.max_depth_over(&[]).unwrap(), 0.0);
        assert_eq!(d.max_depth_over(&[1]).unwrap(), 0.9);
        assert!(d.max_depth_over(&[7]).is_err());
    }

    #[test]
    fn neighbors_scan_order() {
        let dem = DemGrid::<f64>::from_elevations(3, 3, 1.0, vec![0.0; 9]).unwrap();
        let center = dem.idx(1, 1);
        let ns: Vec<usize> = dem.neighbors(center).collect();
        // N, NE, E, SE, S, SW, W, NW of (1,1)
        assert_eq!(ns, vec![1, 2, 5, 8, 7, 6, 3, 0]);
    }
}
