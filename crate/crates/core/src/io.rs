//! CSV snapshots of fields, Karhunen–Loève bases and scalar samples.
//!
//! | file | columns |
//! |------|---------|
//! | field | `x[,y],value` |
//! | KL basis | `x[,y],weight,eigenvalue,f_0,...,f_{N-1}`; row `i` is node `i` and carries eigenvalue `i` |
//! | samples | one header line, values in the first column |

use std::io::{Read, Write};

use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::grf::KlBasis;
use crate::grid::{Field, Grid};
use crate::metrics::GaussianSpec;

fn coord_headers(grid: &Grid) -> Vec<String> {
    if grid.dim() == 1 {
        vec!["x".into()]
    } else {
        vec!["x".into(), "y".into()]
    }
}

fn coords(grid: &Grid, idx: usize) -> Vec<String> {
    let p = grid.point(idx);
    p[..grid.dim()].iter().map(|v| format!("{v:e}")).collect()
}

fn parse(s: &str, row: usize) -> Result<f64> {
    s.trim().parse::<f64>().or_else(|_| invalid(format!("row {row}: cannot parse '{s}' as a number")))
}

/// Checks that the leading coordinate columns of `record` match node `idx`.
fn check_coords(grid: &Grid, idx: usize, record: &csv::StringRecord) -> Result<()> {
    let p = grid.point(idx);
    for k in 0..grid.dim() {
        let v = parse(record.get(k).unwrap_or(""), idx + 1)?;
        if (v - p[k]).abs() > 1e-9 * grid.length() {
            return invalid(format!("row {}: coordinate {v} does not match node {idx} at {}", idx + 1, p[k]));
        }
    }
    Ok(())
}

pub fn write_field_csv<W: Write>(field: &Field, w: W) -> Result<()> {
    let grid = field.grid();
    let mut out = csv::Writer::from_writer(w);
    let mut header = coord_headers(grid);
    header.push("value".into());
    out.write_record(&header)?;
    for (i, v) in field.values().iter().enumerate() {
        let mut rec = coords(grid, i);
        rec.push(format!("{v:e}"));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a field written by [`write_field_csv`]; rows must list the nodes
/// of `grid` in order.
pub fn read_field_csv<R: Read>(r: R, grid: &Grid) -> Result<Field> {
    let mut rdr = csv::Reader::from_reader(r);
    let d = grid.dim();
    let mut values = Vec::with_capacity(grid.len());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if i >= grid.len() {
            return invalid(format!("field file has more than the {} rows of the grid", grid.len()));
        }
        if rec.len() != d + 1 {
            return invalid(format!("row {}: expected {} columns, found {}", i + 1, d + 1, rec.len()));
        }
        check_coords(grid, i, &rec)?;
        values.push(parse(&rec[d], i + 1)?);
    }
    if values.len() != grid.len() {
        return invalid(format!("field file has {} rows, the grid has {} nodes", values.len(), grid.len()));
    }
    Field::new(*grid, values)
}

pub fn write_kl_csv<W: Write>(basis: &KlBasis, grid: &Grid, w: W) -> Result<()> {
    let n = basis.len();
    if n != grid.len() {
        return invalid("KL basis does not match the grid");
    }
    let mut out = csv::Writer::from_writer(w);
    let mut header = coord_headers(grid);
    header.push("weight".into());
    header.push("eigenvalue".into());
    header.extend((0..n).map(|k| format!("f_{k}")));
    out.write_record(&header)?;
    let f = basis.eigenfields();
    for i in 0..n {
        let mut rec = coords(grid, i);
        rec.push(format!("{:e}", basis.weights()[i]));
        rec.push(format!("{:e}", basis.eigenvalues()[i]));
        rec.extend((0..n).map(|k| format!("{:e}", f[(i, k)])));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a basis written by [`write_kl_csv`] on `grid`.
pub fn read_kl_csv<R: Read>(r: R, grid: &Grid) -> Result<KlBasis> {
    let n = grid.len();
    let d = grid.dim();
    let mut rdr = csv::Reader::from_reader(r);
    let mut weights = Vec::with_capacity(n);
    let mut eigenvalues = Vec::with_capacity(n);
    let mut fields = DMatrix::zeros(n, n);
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if i >= n || rec.len() != d + 2 + n {
            return invalid(format!("KL file must have {n} rows of {} columns", d + 2 + n));
        }
        check_coords(grid, i, &rec)?;
        weights.push(parse(&rec[d], i + 1)?);
        eigenvalues.push(parse(&rec[d + 1], i + 1)?);
        for k in 0..n {
            fields[(i, k)] = parse(&rec[d + 2 + k], i + 1)?;
        }
        rows += 1;
    }
    if rows != n {
        return invalid(format!("KL file has {rows} rows, the grid has {n} nodes"));
    }
    KlBasis::from_parts(eigenvalues, fields, weights)
}

/// Centered Gaussian with covariance `diag(eigenvalues)` from the
/// `eigenvalue` column of a KL export.
pub fn gaussian_from_kl_csv<R: Read>(r: R) -> Result<GaussianSpec> {
    let mut rdr = csv::Reader::from_reader(r);
    let col = rdr
        .headers()?
        .iter()
        .position(|h| h == "eigenvalue")
        .ok_or_else(|| crate::Error::Validation("KL file has no eigenvalue column".into()))?;
    let mut ev = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        ev.push(parse(rec?.get(col).unwrap_or(""), i + 1)?);
    }
    GaussianSpec::diagonal(&ev)
}

/// First column of a CSV file with a header line.
pub fn read_samples_csv<R: Read>(r: R) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        out.push(parse(rec.get(0).unwrap_or(""), i + 1)?);
    }
    if out.is_empty() {
        return invalid("sample file has no rows");
    }
    if let Some(v) = out.iter().find(|v| !v.is_finite()) {
        return invalid(format!("sample file contains the non-finite value {v}"));
    }
    Ok(out)
}

pub fn write_samples_csv<W: Write>(xs: &[f64], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["value"])?;
    for x in xs {
        out.write_record([format!("{x:e}")])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grf::{build_cov_matrix, kl_decompose, MaternParams};

    #[test]
    fn field_round_trip() {
        for grid in [Grid::unit_interval(7).unwrap(), Grid::unit_square(4).unwrap()] {
            let f = grid.eval(|p| (3.0 * p[0]).sin() + p[1]);
            let mut buf = Vec::new();
            write_field_csv(&f, &mut buf).unwrap();
            let back = read_field_csv(&buf[..], &grid).unwrap();
            assert_eq!(back, f);
        }
    }

    #[test]
    fn field_rejects_wrong_grid() {
        let f = Field::constant(Grid::unit_interval(7).unwrap(), 1.0);
        let mut buf = Vec::new();
        write_field_csv(&f, &mut buf).unwrap();
        assert!(read_field_csv(&buf[..], &Grid::unit_interval(8).unwrap()).is_err());
        assert!(read_field_csv(&buf[..], &Grid::unit_interval(6).unwrap()).is_err());
    }

    #[test]
    fn kl_round_trip_and_gaussian_import() {
        let grid = Grid::unit_interval(9).unwrap();
        let params = MaternParams::new(1.0, 0.3, 0).unwrap();
        let basis = kl_decompose(&build_cov_matrix(&params, &grid), &grid.weights()).unwrap();
        let mut buf = Vec::new();
        write_kl_csv(&basis, &grid, &mut buf).unwrap();
        let back = read_kl_csv(&buf[..], &grid).unwrap();
        assert_eq!(back.eigenvalues(), basis.eigenvalues());
        assert_eq!(back.eigenfields(), basis.eigenfields());
        let g = gaussian_from_kl_csv(&buf[..]).unwrap();
        assert_eq!(g, GaussianSpec::from_kl(&basis, basis.len()).unwrap());
    }

    #[test]
    fn samples_round_trip() {
        let xs = [0.1, -2.5, 1e-300, 7.0];
        let mut buf = Vec::new();
        write_samples_csv(&xs, &mut buf).unwrap();
        assert_eq!(read_samples_csv(&buf[..]).unwrap(), xs);
        assert!(read_samples_csv(&b"value\n"[..]).is_err());
    }
}
