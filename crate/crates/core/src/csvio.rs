//! CSV reading and writing with C-style `%.17g` number formatting.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::integrator::Trajectory;

/// Formats like C's `printf("%.17g", x)`.
pub fn fmt_g17(x: f64) -> String {
    const P: i32 = 17;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent in {:e} output");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..P).contains(&exp) {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (P - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_matrix<W: Write>(out: W, m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    for i in 0..m.nrows() {
        w.write_record((0..m.ncols()).map(|j| fmt_g17(m[(i, j)])))?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    write_matrix(std::fs::File::create(path)?, m)
}

pub fn read_matrix<R: Read>(input: R) -> Result<DMatrix<f64>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::Scenario(format!("not a number in matrix CSV: {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Scenario("ragged matrix CSV".into()));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

pub fn load_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Scenario(format!("cannot open {}: {e}", path.display())))?;
    read_matrix(file)
}

/// Header `t,<columns…>` then one row per recorded time.
pub fn write_trajectory<W: Write>(out: W, traj: &Trajectory) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend(traj.columns.iter().cloned());
    w.write_record(&header)?;
    for (t, row) in traj.times.iter().zip(&traj.rows) {
        w.write_record(std::iter::once(fmt_g17(*t)).chain(row.iter().map(|x| fmt_g17(*x))))?;
    }
    w.flush()?;
    Ok(())
}

/// A table read back from a trajectory-style CSV.
#[derive(Debug, Clone)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

pub fn read_table<R: Read>(input: R) -> Result<Table> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let columns: Vec<String> = r.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        rows.push(
            rec.iter()
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| Error::Scenario(format!("not a number in CSV: {s:?}")))
                })
                .collect::<Result<Vec<_>>>()?,
        );
    }
    Ok(Table { columns, rows })
}
