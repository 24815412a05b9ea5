//! Flat CSV storage for discrete varifolds.
//!
//! ```text
//! m,n
//! 1,2
//! x0,x1,p00,p01,p10,p11,w
//! 1,0,0,0,0,1,0.0015707963267948966
//! ...
//! ```
//!
//! Numbers are written with the shortest representation that parses back to
//! the same `f64`, so a read/write cycle reproduces the file byte for byte.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use super::{Atom, DiscreteVarifold};
use crate::error::{Error, Result};
use crate::geom::Subspace;

pub fn write_csv<W: Write>(v: &DiscreteVarifold, out: W) -> Result<()> {
    let n = v.n();
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
    w.write_record(["m", "n"])?;
    w.write_record([v.m().to_string(), n.to_string()])?;
    let mut header: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    for i in 0..n {
        for j in 0..n {
            header.push(format!("p{i}{j}"));
        }
    }
    header.push("w".into());
    w.write_record(&header)?;
    let mut row = Vec::with_capacity(n + n * n + 1);
    for atom in v.atoms() {
        row.clear();
        row.extend(atom.position.iter().map(|x| x.to_string()));
        let p = atom.plane.proj();
        for i in 0..n {
            for j in 0..n {
                row.push(p[(i, j)].to_string());
            }
        }
        row.push(atom.weight.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<DiscreteVarifold> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut records = reader.records();
    let mut next = |what: &str| -> Result<csv::StringRecord> {
        records
            .next()
            .ok_or_else(|| Error::Format(format!("missing {what}")))?
            .map_err(Error::from)
    };
    let names = next("dimension header")?;
    if names.iter().map(str::trim).collect::<Vec<_>>() != ["m", "n"] {
        return Err(Error::Format("first line must be `m,n`".into()));
    }
    let dims = next("dimension values")?;
    let parse_dim = |i: usize| -> Result<usize> {
        dims.get(i)
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Format("dimensions must be positive integers".into()))
    };
    let (m, n) = (parse_dim(0)?, parse_dim(1)?);
    if m == 0 || m > n {
        return Err(Error::Format(format!("need 1 <= m <= n, got m = {m}, n = {n}")));
    }
    let width = n + n * n + 1;
    let columns = next("column header")?;
    if columns.len() != width {
        return Err(Error::Format(format!(
            "expected {width} columns, header has {}",
            columns.len()
        )));
    }
    let mut atoms = Vec::new();
    for (row, record) in records.enumerate() {
        let record = record?;
        let line = row + 4;
        if record.len() != width {
            return Err(Error::Format(format!(
                "line {line}: expected {width} fields, found {}",
                record.len()
            )));
        }
        let values: Vec<f64> = record
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("line {line}: {e}")))?;
        let position = DVector::from_column_slice(&values[..n]);
        let proj = DMatrix::from_row_slice(n, n, &values[n..n + n * n]);
        let plane =
            Subspace::from_projection(proj, m, 1e-10).map_err(|e| Error::Format(format!("line {line}: {e}")))?;
        atoms.push(Atom::new(position, plane, values[width - 1]));
    }
    DiscreteVarifold::new(m, n, atoms).map_err(|e| Error::Format(e.to_string()))
}

pub fn save(v: &DiscreteVarifold, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(v, std::io::BufWriter::new(file))
}

pub fn load(path: &Path) -> Result<DiscreteVarifold> {
    read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::varifold::{AnalyticFamily, SphereShell};

    fn bytes(v: &DiscreteVarifold) -> Vec<u8> {
        let mut buf = Vec::new();
        write_csv(v, &mut buf).unwrap();
        buf
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let sphere = AnalyticFamily::Sphere(
            SphereShell::hypersphere(DVector::from_vec(vec![0.1, -0.2, 0.3]), 0.7, 1.3).unwrap(),
        );
        let v = sphere.sample(0.05).unwrap();
        let first = bytes(&v);
        let back = read_csv(first.as_slice()).unwrap();
        assert_eq!(back.atoms(), v.atoms());
        assert_eq!(bytes(&back), first);
    }

    #[test]
    fn header_layout() {
        let v = DiscreteVarifold::new(
            1,
            2,
            vec![Atom::new(
                DVector::from_vec(vec![0.5, 1.0]),
                Subspace::coordinate(2, &[0]).unwrap(),
                3.0,
            )],
        )
        .unwrap();
        let text = String::from_utf8(bytes(&v)).unwrap();
        assert_eq!(text, "m,n\n1,2\nx0,x1,p00,p01,p10,p11,w\n0.5,1,1,0,0,0,3\n");
    }

    #[test]
    fn malformed_inputs() {
        for bad in [
            "",
            "m,k\n1,2\n",
            "m,n\n3,2\nx\n",
            "m,n\n1,2\nx0,x1,p00,p01,p10,p11,w\n0,0,1,0,0,0\n",
            "m,n\n1,2\nx0,x1,p00,p01,p10,p11,w\n0,0,1,0,0,1,1\n",
            "m,n\n1,2\nx0,x1,p00,p01,p10,p11,w\n0,0,1,0,0,0,-1\n",
            "m,n\n1,2\nx0,x1,p00,p01,p10,p11,w\n0,zero,1,0,0,0,1\n",
        ] {
            assert!(
                matches!(read_csv(bad.as_bytes()), Err(Error::Format(_)) | Err(Error::Csv(_))),
                "{bad:?}"
            );
        }
    }
}
