use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::{Chart, GridField, SphereGrid};
use crate::error::{Error, Result};

const HEADER: &str = "chart,ix,iy,re,im,value";

pub(crate) fn format_value(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "+inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

pub(crate) fn parse_value(s: &str) -> Result<f64> {
    match s.trim() {
        "nan" | "NaN" => Ok(f64::NAN),
        "+inf" | "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        t => t.parse().map_err(|_| Error::Parse(format!("bad number {t:?}"))),
    }
}

impl GridField {
    /// Writes the field in the `chart,ix,iy,re,im,value` format, chart 0 first,
    /// rows in node-index order.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = BufWriter::new(out);
        writeln!(w, "{HEADER}")?;
        let g = self.grid();
        for chart in Chart::BOTH {
            let vals = self.values(chart);
            for (k, &v) in vals.iter().enumerate() {
                let (ix, iy) = g.unindex(k);
                let z = g.node(ix, iy);
                writeln!(
                    w,
                    "{},{ix},{iy},{},{},{}",
                    chart.index(),
                    z.re,
                    z.im,
                    format_value(v)
                )?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(File::create(path)?)
    }

    /// Reads a field written by [`GridField::write_csv`], reconstructing the
    /// grid from the node coordinates.
    pub fn read_csv<R: Read>(input: R) -> Result<GridField> {
        let mut rdr = csv::Reader::from_reader(input);
        let headers = rdr.headers()?.clone();
        let expect: Vec<&str> = HEADER.split(',').collect();
        if headers.iter().map(str::trim).collect::<Vec<_>>() != expect {
            return Err(Error::Parse(format!("expected header {HEADER:?}")));
        }
        let mut rows = Vec::new();
        let mut n = 0usize;
        let mut x0 = None;
        let mut x1 = None;
        for rec in rdr.records() {
            let rec = rec?;
            let int = |i: usize| -> Result<usize> {
                rec[i].trim().parse().map_err(|_| Error::Parse(format!("bad index {:?}", &rec[i])))
            };
            let chart = int(0)?;
            if chart > 1 {
                return Err(Error::Parse(format!("bad chart {chart}")));
            }
            let (ix, iy) = (int(1)?, int(2)?);
            let re = parse_value(&rec[3])?;
            let v = parse_value(&rec[5])?;
            n = n.max(ix + 1).max(iy + 1);
            if ix == 0 {
                x0 = Some(re);
            } else if ix == 1 {
                x1 = Some(re);
            }
            rows.push((chart, ix, iy, v));
        }
        let (Some(x0), Some(x1)) = (x0, x1) else {
            return Err(Error::Parse("too few nodes to reconstruct the grid".into()));
        };
        let h = x1 - x0;
        let grid = SphereGrid::new(n as f64 * h / 2.0, n)?;
        if rows.len() != 2 * grid.len() {
            return Err(Error::Parse(format!(
                "expected {} rows for a {n}x{n} grid, found {}",
                2 * grid.len(),
                rows.len()
            )));
        }
        let mut vals = [vec![f64::NAN; grid.len()], vec![f64::NAN; grid.len()]];
        for (chart, ix, iy, v) in rows {
            vals[chart][grid.index(ix, iy)] = v;
        }
        let [a, b] = vals;
        GridField::new(&grid, a, b)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<GridField> {
        GridField::read_csv(File::open(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_sentinels() {
        let g = SphereGrid::new(1.25, 21).unwrap();
        let mut f = GridField::from_fn(&g, false, |c, z| z.re - 3.0 * z.im + c.index() as f64);
        f.set(Chart::Zero, 3, 4, f64::INFINITY);
        f.set(Chart::One, 0, 0, f64::NEG_INFINITY);
        f.set(Chart::One, 5, 5, f64::NAN);
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("chart,ix,iy,re,im,value\n"));
        assert!(text.contains(",+inf\n") && text.contains(",-inf\n") && text.contains(",nan\n"));
        assert_eq!(text.lines().count(), 1 + 2 * 21 * 21);
        let back = GridField::read_csv(buf.as_slice()).unwrap();
        assert!((back.grid().h() - g.h()).abs() < 1e-12);
        for c in Chart::BOTH {
            for (a, b) in f.values(c).iter().zip(back.values(c)) {
                assert!(a == b || (a.is_nan() && b.is_nan()));
            }
        }
    }

    #[test]
    fn rejects_bad_header() {
        let text = "a,b,c\n1,2,3\n";
        assert!(GridField::read_csv(text.as_bytes()).is_err());
    }
}
