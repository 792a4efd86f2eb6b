use num_complex::Complex64;

use super::set::parse_call;
use super::Weight;
use crate::error::{Error, Result};
use crate::sphere::GridField;

/// Parses a weight from the catalog: `zero`, `fs_potential`, `log_dist(a)`
/// or `log_dist(re,im)`, `radial_power(p)`, `table:<csv-path>`.
pub fn parse_weight(spec: &str) -> Result<Weight> {
    let spec = spec.trim();
    if let Some(path) = spec.strip_prefix("table:") {
        let field = GridField::load_csv(path.trim())
            .map_err(|e| Error::Config(format!("cannot load weight table {path:?}: {e}")))?;
        return Ok(Weight::table(spec, field));
    }
    let (name, a) = parse_call(spec)?;
    let bad = || Error::Config(format!("bad arguments for weight {spec:?}"));
    match (name.as_str(), a.len()) {
        ("zero", 0) => Ok(Weight::zero()),
        ("fs_potential", 0) => Ok(Weight::fs_potential()),
        ("log_dist", 1) => Ok(Weight::log_dist(Complex64::new(a[0], 0.0))),
        ("log_dist", 2) => Ok(Weight::log_dist(Complex64::new(a[0], a[1]))),
        ("radial_power", 1) => Weight::radial_power(a[0]),
        ("zero" | "fs_potential" | "log_dist" | "radial_power", _) => Err(bad()),
        _ => Err(Error::Config(format!("unknown weight {spec:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere::{Chart, SphereGrid};

    #[test]
    fn parses_catalog_entries() {
        assert_eq!(parse_weight("zero").unwrap().label(), "zero");
        let q = parse_weight("log_dist(1)").unwrap();
        assert!((q.eval_chart(Chart::Zero, Complex64::new(3.0, 0.0)) + 2f64.ln()).abs() < 1e-15);
        let q = parse_weight("radial_power(2)").unwrap();
        assert_eq!(q.eval_chart(Chart::Zero, Complex64::new(2.0, 0.0)), 2.0);
        assert!(parse_weight("radial_power(0)").is_err());
        assert!(parse_weight("log_dist()").is_err());
        assert!(parse_weight("weigth").is_err());
        assert!(parse_weight("table:/nonexistent.csv").is_err());
    }

    #[test]
    fn table_from_file() {
        let g = SphereGrid::new(1.25, 21).unwrap();
        let f = GridField::from_fn(&g, false, |_, z| z.re);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("q.csv");
        f.save_csv(&path).unwrap();
        let q = parse_weight(&format!("table:{}", path.display())).unwrap();
        let z = g.node(3, 7);
        assert_eq!(q.eval_chart(Chart::Zero, z), z.re);
    }
}
