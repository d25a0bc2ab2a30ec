use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Rows of text cells under a fixed header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// A pass/fail contract evaluated by an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Named results of one measurement or experiment.
///
/// On disk (see [`MetricsReport::write`]):
///
/// | file | columns |
/// |------|---------|
/// | `scalars.csv` | `name,value` |
/// | `<series>.csv` | `index,value` |
/// | `<table>.csv` | the table's own header |
/// | `checks.csv` | `check,passed,detail` |
/// | `config.txt` | `key = value` per metadata entry |
/// | `<series>.svg` | polyline plot of the series |
///
/// Maps are ordered, and floats are printed with Rust's shortest round-trip
/// formatting (`{:?}`), so identical reports serialize to identical bytes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsReport {
    pub name: String,
    pub scalars: BTreeMap<String, f64>,
    pub series: BTreeMap<String, Vec<(usize, f64)>>,
    pub tables: BTreeMap<String, Table>,
    pub metadata: BTreeMap<String, String>,
    pub checks: Vec<Check>,
}

impl MetricsReport {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Self::default()
        }
    }

    pub fn scalar(&mut self, key: &str, value: f64) {
        self.scalars.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.scalars.get(key).copied()
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.insert(key.to_string(), value.to_string());
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// Merges `other` under `prefix.` keys.
    pub fn absorb(&mut self, prefix: &str, other: MetricsReport) {
        for (k, v) in other.scalars {
            self.scalars.insert(format!("{prefix}.{k}"), v);
        }
        for (k, v) in other.series {
            self.series.insert(format!("{prefix}.{k}"), v);
        }
        for (k, v) in other.tables {
            self.tables.insert(format!("{prefix}.{k}"), v);
        }
        for mut c in other.checks {
            c.name = format!("{prefix}.{}", c.name);
            self.checks.push(c);
        }
    }

    /// Writes every file listed above into `dir`, creating it if needed.
    /// Non-finite series values are rejected.
    pub fn write(&self, dir: &Path) -> Result<()> {
        for (k, s) in &self.series {
            if s.iter().any(|(_, v)| !v.is_finite()) {
                return Err(Error::arg(format!("series `{k}` has non-finite values")));
            }
        }
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

        let mut scalars = Table::new(&["name", "value"]);
        for (k, v) in &self.scalars {
            scalars.push(vec![k.clone(), format!("{v:?}")]);
        }
        write_table(&dir.join("scalars.csv"), &scalars)?;

        for (k, s) in &self.series {
            let mut t = Table::new(&["index", "value"]);
            for (i, v) in s {
                t.push(vec![i.to_string(), format!("{v:?}")]);
            }
            write_table(&dir.join(format!("{k}.csv")), &t)?;
            let svg = dir.join(format!("{k}.svg"));
            fs::write(&svg, svg_polyline(k, s)).map_err(|e| Error::io(&svg, e))?;
        }
        for (k, t) in &self.tables {
            write_table(&dir.join(format!("{k}.csv")), t)?;
        }

        let mut checks = Table::new(&["check", "passed", "detail"]);
        for c in &self.checks {
            checks.push(vec![c.name.clone(), c.passed.to_string(), c.detail.clone()]);
        }
        write_table(&dir.join("checks.csv"), &checks)?;

        let mut cfg = format!("# report: {}\n", self.name);
        for (k, v) in &self.metadata {
            let _ = writeln!(cfg, "{k} = {v}");
        }
        let path = dir.join("config.txt");
        fs::write(&path, cfg).map_err(|e| Error::io(&path, e))
    }
}

fn write_table(path: &Path, table: &Table) -> Result<()> {
    let to_err = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::arg(format!("csv write to {}: {other:?}", path.display())),
    };
    let mut w = csv::Writer::from_path(path).map_err(to_err)?;
    w.write_record(&table.columns).map_err(to_err)?;
    for row in &table.rows {
        w.write_record(row).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Bare-bones line plot, 480×320, axes scaled to the data range.
pub fn svg_polyline(title: &str, points: &[(usize, f64)]) -> String {
    const W: f64 = 480.0;
    const H: f64 = 320.0;
    const PAD: f64 = 40.0;
    let (x0, x1) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (i, _)| {
        (lo.min(*i as f64), hi.max(*i as f64))
    });
    let (y0, y1) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, v)| {
        (lo.min(*v), hi.max(*v))
    });
    let span = |lo: f64, hi: f64| if hi > lo { hi - lo } else { 1.0 };
    let mut path = String::new();
    for (i, v) in points {
        let px = PAD + (*i as f64 - x0) / span(x0, x1) * (W - 2.0 * PAD);
        let py = H - PAD - (v - y0) / span(y0, y1) * (H - 2.0 * PAD);
        let _ = write!(path, "{px:.2},{py:.2} ");
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{PAD}" y="20" font-family="monospace" font-size="12">{}</text>"#,
        escape(title)
    );
    let _ = writeln!(
        out,
        r#"<path d="M{PAD},{PAD} V{} H{}" stroke="black" fill="none"/>"#,
        H - PAD,
        W - PAD
    );
    if points.is_empty() {
        let _ = writeln!(out, "</svg>");
        return out;
    }
    let _ = writeln!(
        out,
        r#"<text x="{PAD}" y="{}" font-family="monospace" font-size="10">{x0} .. {x1}; y {y0:.3e} .. {y1:.3e}</text>"#,
        H - 10.0
    );
    let _ = writeln!(
        out,
        r#"<polyline points="{}" stroke="steelblue" fill="none"/>"#,
        path.trim_end()
    );
    let _ = writeln!(out, "</svg>");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_expected_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = MetricsReport::new("demo");
        r.scalar("b", 0.5);
        r.scalar("a", 1e-300);
        r.series.insert("curve".into(), vec![(0, 1.0), (1, 0.25)]);
        r.meta("seed", 7);
        r.check("ok", true, "fine, really");
        r.write(dir.path()).unwrap();
        let scalars = fs::read_to_string(dir.path().join("scalars.csv")).unwrap();
        assert_eq!(scalars, "name,value\na,1e-300\nb,0.5\n");
        let curve = fs::read_to_string(dir.path().join("curve.csv")).unwrap();
        assert_eq!(curve, "index,value\n0,1.0\n1,0.25\n");
        let checks = fs::read_to_string(dir.path().join("checks.csv")).unwrap();
        assert_eq!(checks, "check,passed,detail\nok,true,\"fine, really\"\n");
        assert!(fs::read_to_string(dir.path().join("config.txt")).unwrap().contains("seed = 7"));
        assert!(fs::read_to_string(dir.path().join("curve.svg")).unwrap().contains("<polyline"));
    }

    #[test]
    fn non_finite_series_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = MetricsReport::new("bad");
        r.series.insert("s".into(), vec![(0, f64::NAN)]);
        assert!(r.write(dir.path()).is_err());
    }

    #[test]
    fn absorb_prefixes_everything() {
        let mut a = MetricsReport::new("a");
        let mut b = MetricsReport::new("b");
        b.scalar("x", 1.0);
        b.check("c", false, "");
        a.absorb("ddim", b);
        assert_eq!(a.get("ddim.x"), Some(1.0));
        assert_eq!(a.failed_checks().next().unwrap().name, "ddim.c");
    }
}
