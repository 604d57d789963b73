//! Plot-ready CSV tables.
//!
//! Every file starts with one `# manifest <hash>` comment line, followed by
//! a fixed header. Floats are written with 17 significant digits so that a
//! write/parse round trip is exact. Missing values are empty cells.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use suhnpf_core::solver::{BaselinePoint, FrontPoint, SolveReport};

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn numbered(prefix: &str, count: usize) -> impl Iterator<Item = String> + '_ {
    (1..=count).map(move |i| format!("{prefix}{i}"))
}

/// `x1..xn, f1..fk, lambda1..lambdak, mu1..mum, null_residual`.
pub fn front_header(n: usize, k: usize, mu: usize) -> Vec<String> {
    numbered("x", n)
        .chain(numbered("f", k))
        .chain(numbered("lambda", k))
        .chain(numbered("mu", mu))
        .chain(["null_residual".to_string()])
        .collect()
}

/// `iteration, point_index, x1..xn, residual`.
pub fn trajectory_header(n: usize) -> Vec<String> {
    ["iteration".to_string(), "point_index".to_string()]
        .into_iter()
        .chain(numbered("x", n))
        .chain(["residual".to_string()])
        .collect()
}

pub const LOSS_HEADER: [&str; 5] = ["step", "bce", "iteration", "outer_err", "mse_to_analytic"];

/// A parsed table. Empty cells become `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub manifest: Option<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn new(manifest: Option<String>, header: Vec<String>) -> Self {
        Self {
            manifest,
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        assert_eq!(
            row.len(),
            self.header.len(),
            "row width must match the header"
        );
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Serialises with LF line endings.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        if let Some(hash) = &self.manifest {
            writeln!(out, "# manifest {hash}")?;
        }
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.map(fmt_float).unwrap_or_default()))?;
        }
        out.push_str(std::str::from_utf8(&w.into_inner()?)?);
        Ok(out)
    }

    /// Parses a table; errors carry the 1-based line number.
    pub fn parse(text: &str) -> Result<Self> {
        let manifest = text
            .lines()
            .next()
            .and_then(|l| l.strip_prefix("# manifest "))
            .map(|h| h.trim().to_string());
        let mut r = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let header: Vec<String> = r
            .headers()
            .context("cannot read the header")?
            .iter()
            .map(str::to_string)
            .collect();
        if header.is_empty() || header.iter().all(String::is_empty) {
            bail!("missing header");
        }
        let mut table = Table::new(manifest, header);
        for record in r.records() {
            let record = record.map_err(|e| match e.position() {
                Some(pos) => anyhow::anyhow!("line {}: {e}", pos.line()),
                None => anyhow::anyhow!("{e}"),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            let row = record
                .iter()
                .enumerate()
                .map(|(i, cell)| {
                    let cell = cell.trim();
                    if cell.is_empty() {
                        return Ok(None);
                    }
                    cell.parse::<f64>().map(Some).with_context(|| {
                        format!(
                            "line {line}: column '{}' is not a number: {cell:?}",
                            table.header[i]
                        )
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            table.rows.push(row);
        }
        Ok(table)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("{}", path.display()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?)
            .with_context(|| format!("cannot write {}", path.display()))
    }
}

fn some(values: &[f64]) -> impl Iterator<Item = Option<f64>> + '_ {
    values.iter().copied().map(Some)
}

pub fn front_table(hash: &str, n: usize, k: usize, mu: usize, points: &[FrontPoint]) -> Table {
    let mut t = Table::new(Some(hash.to_string()), front_header(n, k, mu));
    for p in points {
        let mut row: Vec<Option<f64>> = some(&p.x)
            .chain(some(&p.f))
            .chain(some(&p.tradeoff.lambda))
            .chain(some(&p.tradeoff.mu))
            .collect();
        row.push(Some(p.tradeoff.null_residual));
        t.push(row);
    }
    t
}

/// Baseline endpoints in the front schema: `λ` holds the weights and the
/// `μ` and `null_residual` cells stay empty.
pub fn baseline_table(
    hash: &str,
    n: usize,
    k: usize,
    mu: usize,
    points: &[BaselinePoint],
) -> Table {
    let mut t = Table::new(Some(hash.to_string()), front_header(n, k, mu));
    for p in points {
        let mut row: Vec<Option<f64>> =
            some(&p.x).chain(some(&p.f)).chain(some(&p.alpha)).collect();
        row.extend(std::iter::repeat_n(None, mu + 1));
        t.push(row);
    }
    t
}

pub fn trajectory_table(hash: &str, report: &SolveReport) -> Table {
    let mut t = Table::new(Some(hash.to_string()), trajectory_header(report.n));
    for (it, set) in report.trajectories.iter().enumerate() {
        for (i, x) in set.points.iter().enumerate() {
            let mut row = vec![Some(it as f64), Some(i as f64)];
            row.extend(some(x));
            row.push(set.residuals.as_ref().map(|r| r[i]));
            t.push(row);
        }
    }
    t
}

/// Step-indexed BCE beside iteration-indexed outer error and MSE; the
/// shorter series is padded with empty cells.
pub fn loss_table(hash: &str, report: &SolveReport) -> Table {
    let header = LOSS_HEADER.iter().map(|s| s.to_string()).collect();
    let mut t = Table::new(Some(hash.to_string()), header);
    let rows = report.bce_trace.len().max(report.outer_error_trace.len());
    for i in 0..rows {
        let bce = report.bce_trace.get(i).copied();
        let err = report.outer_error_trace.get(i).copied();
        t.push(vec![
            bce.map(|_| i as f64),
            bce,
            err.map(|_| i as f64),
            err,
            err.and(report.mse_trace.get(i).copied()),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn headers() {
        assert_eq!(
            front_header(2, 2, 1).join(","),
            "x1,x2,f1,f2,lambda1,lambda2,mu1,null_residual"
        );
        assert_eq!(
            trajectory_header(3).join(","),
            "iteration,point_index,x1,x2,x3,residual"
        );
    }

    #[test]
    fn float_format_has_seventeen_digits() {
        assert_eq!(fmt_float(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_float(-2.0), "-2.0000000000000000e0");
    }

    #[test]
    fn round_trip_with_gaps() {
        let mut t = Table::new(Some("abc".into()), vec!["a".into(), "b".into()]);
        t.push(vec![Some(1.0 / 3.0), None]);
        t.push(vec![Some(f64::MIN_POSITIVE), Some(-1e300)]);
        let text = t.to_csv().unwrap();
        assert!(text.starts_with("# manifest abc\na,b\n"));
        assert!(!text.contains('\r'));
        assert_eq!(Table::parse(&text).unwrap(), t);
    }

    #[test]
    fn ragged_rows_report_the_line() {
        let err = Table::parse("a,b\n1,2\n3\n").unwrap_err();
        assert!(format!("{err:#}").contains("line 3"), "{err:#}");
        let err = Table::parse("# manifest h\na,b\n1,2\n1,zz\n").unwrap_err();
        assert!(format!("{err:#}").contains("line 4"), "{err:#}");
    }
}
