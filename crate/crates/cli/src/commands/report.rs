//! `sogrid report`: join metric rows with external performance numbers and
//! emit correlation tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use sogrid_core::metric::pearson;

use crate::commands::write_atomic;
use crate::errors::{CliError, CliResult};
use crate::manifest::RunRecorder;

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Metric rows produced by `eval`.
    #[arg(long)]
    pub rows: PathBuf,
    /// External performance table: whitespace-separated, header row starting
    /// with `name`, one numeric column per downstream metric.
    #[arg(long)]
    pub perf: Option<PathBuf>,
    /// Output report file.
    #[arg(long)]
    pub out: PathBuf,
}

struct MetricRow {
    name: String,
    msog: f64,
    smig: f64,
    n_covered: usize,
}

impl MetricRow {
    fn smig_norm(&self) -> f64 {
        self.smig / self.n_covered as f64
    }
}

fn parse_rows(path: &Path) -> CliResult<Vec<MetricRow>> {
    let text = std::fs::read_to_string(path).map_err(CliError::data)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::data(format!("{}: empty rows file", path.display())))?;
    let cols: Vec<&str> = header.split_whitespace().collect();
    if cols != ["name", "msog", "smig", "n_covered"] {
        return Err(CliError::data(format!(
            "{}: unexpected header {cols:?}",
            path.display()
        )));
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(CliError::data(format!(
                "{} line {}: expected 4 fields",
                path.display(),
                i + 1
            )));
        }
        let bad = |what: &str| {
            CliError::data(format!("{} line {}: bad {what}", path.display(), i + 1))
        };
        rows.push(MetricRow {
            name: fields[0].to_string(),
            msog: fields[1].parse().map_err(|_| bad("msog"))?,
            smig: fields[2].parse().map_err(|_| bad("smig"))?,
            n_covered: fields[3].parse().map_err(|_| bad("n_covered"))?,
        });
    }
    Ok(rows)
}

/// Performance table: column names plus per-placement values.
struct PerfTable {
    columns: Vec<String>,
    values: BTreeMap<String, Vec<f64>>,
}

fn parse_perf(path: &Path) -> CliResult<PerfTable> {
    let text = std::fs::read_to_string(path).map_err(CliError::data)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('#')
    });
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::data(format!("{}: empty performance file", path.display())))?;
    let cols: Vec<&str> = header.split_whitespace().collect();
    if cols.first() != Some(&"name") || cols.len() < 2 {
        return Err(CliError::data(format!(
            "{}: header must be `name <metric>...`",
            path.display()
        )));
    }
    let columns: Vec<String> = cols[1..].iter().map(|s| s.to_string()).collect();
    let mut values = BTreeMap::new();
    for (i, line) in lines {
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != columns.len() + 1 {
            return Err(CliError::data(format!(
                "{} line {}: expected {} fields",
                path.display(),
                i + 1,
                columns.len() + 1
            )));
        }
        let mut row = Vec::with_capacity(columns.len());
        for f in &fields[1..] {
            row.push(f.parse().map_err(|_| {
                CliError::data(format!(
                    "{} line {}: bad number `{f}`",
                    path.display(),
                    i + 1
                ))
            })?);
        }
        values.insert(fields[0].to_string(), row);
    }
    Ok(PerfTable { columns, values })
}

pub fn run(args: &ReportArgs) -> CliResult<()> {
    let mut recorder = RunRecorder::new("report");
    recorder.input(&args.rows);

    let rows = parse_rows(&args.rows)?;
    if rows.is_empty() {
        return Err(CliError::data("rows file has no data rows"));
    }
    let perf = match &args.perf {
        Some(p) => {
            recorder.input(p);
            Some(parse_perf(p)?)
        }
        None => None,
    };

    let mut out = String::from("name\tmsog\tsmig\tsmig_norm\tn_covered");
    if let Some(table) = &perf {
        for c in &table.columns {
            write!(out, "\t{c}").unwrap();
        }
    }
    out.push('\n');

    // Joined table keeps only placements present in both inputs when a
    // performance file is given.
    let mut joined: Vec<(&MetricRow, Option<&Vec<f64>>)> = Vec::new();
    for row in &rows {
        match &perf {
            Some(table) => {
                if let Some(vals) = table.values.get(&row.name) {
                    joined.push((row, Some(vals)));
                }
            }
            None => joined.push((row, None)),
        }
    }
    if joined.is_empty() {
        return Err(CliError::data(
            "no placement names matched between rows and performance file",
        ));
    }
    for (row, vals) in &joined {
        write!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            row.name,
            row.msog,
            row.smig,
            row.smig_norm(),
            row.n_covered
        )
        .unwrap();
        if let Some(vals) = vals {
            for v in *vals {
                write!(out, "\t{v}").unwrap();
            }
        }
        out.push('\n');
    }

    if let Some(table) = &perf {
        out.push_str("\n[correlation]\nmetric\tperf\tpearson\tn\n");
        let metric_cols: [(&str, Box<dyn Fn(&MetricRow) -> f64>); 3] = [
            ("msog", Box::new(|r: &MetricRow| r.msog)),
            ("smig", Box::new(|r: &MetricRow| r.smig)),
            ("smig_norm", Box::new(|r: &MetricRow| r.smig_norm())),
        ];
        for (metric_name, extract) in &metric_cols {
            for (ci, perf_name) in table.columns.iter().enumerate() {
                let xs: Vec<f64> = joined.iter().map(|(r, _)| extract(r)).collect();
                let ys: Vec<f64> = joined
                    .iter()
                    .map(|(_, v)| v.expect("joined rows have perf")[ci])
                    .collect();
                match pearson(&xs, &ys) {
                    Ok(r) => {
                        writeln!(out, "{metric_name}\t{perf_name}\t{r}\t{}", xs.len()).unwrap()
                    }
                    Err(_) => writeln!(
                        out,
                        "{metric_name}\t{perf_name}\tundefined\t{}",
                        xs.len()
                    )
                    .unwrap(),
                }
            }
        }
    }

    print!("{out}");
    write_atomic(&args.out, &out)?;
    recorder.output(&args.out);
    let manifest_out = PathBuf::from(format!("{}.manifest.toml", args.out.display()));
    recorder.write(&manifest_out)
}
