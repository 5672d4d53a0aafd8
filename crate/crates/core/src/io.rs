//! Flat-file formats: pattern CSVs with a trailing `#` metadata block,
//! experimental count CSVs and TOML fit reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::calibration::{DataPoint, ExperimentalSeries, FitResult, FitSpec};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::intensity::{Pattern, Sample};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const PATTERN_HEADER: &str = "s_m,intensity";
pub const COUNTS_HEADER: &str = "s_m,counts";

const META_PREFIX: &str = "# meta ";
const CONFIG_PREFIX: &str = "# config ";

/// Render a pattern. Numbers use the shortest representation that parses
/// back to the same `f64`.
pub fn pattern_to_string(pattern: &Pattern, config: Option<&RunConfig>) -> String {
    let mut out = String::with_capacity(32 * (pattern.len() + 8));
    out.push_str(PATTERN_HEADER);
    out.push('\n');
    for p in &pattern.samples {
        let _ = writeln!(out, "{:e},{:e}", p.s, p.intensity);
    }
    let _ = writeln!(out, "{META_PREFIX}version = {VERSION}");
    for (k, v) in &pattern.metadata {
        let _ = writeln!(out, "{META_PREFIX}{k} = {v}");
    }
    if let Some(cfg) = config {
        for line in cfg.to_toml().lines().filter(|l| !l.is_empty()) {
            let _ = writeln!(out, "{CONFIG_PREFIX}{line}");
        }
    }
    out
}

pub fn write_pattern(path: &Path, pattern: &Pattern, config: Option<&RunConfig>) -> Result<()> {
    std::fs::write(path, pattern_to_string(pattern, config))?;
    Ok(())
}

fn parse_number(field: &str, line: u64, what: &str) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Parse {
            line,
            message: format!("invalid {what} `{field}`"),
        })
}

/// Parse pattern text. `# meta key = value` lines are restored into the
/// metadata (except `version`); other comment lines are ignored.
pub fn parse_pattern(text: &str) -> Result<Pattern> {
    let mut samples = Vec::new();
    let mut metadata = BTreeMap::new();
    let mut header_seen = false;
    for (i, raw) in text.lines().enumerate() {
        let line = i as u64 + 1;
        if let Some(rest) = raw.strip_prefix(META_PREFIX) {
            if let Some((k, v)) = rest.split_once(" = ") {
                if k != "version" {
                    metadata.insert(k.to_string(), v.to_string());
                }
            }
            continue;
        }
        if raw.starts_with('#') || raw.trim().is_empty() {
            continue;
        }
        if !header_seen {
            if raw.trim() != PATTERN_HEADER {
                return Err(Error::Parse {
                    line,
                    message: format!("expected header `{PATTERN_HEADER}`"),
                });
            }
            header_seen = true;
            continue;
        }
        let (s, v) = raw.split_once(',').ok_or_else(|| Error::Parse {
            line,
            message: "expected two comma-separated fields".into(),
        })?;
        samples.push(Sample {
            s: parse_number(s, line, "position")?,
            intensity: parse_number(v, line, "intensity")?,
        });
    }
    if !header_seen {
        return Err(Error::Parse {
            line: 1,
            message: format!("missing header `{PATTERN_HEADER}`"),
        });
    }
    let mut pattern = Pattern::new(samples)?;
    pattern.metadata = metadata;
    Ok(pattern)
}

pub fn read_pattern(path: &Path) -> Result<Pattern> {
    parse_pattern(&std::fs::read_to_string(path)?)
}

/// Parse an `s_m,counts` table. Rows are sorted by position and counts at
/// repeated positions averaged.
pub fn parse_experimental_csv(text: &str, label: &str) -> Result<ExperimentalSeries> {
    // comment and blank lines are dropped here so record line numbers can be
    // mapped back to the original text
    let mut origin = Vec::new();
    let mut body = String::with_capacity(text.len());
    for (i, line) in text.lines().enumerate() {
        if line.trim_start().starts_with('#') || line.trim().is_empty() {
            continue;
        }
        origin.push(i as u64 + 1);
        body.push_str(line);
        body.push('\n');
    }
    let line_at = |pos: Option<&csv::Position>| {
        pos.and_then(|p| origin.get(p.line() as usize - 1).copied())
            .unwrap_or(0)
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(body.as_bytes());
    let headers = reader.headers().map_err(|e| Error::Parse {
        line: line_at(e.position()),
        message: e.to_string(),
    })?;
    if headers.iter().collect::<Vec<_>>() != ["s_m", "counts"] {
        return Err(Error::Parse {
            line: origin.first().copied().unwrap_or(1),
            message: format!("expected header `{COUNTS_HEADER}`"),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: line_at(e.position()),
            message: e.to_string(),
        })?;
        let line = line_at(record.position());
        if record.len() != 2 {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let s = parse_number(&record[0], line, "position")?;
        let counts = parse_number(&record[1], line, "counts")?;
        if counts < 0.0 {
            return Err(Error::validation(
                "counts",
                format!("negative counts {counts} at line {line}"),
            ));
        }
        rows.push((s, counts));
    }
    if rows.is_empty() {
        return Err(Error::validation("counts", "no data rows"));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut points: Vec<DataPoint> = Vec::with_capacity(rows.len());
    let mut i = 0;
    while i < rows.len() {
        let j = rows[i..].iter().take_while(|r| r.0 == rows[i].0).count();
        let mean = rows[i..i + j].iter().map(|r| r.1).sum::<f64>() / j as f64;
        points.push(DataPoint {
            s: rows[i].0,
            counts: mean,
        });
        i += j;
    }
    ExperimentalSeries::new(points, label)
}

pub fn load_experimental_csv(path: &Path) -> Result<ExperimentalSeries> {
    let label = path
        .file_stem()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    parse_experimental_csv(&std::fs::read_to_string(path)?, &label)
}

#[derive(Serialize)]
struct Report<'a> {
    version: &'a str,
    mode: String,
    kernel: String,
    data: &'a str,
    points: usize,
    free: Vec<String>,
    amplitude: f64,
    c1: f64,
    c2: f64,
    lambda_t: f64,
    objective: f64,
    evaluations: usize,
    converged: bool,
}

pub fn fit_report_to_string(
    config: &RunConfig,
    data: &ExperimentalSeries,
    spec: &FitSpec,
    result: &FitResult,
) -> String {
    let report = Report {
        version: VERSION,
        mode: config.mode.to_string(),
        kernel: config.kernel.to_string(),
        data: &data.label,
        points: data.len(),
        free: spec.free.iter().map(|p| p.to_string()).collect(),
        amplitude: result.values.amplitude,
        c1: result.values.c1,
        c2: result.values.c2(),
        lambda_t: result.values.lambda_t,
        objective: result.objective,
        evaluations: result.evaluations,
        converged: result.converged,
    };
    toml::to_string(&report).expect("report serializes")
}

pub fn write_fit_report(
    path: &Path,
    config: &RunConfig,
    data: &ExperimentalSeries,
    spec: &FitSpec,
    result: &FitResult,
) -> Result<()> {
    std::fs::write(path, fit_report_to_string(config, data, spec, result))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn experimental_examples() {
        let s = parse_experimental_csv("s_m,counts\n0,100\n1e-5,50\n", "x").unwrap();
        assert_eq!(s.len(), 2);
        let s =
            parse_experimental_csv("s_m,counts\n# note\n2e-6,20\n1e-6,3\n2e-6,10\n", "x").unwrap();
        assert_eq!(
            s.points,
            vec![
                DataPoint {
                    s: 1e-6,
                    counts: 3.0
                },
                DataPoint {
                    s: 2e-6,
                    counts: 15.0
                }
            ]
        );
    }

    #[test]
    fn experimental_errors() {
        match parse_experimental_csv("s_m,counts\n0,1\nabc,5\n", "x") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_experimental_csv("# c\ns_m,counts\n0,1\n# c\n1,x\n", "x") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_experimental_csv("s_m,counts\n0,-1\n", "x"),
            Err(Error::Validation { .. })
        ));
        assert!(matches!(
            parse_experimental_csv("s,counts\n0,1\n", "x"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn pattern_header_required() {
        assert!(matches!(
            parse_pattern("s,i\n0,1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_pattern("s_m,intensity\n0,1\n1,q\n"),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn metadata_survives() {
        let mut p = Pattern::from_pairs(&[0.0, 1.0], &[2.0, 3.0]).unwrap();
        p.metadata.insert("kernel".into(), "fresnel".into());
        let text = pattern_to_string(&p, None);
        assert!(text.starts_with("s_m,intensity\n0e0,2e0\n1e0,3e0\n# meta version = "));
        assert_eq!(parse_pattern(&text).unwrap(), p);
    }

    proptest! {
        #[test]
        fn pattern_round_trip(values in prop::collection::vec((-1e-3f64..1e-3, 0.0f64..1e30), 1..60)) {
            let mut values = values;
            values.sort_by(|a, b| a.0.total_cmp(&b.0));
            values.dedup_by(|a, b| a.0 == b.0);
            let s: Vec<f64> = values.iter().map(|v| v.0).collect();
            let i: Vec<f64> = values.iter().map(|v| v.1).collect();
            let p = Pattern::from_pairs(&s, &i).unwrap();
            let back = parse_pattern(&pattern_to_string(&p, None)).unwrap();
            prop_assert_eq!(back.samples, p.samples);
        }
    }
}
