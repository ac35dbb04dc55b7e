//! CSV input and output.
//!
//! A dataset is two files: `design.csv` (header of factor names, one row of
//! -1/+1 levels per run) and `responses.csv` (a header row, then one row of n
//! replicate responses per run, in the same run order).

use crate::data::ReplicatedData;
use crate::design::{Design, EffectSpec};
use crate::effects::HalfNormalPoints;
use crate::error::{Error, Result};
use crate::report::TestReport;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(r)
}

fn line_of(record: &csv::StringRecord) -> usize {
    record.position().map(|p| p.line() as usize).unwrap_or(0)
}

fn parse_level(field: &str, line: usize) -> Result<i8> {
    match field {
        "1" | "+1" | "+" => Ok(1),
        "-1" | "-" => Ok(-1),
        other => Err(Error::Parse {
            line,
            msg: format!("factor level {other:?} is not -1 or +1"),
        }),
    }
}

fn parse_real(field: &str, line: usize) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("{field:?} is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse { line, msg: format!("{field:?} is not finite") });
    }
    Ok(v)
}

pub fn parse_design<R: Read>(input: R, effects: EffectSpec) -> Result<Design> {
    let mut rdr = reader(input);
    let names: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut levels = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        levels.push(record.iter().map(|f| parse_level(f, line)).collect::<Result<Vec<i8>>>()?);
    }
    Design::from_factor_levels(&names, &levels, effects)
}

pub fn parse_responses<R: Read>(input: R) -> Result<ReplicatedData> {
    let mut rdr = reader(input);
    rdr.headers()?;
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        rows.push(record.iter().map(|f| parse_real(f, line)).collect::<Result<Vec<f64>>>()?);
    }
    ReplicatedData::from_rows(&rows)
}

pub fn read_design(path: &Path, effects: EffectSpec) -> Result<Design> {
    parse_design(open(path)?, effects)
}

pub fn read_responses(path: &Path) -> Result<ReplicatedData> {
    parse_responses(open(path)?)
}

/// Reads both files and checks that their run counts agree.
pub fn read_dataset(design: &Path, responses: &Path, effects: EffectSpec) -> Result<(Design, ReplicatedData)> {
    let d = read_design(design, effects)?;
    let data = read_responses(responses)?;
    if d.runs() != data.runs() {
        return Err(Error::Validation(format!(
            "{} has {} runs but {} has {}",
            design.display(),
            d.runs(),
            responses.display(),
            data.runs()
        )));
    }
    Ok((d, data))
}

/// One column of run variances s_i² (header required), used to supply MC
/// location weights without a full dataset.
pub fn parse_variances<R: Read>(input: R) -> Result<Vec<f64>> {
    let mut rdr = reader(input);
    rdr.headers()?;
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = line_of(&record);
        if record.len() != 1 {
            return Err(Error::Parse { line, msg: format!("expected one value per line, got {}", record.len()) });
        }
        out.push(parse_real(&record[0], line)?);
    }
    Ok(out)
}

pub fn read_variances(path: &Path) -> Result<Vec<f64>> {
    parse_variances(open(path)?)
}

fn level_str(v: i8) -> &'static str {
    if v > 0 {
        "1"
    } else {
        "-1"
    }
}

pub fn write_design<W: Write>(out: W, design: &Design) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(design.factor_names())?;
    for i in 0..design.runs() {
        w.write_record(design.factor_levels(i).iter().map(|&v| level_str(v)))?;
    }
    w.flush()?;
    Ok(())
}

/// Floats are written in Rust's shortest round-trip form, so a reread
/// dataset reproduces every value exactly.
pub fn write_responses<W: Write>(out: W, data: &ReplicatedData) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record((1..=data.replicates()).map(|j| format!("y{j}")))?;
    for row in data.rows() {
        w.write_record(row.iter().map(f64::to_string))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dataset(design_path: &Path, responses_path: &Path, design: &Design, data: &ReplicatedData) -> Result<()> {
    write_design(create(design_path)?, design)?;
    write_responses(create(responses_path)?, data)
}

pub fn write_report_csv<W: Write>(out: W, report: &TestReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["effect", "estimate", "statistic", "critical", "significant"])?;
    for r in &report.rows {
        w.write_record([
            r.effect.clone(),
            r.estimate.to_string(),
            r.statistic.to_string(),
            r.critical.to_string(),
            r.significant.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_halfnormal_csv<W: Write>(out: W, points: &HalfNormalPoints) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["effect", "abs_estimate", "quantile"])?;
    for p in &points.points {
        w.write_record([p.effect.clone(), p.abs_estimate.to_string(), p.quantile.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes to a file, or stdout when `path` is `None`.
pub fn with_output<F>(path: Option<&Path>, f: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    match path {
        Some(p) => {
            let mut file = create(p)?;
            f(&mut file)
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            f(&mut lock)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_round_trip() {
        let d = Design::full_factorial(&["A", "B", "C"], EffectSpec::Full).unwrap();
        let mut buf = Vec::new();
        write_design(&mut buf, &d).unwrap();
        let back = parse_design(buf.as_slice(), EffectSpec::Full).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn responses_round_trip_is_exact() {
        let rows = vec![vec![0.1, 1.0 / 3.0, -2.5e-17], vec![1e300, 2.0, 3.0]];
        let data = ReplicatedData::from_rows(&rows).unwrap();
        let mut buf = Vec::new();
        write_responses(&mut buf, &data).unwrap();
        assert_eq!(parse_responses(buf.as_slice()).unwrap(), data);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "A,B\n-1,-1\n1,0\n-1,1\n1,1\n";
        match parse_design(bad.as_bytes(), EffectSpec::Full) {
            Err(Error::Parse { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.contains('0'));
            }
            other => panic!("{other:?}"),
        }
        let bad = "y1,y2\n1,2\n3,x\n";
        assert!(matches!(parse_responses(bad.as_bytes()), Err(Error::Parse { line: 3, .. })));
        let ragged = "y1,y2\n1,2\n3\n";
        assert!(matches!(parse_responses(ragged.as_bytes()), Err(Error::Parse { line: 3, .. })));
    }

    #[test]
    fn comments_and_whitespace() {
        let text = "# levels\n A , B \n-1,-1\n +1,-1\n-1, 1\n1,1\n";
        let d = parse_design(text.as_bytes(), EffectSpec::Full).unwrap();
        assert_eq!(d.effect_names(), ["A", "B", "AB"]);
    }
}
