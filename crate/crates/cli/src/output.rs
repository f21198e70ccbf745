use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::spec::{ExperimentSpec, Format};
use crate::CliError;

/// Everything written to the output file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub spec: ExperimentSpec,
    pub version: String,
    pub columns: Vec<String>,
    /// One row per record, aligned with `columns`.
    pub records: Vec<Vec<Value>>,
}

/// Header line of a JSON-lines file.
#[derive(Serialize, Deserialize)]
struct Meta {
    spec: ExperimentSpec,
    version: String,
    columns: Vec<String>,
}

/// Version string of the form `v<crate version>-g<commit>`.
pub fn version_string() -> String {
    format!("v{}-g{}", env!("CARGO_PKG_VERSION"), env!("SPIDERWALK_GIT_REV"))
}

fn csv_field(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) if n.is_f64() => format!("{:.16e}", n.as_f64().unwrap()),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write_csv<W: Write>(out: &ExperimentOutput, w: W) -> Result<(), csv::Error> {
    let mut wtr = csv::Writer::from_writer(w);
    let spec_json = serde_json::to_string(&out.spec).expect("spec serializes");
    let meta = ["kind", "spec", "seed", "version"];
    wtr.write_record(meta.iter().copied().chain(out.columns.iter().map(String::as_str)))?;
    for row in &out.records {
        let mut fields = vec![
            out.spec.kind.name().to_string(),
            spec_json.clone(),
            out.spec.seed.to_string(),
            out.version.clone(),
        ];
        fields.extend(row.iter().map(csv_field));
        wtr.write_record(&fields)?;
    }
    wtr.flush()?;
    Ok(())
}

fn write_json_lines<W: Write>(out: &ExperimentOutput, mut w: W) -> std::io::Result<()> {
    let meta = Meta {
        spec: out.spec.clone(),
        version: out.version.clone(),
        columns: out.columns.clone(),
    };
    writeln!(w, "{}", serde_json::to_string(&meta).expect("meta serializes"))?;
    for row in &out.records {
        let obj: Map<String, Value> = out.columns.iter().cloned().zip(row.iter().cloned()).collect();
        writeln!(w, "{}", Value::Object(obj))?;
    }
    w.flush()
}

/// Writes `out` to `path` in the given format.
pub fn emit(out: &ExperimentOutput, format: Format, path: &Path) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let w = BufWriter::new(file);
    match format {
        Format::Csv => write_csv(out, w).map_err(|e| io_err(path, e)),
        Format::JsonLines => write_json_lines(out, w).map_err(|e| io_err(path, e)),
    }
}

/// Writes `out` to any writer, e.g. standard output.
pub fn emit_to<W: Write>(out: &ExperimentOutput, format: Format, w: W) -> Result<(), CliError> {
    match format {
        Format::Csv => write_csv(out, w).map_err(|e| CliError::Io(e.to_string())),
        Format::JsonLines => write_json_lines(out, w).map_err(|e| CliError::Io(e.to_string())),
    }
}

/// Reads back a JSON-lines file written by [`emit`].
pub fn parse_json_lines(path: &Path) -> Result<ExperimentOutput, CliError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let first = lines
        .next()
        .ok_or_else(|| io_err(path, "empty file"))?
        .map_err(|e| io_err(path, e))?;
    let meta: Meta = serde_json::from_str(&first).map_err(|e| io_err(path, e))?;
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        let obj: Map<String, Value> = serde_json::from_str(&line).map_err(|e| io_err(path, e))?;
        let row = meta
            .columns
            .iter()
            .map(|c| {
                obj.get(c)
                    .cloned()
                    .ok_or_else(|| io_err(path, format!("record {i} lacks {c}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        records.push(row);
    }
    Ok(ExperimentOutput {
        spec: meta.spec,
        version: meta.version,
        columns: meta.columns,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::Kind;
    use serde_json::json;

    fn sample(records: Vec<Vec<Value>>) -> ExperimentOutput {
        ExperimentOutput {
            spec: ExperimentSpec::new(Kind::Coupon, 7, 3).resolve().unwrap(),
            version: version_string(),
            columns: vec!["name".into(), "value".into(), "count".into()],
            records,
        }
    }

    #[test]
    fn csv_floats_carry_seventeen_digits() {
        assert_eq!(csv_field(&json!(0.1)), "1.0000000000000001e-1");
        assert_eq!(csv_field(&json!(1.0 / 3.0)), "3.3333333333333331e-1");
        assert_eq!(csv_field(&json!(12)), "12");
        let parsed: f64 = csv_field(&json!(std::f64::consts::PI)).parse().unwrap();
        assert_eq!(parsed, std::f64::consts::PI);
    }

    #[test]
    fn csv_quotes_embedded_commas() {
        let out = sample(vec![vec![json!("a,\"b\""), json!(1.5), json!(2)]]);
        let mut buf = Vec::new();
        write_csv(&out, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("\"a,\"\"b\"\"\""));
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let rec = rdr.records().next().unwrap().unwrap();
        assert_eq!(&rec[4], "a,\"b\"");
    }

    #[test]
    fn empty_result_gives_header_only_csv() {
        let mut buf = Vec::new();
        write_csv(&sample(vec![]), &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "kind,spec,seed,version,name,value,count\n"
        );
    }

    #[test]
    fn version_looks_like_git_describe() {
        let v = version_string();
        assert!(v.starts_with('v') && v.contains("-g"), "{v}");
    }
}
