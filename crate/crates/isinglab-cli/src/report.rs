//! Byte-stable report emission: JSON with sorted keys, floats at 17 significant digits.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const VERSION: &str = concat!("isinglab ", env!("CARGO_PKG_VERSION"));

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn write_value(v: &Value, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_u64(), n.as_i64(), n.as_f64()) {
            (Some(u), _, _) => write!(out, "{u}").unwrap(),
            (None, Some(i), _) => write!(out, "{i}").unwrap(),
            (_, _, Some(f)) => out.push_str(&fmt_f64(f)),
            _ => out.push_str("null"),
        },
        Value::String(s) => out.push_str(&serde_json::to_string(s).unwrap()),
        Value::Array(a) => {
            out.push('[');
            for (k, x) in a.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                write_value(x, out);
            }
            out.push(']');
        }
        Value::Object(m) => {
            let mut keys: Vec<&String> = m.keys().collect();
            keys.sort();
            out.push('{');
            for (k, key) in keys.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                out.push_str(&serde_json::to_string(key).unwrap());
                out.push(':');
                write_value(&m[*key], out);
            }
            out.push('}');
        }
    }
}

/// Canonical JSON text of any serializable value.
pub fn canonical_json<T: Serialize>(v: &T) -> Result<String, String> {
    let value = serde_json::to_value(v).map_err(|e| e.to_string())?;
    let mut s = String::new();
    write_value(&value, &mut s);
    Ok(s)
}

pub fn config_hash<T: Serialize>(config: &T) -> Result<String, String> {
    let digest = Sha256::digest(canonical_json(config)?.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, R: Serialize> {
    version: &'static str,
    config_hash: String,
    config: &'a C,
    results: &'a R,
}

pub fn report_json<C: Serialize, R: Serialize>(config: &C, results: &R) -> Result<String, String> {
    let env = Envelope {
        version: VERSION,
        config_hash: config_hash(config)?,
        config,
        results,
    };
    let mut s = canonical_json(&env)?;
    s.push('\n');
    Ok(s)
}

/// A CSV table; rows are written as given, the header always.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Table {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).map_err(|e| e.to_string())?;
        for r in &self.rows {
            w.write_record(r).map_err(|e| e.to_string())?;
        }
        w.into_inner().map_err(|e| e.to_string())
    }
}

/// Writes artifacts into the output directory, creating it if needed.
pub struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>) -> Sink {
        Sink { dir }
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<(), String> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        std::fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        let path: PathBuf = Path::new(dir).join(name);
        std::fs::write(&path, bytes).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn json<C: Serialize, R: Serialize>(&self, name: &str, config: &C, results: &R) -> Result<(), String> {
        self.write(name, report_json(config, results)?.as_bytes())
    }

    pub fn csv(&self, name: &str, table: &Table) -> Result<(), String> {
        self.write(name, &table.to_bytes()?)
    }
}
