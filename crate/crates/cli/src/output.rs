//! Report emission: a CSV body plus a JSON summary carrying the resolved config.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;

use serde_json::Value;

use crate::Failure;

/// CSV floats carry 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Report {
    pub name: &'static str,
    pub csv: String,
    pub summary: Value,
    /// Additional files written only with an output directory.
    pub extras: Vec<(String, String)>,
}

impl Report {
    pub fn new(name: &'static str, csv: String, summary: Value) -> Self {
        Self { name, csv, summary, extras: Vec::new() }
    }

    pub fn emit(&self, dir: Option<&PathBuf>) -> Result<(), Failure> {
        let summary = serde_json::to_string_pretty(&self.summary).map_err(|e| Failure::Io(e.to_string()))? + "\n";
        match dir {
            Some(dir) => {
                std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
                let write = |file: &str, body: &str| {
                    let path = dir.join(file);
                    std::fs::write(&path, body).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
                };
                write(&format!("{}.csv", self.name), &self.csv)?;
                write(&format!("{}.json", self.name), &summary)?;
                for (file, body) in &self.extras {
                    write(file, body)?;
                }
                print!("{summary}");
            }
            None => {
                print!("{}", self.csv);
                let _ = std::io::stdout().flush();
                eprint!("{summary}");
            }
        }
        Ok(())
    }
}

/// Long-format `quantity,value` rows for every scalar leaf of a JSON document.
pub fn flatten_scalars(value: &Value) -> String {
    fn walk(prefix: &str, v: &Value, out: &mut String) {
        match v {
            Value::Object(map) => {
                for (k, v) in map {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&key, v, out);
                }
            }
            Value::Array(items) => {
                for (i, v) in items.iter().enumerate() {
                    walk(&format!("{prefix}.{i}"), v, out);
                }
            }
            Value::Number(n) => {
                let text = match (n.as_u64(), n.as_i64(), n.as_f64()) {
                    (Some(u), _, _) => u.to_string(),
                    (_, Some(i), _) => i.to_string(),
                    (_, _, Some(f)) => num(f),
                    _ => n.to_string(),
                };
                let _ = writeln!(out, "{prefix},{text}");
            }
            Value::Bool(b) => {
                let _ = writeln!(out, "{prefix},{b}");
            }
            Value::String(_) | Value::Null => {}
        }
    }
    let mut out = String::from("quantity,value\n");
    walk("", value, &mut out);
    out
}
