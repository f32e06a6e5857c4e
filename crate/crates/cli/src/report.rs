//! Report emission: a small JSON writer with a fixed field order and a fixed
//! number format, so identical inputs and flags produce identical bytes.
//! Floats are printed with 17 significant digits, enough to round-trip f64
//! exactly.

use std::io::Write;

use sha2::{Digest, Sha256};

use cvwit_core::symplectic::Mat;

pub fn digest(bytes: &[u8]) -> String {
    format!("sha256:{:x}", Sha256::digest(bytes))
}

pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "null".into()
    }
}

/// JSON value tree with insertion-ordered objects.
pub enum Json {
    Null,
    Bool(bool),
    Int(u64),
    Float(f64),
    Str(String),
    Array(Vec<Json>),
    Object(Vec<(&'static str, Json)>),
}

impl Json {
    pub fn matrix(m: &Mat) -> Json {
        Json::Array(
            (0..m.nrows())
                .map(|i| Json::Array((0..m.ncols()).map(|j| Json::Float(m[(i, j)])).collect()))
                .collect(),
        )
    }

    fn write_into(&self, out: &mut String, indent: usize) {
        match self {
            Json::Null => out.push_str("null"),
            Json::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Json::Int(v) => out.push_str(&v.to_string()),
            Json::Float(v) => out.push_str(&fmt_f64(*v)),
            Json::Str(s) => {
                out.push('"');
                for ch in s.chars() {
                    match ch {
                        '"' => out.push_str("\\\""),
                        '\\' => out.push_str("\\\\"),
                        c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
                        c => out.push(c),
                    }
                }
                out.push('"');
            }
            Json::Array(items) => {
                if items.is_empty() {
                    out.push_str("[]");
                    return;
                }
                // matrices print one row per line; scalar arrays inline
                let nested = items.iter().any(|i| matches!(i, Json::Array(_) | Json::Object(_)));
                out.push('[');
                for (k, item) in items.iter().enumerate() {
                    if k > 0 {
                        out.push(',');
                    }
                    if nested {
                        out.push('\n');
                        out.push_str(&" ".repeat(indent + 2));
                    } else if k > 0 {
                        out.push(' ');
                    }
                    item.write_into(out, indent + 2);
                }
                if nested {
                    out.push('\n');
                    out.push_str(&" ".repeat(indent));
                }
                out.push(']');
            }
            Json::Object(fields) => {
                if fields.is_empty() {
                    out.push_str("{}");
                    return;
                }
                out.push('{');
                for (k, (key, value)) in fields.iter().enumerate() {
                    if k > 0 {
                        out.push(',');
                    }
                    out.push('\n');
                    out.push_str(&" ".repeat(indent + 2));
                    out.push('"');
                    out.push_str(key);
                    out.push_str("\": ");
                    value.write_into(out, indent + 2);
                }
                out.push('\n');
                out.push_str(&" ".repeat(indent));
                out.push('}');
            }
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        self.write_into(&mut out, 0);
        out.push('\n');
        out
    }
}

/// Writes to `--output` atomically (temp file + rename), or to stdout.
pub fn emit(output: Option<&str>, content: &str) -> std::io::Result<()> {
    match output {
        None => {
            std::io::stdout().write_all(content.as_bytes())?;
            Ok(())
        }
        Some(path) => {
            let tmp = format!("{path}.tmp-{}", std::process::id());
            std::fs::write(&tmp, content)?;
            std::fs::rename(&tmp, path).inspect_err(|_| {
                let _ = std::fs::remove_file(&tmp);
            })
        }
    }
}
