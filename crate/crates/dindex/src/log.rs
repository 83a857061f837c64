//! One-line `key=value` records on standard error.

use std::fmt::Display;
use std::io::Write;

pub fn emit(level: &str, event: &str, fields: &[(&str, &dyn Display)]) {
    let mut line = format!("level={level} event={event}");
    for (k, v) in fields {
        let v = v.to_string();
        if v.is_empty() || v.contains(|c: char| c.is_whitespace() || c == '"' || c == '=') {
            line.push_str(&format!(" {k}={v:?}"));
        } else {
            line.push_str(&format!(" {k}={v}"));
        }
    }
    line.push('\n');
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
}

pub fn info(event: &str, fields: &[(&str, &dyn Display)]) {
    emit("info", event, fields);
}

pub fn warn(event: &str, fields: &[(&str, &dyn Display)]) {
    emit("warn", event, fields);
}

pub fn error(event: &str, fields: &[(&str, &dyn Display)]) {
    emit("error", event, fields);
}
