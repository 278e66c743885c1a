//! Report serialization: CSV and JSON writers with locale-free,
//! 17-significant-digit float formatting.

use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

/// 17 significant digits, '.' decimal separator, scientific notation.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Timestamp header line (the single line allowed to differ between
/// otherwise byte-identical runs).
pub fn timestamp_line(tool: &str) -> String {
    let t = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    format!("# {tool} generated at unix time {t}")
}

/// Assemble a CSV document: timestamp comment, header row, data rows.
pub fn csv_document(tool: &str, header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&timestamp_line(tool));
    out.push('\n');
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Write to the given path, or stdout when no path is set.
pub fn write_output(path: Option<&Path>, content: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, content),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(content.as_bytes())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_17_significant_digits() {
        let s = fmt_float(std::f64::consts::PI);
        assert_eq!(s, "3.1415926535897931e0");
        let back: f64 = s.parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn csv_has_timestamp_then_header() {
        let doc = csv_document("t", &["a", "b"], &[vec!["1".into(), "2".into()]]);
        let lines: Vec<&str> = doc.lines().collect();
        assert!(lines[0].starts_with("# t generated at unix time "));
        assert_eq!(lines[1], "a,b");
        assert_eq!(lines[2], "1,2");
    }
}
