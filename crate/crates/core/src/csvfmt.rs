//! Shared CSV number formatting: `.` decimal, 17 significant digits.

pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn parse_row(line: &str) -> Result<Vec<f64>, String> {
    line.split(',')
        .map(|f| f.trim().parse::<f64>().map_err(|e| format!("`{f}`: {e}")))
        .collect()
}
