//! Deterministic text rendering: every float in text and CSV output is
//! printed with 12 significant digits. JSON output keeps exact values so
//! emitted artifacts re-read bit-identically.

/// 12 significant digits, fixed-point in the human range and scientific
/// outside it.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0.00000000000".to_owned();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-5..=11).contains(&mag) {
        return format!("{x:.11e}");
    }
    let decimals = (11 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

/// `key value` lines with aligned keys.
pub fn kv_block(rows: &[(&str, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (k, v) in rows {
        out.push_str(&format!("{k:width$}  {v}\n"));
    }
    out
}

pub fn support_inline(support: &[(usize, usize)]) -> String {
    if support.is_empty() {
        return "-".to_owned();
    }
    support
        .iter()
        .map(|(j, k)| format!("({j},{k})"))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Simple space-aligned table for text output.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let fmt_row = |cells: Vec<String>, widths: &[usize]| -> String {
        cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_owned()
    };
    out.push_str(&fmt_row(
        header.iter().map(|s| s.to_string()).collect(),
        &widths,
    ));
    out.push('\n');
    for row in rows {
        out.push_str(&fmt_row(row.clone(), &widths));
        out.push('\n');
    }
    out
}

pub fn csv_line(cells: &[String]) -> String {
    cells.join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig12_examples() {
        assert_eq!(sig12(3.0), "3.00000000000");
        assert_eq!(sig12(0.0), "0.00000000000");
        assert_eq!(sig12(-1.5), "-1.50000000000");
        assert_eq!(sig12(std::f64::consts::LN_2), "0.693147180560");
        assert_eq!(sig12(123456.789), "123456.789000");
        assert_eq!(sig12(1.0e-9), "1.00000000000e-9");
    }

    #[test]
    fn table_aligns_columns() {
        let t = table(
            &["h", "value"],
            &[vec!["1".into(), "2".into()], vec!["10".into(), "3".into()]],
        );
        assert_eq!(t, "h   value\n1   2\n10  3\n");
    }
}
