//! Number formatting shared by every CSV the crate writes.

/// Round-trip decimal form of `x` with 17 significant digits.
///
/// Exact zeros (of either sign) are written as the literal `0.0` so sparse
/// estimates can be counted by a plain text scan.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        "0.0".to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn parse_f64(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok()
}
