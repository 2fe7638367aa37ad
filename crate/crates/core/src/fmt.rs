//! Fixed-significant-digit number formatting for diff-stable outputs.

/// Format `x` with `sig` significant digits in plain decimal notation.
///
/// Used for every numeric field the tool prints or writes to CSV, so that
/// repeated runs produce byte-identical files.
pub fn format_sig(x: f64, sig: u32) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = sig as i32 - 1 - magnitude;
    if decimals >= 0 {
        format!("{:.*}", decimals as usize, x)
    } else {
        let scale = 10f64.powi(-decimals);
        format!("{:.0}", (x / scale).round() * scale)
    }
}

/// Six significant digits: the tool-wide output precision.
pub fn sig6(x: f64) -> String {
    format_sig(x, 6)
}
