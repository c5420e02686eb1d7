//! Locale-independent number formatting for emitted files.

use nalgebra::DMatrix;

/// `x` with 12 significant digits, `%.12g` style.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.11e}", x);
    let (mantissa, exponent) = sci.split_once('e').expect("scientific notation");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if (-4..12).contains(&exponent) {
        let decimals = (11 - exponent).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exponent)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// `x` rounded to 12 significant digits, for JSON emission.
pub fn round12(x: f64) -> f64 {
    sig12(x).parse().unwrap_or(x)
}

/// Row-major CSV, one matrix row per line.
pub fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for r in 0..m.nrows() {
        let row: Vec<String> = m.row(r).iter().map(|&x| sig12(x)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
