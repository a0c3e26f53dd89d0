use std::path::Path;

use crate::error::Result;
use crate::eval::MetricRow;

pub const METRICS_HEADER: [&str; 8] = ["dataset", "task", "model", "K", "fold", "repeat", "metric", "value"];

/// Renders `x` with 6 significant digits in the style of C's `%g`: fixed
/// notation for decimal exponents in `[-5, 6)`, scientific otherwise, with
/// trailing zeros removed.
pub fn format_sig6(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp) as usize;
        trim_fraction(&format!("{x:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_fraction(mantissa), exp.abs())
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_metrics_csv(rows: &[MetricRow], path: impl AsRef<Path>) -> Result<()> {
    let mut out = csv::Writer::from_path(path)?;
    out.write_record(METRICS_HEADER)?;
    for r in rows {
        out.write_record([
            r.dataset.as_str(),
            r.task.as_str(),
            r.model.as_str(),
            &r.k.to_string(),
            &r.fold.to_string(),
            &r.repeat.to_string(),
            r.metric.as_str(),
            &format_sig6(r.value),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// `(N, seconds_per_sweep)` rows of a scaling benchmark.
pub fn write_scaling_csv(rows: &[(usize, f64)], path: impl AsRef<Path>) -> Result<()> {
    let mut out = csv::Writer::from_path(path)?;
    out.write_record(["N", "seconds_per_sweep"])?;
    for (n, secs) in rows {
        out.write_record([n.to_string(), format_sig6(*secs)])?;
    }
    out.flush()?;
    Ok(())
}
