use std::fmt::Write as _;

/// Exact header line of `metrics.csv`.
pub const METRICS_HEADER: &str =
    "step,loss_rec,loss_d,loss_g,loss_z,frechet,modes_covered,hq_fraction";

/// One evaluation row. `None` fields are written as empty CSV cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsRecord {
    pub step: u64,
    pub loss_rec: Option<f64>,
    pub loss_d: Option<f64>,
    pub loss_g: Option<f64>,
    pub loss_z: Option<f64>,
    pub frechet: Option<f64>,
    pub modes_covered: Option<usize>,
    pub hq_fraction: Option<f64>,
}

impl MetricsRecord {
    pub fn to_csv_row(&self) -> String {
        let f = |v: Option<f64>| v.map(format_sig9).unwrap_or_default();
        let mut row = String::new();
        write!(
            row,
            "{},{},{},{},{},{},{},{}",
            self.step,
            f(self.loss_rec),
            f(self.loss_d),
            f(self.loss_g),
            f(self.loss_z),
            f(self.frechet),
            self.modes_covered
                .map(|m| m.to_string())
                .unwrap_or_default(),
            f(self.hq_fraction),
        )
        .expect("write to String");
        row
    }

    /// Every present float field is finite.
    pub fn all_finite(&self) -> bool {
        [
            self.loss_rec,
            self.loss_d,
            self.loss_g,
            self.loss_z,
            self.frechet,
            self.hq_fraction,
        ]
        .iter()
        .flatten()
        .all(|v| v.is_finite())
    }
}

/// Renders the whole log: header plus one row per record.
pub fn metrics_csv(records: &[MetricsRecord]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.to_csv_row());
        out.push('\n');
    }
    out
}

/// Formats like C's `%.9g`: nine significant digits, trailing zeros dropped,
/// scientific notation outside `1e-4 ≤ |v| < 1e9`.
pub fn format_sig9(v: f64) -> String {
    const DIGITS: i32 = 9;
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp) as usize;
        strip_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
