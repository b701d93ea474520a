//! CSV layout. Values are written with 17 significant digits; an undefined
//! value is an empty field.

use std::fmt::Write as _;

use dce_core::statespace::ObservableRecord;

/// Columns ahead of the level and photon probabilities.
pub const LEAD_COLUMNS: [&str; 8] = [
    "t", "eps_t", "n_mean", "mandel_q", "x_var", "p_var", "purity", "norm_error",
];

pub fn format_value(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.16e}"),
        None => String::new(),
    }
}

#[derive(Debug, Clone, Default)]
pub struct Csv {
    text: String,
    width: usize,
}

impl Csv {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        let mut text = String::new();
        for (i, c) in columns.iter().enumerate() {
            if i > 0 {
                text.push(',');
            }
            text.push_str(c.as_ref());
        }
        text.push('\n');
        Self {
            text,
            width: columns.len(),
        }
    }

    pub fn row(&mut self, values: &[Option<f64>]) {
        assert_eq!(values.len(), self.width, "row width differs from header");
        for (i, v) in values.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            self.text.push_str(&format_value(*v));
        }
        self.text.push('\n');
    }

    /// Appends a `#` line after the data.
    pub fn comment(&mut self, line: &str) {
        let _ = writeln!(self.text, "# {line}");
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Header of a simulation table with `levels` detector levels and photon
/// numbers `0..=k_report`.
pub fn simulation_columns(levels: usize, k_report: usize) -> Vec<String> {
    LEAD_COLUMNS
        .iter()
        .map(|c| c.to_string())
        .chain((1..=levels).map(|j| format!("P_level_{j}")))
        .chain((0..=k_report).map(|k| format!("P_photon_{k}")))
        .collect()
}

pub fn simulation_row(rec: &ObservableRecord, epsilon: f64, k_report: usize) -> Vec<Option<f64>> {
    let mut row = vec![
        Some(rec.time),
        Some(epsilon * rec.time),
        Some(rec.n_mean),
        rec.mandel_q,
        Some(rec.x_var),
        Some(rec.p_var),
        Some(rec.purity),
        Some(rec.norm_error),
    ];
    row.extend(rec.level_probs.iter().map(|&p| Some(p)));
    row.extend(rec.photon_probs.iter().take(k_report + 1).map(|&p| Some(p)));
    row
}
