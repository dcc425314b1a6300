//! Comparison tables over several evaluation reports.

use super::{EvalReport, Metric};

/// Reports laid out as rows, metrics as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    pub labels: Vec<String>,
    /// `values[row][col]`, columns in [`Metric::ALL`] order.
    pub values: Vec<[f64; 6]>,
    /// `best[row][col]` marks the column maximum (ties all marked).
    pub best: Vec<[bool; 6]>,
}

/// Values are compared at the two decimals they are printed with.
fn rounded(v: f64) -> i64 {
    (v * 100.0).round() as i64
}

pub fn report_table(reports: &[EvalReport]) -> ReportTable {
    let values: Vec<[f64; 6]> = reports
        .iter()
        .map(|r| Metric::ALL.map(|m| r.value(m)))
        .collect();
    let mut best = vec![[false; 6]; values.len()];
    for col in 0..6 {
        if let Some(max) = values.iter().map(|row| rounded(row[col])).max() {
            for (row, flags) in values.iter().zip(&mut best) {
                flags[col] = rounded(row[col]) == max;
            }
        }
    }
    ReportTable {
        labels: reports.iter().map(|r| r.label.clone()).collect(),
        values,
        best,
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

impl ReportTable {
    /// Markdown-style text table; best values per column in `**bold**`.
    pub fn to_text(&self) -> String {
        let header: Vec<String> = std::iter::once("Model".to_owned())
            .chain(Metric::ALL.iter().map(|m| m.label().to_owned()))
            .collect();
        let rows: Vec<Vec<String>> = self
            .labels
            .iter()
            .zip(self.values.iter().zip(&self.best))
            .map(|(label, (vals, best))| {
                std::iter::once(label.clone())
                    .chain(vals.iter().zip(best).map(|(v, &b)| {
                        if b {
                            format!("**{v:.2}**")
                        } else {
                            format!("{v:.2}")
                        }
                    }))
                    .collect()
            })
            .collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|c| {
                rows.iter()
                    .map(|r| r[c].len())
                    .chain([header[c].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, &w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            format!("| {} |\n", padded.join(" | "))
        };
        let mut out = line(&header);
        let rule: Vec<String> = widths
            .iter()
            .enumerate()
            .map(|(i, &w)| if i == 0 { "-".repeat(w + 2) } else { format!("{}:", "-".repeat(w + 1)) })
            .collect();
        out.push_str(&format!("|{}|\n", rule.join("|")));
        for r in &rows {
            out.push_str(&line(r));
        }
        out
    }

    /// Machine-readable form: header row of metric keys, full-precision values.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label");
        for m in Metric::ALL {
            out.push(',');
            out.push_str(m.key());
        }
        out.push('\n');
        for (label, vals) in self.labels.iter().zip(&self.values) {
            out.push_str(&csv_field(label));
            for v in vals {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }

    /// One series per metric, `(row index, value)` points, for plotting metric
    /// against the run order (e.g. increasing amounts of real data).
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("metric,index,label,value\n");
        for (col, m) in Metric::ALL.iter().enumerate() {
            for (i, (label, vals)) in self.labels.iter().zip(&self.values).enumerate() {
                out.push_str(&format!("{},{i},{},{}\n", m.key(), csv_field(label), vals[col]));
            }
        }
        out
    }
}
