//! Item-wise accuracy tables: one row per model, one column per item plus
//! the average, percentages to one decimal.

use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::HarnessError;
use crate::eval::EvalResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Text,
    Markdown,
    Csv,
}

impl FromStr for TableFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(TableFormat::Text),
            "markdown" | "md" => Ok(TableFormat::Markdown),
            "csv" => Ok(TableFormat::Csv),
            other => Err(format!("unknown table format {other:?} (text, markdown, csv)")),
        }
    }
}

fn pct(v: f64) -> String {
    format!("{:.1}", v * 100.0)
}

pub fn render_table(r: &EvalResult, format: TableFormat, label: &str) -> String {
    let mut header = vec!["Model".to_string()];
    header.extend(r.items.iter().cloned());
    header.push("Average".into());
    let mut row = vec![label.to_string()];
    row.extend(r.items.iter().map(|id| r.per_item.get(id).map(|v| pct(*v)).unwrap_or_else(|| "-".into())));
    row.push(pct(r.macro_average));

    let mut out = String::new();
    match format {
        TableFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&header).expect("in-memory write");
            w.write_record(&row).expect("in-memory write");
            out = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input");
        }
        TableFormat::Markdown => {
            let _ = writeln!(out, "| {} |", header.join(" | "));
            let _ = writeln!(out, "|{}|", vec!["---"; header.len()].join("|"));
            let _ = writeln!(out, "| {} |", row.join(" | "));
        }
        TableFormat::Text => {
            let widths: Vec<usize> = header.iter().zip(&row).map(|(h, c)| h.len().max(c.len())).collect();
            let line = |cells: &[String]| {
                cells.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect::<Vec<_>>().join("  ")
            };
            let _ = writeln!(out, "{}", line(&header));
            let _ = writeln!(out, "{}", line(&row));
        }
    }
    out
}

/// Reads rows written by [`render_table`] in CSV form back into results.
/// The stored average is kept as is rather than recomputed.
pub fn parse_table_csv(doc: &str) -> Result<Vec<(String, EvalResult)>, HarnessError> {
    let mut rdr = csv::Reader::from_reader(doc.as_bytes());
    let header: Vec<String> =
        rdr.headers().map_err(|e| HarnessError::Table(e.to_string()))?.iter().map(str::to_string).collect();
    if header.len() < 2 || header.last().map(String::as_str) != Some("Average") {
        return Err(HarnessError::Table("header must be Model,<items>,Average".into()));
    }
    let items = &header[1..header.len() - 1];
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| HarnessError::Table(e.to_string()))?;
        let num = |s: &str| s.parse::<f64>().map(|v| v / 100.0).map_err(|e| HarnessError::Table(format!("{s:?}: {e}")));
        let mut acc = Vec::new();
        for (id, cell) in items.iter().zip(rec.iter().skip(1)) {
            if cell != "-" {
                acc.push((id.clone(), num(cell)?));
            }
        }
        let mut r = EvalResult::from_accuracies(acc);
        r.items = items.to_vec();
        r.macro_average = num(rec.get(header.len() - 1).unwrap_or_default())?;
        out.push((rec.get(0).unwrap_or_default().to_string(), r));
    }
    Ok(out)
}
