//! CSV and JSON rendering of results.
//!
//! CSV files carry a header row and LF line endings; reals are printed with
//! nine significant digits in the style of C's `%.9g`.

use serde::Serialize;

use crate::chipmodel::ChipSettings;
use crate::error::{Error, Result};
use crate::protocol::{SessionReport, TomographyMatrix, CELL_LABELS};
use crate::qstate::{Basis, MubSet};
use crate::security::{KeyRateCurve, MutualInfoRow, ThresholdTable};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// `%.9g` formatting: fixed notation for exponents in `[-4, 9)`, scientific
/// otherwise, trailing zeros removed.
pub fn fmt_g9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.into();
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs());
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_g9).unwrap_or_default()
}

/// Builds a CSV document from a header and rows of already formatted cells.
pub fn csv_document<I>(header: &[&str], rows: I) -> Result<String>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

pub fn json_document<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn mubs(set: &MubSet, format: Format) -> Result<String> {
    match format {
        Format::Json => json_document(&set.to_nested()),
        Format::Csv => {
            let mut rows = Vec::new();
            for b in Basis::ALL {
                for (i, psi) in set.basis(b).states.iter().enumerate() {
                    for (core, [re, im]) in psi.to_pairs().into_iter().enumerate() {
                        rows.push(vec![
                            b.to_string(),
                            i.to_string(),
                            core.to_string(),
                            fmt_g9(re),
                            fmt_g9(im),
                        ]);
                    }
                }
            }
            csv_document(&["basis", "index", "core", "re", "im"], rows)
        }
    }
}

pub fn thresholds(table: &ThresholdTable, format: Format) -> Result<String> {
    match format {
        Format::Json => json_document(&table.rows),
        Format::Csv => csv_document(
            &["n", "d2_individual", "dn1_individual", "d_coherent"],
            table.rows.iter().map(|r| {
                vec![
                    r.n.to_string(),
                    fmt_g9(r.d2_individual),
                    fmt_g9(r.dn1_individual),
                    fmt_g9(r.d_coherent),
                ]
            }),
        ),
    }
}

pub fn key_rate(curve: &KeyRateCurve, format: Format) -> Result<String> {
    match format {
        Format::Json => json_document(curve),
        Format::Csv => csv_document(
            &["distance_km", "rate_bits_per_pulse"],
            curve
                .points
                .iter()
                .map(|p| vec![fmt_g9(p.distance_km), fmt_g9(p.rate_bits_per_pulse)]),
        ),
    }
}

pub fn mutual_info(rows: &[MutualInfoRow], format: Format) -> Result<String> {
    match format {
        Format::Json => json_document(rows),
        Format::Csv => csv_document(
            &["n", "disturbance", "i_ab", "i_ae"],
            rows.iter().map(|r| {
                vec![
                    r.n.to_string(),
                    fmt_g9(r.disturbance),
                    fmt_g9(r.i_ab),
                    fmt_g9(r.i_ae),
                ]
            }),
        ),
    }
}

pub fn session(report: &SessionReport, format: Format) -> Result<String> {
    match format {
        Format::Json => json_document(report),
        Format::Csv => csv_document(
            &["time_s", "qber", "sifted_count", "intensity_class"],
            report.bins.iter().map(|b| {
                vec![
                    fmt_g9(b.time_s),
                    opt(b.qber),
                    b.sifted_count.to_string(),
                    b.intensity_class.as_str().to_string(),
                ]
            }),
        ),
    }
}

#[derive(Serialize)]
struct TomographyJson<'a> {
    labels: [&'static str; 12],
    entries: &'a [[f64; 12]; 12],
    pulses: &'a [[u64; 3]; 12],
}

pub fn tomography(m: &TomographyMatrix, format: Format) -> Result<String> {
    match format {
        Format::Json => json_document(&TomographyJson {
            labels: CELL_LABELS,
            entries: &m.entries,
            pulses: &m.pulses,
        }),
        Format::Csv => {
            let mut header = vec!["label"];
            header.extend(CELL_LABELS);
            csv_document(
                &header,
                m.entries.iter().zip(CELL_LABELS).map(|(row, label)| {
                    std::iter::once(label.to_string())
                        .chain(row.iter().map(|&v| fmt_g9(v)))
                        .collect()
                }),
            )
        }
    }
}

/// Solved chip settings plus one quality figure named `metric`.
pub fn settings(s: &ChipSettings, metric: &str, value: f64, format: Format) -> Result<String> {
    match format {
        Format::Json => {
            let mut doc = serde_json::Map::new();
            doc.insert(
                "settings".into(),
                serde_json::to_value(s).map_err(|e| Error::Io(e.to_string()))?,
            );
            doc.insert(metric.into(), value.into());
            json_document(&doc)
        }
        Format::Csv => csv_document(
            &["element", "value"],
            s.0.iter()
                .map(|(id, v)| vec![id.clone(), fmt_g9(*v)])
                .chain(std::iter::once(vec![metric.to_string(), fmt_g9(value)])),
        ),
    }
}
