//! Power spectral densities, band sets and the shared spectral quadrature.

mod bandset;
mod psd;

use std::path::Path;

pub use bandset::BandSet;
pub use psd::{ou_band_power, ou_tail_mass, Cell, GridOptions, Lobe, Psd, PsdKind};

use crate::error::{AdxError, Result};
use crate::scalar::Real;

/// Header line of the piecewise PSD text format.
pub const PIECEWISE_HEADER: &str = "psd-piecewise v1";

/// Parses the piecewise PSD text format: the header line, then one
/// `<f_Hz> <density>` pair per line for `f >= 0`, strictly increasing.
/// Blank lines and `#` comments are ignored.
pub fn parse_piecewise<T: Real>(text: &str) -> Result<PsdKind<T>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    match lines.next() {
        Some((_, PIECEWISE_HEADER)) => {}
        Some((n, other)) => {
            return Err(AdxError::Parse(format!(
                "line {n}: expected header `{PIECEWISE_HEADER}`, found `{other}`"
            )))
        }
        None => return Err(AdxError::Parse("empty piecewise PSD file".into())),
    }
    let mut points = Vec::new();
    for (n, line) in lines {
        let mut fields = line.split_whitespace();
        let mut next_number = |what: &str| -> Result<T> {
            let tok = fields
                .next()
                .ok_or_else(|| AdxError::Parse(format!("line {n}: missing {what}")))?;
            tok.parse::<f64>()
                .map(T::lit)
                .map_err(|_| AdxError::Parse(format!("line {n}: `{tok}` is not a number")))
        };
        let f = next_number("frequency")?;
        let d = next_number("density")?;
        if fields.next().is_some() {
            return Err(AdxError::Parse(format!("line {n}: expected two columns")));
        }
        points.push((f, d));
    }
    let kind = PsdKind::PiecewiseLinear { points };
    // surface ordering and sign errors at load time
    Psd::new(kind.clone())?;
    Ok(kind)
}

pub fn load_piecewise<T: Real>(path: &Path) -> Result<PsdKind<T>> {
    let text = std::fs::read_to_string(path)?;
    parse_piecewise(&text)
}

/// Writes `points` in the piecewise PSD text format.
pub fn format_piecewise<T: Real>(points: &[(T, T)]) -> String {
    let mut out = String::from(PIECEWISE_HEADER);
    out.push('\n');
    for (f, d) in points {
        out.push_str(&format!("{f} {d}\n"));
    }
    out
}
