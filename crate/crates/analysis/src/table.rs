use std::path::Path;

use modal_core::error::{Error, Result};

/// Sampled magnitude envelope `(frequency Hz, magnitude)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub freqs: Vec<f64>,
    pub mags: Vec<f64>,
}

impl Envelope {
    pub fn new(freqs: Vec<f64>, mags: Vec<f64>) -> Result<Self> {
        if freqs.len() != mags.len() || freqs.is_empty() {
            return Err(Error::arg("an envelope needs matching, non-empty frequency and magnitude columns"));
        }
        if freqs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::arg("envelope frequencies must be strictly increasing"));
        }
        if mags.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::arg("envelope magnitudes must be finite and non-negative"));
        }
        Ok(Self { freqs, mags })
    }

    /// Two columns with a header row, e.g. `frequency_hz,magnitude`.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let (mut freqs, mut mags) = (Vec::new(), Vec::new());
        for record in reader.records() {
            let record = record.map_err(|e| csv_error(path, e))?;
            let field = |i: usize| -> Result<f64> {
                record
                    .get(i)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::arg(format!("{}: bad numeric field in row {:?}", path.display(), record)))
            };
            freqs.push(field(0)?);
            mags.push(field(1)?);
        }
        Self::new(freqs, mags)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("frequency_hz,magnitude\n");
        for (f, m) in self.freqs.iter().zip(&self.mags) {
            out.push_str(&format!("{f:e},{m:e}\n"));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::arg(format!("{}: {e}", path.display()))
    }
}
