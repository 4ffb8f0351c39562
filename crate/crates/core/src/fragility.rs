//! Deck uplift (unseating) fragility.
//!
//! Failure probability is linear in maximum wave height and relative surge
//! elevation, `a + b * h_max + c * z_c`, clamped to `[0, 1]`. Coefficients
//! depend on the bridge's mean span mass per unit length.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Half-open mass band `(lo, hi]` in ton/m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassBand {
    pub lo: f64,
    pub hi: f64,
}

impl MassBand {
    pub fn contains(&self, mass: f64) -> bool {
        mass > self.lo && mass <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FragilityRow {
    pub band: MassBand,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl FragilityRow {
    /// Unclamped linear predictor.
    pub fn raw(&self, h_max: f64, z_c: f64) -> f64 {
        self.a + self.b * h_max + self.c * z_c
    }
}

const fn row(lo: f64, hi: f64, a: f64, b: f64, c: f64) -> FragilityRow {
    FragilityRow {
        band: MassBand { lo, hi },
        a,
        b,
        c,
    }
}

/// Uplift regression coefficients by mean span mass band (ton/m).
pub const DEFAULT_ROWS: [FragilityRow; 7] = [
    row(0.0, 5.0, 0.6468, 0.0406, -0.1376),
    row(5.0, 10.0, 0.4166, 0.0456, -0.2343),
    row(10.0, 15.0, 0.3291, 0.0546, -0.2464),
    row(15.0, 20.0, -0.3300, 0.0576, -0.2444),
    row(20.0, 25.0, 0.2843, 0.0512, -0.2421),
    row(25.0, 30.0, 0.2865, 0.0881, -0.2391),
    row(30.0, 35.0, -0.1870, 0.0782, -0.2618),
];

#[derive(Debug, Clone, PartialEq)]
pub struct FragilityTable {
    rows: Vec<FragilityRow>,
}

impl Default for FragilityTable {
    fn default() -> Self {
        Self {
            rows: DEFAULT_ROWS.to_vec(),
        }
    }
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    band_lo: f64,
    band_hi: f64,
    a: f64,
    b: f64,
    c: f64,
}

impl FragilityTable {
    /// Rows must be sorted, contiguous and non-empty.
    pub fn new(rows: Vec<FragilityRow>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("fragility table has no rows"));
        }
        for (i, r) in rows.iter().enumerate() {
            let finite = [r.band.lo, r.band.hi, r.a, r.b, r.c].iter().all(|v| v.is_finite());
            if !finite {
                return Err(Error::invalid(format!("fragility row {i} has non-finite values")));
            }
            if r.band.lo < 0.0 || r.band.lo >= r.band.hi {
                return Err(Error::invalid(format!(
                    "fragility row {i} has an empty or negative band ({}, {}]",
                    r.band.lo, r.band.hi
                )));
            }
            if i > 0 && rows[i - 1].band.hi != r.band.lo {
                return Err(Error::invalid(format!(
                    "fragility row {i} band starts at {} but previous band ends at {}",
                    r.band.lo,
                    rows[i - 1].band.hi
                )));
            }
        }
        Ok(Self { rows })
    }

    /// Reads a CSV with columns `band_lo,band_hi,a,b,c`.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut rows = Vec::new();
        for (i, rec) in rdr.deserialize::<CsvRow>().enumerate() {
            let r = rec.map_err(|e| Error::invalid(format!("fragility table row {}: {e}", i + 1)))?;
            rows.push(row(r.band_lo, r.band_hi, r.a, r.b, r.c));
        }
        Self::new(rows)
    }

    pub fn from_csv_path(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_reader(file)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("band_lo,band_hi,a,b,c\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{}\n", r.band.lo, r.band.hi, r.a, r.b, r.c));
        }
        out
    }

    pub fn rows(&self) -> &[FragilityRow] {
        &self.rows
    }

    pub fn domain(&self) -> MassBand {
        MassBand {
            lo: self.rows[0].band.lo,
            hi: self.rows[self.rows.len() - 1].band.hi,
        }
    }

    /// Row whose band contains `mass`; a boundary mass belongs to the lower
    /// band. Masses outside the table are rejected rather than extrapolated.
    pub fn coefficients_for(&self, mass_per_length: f64) -> Result<FragilityRow> {
        self.rows
            .iter()
            .find(|r| r.band.contains(mass_per_length))
            .copied()
            .ok_or(Error::UnsupportedBridge {
                bridge: None,
                mass: mass_per_length,
            })
    }

    /// Hex SHA-256 of the canonical CSV rendering.
    pub fn checksum(&self) -> String {
        hex::encode(Sha256::digest(self.to_csv_string().as_bytes()))
    }
}

pub fn uplift_probability(row: &FragilityRow, h_max: f64, z_c: f64) -> Result<f64> {
    if !h_max.is_finite() || h_max < 0.0 {
        return Err(Error::invalid(format!("maximum wave height must be finite and >= 0, got {h_max}")));
    }
    if !z_c.is_finite() {
        return Err(Error::invalid(format!("relative surge elevation must be finite, got {z_c}")));
    }
    Ok(row.raw(h_max, z_c).clamp(0.0, 1.0))
}
