//! Historical spot observations.
//!
//! CSV layout: header `date,price`, ISO-8601 dates, one row per trading day.
//! Non-trading days are simply absent and are not interpolated.

use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;
use serde::Deserialize;

use crate::error::{Error, Result};

/// Default spacing for daily observations, in years.
pub const TRADING_DAYS_PER_YEAR: f64 = 252.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub timestamps: Vec<NaiveDate>,
    pub prices: Vec<f64>,
    /// Spacing between consecutive observations, in years.
    pub dt: f64,
}

#[derive(Debug, Deserialize)]
struct Row {
    date: NaiveDate,
    price: f64,
}

impl PriceSeries {
    pub const MIN_POINTS: usize = 3;

    pub fn new(timestamps: Vec<NaiveDate>, prices: Vec<f64>, dt: f64) -> Result<Self> {
        if timestamps.len() != prices.len() {
            return Err(Error::LengthMismatch(format!(
                "{} dates but {} prices",
                timestamps.len(),
                prices.len()
            )));
        }
        if prices.len() < Self::MIN_POINTS {
            return Err(Error::TooFewPoints {
                got: prices.len(),
                need: Self::MIN_POINTS,
            });
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        for (k, w) in timestamps.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::Series(format!(
                    "row {}: date {} does not follow {}",
                    k + 2,
                    w[1],
                    w[0]
                )));
            }
        }
        if let Some((k, p)) = prices.iter().enumerate().find(|(_, p)| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::Series(format!("row {}: price {p} is not positive", k + 1)));
        }
        Ok(PriceSeries { timestamps, prices, dt })
    }

    /// Parses `date,price` CSV. Row numbers in errors count data rows from 1.
    pub fn from_csv_reader<R: Read>(reader: R, dt: f64) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::Series(format!("header: {e}")))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["date", "price"] {
            return Err(Error::Series(format!(
                "expected header `date,price`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut timestamps = Vec::new();
        let mut prices = Vec::new();
        for (k, rec) in rdr.deserialize::<Row>().enumerate() {
            let row = rec.map_err(|e| Error::Series(format!("row {}: {e}", k + 1)))?;
            timestamps.push(row.date);
            prices.push(row.price);
        }
        Self::new(timestamps, prices, dt)
    }

    pub fn from_csv_path(path: &Path, dt: f64) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Series(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(file, dt)
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    /// Mean calendar spacing between observations, in years of 365.25 days.
    pub fn calendar_dt(&self) -> f64 {
        let first = self.timestamps[0];
        let last = self.timestamps[self.len() - 1];
        (last - first).num_days() as f64 / 365.25 / (self.len() - 1) as f64
    }
}
