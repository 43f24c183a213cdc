//! Cloud price book and the closed-form cost formulas shared by all planners.
//!
//! Prices are kept in the units vendors publish them in (dollars per TB,
//! per hour, per 10k operations, per GB-month), each as an exact
//! micro-dollar amount. Conversions to per-byte / per-second happen inside
//! the formulas using 128-bit integer arithmetic, rounded to the nearest
//! micro-dollar once per term.

use serde::{Deserialize, Serialize};

use crate::money::{div_ceil_u128, div_round, Money};

pub const BYTES_PER_TB: u64 = 1_000_000_000_000;
pub const BYTES_PER_GB: u64 = 1_000_000_000;
pub const BYTES_PER_MIB: u64 = 1 << 20;
const OPS_PRICE_UNIT: i128 = 10_000;
const SECONDS_PER_HOUR: f64 = 3600.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CostError {
    #[error("per-byte price is zero; boundary undefined")]
    ZeroBytePrice,
    #[error("invalid price book: {0}")]
    InvalidPrices(String),
}

/// All per-unit prices for a source/destination backend pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceBook {
    /// Blob storage, per GB-month.
    pub blob_per_gb_month: Money,
    pub read_per_10k_ops: Money,
    pub write_per_10k_ops: Money,
    /// Pay-per-compute backend, per hour of compute.
    pub compute_per_hour: Money,
    /// Pay-per-byte backend, per TB scanned.
    pub scan_per_tb: Money,
    /// Moving data out of the source cloud, per TB.
    pub egress_per_tb: Money,
    /// Bytes covered by a single blob read or write operation.
    pub ops_chunk_bytes: u64,
    /// How long migrated data sits in blob storage, in months.
    pub storage_months: f64,
}

impl Default for PriceBook {
    /// BigQuery on-demand vs. a single ra3.xlplus Redshift node, with GCP
    /// blob storage and egress (February 2024 list prices).
    fn default() -> Self {
        PriceBook {
            blob_per_gb_month: Money::from_micros(23_000),
            read_per_10k_ops: Money::from_micros(4_000),
            write_per_10k_ops: Money::from_micros(50_000),
            compute_per_hour: Money::from_micros(1_086_000),
            scan_per_tb: Money::from_micros(6_250_000),
            egress_per_tb: Money::dollars(120),
            ops_chunk_bytes: 8 * BYTES_PER_MIB,
            storage_months: 1.0 / 30.0,
        }
    }
}

/// On-disk form of a [`PriceBook`], in human units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceBookDoc {
    pub p_blob_per_gb_month: f64,
    pub p_read_per_10k: f64,
    pub p_write_per_10k: f64,
    pub p_sec_per_hour: f64,
    pub p_byte_per_tb: f64,
    pub egress_per_tb: f64,
    pub ops_chunk_mib: f64,
    pub storage_months: f64,
}

impl PriceBook {
    pub fn validate(&self) -> Result<(), CostError> {
        let prices = [
            ("p_blob_per_gb_month", self.blob_per_gb_month),
            ("p_read_per_10k", self.read_per_10k_ops),
            ("p_write_per_10k", self.write_per_10k_ops),
            ("p_sec_per_hour", self.compute_per_hour),
            ("p_byte_per_tb", self.scan_per_tb),
            ("egress_per_tb", self.egress_per_tb),
        ];
        for (name, price) in prices {
            if price.is_negative() {
                return Err(CostError::InvalidPrices(format!("{name} is negative")));
            }
        }
        if self.ops_chunk_bytes == 0 {
            return Err(CostError::InvalidPrices("ops_chunk_mib must be > 0".into()));
        }
        if !self.storage_months.is_finite() || self.storage_months < 0.0 {
            return Err(CostError::InvalidPrices(
                "storage_months must be a finite value >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn from_doc(doc: &PriceBookDoc) -> Result<Self, CostError> {
        let money = |name: &str, v: f64| {
            if !v.is_finite() {
                return Err(CostError::InvalidPrices(format!("{name} is not finite")));
            }
            Ok(Money::from_dollars_f64(v))
        };
        if !doc.ops_chunk_mib.is_finite() || doc.ops_chunk_mib <= 0.0 {
            return Err(CostError::InvalidPrices("ops_chunk_mib must be > 0".into()));
        }
        let book = PriceBook {
            blob_per_gb_month: money("p_blob_per_gb_month", doc.p_blob_per_gb_month)?,
            read_per_10k_ops: money("p_read_per_10k", doc.p_read_per_10k)?,
            write_per_10k_ops: money("p_write_per_10k", doc.p_write_per_10k)?,
            compute_per_hour: money("p_sec_per_hour", doc.p_sec_per_hour)?,
            scan_per_tb: money("p_byte_per_tb", doc.p_byte_per_tb)?,
            egress_per_tb: money("egress_per_tb", doc.egress_per_tb)?,
            ops_chunk_bytes: (doc.ops_chunk_mib * BYTES_PER_MIB as f64).round() as u64,
            storage_months: doc.storage_months,
        };
        book.validate()?;
        Ok(book)
    }

    pub fn to_doc(&self) -> PriceBookDoc {
        PriceBookDoc {
            p_blob_per_gb_month: self.blob_per_gb_month.as_dollars_f64(),
            p_read_per_10k: self.read_per_10k_ops.as_dollars_f64(),
            p_write_per_10k: self.write_per_10k_ops.as_dollars_f64(),
            p_sec_per_hour: self.compute_per_hour.as_dollars_f64(),
            p_byte_per_tb: self.scan_per_tb.as_dollars_f64(),
            egress_per_tb: self.egress_per_tb.as_dollars_f64(),
            ops_chunk_mib: self.ops_chunk_bytes as f64 / BYTES_PER_MIB as f64,
            storage_months: self.storage_months,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CostError> {
        let doc: PriceBookDoc =
            serde_json::from_str(text).map_err(|e| CostError::InvalidPrices(e.to_string()))?;
        Self::from_doc(&doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_doc()).expect("price book serializes")
    }

    /// Per-byte price in dollars per byte.
    pub fn scan_price_per_byte(&self) -> f64 {
        self.scan_per_tb.as_dollars_f64() / BYTES_PER_TB as f64
    }

    /// Per-compute price in dollars per second.
    pub fn compute_price_per_second(&self) -> f64 {
        self.compute_per_hour.as_dollars_f64() / SECONDS_PER_HOUR
    }
}

/// Split of a plan's cost into the three buckets reported per plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub migration: Money,
    pub moved_queries: Money,
    pub remaining_queries: Money,
    pub total: Money,
}

impl CostBreakdown {
    pub fn new(migration: Money, moved_queries: Money, remaining_queries: Money) -> Self {
        CostBreakdown {
            migration,
            moved_queries,
            remaining_queries,
            total: migration + moved_queries + remaining_queries,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.total == self.migration + self.moved_queries + self.remaining_queries
    }
}

/// One-time cost of moving `table_size` bytes from the source to the
/// destination backend: egress, blob read + write operations (whole
/// operations, rounded up), and temporary blob storage.
pub fn migration_cost(table_size: u64, prices: &PriceBook) -> Money {
    if table_size == 0 {
        return Money::ZERO;
    }
    let size = table_size as i128;

    let egress = div_round(prices.egress_per_tb.micros() as i128 * size, BYTES_PER_TB as i128);

    let ops = div_ceil_u128(table_size as u128, prices.ops_chunk_bytes as u128) as i128;
    let per_10k = (prices.read_per_10k_ops + prices.write_per_10k_ops).micros() as i128;
    let blob_ops = div_round(ops * per_10k, OPS_PRICE_UNIT);

    let gb_month_micros =
        prices.blob_per_gb_month.micros() as f64 * table_size as f64 / BYTES_PER_GB as f64;
    let storage = (gb_month_micros * prices.storage_months).round() as i128;

    Money::from_micros((egress + blob_ops + storage) as i64)
}

/// Money saved by running a query in the destination instead of the source.
/// Positive means migrating the query pays.
pub fn query_savings(cost_dest: Money, cost_src: Money) -> Money {
    cost_src - cost_dest
}

/// Scan size at which a query running for `runtime_s` seconds costs the same
/// under both pricing models.
pub fn break_even_scan_bytes(runtime_s: f64, prices: &PriceBook) -> Result<f64, CostError> {
    if prices.scan_per_tb.micros() == 0 {
        return Err(CostError::ZeroBytePrice);
    }
    let per_second = prices.compute_per_hour.micros() as f64 / SECONDS_PER_HOUR;
    let per_byte = prices.scan_per_tb.micros() as f64 / BYTES_PER_TB as f64;
    Ok(per_second / per_byte * runtime_s)
}

pub fn per_byte_query_cost(bytes_scanned: u64, prices: &PriceBook) -> Money {
    let micros = div_round(
        prices.scan_per_tb.micros() as i128 * bytes_scanned as i128,
        BYTES_PER_TB as i128,
    );
    Money::from_micros(micros as i64)
}

pub fn per_compute_query_cost(runtime_s: f64, prices: &PriceBook) -> Money {
    let micros = prices.compute_per_hour.micros() as f64 * runtime_s / SECONDS_PER_HOUR;
    Money::from_micros(micros.round() as i64)
}
