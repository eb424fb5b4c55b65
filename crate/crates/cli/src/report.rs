//! Serialised forms of command results.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timings {
    pub total_us: u64,
    pub solver_us: u64,
    pub rounding_us: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Iterations {
    pub outer_stages: usize,
    pub inner_newton: usize,
}

/// `cert_ratio` is a number, or the string `"exact-fit"` when the relaxed
/// objective is within the solver accuracy of zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RatioField {
    Value(f64),
    Tag(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub algorithm: String,
    pub cost: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective_relaxation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cert_ratio: Option<RatioField>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub sqrt_d: f64,
    /// `k` columns, each of length `d`.
    pub basis: Vec<Vec<f64>>,
    /// Point on the fitted flat (only with `--affine`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<Vec<f64>>,
    /// Cost of the lifted subspace that the certificate refers to (only with
    /// `--affine`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifted_cost: Option<f64>,
    pub timings: Timings,
    pub iterations: Iterations,
}

/// One row of the benchmark CSV. Field order is the column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRecord {
    pub dataset: String,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    pub method: String,
    pub cost: f64,
    pub objective_relax: Option<f64>,
    pub cert_ratio: Option<String>,
    pub wall_micros: u64,
    pub outer_stages: Option<usize>,
    pub inner_newton: Option<usize>,
}

pub const BENCHMARK_COLUMNS: [&str; 11] = [
    "dataset",
    "n",
    "d",
    "k",
    "method",
    "cost",
    "objective_relax",
    "cert_ratio",
    "wall_micros",
    "outer_stages",
    "inner_newton",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub cost: f64,
    pub lower_bound: f64,
    pub argmin_basis: Vec<Vec<f64>>,
    pub method: String,
    pub resolution: usize,
    pub grid_error: f64,
}
