//! Histogram binning of training features.
//!
//! Each feature gets an ascending list of cut points. A value's bin is the number of cuts
//! `<= value`, so `value < cuts[k]` holds exactly when `bin <= k`. Missing values get
//! [`MISSING_BIN`].

use crate::matrix::{is_missing, Matrix};

pub const MISSING_BIN: u16 = u16::MAX;

#[derive(Debug, Clone)]
pub struct BinnedMatrix {
    pub cuts: Vec<Vec<f64>>,
    /// Column-major bin codes: `bins[feature][row]`.
    pub bins: Vec<Vec<u16>>,
    pub has_missing: Vec<bool>,
}

impl BinnedMatrix {
    pub fn n_bins(&self, feature: usize) -> usize {
        self.cuts[feature].len() + 1
    }

    pub fn build(x: &Matrix, max_bins: usize) -> Self {
        let max_bins = max_bins.clamp(2, MISSING_BIN as usize - 1);
        let mut cuts = Vec::with_capacity(x.n_cols());
        let mut bins = Vec::with_capacity(x.n_cols());
        let mut has_missing = Vec::with_capacity(x.n_cols());
        for j in 0..x.n_cols() {
            let col = x.column(j);
            let c = feature_cuts(&col, max_bins);
            bins.push(col.iter().map(|&v| bin_of(&c, v)).collect());
            has_missing.push(col.iter().any(|v| is_missing(*v)));
            cuts.push(c);
        }
        Self { cuts, bins, has_missing }
    }
}

#[inline]
pub fn bin_of(cuts: &[f64], v: f64) -> u16 {
    if is_missing(v) {
        MISSING_BIN
    } else {
        cuts.partition_point(|c| *c <= v) as u16
    }
}

/// Midpoints between distinct values when they fit in `max_bins`, else quantile boundaries.
pub fn feature_cuts(values: &[f64], max_bins: usize) -> Vec<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !is_missing(*x)).collect();
    if v.is_empty() {
        return Vec::new();
    }
    v.sort_by(f64::total_cmp);
    let mut distinct = v.clone();
    distinct.dedup();
    if distinct.len() <= max_bins {
        return distinct.windows(2).map(|w| midpoint(w[0], w[1])).collect();
    }
    let n = v.len();
    let mut cuts: Vec<f64> = Vec::with_capacity(max_bins - 1);
    for k in 1..max_bins {
        let hi = v[k * n / max_bins];
        // Largest distinct value strictly below `hi`.
        let pos = distinct.partition_point(|d| *d < hi);
        if pos == 0 {
            continue;
        }
        let c = midpoint(distinct[pos - 1], hi);
        if cuts.last().is_none_or(|last| c > *last) {
            cuts.push(c);
        }
    }
    cuts
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    // Guard against rounding onto `a` for adjacent floats.
    if m > a {
        m
    } else {
        b
    }
}
