//! Fixed-decimal output formatting. Percentages use 2 decimals and ratios 4,
//! both rounded half-up; [`Percent::apportion`] rounds a whole row so it
//! sums to exactly 100.

use std::fmt;

use serde::{Serialize, Serializer};

/// A percentage of two counts, rounded half-up to hundredths using exact
/// integer arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Percent {
    hundredths: u64,
}

impl Percent {
    /// `100 * num / den`; `None` when `den == 0`.
    pub fn of(num: u64, den: u64) -> Option<Percent> {
        if den == 0 {
            return None;
        }
        // round(10_000 * num / den) with ties up
        let n = 20_000u128 * num as u128 + den as u128;
        let hundredths = (n / (2 * den as u128)) as u64;
        Some(Percent { hundredths })
    }

    /// `100 * num / den`, or 0 when `den == 0`.
    pub fn of_or_zero(num: u64, den: u64) -> Percent {
        Self::of(num, den).unwrap_or(Percent { hundredths: 0 })
    }

    /// Shares of `counts` in hundredths that sum to exactly 100.00, by
    /// largest remainder: each share is its exact value floored, then the
    /// leftover hundredths go to the largest remainders (earlier index on
    /// ties). Every share is within 0.01 of its exact value. All zero when
    /// the counts sum to zero.
    pub fn apportion(counts: &[u64]) -> Vec<Percent> {
        let total: u128 = counts.iter().map(|&c| c as u128).sum();
        if total == 0 {
            return vec![Percent { hundredths: 0 }; counts.len()];
        }
        let mut shares: Vec<u64> = Vec::with_capacity(counts.len());
        let mut remainders: Vec<(u128, usize)> = Vec::with_capacity(counts.len());
        for (i, &c) in counts.iter().enumerate() {
            let scaled = 10_000 * c as u128;
            shares.push((scaled / total) as u64);
            remainders.push((scaled % total, i));
        }
        let leftover = 10_000 - shares.iter().sum::<u64>();
        remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, i) in remainders.iter().take(leftover as usize) {
            shares[i] += 1;
        }
        shares.into_iter().map(|hundredths| Percent { hundredths }).collect()
    }

    pub fn hundredths(self) -> u64 {
        self.hundredths
    }

    pub fn value(self) -> f64 {
        self.hundredths as f64 / 100.0
    }
}

impl fmt::Display for Percent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.hundredths / 100, self.hundredths % 100)
    }
}

impl Serialize for Percent {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Formats `x` with `decimals` fixed decimals, rounding half away from zero.
pub fn fixed(x: f64, decimals: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let scale = 10f64.powi(decimals as i32);
    let scaled = x * scale;
    let out = if (scaled.fract().abs() - 0.5).abs() == 0.0 {
        format!("{:.*}", decimals, (scaled + 0.5f64.copysign(scaled)) / scale)
    } else {
        format!("{:.*}", decimals, x)
    };
    if out.starts_with('-') && out[1..].bytes().all(|b| b == b'0' || b == b'.') {
        out[1..].to_owned()
    } else {
        out
    }
}

/// Two-decimal percentage text.
pub fn pct(x: f64) -> String {
    fixed(x, 2)
}

/// Four-decimal ratio text.
pub fn ratio(x: f64) -> String {
    fixed(x, 4)
}
