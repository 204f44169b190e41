//! Entropy and normalized mutual information of (Ŷ, S).

use serde::Serialize;

use crate::error::{Error, Result};

/// Shannon entropy in nats, with `0·ln 0 = 0`.
pub fn entropy(dist: &[f64]) -> Result<f64> {
    if dist.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
        return Err(Error::validation("dist", "probabilities must be finite and nonnegative"));
    }
    let total: f64 = dist.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::validation("dist", format!("probabilities sum to {total}, not 1")));
    }
    Ok(dist.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.ln()).sum())
}

/// Joint counts `n[ŷ][s]` of predicted label and group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct JointCounts {
    pub n: [[u64; 2]; 2],
}

impl JointCounts {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u8, usize)>) -> Self {
        let mut n = [[0; 2]; 2];
        for (yhat, s) in pairs {
            n[yhat as usize][s] += 1;
        }
        JointCounts { n }
    }

    pub fn total(&self) -> u64 {
        self.n.iter().flatten().sum()
    }

    pub fn joint(&self) -> [[f64; 2]; 2] {
        let t = self.total() as f64;
        self.n.map(|row| row.map(|c| c as f64 / t))
    }

    pub fn prediction_marginal(&self) -> [f64; 2] {
        let j = self.joint();
        [j[0][0] + j[0][1], j[1][0] + j[1][1]]
    }

    pub fn group_marginal(&self) -> [f64; 2] {
        let j = self.joint();
        [j[0][0] + j[1][0], j[0][1] + j[1][1]]
    }

    pub fn transposed(&self) -> Self {
        let n = self.n;
        JointCounts {
            n: [[n[0][0], n[1][0]], [n[0][1], n[1][1]]],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nmi {
    pub value: f64,
    /// Set when a margin has zero entropy and the value was defined as 0.
    pub degenerate: bool,
}

/// `MI(Ŷ; S) / √(H(Ŷ)·H(S))`, or 0 (flagged) when either entropy is 0.
pub fn nmi_from_counts(counts: &JointCounts) -> Result<Nmi> {
    if counts.total() == 0 {
        return Err(Error::validation("data", "no records"));
    }
    let joint = counts.joint();
    let py = counts.prediction_marginal();
    let ps = counts.group_marginal();
    let hy = entropy(&py)?;
    let hs = entropy(&ps)?;
    if hy == 0.0 || hs == 0.0 {
        return Ok(Nmi {
            value: 0.0,
            degenerate: true,
        });
    }
    let mut mi = 0.0;
    for (y, row) in joint.iter().enumerate() {
        for (s, &p) in row.iter().enumerate() {
            if p > 0.0 {
                mi += p * (p / (py[y] * ps[s])).ln();
            }
        }
    }
    // Rounding can leave MI a hair below 0 or the ratio a hair above 1.
    let value = (mi / (hy * hs).sqrt()).clamp(0.0, 1.0);
    Ok(Nmi {
        value,
        degenerate: false,
    })
}
