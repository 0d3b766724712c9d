//! Product kernel density estimation over encoded vectors.
//!
//! Numeric axes use a Gaussian kernel with Scott bandwidth
//! h = max(1e−3, n^(−1/(d+4))·σ̂); categorical axes use the Aitchison-Aitken
//! kernel with λ = 1 − n^(−1/(d+4))·(1 − 1/L), which interpolates between
//! uniform (n = 1) and a point mass (n → ∞). Inactive sentinels participate:
//! on a categorical axis the sentinel acts as one extra level; on a numeric
//! axis the kernel is evaluated at distance 1 against active values and
//! distance 0 against another sentinel.

use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::space::AxisInfo;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

#[derive(Debug, Clone)]
pub enum KdeAxis {
    Numeric { h: f64 },
    Categorical { levels: usize, lambda: f64, has_sentinel: bool },
}

#[derive(Debug, Clone)]
pub struct ProductKde {
    axes: Vec<KdeAxis>,
    rows: Vec<Vec<f64>>,
}

fn is_sentinel(v: f64) -> bool {
    v < -0.5
}

impl ProductKde {
    /// Fits per-axis bandwidths from `rows` (encoded vectors, one column per
    /// entry of `info`).
    pub fn fit(info: &[AxisInfo], rows: Vec<Vec<f64>>) -> ProductKde {
        assert!(!rows.is_empty(), "KDE needs at least one row");
        let n = rows.len() as f64;
        let d = info.len() as f64;
        let scott = n.powf(-1.0 / (d + 4.0));
        let axes = info
            .iter()
            .enumerate()
            .map(|(j, ax)| {
                let has_sentinel = rows.iter().any(|r| is_sentinel(r[j]));
                if ax.categorical {
                    let l_eff = ax.levels + has_sentinel as usize;
                    let lambda = 1.0 - scott * (1.0 - 1.0 / l_eff as f64);
                    KdeAxis::Categorical { levels: ax.levels, lambda, has_sentinel }
                } else {
                    let active: Vec<f64> = rows.iter().map(|r| r[j]).filter(|v| !is_sentinel(*v)).collect();
                    let sigma = if active.len() >= 2 {
                        let m = active.iter().sum::<f64>() / active.len() as f64;
                        (active.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (active.len() - 1) as f64).sqrt()
                    } else {
                        0.0
                    };
                    KdeAxis::Numeric { h: (scott * sigma).max(1e-3) }
                }
            })
            .collect();
        ProductKde { axes, rows }
    }

    pub fn axes(&self) -> &[KdeAxis] {
        &self.axes
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    fn ln_kernel(&self, j: usize, q: f64, t: f64) -> f64 {
        match &self.axes[j] {
            KdeAxis::Numeric { h } => {
                let dist = if is_sentinel(q) && is_sentinel(t) {
                    0.0
                } else if is_sentinel(q) || is_sentinel(t) {
                    1.0
                } else {
                    (q - t).abs()
                };
                -0.5 * (dist / h) * (dist / h) - h.ln() - LN_SQRT_2PI
            }
            KdeAxis::Categorical { levels, lambda, has_sentinel } => {
                let l_eff = levels + *has_sentinel as usize;
                if l_eff <= 1 {
                    return 0.0;
                }
                let same = if is_sentinel(q) || is_sentinel(t) {
                    is_sentinel(q) && is_sentinel(t)
                } else {
                    q == t
                };
                if same {
                    lambda.ln()
                } else {
                    ((1.0 - lambda) / (l_eff - 1) as f64).ln()
                }
            }
        }
    }

    /// Natural log of the mixture density at `q`.
    pub fn log_density(&self, q: &[f64]) -> f64 {
        debug_assert_eq!(q.len(), self.axes.len());
        let mut row_logs = Vec::with_capacity(self.rows.len());
        for t in &self.rows {
            let mut acc = 0.0;
            for j in 0..self.axes.len() {
                acc += self.ln_kernel(j, q[j], t[j]);
            }
            row_logs.push(acc);
        }
        let m = row_logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let s: f64 = row_logs.iter().map(|l| (l - m).exp()).sum();
        m + s.ln() - (self.rows.len() as f64).ln()
    }

    /// Draws the encoded coordinate of axis `j` by perturbing a donor value:
    /// Normal(donor, h) clamped to [0,1] on numeric axes; keep-with-probability
    /// λ else uniform over the other levels on categorical axes. A sentinel
    /// donor coordinate yields a fresh uniform draw (the caller resolves
    /// activity separately).
    pub fn sample_axis(&self, j: usize, donor: f64, rng: &mut ChaCha8Rng) -> f64 {
        match &self.axes[j] {
            KdeAxis::Numeric { h } => {
                if is_sentinel(donor) {
                    rng.random::<f64>()
                } else {
                    let n = Normal::new(donor, *h).expect("positive bandwidth");
                    n.sample(rng).clamp(0.0, 1.0)
                }
            }
            KdeAxis::Categorical { levels, lambda, .. } => {
                let l = *levels;
                if l == 1 {
                    return 0.0;
                }
                let enc = |idx: usize| idx as f64 / (l - 1) as f64;
                if is_sentinel(donor) {
                    return enc(rng.random_range(0..l));
                }
                let donor_idx = (donor * (l - 1) as f64).round() as usize;
                if rng.random::<f64>() < *lambda {
                    enc(donor_idx.min(l - 1))
                } else {
                    let mut pick = rng.random_range(0..l - 1);
                    if pick >= donor_idx {
                        pick += 1;
                    }
                    enc(pick)
                }
            }
        }
    }
}
