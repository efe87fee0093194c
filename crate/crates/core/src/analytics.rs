//! Closed-form coding delays (in files, i.e. slots / F), their low-memory
//! approximations, and Gamma fitting of realized piece lengths.

use std::collections::BTreeMap;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Gamma};
use statrs::function::gamma::{digamma, ln_gamma};

use crate::combin::{binomial, binomial_f64};
use crate::content::{PieceTable, UserSet};
use crate::error::{Error, Result};

/// Probability-weighted count of pieces at level `alpha`:
/// C(K, alpha) p^(alpha-1) (1-p)^(K-alpha+1).
fn level_weight(k: usize, alpha: usize, p: f64) -> f64 {
    binomial_f64(k, alpha) * p.powi(alpha as i32 - 1) * (1.0 - p).powi((k - alpha + 1) as i32)
}

/// Large-file delay of decentralized placement with joint delivery.
pub fn delay_infinite(k: usize, l: usize, p: f64) -> f64 {
    (1..=k)
        .map(|a| level_weight(k, a, p) * a as f64 / (a + l - 1).min(k) as f64)
        .sum()
}

/// The same delay assembled block by block: number of transmission sets,
/// times repetitions, times the expected mini-file size.
pub fn delay_infinite_by_blocks(k: usize, l: usize, p: f64) -> f64 {
    (1..=k)
        .map(|a| {
            let t = (a + l - 1).min(k);
            binomial_f64(k, t) * binomial_f64(t - 1, a - 1) / binomial_f64(k - a, t - a)
                * p.powi(a as i32 - 1)
                * (1.0 - p).powi((k - a + 1) as i32)
        })
        .sum()
}

/// Coordinated placement over `k` users with `l` transmitters:
/// K(1-p) / min(Kp + L, K).
pub fn delay_centralized(k: usize, l: usize, p: f64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    k as f64 * (1.0 - p) / (k as f64 * p + l as f64).min(k as f64)
}

/// Hybrid placement served one group after the other:
/// Kc(1-p)/(L + Kc p) plus the large-file delay of the other group.
/// Unlike [`delay_centralized`] the first term is not clamped.
pub fn delay_tdma(kc: usize, kd: usize, l: usize, p: f64) -> f64 {
    let kc_f = kc as f64;
    kc_f * (1.0 - p) / (l as f64 + kc_f * p) + delay_infinite(kd, l, p)
}

/// Single-transmitter TDMA hybrid delay in resummed form. At p = 0 the
/// decentralized term takes its limit K_d.
pub fn delay_hybrid_l1(kc: usize, kd: usize, p: f64) -> f64 {
    let kc_f = kc as f64;
    let kd_f = kd as f64;
    let first = kc_f * (1.0 - p) / (1.0 + kc_f * p);
    let second = if kd == 0 {
        0.0
    } else if p == 0.0 {
        kd_f
    } else {
        kd_f * (1.0 - p) / (kd_f * p) * (1.0 - (1.0 - p).powi(kd as i32))
    };
    first + second
}

/// Single-transmitter decentralized delay (1-p)/p (1 - (1-p)^K).
pub fn delay_single_transmitter(k: usize, p: f64) -> f64 {
    if p == 0.0 {
        return k as f64;
    }
    (1.0 - p) / p * (1.0 - (1.0 - p).powi(k as i32))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaylorDelays {
    pub hybrid: f64,
    pub centralized: f64,
    pub decentralized: f64,
}

/// First-order small-p expansions of the three single-transmitter delays.
pub fn taylor_delays(k: usize, kc: usize, kd: usize, p: f64) -> TaylorDelays {
    let k_f = k as f64;
    let c2 = |n: usize| binomial(n, 2) as f64;
    TaylorDelays {
        hybrid: k_f - p * ((kc * kc) as f64 + k_f + c2(kd)),
        centralized: k_f - p * (k_f * k_f + k_f),
        decentralized: k_f - p * (k_f + c2(k)),
    }
}

/// Delay reduction from adding transmitters, relative to one transmitter.
pub fn delta_tc(k: usize, l: usize, p: f64) -> f64 {
    let sum: f64 = (1..=k)
        .map(|a| level_weight(k, a, p) / (a + l - 1) as f64)
        .sum();
    (l - 1) as f64 * sum
}

/// T_C(1) - delta_tc(L): a lower bound on the delay with L transmitters.
pub fn lower_bound(k: usize, l: usize, p: f64) -> f64 {
    delay_infinite(k, 1, p) - delta_tc(k, l, p)
}

/// Whether the hybrid placement beats pure decentralized placement at low
/// memory: Kc^2 + C(Kd, 2) > C(K, 2).
pub fn hybrid_superior(k: usize, kc: usize) -> bool {
    let kd = k.saturating_sub(kc);
    (kc * kc) as u64 + binomial(kd, 2) > binomial(k, 2)
}

/// Realized delay recomputed from the piece table alone: for every level
/// `alpha` and transmission set `T`, `omega` times the longest mini-file any
/// `(U, r)` in `T` contributes. Mini-file `i` of a piece of length `n` cut
/// into `c` parts has length `min(ceil(n/c), n - i ceil(n/c))`, and the
/// transmission sets containing `U` get indices in lexicographic order.
pub fn realized_delay_sum(table: &PieceTable, l: usize) -> u64 {
    let members: Vec<usize> = table.group().iter().collect();
    let k = members.len();
    let mut total = 0u64;
    for alpha in 1..=k {
        let t_size = (alpha + l - 1).min(k);
        let omega = binomial(t_size - 1, alpha - 1);
        let parts = binomial(k - alpha, t_size - alpha);
        for t in members.iter().copied().combinations(t_size) {
            let mut longest = 0u64;
            for u in t.iter().copied().combinations(alpha) {
                // rank of T among the supersets of U = rank of T \ U among
                // (t_size - alpha)-subsets of the rest, lexicographically
                let rest: Vec<usize> = members.iter().copied().filter(|m| !u.contains(m)).collect();
                let extra: Vec<usize> = t.iter().copied().filter(|m| !u.contains(m)).collect();
                let index = lex_rank(&rest, &extra);
                let u_set: UserSet = u.iter().copied().collect();
                for &r in &u {
                    let n = table.piece_len(r, u_set.without(r)) as u64;
                    let chunk = n.div_ceil(parts);
                    let len = chunk.min(n.saturating_sub(index * chunk));
                    longest = longest.max(len);
                }
            }
            total += omega * longest;
        }
    }
    total
}

/// Lexicographic rank of the sorted subset `sub` among all subsets of
/// `universe` with the same size.
fn lex_rank(universe: &[usize], sub: &[usize]) -> u64 {
    let n = universe.len();
    let k = sub.len();
    let mut rank = 0;
    let mut from = 0;
    for (i, &s) in sub.iter().enumerate() {
        let pos = universe
            .iter()
            .position(|&x| x == s)
            .expect("member of universe");
        for skipped in from..pos {
            rank += binomial(n - skipped - 1, k - i - 1);
        }
        from = pos + 1;
    }
    rank
}

/// Realized piece lengths keyed by level, zero-length pieces included.
pub fn piece_lengths_by_level(table: &PieceTable) -> BTreeMap<usize, Vec<usize>> {
    (1..=table.group().len())
        .map(|a| (a, table.piece_length_distribution(a)))
        .collect()
}

/// Shape `k_g` and scale `theta` of a Gamma density.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    pub shape: f64,
    pub scale: f64,
}

impl GammaParams {
    pub fn new(shape: f64, scale: f64) -> Result<GammaParams> {
        if !(shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "Gamma parameters must be positive, got shape={shape} scale={scale}"
            )));
        }
        Ok(GammaParams { shape, scale })
    }

    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    pub fn cdf(&self, x: f64) -> f64 {
        Gamma::new(self.shape, 1.0 / self.scale)
            .expect("validated parameters")
            .cdf(x)
    }
}

/// x^(k-1) e^(-x/theta) / (theta^k Gamma(k)) for x > 0, else 0.
pub fn gamma_pdf(x: f64, params: &GammaParams) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let GammaParams { shape, scale } = *params;
    ((shape - 1.0) * x.ln() - x / scale - shape * scale.ln() - ln_gamma(shape)).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub params: GammaParams,
    /// Samples used after dropping non-positive values.
    pub used: usize,
    pub dropped: usize,
}

fn positive_moments(samples: &[f64]) -> Result<(Vec<f64>, usize, f64, f64)> {
    let kept: Vec<f64> = samples.iter().copied().filter(|&x| x > 0.0).collect();
    let dropped = samples.len() - kept.len();
    if kept.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = kept.len() as f64;
    let mean = kept.iter().sum::<f64>() / n;
    let var = kept.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if var <= 0.0 {
        return Err(Error::DegenerateSample);
    }
    Ok((kept, dropped, mean, var))
}

/// Method of moments: shape = mean^2 / var, scale = var / mean. Zero and
/// negative samples lie outside the support and are dropped.
pub fn fit_gamma(samples: &[f64]) -> Result<GammaFit> {
    let (kept, dropped, mean, var) = positive_moments(samples)?;
    Ok(GammaFit {
        params: GammaParams::new(mean * mean / var, var / mean)?,
        used: kept.len(),
        dropped,
    })
}

/// Maximum likelihood, by Newton iteration on the shape starting from the
/// moment estimate; the scale is then mean / shape.
pub fn fit_gamma_mle(samples: &[f64]) -> Result<GammaFit> {
    let start = fit_gamma(samples)?;
    let kept: Vec<f64> = samples.iter().copied().filter(|&x| x > 0.0).collect();
    let n = kept.len() as f64;
    let mean = kept.iter().sum::<f64>() / n;
    let mean_log = kept.iter().map(|x| x.ln()).sum::<f64>() / n;
    let s = mean.ln() - mean_log;
    let mut shape = start.params.shape;
    for _ in 0..100 {
        // solve ln(k) - digamma(k) = s
        let g = shape.ln() - digamma(shape) - s;
        let dg = 1.0 / shape - trigamma(shape);
        let next = shape - g / dg;
        let next = if next > 0.0 { next } else { shape / 2.0 };
        if (next - shape).abs() <= 1e-12 * shape {
            shape = next;
            break;
        }
        shape = next;
    }
    Ok(GammaFit {
        params: GammaParams::new(shape, mean / shape)?,
        used: start.used,
        dropped: start.dropped,
    })
}

/// Trigamma via recurrence to x >= 6 and the asymptotic series.
fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 12.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    acc + 1.0 / x
        + x2 / 2.0
        + (1.0 / x) * x2 * (1.0 / 6.0 - x2 * (1.0 / 30.0 - x2 * (1.0 / 42.0 - x2 / 30.0)))
}

/// Two-sided Kolmogorov-Smirnov distance between the empirical CDF of the
/// positive samples and the fitted Gamma CDF.
pub fn ks_statistic(samples: &[f64], params: &GammaParams) -> f64 {
    let mut xs: Vec<f64> = samples.iter().copied().filter(|&x| x > 0.0).collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let c = params.cdf(x);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}
