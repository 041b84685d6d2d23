//! Conversions between tradeoff curves, (ε, δ) guarantees and μ-GDP.

use serde::{Deserialize, Serialize};

use super::curve::{TradeoffCurve, Vertex};
use crate::error::{check_probability, ensure_param, Result};
use crate::numeric::{softplus, std_normal_cdf, std_normal_quantile, std_normal_quantile_from_log};

/// Default number of α grid points used to discretize `G_μ`.
pub const DEFAULT_GDP_GRID: usize = 10_001;

// β̄ - e^ε α (resp. ᾱ - e^ε β) at one vertex, with 0·∞ read as 0.
fn excess(top: f64, scale: f64, x: f64) -> f64 {
    if x == 0.0 {
        top
    } else {
        top - scale * x
    }
}

/// Smallest δ such that `f` dominates the (ε, δ) curve
/// `max{0, 1 - δ - e^ε α, e^{-ε}(1 - δ - α)}`.
///
/// Both constraint families are linear in α on each segment, so the suprema
/// sit at vertices. `eps = +inf` gives the limit δ(∞).
pub fn curve_to_delta(f: &TradeoffCurve, eps: f64) -> Result<f64> {
    ensure_param!(eps >= 0.0, "epsilon must be nonnegative, got {eps}");
    let scale = eps.exp();
    let delta = f
        .vertices()
        .iter()
        .map(|v: &Vertex| excess(v.one_minus_beta(), scale, v.alpha).max(excess(v.one_minus_alpha(), scale, v.beta)))
        .fold(0.0, f64::max);
    Ok(delta.min(1.0))
}

/// Smallest ε ≥ 0 with `curve_to_delta(f, ε) <= δ`, or `+inf` if none exists.
///
/// Each vertex constraint `β̄ - e^ε α <= δ` is solved for ε directly, so the
/// result is exact up to rounding.
pub fn curve_to_epsilon(f: &TradeoffCurve, delta: f64) -> Result<f64> {
    check_probability("delta", delta)?;
    let mut eps: f64 = 0.0;
    for v in f.vertices() {
        for (top, x) in [(v.one_minus_beta(), v.alpha), (v.one_minus_alpha(), v.beta)] {
            let gap = top - delta;
            if gap <= 0.0 {
                continue;
            }
            if x == 0.0 {
                return Ok(f64::INFINITY);
            }
            eps = eps.max(gap.ln() - x.ln());
        }
    }
    Ok(eps)
}

/// `G_μ(α) = Φ(Φ⁻¹(1 - α) - μ)`.
pub fn gdp_tradeoff(mu: f64, alpha: f64) -> f64 {
    gdp_vertex(mu, alpha).beta
}

fn gdp_vertex(mu: f64, alpha: f64) -> Vertex {
    if alpha <= 0.0 {
        return Vertex::with_complements(0.0, 1.0, 1.0, 0.0);
    }
    if alpha >= 1.0 {
        return Vertex::with_complements(1.0, 0.0, 0.0, 1.0);
    }
    // Φ⁻¹(1 - α) = -Φ⁻¹(α), and 1 - G_μ(α) = Φ(Φ⁻¹(α) + μ).
    let z = std_normal_quantile(alpha).expect("alpha in (0, 1)");
    Vertex::with_complements(alpha, std_normal_cdf(-z - mu), 1.0 - alpha, std_normal_cdf(z + mu))
}

/// Piecewise-linear `G_μ` with vertices exactly on the curve over a uniform
/// grid of `grid_points` α values.
pub fn gdp_curve(mu: f64, grid_points: usize) -> Result<TradeoffCurve> {
    ensure_param!(mu >= 0.0 && mu.is_finite(), "mu must be finite and nonnegative, got {mu}");
    ensure_param!(grid_points >= 2, "GDP grid needs at least 2 points");
    let n = grid_points - 1;
    let vertices = (0..=n).map(|i| gdp_vertex(mu, i as f64 / n as f64)).collect();
    TradeoffCurve::from_vertices(vertices)
}

/// μ such that every (ε, 0)-DP mechanism is μ-GDP: `-2 Φ⁻¹(1 / (1 + e^ε))`.
pub fn pure_dp_to_gdp(eps: f64) -> Result<f64> {
    ensure_param!(eps >= 0.0, "epsilon must be nonnegative, got {eps}");
    if eps == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    // ln(1 / (1 + e^ε)) = -softplus(ε), kept in log space for large ε.
    Ok(-2.0 * std_normal_quantile_from_log(-softplus(eps))?)
}

/// Smallest μ with `f >= G_μ` everywhere, or `+inf` if there is none.
///
/// `f - G_μ` is concave between vertices, so checking the vertices suffices;
/// each gives `μ >= Φ⁻¹(1 - α) + Φ⁻¹(1 - β)`.
pub fn curve_to_gdp(f: &TradeoffCurve) -> Result<f64> {
    // Φ⁻¹(1 - x) from whichever of x, 1 - x is stored more accurately.
    let upper = |x: f64, x_bar: f64| -> Result<f64> {
        if x_bar <= 0.0 {
            Ok(f64::NEG_INFINITY)
        } else if x < 0.5 {
            Ok(-std_normal_quantile(x)?)
        } else {
            std_normal_quantile(x_bar)
        }
    };
    let mut mu: f64 = 0.0;
    for v in f.vertices() {
        let (a_bar, b_bar) = (v.one_minus_alpha(), v.one_minus_beta());
        if (v.alpha == 0.0 && b_bar <= 0.0) || (v.beta == 0.0 && a_bar <= 0.0) {
            continue;
        }
        if v.alpha == 0.0 || v.beta == 0.0 {
            return Ok(f64::INFINITY);
        }
        mu = mu.max(upper(v.alpha, a_bar)? + upper(v.beta, b_bar)?);
    }
    Ok(mu)
}

/// One (ε, δ) guarantee.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsDelta {
    #[serde(with = "crate::serde_float")]
    pub epsilon: f64,
    pub delta: f64,
}

/// A set of (ε, δ) guarantees and optionally a GDP parameter.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PrivacyProfile {
    pub points: Vec<EpsDelta>,
    #[serde(default, with = "crate::serde_float::option")]
    pub mu: Option<f64>,
}

impl PrivacyProfile {
    /// δ(ε) for each requested ε, sorted by ε.
    pub fn from_curve(f: &TradeoffCurve, epsilons: &[f64]) -> Result<Self> {
        let mut points = epsilons
            .iter()
            .map(|&epsilon| Ok(EpsDelta { epsilon, delta: curve_to_delta(f, epsilon)? }))
            .collect::<Result<Vec<_>>>()?;
        points.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon));
        Ok(Self { points, mu: None })
    }

    pub fn is_monotone(&self) -> bool {
        self.points.windows(2).all(|w| w[1].delta <= w[0].delta)
    }
}
