//! Closed-form tradeoff curves, GDP parameters, variances and bit costs of the
//! local randomizers.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_param, Error, Result};
use crate::numeric::{log2, BinomialTable};
use crate::tradeoff::{gdp_curve, gdp_tradeoff, pure_dp_to_gdp, DiscreteDist, TradeoffCurve, Vertex, DEFAULT_GDP_GRID};

/// Parameters of one mechanism. Serialized with a `"mechanism"` tag and the
/// short symbol names (`M`, `A`, `sigma`, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mechanism", rename_all = "kebab-case")]
pub enum MechanismParams {
    BinomialNoise {
        #[serde(rename = "M")]
        m: u64,
        p: f64,
        l: u64,
    },
    BinomialMech {
        #[serde(rename = "M")]
        m: u64,
        p_min: f64,
        p_max: f64,
    },
    StoSign {
        #[serde(rename = "A")]
        a: f64,
        c: f64,
    },
    Cldp {
        #[serde(with = "crate::serde_float")]
        eps: f64,
        c: f64,
    },
    Ternary {
        #[serde(rename = "A")]
        a: f64,
        #[serde(rename = "B")]
        b: f64,
        c: f64,
    },
    Ternarize {
        #[serde(rename = "B")]
        b: f64,
        c: f64,
    },
    PoissonBinomial {
        p_min: f64,
        p_max: f64,
    },
    Sqkr {
        #[serde(with = "crate::serde_float")]
        eps: f64,
        k: u32,
        d: usize,
        #[serde(rename = "C")]
        norm_bound: f64,
    },
    GaussianSparse {
        sigma: f64,
        #[serde(rename = "A")]
        a: f64,
        #[serde(rename = "B")]
        b: f64,
        c: f64,
        d: usize,
    },
}

impl MechanismParams {
    pub fn name(&self) -> &'static str {
        match self {
            Self::BinomialNoise { .. } => "binomial-noise",
            Self::BinomialMech { .. } => "binomial-mech",
            Self::StoSign { .. } => "sto-sign",
            Self::Cldp { .. } => "cldp",
            Self::Ternary { .. } => "ternary",
            Self::Ternarize { .. } => "ternarize",
            Self::PoissonBinomial { .. } => "poisson-binomial",
            Self::Sqkr { .. } => "sqkr",
            Self::GaussianSparse { .. } => "gaussian-sparse",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Self::BinomialNoise { m, p, l } => check_binomial_noise(m, p, l),
            Self::BinomialMech { m, p_min, p_max } => {
                ensure_param!(m >= 1, "M must be at least 1");
                check_prob_range(p_min, p_max)
            }
            Self::StoSign { a, c } => check_scales(a, a, c),
            Self::Cldp { eps, c } => check_cldp(eps, c),
            Self::Ternary { a, b, c } => check_scales(a, b, c),
            Self::Ternarize { b, c } => check_ternarize(b, c),
            Self::PoissonBinomial { p_min, p_max } => check_prob_range(p_min, p_max),
            Self::Sqkr { eps, k, d, norm_bound } => check_sqkr(eps, k, d, norm_bound),
            Self::GaussianSparse { sigma, a, b, c, d } => check_gaussian(sigma, a, b, c, d),
        }
    }

    /// The mechanism's tradeoff curve for one coordinate (or, for SQKR and the
    /// Gaussian, for the whole vector).
    pub fn curve(&self) -> Result<TradeoffCurve> {
        match *self {
            Self::BinomialNoise { m, p, l } => binomial_noise_curve(m, p, l),
            Self::BinomialMech { m, p_min, p_max } => binomial_mech_curve(m, p_min, p_max),
            Self::StoSign { a, c } => sto_sign_curve(a, c),
            Self::Cldp { eps, c } => cldp_curve(eps, c),
            Self::Ternary { a, b, c } => ternary_curve(a, b, c),
            Self::Ternarize { b, c } => ternarize_curve(b, c),
            Self::PoissonBinomial { p_min, p_max } => pbm_curve(p_min, p_max),
            Self::Sqkr { eps, k, d, norm_bound } => {
                check_sqkr(eps, k, d, norm_bound)?;
                pure_dp_curve(eps)
            }
            Self::GaussianSparse { sigma, a, b, c, d } => {
                check_gaussian(sigma, a, b, c, d)?;
                gdp_curve(gaussian_mu(sigma, c, d), DEFAULT_GDP_GRID)
            }
        }
    }

    /// The neighbouring-input output distributions whose tradeoff the closed
    /// form describes, where such a finite pair exists.
    pub fn worst_case_pair(&self) -> Result<Option<(DiscreteDist, DiscreteDist)>> {
        self.validate()?;
        Ok(match *self {
            Self::BinomialNoise { m, p, l } => Some(binomial_noise_pair(m, p, l)?),
            Self::BinomialMech { m, p_min, p_max } => Some(binomial_mech_pair(m, p_min, p_max)?),
            Self::StoSign { a, c } => Some(ternary_pair(a, a, c)?),
            Self::Cldp { eps, c } => Some(ternary_pair(cldp_scale(eps, c), cldp_scale(eps, c), c)?),
            Self::Ternary { a, b, c } => Some(ternary_pair(a, b, c)?),
            Self::Ternarize { b, c } => Some(ternarize_pair(b, c)?),
            Self::PoissonBinomial { p_min, p_max } => {
                Some((DiscreteDist::bernoulli(p_max)?, DiscreteDist::bernoulli(p_min)?))
            }
            Self::Sqkr { .. } | Self::GaussianSparse { .. } => None,
        })
    }

    /// Expected bits sent per user for a `d`-dimensional input.
    pub fn comm_bits(&self, d: usize) -> Result<f64> {
        self.validate()?;
        ensure_param!(d >= 1, "dimension must be at least 1");
        let df = d as f64;
        let index_bits = log2(df);
        Ok(match *self {
            Self::Ternary { a, b, .. } => (index_bits + 1.0) * (a / b) * df,
            Self::Ternarize { b, c } => (index_bits + 1.0) * (c / b) * df,
            Self::Sqkr { k, d: own, .. } => {
                ensure_param!(own == d, "SQKR configured for d = {own}, asked for d = {d}");
                (index_bits + 1.0) * f64::from(k)
            }
            Self::GaussianSparse { a, b, d: own, .. } => {
                ensure_param!(own == d, "Gaussian configured for d = {own}, asked for d = {d}");
                (index_bits + 32.0) * (a / b) * df
            }
            Self::BinomialNoise { m, l, .. } => df * log2((m + l + 1) as f64),
            Self::BinomialMech { m, .. } => df * log2((m + 1) as f64),
            Self::StoSign { .. } | Self::Cldp { .. } | Self::PoissonBinomial { .. } => df,
        })
    }
}

fn check_prob_range(p_min: f64, p_max: f64) -> Result<()> {
    ensure_param!(
        0.0 < p_min && p_min <= p_max && p_max < 1.0,
        "need 0 < p_min <= p_max < 1, got p_min = {p_min}, p_max = {p_max}"
    );
    Ok(())
}

fn check_binomial_noise(m: u64, p: f64, l: u64) -> Result<()> {
    ensure_param!(m > l, "binomial noise needs M > l, got M = {m}, l = {l}");
    ensure_param!(0.0 < p && p < 1.0, "p must lie in (0, 1), got {p}");
    Ok(())
}

fn check_scales(a: f64, b: f64, c: f64) -> Result<()> {
    ensure_param!(c > 0.0 && c.is_finite(), "c must be positive, got {c}");
    ensure_param!(a > c, "A must exceed c, got A = {a}, c = {c}");
    ensure_param!(b >= a && b.is_finite(), "B must be finite and at least A, got A = {a}, B = {b}");
    Ok(())
}

fn check_cldp(eps: f64, c: f64) -> Result<()> {
    ensure_param!(eps > 0.0 && eps.is_finite(), "epsilon must be positive and finite, got {eps}");
    ensure_param!(c > 0.0 && c.is_finite(), "c must be positive, got {c}");
    Ok(())
}

fn check_ternarize(b: f64, c: f64) -> Result<()> {
    ensure_param!(c > 0.0, "c must be positive, got {c}");
    ensure_param!(b > c && b.is_finite(), "B must exceed c, got B = {b}, c = {c}");
    Ok(())
}

fn check_sqkr(eps: f64, k: u32, d: usize, norm_bound: f64) -> Result<()> {
    ensure_param!(eps > 0.0, "epsilon must be positive, got {eps}");
    ensure_param!((1..=1000).contains(&k), "k must lie in 1..=1000, got {k}");
    ensure_param!(d >= 1, "dimension must be at least 1");
    ensure_param!(norm_bound > 0.0 && norm_bound.is_finite(), "C must be positive, got {norm_bound}");
    Ok(())
}

fn check_gaussian(sigma: f64, a: f64, b: f64, c: f64, d: usize) -> Result<()> {
    ensure_param!(sigma > 0.0 && sigma.is_finite(), "sigma must be positive, got {sigma}");
    ensure_param!(a > 0.0 && b >= a && b.is_finite(), "need 0 < A <= B, got A = {a}, B = {b}");
    ensure_param!(c >= 0.0 && c.is_finite(), "c must be nonnegative, got {c}");
    ensure_param!(d >= 1, "dimension must be at least 1");
    Ok(())
}

/// Curve of the pair `(P, Q)` where rejecting on `k <= t` is optimal, given
/// `α(t) = P(X <= t)` and `β(t) = Q(Y > t)` for `t = lo..=hi`.
fn threshold_curve(x: &BinomialTable, x_offset: i64, y: &BinomialTable, lo: i64, hi: i64) -> Result<TradeoffCurve> {
    let mut vertices: Vec<Vertex> = (lo..=hi)
        .map(|t| Vertex::with_complements(x.cdf(t - x_offset), y.sf(t), x.sf(t - x_offset), y.cdf(t)))
        .collect();
    vertices.push(Vertex::with_complements(1.0, 0.0, 0.0, 1.0));
    TradeoffCurve::from_vertices(vertices)
}

/// One branch of the binomial noise curve, `T(l + Z, Z)` with `Z ~ Binom(M, p)`.
pub fn binomial_noise_branch(m: u64, p: f64, l: u64) -> Result<TradeoffCurve> {
    check_binomial_noise(m, p, l)?;
    let z = BinomialTable::new(m, p)?;
    let l = l as i64;
    // Rejecting outputs y <= t: α = P(Z <= t - l), β = P(Z > t).
    threshold_curve(&z, l, &z, l - 1, m as i64)
}

/// Tradeoff curve of additive binomial noise on inputs `{0, ..., l}`.
pub fn binomial_noise_curve(m: u64, p: f64, l: u64) -> Result<TradeoffCurve> {
    if l == 0 {
        ensure_param!(m >= 1, "M must be at least 1");
        return Ok(TradeoffCurve::perfect_privacy());
    }
    let plus = binomial_noise_branch(m, p, l)?;
    let minus = binomial_noise_branch(m, 1.0 - p, l)?;
    Ok(plus.min(&minus))
}

pub fn binomial_noise_pair(m: u64, p: f64, l: u64) -> Result<(DiscreteDist, DiscreteDist)> {
    check_binomial_noise(m, p, l)?;
    let z = binomial_dist(m, p)?;
    Ok((z.shifted(l as i64), z))
}

/// One branch of the binomial mechanism curve, `T(Binom(M, p_max), Binom(M, p_min))`.
pub fn binomial_mech_branch(m: u64, p_min: f64, p_max: f64) -> Result<TradeoffCurve> {
    ensure_param!(m >= 1, "M must be at least 1");
    check_prob_range(p_min, p_max)?;
    let x = BinomialTable::new(m, p_max)?;
    let y = BinomialTable::new(m, p_min)?;
    threshold_curve(&x, 0, &y, -1, m as i64)
}

/// Tradeoff curve of the binomial mechanism with success probabilities in
/// `[p_min, p_max]`.
pub fn binomial_mech_curve(m: u64, p_min: f64, p_max: f64) -> Result<TradeoffCurve> {
    let plus = binomial_mech_branch(m, p_min, p_max)?;
    let minus = binomial_mech_branch(m, 1.0 - p_max, 1.0 - p_min)?;
    Ok(plus.min(&minus))
}

pub fn binomial_mech_pair(m: u64, p_min: f64, p_max: f64) -> Result<(DiscreteDist, DiscreteDist)> {
    ensure_param!(m >= 1, "M must be at least 1");
    check_prob_range(p_min, p_max)?;
    Ok((binomial_dist(m, p_max)?, binomial_dist(m, p_min)?))
}

fn binomial_dist(m: u64, p: f64) -> Result<DiscreteDist> {
    let table = BinomialTable::new(m, p)?;
    let support: Vec<i64> = (0..=m as i64).collect();
    let mut probs: Vec<f64> = support.iter().map(|&k| table.pmf(k)).collect();
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|w| *w /= total);
    DiscreteDist::new(support, probs)
}

/// Tradeoff curve of stochastic sign with scale `A`.
pub fn sto_sign_curve(a: f64, c: f64) -> Result<TradeoffCurve> {
    ternary_curve(a, a, c)
}

/// `A = c (e^ε + 1) / (e^ε - 1)`, the sto-sign scale that gives ε-LDP.
pub fn cldp_scale(eps: f64, c: f64) -> f64 {
    c / (eps / 2.0).tanh()
}

/// Tradeoff curve of CLDP∞, which is exactly the (ε, 0)-DP curve.
pub fn cldp_curve(eps: f64, c: f64) -> Result<TradeoffCurve> {
    check_cldp(eps, c)?;
    pure_dp_curve(eps)
}

/// `max{0, 1 - e^ε α, e^{-ε}(1 - α)}`.
pub fn pure_dp_curve(eps: f64) -> Result<TradeoffCurve> {
    ensure_param!(eps >= 0.0, "epsilon must be nonnegative, got {eps}");
    if eps == f64::INFINITY {
        return Ok(TradeoffCurve::no_privacy());
    }
    // 1 / (1 + e^ε) and e^ε / (1 + e^ε)
    let knee = 0.5 - 0.5 * (eps / 2.0).tanh();
    let rest = 0.5 + 0.5 * (eps / 2.0).tanh();
    TradeoffCurve::from_vertices(vec![
        Vertex::with_complements(0.0, 1.0, 1.0, 0.0),
        Vertex::with_complements(knee, knee, rest, rest),
        Vertex::with_complements(1.0, 0.0, 0.0, 1.0),
    ])
}

/// Tradeoff curve of the ternary stochastic compressor.
pub fn ternary_curve(a: f64, b: f64, c: f64) -> Result<TradeoffCurve> {
    check_scales(a, b, c)?;
    let low = (a - c) / (2.0 * b);
    let high = (a + c) / (2.0 * b);
    let mut vertices =
        vec![Vertex::with_complements(0.0, 1.0, 1.0, 0.0), Vertex::with_complements(low, 1.0 - high, 1.0 - low, high)];
    if b > a {
        vertices.push(Vertex::with_complements(1.0 - high, low, high, 1.0 - low));
    }
    vertices.push(Vertex::with_complements(1.0, 0.0, 0.0, 1.0));
    TradeoffCurve::from_vertices(vertices)
}

/// Outputs of the ternary compressor at `x = c` and `x = -c`, on `{-1, 0, 1}`.
pub fn ternary_pair(a: f64, b: f64, c: f64) -> Result<(DiscreteDist, DiscreteDist)> {
    check_scales(a, b, c)?;
    let up = (a + c) / (2.0 * b);
    let down = (a - c) / (2.0 * b);
    let zero = 1.0 - a / b;
    Ok((
        DiscreteDist::new(vec![-1, 0, 1], vec![down, zero, up])?,
        DiscreteDist::new(vec![-1, 0, 1], vec![up, zero, down])?,
    ))
}

/// Tradeoff curve of ternarize with scale `B`.
pub fn ternarize_curve(b: f64, c: f64) -> Result<TradeoffCurve> {
    check_ternarize(b, c)?;
    let keep = c / b;
    TradeoffCurve::from_vertices(vec![
        Vertex::with_complements(0.0, 1.0 - keep, 1.0, keep),
        Vertex::with_complements(1.0 - keep, 0.0, keep, 1.0),
        Vertex::with_complements(1.0, 0.0, 0.0, 1.0),
    ])
}

pub fn ternarize_pair(b: f64, c: f64) -> Result<(DiscreteDist, DiscreteDist)> {
    check_ternarize(b, c)?;
    let keep = c / b;
    Ok((
        DiscreteDist::new(vec![-1, 0, 1], vec![0.0, 1.0 - keep, keep])?,
        DiscreteDist::new(vec![-1, 0, 1], vec![keep, 1.0 - keep, 0.0])?,
    ))
}

// max{0, 1 - a α, b (1 - α)} with a >= 1 >= b.
fn two_slope_curve(a: f64, b: f64) -> Result<TradeoffCurve> {
    if a <= b {
        return Ok(TradeoffCurve::perfect_privacy());
    }
    let knee = (1.0 - b) / (a - b);
    TradeoffCurve::from_vertices(vec![
        Vertex::new(0.0, 1.0),
        Vertex::new(knee, b * (1.0 - knee)),
        Vertex::new(1.0, 0.0),
    ])
}

/// Lower bound on the tradeoff curve of the Poisson binomial mechanism with one
/// trial per user and success probabilities in `[p_min, p_max]`.
pub fn pbm_curve(p_min: f64, p_max: f64) -> Result<TradeoffCurve> {
    check_prob_range(p_min, p_max)?;
    let first = two_slope_curve((1.0 - p_min) / (1.0 - p_max), p_min / p_max)?;
    let second = two_slope_curve(p_max / p_min, (1.0 - p_max) / (1.0 - p_min))?;
    Ok(first.min(&second))
}

/// μ of the d-dimensional ternary compressor via its (d ln((A+c)/(A-c)), 0)-DP guarantee.
pub fn ternary_vector_gdp(a: f64, c: f64, d: u64) -> Result<f64> {
    check_scales(a, a, c)?;
    ensure_param!(d >= 1, "dimension must be at least 1");
    let per_coordinate = (2.0 * c / (a - c)).ln_1p();
    pure_dp_to_gdp(d as f64 * per_coordinate)
}

/// μ of the sparsified Gaussian mechanism, `2√d c / σ`.
pub fn gaussian_mu(sigma: f64, c: f64, d: usize) -> f64 {
    2.0 * (d as f64).sqrt() * c / sigma
}

/// GDP approximation of the d-fold ternary compressor together with the
/// Berry–Esseen width `γ` of the two-sided bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CltBound {
    pub mu: f64,
    pub gamma: f64,
    /// Set when `γ >= 1/2`, where the bound says nothing.
    pub gamma_warning: bool,
}

pub fn ternary_clt_bound(a: f64, b: f64, c: f64, d: u64) -> Result<CltBound> {
    check_scales(a, b, c)?;
    ensure_param!(d >= 1, "dimension must be at least 1");
    let df = d as f64;
    let mu = 2.0 * df.sqrt() * c / (a * b - c * c).sqrt();
    let s = c / b;
    let third = (a - c) / (2.0 * b) * (1.0 + s).abs().powi(3)
        + (a + c) / (2.0 * b) * (1.0 - s).abs().powi(3)
        + (1.0 - a / b) * s.abs().powi(3);
    let spread = a / b - s * s;
    let gamma = 0.56 * third / (spread.powf(1.5) * df.sqrt());
    Ok(CltBound { mu, gamma, gamma_warning: gamma >= 0.5 })
}

impl CltBound {
    /// `G_μ(α + γ) - γ`, clamped to `[0, 1]`.
    pub fn lower(&self, alpha: f64) -> f64 {
        (gdp_tradeoff(self.mu, alpha + self.gamma) - self.gamma).clamp(0.0, 1.0)
    }

    /// `G_μ(α - γ) + γ`, clamped to `[0, 1]`.
    pub fn upper(&self, alpha: f64) -> f64 {
        (gdp_tradeoff(self.mu, alpha - self.gamma) + self.gamma).clamp(0.0, 1.0)
    }

    /// The lower bound as a curve sampled on a uniform grid plus the point
    /// `1 - γ` where it reaches zero.
    pub fn lower_curve(&self, grid_points: usize) -> Result<TradeoffCurve> {
        ensure_param!(grid_points >= 2, "grid needs at least 2 points");
        let n = grid_points - 1;
        let mut alphas: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        alphas.push((1.0 - self.gamma).clamp(0.0, 1.0));
        alphas.sort_by(f64::total_cmp);
        alphas.dedup();
        let points: Vec<(f64, f64)> = alphas.iter().map(|&x| (x, self.lower(x))).collect();
        TradeoffCurve::from_points(&points)
    }

    /// Smallest margin by which `f` stays inside the sandwich over the grid
    /// points in `[γ, 1 - γ]`; negative if the bound is violated.
    pub fn sandwich_margin(&self, f: &TradeoffCurve, grid_points: usize) -> f64 {
        let n = grid_points.max(2) - 1;
        (0..=n)
            .map(|i| i as f64 / n as f64)
            .filter(|&x| x >= self.gamma && x <= 1.0 - self.gamma)
            .map(|x| {
                let y = f.eval_clamped(x);
                (y - self.lower(x)).min(self.upper(x) - y)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Output distributions of `d` independent ternary coordinates at `x = c·1`
/// and `x = -c·1`.
pub fn ternary_product_pair(a: f64, b: f64, c: f64, d: u32) -> Result<(DiscreteDist, DiscreteDist)> {
    let (p, q) = ternary_pair(a, b, c)?;
    Ok((p.power(d)?, q.power(d)?))
}

/// Per-user variance of the decoded ternary estimate, `ABd - ||x||²`.
pub fn analytic_mse_ternary(a: f64, b: f64, c: f64, d: usize, x_norm2: f64) -> Result<f64> {
    check_scales(a, b, c)?;
    Ok(a * b * d as f64 - x_norm2)
}

/// Debiasing factor of 2^k randomized response, `(e^ε + 2^k - 1) / (e^ε - 1)`.
pub fn sqkr_debias(eps: f64, k: u32) -> f64 {
    if eps == f64::INFINITY {
        return 1.0;
    }
    1.0 + 2f64.powi(k as i32) / eps.exp_m1()
}

/// Per-user SQKR variance `(d/k) κ² C² - ||x||²` with `κ` from [`sqkr_debias`].
pub fn analytic_mse_sqkr(eps: f64, k: u32, d: usize, norm_bound: f64, x_norm2: f64) -> Result<f64> {
    check_sqkr(eps, k, d, norm_bound)?;
    let kappa = sqkr_debias(eps, k);
    Ok(d as f64 / f64::from(k) * kappa * kappa * norm_bound * norm_bound - x_norm2)
}

/// Exact variance of the SQKR decoder, which also counts repeated coordinates
/// among the `k` samples: `(d/k) κ² C² + (κ (k-1)/k - 1) ||x||²`.
pub fn sqkr_variance_exact(eps: f64, k: u32, d: usize, norm_bound: f64, x_norm2: f64) -> Result<f64> {
    check_sqkr(eps, k, d, norm_bound)?;
    let kappa = sqkr_debias(eps, k);
    let kf = f64::from(k);
    Ok(d as f64 / kf * kappa * kappa * norm_bound * norm_bound + (kappa * (kf - 1.0) / kf - 1.0) * x_norm2)
}

/// Per-user variance of the sparsified Gaussian, `(B/A) σ² d + (B/A - 1) ||x||²`.
pub fn analytic_mse_gaussian_sparse(sigma: f64, a: f64, b: f64, d: usize, x_norm2: f64) -> Result<f64> {
    check_gaussian(sigma, a, b, 0.0, d)?;
    let ratio = b / a;
    Ok(ratio * sigma * sigma * d as f64 + (ratio - 1.0) * x_norm2)
}

/// Ternary scales meeting a μ-GDP budget under the CLT approximation at
/// sparsity ratio `r = A/B`, from `AB = 4dc²/μ² + c²`.
pub fn ternary_for_gdp_budget(mu: f64, r: f64, d: usize, norm_bound: f64) -> Result<(f64, f64)> {
    ensure_param!(mu > 0.0 && mu.is_finite(), "mu must be positive, got {mu}");
    ensure_param!(r > 0.0 && r <= 1.0, "sparsity ratio must lie in (0, 1], got {r}");
    ensure_param!(d >= 1, "dimension must be at least 1");
    let c = norm_bound / (d as f64).sqrt();
    let ab = 4.0 * d as f64 * c * c / (mu * mu) + c * c;
    let a = (r * ab).sqrt();
    if a <= c {
        return Err(Error::Infeasible(format!(
            "mu = {mu} at A/B = {r} needs mu^2 < 4dr/(1-r) = {}",
            4.0 * d as f64 * r / (1.0 - r)
        )));
    }
    Ok((a, a / r))
}
