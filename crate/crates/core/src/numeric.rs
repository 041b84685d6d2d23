//! Scalar numerics shared by every other module.
//!
//! Binomial probabilities are evaluated with Loader's saddle-point
//! decomposition (`stirlerr` + `bd0`), which keeps the relative error near
//! machine precision even for trial counts in the millions, and all tail sums
//! are accumulated in log space so that masses around 1e-136 (and far below)
//! survive intact.

use std::f64::consts::{LN_2, PI};

use crate::error::{check_probability, Error, Result};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;
const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Natural log of a probability, `value` in `[-inf, 0]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogProb(f64);

impl LogProb {
    pub const ZERO: LogProb = LogProb(f64::NEG_INFINITY);
    pub const ONE: LogProb = LogProb(0.0);

    /// Wraps a log-probability, clamping rounding overshoot above zero.
    pub fn new(value: f64) -> Self {
        debug_assert!(!value.is_nan());
        LogProb(value.min(0.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn prob(self) -> f64 {
        self.0.exp()
    }
}

/// `ln(e^a + e^b)` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(Σ e^x_i)` over a slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi.is_infinite() {
        return hi;
    }
    hi + xs.iter().map(|x| (x - hi).exp()).sum::<f64>().ln()
}

/// `ln(1 + e^x)`.
pub fn softplus(x: f64) -> f64 {
    if x > 35.0 {
        x + (-x).exp()
    } else if x < -35.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

// stirlerr(n) = ln(n!) - ln(sqrt(2 pi n) (n/e)^n) for n = 0..=15.
const STIRLERR_TABLE: [f64; 16] = [
    0.0,
    0.081_061_466_795_327_258_219_67,
    0.041_340_695_955_409_294_093_82,
    0.027_677_925_684_998_339_148_79,
    0.020_790_672_103_765_093_111_52,
    0.016_644_691_189_821_192_163_19,
    0.013_876_128_823_070_747_998_75,
    0.011_896_709_945_891_770_095_06,
    0.010_411_265_261_972_096_497_48,
    0.009_255_462_182_712_732_917_729,
    0.008_330_563_433_362_871_256_469,
    0.007_573_675_487_951_840_794_972,
    0.006_942_840_107_209_529_865_664,
    0.006_408_994_188_004_207_068_44,
    0.005_951_370_112_758_847_735_624,
    0.005_554_733_551_962_801_371_039,
];

fn stirlerr(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        return STIRLERR_TABLE[n as usize];
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term `x ln(x/np) + np - x`, evaluated by series near `x = np`.
fn bd0(x: f64, np: f64) -> f64 {
    if (x - np).abs() < 0.1 * (x + np) {
        let mut v = (x - np) / (x + np);
        let mut s = (x - np) * v;
        if s.abs() < f64::MIN_POSITIVE {
            return s;
        }
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / f64::from(2 * j + 1);
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / np).ln() + np - x
    }
}

fn binom_log_pmf_raw(k: f64, n: f64, p: f64, q: f64) -> f64 {
    if p == 0.0 {
        return if k == 0.0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if q == 0.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    if k == 0.0 {
        if n == 0.0 {
            return 0.0;
        }
        return if p < 0.1 { -bd0(n, n * q) - n * p } else { n * q.ln() };
    }
    if k == n {
        return if q < 0.1 { -bd0(n, n * p) - n * q } else { n * p.ln() };
    }
    let lc = stirlerr(n) - stirlerr(k) - stirlerr(n - k) - bd0(k, n * p) - bd0(n - k, n * q);
    let lf = LN_2PI + k.ln() + (-k / n).ln_1p();
    lc - 0.5 * lf
}

/// `ln P(Binom(trials, p) = k)`; `k` outside `[0, trials]` has probability 0.
pub fn binom_log_pmf(trials: u64, p: f64, k: i64) -> Result<LogProb> {
    check_probability("p", p)?;
    if k < 0 || k as u64 > trials {
        return Ok(LogProb::ZERO);
    }
    Ok(LogProb::new(binom_log_pmf_raw(k as f64, trials as f64, p, 1.0 - p)))
}

/// `P(Binom(trials, p) = k)`.
pub fn binom_pmf(trials: u64, p: f64, k: i64) -> Result<f64> {
    binom_log_pmf(trials, p, k).map(LogProb::prob)
}

/// `P(Binom(trials, p) <= k)`, clamped to exactly 1 at `k >= trials`.
pub fn binom_cdf(trials: u64, p: f64, k: i64) -> Result<f64> {
    check_probability("p", p)?;
    Ok(BinomialTable::new(trials, p)?.cdf(k))
}

/// `P(Binom(trials, p) > k)`.
pub fn binom_sf(trials: u64, p: f64, k: i64) -> Result<f64> {
    check_probability("p", p)?;
    Ok(BinomialTable::new(trials, p)?.sf(k))
}

/// Every pmf, cdf and survival value of one binomial law, in log space.
///
/// `cdf` and `sf` are accumulated from opposite ends so that both tails keep
/// full relative precision.
#[derive(Debug, Clone)]
pub struct BinomialTable {
    trials: u64,
    log_pmf: Vec<f64>,
    // log P(X <= k)
    log_cdf: Vec<f64>,
    // log P(X > k)
    log_sf: Vec<f64>,
}

impl BinomialTable {
    pub fn new(trials: u64, p: f64) -> Result<Self> {
        check_probability("p", p)?;
        let n = trials as usize;
        let log_pmf: Vec<f64> = (0..=n).map(|k| binom_log_pmf_raw(k as f64, trials as f64, p, 1.0 - p)).collect();
        let mut log_cdf = vec![0.0; n + 1];
        let mut acc = f64::NEG_INFINITY;
        for k in 0..=n {
            acc = log_add_exp(acc, log_pmf[k]);
            log_cdf[k] = acc.min(0.0);
        }
        log_cdf[n] = 0.0;
        let mut log_sf = vec![f64::NEG_INFINITY; n + 1];
        let mut acc = f64::NEG_INFINITY;
        for k in (0..n).rev() {
            acc = log_add_exp(acc, log_pmf[k + 1]);
            log_sf[k] = acc.min(0.0);
        }
        Ok(Self { trials, log_pmf, log_cdf, log_sf })
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn log_pmf(&self, k: i64) -> f64 {
        if k < 0 || k as u64 > self.trials {
            f64::NEG_INFINITY
        } else {
            self.log_pmf[k as usize]
        }
    }

    pub fn pmf(&self, k: i64) -> f64 {
        self.log_pmf(k).exp()
    }

    /// `ln P(X <= k)`.
    pub fn log_cdf(&self, k: i64) -> f64 {
        if k < 0 {
            f64::NEG_INFINITY
        } else if k as u64 >= self.trials {
            0.0
        } else {
            self.log_cdf[k as usize]
        }
    }

    /// `ln P(X > k)`.
    pub fn log_sf(&self, k: i64) -> f64 {
        if k < 0 {
            0.0
        } else if k as u64 >= self.trials {
            f64::NEG_INFINITY
        } else {
            self.log_sf[k as usize]
        }
    }

    pub fn cdf(&self, k: i64) -> f64 {
        self.log_cdf(k).exp()
    }

    pub fn sf(&self, k: i64) -> f64 {
        self.log_sf(k).exp()
    }
}

/// Full pmf of a sum of independent Bernoulli(p_i), by iterative convolution.
///
/// An empty list yields the point mass at 0.
pub fn poisson_binom_pmf(probs: &[f64]) -> Result<Vec<f64>> {
    let mut pmf = Vec::with_capacity(probs.len() + 1);
    pmf.push(1.0);
    for &p in probs {
        check_probability("p_i", p)?;
        pmf.push(0.0);
        for k in (1..pmf.len()).rev() {
            pmf[k] = pmf[k] * (1.0 - p) + pmf[k - 1] * p;
        }
        pmf[0] *= 1.0 - p;
    }
    Ok(pmf)
}

/// `P(PB(probs) = k)`.
pub fn poisson_binom_pmf_at(probs: &[f64], k: i64) -> Result<f64> {
    let pmf = poisson_binom_pmf(probs)?;
    Ok(usize::try_from(k).ok().and_then(|k| pmf.get(k).copied()).unwrap_or(0.0))
}

/// Standard normal cdf.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

/// `ln Φ(x)`, using the asymptotic tail series once `erfc` would underflow.
pub fn log_std_normal_cdf(x: f64) -> f64 {
    if x > -30.0 {
        return std_normal_cdf(x).ln();
    }
    let z = 1.0 / (x * x);
    // 1 - 1/x^2 + 3/x^4 - 15/x^6 + 105/x^8 - 945/x^10
    let series = 1.0 - z * (1.0 - z * (3.0 - z * (15.0 - z * (105.0 - z * 945.0))));
    -0.5 * x * x - (-x).ln() - LN_SQRT_2PI + series.ln()
}

// Acklam's rational approximation for the lower half of the normal quantile.
fn quantile_lower_approx(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] =
        [7.784_695_709_041_462e-3, 3.224_671_290_700_398e-1, 2.445_134_137_142_996, 3.754_408_661_907_416];
    const P_LOW: f64 = 0.024_25;
    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    }
}

/// Inverse of [`std_normal_cdf`] on the open interval `(0, 1)`.
///
/// The rational approximation is polished by one Halley step on the cdf,
/// which brings it to full double precision. `q` of exactly 0 or 1 is
/// rejected; callers clamp.
pub fn std_normal_quantile(q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidParameter(format!("normal quantile needs q in (0, 1), got {q}")));
    }
    // 1 - q is exact for q >= 0.5, so work in the lower tail.
    let (p, sign) = if q > 0.5 { (1.0 - q, -1.0) } else { (q, 1.0) };
    if p == 0.5 {
        return Ok(0.0);
    }
    let mut x = quantile_lower_approx(p);
    let e = std_normal_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x -= u / (1.0 + 0.5 * x * u);
    Ok(sign * x)
}

/// Lower-tail quantile from a log-probability, usable far below `f64::MIN_POSITIVE`.
pub fn std_normal_quantile_from_log(log_q: f64) -> Result<f64> {
    if log_q.is_nan() || log_q >= 0.0 {
        return Err(Error::InvalidParameter(format!("log-probability must be negative, got {log_q}")));
    }
    if log_q > -700.0 {
        return std_normal_quantile(log_q.exp());
    }
    if log_q == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    // Newton on ln Φ(x) = log_q with d/dx ln Φ(x) = φ(x)/Φ(x).
    let mut x = -(-2.0 * log_q).sqrt();
    for _ in 0..100 {
        let g = log_std_normal_cdf(x) - log_q;
        let z = 1.0 / (x * x);
        let mills = -x / (1.0 - z * (1.0 - z * (3.0 - z * 15.0)));
        let step = g / mills;
        x -= step;
        if step.abs() <= 1e-15 * x.abs() {
            break;
        }
    }
    Ok(x)
}

/// `log2` of a positive count, as used by the bit-accounting rules.
pub fn log2(x: f64) -> f64 {
    x.ln() / LN_2
}
