//! Sampling versions of the mechanisms with unbiased decoders.
//!
//! Every encoder takes an explicit [`RandomSeed`], so a run is reproducible
//! bit for bit no matter how work is scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_param, Error, Result};
use crate::mechanisms::{cldp_scale, sqkr_debias};
use crate::numeric::log2;

/// Seed plus substream id for a ChaCha8 generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomSeed {
    pub seed: u64,
    pub stream: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RandomSeed {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }

    /// Child substream for counter `index`; `derive(t).derive(u)` names the
    /// stream of user `u` in trial `t`.
    pub fn derive(&self, index: u64) -> Self {
        Self { seed: self.seed, stream: splitmix64(self.stream ^ splitmix64(index)) }
    }
}

/// What a user sends: a mechanism tag plus sparse symbols or values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedVector {
    pub mechanism: String,
    pub dim: usize,
    pub indices: Vec<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub symbols: Vec<i8>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values: Vec<f64>,
    pub bit_cost: f64,
}

impl EncodedVector {
    fn expect(&self, mechanism: &str) -> Result<()> {
        ensure_param!(self.mechanism == mechanism, "cannot decode a {} payload as {mechanism}", self.mechanism);
        Ok(())
    }

    /// Scatter `scale · symbol` into a dense vector.
    fn scatter(&self, scale: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dim];
        for (&j, &s) in self.indices.iter().zip(&self.symbols) {
            let slot = out
                .get_mut(j as usize)
                .ok_or_else(|| Error::InvalidParameter(format!("index {j} outside dimension {}", self.dim)))?;
            *slot += scale * f64::from(s);
        }
        Ok(out)
    }

    pub fn to_json_line(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

fn check_bound(x: &[f64], c: f64) -> Result<()> {
    ensure_param!(!x.is_empty(), "input vector is empty");
    let slack = c * (1.0 + 1e-12);
    if let Some((j, v)) = x.iter().enumerate().find(|(_, v)| !(v.abs() <= slack)) {
        return Err(Error::InvalidParameter(format!("|x[{j}]| = {} exceeds c = {c}", v.abs())));
    }
    Ok(())
}

fn dense_bits(d: usize) -> f64 {
    d as f64
}

fn sparse_bits(d: usize, nonzero: usize, value_bits: f64) -> f64 {
    (log2(d as f64) + value_bits) * nonzero as f64
}

/// Ternary compressor: each coordinate independently becomes `+1` w.p.
/// `(A+x)/(2B)`, `-1` w.p. `(A-x)/(2B)` and `0` otherwise.
pub fn ternary_encode(x: &[f64], a: f64, b: f64, c: f64, seed: RandomSeed) -> Result<EncodedVector> {
    ensure_param!(c > 0.0 && a > c && b >= a, "need B >= A > c > 0, got A = {a}, B = {b}, c = {c}");
    check_bound(x, c)?;
    let mut rng = seed.rng();
    let (mut indices, mut symbols) = (Vec::new(), Vec::new());
    for (j, &v) in x.iter().enumerate() {
        let u: f64 = rng.random();
        let up = (a + v) / (2.0 * b);
        let down = (a - v) / (2.0 * b);
        let symbol = if u < up {
            1
        } else if u < up + down {
            -1
        } else {
            continue;
        };
        indices.push(j as u32);
        symbols.push(symbol);
    }
    let bit_cost = sparse_bits(x.len(), indices.len(), 1.0);
    Ok(EncodedVector { mechanism: "ternary".into(), dim: x.len(), indices, symbols, values: vec![], bit_cost })
}

pub fn ternary_decode(enc: &EncodedVector, b: f64) -> Result<Vec<f64>> {
    enc.expect("ternary")?;
    enc.scatter(b)
}

fn sign_encode(name: &str, x: &[f64], a: f64, c: f64, seed: RandomSeed) -> Result<EncodedVector> {
    ensure_param!(c > 0.0 && a >= c, "need A >= c > 0, got A = {a}, c = {c}");
    check_bound(x, c)?;
    let mut rng = seed.rng();
    let symbols: Vec<i8> = x.iter().map(|&v| if rng.random::<f64>() < (a + v) / (2.0 * a) { 1 } else { -1 }).collect();
    Ok(EncodedVector {
        mechanism: name.into(),
        dim: x.len(),
        indices: (0..x.len() as u32).collect(),
        symbols,
        values: vec![],
        bit_cost: dense_bits(x.len()),
    })
}

/// Stochastic sign: `+1` w.p. `(A+x)/(2A)`, else `-1`.
pub fn sto_sign_encode(x: &[f64], a: f64, c: f64, seed: RandomSeed) -> Result<EncodedVector> {
    ensure_param!(a > c, "A must exceed c, got A = {a}, c = {c}");
    sign_encode("sto-sign", x, a, c, seed)
}

pub fn sto_sign_decode(enc: &EncodedVector, a: f64) -> Result<Vec<f64>> {
    enc.expect("sto-sign")?;
    enc.scatter(a)
}

/// CLDP∞: `+1` w.p. `1/2 + (x/2c)(e^ε-1)/(e^ε+1)`, else `-1`.
pub fn cldp_encode(x: &[f64], eps: f64, c: f64, seed: RandomSeed) -> Result<EncodedVector> {
    ensure_param!(eps > 0.0, "epsilon must be positive, got {eps}");
    sign_encode("cldp", x, cldp_scale(eps, c), c, seed)
}

pub fn cldp_decode(enc: &EncodedVector, eps: f64, c: f64) -> Result<Vec<f64>> {
    enc.expect("cldp")?;
    enc.scatter(cldp_scale(eps, c))
}

/// Ternarize: `sign(x)` w.p. `|x|/B`, else `0`, with `sign(0) = +1`.
pub fn ternarize_encode(x: &[f64], b: f64, c: f64, seed: RandomSeed) -> Result<EncodedVector> {
    ensure_param!(c > 0.0 && b > c, "need B > c > 0, got B = {b}, c = {c}");
    check_bound(x, c)?;
    let mut rng = seed.rng();
    let (mut indices, mut symbols) = (Vec::new(), Vec::new());
    for (j, &v) in x.iter().enumerate() {
        if rng.random::<f64>() < v.abs() / b {
            indices.push(j as u32);
            symbols.push(if v < 0.0 { -1 } else { 1 });
        }
    }
    let bit_cost = sparse_bits(x.len(), indices.len(), 1.0);
    Ok(EncodedVector { mechanism: "ternarize".into(), dim: x.len(), indices, symbols, values: vec![], bit_cost })
}

pub fn ternarize_decode(enc: &EncodedVector, b: f64) -> Result<Vec<f64>> {
    enc.expect("ternarize")?;
    enc.scatter(b)
}

/// `x + Binom(M, p)` for an integer input in `{0, ..., l}`.
pub fn binomial_noise_encode(x: u64, m: u64, p: f64, l: u64, seed: RandomSeed) -> Result<u64> {
    ensure_param!(m >= 1, "M must be at least 1");
    ensure_param!(x <= l, "input {x} outside {{0, ..., {l}}}");
    let noise = Binomial::new(m, p).map_err(|e| Error::InvalidParameter(format!("binomial noise: {e}")))?;
    Ok(x + noise.sample(&mut seed.rng()))
}

/// Unbiased estimate `Z - Mp` of the input.
pub fn binomial_noise_decode(z: u64, m: u64, p: f64) -> f64 {
    z as f64 - m as f64 * p
}

/// `p(x) = 1/2 + (θ/c) x`, the affine success probability of the binomial mechanism.
pub fn affine_probability(theta: f64, c: f64) -> impl Fn(f64) -> f64 {
    move |x| 0.5 + theta / c * x
}

/// One `Binom(M, p(x))` draw.
pub fn binomial_mech_encode(x: f64, m: u64, p_of_x: impl Fn(f64) -> f64, seed: RandomSeed) -> Result<u64> {
    ensure_param!(m >= 1, "M must be at least 1");
    let p = p_of_x(x);
    ensure_param!((0.0..=1.0).contains(&p), "success probability p({x}) = {p} outside [0, 1]");
    let draw = Binomial::new(m, p).map_err(|e| Error::InvalidParameter(format!("binomial mechanism: {e}")))?;
    Ok(draw.sample(&mut seed.rng()))
}

/// Unbiased estimate `(Z/M - 1/2) c / θ` under [`affine_probability`].
pub fn binomial_mech_decode(z: u64, m: u64, theta: f64, c: f64) -> f64 {
    (z as f64 / m as f64 - 0.5) * c / theta
}

/// SQKR: 1-bit stochastic quantization to `±c`, `k` coordinates sampled with
/// replacement, then 2^k randomized response on the k-bit message.
pub fn sqkr_encode(x: &[f64], eps: f64, k: u32, norm_bound: f64, seed: RandomSeed) -> Result<EncodedVector> {
    ensure_param!(k >= 1, "k must be at least 1");
    ensure_param!(eps > 0.0, "epsilon must be positive, got {eps}");
    let d = x.len();
    ensure_param!(d >= 1 && d <= u32::MAX as usize, "dimension {d} unsupported");
    let c = norm_bound / (d as f64).sqrt();
    check_bound(x, c)?;
    let mut rng = seed.rng();
    let indices: Vec<u32> = (0..k).map(|_| rng.random_range(0..d as u32)).collect();
    let truth: Vec<i8> =
        indices.iter().map(|&j| if rng.random::<f64>() < (c + x[j as usize]) / (2.0 * c) { 1 } else { -1 }).collect();
    // P(keep) = e^ε / (e^ε + 2^k - 1)
    let others = 2f64.powi(k as i32) - 1.0;
    let keep = if eps == f64::INFINITY { 1.0 } else { 1.0 / (1.0 + others * (-eps).exp()) };
    let symbols = if rng.random::<f64>() < keep {
        truth
    } else {
        loop {
            let candidate: Vec<i8> = (0..k).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
            if candidate != truth {
                break candidate;
            }
        }
    };
    let bit_cost = sparse_bits(d, k as usize, 1.0);
    Ok(EncodedVector { mechanism: "sqkr".into(), dim: d, indices, symbols, values: vec![], bit_cost })
}

/// `(d/k) Σ_s κ c y_s e_{j_s}`, with `κ` the randomized-response debiasing factor.
pub fn sqkr_decode(enc: &EncodedVector, eps: f64, norm_bound: f64) -> Result<Vec<f64>> {
    enc.expect("sqkr")?;
    let k = enc.indices.len();
    ensure_param!(k >= 1 && k == enc.symbols.len(), "malformed SQKR payload");
    let d = enc.dim as f64;
    let c = norm_bound / d.sqrt();
    enc.scatter(d / k as f64 * sqkr_debias(eps, k as u32) * c)
}

/// Sparsified Gaussian: each coordinate is kept w.p. `A/B` as
/// `(B/A)(x + N(0, σ²))`.
pub fn gaussian_sparse_encode(x: &[f64], sigma: f64, a: f64, b: f64, seed: RandomSeed) -> Result<EncodedVector> {
    ensure_param!(sigma >= 0.0 && sigma.is_finite(), "sigma must be finite and nonnegative, got {sigma}");
    ensure_param!(a > 0.0 && b >= a, "need 0 < A <= B, got A = {a}, B = {b}");
    ensure_param!(!x.is_empty(), "input vector is empty");
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::InvalidParameter(format!("gaussian noise: {e}")))?;
    let mut rng = seed.rng();
    let ratio = a / b;
    let (mut indices, mut values) = (Vec::new(), Vec::new());
    for (j, &v) in x.iter().enumerate() {
        if ratio >= 1.0 || rng.random::<f64>() < ratio {
            indices.push(j as u32);
            values.push((v + noise.sample(&mut rng)) / ratio);
        }
    }
    let bit_cost = sparse_bits(x.len(), indices.len(), 32.0);
    Ok(EncodedVector { mechanism: "gaussian-sparse".into(), dim: x.len(), indices, symbols: vec![], values, bit_cost })
}

pub fn gaussian_sparse_decode(enc: &EncodedVector) -> Result<Vec<f64>> {
    enc.expect("gaussian-sparse")?;
    ensure_param!(enc.indices.len() == enc.values.len(), "malformed Gaussian payload");
    let mut out = vec![0.0; enc.dim];
    for (&j, &v) in enc.indices.iter().zip(&enc.values) {
        *out.get_mut(j as usize)
            .ok_or_else(|| Error::InvalidParameter(format!("index {j} outside dimension {}", enc.dim)))? = v;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_output() {
        let x = [0.05, -0.02, 0.0, 0.09];
        let s = RandomSeed { seed: 7, stream: 3 };
        assert_eq!(ternary_encode(&x, 0.2, 0.5, 0.1, s).unwrap(), ternary_encode(&x, 0.2, 0.5, 0.1, s).unwrap());
        assert_eq!(sqkr_encode(&x, 1.0, 3, 0.2, s).unwrap(), sqkr_encode(&x, 1.0, 3, 0.2, s).unwrap());
        let other = RandomSeed { seed: 7, stream: 4 };
        let runs: Vec<_> = (0..20).map(|i| ternary_encode(&x, 0.2, 0.5, 0.1, s.derive(i)).unwrap()).collect();
        assert!(runs.windows(2).any(|w| w[0] != w[1]));
        assert_ne!(s.derive(1), other.derive(1));
    }

    #[test]
    fn derive_is_a_function_of_the_counter() {
        let root = RandomSeed::new(42);
        assert_eq!(root.derive(5).derive(9), root.derive(5).derive(9));
        assert_ne!(root.derive(5).derive(9), root.derive(9).derive(5));
    }

    #[test]
    fn domain_violations_are_rejected() {
        let s = RandomSeed::new(1);
        assert!(ternary_encode(&[0.2], 0.5, 1.0, 0.1, s).is_err());
        assert!(sto_sign_encode(&[0.1], 0.1, 0.1, s).is_err());
        assert!(binomial_noise_encode(9, 500, 0.5, 8, s).is_err());
        assert!(binomial_mech_encode(1.0, 4, affine_probability(0.6, 1.0), s).is_err());
        assert!(sqkr_encode(&[0.9, 0.0], 1.0, 0, 1.0, s).is_err());
        assert!(gaussian_sparse_encode(&[0.1], -1.0, 1.0, 1.0, s).is_err());
        let enc = ternary_encode(&[0.05], 0.2, 0.5, 0.1, s).unwrap();
        assert!(sto_sign_decode(&enc, 0.2).is_err());
    }

    #[test]
    fn ternarize_zero_input_sends_nothing() {
        let enc = ternarize_encode(&[0.0; 16], 1.0, 0.5, RandomSeed::new(3)).unwrap();
        assert!(enc.indices.is_empty());
        assert_eq!(enc.bit_cost, 0.0);
    }

    #[test]
    fn cldp_is_nearly_deterministic_at_large_epsilon() {
        let x = [0.3, -0.3, 0.3, -0.3];
        let enc = cldp_encode(&x, 20.0, 0.3, RandomSeed::new(11)).unwrap();
        assert_eq!(enc.symbols, vec![1, -1, 1, -1]);
        // P(+1) = (A + x)/(2A) approaches 1/2 + x/(2c)
        let a = cldp_scale(20.0, 0.3);
        for v in [-0.3, -0.1, 0.0, 0.2] {
            assert!(((a + v) / (2.0 * a) - (0.5 + v / 0.6)).abs() < 1e-8);
        }
    }

    #[test]
    fn gaussian_without_noise_or_sparsity_is_identity() {
        let x = [0.3, -0.2, 0.01];
        let enc = gaussian_sparse_encode(&x, 0.0, 1.0, 1.0, RandomSeed::new(5)).unwrap();
        assert_eq!(gaussian_sparse_decode(&enc).unwrap(), x.to_vec());
        assert!((enc.bit_cost - 3.0 * (3f64.log2() + 32.0)).abs() < 1e-12);
    }

    #[test]
    fn binomial_mechanism_with_one_trial_is_sto_sign() {
        // M = 1 and p(x) = 1/2 + x/(2A): P(Z = 1) = (A + x)/(2A)
        let (a, x) = (0.5, 0.2);
        let p = affine_probability(1.0 / (2.0 * a) * 0.1, 0.1);
        assert!((p(x) - (a + x) / (2.0 * a)).abs() < 1e-15);
        let flat = affine_probability(0.0, 1.0);
        let s = RandomSeed::new(8);
        assert_eq!(binomial_mech_encode(-0.7, 16, &flat, s).unwrap(), binomial_mech_encode(0.7, 16, &flat, s).unwrap());
    }

    #[test]
    fn json_line_round_trip() {
        let enc = sqkr_encode(&[0.1, -0.1, 0.0, 0.05], 2.0, 2, 0.2, RandomSeed::new(9)).unwrap();
        let line = enc.to_json_line().unwrap();
        assert!(!line.contains('\n'));
        let back: EncodedVector = serde_json::from_str(&line).unwrap();
        assert_eq!(back, enc);
        assert!((enc.bit_cost - 2.0 * (2.0 + 1.0)).abs() < 1e-12);
    }
}
