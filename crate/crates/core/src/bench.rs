//! Distributed mean estimation benchmark: N users encode bounded vectors, the
//! server averages the decoded estimates, and the squared error of the mean is
//! compared with the analytic variance.

use std::io::Write;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{ensure_param, Error, Result};
use crate::mechanisms::{
    analytic_mse_gaussian_sparse, analytic_mse_sqkr, analytic_mse_ternary, gaussian_mu, pure_dp_curve, sqkr_debias,
    ternary_clt_bound, ternary_for_gdp_budget, MechanismParams,
};
use crate::randomizers::{
    gaussian_sparse_decode, gaussian_sparse_encode, sqkr_decode, sqkr_encode, ternary_decode, ternary_encode,
    RandomSeed,
};
use crate::tradeoff::{curve_to_epsilon, gdp_curve, pure_dp_to_gdp, TradeoffCurve, DEFAULT_GDP_GRID};

fn default_trials() -> usize {
    100
}

/// How user vectors are drawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UserDistribution {
    /// Uniform on `[-c, c]^d`, then scaled into the L2 ball of radius `C`.
    #[default]
    UniformBox,
}

/// One mechanism to benchmark, with the rule that fixes its parameters.
/// Ternary and Gaussian scales use `c = C/√d` from the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mechanism", rename_all = "kebab-case")]
pub enum BenchEntry {
    Ternary {
        #[serde(rename = "A")]
        a: f64,
        #[serde(rename = "B")]
        b: f64,
    },
    /// Ternary with the bits and MSE of SQKR at `(eps, k)`.
    TernaryMatchSqkr {
        eps: f64,
        k: u32,
    },
    /// Ternary with `AB = c² + σ²` and `A/B = r`.
    TernaryMatchGaussian {
        sigma: f64,
        r: f64,
    },
    /// Ternary meeting a μ-GDP budget at `A/B = r`.
    TernaryGdpBudget {
        mu: f64,
        r: f64,
    },
    Sqkr {
        eps: f64,
        k: u32,
    },
    GaussianSparse {
        sigma: f64,
        #[serde(default = "one")]
        r: f64,
    },
    /// Noiseless baseline that sends `x` as is.
    Identity,
}

fn one() -> f64 {
    1.0
}

impl BenchEntry {
    pub fn rule(&self) -> &'static str {
        match self {
            Self::TernaryMatchSqkr { .. } => "match-sqkr-comm-and-mse",
            Self::TernaryMatchGaussian { .. } => "match-gaussian-ab",
            Self::TernaryGdpBudget { .. } => "gdp-budget",
            _ => "direct",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    #[serde(rename = "N")]
    pub users: usize,
    pub d: usize,
    #[serde(rename = "C")]
    pub norm_bound: f64,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub distribution: UserDistribution,
    pub mechanisms: Vec<BenchEntry>,
}

impl BenchConfig {
    /// `c = C / √d`, the per-coordinate bound.
    pub fn coordinate_bound(&self) -> f64 {
        self.norm_bound / (self.d as f64).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        ensure_param!(self.users >= 1, "N must be at least 1");
        ensure_param!(self.d >= 1, "d must be at least 1");
        ensure_param!(self.norm_bound > 0.0 && self.norm_bound.is_finite(), "C must be positive");
        ensure_param!(self.trials >= 2, "need at least 2 trials for a standard error");
        Ok(())
    }
}

/// One output row of the benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub mechanism: String,
    pub rule: String,
    pub params: serde_json::Value,
    #[serde(default, with = "crate::serde_float::option")]
    pub mu_gdp: Option<f64>,
    #[serde(default, with = "crate::serde_float::option")]
    pub gamma: Option<f64>,
    #[serde(default, with = "crate::serde_float::option")]
    pub eps_at_delta0: Option<f64>,
    #[serde(default, with = "crate::serde_float::option")]
    pub analytic_mse: Option<f64>,
    #[serde(default, with = "crate::serde_float::option")]
    pub empirical_mse: Option<f64>,
    #[serde(default, with = "crate::serde_float::option")]
    pub mse_stderr: Option<f64>,
    #[serde(default, with = "crate::serde_float::option")]
    pub bits_per_user: Option<f64>,
    /// Largest `|mean error| / standard error` over coordinates.
    #[serde(default, with = "crate::serde_float::option")]
    pub bias_max_z: Option<f64>,
    pub error: Option<String>,
}

pub const CSV_COLUMNS: [&str; 12] = [
    "mechanism",
    "rule",
    "params-json",
    "mu_gdp",
    "gamma",
    "eps_at_delta0",
    "analytic_mse",
    "empirical_mse",
    "mse_stderr",
    "bits_per_user",
    "bias_max_z",
    "error",
];

impl BenchRow {
    fn failed(entry: &BenchEntry, err: Error) -> Self {
        Self {
            mechanism: entry_name(entry).into(),
            rule: entry.rule().into(),
            params: serde_json::to_value(entry).unwrap_or_default(),
            mu_gdp: None,
            gamma: None,
            eps_at_delta0: None,
            analytic_mse: None,
            empirical_mse: None,
            mse_stderr: None,
            bits_per_user: None,
            bias_max_z: None,
            error: Some(err.to_string()),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_none()
    }

    fn csv_record(&self) -> Vec<String> {
        let num = |x: Option<f64>| match x {
            None => String::new(),
            Some(v) if v.is_finite() => format!("{v:.10e}"),
            Some(v) => v.to_string(),
        };
        vec![
            self.mechanism.clone(),
            self.rule.clone(),
            self.params.to_string(),
            num(self.mu_gdp),
            num(self.gamma),
            num(self.eps_at_delta0),
            num(self.analytic_mse),
            num(self.empirical_mse),
            num(self.mse_stderr),
            num(self.bits_per_user),
            num(self.bias_max_z),
            self.error.clone().unwrap_or_default(),
        ]
    }
}

/// Write result rows as CSV (no comment header).
pub fn write_rows_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_COLUMNS).map_err(io)?;
    for row in rows {
        w.write_record(row.csv_record()).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

fn entry_name(entry: &BenchEntry) -> &'static str {
    match entry {
        BenchEntry::Ternary { .. }
        | BenchEntry::TernaryMatchSqkr { .. }
        | BenchEntry::TernaryMatchGaussian { .. }
        | BenchEntry::TernaryGdpBudget { .. } => "ternary",
        BenchEntry::Sqkr { .. } => "sqkr",
        BenchEntry::GaussianSparse { .. } => "gaussian-sparse",
        BenchEntry::Identity => "identity",
    }
}

/// `N` vectors with `||x||∞ <= C/√d` and `||x||₂ <= C`.
pub fn generate_users(n: usize, d: usize, norm_bound: f64, seed: RandomSeed) -> Vec<Vec<f64>> {
    let c = norm_bound / (d as f64).sqrt();
    (0..n)
        .map(|i| {
            let mut rng = seed.derive(i as u64).rng();
            let mut x: Vec<f64> = (0..d).map(|_| rng.random_range(-c..=c)).collect();
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > norm_bound {
                let scale = norm_bound / norm;
                x.iter_mut().for_each(|v| *v *= scale);
            }
            x
        })
        .collect()
}

/// Ternary `(A, B)` with the expected bits and MSE of SQKR at `(eps, k)`:
/// `A/B = k/d` and `AB = κ² C² / k`.
pub fn match_ternary_to_sqkr(k: u32, eps: f64, d: usize, norm_bound: f64) -> Result<(f64, f64)> {
    ensure_param!(k >= 1 && k as usize <= d, "need 1 <= k <= d, got k = {k}, d = {d}");
    ensure_param!(eps > 0.0, "epsilon must be positive, got {eps}");
    let c = norm_bound / (d as f64).sqrt();
    let kappa = sqkr_debias(eps, k);
    let r = f64::from(k) / d as f64;
    let ab = kappa * kappa * norm_bound * norm_bound / f64::from(k);
    let a = (r * ab).sqrt();
    if !(a > c) {
        return Err(Error::Infeasible(format!("matching SQKR (k = {k}, eps = {eps}) gives A = {a} <= c = {c}")));
    }
    Ok((a, a / r))
}

/// Ternary `(A, B)` with `AB = c² + σ²` and `A/B = r`.
pub fn match_ternary_to_gaussian(sigma: f64, r: f64, d: usize, norm_bound: f64) -> Result<(f64, f64)> {
    ensure_param!(sigma > 0.0 && sigma.is_finite(), "sigma must be positive, got {sigma}");
    ensure_param!(r > 0.0 && r <= 1.0, "sparsity ratio must lie in (0, 1], got {r}");
    let c = norm_bound / (d as f64).sqrt();
    let a = (r * (c * c + sigma * sigma)).sqrt();
    if !(a > c) {
        return Err(Error::Infeasible(format!("A/B = {r} needs r > c²/(c²+σ²) = {}", c * c / (c * c + sigma * sigma))));
    }
    Ok((a, a / r))
}

#[derive(Debug, Clone, Copy)]
enum Resolved {
    Ternary { a: f64, b: f64 },
    Sqkr { eps: f64, k: u32 },
    Gaussian { sigma: f64, a: f64, b: f64 },
    Identity,
}

struct Plan {
    resolved: Resolved,
    row: BenchRow,
}

fn gdp_epsilon(mu: f64) -> Result<f64> {
    if !mu.is_finite() {
        return Ok(f64::INFINITY);
    }
    curve_to_epsilon(&gdp_curve(mu, DEFAULT_GDP_GRID)?, 0.0)
}

fn plan(entry: &BenchEntry, cfg: &BenchConfig) -> Result<Plan> {
    let (d, big_c) = (cfg.d, cfg.norm_bound);
    let c = cfg.coordinate_bound();
    let resolved = match *entry {
        BenchEntry::Ternary { a, b } => Resolved::Ternary { a, b },
        BenchEntry::TernaryMatchSqkr { eps, k } => {
            let (a, b) = match_ternary_to_sqkr(k, eps, d, big_c)?;
            Resolved::Ternary { a, b }
        }
        BenchEntry::TernaryMatchGaussian { sigma, r } => {
            let (a, b) = match_ternary_to_gaussian(sigma, r, d, big_c)?;
            Resolved::Ternary { a, b }
        }
        BenchEntry::TernaryGdpBudget { mu, r } => {
            let (a, b) = ternary_for_gdp_budget(mu, r, d, big_c)?;
            Resolved::Ternary { a, b }
        }
        BenchEntry::Sqkr { eps, k } => Resolved::Sqkr { eps, k },
        BenchEntry::GaussianSparse { sigma, r } => {
            ensure_param!(r > 0.0 && r <= 1.0, "sparsity ratio must lie in (0, 1], got {r}");
            Resolved::Gaussian { sigma, a: r, b: 1.0 }
        }
        BenchEntry::Identity => Resolved::Identity,
    };

    let mut row = BenchRow::failed(entry, Error::InvalidParameter(String::new()));
    row.error = None;
    match resolved {
        Resolved::Ternary { a, b } => {
            let params = MechanismParams::Ternary { a, b, c };
            params.validate()?;
            let bound = ternary_clt_bound(a, b, c, d as u64)?;
            row.params = json!({ "A": a, "B": b, "c": c, "d": d, "input": entry });
            row.mu_gdp = Some(bound.mu);
            row.gamma = Some(bound.gamma);
            row.eps_at_delta0 = Some(gdp_epsilon(bound.mu)?);
            row.bits_per_user = Some(params.comm_bits(d)?);
        }
        Resolved::Sqkr { eps, k } => {
            let params = MechanismParams::Sqkr { eps, k, d, norm_bound: big_c };
            params.validate()?;
            row.params = json!({ "eps": eps, "k": k, "d": d, "C": big_c });
            row.mu_gdp = Some(pure_dp_to_gdp(eps)?);
            row.eps_at_delta0 = Some(eps);
            row.bits_per_user = Some(params.comm_bits(d)?);
        }
        Resolved::Gaussian { sigma, a, b } => {
            let params = MechanismParams::GaussianSparse { sigma, a, b, c, d };
            params.validate()?;
            let mu = gaussian_mu(sigma, c, d);
            row.params = json!({ "sigma": sigma, "A/B": a / b, "c": c, "d": d });
            row.mu_gdp = Some(mu);
            row.eps_at_delta0 = Some(gdp_epsilon(mu)?);
            row.bits_per_user = Some(params.comm_bits(d)?);
        }
        Resolved::Identity => {
            row.params = json!({ "d": d });
            row.mu_gdp = Some(f64::INFINITY);
            row.eps_at_delta0 = Some(f64::INFINITY);
            row.bits_per_user = Some(32.0 * d as f64);
        }
    }
    Ok(Plan { resolved, row })
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Decoded estimate of one user and the analytic variance of that estimate.
fn run_user(resolved: Resolved, x: &[f64], c: f64, big_c: f64, seed: RandomSeed) -> Result<(Vec<f64>, f64)> {
    let d = x.len();
    Ok(match resolved {
        Resolved::Ternary { a, b } => {
            (ternary_decode(&ternary_encode(x, a, b, c, seed)?, b)?, analytic_mse_ternary(a, b, c, d, norm2(x))?)
        }
        Resolved::Sqkr { eps, k } => (
            sqkr_decode(&sqkr_encode(x, eps, k, big_c, seed)?, eps, big_c)?,
            analytic_mse_sqkr(eps, k, d, big_c, norm2(x))?,
        ),
        Resolved::Gaussian { sigma, a, b } => (
            gaussian_sparse_decode(&gaussian_sparse_encode(x, sigma, a, b, seed)?)?,
            analytic_mse_gaussian_sparse(sigma, a, b, d, norm2(x))?,
        ),
        Resolved::Identity => (x.to_vec(), 0.0),
    })
}

struct TrialStat {
    sq_err: f64,
    analytic: f64,
    err: Vec<f64>,
}

fn run_trial(plans: &[&Plan], cfg: &BenchConfig, root: RandomSeed, trial: u64) -> Result<Vec<TrialStat>> {
    let (n, d) = (cfg.users, cfg.d);
    let c = cfg.coordinate_bound();
    let users = generate_users(n, d, cfg.norm_bound, root.derive(0).derive(trial));
    let mut truth = vec![0.0; d];
    for x in &users {
        truth.iter_mut().zip(x).for_each(|(t, v)| *t += v / n as f64);
    }
    plans
        .iter()
        .enumerate()
        .map(|(m, plan)| {
            let seed = root.derive(1 + m as u64).derive(trial);
            let mut mean = vec![0.0; d];
            let mut analytic = 0.0;
            for (i, x) in users.iter().enumerate() {
                let (est, var) = run_user(plan.resolved, x, c, cfg.norm_bound, seed.derive(i as u64))?;
                mean.iter_mut().zip(&est).for_each(|(m, e)| *m += e / n as f64);
                analytic += var / (n * n) as f64;
            }
            let err: Vec<f64> = mean.iter().zip(&truth).map(|(m, t)| m - t).collect();
            Ok(TrialStat { sq_err: norm2(&err), analytic, err })
        })
        .collect()
}

/// Run every configured mechanism over `trials` independent rounds.
///
/// Infeasible or invalid entries become rows with `error` set; the others
/// still run. Results do not depend on the number of threads.
pub fn run_mean_estimation(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    let planned: Vec<std::result::Result<Plan, Box<BenchRow>>> =
        cfg.mechanisms.iter().map(|e| plan(e, cfg).map_err(|err| Box::new(BenchRow::failed(e, err)))).collect();
    let plans: Vec<&Plan> = planned.iter().filter_map(|p| p.as_ref().ok()).collect();
    let root = RandomSeed::new(cfg.seed);

    let per_trial: Vec<Vec<TrialStat>> =
        (0..cfg.trials as u64).into_par_iter().map(|t| run_trial(&plans, cfg, root, t)).collect::<Result<_>>()?;

    let t = cfg.trials as f64;
    let mut finished = Vec::with_capacity(plans.len());
    for (m, plan) in plans.iter().enumerate() {
        let stats: Vec<&TrialStat> = per_trial.iter().map(|s| &s[m]).collect();
        let mean_sq = stats.iter().map(|s| s.sq_err).sum::<f64>() / t;
        let var_sq = stats.iter().map(|s| (s.sq_err - mean_sq).powi(2)).sum::<f64>() / (t - 1.0);
        let analytic = stats.iter().map(|s| s.analytic).sum::<f64>() / t;
        let bias_max_z = (0..cfg.d)
            .map(|j| {
                let mean = stats.iter().map(|s| s.err[j]).sum::<f64>() / t;
                let var = stats.iter().map(|s| (s.err[j] - mean).powi(2)).sum::<f64>() / (t - 1.0);
                if var > 0.0 {
                    mean.abs() / (var / t).sqrt()
                } else if mean == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max);
        let mut row = plan.row.clone();
        row.analytic_mse = Some(analytic);
        row.empirical_mse = Some(mean_sq);
        row.mse_stderr = Some((var_sq / t).sqrt());
        row.bias_max_z = Some(bias_max_z);
        finished.push(row);
    }

    let mut finished = finished.into_iter();
    Ok(planned
        .into_iter()
        .map(|p| match p {
            Ok(_) => finished.next().expect("one result per plan"),
            Err(row) => *row,
        })
        .collect())
}

/// Preset comparison sweeps, selected on the command line as `fig4-left`,
/// `fig4-middle` and `fig4-right`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Ternary matched to SQKR at k = 10, ε ∈ {1, 2, 5}.
    SqkrMatch,
    /// Gaussian σ grid against ternary with `AB = c² + σ²`.
    GaussianSweep,
    /// Ternary `A`, `A/B` grid against Gaussian with the implied σ.
    TernarySweep,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig4-left" => Ok(Self::SqkrMatch),
            "fig4-middle" => Ok(Self::GaussianSweep),
            "fig4-right" => Ok(Self::TernarySweep),
            other => Err(Error::InvalidParameter(format!(
                "unknown preset {other:?}; expected fig4-left, fig4-middle or fig4-right"
            ))),
        }
    }
}

pub const SWEEP_SQKR_EPS: [f64; 3] = [1.0, 2.0, 5.0];
pub const SWEEP_SQKR_K: u32 = 10;
pub const SWEEP_SIGMAS: [f64; 9] = [2.0 / 5.0, 0.5, 2.0 / 3.0, 1.0, 2.0, 4.0, 6.0, 8.0, 10.0];
pub const SWEEP_RATIOS: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];
pub const SWEEP_A_OVER_C: [f64; 4] = [5.0, 10.0, 20.0, 30.0];

impl Preset {
    /// `N = 1000`, `d = 250`, `C = 1`.
    pub fn config(self, trials: usize, seed: u64) -> BenchConfig {
        let (d, big_c) = (250usize, 1.0);
        let c = big_c / (d as f64).sqrt();
        let mechanisms = match self {
            Self::SqkrMatch => SWEEP_SQKR_EPS
                .iter()
                .flat_map(|&eps| {
                    [BenchEntry::Sqkr { eps, k: SWEEP_SQKR_K }, BenchEntry::TernaryMatchSqkr { eps, k: SWEEP_SQKR_K }]
                })
                .collect(),
            Self::GaussianSweep => SWEEP_SIGMAS
                .iter()
                .flat_map(|&sigma| {
                    SWEEP_RATIOS.iter().flat_map(move |&r| {
                        [BenchEntry::GaussianSparse { sigma, r }, BenchEntry::TernaryMatchGaussian { sigma, r }]
                    })
                })
                .collect(),
            Self::TernarySweep => SWEEP_A_OVER_C
                .iter()
                .flat_map(|&m| {
                    SWEEP_RATIOS.iter().flat_map(move |&r| {
                        let (a, b) = (m * c, m * c / r);
                        let sigma = (a * b - c * c).sqrt();
                        [BenchEntry::Ternary { a, b }, BenchEntry::GaussianSparse { sigma, r: 1.0 }]
                    })
                })
                .collect(),
        };
        BenchConfig {
            users: 1000,
            d,
            norm_bound: big_c,
            trials,
            seed,
            distribution: UserDistribution::UniformBox,
            mechanisms,
        }
    }
}

/// Tradeoff curves to plot for a finished row: the GDP curve (and for ternary
/// the CLT lower bound) or the ε-DP curve of SQKR.
pub fn row_curves(row: &BenchRow) -> Result<Vec<(String, TradeoffCurve)>> {
    let mu = row.mu_gdp.ok_or_else(|| Error::InvalidParameter("row has no privacy parameters".into()))?;
    match row.mechanism.as_str() {
        "sqkr" => {
            let eps = row.eps_at_delta0.unwrap_or(f64::INFINITY);
            Ok(vec![("sqkr".into(), pure_dp_curve(eps)?)])
        }
        "ternary" => {
            let p = &row.params;
            let field = |k: &str| p[k].as_f64().ok_or_else(|| Error::InvalidParameter(format!("row lacks {k}")));
            let bound = ternary_clt_bound(field("A")?, field("B")?, field("c")?, p["d"].as_u64().unwrap_or(1))?;
            Ok(vec![
                ("ternary-gdp".into(), gdp_curve(mu, DEFAULT_GDP_GRID)?),
                ("ternary-clt-lower".into(), bound.lower_curve(DEFAULT_GDP_GRID)?),
            ])
        }
        "identity" => Ok(vec![("identity".into(), TradeoffCurve::no_privacy())]),
        other => Ok(vec![(other.to_string(), gdp_curve(mu, DEFAULT_GDP_GRID)?)]),
    }
}
