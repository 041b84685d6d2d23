//! Exact tradeoff functions of finite distribution pairs via the
//! Neyman–Pearson lemma.
//!
//! Outcomes are ranked by likelihood ratio `Q(k)/P(k)` (outcomes with
//! `P(k) = 0 < Q(k)` rank first). Rejecting the top-ranked outcomes, with
//! randomization inside the boundary group, is the most powerful test at each
//! level, so the tradeoff curve is the polyline through the cumulative
//! `(P(rejected), 1 - Q(rejected))` pairs. Outcomes with equal ratio form one
//! group and contribute a single segment.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::curve::{TradeoffCurve, Vertex};
use crate::error::{Error, Result};

const SUM_TOL: f64 = 1e-12;
const TIE_TOL: f64 = 1e-12;

/// A finite distribution over integer-labelled outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDist")]
pub struct DiscreteDist {
    support: Vec<i64>,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
struct RawDist {
    support: Vec<i64>,
    probs: Vec<f64>,
}

impl TryFrom<RawDist> for DiscreteDist {
    type Error = Error;

    fn try_from(raw: RawDist) -> Result<Self> {
        Self::new(raw.support, raw.probs)
    }
}

impl DiscreteDist {
    pub fn new(support: Vec<i64>, probs: Vec<f64>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::InvalidDistribution("empty support".into()));
        }
        if support.len() != probs.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} labels but {} probabilities",
                support.len(),
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidDistribution(format!("negative or non-finite probability {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
        }
        let mut sorted = support.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidDistribution("duplicate support labels".into()));
        }
        Ok(Self { support, probs })
    }

    /// Point mass at `label`.
    pub fn point(label: i64) -> Self {
        Self { support: vec![label], probs: vec![1.0] }
    }

    /// Bernoulli(p) on `{0, 1}`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new(vec![0, 1], vec![1.0 - p, p])
    }

    pub fn support(&self) -> &[i64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// The same law with every label moved by `offset`.
    pub fn shifted(&self, offset: i64) -> Self {
        Self { support: self.support.iter().map(|k| k + offset).collect(), probs: self.probs.clone() }
    }

    /// Law of `d` independent copies; outcomes are labelled by their
    /// mixed-radix index over this distribution's support order.
    pub fn power(&self, d: u32) -> Result<Self> {
        let n = self.probs.len() as u128;
        if d == 0 || n.checked_pow(d).map_or(true, |size| size > (1 << 26)) {
            return Err(Error::InvalidParameter(format!("product of {d} copies over {n} outcomes is too large")));
        }
        let mut probs = vec![1.0];
        for _ in 0..d {
            probs = probs.iter().flat_map(|a| self.probs.iter().map(move |b| a * b)).collect();
        }
        let support = (0..probs.len() as i64).collect();
        Ok(Self { support, probs })
    }
}

/// Exact `T(P, Q)`: the least type II error under `Q` at each type I level under `P`.
pub fn np_tradeoff(p: &DiscreteDist, q: &DiscreteDist) -> Result<TradeoffCurve> {
    let mut joint: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    for (&k, &w) in p.support.iter().zip(&p.probs) {
        joint.entry(k).or_default().0 += w;
    }
    for (&k, &w) in q.support.iter().zip(&q.probs) {
        joint.entry(k).or_default().1 += w;
    }

    // (log likelihood ratio, P mass, Q mass)
    let mut outcomes: Vec<(f64, f64, f64)> = joint
        .into_values()
        .filter(|&(a, b)| a > 0.0 || b > 0.0)
        .map(|(a, b)| {
            let llr = if a == 0.0 {
                f64::INFINITY
            } else if b == 0.0 {
                f64::NEG_INFINITY
            } else {
                b.ln() - a.ln()
            };
            (llr, a, b)
        })
        .collect();
    if outcomes.is_empty() {
        return Err(Error::InvalidDistribution("no outcome carries mass".into()));
    }
    outcomes.sort_by(|x, y| y.0.total_cmp(&x.0));

    let mut groups: Vec<(f64, f64)> = Vec::new();
    let mut head = f64::NAN;
    for (llr, a, b) in outcomes {
        let same =
            groups.last().is_some() && (llr == head || (llr.is_finite() && head.is_finite() && head - llr <= TIE_TOL));
        if same {
            let g = groups.last_mut().unwrap();
            g.0 += a;
            g.1 += b;
        } else {
            head = llr;
            groups.push((a, b));
        }
    }

    // Rejecting the first i groups: α = Σ_{<i} P, β = Σ_{≥i} Q.
    let n = groups.len();
    let mut p_suffix = vec![0.0; n + 1];
    let mut q_suffix = vec![0.0; n + 1];
    for i in (0..n).rev() {
        p_suffix[i] = p_suffix[i + 1] + groups[i].0;
        q_suffix[i] = q_suffix[i + 1] + groups[i].1;
    }
    let mut vertices = Vec::with_capacity(n + 1);
    let (mut p_prefix, mut q_prefix) = (0.0, 0.0);
    vertices.push(Vertex::with_complements(0.0, q_suffix[0].min(1.0), p_suffix[0].min(1.0), 0.0));
    for i in 0..n {
        p_prefix += groups[i].0;
        q_prefix += groups[i].1;
        let alpha = if i + 1 == n { 1.0 } else { p_prefix.min(1.0) };
        vertices.push(Vertex::with_complements(alpha, q_suffix[i + 1].min(1.0), p_suffix[i + 1], q_prefix));
    }
    TradeoffCurve::from_vertices(vertices)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_distributions_give_perfect_privacy() {
        let d = DiscreteDist::new(vec![0, 3, 7], vec![0.2, 0.5, 0.3]).unwrap();
        let c = np_tradeoff(&d, &d).unwrap();
        assert_eq!(c.points(), vec![(0.0, 1.0), (1.0, 0.0)]);
    }

    #[test]
    fn bernoulli_pair() {
        let p = DiscreteDist::bernoulli(0.75).unwrap();
        let q = DiscreteDist::bernoulli(0.25).unwrap();
        let c = np_tradeoff(&p, &q).unwrap();
        assert_eq!(c.eval(0.0).unwrap(), 1.0);
        assert!((c.eval(0.25).unwrap() - 0.25).abs() < 1e-15);
        assert!((c.eval(0.5).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(c.eval(1.0).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_point_masses_give_zero_curve() {
        let c = np_tradeoff(&DiscreteDist::point(0), &DiscreteDist::point(1)).unwrap();
        for i in 0..=10 {
            assert_eq!(c.eval(f64::from(i) / 10.0).unwrap(), 0.0);
        }
    }

    #[test]
    fn mass_outside_null_support_lowers_f0() {
        let p = DiscreteDist::new(vec![0, 1], vec![0.5, 0.5]).unwrap();
        let q = DiscreteDist::new(vec![1, 2], vec![0.6, 0.4]).unwrap();
        let c = np_tradeoff(&p, &q).unwrap();
        assert!((c.eval(0.0).unwrap() - 0.6).abs() < 1e-15);
        assert!((c.vertices()[0].one_minus_beta() - 0.4).abs() < 1e-15);
        assert!(c.is_convex(1e-15));
    }

    #[test]
    fn ties_form_a_single_segment() {
        let p = DiscreteDist::new(vec![0, 1, 2, 3], vec![0.1, 0.1, 0.4, 0.4]).unwrap();
        let q = DiscreteDist::new(vec![0, 1, 2, 3], vec![0.2, 0.2, 0.3, 0.3]).unwrap();
        let c = np_tradeoff(&p, &q).unwrap();
        assert_eq!(c.vertices().len(), 3);
    }

    #[test]
    fn distribution_validation() {
        assert!(DiscreteDist::new(vec![], vec![]).is_err());
        assert!(DiscreteDist::new(vec![0, 1], vec![0.5]).is_err());
        assert!(DiscreteDist::new(vec![0, 0], vec![0.5, 0.5]).is_err());
        assert!(DiscreteDist::new(vec![0, 1], vec![0.5, 0.6]).is_err());
        assert!(DiscreteDist::new(vec![0, 1], vec![-0.1, 1.1]).is_err());
    }

    #[test]
    fn json_input_is_validated() {
        let ok: DiscreteDist = serde_json::from_str(r#"{"support":[0,1],"probs":[0.25,0.75]}"#).unwrap();
        assert_eq!(ok.support(), &[0, 1]);
        assert!(serde_json::from_str::<DiscreteDist>(r#"{"support":[0,1],"probs":[0.5,0.75]}"#).is_err());
    }

    #[test]
    fn power_multiplies_out() {
        let b = DiscreteDist::bernoulli(0.3).unwrap();
        let b3 = b.power(3).unwrap();
        assert_eq!(b3.probs().len(), 8);
        assert!((b3.probs()[7] - 0.027).abs() < 1e-15);
        assert!(b.power(0).is_err());
    }
}
