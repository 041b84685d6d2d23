use std::io::{BufRead, Write};

use crate::error::{Error, Result};

const ENDPOINT_TOL: f64 = 1e-9;
const MONOTONE_TOL: f64 = 1e-12;

/// One breakpoint of a piecewise-linear tradeoff curve.
///
/// Besides `alpha` and `beta` the vertex carries `1 - alpha` and `1 - beta`
/// computed independently, so that tail masses far below the f64 resolution
/// near 1 (e.g. 1e-136) are not lost when the curve is converted to
/// (ε, δ) guarantees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub alpha: f64,
    pub beta: f64,
    one_minus_alpha: f64,
    one_minus_beta: f64,
}

impl Vertex {
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta, one_minus_alpha: 1.0 - alpha, one_minus_beta: 1.0 - beta }
    }

    /// Vertex with separately computed complements.
    pub fn with_complements(alpha: f64, beta: f64, one_minus_alpha: f64, one_minus_beta: f64) -> Self {
        Self { alpha, beta, one_minus_alpha, one_minus_beta }
    }

    pub fn one_minus_alpha(&self) -> f64 {
        self.one_minus_alpha
    }

    pub fn one_minus_beta(&self) -> f64 {
        self.one_minus_beta
    }

    fn lerp(&self, other: &Vertex, alpha: f64) -> Vertex {
        let t = (alpha - self.alpha) / (other.alpha - self.alpha);
        Vertex {
            alpha,
            beta: self.beta + t * (other.beta - self.beta),
            one_minus_alpha: self.one_minus_alpha + t * (other.one_minus_alpha - self.one_minus_alpha),
            one_minus_beta: self.one_minus_beta + t * (other.one_minus_beta - self.one_minus_beta),
        }
    }
}

/// A tradeoff function `β = f(α)` on `[0, 1]`, stored as an exact vertex list.
///
/// Invariants: the first vertex sits at `α = 0` and the last at `α = 1` with
/// `β = 0`; `α` is strictly increasing; `β ∈ [0, 1]` is nonincreasing.
/// Convexity is not enforced, since the pointwise minimum of two branches may
/// be non-convex at the crossing; see [`TradeoffCurve::is_convex`].
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffCurve {
    vertices: Vec<Vertex>,
}

impl TradeoffCurve {
    /// Builds a curve from `(α, β)` pairs.
    pub fn from_points(points: &[(f64, f64)]) -> Result<Self> {
        Self::from_vertices(points.iter().map(|&(a, b)| Vertex::new(a, b)).collect())
    }

    /// Builds a curve, normalizing rounding noise.
    ///
    /// Vertices whose `α` collides in f64 are merged (keeping the lowest `β`),
    /// endpoints within 1e-9 of 0 and 1 are snapped, and `β` is clamped into
    /// `[0, 1]`.
    pub fn from_vertices(vertices: Vec<Vertex>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidCurve("need at least two vertices".into()));
        }
        let mut out: Vec<Vertex> = Vec::with_capacity(vertices.len());
        for mut v in vertices {
            if !(v.alpha.is_finite() && v.beta.is_finite()) {
                return Err(Error::InvalidCurve(format!("non-finite vertex ({}, {})", v.alpha, v.beta)));
            }
            if v.beta < -ENDPOINT_TOL || v.beta > 1.0 + ENDPOINT_TOL {
                return Err(Error::InvalidCurve(format!("beta = {} outside [0, 1]", v.beta)));
            }
            // β may round to exactly 0 or 1 while its complement still
            // carries a tail mass, so only out-of-range values reset it.
            if v.beta < 0.0 {
                v.beta = 0.0;
                v.one_minus_beta = 1.0;
            } else if v.beta > 1.0 {
                v.beta = 1.0;
                v.one_minus_beta = 0.0;
            }
            v.one_minus_beta = v.one_minus_beta.clamp(0.0, 1.0);
            v.one_minus_alpha = v.one_minus_alpha.clamp(0.0, 1.0);
            match out.last_mut() {
                Some(prev) if v.alpha < prev.alpha => {
                    return Err(Error::InvalidCurve(format!("alpha decreases from {} to {}", prev.alpha, v.alpha)));
                }
                Some(prev) if v.alpha == prev.alpha => {
                    if v.beta < prev.beta {
                        *prev = v;
                    } else if v.beta == prev.beta {
                        prev.one_minus_alpha = prev.one_minus_alpha.max(v.one_minus_alpha);
                        prev.one_minus_beta = prev.one_minus_beta.max(v.one_minus_beta);
                    }
                }
                _ => out.push(v),
            }
        }

        let first = out[0];
        if first.alpha.abs() > ENDPOINT_TOL {
            return Err(Error::InvalidCurve(format!("first vertex at alpha = {}", first.alpha)));
        }
        out[0].alpha = 0.0;
        out[0].one_minus_alpha = 1.0;
        let n = out.len();
        let last = out[n - 1];
        if (last.alpha - 1.0).abs() > ENDPOINT_TOL {
            return Err(Error::InvalidCurve(format!("last vertex at alpha = {}", last.alpha)));
        }
        if last.beta > ENDPOINT_TOL {
            return Err(Error::InvalidCurve(format!("f(1) = {} must be 0", last.beta)));
        }
        // A final α that is 1 only after rounding keeps its tail mass.
        let tail = if last.alpha == 1.0 && last.beta == 0.0 { last.one_minus_alpha } else { 0.0 };
        out[n - 1] = Vertex::with_complements(1.0, 0.0, tail, 1.0);
        // Snapping the last vertex can collide with an earlier alpha of 1 - tiny.
        if n >= 2 && out[n - 2].alpha >= 1.0 {
            out.remove(n - 2);
        }
        if out.len() < 2 {
            return Err(Error::InvalidCurve("curve collapsed to a single point".into()));
        }

        for i in 1..out.len() {
            let prev = out[i - 1];
            let cur = &mut out[i];
            if cur.beta > prev.beta {
                if cur.beta - prev.beta > MONOTONE_TOL {
                    return Err(Error::InvalidCurve(format!(
                        "beta increases from {} to {} at alpha = {}",
                        prev.beta, cur.beta, cur.alpha
                    )));
                }
                cur.beta = prev.beta;
                cur.one_minus_beta = prev.one_minus_beta;
            }
        }
        Ok(Self { vertices: out })
    }

    /// `f(α) = 1 - α`, the curve of indistinguishable distributions.
    pub fn perfect_privacy() -> Self {
        Self {
            vertices: vec![Vertex::with_complements(0.0, 1.0, 1.0, 0.0), Vertex::with_complements(1.0, 0.0, 0.0, 1.0)],
        }
    }

    /// `f ≡ 0`, the curve of perfectly distinguishable distributions.
    pub fn no_privacy() -> Self {
        Self {
            vertices: vec![Vertex::with_complements(0.0, 0.0, 1.0, 1.0), Vertex::with_complements(1.0, 0.0, 0.0, 1.0)],
        }
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        self.vertices.iter().map(|v| (v.alpha, v.beta)).collect()
    }

    /// `f(α)` by linear interpolation between the bracketing vertices.
    pub fn eval(&self, alpha: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        Ok(self.vertex_at(alpha).beta)
    }

    /// `f(α)` with `α` clamped into `[0, 1]`.
    pub fn eval_clamped(&self, alpha: f64) -> f64 {
        self.vertex_at(alpha.clamp(0.0, 1.0)).beta
    }

    pub(crate) fn vertex_at(&self, alpha: f64) -> Vertex {
        let vs = &self.vertices;
        // index of the first vertex with v.alpha >= alpha
        let i = vs.partition_point(|v| v.alpha < alpha);
        if i == 0 {
            return vs[0];
        }
        if i >= vs.len() {
            return vs[vs.len() - 1];
        }
        if vs[i].alpha == alpha {
            return vs[i];
        }
        vs[i - 1].lerp(&vs[i], alpha)
    }

    /// Pointwise minimum of two curves.
    ///
    /// The result carries every breakpoint of both inputs plus the crossing
    /// points; it is not re-convexified.
    pub fn min(&self, other: &TradeoffCurve) -> TradeoffCurve {
        let mut grid: Vec<Vertex> = self.vertices.iter().chain(other.vertices.iter()).copied().collect();
        grid.sort_by(|a, b| a.alpha.total_cmp(&b.alpha));
        grid.dedup_by(|a, b| a.alpha == b.alpha);

        let pick = |alpha_src: &Vertex| -> (Vertex, f64) {
            let a = self.vertex_at(alpha_src.alpha);
            let b = other.vertex_at(alpha_src.alpha);
            let mut v = if b.beta < a.beta { b } else { a };
            v.alpha = alpha_src.alpha;
            v.one_minus_alpha = alpha_src.one_minus_alpha;
            (v, a.beta - b.beta)
        };

        let mut out = Vec::with_capacity(grid.len() * 2);
        let (mut prev, mut prev_diff) = pick(&grid[0]);
        out.push(prev);
        for g in &grid[1..] {
            let (cur, cur_diff) = pick(g);
            if (prev_diff > 0.0 && cur_diff < 0.0) || (prev_diff < 0.0 && cur_diff > 0.0) {
                let t = prev_diff / (prev_diff - cur_diff);
                let alpha = prev.alpha + t * (cur.alpha - prev.alpha);
                if alpha > prev.alpha && alpha < cur.alpha {
                    let a = self.vertex_at(alpha);
                    let b = other.vertex_at(alpha);
                    out.push(if b.beta < a.beta { b } else { a });
                }
            }
            out.push(cur);
            prev = cur;
            prev_diff = cur_diff;
        }
        TradeoffCurve::from_vertices(out).expect("minimum of two valid curves is a valid curve")
    }

    /// `sup_α |f(α) - g(α)|`, exact for piecewise-linear curves.
    pub fn sup_distance(&self, other: &TradeoffCurve) -> f64 {
        self.vertices
            .iter()
            .chain(other.vertices.iter())
            .map(|v| (self.vertex_at(v.alpha).beta - other.vertex_at(v.alpha).beta).abs())
            .fold(0.0, f64::max)
    }

    /// `min_α (f(α) - g(α))`; nonnegative iff `self` dominates `other`.
    pub fn min_margin_over(&self, other: &TradeoffCurve) -> f64 {
        self.vertices
            .iter()
            .chain(other.vertices.iter())
            .map(|v| self.vertex_at(v.alpha).beta - other.vertex_at(v.alpha).beta)
            .fold(f64::INFINITY, f64::min)
    }

    /// Whether every vertex lies on or below the chord of its neighbours, up to `tol`.
    pub fn is_convex(&self, tol: f64) -> bool {
        self.vertices.windows(3).all(|w| {
            let t = (w[1].alpha - w[0].alpha) / (w[2].alpha - w[0].alpha);
            w[1].beta <= w[0].beta + t * (w[2].beta - w[0].beta) + tol
        })
    }

    /// `n` uniformly spaced samples `(α, f(α))`, endpoints included.
    pub fn sample(&self, n: usize) -> Vec<(f64, f64)> {
        let n = n.max(2);
        (0..n)
            .map(|i| {
                let alpha = i as f64 / (n - 1) as f64;
                (alpha, self.eval_clamped(alpha))
            })
            .collect()
    }

    /// Writes the vertex list as `alpha,beta` CSV with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "alpha,beta")?;
        for v in &self.vertices {
            writeln!(out, "{:.16e},{:.16e}", v.alpha, v.beta)?;
        }
        Ok(())
    }

    /// Reads an `alpha,beta` CSV; `#` comment lines are skipped.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut points = Vec::new();
        let mut seen_header = false;
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !seen_header {
                seen_header = true;
                if line.replace(' ', "") != "alpha,beta" {
                    return Err(Error::InvalidCurve(format!("expected header `alpha,beta`, found `{line}`")));
                }
                continue;
            }
            let parse = |s: Option<&str>| -> Result<f64> {
                s.and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::InvalidCurve(format!("malformed row {}: `{line}`", lineno + 1)))
            };
            let mut cols = line.split(',');
            let a = parse(cols.next())?;
            let b = parse(cols.next())?;
            points.push((a, b));
        }
        Self::from_points(&points)
    }
}
