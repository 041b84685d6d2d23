//! `fdp`: tradeoff curves, conversions and the mean-estimation benchmark from
//! the command line.

mod output;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fdp_core::bench::{row_curves, run_mean_estimation, BenchConfig, BenchRow, Preset};
use fdp_core::mechanisms::{ternary_clt_bound, ternary_product_pair, MechanismParams};
use fdp_core::tradeoff::EpsDelta;
use fdp_core::{
    curve_to_delta, curve_to_epsilon, curve_to_gdp, gdp_tradeoff, np_tradeoff, DiscreteDist, PrivacyProfile,
    TradeoffCurve,
};
use serde_json::{json, Value};

use output::{num, Meta, Sink};

#[derive(Parser, Debug)]
#[command(name = "fdp", version, about = "Exact f-DP accounting for discrete and compressed randomizers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tradeoff curve of one mechanism: exact vertices plus a dense sampling.
    Tradeoff {
        #[command(flatten)]
        mech: MechArgs,
        #[arg(long, default_value_t = 1001)]
        samples: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// (ε, δ) guarantees or a GDP parameter of a curve.
    Convert {
        #[command(flatten)]
        source: CurveSource,
        /// δ at each of these ε (comma separated; `inf` allowed).
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        eps: Vec<f64>,
        /// ε at each of these δ (comma separated).
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        delta: Vec<f64>,
        /// Smallest μ with f ≥ G_μ.
        #[arg(long)]
        gdp: bool,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Exact tradeoff curve T(P, Q) of two finite distributions.
    Oracle {
        /// Null distribution: inline JSON `{"support":[..],"probs":[..]}` or a file path.
        #[arg(long = "P")]
        p: String,
        /// Alternative distribution, same format.
        #[arg(long = "Q")]
        q: String,
        /// Take min{T(P, Q), T(Q, P)}.
        #[arg(long)]
        symmetric: bool,
        #[arg(long, default_value_t = 1001)]
        samples: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// CLT bounds for d ternary coordinates, optionally against the exact curve.
    Compose {
        /// Only `ternary` is supported.
        #[arg(long, default_value = "ternary")]
        mech: String,
        #[arg(long = "A")]
        a: f64,
        #[arg(long = "B")]
        b: f64,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        d: u64,
        /// Also emit the exact d-fold curve (d ≤ 8).
        #[arg(long)]
        exact: bool,
        #[arg(long, default_value_t = 1001)]
        samples: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run the mean-estimation benchmark from a JSON config.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        curves: CurveOut,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run one of the preset comparison sweeps.
    Compare {
        #[arg(long, value_parser = ["fig4-left", "fig4-middle", "fig4-right"])]
        preset: String,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        curves: CurveOut,
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args, Debug)]
struct OutArgs {
    /// Output file; stdout if omitted.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
struct CurveOut {
    /// Write dense samplings of every row's curves here (CSV).
    #[arg(long)]
    curves: Option<PathBuf>,
    #[arg(long, default_value_t = 1001)]
    curve_samples: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Default)]
struct MechArgs {
    /// binomial-noise, binomial-mech, sto-sign, cldp, ternary, ternarize,
    /// poisson-binomial, sqkr or gaussian-sparse.
    #[arg(long)]
    mech: Option<String>,
    #[arg(long = "M")]
    m: Option<u64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    l: Option<u64>,
    #[arg(long)]
    p_min: Option<f64>,
    #[arg(long)]
    p_max: Option<f64>,
    #[arg(long = "A")]
    a: Option<f64>,
    #[arg(long = "B")]
    b: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    /// Mechanism ε (cldp, sqkr); `inf` allowed.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long = "C")]
    norm_bound: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Args, Debug)]
struct CurveSource {
    #[command(flatten)]
    mech: MechArgs,
    /// Read the curve from an `alpha,beta` CSV instead.
    #[arg(long, conflicts_with = "mech")]
    curve: Option<PathBuf>,
}

fn need<T>(value: Option<T>, flag: &str, mech: &str) -> Result<T> {
    value.with_context(|| format!("--mech {mech} requires --{flag}"))
}

impl MechArgs {
    fn params(&self) -> Result<MechanismParams> {
        let mech = self.mech.as_deref().context("missing --mech")?;
        let params = match mech {
            "binomial-noise" => MechanismParams::BinomialNoise {
                m: need(self.m, "M", mech)?,
                p: need(self.p, "p", mech)?,
                l: need(self.l, "l", mech)?,
            },
            "binomial-mech" => MechanismParams::BinomialMech {
                m: need(self.m, "M", mech)?,
                p_min: need(self.p_min, "p-min", mech)?,
                p_max: need(self.p_max, "p-max", mech)?,
            },
            "sto-sign" => MechanismParams::StoSign { a: need(self.a, "A", mech)?, c: need(self.c, "c", mech)? },
            "cldp" => MechanismParams::Cldp { eps: need(self.epsilon, "epsilon", mech)?, c: need(self.c, "c", mech)? },
            "ternary" => MechanismParams::Ternary {
                a: need(self.a, "A", mech)?,
                b: need(self.b, "B", mech)?,
                c: need(self.c, "c", mech)?,
            },
            "ternarize" => MechanismParams::Ternarize { b: need(self.b, "B", mech)?, c: need(self.c, "c", mech)? },
            "poisson-binomial" | "pbm" => MechanismParams::PoissonBinomial {
                p_min: need(self.p_min, "p-min", mech)?,
                p_max: need(self.p_max, "p-max", mech)?,
            },
            "sqkr" => MechanismParams::Sqkr {
                eps: need(self.epsilon, "epsilon", mech)?,
                k: need(self.k, "k", mech)?,
                d: need(self.d, "d", mech)?,
                norm_bound: need(self.norm_bound, "C", mech)?,
            },
            "gaussian-sparse" => MechanismParams::GaussianSparse {
                sigma: need(self.sigma, "sigma", mech)?,
                a: need(self.a, "A", mech)?,
                b: need(self.b, "B", mech)?,
                c: need(self.c, "c", mech)?,
                d: need(self.d, "d", mech)?,
            },
            other => bail!("unknown mechanism {other:?}"),
        };
        params.validate()?;
        Ok(params)
    }
}

fn read_dist(arg: &str) -> Result<DiscreteDist> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).with_context(|| format!("reading distribution file {arg}"))?
    };
    serde_json::from_str(&text).with_context(|| format!("invalid distribution {arg}"))
}

/// Reads a curve written by `fdp tradeoff` or `fdp oracle` (keeping the
/// vertex rows) or a plain `alpha,beta` CSV.
fn read_curve(path: &Path) -> Result<TradeoffCurve> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut body = text.lines().filter(|l| !l.trim_start().starts_with('#') && !l.trim().is_empty());
    let header = body.next().context("empty curve file")?;
    let plain = if header.replace(' ', "") == "kind,alpha,beta" {
        let rows: Vec<&str> = body.filter_map(|l| l.strip_prefix("vertex,")).collect();
        format!("alpha,beta\n{}\n", rows.join("\n"))
    } else {
        text.clone()
    };
    Ok(TradeoffCurve::read_csv(plain.as_bytes())?)
}

fn write_curve(sink: &mut Sink, meta: &Meta, f: &TradeoffCurve, samples: usize) -> Result<()> {
    match sink.format {
        Format::Csv => {
            meta.write_csv_header(sink)?;
            sink.line("kind,alpha,beta")?;
            for (a, b) in f.points() {
                sink.line(&format!("vertex,{a:.16e},{b:.16e}"))?;
            }
            for (a, b) in f.sample(samples) {
                sink.line(&format!("sample,{a:.16e},{b:.16e}"))?;
            }
        }
        Format::Json => sink.json(&json!({
            "meta": meta.to_json(),
            "vertices": f.points(),
            "samples": f.sample(samples),
        }))?,
    }
    Ok(())
}

fn cmd_tradeoff(mech: &MechArgs, samples: usize, out: &OutArgs) -> Result<bool> {
    let params = mech.params()?;
    let f = params.curve()?;
    let meta = Meta::new(serde_json::to_value(&params)?, None);
    write_curve(&mut Sink::open(out, Format::Csv)?, &meta, &f, samples)?;
    Ok(true)
}

fn cmd_convert(source: &CurveSource, eps: &[f64], delta: &[f64], gdp: bool, out: &OutArgs) -> Result<bool> {
    if eps.is_empty() && delta.is_empty() && !gdp {
        bail!("nothing to convert: pass --eps, --delta or --gdp");
    }
    let (f, source_json) = match &source.curve {
        Some(path) => (read_curve(path)?, json!({ "curve": path.display().to_string() })),
        None => {
            let params = source.mech.params()?;
            (params.curve()?, serde_json::to_value(&params)?)
        }
    };
    let mut points = Vec::new();
    for &e in eps {
        points.push(EpsDelta { epsilon: e, delta: curve_to_delta(&f, e)? });
    }
    for &d in delta {
        points.push(EpsDelta { epsilon: curve_to_epsilon(&f, d)?, delta: d });
    }
    points.sort_by(|a, b| a.epsilon.total_cmp(&b.epsilon).then(b.delta.total_cmp(&a.delta)));
    let profile = PrivacyProfile { points, mu: if gdp { Some(curve_to_gdp(&f)?) } else { None } };
    let params = json!({ "source": source_json, "eps": eps.iter().map(|&x| num(x)).collect::<Vec<_>>(),
        "delta": delta, "gdp": gdp });
    let meta = Meta::new(params, None);
    let mut sink = Sink::open(out, Format::Json)?;
    match sink.format {
        Format::Csv => {
            meta.write_csv_header(&mut sink)?;
            if let Some(mu) = profile.mu {
                sink.line(&format!("# mu: {mu}"))?;
            }
            sink.line("epsilon,delta")?;
            for p in &profile.points {
                sink.line(&format!("{},{}", p.epsilon, p.delta))?;
            }
        }
        Format::Json => sink.json(&json!({ "meta": meta.to_json(), "profile": profile }))?,
    }
    Ok(true)
}

fn cmd_oracle(p: &str, q: &str, symmetric: bool, samples: usize, out: &OutArgs) -> Result<bool> {
    let (p, q) = (read_dist(p)?, read_dist(q)?);
    let mut f = np_tradeoff(&p, &q)?;
    if symmetric {
        f = f.min(&np_tradeoff(&q, &p)?);
    }
    let meta = Meta::new(json!({ "P": p, "Q": q, "symmetric": symmetric }), None);
    write_curve(&mut Sink::open(out, Format::Csv)?, &meta, &f, samples)?;
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn cmd_compose(mech: &str, a: f64, b: f64, c: f64, d: u64, exact: bool, samples: usize, out: &OutArgs) -> Result<bool> {
    if mech != "ternary" {
        bail!("compose supports only --mech ternary, got {mech:?}");
    }
    let bound = ternary_clt_bound(a, b, c, d)?;
    if bound.gamma_warning {
        eprintln!("warning: gamma = {} >= 1/2, the CLT bounds are vacuous", bound.gamma);
    }
    let exact_curve = if exact {
        if d > 8 {
            bail!("--exact needs d <= 8 (3^d outcomes), got d = {d}");
        }
        let (p, q) = ternary_product_pair(a, b, c, d as u32)?;
        Some(np_tradeoff(&p, &q)?.min(&np_tradeoff(&q, &p)?))
    } else {
        None
    };
    let n = samples.max(2) - 1;
    let rows: Vec<(f64, f64, f64, f64, Option<f64>)> = (0..=n)
        .map(|i| {
            let x = i as f64 / n as f64;
            let e = exact_curve.as_ref().map(|f| f.eval_clamped(x));
            (x, bound.lower(x), bound.upper(x), gdp_tradeoff(bound.mu, x), e)
        })
        .collect();
    let params = json!({ "mechanism": "ternary", "A": a, "B": b, "c": c, "d": d, "exact": exact });
    let meta = Meta::new(params, None);
    let mut sink = Sink::open(out, Format::Csv)?;
    match sink.format {
        Format::Csv => {
            meta.write_csv_header(&mut sink)?;
            sink.line(&format!("# mu: {}", bound.mu))?;
            sink.line(&format!("# gamma: {}", bound.gamma))?;
            sink.line(&format!("# gamma_warning: {}", bound.gamma_warning))?;
            sink.line(if exact { "alpha,lower,upper,gdp,exact" } else { "alpha,lower,upper,gdp" })?;
            for (x, lo, hi, g, e) in &rows {
                let tail = e.map(|v| format!(",{v:.16e}")).unwrap_or_default();
                sink.line(&format!("{x:.16e},{lo:.16e},{hi:.16e},{g:.16e}{tail}"))?;
            }
        }
        Format::Json => {
            let samples: Vec<Value> = rows
                .iter()
                .map(|(x, lo, hi, g, e)| json!({ "alpha": x, "lower": lo, "upper": hi, "gdp": g, "exact": e }))
                .collect();
            sink.json(&json!({ "meta": meta.to_json(), "bound": bound, "samples": samples }))?;
        }
    }
    Ok(true)
}

fn write_bench(cfg: &BenchConfig, rows: &[BenchRow], curves: &CurveOut, out: &OutArgs) -> Result<bool> {
    let meta = Meta::new(serde_json::to_value(cfg)?, Some(cfg.seed));
    let mut sink = Sink::open(out, Format::Csv)?;
    match sink.format {
        Format::Csv => {
            meta.write_csv_header(&mut sink)?;
            let mut buf = Vec::new();
            fdp_core::bench::write_rows_csv(rows, &mut buf)?;
            sink.raw(&buf)?;
        }
        Format::Json => sink.json(&json!({ "meta": meta.to_json(), "rows": rows }))?,
    }
    if let Some(path) = &curves.curves {
        let mut sink = Sink::open(&OutArgs { output: Some(path.clone()), format: Some(Format::Csv) }, Format::Csv)?;
        meta.write_csv_header(&mut sink)?;
        sink.line("row,mechanism,curve,alpha,beta")?;
        for (i, row) in rows.iter().enumerate().filter(|(_, r)| r.is_ok()) {
            for (name, f) in row_curves(row)? {
                for (a, b) in f.sample(curves.curve_samples) {
                    sink.line(&format!("{i},{},{name},{a:.16e},{b:.16e}", row.mechanism))?;
                }
            }
        }
    }
    let mut ok = true;
    for (i, row) in rows.iter().enumerate() {
        if let Some(err) = &row.error {
            ok = false;
            eprintln!("row {i} ({} {}, {}): {err}", row.mechanism, row.rule, row.params);
        }
    }
    Ok(ok)
}

fn cmd_bench(
    config: &Path,
    trials: Option<usize>,
    seed: Option<u64>,
    curves: &CurveOut,
    out: &OutArgs,
) -> Result<bool> {
    let text = fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let mut cfg: BenchConfig = serde_json::from_str(&text).with_context(|| format!("parsing {}", config.display()))?;
    if let Some(t) = trials {
        cfg.trials = t;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let rows = run_mean_estimation(&cfg)?;
    write_bench(&cfg, &rows, curves, out)
}

fn cmd_compare(preset: &str, trials: usize, seed: u64, curves: &CurveOut, out: &OutArgs) -> Result<bool> {
    let cfg = preset.parse::<Preset>()?.config(trials, seed);
    let rows = run_mean_estimation(&cfg)?;
    write_bench(&cfg, &rows, curves, out)
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Tradeoff { mech, samples, out } => cmd_tradeoff(mech, *samples, out),
        Command::Convert { source, eps, delta, gdp, out } => cmd_convert(source, eps, delta, *gdp, out),
        Command::Oracle { p, q, symmetric, samples, out } => cmd_oracle(p, q, *symmetric, *samples, out),
        Command::Compose { mech, a, b, c, d, exact, samples, out } => {
            cmd_compose(mech, *a, *b, *c, *d, *exact, *samples, out)
        }
        Command::Bench { config, trials, seed, curves, out } => cmd_bench(config, *trials, *seed, curves, out),
        Command::Compare { preset, trials, seed, curves, out } => cmd_compare(preset, *trials, *seed, curves, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mech_flags_build_validated_params() {
        let args =
            MechArgs { mech: Some("ternary".into()), a: Some(0.25), b: Some(0.5), c: Some(0.1), ..Default::default() };
        assert_eq!(args.params().unwrap(), MechanismParams::Ternary { a: 0.25, b: 0.5, c: 0.1 });
        let missing = MechArgs { mech: Some("sqkr".into()), epsilon: Some(1.0), ..Default::default() };
        assert!(missing.params().unwrap_err().to_string().contains("--k"));
        let invalid = MechArgs { mech: Some("sto-sign".into()), a: Some(0.1), c: Some(0.2), ..Default::default() };
        assert!(invalid.params().is_err());
    }

    #[test]
    fn curve_files_in_either_layout() {
        let dir = std::env::temp_dir().join(format!("fdp-cli-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let plain = dir.join("plain.csv");
        fs::write(&plain, "# note\nalpha,beta\n0,1\n0.5,0.2\n1,0\n").unwrap();
        let tagged = dir.join("tagged.csv");
        fs::write(&tagged, "# fdp\nkind,alpha,beta\nvertex,0,1\nvertex,0.5,0.2\nvertex,1,0\nsample,0.25,0.6\n")
            .unwrap();
        let (a, b) = (read_curve(&plain).unwrap(), read_curve(&tagged).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.points().len(), 3);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
