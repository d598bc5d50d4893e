use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use chgoe::distributions::{gap_finite, linear_grid, tabulate, CurveParams, FiniteSpec, Quantity};
use chgoe::microscopic::{gap_micro, smallest_micro};
use chgoe::montecarlo::{
    empirical_gap, harmonic_scale, histogram, ks_distance_batch, load_correlation_csv, microscopic_rescale,
    exp_decay_correlation, normalized_exp_decay, sample_batch, SamplerConfig, TabulatedCdf,
};
use chgoe::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

/// Smallest-eigenvalue statistics of real Wishart matrices with even topology.
#[derive(Parser, Debug)]
#[command(name = "chgoe", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "CHGOE_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Gap probability E_{p,2k}(t).
    Gap(FiniteArgs),
    /// Smallest-eigenvalue density P_{p,2k}(t).
    Smallest(FiniteArgs),
    /// Hard-edge limits in u = 4pt.
    Micro(MicroArgs),
    /// Sample Wishart matrices and compare with the analytic curves.
    Mc(McArgs),
    /// Rescaled finite-p densities against the hard-edge limit.
    Converge(ConvergeArgs),
    /// Write the exponential-decay correlation matrix used as a stand-in.
    Expdecay(ExpdecayArgs),
    /// Run the built-in identity checks.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug, Serialize)]
struct Output {
    /// Output CSV; relative paths are resolved against $CHGOE_OUT_DIR. Stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct FiniteArgs {
    #[arg(long)]
    p: usize,
    #[arg(long)]
    k: usize,
    /// Single point; overrides the grid.
    #[arg(long)]
    t: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    t_min: f64,
    #[arg(long, default_value_t = 3.0)]
    t_max: f64,
    #[arg(long, default_value_t = 200)]
    points: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq)]
#[serde(rename_all = "lowercase")]
enum MicroQuantity {
    Gap,
    Smallest,
    Density,
}

#[derive(Args, Debug, Serialize)]
struct MicroArgs {
    #[arg(long, value_enum)]
    quantity: MicroQuantity,
    /// Topology nu = 2k (gap, smallest).
    #[arg(long)]
    k: Option<usize>,
    /// Index nu of the level density.
    #[arg(long)]
    nu: Option<usize>,
    /// Single point; overrides the grid.
    #[arg(long)]
    u: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    u_min: f64,
    #[arg(long, default_value_t = 60.0)]
    u_max: f64,
    #[arg(long, default_value_t = 300)]
    points: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Compare {
    Finite,
    Micro,
}

#[derive(Args, Debug, Serialize)]
struct McArgs {
    #[arg(long)]
    p: usize,
    #[arg(long)]
    nu: usize,
    #[arg(long)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Row-correlation matrix, p lines of p comma-separated reals.
    #[arg(long)]
    c_file: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "finite")]
    compare: Compare,
    /// Write a histogram with this many bins instead of the raw samples.
    #[arg(long)]
    bins: Option<usize>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug, Serialize)]
struct ConvergeArgs {
    #[arg(long)]
    k: usize,
    #[arg(long, value_delimiter = ',', default_value = "11,51,131")]
    p: Vec<usize>,
    #[arg(long, default_value_t = 25.0)]
    u_max: f64,
    #[arg(long, default_value_t = 250)]
    points: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug, Serialize)]
struct ExpdecayArgs {
    #[arg(long)]
    p: usize,
    #[arg(long, default_value_t = 0.5)]
    rho: f64,
    /// Skip the normalisation tr(C^{-1}) = p.
    #[arg(long)]
    raw: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug, Serialize)]
struct SelftestArgs {
    /// Inflate the error of one named check (to see it fail).
    #[arg(long, hide = true)]
    perturb: Option<String>,
}

/// Failure classes, mapped to exit codes 2, 3 and 4.
#[derive(Debug)]
enum Failure {
    Param(String),
    Numeric(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Param(_) => 2,
            Failure::Numeric(_) => 3,
            Failure::Io(_) => 4,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::AtPoint { abscissa, source } => match Failure::from(*source) {
                Failure::Param(m) => Failure::Param(format!("at {abscissa}: {m}")),
                Failure::Numeric(m) => Failure::Numeric(format!("at {abscissa}: {m}")),
                Failure::Io(m) => Failure::Io(m),
            },
            Error::Io(_) => Failure::Io(e.to_string()),
            Error::Quadrature(_) | Error::Degenerate(_) | Error::Sample { .. } => Failure::Numeric(e.to_string()),
            _ => Failure::Param(e.to_string()),
        }
    }
}

type Res<T> = std::result::Result<T, Failure>;

#[derive(Serialize)]
struct RunManifest {
    command: String,
    parameters: serde_json::Value,
    seeds: Vec<u64>,
    tool_version: &'static str,
    wall_clock_seconds: f64,
    outputs: Vec<String>,
    summary: serde_json::Value,
}

/// 17 significant digits, positional where that stays readable.
fn fmt17(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if (-5..16).contains(&e) {
        format!("{:.*}", (16 - e) as usize, x)
    } else {
        format!("{x:.16e}")
    }
}

fn resolve(path: &Path) -> PathBuf {
    match std::env::var_os("CHGOE_OUT_DIR") {
        Some(d) if path.is_relative() => Path::new(&d).join(path),
        _ => path.to_path_buf(),
    }
}

struct Run {
    command: &'static str,
    start: Instant,
    parameters: serde_json::Value,
    seeds: Vec<u64>,
    summary: serde_json::Value,
}

impl Run {
    fn new<P: Serialize>(command: &'static str, params: &P) -> Self {
        Run {
            command,
            start: Instant::now(),
            parameters: serde_json::to_value(params).unwrap_or_default(),
            seeds: vec![],
            summary: serde_json::Value::Null,
        }
    }

    /// Writes `body` to `out` (plus a manifest) or to stdout.
    fn emit(&self, out: &Option<PathBuf>, body: &str) -> Res<()> {
        let Some(out) = out else {
            std::io::stdout().write_all(body.as_bytes()).map_err(|e| Failure::Io(e.to_string()))?;
            return Ok(());
        };
        let path = resolve(out);
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;
        }
        std::fs::write(&path, body).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        let manifest = RunManifest {
            command: self.command.into(),
            parameters: self.parameters.clone(),
            seeds: self.seeds.clone(),
            tool_version: env!("CARGO_PKG_VERSION"),
            wall_clock_seconds: self.start.elapsed().as_secs_f64(),
            outputs: vec![path.display().to_string()],
            summary: self.summary.clone(),
        };
        let mpath = PathBuf::from(format!("{}.manifest.json", path.display()));
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| Failure::Io(e.to_string()))?;
        std::fs::write(&mpath, text + "\n").map_err(|e| Failure::Io(format!("{}: {e}", mpath.display())))?;
        eprintln!("wrote {} and {}", path.display(), mpath.display());
        Ok(())
    }
}

fn grid(single: Option<f64>, lo: f64, hi: f64, points: usize) -> Res<Vec<f64>> {
    if let Some(x) = single {
        return Ok(vec![x]);
    }
    if points == 0 || !(hi > lo) || lo < 0.0 {
        return Err(Failure::Param(format!("need 0 <= min < max and points > 0 (got {lo}, {hi}, {points})")));
    }
    Ok(linear_grid(lo, hi, points))
}

fn csv_two(header: &str, samples: &[(f64, f64)]) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for (x, y) in samples {
        let _ = writeln!(s, "{},{}", fmt17(*x), fmt17(*y));
    }
    s
}

fn cmd_finite(a: &FiniteArgs, q: Quantity) -> Res<()> {
    let run = Run::new(if q == Quantity::Gap { "gap" } else { "smallest" }, a);
    let g = grid(a.t, a.t_min, a.t_max, a.points)?;
    let c = tabulate(q, CurveParams { p: Some(a.p), nu: 2 * a.k }, &g)?;
    run.emit(&a.output.out, &csv_two("t,value", &c.samples))
}

fn cmd_micro(a: &MicroArgs) -> Res<()> {
    let run = Run::new("micro", a);
    let (q, nu) = match (a.quantity, a.k, a.nu) {
        (MicroQuantity::Density, _, Some(nu)) => (Quantity::Density, nu),
        (MicroQuantity::Density, Some(k), None) => (Quantity::Density, 2 * k),
        (MicroQuantity::Gap, Some(k), _) => (Quantity::MicroGap, 2 * k),
        (MicroQuantity::Smallest, Some(k), _) => (Quantity::MicroSmallest, 2 * k),
        (MicroQuantity::Gap | MicroQuantity::Smallest, None, Some(nu)) if nu % 2 == 0 => {
            (if a.quantity == MicroQuantity::Gap { Quantity::MicroGap } else { Quantity::MicroSmallest }, nu)
        }
        _ => return Err(Failure::Param("micro needs --k (or even --nu); density needs --nu".into())),
    };
    let g = grid(a.u, a.u_min, a.u_max, a.points)?;
    let c = tabulate(q, CurveParams { p: None, nu }, &g)?;
    run.emit(&a.output.out, &csv_two("u,value", &c.samples))
}

fn cmd_mc(a: &McArgs) -> Res<()> {
    let mut run = Run::new("mc", a);
    run.seeds = vec![a.seed];
    let mut cfg = SamplerConfig::new(a.p, a.p + a.nu, a.samples, a.seed)?;
    let mut h = 1.0;
    if let Some(f) = &a.c_file {
        let c = load_correlation_csv(f)?;
        h = harmonic_scale(&c)?;
        cfg = cfg.with_correlation(c)?;
    }
    if a.nu % 2 != 0 {
        return Err(Failure::Param(format!("analytic comparison needs even nu, got {}", a.nu)));
    }
    let k = a.nu / 2;
    let batch = sample_batch(&cfg)?;
    let (xs, cdf, label) = match a.compare {
        Compare::Finite => {
            let hi = batch.smallest_eigenvalues.iter().cloned().fold(0.0, f64::max) * 1.01;
            let cdf = TabulatedCdf::new(|t| Ok(1.0 - gap_finite(FiniteSpec::new(a.p, k, t)?)?), hi, 4001)?;
            (batch, cdf, "t")
        }
        Compare::Micro => {
            let b = microscopic_rescale(&batch);
            let hi = b.smallest_eigenvalues.iter().cloned().fold(0.0, f64::max) * h * 1.01;
            let cdf = TabulatedCdf::new(|u| Ok(1.0 - gap_micro(k, u)?), hi, 4001)?;
            (b, cdf, "u")
        }
    };
    let ks = ks_distance_batch(&xs, |x| cdf.eval(x));
    let unfolded: Vec<f64> = xs.smallest_eigenvalues.iter().map(|x| x * h).collect();
    let ks_unfolded = chgoe::montecarlo::ks_distance(&unfolded, |x| cdf.eval(x));
    let mut sorted = xs.smallest_eigenvalues.clone();
    sorted.sort_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let (e_med, se_med) = empirical_gap(&xs, median);
    eprintln!("samples {}  ks {:.5}  ks(unfolded by tr C^-1/p = {:.6}) {:.5}", a.samples, ks, h, ks_unfolded);
    eprintln!("empirical gap at median {label} = {}: {:.5} +- {:.5}", fmt17(median), e_med, se_med);
    run.summary = serde_json::json!({
        "ks": ks, "ks_unfolded": ks_unfolded, "harmonic_scale": h,
        "ks_95": 1.36 / (a.samples as f64).sqrt(),
        "median": median, "empirical_gap_at_median": e_med, "standard_error": se_med,
        "rng": batch_rng(&cfg),
    });
    let body = match a.bins {
        Some(0) => return Err(Failure::Param("--bins must be positive".into())),
        Some(bins) => {
            let hi = sorted[sorted.len() - 1];
            let hist = histogram(&xs.smallest_eigenvalues, 0.0, hi * (1.0 + 1e-12), bins);
            let mut s = format!("{label},empirical,analytic\n");
            for (x, d) in hist {
                let an = match a.compare {
                    Compare::Finite => chgoe::distributions::smallest_finite(FiniteSpec::new(a.p, k, x)?)?,
                    Compare::Micro => smallest_micro(k, x)?,
                };
                let _ = writeln!(s, "{},{},{}", fmt17(x), fmt17(d), fmt17(an));
            }
            s
        }
        None => {
            let mut s = format!("index,{label}\n");
            for (i, x) in xs.smallest_eigenvalues.iter().enumerate() {
                let _ = writeln!(s, "{i},{}", fmt17(*x));
            }
            s
        }
    };
    run.emit(&a.output.out, &body)
}

fn batch_rng(cfg: &SamplerConfig) -> serde_json::Value {
    serde_json::json!({
        "algorithm": chgoe::montecarlo::RNG_ALGORITHM,
        "seed": cfg.seed,
        "streams": format!("0..{}", cfg.num_samples),
    })
}

fn cmd_converge(a: &ConvergeArgs) -> Res<()> {
    let mut run = Run::new("converge", a);
    if a.p.is_empty() || a.p.contains(&0) {
        return Err(Failure::Param("--p must list positive integers".into()));
    }
    let us = grid(None, 0.0, a.u_max, a.points + 1)?[1..].to_vec();
    let lim = tabulate(Quantity::MicroSmallest, CurveParams { p: None, nu: 2 * a.k }, &us)?;
    let mut cols = vec![];
    let mut devs = vec![];
    for &p in &a.p {
        let ts: Vec<f64> = us.iter().map(|u| u / (4.0 * p as f64)).collect();
        let c = tabulate(Quantity::Smallest, CurveParams { p: Some(p), nu: 2 * a.k }, &ts)?;
        let v: Vec<f64> = c.samples.iter().map(|s| s.1 / (4.0 * p as f64)).collect();
        let d = v.iter().zip(&lim.samples).map(|(x, l)| (x - l.1).abs()).fold(0.0, f64::max);
        eprintln!("p = {p}: sup deviation {d:.6e}");
        devs.push(d);
        cols.push(v);
    }
    let mut s = String::from("u");
    for p in &a.p {
        let _ = write!(s, ",p{p}");
    }
    s.push_str(",limit\n");
    for (i, u) in us.iter().enumerate() {
        s.push_str(&fmt17(*u));
        for c in &cols {
            let _ = write!(s, ",{}", fmt17(c[i]));
        }
        let _ = writeln!(s, ",{}", fmt17(lim.samples[i].1));
    }
    let decreasing = devs.windows(2).all(|w| w[1] < w[0]);
    run.summary = serde_json::json!({ "p": a.p, "sup_deviation": devs, "strictly_decreasing": decreasing });
    run.emit(&a.output.out, &s)?;
    if !decreasing {
        return Err(Failure::Numeric(format!("deviations not strictly decreasing: {devs:?}")));
    }
    Ok(())
}

fn cmd_expdecay(a: &ExpdecayArgs) -> Res<()> {
    let run = Run::new("expdecay", a);
    if a.p == 0 || !(a.rho.abs() < 1.0) {
        return Err(Failure::Param("need p > 0 and |rho| < 1".into()));
    }
    let c = if a.raw { exp_decay_correlation(a.p, a.rho) } else { normalized_exp_decay(a.p, a.rho)?.0 };
    let mut body = String::new();
    for i in 0..c.nrows() {
        let row: Vec<String> = (0..c.ncols()).map(|j| fmt17(c[(i, j)])).collect();
        body.push_str(&row.join(","));
        body.push('\n');
    }
    run.emit(&a.output.out, &body)
}

fn cmd_selftest(a: &SelftestArgs) -> Res<()> {
    let out = chgoe::selftest::run(a.perturb.as_deref());
    let mut failed = 0;
    for o in &out {
        let status = if o.passed { "PASS" } else { "FAIL" };
        println!("{status} {:<40} error {:.3e} (tolerance {:.0e}) {}", o.name, o.error, o.tolerance, o.detail);
        failed += usize::from(!o.passed);
    }
    if failed > 0 {
        return Err(Failure::Numeric(format!("{failed} selftest item(s) failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(3);
        }
    }
    let r = match &cli.cmd {
        Cmd::Gap(a) => cmd_finite(a, Quantity::Gap),
        Cmd::Smallest(a) => cmd_finite(a, Quantity::Smallest),
        Cmd::Micro(a) => cmd_micro(a),
        Cmd::Mc(a) => cmd_mc(a),
        Cmd::Converge(a) => cmd_converge(a),
        Cmd::Expdecay(a) => cmd_expdecay(a),
        Cmd::Selftest(a) => cmd_selftest(a),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (Failure::Param(m) | Failure::Numeric(m) | Failure::Io(m)) = &f;
            eprintln!("error: {m}");
            ExitCode::from(f.code())
        }
    }
}
