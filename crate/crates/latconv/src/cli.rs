//! Command-line front end. [`run`] parses arguments, dispatches a subcommand and maps the
//! outcome onto an exit code.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;

use crate::attractor::{attractor_grid, llt_approx_grid};
use crate::error::{LatconvError, Result};
use crate::examples::{builtin, BUILTIN_NAMES};
use crate::expansion::{analyze_with, AnalyzeOptions, SpectralAnalysis};
use crate::format::{
    fmt_f64, format_function, graymap_sidecar, read_function, write_graymap, write_grid_csv,
    GrayChannel,
};
use crate::homogeneous::HomogeneousPolynomial;
use crate::lattice::{DenseGrid, LatticeBox, LatticeFunction, PowerConfig, PowerMethod};
use crate::legendre::ConjugateEvaluator;
use crate::verify::{
    derivative_bound_fit, direct_work, gaussian_bound_fit, llt_error, stability_report,
    subexp_bound_fit, sup_decay_report, support_periodicity_check, theta, theta_cosine,
    walk_profile, windowed_power, BoundReport, DIRECT_WORK_CAP,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VERDICT: i32 = 3;
pub const EXIT_RESOURCE: i32 = 4;

const THETA_AGREEMENT: f64 = 1e-10;

#[derive(Parser, Debug)]
#[command(
    name = "latconv",
    version,
    about = "Convolution powers of finitely supported functions on Z^d"
)]
struct Cli {
    /// Builtin example name (see `examples list`).
    #[arg(long, global = true, conflicts_with = "input")]
    example: Option<String>,
    /// Function file: a `dim d` line, then `x_1 .. x_d re im` rows.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Exponents: `a,b,c`, an inclusive range `a..b`, or a geometric range `a..bxk`.
    #[arg(long, global = true)]
    n: Option<String>,
    /// Lattice window `a:b,c:d,...`.
    #[arg(long, global = true, allow_hyphen_values = true)]
    window: Option<String>,
    /// Unit-modulus tolerance used by the analysis.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory for output files; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Unit-modulus points, their classification, drifts, polynomials and exponents.
    Analyze,
    /// `f^(n)` as a CSV grid or a graymap.
    Power {
        #[arg(long, value_enum, default_value = "auto")]
        method: MethodArg,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        #[arg(long, value_enum, default_value = "re")]
        channel: ChannelArg,
    },
    /// Local-limit error table; with `--window`, also the approximation grids.
    Llt,
    /// The attractor `H_P^t` on a window.
    Attractor {
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// Index into the unit-modulus points of the analysis.
        #[arg(long, default_value_t = 0)]
        point: usize,
        /// Polynomial CSV file used instead of an analyzed input.
        #[arg(long)]
        poly: Option<PathBuf>,
    },
    /// The Legendre-Fenchel transform of `Re P` at given points or on a window.
    Legendre {
        /// A point `x_1,..,x_d`; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        at: Vec<String>,
        #[arg(long, default_value_t = 0)]
        point: usize,
        #[arg(long)]
        poly: Option<PathBuf>,
    },
    /// Fitted pointwise-bound constants.
    Bounds {
        #[arg(long, value_enum, default_value = "gaussian")]
        kind: BoundKind,
        /// Decay order of the sub-exponential envelope.
        #[arg(long, default_value_t = 4)]
        order: u32,
        /// Difference directions `v_1;v_2;..`, each `c_1,..,c_d`.
        #[arg(long, allow_hyphen_values = true)]
        v: Option<String>,
        /// Difference orders `b_1,..,b_d`.
        #[arg(long)]
        beta: Option<String>,
    },
    /// `l^1` norms of `f^(n)` and the stability verdict.
    Stability {
        #[arg(long, default_value_t = 512)]
        nmax: u64,
    },
    /// Periodicity prefactor of a probability distribution on a window.
    Theta {
        /// Also check the support inclusion for every exponent up to this value.
        #[arg(long)]
        periodicity: Option<u64>,
    },
    /// Builtin example functions.
    Examples {
        #[command(subcommand)]
        action: ExamplesAction,
    },
}

#[derive(Subcommand, Debug)]
enum ExamplesAction {
    List,
    Emit { name: String },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Auto,
    Direct,
    Fast,
    Spectral,
    Windowed,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Pgm,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ChannelArg {
    Re,
    Abs,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BoundKind {
    Decay,
    Gaussian,
    Subexp,
    Derivative,
}

/// Where outputs go: named files in a directory, or concatenated for standard output.
struct Sink {
    dir: Option<PathBuf>,
    stdout: Vec<u8>,
}

impl Sink {
    fn emit(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        match &self.dir {
            Some(d) => fs::write(d.join(name), bytes)?,
            None => self.stdout.extend_from_slice(bytes),
        }
        Ok(())
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run`] with explicit output streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: cannot start worker threads: {e}");
            return EXIT_RESOURCE;
        }
    };
    let mut sink = Sink {
        dir: cli.out.clone(),
        stdout: Vec::new(),
    };
    let result = pool.install(|| dispatch(&cli, &mut sink));
    if let Err(e) = out.write_all(&sink.stdout).and_then(|_| out.flush()) {
        let _ = writeln!(err, "error: {e}");
        return EXIT_RESOURCE;
    }
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &LatconvError) -> i32 {
    match e {
        LatconvError::InvalidArgument(_)
        | LatconvError::Parse { .. }
        | LatconvError::DimensionMismatch { .. }
        | LatconvError::ZeroFunction
        | LatconvError::NotProbability(_)
        | LatconvError::InvalidPolynomial(_) => EXIT_USAGE,
        LatconvError::Resource(_) | LatconvError::Io(_) => EXIT_RESOURCE,
        LatconvError::NotNormalized(_)
        | LatconvError::NotUnitModulus(_)
        | LatconvError::AnalysisFailed(_)
        | LatconvError::HypothesisViolation(_)
        | LatconvError::Numerical(_) => EXIT_VERDICT,
    }
}

fn dispatch(cli: &Cli, sink: &mut Sink) -> Result<i32> {
    if let Some(d) = &cli.out {
        fs::create_dir_all(d)?;
    }
    let cfg = PowerConfig::default();
    match &cli.command {
        Command::Examples { action } => examples_cmd(action, sink),
        Command::Analyze => {
            let f = load(cli)?;
            let a = analysis(cli, &f)?;
            sink.emit("analysis.txt", analysis_report(&a).as_bytes())?;
            Ok(EXIT_OK)
        }
        Command::Power {
            method,
            format,
            channel,
        } => power_cmd(cli, *method, *format, *channel, &cfg, sink),
        Command::Llt => llt_cmd(cli, &cfg, sink),
        Command::Attractor { t, point, poly } => {
            let p = polynomial(cli, *point, poly.as_ref())?;
            let window = require_window(cli)?;
            let g = attractor_grid(&p, *t, &window)?;
            sink.emit("attractor.csv", &grid_csv(&g.values)?)?;
            Ok(EXIT_OK)
        }
        Command::Legendre { at, point, poly } => legendre_cmd(cli, at, *point, poly.as_ref(), sink),
        Command::Bounds {
            kind,
            order,
            v,
            beta,
        } => {
            let f = load(cli)?;
            let ns = exponents(cli, "1..256x2")?;
            let rep = match kind {
                BoundKind::Decay => sup_decay_report(&f, &ns)?,
                BoundKind::Gaussian => gaussian_bound_fit(&f, &ns, &cfg)?,
                BoundKind::Subexp => subexp_bound_fit(&f, &ns, *order, &cfg)?,
                BoundKind::Derivative => {
                    let v = parse_vectors(
                        v.as_deref()
                            .ok_or_else(|| LatconvError::invalid("--v is required"))?,
                    )?;
                    let beta = parse_list::<u32>(
                        beta.as_deref()
                            .ok_or_else(|| LatconvError::invalid("--beta is required"))?,
                    )?;
                    derivative_bound_fit(&f, &v, &beta, &ns, &cfg)?
                }
            };
            let name = format!("bounds_{}.csv", format!("{kind:?}").to_lowercase());
            emit_report(&rep, &name, sink)
        }
        Command::Stability { nmax } => {
            let f = load(cli)?;
            let rep = stability_report(&f, *nmax, &cfg)?;
            emit_report(&rep, "stability.csv", sink)
        }
        Command::Theta { periodicity } => theta_cmd(cli, *periodicity, sink),
    }
}

fn emit_report(rep: &BoundReport, name: &str, sink: &mut Sink) -> Result<i32> {
    sink.emit(name, rep.to_csv().as_bytes())?;
    Ok(if rep.verdict.passed() {
        EXIT_OK
    } else {
        EXIT_VERDICT
    })
}

fn load(cli: &Cli) -> Result<LatticeFunction> {
    match (&cli.example, &cli.input) {
        (Some(name), _) => builtin(name),
        (None, Some(path)) => read_function(BufReader::new(fs::File::open(path)?)),
        (None, None) => Err(LatconvError::invalid(
            "one of --example or --input is required",
        )),
    }
}

fn analysis(cli: &Cli, f: &LatticeFunction) -> Result<SpectralAnalysis> {
    let mut opts = AnalyzeOptions::default();
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(LatconvError::invalid("--tol must be positive"));
        }
        opts.omega_tol = t;
    }
    analyze_with(f, &opts)
}

fn require_window(cli: &Cli) -> Result<LatticeBox> {
    cli.window
        .as_deref()
        .ok_or_else(|| LatconvError::invalid("--window is required"))?
        .parse()
}

fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<T>()
                .map_err(|_| LatconvError::invalid(format!("bad list entry '{t}'")))
        })
        .collect()
}

fn parse_vectors(s: &str) -> Result<Vec<Vec<i64>>> {
    s.split(';').map(parse_list::<i64>).collect()
}

/// Parses `a,b,c`, `a..b` or `a..bxk` into a strictly increasing list of positive integers.
fn parse_exponents(s: &str) -> Result<Vec<u64>> {
    let bad = || LatconvError::invalid(format!("bad exponent list '{s}'"));
    let ns: Vec<u64> = match s.split_once("..") {
        Some((a, rest)) => {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let (b, step) = match rest.split_once('x') {
                Some((b, k)) => (b, Some(k.trim().parse::<u64>().map_err(|_| bad())?)),
                None => (rest, None),
            };
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            match step {
                Some(k) if k >= 2 && a >= 1 => {
                    let mut v = Vec::new();
                    let mut n = a;
                    while n <= b {
                        v.push(n);
                        n = n.checked_mul(k).ok_or_else(bad)?;
                    }
                    v
                }
                Some(_) => return Err(bad()),
                None => (a..=b).collect(),
            }
        }
        None => parse_list::<u64>(s)?,
    };
    if ns.is_empty() || ns[0] == 0 || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(LatconvError::invalid(
            "exponents must be positive and strictly increasing",
        ));
    }
    Ok(ns)
}

fn exponents(cli: &Cli, default: &str) -> Result<Vec<u64>> {
    parse_exponents(cli.n.as_deref().unwrap_or(default))
}

fn grid_csv(g: &DenseGrid) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_grid_csv(g, &mut buf)?;
    Ok(buf)
}

fn matrix_rows(m: &DMatrix<f64>) -> String {
    let rows: Vec<String> = m
        .row_iter()
        .map(|r| {
            format!(
                "[{}]",
                r.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(", ")
            )
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

fn vector(v: &[f64]) -> String {
    format!(
        "({})",
        v.iter().map(|c| fmt_f64(*c)).collect::<Vec<_>>().join(", ")
    )
}

fn analysis_report(a: &SpectralAnalysis) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "dim = {}", a.dim);
    let _ = writeln!(s, "scale = {}", fmt_f64(a.scale));
    let _ = writeln!(s, "verdict = {}", a.verdict);
    match a.mu {
        Some(mu) => {
            let _ = writeln!(s, "mu = {mu}");
        }
        None => {
            let _ = writeln!(s, "mu = none");
        }
    }
    let _ = writeln!(s, "minimal = {:?}", a.minimal);
    for w in &a.omega.warnings {
        let _ = writeln!(s, "warning = {w}");
    }
    for (k, p) in a.points.iter().enumerate() {
        let c = &p.classification;
        let _ = writeln!(s, "[point {k}]");
        let _ = writeln!(s, "xi = {}", vector(&p.xi));
        let _ = writeln!(s, "value = {} {}", fmt_f64(p.value.re), fmt_f64(p.value.im));
        let _ = writeln!(s, "verdict = {}", c.verdict);
        let _ = writeln!(s, "order = {}", c.diagnostics.order);
        let _ = writeln!(
            s,
            "residual = {}",
            fmt_f64(c.diagnostics.sub_homogeneous_residual)
        );
        if let Some(d) = &c.drift {
            let _ = writeln!(s, "drift = {}", vector(d));
        }
        if let Some(mu) = c.mu() {
            let _ = writeln!(s, "mu = {mu}");
        }
        if let Some(e) = c.exponent() {
            let _ = writeln!(s, "exponent = {}", matrix_rows(e));
        }
        if let Some(poly) = &c.polynomial {
            let _ = writeln!(s, "weights = {:?}", poly.weights());
            let _ = writeln!(s, "basis = {}", matrix_rows(poly.basis()));
            s.push_str("polynomial:\n");
            for line in poly.to_csv().lines() {
                let _ = writeln!(s, "  {line}");
            }
        }
        for note in &c.diagnostics.notes {
            let _ = writeln!(s, "note = {note}");
        }
    }
    s
}

fn examples_cmd(action: &ExamplesAction, sink: &mut Sink) -> Result<i32> {
    match action {
        ExamplesAction::List => {
            let mut s = String::new();
            for name in BUILTIN_NAMES {
                let _ = writeln!(s, "{name}");
            }
            sink.emit("examples.txt", s.as_bytes())?;
        }
        ExamplesAction::Emit { name } => {
            let f = builtin(name)?;
            let file: String = name
                .chars()
                .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
                .collect();
            sink.emit(&format!("{file}.txt"), format_function(&f).as_bytes())?;
        }
    }
    Ok(EXIT_OK)
}

fn power_grid(
    f: &LatticeFunction,
    cli: &Cli,
    n: u64,
    method: MethodArg,
    window: Option<&LatticeBox>,
    cfg: &PowerConfig,
) -> Result<DenseGrid> {
    let windowed = |w: &LatticeBox| -> Result<DenseGrid> {
        let a = analysis(cli, f)?;
        windowed_power(f, &a, n, w, cfg)
    };
    let full = match method {
        MethodArg::Direct => f.power_dense(n, PowerMethod::Direct, cfg),
        MethodArg::Fast => f.power_dense(n, PowerMethod::Fast, cfg),
        MethodArg::Spectral => f.power_dense(n, PowerMethod::Spectral, cfg),
        MethodArg::Windowed => {
            return windowed(
                window.ok_or_else(|| LatconvError::invalid("--method windowed needs --window"))?,
            )
        }
        MethodArg::Auto if direct_work(f, n) <= DIRECT_WORK_CAP => {
            f.power_dense(n, PowerMethod::Direct, cfg)
        }
        MethodArg::Auto => match (f.power_dense(n, PowerMethod::Fast, cfg), window) {
            (Err(LatconvError::Resource(_)), Some(w)) => return windowed(w),
            (r, _) => r,
        },
    }?;
    Ok(match window {
        Some(w) => full.restrict(w),
        None => full,
    })
}

fn power_cmd(
    cli: &Cli,
    method: MethodArg,
    format: FormatArg,
    channel: ChannelArg,
    cfg: &PowerConfig,
    sink: &mut Sink,
) -> Result<i32> {
    let f = load(cli)?;
    let ns = exponents(cli, "1")?;
    let window = cli
        .window
        .as_deref()
        .map(str::parse::<LatticeBox>)
        .transpose()?;
    if ns.len() > 1 && sink.dir.is_none() {
        return Err(LatconvError::invalid("several exponents need --out"));
    }
    if matches!(format, FormatArg::Pgm) && sink.dir.is_none() {
        return Err(LatconvError::invalid("graymap output needs --out"));
    }
    for &n in &ns {
        let g = power_grid(&f, cli, n, method, window.as_ref(), cfg)?;
        match format {
            FormatArg::Csv => sink.emit(&format!("power_n{n}.csv"), &grid_csv(&g)?)?,
            FormatArg::Pgm => {
                let ch = match channel {
                    ChannelArg::Re => GrayChannel::Real,
                    ChannelArg::Abs => GrayChannel::Abs,
                };
                let mut buf = Vec::new();
                let (lo, hi) = write_graymap(&g, ch, &mut buf)?;
                sink.emit(&format!("power_n{n}.pgm"), &buf)?;
                sink.emit(
                    &format!("power_n{n}.pgm.txt"),
                    graymap_sidecar(ch, lo, hi, &g).as_bytes(),
                )?;
            }
        }
    }
    Ok(EXIT_OK)
}

fn llt_cmd(cli: &Cli, cfg: &PowerConfig, sink: &mut Sink) -> Result<i32> {
    let f = load(cli)?;
    let a = analysis(cli, &f)?;
    let ns = exponents(cli, "16..256x2")?;
    let window = cli
        .window
        .as_deref()
        .map(str::parse::<LatticeBox>)
        .transpose()?;
    if window.is_some() && sink.dir.is_none() {
        return Err(LatconvError::invalid("approximation grids need --out"));
    }
    let mut rows = Vec::new();
    for &n in &ns {
        rows.push(llt_error(&a, n, cfg)?);
        if let Some(w) = &window {
            let g = llt_approx_grid(&a, n, w, cfg)?;
            sink.emit(&format!("llt_n{n}.csv"), &grid_csv(&g)?)?;
        }
    }
    let converging = rows.len() >= 2
        && rows
            .windows(2)
            .all(|w| w[1].scaled_error < w[0].scaled_error);
    let mut s = format!(
        "# verdict: {}\n# mu: {}\n",
        if converging {
            "converging"
        } else {
            "not-converging"
        },
        a.mu.map(|m| m.to_string()).unwrap_or_default()
    );
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["n".to_string(), "sup_error".into(), "scaled_error".into()];
    header.extend((1..=a.dim).map(|j| format!("argmax_{j}")));
    w.write_record(&header).map_err(crate::format::csv_err)?;
    for r in &rows {
        let mut rec = vec![
            r.n.to_string(),
            fmt_f64(r.sup_error),
            fmt_f64(r.scaled_error),
        ];
        rec.extend(r.argmax.iter().map(|c| c.to_string()));
        w.write_record(&rec).map_err(crate::format::csv_err)?;
    }
    s.push_str(
        &String::from_utf8(
            w.into_inner()
                .map_err(|e| LatconvError::Io(e.into_error()))?,
        )
        .expect("ascii output"),
    );
    sink.emit("llt.csv", s.as_bytes())?;
    Ok(if converging { EXIT_OK } else { EXIT_VERDICT })
}

fn polynomial(cli: &Cli, point: usize, poly: Option<&PathBuf>) -> Result<HomogeneousPolynomial> {
    if let Some(path) = poly {
        return HomogeneousPolynomial::from_csv(&fs::read_to_string(path)?);
    }
    let f = load(cli)?;
    let a = analysis(cli, &f)?;
    let p = a.points.get(point).ok_or_else(|| {
        LatconvError::invalid(format!(
            "point index {point} out of range ({} points)",
            a.points.len()
        ))
    })?;
    p.polynomial().cloned().ok_or_else(|| {
        LatconvError::AnalysisFailed(format!("point {point} is not of positive homogeneous type"))
    })
}

fn legendre_cmd(
    cli: &Cli,
    at: &[String],
    point: usize,
    poly: Option<&PathBuf>,
    sink: &mut Sink,
) -> Result<i32> {
    let p = polynomial(cli, point, poly)?;
    let ev = ConjugateEvaluator::new(&p)?;
    let mut pts: Vec<Vec<f64>> = at
        .iter()
        .map(|s| parse_list::<f64>(s))
        .collect::<Result<_>>()?;
    if let Some(w) = cli.window.as_deref() {
        let b: LatticeBox = w.parse()?;
        b.for_each_point(|x| pts.push(x.iter().map(|&c| c as f64).collect()));
    }
    if pts.is_empty() {
        return Err(LatconvError::invalid("give --at points or a --window"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (1..=p.dim()).map(|j| format!("x_{j}")).collect();
    header.push("value".into());
    w.write_record(&header).map_err(crate::format::csv_err)?;
    for x in &pts {
        if x.len() != p.dim() {
            return Err(LatconvError::DimensionMismatch {
                expected: p.dim(),
                found: x.len(),
            });
        }
        let mut rec: Vec<String> = x.iter().map(|c| fmt_f64(*c)).collect();
        rec.push(fmt_f64(ev.conjugate(x)?));
        w.write_record(&rec).map_err(crate::format::csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| LatconvError::Io(e.into_error()))?;
    sink.emit("legendre.csv", &bytes)?;
    Ok(EXIT_OK)
}

fn theta_cmd(cli: &Cli, periodicity: Option<u64>, sink: &mut Sink) -> Result<i32> {
    let f = load(cli)?;
    let profile = walk_profile(&f)?;
    let window = require_window(cli)?;
    let ns = exponents(cli, "1")?;
    let mut worst = 0.0f64;
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["n".to_string()];
    header.extend((1..=profile.dim).map(|j| format!("x_{j}")));
    header.extend(["theta".to_string(), "theta_cosine".into()]);
    w.write_record(&header).map_err(crate::format::csv_err)?;
    for &n in &ns {
        let mut failure = None;
        window.for_each_point(|x| {
            if failure.is_some() {
                return;
            }
            match theta(&profile, n, x) {
                Ok(t) => {
                    let c = theta_cosine(&profile, n, x);
                    worst = worst.max((t - c).abs());
                    let mut rec = vec![n.to_string()];
                    rec.extend(x.iter().map(|c| c.to_string()));
                    rec.push(fmt_f64(t));
                    rec.push(fmt_f64(c));
                    if let Err(e) = w.write_record(&rec) {
                        failure = Some(crate::format::csv_err(e));
                    }
                }
                Err(e) => failure = Some(e),
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
    }
    let mut passed = worst <= THETA_AGREEMENT;
    let mut head = String::new();
    if let Some(n_max) = periodicity {
        let check = support_periodicity_check(&f, n_max)?;
        passed &= check.holds;
        let _ = writeln!(
            head,
            "# verdict: {}",
            if passed { "holds" } else { "violated" }
        );
        if let Some((n, x)) = &check.first_violation {
            let _ = writeln!(head, "# violation: n={n} x={x:?}");
        }
    } else {
        let _ = writeln!(
            head,
            "# verdict: {}",
            if passed { "consistent" } else { "inconsistent" }
        );
    }
    let _ = writeln!(head, "# mean: {}", vector(&profile.mean));
    let _ = writeln!(head, "# covariance: {}", matrix_rows(&profile.covariance));
    let _ = writeln!(
        head,
        "# genuinely-d-dimensional: {}",
        profile.genuinely_d_dimensional
    );
    let mut bytes = head.into_bytes();
    bytes.extend(
        w.into_inner()
            .map_err(|e| LatconvError::Io(e.into_error()))?,
    );
    sink.emit("theta.csv", &bytes)?;
    Ok(if passed { EXIT_OK } else { EXIT_VERDICT })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_lists() {
        assert_eq!(parse_exponents("3,5,9").unwrap(), vec![3, 5, 9]);
        assert_eq!(parse_exponents("2..5").unwrap(), vec![2, 3, 4, 5]);
        assert_eq!(
            parse_exponents("16..512x2").unwrap(),
            vec![16, 32, 64, 128, 256, 512]
        );
        assert!(parse_exponents("0,1").is_err());
        assert!(parse_exponents("4,2").is_err());
        assert!(parse_exponents("1..8x1").is_err());
    }
}
