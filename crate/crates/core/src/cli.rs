//! Command line front end. Exit status: 0 success, 1 numerical failure
//! (including failed verifications), 2 usage or input errors.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use hermite_bmo::bmo::{bmo_h_norm_with, BmoEstimate};
use hermite_bmo::config::RunConfig;
use hermite_bmo::error::{Error, Result};
use hermite_bmo::grid::{Extension, GridFunction, GridGeometry};
use hermite_bmo::hermite::{heat_kernel, heat_kernel_ds, heat_kernel_meda, heat_kernel_t_dt, riesz_kernel, MedaParam, RieszQuadrature};
use hermite_bmo::input::{fmt_float, pair_header, read_grid_csv, write_grid_csv, Builtin};
use hermite_bmo::operators::{
    apply_heat, apply_heat_t_dt, apply_poisson, apply_poisson_t_dt, g_function, maximal_operator, riesz_transform, truncated_riesz,
    variation_field, variation_operator, Family, Semigroup,
};
use hermite_bmo::report::run_verification;
use hermite_bmo::svg::heatmap;
use hermite_bmo::verify::{size_ratio_grid, OperatorId, OrbitKernel, PairSweep};

const THREADS_VAR: &str = "HERMITE_BMO_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "hermite-bmo",
    version,
    about = "Hermite operator kernels, semigroups, BMO_H norms and kernel-bound verification"
)]
struct Cli {
    /// JSON run configuration; defaults apply when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set n=2` or `--set sweep.points=64`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a kernel at the point pairs of a CSV file.
    KernelEval {
        /// heat, heat_t, heat_ds, heat_t_dt or riesz(i).
        #[arg(long)]
        kernel: String,
        /// CSV with header `param,x...,y...` (`-` for stdin).
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the kernel-bound and T1 checks; writes a JSON summary.
    Verify {
        /// Operators to verify, replacing the configured list.
        #[arg(long = "operator")]
        operators: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the BMO_H norm of a function.
    BmoNorm {
        #[command(flatten)]
        input: FunctionInput,
        /// Repeat the estimate on these box half-widths at the same spacing.
        #[arg(long, value_delimiter = ',')]
        trend: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply an operator to a function; writes a grid CSV.
    OperatorApply {
        /// heat, heat_t_dt (param s), poisson, poisson_t_dt (param t),
        /// riesz(i), truncated_riesz(i) (param eps), maximal_heat,
        /// maximal_poisson, g_heat, g_poisson (configured time grid).
        #[arg(long)]
        operator: String,
        #[arg(long)]
        param: Option<f64>,
        #[command(flatten)]
        input: FunctionInput,
        /// Continuation past the box: clamp or zero.
        #[arg(long, default_value = "clamp")]
        extension: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// ρ-variation of orbits: of a family applied to a function, or of given values.
    Variation {
        /// heat, poisson or riesz_truncations(i).
        #[arg(long, required_unless_present = "orbit")]
        family: Option<String>,
        #[command(flatten)]
        input: OptionalInput,
        /// Orbit values in decreasing time order.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "family")]
        orbit: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct FunctionInput {
    /// Built-in function: constant[:c], coordinate[:i], sin[:i], log_spike:s[,x0...], hermite:k[,...].
    #[arg(long)]
    function: Option<String>,
    /// Grid CSV on the configured grid (`-` for stdin).
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[group(required = false, multiple = false)]
struct OptionalInput {
    #[arg(long)]
    function: Option<String>,
    #[arg(long)]
    input: Option<PathBuf>,
}

/// Errors of the front end, split by exit status.
enum Failure {
    Usage(String),
    Numeric(String),
    /// The reader of stdout went away (`| head`).
    ClosedOutput,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Accuracy { .. } | Error::Resolution(_) => Failure::Numeric(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::BrokenPipe {
            return Failure::ClosedOutput;
        }
        Failure::Usage(format!("i/o error: {e}"))
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

pub fn run(args: impl IntoIterator<Item = OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("error: {m}");
            1
        }
        Err(Failure::ClosedOutput) => 0,
    }
}

fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let k: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|k| *k > 0)
            .ok_or_else(|| Failure::Usage(format!("{THREADS_VAR} must be a positive integer, got `{v}`")))?;
        // fails only if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    Ok(())
}

fn load_config(cli: &Cli) -> CliResult<RunConfig> {
    let base = match &cli.config {
        None => Value::Object(Default::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", p.display())))?;
            if cli.overrides.is_empty() {
                // straight from the text, so errors carry line and column
                return RunConfig::from_json(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())));
            }
            serde_json::from_str(&text)
                .map_err(|e| Failure::Usage(format!("{}: {e} (line {}, column {})", p.display(), e.line(), e.column())))?
        }
    };
    Ok(RunConfig::with_overrides(base, &cli.overrides)?)
}

fn open_input(path: &Path) -> CliResult<Box<dyn Read>> {
    if path.as_os_str() == "-" {
        Ok(Box::new(io::stdin()))
    } else {
        let f = File::open(path).map_err(|e| Failure::Usage(format!("cannot open {}: {e}", path.display())))?;
        Ok(Box::new(f))
    }
}

fn open_output(path: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        None => Box::new(BufWriter::new(io::stdout())),
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Usage(format!("cannot create {}: {e}", p.display())))?,
        )),
    })
}

/// Renders in memory first so write failures keep their `io` kind.
fn emit_grid(w: &mut dyn Write, f: &GridFunction) -> CliResult<()> {
    let mut buf = Vec::new();
    write_grid_csv(&mut buf, f)?;
    w.write_all(&buf)?;
    Ok(())
}

fn write_json(out: &Option<PathBuf>, value: &impl Serialize) -> CliResult<()> {
    let mut w = open_output(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::Usage(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn load_function(function: &Option<String>, input: &Option<PathBuf>, geom: GridGeometry) -> CliResult<GridFunction> {
    match (function, input) {
        (Some(spec), _) => Ok(Builtin::from_str(spec)?.sample(geom)?),
        (None, Some(path)) => Ok(read_grid_csv(open_input(path)?, geom)?),
        (None, None) => Err(Failure::Usage("give --function or --input".into())),
    }
}

fn execute(cli: Cli) -> CliResult<i32> {
    configure_threads()?;
    let cfg = load_config(&cli)?;
    match cli.command {
        Command::KernelEval { kernel, points, out } => kernel_eval(&cfg, &kernel, &points, &out).map(|_| 0),
        Command::Verify { operators, out } => verify(cfg, &operators, &out),
        Command::BmoNorm { input, trend, out } => bmo_norm(&cfg, &input, &trend, &out).map(|_| 0),
        Command::OperatorApply {
            operator,
            param,
            input,
            extension,
            out,
        } => operator_apply(&cfg, &operator, param, &input, &extension, &out).map(|_| 0),
        Command::Variation { family, input, orbit, out } => variation(&cfg, family.as_deref(), &input, &orbit, &out).map(|_| 0),
    }
}

enum KernelId {
    Heat,
    HeatT,
    HeatDs,
    HeatTDt,
    Riesz(usize),
}

impl FromStr for KernelId {
    type Err = Failure;
    fn from_str(s: &str) -> CliResult<Self> {
        Ok(match s {
            "heat" => KernelId::Heat,
            "heat_t" => KernelId::HeatT,
            "heat_ds" => KernelId::HeatDs,
            "heat_t_dt" => KernelId::HeatTDt,
            _ => match s.parse::<OperatorId>() {
                Ok(OperatorId::Riesz { axis }) => KernelId::Riesz(axis),
                _ => return Err(Failure::Usage(format!("unknown kernel `{s}`"))),
            },
        })
    }
}

fn kernel_eval(cfg: &RunConfig, kernel: &str, points: &Path, out: &Option<PathBuf>) -> CliResult<()> {
    let id: KernelId = kernel.parse()?;
    let n = cfg.n;
    if let KernelId::Riesz(axis) = id {
        if axis >= n {
            return Err(Failure::Usage(format!("`{kernel}` needs dimension at least {}", axis + 1)));
        }
    }
    let param_name = match id {
        KernelId::HeatT => "t",
        KernelId::Riesz(_) => "param",
        _ => "s",
    };
    let mut want = vec!["param".to_string()];
    want.extend(pair_header(n));
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(open_input(points)?);
    let mut w = open_output(out)?;
    let mut header = vec![param_name.to_string()];
    header.extend(pair_header(n));
    header.push("value".into());
    writeln!(w, "{}", header.join(","))?;
    let ingest = |row: usize, message: String| Failure::from(Error::Ingestion { row, message });
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 1;
        let rec = rec.map_err(|e| ingest(row, e.to_string()))?;
        if k == 0 {
            let got: Vec<&str> = rec.iter().map(str::trim).collect();
            if got != want {
                return Err(ingest(
                    1,
                    format!("expected header `{}`, found `{}`", want.join(","), got.join(",")),
                ));
            }
            continue;
        }
        if rec.len() != 2 * n + 1 {
            return Err(ingest(row, format!("expected {} fields, found {}", 2 * n + 1, rec.len())));
        }
        let v = rec
            .iter()
            .map(|f| f.trim().parse::<f64>().map_err(|_| ingest(row, format!("`{f}` is not a number"))))
            .collect::<CliResult<Vec<f64>>>()?;
        let (p, x, y) = (v[0], &v[1..=n], &v[n + 1..]);
        let value = match id {
            KernelId::Heat => heat_kernel_meda(&MedaParam::new(p)?, x, y)?,
            KernelId::HeatT => heat_kernel(p, x, y)?,
            KernelId::HeatDs => heat_kernel_ds(&MedaParam::new(p)?, x, y)?,
            KernelId::HeatTDt => heat_kernel_t_dt(&MedaParam::new(p)?, x, y)?,
            KernelId::Riesz(axis) => riesz_kernel(axis, x, y, RieszQuadrature::default())?,
        };
        let fields: Vec<String> = v.iter().chain(std::iter::once(&value)).map(|f| fmt_float(*f)).collect();
        writeln!(w, "{}", fields.join(","))?;
    }
    w.flush()?;
    Ok(())
}

fn file_stem(op: OperatorId) -> String {
    op.to_string().replace(['(', ')'], "_").trim_end_matches('_').to_string()
}

fn verify(mut cfg: RunConfig, operators: &[String], out: &Option<PathBuf>) -> CliResult<i32> {
    if !operators.is_empty() {
        cfg.operators = operators.iter().map(|s| s.parse()).collect::<Result<Vec<OperatorId>>>()?;
        cfg.validate()?;
    }
    let summary = run_verification(&cfg)?;
    let mut w = open_output(out)?;
    w.write_all(summary.to_json().as_bytes())?;
    writeln!(w)?;
    w.flush()?;
    if let Some(dir) = &cfg.output_dir {
        if cfg.n == 1 && cfg.checks.size {
            fs::create_dir_all(dir)?;
            let sweep = PairSweep {
                seed: cfg.seed,
                ..cfg.sweep
            };
            for &op in &cfg.operators {
                let kernel = OrbitKernel::new(op, cfg.n, &cfg.grid_for(op)?)?;
                let grid = size_ratio_grid(&kernel, op.default_space(), cfg.c, &sweep, cfg.rho)?;
                let l = sweep.half_width;
                let svg = heatmap(&grid, &format!("{op}: log10 size ratio, c = {}", cfg.c), (-l, l), (-l, l));
                fs::write(dir.join(format!("{}_size_ratio.svg", file_stem(op))), svg)?;
            }
        }
    }
    if summary.passed() {
        Ok(0)
    } else {
        for line in summary.lines.iter().filter(|l| !l.passed) {
            eprintln!("verification failed for {}: {}", line.subject, line.problems.join("; "));
        }
        Ok(1)
    }
}

#[derive(Serialize)]
struct BmoOutput {
    function: String,
    estimate: BmoEstimate,
}

#[derive(Serialize)]
struct TrendRow {
    half_width: f64,
    points: usize,
    estimate: BmoEstimate,
}

#[derive(Serialize)]
struct TrendOutput {
    function: String,
    trend: Vec<TrendRow>,
}

fn bmo_norm(cfg: &RunConfig, input: &FunctionInput, trend: &[f64], out: &Option<PathBuf>) -> CliResult<()> {
    let label = match (&input.function, &input.input) {
        (Some(s), _) => s.clone(),
        (None, Some(p)) => p.display().to_string(),
        _ => unreachable!("clap requires one input"),
    };
    if trend.is_empty() {
        let f = load_function(&input.function, &input.input, cfg.geometry()?)?;
        let estimate = bmo_h_norm_with(&f, &cfg.context()?, &cfg.family)?;
        return write_json(out, &BmoOutput { function: label, estimate });
    }
    let spec = input
        .function
        .as_ref()
        .ok_or_else(|| Failure::Usage("--trend needs a built-in --function".into()))?;
    let builtin = Builtin::from_str(spec)?;
    let spacing = 2.0 * cfg.half_width / (cfg.points - 1) as f64;
    let mut rows = Vec::new();
    for &l in trend {
        let mut c = cfg.clone();
        c.half_width = l;
        c.points = (2.0 * l / spacing).round() as usize + 1;
        c.validate()?;
        let f = builtin.sample(c.geometry()?)?;
        rows.push(TrendRow {
            half_width: l,
            points: c.points,
            estimate: bmo_h_norm_with(&f, &c.context()?, &c.family)?,
        });
    }
    write_json(
        out,
        &TrendOutput {
            function: label,
            trend: rows,
        },
    )
}

fn need(param: Option<f64>, what: &str) -> CliResult<f64> {
    param.ok_or_else(|| Failure::Usage(format!("this operator needs --param ({what})")))
}

fn operator_apply(
    cfg: &RunConfig,
    operator: &str,
    param: Option<f64>,
    input: &FunctionInput,
    extension: &str,
    out: &Option<PathBuf>,
) -> CliResult<()> {
    let ext = match extension {
        "clamp" => Extension::Clamp,
        "zero" => Extension::Zero,
        _ => return Err(Failure::Usage(format!("unknown extension `{extension}`"))),
    };
    let f = load_function(&input.function, &input.input, cfg.geometry()?)?.with_extension(ext);
    let axis_of = |prefix: &str| -> Option<usize> {
        let inner = operator.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?;
        inner.parse::<usize>().ok().filter(|i| *i >= 1).map(|i| i - 1)
    };
    let g = match operator {
        "heat" => apply_heat(&f, &MedaParam::new(need(param, "s")?)?)?,
        "heat_t_dt" => apply_heat_t_dt(&f, &MedaParam::new(need(param, "s")?)?)?,
        "poisson" => apply_poisson(&f, need(param, "t")?)?,
        "poisson_t_dt" => apply_poisson_t_dt(&f, need(param, "t")?)?,
        "maximal_heat" => maximal_operator(&f, &cfg.time_grid.build()?, Semigroup::Heat)?,
        "maximal_poisson" => maximal_operator(&f, &cfg.time_grid.build()?, Semigroup::Poisson)?,
        "g_heat" => g_function(&f, &cfg.time_grid.build()?, Semigroup::Heat)?,
        "g_poisson" => g_function(&f, &cfg.time_grid.build()?, Semigroup::Poisson)?,
        _ => {
            if let Some(axis) = axis_of("truncated_riesz") {
                truncated_riesz(&f, axis, need(param, "eps")?)?
            } else if let Some(axis) = axis_of("riesz") {
                riesz_transform(&f, axis)?
            } else {
                return Err(Failure::Usage(format!("unknown operator `{operator}`")));
            }
        }
    };
    let mut w = open_output(out)?;
    emit_grid(&mut w, &g)?;
    w.flush()?;
    Ok(())
}

fn variation(cfg: &RunConfig, family: Option<&str>, input: &OptionalInput, orbit: &[f64], out: &Option<PathBuf>) -> CliResult<()> {
    let Some(family) = family else {
        let v = variation_operator(orbit, cfg.rho)?;
        let mut w = open_output(out)?;
        writeln!(w, "rho,variation")?;
        writeln!(w, "{},{}", fmt_float(cfg.rho), fmt_float(v))?;
        w.flush()?;
        return Ok(());
    };
    let (fam, grid) = match family {
        "heat" => (Family::Heat, cfg.time_grid.build()?),
        "poisson" => (Family::Poisson, cfg.time_grid.build()?),
        other => match other.parse::<OperatorId>() {
            Ok(OperatorId::RieszTruncations { axis }) => (Family::RieszTruncations { axis }, cfg.radii.build()?),
            _ => return Err(Failure::Usage(format!("unknown family `{other}`"))),
        },
    };
    let f = load_function(&input.function, &input.input, cfg.geometry()?)?;
    let v = variation_field(&f, &grid, fam, cfg.rho)?;
    let mut w = open_output(out)?;
    emit_grid(&mut w, &v)?;
    w.flush()?;
    Ok(())
}
