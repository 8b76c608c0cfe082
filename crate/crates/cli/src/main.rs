//! `qar`: heat currents, noise, cooling maps and cycle decompositions of
//! quantum absorption refrigerators from the command line.

mod check;
mod output;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use qar_fcs::analytic::{cop, decompose};
use qar_fcs::fcs::{noise_of, numeric_cumulants, report, NOISE_COEFF_TOL};
use qar_fcs::io::load_model;
use qar_fcs::liouvillian::build_counting_family;
use qar_fcs::model::{preset, PresetId, PresetParams, QarModel, DEFAULT_GAP_EPS};
use qar_fcs::scan::{grid_scan, line_scan, lines_to_json, write_lines_csv, LineSpec, ScanSpec, DEAD_ZONE};

use output::{num, with_sink, write_json, write_table, Format, Table};

/// Finite-difference step for `--verify`.
const VERIFY_STEP: f64 = 1e-4;
const VERIFY_TOL: f64 = 1e-6;

#[derive(Parser, Debug)]
#[command(name = "qar", version, about = "Full counting statistics of quantum absorption refrigerators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Heat current at one bath.
    Current {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Also print the characteristic polynomial of L(0).
        #[arg(long)]
        verbose: bool,
    },
    /// Zero-frequency noise at one bath.
    Noise {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Cross-check against numeric cumulants of the full generating function.
        #[arg(long)]
        verify: bool,
    },
    /// Cold-bath current over the (E21, betaH) plane.
    Scan {
        #[arg(long, value_parser = parse_preset)]
        preset: PresetId,
        /// Grid size as E21 points x betaH points.
        #[arg(long, value_parser = parse_resolution, default_value = "101x101")]
        resolution: (usize, usize),
        #[command(flatten)]
        out: OutArgs,
    },
    /// Cold-bath current against E21 at fixed betaH for several presets.
    Line {
        #[arg(long, value_delimiter = ',', value_parser = parse_preset, default_value = "A,B,C,D")]
        presets: Vec<PresetId>,
        #[arg(long = "betaH", default_value_t = 0.9)]
        beta_h: f64,
        /// Number of E21 points.
        #[arg(long, default_value_t = 1001)]
        resolution: usize,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Split the cold-bath current into cycles and heat leaks.
    Decompose {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Coefficient of performance against the Carnot bound.
    Cop {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Run the seeded invariant suite (or the model checks on one file).
    Check {
        #[arg(long, default_value_t = 20_240_601)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
    },
    /// List the built-in three-level presets.
    Presets {
        #[command(flatten)]
        out: OutArgs,
    },
}

#[derive(Args, Debug, Clone)]
struct ModelArgs {
    /// Built-in model A-D; combine with --e21 and --betaH.
    #[arg(long, value_parser = parse_preset, conflicts_with = "model")]
    preset: Option<PresetId>,
    /// JSON model file (1-based level indices).
    #[arg(long, conflicts_with_all = ["e21", "beta_h"])]
    model: Option<PathBuf>,
    #[arg(long)]
    e21: Option<f64>,
    #[arg(long = "betaH")]
    beta_h: Option<f64>,
    /// Counted bath label; defaults to the cold bath.
    #[arg(long)]
    bath: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct OutArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

fn parse_preset(s: &str) -> std::result::Result<PresetId, String> {
    s.parse().map_err(|e: qar_fcs::Error| e.to_string())
}

fn parse_resolution(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected NxM, got '{s}'"))?;
    let n = a.trim().parse().map_err(|_| format!("bad E21 count '{a}'"))?;
    let m = b.trim().parse().map_err(|_| format!("bad betaH count '{b}'"))?;
    Ok((n, m))
}

#[derive(Debug)]
enum CliError {
    Core(qar_fcs::Error),
    Io(std::io::Error),
    Verify(String),
    Check(Vec<&'static str>),
}

impl From<qar_fcs::Error> for CliError {
    fn from(e: qar_fcs::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Io(_) => "io",
            CliError::Verify(_) => "verification-failed",
            CliError::Check(_) => "check-failed",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Io(e) => format!("i/o error: {e}"),
            CliError::Verify(m) => m.clone(),
            CliError::Check(names) => format!("failed properties: {}", names.join(", ")),
        }
    }

    /// Input errors exit with 2, an inapplicable noise formula with 3,
    /// everything else with 1.
    fn exit_code(&self) -> u8 {
        match self.code() {
            "validation" | "domain" | "model-file" => 2,
            "noise-formula-inapplicable" => 3,
            _ => 1,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Resolved model plus a provenance string for output headers.
struct Source {
    model: QarModel,
    label: String,
}

fn load(args: &ModelArgs) -> CliResult<Source> {
    match (&args.preset, &args.model) {
        (Some(id), None) => {
            let e21 = args.e21.unwrap_or(0.5);
            let bh = args.beta_h.unwrap_or(0.9);
            Ok(Source {
                model: preset(*id, e21, bh)?,
                label: format!("preset {id} e21={e21:e} betaH={bh:e}"),
            })
        }
        (None, Some(path)) => Ok(Source {
            model: load_model(path)?,
            label: path.display().to_string(),
        }),
        (None, None) => Err(qar_fcs::Error::Validation(
            "exactly one model source is required: --preset or --model".into(),
        )
        .into()),
        (Some(_), Some(_)) => {
            Err(qar_fcs::Error::Validation("--preset and --model are mutually exclusive".into()).into())
        }
    }
}

fn counted_bath(model: &QarModel, label: Option<&str>) -> CliResult<usize> {
    match label {
        None => Ok(model.cold_index()),
        Some(l) => model.bath_index(l).ok_or_else(|| {
            let known: Vec<&str> = model.baths().iter().map(|b| b.label.as_str()).collect();
            qar_fcs::Error::Validation(format!("no bath labelled '{l}' (have {})", known.join(", "))).into()
        }),
    }
}

fn provenance(t: Table, command: &str, source: &str) -> Table {
    t.meta("command", command)
        .meta("model", source)
        .meta("noise_coeff_tol", num(NOISE_COEFF_TOL))
        .meta("gap_eps", num(DEFAULT_GAP_EPS))
}

fn cmd_current(m: &ModelArgs, out: &OutArgs, verbose: bool) -> CliResult<()> {
    let src = load(m)?;
    let bath = counted_bath(&src.model, m.bath.as_deref())?;
    let r = report(&src.model, bath)?;
    let mut cols = vec!["bath", "current", "cooling_value", "cooling", "cop"];
    let mut row = vec![
        json!(r.bath_label),
        num(r.current),
        num(r.cooling_value),
        json!(r.cooling),
        // the currents ratio is a COP only while the device cools
        r.cop.filter(|_| r.cooling).map_or(Value::Null, num),
    ];
    if verbose {
        cols.push("charpoly");
        row.push(Value::Array(r.charpoly.coeffs.iter().map(|&c| num(c)).collect()));
    }
    let mut t = provenance(Table::new(&cols), "current", &src.label);
    t.push(row);
    Ok(write_table(&t, out.format, out.out.as_deref())?)
}

fn cmd_noise(m: &ModelArgs, out: &OutArgs, verify: bool) -> CliResult<()> {
    let src = load(m)?;
    let bath = counted_bath(&src.model, m.bath.as_deref())?;
    let fam = build_counting_family(&src.model, bath)?;
    let s = noise_of(&fam)?;
    let r = report(&src.model, bath)?;
    let mut cols = vec!["bath", "current", "noise"];
    let mut row = vec![json!(r.bath_label), num(r.current), num(s)];
    let mut failed = None;
    if verify {
        let (jn, sn) = numeric_cumulants(&fam, VERIFY_STEP)?;
        let ej = rel(jn, r.current);
        let es = rel(sn, s);
        cols.extend(["current_numeric", "noise_numeric", "current_rel_err", "noise_rel_err", "verified"]);
        let ok = ej <= VERIFY_TOL && es <= VERIFY_TOL;
        row.extend([num(jn), num(sn), num(ej), num(es), json!(ok)]);
        if !ok {
            failed = Some(format!(
                "numeric cumulants disagree: current {ej:.3e}, noise {es:.3e} (tolerance {VERIFY_TOL:e})"
            ));
        }
    }
    let mut t = provenance(Table::new(&cols), "noise", &src.label);
    if verify {
        t = t.meta("verify_step", num(VERIFY_STEP)).meta("verify_tol", num(VERIFY_TOL));
    }
    t.push(row);
    write_table(&t, out.format, out.out.as_deref())?;
    match failed {
        Some(msg) => Err(CliError::Verify(msg)),
        None => Ok(()),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    let m = a.abs().max(b.abs());
    if m == 0.0 {
        0.0
    } else {
        (a - b).abs() / m
    }
}

/// Data go to `--out` with the summary on stdout; without `--out` the data
/// take stdout and the summary moves to stderr.
fn summary_sink(out: Option<&Path>) -> Box<dyn Write> {
    if out.is_some() {
        Box::new(std::io::stdout())
    } else {
        Box::new(std::io::stderr())
    }
}

fn cmd_scan(id: PresetId, res: (usize, usize), out: &OutArgs) -> CliResult<()> {
    let spec = ScanSpec::new(id).with_resolution(res.0, res.1);
    let g = grid_scan(&spec)?;
    with_sink(out.out.as_deref(), |w| match out.format {
        Format::Csv => g.write_csv(w),
        Format::Json => write_json(&g.to_json(), w),
    })?;
    let s = g.summary();
    let mut w = summary_sink(out.out.as_deref());
    writeln!(w, "preset {id}: {}x{} grid", res.0, res.1)?;
    writeln!(w, "cooling fraction: {:.6}", s.cooling_fraction)?;
    writeln!(
        w,
        "max current: {:.6e} at e21={:.6}, betaH={:.6}",
        s.max_current, s.max_e21, s.max_beta_h
    )?;
    match s.cooling_e21_span {
        Some((lo, hi)) => writeln!(w, "cooling e21 span: [{lo:.6}, {hi:.6}]")?,
        None => writeln!(w, "cooling e21 span: none")?,
    }
    Ok(())
}

fn cmd_line(presets: &[PresetId], beta_h: f64, n: usize, out: &OutArgs) -> CliResult<()> {
    let curves = line_scan(&LineSpec::new(presets.to_vec(), beta_h, n))?;
    let params = PresetParams::default();
    with_sink(out.out.as_deref(), |w| match out.format {
        Format::Csv => write_lines_csv(&curves, &params, w),
        Format::Json => write_json(&lines_to_json(&curves, &params), w),
    })?;
    let mut w = summary_sink(out.out.as_deref());
    for c in &curves {
        let (j, x) = c.max();
        let span = c
            .cooling_span()
            .map_or("none".to_string(), |(lo, hi)| format!("[{lo:.6}, {hi:.6}]"));
        writeln!(w, "preset {}: max current {j:.6e} at e21={x:.6}; cooling e21 span {span}", c.preset)?;
    }
    Ok(())
}

fn cmd_decompose(m: &ModelArgs, out: &OutArgs) -> CliResult<()> {
    let src = load(m)?;
    if m.bath.is_some() {
        return Err(qar_fcs::Error::Validation("decompose always counts at the cold bath; drop --bath".into()).into());
    }
    let d = decompose(&src.model, true)?;
    let rel_residual = d.reconstruction_error();
    let mut t = provenance(Table::new(&["kind", "transition", "bath", "value"]), "decompose", &src.label)
        .meta("units", "current (parts divided by a_(N-1)(0))")
        .meta("total", num(d.total))
        .meta("current", num(d.reference))
        .meta("reconstruction_residual", num(rel_residual));
    let cold = src.model.bath(src.model.cold_index()).label.clone();
    for c in &d.cycles {
        t.push(vec![
            json!("cycle"),
            json!(format!("{}-{}", c.upper + 1, c.lower + 1)),
            json!(cold),
            num(c.value),
        ]);
    }
    for l in &d.leaks {
        t.push(vec![
            json!("leak"),
            json!(format!("{}-{}", l.upper + 1, l.lower + 1)),
            json!(l.bath_label),
            num(l.value),
        ]);
    }
    Ok(write_table(&t, out.format, out.out.as_deref())?)
}

fn cmd_cop(m: &ModelArgs, out: &OutArgs) -> CliResult<()> {
    let src = load(m)?;
    let c = cop(&src.model)?;
    let mut t = provenance(
        Table::new(&["cop_currents", "cop_levels", "carnot", "carnot_fraction"]),
        "cop",
        &src.label,
    );
    t.push(vec![num(c.from_currents), num(c.from_levels), num(c.carnot), num(c.from_currents / c.carnot)]);
    Ok(write_table(&t, out.format, out.out.as_deref())?)
}

fn cmd_check(seed: u64, trials: usize, model: Option<&Path>, out: &OutArgs) -> CliResult<()> {
    let (results, label) = match model {
        Some(p) => (check::run_on_model(&load_model(p)?)?, p.display().to_string()),
        None => {
            if trials == 0 {
                return Err(qar_fcs::Error::Validation("--trials must be positive".into()).into());
            }
            (check::run_suite(seed, trials)?, format!("random seed={seed} trials={trials}"))
        }
    };
    let mut t = Table::new(&["property", "status", "cases", "worst", "tolerance", "note"])
        .meta("command", "check")
        .meta("models", label);
    for r in &results {
        t.push(vec![
            json!(r.name),
            json!(if r.passed() { "pass" } else { "FAIL" }),
            json!(r.cases),
            num(r.worst),
            num(r.tolerance),
            json!(r.note),
        ]);
    }
    write_table(&t, out.format, out.out.as_deref())?;
    let failed: Vec<&'static str> = results.iter().filter(|r| !r.passed()).map(|r| r.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(failed))
    }
}

fn cmd_presets(out: &OutArgs) -> CliResult<()> {
    let p = PresetParams::default();
    let mut t = Table::new(&["preset", "description"])
        .meta("e31", num(p.e31))
        .meta("beta_c", num(p.beta_c))
        .meta("beta_w", num(p.beta_w))
        .meta("omega_c", num(p.omega_c))
        .meta("gamma", num(p.gamma))
        .meta("weak_ratio", num(p.weak_ratio))
        .meta("dead_zone", num(DEAD_ZONE));
    for id in PresetId::ALL {
        t.push(vec![json!(id.to_string()), json!(id.describe())]);
    }
    Ok(write_table(&t, out.format, out.out.as_deref())?)
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Current { model, out, verbose } => cmd_current(model, out, *verbose),
        Command::Noise { model, out, verify } => cmd_noise(model, out, *verify),
        Command::Scan { preset, resolution, out } => cmd_scan(*preset, *resolution, out),
        Command::Line {
            presets,
            beta_h,
            resolution,
            out,
        } => cmd_line(presets, *beta_h, *resolution, out),
        Command::Decompose { model, out } => cmd_decompose(model, out),
        Command::Cop { model, out } => cmd_cop(model, out),
        Command::Check { seed, trials, model, out } => cmd_check(*seed, *trials, model.as_deref(), out),
        Command::Presets { out } => cmd_presets(out),
    }
}

fn format_of(cli: &Cli) -> Format {
    match &cli.command {
        Command::Current { out, .. }
        | Command::Noise { out, .. }
        | Command::Scan { out, .. }
        | Command::Line { out, .. }
        | Command::Decompose { out, .. }
        | Command::Cop { out, .. }
        | Command::Check { out, .. }
        | Command::Presets { out } => out.format,
    }
}

fn report_error(code: &str, message: &str, json_mode: bool) {
    if json_mode {
        let v = json!({ "error": { "code": code, "message": message } });
        eprintln!("{v}");
    } else {
        eprintln!("error [{code}]: {message}");
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            // the format flag may be all that parsed; honour it for the error
            let args: Vec<String> = std::env::args().collect();
            let json_mode = args
                .windows(2)
                .any(|w| w[0] == "--format" && w[1] == "json")
                || args.iter().any(|a| a == "--format=json");
            if json_mode {
                report_error("usage", e.to_string().trim(), true);
            } else {
                let _ = e.print();
            }
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(e.code(), &e.message(), format_of(&cli) == Format::Json);
            ExitCode::from(e.exit_code())
        }
    }
}
