//! Command-line front end: jump coefficients, omega sweeps, cross-method
//! validation and field dumps, with machine-readable CSV/JSON output.
//!
//! All slope arguments are the physical frequency slope; the rescaled value
//! every formula runs on is computed internally and echoed next to it in
//! every output.
//!
//! Exit codes: 0 success, 2 configuration error, 3 pipeline tolerance
//! failure, 4 direct-solver (oracle) failure.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use kinjump::jump::{Pipeline, PipelineSettings};
use kinjump::model::{omega_c_form, rescale_slope, GasModel};
use kinjump::oracle::{extract_jumps, solve_direct, OracleConfig};
use kinjump::Error as KjError;

const EXIT_CONFIG: u8 = 2;
const EXIT_TOLERANCE: u8 = 3;
const EXIT_ORACLE: u8 = 4;

/// Residual gate for the coefficient pipeline diagnostics.
const RESIDUAL_GATE: f64 = 1e-3;
/// Cross-method agreement gate.
const VALIDATE_GATE: f64 = 1e-2;

#[derive(Parser)]
#[command(
    name = "kinjump",
    about = "Temperature and concentration jumps for a 1-D gas with speed-dependent collision frequency",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Jump coefficients and diagnostics for a single slope value.
    Coeffs {
        #[command(flatten)]
        slope: SlopeArg,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Jump coefficients over a slope range (parallel fan-out).
    Sweep {
        #[command(flatten)]
        range: RangeArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// The number parameter omega over a slope range (a = 0 allowed).
    Omega {
        #[command(flatten)]
        range: RangeArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Analytic coefficients against the direct discrete-ordinates solver.
    Validate {
        #[command(flatten)]
        slope: SlopeArg,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        oracle: OracleArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Dump the distribution function h(x, mu) as a long-format table.
    Field {
        #[command(flatten)]
        slope: SlopeArg,
        /// Which solver produces the field.
        #[arg(long, value_enum, default_value_t = FieldSource::Analytic)]
        source: FieldSource,
        /// Evaporation velocity forcing (units of the heat velocity).
        #[arg(long = "U", default_value_t = 0.0)]
        u: f64,
        /// Log-temperature gradient forcing (units of 1/l).
        #[arg(long = "gT", default_value_t = 1.0)]
        g_t: f64,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        oracle: OracleArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args)]
struct SlopeArg {
    /// Physical frequency slope (rescaled internally).
    #[arg(long)]
    a: f64,
}

#[derive(Args)]
struct RangeArgs {
    /// Single physical slope (alternative to the range flags).
    #[arg(long, conflicts_with_all = ["a_min", "a_max", "a_steps"])]
    a: Option<f64>,
    #[arg(long)]
    a_min: Option<f64>,
    #[arg(long)]
    a_max: Option<f64>,
    /// Number of points in the range (>= 1).
    #[arg(long)]
    a_steps: Option<usize>,
    /// Space the range geometrically instead of linearly.
    #[arg(long, default_value_t = false)]
    a_log: bool,
}

#[derive(Args)]
struct GridArgs {
    /// Panels of the symmetric velocity grid.
    #[arg(long, default_value_t = 48)]
    panels: usize,
    /// Gauss nodes per panel.
    #[arg(long, default_value_t = 12)]
    nodes: usize,
    /// Backbone sample count of the phase table.
    #[arg(long, default_value_t = 600)]
    theta_samples: usize,
}

#[derive(Args)]
struct OracleArgs {
    /// Spatial cells of the direct solver.
    #[arg(long)]
    nx: Option<usize>,
    /// Ordinate count of the direct solver.
    #[arg(long)]
    nmu: Option<usize>,
    /// Domain length in mean free paths.
    #[arg(long)]
    xmax: Option<f64>,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write to this path instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reserved; the pipeline is deterministic and ignores it.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, short, default_value_t = false)]
    verbose: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FieldSource {
    Analytic,
    Oracle,
}

/// Round-trip-safe number formatting: 17 significant digits, plain ASCII.
fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn fail(code: u8, msg: &str) -> ExitCode {
    eprintln!("kinjump: {msg}");
    ExitCode::from(code)
}

fn classify(e: &KjError) -> u8 {
    match e {
        KjError::InvalidParameter(_) | KjError::Domain(_) => EXIT_CONFIG,
        KjError::OracleNonConvergence { .. } | KjError::DomainTooShort { .. } => EXIT_ORACLE,
        _ => EXIT_TOLERANCE,
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("KINJUMP_THREADS") {
        match threads.parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => return fail(EXIT_CONFIG, "KINJUMP_THREADS must be a positive integer"),
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err((code, msg)) => fail(code, &msg),
    }
}

type CmdResult = Result<ExitCode, (u8, String)>;

fn run(cli: Cli) -> CmdResult {
    match cli.cmd {
        Cmd::Coeffs { slope, grid, output } => coeffs_cmd(&[slope.a], &grid, &output),
        Cmd::Sweep { range, grid, output } => {
            let values = expand_range(&range)?;
            coeffs_cmd(&values, &grid, &output)
        }
        Cmd::Omega { range, output } => omega_cmd(&range, &output),
        Cmd::Validate {
            slope,
            grid,
            oracle,
            output,
        } => validate_cmd(slope.a, &grid, &oracle, &output),
        Cmd::Field {
            slope,
            source,
            u,
            g_t,
            grid,
            oracle,
            output,
        } => field_cmd(slope.a, source, u, g_t, &grid, &oracle, &output),
    }
}

fn expand_range(range: &RangeArgs) -> Result<Vec<f64>, (u8, String)> {
    if let Some(a) = range.a {
        return Ok(vec![a]);
    }
    let (min, max, steps) = match (range.a_min, range.a_max, range.a_steps) {
        (Some(min), Some(max), Some(steps)) => (min, max, steps),
        _ => {
            return Err((
                EXIT_CONFIG,
                "provide either --a or all of --a-min/--a-max/--a-steps".into(),
            ))
        }
    };
    if steps < 1 {
        return Err((EXIT_CONFIG, "--a-steps must be at least 1".into()));
    }
    if !(min.is_finite() && max.is_finite() && min <= max) {
        return Err((EXIT_CONFIG, format!("bad range [{min}, {max}]")));
    }
    if range.a_log && min <= 0.0 {
        return Err((EXIT_CONFIG, "--a-log needs a positive --a-min".into()));
    }
    if steps == 1 {
        return Ok(vec![min]);
    }
    let mut out = Vec::with_capacity(steps);
    for i in 0..steps {
        let t = i as f64 / (steps - 1) as f64;
        out.push(if range.a_log {
            (min.ln() + t * (max.ln() - min.ln())).exp()
        } else {
            min + t * (max - min)
        });
    }
    Ok(out)
}

fn settings_from(grid: &GridArgs) -> PipelineSettings {
    PipelineSettings {
        full_panels: grid.panels,
        full_nodes_per_panel: grid.nodes,
        half_panels: grid.panels / 2,
        half_nodes_per_panel: grid.nodes,
        theta_samples: grid.theta_samples,
        ..PipelineSettings::default()
    }
}

struct CoeffRow {
    a_physical: f64,
    a: f64,
    values: [f64; 14],
    residual: f64,
}

const COEFF_HEADER: &str = "a_physical,a,eps_t_per_u,eps_t_per_gt,eps_n_per_u,eps_n_per_gt,\
omega,v1,v2,v3,k1,k0,l1,l0,boundary_residual,theta_winding";

fn coeff_row(a_physical: f64, grid: &GridArgs) -> Result<CoeffRow, (u8, String)> {
    let a = rescale_slope(a_physical).map_err(|e| (classify(&e), e.to_string()))?;
    let settings = settings_from(grid);
    let p = Pipeline::new(a, &settings).map_err(|e| (classify(&e), e.to_string()))?;
    let s = p.solution();
    let residual_u = p
        .boundary_residual(&p.solve(1.0, 0.0), 40)
        .map_err(|e| (classify(&e), e.to_string()))?;
    let residual_g = p
        .boundary_residual(&p.solve(0.0, 1.0), 40)
        .map_err(|e| (classify(&e), e.to_string()))?;
    let residual = residual_u.max(residual_g);
    Ok(CoeffRow {
        a_physical,
        a,
        values: [
            s.eps_t_per_u,
            s.eps_t_per_gt,
            s.eps_n_per_u,
            s.eps_n_per_gt,
            s.omega,
            s.v_moments.0,
            s.v_moments.1,
            s.v_moments.2,
            s.kl.k1,
            s.kl.k0,
            s.kl.l1,
            s.kl.l0,
            residual,
            p.theta_table().winding(),
        ],
        residual,
    })
}

fn coeffs_cmd(a_values: &[f64], grid: &GridArgs, output: &OutputArgs) -> CmdResult {
    use rayon::prelude::*;
    let rows: Vec<Result<CoeffRow, (u8, String)>> = a_values
        .par_iter()
        .map(|&a_phys| coeff_row(a_phys, grid))
        .collect();
    let mut text = String::new();
    let mut worst_residual = 0.0f64;
    match output.format {
        Format::Csv => {
            writeln!(text, "{COEFF_HEADER}").unwrap();
            for row in &rows {
                let row = row.as_ref().map_err(|e| e.clone())?;
                write!(text, "{},{}", fmt_f(row.a_physical), fmt_f(row.a)).unwrap();
                for v in row.values {
                    write!(text, ",{}", fmt_f(v)).unwrap();
                }
                writeln!(text).unwrap();
                worst_residual = worst_residual.max(row.residual);
            }
        }
        Format::Json => {
            let names = COEFF_HEADER.split(',').collect::<Vec<_>>();
            writeln!(text, "{{\"rows\":[").unwrap();
            for (i, row) in rows.iter().enumerate() {
                let row = row.as_ref().map_err(|e| e.clone())?;
                let mut fields = vec![fmt_f(row.a_physical), fmt_f(row.a)];
                fields.extend(row.values.iter().map(|&v| fmt_f(v)));
                let body: Vec<String> = names
                    .iter()
                    .zip(&fields)
                    .map(|(n, v)| format!("\"{n}\":{v}"))
                    .collect();
                let comma = if i + 1 < rows.len() { "," } else { "" };
                writeln!(text, "{{{}}}{comma}", body.join(",")).unwrap();
                worst_residual = worst_residual.max(row.residual);
            }
            writeln!(text, "]}}").unwrap();
        }
    }
    emit(output, &text)?;
    if output.verbose {
        eprintln!("worst boundary residual {worst_residual:.3e} (gate {RESIDUAL_GATE:.0e})");
    }
    Ok(if worst_residual < RESIDUAL_GATE {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_TOLERANCE)
    })
}

fn omega_cmd(range: &RangeArgs, output: &OutputArgs) -> CmdResult {
    let values = expand_range(range)?;
    let mut rows = Vec::with_capacity(values.len());
    for &a_phys in &values {
        let a = rescale_slope(a_phys).map_err(|e| (classify(&e), e.to_string()))?;
        let omega = omega_c_form(a).map_err(|e| (classify(&e), e.to_string()))?;
        rows.push((a_phys, a, omega));
    }
    let mut text = String::new();
    match output.format {
        Format::Csv => {
            writeln!(text, "a_physical,a,omega").unwrap();
            for (ap, a, w) in &rows {
                writeln!(text, "{},{},{}", fmt_f(*ap), fmt_f(*a), fmt_f(*w)).unwrap();
            }
        }
        Format::Json => {
            writeln!(text, "{{\"rows\":[").unwrap();
            for (i, (ap, a, w)) in rows.iter().enumerate() {
                let comma = if i + 1 < rows.len() { "," } else { "" };
                writeln!(
                    text,
                    "{{\"a_physical\":{},\"a\":{},\"omega\":{}}}{comma}",
                    fmt_f(*ap),
                    fmt_f(*a),
                    fmt_f(*w)
                )
                .unwrap();
            }
            writeln!(text, "]}}").unwrap();
        }
    }
    emit(output, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn oracle_config(alpha: f64, oracle: &OracleArgs) -> OracleConfig {
    let mut cfg = OracleConfig::default();
    // Auto-scale the domain for wide cuts only when not overridden.
    if oracle.xmax.is_none() {
        cfg = cfg.with_auto_domain(alpha);
    }
    if let Some(nx) = oracle.nx {
        cfg.nx = nx;
    }
    if let Some(nmu) = oracle.nmu {
        cfg.n_mu = nmu;
    }
    if let Some(xmax) = oracle.xmax {
        cfg.x_max = xmax;
    }
    cfg
}

fn validate_cmd(
    a_physical: f64,
    grid: &GridArgs,
    oracle: &OracleArgs,
    output: &OutputArgs,
) -> CmdResult {
    let a = rescale_slope(a_physical).map_err(|e| (classify(&e), e.to_string()))?;
    let p = Pipeline::new(a, &settings_from(grid)).map_err(|e| (classify(&e), e.to_string()))?;
    let s = p.solution();
    let model = GasModel::new(a).map_err(|e| (classify(&e), e.to_string()))?;
    let cfg = oracle_config(model.alpha(), oracle);
    let run = |u: f64, g_t: f64| -> Result<_, (u8, String)> {
        let f = solve_direct(&model, u, g_t, &cfg).map_err(|e| (classify(&e), e.to_string()))?;
        let ex = extract_jumps(&f).map_err(|e| (classify(&e), e.to_string()))?;
        Ok((f, ex))
    };
    let (fu, eu) = run(1.0, 0.0)?;
    let (fg, eg) = run(0.0, 1.0)?;
    let pairs = [
        ("eps_t_per_u", s.eps_t_per_u, eu.eps_t),
        ("eps_n_per_u", s.eps_n_per_u, eu.eps_n),
        ("eps_t_per_gt", s.eps_t_per_gt, eg.eps_t),
        ("eps_n_per_gt", s.eps_n_per_gt, eg.eps_n),
    ];
    let mut worst = 0.0f64;
    let mut analytic = String::new();
    let mut direct = String::new();
    let mut diffs = String::new();
    for (i, (name, ana, ora)) in pairs.iter().enumerate() {
        let rel = (ana - ora).abs() / ora.abs().max(1e-300);
        worst = worst.max(rel);
        let comma = if i + 1 < pairs.len() { "," } else { "" };
        write!(analytic, "\"{name}\":{}{comma}", fmt_f(*ana)).unwrap();
        write!(direct, "\"{name}\":{}{comma}", fmt_f(*ora)).unwrap();
        write!(diffs, "\"{name}\":{}{comma}", fmt_f(rel)).unwrap();
    }
    let within = worst < VALIDATE_GATE;
    let text = format!(
        "{{\n\"a_physical\":{},\n\"a\":{},\n\"analytic\":{{{analytic}}},\n\"oracle\":{{{direct}}},\n\
\"rel_diff\":{{{diffs}}},\n\"worst_rel_diff\":{},\n\"within_tolerance\":{within},\n\
\"oracle_meta\":{{\"nx\":{},\"n_mu\":{},\"x_max\":{},\"inner_iterations\":{},\
\"matching_residual\":{},\"sweep_residual\":{}}}\n}}\n",
        fmt_f(a_physical),
        fmt_f(a),
        fmt_f(worst),
        cfg.nx,
        fu.mu.len(),
        fmt_f(cfg.x_max),
        fu.inner_iterations.max(fg.inner_iterations),
        fmt_f(fu.matching_residual.max(fg.matching_residual)),
        fmt_f(fu.sweep_residual.max(fg.sweep_residual)),
    );
    emit(output, &text)?;
    Ok(if within {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_TOLERANCE)
    })
}

fn field_cmd(
    a_physical: f64,
    source: FieldSource,
    u: f64,
    g_t: f64,
    grid: &GridArgs,
    oracle: &OracleArgs,
    output: &OutputArgs,
) -> CmdResult {
    let out_path = output
        .out
        .as_ref()
        .ok_or((EXIT_CONFIG, "field requires --out PATH".to_string()))?;
    let a = rescale_slope(a_physical).map_err(|e| (classify(&e), e.to_string()))?;
    let model = GasModel::new(a).map_err(|e| (classify(&e), e.to_string()))?;
    let cfg = oracle_config(model.alpha(), oracle);

    let mut csv = String::from("x,mu,h\n");
    let (eps_t, eps_n): (f64, f64);
    match source {
        FieldSource::Oracle => {
            let f =
                solve_direct(&model, u, g_t, &cfg).map_err(|e| (classify(&e), e.to_string()))?;
            for (i, &x) in f.x.iter().enumerate() {
                for (j, &mu) in f.mu.iter().enumerate() {
                    writeln!(csv, "{},{},{}", fmt_f(x), fmt_f(mu), fmt_f(f.value(i, j))).unwrap();
                }
            }
            eps_t = f.eps_t;
            eps_n = f.eps_n;
        }
        FieldSource::Analytic => {
            let p =
                Pipeline::new(a, &settings_from(grid)).map_err(|e| (classify(&e), e.to_string()))?;
            let solved = p.solve(u, g_t);
            // Same grid shape as the direct solver so dumps diff cleanly.
            let disc_x: Vec<f64> = (0..=cfg.nx)
                .map(|i| cfg.x_max * (i as f64 / cfg.nx as f64).powi(2))
                .collect();
            let ord = kinjump::build_grid(
                model.alpha(),
                (cfg.n_mu.div_ceil(12).max(2) + 1) & !1usize,
                12,
            )
            .map_err(|e| (classify(&e), e.to_string()))?;
            for &x in &disc_x {
                for &mu in ord.nodes() {
                    let h = p
                        .reconstruct_h(&solved, x, mu)
                        .map_err(|e| (classify(&e), e.to_string()))?;
                    writeln!(csv, "{},{},{}", fmt_f(x), fmt_f(mu), fmt_f(h)).unwrap();
                }
            }
            eps_t = solved.state.eps_t;
            eps_n = solved.state.eps_n;
        }
    }
    fs::write(out_path, csv).map_err(|e| (EXIT_CONFIG, format!("writing {out_path:?}: {e}")))?;
    let sidecar = format!(
        "{{\"a_physical\":{},\"a\":{},\"u\":{},\"g_t\":{},\"eps_t\":{},\"eps_n\":{},\
\"source\":\"{}\",\"nx\":{},\"n_mu\":{},\"x_max\":{}}}\n",
        fmt_f(a_physical),
        fmt_f(a),
        fmt_f(u),
        fmt_f(g_t),
        fmt_f(eps_t),
        fmt_f(eps_n),
        match source {
            FieldSource::Analytic => "analytic",
            FieldSource::Oracle => "oracle",
        },
        cfg.nx,
        cfg.n_mu,
        fmt_f(cfg.x_max),
    );
    let mut meta_path = out_path.clone();
    let stem = meta_path
        .file_name()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_default();
    meta_path.set_file_name(format!("{stem}.meta.json"));
    fs::write(&meta_path, sidecar)
        .map_err(|e| (EXIT_CONFIG, format!("writing {meta_path:?}: {e}")))?;
    if output.verbose {
        eprintln!("field written to {out_path:?}, sidecar {meta_path:?}");
    }
    Ok(ExitCode::SUCCESS)
}

fn emit(output: &OutputArgs, text: &str) -> Result<(), (u8, String)> {
    match &output.out {
        Some(path) => {
            fs::write(path, text).map_err(|e| (EXIT_CONFIG, format!("writing {path:?}: {e}")))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
