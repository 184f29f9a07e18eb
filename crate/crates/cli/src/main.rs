use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use protosim_core::dsl::{self, RunOptions, RunReport};
use protosim_core::dynamics::{adiabatic_point, Branch, OracleOptions, SWEEP_CSV_HEADER};
use protosim_core::params::{resolve_preset, ParamPreset};
use protosim_core::protocols::{
    delayed_choice_swap, enumerate_swap_outcomes, generate_hyper_bell_pair, swap_entanglement,
    DetectionPlan, Detector, PairConventions, PipelineReport,
};
use protosim_core::dynamics::InternalLevel;

const PRESET_DIR_VAR: &str = "PROTOSIM_PRESET_DIR";

const EXIT_EXPECT: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "protosim", version, about = "Cavity-mediated Bragg protocol simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a protocol script and evaluate its expectations.
    Run {
        script: PathBuf,
        /// Preset name or parameter file replacing the script's `params` source.
        #[arg(long)]
        params: Option<String>,
        /// Include a state snapshot per step in the report.
        #[arg(long)]
        trace: bool,
        /// Write the JSON report here (`-` for stdout).
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run a script template over a grid of `${var}` values.
    Sweep {
        script: PathBuf,
        #[arg(long)]
        var: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<String>,
        #[arg(long)]
        csv: PathBuf,
        #[arg(long)]
        params: Option<String>,
    },
    /// Compare the closed-form Bragg propagator with the ladder integrator.
    Validate {
        #[arg(long)]
        preset: String,
        #[arg(long, default_value_t = 6)]
        lmax: i32,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Extra Δ/ω_r values, run at the preset's β.
        #[arg(long, value_delimiter = ',')]
        ratios: Vec<f64>,
        #[arg(long)]
        csv: PathBuf,
    },
    /// Run a built-in pipeline and print its report.
    Pipeline {
        name: PipelineName,
        #[arg(long)]
        params: Option<String>,
        #[arg(long, default_value = "D1")]
        detector: String,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PipelineName {
    Generate,
    Swap,
    Delayed,
}

enum Failure {
    Usage(String),
    Runtime(String),
    Expect,
}

fn preset_dir() -> Option<PathBuf> {
    std::env::var_os(PRESET_DIR_VAR).map(PathBuf::from)
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    if path == Path::new("-") {
        print!("{text}");
        return Ok(());
    }
    fs::write(path, text).map_err(|e| Failure::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn options(script: &Path, params: Option<String>, trace: bool) -> RunOptions {
    RunOptions {
        params,
        preset_dir: preset_dir(),
        base_dir: script.parent().map(Path::to_path_buf),
        trace,
    }
}

fn print_summary(report: &RunReport) {
    for s in &report.selections {
        println!("select  line {:>3}  {:<24} p = {:.12}", s.line, s.outcome, s.probability);
    }
    for t in &report.outcome_tables {
        println!("table   line {:>3}  {} rows", t.line, t.rows.len());
        for r in &t.rows {
            match r.entropy {
                Some(e) => println!("        {:<24} p = {:.12}  S = {e:.9}", r.outcome, r.probability),
                None => println!("        {:<24} p = {:.12}", r.outcome, r.probability),
            }
        }
    }
    for o in &report.oracle {
        let p = &o.point;
        println!(
            "oracle  line {:>3}  Δ/ω_r = {:e}  infidelity = {:e}  transfer = {:.6}",
            o.line, p.delta_over_omega_r, p.infidelity, p.transfer_probability
        );
    }
    for e in &report.expects {
        let measured = e.measured.map_or("n/a".to_string(), |m| format!("{m:.12}"));
        let verdict = if e.passed { "PASS" } else { "FAIL" };
        println!("{verdict}    line {:>3}  measured {measured}", e.line);
    }
    println!("probability {:.12}  regime {}", report.probability, report.regime.status);
}

fn cmd_run(script: PathBuf, params: Option<String>, trace: bool, json: Option<PathBuf>) -> Result<(), Failure> {
    let text = read(&script)?;
    let parsed = dsl::parse_script(&text)
        .map_err(|e| Failure::Usage(format!("{}: {e}", script.display())))?;
    let report = dsl::run(&parsed, &options(&script, params, trace))
        .map_err(|e| Failure::Runtime(format!("{}: {e}", script.display())))?;
    eprintln!("wall time {:.3} s", report.wall_time.as_secs_f64());
    if let Some(out) = json {
        write(&out, &(report.to_json() + "\n"))?;
        if out != Path::new("-") {
            print_summary(&report);
        }
    } else {
        print_summary(&report);
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Expect)
    }
}

fn cmd_sweep(
    script: PathBuf,
    var: String,
    grid: Vec<String>,
    csv: PathBuf,
    params: Option<String>,
) -> Result<(), Failure> {
    let text = read(&script)?;
    let started = Instant::now();
    let rows = dsl::sweep(&text, &var, &grid, &options(&script, params, false)).map_err(|e| match e {
        dsl::SweepError::Run { .. } => Failure::Runtime(e.to_string()),
        _ => Failure::Usage(e.to_string()),
    })?;
    write(&csv, &dsl::to_csv(&var, &rows))?;
    eprintln!("wall time {:.3} s", started.elapsed().as_secs_f64());
    if rows.iter().all(|r| r.report.passed()) {
        Ok(())
    } else {
        Err(Failure::Expect)
    }
}

fn cmd_validate(preset: String, lmax: i32, tol: f64, ratios: Vec<f64>, csv: PathBuf) -> Result<(), Failure> {
    let p: ParamPreset = resolve_preset(&preset, preset_dir().as_deref()).map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some(bad) = ratios.iter().find(|r| !(**r > 0.0)) {
        return Err(Failure::Usage(format!("ratios must be positive, got {bad}")));
    }
    let diag = p.diagnostics();
    println!(
        "{}: Δ/ω_r = {:e}  β = {:e} rad/s  t = {:e} s  status {}",
        p.name, diag.delta_over_omega_r, diag.beta, diag.interaction_time, diag.status
    );
    let opts = OracleOptions { l_max: lmax, tol, ..OracleOptions::default() };
    let mut points = vec![p.params];
    points.extend(ratios.iter().map(|&r| p.params.at_ratio(r)));
    let started = Instant::now();
    let mut out = format!("preset,branch,{SWEEP_CSV_HEADER}\n");
    for params in &points {
        for (label, branch) in [("g", Branch::GroundInitial), ("e", Branch::ExcitedInitial)] {
            let point = adiabatic_point(params, std::f64::consts::FRAC_PI_2, branch, opts)
                .map_err(|e| Failure::Runtime(e.to_string()))?;
            println!(
                "  {label} branch  Δ/ω_r = {:e}  infidelity = {:e}  transfer = {:.6}",
                point.delta_over_omega_r, point.infidelity, point.transfer_probability
            );
            out.push_str(&format!("{},{label},{}\n", p.name, point.csv_fields()));
        }
    }
    write(&csv, &out)?;
    eprintln!("wall time {:.3} s", started.elapsed().as_secs_f64());
    Ok(())
}

fn cmd_pipeline(name: PipelineName, params: Option<String>, detector: String, json: Option<PathBuf>) -> Result<(), Failure> {
    let source = params.unwrap_or_else(|| "rb85".to_string());
    let preset = if source.contains('/') || source.contains('.') {
        protosim_core::params::load_preset_file(Path::new(&source))
    } else {
        resolve_preset(&source, preset_dir().as_deref())
    }
    .map_err(|e| Failure::Usage(e.to_string()))?;
    let detector: Detector = detector.parse().map_err(Failure::Usage)?;
    let params = preset.params;
    let runtime = |e: protosim_core::protocols::ProtocolError| Failure::Runtime(e.to_string());
    let report = match name {
        PipelineName::Generate => {
            let trace = generate_hyper_bell_pair(&params, &PairConventions::default(), InternalLevel::E).map_err(runtime)?;
            PipelineReport::from_trace(&trace, &params)
        }
        PipelineName::Swap => {
            let plan = DetectionPlan { detector, ..DetectionPlan::default() };
            let trace = swap_entanglement(&params, &plan).map_err(runtime)?;
            let rows = enumerate_swap_outcomes(&params)
                .map_err(runtime)?
                .into_iter()
                .map(|r| {
                    serde_json::json!({
                        "outcome": r.label,
                        "probability": r.probability,
                        "entropy": r.entropy,
                    })
                })
                .collect();
            PipelineReport::from_trace(&trace, &params).with_outcome_table(rows)
        }
        PipelineName::Delayed => {
            let trace = delayed_choice_swap(&params, detector).map_err(runtime)?;
            PipelineReport::from_trace(&trace, &params)
        }
    };
    let text = report.to_json() + "\n";
    match json {
        Some(path) => write(&path, &text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { script, params, trace, json } => cmd_run(script, params, trace, json),
        Command::Sweep { script, var, grid, csv, params } => cmd_sweep(script, var, grid, csv, params),
        Command::Validate { preset, lmax, tol, ratios, csv } => cmd_validate(preset, lmax, tol, ratios, csv),
        Command::Pipeline { name, params, detector, json } => cmd_pipeline(name, params, detector, json),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Expect) => ExitCode::from(EXIT_EXPECT),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}
