use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lzs_core::fbm;
use lzs_core::floquet::solve;
use lzs_core::hilbert::{gap_scan, static_spectrum};
use lzs_core::unitary::{instantaneous_probability, resonance_regions, Rect};
use lzs_sweep::config::{Observable, SweepConfig};
use lzs_sweep::run::{self, FAILURE_THRESHOLD};
use lzs_sweep::{cut_1d, emit_overlay, io, parse_config_str, CutAxis, Format, Palette};
use serde_json::json;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(name = "lzs", version, about = "Landau-Zener-Stückelberg patterns of a driven qubit-resonator system")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Static energy levels versus bias and the avoided-crossing gaps.
    Spectrum(SpectrumArgs),
    /// Quasienergies at one drive point.
    Floquet(PointArgs),
    /// Time series at one drive point, or a 1D cut of a finished sweep.
    Trace(TraceArgs),
    /// Grid sweep over (A, ε₀).
    Sweep(SweepArgs),
    /// Region-boundary overlay for the sweep rectangle.
    Regions(RegionsArgs),
    /// PNG heatmap of a finished sweep.
    Plot(PlotArgs),
}

#[derive(Args)]
struct ConfigArg {
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = -1.5, allow_negative_numbers = true)]
    eps_min_over_omega_r: f64,
    #[arg(long, default_value_t = 1.5, allow_negative_numbers = true)]
    eps_max_over_omega_r: f64,
    #[arg(long, default_value_t = 601)]
    steps: usize,
}

#[derive(Args)]
struct PointArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, allow_negative_numbers = true)]
    a_over_omega: f64,
    #[arg(long, allow_negative_numbers = true)]
    eps0_over_omega: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliAxis {
    A,
    Eps0,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long, allow_negative_numbers = true)]
    a_over_omega: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    eps0_over_omega: Option<f64>,
    /// Trace length in drive periods.
    #[arg(long, default_value_t = 100.0)]
    periods: f64,
    /// Samples per period (must divide n_t) for closed-system traces.
    #[arg(long, default_value_t = 8)]
    samples_per_period: usize,
    /// Sampling step in periods for dissipative traces.
    #[arg(long, default_value_t = 1.0)]
    dt_over_tau: f64,
    /// Cut a finished sweep in this directory instead.
    #[arg(long)]
    from: Option<PathBuf>,
    #[arg(long, value_enum)]
    axis: Option<CliAxis>,
    #[arg(long, allow_negative_numbers = true)]
    value: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliFormat {
    Csv,
    Binary,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the worker count of the config.
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    resume: bool,
    #[arg(long, value_enum, default_value = "csv")]
    format: CliFormat,
    /// Also write heatmap.png.
    #[arg(long)]
    plot: bool,
}

#[derive(Args)]
struct RegionsArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Finished sweep whose rectangle the overlay must match.
    #[arg(long)]
    result: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long)]
    result: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "viridis")]
    palette: String,
}

fn load_config(arg: &ConfigArg) -> Result<SweepConfig> {
    let text = match &arg.config {
        Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => "{}".to_string(),
    };
    parse_config_str(&text).map_err(|e| anyhow::Error::new(e).context(ConfigTag))
}

#[derive(Debug)]
struct ConfigTag;

impl std::fmt::Display for ConfigTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("configuration rejected")
    }
}

fn write_json(path: &Path, v: &serde_json::Value) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(v)? + "\n").with_context(|| format!("writing {}", path.display()))
}

fn spectrum(args: SpectrumArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    if args.steps < 2 || !(args.eps_max_over_omega_r > args.eps_min_over_omega_r) {
        bail!("need steps >= 2 and eps_max > eps_min");
    }
    let p = cfg.system_params(0.0, 0.0);
    fs::create_dir_all(&args.out)?;
    let d = p.dim();
    let mut csv = String::from("eps_over_omega_r");
    for k in 0..d {
        csv.push_str(&format!(",E{k}"));
    }
    csv.push('\n');
    for i in 0..args.steps {
        let eps = args.eps_min_over_omega_r + (args.eps_max_over_omega_r - args.eps_min_over_omega_r) * i as f64 / (args.steps - 1) as f64;
        let s = static_spectrum(&p, eps)?;
        csv.push_str(&eps.to_string());
        for e in &s.energies {
            csv.push_str(&format!(",{e}"));
        }
        csv.push('\n');
    }
    fs::write(args.out.join("spectrum.csv"), csv)?;
    let qubit = gap_scan(&p, (0, 1), (-0.5, 0.5), 1e-3)?;
    let left = gap_scan(&p, (1, 2), (-1.5, -0.5), 1e-3)?;
    let right = gap_scan(&p, (1, 2), (0.5, 1.5), 1e-3)?;
    let gap = |g: lzs_core::hilbert::GapMinimum| json!({ "eps_over_omega_r": g.eps_min, "gap_over_omega_r": g.gap, "boundary_minimum": g.boundary_minimum });
    let v = json!({
        "qubit": gap(qubit),
        "photonic_minus": gap(left),
        "photonic_plus": gap(right),
        "n_max": p.n_max,
        "g_over_omega_r": p.g,
    });
    write_json(&args.out.join("gaps.json"), &v)?;
    println!("{}", serde_json::to_string_pretty(&v)?);
    Ok(())
}

fn floquet(args: PointArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let (h, _) = run::unitary_setup(&cfg, args.a_over_omega, args.eps0_over_omega);
    let sol = solve(&h, run::propagation_options(&cfg))?;
    let w = sol.omega;
    let v = json!({
        "A_over_omega": args.a_over_omega,
        "eps0_over_omega": args.eps0_over_omega,
        "quasienergies_over_omega": sol.quasienergies.iter().map(|e| e / w).collect::<Vec<_>>(),
        "degenerate_pairs": sol.degenerate_pairs,
    });
    println!("{}", serde_json::to_string_pretty(&v)?);
    if let Some(out) = args.out {
        fs::create_dir_all(&out)?;
        write_json(&out.join("floquet.json"), &v)?;
    }
    Ok(())
}

fn trace(args: TraceArgs) -> Result<()> {
    fs::create_dir_all(&args.out)?;
    if let Some(dir) = &args.from {
        let axis = match args.axis.ok_or_else(|| anyhow!("--from needs --axis"))? {
            CliAxis::A => CutAxis::A,
            CliAxis::Eps0 => CutAxis::Eps0,
        };
        let value = args.value.ok_or_else(|| anyhow!("--from needs --value"))?;
        let r = io::load_result(dir)?;
        let c = cut_1d(&r, axis, value)?;
        fs::write(args.out.join("cut.csv"), c.to_csv())?;
        write_json(&args.out.join("cut.json"), &json!({ "axis": c.axis, "requested": c.requested, "selected": c.selected, "index": c.index }))?;
        println!("cut at grid coordinate {} (requested {})", c.selected, c.requested);
        return Ok(());
    }
    let cfg = load_config(&args.config)?;
    let (a, e) = match (args.a_over_omega, args.eps0_over_omega) {
        (Some(a), Some(e)) => (a, e),
        _ => bail!("trace needs --a-over-omega and --eps0-over-omega, or --from"),
    };
    if !(args.periods > 0.0) {
        bail!("--periods must be positive");
    }
    let psi0 = cfg.initial_vector();
    match cfg.observable {
        Observable::UnitaryAvg => {
            let n_t = cfg.numerics.n_t;
            if args.samples_per_period == 0 || n_t % args.samples_per_period != 0 {
                bail!("--samples-per-period must divide n_t = {n_t}");
            }
            let (h, target) = run::unitary_setup(&cfg, a, e);
            let sol = solve(&h, run::propagation_options(&cfg))?;
            let s = args.samples_per_period;
            let count = (args.periods * s as f64).floor() as usize;
            let times: Vec<f64> = (0..=count).map(|k| k as f64 / s as f64).collect();
            let tr = instantaneous_probability(&sol, &psi0, &target, &times, "initial", "target")?;
            fs::write(args.out.join("trace.csv"), tr.to_csv())?;
            fs::write(args.out.join("trace_running_average.csv"), tr.running_average(s).to_csv())?;
        }
        Observable::DissipativeAtTime { .. } | Observable::DissipativeSteady => {
            if !(args.dt_over_tau > 0.0) {
                bail!("--dt-over-tau must be positive");
            }
            let bath = cfg.bath.expect("validated");
            let count = (args.periods / args.dt_over_tau).floor() as usize;
            let times: Vec<f64> = (0..=count).map(|k| k as f64 * args.dt_over_tau).collect();
            let (h, coupling) = run::dissipative_setup(&cfg, a, e).map_err(|m| anyhow!(m))?;
            let r = fbm::dissipative_run(&h, &coupling, &bath, &psi0, &run::dissipative_options(&cfg, times))?;
            fs::write(args.out.join("trace.csv"), r.p_up_vs_time.to_csv())?;
            write_json(&args.out.join("steady.json"), &json!({ "steady_p_up": r.steady_p_up, "diagnostics": r.diagnostics }))?;
        }
    }
    println!("wrote {}", args.out.join("trace.csv").display());
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<ExitCode> {
    let mut cfg = load_config(&args.config)?;
    if let Some(w) = args.workers {
        if w == 0 {
            return Err(anyhow::Error::new(lzs_sweep::ConfigError { errors: vec!["--workers must be >= 1".into()] }).context(ConfigTag));
        }
        cfg.workers = w;
    }
    let format = match args.format {
        CliFormat::Csv => Format::Csv,
        CliFormat::Binary => Format::Binary,
    };
    log::info!("sweep {}x{} points, {} worker(s), config {}", cfg.grid.a_steps, cfg.grid.eps0_steps, cfg.workers, cfg.hash());
    let r = run::run_sweep_checkpointed(&cfg, &args.out, args.resume)?;
    io::write_result(&args.out, &cfg, &r, format)?;
    if args.plot {
        lzs_sweep::emit_plot(&r, Palette::Viridis, &args.out.join("heatmap.png"))?;
    }
    println!("{} points, {} failed, {:.1} s", r.values.len(), r.failed(), r.meta.wall_time_s);
    if r.failure_fraction() > FAILURE_THRESHOLD {
        eprintln!("error: {} of {} points failed (more than 1%)", r.failed(), r.values.len());
        return Ok(ExitCode::from(EXIT_PARTIAL));
    }
    Ok(ExitCode::SUCCESS)
}

fn regions(args: RegionsArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let w = cfg.params.omega;
    let g = cfg.grid;
    let rect = Rect { a_min: g.a_min * w, a_max: g.a_max * w, eps_min: g.eps0_min * w, eps_max: g.eps0_max * w };
    let regions = resonance_regions(1.0, rect)?;
    let result = match &args.result {
        Some(dir) => io::load_result(dir)?,
        None => lzs_sweep::SweepResult {
            a_axis: g.a_axis(),
            eps0_axis: g.eps0_axis(),
            values: vec![f64::NAN; g.len()],
            diagnostics: Vec::new(),
            meta: run::RunMeta {
                config_hash: cfg.hash(),
                code_version: env!("CARGO_PKG_VERSION").into(),
                wall_time_s: 0.0,
                workers: 0,
                points: g.len(),
                failed: 0,
                resumed: 0,
            },
        },
    };
    let ov = emit_overlay(&regions, &result, w)?;
    fs::create_dir_all(&args.out)?;
    write_json(&args.out.join("overlay.json"), &serde_json::to_value(&ov)?)?;
    println!("regions: {}", ov.region_labels().join(", "));
    Ok(())
}

fn plot(args: PlotArgs) -> Result<()> {
    let palette: Palette = args.palette.parse().map_err(|e: String| anyhow!(e))?;
    let r = io::load_result(&args.result)?;
    lzs_sweep::emit_plot(&r, palette, &args.out)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let out = match cli.cmd {
        Cmd::Spectrum(a) => spectrum(a).map(|_| ExitCode::SUCCESS),
        Cmd::Floquet(a) => floquet(a).map(|_| ExitCode::SUCCESS),
        Cmd::Trace(a) => trace(a).map(|_| ExitCode::SUCCESS),
        Cmd::Sweep(a) => sweep(a),
        Cmd::Regions(a) => regions(a).map(|_| ExitCode::SUCCESS),
        Cmd::Plot(a) => plot(a).map(|_| ExitCode::SUCCESS),
    };
    match out {
        Ok(code) => code,
        Err(e) => {
            if e.downcast_ref::<ConfigTag>().is_some() {
                if let Some(ce) = e.downcast_ref::<lzs_sweep::ConfigError>() {
                    eprint!("error: {ce}");
                } else {
                    eprintln!("error: {e:#}");
                }
                return ExitCode::from(EXIT_CONFIG);
            }
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
