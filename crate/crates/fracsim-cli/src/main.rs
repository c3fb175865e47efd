//! `fracsim`: analyze trace sets, simulate fracture networks, compare
//! azimuth statistics, and run the flow/transport verification.
//!
//! Exit codes: 0 success, 1 validation error (bad config/input), 2 runtime
//! error (solver or output failure).

use clap::{Parser, Subcommand};
use fracsim::analyze::{compare_networks, compute_stats};
use fracsim::config::SimConfig;
use fracsim::geometry::{Trace, TraceKind};
use fracsim::growth::{preview_seeds, run_simulation};
use fracsim::io::{load_network, load_traces, NetworkFile};
use fracsim::region::Rect;
use fracsim::transport::{
    advect_tracer, compare_breakthrough, rasterize, solve_flow, BreakthroughCurve, GridSpec, Wells,
};
use fracsim::{svg, variogram};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fracsim", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Statistics, histograms, variogram, and rose diagram for a trace file.
    Analyze {
        traces: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Grow a simulated network from a config file.
    Simulate {
        #[arg(short = 'c', long)]
        config: PathBuf,
        /// Override rng_seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// Override the transform mode (raw|nscore).
        #[arg(long)]
        transform: Option<String>,
        /// Override the kriging method (simple|ordinary).
        #[arg(long)]
        kriging: Option<String>,
        /// Re-emit known traces from their midpoints.
        #[arg(long)]
        replay_known: bool,
        /// Override any config field, e.g. --set max_iterations=50 or
        /// --set seeds.count=10. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Histogram and peak comparison of two networks or trace files.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Flow + tracer breakthrough comparison of two networks.
    Verify {
        /// Network or trace file; pass exactly twice.
        #[arg(long = "network", required = true)]
        network: Vec<PathBuf>,
        #[arg(long)]
        flow_config: PathBuf,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Render seed placement without growing (protocol debugging).
    SeedPreview {
        #[arg(short = 'c', long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

#[derive(Debug)]
enum CliError {
    /// Bad input: config, file contents, flags. Exit code 1.
    Validation(String),
    /// Failure while running or writing. Exit code 2.
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn validation(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fracsim: {e}");
            match e {
                CliError::Validation(_) => ExitCode::from(1),
                CliError::Runtime(_) => ExitCode::from(2),
            }
        }
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Analyze { traces, out_dir } => cmd_analyze(&traces, &out_dir),
        Command::Simulate { config, seed, out_dir, transform, kriging, replay_known, set } => {
            cmd_simulate(&config, seed, &out_dir, transform, kriging, replay_known, &set)
        }
        Command::Compare { a, b, out_dir } => cmd_compare(&a, &b, &out_dir),
        Command::Verify { network, flow_config, out_dir } => {
            cmd_verify(&network, &flow_config, &out_dir)
        }
        Command::SeedPreview { config, seed, out_dir, set } => {
            cmd_seed_preview(&config, seed, &out_dir, &set)
        }
    }
}

// ---------------------------------------------------------------- manifest

#[derive(Serialize)]
struct InputRecord {
    path: String,
    sha256: String,
}

/// Reproducibility record written alongside every run's artifacts.
#[derive(Serialize)]
struct Manifest {
    tool_version: &'static str,
    subcommand: &'static str,
    seed: Option<u64>,
    inputs: Vec<InputRecord>,
    effective_config: Option<SimConfig>,
    outputs: Vec<String>,
}

struct OutDir {
    dir: PathBuf,
    outputs: Vec<String>,
}

impl OutDir {
    fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir)
            .map_err(|e| runtime(format!("cannot create {}: {e}", dir.display())))?;
        Ok(OutDir { dir: dir.to_path_buf(), outputs: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)
            .map_err(|e| runtime(format!("cannot write {}: {e}", path.display())))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    fn finish(
        mut self,
        subcommand: &'static str,
        seed: Option<u64>,
        inputs: &[&Path],
        effective_config: Option<&SimConfig>,
    ) -> Result<()> {
        let inputs = inputs
            .iter()
            .map(|p| {
                let bytes = std::fs::read(p)
                    .map_err(|e| runtime(format!("cannot hash {}: {e}", p.display())))?;
                let mut hasher = Sha256::new();
                hasher.update(&bytes);
                let sha256 = hasher.finalize().iter().fold(String::new(), |mut s, b| {
                    let _ = write!(s, "{b:02x}");
                    s
                });
                Ok(InputRecord { path: p.display().to_string(), sha256 })
            })
            .collect::<Result<Vec<_>>>()?;
        let manifest = Manifest {
            tool_version: fracsim::VERSION,
            subcommand,
            seed,
            inputs,
            effective_config: effective_config.cloned(),
            outputs: std::mem::take(&mut self.outputs),
        };
        let mut json = serde_json::to_string_pretty(&manifest).map_err(runtime)?;
        json.push('\n');
        self.write("manifest.json", json.as_bytes())
    }
}

// ------------------------------------------------------------------ config

/// Load a config file and apply flag overrides by editing the TOML document,
/// then re-validating the whole thing.
fn load_config_with_overrides(
    path: &Path,
    seed: Option<u64>,
    transform: Option<&str>,
    kriging: Option<&str>,
    replay_known: bool,
    sets: &[String],
) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| validation(format!("cannot read {}: {e}", path.display())))?;
    let mut doc: toml::Table = text
        .parse()
        .map_err(|e| validation(format!("{}: {e}", path.display())))?;
    for kv in sets {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| validation(format!("--set needs KEY=VALUE, got \"{kv}\"")))?;
        set_path(&mut doc, key.trim(), value.trim())?;
    }
    if let Some(s) = seed {
        doc.insert("rng_seed".into(), toml::Value::Integer(s as i64));
    }
    if let Some(t) = transform {
        doc.insert("transform".into(), toml::Value::String(t.into()));
    }
    if let Some(k) = kriging {
        doc.insert("kriging".into(), toml::Value::String(k.into()));
    }
    if replay_known {
        doc.insert("replay_known".into(), toml::Value::Boolean(true));
    }
    let merged = toml::to_string(&doc).map_err(runtime)?;
    SimConfig::from_toml_str(&merged).map_err(validation)
}

/// Set a (possibly dotted) key to a value parsed as TOML, falling back to a
/// plain string.
fn set_path(doc: &mut toml::Table, key: &str, raw: &str) -> Result<()> {
    let value: toml::Value = match raw.parse::<toml::Value>() {
        Ok(v) => v,
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let mut table = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        table = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| validation(format!("--set {key}: {part} is not a table")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn load_known_traces(cfg: &SimConfig) -> Result<Vec<Trace>> {
    match &cfg.known_traces {
        Some(path) => Ok(load_traces(path).map_err(validation)?.traces),
        None => Ok(Vec::new()),
    }
}

/// Accept a network JSON file, a plain trace file, or a two-column vertex
/// CSV (by .csv extension).
fn load_any_traces(path: &Path) -> Result<Vec<Trace>> {
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|e| validation(format!("cannot read {name}: {e}")))?;
    if text.trim_start().starts_with('{') {
        load_network(&name)
            .map_err(validation)?
            .to_traces()
            .map_err(validation)
    } else if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        fracsim::io::parse_vertex_csv(&text, &name).map_err(validation)
    } else {
        Ok(load_traces(&name).map_err(validation)?.traces)
    }
}

// ------------------------------------------------------------- subcommands

fn csv_counts(prefix: &str, edges: impl Iterator<Item = f64>, counts: &[u64]) -> String {
    let mut out = format!("{prefix},count\n");
    for (e, c) in edges.zip(counts) {
        let _ = writeln!(out, "{e},{c}");
    }
    out
}

fn cmd_analyze(traces_path: &Path, out_dir: &Path) -> Result<()> {
    let name = traces_path.display().to_string();
    let (traces, domain) =
        if traces_path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            (load_any_traces(traces_path)?, None)
        } else {
            let tf = load_traces(&name).map_err(validation)?;
            (tf.traces, tf.domain)
        };
    let stats = compute_stats(&traces).map_err(validation)?;
    let mut out = OutDir::create(out_dir)?;

    let mut stats_json = serde_json::to_string_pretty(&stats).map_err(runtime)?;
    stats_json.push('\n');
    out.write("stats.json", stats_json.as_bytes())?;

    let raw = &stats.raw_histogram;
    out.write(
        "raw_histogram.csv",
        csv_counts(
            "bin_start_deg",
            (0..raw.counts.len()).map(|i| i as f64 * raw.bin_width),
            &raw.counts,
        )
        .as_bytes(),
    )?;
    let folded = &stats.folded_histogram;
    out.write(
        "folded_histogram.csv",
        csv_counts(
            "bin_start_deg",
            (0..folded.counts.len()).map(|i| i as f64 * folded.bin_width),
            &folded.counts,
        )
        .as_bytes(),
    )?;
    let lh = &stats.segment_length_histogram;
    out.write(
        "length_histogram.csv",
        csv_counts(
            "bin_start",
            (0..lh.counts.len()).map(|i| lh.min + i as f64 * lh.bin_width),
            &lh.counts,
        )
        .as_bytes(),
    )?;

    // Empirical variogram of folded azimuths at segment midpoints, plus a
    // config-ready fitted model when the fit succeeds.
    let samples: Vec<(fracsim::geometry::Point, f64)> = traces
        .iter()
        .flat_map(|t| t.segments().map(|s| (s.midpoint(), s.folded_azimuth())))
        .collect();
    let diag = domain
        .map(|d| d.diagonal())
        .unwrap_or_else(|| bbox_of(&traces).diagonal());
    match variogram::empirical_variogram(&samples, diag / 40.0, diag / 2.0) {
        Ok(ev) => {
            let mut csv = String::from("h,gamma,npairs\n");
            for i in 0..ev.lags.len() {
                let _ = writeln!(csv, "{},{},{}", ev.lags[i], ev.gamma[i], ev.pairs[i]);
            }
            out.write("variogram.csv", csv.as_bytes())?;
            match variogram::fit_spherical(&ev) {
                Ok(m) => {
                    let snippet = format!(
                        "[variogram]\nnugget = {}\nsill = {}\nrange = {}\n",
                        m.nugget, m.sill, m.range
                    );
                    out.write("variogram_fit.toml", snippet.as_bytes())?;
                }
                Err(e) => eprintln!("fracsim: variogram fit skipped: {e}"),
            }
        }
        Err(e) => eprintln!("fracsim: empirical variogram skipped: {e}"),
    }

    out.write("rose.svg", svg::rose_svg(folded, 400.0).as_bytes())?;
    let labels: Vec<String> = (0..raw.counts.len())
        .map(|i| format!("{}", (i as f64 * raw.bin_width) as i64))
        .collect();
    out.write("raw_histogram.svg", svg::bars_svg(&labels, &raw.counts, 720.0, 240.0).as_bytes())?;

    println!(
        "{} traces, {} segments, mean segment length {:.2}",
        stats.n_traces, stats.n_segments, stats.segment_length_mean
    );
    out.finish("analyze", None, &[traces_path], None)
}

fn bbox_of(traces: &[Trace]) -> Rect {
    let mut r = Rect::new(f64::MAX / 4.0, f64::MAX / 4.0, f64::MAX / 2.0, f64::MAX / 2.0);
    let (mut xmin, mut ymin, mut xmax, mut ymax) =
        (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for t in traces {
        for p in t.polyline() {
            xmin = xmin.min(p.x);
            ymin = ymin.min(p.y);
            xmax = xmax.max(p.x);
            ymax = ymax.max(p.y);
        }
    }
    if xmax > xmin && ymax > ymin {
        r = Rect::new(xmin, ymin, xmax, ymax);
    }
    r
}

fn cmd_simulate(
    config: &Path,
    seed: Option<u64>,
    out_dir: &Path,
    transform: Option<String>,
    kriging: Option<String>,
    replay_known: bool,
    sets: &[String],
) -> Result<()> {
    let cfg = load_config_with_overrides(
        config,
        seed,
        transform.as_deref(),
        kriging.as_deref(),
        replay_known,
        sets,
    )?;
    let known = load_known_traces(&cfg)?;
    let sim = run_simulation(&cfg, &known).map_err(runtime)?;
    let mut out = OutDir::create(out_dir)?;

    let nf = NetworkFile::from_network(&sim.network, Some(&cfg), Some(&sim.report));
    out.write("network.json", nf.canonical_json().as_bytes())?;

    let region = cfg.unknown_region.as_ref().map(|verts| {
        let poly = fracsim::region::Polygon::new(
            verts.iter().map(|v| fracsim::geometry::Point { x: v[0], y: v[1] }).collect(),
        );
        poly.bbox()
    });
    out.write(
        "network.svg",
        svg::network_svg(&sim.network.traces, cfg.domain_rect(), region, 700.0).as_bytes(),
    )?;

    if let Ok(stats) = compute_stats(&sim.network.traces) {
        let mut json = serde_json::to_string_pretty(&stats).map_err(runtime)?;
        json.push('\n');
        out.write("stats.json", json.as_bytes())?;
    }

    println!(
        "{} traces ({} simulated), {} segments, {} iterations",
        sim.network.traces.len(),
        sim.report.seed_count,
        sim.network.total_segments(),
        sim.report.iterations
    );
    let inputs: Vec<&Path> = std::iter::once(config)
        .chain(cfg.known_traces.as_deref().map(Path::new))
        .collect();
    out.finish("simulate", Some(cfg.rng_seed), &inputs, Some(&cfg))
}

fn cmd_compare(a: &Path, b: &Path, out_dir: &Path) -> Result<()> {
    let ta = load_any_traces(a)?;
    let tb = load_any_traces(b)?;
    let report = compare_networks(&ta, &tb).map_err(validation)?;
    let mut out = OutDir::create(out_dir)?;
    let mut json = serde_json::to_string_pretty(&report).map_err(runtime)?;
    json.push('\n');
    out.write("comparison.json", json.as_bytes())?;
    out.write(
        "histograms.svg",
        svg::side_by_side_svg(&report.stats_a.raw_histogram, &report.stats_b.raw_histogram, 900.0, 260.0)
            .as_bytes(),
    )?;
    for p in &report.matching.pairs {
        println!("peak {:.1} -> {:.1} (deviation {:.1})", p.angle_a, p.angle_b, p.deviation);
    }
    out.finish("compare", None, &[a, b], None)
}

/// Flow/transport settings for `verify`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowConfig {
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    #[serde(default)]
    x0: f64,
    #[serde(default)]
    y0: f64,
    porosity: f64,
    k_matrix: f64,
    permeability_ratio: f64,
    rate: f64,
    injector: [usize; 2],
    producer: [usize; 2],
    dt: f64,
    t_end: f64,
    diffusion: f64,
    #[serde(default = "default_threshold")]
    threshold: f64,
}

fn default_threshold() -> f64 {
    0.01
}

fn cmd_verify(networks: &[PathBuf], flow_config: &Path, out_dir: &Path) -> Result<()> {
    if networks.len() != 2 {
        return Err(validation(format!(
            "verify needs exactly two --network arguments, got {}",
            networks.len()
        )));
    }
    let text = std::fs::read_to_string(flow_config)
        .map_err(|e| validation(format!("cannot read {}: {e}", flow_config.display())))?;
    let fc: FlowConfig =
        toml::from_str(&text).map_err(|e| validation(format!("{}: {e}", flow_config.display())))?;
    let spec = GridSpec { nx: fc.nx, ny: fc.ny, dx: fc.dx, dy: fc.dy, x0: fc.x0, y0: fc.y0 };
    let wells = Wells {
        injector: (fc.injector[0], fc.injector[1]),
        producer: (fc.producer[0], fc.producer[1]),
        rate: fc.rate,
    };
    let mut curves: Vec<BreakthroughCurve> = Vec::new();
    let mut out = OutDir::create(out_dir)?;
    for (path, name) in networks.iter().zip(["breakthrough_a.csv", "breakthrough_b.csv"]) {
        let traces = load_any_traces(path)?;
        let grid = rasterize(&traces, spec, fc.k_matrix, fc.permeability_ratio, fc.porosity);
        let flow = solve_flow(&grid, wells).map_err(runtime)?;
        let tracer = advect_tracer(&flow, &grid, fc.dt, fc.t_end, fc.diffusion);
        let mut csv = String::from("t,concentration\n");
        for (t, c) in tracer.curve.times.iter().zip(&tracer.curve.concentrations) {
            let _ = writeln!(csv, "{t},{c}");
        }
        out.write(name, csv.as_bytes())?;
        curves.push(tracer.curve);
    }
    let cmp = compare_breakthrough(&curves[0], &curves[1], fc.threshold);
    let mut json = serde_json::to_string_pretty(&cmp).map_err(runtime)?;
    json.push('\n');
    out.write("comparison.json", json.as_bytes())?;
    out.write(
        "breakthrough.svg",
        svg::curves_svg(
            &[
                ("a", &curves[0].times, &curves[0].concentrations),
                ("b", &curves[1].times, &curves[1].concentrations),
            ],
            640.0,
            360.0,
        )
        .as_bytes(),
    )?;
    match (cmp.time_a, cmp.time_b) {
        (Some(a), Some(b)) => println!("breakthrough a {a:.2}, b {b:.2}, L2 {:.4}", cmp.l2),
        _ => println!("no breakthrough within horizon for at least one network"),
    }
    let inputs: Vec<&Path> = networks.iter().map(|p| p.as_path()).chain([flow_config]).collect();
    out.finish("verify", None, &inputs, None)
}

fn cmd_seed_preview(
    config: &Path,
    seed: Option<u64>,
    out_dir: &Path,
    sets: &[String],
) -> Result<()> {
    let cfg = load_config_with_overrides(config, seed, None, None, false, sets)?;
    let known = load_known_traces(&cfg)?;
    let seeds = preview_seeds(&cfg, &known).map_err(runtime)?;
    let mut out = OutDir::create(out_dir)?;
    let mut csv = String::from("x,y,azimuth\n");
    for (p, az) in &seeds {
        let _ = writeln!(csv, "{},{},{az}", p.x, p.y);
    }
    out.write("seeds.csv", csv.as_bytes())?;

    // Seeds as short strokes over the known traces.
    let domain = cfg.domain_rect();
    let mut strokes = Vec::new();
    let len = domain.diagonal() / 150.0;
    for (p, az) in &seeds {
        let (dx, dy) = fracsim::geometry::direction(*az);
        let a = fracsim::geometry::Point { x: p.x - dx * len, y: p.y - dy * len };
        let b = fracsim::geometry::Point { x: p.x + dx * len, y: p.y + dy * len };
        if let Ok(t) = Trace::from_polyline(&[a, b], TraceKind::Simulated) {
            strokes.push(t);
        }
    }
    let mut all = known.clone();
    all.extend(strokes);
    out.write("seeds.svg", svg::network_svg(&all, domain, None, 700.0).as_bytes())?;
    println!("{} seeds", seeds.len());
    let inputs: Vec<&Path> = std::iter::once(config)
        .chain(cfg.known_traces.as_deref().map(Path::new))
        .collect();
    out.finish("seed-preview", Some(cfg.rng_seed), &inputs, Some(&cfg))
}
