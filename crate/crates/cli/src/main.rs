//! Command-line interface: fit a single model, search (order, graph) pairs
//! by BIC, estimate nonparametric spectra, simulate, and export partial
//! coherences from fitted models.
//!
//! Exit codes: 0 success, 2 input error, 3 numerical error,
//! 4 non-convergence.

mod emit;
mod ingest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use givar::fit::{fit_gi, FitOptions, FitResultFile};
use givar::graph::graph_count;
use givar::params::{ModelSpec, VarParams};
use givar::select::{select_models, SelectOptions};
use givar::spectral::{
    coherency, data_grid_size, inv_spectrum_from_gi, partial_coherence,
    partial_coherence_from_inverse, periodogram, smooth_periodogram, spectrum_from_gi, TaperSpec,
};
use givar::var::{default_burnin, simulate_var};
use givar::whittle::asymptotic_covariance;
use givar::{Error, UndirectedGraph};

use emit::SpectraMeta;

/// Exhaustive graph search above this dimension needs an explicit `--cap`.
const CLI_GRAPH_CAP: usize = 5;

#[derive(Parser)]
#[command(
    name = "givar",
    version,
    about = "Graph-constrained vector autoregressions via Whittle likelihood"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one (order, graph) model and export the result with its spectra.
    Fit(FitArgs),
    /// Fit every (order, graph) pair and rank them by BIC.
    Select(SelectArgs),
    /// Nonparametric smoothed spectra, coherencies and partial coherencies.
    Spectra(SpectraArgs),
    /// Simulate a stable VAR from a parameter file.
    Simulate(SimulateArgs),
    /// Partial coherences of a fitted model (exact zeros on missing edges).
    Pcoh(PcohArgs),
}

#[derive(Args)]
struct SeriesOptions {
    /// Input CSV: header row of variable names, numeric rows, no missing
    /// values.
    csv_path: String,
    /// Treat the data as already centered instead of demeaning it.
    #[arg(long)]
    no_demean: bool,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    series: SeriesOptions,
    /// Autoregressive order.
    #[arg(long)]
    p: usize,
    /// Edge list like "0-1,1-2"; an empty string is the empty graph.
    /// Omitting both graph flags fits the complete graph.
    #[arg(long, conflicts_with = "graph_json")]
    edges: Option<String>,
    /// Graph JSON file with fields "d" and "edges" (pairs with a < b).
    #[arg(long)]
    graph_json: Option<String>,
    /// Taper: "none", "cosine" or "cosine:FRACTION" (default cosine:0.1).
    #[arg(long, default_value = "cosine:0.1")]
    taper: String,
    /// Convergence tolerance on the scaled likelihood-equation residuals.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_cycles: usize,
    /// Frequency grid size (default: smallest power of two >= 4T).
    #[arg(long)]
    grid: Option<usize>,
    /// Output prefix: writes PREFIX.json, PREFIX.spectra.csv,
    /// PREFIX.pcoh.csv and PREFIX.meta.json.
    #[arg(long, default_value = "fit")]
    out: String,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    series: SeriesOptions,
    #[arg(long, default_value_t = 1)]
    p_min: usize,
    #[arg(long, default_value_t = 1)]
    p_max: usize,
    /// Search all graphs on the series dimension (the default source).
    #[arg(long, conflicts_with = "graphs_file")]
    all_graphs: bool,
    /// JSON file with an array of graphs to search instead.
    #[arg(long)]
    graphs_file: Option<String>,
    /// Keep only the best K rows in the outputs.
    #[arg(long)]
    top: Option<usize>,
    /// Score with the literal "T det Sigma" formula instead of
    /// "T log det Sigma".
    #[arg(long)]
    bic_literal: bool,
    /// Worker threads for independent model fits.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Raise the exhaustive-search dimension cap (default 5).
    #[arg(long)]
    cap: Option<usize>,
    #[arg(long, default_value = "cosine:0.1")]
    taper: String,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, default_value_t = 1000)]
    max_cycles: usize,
    #[arg(long)]
    grid: Option<usize>,
    /// Output prefix: writes PREFIX.json and PREFIX.csv.
    #[arg(long, default_value = "select")]
    out: String,
}

#[derive(Args)]
struct SpectraArgs {
    #[command(flatten)]
    series: SeriesOptions,
    /// Odd smoothing bandwidth in frequency bins; 1 is the raw periodogram.
    #[arg(long)]
    bandwidth: usize,
    #[arg(long, default_value = "cosine:0.1")]
    taper: String,
    /// Output prefix: writes PREFIX.spectra.csv, PREFIX.coh.csv,
    /// PREFIX.pcoh.csv and PREFIX.meta.json.
    #[arg(long, default_value = "spectra")]
    out: String,
}

#[derive(Args)]
struct SimulateArgs {
    /// VAR parameter JSON {"d", "p", "a", "sigma"}.
    params_json: String,
    /// Number of observations to keep.
    #[arg(long = "T", visible_alias = "t")]
    t_len: usize,
    /// Warm-up samples to discard (default 10p + 100).
    #[arg(long)]
    burnin: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output CSV path.
    #[arg(long, default_value = "simulated.csv")]
    out: String,
}

#[derive(Args)]
struct PcohArgs {
    /// Fit-result JSON produced by `givar fit`.
    fit_json: String,
    /// Output CSV path.
    #[arg(long, default_value = "pcoh.csv")]
    out: String,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Select(args) => cmd_select(args),
        Command::Spectra(args) => cmd_spectra(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Pcoh(args) => cmd_pcoh(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("givar: error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::InvalidData(_) | Error::EnumerationCap { .. } => 2,
        Error::SelectionFailed(_) => 4,
        _ => 3,
    }
}

fn parse_taper(s: &str) -> Result<TaperSpec, Error> {
    if s == "none" {
        return Ok(TaperSpec::None);
    }
    if s == "cosine" {
        return TaperSpec::cosine(0.1);
    }
    if let Some(frac) = s.strip_prefix("cosine:") {
        let fraction: f64 = frac
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("invalid taper fraction '{frac}'")))?;
        return TaperSpec::cosine(fraction);
    }
    Err(Error::InvalidArgument(format!(
        "unknown taper '{s}' (expected 'none', 'cosine' or 'cosine:FRACTION')"
    )))
}

fn parse_edges(spec: &str, d: usize) -> Result<UndirectedGraph, Error> {
    let mut pairs = Vec::new();
    for part in spec.split(',').filter(|p| !p.trim().is_empty()) {
        let (a, b) = part
            .trim()
            .split_once('-')
            .ok_or_else(|| Error::InvalidArgument(format!("invalid edge '{part}'")))?;
        let a: usize = a
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("invalid vertex '{a}'")))?;
        let b: usize = b
            .trim()
            .parse()
            .map_err(|_| Error::InvalidArgument(format!("invalid vertex '{b}'")))?;
        pairs.push((a, b));
    }
    UndirectedGraph::new(d, &pairs)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &str) -> Result<T, Error> {
    let file = std::fs::File::open(path).map_err(|e| Error::InvalidData(format!("{path}: {e}")))?;
    serde_json::from_reader(std::io::BufReader::new(file))
        .map_err(|e| Error::InvalidData(format!("{path}: {e}")))
}

fn with_suffix(prefix: &str, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{prefix}{suffix}"))
}

fn fit_options(
    taper: &str,
    tol: f64,
    max_cycles: usize,
    grid: Option<usize>,
) -> Result<FitOptions, Error> {
    Ok(FitOptions {
        tolerance: tol,
        max_cycles,
        grid_size: grid,
        taper: parse_taper(taper)?,
    })
}

fn cmd_fit(args: FitArgs) -> Result<ExitCode, Error> {
    let x = ingest::load_series(&args.series.csv_path, args.series.no_demean)?;
    let d = x.dim();
    let graph = match (&args.edges, &args.graph_json) {
        (Some(spec), _) => parse_edges(spec, d)?,
        (None, Some(path)) => {
            let g: UndirectedGraph = read_json(path)?;
            if g.vertex_count() != d {
                return Err(Error::InvalidArgument(format!(
                    "graph has {} vertices, series has {d}",
                    g.vertex_count()
                )));
            }
            g
        }
        (None, None) => UndirectedGraph::complete(d)?,
    };
    let opts = fit_options(&args.taper, args.tol, args.max_cycles, args.grid)?;
    let spec = ModelSpec::new(args.p, graph.clone());
    let fit = fit_gi(&x, &spec, &opts)?;

    let lambda = if fit.converged {
        match asymptotic_covariance(&fit.gi, &graph) {
            Ok(l) => Some(l),
            Err(e) => {
                eprintln!("givar: warning: asymptotic covariance unavailable: {e}");
                None
            }
        }
    } else {
        None
    };

    let json_path = with_suffix(&args.out, ".json");
    emit::write_json(&json_path, &fit.to_file(lambda))?;
    let f = spectrum_from_gi(&fit.gi, fit.grid_size)?;
    let spectra_path = with_suffix(&args.out, ".spectra.csv");
    emit::write_spectra_csv(&spectra_path, &f)?;
    // Partial coherence straight from the inverse-covariance parameters:
    // constrained pairs are exact zeros.
    let g_grid = inv_spectrum_from_gi(&fit.gi, fit.grid_size)?;
    let pcoh = partial_coherence_from_inverse(&g_grid);
    let pcoh_path = with_suffix(&args.out, ".pcoh.csv");
    emit::write_pair_csv(&pcoh_path, &pcoh, |j| g_grid.freq(j))?;
    emit::write_json(
        &with_suffix(&args.out, ".meta.json"),
        &SpectraMeta {
            d,
            n: fit.grid_size,
            taper: fit.taper,
        },
    )?;

    println!(
        "fit p={} |E|={} converged={} cycles={} loglik={:.6} residuals=({:.3e},{:.3e})",
        args.p,
        graph.edge_count(),
        fit.converged,
        fit.cycles,
        fit.loglik,
        fit.residuals.moment_residual,
        fit.residuals.constraint_residual
    );
    println!(
        "wrote {} {} {}",
        json_path.display(),
        spectra_path.display(),
        pcoh_path.display()
    );
    if fit.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "givar: fit did not converge in {} cycles (max residual {:.3e})",
            fit.cycles,
            fit.residuals.max_residual()
        );
        Ok(ExitCode::from(4))
    }
}

fn cmd_select(args: SelectArgs) -> Result<ExitCode, Error> {
    let x = ingest::load_series(&args.series.csv_path, args.series.no_demean)?;
    let graphs = match &args.graphs_file {
        Some(path) => Some(read_json::<Vec<UndirectedGraph>>(path)?),
        None => {
            let cap = args.cap.unwrap_or(CLI_GRAPH_CAP);
            if x.dim() > cap {
                return Err(Error::EnumerationCap {
                    d: x.dim(),
                    count: graph_count(x.dim()),
                    cap,
                });
            }
            None
        }
    };
    let opts = SelectOptions {
        fit: fit_options(&args.taper, args.tol, args.max_cycles, args.grid)?,
        bic_literal: args.bic_literal,
        jobs: args.jobs.max(1),
        enumeration_cap: args.cap.unwrap_or(CLI_GRAPH_CAP),
    };
    let mut report = select_models(&x, (args.p_min, args.p_max), graphs, &opts)?;
    if let Some(top) = args.top {
        report.rows.truncate(top);
        report.within_two_bic.retain(|&i| i < top);
    }

    let json_path = with_suffix(&args.out, ".json");
    emit::write_json(&json_path, &report)?;
    let csv_path = with_suffix(&args.out, ".csv");
    emit::write_selection_csv(&csv_path, &report)?;

    let best = report.best();
    println!(
        "best model: p={} edges=[{}] q={} bic={:.4}",
        best.p,
        emit::format_edges(best),
        best.q,
        best.bic.unwrap_or(f64::NAN)
    );
    println!("models within 2 BIC of the best:");
    for &i in &report.within_two_bic {
        let row = &report.rows[i];
        println!(
            "  p={} edges=[{}] bic={:.4}",
            row.p,
            emit::format_edges(row),
            row.bic.unwrap_or(f64::NAN)
        );
    }
    let failed = report.rows.iter().filter(|r| !r.converged).count();
    if failed > 0 {
        eprintln!("givar: warning: {failed} model(s) did not converge; see the report notes");
    }
    println!("wrote {} {}", json_path.display(), csv_path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_spectra(args: SpectraArgs) -> Result<ExitCode, Error> {
    let loaded = ingest::load_series(&args.series.csv_path, args.series.no_demean)?;
    let x = if loaded.is_demeaned() {
        loaded
    } else {
        loaded.demean()
    };
    let taper = parse_taper(&args.taper)?;
    let n = data_grid_size(x.len());
    let raw = periodogram(&x, &taper, n)?;
    let smoothed = smooth_periodogram(&raw, args.bandwidth)?;

    let spectra_path = with_suffix(&args.out, ".spectra.csv");
    emit::write_spectra_csv(&spectra_path, &smoothed)?;
    let coh_path = with_suffix(&args.out, ".coh.csv");
    emit::write_pair_csv(&coh_path, &coherency(&smoothed), |j| smoothed.freq(j))?;

    let mut wrote = vec![
        spectra_path.display().to_string(),
        coh_path.display().to_string(),
    ];
    if x.dim() < 2 {
        // no pairs to report
    } else if args.bandwidth == 1 {
        eprintln!(
            "givar: warning: the raw periodogram is rank one and cannot be inverted; \
             partial coherence suppressed (use an odd bandwidth >= {})",
            x.dim().max(3)
        );
    } else {
        let pcoh = partial_coherence(&smoothed)?;
        let pcoh_path = with_suffix(&args.out, ".pcoh.csv");
        emit::write_pair_csv(&pcoh_path, &pcoh, |j| smoothed.freq(j))?;
        wrote.push(pcoh_path.display().to_string());
    }
    emit::write_json(
        &with_suffix(&args.out, ".meta.json"),
        &SpectraMeta {
            d: x.dim(),
            n,
            taper,
        },
    )?;
    println!("wrote {}", wrote.join(" "));
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(args: SimulateArgs) -> Result<ExitCode, Error> {
    let params: VarParams = read_json(&args.params_json)?;
    let burnin = args
        .burnin
        .unwrap_or_else(|| default_burnin(params.order()));
    let x = simulate_var(&params, args.t_len, burnin, args.seed)?;
    emit::write_series_csv(Path::new(&args.out), &x)?;
    println!(
        "wrote {} ({} rows, {} components, seed {})",
        args.out,
        x.len(),
        x.dim(),
        args.seed
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_pcoh(args: PcohArgs) -> Result<ExitCode, Error> {
    let file: FitResultFile = read_json(&args.fit_json)?;
    let gi = file.gi_params()?;
    let g_grid = inv_spectrum_from_gi(&gi, file.n)?;
    let pcoh = partial_coherence_from_inverse(&g_grid);
    emit::write_pair_csv(Path::new(&args.out), &pcoh, |j| g_grid.freq(j))?;
    println!("wrote {}", args.out);
    Ok(ExitCode::SUCCESS)
}
