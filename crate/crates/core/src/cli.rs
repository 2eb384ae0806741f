//! Command-line driver. Every subcommand validates its configuration,
//! calls the library, and writes the library's CSV output verbatim.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::FrequencyGrid;
use crate::multitaper::{self, sweep_to_csv};
use crate::offgrid::{self, cs_reports_csv};
use crate::parallel;
use crate::prolate::{self, DpssParams};
use crate::stochastic::SpectrumSpec;
use crate::window::{self, window_reports_csv};

#[derive(Debug, Parser)]
#[command(name = "slepian-mtm", version, about = "DPSS, multitaper windows, MSE and multi-band approximation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tapers and eigenvalues for one (N, W).
    Dpss(Flags),
    /// L1 deviation of the aggregated window from the ideal band-pass kernel over an N sweep.
    Window(Flags),
    /// Monte-Carlo bias/variance/MSE of Thomson's estimator over a K sweep.
    Mse(Flags),
    /// Expected relative residual of multi-band signals on the modulated-Slepian sub-dictionary.
    Cs(Flags),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "n-list", value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    #[arg(long)]
    pub w: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long = "k-list", value_delimiter = ',')]
    pub k_list: Option<Vec<usize>>,
    /// Frequency grid size M.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub bands: Option<Vec<usize>>,
    #[arg(long = "m-bands")]
    pub m_bands: Option<usize>,
    #[arg(long)]
    pub weighted: bool,
    /// Spectrum as an inline JSON document.
    #[arg(long)]
    pub spectrum: Option<String>,
    /// Output directory; CSV goes to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON experiment configuration; explicit flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// Experiment parameters as stored in a `--config` file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_list: Option<Vec<usize>>,
    #[serde(rename = "W", skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_list: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bands: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_bands: Option<usize>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub weighted: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    /// Config file values overridden by explicit flags.
    pub fn from_flags(flags: &Flags) -> Result<Self> {
        let mut cfg = match &flags.config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        macro_rules! take {
            ($($f:ident),*) => { $( if flags.$f.is_some() { cfg.$f = flags.$f.clone(); } )* };
        }
        take!(n, n_list, w, k, k_list, grid, trials, seed, bands, m_bands, out);
        if flags.weighted {
            cfg.weighted = true;
        }
        if let Some(json) = &flags.spectrum {
            cfg.spectrum = Some(serde_json::from_str(json)?);
        }
        Ok(cfg)
    }

    fn require_n(&self) -> Result<usize> {
        self.n.ok_or_else(|| invalid("--n is required"))
    }

    fn require_w(&self) -> Result<f64> {
        self.w.ok_or_else(|| invalid("--w is required"))
    }

    fn n_values(&self) -> Result<Vec<usize>> {
        match (&self.n_list, self.n) {
            (Some(list), _) if !list.is_empty() => Ok(list.clone()),
            (_, Some(n)) => Ok(vec![n]),
            _ => Err(invalid("--n or --n-list is required")),
        }
    }

    fn grid_for(&self, n: usize) -> Result<FrequencyGrid> {
        match self.grid {
            Some(m) => FrequencyGrid::for_length(m, n),
            None => Ok(FrequencyGrid::default_for(n)),
        }
    }
}

/// Named CSV documents produced by one subcommand. The first is the primary
/// output printed when no output directory is given.
#[derive(Debug, Clone, PartialEq)]
pub struct Outputs(pub Vec<(String, String)>);

pub fn cmd_dpss(cfg: &ExperimentConfig) -> Result<Outputs> {
    let (n, w) = (cfg.require_n()?, cfg.require_w()?);
    let k = match cfg.k {
        Some(k) => k,
        None => DpssParams::critical(n, w)?.k,
    };
    let params = DpssParams::new(n, w, k)?;
    let basis = prolate::compute_dpss(&params, n)?;
    let lambdas = basis.eigenvalues();
    let mut summary = crate::csv::CsvWriter::with_header(&["N", "W", "K", "trace", "defect", "trace_defect"]);
    summary.row([
        n.to_string(),
        crate::csv::fmt_f64(w),
        k.to_string(),
        crate::csv::fmt_f64(lambdas.iter().sum()),
        crate::csv::fmt_f64(window::eigen_sum_defect(lambdas, k)?),
        crate::csv::fmt_f64(window::trace_defect(lambdas)),
    ]);
    Ok(Outputs(vec![
        ("dpss.csv".into(), basis.to_csv()),
        ("dpss_summary.csv".into(), summary.finish()),
    ]))
}

pub fn cmd_window(cfg: &ExperimentConfig) -> Result<Outputs> {
    let w = cfg.require_w()?;
    let reports = cfg
        .n_values()?
        .into_iter()
        .map(|n| window::window_report(n, w, cfg.grid_for(n)?, cfg.weighted))
        .collect::<Result<Vec<_>>>()?;
    let name = if cfg.weighted { "window_weighted.csv" } else { "window.csv" };
    Ok(Outputs(vec![(name.into(), window_reports_csv(&reports))]))
}

/// Default spectrum for MSE experiments: `1 + cos(2 pi xi) / 2`.
pub fn default_mse_spectrum() -> SpectrumSpec {
    SpectrumSpec::SmoothCosine { coeffs: vec![1.0, 0.5] }
}

pub fn cmd_mse(cfg: &ExperimentConfig) -> Result<Outputs> {
    let n = cfg.require_n()?;
    let trials = cfg.trials.unwrap_or(256);
    if trials < 2 {
        return Err(invalid(format!("--trials must be >= 2 for a variance, got {trials}")));
    }
    let seed = cfg.seed.unwrap_or(0);
    let spec = cfg.spectrum.clone().unwrap_or_else(default_mse_spectrum);
    let grid = cfg.grid_for(n)?;
    let reports = match (&cfg.k_list, cfg.k, cfg.w) {
        (Some(list), _, _) if !list.is_empty() => {
            multitaper::mse_sweep(&spec, n, list, trials, seed, Some(grid))?
        }
        (_, Some(k), Some(w)) => vec![mse_single(&spec, n, w, k, trials, seed, grid)?],
        (_, Some(k), None) => multitaper::mse_sweep(&spec, n, &[k], trials, seed, Some(grid))?,
        (_, None, Some(w)) => {
            let k = DpssParams::critical(n, w)?.k;
            vec![mse_single(&spec, n, w, k, trials, seed, grid)?]
        }
        _ => return Err(invalid("one of --k-list, --k or --w is required")),
    };
    let rows: Vec<_> = reports.iter().map(|r| r.sweep_row()).collect();
    let mut files = vec![("mse_sweep.csv".to_string(), sweep_to_csv(&rows))];
    files.extend(reports.iter().map(|r| (format!("mse_report_K{}.csv", r.k), r.to_csv())));
    Ok(Outputs(files))
}

fn mse_single(
    spec: &SpectrumSpec,
    n: usize,
    w: f64,
    k: usize,
    trials: u64,
    seed: u64,
    grid: FrequencyGrid,
) -> Result<multitaper::EstimateReport> {
    multitaper::mse_monte_carlo_with(
        spec,
        &multitaper::MseConfig { n, w, k, trials, base_seed: seed, grid: Some(grid), real_valued: None },
    )
}

pub fn cmd_cs(cfg: &ExperimentConfig) -> Result<Outputs> {
    let w = cfg.require_w()?;
    let bands = cfg.bands.clone().ok_or_else(|| invalid("--bands is required"))?;
    let m_bands = match cfg.m_bands {
        Some(m) => m,
        None => (1.0 / (2.0 * w) + 1e-9).floor() as usize,
    };
    let trials = cfg.trials.unwrap_or(0);
    if trials == 1 {
        return Err(invalid("--trials must be 0 (analytic only) or >= 2"));
    }
    let seed = cfg.seed.unwrap_or(0);
    let reports = cfg
        .n_values()?
        .into_iter()
        .map(|n| offgrid::cs_experiment(n, w, m_bands, &bands, trials, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(Outputs(vec![("cs.csv".into(), cs_reports_csv(&reports))]))
}

pub fn execute(command: &Command) -> Result<(Outputs, Option<PathBuf>)> {
    let (flags, f): (&Flags, fn(&ExperimentConfig) -> Result<Outputs>) = match command {
        Command::Dpss(f) => (f, cmd_dpss),
        Command::Window(f) => (f, cmd_window),
        Command::Mse(f) => (f, cmd_mse),
        Command::Cs(f) => (f, cmd_cs),
    };
    let cfg = ExperimentConfig::from_flags(flags)?;
    let threads = parallel::threads_from_env()?;
    let outputs = parallel::with_threads(threads, || f(&cfg))??;
    Ok((outputs, cfg.out.clone()))
}

fn write_outputs(outputs: &Outputs, out: Option<&Path>, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            for (name, body) in &outputs.0 {
                std::fs::write(dir.join(name), body)?;
            }
        }
        None => {
            if let Some((_, body)) = outputs.0.first() {
                stdout.write_all(body.as_bytes())?;
            }
        }
    }
    Ok(())
}

/// Parses arguments, runs the subcommand and returns the process exit code:
/// 0 on success, 2 for invalid input, 3 for numerical failure.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = execute(&cli.command).and_then(|(outputs, out)| write_outputs(&outputs, out.as_deref(), stdout));
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
