//! Command-line flags, the JSON configuration file, and their merge into a
//! validated [`RunConfig`].

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, ValueEnum};
use khom_core::figures::FigureId;
use khom_core::{solve_theta3_k4, BiphotonSpectrum, PhaseConfig};
use serde::{Deserialize, Serialize};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "KHOM_OUT_DIR";

pub const DEFAULT_NODES: usize = 128;
pub const DEFAULT_WINDOW: f64 = 0.3;
pub const DEFAULT_SAMPLES: usize = 41;
pub const DEFAULT_BOX: f64 = 3.0;
pub const DEFAULT_STEP: f64 = 0.1;
pub const DEFAULT_SWEEP_STEP: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Rate,
    Coarse,
    Scan,
    Zerofind,
    Figure,
    Calibrate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Rate => "rate",
            Command::Coarse => "coarse",
            Command::Scan => "scan",
            Command::Zerofind => "zerofind",
            Command::Figure => "figure",
            Command::Calibrate => "calibrate",
        }
    }

    /// Parameters (by config-file key) that the command reads.
    fn accepts(self) -> &'static [&'static str] {
        match self {
            Command::Rate => &[
                "k", "tau", "theta", "theta2", "theta4", "omega0", "d_omega_plus", "d_omega_minus", "method",
                "nodes", "format", "out",
            ],
            Command::Coarse => &[
                "k", "tau", "theta", "theta2", "theta4", "omega0", "d_omega_plus", "d_omega_minus", "method",
                "window", "samples", "format", "out",
            ],
            Command::Scan => &[
                "k", "tau", "theta", "theta2", "theta4", "omega0", "d_omega_plus", "d_omega_minus", "axis", "box",
                "step", "format", "out",
            ],
            Command::Zerofind => &[
                "k", "theta", "theta2", "theta4", "omega0", "d_omega_plus", "d_omega_minus", "box", "step", "out",
            ],
            Command::Figure => &["figure", "out"],
            Command::Calibrate => &["dip", "peak", "synthetic", "length_to_delay", "d_omega_minus", "out"],
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// `--theta` as given: either explicit phases or `auto`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ThetaArg {
    Values(Vec<f64>),
    Mode(String),
}

impl FromStr for ThetaArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        if !s.contains(',') && s.parse::<f64>().is_err() {
            return Ok(ThetaArg::Mode(s.to_string()));
        }
        s.split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|e| format!("bad phase '{v}': {e}")))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(ThetaArg::Values)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    /// Closed-form Gaussian integration of every plane-wave term.
    Analytic,
    /// Gauss-Hermite quadrature (`rate` only).
    Quadrature,
    /// Box average over delay windows (`coarse` only).
    Numeric,
}

/// Every tunable parameter. The same struct backs the flags and the
/// configuration file; flags win over file values.
#[derive(Args, Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Number of modules.
    #[arg(long)]
    pub k: Option<usize>,
    /// Delays tau_1..tau_k, comma separated, in units of 1/dOmega-.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub tau: Option<Vec<f64>>,
    /// Phases theta_1..theta_k (theta_1 = 0), comma separated, or `auto`.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: Option<ThetaArg>,
    /// theta_2 seed for `--theta auto` with k = 4.
    #[arg(long, allow_hyphen_values = true)]
    pub theta2: Option<f64>,
    /// theta_4 seed for `--theta auto` with k = 4.
    #[arg(long, allow_hyphen_values = true)]
    pub theta4: Option<f64>,
    /// Mean single-photon frequency (default 20).
    #[arg(long)]
    pub omega0: Option<f64>,
    /// Width of the sum-frequency distribution (default 0.25).
    #[arg(long)]
    pub d_omega_plus: Option<f64>,
    /// Width of the difference-frequency distribution (default 1).
    #[arg(long)]
    pub d_omega_minus: Option<f64>,
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    /// Gauss-Hermite nodes per axis (default 128).
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Coarse-graining window width T (default 0.3).
    #[arg(long)]
    pub window: Option<f64>,
    /// Midpoint samples per axis for the box average (default 41, odd).
    #[arg(long)]
    pub samples: Option<usize>,
    /// Delay swept by `scan`, 1-based (default 1).
    #[arg(long)]
    pub axis: Option<usize>,
    /// Half-width of the delay box (default 3).
    #[arg(long = "box")]
    #[serde(rename = "box")]
    pub half_width: Option<f64>,
    /// Grid step (default 0.1 for zerofind, 0.05 for scan).
    #[arg(long)]
    pub step: Option<f64>,
    /// Figure to emit (fig2..fig5); all four when omitted.
    #[arg(long)]
    pub figure: Option<String>,
    /// CSV file with `x,y` columns holding the dip scan.
    #[arg(long)]
    pub dip: Option<PathBuf>,
    /// CSV file with `x,y` columns holding the peak scan.
    #[arg(long)]
    pub peak: Option<PathBuf>,
    /// Generate both scans from known offsets dl1,dl2,dl3 instead of reading files.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub synthetic: Option<Vec<f64>>,
    /// Delay per unit of stage displacement (default 1).
    #[arg(long)]
    pub length_to_delay: Option<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file, or output directory for `figure`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

macro_rules! for_each_param {
    ($m:ident) => {
        $m!(k, tau, theta, theta2, theta4, omega0, d_omega_plus, d_omega_minus, method, nodes, window, samples, axis,
            half_width, step, figure, dip, peak, synthetic, length_to_delay, format, out)
    };
}

impl Params {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Field-wise merge; values in `self` take precedence.
    pub fn or(self, fallback: Params) -> Params {
        macro_rules! merge {
            ($($f:ident),*) => { Params { $($f: self.$f.or(fallback.$f)),* } };
        }
        for_each_param!(merge)
    }

    /// Config-file keys of the parameters that are set.
    pub fn set_keys(&self) -> Vec<&'static str> {
        macro_rules! keys {
            ($($f:ident),*) => {{
                let mut v = Vec::new();
                $(if self.$f.is_some() {
                    v.push(if stringify!($f) == "half_width" { "box" } else { stringify!($f) });
                })*
                v
            }};
        }
        for_each_param!(keys)
    }
}

/// Where results go.
#[derive(Clone, Debug, PartialEq)]
pub enum Sink {
    Stdout,
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum ThetaMode {
    Explicit,
    Zero,
    Auto { seeds: Option<[f64; 2]> },
}

/// A checked phase configuration plus how its phases were chosen.
#[derive(Clone, Debug)]
pub struct Phases {
    pub cfg: PhaseConfig,
    pub mode: ThetaMode,
}

#[derive(Clone, Debug)]
pub enum Job {
    Rate {
        phases: Phases,
        spectrum: BiphotonSpectrum,
        quadrature_nodes: Option<usize>,
    },
    Coarse {
        phases: Phases,
        spectrum: BiphotonSpectrum,
        /// Window width and samples per axis when a numeric box average is requested.
        window: Option<(f64, usize)>,
    },
    Scan {
        phases: Phases,
        spectrum: BiphotonSpectrum,
        axis: usize,
        half_width: f64,
        step: f64,
    },
    Zerofind {
        k: usize,
        phases: Phases,
        spectrum: BiphotonSpectrum,
        half_width: f64,
        step: f64,
    },
    Figure {
        figures: Vec<FigureId>,
    },
    Calibrate {
        source: ScanSource,
        length_to_delay: f64,
        d_omega_minus: f64,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScanSource {
    Files { dip: PathBuf, peak: PathBuf },
    Synthetic([f64; 3]),
}

/// Fully validated run description.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub command: Command,
    pub job: Job,
    pub format: Format,
    pub sink: Sink,
}

/// Merges flags over the optional file and validates the result. `out_dir`
/// is the value of [`OUT_DIR_ENV`], passed in so callers control the environment.
pub fn resolve(
    command: Command,
    flags: Params,
    file: Option<&Path>,
    out_dir: Option<PathBuf>,
) -> Result<RunConfig> {
    let allowed = command.accepts();
    if let Some(bad) = flags.set_keys().into_iter().find(|key| !allowed.contains(key)) {
        bail!("--{} is not used by `{command}`", bad.replace('_', "-"));
    }
    let p = match file {
        Some(path) => {
            let from_file = Params::from_file(path)?;
            // A shared file may carry keys for other commands; they are ignored.
            flags.or(from_file)
        }
        None => flags,
    };

    let format = p.format.unwrap_or(Format::Json);
    if format == Format::Csv && !matches!(command, Command::Rate | Command::Coarse | Command::Scan) {
        bail!("`{command}` only writes JSON");
    }
    let method = p.method.unwrap_or(MethodArg::Analytic);
    let method_ok = match command {
        Command::Rate => method != MethodArg::Numeric,
        Command::Coarse => method != MethodArg::Quadrature,
        _ => true,
    };
    ensure!(method_ok, "method {method:?} is not available for `{command}`");

    let job = match command {
        Command::Rate => Job::Rate {
            phases: phases(&p, true)?,
            spectrum: spectrum(&p)?,
            quadrature_nodes: (method == MethodArg::Quadrature).then(|| p.nodes.unwrap_or(DEFAULT_NODES)),
        },
        Command::Coarse => Job::Coarse {
            phases: phases(&p, true)?,
            spectrum: spectrum(&p)?,
            window: (method == MethodArg::Numeric).then(|| {
                (p.window.unwrap_or(DEFAULT_WINDOW), p.samples.unwrap_or(DEFAULT_SAMPLES))
            }),
        },
        Command::Scan => {
            let phases = phases(&p, true)?;
            let axis = p.axis.unwrap_or(1);
            ensure!(
                (1..=phases.cfg.k()).contains(&axis),
                "--axis {axis} is outside 1..={}",
                phases.cfg.k()
            );
            Job::Scan {
                phases,
                spectrum: spectrum(&p)?,
                axis,
                half_width: p.half_width.unwrap_or(DEFAULT_BOX),
                step: p.step.unwrap_or(DEFAULT_SWEEP_STEP),
            }
        }
        Command::Zerofind => {
            let phases = phases(&p, false)?;
            Job::Zerofind {
                k: phases.cfg.k(),
                phases,
                spectrum: spectrum(&p)?,
                half_width: p.half_width.unwrap_or(DEFAULT_BOX),
                step: p.step.unwrap_or(DEFAULT_STEP),
            }
        }
        Command::Figure => Job::Figure {
            figures: match p.figure.as_deref() {
                None | Some("all") => FigureId::ALL.to_vec(),
                Some(name) => vec![name.parse::<FigureId>().map_err(anyhow::Error::msg)?],
            },
        },
        Command::Calibrate => Job::Calibrate {
            source: match (p.synthetic, p.dip, p.peak) {
                (Some(dl), None, None) => {
                    ensure!(dl.len() == 3, "--synthetic takes dl1,dl2,dl3 (got {} values)", dl.len());
                    ScanSource::Synthetic([dl[0], dl[1], dl[2]])
                }
                (None, Some(dip), Some(peak)) => ScanSource::Files { dip, peak },
                (Some(_), _, _) => bail!("--synthetic cannot be combined with --dip/--peak"),
                _ => bail!("calibrate needs both --dip and --peak, or --synthetic"),
            },
            length_to_delay: p.length_to_delay.unwrap_or(1.0),
            d_omega_minus: p.d_omega_minus.unwrap_or(1.0),
        },
    };
    let sink = match (p.out, command) {
        (Some(path), _) => Sink::File(path),
        (None, Command::Figure) => Sink::File(out_dir.unwrap_or_else(|| PathBuf::from("."))),
        (None, _) => match out_dir {
            Some(dir) => Sink::File(dir.join(format!(
                "{}.{}",
                command.name(),
                if format == Format::Csv { "csv" } else { "json" }
            ))),
            None => Sink::Stdout,
        },
    };
    Ok(RunConfig {
        command,
        job,
        format,
        sink,
    })
}

fn spectrum(p: &Params) -> Result<BiphotonSpectrum> {
    Ok(BiphotonSpectrum::new(
        p.omega0.unwrap_or(20.0),
        p.d_omega_plus.unwrap_or(0.25),
        p.d_omega_minus.unwrap_or(1.0),
    )?)
}

/// Builds the phase configuration. Without `needs_tau` the delays are a
/// placeholder of zeros and only `k` and the phases matter.
fn phases(p: &Params, needs_tau: bool) -> Result<Phases> {
    let k = match (p.k, &p.tau) {
        (Some(k), _) => k,
        (None, Some(tau)) => tau.len(),
        (None, None) => bail!("--k is required"),
    };
    ensure!(k >= 1, "--k must be at least 1");
    let tau = match &p.tau {
        Some(tau) => {
            ensure!(tau.len() == k, "length mismatch: k = {k} but --tau has {} values", tau.len());
            tau.clone()
        }
        None if needs_tau => bail!("--tau is required"),
        None => vec![0.0; k],
    };
    let seeds = match (p.theta2, p.theta4) {
        (Some(a), Some(b)) => Some((a, b)),
        (None, None) => None,
        _ => bail!("--theta2 and --theta4 must be given together"),
    };
    let (theta, mode) = match &p.theta {
        None => {
            ensure!(seeds.is_none(), "--theta2/--theta4 only apply with --theta auto");
            (vec![0.0; k], ThetaMode::Zero)
        }
        Some(ThetaArg::Values(values)) => {
            ensure!(seeds.is_none(), "--theta2/--theta4 only apply with --theta auto");
            ensure!(
                values.len() == k,
                "length mismatch: k = {k} but --theta has {} values",
                values.len()
            );
            (values.clone(), ThetaMode::Explicit)
        }
        Some(ThetaArg::Mode(m)) if m == "auto" => match k {
            2 => {
                ensure!(seeds.is_none(), "--theta2/--theta4 only apply to k = 4");
                (vec![0.0, FRAC_PI_2], ThetaMode::Auto { seeds: None })
            }
            4 => {
                let Some((t2, t4)) = seeds else {
                    bail!("--theta auto for k = 4 requires --theta2 and --theta4");
                };
                let t3 = solve_theta3_k4(t2, t4).context("solving for theta3")?;
                (vec![0.0, t2, t3, t4], ThetaMode::Auto { seeds: Some([t2, t4]) })
            }
            _ => bail!("--theta auto is only defined for k = 2 and k = 4 (got k = {k})"),
        },
        Some(ThetaArg::Mode(m)) => bail!("invalid theta mode '{m}' (expected a list of phases or 'auto')"),
    };
    Ok(Phases {
        cfg: PhaseConfig::new(tau, theta)?,
        mode,
    })
}
