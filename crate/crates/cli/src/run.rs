//! Executes a [`RunConfig`] and writes its record.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use khom_core::figures::{
    figure_data, FigureData, FigureId, CONTOUR_STEP, CUT_STEP, FIGURE_DELAY, FIGURE_RANGE, PANEL_DELAYS, PLATEAU,
};
use khom_core::zeropoint::{synthetic_dip_profile, synthetic_peak_profile, ScanPlan};
use khom_core::{
    calibrate_from_scans, rate_analytic, rate_coarse_analytic, rate_coarse_numeric, rate_quadrature,
    scan_zero_manifold, verify_k4_exclusive, BiphotonSpectrum, CoarseGrainWindow, Geometry, Profile,
    ScanSpec,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, Job, Phases, RunConfig, ScanSource, Sink, ThetaMode};

/// Fixed CSV float format: 17 significant digits.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Tabular form of a result, written when `--format csv` is chosen.
struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn write(&self, w: impl Write) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for row in &self.rows {
            out.write_record(row)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn indexed(prefix: &str, k: usize) -> impl Iterator<Item = String> + '_ {
    (1..=k).map(move |i| format!("{prefix}{i}"))
}

#[derive(Serialize)]
struct SpectrumEcho {
    omega0: f64,
    d_omega_plus: f64,
    d_omega_minus: f64,
}

impl From<&BiphotonSpectrum> for SpectrumEcho {
    fn from(s: &BiphotonSpectrum) -> Self {
        Self {
            omega0: s.omega0(),
            d_omega_plus: s.d_omega_plus(),
            d_omega_minus: s.d_omega_minus(),
        }
    }
}

#[derive(Serialize)]
struct PhaseEcho<'a> {
    k: usize,
    tau: &'a [f64],
    theta: &'a [f64],
    theta_mode: &'a ThetaMode,
}

fn phase_echo(p: &Phases) -> PhaseEcho<'_> {
    PhaseEcho {
        k: p.cfg.k(),
        tau: p.cfg.tau(),
        theta: p.cfg.theta(),
        theta_mode: &p.mode,
    }
}

fn record(command: &str, inputs: Value, outputs: Value) -> Value {
    json!({
        "command": command,
        "engine_version": khom_core::VERSION,
        "inputs": inputs,
        "outputs": outputs,
    })
}

/// Runs the job and writes its output. Returns the JSON record for commands
/// that write elsewhere (figure manifests are always printed).
pub fn run(cfg: &RunConfig) -> Result<()> {
    let command = cfg.command.name();
    let (json, table) = match &cfg.job {
        Job::Rate {
            phases,
            spectrum,
            quadrature_nodes,
        } => {
            let res = match quadrature_nodes {
                Some(n) => rate_quadrature(&phases.cfg, spectrum, *n)?,
                None => rate_analytic(&phases.cfg, spectrum)?,
            };
            let k = phases.cfg.k();
            let table = Table {
                header: indexed("tau", k)
                    .chain(indexed("theta", k))
                    .chain(["omega0", "d_omega_plus", "d_omega_minus", "total", "rbar", "delta"].map(String::from))
                    .collect(),
                rows: vec![phases
                    .cfg
                    .tau()
                    .iter()
                    .chain(phases.cfg.theta())
                    .chain(&[
                        spectrum.omega0(),
                        spectrum.d_omega_plus(),
                        spectrum.d_omega_minus(),
                        res.total,
                        res.rbar,
                        res.delta,
                    ])
                    .map(|&x| num(x))
                    .collect()],
            };
            let inputs = json!({
                "phases": phase_echo(phases),
                "spectrum": SpectrumEcho::from(spectrum),
                "quadrature_nodes": quadrature_nodes,
            });
            (record(command, inputs, serde_json::to_value(res)?), Some(table))
        }
        Job::Coarse {
            phases,
            spectrum,
            window,
        } => {
            let rbar = rate_coarse_analytic(&phases.cfg, spectrum)?;
            let boxed = match window {
                Some((width, samples)) => {
                    let win = CoarseGrainWindow::new(*width, *samples)?;
                    Some(rate_coarse_numeric(&phases.cfg, spectrum, &win)?)
                }
                None => None,
            };
            let k = phases.cfg.k();
            let mut header: Vec<String> = indexed("tau", k).chain(["rbar".to_string()]).collect();
            let mut row: Vec<String> = phases.cfg.tau().iter().chain(&[rbar]).map(|&x| num(x)).collect();
            if let Some(b) = &boxed {
                header.extend(["window", "samples", "box_average"].map(String::from));
                row.extend([num(window.unwrap().0), window.unwrap().1.to_string(), num(b.value)]);
            }
            let inputs = json!({
                "phases": phase_echo(phases),
                "spectrum": SpectrumEcho::from(spectrum),
                "window": window.map(|(w, _)| w),
                "samples_per_axis": window.map(|(_, s)| s),
            });
            let outputs = json!({
                "rbar": rbar,
                "box_average": boxed,
                "difference": boxed.map(|b| b.value - rbar),
            });
            (record(command, inputs, outputs), Some(Table { header, rows: vec![row] }))
        }
        Job::Scan {
            phases,
            spectrum,
            axis,
            half_width,
            step,
        } => {
            let n = (half_width / step).round() as i64;
            anyhow::ensure!(
                *step > 0.0 && (1..=100_000).contains(&n),
                "scan needs 0 < step <= box with at most 200001 points"
            );
            let k = phases.cfg.k();
            let mut rows = Vec::with_capacity(2 * n as usize + 1);
            let mut points = Vec::with_capacity(rows.capacity());
            for i in -n..=n {
                let mut tau = phases.cfg.tau().to_vec();
                tau[axis - 1] = step * i as f64;
                let res = rate_analytic(&phases.cfg.with_tau(tau.clone())?, spectrum)?;
                rows.push(
                    tau.iter()
                        .chain(&[res.total, res.rbar, res.delta])
                        .map(|&x| num(x))
                        .collect(),
                );
                points.push(json!({"tau": tau, "total": res.total, "rbar": res.rbar, "delta": res.delta}));
            }
            let table = Table {
                header: indexed("tau", k).chain(["total", "rbar", "delta"].map(String::from)).collect(),
                rows,
            };
            let inputs = json!({
                "phases": phase_echo(phases),
                "spectrum": SpectrumEcho::from(spectrum),
                "axis": axis,
                "box": half_width,
                "step": step,
            });
            (record(command, inputs, json!({ "points": points })), Some(table))
        }
        Job::Zerofind {
            k,
            phases,
            spectrum,
            half_width,
            step,
        } => {
            let grid = ScanSpec::new(*half_width, *step)?.with_spectrum(*spectrum);
            let theta = phases.cfg.theta();
            let inputs = json!({
                "k": k,
                "theta": theta,
                "theta_mode": &phases.mode,
                "spectrum": SpectrumEcho::from(spectrum),
                "box": half_width,
                "step": step,
            });
            let outputs = match (&phases.mode, k) {
                (ThetaMode::Auto { seeds: Some([t2, t4]) }, 4) => {
                    serde_json::to_value(verify_k4_exclusive(*t2, *t4, &grid)?)?
                }
                _ => serde_json::to_value(scan_zero_manifold(*k, &theta[1..], &grid)?)?,
            };
            (record(command, inputs, outputs), None)
        }
        Job::Figure { figures } => {
            let Sink::File(dir) = &cfg.sink else { unreachable!("figure output always goes to a directory") };
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let mut files = Vec::new();
            for &id in figures {
                files.push(write_figure(id, dir)?);
            }
            let inputs = json!({
                "figures": figures,
                "range": FIGURE_RANGE,
                "contour_step": CONTOUR_STEP,
                "cut_step": CUT_STEP,
                "fixed_delay": FIGURE_DELAY,
                "panel_delays": PANEL_DELAYS,
                "plateau": PLATEAU,
                "d_omega_minus": 1.0,
            });
            let rec = record(command, inputs, json!({ "files": files }));
            emit_json(&rec, &Sink::Stdout)?;
            return Ok(());
        }
        Job::Calibrate {
            source,
            length_to_delay,
            d_omega_minus,
        } => {
            let geometry = Geometry {
                length_to_delay: *length_to_delay,
                d_omega_minus: *d_omega_minus,
            };
            let (dip, peak, truth) = match source {
                ScanSource::Files { dip, peak } => (read_profile(dip)?, read_profile(peak)?, None),
                ScanSource::Synthetic(dl) => {
                    let plan = ScanPlan::default();
                    (
                        synthetic_dip_profile(*dl, &geometry, &plan),
                        synthetic_peak_profile(*dl, &geometry, &plan),
                        Some(*dl),
                    )
                }
            };
            let est = calibrate_from_scans(&dip, &peak, &geometry)?;
            let inputs = json!({
                "source": match source {
                    ScanSource::Files { dip, peak } => json!({"dip": dip, "peak": peak}),
                    ScanSource::Synthetic(dl) => json!({"synthetic": dl, "plan": ScanPlan::default()}),
                },
                "geometry": geometry,
            });
            let outputs = json!({
                "estimate": &est,
                "errors": truth.map(|t| est.errors(t)),
                "round_trip_ok": truth.map(|t| est.round_trip_ok(t)),
            });
            (record(command, inputs, outputs), None)
        }
    };
    match (cfg.format, table) {
        (Format::Csv, Some(t)) => match &cfg.sink {
            Sink::Stdout => t.write(io::stdout().lock()),
            Sink::File(path) => t.write(create(path)?),
        },
        _ => emit_json(&json, &cfg.sink),
    }
}

fn create(path: &Path) -> Result<File> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
    }
    File::create(path).with_context(|| format!("writing {}", path.display()))
}

fn emit_json(value: &Value, sink: &Sink) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match sink {
        Sink::Stdout => io::stdout().lock().write_all(text.as_bytes())?,
        Sink::File(path) => create(path)?.write_all(text.as_bytes())?,
    }
    Ok(())
}

#[derive(Serialize)]
struct FigureFile {
    figure: FigureId,
    path: PathBuf,
    rows: usize,
}

fn write_figure(id: FigureId, dir: &Path) -> Result<FigureFile> {
    let path = dir.join(format!("{}.csv", id.name()));
    let table = match figure_data(id)? {
        FigureData::Contour(panels) => Table {
            header: ["tau1", "tau2", "tau3", "rbar", "rbar_rescaled"].map(String::from).to_vec(),
            rows: panels
                .iter()
                .flat_map(|p| &p.rows)
                .map(|r| r.tau.iter().chain(&[r.rbar, r.rbar_rescaled]).map(|&x| num(x)).collect())
                .collect(),
        },
        FigureData::Cuts(panels) => Table {
            header: ["cut_label", "tau3", "rbar_rescaled"].map(String::from).to_vec(),
            rows: panels
                .iter()
                .flat_map(|p| p.rows.iter().map(move |r| vec![p.label.clone(), num(r.tau3), num(r.rbar_rescaled)]))
                .collect(),
        },
    };
    table.write(create(&path)?)?;
    Ok(FigureFile {
        figure: id,
        path,
        rows: table.rows.len(),
    })
}

fn read_profile(path: &Path) -> Result<Profile> {
    let mut reader = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .with_context(|| format!("{} has no '{name}' column", path.display()))
    };
    let (ix, iy) = (col("x")?, col("y")?);
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for (line, rec) in reader.records().enumerate() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .unwrap_or_default()
                .trim()
                .parse()
                .with_context(|| format!("{} row {}: bad number", path.display(), line + 2))
        };
        x.push(parse(ix)?);
        y.push(parse(iy)?);
    }
    Ok(Profile::new(x, y)?)
}
