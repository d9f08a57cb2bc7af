//! Data sets for the coarse-grained three-module rate: contour maps over two
//! delays and line cuts along `τ₃`, all rescaled by the plateau value `1/2`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rate::RateKernel;

/// Large fixed delay used by the cut figures, in units of `1/ΔΩ₋`.
pub const FIGURE_DELAY: f64 = 15.0;
/// Values of the panel delay, one panel or cut each.
pub const PANEL_DELAYS: [f64; 4] = [0.0, 5.0, 10.0, 15.0];
/// Contours and cuts cover `|τ| ≤ FIGURE_RANGE`.
pub const FIGURE_RANGE: f64 = 25.0;
pub const CONTOUR_STEP: f64 = 0.25;
pub const CUT_STEP: f64 = 0.05;
/// Large-delay value of `R̄`.
pub const PLATEAU: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FigureId {
    /// Contours over `(τ₁, τ₃)` for each panel value of `τ₂`.
    Fig2,
    /// Cuts along `τ₃` at `τ₂ = 15` for each panel value of `τ₁`.
    Fig3,
    /// Contours over `(τ₂, τ₃)` for each panel value of `τ₁`.
    Fig4,
    /// Cuts along `τ₃` at `τ₁ = 15` for each panel value of `τ₂`.
    Fig5,
}

impl FigureId {
    pub const ALL: [FigureId; 4] = [FigureId::Fig2, FigureId::Fig3, FigureId::Fig4, FigureId::Fig5];

    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
        }
    }

    pub fn is_contour(self) -> bool {
        matches!(self, FigureId::Fig2 | FigureId::Fig4)
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FigureId {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| format!("unknown figure '{s}' (expected fig2, fig3, fig4 or fig5)"))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContourRow {
    pub tau: [f64; 3],
    pub rbar: f64,
    pub rbar_rescaled: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutRow {
    pub tau3: f64,
    pub rbar_rescaled: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Panel<R> {
    pub label: String,
    pub rows: Vec<R>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum FigureData {
    Contour(Vec<Panel<ContourRow>>),
    Cuts(Vec<Panel<CutRow>>),
}

fn axis(step: f64) -> Vec<f64> {
    let n = (FIGURE_RANGE / step).round() as i64;
    (-n..=n).map(|i| step * i as f64).collect()
}

fn label(index: usize, value: f64) -> String {
    format!("tau{}={}", index + 1, value)
}

/// One cut: `R̄(τ₁, τ₂, τ₃)/PLATEAU` along `τ₃` with the other two delays fixed.
pub fn cut(tau1: f64, tau2: f64, step: f64) -> Result<Vec<CutRow>> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidGrid("cut step must be positive"));
    }
    let kern = RateKernel::shared(3)?;
    Ok(axis(step)
        .into_iter()
        .map(|t3| CutRow {
            tau3: t3,
            rbar_rescaled: kern.rbar(&[tau1, tau2, t3], 1.0) / PLATEAU,
        })
        .collect())
}

/// Full data set for one figure.
pub fn figure_data(id: FigureId) -> Result<FigureData> {
    let kern = RateKernel::shared(3)?;
    // (index of the panel delay, index of the swept in-plane delay)
    let (fixed, swept) = match id {
        FigureId::Fig2 | FigureId::Fig3 => (1usize, 0usize),
        FigureId::Fig4 | FigureId::Fig5 => (0, 1),
    };
    if id.is_contour() {
        let grid = axis(CONTOUR_STEP);
        let panels = PANEL_DELAYS
            .iter()
            .map(|&value| {
                let mut rows = Vec::with_capacity(grid.len() * grid.len());
                for &a in &grid {
                    for &t3 in &grid {
                        let mut tau = [0.0, 0.0, t3];
                        tau[fixed] = value;
                        tau[swept] = a;
                        let rbar = kern.rbar(&tau, 1.0);
                        rows.push(ContourRow {
                            tau,
                            rbar,
                            rbar_rescaled: rbar / PLATEAU,
                        });
                    }
                }
                Panel {
                    label: label(fixed, value),
                    rows,
                }
            })
            .collect();
        return Ok(FigureData::Contour(panels));
    }
    let panels = PANEL_DELAYS
        .iter()
        .map(|&value| {
            let mut tau = [0.0; 2];
            tau[fixed] = FIGURE_DELAY;
            tau[swept] = value;
            Ok(Panel {
                label: label(swept, value),
                rows: cut(tau[0], tau[1], CUT_STEP)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(FigureData::Cuts(panels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rate::rbar_k3;

    #[test]
    fn ids_round_trip() {
        for id in FigureId::ALL {
            assert_eq!(id.name().parse::<FigureId>().unwrap(), id);
        }
        assert!("fig9".parse::<FigureId>().is_err());
    }

    #[test]
    fn cut_through_origin_dip() {
        let rows = cut(0.0, FIGURE_DELAY, CUT_STEP).unwrap();
        assert_eq!(rows.len(), 1001);
        let centre = rows.iter().find(|r| r.tau3 == 0.0).unwrap();
        assert!((centre.rbar_rescaled - 0.5).abs() < 1e-12);
    }

    #[test]
    fn contour_layout_and_bounds() {
        let FigureData::Contour(panels) = figure_data(FigureId::Fig4).unwrap() else {
            panic!("contour expected");
        };
        assert_eq!(panels.len(), 4);
        assert_eq!(panels[2].label, "tau1=10");
        assert_eq!(panels[0].rows.len(), 201 * 201);
        for p in &panels {
            for r in &p.rows {
                // Largest value 1/2 + 4/32 sits at τ₂ = τ₃ = 0 with τ₁ far out.
                assert!((0.0..=1.25 + 1e-12).contains(&r.rbar_rescaled));
                assert!((r.rbar - rbar_k3(r.tau, 1.0)).abs() < 1e-12);
            }
        }
        let top = panels[3].rows.iter().map(|r| r.rbar_rescaled).fold(0.0, f64::max);
        assert!((top - 1.25).abs() < 1e-12);
        let corner = &panels[0].rows[0];
        assert_eq!(corner.tau, [0.0, -25.0, -25.0]);
    }

    #[test]
    fn cuts_layout() {
        let FigureData::Cuts(cuts) = figure_data(FigureId::Fig5).unwrap() else {
            panic!("cuts expected");
        };
        assert_eq!(cuts.iter().map(|c| c.label.as_str()).collect::<Vec<_>>(), ["tau2=0", "tau2=5", "tau2=10", "tau2=15"]);
        let far = cuts[1].rows.first().unwrap();
        assert!((far.rbar_rescaled - 1.0).abs() < 1e-6);
    }
}
