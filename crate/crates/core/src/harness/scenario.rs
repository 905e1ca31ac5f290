//! Scenario registry: how a named model space and operator are built at a
//! given resolution.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::calculus::SelfAdjointOperator;
use crate::space::{build_grid_space, default_fit, MetricMeasureSpace, Topology};
use crate::{Error, Result};

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScenarioSpec {
    /// Periodic second difference on `N` points.
    Torus1d {
        #[serde(default = "one")]
        spacing: f64,
    },
    /// Five-point Laplacian on an `N × N` periodic grid.
    Torus2d {
        #[serde(default = "one")]
        spacing: f64,
    },
    /// Second difference with Dirichlet ends.
    IntervalDirichlet {
        #[serde(default = "one")]
        spacing: f64,
    },
    /// `−d²/dx² + c/x²` on `N` points each side of the origin.
    InverseSquare {
        c: f64,
        #[serde(default = "one")]
        spacing: f64,
    },
    /// Graph Laplacian of an edge list; the resolution is ignored.
    GraphFile {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        measure: Option<PathBuf>,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioInfo {
    pub name: &'static str,
    pub summary: &'static str,
    pub resolution: &'static str,
    pub parameters: Vec<(&'static str, &'static str)>,
}

pub fn list_scenarios() -> Vec<ScenarioInfo> {
    vec![
        ScenarioInfo {
            name: "torus1d",
            summary: "periodic second difference on a ring of N points",
            resolution: "N points",
            parameters: vec![("spacing", "grid step h (default 1)")],
        },
        ScenarioInfo {
            name: "torus2d",
            summary: "five-point Laplacian on an N × N periodic grid",
            resolution: "side N (N² points)",
            parameters: vec![("spacing", "grid step h (default 1)")],
        },
        ScenarioInfo {
            name: "interval_dirichlet",
            summary: "second difference on N points with Dirichlet ends",
            resolution: "N points",
            parameters: vec![("spacing", "grid step h (default 1)")],
        },
        ScenarioInfo {
            name: "inverse_square",
            summary: "−d²/dx² + c/x² on ±h, …, ±Nh with Dirichlet conditions at 0 and the ends",
            resolution: "N points each side",
            parameters: vec![
                ("c", "coupling, must be ≥ −1/4"),
                ("spacing", "grid step h (default 1)"),
            ],
        },
        ScenarioInfo {
            name: "graph_file",
            summary: "graph Laplacian of a weighted edge list with shortest-path distance",
            resolution: "ignored",
            parameters: vec![
                ("path", "point count on the first line, then one `i j length` edge per line"),
                ("measure", "optional `i μ(i)` file; missing points get μ = 1"),
            ],
        },
    ]
}

impl ScenarioSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Torus1d { .. } => "torus1d",
            Self::Torus2d { .. } => "torus2d",
            Self::IntervalDirichlet { .. } => "interval_dirichlet",
            Self::InverseSquare { .. } => "inverse_square",
            Self::GraphFile { .. } => "graph_file",
        }
    }

    /// Checks parameters without building anything.
    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Torus1d { spacing } | Self::Torus2d { spacing } | Self::IntervalDirichlet { spacing } => {
                check_spacing(*spacing)
            }
            Self::InverseSquare { c, spacing } => {
                check_spacing(*spacing)?;
                if !c.is_finite() || *c < -0.25 {
                    return Err(Error::Config(format!(
                        "inverse_square: c = {c} is below −1/4, where the operator is not non-negative"
                    )));
                }
                Ok(())
            }
            Self::GraphFile { path, .. } => {
                if path.as_os_str().is_empty() {
                    return Err(Error::Config("graph_file: empty path".into()));
                }
                Ok(())
            }
        }
    }

    /// Dimension `n` for grid scenarios; `None` means fit it.
    pub fn nominal_dimension(&self) -> Option<f64> {
        match self {
            Self::Torus1d { .. } | Self::IntervalDirichlet { .. } | Self::InverseSquare { .. } => Some(1.0),
            Self::Torus2d { .. } => Some(2.0),
            Self::GraphFile { .. } => None,
        }
    }

    pub fn spacing(&self) -> f64 {
        match self {
            Self::Torus1d { spacing }
            | Self::Torus2d { spacing }
            | Self::IntervalDirichlet { spacing }
            | Self::InverseSquare { spacing, .. } => *spacing,
            Self::GraphFile { .. } => 1.0,
        }
    }

    pub fn build(&self, resolution: usize) -> Result<SelfAdjointOperator> {
        self.validate()?;
        match self {
            Self::Torus1d { spacing } => grid(1, resolution, *spacing, Topology::Torus),
            Self::Torus2d { spacing } => grid(2, resolution, *spacing, Topology::Torus),
            Self::IntervalDirichlet { spacing } => grid(1, resolution, *spacing, Topology::Interval),
            Self::InverseSquare { c, spacing } => SelfAdjointOperator::inverse_square(resolution, *spacing, *c),
            Self::GraphFile { path, measure } => {
                let (space, edges) = MetricMeasureSpace::from_graph_files(path, measure.as_deref())?;
                SelfAdjointOperator::graph_laplacian(Arc::new(space), &edges)
            }
        }
    }

    /// Nominal dimension, or a doubling fit on the built space.
    pub fn dimension(&self, space: &MetricMeasureSpace) -> Result<f64> {
        match self.nominal_dimension() {
            Some(n) => Ok(n),
            None => Ok(default_fit(space, 16)?.dimension_n),
        }
    }
}

fn check_spacing(h: f64) -> Result<()> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Config(format!("spacing must be positive, got {h}")));
    }
    Ok(())
}

fn grid(dim: usize, side: usize, h: f64, topology: Topology) -> Result<SelfAdjointOperator> {
    SelfAdjointOperator::second_difference(Arc::new(build_grid_space(dim, side, h, topology)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_scenarios() {
        let names: Vec<&str> = list_scenarios().iter().map(|s| s.name).collect();
        assert_eq!(
            names,
            ["torus1d", "torus2d", "interval_dirichlet", "inverse_square", "graph_file"]
        );
    }

    #[test]
    fn builds_at_resolution() {
        assert_eq!(ScenarioSpec::Torus2d { spacing: 1.0 }.build(6).unwrap().len(), 36);
        assert_eq!(ScenarioSpec::InverseSquare { c: 0.5, spacing: 1.0 }.build(5).unwrap().len(), 10);
        assert!(ScenarioSpec::InverseSquare { c: -0.3, spacing: 1.0 }.build(5).is_err());
        assert!(ScenarioSpec::Torus1d { spacing: 0.0 }.validate().is_err());
    }
}
