use super::graph::Graph;
use super::schedule::{
    counterexample_deltas, ConductanceSchedule, ExponentField, Growth, PerturbationBounds, TimeMode,
};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::sync::Arc;

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum GraphShape {
    Path { n: usize },
    Cycle { n: usize },
    Torus2d { width: usize, height: usize },
    Tree { arity: usize, depth: usize },
    Star { n: usize },
    Custom { n: usize, edges: Vec<[usize; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    #[serde(flatten)]
    pub shape: GraphShape,
    /// Add a self-loop at every vertex.
    #[serde(default)]
    pub loops: bool,
}

impl GraphSpec {
    pub fn build(&self) -> Result<Graph> {
        let g = match &self.shape {
            GraphShape::Path { n } => Graph::path(*n)?,
            GraphShape::Cycle { n } => Graph::cycle(*n)?,
            GraphShape::Torus2d { width, height } => Graph::torus2d(*width, *height)?,
            GraphShape::Tree { arity, depth } => Graph::tree(*arity, *depth)?,
            GraphShape::Star { n } => Graph::star(*n)?,
            GraphShape::Custom { n, edges } => {
                let e: Vec<(usize, usize)> = edges.iter().map(|&[a, b]| (a, b)).collect();
                Graph::custom(*n, &e)?
            }
        };
        if self.loops {
            g.with_loops()
        } else {
            Ok(g)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FieldSpec {
    Zero,
    SinLog {
        amplitude: f64,
        #[serde(default)]
        phases: Option<Vec<f64>>,
    },
    Linear {
        slope: f64,
    },
}

impl FieldSpec {
    pub fn to_field(&self) -> ExponentField {
        match self {
            FieldSpec::Zero => ExponentField::Zero,
            FieldSpec::SinLog { amplitude, phases } => ExponentField::SinLog {
                amplitude: *amplitude,
                phases: phases.clone(),
            },
            FieldSpec::Linear { slope } => ExponentField::Linear { slope: *slope },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum LawSpec {
    Static {
        #[serde(default = "one")]
        edge_weight: f64,
        #[serde(default = "one")]
        loop_weight: f64,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
    MonotoneIncreasing {
        #[serde(default = "one")]
        edge_weight: f64,
        #[serde(default = "one")]
        loop_weight: f64,
        growth: Growth,
        /// Growth applied to loops; defaults to `growth`.
        #[serde(default)]
        loop_growth: Option<Growth>,
        /// Restrict growth to these edges; others stay constant.
        #[serde(default)]
        edges: Option<Vec<[usize; 2]>>,
    },
    Perturbative {
        #[serde(default = "one")]
        edge_weight: f64,
        #[serde(default = "one")]
        loop_weight: f64,
        field: FieldSpec,
        #[serde(default)]
        bounds: Option<PerturbationBounds>,
    },
    OscillatingZ {
        eta: f64,
        /// Constant `delta_n = delta` at every `n`.
        #[serde(default)]
        delta: Option<f64>,
        /// `delta_n = min(0.49, n^{iota - 1/2})`.
        #[serde(default)]
        iota: Option<f64>,
        /// Explicit `delta_0, ..., delta_{n_max}`.
        #[serde(default)]
        deltas: Option<Vec<f64>>,
    },
    OscillatingHalfLine {
        eta: f64,
        eps: f64,
    },
    Tabulated {
        times: Vec<f64>,
        edges: Vec<[usize; 2]>,
        values: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    #[serde(flatten)]
    pub law: LawSpec,
    pub horizon: f64,
    #[serde(default)]
    pub time_mode: Option<TimeMode>,
}

/// Schedule file: `{"graph": {...}, "schedule": {...}}`. The graph section is
/// optional for the oscillating laws, which build their own line segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleFile {
    #[serde(default)]
    pub graph: Option<GraphSpec>,
    pub schedule: ScheduleSpec,
}

impl ScheduleFile {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn build(&self) -> Result<ConductanceSchedule> {
        let spec = &self.schedule;
        let mode = spec.time_mode.unwrap_or(TimeMode::Discrete);
        let horizon = spec.horizon;
        let n_max = || -> Result<usize> {
            if horizon < 0.0 || horizon.fract() != 0.0 {
                return Err(Error::InvalidConfig("oscillating schedules need an integer horizon".into()));
            }
            Ok(horizon as usize)
        };
        let graph = || -> Result<Arc<Graph>> {
            self.graph
                .as_ref()
                .ok_or_else(|| Error::InvalidConfig("missing graph section".into()))?
                .build()
                .map(Arc::new)
        };
        let split = |g: &Graph, edge: f64, lp: f64| -> Vec<f64> {
            g.edges()
                .iter()
                .map(|&(a, b)| if a == b { lp } else { edge })
                .collect()
        };
        match &spec.law {
            LawSpec::Static {
                edge_weight,
                loop_weight,
                weights,
            } => {
                let g = graph()?;
                let w = weights
                    .clone()
                    .unwrap_or_else(|| split(&g, *edge_weight, *loop_weight));
                ConductanceSchedule::static_weights(g, w, mode, horizon)
            }
            LawSpec::MonotoneIncreasing {
                edge_weight,
                loop_weight,
                growth,
                loop_growth,
                edges,
            } => {
                let g = graph()?;
                let base = split(&g, *edge_weight, *loop_weight);
                let mut selected = vec![edges.is_none(); g.edge_count()];
                if let Some(list) = edges {
                    for &[a, b] in list {
                        let id = g
                            .edge_id(a, b)
                            .ok_or_else(|| Error::InvalidConfig(format!("({a},{b}) is not an edge")))?;
                        selected[id] = true;
                    }
                }
                let profile = g
                    .edges()
                    .iter()
                    .enumerate()
                    .map(|(e, &(a, b))| {
                        if !selected[e] {
                            Growth::Constant
                        } else if a == b {
                            loop_growth.clone().unwrap_or_else(|| growth.clone())
                        } else {
                            growth.clone()
                        }
                    })
                    .collect();
                ConductanceSchedule::monotone(g, base, profile, mode, horizon)
            }
            LawSpec::Perturbative {
                edge_weight,
                loop_weight,
                field,
                bounds,
            } => {
                let g = graph()?;
                let base = split(&g, *edge_weight, *loop_weight);
                ConductanceSchedule::perturbative(
                    g,
                    base,
                    field.to_field(),
                    bounds.unwrap_or_default(),
                    mode,
                    horizon,
                )
            }
            LawSpec::OscillatingZ {
                eta,
                delta,
                iota,
                deltas,
            } => {
                let n = n_max()?;
                match (delta, iota, deltas) {
                    (Some(d), None, None) => ConductanceSchedule::counterexample_z_constant(n, *eta, *d),
                    (None, Some(i), None) => {
                        ConductanceSchedule::counterexample_z(n, *eta, &counterexample_deltas(n, *i))
                    }
                    (None, None, Some(ds)) => ConductanceSchedule::counterexample_z(n, *eta, ds),
                    _ => Err(Error::InvalidConfig(
                        "oscillating_z needs exactly one of delta, iota, deltas".into(),
                    )),
                }
            }
            LawSpec::OscillatingHalfLine { eta, eps } => {
                ConductanceSchedule::drift_half_line(n_max()?, *eta, *eps)
            }
            LawSpec::Tabulated {
                times,
                edges,
                values,
            } => {
                let g = graph()?;
                let e: Vec<(usize, usize)> = edges.iter().map(|&[a, b]| (a, b)).collect();
                ConductanceSchedule::tabulated(g, times.clone(), &e, values.clone(), mode, horizon)
            }
        }
    }
}
