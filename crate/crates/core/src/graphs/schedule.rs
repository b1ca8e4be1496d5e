use super::graph::Graph;
use crate::error::{out_of_range, Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::fmt;
use std::sync::Arc;

/// Grid spacing used to scan continuous schedules.
pub const CONTINUOUS_GRID_STEP: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeMode {
    /// `pi_t` is defined on integers; real `t` reads `pi_{floor t}`.
    Discrete,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Static,
    MonotoneIncreasing,
    Perturbative,
    OscillatingZ,
    OscillatingHalfLine,
    Tabulated,
}

/// Multiplicative, nondecreasing time profile applied to a base conductance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Growth {
    Constant,
    /// `1 + slope * min(t, cap)`.
    Linear { slope: f64, cap: f64 },
    /// `1` before `at`, `factor` from `at` on.
    Step { at: f64, factor: f64 },
    /// `1 + (limit - 1)(1 - e^{-rate t})`.
    Saturating { rate: f64, limit: f64 },
}

impl Growth {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Growth::Constant => 1.0,
            Growth::Linear { slope, cap } => 1.0 + slope * t.min(cap),
            Growth::Step { at, factor } => {
                if t >= at {
                    factor
                } else {
                    1.0
                }
            }
            Growth::Saturating { rate, limit } => 1.0 + (limit - 1.0) * (1.0 - (-rate * t).exp()),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Growth::Constant => Ok(()),
            Growth::Linear { slope, cap } => {
                if !(slope >= 0.0) || !cap.is_finite() || cap < 0.0 {
                    Err(out_of_range("linear growth slope/cap", slope, "slope >= 0, finite cap >= 0"))
                } else {
                    Ok(())
                }
            }
            Growth::Step { factor, .. } => {
                if !(factor >= 1.0) || !factor.is_finite() {
                    Err(out_of_range("step factor", factor, "[1, inf)"))
                } else {
                    Ok(())
                }
            }
            Growth::Saturating { rate, limit } => {
                if !(rate >= 0.0) || !(limit >= 1.0) || !limit.is_finite() {
                    Err(out_of_range("saturating limit", limit, "rate >= 0, finite limit >= 1"))
                } else {
                    Ok(())
                }
            }
        }
    }

    fn breakpoint(&self) -> Option<f64> {
        match *self {
            Growth::Step { at, .. } => Some(at),
            Growth::Linear { cap, .. } => Some(cap),
            _ => None,
        }
    }
}

/// Exponent field `h_t(e)` of a perturbative schedule `pi_t = pi_0 e^{h_t}`.
#[derive(Clone)]
pub enum ExponentField {
    Zero,
    /// `amplitude * sin(log(1 + t) + phase_e)`, phases default to zero.
    SinLog {
        amplitude: f64,
        phases: Option<Vec<f64>>,
    },
    /// `slope * t`.
    Linear { slope: f64 },
    Custom(Arc<dyn Fn(f64, usize) -> f64 + Send + Sync>),
}

impl fmt::Debug for ExponentField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExponentField::Zero => write!(f, "Zero"),
            ExponentField::SinLog { amplitude, phases } => f
                .debug_struct("SinLog")
                .field("amplitude", amplitude)
                .field("phases", phases)
                .finish(),
            ExponentField::Linear { slope } => f.debug_struct("Linear").field("slope", slope).finish(),
            ExponentField::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl ExponentField {
    pub fn value(&self, t: f64, e: usize) -> f64 {
        match self {
            ExponentField::Zero => 0.0,
            ExponentField::SinLog { amplitude, phases } => {
                let phase = phases.as_ref().map_or(0.0, |p| p[e]);
                amplitude * ((1.0 + t).ln() + phase).sin()
            }
            ExponentField::Linear { slope } => slope * t,
            ExponentField::Custom(f) => f(t, e),
        }
    }

    fn describe(&self) -> Value {
        match self {
            ExponentField::Zero => json!({"type": "zero"}),
            ExponentField::SinLog { amplitude, phases } => {
                json!({"type": "sin_log", "amplitude": amplitude, "phases": phases})
            }
            ExponentField::Linear { slope } => json!({"type": "linear", "slope": slope}),
            ExponentField::Custom(_) => json!({"type": "custom"}),
        }
    }
}

/// Caps for `sup |h_t|` and `sup (t+1)|d/dt h_t|` accepted as "bounded".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationBounds {
    pub sup_h: f64,
    pub sup_weighted_derivative: f64,
}

impl Default for PerturbationBounds {
    fn default() -> Self {
        Self {
            sup_h: 1.0,
            sup_weighted_derivative: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
enum Law {
    Static { weights: Vec<f64> },
    Monotone { base: Vec<f64>, growth: Vec<Growth> },
    Perturbative { base: Vec<f64>, field: ExponentField },
    OscillatingZ { eta: f64, delta: Vec<f64>, origin: usize },
    OscillatingHalfLine { eta: f64, eps: f64 },
    Tabulated { times: Vec<f64>, values: Vec<Vec<f64>> },
    Rescaled { inner: Box<ConductanceSchedule>, log_shift: Vec<f64> },
}

/// Time-varying symmetric edge conductances `pi_t(x, y)`.
#[derive(Debug, Clone)]
pub struct ConductanceSchedule {
    graph: Arc<Graph>,
    kind: ScheduleKind,
    time_mode: TimeMode,
    horizon: f64,
    law: Law,
    breakpoints: Vec<f64>,
}

fn sign(k: i64) -> f64 {
    if k.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

impl ConductanceSchedule {
    fn build(
        graph: Arc<Graph>,
        kind: ScheduleKind,
        time_mode: TimeMode,
        horizon: f64,
        law: Law,
        mut breakpoints: Vec<f64>,
    ) -> Result<Self> {
        if !(horizon >= 0.0) || !horizon.is_finite() {
            return Err(out_of_range("horizon", horizon, "[0, inf)"));
        }
        if time_mode == TimeMode::Discrete && horizon.fract() != 0.0 {
            return Err(out_of_range("horizon", horizon, "integer for discrete schedules"));
        }
        breakpoints.retain(|&b| b > 0.0 && b < horizon);
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        let s = Self {
            graph,
            kind,
            time_mode,
            horizon,
            law,
            breakpoints,
        };
        s.check_positive()?;
        Ok(s)
    }

    fn check_positive(&self) -> Result<()> {
        for t in self.grid() {
            for e in 0..self.graph.edge_count() {
                let w = self.edge_weight(t, e);
                if !(w > 0.0) || !w.is_finite() {
                    let (a, b) = self.graph.edges()[e];
                    return Err(out_of_range(
                        &format!("conductance of edge ({a},{b}) at t={t}"),
                        w,
                        "(0, inf)",
                    ));
                }
            }
        }
        Ok(())
    }

    /// Constant conductances: `edge_weight` on proper edges, `loop_weight` on loops.
    pub fn static_uniform(
        graph: Arc<Graph>,
        edge_weight: f64,
        loop_weight: f64,
        time_mode: TimeMode,
        horizon: f64,
    ) -> Result<Self> {
        let weights = graph
            .edges()
            .iter()
            .map(|&(a, b)| if a == b { loop_weight } else { edge_weight })
            .collect();
        Self::static_weights(graph, weights, time_mode, horizon)
    }

    pub fn static_weights(
        graph: Arc<Graph>,
        weights: Vec<f64>,
        time_mode: TimeMode,
        horizon: f64,
    ) -> Result<Self> {
        if weights.len() != graph.edge_count() {
            return Err(Error::InvalidConfig(format!(
                "{} weights for {} edges",
                weights.len(),
                graph.edge_count()
            )));
        }
        Self::build(graph, ScheduleKind::Static, time_mode, horizon, Law::Static { weights }, vec![])
    }

    /// `pi_t(e) = base[e] * growth[e](t)`; vertex conductances are verified
    /// nondecreasing on the grid.
    pub fn monotone(
        graph: Arc<Graph>,
        base: Vec<f64>,
        growth: Vec<Growth>,
        time_mode: TimeMode,
        horizon: f64,
    ) -> Result<Self> {
        if base.len() != graph.edge_count() || growth.len() != graph.edge_count() {
            return Err(Error::InvalidConfig("base/growth length must match edge count".into()));
        }
        for g in &growth {
            g.validate()?;
        }
        let breaks = growth.iter().filter_map(Growth::breakpoint).collect();
        let s = Self::build(
            graph,
            ScheduleKind::MonotoneIncreasing,
            time_mode,
            horizon,
            Law::Monotone { base, growth },
            breaks,
        )?;
        s.verify_monotone()?;
        Ok(s)
    }

    /// Perturbative schedule `pi_t(e) = base[e] e^{h_t(e)}` with a grid check
    /// that `h` and `(t+1) dh/dt` stay within `bounds`.
    pub fn perturbative(
        graph: Arc<Graph>,
        base: Vec<f64>,
        field: ExponentField,
        bounds: PerturbationBounds,
        time_mode: TimeMode,
        horizon: f64,
    ) -> Result<Self> {
        if base.len() != graph.edge_count() {
            return Err(Error::InvalidConfig("base length must match edge count".into()));
        }
        if let ExponentField::SinLog { phases: Some(p), .. } = &field {
            if p.len() != graph.edge_count() {
                return Err(Error::InvalidConfig("one phase per edge required".into()));
            }
        }
        let (sup_h, sup_d) = perturbation_sups(&field, graph.edge_count(), time_mode, horizon);
        if sup_h > bounds.sup_h {
            return Err(Error::UnboundedPerturbation {
                quantity: "sup |h_t|".into(),
                value: sup_h,
                bound: bounds.sup_h,
            });
        }
        if sup_d > bounds.sup_weighted_derivative {
            return Err(Error::UnboundedPerturbation {
                quantity: "sup (t+1)|dh_t/dt|".into(),
                value: sup_d,
                bound: bounds.sup_weighted_derivative,
            });
        }
        Self::build(
            graph,
            ScheduleKind::Perturbative,
            time_mode,
            horizon,
            Law::Perturbative { base, field },
            vec![],
        )
    }

    /// Oscillating conductances on a window of the integers:
    /// `pi_n(x,x+1) = 1 + (-1)^{n+x} eta`, `pi_n(x,x) = 1 - (-1)^{n+x} delta_n`.
    /// `delta` holds `delta_0 = 0, delta_1, ..., delta_{n_max}`.
    pub fn counterexample_z(n_max: usize, eta: f64, delta: &[f64]) -> Result<Self> {
        if !(eta > 0.0 && eta < 0.5) {
            return Err(out_of_range("eta", eta, "(0, 1/2)"));
        }
        if delta.len() < n_max + 1 {
            return Err(Error::InvalidConfig(format!(
                "need delta_0..delta_{n_max}, got {} values",
                delta.len()
            )));
        }
        if delta[0] != 0.0 {
            return Err(out_of_range("delta_0", delta[0], "{0}"));
        }
        for (n, &d) in delta.iter().enumerate().take(n_max + 1).skip(1) {
            if !(d > 0.0 && d < 0.5) {
                return Err(out_of_range(&format!("delta_{n}"), d, "(0, 1/2)"));
            }
        }
        let half = n_max + 1;
        let graph = Arc::new(Graph::segment_z(half)?);
        Self::build(
            graph,
            ScheduleKind::OscillatingZ,
            TimeMode::Discrete,
            n_max as f64,
            Law::OscillatingZ {
                eta,
                delta: delta[..=n_max].to_vec(),
                origin: half,
            },
            vec![],
        )
    }

    /// Same conductances with `delta_n = delta` at every `n`, including `n = 0`.
    /// Allows `delta = 0`, the static-reversing comparison chain.
    pub fn counterexample_z_constant(n_max: usize, eta: f64, delta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 0.5) {
            return Err(out_of_range("eta", eta, "(0, 1/2)"));
        }
        if !(delta >= 0.0 && delta < 0.5) {
            return Err(out_of_range("delta", delta, "[0, 1/2)"));
        }
        let half = n_max + 1;
        let graph = Arc::new(Graph::segment_z(half)?);
        Self::build(
            graph,
            ScheduleKind::OscillatingZ,
            TimeMode::Discrete,
            n_max as f64,
            Law::OscillatingZ {
                eta,
                delta: vec![delta; n_max + 1],
                origin: half,
            },
            vec![],
        )
    }

    /// Drift example on a window of the half-line:
    /// `pi_n(x,x+1) = 1 + (-1)^{n+x} eta`, `pi_n(x,x) = 1 + eps 1{n+x odd}` for
    /// `x > 0` and `pi_n(0,0) = pi_n(2,2) pi_n(0,1) / 2`.
    pub fn drift_half_line(n_max: usize, eta: f64, eps: f64) -> Result<Self> {
        if !(eta > 0.0 && eta < 1.0) {
            return Err(out_of_range("eta", eta, "(0, 1)"));
        }
        if !(eps >= 0.0) || !eps.is_finite() {
            return Err(out_of_range("eps", eps, "[0, inf)"));
        }
        let graph = Arc::new(Graph::half_line(2 * n_max + 3)?);
        Self::build(
            graph,
            ScheduleKind::OscillatingHalfLine,
            TimeMode::Discrete,
            n_max as f64,
            Law::OscillatingHalfLine { eta, eps },
            vec![],
        )
    }

    /// Piecewise-constant table: `values[k][e]` holds from `times[k]` until
    /// the next time. `edges` lists graph edges in the column order of `values`.
    pub fn tabulated(
        graph: Arc<Graph>,
        times: Vec<f64>,
        edges: &[(usize, usize)],
        values: Vec<Vec<f64>>,
        time_mode: TimeMode,
        horizon: f64,
    ) -> Result<Self> {
        if times.is_empty() || times[0] != 0.0 {
            return Err(Error::InvalidConfig("tabulated times must start at 0".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("tabulated times must increase".into()));
        }
        if values.len() != times.len() {
            return Err(Error::InvalidConfig("one value row per time required".into()));
        }
        if edges.len() != graph.edge_count() {
            return Err(Error::InvalidConfig(format!(
                "table lists {} edges, graph has {}",
                edges.len(),
                graph.edge_count()
            )));
        }
        let mut column_of = vec![usize::MAX; graph.edge_count()];
        for (c, &(a, b)) in edges.iter().enumerate() {
            let id = graph
                .edge_id(a, b)
                .ok_or_else(|| Error::InvalidConfig(format!("({a},{b}) is not an edge")))?;
            column_of[id] = c;
        }
        if column_of.contains(&usize::MAX) {
            return Err(Error::InvalidConfig("table misses a graph edge".into()));
        }
        let mut reordered = Vec::with_capacity(values.len());
        for row in &values {
            if row.len() != edges.len() {
                return Err(Error::InvalidConfig("value row length != edge count".into()));
            }
            reordered.push(column_of.iter().map(|&c| row[c]).collect());
        }
        let breaks = times.clone();
        Self::build(
            graph,
            ScheduleKind::Tabulated,
            time_mode,
            horizon,
            Law::Tabulated {
                times,
                values: reordered,
            },
            breaks,
        )
    }

    /// `pi_hat_u(e) = e^{log_shift[u]} pi_u(e)` on integer times; rejected
    /// unless vertex conductances become nondecreasing.
    pub(crate) fn rescaled(inner: &ConductanceSchedule, log_shift: Vec<f64>) -> Result<Self> {
        let horizon = inner.horizon;
        if log_shift.len() < horizon.floor() as usize + 1 {
            return Err(Error::InvalidConfig("log shift table shorter than horizon".into()));
        }
        Self::build(
            inner.graph.clone(),
            ScheduleKind::MonotoneIncreasing,
            TimeMode::Discrete,
            horizon.floor(),
            Law::Rescaled {
                inner: Box::new(inner.clone()),
                log_shift,
            },
            vec![],
        )
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn graph_arc(&self) -> Arc<Graph> {
        self.graph.clone()
    }

    pub fn kind(&self) -> ScheduleKind {
        self.kind
    }

    pub fn time_mode(&self) -> TimeMode {
        self.time_mode
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.vertex_count()
    }

    /// Times where `t -> pi_t` may jump (strictly inside the horizon).
    pub fn breakpoints(&self) -> Vec<f64> {
        match self.time_mode {
            TimeMode::Discrete => (1..self.horizon as usize).map(|k| k as f64).collect(),
            TimeMode::Continuous => self.breakpoints.clone(),
        }
    }

    /// Scan grid: all integers for discrete schedules; breakpoints plus a
    /// uniform grid of step [`CONTINUOUS_GRID_STEP`] otherwise.
    pub fn grid(&self) -> Vec<f64> {
        match self.time_mode {
            TimeMode::Discrete => (0..=self.horizon as usize).map(|k| k as f64).collect(),
            TimeMode::Continuous => {
                let steps = (self.horizon / CONTINUOUS_GRID_STEP).ceil() as usize;
                let mut g: Vec<f64> = (0..=steps)
                    .map(|k| (k as f64 * CONTINUOUS_GRID_STEP).min(self.horizon))
                    .collect();
                g.extend(&self.breakpoints);
                g.sort_by(f64::total_cmp);
                g.dedup();
                g
            }
        }
    }

    pub fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t <= self.horizon) {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    fn law_time(&self, t: f64) -> f64 {
        match self.time_mode {
            TimeMode::Discrete => t.floor(),
            TimeMode::Continuous => t,
        }
    }

    /// Conductance of edge `e` at time `t` (no range check).
    pub fn edge_weight(&self, t: f64, e: usize) -> f64 {
        let t = self.law_time(t);
        let (a, b) = self.graph.edges()[e];
        match &self.law {
            Law::Static { weights } => weights[e],
            Law::Monotone { base, growth } => base[e] * growth[e].value(t),
            Law::Perturbative { base, field } => base[e] * field.value(t, e).exp(),
            Law::OscillatingZ { eta, delta, origin } => {
                let n = t as usize;
                let c = a as i64 - *origin as i64;
                let s = sign(n as i64 + c);
                if a == b {
                    1.0 - s * delta[n.min(delta.len() - 1)]
                } else {
                    1.0 + s * eta
                }
            }
            Law::OscillatingHalfLine { eta, eps } => {
                let n = t as i64;
                let odd = |k: i64| if k.rem_euclid(2) == 1 { 1.0 } else { 0.0 };
                if a != b {
                    1.0 + sign(n + a as i64) * eta
                } else if a > 0 {
                    1.0 + eps * odd(n + a as i64)
                } else {
                    let loop2 = 1.0 + eps * odd(n + 2);
                    let edge01 = 1.0 + sign(n) * eta;
                    loop2 * edge01 / 2.0
                }
            }
            Law::Tabulated { times, values } => {
                let k = times.partition_point(|&s| s <= t).saturating_sub(1);
                values[k][e]
            }
            Law::Rescaled { inner, log_shift } => {
                let u = t as usize;
                inner.edge_weight(t, e) * log_shift[u].exp()
            }
        }
    }

    pub fn edge_weights(&self, t: f64) -> Result<Vec<f64>> {
        self.check_time(t)?;
        Ok((0..self.graph.edge_count())
            .map(|e| self.edge_weight(t, e))
            .collect())
    }

    /// `pi_t(x, y)`, zero off the edge set.
    pub fn conductance(&self, t: f64, x: usize, y: usize) -> Result<f64> {
        self.check_time(t)?;
        Ok(self
            .graph
            .edge_id(x, y)
            .map_or(0.0, |e| self.edge_weight(t, e)))
    }

    /// Vertex conductances `pi_t(x) = sum_y pi_t(x, y)` (loops counted once).
    pub fn vertex_conductance(&self, t: f64) -> Result<Vec<f64>> {
        self.check_time(t)?;
        Ok(self.vertex_conductance_unchecked(t))
    }

    pub(crate) fn vertex_conductance_unchecked(&self, t: f64) -> Vec<f64> {
        let g = &self.graph;
        (0..g.vertex_count())
            .map(|x| {
                g.incident(x)
                    .iter()
                    .map(|&(_, e)| self.edge_weight(t, e))
                    .sum()
            })
            .collect()
    }

    /// Verify `t -> pi_t(x)` is nondecreasing on the grid at every vertex.
    pub fn verify_monotone(&self) -> Result<()> {
        let grid = self.grid();
        let mut prev = self.vertex_conductance_unchecked(grid[0]);
        for w in grid.windows(2) {
            let cur = self.vertex_conductance_unchecked(w[1]);
            for x in 0..cur.len() {
                if cur[x] < prev[x] * (1.0 - 1e-14) {
                    return Err(Error::NotMonotone {
                        vertex: x,
                        t0: w[0],
                        t1: w[1],
                    });
                }
            }
            prev = cur;
        }
        Ok(())
    }

    /// Whether vertex conductances are nondecreasing on the grid.
    pub fn is_monotone(&self) -> bool {
        self.verify_monotone().is_ok()
    }

    /// Structured description for reports.
    pub fn describe(&self) -> Value {
        let law = match &self.law {
            Law::Static { .. } => json!({"law": "static"}),
            Law::Monotone { growth, .. } => json!({"law": "monotone", "growth": growth}),
            Law::Perturbative { field, .. } => json!({"law": "perturbative", "field": field.describe()}),
            Law::OscillatingZ { eta, delta, .. } => {
                json!({"law": "oscillating_z", "eta": eta, "delta_1": delta.get(1), "n_max": delta.len() - 1})
            }
            Law::OscillatingHalfLine { eta, eps } => {
                json!({"law": "oscillating_half_line", "eta": eta, "eps": eps})
            }
            Law::Tabulated { times, .. } => json!({"law": "tabulated", "times": times.len()}),
            Law::Rescaled { inner, .. } => json!({"law": "rescaled", "inner": inner.describe()}),
        };
        json!({
            "graph": self.graph.kind(),
            "vertices": self.graph.vertex_count(),
            "edges": self.graph.edge_count(),
            "kind": self.kind,
            "time_mode": self.time_mode,
            "horizon": self.horizon,
            "detail": law,
        })
    }
}

fn perturbation_sups(field: &ExponentField, edges: usize, mode: TimeMode, horizon: f64) -> (f64, f64) {
    let mut sup_h: f64 = 0.0;
    let mut sup_d: f64 = 0.0;
    match mode {
        TimeMode::Discrete => {
            let n = horizon as usize;
            for k in 0..=n {
                let t = k as f64;
                for e in 0..edges {
                    let h = field.value(t, e);
                    sup_h = sup_h.max(h.abs());
                    if k < n {
                        let dh = field.value(t + 1.0, e) - h;
                        sup_d = sup_d.max((t + 1.0) * dh.abs());
                    }
                }
            }
        }
        TimeMode::Continuous => {
            let step = 1.0 / 16.0;
            let steps = (horizon / step).ceil() as usize;
            let eps = 1e-5;
            for k in 0..=steps {
                let t = (k as f64 * step).min(horizon);
                for e in 0..edges {
                    sup_h = sup_h.max(field.value(t, e).abs());
                    let lo = (t - eps).max(0.0);
                    let hi = t + eps;
                    let dh = (field.value(hi, e) - field.value(lo, e)) / (hi - lo);
                    sup_d = sup_d.max((t + 1.0) * dh.abs());
                }
            }
        }
    }
    (sup_h, sup_d)
}

/// `delta_n = min(0.49, n^{iota - 1/2})`, `delta_0 = 0`.
pub fn counterexample_deltas(n_max: usize, iota: f64) -> Vec<f64> {
    (0..=n_max)
        .map(|n| {
            if n == 0 {
                0.0
            } else {
                (n as f64).powf(iota - 0.5).min(0.49)
            }
        })
        .collect()
}
