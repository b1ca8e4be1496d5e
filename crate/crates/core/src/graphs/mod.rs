//! Graphs, distances and time-varying conductance schedules.

mod config;
mod graph;
mod schedule;

pub use config::{FieldSpec, GraphShape, GraphSpec, LawSpec, ScheduleFile, ScheduleSpec};
pub use graph::{Ball, Graph, GraphKind};
pub use schedule::{
    counterexample_deltas, ConductanceSchedule, ExponentField, Growth, PerturbationBounds, ScheduleKind,
    TimeMode, CONTINUOUS_GRID_STEP,
};
