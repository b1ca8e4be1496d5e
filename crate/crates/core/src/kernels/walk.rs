use super::kernel::WalkMode;
use crate::error::{out_of_range, Error, Result};
use crate::graphs::ConductanceSchedule;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

/// Summary of `n_paths` independent walks started at `x0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathSample {
    pub mode: WalkMode,
    pub x0: usize,
    pub t_end: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Terminal-position counts per vertex.
    pub histogram: Vec<u64>,
    pub mean_displacement: f64,
    /// Standard error of `mean_displacement`.
    pub displacement_std_error: f64,
    /// Largest `|displacement|` seen at any time on any path.
    pub max_displacement: i64,
}

/// One sampled trajectory: jump times and visited vertices (first entry is
/// `(0, x0)`). DTRW steps are recorded at every integer time, loops included.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub vertices: Vec<usize>,
    pub displacement: i64,
    pub max_displacement: i64,
}

/// Generator for path `index`: one ChaCha stream per path under a common seed.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn jump(schedule: &ConductanceSchedule, t: f64, x: usize, rng: &mut ChaCha8Rng) -> usize {
    let g = schedule.graph();
    let inc = g.incident(x);
    let total: f64 = inc.iter().map(|&(_, e)| schedule.edge_weight(t, e)).sum();
    let mut u = rng.random::<f64>() * total;
    for &(y, e) in inc {
        u -= schedule.edge_weight(t, e);
        if u < 0.0 {
            return y;
        }
    }
    inc.last().map_or(x, |&(y, _)| y)
}

/// Sample one path; errors with `BoundaryTouched` if it reaches the
/// truncation boundary of a truncated graph.
pub fn sample_trajectory(
    schedule: &ConductanceSchedule,
    mode: WalkMode,
    x0: usize,
    t_end: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Trajectory> {
    schedule.check_time(t_end)?;
    let g = schedule.graph();
    if x0 >= g.vertex_count() {
        return Err(out_of_range("x0", x0 as f64, "a vertex of the graph"));
    }
    let boundary = g.truncation_boundary();
    let mut x = x0;
    let mut times = vec![0.0];
    let mut vertices = vec![x0];
    let mut disp: i64 = 0;
    let mut max_disp: i64 = 0;
    let mut visit = |t: f64, y: usize, x: usize, disp: &mut i64| -> Result<()> {
        if boundary.contains(&y) {
            return Err(Error::BoundaryTouched { vertex: y });
        }
        // Signed on lines and cycles, hop distance from x0 elsewhere.
        *disp = match g.signed_step(x, y) {
            Some(d) => *disp + d,
            None => g.distance(x0, y) as i64,
        };
        max_disp = max_disp.max(disp.abs());
        times.push(t);
        vertices.push(y);
        Ok(())
    };
    match mode {
        WalkMode::Dtrw => {
            for k in 1..=(t_end.floor() as usize) {
                let y = jump(schedule, k as f64, x, rng);
                visit(k as f64, y, x, &mut disp)?;
                x = y;
            }
        }
        WalkMode::Csrw => {
            let mut t = 0.0;
            loop {
                t += -(1.0 - rng.random::<f64>()).ln();
                if t > t_end {
                    break;
                }
                let y = jump(schedule, t, x, rng);
                visit(t, y, x, &mut disp)?;
                x = y;
            }
        }
    }
    Ok(Trajectory {
        times,
        vertices,
        displacement: disp,
        max_displacement: max_disp,
    })
}

/// Monte Carlo over `n_paths` walks; path `i` uses stream `i` of `seed`, so
/// results do not depend on the thread count.
pub fn sample_paths(
    schedule: &ConductanceSchedule,
    mode: WalkMode,
    x0: usize,
    t_end: f64,
    n_paths: usize,
    seed: u64,
) -> Result<PathSample> {
    if n_paths == 0 {
        return Err(out_of_range("n_paths", 0.0, ">= 1"));
    }
    let results: Vec<Result<(usize, i64, i64)>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(seed, i as u64);
            let tr = sample_trajectory(schedule, mode, x0, t_end, &mut rng)?;
            Ok((*tr.vertices.last().unwrap(), tr.displacement, tr.max_displacement))
        })
        .collect();
    let mut histogram = vec![0u64; schedule.vertex_count()];
    let (mut sum, mut sum_sq, mut max_disp) = (0.0, 0.0, 0i64);
    for r in results {
        let (end, d, m) = r?;
        histogram[end] += 1;
        sum += d as f64;
        sum_sq += (d as f64).powi(2);
        max_disp = max_disp.max(m);
    }
    let n = n_paths as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    Ok(PathSample {
        mode,
        x0,
        t_end,
        n_paths,
        seed,
        histogram,
        mean_displacement: mean,
        displacement_std_error: (var / n).sqrt(),
        max_displacement: max_disp,
    })
}
