use crate::error::{out_of_range, Error, Result};
use serde::Serialize;
use std::collections::{HashMap, VecDeque};

/// Shape tag; decides closed-form distances and signed coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    Path,
    Cycle,
    Torus2d { width: usize, height: usize },
    Tree { arity: usize, depth: usize },
    Star,
    Custom,
    /// Finite window of the integers, vertex `i` sits at `i - origin`.
    SegmentZ { origin: usize },
    /// Finite window of the non-negative integers.
    HalfLine,
    /// Long-range edges on top of a base metric.
    Nonlocal,
}

#[derive(Debug, Clone)]
enum Metric {
    Line,
    Ring(usize),
    Torus(usize, usize),
    Table(Vec<u32>),
}

/// Finite connected graph with optional self-loops and exact hop distances.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    kind: GraphKind,
    edges: Vec<(usize, usize)>,
    edge_index: HashMap<(usize, usize), usize>,
    incident: Vec<Vec<(usize, usize)>>,
    metric: Metric,
    boundary: Vec<usize>,
}

/// `{z : d(center, z) <= radius}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ball {
    pub center: usize,
    pub radius: f64,
    pub members: Vec<usize>,
}

impl Graph {
    fn assemble(
        n: usize,
        kind: GraphKind,
        raw_edges: Vec<(usize, usize)>,
        metric: Option<Metric>,
        boundary: Vec<usize>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyGraph);
        }
        let mut edges = Vec::new();
        let mut edge_index = HashMap::new();
        let mut incident = vec![Vec::new(); n];
        for (a, b) in raw_edges {
            if a >= n || b >= n {
                return Err(Error::InvalidConfig(format!(
                    "edge ({a}, {b}) references a vertex >= {n}"
                )));
            }
            let key = (a.min(b), a.max(b));
            if edge_index.contains_key(&key) {
                continue;
            }
            let id = edges.len();
            edges.push(key);
            edge_index.insert(key, id);
            incident[key.0].push((key.1, id));
            if key.0 != key.1 {
                incident[key.1].push((key.0, id));
            }
        }
        for list in &mut incident {
            list.sort_unstable();
        }
        let mut g = Graph {
            n,
            kind,
            edges,
            edge_index,
            incident,
            metric: Metric::Line,
            boundary,
        };
        let hops = g.bfs(0);
        if let Some(v) = hops.iter().position(|&d| d == u32::MAX) {
            return Err(Error::DisconnectedGraph { vertex: v });
        }
        g.metric = match metric {
            Some(m) => m,
            None => Metric::Table(g.all_pairs_bfs()),
        };
        Ok(g)
    }

    pub fn path(n: usize) -> Result<Self> {
        let edges = (1..n).map(|i| (i - 1, i)).collect();
        Self::assemble(n, GraphKind::Path, edges, Some(Metric::Line), vec![])
    }

    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(out_of_range("cycle size", n as f64, "n >= 3"));
        }
        let edges = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::assemble(n, GraphKind::Cycle, edges, Some(Metric::Ring(n)), vec![])
    }

    /// `width x height` discrete torus; vertex `(i, j)` has index `i * height + j`.
    pub fn torus2d(width: usize, height: usize) -> Result<Self> {
        if width < 3 || height < 3 {
            return Err(out_of_range(
                "torus side",
                width.min(height) as f64,
                "sides >= 3",
            ));
        }
        let idx = |i: usize, j: usize| (i % width) * height + (j % height);
        let mut edges = Vec::new();
        for i in 0..width {
            for j in 0..height {
                edges.push((idx(i, j), idx(i + 1, j)));
                edges.push((idx(i, j), idx(i, j + 1)));
            }
        }
        Self::assemble(
            width * height,
            GraphKind::Torus2d { width, height },
            edges,
            Some(Metric::Torus(width, height)),
            vec![],
        )
    }

    /// Complete `arity`-ary tree of the given depth (root 0, breadth-first labels).
    pub fn tree(arity: usize, depth: usize) -> Result<Self> {
        if arity == 0 {
            return Err(out_of_range("tree arity", 0.0, "arity >= 1"));
        }
        let mut edges = Vec::new();
        let mut level = vec![0usize];
        let mut next_id = 1;
        for _ in 0..depth {
            let mut next = Vec::new();
            for &p in &level {
                for _ in 0..arity {
                    edges.push((p, next_id));
                    next.push(next_id);
                    next_id += 1;
                }
            }
            level = next;
        }
        Self::assemble(next_id, GraphKind::Tree { arity, depth }, edges, None, vec![])
    }

    /// Star with center 0 and `n - 1` leaves.
    pub fn star(n: usize) -> Result<Self> {
        let edges = (1..n).map(|i| (0, i)).collect();
        Self::assemble(n, GraphKind::Star, edges, None, vec![])
    }

    pub fn custom(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        Self::assemble(n, GraphKind::Custom, edges.to_vec(), None, vec![])
    }

    /// Window `{-half, ..., half}` of the integers with a self-loop at every
    /// vertex. The two end vertices form the truncation boundary.
    pub fn segment_z(half: usize) -> Result<Self> {
        let n = 2 * half + 1;
        let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        edges.extend((0..n).map(|i| (i, i)));
        Self::assemble(
            n,
            GraphKind::SegmentZ { origin: half },
            edges,
            Some(Metric::Line),
            vec![0, n - 1],
        )
    }

    /// Window `{0, ..., len - 1}` of the half-line with self-loops; the far end
    /// is the truncation boundary.
    pub fn half_line(len: usize) -> Result<Self> {
        if len < 3 {
            return Err(out_of_range("half-line length", len as f64, ">= 3"));
        }
        let mut edges: Vec<(usize, usize)> = (1..len).map(|i| (i - 1, i)).collect();
        edges.extend((0..len).map(|i| (i, i)));
        Self::assemble(len, GraphKind::HalfLine, edges, Some(Metric::Line), vec![len - 1])
    }

    /// Edges joining every pair within base distance `range` (plus loops),
    /// keeping the base graph's metric.
    pub fn nonlocal(base: &Graph, range: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for x in 0..base.n {
            for y in x..base.n {
                if base.distance(x, y) <= range {
                    edges.push((x, y));
                }
            }
        }
        Self::assemble(
            base.n,
            GraphKind::Nonlocal,
            edges,
            Some(base.metric.clone()),
            base.boundary.clone(),
        )
    }

    /// Same graph with a self-loop added at every vertex.
    pub fn with_loops(&self) -> Result<Self> {
        let mut edges = self.edges.clone();
        edges.extend((0..self.n).map(|i| (i, i)));
        Self::assemble(
            self.n,
            self.kind.clone(),
            edges,
            Some(self.metric.clone()),
            self.boundary.clone(),
        )
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &GraphKind {
        &self.kind
    }

    /// Edge list, each `(a, b)` with `a <= b`; loops appear as `(x, x)`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_id(&self, x: usize, y: usize) -> Option<usize> {
        self.edge_index.get(&(x.min(y), x.max(y))).copied()
    }

    /// `(neighbor, edge id)` pairs at `x`, including the loop when present.
    pub fn incident(&self, x: usize) -> &[(usize, usize)] {
        &self.incident[x]
    }

    pub fn has_loop(&self, x: usize) -> bool {
        self.edge_index.contains_key(&(x, x))
    }

    pub fn degree(&self, x: usize) -> usize {
        self.incident[x].iter().filter(|&&(y, _)| y != x).count()
    }

    pub fn truncation_boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_truncated(&self) -> bool {
        !self.boundary.is_empty()
    }

    /// Hop distance.
    pub fn distance(&self, x: usize, y: usize) -> usize {
        match &self.metric {
            Metric::Line => x.abs_diff(y),
            Metric::Ring(n) => {
                let d = x.abs_diff(y);
                d.min(n - d)
            }
            Metric::Torus(_, h) => {
                let (xi, xj) = (x / h, x % h);
                let (yi, yj) = (y / h, y % h);
                let w = self.n / h;
                let di = xi.abs_diff(yi);
                let dj = xj.abs_diff(yj);
                di.min(w - di) + dj.min(h - dj)
            }
            Metric::Table(t) => t[x * self.n + y] as usize,
        }
    }

    /// Distance from `x` to the truncation boundary (`usize::MAX` if none).
    pub fn boundary_distance(&self, x: usize) -> usize {
        self.boundary
            .iter()
            .map(|&b| self.distance(x, b))
            .min()
            .unwrap_or(usize::MAX)
    }

    pub fn diameter(&self) -> usize {
        match &self.metric {
            Metric::Line => self.n - 1,
            Metric::Ring(n) => n / 2,
            Metric::Torus(w, h) => w / 2 + h / 2,
            Metric::Table(t) => t.iter().copied().max().unwrap_or(0) as usize,
        }
    }

    pub fn ball(&self, center: usize, radius: f64) -> Ball {
        let members = (0..self.n)
            .filter(|&z| (self.distance(center, z) as f64) <= radius)
            .collect();
        Ball {
            center,
            radius,
            members,
        }
    }

    /// Integer coordinate on line-like graphs.
    pub fn coordinate(&self, x: usize) -> Option<i64> {
        match self.kind {
            GraphKind::Path | GraphKind::HalfLine => Some(x as i64),
            GraphKind::SegmentZ { origin } => Some(x as i64 - origin as i64),
            GraphKind::Cycle => Some(x as i64),
            _ => None,
        }
    }

    /// Signed displacement of a single step on line-like graphs and cycles.
    pub fn signed_step(&self, x: usize, y: usize) -> Option<i64> {
        match self.kind {
            GraphKind::Cycle => {
                let n = self.n as i64;
                let raw = (y as i64 - x as i64).rem_euclid(n);
                Some(if raw > n / 2 { raw - n } else { raw })
            }
            _ => Some(self.coordinate(y)? - self.coordinate(x)?),
        }
    }

    /// Hop counts from `src` over non-loop edges (`u32::MAX` if unreachable).
    pub fn bfs(&self, src: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.n];
        dist[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(x) = queue.pop_front() {
            for &(y, _) in &self.incident[x] {
                if dist[y] == u32::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    fn all_pairs_bfs(&self) -> Vec<u32> {
        let mut table = Vec::with_capacity(self.n * self.n);
        for x in 0..self.n {
            table.extend(self.bfs(x));
        }
        table
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_shapes() {
        let p = Graph::path(2).unwrap();
        assert_eq!(p.edge_count(), 1);
        assert_eq!(p.distance(0, 1), 1);
        let c = Graph::cycle(6).unwrap();
        assert_eq!(c.distance(0, 3), 3);
        assert_eq!(c.diameter(), 3);
    }

    #[test]
    fn torus_is_four_regular() {
        let t = Graph::torus2d(4, 4).unwrap();
        assert_eq!(t.vertex_count(), 16);
        assert!((0..16).all(|x| t.degree(x) == 4));
        for x in 0..16 {
            let hops = t.bfs(x);
            for y in 0..16 {
                assert_eq!(hops[y] as usize, t.distance(x, y));
            }
        }
    }

    #[test]
    fn disconnected_and_empty_rejected() {
        assert!(matches!(Graph::custom(3, &[(0, 1)]), Err(Error::DisconnectedGraph { vertex: 2 })));
        assert!(matches!(Graph::custom(0, &[]), Err(Error::EmptyGraph)));
    }

    #[test]
    fn loops_do_not_change_distances() {
        let g = Graph::cycle(5).unwrap().with_loops().unwrap();
        assert!(g.has_loop(3));
        assert_eq!(g.degree(3), 2);
        assert_eq!(g.distance(0, 2), 2);
    }

    #[test]
    fn segment_coordinates() {
        let s = Graph::segment_z(3).unwrap();
        assert_eq!(s.coordinate(0), Some(-3));
        assert_eq!(s.coordinate(3), Some(0));
        assert_eq!(s.boundary_distance(3), 3);
        let c = Graph::cycle(8).unwrap();
        assert_eq!(c.signed_step(0, 7), Some(-1));
        assert_eq!(c.signed_step(7, 0), Some(1));
    }
}
