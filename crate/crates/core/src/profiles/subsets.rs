use crate::error::{Error, Result};

/// Largest number of connected subsets the exact mode will evaluate.
pub const EXACT_SUBSET_CAP: usize = 1 << 21;
/// Graphs up to this size are enumerated by bitmask.
pub const MASK_LIMIT: usize = 18;

/// Flat arena of vertex sets.
#[derive(Debug, Clone, Default)]
pub struct SetArena {
    offsets: Vec<usize>,
    items: Vec<u32>,
}

impl SetArena {
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn push(&mut self, set: impl IntoIterator<Item = usize>) {
        self.offsets.push(self.items.len());
        self.items.extend(set.into_iter().map(|x| x as u32));
    }

    pub fn get(&self, i: usize) -> &[u32] {
        let end = self.offsets.get(i + 1).copied().unwrap_or(self.items.len());
        &self.items[self.offsets[i]..end]
    }
}

fn mask_connected(adj: &[u64], mask: u64) -> bool {
    let start = mask.trailing_zeros() as usize;
    let mut seen = 1u64 << start;
    let mut frontier = seen;
    while frontier != 0 {
        let v = frontier.trailing_zeros() as usize;
        frontier &= frontier - 1;
        let new = adj[v] & mask & !seen;
        seen |= new;
        frontier |= new;
    }
    seen == mask
}

/// All nonempty subsets of `V` connected under `adj`, or `ExactModeTooLarge`
/// once more than `cap` are found.
pub fn connected_subsets(adj: &[Vec<usize>], cap: usize) -> Result<SetArena> {
    let n = adj.len();
    let mut arena = SetArena::default();
    if n <= MASK_LIMIT {
        let bits: Vec<u64> = adj
            .iter()
            .map(|nb| nb.iter().fold(0u64, |m, &y| m | (1 << y)))
            .collect();
        for mask in 1u64..(1u64 << n) {
            if mask_connected(&bits, mask) {
                arena.push((0..n).filter(|&i| mask >> i & 1 == 1));
                if arena.len() > cap {
                    return Err(too_large(n, cap));
                }
            }
        }
        return Ok(arena);
    }
    // Extension-set enumeration: each connected set is produced once, from
    // its smallest vertex.
    for v in 0..n {
        let mut set = vec![v];
        let ext: Vec<usize> = adj[v].iter().copied().filter(|&u| u > v).collect();
        extend(adj, v, &mut set, ext, &mut arena, cap)?;
    }
    Ok(arena)
}

fn too_large(n: usize, cap: usize) -> Error {
    Error::ExactModeTooLarge {
        detail: format!("more than {cap} connected subsets on {n} vertices"),
    }
}

fn extend(
    adj: &[Vec<usize>],
    root: usize,
    set: &mut Vec<usize>,
    mut ext: Vec<usize>,
    arena: &mut SetArena,
    cap: usize,
) -> Result<()> {
    let mut sorted = set.clone();
    sorted.sort_unstable();
    arena.push(sorted);
    if arena.len() > cap {
        return Err(too_large(adj.len(), cap));
    }
    while let Some(w) = ext.pop() {
        let mut next_ext = ext.clone();
        for &u in &adj[w] {
            if u > root
                && !set.contains(&u)
                && !next_ext.contains(&u)
                && !set.iter().any(|&s| adj[s].contains(&u))
            {
                next_ext.push(u);
            }
        }
        set.push(w);
        extend(adj, root, set, next_ext, arena, cap)?;
        set.pop();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle_adj(n: usize) -> Vec<Vec<usize>> {
        (0..n).map(|i| vec![(i + n - 1) % n, (i + 1) % n]).collect()
    }

    #[test]
    fn cycle_counts() {
        // n (n - 1) arcs plus the whole cycle.
        for n in [5usize, 8, 20, 24] {
            let a = connected_subsets(&cycle_adj(n), EXACT_SUBSET_CAP).unwrap();
            assert_eq!(a.len(), n * (n - 1) + 1, "n = {n}");
        }
    }

    #[test]
    fn path_counts() {
        let n = 30;
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|i| {
                let mut v = vec![];
                if i > 0 {
                    v.push(i - 1);
                }
                if i + 1 < n {
                    v.push(i + 1);
                }
                v
            })
            .collect();
        assert_eq!(connected_subsets(&adj, EXACT_SUBSET_CAP).unwrap().len(), n * (n + 1) / 2);
    }

    #[test]
    fn cap_is_enforced() {
        let n = 20;
        let adj: Vec<Vec<usize>> = (0..n).map(|i| (0..n).filter(|&j| j != i).collect()).collect();
        assert!(matches!(connected_subsets(&adj, 1000), Err(Error::ExactModeTooLarge { .. })));
    }
}
