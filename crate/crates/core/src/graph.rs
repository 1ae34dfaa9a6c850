//! η-threshold adjacency graphs and their connected components.
//!
//! Two nodes share an edge when their geodesic angle is strictly below η.
//! Component ids are contiguous and assigned in order of each component's
//! smallest member, so partitions compare with `==`.

use std::collections::{HashSet, VecDeque};

use rayon::prelude::*;

use crate::error::{Result, ScaleError};
use crate::preprocess::{clamped_dot, AngleMatrix, SpherePoint};

/// Connected components of the η-graph over the kept samples.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleGraph {
    /// Original sample indices of the nodes, ascending.
    pub node_ids: Vec<usize>,
    pub eta: f64,
    /// Component id of each node (parallel to `node_ids`).
    pub component_of: Vec<usize>,
    pub component_count: usize,
}

impl AngleGraph {
    /// Sample indices grouped by component id, each group ascending.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.component_count];
        for (&node, &c) in self.node_ids.iter().zip(&self.component_of) {
            groups[c].push(node);
        }
        groups
    }

    pub fn component_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.component_count];
        for &c in &self.component_of {
            sizes[c] += 1;
        }
        sizes
    }

    /// Partition as sorted groups of sample indices; independent of numbering.
    pub fn partition(&self) -> Vec<Vec<usize>> {
        let mut groups = self.components();
        groups.sort();
        groups
    }
}

/// Disjoint-set forest with path compression and union by size.
#[derive(Clone, Debug)]
pub struct DisjointSet {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        while self.parent[x] != root {
            let next = self.parent[x];
            self.parent[x] = root;
            x = next;
        }
        root
    }

    /// Returns true when the two sets were distinct.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }

    fn roots(&mut self) -> Vec<usize> {
        (0..self.parent.len()).map(|i| self.find(i)).collect()
    }

    /// Contiguous ids ordered by smallest member.
    fn labels(&mut self) -> (Vec<usize>, usize) {
        let roots = self.roots();
        let mut id_of_root = vec![usize::MAX; roots.len()];
        let mut next = 0;
        let labels = roots
            .iter()
            .map(|&r| {
                if id_of_root[r] == usize::MAX {
                    id_of_root[r] = next;
                    next += 1;
                }
                id_of_root[r]
            })
            .collect();
        (labels, next)
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= std::f64::consts::PI) {
        return Err(ScaleError::param(format!("eta must lie in (0, π], got {eta}")));
    }
    Ok(())
}

fn kept_nodes(kept_mask: &[bool]) -> Result<Vec<usize>> {
    let nodes: Vec<usize> = kept_mask
        .iter()
        .enumerate()
        .filter_map(|(i, &k)| k.then_some(i))
        .collect();
    if nodes.is_empty() {
        return Err(ScaleError::param("graph needs at least one kept node"));
    }
    Ok(nodes)
}

/// Components of {(i, j) : A_ij < η} restricted to kept samples, by union-find.
pub fn build_components(angles: &AngleMatrix, kept_mask: &[bool], eta: f64) -> Result<AngleGraph> {
    check_eta(eta)?;
    if kept_mask.len() != angles.len() {
        return Err(ScaleError::param(format!(
            "mask has {} entries for a {}-point angle matrix",
            kept_mask.len(),
            angles.len()
        )));
    }
    let nodes = kept_nodes(kept_mask)?;
    let mut dsu = DisjointSet::new(nodes.len());
    for (a, &i) in nodes.iter().enumerate() {
        let row = angles.row(i);
        for (b, &j) in nodes.iter().enumerate().skip(a + 1) {
            if row[j] < eta {
                dsu.union(a, b);
            }
        }
    }
    let (component_of, component_count) = dsu.labels();
    Ok(AngleGraph {
        node_ids: nodes,
        eta,
        component_of,
        component_count,
    })
}

/// Reference implementation by breadth-first search over the implicit edge
/// set. Quadratic per node; intended for cross-checking [`build_components`].
pub fn components_oracle(angles: &AngleMatrix, kept_mask: &[bool], eta: f64) -> Result<AngleGraph> {
    check_eta(eta)?;
    if kept_mask.len() != angles.len() {
        return Err(ScaleError::param("mask length does not match the angle matrix"));
    }
    let nodes = kept_nodes(kept_mask)?;
    let mut component_of = vec![usize::MAX; nodes.len()];
    let mut count = 0;
    for start in 0..nodes.len() {
        if component_of[start] != usize::MAX {
            continue;
        }
        component_of[start] = count;
        let mut queue = VecDeque::from([start]);
        while let Some(a) = queue.pop_front() {
            for b in 0..nodes.len() {
                if b != a && component_of[b] == usize::MAX && angles.get(nodes[a], nodes[b]) < eta {
                    component_of[b] = count;
                    queue.push_back(b);
                }
            }
        }
        count += 1;
    }
    Ok(AngleGraph {
        node_ids: nodes,
        eta,
        component_of,
        component_count: count,
    })
}

const SWEEP_BLOCK: usize = 256;

/// Incremental component extraction for a non-decreasing sequence of η.
///
/// Angles are computed on the fly from the points (same formula as
/// [`crate::preprocess::angle_matrix`]), so no M×M matrix is stored. Since the
/// η₂-partition coarsens the η₁-partition for η₁ ≤ η₂, the union-find state is
/// carried between steps and only pairs in different components are tested.
pub struct EtaSweep<'a> {
    points: &'a [SpherePoint],
    nodes: Vec<usize>,
    dsu: DisjointSet,
    last_eta: f64,
}

impl<'a> EtaSweep<'a> {
    pub fn new(points: &'a [SpherePoint], kept_mask: &[bool]) -> Result<Self> {
        if kept_mask.len() != points.len() {
            return Err(ScaleError::param(format!(
                "mask has {} entries for {} points",
                kept_mask.len(),
                points.len()
            )));
        }
        let nodes = kept_nodes(kept_mask)?;
        let dsu = DisjointSet::new(nodes.len());
        Ok(EtaSweep {
            points,
            nodes,
            dsu,
            last_eta: 0.0,
        })
    }

    pub fn node_ids(&self) -> &[usize] {
        &self.nodes
    }

    /// Components at `eta`, which must not be smaller than the previous call's.
    pub fn advance(&mut self, eta: f64) -> Result<AngleGraph> {
        check_eta(eta)?;
        if eta < self.last_eta {
            return Err(ScaleError::param(format!(
                "eta sweep must be non-decreasing ({eta} after {})",
                self.last_eta
            )));
        }
        self.last_eta = eta;
        // dots below this bound are certainly at angle > eta
        let skip_below = eta.cos() - 1e-12;
        let len = self.nodes.len();
        let mut start = 0;
        while start < len {
            let end = (start + SWEEP_BLOCK).min(len);
            let roots = self.dsu.roots();
            let points = self.points;
            let nodes = &self.nodes;
            let edges: Vec<(usize, usize)> = (start..end)
                .into_par_iter()
                .flat_map_iter(|a| {
                    let xa = points[nodes[a]].coords();
                    let mut linked = HashSet::new();
                    let mut out = Vec::new();
                    for b in (a + 1)..len {
                        if roots[a] == roots[b] || linked.contains(&roots[b]) {
                            continue;
                        }
                        let dot = clamped_dot(xa, points[nodes[b]].coords());
                        if dot < skip_below {
                            continue;
                        }
                        if dot.acos() < eta {
                            linked.insert(roots[b]);
                            out.push((a, b));
                        }
                    }
                    out
                })
                .collect();
            for (a, b) in edges {
                self.dsu.union(a, b);
            }
            start = end;
        }
        let (component_of, component_count) = self.dsu.labels();
        Ok(AngleGraph {
            node_ids: self.nodes.clone(),
            eta,
            component_of,
            component_count,
        })
    }
}

/// Components of the η-graph computed directly from points.
pub fn components_from_points(points: &[SpherePoint], kept_mask: &[bool], eta: f64) -> Result<AngleGraph> {
    EtaSweep::new(points, kept_mask)?.advance(eta)
}

/// Smallest geodesic angle between members of different components, or
/// `None` when there is a single component.
pub fn min_intercomponent_angle(points: &[SpherePoint], graph: &AngleGraph) -> Option<f64> {
    let n = graph.node_ids.len();
    (0..n)
        .into_par_iter()
        .filter_map(|a| {
            let xa = &points[graph.node_ids[a]];
            ((a + 1)..n)
                .filter(|&b| graph.component_of[a] != graph.component_of[b])
                .map(|b| xa.angle(&points[graph.node_ids[b]]))
                .reduce(f64::min)
        })
        .reduce_with(f64::min)
}
