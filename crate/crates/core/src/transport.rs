//! Transport network, flood-degraded travel times and zone accessibility.
//!
//! Flood depth maps onto edge impedance by two thresholds: above `d_slow`
//! (default 0.10 m) an edge runs at `slow_multiplier` times its free-flow
//! time, above `d_block` (default 0.30 m) it is impassable. A drainage
//! upgrade raises both thresholds on the upgraded edge. Accessibility of a
//! zone is the per-capita number of POIs per category reachable from the
//! zone centroid within a travel-time threshold.

use std::collections::BTreeMap;

use crate::dem::{DemGrid, DepthRaster};
use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};

/// Thresholds mapping flood depth on an edge footprint to travel impedance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpedanceParams<T> {
    /// Depth above which an edge is slowed, meters.
    pub d_slow: T,
    /// Depth above which an edge is impassable, meters.
    pub d_block: T,
    /// Travel-time factor applied to slowed edges.
    pub slow_multiplier: T,
}

impl<T: Scalar> Default for ImpedanceParams<T> {
    fn default() -> Self {
        Self {
            d_slow: cast(0.10),
            d_block: cast(0.30),
            slow_multiplier: cast(4.0),
        }
    }
}

impl<T: Scalar> ImpedanceParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.d_slow >= T::zero() && self.d_slow < self.d_block) {
            return Err(Error::Validation(format!(
                "impedance thresholds must satisfy 0 <= d_slow < d_block, got {} and {}",
                self.d_slow, self.d_block
            )));
        }
        if !(self.slow_multiplier >= T::one()) {
            return Err(Error::Validation(format!(
                "slow multiplier must be >= 1, got {}",
                self.slow_multiplier
            )));
        }
        Ok(())
    }
}

/// One network edge.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge<T> {
    pub id: String,
    pub from: usize,
    pub to: usize,
    /// Free-flow travel time, seconds.
    pub time_s: T,
    pub bidirectional: bool,
    /// DEM cells the edge crosses (linear indices).
    pub footprint: Vec<usize>,
}

/// Road/path network with nodes indexed densely.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportGraph<T> {
    node_ids: Vec<String>,
    node_index: BTreeMap<String, usize>,
    node_xy: Vec<(f64, f64)>,
    node_cell: Vec<Option<usize>>,
    edges: Vec<Edge<T>>,
    /// Outgoing (edge index, neighbour node) lists per node.
    adjacency: Vec<Vec<(usize, usize)>>,
}

/// Travel state of an edge under flooding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeState<T> {
    Open(T),
    Impassable,
}

impl<T: Scalar> TransportGraph<T> {
    pub fn new(
        nodes: Vec<(String, f64, f64, Option<usize>)>,
        edges: Vec<(String, String, String, T, bool, Vec<usize>)>,
    ) -> Result<Self> {
        let mut node_ids = Vec::with_capacity(nodes.len());
        let mut node_index = BTreeMap::new();
        let mut node_xy = Vec::with_capacity(nodes.len());
        let mut node_cell = Vec::with_capacity(nodes.len());
        for (id, x, y, cell) in nodes {
            if node_index.insert(id.clone(), node_ids.len()).is_some() {
                return Err(Error::Validation(format!("duplicate node id `{id}`")));
            }
            node_ids.push(id);
            node_xy.push((x, y));
            node_cell.push(cell);
        }
        let mut built = Vec::with_capacity(edges.len());
        for (id, from, to, time_s, bidirectional, footprint) in edges {
            let &fi = node_index
                .get(&from)
                .ok_or_else(|| Error::Reference(format!("edge `{id}` references missing node `{from}`")))?;
            let &ti = node_index
                .get(&to)
                .ok_or_else(|| Error::Reference(format!("edge `{id}` references missing node `{to}`")))?;
            if !(time_s > T::zero()) || !time_s.is_finite() {
                return Err(Error::Validation(format!(
                    "edge `{id}` travel time {time_s} must be finite and > 0"
                )));
            }
            built.push(Edge {
                id,
                from: fi,
                to: ti,
                time_s,
                bidirectional,
                footprint,
            });
        }
        let mut adjacency = vec![Vec::new(); node_ids.len()];
        for (ei, e) in built.iter().enumerate() {
            adjacency[e.from].push((ei, e.to));
            if e.bidirectional {
                adjacency[e.to].push((ei, e.from));
            }
        }
        Ok(Self {
            node_ids,
            node_index,
            node_xy,
            node_cell,
            edges: built,
            adjacency,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node_id(&self, idx: usize) -> &str {
        &self.node_ids[idx]
    }

    pub fn node_position(&self, idx: usize) -> (f64, f64) {
        self.node_xy[idx]
    }

    pub fn node_cell(&self, idx: usize) -> Option<usize> {
        self.node_cell[idx]
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.node_index.get(id).copied()
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    /// Check that every footprint cell lies inside the DEM.
    pub fn validate_against_dem(&self, dem: &DemGrid<T>) -> Result<()> {
        for e in &self.edges {
            for &cell in &e.footprint {
                if cell >= dem.len() {
                    return Err(Error::Reference(format!(
                        "edge `{}` footprint cell {cell} outside {}x{} DEM",
                        e.id,
                        dem.nrows(),
                        dem.ncols()
                    )));
                }
            }
        }
        for (idx, cell) in self.node_cell.iter().enumerate() {
            if let Some(c) = cell {
                if *c >= dem.len() {
                    return Err(Error::Reference(format!(
                        "node `{}` cell {c} outside DEM",
                        self.node_ids[idx]
                    )));
                }
            }
        }
        Ok(())
    }

    /// Per-edge travel state under the given flood.
    ///
    /// `drainage_bonus_m[edge]` raises both impedance thresholds for that
    /// edge (installed drainage upgrades).
    pub fn effective_edge_times(
        &self,
        depth: &DepthRaster<T>,
        params: &ImpedanceParams<T>,
        drainage_bonus_m: &[T],
    ) -> Result<Vec<EdgeState<T>>> {
        params.validate()?;
        if drainage_bonus_m.len() != self.edges.len() {
            return Err(Error::Domain(format!(
                "drainage bonus vector has {} entries for {} edges",
                drainage_bonus_m.len(),
                self.edges.len()
            )));
        }
        let mut out = Vec::with_capacity(self.edges.len());
        for (ei, e) in self.edges.iter().enumerate() {
            let bonus = drainage_bonus_m[ei];
            if !(bonus >= T::zero()) {
                return Err(Error::Domain(format!(
                    "drainage bonus for edge `{}` is {bonus}; must be >= 0",
                    e.id
                )));
            }
            let d = depth.max_depth_over(&e.footprint)?;
            let state = if d > params.d_block + bonus {
                EdgeState::Impassable
            } else if d > params.d_slow + bonus {
                EdgeState::Open(e.time_s * params.slow_multiplier)
            } else {
                EdgeState::Open(e.time_s)
            };
            out.push(state);
        }
        Ok(out)
    }

    /// All edges at free-flow time (dry network).
    pub fn free_flow_states(&self) -> Vec<EdgeState<T>> {
        self.edges.iter().map(|e| EdgeState::Open(e.time_s)).collect()
    }

    /// Single-source shortest travel times over the effective edge states.
    ///
    /// Returns one entry per node; unreachable nodes get `T::infinity()`.
    pub fn shortest_times(&self, states: &[EdgeState<T>], origin: usize) -> Result<Vec<T>> {
        if origin >= self.node_ids.len() {
            return Err(Error::Domain(format!(
                "origin node index {origin} out of range ({} nodes)",
                self.node_ids.len()
            )));
        }
        if states.len() != self.edges.len() {
            return Err(Error::Domain(format!(
                "edge state vector has {} entries for {} edges",
                states.len(),
                self.edges.len()
            )));
        }
        let n = self.node_ids.len();
        let mut dist = vec![T::infinity(); n];
        let mut done = vec![false; n];
        dist[origin] = T::zero();
        let mut heap: std::collections::BinaryHeap<std::cmp::Reverse<HeapKey<T>>> =
            std::collections::BinaryHeap::new();
        heap.push(std::cmp::Reverse(HeapKey(T::zero(), origin)));
        while let Some(std::cmp::Reverse(HeapKey(d, u))) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            for &(ei, v) in &self.adjacency[u] {
                let t = match states[ei] {
                    EdgeState::Open(t) => t,
                    EdgeState::Impassable => continue,
                };
                let nd = d + t;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(std::cmp::Reverse(HeapKey(nd, v)));
                }
            }
        }
        Ok(dist)
    }
}

/// Heap key ordering by (time, node index); NaN-free by construction.
#[derive(Clone, Copy, PartialEq)]
struct HeapKey<T>(T, usize);

impl<T: PartialOrd> Eq for HeapKey<T> {}

impl<T: PartialOrd> PartialOrd for HeapKey<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: PartialOrd> Ord for HeapKey<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .partial_cmp(&other.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(self.1.cmp(&other.1))
    }
}

/// Administrative zone.
#[derive(Debug, Clone, PartialEq)]
pub struct Zone {
    pub id: String,
    pub name: String,
    pub population: u32,
    /// Node index of the zone centroid (accessibility origin).
    pub centroid: usize,
    /// Member DEM cells (linear indices).
    pub cells: Vec<usize>,
    /// Member edge indices.
    pub edges: Vec<usize>,
}

/// Categorised amenity attached to a network node.
#[derive(Debug, Clone, PartialEq)]
pub struct Poi {
    pub id: String,
    pub category: String,
    pub node: usize,
}

/// Per-capita reachable POI counts per category, for one zone.
#[derive(Debug, Clone, PartialEq)]
pub struct AccessProfile<T> {
    pub zone: usize,
    pub per_capita: BTreeMap<String, T>,
}

/// Count POIs per category reachable within `threshold_s`, divided by the
/// zone population. Every category present in the catalog appears in the
/// profile (zero when nothing is reachable).
pub fn accessibility<T: Scalar>(
    zone_index: usize,
    zone: &Zone,
    pois: &[Poi],
    times: &[T],
    threshold_s: T,
) -> Result<AccessProfile<T>> {
    if !(threshold_s > T::zero()) {
        return Err(Error::Domain(format!(
            "travel-time threshold must be > 0, got {threshold_s}"
        )));
    }
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for p in pois {
        counts.entry(p.category.clone()).or_insert(0);
    }
    for p in pois {
        if times[p.node] <= threshold_s {
            *counts.get_mut(&p.category).unwrap() += 1;
        }
    }
    let pop = cast::<T>(f64::from(zone.population));
    let per_capita = counts
        .into_iter()
        .map(|(cat, c)| (cat, cast::<T>(c as f64) / pop))
        .collect();
    Ok(AccessProfile {
        zone: zone_index,
        per_capita,
    })
}
