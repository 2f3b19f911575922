//! Static pluvial flood modelling on a DEM.
//!
//! Three stages, all deterministic:
//!
//! * **Flow directions** — every cell drains to its lowest strictly-lower D8
//!   neighbour (ties broken by the fixed scan order N, NE, E, SE, S, SW, W,
//!   NW). Cells with no lower neighbour are pits; on an open border they
//!   drain out of the domain instead.
//! * **Watersheds** — each cell is labelled by the pit (or border exit) its
//!   flow path terminates at. Labels partition the non-nodata cells.
//! * **Fill-spill-merge** — runoff volume (effective rain × cell area) is
//!   routed to each watershed's depression. A depression first absorbs any
//!   retention storage and pumping capacity, then ponds water with a flat
//!   surface from its pit upward. Water reaching the spill elevation crosses
//!   the lowest saddle into the neighbouring depression; once both sides of a
//!   saddle are full the merged lake rises as one. On an open border, water
//!   reaching the domain edge leaves as outflow.
//!
//! The saddle structure is a binary merge tree built by processing cells in
//! increasing (elevation, row-major index) order and joining components with
//! union-find, which is the priority-flood sweep expressed over sorted cells.

use std::collections::BTreeMap;

use crate::dem::{DemGrid, DepthRaster};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Treatment of the domain edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BorderPolicy {
    /// Water reaching the border leaves the domain.
    Open,
    /// The border is an impermeable wall.
    Closed,
}

/// Where a cell's local drainage goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowTarget {
    /// Drains to this cell index.
    To(usize),
    /// Local minimum: no strictly lower neighbour.
    Pit,
    /// Border cell of an open domain with no lower neighbour inside.
    Outflow,
    NoData,
}

/// Per-cell D8 flow directions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowField {
    ncols: usize,
    nrows: usize,
    targets: Vec<FlowTarget>,
}

impl FlowField {
    pub fn target(&self, idx: usize) -> FlowTarget {
        self.targets[idx]
    }

    pub fn targets(&self) -> &[FlowTarget] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Terminal a cell's flow path ends at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WatershedLabel {
    /// Terminates at this pit cell.
    Pit(usize),
    /// Leaves the domain via this border cell.
    Outflow(usize),
    NoData,
}

/// Watershed labelling of a flow field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Watersheds {
    labels: Vec<WatershedLabel>,
    /// Pit cell indices, ascending.
    pits: Vec<usize>,
}

impl Watersheds {
    pub fn label(&self, idx: usize) -> WatershedLabel {
        self.labels[idx]
    }

    pub fn labels(&self) -> &[WatershedLabel] {
        &self.labels
    }

    pub fn pits(&self) -> &[usize] {
        &self.pits
    }
}

/// Compute D8 flow directions.
///
/// Each cell drains to its lowest strictly-lower non-nodata neighbour; among
/// equally lowest neighbours the first in scan order wins.
pub fn flow_directions<T: Scalar>(dem: &DemGrid<T>, border: BorderPolicy) -> FlowField {
    let n = dem.len();
    let mut targets = vec![FlowTarget::NoData; n];
    for i in 0..n {
        if dem.is_nodata(i) {
            continue;
        }
        let z = dem.elevation(i);
        let mut best: Option<(T, usize)> = None;
        for j in dem.neighbors(i) {
            let zj = dem.elevation(j);
            if zj < z {
                match best {
                    Some((bz, _)) if zj >= bz => {}
                    _ => best = Some((zj, j)),
                }
            }
        }
        targets[i] = match best {
            Some((_, j)) => FlowTarget::To(j),
            None if border == BorderPolicy::Open && dem.on_border(i) => FlowTarget::Outflow,
            None => FlowTarget::Pit,
        };
    }
    FlowField {
        ncols: dem.ncols(),
        nrows: dem.nrows(),
        targets,
    }
}

/// Label every cell by the terminal of its flow path.
pub fn delineate_watersheds(flow: &FlowField) -> Result<Watersheds> {
    let n = flow.targets.len();
    let mut labels = vec![WatershedLabel::NoData; n];
    let mut resolved = vec![false; n];
    let mut pits = Vec::new();
    let mut path = Vec::new();

    for start in 0..n {
        if resolved[start] || flow.targets[start] == FlowTarget::NoData {
            resolved[start] = true;
            continue;
        }
        path.clear();
        let mut cur = start;
        let label = loop {
            if resolved[cur] {
                break labels[cur];
            }
            path.push(cur);
            if path.len() > n {
                return Err(Error::Internal(
                    "cycle detected while following flow directions".into(),
                ));
            }
            match flow.targets[cur] {
                FlowTarget::To(next) => cur = next,
                FlowTarget::Pit => break WatershedLabel::Pit(cur),
                FlowTarget::Outflow => break WatershedLabel::Outflow(cur),
                FlowTarget::NoData => {
                    return Err(Error::Internal(
                        "flow direction points into a nodata cell".into(),
                    ))
                }
            }
        };
        for &c in &path {
            labels[c] = label;
            resolved[c] = true;
        }
    }
    for (i, l) in labels.iter().enumerate() {
        if *l == WatershedLabel::Pit(i) {
            pits.push(i);
        }
    }
    Ok(Watersheds { labels, pits })
}

/// One leaf depression of the merge tree, as seen by callers.
#[derive(Debug, Clone, PartialEq)]
pub struct Depression<T> {
    pub id: usize,
    /// Lowest cell; the watershed terminal.
    pub pit_cell: usize,
    /// Catchment cells draining to the pit (includes the pit).
    pub cells: Vec<usize>,
    /// Water surface elevation at which this depression starts to spill.
    /// Infinite for the closed-domain root.
    pub spill_elevation: T,
    pub spill_target: SpillTarget,
}

/// Where a full depression's overflow goes first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpillTarget {
    /// Into this depression (by id).
    Depression(usize),
    /// Out of the domain.
    DomainOutlet,
    /// Never spills (closed domain root).
    None,
}

/// Side of a saddle: where water crossing it lands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Entry {
    /// Descends into this leaf (node id).
    Leaf(usize),
    /// Descends out of the domain.
    Outflow,
}

#[derive(Debug, Clone)]
struct MergeNode<T> {
    parent: Option<usize>,
    children: Option<(usize, usize)>,
    /// Saddle elevation where the two children join (internal nodes).
    saddle_elev: T,
    /// Entry landing for water crossing into child 0 / child 1's side.
    entry: [Entry; 2],
    /// Set when this node was a component top merged with the open border:
    /// water above this elevation leaves the domain.
    cap_elev: Option<T>,
    /// Leaf payload: index into the catchment table.
    leaf_id: Option<usize>,
    /// Subtree capacity in m³ below the node's exit level; infinite for
    /// uncapped roots.
    full: T,
    /// Whether the subtree (including self) leaks to the domain edge.
    capped_subtree: bool,
}

/// Reusable flood solver for one terrain configuration.
///
/// Building the model computes flow directions, watersheds and the
/// depression merge tree once; `simulate` can then be called repeatedly with
/// different rain fields and absorption volumes. The model never mutates the
/// DEM it was built from.
#[derive(Debug, Clone)]
pub struct FloodModel<T> {
    dem: DemGrid<T>,
    border: BorderPolicy,
    flow: FlowField,
    watersheds: Watersheds,
    nodes: Vec<MergeNode<T>>,
    /// leaf_id → node id.
    leaf_nodes: Vec<usize>,
    /// leaf_id → catchment cells (ascending).
    catchments: Vec<Vec<usize>>,
    /// leaf_id → pit cell.
    pits: Vec<usize>,
    roots: Vec<usize>,
}

/// Union-find over cells plus one virtual "ocean" element.
struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Returns the new root.
    fn union(&mut self, a: usize, b: usize) -> usize {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            self.parent[rb] = ra;
        }
        ra
    }
}

impl<T: Scalar> FloodModel<T> {
    pub fn new(dem: DemGrid<T>, border: BorderPolicy) -> Result<Self> {
        let flow = flow_directions(&dem, border);
        let watersheds = delineate_watersheds(&flow)?;
        let n = dem.len();

        // Leaf per pit, catchment lists from the watershed labels.
        let pits = watersheds.pits.clone();
        let pit_leaf: BTreeMap<usize, usize> =
            pits.iter().enumerate().map(|(li, &p)| (p, li)).collect();
        let mut catchments: Vec<Vec<usize>> = vec![Vec::new(); pits.len()];
        for i in 0..n {
            if let WatershedLabel::Pit(p) = watersheds.labels[i] {
                catchments[pit_leaf[&p]].push(i);
            }
        }

        let mut nodes: Vec<MergeNode<T>> = Vec::new();
        let mut leaf_nodes = vec![usize::MAX; pits.len()];
        let new_leaf = |leaf_id: usize, nodes: &mut Vec<MergeNode<T>>| -> usize {
            nodes.push(MergeNode {
                parent: None,
                children: None,
                saddle_elev: T::zero(),
                entry: [Entry::Outflow, Entry::Outflow],
                cap_elev: None,
                leaf_id: Some(leaf_id),
                full: T::zero(),
                capped_subtree: false,
            });
            nodes.len() - 1
        };

        // The ocean participates in the union-find as element `n`.
        let ocean = n;
        let mut dsu = Dsu::new(n + 1);
        // Component top node, per DSU root; None for pure ocean catchments.
        let mut comp_top: Vec<Option<usize>> = vec![None; n + 1];

        fn entry_from(
            cell: usize,
            ws: &Watersheds,
            pit_leaf: &BTreeMap<usize, usize>,
            leaf_nodes: &[usize],
        ) -> Entry {
            match ws.labels[cell] {
                WatershedLabel::Pit(p) => Entry::Leaf(leaf_nodes[pit_leaf[&p]]),
                WatershedLabel::Outflow(_) | WatershedLabel::NoData => Entry::Outflow,
            }
        }

        // Process cells from low to high; ties by row-major index.
        let mut order: Vec<usize> = (0..n).filter(|&i| !dem.is_nodata(i)).collect();
        order.sort_by(|&a, &b| {
            dem.elevation(a)
                .partial_cmp(&dem.elevation(b))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });

        let mut processed = vec![false; n];
        for &c in &order {
            processed[c] = true;
            let zc = dem.elevation(c);

            match flow.targets[c] {
                FlowTarget::Pit => {
                    let leaf_id = pit_leaf[&c];
                    let node = new_leaf(leaf_id, &mut nodes);
                    leaf_nodes[leaf_id] = node;
                    let root = dsu.find(c);
                    comp_top[root] = Some(node);
                }
                FlowTarget::Outflow => {
                    // The cell's runoff leaves directly; its component is the ocean.
                    let root = dsu.union(ocean, c);
                    // comp_top stays whatever the ocean side carries (None unless
                    // a capped component already joined the ocean).
                    let _ = root;
                }
                FlowTarget::To(j) => {
                    // Attach to the component the cell drains into.
                    let rj = dsu.find(j);
                    let top = comp_top[rj];
                    let root = dsu.union(j, c);
                    comp_top[root] = top;
                }
                FlowTarget::NoData => unreachable!("nodata cells are not processed"),
            }

            // Saddle merges: joining previously separate components at `c`.
            // Per distinct neighbouring component keep its lowest (z, idx)
            // neighbour; merge in ascending order of that key.
            let mut sides: BTreeMap<usize, (T, usize)> = BTreeMap::new();
            let neighbor_cells: Vec<usize> = dem.neighbors(c).collect();
            for nb in neighbor_cells {
                if !processed[nb] {
                    continue;
                }
                let root = dsu.find(nb);
                if root == dsu.find(c) {
                    continue;
                }
                let key = (dem.elevation(nb), nb);
                sides
                    .entry(root)
                    .and_modify(|cur| {
                        if key.0 < cur.0 || (key.0 == cur.0 && key.1 < cur.1) {
                            *cur = key;
                        }
                    })
                    .or_insert(key);
            }
            let mut merge_order: Vec<(T, usize)> = sides.values().copied().collect();
            merge_order.sort_by(|a, b| {
                a.0.partial_cmp(&b.0)
                    .unwrap_or(std::cmp::Ordering::Equal)
                    .then(a.1.cmp(&b.1))
            });

            for (_, nb) in merge_order {
                let root_c = dsu.find(c);
                let root_b = dsu.find(nb);
                if root_c == root_b {
                    continue;
                }
                let top_c = comp_top[root_c];
                let top_b = comp_top[root_b];
                match (top_c, top_b) {
                    (Some(a), Some(b)) => {
                        let parent = nodes.len();
                        nodes.push(MergeNode {
                            parent: None,
                            children: Some((a, b)),
                            saddle_elev: zc,
                            entry: [
                                entry_from(c, &watersheds, &pit_leaf, &leaf_nodes),
                                entry_from(nb, &watersheds, &pit_leaf, &leaf_nodes),
                            ],
                            cap_elev: None,
                            leaf_id: None,
                            full: T::zero(),
                            capped_subtree: false,
                        });
                        nodes[a].parent = Some(parent);
                        nodes[b].parent = Some(parent);
                        let root = dsu.union(root_c, root_b);
                        comp_top[root] = Some(parent);
                    }
                    (Some(a), None) => {
                        // Real component meets a pure ocean catchment: cap it.
                        if nodes[a].cap_elev.is_none() {
                            nodes[a].cap_elev = Some(zc);
                        }
                        let root = dsu.union(root_c, root_b);
                        comp_top[root] = Some(a);
                    }
                    (None, Some(b)) => {
                        if nodes[b].cap_elev.is_none() {
                            nodes[b].cap_elev = Some(zc);
                        }
                        let root = dsu.union(root_c, root_b);
                        comp_top[root] = Some(b);
                    }
                    (None, None) => {
                        let root = dsu.union(root_c, root_b);
                        comp_top[root] = None;
                    }
                }
            }

            // Open border: the component spills off the domain edge at z_c.
            if border == BorderPolicy::Open && dem.on_border(c) {
                let root_c = dsu.find(c);
                let root_o = dsu.find(ocean);
                if root_c != root_o {
                    if let Some(top) = comp_top[root_c] {
                        if nodes[top].cap_elev.is_none() {
                            nodes[top].cap_elev = Some(zc);
                        }
                        let root = dsu.union(root_c, root_o);
                        comp_top[root] = Some(top);
                    } else {
                        let root = dsu.union(root_c, root_o);
                        comp_top[root] = None;
                    }
                }
            }
        }

        let roots: Vec<usize> = (0..nodes.len())
            .filter(|&i| nodes[i].parent.is_none())
            .collect();

        let mut model = Self {
            dem,
            border,
            flow,
            watersheds,
            nodes,
            leaf_nodes,
            catchments,
            pits,
            roots,
        };
        model.compute_capacities();
        Ok(model)
    }

    fn compute_capacities(&mut self) {
        // Node ids are creation-ordered: children precede parents.
        for i in 0..self.nodes.len() {
            let capped_children = match self.nodes[i].children {
                Some((a, b)) => self.nodes[a].capped_subtree || self.nodes[b].capped_subtree,
                None => false,
            };
            self.nodes[i].capped_subtree = capped_children || self.nodes[i].cap_elev.is_some();

            let full = if capped_children {
                let (a, b) = self.nodes[i].children.unwrap();
                self.nodes[a].full + self.nodes[b].full
            } else {
                let exit = match self.nodes[i].cap_elev {
                    Some(cap) => Some(cap),
                    None => self.nodes[i].parent.map(|p| self.nodes[p].saddle_elev),
                };
                match exit {
                    Some(level) => self.subtree_volume_below(i, level),
                    None => T::infinity(),
                }
            };
            self.nodes[i].full = full;
        }
    }

    /// Σ max(0, level − z)·area over the subtree's catchment cells.
    fn subtree_volume_below(&self, node: usize, level: T) -> T {
        let area = self.dem.cell_area();
        let mut vol = T::zero();
        for &cell in self.subtree_cells_iter(node) {
            let z = self.dem.elevation(cell);
            if level > z {
                vol = vol + (level - z) * area;
            }
        }
        vol
    }

    /// Catchment cells of all leaves under `node` (borrowed, leaf by leaf).
    fn subtree_cells_iter(&self, node: usize) -> impl Iterator<Item = &usize> + '_ {
        let mut stack = vec![node];
        let mut leaves = Vec::new();
        while let Some(h) = stack.pop() {
            match self.nodes[h].children {
                Some((a, b)) => {
                    stack.push(a);
                    stack.push(b);
                }
                None => leaves.push(self.nodes[h].leaf_id.unwrap()),
            }
        }
        leaves
            .into_iter()
            .flat_map(|l| self.catchments[l].iter())
    }

    pub fn dem(&self) -> &DemGrid<T> {
        &self.dem
    }

    pub fn border(&self) -> BorderPolicy {
        self.border
    }

    pub fn flow(&self) -> &FlowField {
        &self.flow
    }

    pub fn watersheds(&self) -> &Watersheds {
        &self.watersheds
    }

    /// Pit cell of every leaf depression, ascending.
    pub fn pit_cells(&self) -> &[usize] {
        &self.pits
    }

    /// Debug view of the merge tree (test diagnostics only).
    #[doc(hidden)]
    pub fn debug_tree(&self) -> String {
        let mut out = String::new();
        for (i, n) in self.nodes.iter().enumerate() {
            out.push_str(&format!(
                "node {i}: parent {:?} children {:?} saddle {:?} entry {:?} cap {:?} leaf {:?} full {:?} capped {}\n",
                n.parent, n.children, n.saddle_elev, n.entry, n.cap_elev, n.leaf_id, n.full, n.capped_subtree
            ));
        }
        for (li, &node) in self.leaf_nodes.iter().enumerate() {
            out.push_str(&format!(
                "leaf {li} -> node {node}, pit {}, catchment {:?}\n",
                self.pits[li], self.catchments[li]
            ));
        }
        out
    }

    /// Leaf depressions with their spill structure.
    pub fn depressions(&self) -> Vec<Depression<T>> {
        let mut out = Vec::with_capacity(self.pits.len());
        for (leaf_id, &node) in self.leaf_nodes.iter().enumerate() {
            let nd = &self.nodes[node];
            let (spill_elevation, spill_target) = match (nd.cap_elev, nd.parent) {
                (Some(cap), _) => (cap, SpillTarget::DomainOutlet),
                (None, Some(p)) => {
                    let parent = &self.nodes[p];
                    let (c0, _c1) = parent.children.unwrap();
                    let other_side = if c0 == node { 1 } else { 0 };
                    let target = match parent.entry[other_side] {
                        Entry::Leaf(leaf_node) => {
                            SpillTarget::Depression(self.nodes[leaf_node].leaf_id.unwrap())
                        }
                        Entry::Outflow => SpillTarget::DomainOutlet,
                    };
                    (parent.saddle_elev, target)
                }
                (None, None) => (T::infinity(), SpillTarget::None),
            };
            out.push(Depression {
                id: leaf_id,
                pit_cell: self.pits[leaf_id],
                cells: self.catchments[leaf_id].clone(),
                spill_elevation,
                spill_target,
            });
        }
        out
    }

    /// Run one flood event.
    ///
    /// `effective_rain_m` is per-cell water input in meters; `storage_m3` and
    /// `pumped_m3` are absorption volumes keyed by depression pit cell, taken
    /// out of the water routed directly to that depression before ponding.
    pub fn simulate(
        &self,
        effective_rain_m: &[T],
        storage_m3: &BTreeMap<usize, T>,
        pumped_m3: &BTreeMap<usize, T>,
    ) -> Result<DepthRaster<T>> {
        let n = self.dem.len();
        if effective_rain_m.len() != n {
            return Err(Error::Domain(format!(
                "effective rain has {} cells, grid has {n}",
                effective_rain_m.len()
            )));
        }
        for (i, &r) in effective_rain_m.iter().enumerate() {
            if !(r >= T::zero()) || !r.is_finite() {
                return Err(Error::Domain(format!(
                    "effective rain at cell {i} is {r}; must be finite and >= 0"
                )));
            }
        }
        let pit_of: BTreeMap<usize, usize> = self
            .pits
            .iter()
            .enumerate()
            .map(|(li, &p)| (p, li))
            .collect();
        let mut absorb = vec![T::zero(); self.pits.len()];
        for (name, map) in [("storage", storage_m3), ("pumped", pumped_m3)] {
            for (&pit, &v) in map {
                if !(v >= T::zero()) || !v.is_finite() {
                    return Err(Error::Domain(format!(
                        "{name} volume for pit {pit} is {v}; must be finite and >= 0"
                    )));
                }
                let li = *pit_of.get(&pit).ok_or_else(|| {
                    Error::Domain(format!("{name} volume keyed by {pit}, which is not a pit cell"))
                })?;
                absorb[li] = absorb[li] + v;
            }
        }

        let area = self.dem.cell_area();
        let mut inflow = vec![T::zero(); self.pits.len()];
        let mut outflow = T::zero();
        for i in 0..n {
            match self.watersheds.labels[i] {
                WatershedLabel::Pit(p) => {
                    let li = pit_of[&p];
                    inflow[li] = inflow[li] + effective_rain_m[i] * area;
                }
                WatershedLabel::Outflow(_) => {
                    outflow = outflow + effective_rain_m[i] * area;
                }
                WatershedLabel::NoData => {}
            }
        }

        let mut stored = vec![T::zero(); self.nodes.len()];
        let mut direct = vec![T::zero(); self.nodes.len()];
        let mut absorbed_total = T::zero();

        for leaf_id in 0..self.pits.len() {
            let a = absorb[leaf_id].min(inflow[leaf_id]);
            absorbed_total = absorbed_total + a;
            let net = inflow[leaf_id] - a;
            if net > T::zero() {
                self.pour(
                    Entry::Leaf(self.leaf_nodes[leaf_id]),
                    net,
                    &mut stored,
                    &mut direct,
                    &mut outflow,
                )?;
            }
        }

        let mut depth = vec![T::zero(); n];
        for &root in &self.roots {
            self.resolve(root, &stored, &direct, &mut depth);
        }
        Ok(DepthRaster::new(
            self.dem.ncols(),
            self.dem.nrows(),
            depth,
            outflow,
            absorbed_total,
        ))
    }

    fn pour(
        &self,
        entry: Entry,
        mut w: T,
        stored: &mut [T],
        direct: &mut [T],
        outflow: &mut T,
    ) -> Result<()> {
        let mut node = match entry {
            Entry::Outflow => {
                *outflow = *outflow + w;
                return Ok(());
            }
            Entry::Leaf(node) => node,
        };
        let limit = 16 * (self.nodes.len() + 4);
        for _ in 0..limit {
            if !(w > T::zero()) {
                return Ok(());
            }
            let room = self.nodes[node].full - stored[node];
            if room > T::zero() {
                let take = if w < room { w } else { room };
                if take >= room {
                    // Snap to exactly full so the loop always progresses.
                    let delta = self.nodes[node].full - stored[node];
                    stored[node] = self.nodes[node].full;
                    direct[node] = direct[node] + delta;
                    let mut up = self.nodes[node].parent;
                    while let Some(p) = up {
                        stored[p] = stored[p] + delta;
                        up = self.nodes[p].parent;
                    }
                    w = w - delta;
                    continue;
                }
                stored[node] = stored[node] + take;
                direct[node] = direct[node] + take;
                let mut up = self.nodes[node].parent;
                while let Some(p) = up {
                    stored[p] = stored[p] + take;
                    up = self.nodes[p].parent;
                }
                return Ok(());
            }
            // Subtree full. If it leaks to the border, the rest leaves.
            if self.nodes[node].capped_subtree {
                *outflow = *outflow + w;
                return Ok(());
            }
            let parent = self.nodes[node].parent.ok_or_else(|| {
                Error::Internal("closed-domain depression reported full".into())
            })?;
            let (c0, c1) = self.nodes[parent].children.unwrap();
            let (sib, sib_side) = if c0 == node { (c1, 1) } else { (c0, 0) };
            if stored[sib] < self.nodes[sib].full {
                // Cross the saddle into the sibling's side.
                match self.nodes[parent].entry[sib_side] {
                    Entry::Leaf(l) => node = l,
                    Entry::Outflow => {
                        *outflow = *outflow + w;
                        return Ok(());
                    }
                }
            } else {
                // Both sides full: the merged lake rises above the saddle.
                node = parent;
            }
        }
        Err(Error::Internal(
            "fill-spill-merge failed to settle (step limit exceeded)".into(),
        ))
    }

    fn resolve(&self, node: usize, stored: &[T], direct: &[T], depth: &mut [T]) {
        let mut stack = vec![node];
        while let Some(h) = stack.pop() {
            if !(stored[h] > T::zero()) {
                continue;
            }
            match self.nodes[h].children {
                None => {
                    let leaf = self.nodes[h].leaf_id.unwrap();
                    self.assign_level(self.catchments[leaf].iter().copied(), stored[h], depth);
                }
                Some((a, b)) => {
                    if direct[h] > T::zero() {
                        // Merged lake above the saddle; both children are full.
                        let cells: Vec<usize> = self.subtree_cells_iter(h).copied().collect();
                        self.assign_level(cells.into_iter(), stored[h], depth);
                    } else {
                        stack.push(a);
                        stack.push(b);
                    }
                }
            }
        }
    }

    /// Flat-surface level holding volume `v` over `cells`; writes depths.
    fn assign_level(&self, cells: impl Iterator<Item = usize>, v: T, depth: &mut [T]) {
        let area = self.dem.cell_area();
        let cells: Vec<usize> = cells.collect();
        let mut zs: Vec<(T, usize)> = cells
            .iter()
            .map(|&c| (self.dem.elevation(c), c))
            .collect();
        zs.sort_by(|a, b| {
            a.0.partial_cmp(&b.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.1.cmp(&b.1))
        });
        let m = zs.len();
        let mut prefix = T::zero();
        let mut level = zs[0].0;
        for k in 0..m {
            prefix = prefix + zs[k].0;
            let count = T::from_usize(k + 1).unwrap();
            let candidate = (v / area + prefix) / count;
            if k + 1 == m || candidate <= zs[k + 1].0 {
                level = candidate;
                break;
            }
        }
        for &(z, c) in &zs {
            if level > z {
                depth[c] = level - z;
            }
        }
    }
}

/// One-shot flood simulation on a DEM (builds a [`FloodModel`] internally).
pub fn simulate_flood<T: Scalar>(
    dem: &DemGrid<T>,
    effective_rain_m: &[T],
    storage_m3: &BTreeMap<usize, T>,
    pumped_m3: &BTreeMap<usize, T>,
    border: BorderPolicy,
) -> Result<DepthRaster<T>> {
    FloodModel::new(dem.clone(), border)?.simulate(effective_rain_m, storage_m3, pumped_m3)
}
