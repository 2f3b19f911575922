//! Independent reference implementations used by the verification suites.
//!
//! Everything here deliberately avoids the main code paths: the flood
//! reference is an iterative cell-automaton relaxation rather than the
//! depression-tree solver, the shortest-path reference is Floyd–Warshall
//! rather than Dijkstra, and the regression reference minimises the NLL by
//! cyclic coordinate search without gradients. Keeping both routes in the
//! crate lets the acceptance suite cross-check them directly.

use crate::dem::{DemGrid, D8_OFFSETS};
use crate::flood::BorderPolicy;
use crate::qol::{regularized_nll, FitConfig, SurveyData};
use crate::scalar::{cast, Scalar};
use crate::transport::{EdgeState, TransportGraph};

/// Result of the cell-automaton water redistribution.
#[derive(Debug, Clone, PartialEq)]
pub struct CaFlood<T> {
    pub depth: Vec<T>,
    pub outflow_m3: T,
    pub sweeps: usize,
}

/// Iterative cell-automaton water redistribution, run to a fixed point.
///
/// Runoff is first routed along independently coded steepest-descent paths
/// (lowest strictly-lower neighbour, scan-order ties — the same convention
/// the flow-direction contract fixes) to each cell's terminal: pit deposits
/// stack on the pit cell, border exits leave immediately. The standing water
/// is then relaxed: each sweep moves water from a cell to its lowest-surface
/// neighbour (half the head difference, Gauss-Seidel in row-major order);
/// open-border cells shed any water above their own ground level off the
/// domain. Deposits are added in installments so transient columns cannot
/// push water over divides that a quasi-static filling would not cross.
pub fn ca_flood<T: Scalar>(
    dem: &DemGrid<T>,
    effective_rain_m: &[T],
    border: BorderPolicy,
    installments: usize,
    tolerance_m: T,
    max_sweeps: usize,
) -> CaFlood<T> {
    let n = dem.len();
    let ncols = dem.ncols();
    let nrows = dem.nrows();
    let area = dem.cell_area();
    let mut depth = vec![T::zero(); n];
    let mut outflow = T::zero();
    let mut sweeps = 0usize;
    let half = cast::<T>(0.5);
    let frac = T::one() / T::from_usize(installments.max(1)).unwrap();

    // Route each cell's runoff to its terminal by walking descent steps.
    let mut deposit = vec![T::zero(); n];
    for i in 0..n {
        if dem.is_nodata(i) || !(effective_rain_m[i] > T::zero()) {
            continue;
        }
        let mut cur = i;
        loop {
            match brute_force_d8_target(dem, cur, border) {
                crate::flood::FlowTarget::To(j) => cur = j,
                crate::flood::FlowTarget::Pit => {
                    deposit[cur] = deposit[cur] + effective_rain_m[i];
                    break;
                }
                crate::flood::FlowTarget::Outflow => {
                    outflow = outflow + effective_rain_m[i] * area;
                    break;
                }
                crate::flood::FlowTarget::NoData => break,
            }
        }
    }

    for _ in 0..installments.max(1) {
        for i in 0..n {
            if !dem.is_nodata(i) {
                depth[i] = depth[i] + deposit[i] * frac;
            }
        }
        loop {
            sweeps += 1;
            let mut max_move = T::zero();
            for i in 0..n {
                if dem.is_nodata(i) || !(depth[i] > T::zero()) {
                    continue;
                }
                let zi = dem.elevation(i);
                let wi = zi + depth[i];
                let (r, c) = (i / ncols, i % ncols);

                // Lowest-surface neighbour, first in scan order on ties.
                let mut best: Option<(T, usize)> = None;
                for &(dr, dc) in &D8_OFFSETS {
                    let nr = r as isize + dr;
                    let nc = c as isize + dc;
                    if nr < 0 || nc < 0 || nr >= nrows as isize || nc >= ncols as isize {
                        continue;
                    }
                    let j = nr as usize * ncols + nc as usize;
                    if dem.is_nodata(j) {
                        continue;
                    }
                    let wj = dem.elevation(j) + depth[j];
                    match best {
                        Some((bw, _)) if wj >= bw => {}
                        _ => best = Some((wj, j)),
                    }
                }
                if let Some((wj, j)) = best {
                    if wj < wi {
                        let transfer = (half * (wi - wj)).min(depth[i]);
                        if transfer > T::zero() {
                            depth[i] = depth[i] - transfer;
                            depth[j] = depth[j] + transfer;
                            if transfer > max_move {
                                max_move = transfer;
                            }
                        }
                    }
                }
                // Open border: anything above ground level leaves the domain,
                // but interior drainage is preferred when strictly lower.
                if border == BorderPolicy::Open && dem.on_border(i) && depth[i] > T::zero() {
                    let interior_lower = best.map(|(bw, _)| bw < zi).unwrap_or(false);
                    if !interior_lower {
                        outflow = outflow + depth[i] * area;
                        depth[i] = T::zero();
                    }
                }
            }
            if max_move <= tolerance_m || sweeps >= max_sweeps {
                break;
            }
        }
    }
    CaFlood {
        depth,
        outflow_m3: outflow,
        sweeps,
    }
}

/// All-pairs shortest travel times with Floyd–Warshall semantics.
///
/// Returns the dense matrix `times[i][j]`; unreachable pairs are infinite.
pub fn floyd_warshall<T: Scalar>(graph: &TransportGraph<T>, states: &[EdgeState<T>]) -> Vec<Vec<T>> {
    let n = graph.node_count();
    let inf = T::infinity();
    let mut d = vec![vec![inf; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = T::zero();
    }
    for (ei, e) in graph.edges().iter().enumerate() {
        let t = match states[ei] {
            EdgeState::Open(t) => t,
            EdgeState::Impassable => continue,
        };
        if t < d[e.from][e.to] {
            d[e.from][e.to] = t;
        }
        if e.bidirectional && t < d[e.to][e.from] {
            d[e.to][e.from] = t;
        }
    }
    for k in 0..n {
        for i in 0..n {
            if d[i][k].is_infinite() {
                continue;
            }
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// Minimise the regularised logistic NLL by cyclic coordinate search.
///
/// Gradient-free: each coordinate is optimised by interval shrinking
/// (golden-section style trisection) over a bracket that is grown until it
/// contains the minimum. Slow but independent of the Newton path.
pub fn nll_coordinate_search<T: Scalar>(
    data: &SurveyData<T>,
    cfg: &FitConfig<T>,
    passes: usize,
) -> Vec<T> {
    let dim = usize::from(cfg.include_intercept) + data.categories.len();
    let mut beta = vec![T::zero(); dim];
    for _ in 0..passes {
        for k in 0..dim {
            beta[k] = line_minimum(data, cfg, &beta, k);
        }
    }
    beta
}

fn line_minimum<T: Scalar>(data: &SurveyData<T>, cfg: &FitConfig<T>, beta: &[T], k: usize) -> T {
    let eval = |x: T| {
        let mut b = beta.to_vec();
        b[k] = x;
        regularized_nll(data, cfg, &b)
    };
    // Grow a bracket around the current value.
    let mut lo = beta[k] - cast::<T>(8.0);
    let mut hi = beta[k] + cast::<T>(8.0);
    for _ in 0..40 {
        let flo = eval(lo);
        let fhi = eval(hi);
        let fmid = eval((lo + hi) * cast(0.5));
        if fmid <= flo && fmid <= fhi {
            break;
        }
        if flo < fhi {
            lo = lo - (hi - lo);
        } else {
            hi = hi + (hi - lo);
        }
    }
    // Trisection shrink.
    let third = T::one() / cast::<T>(3.0);
    for _ in 0..200 {
        let a = lo + (hi - lo) * third;
        let b = hi - (hi - lo) * third;
        if eval(a) <= eval(b) {
            hi = b;
        } else {
            lo = a;
        }
        if hi - lo < cast(1e-9) {
            break;
        }
    }
    (lo + hi) * cast(0.5)
}

/// Minimum travel time over all simple paths (exhaustive DFS); the
/// small-graph oracle for accessibility tests.
pub fn min_time_by_path_enumeration<T: Scalar>(
    graph: &TransportGraph<T>,
    states: &[EdgeState<T>],
    from: usize,
    to: usize,
) -> T {
    fn dfs<T: Scalar>(
        graph: &TransportGraph<T>,
        states: &[EdgeState<T>],
        here: usize,
        to: usize,
        visited: &mut Vec<bool>,
        time: T,
        best: &mut T,
    ) {
        if here == to {
            if time < *best {
                *best = time;
            }
            return;
        }
        for (ei, e) in graph.edges().iter().enumerate() {
            let t = match states[ei] {
                EdgeState::Open(t) => t,
                EdgeState::Impassable => continue,
            };
            let next = if e.from == here {
                Some(e.to)
            } else if e.bidirectional && e.to == here {
                Some(e.from)
            } else {
                None
            };
            if let Some(nx) = next {
                if !visited[nx] {
                    visited[nx] = true;
                    dfs(graph, states, nx, to, visited, time + t, best);
                    visited[nx] = false;
                }
            }
        }
    }
    let mut best = T::infinity();
    let mut visited = vec![false; graph.node_count()];
    visited[from] = true;
    dfs(graph, states, from, to, &mut visited, T::zero(), &mut best);
    best
}

/// Brute-force D8 scan for one cell: lowest strictly-lower neighbour with
/// scan-order tie-breaking. Mirrors the contract, not the implementation.
pub fn brute_force_d8_target<T: Scalar>(
    dem: &DemGrid<T>,
    idx: usize,
    border: BorderPolicy,
) -> crate::flood::FlowTarget {
    use crate::flood::FlowTarget;
    if dem.is_nodata(idx) {
        return FlowTarget::NoData;
    }
    let (r, c) = dem.row_col(idx);
    let mut best_z = dem.elevation(idx);
    let mut best: Option<usize> = None;
    for &(dr, dc) in &D8_OFFSETS {
        let nr = r as isize + dr;
        let nc = c as isize + dc;
        if nr < 0 || nc < 0 || nr >= dem.nrows() as isize || nc >= dem.ncols() as isize {
            continue;
        }
        let j = nr as usize * dem.ncols() + nc as usize;
        if dem.is_nodata(j) {
            continue;
        }
        if dem.elevation(j) < best_z {
            best_z = dem.elevation(j);
            best = Some(j);
        }
    }
    match best {
        Some(j) => FlowTarget::To(j),
        None if border == BorderPolicy::Open && dem.on_border(idx) => FlowTarget::Outflow,
        None => FlowTarget::Pit,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn ca_flood_flat_basin() {
        let dem = DemGrid::<f64>::from_elevations(4, 4, 1.0, vec![0.0; 16]).unwrap();
        let rain = vec![0.02; 16];
        let out = ca_flood(&dem, &rain, BorderPolicy::Closed, 8, 1e-13, 200_000);
        for &d in &out.depth {
            assert!((d - 0.02).abs() < 1e-9, "{d}");
        }
    }

    #[test]
    fn ca_flood_ring_basin() {
        let z = vec![1.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0];
        let dem = DemGrid::<f64>::from_elevations(3, 3, 1.0, z).unwrap();
        let rain = vec![0.1; 9];
        let out = ca_flood(&dem, &rain, BorderPolicy::Closed, 8, 1e-13, 200_000);
        assert!((out.depth[4] - 0.9).abs() < 1e-6, "centre {}", out.depth[4]);
        let total: f64 = out.depth.iter().sum();
        assert!((total - 0.9).abs() < 1e-9);
    }

    #[test]
    fn ca_flood_open_ramp_drains() {
        let dem = DemGrid::<f64>::from_elevations(3, 1, 1.0, vec![3.0, 2.0, 1.0]).unwrap();
        let rain = vec![0.5; 3];
        let out = ca_flood(&dem, &rain, BorderPolicy::Open, 8, 1e-13, 200_000);
        assert!(out.depth.iter().all(|&d| d < 1e-9));
        assert!((out.outflow_m3 - 1.5).abs() < 1e-9);
    }

    #[test]
    fn floyd_warshall_matches_hand_line() {
        let g = TransportGraph::<f64>::new(
            vec![
                ("A".into(), 0.0, 0.0, None),
                ("B".into(), 1.0, 0.0, None),
                ("C".into(), 2.0, 0.0, None),
            ],
            vec![
                ("e1".into(), "A".into(), "B".into(), 60.0, true, vec![]),
                ("e2".into(), "B".into(), "C".into(), 60.0, true, vec![]),
            ],
        )
        .unwrap();
        let d = floyd_warshall(&g, &g.free_flow_states());
        assert_eq!(d[0][2], 120.0);
        assert_eq!(d[2][0], 120.0);
        assert_eq!(d[1][1], 0.0);
    }

    #[test]
    fn coordinate_search_minimises_simple_quadratic_case() {
        // With λ → ∞ the optimum is β = 0 (any data); coordinate search must
        // find it from anywhere.
        let data = SurveyData::<f64>::new(
            vec!["a".into()],
            vec![
                crate::qol::SurveyRow {
                    features: vec![1.0],
                    satisfied: true,
                },
                crate::qol::SurveyRow {
                    features: vec![-1.0],
                    satisfied: false,
                },
            ],
        )
        .unwrap();
        let cfg = FitConfig::<f64> {
            l2_lambda: 1e6,
            include_intercept: false,
            ..FitConfig::default()
        };
        let beta = nll_coordinate_search(&data, &cfg, 4);
        assert!(beta[0].abs() < 1e-4, "{}", beta[0]);
        let _ = BTreeMap::<usize, f64>::new();
    }
}
