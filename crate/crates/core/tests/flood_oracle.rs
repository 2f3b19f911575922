//! Flood-stage oracles: brute-force D8 scans, path-following watershed
//! labels, volume conservation, and the independent cell-automaton
//! redistribution simulation.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use cloudburst_core::dem::DemGrid;
use cloudburst_core::flood::{
    delineate_watersheds, flow_directions, BorderPolicy, FloodModel, FlowTarget, WatershedLabel,
};
use cloudburst_core::reference::{brute_force_d8_target, ca_flood};
use cloudburst_core::rng::RandomSource;

fn random_dem(rng: &mut ChaCha8Rng, ncols: usize, nrows: usize, relief: f64) -> DemGrid<f64> {
    let z: Vec<f64> = (0..ncols * nrows).map(|_| rng.gen::<f64>() * relief).collect();
    DemGrid::from_elevations(ncols, nrows, 1.0, z).unwrap()
}

fn no_absorb() -> BTreeMap<usize, f64> {
    BTreeMap::new()
}

#[test]
fn d8_matches_brute_force_scan() {
    let src = RandomSource::new(101);
    for trial in 0..40u64 {
        let mut rng = src.stream(trial);
        let dem = random_dem(&mut rng, 6, 6, 5.0);
        for border in [BorderPolicy::Closed, BorderPolicy::Open] {
            let flow = flow_directions(&dem, border);
            for i in 0..dem.len() {
                assert_eq!(
                    flow.target(i),
                    brute_force_d8_target(&dem, i, border),
                    "trial {trial}, cell {i}"
                );
            }
        }
    }
}

#[test]
fn watershed_labels_match_path_following() {
    let src = RandomSource::new(202);
    for trial in 0..40u64 {
        let mut rng = src.stream(trial);
        let dem = random_dem(&mut rng, 6, 6, 5.0);
        let flow = flow_directions(&dem, BorderPolicy::Open);
        let ws = delineate_watersheds(&flow).unwrap();
        for start in 0..dem.len() {
            // Independent oracle: walk the directions one cell at a time.
            let mut cur = start;
            let expected = loop {
                match flow.target(cur) {
                    FlowTarget::To(next) => cur = next,
                    FlowTarget::Pit => break WatershedLabel::Pit(cur),
                    FlowTarget::Outflow => break WatershedLabel::Outflow(cur),
                    FlowTarget::NoData => break WatershedLabel::NoData,
                }
            };
            assert_eq!(ws.label(start), expected, "trial {trial}, cell {start}");
        }
    }
}

#[test]
fn watershed_labels_partition_the_grid() {
    let src = RandomSource::new(303);
    let mut rng = src.stream(0);
    let dem = random_dem(&mut rng, 12, 9, 3.0);
    let flow = flow_directions(&dem, BorderPolicy::Closed);
    let ws = delineate_watersheds(&flow).unwrap();
    for i in 0..dem.len() {
        match ws.label(i) {
            WatershedLabel::Pit(p) => assert_eq!(flow.target(p), FlowTarget::Pit),
            other => panic!("closed grid cell {i} got label {other:?}"),
        }
    }
}

#[test]
fn conservation_on_random_closed_dems() {
    let src = RandomSource::new(404);
    for trial in 0..30u64 {
        let mut rng = src.stream(trial);
        let ncols = 4 + (rng.gen::<f64>() * 28.0) as usize;
        let nrows = 4 + (rng.gen::<f64>() * 28.0) as usize;
        let dem = random_dem(&mut rng, ncols, nrows, 4.0);
        let rain: Vec<f64> = (0..dem.len()).map(|_| rng.gen::<f64>() * 0.3).collect();
        let model = FloodModel::new(dem.clone(), BorderPolicy::Closed).unwrap();
        let out = model.simulate(&rain, &no_absorb(), &no_absorb()).unwrap();
        let rained: f64 = rain.iter().map(|r| r * dem.cell_area()).sum();
        let ponded = out.ponded_volume(&dem);
        assert_eq!(out.outflow_m3, 0.0, "closed border must not leak");
        let rel = ((ponded - rained) / rained).abs();
        assert!(rel < 1e-9, "trial {trial}: relative error {rel:e}");
    }
}

#[test]
fn mass_balance_with_absorption_and_open_border() {
    let src = RandomSource::new(505);
    for trial in 0..20u64 {
        let mut rng = src.stream(trial);
        let dem = random_dem(&mut rng, 16, 16, 2.0);
        let rain: Vec<f64> = (0..dem.len()).map(|_| rng.gen::<f64>() * 0.2).collect();
        let model = FloodModel::new(dem.clone(), BorderPolicy::Open).unwrap();
        // Attach random storage to the first few pits.
        let mut storage = BTreeMap::new();
        for &pit in model.pit_cells().iter().take(3) {
            storage.insert(pit, rng.gen::<f64>() * 5.0);
        }
        let out = model.simulate(&rain, &storage, &no_absorb()).unwrap();
        let rained: f64 = rain.iter().map(|r| r * dem.cell_area()).sum();
        let ponded = out.ponded_volume(&dem);
        let balance = ponded + out.absorbed_m3 + out.outflow_m3;
        let rel = ((balance - rained) / rained).abs();
        assert!(rel < 1e-9, "trial {trial}: relative error {rel:e}");
    }
}

#[test]
fn fsm_matches_cell_automaton_on_random_dems() {
    let src = RandomSource::new(606);
    for trial in 0..10u64 {
        let mut rng = src.stream(trial);
        let dem = random_dem(&mut rng, 12, 12, 1.5);
        let rain: Vec<f64> = (0..dem.len()).map(|_| rng.gen::<f64>() * 0.15).collect();
        for border in [BorderPolicy::Closed, BorderPolicy::Open] {
            let model = FloodModel::new(dem.clone(), border).unwrap();
            let fsm = model.simulate(&rain, &no_absorb(), &no_absorb()).unwrap();
            let ca = ca_flood(&dem, &rain, border, 32, 1e-13, 400_000);
            for i in 0..dem.len() {
                let diff = (fsm.depth(i) - ca.depth[i]).abs();
                assert!(
                    diff < 1e-6,
                    "trial {trial} {border:?} cell {i}: fsm {} vs ca {} (diff {diff:e})",
                    fsm.depth(i),
                    ca.depth[i]
                );
            }
        }
    }
}

#[test]
fn depth_monotone_in_rain() {
    let src = RandomSource::new(707);
    for trial in 0..25u64 {
        let mut rng = src.stream(trial);
        let dem = random_dem(&mut rng, 10, 10, 2.0);
        let rain1: Vec<f64> = (0..dem.len()).map(|_| rng.gen::<f64>() * 0.1).collect();
        let rain2: Vec<f64> = rain1
            .iter()
            .map(|r| r + rng.gen::<f64>() * 0.1)
            .collect();
        for border in [BorderPolicy::Closed, BorderPolicy::Open] {
            let model = FloodModel::new(dem.clone(), border).unwrap();
            let d1 = model.simulate(&rain1, &no_absorb(), &no_absorb()).unwrap();
            let d2 = model.simulate(&rain2, &no_absorb(), &no_absorb()).unwrap();
            for i in 0..dem.len() {
                assert!(
                    d2.depth(i) >= d1.depth(i) - 1e-12,
                    "trial {trial} {border:?} cell {i}: {} < {}",
                    d2.depth(i),
                    d1.depth(i)
                );
            }
        }
    }
}

#[test]
fn ponded_regions_have_flat_surface() {
    let src = RandomSource::new(808);
    for trial in 0..15u64 {
        let mut rng = src.stream(trial);
        let dem = random_dem(&mut rng, 12, 12, 1.0);
        let rain: Vec<f64> = (0..dem.len()).map(|_| rng.gen::<f64>() * 0.2).collect();
        let model = FloodModel::new(dem.clone(), BorderPolicy::Closed).unwrap();
        let out = model.simulate(&rain, &no_absorb(), &no_absorb()).unwrap();
        // Flood-fill wet regions (8-connectivity): surfaces must agree.
        let n = dem.len();
        let mut seen = vec![false; n];
        for start in 0..n {
            if seen[start] || !(out.depth(start) > 0.0) {
                continue;
            }
            let mut surface = Vec::new();
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(i) = stack.pop() {
                surface.push(dem.elevation(i) + out.depth(i));
                for j in dem.neighbors(i) {
                    if !seen[j] && out.depth(j) > 0.0 {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            let lo = surface.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = surface.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(
                hi - lo < 1e-9,
                "trial {trial}: ponded region at {start} spans {lo}..{hi}"
            );
        }
    }
}

#[test]
fn repeat_runs_are_byte_identical() {
    let src = RandomSource::new(909);
    let mut rng = src.stream(0);
    let dem = random_dem(&mut rng, 20, 20, 2.0);
    let rain: Vec<f64> = (0..dem.len()).map(|_| rng.gen::<f64>() * 0.2).collect();
    let model = FloodModel::new(dem, BorderPolicy::Open).unwrap();
    let a = model.simulate(&rain, &no_absorb(), &no_absorb()).unwrap();
    let b = model.simulate(&rain, &no_absorb(), &no_absorb()).unwrap();
    assert_eq!(a, b);
}
