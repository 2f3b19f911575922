// scratch diagnostic: dump tree
use rand::Rng;
use cloudburst_core::dem::DemGrid;
use cloudburst_core::flood::{BorderPolicy, FloodModel};
use cloudburst_core::rng::RandomSource;
use std::collections::BTreeMap;

fn main() {
    let src = RandomSource::new(606);
    let mut rng = src.stream(0);
    let z: Vec<f64> = (0..144).map(|_| rng.gen::<f64>() * 1.5).collect();
    let dem = DemGrid::from_elevations(12, 12, 1.0, z).unwrap();
    let rain: Vec<f64> = (0..144).map(|_| rng.gen::<f64>() * 0.15).collect();
    let model = FloodModel::new(dem.clone(), BorderPolicy::Closed).unwrap();
    println!("{}", model.debug_tree());
    // leaf inflows
    let area = 1.0;
    let mut inflow = BTreeMap::new();
    for i in 0..144 {
        if let cloudburst_core::flood::WatershedLabel::Pit(p) = model.watersheds().label(i) {
            *inflow.entry(p).or_insert(0.0) += rain[i] * area;
        }
    }
    println!("inflow by pit: {:?}", inflow);
}
