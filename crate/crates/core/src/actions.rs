//! The eight-action adaptation catalog and its effect on the environment.
//!
//! Measures are one-time, irreversible, per-zone installs. Installing any
//! measure recomputes a derived parameter bundle: retention multipliers
//! compose multiplicatively within a zone, drainage bonuses add on the zone's
//! member edges, basin/pump volumes attach to the depression the zone drains
//! to, and elevation measures produce a working DEM copy (flow directions and
//! depressions recomputed). The scenario's base DEM is never mutated.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::dem::{DemGrid, D8_OFFSETS};
use crate::error::{Error, Result};
use crate::flood::{BorderPolicy, FloodModel, WatershedLabel};
use crate::scalar::Scalar;
use crate::transport::{TransportGraph, Zone};

/// The action catalog's eight kinds. `NoOp` is an MDP action, not an
/// installable measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    NoOp,
    RoadDrainageUpgrade,
    PermeablePaving,
    RetentionBasin,
    GreenRoof,
    PumpStation,
    RoadElevation,
    PerimeterBerm,
}

impl MeasureKind {
    pub const ALL: [MeasureKind; 8] = [
        MeasureKind::NoOp,
        MeasureKind::RoadDrainageUpgrade,
        MeasureKind::PermeablePaving,
        MeasureKind::RetentionBasin,
        MeasureKind::GreenRoof,
        MeasureKind::PumpStation,
        MeasureKind::RoadElevation,
        MeasureKind::PerimeterBerm,
    ];

    /// The seven installable kinds, in canonical order.
    pub const INSTALLABLE: [MeasureKind; 7] = [
        MeasureKind::RoadDrainageUpgrade,
        MeasureKind::PermeablePaving,
        MeasureKind::RetentionBasin,
        MeasureKind::GreenRoof,
        MeasureKind::PumpStation,
        MeasureKind::RoadElevation,
        MeasureKind::PerimeterBerm,
    ];

    pub fn key(&self) -> &'static str {
        match self {
            MeasureKind::NoOp => "no_op",
            MeasureKind::RoadDrainageUpgrade => "road_drainage_upgrade",
            MeasureKind::PermeablePaving => "permeable_paving",
            MeasureKind::RetentionBasin => "retention_basin",
            MeasureKind::GreenRoof => "green_roof",
            MeasureKind::PumpStation => "pump_station",
            MeasureKind::RoadElevation => "road_elevation",
            MeasureKind::PerimeterBerm => "perimeter_berm",
        }
    }

    pub fn from_key(key: &str) -> Option<MeasureKind> {
        MeasureKind::ALL.into_iter().find(|k| k.key() == key)
    }

    /// Position among the installable kinds; `None` for `NoOp`.
    pub fn installable_index(&self) -> Option<usize> {
        MeasureKind::INSTALLABLE.iter().position(|k| k == self)
    }
}

/// Physical effect of a measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MeasureEffect<T> {
    /// No physical effect (NoOp).
    None,
    /// Raises both flood-impedance thresholds on the zone's edges, meters.
    DrainageBonus(T),
    /// Scales the zone's effective rain; factor in (0, 1].
    Retention(T),
    /// Retention basin volume, m³ per event.
    Storage(T),
    /// Pumped volume, m³ per event.
    Pump(T),
    /// Raises the zone's road cells (edge footprints), meters.
    RaiseRoads(T),
    /// Raises the zone's boundary cells, meters.
    RaiseBoundary(T),
}

/// Costs and effect of one measure kind.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureSpec<T> {
    pub kind: MeasureKind,
    /// Eq-style capital cost paid on install (currency units).
    pub capital_cost: T,
    /// Annual maintenance while installed (currency units).
    pub annual_maintenance: T,
    pub effect: MeasureEffect<T>,
}

impl<T: Scalar> MeasureSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.capital_cost >= T::zero()) || !(self.annual_maintenance >= T::zero()) {
            return Err(Error::Validation(format!(
                "measure {}: costs must be >= 0",
                self.kind.key()
            )));
        }
        let expect = |ok: bool| {
            if ok {
                Ok(())
            } else {
                Err(Error::Validation(format!(
                    "measure {}: effect parameter does not match its kind",
                    self.kind.key()
                )))
            }
        };
        match (self.kind, self.effect) {
            (MeasureKind::NoOp, MeasureEffect::None) => {
                if self.capital_cost != T::zero() || self.annual_maintenance != T::zero() {
                    return Err(Error::Validation(
                        "no_op must have zero capital and maintenance costs".into(),
                    ));
                }
                Ok(())
            }
            (MeasureKind::RoadDrainageUpgrade, MeasureEffect::DrainageBonus(v)) => {
                expect(v >= T::zero())
            }
            (MeasureKind::PermeablePaving, MeasureEffect::Retention(f))
            | (MeasureKind::GreenRoof, MeasureEffect::Retention(f)) => {
                expect(f > T::zero() && f <= T::one())
            }
            (MeasureKind::RetentionBasin, MeasureEffect::Storage(v)) => expect(v >= T::zero()),
            (MeasureKind::PumpStation, MeasureEffect::Pump(v)) => expect(v >= T::zero()),
            (MeasureKind::RoadElevation, MeasureEffect::RaiseRoads(v)) => expect(v >= T::zero()),
            (MeasureKind::PerimeterBerm, MeasureEffect::RaiseBoundary(v)) => {
                expect(v >= T::zero())
            }
            _ => expect(false),
        }
    }
}

/// Complete catalog: exactly one spec per kind.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureCatalog<T> {
    specs: Vec<MeasureSpec<T>>, // ordered as MeasureKind::ALL
}

impl<T: Scalar> MeasureCatalog<T> {
    pub fn new(mut specs: Vec<MeasureSpec<T>>) -> Result<Self> {
        specs.sort_by_key(|s| MeasureKind::ALL.iter().position(|k| *k == s.kind));
        let kinds: Vec<MeasureKind> = specs.iter().map(|s| s.kind).collect();
        for kind in MeasureKind::ALL {
            let count = kinds.iter().filter(|k| **k == kind).count();
            if count != 1 {
                return Err(Error::Validation(format!(
                    "catalog must define `{}` exactly once, found {count}",
                    kind.key()
                )));
            }
        }
        for s in &specs {
            s.validate()?;
        }
        Ok(Self { specs })
    }

    pub fn spec(&self, kind: MeasureKind) -> &MeasureSpec<T> {
        let pos = MeasureKind::ALL.iter().position(|k| *k == kind).unwrap();
        &self.specs[pos]
    }

    pub fn specs(&self) -> &[MeasureSpec<T>] {
        &self.specs
    }
}

/// Which (zone, measure) pairs are installed. Monotone over an episode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstalledMeasures {
    n_zones: usize,
    bits: Vec<bool>, // zones × 7, zone-major
}

impl InstalledMeasures {
    pub fn new(n_zones: usize) -> Self {
        Self {
            n_zones,
            bits: vec![false; n_zones * MeasureKind::INSTALLABLE.len()],
        }
    }

    pub fn n_zones(&self) -> usize {
        self.n_zones
    }

    fn offset(&self, zone: usize, kind: MeasureKind) -> Result<usize> {
        if zone >= self.n_zones {
            return Err(Error::Domain(format!(
                "zone index {zone} out of range ({} zones)",
                self.n_zones
            )));
        }
        let ki = kind.installable_index().ok_or_else(|| {
            Error::Domain("no_op is an MDP action, not an installable measure".into())
        })?;
        Ok(zone * MeasureKind::INSTALLABLE.len() + ki)
    }

    pub fn is_installed(&self, zone: usize, kind: MeasureKind) -> Result<bool> {
        Ok(self.bits[self.offset(zone, kind)?])
    }

    /// Marks the pair installed; duplicate installs are a state error.
    pub fn install(&mut self, zone: usize, kind: MeasureKind) -> Result<()> {
        let off = self.offset(zone, kind)?;
        if self.bits[off] {
            return Err(Error::State(format!(
                "measure `{}` already installed in zone {zone}",
                kind.key()
            )));
        }
        self.bits[off] = true;
        Ok(())
    }

    /// Installed pairs, zone-major then canonical kind order.
    pub fn iter_installed(&self) -> impl Iterator<Item = (usize, MeasureKind)> + '_ {
        self.bits.iter().enumerate().filter_map(|(off, &b)| {
            b.then(|| {
                let zone = off / MeasureKind::INSTALLABLE.len();
                let kind = MeasureKind::INSTALLABLE[off % MeasureKind::INSTALLABLE.len()];
                (zone, kind)
            })
        })
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }
}

/// Capital and maintenance charged in one step.
///
/// `A` is the capital cost of the newly installed measure (zero for NoOp);
/// `M` sums the annual maintenance of everything installed at the end of the
/// step, including the new install.
pub fn step_costs<T: Scalar>(
    installed_before: &InstalledMeasures,
    action: Option<MeasureKind>,
    catalog: &MeasureCatalog<T>,
) -> (T, T) {
    let a = action
        .map(|k| catalog.spec(k).capital_cost)
        .unwrap_or_else(T::zero);
    let mut m = T::zero();
    for (_, kind) in installed_before.iter_installed() {
        m = m + catalog.spec(kind).annual_maintenance;
    }
    if let Some(k) = action {
        m = m + catalog.spec(k).annual_maintenance;
    }
    (a, m)
}

/// Derived environment parameters implied by the installed measures.
#[derive(Debug, Clone)]
pub struct EffectBundle<T> {
    /// Effective-rain multiplier per zone (product of retention factors).
    pub rain_multiplier: Vec<T>,
    /// Depth-threshold bonus per edge, meters.
    pub drainage_bonus_m: Vec<T>,
    /// Retention storage per depression pit cell, m³.
    pub storage_m3: BTreeMap<usize, T>,
    /// Pumped volume per depression pit cell, m³ per event.
    pub pump_m3: BTreeMap<usize, T>,
    /// Flood solver built on the working DEM (base + elevation deltas).
    pub flood: FloodModel<T>,
}

/// Boundary cells of a zone: member cells with an 8-neighbour outside the
/// member set (or outside the grid).
pub fn zone_boundary_cells<T: Scalar>(dem: &DemGrid<T>, cells: &[usize]) -> Vec<usize> {
    let member: BTreeSet<usize> = cells.iter().copied().collect();
    let mut out = Vec::new();
    for &i in cells {
        let (r, c) = dem.row_col(i);
        let mut boundary = false;
        for &(dr, dc) in &D8_OFFSETS {
            let nr = r as isize + dr;
            let nc = c as isize + dc;
            if nr < 0 || nc < 0 || nr >= dem.nrows() as isize || nc >= dem.ncols() as isize {
                boundary = true;
                break;
            }
            let j = nr as usize * dem.ncols() + nc as usize;
            if !member.contains(&j) {
                boundary = true;
                break;
            }
        }
        if boundary {
            out.push(i);
        }
    }
    out
}

/// The depression pit a zone's storage and pumps act on: follow the flow
/// path of the zone's lowest member cell to its terminal. `None` when the
/// zone drains off the domain (storage has no depression to attach to).
fn zone_target_pit<T: Scalar>(flood: &FloodModel<T>, zone: &Zone) -> Option<usize> {
    let dem = flood.dem();
    let lowest = zone
        .cells
        .iter()
        .copied()
        .filter(|&i| !dem.is_nodata(i))
        .min_by(|&a, &b| {
            dem.elevation(a)
                .partial_cmp(&dem.elevation(b))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        })?;
    match flood.watersheds().label(lowest) {
        WatershedLabel::Pit(p) => Some(p),
        _ => None,
    }
}

impl<T: Scalar> EffectBundle<T> {
    /// Recompute the full bundle for the given install state.
    pub fn rebuild(
        base_dem: &DemGrid<T>,
        border: BorderPolicy,
        graph: &TransportGraph<T>,
        zones: &[Zone],
        catalog: &MeasureCatalog<T>,
        installed: &InstalledMeasures,
    ) -> Result<Self> {
        // Elevation measures first: they define the working terrain.
        let mut dem = base_dem.clone();
        for (zone_idx, kind) in installed.iter_installed() {
            let zone = &zones[zone_idx];
            match catalog.spec(kind).effect {
                MeasureEffect::RaiseRoads(delta) => {
                    let mut cells: Vec<usize> = zone
                        .edges
                        .iter()
                        .flat_map(|&e| graph.edges()[e].footprint.iter().copied())
                        .collect();
                    cells.sort_unstable();
                    cells.dedup();
                    dem = dem.with_raised_cells(&cells, delta);
                }
                MeasureEffect::RaiseBoundary(delta) => {
                    let cells = zone_boundary_cells(&dem, &zone.cells);
                    dem = dem.with_raised_cells(&cells, delta);
                }
                _ => {}
            }
        }
        let flood = FloodModel::new(dem, border)?;

        let mut rain_multiplier = vec![T::one(); zones.len()];
        let mut drainage_bonus_m = vec![T::zero(); graph.edge_count()];
        let mut storage_m3: BTreeMap<usize, T> = BTreeMap::new();
        let mut pump_m3: BTreeMap<usize, T> = BTreeMap::new();

        for (zone_idx, kind) in installed.iter_installed() {
            let zone = &zones[zone_idx];
            match catalog.spec(kind).effect {
                MeasureEffect::Retention(factor) => {
                    rain_multiplier[zone_idx] = rain_multiplier[zone_idx] * factor;
                }
                MeasureEffect::DrainageBonus(bonus) => {
                    for &e in &zone.edges {
                        drainage_bonus_m[e] = drainage_bonus_m[e] + bonus;
                    }
                }
                MeasureEffect::Storage(v) => {
                    if let Some(pit) = zone_target_pit(&flood, zone) {
                        let slot = storage_m3.entry(pit).or_insert_with(T::zero);
                        *slot = *slot + v;
                    }
                }
                MeasureEffect::Pump(v) => {
                    if let Some(pit) = zone_target_pit(&flood, zone) {
                        let slot = pump_m3.entry(pit).or_insert_with(T::zero);
                        *slot = *slot + v;
                    }
                }
                MeasureEffect::None
                | MeasureEffect::RaiseRoads(_)
                | MeasureEffect::RaiseBoundary(_) => {}
            }
        }

        Ok(Self {
            rain_multiplier,
            drainage_bonus_m,
            storage_m3,
            pump_m3,
            flood,
        })
    }
}

/// Install `(zone, kind)` and recompute the derived parameter bundle.
///
/// Rejects NoOp (domain error), unknown zones (domain error) and duplicate
/// installs (state error) before any state changes.
pub fn apply_measure<T: Scalar>(
    installed: &mut InstalledMeasures,
    zone: usize,
    kind: MeasureKind,
    base_dem: &DemGrid<T>,
    border: BorderPolicy,
    graph: &TransportGraph<T>,
    zones: &[Zone],
    catalog: &MeasureCatalog<T>,
) -> Result<EffectBundle<T>> {
    installed.install(zone, kind)?;
    EffectBundle::rebuild(base_dem, border, graph, zones, catalog, installed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dem::DemGrid;
    use crate::scalar::cast;

    pub(crate) fn default_catalog<T: Scalar>() -> MeasureCatalog<T> {
        MeasureCatalog::new(vec![
            MeasureSpec {
                kind: MeasureKind::NoOp,
                capital_cost: T::zero(),
                annual_maintenance: T::zero(),
                effect: MeasureEffect::None,
            },
            MeasureSpec {
                kind: MeasureKind::RoadDrainageUpgrade,
                capital_cost: cast(80.0),
                annual_maintenance: cast(4.0),
                effect: MeasureEffect::DrainageBonus(cast(0.15)),
            },
            MeasureSpec {
                kind: MeasureKind::PermeablePaving,
                capital_cost: cast(60.0),
                annual_maintenance: cast(3.0),
                effect: MeasureEffect::Retention(cast(0.7)),
            },
            MeasureSpec {
                kind: MeasureKind::RetentionBasin,
                capital_cost: cast(100.0),
                annual_maintenance: cast(5.0),
                effect: MeasureEffect::Storage(cast(60.0)),
            },
            MeasureSpec {
                kind: MeasureKind::GreenRoof,
                capital_cost: cast(70.0),
                annual_maintenance: cast(3.5),
                effect: MeasureEffect::Retention(cast(0.85)),
            },
            MeasureSpec {
                kind: MeasureKind::PumpStation,
                capital_cost: cast(120.0),
                annual_maintenance: cast(6.0),
                effect: MeasureEffect::Pump(cast(40.0)),
            },
            MeasureSpec {
                kind: MeasureKind::RoadElevation,
                capital_cost: cast(150.0),
                annual_maintenance: cast(2.0),
                effect: MeasureEffect::RaiseRoads(cast(0.5)),
            },
            MeasureSpec {
                kind: MeasureKind::PerimeterBerm,
                capital_cost: cast(90.0),
                annual_maintenance: cast(2.5),
                effect: MeasureEffect::RaiseBoundary(cast(0.5)),
            },
        ])
        .unwrap()
    }

    fn tiny_setup() -> (DemGrid<f64>, TransportGraph<f64>, Vec<Zone>) {
        // 3x3 bowl: centre pit, ring at 1.
        let z = vec![1.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0];
        let dem = DemGrid::from_elevations(3, 3, 1.0, z).unwrap();
        let graph = TransportGraph::new(
            vec![
                ("a".into(), 0.0, 0.0, None),
                ("b".into(), 2.0, 0.0, None),
            ],
            vec![("e0".into(), "a".into(), "b".into(), 30.0, true, vec![4])],
        )
        .unwrap();
        let zones = vec![Zone {
            id: "z0".into(),
            name: "only".into(),
            population: 10,
            centroid: 0,
            cells: (0..9).collect(),
            edges: vec![0],
        }];
        (dem, graph, zones)
    }

    #[test]
    fn catalog_requires_all_eight_kinds() {
        let mut specs = default_catalog::<f64>().specs().to_vec();
        specs.retain(|s| s.kind != MeasureKind::PumpStation);
        let err = MeasureCatalog::new(specs).unwrap_err();
        assert!(err.to_string().contains("pump_station"), "{err}");
    }

    #[test]
    fn noop_must_be_free() {
        let mut specs = default_catalog::<f64>().specs().to_vec();
        specs[0].capital_cost = 1.0;
        assert!(MeasureCatalog::new(specs).is_err());
    }

    #[test]
    fn retention_factors_compose_multiplicatively() {
        let (dem, graph, zones) = tiny_setup();
        let catalog = default_catalog::<f64>();
        let mut installed = InstalledMeasures::new(1);
        apply_measure(
            &mut installed,
            0,
            MeasureKind::PermeablePaving,
            &dem,
            BorderPolicy::Closed,
            &graph,
            &zones,
            &catalog,
        )
        .unwrap();
        let bundle = apply_measure(
            &mut installed,
            0,
            MeasureKind::GreenRoof,
            &dem,
            BorderPolicy::Closed,
            &graph,
            &zones,
            &catalog,
        )
        .unwrap();
        assert!((bundle.rain_multiplier[0] - 0.595).abs() < 1e-12);
    }

    #[test]
    fn noop_not_installable() {
        let (dem, graph, zones) = tiny_setup();
        let catalog = default_catalog::<f64>();
        let mut installed = InstalledMeasures::new(1);
        let err = apply_measure(
            &mut installed,
            0,
            MeasureKind::NoOp,
            &dem,
            BorderPolicy::Closed,
            &graph,
            &zones,
            &catalog,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Domain(_)), "{err}");
    }

    #[test]
    fn duplicate_install_is_state_error() {
        let (dem, graph, zones) = tiny_setup();
        let catalog = default_catalog::<f64>();
        let mut installed = InstalledMeasures::new(1);
        apply_measure(
            &mut installed,
            0,
            MeasureKind::RetentionBasin,
            &dem,
            BorderPolicy::Closed,
            &graph,
            &zones,
            &catalog,
        )
        .unwrap();
        let err = apply_measure(
            &mut installed,
            0,
            MeasureKind::RetentionBasin,
            &dem,
            BorderPolicy::Closed,
            &graph,
            &zones,
            &catalog,
        )
        .unwrap_err();
        assert!(matches!(err, Error::State(_)), "{err}");
    }

    #[test]
    fn storage_attaches_to_zone_pit() {
        let (dem, graph, zones) = tiny_setup();
        let catalog = default_catalog::<f64>();
        let mut installed = InstalledMeasures::new(1);
        let bundle = apply_measure(
            &mut installed,
            0,
            MeasureKind::RetentionBasin,
            &dem,
            BorderPolicy::Closed,
            &graph,
            &zones,
            &catalog,
        )
        .unwrap();
        assert_eq!(bundle.storage_m3.get(&4), Some(&60.0));
    }

    #[test]
    fn step_costs_bookkeeping() {
        let catalog = default_catalog::<f64>();
        let mut installed = InstalledMeasures::new(2);
        let (a, m) = step_costs(&installed, None, &catalog);
        assert_eq!((a, m), (0.0, 0.0));
        let (a, m) = step_costs(&installed, Some(MeasureKind::RetentionBasin), &catalog);
        assert_eq!((a, m), (100.0, 5.0));
        installed.install(0, MeasureKind::RetentionBasin).unwrap();
        let (a, m) = step_costs(&installed, None, &catalog);
        assert_eq!((a, m), (0.0, 5.0));
    }

    #[test]
    fn base_dem_never_mutated_by_elevation_measures() {
        let (dem, graph, zones) = tiny_setup();
        let before = dem.clone();
        let catalog = default_catalog::<f64>();
        let mut installed = InstalledMeasures::new(1);
        let bundle = apply_measure(
            &mut installed,
            0,
            MeasureKind::RoadElevation,
            &dem,
            BorderPolicy::Closed,
            &graph,
            &zones,
            &catalog,
        )
        .unwrap();
        assert_eq!(dem, before);
        // Footprint cell 4 was raised on the working DEM.
        assert!((bundle.flood.dem().elevation(4) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn boundary_cells_of_inner_block() {
        let dem = DemGrid::<f64>::from_elevations(4, 4, 1.0, vec![0.0; 16]).unwrap();
        // 2x2 block in the middle: every member touches outside.
        let cells = vec![5, 6, 9, 10];
        let boundary = zone_boundary_cells(&dem, &cells);
        assert_eq!(boundary, cells);
        // Whole grid: only the ring is boundary.
        let all: Vec<usize> = (0..16).collect();
        let boundary = zone_boundary_cells(&dem, &all);
        assert_eq!(boundary.len(), 12);
        assert!(!boundary.contains(&5));
    }
}
