//! Scenario ingestion: one declarative TOML config referencing CSV and
//! ESRI-ASCII data files, loaded into a fully validated [`Scenario`].
//!
//! Loading performs every module's invariant checks before anything runs;
//! failures name the file, line and violated rule. A loaded scenario can be
//! re-serialized in canonical form; the SHA-256 of that form is the scenario
//! content hash recorded in run manifests (fitted weights are resolved into
//! the canonical form, so the hash covers exactly the bytes that affect
//! results).

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::actions::{MeasureCatalog, MeasureEffect, MeasureKind, MeasureSpec};
use crate::dem::DemGrid;
use crate::env::{EnvConfig, RewardWeights};
use crate::error::{Error, Result};
use crate::qol::{fit_weights, FitConfig, FitReport, QoLWeights, SurveyData};
use crate::rainfall::{QuantileTable, RainfallModel, DEFAULT_YEAR_RANGE};
use crate::scalar::{cast, to_f64, Scalar};
use crate::transport::{ImpedanceParams, Poi, TransportGraph, Zone};

/// A fully loaded, validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario<T> {
    pub name: String,
    pub dem: DemGrid<T>,
    pub open_border: bool,
    pub graph: TransportGraph<T>,
    pub zones: Vec<Zone>,
    pub pois: Vec<Poi>,
    pub rainfall: RainfallModel<T>,
    pub catalog: MeasureCatalog<T>,
    pub weights: QoLWeights<T>,
    /// Present when the weights were fitted from survey data at load time.
    pub fit_report: Option<FitReport<T>>,
    pub env: EnvConfig<T>,
}

// ── raw config schema ────────────────────────────────────────────────────

#[derive(Debug, Serialize, Deserialize)]
struct RawConfig {
    scenario: RawScenario,
    rainfall: RawRainfall,
    #[serde(default)]
    impedance: RawImpedance,
    actions: BTreeMap<String, RawMeasure>,
    qol: RawQol,
    #[serde(default)]
    env: RawEnv,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawScenario {
    name: String,
    dem: String,
    nodes: String,
    edges: String,
    zones: String,
    pois: String,
    #[serde(default = "default_true")]
    open_border: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Serialize, Deserialize)]
struct RawRainfall {
    scenario_name: String,
    tables: Vec<RawTable>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawTable {
    anchor_year: i32,
    /// Ordered (p, mm_per_day) pairs.
    points: Vec<(f64, f64)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawImpedance {
    d_slow_m: f64,
    d_block_m: f64,
    slow_multiplier: f64,
}

impl Default for RawImpedance {
    fn default() -> Self {
        Self {
            d_slow_m: 0.10,
            d_block_m: 0.30,
            slow_multiplier: 4.0,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RawMeasure {
    capital_cost: f64,
    annual_maintenance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    drainage_bonus_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    retention_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    storage_m3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pump_m3: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    elevation_delta_m: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawQol {
    /// Inline weights; mutually exclusive with `survey`.
    #[serde(skip_serializing_if = "Option::is_none")]
    weights: Option<BTreeMap<String, f64>>,
    /// Survey CSV path; weights are fitted at load time.
    #[serde(skip_serializing_if = "Option::is_none")]
    survey: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    fit: Option<RawFit>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RawFit {
    #[serde(default = "default_lambda")]
    l2_lambda: f64,
    #[serde(default = "default_max_iter")]
    max_iterations: usize,
    #[serde(default = "default_tol")]
    tolerance: f64,
    #[serde(default = "default_true")]
    include_intercept: bool,
}

fn default_lambda() -> f64 {
    1.0
}
fn default_max_iter() -> usize {
    200
}
fn default_tol() -> f64 {
    1e-8
}

#[derive(Debug, Serialize, Deserialize)]
struct RawEnv {
    start_year: i32,
    end_year: i32,
    beta_q: f64,
    beta_a: f64,
    beta_m: f64,
    discount: f64,
    access_threshold_s: f64,
    master_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    enabled_measures: Option<Vec<MeasureKind>>,
}

impl Default for RawEnv {
    fn default() -> Self {
        Self {
            start_year: DEFAULT_YEAR_RANGE.0,
            end_year: DEFAULT_YEAR_RANGE.1,
            beta_q: 1.0,
            beta_a: -0.001,
            beta_m: -0.001,
            discount: 1.0,
            access_threshold_s: 900.0,
            master_seed: 0,
            enabled_measures: None,
        }
    }
}

// ── CSV helpers ──────────────────────────────────────────────────────────

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))
}

fn split_fields(line: &str) -> Vec<&str> {
    line.split(',').map(str::trim).collect()
}

/// Parse `r:c` into a linear cell index over the DEM.
fn parse_cell<T: Scalar>(
    token: &str,
    dem: &DemGrid<T>,
    file: &str,
    line: usize,
) -> Result<usize> {
    let mut it = token.split(':');
    let bad = || Error::Parse {
        file: file.to_string(),
        line,
        message: format!("cell reference `{token}` is not `row:col`"),
    };
    let r: usize = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
    let c: usize = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
    if it.next().is_some() {
        return Err(bad());
    }
    if r >= dem.nrows() || c >= dem.ncols() {
        return Err(Error::Reference(format!(
            "{file}:{line}: cell {r}:{c} outside {}x{} DEM",
            dem.nrows(),
            dem.ncols()
        )));
    }
    Ok(dem.idx(r, c))
}

fn parse_bool(token: &str, file: &str, line: usize) -> Result<bool> {
    match token {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        other => Err(Error::Parse {
            file: file.to_string(),
            line,
            message: format!("expected boolean (0/1/true/false), got `{other}`"),
        }),
    }
}

fn expect_header(text: &str, expected: &[&str], alt: Option<&[&str]>, file: &str) -> Result<bool> {
    let first = text.lines().next().unwrap_or("");
    let cols = split_fields(first);
    if cols == expected {
        return Ok(false);
    }
    if let Some(alt_cols) = alt {
        if cols == alt_cols {
            return Ok(true);
        }
    }
    Err(Error::Parse {
        file: file.to_string(),
        line: 1,
        message: format!("unexpected header `{first}`, expected `{}`", expected.join(",")),
    })
}

fn parse_nodes<T: Scalar>(
    text: &str,
    dem: &DemGrid<T>,
    file: &str,
) -> Result<Vec<(String, f64, f64, Option<usize>)>> {
    let with_cells = expect_header(
        text,
        &["node_id", "x", "y"],
        Some(&["node_id", "x", "y", "cell_row", "cell_col"]),
        file,
    )?;
    let mut out = Vec::new();
    for (lineno0, line) in text.lines().enumerate().skip(1) {
        let lineno = lineno0 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f = split_fields(line);
        let want = if with_cells { 5 } else { 3 };
        if f.len() != want {
            return Err(Error::Parse {
                file: file.to_string(),
                line: lineno,
                message: format!("expected {want} fields, found {}", f.len()),
            });
        }
        let parse_f64 = |tok: &str| -> Result<f64> {
            tok.parse().map_err(|_| Error::Parse {
                file: file.to_string(),
                line: lineno,
                message: format!("cannot parse number `{tok}`"),
            })
        };
        let x = parse_f64(f[1])?;
        let y = parse_f64(f[2])?;
        let cell = if with_cells {
            Some(parse_cell(&format!("{}:{}", f[3], f[4]), dem, file, lineno)?)
        } else {
            None
        };
        out.push((f[0].to_string(), x, y, cell));
    }
    Ok(out)
}

type RawEdge<T> = (String, String, String, T, bool, Vec<usize>);

fn parse_edges<T: Scalar>(text: &str, dem: &DemGrid<T>, file: &str) -> Result<Vec<RawEdge<T>>> {
    expect_header(
        text,
        &["edge_id", "from", "to", "time_s", "bidirectional", "footprint"],
        None,
        file,
    )?;
    let mut out = Vec::new();
    for (lineno0, line) in text.lines().enumerate().skip(1) {
        let lineno = lineno0 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f = split_fields(line);
        if f.len() != 6 {
            return Err(Error::Parse {
                file: file.to_string(),
                line: lineno,
                message: format!("expected 6 fields, found {}", f.len()),
            });
        }
        let time_s: f64 = f[3].parse().map_err(|_| Error::Parse {
            file: file.to_string(),
            line: lineno,
            message: format!("cannot parse travel time `{}`", f[3]),
        })?;
        let bidirectional = parse_bool(f[4], file, lineno)?;
        let mut footprint = Vec::new();
        if !f[5].is_empty() {
            for tok in f[5].split(';') {
                footprint.push(parse_cell(tok, dem, file, lineno)?);
            }
        }
        out.push((
            f[0].to_string(),
            f[1].to_string(),
            f[2].to_string(),
            cast(time_s),
            bidirectional,
            footprint,
        ));
    }
    Ok(out)
}

fn parse_pois<T: Scalar>(
    text: &str,
    graph: &TransportGraph<T>,
    file: &str,
) -> Result<Vec<Poi>> {
    expect_header(text, &["poi_id", "category", "node_id"], None, file)?;
    let mut out = Vec::new();
    for (lineno0, line) in text.lines().enumerate().skip(1) {
        let lineno = lineno0 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f = split_fields(line);
        if f.len() != 3 {
            return Err(Error::Parse {
                file: file.to_string(),
                line: lineno,
                message: format!("expected 3 fields, found {}", f.len()),
            });
        }
        if f[1].is_empty() {
            return Err(Error::Validation(format!(
                "{file}:{lineno}: POI `{}` has an empty category",
                f[0]
            )));
        }
        let node = graph.node_index(f[2]).ok_or_else(|| {
            Error::Reference(format!(
                "{file}:{lineno}: POI `{}` references missing node `{}`",
                f[0], f[2]
            ))
        })?;
        out.push(Poi {
            id: f[0].to_string(),
            category: f[1].to_string(),
            node,
        });
    }
    Ok(out)
}

fn parse_zones<T: Scalar>(
    text: &str,
    dem: &DemGrid<T>,
    graph: &TransportGraph<T>,
    file: &str,
) -> Result<Vec<Zone>> {
    expect_header(
        text,
        &["zone_id", "name", "population", "centroid_node", "cells", "edges"],
        None,
        file,
    )?;
    let edge_index: BTreeMap<&str, usize> = graph
        .edges()
        .iter()
        .enumerate()
        .map(|(i, e)| (e.id.as_str(), i))
        .collect();
    let mut out = Vec::new();
    for (lineno0, line) in text.lines().enumerate().skip(1) {
        let lineno = lineno0 + 1;
        if line.trim().is_empty() {
            continue;
        }
        let f = split_fields(line);
        if f.len() != 6 {
            return Err(Error::Parse {
                file: file.to_string(),
                line: lineno,
                message: format!("expected 6 fields, found {}", f.len()),
            });
        }
        let population: u32 = f[2].parse().map_err(|_| Error::Parse {
            file: file.to_string(),
            line: lineno,
            message: format!("cannot parse population `{}`", f[2]),
        })?;
        if population == 0 {
            return Err(Error::Validation(format!(
                "{file}:{lineno}: zone `{}` population must be > 0",
                f[0]
            )));
        }
        let centroid = graph.node_index(f[3]).ok_or_else(|| {
            Error::Reference(format!(
                "{file}:{lineno}: zone `{}` centroid references missing node `{}`",
                f[0], f[3]
            ))
        })?;
        let mut cells = Vec::new();
        if !f[4].is_empty() {
            for tok in f[4].split(';') {
                cells.push(parse_cell(tok, dem, file, lineno)?);
            }
        }
        let mut edges = Vec::new();
        if !f[5].is_empty() {
            for tok in f[5].split(';') {
                let ei = edge_index.get(tok).ok_or_else(|| {
                    Error::Reference(format!(
                        "{file}:{lineno}: zone `{}` references missing edge `{tok}`",
                        f[0]
                    ))
                })?;
                edges.push(*ei);
            }
        }
        out.push(Zone {
            id: f[0].to_string(),
            name: f[1].to_string(),
            population,
            centroid,
            cells,
            edges,
        });
    }
    Ok(out)
}

// ── catalog assembly ─────────────────────────────────────────────────────

fn build_catalog<T: Scalar>(raw: &BTreeMap<String, RawMeasure>) -> Result<MeasureCatalog<T>> {
    let mut specs = Vec::new();
    for (key, m) in raw {
        let kind = MeasureKind::from_key(key)
            .ok_or_else(|| Error::Validation(format!("unknown measure kind `{key}`")))?;
        let param = |v: Option<f64>, name: &str| -> Result<T> {
            v.map(cast).ok_or_else(|| {
                Error::Validation(format!("measure `{key}` is missing `{name}`"))
            })
        };
        let effect = match kind {
            MeasureKind::NoOp => MeasureEffect::None,
            MeasureKind::RoadDrainageUpgrade => {
                MeasureEffect::DrainageBonus(param(m.drainage_bonus_m, "drainage_bonus_m")?)
            }
            MeasureKind::PermeablePaving | MeasureKind::GreenRoof => {
                MeasureEffect::Retention(param(m.retention_factor, "retention_factor")?)
            }
            MeasureKind::RetentionBasin => {
                MeasureEffect::Storage(param(m.storage_m3, "storage_m3")?)
            }
            MeasureKind::PumpStation => MeasureEffect::Pump(param(m.pump_m3, "pump_m3")?),
            MeasureKind::RoadElevation => {
                MeasureEffect::RaiseRoads(param(m.elevation_delta_m, "elevation_delta_m")?)
            }
            MeasureKind::PerimeterBerm => {
                MeasureEffect::RaiseBoundary(param(m.elevation_delta_m, "elevation_delta_m")?)
            }
        };
        specs.push(MeasureSpec {
            kind,
            capital_cost: cast(m.capital_cost),
            annual_maintenance: cast(m.annual_maintenance),
            effect,
        });
    }
    MeasureCatalog::new(specs)
}

// ── loading ──────────────────────────────────────────────────────────────

/// Load and fully validate a scenario from a TOML config file.
pub fn load_scenario<T: Scalar>(config_path: impl AsRef<Path>) -> Result<Scenario<T>> {
    let config_path = config_path.as_ref();
    let text = read_file(config_path)?;
    let raw: RawConfig = toml::from_str(&text).map_err(|e| Error::Parse {
        file: config_path.display().to_string(),
        line: 0,
        message: e.to_string(),
    })?;
    let base_dir = config_path.parent().unwrap_or(Path::new("."));
    load_from_raw(raw, base_dir)
}

fn load_from_raw<T: Scalar>(raw: RawConfig, base_dir: &Path) -> Result<Scenario<T>> {
    let path_of = |rel: &str| -> PathBuf { base_dir.join(rel) };

    let dem_path = path_of(&raw.scenario.dem);
    let dem = DemGrid::<T>::read_ascii(&dem_path)?;

    let nodes_path = path_of(&raw.scenario.nodes);
    let nodes = parse_nodes(&read_file(&nodes_path)?, &dem, &nodes_path.display().to_string())?;
    let edges_path = path_of(&raw.scenario.edges);
    let edges = parse_edges(&read_file(&edges_path)?, &dem, &edges_path.display().to_string())?;
    let graph = TransportGraph::new(nodes, edges)?;
    graph.validate_against_dem(&dem)?;

    let pois_path = path_of(&raw.scenario.pois);
    let pois = parse_pois(&read_file(&pois_path)?, &graph, &pois_path.display().to_string())?;
    let zones_path = path_of(&raw.scenario.zones);
    let zones = parse_zones(
        &read_file(&zones_path)?,
        &dem,
        &graph,
        &zones_path.display().to_string(),
    )?;
    if zones.is_empty() {
        return Err(Error::Validation("scenario needs at least one zone".into()));
    }

    // Zones must not claim the same cell twice.
    let mut seen: BTreeMap<usize, &str> = BTreeMap::new();
    for z in &zones {
        for &c in &z.cells {
            if let Some(prev) = seen.insert(c, &z.id) {
                return Err(Error::Validation(format!(
                    "cell {c} belongs to both zone `{prev}` and zone `{}`",
                    z.id
                )));
            }
        }
    }

    let mut tables = Vec::new();
    for t in &raw.rainfall.tables {
        let points: Vec<(T, T)> = t.points.iter().map(|&(p, v)| (cast(p), cast(v))).collect();
        tables.push(QuantileTable::new(t.anchor_year, points)?);
    }
    let rainfall = RainfallModel::new(&raw.rainfall.scenario_name, tables, DEFAULT_YEAR_RANGE)?;

    let catalog = build_catalog(&raw.actions)?;

    let impedance = ImpedanceParams {
        d_slow: cast(raw.impedance.d_slow_m),
        d_block: cast(raw.impedance.d_block_m),
        slow_multiplier: cast(raw.impedance.slow_multiplier),
    };
    impedance.validate()?;

    // Weights: inline, or fitted from survey data.
    let (weights, fit_report) = match (&raw.qol.weights, &raw.qol.survey) {
        (Some(w), None) => {
            let raw_w: BTreeMap<String, T> =
                w.iter().map(|(k, &v)| (k.clone(), cast(v))).collect();
            (QoLWeights::from_raw(raw_w)?, None)
        }
        (None, Some(survey_rel)) => {
            let survey_path = path_of(survey_rel);
            let survey = SurveyData::<T>::parse_csv(
                &read_file(&survey_path)?,
                &survey_path.display().to_string(),
            )?;
            let fit_cfg = raw
                .qol
                .fit
                .as_ref()
                .map(|f| FitConfig {
                    l2_lambda: cast(f.l2_lambda),
                    max_iterations: f.max_iterations,
                    tolerance: cast(f.tolerance),
                    include_intercept: f.include_intercept,
                })
                .unwrap_or_default();
            let (w, report) = fit_weights(&survey, &fit_cfg)?;
            (w, Some(report))
        }
        (Some(_), Some(_)) => {
            return Err(Error::Validation(
                "[qol] must give either `weights` or `survey`, not both".into(),
            ))
        }
        (None, None) => {
            return Err(Error::Validation(
                "[qol] must give either inline `weights` or a `survey` file".into(),
            ))
        }
    };

    // Every POI category must have a weight.
    let weight_cats: BTreeSet<&String> = weights.categories().collect();
    for p in &pois {
        if !weight_cats.contains(&p.category) {
            return Err(Error::Reference(format!(
                "POI category `{}` (poi `{}`) has no QoL weight",
                p.category, p.id
            )));
        }
    }

    let env = EnvConfig {
        start_year: raw.env.start_year,
        end_year: raw.env.end_year,
        reward: RewardWeights {
            beta_q: cast(raw.env.beta_q),
            beta_a: cast(raw.env.beta_a),
            beta_m: cast(raw.env.beta_m),
        },
        discount: cast(raw.env.discount),
        impedance,
        access_threshold_s: cast(raw.env.access_threshold_s),
        master_seed: raw.env.master_seed,
        enabled_measures: raw
            .env
            .enabled_measures
            .clone()
            .unwrap_or_else(|| MeasureKind::INSTALLABLE.to_vec()),
    };
    env.validate()?;

    Ok(Scenario {
        name: raw.scenario.name,
        dem,
        open_border: raw.scenario.open_border,
        graph,
        zones,
        pois,
        rainfall,
        catalog,
        weights,
        fit_report,
        env,
    })
}

// ── canonical serialization & hashing ────────────────────────────────────

impl<T: Scalar> Scenario<T> {
    fn raw_config(&self) -> RawConfig {
        let mut actions = BTreeMap::new();
        for s in self.catalog.specs() {
            let mut m = RawMeasure {
                capital_cost: to_f64(s.capital_cost),
                annual_maintenance: to_f64(s.annual_maintenance),
                drainage_bonus_m: None,
                retention_factor: None,
                storage_m3: None,
                pump_m3: None,
                elevation_delta_m: None,
            };
            match s.effect {
                MeasureEffect::None => {}
                MeasureEffect::DrainageBonus(v) => m.drainage_bonus_m = Some(to_f64(v)),
                MeasureEffect::Retention(v) => m.retention_factor = Some(to_f64(v)),
                MeasureEffect::Storage(v) => m.storage_m3 = Some(to_f64(v)),
                MeasureEffect::Pump(v) => m.pump_m3 = Some(to_f64(v)),
                MeasureEffect::RaiseRoads(v) | MeasureEffect::RaiseBoundary(v) => {
                    m.elevation_delta_m = Some(to_f64(v))
                }
            }
            actions.insert(s.kind.key().to_string(), m);
        }
        RawConfig {
            scenario: RawScenario {
                name: self.name.clone(),
                dem: "dem.asc".into(),
                nodes: "nodes.csv".into(),
                edges: "edges.csv".into(),
                zones: "zones.csv".into(),
                pois: "pois.csv".into(),
                open_border: self.open_border,
            },
            rainfall: RawRainfall {
                scenario_name: self.rainfall.scenario_name().to_string(),
                tables: self
                    .rainfall
                    .tables()
                    .iter()
                    .map(|t| RawTable {
                        anchor_year: t.anchor_year(),
                        points: t
                            .points()
                            .iter()
                            .map(|&(p, v)| (to_f64(p), to_f64(v)))
                            .collect(),
                    })
                    .collect(),
            },
            impedance: RawImpedance {
                d_slow_m: to_f64(self.env.impedance.d_slow),
                d_block_m: to_f64(self.env.impedance.d_block),
                slow_multiplier: to_f64(self.env.impedance.slow_multiplier),
            },
            actions,
            qol: RawQol {
                // Canonical form always carries resolved weights.
                weights: Some(
                    self.weights
                        .iter()
                        .map(|(c, &w)| (c.clone(), to_f64(w)))
                        .collect(),
                ),
                survey: None,
                fit: None,
            },
            env: RawEnv {
                start_year: self.env.start_year,
                end_year: self.env.end_year,
                beta_q: to_f64(self.env.reward.beta_q),
                beta_a: to_f64(self.env.reward.beta_a),
                beta_m: to_f64(self.env.reward.beta_m),
                discount: to_f64(self.env.discount),
                access_threshold_s: to_f64(self.env.access_threshold_s),
                master_seed: self.env.master_seed,
                enabled_measures: Some(self.env.enabled_measures.clone()),
            },
        }
    }

    pub fn nodes_csv(&self) -> String {
        let any_cells = (0..self.graph.node_count()).any(|i| self.graph.node_cell(i).is_some());
        let mut out = String::from(if any_cells {
            "node_id,x,y,cell_row,cell_col\n"
        } else {
            "node_id,x,y\n"
        });
        for i in 0..self.graph.node_count() {
            let (x, y) = self.graph.node_position(i);
            if any_cells {
                let (r, c) = match self.graph.node_cell(i) {
                    Some(cell) => self.dem.row_col(cell),
                    None => (0, 0),
                };
                out.push_str(&format!("{},{},{},{},{}\n", self.graph.node_id(i), x, y, r, c));
            } else {
                out.push_str(&format!("{},{},{}\n", self.graph.node_id(i), x, y));
            }
        }
        out
    }

    pub fn edges_csv(&self) -> String {
        let mut out = String::from("edge_id,from,to,time_s,bidirectional,footprint\n");
        for e in self.graph.edges() {
            let fp: Vec<String> = e
                .footprint
                .iter()
                .map(|&cell| {
                    let (r, c) = self.dem.row_col(cell);
                    format!("{r}:{c}")
                })
                .collect();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.id,
                self.graph.node_id(e.from),
                self.graph.node_id(e.to),
                e.time_s,
                if e.bidirectional { 1 } else { 0 },
                fp.join(";")
            ));
        }
        out
    }

    pub fn zones_csv(&self) -> String {
        let mut out = String::from("zone_id,name,population,centroid_node,cells,edges\n");
        for z in &self.zones {
            let cells: Vec<String> = z
                .cells
                .iter()
                .map(|&cell| {
                    let (r, c) = self.dem.row_col(cell);
                    format!("{r}:{c}")
                })
                .collect();
            let edges: Vec<String> = z
                .edges
                .iter()
                .map(|&e| self.graph.edges()[e].id.clone())
                .collect();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                z.id,
                z.name,
                z.population,
                self.graph.node_id(z.centroid),
                cells.join(";"),
                edges.join(";")
            ));
        }
        out
    }

    pub fn pois_csv(&self) -> String {
        let mut out = String::from("poi_id,category,node_id\n");
        for p in &self.pois {
            out.push_str(&format!(
                "{},{},{}\n",
                p.id,
                p.category,
                self.graph.node_id(p.node)
            ));
        }
        out
    }

    pub fn config_toml(&self) -> String {
        toml::to_string(&self.raw_config()).expect("scenario config serializes")
    }

    /// Canonical byte stream covering everything that affects results.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for (name, content) in [
            ("config.toml", self.config_toml()),
            ("dem.asc", self.dem.to_ascii()),
            ("nodes.csv", self.nodes_csv()),
            ("edges.csv", self.edges_csv()),
            ("zones.csv", self.zones_csv()),
            ("pois.csv", self.pois_csv()),
        ] {
            out.extend_from_slice(name.as_bytes());
            out.push(0);
            out.extend_from_slice(content.as_bytes());
            out.push(0);
        }
        out
    }

    /// SHA-256 of [`Self::canonical_bytes`], hex-encoded.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Write the canonical scenario files into `dir` (config plus data files).
    /// Returns the config path.
    pub fn write_to_dir(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        let write = |name: &str, content: String| -> Result<()> {
            let p = dir.join(name);
            std::fs::write(&p, content).map_err(|e| Error::io(p.display().to_string(), e))
        };
        write("dem.asc", self.dem.to_ascii())?;
        write("nodes.csv", self.nodes_csv())?;
        write("edges.csv", self.edges_csv())?;
        write("zones.csv", self.zones_csv())?;
        write("pois.csv", self.pois_csv())?;
        write("config.toml", self.config_toml())?;
        Ok(dir.join("config.toml"))
    }
}
