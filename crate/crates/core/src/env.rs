//! The sequential decision environment: one step per year over the horizon,
//! composing rainfall → flood → transport → QoL into the reward
//! `R = β_Q·ΣᵢQᵢ + β_A·A + β_M·M`.
//!
//! Step order: (1) install the action and charge its capital cost, (2) charge
//! maintenance for everything installed, (3) sample this year's rain event,
//! (4) scale per-zone effective rain by the retention multipliers, (5) flood
//! the working DEM, (6) degrade edge times, (7) per-zone shortest times →
//! accessibility → Qᵢ, (8) reward, (9) advance the year.
//!
//! Rain is sampled *after* the action: the agent cannot react to the current
//! year's weather — adaptation is anticipatory.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::actions::{self, EffectBundle, InstalledMeasures, MeasureKind};
use crate::agents::{Environment, ExplicitMdp, MdpArm};
use crate::error::{Error, Result};
use crate::flood::BorderPolicy;
use crate::qol::qol;
use crate::rainfall::DEFAULT_YEAR_RANGE;
use crate::rng::RandomSource;
use crate::scalar::{cast, Scalar};
use crate::scenario::Scenario;
use crate::transport::{accessibility, AccessProfile, ImpedanceParams};

/// Eq-1 β coefficients. Defaults make costs penalties; signs are the user's
/// to choose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardWeights<T> {
    pub beta_q: T,
    pub beta_a: T,
    pub beta_m: T,
}

impl<T: Scalar> Default for RewardWeights<T> {
    fn default() -> Self {
        Self {
            beta_q: T::one(),
            beta_a: cast(-0.001),
            beta_m: cast(-0.001),
        }
    }
}

/// Environment parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvConfig<T> {
    pub start_year: i32,
    pub end_year: i32,
    pub reward: RewardWeights<T>,
    /// Discount γ; 1.0 by default (finite horizon).
    pub discount: T,
    pub impedance: ImpedanceParams<T>,
    pub access_threshold_s: T,
    pub master_seed: u64,
    /// Measure kinds the agent may install; restricting this shrinks the
    /// action space for desk-scale studies without touching the catalog.
    pub enabled_measures: Vec<MeasureKind>,
}

impl<T: Scalar> Default for EnvConfig<T> {
    fn default() -> Self {
        Self {
            start_year: DEFAULT_YEAR_RANGE.0,
            end_year: DEFAULT_YEAR_RANGE.1,
            reward: RewardWeights::default(),
            discount: T::one(),
            impedance: ImpedanceParams::default(),
            access_threshold_s: cast(900.0),
            master_seed: 0,
            enabled_measures: MeasureKind::INSTALLABLE.to_vec(),
        }
    }
}

impl<T: Scalar> EnvConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.start_year > self.end_year {
            return Err(Error::Validation(format!(
                "horizon [{}, {}] is empty",
                self.start_year, self.end_year
            )));
        }
        if self.start_year < DEFAULT_YEAR_RANGE.0 || self.end_year > DEFAULT_YEAR_RANGE.1 {
            return Err(Error::Validation(format!(
                "horizon [{}, {}] outside the projection span [{}, {}]",
                self.start_year, self.end_year, DEFAULT_YEAR_RANGE.0, DEFAULT_YEAR_RANGE.1
            )));
        }
        if !(self.discount >= T::zero() && self.discount <= T::one()) {
            return Err(Error::Validation(format!(
                "discount must be in [0, 1], got {}",
                self.discount
            )));
        }
        if !(self.access_threshold_s > T::zero()) {
            return Err(Error::Validation(format!(
                "access threshold must be > 0, got {}",
                self.access_threshold_s
            )));
        }
        if self.enabled_measures.is_empty() {
            return Err(Error::Validation("enabled_measures must not be empty".into()));
        }
        for k in &self.enabled_measures {
            if k.installable_index().is_none() {
                return Err(Error::Validation(
                    "enabled_measures cannot include no_op".into(),
                ));
            }
        }
        self.impedance.validate()?;
        for b in [self.reward.beta_q, self.reward.beta_a, self.reward.beta_m] {
            if !b.is_finite() {
                return Err(Error::Validation(format!("β weight {b} is not finite")));
            }
        }
        Ok(())
    }

    /// Number of decision steps.
    pub fn horizon_len(&self) -> usize {
        (self.end_year - self.start_year + 1) as usize
    }
}

/// An MDP action: do nothing, or install one measure in one zone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Action {
    NoOp,
    Install { zone: usize, measure: MeasureKind },
}

impl Action {
    /// Canonical index: 0 = NoOp, then zone-major over the installable kinds.
    pub fn index(&self, _n_zones: usize) -> usize {
        match self {
            Action::NoOp => 0,
            Action::Install { zone, measure } => {
                1 + zone * MeasureKind::INSTALLABLE.len()
                    + measure.installable_index().expect("installable kind")
            }
        }
    }

    pub fn from_index(index: usize, n_zones: usize) -> Result<Action> {
        let per_zone = MeasureKind::INSTALLABLE.len();
        if index == 0 {
            return Ok(Action::NoOp);
        }
        let rest = index - 1;
        let zone = rest / per_zone;
        if zone >= n_zones {
            return Err(Error::Domain(format!(
                "action index {index} out of range for {n_zones} zones"
            )));
        }
        Ok(Action::Install {
            zone,
            measure: MeasureKind::INSTALLABLE[rest % per_zone],
        })
    }
}

/// Mutable per-episode state.
#[derive(Debug, Clone)]
struct EnvState<T> {
    year: i32,
    installed: InstalledMeasures,
    bundle: EffectBundle<T>,
    rng: rand_chacha::ChaCha8Rng,
}

/// Per-step diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo<T> {
    pub year: i32,
    pub rain_mm: T,
    pub q_by_zone: Vec<T>,
    pub capital_cost: T,
    pub maintenance_cost: T,
    pub flooded_cells: usize,
    pub access_by_zone: Vec<AccessProfile<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult<T> {
    pub observation: String,
    pub reward: T,
    pub done: bool,
    pub info: StepInfo<T>,
}

/// The simulation environment. One instance owns one episode at a time;
/// scenario data is shared immutably.
#[derive(Debug, Clone)]
pub struct Env<T> {
    scenario: Arc<Scenario<T>>,
    cfg: EnvConfig<T>,
    /// Cell → zone index (zones never overlap).
    cell_zone: Vec<Option<usize>>,
    rng_src: RandomSource,
    pristine: EffectBundle<T>,
    state: Option<EnvState<T>>,
}

impl<T: Scalar> Env<T> {
    /// Build an environment from a scenario, using the scenario's own env
    /// config.
    pub fn new(scenario: Arc<Scenario<T>>) -> Result<Self> {
        let cfg = scenario.env.clone();
        Self::with_config(scenario, cfg)
    }

    pub fn with_config(scenario: Arc<Scenario<T>>, cfg: EnvConfig<T>) -> Result<Self> {
        cfg.validate()?;
        let mut cell_zone = vec![None; scenario.dem.len()];
        for (zi, z) in scenario.zones.iter().enumerate() {
            for &c in &z.cells {
                cell_zone[c] = Some(zi);
            }
        }
        let pristine = EffectBundle::rebuild(
            &scenario.dem,
            border_policy(scenario.open_border),
            &scenario.graph,
            &scenario.zones,
            &scenario.catalog,
            &InstalledMeasures::new(scenario.zones.len()),
        )?;
        let rng_src = RandomSource::new(cfg.master_seed);
        Ok(Self {
            scenario,
            cfg,
            cell_zone,
            rng_src,
            pristine,
            state: None,
        })
    }

    pub fn scenario(&self) -> &Scenario<T> {
        &self.scenario
    }

    pub fn config(&self) -> &EnvConfig<T> {
        &self.cfg
    }

    pub fn n_zones(&self) -> usize {
        self.scenario.zones.len()
    }

    /// Total number of action slots (installed or not).
    pub fn action_slots(&self) -> usize {
        1 + self.n_zones() * MeasureKind::INSTALLABLE.len()
    }

    /// Start an episode; the rain stream is the child stream
    /// `episode_seed` of the master seed.
    pub fn reset_episode(&mut self, episode_seed: u64) -> Result<String> {
        let state = EnvState {
            year: self.cfg.start_year,
            installed: InstalledMeasures::new(self.n_zones()),
            bundle: self.pristine.clone(),
            rng: self.rng_src.stream(episode_seed),
        };
        self.state = Some(state);
        Ok(self.encode_state().unwrap())
    }

    /// Canonical observation key: year index plus the install bit matrix,
    /// zone-major. Injective over (year, installs) and stable across runs.
    pub fn encode_state(&self) -> Result<String> {
        let st = self
            .state
            .as_ref()
            .ok_or_else(|| Error::State("environment not reset".into()))?;
        Ok(encode_key(
            (st.year - self.cfg.start_year) as usize,
            st.installed.bits(),
            self.n_zones(),
        ))
    }

    /// True once the year has advanced past the horizon end.
    pub fn is_done(&self) -> bool {
        self.state
            .as_ref()
            .map(|s| s.year > self.cfg.end_year)
            .unwrap_or(true)
    }

    pub fn current_year(&self) -> Option<i32> {
        self.state.as_ref().map(|s| s.year)
    }

    /// Actions legal in the current state: NoOp plus every enabled,
    /// not-yet-installed (zone, measure) pair.
    pub fn legal_actions(&self) -> Result<Vec<usize>> {
        let st = self
            .state
            .as_ref()
            .ok_or_else(|| Error::State("environment not reset".into()))?;
        let mut out = vec![Action::NoOp.index(self.n_zones())];
        for zone in 0..self.n_zones() {
            for kind in MeasureKind::INSTALLABLE {
                if self.cfg.enabled_measures.contains(&kind)
                    && !st.installed.is_installed(zone, kind)?
                {
                    out.push(Action::Install { zone, measure: kind }.index(self.n_zones()));
                }
            }
        }
        Ok(out)
    }

    /// Advance one year.
    pub fn step_action(&mut self, action: Action) -> Result<StepResult<T>> {
        if self.state.is_none() {
            return Err(Error::State("environment not reset".into()));
        }
        if self.is_done() {
            return Err(Error::State("episode is done; reset the environment".into()));
        }

        // Validate and install before anything advances.
        let new_kind = match action {
            Action::NoOp => None,
            Action::Install { zone, measure } => {
                if !self.cfg.enabled_measures.contains(&measure) {
                    return Err(Error::Domain(format!(
                        "measure `{}` is not enabled in this scenario",
                        measure.key()
                    )));
                }
                if zone >= self.n_zones() {
                    return Err(Error::Domain(format!(
                        "zone index {zone} out of range ({} zones)",
                        self.n_zones()
                    )));
                }
                let st = self.state.as_mut().unwrap();
                let bundle = actions::apply_measure(
                    &mut st.installed,
                    zone,
                    measure,
                    &self.scenario.dem,
                    border_policy(self.scenario.open_border),
                    &self.scenario.graph,
                    &self.scenario.zones,
                    &self.scenario.catalog,
                )?;
                st.bundle = bundle;
                Some(measure)
            }
        };

        let st = self.state.as_mut().unwrap();
        let (capital, maintenance) = match new_kind {
            Some(kind) => {
                // Already installed above; maintenance covers everything now
                // installed, capital is the new measure's.
                let (_, m) = actions::step_costs(&st.installed, None, &self.scenario.catalog);
                (self.scenario.catalog.spec(kind).capital_cost, m)
            }
            None => actions::step_costs(&st.installed, None, &self.scenario.catalog),
        };

        // Sample the year's rain after the action (anticipatory adaptation).
        let event = self.scenario.rainfall.sample_event(st.year, &mut st.rng)?;
        let meters = event.intensity_mm / cast::<T>(1000.0);
        let mut rain = vec![T::zero(); self.scenario.dem.len()];
        for (i, slot) in rain.iter_mut().enumerate() {
            if self.scenario.dem.is_nodata(i) {
                continue;
            }
            let mult = match self.cell_zone[i] {
                Some(zi) => st.bundle.rain_multiplier[zi],
                None => T::one(),
            };
            *slot = meters * mult;
        }
        let depth = st
            .bundle
            .flood
            .simulate(&rain, &st.bundle.storage_m3, &st.bundle.pump_m3)?;

        let states = self.scenario.graph.effective_edge_times(
            &depth,
            &self.cfg.impedance,
            &st.bundle.drainage_bonus_m,
        )?;

        let n_zones = self.scenario.zones.len();
        let mut q_by_zone = Vec::with_capacity(n_zones);
        let mut access_by_zone = Vec::with_capacity(n_zones);
        let mut q_sum = T::zero();
        for (zi, zone) in self.scenario.zones.iter().enumerate() {
            let times = self.scenario.graph.shortest_times(&states, zone.centroid)?;
            let profile = accessibility(
                zi,
                zone,
                &self.scenario.pois,
                &times,
                self.cfg.access_threshold_s,
            )?;
            let qi = qol(&profile, &self.scenario.weights)?;
            q_sum = q_sum + qi;
            q_by_zone.push(qi);
            access_by_zone.push(profile);
        }

        let reward = self.cfg.reward.beta_q * q_sum
            + self.cfg.reward.beta_a * capital
            + self.cfg.reward.beta_m * maintenance;

        let year = st.year;
        st.year += 1;
        let done = st.year > self.cfg.end_year;
        let observation = self.encode_state()?;
        Ok(StepResult {
            observation,
            reward,
            done,
            info: StepInfo {
                year,
                rain_mm: event.intensity_mm,
                q_by_zone,
                capital_cost: capital,
                maintenance_cost: maintenance,
                flooded_cells: depth.flooded_cell_count(),
                access_by_zone,
            },
        })
    }

    /// Jump to an arbitrary (year, installed) state. The rain stream is
    /// re-derived from the episode seed; used by explicit-MDP extraction.
    pub fn restore(
        &mut self,
        year: i32,
        installed: InstalledMeasures,
        episode_seed: u64,
    ) -> Result<()> {
        if year < self.cfg.start_year || year > self.cfg.end_year + 1 {
            return Err(Error::Domain(format!(
                "year {year} outside horizon [{}, {}]",
                self.cfg.start_year, self.cfg.end_year
            )));
        }
        if installed.n_zones() != self.n_zones() {
            return Err(Error::Domain(format!(
                "install matrix has {} zones, scenario has {}",
                installed.n_zones(),
                self.n_zones()
            )));
        }
        let bundle = EffectBundle::rebuild(
            &self.scenario.dem,
            border_policy(self.scenario.open_border),
            &self.scenario.graph,
            &self.scenario.zones,
            &self.scenario.catalog,
            &installed,
        )?;
        self.state = Some(EnvState {
            year,
            installed,
            bundle,
            rng: self.rng_src.stream(episode_seed),
        });
        Ok(())
    }

    pub fn installed(&self) -> Option<&InstalledMeasures> {
        self.state.as_ref().map(|s| &s.installed)
    }
}

fn border_policy(open: bool) -> BorderPolicy {
    if open {
        BorderPolicy::Open
    } else {
        BorderPolicy::Closed
    }
}

/// Canonical state key, e.g. `y03|0110100|0000000`.
pub fn encode_key(year_index: usize, bits: &[bool], n_zones: usize) -> String {
    let per_zone = MeasureKind::INSTALLABLE.len();
    let mut key = format!("y{year_index:02}");
    for z in 0..n_zones {
        key.push('|');
        for k in 0..per_zone {
            key.push(if bits[z * per_zone + k] { '1' } else { '0' });
        }
    }
    key
}

impl<T: Scalar> Environment<T> for Env<T> {
    fn reset(&mut self, episode_seed: u64) -> Result<String> {
        self.reset_episode(episode_seed)
    }

    fn step(&mut self, action: usize) -> Result<(String, T, bool)> {
        let action = Action::from_index(action, self.n_zones())?;
        let result = self.step_action(action)?;
        Ok((result.observation, result.reward, result.done))
    }

    fn action_count(&self) -> usize {
        self.action_slots()
    }

    fn valid_actions(&self) -> Result<Vec<usize>> {
        self.legal_actions()
    }
}

/// One line of the episode trace (JSON-lines schema, versioned).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRecord<T> {
    pub trace_version: u32,
    pub episode: u64,
    pub step: usize,
    pub year: i32,
    pub action: Action,
    pub rain_mm: T,
    pub reward: T,
    pub q_by_zone: Vec<T>,
    pub capital_cost: T,
    pub maintenance_cost: T,
    pub flooded_cells: usize,
}

pub const TRACE_VERSION: u32 = 1;

impl<T: Scalar> TraceRecord<T> {
    pub fn from_step(episode: u64, step: usize, action: Action, result: &StepResult<T>) -> Self {
        Self {
            trace_version: TRACE_VERSION,
            episode,
            step,
            year: result.info.year,
            action,
            rain_mm: result.info.rain_mm,
            reward: result.reward,
            q_by_zone: result.info.q_by_zone.clone(),
            capital_cost: result.info.capital_cost,
            maintenance_cost: result.info.maintenance_cost,
            flooded_cells: result.info.flooded_cells,
        }
    }
}

/// Enumerate the environment as an explicit MDP (deterministic rain only).
///
/// States are (year, install matrix) pairs reachable from the initial state;
/// the guard rejects problems beyond 10⁶ state-action pairs.
pub fn enumerate_mdp<T: Scalar>(env: &mut Env<T>) -> Result<ExplicitMdp<T>> {
    if !env.scenario.rainfall.is_deterministic() {
        return Err(Error::Domain(
            "explicit MDP extraction needs a deterministic (constant-quantile) rainfall model"
                .into(),
        ));
    }
    let horizon = env.cfg.horizon_len();
    let n_zones = env.n_zones();

    let mut key_to_id: BTreeMap<String, usize> = BTreeMap::new();
    let mut states: Vec<(i32, InstalledMeasures)> = Vec::new();
    let mut arms: Vec<Vec<MdpArm<T>>> = Vec::new();

    let initial = (env.cfg.start_year, InstalledMeasures::new(n_zones));
    let initial_key = encode_key(0, initial.1.bits(), n_zones);
    key_to_id.insert(initial_key, 0);
    states.push(initial);
    arms.push(Vec::new());

    let mut pair_budget: usize = 0;
    let mut frontier = vec![0usize];
    while let Some(sid) = frontier.pop() {
        let (year, installed) = states[sid].clone();
        if year > env.cfg.end_year {
            continue; // terminal: no arms
        }
        env.restore(year, installed, 0)?;
        let legal = env.legal_actions()?;
        let mut state_arms = Vec::with_capacity(legal.len());
        for a in legal {
            pair_budget += 1;
            if pair_budget > 1_000_000 {
                return Err(Error::Capacity(
                    "explicit MDP exceeds 10^6 state-action pairs".into(),
                ));
            }
            env.restore(year, states[sid].1.clone(), 0)?;
            let action = Action::from_index(a, n_zones)?;
            let result = env.step_action(action)?;
            let next_year = year + 1;
            let next_installed = env.installed().unwrap().clone();
            let next_key = encode_key(
                (next_year - env.cfg.start_year) as usize,
                next_installed.bits(),
                n_zones,
            );
            let next_id = match key_to_id.get(&next_key) {
                Some(&id) => id,
                None => {
                    let id = states.len();
                    key_to_id.insert(next_key, id);
                    states.push((next_year, next_installed));
                    arms.push(Vec::new());
                    frontier.push(id);
                    id
                }
            };
            state_arms.push(MdpArm {
                action: a,
                transitions: vec![(T::one(), next_id, result.reward)],
            });
        }
        arms[sid] = state_arms;
    }

    Ok(ExplicitMdp {
        n_states: states.len(),
        horizon,
        gamma: env.cfg.discount,
        actions: arms,
        initial_state: 0,
        state_keys: key_to_id
            .into_iter()
            .map(|(k, v)| (v, k))
            .collect::<BTreeMap<usize, String>>()
            .into_values()
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn action_index_round_trip() {
        let n_zones = 3;
        for idx in 0..(1 + n_zones * 7) {
            let a = Action::from_index(idx, n_zones).unwrap();
            assert_eq!(a.index(n_zones), idx);
        }
        assert!(Action::from_index(1 + n_zones * 7, n_zones).is_err());
    }

    #[test]
    fn encode_key_is_injective_on_bits() {
        let mut bits = vec![false; 14];
        let a = encode_key(3, &bits, 2);
        bits[5] = true;
        let b = encode_key(3, &bits, 2);
        assert_ne!(a, b);
        assert_eq!(a, encode_key(3, &vec![false; 14], 2));
    }

    #[test]
    fn exhaustive_keys_distinct() {
        // 2 zones × 2 used measure slots × 3 years → 48 distinct keys.
        let mut keys = std::collections::BTreeSet::new();
        for year in 0..3usize {
            for b0 in [false, true] {
                for b1 in [false, true] {
                    for b2 in [false, true] {
                        for b3 in [false, true] {
                            let mut bits = vec![false; 14];
                            bits[0] = b0;
                            bits[1] = b1;
                            bits[7] = b2;
                            bits[8] = b3;
                            keys.insert(encode_key(year, &bits, 2));
                        }
                    }
                }
            }
        }
        assert_eq!(keys.len(), 48);
    }
}
