//! Tabular Q-learning, baseline policies, and a finite-horizon value
//! iteration solver used as a verification oracle on small instances.
//!
//! Everything is seeded and sequential: identical (env, agent config) runs
//! produce byte-identical tables and learning curves. Tie-breaking is always
//! by lowest action index.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::{cast, to_f64, Scalar};

/// Minimal episodic environment interface for tabular agents.
///
/// Action indices are dense in `0..action_count()`; index 0 is the
/// do-nothing action by convention. `valid_actions` lists the actions legal
/// in the current state (always non-empty while the episode runs).
pub trait Environment<T: Scalar> {
    fn reset(&mut self, episode_seed: u64) -> Result<String>;
    /// Returns (next state key, reward, done).
    fn step(&mut self, action: usize) -> Result<(String, T, bool)>;
    fn action_count(&self) -> usize;
    fn valid_actions(&self) -> Result<Vec<usize>>;
}

/// State-key → action-value table. Unseen states read as all zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable<T> {
    n_actions: usize,
    entries: BTreeMap<String, Vec<T>>,
}

impl<T: Scalar> QTable<T> {
    pub fn new(n_actions: usize) -> Self {
        Self {
            n_actions,
            entries: BTreeMap::new(),
        }
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, state: &str, action: usize) -> T {
        self.entries
            .get(state)
            .map(|row| row[action])
            .unwrap_or_else(T::zero)
    }

    pub fn row(&self, state: &str) -> Option<&[T]> {
        self.entries.get(state).map(|v| v.as_slice())
    }

    fn row_mut(&mut self, state: &str) -> &mut Vec<T> {
        self.entries
            .entry(state.to_string())
            .or_insert_with(|| vec![T::zero(); self.n_actions])
    }

    /// Highest value over all action slots of `state` (0 if unseen).
    pub fn max_value(&self, state: &str) -> T {
        self.entries
            .get(state)
            .map(|row| row.iter().fold(T::neg_infinity(), |a, &v| a.max(v)))
            .unwrap_or_else(T::zero)
    }

    /// Greedy action among `valid`, ties broken by lowest action index.
    pub fn greedy_action(&self, state: &str, valid: &[usize]) -> usize {
        let mut best = valid[0];
        let mut best_v = self.get(state, best);
        for &a in &valid[1..] {
            let v = self.get(state, a);
            if v > best_v {
                best = a;
                best_v = v;
            }
        }
        best
    }

    /// Canonical checkpoint: `state_key<TAB>v0,v1,...`, sorted by key.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (key, row) in &self.entries {
            out.push_str(key);
            out.push('\t');
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&format!("{v}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_tsv(text: &str, source_name: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut n_actions = None;
        for (lineno0, line) in text.lines().enumerate() {
            let lineno = lineno0 + 1;
            if line.trim().is_empty() {
                continue;
            }
            let (key, values) = line.split_once('\t').ok_or_else(|| Error::Parse {
                file: source_name.to_string(),
                line: lineno,
                message: "expected `state_key<TAB>values`".into(),
            })?;
            let row: Vec<T> = values
                .split(',')
                .map(|v| {
                    v.parse::<f64>().map(cast).map_err(|_| Error::Parse {
                        file: source_name.to_string(),
                        line: lineno,
                        message: format!("cannot parse value `{v}`"),
                    })
                })
                .collect::<Result<_>>()?;
            match n_actions {
                None => n_actions = Some(row.len()),
                Some(n) if n != row.len() => {
                    return Err(Error::Parse {
                        file: source_name.to_string(),
                        line: lineno,
                        message: format!("row has {} values, expected {n}", row.len()),
                    })
                }
                _ => {}
            }
            entries.insert(key.to_string(), row);
        }
        let n_actions = n_actions.ok_or_else(|| Error::Parse {
            file: source_name.to_string(),
            line: 0,
            message: "empty Q-table".into(),
        })?;
        Ok(Self { n_actions, entries })
    }
}

/// One Q-learning update; touches exactly the (s, a) entry.
///
/// `Q(s,a) ← Q(s,a) + α·(r + γ·max_a' Q(s',a')·[not done] − Q(s,a))`
pub fn q_update<T: Scalar>(
    table: &mut QTable<T>,
    state: &str,
    action: usize,
    reward: T,
    next_state: &str,
    done: bool,
    alpha: T,
    gamma: T,
) {
    let bootstrap = if done {
        T::zero()
    } else {
        table.max_value(next_state)
    };
    let current = table.get(state, action);
    let target = reward + gamma * bootstrap;
    let updated = current + alpha * (target - current);
    table.row_mut(state)[action] = updated;
}

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentConfig<T> {
    /// Learning rate α ∈ (0, 1].
    pub alpha: T,
    /// Discount γ (mirrors the environment's).
    pub gamma: T,
    pub eps_start: T,
    pub eps_end: T,
    /// Fraction of episodes over which ε decays linearly.
    pub eps_decay_fraction: T,
    pub episodes: usize,
    pub seed: u64,
}

impl<T: Scalar> Default for AgentConfig<T> {
    fn default() -> Self {
        Self {
            alpha: cast(0.1),
            gamma: T::one(),
            eps_start: T::one(),
            eps_end: cast(0.05),
            eps_decay_fraction: cast(0.8),
            episodes: 500,
            seed: 0,
        }
    }
}

impl<T: Scalar> AgentConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > T::zero() && self.alpha <= T::one()) {
            return Err(Error::Validation(format!(
                "alpha must be in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.eps_end >= T::zero() && self.eps_end <= self.eps_start && self.eps_start <= T::one())
        {
            return Err(Error::Validation(format!(
                "epsilon schedule must satisfy 0 <= eps_end <= eps_start <= 1, got {} and {}",
                self.eps_end, self.eps_start
            )));
        }
        if !(self.eps_decay_fraction > T::zero() && self.eps_decay_fraction <= T::one()) {
            return Err(Error::Validation(format!(
                "eps_decay_fraction must be in (0, 1], got {}",
                self.eps_decay_fraction
            )));
        }
        if self.episodes == 0 {
            return Err(Error::Validation("episodes must be > 0".into()));
        }
        Ok(())
    }

    /// Linear ε for the given episode.
    pub fn epsilon(&self, episode: usize) -> T {
        let decay_eps = (to_f64(self.eps_decay_fraction) * self.episodes as f64).ceil() as usize;
        if decay_eps <= 1 {
            return self.eps_end;
        }
        let progress = (episode as f64 / (decay_eps - 1) as f64).min(1.0);
        self.eps_start + (self.eps_end - self.eps_start) * cast(progress)
    }
}

/// One point of the learning curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint<T> {
    pub episode: usize,
    pub ret: T,
    pub epsilon: T,
}

/// Training output.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult<T> {
    pub table: QTable<T>,
    pub curve: Vec<CurvePoint<T>>,
    /// Visit counts per state key (exploration diagnostics).
    pub state_visits: BTreeMap<String, usize>,
}

/// Learning curve CSV: `episode,return,epsilon`.
pub fn curve_to_csv<T: Scalar>(curve: &[CurvePoint<T>]) -> String {
    let mut out = String::from("episode,return,epsilon\n");
    for p in curve {
        out.push_str(&format!("{},{},{}\n", p.episode, p.ret, p.epsilon));
    }
    out
}

/// Train tabular Q-learning with ε-greedy exploration.
///
/// Episode `k` resets the environment with episode seed `k`; the agent's own
/// exploration stream comes from `cfg.seed`. Fully deterministic.
pub fn train<T: Scalar, E: Environment<T>>(env: &mut E, cfg: &AgentConfig<T>) -> Result<TrainResult<T>> {
    cfg.validate()?;
    let mut table = QTable::new(env.action_count());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut curve = Vec::with_capacity(cfg.episodes);
    let mut state_visits: BTreeMap<String, usize> = BTreeMap::new();

    for episode in 0..cfg.episodes {
        let epsilon = cfg.epsilon(episode);
        let mut state = env.reset(episode as u64)?;
        *state_visits.entry(state.clone()).or_insert(0) += 1;
        let mut ret = T::zero();
        let mut discount = T::one();
        loop {
            let valid = env.valid_actions()?;
            if valid.is_empty() {
                return Err(Error::Internal("no valid actions in a live state".into()));
            }
            let explore = rng.gen::<f64>() < to_f64(epsilon);
            let action = if explore {
                valid[rng.gen_range(0..valid.len())]
            } else {
                table.greedy_action(&state, &valid)
            };
            let (next_state, reward, done) = env.step(action).map_err(|e| {
                Error::State(format!("episode {episode}, state {state}: {e}"))
            })?;
            q_update(
                &mut table, &state, action, reward, &next_state, done, cfg.alpha, cfg.gamma,
            );
            ret = ret + discount * reward;
            discount = discount * cfg.gamma;
            *state_visits.entry(next_state.clone()).or_insert(0) += 1;
            state = next_state;
            if done {
                break;
            }
        }
        curve.push(CurvePoint {
            episode,
            ret,
            epsilon,
        });
    }
    Ok(TrainResult {
        table,
        curve,
        state_visits,
    })
}

// ── explicit MDPs and value iteration ────────────────────────────────────

/// One available action in one state of an explicit MDP.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpArm<T> {
    /// Global action index (for policy comparison with learned tables).
    pub action: usize,
    /// (probability, next state, reward) triples.
    pub transitions: Vec<(T, usize, T)>,
}

/// Fully enumerated finite-horizon MDP.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitMdp<T> {
    pub n_states: usize,
    pub horizon: usize,
    pub gamma: T,
    /// Per state: the available arms. Terminal states have none.
    pub actions: Vec<Vec<MdpArm<T>>>,
    pub initial_state: usize,
    /// Optional state labels aligned with state ids (may be empty).
    pub state_keys: Vec<String>,
}

/// Value-iteration output: time-indexed values and policy.
#[derive(Debug, Clone, PartialEq)]
pub struct ViSolution<T> {
    /// `values[t][s]` = optimal return from state `s` with `horizon − t`
    /// steps remaining; `values[horizon]` is all zeros.
    pub values: Vec<Vec<T>>,
    /// `policy[t][s]` = optimal action (global index), `None` for terminal
    /// states. Ties broken by lowest action index.
    pub policy: Vec<Vec<Option<usize>>>,
}

/// Finite-horizon backward induction. Exact up to floating arithmetic.
pub fn value_iteration<T: Scalar>(mdp: &ExplicitMdp<T>) -> Result<ViSolution<T>> {
    let pairs: usize = mdp.actions.iter().map(|a| a.len()).sum();
    if pairs > 1_000_000 {
        return Err(Error::Capacity(format!(
            "explicit MDP has {pairs} state-action pairs, guard is 10^6"
        )));
    }
    for (s, arms) in mdp.actions.iter().enumerate() {
        for arm in arms {
            let total: T = arm
                .transitions
                .iter()
                .fold(T::zero(), |acc, &(p, _, _)| acc + p);
            if (total - T::one()).abs() > cast(1e-9) {
                return Err(Error::Validation(format!(
                    "state {s} action {} transition probabilities sum to {total}",
                    arm.action
                )));
            }
        }
    }

    // Evaluate arms in ascending action order so ties resolve to the lowest
    // action index regardless of storage order.
    let mut arm_order: Vec<Vec<usize>> = Vec::with_capacity(mdp.n_states);
    for arms in &mdp.actions {
        let mut idx: Vec<usize> = (0..arms.len()).collect();
        idx.sort_by_key(|&i| arms[i].action);
        arm_order.push(idx);
    }

    let mut values = vec![vec![T::zero(); mdp.n_states]; mdp.horizon + 1];
    let mut policy = vec![vec![None; mdp.n_states]; mdp.horizon];
    for t in (0..mdp.horizon).rev() {
        for s in 0..mdp.n_states {
            let mut best: Option<(usize, T)> = None;
            for &ai in &arm_order[s] {
                let arm = &mdp.actions[s][ai];
                let mut q = T::zero();
                for &(p, next, r) in &arm.transitions {
                    q = q + p * (r + mdp.gamma * values[t + 1][next]);
                }
                best = match best {
                    Some((_, bq)) if q <= bq => best,
                    _ => Some((arm.action, q)),
                };
            }
            if let Some((a, q)) = best {
                values[t][s] = q;
                policy[t][s] = Some(a);
            }
        }
    }
    Ok(ViSolution { values, policy })
}

// ── rollouts ─────────────────────────────────────────────────────────────

/// Evaluation policies.
#[derive(Debug, Clone, Copy)]
pub enum RolloutPolicy<'a, T> {
    /// Greedy over the table's values among valid actions.
    Greedy(&'a QTable<T>),
    /// Uniform over valid actions from a seeded stream.
    Random { policy_seed: u64 },
    /// Always action 0.
    DoNothing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStep<T> {
    pub state: String,
    pub action: usize,
    pub reward: T,
    pub next_state: String,
}

/// One full episode under a fixed policy.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T> {
    pub steps: Vec<TrajectoryStep<T>>,
    /// Σ γᵗ·rₜ.
    pub total_return: T,
}

pub fn rollout<T: Scalar, E: Environment<T>>(
    env: &mut E,
    policy: RolloutPolicy<'_, T>,
    gamma: T,
    episode_seed: u64,
) -> Result<Trajectory<T>> {
    let mut rng = match policy {
        RolloutPolicy::Random { policy_seed } => Some(ChaCha8Rng::seed_from_u64(policy_seed)),
        _ => None,
    };
    let mut state = env.reset(episode_seed)?;
    let mut steps = Vec::new();
    let mut total_return = T::zero();
    let mut discount = T::one();
    loop {
        let valid = env.valid_actions()?;
        if valid.is_empty() {
            return Err(Error::Internal("no valid actions in a live state".into()));
        }
        let action = match &policy {
            RolloutPolicy::Greedy(table) => table.greedy_action(&state, &valid),
            RolloutPolicy::Random { .. } => {
                let r = rng.as_mut().unwrap();
                valid[r.gen_range(0..valid.len())]
            }
            RolloutPolicy::DoNothing => 0,
        };
        let (next_state, reward, done) = env.step(action)?;
        total_return = total_return + discount * reward;
        discount = discount * gamma;
        steps.push(TrajectoryStep {
            state,
            action,
            reward,
            next_state: next_state.clone(),
        });
        state = next_state;
        if done {
            break;
        }
    }
    Ok(Trajectory {
        steps,
        total_return,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Deterministic two-armed bandit: one decision, rewards 0 / 1.
    struct Bandit {
        done: bool,
    }

    impl Environment<f64> for Bandit {
        fn reset(&mut self, _seed: u64) -> Result<String> {
            self.done = false;
            Ok("start".into())
        }
        fn step(&mut self, action: usize) -> Result<(String, f64, bool)> {
            if self.done {
                return Err(Error::State("done".into()));
            }
            self.done = true;
            Ok(("end".into(), if action == 1 { 1.0 } else { 0.0 }, true))
        }
        fn action_count(&self) -> usize {
            2
        }
        fn valid_actions(&self) -> Result<Vec<usize>> {
            Ok(vec![0, 1])
        }
    }

    /// 3-step deterministic chain; moving "right" (action 1) pays off at the
    /// end, action 0 pays a small immediate reward.
    struct Chain {
        pos: usize,
        t: usize,
    }

    impl Environment<f64> for Chain {
        fn reset(&mut self, _seed: u64) -> Result<String> {
            self.pos = 0;
            self.t = 0;
            Ok("p0t0".into())
        }
        fn step(&mut self, action: usize) -> Result<(String, f64, bool)> {
            let reward = match action {
                0 => 0.1,
                _ => {
                    self.pos += 1;
                    if self.pos == 3 {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
            self.t += 1;
            let done = self.t == 3;
            Ok((format!("p{}t{}", self.pos, self.t), reward, done))
        }
        fn action_count(&self) -> usize {
            2
        }
        fn valid_actions(&self) -> Result<Vec<usize>> {
            Ok(vec![0, 1])
        }
    }

    #[test]
    fn q_update_full_step_from_zero() {
        let mut t = QTable::<f64>::new(2);
        q_update(&mut t, "s", 1, 1.0, "s2", true, 1.0, 0.9);
        assert_eq!(t.get("s", 1), 1.0);
        assert_eq!(t.get("s", 0), 0.0);
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn q_update_myopic_limit() {
        let mut t = QTable::<f64>::new(2);
        t.row_mut("s2")[0] = 100.0;
        q_update(&mut t, "s", 0, 2.5, "s2", false, 1.0, 0.0);
        assert_eq!(t.get("s", 0), 2.5);
    }

    #[test]
    fn bandit_learns_the_good_arm() {
        let mut env = Bandit { done: false };
        let cfg = AgentConfig {
            episodes: 200,
            seed: 3,
            ..AgentConfig::default()
        };
        let result = train(&mut env, &cfg).unwrap();
        assert_eq!(result.table.greedy_action("start", &[0, 1]), 1);
        assert_eq!(result.curve.len(), 200);
        // Exploration floor: both states seen.
        assert!(result.state_visits.contains_key("start"));
        assert!(result.state_visits.contains_key("end"));
    }

    #[test]
    fn training_is_deterministic() {
        let run = || {
            let mut env = Chain { pos: 0, t: 0 };
            let cfg = AgentConfig {
                episodes: 300,
                seed: 42,
                alpha: 0.5,
                ..AgentConfig::default()
            };
            train(&mut env, &cfg).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.table.to_tsv(), b.table.to_tsv());
        assert_eq!(a.curve, b.curve);
    }

    #[test]
    fn chain_policy_matches_value_iteration_across_seeds() {
        // Explicit chain MDP: states (pos, t) flattened; 3 steps, γ = 1.
        // Optimal: always action 1 → return 1.0 (vs 0.3 for action 0 greedy).
        let mut actions = Vec::new();
        let id = |pos: usize, t: usize| t * 4 + pos;
        for s in 0..16usize {
            let (t, pos) = (s / 4, s % 4);
            if t >= 3 {
                actions.push(Vec::new());
                continue;
            }
            let stay = MdpArm {
                action: 0,
                transitions: vec![(1.0, id(pos, t + 1), 0.1)],
            };
            let next_pos = (pos + 1).min(3);
            let reward = if pos + 1 == 3 { 1.0 } else { 0.0 };
            let right = MdpArm {
                action: 1,
                transitions: vec![(1.0, id(next_pos, t + 1), reward)],
            };
            actions.push(vec![stay, right]);
        }
        let mdp = ExplicitMdp::<f64> {
            n_states: 16,
            horizon: 3,
            gamma: 1.0,
            actions,
            initial_state: 0,
            state_keys: Vec::new(),
        };
        let vi = value_iteration(&mdp).unwrap();
        let optimal = vi.values[0][0];
        assert!((optimal - 1.0).abs() < 1e-12);

        let mut agree = 0;
        for seed in 0..20u64 {
            let mut env = Chain { pos: 0, t: 0 };
            let cfg = AgentConfig {
                episodes: 400,
                seed,
                alpha: 1.0,
                ..AgentConfig::default()
            };
            let result = train(&mut env, &cfg).unwrap();
            let mut env = Chain { pos: 0, t: 0 };
            let traj = rollout(
                &mut env,
                RolloutPolicy::Greedy(&result.table),
                1.0,
                0,
            )
            .unwrap();
            if (traj.total_return - optimal).abs() < 1e-9 {
                agree += 1;
            }
        }
        assert!(agree >= 19, "only {agree}/20 seeds reached the optimum");
    }

    #[test]
    fn vi_zero_mdp() {
        let mdp = ExplicitMdp::<f64> {
            n_states: 1,
            horizon: 5,
            gamma: 1.0,
            actions: vec![vec![MdpArm {
                action: 0,
                transitions: vec![(1.0, 0, 0.0)],
            }]],
            initial_state: 0,
            state_keys: Vec::new(),
        };
        let vi = value_iteration(&mdp).unwrap();
        for t in 0..=5 {
            assert_eq!(vi.values[t][0], 0.0);
        }
    }

    #[test]
    fn vi_two_state_switch() {
        // Hand Bellman backup: horizon 2, rewards stay 0 / switch 1 → V = 2.
        let arm = |a: usize, next: usize, r: f64| MdpArm {
            action: a,
            transitions: vec![(1.0, next, r)],
        };
        let mdp = ExplicitMdp {
            n_states: 2,
            horizon: 2,
            gamma: 1.0,
            actions: vec![
                vec![arm(0, 0, 0.0), arm(1, 1, 1.0)],
                vec![arm(0, 1, 0.0), arm(1, 0, 1.0)],
            ],
            initial_state: 0,
            state_keys: Vec::new(),
        };
        let vi = value_iteration(&mdp).unwrap();
        assert!((vi.values[0][0] - 2.0).abs() < 1e-12);
        assert_eq!(vi.policy[0][0], Some(1));
    }

    #[test]
    fn vi_size_guard() {
        let arms: Vec<MdpArm<f64>> = (0..1001)
            .map(|a| MdpArm {
                action: a,
                transitions: vec![(1.0, 0, 0.0)],
            })
            .collect();
        let mdp = ExplicitMdp {
            n_states: 1000,
            horizon: 1,
            gamma: 1.0,
            actions: vec![arms; 1000],
            initial_state: 0,
            state_keys: Vec::new(),
        };
        assert!(matches!(value_iteration(&mdp), Err(Error::Capacity(_))));
    }

    #[test]
    fn do_nothing_rollout_uses_action_zero() {
        let mut env = Chain { pos: 0, t: 0 };
        let traj = rollout(&mut env, RolloutPolicy::DoNothing, 1.0, 0).unwrap();
        assert_eq!(traj.steps.len(), 3);
        assert!(traj.steps.iter().all(|s| s.action == 0));
        assert!((traj.total_return - 0.3).abs() < 1e-12);
        // Contiguity invariant.
        for w in traj.steps.windows(2) {
            assert_eq!(w[0].next_state, w[1].state);
        }
    }

    #[test]
    fn qtable_tsv_round_trip() {
        let mut t = QTable::<f64>::new(3);
        t.row_mut("y00|000")[1] = 1.5;
        t.row_mut("y01|100")[2] = -0.25;
        let text = t.to_tsv();
        let back = QTable::<f64>::parse_tsv(&text, "mem").unwrap();
        assert_eq!(t, back);
        assert_eq!(back.to_tsv(), text);
    }

    #[test]
    fn reward_shift_covariance() {
        // Adding k to every reward shifts V by k·(steps remaining) and
        // leaves the optimal policy unchanged. Tree-shaped MDP so no two
        // action paths collect the same reward multiset (no ties to flip).
        let arm = |a: usize, next: usize, r: f64| MdpArm {
            action: a,
            transitions: vec![(1.0, next, r)],
        };
        let build = |k: f64| ExplicitMdp::<f64> {
            n_states: 5,
            horizon: 2,
            gamma: 1.0,
            actions: vec![
                vec![arm(0, 1, 0.3 + k), arm(1, 2, 0.8 + k)],
                vec![arm(0, 3, 0.25 + k), arm(1, 4, 0.6 + k)],
                vec![arm(0, 3, 0.15 + k), arm(1, 4, 0.35 + k)],
                vec![arm(0, 3, 0.01 + k)],
                vec![arm(0, 4, 0.02 + k)],
            ],
            initial_state: 0,
            state_keys: Vec::new(),
        };
        let base = value_iteration(&build(0.0)).unwrap();
        let shifted = value_iteration(&build(5.0)).unwrap();
        assert_eq!(base.policy, shifted.policy);
        assert_eq!(base.policy[0][0], Some(1));
        for t in 0..2 {
            for s in 0..5 {
                let expect = base.values[t][s] + 5.0 * (2 - t) as f64;
                assert!((shifted.values[t][s] - expect).abs() < 1e-9);
            }
        }
    }
}
