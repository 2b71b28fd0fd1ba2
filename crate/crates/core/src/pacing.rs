//! Online bidding strategies driven round by round through `bid` / `observe`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed when checking that an expenditure does not exceed the bid.
pub const OVERCHARGE_SLACK: f64 = 1e-12;
/// Upper cap on the default maximum shading.
pub const DEFAULT_MU_BAR_CAP: f64 = 100.0;

/// A bidder in a sequence of second-price auctions. Calls must alternate:
/// `bid(v_t)`, then `observe(z_t)` with the realized expenditure.
pub trait Strategy {
    fn name(&self) -> &'static str;
    fn bid(&mut self, value: f64) -> Result<f64>;
    fn observe(&mut self, spent: f64) -> Result<()>;
    fn remaining_budget(&self) -> f64;
    /// Current shading multiplier, for strategies that have one.
    fn shading(&self) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    AwaitingValue,
    AwaitingExpenditure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacerConfig {
    pub budget: f64,
    pub horizon: usize,
    /// Per-round target spend of each episode.
    pub plan: Vec<f64>,
    pub eta: f64,
    pub mu_bar: f64,
    pub mu_init: f64,
}

impl PacerConfig {
    /// Config with `eta = tau^(-1/2)`, `mu_bar = min(h / min plan, 100)`, `mu_init = 0`.
    pub fn with_defaults(budget: f64, horizon: usize, plan: Vec<f64>, value_bound: f64) -> Result<Self> {
        if plan.is_empty() || horizon % plan.len() != 0 {
            return Err(Error::InvalidConfig(format!("{horizon} rounds cannot be split into {} episodes", plan.len())));
        }
        let tau = horizon / plan.len();
        let config = Self {
            budget,
            horizon,
            eta: default_eta(tau),
            mu_bar: default_mu_bar(value_bound, &plan),
            plan,
            mu_init: 0.0,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn episodes(&self) -> usize {
        self.plan.len()
    }

    pub fn rounds_per_episode(&self) -> usize {
        self.horizon / self.plan.len().max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.budget >= 0.0 && self.budget.is_finite()) {
            return bad(format!("budget must be finite and nonnegative, got {}", self.budget));
        }
        if self.plan.is_empty() || self.horizon == 0 || self.horizon % self.plan.len() != 0 {
            return bad(format!("{} rounds cannot be split into {} episodes", self.horizon, self.plan.len()));
        }
        if self.plan.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
            return bad("plan entries must be finite and nonnegative".into());
        }
        let planned = self.rounds_per_episode() as f64 * self.plan.iter().sum::<f64>();
        if planned > self.budget * (1.0 + 1e-9) + 1e-12 {
            return bad(format!("plan spends {planned} which exceeds the budget {}", self.budget));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return bad(format!("step size must be finite and nonnegative, got {}", self.eta));
        }
        if !(self.mu_bar > 0.0 && self.mu_bar.is_finite()) {
            return bad(format!("max shading must be positive, got {}", self.mu_bar));
        }
        if !(0.0..=self.mu_bar).contains(&self.mu_init) {
            return bad(format!("initial shading {} outside [0, {}]", self.mu_init, self.mu_bar));
        }
        Ok(())
    }
}

pub fn default_eta(rounds_per_episode: usize) -> f64 {
    (rounds_per_episode.max(1) as f64).powf(-0.5)
}

pub fn default_mu_bar(value_bound: f64, plan: &[f64]) -> f64 {
    let min_rate = plan.iter().copied().fold(f64::INFINITY, f64::min);
    let mu_bar = value_bound / min_rate;
    if mu_bar.is_finite() && mu_bar > 0.0 {
        mu_bar.min(DEFAULT_MU_BAR_CAP)
    } else {
        DEFAULT_MU_BAR_CAP
    }
}

/// Snapshot of the pacer between rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacerState {
    pub mu: f64,
    /// 1-based index of the round being played or about to be played.
    pub round: usize,
    /// 1-based episode index.
    pub episode: usize,
    pub episode_budget: f64,
    pub global_budget: f64,
    pub phase: Phase,
}

/// Dual-gradient pacer that tracks a per-episode spend plan and carries
/// unspent episode budget forward.
#[derive(Debug, Clone)]
pub struct EpisodicPacer {
    config: PacerConfig,
    state: PacerState,
    last_bid: f64,
    name: &'static str,
}

impl EpisodicPacer {
    pub fn new(config: PacerConfig) -> Result<Self> {
        config.validate()?;
        let tau = config.rounds_per_episode() as f64;
        let state = PacerState {
            mu: config.mu_init,
            round: 1,
            episode: 1,
            episode_budget: config.plan[0] * tau,
            global_budget: config.budget,
            phase: Phase::AwaitingValue,
        };
        Ok(Self { config, state, last_bid: 0.0, name: "changing_spend" })
    }

    pub fn config(&self) -> &PacerConfig {
        &self.config
    }

    pub fn state(&self) -> &PacerState {
        &self.state
    }
}

impl Strategy for EpisodicPacer {
    fn name(&self) -> &'static str {
        self.name
    }

    fn bid(&mut self, value: f64) -> Result<f64> {
        if self.state.phase != Phase::AwaitingValue {
            return Err(Error::ProtocolViolation("bid called while awaiting an expenditure"));
        }
        if self.state.round > self.config.horizon {
            return Err(Error::ProtocolViolation("bid called after the final round"));
        }
        let shaded = value.max(0.0) / (1.0 + self.state.mu);
        let b = shaded.min(self.state.episode_budget).min(self.state.global_budget).max(0.0);
        self.last_bid = b;
        self.state.phase = Phase::AwaitingExpenditure;
        Ok(b)
    }

    fn observe(&mut self, spent: f64) -> Result<()> {
        if self.state.phase != Phase::AwaitingExpenditure {
            return Err(Error::ProtocolViolation("observe called before a bid"));
        }
        if !(spent >= 0.0) || spent > self.last_bid + OVERCHARGE_SLACK {
            return Err(Error::Overcharge { spent, bid: self.last_bid });
        }
        let cfg = &self.config;
        let e = self.state.episode - 1;
        let rate = cfg.plan[e];
        self.state.mu = (self.state.mu - cfg.eta * (rate - spent)).clamp(0.0, cfg.mu_bar);
        self.state.global_budget = (self.state.global_budget - spent).max(0.0);
        self.state.episode_budget = (self.state.episode_budget - spent).max(0.0);
        let tau = cfg.rounds_per_episode();
        if self.state.round % tau == 0 && self.state.episode < cfg.episodes() {
            self.state.episode += 1;
            self.state.episode_budget += cfg.plan[self.state.episode - 1] * tau as f64;
        }
        self.state.round += 1;
        self.state.phase = Phase::AwaitingValue;
        Ok(())
    }

    fn remaining_budget(&self) -> f64 {
        self.state.global_budget
    }

    fn shading(&self) -> Option<f64> {
        Some(self.state.mu)
    }
}

/// Single-episode pacer targeting the uniform rate `B / T`.
pub fn fixed_rate_pacer(budget: f64, horizon: usize, eta: f64, mu_bar: f64) -> Result<EpisodicPacer> {
    if horizon == 0 {
        return Err(Error::InvalidConfig("horizon must be positive".into()));
    }
    let config = PacerConfig { budget, horizon, plan: vec![budget / horizon as f64], eta, mu_bar, mu_init: 0.0 };
    let mut pacer = EpisodicPacer::new(config)?;
    pacer.name = "fixed_spend_bg19";
    Ok(pacer)
}

/// Bids `min(beta v, remaining budget)`.
#[derive(Debug, Clone)]
pub struct MultiplierStrategy {
    beta: f64,
    remaining: f64,
    last_bid: f64,
    phase: Phase,
    name: &'static str,
}

impl MultiplierStrategy {
    pub fn new(beta: f64, budget: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidConfig(format!("multiplier must lie in (0, 1], got {beta}")));
        }
        if !(budget >= 0.0 && budget.is_finite()) {
            return Err(Error::InvalidConfig(format!("budget must be finite and nonnegative, got {budget}")));
        }
        Ok(Self { beta, remaining: budget, last_bid: 0.0, phase: Phase::AwaitingValue, name: "fixed_multiplier" })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

impl Strategy for MultiplierStrategy {
    fn name(&self) -> &'static str {
        self.name
    }

    fn bid(&mut self, value: f64) -> Result<f64> {
        if self.phase != Phase::AwaitingValue {
            return Err(Error::ProtocolViolation("bid called while awaiting an expenditure"));
        }
        self.last_bid = (self.beta * value.max(0.0)).min(self.remaining);
        self.phase = Phase::AwaitingExpenditure;
        Ok(self.last_bid)
    }

    fn observe(&mut self, spent: f64) -> Result<()> {
        if self.phase != Phase::AwaitingExpenditure {
            return Err(Error::ProtocolViolation("observe called before a bid"));
        }
        if !(spent >= 0.0) || spent > self.last_bid + OVERCHARGE_SLACK {
            return Err(Error::Overcharge { spent, bid: self.last_bid });
        }
        self.remaining = (self.remaining - spent).max(0.0);
        self.phase = Phase::AwaitingValue;
        Ok(())
    }

    fn remaining_budget(&self) -> f64 {
        self.remaining
    }
}

/// Bids `min(v, remaining budget)`.
pub fn truthful_strategy(budget: f64) -> MultiplierStrategy {
    let mut s = MultiplierStrategy::new(1.0, budget.max(0.0)).expect("beta = 1 is valid");
    s.name = "truthful";
    s
}

pub fn fixed_multiplier_strategy(beta: f64, budget: f64) -> Result<MultiplierStrategy> {
    MultiplierStrategy::new(beta, budget)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(plan: Vec<f64>, eta: f64) -> PacerConfig {
        PacerConfig { budget: 10.0, horizon: 10, plan, eta, mu_bar: 10.0, mu_init: 0.0 }
    }

    #[test]
    fn initial_episode_budget() {
        let p = EpisodicPacer::new(cfg(vec![0.4, 0.6], 0.1)).unwrap();
        assert_eq!(p.state().episode_budget, 2.0);
        assert_eq!(p.state().global_budget, 10.0);
        assert_eq!(p.state().round, 1);
        assert_eq!(p.state().episode, 1);
    }

    #[test]
    fn overbudget_plan_rejected() {
        assert!(matches!(EpisodicPacer::new(cfg(vec![1.5, 1.0], 0.1)), Err(Error::InvalidConfig(_))));
        assert!(matches!(EpisodicPacer::new(cfg(vec![0.5, 0.5, 0.5], 0.1)), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn bid_is_three_way_min() {
        let mut c = cfg(vec![1.0, 1.0], 0.1);
        c.mu_init = 1.0;
        let mut p = EpisodicPacer::new(c).unwrap();
        assert_eq!(p.bid(4.0).unwrap(), 2.0);
        p.observe(0.0).unwrap();

        let mut p = EpisodicPacer::new(PacerConfig { budget: 1.0, horizon: 2, plan: vec![0.25, 0.25], eta: 0.1, mu_bar: 1.0, mu_init: 0.0 }).unwrap();
        assert_eq!(p.bid(4.0).unwrap(), 0.25);
        p.observe(0.0).unwrap();

        let mut c = cfg(vec![0.4, 0.6], 0.1);
        c.mu_init = 0.5;
        let mut p = EpisodicPacer::new(c).unwrap();
        assert_eq!(p.bid(0.0).unwrap(), 0.0);
    }

    #[test]
    fn dual_update_and_projection() {
        let mut p = EpisodicPacer::new(PacerConfig {
            budget: 100.0,
            horizon: 10,
            plan: vec![0.3],
            eta: 0.1,
            mu_bar: 10.0,
            mu_init: 0.5,
        })
        .unwrap();
        p.bid(10.0).unwrap();
        p.observe(0.5).unwrap();
        assert!((p.state().mu - 0.52).abs() < 1e-12);

        let mut p = EpisodicPacer::new(PacerConfig { budget: 100.0, horizon: 10, plan: vec![0.3], eta: 0.1, mu_bar: 10.0, mu_init: 0.0 }).unwrap();
        p.bid(1.0).unwrap();
        p.observe(0.0).unwrap();
        assert_eq!(p.state().mu, 0.0);
    }

    #[test]
    fn carry_over_at_rollover() {
        let mut p = EpisodicPacer::new(cfg(vec![0.4, 0.6], 0.1)).unwrap();
        for _ in 0..5 {
            p.bid(0.0).unwrap();
            p.observe(0.0).unwrap();
        }
        assert_eq!(p.state().episode, 2);
        assert!((p.state().episode_budget - 5.0).abs() < 1e-12);
    }

    #[test]
    fn protocol_and_overcharge() {
        let mut p = EpisodicPacer::new(cfg(vec![0.4, 0.6], 0.1)).unwrap();
        assert!(matches!(p.observe(0.0), Err(Error::ProtocolViolation(_))));
        let b = p.bid(1.0).unwrap();
        assert!(matches!(p.bid(1.0), Err(Error::ProtocolViolation(_))));
        assert!(matches!(p.observe(b + 1.0), Err(Error::Overcharge { .. })));
    }

    #[test]
    fn zero_step_keeps_mu() {
        let mut p = fixed_rate_pacer(5.0, 10, 0.0, 3.0).unwrap();
        for v in [1.0, 2.0, 0.5] {
            let b = p.bid(v).unwrap();
            p.observe(b * 0.5).unwrap();
            assert_eq!(p.state().mu, 0.0);
        }
    }

    #[test]
    fn baselines() {
        let mut t = truthful_strategy(1.2);
        assert_eq!(t.bid(3.0).unwrap(), 1.2);
        t.observe(1.2).unwrap();
        assert_eq!(t.bid(3.0).unwrap(), 0.0);
        t.observe(0.0).unwrap();

        let mut m = fixed_multiplier_strategy(0.5, 10.0).unwrap();
        assert_eq!(m.bid(3.0).unwrap(), 1.5);
        assert!(fixed_multiplier_strategy(0.0, 1.0).is_err());
        assert!(fixed_multiplier_strategy(1.5, 1.0).is_err());
        assert_eq!(truthful_strategy(1.0).name(), "truthful");
    }

    #[test]
    fn default_parameters() {
        let c = PacerConfig::with_defaults(10.0, 100, vec![0.05, 0.05], 2.0).unwrap();
        assert!((c.eta - 50f64.powf(-0.5)).abs() < 1e-15);
        assert_eq!(c.mu_bar, 40.0);
        assert_eq!(c.mu_init, 0.0);
        assert_eq!(default_mu_bar(2.0, &[0.0, 0.1]), DEFAULT_MU_BAR_CAP);
    }
}
