//! The switching coordinator: an interrupt-driven state machine that decides
//! which configuration is active and for how long.
//!
//! The coordinator never touches hardware or raw buffer contents. It reads
//! network status through the [`Controller`] interface, runs the configured
//! strategy, and asks the controller to execute reconfiguration plans; the
//! controller performs atomic operations only. Recalculations are triggered
//! periodically, by buffer-critical notifications, or both, and a grace time
//! after each reconfiguration batches notification bursts into one joint
//! recalculation.

use std::collections::BTreeSet;

use log::debug;
use thiserror::Error;

use crate::model::{Configuration, Mode, NetworkStructure, StrategyKind, StrategySettings};
use crate::optimize::{self, OptimizeError, Schedule};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoordinatorError {
    #[error("notification for unknown link {link}")]
    UnknownLink { link: String },
    #[error("recalc_period must be positive in periodic or hybrid mode")]
    BadRecalcPeriod,
    #[error("grace_time must be non-negative")]
    BadGraceTime,
    #[error("config change before any schedule was calculated")]
    NoSchedule,
    #[error("schedule entry references unknown configuration {config}")]
    UnknownConfiguration { config: String },
    #[error("strategy failed: {0}")]
    Strategy(#[from] OptimizeError),
}

/// Events delivered to the coordinator, in non-decreasing time order.
#[derive(Debug, Clone, PartialEq)]
pub enum CoordinatorEvent {
    RecalcInterrupt { time: f64 },
    ConfigChangeInterrupt { time: f64, epoch: u64 },
    BufferCriticalNotification { time: f64, link_id: String },
    /// End of a grace window with buffered notifications to handle jointly.
    GraceExpiry { time: f64 },
}

impl CoordinatorEvent {
    pub fn time(&self) -> f64 {
        match self {
            CoordinatorEvent::RecalcInterrupt { time }
            | CoordinatorEvent::ConfigChangeInterrupt { time, .. }
            | CoordinatorEvent::BufferCriticalNotification { time, .. }
            | CoordinatorEvent::GraceExpiry { time } => *time,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CoordinatorEvent::RecalcInterrupt { .. } => "recalc",
            CoordinatorEvent::ConfigChangeInterrupt { .. } => "config_change",
            CoordinatorEvent::BufferCriticalNotification { .. } => "buffer_critical",
            CoordinatorEvent::GraceExpiry { .. } => "grace_expiry",
        }
    }
}

/// Atomic reconfiguration commands derived from an ongoing/target diff.
/// Execution order is fixed: all deactivations, then the light-path batch,
/// then all activations.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReconfigurationPlan {
    pub deactivate: BTreeSet<String>,
    pub lightpath_changes: Vec<String>,
    pub activate: BTreeSet<String>,
}

impl ReconfigurationPlan {
    pub fn is_empty(&self) -> bool {
        self.deactivate.is_empty() && self.activate.is_empty()
    }
}

/// Computes the plan that turns `ongoing` into `target`.
///
/// Physical links active in both configurations are left untouched. The
/// light-path batch repoints every resource that is released by a deactivated
/// link and immediately claimed by an activated one.
pub fn diff_configurations(
    structure: &NetworkStructure,
    ongoing: &Configuration,
    target: &Configuration,
) -> ReconfigurationPlan {
    let ongoing_ids: BTreeSet<&str> = ongoing.physical_link_ids().collect();
    let target_ids: BTreeSet<&str> = target.physical_link_ids().collect();

    let deactivate: BTreeSet<String> =
        ongoing_ids.difference(&target_ids).map(|id| id.to_string()).collect();
    let activate: BTreeSet<String> =
        target_ids.difference(&ongoing_ids).map(|id| id.to_string()).collect();

    let resources_of = |ids: &BTreeSet<String>| -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for link in structure.links() {
            for physical in &link.physical_links {
                if ids.contains(&physical.id) {
                    out.extend(physical.resources.iter().map(|r| r.as_str().to_string()));
                }
            }
        }
        out
    };
    let released = resources_of(&deactivate);
    let claimed = resources_of(&activate);
    let lightpath_changes = released
        .intersection(&claimed)
        .map(|resource| format!("repoint {resource}"))
        .collect();

    ReconfigurationPlan { deactivate, lightpath_changes, activate }
}

/// What the coordinator wants done after handling one event: interrupts to
/// schedule, plus the reconfiguration plan if the event caused one.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventOutcome {
    pub interrupts: Vec<CoordinatorEvent>,
    pub plan: Option<ReconfigurationPlan>,
}

/// The SDN-controller surface the coordinator programs against. `simenv`
/// provides the in-process implementation.
pub trait Controller {
    /// Current list of feasible configurations.
    fn configurations(&self) -> Vec<Configuration>;
    /// Current per-link buffer fills and consumption rates.
    fn state(&self) -> crate::model::NetworkState;
    /// Executes a plan (deactivations, light paths, activations, in that
    /// order) and returns its completion time.
    fn execute_plan(&mut self, time: f64, plan: &ReconfigurationPlan) -> f64;
    /// Enables or disables buffer-critical notifications toward the
    /// coordinator.
    fn subscribe_notifications(&mut self, enabled: bool);
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoordinatorConfig {
    pub strategy: StrategyKind,
    pub mode: Mode,
    pub grace_time: f64,
    pub recalc_period: f64,
}

impl CoordinatorConfig {
    pub fn from_settings(settings: &StrategySettings) -> Self {
        CoordinatorConfig {
            strategy: settings.strategy,
            mode: settings.mode,
            grace_time: settings.grace_time,
            recalc_period: settings.recalc_period,
        }
    }
}

#[derive(Debug)]
pub struct Coordinator {
    structure: NetworkStructure,
    config: CoordinatorConfig,
    schedule: Option<Schedule>,
    /// Configurations cached from the last `get network status`.
    known_configs: Vec<Configuration>,
    next_entry: usize,
    /// Monotone schedule version; config-change interrupts from an older
    /// schedule are ignored.
    epoch: u64,
    ongoing: Configuration,
    last_reconfig_complete: f64,
    /// Time of the armed recalculation, if any. One slot: the earliest
    /// request wins, later interrupts for other times are stale.
    armed_recalc: Option<f64>,
    grace_check_armed: bool,
    buffered_notifications: BTreeSet<String>,
}

impl Coordinator {
    pub fn new(
        structure: NetworkStructure,
        config: CoordinatorConfig,
    ) -> Result<Self, CoordinatorError> {
        if config.mode.periodic() && !(config.recalc_period > 0.0) {
            return Err(CoordinatorError::BadRecalcPeriod);
        }
        if config.grace_time < 0.0 {
            return Err(CoordinatorError::BadGraceTime);
        }
        Ok(Coordinator {
            structure,
            config,
            schedule: None,
            known_configs: Vec::new(),
            next_entry: 0,
            epoch: 0,
            ongoing: Configuration { id: String::new(), active_links: Vec::new() },
            last_reconfig_complete: f64::NEG_INFINITY,
            armed_recalc: None,
            grace_check_armed: false,
            buffered_notifications: BTreeSet::new(),
        })
    }

    pub fn config(&self) -> &CoordinatorConfig {
        &self.config
    }

    /// The configuration currently applied, empty before the first plan.
    pub fn ongoing(&self) -> &Configuration {
        &self.ongoing
    }

    /// Subscribes notifications according to the mode and arms the initial
    /// recalculation at `time`.
    pub fn start(&mut self, time: f64, controller: &mut dyn Controller) -> EventOutcome {
        controller.subscribe_notifications(self.config.mode.subscribes_notifications());
        let mut outcome = EventOutcome::default();
        self.arm_recalc(time, &mut outcome);
        outcome
    }

    pub fn handle_event(
        &mut self,
        event: CoordinatorEvent,
        controller: &mut dyn Controller,
    ) -> Result<EventOutcome, CoordinatorError> {
        let mut outcome = EventOutcome::default();
        match event {
            CoordinatorEvent::RecalcInterrupt { time } => {
                if self.armed_recalc != Some(time) {
                    debug!("t={time} event=recalc stale=true");
                    return Ok(outcome);
                }
                self.armed_recalc = None;
                self.recalculate(time, controller, &mut outcome)?;
            }
            CoordinatorEvent::ConfigChangeInterrupt { time, epoch } => {
                if epoch != self.epoch {
                    debug!("t={time} event=config_change stale=true");
                    return Ok(outcome);
                }
                self.change_configuration(time, controller, &mut outcome)?;
            }
            CoordinatorEvent::BufferCriticalNotification { time, link_id } => {
                if self.structure.link_index(&link_id).is_none() {
                    return Err(CoordinatorError::UnknownLink { link: link_id });
                }
                let grace_end = self.last_reconfig_complete + self.config.grace_time;
                if time < grace_end {
                    self.buffered_notifications.insert(link_id.clone());
                    debug!(
                        "t={time} event=buffer_critical link={link_id} buffered=true pending={}",
                        self.buffered_notifications.len()
                    );
                    if !self.grace_check_armed {
                        self.grace_check_armed = true;
                        outcome.interrupts.push(CoordinatorEvent::GraceExpiry { time: grace_end });
                    }
                } else {
                    debug!("t={time} event=buffer_critical link={link_id} buffered=false");
                    self.arm_recalc(time, &mut outcome);
                }
            }
            CoordinatorEvent::GraceExpiry { time } => {
                let grace_end = self.last_reconfig_complete + self.config.grace_time;
                if time < grace_end {
                    // A newer reconfiguration moved the window; check again
                    // when it really ends.
                    outcome.interrupts.push(CoordinatorEvent::GraceExpiry { time: grace_end });
                    return Ok(outcome);
                }
                self.grace_check_armed = false;
                let pending = self.buffered_notifications.len();
                self.buffered_notifications.clear();
                // Joint handling works from fresh status, not the buffered
                // ids: a link that went critical without re-notifying (it
                // never recovered past its threshold) is picked up here too.
                let state = controller.state();
                let critical = state
                    .links
                    .iter()
                    .zip(self.structure.links())
                    .any(|(s, l)| s.fill_level < l.critical_threshold);
                debug!("t={time} event=grace_expiry pending={pending} critical={critical}");
                if critical {
                    self.arm_recalc(time, &mut outcome);
                    // Links below threshold stay silent (hysteresis), so the
                    // check keeps watch until everyone has recovered.
                    self.grace_check_armed = true;
                    outcome
                        .interrupts
                        .push(CoordinatorEvent::GraceExpiry { time: time + self.config.grace_time });
                }
            }
        }
        Ok(outcome)
    }

    fn arm_recalc(&mut self, time: f64, outcome: &mut EventOutcome) {
        match self.armed_recalc {
            Some(armed) if armed <= time => {}
            _ => {
                self.armed_recalc = Some(time);
                outcome.interrupts.push(CoordinatorEvent::RecalcInterrupt { time });
            }
        }
    }

    /// The `get network status` / `calculate configurations` procedure.
    fn recalculate(
        &mut self,
        time: f64,
        controller: &mut dyn Controller,
        outcome: &mut EventOutcome,
    ) -> Result<(), CoordinatorError> {
        self.known_configs = controller.configurations();
        let state = controller.state();
        let structure = self.structure.with_configurations(self.known_configs.clone());
        let eta = state.consumption_weights();
        let matrix = optimize::build_matrices(&structure, &eta)?;

        let schedule = match self.config.strategy {
            StrategyKind::Fmcb => {
                let ranking = optimize::criticality_ranking(&state, &structure, &eta)?;
                optimize::fmcb_select(&matrix, &ranking)?
            }
            StrategyKind::Mmak => {
                let (mix, _) = optimize::mmak_solve(&matrix)?;
                optimize::schedule_from_mix(&matrix, &mix, &structure)?
            }
        };
        debug!(
            "t={time} event=recalc strategy={} entries={} period={}",
            self.config.strategy.as_str(),
            schedule.entries.len(),
            schedule.period()
        );
        self.schedule = Some(schedule);
        self.next_entry = 0;
        self.epoch += 1;

        outcome
            .interrupts
            .push(CoordinatorEvent::ConfigChangeInterrupt { time, epoch: self.epoch });
        if self.config.mode.periodic() {
            self.arm_recalc(time + self.config.recalc_period, outcome);
        }
        Ok(())
    }

    /// Applies the next schedule entry (cyclically) and plans the follow-up
    /// interrupt.
    fn change_configuration(
        &mut self,
        time: f64,
        controller: &mut dyn Controller,
        outcome: &mut EventOutcome,
    ) -> Result<(), CoordinatorError> {
        let Some(schedule) = &self.schedule else {
            return Err(CoordinatorError::NoSchedule);
        };
        let entry = schedule.entries[self.next_entry].clone();
        self.next_entry = (self.next_entry + 1) % schedule.entries.len();

        let target = self
            .known_configs
            .iter()
            .find(|c| c.id == entry.config_id)
            .cloned()
            .ok_or_else(|| CoordinatorError::UnknownConfiguration {
                config: entry.config_id.clone(),
            })?;

        let plan = diff_configurations(&self.structure, &self.ongoing, &target);
        debug!(
            "t={time} event=config_change config={} deactivate={} lightpaths={} activate={}",
            target.id,
            plan.deactivate.len(),
            plan.lightpath_changes.len(),
            plan.activate.len()
        );
        if !plan.is_empty() {
            let completed = controller.execute_plan(time, &plan);
            self.last_reconfig_complete = completed;
            // Links left below threshold by this switch notified long ago and
            // stay silent until they recover, so every reconfiguration gets a
            // joint status check once its grace window closes.
            if self.config.mode.subscribes_notifications() && !self.grace_check_armed {
                self.grace_check_armed = true;
                outcome.interrupts.push(CoordinatorEvent::GraceExpiry {
                    time: completed + self.config.grace_time,
                });
            }
        }
        self.ongoing = target;
        outcome.plan = Some(plan);

        if entry.duration.is_finite() {
            outcome.interrupts.push(CoordinatorEvent::ConfigChangeInterrupt {
                time: time + entry.duration,
                epoch: self.epoch,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NetworkState;
    use crate::testnet;

    const C1: &str = "A1B1.1+A2B2.1+A3B3.1";
    const C2: &str = "A1B3.1+A2B1.1+A3B2.1";

    /// Controller stub over a fixed scenario state.
    struct StubController {
        configurations: Vec<Configuration>,
        state: NetworkState,
        executed: Vec<ReconfigurationPlan>,
        subscribed: bool,
    }

    impl StubController {
        fn new(scenario: &crate::model::Scenario) -> Self {
            StubController {
                configurations: scenario.structure.configurations().to_vec(),
                state: scenario.state.clone(),
                executed: Vec::new(),
                subscribed: false,
            }
        }
    }

    impl Controller for StubController {
        fn configurations(&self) -> Vec<Configuration> {
            self.configurations.clone()
        }

        fn state(&self) -> NetworkState {
            self.state.clone()
        }

        fn execute_plan(&mut self, time: f64, plan: &ReconfigurationPlan) -> f64 {
            self.executed.push(plan.clone());
            time
        }

        fn subscribe_notifications(&mut self, enabled: bool) {
            self.subscribed = enabled;
        }
    }

    fn fmcb_coordinator(scenario: &crate::model::Scenario) -> Coordinator {
        Coordinator::new(
            scenario.structure.clone(),
            CoordinatorConfig {
                strategy: StrategyKind::Fmcb,
                mode: Mode::EventDriven,
                grace_time: 600.0,
                recalc_period: 0.0,
            },
        )
        .unwrap()
    }

    fn set_fill(state: &mut NetworkState, link_id: &str, fill: f64) {
        state
            .links
            .iter_mut()
            .find(|l| l.link_id == link_id)
            .map(|l| l.fill_level = fill)
            .unwrap();
    }

    /// Drives every interrupt the coordinator asks for that is due at the
    /// given instant; returns all plans produced.
    fn drive(
        coordinator: &mut Coordinator,
        controller: &mut StubController,
        seed: Vec<CoordinatorEvent>,
    ) -> Vec<ReconfigurationPlan> {
        let mut queue = seed;
        let mut plans = Vec::new();
        let mut guard = 0;
        while let Some(event) = queue.pop() {
            guard += 1;
            assert!(guard < 100, "interrupt storm");
            let now = event.time();
            let outcome = coordinator.handle_event(event, controller).unwrap();
            plans.extend(outcome.plan);
            for interrupt in outcome.interrupts {
                if interrupt.time() <= now {
                    queue.push(interrupt);
                }
            }
        }
        plans
    }

    #[test]
    fn diff_swaps_every_link_between_the_parallel_configs() {
        let scenario = testnet::hexagon();
        let ongoing = scenario.structure.configuration(C1).unwrap();
        let target = scenario.structure.configuration(C2).unwrap();
        let plan = diff_configurations(&scenario.structure, ongoing, target);
        let deactivate: Vec<&str> = plan.deactivate.iter().map(String::as_str).collect();
        let activate: Vec<&str> = plan.activate.iter().map(String::as_str).collect();
        assert_eq!(deactivate, ["A1B1.1", "A2B2.1", "A3B3.1"]);
        assert_eq!(activate, ["A1B3.1", "A2B1.1", "A3B2.1"]);
        // Every receiver changes hands, so each appears in the light-path
        // batch.
        assert!(plan.lightpath_changes.iter().any(|c| c.contains("B1")));
    }

    #[test]
    fn diff_of_identical_configurations_is_empty() {
        let scenario = testnet::hexagon();
        let c1 = scenario.structure.configuration(C1).unwrap();
        let plan = diff_configurations(&scenario.structure, c1, c1);
        assert!(plan.is_empty());
        assert!(plan.lightpath_changes.is_empty());
    }

    #[test]
    fn diff_keeps_shared_physical_links_untouched() {
        let scenario = testnet::hexagon();
        let ongoing = Configuration {
            id: "pair".to_string(),
            active_links: vec![
                testnet::active(&scenario.structure, "A1B1", "A1B1.1"),
                testnet::active(&scenario.structure, "A3B2", "A3B2.1"),
            ],
        };
        let target = scenario.structure.configuration("A1B1.3+A3B2.1").unwrap();
        let plan = diff_configurations(&scenario.structure, &ongoing, target);
        assert_eq!(plan.deactivate.iter().collect::<Vec<_>>(), ["A1B1.1"]);
        assert_eq!(plan.activate.iter().collect::<Vec<_>>(), ["A1B1.3"]);
    }

    #[test]
    fn notification_outside_grace_boosts_the_critical_link() {
        let scenario = testnet::hexagon();
        let mut controller = StubController::new(&scenario);
        set_fill(&mut controller.state, "A1B1", 1_000_000.0);
        let mut coordinator = fmcb_coordinator(&scenario);

        let start = coordinator.start(0.0, &mut controller);
        assert!(controller.subscribed);
        // Event-driven selections run forever: beyond the immediate apply,
        // no config-change interrupt is scheduled.
        let outcome = coordinator
            .handle_event(start.interrupts[0].clone(), &mut controller)
            .unwrap();
        let config_changes: Vec<_> = outcome
            .interrupts
            .iter()
            .filter(|i| matches!(i, CoordinatorEvent::ConfigChangeInterrupt { .. }))
            .collect();
        assert_eq!(config_changes.len(), 1);
        assert_eq!(config_changes[0].time(), 0.0);
        let mut plans = drive(&mut coordinator, &mut controller, outcome.interrupts);
        assert_eq!(plans.len(), 1);
        // Initial recalculation picks the doubly-boosted configuration for
        // the critical link; nothing was active before.
        let plan = plans.remove(0);
        assert!(plan.deactivate.is_empty());
        assert_eq!(plan.activate.iter().collect::<Vec<_>>(), ["A1B1.4"]);

        // A later notification for a different link swaps the configuration.
        set_fill(&mut controller.state, "A2B2", 500_000.0);
        let event = CoordinatorEvent::BufferCriticalNotification {
            time: 10_000.0,
            link_id: "A2B2".to_string(),
        };
        let plans = drive(&mut coordinator, &mut controller, vec![event]);
        assert_eq!(plans.len(), 1);
        assert_eq!(plans[0].deactivate.iter().collect::<Vec<_>>(), ["A1B1.4"]);
        assert!(plans[0].activate.iter().any(|id| id.starts_with("A2B2.2")));
    }

    #[test]
    fn reapplying_the_ongoing_configuration_is_a_noop_plan() {
        let scenario = testnet::hexagon();
        let mut controller = StubController::new(&scenario);
        set_fill(&mut controller.state, "A1B1", 1_000_000.0);
        let mut coordinator = fmcb_coordinator(&scenario);
        let start = coordinator.start(0.0, &mut controller);
        drive(&mut coordinator, &mut controller, start.interrupts);
        assert_eq!(controller.executed.len(), 1);

        // Same critical link, same selection: an empty plan, nothing
        // executed.
        let event = CoordinatorEvent::BufferCriticalNotification {
            time: 5_000.0,
            link_id: "A1B1".to_string(),
        };
        let plans = drive(&mut coordinator, &mut controller, vec![event]);
        assert_eq!(plans.len(), 1);
        assert!(plans[0].is_empty());
        assert_eq!(controller.executed.len(), 1);
    }

    #[test]
    fn notifications_inside_grace_are_batched_into_one_joint_recalc() {
        let scenario = testnet::hexagon();
        let mut controller = StubController::new(&scenario);
        set_fill(&mut controller.state, "A1B1", 1_000_000.0);
        let mut coordinator = fmcb_coordinator(&scenario);
        let start = coordinator.start(0.0, &mut controller);
        drive(&mut coordinator, &mut controller, start.interrupts);
        assert_eq!(controller.executed.len(), 1);

        // Two different links go critical during the grace window. The
        // reconfiguration already armed the expiry check at 600 s, so
        // neither notification schedules anything further.
        set_fill(&mut controller.state, "A2B2", 900_000.0);
        set_fill(&mut controller.state, "A3B3", 800_000.0);
        let first = coordinator
            .handle_event(
                CoordinatorEvent::BufferCriticalNotification {
                    time: 100.0,
                    link_id: "A2B2".to_string(),
                },
                &mut controller,
            )
            .unwrap();
        assert!(first.interrupts.is_empty());
        let second = coordinator
            .handle_event(
                CoordinatorEvent::BufferCriticalNotification {
                    time: 200.0,
                    link_id: "A3B3".to_string(),
                },
                &mut controller,
            )
            .unwrap();
        assert!(second.interrupts.is_empty());

        // At expiry the most critical link (A3B3) wins the joint handling.
        let plans = drive(
            &mut coordinator,
            &mut controller,
            vec![CoordinatorEvent::GraceExpiry { time: 600.0 }],
        );
        assert_eq!(plans.len(), 1);
        assert!(plans[0].activate.iter().any(|id| id.starts_with("A3B3")));
        assert_eq!(controller.executed.len(), 2);
    }

    #[test]
    fn unknown_link_notification_is_an_error() {
        let scenario = testnet::hexagon();
        let mut controller = StubController::new(&scenario);
        let mut coordinator = fmcb_coordinator(&scenario);
        let err = coordinator
            .handle_event(
                CoordinatorEvent::BufferCriticalNotification {
                    time: 0.0,
                    link_id: "A9B9".to_string(),
                },
                &mut controller,
            )
            .unwrap_err();
        assert!(matches!(err, CoordinatorError::UnknownLink { .. }));
    }

    #[test]
    fn periodic_mmak_cycles_through_the_schedule() {
        let scenario = testnet::hexagon();
        let mut controller = StubController::new(&scenario);
        let mut coordinator = Coordinator::new(
            scenario.structure.clone(),
            CoordinatorConfig {
                strategy: StrategyKind::Mmak,
                mode: Mode::Periodic,
                grace_time: 600.0,
                recalc_period: 1e9,
            },
        )
        .unwrap();
        let start = coordinator.start(0.0, &mut controller);
        assert!(!controller.subscribed);

        let outcome = coordinator.handle_event(start.interrupts[0].clone(), &mut controller).unwrap();
        // Immediate config change plus the next periodic recalc.
        let times: Vec<f64> = outcome.interrupts.iter().map(|i| i.time()).collect();
        assert_eq!(times, [0.0, 1e9]);

        // Walk two full cycles of config changes; the plan sequence repeats.
        let mut event = outcome.interrupts[0].clone();
        let mut applied = Vec::new();
        for _ in 0..6 {
            let outcome = coordinator.handle_event(event, &mut controller).unwrap();
            applied.push(coordinator.ongoing().id.clone());
            event = outcome
                .interrupts
                .iter()
                .find(|i| matches!(i, CoordinatorEvent::ConfigChangeInterrupt { .. }))
                .unwrap()
                .clone();
        }
        assert_eq!(applied[0], applied[3]);
        assert_eq!(applied[1], applied[4]);
        assert_eq!(applied[2], applied[5]);
        assert_eq!(controller.executed.len(), 6);
    }

    #[test]
    fn stale_config_change_interrupts_are_ignored() {
        let scenario = testnet::hexagon();
        let mut controller = StubController::new(&scenario);
        set_fill(&mut controller.state, "A1B1", 1_000_000.0);
        let mut coordinator = fmcb_coordinator(&scenario);
        let start = coordinator.start(0.0, &mut controller);
        drive(&mut coordinator, &mut controller, start.interrupts);

        let outcome = coordinator
            .handle_event(
                CoordinatorEvent::ConfigChangeInterrupt { time: 1.0, epoch: 0 },
                &mut controller,
            )
            .unwrap();
        assert_eq!(outcome, EventOutcome::default());
    }

    #[test]
    fn identical_event_sequences_produce_identical_outcomes() {
        let scenario = testnet::hexagon();
        let run = || {
            let mut controller = StubController::new(&scenario);
            set_fill(&mut controller.state, "A1B2", 1_200_000.0);
            let mut coordinator = fmcb_coordinator(&scenario);
            let start = coordinator.start(0.0, &mut controller);
            drive(&mut coordinator, &mut controller, start.interrupts);
            let event = CoordinatorEvent::BufferCriticalNotification {
                time: 2_000.0,
                link_id: "A1B2".to_string(),
            };
            drive(&mut coordinator, &mut controller, vec![event]);
            controller.executed
        };
        assert_eq!(run(), run());
    }
}
