//! In-process mock SDN controller plus an exact event-driven simulation of
//! the link-buffer dynamics.
//!
//! Between events every buffer evolves linearly at (active generation rate -
//! consumption rate); the simulator solves the linear crossing equations for
//! threshold, empty and full events analytically, so there is no integrator
//! drift and traces are piecewise linear down to machine precision. Buffers
//! clamp at their bounds: time pinned at zero is recorded as depletion
//! (consumers starve on the pass-through trickle), overflow at capacity is
//! recorded as wasted generation.

mod sweep;

pub use sweep::{qualification_state, sweep_supported_rate, SweepError, SweepOutcome};

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt::Write as _;

use log::trace;
use thiserror::Error;

use crate::coordinator::{Controller, Coordinator, CoordinatorError, CoordinatorEvent, ReconfigurationPlan};
use crate::model::{Configuration, LinkState, NetworkState, NetworkStructure};
use crate::optimize::MixVector;

/// Default runaway-oscillation guard.
pub const DEFAULT_EVENT_CAP: usize = 10_000_000;
/// Fill-recurrence tolerance for steady-state detection, bits.
pub const STEADY_EPSILON: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("horizon must be positive, got {0}")]
    BadHorizon(f64),
    #[error("initial state does not match the structure's links")]
    StateMismatch,
    #[error("event cap of {0} exceeded (runaway oscillation?)")]
    EventCapExceeded(usize),
    #[error(transparent)]
    Coordinator(#[from] CoordinatorError),
}

#[derive(Debug, Clone)]
pub struct SimParams {
    /// Simulated seconds.
    pub horizon: f64,
    /// Generation blackout for links touched by a reconfiguration.
    pub switch_downtime: f64,
    /// Extra trace rows every this many seconds (events always produce rows).
    pub sample_interval: Option<f64>,
    pub event_cap: usize,
}

impl SimParams {
    pub fn new(horizon: f64) -> Self {
        SimParams {
            horizon,
            switch_downtime: 0.0,
            sample_interval: None,
            event_cap: DEFAULT_EVENT_CAP,
        }
    }
}

/// One sampled instant of the simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub time: f64,
    /// Configuration applied by the coordinator; `None` before the first one.
    pub active_config: Option<String>,
    pub fills: Vec<f64>,
}

/// Per-link conservation ledger over the whole run, bits.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinkTotals {
    pub generated: f64,
    pub delivered: f64,
    pub demand: f64,
    pub wasted: f64,
    pub shortfall: f64,
    pub depletion_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub link_ids: Vec<String>,
    pub rows: Vec<TraceRow>,
    pub totals: Vec<LinkTotals>,
    /// Closed starvation intervals per link.
    pub depletion_intervals: Vec<Vec<(f64, f64)>>,
    pub events: usize,
}

impl Trace {
    pub fn total_depletion(&self) -> f64 {
        self.totals.iter().map(|t| t.depletion_time).sum()
    }

    pub fn final_fills(&self) -> &[f64] {
        &self.rows.last().expect("trace has rows").fills
    }

    /// CSV dump: `time_s,active_config,<link_id>_bits,...` with fills
    /// quantized to whole bits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time_s,active_config");
        for id in &self.link_ids {
            write!(out, ",{id}_bits").unwrap();
        }
        out.push('\n');
        for row in &self.rows {
            write!(out, "{},{}", row.time, row.active_config.as_deref().unwrap_or("")).unwrap();
            for fill in &row.fills {
                write!(out, ",{}", fill.round()).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// A detected periodic regime.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub cycle_start: f64,
    /// Zero for a static regime.
    pub cycle_length: f64,
    /// Time-weighted relative configuration durations over one cycle,
    /// indexed like the structure's configurations.
    pub average_mix: MixVector,
}

// ---------------------------------------------------------------------------
// Event queue plumbing.

#[derive(Debug, Clone, PartialEq)]
enum QueuedKind {
    Interrupt(CoordinatorEvent),
    SwitchComplete,
}

#[derive(Debug, Clone)]
struct Queued {
    time: f64,
    seq: u64,
    kind: QueuedKind,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.time == other.time && self.seq == other.seq
    }
}
impl Eq for Queued {}
impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap, we want earliest first.
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Crossing {
    ThresholdDown,
    ThresholdUp,
    Empty,
    Full,
}

// ---------------------------------------------------------------------------
// The mock controller: owns the physical state of the network.

struct LinkDynamics {
    capacity: f64,
    threshold: f64,
    fill: f64,
    consumption: f64,
    generation: f64,
    /// Notification hysteresis: re-arms only when the fill climbs back above
    /// the critical threshold.
    armed: bool,
    totals: LinkTotals,
    starving_since: Option<f64>,
    intervals: Vec<(f64, f64)>,
}

/// In-process SDN controller: executes plans atomically on the simulated
/// hardware and serves status queries from the live fills.
struct MockController<'a> {
    structure: &'a NetworkStructure,
    links: Vec<LinkDynamics>,
    active: BTreeSet<String>,
    pending_activations: Vec<(f64, BTreeSet<String>)>,
    switch_downtime: f64,
    notifications_enabled: bool,
    now: f64,
}

impl<'a> MockController<'a> {
    fn new(structure: &'a NetworkStructure, initial: &NetworkState, downtime: f64) -> Self {
        let links = structure
            .links()
            .iter()
            .zip(&initial.links)
            .map(|(spec, state)| LinkDynamics {
                capacity: spec.buffer_capacity,
                threshold: spec.critical_threshold,
                fill: state.fill_level,
                consumption: state.consumption_rate,
                generation: 0.0,
                armed: state.fill_level > spec.critical_threshold,
                totals: LinkTotals::default(),
                starving_since: None,
                intervals: Vec::new(),
            })
            .collect();
        MockController {
            structure,
            links,
            active: BTreeSet::new(),
            pending_activations: Vec::new(),
            switch_downtime: downtime,
            notifications_enabled: false,
            now: initial.time,
        }
    }

    fn refresh_generation_rates(&mut self) {
        for (spec, link) in self.structure.links().iter().zip(&mut self.links) {
            link.generation = spec
                .physical_links
                .iter()
                .find(|p| self.active.contains(&p.id))
                .map_or(0.0, |p| p.generation_rate);
        }
    }

    /// Advances every buffer linearly by `dt` and settles the ledgers.
    fn advance(&mut self, dt: f64) {
        if dt <= 0.0 {
            return;
        }
        let from = self.now;
        for link in &mut self.links {
            let g = link.generation;
            let c = link.consumption;
            link.totals.generated += g * dt;
            link.totals.demand += c * dt;
            if link.fill <= 0.0 && g < c {
                // Starving: consumers live off the pass-through trickle.
                link.fill = 0.0;
                link.totals.delivered += g * dt;
                link.totals.shortfall += (c - g) * dt;
                link.totals.depletion_time += dt;
                link.starving_since.get_or_insert(from);
            } else {
                if let Some(start) = link.starving_since.take() {
                    link.intervals.push((start, from));
                }
                if link.fill >= link.capacity && g > c {
                    // Saturated: the surplus is discarded.
                    link.fill = link.capacity;
                    link.totals.delivered += c * dt;
                    link.totals.wasted += (g - c) * dt;
                } else {
                    link.totals.delivered += c * dt;
                    link.fill += (g - c) * dt;
                    // Crossings are events, so any overshoot is pure float
                    // noise.
                    link.fill = link.fill.clamp(0.0, link.capacity);
                }
            }
        }
        self.now = from + dt;
    }

    /// Earliest linear crossing per link, if any: (absolute time, link,
    /// kind).
    fn next_crossings(&self) -> Vec<(f64, usize, Crossing)> {
        let mut out = Vec::new();
        for (index, link) in self.links.iter().enumerate() {
            let net = link.generation - link.consumption;
            if net < 0.0 && link.fill > 0.0 {
                if link.armed && link.fill > link.threshold {
                    out.push((self.now + (link.fill - link.threshold) / -net, index, Crossing::ThresholdDown));
                } else {
                    out.push((self.now + link.fill / -net, index, Crossing::Empty));
                }
            } else if net > 0.0 && link.fill < link.capacity {
                // A served link re-arms the moment it climbs back through its
                // threshold; after a crossing snap the fill sits exactly on
                // it, so the comparison must not be strict.
                if !link.armed && link.fill <= link.threshold {
                    out.push((self.now + (link.threshold - link.fill) / net, index, Crossing::ThresholdUp));
                } else {
                    out.push((self.now + (link.capacity - link.fill) / net, index, Crossing::Full));
                }
            }
        }
        out
    }

    fn close_intervals(&mut self) {
        let now = self.now;
        for link in &mut self.links {
            if let Some(start) = link.starving_since.take() {
                link.intervals.push((start, now));
            }
        }
    }

    fn fills(&self) -> Vec<f64> {
        self.links.iter().map(|l| l.fill).collect()
    }

    fn take_due_activations(&mut self, time: f64) -> Vec<BTreeSet<String>> {
        let mut due = Vec::new();
        self.pending_activations.retain(|(at, ids)| {
            if *at <= time {
                due.push(ids.clone());
                false
            } else {
                true
            }
        });
        due
    }
}

impl Controller for MockController<'_> {
    fn configurations(&self) -> Vec<Configuration> {
        self.structure.configurations().to_vec()
    }

    fn state(&self) -> NetworkState {
        NetworkState {
            time: self.now,
            links: self
                .structure
                .links()
                .iter()
                .zip(&self.links)
                .map(|(spec, link)| LinkState {
                    link_id: spec.id.clone(),
                    fill_level: link.fill,
                    consumption_rate: link.consumption,
                })
                .collect(),
        }
    }

    fn execute_plan(&mut self, time: f64, plan: &ReconfigurationPlan) -> f64 {
        // Deactivations and light-path changes happen up front; activations
        // complete after the switch downtime.
        for id in &plan.deactivate {
            self.active.remove(id);
        }
        for pending in &mut self.pending_activations {
            pending.1.retain(|id| !plan.deactivate.contains(id));
        }
        let completion = time + self.switch_downtime;
        if self.switch_downtime == 0.0 {
            self.active.extend(plan.activate.iter().cloned());
        } else if !plan.activate.is_empty() {
            self.pending_activations.push((completion, plan.activate.clone()));
        }
        self.refresh_generation_rates();
        completion
    }

    fn subscribe_notifications(&mut self, enabled: bool) {
        self.notifications_enabled = enabled;
    }
}

// ---------------------------------------------------------------------------
// The simulation loop.

/// Runs the coordinator against the simulated network and records the exact
/// piecewise-linear trace.
pub fn run(
    structure: &NetworkStructure,
    initial_state: &NetworkState,
    coordinator: &mut Coordinator,
    params: &SimParams,
) -> Result<Trace, SimError> {
    if !(params.horizon > 0.0) {
        return Err(SimError::BadHorizon(params.horizon));
    }
    let aligned = initial_state.links.len() == structure.links().len()
        && initial_state
            .links
            .iter()
            .zip(structure.links())
            .all(|(s, l)| s.link_id == l.id);
    if !aligned {
        return Err(SimError::StateMismatch);
    }

    let start_time = initial_state.time;
    let horizon = start_time + params.horizon;
    let mut net = MockController::new(structure, initial_state, params.switch_downtime);
    let mut queue: BinaryHeap<Queued> = BinaryHeap::new();
    let mut seq: u64 = 0;
    let push = |queue: &mut BinaryHeap<Queued>, seq: &mut u64, time: f64, kind: QueuedKind| {
        *seq += 1;
        queue.push(Queued { time, seq: *seq, kind });
    };

    let outcome = coordinator.start(start_time, &mut net);
    for interrupt in outcome.interrupts {
        push(&mut queue, &mut seq, interrupt.time(), QueuedKind::Interrupt(interrupt));
    }
    // Links already critical at the start notify immediately.
    if net.notifications_enabled {
        for (index, link) in net.links.iter_mut().enumerate() {
            if !link.armed {
                let link_id = structure.links()[index].id.clone();
                push(
                    &mut queue,
                    &mut seq,
                    start_time,
                    QueuedKind::Interrupt(CoordinatorEvent::BufferCriticalNotification {
                        time: start_time,
                        link_id,
                    }),
                );
            }
        }
    }

    let mut active_config: Option<String> = None;
    let mut rows: Vec<TraceRow> = Vec::new();
    let mut next_sample = params.sample_interval.map(|step| start_time + step);
    let mut events = 0usize;

    loop {
        let crossings = net.next_crossings();
        let mut next_time = horizon;
        if let Some(queued) = queue.peek() {
            next_time = next_time.min(queued.time);
        }
        for &(time, _, _) in &crossings {
            next_time = next_time.min(time);
        }
        if let Some(sample) = next_sample {
            next_time = next_time.min(sample);
        }

        net.advance(next_time - net.now);

        if next_time >= horizon {
            net.close_intervals();
            rows.push(TraceRow { time: horizon, active_config: active_config.clone(), fills: net.fills() });
            break;
        }

        // Crossings first: they snap fills exactly and may emit
        // notifications; coordinator interrupts run on the settled state.
        let mut notifications = Vec::new();
        for &(time, index, kind) in &crossings {
            if time > next_time {
                continue;
            }
            events += 1;
            let link = &mut net.links[index];
            let link_id = structure.links()[index].id.as_str();
            match kind {
                Crossing::ThresholdDown => {
                    link.fill = link.threshold;
                    link.armed = false;
                    trace!("t={next_time} sim=threshold_down link={link_id}");
                    if net.notifications_enabled {
                        notifications.push(link_id.to_string());
                    }
                }
                Crossing::ThresholdUp => {
                    link.fill = link.threshold;
                    link.armed = true;
                    trace!("t={next_time} sim=threshold_up link={link_id}");
                }
                Crossing::Empty => {
                    link.fill = 0.0;
                    trace!("t={next_time} sim=buffer_empty link={link_id}");
                }
                Crossing::Full => {
                    link.fill = link.capacity;
                    trace!("t={next_time} sim=buffer_full link={link_id}");
                }
            }
        }
        for link_id in notifications {
            push(
                &mut queue,
                &mut seq,
                next_time,
                QueuedKind::Interrupt(CoordinatorEvent::BufferCriticalNotification {
                    time: next_time,
                    link_id,
                }),
            );
        }

        while queue.peek().is_some_and(|q| q.time <= next_time) {
            let queued = queue.pop().expect("peeked");
            events += 1;
            match queued.kind {
                QueuedKind::SwitchComplete => {
                    for ids in net.take_due_activations(next_time) {
                        net.active.extend(ids);
                    }
                    net.refresh_generation_rates();
                    trace!("t={next_time} sim=switch_complete");
                }
                QueuedKind::Interrupt(event) => {
                    let outcome = coordinator.handle_event(event, &mut net)?;
                    for interrupt in outcome.interrupts {
                        push(&mut queue, &mut seq, interrupt.time(), QueuedKind::Interrupt(interrupt));
                    }
                    if let Some(plan) = outcome.plan {
                        active_config = Some(coordinator.ongoing().id.clone());
                        if !plan.is_empty() && params.switch_downtime > 0.0 {
                            push(
                                &mut queue,
                                &mut seq,
                                next_time + params.switch_downtime,
                                QueuedKind::SwitchComplete,
                            );
                        }
                    }
                }
            }
        }

        if events > params.event_cap {
            return Err(SimError::EventCapExceeded(params.event_cap));
        }
        if let Some(sample) = next_sample {
            if sample <= next_time {
                next_sample = Some(sample + params.sample_interval.expect("sampling enabled"));
            }
        }
        // Fills are continuous, so several events at one instant collapse
        // into a single row carrying the post-event state.
        if rows.last().is_some_and(|row| row.time == next_time) {
            rows.pop();
        }
        rows.push(TraceRow { time: next_time, active_config: active_config.clone(), fills: net.fills() });
    }

    Ok(Trace {
        link_ids: structure.links().iter().map(|l| l.id.clone()).collect(),
        rows,
        totals: net.links.iter().map(|l| l.totals.clone()).collect(),
        depletion_intervals: net.links.iter().map(|l| l.intervals.clone()).collect(),
        events,
    })
}

// ---------------------------------------------------------------------------
// Steady-state detection.

/// Finds the earliest recurrence of (active configuration, fill vector within
/// one bit) and reports the cycle plus the time-weighted configuration mix
/// over it. A static tail (every later row identical) is reported as a cycle
/// of length zero.
pub fn detect_steady_state(trace: &Trace, structure: &NetworkStructure) -> Option<SteadyState> {
    let rows = &trace.rows;
    if rows.len() < 2 {
        return None;
    }

    // Static regime: the earliest row from which nothing changes any more.
    let last = rows.last().expect("non-empty");
    let mut static_from = rows.len() - 1;
    while static_from > 0 {
        let row = &rows[static_from - 1];
        if row.active_config == last.active_config && fills_close(&row.fills, &last.fills) {
            static_from -= 1;
        } else {
            break;
        }
    }
    if static_from < rows.len() - 1 && last.time > rows[static_from].time {
        let row = &rows[static_from];
        let mix = row
            .active_config
            .as_ref()
            .and_then(|id| structure.config_index(id))
            .map(|index| MixVector::unit(structure.configurations().len(), index))?;
        return Some(SteadyState {
            cycle_start: row.time,
            cycle_length: 0.0,
            average_mix: mix,
        });
    }

    // Cyclic regime: compare rows at configuration changes only; a periodic
    // orbit is recurrent at every such phase point, and this keeps the scan
    // quadratic in the number of legs, not of rows.
    let anchors: Vec<usize> = (0..rows.len())
        .filter(|&i| {
            rows[i].active_config.is_some()
                && (i == 0 || rows[i - 1].active_config != rows[i].active_config)
        })
        .collect();
    for (pos, &anchor) in anchors.iter().enumerate() {
        let a = &rows[anchor];
        for &later in &anchors[pos + 1..] {
            let b = &rows[later];
            if b.time > a.time
                && a.active_config == b.active_config
                && fills_close(&a.fills, &b.fills)
            {
                return Some(SteadyState {
                    cycle_start: a.time,
                    cycle_length: b.time - a.time,
                    average_mix: average_mix(&rows[anchor..=later], structure),
                });
            }
        }
    }
    None
}

fn fills_close(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= STEADY_EPSILON)
}

fn average_mix(rows: &[TraceRow], structure: &NetworkStructure) -> MixVector {
    let mut durations: BTreeMap<&str, f64> = BTreeMap::new();
    for pair in rows.windows(2) {
        if let Some(id) = pair[0].active_config.as_deref() {
            *durations.entry(id).or_default() += pair[1].time - pair[0].time;
        }
    }
    let total = rows.last().expect("non-empty").time - rows[0].time;
    let mut mix = vec![0.0; structure.configurations().len()];
    for (id, duration) in durations {
        if let Some(index) = structure.config_index(id) {
            mix[index] = duration / total;
        }
    }
    MixVector(mix)
}
