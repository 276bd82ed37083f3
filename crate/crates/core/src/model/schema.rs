//! Scenario document schema: typed view over the node tree.
//!
//! Field names follow the operational-data lists exchanged with the SDN
//! controller (`link_id`, `buffer_capacity`, `physical_links`, ...), plus a
//! `strategy:` section for the switching-coordinator settings.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use super::doc::{self, Node};
use super::units::{format_quantity, parse_quantity, Dimension};
use super::{
    ActiveLink, Configuration, LinkSpec, LinkState, ModelError, NetworkState, NetworkStructure,
    PhysicalLinkSpec, ResourceId,
};

/// Which switching strategy the coordinator runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyKind {
    /// Fill most critical buffer: reactive, notification-driven.
    Fmcb,
    /// Maximize minimal average key gain: proactive configuration cycling.
    Mmak,
}

impl StrategyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyKind::Fmcb => "fmcb",
            StrategyKind::Mmak => "mmak",
        }
    }
}

/// How recalculations are triggered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Recalculate on a fixed period; buffer notifications are not subscribed.
    Periodic,
    /// Recalculate only on buffer-critical notifications.
    EventDriven,
    /// Periodic recalculation with notifications as a safeguard.
    Hybrid,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Periodic => "periodic",
            Mode::EventDriven => "event_driven",
            Mode::Hybrid => "hybrid",
        }
    }

    pub fn subscribes_notifications(self) -> bool {
        matches!(self, Mode::EventDriven | Mode::Hybrid)
    }

    pub fn periodic(self) -> bool {
        matches!(self, Mode::Periodic | Mode::Hybrid)
    }
}

/// Run settings aggregated from the scenario's `strategy:` section.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategySettings {
    pub strategy: StrategyKind,
    pub mode: Mode,
    /// Seconds after a reconfiguration during which critical notifications
    /// are batched.
    pub grace_time: f64,
    /// Seconds between periodic recalculations.
    pub recalc_period: f64,
    /// Simulation and sweep-qualification horizon, seconds.
    pub horizon: f64,
    /// Overrides every link's consumption rate when set, bits/second.
    pub uniform_consumption: Option<f64>,
    /// Initial buffer fill for links without explicit state, percent of
    /// capacity.
    pub initial_fill_pct: Option<f64>,
    /// Seconds of generation blackout on links touched by a reconfiguration.
    pub switch_downtime: f64,
}

pub const DEFAULT_GRACE_TIME: f64 = 600.0;
pub const DEFAULT_HORIZON: f64 = 360_000.0;
pub const DEFAULT_INITIAL_FILL_PCT: f64 = 50.0;
/// Consumption floor for links with no configured consumer; key material
/// outdates even when unused, so the rate stays strictly positive.
pub const DEFAULT_CONSUMPTION: f64 = 1.0;

impl Default for StrategySettings {
    fn default() -> Self {
        StrategySettings {
            strategy: StrategyKind::Mmak,
            mode: Mode::Periodic,
            grace_time: DEFAULT_GRACE_TIME,
            recalc_period: DEFAULT_HORIZON,
            horizon: DEFAULT_HORIZON,
            uniform_consumption: None,
            initial_fill_pct: None,
            switch_downtime: 0.0,
        }
    }
}

/// A fully parsed and validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub structure: NetworkStructure,
    pub state: NetworkState,
    pub settings: StrategySettings,
    /// True when the document supplied a `configurations:` section; false
    /// when the list must be derived from the links.
    pub explicit_configurations: bool,
}

/// Parses a scenario document into a validated structure, state and settings.
///
/// All quantities are converted to bits and seconds. Structural invariant
/// violations are collected and reported together.
pub fn parse_scenario(text: &str) -> Result<Scenario, ModelError> {
    let root = doc::parse(text)?;
    let root = MappingView::new(&root, &["links", "configurations", "state", "strategy"])?;

    let links_node = root.require("links")?;
    let mut links = Vec::new();
    for (position, item) in as_sequence("links", links_node)?.iter().enumerate() {
        links.push(parse_link(item, position)?);
    }

    let mut explicit_configurations = false;
    let mut configurations = Vec::new();
    if let Some(node) = root.get("configurations") {
        explicit_configurations = true;
        for item in as_sequence("configurations", node)? {
            configurations.push(parse_configuration(item)?);
        }
    }

    let settings = match root.get("strategy") {
        Some(node) => parse_strategy(node)?,
        None => StrategySettings::default(),
    };

    let structure = NetworkStructure::new(links, configurations);
    let violations = structure.validate();
    if !violations.is_empty() {
        return Err(ModelError::Invariants(violations));
    }

    let state = match root.get("state") {
        Some(node) => parse_state(node, &structure, &settings)?,
        None => default_state(&structure, &settings),
    };
    check_state(&state, &structure)?;

    Ok(Scenario { structure, state, settings, explicit_configurations })
}

fn parse_link(node: &Node, position: usize) -> Result<LinkSpec, ModelError> {
    let view = MappingView::new(
        node,
        &["link_id", "buffer_capacity", "physical_links", "priority_index", "critical_threshold"],
    )?;
    let id = view.scalar("link_id")?;
    let buffer_capacity = view.quantity("buffer_capacity", Dimension::Size)?;
    let mut physical_links = Vec::new();
    for item in as_sequence("physical_links", view.require("physical_links")?)? {
        physical_links.push(parse_physical_link(item)?);
    }
    let priority_index = match view.get("priority_index") {
        Some(node) => parse_integer("priority_index", node)?,
        None => position as i64,
    };
    let critical_threshold = match view.get("critical_threshold") {
        Some(node) => quantity("critical_threshold", node, Dimension::Size)?,
        None => 0.05 * buffer_capacity,
    };
    Ok(LinkSpec { id, buffer_capacity, physical_links, priority_index, critical_threshold })
}

fn parse_physical_link(node: &Node) -> Result<PhysicalLinkSpec, ModelError> {
    let view = MappingView::new(node, &["physical_link_id", "resources", "generation_rate"])?;
    let id = view.scalar("physical_link_id")?;
    let resources_node = view.require("resources")?;
    let Node::Scalar { value, line } = resources_node else {
        return Err(wrong_shape("resources", "list like [A1, B1, L1]", resources_node));
    };
    let mut resources = BTreeSet::new();
    for token in doc::split_inline_list(value, *line)? {
        if token.is_empty() {
            return Err(ModelError::BadValue {
                field: "resources".to_string(),
                line: *line,
                message: "resource ids must be non-empty".to_string(),
            });
        }
        resources.insert(ResourceId(token));
    }
    let generation_rate = view.quantity("generation_rate", Dimension::Rate)?;
    Ok(PhysicalLinkSpec { id, resources, generation_rate })
}

fn parse_configuration(node: &Node) -> Result<Configuration, ModelError> {
    let view = MappingView::new(node, &["config_id", "active_links"])?;
    let id = view.scalar("config_id")?;
    let mut active_links = Vec::new();
    for item in as_sequence("active_links", view.require("active_links")?)? {
        let view = MappingView::new(item, &["link_id", "physical_link_id", "generation_rate"])?;
        active_links.push(ActiveLink {
            link_id: view.scalar("link_id")?,
            physical_link_id: view.scalar("physical_link_id")?,
            generation_rate: view.quantity("generation_rate", Dimension::Rate)?,
        });
    }
    Ok(Configuration { id, active_links })
}

fn parse_strategy(node: &Node) -> Result<StrategySettings, ModelError> {
    let view = MappingView::new(
        node,
        &[
            "name",
            "mode",
            "grace_time",
            "recalc_period",
            "horizon",
            "uniform_consumption",
            "initial_fill",
            "switch_downtime",
        ],
    )?;
    let mut settings = StrategySettings::default();
    if let Some(node) = view.get("name") {
        let (value, line) = scalar_value("name", node)?;
        settings.strategy = match value.as_str() {
            "fmcb" => StrategyKind::Fmcb,
            "mmak" => StrategyKind::Mmak,
            other => {
                return Err(ModelError::BadValue {
                    field: "name".to_string(),
                    line,
                    message: format!("unknown strategy {other:?}; expected fmcb or mmak"),
                })
            }
        };
    }
    settings.mode = match settings.strategy {
        StrategyKind::Fmcb => Mode::EventDriven,
        StrategyKind::Mmak => Mode::Periodic,
    };
    if let Some(node) = view.get("mode") {
        let (value, line) = scalar_value("mode", node)?;
        settings.mode = match value.as_str() {
            "periodic" => Mode::Periodic,
            "event_driven" => Mode::EventDriven,
            "hybrid" => Mode::Hybrid,
            other => {
                return Err(ModelError::BadValue {
                    field: "mode".to_string(),
                    line,
                    message: format!(
                        "unknown mode {other:?}; expected periodic, event_driven or hybrid"
                    ),
                })
            }
        };
    }
    if let Some(node) = view.get("horizon") {
        settings.horizon = quantity("horizon", node, Dimension::Time)?;
        settings.recalc_period = settings.horizon;
    }
    if let Some(node) = view.get("grace_time") {
        settings.grace_time = quantity("grace_time", node, Dimension::Time)?;
    }
    if let Some(node) = view.get("recalc_period") {
        settings.recalc_period = quantity("recalc_period", node, Dimension::Time)?;
    }
    if let Some(node) = view.get("uniform_consumption") {
        settings.uniform_consumption = Some(quantity("uniform_consumption", node, Dimension::Rate)?);
    }
    if let Some(node) = view.get("initial_fill") {
        let pct = quantity("initial_fill", node, Dimension::Percent)?;
        if !(0.0..=100.0).contains(&pct) {
            return Err(ModelError::BadValue {
                field: "initial_fill".to_string(),
                line: node.line(),
                message: format!("{pct}% is outside 0..=100%"),
            });
        }
        settings.initial_fill_pct = Some(pct);
    }
    if let Some(node) = view.get("switch_downtime") {
        settings.switch_downtime = quantity("switch_downtime", node, Dimension::Time)?;
    }
    Ok(settings)
}

fn parse_state(
    node: &Node,
    structure: &NetworkStructure,
    settings: &StrategySettings,
) -> Result<NetworkState, ModelError> {
    let mut state = default_state(structure, settings);
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for item in as_sequence("state", node)? {
        let view = MappingView::new(item, &["link_id", "current_state"])?;
        let link_id = view.scalar("link_id")?;
        let line = item.line();
        let Some(index) = structure.link_index(&link_id) else {
            return Err(ModelError::UnknownStateLink { link: link_id, line });
        };
        if !seen.insert(link_id.clone()) {
            return Err(ModelError::DuplicateStateLink { link: link_id, line });
        }
        let current = MappingView::new(
            view.require("current_state")?,
            &["buffer_fill_level", "consumption_rate"],
        )?;
        if let Some(node) = current.get("buffer_fill_level") {
            state.links[index].fill_level = quantity("buffer_fill_level", node, Dimension::Size)?;
        }
        if let Some(node) = current.get("consumption_rate") {
            state.links[index].consumption_rate =
                quantity("consumption_rate", node, Dimension::Rate)?;
        }
    }
    Ok(state)
}

fn default_state(structure: &NetworkStructure, settings: &StrategySettings) -> NetworkState {
    let fill_pct = settings.initial_fill_pct.unwrap_or(DEFAULT_INITIAL_FILL_PCT);
    let consumption = settings.uniform_consumption.unwrap_or(DEFAULT_CONSUMPTION);
    let links = structure
        .links()
        .iter()
        .map(|link| LinkState {
            link_id: link.id.clone(),
            fill_level: (fill_pct / 100.0 * link.buffer_capacity).round(),
            consumption_rate: consumption,
        })
        .collect();
    NetworkState { time: 0.0, links }
}

fn check_state(state: &NetworkState, structure: &NetworkStructure) -> Result<(), ModelError> {
    for (link_state, link) in state.links.iter().zip(structure.links()) {
        if !(0.0..=link.buffer_capacity).contains(&link_state.fill_level) {
            return Err(ModelError::BadState {
                link: link.id.clone(),
                message: format!(
                    "buffer_fill_level {} is outside [0, {}]",
                    link_state.fill_level, link.buffer_capacity
                ),
            });
        }
        if !(link_state.consumption_rate > 0.0) {
            return Err(ModelError::BadState {
                link: link.id.clone(),
                message: "consumption_rate must be strictly positive".to_string(),
            });
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Serialization. `parse(serialize(x)) == x` holds at the value level; fill
// levels are quantized to whole bits here and nowhere else.

/// Serializes the per-link operational state as a `state:` section.
pub fn serialize_state(state: &NetworkState) -> String {
    let mut out = String::from("state:\n");
    for link in &state.links {
        writeln!(out, "  - link_id: {}", link.link_id).unwrap();
        writeln!(out, "    current_state:").unwrap();
        writeln!(
            out,
            "      buffer_fill_level: {}",
            format_quantity(link.fill_level.round(), Dimension::Size)
        )
        .unwrap();
        writeln!(
            out,
            "      consumption_rate: {}",
            format_quantity(link.consumption_rate, Dimension::Rate)
        )
        .unwrap();
    }
    out
}

/// Serializes a configuration list as a `configurations:` section.
pub fn serialize_configurations(configurations: &[Configuration]) -> String {
    let mut out = String::from("configurations:\n");
    for config in configurations {
        writeln!(out, "  - config_id: {}", config.id).unwrap();
        writeln!(out, "    active_links:").unwrap();
        for active in &config.active_links {
            writeln!(out, "      - link_id: {}", active.link_id).unwrap();
            writeln!(out, "        physical_link_id: {}", active.physical_link_id).unwrap();
            writeln!(
                out,
                "        generation_rate: {}",
                format_quantity(active.generation_rate, Dimension::Rate)
            )
            .unwrap();
        }
    }
    out
}

fn serialize_links(structure: &NetworkStructure) -> String {
    let mut out = String::from("links:\n");
    for link in structure.links() {
        writeln!(out, "  - link_id: {}", link.id).unwrap();
        writeln!(
            out,
            "    buffer_capacity: {}",
            format_quantity(link.buffer_capacity, Dimension::Size)
        )
        .unwrap();
        writeln!(out, "    priority_index: {}", link.priority_index).unwrap();
        writeln!(
            out,
            "    critical_threshold: {}",
            format_quantity(link.critical_threshold, Dimension::Size)
        )
        .unwrap();
        writeln!(out, "    physical_links:").unwrap();
        for physical in &link.physical_links {
            writeln!(out, "      - physical_link_id: {}", physical.id).unwrap();
            let resources: Vec<&str> = physical.resources.iter().map(|r| r.as_str()).collect();
            writeln!(out, "        resources: [{}]", resources.join(", ")).unwrap();
            writeln!(
                out,
                "        generation_rate: {}",
                format_quantity(physical.generation_rate, Dimension::Rate)
            )
            .unwrap();
        }
    }
    out
}

fn serialize_strategy(settings: &StrategySettings) -> String {
    let mut out = String::from("strategy:\n");
    writeln!(out, "  name: {}", settings.strategy.as_str()).unwrap();
    writeln!(out, "  mode: {}", settings.mode.as_str()).unwrap();
    writeln!(out, "  grace_time: {}", format_quantity(settings.grace_time, Dimension::Time)).unwrap();
    writeln!(out, "  horizon: {}", format_quantity(settings.horizon, Dimension::Time)).unwrap();
    writeln!(
        out,
        "  recalc_period: {}",
        format_quantity(settings.recalc_period, Dimension::Time)
    )
    .unwrap();
    if let Some(rate) = settings.uniform_consumption {
        writeln!(out, "  uniform_consumption: {}", format_quantity(rate, Dimension::Rate)).unwrap();
    }
    if let Some(pct) = settings.initial_fill_pct {
        writeln!(out, "  initial_fill: {}", format_quantity(pct, Dimension::Percent)).unwrap();
    }
    writeln!(
        out,
        "  switch_downtime: {}",
        format_quantity(settings.switch_downtime, Dimension::Time)
    )
    .unwrap();
    out
}

/// Serializes a whole scenario document.
pub fn serialize_scenario(scenario: &Scenario) -> String {
    let mut out = serialize_links(&scenario.structure);
    if scenario.explicit_configurations {
        out.push_str(&serialize_configurations(scenario.structure.configurations()));
    }
    out.push_str(&serialize_state(&scenario.state));
    out.push_str(&serialize_strategy(&scenario.settings));
    out
}

// ---------------------------------------------------------------------------
// Node access helpers.

struct MappingView<'a> {
    entries: &'a [(String, Node)],
    line: usize,
}

impl<'a> MappingView<'a> {
    fn new(node: &'a Node, allowed: &'static [&'static str]) -> Result<Self, ModelError> {
        let Node::Mapping { entries, line } = node else {
            return Err(ModelError::WrongShape {
                field: allowed.first().copied().unwrap_or("document").to_string(),
                expected: "mapping",
                got: node.kind(),
                line: node.line(),
            });
        };
        for (key, value) in entries {
            if !allowed.contains(&key.as_str()) {
                return Err(ModelError::UnknownField { field: key.clone(), line: value.line() });
            }
        }
        Ok(MappingView { entries, line: *line })
    }

    fn get(&self, key: &str) -> Option<&'a Node> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    fn require(&self, key: &str) -> Result<&'a Node, ModelError> {
        self.get(key).ok_or_else(|| ModelError::MissingField {
            field: key.to_string(),
            line: self.line,
        })
    }

    fn scalar(&self, key: &str) -> Result<String, ModelError> {
        let (value, _) = scalar_value(key, self.require(key)?)?;
        Ok(value)
    }

    fn quantity(&self, key: &str, dim: Dimension) -> Result<f64, ModelError> {
        quantity(key, self.require(key)?, dim)
    }
}

fn as_sequence<'a>(field: &str, node: &'a Node) -> Result<&'a [Node], ModelError> {
    match node {
        Node::Sequence { items, .. } => Ok(items),
        other => Err(wrong_shape(field, "list", other)),
    }
}

fn scalar_value(field: &str, node: &Node) -> Result<(String, usize), ModelError> {
    match node {
        Node::Scalar { value, line } => Ok((value.clone(), *line)),
        other => Err(wrong_shape(field, "scalar", other)),
    }
}

fn quantity(field: &str, node: &Node, dim: Dimension) -> Result<f64, ModelError> {
    let (value, line) = scalar_value(field, node)?;
    parse_quantity(&value, dim).map_err(|source| ModelError::Unit {
        field: field.to_string(),
        line,
        source,
    })
}

fn parse_integer(field: &str, node: &Node) -> Result<i64, ModelError> {
    let (value, line) = scalar_value(field, node)?;
    value.parse::<i64>().map_err(|_| ModelError::BadValue {
        field: field.to_string(),
        line,
        message: format!("expected an integer, got {value:?}"),
    })
}

fn wrong_shape(field: &str, expected: &'static str, node: &Node) -> ModelError {
    ModelError::WrongShape {
        field: field.to_string(),
        expected,
        got: node.kind(),
        line: node.line(),
    }
}
