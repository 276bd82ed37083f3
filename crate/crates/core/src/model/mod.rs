//! Formal network model: domain types mirroring the operational data of a
//! switched QKD network, the scenario file format, and structural validation.
//!
//! A network is described by abstract links (one key buffer per node pair),
//! each fillable by one of a set of mutually exclusive physical links, plus a
//! list of configurations (sets of simultaneously active physical links with
//! pairwise-disjoint resources).

mod doc;
mod schema;
pub mod units;

pub use doc::SyntaxError;
pub use schema::{
    parse_scenario, serialize_configurations, serialize_scenario, serialize_state, Mode, Scenario,
    StrategyKind, StrategySettings, DEFAULT_CONSUMPTION, DEFAULT_GRACE_TIME, DEFAULT_HORIZON,
    DEFAULT_INITIAL_FILL_PCT,
};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Opaque hardware resource token: a transmitter, a receiver, or a wavelength.
/// Comparison is exact string equality.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ResourceId(pub String);

impl ResourceId {
    pub fn new(id: impl Into<String>) -> Self {
        ResourceId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ResourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One realizable transmitter-to-receiver channel: the resources it occupies
/// while active and the key rate it then generates.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalLinkSpec {
    pub id: String,
    pub resources: BTreeSet<ResourceId>,
    /// bits/second while active.
    pub generation_rate: f64,
}

/// An abstract link: the key buffer for one node pair plus the mutually
/// exclusive physical links that can fill it.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSpec {
    pub id: String,
    /// bits.
    pub buffer_capacity: f64,
    pub physical_links: Vec<PhysicalLinkSpec>,
    /// Administrator-assigned tie-break rank; higher wins.
    pub priority_index: i64,
    /// Fill level (bits) below which the buffer reports itself critical.
    pub critical_threshold: f64,
}

impl LinkSpec {
    pub fn physical_link(&self, id: &str) -> Option<&PhysicalLinkSpec> {
        self.physical_links.iter().find(|p| p.id == id)
    }
}

/// One entry of a configuration: `link_id` is filled by `physical_link_id`
/// at `generation_rate` bits/second.
#[derive(Debug, Clone, PartialEq)]
pub struct ActiveLink {
    pub link_id: String,
    pub physical_link_id: String,
    pub generation_rate: f64,
}

/// A set of simultaneously active physical links. Valid configurations
/// activate at most one physical link per abstract link and use pairwise
/// disjoint resource sets.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub id: String,
    pub active_links: Vec<ActiveLink>,
}

impl Configuration {
    /// Rate this configuration gives `link_id`, or 0 if the link is inactive.
    pub fn rate_for(&self, link_id: &str) -> f64 {
        self.active_links
            .iter()
            .find(|a| a.link_id == link_id)
            .map_or(0.0, |a| a.generation_rate)
    }

    pub fn physical_link_ids(&self) -> impl Iterator<Item = &str> {
        self.active_links.iter().map(|a| a.physical_link_id.as_str())
    }
}

/// The static network structure: links and configurations in canonical order.
///
/// Links are sorted by `link_id` and configurations by `config_id`, so the
/// row/column layout of every vector and matrix derived from a structure is a
/// pure function of the ids.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkStructure {
    links: Vec<LinkSpec>,
    configurations: Vec<Configuration>,
}

impl NetworkStructure {
    pub fn new(mut links: Vec<LinkSpec>, mut configurations: Vec<Configuration>) -> Self {
        links.sort_by(|a, b| a.id.cmp(&b.id));
        configurations.sort_by(|a, b| a.id.cmp(&b.id));
        NetworkStructure { links, configurations }
    }

    pub fn links(&self) -> &[LinkSpec] {
        &self.links
    }

    pub fn configurations(&self) -> &[Configuration] {
        &self.configurations
    }

    pub fn link_index(&self, id: &str) -> Option<usize> {
        self.links.binary_search_by(|l| l.id.as_str().cmp(id)).ok()
    }

    pub fn config_index(&self, id: &str) -> Option<usize> {
        self.configurations.binary_search_by(|c| c.id.as_str().cmp(id)).ok()
    }

    pub fn configuration(&self, id: &str) -> Option<&Configuration> {
        self.config_index(id).map(|i| &self.configurations[i])
    }

    /// Replaces the configuration list (used when deriving configurations
    /// from the links instead of reading them from the scenario).
    pub fn with_configurations(&self, configurations: Vec<Configuration>) -> Self {
        NetworkStructure::new(self.links.clone(), configurations)
    }

    pub fn validate(&self) -> Vec<Violation> {
        validate(self)
    }
}

/// Per-link operational state of one link buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkState {
    pub link_id: String,
    /// bits, within `[0, buffer_capacity]`.
    pub fill_level: f64,
    /// bits/second, strictly positive (key material outdates even with no
    /// consumer attached).
    pub consumption_rate: f64,
}

/// Network state at an instant; entries are ordered like
/// [`NetworkStructure::links`].
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkState {
    pub time: f64,
    pub links: Vec<LinkState>,
}

impl NetworkState {
    pub fn fills(&self) -> Vec<f64> {
        self.links.iter().map(|l| l.fill_level).collect()
    }

    pub fn consumption_rates(&self) -> Vec<f64> {
        self.links.iter().map(|l| l.consumption_rate).collect()
    }

    /// Consumption weights normalized so the least-consuming link has
    /// weight 1; uniform consumption yields the all-ones vector.
    pub fn consumption_weights(&self) -> Vec<f64> {
        let min = self
            .links
            .iter()
            .map(|l| l.consumption_rate)
            .fold(f64::INFINITY, f64::min);
        self.links.iter().map(|l| l.consumption_rate / min).collect()
    }
}

/// A structural invariant violation. Violations are data, not errors: the
/// validator reports all of them at once.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Violation {
    #[error("the link list is empty")]
    EmptyLinkList,
    #[error("link {link}: duplicate link_id")]
    DuplicateLinkId { link: String },
    #[error("link {link}: priority_index {priority} is also used by link {other}")]
    DuplicatePriority { link: String, other: String, priority: i64 },
    #[error("link {link}: buffer_capacity must be a positive whole number of bits")]
    BadCapacity { link: String },
    #[error("link {link}: critical_threshold must lie strictly between 0 and buffer_capacity")]
    BadThreshold { link: String },
    #[error("link {link} has no physical links")]
    NoPhysicalLinks { link: String },
    #[error("physical link {physical_link}: duplicate physical_link_id")]
    DuplicatePhysicalLinkId { physical_link: String },
    #[error("physical link {physical_link}: needs at least two resources (a transmitter and a receiver)")]
    TooFewResources { physical_link: String },
    #[error("physical link {physical_link}: empty resource id")]
    EmptyResourceId { physical_link: String },
    #[error("physical link {physical_link}: generation_rate must be positive")]
    NonPositiveRate { physical_link: String },
    #[error("configuration {config}: duplicate config_id")]
    DuplicateConfigId { config: String },
    #[error("configuration {config}: link {link} is activated more than once")]
    DuplicateLinkInConfig { config: String, link: String },
    #[error("configuration {config}: unknown link {link}")]
    DanglingLinkReference { config: String, link: String },
    #[error("configuration {config}: physical link {physical_link} does not belong to link {link}")]
    DanglingPhysicalLinkReference { config: String, link: String, physical_link: String },
    #[error("configuration {config}: rate {given} for {physical_link} disagrees with the declared rate {declared}")]
    RateMismatch { config: String, physical_link: String, given: f64, declared: f64 },
    #[error("configuration {config}: resource {resource} is used by more than one active physical link")]
    ResourceConflict { config: String, resource: String },
}

impl Violation {
    /// Machine-readable violation code.
    pub fn code(&self) -> &'static str {
        match self {
            Violation::EmptyLinkList => "EMPTY_LINK_LIST",
            Violation::DuplicateLinkId { .. } => "DUPLICATE_LINK_ID",
            Violation::DuplicatePriority { .. } => "DUPLICATE_PRIORITY",
            Violation::BadCapacity { .. } => "BAD_CAPACITY",
            Violation::BadThreshold { .. } => "BAD_THRESHOLD",
            Violation::NoPhysicalLinks { .. } => "NO_PHYSICAL_LINKS",
            Violation::DuplicatePhysicalLinkId { .. } => "DUPLICATE_PHYSICAL_LINK_ID",
            Violation::TooFewResources { .. } => "TOO_FEW_RESOURCES",
            Violation::EmptyResourceId { .. } => "EMPTY_RESOURCE_ID",
            Violation::NonPositiveRate { .. } => "NON_POSITIVE_RATE",
            Violation::DuplicateConfigId { .. } => "DUPLICATE_CONFIG_ID",
            Violation::DuplicateLinkInConfig { .. } => "DUPLICATE_LINK_IN_CONFIG",
            Violation::DanglingLinkReference { .. } => "DANGLING_LINK_REFERENCE",
            Violation::DanglingPhysicalLinkReference { .. } => "DANGLING_PHYSICAL_LINK_REFERENCE",
            Violation::RateMismatch { .. } => "RATE_MISMATCH",
            Violation::ResourceConflict { .. } => "RESOURCE_CONFLICT",
        }
    }
}

/// Checks every structural invariant and returns all violations found.
///
/// A structure with no violations can be consumed by every downstream module
/// without panics: ids resolve, resources are disjoint per configuration, and
/// one physical link per abstract link is active at a time.
pub fn validate(structure: &NetworkStructure) -> Vec<Violation> {
    let mut out = Vec::new();
    let links = structure.links();

    if links.is_empty() {
        out.push(Violation::EmptyLinkList);
    }

    let mut seen_links: BTreeSet<&str> = BTreeSet::new();
    let mut seen_priorities: BTreeMap<i64, &str> = BTreeMap::new();
    let mut seen_physical: BTreeSet<&str> = BTreeSet::new();
    for link in links {
        if !seen_links.insert(&link.id) {
            out.push(Violation::DuplicateLinkId { link: link.id.clone() });
        }
        if let Some(other) = seen_priorities.insert(link.priority_index, &link.id) {
            out.push(Violation::DuplicatePriority {
                link: link.id.clone(),
                other: other.to_string(),
                priority: link.priority_index,
            });
        }
        if !(link.buffer_capacity > 0.0) || link.buffer_capacity.fract() != 0.0 {
            out.push(Violation::BadCapacity { link: link.id.clone() });
        }
        if !(link.critical_threshold > 0.0 && link.critical_threshold < link.buffer_capacity) {
            out.push(Violation::BadThreshold { link: link.id.clone() });
        }
        if link.physical_links.is_empty() {
            out.push(Violation::NoPhysicalLinks { link: link.id.clone() });
        }
        for physical in &link.physical_links {
            if !seen_physical.insert(&physical.id) {
                out.push(Violation::DuplicatePhysicalLinkId { physical_link: physical.id.clone() });
            }
            if physical.resources.len() < 2 {
                out.push(Violation::TooFewResources { physical_link: physical.id.clone() });
            }
            if physical.resources.iter().any(|r| r.as_str().is_empty()) {
                out.push(Violation::EmptyResourceId { physical_link: physical.id.clone() });
            }
            if !(physical.generation_rate > 0.0) {
                out.push(Violation::NonPositiveRate { physical_link: physical.id.clone() });
            }
        }
    }

    let mut seen_configs: BTreeSet<&str> = BTreeSet::new();
    for config in structure.configurations() {
        if !seen_configs.insert(&config.id) {
            out.push(Violation::DuplicateConfigId { config: config.id.clone() });
        }
        let mut active_links: BTreeSet<&str> = BTreeSet::new();
        let mut used_resources: BTreeSet<&ResourceId> = BTreeSet::new();
        for active in &config.active_links {
            if !active_links.insert(&active.link_id) {
                out.push(Violation::DuplicateLinkInConfig {
                    config: config.id.clone(),
                    link: active.link_id.clone(),
                });
            }
            let Some(link) = structure.link_index(&active.link_id).map(|i| &links[i]) else {
                out.push(Violation::DanglingLinkReference {
                    config: config.id.clone(),
                    link: active.link_id.clone(),
                });
                continue;
            };
            let Some(physical) = link.physical_link(&active.physical_link_id) else {
                out.push(Violation::DanglingPhysicalLinkReference {
                    config: config.id.clone(),
                    link: active.link_id.clone(),
                    physical_link: active.physical_link_id.clone(),
                });
                continue;
            };
            if active.generation_rate != physical.generation_rate {
                out.push(Violation::RateMismatch {
                    config: config.id.clone(),
                    physical_link: physical.id.clone(),
                    given: active.generation_rate,
                    declared: physical.generation_rate,
                });
            }
            for resource in &physical.resources {
                if !used_resources.insert(resource) {
                    out.push(Violation::ResourceConflict {
                        config: config.id.clone(),
                        resource: resource.0.clone(),
                    });
                }
            }
        }
    }

    out
}

/// Errors from loading a scenario document.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("syntax error: {0}")]
    Syntax(#[from] SyntaxError),
    #[error("line {line}: unknown field `{field}`")]
    UnknownField { field: String, line: usize },
    #[error("line {line}: missing field `{field}`")]
    MissingField { field: String, line: usize },
    #[error("line {line}: field `{field}` should be a {expected}, not a {got}")]
    WrongShape { field: String, expected: &'static str, got: &'static str, line: usize },
    #[error("line {line}: field `{field}`: {source}")]
    Unit {
        field: String,
        line: usize,
        source: units::UnitError,
    },
    #[error("line {line}: field `{field}`: {message}")]
    BadValue { field: String, line: usize, message: String },
    #[error("line {line}: state refers to unknown link {link}")]
    UnknownStateLink { link: String, line: usize },
    #[error("line {line}: duplicate state entry for link {link}")]
    DuplicateStateLink { link: String, line: usize },
    #[error("link {link}: {message}")]
    BadState { link: String, message: String },
    #[error("invalid network structure: {}", format_violations(.0))]
    Invariants(Vec<Violation>),
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| format!("[{}] {v}", v.code()))
        .collect::<Vec<_>>()
        .join("; ")
}
