//! Configuration-space generation: derives every feasible configuration from
//! the link list by combinatorial search and reduces the result to the useful
//! (non-superseded) set.
//!
//! A configuration supersedes another when it generates at least as many keys
//! for every link, so the useful set is the Pareto frontier of the per-link
//! rate vectors. Enumeration is deliberately brute force; it is meant for
//! networks of tens of physical links, and refuses larger inputs instead of
//! silently taking forever.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::model::{ActiveLink, Configuration, LinkSpec, NetworkStructure, ResourceId};

/// Default cap on the total physical-link count accepted by
/// [`enumerate_configurations`].
pub const DEFAULT_PHYSICAL_LINK_BOUND: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigSpaceError {
    #[error("{count} physical links exceed the enumeration bound of {bound}; supply a configurations: section instead")]
    TooManyPhysicalLinks { count: usize, bound: usize },
    #[error("configuration {config} references unknown link {link}")]
    DanglingLink { config: String, link: String },
    #[error("configuration {config} references unknown physical link {physical_link} on link {link}")]
    DanglingPhysicalLink { config: String, link: String, physical_link: String },
}

/// Per-link generation rates of one configuration, indexed by the canonical
/// link order of the structure.
#[derive(Debug, Clone, PartialEq)]
pub struct RateVector(pub Vec<f64>);

impl RateVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Componentwise `self <= other`.
    pub fn dominated_by(&self, other: &RateVector) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

/// Rate this configuration gives each link; 0 for inactive links.
pub fn rate_vector(
    config: &Configuration,
    structure: &NetworkStructure,
) -> Result<RateVector, ConfigSpaceError> {
    let mut rates = vec![0.0; structure.links().len()];
    for active in &config.active_links {
        let Some(index) = structure.link_index(&active.link_id) else {
            return Err(ConfigSpaceError::DanglingLink {
                config: config.id.clone(),
                link: active.link_id.clone(),
            });
        };
        let link = &structure.links()[index];
        if link.physical_link(&active.physical_link_id).is_none() {
            return Err(ConfigSpaceError::DanglingPhysicalLink {
                config: config.id.clone(),
                link: active.link_id.clone(),
                physical_link: active.physical_link_id.clone(),
            });
        }
        rates[index] = active.generation_rate;
    }
    Ok(RateVector(rates))
}

/// Enumerates every maximal conflict-free set of physical links with the
/// default input bound.
///
/// A set is conflict-free when its members use pairwise disjoint resources
/// and activate at most one physical link per abstract link; it is maximal
/// when no further physical link can be added. Non-maximal sets are
/// superseded by construction and therefore never emitted.
pub fn enumerate_configurations(links: &[LinkSpec]) -> Result<Vec<Configuration>, ConfigSpaceError> {
    enumerate_configurations_bounded(links, DEFAULT_PHYSICAL_LINK_BOUND)
}

/// [`enumerate_configurations`] with an explicit physical-link bound.
pub fn enumerate_configurations_bounded(
    links: &[LinkSpec],
    bound: usize,
) -> Result<Vec<Configuration>, ConfigSpaceError> {
    let count: usize = links.iter().map(|l| l.physical_links.len()).sum();
    if count > bound {
        return Err(ConfigSpaceError::TooManyPhysicalLinks { count, bound });
    }

    let mut ordered: Vec<&LinkSpec> = links.iter().collect();
    ordered.sort_by(|a, b| a.id.cmp(&b.id));

    let mut configs = Vec::new();
    let mut chosen: Vec<(usize, usize)> = Vec::new();
    search(&ordered, 0, &mut BTreeSet::new(), &mut chosen, &mut configs);
    configs.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(configs)
}

fn search<'a>(
    links: &[&'a LinkSpec],
    depth: usize,
    used: &mut BTreeSet<&'a ResourceId>,
    chosen: &mut Vec<(usize, usize)>,
    out: &mut Vec<Configuration>,
) {
    if depth == links.len() {
        if !chosen.is_empty() && is_maximal(links, used, chosen) {
            out.push(build_config(links, chosen));
        }
        return;
    }
    for (physical_index, physical) in links[depth].physical_links.iter().enumerate() {
        if physical.resources.iter().all(|r| !used.contains(r)) {
            for resource in &physical.resources {
                used.insert(resource);
            }
            chosen.push((depth, physical_index));
            search(links, depth + 1, used, chosen, out);
            chosen.pop();
            for resource in &physical.resources {
                used.remove(resource);
            }
        }
    }
    // The branch where this link stays inactive.
    search(links, depth + 1, used, chosen, out);
}

fn is_maximal(
    links: &[&LinkSpec],
    used: &BTreeSet<&ResourceId>,
    chosen: &[(usize, usize)],
) -> bool {
    for (index, link) in links.iter().enumerate() {
        if chosen.iter().any(|&(l, _)| l == index) {
            continue;
        }
        for physical in &link.physical_links {
            if physical.resources.iter().all(|r| !used.contains(r)) {
                return false;
            }
        }
    }
    true
}

fn build_config(links: &[&LinkSpec], chosen: &[(usize, usize)]) -> Configuration {
    let mut active_links: Vec<ActiveLink> = chosen
        .iter()
        .map(|&(link_index, physical_index)| {
            let link = links[link_index];
            let physical = &link.physical_links[physical_index];
            ActiveLink {
                link_id: link.id.clone(),
                physical_link_id: physical.id.clone(),
                generation_rate: physical.generation_rate,
            }
        })
        .collect();
    active_links.sort_by(|a, b| a.physical_link_id.cmp(&b.physical_link_id));
    let id = active_links
        .iter()
        .map(|a| a.physical_link_id.as_str())
        .collect::<Vec<_>>()
        .join("+");
    Configuration { id, active_links }
}

/// Drops every configuration whose rate vector is componentwise dominated by
/// another configuration's. Exact rate-vector duplicates keep only the
/// lexicographically smallest `config_id`. The survivors come back sorted by
/// `config_id`.
pub fn reduce_useful(
    configs: &[Configuration],
    structure: &NetworkStructure,
) -> Result<Vec<Configuration>, ConfigSpaceError> {
    let vectors: Vec<RateVector> = configs
        .iter()
        .map(|c| rate_vector(c, structure))
        .collect::<Result<_, _>>()?;

    let mut useful = Vec::new();
    'candidates: for (i, config) in configs.iter().enumerate() {
        for (j, other) in configs.iter().enumerate() {
            if i == j || !vectors[i].dominated_by(&vectors[j]) {
                continue;
            }
            let strictly_better = !vectors[j].dominated_by(&vectors[i]);
            if strictly_better || other.id < config.id {
                continue 'candidates;
            }
        }
        useful.push(config.clone());
    }
    useful.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(useful)
}

/// The structure's configuration list, derived from the links when the
/// scenario did not supply one.
pub fn resolve_configurations(
    structure: &NetworkStructure,
    explicit: bool,
) -> Result<NetworkStructure, ConfigSpaceError> {
    if explicit {
        return Ok(structure.clone());
    }
    let all = enumerate_configurations(structure.links())?;
    let useful = reduce_useful(&all, structure)?;
    Ok(structure.with_configurations(useful))
}
