//! Test fixtures: the hexagonal example network built programmatically, so
//! unit tests do not depend on the scenario parser.

use std::collections::BTreeSet;

use crate::configspace;
use crate::model::{
    ActiveLink, LinkSpec, LinkState, Mode, NetworkState, NetworkStructure, PhysicalLinkSpec,
    ResourceId, Scenario, StrategyKind, StrategySettings,
};

pub const CAPACITY: f64 = 28_800_000.0;
pub const THRESHOLD: f64 = 1_440_000.0;

fn physical(id: &str, resources: &[&str], rate: f64) -> PhysicalLinkSpec {
    PhysicalLinkSpec {
        id: id.to_string(),
        resources: resources.iter().map(|r| ResourceId::new(*r)).collect::<BTreeSet<_>>(),
        generation_rate: rate,
    }
}

fn link(id: &str, priority: i64, physical_links: Vec<PhysicalLinkSpec>) -> LinkSpec {
    LinkSpec {
        id: id.to_string(),
        buffer_capacity: CAPACITY,
        physical_links,
        priority_index: priority,
        critical_threshold: THRESHOLD,
    }
}

/// The seven links of the hexagonal network. Transmitter A1 reaches every
/// receiver and supports zero, one or two boosting receivers; A2 and A3 reach
/// two receivers each. Links of A2 carry the highest priorities, links of A1
/// the lowest.
pub fn hexagon_links() -> Vec<LinkSpec> {
    vec![
        link(
            "A1B1",
            30,
            vec![
                physical("A1B1.1", &["A1", "B1", "L1"], 9600.0),
                physical("A1B1.2", &["A1", "B1", "B2", "L1"], 11200.0),
                physical("A1B1.3", &["A1", "B1", "B3", "L1"], 11200.0),
                physical("A1B1.4", &["A1", "B1", "B2", "B3", "L1"], 12800.0),
            ],
        ),
        link(
            "A1B2",
            20,
            vec![
                physical("A1B2.1", &["A1", "B2", "L1"], 9600.0),
                physical("A1B2.2", &["A1", "B2", "B1", "L1"], 11200.0),
                physical("A1B2.3", &["A1", "B2", "B3", "L1"], 11200.0),
                physical("A1B2.4", &["A1", "B2", "B1", "B3", "L1"], 12800.0),
            ],
        ),
        link(
            "A1B3",
            10,
            vec![
                physical("A1B3.1", &["A1", "B3", "L1"], 9600.0),
                physical("A1B3.2", &["A1", "B3", "B1", "L1"], 11200.0),
                physical("A1B3.3", &["A1", "B3", "B2", "L1"], 11200.0),
                physical("A1B3.4", &["A1", "B3", "B1", "B2", "L1"], 12800.0),
            ],
        ),
        link(
            "A2B1",
            70,
            vec![
                physical("A2B1.1", &["A2", "B1", "L2"], 9600.0),
                physical("A2B1.2", &["A2", "B1", "B2", "L2"], 11200.0),
            ],
        ),
        link(
            "A2B2",
            60,
            vec![
                physical("A2B2.1", &["A2", "B2", "L2"], 9600.0),
                physical("A2B2.2", &["A2", "B2", "B1", "L2"], 11200.0),
            ],
        ),
        link(
            "A3B2",
            50,
            vec![
                physical("A3B2.1", &["A3", "B2", "L3"], 9600.0),
                physical("A3B2.2", &["A3", "B2", "B3", "L3"], 11200.0),
            ],
        ),
        link(
            "A3B3",
            40,
            vec![
                physical("A3B3.1", &["A3", "B3", "L3"], 9600.0),
                physical("A3B3.2", &["A3", "B3", "B2", "L3"], 11200.0),
            ],
        ),
    ]
}

/// Initial buffer fills phased for the reactive rotation: the network splits
/// into three pairs that one configuration can serve together plus the
/// doubly-boosted solo link, and consecutive pairs sit a third of the usable
/// buffer range apart, so threshold crossings arrive one pair at a time
/// regardless of the consumption rate.
fn staggered_state(structure: &NetworkStructure) -> NetworkState {
    let fill = |link_id: &str| match link_id {
        // Pair served by {A2B1.2, A1B3.1}: at the critical threshold.
        "A2B1" | "A1B3" => THRESHOLD,
        // Pair served by {A2B2.2, A3B3.1}: one rotation leg from critical.
        "A2B2" | "A3B3" => THRESHOLD + (CAPACITY - THRESHOLD) / 3.0,
        // Pair served by {A1B1.1, A3B2.2}: two legs from critical.
        "A1B1" | "A3B2" => THRESHOLD + 2.0 * (CAPACITY - THRESHOLD) / 3.0,
        // Boosted solo link: a full drain from critical.
        "A1B2" => CAPACITY,
        other => panic!("unexpected link {other}"),
    };
    NetworkState {
        time: 0.0,
        links: structure
            .links()
            .iter()
            .map(|l| LinkState {
                link_id: l.id.clone(),
                fill_level: fill(&l.id).round(),
                consumption_rate: 2350.0,
            })
            .collect(),
    }
}

fn scenario_from_links(links: Vec<LinkSpec>) -> Scenario {
    let bare = NetworkStructure::new(links, Vec::new());
    let structure = configspace::resolve_configurations(&bare, false).unwrap();
    let state = staggered_state(&structure);
    Scenario {
        structure,
        state,
        settings: StrategySettings {
            strategy: StrategyKind::Fmcb,
            mode: Mode::EventDriven,
            uniform_consumption: Some(2350.0),
            ..StrategySettings::default()
        },
        explicit_configurations: false,
    }
}

/// The hexagonal example network with its useful configurations derived.
pub fn hexagon() -> Scenario {
    scenario_from_links(hexagon_links())
}

/// Variant of the hexagon in which only transmitter A1 supports boosted
/// physical links; A2 and A3 keep their plain links only.
///
/// Without boosted alternatives for A2 and A3, the reactive rotation runs on
/// the two fully-parallel matchings plus the boosted solo link, so the fills
/// are phased in those three groups: each matching's members synced, the
/// groups half a usable buffer apart, the solo a full drain out.
pub fn hexagon_a1_boost_only() -> Scenario {
    let links = hexagon_links()
        .into_iter()
        .map(|mut link| {
            if !link.id.starts_with("A1") {
                link.physical_links.truncate(1);
            }
            link
        })
        .collect();
    let mut scenario = scenario_from_links(links);
    for state in &mut scenario.state.links {
        state.fill_level = match state.link_id.as_str() {
            "A1B3" | "A2B1" | "A3B2" => THRESHOLD,
            "A1B1" | "A2B2" | "A3B3" => THRESHOLD + 0.475 * CAPACITY,
            "A1B2" => CAPACITY,
            other => panic!("unexpected link {other}"),
        };
    }
    for state in &mut scenario.state.links {
        state.consumption_rate = 3400.0;
    }
    // At the rates this variant sustains, a full 600 s batching delay would
    // outrun the 5% threshold headroom (grace * rate > threshold), so the
    // variant operates with a tighter grace window.
    scenario.settings.grace_time = 300.0;
    scenario.settings.uniform_consumption = Some(3400.0);
    scenario
}

/// ActiveLink entry for `physical_link_id` with its declared rate.
pub fn active(structure: &NetworkStructure, link_id: &str, physical_link_id: &str) -> ActiveLink {
    let link = &structure.links()[structure.link_index(link_id).unwrap()];
    let physical = link.physical_link(physical_link_id).unwrap();
    ActiveLink {
        link_id: link_id.to_string(),
        physical_link_id: physical_link_id.to_string(),
        generation_rate: physical.generation_rate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model;

    // The committed scenario files and these fixtures describe the same
    // networks; drift in either direction fails here.
    #[test]
    fn committed_hexagon_matches_the_fixture() {
        let text = include_str!("../../../scenarios/hexagon.scenario");
        let scenario = model::parse_scenario(text).unwrap();
        let fixture = hexagon();
        assert_eq!(scenario.structure.links(), fixture.structure.links());
        assert_eq!(scenario.state, fixture.state);
        assert_eq!(scenario.settings, fixture.settings);
        assert!(!scenario.explicit_configurations);
    }

    #[test]
    fn committed_variant_matches_the_fixture() {
        let text = include_str!("../../../scenarios/hexagon_a1_boost.scenario");
        let scenario = model::parse_scenario(text).unwrap();
        let fixture = hexagon_a1_boost_only();
        assert_eq!(scenario.structure.links(), fixture.structure.links());
        assert_eq!(scenario.state, fixture.state);
        assert_eq!(scenario.settings, fixture.settings);
    }
}
