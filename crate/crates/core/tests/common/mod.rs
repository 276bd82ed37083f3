//! Shared support for the integration suites: scenario loading, an
//! LP vertex oracle that is independent of the simplex implementation, and
//! random instance generators.

#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::rngs::StdRng;
use rand::Rng;

use keyswitch_core::configspace;
use keyswitch_core::coordinator::{Coordinator, CoordinatorConfig};
use keyswitch_core::model::{
    self, ActiveLink, Configuration, LinkSpec, LinkState, NetworkState, NetworkStructure,
    PhysicalLinkSpec, ResourceId, Scenario, StrategyKind,
};

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

/// Loads a committed scenario and derives its configurations.
pub fn load_scenario(name: &str) -> Scenario {
    let text = std::fs::read_to_string(scenario_path(name)).expect("scenario file");
    let mut scenario = model::parse_scenario(&text).expect("valid scenario");
    scenario.structure =
        configspace::resolve_configurations(&scenario.structure, scenario.explicit_configurations)
            .expect("configuration derivation");
    scenario
}

pub fn coordinator_factory(
    scenario: &Scenario,
    strategy: StrategyKind,
) -> impl FnMut() -> Result<Coordinator, keyswitch_core::coordinator::CoordinatorError> {
    let structure = scenario.structure.clone();
    let mut settings = scenario.settings.clone();
    settings.strategy = strategy;
    settings.mode = match strategy {
        StrategyKind::Fmcb => model::Mode::EventDriven,
        StrategyKind::Mmak => model::Mode::Periodic,
    };
    let config = CoordinatorConfig::from_settings(&settings);
    move || Coordinator::new(structure.clone(), config.clone())
}

/// Emits the per-criterion verdict line and fails the test on FAIL.
pub fn report(criterion: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("ACCEPTANCE {criterion}: {verdict} ({detail})");
    assert!(pass, "criterion {criterion} failed: {detail}");
}

// ---------------------------------------------------------------------------
// Brute-force oracle for the duration-share program
//   max k  s.t.  gamma p >= k, sum(p) <= 1, p >= 0.
//
// Enumerates every candidate vertex: a support of configurations with the
// budget row tight plus an equal number of tight link rows. Vertices with a
// slack budget can never beat a tight-budget vertex (scaling p up only helps
// when any gamma entry is positive), so k = 0 covers them.

/// Returns the optimal value found by exhaustive vertex enumeration.
pub fn lp_oracle_max_k(gamma: &[Vec<f64>]) -> f64 {
    let links = gamma.len();
    let configs = if links == 0 { 0 } else { gamma[0].len() };
    let scale = gamma
        .iter()
        .flatten()
        .fold(1.0f64, |acc, &v| acc.max(v.abs()));
    let tol = 1e-7 * scale;

    // Which links each configuration serves, as a bitmask.
    let served_by: Vec<u32> = (0..configs)
        .map(|c| {
            (0..links)
                .filter(|&l| gamma[l][c] > 0.0)
                .fold(0u32, |mask, l| mask | (1 << l))
        })
        .collect();

    let mut best = 0.0f64;
    let max_support = configs.min(links);
    let mut support = Vec::new();
    let mut tight = Vec::new();
    let mut scratch = Scratch::default();
    for size in 1..=max_support {
        combinations(configs, size, &mut support, &mut |support| {
            // A tight link nobody in the support serves pins k to zero, so
            // tight sets come from the union of served links only; and a
            // support configuration serving no tight link wastes budget that
            // a smaller support spends better, so those vertices are skipped
            // as well. Neither prune can hide the maximum.
            let servable: Vec<usize> = {
                let union = support.iter().fold(0u32, |mask, &c| mask | served_by[c]);
                (0..links).filter(|&l| union & (1 << l) != 0).collect()
            };
            if servable.len() < size {
                return;
            }
            combinations(servable.len(), size, &mut tight, &mut |tight_positions| {
                let mut tight_mask = 0u32;
                let mut tight_links = [0usize; 32];
                for (slot, &position) in tight_positions.iter().enumerate() {
                    tight_links[slot] = servable[position];
                    tight_mask |= 1 << servable[position];
                }
                if support.iter().any(|&c| served_by[c] & tight_mask == 0) {
                    return;
                }
                if let Some(k) =
                    vertex_value(gamma, support, &tight_links[..size], tol, &mut scratch)
                {
                    if k > best {
                        best = k;
                    }
                }
            });
        });
    }
    best
}

#[derive(Default)]
pub struct Scratch {
    matrix: Vec<f64>,
    solution: Vec<f64>,
}

fn combinations(n: usize, size: usize, scratch: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
    fn recurse(
        n: usize,
        size: usize,
        start: usize,
        scratch: &mut Vec<usize>,
        visit: &mut impl FnMut(&[usize]),
    ) {
        if scratch.len() == size {
            visit(scratch);
            return;
        }
        let remaining = size - scratch.len();
        for index in start..=n.saturating_sub(remaining) {
            scratch.push(index);
            recurse(n, size, index + 1, scratch, visit);
            scratch.pop();
        }
    }
    scratch.clear();
    recurse(n, size, 0, scratch, visit);
}

/// Solves for the vertex where `support` carries the mix, the budget row is
/// tight, and the `tight` link rows meet `k` exactly; returns its objective
/// when feasible.
fn vertex_value(
    gamma: &[Vec<f64>],
    support: &[usize],
    tight: &[usize],
    tol: f64,
    scratch: &mut Scratch,
) -> Option<f64> {
    let s = support.len();
    let n = s + 1;
    let width = n + 1;
    // Unknowns: p over the support, then k; augmented flat row-major matrix.
    scratch.matrix.clear();
    scratch.matrix.resize(n * width, 0.0);
    let matrix = &mut scratch.matrix;
    for (row, &link) in tight.iter().enumerate() {
        for (col, &config) in support.iter().enumerate() {
            matrix[row * width + col] = gamma[link][config];
        }
        matrix[row * width + s] = -1.0;
    }
    for col in 0..s {
        matrix[s * width + col] = 1.0;
    }
    matrix[s * width + n] = 1.0;

    gaussian_solve(matrix, n, &mut scratch.solution)?;
    let (p, k) = scratch.solution.split_at(s);
    let k = k[0];

    if p.iter().any(|&v| v < -tol) {
        return None;
    }
    for row in gamma {
        let served: f64 = support.iter().zip(p).map(|(&c, v)| row[c] * v).sum();
        if served < k - tol {
            return None;
        }
    }
    Some(k)
}

/// Gaussian elimination with partial pivoting over a flat augmented matrix
/// of `n` rows and `n + 1` columns.
fn gaussian_solve(matrix: &mut [f64], n: usize, solution: &mut Vec<f64>) -> Option<()> {
    let width = n + 1;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&a, &b| matrix[a * width + col].abs().total_cmp(&matrix[b * width + col].abs()))?;
        if matrix[pivot * width + col].abs() < 1e-12 {
            return None;
        }
        if pivot != col {
            for j in 0..width {
                matrix.swap(col * width + j, pivot * width + j);
            }
        }
        let pivot_value = matrix[col * width + col];
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = matrix[row * width + col] / pivot_value;
            if factor == 0.0 {
                continue;
            }
            for j in col..width {
                matrix[row * width + j] -= factor * matrix[col * width + j];
            }
        }
    }
    solution.clear();
    solution.extend((0..n).map(|row| matrix[row * width + n] / matrix[row * width + row]));
    Some(())
}

// ---------------------------------------------------------------------------
// Random instances.

/// Random gamma matrix with `links + configs <= 12`, entries zero or drawn
/// from realistic rate magnitudes.
pub fn random_gamma(rng: &mut StdRng) -> Vec<Vec<f64>> {
    let links = rng.random_range(1..=6);
    let configs = rng.random_range(1..=(12 - links).min(8));
    (0..links)
        .map(|_| {
            (0..configs)
                .map(|_| {
                    if rng.random_bool(0.45) {
                        0.0
                    } else {
                        rng.random_range(1..=128) as f64 * 100.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Random small network satisfying every structural invariant: a handful of
/// links over shared transmitter/receiver pools, one to three physical links
/// each.
pub fn random_network(rng: &mut StdRng) -> NetworkStructure {
    let transmitters = rng.random_range(1..=3);
    let receivers = rng.random_range(1..=3);
    let link_count = rng.random_range(1..=4);

    let mut links = Vec::new();
    let mut used_pairs = BTreeSet::new();
    for index in 0..link_count {
        let tx = rng.random_range(0..transmitters);
        let rx = rng.random_range(0..receivers);
        if !used_pairs.insert((tx, rx)) {
            continue;
        }
        let link_id = format!("T{tx}R{rx}");
        let mut physical_links = Vec::new();
        let plain_rate = [4800.0, 9600.0][rng.random_range(0..2)];
        physical_links.push(PhysicalLinkSpec {
            id: format!("{link_id}.1"),
            resources: [format!("T{tx}"), format!("R{rx}"), format!("W{tx}")]
                .into_iter()
                .map(ResourceId::new)
                .collect(),
            generation_rate: plain_rate,
        });
        // Optionally boosted by another receiver.
        if receivers > 1 && rng.random_bool(0.5) {
            let helper = (rx + 1) % receivers;
            physical_links.push(PhysicalLinkSpec {
                id: format!("{link_id}.2"),
                resources: [
                    format!("T{tx}"),
                    format!("R{rx}"),
                    format!("R{helper}"),
                    format!("W{tx}"),
                ]
                .into_iter()
                .map(ResourceId::new)
                .collect(),
                generation_rate: plain_rate + 1600.0,
            });
        }
        links.push(LinkSpec {
            id: link_id,
            buffer_capacity: 1_000_000.0,
            physical_links,
            priority_index: index as i64,
            critical_threshold: 50_000.0,
        });
    }
    if links.is_empty() {
        links.push(LinkSpec {
            id: "T0R0".to_string(),
            buffer_capacity: 1_000_000.0,
            physical_links: vec![PhysicalLinkSpec {
                id: "T0R0.1".to_string(),
                resources: ["T0", "R0"].into_iter().map(ResourceId::new).collect(),
                generation_rate: 9600.0,
            }],
            priority_index: 0,
            critical_threshold: 50_000.0,
        });
    }
    NetworkStructure::new(links, Vec::new())
}

/// Random state for a structure: whole-bit fills, positive consumption.
pub fn random_state(rng: &mut StdRng, structure: &NetworkStructure) -> NetworkState {
    NetworkState {
        time: 0.0,
        links: structure
            .links()
            .iter()
            .map(|link| LinkState {
                link_id: link.id.clone(),
                fill_level: rng.random_range(0..=link.buffer_capacity as u64) as f64,
                consumption_rate: rng.random_range(100..=12_000) as f64,
            })
            .collect(),
    }
}

/// A configuration built from one physical link per chosen link.
pub fn config_of(structure: &NetworkStructure, id: &str, members: &[(&str, &str)]) -> Configuration {
    Configuration {
        id: id.to_string(),
        active_links: members
            .iter()
            .map(|(link_id, physical_id)| {
                let link = &structure.links()[structure.link_index(link_id).unwrap()];
                let physical = link.physical_link(physical_id).unwrap();
                ActiveLink {
                    link_id: link_id.to_string(),
                    physical_link_id: physical_id.to_string(),
                    generation_rate: physical.generation_rate,
                }
            })
            .collect(),
    }
}
