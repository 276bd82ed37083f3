//! Bisection search for the largest sustainable uniform consumption rate.

use log::debug;
use thiserror::Error;

use crate::coordinator::{Coordinator, CoordinatorError};
use crate::model::{NetworkState, NetworkStructure, StrategyKind};

use super::{detect_steady_state, run, SimError, SimParams};

/// Initial fills for qualification runs. The proactive cycle is rated from
/// saturated buffers — the regime its schedule is built around and the one
/// it settles into at every supportable rate. The reactive strategy is rated
/// from the scenario's operating point, since its rotation is shaped by it.
pub fn qualification_state(
    structure: &NetworkStructure,
    scenario_state: &NetworkState,
    strategy: StrategyKind,
) -> NetworkState {
    let mut state = scenario_state.clone();
    if strategy == StrategyKind::Mmak {
        for (link, spec) in state.links.iter_mut().zip(structure.links()) {
            link.fill_level = spec.buffer_capacity;
        }
    }
    state
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SweepError {
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("bracket is inverted: k_lo {lo} >= k_hi {hi}")]
    InvertedBracket { lo: f64, hi: f64 },
    #[error("k_lo = {0} bits/s is not sustainable")]
    LowEndUnsustainable(f64),
    #[error("k_hi = {0} bits/s is sustainable; raise the upper bracket")]
    HighEndSustainable(f64),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Coordinator(#[from] CoordinatorError),
}

/// Result of one qualification run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    /// Midpoint of the final bracket, bits/second.
    pub rate: f64,
    /// Probes evaluated, for reporting.
    pub probes: usize,
}

/// Bisects on the uniform consumption rate `k` (per-link consumption is
/// `k * eta`, with `eta` the scenario's consumption weights). A rate
/// qualifies as sustainable when a fresh simulation over the horizon reaches
/// a steady state with zero depletion time. The caller supplies a factory so
/// every probe starts from a pristine coordinator.
pub fn sweep_supported_rate(
    structure: &NetworkStructure,
    base_state: &NetworkState,
    make_coordinator: &mut dyn FnMut() -> Result<Coordinator, CoordinatorError>,
    params: &SimParams,
    k_lo: f64,
    k_hi: f64,
    tolerance: f64,
) -> Result<SweepOutcome, SweepError> {
    if !(tolerance > 0.0) {
        return Err(SweepError::BadTolerance(tolerance));
    }
    if !(k_lo < k_hi) {
        return Err(SweepError::InvertedBracket { lo: k_lo, hi: k_hi });
    }

    let eta = base_state.consumption_weights();
    // No mix can push a link's average generation above its best single
    // rate, so the weakest link's best weighted rate caps every strategy.
    let structural_cap = structure
        .links()
        .iter()
        .zip(&eta)
        .map(|(link, weight)| {
            structure
                .configurations()
                .iter()
                .map(|c| c.rate_for(&link.id) / weight)
                .fold(0.0f64, f64::max)
        })
        .fold(f64::INFINITY, f64::min);

    let mut probes = 0usize;
    let mut probe = |k: f64, probes: &mut usize| -> Result<bool, SweepError> {
        *probes += 1;
        if k > structural_cap {
            debug!("sweep probe k={k} above structural cap {structural_cap}");
            return Ok(false);
        }
        let mut state = base_state.clone();
        for (link, weight) in state.links.iter_mut().zip(&eta) {
            link.consumption_rate = k * weight;
        }
        let mut coordinator = make_coordinator()?;
        let trace = run(structure, &state, &mut coordinator, params)?;
        let depletion = trace.total_depletion();
        if depletion > 0.0 {
            debug!("sweep probe k={k} depletion_s={depletion} sustainable=false");
            return Ok(false);
        }
        // Qualified either by a detected periodic regime, or — for rates so
        // low that no cycle fits into the horizon — by every buffer staying
        // clear of its critical threshold through the second half of the run.
        let steady = detect_steady_state(&trace, structure).is_some();
        let sustainable = steady || untroubled_tail(&trace, structure);
        debug!("sweep probe k={k} depletion_s=0 steady={steady} sustainable={sustainable}");
        Ok(sustainable)
    };

    if !probe(k_lo, &mut probes)? {
        return Err(SweepError::LowEndUnsustainable(k_lo));
    }
    if probe(k_hi, &mut probes)? {
        return Err(SweepError::HighEndSustainable(k_hi));
    }

    let (mut lo, mut hi) = (k_lo, k_hi);
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if probe(mid, &mut probes)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(SweepOutcome { rate: 0.5 * (lo + hi), probes })
}

fn untroubled_tail(trace: &super::Trace, structure: &NetworkStructure) -> bool {
    let rows = &trace.rows;
    let start = rows.first().map_or(0.0, |r| r.time);
    let end = rows.last().map_or(0.0, |r| r.time);
    let midpoint = 0.5 * (start + end);
    rows.iter().filter(|row| row.time >= midpoint).all(|row| {
        row.fills
            .iter()
            .zip(structure.links())
            .all(|(&fill, link)| fill >= link.critical_threshold)
    })
}
