//! Switching strategies over the configuration space.
//!
//! The rate matrix maps configurations to per-link key generation rates;
//! dividing each row by its consumption weight gives the normalized matrix
//! used by both strategies. FMCB picks the single configuration that refills
//! the most critical buffer fastest; MMAK solves a small linear program for
//! the duration shares that maximize the lowest relative average key gain,
//! which equals the largest uniformly supported consumption rate.

mod simplex;

pub use simplex::SimplexError;

use thiserror::Error;

use crate::configspace::{self, ConfigSpaceError};
use crate::model::{NetworkState, NetworkStructure};

/// Pivot cap factor for the duration-share program: 50 * (links + configs).
const PIVOT_CAP_FACTOR: usize = 50;
/// Relative solver tolerance.
const SOLVE_TOLERANCE: f64 = 1e-9;
/// Mix entries below this are treated as zero (LP noise), without
/// renormalizing the rest.
const MIX_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error("eta must have one strictly positive weight per link ({expected} links, got {got})")]
    BadEta { expected: usize, got: usize },
    #[error("mix vector has {got} entries for {expected} configurations")]
    MixDimension { expected: usize, got: usize },
    #[error("mix entry {index} = {value} is outside [0, 1] or the entries sum past 1")]
    MixRange { index: usize, value: f64 },
    #[error("no configuration generates key for link {link}")]
    NoServingConfiguration { link: String },
    #[error("the mix selects no configuration")]
    EmptyMix,
    #[error(transparent)]
    ConfigSpace(#[from] ConfigSpaceError),
    #[error("duration-share program: {0}")]
    Solver(#[from] SimplexError),
}

/// Dense row-major matrix, sized for desk-scale networks.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    /// `self * v` for a length-`cols` vector.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Configuration-to-rate mapping for one network: the raw matrix `g`, the
/// weight-normalized matrix `gamma` with `gamma[l][c] = g[l][c] / eta[l]`,
/// and the weights themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    link_ids: Vec<String>,
    config_ids: Vec<String>,
    g: Mat,
    gamma: Mat,
    eta: Vec<f64>,
}

impl RateMatrix {
    /// Builds a matrix directly from per-link rate rows, for programmatic
    /// instances that do not come from a parsed network structure.
    pub fn from_rows(rows: Vec<Vec<f64>>, eta: Vec<f64>) -> Result<Self, OptimizeError> {
        let links = rows.len();
        let configs = rows.first().map_or(0, Vec::len);
        if eta.len() != links || eta.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(OptimizeError::BadEta { expected: links, got: eta.len() });
        }
        let mut g = Mat::zeros(links, configs);
        let mut gamma = Mat::zeros(links, configs);
        for (l, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), configs, "ragged rate rows");
            for (c, &rate) in row.iter().enumerate() {
                g.set(l, c, rate);
                gamma.set(l, c, rate / eta[l]);
            }
        }

        Ok(RateMatrix {
            link_ids: (0..links).map(|l| format!("link{l}")).collect(),
            config_ids: (0..configs).map(|c| format!("config{c:03}")).collect(),
            g,
            gamma,
            eta,
        })
    }

    pub fn links(&self) -> usize {
        self.link_ids.len()
    }

    pub fn configs(&self) -> usize {
        self.config_ids.len()
    }

    pub fn link_ids(&self) -> &[String] {
        &self.link_ids
    }

    pub fn config_ids(&self) -> &[String] {
        &self.config_ids
    }

    pub fn g(&self) -> &Mat {
        &self.g
    }

    pub fn gamma(&self) -> &Mat {
        &self.gamma
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }
}

/// Builds the rate matrices for `structure` under consumption weights `eta`.
/// Column `c` equals the rate vector of configuration `c` in canonical order.
pub fn build_matrices(
    structure: &NetworkStructure,
    eta: &[f64],
) -> Result<RateMatrix, OptimizeError> {
    let links = structure.links();
    if eta.len() != links.len() || eta.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
        return Err(OptimizeError::BadEta { expected: links.len(), got: eta.len() });
    }
    let configs = structure.configurations();
    let mut g = Mat::zeros(links.len(), configs.len());
    let mut gamma = Mat::zeros(links.len(), configs.len());
    for (c, config) in configs.iter().enumerate() {
        let rates = configspace::rate_vector(config, structure)?;
        for (l, &rate) in rates.as_slice().iter().enumerate() {
            g.set(l, c, rate);
            gamma.set(l, c, rate / eta[l]);
        }
    }
    Ok(RateMatrix {
        link_ids: links.iter().map(|l| l.id.clone()).collect(),
        config_ids: configs.iter().map(|c| c.id.clone()).collect(),
        g,
        gamma,
        eta: eta.to_vec(),
    })
}

/// Relative configuration durations. Entries lie in `[0, 1]` and sum to at
/// most 1; the slack is idle time.
#[derive(Debug, Clone, PartialEq)]
pub struct MixVector(pub Vec<f64>);

impl MixVector {
    pub fn unit(configs: usize, index: usize) -> Self {
        let mut p = vec![0.0; configs];
        p[index] = 1.0;
        MixVector(p)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    fn checked(&self, matrix: &RateMatrix) -> Result<(), OptimizeError> {
        if self.0.len() != matrix.configs() {
            return Err(OptimizeError::MixDimension {
                expected: matrix.configs(),
                got: self.0.len(),
            });
        }
        let mut sum = 0.0;
        for (index, &value) in self.0.iter().enumerate() {
            if !(0.0..=1.0 + 1e-9).contains(&value) {
                return Err(OptimizeError::MixRange { index, value });
            }
            sum += value;
        }
        if sum > 1.0 + 1e-9 {
            return Err(OptimizeError::MixRange { index: self.0.len(), value: sum });
        }
        Ok(())
    }
}

/// Relative average key gain per link: `gamma * p - k`.
pub fn key_gain(matrix: &RateMatrix, p: &MixVector, k: f64) -> Result<Vec<f64>, OptimizeError> {
    p.checked(matrix)?;
    Ok(matrix.gamma.mul_vec(&p.0).into_iter().map(|v| v - k).collect())
}

/// Largest uniform weighted consumption rate the mix supports: the smallest
/// entry of `gamma * p`. Non-negative for every valid mix.
pub fn k_supported(matrix: &RateMatrix, p: &MixVector) -> Result<f64, OptimizeError> {
    p.checked(matrix)?;
    Ok(matrix
        .gamma
        .mul_vec(&p.0)
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

/// Links ordered most critical first: ascending fill over weight, ties to the
/// higher priority index.
pub fn criticality_ranking(
    state: &NetworkState,
    structure: &NetworkStructure,
    eta: &[f64],
) -> Result<Vec<usize>, OptimizeError> {
    let links = structure.links();
    if eta.len() != links.len() || eta.iter().any(|&w| !(w > 0.0)) {
        return Err(OptimizeError::BadEta { expected: links.len(), got: eta.len() });
    }
    let mut order: Vec<usize> = (0..links.len()).collect();
    order.sort_by(|&a, &b| {
        let ka = state.links[a].fill_level / eta[a];
        let kb = state.links[b].fill_level / eta[b];
        ka.total_cmp(&kb)
            .then_with(|| links[b].priority_index.cmp(&links[a].priority_index))
    });
    Ok(order)
}

/// Index of the link closest to depletion (`argmin fill/eta`), ties broken by
/// the highest priority index.
pub fn fmcb_most_critical(
    state: &NetworkState,
    structure: &NetworkStructure,
    eta: &[f64],
) -> Result<usize, OptimizeError> {
    Ok(criticality_ranking(state, structure, eta)?[0])
}

/// Ordered switching plan: `(configuration, duration)` entries applied
/// cyclically. A single entry may have infinite duration, meaning no further
/// config-change interrupt is scheduled.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub entries: Vec<ScheduleEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleEntry {
    pub config_id: String,
    /// Seconds; `f64::INFINITY` only in a single-entry schedule.
    pub duration: f64,
}

impl Schedule {
    pub fn single_infinite(config_id: impl Into<String>) -> Self {
        Schedule {
            entries: vec![ScheduleEntry { config_id: config_id.into(), duration: f64::INFINITY }],
        }
    }

    pub fn is_infinite(&self) -> bool {
        self.entries.len() == 1 && self.entries[0].duration.is_infinite()
    }

    /// Total cycle length; infinite for an event-style schedule.
    pub fn period(&self) -> f64 {
        self.entries.iter().map(|e| e.duration).sum()
    }
}

/// Picks the configuration that refills the most critical buffer fastest.
///
/// `ranking` lists link indices most critical first (see
/// [`criticality_ranking`]). Among the configurations maximizing the rate for
/// the most critical link, the one maximizing the rate for the next link in
/// the ranking wins, recursively; any residual tie goes to the
/// lexicographically smallest `config_id`.
pub fn fmcb_select(matrix: &RateMatrix, ranking: &[usize]) -> Result<Schedule, OptimizeError> {
    let critical = ranking[0];
    let mut candidates: Vec<usize> = (0..matrix.configs()).collect();
    let best = row_max(&matrix.gamma, critical, &candidates);
    if !(best > 0.0) {
        return Err(OptimizeError::NoServingConfiguration {
            link: matrix.link_ids[critical].clone(),
        });
    }
    for &link in ranking {
        candidates.retain_max(|&c| matrix.gamma.get(link, c));
        if candidates.len() == 1 {
            break;
        }
    }
    // Config ids are sorted, so the smallest index is the smallest id.
    Ok(Schedule::single_infinite(matrix.config_ids[candidates[0]].clone()))
}

fn row_max(m: &Mat, row: usize, candidates: &[usize]) -> f64 {
    candidates
        .iter()
        .map(|&c| m.get(row, c))
        .fold(f64::NEG_INFINITY, f64::max)
}

trait RetainMax {
    fn retain_max(&mut self, key: impl Fn(&usize) -> f64);
}

impl RetainMax for Vec<usize> {
    fn retain_max(&mut self, key: impl Fn(&usize) -> f64) {
        let best = self.iter().map(&key).fold(f64::NEG_INFINITY, f64::max);
        self.retain(|c| key(c) == best);
    }
}

/// Solves the duration-share program
/// `max k  s.t.  gamma p >= k,  sum(p) <= 1,  p >= 0`
/// and returns an optimal vertex `(p*, k*)`.
///
/// The program is never infeasible (`p = 0, k = 0`) and never unbounded
/// (`k` is capped by the largest entry of gamma). Entries of `p*` below
/// 1e-12 are clamped to zero; the remaining durations are kept as solved.
pub fn mmak_solve(matrix: &RateMatrix) -> Result<(MixVector, f64), OptimizeError> {
    let links = matrix.links();
    let configs = matrix.configs();
    // Variables: p_0..p_{C-1}, then k.
    let mut objective = vec![0.0; configs + 1];
    objective[configs] = 1.0;

    let mut rows = Vec::with_capacity(links + 1);
    let mut budget = vec![1.0; configs + 1];
    budget[configs] = 0.0;
    rows.push((budget, 1.0));
    for l in 0..links {
        let mut row: Vec<f64> = (0..configs).map(|c| -matrix.gamma.get(l, c)).collect();
        row.push(1.0);
        rows.push((row, 0.0));
    }

    let (x, k) = simplex::maximize(&simplex::Program {
        objective: &objective,
        rows: &rows,
        tolerance: SOLVE_TOLERANCE,
        pivot_cap: PIVOT_CAP_FACTOR * (links + configs),
    })?;

    let mut p = x[..configs].to_vec();
    for value in &mut p {
        if *value < MIX_CLAMP {
            *value = 0.0;
        }
    }
    Ok((MixVector(p), k.max(0.0)))
}

/// Expands a duration-share mix into a concrete cyclic schedule.
///
/// The configurations with positive shares run in ascending `config_id`
/// order. For the largest possible period, the per-link buffer trajectory of
/// one cycle at consumption `k* * eta` is examined (saturating at capacity,
/// i.e. only the drawdown below the running peak matters); the period is
/// scaled so the largest relative drawdown spans exactly one full buffer.
/// If no link ever draws down, every buffer saturates and a single infinite
/// entry of the best configuration is returned.
pub fn schedule_from_mix(
    matrix: &RateMatrix,
    p: &MixVector,
    structure: &NetworkStructure,
) -> Result<Schedule, OptimizeError> {
    p.checked(matrix)?;
    let support: Vec<usize> = (0..matrix.configs()).filter(|&c| p.0[c] > 0.0).collect();
    if support.is_empty() {
        return Err(OptimizeError::EmptyMix);
    }
    let k = k_supported(matrix, p)?;
    let links = structure.links();

    // Largest relative drawdown of the cyclic trajectory, per link. Two
    // passes over the cycle cover drawdown windows that wrap around the
    // period boundary.
    let mut period_bound = f64::INFINITY;
    for (l, link) in links.iter().enumerate() {
        let consumption = k * matrix.eta[l];
        let mut level = 0.0;
        let mut peak: f64 = 0.0;
        let mut drawdown: f64 = 0.0;
        for _ in 0..2 {
            for &c in &support {
                level += (matrix.g.get(l, c) - consumption) * p.0[c];
                peak = peak.max(level);
                drawdown = drawdown.max(peak - level);
            }
        }
        if drawdown > 0.0 {
            period_bound = period_bound.min(link.buffer_capacity / drawdown);
        }
    }

    if !period_bound.is_finite() {
        // Static regime: every buffer saturates under any supported
        // configuration, so pick the one with the best worst-link rate.
        let best = support
            .iter()
            .copied()
            .max_by(|&a, &b| {
                let ka = column_min(matrix, a);
                let kb = column_min(matrix, b);
                ka.total_cmp(&kb).then(matrix.config_ids[b].cmp(&matrix.config_ids[a]))
            })
            .expect("support is non-empty");
        return Ok(Schedule::single_infinite(matrix.config_ids[best].clone()));
    }

    let entries = support
        .into_iter()
        .map(|c| ScheduleEntry {
            config_id: matrix.config_ids[c].clone(),
            duration: p.0[c] * period_bound,
        })
        .collect();
    Ok(Schedule { entries })
}

fn column_min(matrix: &RateMatrix, c: usize) -> f64 {
    (0..matrix.links())
        .map(|l| matrix.gamma.get(l, c))
        .fold(f64::INFINITY, f64::min)
}
