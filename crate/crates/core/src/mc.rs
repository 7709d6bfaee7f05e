//! Reproducible Monte Carlo estimation of expected cover times.
//!
//! Replica `i` draws from a ChaCha8 stream seeded with `seed` and stream id
//! `i` (in worst-start mode the stream id is `(start << 32) | i`), so results
//! do not depend on how rayon schedules the replicas. Statistics are merged
//! from exact integer sums.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

const Z95: f64 = 1.959_963_984_540_054;
const Z99: f64 = 2.575_829_303_548_901;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Start {
    Vertex(usize),
    /// Estimate from every start and report the largest mean.
    Worst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub seed: u64,
    /// At least 2; 30 or more is recommended for the normal-approximation CI.
    pub replicas: usize,
    pub start: Start,
    /// Step cap per replica; must be at least n².
    pub max_steps: u64,
}

impl McConfig {
    pub fn new(seed: u64, replicas: usize, start: Start, max_steps: u64) -> Self {
        McConfig {
            seed,
            replicas,
            start,
            max_steps,
        }
    }

    /// A cap of `max(1000·n², 10⁷)` steps.
    pub fn default_max_steps(n: usize) -> u64 {
        (1000 * (n as u64).pow(2)).max(10_000_000)
    }

    fn check(&self, n: usize) -> Result<()> {
        if self.replicas < 2 {
            return Err(Error::pre("replicas must be >= 2 for a defined variance"));
        }
        if self.max_steps < (n as u64).pow(2) {
            return Err(Error::pre(format!(
                "max_steps must be >= n² = {}",
                (n as u64).pow(2)
            )));
        }
        if let Start::Vertex(v) = self.start {
            if v >= n {
                return Err(Error::pre(format!("start vertex {v} outside 0..{n}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub ci95: (f64, f64),
    pub replicas_used: usize,
    pub steps_capped: usize,
    /// Start vertex the estimate refers to (the argmax in worst-start mode).
    pub start: usize,
}

impl McEstimate {
    /// Normal-approximation 99% interval.
    pub fn ci99(&self) -> (f64, f64) {
        (
            self.mean - Z99 * self.std_error,
            self.mean + Z99 * self.std_error,
        )
    }

    pub fn ci(&self, z: f64) -> (f64, f64) {
        (
            self.mean - z * self.std_error,
            self.mean + z * self.std_error,
        )
    }
}

/// Exact accumulator of step counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Tally {
    count: u64,
    sum: u128,
    sum_sq: u128,
    capped: u64,
}

impl Tally {
    fn push(steps: Option<u64>) -> Self {
        match steps {
            Some(s) => Tally {
                count: 1,
                sum: s as u128,
                sum_sq: (s as u128) * (s as u128),
                capped: 0,
            },
            None => Tally {
                capped: 1,
                ..Tally::default()
            },
        }
    }

    fn merge(self, other: Self) -> Self {
        Tally {
            count: self.count + other.count,
            sum: self.sum + other.sum,
            sum_sq: self.sum_sq + other.sum_sq,
            capped: self.capped + other.capped,
        }
    }
}

/// Steps taken by one walk from `start` until every vertex is visited, or
/// `None` if it hits `max_steps` first.
pub fn cover_walk<R: Rng>(graph: &Graph, start: usize, max_steps: u64, rng: &mut R) -> Option<u64> {
    walk(graph, start, max_steps, rng, |_, _| ())
}

/// Like [`cover_walk`], but returns the step at which each vertex was first
/// reached, in order of discovery: `(step, vertex)` with `(0, start)` first.
pub fn first_visits<R: Rng>(
    graph: &Graph,
    start: usize,
    max_steps: u64,
    rng: &mut R,
) -> Option<Vec<(u64, usize)>> {
    let mut seen = vec![(0, start)];
    walk(graph, start, max_steps, rng, |t, v| seen.push((t, v)))?;
    Some(seen)
}

fn walk<R: Rng>(
    graph: &Graph,
    start: usize,
    max_steps: u64,
    rng: &mut R,
    mut on_new: impl FnMut(u64, usize),
) -> Option<u64> {
    let n = graph.n();
    let mut visited = vec![false; n];
    visited[start] = true;
    let mut remaining = n - 1;
    let mut at = start;
    let mut steps = 0u64;
    while remaining > 0 {
        if steps >= max_steps {
            return None;
        }
        let nbrs = graph.neighbors(at);
        at = nbrs[rng.random_range(0..nbrs.len())];
        steps += 1;
        if !visited[at] {
            visited[at] = true;
            remaining -= 1;
            on_new(steps, at);
        }
    }
    Some(steps)
}

fn run_from(graph: &Graph, cfg: &McConfig, start: usize, stream_base: u64) -> Result<McEstimate> {
    let tally = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(stream_base | i);
            Tally::push(cover_walk(graph, start, cfg.max_steps, &mut rng))
        })
        .reduce(Tally::default, Tally::merge);
    if tally.capped > 0 {
        return Err(Error::NonConvergence(format!(
            "{} of {} replicas from start {start} hit max_steps = {}",
            tally.capped, cfg.replicas, cfg.max_steps
        )));
    }
    let n = tally.count as f64;
    let mean = tally.sum as f64 / n;
    // (N Σx² − (Σx)²) is exact in integers
    let centered = tally.count as u128 * tally.sum_sq - tally.sum * tally.sum;
    let variance = centered as f64 / (n * (n - 1.0));
    let std_error = (variance / n).sqrt();
    Ok(McEstimate {
        mean,
        std_error,
        ci95: (mean - Z95 * std_error, mean + Z95 * std_error),
        replicas_used: tally.count as usize,
        steps_capped: 0,
        start,
    })
}

/// Estimates `E_v(C)` for the configured start, or `max_v E_v(C)` in
/// worst-start mode (the CI is that of the maximizing start).
pub fn estimate_cover_time(graph: &Graph, cfg: &McConfig) -> Result<McEstimate> {
    graph.require_connected()?;
    cfg.check(graph.n())?;
    match cfg.start {
        Start::Vertex(v) => run_from(graph, cfg, v, 0),
        Start::Worst => {
            let mut best: Option<McEstimate> = None;
            for v in 0..graph.n() {
                let est = run_from(graph, cfg, v, (v as u64) << 32)?;
                if best.as_ref().is_none_or(|b| est.mean > b.mean) {
                    best = Some(est);
                }
            }
            Ok(best.expect("graph has vertices"))
        }
    }
}
