//! Path simulation and deterministic parallel ensembles.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::couplings::{Coupling, CouplingState, Regime};
use crate::drivers::NoiseStream;
use crate::error::{Error, Result};
use crate::spaces::SpacePoint;

/// Step size, horizon and recording cadence of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub h: f64,
    pub t_end: f64,
    /// Record every this many steps (the initial and final states are always
    /// recorded).
    pub record_every: usize,
}

impl TimeGrid {
    pub fn new(h: f64, t_end: f64, record_every: usize) -> Result<Self> {
        let grid = Self {
            h,
            t_end,
            record_every,
        };
        grid.steps()?;
        Ok(grid)
    }

    /// Number of steps; `t_end` must be a whole multiple of `h`.
    pub fn steps(&self) -> Result<usize> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::Config(format!("h must be positive, got {}", self.h)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(Error::Config(format!("T must be non-negative, got {}", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        let ratio = self.t_end / self.h;
        let n = ratio.round();
        if (ratio - n).abs() > 1e-6 * ratio.max(1.0) {
            return Err(Error::Config(format!(
                "T = {} is not a multiple of h = {}",
                self.t_end, self.h
            )));
        }
        if n > 1e9 {
            return Err(Error::Config("more than 1e9 steps requested".into()));
        }
        Ok(n as usize)
    }
}

/// Recorded distances of one path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub path_id: u64,
    pub seed: u64,
    pub times: Vec<f64>,
    pub rhos: Vec<f64>,
    pub regimes: Vec<Regime>,
}

impl PathRecord {
    fn push(&mut self, state: &CouplingState) {
        self.times.push(state.t());
        self.rhos.push(state.rho());
        self.regimes.push(state.regime());
    }
}

/// Simulates one path on noise stream `(seed, path_id)`, calling `observer`
/// after initialisation and after every step.
pub fn run_path_with(
    coupling: &Coupling,
    x: SpacePoint,
    y: SpacePoint,
    grid: &TimeGrid,
    seed: u64,
    path_id: u64,
    mut observer: impl FnMut(&CouplingState),
) -> Result<PathRecord> {
    let steps = grid.steps()?;
    let mut state = coupling.init(x, y)?;
    let mut noise = NoiseStream::new(seed, path_id);
    let (np, na) = coupling.noise_dims();
    let mut record = PathRecord {
        path_id,
        seed,
        times: Vec::with_capacity(steps / grid.record_every + 2),
        rhos: Vec::with_capacity(steps / grid.record_every + 2),
        regimes: Vec::with_capacity(steps / grid.record_every + 2),
    };
    record.push(&state);
    observer(&state);
    for i in 1..=steps {
        let n = noise.step_noise(np, na);
        coupling.advance(&mut state, &n, grid.h)?;
        observer(&state);
        if i % grid.record_every == 0 || i == steps {
            record.push(&state);
        }
    }
    Ok(record)
}

pub fn run_path(
    coupling: &Coupling,
    x: SpacePoint,
    y: SpacePoint,
    grid: &TimeGrid,
    seed: u64,
    path_id: u64,
) -> Result<PathRecord> {
    run_path_with(coupling, x, y, grid, seed, path_id, |_| {})
}

/// Evaluates `f(path_id)` for `0..n_paths` on the current rayon pool and
/// returns the results in path order, so any later reduction is
/// independent of scheduling.
pub fn ensemble<R: Send>(
    n_paths: usize,
    f: impl Fn(u64) -> Result<R> + Sync + Send,
) -> Result<Vec<R>> {
    (0..n_paths as u64).into_par_iter().map(f).collect()
}

/// `n_paths` recorded paths from the same start.
pub fn run_ensemble(
    coupling: &Coupling,
    x: SpacePoint,
    y: SpacePoint,
    grid: &TimeGrid,
    seed: u64,
    n_paths: usize,
) -> Result<Vec<PathRecord>> {
    ensemble(n_paths, |id| run_path(coupling, x, y, grid, seed, id))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::couplings::{Strategy, StrategyKind};
    use crate::spaces::SpaceSpec;

    #[test]
    fn grid_validation() {
        assert_eq!(TimeGrid::new(1e-3, 1.0, 1).unwrap().steps().unwrap(), 1000);
        assert!(TimeGrid::new(0.3, 1.0, 1).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 1).is_err());
        assert!(TimeGrid::new(0.1, 1.0, 0).is_err());
    }

    #[test]
    fn runs_are_reproducible() {
        let s = SpaceSpec::sphere(2).unwrap();
        let c = Coupling::new(s, Strategy::new(StrategyKind::FixedS2)).unwrap();
        let (x, y) = s.canonical_pair(1.0).unwrap();
        let grid = TimeGrid::new(1e-2, 1.0, 10).unwrap();
        let a = run_ensemble(&c, x, y, &grid, 5, 4).unwrap();
        let b = run_ensemble(&c, x, y, &grid, 5, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].times.len(), 11);
        assert_ne!(a[0].rhos, a[1].rhos);
    }
}
