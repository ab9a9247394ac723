//! Gradient maximum principle on a spherical cap, estimated with the
//! fixed-distance coupling.
//!
//! The test functions are `u_n = Re(z^n)` with `z = (x_1 + i x_2) / (1 + x_3)`
//! the stereographic coordinate from the south pole; they are harmonic on the
//! sphere minus the south pole. The cap is centred at the north pole `e_3`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::couplings::{Coupling, Strategy, StrategyKind};
use crate::drivers::NoiseStream;
use crate::error::{Error, Result};
use crate::sim::ensemble;
use crate::smallmat::Vector;
use crate::spaces::{SpacePoint, SpaceSpec, TangentVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxPrincipleConfig {
    /// Geodesic radius of the cap, below `π/2`.
    pub cap_angle: f64,
    pub harmonics: Vec<u32>,
    /// Polar angles of the interior points (taken on the `x_1 x_3` meridian).
    pub interior: Vec<f64>,
    pub h: f64,
    /// Geodesic separation of the coupled starting points.
    pub separation: f64,
    /// Horizon after which unexited paths are stopped.
    pub horizon: f64,
    pub n_paths: usize,
    pub seed: u64,
}

impl MaxPrincipleConfig {
    pub fn standard(seed: u64) -> Self {
        Self {
            cap_angle: 1.0,
            harmonics: vec![1, 2],
            interior: vec![0.0, 0.5],
            h: 1e-3,
            separation: 0.05,
            horizon: 5.0,
            n_paths: 10_000,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxPrincipleRow {
    pub harmonic: u32,
    pub polar_angle: f64,
    /// `u(x) - u(y)`
    pub expected_difference: f64,
    /// Mean of `u(X_ζ) - u(Y_ζ)`.
    pub mean_difference: f64,
    pub std_err: f64,
    pub martingale_z: f64,
    /// `E[u(Y_ζ) - u(X_ζ)] / separation`
    pub gradient_estimate: f64,
    pub gradient_std_err: f64,
    /// Closed-form `|∇u|` at the interior point.
    pub gradient_exact: f64,
    pub boundary_max: f64,
    pub bound_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxPrincipleReport {
    pub rows: Vec<MaxPrincipleRow>,
    pub stopped_at_horizon: usize,
    pub max_abs_z: f64,
    pub pass: bool,
}

fn stereo(p: &Vector) -> (f64, f64) {
    let denom = 1.0 + p[2];
    (p[0] / denom, p[1] / denom)
}

/// `Re(z^n)` at a point of the 2-sphere.
pub fn cap_harmonic(n: u32, p: &Vector) -> f64 {
    let (a, b) = stereo(p);
    let (r, theta) = (a.hypot(b), b.atan2(a));
    r.powi(n as i32) * (n as f64 * theta).cos()
}

/// `|∇u_n| = (1 + |z|²) / 2 · n |z|^{n-1}` on the unit sphere.
pub fn cap_harmonic_gradient(n: u32, p: &Vector) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let (a, b) = stereo(p);
    let r2 = a * a + b * b;
    0.5 * (1.0 + r2) * n as f64 * r2.sqrt().powi(n as i32 - 1)
}

/// Largest `|∇u_n|` on the boundary of the cap of radius `cap_angle`.
pub fn boundary_gradient_max(n: u32, cap_angle: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let r = (cap_angle / 2.0).tan();
    0.5 * (1.0 + r * r) * n as f64 * r.powi(n as i32 - 1)
}

fn meridian_point(space: SpaceSpec, polar: f64) -> Result<SpacePoint> {
    space.point(&[polar.sin(), 0.0, polar.cos()])
}

/// Runs the coupled pair from `x` and `γ(separation)` until either particle
/// leaves the cap (linearly interpolated within the step) or the horizon.
pub fn max_principle_demo(cfg: &MaxPrincipleConfig) -> Result<MaxPrincipleReport> {
    if !(cfg.cap_angle > 0.0 && cfg.cap_angle < FRAC_PI_2) {
        return Err(Error::InputDomain(format!(
            "cap angle {} must lie in (0, π/2)",
            cfg.cap_angle
        )));
    }
    if cfg.n_paths < 2 || cfg.harmonics.is_empty() || cfg.interior.is_empty() {
        return Err(Error::Config("max-principle demo needs paths, harmonics and points".into()));
    }
    if !(cfg.h > 0.0 && cfg.horizon > 0.0) {
        return Err(Error::Config("h and the horizon must be positive".into()));
    }
    let space = SpaceSpec::sphere(2)?;
    let coupling = Coupling::new(space, Strategy::new(StrategyKind::FixedS2))?;
    let cos_cap = cfg.cap_angle.cos();
    let boundary = |p: &SpacePoint| p.coords()[2] - cos_cap;
    let max_steps = (cfg.horizon / cfg.h).ceil() as usize;
    let mut rows = Vec::new();
    let mut stopped_at_horizon = 0;
    for (pi, &polar) in cfg.interior.iter().enumerate() {
        if !(polar >= 0.0 && polar + cfg.separation < cfg.cap_angle) {
            return Err(Error::InputDomain(format!(
                "interior point at polar angle {polar} is not inside the cap"
            )));
        }
        let x = meridian_point(space, polar)?;
        let dir = TangentVector::new(x, Vector::from_slice(&[polar.cos(), 0.0, -polar.sin()])?)?;
        let y = space.exp_map(&dir, cfg.separation)?;
        let per_path = ensemble(cfg.n_paths, |id| {
            let stream = id + (pi as u64) * (cfg.n_paths as u64);
            let mut noise = NoiseStream::new(cfg.seed, stream);
            let mut state = coupling.init(x, y)?;
            let (np, na) = coupling.noise_dims();
            for _ in 0..max_steps {
                let (x0, y0) = (*state.x(), *state.y());
                coupling.advance(&mut state, &noise.step_noise(np, na), cfg.h)?;
                let (bx0, by0) = (boundary(&x0), boundary(&y0));
                let (bx1, by1) = (boundary(state.x()), boundary(state.y()));
                let lx = (bx1 <= 0.0).then(|| bx0 / (bx0 - bx1));
                let ly = (by1 <= 0.0).then(|| by0 / (by0 - by1));
                let lambda = match (lx, ly) {
                    (None, None) => continue,
                    (Some(a), None) | (None, Some(a)) => a,
                    (Some(a), Some(b)) => a.min(b),
                };
                let interp = |a: &SpacePoint, b: &SpacePoint| {
                    SpacePoint::projected(space, &a.coords().axpy(lambda, &(*b.coords() - *a.coords())))
                };
                return Ok((interp(&x0, state.x())?, interp(&y0, state.y())?, false));
            }
            Ok((*state.x(), *state.y(), true))
        })?;
        stopped_at_horizon += per_path.iter().filter(|p| p.2).count();
        let n = cfg.n_paths as f64;
        for &harm in &cfg.harmonics {
            let diffs: Vec<f64> = per_path
                .iter()
                .map(|(xs, ys, _)| cap_harmonic(harm, xs.coords()) - cap_harmonic(harm, ys.coords()))
                .collect();
            let mean = diffs.iter().sum::<f64>() / n;
            let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt();
            let expected = cap_harmonic(harm, x.coords()) - cap_harmonic(harm, y.coords());
            let z = if se > 0.0 {
                (mean - expected) / se
            } else if (mean - expected).abs() < 1e-12 {
                0.0
            } else {
                f64::INFINITY
            };
            let gradient_estimate = -mean / cfg.separation;
            let gradient_std_err = se / cfg.separation;
            let boundary_max = boundary_gradient_max(harm, cfg.cap_angle);
            rows.push(MaxPrincipleRow {
                harmonic: harm,
                polar_angle: polar,
                expected_difference: expected,
                mean_difference: mean,
                std_err: se,
                martingale_z: z,
                gradient_estimate,
                gradient_std_err,
                gradient_exact: cap_harmonic_gradient(harm, x.coords()),
                boundary_max,
                bound_holds: gradient_estimate.abs() <= boundary_max + 3.0 * gradient_std_err,
            });
        }
    }
    let max_abs_z = rows.iter().map(|r| r.martingale_z.abs()).fold(0.0, f64::max);
    let pass = max_abs_z < 3.0 && rows.iter().all(|r| r.bound_holds);
    Ok(MaxPrincipleReport {
        rows,
        stopped_at_horizon,
        max_abs_z,
        pass,
    })
}
