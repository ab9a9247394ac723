//! Simulation-backed and deterministic checks.

use serde::{Deserialize, Serialize};

use crate::couplings::{rotation_cos_alpha, rotation_drift, Coupling, Strategy};
use crate::error::{Error, Result};
use crate::sim::{ensemble, run_path_with, TimeGrid};
use crate::smallmat::Vector;
use crate::spaces::{index_form_quadrature, Curvature, SpacePoint, SpaceSpec};
use crate::verify::laws::DistanceLaw;
use crate::verify::order::convergence_order_fit;

/// Ladder, horizon and ensemble size of a distance-law check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LawCheckConfig {
    pub h_ladder: Vec<f64>,
    pub t_end: f64,
    pub n_paths: usize,
    pub seed: u64,
    /// Spacing of the common sample times; a multiple of every ladder step.
    pub sample_dt: f64,
    pub tolerance: f64,
    pub min_order: f64,
}

impl LawCheckConfig {
    pub fn standard(t_end: f64, seed: u64) -> Self {
        Self {
            h_ladder: vec![4e-3, 2e-3, 1e-3, 5e-4],
            t_end,
            n_paths: 200,
            seed,
            sample_dt: 0.02,
            tolerance: 0.02,
            min_order: 0.4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LawCheckReport {
    pub strategy: String,
    pub law: String,
    pub n_paths: usize,
    pub h_ladder: Vec<f64>,
    /// `sup_t mean_paths |observed - law|` for each step size.
    pub sup_err: Vec<f64>,
    /// `mean_paths sup_t |observed - law|` for each step size.
    pub mean_path_sup_err: Vec<f64>,
    /// `None` when every error is exactly zero.
    pub fitted_order: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

/// Simulates the coupling on every rung of the ladder and compares the
/// observed distance with the law.
pub fn distance_law_check(
    coupling: &Coupling,
    law: &DistanceLaw,
    x: SpacePoint,
    y: SpacePoint,
    cfg: &LawCheckConfig,
) -> Result<LawCheckReport> {
    if law.space != coupling.space() {
        return Err(Error::StrategyMismatch {
            strategy: coupling.strategy().kind.id().into(),
            space: coupling.space().to_string(),
            reason: format!("law is stated on {}", law.space),
        });
    }
    if cfg.n_paths == 0 {
        return Err(Error::Config("n_paths must be positive".into()));
    }
    let rho0 = coupling.space().distance(&x, &y)?;
    if (rho0 - law.rho0).abs() > 1e-9 {
        return Err(Error::InputDomain(format!(
            "start distance {rho0} differs from the law's ρ0 = {}",
            law.rho0
        )));
    }
    let n_samples = TimeGrid::new(cfg.sample_dt, cfg.t_end, 1)?.steps()?;
    let mut sup_err = Vec::new();
    let mut mean_path_sup_err = Vec::new();
    for &h in &cfg.h_ladder {
        let every = TimeGrid::new(h, cfg.sample_dt, 1)?.steps()?;
        let grid = TimeGrid::new(h, cfg.t_end, every)?;
        let per_path = ensemble(cfg.n_paths, |id| {
            let mut path_sup = 0.0f64;
            let mut step = 0usize;
            let mut sampled = Vec::with_capacity(n_samples + 1);
            run_path_with(coupling, x, y, &grid, cfg.seed, id, |state| {
                let t = step as f64 * h;
                let err = (law.observe(state.rho()) - law.eval_observable(t)).abs();
                path_sup = path_sup.max(err);
                if step % every == 0 {
                    sampled.push(err);
                }
                step += 1;
            })?;
            Ok((sampled, path_sup))
        })?;
        let mut sums = vec![0.0; n_samples + 1];
        let mut sup_sum = 0.0;
        for (sampled, path_sup) in &per_path {
            for (acc, e) in sums.iter_mut().zip(sampled) {
                *acc += e;
            }
            sup_sum += path_sup;
        }
        let n = cfg.n_paths as f64;
        sup_err.push(sums.iter().map(|s| s / n).fold(0.0, f64::max));
        mean_path_sup_err.push(sup_sum / n);
    }
    let fitted_order = if sup_err.iter().all(|&e| e == 0.0) {
        None
    } else {
        let pts: Vec<(f64, f64)> = cfg.h_ladder.iter().copied().zip(sup_err.iter().copied()).collect();
        Some(convergence_order_fit(&pts)?)
    };
    let finest = sup_err.last().copied().unwrap_or(f64::INFINITY);
    let pass = finest < cfg.tolerance && fitted_order.map_or(true, |p| p >= cfg.min_order);
    Ok(LawCheckReport {
        strategy: coupling.strategy().kind.id().into(),
        law: law.id(),
        n_paths: cfg.n_paths,
        h_ladder: cfg.h_ladder.clone(),
        sup_err,
        mean_path_sup_err,
        fitted_order,
        tolerance: cfg.tolerance,
        pass,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coordinate {
    X,
    Y,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalConfig {
    pub h: f64,
    pub times: Vec<f64>,
    pub n_paths: usize,
    pub seed: u64,
    /// Indices of the ambient basis vectors `v` used as test functionals.
    pub directions: Vec<usize>,
    pub z_threshold: f64,
}

impl MarginalConfig {
    pub fn standard(seed: u64) -> Self {
        Self {
            h: 1e-3,
            times: vec![0.25, 0.5, 1.0],
            n_paths: 10_000,
            seed,
            directions: vec![0, 1],
            z_threshold: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalEntry {
    pub coordinate: Coordinate,
    pub direction: usize,
    pub t: f64,
    pub mean: f64,
    pub expected: f64,
    pub std_err: f64,
    pub z: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalReport {
    pub strategy: String,
    pub space: String,
    pub n_paths: usize,
    pub entries: Vec<MarginalEntry>,
    pub max_abs_z: f64,
    pub pass: bool,
}

/// `z = (mean - expected) / se`, with `z = 0` when both the deviation and
/// the spread vanish (a deterministic functional).
fn z_score(mean: f64, expected: f64, se: f64) -> f64 {
    let dev = mean - expected;
    if se > 0.0 {
        dev / se
    } else if dev.abs() < 1e-12 {
        0.0
    } else {
        f64::INFINITY.copysign(dev)
    }
}

/// Linear-functional decay test `E[v·X_t] = exp(-λ t / 2) v·x` for both
/// coordinates, `λ = r d`.
pub fn marginal_check(
    coupling: &Coupling,
    x: SpacePoint,
    y: SpacePoint,
    cfg: &MarginalConfig,
) -> Result<MarginalReport> {
    if cfg.n_paths < 2 {
        return Err(Error::Config("marginal check needs at least 2 paths".into()));
    }
    let space = coupling.space();
    let t_end = cfg.times.iter().copied().fold(0.0, f64::max);
    let grid = TimeGrid::new(cfg.h, t_end, usize::MAX)?;
    let sample_steps: Vec<usize> = cfg
        .times
        .iter()
        .map(|&t| TimeGrid::new(cfg.h, t, 1).and_then(|g| g.steps()))
        .collect::<Result<_>>()?;
    let n_dir = cfg.directions.len();
    let amb = space.ambient_dim();
    if cfg.directions.iter().any(|&i| i >= amb) {
        return Err(Error::Config(format!("directions must be below {amb}")));
    }
    // Per path: values [time][direction][coordinate].
    let per_path = ensemble(cfg.n_paths, |id| {
        let mut out = vec![0.0; sample_steps.len() * n_dir * 2];
        let mut step = 0usize;
        run_path_with(coupling, x, y, &grid, cfg.seed, id, |state| {
            for (ti, &s) in sample_steps.iter().enumerate() {
                if s == step {
                    for (di, &dir) in cfg.directions.iter().enumerate() {
                        let base = (ti * n_dir + di) * 2;
                        out[base] = state.x().coords()[dir];
                        out[base + 1] = state.y().coords()[dir];
                    }
                }
            }
            step += 1;
        })?;
        Ok(out)
    })?;
    let n = cfg.n_paths as f64;
    let lambda = space.coordinate_eigenvalue();
    let mut entries = Vec::new();
    for (ti, &t) in cfg.times.iter().enumerate() {
        for (di, &dir) in cfg.directions.iter().enumerate() {
            for (ci, coord) in [Coordinate::X, Coordinate::Y].into_iter().enumerate() {
                let idx = (ti * n_dir + di) * 2 + ci;
                let mean = per_path.iter().map(|v| v[idx]).sum::<f64>() / n;
                let var = per_path.iter().map(|v| (v[idx] - mean).powi(2)).sum::<f64>() / (n - 1.0);
                let start = match coord {
                    Coordinate::X => x.coords()[dir],
                    Coordinate::Y => y.coords()[dir],
                };
                let expected = (-lambda * t / 2.0).exp() * start;
                let se = (var / n).sqrt();
                entries.push(MarginalEntry {
                    coordinate: coord,
                    direction: dir,
                    t,
                    mean,
                    expected,
                    std_err: se,
                    z: z_score(mean, expected, se),
                });
            }
        }
    }
    let max_abs_z = entries.iter().map(|e| e.z.abs()).fold(0.0, f64::max);
    Ok(MarginalReport {
        strategy: coupling.strategy().kind.id().into(),
        space: space.to_string(),
        n_paths: cfg.n_paths,
        max_abs_z,
        pass: max_abs_z < cfg.z_threshold,
        entries,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftRow {
    pub curvature: f64,
    pub dim: usize,
    pub alpha: f64,
    pub rho: f64,
    /// `(d - 1) (gc(ρ) - cos α) / gs(ρ)`
    pub formula: f64,
    /// Half the index-form sum, assembled from quadrature values and the
    /// coupling's own noise map.
    pub quadrature: f64,
    pub rel_err: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub rows: Vec<DriftRow>,
    pub max_rel_err: f64,
    pub pass: bool,
}

/// Floor of the denominator in the drift comparison; the synchronous flat
/// drift is exactly zero.
pub const DRIFT_REL_FLOOR: f64 = 1e-3;

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(DRIFT_REL_FLOOR)
}

/// Half the index-form sum `Σ_i I(J_i, J_i)` for the rotation coupling with
/// angle `alpha` at distance `rho`, where `J_i` joins `U e_i` to `V B' e_i`.
pub fn index_form_drift(space: SpaceSpec, alpha: f64, rho: f64) -> Result<f64> {
    let r = space.curvature();
    let q10 = index_form_quadrature(r, rho, (1.0, 0.0))?;
    let q01 = index_form_quadrature(r, rho, (0.0, 1.0))?;
    let q11 = index_form_quadrature(r, rho, (1.0, 1.0))?;
    let (i11, i22, i12) = (q10, q01, 0.5 * (q11 - q10 - q01));
    let coupling = Coupling::new(space, Strategy::fixed_angle(alpha))?;
    let (x, y) = space.canonical_pair(rho)?;
    let (frame, _) = space.geodesic_frame(&x, &y)?;
    let (u, end) = frame.ok_or_else(|| Error::Degenerate("x = y".into()))?;
    let ex = space.tangent_basis(&x, Some(&u));
    let ey: Vec<Vector> = ex
        .iter()
        .map(|e| e.axpy(space.inner(e, &u), &(end - u)))
        .collect();
    let pairs = coupling.rotation_noise_map(&x, &y)?;
    let mut total = 0.0;
    // Along the geodesic the boundary values agree, so only the
    // perpendicular directions j >= 2 contribute.
    for j in 1..space.dim() {
        let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
        for (xi, yi) in &pairs {
            let pa = space.inner(xi, &ex[j]);
            let pb = space.inner(yi, &ey[j]);
            a += pa * pa;
            b += pb * pb;
            c += pa * pb;
        }
        total += a * i11 + b * i22 + 2.0 * c * i12;
    }
    Ok(0.5 * total)
}

/// Compares the drift formula with the quadrature-assembled index-form sum
/// over a grid.
pub fn drift_identity_check(
    curvatures: &[Curvature],
    dims: &[usize],
    alphas: &[f64],
    rhos: &[f64],
    tolerance: f64,
) -> Result<DriftReport> {
    if curvatures.is_empty() || dims.is_empty() || alphas.is_empty() || rhos.is_empty() {
        return Err(Error::Config("drift identity grid is empty".into()));
    }
    let mut rows = Vec::new();
    for &r in curvatures {
        for &d in dims {
            let space = SpaceSpec::new(r, d)?;
            for &alpha in alphas {
                for &rho in rhos {
                    let formula = rotation_drift(&space, rho, alpha);
                    let quadrature = index_form_drift(space, alpha, rho)?;
                    rows.push(DriftRow {
                        curvature: r.value(),
                        dim: d,
                        alpha,
                        rho,
                        formula,
                        quadrature,
                        rel_err: relative_error(quadrature, formula),
                    });
                }
            }
        }
    }
    let max_rel_err = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    Ok(DriftReport {
        rows,
        max_rel_err,
        pass: max_rel_err < tolerance,
    })
}

/// The default drift grid: α ∈ {0, π/4, ..., π}, ρ ∈ (0.1, 2.5), all three
/// curvatures, d ∈ {2, 3, 5}.
pub fn default_drift_grid() -> (Vec<Curvature>, Vec<usize>, Vec<f64>, Vec<f64>) {
    let alphas = (0..=4).map(|i| i as f64 * std::f64::consts::PI / 4.0).collect();
    let rhos = (0..8).map(|i| 0.1 + i as f64 * 2.4 / 7.0).collect();
    (Curvature::ALL.to_vec(), vec![2, 3, 5], alphas, rhos)
}

/// Which one-step integrator a weak-order check exercises.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stepper {
    Stroock,
    GeodesicWalk,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakOrderReport {
    pub stepper: Stepper,
    pub space: String,
    pub h_ladder: Vec<f64>,
    /// `E[x0·X_{h}] / 1` for one step from `x0`.
    pub multipliers: Vec<f64>,
    /// `|m(h)^{T/h} - exp(-λ T / 2)|`
    pub errors: Vec<f64>,
    pub fitted_order: f64,
}

/// Weak error of `E[x0·X_T]` on the sphere.
///
/// By rotational symmetry `E[X_{n+1} | X_n] = m(h) X_n`, so the scheme's
/// answer is exactly `m(h)^{T/h} x0`. The one-step multiplier is computed by
/// radial quadrature of the Gaussian over the implemented stepper itself.
pub fn weak_order_check(
    stepper: Stepper,
    space: SpaceSpec,
    h_ladder: &[f64],
    t_end: f64,
) -> Result<WeakOrderReport> {
    if space.curvature() != Curvature::Positive {
        return Err(Error::InputDomain("weak-order check runs on spheres".into()));
    }
    let d = space.dim();
    let x = space.origin();
    let frame = space.tangent_basis(&x, None);
    let e1 = Vector::basis(space.ambient_dim(), 1);
    // Radial density of |G| for G ~ N(0, I_d): r^{d-1} e^{-r²/2} / c_d.
    let (r_max, n) = (14.0, 4000usize);
    let dr = r_max / n as f64;
    let density = |r: f64| r.powi(d as i32 - 1) * (-0.5 * r * r).exp();
    let weights: Vec<f64> = (0..=n)
        .map(|i| {
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            w * density(i as f64 * dr) * dr / 3.0
        })
        .collect();
    let norm: f64 = weights.iter().sum();
    let mut multipliers = Vec::new();
    let mut errors = Vec::new();
    for &h in h_ladder {
        let mut acc = 0.0;
        for (i, w) in weights.iter().enumerate() {
            let r = i as f64 * dr;
            // Steps that would be rejected carry negligible weight.
            let next = match stepper {
                Stepper::Stroock => crate::drivers::stroock_step(&x, &e1.scale(r), h)?,
                Stepper::GeodesicWalk => {
                    let mut noise = Vector::zeros(d);
                    noise[0] = r;
                    match crate::drivers::geodesic_walk_step(&x, &noise, h, &frame) {
                        Ok(p) => p,
                        Err(Error::StepTooLarge { .. }) => continue,
                        Err(e) => return Err(e),
                    }
                }
            };
            acc += w * next.coords()[0];
        }
        let m = acc / norm;
        let steps = TimeGrid::new(h, t_end, 1)?.steps()? as i32;
        let exact = (-space.coordinate_eigenvalue() * t_end / 2.0).exp();
        multipliers.push(m);
        errors.push((m.powi(steps) - exact).abs());
    }
    let pts: Vec<(f64, f64)> = h_ladder.iter().copied().zip(errors.iter().copied()).collect();
    Ok(WeakOrderReport {
        stepper,
        space: space.to_string(),
        h_ladder: h_ladder.to_vec(),
        multipliers,
        errors,
        fitted_order: convergence_order_fit(&pts)?,
    })
}

/// Predicted drift of a generic rotation-coupling angle, exposed for tables.
pub fn predicted_drift(space: &SpaceSpec, rho: f64, alpha: f64) -> f64 {
    rotation_drift(space, rho, alpha)
}

/// Whether the rate `k` admits a rotation angle at distance `rho`.
pub fn rate_feasible(space: &SpaceSpec, k: f64, rho: f64) -> bool {
    (-1.0..=1.0).contains(&rotation_cos_alpha(space, k, rho))
}
