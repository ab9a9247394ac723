//! Coupling strategies behind one stepping interface.
//!
//! A [`Coupling`] pairs a space with a [`Strategy`]; [`Coupling::init`] builds
//! the [`CouplingState`] and [`Coupling::advance`] moves both particles by one
//! step of size `h` using a [`StepNoise`] of shape [`Coupling::noise_dims`].

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::drivers::{geodesic_walk_step, kendall_compose, so3_flow_step, stroock_step, StepNoise};
use crate::error::{Error, Result};
use crate::smallmat::{block_rotation, fixed_distance_matrices, rodrigues_rotation, Matrix, Vector};
use crate::spaces::{gc, gs, Curvature, SpacePoint, SpaceSpec};

/// Below this distance the rotation coupling moves both points together.
pub const DIAGONAL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StrategyKind {
    Translation,
    MirrorS2,
    ExtrinsicContractS2,
    ExtrinsicExpandS2,
    FixedS2,
    Rotation,
    So3Flow,
    Independent,
    /// Negative control: independent motion with the second particle's noise
    /// halved, so its marginal is *not* Brownian.
    BrokenControl,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 9] = [
        StrategyKind::Translation,
        StrategyKind::MirrorS2,
        StrategyKind::ExtrinsicContractS2,
        StrategyKind::ExtrinsicExpandS2,
        StrategyKind::FixedS2,
        StrategyKind::Rotation,
        StrategyKind::So3Flow,
        StrategyKind::Independent,
        StrategyKind::BrokenControl,
    ];

    pub fn id(self) -> &'static str {
        match self {
            StrategyKind::Translation => "translation",
            StrategyKind::MirrorS2 => "mirror-s2",
            StrategyKind::ExtrinsicContractS2 => "extrinsic-contract-s2",
            StrategyKind::ExtrinsicExpandS2 => "extrinsic-expand-s2",
            StrategyKind::FixedS2 => "fixed-s2",
            StrategyKind::Rotation => "rotation",
            StrategyKind::So3Flow => "so3-flow",
            StrategyKind::Independent => "independent",
            StrategyKind::BrokenControl => "broken-control",
        }
    }

    /// Strategies built on the ambient 2-sphere.
    fn needs_s2(self) -> bool {
        matches!(
            self,
            StrategyKind::MirrorS2
                | StrategyKind::ExtrinsicContractS2
                | StrategyKind::ExtrinsicExpandS2
                | StrategyKind::FixedS2
                | StrategyKind::So3Flow
        )
    }

    fn check_space(self, space: &SpaceSpec) -> Result<()> {
        let mismatch = |reason: &str| Error::StrategyMismatch {
            strategy: self.id().into(),
            space: space.to_string(),
            reason: reason.into(),
        };
        let is_s2 = space.curvature() == Curvature::Positive && space.dim() == 2;
        if self.needs_s2() && !is_s2 {
            return Err(mismatch("defined on sphere:2 only"));
        }
        if self == StrategyKind::Translation && space.curvature() != Curvature::Zero {
            return Err(mismatch("defined on euclidean spaces only"));
        }
        Ok(())
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.id() == s.trim())
            .ok_or_else(|| Error::Parse(format!("unknown strategy `{s}`")))
    }
}

/// Parameters of the rotation coupling: target rate `k` in
/// `d(X_t, Y_t) = exp(-k t / 2) d(x, y)`, or a fixed rotation angle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationParams {
    pub k: f64,
    pub alpha_override: Option<f64>,
}

impl Default for RotationParams {
    fn default() -> Self {
        Self {
            k: 0.0,
            alpha_override: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PatchMode {
    Off,
    /// Independent motion once `ρ > π - eps`, coupled again below `π - 2 eps`.
    CutLocus { eps: f64 },
    /// Coupled only near the diagonal: independent once `ρ > eta / 2`,
    /// coupled again at `ρ <= eta / 4`.
    Diagonal { eta: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Coupled,
    Independent,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Coupled => "coupled",
            Regime::Independent => "independent",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "coupled" => Ok(Regime::Coupled),
            "independent" => Ok(Regime::Independent),
            _ => Err(Error::Parse(format!("unknown regime `{s}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub kind: StrategyKind,
    pub rotation: RotationParams,
    pub patch: PatchMode,
}

impl Strategy {
    pub fn new(kind: StrategyKind) -> Self {
        Self {
            kind,
            rotation: RotationParams::default(),
            patch: PatchMode::Off,
        }
    }

    pub fn rotation(k: f64) -> Self {
        Self::new(StrategyKind::Rotation).with_rate(k)
    }

    /// Rotation coupling with a fixed angle (`0` synchronous, `π` perverse).
    pub fn fixed_angle(alpha: f64) -> Self {
        Self::new(StrategyKind::Rotation).with_alpha(alpha)
    }

    pub fn with_rate(mut self, k: f64) -> Self {
        self.rotation.k = k;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.rotation.alpha_override = Some(alpha);
        self
    }

    pub fn with_patch(mut self, patch: PatchMode) -> Self {
        self.patch = patch;
        self
    }
}

/// `cos α = gc(ρ) + k ρ gs(ρ) / (2 (d - 1))`, the angle that makes the
/// distance drift equal to `-k ρ / 2`.
pub fn rotation_cos_alpha(space: &SpaceSpec, k: f64, rho: f64) -> f64 {
    let r = space.curvature();
    let d1 = (space.dim() - 1) as f64;
    gc(r, rho) + k * rho * gs(r, rho) / (2.0 * d1)
}

/// Drift of the distance under the rotation coupling with angle `alpha`:
/// `(d - 1) (gc(ρ) - cos α) / gs(ρ)`.
pub fn rotation_drift(space: &SpaceSpec, rho: f64, alpha: f64) -> f64 {
    let r = space.curvature();
    (space.dim() - 1) as f64 * (gc(r, rho) - alpha.cos()) / gs(r, rho)
}

/// Largest rate that is feasible arbitrarily close to the diagonal,
/// `r (d - 1)`.
pub fn rate_bound(space: &SpaceSpec) -> f64 {
    space.curvature().value() * (space.dim() - 1) as f64
}

#[derive(Clone, Debug)]
enum Cache {
    Empty,
    Offset(Vector),
    Flow { z: Matrix, x0: Vector, y0: Vector },
}

/// Time, both particles, regime and strategy-specific cached data.
#[derive(Clone, Debug)]
pub struct CouplingState {
    t: f64,
    steps: u64,
    x: SpacePoint,
    y: SpacePoint,
    rho: f64,
    regime: Regime,
    glued: bool,
    cache: Cache,
}

impl CouplingState {
    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn x(&self) -> &SpacePoint {
        &self.x
    }

    pub fn y(&self) -> &SpacePoint {
        &self.y
    }

    /// Current distance `d(X_t, Y_t)`.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// Whether the particles have met and now move together.
    pub fn glued(&self) -> bool {
        self.glued
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coupling {
    space: SpaceSpec,
    strategy: Strategy,
}

impl Coupling {
    pub fn new(space: SpaceSpec, strategy: Strategy) -> Result<Self> {
        strategy.kind.check_space(&space)?;
        match strategy.patch {
            PatchMode::Off => {}
            PatchMode::CutLocus { eps } => {
                if space.curvature() != Curvature::Positive {
                    return Err(Error::StrategyMismatch {
                        strategy: strategy.kind.id().into(),
                        space: space.to_string(),
                        reason: "cut-locus patching needs a nonempty cut-locus".into(),
                    });
                }
                if !(eps > 0.0 && eps < PI / 4.0) {
                    return Err(Error::InputDomain(format!("eps = {eps} outside (0, π/4)")));
                }
            }
            PatchMode::Diagonal { eta } => {
                if !(eta > 0.0 && eta.is_finite() && eta < space.diameter()) {
                    return Err(Error::InputDomain(format!("eta = {eta} is not admissible")));
                }
            }
        }
        if strategy.kind == StrategyKind::Rotation {
            let RotationParams { k, alpha_override } = strategy.rotation;
            match alpha_override {
                Some(alpha) if !alpha.is_finite() => {
                    return Err(Error::InputDomain(format!("alpha = {alpha}")))
                }
                Some(_) => {}
                None => {
                    if !k.is_finite() {
                        return Err(Error::InputDomain(format!("k = {k}")));
                    }
                    let bound = rate_bound(&space);
                    if k > bound {
                        return Err(Error::RateAboveCurvatureBound { k, bound });
                    }
                }
            }
        }
        Ok(Self { space, strategy })
    }

    pub fn space(&self) -> SpaceSpec {
        self.space
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    /// Lengths of the primary and auxiliary noise vectors drawn each step.
    ///
    /// Both have length `d + 1`: the sphere's ambient dimension and the
    /// driving dimension of the even-dimensional rotation coupling.
    pub fn noise_dims(&self) -> (usize, usize) {
        let n = self.space.dim() + 1;
        (n, n)
    }

    /// Number of driving dimensions `N` of the rotation coupling: `d` for odd
    /// `d`, `d + 1` (one fictitious coordinate) for even `d`.
    pub fn rotation_driving_dim(&self) -> usize {
        let d = self.space.dim();
        if d % 2 == 1 {
            d
        } else {
            d + 1
        }
    }

    /// Rotation angle in `[0, π]` used at distance `rho`.
    pub fn rotation_angle(&self, rho: f64) -> Result<f64> {
        let RotationParams { k, alpha_override } = self.strategy.rotation;
        if let Some(alpha) = alpha_override {
            return Ok(alpha);
        }
        let cos_alpha = rotation_cos_alpha(&self.space, k, rho);
        if !(-1.0..=1.0).contains(&cos_alpha) {
            return Err(Error::RateInfeasible { k, rho, cos_alpha });
        }
        Ok(cos_alpha.acos())
    }

    pub fn init(&self, x: SpacePoint, y: SpacePoint) -> Result<CouplingState> {
        let rho = self.space.distance(&x, &y)?;
        let mut state = CouplingState {
            t: 0.0,
            steps: 0,
            x,
            y,
            rho,
            regime: Regime::Coupled,
            glued: false,
            cache: Cache::Empty,
        };
        state.regime = match self.strategy.patch {
            PatchMode::CutLocus { eps } if rho > PI - eps => Regime::Independent,
            PatchMode::Diagonal { eta } if rho > eta / 2.0 => Regime::Independent,
            _ => Regime::Coupled,
        };
        if self.strategy.kind == StrategyKind::MirrorS2 && rho == 0.0 {
            state.glued = true;
        }
        if state.regime == Regime::Coupled {
            self.check_coupled_start(&state)?;
        }
        self.reset_cache(&mut state);
        Ok(state)
    }

    fn check_coupled_start(&self, state: &CouplingState) -> Result<()> {
        match self.strategy.kind {
            StrategyKind::FixedS2 => {
                fixed_distance_matrices(state.x.coords(), state.y.coords())?;
            }
            StrategyKind::Rotation => {
                if state.rho > DIAGONAL_TOL {
                    self.space.geodesic_frame(&state.x, &state.y)?;
                    self.rotation_angle(state.rho)?;
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn reset_cache(&self, state: &mut CouplingState) {
        state.cache = match self.strategy.kind {
            StrategyKind::Translation => Cache::Offset(*state.y.coords() - *state.x.coords()),
            StrategyKind::So3Flow => Cache::Flow {
                z: Matrix::identity(3),
                x0: *state.x.coords(),
                y0: *state.y.coords(),
            },
            _ => Cache::Empty,
        };
    }

    fn uses_stroock(&self) -> bool {
        self.strategy.kind.needs_s2()
            || (self.space.curvature() == Curvature::Positive
                && self.space.dim() == 2
                && matches!(
                    self.strategy.kind,
                    StrategyKind::Independent | StrategyKind::BrokenControl
                ))
    }

    /// One step of a single Brownian particle.
    fn solo_step(&self, p: &SpacePoint, noise: &Vector, h: f64) -> Result<SpacePoint> {
        if self.uses_stroock() {
            stroock_step(p, noise, h)
        } else {
            let frame = self.space.tangent_basis(p, None);
            geodesic_walk_step(p, &noise.head(self.space.dim()), h, &frame)
        }
    }

    pub fn advance(&self, state: &mut CouplingState, noise: &StepNoise, h: f64) -> Result<()> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InputDomain(format!("step size must be positive, got {h}")));
        }
        let (np, na) = self.noise_dims();
        if noise.primary.len() != np || noise.auxiliary.len() != na {
            return Err(Error::InputDomain("noise has the wrong shape".into()));
        }
        let (x, y) = if state.glued {
            let x = self.solo_step(&state.x, &noise.primary, h)?;
            (x, x)
        } else if state.regime == Regime::Independent {
            (
                self.solo_step(&state.x, &noise.primary, h)?,
                self.solo_step(&state.y, &noise.auxiliary, h)?,
            )
        } else {
            self.coupled_step(state, noise, h)?
        };
        state.x = x;
        state.y = y;
        state.rho = self.space.distance(&x, &y)?;
        state.t += h;
        state.steps += 1;
        if self.strategy.kind == StrategyKind::MirrorS2 && !state.glued && x == y {
            state.glued = true;
            state.rho = 0.0;
        }
        self.update_regime(state);
        Ok(())
    }

    fn update_regime(&self, state: &mut CouplingState) {
        let rho = state.rho;
        let next = match (self.strategy.patch, state.regime) {
            (PatchMode::CutLocus { eps }, Regime::Coupled) if rho > PI - eps => Regime::Independent,
            (PatchMode::CutLocus { eps }, Regime::Independent) if rho < PI - 2.0 * eps => {
                Regime::Coupled
            }
            (PatchMode::Diagonal { eta }, Regime::Coupled) if rho > eta / 2.0 => Regime::Independent,
            (PatchMode::Diagonal { eta }, Regime::Independent) if rho <= eta / 4.0 => {
                Regime::Coupled
            }
            (_, current) => current,
        };
        if next != state.regime {
            state.regime = next;
            if next == Regime::Coupled {
                self.reset_cache(state);
            }
        }
    }

    fn coupled_step(
        &self,
        state: &mut CouplingState,
        noise: &StepNoise,
        h: f64,
    ) -> Result<(SpacePoint, SpacePoint)> {
        let (x, y) = (&state.x, &state.y);
        let space = self.space;
        match self.strategy.kind {
            StrategyKind::Translation => {
                let Cache::Offset(offset) = &state.cache else {
                    unreachable!("translation state always caches its offset")
                };
                let frame = space.tangent_basis(x, None);
                let nx = geodesic_walk_step(x, &noise.primary.head(space.dim()), h, &frame)?;
                let ny = SpacePoint::new(space, *nx.coords() + *offset)?;
                Ok((nx, ny))
            }
            StrategyKind::Independent => Ok((
                self.solo_step(x, &noise.primary, h)?,
                self.solo_step(y, &noise.auxiliary, h)?,
            )),
            StrategyKind::BrokenControl => Ok((
                self.solo_step(x, &noise.primary, h)?,
                self.solo_step(y, &noise.auxiliary.scale(0.5), h)?,
            )),
            StrategyKind::MirrorS2 => {
                let nx = stroock_step(x, &noise.primary, h)?;
                let chord = *x.coords() - *y.coords();
                let n = chord
                    .normalized()
                    .ok_or_else(|| Error::Degenerate("mirror of coincident points".into()))?;
                // Reflection-maximal coupling: Y takes X's point with
                // probability min(1, f_y/f_x), else its mirror image.
                let log_ratio = stroock_log_density(y, nx.coords(), h) - stroock_log_density(x, nx.coords(), h);
                let a = &noise.auxiliary;
                let exp1 = 0.5 * (a[0] * a[0] + a[1] * a[1]);
                if exp1 >= -log_ratio {
                    return Ok((nx, nx));
                }
                let reflected = noise.primary.axpy(-2.0 * n.dot(&noise.primary), &n);
                let ny = stroock_step(y, &reflected, h)?;
                Ok((nx, ny))
            }
            StrategyKind::ExtrinsicContractS2 => {
                let nx = stroock_step(x, &noise.primary, h)?;
                let dx = *nx.coords() - *x.coords();
                let r = rodrigues_rotation(x.coords(), y.coords())?;
                let ny = SpacePoint::projected(space, &(*y.coords() + r.mul_vec(&dx)))?;
                Ok((nx, ny))
            }
            StrategyKind::ExtrinsicExpandS2 => {
                let nx = stroock_step(x, &noise.primary, h)?;
                let dx = *nx.coords() - *x.coords();
                let r = rodrigues_rotation(x.coords(), &(-*y.coords()))?;
                let ny = SpacePoint::projected(space, &(*y.coords() - r.mul_vec(&dx)))?;
                Ok((nx, ny))
            }
            StrategyKind::FixedS2 => {
                let (j, k) = fixed_distance_matrices(x.coords(), y.coords())?;
                let dw = kendall_compose(&j, &k, &noise.primary, &noise.auxiliary)?;
                Ok((stroock_step(x, &noise.primary, h)?, stroock_step(y, &dw, h)?))
            }
            StrategyKind::So3Flow => {
                let Cache::Flow { z, x0, y0 } = &mut state.cache else {
                    unreachable!("so3-flow state always caches its rotation")
                };
                *z = so3_flow_step(z, &noise.primary, h)?;
                Ok((
                    SpacePoint::projected(space, &z.mul_vec(x0))?,
                    SpacePoint::projected(space, &z.mul_vec(y0))?,
                ))
            }
            StrategyKind::Rotation => self.rotation_step(x, y, &noise.primary, h),
        }
    }

    fn rotation_step(
        &self,
        x: &SpacePoint,
        y: &SpacePoint,
        w: &Vector,
        h: f64,
    ) -> Result<(SpacePoint, SpacePoint)> {
        let space = self.space;
        let d = space.dim();
        let (frame, rho) = space.geodesic_frame(x, y)?;
        let Some((u, end)) = frame.filter(|_| rho > DIAGONAL_TOL) else {
            let basis = space.tangent_basis(x, None);
            let nx = geodesic_walk_step(x, &w.head(d), h, &basis)?;
            return Ok((nx, nx));
        };
        let alpha = self.rotation_angle(rho)?;
        let (ex, ey) = rotation_frames(&space, x, &u, &end);
        let n = self.rotation_driving_dim();
        let b = block_rotation(n - 1, alpha, true)?;
        let wx = w.head(n);
        let wy = b.tr_mul_vec(&wx);
        let nx = geodesic_walk_step(x, &wx.head(d), h, &ex)?;
        let ny = geodesic_walk_step(y, &wy.head(d), h, &ey)?;
        Ok((nx, ny))
    }

    /// The noise map of the rotation coupling at `(x, y)` as the list of
    /// pairs `(U e_i, V B' e_i)`, `i = 1..N`, in ambient coordinates. Used to
    /// check the zero-martingale and isometry properties.
    pub fn rotation_noise_map(
        &self,
        x: &SpacePoint,
        y: &SpacePoint,
    ) -> Result<Vec<(Vector, Vector)>> {
        let space = self.space;
        let (frame, rho) = space.geodesic_frame(x, y)?;
        let (u, end) = frame.ok_or_else(|| Error::Degenerate("x = y".into()))?;
        let alpha = self.rotation_angle(rho)?;
        let (ex, ey) = rotation_frames(&space, x, &u, &end);
        let n = self.rotation_driving_dim();
        let b = block_rotation(n - 1, alpha, true)?;
        let d = space.dim();
        Ok((0..n)
            .map(|i| {
                let e = Vector::basis(n, i);
                let wy = b.tr_mul_vec(&e);
                let ux = combine(&ex, &e.head(d), space.ambient_dim());
                let vy = combine(&ey, &wy.head(d), space.ambient_dim());
                (ux, vy)
            })
            .collect())
    }
}

fn combine(frame: &[Vector], coeffs: &Vector, len: usize) -> Vector {
    frame
        .iter()
        .zip(coeffs.iter())
        .fold(Vector::zeros(len), |acc, (e, c)| acc.axpy(*c, e))
}

/// Orthonormal frame at `x` starting with `γ'(0) = u` and its parallel
/// transport to `y` (`γ'(ρ) = end` first, perpendicular vectors unchanged).
fn rotation_frames(
    space: &SpaceSpec,
    x: &SpacePoint,
    u: &Vector,
    end: &Vector,
) -> (Vec<Vector>, Vec<Vector>) {
    let ex = space.tangent_basis(x, Some(u));
    let delta = *end - *u;
    let ey = ex
        .iter()
        .map(|e| e.axpy(space.inner(e, u), &delta))
        .collect();
    (ex, ey)
}

/// Log density (up to a constant shared by all centres) of one
/// `stroock_step` from `c` on S², evaluated at `p`.
fn stroock_log_density(c: &SpacePoint, p: &Vector, h: f64) -> f64 {
    let c = c.coords();
    let pc = p.dot(c);
    if pc <= 0.0 {
        return f64::NEG_INFINITY;
    }
    // Invert the gnomonic map: p ∝ (1 - h) c + √h g with g ⟂ c.
    let g = (p.scale(1.0 / pc) - *c).scale((1.0 - h) / h.sqrt());
    -0.5 * g.dot(&g) - 3.0 * pc.ln()
}
