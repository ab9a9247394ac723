//! Geometry of the three model spaces.
//!
//! Points are stored in ambient coordinates: `R^d` for the flat space, the
//! unit sphere in `R^{d+1}`, and the upper sheet of the hyperboloid
//! `<x, x>_M = -1`, `x_0 > 0` in Minkowski space `R^{1,d}` with
//! `<a, b>_M = -a_0 b_0 + a_1 b_1 + ... + a_d b_d`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::smallmat::{Vector, MAX_DIM};

/// Largest intrinsic dimension (the sphere needs one extra ambient slot, the
/// even-dimensional rotation coupling needs one fictitious noise slot).
pub const MAX_SPACE_DIM: usize = MAX_DIM - 2;

/// Tolerance on the model constraint and on tangency.
pub const CONSTRAINT_TOL: f64 = 1e-10;

/// Distance to the antipode below which the sphere log map gives up.
pub const CUT_LOCUS_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Curvature {
    Negative,
    Zero,
    Positive,
}

impl Curvature {
    pub fn value(self) -> f64 {
        match self {
            Curvature::Negative => -1.0,
            Curvature::Zero => 0.0,
            Curvature::Positive => 1.0,
        }
    }

    pub fn from_sign(r: i32) -> Result<Self> {
        match r {
            -1 => Ok(Curvature::Negative),
            0 => Ok(Curvature::Zero),
            1 => Ok(Curvature::Positive),
            _ => Err(Error::InputDomain(format!(
                "curvature sign must be -1, 0 or 1, got {r}"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Curvature::Negative => "hyperbolic",
            Curvature::Zero => "euclidean",
            Curvature::Positive => "sphere",
        }
    }

    pub const ALL: [Curvature; 3] = [Curvature::Negative, Curvature::Zero, Curvature::Positive];
}

/// Generalised sine: `sin ρ`, `ρ` or `sinh ρ`.
pub fn gs(r: Curvature, rho: f64) -> f64 {
    match r {
        Curvature::Positive => rho.sin(),
        Curvature::Zero => rho,
        Curvature::Negative => rho.sinh(),
    }
}

/// Generalised cosine: `cos ρ`, `1` or `cosh ρ`.
pub fn gc(r: Curvature, rho: f64) -> f64 {
    match r {
        Curvature::Positive => rho.cos(),
        Curvature::Zero => 1.0,
        Curvature::Negative => rho.cosh(),
    }
}

/// First conjugate distance along a geodesic (`π` on the sphere).
pub fn conjugate_distance(r: Curvature) -> f64 {
    match r {
        Curvature::Positive => PI,
        _ => f64::INFINITY,
    }
}

fn check_geodesic_length(r: Curvature, rho: f64) -> Result<()> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::InputDomain(format!(
            "geodesic length must be positive, got {rho}"
        )));
    }
    if rho >= conjugate_distance(r) {
        return Err(Error::ConjugatePoint {
            curvature: r.value(),
            rho,
        });
    }
    Ok(())
}

/// Scalar Jacobi coefficients `(w1(s), w2(s))` along a geodesic of length
/// `rho`: `w1 = gs(ρ - s) / gs(ρ)` and `w2 = gs(s) / gs(ρ)`.
pub fn jacobi_coefficients(r: Curvature, rho: f64, s: f64) -> Result<(f64, f64)> {
    check_geodesic_length(r, rho)?;
    if !(0.0..=rho).contains(&s) {
        return Err(Error::InputDomain(format!("s = {s} outside [0, {rho}]")));
    }
    let g = gs(r, rho);
    Ok((gs(r, rho - s) / g, gs(r, s) / g))
}

/// Index-form values of the Jacobi fields `w1 E` and `w2 E` along a geodesic
/// of length `rho`, with `E` a unit parallel field perpendicular to it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexFormValues {
    pub i11: f64,
    pub i22: f64,
    pub i12: f64,
    pub rho: f64,
}

impl IndexFormValues {
    /// Index form of the Jacobi field with boundary values `(a, b)`.
    pub fn quadratic(&self, a: f64, b: f64) -> f64 {
        a * a * self.i11 + b * b * self.i22 + 2.0 * a * b * self.i12
    }
}

/// Closed form: `I11 = I22 = gc/gs`, `I12 = -1/gs`.
pub fn index_form_closed(r: Curvature, rho: f64) -> Result<IndexFormValues> {
    check_geodesic_length(r, rho)?;
    let (g_s, g_c) = (gs(r, rho), gc(r, rho));
    Ok(IndexFormValues {
        i11: g_c / g_s,
        i22: g_c / g_s,
        i12: -1.0 / g_s,
        rho,
    })
}

const QUADRATURE_STEPS: usize = 4000;

/// One RK4 step for `w'' = -r w` written as a first-order system.
fn rk4_step(r: f64, (w, dw): (f64, f64), h: f64) -> (f64, f64) {
    let f = |(a, b): (f64, f64)| (b, -r * a);
    let k1 = f((w, dw));
    let k2 = f((w + 0.5 * h * k1.0, dw + 0.5 * h * k1.1));
    let k3 = f((w + 0.5 * h * k2.0, dw + 0.5 * h * k2.1));
    let k4 = f((w + h * k3.0, dw + h * k3.1));
    (
        w + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        dw + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    )
}

fn solve_ivp(r: f64, init: (f64, f64), rho: f64, steps: usize) -> Vec<(f64, f64)> {
    let h = rho / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let mut state = init;
    out.push(state);
    for _ in 0..steps {
        state = rk4_step(r, state, h);
        out.push(state);
    }
    out
}

fn simpson(values: &[f64], h: f64) -> f64 {
    let n = values.len() - 1;
    debug_assert!(n % 2 == 0);
    let mut acc = values[0] + values[n];
    for (i, v) in values.iter().enumerate().take(n).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * h / 3.0
}

/// Index form `∫ (w'² - r w²) ds` of the Jacobi field with scalar boundary
/// values `boundary = (w(0), w(ρ))`, found by shooting with RK4 and integrated
/// with Simpson's rule. Independent of the closed form.
pub fn index_form_quadrature(r: Curvature, rho: f64, boundary: (f64, f64)) -> Result<f64> {
    check_geodesic_length(r, rho)?;
    let rv = r.value();
    let n = QUADRATURE_STEPS;
    let phi = solve_ivp(rv, (1.0, 0.0), rho, n);
    let psi = solve_ivp(rv, (0.0, 1.0), rho, n);
    let (a, b) = boundary;
    let psi_end = psi[n].0;
    if psi_end.abs() < 1e-12 {
        return Err(Error::ConjugatePoint { curvature: rv, rho });
    }
    let slope = (b - a * phi[n].0) / psi_end;
    let integrand: Vec<f64> = phi
        .iter()
        .zip(&psi)
        .map(|(p, q)| {
            let w = a * p.0 + slope * q.0;
            let dw = a * p.1 + slope * q.1;
            dw * dw - rv * w * w
        })
        .collect();
    Ok(simpson(&integrand, rho / n as f64))
}

/// Index form `∫ (w'² - r w²) ds` of an arbitrary perpendicular field
/// `w(s) E(s)`; `profile` returns `(w(s), w'(s))`.
pub fn index_form_of_profile(
    r: Curvature,
    rho: f64,
    profile: impl Fn(f64) -> (f64, f64),
) -> Result<f64> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::InputDomain(format!(
            "geodesic length must be positive, got {rho}"
        )));
    }
    let n = QUADRATURE_STEPS;
    let h = rho / n as f64;
    let rv = r.value();
    let integrand: Vec<f64> = (0..=n)
        .map(|i| {
            let (w, dw) = profile(i as f64 * h);
            dw * dw - rv * w * w
        })
        .collect();
    Ok(simpson(&integrand, h))
}

/// A model space: curvature sign and intrinsic dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceSpec {
    curvature: Curvature,
    dim: usize,
}

impl SpaceSpec {
    pub fn new(curvature: Curvature, dim: usize) -> Result<Self> {
        if !(2..=MAX_SPACE_DIM).contains(&dim) {
            return Err(Error::InputDomain(format!(
                "dimension must lie in 2..={MAX_SPACE_DIM}, got {dim}"
            )));
        }
        Ok(Self { curvature, dim })
    }

    pub fn sphere(dim: usize) -> Result<Self> {
        Self::new(Curvature::Positive, dim)
    }

    pub fn euclidean(dim: usize) -> Result<Self> {
        Self::new(Curvature::Zero, dim)
    }

    pub fn hyperbolic(dim: usize) -> Result<Self> {
        Self::new(Curvature::Negative, dim)
    }

    pub fn curvature(&self) -> Curvature {
        self.curvature
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ambient_dim(&self) -> usize {
        match self.curvature {
            Curvature::Zero => self.dim,
            _ => self.dim + 1,
        }
    }

    /// Diameter of the space; distances never exceed it.
    pub fn diameter(&self) -> f64 {
        conjugate_distance(self.curvature)
    }

    /// Eigenvalue of `-Δ` on the ambient coordinate functions, so that
    /// `E[v·X_t] = exp(-λ t / 2) v·x` for Brownian motion with generator ½Δ.
    pub fn coordinate_eigenvalue(&self) -> f64 {
        self.curvature.value() * self.dim as f64
    }

    /// Ambient bilinear form: Euclidean dot or Minkowski product.
    #[inline]
    pub fn inner(&self, a: &Vector, b: &Vector) -> f64 {
        match self.curvature {
            Curvature::Negative => a.dot(b) - 2.0 * a[0] * b[0],
            _ => a.dot(b),
        }
    }

    #[inline]
    pub fn norm(&self, v: &Vector) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    /// Residual of the model constraint at `coords`.
    pub fn constraint_residual(&self, coords: &Vector) -> f64 {
        match self.curvature {
            Curvature::Zero => 0.0,
            Curvature::Positive => (coords.norm_squared() - 1.0).abs(),
            Curvature::Negative => {
                let scale = coords[0] * coords[0];
                (self.inner(coords, coords) + 1.0).abs() / scale.max(1.0)
            }
        }
    }

    /// Closest point of the model (sphere: radial projection; hyperboloid:
    /// recompute `x_0` from the spatial part).
    pub fn project(&self, coords: &Vector) -> Result<Vector> {
        if coords.len() != self.ambient_dim() || !coords.is_finite() {
            return Err(Error::InputDomain(format!(
                "coordinates {coords:?} do not describe a point of {self}"
            )));
        }
        match self.curvature {
            Curvature::Zero => Ok(*coords),
            Curvature::Positive => coords
                .normalized()
                .ok_or_else(|| Error::Degenerate("cannot project the origin onto the sphere".into())),
            Curvature::Negative => {
                let mut out = *coords;
                let spatial: f64 = coords.as_slice()[1..].iter().map(|v| v * v).sum();
                out[0] = (1.0 + spatial).sqrt();
                Ok(out)
            }
        }
    }

    pub fn point(&self, coords: &[f64]) -> Result<SpacePoint> {
        SpacePoint::new(*self, Vector::from_slice(coords)?)
    }

    /// The base point used for canonical placements: `e_0` on the sphere and
    /// the hyperboloid, the origin in the flat space.
    pub fn origin(&self) -> SpacePoint {
        let coords = match self.curvature {
            Curvature::Zero => Vector::zeros(self.dim),
            _ => Vector::basis(self.dim + 1, 0),
        };
        SpacePoint {
            space: *self,
            coords,
        }
    }

    /// Canonical pair at distance `rho0`: `x` at the origin and `y` reached by
    /// the unit-speed geodesic along the first spatial axis.
    pub fn canonical_pair(&self, rho0: f64) -> Result<(SpacePoint, SpacePoint)> {
        if !(rho0.is_finite() && rho0 >= 0.0 && rho0 <= self.diameter()) {
            return Err(Error::InputDomain(format!(
                "initial distance {rho0} is not admissible on {self}"
            )));
        }
        let x = self.origin();
        let axis = match self.curvature {
            Curvature::Zero => 0,
            _ => 1,
        };
        let dir = TangentVector::new(x, Vector::basis(self.ambient_dim(), axis))?;
        let y = self.exp_map(&dir, rho0)?;
        Ok((x, y))
    }

    fn check_same(&self, p: &SpacePoint, q: &SpacePoint) -> Result<()> {
        if p.space != *self || q.space != *self {
            return Err(Error::SpaceMismatch(format!(
                "{} and {} on {self}",
                p.space, q.space
            )));
        }
        Ok(())
    }

    /// Riemannian distance, computed from chords for accuracy near 0 and `π`.
    pub fn distance(&self, p: &SpacePoint, q: &SpacePoint) -> Result<f64> {
        self.check_same(p, q)?;
        let (a, b) = (&p.coords, &q.coords);
        Ok(match self.curvature {
            Curvature::Zero => (*a - *b).norm(),
            Curvature::Positive => 2.0 * (*a - *b).norm().atan2((*a + *b).norm()),
            Curvature::Negative => 2.0 * (0.5 * self.norm(&(*a - *b))).asinh(),
        })
    }

    /// `exp_p(s v)` for a unit tangent vector `v`.
    pub fn exp_map(&self, v: &TangentVector, s: f64) -> Result<SpacePoint> {
        if v.base.space != *self {
            return Err(Error::SpaceMismatch(format!("{} on {self}", v.base.space)));
        }
        let n = self.norm(&v.vector);
        if (n - 1.0).abs() > CONSTRAINT_TOL {
            return Err(Error::InputDomain(format!(
                "exp_map needs a unit tangent vector (norm {n})"
            )));
        }
        if !s.is_finite() {
            return Err(Error::InputDomain(format!("non-finite geodesic length {s}")));
        }
        self.exp_unchecked(&v.base.coords, &v.vector, s)
    }

    /// `exp_p(w)` for an arbitrary tangent vector given in ambient coordinates.
    pub fn exp_tangent(&self, p: &SpacePoint, w: &Vector) -> Result<SpacePoint> {
        let s = self.norm(w);
        if s == 0.0 {
            return Ok(*p);
        }
        self.exp_unchecked(&p.coords, &w.scale(1.0 / s), s)
    }

    fn exp_unchecked(&self, p: &Vector, unit: &Vector, s: f64) -> Result<SpacePoint> {
        let coords = match self.curvature {
            Curvature::Zero => p.axpy(s, unit),
            Curvature::Positive => p.scale(s.cos()).axpy(s.sin(), unit),
            Curvature::Negative => p.scale(s.cosh()).axpy(s.sinh(), unit),
        };
        Ok(SpacePoint {
            space: *self,
            coords: self.project(&coords)?,
        })
    }

    /// Inverse of the exponential map; `|log_p q| = d(p, q)`.
    pub fn log_map(&self, p: &SpacePoint, q: &SpacePoint) -> Result<TangentVector> {
        let rho = self.distance(p, q)?;
        if self.curvature == Curvature::Positive && rho > PI - CUT_LOCUS_TOL {
            return Err(Error::CutLocus {
                tolerance: CUT_LOCUS_TOL,
            });
        }
        let w = self.radial(&p.coords, &q.coords);
        let n = self.norm(&w);
        let vector = if rho == 0.0 || n == 0.0 {
            Vector::zeros(self.ambient_dim())
        } else {
            w.scale(rho / n)
        };
        Ok(TangentVector { base: *p, vector })
    }

    /// Component of `q` tangent at `p` (unnormalised log direction).
    fn radial(&self, p: &Vector, q: &Vector) -> Vector {
        match self.curvature {
            Curvature::Zero => *q - *p,
            Curvature::Positive => q.axpy(-p.dot(q), p),
            Curvature::Negative => q.axpy(self.inner(p, q), p),
        }
    }

    /// Unit tangents of the minimizing geodesic from `p` to `q` at both ends,
    /// and its length. `None` for the tangents when `p == q`.
    pub fn geodesic_frame(
        &self,
        p: &SpacePoint,
        q: &SpacePoint,
    ) -> Result<(Option<(Vector, Vector)>, f64)> {
        let log = self.log_map(p, q)?;
        let rho = self.norm(&log.vector);
        if rho == 0.0 {
            return Ok((None, 0.0));
        }
        let u = log.vector.scale(1.0 / rho);
        let (dist, x) = (self.distance(p, q)?, &p.coords);
        let end = match self.curvature {
            Curvature::Zero => u,
            Curvature::Positive => x.scale(-dist.sin()).axpy(dist.cos(), &u),
            Curvature::Negative => x.scale(dist.sinh()).axpy(dist.cosh(), &u),
        };
        Ok((Some((u, end)), dist))
    }

    /// Parallel transport of `v` along the minimizing geodesic to `q`:
    /// `τv = v + <v, u> (γ'(ρ) - u)`.
    pub fn parallel_transport(&self, v: &TangentVector, q: &SpacePoint) -> Result<TangentVector> {
        let (frame, _) = self.geodesic_frame(&v.base, q)?;
        let vector = match frame {
            None => v.vector,
            Some((u, end)) => v.vector.axpy(self.inner(&v.vector, &u), &(end - u)),
        };
        Ok(TangentVector { base: *q, vector })
    }

    /// Projection of an ambient vector onto `T_p`.
    pub fn project_tangent(&self, p: &SpacePoint, v: &Vector) -> Vector {
        match self.curvature {
            Curvature::Zero => *v,
            Curvature::Positive => v.axpy(-p.coords.dot(v), &p.coords),
            Curvature::Negative => v.axpy(self.inner(&p.coords, v), &p.coords),
        }
    }

    /// Deterministic orthonormal basis of `T_p`, starting with `first` when
    /// given (it must be a unit tangent vector).
    pub fn tangent_basis(&self, p: &SpacePoint, first: Option<&Vector>) -> Vec<Vector> {
        let n = self.ambient_dim();
        let mut basis: Vec<Vector> = Vec::with_capacity(self.dim);
        let candidates = first
            .copied()
            .into_iter()
            .chain((0..n).map(|i| Vector::basis(n, i)));
        for c in candidates {
            if basis.len() == self.dim {
                break;
            }
            let mut v = self.project_tangent(p, &c);
            // Two passes of Gram-Schmidt keep the basis orthonormal to rounding.
            for _ in 0..2 {
                for b in &basis {
                    v = v.axpy(-self.inner(&v, b), b);
                }
                v = self.project_tangent(p, &v);
            }
            let len = self.norm(&v);
            if len > 1e-6 {
                basis.push(v.scale(1.0 / len));
            }
        }
        debug_assert_eq!(basis.len(), self.dim);
        basis
    }

    /// Whether `(p, q)` lies in the `eps`-neighbourhood of the cut-locus.
    pub fn near_cut_locus(&self, p: &SpacePoint, q: &SpacePoint, eps: f64) -> Result<bool> {
        Ok(match self.curvature {
            Curvature::Positive => self.distance(p, q)? > PI - eps,
            _ => {
                self.check_same(p, q)?;
                false
            }
        })
    }
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.curvature.name(), self.dim)
    }
}

impl FromStr for SpaceSpec {
    type Err = Error;

    /// Accepts `sphere:2`, `euclidean:3` (alias `flat`), `hyperbolic:2`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, dim) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("expected `<kind>:<dim>`, got `{s}`")))?;
        let curvature = match kind.trim().to_ascii_lowercase().as_str() {
            "sphere" | "spherical" => Curvature::Positive,
            "euclidean" | "flat" => Curvature::Zero,
            "hyperbolic" => Curvature::Negative,
            other => return Err(Error::Parse(format!("unknown space kind `{other}`"))),
        };
        let dim: usize = dim
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("invalid dimension `{dim}`")))?;
        SpaceSpec::new(curvature, dim).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// A point of a model space in ambient coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpacePoint {
    space: SpaceSpec,
    coords: Vector,
}

impl SpacePoint {
    pub fn new(space: SpaceSpec, coords: Vector) -> Result<Self> {
        if coords.len() != space.ambient_dim() || !coords.is_finite() {
            return Err(Error::InputDomain(format!(
                "{} needs {} finite ambient coordinates",
                space,
                space.ambient_dim()
            )));
        }
        let residual = space.constraint_residual(&coords);
        if residual > CONSTRAINT_TOL {
            return Err(Error::InputDomain(format!(
                "point violates the constraint of {space} (residual {residual:e})"
            )));
        }
        if space.curvature == Curvature::Negative && coords[0] <= 0.0 {
            return Err(Error::InputDomain("point lies on the lower sheet".into()));
        }
        Ok(Self { space, coords })
    }

    /// Project arbitrary ambient coordinates onto the model.
    pub fn projected(space: SpaceSpec, coords: &Vector) -> Result<Self> {
        Ok(Self {
            space,
            coords: space.project(coords)?,
        })
    }

    pub fn space(&self) -> SpaceSpec {
        self.space
    }

    pub fn coords(&self) -> &Vector {
        &self.coords
    }

    /// Antipodal point on the sphere, `-x`.
    pub fn antipode(&self) -> Result<Self> {
        if self.space.curvature != Curvature::Positive {
            return Err(Error::InputDomain("antipodes exist only on the sphere".into()));
        }
        Ok(Self {
            space: self.space,
            coords: -self.coords,
        })
    }
}

/// A tangent vector in ambient coordinates together with its base point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentVector {
    base: SpacePoint,
    vector: Vector,
}

impl TangentVector {
    pub fn new(base: SpacePoint, vector: Vector) -> Result<Self> {
        let space = base.space;
        if vector.len() != space.ambient_dim() || !vector.is_finite() {
            return Err(Error::InputDomain("tangent vector has the wrong shape".into()));
        }
        let residual = match space.curvature {
            Curvature::Zero => 0.0,
            _ => space.inner(&base.coords, &vector).abs() / vector.norm().max(1.0),
        };
        if residual > CONSTRAINT_TOL {
            return Err(Error::InputDomain(format!(
                "vector is not tangent at the base point (residual {residual:e})"
            )));
        }
        Ok(Self { base, vector })
    }

    pub fn base(&self) -> &SpacePoint {
        &self.base
    }

    pub fn vector(&self) -> &Vector {
        &self.vector
    }

    pub fn norm(&self) -> f64 {
        self.base.space.norm(&self.vector)
    }

    pub fn inner(&self, other: &TangentVector) -> f64 {
        self.base.space.inner(&self.vector, &other.vector)
    }
}
