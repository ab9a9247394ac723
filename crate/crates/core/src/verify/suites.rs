//! Named verification suites, each a list of pass/fail lines.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::couplings::{rate_bound, Coupling, PatchMode, Strategy, StrategyKind};
use crate::error::{Error, Result};
use crate::sim::{ensemble, run_path, run_path_with, TimeGrid};
use crate::smallmat::{
    fixed_distance_matrices, fixed_distance_residuals, frame_align, rodrigues_rotation,
    solve_alpha, Vector,
};
use crate::spaces::{
    gc, gs, index_form_closed, index_form_of_profile, index_form_quadrature, Curvature, SpaceSpec,
};
use crate::verify::checks::{
    default_drift_grid, distance_law_check, drift_identity_check, index_form_drift,
    marginal_check, rate_feasible, relative_error, weak_order_check, LawCheckConfig,
    LawCheckReport, MarginalConfig, Stepper,
};
use crate::verify::laws::{DistanceLaw, LawKind};
use crate::verify::maxprinciple::{max_principle_demo, MaxPrincipleConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SuiteId {
    Algebra,
    IndexForms,
    ExactInvariants,
    DistanceLaws,
    Consistency,
    Marginals,
    Infeasibility,
    Patching,
    MaxPrinciple,
    All,
}

impl SuiteId {
    pub const EACH: [SuiteId; 9] = [
        SuiteId::Algebra,
        SuiteId::IndexForms,
        SuiteId::ExactInvariants,
        SuiteId::DistanceLaws,
        SuiteId::Consistency,
        SuiteId::Marginals,
        SuiteId::Infeasibility,
        SuiteId::Patching,
        SuiteId::MaxPrinciple,
    ];

    pub fn id(self) -> &'static str {
        match self {
            SuiteId::Algebra => "algebra",
            SuiteId::IndexForms => "index-forms",
            SuiteId::ExactInvariants => "exact-invariants",
            SuiteId::DistanceLaws => "distance-laws",
            SuiteId::Consistency => "consistency",
            SuiteId::Marginals => "marginals",
            SuiteId::Infeasibility => "infeasibility",
            SuiteId::Patching => "patching",
            SuiteId::MaxPrinciple => "max-principle",
            SuiteId::All => "all",
        }
    }
}

impl fmt::Display for SuiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for SuiteId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SuiteId::EACH
            .into_iter()
            .chain([SuiteId::All])
            .find(|k| k.id() == s)
            .ok_or_else(|| Error::Parse(format!("unknown suite `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckLine {
    pub name: String,
    pub detail: String,
    pub pass: bool,
}

impl CheckLine {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            detail: detail.into(),
            pass,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteOutcome {
    pub suite: String,
    pub lines: Vec<CheckLine>,
    /// Full law-check reports gathered along the way, for JSON output.
    pub law_reports: Vec<LawCheckReport>,
}

impl SuiteOutcome {
    fn new(id: SuiteId) -> Self {
        Self {
            suite: id.id().into(),
            lines: Vec::new(),
            law_reports: Vec::new(),
        }
    }

    pub fn pass(&self) -> bool {
        self.lines.iter().all(|l| l.pass)
    }

    fn push(&mut self, line: CheckLine) {
        self.lines.push(line);
    }

    /// Markdown table of the lines.
    pub fn table(&self) -> String {
        let mut out = format!("## {}\n\n| check | result | detail |\n|---|---|---|\n", self.suite);
        for l in &self.lines {
            let verdict = if l.pass { "PASS" } else { "FAIL" };
            let esc = |t: &str| t.replace('|', "\\|");
            out.push_str(&format!("| {} | {} | {} |\n", esc(&l.name), verdict, esc(&l.detail)));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteOptions {
    pub seed: u64,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self { seed: 20_240_607 }
    }
}

pub fn run_suite(id: SuiteId, opts: &SuiteOptions) -> Result<Vec<SuiteOutcome>> {
    if id == SuiteId::All {
        return SuiteId::EACH
            .into_iter()
            .map(|s| run_single(s, opts))
            .collect();
    }
    Ok(vec![run_single(id, opts)?])
}

fn run_single(id: SuiteId, opts: &SuiteOptions) -> Result<SuiteOutcome> {
    match id {
        SuiteId::Algebra => algebra(opts),
        SuiteId::IndexForms => index_forms(opts),
        SuiteId::ExactInvariants => exact_invariants(opts),
        SuiteId::DistanceLaws => distance_laws(opts),
        SuiteId::Consistency => consistency(opts),
        SuiteId::Marginals => marginals(opts),
        SuiteId::Infeasibility => infeasibility(opts),
        SuiteId::Patching => patching(opts),
        SuiteId::MaxPrinciple => max_principle(opts),
        SuiteId::All => unreachable!("expanded by run_suite"),
    }
}

fn random_unit(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    loop {
        let v = Vector::from_fn(n, |_| rng.sample(StandardNormal));
        if let Some(u) = v.normalized().filter(|_| v.norm() > 1e-6) {
            return u;
        }
    }
}

pub fn algebra(opts: &SuiteOptions) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new(SuiteId::Algebra);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (mut sys, mut op, mut rod, mut align) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut pairs = 0;
    while pairs < 10_000 {
        let x = random_unit(&mut rng, 3);
        let y = random_unit(&mut rng, 3);
        if 1.0 - x.dot(&y).abs() < 1e-6 {
            continue;
        }
        pairs += 1;
        let (j, k) = fixed_distance_matrices(&x, &y)?;
        let res = fixed_distance_residuals(&x, &y, &j, &k);
        sys = sys.max(res.into_iter().fold(0.0, f64::max));
        op = op.max(j.operator_norm());
        let r = rodrigues_rotation(&x, &y)?;
        rod = rod
            .max(r.orthogonality_residual())
            .max(r.mul_vec(&x).max_abs_diff(&y));
        align = align.max(frame_align(&x, &y)?.orthogonality_residual());
    }
    out.push(CheckLine::new(
        "fixed-distance system",
        sys < 1e-10,
        format!("max residual {sys:.3e} over {pairs} pairs (< 1e-10)"),
    ));
    out.push(CheckLine::new(
        "fixed-distance operator norm",
        op <= 1.0 + 1e-12,
        format!("max ||J||_op = {op:.15}"),
    ));
    out.push(CheckLine::new(
        "rodrigues rotation",
        rod < 1e-12,
        format!("max orthogonality / Rx = y residual {rod:.3e} (< 1e-12)"),
    ));
    out.push(CheckLine::new(
        "frame alignment",
        align < 1e-12,
        format!("max orthogonality residual {align:.3e} (< 1e-12)"),
    ));
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let a: f64 = rng.random_range(-2.0..-1e-3);
        let c: f64 = rng.random_range(a..0.0);
        let b: f64 = rng.random_range(-2.0..2.0);
        let alpha = solve_alpha(a, b, c)?;
        worst = worst.max((a * alpha.cos() + b * alpha.sin() - c).abs());
    }
    out.push(CheckLine::new(
        "solve_alpha",
        worst < 1e-12,
        format!("max residual {worst:.3e} over 1000 triples (< 1e-12)"),
    ));
    Ok(out)
}

fn rho_grid(r: Curvature) -> Vec<f64> {
    let top = if r == Curvature::Positive { 3.0 } else { 4.0 };
    (0..12).map(|i| 0.05 + i as f64 * (top - 0.05) / 11.0).collect()
}

pub fn index_forms(opts: &SuiteOptions) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new(SuiteId::IndexForms);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for r in Curvature::ALL {
        for d in [2usize, 3, 5] {
            let d1 = (d - 1) as f64;
            for rho in rho_grid(r) {
                let closed = index_form_closed(r, rho)?;
                let q10 = index_form_quadrature(r, rho, (1.0, 0.0))?;
                let q01 = index_form_quadrature(r, rho, (0.0, 1.0))?;
                let q11 = index_form_quadrature(r, rho, (1.0, 1.0))?;
                let q12 = 0.5 * (q11 - q10 - q01);
                for (a, b) in [(q10, closed.i11), (q01, closed.i22), (q12, closed.i12)] {
                    // Sum over the d - 1 perpendicular directions.
                    worst = worst.max(relative_error(d1 * a, d1 * b));
                }
                cases += 1;
            }
        }
    }
    out.push(CheckLine::new(
        "closed vs quadrature",
        worst < 1e-6,
        format!("max rel. err {worst:.3e} over {cases} (r, ρ, d) cases (< 1e-6)"),
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x1d);
    let mut min_gap = f64::INFINITY;
    for _ in 0..100 {
        let r = Curvature::ALL[rng.random_range(0..3)];
        let rho: f64 = rng.random_range(0.1..2.5);
        let (a, b): (f64, f64) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let amp: f64 = rng.random_range(-1.0..1.0);
        let mode = rng.random_range(1..4) as f64;
        let g = gs(r, rho);
        let jacobi = move |s: f64| {
            (
                (a * gs(r, rho - s) + b * gs(r, s)) / g,
                (-a * gc(r, rho - s) + b * gc(r, s)) / g,
            )
        };
        let bump = move |s: f64| {
            let w = mode * PI / rho;
            (amp * (w * s).sin(), amp * w * (w * s).cos())
        };
        let ij = index_form_of_profile(r, rho, jacobi)?;
        let iv = index_form_of_profile(r, rho, |s| {
            let (j, dj) = jacobi(s);
            let (v, dv) = bump(s);
            (j + v, dj + dv)
        })?;
        min_gap = min_gap.min(iv - ij);
    }
    out.push(CheckLine::new(
        "index lemma I(J,J) <= I(V,V)",
        min_gap >= -1e-9,
        format!("min I(V,V) - I(J,J) = {min_gap:.3e} over 100 random cases"),
    ));

    let (rs, ds, alphas, rhos) = default_drift_grid();
    let report = drift_identity_check(&rs, &ds, &alphas, &rhos, 1e-6)?;
    out.push(CheckLine::new(
        "drift identity grid",
        report.pass,
        format!("max rel. err {:.3e} over {} rows (< 1e-6)", report.max_rel_err, report.rows.len()),
    ));

    // Synchronous drifts and the flat perverse drift from the law ODEs.
    let mut worst = 0.0f64;
    for &d in &ds {
        for &rho in &rhos {
            let targets = [
                (SpaceSpec::sphere(d)?, 0.0, LawKind::SphereSynchronous),
                (SpaceSpec::hyperbolic(d)?, 0.0, LawKind::HyperbolicSynchronous),
                (SpaceSpec::euclidean(d)?, PI, LawKind::FlatPerverse),
            ];
            for (space, alpha, kind) in targets {
                let law = DistanceLaw::new(kind, space, 1.0)?;
                worst = worst.max(relative_error(index_form_drift(space, alpha, rho)?, law.drift(rho)));
            }
            let flat = index_form_drift(SpaceSpec::euclidean(d)?, 0.0, rho)?;
            worst = worst.max(flat.abs());
        }
    }
    out.push(CheckLine::new(
        "synchronous and perverse drifts",
        worst < 1e-6,
        format!("max rel. err {worst:.3e} against -(d-1)tan(ρ/2), (d-1)tanh(ρ/2), 0, 2(d-1)/ρ"),
    ));
    Ok(out)
}

pub fn exact_invariants(opts: &SuiteOptions) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new(SuiteId::ExactInvariants);
    let steps = 1_000_000usize;
    let h = 1e-3;
    let grid = TimeGrid::new(h, steps as f64 * h, steps)?;
    let cases = [
        (SpaceSpec::euclidean(3)?, StrategyKind::Translation),
        (SpaceSpec::sphere(2)?, StrategyKind::So3Flow),
    ];
    for (space, kind) in cases {
        let coupling = Coupling::new(space, Strategy::new(kind))?;
        let (x, y) = space.canonical_pair(1.0)?;
        let rho0 = space.distance(&x, &y)?;
        let mut drift = 0.0f64;
        run_path_with(&coupling, x, y, &grid, opts.seed, 0, |s| {
            drift = drift.max((s.rho() - rho0).abs());
        })?;
        out.push(CheckLine::new(
            format!("{kind} on {space}"),
            drift < 1e-12,
            format!("max |ρ_t - ρ_0| = {drift:.3e} over {steps} steps (< 1e-12)"),
        ));
    }
    Ok(out)
}

/// A coupling, its law, and the start, ready for a law check.
pub struct LawCase {
    pub name: &'static str,
    pub coupling: Coupling,
    pub law: DistanceLaw,
    pub t_end: f64,
}

impl LawCase {
    fn new(name: &'static str, space: SpaceSpec, strategy: Strategy, law: LawKind, t_end: f64) -> Result<Self> {
        Ok(Self {
            name,
            coupling: Coupling::new(space, strategy)?,
            law: DistanceLaw::new(law, space, 1.0)?,
            t_end,
        })
    }

    pub fn run(&self, seed: u64) -> Result<LawCheckReport> {
        let (x, y) = self.coupling.space().canonical_pair(self.law.rho0)?;
        distance_law_check(&self.coupling, &self.law, x, y, &LawCheckConfig::standard(self.t_end, seed))
    }
}

/// The distance-law cases at `ρ0 = 1`.
pub fn law_cases() -> Result<Vec<LawCase>> {
    let s2 = SpaceSpec::sphere(2)?;
    Ok(vec![
        LawCase::new("extrinsic contract", s2, Strategy::new(StrategyKind::ExtrinsicContractS2), LawKind::ExtrinsicContract, 3.0)?,
        LawCase::new("extrinsic expand", s2, Strategy::new(StrategyKind::ExtrinsicExpandS2), LawKind::ExtrinsicExpand, 1.0)?,
        LawCase::new("fixed distance", s2, Strategy::new(StrategyKind::FixedS2), LawKind::Constant, 1.0)?,
        LawCase::new("rotation k=0", s2, Strategy::rotation(0.0), LawKind::Constant, 1.0)?,
        LawCase::new("sphere synchronous", s2, Strategy::fixed_angle(0.0), LawKind::SphereSynchronous, 3.0)?,
        LawCase::new("flat perverse", SpaceSpec::euclidean(2)?, Strategy::fixed_angle(PI), LawKind::FlatPerverse, 1.0)?,
        LawCase::new("hyperbolic perverse", SpaceSpec::hyperbolic(2)?, Strategy::fixed_angle(PI), LawKind::HyperbolicPerverse, 1.0)?,
    ])
}

fn law_line(name: &str, r: &LawCheckReport) -> CheckLine {
    let order = r.fitted_order.map_or("n/a".to_string(), |p| format!("{p:.3}"));
    let errs: Vec<String> = r.sup_err.iter().map(|e| format!("{e:.4}")).collect();
    CheckLine::new(
        format!("{name} ({})", r.law),
        r.pass,
        format!(
            "sup-time mean |err| over h-ladder [{}], order {order} (need finest < {} and order >= 0.4)",
            errs.join(", "),
            r.tolerance
        ),
    )
}

/// Checks a law against its own RK4 integration before it is used.
fn law_oracle_line(law: &DistanceLaw, t_end: f64) -> CheckLine {
    let worst = (1..=10)
        .map(|i| {
            let t = t_end * i as f64 / 10.0;
            relative_error(law.integrate(t, 20_000), law.eval(t))
        })
        .fold(0.0, f64::max);
    CheckLine::new(
        format!("{} ODE oracle", law.id()),
        worst < 1e-8,
        format!("max rel. err of closed form vs RK4 {worst:.3e} (< 1e-8)"),
    )
}

pub fn distance_laws(opts: &SuiteOptions) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new(SuiteId::DistanceLaws);
    for case in law_cases()? {
        out.push(law_oracle_line(&case.law, case.t_end));
        let report = case.run(opts.seed)?;
        out.push(law_line(case.name, &report));
        out.law_reports.push(report);
    }
    Ok(out)
}

/// Largest gap on `[0, t_end]` between the exponential law `ρ0 e^{-t/2}`
/// and the synchronous sphere law.
pub fn exponential_vs_synchronous_gap(rho0: f64, t_end: f64) -> Result<f64> {
    let s2 = SpaceSpec::sphere(2)?;
    let exp = DistanceLaw::new(LawKind::Exponential { k: 1.0 }, s2, rho0)?;
    let sync = DistanceLaw::new(LawKind::SphereSynchronous, s2, rho0)?;
    Ok((0..=3000)
        .map(|i| {
            let t = t_end * i as f64 / 3000.0;
            (exp.eval(t) - sync.eval(t)).abs()
        })
        .fold(0.0, f64::max))
}

pub fn consistency(opts: &SuiteOptions) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new(SuiteId::Consistency);
    let s2 = SpaceSpec::sphere(2)?;
    let law = DistanceLaw::new(LawKind::SphereSynchronous, s2, 1.0)?;
    let cfg = LawCheckConfig::standard(3.0, opts.seed);
    let (x, y) = s2.canonical_pair(1.0)?;
    let cases = [
        ("extrinsic contract", Strategy::new(StrategyKind::ExtrinsicContractS2)),
        ("rotation k=1", Strategy::rotation(1.0)),
        ("rotation alpha=0", Strategy::fixed_angle(0.0)),
    ];
    for (name, strategy) in cases {
        let coupling = Coupling::new(s2, strategy)?;
        let report = distance_law_check(&coupling, &law, x, y, &cfg)?;
        let finest = *report.sup_err.last().expect("non-empty ladder");
        let order = report.fitted_order.map_or("n/a".to_string(), |p| format!("{p:.3}"));
        out.push(CheckLine::new(
            format!("{name} vs 2 arcsin(e^(-t/2) sin(ρ0/2))"),
            finest < cfg.tolerance,
            format!("finest sup-time mean |err| {finest:.4} (< {}), order {order}", cfg.tolerance),
        ));
        out.law_reports.push(report);
    }
    let gap = exponential_vs_synchronous_gap(1.0, 3.0)?;
    out.push(CheckLine::new(
        "deterministic gap ρ0 e^(-t/2) vs 2 arcsin law",
        true,
        format!("max gap on [0, 3] is {gap:.4} (informational)"),
    ));
    Ok(out)
}

/// Strategy and space combinations exercised by the marginal suite.
pub fn marginal_cases() -> Result<Vec<(Coupling, f64)>> {
    let s2 = SpaceSpec::sphere(2)?;
    let mut cases = vec![(Coupling::new(SpaceSpec::euclidean(2)?, Strategy::new(StrategyKind::Translation))?, 1.0)];
    for kind in [
        StrategyKind::MirrorS2,
        StrategyKind::ExtrinsicContractS2,
        StrategyKind::ExtrinsicExpandS2,
        StrategyKind::FixedS2,
        StrategyKind::So3Flow,
        StrategyKind::Independent,
    ] {
        cases.push((Coupling::new(s2, Strategy::new(kind))?, 1.0));
    }
    cases.push((Coupling::new(s2, Strategy::rotation(0.0))?, 1.0));
    cases.push((Coupling::new(SpaceSpec::sphere(3)?, Strategy::rotation(1.0))?, 1.0));
    cases.push((Coupling::new(SpaceSpec::euclidean(2)?, Strategy::fixed_angle(PI))?, 1.0));
    cases.push((Coupling::new(SpaceSpec::hyperbolic(2)?, Strategy::fixed_angle(PI))?, 1.0));
    Ok(cases)
}

pub fn broken_control() -> Result<Coupling> {
    Coupling::new(SpaceSpec::sphere(2)?, Strategy::new(StrategyKind::BrokenControl))
}

fn strategy_label(c: &Coupling) -> String {
    let s = c.strategy();
    let params = match (s.kind, s.rotation.alpha_override) {
        (StrategyKind::Rotation, Some(a)) => format!(" alpha={a:.4}"),
        (StrategyKind::Rotation, None) => format!(" k={}", s.rotation.k),
        _ => String::new(),
    };
    format!("{}{params} on {}", s.kind, c.space())
}

pub fn marginals(opts: &SuiteOptions) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new(SuiteId::Marginals);
    let cfg = MarginalConfig::standard(opts.seed);
    for (coupling, rho0) in marginal_cases()? {
        let (x, y) = coupling.space().canonical_pair(rho0)?;
        let report = marginal_check(&coupling, x, y, &cfg)?;
        out.push(CheckLine::new(
            strategy_label(&coupling),
            report.pass,
            format!("max |z| = {:.2} over {} X/Y functionals (< 3)", report.max_abs_z, report.entries.len()),
        ));
    }
    let control = broken_control()?;
    let (x, y) = control.space().canonical_pair(1.0)?;
    let report = marginal_check(&control, x, y, &cfg)?;
    out.push(CheckLine::new(
        "negative control (halved noise) fails",
        report.max_abs_z > 5.0,
        format!("max |z| = {:.2} (> 5)", report.max_abs_z),
    ));
    for (stepper, space) in [(Stepper::Stroock, SpaceSpec::sphere(2)?), (Stepper::GeodesicWalk, SpaceSpec::sphere(3)?)] {
        let w = weak_order_check(stepper, space, &[0.04, 0.02, 0.01, 0.005], 1.0)?;
        out.push(CheckLine::new(
            format!("{stepper:?} weak order on {space}"),
            w.fitted_order > 0.8,
            format!("fitted weak order {:.3} of E[x0·X_1] (> 0.8)", w.fitted_order),
        ));
    }
    Ok(out)
}

pub fn infeasibility(_opts: &SuiteOptions) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new(SuiteId::Infeasibility);
    let dims = [2usize, 3, 5];
    let rejected = |space: SpaceSpec, ks: &[f64]| ks.iter().all(|&k| Coupling::new(space, Strategy::rotation(k)).is_err());
    let flat = dims.iter().all(|&d| rejected(SpaceSpec::euclidean(d).unwrap(), &[1e-9, 1e-3, 0.5, 1.0, 10.0, 1e6]));
    out.push(CheckLine::new("flat rejects k > 0", flat, "k ∈ {1e-9, 1e-3, 0.5, 1, 10, 1e6}, d ∈ {2, 3, 5}"));
    let hyp = dims.iter().all(|&d| rejected(SpaceSpec::hyperbolic(d).unwrap(), &[0.0, 1e-9, 1e-3, 1.0, 10.0]));
    out.push(CheckLine::new("hyperbolic rejects k >= 0", hyp, "k ∈ {0, 1e-9, 1e-3, 1, 10}, d ∈ {2, 3, 5}"));
    let mut accepted = true;
    let mut feasible = true;
    for &d in &dims {
        let space = SpaceSpec::sphere(d)?;
        let bound = rate_bound(&space);
        for frac in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let k = frac * bound;
            accepted &= Coupling::new(space, Strategy::rotation(k)).is_ok();
            feasible &= (1..200).all(|i| rate_feasible(&space, k, i as f64 * PI / 200.0));
        }
        accepted &= Coupling::new(space, Strategy::rotation(bound * (1.0 + 1e-9))).is_err();
    }
    out.push(CheckLine::new(
        "sphere accepts k ∈ [0, d-1]",
        accepted,
        "k = 0, ..., d-1 accepted and k slightly above d-1 rejected, d ∈ {2, 3, 5}",
    ));
    out.push(CheckLine::new(
        "sphere rates feasible for every ρ",
        feasible,
        "|cos α| <= 1 on a 199-point ρ grid in (0, π)",
    ));
    let e2 = SpaceSpec::euclidean(2)?;
    let zero_ok = Coupling::new(e2, Strategy::rotation(0.0)).is_ok()
        && Coupling::new(e2, Strategy::rotation(-1.0)).is_ok();
    out.push(CheckLine::new("flat accepts k <= 0", zero_ok, "k ∈ {0, -1} on euclidean:2"));
    Ok(out)
}

pub fn patching(opts: &SuiteOptions) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new(SuiteId::Patching);
    let s2 = SpaceSpec::sphere(2)?;
    let (eps, rho0, n_paths) = (0.4, 0.5, 500);
    let coupling = Coupling::new(
        s2,
        Strategy::new(StrategyKind::ExtrinsicExpandS2).with_patch(PatchMode::CutLocus { eps }),
    )?;
    let (x, y) = s2.canonical_pair(rho0)?;
    let grid = TimeGrid::new(1e-3, 10.0, 1)?;
    let floor = rho0.min(eps / 4.0);
    let paths = ensemble(n_paths, |id| {
        let rec = run_path(&coupling, x, y, &grid, opts.seed, id)?;
        let min = rec.rhos.iter().copied().fold(f64::INFINITY, f64::min);
        let switches = rec.regimes.windows(2).filter(|w| w[0] != w[1]).count();
        Ok((min, switches))
    })?;
    let min = paths.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let switches: usize = paths.iter().map(|p| p.1).sum();
    out.push(CheckLine::new(
        "patched expanding coupling stays shy",
        min >= floor,
        format!("min recorded ρ {min:.4} >= {floor} over {n_paths} paths, T = 10; {switches} regime switches"),
    ));
    Ok(out)
}

pub fn max_principle(opts: &SuiteOptions) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new(SuiteId::MaxPrinciple);
    let report = max_principle_demo(&MaxPrincipleConfig::standard(opts.seed))?;
    for row in &report.rows {
        out.push(CheckLine::new(
            format!("n={} at polar angle {}: martingale", row.harmonic, row.polar_angle),
            row.martingale_z.abs() < 3.0,
            format!("z = {:.2} (< 3)", row.martingale_z),
        ));
        out.push(CheckLine::new(
            format!("n={} at polar angle {}: gradient bound", row.harmonic, row.polar_angle),
            row.bound_holds,
            format!(
                "estimate {:.4} ± {:.4} (exact {:.4}) <= boundary max {:.4} + 3 SE",
                row.gradient_estimate, row.gradient_std_err, row.gradient_exact, row.boundary_max
            ),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_ids_round_trip() {
        for s in SuiteId::EACH.into_iter().chain([SuiteId::All]) {
            assert_eq!(s.id().parse::<SuiteId>().unwrap(), s);
        }
        assert!("bogus".parse::<SuiteId>().is_err());
    }

    #[test]
    fn infeasibility_suite_passes() {
        let out = infeasibility(&SuiteOptions::default()).unwrap();
        assert!(out.pass(), "{}", out.table());
    }

    #[test]
    fn gap_is_positive() {
        let gap = exponential_vs_synchronous_gap(1.0, 3.0).unwrap();
        assert!(gap > 0.01 && gap < 0.02);
    }
}
