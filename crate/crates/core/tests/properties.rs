//! Property tests for the geometry, the couplings and the file formats.

use std::f64::consts::PI;
use std::path::PathBuf;

use bmcouple::config::SimConfig;
use bmcouple::couplings::{Coupling, Strategy as CouplingStrategy, StrategyKind};
use bmcouple::drivers::NoiseStream;
use bmcouple::smallmat::{
    complete_frame, fixed_distance_matrices, fixed_distance_residuals, frame_align,
    rodrigues_rotation, so3_exp, solve_alpha, Matrix, Vector,
};
use bmcouple::spaces::{
    gs, index_form_closed, index_form_quadrature, jacobi_coefficients, Curvature, SpacePoint,
    SpaceSpec, TangentVector,
};
use bmcouple::verify::checks::{index_form_drift, relative_error};
use bmcouple::verify::laws::{DistanceLaw, LawKind};
use bmcouple::verify::report::Summary;
use bmcouple::verify::trajectory::{parse_csv, to_csv_string, TrajectoryRow};
use bmcouple::{couplings::rotation_drift, Regime};
use proptest::prelude::*;

fn vec_in(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, len)
}

fn unit3() -> impl Strategy<Value = Vector> {
    vec_in(3).prop_filter_map("near zero", |v| {
        let v = Vector::from_slice(&v).unwrap();
        (v.norm() > 1e-3).then(|| v.normalized().unwrap())
    })
}

/// Two unit vectors of R³ that are neither equal nor antipodal.
fn sphere_pair() -> impl Strategy<Value = (Vector, Vector)> {
    (unit3(), unit3()).prop_filter("degenerate pair", |(x, y)| 1.0 - x.dot(y).abs() > 1e-6)
}

fn curvature() -> impl Strategy<Value = Curvature> {
    prop::sample::select(Curvature::ALL.to_vec())
}

fn space() -> impl Strategy<Value = SpaceSpec> {
    (curvature(), 2usize..=6).prop_map(|(r, d)| SpaceSpec::new(r, d).unwrap())
}

fn point_on(space: SpaceSpec) -> impl Strategy<Value = SpacePoint> {
    vec_in(space.ambient_dim()).prop_filter_map("off the model", move |v| {
        let v = Vector::from_slice(&v).unwrap().scale(2.0);
        SpacePoint::projected(space, &v).ok()
    })
}

fn space_and_points() -> impl Strategy<Value = (SpaceSpec, SpacePoint, SpacePoint)> {
    space().prop_flat_map(|s| (Just(s), point_on(s), point_on(s)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rodrigues_is_a_rotation_taking_x_to_y((x, y) in sphere_pair()) {
        let r = rodrigues_rotation(&x, &y).unwrap();
        prop_assert!(r.orthogonality_residual() < 1e-12);
        prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
        prop_assert!(r.mul_vec(&x).max_abs_diff(&y) < 1e-12);
    }

    #[test]
    fn frame_align_is_orthogonal_and_aligned((x, y) in sphere_pair()) {
        let o = frame_align(&x, &y).unwrap();
        prop_assert!(o.orthogonality_residual() < 1e-12);
        prop_assert!(o.column(0).max_abs_diff(&x) < 1e-15);
        let c = x.dot(&y);
        let s = (1.0 - c * c).sqrt();
        let image = o.mul_vec(&Vector::from_slice(&[c, s, 0.0]).unwrap());
        prop_assert!(image.max_abs_diff(&y) < 1e-12);
    }

    #[test]
    fn fixed_distance_system_holds((x, y) in sphere_pair()) {
        let (j, k) = fixed_distance_matrices(&x, &y).unwrap();
        for r in fixed_distance_residuals(&x, &y, &j, &k) {
            prop_assert!(r < 1e-10);
        }
        prop_assert!(j.operator_norm() <= 1.0 + 1e-12);
        prop_assert!(k.operator_norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn solve_alpha_solves(a in -3.0f64..3.0, b in -3.0f64..3.0, t in -1.0f64..1.0) {
        let r = a.hypot(b);
        prop_assume!(r > 1e-6);
        let c = t * r;
        let alpha = solve_alpha(a, b, c).unwrap();
        prop_assert!((0.0..2.0 * PI).contains(&alpha));
        prop_assert!((a * alpha.cos() + b * alpha.sin() - c).abs() < 1e-12 * r.max(1.0));
        prop_assert!(solve_alpha(a, b, r * (1.0 + 1e-6) + 1e-9).is_err());
    }

    #[test]
    fn complete_frame_commutes_with_rotations(
        (x, y) in sphere_pair(),
        w in vec_in(3),
    ) {
        // Orthonormal pair spanning the plane of x and y.
        let o = frame_align(&x, &y).unwrap();
        let (v1, v2) = (o.column(0), o.column(1));
        let q = so3_exp(&Vector::from_slice(&w).unwrap().scale(3.0));
        let lhs = complete_frame(&[q.mul_vec(&v1), q.mul_vec(&v2)]).unwrap();
        let rhs = q.mul_vec(&complete_frame(&[v1, v2]).unwrap());
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        let det = Matrix::from_columns(&[v1, v2, complete_frame(&[v1, v2]).unwrap()]).determinant();
        prop_assert!((det - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exp_log_round_trip((s, p, q) in space_and_points()) {
        let rho = s.distance(&p, &q).unwrap();
        prop_assume!(rho < s.diameter() - 1e-3 && rho < 6.0);
        let log = s.log_map(&p, &q).unwrap();
        prop_assert!((log.norm() - rho).abs() < 1e-10 * rho.max(1.0));
        let back = s.exp_tangent(&p, log.vector()).unwrap();
        let scale = q.coords().norm().max(1.0);
        prop_assert!(back.coords().max_abs_diff(q.coords()) < 1e-9 * scale);
    }

    #[test]
    fn transport_is_an_isometry(
        (s, p, q) in space_and_points(),
        a in vec_in(7),
        b in vec_in(7),
    ) {
        let rho = s.distance(&p, &q).unwrap();
        prop_assume!(rho < s.diameter() - 1e-3 && rho < 5.0);
        let n = s.ambient_dim();
        let va = TangentVector::new(p, s.project_tangent(&p, &Vector::from_slice(&a[..n]).unwrap())).unwrap();
        let vb = TangentVector::new(p, s.project_tangent(&p, &Vector::from_slice(&b[..n]).unwrap())).unwrap();
        let ta = s.parallel_transport(&va, &q).unwrap();
        let tb = s.parallel_transport(&vb, &q).unwrap();
        let scale = (va.norm() * vb.norm()).max(1.0) * p.coords().norm_squared().max(1.0);
        prop_assert!((ta.inner(&tb) - va.inner(&vb)).abs() < 1e-9 * scale);
        // Transported vectors are tangent at q.
        prop_assert!(s.inner(ta.vector(), q.coords()).abs() < 1e-9 * scale || s.curvature() == Curvature::Zero);
    }

    #[test]
    fn index_forms_match_quadrature(r in curvature(), t in 0.02f64..0.98, a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let rho = if r == Curvature::Positive { t * PI } else { t * 4.0 };
        let closed = index_form_closed(r, rho).unwrap();
        let quad = index_form_quadrature(r, rho, (a, b)).unwrap();
        let exact = closed.quadratic(a, b);
        prop_assert!((quad - exact).abs() <= 1e-6 * exact.abs().max(1e-3));
        prop_assert!(closed.i12 < 0.0);
    }

    #[test]
    fn jacobi_fields_compare_by_curvature(t in 0.01f64..0.99, u in 0.0f64..1.0) {
        // w2 = gs(s) / gs(ρ) decreases as the curvature decreases.
        let rho = t * 3.0;
        let s = u * rho;
        let w = |r| jacobi_coefficients(r, rho, s).unwrap();
        let (p, z, n) = (w(Curvature::Positive), w(Curvature::Zero), w(Curvature::Negative));
        prop_assert!(p.1 >= z.1 - 1e-12 && z.1 >= n.1 - 1e-12);
        prop_assert!(gs(Curvature::Positive, rho) <= rho && rho <= gs(Curvature::Negative, rho));
    }

    #[test]
    fn laws_start_at_rho0(rho0 in 0.05f64..3.0, k in -2.0f64..2.0) {
        let s2 = SpaceSpec::sphere(2).unwrap();
        for kind in [
            LawKind::SphereSynchronous,
            LawKind::SpherePerverse,
            LawKind::ExtrinsicContract,
            LawKind::ExtrinsicExpand,
            LawKind::Exponential { k },
            LawKind::Constant,
        ] {
            let law = DistanceLaw::new(kind, s2, rho0).unwrap();
            prop_assert!((law.eval(0.0) - rho0).abs() < 1e-12);
            prop_assert!((law.eval_observable(0.0) - law.observe(rho0)).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn drift_identity_at_random_angles(
        r in curvature(),
        d in 2usize..=5,
        alpha in 0.0f64..PI,
        t in 0.05f64..0.95,
    ) {
        let s = SpaceSpec::new(r, d).unwrap();
        let rho = t * 2.5;
        let quad = index_form_drift(s, alpha, rho).unwrap();
        prop_assert!(relative_error(quad, rotation_drift(&s, rho, alpha)) < 1e-6);
    }

    #[test]
    fn rotation_noise_map_is_a_partial_isometry(
        d in 2usize..=6,
        k in 0.0f64..1.0,
        t in 0.05f64..0.95,
    ) {
        let s = SpaceSpec::sphere(d).unwrap();
        let c = Coupling::new(s, CouplingStrategy::rotation(k * (d - 1) as f64)).unwrap();
        let (x, y) = s.canonical_pair(t * PI).unwrap();
        let pairs = c.rotation_noise_map(&x, &y).unwrap();
        let bx = s.tangent_basis(&x, None);
        let by = s.tangent_basis(&y, None);
        for (basis, pick) in [(&bx, 0usize), (&by, 1)] {
            for a in basis.iter() {
                for b in basis.iter() {
                    let sum: f64 = pairs
                        .iter()
                        .map(|p| {
                            let v = if pick == 0 { &p.0 } else { &p.1 };
                            v.dot(a) * v.dot(b)
                        })
                        .sum();
                    prop_assert!((sum - a.dot(b)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn coupled_steps_stay_on_the_model(
        kind in prop::sample::select(vec![
            StrategyKind::MirrorS2,
            StrategyKind::ExtrinsicContractS2,
            StrategyKind::ExtrinsicExpandS2,
            StrategyKind::FixedS2,
            StrategyKind::So3Flow,
            StrategyKind::Independent,
            StrategyKind::Rotation,
        ]),
        rho0 in 0.1f64..3.0,
        seed in any::<u64>(),
    ) {
        let s = SpaceSpec::sphere(2).unwrap();
        let c = Coupling::new(s, CouplingStrategy::new(kind)).unwrap();
        let (x, y) = s.canonical_pair(rho0).unwrap();
        let mut state = c.init(x, y).unwrap();
        let mut noise = NoiseStream::new(seed, 0);
        let (np, na) = c.noise_dims();
        for _ in 0..50 {
            c.advance(&mut state, &noise.step_noise(np, na), 1e-3).unwrap();
            prop_assert!(s.constraint_residual(state.x().coords()) < 1e-12);
            prop_assert!(s.constraint_residual(state.y().coords()) < 1e-12);
            prop_assert!((s.distance(state.x(), state.y()).unwrap() - state.rho()).abs() < 1e-15);
        }
    }

    #[test]
    fn config_round_trip(
        space in space(),
        kind in prop::sample::select(StrategyKind::ALL.to_vec()),
        k in -10.0f64..10.0,
        alpha in prop::option::of(0.0f64..PI),
        eps in prop::option::of(1e-3f64..0.7),
        rho0 in 1e-3f64..3.0,
        h in 1e-6f64..1e-1,
        t_end in 0.0f64..100.0,
        n_paths in 0usize..100_000,
        seed in any::<u64>(),
        record_every in 1usize..1000,
        dir in "[a-zA-Z0-9_/.-]{1,24}",
        threads in prop::option::of(1usize..64),
        coords in prop::option::of((vec_in(4), vec_in(4))),
    ) {
        let cfg = SimConfig {
            space,
            strategy: kind,
            k,
            alpha,
            eps,
            eta: None,
            rho0,
            x: coords.as_ref().map(|c| c.0.clone()),
            y: coords.map(|c| c.1),
            h,
            t_end,
            n_paths,
            seed,
            record_every,
            out_dir: PathBuf::from(dir),
            threads,
        };
        prop_assert_eq!(SimConfig::parse(&cfg.render()).unwrap(), cfg);
    }

    #[test]
    fn trajectory_csv_round_trip(
        rows in prop::collection::vec((0.0f64..1e6, 0.0f64..1e3, any::<bool>()), 0..40),
        id in any::<u64>(),
    ) {
        let mut t = 0.0;
        let rows: Vec<TrajectoryRow> = rows
            .into_iter()
            .map(|(dt, rho, coupled)| {
                t += dt + 1e-9;
                TrajectoryRow {
                    t,
                    rho,
                    regime: if coupled { Regime::Coupled } else { Regime::Independent },
                    path_id: id,
                }
            })
            .collect();
        let text = to_csv_string(&rows).unwrap();
        prop_assert_eq!(parse_csv(text.as_bytes()).unwrap(), rows);
    }

    #[test]
    fn summary_json_round_trip(
        errs in prop::collection::vec((1e-6f64..1.0, 0.0f64..10.0), 0..8),
        z in prop::collection::vec(-1e3f64..1e3, 0..12),
        order in prop::option::of(-3.0f64..3.0),
        pass in any::<bool>(),
        n_paths in any::<usize>(),
    ) {
        let s = Summary {
            strategy: "rotation".into(),
            law: "flat-perverse".into(),
            n_paths,
            h_ladder: errs.iter().map(|e| e.0).collect(),
            sup_err: errs.iter().map(|e| e.1).collect(),
            fitted_order: order,
            z_scores: z,
            pass,
        };
        prop_assert_eq!(Summary::from_json(&s.to_json().unwrap()).unwrap(), s);
    }
}
