use super::*;
use crate::geometry::{all_dirichlet, build_hierarchy, BoundaryTag};
use crate::linalg::{dot, norm2};
use crate::slab::dense::{assemble_spatial, boundary_data, convection_jacobian, convection_vector, load};
use rand::{rngs::StdRng, Rng, SeedableRng};

fn outflow_right(x: [f64; 2]) -> BoundaryTag {
    if x[0] > 1.0 - 1e-12 {
        BoundaryTag::Neumann
    } else {
        BoundaryTag::Dirichlet
    }
}

fn ops(cells_per_dim_level: usize, r: usize, tagging: &dyn Fn([f64; 2]) -> BoundaryTag, nu: f64) -> SpatialOps {
    let h = build_hierarchy(&[0.0, 0.0], &[1.0, 1.0], 1, cells_per_dim_level + 1, tagging).unwrap();
    SpatialOps::new(h.level(cells_per_dim_level), r, NitscheConfig::new(nu))
}

fn random(rng: &mut StdRng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>() - 0.5).collect()
}

fn assert_close(a: &[f64], b: &[f64], rel: f64) {
    let scale = norm2(b).max(1e-300);
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    assert!(diff <= rel * scale, "relative difference {} > {rel}", diff / scale);
}

fn configs() -> Vec<(usize, usize, bool)> {
    let mut v = Vec::new();
    for level in 0..2 {
        for r in 1..3 {
            for mixed in [false, true] {
                v.push((level, r, mixed));
            }
        }
    }
    v
}

fn tag(mixed: bool) -> &'static dyn Fn([f64; 2]) -> BoundaryTag {
    if mixed {
        &outflow_right
    } else {
        &all_dirichlet
    }
}

#[test]
fn linear_operators_match_dense_assembly() {
    let mut rng = StdRng::seed_from_u64(1);
    for (level, r, mixed) in configs() {
        let o = ops(level, r, tag(mixed), 0.3);
        let d = assemble_spatial(&o);
        let v = random(&mut rng, o.nv());
        let p = random(&mut rng, o.np());
        assert_close(&o.apply_mass(&v).unwrap(), &d.mass.matvec(&v), 1e-12);
        assert_close(&o.apply_stiffness(&v).unwrap(), &d.stiffness.matvec(&v), 1e-12);
        assert_close(&o.apply_div(&v).unwrap(), &d.div.matvec(&v), 1e-12);
        assert_close(&o.apply_div_transpose(&p).unwrap(), &d.div.transpose().matvec(&p), 1e-12);
        assert_close(&o.apply_pressure_mass(&p).unwrap(), &d.pressure_mass.matvec(&p), 1e-12);
        assert_close(&o.apply_nitsche_velocity(&v).unwrap(), &d.nitsche(&o).matvec(&v), 1e-12);
        assert_close(&o.apply_pressure_boundary(&p).unwrap(), &d.pressure_boundary.transpose().matvec(&p), 1e-12);
        assert_close(&o.apply_pressure_boundary_transpose(&v).unwrap(), &d.pressure_boundary.matvec(&v), 1e-12);
    }
}

#[test]
fn divergence_free_field_against_dense() {
    // v = curl(ψ) with ψ = x^2 y^2 (1 - x) is in Q_{r+1} for r = 2
    let o = ops(1, 2, &all_dirichlet, 1.0);
    let d = assemble_spatial(&o);
    let v = o.velocity.interpolate(|x| {
        let (a, b) = (x[0], x[1]);
        [2.0 * a * a * b * (1.0 - a), -(2.0 * a * b * b * (1.0 - a) - a * a * b * b)]
    });
    let bv = o.apply_div(&v).unwrap();
    let dense = d.div.matvec(&v);
    assert!(norm2(&bv) < 1e-13 && norm2(&dense) < 1e-13);
}

#[test]
fn q1_mass_pattern() {
    let o = ops(0, 0, &all_dirichlet, 1.0);
    assert_eq!(o.velocity.n_nodes, 4);
    let pattern = |i: usize, j: usize| {
        let (xi, yi, xj, yj) = (i % 2, i / 2, j % 2, j / 2);
        let fx = if xi == xj { 2.0 } else { 1.0 };
        let fy = if yi == yj { 2.0 } else { 1.0 };
        fx * fy / 36.0
    };
    for j in 0..4 {
        let mut e = vec![0.0; 8];
        let node = o.velocity.cell_nodes(0)[j];
        e[2 * node] = 1.0;
        let col = o.apply_mass(&e).unwrap();
        for i in 0..4 {
            let ni = o.velocity.cell_nodes(0)[i];
            assert!((col[2 * ni] - pattern(i, j)).abs() < 1e-15);
            assert_eq!(col[2 * ni + 1], 0.0);
        }
    }
}

#[test]
fn mass_and_stiffness_consistency() {
    let o = ops(1, 1, &all_dirichlet, 1.0);
    let ones = vec![1.0; o.nv()];
    assert!((dot(&ones, &o.apply_mass(&ones).unwrap()) - 2.0).abs() < 1e-13);
    let x = o.velocity.interpolate(|x| [x[0], 0.0]);
    assert!((dot(&x, &o.apply_stiffness(&x).unwrap()) - 1.0).abs() < 1e-13);
    assert!(o.apply_mass(&ones[1..]).is_err());
}

#[test]
fn symmetric_operators() {
    let mut rng = StdRng::seed_from_u64(2);
    for (level, r, mixed) in configs() {
        let o = ops(level, r, tag(mixed), 0.7);
        let x = random(&mut rng, o.nv());
        let y = random(&mut rng, o.nv());
        for f in [SpatialOps::apply_mass, SpatialOps::apply_stiffness, SpatialOps::apply_nitsche_velocity] {
            let (a, b) = (dot(&x, &f(&o, &y).unwrap()), dot(&y, &f(&o, &x).unwrap()));
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }
}

#[test]
fn adjoint_pairs() {
    let mut rng = StdRng::seed_from_u64(3);
    for (level, r, mixed) in configs() {
        let o = ops(level, r, tag(mixed), 1.0);
        let v = random(&mut rng, o.nv());
        let p = random(&mut rng, o.np());
        let a = dot(&p, &o.apply_div(&v).unwrap());
        let b = dot(&v, &o.apply_div_transpose(&p).unwrap());
        assert!((a - b).abs() < 1e-13 * a.abs().max(1.0));
        let a = dot(&p, &o.apply_pressure_boundary_transpose(&v).unwrap());
        let b = dot(&v, &o.apply_pressure_boundary(&p).unwrap());
        assert!((a - b).abs() < 1e-13 * a.abs().max(1.0));
    }
}

#[test]
fn nitsche_vanishes_away_from_the_boundary() {
    let o = ops(2, 1, &all_dirichlet, 1.0);
    // node at the centre: its support stays off the boundary, so trace and
    // normal derivative vanish on every face
    let centre = o.velocity.node_coords.iter().position(|x| (x[0] - 0.5).abs() + (x[1] - 0.5).abs() < 1e-12).unwrap();
    for comp in 0..2 {
        let mut v = vec![0.0; o.nv()];
        v[2 * centre + comp] = 1.0;
        assert!(o.apply_nitsche_velocity(&v).unwrap().iter().all(|&x| x == 0.0));
    }
}

#[test]
fn tangential_field_has_no_boundary_flux() {
    let o = ops(1, 1, &all_dirichlet, 1.0);
    // tangential on all four edges of the unit square
    let v = o.velocity.interpolate(|x| [x[0] * (1.0 - x[0]), x[1] * (1.0 - x[1])]);
    assert!(norm2(&o.apply_pressure_boundary_transpose(&v).unwrap()) < 1e-14);
}

#[test]
fn constant_pressure_gives_normal_flux_weights() {
    let o = ops(0, 1, &all_dirichlet, 1.0);
    let mut p = vec![0.0; o.np()];
    p[0] = 1.0;
    let w = o.apply_pressure_boundary(&p).unwrap();
    // Q2 edge weights 1/6, 4/6, 1/6; corners collect two edges with opposite
    // normals components: x-component at corner (0,0) is -1/6 from the left edge.
    for (m, x) in o.velocity.node_coords.iter().enumerate() {
        let edge_w = |s: f64| if s.abs() < 1e-12 || (s - 1.0).abs() < 1e-12 { 1.0 / 6.0 } else { 4.0 / 6.0 };
        let mut ex = 0.0;
        let mut ey = 0.0;
        if x[0].abs() < 1e-12 {
            ex -= edge_w(x[1]);
        }
        if (x[0] - 1.0).abs() < 1e-12 {
            ex += edge_w(x[1]);
        }
        if x[1].abs() < 1e-12 {
            ey -= edge_w(x[0]);
        }
        if (x[1] - 1.0).abs() < 1e-12 {
            ey += edge_w(x[0]);
        }
        assert!((w[2 * m] - ex).abs() < 1e-14 && (w[2 * m + 1] - ey).abs() < 1e-14, "node {m}");
    }
}

#[test]
fn nitsche_operator_is_positive_semidefinite() {
    let mut rng = StdRng::seed_from_u64(4);
    for (level, r, mixed) in configs() {
        for nu in [1.0, 1e-2] {
            let o = ops(level, r, tag(mixed), nu);
            for _ in 0..5 {
                let x = random(&mut rng, o.nv());
                let mut y = o.apply_stiffness(&x).unwrap();
                y.iter_mut().for_each(|v| *v *= nu);
                crate::linalg::axpy(1.0, &o.apply_nitsche_velocity(&x).unwrap(), &mut y);
                assert!(dot(&x, &y) >= -1e-10 * dot(&x, &x));
                let m = o.apply_mass(&x).unwrap();
                assert!(dot(&x, &y) + dot(&x, &m) > 0.0);
            }
        }
    }
}

#[test]
fn convection_matches_dense_quadrature() {
    let mut rng = StdRng::seed_from_u64(5);
    let g = |x: [f64; 2], t: f64| [x[1] * t, -x[0] + 0.3];
    for (level, r, mixed) in configs() {
        let o = ops(level, r, tag(mixed), 1.0);
        let v = random(&mut rng, o.nv());
        let st = o.state(&v, Some((&g, 0.4)));
        let mut total = o.convection(&st);
        let (inflow, data) = o.convection_boundary_nitsche(&st);
        crate::linalg::axpy(1.0, &inflow, &mut total);
        crate::linalg::axpy(-1.0, &data, &mut total);
        assert_close(&total, &convection_vector(&o, &v, &g, 0.4), 1e-12);

        let w = random(&mut rng, o.nv());
        let mut jw = o.convection_jacobian_action(&st, &w).unwrap();
        crate::linalg::axpy(1.0, &o.convection_boundary_jacobian_action(&st, &w).unwrap(), &mut jw);
        assert_close(&jw, &convection_jacobian(&o, &v, &g, 0.4).matvec(&w), 1e-12);
    }
}

#[test]
fn convection_is_quadratic() {
    let mut rng = StdRng::seed_from_u64(6);
    for (level, r, mixed) in configs() {
        let o = ops(level, r, tag(mixed), 1.0);
        let v = random(&mut rng, o.nv());
        let w = random(&mut rng, o.nv());
        let sum: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a + b).collect();
        let hv = o.convection(&o.state(&v, None));
        let hw = o.convection(&o.state(&w, None));
        let hs = o.convection(&o.state(&sum, None));
        let jw = o.convection_jacobian_action(&o.state(&v, None), &w).unwrap();
        let rhs: Vec<f64> = (0..o.nv()).map(|i| hv[i] + jw[i] + hw[i]).collect();
        assert_close(&hs, &rhs, 1e-12);

        let jv = o.convection_jacobian_action(&o.state(&v, None), &v).unwrap();
        let twice: Vec<f64> = hv.iter().map(|x| 2.0 * x).collect();
        assert_close(&jv, &twice, 1e-12);

        let v2: Vec<f64> = v.iter().map(|x| 2.0 * x).collect();
        let four: Vec<f64> = hv.iter().map(|x| 4.0 * x).collect();
        assert_close(&o.convection(&o.state(&v2, None)), &four, 1e-13);
    }
    let o = ops(1, 1, &all_dirichlet, 1.0);
    let zero = vec![0.0; o.nv()];
    assert!(o.convection(&o.state(&zero, None)).iter().all(|&x| x == 0.0));
    let v = random(&mut rng, o.nv());
    let jz = o.convection_jacobian_action(&o.state(&v, None), &zero).unwrap();
    assert!(jz.iter().all(|&x| x == 0.0));
}

#[test]
fn inflow_term_hand_examples() {
    let o = ops(0, 1, &all_dirichlet, 1.0);
    // v = -n on the left edge: v = (1, 0), v.n = -1 there and +1 on the right
    let v = o.velocity.interpolate(|_| [1.0, 0.0]);
    let st = o.state(&v, Some((&|_, _| [0.0, 0.0], 0.0)));
    let (inflow, data) = o.convection_boundary_nitsche(&st);
    // z = n on the left edge: z = (-1, 0)
    let z = o.velocity.interpolate(|_| [-1.0, 0.0]);
    assert!((dot(&z, &inflow) - 1.0).abs() < 1e-14);
    assert!(data.iter().all(|&x| x == 0.0));

    // outflow only: v = x - (1/2, 1/2) points outward on every edge
    let v = o.velocity.interpolate(|x| [x[0] - 0.5, x[1] - 0.5]);
    let st = o.state(&v, Some((&|_, _| [1.0, 1.0], 0.0)));
    let (inflow, data) = o.convection_boundary_nitsche(&st);
    assert!(norm2(&inflow) < 1e-14);
    assert!(norm2(&data) < 1e-14);
}

#[test]
fn right_hand_sides() {
    let o = ops(1, 1, &all_dirichlet, 0.5);
    let tm = crate::temporal::assemble_temporal(0, 0.25, 0);
    let zero = |_: [f64; 2], _: f64| [0.0, 0.0];
    let (f, lv, lp) = o.assemble_rhs(&zero, &zero, &tm, 0.0);
    assert!(f.iter().chain(&lv).chain(&lp).all(|&x| x == 0.0));

    let one = |_: [f64; 2], _: f64| [1.0, 0.0];
    let (f, _, _) = o.assemble_rhs(&one, &zero, &tm, 0.0);
    let ex = o.velocity.interpolate(|_| [1.0, 0.0]);
    let expect: Vec<f64> = o.apply_mass(&ex).unwrap().iter().map(|x| 0.25 * x).collect();
    assert_close(&f, &expect, 1e-14);

    // zero trace on the boundary of the unit square
    let bubble = |x: [f64; 2], t: f64| {
        let b = x[0] * (1.0 - x[0]) * x[1] * (1.0 - x[1]);
        [b * (1.0 + t), -b]
    };
    let (_, lv, lp) = o.assemble_rhs(&bubble, &zero, &tm, 0.0);
    assert!(norm2(&lv) < 1e-15 && norm2(&lp) < 1e-15);

    let g = |x: [f64; 2], t: f64| [x[0] * x[1] + t, (x[0] - x[1]).sin()];
    let (bv, bp) = o.boundary_load(&g, 0.3);
    let (dv, dp) = boundary_data(&o, &g, 0.3);
    assert_close(&bv, &dv, 1e-12);
    assert_close(&bp, &dp, 1e-12);
    let f2 = |x: [f64; 2], t: f64| [x[0].exp() * t, x[1] * x[1]];
    assert_close(&o.load_vector(&f2, 0.7), &load(&o, &f2, 0.7), 1e-12);
}

#[test]
fn parallel_and_serial_agree_bitwise() {
    let mut rng = StdRng::seed_from_u64(7);
    let mut o = ops(2, 1, &outflow_right, 0.1);
    let v = random(&mut rng, o.nv());
    let p = random(&mut rng, o.np());
    let st = o.state(&v, None);
    let terms = Terms::linear(0.1).with_convection(ConvectionForm::Jacobian);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let a = pool.install(|| o.apply(&terms, Some(&st), Some(&v), Some(&p)));
    o.parallel = false;
    let b = o.apply(&terms, Some(&st), Some(&v), Some(&p));
    assert_eq!(a.w, b.w);
    assert_eq!(a.d, b.d);
}

