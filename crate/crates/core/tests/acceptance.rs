//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails. Pass criterion numbers as arguments to run a subset,
//! e.g. `cargo test --test acceptance -- 5 6`.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rand::{rngs::StdRng, Rng, SeedableRng};
use stflow::bench::{csv_string, quadrature_error_probe, run_convergence, RunRow, SolverConfig};
use stflow::elements::gauss_radau;
use stflow::geometry::{all_dirichlet, build_hierarchy, build_time_partition, BoundaryTag};
use stflow::operators::{zero_field, NitscheConfig, SharedFn, SpatialOps};
use stflow::slab::dense::{assemble_spatial, boundary_data, dense_oracle, load};
use stflow::slab::{SlabOperator, SlabProblem, SlabVector};
use stflow::solver::{march, MarchSetup, NewtonConfig, PressureGauge};
use stflow::stmg::vanka::linear_cell_matrices;
use stflow::stmg::{build_patches, patch_pair, surrogate_bounds, LevelSpec, Multigrid, MultigridConfig, VankaMode};
use stflow::temporal::assemble_temporal;

// Tolerances, one per quantity.
const TABLE_REL: f64 = 0.02;
const TABLE_EOC: f64 = 0.1;
const ORDER_SLACK: f64 = 0.15;
const NEWTON_COARSE_MAX: f64 = 8.0;
const NEWTON_FINE_MAX: f64 = 5.0;
const NEWTON_BAND: f64 = 2.0;
const KRYLOV_MAX: f64 = 13.0;
const KRYLOV_BAND: f64 = 3.0;
const TREND_SLACK: f64 = 1.0;
const ORACLE_REL: f64 = 1e-12;
const ORACLE_STATES: usize = 20;
const SYMMETRY_REL: f64 = 1e-13;
const LINEARIZATION_REL: f64 = 1e-12;
const RADAU_EXACT: f64 = 1e-13;
const PROBE_SLACK: f64 = 0.1;
const BOUNDS_SLACK: f64 = 1e-10;
/// Temporal variation of the state in the bound checks, small enough for
/// `eps < 1` on every patch.
const BOUNDS_VARIATION: f64 = 0.01;
const PERTURBATION_SLOPE: f64 = 0.9;
const BACKWARD_EULER_REL: f64 = 1e-13;
const VANKA_SOLVE_REL: f64 = 1e-10;

const LEVELS: [usize; 4] = [1, 2, 3, 4];
const DEGREES: [usize; 4] = [1, 2, 3, 4];
const VISCOSITIES: [f64; 2] = [1e-2, 1e-4];

/// Published error table at `nu = 1e-2`: per `r ∈ {3, 4}` and level
/// `c = 1..4`, `[e_v L2L2, e_v L2H1, e_p L2L2, e_div L2L2]`.
const TABLE: [(usize, [[f64; 4]; 4]); 2] = [
    (
        3,
        [
            [2.79971e-02, 6.945345e-01, 1.34061e-02, 5.8049e-01],
            [1.27387e-03, 5.483490e-02, 7.37713e-04, 4.9633e-02],
            [4.92974e-05, 4.003204e-03, 4.78427e-05, 3.8147e-03],
            [1.62100e-06, 2.539962e-04, 2.98764e-06, 2.4741e-04],
        ],
    ),
    (
        4,
        [
            [1.72931e-03, 5.230669e-02, 1.04883e-03, 4.7054e-02],
            [1.76103e-04, 8.947813e-03, 1.15068e-04, 8.3109e-03],
            [3.26625e-06, 3.248534e-04, 3.63770e-06, 3.1410e-04],
            [5.38812e-08, 1.070734e-05, 1.13359e-07, 1.0484e-05],
        ],
    ),
];

/// Published rates for the same entries, levels `c = 2..4`.
const TABLE_EOC_VALUES: [(usize, [[f64; 4]; 3]); 2] = [
    (3, [[4.46, 3.66, 4.18, 3.55], [4.69, 3.78, 3.95, 3.70], [4.93, 3.98, 4.00, 3.95]]),
    (4, [[3.30, 2.55, 3.19, 2.50], [5.75, 4.78, 4.98, 4.73], [5.92, 4.92, 5.00, 4.90]]),
];

/// Published mean Newton steps per slab, `[nu][r - 1][c - 1]`.
const NEWTON_TABLE: [[[f64; 4]; 4]; 2] = [
    [[6.00, 5.25, 4.75, 4.00], [6.00, 5.00, 4.00, 3.09], [7.00, 5.00, 4.18, 4.00], [6.75, 5.00, 4.00, 4.00]],
    [[6.50, 6.38, 5.00, 4.00], [7.38, 6.88, 5.00, 4.00], [7.75, 7.00, 4.00, 4.00], [8.25, 7.13, 5.00, 4.00]],
];

/// Published mean FGMRES steps per Newton step, `[nu][r - 1][c - 1]`.
const KRYLOV_TABLE: [[[f64; 4]; 4]; 2] = [
    [[5.71, 4.79, 3.83, 3.75], [5.96, 4.55, 3.86, 3.05], [7.43, 6.85, 4.96, 4.31], [8.04, 6.35, 4.50, 3.25]],
    [[6.35, 4.93, 4.78, 4.11], [5.75, 4.43, 4.19, 4.52], [7.30, 6.95, 6.63, 5.88], [6.80, 6.25, 5.30, 5.04]],
];

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome { pass, detail: detail.into() }
    }
}

/// Studies shared by criteria 1 to 4, keyed by viscosity index.
#[derive(Default)]
struct Studies {
    rows: BTreeMap<usize, Vec<RunRow>>,
}

impl Studies {
    fn get(&mut self, nu_idx: usize) -> &[RunRow] {
        self.rows.entry(nu_idx).or_insert_with(|| {
            let nu = VISCOSITIES[nu_idx];
            let start = Instant::now();
            let rows = run_convergence(&DEGREES, &LEVELS, nu, &SolverConfig::default()).expect("study runs");
            eprintln!("  study nu={nu:e}: {:.0} s", start.elapsed().as_secs_f64());
            rows
        })
    }
}

fn row(rows: &[RunRow], r: usize, c: usize) -> &RunRow {
    rows.iter().find(|x| x.r == r && x.c == c).expect("row present")
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&d) / norm(b).max(1e-300)
}

fn outflow_right(x: [f64; 2]) -> BoundaryTag {
    if x[0] > 1.0 - 1e-12 {
        BoundaryTag::Neumann
    } else {
        BoundaryTag::Dirichlet
    }
}

fn no_dirichlet(_: [f64; 2]) -> BoundaryTag {
    BoundaryTag::Neumann
}

fn spatial_ops(level: usize, r: usize, nu: f64, tagging: fn([f64; 2]) -> BoundaryTag) -> Arc<SpatialOps> {
    let h = build_hierarchy(&[0.0, 0.0], &[1.0, 1.0], 1, level + 1, &tagging).unwrap();
    Arc::new(SpatialOps::new(h.level(level), r, NitscheConfig::new(nu)))
}

fn boundary_field() -> SharedFn {
    Arc::new(|x: [f64; 2], t: f64| [x[1] * (1.0 + t), 0.5 - x[0] * t])
}

fn forcing_field() -> SharedFn {
    Arc::new(|x: [f64; 2], t: f64| [(x[0] + t).sin(), x[0] * x[1]])
}

fn random_problem(ops: Arc<SpatialOps>, k: usize, tau: f64, convection: bool, rng: &mut StdRng) -> SlabProblem {
    let op = SlabOperator::new(ops.clone(), assemble_temporal(k, tau, 1), 0.2, convection, boundary_field());
    let prev = (0..ops.nv()).map(|_| rng.random::<f64>() - 0.5).collect();
    SlabProblem::new(op, forcing_field(), prev)
}

fn random_slab(op: &SlabOperator, rng: &mut StdRng) -> SlabVector {
    let mut u = op.zeros();
    u.data.iter_mut().for_each(|x| *x = rng.random::<f64>() - 0.5);
    u
}

fn random_vec(n: usize, rng: &mut StdRng) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>() - 0.5).collect()
}

/// Least-squares change of `y` over the range of `x`.
fn fitted_change(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx * (x[x.len() - 1] - x[0])
}

fn loglog_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.windows(2).zip(y.windows(2)).map(|(a, b)| (b[0] / b[1]).ln() / (a[0] / a[1]).ln()).collect()
}

fn criterion_1(studies: &mut Studies) -> Outcome {
    let rows = studies.get(0);
    let mut worst_rel: f64 = 0.0;
    let mut worst_eoc: f64 = 0.0;
    for (r, table) in TABLE {
        for (ci, expect) in table.iter().enumerate() {
            let e = row(rows, r, ci + 1).errors.expect("errors");
            let got = [e.velocity_l2, e.velocity_h1, e.pressure_l2, e.divergence_l2];
            for (g, x) in got.iter().zip(expect) {
                worst_rel = worst_rel.max(rel(*g, *x));
            }
        }
    }
    for (r, rates) in TABLE_EOC_VALUES {
        for (ci, expect) in rates.iter().enumerate() {
            let eoc = row(rows, r, ci + 2).eoc;
            let got = [eoc[0], eoc[1], eoc[3], eoc[4]];
            for (g, x) in got.iter().zip(expect) {
                worst_eoc = worst_eoc.max((g.expect("rate") - x).abs());
            }
        }
    }
    Outcome::new(
        worst_rel <= TABLE_REL && worst_eoc <= TABLE_EOC,
        format!("max relative error deviation {worst_rel:.4} (tol {TABLE_REL:e}), max rate deviation {worst_eoc:.3} (tol {TABLE_EOC:e})"),
    )
}

fn criterion_2(studies: &mut Studies) -> Outcome {
    let rows = studies.get(0);
    let mut pass = true;
    let mut parts = Vec::new();
    let finest = *LEVELS.last().unwrap();
    for r in DEGREES {
        let eoc = row(rows, r, finest).eoc;
        let (h1, p) = (eoc[1].expect("rate"), eoc[3].expect("rate"));
        let need = (r + 1) as f64 - ORDER_SLACK;
        pass &= h1 >= need && p >= need;
        parts.push(format!("r={r}: H1 {h1:.2} p {p:.2} (>= {need:.2})"));
    }
    Outcome::new(pass, parts.join(", "))
}

/// Shared check of criteria 3 and 4. The band is an allowance for
/// iteration counts above the published ones; counts below them are
/// reported but do not fail.
fn iteration_check(
    studies: &mut Studies,
    value: fn(&RunRow) -> f64,
    table: &[[[f64; 4]; 4]; 2],
    band: f64,
    bounds: impl Fn(usize, f64) -> Option<f64>,
) -> (bool, String) {
    let mut pass = true;
    let mut worst_trend = f64::NEG_INFINITY;
    let mut worst_step = f64::NEG_INFINITY;
    let mut bound_misses = Vec::new();
    let (mut above, mut below) = (Vec::new(), 0usize);
    let mut caps = 0;
    let mut unconverged = 0;
    for nu_idx in 0..VISCOSITIES.len() {
        let rows = studies.get(nu_idx);
        for r in DEGREES {
            let series: Vec<f64> = LEVELS.iter().map(|&c| value(row(rows, r, c))).collect();
            for (i, &c) in LEVELS.iter().enumerate() {
                let x = row(rows, r, c);
                caps += x.cap_hits;
                unconverged += usize::from(!x.converged);
                if let Some(limit) = bounds(c, series[i]) {
                    bound_misses.push(format!("nu={:e} r={r} c={c}: {:.2} > {limit}", VISCOSITIES[nu_idx], series[i]));
                }
                let published = table[nu_idx][r - 1][c - 1];
                if series[i] > published + band {
                    above.push(format!("nu={:e} r={r} c={c}: {:.2} vs {published}", VISCOSITIES[nu_idx], series[i]));
                } else if series[i] < published - band {
                    below += 1;
                }
            }
            let cs: Vec<f64> = LEVELS.iter().map(|&c| c as f64).collect();
            worst_trend = worst_trend.max(fitted_change(&cs, &series));
            worst_step = series.windows(2).map(|w| w[1] - w[0]).fold(worst_step, f64::max);
        }
    }
    pass &= bound_misses.is_empty() && above.is_empty() && caps == 0 && unconverged == 0 && worst_trend <= TREND_SLACK;
    let detail = format!(
        "bound misses {:?}; fitted increase over levels {worst_trend:.2} (tol {TREND_SLACK:e}), largest single-level increase {worst_step:.2}; \
         above published+{band}: {above:?}; below published-{band}: {below}; cap hits {caps}; unconverged runs {unconverged}",
        bound_misses
    );
    (pass, detail)
}

fn criterion_3(studies: &mut Studies) -> Outcome {
    let coarsest = LEVELS[0];
    let finest = *LEVELS.last().unwrap();
    let (pass, detail) = iteration_check(studies, |x| x.mean_newton, &NEWTON_TABLE, NEWTON_BAND, |c, v| {
        let limit = if c == coarsest {
            NEWTON_COARSE_MAX
        } else if c == finest {
            NEWTON_FINE_MAX
        } else {
            NEWTON_COARSE_MAX
        };
        (v > limit).then_some(limit)
    });
    Outcome::new(pass, detail)
}

fn criterion_4(studies: &mut Studies) -> Outcome {
    let (pass, detail) = iteration_check(studies, |x| x.mean_krylov, &KRYLOV_TABLE, KRYLOV_BAND, |_, v| {
        (v > KRYLOV_MAX).then_some(KRYLOV_MAX)
    });
    let max_single = studies.rows.values().flatten().map(|x| x.max_krylov).max().unwrap_or(0);
    Outcome::new(pass, format!("{detail}; largest single solve {max_single}"))
}

fn criterion_5() -> Outcome {
    let mut rng = StdRng::seed_from_u64(5);
    let mut worst_res: f64 = 0.0;
    let mut worst_jac: f64 = 0.0;
    let mut worst_sym: f64 = 0.0;
    let mut nonzero_22 = 0usize;
    let mut cases = 0;
    for (k, r) in [(1, 1), (1, 2), (2, 1)] {
        for level in [0, 1] {
            for tagging in [all_dirichlet as fn([f64; 2]) -> BoundaryTag, outflow_right] {
                let p = random_problem(spatial_ops(level, r, 0.05, tagging), k, 0.2, true, &mut rng);
                for _ in 0..ORACLE_STATES {
                    let u = random_slab(&p.op, &mut rng);
                    let dense = dense_oracle(&p, &u).expect("oracle fits");
                    worst_res = worst_res.max(rel_diff(&p.residual(&u).data, &dense.residual));
                    let du = random_slab(&p.op, &mut rng);
                    let jd = p.jacobian_action(&u, &du);
                    worst_jac = worst_jac.max(rel_diff(&jd.data, &dense.jacobian.matvec(&du.data)));
                    cases += 1;
                }
                // probe the matrix-free Jacobian column by column
                let u = random_slab(&p.op, &mut rng);
                let jac = p.op.linearize(&u);
                let n = p.op.len();
                let poff = u.pressure_offset();
                let cols: Vec<Vec<f64>> = (0..n)
                    .map(|j| {
                        let mut e = vec![0.0; n];
                        e[j] = 1.0;
                        jac.apply_vec(&e)
                    })
                    .collect();
                let scale = cols.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
                for i in poff..n {
                    for j in 0..n {
                        if j >= poff {
                            nonzero_22 += usize::from(cols[j][i] != 0.0);
                        } else {
                            worst_sym = worst_sym.max((cols[j][i] - cols[i][j]).abs() / scale);
                        }
                    }
                }
            }
        }
    }
    Outcome::new(
        worst_res <= ORACLE_REL && worst_jac <= ORACLE_REL && worst_sym <= SYMMETRY_REL && nonzero_22 == 0,
        format!(
            "{cases} states: residual {worst_res:.1e}, Jacobian {worst_jac:.1e} (tol {ORACLE_REL:e}); \
             |J21 - J12^T| {worst_sym:.1e} (tol {SYMMETRY_REL:e}); nonzero J22 entries {nonzero_22}"
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = StdRng::seed_from_u64(6);
    let mut worst_h: f64 = 0.0;
    for r in [1, 2, 3] {
        for level in [0, 1, 2] {
            let ops = spatial_ops(level, r, 0.05, all_dirichlet);
            for _ in 0..5 {
                let v = random_vec(ops.nv(), &mut rng);
                let w = random_vec(ops.nv(), &mut rng);
                let vw: Vec<f64> = v.iter().zip(&w).map(|(a, b)| a + b).collect();
                let sv = ops.state(&v, None);
                let lhs = ops.convection(&ops.state(&vw, None));
                let hv = ops.convection(&sv);
                let hw = ops.convection(&ops.state(&w, None));
                let dh = ops.convection_jacobian_action(&sv, &w).unwrap();
                let rhs: Vec<f64> = (0..lhs.len()).map(|i| hv[i] + dh[i] + hw[i]).collect();
                worst_h = worst_h.max(rel_diff(&rhs, &lhs));
            }
        }
    }
    // without Dirichlet faces the residual is exactly quadratic
    let mut worst_taylor: f64 = 0.0;
    for (k, r) in [(0, 1), (1, 1), (1, 2), (2, 2)] {
        for level in [0, 1] {
            let p = random_problem(spatial_ops(level, r, 0.05, no_dirichlet), k, 0.2, true, &mut rng);
            let u = random_slab(&p.op, &mut rng);
            let du = random_slab(&p.op, &mut rng);
            let mut sum = u.clone();
            sum.data.iter_mut().zip(&du.data).for_each(|(a, b)| *a += b);
            let (r0, r1) = (p.residual(&u), p.residual(&sum));
            let j = p.jacobian_action(&u, &du);
            let rem: Vec<f64> = (0..u.len()).map(|i| r1.data[i] - r0.data[i] - j.data[i]).collect();
            let mut expect = p.op.zeros();
            let ops = &p.op.ops;
            for a in 0..=k {
                let h = ops.convection(&ops.state(du.vel(a), None));
                expect.vel_mut(a).iter_mut().zip(h).for_each(|(x, y)| *x = p.op.tm.mass[a] * y);
            }
            worst_taylor = worst_taylor.max(rel_diff(&rem, &expect.data));
        }
    }
    Outcome::new(
        worst_h <= LINEARIZATION_REL && worst_taylor <= LINEARIZATION_REL,
        format!("quadratic identity {worst_h:.1e}, residual Taylor identity {worst_taylor:.1e} (tol {LINEARIZATION_REL:e})"),
    )
}

fn criterion_7() -> Outcome {
    let mut worst: f64 = 0.0;
    for k in 0..=6 {
        let rule = gauss_radau(k);
        for d in 0..=2 * k {
            let exact = if d % 2 == 0 { 2.0 / (d + 1) as f64 } else { 0.0 };
            worst = worst.max((rule.integrate(|x| x.powi(d as i32)) - exact).abs());
        }
    }
    let taus = [0.5, 0.25, 0.125, 0.0625, 0.03125];
    let probes = quadrature_error_probe(&[0, 1, 2], &taus);
    let mut pass = worst <= RADAU_EXACT;
    let mut parts = Vec::new();
    for p in &probes {
        let need = (2 * p.k + 1) as f64 - PROBE_SLACK;
        pass &= p.slope >= need;
        parts.push(format!("k={}: slope {:.2} (>= {need:.1})", p.k, p.slope));
    }
    Outcome::new(pass, format!("monomial error {worst:.1e} (tol {RADAU_EXACT:e}); {}", parts.join(", ")))
}

/// Smooth per-node velocities whose temporal variation has size `delta`.
fn smooth_velocities(op: &SlabOperator, delta: f64) -> Vec<Vec<f64>> {
    let field = |x: [f64; 2], t: f64| [(1.0 + delta * t) * (3.0 * x[1]).sin(), (1.0 + delta * (2.0 * t).cos()) * x[0] * x[0]];
    op.node_times().iter().map(|&t| op.ops.velocity.interpolate(|x| field(x, t))).collect()
}

fn criterion_8() -> Outcome {
    let mut pass = true;
    let mut worst_eps: f64 = 0.0;
    let mut checked = 0;
    for (k, r, tau) in [(1, 1, 0.1), (2, 1, 0.1), (1, 2, 0.1), (2, 2, 0.02)] {
        let ops = spatial_ops(1, r, 0.05, outflow_right);
        let op = SlabOperator::new(ops.clone(), assemble_temporal(k, tau, 1), 0.1, true, zero_field());
        let vel = smooth_velocities(&op, BOUNDS_VARIATION);
        let lin = linear_cell_matrices(&ops);
        for cell in 0..ops.mesh.n_cells() {
            let (exact, surrogate) = patch_pair(&op, &lin, &vel, cell);
            let b = surrogate_bounds(&exact, &surrogate);
            worst_eps = worst_eps.max(b.epsilon);
            pass &= b.epsilon < 1.0 && b.all_hold(BOUNDS_SLACK);
            checked += 1;
        }
    }
    let taus = [0.25, 0.125, 0.0625, 0.03125, 0.015625];
    let ops = spatial_ops(1, 1, 0.05, outflow_right);
    let lin = linear_cell_matrices(&ops);
    let norms: Vec<f64> = taus
        .iter()
        .map(|&tau| {
            let op = SlabOperator::new(ops.clone(), assemble_temporal(1, tau, 1), 0.1, true, zero_field());
            let vel = smooth_velocities(&op, 1.0);
            (0..ops.mesh.n_cells())
                .map(|cell| {
                    let (e, s) = patch_pair(&op, &lin, &vel, cell);
                    surrogate_bounds(&e, &s).perturbation
                })
                .fold(0.0, f64::max)
        })
        .collect();
    let slopes = loglog_slopes(&taus, &norms);
    let min_slope = slopes.iter().copied().fold(f64::INFINITY, f64::min);
    pass &= min_slope >= PERTURBATION_SLOPE;
    Outcome::new(
        pass,
        format!(
            "{checked} patches, max eps {worst_eps:.3}, bounds (i)-(iii) {}; perturbation slopes {:?} (>= {PERTURBATION_SLOPE})",
            if pass { "hold" } else { "checked" },
            slopes.iter().map(|s| format!("{s:.3}")).collect::<Vec<_>>()
        ),
    )
}

/// DG(0) slab residual against backward Euler built from assembled matrices.
fn backward_euler_gap(rng: &mut StdRng) -> f64 {
    let ops = spatial_ops(1, 1, 0.05, outflow_right);
    let tau = 0.1;
    let p = random_problem(ops.clone(), 0, tau, false, rng);
    let t = p.op.t_start + tau;
    let sp = assemble_spatial(&ops);
    let (a, d) = (sp.viscous(&ops), sp.divergence());
    let dt = d.transpose();
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let u = random_slab(&p.op, rng);
        let res = p.residual(&u);
        let (v, q) = (u.vel(0), u.pres(0));
        let f = load(&ops, &*p.forcing, t);
        let (lv, lp) = boundary_data(&ops, &*p.op.dirichlet, t);
        let (mv, av, btq) = (sp.mass.matvec(v), a.matvec(v), dt.matvec(q));
        let mprev = sp.mass.matvec(&p.prev_trace);
        let ev: Vec<f64> = (0..ops.nv()).map(|i| mv[i] + tau * (av[i] + btq[i] - f[i] - lv[i]) - mprev[i]).collect();
        let dv = d.matvec(v);
        let ep: Vec<f64> = (0..ops.np()).map(|i| tau * (dv[i] - lp[i])).collect();
        worst = worst.max(rel_diff(res.vel(0), &ev)).max(rel_diff(res.pres(0), &ep));
    }
    worst
}

/// One exact-mode sweep on a one-cell mesh against the true solution.
fn one_cell_vanka_gap(rng: &mut StdRng) -> f64 {
    let mut worst: f64 = 0.0;
    for (k, r, tagging) in [(1, 1, all_dirichlet as fn([f64; 2]) -> BoundaryTag), (2, 1, outflow_right), (1, 2, all_dirichlet)] {
        let ops = spatial_ops(0, r, 0.05, tagging);
        let op = SlabOperator::new(ops.clone(), assemble_temporal(k, 0.2, 1), 0.1, true, boundary_field());
        let vel: Vec<Vec<f64>> = (0..=k).map(|_| random_vec(ops.nv(), rng)).collect();
        let mut state = op.zeros();
        for (a, v) in vel.iter().enumerate() {
            state.vel_mut(a).copy_from_slice(v);
        }
        let states = op.node_states(&state);
        let jac = |x: &[f64], y: &mut [f64]| op.apply_jacobian(&states, x, y);
        let set = build_patches(&op, &linear_cell_matrices(&ops), &vel, VankaMode::Exact, 1, false);
        let gauge = PressureGauge::for_problem(&ops);
        let mut x = random_vec(op.len(), rng);
        if let Some(g) = &gauge {
            g.project_slab(&mut x, k, ops.nv());
        }
        let mut b = vec![0.0; op.len()];
        jac(&x, &mut b);
        let mut d = vec![0.0; op.len()];
        set.sweep(&op, 1, &jac, &b, &mut d, 1.0).expect("fresh patches");
        if let Some(g) = &gauge {
            g.project_slab(&mut d, k, ops.nv());
        }
        worst = worst.max(rel_diff(&d, &x));
    }
    worst
}

/// Newton steps per slab of the Stokes limit with tight forcing terms.
fn stokes_newton_steps() -> Vec<usize> {
    let (c, k, r, nu) = (2, 1, 2, 1e-2);
    let hierarchy = build_hierarchy(&[0.0, 0.0], &[1.0, 1.0], 1, c + 1, &all_dirichlet).unwrap();
    let nitsche = NitscheConfig::new(nu);
    let ops = Arc::new(SpatialOps::new(hierarchy.finest(), r, nitsche));
    let setup = MarchSetup {
        ops: ops.clone(),
        k,
        partition: build_time_partition(1.0, 4).unwrap(),
        forcing: Arc::new(|x: [f64; 2], t: f64| [x[1] * (1.0 + t), -x[0] * t.cos()]),
        dirichlet: zero_field(),
        convection: false,
        initial: vec![0.0; ops.nv()],
        newton: NewtonConfig { eta0: 1e-10, eta_min: 1e-10, krylov_max: 200, ..Default::default() },
    };
    let mut mg = Multigrid::new(&hierarchy, LevelSpec::new(c, k, r), nitsche, MultigridConfig::default()).unwrap();
    let (_, stats) = march(&setup, &mut mg).expect("march runs");
    stats.slabs.iter().map(|s| if s.converged { s.newton_iterations } else { usize::MAX }).collect()
}

fn criterion_9() -> Outcome {
    let mut rng = StdRng::seed_from_u64(9);
    let be = backward_euler_gap(&mut rng);
    let vanka = one_cell_vanka_gap(&mut rng);
    let steps = stokes_newton_steps();
    Outcome::new(
        be <= BACKWARD_EULER_REL && vanka <= VANKA_SOLVE_REL && steps.iter().all(|&s| s == 1),
        format!("DG(0) vs backward Euler {be:.1e} (tol {BACKWARD_EULER_REL:e}); one-cell Vanka {vanka:.1e} (tol {VANKA_SOLVE_REL:e}); Stokes Newton steps {steps:?}"),
    )
}

fn criterion_10() -> Outcome {
    let cfg = SolverConfig { deterministic: true, ..Default::default() };
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| csv_string(&run_convergence(&[1, 2], &[1, 2], 1e-2, &cfg).expect("study runs")))
    };
    let a = run(1);
    let b = run(1);
    let c = run(2);
    let d = run(3);
    Outcome::new(
        a == b && a == c && a == d,
        format!("repeat identical: {}; 2 threads identical: {}; 3 threads identical: {}", a == b, a == c, a == d),
    )
}

fn main() {
    let selected: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: usize| selected.is_empty() || selected.contains(&n);
    let mut studies = Studies::default();
    let mut failures = 0;
    for n in 1..=10 {
        if !wanted(n) {
            continue;
        }
        let start = Instant::now();
        let out = match n {
            1 => criterion_1(&mut studies),
            2 => criterion_2(&mut studies),
            3 => criterion_3(&mut studies),
            4 => criterion_4(&mut studies),
            5 => criterion_5(),
            6 => criterion_6(),
            7 => criterion_7(),
            8 => criterion_8(),
            9 => criterion_9(),
            _ => criterion_10(),
        };
        failures += usize::from(!out.pass);
        println!(
            "[{}] criterion {n:>2} ({:.1} s): {}",
            if out.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            out.detail
        );
    }
    if failures > 0 {
        println!("{failures} criterion(s) failed");
        std::process::exit(1);
    }
}
