//! Quick property suites behind `stflow verify`.

use std::sync::Arc;

use rand::{rngs::StdRng, Rng, SeedableRng};
use stflow::bench::quadrature_error_probe;
use stflow::elements::gauss_radau;
use stflow::geometry::{build_hierarchy, BoundaryTag};
use stflow::operators::{zero_field, NitscheConfig, SharedFn, SpatialOps};
use stflow::slab::dense::dense_oracle;
use stflow::slab::{SlabOperator, SlabProblem};
use stflow::stmg::vanka::linear_cell_matrices;
use stflow::stmg::{patch_pair, surrogate_bounds};
use stflow::temporal::assemble_temporal;

fn outflow_right(x: [f64; 2]) -> BoundaryTag {
    if x[0] > 1.0 - 1e-12 {
        BoundaryTag::Neumann
    } else {
        BoundaryTag::Dirichlet
    }
}

fn ops(level: usize, r: usize) -> Arc<SpatialOps> {
    let h = build_hierarchy(&[0.0, 0.0], &[1.0, 1.0], 1, level + 1, &outflow_right).expect("valid mesh");
    Arc::new(SpatialOps::new(h.level(level), r, NitscheConfig::new(0.05)))
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    d / b.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300)
}

fn radau_exactness() -> f64 {
    let mut worst: f64 = 0.0;
    for k in 0..=6 {
        let rule = gauss_radau(k);
        for d in 0..=2 * k {
            let exact = if d % 2 == 0 { 2.0 / (d + 1) as f64 } else { 0.0 };
            worst = worst.max((rule.integrate(|x| x.powi(d as i32)) - exact).abs());
        }
    }
    worst
}

fn oracle_equivalence(rng: &mut StdRng) -> f64 {
    let g: SharedFn = Arc::new(|x: [f64; 2], t: f64| [x[1] * (1.0 + t), 0.5 - x[0] * t]);
    let f: SharedFn = Arc::new(|x: [f64; 2], t: f64| [(x[0] + t).sin(), x[0] * x[1]]);
    let mut worst: f64 = 0.0;
    for (k, r) in [(1, 1), (1, 2), (2, 1)] {
        for level in [0, 1] {
            let o = ops(level, r);
            let op = SlabOperator::new(o.clone(), assemble_temporal(k, 0.2, 1), 0.2, true, g.clone());
            let prev = (0..o.nv()).map(|_| rng.random::<f64>() - 0.5).collect();
            let p = SlabProblem::new(op, f.clone(), prev);
            for _ in 0..5 {
                let mut u = p.op.zeros();
                u.data.iter_mut().for_each(|x| *x = rng.random::<f64>() - 0.5);
                let mut du = p.op.zeros();
                du.data.iter_mut().for_each(|x| *x = rng.random::<f64>() - 0.5);
                let dense = dense_oracle(&p, &u).expect("small problem");
                worst = worst.max(rel_diff(&p.residual(&u).data, &dense.residual));
                worst = worst.max(rel_diff(&p.jacobian_action(&u, &du).data, &dense.jacobian.matvec(&du.data)));
            }
        }
    }
    worst
}

/// Largest `eps` and whether all bounds held on every patch.
fn surrogate_suite() -> (f64, bool) {
    let mut worst: f64 = 0.0;
    let mut hold = true;
    for (k, r) in [(1, 1), (2, 1), (1, 2)] {
        let o = ops(1, r);
        let op = SlabOperator::new(o.clone(), assemble_temporal(k, 0.1, 1), 0.1, true, zero_field());
        let vel: Vec<Vec<f64>> = op
            .node_times()
            .iter()
            .map(|&t| o.velocity.interpolate(|x| [(1.0 + 0.01 * t) * (3.0 * x[1]).sin(), (1.0 + 0.01 * (2.0 * t).cos()) * x[0] * x[0]]))
            .collect();
        let lin = linear_cell_matrices(&o);
        for cell in 0..o.mesh.n_cells() {
            let (e, s) = patch_pair(&op, &lin, &vel, cell);
            let b = surrogate_bounds(&e, &s);
            worst = worst.max(b.epsilon);
            hold &= b.epsilon < 1.0 && b.all_hold(1e-10);
        }
    }
    (worst, hold)
}

/// Runs all suites, printing one line each; true if all pass.
pub fn run() -> bool {
    let mut rng = StdRng::seed_from_u64(2024);
    let mut all = true;
    let mut report = |name: &str, pass: bool, detail: String| {
        println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        all &= pass;
    };
    let gr = radau_exactness();
    report("Gauss-Radau exactness", gr <= 1e-13, format!("max monomial error {gr:.1e}"));
    let oracle = oracle_equivalence(&mut rng);
    report("dense oracle", oracle <= 1e-12, format!("max relative difference {oracle:.1e}"));
    let (eps, hold) = surrogate_suite();
    report("surrogate bounds", hold, format!("max eps {eps:.3}"));
    let probes = quadrature_error_probe(&[0, 1, 2], &[0.5, 0.25, 0.125, 0.0625, 0.03125]);
    let ok = probes.iter().all(|p| p.slope >= (2 * p.k + 1) as f64 - 0.1);
    let slopes: Vec<String> = probes.iter().map(|p| format!("k={}: {:.2}", p.k, p.slope)).collect();
    report("quadrature probe", ok, slopes.join(", "));
    all
}
