//! Fixtures shared by the kernel benchmarks.

use std::sync::Arc;

use stflow::geometry::{all_dirichlet, build_hierarchy, MeshHierarchy};
use stflow::operators::{NitscheConfig, SharedFn, SpatialOps};
use stflow::slab::{SlabOperator, SlabVector};
use stflow::temporal::assemble_temporal;

/// Slab problem on the unit square with `h = 2^-level`.
pub struct Fixture {
    pub hierarchy: MeshHierarchy,
    pub nitsche: NitscheConfig,
    pub op: SlabOperator,
    /// Smooth linearization point.
    pub state: SlabVector,
}

impl Fixture {
    pub fn new(level: usize, r: usize, k: usize) -> Self {
        let hierarchy = build_hierarchy(&[0.0, 0.0], &[1.0, 1.0], 1, level + 1, &all_dirichlet).expect("valid mesh");
        let nitsche = NitscheConfig::new(1e-2);
        let ops = Arc::new(SpatialOps::new(hierarchy.finest(), r, nitsche));
        let g: SharedFn = Arc::new(|_, _| [0.0, 0.0]);
        let op = SlabOperator::new(ops.clone(), assemble_temporal(k, 0.5f64.powi(level as i32), 0), 0.0, true, g);
        let mut state = op.zeros();
        for (a, t) in op.node_times().into_iter().enumerate() {
            let v = ops.velocity.interpolate(|x| [t.sin() * (3.0 * x[1]).sin(), t.cos() * x[0] * (1.0 - x[0])]);
            state.vel_mut(a).copy_from_slice(&v);
        }
        Fixture { hierarchy, nitsche, op, state }
    }

    /// Deterministic right-hand side of slab length.
    pub fn vector(&self) -> Vec<f64> {
        (0..self.op.len()).map(|i| ((i * 7919) % 101) as f64 / 101.0 - 0.5).collect()
    }
}
