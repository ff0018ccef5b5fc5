use super::quadrature::{gauss_radau, QuadratureRule};

/// Lagrange polynomials through a set of distinct nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct LagrangeBasis {
    pub nodes: Vec<f64>,
}

impl LagrangeBasis {
    pub fn new(nodes: Vec<f64>) -> Self {
        LagrangeBasis { nodes }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn eval(&self, i: usize, x: f64) -> f64 {
        let xi = self.nodes[i];
        self.nodes
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &xj)| (x - xj) / (xi - xj))
            .product()
    }

    pub fn deriv(&self, i: usize, x: f64) -> f64 {
        let xi = self.nodes[i];
        let mut total = 0.0;
        for (m, &xm) in self.nodes.iter().enumerate() {
            if m == i {
                continue;
            }
            let mut term = 1.0 / (xi - xm);
            for (j, &xj) in self.nodes.iter().enumerate() {
                if j != i && j != m {
                    term *= (x - xj) / (xi - xj);
                }
            }
            total += term;
        }
        total
    }

    pub fn eval_all(&self, x: f64) -> Vec<f64> {
        (0..self.len()).map(|i| self.eval(i, x)).collect()
    }

    pub fn deriv_all(&self, x: f64) -> Vec<f64> {
        (0..self.len()).map(|i| self.deriv(i, x)).collect()
    }
}

/// Lagrange basis in time at the right-sided Gauss-Radau nodes of `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TemporalBasis {
    pub k: usize,
    pub rule: QuadratureRule,
    pub lagrange: LagrangeBasis,
}

impl TemporalBasis {
    pub fn new(k: usize) -> Self {
        let rule = gauss_radau(k);
        let lagrange = LagrangeBasis::new(rule.nodes.clone());
        TemporalBasis { k, rule, lagrange }
    }

    pub fn n(&self) -> usize {
        self.k + 1
    }

    pub fn nodes(&self) -> &[f64] {
        &self.rule.nodes
    }

    pub fn eval(&self, a: usize, t: f64) -> f64 {
        self.lagrange.eval(a, t)
    }

    pub fn deriv(&self, a: usize, t: f64) -> f64 {
        self.lagrange.deriv(a, t)
    }

    pub fn eval_all(&self, t: f64) -> Vec<f64> {
        self.lagrange.eval_all(t)
    }
}

pub fn temporal_basis(k: usize) -> TemporalBasis {
    TemporalBasis::new(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_basis_for_dg0() {
        let b = temporal_basis(0);
        for t in [-1.0, -0.3, 0.5, 1.0] {
            assert_eq!(b.eval(0, t), 1.0);
            assert_eq!(b.deriv(0, t), 0.0);
        }
    }

    #[test]
    fn dg1_midpoint_values() {
        let b = temporal_basis(1);
        assert!((b.eval(0, 0.0) - 0.75).abs() < 1e-15);
        assert!((b.eval(1, 0.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn nodal_property() {
        for k in 0..6 {
            let b = temporal_basis(k);
            for a in 0..=k {
                for (mu, &t) in b.nodes().iter().enumerate() {
                    let expect = if a == mu { 1.0 } else { 0.0 };
                    assert!((b.eval(a, t) - expect).abs() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let b = LagrangeBasis::new(vec![0.0, 0.2, 0.7, 1.0]);
        let h = 1e-6;
        for i in 0..4 {
            for x in [0.1, 0.45, 0.9] {
                let fd = (b.eval(i, x + h) - b.eval(i, x - h)) / (2.0 * h);
                assert!((fd - b.deriv(i, x)).abs() < 1e-7);
            }
        }
    }

    proptest! {
        #[test]
        fn partition_of_unity(k in 0usize..7, t in -1.0f64..=1.0) {
            let b = temporal_basis(k);
            let s: f64 = (0..=k).map(|a| b.eval(a, t)).sum();
            prop_assert!((s - 1.0).abs() < 1e-13);
            let ds: f64 = (0..=k).map(|a| b.deriv(a, t)).sum();
            prop_assert!(ds.abs() < 1e-11);
        }
    }
}
