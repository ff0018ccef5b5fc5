//! Triggers for refreshing the frozen smoother state inside a Newton solve.

/// Thresholds of the rebuild policy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RebuildConfig {
    /// Newton deterioration factor on successive residual ratios.
    pub theta_n: f64,
    /// Growth factor of the Krylov iteration count.
    pub theta_l: f64,
    /// Absolute Krylov iteration count that always triggers.
    pub kappa_abs: f64,
    /// Number of consecutive inner iterations inspected for stagnation.
    pub window: usize,
    /// Per-iteration reduction ratio above which the inner solve stagnates.
    pub stagnation: f64,
}

impl Default for RebuildConfig {
    fn default() -> Self {
        RebuildConfig { theta_n: 2.0, theta_l: 1.5, kappa_abs: 40.0, window: 5, stagnation: 0.9 }
    }
}

/// `true` when the latest Newton ratio grew by `theta_n` or the latest
/// Krylov count reached `max(theta_l * kappa_ref, kappa_abs)`.
pub fn should_rebuild(rho: &[f64], kappa: &[f64], kappa_ref: f64, cfg: &RebuildConfig) -> bool {
    let newton = match rho {
        [.., prev, last] => *last >= cfg.theta_n * *prev,
        _ => false,
    };
    let linear = match kappa {
        [.., last] if kappa.len() >= 2 => *last >= (cfg.theta_l * kappa_ref).max(cfg.kappa_abs),
        _ => false,
    };
    newton || linear
}

/// `true` when each of the last `window` inner residual reductions is at
/// least `stagnation`.
pub fn stagnates(history: &[f64], cfg: &RebuildConfig) -> bool {
    if cfg.window == 0 || history.len() < cfg.window + 1 {
        return false;
    }
    history[history.len() - cfg.window - 1..]
        .windows(2)
        .all(|w| w[0] > 0.0 && w[1] / w[0] >= cfg.stagnation)
}

/// Running record of the quantities the policy inspects.
#[derive(Clone, Debug)]
pub struct RebuildMonitor {
    pub cfg: RebuildConfig,
    pub rho: Vec<f64>,
    pub kappa: Vec<f64>,
    pub kappa_ref: f64,
}

impl RebuildMonitor {
    pub fn new(cfg: RebuildConfig) -> Self {
        RebuildMonitor { cfg, rho: Vec::new(), kappa: Vec::new(), kappa_ref: 1.0 }
    }

    /// Records the residual ratio and Krylov count of a finished Newton step.
    pub fn record(&mut self, rho: f64, kappa: usize) {
        if let Some(&last) = self.kappa.last() {
            self.kappa_ref = last;
        }
        self.rho.push(rho);
        self.kappa.push((kappa as f64).max(1.0));
    }

    pub fn should_rebuild(&self) -> bool {
        should_rebuild(&self.rho, &self.kappa, self.kappa_ref, &self.cfg)
    }

    /// Resets the Krylov reference after a rebuild.
    pub fn rebuilt(&mut self) {
        self.kappa_ref = self.kappa.last().copied().unwrap_or(1.0).max(1.0);
    }
}
