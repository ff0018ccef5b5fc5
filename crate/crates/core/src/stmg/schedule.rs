//! Multigrid level schedule: polynomial coarsening first, then spatial
//! coarsening, with an option to defer the temporal degree to the coarsest
//! mesh.

/// Spatial level `s`, temporal degree `k` and pressure degree `r`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LevelSpec {
    pub s: usize,
    pub k: usize,
    pub r: usize,
}

impl LevelSpec {
    pub fn new(s: usize, k: usize, r: usize) -> Self {
        LevelSpec { s, k, r }
    }
}

impl From<(usize, usize, usize)> for LevelSpec {
    fn from((s, k, r): (usize, usize, usize)) -> Self {
        LevelSpec { s, k, r }
    }
}

/// How a level is obtained from the next finer one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransferKind {
    Polynomial,
    Geometric,
}

/// Levels ordered from finest to coarsest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelSchedule {
    pub levels: Vec<LevelSpec>,
    /// `transfers[l]` connects `levels[l]` and `levels[l + 1]`.
    pub transfers: Vec<TransferKind>,
}

impl LevelSchedule {
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn finest(&self) -> LevelSpec {
        self.levels[0]
    }

    pub fn coarsest(&self) -> LevelSpec {
        *self.levels.last().expect("schedule is never empty")
    }

    /// Keeps the `n` finest levels (at least one).
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.clamp(1, self.levels.len());
        LevelSchedule { levels: self.levels[..n].to_vec(), transfers: self.transfers[..n - 1].to_vec() }
    }
}

fn halve(d: usize) -> usize {
    (d / 2).max(1)
}

/// Number of halvings that bring `d` down to 1.
fn height(d: usize) -> usize {
    let mut h = 0;
    let mut d = d;
    while d > 1 {
        d = halve(d);
        h += 1;
    }
    h
}

/// Order in which the temporal degree is coarsened.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CoarseningOrder {
    /// `k` and `r` are halved together before any mesh coarsening.
    Joint,
    /// `r` is halved first with `k` kept, then the mesh is coarsened, and
    /// `k` is halved last on mesh level 0. Temporally oscillating pressure
    /// modes then see the full spatial hierarchy, which keeps the cycle
    /// robust in `h` for `k > 1`.
    #[default]
    TemporalLast,
}

/// Schedule from `finest` down to `(0, 1, 1)` in the given order.
pub fn build_schedule_ordered(finest: LevelSpec, order: CoarseningOrder) -> LevelSchedule {
    match order {
        CoarseningOrder::Joint => build_schedule(finest),
        CoarseningOrder::TemporalLast => {
            let mut levels = vec![finest];
            let mut transfers = Vec::new();
            let LevelSpec { s, mut k, mut r } = finest;
            let mut push = |spec: LevelSpec, kind: TransferKind| {
                levels.push(spec);
                transfers.push(kind);
            };
            while r > 1 {
                r = halve(r);
                push(LevelSpec { s, k, r }, TransferKind::Polynomial);
            }
            for s in (0..s).rev() {
                push(LevelSpec { s, k, r }, TransferKind::Geometric);
            }
            while k > 1 {
                k = halve(k);
                push(LevelSpec { s: 0, k, r }, TransferKind::Polynomial);
            }
            LevelSchedule { levels, transfers }
        }
    }
}

/// Schedule from `finest` down to `(0, 1, 1)`.
///
/// While the spatial degree has more halvings left than the temporal one,
/// only `r` is halved; then both are halved together (each floored at 1),
/// and finally the mesh is coarsened one level at a time. A temporal degree
/// of 0 is kept as is.
pub fn build_schedule(finest: LevelSpec) -> LevelSchedule {
    let mut levels = vec![finest];
    let mut transfers = Vec::new();
    let LevelSpec { s, mut k, mut r } = finest;
    while k > 1 || r > 1 {
        if height(r) > height(k) {
            r = halve(r);
        } else {
            k = if k > 1 { halve(k) } else { k };
            r = halve(r);
        }
        levels.push(LevelSpec { s, k, r });
        transfers.push(TransferKind::Polynomial);
    }
    for s in (0..s).rev() {
        levels.push(LevelSpec { s, k, r });
        transfers.push(TransferKind::Geometric);
    }
    LevelSchedule { levels, transfers }
}
