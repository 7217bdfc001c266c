use serde::{Deserialize, Serialize};

use super::enumerate::{for_each_point, try_par_fold_points, DEFAULT_POINT_BUDGET};
use crate::arith::{window_from_b, PrimeWindow};
use crate::error::{Error, Result};
use crate::fibration::{count_in_window, height_of, FibrationModel};

/// Which primes `omega` is counted over.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "kebab-case")]
pub enum WindowStrategy {
    /// `((log B)^M, B^(1/(log log B)^M)]`, empty at every feasible size.
    Shrinking { m: f64 },
    /// A fixed `(t0, t1]` for all B.
    Fixed { t0: u64, t1: u64 },
    /// All good primes above the bad-prime bound.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    /// `omega < epsilon Delta log log B`.
    Global,
    /// `omega < epsilon log log H(x)`.
    Pointwise,
}

impl ThresholdMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ThresholdMode::Global => "global",
            ThresholdMode::Pointwise => "pointwise",
        }
    }
}

fn default_modes() -> Vec<ThresholdMode> {
    vec![ThresholdMode::Global, ThresholdMode::Pointwise]
}

fn default_floor() -> f64 {
    1e-6
}

fn default_budget() -> u64 {
    DEFAULT_POINT_BUDGET
}

fn default_window() -> WindowStrategy {
    WindowStrategy::Full
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: FibrationModel,
    pub b_grid: Vec<u64>,
    pub epsilons: Vec<f64>,
    #[serde(default = "default_window")]
    pub window: WindowStrategy,
    #[serde(default = "default_modes")]
    pub modes: Vec<ThresholdMode>,
    /// Lower clamp for `log log H(x)` at heights up to `e^e`.
    #[serde(default = "default_floor")]
    pub loglog_floor: f64,
    #[serde(default = "default_budget")]
    pub budget: u64,
}

impl ExperimentConfig {
    pub fn new(model: FibrationModel, b_grid: Vec<u64>, epsilons: Vec<f64>, window: WindowStrategy) -> Result<Self> {
        let cfg = Self {
            model,
            b_grid,
            epsilons,
            window,
            modes: default_modes(),
            loglog_floor: default_floor(),
            budget: default_budget(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.b_grid.is_empty() || self.b_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("the B grid must be nonempty and increasing"));
        }
        if (self.b_grid[0] as f64) <= std::f64::consts::E.exp() {
            return Err(Error::invalid("every B must exceed e^e"));
        }
        if self.modes.is_empty() {
            return Err(Error::invalid("at least one threshold mode is required"));
        }
        let delta = self.model.delta_invariant();
        for &e in &self.epsilons {
            if !(e > 0.0) || !e.is_finite() {
                return Err(Error::invalid(format!("epsilon = {e} must be positive")));
            }
            if self.modes.contains(&ThresholdMode::Pointwise) && e >= delta {
                return Err(Error::invalid(format!(
                    "pointwise mode needs 0 < epsilon < Delta = {delta}, got {e}"
                )));
            }
        }
        if !(self.loglog_floor > 0.0) {
            return Err(Error::invalid("the log log floor must be positive"));
        }
        for &b in &self.b_grid {
            self.window_for(b)?;
        }
        Ok(())
    }

    /// The prime window used at height bound `b`.
    pub fn window_for(&self, b: u64) -> Result<PrimeWindow> {
        let a = self.model.bad_bound();
        match self.window {
            WindowStrategy::Full => Ok(self.model.full_window()),
            WindowStrategy::Fixed { t0, t1 } => {
                if t0 < a {
                    return Err(Error::invalid(format!("fixed window start {t0} is below the bad-prime bound {a}")));
                }
                Ok(PrimeWindow::new(t0, t1))
            }
            WindowStrategy::Shrinking { m } => {
                let w = window_from_b(b as f64, m)?;
                if w.empty {
                    Ok(PrimeWindow::empty())
                } else {
                    Ok(PrimeWindow::new(w.window.lo.max(a), w.window.hi))
                }
            }
        }
    }
}

pub(crate) fn loglog(x: f64) -> f64 {
    x.ln().ln()
}

/// `log log H`, raised to `floor` for heights up to `e^e`. Returns the value
/// and whether the point lies in the clamped range.
fn clamped_loglog(h: u64, floor: f64) -> (f64, bool) {
    if (h as f64) <= std::f64::consts::E.exp() {
        let v = if h <= 1 { floor } else { loglog(h as f64).max(floor) };
        (v, true)
    } else {
        (loglog(h as f64), false)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TailRow {
    pub b: u64,
    pub epsilon: f64,
    pub mode: ThresholdMode,
    pub total: u64,
    pub tail: u64,
    pub fraction: f64,
    /// `log(fraction) / (Delta log log B)`; absent when the tail is empty.
    pub normalized_log_fraction: Option<f64>,
    /// Global-mode threshold; pointwise thresholds vary with the point.
    pub threshold: Option<f64>,
    pub window_lo: u64,
    pub window_hi: Option<u64>,
    pub window_empty: bool,
    /// Points with `H(x) <= B^(1/2)`, for audit only.
    pub low_height: u64,
    /// Points whose `log log H` was clamped (pointwise mode).
    pub clamped: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TailReport {
    pub delta: f64,
    pub rows: Vec<TailRow>,
}

impl TailReport {
    pub fn row(&self, b: u64, epsilon: f64, mode: ThresholdMode) -> Option<&TailRow> {
        self.rows
            .iter()
            .find(|r| r.b == b && r.epsilon == epsilon && r.mode == mode)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "B,epsilon,mode,total,tail,fraction,normalized_log_fraction,threshold,window_lo,window_hi,window_empty,low_height,clamped\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{:.12e},{},{},{},{},{},{},{}\n",
                r.b,
                r.epsilon,
                r.mode.as_str(),
                r.total,
                r.tail,
                r.fraction,
                r.normalized_log_fraction.map_or("-inf".into(), |v| format!("{v:.12e}")),
                r.threshold.map_or("per-point".into(), |v| format!("{v:.12e}")),
                r.window_lo,
                r.window_hi.map_or("inf".into(), |v| v.to_string()),
                r.window_empty,
                r.low_height,
                r.clamped
            ));
        }
        out
    }
}

#[derive(Clone, Default)]
struct Tally {
    total: Vec<u64>,
    low: Vec<u64>,
    clamped: Vec<u64>,
    // [b][eps][mode]
    tail: Vec<Vec<Vec<u64>>>,
}

impl Tally {
    fn new(nb: usize, ne: usize, nm: usize) -> Self {
        Self {
            total: vec![0; nb],
            low: vec![0; nb],
            clamped: vec![0; nb],
            tail: vec![vec![vec![0; nm]; ne]; nb],
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        for (a, b) in self.total.iter_mut().zip(other.total) {
            *a += b;
        }
        for (a, b) in self.low.iter_mut().zip(other.low) {
            *a += b;
        }
        for (a, b) in self.clamped.iter_mut().zip(other.clamped) {
            *a += b;
        }
        for (ta, tb) in self.tail.iter_mut().zip(other.tail) {
            for (ea, eb) in ta.iter_mut().zip(tb) {
                for (a, b) in ea.iter_mut().zip(eb) {
                    *a += b;
                }
            }
        }
        self
    }
}

/// Counts the tail events `omega(x) < threshold` over the non-degenerate
/// points of height at most `B`, for every `B`, `epsilon` and mode.
pub fn tail_count(cfg: &ExperimentConfig) -> Result<TailReport> {
    cfg.validate()?;
    let model = &cfg.model;
    let delta = model.delta_invariant();
    let windows = cfg
        .b_grid
        .iter()
        .map(|&b| cfg.window_for(b))
        .collect::<Result<Vec<_>>>()?;
    let global: Vec<f64> = cfg.b_grid.iter().map(|&b| delta * loglog(b as f64)).collect();
    let sqrt_b: Vec<f64> = cfg.b_grid.iter().map(|&b| (b as f64).sqrt()).collect();
    let (nb, ne, nm) = (cfg.b_grid.len(), cfg.epsilons.len(), cfg.modes.len());
    let b_max = *cfg.b_grid.last().unwrap();
    let tally = try_par_fold_points(
        model.n(),
        b_max,
        cfg.budget,
        || Tally::new(nb, ne, nm),
        |t, x| {
            if model.is_degenerate(x)? {
                return Ok(());
            }
            let h = height_of(x);
            let theta = model.theta_primes(x)?;
            let (llh, clamped) = clamped_loglog(h, cfg.loglog_floor);
            for (bi, &b) in cfg.b_grid.iter().enumerate() {
                if h > b {
                    continue;
                }
                t.total[bi] += 1;
                t.low[bi] += ((h as f64) <= sqrt_b[bi]) as u64;
                t.clamped[bi] += clamped as u64;
                let omega = if windows[bi].is_empty() {
                    0
                } else {
                    count_in_window(&theta, &windows[bi])
                } as f64;
                for (ei, &eps) in cfg.epsilons.iter().enumerate() {
                    for (mi, mode) in cfg.modes.iter().enumerate() {
                        let threshold = match mode {
                            ThresholdMode::Global => eps * global[bi],
                            ThresholdMode::Pointwise => eps * llh,
                        };
                        t.tail[bi][ei][mi] += (omega < threshold) as u64;
                    }
                }
            }
            Ok(())
        },
        Tally::merge,
    )?;
    let mut rows = Vec::new();
    for (bi, &b) in cfg.b_grid.iter().enumerate() {
        for (ei, &eps) in cfg.epsilons.iter().enumerate() {
            for (mi, &mode) in cfg.modes.iter().enumerate() {
                let total = tally.total[bi];
                let tail = tally.tail[bi][ei][mi];
                let fraction = if total == 0 { 0.0 } else { tail as f64 / total as f64 };
                rows.push(TailRow {
                    b,
                    epsilon: eps,
                    mode,
                    total,
                    tail,
                    fraction,
                    normalized_log_fraction: (tail > 0).then(|| fraction.ln() / global[bi]),
                    threshold: (mode == ThresholdMode::Global).then(|| eps * global[bi]),
                    window_lo: windows[bi].lo,
                    window_hi: windows[bi].is_bounded().then_some(windows[bi].hi),
                    window_empty: windows[bi].is_empty(),
                    low_height: tally.low[bi],
                    clamped: if mode == ThresholdMode::Pointwise { tally.clamped[bi] } else { 0 },
                });
            }
        }
    }
    Ok(TailReport { delta, rows })
}

#[derive(Clone, Debug, Serialize)]
pub struct GapRow {
    pub b: u64,
    pub delta_threshold: f64,
    pub count: u64,
    pub max_gap: u32,
}

/// `#{x : omega_full(x) - omega_window(x) >= delta log log B}` for each B,
/// together with the largest gap seen.
pub fn truncation_gap(cfg: &ExperimentConfig, delta: f64) -> Result<Vec<GapRow>> {
    cfg.validate()?;
    let model = &cfg.model;
    let full = model.full_window();
    let windows = cfg
        .b_grid
        .iter()
        .map(|&b| cfg.window_for(b))
        .collect::<Result<Vec<_>>>()?;
    let nb = cfg.b_grid.len();
    let thresholds: Vec<f64> = cfg.b_grid.iter().map(|&b| delta * loglog(b as f64)).collect();
    let (counts, maxes) = try_par_fold_points(
        model.n(),
        *cfg.b_grid.last().unwrap(),
        cfg.budget,
        || (vec![0u64; nb], vec![0u32; nb]),
        |(c, m), x| {
            if model.is_degenerate(x)? {
                return Ok(());
            }
            let h = height_of(x);
            let theta = model.theta_primes(x)?;
            let full_omega = count_in_window(&theta, &full);
            for (bi, &b) in cfg.b_grid.iter().enumerate() {
                if h > b {
                    continue;
                }
                let w = if windows[bi].is_empty() { 0 } else { count_in_window(&theta, &windows[bi]) };
                let gap = full_omega.saturating_sub(w);
                m[bi] = m[bi].max(gap);
                c[bi] += (gap as f64 >= thresholds[bi]) as u64;
            }
            Ok(())
        },
        |(mut c1, mut m1), (c2, m2)| {
            for i in 0..nb {
                c1[i] += c2[i];
                m1[i] = m1[i].max(m2[i]);
            }
            (c1, m1)
        },
    )?;
    Ok(cfg
        .b_grid
        .iter()
        .enumerate()
        .map(|(i, &b)| GapRow {
            b,
            delta_threshold: thresholds[i],
            count: counts[i],
            max_gap: maxes[i],
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct SetAlgebraAudit {
    pub b: u64,
    pub epsilon: f64,
    pub delta: f64,
    pub points: usize,
    /// `|A_eps|, |A_eps^flat|, |A_{eps-delta}^flat|, |E_delta|`
    pub sizes: [usize; 4],
    /// Elements of `A_eps` missing from `A_eps^flat`.
    pub first_violations: usize,
    /// Elements of `A_{eps-delta}^flat` outside `A_eps` and `E_delta`.
    pub second_violations: usize,
}

impl SetAlgebraAudit {
    pub fn holds(&self) -> bool {
        self.first_violations == 0 && self.second_violations == 0
    }
}

/// Materialises the sets `A_eps = {omega < eps Delta L}`, its truncated
/// analogue with `omega^flat`, and `E_delta = {|omega - omega^flat| >= delta
/// Delta L}` (`L = log log B`) over all non-degenerate points of height at
/// most `b`, and checks both inclusions element by element.
pub fn set_algebra_audit(
    model: &FibrationModel,
    b: u64,
    window: PrimeWindow,
    epsilon: f64,
    delta: f64,
    budget: u64,
) -> Result<SetAlgebraAudit> {
    model.check_window(&window)?;
    if !(delta > 0.0 && delta < epsilon) {
        return Err(Error::invalid("the audit needs 0 < delta < epsilon"));
    }
    let full = model.full_window();
    let mut points = Vec::new();
    let mut err = None;
    for_each_point(model.n(), b, budget, |x| {
        if err.is_some() {
            return;
        }
        let step = || -> Result<Option<(u32, u32)>> {
            if model.is_degenerate(x)? {
                return Ok(None);
            }
            let theta = model.theta_primes(x)?;
            Ok(Some((count_in_window(&theta, &full), count_in_window(&theta, &window))))
        };
        match step() {
            Ok(Some(v)) => points.push(v),
            Ok(None) => {}
            Err(e) => err = Some(e),
        }
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    let scale = model.delta_invariant() * loglog(b as f64);
    let in_a = |eps: f64, w: u32| (w as f64) < eps * scale;
    let a: Vec<bool> = points.iter().map(|&(f, _)| in_a(epsilon, f)).collect();
    let a_flat: Vec<bool> = points.iter().map(|&(_, w)| in_a(epsilon, w)).collect();
    let a_flat_shift: Vec<bool> = points.iter().map(|&(_, w)| in_a(epsilon - delta, w)).collect();
    let e: Vec<bool> = points
        .iter()
        .map(|&(f, w)| (f as f64 - w as f64).abs() >= delta * scale)
        .collect();
    let count = |v: &[bool]| v.iter().filter(|&&x| x).count();
    let first_violations = (0..points.len()).filter(|&i| a[i] && !a_flat[i]).count();
    let second_violations = (0..points.len())
        .filter(|&i| a_flat_shift[i] && !(a[i] || e[i]))
        .count();
    Ok(SetAlgebraAudit {
        b,
        epsilon,
        delta,
        points: points.len(),
        sizes: [count(&a), count(&a_flat), count(&a_flat_shift), count(&e)],
        first_violations,
        second_violations,
    })
}
