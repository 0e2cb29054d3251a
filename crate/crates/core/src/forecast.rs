//! Gaussian position forecasts for a player from their past trajectory and the
//! ball path.
//!
//! Positions are resampled onto a regular time grid and modelled through
//! their per-step displacements with an ARMAX recursion whose exogenous input
//! is the ball displacement. Both axes share one isotropic model. A forecast
//! one step ahead is a pure random walk around the last known position with
//! spread `one_step_std`; further horizons run the ARMAX mean recursion and
//! grow the spread with the model's theoretical forecast variance.

use std::fs;
use std::path::Path;

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{Point, Trajectory, TIME_EPS};

/// Version tag written into persisted model files.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Floor applied to fitted spreads so that every forecast has positive width.
pub const MIN_STD: f64 = 0.01;

/// Minimum number of displacement samples required for a fit.
pub const MIN_TRAINING_STEPS: usize = 500;

/// Grid steps of history used to warm up the moving-average residuals.
const RESIDUAL_WINDOW: usize = 30;

/// Positions sampled on a contiguous regular grid, `values[i]` at time
/// `(start_k + i) * step`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSeries {
    pub start_k: i64,
    pub step: f64,
    pub values: Vec<Point>,
}

impl GridSeries {
    pub fn time(&self, i: usize) -> f64 {
        (self.start_k + i as i64) as f64 * self.step
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at grid index `k`, if covered.
    pub fn get(&self, k: i64) -> Option<Point> {
        let i = k - self.start_k;
        (i >= 0).then(|| self.values.get(i as usize).copied()).flatten()
    }

    /// Linear interpolation between grid values, held constant past either end.
    pub fn at(&self, t: f64) -> Point {
        let Some(&first) = self.values.first() else { return Point::ZERO };
        let r = t / self.step - self.start_k as f64;
        if r <= 0.0 {
            return first;
        }
        let last = self.values.len() - 1;
        if r >= last as f64 {
            return self.values[last];
        }
        let i = r.floor() as usize;
        self.values[i].lerp(self.values[i + 1], r - i as f64)
    }

    /// Builds a grid series from time-ordered `(position, time)` samples by
    /// linear interpolation. Grid points outside the samples' span are not
    /// produced.
    pub fn from_samples(samples: &[(Point, f64)], step: f64) -> GridSeries {
        let Some(&(_, t0)) = samples.first() else {
            return GridSeries { start_k: 0, step, values: Vec::new() };
        };
        let t1 = samples[samples.len() - 1].1;
        let k0 = (t0 / step - TIME_EPS).ceil() as i64;
        let k1 = (t1 / step + TIME_EPS).floor() as i64;
        let mut values = Vec::with_capacity((k1 - k0 + 1).max(0) as usize);
        let mut seg = 0;
        for k in k0..=k1 {
            let t = k as f64 * step;
            while seg + 1 < samples.len() && samples[seg + 1].1 < t - TIME_EPS {
                seg += 1;
            }
            let (pa, ta) = samples[seg];
            let v = if (t - ta).abs() <= TIME_EPS || seg + 1 == samples.len() {
                pa
            } else {
                let (pb, tb) = samples[seg + 1];
                if (t - tb).abs() <= TIME_EPS {
                    pb
                } else {
                    pa + (pb - pa) * ((t - ta) / (tb - ta))
                }
            };
            values.push(v);
        }
        GridSeries { start_k: k0, step, values }
    }
}

/// Resamples a trajectory onto the grid by linear interpolation between its
/// points. Grid times coinciding with recorded times reproduce the recorded
/// position exactly.
pub fn resample_to_grid(traj: &Trajectory, grid_step: f64) -> GridSeries {
    let samples: Vec<(Point, f64)> = traj.points().iter().map(|p| (p.pos, p.time)).collect();
    GridSeries::from_samples(&samples, grid_step)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelOrders {
    pub ar: usize,
    pub ma: usize,
    pub exog: usize,
}

impl Default for ModelOrders {
    fn default() -> Self {
        ModelOrders { ar: 2, ma: 1, exog: 2 }
    }
}

/// Fitted ARMAX displacement model.
///
/// `exog[l]` multiplies the ball displacement `l` steps back, starting with the
/// displacement over the step being predicted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastModel {
    pub format_version: u32,
    pub grid_step: f64,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub exog: Vec<f64>,
    pub intercept: f64,
    pub resid_std: f64,
    pub one_step_std: f64,
    pub training_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Forecast {
    pub mean: Point,
    pub std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

/// Training material from one half: outfield trajectories and the ball path.
#[derive(Debug, Clone)]
pub struct TrainingHalf {
    pub trajectories: Vec<Trajectory>,
    pub ball: GridSeries,
}

/// Displacement series of one trajectory on one axis with the aligned ball
/// displacements.
struct AxisSeries {
    d: Vec<f64>,
    e: Vec<f64>,
}

fn axis_series(halves: &[TrainingHalf], step: f64, exec: Execution) -> Vec<AxisSeries> {
    let jobs: Vec<(usize, usize)> = halves
        .iter()
        .enumerate()
        .flat_map(|(h, half)| (0..half.trajectories.len()).map(move |i| (h, i)))
        .collect();
    let per_traj: Vec<Vec<AxisSeries>> = exec.map(&jobs, |&(h, i)| {
        let half = &halves[h];
        let grid = resample_to_grid(&half.trajectories[i], step);
        if grid.len() < 2 {
            return Vec::new();
        }
        (0..2)
            .map(|axis| {
                let mut d = Vec::with_capacity(grid.len() - 1);
                let mut e = Vec::with_capacity(grid.len() - 1);
                for j in 1..grid.len() {
                    d.push(grid.values[j].axis(axis) - grid.values[j - 1].axis(axis));
                    let b1 = half.ball.at(grid.time(j)).axis(axis);
                    let b0 = half.ball.at(grid.time(j - 1)).axis(axis);
                    e.push(b1 - b0);
                }
                AxisSeries { d, e }
            })
            .collect()
    });
    per_traj.into_iter().flatten().collect()
}

/// Accumulates normal equations row by row and solves them with a truncated
/// SVD, which yields the minimum-norm solution when regressors are degenerate.
struct LeastSquares {
    xtx: DMatrix<f64>,
    xty: DVector<f64>,
    yty: f64,
    n: usize,
}

impl LeastSquares {
    fn new(k: usize) -> Self {
        LeastSquares { xtx: DMatrix::zeros(k, k), xty: DVector::zeros(k), yty: 0.0, n: 0 }
    }

    fn add(&mut self, row: &[f64], y: f64) {
        let k = row.len();
        for i in 0..k {
            if row[i] == 0.0 {
                continue;
            }
            for j in 0..k {
                self.xtx[(i, j)] += row[i] * row[j];
            }
            self.xty[i] += row[i] * y;
        }
        self.yty += y * y;
        self.n += 1;
    }

    fn solve(&self) -> Result<Vec<f64>> {
        let svd = self.xtx.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let eps = (smax * 1e-12).max(1e-300);
        let beta = svd
            .solve(&self.xty, eps)
            .map_err(|e| Error::Fit(format!("least squares solve failed: {e}")))?;
        if beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Fit("non-finite regression coefficients".into()));
        }
        Ok(beta.iter().copied().collect())
    }
}

/// Regressor row for predicting `d[k]`: intercept, AR lags, MA lags, exog lags.
/// Returns `None` when a required lag is unavailable.
fn regressors(s: &AxisSeries, resid: &[Option<f64>], k: usize, o: ModelOrders) -> Option<Vec<f64>> {
    let mut row = Vec::with_capacity(1 + o.ar + o.ma + o.exog);
    row.push(1.0);
    for i in 1..=o.ar {
        row.push(s.d[k.checked_sub(i)?]);
    }
    for j in 1..=o.ma {
        row.push(resid[k.checked_sub(j)?]?);
    }
    for l in 0..o.exog {
        row.push(s.e[k.checked_sub(l)?]);
    }
    Some(row)
}

fn regress(series: &[AxisSeries], resid: &[Vec<Option<f64>>], o: ModelOrders) -> Result<(Vec<f64>, usize)> {
    let mut ls = LeastSquares::new(1 + o.ar + o.ma + o.exog);
    for (s, r) in series.iter().zip(resid) {
        for k in 0..s.d.len() {
            if let Some(row) = regressors(s, r, k, o) {
                ls.add(&row, s.d[k]);
            }
        }
    }
    if ls.n == 0 {
        return Err(Error::Fit("no complete regression rows".into()));
    }
    Ok((ls.solve()?, ls.n))
}

/// Whether `1 - a_1 z - ... - a_p z^p` has all roots outside the unit circle.
pub fn ar_is_stationary(ar: &[f64]) -> bool {
    let p = ar.len();
    if p == 0 {
        return true;
    }
    let mut companion = DMatrix::<f64>::zeros(p, p);
    for (j, &a) in ar.iter().enumerate() {
        companion[(0, j)] = a;
    }
    for i in 1..p {
        companion[(i, i - 1)] = 1.0;
    }
    companion
        .complex_eigenvalues()
        .iter()
        .all(|ev| ev.norm() < 1.0 - 1e-9)
}

fn sample_std(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.collect();
    if v.len() < 2 {
        return 0.0;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let ss: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum();
    (ss / (v.len() - 1) as f64).sqrt()
}

impl ForecastModel {
    /// A model with every coefficient zero: forecasts stay at the anchor.
    pub fn random_walk(grid_step: f64, one_step_std: f64, resid_std: f64) -> Self {
        ForecastModel {
            format_version: MODEL_FORMAT_VERSION,
            grid_step,
            ar: Vec::new(),
            ma: Vec::new(),
            exog: Vec::new(),
            intercept: 0.0,
            resid_std,
            one_step_std,
            training_steps: 0,
        }
    }

    pub fn orders(&self) -> ModelOrders {
        ModelOrders { ar: self.ar.len(), ma: self.ma.len(), exog: self.exog.len() }
    }

    /// Fits the model on pooled per-axis displacement series.
    ///
    /// Estimation is two-stage least squares (a long autoregression supplies
    /// residual estimates for the moving-average regressors) followed by one
    /// refinement pass with recursively computed residuals. A non-stationary
    /// autoregressive part is refitted with a lower AR order.
    pub fn fit(halves: &[TrainingHalf], orders: ModelOrders, grid_step: f64, exec: Execution) -> Result<Self> {
        if !(grid_step > 0.0) {
            return Err(Error::Config(format!("grid_step must be > 0, got {grid_step}")));
        }
        let series = axis_series(halves, grid_step, exec);
        let total: usize = series.iter().map(|s| s.d.len()).sum::<usize>() / 2;
        if total < MIN_TRAINING_STEPS {
            return Err(Error::Fit(format!(
                "training data has {total} grid steps, need at least {MIN_TRAINING_STEPS}"
            )));
        }
        let one_step_std = sample_std(series.iter().flat_map(|s| s.d.iter().copied())).max(MIN_STD);

        let mut o = orders;
        loop {
            let model = Self::fit_orders(&series, o, grid_step, one_step_std, total)?;
            if ar_is_stationary(&model.ar) {
                debug!("fitted ARMAX({}, {}, {}) on {total} steps", o.ar, o.ma, o.exog);
                return Ok(model);
            }
            if o.ar == 0 {
                return Err(Error::Fit(format!("non-stationary fit with AR coefficients {:?}", model.ar)));
            }
            warn!("AR coefficients {:?} are not stationary; retrying with AR order {}", model.ar, o.ar - 1);
            o.ar -= 1;
        }
    }

    fn fit_orders(
        series: &[AxisSeries],
        o: ModelOrders,
        grid_step: f64,
        one_step_std: f64,
        total: usize,
    ) -> Result<Self> {
        let mut resid: Vec<Vec<Option<f64>>> = series.iter().map(|s| vec![None; s.d.len()]).collect();
        if o.ma > 0 {
            // Stage one: long autoregression with exogenous terms.
            let long = ModelOrders { ar: (2 * (o.ar + o.ma)).max(8), ma: 0, exog: o.exog };
            let (beta, _) = regress(series, &resid, long)?;
            for (s, r) in series.iter().zip(resid.iter_mut()) {
                for k in 0..s.d.len() {
                    if let Some(row) = regressors(s, &[], k, long) {
                        let pred: f64 = row.iter().zip(&beta).map(|(x, b)| x * b).sum();
                        r[k] = Some(s.d[k] - pred);
                    }
                }
            }
        }
        let (beta, _) = regress(series, &resid, o)?;
        let mut model = Self::from_beta(&beta, o, grid_step, one_step_std, total);

        if o.ma > 0 {
            // Refinement with residuals from the fitted recursion itself.
            for (s, r) in series.iter().zip(resid.iter_mut()) {
                *r = model.recursive_residuals(s);
            }
            let (beta, _) = regress(series, &resid, o)?;
            model = Self::from_beta(&beta, o, grid_step, one_step_std, total);
        }

        let mut ss = 0.0;
        let mut n = 0usize;
        for s in series {
            for e in model.recursive_residuals(s).into_iter().flatten() {
                ss += e * e;
                n += 1;
            }
        }
        let dof = n.saturating_sub(beta.len()).max(1);
        model.resid_std = (ss / dof as f64).sqrt().max(MIN_STD);
        Ok(model)
    }

    fn from_beta(beta: &[f64], o: ModelOrders, grid_step: f64, one_step_std: f64, total: usize) -> Self {
        ForecastModel {
            format_version: MODEL_FORMAT_VERSION,
            grid_step,
            intercept: beta[0],
            ar: beta[1..1 + o.ar].to_vec(),
            ma: beta[1 + o.ar..1 + o.ar + o.ma].to_vec(),
            exog: beta[1 + o.ar + o.ma..].to_vec(),
            resid_std: MIN_STD,
            one_step_std,
            training_steps: total,
        }
    }

    /// One-step prediction errors along a series, starting once the AR and
    /// exogenous lags are available.
    fn recursive_residuals(&self, s: &AxisSeries) -> Vec<Option<f64>> {
        let start = self.ar.len().max(self.exog.len().saturating_sub(1));
        let mut out: Vec<Option<f64>> = vec![None; s.d.len()];
        for k in start..s.d.len() {
            let mut pred = self.intercept;
            for (i, a) in self.ar.iter().enumerate() {
                pred += a * s.d[k - 1 - i];
            }
            for (j, m) in self.ma.iter().enumerate() {
                if let Some(Some(e)) = k.checked_sub(j + 1).map(|idx| out[idx]) {
                    pred += m * e;
                }
            }
            for (l, g) in self.exog.iter().enumerate() {
                pred += g * s.e[k - l];
            }
            out[k] = Some(s.d[k] - pred);
        }
        out
    }

    /// Forecast spread `n` grid steps ahead: `one_step_std` for a single step,
    /// otherwise `resid_std` scaled by the cumulative psi weights of the
    /// integrated displacement process.
    pub fn horizon_std(&self, n: usize) -> f64 {
        if n <= 1 {
            return self.one_step_std;
        }
        let mut psi = vec![0.0; n];
        psi[0] = 1.0;
        let mut cum = 0.0;
        let mut var = 0.0;
        for j in 0..n {
            if j > 0 {
                let mut v = self.ma.get(j - 1).copied().unwrap_or(0.0);
                for (i, a) in self.ar.iter().enumerate() {
                    if j > i {
                        v += a * psi[j - 1 - i];
                    }
                }
                psi[j] = v;
            }
            cum += psi[j];
            var += cum * cum;
        }
        self.resid_std * var.sqrt()
    }

    /// Mean positions for horizons `0..=n` (index 0 is the anchor), produced
    /// by the ARMAX recursion on the anchor-aligned grid.
    pub fn horizon_means(&self, traj: &Trajectory, ball: &GridSeries, dir: Direction, n: usize) -> Result<Vec<Point>> {
        let (anchor, far) = match dir {
            Direction::Forward => (traj.last(), traj.first()),
            Direction::Backward => (traj.first(), traj.last()),
        };
        let (Some(anchor), Some(far)) = (anchor, far) else {
            return Err(Error::Invariant("forecast from an empty trajectory".into()));
        };
        let step = self.grid_step;
        let sign = dir.sign();
        let tau = |j: i64| anchor.time + sign * j as f64 * step;
        let span_steps = ((anchor.time - far.time).abs() / step + TIME_EPS).floor() as usize;
        let hist = span_steps.min(RESIDUAL_WINDOW + self.ar.len());
        let pos_at = |j: i64| traj.linear_at(tau(j)).expect("non-empty");
        let ball_disp = |j: i64| ball.at(tau(j)) - ball.at(tau(j - 1));

        let mut out = Vec::with_capacity(n + 1);
        out.push(anchor.pos);
        let mut means = [Vec::with_capacity(n + 1), Vec::with_capacity(n + 1)];
        for (axis, mean) in means.iter_mut().enumerate() {
            // Displacements indexed from the oldest usable history step up to
            // the forecast horizon; history occupies [0, hist).
            let mut d: Vec<f64> = (0..hist)
                .map(|i| {
                    let j = i as i64 - hist as i64 + 1;
                    pos_at(j).axis(axis) - pos_at(j - 1).axis(axis)
                })
                .collect();
            let e: Vec<f64> = (0..hist + n)
                .map(|i| ball_disp(i as i64 - hist as i64 + 1).axis(axis))
                .collect();
            let exog_at = |idx: usize, l: usize| -> f64 {
                match idx.checked_sub(l) {
                    Some(i) => e[i],
                    None => ball_disp(idx as i64 - l as i64 - hist as i64 + 1).axis(axis),
                }
            };
            let mut eps = vec![0.0; hist + n];
            for k in self.ar.len()..hist {
                let mut pred = self.intercept;
                for (i, a) in self.ar.iter().enumerate() {
                    pred += a * d[k - 1 - i];
                }
                for (j, m) in self.ma.iter().enumerate() {
                    if let Some(idx) = k.checked_sub(j + 1) {
                        pred += m * eps[idx];
                    }
                }
                for (l, g) in self.exog.iter().enumerate() {
                    pred += g * exog_at(k, l);
                }
                eps[k] = d[k] - pred;
            }
            let mut x = anchor.pos.axis(axis);
            mean.push(x);
            for k in hist..hist + n {
                let mut pred = self.intercept;
                for (i, a) in self.ar.iter().enumerate() {
                    if let Some(idx) = k.checked_sub(i + 1) {
                        pred += a * d[idx];
                    }
                }
                for (j, m) in self.ma.iter().enumerate() {
                    if let Some(idx) = k.checked_sub(j + 1) {
                        pred += m * eps[idx];
                    }
                }
                for (l, g) in self.exog.iter().enumerate() {
                    pred += g * exog_at(k, l);
                }
                d.push(pred);
                x += pred;
                mean.push(x);
            }
        }
        for h in 1..=n {
            out.push(Point::new(means[0][h], means[1][h]));
        }
        Ok(out)
    }

    /// Unclamped forecast at `t` in direction `dir` from the trajectory's
    /// anchor (last point forwards, first point backwards).
    pub fn project(&self, traj: &Trajectory, ball: &GridSeries, t: f64, dir: Direction) -> Result<Forecast> {
        let anchor = match dir {
            Direction::Forward => traj.last(),
            Direction::Backward => traj.first(),
        }
        .ok_or_else(|| Error::Invariant("forecast from an empty trajectory".into()))?;
        let h = dir.sign() * (t - anchor.time) / self.grid_step;
        if h < -TIME_EPS {
            return Err(Error::Invariant(format!(
                "forecast time {t} lies on the wrong side of anchor {}",
                anchor.time
            )));
        }
        if h <= 1.0 + TIME_EPS {
            return Ok(Forecast { mean: anchor.pos, std: self.one_step_std });
        }
        let lo = (h + TIME_EPS).floor() as usize;
        let frac = h - lo as f64;
        let hi = if frac <= TIME_EPS { lo } else { lo + 1 };
        let means = self.horizon_means(traj, ball, dir, hi)?;
        let at = |n: usize| -> (Point, f64) {
            if n <= 1 {
                (anchor.pos, self.one_step_std)
            } else {
                (means[n], self.horizon_std(n))
            }
        };
        let (m_lo, s_lo) = at(lo);
        if hi == lo {
            return Ok(Forecast { mean: m_lo, std: s_lo });
        }
        let (m_hi, s_hi) = at(hi);
        Ok(Forecast { mean: m_lo.lerp(m_hi, frac), std: s_lo + (s_hi - s_lo) * frac })
    }

    /// Forecast at `t` at or after the trajectory's last point, mean clamped to
    /// the pitch.
    pub fn forecast(&self, traj: &Trajectory, ball: &GridSeries, t: f64) -> Result<Forecast> {
        let f = self.project(traj, ball, t, Direction::Forward)?;
        Ok(Forecast { mean: f.mean.clamp_to_pitch(), std: f.std })
    }

    /// Forecast at `t` at or before the trajectory's first point, running the
    /// same recursion in reversed time.
    pub fn backward_forecast(&self, traj: &Trajectory, ball: &GridSeries, t: f64) -> Result<Forecast> {
        let f = self.project(traj, ball, t, Direction::Backward)?;
        Ok(Forecast { mean: f.mean.clamp_to_pitch(), std: f.std })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: ForecastModel = serde_json::from_str(&text).map_err(|e| Error::json(path, e))?;
        if model.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Malformed(format!(
                "{}: model format version {} (expected {MODEL_FORMAT_VERSION})",
                path.display(),
                model.format_version
            )));
        }
        if !(model.resid_std > 0.0 && model.one_step_std > 0.0 && model.grid_step > 0.0) {
            return Err(Error::Malformed(format!("{}: model spreads must be positive", path.display())));
        }
        Ok(model)
    }
}
