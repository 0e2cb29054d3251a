//! Continuous paths through discrete trajectories.
//!
//! Between two recorded points a player follows the straight line plus a
//! correction driven by the crowd velocity: the average displacement of every
//! outfielder seen at consecutive grid times. Outside the recorded span the
//! forecaster mean takes over.

use crate::error::{Error, Result};
use crate::forecast::{Direction, ForecastModel, GridSeries};
use crate::geometry::{on_grid, Point, Trajectory, TIME_EPS};

pub const DEFAULT_ALPHA: f64 = 0.5;

/// Mean outfield displacement per grid step and the weight applied to it.
///
/// `u(t)` is the piecewise-linear interpolant of `v[i]` at
/// `(start_k + i) * step`, constant beyond both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityField {
    pub start_k: i64,
    pub step: f64,
    pub v: Vec<Point>,
    pub alpha: f64,
    /// `prefix[i]` is the integral of `u` from the first node to node `i`.
    prefix: Vec<Point>,
}

impl VelocityField {
    pub fn new(start_k: i64, step: f64, v: Vec<Point>, alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Config(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        if !(step > 0.0) {
            return Err(Error::Config(format!("velocity grid step must be > 0, got {step}")));
        }
        let mut prefix = Vec::with_capacity(v.len());
        let mut acc = Point::ZERO;
        for i in 0..v.len() {
            if i > 0 {
                // Trapezoid of u = v / step over one step.
                acc += (v[i - 1] + v[i]) * 0.5;
            }
            prefix.push(acc);
        }
        Ok(VelocityField { start_k, step, v, alpha, prefix })
    }

    fn node_time(&self, i: usize) -> f64 {
        (self.start_k + i as i64) as f64 * self.step
    }

    /// Displacement per step at grid index `k`, zero outside the field.
    pub fn at_grid(&self, k: i64) -> Point {
        let i = k - self.start_k;
        if i < 0 {
            return Point::ZERO;
        }
        self.v.get(i as usize).copied().unwrap_or(Point::ZERO)
    }

    /// `u(t)` in metres per second.
    pub fn u(&self, t: f64) -> Point {
        let Some(&first) = self.v.first() else { return Point::ZERO };
        let r = t / self.step - self.start_k as f64;
        let last = self.v.len() - 1;
        let per_step = if r <= 0.0 {
            first
        } else if r >= last as f64 {
            self.v[last]
        } else {
            let i = r.floor() as usize;
            self.v[i].lerp(self.v[i + 1], r - i as f64)
        };
        per_step / self.step
    }

    /// Integral of `u` from the first node to `t` (negative before it).
    fn integral(&self, t: f64) -> Point {
        let Some(&first) = self.v.first() else { return Point::ZERO };
        let h = self.step;
        let t0 = self.node_time(0);
        let last = self.v.len() - 1;
        if t <= t0 {
            return first * ((t - t0) / h);
        }
        let tl = self.node_time(last);
        if t >= tl {
            return self.prefix[last] + self.v[last] * ((t - tl) / h);
        }
        let i = (((t - t0) / h).floor() as usize).min(last - 1);
        let r = (t - self.node_time(i)) / h;
        self.prefix[i] + self.v[i] * r + (self.v[i + 1] - self.v[i]) * (0.5 * r * r)
    }

    /// `alpha` times the exact integral of `u` over `[s, t]`.
    pub fn weighted_velocity(&self, s: f64, t: f64) -> Point {
        if s == t || self.v.is_empty() {
            return Point::ZERO;
        }
        (self.integral(t) - self.integral(s)) * self.alpha
    }
}

/// Averages, for each grid index `k`, the displacement from `k` to `k + 1` of
/// every trajectory observed at both grid times.
pub fn compute_velocity_field<'a>(
    trajectories: impl IntoIterator<Item = &'a Trajectory>,
    grid_step: f64,
    alpha: f64,
) -> Result<VelocityField> {
    let mut lo = i64::MAX;
    let mut hi = i64::MIN;
    let mut pairs: Vec<(i64, Point)> = Vec::new();
    for traj in trajectories {
        let pts = traj.points();
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if !(a.observed && b.observed && on_grid(a.time, grid_step) && on_grid(b.time, grid_step)) {
                continue;
            }
            let ka = (a.time / grid_step).round() as i64;
            let kb = (b.time / grid_step).round() as i64;
            if kb == ka + 1 {
                pairs.push((ka, b.pos - a.pos));
            }
        }
        for p in pts.iter().filter(|p| p.observed) {
            let k = (p.time / grid_step).round() as i64;
            lo = lo.min(k);
            hi = hi.max(k);
        }
    }
    if pairs.is_empty() {
        return VelocityField::new(0, grid_step, Vec::new(), alpha);
    }
    let n = (hi - lo + 1) as usize;
    let mut sum = vec![Point::ZERO; n];
    let mut count = vec![0usize; n];
    for (k, d) in pairs {
        sum[(k - lo) as usize] += d;
        count[(k - lo) as usize] += 1;
    }
    let v = sum
        .into_iter()
        .zip(count)
        .map(|(s, c)| if c == 0 { Point::ZERO } else { s / c as f64 })
        .collect();
    VelocityField::new(lo, grid_step, v, alpha)
}

/// A trajectory evaluated in continuous time.
#[derive(Debug, Clone, Copy)]
pub struct ContinuousPath<'a> {
    pub traj: &'a Trajectory,
    pub field: &'a VelocityField,
    pub model: &'a ForecastModel,
    pub ball: &'a GridSeries,
}

impl ContinuousPath<'_> {
    /// Position before clamping to the pitch.
    pub fn position_unclamped(&self, t: f64) -> Result<Point> {
        let traj = self.traj;
        let (Some(first), Some(last)) = (traj.first(), traj.last()) else {
            return Err(Error::Invariant("position of an empty trajectory".into()));
        };
        if let Some(p) = traj.point_at(t) {
            return Ok(p.pos);
        }
        if t < first.time {
            return Ok(self.model.project(traj, self.ball, t, Direction::Backward)?.mean);
        }
        if t > last.time {
            return Ok(self.model.project(traj, self.ball, t, Direction::Forward)?.mean);
        }
        let i = traj.bracket(t).expect("inside span");
        let (a, b) = (traj.points()[i], traj.points()[i + 1]);
        Ok(interpolate_gap(self.field, a.pos, a.time, b.pos, b.time, t))
    }

    pub fn position_at(&self, t: f64) -> Result<Point> {
        Ok(self.position_unclamped(t)?.clamp_to_pitch())
    }
}

/// `x1 + w(t1, t) + r (x2 - x1 - w(t1, t2))` with `r = (t - t1) / (t2 - t1)`.
pub fn interpolate_gap(field: &VelocityField, x1: Point, t1: f64, x2: Point, t2: f64, t: f64) -> Point {
    if (t - t1).abs() <= TIME_EPS {
        return x1;
    }
    if (t - t2).abs() <= TIME_EPS {
        return x2;
    }
    let r = (t - t1) / (t2 - t1);
    x1 + field.weighted_velocity(t1, t) + (x2 - x1 - field.weighted_velocity(t1, t2)) * r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{PlayerTag, Team};
    use proptest::prelude::*;

    fn field(v: &[(f64, f64)], alpha: f64) -> VelocityField {
        VelocityField::new(0, 1.0, v.iter().map(|&(x, y)| Point::new(x, y)).collect(), alpha).unwrap()
    }

    fn traj(points: &[((f64, f64), f64)]) -> Trajectory {
        Trajectory::from_points(
            PlayerTag::outfield(Team::Home),
            points.iter().map(|&((x, y), t)| (Point::new(x, y), t)),
        )
        .unwrap()
    }

    #[test]
    fn velocity_field_means() {
        let a = traj(&[((0.0, 0.0), 3.0), ((1.0, 0.0), 4.0)]);
        let b = traj(&[((10.0, 10.0), 3.0), ((13.0, 12.0), 4.0), ((14.0, 12.0), 6.0)]);
        let f = compute_velocity_field([&a, &b], 1.0, 0.5).unwrap();
        assert_eq!(f.at_grid(3), Point::new(2.0, 1.0));
        // Only b spans 4..6, with a gap: no pair at 4 or 5.
        assert_eq!(f.at_grid(4), Point::ZERO);
        assert_eq!(f.at_grid(5), Point::ZERO);
        let single = compute_velocity_field([&a], 1.0, 0.5).unwrap();
        assert_eq!(single.at_grid(3), Point::new(1.0, 0.0));
        let none = compute_velocity_field(std::iter::empty(), 1.0, 0.5).unwrap();
        assert_eq!(none.weighted_velocity(0.0, 10.0), Point::ZERO);
    }

    #[test]
    fn seeds_do_not_count_as_sightings() {
        let mut t = Trajectory::new(PlayerTag::outfield(Team::Away));
        t.push(Point::new(25.0, 40.0), 0.0, false).unwrap();
        t.push(Point::new(30.0, 40.0), 1.0, true).unwrap();
        let f = compute_velocity_field([&t], 1.0, 0.5).unwrap();
        assert_eq!(f.at_grid(0), Point::ZERO);
    }

    #[test]
    fn weighted_velocity_examples() {
        let f = field(&[(2.0, 0.0); 5], 0.5);
        assert_eq!(f.weighted_velocity(0.0, 4.0), Point::new(4.0, 0.0));
        assert_eq!(f.weighted_velocity(2.5, 2.5), Point::ZERO);
        let f = field(&[(0.0, 0.0), (2.0, 0.0), (4.0, 0.0)], 0.5);
        assert!((f.weighted_velocity(0.0, 2.0) - Point::new(2.0, 0.0)).norm() < 1e-12);
        // Constant extension past either end.
        assert!((f.weighted_velocity(2.0, 3.0) - Point::new(2.0, 0.0)).norm() < 1e-12);
        assert_eq!(f.weighted_velocity(-2.0, 0.0), Point::ZERO);
    }

    #[test]
    fn coarser_grid_integrates_velocity() {
        // Displacement 4 m per 2 s step is 2 m/s.
        let f = VelocityField::new(0, 2.0, vec![Point::new(4.0, 0.0); 3], 1.0).unwrap();
        assert!((f.weighted_velocity(0.0, 3.0) - Point::new(6.0, 0.0)).norm() < 1e-12);
        assert_eq!(f.u(1.0), Point::new(2.0, 0.0));
    }

    #[test]
    fn gap_examples() {
        let zero = field(&[], 0.5);
        let p = interpolate_gap(&zero, Point::ZERO, 0.0, Point::new(10.0, 0.0), 10.0, 5.0);
        assert_eq!(p, Point::new(5.0, 0.0));
        // Direct check of the formula with an exactly known field.
        let f = VelocityField::new(0, 1.0, vec![Point::new(0.8, 0.0); 11], 0.5).unwrap();
        let w5 = f.weighted_velocity(0.0, 5.0);
        let w10 = f.weighted_velocity(0.0, 10.0);
        assert!((w5 - Point::new(2.0, 0.0)).norm() < 1e-12);
        assert!((w10 - Point::new(4.0, 0.0)).norm() < 1e-12);
        let p = interpolate_gap(&f, Point::ZERO, 0.0, Point::new(10.0, 0.0), 10.0, 5.0);
        assert!((p - Point::new(5.0, 0.0)).norm() < 1e-12);
        assert_eq!(interpolate_gap(&f, Point::ZERO, 0.0, Point::new(10.0, 0.0), 10.0, 0.0), Point::ZERO);
    }

    #[test]
    fn gap_formula_with_given_w() {
        // x1 + w(t1,t) + r (x2 - x1 - w(t1,t2)) with w(0,5) = (3,0), w(0,10) = (4,0).
        let (x1, x2) = (Point::ZERO, Point::new(10.0, 0.0));
        let (w5, w10) = (Point::new(3.0, 0.0), Point::new(4.0, 0.0));
        assert_eq!(x1 + w5 + (x2 - x1 - w10) * 0.5, Point::new(6.0, 0.0));
        // A field realising those integrals: u = 0.6 on [0,5] then 0.2, alpha 1,
        // with the kink smoothed over one step.
        let mut v = vec![Point::new(0.6, 0.0); 5];
        v.extend(vec![Point::new(0.2, 0.0); 6]);
        let f = VelocityField::new(0, 1.0, v, 1.0).unwrap();
        let w5 = f.weighted_velocity(0.0, 5.0);
        let w10 = f.weighted_velocity(0.0, 10.0);
        let p = interpolate_gap(&f, x1, 0.0, x2, 10.0, 5.0);
        assert!((p - (x1 + w5 + (x2 - x1 - w10) * 0.5)).norm() < 1e-12);
    }

    #[test]
    fn rejects_bad_alpha() {
        assert!(VelocityField::new(0, 1.0, vec![], 1.5).is_err());
    }

    fn arb_field() -> impl Strategy<Value = VelocityField> {
        (
            -5i64..5,
            prop::collection::vec((-3.0..3.0f64, -3.0..3.0f64), 0..40),
            0.0..=1.0f64,
        )
            .prop_map(|(k, v, a)| {
                VelocityField::new(k, 1.0, v.into_iter().map(|(x, y)| Point::new(x, y)).collect(), a).unwrap()
            })
    }

    fn arb_traj() -> impl Strategy<Value = Trajectory> {
        prop::collection::vec((0.0..120.0f64, 0.0..80.0f64, 1usize..6), 2..15).prop_map(|pts| {
            let mut t = 0.0;
            Trajectory::from_points(
                PlayerTag::outfield(Team::Home),
                pts.into_iter().map(|(x, y, gap)| {
                    t += gap as f64;
                    (Point::new(x, y), t)
                }),
            )
            .unwrap()
        })
    }

    fn path_at(tr: &Trajectory, f: &VelocityField, t: f64) -> Point {
        let model = ForecastModel::random_walk(1.0, 1.0, 1.0);
        let ball = GridSeries { start_k: 0, step: 1.0, values: vec![Point::ZERO] };
        ContinuousPath { traj: tr, field: f, model: &model, ball: &ball }.position_unclamped(t).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn passes_through_points(tr in arb_traj(), f in arb_field()) {
            for p in tr.points() {
                prop_assert!((path_at(&tr, &f, p.time) - p.pos).norm() < 1e-9);
            }
        }

        #[test]
        fn correction_decomposition(tr in arb_traj(), f in arb_field(), frac in 0.0..1.0f64) {
            let pts = tr.points();
            let i = ((pts.len() - 1) as f64 * frac).floor() as usize;
            let (a, b) = (pts[i], pts[i + 1]);
            let t = a.time + (b.time - a.time) * frac;
            let r = (t - a.time) / (b.time - a.time);
            let linear = a.pos.lerp(b.pos, r);
            let correction = f.weighted_velocity(a.time, t) - f.weighted_velocity(a.time, b.time) * r;
            prop_assert!((path_at(&tr, &f, t) - linear - correction).norm() < 1e-9);
        }

        #[test]
        fn zero_alpha_is_linear(tr in arb_traj(), f in arb_field(), frac in 0.0..1.0f64) {
            let f = VelocityField::new(f.start_k, f.step, f.v.clone(), 0.0).unwrap();
            let (t0, t1) = (tr.first().unwrap().time, tr.last().unwrap().time);
            let t = t0 + (t1 - t0) * frac;
            prop_assert_eq!(path_at(&tr, &f, t), tr.linear_at(t).unwrap());
        }

        #[test]
        fn correction_vanishes_at_ends(f in arb_field(), t1 in -10.0..30.0f64, len in 0.5..10.0f64) {
            let t2 = t1 + len;
            let c = |t: f64| f.weighted_velocity(t1, t) - f.weighted_velocity(t1, t2) * ((t - t1) / len);
            prop_assert_eq!(c(t1), Point::ZERO);
            prop_assert!(c(t2).norm() < 1e-12);
        }

        #[test]
        fn translation_equivariant(tr in arb_traj(), f in arb_field(), frac in 0.0..1.0f64,
                                   dx in -20.0..20.0f64, dy in -20.0..20.0f64) {
            let d = Point::new(dx, dy);
            let moved = Trajectory::from_points(tr.tag, tr.points().iter().map(|p| (p.pos + d, p.time))).unwrap();
            let fv = VelocityField::new(f.start_k, f.step, f.v.iter().map(|&v| v + d).collect(), f.alpha).unwrap();
            let (t0, t1) = (tr.first().unwrap().time, tr.last().unwrap().time);
            let t = t0 + (t1 - t0) * frac;
            prop_assert!((path_at(&moved, &fv, t) - (path_at(&tr, &f, t) + d)).norm() < 1e-9);
        }

        #[test]
        fn integral_is_additive(f in arb_field(), a in -10.0..40.0f64, b in -10.0..40.0f64, c in -10.0..40.0f64) {
            let lhs = f.weighted_velocity(a, c);
            let rhs = f.weighted_velocity(a, b) + f.weighted_velocity(b, c);
            prop_assert!((lhs - rhs).norm() < 1e-9);
        }
    }
}
