//! Timed program of target poses, preload parameter and payload events.

use crate::error::{Error, Result};
use crate::preload::Eta;
use crate::types::PoseVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlMode {
    /// Position control only.
    Std,
    /// Position control plus adaptive preload force control.
    Apc,
}

impl ControlMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ControlMode::Std => "STD",
            ControlMode::Apc => "APC",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "STD" => Ok(ControlMode::Std),
            "APC" => Ok(ControlMode::Apc),
            other => Err(Error::Schedule(format!(
                "unknown mode {other:?} (expected STD or APC)"
            ))),
        }
    }
}

/// How the arrival time of a waypoint is given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Timing {
    /// Absolute arrival time [s].
    At(f64),
    /// Path velocity from the previous waypoint [m/s], with an optional
    /// angular velocity [rad/s] bounding the rotation rate.
    Velocity { linear: f64, angular: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint {
    pub pose: PoseVector,
    pub timing: Timing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaChange {
    pub t: f64,
    pub value: Eta,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PayloadAction {
    /// Adds a point mass at the platform origin [kg].
    Attach { mass: f64 },
    /// Removes all payload.
    Detach,
    /// Holds the platform at its current position for `duration` seconds,
    /// as if the load were caught on something.
    Jam { duration: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayloadEvent {
    pub t: f64,
    pub action: PayloadAction,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Segment {
    t0: f64,
    t1: f64,
    from: PoseVector,
    to: PoseVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySchedule {
    start: PoseVector,
    segments: Vec<Segment>,
    eta: Vec<EtaChange>,
    events: Vec<PayloadEvent>,
    mode: ControlMode,
    duration: f64,
}

/// `10 s^3 - 15 s^4 + 6 s^5`: zero velocity and acceleration at both ends.
pub fn smoothstep(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 + s * (-15.0 + 6.0 * s))
}

fn check_time(what: &str, t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Schedule(format!(
            "{what} time {t} must be finite and >= 0"
        )));
    }
    Ok(())
}

impl TrajectorySchedule {
    /// Builds a schedule. The first waypoint must be timed at `t = 0`; it is
    /// the start pose of the run.
    pub fn new(
        waypoints: &[Waypoint],
        eta: Vec<EtaChange>,
        events: Vec<PayloadEvent>,
        mode: ControlMode,
        duration: f64,
    ) -> Result<Self> {
        check_time("duration", duration)?;
        let (first, rest) = waypoints.split_first().ok_or_else(|| {
            Error::Schedule("at least one waypoint (the start pose) is required".into())
        })?;
        if first.timing != Timing::At(0.0) {
            return Err(Error::Schedule("the first waypoint must have t = 0".into()));
        }
        if !first.pose.is_finite() {
            return Err(Error::Schedule("start pose is not finite".into()));
        }
        let mut segments = Vec::with_capacity(rest.len());
        let (mut t_prev, mut prev) = (0.0, first.pose);
        for (k, wp) in rest.iter().enumerate() {
            let idx = k + 1;
            if !wp.pose.is_finite() {
                return Err(Error::Schedule(format!(
                    "waypoint {idx}: pose is not finite"
                )));
            }
            let t1 = match wp.timing {
                Timing::At(t) => {
                    check_time("waypoint", t)?;
                    if t <= t_prev {
                        return Err(Error::Schedule(format!(
                            "waypoint {idx}: time {t} s is not after the previous waypoint ({t_prev} s)"
                        )));
                    }
                    t
                }
                Timing::Velocity { linear, angular } => {
                    if !(linear > 0.0 && linear.is_finite()) {
                        return Err(Error::Schedule(format!(
                            "waypoint {idx}: velocity must be positive"
                        )));
                    }
                    let d = wp.pose.diff(&prev);
                    let dist = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
                    let turn = d[3].abs().max(d[4].abs()).max(d[5].abs());
                    let mut dt = dist / linear;
                    match angular {
                        Some(w) if !(w > 0.0 && w.is_finite()) => {
                            return Err(Error::Schedule(format!(
                                "waypoint {idx}: angular velocity must be positive"
                            )))
                        }
                        Some(w) => dt = dt.max(turn / w),
                        None if turn > 0.0 && dist == 0.0 => {
                            return Err(Error::Schedule(format!(
                                "waypoint {idx}: pure rotation needs an angular velocity or a time"
                            )))
                        }
                        None => {}
                    }
                    if dt <= 0.0 {
                        return Err(Error::Schedule(format!(
                            "waypoint {idx}: repeats the previous pose; use a time to dwell"
                        )));
                    }
                    t_prev + dt
                }
            };
            segments.push(Segment {
                t0: t_prev,
                t1,
                from: prev,
                to: wp.pose,
            });
            t_prev = t1;
            prev = wp.pose;
        }

        for pair in eta.windows(2) {
            if pair[1].t <= pair[0].t {
                return Err(Error::Schedule(
                    "preload parameter times must be strictly increasing".into(),
                ));
            }
        }
        for e in &eta {
            check_time("preload parameter", e.t)?;
        }
        if mode == ControlMode::Apc && eta.is_empty() {
            return Err(Error::Schedule(
                "APC mode needs at least one preload parameter entry".into(),
            ));
        }

        for pair in events.windows(2) {
            if pair[1].t <= pair[0].t {
                return Err(Error::Schedule(
                    "payload event times must be strictly increasing".into(),
                ));
            }
        }
        for e in &events {
            check_time("payload event", e.t)?;
            match e.action {
                PayloadAction::Attach { mass } if !(mass > 0.0 && mass.is_finite()) => {
                    return Err(Error::Schedule(format!(
                        "attached mass must be positive, got {mass}"
                    )))
                }
                PayloadAction::Jam { duration } if !(duration > 0.0 && duration.is_finite()) => {
                    return Err(Error::Schedule(format!(
                        "jam duration must be positive, got {duration}"
                    )))
                }
                _ => {}
            }
        }

        Ok(TrajectorySchedule {
            start: first.pose,
            segments,
            eta,
            events,
            mode,
            duration,
        })
    }

    /// A schedule holding `pose` for `duration` seconds.
    pub fn hold(
        pose: PoseVector,
        eta: Vec<EtaChange>,
        events: Vec<PayloadEvent>,
        mode: ControlMode,
        duration: f64,
    ) -> Result<Self> {
        let start = Waypoint {
            pose,
            timing: Timing::At(0.0),
        };
        Self::new(&[start], eta, events, mode, duration)
    }

    pub fn start(&self) -> PoseVector {
        self.start
    }

    pub fn mode(&self) -> ControlMode {
        self.mode
    }

    pub fn with_mode(&self, mode: ControlMode) -> Result<Self> {
        if mode == ControlMode::Apc && self.eta.is_empty() {
            return Err(Error::Schedule(
                "APC mode needs at least one preload parameter entry".into(),
            ));
        }
        let mut out = self.clone();
        out.mode = mode;
        Ok(out)
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn events(&self) -> &[PayloadEvent] {
        &self.events
    }

    pub fn eta_changes(&self) -> &[EtaChange] {
        &self.eta
    }

    /// Arrival time of the last waypoint.
    pub fn motion_end(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.t1)
    }

    /// Target pose at time `t`; poses are held before the first and after
    /// the last waypoint.
    pub fn target(&self, t: f64) -> PoseVector {
        let mut pose = self.start;
        for seg in &self.segments {
            if t < seg.t0 {
                break;
            }
            if t >= seg.t1 {
                pose = seg.to;
                continue;
            }
            return seg
                .from
                .lerp(&seg.to, smoothstep((t - seg.t0) / (seg.t1 - seg.t0)));
        }
        pose
    }

    /// Whether the target moves anywhere in the open interval `(a, b)`.
    pub fn moving_between(&self, a: f64, b: f64) -> bool {
        self.segments
            .iter()
            .any(|s| s.t0 < b && s.t1 > a && s.from != s.to)
    }

    /// Preload parameter at `t`: the last change at or before `t`, or the
    /// first entry if `t` precedes all changes. `None` without entries.
    pub fn eta(&self, t: f64) -> Option<Eta> {
        let first = self.eta.first()?;
        Some(
            self.eta
                .iter()
                .take_while(|e| e.t <= t)
                .last()
                .unwrap_or(first)
                .value,
        )
    }

    /// Events with `a <= t < b`.
    pub fn events_in(&self, a: f64, b: f64) -> impl Iterator<Item = &PayloadEvent> {
        self.events.iter().filter(move |e| e.t >= a && e.t < b)
    }

    /// Times at which a target, preload or payload change takes effect.
    pub fn change_times(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.eta.iter().skip(1).map(|e| e.t).collect();
        for e in &self.events {
            out.push(e.t);
            if let PayloadAction::Jam { duration } = e.action {
                out.push(e.t + duration);
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wp(pose: PoseVector, timing: Timing) -> Waypoint {
        Waypoint { pose, timing }
    }

    fn eta(t: f64, v: f64) -> EtaChange {
        EtaChange {
            t,
            value: Eta::new(v).unwrap(),
        }
    }

    #[test]
    fn smoothstep_endpoints_and_midpoint() {
        assert_eq!(smoothstep(0.0), 0.0);
        assert_eq!(smoothstep(1.0), 1.0);
        assert!((smoothstep(0.5) - 0.5).abs() < 1e-15);
        assert_eq!(smoothstep(-1.0), 0.0);
        assert_eq!(smoothstep(2.0), 1.0);
    }

    #[test]
    fn velocity_timing_and_interpolation() {
        let a = PoseVector::new(0.0, 0.0, 0.5, 0.0, 0.0, 0.0);
        let b = PoseVector::new(0.2, 0.0, 0.5, 0.0, 0.0, 0.0);
        let s = TrajectorySchedule::new(
            &[
                wp(a, Timing::At(0.0)),
                wp(
                    b,
                    Timing::Velocity {
                        linear: 0.1,
                        angular: None,
                    },
                ),
            ],
            vec![eta(0.0, 0.5)],
            vec![],
            ControlMode::Apc,
            3.0,
        )
        .unwrap();
        assert!((s.motion_end() - 2.0).abs() < 1e-15);
        assert_eq!(s.target(-1.0), a);
        assert_eq!(s.target(0.0), a);
        assert!((s.target(1.0)[0] - 0.1).abs() < 1e-15);
        assert_eq!(s.target(2.5), b);
        assert!(s.moving_between(0.5, 0.6));
        assert!(!s.moving_between(2.0, 3.0));
    }

    #[test]
    fn angular_velocity_bounds_segment_time() {
        let a = PoseVector::new(0.0, 0.0, 0.5, 0.0, 0.0, 0.0);
        let b = PoseVector::new(0.01, 0.0, 0.5, 0.0, 0.0, 0.5);
        let s = TrajectorySchedule::new(
            &[
                wp(a, Timing::At(0.0)),
                wp(
                    b,
                    Timing::Velocity {
                        linear: 0.1,
                        angular: Some(0.25),
                    },
                ),
            ],
            vec![],
            vec![],
            ControlMode::Std,
            5.0,
        )
        .unwrap();
        assert!((s.motion_end() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn eta_is_piecewise_constant() {
        let s = TrajectorySchedule::hold(
            PoseVector::ZERO,
            vec![eta(1.0, 0.2), eta(3.0, 0.8)],
            vec![],
            ControlMode::Apc,
            5.0,
        )
        .unwrap();
        assert_eq!(s.eta(0.0).unwrap().value(), 0.2);
        assert_eq!(s.eta(2.999).unwrap().value(), 0.2);
        assert_eq!(s.eta(3.0).unwrap().value(), 0.8);
        assert_eq!(s.change_times(), vec![3.0]);
    }

    #[test]
    fn rejects_malformed_schedules() {
        let a = PoseVector::ZERO;
        // no start at t = 0
        assert!(TrajectorySchedule::new(
            &[wp(a, Timing::At(1.0))],
            vec![],
            vec![],
            ControlMode::Std,
            1.0
        )
        .is_err());
        // non-increasing waypoint times
        assert!(TrajectorySchedule::new(
            &[
                wp(a, Timing::At(0.0)),
                wp(a, Timing::At(2.0)),
                wp(a, Timing::At(2.0))
            ],
            vec![],
            vec![],
            ControlMode::Std,
            1.0
        )
        .is_err());
        // non-increasing eta times
        assert!(TrajectorySchedule::hold(
            a,
            vec![eta(1.0, 0.2), eta(1.0, 0.3)],
            vec![],
            ControlMode::Apc,
            1.0
        )
        .is_err());
        // APC without eta
        assert!(TrajectorySchedule::hold(a, vec![], vec![], ControlMode::Apc, 1.0).is_err());
        // negative duration
        assert!(TrajectorySchedule::hold(a, vec![], vec![], ControlMode::Std, -1.0).is_err());
        // bad payload
        let ev = PayloadEvent {
            t: 1.0,
            action: PayloadAction::Attach { mass: 0.0 },
        };
        assert!(TrajectorySchedule::hold(a, vec![], vec![ev], ControlMode::Std, 1.0).is_err());
        // velocity waypoint that does not move
        assert!(TrajectorySchedule::new(
            &[
                wp(a, Timing::At(0.0)),
                wp(
                    a,
                    Timing::Velocity {
                        linear: 0.1,
                        angular: None
                    }
                )
            ],
            vec![],
            vec![],
            ControlMode::Std,
            1.0
        )
        .is_err());
    }

    #[test]
    fn mode_round_trip() {
        for m in [ControlMode::Std, ControlMode::Apc] {
            assert_eq!(ControlMode::parse(m.as_str()).unwrap(), m);
        }
        assert!(ControlMode::parse("apc").is_err());
    }
}
