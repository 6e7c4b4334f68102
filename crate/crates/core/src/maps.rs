//! Event-driven lane-delay dynamics for the two-lane intersection.
//!
//! Each map takes the state right after vehicle `i` joined, the gap to
//! vehicle `i + 1` and its lane, and returns the state right after vehicle
//! `i + 1` joined. Rows are written for a lane-1 arrival ("ego" lane 1,
//! "other" lane 2); lane-2 arrivals swap the roles.

use crate::error::{Error, Result};
use crate::model::{ArrivalEvent, DelayState, IntersectionParams, Lane, Policy};

/// Slack on the cross-gap boundary of the flexible-order rows.
///
/// Reachable states have the dominant lane exactly one cross gap ahead;
/// rounding can land a hair inside it.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// The table row that produced a transition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MapRegion {
    policy: Policy,
    index: u8,
}

impl MapRegion {
    pub fn new(policy: Policy, index: u8) -> Option<Self> {
        let max = match policy {
            Policy::Fifo => 4,
            Policy::Fo => 8,
        };
        (1..=max).contains(&index).then_some(Self { policy, index })
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    /// One-based row number.
    pub fn index(&self) -> u8 {
        self.index
    }
}

/// Splits a state into (ego, other) delays for an arrival in `lane`.
fn to_ego(state: &DelayState, lane: Lane) -> (f64, f64) {
    (state.get(lane), state.get(lane.other()))
}

fn from_ego(ego: f64, other: f64, lane: Lane, floor: f64) -> DelayState {
    match lane {
        Lane::One => DelayState::clamped(ego, other, floor),
        Lane::Two => DelayState::clamped(other, ego, floor),
    }
}

/// Which first-in-first-out rows hold for this state and event.
pub fn fifo_region_conditions(
    state: &DelayState,
    event: &ArrivalEvent,
    params: &IntersectionParams,
) -> [bool; 4] {
    let (e, o) = to_ego(state, event.lane());
    let x = event.gap();
    let (dd, ds) = (params.delta_d(), params.delta_s());
    [
        e < x - ds && o < x - dd,
        e >= x - ds && o < x - dd,
        o >= x - dd && o <= e,
        o >= x - dd && o > e,
    ]
}

/// Which flexible-order rows hold for this state and event.
pub fn fo_region_conditions(
    state: &DelayState,
    event: &ArrivalEvent,
    params: &IntersectionParams,
) -> [bool; 8] {
    let (e, o) = to_ego(state, event.lane());
    let x = event.gap();
    let (dd, ds) = (params.delta_d(), params.delta_s());
    let lead = o - e;
    [
        e < x - ds && o < x - dd,
        e >= x - ds && o < x - dd,
        o >= x - dd && o <= e,
        o >= x - dd && o < x && o > e,
        o >= x && o < x + dd && e < x - ds,
        o >= x && lead >= dd - BOUNDARY_TOL && lead <= dd + ds && e >= x - ds,
        o >= x + dd && e < x - ds,
        o >= x && lead > dd + ds && e >= x - ds,
    ]
}

/// First-in-first-out transition.
pub fn fifo_step(
    state: &DelayState,
    event: &ArrivalEvent,
    params: &IntersectionParams,
) -> Result<(DelayState, MapRegion)> {
    let (e, o) = to_ego(state, event.lane());
    let x = event.gap();
    let (dd, ds) = (params.delta_d(), params.delta_s());
    let conditions = fifo_region_conditions(state, event, params);
    let row = first_match(&conditions, state, x)?;
    let (ego, other) = match row {
        1 => (0.0, o - x),
        2 => (e + ds - x, o - x),
        _ => ((e + ds).max(o + dd) - x, o - x),
    };
    Ok((
        from_ego(ego, other, event.lane(), params.floor()),
        MapRegion {
            policy: Policy::Fifo,
            index: row,
        },
    ))
}

/// Flexible-order transition.
pub fn fo_step(
    state: &DelayState,
    event: &ArrivalEvent,
    params: &IntersectionParams,
) -> Result<(DelayState, MapRegion)> {
    let (e, o) = to_ego(state, event.lane());
    let x = event.gap();
    let (dd, ds) = (params.delta_d(), params.delta_s());
    let conditions = fo_region_conditions(state, event, params);
    let row = first_match(&conditions, state, x)?;
    let (ego, other) = match row {
        1 => (0.0, o - x),
        2 | 3 => (e + ds - x, o - x),
        4 => (o + dd - x, o - x),
        5 => (0.0, dd),
        6 => (e - x + ds, e - x + ds + dd),
        7 => (0.0, o - x),
        _ => (e - x + ds, o - x),
    };
    Ok((
        from_ego(ego, other, event.lane(), params.floor()),
        MapRegion {
            policy: Policy::Fo,
            index: row,
        },
    ))
}

fn first_match(conditions: &[bool], state: &DelayState, gap: f64) -> Result<u8> {
    conditions
        .iter()
        .position(|&c| c)
        .map(|i| i as u8 + 1)
        .ok_or(Error::NoRegionMatched {
            t1: state.t1(),
            t2: state.t2(),
            gap,
        })
}

/// Transition under `policy`.
pub fn step(
    policy: Policy,
    state: &DelayState,
    event: &ArrivalEvent,
    params: &IntersectionParams,
) -> Result<(DelayState, MapRegion)> {
    match policy {
        Policy::Fifo => fifo_step(state, event, params),
        Policy::Fo => fo_step(state, event, params),
    }
}

/// Total delay caused by the arriving vehicle: its own delay plus the push it
/// gives the other lane. The push ignores drift absorbed by the floor.
pub fn vehicle_delay_increment(
    before: &DelayState,
    after: &DelayState,
    event: &ArrivalEvent,
    params: &IntersectionParams,
) -> f64 {
    let lane = event.lane();
    let other = lane.other();
    let drifted = (before.get(other) - event.gap()).max(params.floor());
    after.get(lane).max(0.0) + (after.get(other) - drifted).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(dd: f64, ds: f64) -> IntersectionParams {
        IntersectionParams::new(0.1, 0.5, dd, ds).unwrap()
    }

    fn ev(x: f64, lane: Lane) -> ArrivalEvent {
        ArrivalEvent::new(x, lane).unwrap()
    }

    #[test]
    fn fifo_examples() {
        let q = p(2.0, 1.0);
        let (s, r) = fifo_step(&DelayState::new(0.0, -2.0, &q), &ev(10.0, Lane::One), &q).unwrap();
        assert_eq!((s.as_array(), r.index()), ([0.0, -2.0], 1));
        let before = DelayState::new(1.0, 0.0, &q);
        let e = ev(1.0, Lane::One);
        let (s, r) = fifo_step(&before, &e, &q).unwrap();
        assert_eq!((s.as_array(), r.index()), ([1.0, -1.0], 3));
        assert!((vehicle_delay_increment(&before, &s, &e, &q) - 1.0).abs() < 1e-12);
        let (s, r) = fifo_step(&DelayState::new(0.0, 3.0, &q), &ev(1.0, Lane::One), &q).unwrap();
        assert_eq!((s.as_array(), r.index()), ([4.0, 2.0], 4));
    }

    #[test]
    fn fo_examples() {
        let q = p(2.0, 1.0);
        let before = DelayState::new(-0.5, 1.5, &q);
        let e = ev(1.0, Lane::One);
        let (s, r) = fo_step(&before, &e, &q).unwrap();
        assert_eq!((s.as_array(), r.index()), ([0.0, 2.0], 5));
        assert!((vehicle_delay_increment(&before, &s, &e, &q) - 1.5).abs() < 1e-12);
        let (s, r) = fo_step(&DelayState::new(0.0, 2.5, &q), &e, &q).unwrap();
        assert_eq!((s.as_array(), r.index()), ([0.0, 2.0], 6));
        let (s, r) = fo_step(&DelayState::new(-1.0, 4.0, &q), &e, &q).unwrap();
        assert_eq!((s.as_array(), r.index()), ([0.0, 3.0], 7));
    }

    #[test]
    fn region_one_has_no_delay() {
        let q = p(2.0, 1.0);
        let before = DelayState::new(0.0, -2.0, &q);
        let e = ev(10.0, Lane::Two);
        let (after, r) = fifo_step(&before, &e, &q).unwrap();
        assert_eq!(r.index(), 1);
        assert_eq!(after.as_array(), [-2.0, 0.0]);
        assert_eq!(vehicle_delay_increment(&before, &after, &e, &q), 0.0);
    }

    #[test]
    fn empty_state_always_region_one() {
        let q = p(2.0, 1.0);
        for policy in [Policy::Fifo, Policy::Fo] {
            for x in [0.001, 0.5, 3.0] {
                let (_, r) = step(policy, &DelayState::empty(&q), &ev(x, Lane::One), &q).unwrap();
                assert_eq!(r.index(), 1);
            }
        }
    }

    #[test]
    fn infeasible_fo_state_is_reported() {
        let q = p(2.0, 0.0);
        let bad = DelayState::new(1.0, 1.5, &q);
        assert!(matches!(
            fo_step(&bad, &ev(0.5, Lane::One), &q),
            Err(Error::NoRegionMatched { .. })
        ));
    }

    #[test]
    fn region_constructor_checks_range() {
        assert!(MapRegion::new(Policy::Fifo, 5).is_none());
        assert!(MapRegion::new(Policy::Fo, 8).is_some());
        assert!(MapRegion::new(Policy::Fo, 0).is_none());
    }
}
