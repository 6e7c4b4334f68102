//! Passing-time equilibria for explicit vehicle sequences.
//!
//! These constructions are the reference against which the transition maps
//! are checked. They support any conflict graph.

use crate::error::{Error, Result};
use crate::model::{ConflictGraph, DelayState, IntersectionParams};

/// A vehicle with its traffic-free passing time and zero-based lane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleArrival {
    pub desired_time: f64,
    pub lane: usize,
}

impl VehicleArrival {
    pub fn new(desired_time: f64, lane: usize) -> Self {
        Self { desired_time, lane }
    }
}

/// Passing times for a vehicle sequence, plus the intermediate equilibria
/// reached after each arrival.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSchedule {
    passing_times: Vec<f64>,
    stages: Stages,
}

#[derive(Debug, Clone, PartialEq)]
enum Stages {
    /// Earlier times never change, so the stage after `i` arrivals is a prefix.
    Prefix,
    /// `stages[i - 1]` holds the equilibrium after `i` arrivals.
    Recorded(Vec<Vec<f64>>),
}

impl EquilibriumSchedule {
    /// Final passing times, one per vehicle.
    pub fn passing_times(&self) -> &[f64] {
        &self.passing_times
    }

    pub fn len(&self) -> usize {
        self.passing_times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passing_times.is_empty()
    }

    /// Equilibrium passing times of the first `arrivals` vehicles right after
    /// the last of them joined.
    pub fn stage(&self, arrivals: usize) -> &[f64] {
        assert!(
            arrivals <= self.len(),
            "stage {arrivals} beyond schedule length"
        );
        match &self.stages {
            Stages::Prefix => &self.passing_times[..arrivals],
            Stages::Recorded(_) if arrivals == 0 => &[],
            Stages::Recorded(all) => &all[arrivals - 1],
        }
    }
}

fn check_input(vehicles: &[VehicleArrival], graph: &ConflictGraph) -> Result<()> {
    for (index, v) in vehicles.iter().enumerate() {
        if v.lane >= graph.lane_count() {
            return Err(Error::UnknownLane {
                index,
                lane: v.lane,
                lanes: graph.lane_count(),
            });
        }
        if !v.desired_time.is_finite() {
            return Err(Error::UnsortedInput { index });
        }
        if index > 0 && v.desired_time < vehicles[index - 1].desired_time {
            return Err(Error::UnsortedInput { index });
        }
    }
    Ok(())
}

fn required_gap(
    graph: &ConflictGraph,
    a: usize,
    b: usize,
    params: &IntersectionParams,
) -> Option<f64> {
    if a == b {
        Some(params.delta_s())
    } else if graph.conflicts(a, b) {
        Some(params.delta_d())
    } else {
        None
    }
}

/// First-in-first-out equilibrium: each vehicle passes at the earliest time
/// compatible with every earlier vehicle it must follow.
pub fn fifo_schedule(
    vehicles: &[VehicleArrival],
    graph: &ConflictGraph,
    params: &IntersectionParams,
) -> Result<EquilibriumSchedule> {
    check_input(vehicles, graph)?;
    let mut lane_last: Vec<Option<f64>> = vec![None; graph.lane_count()];
    let mut passing_times = Vec::with_capacity(vehicles.len());
    for v in vehicles {
        let mut t = v.desired_time;
        for (lane, last) in lane_last.iter().enumerate() {
            if let (Some(last), Some(gap)) = (last, required_gap(graph, lane, v.lane, params)) {
                t = t.max(last + gap);
            }
        }
        let slot = &mut lane_last[v.lane];
        *slot = Some(slot.map_or(t, |prev| prev.max(t)));
        passing_times.push(t);
    }
    Ok(EquilibriumSchedule {
        passing_times,
        stages: Stages::Prefix,
    })
}

/// Flexible-order equilibrium.
///
/// On each arrival the newcomer's earliest feasible time is its desired time
/// pushed behind its own lane. All vehicles are then ranked by their current
/// times (ties to the smaller index) and rescheduled in rank order, each one
/// as early as its current time and the already placed vehicles allow.
pub fn fo_schedule(
    vehicles: &[VehicleArrival],
    graph: &ConflictGraph,
    params: &IntersectionParams,
) -> Result<EquilibriumSchedule> {
    check_input(vehicles, graph)?;
    let mut current: Vec<f64> = Vec::with_capacity(vehicles.len());
    let mut stages = Vec::with_capacity(vehicles.len());
    let mut order: Vec<usize> = Vec::with_capacity(vehicles.len());
    let mut placed: Vec<usize> = Vec::with_capacity(vehicles.len());
    for (i, v) in vehicles.iter().enumerate() {
        let mut earliest = v.desired_time;
        for (j, prev) in vehicles[..i].iter().enumerate() {
            if prev.lane == v.lane {
                earliest = earliest.max(current[j] + params.delta_s());
            }
        }
        current.push(earliest);

        order.clear();
        order.extend(0..=i);
        order.sort_by(|&a, &b| current[a].total_cmp(&current[b]).then(a.cmp(&b)));

        let mut next = current.clone();
        placed.clear();
        for &k in &order {
            let mut t = current[k];
            for &j in &placed {
                if let Some(gap) = required_gap(graph, vehicles[j].lane, vehicles[k].lane, params) {
                    t = t.max(next[j] + gap);
                }
            }
            next[k] = t;
            placed.push(k);
        }
        current = next;
        stages.push(current.clone());
    }
    Ok(EquilibriumSchedule {
        passing_times: current,
        stages: Stages::Recorded(stages),
    })
}

/// Lane delays right after vehicle `arrivals - 1` joined: per lane, the latest
/// passing time minus that vehicle's desired time. Empty lanes sit at the floor.
///
/// Only the two-lane model has a `DelayState`; lanes must be 0 or 1.
pub fn lane_delays(
    schedule: &EquilibriumSchedule,
    vehicles: &[VehicleArrival],
    params: &IntersectionParams,
    arrivals: usize,
) -> DelayState {
    assert!(
        arrivals >= 1 && arrivals <= vehicles.len(),
        "arrivals out of range"
    );
    let times = schedule.stage(arrivals);
    let reference = vehicles[arrivals - 1].desired_time;
    let mut latest = [f64::NEG_INFINITY; 2];
    for (v, t) in vehicles[..arrivals].iter().zip(times) {
        assert!(v.lane < 2, "lane delays are defined for two lanes");
        latest[v.lane] = latest[v.lane].max(*t);
    }
    DelayState::new(latest[0] - reference, latest[1] - reference, params)
}

/// Per-vehicle delay: passing time minus desired time.
pub fn vehicle_delays(schedule: &EquilibriumSchedule, vehicles: &[VehicleArrival]) -> Vec<f64> {
    schedule
        .passing_times()
        .iter()
        .zip(vehicles)
        .map(|(t, v)| t - v.desired_time)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(dd: f64, ds: f64) -> IntersectionParams {
        IntersectionParams::new(0.3, 0.5, dd, ds).unwrap()
    }

    fn seq(v: &[(f64, usize)]) -> Vec<VehicleArrival> {
        v.iter().map(|&(t, l)| VehicleArrival::new(t, l)).collect()
    }

    #[test]
    fn fifo_examples() {
        let g = ConflictGraph::two_lane();
        let p = params(2.0, 1.0);
        let one = fifo_schedule(&seq(&[(5.0, 0)]), &g, &p).unwrap();
        assert_eq!(one.passing_times(), &[5.0]);
        let two = fifo_schedule(&seq(&[(0.0, 0), (0.5, 1)]), &g, &p).unwrap();
        assert_eq!(two.passing_times(), &[0.0, 2.0]);
        let three = fifo_schedule(&seq(&[(0.0, 0), (0.5, 1), (0.6, 0)]), &g, &p).unwrap();
        assert_eq!(three.passing_times(), &[0.0, 2.0, 4.0]);
    }

    #[test]
    fn fo_examples() {
        let g = ConflictGraph::two_lane();
        let v = seq(&[(0.0, 0), (0.5, 1), (0.6, 0)]);
        let s = fo_schedule(&v, &g, &params(2.0, 1.0)).unwrap();
        assert_eq!(s.passing_times(), &[0.0, 3.0, 1.0]);
        let d = vehicle_delays(&s, &v);
        assert!(
            (d[0] - 0.0).abs() < 1e-12 && (d[1] - 2.5).abs() < 1e-12 && (d[2] - 0.4).abs() < 1e-12
        );

        let w = seq(&[(0.0, 1), (0.5, 0)]);
        let p0 = params(2.0, 0.0);
        let fo = fo_schedule(&w, &g, &p0).unwrap();
        let fifo = fifo_schedule(&w, &g, &p0).unwrap();
        assert_eq!(fo.passing_times(), &[0.0, 2.0]);
        assert_eq!(fo.passing_times(), fifo.passing_times());
    }

    #[test]
    fn single_lane_fo_equals_fifo() {
        let g = ConflictGraph::two_lane();
        let v = seq(&[(0.0, 1), (0.2, 1), (0.3, 1), (3.0, 1)]);
        let p = params(2.0, 1.0);
        assert_eq!(
            fo_schedule(&v, &g, &p).unwrap().passing_times(),
            fifo_schedule(&v, &g, &p).unwrap().passing_times()
        );
    }

    #[test]
    fn unsorted_input_rejected() {
        let g = ConflictGraph::two_lane();
        let v = seq(&[(1.0, 0), (0.5, 1)]);
        assert_eq!(
            fifo_schedule(&v, &g, &params(2.0, 0.0)),
            Err(Error::UnsortedInput { index: 1 })
        );
        assert!(fo_schedule(&v, &g, &params(2.0, 0.0)).is_err());
        assert!(matches!(
            fifo_schedule(&seq(&[(0.0, 2)]), &g, &params(2.0, 0.0)),
            Err(Error::UnknownLane { .. })
        ));
    }

    #[test]
    fn lane_delay_examples() {
        let g = ConflictGraph::two_lane();
        let p = params(2.0, 1.0);
        let v = seq(&[(0.0, 0), (0.5, 1)]);
        let s = fifo_schedule(&v, &g, &p).unwrap();
        let t = lane_delays(&s, &v, &p, 2);
        assert!((t.t1() + 0.5).abs() < 1e-12 && (t.t2() - 1.5).abs() < 1e-12);
        assert_eq!(vehicle_delays(&s, &v), vec![0.0, 1.5]);

        let first = lane_delays(&s, &v, &p, 1);
        assert_eq!(first.as_array(), [0.0, -2.0]);

        let w = seq(&[(0.0, 0), (0.5, 1), (10.0, 0)]);
        let s = fifo_schedule(&w, &g, &p).unwrap();
        assert_eq!(lane_delays(&s, &w, &p, 3).as_array(), [0.0, -2.0]);
    }

    #[test]
    fn fo_stages_track_rescheduling() {
        let g = ConflictGraph::two_lane();
        let v = seq(&[(0.0, 0), (0.5, 1), (0.6, 0)]);
        let s = fo_schedule(&v, &g, &params(2.0, 1.0)).unwrap();
        assert_eq!(s.stage(2), &[0.0, 2.0]);
        assert_eq!(s.stage(3), &[0.0, 3.0, 1.0]);
        assert!(s.stage(0).is_empty());
    }

    #[test]
    fn three_lane_graph_respects_non_conflicts() {
        let g = ConflictGraph::new(3, &[(0, 1)]).unwrap();
        let p = params(2.0, 1.0);
        let v = seq(&[(0.0, 0), (0.1, 2), (0.2, 1)]);
        let s = fifo_schedule(&v, &g, &p).unwrap();
        assert_eq!(s.passing_times(), &[0.0, 0.1, 2.0]);
    }
}
