//! Prioritized baselines against exhaustive space-time search.

mod common;

use common::c;
use warehouse_mapf::baselines::castar::CaStar;
use warehouse_mapf::baselines::pbs::{Pbs, PbsStatus};
use warehouse_mapf::{Cell, CellMask, Direction, GridGraph, Plan, Pose, RobotState};

const LIMIT: u64 = 30;

fn robot(g: &GridGraph, id: usize, start: Cell, goal: Cell) -> RobotState {
    RobotState::initial(id, Pose::new(start, Direction::Right), Pose::new(goal, Direction::Right), 4, g).unwrap()
}

/// Cell occupied at tick `t` by a timetabled plan; parked after its end.
fn position(plan: &Plan, t: u64) -> Cell {
    plan.steps
        .iter()
        .take_while(|s| s.eta.unwrap() <= t)
        .last()
        .map_or(plan.head(), |s| s.cell)
}

fn arrival(plan: &Plan) -> u64 {
    plan.steps.last().unwrap().eta.unwrap()
}

/// Earliest tick at which `r` can reach and keep its goal while avoiding
/// the `higher` plans' cells and edge swaps, by breadth-first search over
/// every `(cell, t)`.
fn earliest_arrival(g: &GridGraph, r: &RobotState, higher: &[&Plan]) -> Option<u64> {
    let taken = |cell: Cell, t: u64| higher.iter().any(|p| position(p, t) == cell);
    let keeps = |t: u64| (t..=LIMIT).all(|u| !taken(r.goal.cell, u));
    let mut layer = vec![r.position()];
    for t in 0..LIMIT {
        if layer.iter().any(|&x| x == r.goal.cell) && keeps(t) {
            return Some(t);
        }
        let mut next: Vec<Cell> = Vec::new();
        for &cell in &layer {
            let moves = std::iter::once(cell).chain(Direction::MOVES.iter().map(|&d| cell.step(d)));
            for n in moves {
                if !g.is_free(n) || taken(n, t + 1) || next.contains(&n) {
                    continue;
                }
                let swaps = n != cell && higher.iter().any(|p| position(p, t) == n && position(p, t + 1) == cell);
                if !swaps {
                    next.push(n);
                }
            }
        }
        layer = next;
    }
    None
}

fn plus_graph() -> GridGraph {
    GridGraph::with_blocked(3, 3, [c(0, 0), c(2, 0), c(0, 2), c(2, 2)]).unwrap()
}

#[test]
fn single_robot_takes_a_shortest_path() {
    let g = GridGraph::with_blocked(6, 6, [c(2, 1), c(2, 2), c(2, 3), c(2, 4)]).unwrap();
    let r = robot(&g, 0, c(0, 3), c(5, 3));
    let mut ca = CaStar::new(&g, 12);
    let out = ca.plan_in_order(&g, std::slice::from_ref(&r), &CellMask::new(&g), 0, vec![0]);
    let shortest = g.distances_to(r.goal.cell, |_| false)[g.index(r.position())] as u64;
    assert_eq!(arrival(&out.plans[0]), shortest);
    assert_eq!(earliest_arrival(&g, &r, &[]), Some(shortest));
}

#[test]
fn crossing_robot_waits_exactly_as_long_as_needed() {
    let g = plus_graph();
    let states = vec![robot(&g, 0, c(0, 1), c(2, 1)), robot(&g, 1, c(1, 0), c(1, 2))];
    for order in [vec![0, 1], vec![1, 0]] {
        let mut ca = CaStar::new(&g, 12);
        let out = ca.plan_in_order(&g, &states, &CellMask::new(&g), 0, order.clone());
        let (hi, lo) = (order[0], order[1]);
        assert_eq!(arrival(&out.plans[hi]), 2);
        let want = earliest_arrival(&g, &states[lo], &[&out.plans[hi]]).unwrap();
        assert_eq!(want, 3);
        assert_eq!(arrival(&out.plans[lo]), want);
        assert!(out.plans[lo].steps.iter().any(|s| s.release.is_some()), "a wait gates the next cell");
        for t in 0..=LIMIT {
            assert_ne!(position(&out.plans[0], t), position(&out.plans[1], t));
        }
    }
}

#[test]
fn later_robots_respect_every_reservation() {
    let g = GridGraph::open(5, 5);
    let states = vec![
        robot(&g, 0, c(0, 2), c(4, 2)),
        robot(&g, 1, c(2, 0), c(2, 4)),
        robot(&g, 2, c(4, 1), c(0, 1)),
        robot(&g, 3, c(1, 4), c(3, 0)),
    ];
    let mut ca = CaStar::new(&g, 16);
    let order = vec![2, 0, 3, 1];
    let out = ca.plan_in_order(&g, &states, &CellMask::new(&g), 0, order.clone());
    assert!(out.stuck.is_empty());
    for (rank, &r) in order.iter().enumerate() {
        let higher: Vec<&Plan> = order[..rank].iter().map(|&h| &out.plans[h]).collect();
        assert_eq!(Some(arrival(&out.plans[r])), earliest_arrival(&g, &states[r], &higher), "robot {r}");
        for t in 0..=LIMIT {
            for h in &higher {
                assert_ne!(position(&out.plans[r], t), position(h, t));
            }
        }
    }
}

/// Two robots swap the ends of a 4×2 corridor. Each priority ordering is
/// evaluated by brute force; the search returns the cheaper one.
#[test]
fn corridor_swap_picks_the_better_ordering() {
    let g = GridGraph::open(4, 2);
    let states = vec![robot(&g, 0, c(0, 0), c(3, 0)), robot(&g, 1, c(3, 0), c(0, 0))];
    let mut totals = Vec::new();
    for order in [vec![0, 1], vec![1, 0]] {
        let mut ca = CaStar::new(&g, 12);
        let out = ca.plan_in_order(&g, &states, &CellMask::new(&g), 0, order.clone());
        let first = arrival(&out.plans[order[0]]);
        assert_eq!(first, 3);
        let second = earliest_arrival(&g, &states[order[1]], &[&out.plans[order[0]]]).unwrap();
        assert_eq!(arrival(&out.plans[order[1]]), second);
        totals.push(first + second);
    }
    let mut pbs = Pbs::new(&g, 12, 10_000);
    let out = pbs.plan_all(&g, &states, &CellMask::new(&g), 0);
    assert_eq!(out.status, PbsStatus::Solved);
    assert!(out.nodes >= 3, "the root collides and branches");
    let total: u64 = out.plans.iter().map(arrival).sum();
    assert_eq!(total, *totals.iter().min().unwrap());
    for t in 0..=LIMIT {
        assert_ne!(position(&out.plans[0], t), position(&out.plans[1], t));
    }
}

#[test]
fn disjoint_robots_need_no_branching() {
    let g = GridGraph::open(6, 6);
    let states = vec![robot(&g, 0, c(0, 0), c(5, 0)), robot(&g, 1, c(0, 5), c(5, 5))];
    let out = Pbs::new(&g, 12, 10_000).plan_all(&g, &states, &CellMask::new(&g), 0);
    assert_eq!((out.status, out.nodes), (PbsStatus::Solved, 1));
}
