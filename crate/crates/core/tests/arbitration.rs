//! Pairwise arbitration against an independent statement of the rules,
//! and queue filling over random instances.

mod common;

use common::c;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use warehouse_mapf::planner::plan_path;
use warehouse_mapf::scheduler::{arbitrate, decide, fill_queues, ArbitrationContext, Reason, Side};
use warehouse_mapf::sim::validate_constraints;
use warehouse_mapf::{Cell, CellMask, Direction, GridGraph, PlannerConfig, Pose, PreservedQueue, RobotState};

/// Equality of two queue entries; an entry outside the queue equals nothing.
fn eq(a: Option<Cell>, b: Option<Cell>) -> bool {
    match (a, b) {
        (Some(x), Some(y)) => x == y,
        _ => false,
    }
}

/// The rules stated directly: returns the winner (`None` for a coin flip)
/// and the rule that fired.
fn reference(i: &ArbitrationContext, j: &ArbitrationContext) -> (Option<Side>, Reason) {
    let qi_k = Some(i.sequence[i.k]);
    let qj_g = Some(j.sequence[j.k]);
    let qi_prev = i.k.checked_sub(1).map(|x| i.sequence[x]);
    let qi_next = i.sequence.get(i.k + 1).copied();
    let qj_prev = j.k.checked_sub(1).map(|x| j.sequence[x]);
    let qj_next = j.sequence.get(j.k + 1).copied();
    if eq(qi_k, Some(i.goal)) {
        if eq(qi_prev, qj_next) {
            return (Some(Side::I), Reason::GoalOfIFollowed);
        }
        return (Some(Side::J), Reason::GoalOfI);
    }
    if eq(qj_g, Some(j.goal)) {
        if eq(qi_next, qj_prev) {
            return (Some(Side::J), Reason::GoalOfJFollowed);
        }
        return (Some(Side::I), Reason::GoalOfJ);
    }
    if eq(qi_next, qj_prev) && !eq(qi_prev, qj_next) {
        return (Some(Side::J), Reason::JAhead);
    }
    if !eq(qi_next, qj_prev) && eq(qi_prev, qj_next) {
        return (Some(Side::I), Reason::IAhead);
    }
    match i.remaining.cmp(&j.remaining) {
        std::cmp::Ordering::Less => (Some(Side::I), Reason::Distance),
        std::cmp::Ordering::Greater => (Some(Side::J), Reason::Distance),
        std::cmp::Ordering::Equal => (None, Reason::Distance),
    }
}

fn ctx(robot: usize, prev: Option<Cell>, next: Option<Cell>, goal: Cell, remaining: usize) -> ArbitrationContext {
    let contested = c(5, 5);
    let mut sequence = Vec::new();
    sequence.extend(prev);
    let k = sequence.len();
    sequence.push(contested);
    sequence.extend(next);
    ArbitrationContext {
        robot,
        sequence,
        k,
        goal,
        remaining,
    }
}

#[test]
fn decisions_match_the_reference_over_every_predicate_combination() {
    let contested = c(5, 5);
    let (a, b, cc, d, e, f) = (c(4, 5), c(5, 4), c(6, 5), c(5, 6), c(9, 9), c(8, 8));
    let elsewhere = c(0, 0);
    let mut reasons = std::collections::BTreeSet::new();
    let mut cases = 0;
    for prev_i in [None, Some(a), Some(b)] {
        for next_i in [None, Some(cc), Some(d)] {
            for prev_j in [None, Some(cc), Some(e)] {
                for next_j in [None, Some(a), Some(f)] {
                    for goal_i in [contested, elsewhere] {
                        for goal_j in [contested, elsewhere] {
                            for (ri, rj) in [(3, 5), (5, 5), (5, 3)] {
                                let i = ctx(0, prev_i, next_i, goal_i, ri);
                                let j = ctx(1, prev_j, next_j, goal_j, rj);
                                let want = reference(&i, &j);
                                let got = decide(&i, &j);
                                assert_eq!((got.winner, got.reason), want, "{i:?} vs {j:?}");
                                reasons.insert(want.1);
                                cases += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    assert_eq!(cases, 972);
    assert_eq!(reasons.len(), 7);
}

#[test]
fn coin_flip_is_used_only_on_equal_distances() {
    let i = ctx(0, None, None, c(0, 0), 4);
    let j = ctx(1, None, None, c(0, 1), 4);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let flips: Vec<Side> = (0..200).map(|_| arbitrate(&i, &j, &mut rng)).collect();
    let wins_i = flips.iter().filter(|s| **s == Side::I).count();
    assert!((60..=140).contains(&wins_i), "{wins_i}");
    let nearer = ctx(1, None, None, c(0, 1), 2);
    assert!((0..50).all(|_| arbitrate(&i, &nearer, &mut rng) == Side::J));
}

/// Robot `j` drives right along row 1 and `i` climbs column 1 into the
/// same cell; `i`'s next cell is where `j` comes from.
#[test]
fn follower_pattern_gives_the_cell_to_j() {
    let i = ArbitrationContext {
        robot: 0,
        sequence: vec![c(1, 2), c(1, 1), c(0, 1)],
        k: 1,
        goal: c(0, 0),
        remaining: 3,
    };
    let j = ArbitrationContext {
        robot: 1,
        sequence: vec![c(0, 1), c(1, 1), c(2, 1)],
        k: 1,
        goal: c(5, 1),
        remaining: 5,
    };
    assert_eq!(decide(&i, &j).winner, Some(Side::J));
}

/// No rule pattern applies; the robot nearer to its destination wins.
#[test]
fn distance_rule_gives_the_cell_to_the_nearer_robot() {
    let i = ArbitrationContext {
        robot: 0,
        sequence: vec![c(0, 1), c(1, 1), c(2, 1)],
        k: 1,
        goal: c(4, 1),
        remaining: 4,
    };
    let j = ArbitrationContext {
        robot: 1,
        sequence: vec![c(1, 0), c(1, 1), c(1, 2)],
        k: 1,
        goal: c(1, 3),
        remaining: 3,
    };
    assert_eq!(decide(&i, &j), warehouse_mapf::scheduler::Decision { winner: Some(Side::J), reason: Reason::Distance });
    let far = ArbitrationContext { remaining: 9, ..j };
    assert_eq!(decide(&i, &far).winner, Some(Side::I));
}

/// The cell is `j`'s goal and `i` is not queued behind `j`: `i` passes first.
#[test]
fn goal_of_j_without_follower_gives_the_cell_to_i() {
    let i = ArbitrationContext {
        robot: 0,
        sequence: vec![c(0, 1), c(1, 1), c(2, 1)],
        k: 1,
        goal: c(4, 1),
        remaining: 4,
    };
    let j = ArbitrationContext {
        robot: 1,
        sequence: vec![c(1, 3), c(1, 2), c(1, 1)],
        k: 2,
        goal: c(1, 1),
        remaining: 2,
    };
    assert_eq!(decide(&i, &j).winner, Some(Side::I));
}

/// A random self-avoiding walk of up to `len` cells from `start` that keeps
/// off `taken`.
fn walk(g: &GridGraph, start: Cell, len: usize, taken: &[Cell], rng: &mut ChaCha8Rng) -> Vec<Cell> {
    let mut cells = vec![start];
    while cells.len() < len {
        let cur = *cells.last().unwrap();
        let mut options: Vec<Cell> = Direction::MOVES
            .iter()
            .map(|&d| cur.step(d))
            .filter(|&n| g.is_free(n) && !cells.contains(&n) && !taken.contains(&n))
            .collect();
        options.shuffle(rng);
        match options.first() {
            Some(&n) => cells.push(n),
            None => break,
        }
    }
    cells
}

fn random_instance(rng: &mut ChaCha8Rng) -> (GridGraph, Vec<RobotState>, Vec<warehouse_mapf::Plan>) {
    let g = GridGraph::open(7, 7);
    let mut free: Vec<Cell> = g.free_cells().collect();
    free.shuffle(rng);
    let m = rng.gen_range(2..=10);
    let goals: Vec<Cell> = free[m..2 * m].to_vec();
    let mut taken: Vec<Cell> = free[..m].to_vec();
    let mut states = Vec::new();
    for (id, &start) in free[..m].iter().enumerate() {
        taken.retain(|&x| x != start);
        let cells = walk(&g, start, rng.gen_range(1..=4), &taken, rng);
        taken.extend(&cells);
        let dir = *Direction::MOVES.choose(rng).unwrap();
        let mut s = RobotState::initial(id, Pose::new(start, dir), Pose::new(goals[id], Direction::Up), 4, &g).unwrap();
        s.queue = PreservedQueue::new(4, cells, &g).unwrap();
        s.done = false;
        states.push(s);
    }
    let cfg = PlannerConfig::default();
    let frozen = CellMask::new(&g);
    let plans = states
        .iter()
        .map(|s| plan_path(&g, s, &[], &frozen, &cfg).unwrap())
        .collect();
    (g, states, plans)
}

#[test]
fn random_fills_never_hand_a_cell_to_two_robots() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut contested = 0;
    for trial in 0..1_000 {
        let (g, states, plans) = random_instance(&mut rng);
        let mut fill_rng = ChaCha8Rng::seed_from_u64(trial);
        let actions = fill_queues(&g, &states, &plans, 0, &mut fill_rng).unwrap();
        let violations = validate_constraints(&g, &states, &actions);
        assert!(violations.is_empty(), "trial {trial}: {violations:?}");
        let mut seen: Vec<Cell> = actions.iter().flat_map(|a| a.real_cells()).collect();
        let total = seen.len();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), total, "trial {trial}");
        for (s, a) in states.iter().zip(&actions) {
            assert_eq!(&a.real_cells()[..s.queue.effective_length()], s.queue.cells());
            assert!(a.real_len() <= 4);
        }
        // Requests that would have overlapped without arbitration.
        let wanted: usize = states
            .iter()
            .zip(&plans)
            .map(|(s, p)| p.len().min(4) - s.queue.effective_length())
            .sum();
        let granted: usize = states.iter().zip(&actions).map(|(s, a)| a.real_len() - s.queue.effective_length()).sum();
        contested += usize::from(granted < wanted);

        let mut again = ChaCha8Rng::seed_from_u64(trial);
        assert_eq!(fill_queues(&g, &states, &plans, 0, &mut again).unwrap(), actions);
    }
    assert!(contested > 100, "only {contested} trials had contention");
}
