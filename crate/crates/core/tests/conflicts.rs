//! Conflict classification and the re-planning round.

mod common;

use common::c;
use warehouse_mapf::conflict::{classify_pair, detect_all, replan_round, ConflictKind, RoundExit};
use warehouse_mapf::planner::{plan_path, CostModel, PathPlanner};
use warehouse_mapf::scenario::generate_scenario;
use warehouse_mapf::{Cell, CellMask, Direction, GridGraph, Plan, PlannerConfig, Pose, RobotState};

fn robot(g: &GridGraph, id: usize, start: Cell, sd: Direction, goal: Cell, gd: Direction) -> RobotState {
    RobotState::initial(id, Pose::new(start, sd), Pose::new(goal, gd), 4, g).unwrap()
}

/// Every index pair of two plans inside the horizon that shares a cell at
/// the same index or swaps an edge.
fn brute_opposite(a: &Plan, b: &Plan, horizon: usize) -> usize {
    let ca: Vec<Cell> = a.cells().take(horizon + 1).collect();
    let cb: Vec<Cell> = b.cells().take(horizon + 1).collect();
    let mut n = 0;
    for x in 0..ca.len() {
        for y in 0..cb.len() {
            if ca[x] != cb[y] {
                continue;
            }
            let swap_fwd = x + 1 < ca.len() && y >= 1 && ca[x + 1] == cb[y - 1];
            let swap_back = x >= 1 && y + 1 < cb.len() && ca[x - 1] == cb[y + 1];
            if x == y || swap_fwd || swap_back {
                n += 1;
            }
        }
    }
    n
}

#[test]
fn head_on_corridor_resolves_through_the_side_lane() {
    // Two free rows; the bottom row is walled off.
    let blocked: Vec<Cell> = (0..5).map(|x| c(x, 2)).collect();
    let g = GridGraph::with_blocked(5, 3, blocked).unwrap();
    // Cheap turns make the side lane competitive with the shared row.
    let cfg = PlannerConfig {
        turn_wait: 1,
        c3: 0.5,
        ..PlannerConfig::default()
    };
    let frozen = CellMask::new(&g);
    let states = vec![
        robot(&g, 0, c(0, 1), Direction::Right, c(4, 1), Direction::Right),
        robot(&g, 1, c(4, 1), Direction::Left, c(0, 1), Direction::Left),
    ];
    let mut plans: Vec<Plan> = states.iter().map(|s| plan_path(&g, s, &[], &frozen, &cfg).unwrap()).collect();
    assert!(brute_opposite(&plans[0], &plans[1], cfg.horizon) > 0);

    let mut planner = PathPlanner::new(cfg.clone(), CostModel::Traffic);
    let out = replan_round(&g, &states, &mut plans, &frozen, &mut planner, &cfg).unwrap();
    // The robots still cross at each other's start cell, so only the
    // opposite-elimination step is guaranteed to finish.
    assert_ne!(out.exit, RoundExit::OppositeLimit);
    assert!(out.replans >= 1);
    assert_eq!(brute_opposite(&plans[0], &plans[1], cfg.horizon), 0);
    assert_eq!(detect_all(&plans, &frozen, &cfg).opposite_count(), 0);
    assert!(plans.iter().any(|p| p.cells().any(|x| x.y == 0)));
}

#[test]
fn quiet_report_leaves_plans_alone() {
    let g = GridGraph::open(6, 6);
    let cfg = PlannerConfig::default();
    let frozen = CellMask::new(&g);
    let states = vec![
        robot(&g, 0, c(0, 0), Direction::Right, c(5, 0), Direction::Right),
        robot(&g, 1, c(0, 5), Direction::Right, c(5, 5), Direction::Right),
    ];
    let mut plans: Vec<Plan> = states.iter().map(|s| plan_path(&g, s, &[], &frozen, &cfg).unwrap()).collect();
    let before = plans.clone();
    let mut planner = PathPlanner::new(cfg.clone(), CostModel::Traffic);
    let out = replan_round(&g, &states, &mut plans, &frozen, &mut planner, &cfg).unwrap();
    assert_eq!(out.exit, RoundExit::Normal);
    assert_eq!(out.replans, 0);
    assert_eq!(plans, before);

    let mut single = vec![before[0].clone()];
    let out = replan_round(&g, &states[..1], &mut single, &frozen, &mut planner, &cfg).unwrap();
    assert_eq!((out.exit, out.replans), (RoundExit::Normal, 0));
}

#[test]
fn classification_examples() {
    // Edge swap at matching indices.
    let a = Plan::from_cells(0, Direction::Right, &[c(0, 0), c(1, 0), c(2, 0), c(3, 0), c(4, 0)]).unwrap();
    let b = Plan::from_cells(1, Direction::Left, &[c(6, 0), c(5, 0), c(4, 0), c(3, 0), c(2, 0)]).unwrap();
    assert!(classify_pair(&a, &b, 12).iter().all(|x| x.kind == ConflictKind::Opposite));
    // Same heading into (4,1) at indices 4 and 6.
    let a = Plan::from_cells(0, Direction::Right, &[c(0, 1), c(1, 1), c(2, 1), c(3, 1), c(4, 1), c(4, 2)]).unwrap();
    let b = Plan::from_cells(1, Direction::Down, &[c(3, 5), c(3, 4), c(3, 3), c(3, 2)]).unwrap();
    let behind = Plan::from_cells(1, Direction::Right, &[c(3, 1), c(4, 1), c(5, 1)]).unwrap();
    let kinds: Vec<_> = classify_pair(&a, &behind, 12).iter().map(|x| (x.kind, x.cell)).collect();
    assert_eq!(kinds, vec![(ConflictKind::Following, c(3, 1)), (ConflictKind::Following, c(4, 1))]);
    let fol = Plan::from_cells(
        1,
        Direction::Right,
        &[c(0, 3), c(0, 2), c(1, 2), c(2, 2), c(3, 2), c(3, 1)],
    )
    .unwrap();
    assert!(classify_pair(&a, &b, 12).is_empty());
    let kinds: Vec<_> = classify_pair(&a, &fol, 12).iter().map(|x| (x.kind, x.cell)).collect();
    assert_eq!(kinds, vec![(ConflictKind::Crossing, c(3, 1))]);
}

/// Post-round guarantees on generated instances: a normal exit leaves no
/// opposite conflicts and `γ ≤ φ`.
#[test]
fn normal_rounds_meet_their_postconditions() {
    let cfg = PlannerConfig::default();
    let mut normal = 0;
    for seed in 0..20 {
        let sc = generate_scenario(16, 16, 5, 0.0, seed).unwrap();
        let states = sc.initial_states(cfg.queue_len).unwrap();
        let frozen = CellMask::new(&sc.graph);
        let mut plans: Vec<Plan> =
            states.iter().map(|s| plan_path(&sc.graph, s, &[], &frozen, &cfg).unwrap()).collect();
        let mut planner = PathPlanner::new(cfg.clone(), CostModel::Traffic);
        let out = replan_round(&sc.graph, &states, &mut plans, &frozen, &mut planner, &cfg).unwrap();
        let report = detect_all(&plans, &frozen, &cfg);
        assert_eq!(report, out.report);
        let per_kind = |k: ConflictKind| report.conflicts.iter().filter(|x| x.kind == k).count();
        let opp: usize = report.tallies.iter().map(|t| t.opposite).sum();
        let fol: usize = report.tallies.iter().map(|t| t.following).sum();
        let cross: usize = report.tallies.iter().map(|t| t.crossing).sum();
        assert_eq!(opp, 2 * per_kind(ConflictKind::Opposite));
        assert_eq!(fol, 2 * per_kind(ConflictKind::Following));
        assert_eq!(cross, 2 * per_kind(ConflictKind::Crossing));
        if out.exit == RoundExit::Normal {
            normal += 1;
            assert_eq!(report.opposite_count(), 0);
            assert!(report.gamma <= cfg.phi);
            for i in 0..plans.len() {
                for j in i + 1..plans.len() {
                    assert_eq!(brute_opposite(&plans[i], &plans[j], cfg.horizon), 0);
                }
            }
        }
    }
    assert!(normal > 0);
}
