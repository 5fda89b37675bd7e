//! With no other robots the traffic planner must price paths exactly like
//! a plain move-and-turn shortest path search.

mod common;

use common::{c, plan_cost, pose_cost, pose_costs_to};
use warehouse_mapf::planner::plan_path;
use warehouse_mapf::{CellMask, Direction, GridGraph, PlannerConfig, Pose, RobotState};

/// Compares every start and goal pose on `graph`; returns the number of
/// instances checked.
fn sweep(graph: &GridGraph, cfg: &PlannerConfig) -> usize {
    let turn = (cfg.turn_wait as f64 + cfg.c3) as u64;
    let frozen = CellMask::new(graph);
    let cells: Vec<_> = graph.free_cells().collect();
    let mut checked = 0;
    for &goal in &cells {
        for goal_dir in Direction::MOVES {
            let costs = pose_costs_to(graph, goal, goal_dir, turn);
            for &start in &cells {
                if start == goal {
                    continue;
                }
                for start_dir in Direction::MOVES {
                    let robot =
                        RobotState::initial(0, Pose::new(start, start_dir), Pose::new(goal, goal_dir), 4, graph).unwrap();
                    let best = pose_cost(&costs, graph, start, start_dir);
                    match plan_path(graph, &robot, &[], &frozen, cfg) {
                        Ok(plan) => {
                            assert_eq!(plan.head(), start);
                            assert_eq!(plan.last(), goal);
                            assert_eq!(
                                plan_cost(&plan, start_dir, goal_dir, turn),
                                best,
                                "{start}/{start_dir} -> {goal}/{goal_dir} on\n{}",
                                graph.to_map_string()
                            );
                        }
                        Err(_) => assert_eq!(best, u64::MAX, "{start} -> {goal} reported unreachable"),
                    }
                    checked += 1;
                }
            }
        }
    }
    checked
}

#[test]
fn open_six_by_six_matches_dijkstra() {
    let g = GridGraph::open(6, 6);
    assert_eq!(sweep(&g, &PlannerConfig::default()), 36 * 35 * 16);
}

#[test]
fn single_obstacle_maps_match_dijkstra() {
    let cfg = PlannerConfig::default();
    for i in 0..36 {
        let g = GridGraph::with_blocked(6, 6, [c(i % 6, i / 6)]).unwrap();
        sweep(&g, &cfg);
    }
}

#[test]
fn walled_maps_match_dijkstra_for_other_turn_costs() {
    // Three-cell walls that split the grid into a detour.
    let walls = [
        [c(2, 0), c(2, 1), c(2, 2)],
        [c(1, 3), c(2, 3), c(3, 3)],
        [c(3, 5), c(3, 4), c(3, 3)],
        [c(0, 2), c(1, 2), c(5, 2)],
    ];
    for (turn_wait, c3) in [(0, 0.0), (1, 0.0), (2, 2.0), (5, 1.0)] {
        let cfg = PlannerConfig {
            turn_wait,
            c3,
            ..PlannerConfig::default()
        };
        for w in walls {
            let g = GridGraph::with_blocked(6, 6, w).unwrap();
            sweep(&g, &cfg);
        }
    }
}

#[test]
fn enclosed_goal_is_unreachable() {
    let g = GridGraph::with_blocked(6, 6, [c(4, 5), c(5, 4)]).unwrap();
    assert!(sweep(&g, &PlannerConfig::default()) > 0);
}
