//! A four-item knapsack solved by branch-and-bound, cross-checked by
//! enumeration and written out in LP format.

use bliss_milp::{enumerate_solve, export_lp, solve, ConstraintSense, MilpModel, SolveLimits};

fn main() -> Result<(), bliss_milp::MilpError> {
    let items = [("tent", 5.0, 10.0), ("stove", 3.0, 7.0), ("rope", 2.0, 4.0), ("lamp", 4.0, 8.0)];
    let mut m = MilpModel::new();
    let mut weight = Vec::new();
    for (name, w, value) in items {
        let x = m.add_binary(name)?;
        m.add_objective_term(x, -value)?;
        weight.push((x, w));
    }
    m.add_constraint("capacity", &weight, ConstraintSense::Le, 9.0)?;

    let sol = solve(&m, &SolveLimits::default())?;
    let oracle = enumerate_solve(&m)?;
    let packed: Vec<_> = items.iter().zip(&sol.values).filter(|(_, &v)| v > 0.5).map(|(i, _)| i.0).collect();
    println!("status {:?}, value {}, packed {packed:?}", sol.status, -sol.objective_value);
    println!("enumeration agrees: {}", (sol.objective_value - oracle.objective_value).abs() < 1e-9);
    println!("{} nodes, {} LP iterations\n", sol.node_count, sol.lp_iterations);
    print!("{}", export_lp(&m));
    Ok(())
}
