// n-Shapley values of a small game with planted main, pairwise and
// three-way effects, checked against the dense least-squares solve.

use nall::coalition::{
    fidelity_r2, ls_projection_oracle, n_shapley, shapley_interaction_index, CoalitionGame, Subset,
};

pub fn run_example() -> Result<String, Box<dyn std::error::Error>> {
    let main = [0.8, -0.3, 0.5, 0.1];
    let game = CoalitionGame::from_fn(4, |s: Subset| {
        let on = |i: usize| (s >> i & 1) as f64;
        -1.0 + (0..4).map(|i| main[i] * on(i)).sum::<f64>() + 0.6 * on(0) * on(1) + 0.9 * on(1) * on(2) * on(3)
    })?;
    let mut out = String::new();
    for order in 1..=4 {
        let fast = n_shapley(&game, order)?;
        let dense = ls_projection_oracle(&game, order)?;
        let gap = fast
            .coefficients()
            .iter()
            .zip(dense.coefficients())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let r2 = fidelity_r2(&game, &fast)?.r2;
        out += &format!("order {order}: R2 {r2:.6}, max gap to dense solve {gap:.1e}\n");
    }
    let pairs = n_shapley(&game, 2)?;
    out += &format!("phi_main {:?}\n", pairs.phi_main());
    out += &format!("phi_01 {:.4}, phi_12 {:.4}\n", pairs.phi_pair()[0][1], pairs.phi_pair()[1][2]);
    out += &format!("interaction index of {{1,2}}: {:.4}\n", shapley_interaction_index(&game, 0b0110)?);
    Ok(out)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    print!("{}", run_example()?);
    Ok(())
}
