// KL divergence between two bridge marginals over time, its Fisher
// information rate and the integral identity that links them.

use nall::bridge::{kl_blending_diagnostic, uniform_grid, GaussianParams, Schedule};

pub fn run_example() -> Result<String, Box<dyn std::error::Error>> {
    let p1 = GaussianParams::scalar(0.0, 1.0)?;
    let p2 = GaussianParams::scalar(1.5, 0.6)?;
    let curve = kl_blending_diagnostic(&p1, &p2, &Schedule::default(), &uniform_grid(10_001))?;
    let mut out = String::from("t      KL        J\n");
    for i in (0..curve.t.len()).step_by(2000) {
        out += &format!("{:.2}  {:.6}  {:.6}\n", curve.t[i], curve.kl[i], curve.rfi[i]);
    }
    let monotone = curve.kl.windows(2).all(|w| w[1] <= w[0]);
    out += &format!("non-increasing: {monotone}, max residual {:.2e}\n", curve.max_abs_residual());
    Ok(out)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    print!("{}", run_example()?);
    Ok(())
}
