// The analysis tests used on audit outcomes, on small fixed data sets.

use nall::stats::{exact_binomial_test, ols_fit, pick_threshold, response_bias_c, tukey_hsd, two_way_anova};

pub fn run_example() -> Result<String, Box<dyn std::error::Error>> {
    let mut out = String::new();
    let b = exact_binomial_test(23, 40, 0.5)?;
    out += &format!(
        "binomial 23/40: estimate {:.3}, p {:.4}, 95% CI [{:.3}, {:.3}]\n",
        b.estimate, b.p_two_sided, b.ci_low, b.ci_high
    );
    let c = response_bias_c(14, 6, 9, 11)?;
    out += &format!("response bias c {:.3} (p {:.3})\n", c.c, c.p_two_sided);

    let y = [4.1, 3.9, 5.2, 5.0, 6.1, 6.3, 4.0, 4.4, 5.9, 6.1, 7.8, 8.0];
    let a = ["lo", "lo", "lo", "lo", "lo", "lo", "hi", "hi", "hi", "hi", "hi", "hi"];
    let f = ["x", "x", "y", "y", "z", "z", "x", "x", "y", "y", "z", "z"];
    let t = two_way_anova(&y, &a, &f)?;
    out += &format!(
        "anova: F(a) {:.2}, F(b) {:.2}, F(ab) {:.2}\n",
        t.factor_a.f.unwrap_or(f64::NAN),
        t.factor_b.f.unwrap_or(f64::NAN),
        t.interaction.f.unwrap_or(f64::NAN)
    );

    let groups = vec![vec![1.0, 1.2, 0.9, 1.1], vec![1.6, 1.8, 1.5, 1.7], vec![1.1, 1.0, 1.3, 1.2]];
    for p in tukey_hsd(&groups)?.pairs {
        out += &format!("tukey {}-{}: diff {:.3}, p {:.4}\n", p.group_a, p.group_b, p.mean_diff, p.adjusted_p);
    }

    let d: Vec<f64> = (0..12).map(|i| i as f64 * 2.5).collect();
    let design: Vec<Vec<f64>> = d.iter().map(|&x| vec![1.0, x]).collect();
    let psi: Vec<f64> = d.iter().enumerate().map(|(i, x)| 0.4 - 0.02 * x + 0.01 * ((i * 7 % 5) as f64 - 2.0)).collect();
    let fit = ols_fit(&design, &psi)?;
    out += &format!("ols slope {:.4} (se {:.4}, p {:.2e})\n", fit.coefficients[1], fit.std_errors[1], fit.p_values[1]);

    let scores = [0.05, 0.1, 0.2, 0.35, 0.4, 0.5, 0.55, 0.7, 0.8, 0.9];
    let labels = [false, false, false, true, false, true, false, true, true, true];
    let th = pick_threshold(&scores, &labels, 0.95)?;
    out += &format!("threshold {:.2}: sensitivity {:.2}, specificity {:.2}\n", th.threshold, th.sensitivity, th.specificity);
    Ok(out)
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    print!("{}", run_example()?);
    Ok(())
}
