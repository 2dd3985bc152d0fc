use std::path::Path;

use clap::ValueEnum;
use serde_json::{json, Value};

use super::CliError;
use crate::stats::{exact_binomial_test, ols_fit, pick_threshold, response_bias_c, tukey_hsd, two_way_anova};

/// Tests reachable from `nall stats`, with their CSV columns:
/// binomial `correct`; response-bias `signal,response`; anova `a,b,y`;
/// tukey `group,y`; ols `y` plus predictor columns (an intercept is
/// added); threshold `score,label`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum StatsTest {
    Binomial,
    ResponseBias,
    Anova,
    Tukey,
    Ols,
    Threshold,
}

struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::new("stats", "input", msg)
}

impl Table {
    fn read(path: &Path) -> Result<Self, CliError> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| bad(format!("{}: {e}", path.display())))?;
        let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.iter().map(String::from).collect();
        let rows = rdr
            .records()
            .map(|r| r.map(|r| r.iter().map(String::from).collect()))
            .collect::<Result<_, _>>()
            .map_err(|e| bad(e.to_string()))?;
        Ok(Self { headers, rows })
    }

    fn index(&self, name: &str) -> Result<usize, CliError> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("missing column {name:?}")))
    }

    fn text(&self, name: &str) -> Result<Vec<String>, CliError> {
        let i = self.index(name)?;
        Ok(self.rows.iter().map(|r| r[i].clone()).collect())
    }

    fn numbers(&self, name: &str) -> Result<Vec<f64>, CliError> {
        self.text(name)?
            .iter()
            .enumerate()
            .map(|(row, s)| s.parse().map_err(|_| bad(format!("row {}: {name}={s:?} is not a number", row + 1))))
            .collect()
    }

    fn flags(&self, name: &str) -> Result<Vec<bool>, CliError> {
        self.text(name)?
            .iter()
            .enumerate()
            .map(|(row, s)| match s.to_ascii_lowercase().as_str() {
                "1" | "true" | "yes" => Ok(true),
                "0" | "false" | "no" => Ok(false),
                _ => Err(bad(format!("row {}: {name}={s:?} is not a 0/1 flag", row + 1))),
            })
            .collect()
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

pub(super) fn run_stats(test: StatsTest, path: &Path, p0: f64, target: f64) -> Result<Value, CliError> {
    let t = Table::read(path)?;
    Ok(match test {
        StatsTest::Binomial => {
            let c = t.flags("correct")?;
            let k = c.iter().filter(|&&x| x).count() as u64;
            to_value(&exact_binomial_test(k, c.len() as u64, p0)?)
        }
        StatsTest::ResponseBias => {
            let (s, r) = (t.flags("signal")?, t.flags("response")?);
            let mut n = [0u64; 4];
            for (&s, &r) in s.iter().zip(&r) {
                n[match (s, r) {
                    (true, true) => 0,
                    (true, false) => 1,
                    (false, true) => 2,
                    (false, false) => 3,
                }] += 1;
            }
            to_value(&response_bias_c(n[0], n[1], n[2], n[3])?)
        }
        StatsTest::Anova => to_value(&two_way_anova(&t.numbers("y")?, &t.text("a")?, &t.text("b")?)?),
        StatsTest::Tukey => {
            let (g, y) = (t.text("group")?, t.numbers("y")?);
            let mut names: Vec<String> = Vec::new();
            let mut groups: Vec<Vec<f64>> = Vec::new();
            for (g, y) in g.into_iter().zip(y) {
                let i = names.iter().position(|n| *n == g).unwrap_or_else(|| {
                    names.push(g);
                    groups.push(Vec::new());
                    names.len() - 1
                });
                groups[i].push(y);
            }
            json!({ "groups": names, "result": to_value(&tukey_hsd(&groups)?) })
        }
        StatsTest::Ols => {
            let y = t.numbers("y")?;
            let predictors: Vec<String> = t.headers.iter().filter(|h| *h != "y").cloned().collect();
            let cols = predictors.iter().map(|p| t.numbers(p)).collect::<Result<Vec<_>, _>>()?;
            let design: Vec<Vec<f64>> = (0..y.len())
                .map(|i| std::iter::once(1.0).chain(cols.iter().map(|c| c[i])).collect())
                .collect();
            let names: Vec<String> = std::iter::once("intercept".to_string()).chain(predictors).collect();
            json!({ "terms": names, "result": to_value(&ols_fit(&design, &y)?) })
        }
        StatsTest::Threshold => to_value(&pick_threshold(&t.numbers("score")?, &t.flags("label")?, target)?),
    })
}
