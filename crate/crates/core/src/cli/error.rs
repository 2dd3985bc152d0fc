use std::fmt::Debug;
use std::path::Path;

use serde::Serialize;

use crate::bridge::BridgeError;
use crate::coalition::CoalitionError;
use crate::model::ModelError;
use crate::shnap::ShnapError;
use crate::snap::SnapError;
use crate::stats::StatsError;
use crate::volume::VolumeError;

/// Failure reported as `{"error": {"module", "code", "message"}}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CliError {
    pub module: String,
    pub code: String,
    pub message: String,
}

impl CliError {
    pub fn new(module: &str, code: &str, message: impl Into<String>) -> Self {
        Self {
            module: module.into(),
            code: code.into(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        Self::new("cli", "io", format!("{}: {e}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}: {}", self.module, self.code, self.message)
    }
}

impl std::error::Error for CliError {}

/// Kebab-case name of an enum variant, from its `Debug` form.
fn variant_code(e: &impl Debug) -> String {
    let dbg = format!("{e:?}");
    let name: String = dbg.chars().take_while(|c| c.is_alphanumeric()).collect();
    let mut out = String::new();
    for (i, c) in name.chars().enumerate() {
        if c.is_uppercase() {
            if i > 0 {
                out.push('-');
            }
            out.extend(c.to_lowercase());
        } else {
            out.push(c);
        }
    }
    out
}

macro_rules! module_error {
    ($ty:ty, $module:literal) => {
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                CliError::new($module, &variant_code(&e), e.to_string())
            }
        }
    };
}

module_error!(BridgeError, "bridge");
module_error!(CoalitionError, "coalition");
module_error!(ModelError, "model");
module_error!(ShnapError, "shnap");
module_error!(SnapError, "snap");
module_error!(StatsError, "stats");
module_error!(VolumeError, "volume");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn codes_are_kebab_case() {
        let e: CliError = ShnapError::NoRuns.into();
        assert_eq!((e.module.as_str(), e.code.as_str()), ("shnap", "no-runs"));
        let e: CliError = StatsError::InvalidInput("x".into()).into();
        assert_eq!(e.code, "invalid-input");
        let v: serde_json::Value = serde_json::from_str(&e.to_json()).unwrap();
        assert_eq!(v["error"]["module"], "stats");
    }
}
