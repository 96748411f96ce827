//! Config-driven experiment runner and certification suite.

mod certify;
mod config;
mod run;

pub use certify::{certify, random_instance, CertifyOptions, CertifyReport, RandomInstance, SuiteResult};
pub use config::{ExperimentConfig, InitSpec, InlineInstance, ModeName, Resolved, Source};
pub use run::{
    describe, output_dir, run_experiment, Check, OrientationRow, RolloutRow, RunOptions, RunReport, SensitivityRow,
    SummaryRow,
};

/// Formats with 9 significant digits, trailing zeros trimmed.
pub fn format_number(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x == 0.0 {
            "0".into()
        } else {
            format!("{x}")
        };
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).max(0) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        s = s.trim_end_matches('0').trim_end_matches('.').to_string();
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}
