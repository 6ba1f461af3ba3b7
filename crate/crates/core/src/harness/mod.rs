//! Config-driven Monte-Carlo studies: presets, runner, CSV and SVG output.

pub mod config;
pub mod plots;
pub mod study;

pub use config::{ConfigError, StudyConfig, StudyKind};
pub use plots::{emit_plots, render_plots};
pub use study::{run_study, trace_study, write_outputs, EstimatorResult, IbStats, StudyReport};

/// Shipped presets as `(name, TOML source)`.
///
/// `paper-*` use the published study settings verbatim, `desk-*` are the
/// scaled versions (scale factors are stated at the top of each file) and the
/// `*-small` presets back the `demo` command.
pub const PRESETS: &[(&str, &str)] = &[
    ("desk-lasso", include_str!("../../presets/desk-lasso.toml")),
    ("desk-logistic", include_str!("../../presets/desk-logistic.toml")),
    ("desk-logistic-contaminated", include_str!("../../presets/desk-logistic-contaminated.toml")),
    ("desk-negbin", include_str!("../../presets/desk-negbin.toml")),
    ("desk-synthetic", include_str!("../../presets/desk-synthetic.toml")),
    ("lasso-small", include_str!("../../presets/lasso-small.toml")),
    ("logistic-small", include_str!("../../presets/logistic-small.toml")),
    ("negbin-small", include_str!("../../presets/negbin-small.toml")),
    ("paper-lasso-i-100", include_str!("../../presets/paper-lasso-i-100.toml")),
    ("paper-lasso-i-600", include_str!("../../presets/paper-lasso-i-600.toml")),
    ("paper-lasso-i-binary-100", include_str!("../../presets/paper-lasso-i-binary-100.toml")),
    ("paper-lasso-i-binary-600", include_str!("../../presets/paper-lasso-i-binary-600.toml")),
    ("paper-lasso-ii-100", include_str!("../../presets/paper-lasso-ii-100.toml")),
    ("paper-lasso-ii-600", include_str!("../../presets/paper-lasso-ii-600.toml")),
    ("paper-lasso-ii-binary-100", include_str!("../../presets/paper-lasso-ii-binary-100.toml")),
    ("paper-lasso-ii-binary-600", include_str!("../../presets/paper-lasso-ii-binary-600.toml")),
    ("paper-logistic-i", include_str!("../../presets/paper-logistic-i.toml")),
    ("paper-logistic-ii", include_str!("../../presets/paper-logistic-ii.toml")),
    ("paper-negbin-i", include_str!("../../presets/paper-negbin-i.toml")),
    ("paper-negbin-ii", include_str!("../../presets/paper-negbin-ii.toml")),
    ("synthetic-small", include_str!("../../presets/synthetic-small.toml")),
];

pub fn preset_source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

/// Parses a shipped preset.
pub fn preset(name: &str) -> crate::Result<StudyConfig> {
    let src = preset_source(name).ok_or_else(|| {
        let known: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
        crate::Error::Config(format!("unknown preset `{name}`; known: {}", known.join(", ")))
    })?;
    Ok(StudyConfig::from_toml_str(src)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for (name, _) in PRESETS {
            preset(name).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(preset("nope").is_err());
    }

    #[test]
    fn full_size_presets_carry_published_settings() {
        let l1 = preset("paper-logistic-i").unwrap();
        assert_eq!((l1.n, l1.p, l1.h, l1.r, l1.delta), (200, 20, 500, 1000, 0.05));
        assert_eq!(&l1.theta0[..5], &[0.0, 5.0, 5.0, -7.0, -7.0]);
        assert!(l1.theta0[5..].iter().all(|v| *v == 0.0));
        let l2 = preset("paper-logistic-ii").unwrap();
        assert_eq!((l2.n, l2.h, l2.theta0[0]), (300, 400, 5.0));
        let nb = preset("paper-negbin-ii").unwrap();
        assert_eq!((nb.n, nb.p, nb.h, nb.alpha0), (150, 15, 500, Some(0.8)));
        assert_eq!(&nb.theta0[..3], &[1.0, 2.0, -1.0]);
        let la = preset("paper-lasso-ii-binary-100").unwrap();
        assert_eq!((la.n, la.p, la.h), (100, 500, 250));
        assert_eq!(la.theta0.iter().filter(|v| **v != 0.0).count(), 20);
        assert_eq!(la.design.binary_columns, vec![1, 2, 15, 16, 17, 18, 19, 20]);
        // 2.5 √(ln p / n) under (1/2n)·RSS is 5 √(ln p / n) under (1/n)·RSS
        assert!((la.lambda.unwrap() - 5.0 * ((500f64).ln() / 100.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn desk_presets_match_scaled_sizes() {
        let l = preset("desk-logistic").unwrap();
        assert_eq!((l.p, l.n, l.h, l.r), (10, 200, 100, 200));
        let nb = preset("desk-negbin").unwrap();
        assert_eq!((nb.p, nb.n, nb.h, nb.r, nb.alpha0), (5, 150, 100, 200, Some(2.0)));
        let la = preset("desk-lasso").unwrap();
        assert_eq!((la.p, la.n, la.h, la.r), (50, 100, 50, 100));
    }
}
