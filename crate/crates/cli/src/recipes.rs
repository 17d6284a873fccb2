//! Shipped recipe configs, one per published result.

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const RECIPES: &[(&str, &str)] = &[
    ("confinement-fine", include_str!("../recipes/confinement-fine.toml")),
    ("confinement-map", include_str!("../recipes/confinement-map.toml")),
    ("confinement-return", include_str!("../recipes/confinement-return.toml")),
    ("confinement-snapshots", include_str!("../recipes/confinement-snapshots.toml")),
    ("qze-limit", include_str!("../recipes/qze-limit.toml")),
    ("realistic-confinement", include_str!("../recipes/realistic-confinement.toml")),
    ("realistic-pi-cat", include_str!("../recipes/realistic-pi-cat.toml")),
    ("realistic-synthesis", include_str!("../recipes/realistic-synthesis.toml")),
    ("realistic-three-component", include_str!("../recipes/realistic-three-component.toml")),
    ("revival-s4", include_str!("../recipes/revival-s4.toml")),
    ("revival-s6", include_str!("../recipes/revival-s6.toml")),
    ("semitransparent-cat", include_str!("../recipes/semitransparent-cat.toml")),
    ("synthesis-ideal", include_str!("../recipes/synthesis-ideal.toml")),
    ("transparency-map", include_str!("../recipes/transparency-map.toml")),
    ("tweezers-map", include_str!("../recipes/tweezers-map.toml")),
    ("tweezers-pull-2pi", include_str!("../recipes/tweezers-pull-2pi.toml")),
    ("tweezers-pull-pi", include_str!("../recipes/tweezers-pull-pi.toml")),
    ("tweezers-stretch", include_str!("../recipes/tweezers-stretch.toml")),
];

pub fn text(name: &str) -> CliResult<&'static str> {
    RECIPES.iter().find(|(n, _)| *n == name).map(|(_, t)| *t).ok_or_else(|| {
        let known: Vec<&str> = RECIPES.iter().map(|(n, _)| *n).collect();
        CliError::Config(format!("recipe: unknown `{name}`, expected one of {}", known.join(", ")))
    })
}

pub fn load(name: &str) -> CliResult<RunConfig> {
    RunConfig::from_toml(text(name)?)
}
