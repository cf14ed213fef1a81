//! Builds an experiment config in code and prints the JSON the `benchmark`
//! and `sweep` subcommands read.

use bliss_cli::config::{ExperimentConfig, MapSource, RandomMapSpec};
use bliss_cli::maps::RandomMapParams;

fn main() {
    let mut config = ExperimentConfig {
        maps: vec![MapSource("standard".into()), MapSource("narrow".into())],
        random_maps: Some(RandomMapSpec { seed: 7, count: 10, params: RandomMapParams::default() }),
        n_runs: 25,
        delta_sweep: Some(vec![0.01, 0.05, 0.1, 0.2, 0.4]),
        ..ExperimentConfig::default()
    };
    config.execution.time_limit = 60.0;
    config.validate().unwrap();
    print!("{}", config.to_json());
}
