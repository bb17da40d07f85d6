//! Runs the SAFR, SFR and conventional schemes on a 3-bus generator trip through
//! the full pipeline and prints the comparison table.

use ufls::harness::{cmd_pipeline, RunConfig};
use ufls::uflsopt::{HighsBackend, UflsOptConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = env!("CARGO_MANIFEST_DIR");
    let out = std::env::temp_dir().join("ufls-scheme-comparison");
    let scenario = out.join("gen_trip.json");
    std::fs::create_dir_all(&out)?;
    std::fs::write(
        &scenario,
        r#"{"dt": 0.01, "horizon_s": 15.0, "events": [{"t": 0.5, "kind": "trip_generator", "gen": 1}]}"#,
    )?;
    let mut cfg = RunConfig::new(format!("{dir}/data/three_bus.json"), vec![scenario], out.join("results"));
    cfg.optimizer = UflsOptConfig {
        n_stages: 2,
        horizon_s: 10.0,
        time_limit_s: 60.0,
        g_bar: 0.15,
        ..UflsOptConfig::with_dt(0.1)
    };
    let report = cmd_pipeline(&cfg, &HighsBackend::default())?;
    print!("{}", report.to_markdown());
    println!("artifacts in {}", cfg.out_dir.display());
    Ok(())
}
