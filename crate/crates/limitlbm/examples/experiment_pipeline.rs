//! Drives the full config-file pipeline the `limitlbm` binary exposes.
//!
//! Parses a configuration from text, runs the experiment it describes,
//! and prints the files it wrote plus the verdicts. A single-run study
//! also exports per-node population snapshots, which is the raw-data
//! escape hatch for external postprocessing.
//!
//! ```bash
//! cargo run --release --example experiment_pipeline
//! ```

use limitlbm::config::parse_config;
use limitlbm::driver::run_experiment;

fn main() {
    let out_dir = std::env::temp_dir().join("limitlbm_pipeline_demo");
    let text = format!(
        "\
# decaying vortex, three resolutions, defaults for U, L and t_end
case = taylor_green_2d
stencil = d2q9
N_list = 16 32 64
nu = 0.02
study = convergence
output_dir = {}
",
        out_dir.display()
    );
    let cfg = parse_config(&text).expect("config is well formed");
    let outcome = run_experiment(&cfg).expect("experiment runs");

    println!("wrote to {}:", out_dir.display());
    for f in &outcome.files {
        println!("  {}", f.display());
    }
    println!();
    for c in &outcome.checks {
        println!(
            "{}: {} ({})",
            c.name,
            if c.passed { "PASS" } else { "FAIL" },
            c.detail
        );
    }
    println!("status: {} (exit code {})", outcome.status, outcome.status.code());

    let snap_dir = std::env::temp_dir().join("limitlbm_pipeline_demo_snap");
    let text = format!(
        "\
case = taylor_green_2d
stencil = d2q9
N_list = 16
nu = 0.02
study = single_run
t_end = 0.05
output_dir = {}
",
        snap_dir.display()
    );
    let cfg = parse_config(&text).expect("config is well formed");
    let outcome = run_experiment(&cfg).expect("experiment runs");
    println!("\nsingle-run study wrote to {}:", snap_dir.display());
    for f in &outcome.files {
        println!("  {}", f.display());
    }
    let snapshot = std::fs::read_to_string(snap_dir.join("snapshot_N16.csv")).unwrap();
    let mut lines = snapshot.lines();
    println!("first snapshot lines:");
    for line in lines.by_ref().take(3) {
        println!("  {line}");
    }
}
