//! Command-line driver. All numerics live in the library; this file only
//! parses arguments, loads the configuration, and maps outcomes to exit
//! codes: 0 pass, 1 threshold failure, 2 configuration error, 3 blow-up.

use limitlbm::config::{parse_config, StencilKind};
use limitlbm::driver::run_experiment;
use limitlbm::error::Error;
use limitlbm::lattice::verify_quadrature;
use std::process::ExitCode;

const USAGE: &str = "\
usage:
  limitlbm run <config-path>       run the experiment a config file describes
  limitlbm check-stencil <name>    verify quadrature identities (d2q9 | d3q19)
";

const QUADRATURE_TOL: f64 = 1e-14;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let code = match args.first().map(String::as_str) {
        Some("run") if args.len() == 2 => cmd_run(&args[1]),
        Some("check-stencil") if args.len() == 2 => cmd_check_stencil(&args[1]),
        Some("-h" | "--help" | "help") => {
            print!("{USAGE}");
            0
        }
        _ => {
            eprint!("{USAGE}");
            2
        }
    };
    ExitCode::from(code)
}

fn cmd_run(path: &str) -> u8 {
    let text = match std::fs::read_to_string(path) {
        Ok(text) => text,
        Err(err) => {
            eprintln!("error: cannot read {path}: {err}");
            return 2;
        }
    };
    let mut cfg = match parse_config(&text) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("error: {err}");
            return 2;
        }
    };
    if let Ok(value) = std::env::var("LIMITLBM_WORKERS") {
        match value.parse::<usize>() {
            Ok(w) if w >= 1 => cfg.worker_count = w,
            _ => {
                eprintln!("error: LIMITLBM_WORKERS must be a positive integer, got {value:?}");
                return 2;
            }
        }
    }
    match run_experiment(&cfg) {
        Ok(outcome) => {
            for check in &outcome.checks {
                println!(
                    "{}: {} ({})",
                    check.name,
                    if check.passed { "PASS" } else { "FAIL" },
                    check.detail
                );
            }
            for note in &outcome.notes {
                println!("note: {note}");
            }
            println!("RESULT: {}", outcome.status);
            if let Some(failed) = outcome.first_failure() {
                eprintln!("threshold failed: {}", failed.name);
            }
            outcome.status.code() as u8
        }
        Err(err @ (Error::BlowUp { .. } | Error::DegenerateDensity { .. })) => {
            eprintln!("error: {err}");
            3
        }
        Err(err) => {
            eprintln!("error: {err}");
            2
        }
    }
}

fn cmd_check_stencil(name: &str) -> u8 {
    let kind = match name {
        "d2q9" => StencilKind::D2q9,
        "d3q19" => StencilKind::D3q19,
        other => {
            eprintln!("error: unknown stencil {other:?} (expected d2q9 or d3q19)");
            return 2;
        }
    };
    let report = verify_quadrature(&kind.build());
    for (order, dev) in report.max_deviation.iter().enumerate() {
        println!("moment order {order}: max deviation {dev:.3e}");
    }
    let worst = report.max_overall();
    if worst <= QUADRATURE_TOL {
        println!("{name}: PASS (worst {worst:.3e} <= {QUADRATURE_TOL:.1e})");
        0
    } else {
        println!("{name}: FAIL (worst {worst:.3e} > {QUADRATURE_TOL:.1e})");
        1
    }
}
