//! Low-order scheme convergence study in the layout of a rate table.
//!
//! ```bash
//! cargo run --release --example table1 -- [samples] [modes]
//! ```

use fracwave::experiments::{format_table, run_convergence_study, ExperimentPlan};
use fracwave::fbm::Hurst;
use fracwave::schemes::{ModelConfig, Scheme};

fn main() -> fracwave::Result<()> {
    let mut args = std::env::args().skip(1);
    let samples = args.next().and_then(|s| s.parse().ok()).unwrap_or(50);
    let modes = args.next().and_then(|s| s.parse().ok()).unwrap_or(256);

    let mut reports = Vec::new();
    for alpha in [0.6, 0.8, 1.0] {
        let base = ModelConfig::smooth_initial_data(alpha, Hurst::new(0.8)?, 0.25, 0.5, modes)?;
        let plan = ExperimentPlan {
            base,
            resolutions: vec![32, 64, 128],
            refinement: 2,
            samples,
            seed: 2024,
            scheme: Scheme::Low,
            noise: true,
        };
        let report = run_convergence_study(&plan)?;
        println!("alpha = {alpha}: {:.1} s", report.wall_time_secs);
        reports.push(report);
    }
    print!("{}", format_table(&reports));
    Ok(())
}
