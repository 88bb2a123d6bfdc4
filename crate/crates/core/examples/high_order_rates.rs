//! High-order scheme rates against the reference slope `1 + min{(γ-α)/α, H}`.
//!
//! ```bash
//! cargo run --release --example high_order_rates -- [samples]
//! ```

use fracwave::experiments::{run_convergence_study, ExperimentPlan};
use fracwave::fbm::Hurst;
use fracwave::schemes::{ModelConfig, Scheme};

fn main() -> fracwave::Result<()> {
    let samples = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(50);

    for hurst in [0.6, 0.8] {
        for alpha in [0.6, 0.8] {
            let base = ModelConfig::smooth_initial_data(alpha, Hurst::new(hurst)?, 1.5, 0.5, 64)?;
            let plan = ExperimentPlan {
                base,
                resolutions: vec![16, 32, 64, 128],
                refinement: 2,
                samples,
                seed: 7,
                scheme: Scheme::High,
                noise: true,
            };
            let report = run_convergence_study(&plan)?;
            println!(
                "H = {hurst}, alpha = {alpha}: slope {:.3} (reference {:.3}), {:.1} s",
                report.fitted_slope(),
                report.predicted.high,
                report.wall_time_secs
            );
            for row in &report.rows {
                let order = row.order.map(|o| format!("{o:.3}")).unwrap_or_default();
                println!("  tau = {:.5}  error = {:.4e}  {order}", row.tau, row.error);
            }
        }
    }
    Ok(())
}
