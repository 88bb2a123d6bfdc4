//! Noise-free runs against the exact solution of the linear problem, which
//! isolate the temporal order of each scheme.

use fracwave::experiments::{deterministic_order_study, format_table};
use fracwave::fbm::Hurst;
use fracwave::schemes::{ModelConfig, Nonlinearity, Scheme};

fn main() -> fracwave::Result<()> {
    let mut reports = Vec::new();
    for alpha in [0.6, 0.8] {
        let base = ModelConfig::smooth_initial_data(alpha, Hurst::new(0.8)?, 0.25, 0.5, 256)?
            .with_nonlinearity(Nonlinearity::Zero);
        for scheme in [Scheme::Low, Scheme::High] {
            reports.push(deterministic_order_study(
                &base,
                scheme,
                &[64, 128, 256, 512, 1024],
            )?);
        }
    }
    print!("{}", format_table(&reports));
    Ok(())
}
