//! Drawing fBm increments `D_k` and weighted integrals `I_k`, aggregating them
//! to a coarser grid, and dumping a path as CSV.
//!
//! ```bash
//! cargo run --release --example fbm_noise -- [hurst] > path.csv
//! ```

use fracwave::fbm::{Hurst, NoiseCovariance, NoiseStreams, TimeGrid};

fn main() -> fracwave::Result<()> {
    let h: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0.75);
    let hurst = Hurst::new(h)?;
    let grid = TimeGrid::new(1.0, 16)?;
    let cov = NoiseCovariance::assemble(grid, hurst, true)?;
    eprintln!(
        "assembled {0}x{0} covariance, jitter {1:e}",
        cov.order(),
        cov.jitter()
    );

    let streams = NoiseStreams::new(42);
    let path = cov.sample(&mut streams.path_rng(0, 0));
    let coarse = path.coarsen(4)?;
    let total: f64 = path.increments().iter().sum();
    eprintln!(
        "β(1) from 16 increments {total:.6}, from 4 aggregated ones {:.6}",
        coarse.increments().iter().sum::<f64>()
    );
    eprintln!(
        "Var(I_k) = τ^(2H+2)/(2H+2) = {:.3e}",
        grid.tau().powf(2.0 * h + 2.0) / (2.0 * h + 2.0)
    );
    path.write_csv(std::io::stdout().lock())
}
