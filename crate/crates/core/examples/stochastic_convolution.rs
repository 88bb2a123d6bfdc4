//! The two stochastic convolution approximants, evaluated in O(1) per step
//! with running sums, on one sampled noise path.

use fracwave::fbm::{Hurst, NoiseCovariance, NoiseStreams, TimeGrid};
use fracwave::noise::{ConvolutionAccumulator, NoiseBundle, NoiseParams};
use fracwave::spectral::EigenBasis;

fn main() -> fracwave::Result<()> {
    let (modes, steps) = (8, 64);
    let basis = EigenBasis::new(modes)?;
    let params = NoiseParams::new(&basis, 0.8, 0.5)?;
    let grid = TimeGrid::new(0.5, steps)?;
    let cov = NoiseCovariance::assemble(grid, Hurst::new(0.7)?, true)?;
    let noise = NoiseBundle::sample(&cov, &NoiseStreams::new(1), 0, modes);

    let mut acc = ConvolutionAccumulator::new(&params, grid.tau(), true);
    let mut d = vec![0.0; modes];
    let mut w = vec![0.0; modes];
    println!(
        "{:>6} {:>12} {:>12} {:>12}",
        "t", "|low|", "|high|", "|velocity|"
    );
    for k in 0..steps {
        for (j, mode) in noise.modes().iter().enumerate() {
            d[j] = mode.increments()[k];
            w[j] = mode.weighted().expect("sampled with weights")[k];
        }
        acc.absorb_step(k, &d, Some(&w))?;
        if (k + 1) % 8 == 0 {
            let t = grid.node(k + 1);
            let low = acc.low_order_convolution(t);
            let high = acc.high_order_convolution(t)?;
            let vel = acc.velocity_convolution(t);
            println!(
                "{t:>6.3} {:>12.4e} {:>12.4e} {:>12.4e}",
                low.norm(),
                high.norm(),
                vel.norm()
            );
        }
    }
    Ok(())
}
