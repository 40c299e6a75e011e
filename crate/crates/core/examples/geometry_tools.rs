//! Geometry helpers: Gaussian ball probabilities, the cubic covering used for
//! the density bounds, and Monte Carlo union volumes.
//!
//!     cargo run --release --example geometry_tools

use bbm_lab::geometry::{
    cubic_covering, enlarged_packing_count, gaussian_ball_prob, union_volume, Ball,
};

fn main() -> bbm_lab::Result<()> {
    let ball = Ball::new(vec![1.0, 0.0], 0.5)?;
    for t in [0.5, 1.0, 4.0] {
        println!(
            "P(B_{t} in B((1,0), 0.5)) = {:.6}",
            gaussian_ball_prob(t, &[0.0, 0.0], &ball)?
        );
    }

    let region = Ball::centered(2, 3.0)?;
    let cover = cubic_covering(&region, 0.25)?;
    println!(
        "\ncovering of B(0, 3) in d = 2 by balls of radius 0.25: {} centers (bound {}), enlargement radius {:.4}",
        cover.count,
        enlarged_packing_count(3.0, 2.0 * 2f64.sqrt() * 0.25, 2),
        cover.enlargement_radius()
    );
    println!("covers (2.9, 0.3): {}", cover.covers(&[2.9, 0.3]));

    let lens = [0.0, 0.0, 1.0, 0.0];
    let v = union_volume(&lens, 2, 1.0, 0.001, 9)?;
    let exact = 2.0 * std::f64::consts::PI - (2.0 * std::f64::consts::PI / 3.0 - 3f64.sqrt() / 2.0);
    println!(
        "\ntwo unit discs at distance 1: {:.5} ± {:.5} from {} samples (exact {exact:.5})",
        v.volume, v.standard_error, v.samples
    );
    Ok(())
}
