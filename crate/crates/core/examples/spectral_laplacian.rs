//! The fractional Laplacian as a Fourier multiplier: eigenmodes, constants
//! and the V-inner product on a periodic box.

use std::f64::consts::PI;

use nehari::grid::{Field, Grid};

fn main() -> nehari::Result<()> {
    let grid = Grid::new(1, 256, PI, 0.4)?;
    println!("h = {:.6}, |Ω| = {:.6}", grid.spacing(), grid.measure());

    for k in [1.0, 3.0, 8.0] {
        let u = Field::from_fn(&grid, |x| (k * x[0]).cos());
        let lu = grid.fractional_laplacian(&u)?;
        // cos(kx) is an eigenfunction with eigenvalue |k|^{2s}
        let expected = k.powf(2.0 * grid.order());
        let err = lu.zip_map(&u, |a, b| a - expected * b).max_abs();
        println!("k = {k}: eigenvalue {expected:.6}, max error {err:.1e}");
    }

    let ones = Field::constant(&grid, 1.0);
    println!("|(-Δ)^s 1| = {:.1e}", grid.fractional_laplacian(&ones)?.max_abs());

    let potential = Field::from_fn(&grid, |x| 1.0 + 0.15 * x[0] * x[0]);
    let bump = Field::from_fn(&grid, |x| (-x[0] * x[0]).exp());
    let norm_sq = grid.inner_product_v(&potential, &bump, &bump)?;
    println!("‖bump‖_V² = {norm_sq:.6}, ∫ bump = {:.6} (√π = {:.6})", grid.integrate(&bump)?, PI.sqrt());

    // two dimensions, s up to 1
    let grid2 = Grid::new(2, 32, PI, 0.9)?;
    let u = Field::from_fn(&grid2, |x| (2.0 * x[0]).cos() * x[1].cos());
    let lu = grid2.fractional_laplacian(&u)?;
    let expected = 5f64.powf(0.9);
    println!("2D mode (2,1): eigenvalue {expected:.6}, max error {:.1e}", lu.zip_map(&u, |a, b| a - expected * b).max_abs());
    Ok(())
}
