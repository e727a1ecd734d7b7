//! Gaussian receivers: closed-form capacities and the converse region.

use covert_bc::capacity::covert_capacity_awgn;
use covert_bc::converse::{gaussian_converse_region, max_weight_gaussian};

fn main() -> covert_bc::Result<()> {
    let (n1, n2, sigma2) = (0.5, 2.0, 1.0);
    println!("L1* = {}, L2* = {}", covert_capacity_awgn(n1, sigma2)?, covert_capacity_awgn(n2, sigma2)?);
    let budget = max_weight_gaussian(1.0, 10_000, sigma2)?;
    println!("power budget {:.4} at n = 10^4", budget.alpha_bar);
    for (a, b) in gaussian_converse_region(n1, n2, &budget, 4)? {
        println!("  ({a:.4}, {b:.4})");
    }
    Ok(())
}
