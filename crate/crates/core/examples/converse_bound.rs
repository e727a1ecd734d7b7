//! Converse bound on the weighted sum rate approaching the achievable corner.

use covert_bc::capacity::covert_capacity_binary;
use covert_bc::channel::{BroadcastSpec, Channel};
use covert_bc::converse::{bsc_converse_region, converse_sweep, max_weight};

fn main() -> covert_bc::Result<()> {
    let spec = BroadcastSpec::new(Channel::bsc(0.1), Channel::bsc(0.2), Channel::bsc(0.3))?;
    let l1 = covert_capacity_binary(&spec.w, &spec.warden)?.l_star;
    for row in converse_sweep(&spec, 1.0, &[1.0], &[10_000, 1_000_000, 100_000_000])? {
        println!("n={:>9}  normalized bound {:.4}  ratio to L1* {:.4}", row.n, row.normalized, row.normalized / l1);
    }
    let budget = max_weight(1.0, 1_000_000, &spec.warden, &[1.0])?;
    let pts = bsc_converse_region(0.1, 0.2, &budget, 4)?;
    println!("BSC outer region samples (normalized): {pts:.3?}");
    Ok(())
}
