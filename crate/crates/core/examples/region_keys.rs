//! Region boundary, key requirements and a time-division plan.

use covert_bc::capacity::{covert_capacity_binary, key_stream_capacity};
use covert_bc::channel::Channel;
use covert_bc::region::{boundary, min_key_rate, time_division_plan, RegionSpec};

fn main() -> covert_bc::Result<()> {
    // warden sees more than either receiver, so keys are needed
    let warden = Channel::bsc(0.1);
    let l1 = covert_capacity_binary(&Channel::bsc(0.3), &warden)?.l_star;
    let l2 = covert_capacity_binary(&Channel::bsc(0.35), &warden)?.l_star;
    let lz = key_stream_capacity(&warden)?.l_star;
    let region = RegionSpec::two_user(l1, l2)?;
    println!("L1* = {l1:.4}, L2* = {l2:.4}, L_Z* = {lz:.4}");
    for p in boundary(&region, 5)? {
        let key = min_key_rate(p.rates[0], p.rates[1], &region, lz)?;
        println!("shares {:.2?}  rates {:.4?}  min key {key:.4}", p.shares, p.rates);
    }
    let plan = time_division_plan(0.5 * l1, 0.5 * l2, 1.0, 10_000, &region)?;
    println!(
        "plan: rho={:.2} blocks={:?} budgets=({:.2}, {:.2}) log M=({:.2}, {:.2})",
        plan.rho, plan.block_split, plan.delta_split.0, plan.delta_split.1, plan.log_m_targets.0, plan.log_m_targets.1
    );
    Ok(())
}
