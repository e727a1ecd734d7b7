//! Covert capacities of a BSC pair against a BSC warden.

use covert_bc::capacity::{covert_capacity_binary, covert_capacity_bsc, covert_capacity_general, key_stream_capacity};
use covert_bc::channel::Channel;

fn main() -> covert_bc::Result<()> {
    let warden = Channel::bsc(0.3);
    for p in [0.1, 0.2] {
        let r = covert_capacity_binary(&Channel::bsc(p), &warden)?;
        println!("BSC({p}): L* = {:.6} nats/sqrt(use), closed form {:.6}", r.l_star, covert_capacity_bsc(p, &warden)?);
    }
    println!("key stream: L_Z* = {:.6}", key_stream_capacity(&warden)?.l_star);

    // three-input legit channel needs the simplex search
    let w = Channel::new(vec![vec![0.8, 0.1, 0.1], vec![0.2, 0.7, 0.1], vec![0.1, 0.2, 0.7]])?;
    let z = Channel::new(vec![vec![0.6, 0.2, 0.2], vec![0.3, 0.5, 0.2], vec![0.3, 0.2, 0.5]])?;
    let r = covert_capacity_general(&w, &z)?;
    println!("ternary: L* = {:.6} at p = {:?}", r.l_star, r.argmax_p);
    Ok(())
}
