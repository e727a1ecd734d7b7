//! Time-division optimality check and a coarse verdict map.

use covert_bc::channel::{BroadcastSpec, Channel};
use covert_bc::condition::{check_condition_binary, condition_map, CellVerdict};

fn main() -> covert_bc::Result<()> {
    let warden = Channel::bsc(0.3);
    let spec = BroadcastSpec::new(Channel::bsc(0.1), Channel::bsc(0.2), warden.clone())?;
    let v = check_condition_binary(&spec)?;
    println!("BSC(0.1)/BSC(0.2): satisfied={} lambda={:.6} dominant={}", v.satisfied, v.threshold, v.dominant_receiver);

    let spec = BroadcastSpec::new(Channel::bsc(0.2), Channel::binary(0.02, 0.7), warden.clone())?;
    let v = check_condition_binary(&spec)?;
    println!("BSC(0.2)/Z-like: satisfied={} worst ratio={:.4}", v.satisfied, v.worst_ratio);

    let map = condition_map(&Channel::bsc(0.2), &warden, 0.1)?;
    println!("map over q0 (rows) and q1 (columns), S satisfied, x violated, . degenerate");
    for i0 in 0..map.side() {
        let line: String = (0..map.side())
            .map(|i1| match map.get(i0, i1) {
                CellVerdict::Satisfied => 'S',
                CellVerdict::Violated => 'x',
                CellVerdict::Degenerate => '.',
            })
            .collect();
        println!("  {:.1} {line}", map.values[i0]);
    }
    Ok(())
}
