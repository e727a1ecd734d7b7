//! Monte Carlo of the time-division scheme with a warden likelihood-ratio test.

use covert_bc::channel::{BroadcastSpec, Channel};
use covert_bc::sim::{run, sweep, SimConfig};

fn main() -> covert_bc::Result<()> {
    let spec = BroadcastSpec::new(Channel::bsc(0.1), Channel::bsc(0.2), Channel::bsc(0.3))?;
    let cfg = SimConfig::new(spec, 10_000, 1.0, 0.5, 0.3, 2_000, 2024);
    let r = run(&cfg)?;
    for u in &r.users {
        println!(
            "user {}: alpha={:.5} ln M={:.2} error={} (+/- {:.1e})",
            u.user, u.alpha, u.log_m, u.empirical_error, u.wilson_halfwidth
        );
    }
    println!(
        "ensemble KL {:.4} <= {}, warden error sum {:.3} (Pinsker floor {:.3})",
        r.covertness.exact_ensemble_kl, r.delta, r.warden.empirical_lrt_sum, r.covertness.detection_sum_bound
    );
    for row in sweep(&SimConfig { trials: 500, ..cfg }, &[2_500, 10_000, 40_000])? {
        println!("n={:>6} ln M1+ln M2={:.2} error={}", row.n, row.log_m_sum, row.error);
    }
    Ok(())
}
