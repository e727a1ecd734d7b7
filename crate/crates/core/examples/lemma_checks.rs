//! Numerical checks of the information-theoretic identities and inequalities.

use covert_bc::channel::Channel;
use covert_bc::converse::{conditional_epi, mrs_gerber_check, taylor_check};
use covert_bc::info::{kl_sandwich, sparse_mi_decomposition};

fn main() -> covert_bc::Result<()> {
    let ch = Channel::new(vec![vec![0.7, 0.2, 0.1], vec![0.2, 0.5, 0.3], vec![0.1, 0.3, 0.6]])?;
    let d = sparse_mi_decomposition(0.05, &[0.4, 0.6], &ch)?;
    println!("I = {:.12} linear - KL = {:.12} residual {:.1e}", d.mi, d.linear_term - d.kl_term, d.residual());

    let (lo, hi) = kl_sandwich(1e-3, &[0.4, 0.6], &ch)?;
    println!("KL sandwich at gamma=1e-3: [{lo:.4e}, {hi:.4e}]");

    let (lhs, h) = mrs_gerber_check(0.5, 0.1)?;
    println!("h_b(h_b^-1(0.5) * 0.1) = {lhs:.6} vs h = {h}");

    let (rem, bound) = taylor_check(0.2, 1e-3)?;
    println!("Taylor remainder {rem:.3e} <= {bound:.3e}");

    let (lhs, rhs) = conditional_epi(&[(0.5, vec![(0.5, -1.0), (0.5, 1.0)]), (0.5, vec![(1.0, 0.0)])], 0.5, 1.5)?;
    println!("EPI: {lhs:.4} >= {rhs:.4}");
    Ok(())
}
