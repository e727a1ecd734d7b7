//! Acceptance criteria 1-8. Runs without the libtest harness so every
//! criterion prints a PASS/FAIL line; exits non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use covert_bc::capacity::{covert_capacity_awgn, covert_capacity_binary, covert_capacity_bsc, covert_capacity_general, key_stream_capacity};
use covert_bc::channel::{BroadcastSpec, Channel};
use covert_bc::condition::{check_condition_binary, condition_map, CellVerdict};
use covert_bc::converse::{converse_sweep, lambda_sum_bound, max_weight, mrs_gerber_check, taylor_check};
use covert_bc::info::{kl_sandwich, sparse_mi_decomposition};
use covert_bc::region::{boundary, min_key_rate, time_division_plan, RegionSpec};
use covert_bc::sim::{run, sweep, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Independent closed forms used as oracles.

fn bern_kl(a: f64, b: f64) -> f64 {
    let t = |x: f64, y: f64| if x == 0.0 { 0.0 } else { x * (x / y).ln() };
    t(a, b) + t(1.0 - a, 1.0 - b)
}

/// `D(Bern(b + e) || Bern(b))` without cancellation for tiny `e`.
fn bern_kl_near(b: f64, e: f64) -> f64 {
    let a = b + e;
    a * (e / b).ln_1p() + (1.0 - a) * (-e / (1.0 - b)).ln_1p()
}

fn bern_chi2(a: f64, b: f64) -> f64 {
    (a - b) * (a - b) / (b * (1.0 - b))
}

fn hb(q: f64) -> f64 {
    let t = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.ln() };
    t(q) + t(1.0 - q)
}

fn conv(a: f64, b: f64) -> f64 {
    a * (1.0 - b) + (1.0 - a) * b
}

/// `L*` of the binary channel `[1-w0, w0; w1, 1-w1]` against the binary warden
/// `[1-z0, z0; z1, 1-z1]`, as P(Y=1) parameters.
fn binary_l_star(w0: f64, w1: f64, z0: f64, z1: f64) -> f64 {
    (2.0f64).sqrt() * bern_kl(1.0 - w1, w0) / bern_chi2(1.0 - z1, z0).sqrt()
}

fn bsc_l_star(p: f64, z0: f64, z1: f64) -> f64 {
    (1.0 - 2.0 * p) * ((1.0 - p) / p).ln() * (2.0 / bern_chi2(1.0 - z1, z0)).sqrt()
}

fn bsc_spec() -> BroadcastSpec {
    BroadcastSpec::new(Channel::bsc(0.1), Channel::bsc(0.2), Channel::bsc(0.3)).unwrap()
}

#[derive(Default)]
struct Check {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Check {
    fn expect(&mut self, ok: bool, what: impl Into<String>) {
        if !ok {
            self.failures.push(what.into());
        }
    }

    fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    fn within(&mut self, elapsed: Duration, limit_s: f64) {
        self.note(format!("{:.2}s", elapsed.as_secs_f64()));
        self.expect(elapsed.as_secs_f64() < limit_s, format!("runtime {:.2}s over {limit_s}s", elapsed.as_secs_f64()));
    }
}

fn random_binary_warden(rng: &mut ChaCha8Rng) -> (f64, f64) {
    loop {
        let z0: f64 = rng.random_range(0.02..0.98);
        let z1: f64 = rng.random_range(0.02..0.98);
        if (1.0 - z1 - z0).abs() > 0.05 {
            return (z0, z1);
        }
    }
}

fn c1(c: &mut Check) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_gb = 0.0f64;
    let mut worst_oracle = 0.0f64;
    for _ in 0..100 {
        let (w0, w1) = (rng.random_range(0.02..0.98), rng.random_range(0.02..0.98));
        let (z0, z1) = random_binary_warden(&mut rng);
        let (w, z) = (Channel::binary(w0, w1), Channel::binary(z0, z1));
        match (covert_capacity_binary(&w, &z), covert_capacity_general(&w, &z)) {
            (Ok(b), Ok(g)) => {
                worst_gb = worst_gb.max((g.l_star - b.l_star).abs());
                worst_oracle = worst_oracle.max((b.l_star - binary_l_star(w0, w1, z0, z1)).abs());
            }
            (b, g) => c.expect(false, format!("capacity error {b:?} {g:?}")),
        }
    }
    c.expect(worst_gb <= 1e-6, format!("general vs binary gap {worst_gb:e}"));
    c.expect(worst_oracle <= 1e-9, format!("binary vs oracle gap {worst_oracle:e}"));
    let l = covert_capacity_binary(&Channel::bsc(0.1), &Channel::bsc(0.3)).unwrap().l_star;
    c.expect((l - 2.847927).abs() <= 1e-5, format!("worked pair L* = {l}"));
    c.expect((l - bsc_l_star(0.1, 0.3, 0.3)).abs() <= 1e-12, "worked pair off closed form");
    c.note(format!("max |general-binary| {worst_gb:.1e}, worked L* {l:.7}"));
    c.within(start.elapsed(), 10.0);
}

fn c2(c: &mut Check) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let p = rng.random_range(0.005..0.5);
        let (z0, z1) = random_binary_warden(&mut rng);
        let z = Channel::binary(z0, z1);
        let closed = covert_capacity_bsc(p, &z).unwrap();
        let general = covert_capacity_binary(&Channel::bsc(p), &z).unwrap().l_star;
        worst = worst.max((closed - general).abs()).max((closed - bsc_l_star(p, z0, z1)).abs());
    }
    c.expect(worst <= 1e-9, format!("BSC closed form gap {worst:e}"));
    let mut exact = true;
    for _ in 0..100 {
        let (nj, s2) = (rng.random_range(0.01..10.0), rng.random_range(0.01..10.0));
        exact &= covert_capacity_awgn(nj, s2).unwrap() == s2 / nj;
    }
    c.expect(exact, "AWGN value differs from sigma2/N");
    c.note(format!("max BSC gap {worst:.1e}, AWGN exact"));
}

fn c3(c: &mut Check) {
    let start = Instant::now();
    let warden = Channel::bsc(0.3);
    for p in [0.01, 0.20] {
        let map = match condition_map(&Channel::bsc(p), &warden, 0.02) {
            Ok(m) => m,
            Err(e) => return c.expect(false, format!("map error {e}")),
        };
        let diag_ok = (0..map.side()).all(|i| matches!(map.get(i, i), CellVerdict::Satisfied | CellVerdict::Degenerate));
        let diag_live = (0..map.side()).filter(|&i| map.get(i, i) == CellVerdict::Satisfied).count();
        let (s, v, d) = (
            map.count(CellVerdict::Satisfied),
            map.count(CellVerdict::Violated),
            map.count(CellVerdict::Degenerate),
        );
        c.expect(diag_ok, format!("W=BSC({p}): violated diagonal cell"));
        c.expect(diag_live > 0, format!("W=BSC({p}): diagonal all degenerate"));
        c.expect(s > 0 && v > 0, format!("W=BSC({p}): satisfied {s}, violated {v}"));
        c.note(format!("BSC({p}) {s}/{v}/{d} sat/viol/degen"));
    }
    c.within(start.elapsed(), 60.0);
}

fn c4(c: &mut Check) {
    let ps: Vec<f64> = (1..=9).map(|i| i as f64 * 0.05).collect();
    let mut count = 0;
    for &p1 in &ps {
        for &p2 in &ps {
            let spec = BroadcastSpec::new(Channel::bsc(p1), Channel::bsc(p2), Channel::bsc(0.3)).unwrap();
            match check_condition_binary(&spec) {
                Ok(v) if v.satisfied => count += 1,
                other => c.expect(false, format!("BSC({p1})/BSC({p2}): {other:?}")),
            }
        }
    }
    c.note(format!("{count}/81 satisfied"));
}

fn c5(c: &mut Check) {
    let start = Instant::now();
    let spec = bsc_spec();
    let l1 = bsc_l_star(0.1, 0.3, 0.3);
    let l2 = bsc_l_star(0.2, 0.3, 0.3);
    let rows = match converse_sweep(&spec, 1.0, &[1.0], &[10_000, 1_000_000, 100_000_000]) {
        Ok(r) => r,
        Err(e) => return c.expect(false, format!("converse error {e}")),
    };
    let lambda = rows[0].lambda;
    c.expect((lambda * l2 - l1).abs() <= 1e-9, format!("lambda L2* = {} vs L1* = {l1}", lambda * l2));
    let last = rows[2].normalized;
    c.expect((last / l1 - 1.0).abs() <= 0.05, format!("n=1e8 normalized {last} vs {l1}"));
    c.expect(rows.windows(2).all(|w| w[1].normalized < w[0].normalized), "normalized bound not decreasing");
    c.note(format!(
        "normalized {:.4}/{:.4}/{:.4} vs L1* {l1:.4}",
        rows[0].normalized, rows[1].normalized, rows[2].normalized
    ));

    // envelope term over condition-passing specs
    let mut specs = Vec::new();
    for i in 1..=9 {
        for j in 1..=9 {
            specs.push(BroadcastSpec::new(Channel::bsc(0.05 * i as f64), Channel::bsc(0.05 * j as f64), Channel::bsc(0.3)).unwrap());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    while specs.len() < 81 + 40 {
        let w = Channel::binary(rng.random_range(0.02..0.98), rng.random_range(0.02..0.98));
        let v = Channel::binary(rng.random_range(0.02..0.98), rng.random_range(0.02..0.98));
        let (z0, z1) = random_binary_warden(&mut rng);
        let Ok(s) = BroadcastSpec::new(w, v, Channel::binary(z0, z1)) else { continue };
        if matches!(check_condition_binary(&s), Ok(v) if v.satisfied) {
            specs.push(s);
        }
    }
    let mut worst = f64::NEG_INFINITY;
    for s in &specs {
        let budget = max_weight(1.0, 1_000_000, &s.warden, &[1.0]).unwrap();
        match lambda_sum_bound(s, &budget) {
            Ok(b) => worst = worst.max(b.envelope_max),
            Err(e) => c.expect(false, format!("bound error {e}")),
        }
    }
    c.expect(worst <= 1e-9, format!("envelope term {worst:e}"));
    c.note(format!("max envelope term {worst:.1e} over {} specs", specs.len()));
    c.within(start.elapsed(), 30.0);
}

fn random_row(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..len).map(|_| rng.random_range(0.01..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| x / s).collect()
}

fn c6(c: &mut Check) {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..500 {
        let (k, outs) = (rng.random_range(1..=3), rng.random_range(2..=4));
        let ch = Channel::new((0..=k).map(|_| random_row(&mut rng, outs)).collect()).unwrap();
        let mix = random_row(&mut rng, k);
        let gamma = rng.random_range(0.0..=1.0);
        worst = worst.max(sparse_mi_decomposition(gamma, &mix, &ch).unwrap().residual());
    }
    c.expect(worst < 1e-12, format!("identity residual {worst:e}"));

    let mut bracket = true;
    for _ in 0..200 {
        let z0: f64 = rng.random_range(0.05..0.95);
        let z1 = loop {
            let z1: f64 = rng.random_range(0.05..0.95);
            if (1.0 - z1 - z0).abs() > 1e-3 {
                break z1;
            }
        };
        let warden = Channel::binary(z0, z1);
        for gamma in [1e-3, 5e-4, 1e-4, 1e-5, 1e-6] {
            let (lo, hi) = kl_sandwich(gamma, &[1.0], &warden).unwrap();
            let d = bern_kl_near(z0, gamma * (1.0 - z1 - z0));
            bracket &= lo <= d && d <= hi;
        }
    }
    c.expect(bracket, "KL sandwich failed to bracket");

    let mut gerber = true;
    for _ in 0..200 {
        let m = rng.random_range(1..=5);
        let pu = random_row(&mut rng, m);
        let qs: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..=1.0)).collect();
        let p = rng.random_range(0.0..=0.5);
        let h: f64 = pu.iter().zip(&qs).map(|(w, &q)| w * hb(q)).sum();
        let noisy: f64 = pu.iter().zip(&qs).map(|(w, &q)| w * hb(conv(q, p))).sum();
        gerber &= mrs_gerber_check(h, p).unwrap().0 <= noisy + 1e-12;
    }
    c.expect(gerber, "Mrs. Gerber inequality violated");

    let mut taylor = true;
    for _ in 0..500 {
        let q = rng.random_range(0.01..0.45);
        let xi = 10f64.powf(rng.random_range(-5.0..-3.0));
        let (rem, bound) = taylor_check(q, xi).unwrap();
        taylor &= rem <= bound + 4.0 * f64::EPSILON;
    }
    c.expect(taylor, "Taylor remainder over bound");
    c.note(format!("max identity residual {worst:.1e}"));
}

fn c7(c: &mut Check) {
    let bsc = bsc_spec();
    let lz_bsc = key_stream_capacity(&bsc.warden).unwrap().l_star;
    // warden far better than both receivers, so keys are needed
    let keyed = BroadcastSpec::new(Channel::bsc(0.3), Channel::bsc(0.35), Channel::bsc(0.1)).unwrap();
    let lz_keyed = key_stream_capacity(&keyed.warden).unwrap().l_star;
    let mut points = 0;
    let mut max_key = 0.0f64;
    for (spec, lz) in [(bsc, lz_bsc), (keyed, lz_keyed)] {
        let l1 = covert_capacity_binary(&spec.w, &spec.warden).unwrap().l_star;
        let l2 = covert_capacity_binary(&spec.v, &spec.warden).unwrap().l_star;
        let region = RegionSpec::two_user(l1, l2).unwrap();
        for p in boundary(&region, 201).unwrap() {
            points += 1;
            let sum = p.shares.iter().fold(0.0, |a, s| a + s);
            c.expect(sum == 1.0, format!("share sum {sum:e}"));
            let (r1, r2) = (p.rates[0], p.rates[1]);
            let key = min_key_rate(r1, r2, &region, lz).unwrap();
            let want = (lz - r1 - r2).max(0.0);
            c.expect((key - want).abs() <= 1e-12, format!("key rate {key} vs {want}"));
            max_key = max_key.max(key);
            let plan = time_division_plan(r1, r2, 1.0, 10_000, &region).unwrap();
            let (a, b) = plan.normalized_targets();
            c.expect((a + b - 1.0).abs() <= 1e-9, format!("plan off boundary: {}", a + b));
        }
    }
    c.expect(max_key > 0.0, "key-needing spec produced no positive key rate");
    c.note(format!("{points} boundary points, max key rate {max_key:.4}"));
}

fn c8(c: &mut Check) {
    let start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    pool.install(|| {
        let cfg = SimConfig::new(bsc_spec(), 10_000, 1.0, 0.5, 0.3, 10_000, 2024);
        let r = match run(&cfg) {
            Ok(r) => r,
            Err(e) => return c.expect(false, format!("simulate error {e}")),
        };
        for u in &r.users {
            c.expect(u.empirical_error < 0.1, format!("user {} error {}", u.user, u.empirical_error));
            c.note(format!("user {} error {} +/- {:.1e}", u.user, u.empirical_error, u.wilson_halfwidth));
        }
        c.expect(r.error_any < 0.1, format!("joint error {}", r.error_any));
        let kl = r.covertness.exact_ensemble_kl;
        c.expect(kl <= cfg.delta, format!("ensemble KL {kl}"));
        let floor = 1.0 - cfg.delta.sqrt() - 3.0 * r.warden.std_error;
        c.expect(r.warden.empirical_lrt_sum >= floor, format!("LRT sum {} < {floor}", r.warden.empirical_lrt_sum));
        c.note(format!("KL {kl:.5}, LRT sum {:.4} +/- {:.4}", r.warden.empirical_lrt_sum, r.warden.std_error));

        let scfg = SimConfig { trials: 2_000, ..cfg };
        match sweep(&scfg, &[2_500, 10_000, 40_000]) {
            Ok(rows) => {
                for w in rows.windows(2) {
                    let growth = w[1].log_m_sum / w[0].log_m_sum;
                    c.expect((growth / 2.0 - 1.0).abs() <= 0.15, format!("log M growth {growth} from n={}", w[0].n));
                }
                let sums: Vec<String> = rows.iter().map(|r| format!("{:.2}", r.log_m_sum)).collect();
                c.note(format!("sweep log M {}", sums.join("/")));
            }
            Err(e) => c.expect(false, format!("sweep error {e}")),
        }
    });
    c.within(start.elapsed(), 300.0);
}

type Criterion = (&'static str, fn(&mut Check));

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("covert-capacity cross-validation", c1),
        ("closed-form corollaries", c2),
        ("condition map", c3),
        ("BSC-pair condition", c4),
        ("converse meets achievability", c5),
        ("lemma suite", c6),
        ("region and keys", c7),
        ("simulator", c8),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let mut c = Check::default();
        f(&mut c);
        let status = if c.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("criterion {} {status}: {name} [{}]", i + 1, c.notes.join("; "));
        for msg in &c.failures {
            println!("    {msg}");
        }
        failed += usize::from(!c.failures.is_empty());
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

