//! Monte Carlo of time-division covert transmission to two receivers.
//!
//! Each user gets an i.i.d. sparse random codebook on its own sub-block. The
//! warden's covertness is accounted exactly over the codebook ensemble, whose
//! average output law is the product `Q_alpha^n`.
//!
//! Decoding is maximum likelihood. For a single non-zero input and binary
//! legitimate outputs with finite log-likelihood ratios, the error probability
//! is evaluated exactly over the codebook ensemble given the transmitted
//! codeword and the received word: competitors are independent of both, so
//! `P(error) = 1 - (1 - q)^(M - 1)` with `q` the chance that one competitor
//! scores at least as high. Other channels use an explicit codebook.

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution as _, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::factorial::ln_binomial;

use crate::capacity::covert_capacity_general;
use crate::channel::{BroadcastSpec, Channel};
use crate::converse::max_weight;
use crate::error::{Error, Result};
use crate::info::{detection_bounds, kl_slices};

/// Largest explicit codebook.
pub const MAX_EXPLICIT: u64 = 1 << 18;
/// Target false-alarm probability of the warden's test.
pub const FALSE_ALARM: f64 = 0.05;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decoder {
    /// Ensemble-exact evaluation when the channel allows it, explicit otherwise.
    #[default]
    Auto,
    Ensemble,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub spec: BroadcastSpec,
    pub n: u64,
    pub delta: f64,
    pub rho: f64,
    pub rates_fraction: f64,
    pub trials: u64,
    pub seed: u64,
    /// Sender and receivers share the codebook randomness as a secret key.
    #[serde(default = "yes")]
    pub key_model: bool,
    /// Fixed `ln M` per user in place of the capacity-derived targets.
    #[serde(default)]
    pub log_m_override: Option<[f64; 2]>,
    #[serde(default)]
    pub decoder: Decoder,
}

fn yes() -> bool {
    true
}

impl SimConfig {
    pub fn new(spec: BroadcastSpec, n: u64, delta: f64, rho: f64, rates_fraction: f64, trials: u64, seed: u64) -> Self {
        Self {
            spec,
            n,
            delta,
            rho,
            rates_fraction,
            trials,
            seed,
            key_model: true,
            log_m_override: None,
            decoder: Decoder::Auto,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::OutOfRange { what: "n", value: self.n as f64 });
        }
        if self.trials < 1 {
            return Err(Error::OutOfRange { what: "trials", value: 0.0 });
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::OutOfRange { what: "rho", value: self.rho });
        }
        if !(self.rates_fraction > 0.0 && self.rates_fraction <= 1.0) {
            return Err(Error::OutOfRange {
                what: "rates_fraction",
                value: self.rates_fraction,
            });
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::OutOfRange { what: "delta", value: self.delta });
        }
        Ok(())
    }
}

/// One user's random codebook. Codewords are generated on demand from the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Codebook {
    /// 1 or 2.
    pub user: usize,
    /// Sub-block length.
    pub n: u64,
    pub delta: f64,
    pub alpha: f64,
    /// Law of the non-zero symbol, over inputs `1..=K`.
    pub mix: Vec<f64>,
    pub l_star: f64,
    pub log_m: f64,
    /// `M` as a float; exact below `2^53`.
    pub size: f64,
    seed: u64,
}

impl Codebook {
    /// Sparse codeword: `(position, symbol)` for each non-zero symbol.
    pub fn codeword(&self, m: u64) -> Vec<(u32, u8)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(m);
        let mut out = Vec::new();
        if self.alpha <= 0.0 {
            return out;
        }
        let geo = Geometric::new(self.alpha).expect("alpha in (0, 1]");
        let pick = WeightedIndex::new(&self.mix).expect("valid mix");
        let mut pos = 0u64;
        loop {
            pos += geo.sample(&mut rng);
            if pos >= self.n {
                break;
            }
            out.push((pos as u32, (pick.sample(&mut rng) + 1) as u8));
            pos += 1;
        }
        out
    }

    /// Exact ensemble divergence `n D(Q_{alpha,p} || Q_0)`.
    pub fn ensemble_kl(&self, warden: &Channel) -> f64 {
        self.n as f64 * kl_slices(&sparse_output(self.alpha, &self.mix, warden), warden.no_input().probs())
    }
}

fn sparse_output(alpha: f64, mix: &[f64], ch: &Channel) -> Vec<f64> {
    let mut out: Vec<f64> = ch.no_input().probs().iter().map(|v| (1.0 - alpha) * v).collect();
    for (k, m) in mix.iter().enumerate() {
        for (o, r) in out.iter_mut().zip(ch.row(k + 1).probs()) {
            *o += alpha * m * r;
        }
    }
    out
}

/// Largest `a <= alpha_bar` with `n D(Q_{a,p} || Q_0) <= delta`.
fn admissible_alpha(alpha_bar: f64, n: u64, delta: f64, mix: &[f64], warden: &Channel) -> f64 {
    let q0 = warden.no_input().probs();
    let kl = |a: f64| n as f64 * kl_slices(&sparse_output(a, mix, warden), q0);
    if kl(alpha_bar) <= delta {
        return alpha_bar;
    }
    let (mut lo, mut hi) = (0.0, alpha_bar);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if kl(mid) <= delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn block_split(cfg: &SimConfig) -> [(u64, f64, f64); 2] {
    let n1 = (cfg.rho * cfg.n as f64).floor() as u64;
    let d1 = cfg.rho * cfg.delta;
    [(n1, d1, cfg.rho), (cfg.n - n1, cfg.delta - d1, 1.0 - cfg.rho)]
}

/// Codebooks for both users; `None` for a user with no share of the block.
pub fn build_codebooks(cfg: &SimConfig) -> Result<[Option<Codebook>; 2]> {
    cfg.validate()?;
    let spec = &cfg.spec;
    let mut out: [Option<Codebook>; 2] = [None, None];
    for (j, &(nj, dj, share)) in block_split(cfg).iter().enumerate() {
        if nj == 0 || share == 0.0 {
            continue;
        }
        let legit = if j == 0 { &spec.w } else { &spec.v };
        let cap = covert_capacity_general(legit, &spec.warden);
        let (l_star, mix) = match (&cap, cfg.log_m_override) {
            (Ok(c), _) => (c.l_star, c.argmax_p.clone()),
            (Err(_), Some(_)) => (f64::NAN, vec![1.0 / spec.warden.k() as f64; spec.warden.k()]),
            (Err(e), None) => return Err(e.clone()),
        };
        let budget = max_weight(dj, nj, &spec.warden, &mix)?;
        let alpha = admissible_alpha(budget.alpha_bar, nj, dj, &mix, &spec.warden);
        let target = match cfg.log_m_override {
            Some(o) => o[j],
            None => cfg.rates_fraction * (nj as f64 * dj).sqrt() * l_star,
        };
        let size = if target < 36.0 { target.exp().floor() } else { target.exp() };
        if !(size >= 2.0) {
            return Err(Error::EmptyCodebook {
                user: j + 1,
                log_m: target,
            });
        }
        out[j] = Some(Codebook {
            user: j + 1,
            n: nj,
            delta: dj,
            alpha,
            mix,
            l_star,
            log_m: size.ln(),
            size,
            seed: cfg.seed ^ 0x9e37_79b9_7f4a_7c15u64.wrapping_mul(j as u64 + 1),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserReport {
    pub user: usize,
    pub n: u64,
    pub alpha: f64,
    pub log_m: f64,
    pub l_star: f64,
    pub decoder: Decoder,
    /// Fraction of trials decoded wrongly.
    pub empirical_error: f64,
    /// Half-width of the 95% Wilson interval around `empirical_error`.
    pub wilson_halfwidth: f64,
    /// Mean conditional error probability over trials (ensemble decoder only).
    pub expected_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovertnessReport {
    pub delta: f64,
    /// `sum_j n_j D(Q_{alpha_j,p_j} || Q_0)`.
    pub exact_ensemble_kl: f64,
    /// `max(0, 1 - sqrt(exact_ensemble_kl))`.
    pub detection_sum_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WardenReport {
    pub threshold: f64,
    pub false_alarm: f64,
    pub missed_detection: f64,
    pub empirical_lrt_sum: f64,
    /// Monte Carlo standard error of `empirical_lrt_sum`.
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub n: u64,
    pub delta: f64,
    pub rho: f64,
    pub trials: u64,
    pub seed: u64,
    pub users: Vec<UserReport>,
    /// Fraction of trials where some user decoded wrongly.
    pub error_any: f64,
    pub error_any_halfwidth: f64,
    pub covertness: CovertnessReport,
    pub warden: WardenReport,
}

fn wilson_halfwidth(errors: u64, trials: u64) -> f64 {
    let z = Normal::standard().inverse_cdf(0.975);
    let t = trials as f64;
    let p = errors as f64 / t;
    z / (1.0 + z * z / t) * (p * (1.0 - p) / t + z * z / (4.0 * t * t)).sqrt()
}

/// Binomial pmf on `0..=n` by recurrence outward from the mode.
fn binomial_pmf(n: u64, p: f64) -> Vec<f64> {
    let mut pmf = vec![0.0; n as usize + 1];
    if p <= 0.0 {
        pmf[0] = 1.0;
        return pmf;
    }
    if p >= 1.0 {
        pmf[n as usize] = 1.0;
        return pmf;
    }
    let mode = (((n + 1) as f64 * p).floor() as u64).min(n);
    let m = mode as usize;
    pmf[m] = (ln_binomial(n, mode) + mode as f64 * p.ln() + (n - mode) as f64 * (-p).ln_1p()).exp();
    let r = p / (1.0 - p);
    for k in m..n as usize {
        pmf[k + 1] = pmf[k] * (n as usize - k) as f64 / (k + 1) as f64 * r;
        if pmf[k + 1] == 0.0 {
            break;
        }
    }
    for k in (1..=m).rev() {
        pmf[k - 1] = pmf[k] * k as f64 / (n as usize - k + 1) as f64 / r;
        if pmf[k - 1] == 0.0 {
            break;
        }
    }
    pmf
}

/// `tail[t] = P(X >= t)` for `t` in `0..=n+1`, summed from the top.
fn upper_tails(pmf: &[f64]) -> Vec<f64> {
    let mut tail = vec![0.0; pmf.len() + 1];
    for k in (0..pmf.len()).rev() {
        tail[k] = tail[k + 1] + pmf[k];
    }
    tail
}

/// Log-likelihood ratios of the binary-output legitimate channel, oriented so
/// that output `pos` has the positive ratio.
#[derive(Debug, Clone)]
struct BinaryLlr {
    pos: usize,
    l_pos: f64,
    l_neg: f64,
}

fn binary_llr(ch: &Channel) -> Option<BinaryLlr> {
    if ch.inputs() != 2 || ch.outputs() != 2 {
        return None;
    }
    let (w0, w1) = (ch.row(0).probs(), ch.row(1).probs());
    if w0.iter().chain(w1).any(|&v| v <= 0.0) {
        return None;
    }
    let l = [(w1[0] / w0[0]).ln(), (w1[1] / w0[1]).ln()];
    let pos = if l[1] >= l[0] { 1 } else { 0 };
    Some(BinaryLlr {
        pos,
        l_pos: l[pos],
        l_neg: l[1 - pos],
    })
}

/// Chance that one random competitor scores at least `score`, given `n_pos`
/// and `n_neg` received symbols of each kind.
fn competitor_tail(llr: &BinaryLlr, alpha: f64, n_pos: u64, n_neg: u64, score: f64) -> f64 {
    if llr.l_pos <= 0.0 {
        // constant channel: every competitor ties
        return 1.0;
    }
    let tail_u = upper_tails(&binomial_pmf(n_pos, alpha));
    let pmf_v = binomial_pmf(n_neg, alpha);
    let mut q = 0.0;
    for (v, &pv) in pmf_v.iter().enumerate() {
        if pv == 0.0 {
            continue;
        }
        let need = ((score - llr.l_neg * v as f64) / llr.l_pos - 1e-9).ceil();
        let t = if need <= 0.0 { 0 } else { need as usize };
        if t < tail_u.len() {
            q += pv * tail_u[t];
        }
    }
    q.min(1.0)
}

fn union_error(q: f64, size: f64) -> f64 {
    if q >= 1.0 {
        return 1.0;
    }
    -((size - 1.0) * (-q).ln_1p()).exp_m1()
}

fn binomial(rng: &mut ChaCha8Rng, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("valid binomial").sample(rng)
}

fn multinomial(rng: &mut ChaCha8Rng, n: u64, probs: &[f64], out: &mut [u64]) {
    let mut left = n;
    let mut mass = 1.0;
    for (i, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == probs.len() {
            out[i] += left;
            break;
        }
        let c = binomial(rng, left, (p / mass).clamp(0.0, 1.0));
        out[i] += c;
        left -= c;
        mass -= p;
    }
}

struct Prepared<'a> {
    book: &'a Codebook,
    legit: &'a Channel,
    llr: Option<BinaryLlr>,
    explicit: Option<Vec<Vec<(u32, u8)>>>,
    warden_llr: Vec<f64>,
}

fn prepare<'a>(book: &'a Codebook, cfg: &'a SimConfig) -> Result<Prepared<'a>> {
    let legit = if book.user == 1 { &cfg.spec.w } else { &cfg.spec.v };
    let llr = binary_llr(legit);
    let use_explicit = match cfg.decoder {
        Decoder::Explicit => true,
        Decoder::Ensemble => {
            if llr.is_none() {
                return Err(Error::Unsupported(
                    "ensemble decoding needs one non-zero input and finite binary log-likelihood ratios".into(),
                ));
            }
            false
        }
        Decoder::Auto => llr.is_none(),
    };
    let explicit = if use_explicit {
        if book.size > MAX_EXPLICIT as f64 {
            return Err(Error::Unsupported(format!(
                "explicit codebook for user {} has {:e} codewords (limit {})",
                book.user, book.size, MAX_EXPLICIT
            )));
        }
        let m = book.size as u64;
        Some((0..m).into_par_iter().map(|i| book.codeword(i)).collect())
    } else {
        None
    };
    let q0 = cfg.spec.warden.no_input().probs();
    let qa = sparse_output(book.alpha, &book.mix, &cfg.spec.warden);
    let warden_llr = qa.iter().zip(q0).map(|(a, b)| (a / b).ln()).collect();
    Ok(Prepared {
        book,
        legit,
        llr: if use_explicit { None } else { llr },
        explicit,
        warden_llr,
    })
}

struct TrialOutcome {
    errors: [bool; 2],
    expected: [f64; 2],
    llr_h1: f64,
    llr_h0: f64,
}

fn sample_row(rng: &mut ChaCha8Rng, row: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &p) in row.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    row.len() - 1
}

fn run_user(p: &Prepared, warden: &Channel, rng: &mut ChaCha8Rng, zc: &mut [u64]) -> (bool, f64) {
    let book = p.book;
    let n = book.n;
    if let Some(llr) = &p.llr {
        let k = binomial(rng, n, book.alpha);
        let w0 = p.legit.row(0).probs();
        let w1 = p.legit.row(1).probs();
        let pos_on_ones = binomial(rng, k, w1[llr.pos]);
        let pos_on_zeros = binomial(rng, n - k, w0[llr.pos]);
        let n_pos = pos_on_ones + pos_on_zeros;
        let score = llr.l_pos * pos_on_ones as f64 + llr.l_neg * (k - pos_on_ones) as f64;
        let q = competitor_tail(llr, book.alpha, n_pos, n - n_pos, score);
        let pe = union_error(q, book.size);
        let err = rng.random::<f64>() < pe;
        multinomial(rng, k, warden.row(1).probs(), zc);
        multinomial(rng, n - k, warden.no_input().probs(), zc);
        return (err, pe);
    }
    let books = p.explicit.as_ref().expect("explicit codebook");
    let m = rng.random_range(0..books.len());
    let x = &books[m];
    let mut sym = vec![0u8; n as usize];
    for &(i, s) in x {
        sym[i as usize] = s;
    }
    let y: Vec<usize> = sym.iter().map(|&s| sample_row(rng, p.legit.row(s as usize).probs())).collect();
    let mut ones = vec![0u64; p.legit.inputs()];
    for &s in &sym {
        ones[s as usize] += 1;
    }
    for (s, &c) in ones.iter().enumerate() {
        multinomial(rng, c, warden.row(s).probs(), zc);
    }
    // score relative to the all-zero word: (impossible count, finite log-likelihood)
    let lw = |yi: usize, s: u8| p.legit.row(s as usize).probs()[yi];
    let score = |cw: &[(u32, u8)]| -> (i64, f64) {
        let mut imp = 0i64;
        let mut fin = 0.0;
        for &(i, s) in cw {
            let yi = y[i as usize];
            let base = lw(yi, 0);
            if base == 0.0 {
                imp -= 1;
            } else {
                fin -= base.ln();
            }
            let v = lw(yi, s);
            if v == 0.0 {
                imp += 1;
            } else {
                fin += v.ln();
            }
        }
        (imp, fin)
    };
    let truth = score(x);
    let tol = 1e-9 * (1.0 + truth.1.abs());
    let err = books
        .iter()
        .enumerate()
        .any(|(j, cw)| j != m && {
            let s = score(cw);
            s.0 < truth.0 || (s.0 == truth.0 && s.1 >= truth.1 - tol)
        });
    (err, if err { 1.0 } else { 0.0 })
}

fn run_trial(cfg: &SimConfig, preps: &[Option<Prepared>; 2], trial: u64) -> TrialOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(trial);
    let warden = &cfg.spec.warden;
    let mut out = TrialOutcome {
        errors: [false; 2],
        expected: [0.0; 2],
        llr_h1: 0.0,
        llr_h0: 0.0,
    };
    let mut zc = vec![0u64; warden.outputs()];
    for (j, p) in preps.iter().enumerate() {
        if let Some(p) = p {
            zc.iter_mut().for_each(|c| *c = 0);
            let (e, pe) = run_user(p, warden, &mut rng, &mut zc);
            out.errors[j] = e;
            out.expected[j] = pe;
            out.llr_h1 += zc.iter().zip(&p.warden_llr).map(|(c, l)| *c as f64 * l).sum::<f64>();
            zc.iter_mut().for_each(|c| *c = 0);
            multinomial(&mut rng, p.book.n, warden.no_input().probs(), &mut zc);
            out.llr_h0 += zc.iter().zip(&p.warden_llr).map(|(c, l)| *c as f64 * l).sum::<f64>();
        }
    }
    out
}

fn warden_report(mut h0: Vec<f64>, h1: &[f64]) -> WardenReport {
    let t = h0.len();
    h0.sort_by(|a, b| a.partial_cmp(b).expect("finite llr"));
    let idx = ((1.0 - FALSE_ALARM) * t as f64).ceil() as usize;
    let threshold = h0[idx.clamp(1, t) - 1];
    let fa = h0.iter().filter(|&&v| v > threshold).count() as f64 / t as f64;
    let md = h1.iter().filter(|&&v| v <= threshold).count() as f64 / h1.len() as f64;
    let se = (fa * (1.0 - fa) / t as f64 + md * (1.0 - md) / h1.len() as f64).sqrt();
    WardenReport {
        threshold,
        false_alarm: fa,
        missed_detection: md,
        empirical_lrt_sum: fa + md,
        std_error: se,
    }
}

/// Run all trials. Reports are bit-identical for identical configurations.
pub fn run(cfg: &SimConfig) -> Result<SimReport> {
    let books = build_codebooks(cfg)?;
    let preps: [Option<Prepared>; 2] = [
        books[0].as_ref().map(|b| prepare(b, cfg)).transpose()?,
        books[1].as_ref().map(|b| prepare(b, cfg)).transpose()?,
    ];
    let outcomes: Vec<TrialOutcome> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, &preps, t))
        .collect();

    let mut users = Vec::new();
    for (j, b) in books.iter().enumerate() {
        if let Some(b) = b {
            let errs = outcomes.iter().filter(|o| o.errors[j]).count() as u64;
            let ensemble = preps[j].as_ref().is_some_and(|p| p.llr.is_some());
            users.push(UserReport {
                user: j + 1,
                n: b.n,
                alpha: b.alpha,
                log_m: b.log_m,
                l_star: b.l_star,
                decoder: if ensemble { Decoder::Ensemble } else { Decoder::Explicit },
                empirical_error: errs as f64 / cfg.trials as f64,
                wilson_halfwidth: wilson_halfwidth(errs, cfg.trials),
                expected_error: ensemble.then(|| outcomes.iter().map(|o| o.expected[j]).sum::<f64>() / cfg.trials as f64),
            });
        }
    }
    let any = outcomes.iter().filter(|o| o.errors[0] || o.errors[1]).count() as u64;
    let kl: f64 = books.iter().flatten().map(|b| b.ensemble_kl(&cfg.spec.warden)).sum();
    let h0: Vec<f64> = outcomes.iter().map(|o| o.llr_h0).collect();
    let h1: Vec<f64> = outcomes.iter().map(|o| o.llr_h1).collect();
    Ok(SimReport {
        n: cfg.n,
        delta: cfg.delta,
        rho: cfg.rho,
        trials: cfg.trials,
        seed: cfg.seed,
        users,
        error_any: any as f64 / cfg.trials as f64,
        error_any_halfwidth: wilson_halfwidth(any, cfg.trials),
        covertness: CovertnessReport {
            delta: cfg.delta,
            exact_ensemble_kl: kl,
            detection_sum_bound: detection_bounds(kl),
        },
        warden: warden_report(h0, &h1),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: u64,
    /// `sum_j ln M_j`.
    pub log_m_sum: f64,
    /// `sum_j ln M_j / (sqrt(n delta) L_j*)`.
    pub share_sum: f64,
    pub error: f64,
    pub error_halfwidth: f64,
    pub kl: f64,
}

/// [`run`] at each blocklength; `n_list` must be strictly increasing.
pub fn sweep(cfg: &SimConfig, n_list: &[u64]) -> Result<Vec<SweepRow>> {
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::OutOfRange {
            what: "n_list",
            value: f64::NAN,
        });
    }
    n_list
        .iter()
        .map(|&n| {
            let c = SimConfig { n, ..cfg.clone() };
            let r = run(&c)?;
            let scale = (n as f64 * cfg.delta).sqrt();
            Ok(SweepRow {
                n,
                log_m_sum: r.users.iter().map(|u| u.log_m).sum(),
                share_sum: r.users.iter().map(|u| u.log_m / (scale * u.l_star)).sum(),
                error: r.error_any,
                error_halfwidth: r.error_any_halfwidth,
                kl: r.covertness.exact_ensemble_kl,
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("n,log_m_sum,share_sum,error,kl\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{},{}\n", r.n, r.log_m_sum, r.share_sum, r.error, r.kl));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bsc_spec() -> BroadcastSpec {
        BroadcastSpec::new(Channel::bsc(0.1), Channel::bsc(0.2), Channel::bsc(0.3)).unwrap()
    }

    #[test]
    fn pmf_and_tails() {
        let pmf = binomial_pmf(50, 0.1);
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let exact = (ln_binomial(50, 3) + 3.0 * 0.1f64.ln() + 47.0 * 0.9f64.ln()).exp();
        assert!((pmf[3] - exact).abs() < 1e-15);
        let t = upper_tails(&pmf);
        assert!((t[0] - 1.0).abs() < 1e-12);
        assert_eq!(t[51], 0.0);
        assert_eq!(binomial_pmf(5, 0.0), vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn competitor_tail_matches_enumeration() {
        // brute force over (A, B) for a small BSC case
        let llr = binary_llr(&Channel::bsc(0.2)).unwrap();
        let (alpha, np, nn) = (0.3, 6u64, 5u64);
        let score = llr.l_pos * 2.0 + llr.l_neg * 1.0;
        let pa = binomial_pmf(np, alpha);
        let pb = binomial_pmf(nn, alpha);
        let mut brute = 0.0;
        for (a, wa) in pa.iter().enumerate() {
            for (b, wb) in pb.iter().enumerate() {
                if llr.l_pos * a as f64 + llr.l_neg * b as f64 >= score - 1e-9 {
                    brute += wa * wb;
                }
            }
        }
        let q = competitor_tail(&llr, alpha, np, nn, score);
        assert!((q - brute).abs() < 1e-14);
    }

    #[test]
    fn codebook_weight_matches_max_weight() {
        let cfg = SimConfig::new(bsc_spec(), 10_000, 1.0, 1.0, 0.3, 10, 7);
        let books = build_codebooks(&cfg).unwrap();
        let b = books[0].as_ref().unwrap();
        assert!(books[1].is_none());
        assert_eq!(b.n, 10_000);
        assert!((b.alpha - 0.0162019).abs() < 1e-4);
        assert!(b.alpha <= 0.016201942);
        assert!(b.ensemble_kl(&cfg.spec.warden) <= 1.0 + 1e-12);
    }

    #[test]
    fn tiny_rate_has_no_codebook() {
        let cfg = SimConfig::new(bsc_spec(), 100, 1.0, 0.5, 1e-6, 10, 7);
        assert!(matches!(build_codebooks(&cfg), Err(Error::EmptyCodebook { .. })));
    }

    #[test]
    fn codewords_are_reproducible() {
        let cfg = SimConfig::new(bsc_spec(), 2_000, 1.0, 0.5, 0.3, 10, 3);
        let b = build_codebooks(&cfg).unwrap()[0].clone().unwrap();
        assert_eq!(b.codeword(5), b.codeword(5));
        assert_ne!(b.codeword(5), b.codeword(6));
    }

    #[test]
    fn zero_budget_is_invisible() {
        let mut cfg = SimConfig::new(bsc_spec(), 200, 0.0, 1.0, 0.3, 50, 1);
        cfg.log_m_override = Some([2f64.ln() * 3.0, 0.0]);
        let r = run(&cfg).unwrap();
        assert_eq!(r.covertness.exact_ensemble_kl, 0.0);
        assert_eq!(r.covertness.detection_sum_bound, 1.0);
        assert_eq!(r.users[0].alpha, 0.0);
    }

    #[test]
    fn noiseless_receiver_decodes_everything() {
        let id = Channel::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let spec = BroadcastSpec::new(id.clone(), id, Channel::bsc(0.3)).unwrap();
        let mut cfg = SimConfig::new(spec, 400, 1.0, 0.5, 0.3, 200, 11);
        cfg.log_m_override = Some([16f64.ln(), 16f64.ln()]);
        let r = run(&cfg).unwrap();
        for u in &r.users {
            assert_eq!(u.decoder, Decoder::Explicit);
            assert_eq!(u.empirical_error, 0.0);
        }
    }

    #[test]
    fn explicit_and_ensemble_agree_on_average() {
        let mut cfg = SimConfig::new(bsc_spec(), 80, 0.3, 1.0, 0.3, 4000, 5);
        cfg.log_m_override = Some([512f64.ln(), 0.0]);
        let ens = run(&cfg).unwrap().users[0].clone();
        let mut errs = Vec::new();
        for seed in 0..4 {
            cfg.decoder = Decoder::Explicit;
            cfg.seed = 100 + seed;
            errs.push(run(&cfg).unwrap().users[0].empirical_error);
        }
        let mean = errs.iter().sum::<f64>() / errs.len() as f64;
        let expected = ens.expected_error.unwrap();
        assert!(expected > 0.01 && expected < 0.99, "expected {expected}");
        assert!((mean - expected).abs() < 0.02, "explicit {mean} ensemble {expected}");
    }

    #[test]
    fn deterministic_reports() {
        let cfg = SimConfig::new(bsc_spec(), 2_000, 1.0, 0.5, 0.3, 300, 42);
        assert_eq!(run(&cfg).unwrap(), run(&cfg).unwrap());
    }
}
