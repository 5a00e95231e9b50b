//! Urn simulations of the three waiting times.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::config::{CollisionOrder, Configuration, Mode, MultinomialModel};
use crate::error::{Error, Result};
use crate::kernels::rational_to_f64;
use crate::report::{ser_opt_sig15, Sig15};

use super::pool::with_pool;

/// Trials per independently seeded block; results do not depend on the thread count.
const BLOCK: u64 = 1024;

pub(crate) fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

/// Per-colour counts while drawing: distinct balls `Y_i` and total draws `Z_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupancyState {
    pub distinct: Vec<u32>,
    pub draws: Vec<u32>,
    touched: Vec<usize>,
}

impl OccupancyState {
    pub fn new(m: usize) -> Self {
        OccupancyState { distinct: vec![0; m], draws: vec![0; m], touched: Vec::new() }
    }

    fn touch(&mut self, c: usize) {
        if self.distinct[c] == 0 && self.draws[c] == 0 {
            self.touched.push(c);
        }
    }

    /// Clears the counts in time proportional to the number of colours seen.
    pub fn reset(&mut self) {
        for c in self.touched.drain(..) {
            self.distinct[c] = 0;
            self.draws[c] = 0;
        }
    }
}

/// Extra statistics of a simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationExtras {
    /// With replacement: fraction of trials whose first `r`-fold hit consisted of
    /// distinct balls (`K = R`).
    #[serde(serialize_with = "ser_opt_sig15")]
    pub true_collision_first: Option<f64>,
    /// Fraction with `R < K`.
    #[serde(serialize_with = "ser_opt_sig15")]
    pub repetition_first: Option<f64>,
    /// Two-stage trials whose sampled configuration admitted no `r`-collision.
    /// Without replacement these are recorded as `n + 1` (the urn runs empty);
    /// with replacement they never stop and are left out of the report.
    pub no_collision: u64,
}

/// Summary of a batch of simulated waiting times.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub mode: Mode,
    pub r: CollisionOrder,
    /// Trials that produced a finite waiting time.
    pub trials: u64,
    pub seed: u64,
    pub mean: f64,
    pub stderr: f64,
    /// `(k, fraction of trials with T > k)` for `k = 0..=max observed`.
    pub empirical_survival: Vec<(usize, f64)>,
    pub extras: Option<SimulationExtras>,
}

impl SimulationReport {
    fn from_histogram(
        mode: Mode,
        r: CollisionOrder,
        seed: u64,
        hist: &[u64],
        extras: Option<SimulationExtras>,
    ) -> Self {
        let trials: u64 = hist.iter().sum();
        let tf = trials as f64;
        let mut survival = Vec::with_capacity(hist.len());
        let mut above = trials;
        for (k, &h) in hist.iter().enumerate() {
            above -= h;
            survival.push((k, above as f64 / tf));
        }
        // Trim trailing zeros after the maximum.
        while survival.len() > 1 && survival[survival.len() - 1].1 == 0.0 && survival[survival.len() - 2].1 == 0.0 {
            survival.pop();
        }
        let mean = hist.iter().enumerate().map(|(k, &h)| k as f64 * h as f64).sum::<f64>() / tf;
        let var = hist.iter().enumerate().map(|(k, &h)| (k as f64 - mean).powi(2) * h as f64).sum::<f64>()
            / (tf - 1.0).max(1.0);
        SimulationReport {
            mode,
            r,
            trials,
            seed,
            mean,
            stderr: (var / tf).sqrt(),
            empirical_survival: survival,
            extras,
        }
    }

    /// Empirical `P(T > k)`.
    pub fn survival_at(&self, k: usize) -> f64 {
        self.empirical_survival.get(k).map_or(0.0, |&(_, p)| p)
    }
}

impl Serialize for SimulationReport {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Point {
            k: usize,
            fraction: Sig15,
        }
        let mut st = s.serialize_struct("SimulationReport", 8)?;
        st.serialize_field("mode", &self.mode)?;
        st.serialize_field("r", &self.r)?;
        st.serialize_field("trials", &self.trials)?;
        st.serialize_field("seed", &self.seed)?;
        st.serialize_field("mean", &Sig15(self.mean))?;
        st.serialize_field("stderr", &Sig15(self.stderr))?;
        let pts: Vec<Point> = self.empirical_survival.iter().map(|&(k, f)| Point { k, fraction: Sig15(f) }).collect();
        st.serialize_field("empirical_survival", &pts)?;
        st.serialize_field("extras", &self.extras)?;
        st.end()
    }
}

/// One urn; `colour[j]` is the colour of ball `j`.
struct Urn {
    colour: Vec<usize>,
    m: usize,
}

impl Urn {
    fn from_sizes(sizes: &[usize]) -> Self {
        let mut colour = Vec::with_capacity(sizes.iter().sum());
        for (c, &x) in sizes.iter().enumerate() {
            colour.extend(std::iter::repeat_n(c, x));
        }
        Urn { colour, m: sizes.len() }
    }
}

/// Reusable per-thread scratch space.
struct Scratch {
    state: OccupancyState,
    seen: Vec<u64>,
    epoch: u64,
    perm: Vec<usize>,
}

impl Scratch {
    fn new(urn: &Urn) -> Self {
        Scratch {
            state: OccupancyState::new(urn.m),
            seen: vec![0; urn.colour.len()],
            epoch: 0,
            perm: (0..urn.colour.len()).collect(),
        }
    }
}

/// Outcome of one trial: the waiting time and, for `K2`, whether `K = R`.
struct Trial {
    time: usize,
    true_first: bool,
}

fn run_k1<R: Rng>(urn: &Urn, r: u32, sc: &mut Scratch, rng: &mut R) -> Trial {
    let n = urn.colour.len();
    let mut swaps = Vec::new();
    let mut time = n + 1;
    for k in 0..n {
        let j = rng.random_range(k..n);
        sc.perm.swap(k, j);
        swaps.push(j);
        let c = urn.colour[sc.perm[k]];
        sc.state.touch(c);
        sc.state.distinct[c] += 1;
        sc.state.draws[c] += 1;
        if sc.state.distinct[c] == r {
            time = k + 1;
            break;
        }
    }
    // Undo the partial shuffle so the next trial starts from the identity.
    for (k, &j) in swaps.iter().enumerate().rev() {
        sc.perm.swap(k, j);
    }
    sc.state.reset();
    Trial { time, true_first: true }
}

/// With replacement. Returns `K2` (or `R` when `repetition` is set) and whether the
/// first colour to be drawn `r` times was drawn from `r` distinct balls.
fn run_with_replacement<R: Rng>(urn: &Urn, r: u32, repetition: bool, sc: &mut Scratch, rng: &mut R) -> Trial {
    let n = urn.colour.len();
    sc.epoch += 1;
    let mut k = 0usize;
    let mut true_first = None;
    let time = loop {
        k += 1;
        let j = rng.random_range(0..n);
        let c = urn.colour[j];
        sc.state.touch(c);
        sc.state.draws[c] += 1;
        if sc.seen[j] != sc.epoch {
            sc.seen[j] = sc.epoch;
            sc.state.distinct[c] += 1;
        }
        if true_first.is_none() && sc.state.draws[c] == r {
            true_first = Some(sc.state.distinct[c] == r);
            if repetition {
                break k;
            }
        }
        if !repetition && sc.state.distinct[c] == r {
            break k;
        }
    };
    sc.state.reset();
    Trial { time, true_first: true_first.unwrap_or(false) }
}

fn run_trial<R: Rng>(urn: &Urn, r: u32, mode: Mode, sc: &mut Scratch, rng: &mut R) -> Trial {
    match mode {
        Mode::K1 => run_k1(urn, r, sc, rng),
        Mode::K2 => run_with_replacement(urn, r, false, sc, rng),
        Mode::R => run_with_replacement(urn, r, true, sc, rng),
    }
}

#[derive(Default, Clone)]
struct Tally {
    hist: Vec<u64>,
    true_first: u64,
    no_collision: u64,
}

impl Tally {
    fn add(&mut self, t: &Trial) {
        if self.hist.len() <= t.time {
            self.hist.resize(t.time + 1, 0);
        }
        self.hist[t.time] += 1;
        self.true_first += u64::from(t.true_first);
    }

    fn merge(mut self, other: Tally) -> Tally {
        if self.hist.len() < other.hist.len() {
            self.hist.resize(other.hist.len(), 0);
        }
        for (a, b) in self.hist.iter_mut().zip(other.hist) {
            *a += b;
        }
        self.true_first += other.true_first;
        self.no_collision += other.no_collision;
        self
    }
}

fn blocks(trials: u64) -> Vec<(u64, u64)> {
    (0..trials.div_ceil(BLOCK)).map(|b| (b, BLOCK.min(trials - b * BLOCK))).collect()
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidQuery("trials must be at least 1".into()));
    }
    Ok(())
}

/// Simulates `trials` independent waiting times; reproducible for a given seed.
pub fn simulate_waiting_times(
    config: &Configuration,
    r: CollisionOrder,
    mode: Mode,
    trials: u64,
    seed: u64,
) -> Result<SimulationReport> {
    check_trials(trials)?;
    if mode != Mode::R {
        config.require_collision(r)?;
    }
    let urn = Urn::from_sizes(config.sizes());
    let rr = r.get() as u32;
    let tally = with_pool(|| {
        blocks(trials)
            .into_par_iter()
            .map(|(b, count)| {
                let mut rng = block_rng(seed, b);
                let mut sc = Scratch::new(&urn);
                let mut t = Tally::default();
                for _ in 0..count {
                    t.add(&run_trial(&urn, rr, mode, &mut sc, &mut rng));
                }
                t
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(Tally::default(), Tally::merge)
    });
    let extras = (mode == Mode::K2).then(|| {
        let f = tally.true_first as f64 / trials as f64;
        SimulationExtras { true_collision_first: Some(f), repetition_first: Some(1.0 - f), no_collision: 0 }
    });
    Ok(SimulationReport::from_histogram(mode, r, seed, &tally.hist, extras))
}

/// Samples preimage sizes from the multinomial law by sequential binomials.
pub fn sample_multinomial<R: Rng>(n: usize, probs: &[f64], rng: &mut R) -> Vec<usize> {
    let mut left = n as u64;
    let mut mass = 1.0f64;
    let mut out = vec![0usize; probs.len()];
    let last = probs.len().saturating_sub(1);
    for (i, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i == last {
            out[i] = left as usize;
            break;
        }
        let q = if mass > 0.0 { (p / mass).clamp(0.0, 1.0) } else { 1.0 };
        let x = Binomial::new(left, q).expect("probability in [0, 1]").sample(rng);
        out[i] = x as usize;
        left -= x;
        mass -= p;
    }
    out
}

/// First samples a configuration from the multinomial model, then runs the drawing
/// process on it. Trials whose configuration admits no `r`-collision are counted in
/// `extras.no_collision`.
pub fn simulate_two_stage(
    model: &MultinomialModel,
    r: CollisionOrder,
    mode: Mode,
    trials: u64,
    seed: u64,
) -> Result<SimulationReport> {
    check_trials(trials)?;
    let probs: Vec<f64> = model.probs().iter().map(rational_to_f64).collect();
    let n = model.n();
    let rr = r.get() as u32;
    let tally = with_pool(|| {
        blocks(trials)
            .into_par_iter()
            .map(|(b, count)| {
                let mut rng = block_rng(seed, b);
                let mut t = Tally::default();
                for _ in 0..count {
                    let sizes = sample_multinomial(n, &probs, &mut rng);
                    if mode != Mode::R && sizes.iter().all(|&x| x < r.get()) {
                        t.no_collision += 1;
                        if mode == Mode::K1 {
                            t.add(&Trial { time: n + 1, true_first: false });
                        }
                        continue;
                    }
                    let urn = Urn::from_sizes(&sizes);
                    let mut sc = Scratch::new(&urn);
                    t.add(&run_trial(&urn, rr, mode, &mut sc, &mut rng));
                }
                t
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold(Tally::default(), Tally::merge)
    });
    let finite: u64 = tally.hist.iter().sum();
    if finite == 0 {
        return Err(Error::InvalidQuery(format!(
            "no sampled configuration admitted a {r}-collision in {trials} trials"
        )));
    }
    let extras = (mode == Mode::K2 || tally.no_collision > 0).then(|| {
        let f = (mode == Mode::K2).then(|| tally.true_first as f64 / finite as f64);
        SimulationExtras {
            true_collision_first: f,
            repetition_first: f.map(|f| 1.0 - f),
            no_collision: tally.no_collision,
        }
    });
    Ok(SimulationReport::from_histogram(mode, r, seed, &tally.hist, extras))
}

/// Counts of cells holding exactly `j` balls after `k` uniform draws into `m` cells,
/// averaged over `trials`: returns `(mean, stderr)` for each `j = 0..=k`.
pub fn simulate_cell_counts(k: usize, m: usize, trials: u64, seed: u64) -> Result<Vec<(f64, f64)>> {
    check_trials(trials)?;
    if m == 0 {
        return Err(Error::InvalidConfig("m must be positive".into()));
    }
    let sums = with_pool(|| {
        blocks(trials)
            .into_par_iter()
            .map(|(b, count)| {
                let mut rng = block_rng(seed, b);
                let mut cells = vec![0usize; m];
                let mut s = vec![(0.0f64, 0.0f64); k + 1];
                for _ in 0..count {
                    cells.iter_mut().for_each(|c| *c = 0);
                    for _ in 0..k {
                        cells[rng.random_range(0..m)] += 1;
                    }
                    let mut u = vec![0usize; k + 1];
                    for &c in &cells {
                        u[c] += 1;
                    }
                    for (j, &v) in u.iter().enumerate() {
                        s[j].0 += v as f64;
                        s[j].1 += (v * v) as f64;
                    }
                }
                s
            })
            .reduce(
                || vec![(0.0, 0.0); k + 1],
                |mut a, b| {
                    for (x, y) in a.iter_mut().zip(b) {
                        x.0 += y.0;
                        x.1 += y.1;
                    }
                    a
                },
            )
    });
    let t = trials as f64;
    Ok(sums
        .into_iter()
        .map(|(s, s2)| {
            let mean = s / t;
            let var = (s2 / t - mean * mean).max(0.0) * t / (t - 1.0).max(1.0);
            (mean, (var / t).sqrt())
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(k: usize) -> CollisionOrder {
        CollisionOrder::new(k).unwrap()
    }

    fn cfg(v: &[usize]) -> Configuration {
        Configuration::new(v.to_vec()).unwrap()
    }

    fn within(est: f64, exact: f64, se: f64) -> bool {
        (est - exact).abs() <= 4.0 * se
    }

    #[test]
    fn balanced_examples() {
        let c = cfg(&[2, 2]);
        let t = 100_000;
        let k1 = simulate_waiting_times(&c, r(2), Mode::K1, t, 1).unwrap();
        let p = 2.0 / 3.0;
        assert!(within(k1.survival_at(2), p, (p * (1.0 - p) / t as f64).sqrt()));
        let rr = simulate_waiting_times(&c, r(2), Mode::R, t, 2).unwrap();
        assert!(within(rr.mean, 2.5, rr.stderr));
        let k2 = simulate_waiting_times(&c, r(2), Mode::K2, t, 3).unwrap();
        let f = k2.extras.unwrap().repetition_first.unwrap();
        assert!(within(f, 0.5, (0.25 / t as f64).sqrt()));
        assert!(within(k2.mean, 11.0 / 3.0, k2.stderr));
    }

    #[test]
    fn deterministic_per_seed() {
        let c = cfg(&[3, 1, 2, 5]);
        for mode in Mode::ALL {
            let a = simulate_waiting_times(&c, r(2), mode, 5000, 42).unwrap();
            let b = simulate_waiting_times(&c, r(2), mode, 5000, 42).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn report_invariants() {
        let rep = simulate_waiting_times(&cfg(&[4, 1, 1, 3]), r(3), Mode::K2, 3000, 9).unwrap();
        assert_eq!(rep.empirical_survival[0], (0, 1.0));
        let mut prev = 1.0;
        for &(_, p) in &rep.empirical_survival {
            assert!((0.0..=1.0).contains(&p) && p <= prev);
            prev = p;
        }
        let s: f64 = rep.empirical_survival.iter().map(|p| p.1).sum();
        assert!((s - rep.mean).abs() < 1e-9);
    }

    #[test]
    fn constant_two_stage() {
        let one = MultinomialModel::new(5, vec![num_rational::BigRational::from_integer(1.into())]).unwrap();
        for mode in [Mode::K1, Mode::R] {
            let rep = simulate_two_stage(&one, r(2), mode, 2000, 0).unwrap();
            assert_eq!(rep.mean, 2.0);
            assert_eq!(rep.stderr, 0.0);
        }
    }

    #[test]
    fn multinomial_sampler_sums_to_n() {
        let mut rng = block_rng(5, 0);
        for _ in 0..100 {
            let v = sample_multinomial(37, &[0.1, 0.5, 0.0, 0.4], &mut rng);
            assert_eq!(v.iter().sum::<usize>(), 37);
            assert_eq!(v[2], 0);
        }
    }

    #[test]
    fn errors() {
        assert!(simulate_waiting_times(&cfg(&[1, 1]), r(2), Mode::K1, 10, 0).is_err());
        assert!(simulate_waiting_times(&cfg(&[1, 1]), r(2), Mode::R, 10, 0).is_ok());
        assert!(simulate_waiting_times(&cfg(&[2]), r(2), Mode::R, 0, 0).is_err());
    }
}
