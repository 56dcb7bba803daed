use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Game;
use crate::error::{Error, Result};

/// Deterministic response functions `f: 𝓘_A → 𝓞_A`, `g: 𝓘_B → 𝓞_B` as index tables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalStrategy {
    pub f: Vec<usize>,
    pub g: Vec<usize>,
}

/// Controls the search in [`classical_value_with`].
#[derive(Clone, Debug)]
pub struct ClassicalOptions {
    /// Largest admissible `|𝓞_A|^|𝓘_A| · |𝓞_B|^|𝓘_B|`.
    pub budget: u64,
    /// When the budget is exceeded, draw this many random response functions instead of
    /// failing; the result is then only a lower bound.
    pub sampling: Option<usize>,
    pub seed: u64,
}

impl Default for ClassicalOptions {
    fn default() -> Self {
        ClassicalOptions { budget: 1_000_000_000, sampling: None, seed: 0 }
    }
}

/// Result of a classical-value computation.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalValue {
    pub value: f64,
    /// Exact value as a fraction, available for uniform question distributions.
    pub fraction: Option<Ratio<u64>>,
    /// `true` when the value came from sampling and only bounds the optimum from below.
    pub lower_bound: bool,
    /// An optimal (or best sampled) deterministic strategy.
    pub strategy: ClassicalStrategy,
    /// Number of response functions evaluated on the enumerated side.
    pub functions_evaluated: u64,
}

/// Winning probability of a fixed deterministic strategy.
pub fn deterministic_value(game: &Game, s: &ClassicalStrategy) -> Result<f64> {
    let (ia, ib, oa, ob) = game.sizes();
    if s.f.len() != ia || s.g.len() != ib || s.f.iter().any(|&a| a >= oa) || s.g.iter().any(|&b| b >= ob) {
        return Err(Error::InvalidStrategy("response table does not match the game alphabets".into()));
    }
    let mut v = 0.0;
    for x in 0..ia {
        for y in 0..ib {
            if game.accepts(x, y, s.f[x], s.g[y]) {
                v += game.mu(x, y);
            }
        }
    }
    Ok(v)
}

/// Exact classical value with default options.
pub fn classical_value(game: &Game) -> Result<ClassicalValue> {
    classical_value_with(game, &ClassicalOptions::default())
}

/// The game seen from the side whose response functions are enumerated ("e"); the other
/// side ("r") best-responds to each.
struct Oriented {
    ne: usize,
    nr: usize,
    oe: usize,
    or: usize,
    /// `weight[e * nr + r]`; integer counts for uniform μ so sums stay exact.
    weight: Vec<f64>,
    /// `win[((e * nr + r) * oe + ae) * or + ar]`
    win: Vec<bool>,
    swapped: bool,
}

const DENSE_TABLE_LIMIT: usize = 1 << 26;

impl Oriented {
    fn new(game: &Game, swapped: bool) -> Result<Self> {
        let (ia, ib, oa, ob) = game.sizes();
        let (ne, nr, oe, or) = if swapped { (ib, ia, ob, oa) } else { (ia, ib, oa, ob) };
        let size = ne
            .checked_mul(nr)
            .and_then(|v| v.checked_mul(oe))
            .and_then(|v| v.checked_mul(or))
            .filter(|&s| s <= DENSE_TABLE_LIMIT)
            .ok_or_else(|| Error::Precondition("win table too large to tabulate".into()))?;
        let mut win = vec![false; size];
        let mut weight = vec![0.0; ne * nr];
        for e in 0..ne {
            for r in 0..nr {
                let (x, y) = if swapped { (r, e) } else { (e, r) };
                weight[e * nr + r] = if game.is_uniform() { 1.0 } else { game.mu(x, y) };
                for ae in 0..oe {
                    for ar in 0..or {
                        let (a, b) = if swapped { (ar, ae) } else { (ae, ar) };
                        win[((e * nr + r) * oe + ae) * or + ar] = game.accepts(x, y, a, b);
                    }
                }
            }
        }
        Ok(Oriented { ne, nr, oe, or, weight, win, swapped })
    }

    /// Best-response score of the enumerated assignment; fills `resp` with the responses.
    fn score(&self, assign: &[usize], resp: &mut [usize]) -> f64 {
        let mut total = 0.0;
        for (r, slot) in resp.iter_mut().enumerate().take(self.nr) {
            let mut best = f64::NEG_INFINITY;
            let mut best_ar = 0;
            for ar in 0..self.or {
                let mut s = 0.0;
                for (e, &a_e) in assign.iter().enumerate().take(self.ne) {
                    let idx = ((e * self.nr + r) * self.oe + a_e) * self.or + ar;
                    if self.win[idx] {
                        s += self.weight[e * self.nr + r];
                    }
                }
                if s > best {
                    best = s;
                    best_ar = ar;
                }
            }
            *slot = best_ar;
            total += best;
        }
        total
    }

    fn decode(&self, mut k: u64, out: &mut [usize]) {
        for slot in out.iter_mut().rev() {
            *slot = (k % self.oe as u64) as usize;
            k /= self.oe as u64;
        }
    }

    fn strategy(&self, assign: Vec<usize>, resp: Vec<usize>) -> ClassicalStrategy {
        if self.swapped {
            ClassicalStrategy { f: resp, g: assign }
        } else {
            ClassicalStrategy { f: assign, g: resp }
        }
    }
}

/// Maximum over deterministic strategies of Σ μ(x,y) λ(x,y,f(x),g(y)).
///
/// For every response function on the smaller side, the other side's best response is found
/// question by question, which is exact and visits each function once. Work is split across
/// threads; ties are broken towards the lowest function index, so the result does not depend
/// on the number of workers.
pub fn classical_value_with(game: &Game, opts: &ClassicalOptions) -> Result<ClassicalValue> {
    let (ia, ib, oa, ob) = game.sizes();
    let count_a = (oa as f64).powi(ia as i32);
    let count_b = (ob as f64).powi(ib as i32);
    let pairs = count_a * count_b;
    let swapped = count_b < count_a;
    let within_budget = pairs <= opts.budget as f64;
    if !within_budget && opts.sampling.is_none() {
        return Err(Error::BudgetExceeded { pairs, budget: opts.budget });
    }
    let o = Oriented::new(game, swapped)?;
    let scale = if game.is_uniform() { 1.0 / (ia * ib) as f64 } else { 1.0 };

    let (score, assign, functions_evaluated, lower_bound) = if within_budget {
        let total = count_a.min(count_b) as u64;
        let (score, k) = (0..total)
            .into_par_iter()
            .map_init(
                || (vec![0usize; o.ne], vec![0usize; o.nr]),
                |(assign, resp), k| {
                    o.decode(k, assign);
                    (o.score(assign, resp), k)
                },
            )
            .reduce(
                || (f64::NEG_INFINITY, u64::MAX),
                |p, q| if q.0 > p.0 || (q.0 == p.0 && q.1 < p.1) { q } else { p },
            );
        let mut assign = vec![0; o.ne];
        o.decode(k, &mut assign);
        (score, assign, total, false)
    } else {
        let samples = opts.sampling.unwrap_or(0).max(1);
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        let draws: Vec<Vec<usize>> =
            (0..samples).map(|_| (0..o.ne).map(|_| rng.random_range(0..o.oe)).collect()).collect();
        let (score, i) =
            draws.par_iter().enumerate().map_init(|| vec![0usize; o.nr], |resp, (i, a)| (o.score(a, resp), i)).reduce(
                || (f64::NEG_INFINITY, usize::MAX),
                |p, q| if q.0 > p.0 || (q.0 == p.0 && q.1 < p.1) { q } else { p },
            );
        (score, draws[i].clone(), samples as u64, true)
    };

    let mut resp = vec![0; o.nr];
    o.score(&assign, &mut resp);
    let fraction = game.is_uniform().then(|| Ratio::new(score.round() as u64, (ia * ib) as u64));
    Ok(ClassicalValue {
        value: score * scale,
        fraction,
        lower_bound,
        strategy: o.strategy(assign, resp),
        functions_evaluated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{parallel_game, Game};

    /// Independent oracle: every (f, g) pair.
    fn brute_force(game: &Game) -> f64 {
        let (ia, ib, oa, ob) = game.sizes();
        let nf = oa.pow(ia as u32);
        let ng = ob.pow(ib as u32);
        let digits = |mut k: usize, base: usize, len: usize| {
            let mut v = vec![0; len];
            for slot in v.iter_mut().rev() {
                *slot = k % base;
                k /= base;
            }
            v
        };
        let mut best: f64 = 0.0;
        for fi in 0..nf {
            let f = digits(fi, oa, ia);
            for gi in 0..ng {
                let g = digits(gi, ob, ib);
                let s = ClassicalStrategy { f: f.clone(), g };
                best = best.max(deterministic_value(game, &s).unwrap());
            }
        }
        best
    }

    #[test]
    fn chsh_is_three_quarters() {
        let v = classical_value(&Game::chsh()).unwrap();
        assert_eq!(v.fraction, Some(Ratio::new(3, 4)));
        assert_eq!(v.value, brute_force(&Game::chsh()));
        assert!(!v.lower_bound);
    }

    #[test]
    fn magic_square_is_eight_ninths() {
        let g = Game::magic_square();
        let v = classical_value(&g).unwrap();
        assert_eq!(v.fraction, Some(Ratio::new(8, 9)));
        assert!((v.value - brute_force(&g)).abs() < 1e-15);
        assert!((deterministic_value(&g, &v.strategy).unwrap() - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn double_chsh_is_bracketed() {
        let p = parallel_game(&[Game::chsh(), Game::chsh()]).unwrap();
        let v = classical_value(&p).unwrap().value;
        assert!((0.5625 - 1e-15..=0.75 + 1e-15).contains(&v), "{v}");
        assert_eq!(v, brute_force(&p));
    }

    #[test]
    fn budget_is_enforced_and_sampling_flags_lower_bound() {
        let g = Game::ghz3();
        assert!(matches!(classical_value(&g), Err(Error::BudgetExceeded { .. })));
        let opts = ClassicalOptions { sampling: Some(64), ..Default::default() };
        let v = classical_value_with(&g, &opts).unwrap();
        assert!(v.lower_bound && v.value <= 1.0);
    }
}
