//! Finite two-player non-local games, the built-in catalogue, parallel repetition and exact
//! classical values.

mod classical;
mod json;
mod square;

use std::collections::BTreeSet;
use std::sync::OnceLock;

pub use classical::{
    classical_value, classical_value_with, deterministic_value, ClassicalOptions, ClassicalStrategy, ClassicalValue,
};
pub use json::GameSpec;
pub use square::{ObservableSquare, STANDARD_SQUARE, TABLE_VARIANTS};

use crate::error::{Error, Result};

const MU_TOL: f64 = 1e-12;

/// Names accepted by [`builtin`].
pub const BUILTIN_GAMES: [&str; 4] = ["chsh", "magic_square", "ghz3", "trivial"];

/// The winning predicate λ(x, y, a, b), evaluated on label indices.
#[derive(Clone, Debug, PartialEq)]
pub enum Rule {
    /// a ⊕ b = x ∧ y on binary alphabets.
    Chsh,
    /// Row/column parity game over a `rows × cols` grid of ±1 entries.
    MagicSquare { row_signs: Vec<i8>, col_signs: Vec<i8> },
    /// Three-qubit line game on the Mermin star (see [`ghz3_lines`]).
    Ghz3,
    /// Every answer pair wins.
    Always,
    /// Explicit list of winning `(x, y, a, b)` index tuples.
    Accepted(BTreeSet<(usize, usize, usize, usize)>),
    /// Simultaneous play of several games; wins iff every round wins.
    Parallel(Vec<Game>),
}

/// A two-player non-local game with finite alphabets.
#[derive(Clone, Debug, PartialEq)]
pub struct Game {
    name: String,
    inputs_a: Vec<String>,
    inputs_b: Vec<String>,
    outputs_a: Vec<String>,
    outputs_b: Vec<String>,
    mu: Vec<f64>,
    uniform: bool,
    rule: Rule,
}

/// The question distribution handed to [`Game::new`].
#[derive(Clone, Debug)]
pub enum Mu {
    Uniform,
    /// Row-major `|𝓘_A| × |𝓘_B|` table.
    Table(Vec<f64>),
}

fn check_labels(kind: &str, labels: &[String]) -> Result<()> {
    if labels.is_empty() {
        return Err(Error::InvalidGame(format!("{kind} alphabet is empty")));
    }
    let set: BTreeSet<&String> = labels.iter().collect();
    if set.len() != labels.len() {
        return Err(Error::InvalidGame(format!("{kind} alphabet has duplicate labels")));
    }
    Ok(())
}

fn numeric_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// Entries of the `k`-th ±1 tuple of length `len`: entry `j` is −1 iff bit `len−1−j` of `k` is set.
pub fn sign_tuple(k: usize, len: usize) -> Vec<i8> {
    (0..len).map(|j| if (k >> (len - 1 - j)) & 1 == 0 { 1 } else { -1 }).collect()
}

/// Inverse of [`sign_tuple`].
pub fn sign_tuple_index(t: &[i8]) -> usize {
    t.iter().fold(0, |acc, &s| (acc << 1) | usize::from(s < 0))
}

fn sign_entry(k: usize, len: usize, j: usize) -> i8 {
    if (k >> (len - 1 - j)) & 1 == 0 {
        1
    } else {
        -1
    }
}

fn sign_parity(k: usize) -> i8 {
    if k.count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

fn sign_labels(len: usize) -> Vec<String> {
    (0..1usize << len).map(|k| sign_tuple(k, len).iter().map(|&s| if s > 0 { '+' } else { '-' }).collect()).collect()
}

/// The five lines of the three-qubit Mermin star. Each line holds four pairwise commuting
/// Pauli observables; any two distinct lines share exactly one of them.
pub const GHZ3_LINE_POINTS: [[&str; 4]; 5] = [
    ["XXX", "XYY", "YXY", "YYX"],
    ["XXX", "XII", "IXI", "IIX"],
    ["XYY", "XII", "IYI", "IIY"],
    ["YXY", "YII", "IXI", "IIY"],
    ["YYX", "YII", "IYI", "IIX"],
];

/// Product of the observables along each line of [`GHZ3_LINE_POINTS`].
pub const GHZ3_LINE_SIGNS: [i8; 5] = [-1, 1, 1, 1, 1];

/// For each line pair `(x, y)`, the positions `(i, j)` with `line_x[i] == line_y[j]`.
/// `[x][y]` → shared positions `(i, j)` of lines x and y.
type LineIntersections = Vec<Vec<Vec<(usize, usize)>>>;

pub fn ghz3_lines() -> &'static [Vec<Vec<(usize, usize)>>] {
    static SHARED: OnceLock<LineIntersections> = OnceLock::new();
    SHARED.get_or_init(|| {
        (0..5)
            .map(|x| {
                (0..5)
                    .map(|y| {
                        let (lx, ly) = (&GHZ3_LINE_POINTS[x], &GHZ3_LINE_POINTS[y]);
                        (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).filter(|&(i, j)| lx[i] == ly[j]).collect()
                    })
                    .collect()
            })
            .collect()
    })
}

impl Game {
    /// Builds and validates a game from label alphabets, a distribution and a rule.
    pub fn new(
        name: impl Into<String>,
        inputs_a: Vec<String>,
        inputs_b: Vec<String>,
        outputs_a: Vec<String>,
        outputs_b: Vec<String>,
        mu: Mu,
        rule: Rule,
    ) -> Result<Self> {
        check_labels("inputs_a", &inputs_a)?;
        check_labels("inputs_b", &inputs_b)?;
        check_labels("outputs_a", &outputs_a)?;
        check_labels("outputs_b", &outputs_b)?;
        let pairs = inputs_a.len() * inputs_b.len();
        let (mu, uniform) = match mu {
            Mu::Uniform => (vec![1.0 / pairs as f64; pairs], true),
            Mu::Table(t) => {
                if t.len() != pairs {
                    return Err(Error::InvalidGame(format!("mu has {} entries, expected {pairs}", t.len())));
                }
                if let Some(p) = t.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
                    return Err(Error::InvalidGame(format!("mu entry {p} is not a probability")));
                }
                let total: f64 = t.iter().sum();
                if (total - 1.0).abs() > MU_TOL {
                    return Err(Error::InvalidGame(format!("mu sums to {total}, not 1")));
                }
                (t, false)
            }
        };
        let game = Game { name: name.into(), inputs_a, inputs_b, outputs_a, outputs_b, mu, uniform, rule };
        game.check_rule()?;
        Ok(game)
    }

    fn check_rule(&self) -> Result<()> {
        let (ia, ib, oa, ob) = self.sizes();
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidGame(format!("rule `{what}` does not fit alphabets of sizes ({ia},{ib},{oa},{ob})")))
            }
        };
        match &self.rule {
            Rule::Chsh => need((ia, ib, oa, ob) == (2, 2, 2, 2), "chsh"),
            Rule::MagicSquare { row_signs, col_signs } => {
                let (r, c) = (row_signs.len(), col_signs.len());
                let signs_ok = row_signs.iter().chain(col_signs).all(|s| *s == 1 || *s == -1);
                need(
                    signs_ok
                        && r > 0
                        && c > 0
                        && c < usize::BITS as usize
                        && r < usize::BITS as usize
                        && (ia, ib, oa, ob) == (r, c, 1 << c, 1 << r),
                    "magic_square",
                )
            }
            Rule::Ghz3 => need((ia, ib, oa, ob) == (5, 5, 16, 16), "ghz3"),
            Rule::Always => Ok(()),
            Rule::Accepted(set) => {
                for &(x, y, a, b) in set {
                    if x >= ia || y >= ib || a >= oa || b >= ob {
                        return Err(Error::InvalidGame(format!("accepted tuple ({x},{y},{a},{b}) is out of range")));
                    }
                }
                Ok(())
            }
            Rule::Parallel(games) => {
                let prod = |f: &dyn Fn(&Game) -> usize| games.iter().map(f).product::<usize>();
                need(
                    !games.is_empty()
                        && prod(&|g| g.inputs_a.len()) == ia
                        && prod(&|g| g.inputs_b.len()) == ib
                        && prod(&|g| g.outputs_a.len()) == oa
                        && prod(&|g| g.outputs_b.len()) == ob,
                    "parallel",
                )
            }
        }
    }

    pub fn chsh() -> Self {
        let bits = numeric_labels(2);
        Game::new("chsh", bits.clone(), bits.clone(), bits.clone(), bits, Mu::Uniform, Rule::Chsh)
            .expect("chsh is valid")
    }

    /// The Mermin–Peres game on the standard square.
    pub fn magic_square() -> Self {
        magic_square_game(&ObservableSquare::standard())
    }

    pub fn ghz3() -> Self {
        let lines = numeric_labels(5);
        let answers = sign_labels(4);
        Game::new("ghz3", lines.clone(), lines, answers.clone(), answers, Mu::Uniform, Rule::Ghz3)
            .expect("ghz3 is valid")
    }

    /// Two questions and four answers per player; every answer pair wins.
    pub fn trivial() -> Self {
        Game::new(
            "trivial",
            numeric_labels(2),
            numeric_labels(2),
            numeric_labels(4),
            numeric_labels(4),
            Mu::Uniform,
            Rule::Always,
        )
        .expect("trivial is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn inputs_a(&self) -> &[String] {
        &self.inputs_a
    }

    pub fn inputs_b(&self) -> &[String] {
        &self.inputs_b
    }

    pub fn outputs_a(&self) -> &[String] {
        &self.outputs_a
    }

    pub fn outputs_b(&self) -> &[String] {
        &self.outputs_b
    }

    /// `(|𝓘_A|, |𝓘_B|, |𝓞_A|, |𝓞_B|)`
    pub fn sizes(&self) -> (usize, usize, usize, usize) {
        (self.inputs_a.len(), self.inputs_b.len(), self.outputs_a.len(), self.outputs_b.len())
    }

    pub fn rule(&self) -> &Rule {
        &self.rule
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    /// μ(x, y)
    pub fn mu(&self, x: usize, y: usize) -> f64 {
        self.mu[x * self.inputs_b.len() + y]
    }

    pub fn mu_table(&self) -> &[f64] {
        &self.mu
    }

    /// Synchronous games share input and output alphabets between the players.
    pub fn is_synchronous(&self) -> bool {
        self.inputs_a == self.inputs_b && self.outputs_a == self.outputs_b
    }

    /// λ(x, y, a, b) on label indices.
    pub fn accepts(&self, x: usize, y: usize, a: usize, b: usize) -> bool {
        match &self.rule {
            Rule::Chsh => (a ^ b) == (x & y),
            Rule::MagicSquare { row_signs, col_signs } => {
                let (r, c) = (row_signs.len(), col_signs.len());
                sign_parity(a) == row_signs[x]
                    && sign_parity(b) == col_signs[y]
                    && sign_entry(a, c, y) == sign_entry(b, r, x)
            }
            Rule::Ghz3 => {
                sign_parity(a) == GHZ3_LINE_SIGNS[x]
                    && sign_parity(b) == GHZ3_LINE_SIGNS[y]
                    && ghz3_lines()[x][y].iter().all(|&(i, j)| sign_entry(a, 4, i) == sign_entry(b, 4, j))
            }
            Rule::Always => true,
            Rule::Accepted(set) => set.contains(&(x, y, a, b)),
            Rule::Parallel(games) => {
                let (mut x, mut y, mut a, mut b) = (x, y, a, b);
                // Last component is least significant.
                games.iter().rev().all(|g| {
                    let (ia, ib, oa, ob) = g.sizes();
                    let ok = g.accepts(x % ia, y % ib, a % oa, b % ob);
                    x /= ia;
                    y /= ib;
                    a /= oa;
                    b /= ob;
                    ok
                })
            }
        }
    }

    /// Looks up label indices; errors name the unknown label.
    pub fn index_of(&self, which: Alphabet, label: &str) -> Result<usize> {
        let labels = match which {
            Alphabet::InputsA => &self.inputs_a,
            Alphabet::InputsB => &self.inputs_b,
            Alphabet::OutputsA => &self.outputs_a,
            Alphabet::OutputsB => &self.outputs_b,
        };
        labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::InvalidGame(format!("unknown {which:?} label `{label}`")))
    }

    /// Winning `(a, b)` pairs for question `(x, y)`.
    pub fn accepted_answers(&self, x: usize, y: usize) -> Vec<(usize, usize)> {
        let (_, _, oa, ob) = self.sizes();
        let mut out = Vec::new();
        for a in 0..oa {
            for b in 0..ob {
                if self.accepts(x, y, a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Component games when this is a parallel composition; otherwise just `self`.
    pub fn components(&self) -> Vec<&Game> {
        match &self.rule {
            Rule::Parallel(gs) => gs.iter().collect(),
            _ => vec![self],
        }
    }

    /// Splits a product index into per-component indices (first component most significant).
    pub fn split_index(radices: &[usize], mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; radices.len()];
        for (slot, &r) in out.iter_mut().zip(radices).rev() {
            *slot = idx % r;
            idx /= r;
        }
        out
    }

    /// Inverse of [`split_index`](Self::split_index).
    pub fn join_index(radices: &[usize], parts: &[usize]) -> usize {
        parts.iter().zip(radices).fold(0, |acc, (&p, &r)| acc * r + p)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&GameSpec::from_game(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        make_game(&serde_json::from_str::<GameSpec>(text)?)
    }
}

/// Selects one of a game's four alphabets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Alphabet {
    InputsA,
    InputsB,
    OutputsA,
    OutputsB,
}

/// Validates a parsed game description.
pub fn make_game(spec: &GameSpec) -> Result<Game> {
    spec.to_game()
}

/// The row/column parity game of an observable square, with parities read off the square.
pub fn magic_square_game(square: &ObservableSquare) -> Game {
    magic_square_game_from_signs(square.row_signs().to_vec(), square.col_signs().to_vec())
        .expect("square invariants imply a valid game")
}

/// Parity game on a sign profile; Alice answers a ±1 row tuple, Bob a ±1 column tuple.
pub fn magic_square_game_from_signs(row_signs: Vec<i8>, col_signs: Vec<i8>) -> Result<Game> {
    let (r, c) = (row_signs.len(), col_signs.len());
    if r == 0 || c == 0 || r > 16 || c > 16 {
        return Err(Error::InvalidGame(format!("unsupported square shape {r}×{c}")));
    }
    Game::new(
        "magic_square",
        numeric_labels(r),
        numeric_labels(c),
        sign_labels(c),
        sign_labels(r),
        Mu::Uniform,
        Rule::MagicSquare { row_signs, col_signs },
    )
}

/// All `K` games played simultaneously: product alphabets, product μ, conjunction of rules.
pub fn parallel_game(games: &[Game]) -> Result<Game> {
    match games {
        [] => Err(Error::Precondition("parallel composition needs at least one game".into())),
        [g] => Ok(g.clone()),
        _ => {
            let join = |f: &dyn Fn(&Game) -> &[String]| -> Vec<String> {
                games.iter().fold(vec![String::new()], |acc, g| {
                    acc.iter()
                        .flat_map(|p| {
                            f(g).iter().map(move |l| if p.is_empty() { l.clone() } else { format!("{p}|{l}") })
                        })
                        .collect()
                })
            };
            let uniform = games.iter().all(Game::is_uniform);
            let mu = if uniform {
                Mu::Uniform
            } else {
                let radices_a: Vec<usize> = games.iter().map(|g| g.inputs_a.len()).collect();
                let radices_b: Vec<usize> = games.iter().map(|g| g.inputs_b.len()).collect();
                let na: usize = radices_a.iter().product();
                let nb: usize = radices_b.iter().product();
                let mut t = Vec::with_capacity(na * nb);
                for x in 0..na {
                    let xs = Game::split_index(&radices_a, x);
                    for y in 0..nb {
                        let ys = Game::split_index(&radices_b, y);
                        t.push(games.iter().zip(xs.iter().zip(&ys)).map(|(g, (&x, &y))| g.mu(x, y)).product());
                    }
                }
                // Renormalize away the round-off of the product.
                let total: f64 = t.iter().sum();
                Mu::Table(t.into_iter().map(|p| p / total).collect())
            };
            let name = games.iter().map(Game::name).collect::<Vec<_>>().join("×");
            Game::new(
                name,
                join(&|g| &g.inputs_a),
                join(&|g| &g.inputs_b),
                join(&|g| &g.outputs_a),
                join(&|g| &g.outputs_b),
                mu,
                Rule::Parallel(games.to_vec()),
            )
        }
    }
}

/// Built-in game by registry name (`msg` is an alias of `magic_square`). `variant` picks one
/// of the four alternative squares for the magic-square game.
pub fn builtin(name: &str, variant: Option<usize>) -> Result<Game> {
    match (name, variant) {
        ("magic_square" | "msg", None) => Ok(Game::magic_square()),
        ("magic_square" | "msg", Some(k)) => {
            Ok(magic_square_game(&ObservableSquare::variant(k)?).with_name(format!("magic_square_v{k}")))
        }
        (_, Some(_)) => Err(Error::Precondition(format!("game `{name}` has no variants"))),
        ("chsh", None) => Ok(Game::chsh()),
        ("ghz3", None) => Ok(Game::ghz3()),
        ("trivial", None) => Ok(Game::trivial()),
        _ => Err(Error::InvalidGame(format!("unknown builtin game `{name}` (known: {})", BUILTIN_GAMES.join(", ")))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opcore::{commutator_norm, pauli, Operator};

    #[test]
    fn chsh_alphabets() {
        let g = Game::chsh();
        assert_eq!(g.sizes(), (2, 2, 2, 2));
        assert_eq!(g.mu_table(), &[0.25; 4]);
        assert!(g.accepts(1, 1, 0, 1) && !g.accepts(1, 1, 1, 1) && g.accepts(0, 1, 1, 1));
    }

    #[test]
    fn uniform_three_by_three() {
        let l = numeric_labels(3);
        let g = Game::new("u", l.clone(), l.clone(), l.clone(), l, Mu::Uniform, Rule::Always).unwrap();
        assert!(g.mu_table().iter().all(|&p| p == 1.0 / 9.0));
    }

    #[test]
    fn unnormalized_mu_is_rejected() {
        let l = numeric_labels(2);
        let err = Game::new("u", l.clone(), l.clone(), l.clone(), l, Mu::Table(vec![0.3; 4]), Rule::Always);
        assert!(matches!(err, Err(Error::InvalidGame(_))));
    }

    #[test]
    fn sign_tuple_round_trip() {
        for k in 0..16 {
            assert_eq!(sign_tuple_index(&sign_tuple(k, 4)), k);
        }
        assert_eq!(sign_tuple(1, 3), vec![1, 1, -1]);
        assert_eq!(sign_labels(2), vec!["++", "+-", "-+", "--"]);
    }

    #[test]
    fn wrong_parity_loses_for_every_bob_answer() {
        let g = Game::magic_square();
        // "++-" has product −1 but row 0 requires +1.
        let a = g.index_of(Alphabet::OutputsA, "++-").unwrap();
        for y in 0..3 {
            for b in 0..8 {
                assert!(!g.accepts(0, y, a, b));
            }
        }
    }

    #[test]
    fn magic_square_accepts_two_pairs_per_valid_row_answer() {
        let g = Game::magic_square();
        for x in 0..3 {
            for y in 0..3 {
                // 4 valid rows × 2 valid columns agreeing on the shared cell.
                assert_eq!(g.accepted_answers(x, y).len(), 8);
            }
        }
    }

    #[test]
    fn ghz3_lines_are_consistent() {
        for x in 0..5 {
            let ops: Vec<Operator> = GHZ3_LINE_POINTS[x].iter().map(|s| pauli::string(s).unwrap()).collect();
            for i in 0..4 {
                for j in 0..4 {
                    assert!(commutator_norm(&ops[i], &ops[j]).unwrap() < 1e-12);
                }
            }
            let prod = ops[1..].iter().fold(ops[0].clone(), |acc, o| &acc * o);
            let id = Operator::identity(8).scale_real(GHZ3_LINE_SIGNS[x] as f64);
            assert!(prod.distance(&id) < 1e-12, "line {x}");
            for y in 0..5 {
                let shared = ghz3_lines()[x][y].len();
                assert_eq!(shared, if x == y { 4 } else { 1 });
            }
        }
    }

    #[test]
    fn parallel_of_one_is_identity() {
        let g = Game::chsh();
        assert_eq!(parallel_game(std::slice::from_ref(&g)).unwrap(), g);
    }

    #[test]
    fn two_chsh_is_and_of_rounds() {
        let g = Game::chsh();
        let p = parallel_game(&[g.clone(), g.clone()]).unwrap();
        assert_eq!(p.sizes(), (4, 4, 4, 4));
        assert_eq!(p.mu_table().len(), 16);
        for x in 0..4 {
            for y in 0..4 {
                for a in 0..4 {
                    for b in 0..4 {
                        let want = g.accepts(x / 2, y / 2, a / 2, b / 2) && g.accepts(x % 2, y % 2, a % 2, b % 2);
                        assert_eq!(p.accepts(x, y, a, b), want);
                    }
                }
            }
        }
        assert_eq!(p.inputs_a()[1], "0|1");
    }

    #[test]
    fn builtin_registry() {
        for name in BUILTIN_GAMES {
            assert!(builtin(name, None).is_ok());
        }
        assert!(builtin("msg", Some(3)).is_ok());
        assert!(builtin("chsh", Some(1)).is_err());
        assert!(builtin("nope", None).is_err());
    }
}
