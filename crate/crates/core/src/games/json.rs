use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{magic_square_game_from_signs, parallel_game, Alphabet, Game, Mu, Rule};
use crate::error::{Error, Result};

/// A game label as it appears in JSON: strings are kept, integers are rendered in decimal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Text(String),
    Int(i64),
}

impl Label {
    fn text(&self) -> String {
        match self {
            Label::Text(s) => s.clone(),
            Label::Int(i) => i.to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MuSpec {
    /// The literal string `"uniform"`.
    Named(String),
    /// `[x, y, p]` triples; missing pairs have weight 0.
    Table(Vec<(Label, Label, f64)>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RuleSpec {
    Builtin {
        builtin: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        row_signs: Option<Vec<i8>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        col_signs: Option<Vec<i8>>,
    },
    Accepted {
        accepted: Vec<(Label, Label, Label, Label)>,
    },
    Parallel {
        parallel: Vec<GameSpec>,
    },
}

/// On-disk game description.
///
/// Alphabets may be omitted for built-in rules, in which case the built-in labels are used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs_a: Option<Vec<Label>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs_b: Option<Vec<Label>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs_a: Option<Vec<Label>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs_b: Option<Vec<Label>>,
    #[serde(default = "uniform_mu")]
    pub mu: MuSpec,
    pub rule: RuleSpec,
}

fn uniform_mu() -> MuSpec {
    MuSpec::Named("uniform".into())
}

fn texts(labels: &[String]) -> Option<Vec<Label>> {
    Some(labels.iter().cloned().map(Label::Text).collect())
}

impl GameSpec {
    pub fn from_game(game: &Game) -> Self {
        let rule = match game.rule() {
            Rule::Chsh => builtin_rule("chsh"),
            Rule::Ghz3 => builtin_rule("ghz3"),
            Rule::Always => builtin_rule("trivial"),
            Rule::MagicSquare { row_signs, col_signs } => RuleSpec::Builtin {
                builtin: "magic_square".into(),
                row_signs: Some(row_signs.clone()),
                col_signs: Some(col_signs.clone()),
            },
            Rule::Accepted(set) => RuleSpec::Accepted {
                accepted: set
                    .iter()
                    .map(|&(x, y, a, b)| {
                        (
                            Label::Text(game.inputs_a()[x].clone()),
                            Label::Text(game.inputs_b()[y].clone()),
                            Label::Text(game.outputs_a()[a].clone()),
                            Label::Text(game.outputs_b()[b].clone()),
                        )
                    })
                    .collect(),
            },
            Rule::Parallel(gs) => RuleSpec::Parallel { parallel: gs.iter().map(Self::from_game).collect() },
        };
        let mu = if game.is_uniform() {
            uniform_mu()
        } else {
            let nb = game.inputs_b().len();
            MuSpec::Table(
                game.mu_table()
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| **p > 0.0)
                    .map(|(k, &p)| {
                        (Label::Text(game.inputs_a()[k / nb].clone()), Label::Text(game.inputs_b()[k % nb].clone()), p)
                    })
                    .collect(),
            )
        };
        // Alphabets of parallel games are derived from the components.
        let explicit = !matches!(game.rule(), Rule::Parallel(_));
        GameSpec {
            name: game.name().to_string(),
            inputs_a: explicit.then(|| texts(game.inputs_a())).flatten(),
            inputs_b: explicit.then(|| texts(game.inputs_b())).flatten(),
            outputs_a: explicit.then(|| texts(game.outputs_a())).flatten(),
            outputs_b: explicit.then(|| texts(game.outputs_b())).flatten(),
            mu,
            rule,
        }
    }

    pub fn to_game(&self) -> Result<Game> {
        let (rule, defaults) = match &self.rule {
            RuleSpec::Builtin { builtin, row_signs, col_signs } => {
                let template = match (builtin.as_str(), row_signs, col_signs) {
                    ("magic_square" | "msg", Some(r), Some(c)) => magic_square_game_from_signs(r.clone(), c.clone())?,
                    ("magic_square" | "msg", None, None) => Game::magic_square(),
                    ("magic_square" | "msg", _, _) => {
                        return Err(Error::InvalidGame("row_signs and col_signs must be given together".into()))
                    }
                    (_, None, None) => super::builtin(builtin, None)?,
                    _ => return Err(Error::InvalidGame(format!("builtin `{builtin}` takes no sign profile"))),
                };
                let d = [
                    template.inputs_a().to_vec(),
                    template.inputs_b().to_vec(),
                    template.outputs_a().to_vec(),
                    template.outputs_b().to_vec(),
                ];
                (template.rule().clone(), Some(d))
            }
            RuleSpec::Parallel { parallel } => {
                let games = parallel.iter().map(GameSpec::to_game).collect::<Result<Vec<_>>>()?;
                let p = parallel_game(&games)?;
                let d = [p.inputs_a().to_vec(), p.inputs_b().to_vec(), p.outputs_a().to_vec(), p.outputs_b().to_vec()];
                (p.rule().clone(), Some(d))
            }
            RuleSpec::Accepted { .. } => (Rule::Always, None),
        };
        let pick = |given: &Option<Vec<Label>>, k: usize, what: &str| -> Result<Vec<String>> {
            match (given, &defaults) {
                (Some(v), _) => Ok(v.iter().map(Label::text).collect()),
                (None, Some(d)) => Ok(d[k].clone()),
                (None, None) => Err(Error::InvalidGame(format!("missing `{what}` alphabet"))),
            }
        };
        let inputs_a = pick(&self.inputs_a, 0, "inputs_a")?;
        let inputs_b = pick(&self.inputs_b, 1, "inputs_b")?;
        let outputs_a = pick(&self.outputs_a, 2, "outputs_a")?;
        let outputs_b = pick(&self.outputs_b, 3, "outputs_b")?;
        let lookup = |labels: &[String], l: &Label, which: Alphabet| -> Result<usize> {
            let t = l.text();
            labels
                .iter()
                .position(|s| *s == t)
                .ok_or_else(|| Error::InvalidGame(format!("unknown {which:?} label `{t}`")))
        };
        let rule = match &self.rule {
            RuleSpec::Accepted { accepted } => {
                let mut set = BTreeSet::new();
                for (x, y, a, b) in accepted {
                    set.insert((
                        lookup(&inputs_a, x, Alphabet::InputsA)?,
                        lookup(&inputs_b, y, Alphabet::InputsB)?,
                        lookup(&outputs_a, a, Alphabet::OutputsA)?,
                        lookup(&outputs_b, b, Alphabet::OutputsB)?,
                    ));
                }
                Rule::Accepted(set)
            }
            _ => rule,
        };
        let mu = match &self.mu {
            MuSpec::Named(s) if s == "uniform" => Mu::Uniform,
            MuSpec::Named(s) => return Err(Error::InvalidGame(format!("unknown mu `{s}`"))),
            MuSpec::Table(rows) => {
                let nb = inputs_b.len();
                let mut t = vec![0.0; inputs_a.len() * nb];
                for (x, y, p) in rows {
                    let k = lookup(&inputs_a, x, Alphabet::InputsA)? * nb + lookup(&inputs_b, y, Alphabet::InputsB)?;
                    t[k] += p;
                }
                Mu::Table(t)
            }
        };
        Game::new(self.name.clone(), inputs_a, inputs_b, outputs_a, outputs_b, mu, rule)
    }
}

fn builtin_rule(name: &str) -> RuleSpec {
    RuleSpec::Builtin { builtin: name.into(), row_signs: None, col_signs: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{builtin, classical_value};

    #[test]
    fn chsh_from_schema() {
        let text = r#"{"name":"c","inputs_a":[0,1],"inputs_b":[0,1],"outputs_a":[0,1],
            "outputs_b":[0,1],"mu":"uniform","rule":{"builtin":"chsh"}}"#;
        let g = Game::from_json(text).unwrap();
        assert_eq!(g.sizes(), (2, 2, 2, 2));
        assert_eq!(g.rule(), &Rule::Chsh);
    }

    #[test]
    fn accepted_table_round_trips() {
        let text = r#"{"name":"eq","inputs_a":["q"],"inputs_b":["q"],"outputs_a":["u","v"],
            "outputs_b":["u","v"],"mu":[["q","q",1.0]],
            "rule":{"accepted":[["q","q","u","u"],["q","q","v","v"]]}}"#;
        let g = Game::from_json(text).unwrap();
        assert!(g.accepts(0, 0, 1, 1) && !g.accepts(0, 0, 0, 1));
        let back = Game::from_json(&g.to_json().unwrap()).unwrap();
        assert_eq!(back.rule(), g.rule());
        assert_eq!(back.mu_table(), g.mu_table());
    }

    #[test]
    fn empty_accepted_set_has_value_zero() {
        let text = r#"{"name":"none","inputs_a":[0],"inputs_b":[0],"outputs_a":[0,1],
            "outputs_b":[0,1],"rule":{"accepted":[]}}"#;
        let g = Game::from_json(text).unwrap();
        assert_eq!(classical_value(&g).unwrap().value, 0.0);
    }

    #[test]
    fn unknown_label_is_rejected() {
        let text = r#"{"name":"bad","inputs_a":[0],"inputs_b":[0],"outputs_a":[0],
            "outputs_b":[0],"rule":{"accepted":[[0,0,0,7]]}}"#;
        assert!(matches!(Game::from_json(text), Err(Error::InvalidGame(_))));
    }

    #[test]
    fn builtins_round_trip() {
        for name in ["chsh", "magic_square", "ghz3", "trivial"] {
            let g = builtin(name, None).unwrap();
            assert_eq!(Game::from_json(&g.to_json().unwrap()).unwrap(), g, "{name}");
        }
        let p = parallel_game(&[Game::chsh(), Game::magic_square()]).unwrap();
        assert_eq!(Game::from_json(&p.to_json().unwrap()).unwrap(), p);
    }
}
