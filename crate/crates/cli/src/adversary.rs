//! The `--adversary` mini-grammar and the mixture file format.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use serde_json::Value;

use stabverify::analytics::{parse_rational, ClassDistribution, Rational};
use stabverify::{AdversaryModel, BlockClass};

/// A parsed but not yet loaded adversary description.
#[derive(Debug, Clone, PartialEq)]
pub enum AdversarySpec {
    Honest,
    SingleBad(BlockClass),
    Iid { p_x: f64, p_z: f64 },
    Mixture(PathBuf),
}

fn bit(text: &str) -> Result<bool, String> {
    match text.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(format!("expected 0 or 1, got {other:?}")),
    }
}

fn probability(text: &str) -> Result<f64, String> {
    let p: f64 = text
        .trim()
        .parse()
        .map_err(|_| format!("not a number: {text:?}"))?;
    if !(0.0..=1.0).contains(&p) {
        return Err(format!("probability {p} outside [0, 1]"));
    }
    Ok(p)
}

impl FromStr for AdversarySpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let usage = "expected honest, single-bad:S,T, iid:PX,PZ or mixture:FILE";
        let (kind, arg) = match s.split_once(':') {
            Some((kind, arg)) => (kind, Some(arg)),
            None => (s, None),
        };
        match (kind, arg) {
            ("honest", None) => Ok(AdversarySpec::Honest),
            ("single-bad", Some(arg)) => {
                let (s_bit, t_bit) = arg.split_once(',').ok_or(usage)?;
                let class = BlockClass::new(bit(s_bit)?, bit(t_bit)?);
                if class.is_clean() {
                    return Err("single-bad:0,0 is the honest adversary; use `honest`".into());
                }
                Ok(AdversarySpec::SingleBad(class))
            }
            ("iid", Some(arg)) => {
                let (px, pz) = arg.split_once(',').ok_or(usage)?;
                Ok(AdversarySpec::Iid {
                    p_x: probability(px)?,
                    p_z: probability(pz)?,
                })
            }
            ("mixture", Some(path)) if !path.is_empty() => Ok(AdversarySpec::Mixture(path.into())),
            _ => Err(format!("invalid adversary {s:?}: {usage}")),
        }
    }
}

impl fmt::Display for AdversarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdversarySpec::Honest => f.write_str("honest"),
            AdversarySpec::SingleBad(c) => write!(f, "single-bad:{},{}", c.s as u8, c.t as u8),
            AdversarySpec::Iid { p_x, p_z } => write!(f, "iid:{p_x},{p_z}"),
            AdversarySpec::Mixture(path) => write!(f, "mixture:{}", path.display()),
        }
    }
}

impl AdversarySpec {
    pub fn load(&self, k: usize) -> Result<AdversaryModel> {
        Ok(match self {
            AdversarySpec::Honest => AdversaryModel::Honest,
            AdversarySpec::SingleBad(class) => AdversaryModel::SingleBadCopy { class: *class },
            AdversarySpec::Iid { p_x, p_z } => AdversaryModel::IidPauli {
                p_x: *p_x,
                p_z: *p_z,
            },
            AdversarySpec::Mixture(path) => {
                let dist = load_mixture(path)?;
                dist.validate_for(k)
                    .with_context(|| format!("mixture {} at k={k}", path.display()))?;
                AdversaryModel::ClassMixture(dist)
            }
        })
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MixtureFile {
    beta: Value,
    #[serde(default)]
    q0: Vec<(usize, usize, Value)>,
    #[serde(default)]
    q1: Vec<(usize, usize, Value)>,
}

/// Numbers are taken from their decimal text, strings may also be `p/q`.
fn exact(value: &Value) -> Result<Rational> {
    let text = match value {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        other => bail!("expected a number or \"p/q\" string, got {other}"),
    };
    Ok(parse_rational(&text)?)
}

fn weights(entries: &[(usize, usize, Value)]) -> Result<Vec<(usize, usize, Rational)>> {
    entries
        .iter()
        .map(|(a, b, w)| Ok((*a, *b, exact(w)?)))
        .collect()
}

/// Reads `{"beta": .., "q0": [[a, b, w], ..], "q1": [[a, b, w], ..]}`.
/// Weights within `q0` and `q1` are relative and rescaled to sum to one.
pub fn load_mixture(path: &Path) -> Result<ClassDistribution> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading mixture file {}", path.display()))?;
    parse_mixture(&text).with_context(|| format!("parsing mixture file {}", path.display()))
}

pub fn parse_mixture(text: &str) -> Result<ClassDistribution> {
    let file: MixtureFile = serde_json::from_str(text)?;
    Ok(ClassDistribution::from_weights(
        exact(&file.beta)?,
        weights(&file.q0)?,
        weights(&file.q1)?,
    )?)
}
