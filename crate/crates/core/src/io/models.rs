//! ```text
//! linear-model v1
//! 0 <bias>
//! <var> <weight>
//! ```
//! ```text
//! nb-model v1
//! class <var> <P(C=1)>
//! <var> <P(X=1|C=1)> <P(X=1|C=0)>
//! ```

use std::fmt::Write;

use super::{content_lines, expect_len, field, format_real, parse_real};
use crate::compile::{LinearModel, NaiveBayesModel};
use crate::error::{Error, Result};
use crate::vtree::Var;

fn header<'a>(text: &'a str, tag: &str) -> Result<impl Iterator<Item = (usize, Vec<&'a str>)>> {
    let mut lines = content_lines(text);
    let (line, tokens) = lines.next().ok_or_else(|| Error::parse(0, "empty model file"))?;
    if tokens != [tag, "v1"] {
        return Err(Error::parse(line, format!("expected header `{tag} v1`")));
    }
    Ok(lines)
}

fn var(line: usize, tokens: &[&str], i: usize) -> Result<Var> {
    let raw: u32 = field(line, tokens, i, "variable")?;
    Var::new(raw).ok_or_else(|| Error::parse(line, "variables are numbered from 1"))
}

pub fn parse_linear_model(text: &str) -> Result<LinearModel> {
    let mut bias = None;
    let mut weights = Vec::new();
    for (line, tokens) in header(text, "linear-model")? {
        expect_len(line, &tokens, 2)?;
        let w = parse_real(line, &tokens, 1, "weight")?;
        if tokens[0] == "0" {
            if bias.replace(w).is_some() {
                return Err(Error::parse(line, "bias given twice"));
            }
        } else {
            let v = var(line, &tokens, 0)?;
            if weights.iter().any(|(u, _)| *u == v) {
                return Err(Error::parse(line, format!("weight for {v} given twice")));
            }
            weights.push((v, w));
        }
    }
    Ok(LinearModel {
        bias: bias.unwrap_or(0.0),
        weights,
    })
}

pub fn serialize_linear_model(lm: &LinearModel) -> String {
    let mut out = format!("linear-model v1\n0 {}\n", format_real(lm.bias));
    for (v, w) in &lm.weights {
        writeln!(out, "{} {}", v.index(), format_real(*w)).expect("writing to a String");
    }
    out
}

pub fn parse_nb_model(text: &str) -> Result<NaiveBayesModel> {
    let mut class = None;
    let mut features = Vec::new();
    let mut given_pos = Vec::new();
    let mut given_neg = Vec::new();
    for (line, tokens) in header(text, "nb-model")? {
        expect_len(line, &tokens, 3)?;
        if tokens[0] == "class" {
            let c = (var(line, &tokens, 1)?, parse_real(line, &tokens, 2, "class prior")?);
            if class.replace(c).is_some() {
                return Err(Error::parse(line, "class given twice"));
            }
        } else {
            features.push(var(line, &tokens, 0)?);
            given_pos.push(parse_real(line, &tokens, 1, "P(X|C)")?);
            given_neg.push(parse_real(line, &tokens, 2, "P(X|~C)")?);
        }
    }
    let (class, class_prior) = class.ok_or_else(|| Error::parse(0, "missing `class <var> <prior>` line"))?;
    let nb = NaiveBayesModel {
        class,
        features,
        class_prior,
        given_pos,
        given_neg,
    };
    nb.validate()?;
    Ok(nb)
}

pub fn serialize_nb_model(nb: &NaiveBayesModel) -> String {
    let mut out = format!(
        "nb-model v1\nclass {} {}\n",
        nb.class.index(),
        format_real(nb.class_prior)
    );
    for (i, v) in nb.features.iter().enumerate() {
        writeln!(
            out,
            "{} {} {}",
            v.index(),
            format_real(nb.given_pos[i]),
            format_real(nb.given_neg[i])
        )
        .expect("writing to a String");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_round_trip() {
        let text = "linear-model v1\n0 1\n1 2\n2 -3\n";
        let lm = parse_linear_model(text).unwrap();
        assert_eq!(lm.bias, 1.0);
        assert_eq!(lm.weights.len(), 2);
        assert_eq!(serialize_linear_model(&lm), text);
    }

    #[test]
    fn nb_round_trip() {
        let text = "nb-model v1\nc prior first\nclass 1 0.3\n2 0.9 0.4\n3 0.2 0.7\n";
        let nb = parse_nb_model(text).unwrap();
        assert_eq!(nb.features.len(), 2);
        let canon = serialize_nb_model(&nb);
        assert_eq!(parse_nb_model(&canon).unwrap(), nb);
    }

    #[test]
    fn nb_rejects_bad_probability() {
        assert!(parse_nb_model("nb-model v1\nclass 1 1.2\n").is_err());
        assert!(parse_nb_model("nb-model v1\n2 0.5 0.5\n").is_err());
    }
}
