use serde_json::{json, Value};

use crate::formula::{parse_formula, print_formula, Vocabulary};

use super::{DecomposeError, PropFormula, ReductionSequence, Side, VarPartition};

impl PropFormula {
    pub fn to_json(&self) -> Value {
        match self {
            PropFormula::Var { index, side } => json!({ "var": [index, side.number()] }),
            PropFormula::Top => json!({ "const": true }),
            PropFormula::Bot => json!({ "const": false }),
            PropFormula::And(cs) => json!({ "and": cs.iter().map(PropFormula::to_json).collect::<Vec<_>>() }),
            PropFormula::Or(cs) => json!({ "or": cs.iter().map(PropFormula::to_json).collect::<Vec<_>>() }),
        }
    }

    /// Parses the object form; anything else (including a negation) is
    /// rejected.
    pub fn from_json(v: &Value) -> Result<Self, DecomposeError> {
        let bad = |msg: &str| DecomposeError::Malformed(format!("combiner: {msg}"));
        let obj = v.as_object().filter(|o| o.len() == 1).ok_or_else(|| bad("expected a one-key object"))?;
        let (k, inner) = obj.iter().next().unwrap();
        match k.as_str() {
            "var" => {
                let arr = inner.as_array().filter(|a| a.len() == 2).ok_or_else(|| bad("var needs [index, side]"))?;
                let index = arr[0].as_u64().ok_or_else(|| bad("index must be a natural number"))? as usize;
                let side = arr[1].as_u64().and_then(Side::from_number).ok_or_else(|| bad("side must be 1 or 2"))?;
                Ok(PropFormula::var(index, side))
            }
            "const" => match inner.as_bool() {
                Some(true) => Ok(PropFormula::Top),
                Some(false) => Ok(PropFormula::Bot),
                None => Err(bad("const must be a boolean")),
            },
            "and" | "or" => {
                let cs = inner
                    .as_array()
                    .ok_or_else(|| bad("expected a list"))?
                    .iter()
                    .map(PropFormula::from_json)
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(if k == "and" { PropFormula::And(cs) } else { PropFormula::Or(cs) })
            }
            other => Err(bad(&format!("unknown node `{other}`"))),
        }
    }
}

impl ReductionSequence {
    pub fn to_json(&self) -> Value {
        json!({
            "delta1": self.delta1.iter().map(print_formula).collect::<Vec<_>>(),
            "delta2": self.delta2.iter().map(print_formula).collect::<Vec<_>>(),
            "beta": self.beta.to_json(),
            "partition": self.partition,
            "vocabulary": self.vocab,
            "stats": self.stats(),
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("json serializes")
    }

    /// Inverse of [`ReductionSequence::to_json`]; `stats` is ignored and the
    /// vocabulary must be present.
    pub fn from_json(v: &Value) -> Result<Self, DecomposeError> {
        let bad = |msg: String| DecomposeError::Malformed(msg);
        let vocab: Vocabulary = serde_json::from_value(v.get("vocabulary").cloned().ok_or_else(|| bad("missing vocabulary".into()))?)
            .map_err(|e| bad(e.to_string()))?;
        let factors = |key: &str| -> Result<Vec<_>, DecomposeError> {
            v.get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| bad(format!("missing {key}")))?
                .iter()
                .map(|t| {
                    let text = t.as_str().ok_or_else(|| bad(format!("{key} entries must be strings")))?;
                    Ok(parse_formula(text, &vocab)?)
                })
                .collect()
        };
        let partition: VarPartition = serde_json::from_value(v.get("partition").cloned().ok_or_else(|| bad("missing partition".into()))?)
            .map_err(|e| bad(e.to_string()))?;
        let beta = PropFormula::from_json(v.get("beta").ok_or_else(|| bad("missing beta".into()))?)?;
        let d = ReductionSequence { delta1: factors("delta1")?, delta2: factors("delta2")?, beta, partition, vocab };
        d.validate()?;
        Ok(d)
    }
}
