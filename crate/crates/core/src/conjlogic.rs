//! Conjunctions as Boolean circuits over noun-presence variables.
//!
//! Non-causal conjunction classes compile to gate networks built from AND
//! and NOT only. Causal connectives (cause, result, condition, time,
//! purpose) are recognized and rejected.

use std::collections::HashMap;

use thiserror::Error;

/// Conjunction classes and their logical readings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConjunctionClass {
    /// `and`, `both ... and`, `not only ... but also`: plain conjunction.
    Additive,
    /// Inclusive `or`: at least one, possibly all.
    InclusiveChoice,
    /// `either ... or`: exactly one of two.
    ExclusiveChoice,
    /// `nor`, `neither ... nor`: none of them.
    Exclusion,
    /// `but`, `yet`, `however`, `but not`: the first without the second.
    Contrast,
    /// `because`, `so`, `if`, `when`, ...: not Boolean, not compiled.
    Causal,
}

impl ConjunctionClass {
    pub fn name(&self) -> &'static str {
        match self {
            ConjunctionClass::Additive => "additive",
            ConjunctionClass::InclusiveChoice => "inclusive_choice",
            ConjunctionClass::ExclusiveChoice => "exclusive_choice",
            ConjunctionClass::Exclusion => "exclusion",
            ConjunctionClass::Contrast => "contrast",
            ConjunctionClass::Causal => "causal",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConjError {
    #[error("no known conjunction in the token sequence")]
    UnknownConjunction,
    #[error("causal conjunctions have no Boolean compilation")]
    CausalUnsupported,
    #[error("class {class} does not support arity {arity}")]
    ArityUnsupported { class: &'static str, arity: usize },
    #[error("assignment is missing variable `{0}`")]
    MissingVariable(String),
    #[error("too many variables for a truth table ({0} > 20)")]
    TooManyVariables(usize),
}

/// Reference to a gate input: a named input variable or an earlier gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateRef {
    Input(usize),
    Gate(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Gate {
    And(Vec<GateRef>),
    Not(GateRef),
}

/// Acyclic gate network over named inputs; gates may only reference inputs
/// or strictly earlier gates, and the output is a single reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoolCircuit {
    pub inputs: Vec<String>,
    gates: Vec<Gate>,
    output: GateRef,
}

impl BoolCircuit {
    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    fn and(&mut self, inputs: Vec<GateRef>) -> GateRef {
        debug_assert!(inputs.len() >= 2);
        self.gates.push(Gate::And(inputs));
        GateRef::Gate(self.gates.len() - 1)
    }

    fn not(&mut self, input: GateRef) -> GateRef {
        self.gates.push(Gate::Not(input));
        GateRef::Gate(self.gates.len() - 1)
    }
}

/// Classify a token sequence by the conjunction pattern it contains;
/// discontinuous pairs are matched before single words.
pub fn classify_conjunction(tokens: &[String]) -> Result<ConjunctionClass, ConjError> {
    let lower: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
    let has = |w: &str| lower.iter().any(|t| t == w);
    let pair = |a: &str, b: &str| {
        lower
            .iter()
            .position(|t| t == a)
            .and_then(|i| lower[i + 1..].iter().position(|t| t == b))
            .is_some()
    };
    let phrase = |words: &[&str]| {
        lower
            .windows(words.len())
            .any(|w| w.iter().map(String::as_str).eq(words.iter().copied()))
    };
    // Causal markers take precedence; the lemma does not cover them.
    if ["because", "since", "so", "therefore", "thus", "if", "unless", "when", "while",
        "before", "after"]
    .iter()
    .any(|w| has(w))
        || phrase(&["so", "that"])
        || phrase(&["in", "order", "that"])
    {
        return Ok(ConjunctionClass::Causal);
    }
    if pair("neither", "nor") || has("nor") {
        return Ok(ConjunctionClass::Exclusion);
    }
    if pair("either", "or") {
        return Ok(ConjunctionClass::ExclusiveChoice);
    }
    if phrase(&["but", "not"]) || has("but") || has("yet") || has("however") {
        return Ok(ConjunctionClass::Contrast);
    }
    if pair("both", "and") || phrase(&["not", "only"]) || has("and") {
        return Ok(ConjunctionClass::Additive);
    }
    if has("or") {
        return Ok(ConjunctionClass::InclusiveChoice);
    }
    Err(ConjError::UnknownConjunction)
}

/// Compile a conjunction class over `n` noun variables into an AND/NOT
/// network. Additive, inclusive choice, and exclusion generalize to any
/// arity; exclusive choice and contrast are binary.
pub fn compile_conjunction(
    class: ConjunctionClass,
    n: usize,
) -> Result<BoolCircuit, ConjError> {
    if class == ConjunctionClass::Causal {
        return Err(ConjError::CausalUnsupported);
    }
    if n < 2 {
        return Err(ConjError::ArityUnsupported {
            class: class.name(),
            arity: n,
        });
    }
    if matches!(
        class,
        ConjunctionClass::ExclusiveChoice | ConjunctionClass::Contrast
    ) && n != 2
    {
        return Err(ConjError::ArityUnsupported {
            class: class.name(),
            arity: n,
        });
    }
    let mut c = BoolCircuit {
        inputs: (0..n).map(|i| format!("x{}", i + 1)).collect(),
        gates: Vec::new(),
        output: GateRef::Input(0),
    };
    let vars: Vec<GateRef> = (0..n).map(GateRef::Input).collect();
    let out = match class {
        ConjunctionClass::Additive => c.and(vars),
        ConjunctionClass::InclusiveChoice => {
            // not (not x1 and ... and not xn)
            let negs: Vec<GateRef> = vars.iter().map(|v| c.not(*v)).collect();
            let all_neg = c.and(negs);
            c.not(all_neg)
        }
        ConjunctionClass::ExclusiveChoice => {
            // not (x1 and x2) and not (not x1 and not x2)
            let both = c.and(vars.clone());
            let not_both = c.not(both);
            let n1 = c.not(vars[0]);
            let n2 = c.not(vars[1]);
            let neither = c.and(vec![n1, n2]);
            let not_neither = c.not(neither);
            c.and(vec![not_both, not_neither])
        }
        ConjunctionClass::Exclusion => {
            let negs: Vec<GateRef> = vars.iter().map(|v| c.not(*v)).collect();
            c.and(negs)
        }
        ConjunctionClass::Contrast => {
            let n2 = c.not(vars[1]);
            c.and(vec![vars[0], n2])
        }
        ConjunctionClass::Causal => unreachable!(),
    };
    c.output = out;
    Ok(c)
}

/// Evaluate the network in topological (construction) order.
pub fn eval_circuit(
    circuit: &BoolCircuit,
    assignment: &HashMap<String, bool>,
) -> Result<bool, ConjError> {
    let mut inputs = Vec::with_capacity(circuit.inputs.len());
    for name in &circuit.inputs {
        let v = assignment
            .get(name)
            .copied()
            .ok_or_else(|| ConjError::MissingVariable(name.clone()))?;
        inputs.push(v);
    }
    Ok(eval_with(circuit, &inputs))
}

fn eval_with(circuit: &BoolCircuit, inputs: &[bool]) -> bool {
    let mut values = Vec::with_capacity(circuit.gates.len());
    let resolve = |r: GateRef, values: &[bool]| match r {
        GateRef::Input(i) => inputs[i],
        GateRef::Gate(g) => values[g],
    };
    for gate in &circuit.gates {
        let v = match gate {
            Gate::And(ins) => ins.iter().all(|r| resolve(*r, &values)),
            Gate::Not(r) => !resolve(*r, &values),
        };
        values.push(v);
    }
    resolve(circuit.output, &values)
}

/// Output bit for every assignment in binary counting order: the first
/// variable is the most significant bit.
pub fn truth_table(circuit: &BoolCircuit) -> Result<Vec<bool>, ConjError> {
    let n = circuit.inputs.len();
    if n > 20 {
        return Err(ConjError::TooManyVariables(n));
    }
    let mut out = Vec::with_capacity(1 << n);
    for row in 0..(1u32 << n) {
        let inputs: Vec<bool> = (0..n).map(|j| (row >> (n - 1 - j)) & 1 == 1).collect();
        out.push(eval_with(circuit, &inputs));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    /// Independent oracle: the class formulas computed directly.
    fn oracle(class: ConjunctionClass, bits: &[bool]) -> bool {
        match class {
            ConjunctionClass::Additive => bits.iter().all(|b| *b),
            ConjunctionClass::InclusiveChoice => bits.iter().any(|b| *b),
            ConjunctionClass::ExclusiveChoice => bits[0] ^ bits[1],
            ConjunctionClass::Exclusion => bits.iter().all(|b| !b),
            ConjunctionClass::Contrast => bits[0] && !bits[1],
            ConjunctionClass::Causal => unreachable!(),
        }
    }

    #[test]
    fn classify_basic_forms() {
        assert_eq!(
            classify_conjunction(&toks("Millie and Billie go")),
            Ok(ConjunctionClass::Additive)
        );
        assert_eq!(
            classify_conjunction(&toks("neither Millie nor Billie goes")),
            Ok(ConjunctionClass::Exclusion)
        );
        assert_eq!(
            classify_conjunction(&toks("either Millie or Billie goes")),
            Ok(ConjunctionClass::ExclusiveChoice)
        );
        assert_eq!(
            classify_conjunction(&toks("Millie goes but not Billie")),
            Ok(ConjunctionClass::Contrast)
        );
        assert_eq!(
            classify_conjunction(&toks("Millie or Billie goes")),
            Ok(ConjunctionClass::InclusiveChoice)
        );
        assert_eq!(
            classify_conjunction(&toks("Millie goes because Billie goes")),
            Ok(ConjunctionClass::Causal)
        );
        assert_eq!(
            classify_conjunction(&toks("Millie goes")),
            Err(ConjError::UnknownConjunction)
        );
    }

    #[test]
    fn compile_rejects_causal_and_bad_arity() {
        assert_eq!(
            compile_conjunction(ConjunctionClass::Causal, 2),
            Err(ConjError::CausalUnsupported)
        );
        assert!(matches!(
            compile_conjunction(ConjunctionClass::ExclusiveChoice, 3),
            Err(ConjError::ArityUnsupported { .. })
        ));
        assert!(matches!(
            compile_conjunction(ConjunctionClass::Additive, 1),
            Err(ConjError::ArityUnsupported { .. })
        ));
    }

    #[test]
    fn truth_tables_match_oracles_up_to_arity_four() {
        let classes = [
            (ConjunctionClass::Additive, 2..=4),
            (ConjunctionClass::InclusiveChoice, 2..=4),
            (ConjunctionClass::Exclusion, 2..=4),
            (ConjunctionClass::ExclusiveChoice, 2..=2),
            (ConjunctionClass::Contrast, 2..=2),
        ];
        for (class, arities) in classes {
            for n in arities {
                let c = compile_conjunction(class, n).unwrap();
                let table = truth_table(&c).unwrap();
                for (row, got) in table.iter().enumerate() {
                    let bits: Vec<bool> =
                        (0..n).map(|j| (row >> (n - 1 - j)) & 1 == 1).collect();
                    assert_eq!(
                        *got,
                        oracle(class, &bits),
                        "{} arity {n} row {row}",
                        class.name()
                    );
                }
            }
        }
    }

    #[test]
    fn frozen_tables() {
        let t = |c: ConjunctionClass, n: usize| -> Vec<u8> {
            truth_table(&compile_conjunction(c, n).unwrap())
                .unwrap()
                .into_iter()
                .map(u8::from)
                .collect()
        };
        assert_eq!(t(ConjunctionClass::Additive, 2), vec![0, 0, 0, 1]);
        assert_eq!(t(ConjunctionClass::InclusiveChoice, 2), vec![0, 1, 1, 1]);
        assert_eq!(t(ConjunctionClass::ExclusiveChoice, 2), vec![0, 1, 1, 0]);
        assert_eq!(t(ConjunctionClass::Exclusion, 2), vec![1, 0, 0, 0]);
        assert_eq!(t(ConjunctionClass::Contrast, 2), vec![0, 0, 1, 0]);
        assert_eq!(
            t(ConjunctionClass::Exclusion, 3),
            vec![1, 0, 0, 0, 0, 0, 0, 0]
        );
    }

    #[test]
    fn eval_named_assignments() {
        let c = compile_conjunction(ConjunctionClass::Contrast, 2).unwrap();
        let mut a = HashMap::new();
        a.insert("x1".to_string(), true);
        a.insert("x2".to_string(), false);
        assert_eq!(eval_circuit(&c, &a), Ok(true));
        a.remove("x2");
        assert_eq!(
            eval_circuit(&c, &a),
            Err(ConjError::MissingVariable("x2".into()))
        );
    }

    #[test]
    fn compiled_circuits_use_only_and_not() {
        for class in [
            ConjunctionClass::Additive,
            ConjunctionClass::InclusiveChoice,
            ConjunctionClass::ExclusiveChoice,
            ConjunctionClass::Exclusion,
            ConjunctionClass::Contrast,
        ] {
            let c = compile_conjunction(class, 2).unwrap();
            for g in c.gates() {
                assert!(matches!(g, Gate::And(_) | Gate::Not(_)));
            }
        }
    }

    #[test]
    fn de_morgan_between_choice_and_exclusion() {
        for n in 2..=4 {
            let or = compile_conjunction(ConjunctionClass::InclusiveChoice, n).unwrap();
            let nor = compile_conjunction(ConjunctionClass::Exclusion, n).unwrap();
            let to = truth_table(&or).unwrap();
            let tn = truth_table(&nor).unwrap();
            for (a, b) in to.iter().zip(&tn) {
                assert_eq!(*a, !*b);
            }
        }
    }
}
