//! Cyclomatic complexity by decision-point counting.
//!
//! The whole snippet is one program: V = 1 + sum of decision points over the
//! tree, with no extra base component per function or class. Decision
//! weights are a function of node kind and child count only, so the rule
//! table below is the full definition.

use crate::frontend::SyntaxTree;

/// Decision weight contributed by one node.
///
/// * `If`, `IfExp`, `While`, `For`, `AsyncFor`, `ExceptHandler`, `Assert`
///   each add 1 (an `elif` arm is a nested `If`, so chains count per arm).
/// * `BoolOp` adds children − 1: one per `and`/`or` operator occurrence.
/// * `Comprehension` adds children − 1: 1 for its `for` clause plus one per
///   filter `if` (children are target, iter, then the filters).
pub fn decision_weight(kind: &str, child_count: usize) -> usize {
    match kind {
        "If" | "IfExp" | "While" | "For" | "AsyncFor" | "ExceptHandler" | "Assert" => 1,
        "BoolOp" | "Comprehension" => child_count.saturating_sub(1),
        _ => 0,
    }
}

/// Cyclomatic complexity of the snippet; at least 1.
pub fn cyclomatic(tree: &SyntaxTree) -> usize {
    1 + tree
        .ids()
        .map(|id| decision_weight(tree.kind(id), tree.children(id).len()))
        .sum::<usize>()
}

/// The decision-point rule table for the `rules` introspection command.
pub fn decision_table() -> serde_json::Value {
    serde_json::json!({
        "base": 1,
        "unit_weight": ["If", "IfExp", "While", "For", "AsyncFor", "ExceptHandler", "Assert"],
        "children_minus_one": {
            "BoolOp": "one per and/or operator occurrence",
            "Comprehension": "one for the for clause plus one per filter if",
        },
        "note": "whole snippet is a single program; definitions add no extra base component",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_source;

    fn v(src: &str) -> usize {
        cyclomatic(&parse_source(src).unwrap())
    }

    #[test]
    fn straight_line_is_one() {
        assert_eq!(v("x = 1\ny = 2"), 1);
    }

    #[test]
    fn if_else_is_two() {
        assert_eq!(v("if a:\n    b = 1\nelse:\n    b = 2"), 2);
    }

    #[test]
    fn if_with_and_is_three() {
        assert_eq!(v("if a and b:\n    c = 1"), 3);
    }

    #[test]
    fn elif_chain_counts_per_arm() {
        assert_eq!(
            v("if a:\n    x = 1\nelif b:\n    x = 2\nelse:\n    x = 3"),
            3
        );
    }

    #[test]
    fn comprehension_clauses_and_filters() {
        // for clause (+1) and filter (+1)
        assert_eq!(v("y = [i for i in r if i]"), 3);
        // two for clauses, one filter
        assert_eq!(v("y = [i * j for i in a for j in b if i < j]"), 4);
    }

    #[test]
    fn handlers_and_assert() {
        assert_eq!(
            v("try:\n    f()\nexcept ValueError:\n    pass\nexcept KeyError:\n    pass"),
            3
        );
        assert_eq!(v("assert x"), 2);
    }

    #[test]
    fn bool_chain_counts_operators() {
        // a and b and c -> 2 occurrences
        assert_eq!(v("x = a and b and c"), 3);
    }

    #[test]
    fn definitions_add_no_base_component() {
        assert_eq!(v("def f():\n    return 1\ndef g():\n    return 2"), 1);
    }

    #[test]
    fn adding_a_plain_if_adds_exactly_one() {
        for src in ["x = 1", "while a:\n    a -= 1", "def f():\n    return 1"] {
            let before = v(src);
            let wrapped = format!("{src}\nif flag:\n    y = 0\n");
            assert_eq!(v(&wrapped), before + 1);
        }
    }
}
