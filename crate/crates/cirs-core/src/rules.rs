//! Introspection: the frozen rule tables as one JSON document, so the CLI,
//! the tests, and the documentation read the same source of truth.

use serde_json::Value;

use crate::cyclomatic::decision_table;
use crate::frontend::AST_KINDS;
use crate::halstead::classification_table;

/// Grammar pin: the parser dependency fixes the analyzed-language revision.
pub const GRAMMAR: &str = "python3 (rustpython-parser 0.4)";

pub fn rule_tables() -> Value {
    serde_json::json!({
        "grammar": GRAMMAR,
        "ast_kinds": AST_KINDS,
        "halstead_classification": classification_table(),
        "decision_points": decision_table(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_are_complete() {
        let t = rule_tables();
        assert!(t["ast_kinds"].as_array().unwrap().len() > 50);
        assert!(t["halstead_classification"]["operators"].is_object());
        assert!(t["decision_points"]["base"] == 1);
    }
}
