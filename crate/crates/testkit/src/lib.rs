//! Test support shared by the depdiag crates: the example corpus, operator
//! swap mutations, random program generation and an oracle that answers
//! session questions from the intended program.

pub mod corpus;
pub mod gen;
pub mod mutate;
pub mod oracle;

use depdiag_core::lang::{check, parse, CheckedProgram};

/// Parses and checks `source`, panicking with the error on failure.
pub fn checked(name: &str, source: &str) -> CheckedProgram {
    let p = parse(name, source).unwrap_or_else(|e| panic!("{name}: {e}"));
    check(p).unwrap_or_else(|e| panic!("{name}: {e}"))
}
