//! Example programs shipped with the library.

use crate::ir::Program;
use crate::surface::parse_program;

pub const NESTED_LOOPS: &str = include_str!("../fixtures/progA.lamg");
pub const NESTED_LOOPS_ACC: &str = include_str!("../fixtures/progB.lamg");
pub const POW: &str = include_str!("../fixtures/pow.lamg");
pub const CYCLIC_NESTING: &str = include_str!("../fixtures/cycProg.lamg");
pub const WELL_KNOWN: &str = include_str!("../fixtures/well_known.lamg");
pub const ILL_TYPED_BRANCH: &str = include_str!("../fixtures/ill_typed_branch.lamg");

/// All fixtures that parse, by name.
pub const ALL: &[(&str, &str)] = &[
    ("nested_loops", NESTED_LOOPS),
    ("nested_loops_acc", NESTED_LOOPS_ACC),
    ("pow", POW),
    ("cyclic_nesting", CYCLIC_NESTING),
    ("well_known", WELL_KNOWN),
];

fn load(src: &str) -> Program {
    parse_program(src).expect("fixture parses")
}

pub fn nested_loops() -> Program {
    load(NESTED_LOOPS)
}

pub fn nested_loops_acc() -> Program {
    load(NESTED_LOOPS_ACC)
}

pub fn pow() -> Program {
    load(POW)
}

pub fn cyclic_nesting() -> Program {
    load(CYCLIC_NESTING)
}

pub fn well_known() -> Program {
    load(WELL_KNOWN)
}
