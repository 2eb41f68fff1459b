//! Text formats: the program syntax, ML output and Graphviz.

pub mod dot;
pub mod ml;
pub mod parse;
pub mod print;

pub use dot::emit_dot;
pub use ml::emit_ml;
pub use parse::{parse_expr, parse_into, parse_program, ParseError};
pub use print::{print_expr, print_program};
