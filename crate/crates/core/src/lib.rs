//! Partial quantifier elimination (PQE) for propositional CNF.
//!
//! Given `∃X[F1 ∧ F2]`, [`engine::take_out`] finds a formula `F1*(Y)` such that
//! `∃X[F1 ∧ F2] ≡ F1* ∧ ∃X[F2]`. The [`oracle`] module holds brute-force checkers,
//! [`pqeio`] the file formats, and [`propgen`] a property generator for
//! sequential circuits built on top of the engine.
//!
//! ```
//! use pqe::{take_out, Clause, Options, QuantFormula, Var};
//!
//! let c = Clause::from_dimacs;
//! let f = QuantFormula::new(3, [Var(1)], vec![c(&[-2, 3])], vec![c(&[1, 2]), c(&[1, -3])]).unwrap();
//! let sol = take_out(&f, &Options::default());
//! assert_eq!(sol.clauses, vec![c(&[1])]);
//! ```

pub mod engine;
pub mod formula;
pub mod oracle;
pub mod pqeio;
pub mod propgen;

pub use engine::{take_out, Options, Solution, Status};
pub use formula::{Assignment, Clause, Lit, QuantFormula, Var};
