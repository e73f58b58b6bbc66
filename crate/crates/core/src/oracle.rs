//! Brute-force semantic checkers. Verdicts are exact or refused, never guessed.

use thiserror::Error;

use crate::engine::{Solution, Status};
use crate::formula::{cofactor, Assignment, Clause, Lit, QuantFormula, Var};

/// Default cap on enumerated variables.
pub const ENUM_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("refusing to enumerate {vars} variables (limit {limit})")]
    Budget { vars: usize, limit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SatResult {
    Sat(Assignment),
    Unsat,
}

impl SatResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SatResult::Sat(_))
    }
}

fn max_var<'a>(clauses: impl IntoIterator<Item = &'a Clause>) -> u32 {
    clauses
        .into_iter()
        .flat_map(|c| c.vars())
        .map(|v| v.0)
        .max()
        .unwrap_or(0)
}

/// Plain recursive DPLL with unit propagation. Unmentioned variables come back false.
pub fn dpll_sat(f: &[Clause]) -> SatResult {
    dpll_under(f, &Assignment::new(max_var(f)))
}

/// DPLL starting from the partial assignment `q`.
pub fn dpll_under(f: &[Clause], q: &Assignment) -> SatResult {
    let n = max_var(f).max(q.nvars());
    let mut a = Assignment::from_lits(n, q.lits());
    if dpll_rec(f, &mut a) {
        let mut m = Assignment::new(n);
        for i in 1..=n {
            let v = Var(i);
            m.assign(v.lit(a.value(v).unwrap_or(false)));
        }
        SatResult::Sat(m)
    } else {
        SatResult::Unsat
    }
}

fn dpll_rec(f: &[Clause], a: &mut Assignment) -> bool {
    let mut implied: Vec<Var> = Vec::new();
    let ok = loop {
        let mut changed = false;
        let mut conflict = false;
        for c in f {
            let mut unassigned = None;
            let mut n_unassigned = 0;
            let mut sat = false;
            for &l in c.lits() {
                match a.lit_value(l) {
                    Some(true) => {
                        sat = true;
                        break;
                    }
                    Some(false) => {}
                    None => {
                        n_unassigned += 1;
                        unassigned = Some(l);
                    }
                }
            }
            if sat {
                continue;
            }
            match n_unassigned {
                0 => {
                    conflict = true;
                    break;
                }
                1 => {
                    let l = unassigned.unwrap();
                    a.assign(l);
                    implied.push(l.var());
                    changed = true;
                }
                _ => {}
            }
        }
        if conflict {
            break false;
        }
        if !changed {
            break true;
        }
    };
    if ok {
        let branch = f.iter().find_map(|c| {
            if c.eval(a) == Some(true) {
                return None;
            }
            c.lits()
                .iter()
                .find(|l| a.lit_value(**l).is_none())
                .copied()
        });
        match branch {
            None => return true,
            Some(l) => {
                for lit in [l, !l] {
                    a.assign(lit);
                    if dpll_rec(f, a) {
                        return true;
                    }
                    a.unassign(lit.var());
                }
            }
        }
    }
    for v in implied {
        a.unassign(v);
    }
    false
}

/// `f ⊨ c`, i.e. `f ∧ ¬c` is unsatisfiable.
pub fn entails(f: &[Clause], c: &Clause) -> bool {
    let n = max_var(f).max(max_var([c]));
    let q = Assignment::from_lits(n, c.lits().iter().map(|&l| !l));
    !dpll_under(f, &q).is_sat()
}

fn check_budget(vars: usize, limit: usize) -> Result<(), OracleError> {
    if vars > limit {
        Err(OracleError::Budget { vars, limit })
    } else {
        Ok(())
    }
}

/// Calls `row` on every full assignment to `y`; stops early when it returns false.
fn for_each_row(
    nvars: u32,
    y: &[Var],
    limit: usize,
    mut row: impl FnMut(&Assignment) -> bool,
) -> Result<bool, OracleError> {
    check_budget(y.len(), limit)?;
    for bits in 0u64..(1u64 << y.len()) {
        let q = Assignment::from_lits(
            nvars,
            y.iter()
                .enumerate()
                .map(|(i, &v)| v.lit(bits >> i & 1 == 1)),
        );
        if !row(&q) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn sat_under(f: &[Clause], q: &Assignment) -> bool {
    let reduced: Vec<Clause> = f.iter().filter_map(|c| cofactor(c, q)).collect();
    dpll_sat(&reduced).is_sat()
}

/// Def. 8: `f ∧ g` and `f` are equisatisfiable in every `y`-subspace.
pub fn es_implies(f: &[Clause], g: &[Clause], y: &[Var]) -> Result<bool, OracleError> {
    let mut fg = f.to_vec();
    fg.extend_from_slice(g);
    let n = max_var(&fg).max(y.iter().map(|v| v.0).max().unwrap_or(0));
    for_each_row(n, y, ENUM_LIMIT, |q| sat_under(f, q) == sat_under(&fg, q))
}

/// `∃X[f]` as one maxterm per `y`-row where `f` is unsatisfiable.
pub fn naive_qe(f: &[Clause], y: &[Var]) -> Result<Vec<Clause>, OracleError> {
    naive_qe_limited(f, y, ENUM_LIMIT)
}

pub fn naive_qe_limited(f: &[Clause], y: &[Var], limit: usize) -> Result<Vec<Clause>, OracleError> {
    let n = max_var(f).max(y.iter().map(|v| v.0).max().unwrap_or(0));
    let mut out = Vec::new();
    for_each_row(n, y, limit, |q| {
        if !sat_under(f, q) {
            let row = Assignment::from_lits(n, y.iter().map(|&v| v.lit(q.value(v).unwrap())));
            out.push(row.blocking_clause());
        }
        true
    })?;
    Ok(out)
}

/// Def. 7 check: `F1 ∧ F2` and `sol ∧ F2` are equisatisfiable in every Y-subspace.
pub fn verify_solution(f: &QuantFormula, sol: &Solution) -> Result<bool, OracleError> {
    if sol.status == Status::TimedOut {
        return Ok(false);
    }
    verify_clauses(f, &sol.clauses)
}

pub fn verify_clauses(f: &QuantFormula, sol: &[Clause]) -> Result<bool, OracleError> {
    let y = f.free_vars();
    let orig: Vec<Clause> = f.clauses().cloned().collect();
    let mut repl = sol.to_vec();
    repl.extend(f.f2.iter().cloned());
    for_each_row(f.nvars(), &y, ENUM_LIMIT, |q| {
        sat_under(&orig, q) == sat_under(&repl, q)
    })
}

/// Remark 1: drops solution clauses already implied by `f2`.
pub fn noise_filter(sol: &Solution, f2: &[Clause]) -> Solution {
    let mut out = sol.clone();
    if sol.status == Status::Solved {
        out.clauses.retain(|q| !entails(f2, q));
    }
    out
}

/// Literals of a full assignment to `vars`, decoded from the low bits of `bits`.
pub fn row_lits(vars: &[Var], bits: u64) -> Vec<Lit> {
    vars.iter()
        .enumerate()
        .map(|(i, &v)| v.lit(bits >> i & 1 == 1))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(l: &[i32]) -> Clause {
        Clause::from_dimacs(l)
    }

    fn sec6() -> QuantFormula {
        QuantFormula::new(
            3,
            [Var(1)],
            vec![c(&[-2, 3])],
            vec![c(&[1, 2]), c(&[1, -3])],
        )
        .unwrap()
    }

    fn solved(clauses: Vec<Clause>) -> Solution {
        Solution {
            clauses,
            status: Status::Solved,
        }
    }

    #[test]
    fn dpll_basics() {
        assert_eq!(dpll_sat(&[c(&[1]), c(&[-1])]), SatResult::Unsat);
        assert!(dpll_sat(&[]).is_sat());
        assert!(!dpll_sat(&[Clause::empty()]).is_sat());
        let f = [c(&[1, 2]), c(&[-1, 2]), c(&[-2, 3])];
        match dpll_sat(&f) {
            SatResult::Sat(m) => assert!(f.iter().all(|cl| cl.eval(&m) == Some(true))),
            SatResult::Unsat => panic!(),
        }
        // §6 formula under y1 = 0
        let q = Assignment::from_lits(3, [Var(1).neg()]);
        assert!(!sat_under(&[c(&[-2, 3]), c(&[1, 2]), c(&[1, -3])], &q));
    }

    #[test]
    fn entails_examples() {
        let f = [c(&[1, 2]), c(&[-2, 3]), c(&[1, -3])];
        assert!(entails(&f, &c(&[1])));
        assert!(!entails(&[], &c(&[1])));
        assert!(f.iter().all(|cl| entails(&f, cl)));
    }

    #[test]
    fn es_implies_examples() {
        // Example 1: F \ {C1} es-implies K1 = ¬y1 ∨ ¬x2
        let rest = [c(&[1, 2]), c(&[1, -3])];
        assert_eq!(es_implies(&rest, &[c(&[-1, -2])], &[Var(1)]), Ok(true));
        assert_eq!(es_implies(&[c(&[1])], &[c(&[1, 2])], &[]), Ok(true));
        assert_eq!(es_implies(&[c(&[1])], &[c(&[-1])], &[]), Ok(false));
        assert_eq!(es_implies(&[c(&[1])], &[], &[Var(1)]), Ok(true));
        let many: Vec<Var> = (1..=21).map(Var).collect();
        assert!(matches!(
            es_implies(&[], &[], &many),
            Err(OracleError::Budget { .. })
        ));
    }

    #[test]
    fn naive_qe_examples() {
        let f = [c(&[-2, 3]), c(&[1, 2]), c(&[1, -3])];
        assert_eq!(naive_qe(&f, &[Var(1)]), Ok(vec![c(&[1])]));
        assert_eq!(naive_qe(&[c(&[1])], &[Var(1)]), Ok(vec![c(&[1])]));
        assert_eq!(
            naive_qe(&[c(&[2]), c(&[-2])], &[]),
            Ok(vec![Clause::empty()])
        );
    }

    #[test]
    fn verify_examples() {
        let f = sec6();
        assert_eq!(verify_solution(&f, &solved(vec![c(&[1])])), Ok(true));
        assert_eq!(verify_solution(&f, &solved(vec![])), Ok(false));
        let all: Vec<Clause> = f.clauses().cloned().collect();
        let qe = naive_qe(&all, &f.free_vars()).unwrap();
        assert_eq!(verify_solution(&f, &solved(qe)), Ok(true));
    }

    #[test]
    fn noise_filter_examples() {
        let f2 = [c(&[1, 2]), c(&[1, -3])];
        assert_eq!(
            noise_filter(&solved(vec![c(&[1])]), &f2).clauses,
            vec![c(&[1])]
        );
        assert!(noise_filter(&solved(vec![c(&[1, 2])]), &f2)
            .clauses
            .is_empty());
        assert!(noise_filter(&solved(vec![]), &f2).clauses.is_empty());
    }
}
