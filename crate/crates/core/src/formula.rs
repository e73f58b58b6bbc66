//! Variables, literals, clauses, assignments and partially quantified formulas.

use std::collections::HashSet;
use std::fmt;
use std::ops::Not;

use thiserror::Error;

/// A variable id, 1-based and dense.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub u32);

impl Var {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn lit(self, positive: bool) -> Lit {
        Lit::new(self, positive)
    }

    pub fn pos(self) -> Lit {
        Lit::new(self, true)
    }

    pub fn neg(self) -> Lit {
        Lit::new(self, false)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A literal packed as `var << 1 | negated`, so sorting by code sorts by variable.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: Var, positive: bool) -> Lit {
        debug_assert!(var.0 > 0, "variable ids start at 1");
        Lit(var.0 << 1 | (!positive) as u32)
    }

    /// Panics on 0.
    pub fn from_dimacs(d: i32) -> Lit {
        assert!(d != 0, "0 is not a literal");
        Lit::new(Var(d.unsigned_abs()), d > 0)
    }

    pub fn to_dimacs(self) -> i32 {
        let v = self.var().0 as i32;
        if self.is_positive() {
            v
        } else {
            -v
        }
    }

    pub fn var(self) -> Var {
        Var(self.0 >> 1)
    }

    pub fn is_positive(self) -> bool {
        self.0 & 1 == 0
    }

    /// Dense index usable for per-literal tables.
    pub fn code(self) -> usize {
        self.0 as usize
    }
}

impl Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClauseError {
    #[error("clause contains both {0} and -{0}")]
    Tautology(Var),
    #[error("clause contains literal {0} twice")]
    DuplicateLiteral(Lit),
}

/// A disjunction of literals, kept sorted by variable with no repeated variable.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Clause {
    lits: Vec<Lit>,
}

impl Clause {
    pub fn empty() -> Clause {
        Clause { lits: Vec::new() }
    }

    /// Sorts and drops repeated literals. Rejects tautologies.
    pub fn new(lits: impl IntoIterator<Item = Lit>) -> Result<Clause, ClauseError> {
        let mut lits: Vec<Lit> = lits.into_iter().collect();
        lits.sort_unstable();
        lits.dedup();
        for w in lits.windows(2) {
            if w[0].var() == w[1].var() {
                return Err(ClauseError::Tautology(w[0].var()));
            }
        }
        Ok(Clause { lits })
    }

    /// Like [`Clause::new`] but also rejects a repeated literal, as input files must.
    pub fn new_strict(lits: impl IntoIterator<Item = Lit>) -> Result<Clause, ClauseError> {
        let mut lits: Vec<Lit> = lits.into_iter().collect();
        lits.sort_unstable();
        for w in lits.windows(2) {
            if w[0] == w[1] {
                return Err(ClauseError::DuplicateLiteral(w[0]));
            }
            if w[0].var() == w[1].var() {
                return Err(ClauseError::Tautology(w[0].var()));
            }
        }
        Ok(Clause { lits })
    }

    /// Panics on tautologies and zeros; meant for literals written in code.
    pub fn from_dimacs(lits: &[i32]) -> Clause {
        Clause::new(lits.iter().map(|&d| Lit::from_dimacs(d))).expect("tautologous clause")
    }

    pub fn lits(&self) -> &[Lit] {
        &self.lits
    }

    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }

    pub fn contains(&self, lit: Lit) -> bool {
        self.lits.binary_search(&lit).is_ok()
    }

    /// The literal of `var` in this clause, if any.
    pub fn lit_of(&self, var: Var) -> Option<Lit> {
        if let Ok(i) = self.lits.binary_search(&var.pos()) {
            return Some(self.lits[i]);
        }
        self.lits
            .binary_search(&var.neg())
            .ok()
            .map(|i| self.lits[i])
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> + '_ {
        self.lits.iter().map(|l| l.var())
    }

    pub fn to_dimacs(&self) -> Vec<i32> {
        self.lits.iter().map(|l| l.to_dimacs()).collect()
    }

    /// Evaluates under a total or partial assignment; `None` if undetermined.
    pub fn eval(&self, q: &Assignment) -> Option<bool> {
        let mut undetermined = false;
        for &l in &self.lits {
            match q.lit_value(l) {
                Some(true) => return Some(true),
                Some(false) => {}
                None => undetermined = true,
            }
        }
        if undetermined {
            None
        } else {
            Some(false)
        }
    }
}

impl fmt::Debug for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.lits.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, ")")
    }
}

/// DIMACS text, zero-terminated.
impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for l in &self.lits {
            write!(f, "{l} ")?;
        }
        write!(f, "0")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolveError {
    #[error("pivot {0} does not occur with opposite signs")]
    NoPivot(Var),
    #[error("clauses clash on {0} besides the pivot")]
    Unresolvable(Var),
}

/// Resolvent of `c1` and `c2` on `pivot`.
pub fn resolve(c1: &Clause, c2: &Clause, pivot: Var) -> Result<Clause, ResolveError> {
    let (a, b) = match (c1.lit_of(pivot), c2.lit_of(pivot)) {
        (Some(a), Some(b)) if a == !b => (a, b),
        _ => return Err(ResolveError::NoPivot(pivot)),
    };
    let mut lits = Vec::with_capacity(c1.len() + c2.len());
    lits.extend(c1.lits.iter().copied().filter(|&l| l != a));
    lits.extend(c2.lits.iter().copied().filter(|&l| l != b));
    Clause::new(lits).map_err(|e| match e {
        ClauseError::Tautology(v) => ResolveError::Unresolvable(v),
        ClauseError::DuplicateLiteral(_) => unreachable!(),
    })
}

/// True iff `pivot` is the one and only variable on which the clauses clash.
pub fn is_resolvable(c1: &Clause, c2: &Clause, pivot: Var) -> bool {
    let mut clash = None;
    let (mut i, mut j) = (0, 0);
    let (a, b) = (c1.lits(), c2.lits());
    while i < a.len() && j < b.len() {
        let (va, vb) = (a[i].var(), b[j].var());
        if va < vb {
            i += 1;
        } else if vb < va {
            j += 1;
        } else {
            if a[i] != b[j] {
                if clash.is_some() {
                    return false;
                }
                clash = Some(va);
            }
            i += 1;
            j += 1;
        }
    }
    clash == Some(pivot)
}

/// A partial assignment indexed by variable id.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Assignment {
    vals: Vec<Option<bool>>,
}

impl Assignment {
    pub fn new(nvars: u32) -> Assignment {
        Assignment {
            vals: vec![None; nvars as usize + 1],
        }
    }

    pub fn from_lits(nvars: u32, lits: impl IntoIterator<Item = Lit>) -> Assignment {
        let mut a = Assignment::new(nvars);
        for l in lits {
            a.assign(l);
        }
        a
    }

    pub fn nvars(&self) -> u32 {
        (self.vals.len() - 1) as u32
    }

    /// Makes `lit` true.
    pub fn assign(&mut self, lit: Lit) {
        let i = lit.var().index();
        if i >= self.vals.len() {
            self.vals.resize(i + 1, None);
        }
        self.vals[i] = Some(lit.is_positive());
    }

    pub fn unassign(&mut self, var: Var) {
        if let Some(v) = self.vals.get_mut(var.index()) {
            *v = None;
        }
    }

    pub fn value(&self, var: Var) -> Option<bool> {
        self.vals.get(var.index()).copied().flatten()
    }

    pub fn lit_value(&self, lit: Lit) -> Option<bool> {
        self.value(lit.var()).map(|v| v == lit.is_positive())
    }

    /// Assigned literals in variable order.
    pub fn lits(&self) -> Vec<Lit> {
        self.vals
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.map(|b| Var(i as u32).lit(b)))
            .collect()
    }

    /// The clause falsified by exactly this assignment (longest such clause).
    pub fn blocking_clause(&self) -> Clause {
        Clause::new(self.lits().into_iter().map(|l| !l)).expect("assignment is consistent")
    }
}

/// Def. 3: drop falsified literals, or `None` when `q` satisfies the clause.
pub fn cofactor(c: &Clause, q: &Assignment) -> Option<Clause> {
    let mut lits = Vec::with_capacity(c.len());
    for &l in c.lits() {
        match q.lit_value(l) {
            Some(true) => return None,
            Some(false) => {}
            None => lits.push(l),
        }
    }
    Some(Clause { lits })
}

/// Cofactor of a clause set; satisfied clauses disappear.
pub fn cofactor_all<'a>(
    clauses: impl IntoIterator<Item = &'a Clause>,
    q: &Assignment,
) -> Vec<Clause> {
    clauses.into_iter().filter_map(|c| cofactor(c, q)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Quantified,
    Free,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("variable {var} exceeds the declared {nvars} variables")]
    VarOutOfRange { var: Var, nvars: u32 },
    #[error("clause {0} occurs more than once in F1 and F2")]
    DuplicateClause(Clause),
}

/// `∃X[F1 ∧ F2]` with Y = the free variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantFormula {
    nvars: u32,
    kinds: Vec<VarKind>,
    pub f1: Vec<Clause>,
    pub f2: Vec<Clause>,
}

impl QuantFormula {
    /// Variables not listed in `free` are quantified.
    pub fn new(
        nvars: u32,
        free: impl IntoIterator<Item = Var>,
        f1: Vec<Clause>,
        f2: Vec<Clause>,
    ) -> Result<QuantFormula, FormulaError> {
        let mut kinds = vec![VarKind::Quantified; nvars as usize + 1];
        for v in free {
            if v.0 == 0 || v.0 > nvars {
                return Err(FormulaError::VarOutOfRange { var: v, nvars });
            }
            kinds[v.index()] = VarKind::Free;
        }
        let mut seen = HashSet::new();
        for c in f1.iter().chain(&f2) {
            if let Some(v) = c.vars().find(|v| v.0 > nvars) {
                return Err(FormulaError::VarOutOfRange { var: v, nvars });
            }
            if !seen.insert(c) {
                return Err(FormulaError::DuplicateClause(c.clone()));
            }
        }
        Ok(QuantFormula {
            nvars,
            kinds,
            f1,
            f2,
        })
    }

    pub fn nvars(&self) -> u32 {
        self.nvars
    }

    pub fn kind(&self, v: Var) -> VarKind {
        self.kinds[v.index()]
    }

    pub fn is_free(&self, v: Var) -> bool {
        self.kinds[v.index()] == VarKind::Free
    }

    /// A clause is free iff all its variables are free.
    pub fn is_free_clause(&self, c: &Clause) -> bool {
        c.vars().all(|v| self.is_free(v))
    }

    pub fn free_vars(&self) -> Vec<Var> {
        self.vars().filter(|&v| self.is_free(v)).collect()
    }

    pub fn quantified_vars(&self) -> Vec<Var> {
        self.vars().filter(|&v| !self.is_free(v)).collect()
    }

    pub fn vars(&self) -> impl Iterator<Item = Var> {
        (1..=self.nvars).map(Var)
    }

    pub fn clauses(&self) -> impl Iterator<Item = &Clause> {
        self.f1.iter().chain(&self.f2)
    }

    /// Variable kinds indexed by id (slot 0 unused).
    pub fn kinds(&self) -> &[VarKind] {
        &self.kinds
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(l: &[i32]) -> Clause {
        Clause::from_dimacs(l)
    }

    #[test]
    fn lit_packing() {
        let l = Lit::from_dimacs(-7);
        assert_eq!(l.var(), Var(7));
        assert!(!l.is_positive());
        assert_eq!((!l).to_dimacs(), 7);
        assert!(Var(2).pos() < Var(2).neg() && Var(2).neg() < Var(3).pos());
    }

    #[test]
    fn clause_normalization() {
        assert_eq!(c(&[3, -1, 3]).to_dimacs(), vec![-1, 3]);
        assert_eq!(
            Clause::new([Var(2).pos(), Var(2).neg()]),
            Err(ClauseError::Tautology(Var(2)))
        );
        assert_eq!(
            Clause::new_strict([Var(2).pos(), Var(2).pos()]),
            Err(ClauseError::DuplicateLiteral(Var(2).pos()))
        );
        assert!(Clause::empty().is_empty());
        assert_eq!(c(&[-2, 3]).lit_of(Var(2)), Some(Var(2).neg()));
        assert_eq!(c(&[-2, 3]).lit_of(Var(1)), None);
    }

    #[test]
    fn cofactor_examples() {
        let q = Assignment::from_lits(3, [Var(2).pos()]);
        assert_eq!(cofactor(&c(&[-2, 3]), &q), Some(c(&[3])));
        let q = Assignment::from_lits(3, [Var(1).pos()]);
        assert_eq!(cofactor(&c(&[1, 2]), &q), None);
        // y1 = 0 on the §6 instance
        let q = Assignment::from_lits(3, [Var(1).neg()]);
        let f = [c(&[-2, 3]), c(&[1, 2]), c(&[1, -3])];
        assert_eq!(cofactor_all(&f, &q), vec![c(&[-2, 3]), c(&[2]), c(&[-3])]);
    }

    #[test]
    fn resolve_examples() {
        assert_eq!(resolve(&c(&[-2, 3]), &c(&[1, -3]), Var(3)), Ok(c(&[1, -2])));
        assert_eq!(resolve(&c(&[1]), &c(&[-1]), Var(1)), Ok(Clause::empty()));
        assert!(matches!(
            resolve(&c(&[1, 2]), &c(&[-1, -2]), Var(1)),
            Err(ResolveError::Unresolvable(_))
        ));
        assert_eq!(
            resolve(&c(&[1, 2]), &c(&[1, 3]), Var(1)),
            Err(ResolveError::NoPivot(Var(1)))
        );
    }

    #[test]
    fn resolvable_examples() {
        assert!(is_resolvable(&c(&[-2, 3]), &c(&[1, 2]), Var(2)));
        assert!(!is_resolvable(&c(&[1, 2]), &c(&[-1, -2]), Var(1)));
        assert!(!is_resolvable(&c(&[1]), &c(&[1, 2]), Var(1)));
        assert!(!is_resolvable(&c(&[-2, 3]), &c(&[1, 2]), Var(3)));
    }

    #[test]
    fn formula_rejects_duplicates_and_range() {
        let f = QuantFormula::new(2, [Var(1)], vec![c(&[1, 2])], vec![c(&[2, 1])]);
        assert_eq!(f, Err(FormulaError::DuplicateClause(c(&[1, 2]))));
        let f = QuantFormula::new(2, [Var(1)], vec![c(&[1, 3])], vec![]);
        assert!(matches!(f, Err(FormulaError::VarOutOfRange { .. })));
        let f = QuantFormula::new(3, [Var(1)], vec![c(&[-2, 3])], vec![c(&[1])]).unwrap();
        assert_eq!(f.free_vars(), vec![Var(1)]);
        assert_eq!(f.quantified_vars(), vec![Var(2), Var(3)]);
        assert!(f.is_free_clause(&c(&[1])));
        assert!(!f.is_free_clause(&c(&[-2, 3])));
    }

    fn arb_clause(nvars: u32) -> impl Strategy<Value = Clause> {
        proptest::collection::btree_map(1..=nvars, any::<bool>(), 0..5)
            .prop_map(|m| Clause::new(m.into_iter().map(|(v, s)| Var(v).lit(s))).unwrap())
    }

    fn arb_assignment(nvars: u32) -> impl Strategy<Value = Assignment> {
        proptest::collection::vec(proptest::option::of(any::<bool>()), nvars as usize).prop_map(
            move |v| {
                Assignment::from_lits(
                    nvars,
                    v.into_iter()
                        .enumerate()
                        .filter_map(|(i, b)| b.map(|b| Var(i as u32 + 1).lit(b))),
                )
            },
        )
    }

    proptest! {
        #[test]
        fn cofactor_composes(cl in arb_clause(6), q in arb_assignment(6), full in proptest::collection::vec(any::<bool>(), 6)) {
            let p = Assignment::from_lits(6, (1..=6).map(|i| {
                let v = Var(i);
                v.lit(q.value(v).unwrap_or(full[i as usize - 1]))
            }));
            let rest = Assignment::from_lits(6, p.lits().into_iter().filter(|l| q.value(l.var()).is_none()));
            let two_step = cofactor(&cl, &q).and_then(|r| cofactor(&r, &rest));
            prop_assert_eq!(two_step, cofactor(&cl, &p));
        }

        #[test]
        fn normalization_order_insensitive(cl in arb_clause(8)) {
            let mut rev: Vec<Lit> = cl.lits().to_vec();
            rev.reverse();
            rev.extend_from_slice(cl.lits());
            prop_assert_eq!(Clause::new(rev).unwrap(), cl.clone());
            prop_assert_eq!(Clause::new(cl.lits().to_vec()).unwrap(), cl);
        }

        #[test]
        fn resolvent_is_implied(a in arb_clause(5), b in arb_clause(5), v in 1u32..=5, p in proptest::collection::vec(any::<bool>(), 5)) {
            let pivot = Var(v);
            if let Ok(r) = resolve(&a, &b, pivot) {
                prop_assert!(is_resolvable(&a, &b, pivot));
                let q = Assignment::from_lits(5, (1..=5).map(|i| Var(i).lit(p[i as usize - 1])));
                if a.eval(&q) == Some(true) && b.eval(&q) == Some(true) {
                    prop_assert_eq!(r.eval(&q), Some(true));
                }
            } else {
                prop_assert!(!is_resolvable(&a, &b, pivot));
            }
        }
    }
}
