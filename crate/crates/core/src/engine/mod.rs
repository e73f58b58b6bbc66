//! The S-tart PQE solver.
//!
//! [`take_out`] repeatedly picks a quantified clause of F1 (the primary target) and
//! proves it redundant with a CDCL-like search ([`search`]). Redundancy in a subspace
//! is recorded by certificate clauses: conflict certificates are added to the formula,
//! non-conflict ones live only while their conditional is unit.

pub mod sat;
mod search;

use std::collections::HashSet;
use std::time::{Duration, Instant};

use crate::formula::{is_resolvable, Clause, Lit, QuantFormula, Var};

pub use search::{Origin, PrimaryResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecisionOrder {
    /// Lowest variable id first.
    #[default]
    Ascending,
    /// Highest activity first; activity is bumped for variables of learned certificates.
    Activity,
}

#[derive(Debug, Clone, Default)]
pub struct Options {
    pub time_limit: Option<Duration>,
    pub order: DecisionOrder,
    /// Record [`Event`]s.
    pub trace: bool,
    /// Attach `q` and the active formula to blocked events (expensive).
    pub snapshots: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Solved,
    /// The formula is unsatisfiable; the solution is the empty clause.
    Unsat,
    /// The budget ran out; `clauses` is the partial F1 and is not a solution.
    TimedOut,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub clauses: Vec<Clause>,
    pub status: Status,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub targets: u64,
    pub decisions: u64,
    pub conflict_certs: u64,
    pub nonconflict_certs: u64,
    pub special_clauses: u64,
    pub blocked: u64,
    pub levels: u64,
    pub max_depth: u64,
    pub duplicates: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Event {
    TargetStart {
        depth: usize,
        target: Clause,
    },
    Decision {
        lit: Lit,
        level: u32,
    },
    ConflictCert {
        depth: usize,
        clause: Clause,
        origin: Origin,
    },
    SpecialClause {
        clause: Clause,
        origin: Origin,
    },
    NonConflictCert {
        depth: usize,
        target: Clause,
        clause: Clause,
    },
    Blocked {
        depth: usize,
        target: Clause,
        pivot: Var,
        cert: Clause,
        /// The part of the trail the certificate depends on, plus target-level extensions.
        /// The target is redundant in `formula` under `q`.
        q: Vec<Lit>,
        /// Active clauses (temporarily removed ones excluded), target included.
        formula: Vec<Clause>,
    },
    LevelCreated {
        depth: usize,
        parent: Clause,
        pivot: Var,
        members: Vec<Clause>,
    },
    MemberProved {
        depth: usize,
        member: Clause,
        cert: Clause,
    },
    TargetProved {
        depth: usize,
        target: Clause,
        cert: Clause,
    },
    Duplicate {
        clause: Clause,
    },
    MsTart {
        clause: Clause,
        conflict: bool,
    },
}

#[derive(Debug, Clone)]
pub struct Run {
    pub solution: Solution,
    pub stats: Stats,
    pub trace: Vec<Event>,
    /// Every clause added to the formula during the run (conflict certificates and ĥK).
    pub added: Vec<Clause>,
}

/// Solves PQE for `f`: takes F1 out of `∃X[F1 ∧ F2]`.
pub fn take_out(f: &QuantFormula, opts: &Options) -> Solution {
    run(f, opts).solution
}

pub fn run(f: &QuantFormula, opts: &Options) -> Run {
    let deadline = opts.time_limit.map(|d| Instant::now() + d);
    let mut stats = Stats::default();
    let mut trace = Vec::new();
    let mut added = Vec::new();
    let mut f1 = f.f1.clone();
    let f2 = f.f2.clone();
    let mut proved: HashSet<Clause> = HashSet::new();
    let finish = |clauses, status, stats, trace, added| Run {
        solution: Solution { clauses, status },
        stats,
        trace,
        added,
    };
    if f1.iter().chain(&f2).any(|c| c.is_empty()) {
        return finish(vec![Clause::empty()], Status::Unsat, stats, trace, added);
    }
    loop {
        let Some(ti) = f1.iter().position(|c| !f.is_free_clause(c)) else {
            return finish(f1, Status::Solved, stats, trace, added);
        };
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return finish(f1, Status::TimedOut, stats, trace, added);
        }
        stats.targets += 1;
        let res = search::prove_primary(
            f, &f1, &f2, ti, &proved, opts, deadline, &mut stats, &mut trace,
        );
        added.extend(res.added.iter().cloned());
        match res.cert {
            None => return finish(f1, Status::TimedOut, stats, trace, added),
            Some(k) if k.is_empty() => {
                return finish(vec![Clause::empty()], Status::Unsat, stats, trace, added)
            }
            Some(_) => {
                let target = f1.remove(ti);
                let existing: HashSet<Clause> = f1.iter().chain(&f2).cloned().collect();
                for c in res.new_f1 {
                    if !existing.contains(&c) && c != target {
                        f1.push(c);
                    }
                }
                proved.insert(target);
            }
        }
    }
}

/// Prop. 2 for a blocked target: `K' ∨ K''`, where `K'` negates the assignments of `q`
/// and `K''` holds `l(w)` plus the target literals that make every clause of `F|q`
/// containing `¬l(w)` unresolvable with `target|q`. Returns `None` if the target is not
/// blocked at `w` under `q`.
pub fn build_blocked_cert(
    formula: &[Clause],
    target: &Clause,
    w: Var,
    q: &[Lit],
) -> Option<Clause> {
    let qa = crate::formula::Assignment::from_lits(
        q.iter().map(|l| l.var().0).max().unwrap_or(0),
        q.iter().copied(),
    );
    let t = crate::formula::cofactor(target, &qa)?;
    let lw = t.lit_of(w)?;
    let mut k2 = vec![lw];
    for c in formula {
        if c == target {
            continue;
        }
        let Some(cq) = crate::formula::cofactor(c, &qa) else {
            continue;
        };
        if !cq.contains(!lw) {
            continue;
        }
        if is_resolvable(&t, &cq, w) {
            return None;
        }
        for &m in cq.lits() {
            if m != !lw && t.contains(!m) {
                k2.push(!m);
            }
        }
    }
    Clause::new(q.iter().map(|&l| !l).chain(k2)).ok()
}

/// SAT via PQE: with `x` all-false, take out the clauses `x` falsifies.
pub fn sat_via_pqe(nvars: u32, clauses: &[Clause], opts: &Options) -> Option<bool> {
    let (h, rest): (Vec<Clause>, Vec<Clause>) = clauses
        .iter()
        .cloned()
        .partition(|c| c.lits().iter().all(|l| l.is_positive()));
    let mut h2: Vec<Clause> = Vec::new();
    for c in h {
        if !h2.contains(&c) {
            h2.push(c);
        }
    }
    let mut rest2: Vec<Clause> = Vec::new();
    for c in rest {
        if !rest2.contains(&c) {
            rest2.push(c);
        }
    }
    let f = QuantFormula::new(nvars, [], h2, rest2).expect("well-formed CNF");
    match take_out(&f, opts).status {
        Status::Solved => Some(true),
        Status::Unsat => Some(false),
        Status::TimedOut => None,
    }
}
