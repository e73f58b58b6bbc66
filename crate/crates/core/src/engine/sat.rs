//! A small CDCL SAT solver: two watched literals, 1-UIP learning, VSIDS, Luby restarts.
//! Used for the engine's internal satisfiability checks and by `propgen`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::formula::{Clause, Lit, Var};

#[derive(Clone, Copy, PartialEq)]
struct Scored(f64, u32);

impl Eq for Scored {}

impl PartialOrd for Scored {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scored {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .total_cmp(&other.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

pub struct Cdcl {
    nvars: u32,
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<usize>>,
    value: Vec<Option<bool>>,
    level: Vec<u32>,
    reason: Vec<Option<usize>>,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    activity: Vec<f64>,
    inc: f64,
    heap: BinaryHeap<Scored>,
    phase: Vec<bool>,
    seen: Vec<bool>,
    unsat: bool,
    core: Vec<Lit>,
    pub conflicts: u64,
}

impl Cdcl {
    pub fn new(nvars: u32) -> Cdcl {
        let n = nvars as usize + 1;
        let mut s = Cdcl {
            nvars,
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * n + 2],
            value: vec![None; n],
            level: vec![0; n],
            reason: vec![None; n],
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            activity: vec![0.0; n],
            inc: 1.0,
            heap: BinaryHeap::new(),
            phase: vec![false; n],
            seen: vec![false; n],
            unsat: false,
            core: Vec::new(),
            conflicts: 0,
        };
        for v in 1..=nvars {
            s.heap.push(Scored(0.0, v));
        }
        s
    }

    pub fn from_clauses<'a>(nvars: u32, clauses: impl IntoIterator<Item = &'a Clause>) -> Cdcl {
        let mut s = Cdcl::new(nvars);
        for c in clauses {
            s.add_clause(c.lits());
        }
        s
    }

    fn lit_value(&self, l: Lit) -> Option<bool> {
        self.value[l.var().index()].map(|v| v == l.is_positive())
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    /// Adds a clause at level 0. Returns false once the formula is known unsatisfiable.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        if self.unsat {
            return false;
        }
        self.backtrack(0);
        let mut c: Vec<Lit> = Vec::with_capacity(lits.len());
        for &l in lits {
            assert!(l.var().0 <= self.nvars, "literal {l} out of range");
            match self.lit_value(l) {
                Some(true) => return true,
                Some(false) => {}
                None => {
                    if c.contains(&!l) {
                        return true;
                    }
                    if !c.contains(&l) {
                        c.push(l)
                    }
                }
            }
        }
        match c.len() {
            0 => {
                self.unsat = true;
                false
            }
            1 => {
                self.enqueue(c[0], None);
                if self.propagate().is_some() {
                    self.unsat = true;
                }
                !self.unsat
            }
            _ => {
                self.attach(c);
                true
            }
        }
    }

    fn attach(&mut self, c: Vec<Lit>) -> usize {
        let i = self.clauses.len();
        self.watches[(!c[0]).code()].push(i);
        self.watches[(!c[1]).code()].push(i);
        self.clauses.push(c);
        i
    }

    fn enqueue(&mut self, l: Lit, reason: Option<usize>) {
        let v = l.var().index();
        self.value[v] = Some(l.is_positive());
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn propagate(&mut self) -> Option<usize> {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[p.code()]);
            let mut i = 0;
            let mut conflict = None;
            while i < ws.len() {
                let ci = ws[i];
                let c = &mut self.clauses[ci];
                if c[0] == false_lit {
                    c.swap(0, 1);
                }
                let first = c[0];
                if self.value[first.var().index()].map(|v| v == first.is_positive()) == Some(true) {
                    i += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..c.len() {
                    let l = c[k];
                    if self.value[l.var().index()].map(|v| v == l.is_positive()) != Some(false) {
                        c.swap(1, k);
                        self.watches[(!c[1]).code()].push(ci);
                        ws.swap_remove(i);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                match self.lit_value(first) {
                    Some(false) => {
                        conflict = Some(ci);
                        break;
                    }
                    _ => {
                        self.enqueue(first, Some(ci));
                        i += 1;
                    }
                }
            }
            self.watches[p.code()].extend(ws);
            if conflict.is_some() {
                self.qhead = self.trail.len();
                return conflict;
            }
        }
        None
    }

    fn bump(&mut self, v: Var) {
        let i = v.index();
        self.activity[i] += self.inc;
        if self.activity[i] > 1e100 {
            for a in self.activity.iter_mut() {
                *a *= 1e-100;
            }
            self.inc *= 1e-100;
            self.heap = (1..=self.nvars)
                .map(|v| Scored(self.activity[v as usize], v))
                .collect();
        } else {
            self.heap.push(Scored(self.activity[i], v.0));
        }
    }

    fn analyze(&mut self, mut confl: usize) -> (Vec<Lit>, u32) {
        let mut learnt = vec![Lit::new(Var(1), true)];
        let mut pending = 0;
        let mut idx = self.trail.len();
        let mut p: Option<Lit> = None;
        loop {
            let c = self.clauses[confl].clone();
            for &q in c.iter().skip(if p.is_some() { 1 } else { 0 }) {
                let v = q.var();
                if !self.seen[v.index()] && self.level[v.index()] > 0 {
                    self.seen[v.index()] = true;
                    self.bump(v);
                    if self.level[v.index()] >= self.decision_level() {
                        pending += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var().index()] {
                    break;
                }
            }
            let l = self.trail[idx];
            p = Some(l);
            self.seen[l.var().index()] = false;
            pending -= 1;
            if pending == 0 {
                learnt[0] = !l;
                break;
            }
            confl = self.reason[l.var().index()].expect("implied literal has a reason");
            // keep the implied literal first, as `propagate` expects
            let c = &mut self.clauses[confl];
            if let Some(pos) = c.iter().position(|&x| x == l) {
                c.swap(0, pos);
            }
        }
        for l in &learnt[1..] {
            self.seen[l.var().index()] = false;
        }
        let mut bt = 0;
        if learnt.len() > 1 {
            let mut max_i = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var().index()] > self.level[learnt[max_i].var().index()] {
                    max_i = i;
                }
            }
            learnt.swap(1, max_i);
            bt = self.level[learnt[1].var().index()];
        }
        (learnt, bt)
    }

    fn backtrack(&mut self, lvl: u32) {
        if self.decision_level() <= lvl {
            return;
        }
        let lim = self.trail_lim[lvl as usize];
        for i in (lim..self.trail.len()).rev() {
            let l = self.trail[i];
            let v = l.var().index();
            self.phase[v] = l.is_positive();
            self.value[v] = None;
            self.reason[v] = None;
            self.heap.push(Scored(self.activity[v], v as u32));
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(lvl as usize);
        self.qhead = self.trail.len();
    }

    fn pick(&mut self) -> Option<Lit> {
        while let Some(Scored(_, v)) = self.heap.pop() {
            if self.value[v as usize].is_none() {
                return Some(Var(v).lit(self.phase[v as usize]));
            }
        }
        None
    }

    /// After an UNSAT answer under assumptions: a subset of them that is already
    /// inconsistent with the clauses. Empty when the clauses alone are unsatisfiable.
    pub fn core(&self) -> &[Lit] {
        &self.core
    }

    fn analyze_final(&mut self, a: Lit) {
        self.core.push(a);
        let v = a.var().index();
        if self.level[v] == 0 {
            return;
        }
        self.seen[v] = true;
        let start = self.trail_lim[0];
        for i in (start..self.trail.len()).rev() {
            let l = self.trail[i];
            let x = l.var().index();
            if !self.seen[x] {
                continue;
            }
            self.seen[x] = false;
            match self.reason[x] {
                None => self.core.push(l),
                Some(c) => {
                    for k in 0..self.clauses[c].len() {
                        let q = self.clauses[c][k];
                        let qv = q.var().index();
                        if qv != x && self.level[qv] > 0 {
                            self.seen[qv] = true;
                        }
                    }
                }
            }
        }
    }

    /// Solves under `assumptions`; returns a total model on SAT.
    pub fn solve(&mut self, assumptions: &[Lit]) -> Option<Vec<bool>> {
        self.solve_limited(assumptions, u64::MAX)
            .expect("no conflict limit")
    }

    /// `Err(())` when the conflict limit is hit.
    #[allow(clippy::result_unit_err)]
    pub fn solve_limited(
        &mut self,
        assumptions: &[Lit],
        max_conflicts: u64,
    ) -> Result<Option<Vec<bool>>, ()> {
        self.core.clear();
        if self.unsat {
            return Ok(None);
        }
        self.backtrack(0);
        if self.propagate().is_some() {
            self.unsat = true;
            return Ok(None);
        }
        let start = self.conflicts;
        let mut luby_i = 0u32;
        let mut budget = 100 * luby(luby_i);
        let mut since_restart = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.conflicts += 1;
                since_restart += 1;
                if self.decision_level() == 0 {
                    self.unsat = true;
                    return Ok(None);
                }
                if self.conflicts - start > max_conflicts {
                    self.backtrack(0);
                    return Err(());
                }
                let (learnt, bt) = self.analyze(confl);
                self.backtrack(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let l0 = learnt[0];
                    let ci = self.attach(learnt);
                    self.enqueue(l0, Some(ci));
                }
                self.inc *= 1.0 / 0.95;
                continue;
            }
            if since_restart >= budget {
                since_restart = 0;
                luby_i += 1;
                budget = 100 * luby(luby_i);
                self.backtrack(0);
                continue;
            }
            // assumptions occupy the first decision levels
            let dl = self.decision_level() as usize;
            let next = if dl < assumptions.len() {
                let a = assumptions[dl];
                match self.lit_value(a) {
                    Some(true) => {
                        self.trail_lim.push(self.trail.len());
                        continue;
                    }
                    Some(false) => {
                        self.analyze_final(a);
                        self.backtrack(0);
                        return Ok(None);
                    }
                    None => a,
                }
            } else {
                match self.pick() {
                    Some(l) => l,
                    None => {
                        let model = (0..=self.nvars as usize)
                            .map(|v| self.value[v].unwrap_or(false))
                            .collect();
                        self.backtrack(0);
                        return Ok(Some(model));
                    }
                }
            };
            self.trail_lim.push(self.trail.len());
            self.enqueue(next, None);
        }
    }
}

fn luby(i: u32) -> u64 {
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < i as u64 + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    let mut x = i as u64;
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    1u64 << seq
}

/// One-shot satisfiability check; the model is indexed by variable id.
pub fn solve(nvars: u32, clauses: &[Clause], assumptions: &[Lit]) -> Option<Vec<bool>> {
    Cdcl::from_clauses(nvars, clauses).solve(assumptions)
}

/// `clauses ⊨ c` via the CDCL solver.
pub fn implies(nvars: u32, clauses: &[Clause], c: &Clause) -> bool {
    let assumptions: Vec<Lit> = c.lits().iter().map(|&l| !l).collect();
    solve(nvars, clauses, &assumptions).is_none()
}
