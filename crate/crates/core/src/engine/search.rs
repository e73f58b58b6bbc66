//! PrvRed: the per-target search with BCP, certificate learning, blocked-target
//! detection, recursive target levels, special clauses and the duplicate fallback.

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use super::sat::Cdcl;
use super::{DecisionOrder, Event, Options, Stats};
use crate::formula::{resolve, Clause, Lit, QuantFormula, Var};

type CIdx = usize;
type KIdx = usize;

/// Which half of the formula a clause belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    F1,
    F2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Reason {
    Decision,
    /// The satisfying assignment of a unit parent target that opens a target level.
    Ext,
    Clause(CIdx),
    Cert(KIdx),
}

struct Entry {
    clause: Clause,
    origin: Origin,
    learned: bool,
    removed: bool,
    sat: u32,
    fals: u32,
}

struct StoredCert {
    clause: Clause,
    cond: Vec<Lit>,
    alive: bool,
    /// Kept across backtracking; MS-tart certificates at depth 0 hold for the whole run.
    sticky: bool,
}

struct Frame {
    target: CIdx,
    /// Trail length at frame start: entries below it form q_init.
    p0: usize,
    base: u32,
    certs: Vec<KIdx>,
    pending: Option<Bct>,
}

/// A backtracking condition found by BCP.
#[derive(Debug, Clone)]
enum Bct {
    /// (a) a clause of F (possibly the target) is falsified.
    Conflict(CIdx),
    /// (b) a clause became unit on a literal of the target.
    Implied(CIdx),
    /// A stored certificate with a falsified conditional.
    CertImplied(KIdx),
    /// (c) the target is blocked; carries `K_bct`.
    Blocked(Clause),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Conflict,
    NonConflict,
}

struct Learned {
    clause: Clause,
    kind: Kind,
    idx: Option<CIdx>,
    sticky: bool,
}

enum Fixpoint {
    Reason(Bct),
    /// New assignments were made; propagate again.
    Again,
    Quiet,
}

enum Settle {
    Done,
    Conflict(CIdx),
    Unit(CIdx),
}

#[derive(PartialEq, Eq)]
enum Status {
    Satisfied,
    Falsified,
    Unit,
    Open,
}

#[derive(Debug)]
enum Interrupt {
    Timeout,
    /// A learned quantified clause repeats a target; carries the Y assignment.
    Duplicate(Vec<Lit>),
}

struct Cert {
    clause: Clause,
    kind: Kind,
    idx: Option<CIdx>,
}

pub struct PrimaryResult {
    /// `None` on timeout.
    pub cert: Option<Clause>,
    /// Learned clauses that go to F1.
    pub new_f1: Vec<Clause>,
    pub added: Vec<Clause>,
}

struct Search<'a> {
    opts: &'a Options,
    free: Vec<bool>,
    db: Vec<Entry>,
    occ: Vec<Vec<CIdx>>,
    index: HashMap<Clause, CIdx>,
    val: Vec<Option<bool>>,
    level: Vec<u32>,
    reason: Vec<Reason>,
    pos: Vec<usize>,
    trail: Vec<Lit>,
    level_start: Vec<usize>,
    qhead: usize,
    certs: Vec<StoredCert>,
    frames: Vec<Frame>,
    proved: &'a HashSet<Clause>,
    deadline: Option<Instant>,
    ticks: u64,
    activity: Vec<f64>,
    act_inc: f64,
    stats: &'a mut Stats,
    trace: &'a mut Vec<Event>,
    added: Vec<Clause>,
    /// Clauses below this index have been checked by `settle_fresh`.
    settled: usize,
    /// Set after a duplicate: the primary frame assigns all of Y before opening target
    /// levels, so MS-tart cubes are settled where their certificates apply.
    y_first: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn prove_primary(
    f: &QuantFormula,
    f1: &[Clause],
    f2: &[Clause],
    target: usize,
    proved: &HashSet<Clause>,
    opts: &Options,
    deadline: Option<Instant>,
    stats: &mut Stats,
    trace: &mut Vec<Event>,
) -> PrimaryResult {
    let n = f.nvars() as usize + 1;
    let mut s = Search {
        opts,
        free: (0..n).map(|i| i > 0 && f.is_free(Var(i as u32))).collect(),
        db: Vec::new(),
        occ: vec![Vec::new(); 2 * n + 2],
        index: HashMap::new(),
        val: vec![None; n],
        level: vec![0; n],
        reason: vec![Reason::Decision; n],
        pos: vec![0; n],
        trail: Vec::new(),
        level_start: vec![0],
        qhead: 0,
        certs: Vec::new(),
        frames: Vec::new(),
        proved,
        deadline,
        ticks: 0,
        activity: vec![0.0; n],
        act_inc: 1.0,
        stats,
        trace,
        added: Vec::new(),
        settled: 0,
        y_first: false,
    };
    for c in f1 {
        s.add_clause(c.clone(), Origin::F1, false);
    }
    for c in f2 {
        s.add_clause(c.clone(), Origin::F2, false);
    }
    s.settled = s.db.len();
    let tidx = s.index[&f1[target]];
    let cert = s.primary(tidx);
    let new_f1 =
        s.db.iter()
            .filter(|e| e.learned && e.origin == Origin::F1)
            .map(|e| e.clause.clone())
            .collect();
    PrimaryResult {
        cert,
        new_f1,
        added: s.added,
    }
}

impl<'a> Search<'a> {
    fn tracing(&self) -> bool {
        self.opts.trace
    }

    fn emit(&mut self, e: Event) {
        self.trace.push(e);
    }

    fn cur_level(&self) -> u32 {
        (self.level_start.len() - 1) as u32
    }

    fn depth(&self) -> usize {
        self.frames.len() - 1
    }

    fn frame(&self) -> &Frame {
        self.frames.last().expect("active frame")
    }

    fn frame_mut(&mut self) -> &mut Frame {
        self.frames.last_mut().expect("active frame")
    }

    fn target(&self) -> &Clause {
        &self.db[self.frame().target].clause
    }

    fn lit_value(&self, l: Lit) -> Option<bool> {
        self.val[l.var().index()].map(|v| v == l.is_positive())
    }

    fn is_free(&self, v: Var) -> bool {
        self.free[v.index()]
    }

    fn is_quantified_clause(&self, c: &Clause) -> bool {
        c.vars().any(|v| !self.is_free(v))
    }

    fn add_clause(&mut self, clause: Clause, origin: Origin, learned: bool) -> CIdx {
        if let Some(&i) = self.index.get(&clause) {
            return i;
        }
        let i = self.db.len();
        let (mut sat, mut fals) = (0, 0);
        for &l in clause.lits() {
            match self.lit_value(l) {
                Some(true) => sat += 1,
                Some(false) => fals += 1,
                None => {}
            }
            self.occ[l.code()].push(i);
        }
        self.index.insert(clause.clone(), i);
        self.db.push(Entry {
            clause,
            origin,
            learned,
            removed: false,
            sat,
            fals,
        });
        i
    }

    fn assign(&mut self, l: Lit, reason: Reason) {
        let v = l.var().index();
        debug_assert!(self.val[v].is_none(), "reassigning {l}");
        self.val[v] = Some(l.is_positive());
        self.level[v] = self.cur_level();
        self.reason[v] = reason;
        self.pos[v] = self.trail.len();
        self.trail.push(l);
        for &c in &self.occ[l.code()] {
            self.db[c].sat += 1;
        }
        for &c in &self.occ[(!l).code()] {
            self.db[c].fals += 1;
        }
    }

    fn new_level(&mut self) {
        self.level_start.push(self.trail.len());
    }

    fn backtrack_to(&mut self, lvl: u32) {
        if lvl >= self.cur_level() {
            return;
        }
        let lim = self.level_start[lvl as usize + 1];
        while self.trail.len() > lim {
            let l = self.trail.pop().unwrap();
            self.val[l.var().index()] = None;
            for &c in &self.occ[l.code()] {
                self.db[c].sat -= 1;
            }
            for &c in &self.occ[(!l).code()] {
                self.db[c].fals -= 1;
            }
        }
        self.level_start.truncate(lvl as usize + 1);
        self.qhead = self.qhead.min(self.trail.len());
    }

    fn check_time(&mut self) -> Result<(), Interrupt> {
        self.ticks += 1;
        if self.ticks.is_multiple_of(64) {
            if let Some(d) = self.deadline {
                if Instant::now() >= d {
                    return Err(Interrupt::Timeout);
                }
            }
        }
        Ok(())
    }

    fn y_assignment(&self) -> Vec<Lit> {
        let mut y: Vec<Lit> = self
            .trail
            .iter()
            .copied()
            .filter(|l| self.is_free(l.var()))
            .collect();
        y.sort();
        y
    }

    // ---- top level ------------------------------------------------------------

    fn primary(&mut self, target: CIdx) -> Option<Clause> {
        self.frames.push(Frame {
            target,
            p0: 0,
            base: 0,
            certs: Vec::new(),
            pending: None,
        });
        if self.tracing() {
            let t = self.db[target].clause.clone();
            self.emit(Event::TargetStart {
                depth: 0,
                target: t,
            });
        }
        self.y_first = false;
        self.initial_units();
        let mut fallback: Option<Bct> = None;
        loop {
            let r = match fallback.take() {
                Some(b) => self.lrn(b, false).map(|mut l| {
                    // a full Y cube settled by the fallback must not be entered again
                    l.sticky = true;
                    self.backtrack(l)
                }),
                None => self.prv_red_step(),
            };
            match r {
                Ok(None) => {}
                Ok(Some(k)) => {
                    if self.tracing() {
                        let t = self.db[target].clause.clone();
                        self.emit(Event::TargetProved {
                            depth: 0,
                            target: t,
                            cert: k.clause.clone(),
                        });
                    }
                    self.frames.pop();
                    return Some(k.clause);
                }
                Err(Interrupt::Timeout) => return None,
                Err(Interrupt::Duplicate(y)) => {
                    debug_assert_eq!(self.frames.len(), 1);
                    self.y_first = true;
                    fallback = Some(self.ms_tart(&y));
                }
            }
        }
    }

    /// Queues unit clauses of F; such clauses never see a literal become false.
    fn initial_units(&mut self) {
        let target = self.frame().target;
        for i in 0..self.db.len() {
            let e = &self.db[i];
            if e.removed || e.sat > 0 || i == target {
                continue;
            }
            let n = e.clause.len() as u32;
            if e.fals == n {
                self.frame_mut().pending = Some(Bct::Conflict(i));
                return;
            }
            if e.fals + 1 == n {
                let u = self.unassigned_lit(i);
                if self.db[target].clause.contains(u) {
                    self.frame_mut().pending = Some(Bct::Implied(i));
                    return;
                }
                self.assign(u, Reason::Clause(i));
            }
        }
    }

    fn unassigned_lit(&self, c: CIdx) -> Lit {
        *self.db[c]
            .clause
            .lits()
            .iter()
            .find(|&&l| self.lit_value(l).is_none())
            .expect("unit clause has an unassigned literal")
    }

    /// Runs the current frame to completion.
    fn prv_red(&mut self) -> Result<Cert, Interrupt> {
        loop {
            if let Some(k) = self.prv_red_step()? {
                return Ok(k);
            }
        }
    }

    /// One BCP/decide or BCP/learn/backtrack round. `Some` once the target is proved.
    fn prv_red_step(&mut self) -> Result<Option<Cert>, Interrupt> {
        self.check_time()?;
        match self.bcp()? {
            None => {
                self.decide();
                Ok(None)
            }
            Some(b) => {
                let l = self.lrn(b, true)?;
                Ok(self.backtrack(l))
            }
        }
    }

    // ---- decisions ------------------------------------------------------------

    fn decide(&mut self) {
        let pick = |s: &Self, want_free: bool| -> Option<Var> {
            let cands = (1..s.val.len())
                .map(|i| Var(i as u32))
                .filter(|&v| s.val[v.index()].is_none() && s.is_free(v) == want_free);
            match s.opts.order {
                DecisionOrder::Ascending => cands.min(),
                DecisionOrder::Activity => cands.fold(None, |best: Option<Var>, v| match best {
                    Some(b) if s.activity[b.index()] >= s.activity[v.index()] => Some(b),
                    _ => Some(v),
                }),
            }
        };
        let v = pick(self, true)
            .or_else(|| pick(self, false))
            .expect("BCP reached a total assignment without a backtracking condition");
        let lit = match self.target().lit_of(v) {
            Some(t) => !t,
            None => v.neg(),
        };
        self.stats.decisions += 1;
        self.new_level();
        self.assign(lit, Reason::Decision);
        if self.tracing() {
            let level = self.cur_level();
            self.emit(Event::Decision { lit, level });
        }
    }

    // ---- BCP ------------------------------------------------------------------

    fn bcp(&mut self) -> Result<Option<Bct>, Interrupt> {
        if let Some(b) = self.frame_mut().pending.take() {
            return Ok(Some(b));
        }
        loop {
            if let Some(b) = self.propagate_clauses() {
                return Ok(Some(b));
            }
            match self.propagate_certs() {
                Some(Ok(())) => continue,
                Some(Err(b)) => return Ok(Some(b)),
                None => {}
            }
            match self.target_conditions()? {
                Fixpoint::Reason(b) => return Ok(Some(b)),
                Fixpoint::Again => continue,
                Fixpoint::Quiet => return Ok(None),
            }
        }
    }

    fn propagate_clauses(&mut self) -> Option<Bct> {
        let target = self.frame().target;
        while self.qhead < self.trail.len() {
            let l = self.trail[self.qhead];
            self.qhead += 1;
            let nl = (!l).code();
            let mut i = 0;
            while i < self.occ[nl].len() {
                let c = self.occ[nl][i];
                i += 1;
                let e = &self.db[c];
                if e.removed || e.sat > 0 {
                    continue;
                }
                let n = e.clause.len() as u32;
                if e.fals == n {
                    return Some(Bct::Conflict(c));
                }
                if c == target || e.fals + 1 != n {
                    continue;
                }
                let u = self.unassigned_lit(c);
                if self.db[target].clause.contains(u) {
                    return Some(Bct::Implied(c));
                }
                self.assign(u, Reason::Clause(c));
            }
        }
        None
    }

    /// Derives assignments from stored certificates of the current frame.
    fn propagate_certs(&mut self) -> Option<Result<(), Bct>> {
        let ks = self.frame().certs.clone();
        let mut derived = false;
        for k in ks {
            if !self.certs[k].alive {
                continue;
            }
            let mut unassigned = None;
            let mut n_un = 0;
            let mut sat = false;
            for &l in &self.certs[k].cond {
                match self.lit_value(l) {
                    Some(true) => {
                        sat = true;
                        break;
                    }
                    Some(false) => {}
                    None => {
                        n_un += 1;
                        unassigned = Some(l);
                    }
                }
            }
            if sat {
                continue;
            }
            match n_un {
                0 => return Some(Err(Bct::CertImplied(k))),
                1 => {
                    self.assign(unassigned.unwrap(), Reason::Cert(k));
                    derived = true;
                }
                _ => {}
            }
        }
        if derived {
            Some(Ok(()))
        } else {
            None
        }
    }

    /// Blocked check and target-unit handling at a BCP fixpoint.
    fn target_conditions(&mut self) -> Result<Fixpoint, Interrupt> {
        let tidx = self.frame().target;
        let tlits: Vec<Lit> = self.db[tidx].clause.lits().to_vec();
        debug_assert!(tlits.iter().all(|&l| self.lit_value(l) != Some(true)));
        let open: Vec<Lit> = tlits
            .iter()
            .copied()
            .filter(|&l| self.lit_value(l).is_none())
            .collect();
        for &t in &open {
            if self.is_free(t.var()) {
                continue;
            }
            if let Some((k2, r)) = self.blocked_at(t) {
                let k = self.k_prime_with(&r, k2);
                return Ok(Fixpoint::Reason(self.blocked(t, k, &r)));
            }
        }
        if open.len() == 1 && !self.is_free(open[0].var()) {
            if self.y_first && self.depth() == 0 && self.y_open() {
                return Ok(Fixpoint::Quiet);
            }
            return self.on_target_unit(open[0]);
        }
        Ok(Fixpoint::Quiet)
    }

    fn y_open(&self) -> bool {
        (1..self.val.len()).any(|i| self.val[i].is_none() && self.free[i])
    }

    fn blocked(&mut self, pivot: Lit, k: Clause, r: &[Lit]) -> Bct {
        self.stats.blocked += 1;
        if self.tracing() {
            let (q, formula) = if self.opts.snapshots {
                let ext = self
                    .trail
                    .iter()
                    .copied()
                    .filter(|l| self.reason[l.var().index()] == Reason::Ext);
                (
                    r.iter().copied().chain(ext).collect(),
                    self.active_clauses(),
                )
            } else {
                (Vec::new(), Vec::new())
            };
            let depth = self.depth();
            let target = self.target().clone();
            self.emit(Event::Blocked {
                depth,
                target,
                pivot: pivot.var(),
                cert: k.clone(),
                q,
                formula,
            });
        }
        Bct::Blocked(k)
    }

    fn active_clauses(&self) -> Vec<Clause> {
        self.db
            .iter()
            .filter(|e| !e.removed)
            .map(|e| e.clause.clone())
            .collect()
    }

    /// `Some((K'', r))` if the target is blocked at the variable of `t` in `F|q`. `r` is
    /// the part of `q` the argument needs: one satisfying literal for each clause with
    /// `¬t` that `q` satisfies. The target stays blocked in `F|r`, so Prop. 2 applies
    /// to `r` as well as to `q`.
    fn blocked_at(&self, t: Lit) -> Option<(Vec<Lit>, Vec<Lit>)> {
        let tidx = self.frame().target;
        let target = &self.db[tidx].clause;
        let mut k2 = vec![t];
        let mut r = Vec::new();
        for &c in &self.occ[(!t).code()] {
            let e = &self.db[c];
            if c == tidx || e.removed {
                continue;
            }
            if e.sat > 0 {
                self.witness(c, &mut r);
                continue;
            }
            let mut resolvable = true;
            for &m in e.clause.lits() {
                if m != !t && self.lit_value(m).is_none() && target.contains(!m) {
                    resolvable = false;
                    if !k2.contains(&!m) {
                        k2.push(!m);
                    }
                }
            }
            if resolvable {
                return None;
            }
        }
        Some((k2, r))
    }

    /// Adds to `r` a literal satisfying clause `c`, unless `r` or a target-level
    /// extension already does. Prefers the earliest assignment.
    fn witness(&self, c: CIdx, r: &mut Vec<Lit>) {
        let mut best: Option<Lit> = None;
        for &l in self.db[c].clause.lits() {
            if self.lit_value(l) != Some(true) {
                continue;
            }
            if self.reason[l.var().index()] == Reason::Ext || r.contains(&l) {
                return;
            }
            if best.is_none_or(|b| self.pos[l.var().index()] < self.pos[b.var().index()]) {
                best = Some(l);
            }
        }
        r.push(best.expect("clause is satisfied"));
    }

    /// `K' ∨ K''` where `K'` is the longest clause falsified by `r`.
    fn k_prime_with(&self, r: &[Lit], extra: Vec<Lit>) -> Clause {
        Clause::new(r.iter().map(|&l| !l).chain(extra)).expect("K' and K'' do not clash")
    }

    // ---- target levels --------------------------------------------------------

    fn on_target_unit(&mut self, x: Lit) -> Result<Fixpoint, Interrupt> {
        let tidx = self.frame().target;
        let mut members: Vec<CIdx> = self.occ[(!x).code()]
            .iter()
            .copied()
            .filter(|&c| c != tidx && !self.db[c].removed && self.db[c].sat == 0)
            .collect();
        self.stats.levels += 1;
        if self.tracing() {
            let depth = self.depth();
            let parent = self.db[tidx].clause.clone();
            let ms = members.iter().map(|&c| self.db[c].clause.clone()).collect();
            self.emit(Event::LevelCreated {
                depth,
                parent,
                pivot: x.var(),
                members: ms,
            });
        }
        let mut removed: Vec<(CIdx, Clause)> = Vec::new();
        let result = self.rcrs(x, &mut members, &mut removed);
        for &(c, _) in &removed {
            self.db[c].removed = false;
        }
        match result? {
            Settle::Conflict(c) => Ok(Fixpoint::Reason(Bct::Conflict(c))),
            Settle::Unit(c) => {
                let u = self.unassigned_lit(c);
                if self.db[tidx].clause.contains(u) {
                    return Ok(Fixpoint::Reason(Bct::Implied(c)));
                }
                self.assign(u, Reason::Clause(c));
                Ok(Fixpoint::Again)
            }
            Settle::Done => {
                // r: what the member certificates assumed, plus satisfiers of the other
                // clauses with ¬x
                let mut r: Vec<Lit> = Vec::new();
                for &(c, ref k) in &removed {
                    let member = &self.db[c].clause;
                    for &l in k.lits() {
                        if member.contains(l) {
                            continue;
                        }
                        let v = l.var().index();
                        debug_assert_eq!(
                            self.lit_value(l),
                            Some(false),
                            "certificate conditional holds under q"
                        );
                        if self.reason[v] != Reason::Ext && !r.contains(&!l) {
                            r.push(!l);
                        }
                    }
                }
                for i in 0..self.occ[(!x).code()].len() {
                    let c = self.occ[(!x).code()][i];
                    if c == tidx || self.db[c].removed || removed.iter().any(|&(m, _)| m == c) {
                        continue;
                    }
                    debug_assert!(self.db[c].sat > 0, "open clauses with ¬x joined the level");
                    self.witness(c, &mut r);
                }
                let k = self.k_prime_with(&r, vec![x]);
                Ok(Fixpoint::Reason(self.blocked(x, k, &r)))
            }
        }
    }

    /// Proves each member redundant under `q ∪ {x}`, removing it afterwards.
    /// Clauses learned on the way that resolve with the parent on `x` join the level;
    /// one that is unit or falsified under `q` ends it early.
    fn rcrs(
        &mut self,
        x: Lit,
        members: &mut Vec<CIdx>,
        removed: &mut Vec<(CIdx, Clause)>,
    ) -> Result<Settle, Interrupt> {
        let parent_level = self.cur_level();
        let mut i = 0;
        while i < members.len() {
            let m = members[i];
            i += 1;
            let mark = self.db.len();
            self.new_level();
            self.assign(x, Reason::Ext);
            let base = self.cur_level();
            self.frames.push(Frame {
                target: m,
                p0: self.trail.len(),
                base,
                certs: Vec::new(),
                pending: None,
            });
            let depth = self.depth();
            self.stats.max_depth = self.stats.max_depth.max(depth as u64);
            if self.tracing() {
                let t = self.db[m].clause.clone();
                self.emit(Event::TargetStart { depth, target: t });
            }
            let r = self.prv_red();
            let frame = self.frames.pop().unwrap();
            for k in frame.certs {
                self.certs[k].alive = false;
            }
            self.backtrack_to(parent_level);
            let k = r?;
            if self.tracing() {
                let member = self.db[m].clause.clone();
                self.emit(Event::MemberProved {
                    depth,
                    member: member.clone(),
                    cert: k.clause.clone(),
                });
                self.emit(Event::TargetProved {
                    depth,
                    target: member,
                    cert: k.clause.clone(),
                });
            }
            if k.kind == Kind::Conflict
                && k.clause
                    .lits()
                    .iter()
                    .all(|&l| self.lit_value(l) == Some(false))
            {
                return Ok(Settle::Conflict(
                    k.idx.expect("conflict certificates live in F"),
                ));
            }
            self.db[m].removed = true;
            removed.push((m, k.clause));
            for c in mark..self.db.len() {
                match self.status(c) {
                    Status::Falsified => return Ok(Settle::Conflict(c)),
                    Status::Unit => return Ok(Settle::Unit(c)),
                    Status::Open if self.db[c].clause.contains(!x) => members.push(c),
                    _ => {}
                }
            }
        }
        Ok(Settle::Done)
    }

    fn status(&self, c: CIdx) -> Status {
        let e = &self.db[c];
        let n = e.clause.len() as u32;
        if e.removed || e.sat > 0 {
            Status::Satisfied
        } else if e.fals == n {
            Status::Falsified
        } else if e.fals + 1 == n {
            Status::Unit
        } else {
            Status::Open
        }
    }

    // ---- learning -------------------------------------------------------------

    /// Literals of `k` that still constrain the search: falsified, assigned after
    /// q_init, and (for non-conflict certificates) outside the target.
    fn rel(&self, k: &Clause, kind: Kind) -> Vec<Lit> {
        let p0 = self.frame().p0;
        let target = self.target();
        k.lits()
            .iter()
            .copied()
            .filter(|&l| {
                self.lit_value(l) == Some(false)
                    && self.pos[l.var().index()] >= p0
                    && (kind == Kind::Conflict || !target.contains(l))
            })
            .collect()
    }

    fn lrn(&mut self, bct: Bct, dup_check: bool) -> Result<Learned, Interrupt> {
        let depth = self.depth();
        let tidx = self.frame().target;
        let (mut k, mut kind, k_is_target) = match &bct {
            Bct::Conflict(c) => (self.db[*c].clause.clone(), Kind::Conflict, *c == tidx),
            Bct::Implied(c) => (self.db[*c].clause.clone(), Kind::NonConflict, false),
            Bct::CertImplied(i) => (self.certs[*i].clause.clone(), Kind::NonConflict, false),
            Bct::Blocked(k) => (k.clone(), Kind::NonConflict, false),
        };
        let to_f1 = depth == 0 && k_is_target;
        let origin = if to_f1 { Origin::F1 } else { Origin::F2 };
        loop {
            let rel = self.rel(&k, kind);
            let Some(m) = rel.iter().map(|l| self.level[l.var().index()]).max() else {
                break;
            };
            let pick = rel
                .iter()
                .copied()
                .filter(|l| {
                    let v = l.var().index();
                    self.level[v] == m
                        && matches!(self.reason[v], Reason::Clause(_) | Reason::Cert(_))
                })
                .max_by_key(|l| self.pos[l.var().index()]);
            let Some(l) = pick else { break };
            let v = l.var();
            let antecedent = match self.reason[v.index()] {
                Reason::Clause(c) => self.db[c].clause.clone(),
                Reason::Cert(i) => {
                    if kind == Kind::Conflict {
                        if k_is_target {
                            self.add_special(&k, origin, dup_check)?;
                        }
                        kind = Kind::NonConflict;
                        continue;
                    }
                    self.certs[i].clause.clone()
                }
                _ => unreachable!(),
            };
            k = resolve(&k, &antecedent, v).expect("antecedents resolve with the certificate");
        }
        if self.opts.order == DecisionOrder::Activity {
            for v in k.vars() {
                self.activity[v.index()] += self.act_inc;
            }
            self.act_inc *= 1.05;
        }
        match kind {
            Kind::Conflict => {
                let idx = self.add_learned(&k, origin, dup_check)?;
                self.stats.conflict_certs += 1;
                if self.tracing() {
                    self.emit(Event::ConflictCert {
                        depth,
                        clause: k.clone(),
                        origin,
                    });
                }
                Ok(Learned {
                    clause: k,
                    kind,
                    idx: Some(idx),
                    sticky: false,
                })
            }
            Kind::NonConflict => {
                self.stats.nonconflict_certs += 1;
                if self.tracing() {
                    let target = self.target().clone();
                    self.emit(Event::NonConflictCert {
                        depth,
                        target,
                        clause: k.clone(),
                    });
                }
                Ok(Learned {
                    clause: k,
                    kind,
                    idx: None,
                    sticky: false,
                })
            }
        }
    }

    fn add_special(
        &mut self,
        k: &Clause,
        origin: Origin,
        dup_check: bool,
    ) -> Result<(), Interrupt> {
        self.add_learned(k, origin, dup_check)?;
        self.stats.special_clauses += 1;
        if self.tracing() {
            self.emit(Event::SpecialClause {
                clause: k.clone(),
                origin,
            });
        }
        Ok(())
    }

    fn is_duplicate(&self, k: &Clause) -> bool {
        if !self.is_quantified_clause(k) {
            return false;
        }
        if self.proved.contains(k) || self.frames.iter().any(|f| &self.db[f.target].clause == k) {
            return true;
        }
        matches!(self.index.get(k), Some(&i) if self.db[i].removed)
    }

    fn add_learned(
        &mut self,
        k: &Clause,
        origin: Origin,
        dup_check: bool,
    ) -> Result<CIdx, Interrupt> {
        if dup_check && self.is_duplicate(k) {
            self.stats.duplicates += 1;
            if self.tracing() {
                self.emit(Event::Duplicate { clause: k.clone() });
            }
            return Err(Interrupt::Duplicate(self.y_assignment()));
        }
        if let Some(&i) = self.index.get(k) {
            return Ok(i);
        }
        self.added.push(k.clone());
        Ok(self.add_clause(k.clone(), origin, true))
    }

    // ---- backtracking ---------------------------------------------------------

    /// Returns the certificate when the target is proved under q_init.
    fn backtrack(&mut self, l: Learned) -> Option<Cert> {
        let mut rel = self.rel(&l.clause, l.kind);
        if rel.is_empty() {
            return Some(Cert {
                clause: l.clause,
                kind: l.kind,
                idx: l.idx,
            });
        }
        rel.sort_by_key(|x| std::cmp::Reverse(self.level[x.var().index()]));
        let top = rel[0];
        let base = self.frame().base;
        let j = rel
            .get(1)
            .map(|x| self.level[x.var().index()])
            .unwrap_or(base)
            .max(base);
        debug_assert!(
            self.level[top.var().index()] > j,
            "learned certificate is asserting"
        );
        self.backtrack_to(j);
        self.discard_certs();
        match l.kind {
            Kind::Conflict => {
                let idx = l.idx.unwrap();
                if self.target().contains(top) {
                    self.frame_mut().pending = Some(Bct::Implied(idx));
                } else {
                    self.assign(top, Reason::Clause(idx));
                }
            }
            Kind::NonConflict => {
                let target = self.target().clone();
                let cond = l
                    .clause
                    .lits()
                    .iter()
                    .copied()
                    .filter(|x| !target.contains(*x))
                    .collect();
                let k = self.certs.len();
                self.certs.push(StoredCert {
                    clause: l.clause,
                    cond,
                    alive: true,
                    sticky: l.sticky,
                });
                self.frame_mut().certs.push(k);
                self.assign(top, Reason::Cert(k));
            }
        }
        self.settle_fresh();
        None
    }

    /// Propagates clauses learned since the last call that are unit (or falsified)
    /// after backtracking, so that no unit clause goes unnoticed.
    fn settle_fresh(&mut self) {
        let from = std::mem::replace(&mut self.settled, self.db.len());
        for c in from..self.db.len() {
            match self.status(c) {
                Status::Falsified => {
                    let f = self.frame_mut();
                    if f.pending.is_none() {
                        f.pending = Some(Bct::Conflict(c));
                    }
                }
                Status::Unit if self.frame().pending.is_none() => {
                    let u = self.unassigned_lit(c);
                    if self.target().contains(u) {
                        self.frame_mut().pending = Some(Bct::Implied(c));
                    } else {
                        self.assign(u, Reason::Clause(c));
                    }
                }
                _ => {}
            }
        }
    }

    /// Drops stored certificates whose conditional has two or more unassigned literals.
    fn discard_certs(&mut self) {
        let ks = std::mem::take(&mut self.frame_mut().certs);
        let mut keep = Vec::with_capacity(ks.len());
        for k in ks {
            let unassigned = self.certs[k]
                .cond
                .iter()
                .filter(|&&l| self.lit_value(l).is_none())
                .count();
            if unassigned >= 2 && !self.certs[k].sticky {
                self.certs[k].alive = false;
            } else {
                keep.push(k);
            }
        }
        self.frame_mut().certs = keep;
    }

    // ---- duplicate fallback ---------------------------------------------------

    /// MS-tart: rebuilds the primary trail as pure Y decisions extending `y` and
    /// settles that Y subspace with a SAT check on `F|y`. A satisfiable subspace is
    /// extended to a full Y cube by decisions that follow the model, with stored
    /// certificates propagated in between, so cubes settled earlier are not re-entered.
    fn ms_tart(&mut self, y: &[Lit]) -> Bct {
        self.backtrack_to(0);
        self.discard_certs();
        let target = self.target().clone();
        let forced = target
            .lits()
            .iter()
            .filter(|t| self.is_free(t.var()))
            .map(|&t| !t);
        // literals of y that stored certificates force the other way are dropped
        for l in y.iter().copied().chain(forced).collect::<Vec<_>>() {
            if let Some(b) = self.propagate_all_certs() {
                return b;
            }
            self.push_decision(l);
        }
        let mut model = match self.settle_cube() {
            Ok(p) => p,
            Err(b) => return b,
        };
        loop {
            if let Some(b) = self.propagate_all_certs() {
                return b;
            }
            let next = (1..self.val.len())
                .map(|i| Var(i as u32))
                .find(|&v| self.is_free(v) && self.val[v.index()].is_none());
            match next {
                Some(v) => self.push_decision(v.lit(model[v.index()])),
                None => break,
            }
        }
        let deviated = self
            .y_assignment()
            .iter()
            .any(|l| model[l.var().index()] != l.is_positive());
        if deviated {
            model = match self.settle_cube() {
                Ok(p) => p,
                Err(b) => return b,
            };
        }
        let w = target
            .lits()
            .iter()
            .copied()
            .find(|l| !self.is_free(l.var()) && model[l.var().index()] == l.is_positive())
            .expect("the model satisfies the target through X");
        let b = Clause::new(self.y_assignment().iter().map(|&l| !l).chain([w])).unwrap();
        if self.tracing() {
            self.emit(Event::MsTart {
                clause: b.clone(),
                conflict: false,
            });
        }
        Bct::Blocked(b)
    }

    fn propagate_all_certs(&mut self) -> Option<Bct> {
        loop {
            match self.propagate_certs() {
                Some(Err(b)) => return Some(b),
                Some(Ok(())) => continue,
                None => return None,
            }
        }
    }

    fn push_decision(&mut self, l: Lit) {
        if self.lit_value(l).is_none() {
            self.new_level();
            self.assign(l, Reason::Decision);
        }
    }

    /// SAT check of `F` under the current Y literals: a model, or the conflict
    /// certificate built from the failed-assumption core.
    fn settle_cube(&mut self) -> Result<Vec<bool>, Bct> {
        let ylits = self.y_assignment();
        let active = self.active_clauses();
        let nvars = (self.val.len() - 1) as u32;
        let mut solver = Cdcl::from_clauses(nvars, &active);
        if let Some(p) = solver.solve(&ylits) {
            return Ok(p);
        }
        // the core keeps B short, so the cube it excludes is not re-entered through
        // literals B did not mention
        let b = Clause::new(solver.core().iter().map(|&l| !l)).unwrap();
        if self.tracing() {
            self.emit(Event::MsTart {
                clause: b.clone(),
                conflict: true,
            });
        }
        let idx = self
            .add_learned(&b, Origin::F1, false)
            .expect("no duplicate check");
        Err(Bct::Conflict(idx))
    }
}
