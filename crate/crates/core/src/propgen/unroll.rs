//! Tseitin encoding of a circuit and its unrolling `F_k = I(S_0) ∧ T(S_0,S_1) ∧ … ∧ T(S_{k-1},S_k)`.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;

use super::circuit::{ALit, Circuit, Init, Node};
use crate::formula::{Clause, Lit, QuantFormula, Var};

/// A signal after constant propagation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sig {
    Const(bool),
    Lit(Lit),
}

impl Sig {
    fn neg(self) -> Sig {
        match self {
            Sig::Const(b) => Sig::Const(!b),
            Sig::Lit(l) => Sig::Lit(!l),
        }
    }
}

/// CNF under construction; clauses are deduplicated.
#[derive(Debug, Default)]
struct Cnf {
    nvars: u32,
    clauses: Vec<Clause>,
    seen: HashSet<Clause>,
}

impl Cnf {
    fn fresh(&mut self) -> Var {
        self.nvars += 1;
        Var(self.nvars)
    }

    fn push(&mut self, lits: impl IntoIterator<Item = Lit>) {
        if let Ok(c) = Clause::new(lits) {
            if self.seen.insert(c.clone()) {
                self.clauses.push(c);
            }
        }
    }
}

/// Nodes in the cone of influence of the latch next-state functions.
fn cone(c: &Circuit) -> Vec<bool> {
    let nodes = c.nodes();
    let mut keep = vec![false; nodes.len()];
    let mut stack: Vec<usize> = (0..c.num_latches()).map(|i| c.next(i).node()).collect();
    while let Some(n) = stack.pop() {
        if keep[n] {
            continue;
        }
        keep[n] = true;
        if let Node::And(a, b) = nodes[n] {
            stack.push(a.node());
            stack.push(b.node());
        }
    }
    keep
}

/// Encodes one transition from state vars `cur` into the fresh vars `nxt`.
fn encode_step(c: &Circuit, keep: &[bool], cnf: &mut Cnf, cur: &[Var], nxt: &[Var]) {
    let nodes = c.nodes();
    let mut val: Vec<Option<Sig>> = vec![None; nodes.len()];
    let get = |val: &Vec<Option<Sig>>, a: ALit| {
        let s = val[a.node()].expect("topological order");
        if a.is_complemented() {
            s.neg()
        } else {
            s
        }
    };
    for (i, n) in nodes.iter().enumerate() {
        if !keep[i] {
            continue;
        }
        val[i] = Some(match *n {
            Node::Const => Sig::Const(false),
            Node::Input(_) => Sig::Lit(cnf.fresh().pos()),
            Node::Latch(k) => Sig::Lit(cur[k].pos()),
            Node::And(a, b) => match (get(&val, a), get(&val, b)) {
                (Sig::Const(false), _) | (_, Sig::Const(false)) => Sig::Const(false),
                (Sig::Const(true), s) | (s, Sig::Const(true)) => s,
                (Sig::Lit(x), Sig::Lit(y)) if x == y => Sig::Lit(x),
                (Sig::Lit(x), Sig::Lit(y)) if x == !y => Sig::Const(false),
                (Sig::Lit(x), Sig::Lit(y)) => {
                    let g = cnf.fresh().pos();
                    cnf.push([!g, x]);
                    cnf.push([!g, y]);
                    cnf.push([g, !x, !y]);
                    Sig::Lit(g)
                }
            },
        });
    }
    for (k, &s1) in nxt.iter().enumerate() {
        let s1 = s1.pos();
        match get(&val, c.next(k)) {
            Sig::Const(true) => cnf.push([s1]),
            Sig::Const(false) => cnf.push([!s1]),
            Sig::Lit(l) => {
                cnf.push([!s1, l]);
                cnf.push([s1, !l]);
            }
        }
    }
}

fn init_clauses(c: &Circuit, s: &[Var]) -> Vec<Clause> {
    c.latches()
        .iter()
        .zip(s)
        .filter_map(|(l, v)| match l.init {
            Init::Zero => Some(Clause::new([v.neg()]).unwrap()),
            Init::One => Some(Clause::new([v.pos()]).unwrap()),
            Init::Free => None,
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Unrolling {
    pub k: usize,
    pub nvars: u32,
    /// `frames[j][i]` is the variable of latch `i` in frame `j`, for `j = 0..=k`.
    pub frames: Vec<Vec<Var>>,
    /// Clauses of `F_k` in generation order: `I(S_0)` first, then each transition.
    pub clauses: Vec<Clause>,
    /// `clauses[..n_init]` is `I(S_0)`.
    pub n_init: usize,
}

/// Transition CNF `T(S_0, S_1)` alone, with `S_0 = 1..=L` and `S_1 = L+1..=2L`.
pub fn encode(c: &Circuit) -> (u32, Vec<Clause>) {
    let u = unroll_with(c, 1, false);
    (u.nvars, u.clauses)
}

/// `F_k` with initial-state clauses.
pub fn unroll(c: &Circuit, k: usize) -> Unrolling {
    unroll_with(c, k, true)
}

fn unroll_with(c: &Circuit, k: usize, with_init: bool) -> Unrolling {
    c.validate().expect("every latch has a next-state function");
    let keep = cone(c);
    let nl = c.num_latches();
    let mut cnf = Cnf::default();
    let mut frames: Vec<Vec<Var>> = Vec::with_capacity(k + 1);
    frames.push((0..nl).map(|_| cnf.fresh()).collect());
    if with_init {
        for cl in init_clauses(c, &frames[0]) {
            cnf.push(cl.lits().iter().copied());
        }
    }
    let n_init = cnf.clauses.len();
    for j in 0..k {
        let nxt: Vec<Var> = (0..nl).map(|_| cnf.fresh()).collect();
        encode_step(c, &keep, &mut cnf, &frames[j], &nxt);
        frames.push(nxt);
    }
    Unrolling {
        k,
        nvars: cnf.nvars,
        frames,
        clauses: cnf.clauses,
        n_init,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetOrder {
    File,
    Random(u64),
}

impl Unrolling {
    pub fn last_frame(&self) -> &[Var] {
        &self.frames[self.k]
    }

    fn last_frame_pos(&self) -> Vec<Option<usize>> {
        let mut pos = vec![None; self.nvars as usize + 1];
        for (i, v) in self.last_frame().iter().enumerate() {
            pos[v.index()] = Some(i);
        }
        pos
    }

    /// Initial-state clauses over frame `j`.
    pub fn init_at(&self, c: &Circuit, j: usize) -> Vec<Clause> {
        init_clauses(c, &self.frames[j])
    }

    /// `∃(all but S_k)[F_k]`, with the clauses at `f1_idx` in F1 and the rest in F2.
    pub fn formula(&self, f1_idx: &[usize]) -> QuantFormula {
        let sel: HashSet<usize> = f1_idx.iter().copied().collect();
        let (f1, f2): (Vec<_>, Vec<_>) = self
            .clauses
            .iter()
            .enumerate()
            .partition(|(i, _)| sel.contains(i));
        QuantFormula::new(
            self.nvars,
            self.last_frame().iter().copied(),
            f1.into_iter().map(|(_, c)| c.clone()).collect(),
            f2.into_iter().map(|(_, c)| c.clone()).collect(),
        )
        .expect("unrolling clauses are distinct")
    }

    /// Indices of clauses mentioning a variable of `S_k`, in file order or shuffled.
    pub fn select_targets(&self, order: TargetOrder, max: Option<usize>) -> Vec<usize> {
        let pos = self.last_frame_pos();
        let mut t: Vec<usize> = self
            .clauses
            .iter()
            .enumerate()
            .filter(|(_, c)| c.vars().any(|v| pos[v.index()].is_some()))
            .map(|(i, _)| i)
            .collect();
        if let TargetOrder::Random(seed) = order {
            t.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        }
        if let Some(m) = max {
            t.truncate(m);
        }
        t
    }

    /// Rewrites a clause over `S_k` into latch numbering (latch `i` is `Var(i + 1)`).
    /// `None` if the clause mentions any other variable.
    pub fn to_state_clause(&self, c: &Clause) -> Option<Clause> {
        let pos = self.last_frame_pos();
        let lits: Option<Vec<Lit>> = c
            .lits()
            .iter()
            .map(|l| pos[l.var().index()].map(|i| Var(i as u32 + 1).lit(l.is_positive())))
            .collect();
        Clause::new(lits?).ok()
    }
}
