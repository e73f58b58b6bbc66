//! Explicit-state reachability for small circuits, and the external model-checker hook.

use std::path::PathBuf;
use std::process::Command;

use super::circuit::{Circuit, Init};
use crate::formula::Clause;

pub const MAX_LATCHES: usize = 24;
pub const MAX_INPUTS: usize = 20;

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    True,
    /// A path of states from an initial state to one falsifying the property.
    False(Vec<Vec<bool>>),
    Unknown,
}

impl Verdict {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::True => "true",
            Verdict::False(_) => "false",
            Verdict::Unknown => "unknown",
        }
    }
}

/// The reachable state set of a circuit; states are packed with latch `i` at bit `i`.
pub struct Reachability {
    nlatches: usize,
    /// Predecessor of each reached state (initial states point to themselves).
    parent: Vec<u32>,
    /// Reached states in BFS order.
    order: Vec<u32>,
    /// Number of BFS layers after the initial one.
    diameter: usize,
}

impl Reachability {
    /// `None` when the circuit exceeds the latch or input cap.
    pub fn explore(c: &Circuit) -> Option<Reachability> {
        c.validate().ok()?;
        let nl = c.num_latches();
        let ni = c.num_inputs();
        if nl > MAX_LATCHES || ni > MAX_INPUTS {
            return None;
        }
        let mut parent = vec![NONE; 1usize << nl];
        let mut order = Vec::new();
        let mut fixed = 0u32;
        let mut free = Vec::new();
        for (i, l) in c.latches().iter().enumerate() {
            match l.init {
                Init::Zero => {}
                Init::One => fixed |= 1 << i,
                Init::Free => free.push(i),
            }
        }
        for m in 0..1u32 << free.len() {
            let mut s = fixed;
            for (k, &i) in free.iter().enumerate() {
                if m >> k & 1 == 1 {
                    s |= 1 << i;
                }
            }
            parent[s as usize] = s;
            order.push(s);
        }
        let ncomb = 1u64 << ni;
        let mut start = 0;
        let mut diameter = 0;
        loop {
            let end = order.len();
            let total = (end - start) as u64 * ncomb;
            let mut idx = 0u64;
            let mut lw = vec![0u64; nl];
            let mut iw = vec![0u64; ni];
            while idx < total {
                let lanes = (total - idx).min(64) as usize;
                lw.iter_mut().for_each(|w| *w = 0);
                iw.iter_mut().for_each(|w| *w = 0);
                for k in 0..lanes {
                    let p = idx + k as u64;
                    let s = order[start + (p / ncomb) as usize];
                    let inp = p % ncomb;
                    for (i, w) in lw.iter_mut().enumerate() {
                        *w |= ((s >> i & 1) as u64) << k;
                    }
                    for (i, w) in iw.iter_mut().enumerate() {
                        *w |= (inp >> i & 1) << k;
                    }
                }
                let next = c.step64(&lw, &iw);
                for k in 0..lanes {
                    let mut t = 0u32;
                    for (i, w) in next.iter().enumerate() {
                        t |= ((w >> k & 1) as u32) << i;
                    }
                    if parent[t as usize] == NONE {
                        let p = idx + k as u64;
                        parent[t as usize] = order[start + (p / ncomb) as usize];
                        order.push(t);
                    }
                }
                idx += lanes as u64;
            }
            if order.len() == end {
                break;
            }
            diameter += 1;
            start = end;
        }
        Some(Reachability {
            nlatches: nl,
            parent,
            order,
            diameter,
        })
    }

    pub fn num_states(&self) -> usize {
        self.order.len()
    }

    /// Smallest `d` such that every reachable state is reachable in at most `d` steps.
    pub fn diameter(&self) -> usize {
        self.diameter
    }

    pub fn is_reachable(&self, state: &[bool]) -> bool {
        self.parent[pack(state) as usize] != NONE
    }

    pub fn states(&self) -> impl Iterator<Item = Vec<bool>> + '_ {
        self.order.iter().map(|&s| unpack(s, self.nlatches))
    }

    /// Checks a clause over latch variables (latch `i` is `Var(i + 1)`).
    pub fn check(&self, q: &Clause) -> Verdict {
        let bad = self.order.iter().copied().find(|&s| {
            !q.lits()
                .iter()
                .any(|l| (s >> (l.var().0 - 1) & 1 == 1) == l.is_positive())
        });
        match bad {
            None => Verdict::True,
            Some(s) => {
                let mut path = vec![s];
                let mut cur = s;
                while self.parent[cur as usize] != cur {
                    cur = self.parent[cur as usize];
                    path.push(cur);
                }
                path.reverse();
                Verdict::False(path.into_iter().map(|s| unpack(s, self.nlatches)).collect())
            }
        }
    }
}

fn pack(state: &[bool]) -> u32 {
    state
        .iter()
        .enumerate()
        .fold(0, |acc, (i, &b)| acc | (b as u32) << i)
}

fn unpack(s: u32, n: usize) -> Vec<bool> {
    (0..n).map(|i| s >> i & 1 == 1).collect()
}

/// Invariant check of a single clause over latch variables: BFS under the cap, otherwise
/// the external checker if one is configured.
pub fn check_invariant(c: &Circuit, q: &Clause, external: Option<&ExternalChecker>) -> Verdict {
    match Reachability::explore(c) {
        Some(r) => r.check(q),
        None => external.map_or(Verdict::Unknown, |e| e.check(c, q)),
    }
}

/// An external model checker run as `<command {property} {aag}>`. `{aag}` is the circuit
/// with one output that is true in states falsifying the property, `{property}` a DIMACS
/// file holding the clause over latch numbers. Exit status 0 means the property holds,
/// 1 that it fails; anything else is unknown.
#[derive(Debug, Clone)]
pub struct ExternalChecker {
    pub template: String,
}

pub const EXTERNAL_MC_ENV: &str = "PQE_EXTERNAL_MC";

impl ExternalChecker {
    pub fn from_env() -> Option<ExternalChecker> {
        std::env::var(EXTERNAL_MC_ENV)
            .ok()
            .filter(|s| !s.trim().is_empty())
            .map(|template| ExternalChecker { template })
    }

    pub fn check(&self, c: &Circuit, q: &Clause) -> Verdict {
        let dir = std::env::temp_dir();
        let tag = format!("pqe-mc-{}-{}", std::process::id(), unique());
        let aag_path: PathBuf = dir.join(format!("{tag}.aag"));
        let prop_path: PathBuf = dir.join(format!("{tag}.cnf"));
        let mut m = c.clone();
        let lits: Vec<_> = q
            .lits()
            .iter()
            .map(|l| {
                let s = m.latch_lit(l.var().index() - 1);
                if l.is_positive() {
                    !s
                } else {
                    s
                }
            })
            .collect();
        let bad = m.and_all(lits);
        m.add_output(bad);
        let prop = crate::pqeio::write_dimacs(c.num_latches() as u32, std::slice::from_ref(q));
        if std::fs::write(&aag_path, m.to_aag()).is_err()
            || std::fs::write(&prop_path, prop).is_err()
        {
            return Verdict::Unknown;
        }
        let cmd = self
            .template
            .replace("{property}", &prop_path.to_string_lossy())
            .replace("{aag}", &aag_path.to_string_lossy());
        let status = Command::new("sh").arg("-c").arg(&cmd).status();
        let _ = std::fs::remove_file(&aag_path);
        let _ = std::fs::remove_file(&prop_path);
        match status.ok().and_then(|s| s.code()) {
            Some(0) => Verdict::True,
            Some(1) => Verdict::False(Vec::new()),
            _ => Verdict::Unknown,
        }
    }
}

fn unique() -> u64 {
    use std::sync::atomic::{AtomicU64, Ordering};
    static N: AtomicU64 = AtomicU64::new(0);
    N.fetch_add(1, Ordering::Relaxed)
}
