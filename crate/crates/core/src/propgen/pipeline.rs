//! Local property generation: take single clauses of `F_k` out of `∃S_0…S_{k-1}[F_k]`,
//! keep the free clauses of each solution, check them as invariants and flag bad ones.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use super::circuit::Circuit;
use super::fifo::data_latches;
use super::reach::{ExternalChecker, Reachability, Verdict};
use super::unroll::{unroll, TargetOrder, Unrolling};
use crate::engine::{self, sat, Options, Status};
use crate::formula::{Clause, Lit};

#[derive(Debug, Clone)]
pub struct PropgenOptions {
    pub frames: usize,
    pub max_targets: Option<usize>,
    pub per_target_timeout: Duration,
    pub order: TargetOrder,
    /// Drop clauses implied by `F_k` without the target (Remark-1 noise).
    pub noise_filter: bool,
}

impl Default for PropgenOptions {
    fn default() -> Self {
        PropgenOptions {
            frames: 3,
            max_targets: None,
            per_target_timeout: Duration::from_secs(10),
            order: TargetOrder::File,
            noise_filter: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TargetRun {
    /// Index into `Unrolling::clauses`.
    pub target: usize,
    pub status: Status,
    /// Free clauses produced (before deduplication).
    pub produced: usize,
    pub elapsed: Duration,
}

#[derive(Debug, Clone)]
pub struct LocalProperty {
    /// Over the variables of `S_k`.
    pub clause: Clause,
    /// Over latch numbering: latch `i` is `Var(i + 1)`.
    pub state: Clause,
    pub target: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Generation {
    pub runs: Vec<TargetRun>,
    pub props: Vec<LocalProperty>,
}

/// Runs one take-out job per target in parallel. Every free clause of a solution is a
/// local property (it is implied by `F_k`); timed-out jobs contribute the free clauses
/// they had already added, which are implied as well.
pub fn gen_local_props(u: &Unrolling, targets: &[usize], opts: &PropgenOptions) -> Generation {
    let jobs: Vec<(TargetRun, Vec<Clause>)> = targets
        .par_iter()
        .map(|&t| {
            let f = u.formula(&[t]);
            let t0 = Instant::now();
            let eopts = Options {
                time_limit: Some(opts.per_target_timeout),
                ..Options::default()
            };
            let sol = engine::take_out(&f, &eopts);
            let mut free: Vec<Clause> = sol
                .clauses
                .into_iter()
                .filter(|c| f.is_free_clause(c))
                .collect();
            if opts.noise_filter && !free.is_empty() {
                let rest: Vec<Clause> = f.f2.clone();
                let mut solver = sat::Cdcl::from_clauses(f.nvars(), &rest);
                free.retain(|q| {
                    let neg: Vec<Lit> = q.lits().iter().map(|&l| !l).collect();
                    solver.solve(&neg).is_some()
                });
            }
            let run = TargetRun {
                target: t,
                status: sol.status,
                produced: free.len(),
                elapsed: t0.elapsed(),
            };
            (run, free)
        })
        .collect();
    let mut g = Generation::default();
    let mut seen = HashSet::new();
    for (run, free) in jobs {
        for q in free {
            if seen.insert(q.clone()) {
                let state = u.to_state_clause(&q).expect("free clauses are over S_k");
                g.props.push(LocalProperty {
                    clause: q,
                    state,
                    target: run.target,
                });
            }
        }
        g.runs.push(run);
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tri {
    Unknown,
    True,
    False,
}

impl Tri {
    pub fn label(self) -> &'static str {
        match self {
            Tri::Unknown => "unknown",
            Tri::True => "true",
            Tri::False => "false",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Candidate {
    pub state: Clause,
    pub target: usize,
    pub held_locally: bool,
    pub invariant: Verdict,
    pub implied_by_spec: Tri,
    pub bad: Tri,
}

#[derive(Debug, Clone)]
pub struct PropertyReport {
    pub frames: usize,
    pub latch_names: Vec<String>,
    pub runs: Vec<TargetRun>,
    pub candidates: Vec<Candidate>,
}

/// States the designer expects to be reachable.
#[derive(Debug, Clone)]
pub enum Expectation {
    /// Every valuation of the FIFO data buffer (latches named `data*`) is reachable.
    FifoData,
    /// Every state satisfying this CNF over latch numbering is reachable.
    Cnf(Vec<Clause>),
}

impl Expectation {
    pub fn parse_builtin(name: &str) -> Option<Expectation> {
        match name {
            "fifo-data" => Some(Expectation::FifoData),
            _ => None,
        }
    }
}

/// Checks every local property as an invariant.
pub fn check_candidates(
    c: &Circuit,
    g: &Generation,
    frames: usize,
    external: Option<&ExternalChecker>,
) -> PropertyReport {
    let reach = Reachability::explore(c);
    let candidates = g
        .props
        .iter()
        .map(|p| {
            let invariant = match (&reach, external) {
                (Some(r), _) => r.check(&p.state),
                (None, Some(e)) => e.check(c, &p.state),
                (None, None) => Verdict::Unknown,
            };
            Candidate {
                state: p.state.clone(),
                target: p.target,
                held_locally: true,
                invariant,
                implied_by_spec: Tri::Unknown,
                bad: Tri::Unknown,
            }
        })
        .collect();
    PropertyReport {
        frames,
        latch_names: c.latches().iter().map(|l| l.name.clone()).collect(),
        runs: g.runs.clone(),
        candidates,
    }
}

fn cnf_vars(cs: &[Clause]) -> u32 {
    cs.iter()
        .flat_map(|c| c.vars())
        .map(|v| v.0)
        .max()
        .unwrap_or(0)
}

/// Fills in `implied_by_spec` and `bad`. A property implied by the spec is never bad;
/// otherwise an invariant is bad when it excludes a state the expectation calls reachable.
pub fn flag_bad(
    report: &mut PropertyReport,
    c: &Circuit,
    expect: Option<&Expectation>,
    spec: Option<&[Clause]>,
) {
    let data: HashSet<usize> = data_latches(c).into_iter().collect();
    for cand in &mut report.candidates {
        if let Some(sp) = spec {
            let n = cnf_vars(sp).max(cnf_vars(std::slice::from_ref(&cand.state)));
            cand.implied_by_spec = if sat::implies(n, sp, &cand.state) {
                Tri::True
            } else {
                Tri::False
            };
        }
        cand.bad = match cand.invariant {
            Verdict::False(_) => Tri::False,
            Verdict::Unknown => Tri::Unknown,
            Verdict::True if cand.implied_by_spec == Tri::True => Tri::False,
            Verdict::True => match expect {
                None => Tri::Unknown,
                // a clause over data latches only excludes some data valuation outright;
                // one literal over a control latch leaves every valuation possible
                Some(Expectation::FifoData) => {
                    if !data.is_empty()
                        && cand.state.vars().all(|v| data.contains(&(v.index() - 1)))
                    {
                        Tri::True
                    } else {
                        Tri::False
                    }
                }
                Some(Expectation::Cnf(e)) => {
                    let n = cnf_vars(e).max(cnf_vars(std::slice::from_ref(&cand.state)));
                    let neg: Vec<Lit> = cand.state.lits().iter().map(|&l| !l).collect();
                    if sat::solve(n, e, &neg).is_some() {
                        Tri::True
                    } else {
                        Tri::False
                    }
                }
            },
        };
    }
}

/// The whole pipeline on one circuit.
pub fn propgen(
    c: &Circuit,
    opts: &PropgenOptions,
    expect: Option<&Expectation>,
    spec: Option<&[Clause]>,
    external: Option<&ExternalChecker>,
) -> PropertyReport {
    let u = unroll(c, opts.frames);
    let targets = u.select_targets(opts.order, opts.max_targets);
    let g = gen_local_props(&u, &targets, opts);
    let mut r = check_candidates(c, &g, opts.frames, external);
    flag_bad(&mut r, c, expect, spec);
    r
}

impl PropertyReport {
    fn pretty(&self, q: &Clause) -> String {
        q.lits()
            .iter()
            .map(|l| {
                let name = &self.latch_names[l.var().index() - 1];
                if l.is_positive() {
                    name.clone()
                } else {
                    format!("!{name}")
                }
            })
            .collect::<Vec<_>>()
            .join(" | ")
    }

    pub fn bad(&self) -> impl Iterator<Item = &Candidate> {
        self.candidates.iter().filter(|c| c.bad == Tri::True)
    }

    /// Line-oriented summary. Timings are left out unless asked for, so that runs compare
    /// byte for byte.
    pub fn to_text(&self, timings: bool) -> String {
        let solved = self
            .runs
            .iter()
            .filter(|r| r.status != Status::TimedOut)
            .count();
        let count = |v: &str| {
            self.candidates
                .iter()
                .filter(|c| c.invariant.label() == v)
                .count()
        };
        let mut s = String::new();
        let _ = writeln!(
            s,
            "frames {} targets {} solved {} timed_out {}",
            self.frames,
            self.runs.len(),
            solved,
            self.runs.len() - solved
        );
        let _ = writeln!(
            s,
            "properties {} invariant_true {} invariant_false {} invariant_unknown {} bad {}",
            self.candidates.len(),
            count("true"),
            count("false"),
            count("unknown"),
            self.bad().count()
        );
        if timings {
            let total: Duration = self.runs.iter().map(|r| r.elapsed).sum();
            let _ = writeln!(s, "pqe_time {:.3}s", total.as_secs_f64());
        }
        for c in &self.candidates {
            let _ = writeln!(
                s,
                "Q {} ({}) invariant={} implied_by_spec={} bad={}",
                c.state,
                self.pretty(&c.state),
                c.invariant.label(),
                c.implied_by_spec.label(),
                c.bad.label()
            );
        }
        s
    }

    /// One row per candidate.
    pub fn to_table(&self) -> String {
        let mut s = String::from("clause\tlocal\tinvariant\timplied_by_spec\tbad\n");
        for c in &self.candidates {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}",
                c.state,
                c.held_locally,
                c.invariant.label(),
                c.implied_by_spec.label(),
                c.bad.label()
            );
        }
        s
    }
}
