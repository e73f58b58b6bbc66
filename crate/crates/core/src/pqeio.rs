//! PQDIMACS and DIMACS reading and writing.
//!
//! PQDIMACS is DIMACS with a `p pqe <nvars> <n_f1> <n_f2>` header, a `y <ids> 0` line
//! naming the free variables, then the F1 clauses followed by the F2 clauses.

use std::collections::HashSet;
use std::fmt::Write as _;

use thiserror::Error;

use crate::engine::{Solution, Stats, Status};
use crate::formula::{Clause, ClauseError, Lit, QuantFormula, Var};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("missing header")]
    MissingHeader,
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("unexpected token `{0}`")]
    BadToken(String),
    #[error("duplicate literal {0}")]
    DuplicateLiteral(i32),
    #[error("tautology on variable {0}")]
    Tautology(u32),
    #[error("variable {var} exceeds declared {nvars}")]
    VarOutOfRange { var: u32, nvars: u32 },
    #[error("expected {expected} clauses, found {found}")]
    ClauseCount { expected: usize, found: usize },
    #[error("clause not terminated by 0")]
    Unterminated,
    #[error("clause {0} appears twice")]
    DuplicateClause(String),
    #[error("free variable {0} listed twice")]
    DuplicateFree(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PqdimacsDoc {
    pub nvars: u32,
    pub free: Vec<Var>,
    pub f1: Vec<Clause>,
    pub f2: Vec<Clause>,
}

impl PqdimacsDoc {
    pub fn to_formula(&self) -> QuantFormula {
        QuantFormula::new(
            self.nvars,
            self.free.iter().copied(),
            self.f1.clone(),
            self.f2.clone(),
        )
        .expect("parser validated ranges and duplicates")
    }

    pub fn from_formula(f: &QuantFormula) -> PqdimacsDoc {
        PqdimacsDoc {
            nvars: f.nvars(),
            free: f.free_vars(),
            f1: f.f1.clone(),
            f2: f.f2.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cnf {
    pub nvars: u32,
    pub clauses: Vec<Clause>,
}

struct Tokens<'a> {
    toks: Vec<(usize, &'a str)>,
    at: usize,
}

impl<'a> Tokens<'a> {
    /// Splits off comment lines; returns the header line and the remaining tokens.
    fn new(text: &'a str) -> Result<(usize, Vec<&'a str>, Tokens<'a>), ParseError> {
        let mut header = None;
        let mut toks = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let ln = i + 1;
            let t = line.trim();
            if t.is_empty() || t.starts_with('c') {
                continue;
            }
            if t.starts_with('p') {
                if header.is_some() {
                    return Err(ParseError {
                        line: ln,
                        kind: ParseErrorKind::BadHeader("second header".into()),
                    });
                }
                header = Some((ln, t.split_whitespace().collect::<Vec<_>>()));
                continue;
            }
            if header.is_none() {
                return Err(ParseError {
                    line: ln,
                    kind: ParseErrorKind::MissingHeader,
                });
            }
            toks.extend(t.split_whitespace().map(|w| (ln, w)));
        }
        let (ln, h) = header.ok_or(ParseError {
            line: 1,
            kind: ParseErrorKind::MissingHeader,
        })?;
        Ok((ln, h, Tokens { toks, at: 0 }))
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.toks.get(self.at).copied()
    }

    fn last_line(&self) -> usize {
        self.toks.last().map(|t| t.0).unwrap_or(0)
    }

    /// Reads a zero-terminated list of integers.
    fn ints(&mut self) -> Result<Option<(usize, Vec<i32>)>, ParseError> {
        let Some((start, _)) = self.peek() else {
            return Ok(None);
        };
        let mut out = Vec::new();
        loop {
            let Some((ln, w)) = self.peek() else {
                return Err(ParseError {
                    line: start,
                    kind: ParseErrorKind::Unterminated,
                });
            };
            self.at += 1;
            let v: i32 = w.parse().map_err(|_| ParseError {
                line: ln,
                kind: ParseErrorKind::BadToken(w.to_string()),
            })?;
            if v == 0 {
                return Ok(Some((start, out)));
            }
            out.push(v);
        }
    }
}

fn header_num(h: &[&str], i: usize, line: usize) -> Result<u64, ParseError> {
    h.get(i)
        .and_then(|w| w.parse().ok())
        .ok_or_else(|| ParseError {
            line,
            kind: ParseErrorKind::BadHeader(h.join(" ")),
        })
}

fn make_clause(line: usize, lits: &[i32], nvars: u32) -> Result<Clause, ParseError> {
    if let Some(&d) = lits.iter().find(|d| d.unsigned_abs() > nvars) {
        return Err(ParseError {
            line,
            kind: ParseErrorKind::VarOutOfRange {
                var: d.unsigned_abs(),
                nvars,
            },
        });
    }
    Clause::new_strict(lits.iter().map(|&d| Lit::from_dimacs(d))).map_err(|e| ParseError {
        line,
        kind: match e {
            ClauseError::Tautology(v) => ParseErrorKind::Tautology(v.0),
            ClauseError::DuplicateLiteral(l) => ParseErrorKind::DuplicateLiteral(l.to_dimacs()),
        },
    })
}

fn read_clauses(
    toks: &mut Tokens,
    nvars: u32,
    expected: usize,
) -> Result<Vec<(usize, Clause)>, ParseError> {
    let mut out = Vec::new();
    while let Some((ln, lits)) = toks.ints()? {
        out.push((ln, make_clause(ln, &lits, nvars)?));
    }
    if out.len() != expected {
        return Err(ParseError {
            line: toks.last_line(),
            kind: ParseErrorKind::ClauseCount {
                expected,
                found: out.len(),
            },
        });
    }
    Ok(out)
}

pub fn parse_pqdimacs(text: &str) -> Result<PqdimacsDoc, ParseError> {
    let (hl, h, mut toks) = Tokens::new(text)?;
    if h.len() != 5 || h[0] != "p" || h[1] != "pqe" {
        return Err(ParseError {
            line: hl,
            kind: ParseErrorKind::BadHeader(h.join(" ")),
        });
    }
    let nvars = header_num(&h, 2, hl)? as u32;
    let n1 = header_num(&h, 3, hl)? as usize;
    let n2 = header_num(&h, 4, hl)? as usize;
    let mut free = Vec::new();
    if let Some((_, "y")) = toks.peek() {
        toks.at += 1;
        let (ln, ids) = toks.ints()?.unwrap_or((hl, Vec::new()));
        let mut seen = HashSet::new();
        for d in ids {
            if d <= 0 {
                return Err(ParseError {
                    line: ln,
                    kind: ParseErrorKind::BadToken(d.to_string()),
                });
            }
            if d as u32 > nvars {
                return Err(ParseError {
                    line: ln,
                    kind: ParseErrorKind::VarOutOfRange {
                        var: d as u32,
                        nvars,
                    },
                });
            }
            if !seen.insert(d) {
                return Err(ParseError {
                    line: ln,
                    kind: ParseErrorKind::DuplicateFree(d as u32),
                });
            }
            free.push(Var(d as u32));
        }
    }
    let all = read_clauses(&mut toks, nvars, n1 + n2)?;
    let mut seen = HashSet::new();
    for (ln, c) in &all {
        if !seen.insert(c) {
            return Err(ParseError {
                line: *ln,
                kind: ParseErrorKind::DuplicateClause(c.to_string()),
            });
        }
    }
    let mut clauses: Vec<Clause> = all.into_iter().map(|(_, c)| c).collect();
    let f2 = clauses.split_off(n1);
    Ok(PqdimacsDoc {
        nvars,
        free,
        f1: clauses,
        f2,
    })
}

pub fn write_pqdimacs(doc: &PqdimacsDoc) -> String {
    let mut s = format!("p pqe {} {} {}\ny", doc.nvars, doc.f1.len(), doc.f2.len());
    for v in &doc.free {
        write!(s, " {v}").unwrap();
    }
    s.push_str(" 0\n");
    for c in doc.f1.iter().chain(&doc.f2) {
        writeln!(s, "{c}").unwrap();
    }
    s
}

/// Plain DIMACS CNF. Repeated literals are merged, tautologies rejected.
pub fn parse_dimacs(text: &str) -> Result<Cnf, ParseError> {
    let (hl, h, mut toks) = Tokens::new(text)?;
    if h.len() != 4 || h[0] != "p" || h[1] != "cnf" {
        return Err(ParseError {
            line: hl,
            kind: ParseErrorKind::BadHeader(h.join(" ")),
        });
    }
    let nvars = header_num(&h, 2, hl)? as u32;
    let n = header_num(&h, 3, hl)? as usize;
    let mut clauses = Vec::new();
    while let Some((ln, mut lits)) = toks.ints()? {
        lits.sort_unstable();
        lits.dedup();
        clauses.push(make_clause(ln, &lits, nvars)?);
    }
    if clauses.len() != n {
        return Err(ParseError {
            line: toks.last_line(),
            kind: ParseErrorKind::ClauseCount {
                expected: n,
                found: clauses.len(),
            },
        });
    }
    Ok(Cnf { nvars, clauses })
}

pub fn write_dimacs(nvars: u32, clauses: &[Clause]) -> String {
    let mut s = format!("p cnf {} {}\n", nvars, clauses.len());
    for c in clauses {
        writeln!(s, "{c}").unwrap();
    }
    s
}

/// DIMACS over the original ids, preceded by `c status` and optional `c stats` lines.
pub fn write_solution(sol: &Solution, nvars: u32, stats: Option<&Stats>) -> String {
    let status = match sol.status {
        Status::Solved => "solved",
        Status::Unsat => "unsat",
        Status::TimedOut => "timeout",
    };
    let mut s = format!("c status {status}\n");
    if let Some(st) = stats {
        writeln!(
            s,
            "c stats targets={} decisions={} conflict_certs={} nonconflict_certs={} special={} blocked={} levels={} max_depth={} duplicates={}",
            st.targets,
            st.decisions,
            st.conflict_certs,
            st.nonconflict_certs,
            st.special_clauses,
            st.blocked,
            st.levels,
            st.max_depth,
            st.duplicates
        )
        .unwrap();
    }
    let clauses: &[Clause] = if sol.status == Status::Unsat {
        &[Clause::empty()]
    } else {
        &sol.clauses
    };
    s.push_str(&write_dimacs(nvars, clauses));
    s
}
