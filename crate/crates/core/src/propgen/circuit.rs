//! And-inverter graphs with latches, plus the ASCII AIGER (`aag`) subset we read and write.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::ops::Not;

use thiserror::Error;

/// A signal: node index times two, plus one when complemented. Node 0 is constant false.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ALit(pub u32);

impl ALit {
    pub const FALSE: ALit = ALit(0);
    pub const TRUE: ALit = ALit(1);

    pub fn node(self) -> usize {
        (self.0 >> 1) as usize
    }

    pub fn is_complemented(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn is_const(self) -> bool {
        self.0 < 2
    }

    fn of(node: usize) -> ALit {
        ALit((node as u32) << 1)
    }
}

impl Not for ALit {
    type Output = ALit;
    fn not(self) -> ALit {
        ALit(self.0 ^ 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    Zero,
    One,
    /// Any value; every combination is an initial state.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Const,
    Input(usize),
    Latch(usize),
    And(ALit, ALit),
}

#[derive(Debug, Clone)]
pub struct Latch {
    pub node: usize,
    pub next: Option<ALit>,
    pub init: Init,
    pub name: String,
}

#[derive(Debug, Clone, Default)]
pub struct Circuit {
    nodes: Vec<Node>,
    inputs: Vec<usize>,
    input_names: Vec<String>,
    latches: Vec<Latch>,
    outputs: Vec<ALit>,
    strash: HashMap<(ALit, ALit), ALit>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CircuitError {
    #[error("latch {0} has no next-state function")]
    MissingNext(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("combinational cycle through aiger variable {0}")]
    Cycle(u32),
}

impl Circuit {
    pub fn new() -> Circuit {
        Circuit {
            nodes: vec![Node::Const],
            ..Circuit::default()
        }
    }

    pub fn add_input(&mut self, name: impl Into<String>) -> ALit {
        let n = self.nodes.len();
        self.nodes.push(Node::Input(self.inputs.len()));
        self.inputs.push(n);
        self.input_names.push(name.into());
        ALit::of(n)
    }

    /// Adds a latch; its next-state function is set later with [`Circuit::set_next`].
    pub fn add_latch(&mut self, name: impl Into<String>, init: Init) -> ALit {
        let n = self.nodes.len();
        self.nodes.push(Node::Latch(self.latches.len()));
        self.latches.push(Latch {
            node: n,
            next: None,
            init,
            name: name.into(),
        });
        ALit::of(n)
    }

    pub fn set_next(&mut self, latch: usize, next: ALit) {
        self.latches[latch].next = Some(next);
    }

    pub fn add_output(&mut self, o: ALit) {
        self.outputs.push(o);
    }

    pub fn and(&mut self, a: ALit, b: ALit) -> ALit {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        if a == ALit::FALSE || a == !b {
            return ALit::FALSE;
        }
        if a == ALit::TRUE || a == b {
            return b;
        }
        if let Some(&g) = self.strash.get(&(a, b)) {
            return g;
        }
        let g = ALit::of(self.nodes.len());
        self.nodes.push(Node::And(a, b));
        self.strash.insert((a, b), g);
        g
    }

    pub fn or(&mut self, a: ALit, b: ALit) -> ALit {
        !self.and(!a, !b)
    }

    pub fn xor(&mut self, a: ALit, b: ALit) -> ALit {
        let l = self.and(a, !b);
        let r = self.and(!a, b);
        self.or(l, r)
    }

    /// `s ? t : e`
    pub fn mux(&mut self, s: ALit, t: ALit, e: ALit) -> ALit {
        if t == e {
            return t;
        }
        let l = self.and(s, t);
        let r = self.and(!s, e);
        self.or(l, r)
    }

    pub fn and_all(&mut self, xs: impl IntoIterator<Item = ALit>) -> ALit {
        xs.into_iter().fold(ALit::TRUE, |acc, x| self.and(acc, x))
    }

    pub fn or_all(&mut self, xs: impl IntoIterator<Item = ALit>) -> ALit {
        xs.into_iter().fold(ALit::FALSE, |acc, x| self.or(acc, x))
    }

    /// Word equality with a constant.
    pub fn eq_const(&mut self, word: &[ALit], value: u64) -> ALit {
        let bits: Vec<ALit> = word
            .iter()
            .enumerate()
            .map(|(i, &b)| if value >> i & 1 == 1 { b } else { !b })
            .collect();
        self.and_all(bits)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn num_latches(&self) -> usize {
        self.latches.len()
    }

    pub fn num_ands(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::And(..)))
            .count()
    }

    pub fn latches(&self) -> &[Latch] {
        &self.latches
    }

    pub fn latch_lit(&self, i: usize) -> ALit {
        ALit::of(self.latches[i].node)
    }

    pub fn input_lit(&self, i: usize) -> ALit {
        ALit::of(self.inputs[i])
    }

    pub fn input_names(&self) -> &[String] {
        &self.input_names
    }

    pub fn outputs(&self) -> &[ALit] {
        &self.outputs
    }

    pub fn latch_index(&self, name: &str) -> Option<usize> {
        self.latches.iter().position(|l| l.name == name)
    }

    pub fn next(&self, latch: usize) -> ALit {
        self.latches[latch].next.expect("validated circuit")
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        match self.latches.iter().find(|l| l.next.is_none()) {
            Some(l) => Err(CircuitError::MissingNext(l.name.clone())),
            None => Ok(()),
        }
    }

    /// Adds a `stutter` input; when it is on, every latch keeps its value.
    pub fn with_stutter(&self) -> Circuit {
        let mut c = self.clone();
        let s = c.add_input("stutter");
        for i in 0..c.latches.len() {
            let cur = c.latch_lit(i);
            let nx = c.next(i);
            let m = c.mux(s, cur, nx);
            c.set_next(i, m);
        }
        c
    }

    /// Evaluates 64 (state, input) lanes at once; bit `k` of each word belongs to lane `k`.
    /// Returns the next-state words.
    pub fn step64(&self, latches: &[u64], inputs: &[u64]) -> Vec<u64> {
        let vals = self.eval64(latches, inputs);
        self.latches
            .iter()
            .map(|l| lit64(&vals, l.next.expect("validated circuit")))
            .collect()
    }

    /// Node values for 64 lanes.
    pub fn eval64(&self, latches: &[u64], inputs: &[u64]) -> Vec<u64> {
        let mut v = vec![0u64; self.nodes.len()];
        for (i, n) in self.nodes.iter().enumerate() {
            v[i] = match *n {
                Node::Const => 0,
                Node::Input(k) => inputs[k],
                Node::Latch(k) => latches[k],
                Node::And(a, b) => lit64(&v, a) & lit64(&v, b),
            };
        }
        v
    }

    /// Single-lane step.
    pub fn step(&self, state: &[bool], inputs: &[bool]) -> Vec<bool> {
        let w = |b: &bool| if *b { !0u64 } else { 0 };
        let l: Vec<u64> = state.iter().map(w).collect();
        let i: Vec<u64> = inputs.iter().map(w).collect();
        self.step64(&l, &i)
            .into_iter()
            .map(|x| x & 1 == 1)
            .collect()
    }

    // ---- aag ------------------------------------------------------------------

    pub fn to_aag(&self) -> String {
        let mut map = vec![0u32; self.nodes.len()];
        let mut next_id = 1u32;
        for &n in &self.inputs {
            map[n] = next_id;
            next_id += 1;
        }
        for l in &self.latches {
            map[l.node] = next_id;
            next_id += 1;
        }
        let mut ands = Vec::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if let Node::And(a, b) = n {
                map[i] = next_id;
                next_id += 1;
                ands.push((i, *a, *b));
            }
        }
        let tr = |a: ALit| (map[a.node()] << 1) | (a.0 & 1);
        let mut s = String::new();
        let _ = writeln!(
            s,
            "aag {} {} {} {} {}",
            next_id - 1,
            self.inputs.len(),
            self.latches.len(),
            self.outputs.len(),
            ands.len()
        );
        for &n in &self.inputs {
            let _ = writeln!(s, "{}", map[n] << 1);
        }
        for l in &self.latches {
            let lit = map[l.node] << 1;
            let nx = tr(l.next.expect("validated circuit"));
            match l.init {
                Init::Zero => writeln!(s, "{lit} {nx}"),
                Init::One => writeln!(s, "{lit} {nx} 1"),
                Init::Free => writeln!(s, "{lit} {nx} {lit}"),
            }
            .unwrap();
        }
        for &o in &self.outputs {
            let _ = writeln!(s, "{}", tr(o));
        }
        for (i, a, b) in ands {
            let (a, b) = (tr(a), tr(b));
            let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
            let _ = writeln!(s, "{} {} {}", map[i] << 1, hi, lo);
        }
        for (k, name) in self.input_names.iter().enumerate() {
            if !name.is_empty() {
                let _ = writeln!(s, "i{k} {name}");
            }
        }
        for (k, l) in self.latches.iter().enumerate() {
            if !l.name.is_empty() {
                let _ = writeln!(s, "l{k} {}", l.name);
            }
        }
        s
    }

    pub fn from_aag(text: &str) -> Result<Circuit, CircuitError> {
        let err = |line: usize, msg: &str| CircuitError::Parse {
            line,
            msg: msg.to_string(),
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let (hl, header) = lines.next().ok_or_else(|| err(1, "empty file"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() < 6 || h[0] != "aag" {
            return Err(err(hl, "expected header `aag M I L O A`"));
        }
        let num = |s: &str, line: usize| -> Result<u32, CircuitError> {
            s.parse::<u32>()
                .map_err(|_| err(line, &format!("bad number `{s}`")))
        };
        let m = num(h[1], hl)?;
        let ni = num(h[2], hl)? as usize;
        let nl = num(h[3], hl)? as usize;
        let no = num(h[4], hl)? as usize;
        let na = num(h[5], hl)? as usize;
        let mut row = |want: usize| -> Result<(usize, Vec<u32>), CircuitError> {
            let (ln, l) = lines
                .next()
                .ok_or_else(|| err(0, "unexpected end of file"))?;
            let v = l
                .split_whitespace()
                .map(|t| num(t, ln))
                .collect::<Result<Vec<u32>, _>>()?;
            if v.len() < want {
                return Err(err(ln, "too few fields"));
            }
            Ok((ln, v))
        };
        let mut c = Circuit::new();
        // aiger variable -> signal in `c`
        let mut sig: Vec<Option<ALit>> = vec![None; m as usize + 1];
        sig[0] = Some(ALit::FALSE);
        let define = |var: u32, ln: usize, s: ALit, sig: &mut Vec<Option<ALit>>| {
            let slot = sig
                .get_mut(var as usize)
                .ok_or_else(|| err(ln, "variable exceeds M"))?;
            if slot.is_some() || var == 0 {
                return Err(err(ln, "variable defined twice"));
            }
            *slot = Some(s);
            Ok(())
        };
        for k in 0..ni {
            let (ln, v) = row(1)?;
            if v[0] & 1 == 1 {
                return Err(err(ln, "input literal must be even"));
            }
            let s = c.add_input(format!("i{k}"));
            define(v[0] >> 1, ln, s, &mut sig)?;
        }
        let mut latch_rows = Vec::new();
        for k in 0..nl {
            let (ln, v) = row(2)?;
            if v[0] & 1 == 1 {
                return Err(err(ln, "latch literal must be even"));
            }
            let init = match v.get(2) {
                None | Some(0) => Init::Zero,
                Some(1) => Init::One,
                Some(&x) if x == v[0] => Init::Free,
                Some(_) => return Err(err(ln, "latch reset must be 0, 1 or the latch itself")),
            };
            let s = c.add_latch(format!("l{k}"), init);
            define(v[0] >> 1, ln, s, &mut sig)?;
            latch_rows.push((ln, v[1]));
        }
        let mut out_rows = Vec::new();
        for _ in 0..no {
            let (ln, v) = row(1)?;
            out_rows.push((ln, v[0]));
        }
        let mut and_def: HashMap<u32, (usize, u32, u32)> = HashMap::new();
        for _ in 0..na {
            let (ln, v) = row(3)?;
            if v[0] & 1 == 1 || v[0] == 0 {
                return Err(err(ln, "and literal must be even and non-zero"));
            }
            let var = v[0] >> 1;
            if var > m || sig[var as usize].is_some() || and_def.contains_key(&var) {
                return Err(err(ln, "variable defined twice or exceeds M"));
            }
            and_def.insert(var, (ln, v[1], v[2]));
        }
        // ands may be listed in any order; build them depth-first
        let mut order: Vec<u32> = and_def.keys().copied().collect();
        order.sort();
        let mut state: HashMap<u32, u8> = HashMap::new();
        for root in order {
            let mut stack = vec![(root, false)];
            while let Some((var, expanded)) = stack.pop() {
                if sig[var as usize].is_some() {
                    continue;
                }
                let &(ln, a, b) = and_def
                    .get(&var)
                    .ok_or_else(|| err(0, &format!("undefined aiger variable {var}")))?;
                if expanded {
                    let get = |l: u32, sig: &Vec<Option<ALit>>| {
                        sig.get((l >> 1) as usize)
                            .copied()
                            .flatten()
                            .map(|s| if l & 1 == 1 { !s } else { s })
                            .ok_or_else(|| err(ln, &format!("undefined literal {l}")))
                    };
                    let (sa, sb) = (get(a, &sig)?, get(b, &sig)?);
                    // keep one node per aiger and so that names and counts survive a round trip
                    let g = c.and_raw(sa, sb);
                    sig[var as usize] = Some(g);
                    state.insert(var, 2);
                    continue;
                }
                if state.get(&var) == Some(&1) {
                    return Err(CircuitError::Cycle(var));
                }
                state.insert(var, 1);
                stack.push((var, true));
                for l in [a, b] {
                    let v = l >> 1;
                    if v as usize >= sig.len() {
                        return Err(err(ln, &format!("undefined literal {l}")));
                    }
                    if sig[v as usize].is_none() {
                        if state.get(&v) == Some(&1) {
                            return Err(CircuitError::Cycle(v));
                        }
                        stack.push((v, false));
                    }
                }
            }
        }
        let resolve = |l: u32, ln: usize, sig: &Vec<Option<ALit>>| {
            sig.get((l >> 1) as usize)
                .copied()
                .flatten()
                .map(|s| if l & 1 == 1 { !s } else { s })
                .ok_or_else(|| err(ln, &format!("undefined literal {l}")))
        };
        for (k, (ln, nx)) in latch_rows.into_iter().enumerate() {
            let s = resolve(nx, ln, &sig)?;
            c.set_next(k, s);
        }
        for (ln, o) in out_rows {
            let s = resolve(o, ln, &sig)?;
            c.add_output(s);
        }
        for (ln, l) in lines {
            let l = l.trim();
            if l == "c" || l.starts_with("c ") {
                break;
            }
            let Some((key, name)) = l.split_once(' ') else {
                continue;
            };
            let (kind, idx) = key.split_at(1);
            let Ok(idx) = idx.parse::<usize>() else {
                continue;
            };
            match kind {
                "i" if idx < c.input_names.len() => c.input_names[idx] = name.to_string(),
                "l" if idx < c.latches.len() => c.latches[idx].name = name.to_string(),
                "i" | "l" => return Err(err(ln, "symbol index out of range")),
                _ => {}
            }
        }
        Ok(c)
    }

    /// AND node without folding or hashing (reader only).
    fn and_raw(&mut self, a: ALit, b: ALit) -> ALit {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        let g = ALit::of(self.nodes.len());
        self.nodes.push(Node::And(a, b));
        self.strash.entry((a, b)).or_insert(g);
        g
    }
}

pub fn lit64(vals: &[u64], l: ALit) -> u64 {
    let v = vals[l.node()];
    if l.is_complemented() {
        !v
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toggler() -> Circuit {
        let mut c = Circuit::new();
        let s = c.add_latch("s", Init::Zero);
        c.set_next(0, !s);
        c
    }

    #[test]
    fn builder_folds_constants() {
        let mut c = Circuit::new();
        let a = c.add_input("a");
        let b = c.add_input("b");
        assert_eq!(c.and(a, ALit::FALSE), ALit::FALSE);
        assert_eq!(c.and(a, ALit::TRUE), a);
        assert_eq!(c.and(a, !a), ALit::FALSE);
        assert_eq!(c.and(a, a), a);
        let g = c.and(a, b);
        assert_eq!(c.and(b, a), g);
        assert_eq!(c.num_ands(), 1);
    }

    #[test]
    fn step_matches_truth_table() {
        let mut c = Circuit::new();
        let a = c.add_latch("a", Init::Zero);
        let b = c.add_latch("b", Init::Zero);
        let z = c.add_latch("z", Init::Zero);
        let g = c.and(a, b);
        c.set_next(0, a);
        c.set_next(1, b);
        c.set_next(2, g);
        let _ = z;
        for s in 0..8u32 {
            let st: Vec<bool> = (0..3).map(|i| s >> i & 1 == 1).collect();
            let n = c.step(&st, &[]);
            assert_eq!(n, vec![st[0], st[1], st[0] && st[1]]);
        }
    }

    #[test]
    fn aag_round_trip() {
        let mut c = Circuit::new();
        let i = c.add_input("in");
        let a = c.add_latch("a", Init::One);
        let b = c.add_latch("b", Init::Free);
        let x = c.xor(a, i);
        c.set_next(0, x);
        let y = c.and(a, !b);
        c.set_next(1, y);
        c.add_output(!y);
        let text = c.to_aag();
        let d = Circuit::from_aag(&text).unwrap();
        assert_eq!(d.to_aag(), text);
        assert_eq!(d.latches()[0].name, "a");
        assert_eq!(d.latches()[1].init, Init::Free);
        for s in 0..4u32 {
            for inp in [false, true] {
                let st = [s & 1 == 1, s & 2 == 2];
                assert_eq!(c.step(&st, &[inp]), d.step(&st, &[inp]));
            }
        }
    }

    #[test]
    fn aag_unordered_ands_and_errors() {
        let text = "aag 4 1 1 0 2\n2\n4 8\n8 6 2\n6 5 3\n";
        let c = Circuit::from_aag(text).unwrap();
        assert_eq!(c.num_ands(), 2);
        // next = (¬l ∧ ¬i) ∧ i = 0
        assert_eq!(c.step(&[false], &[true]), vec![false]);
        let cyc = "aag 3 0 0 1 2\n4\n4 6 1\n6 4 1\n";
        assert!(matches!(
            Circuit::from_aag(cyc),
            Err(CircuitError::Cycle(_))
        ));
        let bad = "aag 1 1 0 0 0\n3\n";
        assert!(matches!(
            Circuit::from_aag(bad),
            Err(CircuitError::Parse { line: 2, .. })
        ));
        assert!(Circuit::from_aag("aig 0 0 0 0 0\n").is_err());
    }

    #[test]
    fn stutter_holds_state() {
        let c = toggler().with_stutter();
        assert_eq!(c.step(&[false], &[true]), vec![false]);
        assert_eq!(c.step(&[true], &[true]), vec![true]);
        assert_eq!(c.step(&[false], &[false]), vec![true]);
    }
}
