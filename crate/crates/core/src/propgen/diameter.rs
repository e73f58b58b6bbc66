//! Reachability diameter bound by PQE: is `I_1` redundant in `∃S_0…S_m[I_0 ∧ I_1 ∧ T^{m+1}]`?

use std::time::Duration;

use super::circuit::Circuit;
use super::unroll::unroll;
use crate::engine::{self, sat, Options, Status};
use crate::formula::{Clause, QuantFormula};

/// Decides `diameter(c) <= m`, or `None` when the PQE run exceeds `time_limit`.
///
/// With stuttering, states reachable in exactly `j` steps are those reachable in at most
/// `j`. Keeping `I_1` restricts `S_{m+1}` to states reachable in `m` steps; dropping it
/// allows `m + 1`. `I_1` is redundant iff both sets agree, i.e. iff no new state appears
/// after `m` steps. The solution clauses are over `S_{m+1}`, so redundancy reduces to
/// each of them being implied by the formula without `I_1`.
pub fn diameter_leq(c: &Circuit, m: usize, time_limit: Option<Duration>) -> Option<bool> {
    assert!(m >= 1);
    let s = c.with_stutter();
    let u = unroll(&s, m + 1);
    let i1 = u.init_at(&s, 1);
    let f = QuantFormula::new(
        u.nvars,
        u.last_frame().iter().copied(),
        i1,
        u.clauses.clone(),
    )
    .expect("I_1 and F are over different frames");
    let opts = Options {
        time_limit,
        order: engine::DecisionOrder::Activity,
        ..Options::default()
    };
    let sol = engine::take_out(&f, &opts);
    match sol.status {
        Status::TimedOut => None,
        Status::Unsat => Some(true),
        Status::Solved => {
            let rest: Vec<Clause> = f.f2.clone();
            Some(sol.clauses.iter().all(|q| sat::implies(u.nvars, &rest, q)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::propgen::circuit::{ALit, Init};
    use crate::propgen::reach::Reachability;

    fn toggler() -> Circuit {
        let mut c = Circuit::new();
        let s = c.add_latch("s", Init::Zero);
        c.set_next(0, !s);
        c
    }

    fn counter(bits: usize, modulo: u64) -> Circuit {
        let mut c = Circuit::new();
        let s: Vec<ALit> = (0..bits)
            .map(|i| c.add_latch(format!("c{i}"), Init::Zero))
            .collect();
        let wrap = c.eq_const(&s, modulo - 1);
        let mut carry = ALit::TRUE;
        for i in 0..bits {
            let inc = c.xor(s[i], carry);
            carry = c.and(s[i], carry);
            let n = c.and(inc, !wrap);
            c.set_next(i, n);
        }
        c
    }

    #[test]
    fn toggler_and_three_state_counter() {
        assert_eq!(diameter_leq(&toggler(), 1, None), Some(true));
        let c = counter(2, 3);
        assert_eq!(Reachability::explore(&c).unwrap().diameter(), 2);
        assert_eq!(diameter_leq(&c, 1, None), Some(false));
        assert_eq!(diameter_leq(&c, 2, None), Some(true));
        assert_eq!(diameter_leq(&c, 3, None), Some(true));
    }

    #[test]
    fn free_init_is_diameter_zero() {
        let mut c = Circuit::new();
        let a = c.add_latch("a", Init::Free);
        c.set_next(0, !a);
        assert_eq!(diameter_leq(&c, 1, None), Some(true));
    }
}
