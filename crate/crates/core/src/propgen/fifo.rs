//! A FIFO buffer netlist with an optional bug: the buggy variant never enqueues `val`.

use thiserror::Error;

use super::circuit::{ALit, Circuit, Init};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FifoError {
    #[error("need n >= 1 and 1 <= p <= 16, got n={n}, p={p}")]
    Size { n: usize, p: usize },
    #[error("val must satisfy 1 <= val < 2^p, got {0}")]
    Val(u64),
}

/// Latch name prefix of the data buffer.
pub const DATA_PREFIX: &str = "data";

fn bits_for(x: usize) -> usize {
    (usize::BITS - x.leading_zeros()).max(1) as usize
}

fn word_latches(c: &mut Circuit, name: &str, bits: usize) -> Vec<ALit> {
    (0..bits)
        .map(|b| c.add_latch(format!("{name}{b}"), Init::Zero))
        .collect()
}

fn incr(c: &mut Circuit, w: &[ALit]) -> Vec<ALit> {
    let mut carry = ALit::TRUE;
    w.iter()
        .map(|&b| {
            let s = c.xor(b, carry);
            carry = c.and(b, carry);
            s
        })
        .collect()
}

fn decr(c: &mut Circuit, w: &[ALit]) -> Vec<ALit> {
    let mut borrow = ALit::TRUE;
    w.iter()
        .map(|&b| {
            let s = c.xor(b, borrow);
            borrow = c.and(!b, borrow);
            s
        })
        .collect()
}

/// Pointer increment that wraps from `n - 1` to 0.
fn incr_mod(c: &mut Circuit, w: &[ALit], n: usize) -> Vec<ALit> {
    let last = c.eq_const(w, n as u64 - 1);
    let inc = incr(c, w);
    inc.into_iter().map(|b| c.and(b, !last)).collect()
}

fn mux_word(c: &mut Circuit, s: ALit, t: &[ALit], e: &[ALit]) -> Vec<ALit> {
    t.iter().zip(e).map(|(&a, &b)| c.mux(s, a, b)).collect()
}

/// FIFO with `n` elements of `p` bits. Inputs: `write`, `read`, `dataIn0..`. Latches, in
/// order: `data{i}_{b}`, write pointer `wr*`, read pointer `rd*`, element count `size*`;
/// all start at 0. A write happens when `write` is on and the buffer is not full (and, in
/// the buggy variant, `dataIn != val`); a read when `read` is on, no write happens and the
/// buffer is not empty.
pub fn build_fifo(n: usize, p: usize, val: u64, buggy: bool) -> Result<Circuit, FifoError> {
    if n == 0 || p == 0 || p > 16 {
        return Err(FifoError::Size { n, p });
    }
    if val == 0 || val >= 1 << p {
        return Err(FifoError::Val(val));
    }
    let mut c = Circuit::new();
    let write = c.add_input("write");
    let read = c.add_input("read");
    let data_in: Vec<ALit> = (0..p).map(|b| c.add_input(format!("dataIn{b}"))).collect();
    let data: Vec<Vec<ALit>> = (0..n)
        .map(|i| word_latches(&mut c, &format!("{DATA_PREFIX}{i}_"), p))
        .collect();
    let pb = bits_for(n - 1);
    let sb = bits_for(n);
    let wr = word_latches(&mut c, "wr", pb);
    let rd = word_latches(&mut c, "rd", pb);
    let size = word_latches(&mut c, "size", sb);

    let full = c.eq_const(&size, n as u64);
    let empty = c.eq_const(&size, 0);
    let mut do_write = c.and(write, !full);
    if buggy {
        let is_val = c.eq_const(&data_in, val);
        do_write = c.and(do_write, !is_val);
    }
    let nw = c.and(!do_write, !empty);
    let do_read = c.and(read, nw);

    let mut next: Vec<ALit> = Vec::new();
    for (i, word) in data.iter().enumerate() {
        let at = c.eq_const(&wr, i as u64);
        let sel = c.and(do_write, at);
        next.extend(mux_word(&mut c, sel, &data_in, word));
    }
    let wr_inc = incr_mod(&mut c, &wr, n);
    next.extend(mux_word(&mut c, do_write, &wr_inc, &wr));
    let rd_inc = incr_mod(&mut c, &rd, n);
    next.extend(mux_word(&mut c, do_read, &rd_inc, &rd));
    let up = incr(&mut c, &size);
    let down = decr(&mut c, &size);
    let shrunk = mux_word(&mut c, do_read, &down, &size);
    next.extend(mux_word(&mut c, do_write, &up, &shrunk));
    for (i, nx) in next.into_iter().enumerate() {
        c.set_next(i, nx);
    }
    Ok(c)
}

/// Latch indices of the data buffer.
pub fn data_latches(c: &Circuit) -> Vec<usize> {
    c.latches()
        .iter()
        .enumerate()
        .filter(|(_, l)| l.name.starts_with(DATA_PREFIX))
        .map(|(i, _)| i)
        .collect()
}
