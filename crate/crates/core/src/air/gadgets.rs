//! Gadget library. Every gadget copies its operands into its own row via
//! equality constraints, computes the witness, and returns output cells.

use std::ops::Range;

use super::builder::CircuitBuilder;
use super::constraint::{exp_table_floor, NonLinearity};
use super::expr::Expr;
use super::grid::Cell;
use super::AirError;
use crate::field::Fe;

type Result<T> = std::result::Result<T, AirError>;

/// Quotient and remainder satisfying `2a + c = 2c·b + r`, `0 ≤ r < 2c`.
pub fn round_div_witness(a: i128, c: i128) -> (i128, i128) {
    let b = (2 * a + c).div_euclid(2 * c);
    (b, 2 * a + c - 2 * c * b)
}

/// Checked witness of the signed constant-divisor gadget:
/// `(s, m, bm, r, q)` with `q = sign(a)·round(|a| / k)`.
pub fn div_const_witness(a: i128, k: i128, bits: u32) -> Result<[i128; 5]> {
    if k < 1 || k >= 1i128 << bits {
        return Err(if k == 0 { AirError::DivisionByZero } else { AirError::RangeOverflow { value: k, bits } });
    }
    let m = a.abs();
    if m >= 1i128 << (2 * bits) {
        return Err(AirError::RangeOverflow { value: a, bits: 2 * bits });
    }
    let (bm, r) = round_div_witness(m, k);
    if bm >= 1i128 << bits {
        return Err(AirError::RangeOverflow { value: bm, bits });
    }
    let q = if a < 0 { -bm } else { bm };
    Ok([i128::from(a < 0), m, bm, r, q])
}

/// Checked `(b, r)` of the unsigned rounded division gadget.
pub fn round_div_checked(a: i128, c: i128, bits: u32) -> Result<(i128, i128)> {
    if c < 1 || c >= 1i128 << bits {
        return Err(if c == 0 { AirError::DivisionByZero } else { AirError::RangeOverflow { value: c, bits } });
    }
    if !(0..1i128 << (2 * bits)).contains(&a) {
        return Err(AirError::RangeOverflow { value: a, bits: 2 * bits });
    }
    Ok(round_div_witness(a, c))
}

/// Checked `max(a, b)`; the difference must fit in `bits + 1` bits.
pub fn max_checked(a: i128, b: i128, bits: u32) -> Result<i128> {
    let d = (a - b).abs();
    if d >= 1i128 << (bits + 1) {
        return Err(AirError::RangeOverflow { value: d, bits: bits + 1 });
    }
    Ok(a.max(b))
}

/// Checked `[a ≤ b]`.
pub fn le_checked(a: i128, b: i128, bits: u32) -> Result<bool> {
    let bit = a <= b;
    let d = if bit { b - a } else { a - b - 1 };
    if d >= 1i128 << (bits + 1) {
        return Err(AirError::RangeOverflow { value: d, bits: bits + 1 });
    }
    Ok(bit)
}

/// Checked witness of the fused update: `(a, s, m, bm, r, q, w')` with
/// `a = η·g` and `w' = w + sign(a)·round(|a| / sf)`.
pub fn sgd_witness(w: i128, g: i128, eta: i128, sf: i128, bits: u32) -> Result<[i128; 7]> {
    let a = eta * g;
    let m = a.abs();
    if m >= 1i128 << (2 * bits) {
        return Err(AirError::RangeOverflow { value: a, bits: 2 * bits });
    }
    let (bm, r) = round_div_witness(m, sf);
    let q = if a < 0 { -bm } else { bm };
    let w2 = w + q;
    if w2.abs() >= 1i128 << bits {
        return Err(AirError::RangeOverflow { value: w2, bits });
    }
    Ok([a, i128::from(a < 0), m, bm, r, q, w2])
}

/// Checked lookup of a nonlinearity over its table domain.
pub fn nonlin_checked(x: i128, nl: NonLinearity, sf: i64, bits: u32) -> Result<i128> {
    let (lo, hi) = nonlin_domain(nl, sf, bits);
    if x < lo as i128 || x > hi as i128 {
        return Err(AirError::DomainMiss { table: nl.name().to_string(), value: x });
    }
    Ok(nl.eval(x as i64, sf) as i128)
}

/// Inclusive input domain of a nonlinearity table.
pub fn nonlin_domain(nl: NonLinearity, sf: i64, bits: u32) -> (i64, i64) {
    let bound = 1i64 << bits;
    match nl {
        NonLinearity::Exp => (exp_table_floor(sf), 0),
        NonLinearity::Relu6 | NonLinearity::Relu6Grad => (-bound, bound - 1),
    }
}

fn col(j: usize) -> Expr {
    Expr::col(j)
}

impl CircuitBuilder {
    fn place(&mut self, src: Cell, dst: Cell) {
        let v = self.value(src);
        self.set(dst, v);
        self.copy(src, dst);
    }

    fn bits(&self) -> u32 {
        self.spec().range_bits
    }

    fn check_signed(&self, v: i128, bits: u32) -> Result<()> {
        if v.abs() >= 1i128 << bits {
            return Err(AirError::RangeOverflow { value: v, bits });
        }
        Ok(())
    }

    /// `z = Σ xs`, chaining rows when `xs` is wider than a row.
    pub fn sum(&mut self, xs: &[Cell]) -> Result<Cell> {
        let width = self.cols() - 1;
        if xs.len() <= width {
            return self.sum_row(xs);
        }
        let mut acc = self.sum_row(&xs[..width])?;
        for chunk in xs[width..].chunks(width - 1) {
            let mut row = vec![acc];
            row.extend_from_slice(chunk);
            acc = self.sum_row(&row)?;
        }
        Ok(acc)
    }

    fn sum_row(&mut self, xs: &[Cell]) -> Result<Cell> {
        let k = xs.len();
        let out = self.cols() - 1;
        let name = format!("sum_{k}");
        let sel = self.family(&name, |b, sel| {
            let poly = col(out) - Expr::sum((0..k).map(col));
            b.gate(&name, poly, sel);
        });
        let row = self.alloc_row()?;
        self.enable(sel, row);
        let mut acc = self.field().zero();
        for (j, &x) in xs.iter().enumerate() {
            self.place(x, Cell::new(j, row));
            acc = self.field().add(acc, self.value(x));
        }
        let z = Cell::new(out, row);
        self.set(z, acc);
        Ok(z)
    }

    /// `z = bias + Σ xs_i·ys_i`. Rows hold `⌊(C−2)/2⌋` pairs; longer vectors
    /// chain by feeding each row's output in as the next row's bias.
    pub fn dot(&mut self, xs: &[Cell], ys: &[Cell], bias: Option<Cell>) -> Result<Cell> {
        if xs.len() != ys.len() {
            return Err(AirError::ShapeMismatch(format!("dot of lengths {} and {}", xs.len(), ys.len())));
        }
        let per_row = (self.cols() - 2) / 2;
        if xs.is_empty() {
            return self.dot_row(&[], &[], bias);
        }
        let mut acc = bias;
        for (cx, cy) in xs.chunks(per_row).zip(ys.chunks(per_row)) {
            acc = Some(self.dot_row(cx, cy, acc)?);
        }
        Ok(acc.expect("at least one chunk"))
    }

    fn dot_row(&mut self, xs: &[Cell], ys: &[Cell], bias: Option<Cell>) -> Result<Cell> {
        let k = xs.len();
        let n = (self.cols() - 2) / 2;
        let (b_col, z_col) = (self.cols() - 2, self.cols() - 1);
        let name = if bias.is_some() { format!("dot_bias_{k}") } else { format!("dot_{k}") };
        let with_bias = bias.is_some();
        let sel = self.family(&name, |b, sel| {
            let mut poly = col(z_col) - Expr::sum((0..k).map(|i| col(i) * col(n + i)));
            if with_bias {
                poly = poly - col(b_col);
            }
            b.gate(&name, poly, sel);
        });
        let row = self.alloc_row()?;
        self.enable(sel, row);
        let f = *self.field();
        let mut acc = f.zero();
        if let Some(bc) = bias {
            self.place(bc, Cell::new(b_col, row));
            acc = self.value(bc);
        }
        for i in 0..k {
            self.place(xs[i], Cell::new(i, row));
            self.place(ys[i], Cell::new(n + i, row));
            acc = f.add(acc, f.mul(self.value(xs[i]), self.value(ys[i])));
        }
        let z = Cell::new(z_col, row);
        self.set(z, acc);
        Ok(z)
    }

    fn lincomb_family(&mut self, terms: &[(i128, Cell)], k0: i128, assert_zero: bool) -> Result<Cell> {
        let k = terms.len();
        let width = if assert_zero { k.max(1) } else { k + 1 };
        if width > self.cols() {
            return Err(AirError::WidthExceeded { needed: width, cols: self.cols() });
        }
        if assert_zero && k == 0 && k0 != 0 {
            return Err(AirError::ShapeMismatch(format!("constant {k0} asserted zero")));
        }
        let coeffs: Vec<String> = terms.iter().map(|(c, _)| c.to_string()).collect();
        let kind = if assert_zero { "zero" } else { "lincomb" };
        let name = format!("{kind}[{}|{k0}]", coeffs.join(","));
        let f = *self.field();
        let mut pad = vec![f.zero(); width];
        if !assert_zero {
            pad[k] = f.from_i128(k0);
        } else if k0 != 0 {
            // unused slots must still satisfy Σ c_i·x_i = −k0
            let j = terms
                .iter()
                .position(|(c, _)| f.from_i128(*c) != f.zero())
                .ok_or_else(|| AirError::ShapeMismatch(format!("constant {k0} asserted zero")))?;
            let inv = f.inverse(f.from_i128(terms[j].0)).expect("nonzero coefficient");
            pad[j] = f.mul(f.neg(f.from_i128(k0)), inv);
        }
        let cs: Vec<i128> = terms.iter().map(|(c, _)| *c).collect();
        let gate_name = name.clone();
        let base = self.packed_slot(&name, &pad, false, move |b, sel, base| {
            let mut poly = Expr::constant(k0) + Expr::sum(cs.iter().enumerate().map(|(i, &c)| c * col(base + i)));
            if !assert_zero {
                poly = col(base + k) - poly;
            }
            b.gate(&gate_name, poly, sel);
        })?;
        let mut acc = f.from_i128(k0);
        for (i, &(c, x)) in terms.iter().enumerate() {
            self.place(x, Cell::new(base.col + i, base.row));
            acc = f.add(acc, f.mul(f.from_i128(c), self.value(x)));
        }
        let out = Cell::new(base.col + k, base.row);
        if !assert_zero {
            self.set(out, acc);
        }
        Ok(out)
    }

    /// `z = k0 + Σ c_i·x_i`.
    pub fn lincomb(&mut self, terms: &[(i128, Cell)], k0: i128) -> Result<Cell> {
        self.lincomb_family(terms, k0, false)
    }

    /// Constrains `k0 + Σ c_i·x_i = 0`.
    pub fn assert_zero(&mut self, terms: &[(i128, Cell)], k0: i128) -> Result<()> {
        self.lincomb_family(terms, k0, true).map(|_| ())
    }

    /// `z = a·b`.
    pub fn mul(&mut self, a: Cell, b: Cell) -> Result<Cell> {
        let zero = self.field().zero();
        let base = self.packed_slot("mul", &[zero; 3], false, |bld, sel, base| {
            bld.gate("mul", col(base + 2) - col(base) * col(base + 1), sel);
        })?;
        self.place(a, base);
        self.place(b, Cell::new(base.col + 1, base.row));
        let z = Cell::new(base.col + 2, base.row);
        let v = self.field().mul(self.value(a), self.value(b));
        self.set(z, v);
        Ok(z)
    }

    pub fn assert_bool(&mut self, x: Cell) -> Result<()> {
        let zero = self.field().zero();
        let base = self.packed_slot("bool", &[zero], false, |b, sel, base| {
            b.gate("bool", col(base) * (Expr::constant(1) - col(base)), sel);
        })?;
        self.place(x, base);
        Ok(())
    }

    /// Constrains the canonical value of `x` to `[0, 2^bits)`.
    pub fn range_check(&mut self, x: Cell, bits: u32) -> Result<()> {
        let zero = self.field().zero();
        let name = format!("range{bits}");
        let table = self.range_table(bits);
        let base = self.packed_slot(&name, &[zero], false, |b, sel, base| {
            b.lookup(&format!("range{bits}"), vec![col(base)], table, sel);
        })?;
        self.place(x, base);
        Ok(())
    }

    fn round_div_slot(&mut self, fresh: bool) -> Result<Cell> {
        let n = self.bits();
        let f = *self.field();
        let wide = self.range_table(2 * n);
        let narrow = self.range_table(n);
        // [a, c, b, r]; pad is the honest row for a = 0, c = 1.
        let pad = [f.zero(), f.one(), f.zero(), f.one()];
        self.packed_slot("round_div", &pad, fresh, |bl, sel, base| {
            let (a, c, b, r) = (col(base), col(base + 1), col(base + 2), col(base + 3));
            bl.gate("round_div", 2 * a.clone() + c.clone() - 2 * c.clone() * b.clone() - r.clone(), sel);
            bl.lookup("round_div.a", vec![a], wide, sel);
            bl.lookup("round_div.c", vec![c.clone()], narrow, sel);
            bl.lookup("round_div.b", vec![b], narrow, sel);
            bl.lookup("round_div.r", vec![r.clone()], wide, sel);
            bl.lookup("round_div.2c-r-1", vec![2 * c - r - Expr::constant(1)], wide, sel);
        })
    }

    fn round_div_values(&self, a: i128, c: i128) -> Result<(i128, i128)> {
        round_div_checked(a, c, self.bits())
    }

    fn fill_round_div(&mut self, base: Cell, a: i128, c: i128) -> Result<(Cell, Cell)> {
        let (b, r) = self.round_div_values(a, c)?;
        let row = base.row;
        self.set_i(Cell::new(base.col + 2, row), b);
        self.set_i(Cell::new(base.col + 3, row), r);
        Ok((Cell::new(base.col + 2, row), Cell::new(base.col + 3, row)))
    }

    /// Unsigned rounded division `b = round(a / c)` (half up) with remainder
    /// `r`, for `0 ≤ a < 2^(2N)` and `1 ≤ c < 2^N`.
    pub fn round_div(&mut self, a: Cell, c: Cell) -> Result<(Cell, Cell)> {
        let (av, cv) = (self.value_i(a), self.value_i(c));
        self.round_div_values(av, cv)?;
        let base = self.round_div_slot(false)?;
        self.place(a, base);
        self.place(c, Cell::new(base.col + 1, base.row));
        self.fill_round_div(base, av, cv)
    }

    /// Rounded division of raw operands in a freshly opened row; the
    /// operands are assigned directly rather than copied in.
    pub fn round_div_raw(&mut self, a: i128, c: i128) -> Result<(Cell, Cell)> {
        self.round_div_values(a, c)?;
        let base = self.round_div_slot(true)?;
        self.set_i(base, a);
        self.set_i(Cell::new(base.col + 1, base.row), c);
        self.fill_round_div(base, a, c)
    }

    /// Signed division by the constant `k`, rounding half away from zero.
    /// Layout `[a, s, m, bm, r, q]`: `s` is the sign bit, `m = |a|`,
    /// `bm = round(m / k)`, and `q = ±bm`.
    pub fn div_const(&mut self, a: Cell, k: i128) -> Result<Cell> {
        let n = self.bits();
        let av = self.value_i(a);
        let [s, m, bm, r, q] = div_const_witness(av, k, n)?;
        let f = *self.field();
        let wide = self.range_table(2 * n);
        let narrow = self.range_table(n);
        let pad = [0, 0, 0, 0, k, 0].map(|v| f.from_i128(v));
        let name = format!("sdiv_{k}");
        let base = self.packed_slot(&name, &pad, false, |b, sel, base| {
            let [a, s, m, bm, r, q] = std::array::from_fn(|i| col(base + i));
            let one = || Expr::constant(1);
            b.gate(&name, s.clone() * (one() - s.clone()), sel);
            b.gate(&name, a - m.clone() + 2 * s.clone() * m.clone(), sel);
            b.gate(&name, 2 * m.clone() + Expr::constant(k) - (2 * k) * bm.clone() - r.clone(), sel);
            b.gate(&name, q - bm.clone() + 2 * s * bm.clone(), sel);
            b.lookup(&name, vec![m], wide, sel);
            b.lookup(&name, vec![bm], narrow, sel);
            b.lookup(&name, vec![r.clone()], wide, sel);
            b.lookup(&name, vec![Expr::constant(2 * k - 1) - r], wide, sel);
        })?;
        self.place(a, base);
        for (i, v) in [s, m, bm, r, q].into_iter().enumerate() {
            self.set_i(Cell::new(base.col + 1 + i, base.row), v);
        }
        Ok(Cell::new(base.col + 5, base.row))
    }

    /// `c = max(a, b)` via `(c − a)(c − b) = 0` and `c − a, c − b ≥ 0`.
    /// Differences are range-checked on `N + 1` bits to admit signed operands.
    pub fn max(&mut self, a: Cell, b: Cell) -> Result<Cell> {
        let bits = self.bits() + 1;
        let (av, bv) = (self.value_i(a), self.value_i(b));
        let cv = max_checked(av, bv, self.bits())?;
        let zero = self.field().zero();
        let table = self.range_table(bits);
        let base = self.packed_slot("max", &[zero; 3], false, |bl, sel, base| {
            let (a, b, c) = (col(base), col(base + 1), col(base + 2));
            bl.gate("max", (c.clone() - a.clone()) * (c.clone() - b.clone()), sel);
            bl.lookup("max.c-a", vec![c.clone() - a], table, sel);
            bl.lookup("max.c-b", vec![c - b], table, sel);
        })?;
        self.place(a, base);
        self.place(b, Cell::new(base.col + 1, base.row));
        let c = Cell::new(base.col + 2, base.row);
        self.set_i(c, cv);
        Ok(c)
    }

    /// Left fold of pairwise [`max`](Self::max).
    pub fn max_vec(&mut self, xs: &[Cell]) -> Result<Cell> {
        let (&first, rest) =
            xs.split_first().ok_or_else(|| AirError::ShapeMismatch("max of an empty vector".into()))?;
        rest.iter().try_fold(first, |acc, &x| self.max(acc, x))
    }

    /// Bit `[a ≤ b]`, enforced by range-checking `b − a` when the bit is set
    /// and `a − b − 1` otherwise.
    pub fn le(&mut self, a: Cell, b: Cell) -> Result<Cell> {
        let bits = self.bits() + 1;
        let (av, bv) = (self.value_i(a), self.value_i(b));
        let bit = le_checked(av, bv, self.bits())?;
        let f = *self.field();
        let table = self.range_table(bits);
        let base = self.packed_slot("le", &[f.zero(), f.zero(), f.one()], false, |bl, sel, base| {
            let (a, b, t) = (col(base), col(base + 1), col(base + 2));
            bl.gate("le", t.clone() * (Expr::constant(1) - t.clone()), sel);
            let d = t.clone() * (b.clone() - a.clone())
                + (Expr::constant(1) - t) * (a - b - Expr::constant(1));
            bl.lookup("le", vec![d], table, sel);
        })?;
        self.place(a, base);
        self.place(b, Cell::new(base.col + 1, base.row));
        let t = Cell::new(base.col + 2, base.row);
        self.set_i(t, i128::from(bit));
        Ok(t)
    }

    /// `y = f(x)` through the nonlinearity's `(x, f(x))` table.
    pub fn nonlin(&mut self, x: Cell, nl: NonLinearity) -> Result<Cell> {
        let sf = self.spec().sf();
        let table = self.function_table(nl);
        let xv = self.value_i(x);
        let yv = nonlin_checked(xv, nl, sf, self.bits())?;
        let f = *self.field();
        let pad = [f.zero(), f.from_i64(nl.eval(0, sf))];
        let name = format!("nl_{}", nl.name());
        let base = self.packed_slot(&name, &pad, false, |b, sel, base| {
            b.lookup(&name, vec![col(base), col(base + 1)], table, sel);
        })?;
        self.place(x, base);
        let y = Cell::new(base.col + 1, base.row);
        self.set_i(y, yv);
        Ok(y)
    }

    /// Max-shifted softmax at scale `SF`: `ê_i = exp(x_i − max)` from the
    /// table (shifted logits below the table floor clamp to it), `s = Σ ê`,
    /// and `y_i = round(SF·ê_i / s)`.
    pub fn softmax(&mut self, xs: &[Cell]) -> Result<SoftmaxCells> {
        let sf = self.spec().sf() as i128;
        let m = self.max_vec(xs)?;
        let floor = self.constant(exp_table_floor(sf as i64) as i128)?;
        let mut exps = Vec::with_capacity(xs.len());
        for &x in xs {
            let d = self.lincomb(&[(1, x), (-1, m)], 0)?;
            let dc = self.max(d, floor)?;
            exps.push(self.nonlin(dc, NonLinearity::Exp)?);
        }
        let sum = self.sum(&exps)?;
        let mut outputs = Vec::with_capacity(xs.len());
        for &e in &exps {
            let num = self.lincomb(&[(sf, e)], 0)?;
            outputs.push(self.round_div(num, sum)?.0);
        }
        Ok(SoftmaxCells { max: m, exps, sum, outputs })
    }

    /// Fused SGD update `w' = w + round(η·g / SF)` with `η` a raw constant.
    /// Layout `[w, g, a, s, m, bm, r, q, w']`, where `a = η·g` and the rest
    /// is a signed division of `a` by `SF`. `w'` is range-checked to `N` bits.
    pub fn sgd_update(&mut self, w: Cell, g: Cell, eta: i128) -> Result<Cell> {
        let n = self.bits();
        let sf = self.spec().sf() as i128;
        let (wv, gv) = (self.value_i(w), self.value_i(g));
        let witness = sgd_witness(wv, gv, eta, sf, n)?;
        let f = *self.field();
        let wide = self.range_table(2 * n);
        let narrow = self.range_table(n);
        let signed = self.range_table(n + 1);
        let pad = [0, 0, 0, 0, 0, 0, sf, 0, 0].map(|v| f.from_i128(v));
        let name = format!("sgd[{eta}]");
        let base = self.packed_slot(&name, &pad, false, |b, sel, base| {
            let [w, g, a, s, m, bm, r, q, w2] = std::array::from_fn(|i| col(base + i));
            let one = || Expr::constant(1);
            b.gate(&name, a.clone() - eta * g, sel);
            b.gate(&name, s.clone() * (one() - s.clone()), sel);
            b.gate(&name, a - m.clone() + 2 * s.clone() * m.clone(), sel);
            b.gate(&name, 2 * m.clone() + Expr::constant(sf) - (2 * sf) * bm.clone() - r.clone(), sel);
            b.gate(&name, q.clone() - bm.clone() + 2 * s * bm.clone(), sel);
            b.gate(&name, w2.clone() - w - q, sel);
            b.lookup(&name, vec![m], wide, sel);
            b.lookup(&name, vec![bm], narrow, sel);
            b.lookup(&name, vec![r.clone()], wide, sel);
            b.lookup(&name, vec![Expr::constant(2 * sf - 1) - r], wide, sel);
            b.lookup(&name, vec![w2 + Expr::constant(1i128 << n)], signed, sel);
        })?;
        self.place(w, base);
        self.place(g, Cell::new(base.col + 1, base.row));
        for (i, v) in witness.into_iter().enumerate() {
            self.set_i(Cell::new(base.col + 2 + i, base.row), v);
        }
        Ok(Cell::new(base.col + 8, base.row))
    }

    /// Reads a cell as a signed value, checking it against `bits`.
    pub fn read_signed(&self, cell: Cell, bits: u32) -> Result<i64> {
        let v = self.value_i(cell);
        self.check_signed(v, bits)?;
        Ok(v as i64)
    }

    pub fn read_fe(&self, cell: Cell) -> Fe {
        self.value(cell)
    }
}

#[derive(Clone, Debug)]
pub struct SoftmaxCells {
    pub max: Cell,
    pub exps: Vec<Cell>,
    pub sum: Cell,
    pub outputs: Vec<Cell>,
}

/// A self-contained gadget instance occupying a fixed number of rows.
pub trait Gadget {
    fn rows(&self) -> usize;
    fn synthesize(&self, b: &mut CircuitBuilder) -> Result<Vec<Cell>>;
}

/// Rounded division of two raw operands; one row per instance.
#[derive(Clone, Copy, Debug)]
pub struct RoundDivGadget {
    pub a: i128,
    pub c: i128,
}

impl Gadget for RoundDivGadget {
    fn rows(&self) -> usize {
        1
    }

    fn synthesize(&self, b: &mut CircuitBuilder) -> Result<Vec<Cell>> {
        let (q, r) = b.round_div_raw(self.a, self.c)?;
        Ok(vec![q, r])
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Layout {
    pub instances: Vec<Range<usize>>,
    pub outputs: Vec<Vec<Cell>>,
}

/// Lays instances out in disjoint row ranges after whatever the builder has
/// already reserved (lookup tables included), sharing selectors and tables.
pub fn pack_instances<G: Gadget>(b: &mut CircuitBuilder, instances: &[G]) -> Result<Layout> {
    let needed: usize = b.rows_used() + instances.iter().map(|g| g.rows()).sum::<usize>();
    if let Some(cap) = b.capacity() {
        if needed > cap {
            return Err(AirError::CapacityExceeded { needed, available: cap });
        }
    }
    let mut layout = Layout { instances: Vec::new(), outputs: Vec::new() };
    for g in instances {
        let start = b.rows_used();
        let out = g.synthesize(b)?;
        let end = b.rows_used();
        debug_assert_eq!(end - start, g.rows());
        layout.instances.push(start..end);
        layout.outputs.push(out);
    }
    Ok(layout)
}
