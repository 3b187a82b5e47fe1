//! The arithmetic vocabulary shared by plain integer execution and witness
//! synthesis. Training code is written once against [`FxpBackend`], so the
//! integer trainer and the constraint grid compute the same values.

use super::NnError;
use crate::air::{self, Cell, CircuitBuilder, NonLinearity};
use crate::fxp::FxpSpec;

pub trait FxpBackend {
    type V: Copy;

    fn spec(&self) -> &FxpSpec;
    /// Current integer value held by `v`.
    fn value(&self, v: Self::V) -> i128;

    /// Unconstrained witness value.
    fn input(&mut self, raw: i128) -> Result<Self::V, NnError>;
    fn constant(&mut self, raw: i128) -> Result<Self::V, NnError>;
    /// `k0 + Σ c_i·x_i`.
    fn lincomb(&mut self, terms: &[(i128, Self::V)], k0: i128) -> Result<Self::V, NnError>;
    /// Exact `bias + Σ x_i·y_i`.
    fn dot(&mut self, xs: &[Self::V], ys: &[Self::V], bias: Option<Self::V>) -> Result<Self::V, NnError>;
    fn sum(&mut self, xs: &[Self::V]) -> Result<Self::V, NnError>;
    fn mul(&mut self, a: Self::V, b: Self::V) -> Result<Self::V, NnError>;
    /// Signed division by a positive constant, rounding half away from zero.
    fn div_const(&mut self, a: Self::V, k: i128) -> Result<Self::V, NnError>;
    /// Unsigned rounded division by a variable divisor.
    fn div_round(&mut self, a: Self::V, c: Self::V) -> Result<Self::V, NnError>;
    fn max(&mut self, a: Self::V, b: Self::V) -> Result<Self::V, NnError>;
    /// `[a ≤ b]` as 0/1.
    fn le(&mut self, a: Self::V, b: Self::V) -> Result<Self::V, NnError>;
    fn nonlin(&mut self, x: Self::V, nl: NonLinearity) -> Result<Self::V, NnError>;
    /// Indicator vector of `index` over `n` entries, constrained boolean
    /// with unit sum.
    fn onehot(&mut self, index: usize, n: usize) -> Result<Vec<Self::V>, NnError>;
    /// `w + round(η·g / SF)`.
    fn sgd_update(&mut self, w: Self::V, g: Self::V, eta: i128) -> Result<Self::V, NnError>;
    /// Constrains `v` to `[0, 2^bits)`.
    fn range_check(&mut self, v: Self::V, bits: u32) -> Result<(), NnError>;

    fn max_vec(&mut self, xs: &[Self::V]) -> Result<Self::V, NnError> {
        let (&first, rest) = xs.split_first().ok_or_else(|| NnError::Shape("max of empty vector".into()))?;
        rest.iter().try_fold(first, |acc, &x| self.max(acc, x))
    }

    /// Max-shifted table softmax at scale `SF` (see the `air` softmax gadget).
    fn softmax(&mut self, xs: &[Self::V]) -> Result<Vec<Self::V>, NnError> {
        let sf = self.spec().sf() as i128;
        let m = self.max_vec(xs)?;
        let floor = self.constant(air::exp_table_floor(sf as i64) as i128)?;
        let mut exps = Vec::with_capacity(xs.len());
        for &x in xs {
            let d = self.lincomb(&[(1, x), (-1, m)], 0)?;
            let dc = self.max(d, floor)?;
            exps.push(self.nonlin(dc, NonLinearity::Exp)?);
        }
        let s = self.sum(&exps)?;
        exps.iter()
            .map(|&e| {
                let num = self.lincomb(&[(sf, e)], 0)?;
                self.div_round(num, s)
            })
            .collect()
    }
}

/// Integer execution with the gadgets' range checks but no grid.
pub struct PlainBackend {
    spec: FxpSpec,
}

impl PlainBackend {
    pub fn new(spec: FxpSpec) -> Self {
        Self { spec }
    }
}

impl FxpBackend for PlainBackend {
    type V = i128;

    fn spec(&self) -> &FxpSpec {
        &self.spec
    }

    fn value(&self, v: i128) -> i128 {
        v
    }

    fn input(&mut self, raw: i128) -> Result<i128, NnError> {
        Ok(raw)
    }

    fn constant(&mut self, raw: i128) -> Result<i128, NnError> {
        Ok(raw)
    }

    fn lincomb(&mut self, terms: &[(i128, i128)], k0: i128) -> Result<i128, NnError> {
        Ok(terms.iter().fold(k0, |acc, (c, x)| acc + c * x))
    }

    fn dot(&mut self, xs: &[i128], ys: &[i128], bias: Option<i128>) -> Result<i128, NnError> {
        if xs.len() != ys.len() {
            return Err(NnError::Shape(format!("dot of lengths {} and {}", xs.len(), ys.len())));
        }
        Ok(xs.iter().zip(ys).fold(bias.unwrap_or(0), |acc, (x, y)| acc + x * y))
    }

    fn sum(&mut self, xs: &[i128]) -> Result<i128, NnError> {
        Ok(xs.iter().sum())
    }

    fn mul(&mut self, a: i128, b: i128) -> Result<i128, NnError> {
        Ok(a * b)
    }

    fn div_const(&mut self, a: i128, k: i128) -> Result<i128, NnError> {
        Ok(air::div_const_witness(a, k, self.spec.range_bits)?[4])
    }

    fn div_round(&mut self, a: i128, c: i128) -> Result<i128, NnError> {
        Ok(air::round_div_checked(a, c, self.spec.range_bits)?.0)
    }

    fn max(&mut self, a: i128, b: i128) -> Result<i128, NnError> {
        Ok(air::max_checked(a, b, self.spec.range_bits)?)
    }

    fn le(&mut self, a: i128, b: i128) -> Result<i128, NnError> {
        Ok(i128::from(air::le_checked(a, b, self.spec.range_bits)?))
    }

    fn nonlin(&mut self, x: i128, nl: NonLinearity) -> Result<i128, NnError> {
        Ok(air::nonlin_checked(x, nl, self.spec.sf(), self.spec.range_bits)?)
    }

    fn onehot(&mut self, index: usize, n: usize) -> Result<Vec<i128>, NnError> {
        if index >= n {
            return Err(NnError::Data(format!("index {index} outside vocabulary of {n}")));
        }
        Ok((0..n).map(|i| i128::from(i == index)).collect())
    }

    fn sgd_update(&mut self, w: i128, g: i128, eta: i128) -> Result<i128, NnError> {
        Ok(air::sgd_witness(w, g, eta, self.spec.sf() as i128, self.spec.range_bits)?[6])
    }

    fn range_check(&mut self, v: i128, bits: u32) -> Result<(), NnError> {
        if v < 0 || (bits < 127 && v >> bits != 0) {
            return Err(air::AirError::RangeOverflow { value: v, bits }.into());
        }
        Ok(())
    }
}

/// Synthesizes a constraint grid while computing.
pub struct CircuitBackend {
    pub builder: CircuitBuilder,
}

impl CircuitBackend {
    pub fn new(spec: FxpSpec, cols: usize) -> Result<Self, NnError> {
        Ok(Self { builder: CircuitBuilder::new(spec, cols)? })
    }
}

impl FxpBackend for CircuitBackend {
    type V = Cell;

    fn spec(&self) -> &FxpSpec {
        self.builder.spec()
    }

    fn value(&self, v: Cell) -> i128 {
        self.builder.value_i(v)
    }

    fn input(&mut self, raw: i128) -> Result<Cell, NnError> {
        Ok(self.builder.input_i(raw)?)
    }

    fn constant(&mut self, raw: i128) -> Result<Cell, NnError> {
        Ok(self.builder.constant(raw)?)
    }

    fn lincomb(&mut self, terms: &[(i128, Cell)], k0: i128) -> Result<Cell, NnError> {
        Ok(self.builder.lincomb(terms, k0)?)
    }

    fn dot(&mut self, xs: &[Cell], ys: &[Cell], bias: Option<Cell>) -> Result<Cell, NnError> {
        Ok(self.builder.dot(xs, ys, bias)?)
    }

    fn sum(&mut self, xs: &[Cell]) -> Result<Cell, NnError> {
        Ok(self.builder.sum(xs)?)
    }

    fn mul(&mut self, a: Cell, b: Cell) -> Result<Cell, NnError> {
        Ok(self.builder.mul(a, b)?)
    }

    fn div_const(&mut self, a: Cell, k: i128) -> Result<Cell, NnError> {
        Ok(self.builder.div_const(a, k)?)
    }

    fn div_round(&mut self, a: Cell, c: Cell) -> Result<Cell, NnError> {
        Ok(self.builder.round_div(a, c)?.0)
    }

    fn max(&mut self, a: Cell, b: Cell) -> Result<Cell, NnError> {
        Ok(self.builder.max(a, b)?)
    }

    fn le(&mut self, a: Cell, b: Cell) -> Result<Cell, NnError> {
        Ok(self.builder.le(a, b)?)
    }

    fn nonlin(&mut self, x: Cell, nl: NonLinearity) -> Result<Cell, NnError> {
        Ok(self.builder.nonlin(x, nl)?)
    }

    fn onehot(&mut self, index: usize, n: usize) -> Result<Vec<Cell>, NnError> {
        if index >= n {
            return Err(NnError::Data(format!("index {index} outside vocabulary of {n}")));
        }
        let cells = (0..n)
            .map(|i| self.builder.input_i(i128::from(i == index)))
            .collect::<Result<Vec<_>, _>>()?;
        for &c in &cells {
            self.builder.assert_bool(c)?;
        }
        let s = self.builder.sum(&cells)?;
        self.builder.assert_zero(&[(1, s)], -1)?;
        Ok(cells)
    }

    fn sgd_update(&mut self, w: Cell, g: Cell, eta: i128) -> Result<Cell, NnError> {
        Ok(self.builder.sgd_update(w, g, eta)?)
    }

    fn range_check(&mut self, v: Cell, bits: u32) -> Result<(), NnError> {
        PlainBackend::new(*self.spec()).range_check(self.value(v), bits)?;
        Ok(self.builder.range_check(v, bits)?)
    }
}
