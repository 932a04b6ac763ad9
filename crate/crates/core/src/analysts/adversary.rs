//! Adversarial analysts that store the whole transcript in their state.
//!
//! Each construction needs unbounded precision in principle; here every one
//! carries an explicit budget and fails loudly when it is exceeded.
//!
//! * [`BijectionAdversary`]: sees only the last query/answer pair, but every
//!   query carries the previous transcript as a reserved payload.
//! * [`InterleavingAdversary`]: `h_t = s · c(h_{t−1}, a_t)` where `c`
//!   interlaces decimal digits and `s = min{λ, L}`; exact decimal arithmetic.
//! * [`StackingAdversary`]: writes `L·a_t` into block `t` of a growing state.

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::query::{Component, Query};

fn pow10(k: u32) -> BigUint {
    BigUint::from(10u32).pow(k)
}

/// Decimal digits of `n`, zero-padded on the left to exactly `width`.
fn digits_of(n: &BigUint, width: u32) -> Result<Vec<u8>> {
    let s = n.to_str_radix(10);
    let s = if *n == BigUint::ZERO { String::new() } else { s };
    if s.len() > width as usize {
        return Err(Error::PrecisionExhausted(format!("{} digits do not fit in {width}", s.len())));
    }
    let mut out = vec![0u8; width as usize - s.len()];
    out.extend(s.bytes().map(|b| b - b'0'));
    Ok(out)
}

fn from_digits(d: &[u8]) -> BigUint {
    let mut n = BigUint::ZERO;
    for &x in d {
        n = n * 10u32 + x as u32;
    }
    n
}

/// Integer `A` with `A / 10^digits` the value `x ∈ [0,1)` rounded to
/// `digits` places; values that round up to 1 are rejected.
fn to_fixed(x: f64, digits: u32) -> Result<u64> {
    if !(0.0..1.0).contains(&x) {
        return Err(invalid(format!("interleaving needs values in [0,1), got {x}")));
    }
    if digits > 15 {
        return Err(Error::PrecisionExhausted(format!("{digits} decimal digits exceed f64 precision")));
    }
    let scale = 10u64.pow(digits);
    let a = (x * scale as f64).round() as u64;
    if a >= scale {
        return Err(invalid(format!("{x} rounds to 1 at {digits} digits")));
    }
    Ok(a)
}

/// `0.a¹h¹a²h²…` truncated at `2·digits` places, for `a, h ∈ [0,1)` read to
/// `digits` decimal places.
pub fn interleave(a: f64, h: f64, digits: u32) -> Result<f64> {
    if 2 * digits > 15 {
        return Err(Error::PrecisionExhausted(format!(
            "interleaving {digits} digits needs {} exact decimal places",
            2 * digits
        )));
    }
    let (ad, hd) = (
        digits_of(&BigUint::from(to_fixed(a, digits)?), digits)?,
        digits_of(&BigUint::from(to_fixed(h, digits)?), digits)?,
    );
    let mut c = 0u64;
    for i in 0..digits as usize {
        c = c * 100 + ad[i] as u64 * 10 + hd[i] as u64;
    }
    Ok(c as f64 / 10f64.powi(2 * digits as i32))
}

/// Inverse of [`interleave`] at the same digit budget.
pub fn de_interleave(c: f64, digits: u32) -> Result<(f64, f64)> {
    let cd = digits_of(&BigUint::from(to_fixed(c, 2 * digits)?), 2 * digits)?;
    let (mut a, mut h) = (0u64, 0u64);
    for pair in cd.chunks_exact(2) {
        a = a * 10 + pair[0] as u64;
        h = h * 10 + pair[1] as u64;
    }
    let scale = 10f64.powi(digits as i32);
    Ok((a as f64 / scale, h as f64 / scale))
}

/// Exact decimal `num / 10^places`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decimal {
    pub num: BigUint,
    pub places: u32,
}

impl Decimal {
    pub fn zero() -> Self {
        Self { num: BigUint::ZERO, places: 0 }
    }

    pub fn to_f64(&self) -> f64 {
        // keep the leading 17 digits, which is all an f64 can hold
        let digits = self.num.to_str_radix(10);
        let keep = digits.len().min(17);
        let lead: f64 = if self.num == BigUint::ZERO { 0.0 } else { digits[..keep].parse().unwrap_or(0.0) };
        let exp = digits.len() as i32 - keep as i32 - self.places as i32;
        lead * 10f64.powi(exp)
    }
}

/// Where the interleaving adversary keeps its state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversarySpace {
    /// Exact decimals of unbounded length (up to the digit budget).
    Continuous,
    /// States rounded to `places` decimal places after every step.
    DecimalGrid { places: u32 },
}

/// `h_t = s · c(h_{t−1}, a_t)` with `s = min{λ, L} = scale_num / 10^scale_places`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterleavingAdversary {
    pub answer_digits: u32,
    pub scale_num: u32,
    pub scale_places: u32,
    pub space: AdversarySpace,
    pub max_state_digits: u32,
    /// Number of answers absorbed.
    pub t: usize,
    pub state: Decimal,
    /// Places of the state before each step, needed to split digits.
    history_places: Vec<u32>,
}

impl InterleavingAdversary {
    /// `scale` must be a decimal with at most 6 places in `(0, 1]`.
    pub fn new(lambda: f64, l: f64, answer_digits: u32, space: AdversarySpace) -> Result<Self> {
        let s = lambda.min(l);
        if !(s > 0.0 && s <= 1.0) {
            return Err(invalid(format!("min(lambda, L) must lie in (0,1], got {s}")));
        }
        let mut places = 0;
        while places <= 6 && ((s * 10f64.powi(places as i32)).round() - s * 10f64.powi(places as i32)).abs() > 1e-9 {
            places += 1;
        }
        if places > 6 {
            return Err(invalid(format!("scale {s} is not a short decimal")));
        }
        if answer_digits == 0 {
            return Err(invalid("answer digit budget must be >= 1"));
        }
        let scale_num = (s * 10f64.powi(places as i32)).round() as u32;
        Ok(Self {
            answer_digits,
            scale_num,
            scale_places: places,
            space,
            max_state_digits: 1 << 20,
            t: 0,
            state: Decimal::zero(),
            history_places: Vec::new(),
        })
    }

    pub fn scale(&self) -> f64 {
        self.scale_num as f64 / 10f64.powi(self.scale_places as i32)
    }

    /// The answer as the adversary records it: `digits` decimal places.
    pub fn recorded(&self, a: f64) -> Result<f64> {
        let a = a.clamp(0.0, 1.0 - 10f64.powi(-(self.answer_digits as i32)));
        Ok(to_fixed(a, self.answer_digits)? as f64 / 10f64.powi(self.answer_digits as i32))
    }

    pub fn step(&mut self, a: f64) -> Result<()> {
        let a = self.recorded(a)?;
        let p = self.answer_digits;
        let hp = self.state.places;
        let w = p.max(hp);
        if 2 * w + self.scale_places > self.max_state_digits {
            return Err(Error::PrecisionExhausted(format!(
                "state would need {} digits (budget {})",
                2 * w + self.scale_places,
                self.max_state_digits
            )));
        }
        let ad = digits_of(&BigUint::from(to_fixed(a, p)?), p)?;
        // h = num / 10^hp, padded to w places
        let hnum = &self.state.num * pow10(w - hp);
        let hd = digits_of(&hnum, w)?;
        let mut cd = Vec::with_capacity(2 * w as usize);
        for i in 0..w as usize {
            cd.push(if i < p as usize { ad[i] } else { 0 });
            cd.push(hd[i]);
        }
        let c = from_digits(&cd);
        let mut next = Decimal { num: c * self.scale_num, places: 2 * w + self.scale_places };
        if let AdversarySpace::DecimalGrid { places } = self.space {
            if next.places > places {
                let div = pow10(next.places - places);
                let half = &div / 2u32;
                next = Decimal { num: (next.num + half) / div, places };
            }
        }
        self.history_places.push(hp);
        self.state = next;
        self.t += 1;
        Ok(())
    }

    /// Reads every recorded answer back out of the current state, newest last.
    pub fn decode_transcript(&self) -> Result<Vec<f64>> {
        let p = self.answer_digits;
        let mut out = Vec::with_capacity(self.t);
        let mut h = self.state.clone();
        for step in (0..self.t).rev() {
            let hp = self.history_places[step];
            let w = p.max(hp);
            let cplaces = 2 * w;
            // c = h / s, aligned to 2w places
            let target = cplaces + self.scale_places;
            let num =
                if h.places <= target { &h.num * pow10(target - h.places) } else { &h.num / pow10(h.places - target) };
            let c = num / self.scale_num;
            let cd = match digits_of(&c, cplaces) {
                Ok(d) => d,
                Err(_) => return Err(Error::PrecisionExhausted(format!("state inconsistent at step {}", step + 1))),
            };
            let ad: Vec<u8> = cd.iter().step_by(2).take(p as usize).copied().collect();
            let hd: Vec<u8> = cd.iter().skip(1).step_by(2).copied().collect();
            out.push(from_digits(&ad).to_string().parse::<f64>().unwrap() / 10f64.powi(p as i32));
            let hnum = from_digits(&hd);
            // drop the padding back to hp places
            let hnum = if w > hp { hnum / pow10(w - hp) } else { hnum };
            h = Decimal { num: hnum, places: hp };
        }
        out.reverse();
        Ok(out)
    }

    /// Adaptive next query: a threshold at the last recorded answer.
    pub fn next_query(&self, last: Option<f64>) -> Query {
        let theta = last.unwrap_or(0.5).clamp(0.05, 0.95);
        Query::new(vec![Component::ClampedAffine { coord: 0, offset: 0.5 * (1.0 - theta), slope: 0.5 }])
    }
}

/// Window-one attacker: the state is a function of the last query and the
/// last answer only, yet every query carries the previous transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BijectionAdversary {
    pub bits: u32,
    pub budget_bits: u32,
    /// Payload of the last issued query (sentinel 1 followed by codes).
    pub payload: BigUint,
    pub t: usize,
}

impl BijectionAdversary {
    pub fn new(bits: u32, budget_bits: u32) -> Result<Self> {
        if bits == 0 || bits > 52 {
            return Err(invalid(format!("answer precision must be 1..=52 bits, got {bits}")));
        }
        Ok(Self { bits, budget_bits, payload: BigUint::from(1u32), t: 0 })
    }

    /// Fixed-point code of an answer in [0,1].
    pub fn code(&self, a: f64) -> u64 {
        let max = (1u64 << self.bits) - 1;
        (a.clamp(0.0, 1.0) * max as f64).round() as u64
    }

    /// Next query: carries the current payload as a reserved value.
    pub fn query(&self) -> Query {
        let last = (&self.payload % (BigUint::from(1u32) << self.bits)).to_u64_digits().first().copied().unwrap_or(0);
        let theta = last as f64 / ((1u64 << self.bits) - 1) as f64;
        Query::new(vec![Component::Reserved {
            payload: self.payload.to_str_radix(16),
            inner: Box::new(Component::Threshold { coord: 0, theta: theta.clamp(0.1, 0.9) }),
        }])
    }

    /// Absorbs `(q, a)`: the new state depends only on this pair.
    pub fn step(&mut self, q: &Query, a: f64) -> Result<()> {
        let payload = match q.components().first() {
            Some(Component::Reserved { payload, .. }) => {
                BigUint::parse_bytes(payload.as_bytes(), 16).ok_or_else(|| invalid("malformed reserved payload"))?
            }
            _ => return Err(invalid("query carries no reserved payload")),
        };
        let used = (self.t as u64 + 1) * self.bits as u64;
        if used > self.budget_bits as u64 {
            return Err(Error::PrecisionExhausted(format!(
                "{used} payload bits exceed the {}-bit budget",
                self.budget_bits
            )));
        }
        self.payload = (payload << self.bits) | BigUint::from(self.code(a));
        self.t += 1;
        Ok(())
    }

    /// All answer codes, oldest first, from the window-one view.
    pub fn decode_transcript(&self) -> Vec<u64> {
        let mut codes = Vec::with_capacity(self.t);
        let mut p = self.payload.clone();
        let mask = (BigUint::from(1u32) << self.bits) - BigUint::from(1u32);
        for _ in 0..self.t {
            codes.push((&p & &mask).to_u64_digits().first().copied().unwrap_or(0));
            p >>= self.bits;
        }
        codes.reverse();
        codes
    }
}

/// Writes `L·a_t` into coordinates `(t−1)d_q .. t·d_q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackingAdversary {
    pub l: f64,
    pub d_q: usize,
    pub t_max: usize,
    pub state: Vec<f64>,
}

impl StackingAdversary {
    /// `l` must be a power of two so that `L·a / L` is exact.
    pub fn new(l: f64, d_q: usize, t_max: usize) -> Result<Self> {
        if !(l > 0.0) || l.log2().fract() != 0.0 {
            return Err(invalid(format!("stacking scale must be a power of two, got {l}")));
        }
        Ok(Self { l, d_q, t_max, state: Vec::new() })
    }

    pub fn step(&mut self, a: &[f64]) -> Result<()> {
        if a.len() != self.d_q {
            return Err(Error::DimensionMismatch { expected: self.d_q, actual: a.len() });
        }
        if self.state.len() + self.d_q > self.t_max * self.d_q {
            return Err(Error::PrecisionExhausted(format!("state capped at {} rounds", self.t_max)));
        }
        self.state.extend(a.iter().map(|x| self.l * x));
        Ok(())
    }

    pub fn decode_transcript(&self) -> Vec<Vec<f64>> {
        self.state.chunks(self.d_q).map(|b| b.iter().map(|x| x / self.l).collect()).collect()
    }
}
