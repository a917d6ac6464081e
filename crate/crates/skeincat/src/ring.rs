//! Multivariate Laurent polynomials with integer or Gaussian-integer
//! coefficients.
//!
//! A polynomial is stored as a map from exponent vectors (one slot per ring
//! variable, in declaration order) to nonzero coefficients. The map is a
//! `BTreeMap`, so iteration order is lexicographic on the exponent vector and
//! every polynomial has exactly one representation. Equality, hashing, JSON
//! output and text output all inherit that canonical order.
//!
//! Deliberately out of scope: factorization, gcds, rational functions. The
//! only division offered is `div_exact`, which fails loudly when the quotient
//! does not exist in the Laurent ring.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RingError {
    #[error("ring mismatch: {0} vs {1}")]
    Mismatch(String, String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("substitution image for `{0}` must be an invertible monomial (it occurs with a negative exponent)")]
    NonInvertibleSubstitution(String),
    #[error("imaginary coefficients are not allowed in an integer-coefficient ring")]
    ImaginaryInIntegerRing,
    #[error("division is not exact")]
    InexactDivision,
    #[error("division by zero")]
    DivisionByZero,
    #[error("cannot raise a non-monomial to a negative power")]
    NonInvertiblePower,
    #[error("bad polynomial literal `{0}`: {1}")]
    BadLiteral(String, String),
    #[error("bad polynomial json: {0}")]
    BadJson(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientKind {
    Integer,
    GaussianInteger,
}

/// Names the variables (order matters: exponent vectors index into this list)
/// and fixes the coefficient domain.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RingDescriptor {
    pub variables: Vec<String>,
    pub coefficient_kind: CoefficientKind,
}

impl RingDescriptor {
    pub fn integer(vars: &[&str]) -> Self {
        RingDescriptor {
            variables: vars.iter().map(|s| s.to_string()).collect(),
            coefficient_kind: CoefficientKind::Integer,
        }
    }

    pub fn gaussian(vars: &[&str]) -> Self {
        RingDescriptor {
            variables: vars.iter().map(|s| s.to_string()).collect(),
            coefficient_kind: CoefficientKind::GaussianInteger,
        }
    }

    pub fn var_index(&self, name: &str) -> Result<usize, RingError> {
        self.variables
            .iter()
            .position(|v| v == name)
            .ok_or_else(|| RingError::UnknownVariable(name.to_string()))
    }

    pub fn arity(&self) -> usize {
        self.variables.len()
    }

    fn short(&self) -> String {
        format!(
            "{:?}[{}]",
            self.coefficient_kind,
            self.variables.join(",")
        )
    }
}

/// A Gaussian integer `re + im*i`. Integer-coefficient rings simply keep
/// `im = 0`; arithmetic is uniform.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coefficient {
    pub re: BigInt,
    pub im: BigInt,
}

impl Coefficient {
    pub fn zero() -> Self {
        Coefficient { re: BigInt::zero(), im: BigInt::zero() }
    }

    pub fn one() -> Self {
        Coefficient { re: BigInt::one(), im: BigInt::zero() }
    }

    pub fn i() -> Self {
        Coefficient { re: BigInt::zero(), im: BigInt::one() }
    }

    pub fn from_i64(n: i64) -> Self {
        Coefficient { re: BigInt::from(n), im: BigInt::zero() }
    }

    pub fn gauss(re: i64, im: i64) -> Self {
        Coefficient { re: BigInt::from(re), im: BigInt::from(im) }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn add(&self, other: &Coefficient) -> Coefficient {
        Coefficient { re: &self.re + &other.re, im: &self.im + &other.im }
    }

    pub fn sub(&self, other: &Coefficient) -> Coefficient {
        Coefficient { re: &self.re - &other.re, im: &self.im - &other.im }
    }

    pub fn neg(&self) -> Coefficient {
        Coefficient { re: -&self.re, im: -&self.im }
    }

    pub fn mul(&self, other: &Coefficient) -> Coefficient {
        Coefficient {
            re: &self.re * &other.re - &self.im * &other.im,
            im: &self.re * &other.im + &self.im * &other.re,
        }
    }

    pub fn conj(&self) -> Coefficient {
        Coefficient { re: self.re.clone(), im: -&self.im }
    }

    /// A unit of Z[i] is one of 1, -1, i, -i.
    pub fn is_unit(&self) -> bool {
        let norm = &self.re * &self.re + &self.im * &self.im;
        norm.is_one()
    }

    /// Exact division in Z[i]; `None` when `other` does not divide `self`.
    pub fn div_exact(&self, other: &Coefficient) -> Option<Coefficient> {
        if other.is_zero() {
            return None;
        }
        // self / other = self * conj(other) / norm(other), both parts must be
        // divisible by the norm.
        let norm = &other.re * &other.re + &other.im * &other.im;
        let num = self.mul(&other.conj());
        let (qre, rre) = num_integer_div_rem(&num.re, &norm);
        let (qim, rim) = num_integer_div_rem(&num.im, &norm);
        if rre.is_zero() && rim.is_zero() {
            Some(Coefficient { re: qre, im: qim })
        } else {
            None
        }
    }
}

fn num_integer_div_rem(a: &BigInt, b: &BigInt) -> (BigInt, BigInt) {
    let q = a / b;
    let r = a - &q * b;
    (q, r)
}

impl fmt::Display for Coefficient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_zero() {
            write!(f, "{}", self.re)
        } else if self.re.is_zero() {
            if self.im.is_one() {
                write!(f, "i")
            } else if (-&self.im).is_one() {
                write!(f, "-i")
            } else {
                write!(f, "{}i", self.im)
            }
        } else {
            let (sign, mag) = if self.im.is_negative() {
                ("-", -&self.im)
            } else {
                ("+", self.im.clone())
            };
            if mag.is_one() {
                write!(f, "({}{}i)", self.re, sign)
            } else {
                write!(f, "({}{}{}i)", self.re, sign, mag)
            }
        }
    }
}

/// A Laurent polynomial in canonical form: no zero coefficients, exponent
/// vectors keyed lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LaurentPoly {
    ring: RingDescriptor,
    terms: BTreeMap<Vec<i64>, Coefficient>,
}

impl LaurentPoly {
    pub fn zero(ring: &RingDescriptor) -> Self {
        LaurentPoly { ring: ring.clone(), terms: BTreeMap::new() }
    }

    pub fn one(ring: &RingDescriptor) -> Self {
        Self::constant(ring, Coefficient::one())
    }

    pub fn constant(ring: &RingDescriptor, c: Coefficient) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(vec![0; ring.arity()], c);
        }
        LaurentPoly { ring: ring.clone(), terms }
    }

    pub fn int(ring: &RingDescriptor, n: i64) -> Self {
        Self::constant(ring, Coefficient::from_i64(n))
    }

    /// The monomial `c * x^exp`. Panics if the exponent vector length is
    /// wrong; that is a programming error, not an input error.
    pub fn monomial(ring: &RingDescriptor, exp: Vec<i64>, c: Coefficient) -> Self {
        assert_eq!(exp.len(), ring.arity(), "exponent vector has wrong arity");
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exp, c);
        }
        LaurentPoly { ring: ring.clone(), terms }
    }

    /// The variable `name` raised to `power`.
    pub fn var_pow(ring: &RingDescriptor, name: &str, power: i64) -> Result<Self, RingError> {
        let idx = ring.var_index(name)?;
        let mut exp = vec![0i64; ring.arity()];
        exp[idx] = power;
        Ok(Self::monomial(ring, exp, Coefficient::one()))
    }

    pub fn var(ring: &RingDescriptor, name: &str) -> Result<Self, RingError> {
        Self::var_pow(ring, name, 1)
    }

    pub fn ring(&self) -> &RingDescriptor {
        &self.ring
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i64>, &Coefficient)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .iter()
                .all(|(e, c)| e.iter().all(|&x| x == 0) && *c == Coefficient::one())
    }

    /// The coefficient of a given exponent vector (zero if absent).
    pub fn coeff(&self, exp: &[i64]) -> Coefficient {
        self.terms.get(exp).cloned().unwrap_or_else(Coefficient::zero)
    }

    /// If the polynomial is a constant, return it.
    pub fn as_constant(&self) -> Option<Coefficient> {
        if self.terms.is_empty() {
            return Some(Coefficient::zero());
        }
        if self.terms.len() == 1 {
            let (e, c) = self.terms.iter().next().unwrap();
            if e.iter().all(|&x| x == 0) {
                return Some(c.clone());
            }
        }
        None
    }

    /// If the polynomial is a single term, return it.
    pub fn as_monomial(&self) -> Option<(Vec<i64>, Coefficient)> {
        if self.terms.len() == 1 {
            let (e, c) = self.terms.iter().next().unwrap();
            Some((e.clone(), c.clone()))
        } else {
            None
        }
    }

    fn check_same_ring(&self, other: &LaurentPoly) -> Result<(), RingError> {
        if self.ring != other.ring {
            return Err(RingError::Mismatch(self.ring.short(), other.ring.short()));
        }
        Ok(())
    }

    fn check_coeff(&self, c: &Coefficient) -> Result<(), RingError> {
        if self.ring.coefficient_kind == CoefficientKind::Integer && !c.is_real() {
            return Err(RingError::ImaginaryInIntegerRing);
        }
        Ok(())
    }

    fn insert_term(&mut self, exp: Vec<i64>, c: Coefficient) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(exp) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get().add(&c);
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &LaurentPoly) -> Result<LaurentPoly, RingError> {
        self.check_same_ring(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &LaurentPoly) -> Result<LaurentPoly, RingError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> LaurentPoly {
        LaurentPoly {
            ring: self.ring.clone(),
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.neg())).collect(),
        }
    }

    pub fn mul(&self, other: &LaurentPoly) -> Result<LaurentPoly, RingError> {
        self.check_same_ring(other)?;
        let mut out = LaurentPoly::zero(&self.ring);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<i64> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.insert_term(e, c1.mul(c2));
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &Coefficient) -> Result<LaurentPoly, RingError> {
        self.check_coeff(c)?;
        let mut out = LaurentPoly::zero(&self.ring);
        for (e, c0) in &self.terms {
            out.insert_term(e.clone(), c0.mul(c));
        }
        Ok(out)
    }

    /// Multiply by the monomial `x^exp`.
    pub fn shift(&self, exp: &[i64]) -> LaurentPoly {
        assert_eq!(exp.len(), self.ring.arity());
        LaurentPoly {
            ring: self.ring.clone(),
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.iter().zip(exp).map(|(a, b)| a + b).collect(), c.clone()))
                .collect(),
        }
    }

    /// Integer power. Negative powers require an invertible monomial base.
    pub fn pow(&self, n: i64) -> Result<LaurentPoly, RingError> {
        if n >= 0 {
            let mut out = LaurentPoly::one(&self.ring);
            for _ in 0..n {
                out = out.mul(self)?;
            }
            Ok(out)
        } else {
            let inv = self.monomial_inverse()?;
            inv.pow(-n)
        }
    }

    /// The inverse of an invertible monomial (unit coefficient).
    pub fn monomial_inverse(&self) -> Result<LaurentPoly, RingError> {
        let (e, c) = self.as_monomial().ok_or(RingError::NonInvertiblePower)?;
        if !c.is_unit() {
            return Err(RingError::NonInvertiblePower);
        }
        // unit inverse in Z[i] is the conjugate
        let cinv = c.conj();
        Ok(LaurentPoly::monomial(
            &self.ring,
            e.iter().map(|x| -x).collect(),
            cinv,
        ))
    }

    /// Substitute ring variables by polynomials. Unmapped variables must
    /// exist in the target ring and map to themselves. When the map is empty
    /// the polynomial is returned unchanged. Variables that appear with a
    /// negative exponent must be sent to invertible monomials.
    pub fn subst(
        &self,
        assignments: &BTreeMap<String, LaurentPoly>,
    ) -> Result<LaurentPoly, RingError> {
        if assignments.is_empty() {
            return Ok(self.clone());
        }
        let target = assignments.values().next().unwrap().ring.clone();
        for img in assignments.values() {
            if img.ring != target {
                return Err(RingError::Mismatch(img.ring.short(), target.short()));
            }
        }
        // Build, per source variable, either an image polynomial or a
        // variable of the target ring.
        let mut images: Vec<LaurentPoly> = Vec::with_capacity(self.ring.arity());
        for v in &self.ring.variables {
            match assignments.get(v) {
                Some(p) => images.push(p.clone()),
                None => images.push(LaurentPoly::var(&target, v)?),
            }
        }
        // Negative-exponent variables need invertible monomial images.
        let mut needs_inverse = vec![false; self.ring.arity()];
        for e in self.terms.keys() {
            for (i, &x) in e.iter().enumerate() {
                if x < 0 {
                    needs_inverse[i] = true;
                }
            }
        }
        let mut inverses: Vec<Option<LaurentPoly>> = vec![None; self.ring.arity()];
        for i in 0..self.ring.arity() {
            if needs_inverse[i] {
                let inv = images[i]
                    .monomial_inverse()
                    .map_err(|_| RingError::NonInvertibleSubstitution(self.ring.variables[i].clone()))?;
                inverses[i] = Some(inv);
            }
        }
        let mut out = LaurentPoly::zero(&target);
        for (e, c) in &self.terms {
            let mut term = LaurentPoly::constant(&target, c.clone());
            if target.coefficient_kind == CoefficientKind::Integer && !c.is_real() {
                return Err(RingError::ImaginaryInIntegerRing);
            }
            for (i, &x) in e.iter().enumerate() {
                if x > 0 {
                    term = term.mul(&images[i].pow(x)?)?;
                } else if x < 0 {
                    term = term.mul(&inverses[i].as_ref().unwrap().pow(-x)?)?;
                }
            }
            out = out.add(&term)?;
        }
        Ok(out)
    }

    /// Re-express the polynomial in a larger ring: every variable of the
    /// current ring must exist in `target`, and the coefficient kind may only
    /// widen (integer into gaussian).
    pub fn promote(&self, target: &RingDescriptor) -> Result<LaurentPoly, RingError> {
        if target.coefficient_kind == CoefficientKind::Integer
            && self.ring.coefficient_kind == CoefficientKind::GaussianInteger
        {
            return Err(RingError::ImaginaryInIntegerRing);
        }
        let mut positions = Vec::with_capacity(self.ring.arity());
        for v in &self.ring.variables {
            positions.push(target.var_index(v)?);
        }
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            let mut ne = vec![0i64; target.arity()];
            for (i, &x) in e.iter().enumerate() {
                ne[positions[i]] += x;
            }
            terms.insert(ne, c.clone());
        }
        Ok(LaurentPoly { ring: target.clone(), terms })
    }

    /// Exact division. Errors when the quotient is not a Laurent polynomial
    /// over the coefficient ring.
    pub fn div_exact(&self, divisor: &LaurentPoly) -> Result<LaurentPoly, RingError> {
        self.check_same_ring(divisor)?;
        if divisor.is_zero() {
            return Err(RingError::DivisionByZero);
        }
        if self.is_zero() {
            return Ok(LaurentPoly::zero(&self.ring));
        }
        // Lex-leading elimination. For an exact Laurent division the lex-min
        // exponents satisfy min(self) = min(q) + min(divisor), which bounds
        // every quotient exponent from below and guarantees termination.
        let (dlead_exp, dlead_c) = divisor.terms.iter().next_back().unwrap();
        let dmin = divisor.terms.keys().next().unwrap().clone();
        let smin = self.terms.keys().next().unwrap().clone();
        let qmin: Vec<i64> = smin.iter().zip(&dmin).map(|(a, b)| a - b).collect();
        let mut rem = self.clone();
        let mut quot = LaurentPoly::zero(&self.ring);
        while !rem.is_zero() {
            let (rlead_exp, rlead_c) = {
                let (e, c) = rem.terms.iter().next_back().unwrap();
                (e.clone(), c.clone())
            };
            let qexp: Vec<i64> = rlead_exp.iter().zip(dlead_exp).map(|(a, b)| a - b).collect();
            if qexp < qmin {
                return Err(RingError::InexactDivision);
            }
            let qc = rlead_c.div_exact(dlead_c).ok_or(RingError::InexactDivision)?;
            let qterm = LaurentPoly::monomial(&self.ring, qexp, qc);
            rem = rem.sub(&qterm.mul(divisor)?)?;
            quot = quot.add(&qterm)?;
        }
        Ok(quot)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let terms: Vec<serde_json::Value> = self
            .terms
            .iter()
            .map(|(e, c)| {
                let coeff = match self.ring.coefficient_kind {
                    CoefficientKind::Integer => bigint_to_json(&c.re),
                    CoefficientKind::GaussianInteger => serde_json::Value::Array(vec![
                        bigint_to_json(&c.re),
                        bigint_to_json(&c.im),
                    ]),
                };
                serde_json::json!({ "exp": e, "coeff": coeff })
            })
            .collect();
        serde_json::json!({ "vars": self.ring.variables, "terms": terms })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<LaurentPoly, RingError> {
        let obj = value
            .as_object()
            .ok_or_else(|| RingError::BadJson("expected an object".into()))?;
        let vars = obj
            .get("vars")
            .and_then(|v| v.as_array())
            .ok_or_else(|| RingError::BadJson("missing `vars` array".into()))?;
        let variables: Vec<String> = vars
            .iter()
            .map(|v| {
                v.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| RingError::BadJson("variable names must be strings".into()))
            })
            .collect::<Result<_, _>>()?;
        let raw_terms = obj
            .get("terms")
            .and_then(|v| v.as_array())
            .ok_or_else(|| RingError::BadJson("missing `terms` array".into()))?;
        // Gaussian rings always serialize coefficients as [re, im] pairs, so
        // the kind is recoverable from the shape.
        let gaussian = raw_terms
            .iter()
            .any(|t| t.get("coeff").map(|c| c.is_array()).unwrap_or(false));
        let ring = RingDescriptor {
            variables,
            coefficient_kind: if gaussian {
                CoefficientKind::GaussianInteger
            } else {
                CoefficientKind::Integer
            },
        };
        let mut poly = LaurentPoly::zero(&ring);
        for t in raw_terms {
            let exp = t
                .get("exp")
                .and_then(|e| e.as_array())
                .ok_or_else(|| RingError::BadJson("term missing `exp`".into()))?
                .iter()
                .map(|x| {
                    x.as_i64()
                        .ok_or_else(|| RingError::BadJson("exponents must be integers".into()))
                })
                .collect::<Result<Vec<i64>, _>>()?;
            if exp.len() != ring.arity() {
                return Err(RingError::BadJson("exponent arity mismatch".into()));
            }
            let craw = t
                .get("coeff")
                .ok_or_else(|| RingError::BadJson("term missing `coeff`".into()))?;
            let c = if let Some(arr) = craw.as_array() {
                if arr.len() != 2 {
                    return Err(RingError::BadJson("gaussian coeff must be [re, im]".into()));
                }
                Coefficient { re: bigint_from_json(&arr[0])?, im: bigint_from_json(&arr[1])? }
            } else {
                Coefficient { re: bigint_from_json(craw)?, im: BigInt::zero() }
            };
            poly.insert_term(exp, c);
        }
        Ok(poly)
    }

    /// Parse a sum of signed monomials like `q^2 - 2*q^-2 + 3` or
    /// `-q^3*z + i*t` (the literal `i` is only legal in Gaussian rings).
    pub fn parse(ring: &RingDescriptor, input: &str) -> Result<LaurentPoly, RingError> {
        let bad = |msg: &str| RingError::BadLiteral(input.to_string(), msg.to_string());
        let mut out = LaurentPoly::zero(ring);
        let s: Vec<char> = input.chars().collect();
        let mut pos = 0usize;
        let skip_ws = |pos: &mut usize| {
            while *pos < s.len() && s[*pos].is_whitespace() {
                *pos += 1;
            }
        };
        skip_ws(&mut pos);
        if pos == s.len() {
            return Err(bad("empty literal"));
        }
        let mut first = true;
        while pos < s.len() {
            skip_ws(&mut pos);
            if pos == s.len() {
                break;
            }
            let mut negative = false;
            let mut saw_sign = false;
            while pos < s.len() && (s[pos] == '+' || s[pos] == '-') {
                if s[pos] == '-' {
                    negative = !negative;
                }
                saw_sign = true;
                pos += 1;
                skip_ws(&mut pos);
            }
            if !first && !saw_sign {
                return Err(bad("expected `+` or `-` between monomials"));
            }
            first = false;
            skip_ws(&mut pos);
            // One monomial: factors joined by `*`.
            let mut coeff = Coefficient::one();
            let mut exp = vec![0i64; ring.arity()];
            let mut saw_factor = false;
            loop {
                skip_ws(&mut pos);
                if pos >= s.len() {
                    break;
                }
                let ch = s[pos];
                if ch.is_ascii_digit() {
                    let start = pos;
                    while pos < s.len() && s[pos].is_ascii_digit() {
                        pos += 1;
                    }
                    let digits: String = s[start..pos].iter().collect();
                    let n: BigInt = digits.parse().map_err(|_| bad("bad integer"))?;
                    coeff = coeff.mul(&Coefficient { re: n, im: BigInt::zero() });
                    saw_factor = true;
                } else if ch == '(' {
                    // A parenthesized Gaussian constant like (2-3i); this is
                    // what `Display` emits for mixed coefficients.
                    let close = s[pos..]
                        .iter()
                        .position(|&c| c == ')')
                        .ok_or_else(|| bad("unclosed `(`"))?;
                    let inner: String = s[pos + 1..pos + close].iter().collect();
                    let g = LaurentPoly::parse(ring, &inner)?;
                    let c = g
                        .as_constant()
                        .ok_or_else(|| bad("parentheses may only wrap constants"))?;
                    coeff = coeff.mul(&c);
                    pos += close + 1;
                    saw_factor = true;
                } else if ch.is_alphabetic() || ch == '_' {
                    let start = pos;
                    while pos < s.len() && (s[pos].is_alphanumeric() || s[pos] == '_') {
                        pos += 1;
                    }
                    let name: String = s[start..pos].iter().collect();
                    let mut power = 1i64;
                    if pos < s.len() && s[pos] == '^' {
                        pos += 1;
                        let mut sign = 1i64;
                        if pos < s.len() && s[pos] == '-' {
                            sign = -1;
                            pos += 1;
                        }
                        let start = pos;
                        while pos < s.len() && s[pos].is_ascii_digit() {
                            pos += 1;
                        }
                        if start == pos {
                            return Err(bad("missing exponent after `^`"));
                        }
                        let digits: String = s[start..pos].iter().collect();
                        power = sign
                            * digits
                                .parse::<i64>()
                                .map_err(|_| bad("exponent out of range"))?;
                    }
                    if name == "i" && ring.coefficient_kind == CoefficientKind::GaussianInteger {
                        if power < 0 {
                            return Err(bad("negative powers of i are not supported; use i^3"));
                        }
                        for _ in 0..(power.rem_euclid(4)) {
                            coeff = coeff.mul(&Coefficient::i());
                        }
                    } else {
                        let idx = ring
                            .var_index(&name)
                            .map_err(|_| bad(&format!("unknown variable `{name}`")))?;
                        exp[idx] += power;
                    }
                    saw_factor = true;
                } else {
                    return Err(bad(&format!("unexpected character `{ch}`")));
                }
                skip_ws(&mut pos);
                if pos < s.len() && s[pos] == '*' {
                    pos += 1;
                    continue;
                }
                // Juxtaposition also multiplies: `3i`, `2q^2`.
                if pos < s.len()
                    && (s[pos].is_alphanumeric() || s[pos] == '_' || s[pos] == '(')
                {
                    continue;
                }
                break;
            }
            if !saw_factor {
                return Err(bad("empty monomial"));
            }
            if negative {
                coeff = coeff.neg();
            }
            if ring.coefficient_kind == CoefficientKind::Integer && !coeff.is_real() {
                return Err(RingError::ImaginaryInIntegerRing);
            }
            out.insert_term(exp, coeff);
            skip_ws(&mut pos);
        }
        Ok(out)
    }
}

fn bigint_to_json(n: &BigInt) -> serde_json::Value {
    match i64::try_from(n) {
        Ok(v) => serde_json::Value::Number(v.into()),
        Err(_) => serde_json::Value::String(n.to_string()),
    }
}

fn bigint_from_json(v: &serde_json::Value) -> Result<BigInt, RingError> {
    if let Some(n) = v.as_i64() {
        return Ok(BigInt::from(n));
    }
    if let Some(n) = v.as_u64() {
        return Ok(BigInt::from(n));
    }
    if let Some(s) = v.as_str() {
        return s
            .parse()
            .map_err(|_| RingError::BadJson(format!("bad integer string `{s}`")));
    }
    Err(RingError::BadJson("coefficients must be integers or integer strings".into()))
}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            let mut factors: Vec<String> = Vec::new();
            for (i, &x) in e.iter().enumerate() {
                if x == 1 {
                    factors.push(self.ring.variables[i].clone());
                } else if x != 0 {
                    factors.push(format!("{}^{}", self.ring.variables[i], x));
                }
            }
            // Choose how to render the coefficient next to the variables.
            let one = Coefficient::one();
            let minus_one = one.neg();
            let (sign, body) = if factors.is_empty() {
                let s = format!("{c}");
                if let Some(stripped) = s.strip_prefix('-') {
                    ("-", stripped.to_string())
                } else {
                    ("+", s)
                }
            } else if *c == one {
                ("+", factors.join("*"))
            } else if *c == minus_one {
                ("-", factors.join("*"))
            } else {
                let s = format!("{c}");
                if let Some(stripped) = s.strip_prefix('-') {
                    ("-", format!("{}*{}", stripped, factors.join("*")))
                } else {
                    ("+", format!("{}*{}", s, factors.join("*")))
                }
            };
            if first {
                if sign == "-" {
                    write!(f, "-{body}")?;
                } else {
                    write!(f, "{body}")?;
                }
                first = false;
            } else if sign == "-" {
                write!(f, " - {body}")?;
            } else {
                write!(f, " + {body}")?;
            }
        }
        Ok(())
    }
}
