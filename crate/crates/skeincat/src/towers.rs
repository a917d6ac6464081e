//! Iwahori-Hecke algebras of the symmetric groups, their affine extensions,
//! and the Markov trace that turns braid closures into link polynomials.
//!
//! Elements are stored in the standard basis indexed by permutations, with
//! multiplication driven by the quadratic relation T^2 = 1 + z*T (so the
//! inverse of a generator is T - z). The affine extension adjoins commuting
//! invertible coil generators x_1 .. x_n subject to x_{i+1} = T_i x_i T_i;
//! its normal form pushes coil powers to the left of every monomial. The
//! Markov trace is computed by peeling the top strand with the coset
//! decomposition of S_n over S_{n-1}.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use serde_json::json;
use thiserror::Error;

use crate::ring::{LaurentPoly, RingDescriptor, RingError};
use crate::term::{
    writhe, Duality, GenDecl, GenTag, Letter, LinearTerm, ObjectDecl, ObjectWord, Presentation,
    Signature, Term, TermError, TwistValue,
};

#[derive(Debug, Error)]
pub enum TowerError {
    #[error("images are not a bijection on 0..{0}")]
    NotAPermutation(usize),
    #[error("strand counts differ: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("generator index {index} is out of bounds on {n} strands")]
    GeneratorOutOfRange { index: usize, n: usize },
    #[error("a braid needs at least one strand")]
    NoStrands,
    #[error("bad algebra word at byte {pos}: {msg}")]
    WordSyntax { pos: usize, msg: String },
    #[error("generator `{0}` has no Hecke interpretation")]
    Unresolvable(String),
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Term(#[from] TermError),
}

/// A permutation of {0, .., n-1} in one-line notation: entry i is the image
/// of i. `a.compose(&b)` is a after b.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Permutation {
    images: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation { images: (0..n).collect() }
    }

    pub fn from_images(images: Vec<usize>) -> Result<Self, TowerError> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &v in &images {
            if v >= n || seen[v] {
                return Err(TowerError::NotAPermutation(n));
            }
            seen[v] = true;
        }
        Ok(Permutation { images })
    }

    /// The adjacent transposition of i and i+1 (0-based).
    pub fn transposition(n: usize, i: usize) -> Self {
        let mut images: Vec<usize> = (0..n).collect();
        images.swap(i, i + 1);
        Permutation { images }
    }

    pub fn n(&self) -> usize {
        self.images.len()
    }

    pub fn image(&self, i: usize) -> usize {
        self.images[i]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(i, &v)| i == v)
    }

    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation { images: other.images.iter().map(|&j| self.images[j]).collect() }
    }

    pub fn inverse(&self) -> Permutation {
        let mut images = vec![0; self.images.len()];
        for (i, &v) in self.images.iter().enumerate() {
            images[v] = i;
        }
        Permutation { images }
    }

    /// Coxeter length: the number of inversions.
    pub fn length(&self) -> usize {
        let mut count = 0;
        for i in 0..self.images.len() {
            for j in i + 1..self.images.len() {
                if self.images[i] > self.images[j] {
                    count += 1;
                }
            }
        }
        count
    }

    /// A reduced word in adjacent transpositions (0-based), rightmost letter
    /// applied first, obtained by stripping right descents.
    pub fn reduced_word(&self) -> Vec<usize> {
        let mut w = self.clone();
        let mut letters = Vec::new();
        loop {
            let descent =
                (0..w.n().saturating_sub(1)).find(|&i| w.images[i] > w.images[i + 1]);
            match descent {
                Some(i) => {
                    letters.push(i);
                    w.images.swap(i, i + 1);
                }
                None => break,
            }
        }
        letters.reverse();
        letters
    }

    /// Side-by-side juxtaposition acting on the disjoint union.
    pub fn block_sum(&self, other: &Permutation) -> Permutation {
        let n = self.n();
        let mut images = self.images.clone();
        images.extend(other.images.iter().map(|&v| v + n));
        Permutation { images }
    }

    /// All n! permutations in lexicographic order.
    pub fn all(n: usize) -> Vec<Permutation> {
        let mut out = Vec::new();
        let mut images: Vec<usize> = (0..n).collect();
        loop {
            out.push(Permutation { images: images.clone() });
            let pivot =
                (0..n.saturating_sub(1)).rev().find(|&i| images[i] < images[i + 1]);
            let Some(i) = pivot else { break };
            let j = (i + 1..n).rev().find(|&j| images[j] > images[i]).unwrap();
            images.swap(i, j);
            images[i + 1..].reverse();
        }
        out
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.images.iter().map(|v| v.to_string()).collect();
        write!(f, "[{}]", parts.join(" "))
    }
}

/// The coefficient ring of the bare Hecke algebra.
pub fn hecke_ring() -> RingDescriptor {
    RingDescriptor::integer(&["z"])
}

/// The coefficient ring of the Markov trace: the skein parameter z, the
/// positive curl value t, and an independent loop value delta.
pub fn markov_ring() -> RingDescriptor {
    RingDescriptor::integer(&["z", "t", "delta"])
}

/// An element of the Hecke algebra H_n in the permutation basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeckeElement {
    n: usize,
    ring: RingDescriptor,
    terms: BTreeMap<Permutation, LaurentPoly>,
}

impl HeckeElement {
    pub fn zero(ring: &RingDescriptor, n: usize) -> Self {
        HeckeElement { n, ring: ring.clone(), terms: BTreeMap::new() }
    }

    pub fn identity(ring: &RingDescriptor, n: usize) -> Self {
        Self::from_permutation(ring, Permutation::identity(n))
    }

    pub fn from_permutation(ring: &RingDescriptor, w: Permutation) -> Self {
        let n = w.n();
        let mut terms = BTreeMap::new();
        terms.insert(w, LaurentPoly::one(ring));
        HeckeElement { n, ring: ring.clone(), terms }
    }

    /// The generator T_i (1-based, crossing strands i and i+1).
    pub fn generator(ring: &RingDescriptor, n: usize, i: usize) -> Result<Self, TowerError> {
        if i == 0 || i >= n {
            return Err(TowerError::GeneratorOutOfRange { index: i, n });
        }
        Ok(Self::from_permutation(ring, Permutation::transposition(n, i - 1)))
    }

    /// T_i^{-1} = T_i - z.
    pub fn generator_inverse(
        ring: &RingDescriptor,
        n: usize,
        i: usize,
    ) -> Result<Self, TowerError> {
        let z = LaurentPoly::var(ring, "z")?;
        let g = Self::generator(ring, n, i)?;
        g.sub(&Self::identity(ring, n).scale(&z)?)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ring(&self) -> &RingDescriptor {
        &self.ring
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Permutation, &LaurentPoly)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, w: &Permutation) -> LaurentPoly {
        self.terms.get(w).cloned().unwrap_or_else(|| LaurentPoly::zero(&self.ring))
    }

    fn add_term(&mut self, w: Permutation, c: LaurentPoly) -> Result<(), RingError> {
        let entry = match self.terms.remove(&w) {
            Some(old) => old.add(&c)?,
            None => c,
        };
        if !entry.is_zero() {
            self.terms.insert(w, entry);
        }
        Ok(())
    }

    pub fn add(&self, other: &HeckeElement) -> Result<HeckeElement, TowerError> {
        if self.n != other.n {
            return Err(TowerError::SizeMismatch(self.n, other.n));
        }
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.clone())?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &HeckeElement) -> Result<HeckeElement, TowerError> {
        if self.n != other.n {
            return Err(TowerError::SizeMismatch(self.n, other.n));
        }
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.neg())?;
        }
        Ok(out)
    }

    pub fn scale(&self, p: &LaurentPoly) -> Result<HeckeElement, TowerError> {
        let mut out = HeckeElement::zero(&self.ring, self.n);
        for (w, c) in &self.terms {
            let scaled = c.mul(p)?;
            if !scaled.is_zero() {
                out.terms.insert(w.clone(), scaled);
            }
        }
        Ok(out)
    }

    pub fn promote(&self, target: &RingDescriptor) -> Result<HeckeElement, TowerError> {
        let mut out = HeckeElement::zero(target, self.n);
        for (w, c) in &self.terms {
            out.terms.insert(w.clone(), c.promote(target)?);
        }
        Ok(out)
    }

    /// Left multiplication by T at 0-based position i, by the exchange rule:
    /// T_i T_w is T_{s_i w} when the length goes up and T_{s_i w} + z T_w
    /// when it goes down.
    fn gen_mul_left0(&self, i: usize) -> Result<HeckeElement, TowerError> {
        let z = LaurentPoly::var(&self.ring, "z")?;
        let mut out = HeckeElement::zero(&self.ring, self.n);
        for (w, c) in &self.terms {
            let winv = w.inverse();
            let p = winv.image(i);
            let q = winv.image(i + 1);
            let mut images = w.images().to_vec();
            images.swap(p, q);
            let sw = Permutation { images };
            out.add_term(sw, c.clone())?;
            if p > q {
                out.add_term(w.clone(), c.mul(&z)?)?;
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let terms: Vec<serde_json::Value> = self
            .terms
            .iter()
            .map(|(w, c)| json!({ "perm": w.images(), "coeff": c.to_json() }))
            .collect();
        json!({ "strands": self.n, "terms": terms })
    }
}

impl fmt::Display for HeckeElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (w, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let word = w.reduced_word();
            let label: Vec<String> = word.iter().map(|i| format!("T{}", i + 1)).collect();
            match (word.is_empty(), c.is_one()) {
                (true, true) => write!(f, "1")?,
                (true, false) => write!(f, "({c})")?,
                (false, true) => write!(f, "{}", label.join(" "))?,
                (false, false) => write!(f, "({c}) {}", label.join(" "))?,
            }
        }
        Ok(())
    }
}

/// The algebra product, expanding the left factor into generator words.
pub fn hecke_mul(a: &HeckeElement, b: &HeckeElement) -> Result<HeckeElement, TowerError> {
    if a.n != b.n {
        return Err(TowerError::SizeMismatch(a.n, b.n));
    }
    let mut out = HeckeElement::zero(&a.ring, a.n);
    for (u, cu) in &a.terms {
        let mut acc = b.clone();
        for &i in u.reduced_word().iter().rev() {
            acc = acc.gen_mul_left0(i)?;
        }
        acc = acc.scale(cu)?;
        out = out.add(&acc)?;
    }
    Ok(out)
}

/// Side-by-side product: H_m tensor H_n inside H_{m+n}.
pub fn hecke_tensor(a: &HeckeElement, b: &HeckeElement) -> Result<HeckeElement, TowerError> {
    let mut out = HeckeElement::zero(&a.ring, a.n + b.n);
    for (u, cu) in &a.terms {
        for (v, cv) in &b.terms {
            out.add_term(u.block_sum(v), cu.mul(cv)?)?;
        }
    }
    Ok(out)
}

/// The i-th Jucys-Murphy element of H_n (1-based): the full positive wrap of
/// strand i around the strands to its left,
/// T_{i-1} .. T_1 T_1 .. T_{i-1}. The first one is the identity, and the
/// family commutes pairwise.
pub fn jm_element(ring: &RingDescriptor, i: usize, n: usize) -> Result<HeckeElement, TowerError> {
    if i == 0 || i > n {
        return Err(TowerError::GeneratorOutOfRange { index: i, n });
    }
    let mut acc = HeckeElement::identity(ring, n);
    for j in (1..i).rev().chain(1..i) {
        acc = acc.gen_mul_left0(j - 1)?;
    }
    Ok(acc)
}

/// The inverse of `jm_element`, expanding each T^{-1} as T - z.
pub fn jm_element_inverse(
    ring: &RingDescriptor,
    i: usize,
    n: usize,
) -> Result<HeckeElement, TowerError> {
    if i == 0 || i > n {
        return Err(TowerError::GeneratorOutOfRange { index: i, n });
    }
    let z = LaurentPoly::var(ring, "z")?;
    let mut acc = HeckeElement::identity(ring, n);
    for j in (1..i).rev().chain(1..i) {
        acc = acc.gen_mul_left0(j - 1)?.sub(&acc.scale(&z)?)?;
    }
    Ok(acc)
}

/// The Markov trace on H_n over the ring (z, t, delta): tr(1) on one strand
/// is delta, inclusions multiply by delta, and inserting the top generator
/// multiplies by t. Each basis word is peeled one strand at a time through
/// the coset factorization T_w = T_u T_{n-1} T_v with u, v in S_{n-1}.
pub fn markov_trace(h: &HeckeElement) -> Result<LaurentPoly, TowerError> {
    let ring = markov_ring();
    let h = h.promote(&ring)?;
    trace_rec(&h)
}

fn trace_rec(h: &HeckeElement) -> Result<LaurentPoly, TowerError> {
    let n = h.n;
    if n == 0 {
        return Ok(h.coeff(&Permutation::identity(0)));
    }
    let ring = h.ring.clone();
    let t = LaurentPoly::var(&ring, "t")?;
    let delta = LaurentPoly::var(&ring, "delta")?;
    let mut reduced = HeckeElement::zero(&ring, n - 1);
    for (w, c) in &h.terms {
        if w.image(n - 1) == n - 1 {
            let mut images = w.images().to_vec();
            images.pop();
            reduced.add_term(Permutation { images }, c.mul(&delta)?)?;
        } else {
            // w = u . (s_{n-2} .. s_k) with u fixing the top strand, so
            // T_w = T_u T_{n-2} T_v where v = s_{n-3} .. s_k, and the top
            // generator closes to a positive curl worth t.
            let k = w.inverse().image(n - 1);
            let mut uim = w.images().to_vec();
            uim.remove(k);
            let u = Permutation { images: uim };
            let vim: Vec<usize> = (0..n - 1)
                .map(|j| {
                    if j == k {
                        n - 2
                    } else if j > k {
                        j - 1
                    } else {
                        j
                    }
                })
                .collect();
            let v = Permutation { images: vim };
            let uv = hecke_mul(
                &HeckeElement::from_permutation(&ring, u),
                &HeckeElement::from_permutation(&ring, v),
            )?;
            for (p, pc) in &uv.terms {
                reduced.add_term(p.clone(), pc.mul(c)?.mul(&t)?)?;
            }
        }
    }
    trace_rec(&reduced)
}

/// The link polynomial of a braid closure through the Markov trace,
/// normalized so the unknot is 1: t^{-writhe} tr(image of the word) / delta.
/// Negative letters map to T - z; the delta division is Laurent-exact.
pub fn homflypt_braid(word: &[i32], n: usize) -> Result<LaurentPoly, TowerError> {
    if n == 0 {
        return Err(TowerError::NoStrands);
    }
    let ring = markov_ring();
    let mut h = HeckeElement::identity(&ring, n);
    for &k in word {
        let i = k.unsigned_abs() as usize;
        let g = if k > 0 {
            HeckeElement::generator(&ring, n, i)?
        } else {
            HeckeElement::generator_inverse(&ring, n, i)?
        };
        h = hecke_mul(&g, &h)?;
    }
    let tr = markov_trace(&h)?;
    let norm = LaurentPoly::var_pow(&ring, "t", -writhe(word))?;
    let delta_inv = LaurentPoly::var_pow(&ring, "delta", -1)?;
    Ok(tr.mul(&norm)?.mul(&delta_inv)?)
}

/// One letter of a word in the affine algebra: a braid generator power
/// T_i^p or a coil power x_j^p (indices 1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AhLetter {
    Braid { index: usize, power: i64 },
    Coil { index: usize, power: i64 },
}

/// Parse a whitespace-separated word like `T1 x2^-1 T1^2` over n strands.
pub fn parse_affine_word(text: &str, n: usize) -> Result<Vec<AhLetter>, TowerError> {
    let mut out = Vec::new();
    let mut pos = 0usize;
    let bytes = text.as_bytes();
    while pos < bytes.len() {
        if (bytes[pos] as char).is_whitespace() {
            pos += 1;
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !(bytes[pos] as char).is_whitespace() {
            pos += 1;
        }
        let token = &text[start..pos];
        let err = |msg: &str| TowerError::WordSyntax { pos: start, msg: msg.to_string() };
        let (kind, rest) = token.split_at(1);
        let (index_text, power) = match rest.split_once('^') {
            Some((idx, pw)) => {
                let power: i64 = pw.parse().map_err(|_| err("bad exponent"))?;
                (idx, power)
            }
            None => (rest, 1),
        };
        let index: usize = index_text.parse().map_err(|_| err("bad index"))?;
        let letter = match kind {
            "T" => {
                if index == 0 || index >= n {
                    return Err(TowerError::GeneratorOutOfRange { index, n });
                }
                AhLetter::Braid { index, power }
            }
            "x" => {
                if index == 0 || index > n {
                    return Err(TowerError::GeneratorOutOfRange { index, n });
                }
                AhLetter::Coil { index, power }
            }
            _ => return Err(err("expected a T or x letter")),
        };
        out.push(letter);
    }
    Ok(out)
}

/// An element of the affine Hecke algebra in the normal form basis
/// x^a T_w: a coil exponent vector paired with a permutation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineHeckeElement {
    n: usize,
    ring: RingDescriptor,
    terms: BTreeMap<(Vec<i64>, Permutation), LaurentPoly>,
}

impl AffineHeckeElement {
    pub fn zero(ring: &RingDescriptor, n: usize) -> Self {
        AffineHeckeElement { n, ring: ring.clone(), terms: BTreeMap::new() }
    }

    pub fn identity(ring: &RingDescriptor, n: usize) -> Self {
        let mut out = Self::zero(ring, n);
        out.terms
            .insert((vec![0; n], Permutation::identity(n)), LaurentPoly::one(ring));
        out
    }

    pub fn from_basis(
        ring: &RingDescriptor,
        coils: Vec<i64>,
        w: Permutation,
    ) -> Result<Self, TowerError> {
        if coils.len() != w.n() {
            return Err(TowerError::SizeMismatch(coils.len(), w.n()));
        }
        let mut out = Self::zero(ring, w.n());
        out.terms.insert((coils, w), LaurentPoly::one(ring));
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ring(&self) -> &RingDescriptor {
        &self.ring
    }

    pub fn terms(
        &self,
    ) -> impl Iterator<Item = (&(Vec<i64>, Permutation), &LaurentPoly)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, coils: &[i64], w: &Permutation) -> LaurentPoly {
        self.terms
            .get(&(coils.to_vec(), w.clone()))
            .cloned()
            .unwrap_or_else(|| LaurentPoly::zero(&self.ring))
    }

    fn add_term(
        &mut self,
        key: (Vec<i64>, Permutation),
        c: LaurentPoly,
    ) -> Result<(), RingError> {
        let entry = match self.terms.remove(&key) {
            Some(old) => old.add(&c)?,
            None => c,
        };
        if !entry.is_zero() {
            self.terms.insert(key, entry);
        }
        Ok(())
    }

    pub fn add(&self, other: &AffineHeckeElement) -> Result<AffineHeckeElement, TowerError> {
        if self.n != other.n {
            return Err(TowerError::SizeMismatch(self.n, other.n));
        }
        let mut out = self.clone();
        for (key, c) in &other.terms {
            out.add_term(key.clone(), c.clone())?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &AffineHeckeElement) -> Result<AffineHeckeElement, TowerError> {
        if self.n != other.n {
            return Err(TowerError::SizeMismatch(self.n, other.n));
        }
        let mut out = self.clone();
        for (key, c) in &other.terms {
            out.add_term(key.clone(), c.neg())?;
        }
        Ok(out)
    }

    pub fn scale(&self, p: &LaurentPoly) -> Result<AffineHeckeElement, TowerError> {
        let mut out = AffineHeckeElement::zero(&self.ring, self.n);
        for (key, c) in &self.terms {
            let scaled = c.mul(p)?;
            if !scaled.is_zero() {
                out.terms.insert(key.clone(), scaled);
            }
        }
        Ok(out)
    }

    /// Left multiplication by the coil monomial x^shift.
    fn coil_shift(&self, shift: &[i64]) -> AffineHeckeElement {
        let mut out = AffineHeckeElement::zero(&self.ring, self.n);
        for ((a, w), c) in &self.terms {
            let moved: Vec<i64> = a.iter().zip(shift).map(|(x, s)| x + s).collect();
            out.terms.insert((moved, w.clone()), c.clone());
        }
        out
    }

    /// Left multiplication by T at 0-based position i. Coil powers at the
    /// two crossed positions are split into a central part (x_i x_{i+1})^m
    /// and a one-sided excess, which the generator passes through at the
    /// cost of z-correction terms one T shorter:
    ///   T x^r = y^r T - z (y x^{r-1} + .. + y^r),
    ///   T y^s = x^s T + z (x^{s-1} y + .. + y^s),
    /// writing x, y for the coils at positions i, i+1.
    fn braid_mul_left0(&self, i: usize) -> Result<AffineHeckeElement, TowerError> {
        let z = LaurentPoly::var(&self.ring, "z")?;
        let mut out = AffineHeckeElement::zero(&self.ring, self.n);
        for ((a, w), c) in &self.terms {
            let m = a[i].min(a[i + 1]);
            let r = a[i] - m;
            let s = a[i + 1] - m;
            let mut base = a.clone();
            base[i] = m;
            base[i + 1] = m;

            let mut crossed = base.clone();
            crossed[i] += s;
            crossed[i + 1] += r;
            let winv = w.inverse();
            let p = winv.image(i);
            let q = winv.image(i + 1);
            let mut images = w.images().to_vec();
            images.swap(p, q);
            let sw = Permutation { images };
            out.add_term((crossed.clone(), sw), c.clone())?;
            if p > q {
                out.add_term((crossed, w.clone()), c.mul(&z)?)?;
            }

            let zc = c.mul(&z)?;
            for k in 1..=r {
                let mut exps = base.clone();
                exps[i] += r - k;
                exps[i + 1] += k;
                out.add_term((exps, w.clone()), zc.neg())?;
            }
            for k in 1..=s {
                let mut exps = base.clone();
                exps[i] += s - k;
                exps[i + 1] += k;
                out.add_term((exps, w.clone()), zc.clone())?;
            }
        }
        Ok(out)
    }

    fn braid_inverse_mul_left0(&self, i: usize) -> Result<AffineHeckeElement, TowerError> {
        let z = LaurentPoly::var(&self.ring, "z")?;
        self.braid_mul_left0(i)?.sub(&self.scale(&z)?)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let terms: Vec<serde_json::Value> = self
            .terms
            .iter()
            .map(|((a, w), c)| {
                json!({ "coils": a, "perm": w.images(), "coeff": c.to_json() })
            })
            .collect();
        json!({ "strands": self.n, "terms": terms })
    }
}

impl fmt::Display for AffineHeckeElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for ((a, w), c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let mut factors: Vec<String> = Vec::new();
            for (j, &e) in a.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(format!("x{}", j + 1)),
                    _ => factors.push(format!("x{}^{}", j + 1, e)),
                }
            }
            factors.extend(w.reduced_word().iter().map(|i| format!("T{}", i + 1)));
            match (factors.is_empty(), c.is_one()) {
                (true, true) => write!(f, "1")?,
                (true, false) => write!(f, "({c})")?,
                (false, true) => write!(f, "{}", factors.join(" "))?,
                (false, false) => write!(f, "({c}) {}", factors.join(" "))?,
            }
        }
        Ok(())
    }
}

/// Evaluate a word in the affine generators into the normal form basis,
/// multiplying letters onto the accumulator from the right end of the word.
pub fn ah_normal_form(
    ring: &RingDescriptor,
    word: &[AhLetter],
    n: usize,
) -> Result<AffineHeckeElement, TowerError> {
    let mut acc = AffineHeckeElement::identity(ring, n);
    for letter in word.iter().rev() {
        match *letter {
            AhLetter::Coil { index, power } => {
                let mut shift = vec![0i64; n];
                shift[index - 1] = power;
                acc = acc.coil_shift(&shift);
            }
            AhLetter::Braid { index, power } => {
                if power >= 0 {
                    for _ in 0..power {
                        acc = acc.braid_mul_left0(index - 1)?;
                    }
                } else {
                    for _ in 0..-power {
                        acc = acc.braid_inverse_mul_left0(index - 1)?;
                    }
                }
            }
        }
    }
    Ok(acc)
}

/// The algebra product of two normal-form elements.
pub fn ah_mul(
    a: &AffineHeckeElement,
    b: &AffineHeckeElement,
) -> Result<AffineHeckeElement, TowerError> {
    if a.n != b.n {
        return Err(TowerError::SizeMismatch(a.n, b.n));
    }
    let mut out = AffineHeckeElement::zero(&a.ring, a.n);
    for ((coils, w), c) in &a.terms {
        let mut acc = b.clone();
        for &i in w.reduced_word().iter().rev() {
            acc = acc.braid_mul_left0(i)?;
        }
        acc = acc.coil_shift(coils).scale(c)?;
        out = out.add(&acc)?;
    }
    Ok(out)
}

/// Collapse the coil generators onto the finite algebra: x_j goes to the
/// j-th Jucys-Murphy element. This is an algebra map because the wrap
/// elements reproduce the defining exchange x_{i+1} = T_i x_i T_i.
pub fn ah_flatten(e: &AffineHeckeElement) -> Result<HeckeElement, TowerError> {
    let ring = &e.ring;
    let n = e.n;
    let mut out = HeckeElement::zero(ring, n);
    for ((coils, w), c) in &e.terms {
        let mut acc = HeckeElement::identity(ring, n);
        for (j, &power) in coils.iter().enumerate() {
            if power == 0 {
                continue;
            }
            let wrap = if power > 0 {
                jm_element(ring, j + 1, n)?
            } else {
                jm_element_inverse(ring, j + 1, n)?
            };
            for _ in 0..power.unsigned_abs() {
                acc = hecke_mul(&acc, &wrap)?;
            }
        }
        acc = hecke_mul(&acc, &HeckeElement::from_permutation(ring, w.clone()))?;
        out = out.add(&acc.scale(c)?)?;
    }
    Ok(out)
}

/// An element of the wreath algebra Z[x_1^{+-} .. x_n^{+-}] semidirect S_n,
/// the z = 0 degeneration used to cross-check the affine normal form.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WreathElement {
    n: usize,
    terms: BTreeMap<(Vec<i64>, Permutation), BigInt>,
}

impl WreathElement {
    pub fn zero(n: usize) -> Self {
        WreathElement { n, terms: BTreeMap::new() }
    }

    pub fn identity(n: usize) -> Self {
        let mut out = Self::zero(n);
        out.terms
            .insert((vec![0; n], Permutation::identity(n)), BigInt::from(1));
        out
    }

    pub fn from_basis(coils: Vec<i64>, w: Permutation, coeff: i64) -> Result<Self, TowerError> {
        if coils.len() != w.n() {
            return Err(TowerError::SizeMismatch(coils.len(), w.n()));
        }
        let mut out = Self::zero(w.n());
        if coeff != 0 {
            out.terms.insert((coils, w), BigInt::from(coeff));
        }
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(Vec<i64>, Permutation), &BigInt)> {
        self.terms.iter()
    }

    fn add_term(&mut self, key: (Vec<i64>, Permutation), c: BigInt) {
        let entry = match self.terms.remove(&key) {
            Some(old) => old + c,
            None => c,
        };
        if entry != BigInt::from(0) {
            self.terms.insert(key, entry);
        }
    }

    pub fn add(&self, other: &WreathElement) -> Result<WreathElement, TowerError> {
        if self.n != other.n {
            return Err(TowerError::SizeMismatch(self.n, other.n));
        }
        let mut out = self.clone();
        for (key, c) in &other.terms {
            out.add_term(key.clone(), c.clone());
        }
        Ok(out)
    }
}

/// The wreath product rule (x^a w)(x^b v) = x^{a + w.b} (w v), where the
/// permutation action relabels coil coordinates.
pub fn wreath_mul(a: &WreathElement, b: &WreathElement) -> Result<WreathElement, TowerError> {
    if a.n != b.n {
        return Err(TowerError::SizeMismatch(a.n, b.n));
    }
    let mut out = WreathElement::zero(a.n);
    for ((ea, w), ca) in &a.terms {
        for ((eb, v), cb) in &b.terms {
            let mut exps = ea.clone();
            for (i, &e) in eb.iter().enumerate() {
                exps[w.image(i)] += e;
            }
            out.add_term((exps, w.compose(v)), ca * cb);
        }
    }
    Ok(out)
}

/// The braid category on one oriented strand: positive and negative
/// crossings with trivial twist. The coefficient ring is empty because the
/// relations are all monomial.
pub fn braid_signature() -> Signature {
    let ring = RingDescriptor::integer(&[]);
    let u = || Letter::up("u");
    let uu = ObjectWord::repeated(u(), 2);
    let mut twist = BTreeMap::new();
    twist.insert("u".to_string(), TwistValue::Scalar(LaurentPoly::one(&ring)));
    Signature {
        ring,
        objects: vec![ObjectDecl {
            name: "u".into(),
            oriented: true,
            duality: Duality::NoDual,
        }],
        generators: vec![
            GenDecl {
                name: "sigma".into(),
                dom: uu.clone(),
                cod: uu.clone(),
                tag: GenTag::BraidPos,
            },
            GenDecl {
                name: "sigma_inv".into(),
                dom: uu.clone(),
                cod: uu,
                tag: GenTag::BraidNeg,
            },
        ],
        twist,
    }
}

/// Crossing cancellation both ways plus the Yang-Baxter relation.
pub fn braid_presentation() -> Presentation {
    let sig = braid_signature();
    let rel = |l: &str, r: &str| {
        (
            crate::term::parse_term(l, &sig).unwrap(),
            crate::term::parse_term(r, &sig).unwrap(),
        )
    };
    let relations = vec![
        rel("sigma ; sigma_inv", "id(u u)"),
        rel("sigma_inv ; sigma", "id(u u)"),
        rel(
            "(sigma @ id(u)) ; (id(u) @ sigma) ; (sigma @ id(u))",
            "(id(u) @ sigma) ; (sigma @ id(u)) ; (id(u) @ sigma)",
        ),
    ];
    Presentation { signature: sig, relations }
}

/// The braid signature over the ring (z), for the quotient with the skein
/// relation sigma - sigma_inv = z.
pub fn hecke_signature() -> Signature {
    let mut sig = braid_signature();
    sig.ring = hecke_ring();
    sig.twist.insert(
        "u".to_string(),
        TwistValue::Scalar(LaurentPoly::one(&sig.ring)),
    );
    sig
}

/// The braid relations plus the quadratic skein relation.
pub fn hecke_presentation() -> Presentation {
    let sig = hecke_signature();
    let rel = |l: &str, r: &str| {
        (
            crate::term::parse_term(l, &sig).unwrap(),
            crate::term::parse_term(r, &sig).unwrap(),
        )
    };
    let relations = vec![
        rel("sigma ; sigma_inv", "id(u u)"),
        rel("sigma_inv ; sigma", "id(u u)"),
        rel(
            "(sigma @ id(u)) ; (id(u) @ sigma) ; (sigma @ id(u))",
            "(id(u) @ sigma) ; (sigma @ id(u)) ; (id(u) @ sigma)",
        ),
        rel("sigma", "sigma_inv + z*id(u u)"),
    ];
    Presentation { signature: sig, relations }
}

fn eval_hecke_term(t: &Term, sig: &Signature, ring: &RingDescriptor) -> Result<HeckeElement, TowerError> {
    match t {
        Term::Id(w) => Ok(HeckeElement::identity(ring, w.len())),
        Term::Gen(name) => {
            let decl = sig
                .generator(name)
                .ok_or_else(|| TermError::UnknownGenerator(name.clone()))?;
            match decl.tag {
                GenTag::BraidPos => HeckeElement::generator(ring, 2, 1),
                GenTag::BraidNeg => HeckeElement::generator_inverse(ring, 2, 1),
                _ => Err(TowerError::Unresolvable(name.clone())),
            }
        }
        Term::VCompose(u, l) => {
            let eu = eval_hecke_term(u, sig, ring)?;
            let el = eval_hecke_term(l, sig, ring)?;
            hecke_mul(&eu, &el)
        }
        Term::HTensor(a, b) => {
            let ea = eval_hecke_term(a, sig, ring)?;
            let eb = eval_hecke_term(b, sig, ring)?;
            hecke_tensor(&ea, &eb)
        }
    }
}

/// Evaluate a linear term over a braided signature into the Hecke algebra:
/// stacked crossings multiply on the left, side-by-side terms block-sum.
pub fn hecke_resolve(t: &LinearTerm, sig: &Signature) -> Result<HeckeElement, TowerError> {
    let ring = t.ring();
    let mut out = HeckeElement::zero(ring, t.cod.len());
    for (term, c) in t.terms() {
        let e = eval_hecke_term(term, sig, ring)?;
        out = out.add(&e.scale(c)?)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::Coefficient;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn zp(s: &str) -> LaurentPoly {
        LaurentPoly::parse(&hecke_ring(), s).unwrap()
    }

    fn mp(s: &str) -> LaurentPoly {
        LaurentPoly::parse(&markov_ring(), s).unwrap()
    }

    fn gen(n: usize, i: usize) -> HeckeElement {
        HeckeElement::generator(&hecke_ring(), n, i).unwrap()
    }

    fn random_hecke(rng: &mut StdRng, ring: &RingDescriptor, n: usize) -> HeckeElement {
        let perms = Permutation::all(n);
        let mut out = HeckeElement::zero(ring, n);
        for _ in 0..rng.gen_range(1..=3) {
            let w = perms[rng.gen_range(0..perms.len())].clone();
            let mut exp = vec![0i64; ring.arity()];
            exp[0] = rng.gen_range(0..3);
            let c = Coefficient::from_i64(rng.gen_range(-3..=3));
            out.add_term(w, LaurentPoly::monomial(ring, exp, c)).unwrap();
        }
        out
    }

    fn random_affine_word(rng: &mut StdRng, n: usize, len: usize) -> Vec<AhLetter> {
        (0..len)
            .map(|_| {
                if n >= 2 && rng.gen_bool(0.5) {
                    AhLetter::Braid {
                        index: rng.gen_range(1..n),
                        power: if rng.gen_bool(0.5) { 1 } else { -1 },
                    }
                } else {
                    let mut power = 0;
                    while power == 0 {
                        power = rng.gen_range(-2..=2);
                    }
                    AhLetter::Coil { index: rng.gen_range(1..=n), power }
                }
            })
            .collect()
    }

    #[test]
    fn permutation_basics() {
        let s0 = Permutation::transposition(3, 0);
        let s1 = Permutation::transposition(3, 1);
        let w = s0.compose(&s1);
        assert_eq!(w.images(), &[1, 2, 0]);
        assert_eq!(w.length(), 2);
        assert_eq!(w.compose(&w.inverse()), Permutation::identity(3));
        for w in Permutation::all(4) {
            let word = w.reduced_word();
            assert_eq!(word.len(), w.length());
            let rebuilt = word.iter().rev().fold(Permutation::identity(4), |acc, &i| {
                Permutation::transposition(4, i).compose(&acc)
            });
            assert_eq!(rebuilt, w);
        }
    }

    #[test]
    fn permutation_counts_are_factorials() {
        let mut fact = 1;
        for n in 0..=5 {
            if n > 0 {
                fact *= n;
            }
            assert_eq!(Permutation::all(n).len(), fact);
        }
    }

    #[test]
    fn quadratic_relation() {
        let t1 = gen(2, 1);
        let lhs = hecke_mul(&t1, &t1).unwrap();
        let rhs = HeckeElement::identity(&hecke_ring(), 2)
            .add(&t1.scale(&zp("z")).unwrap())
            .unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn braid_and_commutation_relations() {
        for n in 3..=5 {
            for i in 1..n - 1 {
                let a = gen(n, i);
                let b = gen(n, i + 1);
                let lhs = hecke_mul(&a, &hecke_mul(&b, &a).unwrap()).unwrap();
                let rhs = hecke_mul(&b, &hecke_mul(&a, &b).unwrap()).unwrap();
                assert_eq!(lhs, rhs, "braid relation at {i} on {n} strands");
            }
            for i in 1..n {
                for j in i + 2..n {
                    let a = gen(n, i);
                    let b = gen(n, j);
                    assert_eq!(
                        hecke_mul(&a, &b).unwrap(),
                        hecke_mul(&b, &a).unwrap(),
                        "far commutation {i},{j} on {n} strands"
                    );
                }
            }
        }
    }

    #[test]
    fn generator_inverse_cancels() {
        let ring = hecke_ring();
        for i in 1..4 {
            let g = gen(4, i);
            let ginv = HeckeElement::generator_inverse(&ring, 4, i).unwrap();
            assert_eq!(hecke_mul(&g, &ginv).unwrap(), HeckeElement::identity(&ring, 4));
            assert_eq!(hecke_mul(&ginv, &g).unwrap(), HeckeElement::identity(&ring, 4));
        }
    }

    #[test]
    fn multiplication_is_associative() {
        let ring = hecke_ring();
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random_hecke(&mut rng, &ring, 4);
            let b = random_hecke(&mut rng, &ring, 4);
            let c = random_hecke(&mut rng, &ring, 4);
            let left = hecke_mul(&hecke_mul(&a, &b).unwrap(), &c).unwrap();
            let right = hecke_mul(&a, &hecke_mul(&b, &c).unwrap()).unwrap();
            assert_eq!(left, right);
        }
    }

    #[test]
    fn tensor_places_generators() {
        let ring = hecke_ring();
        let t1 = gen(2, 1);
        let id2 = HeckeElement::identity(&ring, 2);
        assert_eq!(hecke_tensor(&t1, &id2).unwrap(), gen(4, 1));
        assert_eq!(hecke_tensor(&id2, &t1).unwrap(), gen(4, 3));
        let mut rng = StdRng::seed_from_u64(12);
        for _ in 0..10 {
            let a = random_hecke(&mut rng, &ring, 2);
            let b = random_hecke(&mut rng, &ring, 2);
            let c = random_hecke(&mut rng, &ring, 2);
            let d = random_hecke(&mut rng, &ring, 2);
            let lhs = hecke_mul(
                &hecke_tensor(&a, &b).unwrap(),
                &hecke_tensor(&c, &d).unwrap(),
            )
            .unwrap();
            let rhs = hecke_tensor(
                &hecke_mul(&a, &c).unwrap(),
                &hecke_mul(&b, &d).unwrap(),
            )
            .unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn wrap_elements_start_trivial_and_grow() {
        let ring = hecke_ring();
        for n in 1..=4 {
            assert_eq!(jm_element(&ring, 1, n).unwrap(), HeckeElement::identity(&ring, n));
        }
        let t1 = gen(2, 1);
        assert_eq!(jm_element(&ring, 2, 2).unwrap(), hecke_mul(&t1, &t1).unwrap());
        for i in 1..4 {
            let g = gen(4, i);
            let li = jm_element(&ring, i, 4).unwrap();
            let grown = hecke_mul(&g, &hecke_mul(&li, &g).unwrap()).unwrap();
            assert_eq!(grown, jm_element(&ring, i + 1, 4).unwrap());
        }
    }

    #[test]
    fn wrap_elements_commute() {
        let ring = hecke_ring();
        for n in 2..=5 {
            for i in 1..=n {
                for j in i + 1..=n {
                    let a = jm_element(&ring, i, n).unwrap();
                    let b = jm_element(&ring, j, n).unwrap();
                    assert_eq!(
                        hecke_mul(&a, &b).unwrap(),
                        hecke_mul(&b, &a).unwrap(),
                        "wrap elements {i},{j} on {n} strands"
                    );
                }
            }
        }
    }

    #[test]
    fn wrap_inverses_cancel() {
        let ring = hecke_ring();
        for n in 1..=4 {
            for i in 1..=n {
                let a = jm_element(&ring, i, n).unwrap();
                let b = jm_element_inverse(&ring, i, n).unwrap();
                assert_eq!(hecke_mul(&a, &b).unwrap(), HeckeElement::identity(&ring, n));
            }
        }
    }

    #[test]
    fn markov_trace_small_values() {
        let ring = markov_ring();
        assert_eq!(
            markov_trace(&HeckeElement::identity(&ring, 1)).unwrap(),
            mp("delta")
        );
        assert_eq!(
            markov_trace(&HeckeElement::identity(&ring, 2)).unwrap(),
            mp("delta^2")
        );
        assert_eq!(
            markov_trace(&HeckeElement::generator(&ring, 2, 1).unwrap()).unwrap(),
            mp("t*delta")
        );
        let prod = hecke_mul(
            &HeckeElement::generator(&ring, 3, 1).unwrap(),
            &HeckeElement::generator(&ring, 3, 2).unwrap(),
        )
        .unwrap();
        assert_eq!(markov_trace(&prod).unwrap(), mp("t^2*delta"));
    }

    #[test]
    fn markov_trace_defining_rules() {
        let ring = markov_ring();
        let mut rng = StdRng::seed_from_u64(13);
        for n in 2..=3 {
            for _ in 0..10 {
                let x = random_hecke(&mut rng, &ring, n);
                let included = hecke_tensor(&x, &HeckeElement::identity(&ring, 1)).unwrap();
                let lhs = markov_trace(&included).unwrap();
                let rhs = markov_trace(&x).unwrap().mul(&mp("delta")).unwrap();
                assert_eq!(lhs, rhs, "inclusion rule on {n} strands");

                let topped =
                    hecke_mul(&included, &HeckeElement::generator(&ring, n + 1, n).unwrap())
                        .unwrap();
                let lhs = markov_trace(&topped).unwrap();
                let rhs = markov_trace(&x).unwrap().mul(&mp("t")).unwrap();
                assert_eq!(lhs, rhs, "top generator rule on {n} strands");
            }
        }
    }

    #[test]
    fn markov_trace_is_tracial() {
        let ring = markov_ring();
        let mut rng = StdRng::seed_from_u64(14);
        for _ in 0..15 {
            let a = random_hecke(&mut rng, &ring, 4);
            let b = random_hecke(&mut rng, &ring, 4);
            assert_eq!(
                markov_trace(&hecke_mul(&a, &b).unwrap()).unwrap(),
                markov_trace(&hecke_mul(&b, &a).unwrap()).unwrap()
            );
        }
    }

    #[test]
    fn link_polynomial_frozen_values() {
        assert_eq!(homflypt_braid(&[], 1).unwrap(), mp("1"));
        assert_eq!(homflypt_braid(&[], 2).unwrap(), mp("delta"));
        assert_eq!(homflypt_braid(&[1], 2).unwrap(), mp("1"));
        assert_eq!(homflypt_braid(&[-1], 2).unwrap(), mp("t^2 + -z*t*delta"));
        assert_eq!(
            homflypt_braid(&[1, 1], 2).unwrap(),
            mp("z*t^-1 + t^-2*delta")
        );
        assert_eq!(
            homflypt_braid(&[1, 1, 1], 2).unwrap(),
            mp("t^-2 + z^2*t^-2 + z*t^-3*delta")
        );
    }

    #[test]
    fn link_polynomial_switching_relation() {
        // Switching one crossing ties the three polynomials together:
        // t H(+) - t^-1 H(-) = z H(0), exactly, with delta left free.
        let mut rng = StdRng::seed_from_u64(15);
        let t = mp("t");
        let tinv = mp("t^-1");
        let z = mp("z");
        for _ in 0..25 {
            let n = rng.gen_range(2..=4);
            let len = rng.gen_range(0..=4);
            let base: Vec<i32> = (0..len)
                .map(|_| {
                    let i = rng.gen_range(1..n) as i32;
                    if rng.gen_bool(0.5) {
                        i
                    } else {
                        -i
                    }
                })
                .collect();
            let pos = rng.gen_range(0..=base.len());
            let i = rng.gen_range(1..n) as i32;
            let mut plus = base.clone();
            plus.insert(pos, i);
            let mut minus = base.clone();
            minus.insert(pos, -i);
            let hp = homflypt_braid(&plus, n).unwrap();
            let hm = homflypt_braid(&minus, n).unwrap();
            let h0 = homflypt_braid(&base, n).unwrap();
            let lhs = hp.mul(&t).unwrap().sub(&hm.mul(&tinv).unwrap()).unwrap();
            assert_eq!(lhs, h0.mul(&z).unwrap());
        }
    }

    #[test]
    fn link_polynomial_markov_moves() {
        let mut rng = StdRng::seed_from_u64(16);
        let free = |p: &LaurentPoly| p.clone();
        // Loop values are forced once a curl appears, so the negative
        // stabilization only holds after substituting delta.
        let constrained = |p: &LaurentPoly| {
            let target = RingDescriptor::integer(&["z", "t"]);
            let image = LaurentPoly::parse(&target, "z^-1*t + -z^-1*t^-1").unwrap();
            let mut map = BTreeMap::new();
            map.insert("delta".to_string(), image);
            p.subst(&map).unwrap()
        };
        for _ in 0..20 {
            let n = rng.gen_range(2..=4);
            let len = rng.gen_range(0..=5);
            let word: Vec<i32> = (0..len)
                .map(|_| {
                    let i = rng.gen_range(1..n) as i32;
                    if rng.gen_bool(0.5) {
                        i
                    } else {
                        -i
                    }
                })
                .collect();
            let h = homflypt_braid(&word, n).unwrap();

            let g = rng.gen_range(1..n) as i32;
            let mut conj = vec![g];
            conj.extend(&word);
            conj.push(-g);
            assert_eq!(free(&homflypt_braid(&conj, n).unwrap()), free(&h));

            let mut stab_pos = word.clone();
            stab_pos.push(n as i32);
            assert_eq!(free(&homflypt_braid(&stab_pos, n + 1).unwrap()), free(&h));

            let mut stab_neg = word.clone();
            stab_neg.push(-(n as i32));
            assert_eq!(
                constrained(&homflypt_braid(&stab_neg, n + 1).unwrap()),
                constrained(&h)
            );
        }
    }

    #[test]
    fn affine_word_parser() {
        let word = parse_affine_word("T1 x2^-1 T1^2 x1", 3).unwrap();
        assert_eq!(
            word,
            vec![
                AhLetter::Braid { index: 1, power: 1 },
                AhLetter::Coil { index: 2, power: -1 },
                AhLetter::Braid { index: 1, power: 2 },
                AhLetter::Coil { index: 1, power: 1 },
            ]
        );
        assert!(parse_affine_word("T3", 3).is_err());
        assert!(parse_affine_word("x4", 3).is_err());
        assert!(parse_affine_word("y1", 3).is_err());
        assert!(parse_affine_word("T1^", 3).is_err());
    }

    fn nf(text: &str, n: usize) -> AffineHeckeElement {
        let word = parse_affine_word(text, n).unwrap();
        ah_normal_form(&hecke_ring(), &word, n).unwrap()
    }

    #[test]
    fn affine_normal_form_pins() {
        let ring = hecke_ring();
        let x2 = AffineHeckeElement::from_basis(
            &ring,
            vec![0, 1],
            Permutation::identity(2),
        )
        .unwrap();
        assert_eq!(nf("T1 x1 T1", 2), x2);
        assert_eq!(nf("x1 x1^-1", 2), AffineHeckeElement::identity(&ring, 2));

        // T1 x1 = x2 T1 - z x2 and T1 x2 = x1 T1 + z x2.
        let s = Permutation::transposition(2, 0);
        let mut expect = AffineHeckeElement::zero(&ring, 2);
        expect.add_term((vec![0, 1], s.clone()), zp("1")).unwrap();
        expect.add_term((vec![0, 1], Permutation::identity(2)), zp("-z")).unwrap();
        assert_eq!(nf("T1 x1", 2), expect);

        let mut expect = AffineHeckeElement::zero(&ring, 2);
        expect.add_term((vec![1, 0], s), zp("1")).unwrap();
        expect.add_term((vec![0, 1], Permutation::identity(2)), zp("z")).unwrap();
        assert_eq!(nf("T1 x2", 2), expect);

        // Dot-free words reduce to the plain Hecke product.
        let dotfree = nf("T1 T1", 2);
        let mut expect = AffineHeckeElement::identity(&ring, 2);
        expect
            .add_term((vec![0, 0], Permutation::transposition(2, 0)), zp("z"))
            .unwrap();
        assert_eq!(dotfree, expect);
    }

    #[test]
    fn affine_center_and_inverses() {
        assert_eq!(nf("T1 x1 x2", 2), nf("x1 x2 T1", 2));
        assert_eq!(nf("T2 x2 x3", 3), nf("x2 x3 T2", 3));
        assert_eq!(nf("T1 x1^-1 x2^-1", 2), nf("x1^-1 x2^-1 T1", 2));
        assert_eq!(nf("T1 T1^-1", 2), AffineHeckeElement::identity(&hecke_ring(), 2));
        assert_eq!(
            nf("T1 x1^2 T1^-1 T1 x1^-2 T1^-1", 2),
            AffineHeckeElement::identity(&hecke_ring(), 2)
        );
    }

    #[test]
    fn affine_normal_form_is_order_independent() {
        let ring = hecke_ring();
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..60 {
            let n = rng.gen_range(1..=3);
            let len = rng.gen_range(0..=8);
            let word = random_affine_word(&mut rng, n, len);
            let whole = ah_normal_form(&ring, &word, n).unwrap();
            let split = rng.gen_range(0..=word.len());
            let left = ah_normal_form(&ring, &word[..split], n).unwrap();
            let right = ah_normal_form(&ring, &word[split..], n).unwrap();
            assert_eq!(ah_mul(&left, &right).unwrap(), whole);
        }
    }

    #[test]
    fn affine_mul_is_associative() {
        let ring = hecke_ring();
        let mut rng = StdRng::seed_from_u64(18);
        for _ in 0..15 {
            let n = rng.gen_range(2..=3);
            let a = ah_normal_form(&ring, &random_affine_word(&mut rng, n, 3), n).unwrap();
            let b = ah_normal_form(&ring, &random_affine_word(&mut rng, n, 3), n).unwrap();
            let c = ah_normal_form(&ring, &random_affine_word(&mut rng, n, 3), n).unwrap();
            let left = ah_mul(&ah_mul(&a, &b).unwrap(), &c).unwrap();
            let right = ah_mul(&a, &ah_mul(&b, &c).unwrap()).unwrap();
            assert_eq!(left, right);
        }
    }

    #[test]
    fn affine_words_cancel_against_reversed_inverses() {
        let ring = hecke_ring();
        let mut rng = StdRng::seed_from_u64(19);
        for _ in 0..25 {
            let n = rng.gen_range(1..=3);
            let len = rng.gen_range(0..=5);
            let word = random_affine_word(&mut rng, n, len);
            let mut inverse: Vec<AhLetter> = word
                .iter()
                .map(|l| match *l {
                    AhLetter::Braid { index, power } => AhLetter::Braid { index, power: -power },
                    AhLetter::Coil { index, power } => AhLetter::Coil { index, power: -power },
                })
                .collect();
            inverse.reverse();
            let mut whole = word.clone();
            whole.extend(inverse);
            assert_eq!(
                ah_normal_form(&ring, &whole, n).unwrap(),
                AffineHeckeElement::identity(&ring, n)
            );
        }
    }

    #[test]
    fn flatten_sends_coils_to_wraps() {
        let ring = hecke_ring();
        for n in 1..=4 {
            for j in 1..=n {
                let coil = nf(&format!("x{j}"), n);
                assert_eq!(ah_flatten(&coil).unwrap(), jm_element(&ring, j, n).unwrap());
            }
        }
        let t1 = gen(2, 1);
        assert_eq!(
            ah_flatten(&nf("T1 x1 T1", 2)).unwrap(),
            hecke_mul(&t1, &t1).unwrap()
        );
        assert_eq!(
            ah_flatten(&nf("T1 T1^-1 x1", 2)).unwrap(),
            HeckeElement::identity(&ring, 2)
        );
    }

    #[test]
    fn flatten_is_an_algebra_map() {
        let ring = hecke_ring();
        let mut rng = StdRng::seed_from_u64(20);
        for _ in 0..25 {
            let n = rng.gen_range(2..=4);
            let a = ah_normal_form(&ring, &random_affine_word(&mut rng, n, 4), n).unwrap();
            let b = ah_normal_form(&ring, &random_affine_word(&mut rng, n, 4), n).unwrap();
            let lhs = ah_flatten(&ah_mul(&a, &b).unwrap()).unwrap();
            let rhs = hecke_mul(&ah_flatten(&a).unwrap(), &ah_flatten(&b).unwrap()).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn wreath_exchange_and_degeneration() {
        let x1 = WreathElement::from_basis(vec![1, 0], Permutation::identity(2), 1).unwrap();
        let x2 = WreathElement::from_basis(vec![0, 1], Permutation::identity(2), 1).unwrap();
        let s1 = WreathElement::from_basis(vec![0, 0], Permutation::transposition(2, 0), 1)
            .unwrap();
        assert_eq!(wreath_mul(&x1, &s1).unwrap(), wreath_mul(&s1, &x2).unwrap());

        // Setting z = 0 collapses the affine product onto the wreath product.
        let ring = hecke_ring();
        let mut rng = StdRng::seed_from_u64(21);
        for _ in 0..25 {
            let n = rng.gen_range(1..=3);
            let len = rng.gen_range(0..=6);
            let word = random_affine_word(&mut rng, n, len);
            let class = ah_normal_form(&ring, &word, n).unwrap();
            let mut degenerate = WreathElement::identity(n);
            for letter in &word {
                let step = match *letter {
                    AhLetter::Braid { index, power } => {
                        let s = Permutation::transposition(n, index - 1);
                        let mut acc = WreathElement::identity(n);
                        for _ in 0..power.unsigned_abs() {
                            acc = wreath_mul(
                                &acc,
                                &WreathElement::from_basis(vec![0; n], s.clone(), 1).unwrap(),
                            )
                            .unwrap();
                        }
                        acc
                    }
                    AhLetter::Coil { index, power } => {
                        let mut exps = vec![0; n];
                        exps[index - 1] = power;
                        WreathElement::from_basis(exps, Permutation::identity(n), 1).unwrap()
                    }
                };
                degenerate = wreath_mul(&degenerate, &step).unwrap();
            }
            let mut projected = WreathElement::zero(n);
            for ((a, w), c) in class.terms() {
                let constant = c.coeff(&[0]);
                if !constant.is_zero() {
                    let mut single = WreathElement::zero(n);
                    single.add_term((a.clone(), w.clone()), constant.re.clone());
                    projected = projected.add(&single).unwrap();
                }
            }
            assert_eq!(projected, degenerate);
        }
    }

    #[test]
    fn presentations_validate_and_round_trip() {
        for p in [braid_presentation(), hecke_presentation()] {
            p.validate().unwrap();
            let text = crate::term::print_presentation(&p);
            let back = crate::term::parse_presentation(&text).unwrap();
            assert_eq!(back, p);
        }
    }

    #[test]
    fn resolve_evaluates_terms_into_the_algebra() {
        let sig = hecke_signature();
        let ring = hecke_ring();
        let term = |s: &str| crate::term::parse_term(s, &sig).unwrap();
        assert_eq!(
            hecke_resolve(&term("sigma ; sigma"), &sig).unwrap(),
            hecke_mul(&gen(2, 1), &gen(2, 1)).unwrap()
        );
        assert_eq!(hecke_resolve(&term("sigma @ id(u)"), &sig).unwrap(), gen(3, 1));
        assert_eq!(hecke_resolve(&term("id(u) @ sigma"), &sig).unwrap(), gen(3, 2));
        assert_eq!(
            hecke_resolve(&term("sigma_inv"), &sig).unwrap(),
            HeckeElement::generator_inverse(&ring, 2, 1).unwrap()
        );
        for (l, r) in &hecke_presentation().relations {
            assert_eq!(
                hecke_resolve(l, &sig).unwrap(),
                hecke_resolve(r, &sig).unwrap()
            );
        }
    }

    #[test]
    fn resolve_matches_word_products() {
        let sig = hecke_signature();
        let ring = hecke_ring();
        let mut rng = StdRng::seed_from_u64(22);
        for _ in 0..10 {
            let n = rng.gen_range(2..=4);
            let len = rng.gen_range(0..=5);
            let word: Vec<i32> = (0..len)
                .map(|_| {
                    let i = rng.gen_range(1..n) as i32;
                    if rng.gen_bool(0.5) {
                        i
                    } else {
                        -i
                    }
                })
                .collect();
            let u = Letter::up("u");
            let full = ObjectWord::repeated(u.clone(), n);
            let mut lin = LinearTerm::identity(&sig, full);
            let mut direct = HeckeElement::identity(&ring, n);
            for &k in &word {
                let i = k.unsigned_abs() as usize;
                let name = if k > 0 { "sigma" } else { "sigma_inv" };
                let left = ObjectWord::repeated(u.clone(), i - 1);
                let right = ObjectWord::repeated(u.clone(), n - i - 1);
                let step = Term::whisker(&left, Term::Gen(name.into()), &right);
                lin = LinearTerm::compose(&LinearTerm::from_term(step, &sig).unwrap(), &lin)
                    .unwrap();
                let g = if k > 0 {
                    HeckeElement::generator(&ring, n, i).unwrap()
                } else {
                    HeckeElement::generator_inverse(&ring, n, i).unwrap()
                };
                direct = hecke_mul(&g, &direct).unwrap();
            }
            assert_eq!(hecke_resolve(&lin, &sig).unwrap(), direct);
        }
    }
}
