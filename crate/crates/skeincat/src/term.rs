//! Typed morphism terms over a monoidal signature.
//!
//! A signature declares generating objects (with duality and orientation
//! flags) and generating morphisms between words of objects. Terms are trees
//! built from identities, generators, vertical composition and horizontal
//! tensor; linear terms attach Laurent coefficients. Terms are deliberately
//! NOT quotiented by the interchange law: equality questions are always
//! delegated to evaluation in a concrete model with a normal form.
//!
//! The text DSL reads bottom-to-top: `f ; g` is "first f, then g" (g after
//! f), `f @ g` is the side-by-side tensor, and `;` binds tighter than `@`.

use crate::ring::{Coefficient, LaurentPoly, RingDescriptor, RingError};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TermError {
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("composition mismatch at {position}: upper expects domain `{upper_dom}` but lower provides codomain `{lower_cod}`")]
    CompositionMismatch {
        position: String,
        upper_dom: String,
        lower_cod: String,
    },
    #[error("type mismatch: expected `{expected}`, found `{found}` ({context})")]
    TypeMismatch {
        expected: String,
        found: String,
        context: String,
    },
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("braid word token `{0}` is out of range for {1} strands")]
    BraidIndexOutOfRange(i64, usize),
    #[error("braid word tokens must be nonzero")]
    ZeroBraidIndex,
    #[error("generator `{0}` has no image under the map")]
    UnmappedGenerator(String),
    #[error("bad presentation file: {0}")]
    BadPresentation(String),
    #[error(transparent)]
    Ring(#[from] RingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Orientation {
    Up,
    Down,
    None,
}

/// One letter of an object word: a generating object plus its orientation
/// (always `None` for unoriented objects).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    pub object: String,
    pub orientation: Orientation,
}

impl Letter {
    pub fn plain(object: &str) -> Self {
        Letter { object: object.to_string(), orientation: Orientation::None }
    }

    pub fn up(object: &str) -> Self {
        Letter { object: object.to_string(), orientation: Orientation::Up }
    }

    pub fn down(object: &str) -> Self {
        Letter { object: object.to_string(), orientation: Orientation::Down }
    }
}

impl fmt::Display for Letter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.orientation {
            Orientation::Up | Orientation::None => write!(f, "{}", self.object),
            Orientation::Down => write!(f, "{}v", self.object),
        }
    }
}

/// A tensor word of generating objects; the empty word is the unit object.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectWord {
    pub letters: Vec<Letter>,
}

impl ObjectWord {
    pub fn unit() -> Self {
        ObjectWord { letters: Vec::new() }
    }

    pub fn single(letter: Letter) -> Self {
        ObjectWord { letters: vec![letter] }
    }

    pub fn repeated(letter: Letter, n: usize) -> Self {
        ObjectWord { letters: vec![letter; n] }
    }

    pub fn concat(&self, other: &ObjectWord) -> ObjectWord {
        let mut letters = self.letters.clone();
        letters.extend(other.letters.iter().cloned());
        ObjectWord { letters }
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> ObjectWord {
        ObjectWord { letters: self.letters[range].to_vec() }
    }
}

impl fmt::Display for ObjectWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.letters.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GenTag {
    BraidPos,
    BraidNeg,
    Cup,
    Cap,
    DotPos,
    DotNeg,
    Plain,
}

impl GenTag {
    pub fn label(&self) -> &'static str {
        match self {
            GenTag::BraidPos => "braid_pos",
            GenTag::BraidNeg => "braid_neg",
            GenTag::Cup => "cup",
            GenTag::Cap => "cap",
            GenTag::DotPos => "dot_pos",
            GenTag::DotNeg => "dot_neg",
            GenTag::Plain => "plain",
        }
    }

    pub fn from_label(s: &str) -> Option<GenTag> {
        match s {
            "braid_pos" => Some(GenTag::BraidPos),
            "braid_neg" => Some(GenTag::BraidNeg),
            "cup" => Some(GenTag::Cup),
            "cap" => Some(GenTag::Cap),
            "dot_pos" => Some(GenTag::DotPos),
            "dot_neg" => Some(GenTag::DotNeg),
            "plain" => Some(GenTag::Plain),
        _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Duality {
    SelfDual,
    DualPair(String),
    NoDual,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectDecl {
    pub name: String,
    pub oriented: bool,
    pub duality: Duality,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenDecl {
    pub name: String,
    pub dom: ObjectWord,
    pub cod: ObjectWord,
    pub tag: GenTag,
}

/// Twist data attached to a generating object: either a scalar (the twist is
/// that multiple of the identity) or a general endomorphism term.
#[derive(Debug, Clone, PartialEq)]
pub enum TwistValue {
    Scalar(LaurentPoly),
    Morphism(LinearTerm),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Signature {
    pub ring: RingDescriptor,
    pub objects: Vec<ObjectDecl>,
    pub generators: Vec<GenDecl>,
    pub twist: BTreeMap<String, TwistValue>,
}

impl Signature {
    pub fn object(&self, name: &str) -> Option<&ObjectDecl> {
        self.objects.iter().find(|o| o.name == name)
    }

    pub fn generator(&self, name: &str) -> Option<&GenDecl> {
        self.generators.iter().find(|g| g.name == name)
    }

    /// Structural sanity: braid generators pair up with swapped words, dual
    /// pairs are symmetric, generator words mention declared objects with
    /// legal orientations.
    pub fn validate(&self) -> Result<(), TermError> {
        for o in &self.objects {
            if let Duality::DualPair(p) = &o.duality {
                let partner = self
                    .object(p)
                    .ok_or_else(|| TermError::UnknownObject(p.clone()))?;
                match &partner.duality {
                    Duality::DualPair(q) if q == &o.name => {}
                    _ => {
                        return Err(TermError::BadPresentation(format!(
                            "dual_pair flags are not symmetric between `{}` and `{}`",
                            o.name, p
                        )))
                    }
                }
            }
        }
        for g in &self.generators {
            for letter in g.dom.letters.iter().chain(&g.cod.letters) {
                let obj = self
                    .object(&letter.object)
                    .ok_or_else(|| TermError::UnknownObject(letter.object.clone()))?;
                let ok = if obj.oriented {
                    letter.orientation != Orientation::None
                } else {
                    letter.orientation == Orientation::None
                };
                if !ok {
                    return Err(TermError::BadPresentation(format!(
                        "letter `{}` in generator `{}` has an orientation incompatible with its object declaration",
                        letter, g.name
                    )));
                }
            }
            if g.tag == GenTag::BraidPos {
                let paired = self.generators.iter().any(|h| {
                    h.tag == GenTag::BraidNeg && h.dom == g.cod && h.cod == g.dom
                });
                if !paired {
                    return Err(TermError::BadPresentation(format!(
                        "braid generator `{}` has no inverse-direction partner",
                        g.name
                    )));
                }
            }
        }
        for name in self.twist.keys() {
            if self.object(name).is_none() {
                return Err(TermError::UnknownObject(name.clone()));
            }
        }
        Ok(())
    }
}

/// A morphism term: a tree of identities, generators, vertical compositions
/// (`VCompose(upper, lower)` is upper after lower) and horizontal tensors.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Id(ObjectWord),
    Gen(String),
    VCompose(Box<Term>, Box<Term>),
    HTensor(Box<Term>, Box<Term>),
}

impl Term {
    pub fn compose(upper: Term, lower: Term) -> Term {
        Term::VCompose(Box::new(upper), Box::new(lower))
    }

    pub fn tensor(left: Term, right: Term) -> Term {
        Term::HTensor(Box::new(left), Box::new(right))
    }

    /// Tensor with identities on either side, skipping empty identity
    /// factors so terms stay small and canonical.
    pub fn whisker(left: &ObjectWord, t: Term, right: &ObjectWord) -> Term {
        let mut out = t;
        if !left.is_empty() {
            out = Term::tensor(Term::Id(left.clone()), out);
        }
        if !right.is_empty() {
            out = Term::tensor(out, Term::Id(right.clone()));
        }
        out
    }

    /// Compose a nonempty sequence bottom-to-top: `stack([f, g, h])` is
    /// h ∘ g ∘ f.
    pub fn stack(steps: Vec<Term>) -> Term {
        let mut it = steps.into_iter();
        let first = it.next().expect("stack of no terms");
        it.fold(first, |acc, next| Term::compose(next, acc))
    }

    pub fn contains_tag(&self, sig: &Signature, tags: &[GenTag]) -> bool {
        match self {
            Term::Id(_) => false,
            Term::Gen(name) => sig
                .generator(name)
                .map(|g| tags.contains(&g.tag))
                .unwrap_or(false),
            Term::VCompose(u, l) => {
                u.contains_tag(sig, tags) || l.contains_tag(sig, tags)
            }
            Term::HTensor(a, b) => {
                a.contains_tag(sig, tags) || b.contains_tag(sig, tags)
            }
        }
    }
}

fn typecheck_at(
    t: &Term,
    sig: &Signature,
    path: &str,
) -> Result<(ObjectWord, ObjectWord), TermError> {
    match t {
        Term::Id(w) => Ok((w.clone(), w.clone())),
        Term::Gen(name) => {
            let g = sig
                .generator(name)
                .ok_or_else(|| TermError::UnknownGenerator(name.clone()))?;
            Ok((g.dom.clone(), g.cod.clone()))
        }
        Term::VCompose(upper, lower) => {
            let (udom, ucod) = typecheck_at(upper, sig, &format!("{path}.upper"))?;
            let (ldom, lcod) = typecheck_at(lower, sig, &format!("{path}.lower"))?;
            if udom != lcod {
                return Err(TermError::CompositionMismatch {
                    position: path.to_string(),
                    upper_dom: udom.to_string(),
                    lower_cod: lcod.to_string(),
                });
            }
            Ok((ldom, ucod))
        }
        Term::HTensor(left, right) => {
            let (ldom, lcod) = typecheck_at(left, sig, &format!("{path}.left"))?;
            let (rdom, rcod) = typecheck_at(right, sig, &format!("{path}.right"))?;
            Ok((ldom.concat(&rdom), lcod.concat(&rcod)))
        }
    }
}

/// Compute (domain, codomain) of a term, rejecting ill-typed composites.
pub fn typecheck(t: &Term, sig: &Signature) -> Result<(ObjectWord, ObjectWord), TermError> {
    typecheck_at(t, sig, "root")
}

/// A formal linear combination of terms sharing one (domain, codomain) type.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearTerm {
    pub dom: ObjectWord,
    pub cod: ObjectWord,
    ring: RingDescriptor,
    terms: BTreeMap<Term, LaurentPoly>,
}

impl LinearTerm {
    pub fn zero(ring: &RingDescriptor, dom: ObjectWord, cod: ObjectWord) -> Self {
        LinearTerm { dom, cod, ring: ring.clone(), terms: BTreeMap::new() }
    }

    pub fn from_term(t: Term, sig: &Signature) -> Result<Self, TermError> {
        let (dom, cod) = typecheck(&t, sig)?;
        let mut terms = BTreeMap::new();
        terms.insert(t, LaurentPoly::one(&sig.ring));
        Ok(LinearTerm { dom, cod, ring: sig.ring.clone(), terms })
    }

    pub fn identity(sig: &Signature, w: ObjectWord) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(Term::Id(w.clone()), LaurentPoly::one(&sig.ring));
        LinearTerm { dom: w.clone(), cod: w, ring: sig.ring.clone(), terms }
    }

    pub fn ring(&self) -> &RingDescriptor {
        &self.ring
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Term, &LaurentPoly)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// If this is a single term with coefficient one, return it.
    pub fn as_plain_term(&self) -> Option<&Term> {
        if self.terms.len() == 1 {
            let (t, c) = self.terms.iter().next().unwrap();
            if c.is_one() {
                return Some(t);
            }
        }
        None
    }

    fn insert(&mut self, t: Term, c: LaurentPoly) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(t) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get().add(&c).expect("ring mismatch inside linear term");
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &LinearTerm) -> Result<LinearTerm, TermError> {
        if self.dom != other.dom || self.cod != other.cod {
            return Err(TermError::TypeMismatch {
                expected: format!("{} -> {}", self.dom, self.cod),
                found: format!("{} -> {}", other.dom, other.cod),
                context: "adding linear terms".to_string(),
            });
        }
        let mut out = self.clone();
        for (t, c) in &other.terms {
            out.insert(t.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &LinearTerm) -> Result<LinearTerm, TermError> {
        self.add(&other.scale(&LaurentPoly::int(&self.ring, -1))?)
    }

    pub fn scale(&self, p: &LaurentPoly) -> Result<LinearTerm, TermError> {
        let mut out = LinearTerm::zero(&self.ring, self.dom.clone(), self.cod.clone());
        for (t, c) in &self.terms {
            out.insert(t.clone(), c.mul(p)?);
        }
        Ok(out)
    }

    /// Vertical composition, `upper` after `lower`; bilinear expansion.
    pub fn compose(upper: &LinearTerm, lower: &LinearTerm) -> Result<LinearTerm, TermError> {
        if upper.dom != lower.cod {
            return Err(TermError::CompositionMismatch {
                position: "root".to_string(),
                upper_dom: upper.dom.to_string(),
                lower_cod: lower.cod.to_string(),
            });
        }
        let mut out = LinearTerm::zero(&upper.ring, lower.dom.clone(), upper.cod.clone());
        for (tu, cu) in &upper.terms {
            for (tl, cl) in &lower.terms {
                out.insert(Term::compose(tu.clone(), tl.clone()), cu.mul(cl)?);
            }
        }
        Ok(out)
    }

    /// Horizontal tensor, bilinear expansion.
    pub fn tensor(left: &LinearTerm, right: &LinearTerm) -> Result<LinearTerm, TermError> {
        let mut out = LinearTerm::zero(
            &left.ring,
            left.dom.concat(&right.dom),
            left.cod.concat(&right.cod),
        );
        for (ta, ca) in &left.terms {
            for (tb, cb) in &right.terms {
                out.insert(Term::tensor(ta.clone(), tb.clone()), ca.mul(cb)?);
            }
        }
        Ok(out)
    }
}

impl fmt::Display for LinearTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0*id({})", self.dom);
        }
        let mut parts = Vec::new();
        for (t, c) in &self.terms {
            // Emit one summand per coefficient monomial so the result stays
            // inside the DSL grammar (whose coefficients are monomials).
            for (e, k) in c.terms() {
                let mono = LaurentPoly::monomial(&self.ring, e.clone(), k.clone());
                let body = print_term(t);
                if mono.is_one() {
                    parts.push(body);
                } else {
                    parts.push(format!("{mono}*{body}"));
                }
            }
        }
        write!(f, "{}", parts.join(" + "))
    }
}

/// Print a term in DSL syntax; composite children are parenthesized so the
/// tree structure survives a round trip.
pub fn print_term(t: &Term) -> String {
    fn atom(t: &Term) -> String {
        match t {
            Term::Id(w) => format!("id({w})"),
            Term::Gen(name) => name.clone(),
            _ => format!("({})", go(t)),
        }
    }
    fn go(t: &Term) -> String {
        match t {
            Term::Id(_) | Term::Gen(_) => atom(t),
            Term::VCompose(u, l) => format!("{} ; {}", atom(l), atom(u)),
            Term::HTensor(a, b) => format!("{} @ {}", atom(a), atom(b)),
        }
    }
    go(t)
}

// ---------------------------------------------------------------------------
// DSL parsing
// ---------------------------------------------------------------------------

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    sig: &'a Signature,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, sig: &'a Signature) -> Self {
        Parser { src, bytes: src.as_bytes(), pos: 0, sig }
    }

    fn err(&self, msg: &str) -> TermError {
        TermError::Syntax { pos: self.pos, msg: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && (self.bytes[self.pos] as char).is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Option<String> {
        let start = self.pos;
        let mut chars = self.src[self.pos..].char_indices().peekable();
        match chars.peek() {
            Some((_, c)) if c.is_alphabetic() || *c == '_' => {}
            _ => return None,
        }
        let mut end = start;
        for (i, c) in chars {
            if c.is_alphanumeric() || c == '_' {
                end = start + i + c.len_utf8();
            } else {
                break;
            }
        }
        self.pos = end;
        Some(self.src[start..end].to_string())
    }

    /// expr := scaled ("+" scaled)*
    fn expr(&mut self) -> Result<LinearTerm, TermError> {
        let mut acc = self.scaled()?;
        loop {
            self.skip_ws();
            if self.eat('+') {
                let next = self.scaled()?;
                acc = acc.add(&next)?;
            } else {
                break;
            }
        }
        Ok(acc)
    }

    /// scaled := [monomial ("*" | "⋅")] chain
    fn scaled(&mut self) -> Result<LinearTerm, TermError> {
        self.skip_ws();
        let save = self.pos;
        if let Some(coeff) = self.try_monomial_prefix() {
            let body = self.chain()?;
            return body.scale(&coeff);
        }
        self.pos = save;
        self.chain()
    }

    /// Attempt to read `monomial *` where the monomial uses only ring
    /// variables (or numbers); rewinds and returns None on failure.
    fn try_monomial_prefix(&mut self) -> Option<LaurentPoly> {
        let save = self.pos;
        let ring = &self.sig.ring;
        let mut coeff = LaurentPoly::one(ring);
        self.skip_ws();
        let mut negative = false;
        if self.eat('-') {
            negative = true;
        }
        let mut saw = false;
        loop {
            self.skip_ws();
            let c = self.peek()?;
            if c.is_ascii_digit() {
                let start = self.pos;
                while self
                    .peek()
                    .map(|c| c.is_ascii_digit())
                    .unwrap_or(false)
                {
                    self.pos += 1;
                }
                let n: num_bigint::BigInt = self.src[start..self.pos].parse().ok()?;
                coeff = coeff
                    .scale(&Coefficient { re: n, im: num_bigint::BigInt::from(0) })
                    .ok()?;
                saw = true;
            } else if c.is_alphabetic() || c == '_' {
                let save_name = self.pos;
                let name = self.ident()?;
                // Generator names are not monomial factors; this must be the
                // start of the atom instead.
                if ring.var_index(&name).is_err() {
                    self.pos = save_name;
                    break;
                }
                let mut power = 1i64;
                if self.eat('^') {
                    let mut sign = 1i64;
                    if self.eat('-') {
                        sign = -1;
                    }
                    let start = self.pos;
                    while self
                        .peek()
                        .map(|c| c.is_ascii_digit())
                        .unwrap_or(false)
                    {
                        self.pos += 1;
                    }
                    if start == self.pos {
                        return None;
                    }
                    power = sign * self.src[start..self.pos].parse::<i64>().ok()?;
                }
                let v = LaurentPoly::var_pow(ring, &name, power).ok()?;
                coeff = coeff.mul(&v).ok()?;
                saw = true;
            } else {
                break;
            }
            self.skip_ws();
            if self.eat('*') || self.eat('⋅') {
                // A separator either continues the monomial or starts the
                // atom; decide by looking at what follows.
                let save_sep = self.pos;
                self.skip_ws();
                if self.atom_starts_here() {
                    if !saw {
                        return None;
                    }
                    if negative {
                        coeff = coeff.neg();
                    }
                    return Some(coeff);
                }
                self.pos = save_sep;
                continue;
            }
            break;
        }
        // No explicit separator reached an atom: not a coefficient prefix.
        let _ = saw;
        self.pos = save;
        None
    }

    fn atom_starts_here(&mut self) -> bool {
        let save = self.pos;
        let result = match self.peek() {
            Some('(') => true,
            Some(c) if c.is_alphabetic() || c == '_' => match self.ident() {
                Some(name) => name == "id" || self.sig.generator(&name).is_some(),
                None => false,
            },
            _ => false,
        };
        self.pos = save;
        result
    }

    /// chain := seq ("@" seq)*  (tensor; binds looser than ";")
    fn chain(&mut self) -> Result<LinearTerm, TermError> {
        let mut acc = self.seq()?;
        loop {
            self.skip_ws();
            if self.eat('@') {
                let next = self.seq()?;
                acc = LinearTerm::tensor(&acc, &next)?;
            } else {
                break;
            }
        }
        Ok(acc)
    }

    /// seq := primary (";" primary)*  (bottom-to-top composition)
    fn seq(&mut self) -> Result<LinearTerm, TermError> {
        let mut acc = self.primary()?;
        loop {
            self.skip_ws();
            if self.eat(';') {
                let next = self.primary()?;
                acc = LinearTerm::compose(&next, &acc)?;
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn primary(&mut self) -> Result<LinearTerm, TermError> {
        self.skip_ws();
        if self.eat('(') {
            let inner = self.expr()?;
            self.skip_ws();
            if !self.eat(')') {
                return Err(self.err("expected `)`"));
            }
            return Ok(inner);
        }
        let start = self.pos;
        let name = self.ident().ok_or_else(|| self.err("expected a term"))?;
        if name == "id" {
            if !self.eat('(') {
                return Err(self.err("expected `(` after `id`"));
            }
            let word = self.word_until(')')?;
            if !self.eat(')') {
                return Err(self.err("expected `)` closing id(...)"));
            }
            return Ok(LinearTerm::identity(self.sig, word));
        }
        if self.sig.generator(&name).is_some() {
            return LinearTerm::from_term(Term::Gen(name), self.sig);
        }
        self.pos = start;
        Err(TermError::UnknownGenerator(name))
    }

    /// Parse an object word up to (not including) the closing delimiter.
    /// Letters match declared object names longest-first; oriented objects
    /// accept an optional `^` (up, the default) or `v` (down) suffix.
    fn word_until(&mut self, close: char) -> Result<ObjectWord, TermError> {
        let mut names: Vec<&str> = self.sig.objects.iter().map(|o| o.name.as_str()).collect();
        names.sort_by_key(|n| std::cmp::Reverse(n.len()));
        let mut letters = Vec::new();
        loop {
            self.skip_ws();
            match self.peek() {
                None => return Err(self.err("unterminated object word")),
                Some(c) if c == close => break,
                Some(_) => {}
            }
            let rest = &self.src[self.pos..];
            let name = names
                .iter()
                .find(|n| rest.starts_with(**n))
                .ok_or_else(|| self.err("unknown object letter"))?
                .to_string();
            self.pos += name.len();
            let decl = self.sig.object(&name).unwrap();
            let orientation = if decl.oriented {
                if self.eat('^') {
                    Orientation::Up
                } else if self.eat('v') {
                    Orientation::Down
                } else {
                    Orientation::Up
                }
            } else {
                Orientation::None
            };
            letters.push(Letter { object: name, orientation });
        }
        Ok(ObjectWord { letters })
    }
}

/// Parse a DSL expression into a type-checked linear term.
pub fn parse_term(text: &str, sig: &Signature) -> Result<LinearTerm, TermError> {
    let mut p = Parser::new(text, sig);
    let out = p.expr()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.err("trailing input after expression"));
    }
    Ok(out)
}

/// Parse an object word (outside an expression); `1` denotes the unit.
pub fn parse_word(text: &str, sig: &Signature) -> Result<ObjectWord, TermError> {
    let trimmed = text.trim();
    if trimmed == "1" || trimmed.is_empty() {
        return Ok(ObjectWord::unit());
    }
    let padded = format!("{trimmed})");
    let mut p = Parser::new(&padded, sig);
    let word = p.word_until(')')?;
    if p.pos != padded.len() - 1 {
        return Err(TermError::Syntax { pos: p.pos, msg: "trailing input in object word".into() });
    }
    Ok(word)
}

/// Parse a braid word: whitespace-separated nonzero integers `k` with
/// |k| < n, meaning the |k|-th positive (k > 0) or negative (k < 0) crossing.
pub fn parse_braid_word(text: &str, n: usize) -> Result<Vec<i32>, TermError> {
    let mut out = Vec::new();
    for tok in text.split([' ', ',', '\t', '\n']).filter(|s| !s.is_empty()) {
        let k: i64 = tok
            .parse()
            .map_err(|_| TermError::Syntax { pos: 0, msg: format!("bad braid token `{tok}`") })?;
        if k == 0 {
            return Err(TermError::ZeroBraidIndex);
        }
        if k.unsigned_abs() as usize >= n {
            return Err(TermError::BraidIndexOutOfRange(k, n));
        }
        out.push(k as i32);
    }
    Ok(out)
}

/// Sum of the crossing signs of a braid word.
pub fn writhe(word: &[i32]) -> i64 {
    word.iter().map(|&k| if k > 0 { 1i64 } else { -1 }).sum()
}

/// Apply a generator-renaming functor: every generator is replaced by its
/// image (identity on objects), extended over composition, tensor and linear
/// combinations. Generators without an image raise an error.
pub fn apply_generator_map(
    t: &LinearTerm,
    images: &BTreeMap<String, LinearTerm>,
    sig_out: &Signature,
) -> Result<LinearTerm, TermError> {
    fn map_term(
        t: &Term,
        images: &BTreeMap<String, LinearTerm>,
        sig_out: &Signature,
    ) -> Result<LinearTerm, TermError> {
        match t {
            Term::Id(w) => Ok(LinearTerm::identity(sig_out, w.clone())),
            Term::Gen(name) => images
                .get(name)
                .cloned()
                .ok_or_else(|| TermError::UnmappedGenerator(name.clone())),
            Term::VCompose(u, l) => {
                let mu = map_term(u, images, sig_out)?;
                let ml = map_term(l, images, sig_out)?;
                LinearTerm::compose(&mu, &ml)
            }
            Term::HTensor(a, b) => {
                let ma = map_term(a, images, sig_out)?;
                let mb = map_term(b, images, sig_out)?;
                LinearTerm::tensor(&ma, &mb)
            }
        }
    }
    let mut out = LinearTerm::zero(&sig_out.ring, t.dom.clone(), t.cod.clone());
    for (term, c) in t.terms() {
        let image = map_term(term, images, sig_out)?;
        out = out.add(&image.scale(c)?)?;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Presentation files
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct Presentation {
    pub signature: Signature,
    pub relations: Vec<(LinearTerm, LinearTerm)>,
}

impl Presentation {
    pub fn validate(&self) -> Result<(), TermError> {
        self.signature.validate()?;
        for (l, r) in &self.relations {
            if l.dom != r.dom || l.cod != r.cod {
                return Err(TermError::TypeMismatch {
                    expected: format!("{} -> {}", l.dom, l.cod),
                    found: format!("{} -> {}", r.dom, r.cod),
                    context: "relation sides".to_string(),
                });
            }
        }
        Ok(())
    }
}

/// Parse a presentation file. Sections `[ring]`, `[objects]`, `[generators]`,
/// `[relations]`, `[twist]`, one declaration per line; `#` starts a comment.
///
/// - ring: `vars q z ...` and optionally `coefficients gaussian`
/// - objects: `NAME [oriented] [self_dual | dual_pair PARTNER | no_dual]`
/// - generators: `NAME : WORD -> WORD [TAG]` (the unit word is `1`)
/// - relations: `EXPR = EXPR`
/// - twist: `OBJECT = POLY` or `OBJECT = term EXPR`
pub fn parse_presentation(text: &str) -> Result<Presentation, TermError> {
    #[derive(PartialEq, Clone, Copy)]
    enum Section {
        None,
        Ring,
        Objects,
        Generators,
        Relations,
        Twist,
    }
    let mut section = Section::None;
    let mut variables: Vec<String> = Vec::new();
    let mut gaussian = false;
    let mut objects: Vec<ObjectDecl> = Vec::new();
    let mut generator_lines: Vec<String> = Vec::new();
    let mut relation_lines: Vec<String> = Vec::new();
    let mut twist_lines: Vec<String> = Vec::new();

    for raw in text.lines() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        match line {
            "[ring]" => {
                section = Section::Ring;
                continue;
            }
            "[objects]" => {
                section = Section::Objects;
                continue;
            }
            "[generators]" => {
                section = Section::Generators;
                continue;
            }
            "[relations]" => {
                section = Section::Relations;
                continue;
            }
            "[twist]" => {
                section = Section::Twist;
                continue;
            }
            _ => {}
        }
        match section {
            Section::None => {
                return Err(TermError::BadPresentation(format!(
                    "declaration `{line}` appears before any section header"
                )))
            }
            Section::Ring => {
                let mut words = line.split_whitespace();
                match words.next() {
                    Some("vars") => variables.extend(words.map(str::to_string)),
                    Some("coefficients") => match words.next() {
                        Some("gaussian") => gaussian = true,
                        Some("integer") => gaussian = false,
                        other => {
                            return Err(TermError::BadPresentation(format!(
                                "unknown coefficient kind {other:?}"
                            )))
                        }
                    },
                    _ => {
                        return Err(TermError::BadPresentation(format!(
                            "bad ring line `{line}`"
                        )))
                    }
                }
            }
            Section::Objects => {
                let mut words = line.split_whitespace();
                let name = words
                    .next()
                    .ok_or_else(|| TermError::BadPresentation("empty object line".into()))?
                    .to_string();
                let mut oriented = false;
                let mut duality = Duality::NoDual;
                while let Some(w) = words.next() {
                    match w {
                        "oriented" => oriented = true,
                        "self_dual" => duality = Duality::SelfDual,
                        "no_dual" => duality = Duality::NoDual,
                        "dual_pair" => {
                            let partner = words.next().ok_or_else(|| {
                                TermError::BadPresentation(
                                    "dual_pair needs a partner name".into(),
                                )
                            })?;
                            duality = Duality::DualPair(partner.to_string());
                        }
                        other => {
                            return Err(TermError::BadPresentation(format!(
                                "unknown object flag `{other}`"
                            )))
                        }
                    }
                }
                objects.push(ObjectDecl { name, oriented, duality });
            }
            Section::Generators => generator_lines.push(line.to_string()),
            Section::Relations => relation_lines.push(line.to_string()),
            Section::Twist => twist_lines.push(line.to_string()),
        }
    }

    let ring = RingDescriptor {
        variables,
        coefficient_kind: if gaussian {
            crate::ring::CoefficientKind::GaussianInteger
        } else {
            crate::ring::CoefficientKind::Integer
        },
    };
    // Two passes: words in generator declarations need the object list.
    let mut sig = Signature { ring, objects, generators: Vec::new(), twist: BTreeMap::new() };
    for line in &generator_lines {
        let (name, rest) = line.split_once(':').ok_or_else(|| {
            TermError::BadPresentation(format!("generator line `{line}` needs `name : dom -> cod`"))
        })?;
        let (dom_txt, cod_rest) = rest.split_once("->").ok_or_else(|| {
            TermError::BadPresentation(format!("generator line `{line}` needs `->`"))
        })?;
        let cod_rest = cod_rest.trim();
        // An optional trailing tag word.
        let (cod_txt, tag) = match cod_rest.rsplit_once(char::is_whitespace) {
            Some((head, tail)) if GenTag::from_label(tail).is_some() => {
                (head.to_string(), GenTag::from_label(tail).unwrap())
            }
            _ => (cod_rest.to_string(), GenTag::Plain),
        };
        let dom = parse_word(dom_txt.trim(), &sig)?;
        let cod = parse_word(cod_txt.trim(), &sig)?;
        sig.generators.push(GenDecl { name: name.trim().to_string(), dom, cod, tag });
    }
    for line in &twist_lines {
        let (obj, rhs) = line.split_once('=').ok_or_else(|| {
            TermError::BadPresentation(format!("twist line `{line}` needs `object = value`"))
        })?;
        let obj = obj.trim().to_string();
        let rhs = rhs.trim();
        let value = if let Some(expr) = rhs.strip_prefix("term ") {
            TwistValue::Morphism(parse_term(expr, &sig)?)
        } else {
            TwistValue::Scalar(LaurentPoly::parse(&sig.ring, rhs)?)
        };
        sig.twist.insert(obj, value);
    }
    let mut relations = Vec::new();
    for line in &relation_lines {
        let (lhs, rhs) = line.split_once('=').ok_or_else(|| {
            TermError::BadPresentation(format!("relation line `{line}` needs `lhs = rhs`"))
        })?;
        relations.push((parse_term(lhs.trim(), &sig)?, parse_term(rhs.trim(), &sig)?));
    }
    let pres = Presentation { signature: sig, relations };
    pres.validate()?;
    Ok(pres)
}

/// Render a presentation in the same file format `parse_presentation` reads.
pub fn print_presentation(p: &Presentation) -> String {
    let mut out = String::new();
    out.push_str("[ring]\n");
    out.push_str(&format!("vars {}\n", p.signature.ring.variables.join(" ")));
    if p.signature.ring.coefficient_kind == crate::ring::CoefficientKind::GaussianInteger {
        out.push_str("coefficients gaussian\n");
    }
    out.push_str("\n[objects]\n");
    for o in &p.signature.objects {
        let mut line = o.name.clone();
        if o.oriented {
            line.push_str(" oriented");
        }
        match &o.duality {
            Duality::SelfDual => line.push_str(" self_dual"),
            Duality::DualPair(q) => line.push_str(&format!(" dual_pair {q}")),
            Duality::NoDual => {}
        }
        out.push_str(&line);
        out.push('\n');
    }
    out.push_str("\n[generators]\n");
    for g in &p.signature.generators {
        let dom = if g.dom.is_empty() { "1".to_string() } else { g.dom.to_string() };
        let cod = if g.cod.is_empty() { "1".to_string() } else { g.cod.to_string() };
        if g.tag == GenTag::Plain {
            out.push_str(&format!("{} : {} -> {}\n", g.name, dom, cod));
        } else {
            out.push_str(&format!("{} : {} -> {} {}\n", g.name, dom, cod, g.tag.label()));
        }
    }
    if !p.relations.is_empty() {
        out.push_str("\n[relations]\n");
        for (l, r) in &p.relations {
            out.push_str(&format!("{l} = {r}\n"));
        }
    }
    if !p.signature.twist.is_empty() {
        out.push_str("\n[twist]\n");
        for (obj, v) in &p.signature.twist {
            match v {
                TwistValue::Scalar(s) => out.push_str(&format!("{obj} = {s}\n")),
                TwistValue::Morphism(m) => out.push_str(&format!("{obj} = term {m}\n")),
            }
        }
    }
    out
}

/// Rewrite a term into a canonical shape under the strict unit laws only:
/// identity layers inside a composite are dropped, unit identity factors
/// inside a tensor vanish, adjacent identity factors merge into one, and
/// both kinds of chain are right associated. Interchange is never applied,
/// so genuinely different factorizations of the same morphism stay
/// distinct. The input must be well typed; an all-identity composite keeps
/// one of its layers so the boundary word survives.
pub fn normalize_term(t: &Term) -> Term {
    fn compose_layers(t: &Term, out: &mut Vec<Term>) {
        match t {
            Term::VCompose(upper, lower) => {
                compose_layers(upper, out);
                compose_layers(lower, out);
            }
            other => out.push(normalize_term(other)),
        }
    }
    fn tensor_factors(t: &Term, out: &mut Vec<Term>) {
        match t {
            Term::HTensor(left, right) => {
                tensor_factors(left, out);
                tensor_factors(right, out);
            }
            other => out.push(normalize_term(other)),
        }
    }
    match t {
        Term::Id(_) | Term::Gen(_) => t.clone(),
        Term::VCompose(..) => {
            let mut layers = Vec::new();
            compose_layers(t, &mut layers);
            let mut kept: Vec<Term> =
                layers.iter().filter(|l| !matches!(l, Term::Id(_))).cloned().collect();
            if kept.is_empty() {
                // Every layer was an identity on the same word; keep one.
                kept.push(layers.remove(0));
            }
            let mut term = kept.pop().expect("at least one layer");
            while let Some(upper) = kept.pop() {
                term = Term::VCompose(Box::new(upper), Box::new(term));
            }
            term
        }
        Term::HTensor(..) => {
            let mut factors = Vec::new();
            tensor_factors(t, &mut factors);
            let mut merged: Vec<Term> = Vec::new();
            for f in factors {
                match (&f, merged.last_mut()) {
                    (Term::Id(w), _) if w.is_empty() => {}
                    (Term::Id(w), Some(Term::Id(prev))) => {
                        *prev = prev.concat(w);
                    }
                    _ => merged.push(f),
                }
            }
            if merged.is_empty() {
                return Term::Id(ObjectWord::unit());
            }
            let mut term = merged.pop().expect("at least one factor");
            while let Some(left) = merged.pop() {
                term = Term::HTensor(Box::new(left), Box::new(term));
            }
            term
        }
    }
}

/// Apply `normalize_term` to every summand of a linear combination,
/// re-merging coefficients whose terms collide afterwards.
pub fn normalize_linear(t: &LinearTerm, sig: &Signature) -> Result<LinearTerm, TermError> {
    let mut out = LinearTerm::zero(&t.ring, t.dom.clone(), t.cod.clone());
    for (term, coeff) in &t.terms {
        let summand = LinearTerm::from_term(normalize_term(term), sig)?.scale(coeff)?;
        out = out.add(&summand)?;
    }
    Ok(out)
}
