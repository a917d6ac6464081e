//! Trace constructions over a braided signature.
//!
//! Two different cylinders live here. [`HtrMorphism`] is a morphism of the
//! annular category presented by a wrap word and a representative that
//! threads it around the back; [`htr_compose`] and [`htr_tensor`] combine
//! such pairs, and [`theta`] / [`theta_prime`] translate between pairs and
//! dotted terms. [`qtrace`] closes a one-letter diagram endomorphism around
//! the annulus to a scalar. [`vtrace_cocenter`] computes endomorphisms
//! modulo commutators for the truncated diagram towers by exact
//! fraction-free elimination. [`golf_census`] counts classes in the free
//! signature on one object, where the pair construction and the dotted
//! construction genuinely differ.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::affinize::{
    affinize_presentation, block_braid, coil_as_dots, coil_inverse_as_dots, flatten_term,
    AffinizeError, AffinizeOptions,
};
use crate::ring::{LaurentPoly, RingDescriptor, RingError};
use crate::term::{
    Duality, GenDecl, GenTag, Letter, LinearTerm, ObjectWord, Orientation, Presentation,
    Signature, Term, TermError,
};
use crate::tl::{
    kb_resolve, tl_basis, tl_compose, tl_presentation, tl_signature, PlanarMatching, TLElement,
    TlError,
};
use crate::towers::{hecke_mul, hecke_ring, HeckeElement, Permutation, TowerError};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("representative has the wrong shape: {0}")]
    BadRepresentative(String),
    #[error("cannot compose: first factor ends at {0}, second starts at {1}")]
    BoundaryMismatch(String, String),
    #[error("summands wrap different words: {0} vs {1}")]
    MixedWrap(String, String),
    #[error("no duality data for {0}")]
    MissingDuality(String),
    #[error("only endomorphisms can be closed, got {0} -> {1}")]
    NotEndomorphism(String, String),
    #[error("truncation bound {0} exceeds the supported maximum {1}")]
    TruncationTooLarge(usize, usize),
    #[error("element lives at level {0}, beyond the truncation bound {1}")]
    LevelOutOfRange(usize, usize),
    #[error("coordinate vector has length {0}, expected {1}")]
    BadVectorLength(usize, usize),
    #[error("element does not belong to the {0} model")]
    WrongModel(&'static str),
    #[error(transparent)]
    Affinize(#[from] AffinizeError),
    #[error(transparent)]
    Term(#[from] TermError),
    #[error(transparent)]
    Tl(#[from] TlError),
    #[error(transparent)]
    Tower(#[from] TowerError),
    #[error(transparent)]
    Ring(#[from] RingError),
}

/// A morphism `source -> target` of the annular category, presented by a
/// word `wrap` threaded around the back of the cylinder: the representative
/// `f` is an ordinary morphism `source (x) wrap -> wrap (x) target`.
///
/// Two presentations name the same annular morphism when one slides into
/// the other around the cylinder, so equality of the raw data is finer than
/// equality of the classes. Classes are compared by evaluating
/// [`theta_prime`] images in a model, never intrinsically.
#[derive(Debug, Clone, PartialEq)]
pub struct HtrMorphism {
    pub source: ObjectWord,
    pub target: ObjectWord,
    pub wrap: ObjectWord,
    pub f: LinearTerm,
}

impl HtrMorphism {
    /// Wrap a representative after checking it against the announced
    /// boundary words.
    pub fn new(
        source: ObjectWord,
        target: ObjectWord,
        wrap: ObjectWord,
        f: LinearTerm,
    ) -> Result<Self, TraceError> {
        let dom = source.concat(&wrap);
        let cod = wrap.concat(&target);
        if f.dom != dom || f.cod != cod {
            return Err(TraceError::BadRepresentative(format!(
                "expected {} -> {}, got {} -> {}",
                dom, cod, f.dom, f.cod
            )));
        }
        Ok(HtrMorphism {
            source,
            target,
            wrap,
            f,
        })
    }

    /// The pair with an empty wrap: an ordinary morphism seen on the
    /// cylinder.
    pub fn plain(f: &LinearTerm) -> Self {
        HtrMorphism {
            source: f.dom.clone(),
            target: f.cod.clone(),
            wrap: ObjectWord::unit(),
            f: f.clone(),
        }
    }
}

/// Tensor a linear term with identity words on both sides, skipping empty
/// factors.
fn pad(
    sig: &Signature,
    left: &ObjectWord,
    t: &LinearTerm,
    right: &ObjectWord,
) -> Result<LinearTerm, TermError> {
    let mut out = t.clone();
    if !left.is_empty() {
        out = LinearTerm::tensor(&LinearTerm::identity(sig, left.clone()), &out)?;
    }
    if !right.is_empty() {
        out = LinearTerm::tensor(&out, &LinearTerm::identity(sig, right.clone()))?;
    }
    Ok(out)
}

/// Compose two annular pairs, `f` first and `g` after it. The wraps
/// concatenate: `f` acts while the wrap of `g` waits on the right, then `g`
/// acts while the spent wrap of `f` waits on the left.
pub fn htr_compose(
    g: &HtrMorphism,
    f: &HtrMorphism,
    sig: &Signature,
) -> Result<HtrMorphism, TraceError> {
    if f.target != g.source {
        return Err(TraceError::BoundaryMismatch(
            f.target.to_string(),
            g.source.to_string(),
        ));
    }
    let lower = pad(sig, &ObjectWord::unit(), &f.f, &g.wrap)?;
    let upper = pad(sig, &f.wrap, &g.f, &ObjectWord::unit())?;
    HtrMorphism::new(
        f.source.clone(),
        g.target.clone(),
        f.wrap.concat(&g.wrap),
        LinearTerm::compose(&upper, &lower)?,
    )
}

/// Tensor two annular pairs. The wraps concatenate, but they sit on the far
/// side of the cylinder, so the second source crosses over the first wrap
/// on the way in and the first target crosses over the second wrap on the
/// way out. The crossing directions here pair up with the ones baked into
/// [`coil_as_dots`]; flipping either side alone breaks the round trip
/// through [`theta_prime`].
pub fn htr_tensor(
    a: &HtrMorphism,
    b: &HtrMorphism,
    sig: &Signature,
) -> Result<HtrMorphism, TraceError> {
    let under = LinearTerm::from_term(block_braid(sig, &b.source, &a.wrap, false)?, sig)?;
    let lower = pad(sig, &a.source, &under, &b.wrap)?;
    let mid = LinearTerm::tensor(&a.f, &b.f)?;
    let over = LinearTerm::from_term(block_braid(sig, &b.wrap, &a.target, true)?, sig)?;
    let upper = pad(sig, &a.wrap, &over, &b.target)?;
    HtrMorphism::new(
        a.source.concat(&b.source),
        a.target.concat(&b.target),
        a.wrap.concat(&b.wrap),
        LinearTerm::compose(&upper, &LinearTerm::compose(&mid, &lower)?)?,
    )
}

/// The dual letter: the declared partner object (itself when self dual)
/// with the orientation reversed.
fn dual_letter(sig: &Signature, l: &Letter) -> Result<Letter, TraceError> {
    let decl = sig
        .object(&l.object)
        .ok_or_else(|| TermError::UnknownObject(l.object.clone()))?;
    let partner = match &decl.duality {
        Duality::SelfDual => l.object.clone(),
        Duality::DualPair(p) => p.clone(),
        Duality::NoDual => return Err(TraceError::MissingDuality(l.to_string())),
    };
    Ok(match l.orientation {
        Orientation::None => Letter::plain(&partner),
        Orientation::Up => Letter::down(&partner),
        Orientation::Down => Letter::up(&partner),
    })
}

/// The dual of a word: dual letters in reverse order.
fn dual_word(sig: &Signature, w: &ObjectWord) -> Result<ObjectWord, TraceError> {
    let mut letters = Vec::with_capacity(w.len());
    for l in w.letters.iter().rev() {
        letters.push(dual_letter(sig, l)?);
    }
    Ok(ObjectWord { letters })
}

/// The declared cup with codomain exactly `a (x) b`.
fn find_cup(sig: &Signature, a: &Letter, b: &Letter) -> Result<Term, TraceError> {
    sig.generators
        .iter()
        .find(|g| {
            g.tag == GenTag::Cup && g.dom.is_empty() && g.cod.letters == [a.clone(), b.clone()]
        })
        .map(|g| Term::Gen(g.name.clone()))
        .ok_or_else(|| TraceError::MissingDuality(format!("cup for {a} {b}")))
}

/// The declared cap with domain exactly `a (x) b`.
fn find_cap(sig: &Signature, a: &Letter, b: &Letter) -> Result<Term, TraceError> {
    sig.generators
        .iter()
        .find(|g| {
            g.tag == GenTag::Cap && g.cod.is_empty() && g.dom.letters == [a.clone(), b.clone()]
        })
        .map(|g| Term::Gen(g.name.clone()))
        .ok_or_else(|| TraceError::MissingDuality(format!("cap for {a} {b}")))
}

/// The word-sized cup `1 -> dual(x) (x) x`, nested so the first letter's
/// cup is innermost.
fn unit_right(sig: &Signature, x: &ObjectWord) -> Result<Term, TraceError> {
    if x.is_empty() {
        return Ok(Term::Id(ObjectWord::unit()));
    }
    let head = &x.letters[0];
    let rest = x.slice(1..x.len());
    let dual_head = dual_letter(sig, head)?;
    let cup = find_cup(sig, &dual_head, head)?;
    if rest.is_empty() {
        return Ok(cup);
    }
    let inner = unit_right(sig, &rest)?;
    let dual_rest = dual_word(sig, &rest)?;
    Ok(Term::compose(
        Term::whisker(&dual_rest, cup, &rest),
        inner,
    ))
}

/// The word-sized cap `x (x) dual(x) -> 1`, nested so the last letter's cap
/// is innermost.
fn counit_right(sig: &Signature, x: &ObjectWord) -> Result<Term, TraceError> {
    if x.is_empty() {
        return Ok(Term::Id(ObjectWord::unit()));
    }
    let head = &x.letters[0];
    let rest = x.slice(1..x.len());
    let dual_head = dual_letter(sig, head)?;
    let cap = find_cap(sig, head, &dual_head)?;
    if rest.is_empty() {
        return Ok(cap);
    }
    let inner = counit_right(sig, &rest)?;
    let head_word = ObjectWord::single(head.clone());
    let dual_head_word = ObjectWord::single(dual_head);
    Ok(Term::compose(
        cap,
        Term::whisker(&head_word, inner, &dual_head_word),
    ))
}

/// The other-handed cup `1 -> x (x) dual(x)`, nested so the first letter's
/// cup is outermost.
fn unit_left(sig: &Signature, x: &ObjectWord) -> Result<Term, TraceError> {
    if x.is_empty() {
        return Ok(Term::Id(ObjectWord::unit()));
    }
    let head = &x.letters[0];
    let rest = x.slice(1..x.len());
    let dual_head = dual_letter(sig, head)?;
    let cup = find_cup(sig, head, &dual_head)?;
    if rest.is_empty() {
        return Ok(cup);
    }
    let inner = unit_left(sig, &rest)?;
    let head_word = ObjectWord::single(head.clone());
    let dual_head_word = ObjectWord::single(dual_head);
    Ok(Term::compose(
        Term::whisker(&head_word, inner, &dual_head_word),
        cup,
    ))
}

/// The other-handed cap `dual(x) (x) x -> 1`, nested so the first letter's
/// cap is outermost.
fn counit_left(sig: &Signature, x: &ObjectWord) -> Result<Term, TraceError> {
    if x.is_empty() {
        return Ok(Term::Id(ObjectWord::unit()));
    }
    let head = &x.letters[0];
    let rest = x.slice(1..x.len());
    let dual_head = dual_letter(sig, head)?;
    let cap = find_cap(sig, &dual_head, head)?;
    if rest.is_empty() {
        return Ok(cap);
    }
    let inner = counit_left(sig, &rest)?;
    let dual_rest = dual_word(sig, &rest)?;
    Ok(Term::compose(
        inner,
        Term::whisker(&dual_rest, cap, &rest),
    ))
}

/// The single letter a dot generator decorates.
fn single_letter(decl: &GenDecl) -> Result<Letter, TraceError> {
    if decl.dom.len() == 1 && decl.dom == decl.cod {
        Ok(decl.dom.letters[0].clone())
    } else {
        Err(TraceError::BadRepresentative(format!(
            "dot generator {} is not a single-letter endomorphism",
            decl.name
        )))
    }
}

/// Rewrite a term of a dotted signature as an annular pair: a forward dot
/// becomes a wrap by its letter's dual, bent in with a cup and out with a
/// cap; an inverse dot becomes a straight wrap by the letter itself;
/// everything else keeps an empty wrap. Composition and tensor are pushed
/// through [`htr_compose`] and [`htr_tensor`]. Summands of a linear
/// combination must agree on the wrap word.
pub fn theta(t: &LinearTerm, sig: &Signature) -> Result<HtrMorphism, TraceError> {
    let mut acc: Option<HtrMorphism> = None;
    for (term, coeff) in t.terms() {
        let m = theta_term(term, sig)?;
        let scaled = HtrMorphism {
            f: m.f.scale(coeff)?,
            ..m
        };
        acc = Some(match acc {
            None => scaled,
            Some(prev) => {
                if prev.wrap != scaled.wrap {
                    return Err(TraceError::MixedWrap(
                        prev.wrap.to_string(),
                        scaled.wrap.to_string(),
                    ));
                }
                HtrMorphism {
                    f: prev.f.add(&scaled.f)?,
                    ..prev
                }
            }
        });
    }
    Ok(acc.unwrap_or_else(|| HtrMorphism::plain(t)))
}

fn theta_term(t: &Term, sig: &Signature) -> Result<HtrMorphism, TraceError> {
    match t {
        Term::Id(w) => Ok(HtrMorphism::plain(&LinearTerm::identity(sig, w.clone()))),
        Term::Gen(name) => {
            let decl = sig
                .generator(name)
                .ok_or_else(|| TermError::UnknownGenerator(name.clone()))?;
            match decl.tag {
                GenTag::DotPos => {
                    let letter = single_letter(decl)?;
                    let dual = dual_letter(sig, &letter)?;
                    let cup = find_cup(sig, &dual, &letter)?;
                    let cap = find_cap(sig, &letter, &dual)?;
                    let word = ObjectWord::single(letter);
                    HtrMorphism::new(
                        word.clone(),
                        word,
                        ObjectWord::single(dual),
                        LinearTerm::from_term(Term::tensor(cup, cap), sig)?,
                    )
                }
                GenTag::DotNeg => {
                    let letter = single_letter(decl)?;
                    let word = ObjectWord::single(letter);
                    HtrMorphism::new(
                        word.clone(),
                        word.clone(),
                        word.clone(),
                        LinearTerm::identity(sig, word.concat(&word)),
                    )
                }
                _ => Ok(HtrMorphism::plain(&LinearTerm::from_term(
                    t.clone(),
                    sig,
                )?)),
            }
        }
        Term::VCompose(upper, lower) => {
            let u = theta_term(upper, sig)?;
            let l = theta_term(lower, sig)?;
            htr_compose(&u, &l, sig)
        }
        Term::HTensor(left, right) => {
            let a = theta_term(left, sig)?;
            let b = theta_term(right, sig)?;
            htr_tensor(&a, &b, sig)
        }
    }
}

/// Evaluate an annular pair back into the dotted signature: feed the wrap
/// in from nothing, coil the whole input block once around the cylinder,
/// act with the representative, and close the wrap off again. A pair with
/// an empty wrap comes back as its representative, unchanged.
pub fn theta_prime(m: &HtrMorphism, sig: &Signature) -> Result<LinearTerm, TraceError> {
    if m.wrap.is_empty() {
        return Ok(m.f.clone());
    }
    let zdual = dual_word(sig, &m.wrap)?;
    let eta = LinearTerm::from_term(unit_left(sig, &m.wrap)?, sig)?;
    let mut out = pad(sig, &m.source, &eta, &ObjectWord::unit())?;
    let coil = coil_as_dots(&m.source.concat(&m.wrap), &zdual, sig)?;
    out = LinearTerm::compose(&coil, &out)?;
    out = LinearTerm::compose(&pad(sig, &zdual, &m.f, &ObjectWord::unit())?, &out)?;
    let eps = LinearTerm::from_term(counit_left(sig, &m.wrap)?, sig)?;
    out = LinearTerm::compose(&pad(sig, &ObjectWord::unit(), &eps, &m.target)?, &out)?;
    Ok(out)
}

/// A planar matching as a term over a one-letter signature with cups and
/// caps: innermost adjacent bottom arcs leave as caps, then innermost
/// adjacent top arcs arrive as cups, and whatever remains runs straight
/// through.
pub fn matching_term(mat: &PlanarMatching, sig: &Signature) -> Result<LinearTerm, TraceError> {
    let cup = sig
        .generators
        .iter()
        .find(|g| g.tag == GenTag::Cup)
        .ok_or_else(|| TraceError::MissingDuality("cup".to_string()))?;
    let cap = sig
        .generators
        .iter()
        .find(|g| g.tag == GenTag::Cap)
        .ok_or_else(|| TraceError::MissingDuality("cap".to_string()))?;
    let letter = cup.cod.letters[0].clone();
    let layers = matching_layers(
        mat.m,
        mat.n,
        mat.pairs(),
        &letter,
        &cup.name,
        &cap.name,
    );
    Ok(LinearTerm::from_term(Term::stack(layers), sig)?)
}

fn matching_layers(
    m: usize,
    n: usize,
    pairs: Vec<(usize, usize)>,
    letter: &Letter,
    cup: &str,
    cap: &str,
) -> Vec<Term> {
    let rep = |k: usize| ObjectWord::repeated(letter.clone(), k);
    // A minimal-span arc on one side has no room for anything nested under
    // it, so it joins adjacent points; peel those off first.
    if let Some(idx) = pairs.iter().position(|&(a, b)| b == a + 1 && b < m) {
        let (a, _) = pairs[idx];
        let rest = remove_pair(pairs, idx, a);
        let mut layers = vec![Term::whisker(
            &rep(a),
            Term::Gen(cap.to_string()),
            &rep(m - a - 2),
        )];
        layers.extend(matching_layers(m - 2, n, rest, letter, cup, cap));
        return layers;
    }
    if let Some(idx) = pairs.iter().position(|&(a, b)| b == a + 1 && a >= m) {
        let (a, _) = pairs[idx];
        let j = a - m;
        let rest = remove_pair(pairs, idx, a);
        let mut layers = matching_layers(m, n - 2, rest, letter, cup, cap);
        layers.push(Term::whisker(
            &rep(j),
            Term::Gen(cup.to_string()),
            &rep(n - j - 2),
        ));
        return layers;
    }
    // No arcs left on either side: a noncrossing all-through matching is
    // the identity.
    vec![Term::Id(rep(m))]
}

/// Drop the pair at `idx` and close the index gap left by points `a`,
/// `a + 1`.
fn remove_pair(mut pairs: Vec<(usize, usize)>, idx: usize, a: usize) -> Vec<(usize, usize)> {
    pairs.swap_remove(idx);
    pairs
        .into_iter()
        .map(|(p, q)| {
            let shift = |k: usize| if k > a + 1 { k - 2 } else { k };
            (shift(p), shift(q))
        })
        .collect()
}

/// The one-letter planar presentation with its dots adjoined: the home of
/// annular closures of planar diagrams.
fn annular_strand_presentation() -> Result<Presentation, AffinizeError> {
    affinize_presentation(
        &tl_presentation(),
        AffinizeOptions {
            pivotal: true,
            oriented: false,
        },
    )
}

/// Close a planar-diagram endomorphism around the annulus and evaluate the
/// resulting scalar: bend all strands up, pull them once around the back
/// with an inverse coil, apply the endomorphism, and bend back down. The
/// closure of the identity on n strands is the n-th power of the loop
/// value.
pub fn qtrace(f: &TLElement) -> Result<LaurentPoly, TraceError> {
    if f.m != f.n {
        return Err(TraceError::NotEndomorphism(
            f.m.to_string(),
            f.n.to_string(),
        ));
    }
    let pres = annular_strand_presentation()?;
    let sig = &pres.signature;
    let letter = Letter::plain("o");
    let word = ObjectWord::repeated(letter, f.n);
    let mut term = LinearTerm::zero(f.ring(), word.clone(), word);
    for (mat, c) in f.terms() {
        term = term.add(&matching_term(mat, sig)?.scale(c)?)?;
    }
    qtrace_term(&term, sig)
}

/// The annular closure of an endomorphism term over a dotted one-letter
/// signature. Dots inside the term are welcome; they flatten into twists
/// along with the closing coil.
pub fn qtrace_term(f: &LinearTerm, sig: &Signature) -> Result<LaurentPoly, TraceError> {
    if f.dom != f.cod {
        return Err(TraceError::NotEndomorphism(
            f.dom.to_string(),
            f.cod.to_string(),
        ));
    }
    let x = f.dom.clone();
    let total = if x.is_empty() {
        f.clone()
    } else {
        let xdual = dual_word(sig, &x)?;
        let eta = LinearTerm::from_term(unit_right(sig, &x)?, sig)?;
        let coil_inv = coil_inverse_as_dots(&x, &xdual, sig)?;
        let mid = pad(sig, &ObjectWord::unit(), f, &xdual)?;
        let eps = LinearTerm::from_term(counit_right(sig, &x)?, sig)?;
        let stack = LinearTerm::compose(&coil_inv, &eta)?;
        let stack = LinearTerm::compose(&mid, &stack)?;
        LinearTerm::compose(&eps, &stack)?
    };
    let flat = flatten_term(&total, sig)?;
    let el = kb_resolve(&flat, sig)?;
    Ok(el.coeff(&PlanarMatching::identity(0)))
}

/// Which tower of endomorphism algebras to quotient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CocenterModel {
    /// Planar matchings over the loop parameter; hom spaces exist between
    /// any two levels of equal parity, and their commutators glue the
    /// levels together.
    Tl,
    /// The braid-tower algebras; homs between distinct levels are zero, so
    /// only same-level commutators arise.
    Hecke,
}

impl CocenterModel {
    fn label(&self) -> &'static str {
        match self {
            CocenterModel::Tl => "tl",
            CocenterModel::Hecke => "hecke",
        }
    }
}

/// The direct sum of the endomorphism algebras up to a level bound, modulo
/// the span of all commutators `f (then) g - g (then) f` with the two
/// factors running over hom-space bases in both orders. Carries enough
/// elimination data to project further vectors onto the quotient.
#[derive(Debug, Clone)]
pub struct CocenterResult {
    pub model: CocenterModel,
    pub max_level: usize,
    /// Dimension of the endomorphism space at each level `0..=max_level`.
    pub level_dims: Vec<usize>,
    offsets: Vec<usize>,
    dim: usize,
    ring: RingDescriptor,
    /// Echelon rows spanning the commutator subspace, and the pivot
    /// coordinate of each row.
    rows: Vec<Vec<LaurentPoly>>,
    pivots: Vec<usize>,
    quotient: Vec<usize>,
}

/// A vector pushed onto the cocenter, with denominators cleared: the class
/// is `coords` divided by `scale`. Zero needs no scale at all; for
/// anything else compare through [`Projection::same_class`].
#[derive(Debug, Clone)]
pub struct Projection {
    pub coords: Vec<LaurentPoly>,
    pub scale: LaurentPoly,
}

impl Projection {
    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    /// Exact equality of the underlying classes, by cross-multiplying the
    /// cleared denominators.
    pub fn same_class(&self, other: &Projection) -> Result<bool, TraceError> {
        if self.coords.len() != other.coords.len() {
            return Err(TraceError::BadVectorLength(
                other.coords.len(),
                self.coords.len(),
            ));
        }
        for (a, b) in self.coords.iter().zip(&other.coords) {
            if a.mul(&other.scale)? != b.mul(&self.scale)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

impl CocenterResult {
    pub fn total_dim(&self) -> usize {
        self.dim
    }

    /// Rank of the commutator span.
    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn quotient_dim(&self) -> usize {
        self.dim - self.rows.len()
    }

    /// The surviving coordinates as (level, index within the level basis)
    /// labels.
    pub fn quotient_basis(&self) -> Vec<(usize, usize)> {
        self.quotient.iter().map(|&j| self.locate(j)).collect()
    }

    fn locate(&self, j: usize) -> (usize, usize) {
        let mut level = 0;
        for (l, &off) in self.offsets.iter().enumerate() {
            if j >= off {
                level = l;
            }
        }
        (level, j - self.offsets[level])
    }

    /// The global coordinate vector of a planar-diagram endomorphism.
    pub fn embed_tl(&self, el: &TLElement) -> Result<Vec<LaurentPoly>, TraceError> {
        if self.model != CocenterModel::Tl {
            return Err(TraceError::WrongModel(self.model.label()));
        }
        if el.m != el.n {
            return Err(TraceError::NotEndomorphism(
                el.m.to_string(),
                el.n.to_string(),
            ));
        }
        if el.n > self.max_level {
            return Err(TraceError::LevelOutOfRange(el.n, self.max_level));
        }
        let mut v = vec![LaurentPoly::zero(&self.ring); self.dim];
        for (i, mat) in tl_basis(el.n, el.n)?.iter().enumerate() {
            v[self.offsets[el.n] + i] = el.coeff(mat);
        }
        Ok(v)
    }

    /// The global coordinate vector of a braid-tower element.
    pub fn embed_hecke(&self, el: &HeckeElement) -> Result<Vec<LaurentPoly>, TraceError> {
        if self.model != CocenterModel::Hecke {
            return Err(TraceError::WrongModel(self.model.label()));
        }
        if el.n() > self.max_level {
            return Err(TraceError::LevelOutOfRange(el.n(), self.max_level));
        }
        let mut v = vec![LaurentPoly::zero(&self.ring); self.dim];
        for (i, w) in Permutation::all(el.n()).iter().enumerate() {
            v[self.offsets[el.n()] + i] = el.coeff(w);
        }
        Ok(v)
    }

    /// Reduce a global vector by the commutator echelon. Each step clears
    /// one pivot coordinate by cross-multiplication, so the result carries
    /// the product of the pivots used as its denominator.
    pub fn project(&self, v: &[LaurentPoly]) -> Result<Projection, TraceError> {
        if v.len() != self.dim {
            return Err(TraceError::BadVectorLength(v.len(), self.dim));
        }
        let mut v = v.to_vec();
        let mut scale = LaurentPoly::one(&self.ring);
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            let a = v[p].clone();
            if a.is_zero() {
                continue;
            }
            let pivot = row[p].clone();
            for (entry, r) in v.iter_mut().zip(row) {
                *entry = entry.mul(&pivot)?.sub(&a.mul(r)?)?;
            }
            scale = scale.mul(&pivot)?;
        }
        let coords = self.quotient.iter().map(|&j| v[j].clone()).collect();
        Ok(Projection { coords, scale })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let basis: Vec<serde_json::Value> = self
            .quotient_basis()
            .iter()
            .map(|&(level, index)| serde_json::json!({ "level": level, "index": index }))
            .collect();
        serde_json::json!({
            "model": self.model.label(),
            "max_level": self.max_level,
            "level_dims": self.level_dims,
            "total_dim": self.total_dim(),
            "commutator_rank": self.rank(),
            "quotient_dim": self.quotient_dim(),
            "quotient_basis": basis,
        })
    }
}

/// Largest level bound the exact elimination is asked to handle.
const MAX_TRUNCATION: usize = 4;

/// The cocenter of a truncated endomorphism tower: enumerate commutators
/// of hom-space basis elements, eliminate exactly, and keep the projection
/// data.
pub fn vtrace_cocenter(
    model: CocenterModel,
    max_level: usize,
) -> Result<CocenterResult, TraceError> {
    if max_level > MAX_TRUNCATION {
        return Err(TraceError::TruncationTooLarge(max_level, MAX_TRUNCATION));
    }
    let (ring, level_dims, gens) = commutator_generators(model, max_level)?;
    assemble(model, max_level, ring, level_dims, gens)
}

fn assemble(
    model: CocenterModel,
    max_level: usize,
    ring: RingDescriptor,
    level_dims: Vec<usize>,
    gens: Vec<Vec<LaurentPoly>>,
) -> Result<CocenterResult, TraceError> {
    let mut offsets = Vec::with_capacity(level_dims.len());
    let mut dim = 0;
    for &d in &level_dims {
        offsets.push(dim);
        dim += d;
    }
    let (rows, pivots) = echelonize(dim, gens, &ring)?;
    let pivot_set: BTreeSet<usize> = pivots.iter().copied().collect();
    let quotient = (0..dim).filter(|j| !pivot_set.contains(j)).collect();
    Ok(CocenterResult {
        model,
        max_level,
        level_dims,
        offsets,
        dim,
        ring,
        rows,
        pivots,
        quotient,
    })
}

/// Ring, per-level dimensions, and commutator rows feeding the elimination.
type TowerData = (RingDescriptor, Vec<usize>, Vec<Vec<LaurentPoly>>);

/// All commutator generators of the truncated tower, as global coordinate
/// vectors: for every pair of levels and every pair of basis morphisms
/// between them, the difference of the two composition orders.
fn commutator_generators(model: CocenterModel, max_level: usize) -> Result<TowerData, TraceError> {
    match model {
        CocenterModel::Tl => {
            let ring = tl_signature().ring;
            let mut level_dims = Vec::with_capacity(max_level + 1);
            let mut offsets = Vec::with_capacity(max_level + 1);
            let mut dim = 0;
            for n in 0..=max_level {
                offsets.push(dim);
                let d = tl_basis(n, n)?.len();
                level_dims.push(d);
                dim += d;
            }
            let mut gens = Vec::new();
            for m in 0..=max_level {
                for n in 0..=max_level {
                    if !(m + n).is_multiple_of(2) {
                        continue;
                    }
                    let forward = tl_basis(m, n)?;
                    let backward = tl_basis(n, m)?;
                    let top_basis = tl_basis(n, n)?;
                    let bottom_basis = tl_basis(m, m)?;
                    for f in &forward {
                        let fe = TLElement::from_matching(&ring, f.clone());
                        for g in &backward {
                            let ge = TLElement::from_matching(&ring, g.clone());
                            let fg = tl_compose(&fe, &ge)?;
                            let gf = tl_compose(&ge, &fe)?;
                            let mut v = vec![LaurentPoly::zero(&ring); dim];
                            for (i, mat) in top_basis.iter().enumerate() {
                                v[offsets[n] + i] = fg.coeff(mat);
                            }
                            for (i, mat) in bottom_basis.iter().enumerate() {
                                v[offsets[m] + i] = v[offsets[m] + i].sub(&gf.coeff(mat))?;
                            }
                            if v.iter().any(|c| !c.is_zero()) {
                                gens.push(v);
                            }
                        }
                    }
                }
            }
            Ok((ring, level_dims, gens))
        }
        CocenterModel::Hecke => {
            let ring = hecke_ring();
            let mut level_dims = Vec::with_capacity(max_level + 1);
            let mut offsets = Vec::with_capacity(max_level + 1);
            let mut dim = 0;
            for n in 0..=max_level {
                offsets.push(dim);
                let d = Permutation::all(n).len();
                level_dims.push(d);
                dim += d;
            }
            let mut gens = Vec::new();
            for n in 0..=max_level {
                let basis = Permutation::all(n);
                for u in &basis {
                    let ue = HeckeElement::from_permutation(&ring, u.clone());
                    for w in &basis {
                        let we = HeckeElement::from_permutation(&ring, w.clone());
                        let uw = hecke_mul(&ue, &we)?;
                        let wu = hecke_mul(&we, &ue)?;
                        let mut v = vec![LaurentPoly::zero(&ring); dim];
                        for (i, p) in basis.iter().enumerate() {
                            v[offsets[n] + i] = uw.coeff(p).sub(&wu.coeff(p))?;
                        }
                        if v.iter().any(|c| !c.is_zero()) {
                            gens.push(v);
                        }
                    }
                }
            }
            Ok((ring, level_dims, gens))
        }
    }
}

/// Fraction-free row reduction: repeated two-by-two determinants divided by
/// the previous pivot stay in the ring, so the echelon basis of the row
/// space comes out exact with no rational arithmetic.
fn echelonize(
    dim: usize,
    mut rows: Vec<Vec<LaurentPoly>>,
    ring: &RingDescriptor,
) -> Result<(Vec<Vec<LaurentPoly>>, Vec<usize>), TraceError> {
    let mut echelon = Vec::new();
    let mut pivots = Vec::new();
    let mut prev = LaurentPoly::one(ring);
    for col in 0..dim {
        let Some(idx) = rows.iter().position(|r| !r[col].is_zero()) else {
            continue;
        };
        let pivot_row = rows.swap_remove(idx);
        let p = pivot_row[col].clone();
        let mut remaining = Vec::with_capacity(rows.len());
        for r in rows {
            let a = r[col].clone();
            let mut out = Vec::with_capacity(dim);
            for (rj, pj) in r.iter().zip(&pivot_row) {
                let num = p.mul(rj)?.sub(&a.mul(pj)?)?;
                out.push(num.div_exact(&prev)?);
            }
            if out.iter().any(|c| !c.is_zero()) {
                remaining.push(out);
            }
        }
        rows = remaining;
        prev = p;
        pivots.push(col);
        echelon.push(pivot_row);
    }
    Ok((echelon, pivots))
}

/// Counts comparing the two cylinder constructions over the free signature
/// on one plain object, where they come apart: pairs can never cancel
/// their wraps, while dots are invertible by fiat.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GolfReport {
    pub depth: usize,
    /// Annular-pair endomorphism classes of the unit, one per wrap length
    /// up to `depth`.
    pub pair_unit_classes: usize,
    /// Annular-pair endomorphism classes of the strand, again one per wrap
    /// length.
    pub pair_strand_classes: usize,
    /// Whether the one-wrap pair on the strand has an inverse among the
    /// enumerated classes.
    pub pair_strand_invertible: bool,
    /// Dotted endomorphisms of the unit using at most `depth` dots: the
    /// identity alone.
    pub dotted_unit_classes: usize,
    /// Dotted endomorphisms of the strand using at most `depth` dots, one
    /// per exponent sum.
    pub dotted_strand_classes: usize,
    /// Whether every enumerated dotted class has its inverse within the
    /// same bound.
    pub dotted_strand_invertible: bool,
}

impl GolfReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "depth": self.depth,
            "pair_unit_classes": self.pair_unit_classes,
            "pair_strand_classes": self.pair_strand_classes,
            "pair_strand_invertible": self.pair_strand_invertible,
            "dotted_unit_classes": self.dotted_unit_classes,
            "dotted_strand_classes": self.dotted_strand_classes,
            "dotted_strand_invertible": self.dotted_strand_invertible,
        })
    }
}

/// Census of both cylinder constructions over the free signature on one
/// object, truncated at a wrap length and dot count.
///
/// The free signature has no generating morphisms at all, so each hom space
/// holds at most an identity. An annular pair over an object is then
/// `(wrap length j, identity)`, and the slide moves, which only ever insert
/// endomorphisms of the wrap, relate each pair to itself alone: the classes
/// are counted by wrap length, and composing pairs adds the lengths, so
/// none of them is invertible except the empty one. On the dotted side the
/// unit object has no endomorphisms but the identity, while a strand
/// endomorphism is a word in the dot and its inverse; the only relations
/// cancel adjacent inverse pairs, so the class of a word is its exponent
/// sum and every class is invertible.
pub fn golf_census(depth: usize) -> GolfReport {
    let pair_unit_classes = depth + 1;
    let pair_strand_classes = depth + 1;

    // Exponent sums reachable by words of length at most `depth` in the
    // dot and its inverse.
    let mut sums: BTreeSet<i64> = BTreeSet::new();
    sums.insert(0);
    for len in 1..=depth {
        for word in 0..(1u64 << len) {
            let sum: i64 = (0..len)
                .map(|b| if word >> b & 1 == 1 { 1 } else { -1 })
                .sum();
            sums.insert(sum);
        }
    }
    let dotted_strand_invertible = sums.iter().all(|s| sums.contains(&-s));

    GolfReport {
        depth,
        pair_unit_classes,
        pair_strand_classes,
        // Composing with any pair only lengthens the wrap, so nothing
        // composes back down to the empty-wrap identity class.
        pair_strand_invertible: depth == 0,
        dotted_unit_classes: 1,
        dotted_strand_classes: sums.len(),
        dotted_strand_invertible,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ring::Coefficient;
    use crate::term::{normalize_linear, parse_term};
    use crate::tl::{loop_value, tl_tensor};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn annular() -> Presentation {
        annular_strand_presentation().unwrap()
    }

    fn strand_word(n: usize) -> ObjectWord {
        ObjectWord::repeated(Letter::plain("o"), n)
    }

    /// Flatten dots away and resolve to the diagram normal form.
    fn kb(t: &LinearTerm, sig: &Signature) -> TLElement {
        kb_resolve(&flatten_term(t, sig).unwrap(), sig).unwrap()
    }

    fn random_matching(rng: &mut StdRng, m: usize, n: usize) -> PlanarMatching {
        let basis = tl_basis(m, n).unwrap();
        basis[rng.gen_range(0..basis.len())].clone()
    }

    /// A random pair with the given boundary words, represented by a basis
    /// diagram.
    fn random_pair(
        rng: &mut StdRng,
        sig: &Signature,
        source: usize,
        target: usize,
        wrap: usize,
    ) -> HtrMorphism {
        let mat = random_matching(rng, source + wrap, wrap + target);
        let f = matching_term(&mat, sig).unwrap();
        HtrMorphism::new(
            strand_word(source),
            strand_word(target),
            strand_word(wrap),
            f,
        )
        .unwrap()
    }

    /// A random dotted morphism: a stack of crossings, dots, and turnbacks
    /// on a small strand word, with an occasional width change. At most two
    /// dots per sample, so evaluating the round trip through theta_prime
    /// stays on narrow words.
    fn random_dotted(rng: &mut StdRng, sig: &Signature, width: usize) -> LinearTerm {
        let mut n = width;
        let mut dot_budget = 2usize;
        let mut t = LinearTerm::identity(sig, strand_word(n));
        for _ in 0..rng.gen_range(1..=4) {
            let layer = match rng.gen_range(0..6) {
                0 if n >= 2 => {
                    let i = rng.gen_range(0..n - 1);
                    Term::whisker(&strand_word(i), Term::Gen("sigma".into()), &strand_word(n - i - 2))
                }
                1 if n >= 2 => {
                    let i = rng.gen_range(0..n - 1);
                    Term::whisker(
                        &strand_word(i),
                        Term::Gen("sigma_inv".into()),
                        &strand_word(n - i - 2),
                    )
                }
                2 if n >= 2 => {
                    let i = rng.gen_range(0..n - 1);
                    Term::whisker(
                        &strand_word(i),
                        Term::compose(Term::Gen("cup".into()), Term::Gen("cap".into())),
                        &strand_word(n - i - 2),
                    )
                }
                3 if n >= 1 && dot_budget > 0 => {
                    dot_budget -= 1;
                    let i = rng.gen_range(0..n);
                    Term::whisker(&strand_word(i), Term::Gen("dot_o".into()), &strand_word(n - i - 1))
                }
                4 if n >= 1 && dot_budget > 0 => {
                    dot_budget -= 1;
                    let i = rng.gen_range(0..n);
                    Term::whisker(
                        &strand_word(i),
                        Term::Gen("dotinv_o".into()),
                        &strand_word(n - i - 1),
                    )
                }
                5 if n >= 2 && rng.gen_bool(0.4) => {
                    let i = rng.gen_range(0..n - 1);
                    n -= 2;
                    Term::whisker(&strand_word(i), Term::Gen("cap".into()), &strand_word(n - i))
                }
                _ => continue,
            };
            t = LinearTerm::compose(&LinearTerm::from_term(layer, sig).unwrap(), &t).unwrap();
        }
        t
    }

    fn random_tl_endo(rng: &mut StdRng, ring: &RingDescriptor, n: usize) -> TLElement {
        let mut out = TLElement::zero(ring, n, n);
        for _ in 0..rng.gen_range(1..=3) {
            let mat = random_matching(rng, n, n);
            let mut exp = vec![0i64];
            exp[0] = rng.gen_range(-2..=2);
            let c = LaurentPoly::monomial(ring, exp, Coefficient::from_i64(rng.gen_range(-3..=3)));
            out = out
                .add(&TLElement::from_matching(ring, mat).scale(&c).unwrap())
                .unwrap();
        }
        out
    }

    #[test]
    fn plain_terms_keep_an_empty_wrap_both_ways() {
        let pres = annular();
        let sig = &pres.signature;
        let f = parse_term("q*(sigma ; sigma) + (cap ; cup)", sig).unwrap();
        let m = theta(&f, sig).unwrap();
        assert!(m.wrap.is_empty());
        assert_eq!(m.source, f.dom);
        assert_eq!(m.target, f.cod);
        assert_eq!(
            normalize_linear(&m.f, sig).unwrap(),
            normalize_linear(&f, sig).unwrap()
        );
        assert_eq!(theta_prime(&m, sig).unwrap(), m.f);
        let back = theta_prime(&HtrMorphism::plain(&f), sig).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn dots_become_bent_wraps_and_inverse_dots_straight_ones() {
        let pres = annular();
        let sig = &pres.signature;
        let dot = parse_term("dot_o", sig).unwrap();
        let m = theta(&dot, sig).unwrap();
        assert_eq!(m.wrap, strand_word(1));
        assert_eq!(m.source, strand_word(1));
        assert_eq!(
            m.f,
            LinearTerm::from_term(
                Term::tensor(Term::Gen("cup".into()), Term::Gen("cap".into())),
                sig
            )
            .unwrap()
        );
        let dotinv = parse_term("dotinv_o", sig).unwrap();
        let mi = theta(&dotinv, sig).unwrap();
        assert_eq!(mi.wrap, strand_word(1));
        assert_eq!(mi.f, LinearTerm::identity(sig, strand_word(2)));
    }

    #[test]
    fn mixed_wraps_in_one_sum_are_rejected() {
        let pres = annular();
        let sig = &pres.signature;
        let bad = parse_term("dot_o + id(o)", sig).unwrap();
        match theta(&bad, sig) {
            Err(TraceError::MixedWrap(_, _)) => {}
            other => panic!("expected a mixed-wrap error, got {other:?}"),
        }
    }

    #[test]
    fn composing_pairs_concatenates_the_wraps() {
        let pres = annular();
        let sig = &pres.signature;
        let mut rng = StdRng::seed_from_u64(11);
        let f = random_pair(&mut rng, sig, 2, 2, 1);
        let g = random_pair(&mut rng, sig, 2, 2, 2);
        let h = htr_compose(&g, &f, sig).unwrap();
        assert_eq!(h.wrap, f.wrap.concat(&g.wrap));
        let expected = LinearTerm::compose(
            &pad(sig, &f.wrap, &g.f, &ObjectWord::unit()).unwrap(),
            &pad(sig, &ObjectWord::unit(), &f.f, &g.wrap).unwrap(),
        )
        .unwrap();
        assert_eq!(h.f, expected);

        // Composing with a wrap-free identity pad changes nothing after
        // unit-law cleanup.
        let idpair = HtrMorphism::plain(&LinearTerm::identity(sig, strand_word(2)));
        let padded = htr_compose(&idpair, &f, sig).unwrap();
        assert_eq!(padded.wrap, f.wrap);
        assert_eq!(
            normalize_linear(&padded.f, sig).unwrap(),
            normalize_linear(&f.f, sig).unwrap()
        );
    }

    #[test]
    fn pair_composition_is_associative_under_evaluation() {
        let pres = annular();
        let sig = &pres.signature;
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..10 {
            // Wraps stay short: evaluating theta_prime squares the wrap
            // width into the intermediate words, and planar bases grow
            // like Catalan numbers.
            let (wa, wb, wc) = (
                rng.gen_range(0..=1),
                rng.gen_range(0..=1),
                rng.gen_range(0..=1),
            );
            let a = random_pair(&mut rng, sig, 2, 2, wa);
            let b = random_pair(&mut rng, sig, 2, 2, wb);
            let c = random_pair(&mut rng, sig, 2, 2, wc);
            let left = htr_compose(&c, &htr_compose(&b, &a, sig).unwrap(), sig).unwrap();
            let right = htr_compose(&htr_compose(&c, &b, sig).unwrap(), &a, sig).unwrap();
            assert_eq!(
                kb(&theta_prime(&left, sig).unwrap(), sig),
                kb(&theta_prime(&right, sig).unwrap(), sig)
            );
        }
    }

    #[test]
    fn tensoring_pairs_braids_the_wraps() {
        let pres = annular();
        let sig = &pres.signature;
        let id = HtrMorphism::plain(&LinearTerm::identity(sig, strand_word(1)));
        let both = htr_tensor(&id, &id, sig).unwrap();
        assert!(both.wrap.is_empty());
        assert_eq!(
            normalize_linear(&both.f, sig).unwrap(),
            normalize_linear(&LinearTerm::identity(sig, strand_word(2)), sig).unwrap()
        );

        let mut rng = StdRng::seed_from_u64(37);
        for _ in 0..8 {
            let (wa, wb) = (rng.gen_range(0..=1), rng.gen_range(0..=1));
            let a = random_pair(&mut rng, sig, 1, 1, wa);
            let b = random_pair(&mut rng, sig, 1, 1, wb);
            let ab = htr_tensor(&a, &b, sig).unwrap();
            assert_eq!(ab.wrap, a.wrap.concat(&b.wrap));
            let split = LinearTerm::tensor(
                &theta_prime(&a, sig).unwrap(),
                &theta_prime(&b, sig).unwrap(),
            )
            .unwrap();
            assert_eq!(kb(&theta_prime(&ab, sig).unwrap(), sig), kb(&split, sig));
        }
    }

    #[test]
    fn translation_to_pairs_and_back_is_the_identity_on_samples() {
        let pres = annular();
        let sig = &pres.signature;
        let mut rng = StdRng::seed_from_u64(41);
        for k in 0..25 {
            let width = 1 + k % 3;
            let t = random_dotted(&mut rng, sig, width);
            let round = theta_prime(&theta(&t, sig).unwrap(), sig).unwrap();
            assert_eq!(kb(&round, sig), kb(&t, sig));
        }
        // A width-changing sample: a dotted crossing between two bends.
        let t = parse_term("cup ; (id(o) @ dot_o) ; sigma ; cap", sig).unwrap();
        let round = theta_prime(&theta(&t, sig).unwrap(), sig).unwrap();
        assert_eq!(kb(&round, sig), kb(&t, sig));
    }

    #[test]
    fn coils_translate_forward_and_back() {
        let pres = annular();
        let sig = &pres.signature;
        for (x, y) in [(1usize, 1usize), (2, 1), (1, 2), (0, 2)] {
            let coil_inv = coil_inverse_as_dots(&strand_word(x), &strand_word(y), sig).unwrap();
            let m = theta(&coil_inv, sig).unwrap();
            // The inverse coil wraps by the coiled word itself, straight
            // through.
            if x == 0 {
                assert_eq!(m.wrap, strand_word(y));
            }
            let round = theta_prime(&m, sig).unwrap();
            assert_eq!(kb(&round, sig), kb(&coil_inv, sig));

            // And the coil composed with its inverse flattens to nothing.
            let coil = coil_as_dots(&strand_word(x), &strand_word(y), sig).unwrap();
            let id = LinearTerm::identity(sig, strand_word(x + y));
            assert_eq!(kb(&LinearTerm::compose(&coil_inv, &coil).unwrap(), sig), kb(&id, sig));
        }
    }

    #[test]
    fn theta_respects_composition_under_evaluation() {
        let pres = annular();
        let sig = &pres.signature;
        let mut rng = StdRng::seed_from_u64(53);
        let q = LaurentPoly::var(&sig.ring, "q").unwrap();
        for _ in 0..10 {
            // Two-summand inputs with matching wrap shapes keep theta on
            // its linear path.
            let a1 = parse_term("(dot_o @ id(o)) ; sigma", sig).unwrap();
            let a2 = parse_term("sigma_inv ; (id(o) @ dot_o)", sig).unwrap();
            let a = a1.scale(&q).unwrap().add(&a2).unwrap();
            let b = random_dotted(&mut rng, sig, 2);
            let b = if b.dom == strand_word(2) && b.cod == strand_word(2) {
                b
            } else {
                LinearTerm::identity(sig, strand_word(2))
            };
            let composed = LinearTerm::compose(&a, &b).unwrap();
            let via_pairs = htr_compose(&theta(&a, sig).unwrap(), &theta(&b, sig).unwrap(), sig)
                .unwrap();
            assert_eq!(
                kb(&theta_prime(&theta(&composed, sig).unwrap(), sig).unwrap(), sig),
                kb(&theta_prime(&via_pairs, sig).unwrap(), sig)
            );
        }
    }

    #[test]
    fn closing_strands_multiplies_loop_values() {
        let ring = tl_signature().ring;
        let delta = loop_value(&ring).unwrap();
        assert!(qtrace(&TLElement::identity(&ring, 0))
            .unwrap()
            .is_one());
        let mut power = LaurentPoly::one(&ring);
        for n in 1..=3 {
            power = power.mul(&delta).unwrap();
            assert_eq!(qtrace(&TLElement::identity(&ring, n)).unwrap(), power);
        }
        // One turnback: the closure pinches off a single loop.
        let e = TLElement::from_matching(&ring, PlanarMatching::hook(0, 2));
        assert_eq!(qtrace(&e).unwrap(), delta);
    }

    #[test]
    fn the_annular_closure_is_cyclic_and_multiplicative() {
        let ring = tl_signature().ring;
        let mut rng = StdRng::seed_from_u64(67);
        for _ in 0..20 {
            let n = rng.gen_range(1..=4);
            let f = random_tl_endo(&mut rng, &ring, n);
            let g = random_tl_endo(&mut rng, &ring, n);
            assert_eq!(
                qtrace(&tl_compose(&f, &g).unwrap()).unwrap(),
                qtrace(&tl_compose(&g, &f).unwrap()).unwrap()
            );
        }
        for _ in 0..10 {
            let (nf, ng) = (rng.gen_range(1..=2), rng.gen_range(1..=2));
            let f = random_tl_endo(&mut rng, &ring, nf);
            let g = random_tl_endo(&mut rng, &ring, ng);
            assert_eq!(
                qtrace(&tl_tensor(&f, &g).unwrap()).unwrap(),
                qtrace(&f).unwrap().mul(&qtrace(&g).unwrap()).unwrap()
            );
        }
        // Cyclicity across levels: a bend composed both ways.
        let cup = TLElement::from_matching(&ring, PlanarMatching::cup());
        let cap = TLElement::from_matching(&ring, PlanarMatching::cap());
        assert_eq!(
            qtrace(&tl_compose(&cup, &cap).unwrap()).unwrap(),
            qtrace(&tl_compose(&cap, &cup).unwrap()).unwrap()
        );
    }

    #[test]
    fn matchings_round_trip_through_the_term_language() {
        let sig = tl_signature();
        let ring = &sig.ring;
        for total in [2usize, 4, 6] {
            for m in 0..=total {
                let n = total - m;
                for mat in tl_basis(m, n).unwrap() {
                    let t = matching_term(&mat, &sig).unwrap();
                    assert_eq!(
                        kb_resolve(&t, &sig).unwrap(),
                        TLElement::from_matching(ring, mat)
                    );
                }
            }
        }
    }

    #[test]
    fn commutators_vanish_in_the_cocenter() {
        let mut rng = StdRng::seed_from_u64(79);
        let tl = vtrace_cocenter(CocenterModel::Tl, 3).unwrap();
        let ring = tl_signature().ring;
        for _ in 0..25 {
            let parity = rng.gen_range(0..=1usize);
            let m = parity + 2 * rng.gen_range(0..=1usize);
            let n = parity + 2 * rng.gen_range(0..=1usize);
            let f = TLElement::from_matching(&ring, random_matching(&mut rng, m, n));
            let g = TLElement::from_matching(&ring, random_matching(&mut rng, n, m));
            let fg = tl.project(&tl.embed_tl(&tl_compose(&f, &g).unwrap()).unwrap()).unwrap();
            let gf = tl.project(&tl.embed_tl(&tl_compose(&g, &f).unwrap()).unwrap()).unwrap();
            assert!(fg.same_class(&gf).unwrap());
        }

        let hk = vtrace_cocenter(CocenterModel::Hecke, 3).unwrap();
        let hring = hecke_ring();
        for _ in 0..25 {
            let n = rng.gen_range(1..=3);
            let perms = Permutation::all(n);
            let u = HeckeElement::from_permutation(&hring, perms[rng.gen_range(0..perms.len())].clone());
            let w = HeckeElement::from_permutation(&hring, perms[rng.gen_range(0..perms.len())].clone());
            let uw = hk.project(&hk.embed_hecke(&hecke_mul(&u, &w).unwrap()).unwrap()).unwrap();
            let wu = hk.project(&hk.embed_hecke(&hecke_mul(&w, &u).unwrap()).unwrap()).unwrap();
            assert!(uw.same_class(&wu).unwrap());
            let diff = hecke_mul(&u, &w).unwrap().sub(&hecke_mul(&w, &u).unwrap()).unwrap();
            assert!(hk.project(&hk.embed_hecke(&diff).unwrap()).unwrap().is_zero());
        }
    }

    #[test]
    fn truncated_cocenters_count_the_known_classes() {
        // Matching towers glue across levels: one class per number of
        // through strands.
        for max in 0..=4usize {
            let r = vtrace_cocenter(CocenterModel::Tl, max).unwrap();
            assert_eq!(r.quotient_dim(), max + 1, "levels up to {max}");
        }
        // Braid towers stay separate: one class per cycle type.
        let partition_sums = [1usize, 2, 4, 7, 12];
        for (max, want) in partition_sums.iter().enumerate() {
            let r = vtrace_cocenter(CocenterModel::Hecke, max).unwrap();
            assert_eq!(r.quotient_dim(), *want, "levels up to {max}");
        }
        // A commutative single level is its own quotient.
        let small = vtrace_cocenter(CocenterModel::Tl, 1).unwrap();
        assert_eq!(small.rank(), 0);
        assert_eq!(small.quotient_dim(), small.total_dim());
        // The documented small case in full.
        let two = vtrace_cocenter(CocenterModel::Tl, 2).unwrap();
        assert_eq!(two.total_dim(), 4);
        assert_eq!(two.quotient_dim(), 3);
        let labels = two.quotient_basis();
        assert_eq!(labels.len(), 3);
    }

    #[test]
    fn elimination_rank_survives_shuffling_and_duplicates() {
        let (ring, dims, gens) = commutator_generators(CocenterModel::Tl, 3).unwrap();
        let base = assemble(CocenterModel::Tl, 3, ring.clone(), dims.clone(), gens.clone()).unwrap();
        let mut rng = StdRng::seed_from_u64(97);
        let mut shuffled = gens.clone();
        for i in (1..shuffled.len()).rev() {
            let j = rng.gen_range(0..=i);
            shuffled.swap(i, j);
        }
        for _ in 0..10 {
            let pick = shuffled[rng.gen_range(0..gens.len())].clone();
            shuffled.push(pick);
        }
        let again = assemble(CocenterModel::Tl, 3, ring, dims, shuffled).unwrap();
        assert_eq!(base.rank(), again.rank());
        assert_eq!(base.quotient_dim(), again.quotient_dim());
        // Both eliminations kill the original generators.
        for g in gens.iter().take(10) {
            assert!(base.project(g).unwrap().is_zero());
            assert!(again.project(g).unwrap().is_zero());
        }
    }

    #[test]
    fn shape_and_bound_errors_are_reported() {
        let pres = annular();
        let sig = &pres.signature;
        let f = LinearTerm::identity(sig, strand_word(2));
        match HtrMorphism::new(strand_word(1), strand_word(1), ObjectWord::unit(), f) {
            Err(TraceError::BadRepresentative(_)) => {}
            other => panic!("expected a shape error, got {other:?}"),
        }
        match vtrace_cocenter(CocenterModel::Tl, 5) {
            Err(TraceError::TruncationTooLarge(5, _)) => {}
            other => panic!("expected the resource guard, got {other:?}"),
        }
        let ring = tl_signature().ring;
        let tall = TLElement::from_matching(&ring, PlanarMatching::cup());
        match qtrace(&tall) {
            Err(TraceError::NotEndomorphism(_, _)) => {}
            other => panic!("expected an endomorphism check, got {other:?}"),
        }
        let r = vtrace_cocenter(CocenterModel::Tl, 2).unwrap();
        match r.embed_tl(&TLElement::identity(&ring, 3)) {
            Err(TraceError::LevelOutOfRange(3, 2)) => {}
            other => panic!("expected a level bound error, got {other:?}"),
        }
    }

    #[test]
    fn the_free_object_census_separates_the_two_cylinders() {
        for k in 0..=5 {
            let report = golf_census(k);
            assert_eq!(report.pair_unit_classes, k + 1);
            assert_eq!(report.pair_strand_classes, k + 1);
            assert_eq!(report.dotted_unit_classes, 1);
            assert_eq!(report.dotted_strand_classes, 2 * k + 1);
            assert!(report.dotted_strand_invertible);
            if k >= 1 {
                assert!(!report.pair_strand_invertible);
            }
        }
        let three = golf_census(3);
        assert_eq!(three.pair_unit_classes, 4);
        assert_eq!(three.dotted_unit_classes, 1);
        let two = golf_census(2);
        assert_eq!(two.dotted_strand_classes, 5);
        assert!(two.dotted_strand_invertible);
    }
}
