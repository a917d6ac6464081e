//! Annular extension of a braided presentation. Every letter of the object
//! alphabet receives an invertible "dot" marking one pass of the strand
//! around the annulus, together with the relations that let dots slide
//! through crossings, coupons, and (optionally) cups and caps.
//! `flatten_term` evaluates the extension back into the plane by trading a
//! dot for the letter's twist wrapped around everything to its left, and
//! `coil_as_dots` expands the wrap of a whole word into letter dots.

use thiserror::Error;

use crate::term::{
    typecheck, Duality, GenDecl, GenTag, Letter, LinearTerm, ObjectWord, Presentation, Signature,
    Term, TermError, TwistValue,
};

#[derive(Debug, Error)]
pub enum AffinizeError {
    #[error("letters `{0}` braid in one direction only; both crossings are needed")]
    MissingBraiding(String),
    #[error("object `{0}` declares no duality, so cup and cap slides make no sense")]
    MissingDuality(String),
    #[error("letter `{0}` has no twist entry")]
    MissingTwist(String),
    #[error("the twist of `{0}` is not invertible")]
    NonInvertibleTwist(String),
    #[error("letter `{0}` carries no dot generators")]
    UndottedLetter(String),
    #[error("generator `{0}` is already a dot; the presentation looks annular")]
    AlreadyAffine(String),
    #[error("the name `{0}` is already taken; rename that generator first")]
    NameTaken(String),
    #[error("generator `{0}` is tagged as a cup or cap but is not shaped like one")]
    BadCupCap(String),
    #[error("dot generator `{0}` must be an endomorphism of a single letter")]
    BadDot(String),
    #[error(transparent)]
    Term(#[from] TermError),
}

/// Switches for `affinize_presentation`. `pivotal` adds the slides through
/// cups and caps, where a dot entering one leg of a bend leaves the other
/// leg inverted; it requires every object to declare a duality. `oriented`
/// gives downward letters their own dots; without it only plain and upward
/// letters are dotted, and a downward strand is marked by the inverse dot
/// implied by the bend slides.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AffinizeOptions {
    pub pivotal: bool,
    pub oriented: bool,
}

/// Name of the forward dot attached to a letter, derived from the letter's
/// display form: `dot_o`, `dot_u`, `dot_uv`.
pub fn dot_name(letter: &Letter) -> String {
    format!("dot_{letter}")
}

/// Name of the inverse dot attached to a letter.
pub fn dotinv_name(letter: &Letter) -> String {
    format!("dotinv_{letter}")
}

fn dotted_letters(sig: &Signature, opts: AffinizeOptions) -> Vec<Letter> {
    let mut out = Vec::new();
    for o in &sig.objects {
        if o.oriented {
            out.push(Letter::up(&o.name));
            if opts.oriented {
                out.push(Letter::down(&o.name));
            }
        } else {
            out.push(Letter::plain(&o.name));
        }
    }
    out
}

fn signature_letters(sig: &Signature) -> Vec<Letter> {
    let mut out = Vec::new();
    for o in &sig.objects {
        if o.oriented {
            out.push(Letter::up(&o.name));
            out.push(Letter::down(&o.name));
        } else {
            out.push(Letter::plain(&o.name));
        }
    }
    out
}

/// Find the dot generator of the given polarity on a letter, by tag and
/// shape rather than by name, so hand-written signatures work too.
fn find_dot(sig: &Signature, letter: &Letter, tag: GenTag) -> Result<String, AffinizeError> {
    let w = ObjectWord::single(letter.clone());
    sig.generators
        .iter()
        .find(|g| g.tag == tag && g.dom == w && g.cod == w)
        .map(|g| g.name.clone())
        .ok_or_else(|| AffinizeError::UndottedLetter(letter.to_string()))
}

fn find_braid<'a>(sig: &'a Signature, a: &Letter, b: &Letter, tag: GenTag) -> Option<&'a GenDecl> {
    sig.generators.iter().find(|g| {
        g.tag == tag
            && g.dom.letters == [a.clone(), b.clone()]
            && g.cod.letters == [b.clone(), a.clone()]
    })
}

/// The crossing taking `a (x) b` to `b (x) a` with the given sign, by name.
fn braid_gen(
    sig: &Signature,
    a: &Letter,
    b: &Letter,
    tag: GenTag,
) -> Result<String, AffinizeError> {
    find_braid(sig, a, b, tag)
        .map(|g| g.name.clone())
        .ok_or_else(|| AffinizeError::MissingBraiding(format!("{a} {b}")))
}

/// The tensor chain of forward dots over every letter of a word, or the
/// empty identity for the unit word.
fn dots_term(sig: &Signature, w: &ObjectWord, tag: GenTag) -> Result<Term, AffinizeError> {
    let mut out: Option<Term> = None;
    for l in &w.letters {
        let g = Term::Gen(find_dot(sig, l, tag)?);
        out = Some(match out {
            None => g,
            Some(acc) => Term::tensor(acc, g),
        });
    }
    Ok(out.unwrap_or(Term::Id(ObjectWord::unit())))
}

/// The block crossing carrying the word `x` over the word `y`, assembled
/// letter by letter from the signature's crossings: with `invert` false the
/// positive crossings build `x (x) y -> y (x) x`, with `invert` true the
/// negative crossings build the inverse morphism `y (x) x -> x (x) y`.
pub(crate) fn block_braid(
    sig: &Signature,
    x: &ObjectWord,
    y: &ObjectWord,
    invert: bool,
) -> Result<Term, AffinizeError> {
    if x.is_empty() {
        return Ok(Term::Id(y.clone()));
    }
    if y.is_empty() {
        return Ok(Term::Id(x.clone()));
    }
    let head = &x.letters[0];
    let head_word = ObjectWord::single(head.clone());
    let rest = x.slice(1..x.len());
    // One letter walks over the whole of y, one crossing per letter of y.
    let mut steps = Vec::new();
    for j in 0..y.len() {
        let b = &y.letters[j];
        let left = y.slice(0..j);
        let right = y.slice(j + 1..y.len());
        let name = if invert {
            braid_gen(sig, b, head, GenTag::BraidNeg)?
        } else {
            braid_gen(sig, head, b, GenTag::BraidPos)?
        };
        steps.push(Term::whisker(&left, Term::Gen(name), &right));
    }
    if invert {
        steps.reverse();
    }
    let chain = Term::stack(steps);
    if rest.is_empty() {
        return Ok(chain);
    }
    let tail = block_braid(sig, &rest, y, invert)?;
    if invert {
        Ok(Term::compose(
            Term::whisker(&head_word, tail, &ObjectWord::unit()),
            Term::whisker(&ObjectWord::unit(), chain, &rest),
        ))
    } else {
        Ok(Term::compose(
            Term::whisker(&ObjectWord::unit(), chain, &rest),
            Term::whisker(&head_word, tail, &ObjectWord::unit()),
        ))
    }
}

/// Extend a braided presentation by an invertible dot on every letter and
/// the relations that move dots around:
///
/// - each dot and its inverse cancel in both orders;
/// - a dot slides through a crossing while turning it over, once per
///   ordered pair of letters whose crossings exist in both signs (a pair
///   braided in one direction only is an error);
/// - plain coupons commute with a dot on every strand at once;
/// - with `pivotal` set, a dot entering one leg of a cup or cap leaves the
///   other leg as the inverse dot.
///
/// Crossings themselves need no coupon relation: sliding a dot through one
/// is already expressed by the turn-over relation. The input must not
/// already contain dot generators, and the new `dot_*`/`dotinv_*` names
/// must be free.
pub fn affinize_presentation(
    p: &Presentation,
    opts: AffinizeOptions,
) -> Result<Presentation, AffinizeError> {
    p.validate()?;
    let sig = &p.signature;
    for g in &sig.generators {
        if matches!(g.tag, GenTag::DotPos | GenTag::DotNeg) {
            return Err(AffinizeError::AlreadyAffine(g.name.clone()));
        }
    }
    if opts.pivotal {
        for o in &sig.objects {
            if o.duality == Duality::NoDual {
                return Err(AffinizeError::MissingDuality(o.name.clone()));
            }
        }
    }

    let dotted = dotted_letters(sig, opts);
    let mut out_sig = sig.clone();
    for l in &dotted {
        for (name, tag) in [(dot_name(l), GenTag::DotPos), (dotinv_name(l), GenTag::DotNeg)] {
            if sig.generator(&name).is_some() {
                return Err(AffinizeError::NameTaken(name));
            }
            let w = ObjectWord::single(l.clone());
            out_sig.generators.push(GenDecl { name, dom: w.clone(), cod: w, tag });
        }
    }

    let lin = |t: Term| -> Result<LinearTerm, AffinizeError> {
        Ok(LinearTerm::from_term(t, &out_sig)?)
    };
    let mut relations = p.relations.clone();

    // Invertibility.
    for l in &dotted {
        let dot = Term::Gen(dot_name(l));
        let inv = Term::Gen(dotinv_name(l));
        let idw = lin(Term::Id(ObjectWord::single(l.clone())))?;
        relations.push((lin(Term::compose(inv.clone(), dot.clone()))?, idw.clone()));
        relations.push((lin(Term::compose(dot, inv))?, idw));
    }

    // A dot entering the positive crossing from the left leaves on the left
    // of the negative crossing.
    for l1 in &dotted {
        for l2 in &signature_letters(sig) {
            let pos = find_braid(sig, l1, l2, GenTag::BraidPos);
            let neg = find_braid(sig, l1, l2, GenTag::BraidNeg);
            let (pos, neg) = match (pos, neg) {
                (Some(p), Some(n)) => (p.name.clone(), n.name.clone()),
                (None, None) => continue,
                _ => return Err(AffinizeError::MissingBraiding(format!("{l1} {l2}"))),
            };
            let w2 = ObjectWord::single(l2.clone());
            let dot = Term::Gen(dot_name(l1));
            let lhs = Term::compose(
                Term::Gen(pos),
                Term::whisker(&ObjectWord::unit(), dot.clone(), &w2),
            );
            let rhs = Term::compose(
                Term::whisker(&w2, dot, &ObjectWord::unit()),
                Term::Gen(neg),
            );
            relations.push((lin(lhs)?, lin(rhs)?));
        }
    }

    // Plain coupons commute with a dot on every strand at once.
    for g in &sig.generators {
        if g.tag != GenTag::Plain || (g.dom.is_empty() && g.cod.is_empty()) {
            continue;
        }
        let lhs = if g.cod.is_empty() {
            Term::Gen(g.name.clone())
        } else {
            Term::compose(dots_term(&out_sig, &g.cod, GenTag::DotPos)?, Term::Gen(g.name.clone()))
        };
        let rhs = if g.dom.is_empty() {
            Term::Gen(g.name.clone())
        } else {
            Term::compose(Term::Gen(g.name.clone()), dots_term(&out_sig, &g.dom, GenTag::DotPos)?)
        };
        relations.push((lin(lhs)?, lin(rhs)?));
    }

    // Cup and cap slides: the dot comes out of the bend inverted.
    if opts.pivotal {
        for g in &sig.generators {
            let (legs, is_cup) = match g.tag {
                GenTag::Cup => {
                    if !g.dom.is_empty() || g.cod.len() != 2 {
                        return Err(AffinizeError::BadCupCap(g.name.clone()));
                    }
                    (g.cod.clone(), true)
                }
                GenTag::Cap => {
                    if !g.cod.is_empty() || g.dom.len() != 2 {
                        return Err(AffinizeError::BadCupCap(g.name.clone()));
                    }
                    (g.dom.clone(), false)
                }
                _ => continue,
            };
            let a = legs.letters[0].clone();
            let b = legs.letters[1].clone();
            let aw = ObjectWord::single(a.clone());
            let bw = ObjectWord::single(b.clone());
            let dot_a = Term::Gen(find_dot(&out_sig, &a, GenTag::DotPos)?);
            let inv_a = Term::Gen(find_dot(&out_sig, &a, GenTag::DotNeg)?);
            let dot_b = Term::Gen(find_dot(&out_sig, &b, GenTag::DotPos)?);
            let inv_b = Term::Gen(find_dot(&out_sig, &b, GenTag::DotNeg)?);
            let on_a = |t: Term| Term::whisker(&ObjectWord::unit(), t, &bw);
            let on_b = |t: Term| Term::whisker(&aw, t, &ObjectWord::unit());
            let bend = || Term::Gen(g.name.clone());
            let pairs = if is_cup {
                [
                    (Term::compose(on_a(dot_a), bend()), Term::compose(on_b(inv_b), bend())),
                    (Term::compose(on_a(inv_a), bend()), Term::compose(on_b(dot_b), bend())),
                ]
            } else {
                [
                    (Term::compose(bend(), on_a(dot_a)), Term::compose(bend(), on_b(inv_b))),
                    (Term::compose(bend(), on_a(inv_a)), Term::compose(bend(), on_b(dot_b))),
                ]
            };
            for (l, r) in pairs {
                relations.push((lin(l)?, lin(r)?));
            }
        }
    }

    let out = Presentation { signature: out_sig, relations };
    out.validate()?;
    Ok(out)
}

/// Expand the wrap of the whole word `y` around `x` into letter dots: the
/// dots of `y` side by side, after the block crossing that carries `x`
/// past `y`. Wrapping around the unit word needs no crossing, and wrapping
/// the unit word is the identity.
pub fn coil_as_dots(
    x: &ObjectWord,
    y: &ObjectWord,
    sig: &Signature,
) -> Result<LinearTerm, AffinizeError> {
    if y.is_empty() {
        return Ok(LinearTerm::identity(sig, x.clone()));
    }
    let dots = dots_term(sig, y, GenTag::DotPos)?;
    let upper = Term::whisker(&ObjectWord::unit(), dots, x);
    if x.is_empty() {
        return Ok(LinearTerm::from_term(upper, sig)?);
    }
    let lower = block_braid(sig, x, y, false)?;
    Ok(LinearTerm::from_term(Term::compose(upper, lower), sig)?)
}

/// The inverse of [`coil_as_dots`]: cancel each letter's dot with its
/// inverse dot, then undo the crossing. Takes `y (x) x` back to
/// `x (x) y`.
pub fn coil_inverse_as_dots(
    x: &ObjectWord,
    y: &ObjectWord,
    sig: &Signature,
) -> Result<LinearTerm, AffinizeError> {
    if y.is_empty() {
        return Ok(LinearTerm::identity(sig, x.clone()));
    }
    let dots = dots_term(sig, y, GenTag::DotNeg)?;
    let lower = Term::whisker(&ObjectWord::unit(), dots, x);
    if x.is_empty() {
        return Ok(LinearTerm::from_term(lower, sig)?);
    }
    let upper = block_braid(sig, x, y, true)?;
    Ok(LinearTerm::from_term(Term::compose(upper, lower), sig)?)
}

/// The twist a forward dot stands for, as an endomorphism of its letter;
/// inverse dots need an invertible scalar twist.
fn twist_image(sig: &Signature, letter: &Letter, invert: bool) -> Result<LinearTerm, AffinizeError> {
    let w = ObjectWord::single(letter.clone());
    match sig.twist.get(&letter.object) {
        None => Err(AffinizeError::MissingTwist(letter.to_string())),
        Some(TwistValue::Scalar(c)) => {
            let c = if invert {
                c.monomial_inverse()
                    .map_err(|_| AffinizeError::NonInvertibleTwist(letter.to_string()))?
            } else {
                c.clone()
            };
            Ok(LinearTerm::identity(sig, w).scale(&c)?)
        }
        Some(TwistValue::Morphism(m)) => {
            if invert {
                return Err(AffinizeError::NonInvertibleTwist(letter.to_string()));
            }
            if m.dom != w || m.cod != w {
                return Err(AffinizeError::MissingTwist(letter.to_string()));
            }
            Ok(m.clone())
        }
    }
}

/// Evaluate the dots of a term back into the undotted category. A forward
/// dot on a letter becomes the letter's twist carried around everything to
/// its left: cross leftward over the whole context, twist, cross back. An
/// inverse dot becomes the inverse of that composite. Dot-free subterms are
/// kept verbatim, so a term without dots comes back unchanged.
pub fn flatten_term(t: &LinearTerm, sig: &Signature) -> Result<LinearTerm, AffinizeError> {
    let mut out = LinearTerm::zero(t.ring(), t.dom.clone(), t.cod.clone());
    for (term, coeff) in t.terms() {
        let flat = if term.contains_tag(sig, &[GenTag::DotPos, GenTag::DotNeg]) {
            flatten_rec(term, &ObjectWord::unit(), sig)?
        } else {
            LinearTerm::from_term(term.clone(), sig)?
        };
        out = out.add(&flat.scale(coeff)?)?;
    }
    Ok(out)
}

/// Recursive worker for `flatten_term`: `prefix` is the word standing to
/// the left of `t` in the ambient tensor context, which a dot must wrap
/// around. Side-by-side subterms are flattened right factor first, so the
/// left factor's boundary joins the prefix of the right one.
fn flatten_rec(t: &Term, prefix: &ObjectWord, sig: &Signature) -> Result<LinearTerm, AffinizeError> {
    if !t.contains_tag(sig, &[GenTag::DotPos, GenTag::DotNeg]) {
        let whiskered = Term::whisker(prefix, t.clone(), &ObjectWord::unit());
        return Ok(LinearTerm::from_term(whiskered, sig)?);
    }
    match t {
        Term::Id(_) => unreachable!("identities carry no dots"),
        Term::Gen(name) => {
            let decl = sig
                .generator(name)
                .ok_or_else(|| TermError::UnknownGenerator(name.clone()))?;
            let invert = decl.tag == GenTag::DotNeg;
            if decl.dom.len() != 1 || decl.dom != decl.cod {
                return Err(AffinizeError::BadDot(name.clone()));
            }
            let letter = decl.dom.letters[0].clone();
            let theta = twist_image(sig, &letter, invert)?;
            if prefix.is_empty() {
                return Ok(theta);
            }
            let lw = ObjectWord::single(letter);
            let middle = LinearTerm::tensor(&theta, &LinearTerm::identity(sig, prefix.clone()))?;
            let (top, bottom) = if invert {
                (block_braid(sig, prefix, &lw, true)?, block_braid(sig, &lw, prefix, true)?)
            } else {
                (block_braid(sig, &lw, prefix, false)?, block_braid(sig, prefix, &lw, false)?)
            };
            let top = LinearTerm::from_term(top, sig)?;
            let bottom = LinearTerm::from_term(bottom, sig)?;
            Ok(LinearTerm::compose(&top, &LinearTerm::compose(&middle, &bottom)?)?)
        }
        Term::VCompose(upper, lower) => {
            let fl = flatten_rec(lower, prefix, sig)?;
            let fu = flatten_rec(upper, prefix, sig)?;
            Ok(LinearTerm::compose(&fu, &fl)?)
        }
        Term::HTensor(a, b) => {
            let (da, _ca) = typecheck(a, sig)?;
            let (_db, cb) = typecheck(b, sig)?;
            let fa = flatten_rec(a, prefix, sig)?;
            let fb = flatten_rec(b, &prefix.concat(&da), sig)?;
            let upper = LinearTerm::tensor(&fa, &LinearTerm::identity(sig, cb))?;
            Ok(LinearTerm::compose(&upper, &fb)?)
        }
    }
}
