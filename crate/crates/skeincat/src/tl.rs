//! The Temperley-Lieb category as a concrete evaluation model: noncrossing
//! matchings as normal forms, crossing resolution into the two planar
//! smoothings, annular closure, and the Jones polynomial of braid closures.
//!
//! Matchings are stored as boundary pairings only (bottom points first, then
//! top points, both left to right); planarity is a nesting-stack check, and
//! composition counts closed loops with a union-find pass. Generic
//! composition multiplies loops by the ring's `delta` variable when there is
//! one; crossing resolution always works in the `q` ring with the loop value
//! specialized to -q^2 - q^-2.

use crate::ring::{LaurentPoly, RingDescriptor, RingError};
use crate::term::{
    writhe, GenTag, LinearTerm, Signature, Term, TermError, Duality, GenDecl, Letter, ObjectDecl,
    ObjectWord,
};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TlError {
    #[error("boundary size {0}+{1} is odd, no perfect matching exists")]
    OddBoundary(usize, usize),
    #[error("pairing is not a perfect matching of the boundary")]
    NotAMatching,
    #[error("pairing has crossing arcs")]
    Crossing,
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },
    #[error("ring has neither a `delta` nor a `q` variable to value loops in")]
    NoLoopValue,
    #[error("generator `{0}` cannot be resolved into matchings")]
    Unresolvable(String),
    #[error("closure division left a remainder; the normalization identity failed")]
    InexactNormalization,
    #[error(transparent)]
    Ring(#[from] RingError),
    #[error(transparent)]
    Term(#[from] TermError),
}

/// A noncrossing perfect matching of a rectangle boundary with `m` bottom
/// points and `n` top points. Point indices: bottom 0..m left to right, then
/// top m..m+n left to right.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlanarMatching {
    pub m: usize,
    pub n: usize,
    pair: Vec<usize>,
}

impl PlanarMatching {
    pub fn new(m: usize, n: usize, pairs: &[(usize, usize)]) -> Result<Self, TlError> {
        if !(m + n).is_multiple_of(2) {
            return Err(TlError::OddBoundary(m, n));
        }
        let total = m + n;
        let mut pair = vec![usize::MAX; total];
        for &(a, b) in pairs {
            if a >= total || b >= total || a == b || pair[a] != usize::MAX || pair[b] != usize::MAX
            {
                return Err(TlError::NotAMatching);
            }
            pair[a] = b;
            pair[b] = a;
        }
        if pair.contains(&usize::MAX) {
            return Err(TlError::NotAMatching);
        }
        let out = PlanarMatching { m, n, pair };
        if !out.is_noncrossing() {
            return Err(TlError::Crossing);
        }
        Ok(out)
    }

    pub fn partner(&self, point: usize) -> usize {
        self.pair[point]
    }

    pub fn pairs(&self) -> Vec<(usize, usize)> {
        (0..self.pair.len())
            .filter(|&i| i < self.pair[i])
            .map(|i| (i, self.pair[i]))
            .collect()
    }

    /// Walk the rectangle boundary (bottom left-to-right, then top
    /// right-to-left) maintaining a stack of open arcs; any arc closing out
    /// of stack order crosses another one.
    fn is_noncrossing(&self) -> bool {
        let order = self.boundary_order();
        let mut stack: Vec<usize> = Vec::new();
        let mut seen = vec![false; self.pair.len()];
        for &p in &order {
            if seen[self.pair[p]] {
                if stack.last() == Some(&self.pair[p]) {
                    stack.pop();
                } else {
                    return false;
                }
            } else {
                stack.push(p);
            }
            seen[p] = true;
        }
        stack.is_empty()
    }

    fn boundary_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.m).collect();
        order.extend((0..self.n).rev().map(|j| self.m + j));
        order
    }

    pub fn identity(n: usize) -> Self {
        let pair = (0..2 * n).map(|i| if i < n { i + n } else { i - n }).collect();
        PlanarMatching { m: n, n, pair }
    }

    /// (0, 2) shape: the two top points joined.
    pub fn cup() -> Self {
        PlanarMatching { m: 0, n: 2, pair: vec![1, 0] }
    }

    /// (2, 0) shape: the two bottom points joined.
    pub fn cap() -> Self {
        PlanarMatching { m: 2, n: 0, pair: vec![1, 0] }
    }

    /// The hook generator e_i in End(n): bottom i joined to bottom i+1, top i
    /// to top i+1, straight strands elsewhere (0-based i, i+1 < n).
    pub fn hook(i: usize, n: usize) -> Self {
        assert!(i + 1 < n, "hook index out of range");
        let mut pair = vec![0usize; 2 * n];
        for j in 0..n {
            if j == i {
                pair[j] = i + 1;
                pair[i + 1] = j;
                pair[n + j] = n + i + 1;
                pair[n + i + 1] = n + j;
            } else if j != i + 1 {
                pair[j] = n + j;
                pair[n + j] = j;
            }
        }
        PlanarMatching { m: n, n, pair }
    }
}

/// Enumerate all noncrossing matchings of shape (m, n) in canonical order.
pub fn tl_basis(m: usize, n: usize) -> Result<Vec<PlanarMatching>, TlError> {
    if !(m + n).is_multiple_of(2) {
        return Err(TlError::OddBoundary(m, n));
    }
    // Work along the boundary circle; noncrossing matchings of the circle
    // order are exactly the planar rectangle diagrams.
    let template = PlanarMatching { m, n, pair: vec![0; m + n] };
    let order = template.boundary_order();
    let mut results = Vec::new();
    let mut pair = vec![usize::MAX; m + n];
    fn go(
        order: &[usize],
        lo: usize,
        hi: usize,
        pair: &mut Vec<usize>,
        segments: &mut Vec<(usize, usize)>,
        results: &mut Vec<Vec<usize>>,
    ) {
        // Match order[lo] with each candidate at odd distance, splitting the
        // interval; when this interval is exhausted, pull the next pending
        // segment, and emit when none remain.
        if lo >= hi {
            match segments.pop() {
                None => results.push(pair.clone()),
                Some((l, h)) => {
                    go(order, l, h, pair, segments, results);
                    segments.push((l, h));
                }
            }
            return;
        }
        for k in ((lo + 1)..hi).step_by(2) {
            let a = order[lo];
            let b = order[k];
            pair[a] = b;
            pair[b] = a;
            segments.push((k + 1, hi));
            go(order, lo + 1, k, pair, segments, results);
            segments.pop();
            pair[a] = usize::MAX;
            pair[b] = usize::MAX;
        }
    }
    if m + n > 0 {
        let mut raw = Vec::new();
        go(&order, 0, m + n, &mut pair, &mut Vec::new(), &mut raw);
        for p in raw {
            results.push(PlanarMatching { m, n, pair: p });
        }
    } else {
        results.push(PlanarMatching { m: 0, n: 0, pair: vec![] });
    }
    results.sort();
    results.dedup();
    Ok(results)
}

/// A linear combination of planar matchings of one shape.
#[derive(Debug, Clone, PartialEq)]
pub struct TLElement {
    pub m: usize,
    pub n: usize,
    ring: RingDescriptor,
    terms: BTreeMap<PlanarMatching, LaurentPoly>,
}

impl TLElement {
    pub fn zero(ring: &RingDescriptor, m: usize, n: usize) -> Self {
        TLElement { m, n, ring: ring.clone(), terms: BTreeMap::new() }
    }

    pub fn from_matching(ring: &RingDescriptor, mat: PlanarMatching) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(mat.clone(), LaurentPoly::one(ring));
        TLElement { m: mat.m, n: mat.n, ring: ring.clone(), terms }
    }

    pub fn identity(ring: &RingDescriptor, n: usize) -> Self {
        Self::from_matching(ring, PlanarMatching::identity(n))
    }

    pub fn ring(&self) -> &RingDescriptor {
        &self.ring
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PlanarMatching, &LaurentPoly)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, mat: &PlanarMatching) -> LaurentPoly {
        self.terms
            .get(mat)
            .cloned()
            .unwrap_or_else(|| LaurentPoly::zero(&self.ring))
    }

    fn insert(&mut self, mat: PlanarMatching, c: LaurentPoly) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(mat) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let s = o.get().add(&c).expect("ring mismatch in TL element");
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    pub fn add(&self, other: &TLElement) -> Result<TLElement, TlError> {
        self.check_shape(other.m, other.n)?;
        let mut out = self.clone();
        for (mat, c) in &other.terms {
            out.insert(mat.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &TLElement) -> Result<TLElement, TlError> {
        self.add(&other.scale(&LaurentPoly::int(&self.ring, -1))?)
    }

    pub fn scale(&self, p: &LaurentPoly) -> Result<TLElement, TlError> {
        let mut out = TLElement::zero(&self.ring, self.m, self.n);
        for (mat, c) in &self.terms {
            out.insert(mat.clone(), c.mul(p)?);
        }
        Ok(out)
    }

    fn check_shape(&self, m: usize, n: usize) -> Result<(), TlError> {
        if self.m != m || self.n != n {
            return Err(TlError::ShapeMismatch {
                expected: format!("({}, {})", self.m, self.n),
                found: format!("({m}, {n})"),
            });
        }
        Ok(())
    }
}

/// The scalar a closed loop contributes: the `delta` variable when the ring
/// has one, otherwise -q^2 - q^-2.
pub fn loop_value(ring: &RingDescriptor) -> Result<LaurentPoly, TlError> {
    if ring.variables.iter().any(|v| v == "delta") {
        Ok(LaurentPoly::var(ring, "delta")?)
    } else if ring.variables.iter().any(|v| v == "q") {
        Ok(LaurentPoly::parse(ring, "-q^2 - q^-2")?)
    } else {
        Err(TlError::NoLoopValue)
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

/// Glue two matchings along `n` middle points; returns the composed matching
/// and the number of closed loops created.
fn glue(g: &PlanarMatching, f: &PlanarMatching) -> (PlanarMatching, usize) {
    let m = f.m;
    let n = f.n;
    let p = g.n;
    // Node layout: f's bottom 0..m, middle 0..n (f top = g bottom), g's top
    // 0..p. Each node carries its one matching arc; walk from each external
    // point through arcs and the gluing to find its external partner.
    let ext = m + p;
    let node = |layer: u8, i: usize| -> usize {
        match layer {
            0 => i,           // external bottom
            1 => ext + i,     // middle
            _ => m + i,       // external top
        }
    };
    let total = ext + n;
    let mut uf = UnionFind::new(total);
    let mut pair = vec![usize::MAX; ext];
    // Resolve one step: from a point of f (as (layer,idx) in f coordinates)
    // to its arc partner, expressed in the glued node layout.
    let f_point = |i: usize| -> usize {
        if i < m {
            node(0, i)
        } else {
            node(1, i - m)
        }
    };
    let g_point = |i: usize| -> usize {
        if i < n {
            node(1, i)
        } else {
            node(2, i - n)
        }
    };
    // Adjacency: each node has up to two arc neighbors (one from f, one
    // from g); middles have both, externals one.
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); total];
    for (a, b) in f.pairs() {
        let (na, nb) = (f_point(a), f_point(b));
        adj[na].push(nb);
        adj[nb].push(na);
    }
    for (a, b) in g.pairs() {
        let (na, nb) = (g_point(a), g_point(b));
        adj[na].push(nb);
        adj[nb].push(na);
    }
    for (i, nbrs) in adj.iter().enumerate() {
        for &j in nbrs {
            uf.union(i, j);
        }
    }
    // Trace external points to their partners. Externals have exactly one
    // arc neighbor, middles exactly two, so the walk is forced.
    for start in 0..ext {
        if pair[start] != usize::MAX {
            continue;
        }
        let mut prev = start;
        let mut cur = adj[start][0];
        while cur >= ext {
            let nbrs = &adj[cur];
            let next = if nbrs[0] == prev { nbrs[1] } else { nbrs[0] };
            prev = cur;
            cur = next;
        }
        pair[start] = cur;
        pair[cur] = start;
    }
    // Loops: connected components consisting only of middle nodes.
    let mut loop_roots = std::collections::BTreeSet::new();
    let mut external_roots = std::collections::BTreeSet::new();
    for i in 0..ext {
        external_roots.insert(uf.find(i));
    }
    for i in ext..total {
        let r = uf.find(i);
        if !external_roots.contains(&r) {
            loop_roots.insert(r);
        }
    }
    let matching = PlanarMatching { m, n: p, pair };
    (matching, loop_roots.len())
}

/// Composite `g` after `f` (f: (m, n), g: (n, p)); each closed loop formed in
/// the middle contributes one loop-value factor.
pub fn tl_compose(g: &TLElement, f: &TLElement) -> Result<TLElement, TlError> {
    if f.n != g.m {
        return Err(TlError::ShapeMismatch {
            expected: format!("inner boundary {}", f.n),
            found: format!("{}", g.m),
        });
    }
    let delta = loop_value(&f.ring)?;
    let mut out = TLElement::zero(&f.ring, f.m, g.n);
    for (mg, cg) in &g.terms {
        for (mf, cf) in &f.terms {
            let (mat, loops) = glue(mg, mf);
            let mut c = cg.mul(cf)?;
            for _ in 0..loops {
                c = c.mul(&delta)?;
            }
            out.insert(mat, c);
        }
    }
    Ok(out)
}

/// Side-by-side tensor, `f` on the left.
pub fn tl_tensor(f: &TLElement, g: &TLElement) -> Result<TLElement, TlError> {
    let (m1, n1, m2, n2) = (f.m, f.n, g.m, g.n);
    let shift_f = |i: usize| if i < m1 { i } else { i + m2 };
    let shift_g = |i: usize| if i < m2 { m1 + i } else { i + m1 + n1 };
    let mut out = TLElement::zero(&f.ring, m1 + m2, n1 + n2);
    for (ma, ca) in &f.terms {
        for (mb, cb) in &g.terms {
            let mut pair = vec![usize::MAX; m1 + m2 + n1 + n2];
            for (a, b) in ma.pairs() {
                let (x, y) = (shift_f(a), shift_f(b));
                pair[x] = y;
                pair[y] = x;
            }
            for (a, b) in mb.pairs() {
                let (x, y) = (shift_g(a), shift_g(b));
                pair[x] = y;
                pair[y] = x;
            }
            out.insert(
                PlanarMatching { m: m1 + m2, n: n1 + n2, pair },
                ca.mul(cb)?,
            );
        }
    }
    Ok(out)
}

/// Close an endomorphism around the right: top i joined to bottom i; the
/// value is the sum of coefficient times loop-value to the number of loops.
pub fn tl_close(f: &TLElement) -> Result<LaurentPoly, TlError> {
    if f.m != f.n {
        return Err(TlError::ShapeMismatch {
            expected: "square shape".to_string(),
            found: format!("({}, {})", f.m, f.n),
        });
    }
    let delta = loop_value(&f.ring)?;
    let n = f.m;
    let mut out = LaurentPoly::zero(&f.ring);
    for (mat, c) in &f.terms {
        let mut uf = UnionFind::new(2 * n);
        for (a, b) in mat.pairs() {
            uf.union(a, b);
        }
        for i in 0..n {
            uf.union(i, n + i);
        }
        let mut roots = std::collections::BTreeSet::new();
        for i in 0..2 * n {
            roots.insert(uf.find(i));
        }
        let mut term = c.clone();
        for _ in 0..roots.len() {
            term = term.mul(&delta)?;
        }
        out = out.add(&term)?;
    }
    Ok(out)
}

/// The braided Temperley-Lieb signature: one unoriented self-dual object
/// `o`, cup and cap, positive and negative crossings, twist scalar -q^3.
pub fn tl_signature() -> Signature {
    let ring = RingDescriptor::integer(&["q"]);
    let o = || Letter::plain("o");
    let oo = ObjectWord::repeated(o(), 2);
    let mut twist = BTreeMap::new();
    twist.insert(
        "o".to_string(),
        crate::term::TwistValue::Scalar(LaurentPoly::parse(&ring, "-q^3").unwrap()),
    );
    Signature {
        ring,
        objects: vec![ObjectDecl {
            name: "o".into(),
            oriented: false,
            duality: Duality::SelfDual,
        }],
        generators: vec![
            GenDecl { name: "cup".into(), dom: ObjectWord::unit(), cod: oo.clone(), tag: GenTag::Cup },
            GenDecl { name: "cap".into(), dom: oo.clone(), cod: ObjectWord::unit(), tag: GenTag::Cap },
            GenDecl { name: "sigma".into(), dom: oo.clone(), cod: oo.clone(), tag: GenTag::BraidPos },
            GenDecl { name: "sigma_inv".into(), dom: oo.clone(), cod: oo, tag: GenTag::BraidNeg },
        ],
        twist,
    }
}

/// The Temperley-Lieb presentation with the crossing generators defined by
/// their planar resolutions: zig-zag identities, the loop relation, and the
/// two resolution relations.
pub fn tl_presentation() -> crate::term::Presentation {
    let sig = tl_signature();
    let rel = |l: &str, r: &str| {
        (
            crate::term::parse_term(l, &sig).unwrap(),
            crate::term::parse_term(r, &sig).unwrap(),
        )
    };
    let relations = vec![
        rel("(cup @ id(o)) ; (id(o) @ cap)", "id(o)"),
        rel("(id(o) @ cup) ; (cap @ id(o))", "id(o)"),
        rel("cup ; cap", "-q^2*id() + -q^-2*id()"),
        rel("sigma", "q*id(o o) + q^-1*(cap ; cup)"),
        rel("sigma_inv", "q^-1*id(o o) + q*(cap ; cup)"),
    ];
    crate::term::Presentation { signature: sig, relations }
}

/// Evaluate a term over the braided TL signature into matchings, using the
/// given loop scalar and expanding crossings by their planar resolutions in
/// the `q` variables of the term's ring.
fn eval_term(t: &Term, sig: &Signature, ring: &RingDescriptor) -> Result<TLElement, TlError> {
    match t {
        Term::Id(w) => Ok(TLElement::identity(ring, w.len())),
        Term::Gen(name) => {
            let decl = sig
                .generator(name)
                .ok_or_else(|| TermError::UnknownGenerator(name.clone()))?;
            match decl.tag {
                GenTag::Cup => Ok(TLElement::from_matching(ring, PlanarMatching::cup())),
                GenTag::Cap => Ok(TLElement::from_matching(ring, PlanarMatching::cap())),
                GenTag::BraidPos | GenTag::BraidNeg => {
                    let id2 = TLElement::identity(ring, 2);
                    let hook = TLElement::from_matching(ring, PlanarMatching::hook(0, 2));
                    let (a, b) = if decl.tag == GenTag::BraidPos {
                        ("q", "q^-1")
                    } else {
                        ("q^-1", "q")
                    };
                    let qa = LaurentPoly::parse(ring, a)?;
                    let qb = LaurentPoly::parse(ring, b)?;
                    id2.scale(&qa)?.add(&hook.scale(&qb)?)
                }
                _ => Err(TlError::Unresolvable(name.clone())),
            }
        }
        Term::VCompose(u, l) => {
            let eu = eval_term(u, sig, ring)?;
            let el = eval_term(l, sig, ring)?;
            tl_compose(&eu, &el)
        }
        Term::HTensor(a, b) => {
            let ea = eval_term(a, sig, ring)?;
            let eb = eval_term(b, sig, ring)?;
            tl_tensor(&ea, &eb)
        }
    }
}

/// Resolve all crossings of a linear term into the matching normal form,
/// with loops valued at -q^2 - q^-2 (or at `delta` if the ring has it).
pub fn kb_resolve(t: &LinearTerm, sig: &Signature) -> Result<TLElement, TlError> {
    let ring = t.ring();
    let mut out = TLElement::zero(ring, t.dom.len(), t.cod.len());
    for (term, c) in t.terms() {
        let e = eval_term(term, sig, ring)?;
        out = out.add(&e.scale(c)?)?;
    }
    Ok(out)
}

/// The linear term of a braid word on `n` strands (bottom-to-top product of
/// whiskered crossings; the empty word is the identity).
pub fn braid_word_term(word: &[i32], n: usize, sig: &Signature) -> Result<LinearTerm, TermError> {
    let o = Letter::plain("o");
    let full = ObjectWord::repeated(o.clone(), n);
    let mut acc = LinearTerm::identity(sig, full);
    for &k in word {
        let i = k.unsigned_abs() as usize; // crossing between strands i, i+1 (1-based)
        let name = if k > 0 { "sigma" } else { "sigma_inv" };
        let left = ObjectWord::repeated(o.clone(), i - 1);
        let right = ObjectWord::repeated(o.clone(), n - i - 1);
        let step = Term::whisker(&left, Term::Gen(name.into()), &right);
        acc = LinearTerm::compose(&LinearTerm::from_term(step, sig)?, &acc)?;
    }
    Ok(acc)
}

/// The Jones polynomial of a braid closure, normalized so the unknot is 1:
/// (-q^3)^(-writhe) times the closed resolved diagram, divided by one loop
/// value. The division must be exact; a remainder is an internal error.
pub fn jones(word: &[i32], n: usize) -> Result<LaurentPoly, TlError> {
    let sig = tl_signature();
    let term = braid_word_term(word, n, &sig)?;
    let resolved = kb_resolve(&term, &sig)?;
    let closed = tl_close(&resolved)?;
    let ring = sig.ring.clone();
    let frame = LaurentPoly::parse(&ring, "-q^3")?.pow(-writhe(word))?;
    let delta = loop_value(&ring)?;
    frame
        .mul(&closed)?
        .div_exact(&delta)
        .map_err(|_| TlError::InexactNormalization)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::parse_term;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn qring() -> RingDescriptor {
        RingDescriptor::integer(&["q"])
    }

    fn qp(s: &str) -> LaurentPoly {
        LaurentPoly::parse(&qring(), s).unwrap()
    }

    /// Brute-force matching enumerator: all perfect matchings filtered by
    /// the crossing test, used as the counting oracle.
    fn brute_basis(m: usize, n: usize) -> Vec<PlanarMatching> {
        fn all_matchings(points: &[usize]) -> Vec<Vec<(usize, usize)>> {
            if points.is_empty() {
                return vec![vec![]];
            }
            let a = points[0];
            let mut out = Vec::new();
            for i in 1..points.len() {
                let b = points[i];
                let rest: Vec<usize> = points[1..]
                    .iter()
                    .copied()
                    .filter(|&x| x != b)
                    .collect();
                for mut sub in all_matchings(&rest) {
                    sub.push((a, b));
                    out.push(sub);
                }
            }
            out
        }
        let points: Vec<usize> = (0..m + n).collect();
        all_matchings(&points)
            .into_iter()
            .filter_map(|pairs| PlanarMatching::new(m, n, &pairs).ok())
            .collect()
    }

    #[test]
    fn basis_counts_are_catalan() {
        assert_eq!(tl_basis(0, 0).unwrap().len(), 1);
        assert_eq!(tl_basis(2, 2).unwrap().len(), 2);
        assert_eq!(tl_basis(3, 3).unwrap().len(), 5);
        let catalan = [1usize, 1, 2, 5, 14, 42, 132, 429];
        for (n, expected) in catalan.iter().enumerate() {
            let b = tl_basis(n, n).unwrap();
            assert_eq!(b.len(), *expected, "Catalan count failed at n={n}");
            let mut brute = brute_basis(n, n);
            brute.sort();
            brute.dedup();
            if n <= 4 {
                assert_eq!(b, brute, "enumeration disagrees with brute force at n={n}");
            }
        }
        // Uneven shapes.
        assert_eq!(tl_basis(1, 3).unwrap().len(), 2);
        assert_eq!(tl_basis(0, 6).unwrap().len(), 5);
        assert!(tl_basis(1, 2).is_err());
    }

    #[test]
    fn crossing_pairings_are_rejected() {
        // bottom 0-top 1 and bottom 1-top 0 cross.
        assert!(matches!(
            PlanarMatching::new(2, 2, &[(0, 3), (1, 2)]),
            Err(TlError::Crossing)
        ));
        // Nested arcs on one side are fine.
        assert!(PlanarMatching::new(0, 4, &[(0, 3), (1, 2)]).is_ok());
        // Interleaved arcs on one side cross.
        assert!(matches!(
            PlanarMatching::new(0, 4, &[(0, 2), (1, 3)]),
            Err(TlError::Crossing)
        ));
    }

    #[test]
    fn hook_relations() {
        let r = qring();
        let delta = loop_value(&r).unwrap();
        for n in 2..=4 {
            for i in 0..n - 1 {
                let e = TLElement::from_matching(&r, PlanarMatching::hook(i, n));
                let ee = tl_compose(&e, &e).unwrap();
                assert_eq!(ee, e.scale(&delta).unwrap(), "e^2 = delta e at ({i},{n})");
                if i + 2 < n {
                    let f = TLElement::from_matching(&r, PlanarMatching::hook(i + 1, n));
                    let efe = tl_compose(&e, &tl_compose(&f, &e).unwrap()).unwrap();
                    assert_eq!(efe, e, "e f e = e at ({i},{n})");
                    let fef = tl_compose(&f, &tl_compose(&e, &f).unwrap()).unwrap();
                    assert_eq!(fef, f, "f e f = f at ({i},{n})");
                }
            }
        }
    }

    #[test]
    fn compose_counts_loops() {
        let r = qring();
        let delta = loop_value(&r).unwrap();
        // cap after cup closes one loop.
        let cup = TLElement::from_matching(&r, PlanarMatching::cup());
        let cap = TLElement::from_matching(&r, PlanarMatching::cap());
        let val = tl_compose(&cap, &cup).unwrap();
        assert_eq!(val.m, 0);
        assert_eq!(val.n, 0);
        assert_eq!(
            val.coeff(&PlanarMatching::new(0, 0, &[]).unwrap()),
            delta
        );
        // Identity is neutral.
        let e = TLElement::from_matching(&r, PlanarMatching::hook(0, 3));
        let id3 = TLElement::identity(&r, 3);
        assert_eq!(tl_compose(&id3, &e).unwrap(), e);
        assert_eq!(tl_compose(&e, &id3).unwrap(), e);
    }

    #[test]
    fn tensor_shapes_and_zigzag() {
        let r = qring();
        let cup = TLElement::from_matching(&r, PlanarMatching::cup());
        let cap = TLElement::from_matching(&r, PlanarMatching::cap());
        let id1 = TLElement::identity(&r, 1);
        let t = tl_tensor(&cup, &cap).unwrap();
        assert_eq!((t.m, t.n), (2, 2));
        // Zig-zag: (id ⊗ cap)(cup ⊗ id) = id.
        let lhs = tl_compose(
            &tl_tensor(&id1, &cap).unwrap(),
            &tl_tensor(&cup, &id1).unwrap(),
        )
        .unwrap();
        assert_eq!(lhs, id1);
        // The hook through a neighbor: (e ⊗ id)(id ⊗ e) is a single matching.
        let e = TLElement::from_matching(&r, PlanarMatching::hook(0, 2));
        let a = tl_compose(
            &tl_tensor(&e, &id1).unwrap(),
            &tl_tensor(&id1, &e).unwrap(),
        )
        .unwrap();
        assert_eq!(a.num_terms(), 1);
        let (mat, c) = a.terms().next().unwrap();
        assert!(c.is_one());
        assert_eq!(
            *mat,
            PlanarMatching::new(3, 3, &[(0, 5), (1, 2), (3, 4)]).unwrap()
        );
    }

    #[test]
    fn compose_is_associative_on_random_elements() {
        let r = qring();
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..40 {
            let n = rng.gen_range(1..=5usize);
            let shapes: Vec<usize> = (0..4)
                .map(|_| {
                    let k = rng.gen_range(0..=n);
                    if (n + k) % 2 == 0 { k } else { k + 1 }
                })
                .collect();
            let sample = |rng: &mut StdRng, m: usize, n2: usize| {
                let basis = tl_basis(m, n2).unwrap();
                let mut el = TLElement::zero(&r, m, n2);
                for mat in basis {
                    if rng.gen_bool(0.5) {
                        let c = LaurentPoly::int(&r, rng.gen_range(-3i64..=3));
                        el = el
                            .add(&TLElement::from_matching(&r, mat).scale(&c).unwrap())
                            .unwrap();
                    }
                }
                el
            };
            let f = sample(&mut rng, shapes[0].min(5), n);
            let g = sample(&mut rng, n, shapes[1].min(5));
            let h = sample(&mut rng, shapes[1].min(5), shapes[2].min(5));
            let left = tl_compose(&h, &tl_compose(&g, &f).unwrap()).unwrap();
            let right = tl_compose(&tl_compose(&h, &g).unwrap(), &f).unwrap();
            assert_eq!(left, right);
        }
    }

    #[test]
    fn kb_crossing_resolution_and_reidemeister() {
        let sig = tl_signature();
        let pos = kb_resolve(&parse_term("sigma", &sig).unwrap(), &sig).unwrap();
        assert_eq!(pos.num_terms(), 2);
        assert_eq!(pos.coeff(&PlanarMatching::identity(2)), qp("q"));
        assert_eq!(pos.coeff(&PlanarMatching::hook(0, 2)), qp("q^-1"));

        // R2: the two crossings cancel after the loop specialization.
        let r2 = kb_resolve(&parse_term("sigma ; sigma_inv", &sig).unwrap(), &sig).unwrap();
        assert_eq!(r2, TLElement::identity(&qring(), 2));
        let r2b = kb_resolve(&parse_term("sigma_inv ; sigma", &sig).unwrap(), &sig).unwrap();
        assert_eq!(r2b, TLElement::identity(&qring(), 2));

        // R3 on three strands.
        let lhs = kb_resolve(
            &parse_term(
                "(sigma @ id(o)) ; (id(o) @ sigma) ; (sigma @ id(o))",
                &sig,
            )
            .unwrap(),
            &sig,
        )
        .unwrap();
        let rhs = kb_resolve(
            &parse_term(
                "(id(o) @ sigma) ; (sigma @ id(o)) ; (id(o) @ sigma)",
                &sig,
            )
            .unwrap(),
            &sig,
        )
        .unwrap();
        assert_eq!(lhs, rhs);

        // A positive curl is the twist scalar -q^3; a negative curl its
        // inverse.
        let curl = kb_resolve(
            &parse_term("(cup @ id(o)) ; (id(o) @ sigma) ; (cap @ id(o))", &sig).unwrap(),
            &sig,
        )
        .unwrap();
        assert_eq!(
            curl,
            TLElement::identity(&qring(), 1).scale(&qp("-q^3")).unwrap()
        );
        let curl_neg = kb_resolve(
            &parse_term(
                "(cup @ id(o)) ; (id(o) @ sigma_inv) ; (cap @ id(o))",
                &sig,
            )
            .unwrap(),
            &sig,
        )
        .unwrap();
        assert_eq!(
            curl_neg,
            TLElement::identity(&qring(), 1).scale(&qp("-q^-3")).unwrap()
        );
    }

    #[test]
    fn close_counts_loops() {
        let r = qring();
        let delta = loop_value(&r).unwrap();
        for n in 1..=4 {
            let id = TLElement::identity(&r, n);
            assert_eq!(tl_close(&id).unwrap(), delta.pow(n as i64).unwrap());
        }
        let e = TLElement::from_matching(&r, PlanarMatching::hook(0, 2));
        assert_eq!(tl_close(&e).unwrap(), delta);
        let q = qp("q");
        let id2 = TLElement::identity(&r, 2).scale(&q).unwrap();
        assert_eq!(
            tl_close(&id2).unwrap(),
            q.mul(&delta.pow(2).unwrap()).unwrap()
        );
    }

    /// Independent Kauffman state-sum oracle for braid closures: enumerate
    /// all 2^c smoothings directly on the braid word, tracking wire joins
    /// with a union-find; never touches the matching machinery.
    fn bracket_oracle(word: &[i32], n: usize) -> LaurentPoly {
        let r = qring();
        let delta = qp("-q^2 - q^-2");
        let c = word.len();
        let mut total = LaurentPoly::zero(&r);
        for state in 0..(1u32 << c) {
            // Wire labels: 0..n initial; fresh labels for each hook smoothing.
            let mut labels: Vec<usize> = (0..n).collect();
            let mut next = n;
            let mut joins: Vec<(usize, usize)> = Vec::new();
            let mut exponent = 0i64;
            for (idx, &k) in word.iter().enumerate() {
                let i = k.unsigned_abs() as usize - 1;
                let hook = state & (1 << idx) != 0;
                exponent += match (k > 0, hook) {
                    (true, false) => 1,
                    (true, true) => -1,
                    (false, false) => -1,
                    (false, true) => 1,
                };
                if hook {
                    joins.push((labels[i], labels[i + 1]));
                    labels[i] = next;
                    labels[i + 1] = next;
                    next += 1;
                }
            }
            for (i, label) in labels.iter().enumerate().take(n) {
                joins.push((*label, i));
            }
            let mut uf = UnionFind::new(next);
            for (a, b) in joins {
                uf.union(a, b);
            }
            let mut roots = std::collections::BTreeSet::new();
            for i in 0..next {
                roots.insert(uf.find(i));
            }
            let term = LaurentPoly::var_pow(&r, "q", exponent)
                .unwrap()
                .mul(&delta.pow(roots.len() as i64).unwrap())
                .unwrap();
            total = total.add(&term).unwrap();
        }
        total
    }

    fn jones_oracle(word: &[i32], n: usize) -> LaurentPoly {
        let frame = qp("-q^3").pow(-writhe(word)).unwrap();
        let delta = qp("-q^2 - q^-2");
        frame
            .mul(&bracket_oracle(word, n))
            .unwrap()
            .div_exact(&delta)
            .unwrap()
    }

    #[test]
    fn jones_matches_frozen_values() {
        // Unknot normalizes to 1.
        assert_eq!(jones(&[], 1).unwrap(), qp("1"));
        // Trefoil from three positive crossings.
        let trefoil = jones(&[1, 1, 1], 2).unwrap();
        assert_eq!(trefoil, qp("-q^-16 + q^-12 + q^-4"));
        assert_eq!(trefoil, jones_oracle(&[1, 1, 1], 2));
        // Its mirror inverts q.
        let mirror = jones(&[-1, -1, -1], 2).unwrap();
        assert_eq!(mirror, qp("-q^16 + q^12 + q^4"));
        // Hopf link from two positive crossings.
        let hopf = jones(&[1, 1], 2).unwrap();
        assert_eq!(hopf, qp("-q^-10 - q^-2"));
        assert_eq!(hopf, jones_oracle(&[1, 1], 2));
        // The figure-eight value is symmetric under q -> q^-1.
        let fig8 = jones(&[1, -2, 1, -2], 3).unwrap();
        assert_eq!(fig8, qp("q^-8 - q^-4 + 1 - q^4 + q^8"));
        assert_eq!(fig8, jones_oracle(&[1, -2, 1, -2], 3));
    }

    #[test]
    fn jones_matches_oracle_on_random_words() {
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..60 {
            let n = rng.gen_range(1..=4usize);
            let len = if n == 1 { 0 } else { rng.gen_range(0..=6usize) };
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
            assert_eq!(
                jones(&word, n).unwrap(),
                jones_oracle(&word, n),
                "oracle mismatch for {word:?} on {n} strands"
            );
        }
    }

    #[test]
    fn jones_is_stable_under_markov_moves() {
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..20 {
            let n = rng.gen_range(2..=3usize);
            let len = rng.gen_range(0..=5usize);
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
            let v = jones(&word, n).unwrap();
            // Stabilization: append a crossing on a fresh strand.
            let mut stab = word.clone();
            stab.push(n as i32);
            assert_eq!(v, jones(&stab, n + 1).unwrap(), "positive stabilization");
            let mut stab_neg = word.clone();
            stab_neg.push(-(n as i32));
            assert_eq!(v, jones(&stab_neg, n + 1).unwrap(), "negative stabilization");
            // Conjugation leaves the closure unchanged.
            if n >= 2 {
                let mut conj = vec![1i32];
                conj.extend_from_slice(&word);
                conj.push(-1);
                assert_eq!(v, jones(&conj, n).unwrap(), "conjugation");
            }
        }
    }
}
