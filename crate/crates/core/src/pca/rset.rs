//! Inhabited realizer sets, presented as finite unions of patterns.
//!
//! A piece is the whole carrier, a template element whose variables range
//! over the carrier (`?n`) or over atom-free normal forms (`!n`), or a product
//! of sets for tuple carriers. Variables are local to a piece.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::sk::{Gv, Sk};
use super::{split_top, string_serde, AppOutcome, Backend, Budget, Elem, SymOutcome};
use crate::terms::Term;
use crate::verdict::{Counterexample, Verdict};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Piece {
    Full,
    Elem(Elem),
    Prod(Vec<RSet>),
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RSet {
    pub pieces: Vec<Piece>,
}

const MAX_CASES: usize = 512;

/// Outcome of `U·V`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetApp {
    pub defined: Verdict,
    /// Exact image when every case was decided symbolically.
    pub image: Option<RSet>,
}

impl RSet {
    pub fn new(pieces: Vec<Piece>) -> RSet {
        let mut out: Vec<Piece> = Vec::with_capacity(pieces.len());
        for p in pieces {
            if !out.contains(&p) {
                out.push(p);
            }
        }
        assert!(!out.is_empty(), "realizer sets are inhabited");
        RSet { pieces: out }
    }

    pub fn single(e: Elem) -> RSet {
        RSet { pieces: vec![Piece::Elem(e)] }
    }

    pub fn sk(t: Sk) -> RSet {
        RSet::single(Elem::Sk(t))
    }

    pub fn full() -> RSet {
        RSet { pieces: vec![Piece::Full] }
    }

    pub fn prod(parts: Vec<RSet>) -> RSet {
        RSet { pieces: vec![Piece::Prod(parts)] }
    }

    pub fn elems(items: impl IntoIterator<Item = Elem>) -> RSet {
        RSet::new(items.into_iter().map(Piece::Elem).collect())
    }

    pub fn union(&self, other: &RSet) -> RSet {
        RSet::new(self.pieces.iter().chain(&other.pieces).cloned().collect())
    }

    pub fn is_full(&self) -> bool {
        self.pieces.iter().any(|p| matches!(p, Piece::Full))
    }

    /// The members, when the set is a finite list of closed elements.
    pub fn finite(&self) -> Option<Vec<Elem>> {
        self.pieces
            .iter()
            .map(|p| match p {
                Piece::Elem(e) if !e.has_vars() => Some(e.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn has_atoms(&self) -> bool {
        self.pieces.iter().any(|p| match p {
            Piece::Elem(e) => e.has_atoms(),
            Piece::Prod(rs) => rs.iter().any(RSet::has_atoms),
            Piece::Full => false,
        })
    }

    /// Generic elements whose instances together are exactly this set, each
    /// with variables numbered from 0. `None` if some piece has no generic
    /// form or there are too many cases.
    pub fn cases(&self, b: &Backend) -> Option<Vec<Elem>> {
        let mut out = Vec::new();
        for p in &self.pieces {
            match p {
                Piece::Full => out.push(b.generic(&mut 0)?),
                Piece::Elem(e) => out.push(e.clone()),
                Piece::Prod(rs) => {
                    let mut acc: Vec<Vec<Elem>> = vec![vec![]];
                    for (i, r) in rs.iter().enumerate() {
                        let cs = r.cases(b.part(i))?;
                        let mut next = Vec::new();
                        for prefix in &acc {
                            let shift = prefix.iter().map(Elem::next_var).max().unwrap_or(0);
                            for c in &cs {
                                let mut v = prefix.clone();
                                v.push(c.shift_vars(shift));
                                next.push(v);
                            }
                        }
                        if next.len() > MAX_CASES {
                            return None;
                        }
                        acc = next;
                    }
                    out.extend(acc.into_iter().map(Elem::Tuple));
                }
            }
            if out.len() > MAX_CASES {
                return None;
            }
        }
        Some(out)
    }

    /// Exact membership of a closed element, or inclusion of every instance
    /// of a generic one (a sufficient test).
    pub fn matches(&self, b: &Backend, e: &Elem) -> bool {
        self.pieces.iter().any(|p| match p {
            Piece::Full => b.contains(&e.close()),
            Piece::Elem(pat) => match_elem(pat, e, &mut BTreeMap::new()),
            Piece::Prod(rs) => match e {
                Elem::Tuple(es) if es.len() == rs.len() => {
                    rs.iter().zip(es).enumerate().all(|(i, (r, x))| r.matches(b.part(i), x))
                }
                _ => false,
            },
        })
    }

    pub fn member(&self, b: &Backend, e: &Elem) -> bool {
        debug_assert!(!e.has_vars());
        self.matches(b, e)
    }

    pub fn sample<R: Rng>(&self, b: &Backend, rng: &mut R) -> Elem {
        let p = &self.pieces[rng.gen_range(0..self.pieces.len())];
        match p {
            Piece::Full => b.random_elem(rng),
            Piece::Elem(e) => instantiate(e, b, rng),
            Piece::Prod(rs) => Elem::Tuple(rs.iter().enumerate().map(|(i, r)| r.sample(b.part(i), rng)).collect()),
        }
    }

    pub fn inhabitant(&self, b: &Backend) -> Elem {
        match &self.pieces[0] {
            Piece::Full => b.default_elem(),
            Piece::Elem(e) => e.close(),
            Piece::Prod(rs) => Elem::Tuple(rs.iter().enumerate().map(|(i, r)| r.inhabitant(b.part(i))).collect()),
        }
    }

    /// Projection onto coordinate `i` of a tuple carrier.
    pub fn component(&self, i: usize, b: &Backend) -> RSet {
        let _ = b;
        let mut out = Vec::new();
        for p in &self.pieces {
            match p {
                Piece::Full => out.push(Piece::Full),
                Piece::Elem(Elem::Tuple(es)) => out.push(Piece::Elem(es[i].clone())),
                Piece::Prod(rs) => out.extend(rs[i].pieces.iter().cloned()),
                Piece::Elem(e) => panic!("component {i} of non-tuple {e}"),
            }
        }
        RSet::new(out)
    }

    /// `U·V`: definedness plus the image when it is known exactly.
    pub fn apply<R: Rng>(&self, v: &RSet, b: &Backend, budget: &Budget, rng: &mut R) -> SetApp {
        let (defined, image) = app_check(self, v, None, b, budget, rng);
        SetApp { defined, image }
    }

    /// `U·V↓` and `U·V ⊆ W`.
    pub fn maps_into<R: Rng>(&self, v: &RSet, w: &RSet, b: &Backend, budget: &Budget, rng: &mut R) -> Verdict {
        app_check(self, v, Some(w), b, budget, rng).0
    }

    pub fn subset<R: Rng>(&self, w: &RSet, b: &Backend, budget: &Budget, rng: &mut R) -> Verdict {
        match self.cases(b) {
            Some(cs) => Verdict::all(cs.iter().map(|g| generic_in(g, w, b, budget, rng))),
            None => {
                for _ in 0..budget.samples {
                    let e = self.sample(b, rng);
                    if !w.member(b, &e) {
                        return not_in(Term::elem(e), w);
                    }
                }
                Verdict::evidence(budget.samples as u64)
            }
        }
    }

    pub fn set_eq<R: Rng>(&self, w: &RSet, b: &Backend, budget: &Budget, rng: &mut R) -> Verdict {
        self.subset(w, b, budget, rng).and(w.subset(self, b, budget, rng))
    }
}

fn not_in(term: Term, target: &RSet) -> Verdict {
    Verdict::refuted(Counterexample::NotIn { term, target: target.clone() })
}

/// Every instance of the generic `g` lies in `w`.
fn generic_in<R: Rng>(g: &Elem, w: &RSet, b: &Backend, budget: &Budget, rng: &mut R) -> Verdict {
    if w.matches(b, g) {
        return Verdict::Proven;
    }
    if !g.has_vars() {
        return not_in(Term::elem(g.clone()), w);
    }
    for _ in 0..budget.samples {
        let e = instantiate(g, b, rng);
        if !w.member(b, &e) {
            return not_in(Term::elem(e), w);
        }
    }
    Verdict::evidence(budget.samples as u64)
}

fn app_check<R: Rng>(
    u: &RSet,
    v: &RSet,
    w: Option<&RSet>,
    b: &Backend,
    budget: &Budget,
    rng: &mut R,
) -> (Verdict, Option<RSet>) {
    let pairs: Vec<(Elem, Elem)> = match (u.cases(b), v.cases(b)) {
        (Some(us), Some(vs)) if us.len() * vs.len() <= MAX_CASES => us
            .iter()
            .flat_map(|gu| {
                let shift = gu.next_var();
                vs.iter().map(move |gv| (gu.clone(), gv.shift_vars(shift)))
            })
            .collect(),
        _ => return sampled(u, v, w, b, budget, rng),
    };
    let mut verdict = Verdict::Proven;
    let mut image = Some(Vec::new());
    for (gu, gv) in pairs {
        match b.apply_symbolic(&gu, &gv, budget.fuel) {
            SymOutcome::Exact(r) => {
                if let Some(w) = w {
                    verdict = verdict.and(generic_in(&r, w, b, budget, rng));
                }
                if let Some(img) = image.as_mut() {
                    img.push(Piece::Elem(r));
                }
            }
            SymOutcome::Open => {
                image = None;
                let mut checked = 0;
                let mut local = Verdict::Proven;
                for _ in 0..budget.samples {
                    let (x, y) = instantiate_pair(&gu, &gv, b, rng);
                    local = local.and(concrete(&x, &y, w, b, budget));
                    checked += 1;
                    if local.is_refuted() {
                        break;
                    }
                }
                verdict = verdict.and(local.weaken(checked));
            }
            SymOutcome::Unknown(f) => {
                image = None;
                verdict = verdict.and(Verdict::unknown(format!("fuel {f} exhausted on {gu} {gv}")));
            }
        }
        if verdict.is_refuted() {
            break;
        }
    }
    (verdict, image.map(RSet::new))
}

fn sampled<R: Rng>(
    u: &RSet,
    v: &RSet,
    w: Option<&RSet>,
    b: &Backend,
    budget: &Budget,
    rng: &mut R,
) -> (Verdict, Option<RSet>) {
    let mut verdict = Verdict::Proven;
    for _ in 0..budget.samples {
        let x = u.sample(b, rng);
        let y = v.sample(b, rng);
        verdict = verdict.and(concrete(&x, &y, w, b, budget));
        if verdict.is_refuted() {
            break;
        }
    }
    (verdict.weaken(budget.samples as u64), None)
}

fn concrete(x: &Elem, y: &Elem, w: Option<&RSet>, b: &Backend, budget: &Budget) -> Verdict {
    let term = Term::app(Term::elem(x.clone()), Term::elem(y.clone()));
    match b.apply(x, y, budget.fuel) {
        AppOutcome::Value(r) => match w {
            Some(w) if !w.member(b, &r) => not_in(term, w),
            _ => Verdict::Proven,
        },
        AppOutcome::UndefinedCertified => Verdict::refuted(Counterexample::Undefined { term }),
        AppOutcome::Unknown(f) => Verdict::unknown(format!("fuel {f} exhausted on {x} {y}")),
    }
}

fn instantiate_pair<R: Rng>(x: &Elem, y: &Elem, b: &Backend, rng: &mut R) -> (Elem, Elem) {
    let mut seen = BTreeMap::new();
    (inst(x, b, rng, &mut seen), inst(y, b, rng, &mut seen))
}

pub fn instantiate<R: Rng>(e: &Elem, b: &Backend, rng: &mut R) -> Elem {
    inst(e, b, rng, &mut BTreeMap::new())
}

fn inst<R: Rng>(e: &Elem, b: &Backend, rng: &mut R, seen: &mut BTreeMap<Gv, Sk>) -> Elem {
    match (e, b) {
        (Elem::Tuple(es), Backend::Product { parts }) => {
            Elem::Tuple(es.iter().zip(parts).map(|(x, p)| inst(x, p, rng, seen)).collect())
        }
        (Elem::Sk(t), Backend::Sk { atoms }) if t.has_vars() => Elem::Sk(t.map_vars(&mut |g| {
            seen.entry(g)
                .or_insert_with(|| {
                    let n = rng.gen_range(1..=super::SAMPLE_TERM_SIZE);
                    super::sk::random_nf(rng, n, if g.pure { 0 } else { *atoms })
                })
                .clone()
        })),
        _ => e.clone(),
    }
}

pub fn match_elem(pat: &Elem, t: &Elem, sub: &mut BTreeMap<Gv, Sk>) -> bool {
    match (pat, t) {
        (Elem::Sk(p), Elem::Sk(x)) => match_sk(p, x, sub),
        (Elem::Tuple(ps), Elem::Tuple(xs)) => {
            ps.len() == xs.len() && ps.iter().zip(xs).all(|(p, x)| match_elem(p, x, sub))
        }
        _ => pat == t,
    }
}

fn match_sk(p: &Sk, t: &Sk, sub: &mut BTreeMap<Gv, Sk>) -> bool {
    match p {
        Sk::Var(g) => {
            if g.pure && !t.is_pure() {
                return false;
            }
            match sub.get(g) {
                Some(bound) => bound == t,
                None => {
                    sub.insert(*g, t.clone());
                    true
                }
            }
        }
        Sk::App(pl, pr) => match t {
            Sk::App(tl, tr) => match_sk(pl, tl, sub) && match_sk(pr, tr, sub),
            _ => false,
        },
        _ => p == t,
    }
}

impl fmt::Display for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Piece::Full => write!(f, "*"),
            Piece::Elem(e) => write!(f, "{e}"),
            Piece::Prod(rs) => {
                write!(f, "[")?;
                for (i, r) in rs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "{r}")?;
                }
                write!(f, "]")
            }
        }
    }
}

impl fmt::Display for RSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.pieces.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for RSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RSet({self})")
    }
}

impl FromStr for RSet {
    type Err = String;

    fn from_str(s: &str) -> Result<RSet, String> {
        let mut pieces = Vec::new();
        for part in split_top(s, '|') {
            let part = part.trim();
            if part.is_empty() {
                return Err(format!("empty piece in realizer set {s:?}"));
            }
            let piece = if part == "*" {
                Piece::Full
            } else if let Some(body) = part.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
                Piece::Prod(split_top(body, ';').into_iter().map(str::parse).collect::<Result<_, _>>()?)
            } else {
                Piece::Elem(part.parse()?)
            };
            pieces.push(piece);
        }
        Ok(RSet::new(pieces))
    }
}

string_serde!(RSet);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pca::sk::parse_sk;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rs(s: &str) -> RSet {
        s.parse().unwrap()
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(3)
    }

    #[test]
    fn parse_print() {
        for s in ["K | S ?0", "*", "[K; S | *]", "(K, !1)", "{1,2} | {}"] {
            assert_eq!(rs(&rs(s).to_string()), rs(s));
        }
    }

    #[test]
    fn k_applied_to_a_set_is_exact() {
        let b = Backend::sk(0);
        let out = rs("K").apply(&rs("S K"), &b, &Budget::default(), &mut rng());
        assert_eq!(out.defined, Verdict::Proven);
        assert_eq!(out.image, Some(rs("K (S K)")));
    }

    #[test]
    fn identity_on_full_is_proven_symbolically() {
        let b = Backend::sk(2);
        let v = rs("S K K").maps_into(&rs("*"), &rs("*"), &b, &Budget::default(), &mut rng());
        assert_eq!(v, Verdict::Proven);
        let img = rs("S K K").apply(&rs("o1 ?0"), &b, &Budget::default(), &mut rng()).image.unwrap();
        assert_eq!(img, rs("o1 ?0"));
    }

    #[test]
    fn full_times_full_is_only_evidence() {
        let b = Backend::sk(0);
        let out = rs("*").apply(&rs("*"), &b, &Budget::default(), &mut rng());
        assert!(!out.defined.is_proven());
        assert!(out.image.is_none());
    }

    #[test]
    fn pattern_subset_by_matching() {
        let b = Backend::sk(1);
        let budget = Budget::default();
        assert!(rs("K (S !0)").subset(&rs("K ?1"), &b, &budget, &mut rng()).is_proven());
        assert!(rs("K o0").subset(&rs("K !0"), &b, &budget, &mut rng()).is_refuted());
        let v = rs("K ?0").subset(&rs("K !0"), &b, &budget, &mut rng());
        assert!(v.is_refuted(), "{v}");
    }

    #[test]
    fn membership_respects_repeated_variables() {
        let b = Backend::sk(0);
        let pat = rs("S ?0 ?0");
        let t = |s: &str| Elem::Sk(parse_sk(s).unwrap());
        assert!(pat.member(&b, &t("S K K")));
        assert!(!pat.member(&b, &t("S K S")));
    }

    #[test]
    fn product_components() {
        let b = Backend::Product { parts: vec![Backend::sk(0), Backend::Trivial] };
        let u = rs("[K | S; u]");
        assert_eq!(u.component(0, &b), rs("K | S"));
        assert!(u.member(&b, &"(S, u)".parse().unwrap()));
        assert_eq!(u.cases(&b).unwrap().len(), 2);
    }
}
