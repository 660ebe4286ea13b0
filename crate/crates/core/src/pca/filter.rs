//! Filter presentations and membership certificates.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::rset::{Piece, RSet};
use super::sk::Sk;
use super::{AppOutcome, Backend, Budget, Elem};
use crate::terms::{self, Term};
use crate::verdict::{Counterexample, Verdict};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Filter {
    /// Every inhabited set.
    Maximal,
    /// Sets meeting `C`, the normal forms whose atoms all lie in `atoms`.
    /// `C` is closed under application and contains k and s.
    Sections { atoms: Vec<u32> },
    /// The least filter containing `gens`.
    Generated { gens: Vec<RSet> },
    /// Families `(U_i)` with `U_i` in the i-th filter.
    Family { parts: Vec<Filter> },
    /// Sets of tuples containing a product of members of the part filters.
    Pair { parts: Vec<Filter> },
    /// Families over `|I|` generated by constant families `(V,..,V)` with
    /// `V` in `base`, together with `ei`.
    Slice { base: Box<Filter>, ei: Vec<RSet> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Cert {
    Inhabited { witness: Elem },
    Section { witness: Elem },
    /// `term` over positional variables `x0..`, one per argument.
    Gen { term: Term, args: Vec<Arg> },
    Family { parts: Vec<Cert> },
    Pair { sets: Vec<RSet>, parts: Vec<Cert> },
    /// A single `V` in the base filter with `V·E_I(i) ⊆ U_i` for every `i`.
    Lemma { v: RSet, cert: Box<Cert> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Arg {
    Gen { index: usize },
    Pulled { set: RSet, cert: Box<Cert> },
    Ei,
}

const MAX_ATTEMPTS: usize = 20_000;

fn atoms_of(e: &Elem) -> BTreeSet<u32> {
    let mut s = BTreeSet::new();
    e.atoms(&mut s);
    s
}

/// Some element of `v` whose atoms lie in `allowed`.
fn section_in(v: &RSet, b: &Backend, allowed: &BTreeSet<u32>) -> Option<Elem> {
    v.cases(b)?.into_iter().map(|g| g.close()).find(|w| atoms_of(w).is_subset(allowed))
}

/// Every element of `v` has an atom outside `allowed`.
pub fn outside_sections(v: &RSet, b: &Backend, allowed: &[u32]) -> bool {
    let allowed: BTreeSet<u32> = allowed.iter().copied().collect();
    matches!(b, Backend::Sk { .. }) && v.cases(b).is_some_and(|cs| cs.iter().all(|g| !atoms_of(g).is_subset(&allowed)))
}

/// Generators `V×V` over a two-part product only produce sets `T×T`, so
/// `W` is a member exactly when `W₀ ∩ W₁` is in the filter generated by
/// the `V`. A base certificate replays unchanged on the squares.
fn square_reduction<R: Rng>(gens: &[RSet], b: &Backend, v: &RSet, budget: &Budget, rng: &mut R) -> Option<(Verdict, Option<Cert>)> {
    let Backend::Product { parts } = b else { return None };
    if parts.len() != 2 || parts[0] != parts[1] {
        return None;
    }
    let base: Vec<RSet> = gens.iter().map(|g| g.component(0, b)).collect();
    if gens.iter().zip(&base).any(|(g, c)| *g != RSet::prod(vec![c.clone(); 2])) {
        return None;
    }
    let (left, right) = (v.component(0, b), v.component(1, b));
    let meet: Vec<Elem> = left.finite()?.into_iter().filter(|e| right.member(&parts[0], e)).collect();
    if meet.is_empty() {
        return Some((Verdict::refuted(Counterexample::Disjoint { left, right }), None));
    }
    let base = Filter::Generated { gens: base };
    match base.search(&parts[0], &RSet::elems(meet), budget, rng) {
        (_, Some(c)) => Some((Filter::Generated { gens: gens.to_vec() }.replay(b, v, &c, budget, rng), Some(c))),
        (r @ Verdict::Refuted { .. }, None) => Some((r, None)),
        _ => None,
    }
}

impl Filter {
    pub fn sections() -> Filter {
        Filter::Sections { atoms: vec![] }
    }

    pub fn part(&self, i: usize) -> &Filter {
        match self {
            Filter::Family { parts } | Filter::Pair { parts } => &parts[i],
            f => f,
        }
    }

    /// For filters sitting between the sets meeting `C_A` and something
    /// containing them: the atom set `A`.
    fn section_atoms(&self, b: &Backend) -> Option<BTreeSet<u32>> {
        match (self, b) {
            (Filter::Sections { atoms }, Backend::Sk { .. }) => Some(atoms.iter().copied().collect()),
            (Filter::Generated { gens }, Backend::Sk { .. }) => {
                let mut allowed = BTreeSet::new();
                for g in gens {
                    for p in &g.pieces {
                        if let Piece::Elem(e) = p {
                            e.atoms(&mut allowed);
                        }
                    }
                }
                Some(allowed)
            }
            _ => None,
        }
    }

    /// Singleton generators that contain k and s and are otherwise atoms or
    /// atom-free: then the filter is exactly the sets meeting `C_A`.
    fn generated_is_sections(gens: &[RSet]) -> Option<BTreeMap<Sk, usize>> {
        let mut leaves = BTreeMap::new();
        for (i, g) in gens.iter().enumerate() {
            let es = g.finite()?;
            if es.len() != 1 {
                continue;
            }
            match &es[0] {
                Elem::Sk(t @ (Sk::K | Sk::S | Sk::Atom(_))) => {
                    leaves.entry(t.clone()).or_insert(i);
                }
                _ => {}
            }
        }
        (leaves.contains_key(&Sk::K) && leaves.contains_key(&Sk::S)).then_some(leaves)
    }

    pub fn replay<R: Rng>(&self, b: &Backend, v: &RSet, cert: &Cert, budget: &Budget, rng: &mut R) -> Verdict {
        let not_in = |w: &Elem| Verdict::refuted(Counterexample::NotIn { term: Term::elem(w.clone()), target: v.clone() });
        match (self, cert) {
            (Filter::Maximal, Cert::Inhabited { witness } | Cert::Section { witness }) => {
                if v.member(b, witness) {
                    Verdict::Proven
                } else {
                    not_in(witness)
                }
            }
            (Filter::Sections { atoms }, Cert::Section { witness }) => {
                let allowed: BTreeSet<u32> = atoms.iter().copied().collect();
                if !b.contains(witness) || !atoms_of(witness).is_subset(&allowed) {
                    Verdict::refuted(Counterexample::OutsideSections {
                        set: RSet::single(witness.clone()),
                        allowed: atoms.clone(),
                    })
                } else if !v.member(b, witness) {
                    not_in(witness)
                } else {
                    Verdict::Proven
                }
            }
            (Filter::Generated { gens }, Cert::Gen { term, args }) => {
                let mut env = BTreeMap::new();
                for (j, a) in args.iter().enumerate() {
                    match a {
                        Arg::Gen { index } if *index < gens.len() => {
                            env.insert(format!("x{j}"), gens[*index].clone());
                        }
                        _ => return malformed("generated-filter argument"),
                    }
                }
                terms::term_into(b, term, &env, v, budget, rng).unwrap_or_else(|e| Verdict::unknown(e.to_string()))
            }
            (Filter::Family { parts }, Cert::Family { parts: cs }) if parts.len() == cs.len() => Verdict::all(
                parts
                    .iter()
                    .zip(cs)
                    .enumerate()
                    .map(|(i, (f, c))| f.replay(b.part(i), &v.component(i, b), c, budget, rng)),
            ),
            (Filter::Pair { parts }, Cert::Pair { sets, parts: cs }) if parts.len() == cs.len() && sets.len() == cs.len() => {
                let mut out = Verdict::all(
                    parts.iter().zip(cs).zip(sets).enumerate().map(|(i, ((f, c), s))| f.replay(b.part(i), s, c, budget, rng)),
                );
                out = out.and(RSet::prod(sets.clone()).subset(v, b, budget, rng));
                out
            }
            (Filter::Slice { base, ei }, Cert::Gen { term, args }) => {
                let mut env = BTreeMap::new();
                let mut out = Verdict::Proven;
                for (j, a) in args.iter().enumerate() {
                    let fam = match a {
                        Arg::Ei => RSet::prod(ei.clone()),
                        Arg::Pulled { set, cert } => {
                            out = out.and(base.replay(b.part(0), set, cert, budget, rng));
                            RSet::prod(vec![set.clone(); ei.len()])
                        }
                        Arg::Gen { .. } => return malformed("slice-filter argument"),
                    };
                    env.insert(format!("x{j}"), fam);
                }
                out.and(terms::term_into(b, term, &env, v, budget, rng).unwrap_or_else(|e| Verdict::unknown(e.to_string())))
            }
            (Filter::Slice { base, ei }, Cert::Lemma { v: w, cert }) => {
                let mut out = base.replay(b.part(0), w, cert, budget, rng);
                for (i, e) in ei.iter().enumerate() {
                    out = out.and(w.maps_into(e, &v.component(i, b), b.part(i), budget, rng));
                }
                out
            }
            _ => malformed("certificate shape does not fit the filter"),
        }
    }

    /// Bounded search for a membership certificate.
    pub fn search<R: Rng>(&self, b: &Backend, v: &RSet, budget: &Budget, rng: &mut R) -> (Verdict, Option<Cert>) {
        match self {
            Filter::Maximal => (Verdict::Proven, Some(Cert::Inhabited { witness: v.inhabitant(b) })),
            Filter::Sections { atoms } => {
                if !matches!(b, Backend::Sk { .. }) {
                    return (Verdict::Proven, Some(Cert::Inhabited { witness: v.inhabitant(b) }));
                }
                let allowed = atoms.iter().copied().collect();
                match section_in(v, b, &allowed) {
                    Some(w) => (Verdict::Proven, Some(Cert::Section { witness: w })),
                    None if outside_sections(v, b, atoms) => (
                        Verdict::refuted(Counterexample::OutsideSections { set: v.clone(), allowed: atoms.clone() }),
                        None,
                    ),
                    None => (Verdict::unknown("no section found and no generic decision"), None),
                }
            }
            Filter::Generated { gens } => {
                if let (Some(leaves), Backend::Sk { .. }) = (Filter::generated_is_sections(gens), b) {
                    let allowed: BTreeSet<u32> =
                        leaves.keys().filter_map(|t| if let Sk::Atom(a) = t { Some(*a) } else { None }).collect();
                    if let Some(Elem::Sk(w)) = section_in(v, b, &allowed) {
                        let (term, args) = tree_cert(&w, &leaves);
                        let cert = Cert::Gen { term, args };
                        return (self.replay(b, v, &cert, budget, rng), Some(cert));
                    }
                }
                if let Some(found) = enumerate(self, b, v, &gen_args(gens), budget, rng) {
                    return found;
                }
                if let Some(found) = square_reduction(gens, b, v, budget, rng) {
                    return found;
                }
                match self.section_atoms(b) {
                    Some(allowed) if outside_sections(v, b, &allowed.iter().copied().collect::<Vec<_>>()) => (
                        Verdict::refuted(Counterexample::OutsideSections {
                            set: v.clone(),
                            allowed: allowed.into_iter().collect(),
                        }),
                        None,
                    ),
                    _ => (Verdict::unknown(exhausted(budget)), None),
                }
            }
            Filter::Family { parts } => {
                let mut certs = Vec::new();
                let mut verdict = Verdict::Proven;
                for (i, f) in parts.iter().enumerate() {
                    let (vi, c) = f.search(b.part(i), &v.component(i, b), budget, rng);
                    verdict = verdict.and(vi);
                    match c {
                        Some(c) => certs.push(c),
                        None => return (verdict, None),
                    }
                }
                (verdict, Some(Cert::Family { parts: certs }))
            }
            Filter::Pair { parts } => {
                let mut last = Verdict::unknown(exhausted(budget));
                for sets in product_candidates(v, b) {
                    let mut certs = Vec::new();
                    let mut verdict = Verdict::Proven;
                    for (i, (f, s)) in parts.iter().zip(&sets).enumerate() {
                        let (vi, c) = f.search(b.part(i), s, budget, rng);
                        verdict = verdict.and(vi);
                        if let Some(c) = c {
                            certs.push(c);
                        }
                    }
                    if certs.len() == parts.len() && verdict.holds() {
                        let cert = Cert::Pair { sets, parts: certs };
                        return (self.replay(b, v, &cert, budget, rng), Some(cert));
                    }
                    last = verdict;
                }
                if last.is_refuted() && parts.iter().all(|p| p.section_atoms(b.part(0)).is_some() || *p == Filter::Maximal) {
                    (last, None)
                } else {
                    (Verdict::unknown(exhausted(budget)), None)
                }
            }
            Filter::Slice { base, ei } => {
                let p0 = b.part(0);
                let mut args = vec![Arg::Ei];
                for s in [super::kit::Slot::K, super::kit::Slot::S] {
                    let set = RSet::single(super::kit::slot_elem(p0, s));
                    if let (_, Some(cert)) = base.search(p0, &set, budget, rng) {
                        args.push(Arg::Pulled { set, cert: Box::new(cert) });
                    }
                }
                for c in v.cases(b).unwrap_or_default() {
                    if let Elem::Tuple(es) = c.close() {
                        if es.windows(2).all(|w| w[0] == w[1]) {
                            let set = RSet::single(es[0].clone());
                            if let (_, Some(cert)) = base.search(p0, &set, budget, rng) {
                                args.push(Arg::Pulled { set, cert: Box::new(cert) });
                            }
                        }
                    }
                }
                let _ = ei;
                match enumerate(self, b, v, &args, budget, rng) {
                    Some(found) => found,
                    None => (Verdict::unknown(exhausted(budget)), None),
                }
            }
        }
    }

    /// Certificate for `U·V` from certificates for `U` and `V`.
    pub fn cert_app<R: Rng>(
        &self,
        b: &Backend,
        cu: &Cert,
        u: &RSet,
        cv: &Cert,
        v: &RSet,
        budget: &Budget,
        rng: &mut R,
    ) -> Option<Cert> {
        match (self, cu, cv) {
            (Filter::Maximal | Filter::Sections { .. }, Cert::Section { witness: a }, Cert::Section { witness: c }) => {
                match b.apply(a, c, budget.fuel) {
                    AppOutcome::Value(w) => Some(Cert::Section { witness: w }),
                    _ => None,
                }
            }
            (Filter::Maximal, _, _) => {
                let out = u.apply(v, b, budget, rng);
                if out.defined.is_refuted() {
                    return None;
                }
                let witness = match out.image {
                    Some(img) => img.inhabitant(b),
                    None => match b.apply(&u.inhabitant(b), &v.inhabitant(b), budget.fuel) {
                        AppOutcome::Value(w) => w,
                        _ => return None,
                    },
                };
                Some(Cert::Inhabited { witness })
            }
            (Filter::Generated { .. } | Filter::Slice { .. }, Cert::Gen { term: t1, args: a1 }, Cert::Gen { term: t2, args: a2 }) => {
                let term = Term::app(t1.clone(), t2.shift_positional(a1.len()));
                Some(Cert::Gen { term, args: a1.iter().chain(a2).cloned().collect() })
            }
            (Filter::Family { parts }, Cert::Family { parts: c1 }, Cert::Family { parts: c2 }) => parts
                .iter()
                .enumerate()
                .map(|(i, f)| f.cert_app(b.part(i), &c1[i], &u.component(i, b), &c2[i], &v.component(i, b), budget, rng))
                .collect::<Option<Vec<_>>>()
                .map(|parts| Cert::Family { parts }),
            (Filter::Pair { parts }, Cert::Pair { sets: s1, parts: c1 }, Cert::Pair { sets: s2, parts: c2 }) => {
                let mut sets = Vec::new();
                let mut certs = Vec::new();
                for (i, f) in parts.iter().enumerate() {
                    let img = s1[i].apply(&s2[i], b.part(i), budget, rng).image?;
                    certs.push(f.cert_app(b.part(i), &c1[i], &s1[i], &c2[i], &s2[i], budget, rng)?);
                    sets.push(img);
                }
                Some(Cert::Pair { sets, parts: certs })
            }
            _ => None,
        }
    }
}

fn malformed(what: &str) -> Verdict {
    Verdict::refuted(Counterexample::Message { text: format!("malformed certificate: {what}") })
}

fn exhausted(budget: &Budget) -> String {
    format!("no certificate with at most {} leaves over {} arguments", budget.term_size, budget.arity)
}

fn gen_args(gens: &[RSet]) -> Vec<Arg> {
    (0..gens.len()).map(|index| Arg::Gen { index }).collect()
}

/// The application tree of `w` with each leaf replaced by its generator.
fn tree_cert(w: &Sk, leaves: &BTreeMap<Sk, usize>) -> (Term, Vec<Arg>) {
    fn go(w: &Sk, leaves: &BTreeMap<Sk, usize>, args: &mut Vec<Arg>) -> Term {
        match w {
            Sk::App(l, r) => {
                let l = go(l, leaves, args);
                let r = go(r, leaves, args);
                Term::app(l, r)
            }
            leaf => {
                let index = leaves[leaf];
                let pos = args.iter().position(|a| matches!(a, Arg::Gen { index: i } if *i == index)).unwrap_or_else(|| {
                    args.push(Arg::Gen { index });
                    args.len() - 1
                });
                Term::x(pos)
            }
        }
    }
    let mut args = Vec::new();
    let t = go(w, leaves, &mut args);
    (t, args)
}

/// Candidate products `Π U_i ⊆ v`.
fn product_candidates(v: &RSet, b: &Backend) -> Vec<Vec<RSet>> {
    let mut out = Vec::new();
    for p in &v.pieces {
        if let Piece::Prod(rs) = p {
            out.push(rs.clone());
        }
    }
    if let Some(cs) = v.cases(b) {
        for c in cs {
            if let Elem::Tuple(es) = c.close() {
                out.push(es.into_iter().map(RSet::single).collect());
            }
        }
    }
    out
}

/// Binary tree shapes with `n` leaves, leaves numbered left to right.
pub fn shapes(n: usize) -> Vec<Term> {
    fn go(n: usize, next: &mut usize) -> Vec<Term> {
        if n == 1 {
            return vec![Term::Var("_".into())];
        }
        let mut out = Vec::new();
        for k in 1..n {
            for l in go(k, next) {
                for r in go(n - k, next) {
                    out.push(Term::app(l.clone(), r));
                }
            }
        }
        out
    }
    go(n, &mut 0)
}

/// Label sequences of length `n` in first-occurrence canonical form using at
/// most `arity` distinct labels.
pub fn labelings(n: usize, arity: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(n);
    fn go(n: usize, arity: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        let next = cur.iter().max().map_or(0, |m| m + 1);
        for l in 0..=next.min(arity - 1) {
            cur.push(l);
            go(n, arity, cur, out);
            cur.pop();
        }
    }
    go(n, arity.max(1), &mut cur, &mut out);
    out
}

fn label(shape: &Term, labels: &[usize]) -> Term {
    fn go(t: &Term, labels: &[usize], i: &mut usize) -> Term {
        match t {
            Term::App(l, r) => {
                let l = go(l, labels, i);
                let r = go(r, labels, i);
                Term::app(l, r)
            }
            _ => {
                let x = Term::x(labels[*i]);
                *i += 1;
                x
            }
        }
    }
    go(shape, labels, &mut 0)
}

/// Terms by leaf count, then shape, then labeling; argument tuples in index
/// order. First success wins.
fn enumerate<R: Rng>(
    f: &Filter,
    b: &Backend,
    v: &RSet,
    cands: &[Arg],
    budget: &Budget,
    rng: &mut R,
) -> Option<(Verdict, Option<Cert>)> {
    if cands.is_empty() {
        return None;
    }
    let mut attempts = 0;
    for n in 1..=budget.term_size as usize {
        for shape in shapes(n) {
            for labels in labelings(n, budget.arity as usize) {
                let k = labels.iter().max().unwrap() + 1;
                let term = label(&shape, &labels);
                let mut idx = vec![0usize; k];
                loop {
                    attempts += 1;
                    if attempts > MAX_ATTEMPTS {
                        return None;
                    }
                    let cert = Cert::Gen { term: term.clone(), args: idx.iter().map(|&i| cands[i].clone()).collect() };
                    let verdict = f.replay(b, v, &cert, budget, rng);
                    if verdict.holds() {
                        return Some((verdict, Some(cert)));
                    }
                    let mut j = k;
                    loop {
                        if j == 0 {
                            break;
                        }
                        j -= 1;
                        idx[j] += 1;
                        if idx[j] < cands.len() {
                            break;
                        }
                        idx[j] = 0;
                        if j == 0 {
                            j = usize::MAX;
                            break;
                        }
                    }
                    if j == usize::MAX {
                        break;
                    }
                }
            }
        }
    }
    None
}

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
        ChaCha8Rng::seed_from_u64(5)
    }

    #[test]
    fn shape_counts_are_catalan() {
        let counts: Vec<usize> = (1..=6).map(|n| shapes(n).len()).collect();
        assert_eq!(counts, vec![1, 1, 2, 5, 14, 42]);
        assert_eq!(labelings(3, 3).len(), 5);
        assert_eq!(labelings(3, 1), vec![vec![0, 0, 0]]);
    }

    #[test]
    fn skk_from_k_and_s() {
        let f = Filter::Generated { gens: vec![rs("K"), rs("S K")] };
        let b = Backend::sk(0);
        let budget = Budget::default();
        let (v, c) = f.search(&b, &rs("S K K"), &budget, &mut rng());
        assert!(v.is_proven(), "{v}");
        let c = c.unwrap();
        assert_eq!(f.replay(&b, &rs("S K K"), &c, &budget, &mut rng()), Verdict::Proven);
        // upward closure: the same certificate certifies a superset
        assert!(f.replay(&b, &rs("S K K | K"), &c, &budget, &mut rng()).is_proven());
    }

    #[test]
    fn k_s_generators_certify_by_tree() {
        let f = Filter::Generated { gens: vec![rs("K"), rs("S")] };
        let b = Backend::sk(0);
        let (v, c) = f.search(&b, &rs("S K K"), &Budget::default(), &mut rng());
        assert!(v.is_proven());
        match c.unwrap() {
            Cert::Gen { term, args } => {
                assert_eq!(term.to_string(), "x0 x1 x1");
                assert_eq!(args, vec![Arg::Gen { index: 1 }, Arg::Gen { index: 0 }]);
            }
            c => panic!("{c:?}"),
        }
    }

    #[test]
    fn sections_decide_exactly() {
        let f = Filter::sections();
        let b = Backend::sk(2);
        let budget = Budget::default();
        assert!(f.search(&b, &rs("o0 | K (S !0)"), &budget, &mut rng()).0.is_proven());
        let (v, _) = f.search(&b, &rs("o1 ?0 | K o0"), &budget, &mut rng());
        match v {
            Verdict::Refuted { counterexample } => assert!(counterexample.replay(&b, budget.fuel)),
            v => panic!("{v}"),
        }
    }

    #[test]
    fn closure_certificate_replays() {
        let f = Filter::Generated { gens: vec![rs("K"), rs("S"), rs("o0")] };
        let b = Backend::sk(2);
        let budget = Budget::default();
        let u = rs("K o0");
        let w = rs("S K");
        let (_, cu) = f.search(&b, &u, &budget, &mut rng());
        let (_, cw) = f.search(&b, &w, &budget, &mut rng());
        let c = f.cert_app(&b, &cu.unwrap(), &u, &cw.unwrap(), &w, &budget, &mut rng()).unwrap();
        let img = u.apply(&w, &b, &budget, &mut rng()).image.unwrap();
        assert_eq!(img, RSet::sk(parse_sk("o0").unwrap()));
        assert!(f.replay(&b, &img, &c, &budget, &mut rng()).is_proven());
    }

    #[test]
    fn square_generators_refute_disjoint_families() {
        let f = Filter::Generated { gens: vec![rs("[K; K]"), rs("[S; S]")] };
        let b = Backend::Product { parts: vec![Backend::sk(1); 2] };
        let budget = Budget::default();
        let (v, _) = f.search(&b, &rs("[K; S | o0]"), &budget, &mut rng());
        match v {
            Verdict::Refuted { counterexample } => assert!(counterexample.replay(b.part(0), 100)),
            v => panic!("{v}"),
        }
        assert!(f.search(&b, &rs("[K | S; S]"), &budget, &mut rng()).0.is_proven());
        // a non-square generator blocks the rule
        let g = Filter::Generated { gens: vec![rs("[K; S]")] };
        assert!(!g.search(&b, &rs("[K; S K]"), &budget, &mut rng()).0.is_refuted());
    }
}
