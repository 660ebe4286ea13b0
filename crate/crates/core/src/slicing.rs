//! Slice PCAs `(A,φ)/I` over an assembly `I`, the equivalence
//! `Asm(A,φ)/I ≃ Asm((A,φ)/I)`, reindexing morphisms between slices, and
//! partitioned index objects.
//!
//! The slice filter `φ_I` is generated by constant families from `φ`
//! together with `E_I`. Membership is certified in two interchangeable
//! forms: a generated-filter term over those generators, or a single
//! `V ∈ φ` with `V·E_I(i) ⊆ U_i` for every `i`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assemblies::{self, synth_tracker, AsmMorphism, Assembly, Tracker};
use crate::backend::RegFunctor;
use crate::morphisms::{self, ApplicativeMorphism, MorphError, RelMap};
use crate::pca::filter::{outside_sections, Arg, Cert, Filter};
use crate::pca::kit::{slot_elem, Slot};
use crate::pca::rset::RSet;
use crate::pca::synth::Member;
use crate::pca::{AppOutcome, Backend, Budget, Elem, Pca};
use crate::terms::Term;
use crate::verdict::{Counterexample, Verdict};
use crate::World;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SliceError {
    #[error("the base PCA must live over Set")]
    NotOverSet,
    #[error("the index assembly is empty")]
    EmptyIndex,
    #[error("index point {point} is not realized by a single element: {fiber}")]
    NotPartitioned { point: String, fiber: RSet },
    #[error("the base filter is not generated by a single section set")]
    NotSingletonGenerated,
    #[error("assembly error: {0}")]
    Asm(String),
    #[error(transparent)]
    Morph(#[from] MorphError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlicePca {
    pub base: Pca,
    pub index: Assembly,
    /// `(|I|*(A), φ_I)` over `Set/|I|`.
    pub pca: Pca,
}

/// `(A,φ)/I`.
pub fn slice_pca(base: &Pca, index: &Assembly) -> Result<SlicePca, SliceError> {
    if base.world != World::Set {
        return Err(SliceError::NotOverSet);
    }
    if index.is_empty() {
        return Err(SliceError::EmptyIndex);
    }
    let n = index.len();
    let pca = Pca::new(
        &format!("{}/{}", base.name, index.name),
        World::Slice { base: index.points.clone() },
        Backend::Product { parts: vec![base.backend.clone(); n] },
        Filter::Slice { base: Box::new(base.filter.clone()), ei: index.fibers.clone() },
    );
    Ok(SlicePca { base: base.clone(), index: index.clone(), pca })
}

fn atoms_of(e: &Elem) -> BTreeSet<u32> {
    let mut s = BTreeSet::new();
    e.atoms(&mut s);
    s
}

enum Meet {
    Full,
    Elems(Vec<Elem>),
}

/// `∩ sets`, when some non-full set is finite.
fn meet(b: &Backend, sets: &[&RSet]) -> Option<Meet> {
    let rest: Vec<&RSet> = sets.iter().copied().filter(|s| !s.is_full()).collect();
    if rest.is_empty() {
        return Some(Meet::Full);
    }
    let pivot = rest.iter().find_map(|s| s.finite())?;
    Some(Meet::Elems(pivot.into_iter().filter(|e| rest.iter().all(|s| s.member(b, e))).collect()))
}

fn in_c(e: &Elem, atoms: &[u32]) -> bool {
    atoms_of(e).iter().all(|a| atoms.contains(a))
}

/// Why `sets` have no common element of `C`, if they have none.
fn no_common_section(b: &Backend, sets: &[&RSet], atoms: &[u32]) -> Option<Counterexample> {
    match meet(b, sets)? {
        Meet::Full => None,
        Meet::Elems(es) if es.is_empty() => {
            let finite: Vec<&RSet> = sets.iter().copied().filter(|f| f.finite().is_some()).collect();
            finite.iter().enumerate().find_map(|(a, f)| {
                finite[a + 1..]
                    .iter()
                    .find(|g| crate::verdict::disjoint(b, f, g))
                    .map(|g| Counterexample::Disjoint { left: (*f).clone(), right: (*g).clone() })
            })
        }
        Meet::Elems(es) => {
            let m = RSet::elems(es);
            outside_sections(&m, b, atoms).then(|| Counterexample::OutsideSections { set: m, allowed: atoms.to_vec() })
        }
    }
}

/// Elements of a finite set that lie in `C`; `None` for the maximal filter.
fn sections_of(set: &RSet, allowed: Option<&BTreeSet<u32>>) -> Option<Vec<Elem>> {
    let es = set.finite()?;
    Some(match allowed {
        Some(a) => es.into_iter().filter(|e| atoms_of(e).is_subset(a)).collect(),
        None => es,
    })
}

impl SlicePca {
    pub fn n(&self) -> usize {
        self.index.len()
    }

    fn allowed(&self) -> Option<BTreeSet<u32>> {
        match &self.base.filter {
            Filter::Sections { atoms } => Some(atoms.iter().copied().collect()),
            _ => None,
        }
    }

    fn components(&self, u: &RSet) -> Vec<RSet> {
        (0..self.n()).map(|i| self.pca.part_set(u, i)).collect()
    }

    /// For points whose fibers share an element of `C`, the family must
    /// share one too: `r ∈ C` sends it to `C ∩ ⋂ U_i`.
    pub fn refute(&self, u: &RSet) -> Option<Counterexample> {
        let Filter::Sections { atoms } = &self.base.filter else { return None };
        let b = &self.base.backend;
        let n = self.n();
        if n > 12 {
            return None;
        }
        let comps = self.components(u);
        for mask in 1u32..(1 << n) {
            let s: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let es: Vec<&RSet> = s.iter().map(|&i| &self.index.fibers[i]).collect();
            let shared = match meet(b, &es) {
                Some(Meet::Full) => true,
                Some(Meet::Elems(es)) => es.iter().any(|e| in_c(e, atoms)),
                None => false,
            };
            if !shared {
                continue;
            }
            let us: Vec<&RSet> = s.iter().map(|&i| &comps[i]).collect();
            if let Some(cx) = no_common_section(b, &us, atoms) {
                return Some(cx);
            }
        }
        None
    }

    /// `I`, `K c` for a shared section, and `λx. x c0 .. c(n-1)`.
    fn lemma_candidates(&self, u: &RSet, budget: &Budget) -> Vec<Tracker> {
        let b = &self.base.backend;
        let allowed = self.allowed();
        let comps = self.components(u);
        let mut out = vec![Tracker::slot(&self.base, Slot::I)];
        let mut terms = Vec::new();
        let refs: Vec<&RSet> = comps.iter().collect();
        if let Some(m) = meet(b, &refs) {
            let c = match m {
                Meet::Full => Some(b.default_elem()),
                Meet::Elems(es) => es.into_iter().find(|e| allowed.as_ref().is_none_or(|a| atoms_of(e).is_subset(a))),
            };
            if let Some(c) = c {
                terms.push(Term::app(Term::k(), Term::elem(c)));
            }
        }
        let picks: Option<Vec<Elem>> = comps
            .iter()
            .map(|c| match sections_of(c, allowed.as_ref()) {
                Some(v) => v.into_iter().next(),
                None => Some(c.inhabitant(b)),
            })
            .collect();
        if let Some(cs) = picks {
            let body = Term::apps(Term::var("x"), cs.into_iter().map(Term::elem));
            terms.push(crate::terms::abstract_all(&["x"], &body));
        }
        for t in terms {
            if let Some(s) = self.base.synthesize(&t, &BTreeMap::new(), budget) {
                out.push(Tracker { source: s.source.clone(), member: s.member() });
            }
        }
        out
    }

    pub fn replay(&self, u: &RSet, cert: &Cert, budget: &Budget) -> Verdict {
        let mut rng = budget.rng(&format!("slice/replay/{u}"));
        self.pca.filter.replay(&self.pca.backend, u, cert, budget, &mut rng)
    }

    /// Membership in `φ_I`: the refutation rule, then Lemma-form
    /// candidates (with `extra`), then generated-filter search.
    pub fn membership_with(&self, u: &RSet, extra: &[Member], budget: &Budget) -> (Verdict, Option<Cert>) {
        if let Some(cx) = self.refute(u) {
            return (Verdict::refuted(cx), None);
        }
        let mut cands: Vec<Member> = extra.to_vec();
        cands.extend(self.lemma_candidates(u, budget).into_iter().map(|t| t.member));
        for m in cands {
            let Some(c) = m.cert else { continue };
            let cert = Cert::Lemma { v: m.set, cert: Box::new(c) };
            let v = self.replay(u, &cert, budget);
            if v.holds() {
                return (v, Some(cert));
            }
        }
        let mut rng = budget.rng(&format!("slice/search/{u}"));
        match self.pca.filter.search(&self.pca.backend, u, budget, &mut rng) {
            (v, Some(c)) if v.holds() => (v, Some(c)),
            (v, _) => (if v.is_refuted() { v } else { Verdict::unknown("no slice certificate within budget") }, None),
        }
    }

    pub fn membership(&self, u: &RSet, budget: &Budget) -> (Verdict, Option<Cert>) {
        self.membership_with(u, &[], budget)
    }

    /// A generated-filter certificate as a single `V ∈ φ`: constants
    /// become `K W`, `E_I` becomes `I`, applications become `S V V′`.
    pub fn to_lemma(&self, cert: &Cert, budget: &Budget) -> Option<Cert> {
        match cert {
            Cert::Lemma { .. } => Some(cert.clone()),
            Cert::Gen { term, args } => {
                let mut env = BTreeMap::new();
                for (j, a) in args.iter().enumerate() {
                    if let Arg::Pulled { set, cert } = a {
                        env.insert(format!("w{j}"), Member { set: set.clone(), cert: Some((**cert).clone()) });
                    }
                }
                fn go(t: &Term, args: &[Arg]) -> Option<Term> {
                    Some(match t {
                        Term::Var(x) => {
                            let j: usize = x.strip_prefix('x')?.parse().ok()?;
                            match args.get(j)? {
                                Arg::Pulled { .. } => Term::app(Term::k(), Term::var(&format!("w{j}"))),
                                Arg::Ei => Term::slot(Slot::I),
                                Arg::Gen { .. } => return None,
                            }
                        }
                        Term::App(l, r) => Term::apps(Term::s(), [go(l, args)?, go(r, args)?]),
                        Term::Const(_) => return None,
                    })
                }
                let v = go(term, args)?;
                let s = self.base.synthesize(&v, &env, budget)?;
                Some(Cert::Lemma { v: s.set, cert: Box::new(s.cert?) })
            }
            _ => None,
        }
    }

    /// `V ∈ φ` as the generated-filter term `|I|*(V)·E_I`.
    pub fn from_lemma(cert: &Cert) -> Option<Cert> {
        match cert {
            Cert::Lemma { v, cert } => Some(Cert::Gen {
                term: Term::app(Term::x(0), Term::x(1)),
                args: vec![Arg::Pulled { set: v.clone(), cert: cert.clone() }, Arg::Ei],
            }),
            Cert::Gen { .. } => Some(cert.clone()),
            _ => None,
        }
    }

    /// The Lemma-form `V` behind a slice tracker.
    pub fn lemma_member(&self, t: &Tracker, budget: &Budget) -> Option<Member> {
        match self.to_lemma(t.member.cert.as_ref()?, budget)? {
            Cert::Lemma { v, cert } => Some(Member { set: v, cert: Some(*cert) }),
            _ => None,
        }
    }

    /// A member of `φ` as a constant family in `φ_I`.
    pub fn pulled(&self, t: &Tracker) -> Tracker {
        let cert = t.member.cert.clone().map(|c| Cert::Gen { term: Term::x(0), args: vec![Arg::Pulled { set: t.set().clone(), cert: Box::new(c) }] });
        Tracker { source: format!("|I|*({})", t.source), member: Member { set: RSet::prod(vec![t.set().clone(); self.n()]), cert } }
    }
}

// ------------------------------------------------------------ batteries

/// Subsets of `pool` with 1 to `max` elements, in a fixed order.
pub fn subsets(pool: &[Elem], max: usize) -> Vec<RSet> {
    let mut out = Vec::new();
    for mask in 1u32..(1 << pool.len()) {
        if mask.count_ones() as usize <= max {
            out.push(RSet::elems((0..pool.len()).filter(|i| mask >> i & 1 == 1).map(|i| pool[i].clone())));
        }
    }
    out
}

/// Families built from `subsets(pool, max)` in each fiber.
pub fn battery(pool: &[Elem], max: usize, n: usize) -> Vec<RSet> {
    let subs = subsets(pool, max);
    let mut out: Vec<Vec<RSet>> = vec![vec![]];
    for _ in 0..n {
        out = out.into_iter().flat_map(|p| subs.iter().map(move |s| [p.clone(), vec![s.clone()]].concat())).collect();
    }
    out.into_iter().map(RSet::prod).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatteryRow {
    pub set: RSet,
    pub expected: bool,
    pub verdict: Verdict,
    pub agrees: bool,
}

/// Decided membership against a predicate. Unknown never agrees.
pub fn run_battery(sp: &SlicePca, sets: &[RSet], expected: impl Fn(&[RSet]) -> bool, budget: &Budget) -> Vec<BatteryRow> {
    sets.iter()
        .map(|u| {
            let comps = sp.components(u);
            let e = expected(&comps);
            let (verdict, cert) = sp.membership(u, budget);
            let verdict = match (&verdict, cert) {
                (v, Some(c)) if v.holds() => sp.replay(u, &c, budget),
                (Verdict::Refuted { counterexample }, _) if !counterexample.replay(&sp.base.backend, budget.fuel) => {
                    Verdict::unknown("refutation does not replay")
                }
                (v, _) => v.clone(),
            };
            let agrees = (verdict.holds() && e) || (verdict.is_refuted() && !e);
            BatteryRow { set: u.clone(), expected: e, verdict, agrees }
        })
        .collect()
}

pub fn battery_verdict(rows: &[BatteryRow]) -> Verdict {
    match rows.iter().find(|r| !r.agrees) {
        None => Verdict::Proven,
        Some(r) if r.verdict.is_unknown() => Verdict::unknown(format!("undecided at {}", r.set)),
        Some(r) => Verdict::refuted(Counterexample::Unequal {
            what: format!("slice membership of {}", r.set),
            left: r.expected.to_string(),
            right: r.verdict.label().into(),
        }),
    }
}

/// Whether a finite set contains an atom-free element.
pub fn meets_c(u: &RSet) -> bool {
    u.finite().is_some_and(|es| es.iter().any(|e| !e.has_atoms()))
}

/// Whether finite sets share an atom-free element.
pub fn share_c(us: &[RSet]) -> bool {
    let Some(first) = us.first().and_then(RSet::finite) else { return false };
    first.iter().any(|e| !e.has_atoms() && us.iter().all(|u| u.finite().is_some_and(|es| es.contains(e))))
}

/// `1 + 1`: two points realized by `k` and `k̄`.
pub fn one_plus_one(base: &Pca) -> Assembly {
    let b = &base.backend;
    Assembly::new("1+1", &["l", "r"], vec![RSet::single(slot_elem(b, Slot::K)), RSet::single(slot_elem(b, Slot::Kbar))])
}

/// `∇2`: two points realized by everything.
pub fn nabla_two() -> Assembly {
    assemblies::nabla("∇2", &["l", "r"])
}

// ---------------------------------------------------------- equivalence

/// `F(X, k_X)`: `X` fibered over `|I|` by `k_X`, same fibers.
pub fn functor_f(sp: &SlicePca, k: &AsmMorphism) -> Assembly {
    Assembly::over(
        &format!("F{}/{}", k.dom.name, sp.index.name),
        (0..k.dom.len()).map(|p| (k.dom.points[p].clone(), k.arrow[p], k.dom.fibers[p].clone())).collect(),
    )
}

/// `G(Y)`: fibers `P·E_I(i)·E_Y(y)`, with the map to `I` tracked by `P0`.
pub fn functor_g(sp: &SlicePca, y: &Assembly, budget: &Budget) -> Result<AsmMorphism, SliceError> {
    let b = &sp.base.backend;
    let mut rng = budget.rng("slice/G");
    let p = sp.base.kit.p.set.clone();
    let mut pts = Vec::new();
    for q in 0..y.len() {
        let i = y.index[q];
        let pe = p.apply(&sp.index.fibers[i], b, budget, &mut rng).image.ok_or_else(|| SliceError::Asm("P·E_I not exact".into()))?;
        let fib = pe.apply(&y.fibers[q], b, budget, &mut rng).image.ok_or_else(|| SliceError::Asm("P·E_I·E_Y not exact".into()))?;
        pts.push((y.points[q].clone(), 0, fib));
    }
    let gy = Assembly::over(&format!("G{}", y.name), pts);
    assemblies::with_tracker(&sp.base, &gy, &sp.index, y.index.clone(), Tracker::slot(&sp.base, Slot::P0), budget)
        .map_err(|e| SliceError::Asm(e.to_string()))
}

/// `F(h)` for `h` over `I`, tracked by `|I|*(U)`.
pub fn f_arrow(sp: &SlicePca, kx: &AsmMorphism, ky: &AsmMorphism, h: &AsmMorphism, budget: &Budget) -> Result<AsmMorphism, SliceError> {
    let u = h.tracker.as_ref().ok_or_else(|| SliceError::Asm("arrow without tracker".into()))?;
    assemblies::with_tracker(&sp.pca, &functor_f(sp, kx), &functor_f(sp, ky), h.arrow.clone(), sp.pulled(u), budget)
        .map_err(|e| SliceError::Asm(e.to_string()))
}

pub const G_ARROW_TRACKER: &str = "#p (#p0 x) (v (#p0 x) (#p1 x))";

/// `G(h)`, tracked by `λx. P (P0 x) (V (P0 x) (P1 x))` with `V` the
/// Lemma form of the tracker of `h`.
pub fn g_arrow(sp: &SlicePca, h: &AsmMorphism, budget: &Budget) -> Result<AsmMorphism, SliceError> {
    let t = h.tracker.as_ref().ok_or_else(|| SliceError::Asm("arrow without tracker".into()))?;
    let v = sp.lemma_member(t, budget).ok_or_else(|| SliceError::Asm("tracker has no Lemma form".into()))?;
    let v = Tracker { source: "V".into(), member: v };
    let gx = functor_g(sp, &h.dom, budget)?.dom;
    let gy = functor_g(sp, &h.cod, budget)?.dom;
    let tracker = synth_tracker(&sp.base, &["x"], G_ARROW_TRACKER, &[("v", &v)], budget);
    match tracker {
        Some(t) => assemblies::with_tracker(&sp.base, &gx, &gy, h.arrow.clone(), t, budget),
        None => assemblies::check_morphism(&sp.base, &gx, &gy, h.arrow.clone(), None, budget),
    }
    .map_err(|e| SliceError::Asm(e.to_string()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundTrip {
    pub object: String,
    /// `X → GFX` by `λx. P (U x) x`, and back by `P1`.
    pub unit: (AsmMorphism, AsmMorphism),
    /// `Y → FGY` by `|I|*(P)·E_I`, and back by `|I|*(P1)`.
    pub counit: (AsmMorphism, AsmMorphism),
    /// `GFX → I` agrees with `k_X`.
    pub over_i: Verdict,
}

impl RoundTrip {
    pub fn verdict(&self) -> Verdict {
        Verdict::all([
            self.unit.0.verdict.clone(),
            self.unit.1.verdict.clone(),
            self.counit.0.verdict.clone(),
            self.counit.1.verdict.clone(),
            self.over_i.clone(),
        ])
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceEquivData {
    pub trips: Vec<RoundTrip>,
    pub verdict: Verdict,
}

fn identity_arrow(x: &Assembly) -> Vec<usize> {
    (0..x.len()).collect()
}

/// The round-trip isomorphisms on each object `(X, k_X)` over `I`.
pub fn slice_equivalence(sp: &SlicePca, objects: &[AsmMorphism], budget: &Budget) -> Result<SliceEquivData, SliceError> {
    let asm = |e: assemblies::AsmError| SliceError::Asm(e.to_string());
    let mut trips = Vec::new();
    for k in objects {
        let u = k.tracker.as_ref().ok_or_else(|| SliceError::Asm(format!("k_{} has no tracker", k.dom.name)))?;
        let x = &k.dom;
        let fx = functor_f(sp, k);
        let gfx = functor_g(sp, &fx, budget)?;
        let there = synth_tracker(&sp.base, &["x"], "#p (u x) x", &[("u", u)], budget)
            .ok_or_else(|| SliceError::Asm("λx.P(Ux)x not exact".into()))?;
        let there = assemblies::with_tracker(&sp.base, x, &gfx.dom, identity_arrow(x), there, budget).map_err(asm)?;
        let back = assemblies::with_tracker(&sp.base, &gfx.dom, x, identity_arrow(x), Tracker::slot(&sp.base, Slot::P1), budget)
            .map_err(asm)?;
        let over_i = if gfx.arrow == k.arrow {
            gfx.verdict.clone()
        } else {
            Verdict::refuted(Counterexample::Unequal { what: "GFX → I".into(), left: format!("{:?}", gfx.arrow), right: format!("{:?}", k.arrow) })
        };
        // Y = FX
        let y = &fx;
        let gy = functor_g(sp, y, budget)?;
        let fgy = functor_f(sp, &gy);
        let pe = pe_tracker(sp, budget)?;
        let c_there = assemblies::with_tracker(&sp.pca, y, &fgy, identity_arrow(y), pe, budget).map_err(asm)?;
        let c_back = assemblies::with_tracker(&sp.pca, &fgy, y, identity_arrow(y), Tracker::slot(&sp.pca, Slot::P1), budget).map_err(asm)?;
        trips.push(RoundTrip { object: x.name.clone(), unit: (there, back), counit: (c_there, c_back), over_i });
    }
    let verdict = Verdict::all(trips.iter().map(RoundTrip::verdict));
    Ok(SliceEquivData { trips, verdict })
}

/// `|I|*(P)·E_I`, certified by the term `x0 x1`.
pub fn pe_tracker(sp: &SlicePca, budget: &Budget) -> Result<Tracker, SliceError> {
    let p = sp.base.slot_member(Slot::P);
    let pc = p.cert.clone().ok_or_else(|| SliceError::Asm("P has no certificate".into()))?;
    let mut rng = budget.rng("slice/PE");
    let fam = RSet::prod(vec![p.set.clone(); sp.n()])
        .apply(&RSet::prod(sp.index.fibers.clone()), &sp.pca.backend, budget, &mut rng)
        .image
        .ok_or_else(|| SliceError::Asm("|I|*(P)·E_I not exact".into()))?;
    let cert = Cert::Gen { term: Term::app(Term::x(0), Term::x(1)), args: vec![Arg::Pulled { set: p.set, cert: Box::new(pc) }, Arg::Ei] };
    Ok(Tracker { source: "|I|*(#p) E_I".into(), member: Member { set: fam, cert: Some(cert) } })
}

/// For each object: `F(X)` constant in the slice, against `k_X` prone.
pub fn constant_vs_prone(sp: &SlicePca, objects: &[AsmMorphism], budget: &Budget) -> Vec<(String, Verdict, Verdict)> {
    objects
        .iter()
        .map(|k| {
            let fx = functor_f(sp, k);
            let constant = constant_in_slice(sp, &fx, budget);
            let (prone, _) = assemblies::is_prone(&sp.base, k, budget);
            (k.dom.name.clone(), constant, prone)
        })
        .collect()
}

/// Some `U ∈ φ_I` with `U_i ⊆ E(x)` for every point over `i`.
pub fn constant_in_slice(sp: &SlicePca, x: &Assembly, budget: &Budget) -> Verdict {
    let b = &sp.base.backend;
    let mut parts = Vec::new();
    for i in 0..sp.n() {
        let fibers: Vec<&RSet> = (0..x.len()).filter(|&p| x.index[p] == i).map(|p| &x.fibers[p]).collect();
        if fibers.is_empty() {
            parts.push(RSet::full());
            continue;
        }
        match meet(b, &fibers) {
            Some(Meet::Elems(es)) if es.is_empty() => {
                return match no_common_section(b, &fibers, &[]) {
                    Some(cx) => Verdict::refuted(cx),
                    None => Verdict::unknown("empty intersection of more than two fibers"),
                };
            }
            Some(Meet::Elems(es)) => parts.push(RSet::elems(es)),
            Some(Meet::Full) => parts.push(RSet::full()),
            None => return Verdict::unknown("fiber intersection not computable"),
        }
    }
    let (v, c) = sp.membership(&RSet::prod(parts.clone()), budget);
    match (v, c) {
        (v, Some(c)) if v.holds() => sp.replay(&RSet::prod(parts), &c, budget),
        (v, _) => v,
    }
}

// ----------------------------------------------- reindexing along f: I → J

/// `(f*, δ): (A,φ)/J → (A,φ)/I`, tracked by `I`. Images of generators are
/// certified through membership, with the tracker of `f` as Lemma candidate
/// for `f*(E_J)`.
pub fn slice_pullback_morphism(si: &SlicePca, sj: &SlicePca, f: &AsmMorphism, budget: &Budget) -> Result<ApplicativeMorphism, SliceError> {
    if !f.dom.same_data(&si.index) || !f.cod.same_data(&sj.index) {
        return Err(SliceError::Asm("f must run between the index assemblies".into()));
    }
    let functor = RegFunctor::Reindex { along: f.arrow.clone(), base: si.index.points.clone() };
    let mut m = ApplicativeMorphism::check(
        &format!("{}*", f.dom.name),
        &sj.pca,
        &si.pca,
        functor,
        RelMap::Delta,
        Some(Tracker::slot(&si.pca, Slot::I)),
        budget,
    )?;
    let extra: Vec<Member> = f.tracker.iter().map(|t| t.member.clone()).collect();
    let (gens, exact) = morphisms::generators(&sj.pca);
    let mut images = Verdict::Proven;
    for g in &gens {
        let Some(img) = m.image_of(g, budget) else {
            images = images.and(Verdict::unknown("generator image not computable"));
            continue;
        };
        images = images.and(match si.membership_with(&img, &extra, budget) {
            (v, Some(c)) if v.holds() => si.replay(&img, &c, budget),
            (v, _) => v,
        });
    }
    m.conditions.images = if exact || !images.holds() { images } else { images.weaken(gens.len() as u64) };
    Ok(m)
}

// ------------------------------------------------------ partitioned index

/// `φ_I` for a partitioned `I` over a sections filter: `U` is accepted iff
/// some `r ∈ C` has `r·f(i) ∈ U_i` for every `i`, with `f(i)` the basic
/// realizer of point `i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionedFilter {
    pub basic: Vec<Elem>,
    pub atoms: Vec<u32>,
    /// An enumerated prefix of `C`.
    pub pool: Vec<Elem>,
}

/// Atom-free normal forms with at most `leaves` leaves.
pub fn enumerate_c(b: &Backend, leaves: usize, fuel: u64) -> Vec<Elem> {
    let mut by_size: Vec<Vec<Elem>> = vec![vec![], vec![slot_elem(b, Slot::K), slot_elem(b, Slot::S)]];
    let mut seen: BTreeSet<Elem> = by_size[1].iter().cloned().collect();
    for n in 2..=leaves {
        let mut level = Vec::new();
        for l in 1..n {
            for x in &by_size[l] {
                for y in &by_size[n - l] {
                    if let AppOutcome::Value(v) = b.apply(x, y, fuel) {
                        if seen.insert(v.clone()) {
                            level.push(v);
                        }
                    }
                }
            }
        }
        by_size.push(level);
    }
    by_size.concat()
}

pub fn partitioned_slice_filter(sp: &SlicePca, leaves: usize) -> Result<PartitionedFilter, SliceError> {
    let Filter::Sections { atoms } = &sp.base.filter else { return Err(SliceError::NotSingletonGenerated) };
    let mut basic = Vec::new();
    for p in 0..sp.n() {
        match sp.index.fibers[p].finite() {
            Some(es) if es.len() == 1 => basic.push(es[0].clone()),
            _ => return Err(SliceError::NotPartitioned { point: sp.index.points[p].clone(), fiber: sp.index.fibers[p].clone() }),
        }
    }
    let b = &sp.base.backend;
    let pool = enumerate_c(b, leaves, Budget::default().fuel);
    Ok(PartitionedFilter { basic, atoms: atoms.clone(), pool })
}

impl PartitionedFilter {
    /// The generated sections `i ↦ r·f(i)` for `r` in the pool.
    pub fn sections(&self, b: &Backend, fuel: u64) -> Vec<(Elem, Vec<Elem>)> {
        self.pool
            .iter()
            .filter_map(|r| {
                let g: Option<Vec<Elem>> = self
                    .basic
                    .iter()
                    .map(|f| match b.apply(r, f, fuel) {
                        AppOutcome::Value(v) => Some(v),
                        _ => None,
                    })
                    .collect();
                g.map(|g| (r.clone(), g))
            })
            .collect()
    }

    fn in_c(&self, e: &Elem) -> bool {
        in_c(e, &self.atoms)
    }

    /// `r` from the pool, `K c`, or `λx. x c0 ..`; refuted when points
    /// with a common basic realizer in `C` have no common section in `U`.
    pub fn accepts(&self, b: &Backend, comps: &[RSet], budget: &Budget) -> (Verdict, Option<Elem>) {
        let fuel = budget.fuel;
        let mut groups: BTreeMap<&Elem, Vec<usize>> = BTreeMap::new();
        for (i, f) in self.basic.iter().enumerate() {
            groups.entry(f).or_default().push(i);
        }
        for (f, idx) in &groups {
            if !self.in_c(f) {
                continue;
            }
            let us: Vec<&RSet> = idx.iter().map(|&i| &comps[i]).collect();
            if let Some(cx) = no_common_section(b, &us, &self.atoms) {
                return (Verdict::refuted(cx), None);
            }
        }
        let mut cands = self.pool.clone();
        let refs: Vec<&RSet> = comps.iter().collect();
        if let Some(Meet::Elems(m)) = meet(b, &refs) {
            for c in m.into_iter().filter(|c| self.in_c(c)) {
                if let AppOutcome::Value(kc) = b.apply(&slot_elem(b, Slot::K), &c, fuel) {
                    cands.push(kc);
                }
            }
        }
        let picks: Option<Vec<Elem>> = comps.iter().map(|c| c.finite()?.into_iter().find(|e| self.in_c(e))).collect();
        if let Some(cs) = picks {
            let t = crate::terms::abstract_all(&["x"], &Term::apps(Term::var("x"), cs.into_iter().map(Term::elem)));
            if let Ok(AppOutcome::Value(r)) = crate::terms::eval_closed(b, &t, fuel) {
                cands.push(r);
            }
        }
        for r in cands {
            let ok = self.basic.iter().zip(comps).all(|(f, u)| matches!(b.apply(&r, f, fuel), AppOutcome::Value(v) if u.member(b, &v)));
            if ok {
                return (Verdict::Proven, Some(r));
            }
        }
        (Verdict::unknown(format!("no r among {} enumerated sections", self.pool.len())), None)
    }
}

/// The partitioned presentation against the general membership oracle.
pub fn partitioned_agreement(sp: &SlicePca, pf: &PartitionedFilter, sets: &[RSet], budget: &Budget) -> Verdict {
    let b = &sp.base.backend;
    let mut out = Verdict::Proven;
    for u in sets {
        let comps = sp.components(u);
        let (pv, _) = pf.accepts(b, &comps, budget);
        let (gv, _) = sp.membership(u, budget);
        let same = (pv.holds() && gv.holds()) || (pv.is_refuted() && gv.is_refuted());
        if !same {
            out = out.and(if pv.is_unknown() || gv.is_unknown() {
                Verdict::unknown(format!("undecided at {u}"))
            } else {
                Verdict::refuted(Counterexample::Unequal { what: format!("membership of {u}"), left: pv.label().into(), right: gv.label().into() })
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assemblies::{check_morphism, selectors, terminal};
    use crate::pca::{make_backend, BackendKind};

    fn b() -> Budget {
        Budget::default()
    }

    fn rel() -> Pca {
        make_backend(&BackendKind::SkRelative { atoms: 1 })
    }

    fn pool() -> Vec<Elem> {
        ["K", "S", "o0", "K o0"].iter().map(|s| s.parse().unwrap()).collect()
    }

    #[test]
    fn slice_over_one_matches_base() {
        let base = rel();
        let sp = slice_pca(&base, &terminal(&base)).unwrap();
        let mut rng = b().rng("t");
        for u in subsets(&pool(), 3) {
            let (bv, _) = base.filter.search(&base.backend, &u, &b(), &mut rng);
            let (sv, _) = sp.membership(&RSet::prod(vec![u.clone()]), &b());
            assert_eq!(bv.holds(), sv.holds(), "{u}");
            assert_eq!(bv.is_refuted(), sv.is_refuted(), "{u}");
        }
    }

    #[test]
    fn one_plus_one_filter() {
        let base = rel();
        let sp = slice_pca(&base, &one_plus_one(&base)).unwrap();
        let rows = run_battery(&sp, &battery(&pool(), 2, 2), |c| meets_c(&c[0]) && meets_c(&c[1]), &b());
        assert!(battery_verdict(&rows).is_proven(), "{}", battery_verdict(&rows));
        assert!(rows.iter().any(|r| !r.expected));
    }

    #[test]
    fn nabla_two_filter() {
        let base = rel();
        let sp = slice_pca(&base, &nabla_two()).unwrap();
        let rows = run_battery(&sp, &battery(&pool(), 2, 2), share_c, &b());
        assert!(battery_verdict(&rows).is_proven(), "{}", battery_verdict(&rows));
        // the two filters differ
        let u: RSet = "[K; S]".parse().unwrap();
        assert!(sp.membership(&u, &b()).0.is_refuted());
        let s11 = slice_pca(&base, &one_plus_one(&base)).unwrap();
        assert!(s11.membership(&u, &b()).0.holds());
    }

    #[test]
    fn certificates_interconvert() {
        let base = rel();
        let sp = slice_pca(&base, &one_plus_one(&base)).unwrap();
        for s in ["[K; S]", "[S K; K | o0]", "[K o0 | S; S]"] {
            let u: RSet = s.parse().unwrap();
            let (v, c) = sp.membership(&u, &b());
            assert!(v.holds(), "{s}: {v}");
            let c = c.unwrap();
            let g = SlicePca::from_lemma(&c).unwrap();
            assert!(sp.replay(&u, &g, &b()).is_proven());
            let back = sp.to_lemma(&g, &b()).unwrap();
            assert!(sp.replay(&u, &back, &b()).holds(), "{s}");
        }
        // a search certificate with applications and E_I
        let mut rng = b().rng("t");
        let u: RSet = "[K; K (S K K)]".parse().unwrap();
        let (_, c) = sp.pca.filter.search(&sp.pca.backend, &u, &b(), &mut rng);
        let c = c.unwrap();
        let l = sp.to_lemma(&c, &b()).unwrap();
        assert!(sp.replay(&u, &l, &b()).holds());
    }

    #[test]
    fn equivalence_round_trips() {
        let base = Pca::sk();
        let i = selectors(&base, "I", &["a", "b"]);
        let sp = slice_pca(&base, &i).unwrap();
        let x = selectors(&base, "X", &["p", "q", "r"]);
        let k = check_morphism(&base, &x, &i, vec![0, 1, 1], None, &b()).unwrap();
        assert!(k.verdict.is_proven());
        let kid = assemblies::identity(&base, &i, &b());
        let data = slice_equivalence(&sp, &[k.clone(), kid], &b()).unwrap();
        assert!(data.verdict.is_proven(), "{}", data.verdict);
        // oracle: GFX fibers are all P-pairs of index and point realizers
        let gfx = functor_g(&sp, &functor_f(&sp, &k), &b()).unwrap().dom;
        let p = slot_elem(&base.backend, Slot::P);
        for q in 0..x.len() {
            let mut expect = Vec::new();
            for c in i.fibers[k.arrow[q]].finite().unwrap() {
                for d in x.fibers[q].finite().unwrap() {
                    match base.backend.apply_chain(&p, &[&c, &d], 10_000) {
                        AppOutcome::Value(v) => expect.push(v),
                        o => panic!("{o:?}"),
                    }
                }
            }
            assert_eq!(gfx.fibers[q].finite().unwrap(), expect);
        }
    }

    #[test]
    fn arrows_transport_both_ways() {
        let base = Pca::sk();
        let i = selectors(&base, "I", &["a", "b"]);
        let sp = slice_pca(&base, &i).unwrap();
        let x = selectors(&base, "X", &["p", "q", "r"]);
        let kx = check_morphism(&base, &x, &i, vec![0, 1, 1], None, &b()).unwrap();
        let h = check_morphism(&base, &x, &x, vec![0, 2, 1], None, &b()).unwrap();
        assert!(h.verdict.is_proven());
        let fh = f_arrow(&sp, &kx, &kx, &h, &b()).unwrap();
        assert!(fh.verdict.is_proven(), "{}", fh.verdict);
        let gfh = g_arrow(&sp, &fh, &b()).unwrap();
        assert!(gfh.verdict.is_proven(), "{}", gfh.verdict);
        assert!(gfh.tracker.unwrap().source.contains("#p (#p0 x)"));
        // a slice arrow tracked by an interpolant with E_I
        let fx = functor_f(&sp, &kx);
        let swap = check_morphism(&sp.pca, &fx, &fx, vec![0, 2, 1], None, &b()).unwrap();
        assert!(swap.verdict.holds(), "{}", swap.verdict);
        assert!(g_arrow(&sp, &swap, &b()).unwrap().verdict.holds());
    }

    #[test]
    fn constant_objects_are_prone() {
        let base = Pca::sk();
        let i = selectors(&base, "I", &["a", "b"]);
        let sp = slice_pca(&base, &i).unwrap();
        let kid = assemblies::identity(&base, &i, &b());
        let x = selectors(&base, "X", &["p", "q"]);
        let kc = check_morphism(&base, &x, &i, vec![0, 0], None, &b()).unwrap();
        for (name, c, p) in constant_vs_prone(&sp, &[kid, kc], &b()) {
            assert_eq!(c.holds(), p.holds(), "{name}: {c} vs {p}");
            assert_eq!(c.is_refuted(), p.is_refuted(), "{name}: {c} vs {p}");
        }
    }

    #[test]
    fn reindexing_between_slices() {
        let base = rel();
        let i = one_plus_one(&base);
        let j = nabla_two();
        let si = slice_pca(&base, &i).unwrap();
        let sj = slice_pca(&base, &j).unwrap();
        let f = check_morphism(&base, &i, &j, vec![0, 1], None, &b()).unwrap();
        let m = slice_pullback_morphism(&si, &sj, &f, &b()).unwrap();
        assert!(m.conditions.images.holds(), "{}", m.conditions.images);
        assert!(m.conditions.tracked.holds(), "{}", m.conditions.tracked);
        let id = assemblies::identity(&base, &i, &b());
        let mid = slice_pullback_morphism(&si, &si, &id, &b()).unwrap();
        assert!(mid.verdict().holds());
        assert!(morphisms::relations_agree(&mid, &morphisms::identity(&si.pca, &b()), &b()).unwrap().holds());
        let one = terminal(&base);
        let s1 = slice_pca(&base, &one).unwrap();
        let bang = check_morphism(&base, &i, &one, vec![0, 0], None, &b()).unwrap();
        let pb = slice_pullback_morphism(&si, &s1, &bang, &b()).unwrap();
        assert!(pb.verdict().holds(), "{:?}", pb.conditions);
    }

    #[test]
    fn partitioned_presentation_agrees() {
        let base = rel();
        let sp = slice_pca(&base, &one_plus_one(&base)).unwrap();
        let pf = partitioned_slice_filter(&sp, 3).unwrap();
        // oracle: sections are r·f(i) computed directly
        for (r, g) in pf.sections(&base.backend, 10_000) {
            for (f, gi) in pf.basic.iter().zip(&g) {
                assert_eq!(base.backend.apply(&r, f, 10_000), AppOutcome::Value(gi.clone()));
            }
        }
        assert!(partitioned_agreement(&sp, &pf, &battery(&pool(), 2, 2), &b()).is_proven());
        // a constant basic realizer gives the ∇ description
        let k = slot_elem(&base.backend, Slot::K);
        let cst = Assembly::new("cst", &["l", "r"], vec![RSet::single(k.clone()), RSet::single(k)]);
        let sc = slice_pca(&base, &cst).unwrap();
        let pc = partitioned_slice_filter(&sc, 3).unwrap();
        for u in battery(&pool(), 2, 2) {
            let comps = sc.components(&u);
            let (v, _) = pc.accepts(&base.backend, &comps, &b());
            assert_eq!(v.holds(), share_c(&comps), "{u}");
        }
        assert!(matches!(partitioned_slice_filter(&slice_pca(&base, &nabla_two()).unwrap(), 3), Err(SliceError::NotPartitioned { .. })));
    }
}
