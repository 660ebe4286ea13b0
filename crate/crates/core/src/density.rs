//! Quasi-surjective and computationally dense morphisms.
//!
//! A witness is a realizer (`N` or `M`) in the target filter together with
//! responders: for each listed target generator `U`, a certified `V` in the
//! source filter and the evidence that it answers `U`. The right adjoint of
//! `Asm(p,f)` is built for the slice inclusion `(|I|*, δ)`; its objects have
//! fibers given by a predicate through `M`, so they are kept implicit.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assemblies::{check_morphism, synth_tracker, Assembly, Tracker};
use crate::backend::RegFunctor;
use crate::morphisms::{check_points, compose_applicative, same_pca, transport_pca, ApplicativeMorphism, MorphError, RelMap};
use crate::pca::filter::{Arg, Cert, Filter};
use crate::pca::kit::Slot;
use crate::pca::rset::RSet;
use crate::pca::synth::Member;
use crate::pca::{AppOutcome, Backend, Budget, Elem, Pca};
use crate::slicing::{SliceError, SlicePca};
use crate::terms::Term;
use crate::verdict::{Counterexample, Verdict};
use crate::World;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DensityError {
    #[error("morphisms do not compose: {0}")]
    IncompatibleMorphisms(String),
    #[error("converted witness fails its own evidence: {0}")]
    ReplayFailure(String),
    #[error("no computable right adjoint: {0}")]
    NotComputableAdjoint(String),
    #[error("missing data: {0}")]
    Missing(String),
    #[error(transparent)]
    Morph(#[from] MorphError),
    #[error(transparent)]
    Slice(#[from] SliceError),
}

/// `U ↦ V` with the evidence that `V` answers `U`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Responder {
    pub target: RSet,
    pub source: Member,
    pub evidence: Verdict,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QsWitness {
    pub n: Tracker,
    pub responders: Vec<Responder>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CdResponder {
    pub target: RSet,
    pub source: Member,
    /// `V·A↓` in the source.
    pub total: Verdict,
    /// `p(V)·p(A)↓` in the image; recorded, not required.
    pub weak_only: bool,
    /// The guarded clause on sampled `r ∈ V`, `a`.
    pub clause: Verdict,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CdWitness {
    pub m: Tracker,
    pub responders: Vec<CdResponder>,
}

impl QsWitness {
    pub fn responder(&self, u: &RSet) -> Option<&Responder> {
        self.responders.iter().find(|r| &r.target == u)
    }
}

impl CdWitness {
    pub fn responder(&self, u: &RSet) -> Option<&CdResponder> {
        self.responders.iter().find(|r| &r.target == u)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    CdToQs,
    QsToCd,
}

// ------------------------------------------------------------- fixtures

/// `(|I|*, δ): (A,φ) → (A,φ)/I`, tracked by `I`.
pub fn slice_inclusion(sp: &SlicePca, budget: &Budget) -> Result<ApplicativeMorphism, DensityError> {
    let functor = RegFunctor::Pullback { base: sp.index.points.clone() };
    Ok(ApplicativeMorphism::check(
        "|I|*",
        &sp.base,
        &sp.pca,
        functor,
        RelMap::Delta,
        Some(Tracker::slot(&sp.pca, Slot::I)),
        budget,
    )?)
}

/// `(p, δ): (A,φ) → p*(A,φ)`, tracked by `I`.
pub fn cocartesian(p: &RegFunctor, a: &Pca, budget: &Budget) -> Result<ApplicativeMorphism, DensityError> {
    let target = transport_pca(p, a)?;
    Ok(ApplicativeMorphism::check(
        &format!("{}-cocart", crate::morphisms::functor_name(p)),
        a,
        &target,
        p.clone(),
        RelMap::Delta,
        Some(Tracker::slot(&target, Slot::I)),
        budget,
    )?)
}

/// A PCA with a slice filter, seen as a slice of its base.
pub fn slice_view(pca: &Pca) -> Option<SlicePca> {
    let (Filter::Slice { base, ei }, Backend::Product { parts }) = (&pca.filter, &pca.backend) else {
        return None;
    };
    let b = Pca::new(&format!("{}-base", pca.name), World::Set, parts.first()?.clone(), (**base).clone());
    let labels = pca.world.labels();
    let pts = ei.iter().enumerate().map(|(i, e)| (labels.get(i).cloned().unwrap_or_else(|| format!("i{i}")), i, e.clone())).collect();
    Some(SlicePca { base: b, index: Assembly::over("I", pts), pca: pca.clone() })
}

// ------------------------------------------------------------- helpers

fn fam_maps_into(pca: &Pca, n: &RSet, v: &RSet, u: &RSet, budget: &Budget, label: &str) -> Verdict {
    let mut rng = budget.rng(label);
    let mut out = Verdict::Proven;
    for k in 0..pca.components() {
        let nk = pca.part_set(n, k);
        out = out.and(nk.maps_into(&pca.part_set(v, k), &pca.part_set(u, k), pca.part(k), budget, &mut rng));
        if out.is_refuted() {
            break;
        }
    }
    out
}

fn certified(pca: &Pca, u: &RSet, source: &str, budget: &Budget) -> Tracker {
    Tracker { source: source.into(), member: pca.certify(u, budget) }
}

fn replayed(pca: &Pca, m: &Member, budget: &Budget) -> Verdict {
    pca.replay_member(m, budget)
}

/// `K·U` in `pca`.
fn k_of(pca: &Pca, u: &RSet, budget: &Budget) -> Option<RSet> {
    let t = certified(pca, u, "u", budget);
    synth_tracker(pca, &[], "k u", &[("u", &t)], budget).map(|t| t.member.set)
}

/// The single `V ∈ φ` behind a slice-filter member.
fn lemma_of(sp: &SlicePca, u: &RSet, budget: &Budget) -> Option<Member> {
    let (v, c) = sp.membership(u, budget);
    if !v.holds() {
        return None;
    }
    match sp.to_lemma(&c?, budget)? {
        Cert::Lemma { v, cert } => Some(Member { set: v, cert: Some(*cert) }),
        _ => None,
    }
}

/// A base member as a member of `pca`: itself over Set, a constant family
/// over a slice.
fn lift(pca: &Pca, m: &Member) -> Option<Member> {
    match (&pca.world, &pca.filter) {
        (World::Set, _) => Some(m.clone()),
        (_, Filter::Slice { .. }) => {
            let cert = Cert::Gen { term: Term::x(0), args: vec![Arg::Pulled { set: m.set.clone(), cert: Box::new(m.cert.clone()?) }] };
            Some(Member { set: RSet::prod(vec![m.set.clone(); pca.components()]), cert: Some(cert) })
        }
        _ => None,
    }
}

/// `|I|*(λy x. x y)·E_I`, the realizer of `λx. x·E_I`.
pub fn apply_ei(sp: &SlicePca, budget: &Budget) -> Option<Tracker> {
    let t = synth_tracker(&sp.base, &["y", "x"], "x y", &[], budget)?;
    let mut rng = budget.rng("density/apply-ei");
    let fam = RSet::prod(vec![t.set().clone(); sp.n()])
        .apply(&RSet::prod(sp.index.fibers.clone()), &sp.pca.backend, budget, &mut rng)
        .image?;
    let cert = Cert::Gen {
        term: Term::app(Term::x(0), Term::x(1)),
        args: vec![Arg::Pulled { set: t.set().clone(), cert: Box::new(t.member.cert.clone()?) }, Arg::Ei],
    };
    Some(Tracker { source: "|I|*(\\y x. x y) E_I".into(), member: Member { set: fam, cert: Some(cert) } })
}

// ----------------------------------------------------- quasi-surjectivity

/// `V` certified in `φ` and `N·f(p(V)) ⊆ U`.
pub fn replay_responder(m: &ApplicativeMorphism, n: &Tracker, r: &Responder, budget: &Budget) -> Verdict {
    let Some(fv) = m.image_of(&r.source.set, budget) else {
        return Verdict::unknown("image of the responder not computable");
    };
    replayed(&m.source, &r.source, budget).and(fam_maps_into(
        &m.target,
        n.set(),
        &fv,
        &r.target,
        budget,
        &format!("qs/{}/{}", m.name, r.target),
    ))
}

fn qs_candidates_n(target: &Pca, budget: &Budget) -> Vec<Tracker> {
    let mut out = vec![Tracker::slot(target, Slot::I)];
    if let Some(sp) = slice_view(target) {
        out.extend(apply_ei(&sp, budget));
    }
    out.extend(synth_tracker(target, &["x"], "x k", &[], budget));
    out
}

fn qs_candidates_v(m: &ApplicativeMorphism, u: &RSet, budget: &Budget) -> Vec<Member> {
    let mut out = Vec::new();
    if m.source.world == m.target.world {
        out.push(m.source.certify(u, budget));
    }
    if let Some(sp) = slice_view(&m.target) {
        if let Some(v) = lemma_of(&sp, u, budget).and_then(|v| lift(&m.source, &v)) {
            out.push(v);
        }
    }
    if m.source.world == World::Set {
        let u0 = m.target.part_set(u, 0);
        let c = if u0.is_full() { RSet::single(m.source.backend.default_elem()) } else { u0 };
        let t = certified(&m.source, &c, "u0", budget);
        if let Some(k) = synth_tracker(&m.source, &[], "k u", &[("u", &t)], budget) {
            out.push(k.member);
        }
    }
    out
}

/// A responder for `U` against `N`, by search.
pub fn qs_responder(m: &ApplicativeMorphism, n: &Tracker, u: &RSet, budget: &Budget) -> Option<Responder> {
    qs_candidates_v(m, u, budget).into_iter().find_map(|v| {
        let mut r = Responder { target: u.clone(), source: v, evidence: Verdict::Proven };
        r.evidence = replay_responder(m, n, &r, budget);
        r.evidence.holds().then_some(r)
    })
}

/// Replay `witness`, or search for one covering `gens`.
pub fn check_qs(m: &ApplicativeMorphism, witness: Option<&QsWitness>, gens: &[RSet], budget: &Budget) -> (Verdict, Option<QsWitness>) {
    if let Some(w) = witness {
        let mut w = w.clone();
        let mut out = replayed(&m.target, &w.n.member, budget);
        for r in &mut w.responders {
            r.evidence = replay_responder(m, &w.n, r, budget);
            out = out.and(r.evidence.clone());
        }
        for g in gens {
            if w.responder(g).is_none() {
                out = out.and(Verdict::unknown(format!("generator {g} not covered")));
            }
        }
        return (out, Some(w));
    }
    let mut best: Option<(usize, QsWitness)> = None;
    for n in qs_candidates_n(&m.target, budget) {
        if !replayed(&m.target, &n.member, budget).holds() {
            continue;
        }
        let responders: Vec<Responder> = gens.iter().filter_map(|g| qs_responder(m, &n, g, budget)).collect();
        let covered = responders.len();
        let w = QsWitness { n, responders };
        if covered == gens.len() {
            return check_qs(m, Some(&w), gens, budget);
        }
        if best.as_ref().is_none_or(|(c, _)| covered > *c) {
            best = Some((covered, w));
        }
    }
    match best {
        Some((_, w)) => (check_qs(m, Some(&w), gens, budget).0, Some(w)),
        None => (Verdict::unknown("no certified candidate N"), None),
    }
}

/// `N″ = λx. N′(T·g(q(N))·x)` for `g∘f`, responders composed through `w2`
/// then `w1`; missing first-factor responders are searched for.
pub fn qs_compose(
    f: &ApplicativeMorphism,
    w1: &QsWitness,
    g: &ApplicativeMorphism,
    w2: &QsWitness,
    budget: &Budget,
) -> Result<(ApplicativeMorphism, QsWitness, Verdict), DensityError> {
    if !same_pca(&f.target, &g.source) {
        return Err(DensityError::IncompatibleMorphisms(format!("{} then {}", f.name, g.name)));
    }
    let h = compose_applicative(f, g, budget)?;
    let t = g.tracker.clone().ok_or_else(|| DensityError::Missing(format!("tracker of {}", g.name)))?;
    let gn = g.image_of(w1.n.set(), budget).ok_or_else(|| DensityError::Missing("g(q(N))".into()))?;
    let gn = certified(&g.target, &gn, "g(N)", budget);
    let n2 = synth_tracker(&g.target, &["x"], "n (t gn x)", &[("n", &w2.n), ("t", &t), ("gn", &gn)], budget)
        .ok_or_else(|| DensityError::Missing("N″ not synthesizable".into()))?;
    let mut responders = Vec::new();
    for r2 in &w2.responders {
        let v1 = w1.responder(&r2.source.set).cloned().or_else(|| qs_responder(f, &w1.n, &r2.source.set, budget));
        let Some(r1) = v1 else { continue };
        responders.push(Responder { target: r2.target.clone(), source: r1.source, evidence: Verdict::Proven });
    }
    let gens: Vec<RSet> = w2.responders.iter().map(|r| r.target.clone()).collect();
    let (v, w) = check_qs(&h, Some(&QsWitness { n: n2, responders }), &gens, budget);
    Ok((h, w.expect("replay returns the witness"), v))
}

/// From a witness for `g∘f`, one for `g`: same `N`, responders `U ↦ f(p(V))`.
pub fn qs_second_factor(f: &ApplicativeMorphism, g: &ApplicativeMorphism, w: &QsWitness, budget: &Budget) -> (Verdict, Option<QsWitness>) {
    let mut responders = Vec::new();
    for r in &w.responders {
        let Some(fv) = f.image_of(&r.source.set, budget) else { continue };
        responders.push(Responder { target: r.target.clone(), source: f.target.certify(&fv, budget), evidence: Verdict::Proven });
    }
    let gens: Vec<RSet> = w.responders.iter().map(|r| r.target.clone()).collect();
    check_qs(g, Some(&QsWitness { n: w.n.clone(), responders }), &gens, budget)
}

// ---------------------------------------------------- computational density

/// `V·A↓`, the weaker `p(V)·p(A)↓`, and the guarded clause
/// `r ∈ p(V) ∧ U·f(a)↓ → M·f(ra) ⊆ U·f(a)` on sampled `r`, `a`.
pub fn replay_cd(m: &ApplicativeMorphism, mm: &Tracker, r: &mut CdResponder, budget: &Budget) -> Verdict {
    let label = format!("cd/{}/{}", m.name, r.target);
    let mut rng = budget.rng(&label);
    if m.source.world != World::Set {
        r.clause = Verdict::unknown("guarded clause only sampled over Set sources");
        return r.clause.clone();
    }
    let src = &m.source.backend;
    let w = &r.source.set;
    r.total = w.apply(&RSet::full(), src, budget, &mut rng).defined;
    let weak = match (m.image_of(w, budget), m.image_of(&RSet::full(), budget)) {
        (Some(fv), Some(fa)) => {
            let mut v = Verdict::Proven;
            for k in 0..m.target.components() {
                let b = m.target.part(k);
                v = v.and(m.target.part_set(&fv, k).apply(&m.target.part_set(&fa, k), b, budget, &mut rng).defined);
            }
            v
        }
        _ => Verdict::unknown("image not computable"),
    };
    r.weak_only = weak.holds() && !r.total.holds();
    let rs: Vec<Elem> = match w.finite() {
        Some(es) => es,
        None => (0..budget.samples).map(|_| w.sample(src, &mut rng)).collect(),
    };
    let (pts, exact) = check_points(src, &label, budget);
    let exact = exact && w.finite().is_some();
    let mut out = Verdict::Proven;
    let mut n = 0u64;
    for k in 0..m.target.components() {
        let dst = m.target.part(k);
        let mk = m.target.part_set(mm.set(), k);
        let uk = m.target.part_set(&r.target, k);
        for a in &pts {
            let Some(fa) = m.at(k, a, budget) else {
                out = out.and(Verdict::unknown("f(a) not computable"));
                continue;
            };
            let ufa = uk.apply(&fa, dst, budget, &mut rng);
            let Some(img) = ufa.image.filter(|_| ufa.defined.holds()) else { continue };
            for x in &rs {
                let AppOutcome::Value(ra) = src.apply(x, a, budget.fuel) else {
                    out = out.and(Verdict::unknown(format!("{x}·{a} did not converge")));
                    continue;
                };
                n += 1;
                let Some(fra) = m.at(k, &ra, budget) else { continue };
                out = out.and(mk.maps_into(&fra, &img, dst, budget, &mut rng));
                if out.is_refuted() {
                    r.clause = out.clone();
                    return out;
                }
            }
        }
    }
    r.clause = if exact || !out.holds() { out } else { out.weaken(n) };
    replayed(&m.source, &r.source, budget).and(r.total.clone()).and(r.clause.clone())
}

pub fn check_cd(m: &ApplicativeMorphism, w: &CdWitness, gens: &[RSet], budget: &Budget) -> (Verdict, CdWitness) {
    let mut w = w.clone();
    let mut out = replayed(&m.target, &w.m.member, budget);
    let mm = w.m.clone();
    for r in &mut w.responders {
        out = out.and(replay_cd(m, &mm, r, budget));
    }
    for g in gens {
        if w.responder(g).is_none() {
            out = out.and(Verdict::unknown(format!("generator {g} not covered")));
        }
    }
    (out, w)
}

fn image_member(m: &ApplicativeMorphism, u: &RSet, name: &str, budget: &Budget) -> Result<Tracker, DensityError> {
    let img = m.image_of(u, budget).ok_or_else(|| DensityError::Missing(format!("f({name})")))?;
    Ok(certified(&m.target, &img, &format!("f({name})"), budget))
}

/// `M = λx. N(T·f(P0)·x)(T·f(P1)·x)`, responders `W := P·V`. Covers `gens`
/// and `K·U` for each of them, as the reverse conversion needs.
pub fn qs_to_cd(m: &ApplicativeMorphism, w: &QsWitness, gens: &[RSet], budget: &Budget) -> Result<(CdWitness, Verdict), DensityError> {
    let t = m.tracker.clone().ok_or_else(|| DensityError::Missing("tracker T".into()))?;
    let fp0 = image_member(m, &m.source.slot_member(Slot::P0).set, "P0", budget)?;
    let fp1 = image_member(m, &m.source.slot_member(Slot::P1).set, "P1", budget)?;
    let mm = synth_tracker(&m.target, &["x"], "n (t f0 x) (t f1 x)", &[("n", &w.n), ("t", &t), ("f0", &fp0), ("f1", &fp1)], budget)
        .ok_or_else(|| DensityError::Missing("M not synthesizable".into()))?;
    let mut targets: Vec<RSet> = gens.to_vec();
    targets.extend(gens.iter().filter_map(|u| k_of(&m.target, u, budget)));
    let mut responders = Vec::new();
    for u in &targets {
        let Some(r) = w.responder(u).cloned().or_else(|| qs_responder(m, &w.n, u, budget)) else { continue };
        let v = Tracker { source: "V".into(), member: r.source };
        let Some(pv) = synth_tracker(&m.source, &[], "#p v", &[("v", &v)], budget) else { continue };
        responders.push(CdResponder {
            target: u.clone(),
            source: pv.member,
            total: Verdict::Proven,
            weak_only: false,
            clause: Verdict::Proven,
        });
    }
    let (v, cd) = check_cd(m, &CdWitness { m: mm, responders }, &targets, budget);
    if v.is_refuted() {
        return Err(DensityError::ReplayFailure(format!("{v}")));
    }
    Ok((cd, v))
}

/// `N = λx. M(T·x·f(p(A)))`; the responder for `U` is the one for `K·U`.
pub fn cd_to_qs(m: &ApplicativeMorphism, w: &CdWitness, gens: &[RSet], budget: &Budget) -> Result<(QsWitness, Verdict), DensityError> {
    let t = m.tracker.clone().ok_or_else(|| DensityError::Missing("tracker T".into()))?;
    let fa = image_member(m, &RSet::full(), "A", budget)?;
    let n = synth_tracker(&m.target, &["x"], "mm (t x fa)", &[("mm", &w.m), ("t", &t), ("fa", &fa)], budget)
        .ok_or_else(|| DensityError::Missing("N not synthesizable".into()))?;
    let mut responders = Vec::new();
    for u in gens {
        let Some(ku) = k_of(&m.target, u, budget) else { continue };
        let Some(r) = w.responder(&ku) else { continue };
        responders.push(Responder { target: u.clone(), source: r.source.clone(), evidence: Verdict::Proven });
    }
    let (v, qs) = check_qs(m, Some(&QsWitness { n, responders }), gens, budget);
    if v.is_refuted() {
        return Err(DensityError::ReplayFailure(format!("{v}")));
    }
    Ok((qs.expect("replay returns the witness"), v))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Converted {
    Qs { witness: QsWitness, verdict: Verdict },
    Cd { witness: CdWitness, verdict: Verdict },
}

pub fn convert_density(
    dir: Direction,
    m: &ApplicativeMorphism,
    qs: Option<&QsWitness>,
    cd: Option<&CdWitness>,
    gens: &[RSet],
    budget: &Budget,
) -> Result<Converted, DensityError> {
    match dir {
        Direction::QsToCd => {
            let w = qs.ok_or_else(|| DensityError::Missing("qs witness".into()))?;
            let (witness, verdict) = qs_to_cd(m, w, gens, budget)?;
            Ok(Converted::Cd { witness, verdict })
        }
        Direction::CdToQs => {
            let w = cd.ok_or_else(|| DensityError::Missing("cd witness".into()))?;
            let (witness, verdict) = cd_to_qs(m, w, gens, budget)?;
            Ok(Converted::Qs { witness, verdict })
        }
    }
}

// ------------------------------------------------------------ right adjoint

/// `GY` for `Y` over `Set/|I|`: points are sections `s` of `Y → I`; `a`
/// realizes `s` iff `M_i·a ⊆ E_Y(s_i)` for every `i`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RightObject {
    pub of: Assembly,
    /// `s[i]` is a point of `Y` over `i`.
    pub sections: Vec<Vec<usize>>,
}

impl RightObject {
    pub fn labels(&self) -> Vec<String> {
        self.sections.iter().map(|s| s.iter().map(|&q| self.of.points[q].clone()).collect::<Vec<_>>().join(",")).collect()
    }
}

/// One `hom(FX, Y) ≅ hom(X, GY)` comparison.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomCount {
    pub x: String,
    pub y: String,
    pub functions: u64,
    pub left: u64,
    pub right: u64,
    pub verdict: Verdict,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjointData {
    pub m: Tracker,
    pub objects: Vec<RightObject>,
    /// `η_X: X → GFX` per source fixture, tracked by the responder for `|I|*(I)`.
    pub units: Vec<(String, Verdict)>,
    pub unit_tracker: Option<Tracker>,
    /// `M` on the section realizers of `FGY → Y`.
    pub counit: Verdict,
    pub homs: Vec<HomCount>,
    pub triangles: Verdict,
    pub verdict: Verdict,
}

fn sections(sp_n: usize, y: &Assembly) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for i in 0..sp_n {
        let over: Vec<usize> = (0..y.len()).filter(|&q| y.index[q] == i).collect();
        out = out.into_iter().flat_map(|s| over.iter().map(move |&q| [s.clone(), vec![q]].concat())).collect();
    }
    out
}

/// `a ∈ E_GY(s)` for every `a` in `u`.
fn realizes(sp: &SlicePca, mm: &RSet, u: &RSet, fibers: &[RSet], budget: &Budget) -> Verdict {
    let mut rng = budget.rng(&format!("adjoint/realizes/{u}"));
    let mut out = Verdict::Proven;
    for (i, f) in fibers.iter().enumerate() {
        out = out.and(sp.pca.part_set(mm, i).maps_into(u, f, sp.pca.part(i), budget, &mut rng));
    }
    out
}

/// `P·(λe c. v e)·K` for the Lemma form `v` of a family: realizes the section
/// through that family.
pub fn section_realizer(sp: &SlicePca, family: &RSet, budget: &Budget) -> Option<Member> {
    let v = lemma_of(sp, family, budget)?;
    let v = Tracker { source: "V".into(), member: v };
    synth_tracker(&sp.base, &[], "#p (\\e c. v e) k", &[("v", &v)], budget).map(|t| t.member)
}

fn functions(n: usize, m: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..n {
        out = out.into_iter().flat_map(|a: Vec<usize>| (0..m).map(move |j| [a.clone(), vec![j]].concat())).collect();
    }
    out
}

/// `G ⊣` for the slice inclusion: objects, units, the counit on section
/// realizers, triangle identities, and the hom bijection by enumeration.
pub fn right_adjoint(
    m: &ApplicativeMorphism,
    w: &CdWitness,
    xs: &[Assembly],
    ys: &[Assembly],
    budget: &Budget,
) -> Result<AdjointData, DensityError> {
    if !matches!(m.functor, RegFunctor::Pullback { .. }) || m.rel != RelMap::Delta || m.source.world != World::Set {
        return Err(DensityError::NotComputableAdjoint(format!("{} is not a slice inclusion", m.name)));
    }
    let sp = slice_view(&m.target).ok_or_else(|| DensityError::NotComputableAdjoint("target is not a slice".into()))?;
    let n = sp.n();
    let mm = w.m.set().clone();
    let pulled_i = [RSet::prod(vec![sp.base.slot_member(Slot::I).set; n]), sp.pca.slot_member(Slot::I).set];
    let unit_tracker = pulled_i.iter().find_map(|u| w.responder(u)).map(|r| Tracker { source: "P V_i".into(), member: r.source.clone() });

    let objects: Vec<RightObject> = ys.iter().map(|y| RightObject { of: y.clone(), sections: sections(n, y) }).collect();

    let mut counit = Verdict::Proven;
    let mut checked = 0;
    for g in &objects {
        for s in &g.sections {
            let fibers: Vec<RSet> = s.iter().map(|&q| g.of.fibers[q].clone()).collect();
            let Some(a) = section_realizer(&sp, &RSet::prod(fibers.clone()), budget) else { continue };
            checked += 1;
            counit = counit.and(realizes(&sp, &mm, &a.set, &fibers, budget));
        }
    }
    let counit = counit.weaken(checked);

    let mut units = Vec::new();
    let mut triangles = Verdict::Proven;
    for x in xs {
        let (fx, origin) = crate::morphisms::asm_object(m, x, budget)?;
        let at = |p: usize, i: usize| (0..fx.len()).find(|&q| origin[q] == p && fx.index[q] == i);
        let v = match &unit_tracker {
            None => Verdict::unknown("the witness has no responder for |I|*(i)"),
            Some(t) => {
                let mut rng = budget.rng(&format!("adjoint/unit/{}", x.name));
                let mut v = replayed(&sp.base, &t.member, budget);
                for p in 0..x.len() {
                    let a = t.set().apply(&x.fibers[p], &sp.base.backend, budget, &mut rng);
                    v = v.and(match a.image {
                        Some(img) => a.defined.and(realizes(&sp, &mm, &img, &vec![x.fibers[p].clone(); n], budget)),
                        None => Verdict::unknown("unit image not computable"),
                    });
                }
                v
            }
        };
        units.push((x.name.clone(), v));
        for q in 0..fx.len() {
            if at(origin[q], fx.index[q]) != Some(q) {
                triangles = triangles.and(Verdict::refuted(Counterexample::Unequal {
                    what: format!("εF∘Fη at {}", fx.points[q]),
                    left: fx.points[q].clone(),
                    right: "another point".into(),
                }));
            }
        }
    }
    for g in &objects {
        for (k, s) in g.sections.iter().enumerate() {
            let back: Vec<usize> = (0..n).map(|i| s[i]).collect();
            if g.sections.iter().position(|t| *t == back) != Some(k) {
                triangles = triangles.and(Verdict::refuted(Counterexample::Unequal {
                    what: "Gε∘ηG".into(),
                    left: format!("{s:?}"),
                    right: format!("{back:?}"),
                }));
            }
        }
    }

    let mut homs = Vec::new();
    for x in xs {
        let (fx, origin) = crate::morphisms::asm_object(m, x, budget)?;
        for g in &objects {
            homs.push(hom_count(&sp, &mm, x, &fx, &origin, g, budget));
        }
    }
    let verdict = Verdict::all(units.iter().map(|(_, v)| v.clone()))
        .and(triangles.clone())
        .and(Verdict::all(homs.iter().map(|h| h.verdict.clone())));
    Ok(AdjointData { m: w.m.clone(), objects, units, unit_tracker, counit, homs, triangles, verdict })
}

/// Every function `|X| → |GY|` against its transpose `FX → Y`: the transpose
/// is decided in the slice; `g` itself is tracked by `λd. P V d` when the
/// transpose has Lemma tracker `V`, and refuted with it otherwise.
fn hom_count(sp: &SlicePca, mm: &RSet, x: &Assembly, fx: &Assembly, origin: &[usize], g: &RightObject, budget: &Budget) -> HomCount {
    let y = &g.of;
    let mut out = HomCount { x: x.name.clone(), y: y.name.clone(), functions: 0, left: 0, right: 0, verdict: Verdict::Proven };
    let mut rng = budget.rng(&format!("adjoint/hom/{}/{}", x.name, y.name));
    for gx in functions(x.len(), g.sections.len()) {
        out.functions += 1;
        let arrow: Vec<usize> = (0..fx.len()).map(|q| g.sections[gx[origin[q]]][fx.index[q]]).collect();
        let left = check_morphism(&sp.pca, fx, y, arrow, None, budget).expect("components respected");
        let right = if left.verdict.holds() {
            out.left += 1;
            let lemma = left.tracker.as_ref().and_then(|t| sp.lemma_member(t, budget));
            match lemma {
                None => Verdict::unknown("transpose tracker has no Lemma form"),
                Some(v) => {
                    let v = Tracker { source: "V".into(), member: v };
                    match synth_tracker(&sp.base, &["d"], "#p v d", &[("v", &v)], budget) {
                        None => Verdict::unknown("transposed tracker not synthesizable"),
                        Some(t) => {
                            let mut r = replayed(&sp.base, &t.member, budget);
                            for p in 0..x.len() {
                                let fibers: Vec<RSet> = g.sections[gx[p]].iter().map(|&q| y.fibers[q].clone()).collect();
                                let a = t.set().apply(&x.fibers[p], &sp.base.backend, budget, &mut rng);
                                r = r.and(match a.image {
                                    Some(img) => a.defined.and(realizes(sp, mm, &img, &fibers, budget)),
                                    None => Verdict::unknown("image not computable"),
                                });
                            }
                            r
                        }
                    }
                }
            }
        } else {
            left.verdict.clone()
        };
        if right.holds() {
            out.right += 1;
        }
        out.verdict = out.verdict.and(if left.verdict.holds() == right.holds() {
            if left.verdict.is_unknown() {
                left.verdict.clone()
            } else {
                right.clone().and(if left.verdict.is_refuted() { Verdict::Proven } else { left.verdict.clone() })
            }
        } else {
            right.clone()
        });
        if right.is_refuted() && left.verdict.holds() {
            break;
        }
    }
    if out.verdict.holds() && out.left != out.right {
        out.verdict = Verdict::refuted(Counterexample::Unequal {
            what: "hom-set cardinalities".into(),
            left: out.left.to_string(),
            right: out.right.to_string(),
        });
    }
    out
}

/// `N` = the tracker `M` of the counit at `S`, the object whose points are the
/// listed generators with themselves as fibers; responders are the section
/// realizers of `GS`. Re-verified as a quasi-surjectivity witness.
pub fn adjoint_implies_dense(m: &ApplicativeMorphism, data: &AdjointData, gens: &[RSet], budget: &Budget) -> (Verdict, Option<QsWitness>) {
    let Some(sp) = slice_view(&m.target) else {
        return (Verdict::unknown("target is not a slice"), None);
    };
    let mut responders = Vec::new();
    for u in gens {
        if let Some(a) = section_realizer(&sp, u, budget) {
            responders.push(Responder { target: u.clone(), source: a, evidence: Verdict::Proven });
        }
    }
    check_qs(m, Some(&QsWitness { n: data.m.clone(), responders }), gens, budget)
}
