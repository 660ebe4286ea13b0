//! Base worlds: Set, finite powers Set^I and finite slices Set/X.
//!
//! Objects of `Set^I` and `Set/X` are both stored as families of carriers,
//! one per index (for a slice, the fibers over each base point). Elements
//! are indices into a carrier, or naturals for the infinite carrier `Nat`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pca::Budget;
use crate::verdict::{Counterexample, Verdict};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum World {
    Set,
    Pow { index: Vec<String> },
    Slice { base: Vec<String> },
}

impl World {
    pub fn components(&self) -> usize {
        match self {
            World::Set => 1,
            World::Pow { index } => index.len(),
            World::Slice { base } => base.len(),
        }
    }

    pub fn labels(&self) -> Vec<String> {
        match self {
            World::Set => vec!["*".into()],
            World::Pow { index } => index.clone(),
            World::Slice { base } => base.clone(),
        }
    }

    pub fn pow(n: usize) -> World {
        World::Pow { index: (0..n).map(|i| i.to_string()).collect() }
    }

    pub fn slice(base: &[&str]) -> World {
        World::Slice { base: base.iter().map(|s| s.to_string()).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "elems", rename_all = "snake_case")]
pub enum Carrier {
    Finite(Vec<String>),
    Nat,
}

impl Carrier {
    pub fn len(&self) -> Option<usize> {
        match self {
            Carrier::Finite(xs) => Some(xs.len()),
            Carrier::Nat => None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == Some(0)
    }

    pub fn finite(names: &[&str]) -> Carrier {
        Carrier::Finite(names.iter().map(|s| s.to_string()).collect())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Obj {
    pub world: World,
    pub parts: Vec<Carrier>,
}

impl Obj {
    pub fn set(names: &[&str]) -> Obj {
        Obj { world: World::Set, parts: vec![Carrier::finite(names)] }
    }

    pub fn nat() -> Obj {
        Obj { world: World::Set, parts: vec![Carrier::Nat] }
    }

    pub fn family(world: World, parts: Vec<Carrier>) -> Obj {
        assert_eq!(world.components(), parts.len());
        Obj { world, parts }
    }

    pub fn size(&self, i: usize) -> usize {
        self.parts[i].len().expect("finite carrier")
    }

    pub fn is_finite(&self) -> bool {
        self.parts.iter().all(|c| c.len().is_some())
    }

    pub fn terminal(world: &World) -> Obj {
        Obj { world: world.clone(), parts: vec![Carrier::finite(&["*"]); world.components()] }
    }

    /// For a slice object: the fibering map, as (element, base point) pairs
    /// of the total set.
    pub fn total(&self) -> Vec<(usize, usize)> {
        (0..self.parts.len()).flat_map(|i| (0..self.size(i)).map(move |x| (i, x))).collect()
    }
}

/// Componentwise functions between finite objects.
pub type Arrow = Vec<Vec<usize>>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NatRel {
    Eq,
    Le,
    Lt,
    Succ,
}

impl NatRel {
    fn holds(self, a: u64, b: u64) -> bool {
        match self {
            NatRel::Eq => a == b,
            NatRel::Le => a <= b,
            NatRel::Lt => a < b,
            NatRel::Succ => b == a + 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Graph {
    /// One pair list per component.
    Pairs { pairs: Vec<BTreeSet<(u64, u64)>> },
    Nat { rel: NatRel },
    Compose { first: Box<Graph>, second: Box<Graph> },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rel {
    pub source: Obj,
    pub target: Obj,
    pub graph: Graph,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackendError {
    #[error("source/target mismatch: {0}")]
    SourceTargetMismatch(String),
    #[error("unbound symbol {0}")]
    UnboundSymbol(String),
    #[error("every carrier is infinite and no sample budget was given")]
    BudgetRequired,
    #[error("functor does not apply to this world: {0}")]
    WorldMismatch(String),
}

/// Bound on middle witnesses searched when composing over `Nat`.
const NAT_SLACK: u64 = 2;

impl Rel {
    pub fn pairs(source: Obj, target: Obj, pairs: Vec<Vec<(u64, u64)>>) -> Rel {
        let pairs = pairs.into_iter().map(|p| p.into_iter().collect()).collect();
        Rel { source, target, graph: Graph::Pairs { pairs } }
    }

    pub fn from_arrow(source: &Obj, target: &Obj, f: &Arrow) -> Rel {
        let pairs = f.iter().map(|fi| fi.iter().enumerate().map(|(x, &y)| (x as u64, y as u64)).collect()).collect();
        Rel { source: source.clone(), target: target.clone(), graph: Graph::Pairs { pairs } }
    }

    pub fn diagonal(a: &Obj) -> Rel {
        if a.is_finite() {
            let pairs = (0..a.parts.len()).map(|i| (0..a.size(i) as u64).map(|x| (x, x)).collect()).collect();
            Rel { source: a.clone(), target: a.clone(), graph: Graph::Pairs { pairs } }
        } else {
            Rel { source: a.clone(), target: a.clone(), graph: Graph::Nat { rel: NatRel::Eq } }
        }
    }

    pub fn holds(&self, comp: usize, a: u64, b: u64) -> bool {
        self.graph.holds(comp, a, b, &self.source, &self.target)
    }

    /// All pairs, when both ends are finite.
    pub fn finite_pairs(&self) -> Option<Vec<BTreeSet<(u64, u64)>>> {
        if !self.source.is_finite() || !self.target.is_finite() {
            return None;
        }
        Some(
            (0..self.source.parts.len())
                .map(|i| {
                    let mut s = BTreeSet::new();
                    for a in 0..self.source.size(i) as u64 {
                        for b in 0..self.target.size(i) as u64 {
                            if self.holds(i, a, b) {
                                s.insert((a, b));
                            }
                        }
                    }
                    s
                })
                .collect(),
        )
    }

    pub fn graph_eq(&self, other: &Rel) -> bool {
        self.source == other.source && self.target == other.target && self.finite_pairs() == other.finite_pairs()
    }

    pub fn is_total(&self) -> bool {
        match self.finite_pairs() {
            Some(ps) => ps.iter().enumerate().all(|(i, p)| (0..self.source.size(i) as u64).all(|a| p.iter().any(|&(x, _)| x == a))),
            None => false,
        }
    }
}

impl Graph {
    fn holds(&self, comp: usize, a: u64, b: u64, src: &Obj, tgt: &Obj) -> bool {
        let _ = tgt;
        match self {
            Graph::Pairs { pairs } => pairs[comp].contains(&(a, b)),
            Graph::Nat { rel } => rel.holds(a, b),
            Graph::Compose { first, second } => {
                let mids: Box<dyn Iterator<Item = u64>> = match src.parts.get(comp) {
                    _ => match (&**first, &**second) {
                        (Graph::Pairs { pairs }, _) => {
                            Box::new(pairs[comp].iter().filter(|(x, _)| *x == a).map(|&(_, m)| m).collect::<Vec<_>>().into_iter())
                        }
                        _ => Box::new(0..=a.max(b) + NAT_SLACK),
                    },
                };
                let mut mids = mids;
                mids.any(|m| first.holds(comp, a, m, src, tgt) && second.holds(comp, m, b, src, tgt))
            }
        }
    }
}

/// `g ∘ f`: `∃b (f(a,b) ∧ g(b,c))`.
pub fn compose_rel(f: &Rel, g: &Rel) -> Result<Rel, BackendError> {
    if f.target != g.source {
        return Err(BackendError::SourceTargetMismatch(format!("{:?} vs {:?}", f.target, g.source)));
    }
    if let (Some(fp), Some(gp)) = (f.finite_pairs(), g.finite_pairs()) {
        if g.target.is_finite() {
            let pairs = fp
                .iter()
                .zip(&gp)
                .map(|(fi, gi)| {
                    let mut out = BTreeSet::new();
                    for &(a, b) in fi {
                        for &(b2, c) in gi {
                            if b == b2 {
                                out.insert((a, c));
                            }
                        }
                    }
                    out
                })
                .collect();
            return Ok(Rel { source: f.source.clone(), target: g.target.clone(), graph: Graph::Pairs { pairs } });
        }
    }
    Ok(Rel {
        source: f.source.clone(),
        target: g.target.clone(),
        graph: Graph::Compose { first: Box::new(f.graph.clone()), second: Box::new(g.graph.clone()) },
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Formula {
    Top,
    Eq { left: String, right: String },
    Rel { name: String, left: String, right: String },
    And { parts: Vec<Formula> },
    Exists { var: String, ty: String, body: Box<Formula> },
}

impl Formula {
    pub fn eq(a: &str, b: &str) -> Formula {
        Formula::Eq { left: a.into(), right: b.into() }
    }

    pub fn rel(name: &str, a: &str, b: &str) -> Formula {
        Formula::Rel { name: name.into(), left: a.into(), right: b.into() }
    }

    pub fn exists(var: &str, ty: &str, body: Formula) -> Formula {
        Formula::Exists { var: var.into(), ty: ty.into(), body: Box::new(body) }
    }
}

/// Symbols a sequent may mention: object names for types, relation names.
#[derive(Clone, Debug, Default)]
pub struct Signature {
    pub objs: BTreeMap<String, Obj>,
    pub rels: BTreeMap<String, Rel>,
}

/// Sequent `hyps ⊢ concl` in context `ctx`, checked componentwise.
pub fn check_sequent(
    world: &World,
    sig: &Signature,
    ctx: &[(&str, &str)],
    hyps: &[Formula],
    concl: &Formula,
    budget: Option<&Budget>,
) -> Result<Verdict, BackendError> {
    for (_, ty) in ctx {
        if !sig.objs.contains_key(*ty) {
            return Err(BackendError::UnboundSymbol(ty.to_string()));
        }
    }
    for f in hyps.iter().chain([concl]) {
        check_symbols(f, sig, &ctx.iter().map(|(v, _)| v.to_string()).collect())?;
    }
    let mut verdict = Verdict::Proven;
    for comp in 0..world.components() {
        let carriers: Vec<&Carrier> = ctx.iter().map(|(_, ty)| &sig.objs[*ty].parts[comp]).collect();
        let all_finite = carriers.iter().all(|c| c.len().is_some());
        let assignments: Vec<Vec<u64>> = if all_finite {
            let sizes: Vec<usize> = carriers.iter().map(|c| c.len().unwrap()).collect();
            cartesian(&sizes)
        } else {
            let Some(budget) = budget else { return Err(BackendError::BudgetRequired) };
            let mut rng = budget.rng("sequent");
            (0..budget.samples)
                .map(|_| {
                    carriers
                        .iter()
                        .map(|c| match c.len() {
                            Some(n) => rng.gen_range(0..n as u64),
                            None => rng.gen_range(0..64),
                        })
                        .collect()
                })
                .collect()
        };
        let mut open = 0u64;
        for asg in &assignments {
            let env: BTreeMap<String, u64> = ctx.iter().map(|(v, _)| v.to_string()).zip(asg.iter().copied()).collect();
            let hyp = hyps.iter().try_fold(true, |acc, h| eval(h, sig, comp, &env).map(|v| acc && v));
            match hyp {
                Some(false) => continue,
                None => {
                    open += 1;
                    continue;
                }
                Some(true) => {}
            }
            match eval(concl, sig, comp, &env) {
                Some(true) => {}
                Some(false) => {
                    let mut bindings: BTreeMap<String, u64> = env.clone();
                    bindings.insert("#component".into(), comp as u64);
                    return Ok(Verdict::refuted(Counterexample::Assignment { bindings }));
                }
                None => open += 1,
            }
        }
        let v = if open > 0 {
            Verdict::unknown(format!("{open} assignments undecided within the search bound"))
        } else if all_finite {
            Verdict::Proven
        } else {
            Verdict::evidence(assignments.len() as u64)
        };
        verdict = verdict.and(v);
    }
    Ok(verdict)
}

/// Re-evaluate a sequent at a recorded assignment; true when it still fails.
pub fn replay_assignment(
    sig: &Signature,
    hyps: &[Formula],
    concl: &Formula,
    bindings: &BTreeMap<String, u64>,
) -> bool {
    let comp = bindings.get("#component").copied().unwrap_or(0) as usize;
    hyps.iter().all(|h| eval(h, sig, comp, bindings) == Some(true)) && eval(concl, sig, comp, bindings) == Some(false)
}

fn check_symbols(f: &Formula, sig: &Signature, bound: &BTreeSet<String>) -> Result<(), BackendError> {
    let need = |v: &String| if bound.contains(v) { Ok(()) } else { Err(BackendError::UnboundSymbol(v.clone())) };
    match f {
        Formula::Top => Ok(()),
        Formula::Eq { left, right } => need(left).and(need(right)),
        Formula::Rel { name, left, right } => {
            if !sig.rels.contains_key(name) {
                return Err(BackendError::UnboundSymbol(name.clone()));
            }
            need(left).and(need(right))
        }
        Formula::And { parts } => parts.iter().try_for_each(|p| check_symbols(p, sig, bound)),
        Formula::Exists { var, ty, body } => {
            if !sig.objs.contains_key(ty) {
                return Err(BackendError::UnboundSymbol(ty.clone()));
            }
            let mut b = bound.clone();
            b.insert(var.clone());
            check_symbols(body, sig, &b)
        }
    }
}

/// Three-valued: `None` when an existential over `Nat` found no witness
/// below the search bound.
fn eval(f: &Formula, sig: &Signature, comp: usize, env: &BTreeMap<String, u64>) -> Option<bool> {
    match f {
        Formula::Top => Some(true),
        Formula::Eq { left, right } => Some(env[left] == env[right]),
        Formula::Rel { name, left, right } => Some(sig.rels[name].holds(comp, env[left], env[right])),
        Formula::And { parts } => {
            let mut out = Some(true);
            for p in parts {
                match eval(p, sig, comp, env) {
                    Some(false) => return Some(false),
                    None => out = None,
                    Some(true) => {}
                }
            }
            out
        }
        Formula::Exists { var, ty, body } => {
            let carrier = &sig.objs[ty].parts[comp];
            let bound = match carrier.len() {
                Some(n) => n as u64,
                None => env.values().copied().max().unwrap_or(0) + 64,
            };
            let mut env = env.clone();
            let mut open = false;
            for x in 0..bound {
                env.insert(var.clone(), x);
                match eval(body, sig, comp, &env) {
                    Some(true) => return Some(true),
                    None => open = true,
                    Some(false) => {}
                }
            }
            if open || carrier.len().is_none() {
                None
            } else {
                Some(false)
            }
        }
    }
}

pub fn cartesian(sizes: &[usize]) -> Vec<Vec<u64>> {
    let mut out = vec![vec![]];
    for &n in sizes {
        let mut next = Vec::with_capacity(out.len() * n);
        for p in &out {
            for x in 0..n as u64 {
                let mut q = p.clone();
                q.push(x);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegFunctor {
    Identity,
    /// `Set^I → Set`, component `i`.
    Projection { i: usize },
    /// `Set → Set/I`, constant family.
    Pullback { base: Vec<String> },
    /// `Set → Set^I`, constant family.
    Diagonal { index: Vec<String> },
    /// `Set^I → Set`, product of the components.
    Product,
    /// Anything to the terminal object of `Set`.
    Terminal,
    /// `Set/J → Set/I` along `f: I → J`; fiber `i` is fiber `along[i]`.
    Reindex { along: Vec<usize>, base: Vec<String> },
    Composite { steps: Vec<RegFunctor> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Data {
    Obj(Obj),
    Rel(Rel),
}

impl RegFunctor {
    pub fn target_world(&self, source: &World) -> Result<World, BackendError> {
        match (self, source) {
            (RegFunctor::Identity, w) => Ok(w.clone()),
            (RegFunctor::Projection { i }, World::Pow { index }) if *i < index.len() => Ok(World::Set),
            (RegFunctor::Pullback { base }, World::Set) => Ok(World::Slice { base: base.clone() }),
            (RegFunctor::Diagonal { index }, World::Set) => Ok(World::Pow { index: index.clone() }),
            (RegFunctor::Product, World::Pow { .. } | World::Slice { .. }) => Ok(World::Set),
            (RegFunctor::Terminal, _) => Ok(World::Set),
            (RegFunctor::Reindex { along, base }, World::Slice { base: j })
                if along.len() == base.len() && along.iter().all(|&a| a < j.len()) =>
            {
                Ok(World::Slice { base: base.clone() })
            }
            (RegFunctor::Composite { steps }, w) => steps.iter().try_fold(w.clone(), |w, s| s.target_world(&w)),
            (f, w) => Err(BackendError::WorldMismatch(format!("{f:?} on {w:?}"))),
        }
    }

    pub fn on_obj(&self, a: &Obj) -> Result<Obj, BackendError> {
        let world = self.target_world(&a.world)?;
        Ok(match self {
            RegFunctor::Identity => a.clone(),
            RegFunctor::Projection { i } => Obj { world, parts: vec![a.parts[*i].clone()] },
            RegFunctor::Pullback { .. } | RegFunctor::Diagonal { .. } => {
                let n = world.components();
                Obj { world, parts: vec![a.parts[0].clone(); n] }
            }
            RegFunctor::Product => {
                let mut names = vec![String::new()];
                for c in &a.parts {
                    let Carrier::Finite(xs) = c else {
                        return Err(BackendError::WorldMismatch("product of an infinite carrier".into()));
                    };
                    names = names
                        .iter()
                        .flat_map(|p| xs.iter().map(move |x| if p.is_empty() { x.clone() } else { format!("{p},{x}") }))
                        .collect();
                }
                let names = names.into_iter().map(|n| format!("({n})")).collect();
                Obj { world, parts: vec![Carrier::Finite(names)] }
            }
            RegFunctor::Terminal => Obj::terminal(&World::Set),
            RegFunctor::Reindex { along, .. } => Obj { world, parts: along.iter().map(|&j| a.parts[j].clone()).collect() },
            RegFunctor::Composite { steps } => {
                return steps.iter().try_fold(a.clone(), |o, s| s.on_obj(&o));
            }
        })
    }

    pub fn on_rel(&self, f: &Rel) -> Result<Rel, BackendError> {
        let source = self.on_obj(&f.source)?;
        let target = self.on_obj(&f.target)?;
        let graph = match self {
            RegFunctor::Identity => f.graph.clone(),
            RegFunctor::Projection { i } => match &f.graph {
                Graph::Pairs { pairs } => Graph::Pairs { pairs: vec![pairs[*i].clone()] },
                g => g.clone(),
            },
            RegFunctor::Pullback { .. } | RegFunctor::Diagonal { .. } => match &f.graph {
                Graph::Pairs { pairs } => Graph::Pairs { pairs: vec![pairs[0].clone(); source.parts.len()] },
                g => g.clone(),
            },
            RegFunctor::Product => {
                let ps = f.finite_pairs().ok_or_else(|| BackendError::WorldMismatch("product of an infinite relation".into()))?;
                let ssz: Vec<usize> = (0..f.source.parts.len()).map(|i| f.source.size(i)).collect();
                let tsz: Vec<usize> = (0..f.target.parts.len()).map(|i| f.target.size(i)).collect();
                let mut out = BTreeSet::new();
                for a in cartesian(&ssz) {
                    for b in cartesian(&tsz) {
                        if a.iter().zip(&b).enumerate().all(|(i, (x, y))| ps[i].contains(&(*x, *y))) {
                            out.insert((flat(&a, &ssz), flat(&b, &tsz)));
                        }
                    }
                }
                Graph::Pairs { pairs: vec![out] }
            }
            RegFunctor::Reindex { along, .. } => match &f.graph {
                Graph::Pairs { pairs } => Graph::Pairs { pairs: along.iter().map(|&j| pairs[j].clone()).collect() },
                g => g.clone(),
            },
            RegFunctor::Terminal => {
                let inhabited = f.finite_pairs().map(|ps| ps.iter().all(|p| !p.is_empty())).unwrap_or(true);
                Graph::Pairs { pairs: vec![if inhabited { [(0, 0)].into() } else { BTreeSet::new() }] }
            }
            RegFunctor::Composite { steps } => {
                return steps.iter().try_fold(f.clone(), |r, s| s.on_rel(&r));
            }
        };
        Ok(Rel { source, target, graph })
    }

    pub fn apply(&self, x: &Data) -> Result<Data, BackendError> {
        match x {
            Data::Obj(o) => self.on_obj(o).map(Data::Obj),
            Data::Rel(r) => self.on_rel(r).map(Data::Rel),
        }
    }
}

fn flat(idx: &[u64], sizes: &[usize]) -> u64 {
    idx.iter().zip(sizes).fold(0u64, |acc, (&x, &n)| acc * n as u64 + x)
}

/// `f = m ∘ e` with `e` surjective and `m` injective. Returns the image
/// object, `e` and `m`.
pub fn image_factorization(src: &Obj, tgt: &Obj, f: &Arrow) -> (Obj, Arrow, Arrow) {
    let mut parts = Vec::new();
    let mut e = Vec::new();
    let mut m = Vec::new();
    for (i, fi) in f.iter().enumerate() {
        let img: Vec<usize> = fi.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        let Carrier::Finite(names) = &tgt.parts[i] else { panic!("finite target") };
        parts.push(Carrier::Finite(img.iter().map(|&y| names[y].clone()).collect()));
        e.push(fi.iter().map(|y| img.binary_search(y).unwrap()).collect());
        m.push(img);
    }
    let _ = src;
    (Obj { world: tgt.world.clone(), parts }, e, m)
}

pub fn compose_arrows(f: &Arrow, g: &Arrow) -> Arrow {
    f.iter().zip(g).map(|(fi, gi)| fi.iter().map(|&x| gi[x]).collect()).collect()
}

pub fn identity_arrow(a: &Obj) -> Arrow {
    (0..a.parts.len()).map(|i| (0..a.size(i)).collect()).collect()
}

pub fn is_injective(f: &Arrow) -> bool {
    f.iter().all(|fi| fi.iter().collect::<BTreeSet<_>>().len() == fi.len())
}

pub fn is_surjective(f: &Arrow, tgt: &Obj) -> bool {
    f.iter().enumerate().all(|(i, fi)| fi.iter().collect::<BTreeSet<_>>().len() == tgt.size(i))
}

/// Every componentwise function `a → b`.
pub fn all_arrows(a: &Obj, b: &Obj) -> Vec<Arrow> {
    let mut out: Vec<Arrow> = vec![vec![]];
    for i in 0..a.parts.len() {
        let fs = cartesian(&vec![b.size(i); a.size(i)]);
        out = out
            .iter()
            .flat_map(|p| {
                fs.iter().map(move |f| {
                    let mut q = p.clone();
                    q.push(f.iter().map(|&x| x as usize).collect());
                    q
                })
            })
            .collect();
    }
    out
}

impl fmt::Display for Obj {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |c: &Carrier| match c {
            Carrier::Finite(xs) => format!("{{{}}}", xs.join(",")),
            Carrier::Nat => "N".to_string(),
        };
        if self.parts.len() == 1 {
            write!(f, "{}", show(&self.parts[0]))
        } else {
            let labels = self.world.labels();
            let items: Vec<String> = self.parts.iter().zip(labels).map(|(c, l)| format!("{l}: {}", show(c))).collect();
            write!(f, "[{}]", items.join("; "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel3(pairs: &[(u64, u64)]) -> Rel {
        let a = Obj::set(&["0", "1", "2"]);
        Rel::pairs(a.clone(), a, vec![pairs.to_vec()])
    }

    #[test]
    fn compose_small_example() {
        let a = Obj::set(&["1", "2"]);
        let b = Obj::set(&["a"]);
        let c = Obj::set(&["x"]);
        let f = Rel::pairs(a.clone(), b.clone(), vec![vec![(0, 0), (1, 0)]]);
        let g = Rel::pairs(b, c.clone(), vec![vec![(0, 0)]]);
        let gf = compose_rel(&f, &g).unwrap();
        assert_eq!(gf.finite_pairs().unwrap()[0], [(0, 0), (1, 0)].into());
        assert!(compose_rel(&g, &f).is_err());
    }

    #[test]
    fn slice_composition_is_fiberwise() {
        let w = World::slice(&["p", "q"]);
        let a = Obj::family(w.clone(), vec![Carrier::finite(&["a", "b"]), Carrier::finite(&["c"])]);
        let f = Rel::pairs(a.clone(), a.clone(), vec![vec![(0, 1)], vec![(0, 0)]]);
        let g = Rel::pairs(a.clone(), a.clone(), vec![vec![(1, 0), (1, 1)], vec![]]);
        let gf = compose_rel(&f, &g).unwrap();
        for comp in 0..2 {
            let fi = RegFunctor::Identity.on_rel(&f).unwrap();
            let expect: BTreeSet<(u64, u64)> = fi.finite_pairs().unwrap()[comp]
                .iter()
                .flat_map(|&(x, y)| g.finite_pairs().unwrap()[comp].iter().filter(move |(y2, _)| *y2 == y).map(move |&(_, z)| (x, z)).collect::<Vec<_>>())
                .collect();
            assert_eq!(gf.finite_pairs().unwrap()[comp], expect);
        }
    }

    fn arb_rel() -> impl Strategy<Value = Rel> {
        proptest::collection::btree_set((0u64..3, 0u64..3), 0..9).prop_map(|s| rel3(&s.into_iter().collect::<Vec<_>>()))
    }

    proptest! {
        #[test]
        fn composition_is_associative(f in arb_rel(), g in arb_rel(), h in arb_rel()) {
            let l = compose_rel(&compose_rel(&f, &g).unwrap(), &h).unwrap();
            let r = compose_rel(&f, &compose_rel(&g, &h).unwrap()).unwrap();
            prop_assert!(l.graph_eq(&r));
        }

        #[test]
        fn diagonal_is_a_unit(f in arb_rel()) {
            let d = Rel::diagonal(&f.source);
            prop_assert!(compose_rel(&d, &f).unwrap().graph_eq(&f));
            prop_assert!(compose_rel(&f, &d).unwrap().graph_eq(&f));
        }

        #[test]
        fn functors_preserve_composition(f in arb_rel(), g in arb_rel()) {
            let funs = [
                RegFunctor::Identity,
                RegFunctor::Pullback { base: vec!["p".into(), "q".into()] },
                RegFunctor::Composite { steps: vec![RegFunctor::Diagonal { index: vec!["0".into(), "1".into()] }, RegFunctor::Product] },
                RegFunctor::Composite { steps: vec![RegFunctor::Diagonal { index: vec!["0".into(), "1".into()] }, RegFunctor::Projection { i: 1 }] },
            ];
            for fun in funs {
                let lhs = fun.on_rel(&compose_rel(&f, &g).unwrap()).unwrap();
                let rhs = compose_rel(&fun.on_rel(&f).unwrap(), &fun.on_rel(&g).unwrap()).unwrap();
                prop_assert!(lhs.graph_eq(&rhs), "{:?}", fun);
                prop_assert!(fun.on_rel(&Rel::diagonal(&f.source)).unwrap().graph_eq(&Rel::diagonal(&fun.on_obj(&f.source).unwrap())));
            }
        }

        #[test]
        fn image_factorization_recomposes(f in proptest::collection::vec(0usize..4, 1..6)) {
            let src = Obj { world: World::Set, parts: vec![Carrier::Finite((0..f.len()).map(|i| i.to_string()).collect())] };
            let tgt = Obj::set(&["a", "b", "c", "d"]);
            let f = vec![f];
            let (im, e, m) = image_factorization(&src, &tgt, &f);
            prop_assert_eq!(compose_arrows(&e, &m), f);
            prop_assert!(is_injective(&m));
            prop_assert!(is_surjective(&e, &im));
        }

        #[test]
        fn hypotheses_are_monotone(f in arb_rel(), g in arb_rel()) {
            let mut sig = Signature::default();
            sig.objs.insert("A".into(), Obj::set(&["0", "1", "2"]));
            sig.rels.insert("F".into(), f);
            sig.rels.insert("G".into(), g);
            let ctx = [("x", "A"), ("y", "A")];
            let concl = Formula::rel("G", "x", "y");
            let one = check_sequent(&World::Set, &sig, &ctx, &[Formula::rel("F", "x", "y")], &concl, None).unwrap();
            let two = check_sequent(&World::Set, &sig, &ctx, &[Formula::rel("F", "x", "y"), Formula::rel("G", "y", "x")], &concl, None).unwrap();
            if one.is_proven() {
                prop_assert!(two.is_proven());
            }
        }
    }

    #[test]
    fn trivial_sequents() {
        let mut sig = Signature::default();
        sig.objs.insert("A".into(), Obj::set(&["0", "1"]));
        sig.rels.insert("E".into(), Rel::pairs(Obj::set(&["0", "1"]), Obj::set(&["0", "1"]), vec![vec![(0, 1)]]));
        let v = check_sequent(&World::Set, &sig, &[("x", "A")], &[], &Formula::eq("x", "x"), None).unwrap();
        assert_eq!(v, Verdict::Proven);
        let v = check_sequent(
            &World::Set,
            &sig,
            &[("x", "A"), ("a", "A")],
            &[Formula::rel("E", "x", "a")],
            &Formula::exists("b", "A", Formula::rel("E", "x", "b")),
            None,
        )
        .unwrap();
        assert_eq!(v, Verdict::Proven);
        let v = check_sequent(&World::Set, &sig, &[("x", "A"), ("y", "A")], &[], &Formula::rel("E", "x", "y"), None).unwrap();
        match v {
            Verdict::Refuted { counterexample: Counterexample::Assignment { bindings } } => {
                assert!(replay_assignment(&sig, &[], &Formula::rel("E", "x", "y"), &bindings));
            }
            v => panic!("{v}"),
        }
    }

    #[test]
    fn infinite_carriers_need_a_budget_and_give_evidence() {
        let mut sig = Signature::default();
        sig.objs.insert("N".into(), Obj::nat());
        sig.rels.insert("lt".into(), Rel { source: Obj::nat(), target: Obj::nat(), graph: Graph::Nat { rel: NatRel::Lt } });
        let ctx = [("x", "N")];
        let concl = Formula::exists("y", "N", Formula::rel("lt", "x", "y"));
        assert_eq!(check_sequent(&World::Set, &sig, &ctx, &[], &concl, None), Err(BackendError::BudgetRequired));
        let v = check_sequent(&World::Set, &sig, &ctx, &[], &concl, Some(&Budget::default())).unwrap();
        assert!(matches!(v, Verdict::Evidence { .. }), "{v}");
    }

    #[test]
    fn sequents_transport_along_projection() {
        let w = World::pow(2);
        let a = Obj::family(w.clone(), vec![Carrier::finite(&["a", "b"]), Carrier::finite(&["c"])]);
        let f = Rel::pairs(a.clone(), a.clone(), vec![vec![(0, 0), (1, 1)], vec![(0, 0)]]);
        let mut sig = Signature::default();
        sig.objs.insert("A".into(), a.clone());
        sig.rels.insert("F".into(), f.clone());
        let ctx = [("x", "A")];
        let concl = Formula::exists("y", "A", Formula::rel("F", "x", "y"));
        assert!(check_sequent(&w, &sig, &ctx, &[], &concl, None).unwrap().is_proven());
        for i in 0..2 {
            let p = RegFunctor::Projection { i };
            let mut s2 = Signature::default();
            s2.objs.insert("A".into(), p.on_obj(&a).unwrap());
            s2.rels.insert("F".into(), p.on_rel(&f).unwrap());
            assert!(check_sequent(&World::Set, &s2, &ctx, &[], &concl, None).unwrap().is_proven());
        }
    }

    #[test]
    fn pullback_matches_explicit_product_with_base() {
        let a = Obj::set(&["a", "b", "c"]);
        let pulled = RegFunctor::Pullback { base: vec!["0".into(), "1".into()] }.on_obj(&a).unwrap();
        // I × A with its first projection, regrouped by fiber
        let explicit: Vec<Vec<(usize, usize)>> = (0..2).map(|i| (0..3).map(|x| (i, x)).collect()).collect();
        for (i, fiber) in explicit.iter().enumerate() {
            assert_eq!(pulled.size(i), fiber.len());
        }
        assert_eq!(RegFunctor::Projection { i: 0 }.on_obj(&Obj::family(World::pow(2), vec![Carrier::finite(&["x"]), Carrier::finite(&["y", "z"])])).unwrap(), Obj::set(&["x"]));
    }
}
