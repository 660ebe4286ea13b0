//! Applicative terms, bracket abstraction and definedness unfolding.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pca::kit::{slot_elem, Slot};
use crate::pca::rset::RSet;
use crate::pca::sk::{Gv, Sk};
use crate::pca::{string_serde, AppOutcome, Backend, Budget, Elem};
use crate::verdict::{Counterexample, Verdict};

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    App(Box<Term>, Box<Term>),
    Const(Konst),
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Konst {
    Slot(Slot),
    Elem(Elem),
    Set(RSet),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TermError {
    #[error("unbound variable {0}")]
    UnboundVariable(String),
    #[error("constant {0} is not a single element")]
    NotElement(String),
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn app(l: Term, r: Term) -> Term {
        Term::App(Box::new(l), Box::new(r))
    }

    pub fn apps(head: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(head, Term::app)
    }

    pub fn slot(s: Slot) -> Term {
        Term::Const(Konst::Slot(s))
    }

    pub fn k() -> Term {
        Term::slot(Slot::K)
    }

    pub fn s() -> Term {
        Term::slot(Slot::S)
    }

    pub fn elem(e: Elem) -> Term {
        Term::Const(Konst::Elem(e))
    }

    pub fn set(u: RSet) -> Term {
        Term::Const(Konst::Set(u))
    }

    /// Positional variable used in certificate terms.
    pub fn x(i: usize) -> Term {
        Term::Var(format!("x{i}"))
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::App(l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            Term::Const(_) => {}
        }
    }

    pub fn occurs(&self, x: &str) -> bool {
        match self {
            Term::Var(v) => v == x,
            Term::App(l, r) => l.occurs(x) || r.occurs(x),
            Term::Const(_) => false,
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            Term::App(l, r) => 1 + l.size() + r.size(),
            _ => 1,
        }
    }

    pub fn app_count(&self) -> usize {
        match self {
            Term::App(l, r) => 1 + l.app_count() + r.app_count(),
            _ => 0,
        }
    }

    pub fn subst(&self, f: &impl Fn(&str) -> Option<Term>) -> Term {
        match self {
            Term::Var(v) => f(v).unwrap_or_else(|| self.clone()),
            Term::App(l, r) => Term::app(l.subst(f), r.subst(f)),
            Term::Const(_) => self.clone(),
        }
    }

    /// Rename `x{i}` to `x{i+by}`.
    pub fn shift_positional(&self, by: usize) -> Term {
        self.subst(&|v| v.strip_prefix('x').and_then(|n| n.parse::<usize>().ok()).map(|i| Term::x(i + by)))
    }

    pub fn uses_slots_only(&self) -> bool {
        match self {
            Term::App(l, r) => l.uses_slots_only() && r.uses_slots_only(),
            Term::Const(Konst::Slot(_)) => true,
            _ => false,
        }
    }
}

/// The three-clause abstraction: `x ↦ s k k`, `t ↦ k t` when `x` does not
/// occur, `l r ↦ s (λx.l) (λx.r)`.
pub fn bracket_abstract(x: &str, t: &Term) -> Term {
    match t {
        Term::Var(v) if v == x => Term::apps(Term::s(), [Term::k(), Term::k()]),
        t if !t.occurs(x) => Term::app(Term::k(), t.clone()),
        Term::App(l, r) => Term::apps(Term::s(), [bracket_abstract(x, l), bracket_abstract(x, r)]),
        _ => unreachable!(),
    }
}

/// `λx1 ... xn. t`, abstracting the last variable first.
pub fn abstract_all(vars: &[&str], t: &Term) -> Term {
    vars.iter().rev().fold(t.clone(), |acc, x| bracket_abstract(x, &acc))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Operand {
    Input(String),
    Const(Term),
    Tmp(usize),
}

/// `D(l0,r0) ∧ D(l1,r1) ∧ ...`, one conjunct per application node, in
/// evaluation order. `Tmp(j)` names the value of step `j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefinednessFormula {
    pub steps: Vec<(Operand, Operand)>,
    pub result: Operand,
}

pub fn unfold_definedness(t: &Term, bound: &BTreeSet<String>) -> Result<DefinednessFormula, TermError> {
    fn go(t: &Term, bound: &BTreeSet<String>, steps: &mut Vec<(Operand, Operand)>) -> Result<Operand, TermError> {
        match t {
            Term::Var(v) if bound.contains(v) => Ok(Operand::Input(v.clone())),
            Term::Var(v) => Err(TermError::UnboundVariable(v.clone())),
            Term::Const(_) => Ok(Operand::Const(t.clone())),
            Term::App(l, r) => {
                let a = go(l, bound, steps)?;
                let b = go(r, bound, steps)?;
                steps.push((a, b));
                Ok(Operand::Tmp(steps.len() - 1))
            }
        }
    }
    let mut steps = Vec::new();
    let result = go(t, bound, &mut steps)?;
    Ok(DefinednessFormula { steps, result })
}

impl fmt::Display for DefinednessFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |o: &Operand| match o {
            Operand::Input(v) => v.clone(),
            Operand::Const(t) => t.to_string(),
            Operand::Tmp(j) => format!("t{j}"),
        };
        if self.steps.is_empty() {
            return write!(f, "T");
        }
        for (j, (a, b)) in self.steps.iter().enumerate() {
            if j > 0 {
                write!(f, " & ")?;
            }
            write!(f, "D({}, {})", show(a), show(b))?;
        }
        Ok(())
    }
}

pub fn konst_elem(b: &Backend, k: &Konst) -> Result<Elem, TermError> {
    match k {
        Konst::Slot(s) => Ok(slot_elem(b, *s)),
        Konst::Elem(e) => Ok(e.clone()),
        Konst::Set(u) => match u.finite() {
            Some(es) if es.len() == 1 => Ok(es[0].clone()),
            _ => Err(TermError::NotElement(u.to_string())),
        },
    }
}

pub fn konst_set(b: &Backend, k: &Konst) -> RSet {
    match k {
        Konst::Slot(s) => RSet::single(slot_elem(b, *s)),
        Konst::Elem(e) => RSet::single(e.clone()),
        Konst::Set(u) => u.clone(),
    }
}

/// Evaluate by running the definedness formula left to right.
pub fn eval_term(b: &Backend, t: &Term, val: &BTreeMap<String, Elem>, fuel: u64) -> Result<AppOutcome, TermError> {
    let bound = val.keys().cloned().collect();
    let form = unfold_definedness(t, &bound)?;
    let mut tmps: Vec<Elem> = Vec::with_capacity(form.steps.len());
    let get = |o: &Operand, tmps: &Vec<Elem>| -> Result<Elem, TermError> {
        match o {
            Operand::Input(v) => Ok(val[v].clone()),
            Operand::Tmp(j) => Ok(tmps[*j].clone()),
            Operand::Const(Term::Const(k)) => konst_elem(b, k),
            Operand::Const(t) => Err(TermError::NotElement(t.to_string())),
        }
    };
    for (l, r) in &form.steps {
        let (x, y) = (get(l, &tmps)?, get(r, &tmps)?);
        match b.apply(&x, &y, fuel) {
            AppOutcome::Value(v) => tmps.push(v),
            o => return Ok(o),
        }
    }
    Ok(AppOutcome::Value(get(&form.result, &tmps)?))
}

pub fn eval_closed(b: &Backend, t: &Term, fuel: u64) -> Result<AppOutcome, TermError> {
    eval_term(b, t, &BTreeMap::new(), fuel)
}

/// A closed SK term with generic variables, without reducing. Only for SK
/// backends.
fn to_sk(b: &Backend, t: &Term, env: &BTreeMap<String, Sk>) -> Option<Sk> {
    match t {
        Term::Var(v) => env.get(v).cloned(),
        Term::App(l, r) => Some(Sk::app(to_sk(b, l, env)?, to_sk(b, r, env)?)),
        Term::Const(k) => match konst_elem(b, k).ok()? {
            Elem::Sk(s) => Some(s),
            _ => None,
        },
    }
}

/// Set-level value of a term whose variables denote realizer sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetEval {
    pub defined: Verdict,
    pub image: Option<RSet>,
}

pub fn eval_set<R: Rng>(
    b: &Backend,
    t: &Term,
    env: &BTreeMap<String, RSet>,
    budget: &Budget,
    rng: &mut R,
) -> Result<SetEval, TermError> {
    match set_exact(b, t, env, budget, rng)? {
        Some((defined, image)) => Ok(SetEval { defined, image: Some(image) }),
        None => Ok(SetEval { defined: set_sampled(b, t, env, None, budget, rng)?, image: None }),
    }
}

/// `t(U⃗)↓` and `t(U⃗) ⊆ W`.
pub fn term_into<R: Rng>(
    b: &Backend,
    t: &Term,
    env: &BTreeMap<String, RSet>,
    w: &RSet,
    budget: &Budget,
    rng: &mut R,
) -> Result<Verdict, TermError> {
    if let Term::App(l, r) = t {
        if let (Some((dl, il)), Some((dr, ir))) = (set_exact(b, l, env, budget, rng)?, set_exact(b, r, env, budget, rng)?) {
            return Ok(dl.and(dr).and(il.maps_into(&ir, w, b, budget, rng)));
        }
    } else if let Some((d, img)) = set_exact(b, t, env, budget, rng)? {
        return Ok(d.and(img.subset(w, b, budget, rng)));
    }
    set_sampled(b, t, env, Some(w), budget, rng)
}

type Exact = Option<(Verdict, RSet)>;

fn set_exact<R: Rng>(b: &Backend, t: &Term, env: &BTreeMap<String, RSet>, budget: &Budget, rng: &mut R) -> Result<Exact, TermError> {
    match t {
        Term::Var(v) => env
            .get(v)
            .map(|u| Some((Verdict::Proven, u.clone())))
            .ok_or_else(|| TermError::UnboundVariable(v.clone())),
        Term::Const(k) => Ok(Some((Verdict::Proven, konst_set(b, k)))),
        Term::App(l, r) => {
            let (Some((dl, ul)), Some((dr, ur))) = (set_exact(b, l, env, budget, rng)?, set_exact(b, r, env, budget, rng)?) else {
                return Ok(None);
            };
            let out = ul.apply(&ur, b, budget, rng);
            if out.defined.is_refuted() {
                return Ok(Some((out.defined, ul)));
            }
            Ok(out.image.map(|img| (dl.and(dr).and(out.defined), img)))
        }
    }
}

/// Each leaf occurrence draws its own element, as in set application.
fn set_sampled<R: Rng>(
    b: &Backend,
    t: &Term,
    env: &BTreeMap<String, RSet>,
    w: Option<&RSet>,
    budget: &Budget,
    rng: &mut R,
) -> Result<Verdict, TermError> {
    fn pick<R: Rng>(b: &Backend, t: &Term, env: &BTreeMap<String, RSet>, rng: &mut R) -> Result<Term, TermError> {
        Ok(match t {
            Term::Var(v) => Term::elem(env.get(v).ok_or_else(|| TermError::UnboundVariable(v.clone()))?.sample(b, rng)),
            Term::Const(Konst::Set(u)) => Term::elem(u.sample(b, rng)),
            Term::Const(_) => t.clone(),
            Term::App(l, r) => Term::app(pick(b, l, env, rng)?, pick(b, r, env, rng)?),
        })
    }
    let mut verdict = Verdict::Proven;
    for _ in 0..budget.samples {
        let inst = pick(b, t, env, rng)?;
        let v = match eval_closed(b, &inst, budget.fuel)? {
            AppOutcome::Value(v) => match w {
                Some(w) if !w.member(b, &v) => {
                    Verdict::refuted(Counterexample::NotIn { term: inst, target: w.clone() })
                }
                _ => Verdict::Proven,
            },
            AppOutcome::UndefinedCertified => Verdict::refuted(Counterexample::Undefined { term: inst }),
            AppOutcome::Unknown(f) => Verdict::unknown(format!("fuel {f} exhausted on {inst}")),
        };
        verdict = verdict.and(v);
        if verdict.is_refuted() {
            return Ok(verdict);
        }
    }
    Ok(verdict.weaken(budget.samples as u64))
}

/// Does every element of `u` realize `λ vars. body`?
///
/// On SK carriers the check is first attempted with generic arguments: a
/// prefix `r a1 .. a(n-1)` whose symbolic normal form has no variable in head
/// position is defined for every instance, and if `r a⃗` and `body(a⃗)` reach
/// the same normal form they agree wherever the body is defined. Otherwise
/// arguments are sampled.
pub fn realizes<R: Rng>(
    b: &Backend,
    u: &RSet,
    vars: &[&str],
    body: &Term,
    budget: &Budget,
    rng: &mut R,
) -> Result<Verdict, TermError> {
    assert!(!vars.is_empty());
    let bound: BTreeSet<String> = vars.iter().map(|s| s.to_string()).collect();
    if let Some(v) = body.free_vars().difference(&bound).next() {
        return Err(TermError::UnboundVariable(v.clone()));
    }
    match b {
        Backend::Trivial => return Ok(Verdict::Proven),
        Backend::Product { parts } => {
            let mut out = Verdict::Proven;
            for (i, p) in parts.iter().enumerate() {
                let ui = u.component(i, b);
                let bi = project_consts(body, b, i);
                out = out.and(realizes(p, &ui, vars, &bi, budget, rng)?);
            }
            return Ok(out);
        }
        _ => {}
    }
    let mut verdict = Verdict::Proven;
    let cases = match b {
        Backend::Sk { .. } => u.cases(b),
        _ => None,
    };
    let mut todo: Vec<Option<Elem>> = match cases {
        Some(cs) => cs.into_iter().map(Some).collect(),
        None => vec![None],
    };
    for case in todo.drain(..) {
        if let Some(Elem::Sk(r)) = &case {
            if symbolic_realizes(b, r, vars, body, budget.fuel) {
                continue;
            }
        }
        verdict = verdict.and(sampled_realizes(b, u, case.as_ref(), vars, body, budget, rng)?);
        if verdict.is_refuted() {
            break;
        }
    }
    Ok(verdict)
}

fn project_consts(t: &Term, b: &Backend, i: usize) -> Term {
    match t {
        Term::App(l, r) => Term::app(project_consts(l, b, i), project_consts(r, b, i)),
        Term::Const(k) => match konst_elem(b, k) {
            Ok(Elem::Tuple(es)) => Term::elem(es[i].clone()),
            _ => t.clone(),
        },
        t => t.clone(),
    }
}

fn symbolic_realizes(b: &Backend, r: &Sk, vars: &[&str], body: &Term, fuel: u64) -> bool {
    let base = r.max_var().map_or(0, |m| m + 1);
    let pure = matches!(b, Backend::Sk { atoms: 0 });
    let args: Vec<Sk> = (0..vars.len()).map(|i| Sk::Var(Gv { id: base + i as u32, pure })).collect();
    let mut cur = r.clone();
    for a in &args[..args.len() - 1] {
        let mut f = fuel;
        match Sk::app(cur, a.clone()).normalize(&mut f) {
            Ok(t) if !t.has_head_var_app() => cur = t,
            _ => return false,
        }
    }
    let env: BTreeMap<String, Sk> = vars.iter().map(|v| v.to_string()).zip(args.iter().cloned()).collect();
    let Some(rhs) = to_sk(b, body, &env) else { return false };
    let lhs = Sk::app(cur, args.last().unwrap().clone());
    let (mut f1, mut f2) = (fuel, fuel);
    matches!((lhs.normalize(&mut f1), rhs.normalize(&mut f2)), (Ok(x), Ok(y)) if x == y)
}

fn sampled_realizes<R: Rng>(
    b: &Backend,
    u: &RSet,
    case: Option<&Elem>,
    vars: &[&str],
    body: &Term,
    budget: &Budget,
    rng: &mut R,
) -> Result<Verdict, TermError> {
    let mut verdict = Verdict::Proven;
    let mut checked = 0u64;
    for _ in 0..budget.samples {
        let r = match case {
            Some(g) => crate::pca::rset::instantiate(g, b, rng),
            None => u.sample(b, rng),
        };
        let args: Vec<Elem> = vars.iter().map(|_| b.random_elem(rng)).collect();
        let lit = |e: &Elem| Term::elem(e.clone());
        let mut cur = r.clone();
        let mut open = false;
        for (j, a) in args.iter().enumerate().take(args.len() - 1) {
            match b.apply(&cur, a, budget.fuel) {
                AppOutcome::Value(v) => cur = v,
                AppOutcome::Unknown(_) => {
                    open = true;
                    break;
                }
                AppOutcome::UndefinedCertified => {
                    let term = Term::apps(lit(&r), args[..=j].iter().map(lit));
                    return Ok(Verdict::refuted(Counterexample::Undefined { term }));
                }
            }
        }
        if open {
            verdict = verdict.and(Verdict::unknown(format!("fuel {} exhausted on a prefix", budget.fuel)));
            continue;
        }
        let val: BTreeMap<String, Elem> = vars.iter().map(|v| v.to_string()).zip(args.iter().cloned()).collect();
        let want = match eval_term(b, body, &val, budget.fuel)? {
            AppOutcome::Value(v) => v,
            _ => continue,
        };
        let lhs_term = Term::apps(lit(&r), args.iter().map(lit));
        match b.apply(&cur, args.last().unwrap(), budget.fuel) {
            AppOutcome::Value(v) if v == want => checked += 1,
            AppOutcome::Unknown(_) => {
                verdict = verdict.and(Verdict::unknown(format!("fuel {} exhausted on {lhs_term}", budget.fuel)))
            }
            AppOutcome::Value(v) if matches!(b, Backend::Graph { .. }) && graph_below(&v, &want) => {
                verdict = verdict.and(Verdict::unknown("graph level truncates the combinator"))
            }
            _ => {
                let rhs = body.subst(&|v| val.get(v).map(|e| Term::elem(e.clone())));
                return Ok(Verdict::refuted(Counterexample::Mismatch { lhs: lhs_term, rhs }));
            }
        }
    }
    Ok(verdict.weaken(checked))
}

fn graph_below(got: &Elem, want: &Elem) -> bool {
    match (got, want) {
        (Elem::Graph(g), Elem::Graph(w)) => g.iter().all(|x| w.binary_search(x).is_ok()),
        _ => false,
    }
}

impl Konst {
    fn write(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Konst::Slot(Slot::K) => write!(f, "k"),
            Konst::Slot(Slot::S) => write!(f, "s"),
            Konst::Slot(s) => write!(f, "#{}", s.name()),
            Konst::Elem(e) => write!(f, "<{e}>"),
            Konst::Set(u) => write!(f, "[|{u}|]"),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Const(k) => k.write(f),
            Term::App(l, r) => {
                write!(f, "{l} ")?;
                if matches!(**r, Term::App(..)) {
                    write!(f, "({r})")
                } else {
                    write!(f, "{r}")
                }
            }
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, TermError> {
        Err(TermError::Parse { pos: self.pos, msg: msg.into() })
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.rest().chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn ident(&mut self) -> Option<String> {
        let r = self.rest();
        let mut end = 0;
        for (i, c) in r.char_indices() {
            let ok = if i == 0 { c.is_ascii_alphabetic() || c == '_' } else { c.is_ascii_alphanumeric() || c == '_' || c == '\'' };
            if !ok {
                break;
            }
            end = i + c.len_utf8();
        }
        if end == 0 {
            return None;
        }
        self.pos += end;
        Some(r[..end].to_string())
    }

    /// Juxtaposition sequence up to `)` or end of input.
    fn seq(&mut self) -> Result<Term, TermError> {
        let mut acc: Option<Term> = None;
        loop {
            self.skip_ws();
            let r = self.rest();
            let Some(c) = r.chars().next() else { break };
            let t = match c {
                ')' => break,
                '(' => {
                    self.pos += 1;
                    let t = self.seq()?;
                    self.skip_ws();
                    if !self.rest().starts_with(')') {
                        return self.err("expected ')'");
                    }
                    self.pos += 1;
                    t
                }
                '\\' | 'λ' => {
                    self.pos += c.len_utf8();
                    let mut vars = Vec::new();
                    loop {
                        self.skip_ws();
                        if self.rest().starts_with('.') {
                            self.pos += 1;
                            break;
                        }
                        match self.ident() {
                            Some(v) if v != "k" && v != "s" => vars.push(v),
                            _ => return self.err("expected a variable or '.' in abstraction"),
                        }
                    }
                    if vars.is_empty() {
                        return self.err("abstraction binds no variables");
                    }
                    let body = self.seq()?;
                    let names: Vec<&str> = vars.iter().map(String::as_str).collect();
                    abstract_all(&names, &body)
                }
                '#' => {
                    self.pos += 1;
                    let name = self.ident().unwrap_or_default();
                    match Slot::from_name(&name) {
                        Some(s) => Term::slot(s),
                        None => return self.err(format!("unknown kit slot #{name}")),
                    }
                }
                '<' => {
                    let Some(end) = r.find('>') else { return self.err("unterminated element literal") };
                    let e = r[1..end].parse::<Elem>().map_err(|m| TermError::Parse { pos: self.pos, msg: m })?;
                    self.pos += end + 1;
                    Term::elem(e)
                }
                '[' if r.starts_with("[|") => {
                    let Some(end) = find_set_end(r) else { return self.err("unterminated set literal") };
                    let u = r[2..end].parse::<RSet>().map_err(|m| TermError::Parse { pos: self.pos, msg: m })?;
                    self.pos += end + 2;
                    Term::set(u)
                }
                _ => match self.ident() {
                    Some(v) if v == "k" => Term::k(),
                    Some(v) if v == "s" => Term::s(),
                    Some(v) => Term::Var(v),
                    None => return self.err(format!("unexpected character {c:?}")),
                },
            };
            acc = Some(match acc {
                None => t,
                Some(l) => Term::app(l, t),
            });
        }
        match acc {
            Some(t) => Ok(t),
            None => self.err("empty term"),
        }
    }
}

fn find_set_end(r: &str) -> Option<usize> {
    let bytes = r.as_bytes();
    let mut depth = 0i32;
    let mut i = 2;
    while i + 1 < bytes.len() {
        match bytes[i] {
            b'|' if depth == 0 && bytes[i + 1] == b']' => return Some(i),
            b'(' | b'[' | b'{' => depth += 1,
            b')' | b']' | b'}' => depth -= 1,
            _ => {}
        }
        i += 1;
    }
    None
}

pub fn parse_term(src: &str) -> Result<Term, TermError> {
    let mut p = Parser { src, pos: 0 };
    let t = p.seq()?;
    p.skip_ws();
    if p.pos != src.len() {
        return p.err("unbalanced ')'");
    }
    Ok(t)
}

impl FromStr for Term {
    type Err = TermError;

    fn from_str(s: &str) -> Result<Term, TermError> {
        parse_term(s)
    }
}

string_serde!(Term);

// ------------------------------------------------------ compiler soundness

/// Every term with `1..=max_leaves` leaves, each leaf one of at most
/// `max_vars` variables named `x0..` in order of first occurrence, or, with
/// `constants`, one of `k`, `s`.
pub fn enumerate_terms(max_leaves: usize, max_vars: usize, constants: bool) -> Vec<Term> {
    fn labels(n: usize, lo: i32, max_vars: usize, used: usize, cur: &mut Vec<i32>, out: &mut Vec<Vec<i32>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for l in lo..=used.min(max_vars - 1) as i32 {
            cur.push(l);
            let used = if l >= 0 { used.max(l as usize + 1) } else { used };
            labels(n, lo, max_vars, used, cur, out);
            cur.pop();
        }
    }
    fn fill(t: &Term, ls: &[i32], at: &mut usize) -> Term {
        match t {
            Term::App(l, r) => {
                let l = fill(l, ls, at);
                Term::app(l, fill(r, ls, at))
            }
            _ => {
                let l = ls[*at];
                *at += 1;
                match l {
                    -2 => Term::k(),
                    -1 => Term::s(),
                    i => Term::x(i as usize),
                }
            }
        }
    }
    let mut out = Vec::new();
    for n in 1..=max_leaves {
        let mut ls = Vec::new();
        labels(n, if constants { -2 } else { 0 }, max_vars, 0, &mut Vec::new(), &mut ls);
        for shape in crate::pca::filter::shapes(n) {
            for l in &ls {
                out.push(fill(&shape, l, &mut 0));
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SoundnessReport {
    pub terms: u64,
    pub checks: u64,
    pub unknown: u64,
    pub verdict: Verdict,
}

/// For every term `t` with free variables `x0..x(m-1)`, the compiled
/// `λx⃗. t` is checked on `valuations` seeded argument vectors: every proper
/// prefix application is defined, and where `t` is defined the full
/// application agrees with it. Closed terms are skipped.
pub fn compiler_soundness(b: &Backend, terms: &[Term], valuations: usize, budget: &Budget) -> SoundnessReport {
    let terms: Vec<&Term> = terms.iter().filter(|t| !t.free_vars().is_empty()).collect();
    let max_vars = terms.iter().map(|t| t.free_vars().len()).max().unwrap_or(0);
    let mut rng = budget.rng("compiler-soundness");
    let vals: Vec<Vec<Elem>> = (0..valuations).map(|_| (0..max_vars).map(|_| b.random_elem(&mut rng)).collect()).collect();
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(terms.len().max(1));
    let chunk = terms.len().div_ceil(threads).max(1);
    let parts: Vec<(u64, u64, Option<Counterexample>)> = std::thread::scope(|sc| {
        let hs: Vec<_> = terms.chunks(chunk).map(|ts| sc.spawn(|| soundness_chunk(b, ts, &vals, budget))).collect();
        hs.into_iter().map(|h| h.join().expect("soundness worker")).collect()
    });
    let mut report = SoundnessReport { terms: terms.len() as u64, checks: 0, unknown: 0, verdict: Verdict::Proven };
    for (checks, unknown, cx) in parts {
        report.checks += checks;
        report.unknown += unknown;
        if let Some(cx) = cx {
            report.verdict = Verdict::refuted(cx);
            return report;
        }
    }
    report.verdict = match b {
        Backend::Trivial => Verdict::Proven,
        _ => Verdict::evidence(report.checks),
    };
    report
}

/// Checks, open checks, and the first failure in term order.
fn soundness_chunk(b: &Backend, terms: &[&Term], vals: &[Vec<Elem>], budget: &Budget) -> (u64, u64, Option<Counterexample>) {
    let lit = |e: &Elem| Term::elem(e.clone());
    let (mut checks, mut unknown) = (0, 0);
    for &t in terms {
        let m = t.free_vars().len();
        let names: Vec<String> = (0..m).map(|i| format!("x{i}")).collect();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let c = abstract_all(&refs, t);
        let Ok(AppOutcome::Value(ce)) = eval_closed(b, &c, budget.fuel) else {
            return (checks, unknown, Some(Counterexample::Undefined { term: c }));
        };
        for args in vals {
            checks += 1;
            let mut open = false;
            for j in 1..m {
                let refs: Vec<&Elem> = args[..j].iter().collect();
                match b.apply_chain(&ce, &refs, budget.fuel) {
                    AppOutcome::Value(_) => {}
                    AppOutcome::Unknown(_) => open = true,
                    AppOutcome::UndefinedCertified => {
                        let term = Term::apps(lit(&ce), args[..j].iter().map(lit));
                        return (checks, unknown, Some(Counterexample::Undefined { term }));
                    }
                }
            }
            let val: BTreeMap<String, Elem> = names.iter().cloned().zip(args.iter().cloned()).collect();
            let refs: Vec<&Elem> = args[..m].iter().collect();
            match eval_term(b, t, &val, budget.fuel) {
                Ok(AppOutcome::Value(v)) => match b.apply_chain(&ce, &refs, budget.fuel) {
                    AppOutcome::Value(w) if w == v => {}
                    AppOutcome::Unknown(_) => open = true,
                    _ => {
                        let rhs = t.subst(&|x| names.iter().position(|n| n == x).map(|i| lit(&args[i])));
                        let lhs = Term::apps(lit(&ce), args[..m].iter().map(lit));
                        return (checks, unknown, Some(Counterexample::Mismatch { lhs, rhs }));
                    }
                },
                Ok(AppOutcome::Unknown(_)) => open = true,
                _ => {}
            }
            if open {
                unknown += 1;
            }
        }
    }
    (checks, unknown, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pca::sk::random_nf;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn sk(b: &Backend, t: &Term) -> Sk {
        match eval_closed(b, t, 10_000).unwrap() {
            AppOutcome::Value(Elem::Sk(s)) => s,
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn identity_compiles_to_skk() {
        assert_eq!(t("\\x. x").to_string(), "s k k");
        assert_eq!(t("\\x. y").to_string(), "k y");
    }

    #[test]
    fn left_associative_printing() {
        for src in ["x y z", "x (y z)", "k <S K> [|K | S ?0|]", "#p0 (#p a b)"] {
            assert_eq!(t(src).to_string(), src);
        }
        assert_eq!(t("((x y) z)").to_string(), "x y z");
    }

    #[test]
    fn pairing_term_permutes() {
        let b = Backend::sk(0);
        let p = t("\\x y z. z x y");
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let [a, bb, c] = [0, 1, 2].map(|_| Elem::Sk(random_nf(&mut rng, 4, 0)));
            let lhs = Term::apps(p.clone(), [Term::elem(a.clone()), Term::elem(bb.clone()), Term::elem(c.clone())]);
            let rhs = Term::apps(Term::elem(c), [Term::elem(a), Term::elem(bb)]);
            assert_eq!(eval_closed(&b, &lhs, 10_000).unwrap(), eval_closed(&b, &rhs, 10_000).unwrap());
        }
        let _ = sk(&b, &p);
    }

    #[test]
    fn unfolding_orders_steps() {
        let vars: BTreeSet<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        let f = unfold_definedness(&t("x y z"), &vars).unwrap();
        assert_eq!(f.to_string(), "D(x, y) & D(t0, z)");
        let g = unfold_definedness(&t("x (y z)"), &vars).unwrap();
        assert_eq!(g.to_string(), "D(y, z) & D(x, t0)");
        let h = unfold_definedness(&t("x"), &vars).unwrap();
        assert!(h.steps.is_empty());
        assert_eq!(unfold_definedness(&t("w"), &vars), Err(TermError::UnboundVariable("w".into())));
    }

    #[test]
    fn k_realizes_first_projection_only() {
        let b = Backend::sk(0);
        let budget = Budget::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let k = RSet::sk(Sk::K);
        assert_eq!(realizes(&b, &k, &["x", "y"], &t("x"), &budget, &mut rng).unwrap(), Verdict::Proven);
        let v = realizes(&b, &k, &["x", "y"], &t("y"), &budget, &mut rng).unwrap();
        match v {
            Verdict::Refuted { counterexample: Counterexample::Mismatch { lhs, rhs } } => {
                assert_ne!(eval_closed(&b, &lhs, 100).unwrap(), eval_closed(&b, &rhs, 100).unwrap());
            }
            v => panic!("{v:?}"),
        }
    }

    #[test]
    fn term_enumeration_counts() {
        assert_eq!(enumerate_terms(1, 3, true).len(), 3);
        assert_eq!(enumerate_terms(2, 1, true).len(), 3 + 9);
        assert_eq!(enumerate_terms(2, 2, true).len(), 3 + 10);
        // shapes times canonical labelings (Catalan by restricted Bell)
        assert_eq!(enumerate_terms(4, 3, false).len(), 1 + 2 + 2 * 5 + 5 * 14);
    }

    #[test]
    fn small_compiler_soundness() {
        let b = Backend::sk(0);
        let r = compiler_soundness(&b, &enumerate_terms(3, 2, true), 10, &Budget::default());
        assert!(matches!(r.verdict, Verdict::Evidence { .. }), "{:?}", r.verdict);
    }

    #[test]
    fn set_level_evaluation() {
        let b = Backend::sk(0);
        let budget = Budget::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let env: BTreeMap<String, RSet> =
            [("x0".to_string(), RSet::sk(Sk::K)), ("x1".to_string(), RSet::sk(Sk::S))].into();
        let out = eval_set(&b, &t("x1 x0 x0"), &env, &budget, &mut rng).unwrap();
        assert_eq!(out.defined, Verdict::Proven);
        assert_eq!(out.image.unwrap().to_string(), "S K K");
    }
}
