//! Fixture files, the check suites behind each command, and reports.
//!
//! A fixture names PCAs, assemblies over them, morphisms, terms, slices,
//! product batteries, density setups and stored certificates. Every name
//! must resolve at load and every stored certificate is replayed then.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assemblies::{self, check_morphism, selectors, Assembly, Tracker};
use crate::density;
use crate::morphisms::{generators, product_lemma_battery};
use crate::pca::filter::{Cert, Filter};
use crate::pca::rset::RSet;
use crate::pca::synth::Member;
use crate::pca::{axiom_suite, make_backend, Backend, BackendKind, Budget, Elem, Pca, DEFAULT_GRAPH_LEVEL};
use crate::slicing::{self, battery, battery_verdict, run_battery, slice_pca, SlicePca};
use crate::terms::{parse_term, Term};
use crate::verdict::Verdict;
use crate::World;

pub const AXIOM_TRIPLES: u64 = 200;
const GAMMA_NABLA_MAX: usize = 4;

// ------------------------------------------------------------- fixtures

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixtureFile {
    pub pcas: Vec<PcaDecl>,
    pub assemblies: Vec<AsmDecl>,
    pub morphisms: Vec<MorphDecl>,
    pub terms: Vec<TermDecl>,
    pub slices: Vec<SliceDecl>,
    pub products: Vec<ProductDecl>,
    pub density: Vec<DensityDecl>,
    pub certificates: Vec<CertDecl>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PcaDecl {
    pub name: String,
    pub backend: BackendKind,
    #[serde(default)]
    pub filter: Option<Filter>,
}

/// Without `fibers`, points are realized by selectors, or by everything
/// when `nabla` is set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsmDecl {
    pub name: String,
    pub pca: String,
    pub points: Vec<String>,
    #[serde(default)]
    pub fibers: Option<Vec<RSet>>,
    #[serde(default)]
    pub nabla: bool,
    /// Slice component of each point, for objects over an index.
    #[serde(default)]
    pub index: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MorphDecl {
    pub name: String,
    pub pca: String,
    pub dom: String,
    pub cod: String,
    pub arrow: Vec<usize>,
    #[serde(default)]
    pub tracker: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDecl {
    pub name: String,
    pub pca: String,
    #[serde(default)]
    pub vars: Vec<String>,
    pub body: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Oracle {
    /// Every component meets the atom-free sections.
    EachMeetsC,
    /// All components share an atom-free section.
    AllMeetC,
}

impl Oracle {
    pub fn name(self) -> &'static str {
        match self {
            Oracle::EachMeetsC => "each_meets_c",
            Oracle::AllMeetC => "all_meet_c",
        }
    }
}

/// `index` is an assembly name, or one of `1`, `1+1`, `∇2`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceDecl {
    pub name: String,
    pub base: String,
    pub index: String,
    pub oracle: Oracle,
    pub pool: Vec<Elem>,
    #[serde(default = "two")]
    pub max: usize,
}

fn two() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductDecl {
    pub name: String,
    #[serde(default)]
    pub atoms: u32,
    pub left: Vec<RSet>,
    pub right: Vec<RSet>,
    pub sets: Vec<RSet>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityDecl {
    pub name: String,
    pub base: String,
    pub index: String,
    /// Base objects `X` for the hom bijection.
    #[serde(default)]
    pub objects: Vec<String>,
    /// Objects `Y` over the index.
    #[serde(default)]
    pub targets: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertDecl {
    pub name: String,
    pub pca: String,
    pub set: RSet,
    pub cert: Cert,
    /// Expected label, e.g. `PROVEN`.
    pub verdict: String,
}

/// A membership certificate with everything needed to replay it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoredCert {
    pub name: String,
    pub backend: Backend,
    pub filter: Filter,
    pub set: RSet,
    pub cert: Cert,
    pub verdict: String,
}

impl StoredCert {
    pub fn replay(&self, budget: &Budget) -> Verdict {
        let mut rng = budget.rng(&format!("replay/{}", self.name));
        self.filter.replay(&self.backend, &self.set, &self.cert, budget, &mut rng)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LoadError {
    #[error("parse error at {line}:{column}: {msg}")]
    Parse { line: usize, column: usize, msg: String },
    #[error("{place}: unresolved {kind} `{name}`")]
    Unresolved { place: String, kind: &'static str, name: String },
    #[error("{place}: {msg}")]
    Invalid { place: String, msg: String },
}

fn invalid(place: &str, msg: impl Into<String>) -> LoadError {
    LoadError::Invalid { place: place.into(), msg: msg.into() }
}

/// A fixture with every reference resolved.
#[derive(Clone, Debug)]
pub struct Workbench {
    pub fixture: FixtureFile,
    pcas: BTreeMap<String, Pca>,
    assemblies: BTreeMap<String, (String, Assembly)>,
    /// PCA names in check order: declared, then referenced built-ins.
    order: Vec<String>,
    pub certs: Vec<StoredCert>,
    /// One replay per stored certificate.
    pub load_checks: Vec<CheckResult>,
}

fn builtin(name: &str) -> Option<Pca> {
    let kind = match name {
        "trivial" => BackendKind::Trivial,
        "sk" => BackendKind::SkFuel,
        "graph" => BackendKind::GraphModel { level: DEFAULT_GRAPH_LEVEL },
        _ => BackendKind::SkRelative { atoms: name.strip_prefix("sk-rel")?.parse().ok()? },
    };
    Some(make_backend(&kind))
}

fn builtin_index(pca: &Pca, name: &str) -> Option<Assembly> {
    match name {
        "1" => Some(assemblies::terminal(pca)),
        "1+1" => Some(slicing::one_plus_one(pca)),
        "∇2" | "nabla2" => Some(slicing::nabla_two()),
        _ => None,
    }
}

impl Workbench {
    pub fn parse(src: &str) -> Result<FixtureFile, LoadError> {
        serde_json::from_str(src).map_err(|e| LoadError::Parse { line: e.line(), column: e.column(), msg: e.to_string() })
    }

    pub fn load(src: &str, budget: &Budget) -> Result<Workbench, LoadError> {
        Workbench::new(Workbench::parse(src)?, budget)
    }

    pub fn new(fixture: FixtureFile, budget: &Budget) -> Result<Workbench, LoadError> {
        let mut wb = Workbench {
            fixture: fixture.clone(),
            pcas: BTreeMap::new(),
            assemblies: BTreeMap::new(),
            order: vec![],
            certs: vec![],
            load_checks: vec![],
        };
        for d in &fixture.pcas {
            let mut pca = make_backend(&d.backend);
            pca.name = d.name.clone();
            if let Some(f) = &d.filter {
                pca = Pca::new(&d.name, pca.world, pca.backend, f.clone());
            }
            if wb.pcas.insert(d.name.clone(), pca).is_some() {
                return Err(invalid(&format!("pca {}", d.name), "declared twice"));
            }
            wb.order.push(d.name.clone());
        }
        for d in &fixture.assemblies {
            let place = format!("assembly {}", d.name);
            let pca = wb.resolve_pca(&place, &d.pca)?.clone();
            let pts: Vec<&str> = d.points.iter().map(String::as_str).collect();
            let mut a = match (&d.fibers, d.nabla) {
                (Some(fs), _) if fs.len() != pts.len() => return Err(invalid(&place, "one fiber per point")),
                (Some(fs), _) => Assembly::new(&d.name, &pts, fs.clone()),
                (None, true) => assemblies::nabla(&d.name, &pts),
                (None, false) => selectors(&pca, &d.name, &pts),
            };
            if let Some(ix) = &d.index {
                if ix.len() != pts.len() {
                    return Err(invalid(&place, "one index entry per point"));
                }
                a.index = ix.clone();
            }
            if wb.assemblies.insert(d.name.clone(), (d.pca.clone(), a)).is_some() {
                return Err(invalid(&place, "declared twice"));
            }
        }
        for d in &fixture.morphisms {
            let place = format!("morphism {}", d.name);
            wb.resolve_pca(&place, &d.pca)?;
            let x = wb.resolve_asm(&place, &d.dom)?;
            let y = wb.resolve_asm(&place, &d.cod)?;
            assemblies::check_arrow(x, y, &d.arrow).map_err(|e| invalid(&place, e.to_string()))?;
            if let Some(t) = &d.tracker {
                parse_term(t).map_err(|e| invalid(&place, e.to_string()))?;
            }
        }
        for d in &fixture.terms {
            let place = format!("term {}", d.name);
            wb.resolve_pca(&place, &d.pca)?;
            parse_term(&d.body).map_err(|e| invalid(&place, e.to_string()))?;
        }
        for d in &fixture.slices {
            let place = format!("slice {}", d.name);
            wb.slice(&place, &d.base, &d.index)?;
        }
        for d in &fixture.density {
            let place = format!("density {}", d.name);
            wb.slice(&place, &d.base, &d.index)?;
            for o in d.objects.iter().chain(&d.targets) {
                wb.resolve_asm(&place, o)?;
            }
        }
        for d in &fixture.certificates {
            let place = format!("certificate {}", d.name);
            let pca = wb.resolve_pca(&place, &d.pca)?;
            let c = StoredCert {
                name: d.name.clone(),
                backend: pca.backend.clone(),
                filter: pca.filter.clone(),
                set: d.set.clone(),
                cert: d.cert.clone(),
                verdict: d.verdict.to_uppercase(),
            };
            wb.load_checks.push(replay_check(&c, budget, false));
            wb.certs.push(c);
        }
        Ok(wb)
    }

    fn resolve_pca(&mut self, place: &str, name: &str) -> Result<&Pca, LoadError> {
        if !self.pcas.contains_key(name) {
            let pca = builtin(name).ok_or_else(|| LoadError::Unresolved { place: place.into(), kind: "pca", name: name.into() })?;
            self.pcas.insert(name.into(), pca);
            self.order.push(name.into());
        }
        Ok(&self.pcas[name])
    }

    fn resolve_asm(&self, place: &str, name: &str) -> Result<&Assembly, LoadError> {
        self.assemblies
            .get(name)
            .map(|(_, a)| a)
            .ok_or_else(|| LoadError::Unresolved { place: place.into(), kind: "assembly", name: name.into() })
    }

    fn slice(&mut self, place: &str, base: &str, index: &str) -> Result<SlicePca, LoadError> {
        let pca = self.resolve_pca(place, base)?.clone();
        let ix = match builtin_index(&pca, index) {
            Some(a) => a,
            None => self.resolve_asm(place, index)?.clone(),
        };
        slice_pca(&pca, &ix).map_err(|e| invalid(place, e.to_string()))
    }

    fn slice_of(&self, base: &str, index: &str) -> SlicePca {
        let pca = &self.pcas[base];
        let ix = builtin_index(pca, index).unwrap_or_else(|| self.assembly(index).expect("resolved").clone());
        slice_pca(pca, &ix).expect("checked at load")
    }

    pub fn pca(&self, name: &str) -> Option<&Pca> {
        self.pcas.get(name)
    }

    pub fn assembly(&self, name: &str) -> Option<&Assembly> {
        self.assemblies.get(name).map(|(_, a)| a)
    }

    fn pca_order(&self) -> Vec<&Pca> {
        let mut seen = BTreeSet::new();
        self.order.iter().filter(|n| seen.insert(n.as_str())).map(|n| &self.pcas[n]).collect()
    }
}

// -------------------------------------------------------------- reports

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Coverage {
    pub checked: u64,
    pub unknown: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<String>,
    pub coverage: Coverage,
    /// Label a replayed check must reproduce.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<u64>,
}

impl CheckResult {
    pub fn replay_failed(&self) -> bool {
        self.expected.as_deref().is_some_and(|e| e != self.verdict.label())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub budget: Budget,
    pub checks: Vec<CheckResult>,
    #[serde(default)]
    pub certificates: Vec<StoredCert>,
}

impl Report {
    /// 1 on any refutation or replay mismatch.
    pub fn exit_code(&self) -> i32 {
        i32::from(self.checks.iter().any(|c| c.verdict.is_refuted() || c.replay_failed()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(src: &str) -> Result<Report, LoadError> {
        serde_json::from_str(src).map_err(|e| LoadError::Parse { line: e.line(), column: e.column(), msg: e.to_string() })
    }

    pub fn to_text(&self) -> String {
        let b = &self.budget;
        let mut out = format!(
            "relpca {}: seed={:#x} fuel={} samples={} term-size={} arity={} checks={}\n",
            self.command,
            b.seed,
            b.fuel,
            b.samples,
            b.term_size,
            b.arity,
            self.checks.len()
        );
        for c in &self.checks {
            let mut line = format!("{:<9} {}", c.verdict.label(), c.name);
            match &c.verdict {
                Verdict::Evidence { checked } => line += &format!(" ({checked} checked)"),
                Verdict::Unknown { budget } => line += &format!(" (budget: {budget})"),
                _ => {}
            }
            if c.coverage.unknown > 0 {
                line += &format!(" [{} of {} open]", c.coverage.unknown, c.coverage.checked);
            }
            if let Some(r) = &c.certificate {
                line += &format!(" cert={r}");
            }
            if let Some(e) = c.expected.as_deref().filter(|_| c.replay_failed()) {
                line += &format!(" expected {e}");
            }
            if let Some(d) = &c.detail {
                line += &format!(" -- {d}");
            }
            if let Some(ms) = c.wall_ms {
                line += &format!(" {ms}ms");
            }
            out += &line;
            out.push('\n');
            if let Verdict::Refuted { counterexample } = &c.verdict {
                out += &format!("    counterexample: {counterexample}\n");
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Check,
    Synthesize,
    Slice,
    Product,
    Density,
    Replay,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Synthesize => "synthesize",
            Command::Slice => "slice",
            Command::Product => "product",
            Command::Density => "density",
            Command::Replay => "replay",
        }
    }
}

struct Run<'a> {
    budget: &'a Budget,
    timings: bool,
    checks: Vec<CheckResult>,
    certs: Vec<StoredCert>,
}

struct Outcome {
    verdict: Verdict,
    coverage: Coverage,
    certificate: Option<String>,
    detail: Option<String>,
}

impl Outcome {
    fn of(verdict: Verdict) -> Outcome {
        let coverage = Coverage { checked: checked_of(&verdict), unknown: u64::from(verdict.is_unknown()) };
        Outcome { verdict, coverage, certificate: None, detail: None }
    }

    fn detail(mut self, d: impl Into<String>) -> Outcome {
        self.detail = Some(d.into());
        self
    }

    fn cert(mut self, name: Option<String>) -> Outcome {
        self.certificate = name;
        self
    }
}

fn checked_of(v: &Verdict) -> u64 {
    match v {
        Verdict::Evidence { checked } => *checked,
        _ => 1,
    }
}

impl Run<'_> {
    fn check(&mut self, name: impl Into<String>, f: impl FnOnce(&mut Self) -> Outcome) {
        let start = Instant::now();
        let o = f(self);
        let wall_ms = self.timings.then(|| start.elapsed().as_millis() as u64);
        self.checks.push(CheckResult {
            name: name.into(),
            verdict: o.verdict,
            certificate: o.certificate,
            coverage: o.coverage,
            expected: None,
            detail: o.detail,
            wall_ms,
        });
    }

    /// Store a member certificate; its name, when there is one.
    fn store(&mut self, name: String, pca: &Pca, m: &Member) -> Option<String> {
        let cert = m.cert.clone()?;
        let mut c = StoredCert {
            name: name.clone(),
            backend: pca.backend.clone(),
            filter: pca.filter.clone(),
            set: m.set.clone(),
            cert,
            verdict: String::new(),
        };
        c.verdict = c.replay(self.budget).label().into();
        self.certs.push(c);
        Some(name)
    }
}

fn replay_check(c: &StoredCert, budget: &Budget, timings: bool) -> CheckResult {
    let start = Instant::now();
    let verdict = c.replay(budget);
    CheckResult {
        name: format!("replay/{}", c.name),
        coverage: Coverage { checked: checked_of(&verdict), unknown: u64::from(verdict.is_unknown()) },
        verdict,
        certificate: Some(c.name.clone()),
        expected: Some(c.verdict.clone()),
        detail: None,
        wall_ms: timings.then(|| start.elapsed().as_millis() as u64),
    }
}

/// Run the suite for `cmd`. Stored-certificate replays from load come first.
pub fn run(cmd: Command, wb: &Workbench, budget: &Budget, timings: bool) -> Report {
    let mut r = Run { budget, timings, checks: wb.load_checks.clone(), certs: vec![] };
    if !timings {
        r.checks.iter_mut().for_each(|c| c.wall_ms = None);
    }
    match cmd {
        Command::Check => check_suite(&mut r, wb),
        Command::Synthesize => synthesize_suite(&mut r, wb),
        Command::Slice => slice_suite(&mut r, wb),
        Command::Product => product_suite(&mut r, wb),
        Command::Density => density_suite(&mut r, wb),
        Command::Replay => {}
    }
    Report { command: cmd.name().into(), budget: budget.clone(), checks: r.checks, certificates: r.certs }
}

/// Replay every certificate stored in an earlier report, under its budget.
pub fn replay_report(report: &Report, timings: bool) -> Report {
    let checks = report.certificates.iter().map(|c| replay_check(c, &report.budget, timings)).collect();
    Report { command: "replay".into(), budget: report.budget.clone(), checks, certificates: vec![] }
}

fn check_suite(r: &mut Run, wb: &Workbench) {
    let budget = r.budget.clone();
    for pca in wb.pca_order() {
        r.check(format!("axioms/{}", pca.name), |_| {
            let a = axiom_suite(pca, AXIOM_TRIPLES, &budget);
            let mut o = Outcome::of(a.verdict);
            o.coverage = Coverage { checked: a.triples, unknown: a.unknown };
            o
        });
        r.check(format!("kit/{}", pca.name), |_| {
            let rows = pca.kit.replay(&pca.backend, &pca.filter, &budget);
            let n = rows.len() as u64;
            let unknown = rows.iter().filter(|(_, v)| v.is_unknown()).count() as u64;
            let mut o = Outcome::of(Verdict::all(rows.into_iter().map(|(_, v)| v)));
            o.coverage = Coverage { checked: n, unknown };
            o
        });
    }
    for d in &wb.fixture.assemblies {
        let pca = &wb.pcas[&d.pca];
        let x = wb.assembly(&d.name).expect("resolved");
        if pca.world != World::Set || x.index.iter().any(|&i| i != 0) {
            continue;
        }
        r.check(format!("identity/{}", d.name), |_| Outcome::of(assemblies::identity(pca, x, &budget).verdict));
        if x.len() <= GAMMA_NABLA_MAX {
            r.check(format!("gamma-nabla/{}", d.name), |_| {
                Outcome::of(assemblies::gamma_nabla_bijection(pca, x, &["p", "q"], &budget)).detail(format!("hom(Γ{0}, 2) ≅ hom({0}, ∇2)", d.name))
            });
        }
    }
    for d in &wb.fixture.morphisms {
        let pca = &wb.pcas[&d.pca];
        let x = wb.assembly(&d.dom).expect("resolved");
        let y = wb.assembly(&d.cod).expect("resolved");
        r.check(format!("morphism/{}", d.name), |_| {
            let hint = match &d.tracker {
                None => None,
                Some(src) => {
                    let t = parse_term(src).expect("checked at load");
                    match pca.synthesize(&t, &BTreeMap::new(), &budget) {
                        Some(s) => Some(Tracker { source: src.clone(), member: s.member() }),
                        None => return Outcome::of(Verdict::unknown(format!("image of tracker {src} not computable"))),
                    }
                }
            };
            match check_morphism(pca, x, y, d.arrow.clone(), hint, &budget) {
                Ok(m) => {
                    let src = m.tracker.as_ref().map(|t| format!("tracker {}", t.source));
                    let o = Outcome::of(m.verdict);
                    match src {
                        Some(s) => o.detail(s),
                        None => o,
                    }
                }
                Err(e) => Outcome::of(Verdict::unknown(e.to_string())),
            }
        });
    }
}

fn synthesize_suite(r: &mut Run, wb: &Workbench) {
    let budget = r.budget.clone();
    for d in &wb.fixture.terms {
        let pca = &wb.pcas[&d.pca];
        r.check(format!("synthesize/{}", d.name), |r| {
            let body: Term = parse_term(&d.body).expect("checked at load");
            let vars: Vec<&str> = d.vars.iter().map(String::as_str).collect();
            let Some(s) = pca.synthesize_lambda(&vars, &body, &BTreeMap::new(), &budget) else {
                return Outcome::of(Verdict::unknown("image not computable"));
            };
            let m = s.member();
            let v = match &m.cert {
                Some(_) => s.defined.clone().and(pca.replay_member(&m, &budget)),
                None => s.defined.clone().and(Verdict::unknown("no filter certificate")),
            };
            let name = r.store(format!("term/{}", d.name), pca, &m);
            Outcome::of(v).cert(name).detail(format!("{} realized by {}", s.source, m.set))
        });
    }
}

fn slice_suite(r: &mut Run, wb: &Workbench) {
    let budget = r.budget.clone();
    for d in &wb.fixture.slices {
        let sp = wb.slice_of(&d.base, &d.index);
        r.check(format!("slice/{}/kit", d.name), |_| {
            Outcome::of(Verdict::all(sp.pca.kit.replay(&sp.pca.backend, &sp.pca.filter, &budget).into_iter().map(|(_, v)| v)))
        });
        r.check(format!("slice/{}/battery", d.name), |_| {
            let sets = battery(&d.pool, d.max, sp.n());
            let rows = match d.oracle {
                Oracle::EachMeetsC => run_battery(&sp, &sets, |c| c.iter().all(slicing::meets_c), &budget),
                Oracle::AllMeetC => run_battery(&sp, &sets, slicing::share_c, &budget),
            };
            let members = rows.iter().filter(|x| x.verdict.holds()).count();
            let unknown = rows.iter().filter(|x| x.verdict.is_unknown()).count() as u64;
            let mut o = Outcome::of(battery_verdict(&rows));
            o.coverage = Coverage { checked: rows.len() as u64, unknown };
            o.detail(format!("{members} of {} families are members; oracle {}", rows.len(), d.oracle.name()))
        });
    }
}

fn product_suite(r: &mut Run, wb: &Workbench) {
    let budget = r.budget.clone();
    for d in &wb.fixture.products {
        let b = Backend::Product { parts: vec![Backend::sk(d.atoms); 2] };
        for (set, v) in product_lemma_battery(&b, &d.left, &d.right, &d.sets, &budget) {
            r.check(format!("product/{}/{set}", d.name), |_| Outcome::of(v));
        }
    }
}

fn density_suite(r: &mut Run, wb: &Workbench) {
    let budget = r.budget.clone();
    for d in &wb.fixture.density {
        let sp = wb.slice_of(&d.base, &d.index);
        let tag = format!("density/{}", d.name);
        let m = match density::slice_inclusion(&sp, &budget) {
            Ok(m) => m,
            Err(e) => {
                r.check(format!("{tag}/inclusion"), |_| Outcome::of(Verdict::unknown(e.to_string())));
                continue;
            }
        };
        r.check(format!("{tag}/inclusion"), |_| Outcome::of(m.verdict()));
        let (gens, _) = generators(&m.target);
        let mut qs = None;
        r.check(format!("{tag}/qs"), |r| {
            let (v, w) = density::check_qs(&m, None, &gens, &budget);
            let name = w.as_ref().and_then(|w| r.store(format!("{tag}/N"), &m.target, &w.n.member));
            let detail = w.as_ref().map(|w| format!("N = {}, {} responders", w.n.source, w.responders.len()));
            qs = w;
            let o = Outcome::of(v).cert(name);
            match detail {
                Some(s) => o.detail(s),
                None => o,
            }
        });
        let Some(qs) = qs else { continue };
        let mut cd = None;
        r.check(format!("{tag}/cd"), |r| match density::qs_to_cd(&m, &qs, &gens, &budget) {
            Ok((w, v)) => {
                let name = r.store(format!("{tag}/M"), &m.target, &w.m.member);
                let weak = w.responders.iter().filter(|x| x.weak_only).count();
                let o = Outcome::of(v).cert(name).detail(format!("M = {}, {weak} weak-only responders", w.m.source));
                cd = Some(w);
                o
            }
            Err(e) => Outcome::of(Verdict::unknown(e.to_string())),
        });
        let Some(cd) = cd else { continue };
        r.check(format!("{tag}/round-trip"), |_| match density::cd_to_qs(&m, &cd, &gens, &budget) {
            Ok((_, v)) => Outcome::of(v),
            Err(e) => Outcome::of(Verdict::unknown(e.to_string())),
        });
        if d.objects.is_empty() && d.targets.is_empty() {
            continue;
        }
        let xs: Vec<Assembly> = d.objects.iter().map(|n| wb.assembly(n).expect("resolved").clone()).collect();
        let ys: Vec<Assembly> = d.targets.iter().map(|n| wb.assembly(n).expect("resolved").clone()).collect();
        let mut data = None;
        r.check(format!("{tag}/right-adjoint"), |_| match density::right_adjoint(&m, &cd, &xs, &ys, &budget) {
            Ok(a) => {
                let counts: Vec<String> =
                    a.homs.iter().map(|h| format!("{}→G{}: {}/{}/{}", h.x, h.y, h.functions, h.left, h.right)).collect();
                let mut o = Outcome::of(a.verdict.clone()).detail(format!("homs {}", counts.join(", ")));
                o.coverage.checked = a.homs.len() as u64;
                data = Some(a);
                o
            }
            Err(e) => Outcome::of(Verdict::unknown(e.to_string())),
        });
        if let Some(a) = data {
            r.check(format!("{tag}/dense"), |_| Outcome::of(density::adjoint_implies_dense(&m, &a, &gens, &budget).0));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TRIVIAL: &str = r#"{
        "pcas": [{"name": "t", "backend": {"kind": "trivial"}}],
        "assemblies": [
            {"name": "X", "pca": "t", "points": ["a", "b"], "fibers": ["u", "u"]},
            {"name": "Y", "pca": "t", "points": ["p"], "fibers": ["u"]}
        ],
        "morphisms": [{"name": "f", "pca": "t", "dom": "X", "cod": "Y", "arrow": [0, 0]}]
    }"#;

    #[test]
    fn trivial_fixture_is_all_proven() {
        let b = Budget::default();
        let wb = Workbench::load(TRIVIAL, &b).unwrap();
        let rep = run(Command::Check, &wb, &b, false);
        assert!(rep.checks.iter().all(|c| c.verdict.is_proven()), "{}", rep.to_text());
        assert_eq!(rep.exit_code(), 0);
    }

    #[test]
    fn parse_errors_carry_positions() {
        match Workbench::load("{\n  \"pcas\": [,]\n}", &Budget::default()) {
            Err(LoadError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let bad = r#"{"assemblies": [{"name": "X", "pca": "nope", "points": ["a"]}]}"#;
        assert!(matches!(Workbench::load(bad, &Budget::default()), Err(LoadError::Unresolved { kind: "pca", .. })));
    }

    #[test]
    fn empty_suite_is_header_only() {
        let b = Budget::default();
        let wb = Workbench::load("{}", &b).unwrap();
        let rep = run(Command::Check, &wb, &b, false);
        assert!(rep.checks.is_empty());
        assert_eq!(rep.to_text().lines().count(), 1);
        assert_eq!(rep.exit_code(), 0);
    }

    #[test]
    fn json_round_trips() {
        let b = Budget::default();
        let src = r##"{"terms": [{"name": "pair", "pca": "sk", "vars": ["x", "y"], "body": "#p y x"}]}"##;
        let wb = Workbench::load(src, &b).unwrap();
        let rep = run(Command::Synthesize, &wb, &b, false);
        assert_eq!(rep.certificates.len(), 1);
        let back = Report::from_json(&rep.to_json()).unwrap();
        assert_eq!(back, rep);
        let again = replay_report(&back, false);
        assert!(again.checks.iter().all(|c| !c.replay_failed()), "{}", again.to_text());
    }
}
