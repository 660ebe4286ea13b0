//! The eight acceptance criteria. Each prints one line and must finish in
//! under a minute.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use relpca::assemblies::{self, check_morphism, selectors, AsmMorphism, Assembly};
use relpca::backend::RegFunctor;
use relpca::density::{self, CdWitness};
use relpca::morphisms::{self, ApplicativeMorphism, RelMap};
use relpca::pca::kit::slot_elem;
use relpca::pca::{axiom_suite, make_backend, BackendKind, DEFAULT_GRAPH_LEVEL};
use relpca::slicing::{self, battery, battery_verdict, run_battery, slice_pca, SlicePca};
use relpca::terms::{compiler_soundness, enumerate_terms};
use relpca::workbench::{self, Command, Workbench};
use relpca::{Backend, Budget, Elem, Filter, Pca, RSet, Slot, Verdict, World};

const LIMIT: Duration = Duration::from_secs(60);

struct Outcome {
    pass: bool,
    summary: String,
}

fn outcome(pass: bool, summary: impl Into<String>) -> Outcome {
    Outcome { pass, summary: summary.into() }
}

fn b() -> Budget {
    Budget::default()
}

fn rel() -> Pca {
    make_backend(&BackendKind::SkRelative { atoms: 1 })
}

fn pool() -> Vec<Elem> {
    ["K", "S", "o0", "K o0"].iter().map(|s| s.parse().unwrap()).collect()
}

fn tally(vs: &[Verdict]) -> String {
    let n = |f: fn(&Verdict) -> bool| vs.iter().filter(|v| f(v)).count();
    format!(
        "{} proven, {} evidence, {} unknown, {} refuted",
        n(Verdict::is_proven),
        n(|v| matches!(v, Verdict::Evidence { .. })),
        n(Verdict::is_unknown),
        n(Verdict::is_refuted)
    )
}

// ------------------------------------------------------------ criteria

fn compiler() -> Outcome {
    let mut terms = enumerate_terms(6, 3, false);
    terms.extend(enumerate_terms(4, 3, true));
    let budget = Budget { fuel: 500, ..b() };
    let r = compiler_soundness(&Backend::sk(0), &terms, 100, &budget);
    outcome(
        !r.verdict.is_refuted() && r.checks > 0,
        format!("{} terms, {} valuation checks, {} open at fuel 500: {}", r.terms, r.checks, r.unknown, r.verdict.label()),
    )
}

fn axioms() -> Outcome {
    let pcas = [
        Pca::trivial(),
        Pca::sk(),
        rel(),
        make_backend(&BackendKind::GraphModel { level: DEFAULT_GRAPH_LEVEL }),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for pca in &pcas {
        let r = axiom_suite(pca, 200, &b());
        let exact_ok = pca.backend != Backend::Trivial || r.verdict.is_proven();
        pass &= exact_ok && !r.verdict.is_refuted() && r.unknown * 20 < r.triples;
        parts.push(format!("{} {}/{} open", pca.name, r.unknown, r.triples));
    }
    outcome(pass, parts.join(", "))
}

fn tracker_synthesis() -> Outcome {
    let budget = b();
    let pca = Pca::sk();
    let x = selectors(&pca, "X", &["a", "b", "c"]);
    let y = selectors(&pca, "Y", &["u", "v"]);
    let z = selectors(&pca, "Z", &["p", "q"]);
    let mut vs = Vec::new();

    let f = check_morphism(&pca, &x, &y, vec![0, 1, 1], None, &budget).unwrap();
    let g = check_morphism(&pca, &y, &z, vec![1, 0], None, &budget).unwrap();
    let gf = assemblies::compose(&pca, &f, &g, &budget).unwrap();
    vs.push(gf.verdict.clone());

    let h = check_morphism(&pca, &x, &z, vec![0, 0, 1], None, &budget).unwrap();
    let pr = assemblies::product(&pca, &y, &z, &budget);
    vs.push(assemblies::pair(&pca, &f, &h, &pr, &budget).unwrap().verdict);

    let (ev, w) = assemblies::epi_check(&pca, &f, None, &budget);
    vs.push(ev);
    let k = check_morphism(&pca, &z, &y, vec![1, 0], None, &budget).unwrap();
    let (_, t, v) = assemblies::pullback_epi(&pca, &f, &w.unwrap(), &k, &budget);
    vs.push(if t.is_some() { v } else { Verdict::unknown("no pulled-back witness") });

    let sum = morphisms::coproduct(&pca, &pca).unwrap();
    let id = morphisms::identity(&pca, &budget);
    let e = slot_elem(&pca.backend, Slot::K);
    let ka = ApplicativeMorphism::check("K·", &pca, &pca, RegFunctor::Identity, RelMap::Apply { elem: e }, None, &budget).unwrap();
    vs.push(morphisms::copair(&id, &ka, &sum, &budget).unwrap().conditions.tracked);

    let i = selectors(&pca, "I", &["a", "b"]);
    let sp = slice_pca(&pca, &i).unwrap();
    let kx = check_morphism(&pca, &x, &i, vec![0, 1, 1], None, &budget).unwrap();
    let data = slicing::slice_equivalence(&sp, &[kx.clone()], &budget).unwrap();
    vs.push(data.verdict);
    let sw = check_morphism(&pca, &x, &x, vec![0, 2, 1], None, &budget).unwrap();
    let fh = slicing::f_arrow(&sp, &kx, &kx, &sw, &budget).unwrap();
    vs.push(fh.verdict.clone());
    vs.push(slicing::g_arrow(&sp, &fh, &budget).unwrap().verdict);

    let m = density::slice_inclusion(&sp, &budget).unwrap();
    let (gens, _) = morphisms::generators(&m.target);
    let (_, qs) = density::check_qs(&m, None, &gens, &budget);
    let (cd, v) = density::qs_to_cd(&m, &qs.unwrap(), &gens, &budget).unwrap();
    vs.push(v);
    vs.push(density::cd_to_qs(&m, &cd, &gens, &budget).unwrap().1);

    outcome(vs.iter().all(|v| !v.is_refuted()), format!("{} trackers: {}", vs.len(), tally(&vs)))
}

/// Composition by arrows: the category laws hold on functions and every
/// composite is Proven.
fn category_laws(pca: &Pca, objs: &[Assembly], budget: &Budget) -> Result<usize, String> {
    let mut n = 0;
    let homs: BTreeMap<(usize, usize), Vec<AsmMorphism>> = (0..objs.len())
        .flat_map(|a| (0..objs.len()).map(move |c| (a, c)))
        .map(|(a, c)| ((a, c), assemblies::hom_exact(pca, &objs[a], &objs[c], budget).unwrap()))
        .collect();
    for a in 0..objs.len() {
        let ida = assemblies::identity(pca, &objs[a], budget);
        for c in 0..objs.len() {
            for f in &homs[&(a, c)] {
                let idc = assemblies::identity(pca, &objs[c], budget);
                for gf in [assemblies::compose(pca, &ida, f, budget).unwrap(), assemblies::compose(pca, f, &idc, budget).unwrap()] {
                    if gf.arrow != f.arrow || !gf.verdict.is_proven() {
                        return Err(format!("unit law at {:?}", f.arrow));
                    }
                }
                for d in 0..objs.len() {
                    for g in &homs[&(c, d)] {
                        let gf = assemblies::compose(pca, f, g, budget).unwrap();
                        if !gf.verdict.is_proven() {
                            return Err(format!("composite {:?};{:?}: {}", f.arrow, g.arrow, gf.verdict));
                        }
                        for e in 0..objs.len() {
                            if let Some(h) = homs[&(d, e)].first() {
                                let l = assemblies::compose(pca, &gf, h, budget).unwrap();
                                let r = assemblies::compose(pca, f, &assemblies::compose(pca, g, h, budget).unwrap(), budget).unwrap();
                                if l.arrow != r.arrow || !l.verdict.is_proven() || !r.verdict.is_proven() {
                                    return Err("associativity".into());
                                }
                                n += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(n)
}

/// Every competitor cone factors through the product by exactly one
/// function, and that function is Proven-tracked.
fn product_universal(pca: &Pca, x: &Assembly, y: &Assembly, zs: &[Assembly], budget: &Budget) -> Result<usize, String> {
    let pr = assemblies::product(pca, x, y, budget);
    if !pr.verdict().is_proven() {
        return Err("projections".into());
    }
    let (p0, p1) = (pr.map("p0"), pr.map("p1"));
    let mut n = 0;
    for z in zs {
        for f in assemblies::hom_exact(pca, z, x, budget).unwrap() {
            for g in assemblies::hom_exact(pca, z, y, budget).unwrap() {
                let fits: Vec<Vec<usize>> = assemblies::all_arrows(z, &pr.object)
                    .into_iter()
                    .filter(|a| a.iter().enumerate().all(|(q, &k)| p0.arrow[k] == f.arrow[q] && p1.arrow[k] == g.arrow[q]))
                    .collect();
                let m = assemblies::pair(pca, &f, &g, &pr, budget).unwrap();
                if fits != vec![m.arrow.clone()] || !m.verdict.is_proven() {
                    return Err(format!("cone {:?},{:?}", f.arrow, g.arrow));
                }
                n += 1;
            }
        }
    }
    Ok(n)
}

/// Every arrow equalizing `f` and `g` factors uniquely through the inclusion.
fn equalizer_universal(pca: &Pca, x: &Assembly, y: &Assembly, zs: &[Assembly], budget: &Budget) -> Result<usize, String> {
    let mut n = 0;
    for f in assemblies::all_arrows(x, y) {
        for g in assemblies::all_arrows(x, y) {
            let eq = assemblies::equalizer(pca, x, &f, &g, budget);
            let incl = eq.map("incl");
            for z in zs {
                for h in assemblies::hom_exact(pca, z, x, budget).unwrap() {
                    if h.arrow.iter().any(|&p| f[p] != g[p]) {
                        continue;
                    }
                    let fits: Vec<Vec<usize>> = assemblies::all_arrows(z, &eq.object)
                        .into_iter()
                        .filter(|a| a.iter().enumerate().all(|(q, &k)| incl.arrow[k] == h.arrow[q]))
                        .collect();
                    if fits.len() != 1 {
                        return Err("equalizer factorization".into());
                    }
                    let m = check_morphism(pca, z, &eq.object, fits[0].clone(), None, budget).unwrap();
                    if !m.verdict.is_proven() {
                        return Err(format!("mediating arrow {}", m.verdict));
                    }
                    n += 1;
                }
            }
        }
    }
    Ok(n)
}

fn categorical() -> Outcome {
    let budget = b();
    let pca = Pca::sk();
    let mut parts = Vec::new();
    let mut pass = true;
    let objs = [selectors(&pca, "A", &["a"]), selectors(&pca, "B", &["u", "v"]), assemblies::nabla("N", &["p", "q"])];
    match category_laws(&pca, &objs, &budget) {
        Ok(n) => parts.push(format!("{n} associativity instances")),
        Err(e) => {
            pass = false;
            parts.push(e);
        }
    }
    let mut gn = 0;
    for size in 1..=4 {
        let names: Vec<String> = (0..size).map(|i| format!("x{i}")).collect();
        let pts: Vec<&str> = names.iter().map(String::as_str).collect();
        for x in [selectors(&pca, "S", &pts), assemblies::nabla("N", &pts)] {
            for ys in [&["p"][..], &["p", "q"], &["p", "q", "r"]] {
                pass &= assemblies::gamma_nabla_bijection(&pca, &x, ys, &budget).is_proven();
                gn += 1;
            }
        }
    }
    let t = Pca::trivial();
    let tx = Assembly::new("T", &["a", "b"], vec![RSet::single(Elem::Unit); 2]);
    pass &= assemblies::gamma_nabla_bijection(&t, &tx, &["p", "q"], &budget).is_proven();
    parts.push(format!("{} Γ⊣∇ bijections", gn + 1));

    let x = selectors(&pca, "X", &["a", "b"]);
    let y = selectors(&pca, "Y", &["u", "v"]);
    let zs = [selectors(&pca, "Z1", &["z"]), selectors(&pca, "Z2", &["z", "w"])];
    for (what, r) in [
        ("product cones", product_universal(&pca, &x, &y, &zs, &budget)),
        ("equalizer cones", equalizer_universal(&pca, &x, &y, &zs, &budget)),
    ] {
        match r {
            Ok(n) => parts.push(format!("{n} {what}")),
            Err(e) => {
                pass = false;
                parts.push(e);
            }
        }
    }

    let e = slot_elem(&pca.backend, Slot::K);
    let ka = ApplicativeMorphism::check("K·", &pca, &pca, RegFunctor::Identity, RelMap::Apply { elem: e }, None, &budget).unwrap();
    let h = check_morphism(&pca, &x, &y, vec![1, 0], None, &budget).unwrap();
    let fv = morphisms::asm_functoriality(&ka, &ka, &[x.clone(), y.clone()], &[h], &budget).unwrap();
    pass &= fv.is_proven();
    pass &= morphisms::gamma_commutes(&ka, &x, &budget).unwrap().is_proven();
    parts.push(format!("Asm functoriality {}", fv.label()));
    outcome(pass, parts.join(", "))
}

fn filter_algebra() -> Outcome {
    let budget = b();
    let mut pass = true;
    let mut parts = Vec::new();

    // ⟨G⟩: search, then an independent replay
    let gens: Vec<RSet> = ["K", "S"].iter().map(|s| s.parse().unwrap()).collect();
    let g = Pca::new("gen", World::Set, Backend::sk(1), Filter::Generated { gens: gens.clone() });
    let mut replayed = 0;
    for s in ["S K K", "K K", "S (K K)", "K (S K K)", "S K K | o0", "S K S", "K (K S)"] {
        let u: RSet = s.parse().unwrap();
        let m = g.certify(&u, &budget);
        let v = g.replay_member(&m, &budget);
        let ok = m.cert.is_some() && v.is_proven();
        pass &= ok;
        replayed += ok as usize;
    }
    // a redex is not a value; its reduct must not be accepted in its place
    let redex: RSet = "K S K".parse().unwrap();
    let m = g.certify(&redex, &budget);
    pass &= !g.replay_member(&m, &budget).is_proven();
    parts.push(format!("{replayed} ⟨G⟩ certificates replay"));

    // ⟨Δ⟨G⟩⟩ = ⟨ΔG⟩: left decided on the meet in the base, right by search
    // in the transported filter; certificates cross-replayed
    let p = RegFunctor::Diagonal { index: vec!["l".into(), "r".into()] };
    let pg = morphisms::transport_pca(&p, &g).unwrap();
    let direct = Pca::new(
        "ΔG",
        pg.world.clone(),
        pg.backend.clone(),
        Filter::Generated { gens: gens.iter().map(|x| RSet::prod(vec![x.clone(); 2])).collect() },
    );
    let mut agree = 0;
    let mut rows = 0;
    for w in battery(&pool(), 2, 2) {
        rows += 1;
        let (w0, w1) = (pg.part_set(&w, 0), pg.part_set(&w, 1));
        let meet: Vec<Elem> = w0.finite().unwrap().into_iter().filter(|e| w1.member(&g.backend, e)).collect();
        let left = if meet.is_empty() {
            Verdict::message("empty meet")
        } else {
            let m = g.certify(&RSet::elems(meet), &budget);
            match m.cert {
                Some(_) => {
                    let pm = morphisms::transport_member(&p, &g, &m).unwrap();
                    let mut rng = budget.rng("cross");
                    direct.filter.replay(&direct.backend, &w, pm.cert.as_ref().unwrap(), &budget, &mut rng)
                }
                None => g.filter.search(&g.backend, &m.set, &budget, &mut budget.rng("left")).0,
            }
        };
        let right = direct.certify(&w, &budget);
        let rv = match &right.cert {
            Some(c) => {
                let mut rng = budget.rng("cross");
                pg.filter.replay(&pg.backend, &w, c, &budget, &mut rng)
            }
            None => direct.filter.search(&direct.backend, &w, &budget, &mut budget.rng("right")).0,
        };
        if left.holds() == rv.holds() && !left.is_unknown() && !rv.is_unknown() {
            agree += 1;
        }
    }
    pass &= agree == rows;
    parts.push(format!("⟨Δ⟨G⟩⟩ = ⟨ΔG⟩ on {agree}/{rows} families"));

    let be = Backend::Product { parts: vec![Backend::sk(1), Backend::sk(1)] };
    let gg: Vec<RSet> = ["K", "S", "S K K"].iter().map(|s| s.parse().unwrap()).collect();
    let hh: Vec<RSet> = ["K", "S", "S K K", "K (S K K)"].iter().map(|s| s.parse().unwrap()).collect();
    let sets: Vec<RSet> =
        ["[K; S]", "[S K; K K]", "[K; o0]", "[o0 | K; S]", "[S K K; K (S K K)]", "[K | S; S K]"].iter().map(|s| s.parse().unwrap()).collect();
    let out = morphisms::product_lemma_battery(&be, &gg, &hh, &sets, &budget);
    let ok = out.iter().filter(|(_, v)| v.is_proven()).count();
    pass &= ok == out.len();
    parts.push(format!("⟨⟨G⟩×⟨H⟩⟩ = ⟨G×H⟩ on {ok}/{} sets", out.len()));
    outcome(pass, parts.join(", "))
}

fn slices() -> Outcome {
    let budget = b();
    let base = rel();
    let mut pass = true;
    let mut parts = Vec::new();

    let s1 = slice_pca(&base, &assemblies::terminal(&base)).unwrap();
    let mut same = 0;
    let subs = slicing::subsets(&pool(), 3);
    for u in &subs {
        let (bv, _) = base.filter.search(&base.backend, u, &budget, &mut budget.rng("base"));
        let (sv, _) = s1.membership(&RSet::prod(vec![u.clone()]), &budget);
        if bv.holds() == sv.holds() && bv.is_refuted() == sv.is_refuted() && !sv.is_unknown() {
            same += 1;
        }
    }
    pass &= same == subs.len();
    parts.push(format!("over 1: {same}/{}", subs.len()));

    let one_one = slice_pca(&base, &slicing::one_plus_one(&base)).unwrap();
    let rows = run_battery(&one_one, &battery(&pool(), 2, 2), |c| slicing::meets_c(&c[0]) && slicing::meets_c(&c[1]), &budget);
    pass &= battery_verdict(&rows).is_proven();
    parts.push(format!("1+1: {}/{} agree", rows.iter().filter(|r| r.agrees).count(), rows.len()));

    let n2 = slice_pca(&base, &slicing::nabla_two()).unwrap();
    let rows = run_battery(&n2, &battery(&pool(), 2, 2), slicing::share_c, &budget);
    pass &= battery_verdict(&rows).is_proven();
    parts.push(format!("∇2: {}/{} agree", rows.iter().filter(|r| r.agrees).count(), rows.len()));

    let sk = Pca::sk();
    let i = selectors(&sk, "I", &["a", "b"]);
    let sp = slice_pca(&sk, &i).unwrap();
    let x = selectors(&sk, "X", &["p", "q", "r"]);
    let kx = check_morphism(&sk, &x, &i, vec![0, 1, 1], None, &budget).unwrap();
    let kid = assemblies::identity(&sk, &i, &budget);
    let data = slicing::slice_equivalence(&sp, &[kx, kid], &budget).unwrap();
    pass &= data.verdict.is_proven();
    parts.push(format!("{} round trips {}", data.trips.len(), data.verdict.label()));
    outcome(pass, parts.join(", "))
}

fn density_checks() -> Outcome {
    let budget = Budget { samples: 12, ..b() };
    let mut pass = true;
    let mut parts = Vec::new();
    let sk = Pca::sk();
    let sp: SlicePca = slice_pca(&sk, &selectors(&sk, "I", &["a", "b"])).unwrap();
    let inc = density::slice_inclusion(&sp, &budget).unwrap();
    let diag = density::cocartesian(&RegFunctor::Diagonal { index: vec!["l".into(), "r".into()] }, &sk, &budget).unwrap();

    for m in [&diag, &inc] {
        let (gens, _) = morphisms::generators(&m.target);
        let (v, w) = density::check_qs(m, None, &gens, &budget);
        let w = w.unwrap();
        let replays = w.responders.iter().all(|r| density::replay_responder(m, &w.n, r, &budget).is_proven());
        pass &= v.is_proven() && replays && w.responders.len() == gens.len();
        parts.push(format!("{} qs {}", m.name, v.label()));
        let (cd, cv) = density::qs_to_cd(m, &w, &gens, &budget).unwrap();
        let (_, back) = density::cd_to_qs(m, &cd, &gens, &budget).unwrap();
        pass &= cv.holds() && back.is_proven();
        parts.push(format!("round trip {}/{}", cv.label(), back.label()));
    }

    let (gens, _) = morphisms::generators(&inc.target);
    let (_, qs) = density::check_qs(&inc, None, &gens, &budget);
    let (cd, _): (CdWitness, Verdict) = density::qs_to_cd(&inc, &qs.unwrap(), &gens, &budget).unwrap();
    let x = selectors(&sk, "X", &["x", "y"]);
    let one = selectors(&sk, "1", &["*"]);
    let mut y = selectors(&sk, "Y", &["p", "q", "r"]);
    y.index = vec![0, 0, 1];
    let data = density::right_adjoint(&inc, &cd, &[x.clone(), one.clone()], &[y.clone()], &budget).unwrap();
    // oracle: a function X → GY picks, per point, a section of Y over the
    // two-point index: 2 points over a times 1 over b
    let sections = 2u64;
    let exact = data.homs.iter().all(|h| {
        let xs = if h.x == x.name { x.len() } else { one.len() } as u32;
        h.functions == sections.pow(xs) && h.left == h.functions && h.right == h.left
    });
    pass &= data.verdict.is_proven() && exact;
    parts.push(format!("right adjoint {} on {} hom pairs", data.verdict.label(), data.homs.len()));
    let (dv, dw) = density::adjoint_implies_dense(&inc, &data, &gens, &budget);
    let dw = dw.unwrap();
    let replays = dw.responders.iter().all(|r| density::replay_responder(&inc, &dw.n, r, &budget).is_proven());
    pass &= dv.is_proven() && replays;
    parts.push(format!("recovered witness {}", dv.label()));
    outcome(pass, parts.join(", "))
}

fn fixtures_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn honesty() -> Outcome {
    let budget = b();
    let mut pass = true;
    let mut parts = Vec::new();
    let sk = Pca::sk();

    // checks over infinite domains
    let x = selectors(&sk, "X", &["a", "b"]);
    let mut infinite = vec![
        morphisms::identity(&sk, &budget).verdict(),
        axiom_suite(&sk, 50, &budget).verdict,
        axiom_suite(&make_backend(&BackendKind::GraphModel { level: DEFAULT_GRAPH_LEVEL }), 50, &budget).verdict,
        compiler_soundness(&sk.backend, &enumerate_terms(3, 2, true), 10, &budget).verdict,
    ];
    let mut rng = budget.rng("honesty");
    let full = RSet::full();
    infinite.push(full.apply(&full, &sk.backend, &budget, &mut rng).defined);
    let e = slot_elem(&sk.backend, Slot::K);
    let ka = ApplicativeMorphism::check("K·", &sk, &sk, RegFunctor::Identity, RelMap::Apply { elem: e }, None, &budget).unwrap();
    infinite.push(ka.conditions.total.clone().and(ka.conditions.tracked.clone()));
    let proven = infinite.iter().filter(|v| v.is_proven()).count();
    pass &= proven == 0;
    parts.push(format!("{}/{} infinite-domain checks Proven", proven, infinite.len()));

    // refutations from the library and from every fixture report
    let mut refuted: Vec<(Backend, Verdict)> = Vec::new();
    let y = selectors(&sk, "Y", &["u", "v"]);
    let n = assemblies::nabla("N", &["a", "b"]);
    refuted.push((sk.backend.clone(), check_morphism(&sk, &n, &y, vec![0, 1], None, &budget).unwrap().verdict));
    let one = selectors(&sk, "1", &["*"]);
    let e1 = check_morphism(&sk, &one, &y, vec![0], None, &budget).unwrap();
    refuted.push((sk.backend.clone(), assemblies::epi_check(&sk, &e1, None, &budget).0));
    let f = check_morphism(&sk, &x, &one, vec![0, 0], None, &budget).unwrap();
    refuted.push((sk.backend.clone(), assemblies::is_prone(&sk, &f, &budget).0));
    let r = assemblies::object_of_realizers(&["K", "S", "S K"].iter().map(|s| s.parse().unwrap()).collect::<Vec<Elem>>());
    refuted.push((sk.backend.clone(), assemblies::is_constant(&sk, &r, &budget).0));
    let base = rel();
    let n2 = slice_pca(&base, &slicing::nabla_two()).unwrap();
    refuted.push((base.backend.clone(), n2.membership(&"[K; S]".parse().unwrap(), &budget).0));
    for row in run_battery(&n2, &battery(&pool(), 2, 2), slicing::share_c, &budget) {
        refuted.push((base.backend.clone(), row.verdict));
    }

    let mut files: Vec<_> = std::fs::read_dir(fixtures_dir()).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    let commands = [Command::Check, Command::Synthesize, Command::Slice, Command::Product, Command::Density, Command::Replay];
    let mut identical = 0;
    let mut runs = 0;
    let (mut report_refs, mut report_ok) = (0, 0);
    for path in &files {
        let src = std::fs::read_to_string(path).unwrap();
        let wb = Workbench::load(&src, &budget).unwrap();
        for cmd in commands {
            let a = workbench::run(cmd, &wb, &budget, false);
            let again = workbench::run(cmd, &Workbench::load(&src, &budget).unwrap(), &budget, false);
            runs += 1;
            if a.to_json() == again.to_json() {
                identical += 1;
            }
            // replay against every backend the fixture names
            let bs: Vec<&Backend> = ["sk", "sk-rel1", "trivial"].iter().filter_map(|n| wb.pca(n)).map(|p| &p.backend).collect();
            for c in a.checks.iter().filter(|c| c.verdict.is_refuted()) {
                report_refs += 1;
                if bs.iter().any(|b| counterexample_replays(b, &c.verdict, budget.fuel)) {
                    report_ok += 1;
                }
            }
        }
    }
    let refs: Vec<&(Backend, Verdict)> = refuted.iter().filter(|(_, v)| v.is_refuted()).collect();
    let replay_ok = refs.iter().filter(|(b, v)| counterexample_replays(b, v, budget.fuel)).count();
    pass &= replay_ok == refs.len() && refs.len() >= 5 && report_ok == report_refs && report_refs > 0;
    parts.push(format!("{}/{} refutations replay", replay_ok + report_ok, refs.len() + report_refs));
    pass &= identical == runs;
    parts.push(format!("{identical}/{runs} seeded report pairs byte-identical"));
    outcome(pass, parts.join(", "))
}

fn counterexample_replays(b: &Backend, v: &Verdict, fuel: u64) -> bool {
    match v {
        Verdict::Refuted { counterexample } => counterexample.replay(b, fuel),
        _ => false,
    }
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 compiler soundness", compiler),
        ("2 weak PCA axioms", axioms),
        ("3 tracker synthesis", tracker_synthesis),
        ("4 categorical laws", categorical),
        ("5 filter algebra", filter_algebra),
        ("6 slicing", slices),
        ("7 density", density_checks),
        ("8 honesty", honesty),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let start = Instant::now();
        let o = f();
        let took = start.elapsed();
        let pass = o.pass && took < LIMIT;
        println!("{} criterion {name}: {} ({:.1}s)", if pass { "PASS" } else { "FAIL" }, o.summary, took.as_secs_f64());
        if !pass {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed: {failed:?}");
}
