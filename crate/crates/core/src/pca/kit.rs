//! Combinator kits: k, s and the derived i, k̄, pairing and unpairing.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::filter::{Cert, Filter};
use super::graph::{self, Table};
use super::rset::RSet;
use super::sk::Sk;
use super::{AppOutcome, Backend, Budget, Elem};
use crate::terms::{self, parse_term, Term};
use crate::verdict::Verdict;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slot {
    K,
    S,
    I,
    Kbar,
    P,
    P0,
    P1,
}

impl Slot {
    pub const ALL: [Slot; 7] = [Slot::K, Slot::S, Slot::I, Slot::Kbar, Slot::P, Slot::P0, Slot::P1];

    pub fn name(self) -> &'static str {
        match self {
            Slot::K => "k",
            Slot::S => "s",
            Slot::I => "i",
            Slot::Kbar => "kbar",
            Slot::P => "p",
            Slot::P0 => "p0",
            Slot::P1 => "p1",
        }
    }

    pub fn from_name(n: &str) -> Option<Slot> {
        Slot::ALL.into_iter().find(|s| s.name() == n)
    }

    /// Closed term over k and s.
    pub fn derivation(self) -> Term {
        let src = match self {
            Slot::K => "k",
            Slot::S => "s",
            Slot::I => "\\x. x",
            Slot::Kbar => "\\x y. y",
            Slot::P => "\\x y z. z x y",
            Slot::P0 => "\\x. x k",
            Slot::P1 => "\\x. x (\\x y. y)",
        };
        parse_term(src).expect("kit derivation")
    }

    /// The behaviour the slot must realize.
    pub fn spec(self) -> (Vec<&'static str>, Term) {
        let (vars, body): (&[&str], &str) = match self {
            Slot::K => (&["x", "y"], "x"),
            Slot::S => (&["x", "y", "z"], "x z (y z)"),
            Slot::I => (&["x"], "x"),
            Slot::Kbar => (&["x", "y"], "y"),
            Slot::P => (&["x", "y", "z"], "z x y"),
            Slot::P0 => (&["x"], "x k"),
            Slot::P1 => (&["x"], "x #kbar"),
        };
        (vars.to_vec(), parse_term(body).expect("kit spec"))
    }

    fn table(self) -> Table {
        match self {
            Slot::K => Table::K,
            Slot::S => Table::S,
            Slot::I => Table::I,
            Slot::Kbar => Table::Kbar,
            Slot::P => Table::P,
            Slot::P0 => Table::P0,
            Slot::P1 => Table::P1,
        }
    }
}

fn sk_slot(s: Slot) -> Sk {
    static CACHE: OnceLock<Vec<Sk>> = OnceLock::new();
    let all = CACHE.get_or_init(|| {
        Slot::ALL
            .iter()
            .map(|s| {
                let t = compile_to_sk(&s.derivation());
                t.normalize(&mut 10_000).expect("kit derivations normalize")
            })
            .collect()
    });
    all[s as usize].clone()
}

fn compile_to_sk(t: &Term) -> Sk {
    match t {
        Term::App(l, r) => Sk::app(compile_to_sk(l), compile_to_sk(r)),
        Term::Const(terms::Konst::Slot(Slot::K)) => Sk::K,
        Term::Const(terms::Konst::Slot(Slot::S)) => Sk::S,
        _ => panic!("kit derivations are closed over k and s"),
    }
}

/// The element a slot denotes in a backend.
pub fn slot_elem(b: &Backend, s: Slot) -> Elem {
    match b {
        Backend::Trivial => Elem::Unit,
        Backend::Sk { .. } => Elem::Sk(sk_slot(s)),
        Backend::Graph { level } => Elem::Graph(graph::table(s.table(), *level)),
        Backend::Product { parts } => Elem::Tuple(parts.iter().map(|p| slot_elem(p, s)).collect()),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KitSlot {
    pub slot: Slot,
    pub set: RSet,
    pub derivation: Term,
    /// Filter membership of `set`; absent when the filter search gave up.
    pub cert: Option<Cert>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Kit {
    pub k: KitSlot,
    pub s: KitSlot,
    pub i: KitSlot,
    pub kbar: KitSlot,
    pub p: KitSlot,
    pub p0: KitSlot,
    pub p1: KitSlot,
}

impl Kit {
    pub fn build(b: &Backend, filter: &Filter) -> Kit {
        let budget = Budget::default();
        let mk = |s: Slot| {
            let set = RSet::single(slot_elem(b, s));
            let mut rng = budget.rng(&format!("kit/{}", s.name()));
            let (_, cert) = filter.search(b, &set, &budget, &mut rng);
            KitSlot { slot: s, set, derivation: s.derivation(), cert }
        };
        Kit {
            k: mk(Slot::K),
            s: mk(Slot::S),
            i: mk(Slot::I),
            kbar: mk(Slot::Kbar),
            p: mk(Slot::P),
            p0: mk(Slot::P0),
            p1: mk(Slot::P1),
        }
    }

    pub fn get(&self, s: Slot) -> &KitSlot {
        match s {
            Slot::K => &self.k,
            Slot::S => &self.s,
            Slot::I => &self.i,
            Slot::Kbar => &self.kbar,
            Slot::P => &self.p,
            Slot::P0 => &self.p0,
            Slot::P1 => &self.p1,
        }
    }

    pub fn elem(&self, b: &Backend, s: Slot) -> Elem {
        self.get(s).set.inhabitant(b)
    }

    /// Re-check each slot: the derivation evaluates to the slot element, the
    /// element realizes its specification, and the filter certificate replays.
    pub fn replay(&self, b: &Backend, filter: &Filter, budget: &Budget) -> Vec<(Slot, Verdict)> {
        Slot::ALL
            .iter()
            .map(|&s| {
                let ks = self.get(s);
                let mut rng = budget.rng(&format!("kit-replay/{}", s.name()));
                let derived = match terms::eval_closed(b, &ks.derivation, budget.fuel) {
                    Ok(AppOutcome::Value(v)) if ks.set.member(b, &v) => Verdict::Proven,
                    Ok(AppOutcome::Value(_)) if matches!(b, Backend::Graph { .. }) => {
                        Verdict::unknown("graph kit is a level truncation, not the compiled derivation")
                    }
                    Ok(AppOutcome::Value(v)) => Verdict::refuted(crate::verdict::Counterexample::NotIn {
                        term: Term::elem(v),
                        target: ks.set.clone(),
                    }),
                    Ok(_) => Verdict::unknown("derivation did not evaluate within fuel"),
                    Err(e) => Verdict::unknown(e.to_string()),
                };
                let (vars, body) = s.spec();
                let realized = terms::realizes(b, &ks.set, &vars, &body, budget, &mut rng)
                    .unwrap_or_else(|e| Verdict::unknown(e.to_string()));
                let member = match &ks.cert {
                    Some(c) => filter.replay(b, &ks.set, c, budget, &mut rng),
                    None => Verdict::unknown("no filter certificate"),
                };
                (s, derived.and(realized).and(member))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sk_kit_replays() {
        let b = Backend::sk(0);
        let kit = Kit::build(&b, &Filter::Maximal);
        for (s, v) in kit.replay(&b, &Filter::Maximal, &Budget::default()) {
            assert!(v.is_proven(), "{s:?}: {v}");
        }
    }

    #[test]
    fn relative_kit_replays() {
        let b = Backend::sk(2);
        let f = Filter::Sections { atoms: vec![] };
        let kit = Kit::build(&b, &f);
        for (s, v) in kit.replay(&b, &f, &Budget::default()) {
            assert!(v.is_proven(), "{s:?}: {v}");
        }
    }

    #[test]
    fn trivial_kit_is_unit() {
        let kit = Kit::build(&Backend::Trivial, &Filter::Maximal);
        assert_eq!(kit.elem(&Backend::Trivial, Slot::P), Elem::Unit);
    }

    #[test]
    fn identity_is_skk() {
        assert_eq!(sk_slot(Slot::I).to_string(), "S K K");
        assert_eq!(sk_slot(Slot::Kbar).to_string(), "K (S K K)");
    }
}
