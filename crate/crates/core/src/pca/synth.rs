//! Certified realizers from terms: the set a closed term denotes, with a
//! filter certificate assembled from the certificates of its parts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::filter::Cert;
use super::kit::Slot;
use super::rset::RSet;
use super::{Budget, Pca};
use crate::terms::{Konst, Term};
use crate::verdict::Verdict;

/// A realizer set together with evidence that it lies in the filter.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Member {
    pub set: RSet,
    pub cert: Option<Cert>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Synth {
    /// Source form, parseable: `\\x y. body` for compiled abstractions.
    pub source: String,
    pub set: RSet,
    pub cert: Option<Cert>,
    /// Definedness of every application along the way.
    pub defined: Verdict,
}

impl Synth {
    pub fn member(&self) -> Member {
        Member { set: self.set.clone(), cert: self.cert.clone() }
    }
}

impl Pca {
    /// Membership certificate by search.
    pub fn certify(&self, u: &RSet, budget: &Budget) -> Member {
        let mut rng = budget.rng(&format!("certify/{u}"));
        let (_, cert) = self.filter.search(&self.backend, u, budget, &mut rng);
        Member { set: u.clone(), cert }
    }

    pub fn replay_member(&self, m: &Member, budget: &Budget) -> Verdict {
        match &m.cert {
            Some(c) => {
                let mut rng = budget.rng(&format!("replay/{}", m.set));
                self.filter.replay(&self.backend, &m.set, c, budget, &mut rng)
            }
            None => Verdict::unknown("no filter certificate"),
        }
    }

    /// Evaluate a closed term at the level of sets. Variables are looked up
    /// in `env`; slot constants come from the kit; other constants are
    /// certified by search. `None` when some image is not known exactly.
    pub fn synthesize(&self, t: &Term, env: &BTreeMap<String, Member>, budget: &Budget) -> Option<Synth> {
        let (set, cert, defined) = self.synth_go(t, env, budget)?;
        Some(Synth { source: t.to_string(), set, cert, defined })
    }

    fn synth_go(&self, t: &Term, env: &BTreeMap<String, Member>, budget: &Budget) -> Option<(RSet, Option<Cert>, Verdict)> {
        let b = &self.backend;
        match t {
            Term::Var(v) => env.get(v).map(|m| (m.set.clone(), m.cert.clone(), Verdict::Proven)),
            Term::Const(Konst::Slot(s)) => {
                let ks = self.kit.get(*s);
                Some((ks.set.clone(), ks.cert.clone(), Verdict::Proven))
            }
            Term::Const(Konst::Elem(e)) => {
                let m = self.certify(&RSet::single(e.clone()), budget);
                Some((m.set, m.cert, Verdict::Proven))
            }
            Term::Const(Konst::Set(u)) => {
                let m = self.certify(u, budget);
                Some((m.set, m.cert, Verdict::Proven))
            }
            Term::App(l, r) => {
                let (ul, cl, dl) = self.synth_go(l, env, budget)?;
                let (ur, cr, dr) = self.synth_go(r, env, budget)?;
                let mut rng = budget.rng(&format!("synth/{t}"));
                let out = ul.apply(&ur, b, budget, &mut rng);
                let image = out.image?;
                let cert = match (cl, cr) {
                    (Some(cl), Some(cr)) => self.filter.cert_app(b, &cl, &ul, &cr, &ur, budget, &mut rng),
                    _ => None,
                };
                Some((image, cert, dl.and(dr).and(out.defined)))
            }
        }
    }

    /// Compile `λ vars. body` and synthesize it.
    pub fn synthesize_lambda(
        &self,
        vars: &[&str],
        body: &Term,
        env: &BTreeMap<String, Member>,
        budget: &Budget,
    ) -> Option<Synth> {
        let compiled = crate::terms::abstract_all(vars, body);
        let mut s = self.synthesize(&compiled, env, budget)?;
        s.source = format!("\\{}. {}", vars.join(" "), body);
        Some(s)
    }

    /// The kit member for a slot.
    pub fn slot_member(&self, s: Slot) -> Member {
        let ks = self.kit.get(s);
        Member { set: ks.set.clone(), cert: ks.cert.clone() }
    }
}
