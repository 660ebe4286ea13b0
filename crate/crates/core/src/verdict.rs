use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::pca::rset::RSet;
use crate::pca::{AppOutcome, Backend, Elem};
use crate::terms::{eval_closed, Term};

/// Outcome of any check.
///
/// `Proven` is reserved for exhaustive enumeration of a finite domain,
/// certificate replay, or a symbolic argument over generic elements.
/// Sampling an infinite domain can at best give `Evidence`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Proven,
    Evidence { checked: u64 },
    Refuted { counterexample: Counterexample },
    Unknown { budget: String },
}

/// A concrete reason a check failed, in a form that can be re-executed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Counterexample {
    /// Both closed terms evaluate, to different values.
    Mismatch { lhs: Term, rhs: Term },
    /// The closed term evaluates to a value outside `target`.
    NotIn { term: Term, target: RSet },
    /// The closed term is certified undefined.
    Undefined { term: Term },
    /// No element of `set` has all its atoms in `allowed`, so `set` misses
    /// every filter contained in the sets meeting those sections.
    OutsideSections { set: RSet, allowed: Vec<u32> },
    /// Two finite structures that should coincide and do not.
    Unequal { what: String, left: String, right: String },
    /// Two source fibers share `shared`, but the arrow sends them to
    /// disjoint finite target fibers, so no realizer can track it.
    Untrackable { shared: Elem, sources: Vec<RSet>, targets: Vec<RSet> },
    /// Finite sets with no common member.
    Disjoint { left: RSet, right: RSet },
    /// `witness` lies in `left` but not in `right`.
    SetsDiffer { left: RSet, right: RSet, witness: Elem },
    /// A variable assignment at which a sequent's hypotheses hold and its
    /// conclusion fails. Replays against the sequent, not a backend.
    Assignment { bindings: BTreeMap<String, u64> },
    /// Free-form; does not replay.
    Message { text: String },
}

impl Verdict {
    pub fn unknown(why: impl Into<String>) -> Verdict {
        Verdict::Unknown { budget: why.into() }
    }

    pub fn evidence(checked: u64) -> Verdict {
        Verdict::Evidence { checked }
    }

    pub fn refuted(cx: Counterexample) -> Verdict {
        Verdict::Refuted { counterexample: cx }
    }

    pub fn message(text: impl Into<String>) -> Verdict {
        Verdict::refuted(Counterexample::Message { text: text.into() })
    }

    pub fn is_proven(&self) -> bool {
        matches!(self, Verdict::Proven)
    }

    pub fn is_refuted(&self) -> bool {
        matches!(self, Verdict::Refuted { .. })
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self, Verdict::Unknown { .. })
    }

    /// Proven or Evidence.
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Proven | Verdict::Evidence { .. })
    }

    /// Conjunction: a refutation wins, then unknown, then evidence.
    pub fn and(self, other: Verdict) -> Verdict {
        use Verdict::*;
        match (self, other) {
            (r @ Refuted { .. }, _) | (_, r @ Refuted { .. }) => r,
            (u @ Unknown { .. }, _) | (_, u @ Unknown { .. }) => u,
            (Evidence { checked: a }, Evidence { checked: b }) => Evidence { checked: a + b },
            (e @ Evidence { .. }, Proven) | (Proven, e @ Evidence { .. }) => e,
            (Proven, Proven) => Proven,
        }
    }

    pub fn all(vs: impl IntoIterator<Item = Verdict>) -> Verdict {
        vs.into_iter().fold(Verdict::Proven, Verdict::and)
    }

    /// Downgrade a Proven to Evidence (used when a proof leaned on sampling).
    pub fn weaken(self, checked: u64) -> Verdict {
        match self {
            Verdict::Proven => Verdict::Evidence { checked },
            v => v,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Proven => "PROVEN",
            Verdict::Evidence { .. } => "EVIDENCE",
            Verdict::Refuted { .. } => "REFUTED",
            Verdict::Unknown { .. } => "UNKNOWN",
        }
    }
}

impl Counterexample {
    /// Re-execute the counterexample on `b`; true when it still refutes.
    pub fn replay(&self, b: &Backend, fuel: u64) -> bool {
        match self {
            Counterexample::Mismatch { lhs, rhs } => matches!(
                (eval_closed(b, lhs, fuel), eval_closed(b, rhs, fuel)),
                (Ok(AppOutcome::Value(x)), Ok(AppOutcome::Value(y))) if x != y
            ),
            Counterexample::NotIn { term, target } => {
                matches!(eval_closed(b, term, fuel), Ok(AppOutcome::Value(v)) if !target.member(b, &v))
            }
            Counterexample::Undefined { term } => {
                matches!(eval_closed(b, term, fuel), Ok(AppOutcome::UndefinedCertified))
            }
            Counterexample::OutsideSections { set, allowed } => crate::pca::filter::outside_sections(set, b, allowed),
            Counterexample::Unequal { left, right, .. } => left != right,
            Counterexample::Untrackable { shared, sources, targets } => {
                sources.iter().all(|s| s.member(b, shared)) && targets.len() == 2 && disjoint(b, &targets[0], &targets[1])
            }
            Counterexample::Disjoint { left, right } => disjoint(b, left, right),
            Counterexample::SetsDiffer { left, right, witness } => left.member(b, witness) && !right.member(b, witness),
            Counterexample::Assignment { .. } | Counterexample::Message { .. } => false,
        }
    }
}

/// Both finite and without a common member.
pub fn disjoint(b: &Backend, x: &RSet, y: &RSet) -> bool {
    match (x.finite(), y.finite()) {
        (Some(xs), Some(_)) => xs.iter().all(|e| !y.member(b, e)),
        _ => false,
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Proven => write!(f, "PROVEN"),
            Verdict::Evidence { checked } => write!(f, "EVIDENCE ({checked} checked)"),
            Verdict::Refuted { counterexample } => write!(f, "REFUTED: {counterexample}"),
            Verdict::Unknown { budget } => write!(f, "UNKNOWN ({budget})"),
        }
    }
}

impl std::fmt::Display for Counterexample {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Counterexample::Mismatch { lhs, rhs } => write!(f, "{lhs} and {rhs} differ"),
            Counterexample::NotIn { term, target } => write!(f, "{term} lands outside {target}"),
            Counterexample::Undefined { term } => write!(f, "{term} is undefined"),
            Counterexample::OutsideSections { set, allowed } => {
                write!(f, "{set} has no element with atoms in {allowed:?}")
            }
            Counterexample::Unequal { what, left, right } => write!(f, "{what}: {left} differs from {right}"),
            Counterexample::Untrackable { shared, sources, targets } => write!(
                f,
                "{shared} lies in {} and {} whose images must land in disjoint {} and {}",
                sources[0], sources[1], targets[0], targets[1]
            ),
            Counterexample::Disjoint { left, right } => write!(f, "{left} and {right} are disjoint"),
            Counterexample::SetsDiffer { left, right, witness } => write!(f, "{witness} is in {left} but not in {right}"),
            Counterexample::Assignment { bindings } => {
                let xs: Vec<String> = bindings.iter().map(|(k, v)| format!("{k}={v}")).collect();
                write!(f, "sequent fails at {}", xs.join(", "))
            }
            Counterexample::Message { text } => write!(f, "{text}"),
        }
    }
}
