//! Workbench for relative partial combinatory algebras over regular base
//! categories: realizer sets, filters, assemblies, applicative morphisms,
//! slicing and density checks.

pub mod assemblies;
pub mod backend;
pub mod density;
pub mod morphisms;
pub mod pca;
pub mod slicing;
pub mod terms;
pub mod verdict;
pub mod workbench;

pub use backend::{Obj, Rel, World};
pub use pca::filter::{Cert, Filter};
pub use pca::kit::{Kit, Slot};
pub use pca::rset::RSet;
pub use pca::{Backend, Budget, Elem, Pca};
pub use terms::Term;
pub use verdict::{Counterexample, Verdict};
