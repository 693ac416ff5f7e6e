//! Exact certificate arithmetic and the metastability / rate constructions.

pub mod bundle;
pub mod certificate;
pub mod counter;
pub mod ctx;
pub mod extnat;
pub mod general;
pub mod hadamard;
pub mod hilbert;
pub mod interval;
pub mod lemmas;
pub mod rational;

pub use bundle::{ErrorRate, FejerModulus, LiminfBound, ModulusBundle, NatOfReal, Perturbation, PerturbationPair, RealMap};
pub use certificate::Certificate;
pub use counter::{Counterfunction, CounterfunctionSpec};
pub use ctx::{Ctx, Rounding};
pub use extnat::{Budget, ExtNat};
pub use interval::Interval;
pub use rational::Rat;
