//! Truncated p-adic power series rings, their Frobenius lifts and the
//! cyclotomic action.

pub mod ctx;
pub mod elements;
pub mod series;
pub mod subst;

pub use ctx::{Lift, PrecisionCtx};
pub use elements::FilWitness;
pub use series::{ScriptSeries, Series, SigmaSeries};
pub use subst::{Chi, RingSubst};

#[cfg(test)]
mod tests;
