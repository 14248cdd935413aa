//! Explicit edge colorings of Schreier graphs of marked abelian groups on
//! finite tori.

pub mod abelian;
pub mod coloring;
pub mod group;
pub mod io;
pub mod line;
pub mod oracle;
pub mod vizing;
pub mod witness;
