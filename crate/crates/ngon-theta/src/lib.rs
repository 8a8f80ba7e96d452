//! File formats, a rayon-backed executor and the `ngon-theta` command line
//! on top of `ngon-theta-core`.

pub mod cli;
pub mod exec;
pub mod io;

pub use exec::Pool;
