pub mod attack;
pub mod builtin;
pub mod cli;
pub mod cointoss;
pub mod fidelity;
pub mod protocol;
pub mod qcore;
pub mod report;
pub mod schmidt;
