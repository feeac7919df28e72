//! Driven qubit-resonator dynamics: Hamiltonians, Floquet solutions,
//! closed-system probabilities and Floquet-Born-Markov dissipation.

pub mod bath;
pub mod fbm;
pub mod floquet;
pub mod hilbert;
pub mod linalg;
pub mod special;
pub mod unitary;
