//! Restricted Boltzmann machines and their unrestricted multi-layer variant
//! written as constrained tensor networks, evaluated exactly on the periodic
//! transverse-field Ising chain.
//!
//! * [`lattice`]: the chain, its free-fermion solution and exact diagonalization.
//! * [`ansatz`]: Boltzmann-machine amplitudes and the tensors that reproduce them.
//! * [`comps`]: ring MPS contraction, energies and correlators.
//! * [`optim`]: variational minimization.
//! * [`scaling`]: power-law fits of the error against system size.

pub mod ansatz;
pub mod comps;
pub mod error;
pub mod lattice;
pub mod optim;
pub mod scaling;

pub use error::{Error, Result};

macro_rules! book_chapters {
    ($($name:ident => $file:literal),* $(,)?) => {
        $(
            #[cfg(doctest)]
            #[doc = include_str!(concat!("../../../book/src/", $file))]
            mod $name {}
        )*
    };
}

book_chapters! {
    book_introduction => "introduction.md",
    book_ising_chain => "ising_chain.md",
    book_boltzmann_states => "boltzmann_states.md",
    book_constrained_networks => "constrained_networks.md",
    book_transfer_matrices => "transfer_matrices.md",
    book_optimization => "optimization.md",
    book_scaling => "scaling.md",
    book_two_dimensions => "two_dimensions.md",
    book_command_line => "command_line.md",
}
