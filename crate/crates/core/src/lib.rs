//! Entanglement witnesses for continuous-variable quantum states, built from
//! second moments only.
//!
//! The library takes a covariance matrix together with a partition of its
//! modes into parties and computes the optimal linear witness against full
//! separability ([`witnessprob::fully_wit`]) or against bi-separability
//! ([`witnessprob::multi_wit`]) by solving a semidefinite program with the
//! dense interior-point solver in [`sdpcore`]. Returned witnesses are checked
//! against a closed-form classification ([`witnessprob::validate_witness`]),
//! and [`product`] evaluates the strictly stronger curved criteria derived
//! from any linear witness.

pub mod product;
pub mod sdpcore;
pub mod states;
pub mod symplectic;
pub mod witnessprob;

mod dd;
