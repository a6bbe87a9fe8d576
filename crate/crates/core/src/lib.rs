#![no_std]
extern crate alloc;

pub mod bessel;
pub mod critlen;
pub mod determinants;
pub mod dd;
pub mod error;
pub mod eval;
pub mod grid;
pub mod identities;
pub mod lu;
pub mod poly;
pub mod quad;
pub mod roots;
pub mod trigpoly;
