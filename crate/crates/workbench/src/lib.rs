//! Exact p-adic workbench for overconvergent automorphic forms on the
//! definite quaternion algebra of discriminant 2: Hecke operators at Iwahori
//! level, characteristic power series, Newton-polygon slopes, slope
//! factorizations, and one-parameter weight families.

pub mod cli_workbench;
pub mod coeff_modules;
pub mod coset_geometry;
pub mod error;
pub mod hecke_engine;
pub mod padic_arith;
pub mod quaternion_arith;
pub mod spectral_family;
pub mod weight_space;
