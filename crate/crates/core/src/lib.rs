//! Exact computations with the Hochschild, singular Hochschild and Goresky-Hingston
//! structures of finite dg Frobenius algebras over the rationals.

pub mod frobenius;
pub mod linalg;
pub mod hochschild;
pub mod products;
pub mod signs;
pub mod tate;
pub mod transport;
pub mod checks;
pub mod workbench;
