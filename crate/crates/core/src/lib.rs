pub mod builder;
pub mod cli;
pub mod field;
pub mod matmul;
pub mod matrix;
pub mod nonlinear;
pub mod r1cs;
