//! Mapping molecular electronic-structure Hamiltonians onto Ising
//! optimization problems, solved with the expanded-qubit (XBK) and
//! qubit-coupled-cluster (QCC) methods.

pub mod molham;
pub mod pauli;
pub mod ising;
pub mod xbk;
pub mod qcc;
pub mod cli;

/// Coefficients with magnitude below this are treated as zero.
pub const ZERO_TOL: f64 = 1e-12;
