use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::PauliError;

/// Maximum qubit count a [`PauliWord`] can carry.
pub const MAX_QUBITS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Power of `i`, i.e. one of `1, i, -1, -i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(k: u32) -> Self {
        Phase((k % 4) as u8)
    }

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }
}

/// Tensor product of single-qubit Paulis in symplectic form.
///
/// Qubit `q` is X when only bit `q` of `x` is set, Z when only bit `q` of `z`
/// is set, and Y when both are. The text form lists qubit 0 first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PauliWord {
    x: u64,
    z: u64,
    n: usize,
}

impl PauliWord {
    pub fn identity(n: usize) -> Self {
        assert!(n <= MAX_QUBITS, "at most {MAX_QUBITS} qubits supported");
        Self { x: 0, z: 0, n }
    }

    pub fn from_masks(n: usize, x: u64, z: u64) -> Self {
        assert!(n <= MAX_QUBITS, "at most {MAX_QUBITS} qubits supported");
        let keep = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        Self { x: x & keep, z: z & keep, n }
    }

    pub fn single(n: usize, qubit: usize, p: Pauli) -> Self {
        let mut w = Self::identity(n);
        w.set(qubit, p);
        w
    }

    pub fn from_paulis(paulis: &[Pauli]) -> Self {
        let mut w = Self::identity(paulis.len());
        for (q, p) in paulis.iter().enumerate() {
            w.set(q, *p);
        }
        w
    }

    pub fn set(&mut self, qubit: usize, p: Pauli) {
        assert!(qubit < self.n);
        let (x, z) = p.bits();
        let bit = 1u64 << qubit;
        self.x = if x { self.x | bit } else { self.x & !bit };
        self.z = if z { self.z | bit } else { self.z & !bit };
    }

    pub fn get(&self, qubit: usize) -> Pauli {
        Pauli::from_bits((self.x >> qubit) & 1 == 1, (self.z >> qubit) & 1 == 1)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Only I and Z factors.
    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    pub fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// Product without the qubit-count check.
    pub(crate) fn mul_unchecked(&self, other: &Self) -> (Phase, PauliWord) {
        // P(x, z) = i^{|x∧z|} X^x Z^z, and Z^a X^b = (-1)^{|a∧b|} X^b Z^a.
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let k = self.y_count() + other.y_count() + 2 * (self.z & other.x).count_ones() + 3 * (x & z).count_ones();
        (Phase::from_power(k), PauliWord { x, z, n: self.n })
    }

    /// `self · other = phase · word`.
    pub fn multiply(&self, other: &Self) -> Result<(Phase, PauliWord), PauliError> {
        if self.n != other.n {
            return Err(PauliError::QubitMismatch(self.n, other.n));
        }
        Ok(self.mul_unchecked(other))
    }

    /// Order by the text form with I < X < Y < Z, qubit 0 most significant.
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        // per-qubit rank code: high bit z, low bit x^z
        self.n.cmp(&other.n).then_with(|| {
            let lo_a = self.x ^ self.z;
            let lo_b = other.x ^ other.z;
            let diff = (self.z ^ other.z) | (lo_a ^ lo_b);
            if diff == 0 {
                return Ordering::Equal;
            }
            let q = diff.trailing_zeros();
            let code = |z: u64, lo: u64| (((z >> q) & 1) << 1) | ((lo >> q) & 1);
            code(self.z, lo_a).cmp(&code(other.z, lo_b))
        })
    }
}

impl PartialOrd for PauliWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PauliWord {
    fn cmp(&self, other: &Self) -> Ordering {
        self.lex_cmp(other)
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n {
            write!(f, "{}", self.get(q).symbol())?;
        }
        Ok(())
    }
}

impl TryFrom<String> for PauliWord {
    type Error = PauliError;

    fn try_from(s: String) -> Result<Self, PauliError> {
        s.parse()
    }
}

impl From<PauliWord> for String {
    fn from(w: PauliWord) -> String {
        w.to_string()
    }
}

impl FromStr for PauliWord {
    type Err = PauliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let paulis = s
            .chars()
            .map(|c| match c {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(PauliError::Parse(format!("bad Pauli symbol `{other}` in `{s}`"))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if paulis.len() > MAX_QUBITS {
            return Err(PauliError::Parse(format!("word longer than {MAX_QUBITS} qubits")));
        }
        Ok(PauliWord::from_paulis(&paulis))
    }
}
