use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{PauliError, PauliSum, PauliWord};
use crate::molham::{FermionOperator, LadderOp};

/// Fermion-to-qubit encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Encoding {
    JordanWigner,
    #[default]
    BravyiKitaev,
}

impl Encoding {
    pub fn transform(self, f: &FermionOperator, n_modes: usize) -> Result<PauliSum, PauliError> {
        match self {
            Encoding::JordanWigner => jordan_wigner(f, n_modes),
            Encoding::BravyiKitaev => bravyi_kitaev(f, n_modes),
        }
    }
}

impl std::str::FromStr for Encoding {
    type Err = PauliError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "jw" | "jordan-wigner" => Ok(Encoding::JordanWigner),
            "bk" | "bravyi-kitaev" => Ok(Encoding::BravyiKitaev),
            other => Err(PauliError::Parse(format!("unknown encoding `{other}`"))),
        }
    }
}

type Image = [(Complex64, PauliWord); 2];

/// `a†_j → (X_j − iY_j)/2 · Z_{<j}`
pub fn jordan_wigner(f: &FermionOperator, n_modes: usize) -> Result<PauliSum, PauliError> {
    transform_with(f, n_modes, |op| {
        let below = (1u64 << op.mode) - 1;
        let bit = 1u64 << op.mode;
        let x = PauliWord::from_masks(n_modes, bit, below);
        let y = PauliWord::from_masks(n_modes, bit, below | bit);
        let s = if op.dagger { -1.0 } else { 1.0 };
        [(Complex64::new(0.5, 0.0), x), (Complex64::new(0.0, 0.5 * s), y)]
    })
}

fn lowbit(i: usize) -> usize {
    i & i.wrapping_neg()
}

/// Fenwick-tree index sets for mode `j` on `n` modes: (update, parity, remainder)
/// as qubit bitmasks.
pub(crate) fn bk_sets(j: usize, n: usize) -> (u64, u64, u64) {
    let mut update = 0u64;
    let mut i = j + 1;
    i += lowbit(i);
    while i <= n {
        update |= 1 << (i - 1);
        i += lowbit(i);
    }
    let mut parity = 0u64;
    let mut k = j;
    while k > 0 {
        parity |= 1 << (k - 1);
        k -= lowbit(k);
    }
    let mut flip = 0u64;
    let node = j + 1;
    let mut k = j;
    while k > node - lowbit(node) {
        flip |= 1 << (k - 1);
        k -= lowbit(k);
    }
    (update, parity, parity & !flip)
}

/// `a†_j → ½(X_U X_j Z_P − i X_U Y_j Z_R)` over the Fenwick-tree encoding.
pub fn bravyi_kitaev(f: &FermionOperator, n_modes: usize) -> Result<PauliSum, PauliError> {
    transform_with(f, n_modes, |op| {
        let (update, parity, rem) = bk_sets(op.mode, n_modes);
        let bit = 1u64 << op.mode;
        let x = PauliWord::from_masks(n_modes, update | bit, parity);
        let y = PauliWord::from_masks(n_modes, update | bit, rem | bit);
        let s = if op.dagger { -1.0 } else { 1.0 };
        [(Complex64::new(0.5, 0.0), x), (Complex64::new(0.0, 0.5 * s), y)]
    })
}

fn transform_with(
    f: &FermionOperator,
    n_modes: usize,
    image: impl Fn(LadderOp) -> Image,
) -> Result<PauliSum, PauliError> {
    if n_modes > super::MAX_QUBITS {
        return Err(PauliError::Capacity(n_modes));
    }
    if f.mode_bound() > n_modes {
        return Err(PauliError::Domain(format!(
            "operator touches mode {} but only {n_modes} modes requested",
            f.mode_bound() - 1
        )));
    }
    let mut cache: HashMap<LadderOp, Image> = HashMap::new();
    let mut out = PauliSum::new(n_modes);
    let mut partial: Vec<(Complex64, PauliWord)> = Vec::new();
    let mut next = Vec::new();
    for (ops, coeff) in f.terms() {
        partial.clear();
        partial.push((*coeff, PauliWord::identity(n_modes)));
        for op in ops {
            let img = *cache.entry(*op).or_insert_with(|| image(*op));
            next.clear();
            for (c, w) in &partial {
                for (ci, wi) in &img {
                    let (phase, prod) = w.mul_unchecked(wi);
                    next.push((c * ci * phase.to_complex(), prod));
                }
            }
            std::mem::swap(&mut partial, &mut next);
        }
        for (c, w) in partial.drain(..) {
            out.add_term(w, c);
        }
    }
    Ok(out.simplify())
}
