//! Tensor-power multiplicities for `USp(2g)`.
//!
//! `c_{λ,n}` is the multiplicity of the irreducible `V_λ` in `V^{⊗n}`, where
//! `V` is the standard `2g`-dimensional representation. Tensoring with `V`
//! moves one box: `V_λ ⊗ V = ⊕ V_μ` over all `μ` obtained from `λ` by adding
//! or removing a single box with at most `g` rows. Iterating that rule from
//! the trivial representation gives every row of the table exactly.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::partition::Partition;

/// One row `λ ↦ c_{λ,n}` of a multiplicity table.
pub type MultiplicityRow = BTreeMap<Partition, BigUint>;

/// Tensors a row once more with the standard representation.
pub fn tensor_step(row: &MultiplicityRow, g: usize) -> Result<MultiplicityRow> {
    if g == 0 {
        return Err(Error::GenusOutOfRange { g, reason: "rank must be positive" });
    }
    let mut next = MultiplicityRow::new();
    for (lambda, mult) in row {
        lambda.check_rank(g)?;
        if mult.is_zero() {
            continue;
        }
        for mu in lambda.add_box(g).into_iter().chain(lambda.remove_box()) {
            *next.entry(mu).or_insert_with(BigUint::zero) += mult;
        }
    }
    Ok(next)
}

/// Rows `n = 0..=n_max` of `c_{λ,n}` for a fixed rank `g`.
#[derive(Clone, Debug)]
pub struct MultiplicityTable {
    g: usize,
    rows: Vec<MultiplicityRow>,
}

impl MultiplicityTable {
    pub fn build(g: usize, n_max: usize) -> Result<Self> {
        let mut table = MultiplicityTable {
            g,
            rows: vec![MultiplicityRow::from([(Partition::empty(), BigUint::one())])],
        };
        if g == 0 {
            return Err(Error::GenusOutOfRange { g, reason: "rank must be positive" });
        }
        table.extend_to(n_max)?;
        Ok(table)
    }

    pub fn extend_to(&mut self, n_max: usize) -> Result<()> {
        while self.rows.len() <= n_max {
            let next = tensor_step(self.rows.last().expect("row 0 present"), self.g)?;
            self.rows.push(next);
        }
        Ok(())
    }

    pub fn g(&self) -> usize {
        self.g
    }

    pub fn n_max(&self) -> usize {
        self.rows.len() - 1
    }

    pub fn row(&self, n: usize) -> Option<&MultiplicityRow> {
        self.rows.get(n)
    }

    /// `c_{λ,n}`; zero for partitions absent from the row.
    pub fn get(&self, n: usize, lambda: &Partition) -> Option<BigUint> {
        self.rows
            .get(n)
            .map(|row| row.get(lambda).cloned().unwrap_or_else(BigUint::zero))
    }
}

fn cache() -> &'static Mutex<HashMap<usize, Arc<MultiplicityTable>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<MultiplicityTable>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Shared table for rank `g` covering at least `n_max`, built on first use.
pub fn shared_table(g: usize, n_max: usize) -> Result<Arc<MultiplicityTable>> {
    let mut guard = cache().lock().unwrap_or_else(|e| e.into_inner());
    if let Some(t) = guard.get(&g) {
        if t.n_max() >= n_max {
            return Ok(Arc::clone(t));
        }
    }
    let table = match guard.get(&g) {
        Some(t) => {
            let mut t = (**t).clone();
            t.extend_to(n_max)?;
            t
        }
        None => MultiplicityTable::build(g, n_max)?,
    };
    let table = Arc::new(table);
    guard.insert(g, Arc::clone(&table));
    Ok(table)
}

/// `c_{λ,n}` for `USp(2g)`.
pub fn multiplicity(g: usize, n: usize, lambda: &Partition) -> Result<BigUint> {
    lambda.check_rank(g)?;
    let table = shared_table(g, n)?;
    Ok(table.get(n, lambda).expect("table extended to n"))
}

/// `𝔞_n`: multiplicity of the trivial representation in `V^{⊗n}`.
pub fn a_n(g: usize, n: usize) -> Result<BigUint> {
    multiplicity(g, n, &Partition::empty())
}

/// `𝔟_n(M_g)`: multiplicity of `V_{(1,1,1)}` in `V^{⊗n}`. Requires `g ≥ 3`.
pub fn b_n(g: usize, n: usize) -> Result<BigUint> {
    if g < 3 {
        return Err(Error::GenusOutOfRange {
            g,
            reason: "b_n is defined through V_(1,1,1), which needs g >= 3",
        });
    }
    multiplicity(g, n, &Partition::column(3))
}

/// Partitions whose multiplicities sum to the stable coefficient `c_{2,n}`.
pub fn c2_partitions() -> [Partition; 5] {
    [
        Partition::empty(),
        Partition::column(2),
        Partition::column(4),
        Partition::column(6),
        Partition::new(vec![2, 2, 1, 1]).expect("valid partition"),
    ]
}

/// `c_{2,n} = d_{n,(0)} + d_{n,(1²)} + d_{n,(1⁴)} + d_{n,(1⁶)} + d_{n,(2²,1²)}`.
///
/// Only defined for `g ≥ 6`, where all five weights exist.
pub fn c2_n(g: usize, n: usize) -> Result<BigUint> {
    if g < 6 {
        return Err(Error::GenusOutOfRange {
            g,
            reason: "c_2,n involves (1,1,1,1,1,1), which needs g >= 6",
        });
    }
    let table = shared_table(g, n)?;
    Ok(c2_partitions()
        .iter()
        .map(|l| table.get(n, l).expect("row present"))
        .sum())
}

/// Weyl dimension formula for type `C_g`.
///
/// With `l_i = λ_i + g − i + 1` and `ρ_i = g − i + 1`,
/// `dim V_λ = ∏_{i<j} (l_i² − l_j²)/(ρ_i² − ρ_j²) · ∏_i l_i/ρ_i`.
pub fn weyl_dimension(g: usize, lambda: &Partition) -> Result<BigUint> {
    lambda.check_rank(g)?;
    let l: Vec<BigInt> = (0..g)
        .map(|i| BigInt::from(lambda.part(i) as u64 + (g - i) as u64))
        .collect();
    let rho: Vec<BigInt> = (0..g).map(|i| BigInt::from((g - i) as u64)).collect();
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..g {
        num *= &l[i];
        den *= &rho[i];
        for j in i + 1..g {
            num *= &l[i] * &l[i] - &l[j] * &l[j];
            den *= &rho[i] * &rho[i] - &rho[j] * &rho[j];
        }
    }
    let (q, r) = num.div_rem(&den);
    debug_assert!(r.is_zero());
    Ok(q.to_biguint().expect("dimension is positive"))
}

/// `ln(x)` for arbitrarily large `x > 0`.
pub(crate) fn biguint_ln(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64-bit value");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

#[derive(Clone, Debug, Serialize)]
pub struct BnTrend {
    pub g: usize,
    /// `(n, 𝔟_n^{1/n})` for odd `n`.
    pub entries: Vec<(usize, f64)>,
    pub nondecreasing: bool,
    /// Every entry lies strictly below the limit `2g`.
    pub below_limit: bool,
}

/// The sequence `𝔟_n(M_g)^{1/n}` for odd `n ≤ n_max`; its limit is `2g`.
pub fn bn_root_trend(g: usize, n_max: usize) -> Result<BnTrend> {
    if n_max % 2 == 0 {
        return Err(Error::InvalidArgument(format!("n_max must be odd, got {n_max}")));
    }
    let mut entries = Vec::new();
    for n in (1..=n_max).step_by(2) {
        let b = b_n(g, n)?;
        let root = if b.is_zero() {
            0.0
        } else {
            (biguint_ln(&b) / n as f64).exp()
        };
        entries.push((n, root));
    }
    let nondecreasing = entries.windows(2).all(|w| w[0].1 <= w[1].1);
    let below_limit = entries.iter().all(|&(_, r)| r < 2.0 * g as f64);
    Ok(BnTrend {
        g,
        entries,
        nondecreasing,
        below_limit,
    })
}
