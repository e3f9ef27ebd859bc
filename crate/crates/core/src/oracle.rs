//! Classical side of the search problem.
//!
//! Items are 1-based throughout: the universe is `{1, ..., N}` and bit
//! `j - 1` of any bit-vector encoding belongs to item `j`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Default bound on `N^eta` for exhaustive tuple enumeration.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 20;

/// Problem size: `N = 2^nu` items and `eta` sample registers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchParameters {
    n_items: usize,
    nu: usize,
    eta: usize,
}

impl SearchParameters {
    pub fn new(n_items: usize, eta: usize) -> Result<Self> {
        let nu = log2_exact(n_items)?;
        if eta == 0 {
            return Err(Error::domain("eta must be at least 1"));
        }
        Ok(Self { n_items, nu, eta })
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn eta(&self) -> usize {
        self.eta
    }
}

/// Returns `nu` with `n == 2^nu`, rejecting anything that is not a power of
/// two of at least 2.
pub fn log2_exact(n: usize) -> Result<usize> {
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::domain(format!(
            "number of items must be a power of two >= 2, got {n}"
        )));
    }
    Ok(n.trailing_zeros() as usize)
}

fn check_item(item: usize, n_items: usize) -> Result<()> {
    if item == 0 || item > n_items {
        return Err(Error::domain(format!("item {item} outside 1..={n_items}")));
    }
    Ok(())
}

/// A length-`N` bit vector, bit `j - 1` describing item `j`.
///
/// Shared representation for predicates and subset incidence vectors.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Bits(Vec<bool>);

impl Bits {
    fn from_items(n_items: usize, items: &[usize]) -> Result<Self> {
        let mut bits = vec![false; n_items];
        for &item in items {
            check_item(item, n_items)?;
            bits[item - 1] = true;
        }
        Ok(Bits(bits))
    }

    fn items(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i + 1)
            .collect()
    }

    fn from_hex(n_items: usize, text: &str) -> Result<Self> {
        let digits = text
            .trim()
            .trim_start_matches("0x")
            .trim_start_matches("0X");
        if digits.is_empty() {
            return Err(Error::domain("empty hexadecimal mask"));
        }
        let mut bits = vec![false; n_items];
        // Least significant nibble first.
        for (nibble_idx, ch) in digits.chars().rev().enumerate() {
            let value = ch
                .to_digit(16)
                .ok_or_else(|| Error::domain(format!("invalid hex digit {ch:?} in mask")))?;
            for b in 0..4 {
                if value >> b & 1 == 1 {
                    let pos = nibble_idx * 4 + b;
                    if pos >= n_items {
                        return Err(Error::domain(format!(
                            "mask sets bit {pos}, which is outside {n_items} items"
                        )));
                    }
                    bits[pos] = true;
                }
            }
        }
        Ok(Bits(bits))
    }

    fn to_hex(&self) -> String {
        let nibbles = self.0.len().div_ceil(4);
        let mut out = String::with_capacity(nibbles);
        for n in (0..nibbles).rev() {
            let mut value = 0u32;
            for b in 0..4 {
                if self.0.get(n * 4 + b).copied().unwrap_or(false) {
                    value |= 1 << b;
                }
            }
            out.push(char::from_digit(value, 16).expect("nibble"));
        }
        out
    }
}

/// The predicate `f: {1..N} -> {0,1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BooleanPredicate {
    bits: Bits,
}

impl BooleanPredicate {
    pub fn from_marks(n_items: usize, marks: &[usize]) -> Result<Self> {
        Ok(Self {
            bits: Bits::from_items(n_items, marks)?,
        })
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits: Bits(bits) }
    }

    /// Parses a hexadecimal mask where bit `j - 1` is `f(j)`.
    pub fn from_hex_mask(n_items: usize, mask: &str) -> Result<Self> {
        Ok(Self {
            bits: Bits::from_hex(n_items, mask)?,
        })
    }

    /// Parses a comma separated list of marked items; the empty string is the
    /// empty predicate.
    pub fn from_mark_list(n_items: usize, list: &str) -> Result<Self> {
        let marks = list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                usize::from_str(s)
                    .map_err(|_| Error::domain(format!("invalid item {s:?} in mark list")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_marks(n_items, &marks)
    }

    /// Marks the first `t` items.
    pub fn first_t(n_items: usize, t: usize) -> Result<Self> {
        if t > n_items {
            return Err(Error::domain(format!(
                "marked count {t} exceeds {n_items} items"
            )));
        }
        Ok(Self::from_bits((0..n_items).map(|i| i < t).collect()))
    }

    /// Predicate whose truth table is the low `n_items` bits of `table`.
    pub fn from_truth_table(n_items: usize, table: u64) -> Self {
        Self::from_bits((0..n_items).map(|i| table >> i & 1 == 1).collect())
    }

    pub fn size(&self) -> usize {
        self.bits.0.len()
    }

    pub fn marks(&self) -> Vec<usize> {
        self.bits.items()
    }

    /// The number `t` of marked items.
    pub fn marked_count(&self) -> usize {
        self.bits.0.iter().filter(|&&b| b).count()
    }

    pub fn to_hex_mask(&self) -> String {
        self.bits.to_hex()
    }

    /// `f(x)` for a 1-based item. Panics on out-of-range items; see
    /// [`elementary_query`] for the checked form.
    pub fn is_marked(&self, item: usize) -> bool {
        self.bits.0[item - 1]
    }

    pub fn as_incidence(&self) -> IncidenceVector {
        IncidenceVector {
            bits: self.bits.clone(),
        }
    }
}

impl fmt::Display for BooleanPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let marks: Vec<String> = self.marks().iter().map(ToString::to_string).collect();
        write!(f, "{{{}}}", marks.join(","))
    }
}

/// Characteristic vector of a subset `T` of `{1..N}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IncidenceVector {
    bits: Bits,
}

impl IncidenceVector {
    pub fn from_subset(n_items: usize, subset: &[usize]) -> Result<Self> {
        Ok(Self {
            bits: Bits::from_items(n_items, subset)?,
        })
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits: Bits(bits) }
    }

    pub fn size(&self) -> usize {
        self.bits.0.len()
    }

    pub fn subset(&self) -> Vec<usize> {
        self.bits.items()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits.0
    }

    pub fn contains(&self, item: usize) -> bool {
        self.bits
            .0
            .get(item.wrapping_sub(1))
            .copied()
            .unwrap_or(false)
    }

    /// Symmetric difference of two subsets of the same universe.
    pub fn symmetric_difference(&self, other: &Self) -> Result<Self> {
        if self.size() != other.size() {
            return Err(Error::domain("incidence vectors of different sizes"));
        }
        Ok(Self::from_bits(
            self.bits
                .0
                .iter()
                .zip(&other.bits.0)
                .map(|(a, b)| a ^ b)
                .collect(),
        ))
    }
}

/// The `eta`-tuple `(x_1, ..., x_eta)` of items.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SampleTuple {
    n_items: usize,
    values: Vec<usize>,
}

impl SampleTuple {
    pub fn new(n_items: usize, values: Vec<usize>) -> Result<Self> {
        for &v in &values {
            check_item(v, n_items)?;
        }
        Ok(Self { n_items, values })
    }

    pub fn n_items(&self) -> usize {
        self.n_items
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// The tuple followed by a copy of itself.
    pub fn doubled(&self) -> Self {
        let mut values = self.values.clone();
        values.extend_from_slice(&self.values);
        Self {
            n_items: self.n_items,
            values,
        }
    }
}

/// `f(x)`.
pub fn elementary_query(pred: &BooleanPredicate, x: usize) -> Result<bool> {
    check_item(x, pred.size())?;
    Ok(pred.is_marked(x))
}

/// Parity of the number of marked items inside `subset`.
pub fn complex_query(pred: &BooleanPredicate, subset: &IncidenceVector) -> Result<bool> {
    if subset.size() != pred.size() {
        return Err(Error::domain(format!(
            "subset over {} items queried against predicate over {} items",
            subset.size(),
            pred.size()
        )));
    }
    Ok(pred
        .bits
        .0
        .iter()
        .zip(subset.bits())
        .filter(|(&f, &member)| f && member)
        .count()
        % 2
        == 1)
}

/// Parity of the number of occurrences of `j` in the tuple.
pub fn chi(tuple: &SampleTuple, j: usize) -> Result<bool> {
    check_item(j, tuple.n_items())?;
    Ok(tuple.values().iter().filter(|&&x| x == j).count() % 2 == 1)
}

/// The vector `(chi_1, ..., chi_N)` of occurrence parities.
pub fn incidence_of_tuple(tuple: &SampleTuple) -> IncidenceVector {
    let mut bits = vec![false; tuple.n_items()];
    for &x in tuple.values() {
        bits[x - 1] ^= true;
    }
    IncidenceVector::from_bits(bits)
}

/// How [`verify_parity_identity`] chooses the tuples it checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdentityCheckMode {
    /// Every tuple in `{1..N}^eta`, refused above `cap` tuples.
    Exhaustive { cap: u64 },
    /// `trials` uniformly random tuples.
    Sampled { trials: u64, seed: u64 },
}

impl IdentityCheckMode {
    pub fn exhaustive() -> Self {
        IdentityCheckMode::Exhaustive {
            cap: DEFAULT_ENUMERATION_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct IdentityReport {
    pub checked: u64,
    pub violations: u64,
}

/// Checks `complex_query(incidence_of_tuple(x)) == sum_i f(x_i) mod 2` over
/// the tuples selected by `mode`.
pub fn verify_parity_identity(
    pred: &BooleanPredicate,
    eta: usize,
    mode: IdentityCheckMode,
) -> Result<IdentityReport> {
    let n = pred.size();
    if eta == 0 {
        return Err(Error::domain("eta must be at least 1"));
    }
    let mut report = IdentityReport::default();
    let mut check = |values: &[usize]| -> Result<()> {
        let tuple = SampleTuple::new(n, values.to_vec())?;
        let lhs = complex_query(pred, &incidence_of_tuple(&tuple))?;
        let rhs = values.iter().filter(|&&x| pred.is_marked(x)).count() % 2 == 1;
        report.checked += 1;
        if lhs != rhs {
            report.violations += 1;
        }
        Ok(())
    };

    match mode {
        IdentityCheckMode::Exhaustive { cap } => {
            let total = (n as u64)
                .checked_pow(eta as u32)
                .filter(|&total| total <= cap)
                .ok_or_else(|| {
                    Error::capacity(format!(
                        "exhaustive check of {n}^{eta} tuples exceeds the cap of {cap}"
                    ))
                })?;
            let mut values = vec![1usize; eta];
            for _ in 0..total {
                check(&values)?;
                // odometer increment
                for v in values.iter_mut() {
                    if *v < n {
                        *v += 1;
                        break;
                    }
                    *v = 1;
                }
            }
        }
        IdentityCheckMode::Sampled { trials, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut values = vec![0usize; eta];
            for _ in 0..trials {
                for v in values.iter_mut() {
                    *v = rng.gen_range(1..=n);
                }
                check(&values)?;
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn pred(n: usize, marks: &[usize]) -> BooleanPredicate {
        BooleanPredicate::from_marks(n, marks).unwrap()
    }

    fn tuple(n: usize, values: &[usize]) -> SampleTuple {
        SampleTuple::new(n, values.to_vec()).unwrap()
    }

    #[test]
    fn parameters_require_power_of_two() {
        let p = SearchParameters::new(16, 3).unwrap();
        assert_eq!(p.nu(), 4);
        assert!(SearchParameters::new(1, 1).is_err());
        assert!(SearchParameters::new(12, 1).is_err());
        assert!(SearchParameters::new(4, 0).is_err());
    }

    #[test]
    fn elementary_query_examples() {
        let p = pred(4, &[2]);
        assert!(elementary_query(&p, 2).unwrap());
        assert!(!elementary_query(&p, 1).unwrap());
        let empty = pred(4, &[]);
        assert!((1..=4).all(|x| !elementary_query(&empty, x).unwrap()));
        assert!(matches!(elementary_query(&p, 0), Err(Error::Domain(_))));
        assert!(matches!(elementary_query(&p, 5), Err(Error::Domain(_))));
    }

    #[test]
    fn complex_query_examples() {
        let p = pred(4, &[2, 3]);
        let t = |s: &[usize]| IncidenceVector::from_subset(4, s).unwrap();
        assert!(!complex_query(&p, &t(&[1, 2, 3])).unwrap());
        assert!(complex_query(&p, &t(&[1, 2])).unwrap());
        assert!(!complex_query(&p, &t(&[])).unwrap());
        let wrong = IncidenceVector::from_subset(8, &[1]).unwrap();
        assert!(matches!(complex_query(&p, &wrong), Err(Error::Domain(_))));
    }

    #[test]
    fn chi_examples() {
        let x = tuple(8, &[2, 2, 5]);
        assert!(!chi(&x, 2).unwrap());
        assert!(chi(&x, 5).unwrap());
        assert!(!chi(&x, 1).unwrap());
        assert!(chi(&x, 9).is_err());
    }

    #[test]
    fn incidence_of_tuple_examples() {
        assert_eq!(incidence_of_tuple(&tuple(4, &[1, 1])).bits(), &[false; 4]);
        assert_eq!(
            incidence_of_tuple(&tuple(4, &[1, 2])).bits(),
            &[true, true, false, false]
        );
        assert_eq!(
            incidence_of_tuple(&tuple(2, &[2, 2, 2])).bits(),
            &[false, true]
        );
    }

    #[test]
    fn sample_tuple_rejects_out_of_range() {
        assert!(SampleTuple::new(4, vec![1, 5]).is_err());
        assert!(SampleTuple::new(4, vec![0]).is_err());
    }

    #[test]
    fn identity_examples() {
        let r = verify_parity_identity(&pred(2, &[1]), 2, IdentityCheckMode::exhaustive()).unwrap();
        assert_eq!(
            r,
            IdentityReport {
                checked: 4,
                violations: 0
            }
        );
        let r =
            verify_parity_identity(&pred(4, &[2, 3]), 3, IdentityCheckMode::exhaustive()).unwrap();
        assert_eq!(
            r,
            IdentityReport {
                checked: 64,
                violations: 0
            }
        );
        let r = verify_parity_identity(
            &pred(8, &[5]),
            4,
            IdentityCheckMode::Sampled {
                trials: 1000,
                seed: 7,
            },
        )
        .unwrap();
        assert_eq!(
            r,
            IdentityReport {
                checked: 1000,
                violations: 0
            }
        );
    }

    #[test]
    fn identity_cap_is_enforced() {
        let err =
            verify_parity_identity(&pred(8, &[1]), 7, IdentityCheckMode::exhaustive()).unwrap_err();
        assert!(err.is_capacity());
        let err =
            verify_parity_identity(&pred(2, &[1]), 3, IdentityCheckMode::Exhaustive { cap: 7 })
                .unwrap_err();
        assert!(err.is_capacity());
    }

    #[test]
    fn identity_holds_on_grid() {
        for n in [2usize, 4, 8] {
            let tables: Vec<u64> = if n <= 4 {
                (0..1u64 << n).collect()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(11);
                (0..32).map(|_| rng.gen_range(0..1u64 << n)).collect()
            };
            for table in tables {
                let p = BooleanPredicate::from_truth_table(n, table);
                for eta in 1..=3 {
                    let r =
                        verify_parity_identity(&p, eta, IdentityCheckMode::exhaustive()).unwrap();
                    assert_eq!(r.checked, (n as u64).pow(eta as u32));
                    assert_eq!(r.violations, 0, "N={n} f={p} eta={eta}");
                }
            }
        }
    }

    #[test]
    fn mark_list_and_mask_agree() {
        let a = BooleanPredicate::from_mark_list(8, "1, 3,8").unwrap();
        let b = BooleanPredicate::from_hex_mask(8, "0x85").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_hex_mask(), "85");
        assert_eq!(
            BooleanPredicate::from_mark_list(4, "")
                .unwrap()
                .marked_count(),
            0
        );
        assert!(BooleanPredicate::from_mark_list(4, "5").is_err());
        assert!(BooleanPredicate::from_mark_list(4, "x").is_err());
        assert!(BooleanPredicate::from_hex_mask(4, "10").is_err());
        assert!(BooleanPredicate::from_hex_mask(4, "g").is_err());
        assert_eq!(BooleanPredicate::first_t(4, 2).unwrap().marks(), vec![1, 2]);
    }

    proptest! {
        #[test]
        fn subset_round_trip(table in 0u64..(1 << 16)) {
            let v = IncidenceVector::from_bits((0..16).map(|i| table >> i & 1 == 1).collect());
            let back = IncidenceVector::from_subset(16, &v.subset()).unwrap();
            prop_assert_eq!(back, v);
        }

        #[test]
        fn hex_mask_round_trip(table in 0u64..(1 << 32)) {
            let p = BooleanPredicate::from_truth_table(32, table);
            let back = BooleanPredicate::from_hex_mask(32, &p.to_hex_mask()).unwrap();
            prop_assert_eq!(back, p);
        }

        #[test]
        fn parity_is_linear(f in 0u64..256, a in 0u64..256, b in 0u64..256) {
            let p = BooleanPredicate::from_truth_table(8, f);
            let s = |m: u64| IncidenceVector::from_bits((0..8).map(|i| m >> i & 1 == 1).collect());
            let (sa, sb) = (s(a), s(b));
            let lhs = complex_query(&p, &sa.symmetric_difference(&sb).unwrap()).unwrap();
            let rhs = complex_query(&p, &sa).unwrap() ^ complex_query(&p, &sb).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn doubled_tuple_has_empty_incidence(values in proptest::collection::vec(1usize..=8, 1..10)) {
            let x = SampleTuple::new(8, values).unwrap();
            prop_assert!(incidence_of_tuple(&x.doubled()).subset().is_empty());
        }

        #[test]
        fn incidence_matches_chi(values in proptest::collection::vec(1usize..=8, 1..10)) {
            let x = SampleTuple::new(8, values).unwrap();
            let inc = incidence_of_tuple(&x);
            for j in 1..=8 {
                prop_assert_eq!(inc.contains(j), chi(&x, j).unwrap());
            }
        }
    }
}
