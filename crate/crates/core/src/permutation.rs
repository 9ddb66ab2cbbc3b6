//! Permutations in one-line notation, Bruhat order, and the index tables
//! attached to a fixed point of the flag variety.
//!
//! A fixed point `I = (I_1, …, I_n)` is stored 1-based. Two products are in
//! use and are kept apart by name:
//!
//! * [`Permutation::compose`]: `(σ·I)_j = I_{σ(j)}`. With this convention
//!   `I·s_k` exchanges the *values* `k, k+1` of `I` ([`Permutation::swap_values`])
//!   while `s_k·I` exchanges the *positions* `k, k+1` ([`Permutation::swap_positions`]).
//! * [`Permutation::then`]: value-wise `(σ∘I)_j = σ(I_j)`.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    word: Vec<usize>,
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = Error;
    fn try_from(word: Vec<usize>) -> Result<Self> {
        Permutation::new(word)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Vec<usize> {
        p.word
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.word.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Canonical row order: by length, then lexicographically on the word.
impl Ord for Permutation {
    fn cmp(&self, other: &Self) -> Ordering {
        self.length().cmp(&other.length()).then_with(|| self.word.cmp(&other.word))
    }
}

impl PartialOrd for Permutation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Permutation {
    pub fn new(word: Vec<usize>) -> Result<Self> {
        let n = word.len();
        let mut seen = vec![false; n];
        for &v in &word {
            if v == 0 || v > n || seen[v - 1] {
                return Err(Error::InvalidPermutation { n, word });
            }
            seen[v - 1] = true;
        }
        Ok(Permutation { word })
    }

    pub fn identity(n: usize) -> Self {
        Permutation { word: (1..=n).collect() }
    }

    /// The longest element `σ₀ = (n, n-1, …, 1)`.
    pub fn longest(n: usize) -> Self {
        Permutation { word: (1..=n).rev().collect() }
    }

    /// Simple transposition `s_k = (k, k+1)`, `1 ≤ k < n`.
    pub fn simple(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k >= n {
            return Err(Error::IndexOutOfRange(format!("s_{k} in S_{n}")));
        }
        let mut word: Vec<usize> = (1..=n).collect();
        word.swap(k - 1, k);
        Ok(Permutation { word })
    }

    /// All of `S_n` in canonical order (length, then lexicographic).
    pub fn all(n: usize) -> Vec<Permutation> {
        let mut out = Vec::new();
        let mut word: Vec<usize> = (1..=n).collect();
        loop {
            out.push(Permutation { word: word.clone() });
            if !next_lexicographic(&mut word) {
                break;
            }
        }
        out.sort();
        out
    }

    pub fn n(&self) -> usize {
        self.word.len()
    }

    pub fn word(&self) -> &[usize] {
        &self.word
    }

    /// `I_j`, 1-based.
    pub fn at(&self, j: usize) -> usize {
        self.word[j - 1]
    }

    pub fn is_identity(&self) -> bool {
        self.word.iter().enumerate().all(|(i, &v)| v == i + 1)
    }

    pub fn inverse(&self) -> Permutation {
        let mut word = vec![0; self.n()];
        for (j, &v) in self.word.iter().enumerate() {
            word[v - 1] = j + 1;
        }
        Permutation { word }
    }

    fn check_size(&self, other: &Permutation) -> Result<()> {
        if self.n() != other.n() {
            return Err(Error::SizeMismatch { expected: self.n(), found: other.n() });
        }
        Ok(())
    }

    /// `(self·rhs)_j = rhs_{self(j)}`.
    pub fn compose(&self, rhs: &Permutation) -> Result<Permutation> {
        self.check_size(rhs)?;
        Ok(Permutation { word: self.word.iter().map(|&s| rhs.word[s - 1]).collect() })
    }

    /// Value-wise product `(self∘inner)_j = self(inner_j)`.
    pub fn then(&self, inner: &Permutation) -> Result<Permutation> {
        self.check_size(inner)?;
        Ok(Permutation { word: inner.word.iter().map(|&v| self.word[v - 1]).collect() })
    }

    /// `I·s_k`: exchange the values `k` and `k+1`.
    pub fn swap_values(&self, k: usize) -> Permutation {
        let word = self
            .word
            .iter()
            .map(|&v| match v {
                v if v == k => k + 1,
                v if v == k + 1 => k,
                v => v,
            })
            .collect();
        Permutation { word }
    }

    /// `s_k·I`: exchange the entries at positions `k` and `k+1`.
    pub fn swap_positions(&self, k: usize) -> Permutation {
        let mut word = self.word.clone();
        word.swap(k - 1, k);
        Permutation { word }
    }

    /// Number of inversions.
    pub fn length(&self) -> usize {
        let w = &self.word;
        (0..w.len()).map(|i| (i + 1..w.len()).filter(|&j| w[i] > w[j]).count()).sum()
    }

    /// `(-1)^{length}` as ±1.
    pub fn sign(&self) -> i32 {
        if self.length().is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    /// Bruhat order by the tableau criterion: for every prefix length `k`
    /// the sorted prefix of `self` is dominated entrywise by that of `other`.
    pub fn bruhat_leq(&self, other: &Permutation) -> bool {
        if self.n() != other.n() {
            return false;
        }
        let mut a: Vec<usize> = Vec::with_capacity(self.n());
        let mut b: Vec<usize> = Vec::with_capacity(self.n());
        for k in 0..self.n() {
            insert_sorted(&mut a, self.word[k]);
            insert_sorted(&mut b, other.word[k]);
            if a.iter().zip(&b).any(|(x, y)| x > y) {
                return false;
            }
        }
        true
    }

    /// Strict Bruhat order.
    pub fn bruhat_lt(&self, other: &Permutation) -> bool {
        self != other && self.bruhat_leq(other)
    }

    /// `p_{I,j}(m)`: 1 if `I_j < m`, else 0.
    pub fn p_function(&self, j: usize, m: usize) -> Result<u8> {
        if j == 0 || j > self.n() {
            return Err(Error::IndexOutOfRange(format!("p_{{I,{j}}} for n = {}", self.n())));
        }
        Ok(u8::from(self.word[j - 1] < m))
    }

    /// Value-wise descents: `k` such that `length(I·s_k) < length(I)`,
    /// i.e. `k+1` appears before `k` in the word.
    pub fn value_descents(&self) -> Vec<usize> {
        let inv = self.inverse();
        (1..self.n()).filter(|&k| inv.word[k] < inv.word[k - 1]).collect()
    }

    /// Position-wise descents: `k` with `I_k > I_{k+1}`.
    pub fn position_descents(&self) -> Vec<usize> {
        (1..self.n()).filter(|&k| self.word[k - 1] > self.word[k]).collect()
    }

    pub fn fixed_point_tables(&self) -> FixedPointTables {
        FixedPointTables::new(self)
    }

    pub fn tangent_character(&self, chamber: Chamber) -> TangentCharacter {
        TangentCharacter::new(self, chamber)
    }
}

fn insert_sorted(v: &mut Vec<usize>, x: usize) {
    let pos = v.partition_point(|&y| y < x);
    v.insert(pos, x);
}

fn next_lexicographic(w: &mut [usize]) -> bool {
    let n = w.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && w[i - 1] >= w[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while w[j] <= w[i - 1] {
        j -= 1;
    }
    w.swap(i - 1, j);
    w[i..].reverse();
    true
}

/// Ordered prefix sets `i_1^{(k)} < … < i_k^{(k)}` of `{I_1, …, I_k}` and
/// the positions `j(I,k,a)` with `I_{j(I,k,a)} = i_a^{(k)}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedPointTables {
    ordered: Vec<Vec<usize>>,
    jindex: Vec<Vec<usize>>,
}

impl FixedPointTables {
    pub fn new(perm: &Permutation) -> Self {
        let n = perm.n();
        let mut ordered = Vec::with_capacity(n);
        let mut jindex = Vec::with_capacity(n);
        let mut current: Vec<(usize, usize)> = Vec::with_capacity(n);
        for (pos, &v) in perm.word.iter().enumerate() {
            let at = current.partition_point(|&(x, _)| x < v);
            current.insert(at, (v, pos + 1));
            ordered.push(current.iter().map(|&(x, _)| x).collect());
            jindex.push(current.iter().map(|&(_, j)| j).collect());
        }
        FixedPointTables { ordered, jindex }
    }

    pub fn n(&self) -> usize {
        self.ordered.len()
    }

    /// The sorted set at level `k` (1-based level).
    pub fn ordered(&self, k: usize) -> &[usize] {
        &self.ordered[k - 1]
    }

    /// `i_a^{(k)}`, both indices 1-based.
    pub fn i(&self, k: usize, a: usize) -> usize {
        self.ordered[k - 1][a - 1]
    }

    /// `j(I, k, a)`, 1-based.
    pub fn j(&self, k: usize, a: usize) -> usize {
        self.jindex[k - 1][a - 1]
    }
}

/// Choice of chamber for the attracting/repelling split of `T_I X`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chamber {
    /// The cocharacter `(1, 2, …, n)`.
    Standard,
    /// The reversed cocharacter `(n, …, 1)`.
    Opposite,
}

/// A torus weight `ħ^{hbar} ∏ z_i^{z[i]}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Weight {
    pub z: Vec<i32>,
    pub hbar: i32,
}

impl Weight {
    /// `ħ^{hbar} z_num / z_den` (1-based indices).
    fn ratio(n: usize, num: usize, den: usize, hbar: i32) -> Weight {
        let mut z = vec![0; n];
        z[num - 1] += 1;
        z[den - 1] -= 1;
        Weight { z, hbar }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TangentCharacter {
    pub plus: Vec<Weight>,
    pub minus: Vec<Weight>,
}

impl TangentCharacter {
    pub fn new(perm: &Permutation, chamber: Chamber) -> Self {
        let n = perm.n();
        let (mut plus, mut minus) = (Vec::new(), Vec::new());
        for l in 1..=n {
            for k in l + 1..=n {
                let (il, ik) = (perm.at(l), perm.at(k));
                if il < ik {
                    minus.push(Weight::ratio(n, il, ik, 0));
                    plus.push(Weight::ratio(n, ik, il, -1));
                } else {
                    plus.push(Weight::ratio(n, il, ik, 0));
                    minus.push(Weight::ratio(n, ik, il, -1));
                }
            }
        }
        match chamber {
            Chamber::Standard => TangentCharacter { plus, minus },
            Chamber::Opposite => TangentCharacter { plus: minus, minus: plus },
        }
    }

    /// Every weight of `T_I X`, `z_{I_l}/z_{I_k}` and `ħ^{-1} z_{I_k}/z_{I_l}` for `l < k`.
    pub fn full(perm: &Permutation) -> Vec<Weight> {
        let n = perm.n();
        let mut out = Vec::new();
        for l in 1..=n {
            for k in l + 1..=n {
                out.push(Weight::ratio(n, perm.at(l), perm.at(k), 0));
                out.push(Weight::ratio(n, perm.at(k), perm.at(l), -1));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(w: &[usize]) -> Permutation {
        Permutation::new(w.to_vec()).unwrap()
    }

    #[test]
    fn rejects_non_permutations() {
        assert!(Permutation::new(vec![1, 1, 2]).is_err());
        assert!(Permutation::new(vec![0, 1]).is_err());
        assert!(Permutation::new(vec![1, 3]).is_err());
        assert!(serde_json::from_str::<Permutation>("[2,2]").is_err());
        assert_eq!(serde_json::from_str::<Permutation>("[2,1,3]").unwrap(), p(&[2, 1, 3]));
        assert_eq!(serde_json::to_string(&p(&[3, 1, 2])).unwrap(), "[3,1,2]");
    }

    #[test]
    fn compose_examples() {
        let i = p(&[2, 1, 3]);
        let s2 = Permutation::simple(3, 2).unwrap();
        assert_eq!(s2.compose(&i).unwrap(), p(&[2, 3, 1]));
        assert_eq!(i.swap_positions(2), p(&[2, 3, 1]));
        assert_eq!(s2.then(&i).unwrap(), p(&[3, 1, 2]));
        assert_eq!(i.compose(&s2).unwrap(), p(&[3, 1, 2]));
        assert_eq!(i.swap_values(2), p(&[3, 1, 2]));
        assert_eq!(Permutation::identity(3).compose(&i).unwrap(), i);
        assert_eq!(i.compose(&Permutation::identity(3)).unwrap(), i);
        assert!(matches!(i.compose(&Permutation::identity(2)), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn canonical_order() {
        let words: Vec<Vec<usize>> = Permutation::all(3).into_iter().map(Vec::from).collect();
        assert_eq!(
            words,
            vec![vec![1, 2, 3], vec![1, 3, 2], vec![2, 1, 3], vec![2, 3, 1], vec![3, 1, 2], vec![3, 2, 1]]
        );
        assert_eq!(Permutation::all(4).len(), 24);
        assert_eq!(Permutation::all(1), vec![Permutation::identity(1)]);
    }

    #[test]
    fn bruhat_examples() {
        let id = Permutation::identity(3);
        for j in Permutation::all(3) {
            assert!(id.bruhat_leq(&j));
        }
        assert!(p(&[1, 2]).bruhat_leq(&p(&[2, 1])));
        assert!(!p(&[2, 1]).bruhat_leq(&p(&[1, 2])));
        let (a, b) = (p(&[2, 1, 3]), p(&[1, 3, 2]));
        assert!(!a.bruhat_leq(&b) && !b.bruhat_leq(&a));
    }

    #[test]
    fn tables_examples() {
        let t = Permutation::identity(4).fixed_point_tables();
        for k in 1..=4 {
            assert_eq!(t.ordered(k), (1..=k).collect::<Vec<_>>().as_slice());
            for a in 1..=k {
                assert_eq!(t.j(k, a), a);
            }
        }
        let t = p(&[3, 1, 2]).fixed_point_tables();
        assert_eq!(t.ordered(1), &[3]);
        assert_eq!(t.ordered(2), &[1, 3]);
        assert_eq!(t.ordered(3), &[1, 2, 3]);
        assert_eq!(t.j(2, 2), 1);
        assert_eq!(t.j(2, 1), 2);
        let t = p(&[2, 1]).fixed_point_tables();
        assert_eq!(t.ordered(1), &[2]);
        assert_eq!(t.j(1, 1), 1);
    }

    #[test]
    fn p_function_examples() {
        assert_eq!(p(&[1, 2, 3]).p_function(1, 2).unwrap(), 1);
        assert_eq!(p(&[3, 1, 2]).p_function(1, 2).unwrap(), 0);
        for i in Permutation::all(3) {
            for j in 1..=3 {
                assert_eq!(i.p_function(j, 4).unwrap(), 1);
            }
        }
        assert!(p(&[1, 2]).p_function(3, 1).is_err());
    }

    #[test]
    fn tangent_examples() {
        let t = p(&[1, 2]).tangent_character(Chamber::Standard);
        assert_eq!(t.minus, vec![Weight { z: vec![1, -1], hbar: 0 }]);
        assert_eq!(t.plus, vec![Weight { z: vec![-1, 1], hbar: -1 }]);
        let t = p(&[2, 1]).tangent_character(Chamber::Standard);
        assert_eq!(t.minus, vec![Weight { z: vec![1, -1], hbar: -1 }]);
        assert_eq!(t.plus, vec![Weight { z: vec![-1, 1], hbar: 0 }]);
        let t = p(&[3, 1, 2]).tangent_character(Chamber::Standard);
        assert_eq!((t.plus.len(), t.minus.len()), (3, 3));
        let o = p(&[3, 1, 2]).tangent_character(Chamber::Opposite);
        assert_eq!((o.plus, o.minus), (t.minus, t.plus));
    }

    #[test]
    fn descents() {
        let i = p(&[3, 1, 2]);
        assert_eq!(i.position_descents(), vec![1]);
        // value 2 before 1? no; value 3 before 2? yes
        assert_eq!(i.value_descents(), vec![2]);
        assert!(Permutation::identity(4).value_descents().is_empty());
    }
}
