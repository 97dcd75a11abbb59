//! Semilinear subsets of `{1, 2, 3, …}`: a finite part plus a union of
//! arithmetic progressions with a common modulus.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemilinearError {
    #[error("the empty set has no supremum")]
    Empty,
    #[error("progression start {start} or step {step} is invalid")]
    BadProgression { start: u64, step: u64 },
    #[error("combined modulus {0} is too large")]
    ModulusOverflow(u64),
}

/// Largest modulus an operation may produce.
pub const MAX_MODULUS: u64 = 1 << 20;

/// `S = F ∪ {n ≥ t : n mod κ ∈ R}` in canonical form: `κ` is the least
/// eventual period, `t` the least threshold for it, and `F ⊆ [1, t)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SemilinearSet {
    finite: Vec<u64>,
    modulus: u64,
    threshold: u64,
    residues: Vec<u64>,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

impl SemilinearSet {
    pub fn empty() -> Self {
        SemilinearSet {
            finite: Vec::new(),
            modulus: 1,
            threshold: 1,
            residues: Vec::new(),
        }
    }

    /// All sizes `{1, 2, 3, …}`.
    pub fn universe() -> Self {
        SemilinearSet {
            finite: Vec::new(),
            modulus: 1,
            threshold: 1,
            residues: alloc::vec![0],
        }
    }

    /// A finite set; zeros are dropped.
    pub fn finite(elems: impl IntoIterator<Item = u64>) -> Self {
        Self::from_parts(elems, 1, 1, core::iter::empty())
    }

    /// `[a, b] ∩ {1, 2, …}`.
    pub fn range(a: u64, b: u64) -> Self {
        Self::finite(a.max(1)..=b)
    }

    /// `{start, start + step, start + 2·step, …}`.
    pub fn progression(start: u64, step: u64) -> Result<Self, SemilinearError> {
        if start == 0 || step == 0 {
            return Err(SemilinearError::BadProgression { start, step });
        }
        Ok(Self::from_parts(
            core::iter::empty(),
            step,
            start,
            core::iter::once(start % step),
        ))
    }

    /// Builds `F ∪ {n ≥ t : n mod κ ∈ R}` from any (possibly redundant)
    /// description and normalizes it. Elements of `F` at or above `t` are
    /// kept as well.
    pub fn from_parts(
        finite: impl IntoIterator<Item = u64>,
        modulus: u64,
        threshold: u64,
        residues: impl IntoIterator<Item = u64>,
    ) -> Self {
        let modulus = modulus.max(1);
        let threshold = threshold.max(1);
        let mut residues: Vec<u64> = residues.into_iter().map(|r| r % modulus).collect();
        residues.sort_unstable();
        residues.dedup();
        let mut finite: Vec<u64> = finite.into_iter().filter(|&n| n >= 1).collect();
        finite.sort_unstable();
        finite.dedup();
        // elements at or past the threshold outside the progressions push
        // the threshold up
        let mut threshold = threshold;
        if let Some(&top) = finite
            .iter()
            .rev()
            .find(|&&n| n >= threshold && residues.binary_search(&(n % modulus)).is_err())
        {
            let old = threshold;
            threshold = top + 1;
            // sizes in [old, top] that the progressions covered stay members
            for n in old..=top {
                if residues.binary_search(&(n % modulus)).is_ok() {
                    finite.push(n);
                }
            }
            finite.sort_unstable();
            finite.dedup();
        }
        finite.retain(|&n| n < threshold);
        let mut s = SemilinearSet {
            finite,
            modulus,
            threshold,
            residues,
        };
        s.normalize();
        s
    }

    fn in_progressions(&self, n: u64) -> bool {
        self.residues.binary_search(&(n % self.modulus)).is_ok()
    }

    fn normalize(&mut self) {
        // least period: smallest divisor p of κ with R + p = R (mod κ)
        let k = self.modulus;
        let mut best = k;
        for p in 1..k {
            if k % p != 0 {
                continue;
            }
            if self
                .residues
                .iter()
                .all(|&r| self.residues.binary_search(&((r + p) % k)).is_ok())
            {
                best = p;
                break;
            }
        }
        if best != k {
            let mut r: Vec<u64> = self.residues.iter().map(|&x| x % best).collect();
            r.sort_unstable();
            r.dedup();
            self.residues = r;
            self.modulus = best;
        }
        // least threshold
        while self.threshold > 1 {
            let n = self.threshold - 1;
            let member = self.finite.last() == Some(&n);
            if member != self.in_progressions(n) {
                break;
            }
            if member {
                self.finite.pop();
            }
            self.threshold = n;
        }
        if self.residues.is_empty() {
            // finite sets: threshold one past the maximum
            self.threshold = self.finite.last().map_or(1, |m| m + 1);
        }
    }

    pub fn contains(&self, n: u64) -> bool {
        if n == 0 {
            return false;
        }
        if n < self.threshold {
            self.finite.binary_search(&n).is_ok()
        } else {
            self.in_progressions(n)
        }
    }

    /// `Λ₀`: the members below the threshold.
    pub fn finite_part(&self) -> &[u64] {
        &self.finite
    }

    /// `κ`.
    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn threshold(&self) -> u64 {
        self.threshold
    }

    /// Residues `n mod κ` of the progressions.
    pub fn residues(&self) -> &[u64] {
        &self.residues
    }

    /// `Λ₁`: the first element of each progression, ascending.
    pub fn progression_starts(&self) -> Vec<u64> {
        let t = self.threshold;
        let k = self.modulus;
        let mut out: Vec<u64> = self
            .residues
            .iter()
            .map(|&r| t + (r + k - t % k) % k)
            .collect();
        out.sort_unstable();
        out
    }

    pub fn is_empty(&self) -> bool {
        self.finite.is_empty() && self.residues.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.residues.is_empty()
    }

    pub fn is_universe(&self) -> bool {
        *self == Self::universe()
    }

    /// `None` for infinite sets.
    pub fn supremum(&self) -> Result<Option<u64>, SemilinearError> {
        if self.is_empty() {
            return Err(SemilinearError::Empty);
        }
        Ok(if self.is_finite() {
            self.finite.last().copied()
        } else {
            None
        })
    }

    pub fn min(&self) -> Option<u64> {
        if let Some(&f) = self.finite.first() {
            return Some(f);
        }
        self.progression_starts().first().copied()
    }

    /// Members up to and including `limit`.
    pub fn members_upto(&self, limit: u64) -> impl Iterator<Item = u64> + '_ {
        (1..=limit).filter(move |&n| self.contains(n))
    }

    fn combine(&self, other: &Self, f: impl Fn(bool, bool) -> bool) -> Self {
        let k = lcm(self.modulus, other.modulus);
        assert!(k <= MAX_MODULUS, "combined modulus {k} too large");
        let t = self.threshold.max(other.threshold);
        let finite = (1..t).filter(|&n| f(self.contains(n), other.contains(n)));
        let residues = (t..t + k)
            .filter(|&n| f(self.contains(n), other.contains(n)))
            .collect::<Vec<_>>();
        Self::from_parts(finite, k, t, residues)
    }

    pub fn union(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a || b)
    }

    pub fn intersect(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a && !b)
    }

    /// Complement within `{1, 2, …}`.
    pub fn complement(&self) -> Self {
        let t = self.threshold;
        let k = self.modulus;
        let finite = (1..t).filter(|&n| !self.contains(n));
        let residues = (0..k).filter(|r| self.residues.binary_search(r).is_err());
        Self::from_parts(finite, k, t, residues)
    }

    /// `{n − by : n ∈ S, n − by ≥ 1}`.
    pub fn shift_down(&self, by: u64) -> Self {
        let k = self.modulus;
        let finite = self
            .finite
            .iter()
            .filter(|&&n| n > by)
            .map(|&n| n - by)
            .collect::<Vec<_>>();
        let t = self.threshold.saturating_sub(by).max(1);
        // sizes in [t, threshold - by) when threshold - by < 1 are covered
        // because every n ≥ 1 then maps to n + by ≥ threshold
        let residues = self.residues.iter().map(|&r| (r + k - by % k) % k);
        Self::from_parts(finite, k, t, residues)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.difference(other).is_empty()
    }
}

impl Default for SemilinearSet {
    fn default() -> Self {
        Self::empty()
    }
}

impl fmt::Display for SemilinearSet {
    /// `{1,3} ∪ (5 + 2N)`; `∅` for the empty set.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("∅");
        }
        let mut parts: Vec<String> = Vec::new();
        if !self.finite.is_empty() {
            let elems: Vec<String> = self.finite.iter().map(|n| format!("{n}")).collect();
            parts.push(format!("{{{}}}", elems.join(",")));
        }
        for s in self.progression_starts() {
            parts.push(format!("({} + {}N)", s, self.modulus));
        }
        f.write_str(&parts.join(" ∪ "))
    }
}

/// Paired over- and under-approximations `Ω⁺ ⊇ Ω⁻` of an evidence set.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EvidenceApprox {
    pub over: SemilinearSet,
    pub under: SemilinearSet,
}

impl EvidenceApprox {
    pub fn new(over: SemilinearSet, under: SemilinearSet) -> Self {
        debug_assert!(under.is_subset(&over), "Ω⁻ ⊄ Ω⁺: {under} vs {over}");
        EvidenceApprox { over, under }
    }

    /// Both bounds equal to `s`.
    pub fn exact(s: SemilinearSet) -> Self {
        EvidenceApprox {
            over: s.clone(),
            under: s,
        }
    }

    /// No information: `Ω⁺` everything, `Ω⁻` nothing.
    pub fn unknown() -> Self {
        EvidenceApprox {
            over: SemilinearSet::universe(),
            under: SemilinearSet::empty(),
        }
    }

    pub fn is_exact(&self) -> bool {
        self.over == self.under
    }

    /// Complement with the approximations swapped.
    pub fn negate(&self) -> Self {
        EvidenceApprox {
            over: self.under.complement(),
            under: self.over.complement(),
        }
    }

    pub fn and(&self, other: &Self) -> Self {
        EvidenceApprox {
            over: self.over.intersect(&other.over),
            under: self.under.intersect(&other.under),
        }
    }

    pub fn shift_down(&self, by: u64) -> Self {
        EvidenceApprox {
            over: self.over.shift_down(by),
            under: self.under.shift_down(by),
        }
    }
}

#[cfg(test)]
mod tests;
