//! Truncated dimension-wise (anchored ANOVA) expansions.
//!
//! Retaining the first `r` principal directions and anchoring the tail
//! eigenvalues at zero, the solution is a telescoping sum of mixed
//! differences over the tail. Keeping differences of total order `≤ m` gives a
//! weighted sum of sub-problem solutions `u^ν`, each diffusing only in the
//! coordinates of `ν` and none with more than `r + m` coordinates.
//!
//! Index sets are stored zero-based; they print one-based (`{1,2}`) since
//! coordinate 1 is the dominant principal axis.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A strictly increasing set of coordinate indices (zero-based).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::validation(format!(
                "index set {indices:?} is not strictly increasing"
            )));
        }
        Ok(IndexSet(indices))
    }

    pub fn empty() -> Self {
        IndexSet(Vec::new())
    }

    /// `{0, …, r−1}`.
    pub fn leading(r: usize) -> Self {
        IndexSet((0..r).collect())
    }

    pub fn full(n: usize) -> Self {
        Self::leading(n)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.0.binary_search(&k).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let mut v: Vec<usize> = self.0.iter().chain(&other.0).copied().collect();
        v.sort_unstable();
        v.dedup();
        IndexSet(v)
    }

    /// Largest index plus one, or zero.
    pub fn bound(&self) -> usize {
        self.0.last().map_or(0, |k| k + 1)
    }
}

impl Ord for IndexSet {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0
            .len()
            .cmp(&other.0.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for IndexSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", k + 1)?;
        }
        f.write_str("}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Term {
    pub weight: i64,
    pub subset: IndexSet,
}

/// A weighted set of sub-problems; `u^ξ = Σ w u^ν`.
///
/// Terms are kept in canonical order (cardinality, then lexicographic) and
/// weights are exact integers summing to one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionPlan {
    terms: Vec<Term>,
    retained: usize,
    order: usize,
    dim: usize,
}

impl ExpansionPlan {
    fn from_weights(weights: BTreeMap<IndexSet, i64>, retained: usize, order: usize, dim: usize) -> Self {
        let terms: Vec<Term> = weights
            .into_iter()
            .filter(|(_, w)| *w != 0)
            .map(|(subset, weight)| Term { weight, subset })
            .collect();
        let plan = ExpansionPlan {
            terms,
            retained,
            order,
            dim,
        };
        debug_assert_eq!(plan.weight_sum(), 1);
        plan
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn retained(&self) -> usize {
        self.retained
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weight_sum(&self) -> i64 {
        self.terms.iter().map(|t| t.weight).sum()
    }

    /// Size of the largest sub-problem.
    pub fn max_subset_len(&self) -> usize {
        self.terms.iter().map(|t| t.subset.len()).max().unwrap_or(0)
    }
}

impl fmt::Display for ExpansionPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in &self.terms {
            writeln!(f, "({}, {})", t.weight, t.subset)?;
        }
        Ok(())
    }
}

fn check_dims(r: usize, m: usize, n: usize) -> Result<()> {
    if r == 0 {
        return Err(Error::validation("at least one retained dimension is required"));
    }
    if r + m > n {
        return Err(Error::validation(format!(
            "retained dimensions plus order ({r} + {m}) exceed the dimension {n}"
        )));
    }
    Ok(())
}

/// `u_{r,1} = (1+r−N) u^{1..r} + Σ_k u^{1..r,k}`.
pub fn first_order_plan(r: usize, n: usize) -> Result<ExpansionPlan> {
    if r >= n {
        return Err(Error::validation(format!(
            "first-order plan needs r < n (got r = {r}, n = {n})"
        )));
    }
    check_dims(r, 1, n)?;
    let base = IndexSet::leading(r);
    let mut w = BTreeMap::new();
    w.insert(base.clone(), 1 + r as i64 - n as i64);
    for k in r..n {
        w.insert(base.union(&IndexSet(vec![k])), 1);
    }
    Ok(ExpansionPlan::from_weights(w, r, 1, n))
}

/// Second-order plan: weights `1+(N−r)(N−r−3)/2`, `2−(N−r)` and `1` on the
/// retained set, its one-extra and its two-extra supersets.
pub fn second_order_plan(r: usize, n: usize) -> Result<ExpansionPlan> {
    if r + 2 > n {
        return Err(Error::validation(format!(
            "second-order plan needs r <= n - 2 (got r = {r}, n = {n})"
        )));
    }
    check_dims(r, 2, n)?;
    let d = (n - r) as i64;
    let base = IndexSet::leading(r);
    let mut w = BTreeMap::new();
    w.insert(base.clone(), 1 + d * (d - 3) / 2);
    for k in r..n {
        w.insert(base.union(&IndexSet(vec![k])), 2 - d);
        for l in k + 1..n {
            w.insert(base.union(&IndexSet(vec![k, l])), 1);
        }
    }
    Ok(ExpansionPlan::from_weights(w, r, 2, n))
}

/// Plan for any order `m`, from the mixed-difference expansion
/// `Σ_{|α|≤m} Σ_{β≤α} (−1)^{|α−β|} u(λ⁰ + δλ·β)`.
///
/// A tail subset `β` of size `b` collects `Σ_{j=b}^{m} C(N−r−b, j−b)(−1)^{j−b}`
/// from all `α ⊇ β` with `|α| = j`.
pub fn general_plan(r: usize, m: usize, n: usize) -> Result<ExpansionPlan> {
    check_dims(r, m, n)?;
    let d = n - r;
    let coeff: Vec<i64> = (0..=m)
        .map(|b| {
            (b..=m)
                .map(|j| {
                    let sign = if (j - b) % 2 == 0 { 1 } else { -1 };
                    sign * binomial(d - b, j - b)
                })
                .sum()
        })
        .collect();
    let base = IndexSet::leading(r);
    let mut w = BTreeMap::new();
    let mut tail = Vec::with_capacity(m);
    subsets_up_to(r, n, m, &mut tail, &mut |beta| {
        let subset = base.union(&IndexSet(beta.to_vec()));
        w.insert(subset, coeff[beta.len()]);
    });
    Ok(ExpansionPlan::from_weights(w, r, m, n))
}

fn binomial(n: usize, k: usize) -> i64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

/// Visits every subset of `start..n` with at most `max_len` elements.
fn subsets_up_to(start: usize, n: usize, max_len: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    f(cur);
    if cur.len() == max_len {
        return;
    }
    for k in start..n {
        cur.push(k);
        subsets_up_to(k + 1, n, max_len, cur, f);
        cur.pop();
    }
}

/// `Σ w u^ν` from precomputed term values.
pub fn combine(plan: &ExpansionPlan, values: &BTreeMap<IndexSet, f64>) -> Result<f64> {
    combine_with(plan, |s| {
        values
            .get(s)
            .copied()
            .ok_or_else(|| Error::MissingTerm(s.clone()))
    })
}

/// `Σ w u^ν` with term values supplied by a callback, folded in plan order.
pub fn combine_with<F>(plan: &ExpansionPlan, mut value: F) -> Result<f64>
where
    F: FnMut(&IndexSet) -> Result<f64>,
{
    plan.terms
        .iter()
        .try_fold(0.0, |acc, t| Ok(acc + t.weight as f64 * value(&t.subset)?))
}

/// Sup-norms of the mixed derivatives `∂²ᵢ∂²ⱼ g` and `∂²ᵢ∂²ⱼ∂²ₖ g`, keyed by
/// sorted zero-based index tuples.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MixedNormTable {
    entries: BTreeMap<Vec<usize>, f64>,
}

impl MixedNormTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, mut indices: Vec<usize>, norm: f64) -> Result<()> {
        if !(norm >= 0.0) {
            return Err(Error::validation("mixed-derivative norms must be non-negative"));
        }
        indices.sort_unstable();
        self.entries.insert(indices, norm);
        Ok(())
    }

    pub fn get(&self, indices: &[usize]) -> Result<f64> {
        self.entries
            .get(indices)
            .copied()
            .ok_or_else(|| Error::MissingNorm(indices.to_vec()))
    }

    /// All pair and triple norms equal to one, as for `g = Π cos z_k`.
    pub fn cosine(n: usize, r: usize) -> Self {
        Self::constant(n, r, 1.0)
    }

    pub fn constant(n: usize, r: usize, value: f64) -> Self {
        let mut t = MixedNormTable::new();
        for i in r..n {
            for j in i + 1..n {
                t.entries.insert(vec![i, j], value);
                for k in j + 1..n {
                    t.entries.insert(vec![i, j, k], value);
                }
            }
        }
        t
    }
}

fn check_lambdas(t: f64, lambdas: &[f64]) -> Result<()> {
    if !(t >= 0.0) {
        return Err(Error::validation("time must be non-negative"));
    }
    if lambdas.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::validation("eigenvalues must be sorted in descending order"));
    }
    Ok(())
}

/// `t² Σ_{r<i<k} λᵢ λₖ ‖∂⁴g/∂zᵢ²∂zₖ²‖`.
pub fn bound_first_order(t: f64, lambdas: &[f64], r: usize, norms: &MixedNormTable) -> Result<f64> {
    check_lambdas(t, lambdas)?;
    let n = lambdas.len();
    let mut sum = 0.0;
    for i in r..n {
        for k in i + 1..n {
            sum += lambdas[i] * lambdas[k] * norms.get(&[i, k])?;
        }
    }
    Ok(t * t * sum)
}

/// `t³ Σ_{r<i<j<k} λᵢ λⱼ λₖ ‖∂⁶g/∂zᵢ²∂zⱼ²∂zₖ²‖`.
pub fn bound_second_order(t: f64, lambdas: &[f64], r: usize, norms: &MixedNormTable) -> Result<f64> {
    check_lambdas(t, lambdas)?;
    let n = lambdas.len();
    let mut sum = 0.0;
    for i in r..n {
        for j in i + 1..n {
            for k in j + 1..n {
                sum += lambdas[i] * lambdas[j] * lambdas[k] * norms.get(&[i, j, k])?;
            }
        }
    }
    Ok(t * t * t * sum)
}
