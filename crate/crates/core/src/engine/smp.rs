//! Product enumeration: SMP candidates, contiguous-subproduct scans and the
//! brute-force sandwich oracle `max_k rho_bar_k <= rho <= min_k rho_hat_k`.
//!
//! Enumeration walks prenecklaces with the FKM recursion and keeps prefix
//! products, so each new word costs one matrix multiply. Spectral radii are
//! only taken on Lyndon words: every other word is a rotation of one (same
//! spectrum) or a power of a shorter one (same averaged radius, and the tie
//! rule prefers the shorter word anyway).

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{JsrError, Result};
use crate::matrix::{cyclic_canonical, operator_norm_2, product_eval, spectral_radius, CMat, MatrixSet, ProductWord};

/// Relative band inside which two averaged radii count as equal.
const TIE_REL: f64 = 1e-12;

/// A product together with its averaged spectral radius `rho(A)^{1/t}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmpCandidate {
    pub word: ProductWord,
    pub value: f64,
}

impl SmpCandidate {
    /// Recomputes the averaged radius of `word` from scratch; the stored word
    /// is the cyclic-canonical representative.
    pub fn evaluate(word: &ProductWord, set: &MatrixSet) -> Result<Self> {
        if word.is_empty() {
            return Err(JsrError::input("an SMP candidate needs a nonempty word"));
        }
        let s = set_scale(set);
        let p = product_eval(word, &set.scaled(s))?;
        let value = s * spectral_radius(&p)?.powf(1.0 / word.len() as f64);
        Ok(SmpCandidate { word: cyclic_canonical(word), value })
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    /// Larger value wins; within the tie band the shorter, then
    /// lexicographically smaller, word wins.
    pub fn beats(&self, other: &SmpCandidate) -> bool {
        let band = TIE_REL * self.value.max(other.value);
        if self.value > other.value + band {
            return true;
        }
        if self.value < other.value - band {
            return false;
        }
        (self.len(), &self.word) < (other.len(), &other.word)
    }
}

/// Largest operator norm in the set (1 if all vanish). Products are formed
/// on the set divided by this, which keeps long words finite.
fn set_scale(set: &MatrixSet) -> f64 {
    let s = set.matrices().iter().map(operator_norm_2).fold(0.0, f64::max);
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

fn euler_phi(mut d: usize) -> usize {
    let mut out = d;
    let mut p = 2;
    while p * p <= d {
        if d % p == 0 {
            while d % p == 0 {
                d /= p;
            }
            out -= out / p;
        }
        p += 1;
    }
    if d > 1 {
        out -= out / d;
    }
    out
}

/// Number of m-ary necklaces of length `k`.
pub fn necklace_count(m: usize, k: usize) -> f64 {
    let sum: f64 = (1..=k)
        .filter(|d| k % d == 0)
        .map(|d| euler_phi(d) as f64 * (m as f64).powi((k / d) as i32))
        .sum();
    sum / k as f64
}

/// Spectral evaluations needed by `smp_search` up to `max_len`.
pub fn smp_search_cost(m: usize, max_len: usize) -> f64 {
    (1..=max_len).map(|k| necklace_count(m, k)).sum()
}

/// Averaged radii per Lyndon word, in unscaled units. Survives restarts.
#[derive(Debug, Default, Clone)]
pub struct SpectralCache {
    map: HashMap<ProductWord, f64>,
}

impl SpectralCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    fn averaged(&mut self, canonical: &ProductWord, product_scaled: &CMat, scale: f64) -> Result<f64> {
        if let Some(&v) = self.map.get(canonical) {
            return Ok(v);
        }
        let v = scale * spectral_radius(product_scaled)?.powf(1.0 / canonical.len() as f64);
        self.map.insert(canonical.clone(), v);
        Ok(v)
    }

    /// Averaged radius of an arbitrary word (cached under its canonical
    /// rotation).
    pub fn value_of(&mut self, word: &ProductWord, set: &MatrixSet) -> Result<f64> {
        let canon = cyclic_canonical(word);
        if let Some(&v) = self.map.get(&canon) {
            return Ok(v);
        }
        let s = set_scale(set);
        let p = product_eval(&canon, &set.scaled(s))?;
        self.averaged(&canon, &p, s)
    }
}

/// FKM walk over prenecklaces up to `max_len`; `visit` sees every Lyndon
/// word with its (scaled) product. `a[0]` is a sentinel.
fn walk_lyndon(
    ops: &[CMat],
    max_len: usize,
    a: &mut Vec<usize>,
    p: usize,
    prefix: &CMat,
    visit: &mut dyn FnMut(&[usize], &CMat) -> Result<()>,
) -> Result<()> {
    let t = a.len();
    if t > max_len {
        return Ok(());
    }
    let base = a[t - p];
    for (j, op) in ops.iter().enumerate().skip(base) {
        let np = if j == base { p } else { t };
        a.push(j);
        let prod = prefix * op;
        if np == t {
            visit(&a[1..], &prod)?;
        }
        walk_lyndon(ops, max_len, a, np, &prod, visit)?;
        a.pop();
    }
    Ok(())
}

pub fn smp_search(set: &MatrixSet, max_len: usize, product_budget: usize) -> Result<SmpCandidate> {
    smp_search_cached(set, max_len, product_budget, &mut SpectralCache::new())
}

/// Best averaged spectral radius over all words of length `<= max_len`.
pub fn smp_search_cached(
    set: &MatrixSet,
    max_len: usize,
    product_budget: usize,
    cache: &mut SpectralCache,
) -> Result<SmpCandidate> {
    if max_len == 0 {
        return Err(JsrError::input("max_smp_len must be at least 1"));
    }
    let cost = smp_search_cost(set.len(), max_len);
    if cost > product_budget as f64 {
        return Err(JsrError::Budget {
            what: format!("SMP search to length {max_len} over {} matrices (try a smaller depth)", set.len()),
            needed: cost,
            budget: product_budget,
        });
    }
    let s = set_scale(set);
    let scaled = set.scaled(s);
    let n = set.dim();
    let mut best: Option<SmpCandidate> = None;
    let mut visit = |w: &[usize], prod: &CMat| -> Result<()> {
        let word = ProductWord::new(w.to_vec());
        let value = cache.averaged(&word, prod, s)?;
        let cand = SmpCandidate { word, value };
        if best.as_ref().is_none_or(|b| cand.beats(b)) {
            best = Some(cand);
        }
        Ok(())
    };
    let mut a = vec![0usize];
    walk_lyndon(scaled.matrices(), max_len, &mut a, 1, &CMat::identity(n, n), &mut visit)?;
    best.ok_or_else(|| JsrError::numeric("SMP search visited no word"))
}

/// Best averaged radius over the contiguous subwords of `word`.
pub fn subproduct_scan(word: &ProductWord, set: &MatrixSet) -> Result<SmpCandidate> {
    subproduct_scan_cached(word, set, &mut SpectralCache::new())
}

pub fn subproduct_scan_cached(word: &ProductWord, set: &MatrixSet, cache: &mut SpectralCache) -> Result<SmpCandidate> {
    if word.is_empty() {
        return Err(JsrError::input("subproduct scan needs a nonempty word"));
    }
    word.validate(set.len())?;
    let mut best: Option<SmpCandidate> = None;
    for sub in word.subwords() {
        let value = cache.value_of(&sub, set)?;
        let cand = SmpCandidate { word: cyclic_canonical(&sub), value };
        if best.as_ref().is_none_or(|b| cand.beats(b)) {
            best = Some(cand);
        }
    }
    Ok(best.expect("nonempty word has a subword"))
}

/// Best averaged radius over the prefixes of `word`. When every proper
/// suffix of `word` has been scanned before (as happens along a trajectory,
/// where each vertex word extends a previous one on the left), the prefixes
/// are exactly the contiguous subwords not seen yet.
pub(crate) fn prefix_scan(word: &ProductWord, set: &MatrixSet, cache: &mut SpectralCache) -> Result<Option<SmpCandidate>> {
    let idx = word.indices();
    let s = set_scale(set);
    let scaled = set.scaled(s);
    let n = set.dim();
    let mut prod = CMat::identity(n, n);
    let mut best: Option<SmpCandidate> = None;
    for k in 0..idx.len() {
        prod *= scaled.matrix(idx[k]);
        let sub = ProductWord::new(idx[..=k].to_vec());
        let canon = cyclic_canonical(&sub);
        let value = cache.averaged(&canon, &prod, s)?;
        let cand = SmpCandidate { word: canon, value };
        if best.as_ref().is_none_or(|b| cand.beats(b)) {
            best = Some(cand);
        }
    }
    Ok(best)
}

/// Result of the exhaustive sandwich oracle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteForceBounds {
    pub lower: f64,
    pub upper: f64,
    pub lower_word: ProductWord,
    /// Word length actually reached.
    pub depth: usize,
    /// False when the budget stopped the enumeration before the requested
    /// depth; the bounds are still valid.
    pub complete: bool,
}

/// Every word up to `max_len`; the flag marks Lyndon words. `period` is
/// the FKM period while the path is still a prenecklace.
fn walk_all(
    ops: &[CMat],
    max_len: usize,
    path: &mut Vec<usize>,
    period: Option<usize>,
    prefix: &CMat,
    visit: &mut dyn FnMut(&[usize], &CMat, bool) -> Result<()>,
) -> Result<()> {
    let t = path.len();
    if t > max_len {
        return Ok(());
    }
    for (j, op) in ops.iter().enumerate() {
        let np = period.and_then(|p| match j.cmp(&path[t - p]) {
            std::cmp::Ordering::Equal => Some(p),
            std::cmp::Ordering::Greater => Some(t),
            std::cmp::Ordering::Less => None,
        });
        path.push(j);
        let prod = prefix * op;
        visit(&path[1..], &prod, np == Some(t))?;
        walk_all(ops, max_len, path, np, &prod, visit)?;
        path.pop();
    }
    Ok(())
}

/// Products evaluated by `brute_force_bounds` to `depth`: every word gets a
/// norm, every necklace a spectral radius.
pub fn brute_force_cost(m: usize, depth: usize) -> f64 {
    (1..=depth).map(|k| (m as f64).powi(k as i32) + necklace_count(m, k)).sum()
}

/// `lower = max_{k <= depth} max_{|w| = k} rho(A_w)^{1/k}`,
/// `upper = min_{k <= depth} (max_{|w| = k} |A_w|_2)^{1/k}`.
pub fn brute_force_bounds(set: &MatrixSet, depth: usize, product_budget: usize) -> Result<BruteForceBounds> {
    if depth == 0 {
        return Err(JsrError::input("depth must be at least 1"));
    }
    let m = set.len();
    let mut reach = 0;
    while reach < depth && brute_force_cost(m, reach + 1) <= product_budget as f64 {
        reach += 1;
    }
    if reach == 0 {
        return Err(JsrError::Budget {
            what: format!("brute-force bounds at depth 1 over {m} matrices"),
            needed: brute_force_cost(m, 1),
            budget: product_budget,
        });
    }
    if reach < depth {
        log::warn!(
            "brute-force bounds: depth {depth} needs {:.3e} products, budget {product_budget}; stopping at depth {reach}",
            brute_force_cost(m, depth)
        );
    }

    let s = set_scale(set);
    let scaled = set.scaled(s);
    let n = set.dim();
    let mut max_norm = vec![0.0f64; reach + 1];
    let mut best: Option<SmpCandidate> = None;

    let mut visit = |w: &[usize], prod: &CMat, lyndon: bool| -> Result<()> {
        let t = w.len();
        max_norm[t] = max_norm[t].max(operator_norm_2(prod));
        if lyndon {
            let value = s * spectral_radius(prod)?.powf(1.0 / t as f64);
            let cand = SmpCandidate { word: ProductWord::new(w.to_vec()), value };
            if best.as_ref().is_none_or(|b| cand.beats(b)) {
                best = Some(cand);
            }
        }
        Ok(())
    };
    let mut path = vec![0usize];
    walk_all(scaled.matrices(), reach, &mut path, Some(1), &CMat::identity(n, n), &mut visit)?;

    let upper = (1..=reach)
        .map(|k| s * max_norm[k].powf(1.0 / k as f64))
        .fold(f64::INFINITY, f64::min);
    let best = best.expect("depth >= 1 visits every single letter");
    Ok(BruteForceBounds {
        lower: best.value,
        upper,
        lower_word: best.word,
        depth: reach,
        complete: reach == depth,
    })
}
