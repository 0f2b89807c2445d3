//! Winning-pattern sets and their lattice-path description.
//!
//! A pattern vector `(b_k, ..., b_1)` records how many successes fell into
//! each block of a threshold strategy, outermost block first. Three families
//! of length-`k` vectors matter:
//!
//! - `Ξ̂_k` (`hat`): every prefix satisfies `b_k + ... + b_k' + k' <= k + 1`
//!   and the total is at least one. A realization wins iff some left
//!   truncated subvector of its pattern vector lies in some `Ξ̂_k`.
//! - `Ξ_k` (`xi`): members of `Ξ̂_k` with no proper left truncated subvector
//!   in any `Ξ̂_k'`. Each winning realization matches exactly one `Ξ_k`.
//! - `Ξ⁺_k` (`xi_plus`): members of `Ξ̂_k` with total exactly `k`; they are
//!   the paths from `(k, k)` to `(0, 0)` in the lattice graph `G_m`.
//!
//! Slices passed to the predicates here are always in the same outermost-
//! first order, so a left truncated subvector of length `k'` is the slice
//! suffix `&b[b.len() - k'..]`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::strategy::BlockPartition;

/// Largest `k` for which pattern sets are materialized.
pub const MAX_PATTERN_K: usize = 12;

/// Largest `k` accepted by the counting-only path of [`xi_count`].
pub const MAX_COUNT_K: usize = 60;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PatternVector(Vec<u32>);

impl PatternVector {
    pub fn new(entries: Vec<u32>) -> Self {
        PatternVector(entries)
    }

    /// Length `k` of the vector.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Entries `(b_k, ..., b_1)`.
    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    /// `b_j` for block subscript `1 <= j <= k`.
    pub fn b(&self, j: usize) -> u32 {
        self.0[self.0.len() - j]
    }

    /// The left truncated subvector `(b_k', ..., b_1)`.
    pub fn truncated(&self, k_prime: usize) -> &[u32] {
        &self.0[self.0.len() - k_prime..]
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl From<Vec<u32>> for PatternVector {
    fn from(entries: Vec<u32>) -> Self {
        PatternVector(entries)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    Hat,
    Xi,
    XiPlus,
}

/// A materialized pattern set in canonical (lexicographically descending)
/// order. Serializes as `{"k":4,"kind":"xi","vectors":[[1,0,0,0],...]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternSet {
    pub k: usize,
    pub kind: PatternKind,
    pub vectors: Vec<PatternVector>,
}

impl PatternSet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn contains(&self, b: &[u32]) -> bool {
        self.vectors.iter().any(|v| v.entries() == b)
    }
}

fn check_k(k: usize, max: usize) -> Result<()> {
    if k == 0 || k > max {
        return Err(Error::OutOfRange {
            what: "pattern length k",
            value: k,
            min: 1,
            max,
        });
    }
    Ok(())
}

fn canonical(mut vectors: Vec<PatternVector>) -> Vec<PatternVector> {
    vectors.sort_unstable_by(|a, b| b.cmp(a));
    vectors
}

/// Membership in `Ξ̂_k` with `k = b.len()`.
pub fn in_xi_hat(b: &[u32]) -> bool {
    let k = b.len();
    if k == 0 {
        return false;
    }
    let mut sum = 0u32;
    for (idx, &entry) in b.iter().enumerate() {
        sum += entry;
        let k_prime = (k - idx) as u32;
        if sum + k_prime > k as u32 + 1 {
            return false;
        }
    }
    sum >= 1
}

/// Membership in `Ξ_k` by the definition: in `Ξ̂_k` and no proper left
/// truncated subvector in any `Ξ̂_k'`.
pub fn in_xi(b: &[u32]) -> bool {
    let k = b.len();
    in_xi_hat(b) && (1..k).all(|k_prime| !in_xi_hat(&b[k - k_prime..]))
}

/// Every index `k*` for which conditions (c1)–(c4) of the apex
/// characterization hold: the prefix constraint is strict above `k*`, tight
/// at `k*`, strict below, and all entries below `k*` vanish.
pub fn apex_candidates(b: &[u32]) -> Vec<usize> {
    let k = b.len();
    // slack[k'] = b_k + ... + b_k' + k'
    let mut prefix = vec![0u32; k + 2];
    let mut sum = 0u32;
    for (idx, &entry) in b.iter().enumerate() {
        sum += entry;
        prefix[k - idx] = sum + (k - idx) as u32;
    }
    let cap = k as u32 + 1;
    (1..=k)
        .filter(|&star| {
            prefix[star] == cap
                && (1..=k).filter(|&kp| kp != star).all(|kp| prefix[kp] < cap)
                && (1..star).all(|j| b[k - j] == 0)
        })
        .collect()
}

/// The unique apex of a `Ξ_k` member, `None` when (c1)–(c4) hold for no
/// index (or, impossibly for valid input, for several).
pub fn apex(b: &[u32]) -> Option<usize> {
    match apex_candidates(b).as_slice() {
        [star] => Some(*star),
        _ => None,
    }
}

/// Walks prefix constraints top-down, calling `visit` with each full vector.
fn for_each_hat(k: usize, visit: &mut dyn FnMut(&[u32])) {
    fn descend(k: usize, pos: usize, sum: u32, buf: &mut Vec<u32>, visit: &mut dyn FnMut(&[u32])) {
        if pos == 0 {
            if sum >= 1 {
                visit(buf);
            }
            return;
        }
        let room = (k as u32 + 1) - pos as u32 - sum;
        for entry in (0..=room).rev() {
            buf.push(entry);
            descend(k, pos - 1, sum + entry, buf, visit);
            buf.pop();
        }
    }
    let mut buf = Vec::with_capacity(k);
    descend(k, k, 0, &mut buf, visit);
}

/// `Ξ̂_k` in canonical order.
pub fn enumerate_xi_hat(k: usize) -> Result<PatternSet> {
    check_k(k, MAX_PATTERN_K)?;
    let mut vectors = Vec::new();
    for_each_hat(k, &mut |b| vectors.push(PatternVector(b.to_vec())));
    Ok(PatternSet {
        k,
        kind: PatternKind::Hat,
        vectors,
    })
}

/// `Ξ_k` by filtering `Ξ̂_k` against every shorter `Ξ̂_k'`.
pub fn enumerate_xi_reference(k: usize) -> Result<PatternSet> {
    check_k(k, MAX_PATTERN_K)?;
    let mut vectors = Vec::new();
    for_each_hat(k, &mut |b| {
        if in_xi(b) {
            vectors.push(PatternVector(b.to_vec()));
        }
    });
    Ok(PatternSet {
        k,
        kind: PatternKind::Xi,
        vectors,
    })
}

/// `Ξ_k` generated directly from the apex characterization: for each apex
/// `k*`, entries above it keep the prefix constraint strict, `b_k*` makes it
/// tight, and everything below is zero.
pub fn enumerate_xi(k: usize) -> Result<PatternSet> {
    check_k(k, MAX_PATTERN_K)?;
    fn above(
        k: usize,
        star: usize,
        pos: usize,
        sum: u32,
        buf: &mut Vec<u32>,
        out: &mut Vec<PatternVector>,
    ) {
        if pos == star {
            let mut v = buf.clone();
            v.push(k as u32 + 1 - star as u32 - sum);
            v.resize(k, 0);
            out.push(PatternVector(v));
            return;
        }
        // strict: sum + entry + pos <= k
        let room = k as u32 - pos as u32 - sum;
        for entry in (0..=room).rev() {
            buf.push(entry);
            above(k, star, pos - 1, sum + entry, buf, out);
            buf.pop();
        }
    }
    let mut vectors = Vec::new();
    let mut buf = Vec::with_capacity(k);
    for star in 1..=k {
        above(k, star, k, 0, &mut buf, &mut vectors);
    }
    Ok(PatternSet {
        k,
        kind: PatternKind::Xi,
        vectors: canonical(vectors),
    })
}

/// `Ξ⁺_k`: members of `Ξ̂_k` whose entries sum to `k`.
pub fn enumerate_xi_plus(k: usize) -> Result<PatternSet> {
    check_k(k, MAX_PATTERN_K)?;
    let mut vectors = Vec::new();
    for_each_hat(k, &mut |b| {
        if b.iter().sum::<u32>() == k as u32 {
            vectors.push(PatternVector(b.to_vec()));
        }
    });
    Ok(PatternSet {
        k,
        kind: PatternKind::XiPlus,
        vectors,
    })
}

pub fn enumerate(kind: PatternKind, k: usize) -> Result<PatternSet> {
    match kind {
        PatternKind::Hat => enumerate_xi_hat(k),
        PatternKind::Xi => enumerate_xi(k),
        PatternKind::XiPlus => enumerate_xi_plus(k),
    }
}

/// `|Ξ_k|` without materializing the set.
///
/// Entries above the apex obey the strict prefix constraint
/// `b_k + ... + b_k' <= k - k'` regardless of where the apex sits, so one
/// top-down pass over prefix sums yields, for every `k*`, the number of
/// admissible prefixes `(b_k, ..., b_{k*+1})`; the apex entry is then forced.
pub fn xi_count(k: usize) -> Result<u128> {
    check_k(k, MAX_COUNT_K)?;
    // ways[s] = number of admissible prefixes processed so far with sum s
    let mut ways = vec![0u128; k + 1];
    ways[0] = 1;
    let mut total = 1u128; // k* = k: the unit vector
    for pos in (2..=k).rev() {
        let cap = k - pos;
        let mut next = vec![0u128; k + 1];
        for (s, &count) in ways.iter().enumerate() {
            if count == 0 {
                continue;
            }
            for slot in next.iter_mut().take(cap + 1).skip(s) {
                *slot += count;
            }
        }
        ways = next;
        // ways now counts prefixes ending at block `pos`, i.e. apex pos - 1
        total += ways.iter().sum::<u128>();
    }
    Ok(total)
}

/// `Ξ_k` in canonical order, computed once per process.
pub fn xi(k: usize) -> Result<&'static [PatternVector]> {
    static CACHE: [OnceLock<Vec<PatternVector>>; MAX_PATTERN_K] =
        [const { OnceLock::new() }; MAX_PATTERN_K];
    check_k(k, MAX_PATTERN_K)?;
    Ok(CACHE[k - 1].get_or_init(|| {
        enumerate_xi(k)
            .expect("k already range-checked")
            .vectors
    }))
}

/// Per-block success counts `(b_m, ..., b_1)` of a realization; the block
/// before the outermost threshold is not counted.
pub fn pattern_vector(x: &[bool], blocks: &BlockPartition) -> Result<PatternVector> {
    if x.len() != blocks.n() {
        return Err(Error::LengthMismatch {
            expected: blocks.n(),
            found: x.len(),
        });
    }
    let m = blocks.m();
    let entries = (1..=m)
        .rev()
        .map(|k| blocks.block(k).filter(|&i| x[i - 1]).count() as u32)
        .collect();
    Ok(PatternVector(entries))
}

/// The `k` whose left truncated subvector `(b_k, ..., b_1)` lies in `Ξ_k`,
/// if any. At most one such `k` exists.
pub fn is_winning_pattern(b: &[u32]) -> Option<usize> {
    (1..=b.len()).find(|&k| in_xi(&b[b.len() - k..]))
}

/// All `k` with `(b_k, ..., b_1)` in `Ξ_k`; used to check uniqueness.
pub fn winning_witnesses(b: &[u32]) -> Vec<usize> {
    (1..=b.len())
        .filter(|&k| in_xi(&b[b.len() - k..]))
        .collect()
}

/// Vertices `((k, c_k), (k-1, c_{k-1}), ..., (0, c_0))` of the lattice path
/// associated with `b`, where `c_k = k` and `c_{j-1} = c_j - b_j`. Returns
/// `None` if some `c_j` would drop below `j`.
pub fn path_of_vector(b: &[u32]) -> Option<Vec<(usize, usize)>> {
    let k = b.len();
    let mut c = k as i64;
    let mut vertices = vec![(k, k)];
    for (idx, &entry) in b.iter().enumerate() {
        let level = k - idx - 1;
        c -= entry as i64;
        if c < level as i64 {
            return None;
        }
        vertices.push((level, c as usize));
    }
    Some(vertices)
}

/// Vector `(b_k, ..., b_1)` with `b_j = c_j - c_{j-1}` for a path given by
/// its vertices.
pub fn vector_of_path(vertices: &[(usize, usize)]) -> PatternVector {
    PatternVector(
        vertices
            .windows(2)
            .map(|w| (w[0].1 - w[1].1) as u32)
            .collect(),
    )
}

/// First apex of a path ending at `(0, 0)`: one more than the highest level
/// `j < k` where the path touches the diagonal (`c_j = j`).
pub fn first_apex(vertices: &[(usize, usize)]) -> Option<usize> {
    let k = vertices.first()?.0;
    vertices
        .iter()
        .skip(1)
        .find(|&&(level, c)| level < k && c == level)
        .map(|&(level, _)| level + 1)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LatticePath {
    pub vertices: Vec<(usize, usize)>,
    pub vector: PatternVector,
    pub first_apex: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct LatticePathReport {
    pub k: usize,
    pub paths: Vec<LatticePath>,
    /// The path-derived vectors coincide with `Ξ⁺_k` as sets.
    pub matches_xi_plus: bool,
}

/// Enumerates the directed paths of `G_k` from `(k, k)` to `(0, 0)` (an edge
/// goes from `(j, c)` to `(j - 1, c')` whenever `c >= c' >= j - 1`),
/// converts each to its vector and compares against `Ξ⁺_k`.
pub fn lattice_paths(k: usize) -> Result<LatticePathReport> {
    check_k(k, MAX_PATTERN_K)?;
    fn walk(level: usize, c: usize, stack: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if level == 0 {
            if c == 0 {
                out.push(stack.clone());
            }
            return;
        }
        for next in (level - 1..=c).rev() {
            stack.push((level - 1, next));
            walk(level - 1, next, stack, out);
            stack.pop();
        }
    }
    let mut raw = Vec::new();
    let mut stack = vec![(k, k)];
    walk(k, k, &mut stack, &mut raw);

    let paths: Vec<LatticePath> = raw
        .into_iter()
        .map(|vertices| {
            let vector = vector_of_path(&vertices);
            let first_apex = first_apex(&vertices).expect("path ends on the diagonal");
            LatticePath {
                vertices,
                vector,
                first_apex,
            }
        })
        .collect();

    let mut from_paths: Vec<PatternVector> = paths.iter().map(|p| p.vector.clone()).collect();
    from_paths = canonical(from_paths);
    from_paths.dedup();
    let xi_plus = enumerate_xi_plus(k)?;
    let matches_xi_plus = from_paths.len() == paths.len() && from_paths == xi_plus.vectors;
    Ok(LatticePathReport {
        k,
        paths,
        matches_xi_plus,
    })
}
