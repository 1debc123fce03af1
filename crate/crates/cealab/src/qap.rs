//! Quadratic assignment problem backend.
//!
//! An instance assigns `n` facilities to `n` locations; the cost of a
//! permutation `p` (where `p[i]` is the location of facility `i`) is
//! `sum_i sum_j distances[p[i)][p(j)] * flows[i][j]`, to be minimized.

use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::grid::Orientation;
use crate::problem::Problem;
use crate::RunRng;

/// Location assignment of the `n` facilities; always a bijection on
/// `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation(pub Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// True when the mapping is a bijection on `0..n`.
    pub fn is_valid(&self) -> bool {
        let n = self.0.len();
        let mut seen = vec![false; n];
        for &v in &self.0 {
            if v >= n || seen[v] {
                return false;
            }
            seen[v] = true;
        }
        true
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum QapParseError {
    #[error("token {position}: expected a number, found {token:?}")]
    NonNumeric { position: usize, token: String },
    #[error("problem size must be positive, found {0}")]
    BadSize(i64),
    #[error("expected {expected} numeric tokens for n = {n}, found only {found}")]
    TooFewTokens {
        n: usize,
        expected: usize,
        found: usize,
    },
    #[error("unexpected extra token at position {position} (expected exactly {expected})")]
    TrailingTokens { position: usize, expected: usize },
    #[error("token {position}: matrix entry {value} is not finite")]
    NotFinite { position: usize, value: f64 },
    #[error("reading instance file: {0}")]
    Io(#[from] std::io::Error),
}

/// A QAP instance: flow matrix `F` between facilities and distance matrix
/// `D` between locations, both `n x n`, stored row-major.
#[derive(Debug, Clone)]
pub struct QapInstance {
    n: usize,
    distances: Vec<f64>,
    flows: Vec<f64>,
    name: String,
}

impl QapInstance {
    pub fn new(n: usize, flows: Vec<f64>, distances: Vec<f64>, name: impl Into<String>) -> Self {
        assert!(n >= 1, "instance size must be >= 1");
        assert_eq!(flows.len(), n * n, "flow matrix must be n x n");
        assert_eq!(distances.len(), n * n, "distance matrix must be n x n");
        assert!(
            flows.iter().chain(&distances).all(|v| v.is_finite()),
            "matrix entries must be finite"
        );
        QapInstance {
            n,
            distances,
            flows,
            name: name.into(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    #[inline]
    pub fn distance(&self, k: usize, l: usize) -> f64 {
        self.distances[k * self.n + l]
    }

    #[inline]
    pub fn flow(&self, i: usize, j: usize) -> f64 {
        self.flows[i * self.n + j]
    }

    /// Assignment cost of `p`.
    pub fn evaluate(&self, p: &Permutation) -> f64 {
        let n = self.n;
        assert_eq!(p.len(), n, "permutation size mismatch");
        let mapping = &p.0;
        let mut total = 0.0;
        for i in 0..n {
            let flow_row = &self.flows[i * n..(i + 1) * n];
            let dist_row = &self.distances[mapping[i] * n..(mapping[i] + 1) * n];
            for j in 0..n {
                total += dist_row[mapping[j]] * flow_row[j];
            }
        }
        total
    }

    /// Exhaustive minimum over all `n!` permutations. Refused above
    /// `n = 4`; ties keep the lexicographically smallest permutation.
    pub fn exhaustive_minimum(&self) -> Result<(Permutation, f64), QapOracleError> {
        if self.n > 4 {
            return Err(QapOracleError::TooLarge { n: self.n });
        }
        let mut best: Option<(Permutation, f64)> = None;
        let mut current = Permutation::identity(self.n);
        permute(&mut current.0, 0, &mut |candidate: &[usize]| {
            let p = Permutation(candidate.to_vec());
            let cost = self.evaluate(&p);
            let replace = match &best {
                None => true,
                Some((_, incumbent)) => cost < *incumbent,
            };
            if replace {
                best = Some((p, cost));
            }
        });
        Ok(best.expect("n >= 1 guarantees at least one permutation"))
    }
}

#[derive(Debug, Error)]
pub enum QapOracleError {
    #[error("exhaustive search refused for n = {n}: limit is n <= 4")]
    TooLarge { n: usize },
}

/// Heap-style recursive enumeration visiting permutations in lexicographic
/// order of the prefix choices.
fn permute(items: &mut [usize], start: usize, visit: &mut impl FnMut(&[usize])) {
    if start == items.len() {
        visit(items);
        return;
    }
    for i in start..items.len() {
        items.swap(start, i);
        permute(items, start + 1, visit);
        items.swap(start, i);
    }
}

struct TokenReader<'a> {
    tokens: std::str::SplitWhitespace<'a>,
    consumed: usize,
}

impl TokenReader<'_> {
    fn next_number(&mut self) -> Option<Result<f64, QapParseError>> {
        self.tokens.next().map(|token| {
            self.consumed += 1;
            token.parse::<f64>().map_err(|_| QapParseError::NonNumeric {
                position: self.consumed,
                token: token.to_string(),
            })
        })
    }

    fn read_matrix(&mut self, n: usize, expected: usize) -> Result<Vec<f64>, QapParseError> {
        let mut matrix = Vec::with_capacity(n * n);
        for _ in 0..n * n {
            match self.next_number() {
                Some(value) => {
                    let value = value?;
                    if !value.is_finite() {
                        return Err(QapParseError::NotFinite {
                            position: self.consumed,
                            value,
                        });
                    }
                    matrix.push(value);
                }
                None => {
                    return Err(QapParseError::TooFewTokens {
                        n,
                        expected,
                        found: self.consumed,
                    })
                }
            }
        }
        Ok(matrix)
    }
}

/// Parse the plain QAPLIB text format: `n`, then the `n x n` flow matrix,
/// then the `n x n` distance matrix, all whitespace-separated.
pub fn parse_qaplib(text: &str, name: impl Into<String>) -> Result<QapInstance, QapParseError> {
    let mut reader = TokenReader {
        tokens: text.split_whitespace(),
        consumed: 0,
    };
    let size_value = match reader.next_number() {
        Some(v) => v?,
        None => {
            return Err(QapParseError::TooFewTokens {
                n: 0,
                expected: 1,
                found: 0,
            })
        }
    };
    if size_value.fract() != 0.0 || size_value < 1.0 || size_value > (1 << 20) as f64 {
        return Err(QapParseError::BadSize(size_value as i64));
    }
    let n = size_value as usize;
    let expected = 1 + 2 * n * n;

    let flows = reader.read_matrix(n, expected)?;
    let distances = reader.read_matrix(n, expected)?;

    if reader.tokens.next().is_some() {
        return Err(QapParseError::TrailingTokens {
            position: expected + 1,
            expected,
        });
    }
    Ok(QapInstance::new(n, flows, distances, name))
}

/// Load an instance from a QAPLIB-format file; the file stem becomes the
/// instance name.
pub fn load_qaplib(path: &Path) -> Result<QapInstance, QapParseError> {
    let text = std::fs::read_to_string(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "qap".to_string());
    parse_qaplib(&text, name)
}

/// Uniformly random permutation (unbiased shuffle).
pub fn random_permutation(n: usize, rng: &mut RunRng) -> Permutation {
    assert!(n >= 1);
    let mut mapping: Vec<usize> = (0..n).collect();
    mapping.shuffle(rng);
    Permutation(mapping)
}

/// Permutation-preserving crossover: `max(1, n / 3)` times, pick a random
/// position `i`, locate `j` with `child_a[i] = child_b[j]` and `k` with
/// `child_b[i] = child_a[k]`, then swap positions `i, j` in the first child
/// and `i, k` in the second.
pub fn upmx_like_crossover(
    a: &Permutation,
    b: &Permutation,
    rng: &mut RunRng,
) -> (Permutation, Permutation) {
    let n = a.len();
    assert_eq!(n, b.len(), "parents must have equal size");
    assert!(n >= 2, "crossover needs n >= 2");

    let mut child_a = a.0.clone();
    let mut child_b = b.0.clone();
    // value -> position lookups, maintained across swaps
    let mut pos_a = vec![0usize; n];
    let mut pos_b = vec![0usize; n];
    for i in 0..n {
        pos_a[child_a[i]] = i;
        pos_b[child_b[i]] = i;
    }

    let repetitions = (n / 3).max(1);
    for _ in 0..repetitions {
        let i = rng.random_range(0..n);
        let j = pos_b[child_a[i]];
        let k = pos_a[child_b[i]];
        child_a.swap(i, j);
        pos_a[child_a[i]] = i;
        pos_a[child_a[j]] = j;
        child_b.swap(i, k);
        pos_b[child_b[i]] = i;
        pos_b[child_b[k]] = k;
    }
    (Permutation(child_a), Permutation(child_b))
}

/// Exchange two distinct random positions.
pub fn swap_mutation(p: &mut Permutation, rng: &mut RunRng) {
    let n = p.len();
    assert!(n >= 2, "mutation needs n >= 2");
    let first = rng.random_range(0..n);
    let mut second = rng.random_range(0..n - 1);
    if second >= first {
        second += 1;
    }
    p.0.swap(first, second);
}

impl Problem for QapInstance {
    type Genotype = Permutation;

    fn orientation(&self) -> Orientation {
        Orientation::Minimize
    }

    fn random_solution(&self, rng: &mut RunRng) -> Permutation {
        random_permutation(self.n, rng)
    }

    fn evaluate(&self, genotype: &Permutation) -> f64 {
        QapInstance::evaluate(self, genotype)
    }

    fn crossover(
        &self,
        a: &Permutation,
        b: &Permutation,
        rng: &mut RunRng,
    ) -> (Permutation, Permutation) {
        upmx_like_crossover(a, b, rng)
    }

    fn mutate(&self, genotype: &mut Permutation, rng: &mut RunRng) {
        swap_mutation(genotype, rng);
    }
}
