//! NK fitness landscape backend.
//!
//! A landscape over binary strings of length `N` sums, per locus, a table
//! lookup keyed by the locus bit and the bits of its `K` epistatic links,
//! then averages; fitness lies in `[0, 1]` and is maximized. Instances are
//! generated once, serialized to a text format and referenced by file, so
//! every consumer sees identical tables.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::grid::Orientation;
use crate::problem::Problem;
use crate::RunRng;

/// Binary string of length `N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitString(pub Vec<bool>);

impl BitString {
    pub fn zeros(n: usize) -> Self {
        BitString(vec![false; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Bits taken from the low `n` bits of `code`, most significant bit
    /// first; ascending codes enumerate strings in lexicographic order.
    pub fn from_code(code: u64, n: usize) -> Self {
        BitString((0..n).map(|i| (code >> (n - 1 - i)) & 1 == 1).collect())
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &bit in &self.0 {
            write!(f, "{}", if bit { '1' } else { '0' })?;
        }
        Ok(())
    }
}

/// How each locus's epistatic links are laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NkModel {
    /// The `K` nearest loci with periodic boundaries.
    Adjacent,
    /// `K` distinct loci drawn uniformly from the others.
    Random,
}

impl fmt::Display for NkModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NkModel::Adjacent => "adjacent",
            NkModel::Random => "random",
        })
    }
}

impl FromStr for NkModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "adjacent" => Ok(NkModel::Adjacent),
            "random" => Ok(NkModel::Random),
            other => Err(format!("unknown model {other:?} (adjacent|random)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum NkError {
    #[error("epistasis level K = {k} out of range for N = {n} (need 0 <= K <= N-1)")]
    KOutOfRange { n: usize, k: usize },
    #[error("exhaustive optimum refused for N = {n}: limit is N <= {limit}")]
    TooLargeForEnumeration { n: usize, limit: usize },
}

#[derive(Debug, Error)]
pub enum NkParseError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: table value {value} outside [0, 1]")]
    ValueOutOfRange { line: usize, value: f64 },
    #[error("reading instance file: {0}")]
    Io(#[from] std::io::Error),
}

/// An NK landscape: per-locus links and `2^(K+1)`-entry component tables.
#[derive(Debug, Clone, PartialEq)]
pub struct NkLandscape {
    n: usize,
    k: usize,
    model: NkModel,
    /// `links[i]` holds the K loci (all distinct, none equal to `i`) whose
    /// bits join locus `i`'s table index.
    links: Vec<Vec<usize>>,
    /// `tables[i][idx]` with `idx` the big-endian bit pattern
    /// `(x_i, x_links[0], ..., x_links[K-1])`, `x_i` most significant.
    tables: Vec<Vec<f64>>,
}

/// Canonical adjacent links of a locus: `floor(K/2)` loci to the left and
/// `ceil(K/2)` to the right, periodic, listed by ascending offset.
fn adjacent_links(n: usize, k: usize, locus: usize) -> Vec<usize> {
    let left = k / 2;
    let right = k - left;
    let mut links = Vec::with_capacity(k);
    for offset in (1..=left).rev() {
        links.push((locus + n - offset) % n);
    }
    for offset in 1..=right {
        links.push((locus + offset) % n);
    }
    links
}

impl NkLandscape {
    /// Generate a fresh instance; adjacent links are deterministic, random
    /// links are drawn without replacement, table values i.i.d. uniform on
    /// `[0, 1]`.
    pub fn generate(n: usize, k: usize, model: NkModel, rng: &mut RunRng) -> Self {
        assert!(n >= 1, "N must be >= 1");
        assert!(k < n, "K must satisfy 0 <= K <= N-1, got K = {k}, N = {n}");
        let links: Vec<Vec<usize>> = match model {
            NkModel::Adjacent => (0..n).map(|i| adjacent_links(n, k, i)).collect(),
            NkModel::Random => (0..n)
                .map(|i| {
                    let mut chosen: Vec<usize> = rand::seq::index::sample(rng, n - 1, k)
                        .into_iter()
                        .map(|idx| if idx < i { idx } else { idx + 1 })
                        .collect();
                    chosen.sort_unstable();
                    chosen
                })
                .collect(),
        };
        let table_len = 1usize << (k + 1);
        let tables = (0..n)
            .map(|_| (0..table_len).map(|_| rng.random::<f64>()).collect())
            .collect();
        NkLandscape {
            n,
            k,
            model,
            links,
            tables,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn model(&self) -> NkModel {
        self.model
    }

    pub fn links(&self, locus: usize) -> &[usize] {
        &self.links[locus]
    }

    /// Mean of the `N` component lookups; always in `[0, 1]`.
    pub fn evaluate(&self, x: &BitString) -> f64 {
        assert_eq!(x.len(), self.n, "bit string length mismatch");
        let bits = &x.0;
        let mut total = 0.0;
        for locus in 0..self.n {
            let mut index = bits[locus] as usize;
            for &link in &self.links[locus] {
                index = (index << 1) | bits[link] as usize;
            }
            total += self.tables[locus][index];
        }
        total / self.n as f64
    }

    /// Exhaustive maximum over all `2^N` strings; refused above `N = 24`.
    /// Ties keep the lexicographically smallest string.
    pub fn global_optimum_bruteforce(&self) -> Result<(BitString, f64), NkError> {
        const LIMIT: usize = 24;
        if self.n > LIMIT {
            return Err(NkError::TooLargeForEnumeration {
                n: self.n,
                limit: LIMIT,
            });
        }
        let mut best_code = 0u64;
        let mut best_value = f64::NEG_INFINITY;
        for code in 0..(1u64 << self.n) {
            let value = self.evaluate(&BitString::from_code(code, self.n));
            if value > best_value {
                best_value = value;
                best_code = code;
            }
        }
        Ok((BitString::from_code(best_code, self.n), best_value))
    }

    /// Text serialization: header `NK <N> <K> <model>`, then `N` link lines,
    /// then `N` table lines of `2^(K+1)` values each.
    pub fn serialize(&self) -> String {
        let mut out = format!("NK {} {} {}\n", self.n, self.k, self.model);
        for links in &self.links {
            let line: Vec<String> = links.iter().map(|l| l.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        for table in &self.tables {
            let line: Vec<String> = table.iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, NkParseError> {
        let malformed = |line: usize, message: String| NkParseError::Malformed { line, message };
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| malformed(1, "empty input".into()))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "NK" {
            return Err(malformed(
                1,
                format!("expected header `NK <N> <K> <adjacent|random>`, found {header:?}"),
            ));
        }
        let n: usize = fields[1]
            .parse()
            .map_err(|_| malformed(1, format!("bad N {:?}", fields[1])))?;
        let k: usize = fields[2]
            .parse()
            .map_err(|_| malformed(1, format!("bad K {:?}", fields[2])))?;
        let model: NkModel = fields[3].parse().map_err(|e| malformed(1, e))?;
        if n == 0 {
            return Err(malformed(1, "N must be >= 1".into()));
        }
        if k >= n {
            return Err(malformed(
                1,
                format!("K = {k} out of range for N = {n} (need K <= N-1)"),
            ));
        }

        let mut links = Vec::with_capacity(n);
        for locus in 0..n {
            let line_no = 2 + locus;
            let line = lines
                .next()
                .ok_or_else(|| malformed(line_no, "missing link line".into()))?;
            let parsed: Result<Vec<usize>, _> = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| malformed(line_no, format!("bad link {t:?}")))
                })
                .collect();
            let parsed = parsed?;
            if parsed.len() != k {
                return Err(malformed(
                    line_no,
                    format!("expected {k} links, found {}", parsed.len()),
                ));
            }
            let mut seen = vec![false; n];
            for &link in &parsed {
                if link >= n {
                    return Err(malformed(line_no, format!("link {link} out of range")));
                }
                if link == locus {
                    return Err(malformed(line_no, format!("locus {locus} links to itself")));
                }
                if seen[link] {
                    return Err(malformed(line_no, format!("duplicate link {link}")));
                }
                seen[link] = true;
            }
            links.push(parsed);
        }
        if model == NkModel::Adjacent {
            for (locus, found) in links.iter().enumerate() {
                let mut expected = adjacent_links(n, k, locus);
                let mut sorted = found.clone();
                sorted.sort_unstable();
                expected.sort_unstable();
                if sorted != expected {
                    return Err(malformed(
                        2 + locus,
                        format!("links {found:?} are not the {k} nearest loci of {locus}"),
                    ));
                }
            }
        }

        let table_len = 1usize << (k + 1);
        let mut tables = Vec::with_capacity(n);
        for locus in 0..n {
            let line_no = 2 + n + locus;
            let line = lines
                .next()
                .ok_or_else(|| malformed(line_no, "missing table line".into()))?;
            let mut table = Vec::with_capacity(table_len);
            for token in line.split_whitespace() {
                let value: f64 = token
                    .parse()
                    .map_err(|_| malformed(line_no, format!("bad table value {token:?}")))?;
                if !(0.0..=1.0).contains(&value) {
                    return Err(NkParseError::ValueOutOfRange {
                        line: line_no,
                        value,
                    });
                }
                table.push(value);
            }
            if table.len() != table_len {
                return Err(malformed(
                    line_no,
                    format!("expected {table_len} table values, found {}", table.len()),
                ));
            }
            tables.push(table);
        }
        for (extra_no, line) in lines.enumerate() {
            if !line.trim().is_empty() {
                return Err(malformed(
                    2 + 2 * n + extra_no,
                    format!("unexpected trailing content {line:?}"),
                ));
            }
        }
        Ok(NkLandscape {
            n,
            k,
            model,
            links,
            tables,
        })
    }

    pub fn load(path: &Path) -> Result<Self, NkParseError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

/// Cut point uniform in `1..N`; the children exchange suffixes.
pub fn one_point_crossover(
    a: &BitString,
    b: &BitString,
    rng: &mut RunRng,
) -> (BitString, BitString) {
    let n = a.len();
    assert_eq!(n, b.len(), "parents must have equal length");
    assert!(n >= 2, "crossover needs N >= 2");
    let cut = rng.random_range(1..n);
    let mut child_a = a.0.clone();
    let mut child_b = b.0.clone();
    child_a[cut..].copy_from_slice(&b.0[cut..]);
    child_b[cut..].copy_from_slice(&a.0[cut..]);
    (BitString(child_a), BitString(child_b))
}

/// Flip each bit independently with probability `1 / N`.
pub fn bit_flip_mutation(x: &mut BitString, rng: &mut RunRng) {
    let n = x.len();
    assert!(n >= 1);
    let rate = 1.0 / n as f64;
    for bit in &mut x.0 {
        if rng.random::<f64>() < rate {
            *bit = !*bit;
        }
    }
}

impl Problem for NkLandscape {
    type Genotype = BitString;

    fn orientation(&self) -> Orientation {
        Orientation::Maximize
    }

    fn random_solution(&self, rng: &mut RunRng) -> BitString {
        BitString((0..self.n).map(|_| rng.random::<bool>()).collect())
    }

    fn evaluate(&self, genotype: &BitString) -> f64 {
        NkLandscape::evaluate(self, genotype)
    }

    fn crossover(
        &self,
        a: &BitString,
        b: &BitString,
        rng: &mut RunRng,
    ) -> (BitString, BitString) {
        one_point_crossover(a, b, rng)
    }

    fn mutate(&self, genotype: &mut BitString, rng: &mut RunRng) {
        bit_flip_mutation(genotype, rng);
    }
}
