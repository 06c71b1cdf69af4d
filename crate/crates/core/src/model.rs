//! Shared domain types: permutations with Hamming-distance semantics, sparse
//! signals with explicit supports, problem instances, and recovery outcomes.
//!
//! All types are immutable after construction, validate their invariants both
//! at construction and on deserialization, and serialize to plain JSON-friendly
//! structures.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// A permutation of `{0, .., n-1}` stored as a destination map: source row `i`
/// of the design lands at row `map[i]` of the observation. With `y = P x` this
/// means `y[map[i]] = x[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PermutationRepr")]
pub struct Permutation {
    map: Vec<usize>,
}

#[derive(Deserialize)]
struct PermutationRepr {
    map: Vec<usize>,
}

impl TryFrom<PermutationRepr> for Permutation {
    type Error = Error;

    fn try_from(raw: PermutationRepr) -> Result<Self> {
        Permutation::from_map(raw.map)
    }
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation { map: (0..n).collect() }
    }

    /// Builds a permutation from a destination map, rejecting anything that is
    /// not a bijection on `{0, .., n-1}`.
    pub fn from_map(map: Vec<usize>) -> Result<Self> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &d in &map {
            if d >= n {
                return Err(Error::invalid(format!(
                    "destination {d} out of range for permutation of length {n}"
                )));
            }
            if seen[d] {
                return Err(Error::invalid(format!("destination {d} repeated; not a bijection")));
            }
            seen[d] = true;
        }
        Ok(Permutation { map })
    }

    /// A transposition of `a` and `b` (identity elsewhere).
    pub fn transposition(n: usize, a: usize, b: usize) -> Result<Self> {
        if a >= n || b >= n {
            return Err(Error::invalid(format!("transposition ({a},{b}) out of range for n={n}")));
        }
        let mut map: Vec<usize> = (0..n).collect();
        map.swap(a, b);
        Ok(Permutation { map })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn is_identity(&self) -> bool {
        self.map.iter().enumerate().all(|(i, &d)| i == d)
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &d) in self.map.iter().enumerate() {
            inv[d] = i;
        }
        Permutation { map: inv }
    }

    /// Number of indices the two permutations route differently. Symmetric,
    /// zero iff equal, and never 1 for bijections.
    pub fn hamming_distance(&self, other: &Permutation) -> Result<usize> {
        if self.len() != other.len() {
            return Err(Error::dim(format!(
                "hamming distance between permutations of lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(self
            .map
            .iter()
            .zip(&other.map)
            .filter(|(a, b)| a != b)
            .count())
    }

    /// Displacement from the identity, i.e. the number of moved indices.
    pub fn displacement(&self) -> usize {
        self.map.iter().enumerate().filter(|(i, &d)| *i != d).count()
    }

    /// Applies the permutation to a vector: `out[map[i]] = v[i]`.
    pub fn apply<T: Clone + Default>(&self, v: &[T]) -> Result<Vec<T>> {
        if v.len() != self.len() {
            return Err(Error::dim(format!(
                "applying permutation of length {} to vector of length {}",
                self.len(),
                v.len()
            )));
        }
        let mut out = vec![T::default(); v.len()];
        for (i, x) in v.iter().enumerate() {
            out[self.map[i]] = x.clone();
        }
        Ok(out)
    }

    /// All permutations of length `n` in lexicographic order of their maps.
    /// Intended for exhaustive searches at desk scale; callers guard `n`.
    pub fn enumerate_all(n: usize) -> Vec<Permutation> {
        use itertools::Itertools;
        if n == 0 {
            return vec![Permutation::identity(0)];
        }
        (0..n)
            .permutations(n)
            .map(|map| Permutation { map })
            .collect()
    }
}

/// A length-`p` real vector with at most `k` nonzero entries and an explicit
/// sorted support. `entries[j] != 0` exactly when `j` is in the support.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SparseSignalRepr")]
pub struct SparseSignal {
    length: usize,
    entries: Vec<f64>,
    support: Vec<usize>,
}

#[derive(Deserialize)]
struct SparseSignalRepr {
    length: usize,
    entries: Vec<f64>,
    support: Vec<usize>,
}

impl TryFrom<SparseSignalRepr> for SparseSignal {
    type Error = Error;

    fn try_from(raw: SparseSignalRepr) -> Result<Self> {
        if raw.entries.len() != raw.length {
            return Err(Error::dim(format!(
                "signal declares length {} but carries {} entries",
                raw.length,
                raw.entries.len()
            )));
        }
        let rebuilt = SparseSignal::from_dense(raw.entries, raw.length)?;
        if rebuilt.support != raw.support {
            return Err(Error::invalid(
                "signal support does not match its nonzero entries".to_string(),
            ));
        }
        Ok(rebuilt)
    }
}

impl SparseSignal {
    /// Builds a signal from dense entries, deriving the support from the
    /// nonzero positions. Fails if more than `max_support` entries are nonzero.
    pub fn from_dense(entries: Vec<f64>, max_support: usize) -> Result<Self> {
        ensure_finite(&entries, "sparse signal entries")?;
        let support: Vec<usize> = entries
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0.0)
            .map(|(j, _)| j)
            .collect();
        if support.len() > max_support {
            return Err(Error::invalid(format!(
                "{} nonzero entries exceed the sparsity bound {max_support}",
                support.len()
            )));
        }
        Ok(SparseSignal { length: entries.len(), entries, support })
    }

    pub fn zero(p: usize) -> Self {
        SparseSignal { length: p, entries: vec![0.0; p], support: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.length
    }

    pub fn is_empty(&self) -> bool {
        self.length == 0
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Number of nonzero entries.
    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn l2_norm(&self) -> f64 {
        self.support
            .iter()
            .map(|&j| self.entries[j] * self.entries[j])
            .sum::<f64>()
            .sqrt()
    }

    /// Elementwise sign agreement over the full length, the support-recovery
    /// event with sign information.
    pub fn sign_pattern_matches(&self, other: &SparseSignal) -> Result<bool> {
        if self.length != other.length {
            return Err(Error::dim(format!(
                "sign comparison between signals of lengths {} and {}",
                self.length, other.length
            )));
        }
        Ok(self.entries.iter().zip(&other.entries).all(|(a, b)| sign_of(*a) == sign_of(*b)))
    }
}

fn sign_of(x: f64) -> i8 {
    if x > 0.0 {
        1
    } else if x < 0.0 {
        -1
    } else {
        0
    }
}

/// Dense row-major matrix. Kept deliberately small: the solvers only need
/// column access, matrix-vector products, and serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<MatrixRepr> for Matrix {
    type Error = Error;

    fn try_from(raw: MatrixRepr) -> Result<Self> {
        if raw.data.len() != raw.rows * raw.cols {
            return Err(Error::dim(format!(
                "matrix declares {}x{} but carries {} values",
                raw.rows,
                raw.cols,
                raw.data.len()
            )));
        }
        ensure_finite(&raw.data, "matrix entries")?;
        Ok(Matrix { rows: raw.rows, cols: raw.cols, data: raw.data })
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::dim("matrix rows have unequal lengths".to_string()));
        }
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        ensure_finite(&data, "matrix entries")?;
        Ok(Matrix { rows: r, cols: c, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn matvec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::dim(format!(
                "matvec of {}x{} matrix with vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }
}

/// Ground truth carried by generated instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceTruth {
    pub permutation: Permutation,
    pub signal: SparseSignal,
    pub noise_sigma: f64,
}

impl InstanceTruth {
    /// Signal-to-noise ratio of the generating model; infinite when noiseless.
    pub fn snr(&self) -> f64 {
        let energy = self.signal.l2_norm().powi(2);
        if self.noise_sigma == 0.0 {
            f64::INFINITY
        } else {
            energy / (self.noise_sigma * self.noise_sigma)
        }
    }
}

/// A design matrix together with permuted noisy observations. Generated
/// instances additionally carry the ground truth used to produce them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub design: Matrix,
    pub observation: Vec<f64>,
    pub truth: Option<InstanceTruth>,
}

impl ProblemInstance {
    pub fn new(design: Matrix, observation: Vec<f64>, truth: Option<InstanceTruth>) -> Result<Self> {
        ensure_finite(&observation, "observation")?;
        if observation.len() != design.rows() {
            return Err(Error::dim(format!(
                "observation of length {} does not match design with {} rows",
                observation.len(),
                design.rows()
            )));
        }
        if let Some(t) = &truth {
            if t.permutation.len() != design.rows() {
                return Err(Error::dim("truth permutation length != sample number".to_string()));
            }
            if t.signal.len() != design.cols() {
                return Err(Error::dim("truth signal length != signal dimension".to_string()));
            }
            if !(t.noise_sigma >= 0.0) {
                return Err(Error::invalid("noise sigma must be nonnegative".to_string()));
            }
        }
        Ok(ProblemInstance { design, observation, truth })
    }

    /// Sample number n.
    pub fn n(&self) -> usize {
        self.design.rows()
    }

    /// Signal length p.
    pub fn p(&self) -> usize {
        self.design.cols()
    }
}

/// Outcome of the two-stage estimator, with success flags populated when the
/// instance carries ground truth (`None` otherwise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub permutation: Permutation,
    pub signal_estimate: SparseSignal,
    pub permutation_correct: Option<bool>,
    pub support_correct: Option<bool>,
    pub sign_consistent: Option<bool>,
}
