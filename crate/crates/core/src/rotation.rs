//! Real orthogonal rotations for full diversity, the minimum product
//! distance criterion, and a Givens-angle search that maximizes it.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use rand::Rng;
use rayon::prelude::*;

use crate::channel::RngStream;
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::numerics::{dft_matrix, orthogonality_defect, theta4, to_complex, ComplexMatrix, RealMatrix};

/// Orthogonality tolerance for a constructed rotation.
pub const ORTHOGONAL_TOL: f64 = 1e-12;
/// Loaded matrices further than this from orthogonal are rejected; closer
/// ones are snapped to the nearest orthogonal matrix.
pub const LOAD_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct RotationMatrix {
    r: RealMatrix,
}

impl RotationMatrix {
    pub fn new(r: RealMatrix) -> Result<Self> {
        if r.nrows() != r.ncols() || r.nrows() == 0 {
            return Err(Error::Dimension(format!("rotation must be square, got {}x{}", r.nrows(), r.ncols())));
        }
        let defect = orthogonality_defect(&r);
        if defect > ORTHOGONAL_TOL {
            return Err(Error::NotOrthogonal(defect));
        }
        Ok(Self { r })
    }

    pub fn identity(m: usize) -> Self {
        Self { r: RealMatrix::identity(m, m) }
    }

    /// Product `G(0,1,θ₀)·G(0,2,θ₁)·…·G(m-2,m-1,θ_last)` of plane rotations.
    pub fn from_givens(m: usize, angles: &[f64]) -> Result<Self> {
        if angles.len() != givens_count(m) {
            return Err(Error::Dimension(format!(
                "{} angles for dimension {m}, expected {}",
                angles.len(),
                givens_count(m)
            )));
        }
        Ok(Self { r: givens_product(m, angles) })
    }

    pub fn dim(&self) -> usize {
        self.r.nrows()
    }

    pub fn matrix(&self) -> &RealMatrix {
        &self.r
    }

    pub fn into_matrix(self) -> RealMatrix {
        self.r
    }

    /// `self · other`.
    pub fn compose(&self, other: &RotationMatrix) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::Dimension("rotation sizes differ".into()));
        }
        Self::new(&self.r * &other.r)
    }

    /// Text form: `m` on the first line, then `m` rows of `m` numbers.
    pub fn to_text(&self) -> String {
        let m = self.dim();
        let mut out = format!("{m}\n");
        for i in 0..m {
            let row: Vec<String> = (0..m).map(|j| format!("{:.17e}", self.r[(i, j)])).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let m: usize = lines
            .next()
            .ok_or_else(|| Error::Parse("empty rotation file".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("rotation size: {e}")))?;
        if m == 0 {
            return Err(Error::Parse("rotation size must be positive".into()));
        }
        let mut values = Vec::with_capacity(m * m);
        for i in 0..m {
            let line = lines.next().ok_or_else(|| Error::Parse(format!("missing row {}", i + 1)))?;
            let row: std::result::Result<Vec<f64>, _> = line.split_whitespace().map(str::parse::<f64>).collect();
            let row = row.map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))?;
            if row.len() != m {
                return Err(Error::Parse(format!("row {} has {} entries, expected {m}", i + 1, row.len())));
            }
            values.extend(row);
        }
        if lines.next().is_some() {
            return Err(Error::Parse("trailing data after rotation rows".into()));
        }
        let r = RealMatrix::from_row_slice(m, m, &values);
        let defect = orthogonality_defect(&r);
        if defect > LOAD_TOL {
            return Err(Error::NotOrthogonal(defect));
        }
        Self::new(nearest_orthogonal(&r))
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

/// Polar factor `UVᵀ` of the SVD.
fn nearest_orthogonal(r: &RealMatrix) -> RealMatrix {
    let svd = r.clone().svd(true, true);
    let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    u * vt
}

pub fn givens_count(m: usize) -> usize {
    m * m.saturating_sub(1) / 2
}

fn givens_product(m: usize, angles: &[f64]) -> RealMatrix {
    let mut r = RealMatrix::identity(m, m);
    let mut k = 0;
    for i in 0..m {
        for j in (i + 1)..m {
            let (s, c) = angles[k].sin_cos();
            k += 1;
            // Right-multiply by the plane rotation in (i, j).
            for row in 0..m {
                let (ri, rj) = (r[(row, i)], r[(row, j)]);
                r[(row, i)] = c * ri + s * rj;
                r[(row, j)] = -s * ri + c * rj;
            }
        }
    }
    r
}

/// `Θ·R`: the rotation seen by the 4Gp-QSTBC decoder when `R` is applied
/// at the transmitter.
pub fn combined_rotation_qstbc(r: &RotationMatrix) -> Result<RotationMatrix> {
    if r.dim() != 4 {
        return Err(Error::Dimension(format!("QSTBC rotation must be 4x4, got {}", r.dim())));
    }
    RotationMatrix::new(theta4() * r.matrix())
}

/// Transmit rotation whose combination with `Θ` is `target`, i.e. `Θ·target`.
pub fn qstbc_transmit_rotation(target: &RotationMatrix) -> Result<RotationMatrix> {
    combined_rotation_qstbc(target)
}

/// `F†·R`: the complex precoder applied to each real half of a 4Gp-SAST
/// data vector.
pub fn combined_rotation_sast(r: &RotationMatrix) -> ComplexMatrix {
    dft_matrix(r.dim()).adjoint() * to_complex(r.matrix())
}

/// Nonzero difference vectors between per-group real symbol vectors, kept
/// in the unscaled constellation coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceSet {
    dim: usize,
    raw: Vec<f64>,
    scale: f64,
}

fn key(v: &[f64]) -> Vec<i64> {
    v.iter().map(|x| (x * 1e9).round() as i64).collect()
}

impl DifferenceSet {
    /// All `u - w` for `u ≠ w` from `vectors` (each of length `dim`).
    pub fn from_vectors(vectors: &[Vec<f64>], scale: f64) -> Result<Self> {
        let dim = vectors.first().map(Vec::len).ok_or(Error::EmptyInput("symbol vectors"))?;
        let mut seen = BTreeSet::new();
        let mut raw = Vec::new();
        for u in vectors {
            for w in vectors {
                let d: Vec<f64> = u.iter().zip(w).map(|(a, b)| a - b).collect();
                if d.iter().all(|x| x.abs() < 1e-12) {
                    continue;
                }
                if seen.insert(key(&d)) {
                    raw.extend(d);
                }
            }
        }
        if raw.is_empty() {
            return Err(Error::EmptyInput("difference set"));
        }
        Ok(Self { dim, raw, scale })
    }

    /// Cartesian product of per-coordinate difference values (each list
    /// must contain 0), minus the zero vector.
    pub fn product(per_coord: &[Vec<f64>], scale: f64) -> Result<Self> {
        let dim = per_coord.len();
        if dim == 0 || per_coord.iter().any(Vec::is_empty) {
            return Err(Error::EmptyInput("coordinate differences"));
        }
        let mut raw = Vec::new();
        let mut idx = vec![0usize; dim];
        loop {
            let d: Vec<f64> = idx.iter().zip(per_coord).map(|(&i, c)| c[i]).collect();
            if d.iter().any(|x| x.abs() > 1e-12) {
                raw.extend(d);
            }
            let mut k = 0;
            loop {
                if k == dim {
                    if raw.is_empty() {
                        return Err(Error::EmptyInput("difference set"));
                    }
                    return Ok(Self { dim, raw, scale });
                }
                idx[k] += 1;
                if idx[k] < per_coord[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }

    /// Differences of `dim` independent real levels.
    pub fn from_levels(levels: &[f64], dim: usize, scale: f64) -> Result<Self> {
        Self::product(&vec![level_differences(levels); dim], scale)
    }

    /// Differences for a 4Gp-QSTBC group `(Re s₁, Re s₂, Im s₁, Im s₂)`.
    pub fn qstbc_group(c: &Constellation) -> Result<Self> {
        if let Some((re, im)) = c.axis_levels() {
            let (dr, di) = (level_differences(&re), level_differences(&im));
            return Self::product(&[dr.clone(), dr, di.clone(), di], c.scale());
        }
        let raw = c.raw();
        let mut vectors = Vec::with_capacity(raw.len() * raw.len());
        for s1 in raw {
            for s2 in raw {
                vectors.push(vec![s1.re, s2.re, s1.im, s2.im]);
            }
        }
        Self::from_vectors(&vectors, c.scale())
    }

    /// Differences for the 4Gp-SAST groups of `dim` real (or imaginary)
    /// parts. Needs a constellation whose real and imaginary parts are
    /// independent; both axes are merged into one set.
    pub fn sast_group(c: &Constellation, dim: usize) -> Result<Self> {
        let (re, im) = c.axis_levels().ok_or_else(|| {
            Error::Unsupported(format!("{} is not a product of real and imaginary levels", c.name()))
        })?;
        let a = Self::from_levels(&re, dim, c.scale())?;
        let b = Self::from_levels(&im, dim, c.scale())?;
        let mut seen: BTreeSet<Vec<i64>> = BTreeSet::new();
        let mut raw = Vec::new();
        for d in a.iter().chain(b.iter()) {
            if seen.insert(key(d)) {
                raw.extend_from_slice(d);
            }
        }
        Ok(Self { dim, raw, scale: c.scale() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.raw.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    /// Factor from raw coordinates to unit-power coordinates.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.raw.chunks_exact(self.dim)
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.raw[i * self.dim..(i + 1) * self.dim]
    }
}

/// Sorted distinct values `l_i - l_j`, including 0.
pub fn level_differences(levels: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = Vec::new();
    for a in levels {
        for b in levels {
            let d = a - b;
            if !out.iter().any(|x| (x - d).abs() < 1e-9) {
                out.push(d);
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductDistance {
    /// `min ∏|β_k|` in raw constellation units.
    pub dp_min: f64,
    /// Difference vector attaining the minimum.
    pub argmin: Vec<f64>,
}

fn product_of_rotated(r: &RealMatrix, d: &[f64]) -> f64 {
    let m = d.len();
    let mut prod = 1.0;
    for i in 0..m {
        let mut beta = 0.0;
        for (j, dj) in d.iter().enumerate() {
            beta += r[(i, j)] * dj;
        }
        prod *= beta.abs();
    }
    prod
}

/// `min over δ of ∏|β_k|`, `β = R·δ`.
pub fn product_distance(r: &RealMatrix, diffs: &DifferenceSet) -> Result<ProductDistance> {
    if diffs.is_empty() {
        return Err(Error::EmptyInput("difference set"));
    }
    if r.nrows() != diffs.dim() || r.ncols() != diffs.dim() {
        return Err(Error::Dimension(format!(
            "rotation {}x{} for {}-dimensional differences",
            r.nrows(),
            r.ncols(),
            diffs.dim()
        )));
    }
    let mut best = (f64::INFINITY, 0);
    for (i, d) in diffs.iter().enumerate() {
        let p = product_of_rotated(r, d);
        if p < best.0 {
            best = (p, i);
        }
    }
    Ok(ProductDistance { dp_min: best.0, argmin: diffs.get(best.1).to_vec() })
}

fn dp_min_fast(r: &RealMatrix, diffs: &DifferenceSet, floor: f64) -> f64 {
    let mut best = f64::INFINITY;
    for d in diffs.iter() {
        let p = product_of_rotated(r, d);
        if p < best {
            best = p;
            if best <= floor {
                break;
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerSettings {
    /// Independent random starts; the best result is kept.
    pub restarts: usize,
    pub seed: u64,
    pub initial_step: f64,
    pub final_step: f64,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self { restarts: 32, seed: 1, initial_step: 0.2, final_step: 1e-7 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizedRotation {
    pub rotation: RotationMatrix,
    pub dp_min: f64,
}

/// Union-bound surrogate `Σ ∏ (β_k²)^-2`, returned negated in log form so
/// larger is better. Smooth where the minimum product is not.
fn surrogate(r: &RealMatrix, diffs: &DifferenceSet) -> f64 {
    let m = diffs.dim();
    let mut total = 0.0;
    for d in diffs.iter() {
        let mut prod = 1.0;
        for i in 0..m {
            let mut beta = 0.0;
            for (j, dj) in d.iter().enumerate() {
                beta += r[(i, j)] * dj;
            }
            prod *= beta * beta;
        }
        total += 1.0 / (prod * prod).max(1e-300);
    }
    -total.ln()
}

fn coordinate_search(
    angles: &mut [f64],
    s: &OptimizerSettings,
    mut value: f64,
    eval: impl Fn(&[f64], f64) -> f64,
) -> f64 {
    let mut step = s.initial_step;
    while step >= s.final_step {
        let mut improved = false;
        for k in 0..angles.len() {
            for dir in [1.0, -1.0] {
                let old = angles[k];
                angles[k] = old + dir * step;
                let v = eval(angles, value);
                if v > value {
                    value = v;
                    improved = true;
                    break;
                }
                angles[k] = old;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    value
}

/// Orthogonal DCT-IV matrix `√(2/m)·cos((2k+1)(2l+1)π/(4m))`, the
/// starting point of the first optimizer restart.
pub fn dct4(m: usize) -> RealMatrix {
    let n = m as f64;
    RealMatrix::from_fn(m, m, |k, l| {
        (2.0 / n).sqrt() * (((2 * k + 1) * (2 * l + 1)) as f64 * std::f64::consts::PI / (4.0 * n)).cos()
    })
}

fn local_search(
    base: &RealMatrix,
    diffs: &DifferenceSet,
    mut angles: Vec<f64>,
    smooth_first: bool,
    s: &OptimizerSettings,
) -> (RealMatrix, f64) {
    let m = diffs.dim();
    let rot = |a: &[f64]| base * givens_product(m, a);
    if smooth_first {
        let start = surrogate(&rot(&angles), diffs);
        coordinate_search(&mut angles, s, start, |a, _| surrogate(&rot(a), diffs));
    }
    let start = dp_min_fast(&rot(&angles), diffs, -1.0);
    let value = coordinate_search(&mut angles, s, start, |a, floor| dp_min_fast(&rot(a), diffs, floor));
    (rot(&angles), value)
}

/// Local max-min refinement starting from `start`.
pub fn refine_rotation(
    diffs: &DifferenceSet,
    start: &RotationMatrix,
    settings: &OptimizerSettings,
) -> Result<OptimizedRotation> {
    let m = diffs.dim();
    if start.dim() != m {
        return Err(Error::Dimension("start rotation size differs from differences".into()));
    }
    let mut angles = vec![0.0; givens_count(m)];
    let base = start.matrix();
    let rot = |a: &[f64]| base * givens_product(m, a);
    let value = dp_min_fast(base, diffs, -1.0);
    coordinate_search(&mut angles, settings, value, |a, floor| dp_min_fast(&rot(a), diffs, floor));
    finish(rot(&angles), diffs)
}

fn finish(r: RealMatrix, diffs: &DifferenceSet) -> Result<OptimizedRotation> {
    // Products of Givens factors drift from orthogonal at the 1e-16 level.
    let rotation = RotationMatrix::new(nearest_orthogonal(&r))?;
    let dp_min = product_distance(rotation.matrix(), diffs)?.dp_min;
    Ok(OptimizedRotation { rotation, dp_min })
}

/// Searches for the rotation `R` maximizing `min ∏|(R·δ)_k|` over `diffs`.
/// Restart 0 climbs the minimum product directly from [`dct4`]. Restart
/// `i > 0` starts at random Givens angles drawn from stream `i` of `seed`,
/// first ascends a union-bound surrogate, then climbs the minimum product. The
/// result depends only on the settings, and adding restarts never lowers
/// the returned value.
pub fn optimize_rotation(diffs: &DifferenceSet, settings: &OptimizerSettings) -> Result<OptimizedRotation> {
    if settings.restarts == 0 {
        return Err(Error::Config("optimizer budget must be positive".into()));
    }
    if diffs.is_empty() {
        return Err(Error::EmptyInput("difference set"));
    }
    let m = diffs.dim();
    let n = givens_count(m);
    let runs: Vec<(RealMatrix, f64)> = (0..settings.restarts)
        .into_par_iter()
        .map(|i| {
            if i == 0 {
                return local_search(&dct4(m), diffs, vec![0.0; n], false, settings);
            }
            let mut rng = RngStream::new(settings.seed, i as u64);
            let start: Vec<f64> = (0..n).map(|_| rng.rng().random_range(0.0..std::f64::consts::TAU)).collect();
            local_search(&RealMatrix::identity(m, m), diffs, start, true, settings)
        })
        .collect();
    let mut best = 0;
    for (i, run) in runs.iter().enumerate() {
        if run.1 > runs[best].1 {
            best = i;
        }
    }
    finish(runs[best].0.clone(), diffs)
}

/// Orthogonal matrix `2/√(2m+1)·cos((2k+1)(2l+1)π/(2(2m+1)))`. Full
/// diversity on integer differences when `2m+1` is prime.
pub fn odd_cyclotomic(m: usize) -> RealMatrix {
    let n = (2 * m + 1) as f64;
    RealMatrix::from_fn(m, m, |k, l| {
        2.0 / n.sqrt() * (((2 * k + 1) * (2 * l + 1)) as f64 * std::f64::consts::PI / (2.0 * n)).cos()
    })
}

fn is_prime(n: usize) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

/// Difference set used to tune defaults that have no closed form.
pub fn default_design_set(m: usize) -> DifferenceSet {
    let levels: &[f64] = if m <= 4 { &[-3.0, -1.0, 1.0, 3.0] } else { &[-1.0, 1.0] };
    DifferenceSet::from_levels(levels, m, 1.0).expect("nonempty levels")
}

/// Full-diversity rotation for dimension `m`: [`odd_cyclotomic`] when
/// `2m+1` is prime, [`dct4`] when `m` is a power of two, otherwise an
/// optimizer result computed once with a fixed seed and cached.
pub fn default_rotation(m: usize) -> Result<RotationMatrix> {
    if m == 0 {
        return Err(Error::Dimension("rotation dimension must be positive".into()));
    }
    if m == 1 {
        return Ok(RotationMatrix::identity(1));
    }
    if is_prime(2 * m + 1) {
        return RotationMatrix::new(odd_cyclotomic(m));
    }
    if m.is_power_of_two() {
        return RotationMatrix::new(dct4(m));
    }
    static CACHE: OnceLock<std::sync::Mutex<Vec<(usize, RotationMatrix)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some((_, r)) = cache.lock().expect("cache lock").iter().find(|(k, _)| *k == m) {
        return Ok(r.clone());
    }
    let settings = OptimizerSettings { restarts: 8, seed: 1, ..Default::default() };
    let r = optimize_rotation(&default_design_set(m), &settings)?.rotation;
    cache.lock().expect("cache lock").push((m, r.clone()));
    Ok(r)
}
