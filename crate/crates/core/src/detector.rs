//! Maximum-likelihood detection.
//!
//! Every front end reduces a received block to one real least-squares
//! problem per group, `min_d ‖target − basis·d‖²`, whose minimizer is the
//! group's share of the joint ML decision. The problems are solved by
//! exhaustive enumeration or by a Schnorr–Euchner sphere search.

use std::str::FromStr;

use num_complex::Complex64;

use crate::codebook::{klein_circulant, QSTBC8_ORDER};
use crate::error::{Error, Result};
use crate::numerics::{
    circulant, circulant_eigenvalues, dft_matrix, pi_permute_vec, theta4, ComplexMatrix, ComplexVector, RealMatrix,
    RealVector, SINGULAR_TOL,
};
use crate::scheme::{FrontEnd, Scheme, Unit};

/// Upper bound on the number of candidates the joint oracle will visit.
pub const ORACLE_LIMIT: u128 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Exhaustive,
    Sphere,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exhaustive" => Ok(Self::Exhaustive),
            "sphere" => Ok(Self::Sphere),
            _ => Err(Error::Config(format!("unknown detector `{s}` (expected exhaustive or sphere)"))),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Exhaustive => "exhaustive",
            Self::Sphere => "sphere",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exhaustive,
    Sphere,
    Oracle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    /// Constellation index per data symbol.
    pub symbols: Vec<usize>,
    /// Per-group metric, or a single joint metric for the oracle.
    pub per_group_metrics: Vec<f64>,
    pub method: Method,
}

/// `min_d ‖target − basis·d‖²` over one group's candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupProblem {
    pub target: RealVector,
    pub basis: RealMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    Qstbc8,
    Sast,
}

/// Diagonalized channel seen by the decoupled groups.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalentChannel {
    pub kind: ChannelKind,
    /// `Ĥ`, summed over receive antennas.
    pub gram: ComplexMatrix,
    /// `Ĥ^{1/2}` from the closed-form diagonalization.
    pub sqrt_gram: ComplexMatrix,
    /// `Σ |λ₁|² + |λ₂|²`: eigenvalues of `Ĥ` in the diagonalizer's order.
    pub eigenvalues: Vec<f64>,
    /// `Θ` for the QSTBC chain, `F` for SAST.
    pub diagonalizer: ComplexMatrix,
    /// Per receive antenna: the two channel blocks (`ℋ₁, ℋ₂` or `H₁, H₂`).
    pub blocks: Vec<(ComplexMatrix, ComplexMatrix)>,
}

impl EquivalentChannel {
    fn check_singular(&self) -> Result<()> {
        let min = self.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min < SINGULAR_TOL {
            return Err(Error::Singular(min));
        }
        Ok(())
    }

    /// `Ĥ^{-1/2}` from the closed-form diagonalization.
    pub fn inv_sqrt_gram(&self) -> Result<ComplexMatrix> {
        self.check_singular()?;
        Ok(self.spectral(|v| 1.0 / v.sqrt()))
    }

    fn spectral(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let d = &self.diagonalizer;
        let diag = ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|&v| Complex64::new(f(v.max(0.0)), 0.0)),
        ));
        d.adjoint() * diag * d
    }
}

fn col(h: &ComplexMatrix, n: usize) -> Vec<Complex64> {
    h.column(n).iter().copied().collect()
}

/// `(F₂⊗F₂)·v`: eigenvalues of the 4×4 block-circulant matrix generated
/// by `v`, in the order of `Θ`'s columns.
pub fn klein_eigenvalues(v: &[Complex64]) -> [Complex64; 4] {
    let t = theta4();
    let mut out = [Complex64::new(0.0, 0.0); 4];
    for (i, o) in out.iter_mut().enumerate() {
        for (j, x) in v.iter().enumerate() {
            *o += x * (2.0 * t[(i, j)]);
        }
    }
    out
}

/// Equivalent channel of the 8-antenna 4Gp-QSTBC. `h` is `8 × N` in the
/// original antenna order; each column is one receive antenna.
pub fn qstbc8_equivalent_channel(h: &ComplexMatrix) -> Result<EquivalentChannel> {
    if h.nrows() != 8 || h.ncols() == 0 {
        return Err(Error::Dimension(format!("QSTBC channel must be 8xN, got {}x{}", h.nrows(), h.ncols())));
    }
    let mut gram = ComplexMatrix::zeros(4, 4);
    let mut eigenvalues = vec![0.0; 4];
    let mut blocks = Vec::with_capacity(h.ncols());
    for n in 0..h.ncols() {
        let hd: Vec<Complex64> = QSTBC8_ORDER.iter().map(|&r| h[(r, n)]).collect();
        let h1 = klein_circulant(&hd[..4])?;
        let h2 = klein_circulant(&hd[4..])?;
        gram += h1.adjoint() * &h1 + h2.adjoint() * &h2;
        let (l1, l2) = (klein_eigenvalues(&hd[..4]), klein_eigenvalues(&hd[4..]));
        for j in 0..4 {
            eigenvalues[j] += l1[j].norm_sqr() + l2[j].norm_sqr();
        }
        blocks.push((h1, h2));
    }
    let diagonalizer = theta4().map(|v| Complex64::new(v, 0.0));
    let mut eq = EquivalentChannel {
        kind: ChannelKind::Qstbc8,
        gram,
        sqrt_gram: ComplexMatrix::zeros(4, 4),
        eigenvalues,
        diagonalizer,
        blocks,
    };
    eq.sqrt_gram = eq.spectral(f64::sqrt);
    Ok(eq)
}

/// Equivalent channel of the SAST family. `h` is `M × N`, `M` even.
pub fn sast_equivalent_channel(h: &ComplexMatrix) -> Result<EquivalentChannel> {
    let m = h.nrows();
    if m < 2 || m % 2 != 0 || h.ncols() == 0 {
        return Err(Error::Dimension(format!("SAST channel needs an even number of rows, got {}x{}", m, h.ncols())));
    }
    let half = m / 2;
    let mut gram = ComplexMatrix::zeros(half, half);
    let mut eigenvalues = vec![0.0; half];
    let mut blocks = Vec::with_capacity(h.ncols());
    for n in 0..h.ncols() {
        let hn = col(h, n);
        let (a, b) = hn.split_at(half);
        let h1 = circulant(a)?;
        let h2 = circulant(b)?;
        gram += h1.adjoint() * &h1 + h2.adjoint() * &h2;
        let (l1, l2) = (circulant_eigenvalues(a)?, circulant_eigenvalues(b)?);
        for j in 0..half {
            eigenvalues[j] += l1[j].norm_sqr() + l2[j].norm_sqr();
        }
        blocks.push((h1, h2));
    }
    let mut eq = EquivalentChannel {
        kind: ChannelKind::Sast,
        gram,
        sqrt_gram: ComplexMatrix::zeros(half, half),
        eigenvalues,
        diagonalizer: dft_matrix(half),
        blocks,
    };
    eq.sqrt_gram = eq.spectral(f64::sqrt);
    Ok(eq)
}

fn check_block(y: &ComplexMatrix, h: &ComplexMatrix, t: usize) -> Result<()> {
    if y.nrows() != t || y.ncols() != h.ncols() {
        return Err(Error::Dimension(format!(
            "received block is {}x{}, expected {t}x{}",
            y.nrows(),
            y.ncols(),
            h.ncols()
        )));
    }
    Ok(())
}

/// Whitened matched-filter outputs `Ĥ^{-1/2}ȳ₁`, `Ĥ^{-1/2}ȳ₂` of the QSTBC
/// chain. `y` is `8 × N` in the original row order.
pub fn qstbc8_whitened(y: &ComplexMatrix, eq: &EquivalentChannel) -> Result<[ComplexVector; 2]> {
    if y.nrows() != 8 || y.ncols() != eq.blocks.len() {
        return Err(Error::Dimension(format!("received block is {}x{}, expected 8x{}", y.nrows(), y.ncols(), eq.blocks.len())));
    }
    let mut bar1 = ComplexVector::zeros(4);
    let mut bar2 = ComplexVector::zeros(4);
    for (n, (h1, h2)) in eq.blocks.iter().enumerate() {
        let yd: Vec<Complex64> = QSTBC8_ORDER.iter().map(|&r| y[(r, n)]).collect();
        let y1 = ComplexVector::from_column_slice(&yd[..4]);
        let y2c = ComplexVector::from_iterator(4, yd[4..].iter().map(|v| v.conj()));
        // ℋ̄ = [[ℋ₁, ℋ₂], [ℋ₂*, −ℋ₁*]], so ℋ̄† = [[ℋ₁†, ℋ₂ᵀ], [ℋ₂†, −ℋ₁ᵀ]].
        bar1 += h1.adjoint() * &y1 + h2.transpose() * &y2c;
        bar2 += h2.adjoint() * &y1 - h1.transpose() * &y2c;
    }
    let w = eq.inv_sqrt_gram()?;
    Ok([&w * bar1, &w * bar2])
}

/// Matched-filter outputs `ȳ₁`, `ȳ₂` of the SAST chain (before whitening).
fn sast_matched(y: &ComplexMatrix, eq: &EquivalentChannel) -> Result<[ComplexVector; 2]> {
    let half = eq.eigenvalues.len();
    if y.nrows() != 2 * half || y.ncols() != eq.blocks.len() {
        return Err(Error::Dimension(format!(
            "received block is {}x{}, expected {}x{}",
            y.nrows(),
            y.ncols(),
            2 * half,
            eq.blocks.len()
        )));
    }
    let mut bar1 = ComplexVector::zeros(half);
    let mut bar2 = ComplexVector::zeros(half);
    for (n, (h1, h2)) in eq.blocks.iter().enumerate() {
        let yn = col(y, n);
        let p1 = ComplexVector::from_vec(pi_permute_vec(&yn[..half]));
        let y2c = ComplexVector::from_iterator(half, yn[half..].iter().map(|v| v.conj()));
        // ℋ = [[H₁, H₂], [H₂†, −H₁†]], so ℋ† = [[H₁†, H₂], [H₂†, −H₁]].
        bar1 += h1.adjoint() * &p1 + h2 * &y2c;
        bar2 += h2.adjoint() * &p1 - h1 * &y2c;
    }
    Ok([bar1, bar2])
}

/// Whitened SAST outputs `Ĥ^{-1/2}ȳ₁`, `Ĥ^{-1/2}ȳ₂`.
pub fn sast_whitened(y: &ComplexMatrix, eq: &EquivalentChannel) -> Result<[ComplexVector; 2]> {
    let [b1, b2] = sast_matched(y, eq)?;
    let w = eq.inv_sqrt_gram()?;
    Ok([&w * b1, &w * b2])
}

/// `Λ^{-1/2}·F·ȳᵢ`: whitened outputs rotated by the DFT, in which each
/// coordinate sees one real channel gain `√λ_j`.
pub fn sast_diagonal_outputs(y: &ComplexMatrix, eq: &EquivalentChannel) -> Result<[ComplexVector; 2]> {
    eq.check_singular()?;
    let [b1, b2] = sast_matched(y, eq)?;
    let f = &eq.diagonalizer;
    let scale = |v: ComplexVector| {
        let mut v = f * v;
        for (x, l) in v.iter_mut().zip(&eq.eigenvalues) {
            *x /= l.sqrt();
        }
        v
    };
    Ok([scale(b1), scale(b2)])
}

fn re(v: &ComplexVector) -> RealVector {
    v.map(|z| z.re)
}

fn im(v: &ComplexVector) -> RealVector {
    v.map(|z| z.im)
}

/// Restores deleted columns as zero rows of the channel.
fn pad_channel(h: &ComplexMatrix, deleted: &[usize]) -> ComplexMatrix {
    if deleted.is_empty() {
        return h.clone();
    }
    let full = h.nrows() + deleted.len();
    let mut out = ComplexMatrix::zeros(full, h.ncols());
    let mut src = 0;
    for r in 0..full {
        if deleted.contains(&r) {
            continue;
        }
        out.row_mut(r).copy_from(&h.row(src));
        src += 1;
    }
    out
}

fn real_stack(m: &ComplexMatrix) -> RealVector {
    let n = m.len();
    RealVector::from_fn(2 * n, |i, _| if i < n { m[i].re } else { m[i - n].im })
}

/// Per-group problems for one received block `y` (`T × N`) over channel
/// `h` (`M × N`) at linear SNR `rho`.
pub fn group_problems(scheme: &Scheme, y: &ComplexMatrix, h: &ComplexMatrix, rho: f64) -> Result<Vec<GroupProblem>> {
    let code = scheme.code();
    if h.nrows() != code.antennas() {
        return Err(Error::Dimension(format!("channel has {} rows, code has {} antennas", h.nrows(), code.antennas())));
    }
    check_block(y, h, code.time_slots())?;
    let gain = rho.sqrt() * code.power_scale();
    let rotations = scheme.rotations();
    match scheme.front_end() {
        FrontEnd::Qstbc8 { deleted } => {
            let eq = qstbc8_equivalent_channel(&pad_channel(h, deleted))?;
            let [w1, w2] = qstbc8_whitened(y, &eq)?;
            let sqrt = eq.sqrt_gram.map(|z| z.re) * gain;
            let targets = [re(&w1), re(&w2), im(&w1), im(&w2)];
            Ok(targets
                .into_iter()
                .zip(rotations)
                .map(|(target, r)| GroupProblem { target, basis: &sqrt * r.matrix() })
                .collect())
        }
        FrontEnd::Sast4 { .. } => {
            let eq = sast_equivalent_channel(h)?;
            let [t1, t2] = sast_diagonal_outputs(y, &eq)?;
            let sqrt = RealMatrix::from_diagonal(&RealVector::from_iterator(
                eq.eigenvalues.len(),
                eq.eigenvalues.iter().map(|l| l.sqrt() * gain),
            ));
            let targets = [re(&t1), im(&t1), re(&t2), im(&t2)];
            Ok(targets
                .into_iter()
                .zip(rotations)
                .map(|(target, r)| GroupProblem { target, basis: &sqrt * r.matrix() })
                .collect())
        }
        FrontEnd::Sast2 { half } => {
            let eq = sast_equivalent_channel(h)?;
            let [w1, w2] = sast_whitened(y, &eq)?;
            let b = &eq.sqrt_gram * Complex64::new(gain, 0.0);
            let n = *half;
            let real_b = RealMatrix::from_fn(2 * n, 2 * n, |i, j| {
                let z = b[(i % n, j % n)];
                match (i < n, j < n) {
                    (true, true) | (false, false) => z.re,
                    (true, false) => -z.im,
                    (false, true) => z.im,
                }
            });
            Ok([w1, w2]
                .into_iter()
                .zip(rotations)
                .map(|(w, r)| {
                    let target = RealVector::from_iterator(2 * n, w.iter().map(|z| z.re).chain(w.iter().map(|z| z.im)));
                    GroupProblem { target, basis: &real_b * r.matrix() }
                })
                .collect())
        }
        FrontEnd::Generic => {
            let target = real_stack(y);
            let sr = Complex64::new(rho.sqrt(), 0.0);
            let columns: Vec<RealVector> =
                scheme.data_dispersion().iter().map(|x| real_stack(&(x * h * sr))).collect();
            Ok(scheme
                .layouts()
                .iter()
                .map(|l| GroupProblem {
                    target: target.clone(),
                    basis: RealMatrix::from_columns(&l.indices.iter().map(|&i| columns[i].clone()).collect::<Vec<_>>()),
                })
                .collect())
        }
    }
}

fn unit_columns(unit: &Unit) -> &[usize] {
    &unit.positions[..unit.width]
}

/// Exhaustive search: returns the value index per unit and the metric.
pub fn exhaustive_search(problem: &GroupProblem, units: &[Unit]) -> Result<(Vec<usize>, f64)> {
    if units.is_empty() || units.iter().any(|u| u.values.is_empty()) {
        return Err(Error::EmptyInput("candidate set"));
    }
    let rows = problem.target.len();
    // contrib[u][v] = basis · (value v of unit u).
    let contrib: Vec<Vec<Vec<f64>>> = units
        .iter()
        .map(|u| {
            u.values
                .iter()
                .map(|val| {
                    (0..rows)
                        .map(|r| unit_columns(u).iter().enumerate().map(|(k, &c)| problem.basis[(r, c)] * val[k]).sum())
                        .collect()
                })
                .collect()
        })
        .collect();
    let depth = units.len();
    let mut residual = vec![0.0; (depth + 1) * rows];
    residual[..rows].copy_from_slice(problem.target.as_slice());
    let mut choice = vec![0usize; depth];
    let mut best = (f64::INFINITY, vec![0usize; depth]);
    let mut level = 0;
    // Iterative odometer over all value tuples.
    loop {
        if level == depth {
            let r = &residual[depth * rows..];
            let metric: f64 = r.iter().map(|v| v * v).sum();
            if metric < best.0 {
                best = (metric, choice.clone());
            }
            level -= 1;
            choice[level] += 1;
        }
        if choice[level] == units[level].values.len() {
            if level == 0 {
                break;
            }
            choice[level] = 0;
            level -= 1;
            choice[level] += 1;
            continue;
        }
        let (head, tail) = residual.split_at_mut((level + 1) * rows);
        let prev = &head[level * rows..];
        let c = &contrib[level][choice[level]];
        for ((dst, p), v) in tail[..rows].iter_mut().zip(prev).zip(c) {
            *dst = p - v;
        }
        level += 1;
    }
    Ok((best.1, best.0))
}

/// Depth-first sphere search with Schnorr–Euchner ordering, starting from
/// an unbounded radius; returns the same minimizer as [`exhaustive_search`].
pub fn sphere_search(problem: &GroupProblem, units: &[Unit]) -> Result<(Vec<usize>, f64)> {
    if units.is_empty() || units.iter().any(|u| u.values.is_empty()) {
        return Err(Error::EmptyInput("candidate set"));
    }
    let perm: Vec<usize> = units.iter().flat_map(|u| unit_columns(u).iter().copied()).collect();
    let n = perm.len();
    let rows = problem.target.len();
    if rows < n {
        return Err(Error::Dimension(format!("{rows} observations for {n} unknowns")));
    }
    let b = RealMatrix::from_fn(rows, n, |r, c| problem.basis[(r, perm[c])]);
    let qr = b.qr();
    let q = qr.q();
    let r = qr.r();
    let z = q.transpose() * &problem.target;
    let offset = (problem.target.norm_squared() - z.norm_squared()).max(0.0);
    let starts: Vec<usize> = units
        .iter()
        .scan(0, |acc, u| {
            let s = *acc;
            *acc += u.width;
            Some(s)
        })
        .collect();
    let mut search = Sphere { units, r: &r, z: &z, starts: &starts, x: vec![0.0; n], choice: vec![0; units.len()], best: f64::INFINITY, best_choice: vec![0; units.len()] };
    search.descend(units.len(), 0.0);
    Ok((search.best_choice, search.best + offset))
}

struct Sphere<'a> {
    units: &'a [Unit],
    r: &'a RealMatrix,
    z: &'a RealVector,
    starts: &'a [usize],
    x: Vec<f64>,
    choice: Vec<usize>,
    best: f64,
    best_choice: Vec<usize>,
}

impl Sphere<'_> {
    fn descend(&mut self, level: usize, acc: f64) {
        if level == 0 {
            if acc < self.best {
                self.best = acc;
                self.best_choice.clone_from(&self.choice);
            }
            return;
        }
        let u = level - 1;
        let unit = &self.units[u];
        let start = self.starts[u];
        let end = start + unit.width;
        let n = self.x.len();
        // Target for this unit's rows after removing deeper units.
        let mut b = [0.0; 2];
        for (k, bk) in b.iter_mut().enumerate().take(unit.width) {
            let row = start + k;
            *bk = self.z[row] - (end..n).map(|c| self.r[(row, c)] * self.x[c]).sum::<f64>();
        }
        let mut costs: Vec<(f64, usize)> = unit
            .values
            .iter()
            .enumerate()
            .map(|(v, val)| {
                let mut cost = 0.0;
                for k in 0..unit.width {
                    let row = start + k;
                    let mut e = b[k];
                    for j in k..unit.width {
                        e -= self.r[(row, start + j)] * val[j];
                    }
                    cost += e * e;
                }
                (cost, v)
            })
            .collect();
        costs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (cost, v) in costs {
            let total = acc + cost;
            if total >= self.best {
                break;
            }
            for j in 0..unit.width {
                self.x[start + j] = unit.values[v][j];
            }
            self.choice[u] = v;
            self.descend(u, total);
        }
    }
}

pub fn solve_group(problem: &GroupProblem, units: &[Unit], strategy: Strategy) -> Result<(Vec<usize>, f64)> {
    match strategy {
        Strategy::Exhaustive => exhaustive_search(problem, units),
        Strategy::Sphere => sphere_search(problem, units),
    }
}

/// Group-wise ML detection of one block with the scheme's front end.
pub fn detect(scheme: &Scheme, y: &ComplexMatrix, h: &ComplexMatrix, rho: f64, strategy: Strategy) -> Result<DetectionResult> {
    let problems = group_problems(scheme, y, h, rho)?;
    let mut decisions = Vec::with_capacity(problems.len());
    let mut metrics = Vec::with_capacity(problems.len());
    for (p, units) in problems.iter().zip(scheme.units()) {
        let (choice, metric) = solve_group(p, units, strategy)?;
        decisions.push(choice);
        metrics.push(metric);
    }
    Ok(DetectionResult {
        symbols: scheme.assemble(&decisions),
        per_group_metrics: metrics,
        method: match strategy {
            Strategy::Exhaustive => Method::Exhaustive,
            Strategy::Sphere => Method::Sphere,
        },
    })
}

fn require(scheme: &Scheme, ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::Unsupported(format!("{} does not use the {what} decoder", scheme.code().name())))
    }
}

/// [`detect`] restricted to the 4Gp-QSTBC chain.
pub fn qstbc8_detect(scheme: &Scheme, y: &ComplexMatrix, h: &ComplexMatrix, rho: f64, strategy: Strategy) -> Result<DetectionResult> {
    require(scheme, matches!(scheme.front_end(), FrontEnd::Qstbc8 { .. }), "4Gp-QSTBC")?;
    detect(scheme, y, h, rho, strategy)
}

/// [`detect`] restricted to the 4Gp-SAST chain.
pub fn sast_4gp_detect(scheme: &Scheme, y: &ComplexMatrix, h: &ComplexMatrix, rho: f64, strategy: Strategy) -> Result<DetectionResult> {
    require(scheme, matches!(scheme.front_end(), FrontEnd::Sast4 { .. }), "4Gp-SAST")?;
    detect(scheme, y, h, rho, strategy)
}

/// [`detect`] restricted to the two-group SAST chain.
pub fn sast_2gp_detect(scheme: &Scheme, y: &ComplexMatrix, h: &ComplexMatrix, rho: f64, strategy: Strategy) -> Result<DetectionResult> {
    require(scheme, matches!(scheme.front_end(), FrontEnd::Sast2 { .. }), "two-group SAST")?;
    detect(scheme, y, h, rho, strategy)
}

/// `‖Y − √ρ·X(s)·H‖²_F` for data symbol indices `s`.
pub fn ml_metric(scheme: &Scheme, y: &ComplexMatrix, h: &ComplexMatrix, rho: f64, symbols: &[usize]) -> Result<f64> {
    let x = scheme.encode_indices(symbols)?;
    Ok((y - x * h * Complex64::new(rho.sqrt(), 0.0)).norm_squared())
}

/// Joint ML over every data vector, including rotation and precoding.
pub fn joint_ml_oracle(scheme: &Scheme, y: &ComplexMatrix, h: &ComplexMatrix, rho: f64) -> Result<DetectionResult> {
    let code = scheme.code();
    if h.nrows() != code.antennas() {
        return Err(Error::Dimension(format!("channel has {} rows, code has {} antennas", h.nrows(), code.antennas())));
    }
    check_block(y, h, code.time_slots())?;
    let k = scheme.symbols_per_block();
    let q = scheme.constellation().len();
    let total = (q as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    if total > ORACLE_LIMIT {
        return Err(Error::SearchTooLarge(total, ORACLE_LIMIT));
    }
    let sr = Complex64::new(rho.sqrt(), 0.0);
    let dd = scheme.data_dispersion();
    let size = y.len();
    // contrib[s][v]: received contribution of symbol s taking value v.
    let contrib: Vec<Vec<Vec<Complex64>>> = (0..k)
        .map(|s| {
            let (xa, xb) = (&dd[2 * s] * h * sr, &dd[2 * s + 1] * h * sr);
            scheme
                .constellation()
                .points()
                .iter()
                .map(|p| xa.iter().zip(xb.iter()).map(|(a, b)| a * p.re + b * p.im).collect())
                .collect()
        })
        .collect();
    let mut residual = vec![Complex64::new(0.0, 0.0); (k + 1) * size];
    residual[..size].copy_from_slice(y.as_slice());
    let mut choice = vec![0usize; k];
    let mut best = (f64::INFINITY, vec![0usize; k]);
    let mut level = 0;
    loop {
        if level == k {
            let metric: f64 = residual[k * size..].iter().map(|v| v.norm_sqr()).sum();
            if metric < best.0 {
                best = (metric, choice.clone());
            }
            level -= 1;
            choice[level] += 1;
        }
        if choice[level] == q {
            if level == 0 {
                break;
            }
            choice[level] = 0;
            level -= 1;
            choice[level] += 1;
            continue;
        }
        let (head, tail) = residual.split_at_mut((level + 1) * size);
        let prev = &head[level * size..];
        for ((dst, p), v) in tail[..size].iter_mut().zip(prev).zip(&contrib[level][choice[level]]) {
            *dst = p - v;
        }
        level += 1;
    }
    Ok(DetectionResult { symbols: best.1, per_group_metrics: vec![best.0], method: Method::Oracle })
}
