//! Linear dispersion space-time block codes and their constructions.
//!
//! A [`DispersionCode`] maps `L` real symbols `c_l` to the `T × M` matrix
//! `X = Σ c_l C_l`. Codes carrying `K` complex symbols use the interleaved
//! ordering `(a₁, b₁, a₂, b₂, …)` with `s_k = a_k + j·b_k`, so real index
//! `2(k-1)` is `a_k` and `2(k-1)+1` is `b_k`. Each group lists real indices
//! in a fixed order that the rotation stage relies on; for complex-symbol
//! groups the order is all real parts first, then the imaginary parts in the
//! same symbol order (e.g. `[a₁, a₂, b₁, b₂]`).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{circulant, dft_matrix, ComplexMatrix, J, ONE, ZERO};

/// Group decodability holds when every cross-group term is below this.
pub const DECODABILITY_TOL: f64 = 1e-12;

/// Columns (0-based) removed from the 8-antenna 4Gp-QSTBC to obtain the
/// 6-antenna code: the 4th and 8th.
pub const QSTBC6_DELETED_COLUMNS: [usize; 2] = [3, 7];

/// Row/column order that turns the 8-antenna 4Gp-QSTBC into its
/// block-circulant form: `(1, 3, 5, 7, 2, 4, 6, 8)` in 1-based terms.
pub const QSTBC8_ORDER: [usize; 8] = [0, 2, 4, 6, 1, 3, 5, 7];

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionCode {
    name: String,
    time_slots: usize,
    antennas: usize,
    dispersion: Vec<ComplexMatrix>,
    groups: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupCheck {
    pub ok: bool,
    pub max_violation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodeInfo {
    /// Complex symbols per channel use.
    pub rate: f64,
    pub delay: usize,
    /// Largest number of real symbols decoded jointly.
    pub real_group_size: usize,
}

impl DispersionCode {
    pub fn new(
        name: impl Into<String>,
        time_slots: usize,
        antennas: usize,
        dispersion: Vec<ComplexMatrix>,
        groups: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if dispersion.is_empty() {
            return Err(Error::EmptyInput("dispersion matrices"));
        }
        if time_slots == 0 || antennas == 0 {
            return Err(Error::Dimension("code needs at least one slot and one antenna".into()));
        }
        for (l, c) in dispersion.iter().enumerate() {
            if c.shape() != (time_slots, antennas) {
                return Err(Error::Dimension(format!(
                    "dispersion matrix {l} is {}x{}, expected {time_slots}x{antennas}",
                    c.nrows(),
                    c.ncols()
                )));
            }
        }
        let l = dispersion.len();
        let mut seen = vec![false; l];
        for g in &groups {
            if g.is_empty() {
                return Err(Error::Dimension("empty symbol group".into()));
            }
            for &i in g {
                if i >= l || seen[i] {
                    return Err(Error::Dimension(format!("groups do not partition 0..{l} (index {i})")));
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Dimension(format!("groups do not cover all {l} real symbols")));
        }
        Ok(Self { name: name.into(), time_slots, antennas, dispersion, groups })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn time_slots(&self) -> usize {
        self.time_slots
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn real_symbols(&self) -> usize {
        self.dispersion.len()
    }

    /// `L/2`; only meaningful for codes built on complex symbols.
    pub fn complex_symbols(&self) -> usize {
        self.dispersion.len() / 2
    }

    pub fn dispersion(&self) -> &[ComplexMatrix] {
        &self.dispersion
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// Same matrices, different partition.
    pub fn regrouped(&self, groups: Vec<Vec<usize>>) -> Result<Self> {
        Self::new(self.name.clone(), self.time_slots, self.antennas, self.dispersion.clone(), groups)
    }

    /// Scalar that makes `E‖X‖²_F = T` when every real symbol has variance ½
    /// (unit-power complex inputs).
    pub fn power_scale(&self) -> f64 {
        let energy: f64 = self.dispersion.iter().map(|c| c.norm_squared()).sum::<f64>() * 0.5;
        (self.time_slots as f64 / energy).sqrt()
    }

    /// Unscaled `Σ c_l C_l`.
    pub fn combine(&self, reals: &[f64]) -> Result<ComplexMatrix> {
        if reals.len() != self.dispersion.len() {
            return Err(Error::Dimension(format!(
                "{} real symbols for a code with {}",
                reals.len(),
                self.dispersion.len()
            )));
        }
        let mut x = ComplexMatrix::zeros(self.time_slots, self.antennas);
        for (c, m) in reals.iter().zip(&self.dispersion) {
            if *c != 0.0 {
                x += m * Complex64::new(*c, 0.0);
            }
        }
        Ok(x)
    }

    /// Power-normalized code matrix for the real symbol vector.
    pub fn encode(&self, reals: &[f64]) -> Result<ComplexMatrix> {
        Ok(self.combine(reals)? * Complex64::new(self.power_scale(), 0.0))
    }

    /// [`encode`](Self::encode) for complex symbols in `(a_k, b_k)` order.
    pub fn encode_symbols(&self, symbols: &[Complex64]) -> Result<ComplexMatrix> {
        self.encode(&interleave(symbols))
    }

    pub fn info(&self) -> CodeInfo {
        CodeInfo {
            rate: self.complex_symbols() as f64 / self.time_slots as f64,
            delay: self.time_slots,
            real_group_size: self.groups.iter().map(Vec::len).max().unwrap_or(0),
        }
    }
}

/// `(Re s₁, Im s₁, Re s₂, …)`.
pub fn interleave(symbols: &[Complex64]) -> Vec<f64> {
    symbols.iter().flat_map(|s| [s.re, s.im]).collect()
}

/// Real-index group for complex symbols `ks` (0-based): real parts then
/// imaginary parts.
pub fn complex_group(ks: &[usize]) -> Vec<usize> {
    ks.iter().map(|k| 2 * k).chain(ks.iter().map(|k| 2 * k + 1)).collect()
}

/// Builds a code from the pair form `X = Σ (a_k A_k + b_k B_k)`; `groups`
/// index the interleaved real symbols.
pub fn dispersion_from_pairs(
    name: &str,
    a: &[ComplexMatrix],
    b: &[ComplexMatrix],
    groups: Vec<Vec<usize>>,
) -> Result<DispersionCode> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("dispersion pairs"));
    }
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("{} A matrices vs {} B matrices", a.len(), b.len())));
    }
    let (t, m) = a[0].shape();
    let dispersion = a.iter().zip(b).flat_map(|(x, y)| [x.clone(), y.clone()]).collect();
    DispersionCode::new(name, t, m, dispersion, groups)
}

/// Largest `‖C_p†C_q + C_q†C_p‖_F` over real symbols `p`, `q` in different
/// groups. Zero (to rounding) exactly when the ML metric splits by group.
pub fn verify_group_decodable(code: &DispersionCode) -> GroupCheck {
    let l = code.real_symbols();
    let mut group_of = vec![0usize; l];
    for (g, members) in code.groups().iter().enumerate() {
        for &i in members {
            group_of[i] = g;
        }
    }
    let d = code.dispersion();
    let mut worst = 0.0f64;
    for p in 0..l {
        for q in (p + 1)..l {
            if group_of[p] == group_of[q] {
                continue;
            }
            let cross = d[p].adjoint() * &d[q];
            let sym = &cross + cross.adjoint();
            worst = worst.max(sym.norm());
        }
    }
    GroupCheck { ok: worst <= DECODABILITY_TOL, max_violation: worst }
}

/// Parses one entry of a code table such as `"-a3+ja7"` into
/// `(real index, coefficient)` terms.
fn parse_entry(entry: &str) -> Vec<(usize, Complex64)> {
    let mut terms = Vec::new();
    if entry == "0" {
        return terms;
    }
    let bytes = entry.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let mut sign = 1.0;
        if bytes[i] == b'+' || bytes[i] == b'-' {
            sign = if bytes[i] == b'-' { -1.0 } else { 1.0 };
            i += 1;
        }
        let mut coef = Complex64::new(sign, 0.0);
        if bytes[i] == b'j' {
            coef *= J;
            i += 1;
        }
        let part = bytes[i];
        i += 1;
        let start = i;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
        let k: usize = entry[start..i].parse().expect("symbol number in code table");
        let offset = if part == b'a' { 0 } else { 1 };
        terms.push((2 * (k - 1) + offset, coef));
    }
    terms
}

fn code_from_table<const N: usize>(
    name: &str,
    table: &[[&str; N]],
    groups: Vec<Vec<usize>>,
) -> DispersionCode {
    let rows = table.len();
    let parsed: Vec<Vec<Vec<(usize, Complex64)>>> =
        table.iter().map(|r| r.iter().map(|e| parse_entry(e)).collect()).collect();
    let l = parsed.iter().flatten().flatten().map(|(i, _)| i + 1).max().unwrap_or(0);
    let mut dispersion = vec![ComplexMatrix::zeros(rows, N); l];
    for (r, row) in parsed.iter().enumerate() {
        for (c, terms) in row.iter().enumerate() {
            for &(i, coef) in terms {
                dispersion[i][(r, c)] += coef;
            }
        }
    }
    DispersionCode::new(name, rows, N, dispersion, groups).expect("static code table")
}

/// Rate-one minimum-decoding-complexity QSTBC for 4 antennas; each complex
/// symbol is its own group.
pub fn mdc_qstbc_4() -> DispersionCode {
    const F4: [[&str; 4]; 4] = [
        ["a1+ja3", "a2+ja4", "b1+jb3", "b2+jb4"],
        ["-a2+ja4", "a1-ja3", "-b2+jb4", "b1-jb3"],
        ["b1+jb3", "b2+jb4", "a1+ja3", "a2+ja4"],
        ["-b2+jb4", "b1-jb3", "-a2+ja4", "a1-ja3"],
    ];
    code_from_table("mdc-qstbc4", &F4, (0..4).map(|k| complex_group(&[k])).collect())
}

/// 4Gp-QSTBC for 8 antennas written out entry by entry. Groups are the
/// symbol pairs `(s₁,s₂), (s₃,s₄), (s₅,s₆), (s₇,s₈)`.
pub fn qstbc_8() -> DispersionCode {
    const F8: [[&str; 8]; 8] = [
        ["a1+ja5", "a3+ja7", "a2+ja6", "a4+ja8", "b1+jb5", "b3+jb7", "b2+jb6", "b4+jb8"],
        ["-a3+ja7", "a1-ja5", "-a4+ja8", "a2-ja6", "-b3+jb7", "b1-jb5", "-b4+jb8", "b2-jb6"],
        ["a2+ja6", "a4+ja8", "a1+ja5", "a3+ja7", "b2+jb6", "b4+jb8", "b1+jb5", "b3+jb7"],
        ["-a4+ja8", "a2-ja6", "-a3+ja7", "a1-ja5", "-b4+jb8", "b2-jb6", "-b3+jb7", "b1-jb5"],
        ["b1+jb5", "b3+jb7", "b2+jb6", "b4+jb8", "a1+ja5", "a3+ja7", "a2+ja6", "a4+ja8"],
        ["-b3+jb7", "b1-jb5", "-b4+jb8", "b2-jb6", "-a3+ja7", "a1-ja5", "-a4+ja8", "a2-ja6"],
        ["b2+jb6", "b4+jb8", "b1+jb5", "b3+jb7", "a2+ja6", "a4+ja8", "a1+ja5", "a3+ja7"],
        ["-b4+jb8", "b2-jb6", "-b3+jb7", "b1-jb5", "-a4+ja8", "a2-ja6", "-a3+ja7", "a1-ja5"],
    ];
    let groups = (0..4).map(|g| complex_group(&[2 * g, 2 * g + 1])).collect();
    code_from_table("4gp-qstbc8", &F8, groups)
}

fn block2(tl: &ComplexMatrix, tr: &ComplexMatrix, bl: &ComplexMatrix, br: &ComplexMatrix) -> ComplexMatrix {
    let (t, m) = tl.shape();
    let mut out = ComplexMatrix::zeros(2 * t, 2 * m);
    out.view_mut((0, 0), (t, m)).copy_from(tl);
    out.view_mut((0, m), (t, m)).copy_from(tr);
    out.view_mut((t, 0), (t, m)).copy_from(bl);
    out.view_mut((t, m), (t, m)).copy_from(br);
    out
}

/// Doubles a group-decodable code to `2T × 2M` with `2K` complex symbols.
///
/// Each input matrix `X` (an `A_k` or `B_k`) yields `diag(X, X)` on a new
/// real part and `[[0, X], [X, 0]]` on the matching new imaginary part:
/// `A_k` feeds new symbol `2k-1` and `B_k` feeds new symbol `2k`. In the
/// interleaved ordering old real index `i` becomes new indices `2i` (real
/// part) and `2i+1` (imaginary part), and group `[i₁, …, iₙ]` becomes
/// `[2i₁, …, 2iₙ, 2i₁+1, …, 2iₙ+1]`.
pub fn double_code(code: &DispersionCode) -> Result<DispersionCode> {
    let check = verify_group_decodable(code);
    if !check.ok {
        return Err(Error::NotGroupDecodable(check.max_violation));
    }
    if code.real_symbols() % 2 != 0 {
        return Err(Error::Dimension("doubling needs an even number of real symbols".into()));
    }
    let (t, m) = (code.time_slots(), code.antennas());
    let zero = ComplexMatrix::zeros(t, m);
    let mut dispersion = Vec::with_capacity(2 * code.real_symbols());
    for x in code.dispersion() {
        dispersion.push(block2(x, &zero, &zero, x));
        dispersion.push(block2(&zero, x, x, &zero));
    }
    let groups = code
        .groups()
        .iter()
        .map(|g| g.iter().map(|i| 2 * i).chain(g.iter().map(|i| 2 * i + 1)).collect())
        .collect();
    DispersionCode::new(format!("4gp-qstbc{}", 2 * m), 2 * t, 2 * m, dispersion, groups)
}

/// Intermediate variables of the block-circulant form, from the 16 real
/// symbols of [`qstbc_8`] in interleaved order:
/// `x = (a₁+ja₅, a₂+ja₆, b₁+jb₅, b₂+jb₆, a₃+ja₇, a₄+ja₈, b₃+jb₇, b₄+jb₈)`.
pub fn qstbc8_intermediates(reals: &[f64]) -> Result<[Complex64; 8]> {
    if reals.len() != 16 {
        return Err(Error::Dimension(format!("{} real symbols, expected 16", reals.len())));
    }
    let a = |k: usize| reals[2 * (k - 1)];
    let b = |k: usize| reals[2 * (k - 1) + 1];
    let c = Complex64::new;
    Ok([
        c(a(1), a(5)),
        c(a(2), a(6)),
        c(b(1), b(5)),
        c(b(2), b(6)),
        c(a(3), a(7)),
        c(a(4), a(8)),
        c(b(3), b(7)),
        c(b(4), b(8)),
    ])
}

/// 4×4 block-circulant matrix with 2×2 circulant blocks generated by
/// `v = (v₁, v₂, v₃, v₄)`: entry `(r, c)` is `v[r XOR c]`.
pub fn klein_circulant(v: &[Complex64]) -> Result<ComplexMatrix> {
    if v.len() != 4 {
        return Err(Error::Dimension(format!("{} generators, expected 4", v.len())));
    }
    Ok(ComplexMatrix::from_fn(4, 4, |r, c| v[r ^ c]))
}

/// Permutation-equivalent form `D = [[D₁, D₂], [-D₂*, D₁*]]` of the
/// 8-antenna 4Gp-QSTBC, with `D₁`, `D₂` generated by `x₁..x₄` and `x₅..x₈`.
pub fn qstbc_8_permuted(x: &[Complex64]) -> Result<ComplexMatrix> {
    if x.len() != 8 {
        return Err(Error::Dimension(format!("{} intermediates, expected 8", x.len())));
    }
    let d1 = klein_circulant(&x[..4])?;
    let d2 = klein_circulant(&x[4..])?;
    Ok(block2(&d1, &d2, &(-d2.conjugate()), &d1.conjugate()))
}

/// Permutes rows and columns of an 8×8 matrix into [`QSTBC8_ORDER`].
pub fn to_block_circulant_order(f8: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_fn(8, 8, |r, c| f8[(QSTBC8_ORDER[r], QSTBC8_ORDER[c])])
}

/// SAST code matrix `[[C(s₁), C(s₂)], [-C†(s₂), C†(s₁)]]`.
pub fn sast_encode(s1: &[Complex64], s2: &[Complex64]) -> Result<ComplexMatrix> {
    if s1.len() != s2.len() {
        return Err(Error::Dimension(format!("SAST halves of length {} and {}", s1.len(), s2.len())));
    }
    let c1 = circulant(s1)?;
    let c2 = circulant(s2)?;
    Ok(block2(&c1, &c2, &(-c2.adjoint()), &c1.adjoint()))
}

fn sast_half(m: usize) -> Result<usize> {
    if m < 2 || m % 2 != 0 {
        return Err(Error::Unsupported(format!("SAST needs an even antenna count, got {m}")));
    }
    Ok(m / 2)
}

/// SAST dispersion for `symbol_vectors(k)` giving the `(s₁, s₂)` inputs
/// produced by unit real/imaginary excitation of symbol `k`.
fn sast_dispersion(m: usize, unit: impl Fn(usize) -> Vec<Complex64>) -> Result<Vec<ComplexMatrix>> {
    let half = sast_half(m)?;
    let zero = vec![ZERO; half];
    let mut dispersion = Vec::with_capacity(2 * m);
    for k in 0..m {
        let base = unit(k % half);
        for coef in [ONE, J] {
            let v: Vec<Complex64> = base.iter().map(|z| z * coef).collect();
            let x = if k < half { sast_encode(&v, &zero)? } else { sast_encode(&zero, &v)? };
            dispersion.push(x);
        }
    }
    Ok(dispersion)
}

/// Plain SAST code for `m` antennas: `s₁ = (s₁..s_{m/2})` and
/// `s₂ = (s_{m/2+1}..s_m)` form the two decoding groups.
pub fn sast_code(m: usize) -> Result<DispersionCode> {
    let half = sast_half(m)?;
    let dispersion = sast_dispersion(m, |k| {
        let mut e = vec![ZERO; half];
        e[k] = ONE;
        e
    })?;
    let groups = vec![
        complex_group(&(0..half).collect::<Vec<_>>()),
        complex_group(&(half..m).collect::<Vec<_>>()),
    ];
    DispersionCode::new(format!("sast{m}-2gp"), m, m, dispersion, groups)
}

/// 4Gp-SAST for `m` antennas: the SAST code with each half `w` of the data
/// symbols precoded as `F†w`. The four groups are the real parts of
/// `w₁..w_{m/2}`, their imaginary parts, then the same for the second half.
pub fn sast_4gp_code(m: usize) -> Result<DispersionCode> {
    let half = sast_half(m)?;
    let f_adj = dft_matrix(half).adjoint();
    let dispersion = sast_dispersion(m, |k| f_adj.column(k).iter().copied().collect())?;
    let re = |r: std::ops::Range<usize>| r.map(|k| 2 * k).collect::<Vec<_>>();
    let im = |r: std::ops::Range<usize>| r.map(|k| 2 * k + 1).collect::<Vec<_>>();
    let groups = vec![re(0..half), im(0..half), re(half..m), im(half..m)];
    DispersionCode::new(format!("4gp-sast{m}"), m, m, dispersion, groups)
}

/// Removes antenna columns (0-based) from every dispersion matrix. Time
/// slots and the group partition are unchanged.
pub fn delete_columns(code: &DispersionCode, cols: &[usize]) -> Result<DispersionCode> {
    let m = code.antennas();
    if let Some(&bad) = cols.iter().find(|&&c| c >= m) {
        return Err(Error::Dimension(format!("column {bad} out of range for {m} antennas")));
    }
    let keep: Vec<usize> = (0..m).filter(|c| !cols.contains(c)).collect();
    if keep.is_empty() {
        return Err(Error::Dimension("cannot delete every column".into()));
    }
    let dispersion = code
        .dispersion()
        .iter()
        .map(|x| ComplexMatrix::from_fn(code.time_slots(), keep.len(), |r, c| x[(r, keep[c])]))
        .collect();
    let name = if cols.is_empty() { code.name().to_string() } else { format!("{}-del", code.name()) };
    DispersionCode::new(name, code.time_slots(), keep.len(), dispersion, code.groups().to_vec())
}

/// 4Gp-QSTBC for 6 antennas: [`qstbc_8`] without its 4th and 8th columns.
pub fn qstbc_6() -> DispersionCode {
    delete_columns(&qstbc_8(), &QSTBC6_DELETED_COLUMNS)
        .expect("static deletion")
        .with_name("4gp-qstbc6")
}

/// Alamouti code `[[s₁, s₂], [-s₂*, s₁*]]`.
pub fn alamouti() -> DispersionCode {
    const TABLE: [[&str; 2]; 2] = [["a1+jb1", "a2+jb2"], ["-a2+jb2", "a1-jb1"]];
    code_from_table("alamouti", &TABLE, vec![complex_group(&[0]), complex_group(&[1])])
}

/// Two Alamouti blocks on the diagonal of a 4×4 matrix (half the slots of
/// every antenna are silent). Reference design for envelope comparisons.
pub fn alamouti_block_diagonal() -> DispersionCode {
    const TABLE: [[&str; 4]; 4] = [
        ["a1+jb1", "a2+jb2", "0", "0"],
        ["-a2+jb2", "a1-jb1", "0", "0"],
        ["0", "0", "a3+jb3", "a4+jb4"],
        ["0", "0", "-a4+jb4", "a3-jb3"],
    ];
    code_from_table("alamouti-bd4", &TABLE, (0..4).map(|k| complex_group(&[k])).collect())
}

/// On-disk form of a [`DispersionCode`]: entries as `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CodeFile {
    pub name: String,
    pub time_slots: usize,
    pub antennas: usize,
    /// `dispersion[l][row][col] = [re, im]`.
    pub dispersion: Vec<Vec<Vec<[f64; 2]>>>,
    pub groups: Vec<Vec<usize>>,
}

impl From<&DispersionCode> for CodeFile {
    fn from(code: &DispersionCode) -> Self {
        let dispersion = code
            .dispersion()
            .iter()
            .map(|m| {
                (0..m.nrows())
                    .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
                    .collect()
            })
            .collect();
        Self {
            name: code.name().to_string(),
            time_slots: code.time_slots(),
            antennas: code.antennas(),
            dispersion,
            groups: code.groups().to_vec(),
        }
    }
}

impl TryFrom<CodeFile> for DispersionCode {
    type Error = Error;

    fn try_from(file: CodeFile) -> Result<Self> {
        let mut dispersion = Vec::with_capacity(file.dispersion.len());
        for (l, rows) in file.dispersion.iter().enumerate() {
            if rows.len() != file.time_slots || rows.iter().any(|r| r.len() != file.antennas) {
                return Err(Error::Dimension(format!("dispersion matrix {l} has the wrong shape")));
            }
            dispersion.push(ComplexMatrix::from_fn(file.time_slots, file.antennas, |r, c| {
                Complex64::new(rows[r][c][0], rows[r][c][1])
            }));
        }
        DispersionCode::new(file.name, file.time_slots, file.antennas, dispersion, file.groups)
    }
}

impl DispersionCode {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&CodeFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CodeFile = serde_json::from_str(text)?;
        file.try_into()
    }
}
