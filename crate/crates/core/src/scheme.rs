//! A transmission scheme: code, constellation, per-group rotations and the
//! decoder front end that matches the code's structure.
//!
//! Data symbols use the same interleaved real layout as the code, so real
//! index `i` of the data vector `d` feeds code real symbol `i` after the
//! group rotation: `c[G] = R_G · d[G]` for each group `G`.

use num_complex::Complex64;

use crate::codebook::{self, DispersionCode};
use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::numerics::{theta4, ComplexMatrix, RealMatrix};
use crate::rotation::{default_rotation, RotationMatrix};

/// How a group's data values are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Alphabet {
    /// Whole constellation points; the group holds `Re` then `Im` parts.
    Complex,
    /// Real parts only (one level per symbol).
    Real,
    /// Imaginary parts only.
    Imag,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupLayout {
    /// Real indices in group order.
    pub indices: Vec<usize>,
    /// Data symbols touched, in order.
    pub symbols: Vec<usize>,
    pub alphabet: Alphabet,
}

impl GroupLayout {
    fn infer(indices: &[usize]) -> Result<Self> {
        let n = indices.len();
        if indices.iter().all(|i| i % 2 == 0) {
            return Ok(Self { indices: indices.to_vec(), symbols: indices.iter().map(|i| i / 2).collect(), alphabet: Alphabet::Real });
        }
        if indices.iter().all(|i| i % 2 == 1) {
            return Ok(Self { indices: indices.to_vec(), symbols: indices.iter().map(|i| i / 2).collect(), alphabet: Alphabet::Imag });
        }
        if n % 2 == 0 {
            let (re, im) = indices.split_at(n / 2);
            if re.iter().zip(im).all(|(r, i)| r % 2 == 0 && *i == r + 1) {
                return Ok(Self { indices: indices.to_vec(), symbols: re.iter().map(|i| i / 2).collect(), alphabet: Alphabet::Complex });
            }
        }
        Err(Error::Unsupported(format!(
            "group {indices:?} is neither whole symbols (real parts then imaginary parts) nor one part of each symbol"
        )))
    }

    pub fn dim(&self) -> usize {
        self.indices.len()
    }
}

/// One search dimension of a group: a symbol (2 coordinates) or a part of a
/// symbol (1 coordinate), with the values it can take.
#[derive(Debug, Clone, PartialEq)]
pub struct Unit {
    /// Positions within the group vector; `positions[1]` unused when `width == 1`.
    pub positions: [usize; 2],
    pub width: usize,
    /// Unit-power coordinates of each candidate value.
    pub values: Vec<[f64; 2]>,
}

/// Decoder front end matched to a code family.
#[derive(Debug, Clone, PartialEq)]
pub enum FrontEnd {
    /// Real-valued stacking of `Y`; any group-decodable code.
    Generic,
    /// Block-circulant form of the 8-antenna 4Gp-QSTBC; `deleted` lists
    /// removed antenna columns (0-based), treated as zero gains.
    Qstbc8 { deleted: Vec<usize> },
    /// SAST circulant chain with IDFT precoding and real/imaginary split.
    Sast4 { half: usize },
    /// SAST circulant chain stopping at the two complex halves.
    Sast2 { half: usize },
}

#[derive(Debug, Clone)]
pub struct Scheme {
    code: DispersionCode,
    front_end: FrontEnd,
    constellation: Constellation,
    layouts: Vec<GroupLayout>,
    rotations: Vec<RotationMatrix>,
    rotation_label: String,
    /// `X_i = s · Σ_p R[p, q] C_{G[p]}` for data real `i = G[q]`.
    data_dispersion: Vec<ComplexMatrix>,
    units: Vec<Vec<Unit>>,
    /// Constellation index from (real level, imaginary level) indices.
    level_table: Option<Vec<Vec<usize>>>,
}

/// Rotation requested by name.
#[derive(Debug, Clone, PartialEq)]
pub enum RotationChoice {
    /// The scheme's built-in full-diversity rotation.
    Default,
    None,
    /// Applied as is to every group's real vector.
    Matrix(RotationMatrix, String),
}

impl RotationChoice {
    pub fn label(&self) -> String {
        match self {
            Self::Default => "default".into(),
            Self::None => "none".into(),
            Self::Matrix(_, label) => label.clone(),
        }
    }
}

/// Known code names: `alamouti`, `alamouti-bd4`, `mdc-qstbc4`, `4gp-qstbc8`, `4gp-qstbc6`,
/// `4gp-qstbc16`, `4gp-sastM` and `sastM-2gp` for even `M`.
pub fn code_by_name(name: &str) -> Result<(DispersionCode, FrontEnd)> {
    let sast_size = |digits: &str| -> Result<usize> {
        digits.parse::<usize>().map_err(|_| Error::Config(format!("unknown code `{name}`")))
    };
    match name {
        "alamouti" => return Ok((codebook::alamouti(), FrontEnd::Generic)),
        "alamouti-bd4" => return Ok((codebook::alamouti_block_diagonal(), FrontEnd::Generic)),
        "mdc-qstbc4" => return Ok((codebook::mdc_qstbc_4(), FrontEnd::Generic)),
        "4gp-qstbc8" => return Ok((codebook::qstbc_8(), FrontEnd::Qstbc8 { deleted: vec![] })),
        "4gp-qstbc6" => {
            return Ok((
                codebook::qstbc_6(),
                FrontEnd::Qstbc8 { deleted: codebook::QSTBC6_DELETED_COLUMNS.to_vec() },
            ))
        }
        "4gp-qstbc16" => {
            let code = codebook::double_code(&codebook::qstbc_8())?;
            return Ok((code, FrontEnd::Generic));
        }
        _ => {}
    }
    if let Some(m) = name.strip_prefix("4gp-sast") {
        let m = sast_size(m)?;
        return Ok((codebook::sast_4gp_code(m).map_err(config)?, FrontEnd::Sast4 { half: m / 2 }));
    }
    if let Some(m) = name.strip_prefix("sast").and_then(|r| r.strip_suffix("-2gp")) {
        let m = sast_size(m)?;
        return Ok((codebook::sast_code(m).map_err(config)?, FrontEnd::Sast2 { half: m / 2 }));
    }
    Err(Error::Config(format!("unknown code `{name}`")))
}

fn config(e: Error) -> Error {
    Error::Config(e.to_string())
}

/// Code family of a scheme for rotation defaults.
fn default_group_rotation(code: &DispersionCode, front_end: &FrontEnd, layout: &GroupLayout) -> Result<RotationMatrix> {
    let n = layout.dim();
    match front_end {
        FrontEnd::Sast2 { .. } => Ok(RotationMatrix::identity(n)),
        FrontEnd::Qstbc8 { .. } => {
            // Transmit Θ·R so that the decoder's Θ cancels and R acts alone.
            RotationMatrix::new(theta4() * default_rotation(4)?.matrix())
        }
        FrontEnd::Sast4 { .. } => default_rotation(n),
        FrontEnd::Generic if code.name().starts_with("alamouti") => Ok(RotationMatrix::identity(n)),
        FrontEnd::Generic => default_rotation(n),
    }
}

impl Scheme {
    pub fn new(
        code: DispersionCode,
        front_end: FrontEnd,
        constellation: Constellation,
        rotation: &RotationChoice,
    ) -> Result<Self> {
        if code.real_symbols() % 2 != 0 {
            return Err(Error::Unsupported("data symbols need an even number of real symbols".into()));
        }
        let layouts = code.groups().iter().map(|g| GroupLayout::infer(g)).collect::<Result<Vec<_>>>()?;
        let rotations = layouts
            .iter()
            .map(|l| match rotation {
                RotationChoice::None => Ok(RotationMatrix::identity(l.dim())),
                RotationChoice::Default => default_group_rotation(&code, &front_end, l),
                RotationChoice::Matrix(r, _) => {
                    if r.dim() == l.dim() {
                        Ok(r.clone())
                    } else {
                        Err(Error::Config(format!("rotation is {0}x{0} but groups have {1} real symbols", r.dim(), l.dim())))
                    }
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let needs_levels = layouts.iter().any(|l| l.alphabet != Alphabet::Complex);
        let level_table = if needs_levels {
            let (re, im) = constellation.axis_levels().ok_or_else(|| {
                Error::Unsupported(format!(
                    "{} with constellation {}: real and imaginary parts are detected separately, which needs a square-grid constellation",
                    code.name(),
                    constellation.name()
                ))
            })?;
            let table = re
                .iter()
                .map(|&a| im.iter().map(|&b| constellation.index_of_raw(a, b).expect("product grid")).collect())
                .collect();
            Some(table)
        } else {
            None
        };
        let scale = code.power_scale();
        let mut data_dispersion = vec![ComplexMatrix::zeros(code.time_slots(), code.antennas()); code.real_symbols()];
        for (layout, r) in layouts.iter().zip(&rotations) {
            for (q, &i) in layout.indices.iter().enumerate() {
                let mut x = ComplexMatrix::zeros(code.time_slots(), code.antennas());
                for (p, &l) in layout.indices.iter().enumerate() {
                    let w = r.matrix()[(p, q)];
                    if w != 0.0 {
                        x += &code.dispersion()[l] * Complex64::new(w * scale, 0.0);
                    }
                }
                data_dispersion[i] = x;
            }
        }
        let units = layouts.iter().map(|l| build_units(l, &constellation)).collect();
        Ok(Self {
            code,
            front_end,
            constellation,
            layouts,
            rotations,
            rotation_label: rotation.label(),
            data_dispersion,
            units,
            level_table,
        })
    }

    pub fn from_names(code: &str, constellation: &str, rotation: &RotationChoice) -> Result<Self> {
        let (code, front_end) = code_by_name(code)?;
        let constellation = Constellation::from_name(constellation).map_err(config)?;
        Self::new(code, front_end, constellation, rotation)
    }

    pub fn code(&self) -> &DispersionCode {
        &self.code
    }

    pub fn front_end(&self) -> &FrontEnd {
        &self.front_end
    }

    pub fn constellation(&self) -> &Constellation {
        &self.constellation
    }

    pub fn layouts(&self) -> &[GroupLayout] {
        &self.layouts
    }

    pub fn rotations(&self) -> &[RotationMatrix] {
        &self.rotations
    }

    pub fn rotation_label(&self) -> &str {
        &self.rotation_label
    }

    pub fn units(&self) -> &[Vec<Unit>] {
        &self.units
    }

    /// Number of data symbols per block.
    pub fn symbols_per_block(&self) -> usize {
        self.code.complex_symbols()
    }

    pub fn bits_per_block(&self) -> usize {
        self.symbols_per_block() * self.constellation.bits_per_symbol()
    }

    /// Linear map from data reals to the transmitted (normalized) matrix.
    pub fn data_dispersion(&self) -> &[ComplexMatrix] {
        &self.data_dispersion
    }

    /// Code reals `c` for the data reals `d` (applies group rotations).
    pub fn rotate(&self, data: &[f64]) -> Result<Vec<f64>> {
        if data.len() != self.code.real_symbols() {
            return Err(Error::Dimension(format!("{} data reals, expected {}", data.len(), self.code.real_symbols())));
        }
        let mut c = vec![0.0; data.len()];
        for (layout, r) in self.layouts.iter().zip(&self.rotations) {
            for (p, &i) in layout.indices.iter().enumerate() {
                c[i] = layout.indices.iter().enumerate().map(|(q, &j)| r.matrix()[(p, q)] * data[j]).sum();
            }
        }
        Ok(c)
    }

    /// Normalized code matrix for data symbol indices.
    pub fn encode_indices(&self, indices: &[usize]) -> Result<ComplexMatrix> {
        if indices.len() != self.symbols_per_block() {
            return Err(Error::Dimension(format!(
                "{} symbols, expected {}",
                indices.len(),
                self.symbols_per_block()
            )));
        }
        let (t, m) = (self.code.time_slots(), self.code.antennas());
        let mut x = ComplexMatrix::zeros(t, m);
        for (k, &q) in indices.iter().enumerate() {
            let p = self.constellation.point(q);
            let (xa, xb) = (&self.data_dispersion[2 * k], &self.data_dispersion[2 * k + 1]);
            for (dst, (a, b)) in x.iter_mut().zip(xa.iter().zip(xb.iter())) {
                *dst += a * p.re + b * p.im;
            }
        }
        Ok(x)
    }

    /// Normalized code matrix for data symbols given as points.
    pub fn encode_symbols(&self, symbols: &[Complex64]) -> Result<ComplexMatrix> {
        let c = self.rotate(&codebook::interleave(symbols))?;
        self.code.encode(&c)
    }

    /// Symbol index for the decided values of each unit of every group.
    pub(crate) fn assemble(&self, decisions: &[Vec<usize>]) -> Vec<usize> {
        let k = self.symbols_per_block();
        let mut out = vec![0usize; k];
        let mut re = vec![0usize; k];
        let mut im = vec![0usize; k];
        for (layout, choice) in self.layouts.iter().zip(decisions) {
            for (&s, &v) in layout.symbols.iter().zip(choice) {
                match layout.alphabet {
                    Alphabet::Complex => out[s] = v,
                    Alphabet::Real => re[s] = v,
                    Alphabet::Imag => im[s] = v,
                }
            }
        }
        if let Some(table) = &self.level_table {
            let split: Vec<bool> = (0..k)
                .map(|s| self.layouts.iter().any(|l| l.alphabet != Alphabet::Complex && l.symbols.contains(&s)))
                .collect();
            for s in 0..k {
                if split[s] {
                    out[s] = table[re[s]][im[s]];
                }
            }
        }
        out
    }

    /// Group data vector (unit-power coordinates) for symbol indices.
    pub fn group_vector(&self, group: usize, indices: &[usize]) -> Vec<f64> {
        let layout = &self.layouts[group];
        let n = layout.dim();
        let mut v = vec![0.0; n];
        for (j, &s) in layout.symbols.iter().enumerate() {
            let p = self.constellation.point(indices[s]);
            match layout.alphabet {
                Alphabet::Complex => {
                    v[j] = p.re;
                    v[j + n / 2] = p.im;
                }
                Alphabet::Real => v[j] = p.re,
                Alphabet::Imag => v[j] = p.im,
            }
        }
        v
    }

    /// Number of candidates one exhaustive group search visits.
    pub fn group_search_size(&self, group: usize) -> u128 {
        self.units[group].iter().map(|u| u.values.len() as u128).product()
    }

    /// Sum of per-group search sizes for one block.
    pub fn search_size(&self) -> u128 {
        (0..self.layouts.len()).map(|g| self.group_search_size(g)).sum()
    }

    /// Transmit rotation's product with the decoder-side diagonalizer,
    /// i.e. the matrix mapping a group difference to the `β` of the error
    /// analysis. Only defined for the structured front ends.
    pub fn combined_rotation(&self, group: usize) -> Result<RealMatrix> {
        let r = self.rotations[group].matrix();
        match self.front_end {
            FrontEnd::Qstbc8 { .. } => Ok(theta4() * r),
            FrontEnd::Sast4 { .. } => Ok(r.clone()),
            _ => Err(Error::Unsupported(format!("no diagonalizing decoder for {}", self.code.name()))),
        }
    }
}

fn build_units(layout: &GroupLayout, c: &Constellation) -> Vec<Unit> {
    let n = layout.dim();
    let levels = |re: bool| -> Vec<[f64; 2]> {
        let (a, b) = c.axis_levels().expect("checked when the scheme was built");
        let lv = if re { a } else { b };
        lv.iter().map(|v| [v * c.scale(), 0.0]).collect()
    };
    layout
        .symbols
        .iter()
        .enumerate()
        .map(|(j, _)| match layout.alphabet {
            Alphabet::Complex => Unit {
                positions: [j, j + n / 2],
                width: 2,
                values: c.points().iter().map(|p| [p.re, p.im]).collect(),
            },
            Alphabet::Real => Unit { positions: [j, 0], width: 1, values: levels(true) },
            Alphabet::Imag => Unit { positions: [j, 0], width: 1, values: levels(false) },
        })
        .collect()
}
