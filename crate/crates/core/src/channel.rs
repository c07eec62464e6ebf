//! Quasi-static Rayleigh flat fading with additive white Gaussian noise:
//! `Y = √ρ·X·H + Z`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;

/// A reproducible random stream identified by `(seed, stream)`.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { seed, stream, rng }
    }

    /// Stream for one block of a sweep. SNR index occupies the top 16 bits.
    pub fn for_block(seed: u64, snr_index: usize, block: u64) -> Self {
        Self::new(seed, ((snr_index as u64) << 48) | (block & ((1 << 48) - 1)))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// One CN(0, 1) draw: real and imaginary parts each N(0, ½).
    pub fn complex_normal(&mut self) -> Complex64 {
        let re: f64 = self.rng.sample(StandardNormal);
        let im: f64 = self.rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn complex_normal_matrix(&mut self, rows: usize, cols: usize) -> ComplexMatrix {
        // Column-major fill keeps the draw order fixed.
        ComplexMatrix::from_fn(rows, cols, |_, _| self.complex_normal())
    }

    pub fn uniform_index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn bits(&mut self, n: usize) -> Vec<u8> {
        (0..n).map(|_| self.rng.random::<bool>() as u8).collect()
    }
}

/// `M × N` channel with i.i.d. CN(0, 1) gains; column `n` holds the gains
/// to receive antenna `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: ComplexMatrix,
}

impl ChannelRealization {
    pub fn transmit_antennas(&self) -> usize {
        self.h.nrows()
    }

    pub fn receive_antennas(&self) -> usize {
        self.h.ncols()
    }
}

pub fn sample_channel(m: usize, n: usize, rng: &mut RngStream) -> ChannelRealization {
    ChannelRealization { h: rng.complex_normal_matrix(m, n) }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(rho: f64) -> f64 {
    10.0 * rho.log10()
}

/// `√ρ·X·H` without noise.
pub fn transmit_noiseless(x: &ComplexMatrix, h: &ChannelRealization, rho: f64) -> Result<ComplexMatrix> {
    if x.ncols() != h.h.nrows() {
        return Err(Error::Dimension(format!(
            "code has {} antennas, channel has {}",
            x.ncols(),
            h.h.nrows()
        )));
    }
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::Config(format!("invalid SNR {rho}")));
    }
    Ok(x * &h.h * Complex64::new(rho.sqrt(), 0.0))
}

/// `√ρ·X·H + Z` with `Z` i.i.d. CN(0, 1).
pub fn transmit(x: &ComplexMatrix, h: &ChannelRealization, rho: f64, rng: &mut RngStream) -> Result<ComplexMatrix> {
    let y = transmit_noiseless(x, h, rho)?;
    let z = rng.complex_normal_matrix(y.nrows(), y.ncols());
    Ok(y + z)
}
