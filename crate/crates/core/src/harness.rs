//! Seeded Monte Carlo BER sweeps, PEP tables and code reports.
//!
//! Blocks are numbered per SNR point and block `b` draws everything from
//! stream `(snr index, b)` of the seed, in the order: symbols, channel,
//! noise. Blocks run in fixed-size chunks; chunks are evaluated in parallel
//! but the stop rule is applied chunk by chunk in block order, so the
//! results do not depend on the number of worker threads.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{worst_case_pep, AsymptoticPep};
use crate::channel::{db_to_linear, sample_channel, transmit, RngStream};
use crate::codebook::{self, verify_group_decodable, CodeInfo, DispersionCode};
use crate::detector::{detect, Strategy};
use crate::error::{Error, Result};
use crate::numerics::theta4;
use crate::rotation::{optimize_rotation, DifferenceSet, OptimizerSettings, RotationMatrix};
use crate::scheme::{code_by_name, FrontEnd, RotationChoice, Scheme};

/// Blocks per chunk of work.
pub const CHUNK_BLOCKS: u64 = 256;

pub const CSV_HEADER: &str = "code,M,N,constellation,rotation,detector,snr_db,trials,bit_errors,ber,seed,wall_seconds";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopRule {
    /// Stop once this many bit errors are counted...
    pub min_errors: u64,
    /// ...or after this many blocks, whichever comes first.
    pub max_blocks: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        Self { min_errors: 400, max_blocks: 10_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RotationSource {
    Default,
    None,
    File(PathBuf),
}

impl RotationSource {
    pub fn parse(s: &str) -> Self {
        match s {
            "default" => Self::Default,
            "none" => Self::None,
            path => Self::File(PathBuf::from(path)),
        }
    }

    pub fn resolve(&self) -> Result<RotationChoice> {
        match self {
            Self::Default => Ok(RotationChoice::Default),
            Self::None => Ok(RotationChoice::None),
            Self::File(path) => {
                let r = RotationMatrix::load(path)
                    .map_err(|e| Error::Config(format!("rotation file {}: {e}", path.display())))?;
                Ok(RotationChoice::Matrix(r, path.display().to_string()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub code: String,
    pub constellation: String,
    pub rotation: RotationSource,
    pub detector: Strategy,
    pub snr_db: Vec<f64>,
    /// Receive antennas.
    pub receive: usize,
    pub stop: StopRule,
    pub seed: u64,
    /// Antenna columns to delete (0-based); `None` keeps the code's own.
    pub delete_columns: Option<Vec<usize>>,
    /// Write zero instead of the measured time, for byte-identical reruns.
    pub record_wall_time: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            code: "4gp-qstbc8".into(),
            constellation: "4qam".into(),
            rotation: RotationSource::Default,
            detector: Strategy::Exhaustive,
            snr_db: vec![10.0],
            receive: 1,
            stop: StopRule::default(),
            seed: 1,
            delete_columns: None,
            record_wall_time: true,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_empty() {
            return Err(Error::Config("SNR list is empty".into()));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::Config("SNR values must be finite".into()));
        }
        if self.receive == 0 {
            return Err(Error::Config("need at least one receive antenna".into()));
        }
        if self.stop.min_errors == 0 || self.stop.max_blocks == 0 {
            return Err(Error::Config("stop rule limits must be positive".into()));
        }
        Ok(())
    }

    pub fn scheme(&self) -> Result<Scheme> {
        build_scheme(&self.code, &self.constellation, &self.rotation.resolve()?, self.delete_columns.as_deref())
    }
}

/// Scheme for a named code, optionally with a different set of deleted
/// columns (0-based). For the QSTBC family the columns are removed from
/// the 8-antenna code.
pub fn build_scheme(code: &str, constellation: &str, rotation: &RotationChoice, delete: Option<&[usize]>) -> Result<Scheme> {
    let (base, front_end) = code_by_name(code)?;
    let cons = crate::constellation::Constellation::from_name(constellation).map_err(|e| Error::Config(e.to_string()))?;
    let (code, front_end) = match (delete, front_end) {
        (None, fe) => (base, fe),
        (Some(cols), FrontEnd::Qstbc8 { .. }) => {
            let full = codebook::qstbc_8();
            let reduced = codebook::delete_columns(&full, cols).map_err(|e| Error::Config(e.to_string()))?;
            let name = format!("4gp-qstbc{}", reduced.antennas());
            (reduced.with_name(name), FrontEnd::Qstbc8 { deleted: sorted(cols) })
        }
        (Some(cols), _) => {
            let reduced = codebook::delete_columns(&base, cols).map_err(|e| Error::Config(e.to_string()))?;
            (reduced, FrontEnd::Generic)
        }
    };
    Scheme::new(code, front_end, cons, rotation)
}

fn sorted(cols: &[usize]) -> Vec<usize> {
    let mut v = cols.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Errors,
    Blocks,
}

/// One SNR point. Serialized field order matches [`CSV_HEADER`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BerRecord {
    pub code: String,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub constellation: String,
    pub rotation: String,
    pub detector: String,
    pub snr_db: f64,
    /// Code blocks simulated.
    pub trials: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub seed: u64,
    pub wall_seconds: f64,
    #[serde(skip)]
    pub stop: Option<StopReason>,
    /// Blocks whose channel was too close to singular to decode; counted
    /// as all bits wrong.
    #[serde(skip)]
    pub failures: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    blocks: u64,
    errors: u64,
    failures: u64,
}

fn simulate_block(scheme: &Scheme, cfg: &SimConfig, rho: f64, snr_index: usize, block: u64) -> Result<(u64, bool)> {
    let mut rng = RngStream::for_block(cfg.seed, snr_index, block);
    let q = scheme.constellation().len();
    let k = scheme.symbols_per_block();
    let tx: Vec<usize> = (0..k).map(|_| rng.uniform_index(q)).collect();
    let x = scheme.encode_indices(&tx)?;
    let h = sample_channel(scheme.code().antennas(), cfg.receive, &mut rng);
    let y = transmit(&x, &h, rho, &mut rng)?;
    match detect(scheme, &y, &h.h, rho, cfg.detector) {
        Ok(d) => {
            let c = scheme.constellation();
            let errors = tx.iter().zip(&d.symbols).map(|(&a, &b)| (c.label(a) ^ c.label(b)).count_ones() as u64).sum();
            Ok((errors, false))
        }
        Err(e) if e.is_numerical() => Ok((scheme.bits_per_block() as u64, true)),
        Err(e) => Err(e),
    }
}

fn run_chunk(scheme: &Scheme, cfg: &SimConfig, rho: f64, snr_index: usize, start: u64, len: u64) -> Result<Tally> {
    let mut t = Tally::default();
    for b in start..start + len {
        let (errors, failed) = simulate_block(scheme, cfg, rho, snr_index, b)?;
        t.blocks += 1;
        t.errors += errors;
        t.failures += failed as u64;
    }
    Ok(t)
}

/// Simulates one SNR point until the stop rule triggers.
pub fn run_point(scheme: &Scheme, cfg: &SimConfig, snr_index: usize) -> Result<BerRecord> {
    let snr_db = cfg.snr_db[snr_index];
    let rho = db_to_linear(snr_db);
    let clock = Instant::now();
    let wave = 2 * rayon::current_num_threads().max(1) as u64;
    let mut total = Tally::default();
    let mut next_chunk = 0u64;
    let stop = 'outer: loop {
        let chunks: Vec<(u64, u64)> = (0..wave)
            .map(|i| {
                let start = (next_chunk + i) * CHUNK_BLOCKS;
                (start, CHUNK_BLOCKS.min(cfg.stop.max_blocks.saturating_sub(start)))
            })
            .filter(|&(_, len)| len > 0)
            .collect();
        next_chunk += wave;
        let tallies: Vec<Result<Tally>> =
            chunks.par_iter().map(|&(start, len)| run_chunk(scheme, cfg, rho, snr_index, start, len)).collect();
        for t in tallies {
            let t = t?;
            total.blocks += t.blocks;
            total.errors += t.errors;
            total.failures += t.failures;
            if total.errors >= cfg.stop.min_errors {
                break 'outer StopReason::Errors;
            }
            if total.blocks >= cfg.stop.max_blocks {
                break 'outer StopReason::Blocks;
            }
        }
    };
    if total.failures > 0 {
        log::warn!("{} blocks at {snr_db} dB had a singular channel", total.failures);
    }
    let bits = total.blocks * scheme.bits_per_block() as u64;
    let wall = clock.elapsed().as_secs_f64();
    log::info!(
        "{} {} dB: {} errors in {} blocks ({:?} limit), {:.1}s",
        scheme.code().name(),
        snr_db,
        total.errors,
        total.blocks,
        stop,
        wall
    );
    Ok(BerRecord {
        code: scheme.code().name().to_string(),
        m: scheme.code().antennas(),
        n: cfg.receive,
        constellation: scheme.constellation().name().to_string(),
        rotation: scheme.rotation_label().to_string(),
        detector: cfg.detector.to_string(),
        snr_db,
        trials: total.blocks,
        bit_errors: total.errors,
        ber: total.errors as f64 / bits as f64,
        seed: cfg.seed,
        wall_seconds: if cfg.record_wall_time { wall } else { 0.0 },
        stop: Some(stop),
        failures: total.failures,
    })
}

pub fn run_ber(cfg: &SimConfig) -> Result<Vec<BerRecord>> {
    cfg.validate()?;
    let scheme = cfg.scheme()?;
    (0..cfg.snr_db.len()).map(|i| run_point(&scheme, cfg, i)).collect()
}

pub fn write_ber_csv<W: Write>(records: &[BerRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(out);
    for r in records {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    if records.is_empty() {
        w.write_record(CSV_HEADER.split(',')).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ber_csv<R: std::io::Read>(input: R) -> Result<Vec<BerRecord>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(|e| Error::Parse(e.to_string()))).collect()
}

/// `a:b:step` (inclusive), a comma list, or a single value.
pub fn parse_snr_range(s: &str) -> Result<Vec<f64>> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad SNR value `{t}`")));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b, step] => {
            let (a, b, step) = (num(a)?, num(b)?, num(step)?);
            if !(step > 0.0) || b < a {
                return Err(Error::Config(format!("bad SNR range `{s}`")));
            }
            let n = ((b - a) / step + 1e-9).floor() as usize;
            Ok((0..=n).map(|i| a + i as f64 * step).collect())
        }
        [single] => single.split(',').map(num).collect(),
        _ => Err(Error::Config(format!("bad SNR range `{s}`"))),
    }
}

/// `key=value` lines; blank lines and `#` comments ignored.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("config line {}: expected key=value", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// One line of the PEP table.
#[derive(Debug, Clone, PartialEq)]
pub struct PepRow {
    pub rho_db: f64,
    pub beta: Vec<f64>,
    pub pep_exact: f64,
    pub pep_asymptotic: AsymptoticPep,
}

/// Difference set and decoder-side rotation of a scheme's groups.
/// Column-deleted QSTBC variants are accepted only when `allow_deleted`;
/// their PEP does not follow the full-code formula.
pub fn scheme_differences(scheme: &Scheme, allow_deleted: bool) -> Result<(DifferenceSet, crate::numerics::RealMatrix)> {
    let combined = scheme.combined_rotation(0)?;
    let diffs = match scheme.front_end() {
        FrontEnd::Qstbc8 { deleted } if allow_deleted || deleted.is_empty() => {
            DifferenceSet::qstbc_group(scheme.constellation())?
        }
        FrontEnd::Sast4 { half } => DifferenceSet::sast_group(scheme.constellation(), *half)?,
        _ => {
            return Err(Error::Unsupported(format!(
                "only 4gp-qstbc8 and 4gp-sastM have a closed-form PEP, not {}",
                scheme.code().name()
            )))
        }
    };
    if scheme.rotations().iter().any(|r| r != &scheme.rotations()[0]) {
        return Err(Error::Unsupported("PEP tables need the same rotation in every group".into()));
    }
    Ok((diffs, combined))
}

/// Worst-case exact PEP and worst-case asymptotic PEP at each SNR.
pub fn run_pep(scheme: &Scheme, snr_db: &[f64]) -> Result<Vec<PepRow>> {
    let (diffs, combined) = scheme_differences(scheme, false)?;
    snr_db
        .iter()
        .map(|&db| {
            let w = worst_case_pep(&diffs, &combined, db_to_linear(db))?;
            Ok(PepRow { rho_db: db, beta: w.beta, pep_exact: w.pep, pep_asymptotic: w.asymptotic })
        })
        .collect()
}

pub fn write_pep_csv<W: Write>(rows: &[PepRow], mut out: W) -> Result<()> {
    let m = rows.first().map_or(0, |r| r.beta.len());
    let betas: Vec<String> = (1..=m).map(|i| format!("beta{i}")).collect();
    writeln!(out, "rho_db,{},pep_exact,pep_asymptotic", betas.join(","))?;
    for r in rows {
        let beta: Vec<String> = r.beta.iter().map(f64::to_string).collect();
        let asym = match r.pep_asymptotic {
            AsymptoticPep::Finite(v) => v.to_string(),
            AsymptoticPep::DiversityDeficient => "deficient".into(),
        };
        writeln!(out, "{},{},{},{}", r.rho_db, beta.join(","), r.pep_exact, asym)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub name: String,
    pub time_slots: usize,
    pub antennas: usize,
    pub groups: Vec<Vec<usize>>,
    pub ok: bool,
    pub max_violation: f64,
    pub info: CodeInfo,
}

pub fn run_verify(code: &DispersionCode) -> VerifyReport {
    let check = verify_group_decodable(code);
    VerifyReport {
        name: code.name().to_string(),
        time_slots: code.time_slots(),
        antennas: code.antennas(),
        groups: code.groups().to_vec(),
        ok: check.ok,
        max_violation: check.max_violation,
        info: code.info(),
    }
}

impl std::fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "code: {}", self.name)?;
        writeln!(f, "size: {} slots x {} antennas", self.time_slots, self.antennas)?;
        for (i, g) in self.groups.iter().enumerate() {
            let names: Vec<String> = g
                .iter()
                .map(|&l| format!("{}{}", if l % 2 == 0 { 'a' } else { 'b' }, l / 2 + 1))
                .collect();
            writeln!(f, "group {}: {}", i + 1, names.join(" "))?;
        }
        writeln!(f, "group decodable: {}", self.ok)?;
        writeln!(f, "max violation: {:.3e}", self.max_violation)?;
        writeln!(f, "rate: {} symbols pcu", self.info.rate)?;
        writeln!(f, "delay: {}", self.info.delay)?;
        write!(f, "real group size: {}", self.info.real_group_size)
    }
}

/// Rotation search for a scheme's groups. Returns the matrix to transmit
/// with (for the QSTBC family this includes the leading `Θ`) and the
/// minimum product distance it achieves at the decoder, in raw units.
pub fn run_rotate(scheme: &Scheme, settings: &OptimizerSettings) -> Result<(RotationMatrix, f64)> {
    let (diffs, _) = scheme_differences(scheme, true)?;
    let best = optimize_rotation(&diffs, settings)?;
    let transmit = match scheme.front_end() {
        FrontEnd::Qstbc8 { .. } => RotationMatrix::new(theta4() * best.rotation.matrix())?,
        _ => best.rotation,
    };
    Ok((transmit, best.dp_min))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(code: &str, snr: f64) -> SimConfig {
        SimConfig {
            code: code.into(),
            snr_db: vec![snr],
            stop: StopRule { min_errors: 50, max_blocks: 3000 },
            record_wall_time: false,
            ..Default::default()
        }
    }

    #[test]
    fn snr_ranges() {
        assert_eq!(parse_snr_range("0:10:5").unwrap(), vec![0.0, 5.0, 10.0]);
        assert_eq!(parse_snr_range("0:1:0.25").unwrap().len(), 5);
        assert_eq!(parse_snr_range("3,7.5").unwrap(), vec![3.0, 7.5]);
        assert_eq!(parse_snr_range("-2").unwrap(), vec![-2.0]);
        for bad in ["", "1:2", "5:0:1", "0:5:0", "a"] {
            assert!(parse_snr_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn config_text() {
        let kv = parse_config_text("# c\ncode = 4gp-sast4\n\nseed=3\n").unwrap();
        assert_eq!(kv, vec![("code".into(), "4gp-sast4".into()), ("seed".into(), "3".into())]);
        assert!(parse_config_text("code").is_err());
    }

    #[test]
    fn validation() {
        let mut c = quick("4gp-sast4", 5.0);
        c.snr_db.clear();
        assert!(matches!(run_ber(&c), Err(Error::Config(_))));
        let mut c = quick("4gp-sast4", 5.0);
        c.stop.min_errors = 0;
        assert!(matches!(run_ber(&c), Err(Error::Config(_))));
        assert!(matches!(run_ber(&quick("nope", 5.0)), Err(Error::Config(_))));
        let mut c = quick("4gp-sast4", 5.0);
        c.rotation = RotationSource::File("/nonexistent/rot.txt".into());
        assert!(matches!(run_ber(&c), Err(Error::Config(_))));
    }

    #[test]
    fn stop_rule_is_honoured() {
        let r = &run_ber(&quick("4gp-sast4", 0.0)).unwrap()[0];
        assert_eq!(r.stop, Some(StopReason::Errors));
        assert!(r.bit_errors >= 50);
        assert_eq!(r.trials % CHUNK_BLOCKS, 0);
        let r = &run_ber(&quick("4gp-sast4", 40.0)).unwrap()[0];
        assert_eq!(r.stop, Some(StopReason::Blocks));
        assert_eq!(r.trials, 3000);
        assert!(r.ber >= 0.0 && r.ber <= 1.0);
    }

    #[test]
    fn worker_count_does_not_matter() {
        let cfg = quick("4gp-qstbc8", 6.0);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| run_ber(&cfg).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn csv_round_trip() {
        let recs = run_ber(&SimConfig { snr_db: vec![0.0, 3.0], ..quick("alamouti", 0.0) }).unwrap();
        let mut buf = Vec::new();
        write_ber_csv(&recs, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER);
        let back = read_ber_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1].bit_errors, recs[1].bit_errors);
        assert_eq!(back[1].ber, recs[1].ber);
        let mut empty = Vec::new();
        write_ber_csv(&[], &mut empty).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap().trim(), CSV_HEADER);
    }

    #[test]
    fn deleted_columns_build_six_antenna_qstbc() {
        let s = build_scheme("4gp-qstbc8", "4qam", &RotationChoice::Default, Some(&[3, 7])).unwrap();
        assert_eq!(s.code().name(), "4gp-qstbc6");
        assert_eq!(s.code().antennas(), 6);
        assert!(build_scheme("4gp-qstbc8", "4qam", &RotationChoice::Default, Some(&[9])).is_err());
    }

    #[test]
    fn pep_table_shape() {
        let s = Scheme::from_names("4gp-sast4", "4qam", &RotationChoice::Default).unwrap();
        let rows = run_pep(&s, &[10.0, 20.0]).unwrap();
        assert_eq!(rows[0].beta.len(), 2);
        assert!(rows[1].pep_exact < rows[0].pep_exact);
        let mut buf = Vec::new();
        write_pep_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("rho_db,beta1,beta2,pep_exact,pep_asymptotic\n"));
        let a = Scheme::from_names("alamouti", "4qam", &RotationChoice::Default).unwrap();
        assert!(run_pep(&a, &[10.0]).is_err());
    }

    #[test]
    fn verify_report_text() {
        let r = run_verify(&codebook::sast_4gp_code(6).unwrap());
        assert!(r.ok);
        let text = r.to_string();
        assert!(text.contains("delay: 6"));
        assert!(text.contains("real group size: 3"));
    }
}
