//! FID acquisition, Fourier transform to a spectrum, and spectral
//! comparison.
//!
//! The default [`AcquisitionConfig`] samples 4096 points at 8000 Hz, i.e. a
//! 0.125 ms dwell time and a [0, 4000] Hz window, which covers 0–10 ppm on a
//! 400 MHz instrument with the carrier at 0 ppm.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::circuit::{build_fid_circuit, decompose_to_native, CircuitIR, Gate, NativeBasis, ProductFormula};
use crate::error::{Error, Result};
use crate::hamiltonian::{build_terms, realize_dense};
use crate::simulator::{point_rng, sample_measured_state, StateVector};
use crate::spin_model::SpinSystem;

/// Which engine produces the magnetization at each time point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    /// Product-formula circuit executed on the state-vector simulator.
    #[default]
    TrotterCircuit,
    /// Exact propagation by eigendecomposition of the dense Hamiltonian.
    ExactOracle,
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "trotter" | "circuit" | "trotter_circuit" => Ok(Engine::TrotterCircuit),
            "exact" | "oracle" | "exact_oracle" => Ok(Engine::ExactOracle),
            _ => Err(Error::Parameter(format!("unknown engine {s:?}"))),
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::TrotterCircuit => "trotter",
            Engine::ExactOracle => "exact",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AcquisitionConfig {
    pub n_points: usize,
    pub sample_rate_hz: f64,
    /// 0 means exact expectation values; otherwise shots per point and run.
    pub shots: usize,
    pub runs: usize,
    pub repetitions: usize,
    #[serde(serialize_with = "serialize_display")]
    pub formula: ProductFormula,
    pub seed: u64,
}

fn serialize_display<S: serde::Serializer, T: fmt::Display>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

impl Default for AcquisitionConfig {
    /// Noiseless acquisition on the standard 4096-point, 8 kHz grid.
    fn default() -> Self {
        Self {
            n_points: 4096,
            sample_rate_hz: 8000.0,
            shots: 0,
            runs: 1,
            repetitions: 1,
            formula: ProductFormula::LieTrotter,
            seed: 0,
        }
    }
}

impl AcquisitionConfig {
    /// 4000 shots per point, averaged over 5 runs, one Lie-Trotter step.
    pub fn shot_protocol() -> Self {
        Self { shots: 4000, runs: 5, ..Self::default() }
    }

    pub fn dwell_s(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| i as f64 / self.sample_rate_hz).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points < 2 {
            return Err(Error::Parameter(format!("need at least 2 points, got {}", self.n_points)));
        }
        if !(self.sample_rate_hz.is_finite() && self.sample_rate_hz > 0.0) {
            return Err(Error::Parameter(format!("sample rate must be positive, got {}", self.sample_rate_hz)));
        }
        if self.runs == 0 {
            return Err(Error::Parameter("runs must be at least 1".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::Parameter("repetitions must be at least 1".into()));
        }
        Ok(())
    }
}

/// Transverse magnetization sampled on a uniform time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FidRecord {
    pub times: Vec<f64>,
    /// Run-averaged M_X.
    pub mx: Vec<f64>,
    /// Raw per-run series; empty unless more than one sampled run was
    /// acquired.
    pub runs: Vec<Vec<f64>>,
    pub config: AcquisitionConfig,
    pub engine: Engine,
}

impl FidRecord {
    /// Wraps an externally produced series sampled at `sample_rate_hz`.
    pub fn from_samples(sample_rate_hz: f64, mx: Vec<f64>) -> Result<Self> {
        let config = AcquisitionConfig { n_points: mx.len(), sample_rate_hz, ..AcquisitionConfig::default() };
        config.validate()?;
        Ok(Self { times: config.times(), mx, runs: Vec::new(), config, engine: Engine::ExactOracle })
    }

    pub fn len(&self) -> usize {
        self.mx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mx.is_empty()
    }

    /// Pointwise sum of two records on the same grid.
    pub fn add(&self, other: &FidRecord) -> Result<FidRecord> {
        if self.times != other.times {
            return Err(Error::Validation("FID records are on different time grids".into()));
        }
        let mut out = self.clone();
        for (a, b) in out.mx.iter_mut().zip(&other.mx) {
            *a += b;
        }
        out.runs.clear();
        Ok(out)
    }
}

/// Acquires the FID of `sys`: for every time point a fresh initial state is
/// evolved and M_X recorded, exactly or from shots.
pub fn acquire_fid(sys: &SpinSystem, cfg: &AcquisitionConfig, engine: Engine) -> Result<FidRecord> {
    cfg.validate()?;
    let times = cfg.times();
    let per_point: Vec<Vec<f64>> = match engine {
        Engine::TrotterCircuit => times
            .par_iter()
            .enumerate()
            .map(|(i, &t)| {
                let circuit = build_fid_circuit(sys, t, cfg.repetitions, cfg.formula)?;
                let mut psi = StateVector::zero(sys.n_spins());
                psi.apply_circuit(&circuit)?;
                Ok(read_point(&psi, cfg, i))
            })
            .collect::<Result<_>>()?,
        Engine::ExactOracle => {
            let dense = realize_dense(&build_terms(sys))?;
            let propagator = dense.propagator()?;
            let prepared = propagator.prepare(&StateVector::plus(sys.n_spins()))?;
            let readout = readout_rotation(sys.n_spins())?;
            times
                .par_iter()
                .enumerate()
                .map(|(i, &t)| {
                    let mut psi = prepared.state_at(t);
                    if cfg.shots == 0 {
                        return Ok(vec![psi.expectation_mx()]);
                    }
                    psi.apply_circuit(&readout)?;
                    Ok(read_point(&psi, cfg, i))
                })
                .collect::<Result<_>>()?
        }
    };

    let mx = per_point.iter().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect();
    let runs = if cfg.runs > 1 && cfg.shots > 0 {
        (0..cfg.runs)
            .map(|r| per_point.iter().map(|v| v[r]).collect())
            .collect()
    } else {
        Vec::new()
    };
    Ok(FidRecord { times, mx, runs, config: *cfg, engine })
}

/// M_X from a state already rotated into the measurement basis: one value
/// in exact mode, one sampled estimate per run otherwise.
fn read_point(measured: &StateVector, cfg: &AcquisitionConfig, time_index: usize) -> Vec<f64> {
    if cfg.shots == 0 {
        return vec![measured.expectation_mz()];
    }
    (0..cfg.runs)
        .map(|r| {
            let mut rng = point_rng(cfg.seed, time_index, r);
            sample_measured_state(measured, cfg.shots, &mut rng).mx_estimate
        })
        .collect()
}

fn readout_rotation(n: usize) -> Result<CircuitIR> {
    CircuitIR::from_gates(n, (0..n).map(|q| Gate::ry(q, -FRAC_PI_2)).collect())
}

/// One-sided spectrum of a real FID.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// `k · rate / n` for `k = 0..=n/2`.
    pub freqs: Vec<f64>,
    pub values: Vec<Complex64>,
    pub line_broadening_hz: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn magnitude(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    pub fn bin_width_hz(&self) -> f64 {
        if self.freqs.len() > 1 {
            self.freqs[1] - self.freqs[0]
        } else {
            0.0
        }
    }

    /// Bin index of the largest magnitude.
    pub fn peak_bin(&self) -> usize {
        let mag = self.magnitude();
        (0..mag.len()).fold(0, |best, k| if mag[k] > mag[best] { k } else { best })
    }

    /// Bins that are strict local maxima with magnitude above
    /// `rel_threshold · max`.
    pub fn local_maxima(&self, rel_threshold: f64) -> Vec<usize> {
        let mag = self.magnitude();
        let top = mag.iter().cloned().fold(0.0, f64::max);
        (1..mag.len().saturating_sub(1))
            .filter(|&k| mag[k] > mag[k - 1] && mag[k] >= mag[k + 1] && mag[k] > rel_threshold * top)
            .collect()
    }
}

fn apodized(fid: &FidRecord, line_broadening_hz: f64) -> Vec<Complex64> {
    fid.times
        .iter()
        .zip(&fid.mx)
        .map(|(&t, &y)| Complex64::new(y * (-PI * line_broadening_hz * t).exp(), 0.0))
        .collect()
}

/// Full two-sided DFT `X_k = Σ_n x_n e^{-2πikn/N}` of the apodized FID.
pub fn full_transform(fid: &FidRecord, line_broadening_hz: f64) -> Vec<Complex64> {
    let mut buf = apodized(fid, line_broadening_hz);
    FftPlanner::<f64>::new().plan_fft_forward(buf.len()).process(&mut buf);
    buf
}

/// Optional exponential apodization `exp(-π·lb·t)` followed by the
/// real-input DFT. The DC term is kept.
pub fn to_spectrum(fid: &FidRecord, line_broadening_hz: f64) -> Result<Spectrum> {
    if !(line_broadening_hz.is_finite() && line_broadening_hz >= 0.0) {
        return Err(Error::Parameter(format!("line broadening must be >= 0, got {line_broadening_hz}")));
    }
    let n = fid.len();
    let full = full_transform(fid, line_broadening_hz);
    let half = n / 2 + 1;
    let rate = fid.config.sample_rate_hz;
    Ok(Spectrum {
        freqs: (0..half).map(|k| k as f64 * rate / n as f64).collect(),
        values: full[..half].to_vec(),
        line_broadening_hz,
    })
}

/// `1 - (x·y)/(‖x‖‖y‖)` over magnitude spectra.
pub fn cosine_distance(a: &Spectrum, b: &Spectrum) -> Result<f64> {
    if a.freqs != b.freqs {
        return Err(Error::Validation("spectra have different frequency axes".into()));
    }
    let (x, y) = (a.magnitude(), b.magnitude());
    cosine_distance_of(&x, &y)
}

/// Cosine distance between two equal-length vectors.
pub fn cosine_distance_of(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Validation("vectors have different lengths".into()));
    }
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let ny = y.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::UndefinedMetric("cosine distance of a zero vector".into()));
    }
    Ok((1.0 - dot / (nx * ny)).clamp(0.0, 2.0))
}

/// Which product formulas a Trotter-error sweep compares against the exact
/// spectrum.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepPlan {
    /// Lie-Trotter repetition counts.
    pub repetitions: Vec<usize>,
    /// Suzuki orders, each run with the config's repetition count.
    pub suzuki_orders: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub system: String,
    pub n_spins: usize,
    #[serde(serialize_with = "serialize_display")]
    pub formula: ProductFormula,
    pub repetitions: usize,
    pub cosine_distance: f64,
    /// Two-qubit depth of the CX-basis circuit before routing.
    pub twoq_depth: usize,
}

/// Cosine distance between product-formula and exact spectra for every
/// system and formula setting. Both sides use exact expectation values and
/// no apodization.
pub fn trotter_error_sweep(dataset: &[SpinSystem], plan: &SweepPlan, cfg: &AcquisitionConfig) -> Result<Vec<SweepRow>> {
    let cfg = AcquisitionConfig { shots: 0, runs: 1, ..*cfg };
    let mut settings: Vec<(ProductFormula, usize)> =
        plan.repetitions.iter().map(|&r| (ProductFormula::LieTrotter, r)).collect();
    for &order in &plan.suzuki_orders {
        settings.push((ProductFormula::suzuki(order)?, cfg.repetitions));
    }

    let mut rows = Vec::with_capacity(dataset.len() * settings.len());
    for sys in dataset {
        let exact = to_spectrum(&acquire_fid(sys, &cfg, Engine::ExactOracle)?, 0.0)?;
        for &(formula, repetitions) in &settings {
            let run_cfg = AcquisitionConfig { formula, repetitions, ..cfg };
            let approx = to_spectrum(&acquire_fid(sys, &run_cfg, Engine::TrotterCircuit)?, 0.0)?;
            let depth_probe = build_fid_circuit(sys, cfg.dwell_s(), repetitions, formula)?;
            let native = decompose_to_native(&depth_probe, NativeBasis::Cx)?;
            rows.push(SweepRow {
                system: sys.name().to_string(),
                n_spins: sys.n_spins(),
                formula,
                repetitions,
                cosine_distance: cosine_distance(&approx, &exact)?,
                twoq_depth: native.two_qubit_depth(),
            });
        }
    }
    Ok(rows)
}

/// Sweep rows as CSV: `system,n_spins,formula,repetitions,twoq_depth,cosine_distance`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("system,n_spins,formula,repetitions,twoq_depth,cosine_distance\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{:e}",
            r.system, r.n_spins, r.formula, r.repetitions, r.twoq_depth, r.cosine_distance
        );
    }
    s
}

fn header_block(header: &[String]) -> String {
    header.iter().map(|h| format!("# {h}\n")).collect()
}

/// `t_s,mx[,run_0..run_{R-1}]` preceded by `#` comment lines.
pub fn fid_csv(fid: &FidRecord, header: &[String]) -> String {
    let mut s = header_block(header);
    s.push_str("t_s,mx");
    for r in 0..fid.runs.len() {
        let _ = write!(s, ",run_{r}");
    }
    s.push('\n');
    for (i, (t, m)) in fid.times.iter().zip(&fid.mx).enumerate() {
        let _ = write!(s, "{t:?},{m:?}");
        for run in &fid.runs {
            let _ = write!(s, ",{:?}", run[i]);
        }
        s.push('\n');
    }
    s
}

/// `freq_hz,re,im,mag` preceded by `#` comment lines.
pub fn spectrum_csv(spec: &Spectrum, header: &[String]) -> String {
    let mut s = header_block(header);
    s.push_str("freq_hz,re,im,mag\n");
    for (f, z) in spec.freqs.iter().zip(&spec.values) {
        let _ = writeln!(s, "{f:?},{:?},{:?},{:?}", z.re, z.im, z.norm());
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(values: Vec<f64>) -> FidRecord {
        FidRecord::from_samples(8000.0, values).unwrap()
    }

    #[test]
    fn default_grid_matches_protocol() {
        let cfg = AcquisitionConfig::default();
        assert_eq!(cfg.dwell_s(), 0.000125);
        let t = cfg.times();
        assert_eq!(t.len(), 4096);
        assert_eq!(t[1], 0.000125);
        let spec = to_spectrum(&record(vec![1.0; 4096]), 0.0).unwrap();
        assert_eq!(spec.len(), 2049);
        assert_eq!(*spec.freqs.last().unwrap(), 4000.0);
        assert_eq!(spec.bin_width_hz(), 8000.0 / 4096.0);
    }

    #[test]
    fn config_validation() {
        let mut cfg = AcquisitionConfig { n_points: 1, ..Default::default() };
        assert!(cfg.validate().is_err());
        cfg.n_points = 8;
        cfg.sample_rate_hz = 0.0;
        assert!(cfg.validate().is_err());
        cfg.sample_rate_hz = 10.0;
        cfg.runs = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn constant_fid_is_all_dc() {
        let spec = to_spectrum(&record(vec![0.75; 512]), 0.0).unwrap();
        let mag = spec.magnitude();
        assert!((mag[0] - 0.75 * 512.0).abs() < 1e-9);
        assert!(mag[1..].iter().all(|&m| m < 1e-10));
    }

    #[test]
    fn on_bin_cosine_gives_single_peak() {
        let n = 4096;
        let f = 1000.0;
        let values = (0..n).map(|i| 0.5 * (2.0 * PI * f * i as f64 / 8000.0).cos()).collect();
        let spec = to_spectrum(&record(values), 0.0).unwrap();
        assert_eq!(spec.peak_bin(), 512);
        let mag = spec.magnitude();
        assert!((mag[512] - 0.25 * n as f64).abs() < 1e-8);
        assert!(mag[0] < 1e-10);
        let rest = mag.iter().enumerate().filter(|&(k, _)| k != 512).map(|(_, m)| *m).fold(0.0, f64::max);
        assert!(rest < 1e-9);
    }

    #[test]
    fn negative_broadening_is_rejected() {
        assert!(to_spectrum(&record(vec![1.0; 8]), -1.0).is_err());
    }

    #[test]
    fn cosine_distance_cases() {
        let spec = |v: Vec<f64>| Spectrum {
            freqs: (0..v.len()).map(|k| k as f64).collect(),
            values: v.into_iter().map(|x| Complex64::new(x, 0.0)).collect(),
            line_broadening_hz: 0.0,
        };
        let a = spec(vec![1.0, 2.0, 3.0]);
        assert!(cosine_distance(&a, &a).unwrap().abs() < 1e-15);
        assert!(cosine_distance(&a, &spec(vec![2.0, 4.0, 6.0])).unwrap().abs() < 1e-15);
        assert!((cosine_distance(&spec(vec![1.0, 0.0]), &spec(vec![0.0, 1.0])).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(
            cosine_distance(&a, &spec(vec![0.0, 0.0, 0.0])),
            Err(Error::UndefinedMetric(_))
        ));
        assert!(cosine_distance(&a, &spec(vec![1.0, 2.0])).is_err());
    }

    #[test]
    fn csv_layouts() {
        let mut fid = record(vec![0.5, 0.25]);
        fid.runs = vec![vec![0.4, 0.2], vec![0.6, 0.3]];
        let text = fid_csv(&fid, &["engine: exact".into()]);
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "# engine: exact");
        assert_eq!(lines[1], "t_s,mx,run_0,run_1");
        assert_eq!(lines[2], "0.0,0.5,0.4,0.6");

        let spec = to_spectrum(&record(vec![1.0, 1.0]), 0.0).unwrap();
        let text = spectrum_csv(&spec, &[]);
        assert!(text.starts_with("freq_hz,re,im,mag\n0.0,2.0,0.0,2.0\n"));
    }

    #[test]
    fn engine_parsing() {
        assert_eq!("exact".parse::<Engine>().unwrap(), Engine::ExactOracle);
        assert_eq!("trotter".parse::<Engine>().unwrap(), Engine::TrotterCircuit);
        assert!("qpu".parse::<Engine>().is_err());
    }
}
