//! Aperture families. Each pattern is the generating row `a` of the circulant
//! transfer matrix `A_{ji} = a_{(i - j) mod n}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum::spectrum_of_row;

/// Aperture family tag, with the parameters that produced the pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    Pinhole,
    Mls { degree: u32 },
    Mura,
    BernoulliOnOff { p: f64 },
    UniformGray,
    Custom,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Pinhole => "pinhole",
            Family::Mls { .. } => "mls",
            Family::Mura => "mura",
            Family::BernoulliOnOff { .. } => "bernoulli",
            Family::UniformGray => "uniform",
            Family::Custom => "custom",
        }
    }
}

/// Measured DC and bulk spectrum levels recorded by the pseudo-noise generators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatnessReport {
    /// `lambda_1 = sum(a)`.
    pub dc: f64,
    /// Level every non-DC `|lambda_k|^2` should sit at for an exactly flat pattern, `(n+1)/4`.
    pub bulk_target: f64,
    pub bulk_mean: f64,
    pub bulk_min: f64,
    pub bulk_max: f64,
    /// `max_k | |lambda_k|^2 - bulk_target |` over `k >= 2`.
    pub max_deviation: f64,
}

/// Generating row of a circulant aperture.
#[derive(Debug, Clone, PartialEq)]
pub struct AperturePattern {
    values: Vec<f64>,
    family: Family,
    seed: Option<u64>,
    flatness: Option<FlatnessReport>,
}

impl AperturePattern {
    /// Wraps arbitrary transmissivities in `[0, 1]` as a custom pattern.
    pub fn custom(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("pattern must have at least one element"));
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::invalid(format!(
                "pattern entry {i} = {v} outside [0, 1]"
            )));
        }
        Ok(AperturePattern {
            values,
            family: Family::Custom,
            seed: None,
            flatness: None,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn flatness(&self) -> Option<&FlatnessReport> {
        self.flatness.as_ref()
    }

    /// Mean transmissivity `(1/n) sum a`.
    pub fn transmissivity(&self) -> f64 {
        transmissivity(self)
    }

    /// Number of entries equal to 1.
    pub fn ones(&self) -> usize {
        self.values.iter().filter(|&&v| v == 1.0).count()
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }
}

/// `rho = mean(a)`.
pub fn transmissivity(pattern: &AperturePattern) -> f64 {
    crate::numeric::sum(pattern.values.iter().copied()) / pattern.len() as f64
}

pub fn gen_pinhole(n: usize) -> Result<AperturePattern> {
    if n == 0 {
        return Err(Error::invalid("pinhole needs n >= 1"));
    }
    let mut values = vec![0.0; n];
    values[0] = 1.0;
    Ok(AperturePattern {
        values,
        family: Family::Pinhole,
        seed: None,
        flatness: None,
    })
}

/// Primitive polynomials over GF(2), one per degree 2..=20, given as the
/// exponents of their nonconstant terms. Trinomials where one exists,
/// otherwise pentanomials.
pub const PRIMITIVE_POLYNOMIALS: [(u32, &[u32]); 19] = [
    (2, &[2, 1]),
    (3, &[3, 2]),
    (4, &[4, 3]),
    (5, &[5, 3]),
    (6, &[6, 5]),
    (7, &[7, 6]),
    (8, &[8, 6, 5, 4]),
    (9, &[9, 5]),
    (10, &[10, 7]),
    (11, &[11, 9]),
    (12, &[12, 11, 10, 4]),
    (13, &[13, 12, 11, 8]),
    (14, &[14, 13, 12, 2]),
    (15, &[15, 14]),
    (16, &[16, 15, 13, 4]),
    (17, &[17, 14]),
    (18, &[18, 11]),
    (19, &[19, 18, 17, 14]),
    (20, &[20, 17]),
];

pub const MLS_MIN_DEGREE: u32 = 2;
pub const MLS_MAX_DEGREE: u32 = 20;

fn polynomial_taps(degree: u32) -> Result<&'static [u32]> {
    PRIMITIVE_POLYNOMIALS
        .iter()
        .find(|(d, _)| *d == degree)
        .map(|(_, taps)| *taps)
        .ok_or_else(|| {
            Error::invalid(format!(
                "no primitive polynomial for degree {degree} (supported: {MLS_MIN_DEGREE}..={MLS_MAX_DEGREE})"
            ))
        })
}

/// Maximum length sequence of length `2^degree - 1` from a Fibonacci LFSR.
///
/// `seed_state` is the initial register contents (low `degree` bits, nonzero);
/// it only selects a cyclic shift of the sequence. Defaults to 1.
pub fn gen_mls(degree: u32, seed_state: Option<u32>) -> Result<AperturePattern> {
    let taps = polynomial_taps(degree)?;
    let mask = (1u32 << degree) - 1;
    let mut state = seed_state.unwrap_or(1);
    if state & mask == 0 || state & !mask != 0 {
        return Err(Error::invalid(format!(
            "MLS seed state must be a nonzero {degree}-bit value, got {state:#x}"
        )));
    }
    let n = mask as usize;
    let tap_mask = taps.iter().fold(0u32, |m, &e| m | 1 << (degree - e));
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        values.push(f64::from(state & 1));
        let feedback = (state & tap_mask).count_ones() & 1;
        state = (state >> 1) | (feedback << (degree - 1));
    }

    let report = flatness_report(&values);
    let expected_dc = (n as f64 + 1.0) / 2.0;
    if report.dc != expected_dc || report.max_deviation > 1e-6 * n as f64 {
        return Err(Error::Internal(format!(
            "MLS degree {degree} failed the flatness self-check (dc = {}, max bulk deviation = {:.3e}); \
             check the primitive polynomial table",
            report.dc, report.max_deviation
        )));
    }
    Ok(AperturePattern {
        values,
        family: Family::Mls { degree },
        seed: None,
        flatness: Some(report),
    })
}

pub fn is_prime(n: usize) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Quadratic-residue pattern for a prime `n = 4d + 1`.
///
/// `a_0 = 1` and `a_i = 1` iff `i` is a nonzero quadratic residue mod `n`,
/// giving `(n+1)/2` ones. For these primes the Legendre symbol is even and the
/// non-DC spectrum takes exactly two levels, `(1 +/- sqrt(n))^2 / 4`, which
/// average to `(n+1)/4`. The self-check verifies that two-level structure.
pub fn gen_mura(n: usize) -> Result<AperturePattern> {
    if !is_prime(n) || n % 4 != 1 {
        return Err(Error::invalid(format!(
            "MURA length must be a prime of the form 4d+1, got {n}"
        )));
    }
    let mut residue = vec![false; n];
    for i in 1..n {
        residue[(i * i) % n] = true;
    }
    let values: Vec<f64> = (0..n)
        .map(|i| if i == 0 || residue[i] { 1.0 } else { 0.0 })
        .collect();

    let report = flatness_report(&values);
    let spec = spectrum_of_row(&values);
    let root = (n as f64).sqrt();
    let tol = 1e-6 * n as f64;
    for (k, &lsq) in spec.lambda_sq.iter().enumerate().skip(1) {
        let chi = if residue[k] { 1.0 } else { -1.0 };
        let expected = (1.0 + chi * root).powi(2) / 4.0;
        if (lsq - expected).abs() > tol {
            return Err(Error::Internal(format!(
                "MURA n = {n}: |lambda|^2 at frequency {k} is {lsq}, expected {expected}"
            )));
        }
    }
    if report.dc != (n as f64 + 1.0) / 2.0 {
        return Err(Error::Internal(format!("MURA n = {n}: dc = {}", report.dc)));
    }
    Ok(AperturePattern {
        values,
        family: Family::Mura,
        seed: None,
        flatness: Some(report),
    })
}

/// Each entry independently 1 with probability `p` (ChaCha8 seeded from `seed`).
pub fn gen_bernoulli(n: usize, p: f64, seed: u64) -> Result<AperturePattern> {
    if n == 0 {
        return Err(Error::invalid("pattern needs n >= 1"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("Bernoulli p must lie in (0, 1), got {p}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n)
        .map(|_| if rng.random::<f64>() < p { 1.0 } else { 0.0 })
        .collect();
    Ok(AperturePattern {
        values,
        family: Family::BernoulliOnOff { p },
        seed: Some(seed),
        flatness: None,
    })
}

/// IID `Uniform[0, 1)` gray-level entries.
pub fn gen_uniform(n: usize, seed: u64) -> Result<AperturePattern> {
    if n == 0 {
        return Err(Error::invalid("pattern needs n >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n).map(|_| rng.random::<f64>()).collect();
    Ok(AperturePattern {
        values,
        family: Family::UniformGray,
        seed: Some(seed),
        flatness: None,
    })
}

fn flatness_report(values: &[f64]) -> FlatnessReport {
    let n = values.len();
    let spec = spectrum_of_row(values);
    let target = (n as f64 + 1.0) / 4.0;
    let bulk = &spec.lambda_sq[1..];
    let (mut lo, mut hi, mut dev) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for &v in bulk {
        lo = lo.min(v);
        hi = hi.max(v);
        dev = dev.max((v - target).abs());
    }
    FlatnessReport {
        dc: spec.lambda1,
        bulk_target: target,
        bulk_mean: crate::numeric::sum(bulk.iter().copied()) / bulk.len().max(1) as f64,
        bulk_min: lo,
        bulk_max: hi,
        max_deviation: dev,
    }
}

/// JSON descriptor written next to a serialized pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternDescriptor {
    #[serde(flatten)]
    pub family: Family,
    pub n: usize,
    pub seed: Option<u64>,
    pub rho: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub flatness: Option<FlatnessReport>,
}

impl AperturePattern {
    pub fn descriptor(&self) -> PatternDescriptor {
        PatternDescriptor {
            family: self.family,
            n: self.len(),
            seed: self.seed,
            rho: self.transmissivity(),
            flatness: self.flatness,
        }
    }

    /// One entry per line, plain decimal.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.len() * 4);
        for v in &self.values {
            out.push_str(&format!("{v}\n"));
        }
        out
    }

    /// Parses the one-entry-per-line format. Blank lines and `#` comments are skipped.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut values = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: f64 = line.parse().map_err(|_| {
                Error::invalid(format!("line {}: cannot parse {line:?} as a number", lineno + 1))
            })?;
            values.push(v);
        }
        Self::custom(values)
    }

    /// Re-tags a parsed pattern with the family recorded in its descriptor.
    pub fn with_descriptor(mut self, desc: &PatternDescriptor) -> Result<Self> {
        if desc.n != self.len() {
            return Err(Error::invalid(format!(
                "descriptor says n = {} but pattern has {} entries",
                desc.n,
                self.len()
            )));
        }
        self.family = desc.family;
        self.seed = desc.seed;
        self.flatness = desc.flatness;
        Ok(self)
    }
}
