//! Chebyshev Type I bandpass filterbank and zero-phase subband decomposition.
//!
//! Filters are designed from the analog lowpass prototype, shifted to a
//! bandpass with the lowpass-to-bandpass substitution and discretized with
//! the prewarped bilinear transform. They are applied as a cascade of
//! second-order sections; the expanded transfer-function polynomials are kept
//! alongside for inspection and interchange.

use num_complex::Complex64;

use crate::dataio::EegEpoch;
use crate::error::{Error, Result};

pub const DEFAULT_ORDER: usize = 12;
pub const DEFAULT_RIPPLE_DB: f64 = 3.0;
pub const DEFAULT_HIGH_HZ: f64 = 80.0;
pub const DEFAULT_SUBBANDS: usize = 5;

/// Band edges and shape of one bandpass filter.
///
/// `order` is the order of the final bandpass filter, twice the order of the
/// lowpass prototype, so it must be even.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandpassSpec {
    pub order: usize,
    pub ripple_db: f64,
    pub low_hz: f64,
    pub high_hz: f64,
    pub sample_rate_hz: f64,
}

impl BandpassSpec {
    /// Spec with the default order, ripple and 80 Hz upper edge.
    pub fn new(low_hz: f64, sample_rate_hz: f64) -> Self {
        Self {
            order: DEFAULT_ORDER,
            ripple_db: DEFAULT_RIPPLE_DB,
            low_hz,
            high_hz: DEFAULT_HIGH_HZ,
            sample_rate_hz,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.order < 2 || !self.order.is_multiple_of(2) {
            return Err(Error::arg(format!(
                "bandpass order must be even and at least 2, got {}",
                self.order
            )));
        }
        if !(self.ripple_db.is_finite() && self.ripple_db > 0.0) {
            return Err(Error::arg(format!(
                "passband ripple must be positive, got {} dB",
                self.ripple_db
            )));
        }
        let nyquist = self.sample_rate_hz / 2.0;
        if !(self.low_hz > 0.0 && self.low_hz < self.high_hz && self.high_hz < nyquist) {
            return Err(Error::arg(format!(
                "band edges must satisfy 0 < {} < {} < {nyquist}",
                self.low_hz, self.high_hz
            )));
        }
        Ok(())
    }
}

/// One biquad `(b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Biquad {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Biquad {
    /// Initial transposed direct-form II state for a unit-step steady state.
    fn step_state(&self) -> [f64; 2] {
        let [_, b1, b2] = self.b;
        let [_, a1, a2] = self.a;
        let gain = self.dc_gain();
        let z2 = b2 - a2 * gain;
        let z1 = b1 - a1 * gain + z2;
        [z1, z2]
    }

    fn dc_gain(&self) -> f64 {
        self.b.iter().sum::<f64>() / self.a.iter().sum::<f64>()
    }

    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z_inv2 = z_inv * z_inv;
        (self.b[0] + z_inv * self.b[1] + z_inv2 * self.b[2])
            / (self.a[0] + z_inv * self.a[1] + z_inv2 * self.a[2])
    }
}

/// Digital IIR filter: expanded transfer function plus its cascade form.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterCoefficients {
    numerator: Vec<f64>,
    denominator: Vec<f64>,
    sections: Vec<Biquad>,
    poles: Vec<Complex64>,
}

impl FilterCoefficients {
    /// `b` in `H(z) = B(z^-1) / A(z^-1)`.
    pub fn numerator(&self) -> &[f64] {
        &self.numerator
    }

    /// `a`, normalized so that `a[0] = 1`.
    pub fn denominator(&self) -> &[f64] {
        &self.denominator
    }

    pub fn sections(&self) -> &[Biquad] {
        &self.sections
    }

    pub fn poles(&self) -> &[Complex64] {
        &self.poles
    }

    pub fn max_pole_radius(&self) -> f64 {
        self.poles.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }

    /// Length of the longer coefficient vector.
    pub fn len(&self) -> usize {
        self.numerator.len().max(self.denominator.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Complex response at `freq_hz`, evaluated through the cascade.
    pub fn response(&self, freq_hz: f64, sample_rate_hz: f64) -> Complex64 {
        let w = 2.0 * std::f64::consts::PI * freq_hz / sample_rate_hz;
        let z_inv = Complex64::from_polar(1.0, -w);
        self.sections
            .iter()
            .map(|s| s.response(z_inv))
            .fold(Complex64::new(1.0, 0.0), |acc, h| acc * h)
    }

    pub fn magnitude_db(&self, freq_hz: f64, sample_rate_hz: f64) -> f64 {
        20.0 * self.response(freq_hz, sample_rate_hz).norm().log10()
    }
}

/// Poles of the normalized analog Chebyshev Type I lowpass prototype
/// (passband edge 1 rad/s) and its gain.
fn cheby1_prototype(order: usize, ripple_db: f64) -> (Vec<Complex64>, f64) {
    let eps = (10f64.powf(ripple_db / 10.0) - 1.0).sqrt();
    let mu = (1.0 / eps).asinh() / order as f64;
    let poles: Vec<Complex64> = (1..=order)
        .map(|k| {
            let theta = std::f64::consts::PI * (2 * k - 1) as f64 / (2 * order) as f64;
            Complex64::new(-mu.sinh() * theta.sin(), mu.cosh() * theta.cos())
        })
        .collect();
    let mut gain = poles.iter().fold(Complex64::new(1.0, 0.0), |acc, p| acc * -p).re;
    if order.is_multiple_of(2) {
        gain /= (1.0 + eps * eps).sqrt();
    }
    (poles, gain)
}

fn expand(roots_pairs: &[[f64; 3]]) -> Vec<f64> {
    roots_pairs.iter().fold(vec![1.0], |acc, q| {
        let mut out = vec![0.0; acc.len() + 2];
        for (i, a) in acc.iter().enumerate() {
            for (j, b) in q.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        out
    })
}

/// Groups poles into second-order denominators `[1, a1, a2]`.
fn pair_poles(poles: &[Complex64]) -> Result<Vec<[f64; 3]>> {
    let tol = 1e-12;
    let mut complex: Vec<Complex64> = poles.iter().copied().filter(|p| p.im > tol).collect();
    let mut real: Vec<f64> = poles
        .iter()
        .filter(|p| p.im.abs() <= tol)
        .map(|p| p.re)
        .collect();
    let n_lower = poles.iter().filter(|p| p.im < -tol).count();
    if n_lower != complex.len() || !real.len().is_multiple_of(2) {
        return Err(Error::Design("poles do not form conjugate pairs".into()));
    }
    complex.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    real.sort_by(f64::total_cmp);
    let mut out: Vec<[f64; 3]> = real
        .chunks(2)
        .map(|r| [1.0, -(r[0] + r[1]), r[0] * r[1]])
        .collect();
    out.extend(complex.iter().map(|p| [1.0, -2.0 * p.re, p.norm_sqr()]));
    Ok(out)
}

/// Designs a Chebyshev Type I bandpass filter.
pub fn design_chebyshev1(spec: &BandpassSpec) -> Result<FilterCoefficients> {
    spec.validate()?;
    let n = spec.order / 2;
    let fs = spec.sample_rate_hz;
    let fs2 = 2.0 * fs;
    let (proto, proto_gain) = cheby1_prototype(n, spec.ripple_db);

    // prewarped analog edges
    let w_lo = fs2 * (std::f64::consts::PI * spec.low_hz / fs).tan();
    let w_hi = fs2 * (std::f64::consts::PI * spec.high_hz / fs).tan();
    let bw = w_hi - w_lo;
    let w0_sq = w_lo * w_hi;

    let mut analog = Vec::with_capacity(2 * n);
    for p in &proto {
        let half = p * (bw / 2.0);
        let disc = (half * half - w0_sq).sqrt();
        analog.push(half + disc);
        analog.push(half - disc);
    }
    // n zeros at s = 0 map to z = 1; n zeros at infinity map to z = -1
    let denom_prod = analog
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, p| acc * (fs2 - p));
    let gain = proto_gain * bw.powi(n as i32) * (Complex64::new(fs2.powi(n as i32), 0.0) / denom_prod).re;
    let poles: Vec<Complex64> = analog.iter().map(|p| (fs2 + p) / (fs2 - p)).collect();

    let radius = poles.iter().map(|p| p.norm()).fold(0.0, f64::max);
    if radius.is_nan() || radius >= 1.0 || !gain.is_finite() {
        return Err(Error::Design(format!(
            "unstable design: pole radius {radius} for {spec:?}"
        )));
    }

    let dens = pair_poles(&poles)?;
    let per_section = gain.abs().powf(1.0 / dens.len() as f64);
    let sections: Vec<Biquad> = dens
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let g = if i == 0 { per_section * gain.signum() } else { per_section };
            Biquad {
                b: [g, 0.0, -g],
                a: *a,
            }
        })
        .collect();

    let numerator = expand(&sections.iter().map(|s| s.b).collect::<Vec<_>>());
    let denominator = expand(&dens);

    Ok(FilterCoefficients {
        numerator,
        denominator,
        sections,
        poles,
    })
}

fn sos_filter(sections: &[Biquad], states: &mut [[f64; 2]], x: &mut [f64]) {
    for (s, z) in sections.iter().zip(states.iter_mut()) {
        let [b0, b1, b2] = s.b;
        let [_, a1, a2] = s.a;
        for v in x.iter_mut() {
            let input = *v;
            let y = b0 * input + z[0];
            z[0] = b1 * input - a1 * y + z[1];
            z[1] = b2 * input - a2 * y;
            *v = y;
        }
    }
}

/// Steady-state initial conditions of the cascade for a unit step.
fn cascade_step_states(sections: &[Biquad]) -> Vec<[f64; 2]> {
    let mut scale = 1.0;
    sections
        .iter()
        .map(|s| {
            let [z1, z2] = s.step_state();
            let out = [z1 * scale, z2 * scale];
            scale *= s.dc_gain();
            out
        })
        .collect()
}

/// Forward-backward filtering of one channel with odd-reflection padding.
fn filtfilt_channel(coeffs: &FilterCoefficients, zi: &[[f64; 2]], x: &[f64], pad: usize) -> Vec<f64> {
    let n = x.len();
    let mut ext = Vec::with_capacity(n + 2 * pad);
    ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
    ext.extend_from_slice(x);
    ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

    let mut states: Vec<[f64; 2]> = zi.iter().map(|z| [z[0] * ext[0], z[1] * ext[0]]).collect();
    sos_filter(&coeffs.sections, &mut states, &mut ext);
    ext.reverse();
    let mut states: Vec<[f64; 2]> = zi.iter().map(|z| [z[0] * ext[0], z[1] * ext[0]]).collect();
    sos_filter(&coeffs.sections, &mut states, &mut ext);
    ext.reverse();
    ext[pad..pad + n].to_vec()
}

/// Applies `coeffs` forward then backward along every channel, giving zero
/// net phase. Edges are padded by odd reflection over `3 * coeffs.len()`
/// samples and the filter state starts at its step steady state.
pub fn filter_zero_phase(epoch: &EegEpoch, coeffs: &FilterCoefficients) -> Result<EegEpoch> {
    let pad = 3 * coeffs.len();
    let ns = epoch.n_samples();
    if ns <= pad {
        return Err(Error::arg(format!(
            "epoch of {ns} samples is too short for zero-phase filtering (needs > {pad})"
        )));
    }
    let zi = cascade_step_states(&coeffs.sections);
    let mut out = epoch.data().clone();
    for c in 0..epoch.n_channels() {
        let row = epoch.channel(c);
        let filtered = filtfilt_channel(coeffs, &zi, &row, pad);
        for (s, v) in filtered.into_iter().enumerate() {
            out[(c, s)] = v;
        }
    }
    EegEpoch::new(out, epoch.sample_rate_hz())
}

/// Subbands `Z_1 .. Z_Sn` of one epoch, band `m` starting at `m * f0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubbandSet {
    pub bands: Vec<EegEpoch>,
    pub specs: Vec<BandpassSpec>,
}

impl SubbandSet {
    pub fn len(&self) -> usize {
        self.bands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bands.is_empty()
    }
}

/// A designed set of harmonic bandpass filters sharing one upper edge.
#[derive(Debug, Clone)]
pub struct FilterBank {
    specs: Vec<BandpassSpec>,
    filters: Vec<FilterCoefficients>,
}

impl FilterBank {
    pub fn design(
        f0_hz: f64,
        sn: usize,
        ripple_db: f64,
        order: usize,
        high_hz: f64,
        sample_rate_hz: f64,
    ) -> Result<Self> {
        if sn == 0 {
            return Err(Error::arg("filterbank needs at least one subband"));
        }
        if f0_hz.is_nan() || f0_hz <= 0.0 {
            return Err(Error::arg(format!("base frequency must be positive, got {f0_hz}")));
        }
        if sn as f64 * f0_hz >= high_hz {
            return Err(Error::arg(format!(
                "highest lower edge {} Hz must stay below the upper edge {high_hz} Hz",
                sn as f64 * f0_hz
            )));
        }
        let specs: Vec<BandpassSpec> = (1..=sn)
            .map(|m| BandpassSpec {
                order,
                ripple_db,
                low_hz: m as f64 * f0_hz,
                high_hz,
                sample_rate_hz,
            })
            .collect();
        let filters = specs.iter().map(design_chebyshev1).collect::<Result<Vec<_>>>()?;
        Ok(Self { specs, filters })
    }

    /// Bank with default order, ripple and upper edge.
    pub fn with_defaults(f0_hz: f64, sn: usize, sample_rate_hz: f64) -> Result<Self> {
        Self::design(
            f0_hz,
            sn,
            DEFAULT_RIPPLE_DB,
            DEFAULT_ORDER,
            DEFAULT_HIGH_HZ,
            sample_rate_hz,
        )
    }

    pub fn specs(&self) -> &[BandpassSpec] {
        &self.specs
    }

    pub fn filters(&self) -> &[FilterCoefficients] {
        &self.filters
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.specs[0].sample_rate_hz
    }

    pub fn apply(&self, epoch: &EegEpoch) -> Result<SubbandSet> {
        if (epoch.sample_rate_hz() - self.sample_rate_hz()).abs() > 1e-9 {
            return Err(Error::arg(format!(
                "epoch sampled at {} Hz, filterbank designed for {} Hz",
                epoch.sample_rate_hz(),
                self.sample_rate_hz()
            )));
        }
        let bands = self
            .filters
            .iter()
            .map(|f| filter_zero_phase(epoch, f))
            .collect::<Result<Vec<_>>>()?;
        Ok(SubbandSet {
            bands,
            specs: self.specs.clone(),
        })
    }
}

/// Splits `epoch` into `sn` subbands with lower edges `m * f0_hz`.
pub fn decompose(
    epoch: &EegEpoch,
    f0_hz: f64,
    sn: usize,
    ripple_db: f64,
    order: usize,
    high_hz: f64,
) -> Result<SubbandSet> {
    FilterBank::design(f0_hz, sn, ripple_db, order, high_hz, epoch.sample_rate_hz())?.apply(epoch)
}
