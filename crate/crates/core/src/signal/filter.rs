//! IIR filter design (Butterworth band-pass, biquad notch) and application.
//!
//! The band-pass is designed in the analog domain: a 2nd-order Butterworth
//! lowpass prototype is mapped to a band-pass (doubling the order to 4) and
//! discretized with the bilinear transform, with cutoffs prewarped so the
//! band edges land exactly. The notch is the standard constrained biquad
//! with unit gain at DC and Nyquist and a zero pair on the unit circle.

use ndarray::Array2;
use num_complex::Complex64;

use super::EegRecording;
use crate::error::{Error, Result};

/// What a filter was designed to do; kept for reporting and checkpoints.
#[derive(Debug, Clone, PartialEq)]
pub enum FilterKind {
    Bandpass { low_hz: f64, high_hz: f64 },
    Notch { center_hz: f64, quality: f64 },
    Raw,
}

/// A digital IIR filter in transfer-function form.
///
/// `b` are numerator and `a` denominator coefficients with `a[0] == 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct IirFilter {
    pub b: Vec<f64>,
    pub a: Vec<f64>,
    pub kind: FilterKind,
    pub order: usize,
    pub sample_rate_hz: f64,
}

impl IirFilter {
    /// Identity filter (b = [1], a = [1]).
    pub fn identity(sample_rate_hz: f64) -> Self {
        IirFilter {
            b: vec![1.0],
            a: vec![1.0],
            kind: FilterKind::Raw,
            order: 0,
            sample_rate_hz,
        }
    }

    /// Complex frequency response H(e^{j 2 pi f / fs}).
    pub fn response_at(&self, freq_hz: f64) -> Complex64 {
        let omega = 2.0 * std::f64::consts::PI * freq_hz / self.sample_rate_hz;
        let z_inv = Complex64::from_polar(1.0, -omega);
        let eval = |coeffs: &[f64]| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &c in coeffs.iter().rev() {
                acc = acc * z_inv + c;
            }
            acc
        };
        eval(&self.b) / eval(&self.a)
    }

    /// Largest pole magnitude; stable filters stay strictly below 1.
    pub fn max_pole_magnitude(&self) -> Result<f64> {
        // Roots of a(z^-1) in z: reverse the coefficient order.
        let rev: Vec<f64> = self.a.iter().rev().copied().collect();
        let roots = crate::linalg::poly_roots(&rev)?;
        Ok(roots.iter().map(|r| r.norm()).fold(0.0, f64::max))
    }
}

/// Multiplies a real polynomial (in z^-1) by the factor (1 - r z^-1) for a
/// complex root r, keeping complex coefficients until the caller collapses
/// conjugate pairs.
fn poly_from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
        for (i, &c) in coeffs.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * r;
        }
        coeffs = next;
    }
    coeffs.iter().map(|c| c.re).collect()
}

/// 4th-order Butterworth band-pass (2nd-order analog prototype mapped
/// lowpass -> bandpass, then bilinear transform).
pub fn design_bandpass(low_hz: f64, high_hz: f64, sample_rate_hz: f64) -> Result<IirFilter> {
    let nyquist = sample_rate_hz / 2.0;
    if !(low_hz > 0.0 && low_hz < high_hz && high_hz < nyquist) {
        return Err(Error::parameter(format!(
            "band-pass cutoffs must satisfy 0 < {low_hz} < {high_hz} < {nyquist} (Nyquist)"
        )));
    }

    let fs2 = 2.0 * sample_rate_hz;
    let warp = |f: f64| fs2 * (std::f64::consts::PI * f / sample_rate_hz).tan();
    let w1 = warp(low_hz);
    let w2 = warp(high_hz);
    let w0 = (w1 * w2).sqrt();
    let bw = w2 - w1;

    // N = 2 Butterworth lowpass prototype poles on the unit circle.
    let proto = [
        Complex64::from_polar(1.0, 3.0 * std::f64::consts::PI / 4.0),
        Complex64::from_polar(1.0, 5.0 * std::f64::consts::PI / 4.0),
    ];

    // Lowpass -> bandpass: each prototype pole becomes a conjugate pair.
    let mut analog_poles = Vec::with_capacity(4);
    for &p in &proto {
        let bp = p * (bw * 0.5);
        let disc = (bp * bp - Complex64::new(w0 * w0, 0.0)).sqrt();
        analog_poles.push(bp + disc);
        analog_poles.push(bp - disc);
    }
    // Two analog zeros at s = 0 and gain bw^N from the transform.
    let analog_zeros = [Complex64::new(0.0, 0.0); 2];
    let analog_gain = bw * bw;

    // Bilinear transform of poles/zeros; the two zeros at infinity map to
    // z = -1.
    let bilinear = |s: Complex64| (Complex64::new(fs2, 0.0) + s) / (Complex64::new(fs2, 0.0) - s);
    let digital_poles: Vec<Complex64> = analog_poles.iter().map(|&s| bilinear(s)).collect();
    let mut digital_zeros: Vec<Complex64> = analog_zeros.iter().map(|&s| bilinear(s)).collect();
    digital_zeros.push(Complex64::new(-1.0, 0.0));
    digital_zeros.push(Complex64::new(-1.0, 0.0));

    let num: Complex64 = analog_zeros
        .iter()
        .map(|&z| Complex64::new(fs2, 0.0) - z)
        .product();
    let den: Complex64 = analog_poles
        .iter()
        .map(|&p| Complex64::new(fs2, 0.0) - p)
        .product();
    let digital_gain = analog_gain * (num / den).re;

    let mut b = poly_from_roots(&digital_zeros);
    for v in &mut b {
        *v *= digital_gain;
    }
    let a = poly_from_roots(&digital_poles);

    let filter = IirFilter {
        b,
        a,
        kind: FilterKind::Bandpass { low_hz, high_hz },
        order: 4,
        sample_rate_hz,
    };
    debug_assert!(filter.max_pole_magnitude().map(|m| m < 1.0).unwrap_or(false));
    Ok(filter)
}

/// 2nd-order notch at `center_hz` with quality factor `quality`
/// (bandwidth = center / quality).
pub fn design_notch(center_hz: f64, quality: f64, sample_rate_hz: f64) -> Result<IirFilter> {
    let nyquist = sample_rate_hz / 2.0;
    if !(center_hz > 0.0 && center_hz < nyquist) {
        return Err(Error::parameter(format!(
            "notch center {center_hz} Hz must lie in (0, {nyquist})"
        )));
    }
    if !(quality > 0.0) {
        return Err(Error::parameter("notch quality factor must be positive"));
    }

    let omega = 2.0 * std::f64::consts::PI * center_hz / sample_rate_hz;
    let alpha = omega.sin() / (2.0 * quality);
    let cos_w = omega.cos();

    let a0 = 1.0 + alpha;
    let b = vec![1.0 / a0, -2.0 * cos_w / a0, 1.0 / a0];
    let a = vec![1.0, -2.0 * cos_w / a0, (1.0 - alpha) / a0];

    Ok(IirFilter {
        b,
        a,
        kind: FilterKind::Notch { center_hz, quality },
        order: 2,
        sample_rate_hz,
    })
}

/// Runs the filter over every channel (direct form II transposed, zero
/// initial state). Length and metadata are preserved.
pub fn apply_filter(filter: &IirFilter, recording: &EegRecording) -> Result<EegRecording> {
    recording.validate()?;
    let n = filter.b.len().max(filter.a.len());
    let mut b = filter.b.clone();
    let mut a = filter.a.clone();
    b.resize(n, 0.0);
    a.resize(n, 0.0);
    if a[0] != 1.0 {
        if a[0] == 0.0 {
            return Err(Error::parameter("filter denominator has a[0] == 0"));
        }
        let a0 = a[0];
        for v in &mut b {
            *v /= a0;
        }
        for v in &mut a {
            *v /= a0;
        }
    }

    let mut out = Array2::zeros(recording.data.dim());
    for (ch, row) in recording.data.outer_iter().enumerate() {
        let mut state = vec![0.0f64; n.saturating_sub(1)];
        for (t, &x) in row.iter().enumerate() {
            let y = b[0] * x + state.first().copied().unwrap_or(0.0);
            for i in 0..state.len() {
                let next = state.get(i + 1).copied().unwrap_or(0.0);
                state[i] = b[i + 1] * x - a[i + 1] * y + next;
            }
            out[[ch, t]] = y;
        }
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric(format!(
            "filter produced non-finite output on recording {}",
            recording.id
        )));
    }
    Ok(recording.with_data(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn sine_recording(freq_hz: f64, fs: f64, seconds: f64) -> EegRecording {
        let n = (fs * seconds) as usize;
        let mut data = Array2::zeros((1, n));
        for t in 0..n {
            data[[0, t]] = (2.0 * std::f64::consts::PI * freq_hz * t as f64 / fs).sin();
        }
        EegRecording {
            channels: vec!["c1".into()],
            data,
            sample_rate_hz: fs,
            id: "sine".into(),
            transcript: String::new(),
            subject: "s".into(),
            dataset_tag: "t".into(),
        }
    }

    fn steady_amplitude(rec: &EegRecording) -> f64 {
        // peak over the final second
        let n = rec.n_samples();
        let tail = (rec.sample_rate_hz as usize).min(n);
        rec.data
            .row(0)
            .iter()
            .skip(n - tail)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Independent |H| evaluation straight from the difference-equation
    /// coefficients.
    fn gain_from_coeffs(f: &IirFilter, freq_hz: f64) -> f64 {
        let omega = 2.0 * std::f64::consts::PI * freq_hz / f.sample_rate_hz;
        let horner = |c: &[f64]| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (k, &v) in c.iter().enumerate() {
                re += v * (omega * k as f64).cos();
                im -= v * (omega * k as f64).sin();
            }
            (re, im)
        };
        let (nr, ni) = horner(&f.b);
        let (dr, di) = horner(&f.a);
        ((nr * nr + ni * ni) / (dr * dr + di * di)).sqrt()
    }

    #[test]
    fn bandpass_rejects_bad_cutoffs() {
        assert!(design_bandpass(70.0, 0.1, 1000.0).is_err());
        assert!(design_bandpass(0.1, 600.0, 1000.0).is_err());
        assert!(design_bandpass(0.0, 70.0, 1000.0).is_err());
    }

    #[test]
    fn bandpass_kills_dc() {
        let f = design_bandpass(0.1, 70.0, 1000.0).unwrap();
        let mut rec = sine_recording(1.0, 1000.0, 20.0);
        rec.data.fill(5.0);
        let out = apply_filter(&f, &rec).unwrap();
        let last = out.data[[0, out.n_samples() - 1]].abs();
        assert!(last < 1e-3, "DC residue {last}");
    }

    #[test]
    fn bandpass_passes_10hz_within_1db() {
        let f = design_bandpass(0.1, 70.0, 1000.0).unwrap();
        // frequency-response oracle from coefficients
        let g = gain_from_coeffs(&f, 10.0);
        assert!((0.891..=1.0001).contains(&g), "|H(10Hz)| = {g}");
        // and through actual simulation
        let rec = sine_recording(10.0, 1000.0, 30.0);
        let out = apply_filter(&f, &rec).unwrap();
        let amp = steady_amplitude(&out);
        assert!((0.89..=1.0).contains(&amp), "steady amplitude {amp}");
    }

    #[test]
    fn bandpass_attenuates_200hz() {
        let f = design_bandpass(0.1, 70.0, 1000.0).unwrap();
        let g = gain_from_coeffs(&f, 200.0);
        assert!(g <= 0.35, "|H(200Hz)| = {g}");
        let rec = sine_recording(200.0, 1000.0, 10.0);
        let out = apply_filter(&f, &rec).unwrap();
        assert!(steady_amplitude(&out) <= 0.35);
    }

    #[test]
    fn bandpass_unit_gain_at_geometric_mean() {
        let f = design_bandpass(0.1, 70.0, 1000.0).unwrap();
        let center = (0.1f64 * 70.0).sqrt();
        let g = gain_from_coeffs(&f, center);
        let db = 20.0 * g.log10();
        assert!(db.abs() < 1.0, "passband gain {db} dB at {center} Hz");
    }

    #[test]
    fn notch_rejects_nyquist_violation() {
        assert!(design_notch(600.0, 30.0, 1000.0).is_err());
        assert!(design_notch(60.0, 0.0, 1000.0).is_err());
    }

    #[test]
    fn notch_kills_60hz() {
        let f = design_notch(60.0, 30.0, 1000.0).unwrap();
        let rec = sine_recording(60.0, 1000.0, 5.0);
        let out = apply_filter(&f, &rec).unwrap();
        let amp = steady_amplitude(&out);
        assert!(amp <= 0.01, "60 Hz residue {amp}");
    }

    #[test]
    fn notch_passes_10hz() {
        let f = design_notch(60.0, 30.0, 1000.0).unwrap();
        let g = gain_from_coeffs(&f, 10.0);
        assert!(g >= 0.95, "|H(10Hz)| = {g}");
        let rec = sine_recording(10.0, 1000.0, 5.0);
        let out = apply_filter(&f, &rec).unwrap();
        assert!(steady_amplitude(&out) >= 0.95);
    }

    #[test]
    fn notch_preserves_dc() {
        let f = design_notch(60.0, 30.0, 1000.0).unwrap();
        let mut rec = sine_recording(1.0, 1000.0, 2.0);
        rec.data.fill(1.0);
        let out = apply_filter(&f, &rec).unwrap();
        let v = out.data[[0, out.n_samples() - 1]];
        assert!((0.99..=1.01).contains(&v), "DC gain {v}");
    }

    #[test]
    fn notch_sidelobes_stay_up() {
        let f = design_notch(60.0, 30.0, 1000.0).unwrap();
        assert!(gain_from_coeffs(&f, 30.0) >= 0.9);
        assert!(gain_from_coeffs(&f, 90.0) >= 0.9);
    }

    #[test]
    fn designed_filters_are_stable() {
        for f in [
            design_bandpass(0.1, 70.0, 1000.0).unwrap(),
            design_notch(60.0, 30.0, 1000.0).unwrap(),
            design_bandpass(1.0, 40.0, 250.0).unwrap(),
        ] {
            let m = f.max_pole_magnitude().unwrap();
            assert!(m < 1.0, "{:?} pole magnitude {m}", f.kind);
        }
    }

    #[test]
    fn identity_filter_is_exact() {
        let rec = sine_recording(7.0, 1000.0, 1.0);
        let out = apply_filter(&IirFilter::identity(1000.0), &rec).unwrap();
        assert_eq!(out.data, rec.data);
    }

    #[test]
    fn pure_gain_filter() {
        let mut rec = sine_recording(7.0, 1000.0, 1.0);
        rec.data.fill(2.0);
        let half = IirFilter {
            b: vec![0.5],
            a: vec![1.0],
            kind: FilterKind::Raw,
            order: 0,
            sample_rate_hz: 1000.0,
        };
        let out = apply_filter(&half, &rec).unwrap();
        assert!(out.data.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn bandpass_prefers_10hz_over_60hz() {
        // mixture in, FFT peak comparison out
        let fs = 1000.0;
        let n = 4096usize;
        let mut data = Array2::zeros((1, n));
        for t in 0..n {
            let ts = t as f64 / fs;
            data[[0, t]] = (2.0 * std::f64::consts::PI * 10.0 * ts).sin()
                + (2.0 * std::f64::consts::PI * 60.0 * ts).sin();
        }
        let rec = EegRecording {
            channels: vec!["c1".into()],
            data,
            sample_rate_hz: fs,
            id: "mix".into(),
            transcript: String::new(),
            subject: "s".into(),
            dataset_tag: "t".into(),
        };
        // narrow band around 10 Hz so the mixture separates cleanly
        let f = design_bandpass(5.0, 20.0, fs).unwrap();
        let out = apply_filter(&f, &rec).unwrap();
        let power_at = |freq: f64| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (t, &v) in out.data.row(0).iter().enumerate().skip(n / 2) {
                let ang = 2.0 * std::f64::consts::PI * freq * t as f64 / fs;
                re += v * ang.cos();
                im += v * ang.sin();
            }
            re * re + im * im
        };
        assert!(power_at(10.0) > 10.0 * power_at(60.0));
    }

    #[test]
    fn filter_linearity() {
        let f = design_bandpass(0.1, 70.0, 1000.0).unwrap();
        let x = sine_recording(9.0, 1000.0, 1.0);
        let y = sine_recording(23.0, 1000.0, 1.0);
        let combo = x.with_data(&x.data * 2.0 + &y.data * (-0.7));
        let fx = apply_filter(&f, &x).unwrap();
        let fy = apply_filter(&f, &y).unwrap();
        let fc = apply_filter(&f, &combo).unwrap();
        let expect = &fx.data * 2.0 + &fy.data * (-0.7);
        let err = (&fc.data - &expect)
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-9, "linearity violation {err}");
    }
}
