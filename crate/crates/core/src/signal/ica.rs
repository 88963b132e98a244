//! FastICA blind source separation and kurtosis-based artifact rejection.
//!
//! Symmetric FastICA with the tanh nonlinearity on whitened data. Spiky
//! artifact components (EMG/EOG-like bursts) stand out through their excess
//! kurtosis, so rejection zeroes every component whose |excess kurtosis|
//! exceeds a threshold and reconstructs the signal from the rest.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::EegRecording;
use crate::error::{Error, Result};
use crate::linalg::sym_eig;

const MAX_ITERATIONS: usize = 500;
const TOLERANCE: f64 = 1e-6;

/// A fitted ICA decomposition.
///
/// `unmixing` maps channel space to component space (components x channels),
/// `mixing` maps back; `unmixing . mixing` is the identity on the retained
/// subspace. `kurtosis` holds per-component excess kurtosis of the fitted
/// sources; `rejected` records the component indices zeroed by the most
/// recent [`reject_artifacts`] call.
#[derive(Debug, Clone)]
pub struct IcaModel {
    pub unmixing: Array2<f64>,
    pub mixing: Array2<f64>,
    pub channel_means: Array1<f64>,
    pub kurtosis: Vec<f64>,
    pub rejected: Vec<usize>,
    pub iterations: usize,
}

impl IcaModel {
    pub fn n_components(&self) -> usize {
        self.unmixing.nrows()
    }

    pub fn n_channels(&self) -> usize {
        self.unmixing.ncols()
    }

    /// Components whose |excess kurtosis| exceeds the threshold.
    pub fn components_over_threshold(&self, kurtosis_threshold: f64) -> Vec<usize> {
        self.kurtosis
            .iter()
            .enumerate()
            .filter(|(_, &k)| k.abs() > kurtosis_threshold)
            .map(|(i, _)| i)
            .collect()
    }
}

fn excess_kurtosis(row: ndarray::ArrayView1<'_, f64>) -> f64 {
    let n = row.len() as f64;
    let mean = row.sum() / n;
    let mut m2 = 0.0;
    let mut m4 = 0.0;
    for &v in row {
        let d = v - mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m4 /= n;
    if m2 < 1e-12 {
        return 0.0;
    }
    m4 / (m2 * m2) - 3.0
}

/// Orthonormalizes W symmetrically: W <- (W W^T)^{-1/2} W.
fn symmetric_decorrelation(w: &Array2<f64>) -> Result<Array2<f64>> {
    let wwt = w.dot(&w.t());
    let eig = sym_eig(&wwt)?;
    let k = w.nrows();
    let mut inv_sqrt = Array2::zeros((k, k));
    for (i, &lam) in eig.values.iter().enumerate() {
        if lam <= 1e-12 {
            return Err(Error::numeric(
                "degenerate unmixing matrix during decorrelation",
            ));
        }
        inv_sqrt[[i, i]] = 1.0 / lam.sqrt();
    }
    Ok(eig.vectors.dot(&inv_sqrt).dot(&eig.vectors.t()).dot(w))
}

/// FastICA on a recording: whitening from the channel covariance, then
/// symmetric fixed-point iteration with g = tanh until the unmixing matrix
/// stops rotating (tolerance 1e-6, at most 500 iterations).
///
/// Deterministic for a given seed.
pub fn fit_ica(recording: &EegRecording, n_components: usize, seed: u64) -> Result<IcaModel> {
    recording.validate()?;
    let n_ch = recording.n_channels();
    let n_samp = recording.n_samples();
    if n_components == 0 || n_components > n_ch {
        return Err(Error::parameter(format!(
            "n_components = {n_components} must be in 1..={n_ch}"
        )));
    }
    if n_samp < 10 * n_ch {
        return Err(Error::parameter(format!(
            "need at least {} samples for {} channels, got {}",
            10 * n_ch,
            n_ch,
            n_samp
        )));
    }

    // Center.
    let means = recording.data.mean_axis(Axis(1)).unwrap();
    let mut centered = recording.data.clone();
    for (mut row, &m) in centered.outer_iter_mut().zip(means.iter()) {
        row.mapv_inplace(|v| v - m);
    }

    // Whiten via the covariance eigendecomposition.
    let cov = centered.dot(&centered.t()) / n_samp as f64;
    let eig = sym_eig(&cov)?;
    let positive = eig
        .values
        .iter()
        .filter(|&&l| l > 1e-12 * eig.values[0].max(1e-300))
        .count();
    if positive < n_components {
        return Err(Error::Rank {
            requested: n_components,
            achievable: positive,
        });
    }
    let mut whiten = Array2::zeros((n_components, n_ch));
    let mut dewhiten = Array2::zeros((n_ch, n_components));
    for c in 0..n_components {
        let lam = eig.values[c];
        let scale = lam.sqrt();
        for r in 0..n_ch {
            whiten[[c, r]] = eig.vectors[[r, c]] / scale;
            dewhiten[[r, c]] = eig.vectors[[r, c]] * scale;
        }
    }
    let z = whiten.dot(&centered); // components x samples, unit covariance

    // Seeded start, orthonormalized.
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut w = Array2::from_shape_fn((n_components, n_components), |_| {
        rng.gen_range(-1.0..1.0)
    });
    w = symmetric_decorrelation(&w)?;

    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let y = w.dot(&z);
        let g = y.mapv(f64::tanh);
        // E[g(y) z^T] - diag(E[g'(y)]) W
        let mut w_new = g.dot(&z.t()) / n_samp as f64;
        for (i, mut row) in w_new.outer_iter_mut().enumerate() {
            let g_prime_mean =
                g.row(i).iter().map(|&t| 1.0 - t * t).sum::<f64>() / n_samp as f64;
            let old = w.row(i);
            for (v, &o) in row.iter_mut().zip(old.iter()) {
                *v -= g_prime_mean * o;
            }
        }
        let w_next = symmetric_decorrelation(&w_new)?;

        // Rotation between successive estimates: diag of W_new W^T near +-1.
        let overlap = w_next.dot(&w.t());
        let drift = (0..n_components)
            .map(|i| (1.0 - overlap[[i, i]].abs()).abs())
            .fold(0.0, f64::max);
        w = w_next;
        if drift < TOLERANCE {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Convergence {
            iterations,
            message: "FastICA fixed-point iteration did not settle".into(),
        });
    }

    let unmixing = w.dot(&whiten);
    let mixing = dewhiten.dot(&w.t());
    let sources = unmixing.dot(&centered);
    let kurtosis: Vec<f64> = sources
        .outer_iter()
        .map(|row| excess_kurtosis(row))
        .collect();

    Ok(IcaModel {
        unmixing,
        mixing,
        channel_means: means,
        kurtosis,
        rejected: Vec::new(),
        iterations,
    })
}

/// Zeroes components with |excess kurtosis| above the threshold and
/// reconstructs the recording from the rest. The set of zeroed indices is
/// recorded on the model.
pub fn reject_artifacts(
    model: &mut IcaModel,
    recording: &EegRecording,
    kurtosis_threshold: f64,
) -> Result<EegRecording> {
    recording.validate()?;
    if recording.n_channels() != model.n_channels() {
        return Err(Error::parameter(format!(
            "model fitted on {} channels, recording has {}",
            model.n_channels(),
            recording.n_channels()
        )));
    }
    let rejected = model.components_over_threshold(kurtosis_threshold);
    if rejected.len() == model.n_components() {
        return Err(Error::Degenerate(format!(
            "all {} components exceed kurtosis threshold {}",
            model.n_components(),
            kurtosis_threshold
        )));
    }

    let mut centered = recording.data.clone();
    for (mut row, &m) in centered.outer_iter_mut().zip(model.channel_means.iter()) {
        row.mapv_inplace(|v| v - m);
    }
    let mut sources = model.unmixing.dot(&centered);
    for &idx in &rejected {
        sources.row_mut(idx).fill(0.0);
    }
    let mut rebuilt = model.mixing.dot(&sources);
    for (mut row, &m) in rebuilt.outer_iter_mut().zip(model.channel_means.iter()) {
        row.mapv_inplace(|v| v + m);
    }
    model.rejected = rejected;
    Ok(recording.with_data(rebuilt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn make_recording(data: Array2<f64>, fs: f64) -> EegRecording {
        EegRecording {
            channels: (0..data.nrows()).map(|i| format!("ch{i}")).collect(),
            data,
            sample_rate_hz: fs,
            id: "ica-test".into(),
            transcript: String::new(),
            subject: "s".into(),
            dataset_tag: "t".into(),
        }
    }

    fn correlation(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let mut num = 0.0;
        let mut da = 0.0;
        let mut db = 0.0;
        for (&x, &y) in a.iter().zip(b) {
            num += (x - ma) * (y - mb);
            da += (x - ma) * (x - ma);
            db += (y - mb) * (y - mb);
        }
        num / (da.sqrt() * db.sqrt())
    }

    #[test]
    fn recovers_mixed_sources() {
        // 7 Hz sine + uniform noise, mixed into 2 channels.
        let fs = 1000.0;
        let n = 4000;
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let s1: Vec<f64> = (0..n)
            .map(|t| (2.0 * std::f64::consts::PI * 7.0 * t as f64 / fs).sin())
            .collect();
        let s2: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mix = [[0.8, 0.3], [0.4, 0.9]];
        let mut data = Array2::zeros((2, n));
        for t in 0..n {
            data[[0, t]] = mix[0][0] * s1[t] + mix[0][1] * s2[t];
            data[[1, t]] = mix[1][0] * s1[t] + mix[1][1] * s2[t];
        }
        let rec = make_recording(data, fs);
        let model = fit_ica(&rec, 2, 42).unwrap();

        let mut centered = rec.data.clone();
        for (mut row, &m) in centered.outer_iter_mut().zip(model.channel_means.iter()) {
            row.mapv_inplace(|v| v - m);
        }
        let recovered = model.unmixing.dot(&centered);
        let r0: Vec<f64> = recovered.row(0).to_vec();
        let r1: Vec<f64> = recovered.row(1).to_vec();
        // best assignment over the two pairings
        let direct = correlation(&r0, &s1).abs().min(correlation(&r1, &s2).abs());
        let swapped = correlation(&r1, &s1).abs().min(correlation(&r0, &s2).abs());
        let score = direct.max(swapped);
        assert!(score >= 0.95, "source correlation {score}");
    }

    #[test]
    fn white_input_round_trips() {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let data = Array2::from_shape_fn((3, 600), |_| rng.gen_range(-1.0..1.0));
        let rec = make_recording(data, 100.0);
        let model = fit_ica(&rec, 3, 9).unwrap();
        let eye = model.unmixing.dot(&model.mixing);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((eye[[i, j]] - want).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn too_many_components_is_an_error() {
        let data = Array2::zeros((2, 100));
        let rec = make_recording(data, 100.0);
        assert!(matches!(fit_ica(&rec, 3, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn infinite_threshold_round_trips() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let data = Array2::from_shape_fn((3, 900), |_| rng.gen_range(-1.0..1.0));
        let rec = make_recording(data, 100.0);
        let mut model = fit_ica(&rec, 3, 1).unwrap();
        let out = reject_artifacts(&mut model, &rec, f64::INFINITY).unwrap();
        assert!(model.rejected.is_empty());
        let err = (&out.data - &rec.data)
            .iter()
            .map(|v| v.abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "round-trip error {err}");
    }

    #[test]
    fn zero_threshold_rejects_everything() {
        let mut rng = ChaCha20Rng::seed_from_u64(6);
        let data = Array2::from_shape_fn((2, 500), |_| rng.gen_range(-1.0..1.0));
        let rec = make_recording(data, 100.0);
        let mut model = fit_ica(&rec, 2, 2).unwrap();
        assert!(matches!(
            reject_artifacts(&mut model, &rec, 0.0),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn spiky_component_is_removed() {
        // One smooth source, one sparse spike train; spikes land mostly on
        // channel 0 through the mixing weights.
        let fs = 1000.0;
        let n = 5000;
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        let smooth: Vec<f64> = (0..n)
            .map(|t| (2.0 * std::f64::consts::PI * 6.0 * t as f64 / fs).sin())
            .collect();
        let mut spikes = vec![0.0f64; n];
        for _ in 0..25 {
            let at = rng.gen_range(0..n);
            spikes[at] = rng.gen_range(8.0..12.0);
        }
        let mut data = Array2::zeros((2, n));
        for t in 0..n {
            data[[0, t]] = 0.9 * spikes[t] + 0.2 * smooth[t];
            data[[1, t]] = 0.1 * spikes[t] + 1.0 * smooth[t];
        }
        let rec = make_recording(data, fs);
        let mut model = fit_ica(&rec, 2, 7).unwrap();
        let cleaned = reject_artifacts(&mut model, &rec, 5.0).unwrap();
        assert_eq!(model.rejected.len(), 1, "kurtosis = {:?}", model.kurtosis);

        let var = |row: ndarray::ArrayView1<f64>| {
            let m = row.sum() / row.len() as f64;
            row.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / row.len() as f64
        };
        let before = var(rec.data.row(0));
        let after = var(cleaned.data.row(0));
        assert!(
            after <= 0.5 * before,
            "variance only dropped {before} -> {after}"
        );
    }

    #[test]
    fn deterministic_given_seed() {
        let mut rng = ChaCha20Rng::seed_from_u64(8);
        let data = Array2::from_shape_fn((3, 700), |_| rng.gen_range(-1.0..1.0));
        let rec = make_recording(data, 100.0);
        let a = fit_ica(&rec, 3, 77).unwrap();
        let b = fit_ica(&rec, 3, 77).unwrap();
        assert_eq!(a.unmixing, b.unmixing);
        assert_eq!(a.mixing, b.mixing);
        assert_eq!(a.kurtosis, b.kurtosis);
    }
}
