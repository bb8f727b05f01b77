//! Random channel, symbol, and noise generation with deterministic seeding.
//!
//! Everything here is a pure function of its parameters and the supplied RNG,
//! so a fixed seed reproduces realizations bit-for-bit. Constellations carry
//! Gray bit labels and unit average symbol energy.

use ndarray::{Array1, Array2, Array3};
use num_complex::Complex;
use rand::Rng;
use thiserror::Error;

use crate::lifting::stack_complex_mult;
use crate::linalg::{sym_sqrt, LinalgError};
use crate::real::Real;

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("invalid correlation spec: {0}")]
    BadSpec(String),
    #[error("covariance for user {user} rejected: {source}")]
    BadCovariance { user: usize, source: LinalgError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstellationKind {
    Qpsk,
    Qam16,
}

/// A finite symbol alphabet with unit average energy and Gray bit labels.
#[derive(Debug, Clone)]
pub struct Constellation<S> {
    kind: ConstellationKind,
    points: Vec<Complex<S>>,
    bit_labels: Vec<u32>,
    bits_per_symbol: u32,
}

/// Per-axis Gray code for 4 amplitude levels: 00, 01, 11, 10 -> -3, -1, +1, +3.
const GRAY4_LEVELS: [(u32, f64); 4] = [(0b00, -3.0), (0b01, -1.0), (0b11, 1.0), (0b10, 3.0)];

impl<S: Real> Constellation<S> {
    pub fn new(kind: ConstellationKind) -> Self {
        match kind {
            ConstellationKind::Qpsk => {
                let a = S::of(1.0 / std::f64::consts::SQRT_2);
                let mut points = Vec::new();
                let mut bit_labels = Vec::new();
                // one Gray bit per axis: 0 -> +1, 1 -> -1
                for (bi, re) in [(0u32, a), (1, -a)] {
                    for (bq, im) in [(0u32, a), (1, -a)] {
                        points.push(Complex::new(re, im));
                        bit_labels.push((bi << 1) | bq);
                    }
                }
                Self {
                    kind,
                    points,
                    bit_labels,
                    bits_per_symbol: 2,
                }
            }
            ConstellationKind::Qam16 => {
                // E[|x|^2] = 1 forces the 1/sqrt(10) scaling
                let scale = S::of(1.0 / 10.0f64.sqrt());
                let mut points = Vec::new();
                let mut bit_labels = Vec::new();
                for (bi, re) in GRAY4_LEVELS {
                    for (bq, im) in GRAY4_LEVELS {
                        points.push(Complex::new(S::of(re) * scale, S::of(im) * scale));
                        bit_labels.push((bi << 2) | bq);
                    }
                }
                Self {
                    kind,
                    points,
                    bit_labels,
                    bits_per_symbol: 4,
                }
            }
        }
    }

    pub fn kind(&self) -> ConstellationKind {
        self.kind
    }

    pub fn points(&self) -> &[Complex<S>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.bits_per_symbol
    }

    pub fn point(&self, index: usize) -> Complex<S> {
        self.points[index]
    }

    pub fn bit_label(&self, index: usize) -> u32 {
        self.bit_labels[index]
    }

    /// Number of differing bits between the Gray labels of two symbol indices.
    pub fn bit_errors(&self, a: usize, b: usize) -> u32 {
        (self.bit_labels[a] ^ self.bit_labels[b]).count_ones()
    }

    /// Nearest-point slicing; exact ties resolve to the smallest index.
    pub fn slice(&self, z: Complex<S>) -> usize {
        let mut best = 0;
        let mut best_d = S::infinity();
        for (idx, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = idx;
            }
        }
        best
    }
}

/// i.i.d. CN(0,1) flat channel, N x K.
pub fn gen_iid_channel<S: Real, R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Array2<Complex<S>> {
    let half = S::of(0.5).sqrt();
    Array2::from_shape_fn((n, k), |_| {
        Complex::new(S::standard_normal(rng) * half, S::standard_normal(rng) * half)
    })
}

/// Uniform-linear-array correlation model with a Laplacian power angle
/// spectrum.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct CorrelationSpec {
    /// Element spacing in wavelengths.
    pub spacing_wavelengths: f64,
    /// Angle spread (Laplacian scale is spread / sqrt(2)), degrees.
    pub angle_spread_deg: f64,
    /// Per-user mean angles of arrival, degrees.
    pub mean_angles_deg: Vec<f64>,
}

/// Quadrature resolution for the Laplacian covariance integral.
const QUAD_POINTS: usize = 4096;
/// Integration window half-width, in units of the angle spread.
const QUAD_SPREADS: f64 = 10.0;

/// Spatial covariance of one user under the Laplacian power angle spectrum:
/// `[C]_{mn} = integral exp(j 2 pi D (m-n) sin(theta)) p(theta) dtheta`,
/// by composite trapezoid over mean +/- 10 spreads, renormalized so the
/// diagonal is exactly one.
pub fn laplacian_covariance<S: Real>(
    spec: &CorrelationSpec,
    user: usize,
    n: usize,
) -> Result<Array2<Complex<S>>, ChannelError> {
    if spec.angle_spread_deg <= 0.0 {
        return Err(ChannelError::BadSpec("angle spread must be > 0".into()));
    }
    let mean = spec
        .mean_angles_deg
        .get(user)
        .copied()
        .ok_or_else(|| ChannelError::BadSpec(format!("no mean angle for user {user}")))?
        .to_radians();
    let spread = spec.angle_spread_deg.to_radians();
    let lo = mean - QUAD_SPREADS * spread;
    let hi = mean + QUAD_SPREADS * spread;
    let step = (hi - lo) / (QUAD_POINTS as f64 - 1.0);
    let b = spread / std::f64::consts::SQRT_2; // Laplacian scale

    // Toeplitz: only the N lag values are needed.
    let mut lag = vec![Complex::<f64>::new(0.0, 0.0); n];
    let mut mass = 0.0;
    for q in 0..QUAD_POINTS {
        let theta: f64 = lo + step * q as f64;
        let weight = if q == 0 || q == QUAD_POINTS - 1 { 0.5 } else { 1.0 };
        let p = (-((theta - mean).abs()) / b).exp();
        let wp = weight * p;
        mass += wp;
        let phase = 2.0 * std::f64::consts::PI * spec.spacing_wavelengths * theta.sin();
        for (d, l) in lag.iter_mut().enumerate() {
            *l += Complex::from_polar(wp, phase * d as f64);
        }
    }
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(ChannelError::BadSpec("quadrature mass vanished".into()));
    }
    for l in lag.iter_mut() {
        *l /= mass;
    }
    Ok(Array2::from_shape_fn((n, n), |(m, q)| {
        let d = m.abs_diff(q);
        let v = if m >= q { lag[d] } else { lag[d].conj() };
        Complex::new(S::of(v.re), S::of(v.im))
    }))
}

/// Draw a spatially correlated channel: column k is `C_k^{1/2} g`,
/// `g ~ CN(0, I)`, realized through the real lifting of each covariance.
pub fn gen_correlated_channel<S: Real, R: Rng + ?Sized>(
    covariances: &[Array2<Complex<S>>],
    rng: &mut R,
) -> Result<Array2<Complex<S>>, ChannelError> {
    let k_users = covariances.len();
    let n = covariances.first().map(|c| c.nrows()).unwrap_or(0);
    let mut h = Array2::zeros((n, k_users));
    for (k, cov) in covariances.iter().enumerate() {
        // [Re h; Im h] ~ N(0, R) with R = 1/2 * [Re C, -Im C; Im C, Re C]
        let real_cov = stack_complex_mult(cov).mapv(|v| v * S::of(0.5));
        let root = sym_sqrt(&real_cov, S::of(1e-10))
            .map_err(|source| ChannelError::BadCovariance { user: k, source })?;
        let g: Array1<S> = Array1::from_shape_fn(2 * n, |_| S::standard_normal(rng));
        let v = root.dot(&g);
        for i in 0..n {
            h[[i, k]] = Complex::new(v[i], v[i + n]);
        }
    }
    Ok(h)
}

/// L-tap frequency-selective channel: taps i.i.d. CN(0, 1/L), indexed
/// `(antenna, user, tap)`.
pub fn gen_freq_selective<S: Real, R: Rng + ?Sized>(
    n: usize,
    k: usize,
    l: usize,
    rng: &mut R,
) -> Array3<Complex<S>> {
    let sigma = (S::of(0.5) / S::of(l as f64)).sqrt();
    Array3::from_shape_fn((n, k, l), |_| {
        Complex::new(S::standard_normal(rng) * sigma, S::standard_normal(rng) * sigma)
    })
}

/// i.i.d. uniform symbol draws; returns (indices, modulated matrix), K x T.
pub fn gen_symbols<S: Real, R: Rng + ?Sized>(
    k: usize,
    t: usize,
    constellation: &Constellation<S>,
    rng: &mut R,
) -> (Array2<usize>, Array2<Complex<S>>) {
    let m = constellation.len();
    let indices = Array2::from_shape_fn((k, t), |_| rng.random_range(0..m));
    let symbols = indices.mapv(|idx| constellation.point(idx));
    (indices, symbols)
}

/// i.i.d. CN(0, N0) noise matrix.
pub fn awgn<S: Real, R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    n0: S,
    rng: &mut R,
) -> Array2<Complex<S>> {
    let sigma = (n0 * S::of(0.5)).sqrt();
    Array2::from_shape_fn((rows, cols), |_| {
        Complex::new(S::standard_normal(rng) * sigma, S::standard_normal(rng) * sigma)
    })
}

/// SNR is defined as `rho = 1/N0`; dB in, noise power out.
pub fn snr_db_to_n0<S: Real>(snr_db: S) -> S {
    S::of(10.0).powf(-snr_db / S::of(10.0))
}

/// Linear SNR from dB.
pub fn snr_db_to_linear<S: Real>(snr_db: S) -> S {
    S::of(10.0).powf(snr_db / S::of(10.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    type C64 = Complex<f64>;

    #[test]
    fn qpsk_alphabet_and_energy() {
        let c: Constellation<f64> = Constellation::new(ConstellationKind::Qpsk);
        let a = 1.0 / 2.0f64.sqrt();
        for p in c.points() {
            assert!((p.re.abs() - a).abs() < 1e-15);
            assert!((p.im.abs() - a).abs() < 1e-15);
            assert!((p.norm_sqr() - 1.0).abs() < 1e-12);
        }
        assert_eq!(c.len(), 4);
    }

    #[test]
    fn qam16_alphabet() {
        let c: Constellation<f64> = Constellation::new(ConstellationKind::Qam16);
        assert_eq!(c.len(), 16);
        let scale = 1.0 / 10.0f64.sqrt();
        let mean_energy: f64 = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / 16.0;
        assert!((mean_energy - 1.0).abs() < 1e-12);
        for p in c.points() {
            let a = p.re / scale;
            let b = p.im / scale;
            assert!([-3.0, -1.0, 1.0, 3.0].iter().any(|v| (a - v).abs() < 1e-9));
            assert!([-3.0, -1.0, 1.0, 3.0].iter().any(|v| (b - v).abs() < 1e-9));
        }
    }

    #[test]
    fn gray_labels_adjacent_differ_by_one_bit() {
        let c: Constellation<f64> = Constellation::new(ConstellationKind::Qam16);
        // neighbours along the I axis differ in exactly one bit
        for i in 0..16 {
            for j in 0..16 {
                let pi = c.point(i);
                let pj = c.point(j);
                let d = (pi - pj).norm();
                if (d - 2.0 / 10.0f64.sqrt()).abs() < 1e-9 {
                    assert_eq!(c.bit_errors(i, j), 1, "points {i} and {j}");
                }
            }
        }
    }

    #[test]
    fn slicing_exact_on_noiseless_points() {
        for kind in [ConstellationKind::Qpsk, ConstellationKind::Qam16] {
            let c: Constellation<f64> = Constellation::new(kind);
            for (idx, p) in c.points().iter().enumerate() {
                assert_eq!(c.slice(*p), idx);
            }
        }
    }

    #[test]
    fn iid_channel_statistics_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let h: Array2<C64> = gen_iid_channel(100, 10, &mut rng);
        let mut rng2 = ChaCha8Rng::seed_from_u64(42);
        let h2: Array2<C64> = gen_iid_channel(100, 10, &mut rng2);
        assert_eq!(h, h2);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut acc = 0.0;
        let draws = 200;
        for _ in 0..draws {
            let h: Array2<C64> = gen_iid_channel(25, 20, &mut rng);
            acc += h.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        let mean_sq = acc / (draws as f64 * 25.0 * 20.0);
        assert!((mean_sq - 1.0).abs() < 0.02, "mean |h|^2 = {mean_sq}");
    }

    #[test]
    fn freq_selective_power() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let l = 8;
        let taps: Array3<C64> = gen_freq_selective(40, 20, l, &mut rng);
        let mean_tap = taps.iter().map(|z| z.norm_sqr()).sum::<f64>() / (40.0 * 20.0 * l as f64);
        assert!((mean_tap - 1.0 / l as f64).abs() < 0.02 / l as f64);
        // total per-(antenna, user) power is 1 on average
        let total = taps.iter().map(|z| z.norm_sqr()).sum::<f64>() / (40.0 * 20.0);
        assert!((total - 1.0).abs() < 0.02);
    }

    #[test]
    fn awgn_variance_and_zero_db() {
        assert!((snr_db_to_n0(0.0f64) - 1.0).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n0 = 0.25;
        let z: Array2<C64> = awgn(300, 300, n0, &mut rng);
        let var = z.iter().map(|v| v.norm_sqr()).sum::<f64>() / (300.0 * 300.0);
        assert!((var - n0).abs() < 0.02 * n0);
    }

    #[test]
    fn symbols_uniform_energy() {
        let c: Constellation<f64> = Constellation::new(ConstellationKind::Qpsk);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (_, x) = gen_symbols(10, 10_000, &c, &mut rng);
        let e = x.iter().map(|z| z.norm_sqr()).sum::<f64>() / 100_000.0;
        assert!((e - 1.0).abs() < 0.01);
        let a = 1.0 / 2.0f64.sqrt();
        for z in x.iter() {
            assert!((z.re.abs() - a).abs() < 1e-12 && (z.im.abs() - a).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_covariance_structure() {
        let spec = CorrelationSpec {
            spacing_wavelengths: 0.5,
            angle_spread_deg: 10.0,
            mean_angles_deg: vec![20.0],
        };
        let c: Array2<C64> = laplacian_covariance(&spec, 0, 8).unwrap();
        for i in 0..8 {
            assert!((c[[i, i]].re - 1.0).abs() < 1e-12);
            assert!(c[[i, i]].im.abs() < 1e-12);
            for j in 0..8 {
                assert!((c[[i, j]] - c[[j, i]].conj()).norm() < 1e-12);
            }
        }
        // PSD via the real lifting
        let real = stack_complex_mult(&c);
        let eig = crate::linalg::sym_eig(&real).unwrap();
        for w in eig.values.iter() {
            assert!(*w > -1e-10);
        }
        // adjacent-element correlation is strong at 10 degrees spread
        assert!(c[[0, 1]].norm() > 0.8);
    }

    #[test]
    fn laplacian_small_spread_is_near_rank_one() {
        let spec = CorrelationSpec {
            spacing_wavelengths: 0.5,
            angle_spread_deg: 0.05,
            mean_angles_deg: vec![-30.0],
        };
        let c: Array2<C64> = laplacian_covariance(&spec, 0, 6).unwrap();
        // near the steering outer product: |[C]_{mn}| -> 1 for all lags
        for i in 0..6 {
            for j in 0..6 {
                assert!(c[[i, j]].norm() > 0.999);
            }
        }
    }

    #[test]
    fn correlated_identity_matches_iid_statistics() {
        let covs: Vec<Array2<C64>> = vec![Array2::eye(6).mapv(|v: f64| Complex::new(v, 0.0)); 2];
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut acc = 0.0;
        for _ in 0..2000 {
            let h = gen_correlated_channel(&covs, &mut rng).unwrap();
            acc += h.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        let mean_sq = acc / (2000.0 * 12.0);
        assert!((mean_sq - 1.0).abs() < 0.03);
    }

    #[test]
    fn correlated_sample_covariance_matches() {
        let spec = CorrelationSpec {
            spacing_wavelengths: 0.5,
            angle_spread_deg: 10.0,
            mean_angles_deg: vec![10.0],
        };
        let c: Array2<C64> = laplacian_covariance(&spec, 0, 4).unwrap();
        let covs = vec![c.clone()];
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let mut acc = Array2::<C64>::zeros((4, 4));
        let draws = 20_000;
        for _ in 0..draws {
            let h = gen_correlated_channel(&covs, &mut rng).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    acc[[i, j]] += h[[i, 0]] * h[[j, 0]].conj();
                }
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                let est = acc[[i, j]] / draws as f64;
                assert!((est - c[[i, j]]).norm() < 0.05, "entry ({i},{j})");
            }
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let spec = CorrelationSpec {
            spacing_wavelengths: 0.5,
            angle_spread_deg: 0.0,
            mean_angles_deg: vec![0.0],
        };
        assert!(laplacian_covariance::<f64>(&spec, 0, 4).is_err());
        let mut cov = Array2::<C64>::eye(2);
        cov[[0, 0]] = Complex::new(-5.0, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(gen_correlated_channel(&[cov], &mut rng).is_err());
    }
}
