//! Seeded sensing matrices, planted sparse signals and noiseless instances.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::registry::Registry;

/// Stream ids within one seed, so matrix and signal draws never overlap.
const MATRIX_STREAM: u64 = 0;
const SIGNAL_STREAM: u64 = 1;

/// ChaCha generator for `seed` on the given stream.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for one trial, a pure function of its coordinates.
pub fn derive_seed(base_seed: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(mix64(base_seed), |acc, &p| mix64(acc ^ mix64(p)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    CorrelatedGaussian,
    OversampledDct,
}

impl MatrixKind {
    pub fn name(self) -> &'static str {
        match self {
            MatrixKind::CorrelatedGaussian => "correlated_gaussian",
            MatrixKind::OversampledDct => "oversampled_dct",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub kind: MatrixKind,
    pub m: usize,
    pub n: usize,
    /// Correlation of the Gaussian rows.
    #[serde(default)]
    pub r: f64,
    /// DCT oversampling factor.
    #[serde(default = "default_f")]
    pub f: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_f() -> f64 {
    1.0
}

impl MatrixSpec {
    pub fn gaussian(m: usize, n: usize, r: f64, seed: u64) -> Self {
        Self {
            kind: MatrixKind::CorrelatedGaussian,
            m,
            n,
            r,
            f: 1.0,
            seed,
        }
    }

    pub fn dct(m: usize, n: usize, f: f64, seed: u64) -> Self {
        Self {
            kind: MatrixKind::OversampledDct,
            m,
            n,
            r: 0.0,
            f,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.n < self.m {
            return Err(Error::InvalidParameter(format!(
                "matrix needs 1 <= m <= n, got m={} n={}",
                self.m, self.n
            )));
        }
        match self.kind {
            MatrixKind::CorrelatedGaussian if !(0.0..1.0).contains(&self.r) => {
                Err(Error::InvalidParameter(format!(
                    "correlation r must lie in [0, 1), got {}",
                    self.r
                )))
            }
            MatrixKind::OversampledDct if !(self.f > 0.0) || !self.f.is_finite() => Err(
                Error::InvalidParameter(format!("oversampling F must be positive, got {}", self.f)),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSpec {
    pub n: usize,
    pub k: usize,
    pub mag_low: f64,
    pub mag_high: f64,
    #[serde(default)]
    pub min_separation: usize,
    #[serde(default)]
    pub seed: u64,
}

impl SignalSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.k > self.n {
            return Err(Error::InvalidParameter(format!(
                "sparsity must satisfy 1 <= k <= n, got k={} n={}",
                self.k, self.n
            )));
        }
        if !(self.mag_low > 0.0) || !(self.mag_low <= self.mag_high) || !self.mag_high.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "magnitude range must satisfy 0 < low <= high, got [{}, {}]",
                self.mag_low, self.mag_high
            )));
        }
        let span = (self.k - 1).saturating_mul(self.min_separation.max(1)) + 1;
        if span > self.n {
            return Err(Error::InvalidParameter(format!(
                "{} indices with separation {} do not fit in {}",
                self.k, self.min_separation, self.n
            )));
        }
        Ok(())
    }
}

/// A sensing-matrix family.
pub trait MatrixGenerator: Send + Sync {
    fn name(&self) -> &'static str;
    fn generate(&self, spec: &MatrixSpec, rng: &mut ChaCha20Rng) -> DMatrix<f64>;
}

/// Rows drawn from `N(0, (1−r)I + r11ᵀ)` through the closed-form square root
/// `√(1−r) I + γ 11ᵀ`.
#[derive(Debug, Default)]
pub struct CorrelatedGaussian;

impl MatrixGenerator for CorrelatedGaussian {
    fn name(&self) -> &'static str {
        "correlated_gaussian"
    }

    fn generate(&self, spec: &MatrixSpec, rng: &mut ChaCha20Rng) -> DMatrix<f64> {
        let (m, n, r) = (spec.m, spec.n, spec.r);
        let nf = n as f64;
        let diag = (1.0 - r).sqrt();
        let gamma = ((1.0 - r + r * nf).sqrt() - diag) / nf;
        let mut a = DMatrix::zeros(m, n);
        let mut z = vec![0.0; n];
        for i in 0..m {
            for v in z.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            let shift = gamma * z.iter().sum::<f64>();
            for j in 0..n {
                a[(i, j)] = diag * z[j] + shift;
            }
        }
        a
    }
}

/// `A_ij = cos(2π w_i j / F) / √m` with `w_i ~ U[0, 1]` and `j = 1..n`.
#[derive(Debug, Default)]
pub struct OversampledDct;

impl MatrixGenerator for OversampledDct {
    fn name(&self) -> &'static str {
        "oversampled_dct"
    }

    fn generate(&self, spec: &MatrixSpec, rng: &mut ChaCha20Rng) -> DMatrix<f64> {
        let (m, n) = (spec.m, spec.n);
        let scale = 1.0 / (m as f64).sqrt();
        let w: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        DMatrix::from_fn(m, n, |i, j| {
            let phase = 2.0 * std::f64::consts::PI * w[i] * (j + 1) as f64 / spec.f;
            (phase.cos() * scale).clamp(-scale, scale)
        })
    }
}

pub fn matrix_generators() -> Registry<dyn MatrixGenerator> {
    let mut r: Registry<dyn MatrixGenerator> = Registry::new("matrix generator");
    r.register("correlated_gaussian", || {
        Box::new(CorrelatedGaussian) as Box<dyn MatrixGenerator>
    });
    r.register("oversampled_dct", || {
        Box::new(OversampledDct) as Box<dyn MatrixGenerator>
    });
    r
}

pub fn gen_matrix(spec: &MatrixSpec) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let generator = matrix_generators().get(spec.kind.name())?;
    let mut rng = stream_rng(spec.seed, MATRIX_STREAM);
    Ok(generator.generate(spec, &mut rng))
}

/// Uniform `k`-subset of `0..n` with pairwise gaps of at least `sep`.
///
/// Draws `k` slots out of `n − (k−1)(sep−1)` and spreads them apart, which is
/// a bijection onto the separated supports.
pub fn separated_support<R: Rng>(n: usize, k: usize, sep: usize, rng: &mut R) -> Vec<usize> {
    let stretch = sep.max(1) - 1;
    let slots = n - (k - 1) * stretch;
    let mut picked = sample(rng, slots, k).into_vec();
    picked.sort_unstable();
    picked
        .into_iter()
        .enumerate()
        .map(|(i, s)| s + i * stretch)
        .collect()
}

pub fn gen_signal(spec: &SignalSpec) -> Result<DVector<f64>> {
    spec.validate()?;
    let mut rng = stream_rng(spec.seed, SIGNAL_STREAM);
    let support = separated_support(spec.n, spec.k, spec.min_separation, &mut rng);
    let (lo, hi) = (spec.mag_low.log10(), spec.mag_high.log10());
    let mut x = DVector::zeros(spec.n);
    for i in support {
        let u: f64 = if hi > lo {
            rng.random_range(lo..=hi)
        } else {
            lo
        };
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        x[i] = sign * 10f64.powf(u);
    }
    Ok(x)
}

/// Noiseless instance `b = A x*` with the ground truth attached.
pub fn gen_instance(mspec: &MatrixSpec, sspec: &SignalSpec) -> Result<ProblemInstance> {
    if mspec.n != sspec.n {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} columns, signal has length {}",
            mspec.n, sspec.n
        )));
    }
    let a = gen_matrix(mspec)?;
    let x = gen_signal(sspec)?;
    let b = &a * &x;
    let id = format!(
        "{}-m{}-n{}-k{}-s{}",
        mspec.kind.name(),
        mspec.m,
        mspec.n,
        sspec.k,
        sspec.seed
    );
    ProblemInstance::new(a, b, Some(x), 0.0, id)
}

/// Gaussian protocol: magnitudes in `[1, 1e3]`, no separation.
pub fn gaussian_protocol(
    m: usize,
    n: usize,
    r: f64,
    k: usize,
    seed: u64,
) -> (MatrixSpec, SignalSpec) {
    (
        MatrixSpec::gaussian(m, n, r, seed),
        SignalSpec {
            n,
            k,
            mag_low: 1.0,
            mag_high: 1e3,
            min_separation: 0,
            seed,
        },
    )
}

/// DCT protocol: magnitudes in `[1, 1e5]`, separation `2F`.
pub fn dct_protocol(m: usize, n: usize, f: f64, k: usize, seed: u64) -> (MatrixSpec, SignalSpec) {
    (
        MatrixSpec::dct(m, n, f, seed),
        SignalSpec {
            n,
            k,
            mag_low: 1.0,
            mag_high: 1e5,
            min_separation: (2.0 * f).ceil() as usize,
            seed,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_uncorrelated_has_unit_variance() {
        let a = gen_matrix(&MatrixSpec::gaussian(64, 1024, 0.0, 3)).unwrap();
        let mean = a.mean();
        let var = a.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / a.len() as f64;
        assert!((var - 1.0).abs() < 0.1, "variance {var}");
    }

    #[test]
    fn gaussian_correlation_matches() {
        let r = 0.6;
        // square so the shape is valid, only the first few columns checked
        let a = gen_matrix(&MatrixSpec::gaussian(2000, 2000, r, 9)).unwrap();
        let head = a.columns(0, 4);
        let cov = head.transpose() * head / 2000.0;
        for i in 0..4 {
            assert!((cov[(i, i)] - 1.0).abs() < 0.08);
            for j in 0..i {
                assert!((cov[(i, j)] - r).abs() < 0.08, "cov {}", cov[(i, j)]);
            }
        }
    }

    #[test]
    fn dct_entries_bounded() {
        for seed in 0..5 {
            let a = gen_matrix(&MatrixSpec::dct(16, 200, 10.0, seed)).unwrap();
            let bound = 1.0 / 4.0;
            assert!(a.iter().all(|v| v.abs() <= bound));
        }
    }

    fn mean_abs_coherence(a: &DMatrix<f64>) -> f64 {
        let n = a.ncols();
        let norms: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
        let mut total = 0.0;
        let mut count = 0.0;
        for i in 0..n {
            for j in 0..i {
                total += (a.column(i).dot(&a.column(j)) / (norms[i] * norms[j])).abs();
                count += 1.0;
            }
        }
        total / count
    }

    #[test]
    fn dct_coherence_grows_with_oversampling() {
        let (mut lo, mut hi) = (0.0, 0.0);
        for seed in 0..20 {
            lo += mean_abs_coherence(&gen_matrix(&MatrixSpec::dct(32, 128, 1.0, seed)).unwrap());
            hi += mean_abs_coherence(&gen_matrix(&MatrixSpec::dct(32, 128, 10.0, seed)).unwrap());
        }
        assert!(hi > lo, "F=10 {hi} vs F=1 {lo}");
    }

    #[test]
    fn degenerate_signal_is_signed_one_hot() {
        let spec = SignalSpec {
            n: 10,
            k: 1,
            mag_low: 1.0,
            mag_high: 1.0,
            min_separation: 0,
            seed: 4,
        };
        let x = gen_signal(&spec).unwrap();
        assert_eq!(x.iter().filter(|v| **v != 0.0).count(), 1);
        assert!(x.iter().all(|v| *v == 0.0 || v.abs() == 1.0));
    }

    #[test]
    fn separation_respected() {
        for seed in 0..1000 {
            let spec = SignalSpec {
                n: 1024,
                k: 5,
                mag_low: 1.0,
                mag_high: 1e3,
                min_separation: 20,
                seed,
            };
            let x = gen_signal(&spec).unwrap();
            let support: Vec<usize> = (0..1024).filter(|&i| x[i] != 0.0).collect();
            assert_eq!(support.len(), 5);
            assert!(support.windows(2).all(|w| w[1] - w[0] >= 20));
        }
    }

    #[test]
    fn infeasible_separation_rejected() {
        let spec = SignalSpec {
            n: 10,
            k: 4,
            mag_low: 1.0,
            mag_high: 1.0,
            min_separation: 4,
            seed: 0,
        };
        assert!(gen_signal(&spec).is_err());
    }

    #[test]
    fn instance_is_exact_product() {
        let (ms, ss) = gaussian_protocol(8, 20, 0.3, 3, 77);
        let inst = gen_instance(&ms, &ss).unwrap();
        let b = inst.a() * inst.ground_truth().unwrap();
        assert_eq!(&b, inst.b());
        let again = gen_instance(&ms, &ss).unwrap();
        assert_eq!(inst.a(), again.a());
        assert_eq!(inst.b(), again.b());
    }

    #[test]
    fn protocol_helpers() {
        let (_, s) = dct_protocol(64, 1024, 10.0, 3, 1);
        assert_eq!(s.min_separation, 20);
        assert_eq!((s.mag_low, s.mag_high), (1.0, 1e5));
        let (_, s) = gaussian_protocol(64, 256, 0.3, 4, 1);
        assert_eq!((s.mag_low, s.mag_high), (1.0, 1e3));
        assert_eq!(s.min_separation, 0);
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(1, &[4, 0]);
        let b = derive_seed(1, &[4, 1]);
        let c = derive_seed(1, &[0, 4]);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(1, &[4, 0]));
    }
}
