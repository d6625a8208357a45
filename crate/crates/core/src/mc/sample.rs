//! Draws from the model, either as canonical statistics or raw data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use super::config::SimConfig;
use crate::canonical::{CanonicalStats, Helmert, RepeatedMeasuresSample, SufficientStats};

/// Counter-based generator for one substream of a seed.
#[derive(Debug, Clone)]
pub struct StreamFactory {
    base: ChaCha8Rng,
}

impl StreamFactory {
    pub fn new(seed: u64) -> Self {
        Self { base: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn stream(&self, id: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(id);
        rng.set_word_pos(0);
        rng
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn chi_square<R: Rng + ?Sized>(rng: &mut R, m: usize) -> f64 {
    if m == 0 {
        return 0.0;
    }
    ChiSquared::new(m as f64).expect("m >= 1").sample(rng)
}

/// Precomputed pieces of a configuration used on every draw.
#[derive(Debug, Clone)]
pub struct Sampler {
    xi: Vec<f64>,
    beta: f64,
    z0_mean: f64,
    theta: f64,
    tau: f64,
    sigma: f64,
    sigma2: f64,
    p: usize,
    m: usize,
    r: usize,
}

impl Sampler {
    pub fn new(cfg: &SimConfig) -> Self {
        Self {
            xi: cfg.xi_vector(),
            beta: cfg.beta,
            z0_mean: cfg.alpha + cfg.beta * cfg.theta,
            theta: cfg.theta,
            tau: cfg.tau2.sqrt(),
            sigma: cfg.sigma2.sqrt(),
            sigma2: cfg.sigma2,
            p: cfg.p(),
            m: cfg.m(),
            r: cfg.r,
        }
    }

    /// One draw of `(Z₀, Z, U₀, U, S)`: `Z ~ N(βξ, τ²I)`, `U ~ N(ξ, σ²I)`,
    /// `Z₀ ~ N(α + βθ, τ²)`, `U₀ ~ N(θ, σ²)`, `S ~ σ²χ²_m`.
    pub fn canonical<R: Rng + ?Sized>(&self, rng: &mut R) -> CanonicalStats {
        let z0 = self.z0_mean + self.tau * normal(rng);
        let u0 = self.theta + self.sigma * normal(rng);
        let mut z = Vec::with_capacity(self.p);
        let mut u = Vec::with_capacity(self.p);
        for &x in &self.xi {
            z.push(self.beta * x + self.tau * normal(rng));
            u.push(x + self.sigma * normal(rng));
        }
        let s = self.sigma2 * chi_square(rng, self.m);
        CanonicalStats { z0, z, u0, u, s, p: self.p as u32, m: self.m as u32, r: self.r as u32 }
    }

    /// The same draw as [`Sampler::canonical`], reduced on the fly.
    pub fn stats<R: Rng + ?Sized>(&self, rng: &mut R) -> SufficientStats {
        let z0 = self.z0_mean + self.tau * normal(rng);
        let u0 = self.theta + self.sigma * normal(rng);
        let (mut t_uz, mut u_sq, mut z_sq) = (0.0, 0.0, 0.0);
        for &x in &self.xi {
            let z = self.beta * x + self.tau * normal(rng);
            let u = x + self.sigma * normal(rng);
            t_uz += u * z;
            u_sq += u * u;
            z_sq += z * z;
        }
        let s = self.sigma2 * chi_square(rng, self.m);
        SufficientStats { t_uz, u_sq, z_sq, u0, z0, s, p: self.p as u32, m: self.m as u32, r: self.r as u32 }
    }

    /// Raw data whose canonical form has the laws of [`Sampler::canonical`]:
    /// `γ = Qᵗ(θ, ξ)`, `X_ij = γ_i + N(0, rσ²)`, `Y_i = α/√n + βγ_i + N(0, τ²)`.
    pub fn raw<R: Rng + ?Sized>(&self, rng: &mut R) -> RepeatedMeasuresSample {
        let n = self.p + 1;
        let helmert = Helmert::new(n).expect("n >= 4");
        let mut means = Vec::with_capacity(n);
        means.push(self.theta);
        means.extend_from_slice(&self.xi);
        let gamma = helmert.apply_transpose(&means);
        let alpha0 = (self.z0_mean - self.beta * self.theta) / (n as f64).sqrt();
        let sd_x = (self.r as f64 * self.sigma2).sqrt();
        let mut y = Vec::with_capacity(n);
        let mut x = Vec::with_capacity(n);
        for &g in &gamma {
            y.push(alpha0 + self.beta * g + self.tau * normal(rng));
            x.push((0..self.r).map(|_| g + sd_x * normal(rng)).collect());
        }
        RepeatedMeasuresSample::new(y, x).expect("finite draws")
    }
}

pub fn sample_canonical(cfg: &SimConfig, stream: u64) -> CanonicalStats {
    Sampler::new(cfg).canonical(&mut StreamFactory::new(cfg.seed).stream(stream))
}

pub fn sample_raw(cfg: &SimConfig, stream: u64) -> RepeatedMeasuresSample {
    Sampler::new(cfg).raw(&mut StreamFactory::new(cfg.seed).stream(stream))
}

#[cfg(test)]
mod tests {
    use super::super::config::{Level, XiMode};
    use super::*;
    use crate::canonical::{canonicalize, sufficient_stats};

    fn cfg(n: usize, r: usize, sigma2: f64, tau2: f64) -> SimConfig {
        SimConfig {
            n,
            r,
            beta: -5.0,
            alpha: 0.7,
            theta: -1.3,
            tau2,
            sigma2,
            xi: XiMode::Constant(1.5),
            estimators: vec!["LS".into()],
            reps: 1,
            seed: 42,
            level: Level::Canonical,
            paired: false,
            bayes_c1: 1.0,
            bayes_c2: 1.0,
        }
    }

    /// Mean and standard error of `f` over `reps` draws.
    fn mean_se(reps: u64, mut f: impl FnMut(u64) -> f64) -> (f64, f64) {
        let (mut s, mut s2) = (0.0, 0.0);
        for i in 0..reps {
            let x = f(i);
            s += x;
            s2 += x * x;
        }
        let n = reps as f64;
        let mean = s / n;
        let var = (s2 / n - mean * mean) * n / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let f = StreamFactory::new(9);
        let a: f64 = normal(&mut f.stream(3));
        let b: f64 = normal(&mut f.stream(3));
        let c: f64 = normal(&mut f.stream(4));
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn stats_match_canonical_draw() {
        let c = cfg(12, 3, 2.0, 3.0);
        let s = Sampler::new(&c);
        let f = StreamFactory::new(c.seed);
        for id in 0..20 {
            let full = sufficient_stats(&s.canonical(&mut f.stream(id))).unwrap();
            let fast = s.stats(&mut f.stream(id));
            assert_eq!(full, fast);
        }
    }

    #[test]
    fn degenerate_limit() {
        let c = cfg(6, 2, 1e-300, 1e-300);
        let cs = sample_canonical(&c, 0);
        for (u, z) in cs.u.iter().zip(&cs.z) {
            assert!((u - 1.5).abs() < 1e-140);
            assert!((z + 7.5).abs() < 1e-140);
        }
    }

    #[test]
    fn raw_noise_free_limit() {
        let c = cfg(7, 2, 1e-300, 1e-300);
        let sample = sample_raw(&c, 0);
        let h = Helmert::new(7).unwrap();
        let mut means = vec![c.theta];
        means.extend(c.xi_vector());
        let gamma = h.apply_transpose(&means);
        let alpha0 = c.alpha / 7f64.sqrt();
        for (i, g) in gamma.iter().enumerate() {
            assert!((sample.y()[i] - (alpha0 + c.beta * g)).abs() < 1e-12);
        }
    }

    #[test]
    fn canonical_moments() {
        let c = cfg(10, 2, 2.0, 3.0);
        let s = Sampler::new(&c);
        let f = StreamFactory::new(5);
        let reps = 1_000_000;
        let p = 9.0;
        let (mu, se) = mean_se(reps, |i| s.stats(&mut f.stream(i)).u_sq);
        let want = p * 2.0 + p * 1.5 * 1.5;
        assert!((mu - want).abs() < 4.0 * se, "{mu} vs {want} (se {se})");
        let (ms, se) = mean_se(reps, |i| s.stats(&mut f.stream(i)).s);
        assert!((ms - 10.0 * 2.0).abs() < 4.0 * se);
        let (mz, se) = mean_se(reps, |i| s.stats(&mut f.stream(i)).z0);
        assert!((mz - (0.7 + 5.0 * 1.3)).abs() < 4.0 * se);
    }

    #[test]
    fn raw_matches_canonical_in_moments() {
        let c = cfg(8, 3, 1.5, 2.0);
        let s = Sampler::new(&c);
        let f = StreamFactory::new(11);
        let reps = 100_000;
        let raw: Vec<SufficientStats> =
            (0..reps).map(|i| sufficient_stats(&canonicalize(&s.raw(&mut f.stream(i)))).unwrap()).collect();
        let canon: Vec<SufficientStats> = (0..reps).map(|i| s.stats(&mut f.stream(reps + i))).collect();
        let pick: [fn(&SufficientStats) -> f64; 4] = [|x| x.u_sq, |x| x.s, |x| x.t_uz, |x| x.z0];
        for g in pick {
            let (a, sa) = mean_se(reps, |i| g(&raw[i as usize]));
            let (b, sb) = mean_se(reps, |i| g(&canon[i as usize]));
            assert!((a - b).abs() < 4.0 * (sa * sa + sb * sb).sqrt(), "{a} vs {b}");
        }
        // E[S]/m recovers σ_x²/r.
        let (ms, se) = mean_se(reps, |i| raw[i as usize].s / c.m() as f64);
        assert!((ms - c.sigma2).abs() < 4.0 * se);
    }

    #[test]
    fn standard_normal_sampler() {
        let f = StreamFactory::new(2024);
        let mut rng = f.stream(0);
        let n = 10_000_000u64;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = normal(&mut rng);
            s += x;
            s2 += x * x;
        }
        let nf = n as f64;
        let mean = s / nf;
        let var = s2 / nf - mean * mean;
        assert!(mean.abs() < 5.0 / nf.sqrt());
        // Var of the sample variance is 2/n for normal data.
        assert!((var - 1.0).abs() < 5.0 * (2.0 / nf).sqrt());
    }
}
