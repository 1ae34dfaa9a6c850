//! Localized polynomial kernels on the sphere.
//!
//! [`ChebyshevKernel`] evaluates
//!
//! ```text
//! Φ_n(cos θ) = 1 + 2 Σ_{ℓ=1}^{n-1} H(ℓ/n) cos(ℓθ)
//! ```
//!
//! and [`JacobiKernel`] the witness kernel
//!
//! ```text
//! Φ_{n,q}(x) = Σ_{k=0}^{n-1} H(k/n) P_k(1) P_k(x) / N_k,   P_k = P_k^{(α,α)}, α = q/2 − 1.
//! ```
//!
//! Both precompute their coefficients once per degree and are immutable
//! afterwards, so a single instance can be shared across threads.

use statrs::function::gamma::ln_gamma;

use crate::error::{Result, ScaleError};

fn bump(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// Smooth low-pass filter: 1 on [0, 1/2], 0 on [1, ∞), with a C^∞ bridge
/// ψ(1−t) / (ψ(1−t) + ψ(t−1/2)), ψ(s) = exp(−1/s), in between.
/// The bridge is symmetric about t = 3/4.
pub fn filter_h(t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(ScaleError::param(format!("filter argument must be >= 0, got {t}")));
    }
    Ok(filter_unchecked(t))
}

#[inline]
pub(crate) fn filter_unchecked(t: f64) -> f64 {
    if t <= 0.5 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        let a = bump(1.0 - t);
        let b = bump(t - 0.5);
        a / (a + b)
    }
}

/// Degree, threshold and test-harness parameters shared by the pipeline.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelConfig {
    /// Kernel degree n.
    pub n: usize,
    /// Support threshold Θ.
    pub theta_cap: f64,
    /// Decay exponent S; only the localization check reads it.
    pub decay_exponent: u32,
    /// Sphere dimension q for the witness kernel.
    pub jacobi_dim: usize,
}

impl KernelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(ScaleError::param(format!("kernel degree must be >= 2, got {}", self.n)));
        }
        if !(self.theta_cap > 0.0 && self.theta_cap <= 1.0) {
            return Err(ScaleError::param(format!(
                "threshold must lie in (0, 1], got {}",
                self.theta_cap
            )));
        }
        if self.decay_exponent < 2 {
            return Err(ScaleError::param(format!(
                "decay exponent must be >= 2, got {}",
                self.decay_exponent
            )));
        }
        Ok(())
    }
}

/// Φ_n with the filter values H(ℓ/n) cached.
#[derive(Clone, Debug)]
pub struct ChebyshevKernel {
    n: usize,
    // coeffs[0] = 1, coeffs[ℓ] = 2 H(ℓ/n)
    coeffs: Vec<f64>,
}

impl ChebyshevKernel {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(ScaleError::param(format!("kernel degree must be >= 2, got {n}")));
        }
        let mut coeffs = Vec::with_capacity(n);
        coeffs.push(1.0);
        for l in 1..n {
            let h = filter_unchecked(l as f64 / n as f64);
            if h == 0.0 {
                break;
            }
            coeffs.push(2.0 * h);
        }
        Ok(ChebyshevKernel { n, coeffs })
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    /// Φ_n(dot). The argument is clamped to [−1, 1]; cos((ℓ+1)θ) is
    /// generated from the two previous multiples by angle addition.
    #[inline]
    pub fn eval(&self, dot: f64) -> f64 {
        let c = dot.clamp(-1.0, 1.0);
        let two_c = 2.0 * c;
        let mut prev = 1.0; // cos(0·θ)
        let mut cur = c; // cos(1·θ)
        let mut sum = self.coeffs[0];
        for &w in &self.coeffs[1..] {
            sum += w * cur;
            let next = two_c * cur - prev;
            prev = cur;
            cur = next;
        }
        sum
    }

    /// Φ_n(dot)².
    #[inline]
    pub fn eval_sq(&self, dot: f64) -> f64 {
        let v = self.eval(dot);
        v * v
    }

    /// Φ_n(1) = 1 + 2 Σ H(ℓ/n).
    pub fn peak(&self) -> f64 {
        self.coeffs.iter().sum()
    }
}

/// One-shot evaluation of Φ_n(dot).
pub fn chebyshev_kernel(dot: f64, n: usize) -> Result<f64> {
    Ok(ChebyshevKernel::new(n)?.eval(dot))
}

/// Normalized decay statistic max_θ |Φ_n(cos θ)| · max(1, (nθ)^S) / n over a
/// uniform grid of `grid` angles in [0, π]. Bounded in n when the kernel is
/// localized at order S.
pub fn localization_ratio(n: usize, s: u32, grid: usize) -> Result<f64> {
    if grid < 2 {
        return Err(ScaleError::param("localization grid needs at least two points"));
    }
    let kernel = ChebyshevKernel::new(n)?;
    let nf = n as f64;
    let step = std::f64::consts::PI / (grid - 1) as f64;
    Ok((0..grid)
        .map(|i| {
            let theta = i as f64 * step;
            let decay = (nf * theta).powi(s as i32).max(1.0);
            kernel.eval(theta.cos()).abs() * decay / nf
        })
        .fold(0.0, f64::max))
}

/// Symmetric Jacobi polynomial P_k^{(α,α)}(x) by the three-term recurrence.
pub fn jacobi_eval(k: usize, alpha: f64, x: f64) -> Result<f64> {
    if alpha.is_nan() || alpha <= -1.0 {
        return Err(ScaleError::param(format!("Jacobi parameter must exceed -1, got {alpha}")));
    }
    Ok(JacobiRecurrence::new(alpha, x).nth(k).expect("infinite iterator"))
}

/// Yields P_0(x), P_1(x), … for α = β.
struct JacobiRecurrence {
    alpha: f64,
    x: f64,
    k: usize,
    prev: f64,
    cur: f64,
}

impl JacobiRecurrence {
    fn new(alpha: f64, x: f64) -> Self {
        JacobiRecurrence {
            alpha,
            x,
            k: 0,
            prev: 0.0,
            cur: 1.0,
        }
    }
}

impl Iterator for JacobiRecurrence {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let out = self.cur;
        let a = self.alpha;
        let next = if self.k == 0 {
            (a + 1.0) * self.x
        } else {
            // (α = β, s = 2k + 2α):
            // 2(k+1)(k+2α+1) P_{k+1} = (s+1)(s+2) x P_k − (k+α)(s+2) P_{k−1}
            let k = self.k as f64;
            let s = 2.0 * k + 2.0 * a;
            ((s + 1.0) * (s + 2.0) * self.x * self.cur - (k + a) * (s + 2.0) * self.prev)
                / (2.0 * (k + 1.0) * (k + 2.0 * a + 1.0))
        };
        self.prev = self.cur;
        self.cur = next;
        self.k += 1;
        Some(out)
    }
}

/// N_k = 2^{2α+1} Γ(k+α+1)² / (Γ(k+1) Γ(k+2α+1)) · 1/(2k+2α+1), evaluated in
/// log space.
pub fn jacobi_norm(k: usize, alpha: f64) -> Result<f64> {
    if alpha.is_nan() || alpha <= -1.0 {
        return Err(ScaleError::param(format!("Jacobi parameter must exceed -1, got {alpha}")));
    }
    let kf = k as f64;
    let ab = 2.0 * alpha;
    // Γ(k+2α+1)(2k+2α+1) collapses to Γ(2α+2) at k = 0, which stays
    // positive for every α > −1.
    let tail = if k == 0 {
        ln_gamma(ab + 2.0)
    } else {
        ln_gamma(kf + ab + 1.0) + (2.0 * kf + ab + 1.0).ln()
    };
    let log_n = (ab + 1.0) * std::f64::consts::LN_2 + 2.0 * ln_gamma(kf + alpha + 1.0)
        - ln_gamma(kf + 1.0)
        - tail;
    let value = log_n.exp();
    if !value.is_finite() || value <= 0.0 {
        return Err(ScaleError::Numeric(format!(
            "Jacobi normalization N_{k} (alpha = {alpha}) is out of f64 range (log = {log_n})"
        )));
    }
    Ok(value)
}

/// Φ_{n,q} with the weights H(k/n) P_k(1) / N_k cached.
#[derive(Clone, Debug)]
pub struct JacobiKernel {
    n: usize,
    q: usize,
    alpha: f64,
    weights: Vec<f64>,
}

impl JacobiKernel {
    pub fn new(n: usize, q: usize) -> Result<Self> {
        if n < 1 {
            return Err(ScaleError::param("witness kernel degree must be >= 1"));
        }
        if q < 2 {
            return Err(ScaleError::param(format!(
                "witness kernel needs sphere dimension q >= 2, got {q}"
            )));
        }
        let alpha = q as f64 / 2.0 - 1.0;
        let mut weights = Vec::with_capacity(n);
        let at_one = JacobiRecurrence::new(alpha, 1.0);
        for (k, p1) in at_one.take(n).enumerate() {
            let h = filter_unchecked(k as f64 / n as f64);
            if h == 0.0 {
                break;
            }
            let w = h * p1 / jacobi_norm(k, alpha)?;
            if !w.is_finite() {
                return Err(ScaleError::Numeric(format!(
                    "witness kernel weight for degree {k} overflowed (n = {n}, q = {q})"
                )));
            }
            weights.push(w);
        }
        Ok(JacobiKernel { n, q, alpha, weights })
    }

    pub fn degree(&self) -> usize {
        self.n
    }

    pub fn sphere_dim(&self) -> usize {
        self.q
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn eval(&self, dot: f64) -> f64 {
        let x = dot.clamp(-1.0, 1.0);
        self.weights
            .iter()
            .zip(JacobiRecurrence::new(self.alpha, x))
            .map(|(w, p)| w * p)
            .sum()
    }
}

/// One-shot evaluation of Φ_{n,q}(dot).
pub fn jacobi_kernel(dot: f64, n: usize, q: usize) -> Result<f64> {
    Ok(JacobiKernel::new(n, q)?.eval(dot))
}
