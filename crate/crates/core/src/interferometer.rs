//! Multiport unitaries built from beam splitters.
//!
//! Matrices map input creation operators to output ones, `b† = U a†`. Factor
//! products are ordinary matrix products, so the rightmost factor acts first.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{out_of_range, Error, Result};
use crate::C64;

/// Unitarity tolerance used by constructors and [`inverse`].
pub const UNITARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MultiportMatrix {
    dim: usize,
    entries: Vec<C64>,
    label: String,
}

impl MultiportMatrix {
    /// Row-major entries; panics if the length is not `dim²`.
    pub fn from_entries(dim: usize, entries: Vec<C64>, label: impl Into<String>) -> Self {
        assert_eq!(entries.len(), dim * dim, "entry count must be dim²");
        MultiportMatrix { dim, entries, label: label.into() }
    }

    pub fn identity(dim: usize) -> Self {
        let mut e = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            e[i * dim + i] = C64::new(1.0, 0.0);
        }
        Self::from_entries(dim, e, format!("identity-{dim}"))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Entry at 0-based `(r, c)`.
    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.entries[r * self.dim + c]
    }

    pub fn row(&self, r: usize) -> &[C64] {
        &self.entries[r * self.dim..(r + 1) * self.dim]
    }

    pub fn entries(&self) -> &[C64] {
        &self.entries
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut e = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    e[i * n + j] += a * other.get(k, j);
                }
            }
        }
        Self::from_entries(n, e, format!("{}*{}", self.label, other.label))
    }

    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut e = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                e[j * n + i] = self.get(i, j).conj();
            }
        }
        Self::from_entries(n, e, format!("{}^-1", self.label))
    }

    /// `max |(U U†)_{jk} − δ_{jk}|`.
    pub fn unitarity_residual(&self) -> f64 {
        let p = self.mul(&self.adjoint());
        let mut r: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let d = if i == j { 1.0 } else { 0.0 };
                r = r.max((p.get(i, j) - d).norm());
            }
        }
        r
    }

    pub fn is_unitary(&self) -> bool {
        self.unitarity_residual() < UNITARY_TOL
    }

    /// `max | |U_jk|² − 1/n |`.
    pub fn symmetry_residual(&self) -> f64 {
        let target = 1.0 / self.dim as f64;
        self.entries
            .iter()
            .map(|z| (z.norm_sqr() - target).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim, other.dim);
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Conjugates by the port permutation `perm` (0-based, output port `perm[i]` ← `i`).
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.dim;
        let mut e = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                e[perm[i] * n + perm[j]] = self.get(i, j);
            }
        }
        Self::from_entries(n, e, format!("{}-permuted", self.label))
    }
}

/// Embeds a 2×2 block acting on 0-based modes `i`, `j` of an `n`-mode device.
pub fn two_mode(n: usize, i: usize, j: usize, block: [[C64; 2]; 2]) -> MultiportMatrix {
    let mut m = MultiportMatrix::identity(n);
    m.entries[i * n + i] = block[0][0];
    m.entries[i * n + j] = block[0][1];
    m.entries[j * n + i] = block[1][0];
    m.entries[j * n + j] = block[1][1];
    m.label = format!("bs({},{})", i + 1, j + 1);
    m
}

fn bs_block() -> [[C64; 2]; 2] {
    let r = C64::new(FRAC_1_SQRT_2, 0.0);
    let t = C64::new(0.0, FRAC_1_SQRT_2);
    [[r, t], [t, r]]
}

/// 50:50 beam splitter on 0-based modes `i`, `j` of an `n`-mode device.
pub fn bs_on(n: usize, i: usize, j: usize) -> MultiportMatrix {
    two_mode(n, i, j, bs_block())
}

pub fn beam_splitter() -> MultiportMatrix {
    bs_on(2, 0, 1).with_label("bs")
}

/// Three-port symmetric multiport: BS(2,3) · S · BS(1,2), where S is the 1:2
/// splitter coupling modes 1 and 3.
pub fn tritter() -> MultiportMatrix {
    let a = C64::new((2.0f64 / 3.0).sqrt(), 0.0);
    let b = C64::new(0.0, 1.0 / 3f64.sqrt());
    let s = two_mode(3, 0, 2, [[a, b], [b, a]]);
    bs_on(3, 1, 2).mul(&s).mul(&bs_on(3, 0, 1)).with_label("tritter")
}

/// Four-port symmetric multiport: BS(2,3) · BS(1,4) · BS(3,4) · BS(1,2).
pub fn quarter() -> MultiportMatrix {
    bs_on(4, 1, 2)
        .mul(&bs_on(4, 0, 3))
        .mul(&bs_on(4, 2, 3))
        .mul(&bs_on(4, 0, 1))
        .with_label("quarter")
}

/// `2^d`-port butterfly of 50:50 beam splitters.
///
/// Layer `k` (k = 0 first) couples every pair of ports whose 0-based indices
/// differ only in bit `k`. For `d = 2` this is the quarter with ports 3 and 4
/// swapped on both sides: `quarter() == P · symmetric_multiport(2) · P`.
pub fn symmetric_multiport(d: u32) -> Result<MultiportMatrix> {
    if !(1..=5).contains(&d) {
        return Err(out_of_range("d", d, "1..=5 (at most 32 ports)"));
    }
    let n = 1usize << d;
    let mut u = MultiportMatrix::identity(n);
    for k in 0..d {
        let bit = 1usize << k;
        let mut layer = MultiportMatrix::identity(n);
        for p in (0..n).filter(|p| p & bit == 0) {
            layer = bs_on(n, p, p | bit).mul(&layer);
        }
        u = layer.mul(&u);
    }
    Ok(u.with_label(format!("sym-{n}")))
}

/// Discrete Fourier multiport, `F_jk = ω^{jk}/√n`; symmetric for every `n`.
pub fn fourier(n: usize) -> Result<MultiportMatrix> {
    if n < 2 {
        return Err(out_of_range("n", n, "at least 2"));
    }
    let s = 1.0 / (n as f64).sqrt();
    let e = (0..n * n)
        .map(|idx| {
            let (j, k) = (idx / n, idx % n);
            C64::from_polar(s, 2.0 * PI * ((j * k) % n) as f64 / n as f64)
        })
        .collect();
    Ok(MultiportMatrix::from_entries(n, e, format!("dft-{n}")))
}

/// The symmetric eraser used for `n` sources: beam splitter, tritter, quarter,
/// the butterfly for larger powers of two, and the Fourier multiport otherwise.
pub fn eraser(n: usize) -> Result<MultiportMatrix> {
    match n {
        2 => Ok(beam_splitter()),
        3 => Ok(tritter()),
        4 => Ok(quarter()),
        8 | 16 | 32 => symmetric_multiport(n.trailing_zeros()),
        _ => fourier(n),
    }
}

/// `diag(e^{i post}) · U · diag(e^{i pre})`.
pub fn with_phases(u: &MultiportMatrix, pre: &[f64], post: &[f64]) -> Result<MultiportMatrix> {
    let n = u.dim();
    if pre.len() != n || post.len() != n {
        return Err(out_of_range("phases", pre.len().max(post.len()), "one phase per port"));
    }
    let e = (0..n * n)
        .map(|idx| {
            let (j, k) = (idx / n, idx % n);
            u.get(j, k) * C64::from_polar(1.0, post[j] + pre[k])
        })
        .collect();
    Ok(MultiportMatrix::from_entries(n, e, format!("{}-phased", u.label())))
}

/// Conjugate transpose, after checking unitarity.
pub fn inverse(u: &MultiportMatrix) -> Result<MultiportMatrix> {
    let residual = u.unitarity_residual();
    if residual >= UNITARY_TOL {
        return Err(Error::NotUnitary { label: u.label().to_string(), residual });
    }
    Ok(u.adjoint())
}

pub fn verify_symmetric(u: &MultiportMatrix) -> bool {
    u.symmetry_residual() < 1e-9
}

/// Phase of the state produced with split-polarization paths, in (−π, π].
pub fn split_polarization_phase(alpha_h: f64, alpha_v: f64, beta_h: f64, beta_v: f64, lambda: f64) -> Result<f64> {
    if lambda <= 0.0 || !lambda.is_finite() {
        return Err(out_of_range("lambda", lambda, "a positive wavelength"));
    }
    let phi = 2.0 * PI * ((beta_h - beta_v) - (alpha_h - alpha_v)) / lambda;
    let r = phi.rem_euclid(2.0 * PI);
    Ok(if r > PI { r - 2.0 * PI } else { r })
}
