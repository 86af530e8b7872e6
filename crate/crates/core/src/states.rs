//! Multi-qubit state families: Bell, the GHZ basis `G_n±`, Dicke states.
//!
//! Qubit 0 is the leftmost character of a bitstring and the most significant
//! bit of a basis index.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use crate::error::{out_of_range, Error, Result};
use crate::photonics::bitstring;
use crate::C64;

/// Purity threshold below which a reduced state counts as mixed.
pub const PURITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct QubitState {
    n: usize,
    amps: Vec<C64>,
}

impl QubitState {
    /// Normalizes `amps`; fails on a zero vector or a length that is not `2^n`.
    pub fn from_amplitudes(n: usize, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != 1usize << n {
            return Err(out_of_range("amplitudes", amps.len(), "2^n entries"));
        }
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::ZeroDenominator("state normalization"));
        }
        Ok(QubitState { n, amps: amps.into_iter().map(|a| a / norm).collect() })
    }

    /// Builds from a sparse list of (basis index, amplitude).
    pub fn from_sparse(n: usize, items: &[(u64, C64)]) -> Result<Self> {
        let mut amps = vec![C64::new(0.0, 0.0); 1usize << n];
        for &(i, a) in items {
            if i as usize >= amps.len() {
                return Err(out_of_range("basis index", i, "below 2^n"));
            }
            amps[i as usize] += a;
        }
        Self::from_amplitudes(n, amps)
    }

    pub fn basis(n: usize, index: u64) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); 1usize << n];
        amps[index as usize] = C64::new(1.0, 0.0);
        QubitState { n, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amp(&self, index: u64) -> C64 {
        self.amps[index as usize]
    }

    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.n != other.n {
            return Err(Error::RegisterMismatch { expected: self.n, found: other.n });
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        QubitState { n: self.n + other.n, amps }
    }

    /// New qubit `j` is old qubit `perm[j]`.
    pub fn permute_qubits(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n);
        let n = self.n;
        let mut amps = vec![C64::new(0.0, 0.0); self.amps.len()];
        for (old, a) in self.amps.iter().enumerate() {
            let mut new = 0usize;
            for (j, &p) in perm.iter().enumerate() {
                if (old >> (n - 1 - p)) & 1 == 1 {
                    new |= 1 << (n - 1 - j);
                }
            }
            amps[new] = *a;
        }
        QubitState { n, amps }
    }

    /// Purity of the reduced state on the qubits flagged in `mask`
    /// (bit `n-1-j` of `mask` selects qubit `j`).
    pub fn reduced_purity(&self, mask: u64) -> f64 {
        let n = self.n;
        let keep: Vec<usize> = (0..n).filter(|j| mask >> (n - 1 - j) & 1 == 1).collect();
        let drop: Vec<usize> = (0..n).filter(|j| mask >> (n - 1 - j) & 1 == 0).collect();
        let (dk, dd) = (1usize << keep.len(), 1usize << drop.len());
        let index = |s: usize, t: usize| -> usize {
            let mut idx = 0usize;
            for (i, &q) in keep.iter().enumerate() {
                if (s >> (keep.len() - 1 - i)) & 1 == 1 {
                    idx |= 1 << (n - 1 - q);
                }
            }
            for (i, &q) in drop.iter().enumerate() {
                if (t >> (drop.len() - 1 - i)) & 1 == 1 {
                    idx |= 1 << (n - 1 - q);
                }
            }
            idx
        };
        // ρ_S = M M†, M[s][t] = ψ(s, t)
        let m: Vec<C64> = (0..dk * dd).map(|k| self.amps[index(k / dd, k % dd)]).collect();
        let mut purity = 0.0;
        for s in 0..dk {
            for s2 in 0..dk {
                let r: C64 = (0..dd).map(|t| m[s * dd + t] * m[s2 * dd + t].conj()).sum();
                purity += r.norm_sqr();
            }
        }
        purity
    }

    /// True when the state factorizes across the cut `mask | complement`.
    pub fn is_product_across(&self, mask: u64) -> bool {
        self.reduced_purity(mask) > 1.0 - PURITY_TOL
    }

    /// Cuts `S | S̄` with qubit 0 in `S`, each listed once.
    fn bipartitions(&self) -> impl Iterator<Item = u64> {
        let n = self.n;
        let top = 1u64 << (n - 1);
        (0..top).map(move |rest| top | rest).filter(move |&m| m != (1u64 << n) - 1)
    }

    /// No cut leaves a pure reduced state.
    pub fn is_genuinely_entangled(&self) -> bool {
        self.n >= 2 && self.bipartitions().all(|m| !self.is_product_across(m))
    }

    /// Some qubit is entangled with the rest.
    pub fn is_entangled(&self) -> bool {
        self.n >= 2 && (0..self.n).any(|j| !self.is_product_across(1u64 << (self.n - 1 - j)))
    }

    /// Multiplies by a global phase so the first nonzero amplitude is real positive.
    pub fn canonical_phase(&self) -> Self {
        let mut s = self.clone();
        if let Some(a) = self.amps.iter().find(|a| a.norm() > 1e-12) {
            let rot = a.conj() / a.norm();
            s.amps.iter_mut().for_each(|x| *x *= rot);
        }
        s
    }

    /// Nonzero entries as (bitstring, amplitude).
    pub fn support(&self) -> Vec<(String, C64)> {
        self.amps
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > 1e-12)
            .map(|(i, a)| (bitstring(i as u64, self.n), *a))
            .collect()
    }
}

impl fmt::Display for QubitState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (b, a)) in self.support().iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.6}{:+.6}i)|{b}⟩", a.re, a.im)?;
        }
        Ok(())
    }
}

pub fn fidelity(a: &QubitState, b: &QubitState) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

pub fn bell_state(kind: BellKind) -> QubitState {
    let s = FRAC_1_SQRT_2;
    let (i, j, sign) = match kind {
        BellKind::PhiPlus => (0, 3, 1.0),
        BellKind::PhiMinus => (0, 3, -1.0),
        BellKind::PsiPlus => (1, 2, 1.0),
        BellKind::PsiMinus => (1, 2, -1.0),
    };
    let mut amps = vec![C64::new(0.0, 0.0); 4];
    amps[i] = C64::new(s, 0.0);
    amps[j] = C64::new(sign * s, 0.0);
    QubitState { n: 2, amps }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// Labels `G_n±` on `n_qubits` qubits; valid when `n < 2^(n_qubits−1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GhzIndex {
    pub n: u64,
    pub sign: Sign,
    pub n_qubits: usize,
}

impl GhzIndex {
    pub fn new(n: u64, sign: Sign, n_qubits: usize) -> Result<Self> {
        if !(2..=20).contains(&n_qubits) {
            return Err(out_of_range("N", n_qubits, "2..=20"));
        }
        if n >= 1u64 << (n_qubits - 1) {
            return Err(out_of_range("n", n, "below 2^(N-1)"));
        }
        Ok(GhzIndex { n, sign, n_qubits })
    }

    /// Every valid index, `+` before `−` for each `n`.
    pub fn all(n_qubits: usize) -> Result<Vec<Self>> {
        let half = 1u64 << (n_qubits.saturating_sub(1));
        let mut v = Vec::with_capacity(2 * half as usize);
        for n in 0..half {
            v.push(Self::new(n, Sign::Plus, n_qubits)?);
            v.push(Self::new(n, Sign::Minus, n_qubits)?);
        }
        Ok(v)
    }

    pub fn complement(&self) -> u64 {
        (1u64 << self.n_qubits) - self.n - 1
    }
}

/// `(|B(n)⟩ ± |B(2^N − n − 1)⟩)/√2`.
pub fn ghz_basis_state(idx: GhzIndex) -> QubitState {
    let mut amps = vec![C64::new(0.0, 0.0); 1usize << idx.n_qubits];
    amps[idx.n as usize] = C64::new(FRAC_1_SQRT_2, 0.0);
    amps[idx.complement() as usize] = C64::new(idx.sign.value() * FRAC_1_SQRT_2, 0.0);
    QubitState { n: idx.n_qubits, amps }
}

/// Equal superposition of all `n`-qubit strings with `m` ones, each carrying
/// `Π e^{iφ_α}` over its excited positions.
pub fn dicke_state(m: usize, n: usize, phases: &[f64]) -> Result<QubitState> {
    if m > n {
        return Err(out_of_range("m", m, "0..=N"));
    }
    if phases.len() != n {
        return Err(out_of_range("phases", phases.len(), "one phase per qubit"));
    }
    let norm = 1.0 / binomial(n as u64, m as u64).sqrt();
    let amps = (0..1u64 << n)
        .map(|i| {
            if i.count_ones() as usize != m {
                return C64::new(0.0, 0.0);
            }
            let phase: f64 = (0..n).filter(|a| (i >> (n - 1 - a)) & 1 == 1).map(|a| phases[a]).sum();
            C64::from_polar(norm, phase)
        })
        .collect();
    Ok(QubitState { n, amps })
}

pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Residual `‖LHS − RHS‖` of the pair-factorization identity.
///
/// The left side is `⊗_n (|00⟩ ± |11⟩)/√2` over (atom, photon) pairs, reordered
/// to (atoms, photons). The right side is the expansion in `G_n± ⊗ G_m±`:
/// with `a`, `b` the sign products over the ones of `B(n)` and its complement,
/// each `n` contributes `(a+b)/2 (G+G+ + G−G−) + (a−b)/2 (G+G− + G−G+)`.
pub fn verify_pair_decomposition(n: usize, signs: &[Sign]) -> Result<f64> {
    if !(2..=6).contains(&n) {
        return Err(out_of_range("N", n, "2..=6"));
    }
    if signs.len() != n {
        return Err(out_of_range("signs", signs.len(), "one sign per pair"));
    }
    let s = FRAC_1_SQRT_2;
    let mut lhs = QubitState { n: 0, amps: vec![C64::new(1.0, 0.0)] };
    for sign in signs {
        let pair = QubitState {
            n: 2,
            amps: vec![C64::new(s, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(sign.value() * s, 0.0)],
        };
        lhs = lhs.tensor(&pair);
    }
    // pair order A1 P1 A2 P2 ... -> A1..AN P1..PN
    let perm: Vec<usize> = (0..n).map(|j| 2 * j).chain((0..n).map(|j| 2 * j + 1)).collect();
    let lhs = lhs.permute_qubits(&perm);

    let sign_product = |x: u64| -> f64 {
        (0..n)
            .filter(|j| (x >> (n - 1 - j)) & 1 == 1)
            .map(|j| signs[j].value())
            .product()
    };
    let mut rhs = vec![C64::new(0.0, 0.0); 1usize << (2 * n)];
    let scale = 2f64.powf(-(n as f64) / 2.0);
    for k in 0..1u64 << (n - 1) {
        let plus = ghz_basis_state(GhzIndex::new(k, Sign::Plus, n)?);
        let minus = ghz_basis_state(GhzIndex::new(k, Sign::Minus, n)?);
        let a = sign_product(k);
        let b = sign_product(plus_complement(k, n));
        let same = (a + b) / 2.0;
        let cross = (a - b) / 2.0;
        let pieces = [
            (same, plus.tensor(&plus)),
            (same, minus.tensor(&minus)),
            (cross, plus.tensor(&minus)),
            (cross, minus.tensor(&plus)),
        ];
        for (w, st) in pieces {
            if w == 0.0 {
                continue;
            }
            for (r, x) in rhs.iter_mut().zip(&st.amps) {
                *r += x * (w * scale);
            }
        }
    }
    Ok(lhs
        .amps
        .iter()
        .zip(&rhs)
        .map(|(l, r)| (l - r).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

fn plus_complement(k: u64, n: usize) -> u64 {
    (1u64 << n) - k - 1
}

/// 3-tangle `4 |d1 − 2 d2 + 4 d3|` of a three-qubit pure state.
pub fn three_tangle(s: &QubitState) -> Result<f64> {
    if s.n != 3 {
        return Err(out_of_range("qubits", s.n, "exactly 3"));
    }
    let a = |i: usize| s.amps[i];
    let d1 = a(0).powi(2) * a(7).powi(2)
        + a(1).powi(2) * a(6).powi(2)
        + a(2).powi(2) * a(5).powi(2)
        + a(4).powi(2) * a(3).powi(2);
    let d2 = a(0) * a(7) * a(3) * a(4)
        + a(0) * a(7) * a(5) * a(2)
        + a(0) * a(7) * a(6) * a(1)
        + a(3) * a(4) * a(5) * a(2)
        + a(3) * a(4) * a(6) * a(1)
        + a(5) * a(2) * a(6) * a(1);
    let d3 = a(0) * a(6) * a(5) * a(3) + a(7) * a(1) * a(2) * a(4);
    Ok(4.0 * (d1 - 2.0 * d2 + 4.0 * d3).norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThreeQubitClass {
    Product,
    Biseparable,
    WClass,
    GhzClass,
}

impl fmt::Display for ThreeQubitClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ThreeQubitClass::Product => "product",
            ThreeQubitClass::Biseparable => "biseparable",
            ThreeQubitClass::WClass => "W-class",
            ThreeQubitClass::GhzClass => "GHZ-class",
        })
    }
}

pub fn classify_three_qubit(s: &QubitState) -> Result<ThreeQubitClass> {
    if three_tangle(s)? > 1e-6 {
        return Ok(ThreeQubitClass::GhzClass);
    }
    let unentangled = (0..3).filter(|j| s.is_product_across(1u64 << (2 - j))).count();
    Ok(match unentangled {
        0 => ThreeQubitClass::WClass,
        3 => ThreeQubitClass::Product,
        _ => ThreeQubitClass::Biseparable,
    })
}
