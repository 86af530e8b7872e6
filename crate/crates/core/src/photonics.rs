//! Bosonic creation-operator algebra.
//!
//! A [`PhotonPolynomial`] is a sum of monomials in creation operators. Linear
//! interferometers act by substitution, and [`expand_to_fock`] applies the
//! `(a†)^k|0⟩ = √(k!)|k⟩` normalization to reach occupation-number states.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{out_of_range, Error, Result};
use crate::interferometer::MultiportMatrix;
use crate::C64;

/// Coefficients below this magnitude are dropped on canonicalization.
pub const CANON_TOL: f64 = 1e-12;

/// Hard limit on the number of monomials an expansion may produce.
pub const TERM_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Polarization {
    H,
    V,
}

/// An optical mode: a port (1-based) and an optional polarization.
///
/// Modes order polarization first, so `h1 < h2 < v1`. Unpolarized modes are
/// used for number-encoded schemes and sort before both polarizations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mode {
    pub pol: Option<Polarization>,
    pub port: u16,
}

impl Mode {
    pub fn h(port: u16) -> Self {
        Mode { pol: Some(Polarization::H), port }
    }

    pub fn v(port: u16) -> Self {
        Mode { pol: Some(Polarization::V), port }
    }

    /// A mode without polarization.
    pub fn scalar(port: u16) -> Self {
        Mode { pol: None, port }
    }

    fn with_port(self, port: u16) -> Self {
        Mode { pol: self.pol, port }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.pol {
            Some(Polarization::H) => 'h',
            Some(Polarization::V) => 'v',
            None => 'd',
        };
        write!(f, "{tag}{}", self.port)
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut chars = s.chars();
        let pol = match chars.next() {
            Some('h') => Some(Polarization::H),
            Some('v') => Some(Polarization::V),
            Some('d') => None,
            _ => return Err(Error::Parse(format!("bad mode `{s}`"))),
        };
        let port: u16 = chars
            .as_str()
            .parse()
            .map_err(|_| Error::Parse(format!("bad port in `{s}`")))?;
        if port == 0 {
            return Err(Error::Parse(format!("ports are 1-based: `{s}`")));
        }
        Ok(Mode { pol, port })
    }
}

/// Sorted list of (mode, multiplicity) with every multiplicity ≥ 1.
///
/// Serves both as a creation-operator monomial and as a Fock occupation.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Occupation(Vec<(Mode, u32)>);

pub type Monomial = Occupation;
pub type FockState = Occupation;

impl Occupation {
    pub fn vacuum() -> Self {
        Occupation(Vec::new())
    }

    pub fn from_modes<I: IntoIterator<Item = Mode>>(modes: I) -> Self {
        let mut occ = Occupation::vacuum();
        for m in modes {
            occ.add(m, 1);
        }
        occ
    }

    pub fn from_counts<I: IntoIterator<Item = (Mode, u32)>>(counts: I) -> Self {
        let mut occ = Occupation::vacuum();
        for (m, k) in counts {
            occ.add(m, k);
        }
        occ
    }

    pub fn add(&mut self, mode: Mode, k: u32) {
        if k == 0 {
            return;
        }
        match self.0.binary_search_by(|(m, _)| m.cmp(&mode)) {
            Ok(i) => self.0[i].1 += k,
            Err(i) => self.0.insert(i, (mode, k)),
        }
    }

    pub fn with(&self, mode: Mode) -> Self {
        let mut o = self.clone();
        o.add(mode, 1);
        o
    }

    pub fn get(&self, mode: Mode) -> u32 {
        self.0
            .binary_search_by(|(m, _)| m.cmp(&mode))
            .map(|i| self.0[i].1)
            .unwrap_or(0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Mode, u32)> + '_ {
        self.0.iter().copied()
    }

    pub fn modes(&self) -> impl Iterator<Item = Mode> + '_ {
        self.0.iter().map(|(m, _)| *m)
    }

    pub fn total(&self) -> u32 {
        self.0.iter().map(|(_, k)| k).sum()
    }

    /// Number of distinct occupied modes.
    pub fn distinct(&self) -> usize {
        self.0.len()
    }

    pub fn max_occupation(&self) -> u32 {
        self.0.iter().map(|(_, k)| *k).max().unwrap_or(0)
    }

    pub fn max_port(&self) -> u16 {
        self.0.iter().map(|(m, _)| m.port).max().unwrap_or(0)
    }

    pub fn is_vacuum(&self) -> bool {
        self.0.is_empty()
    }

    /// √(Π k!), the factor relating a monomial to its normalized Fock state.
    pub fn bosonic_factor(&self) -> f64 {
        self.0
            .iter()
            .map(|&(_, k)| (1..=k).map(f64::from).product::<f64>())
            .product::<f64>()
            .sqrt()
    }

    pub fn shifted(&self, offset: u16) -> Self {
        Occupation(self.0.iter().map(|&(m, k)| (m.with_port(m.port + offset), k)).collect())
    }

    /// Photon count per polarization class.
    fn counts_by_pol(&self) -> BTreeMap<Option<Polarization>, u32> {
        let mut out = BTreeMap::new();
        for &(m, k) in &self.0 {
            *out.entry(m.pol).or_insert(0) += k;
        }
        out
    }

    fn merge(&self, other: &Self) -> Self {
        let mut o = self.clone();
        for &(m, k) in &other.0 {
            o.add(m, k);
        }
        o
    }
}

impl fmt::Display for Occupation {
    /// Writes `h1^2 h2 v1`; the vacuum prints as `vac`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "vac");
        }
        for (i, (m, k)) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{m}")?;
            if *k > 1 {
                write!(f, "^{k}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for Occupation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "vac" {
            return Ok(Occupation::vacuum());
        }
        let mut occ = Occupation::vacuum();
        for tok in s.split_whitespace() {
            let (mode, k) = match tok.split_once('^') {
                Some((m, k)) => (
                    m.parse::<Mode>()?,
                    k.parse::<u32>()
                        .map_err(|_| Error::Parse(format!("bad exponent in `{tok}`")))?,
                ),
                None => (tok.parse::<Mode>()?, 1),
            };
            occ.add(mode, k);
        }
        if occ.is_vacuum() {
            return Err(Error::Parse("empty pattern".into()));
        }
        Ok(occ)
    }
}

/// A sum of creation-operator monomials with complex coefficients.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhotonPolynomial {
    terms: BTreeMap<Monomial, C64>,
}

impl PhotonPolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(coeff: C64, m: Monomial) -> Self {
        let mut p = Self::zero();
        p.add_term(coeff, m);
        p.canonicalize();
        p
    }

    /// The Fock state `|occ⟩` written as `amp/√(Πk!) · Π (a†)^k`.
    pub fn from_fock(amp: C64, occ: &FockState) -> Self {
        Self::monomial(amp / occ.bosonic_factor(), occ.clone())
    }

    pub fn add_term(&mut self, coeff: C64, m: Monomial) {
        *self.terms.entry(m).or_insert(C64::new(0.0, 0.0)) += coeff;
    }

    /// Drops coefficients below [`CANON_TOL`].
    pub fn canonicalize(&mut self) {
        self.terms.retain(|_, c| c.norm() >= CANON_TOL);
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Monomial) -> C64 {
        self.terms.get(m).copied().unwrap_or_default()
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut p = self.clone();
        p.terms.values_mut().for_each(|c| *c *= s);
        p.canonicalize();
        p
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut p = self.clone();
        for (m, c) in &other.terms {
            p.add_term(*c, m.clone());
        }
        p.canonicalize();
        p
    }

    /// Upper bound on the monomials produced by routing through a `dim`-port device.
    pub fn expansion_estimate(&self, dim: usize) -> u128 {
        self.terms
            .keys()
            .map(|m| {
                m.counts_by_pol()
                    .values()
                    .map(|&n| binomial_u128(n as u128 + dim as u128 - 1, n as u128))
                    .fold(1u128, |a, b| a.saturating_mul(b))
            })
            .fold(0u128, |a, b| a.saturating_add(b))
    }

    /// Multiplies by the linear form `Σ_k row[k] b†_{pol,k+1}`.
    fn times_linear(&self, pol: Option<Polarization>, row: &[C64]) -> Self {
        let mut out = Self::zero();
        for (m, c) in &self.terms {
            for (k, u) in row.iter().enumerate() {
                if u.norm() < CANON_TOL {
                    continue;
                }
                out.add_term(c * u, m.with(Mode { pol, port: k as u16 + 1 }));
            }
        }
        out.canonicalize();
        out
    }
}

pub(crate) fn binomial_u128(n: u128, k: u128) -> u128 {
    let k = k.min(n.saturating_sub(k));
    let mut r: u128 = 1;
    for i in 0..k {
        r = r.saturating_mul(n - i) / (i + 1);
    }
    r
}

/// Replaces every input operator `a†_{p,j}` by `Σ_k inv[j][k] b†_{p,k}`.
///
/// `inverse` expresses input operators in terms of output operators, i.e. it
/// is `U⁻¹` for a device `b† = U a†`. Polarization is carried through.
pub fn apply_mode_transform(poly: &PhotonPolynomial, inverse: &MultiportMatrix) -> Result<PhotonPolynomial> {
    let dim = inverse.dim();
    for m in poly.terms.keys() {
        for mode in m.modes() {
            if mode.port == 0 || mode.port as usize > dim {
                return Err(Error::DimensionMismatch { port: mode.port, dim });
            }
        }
    }
    let estimate = poly.expansion_estimate(dim);
    if estimate > TERM_LIMIT {
        return Err(Error::Capacity { estimate, limit: TERM_LIMIT });
    }
    let mut out = PhotonPolynomial::zero();
    for (m, c) in &poly.terms {
        let mut acc = PhotonPolynomial::monomial(*c, Monomial::vacuum());
        for (mode, k) in m.iter() {
            let row = inverse.row(mode.port as usize - 1);
            for _ in 0..k {
                acc = acc.times_linear(mode.pol, row);
            }
        }
        for (mm, cc) in acc.terms {
            out.add_term(cc, mm);
        }
    }
    out.canonicalize();
    Ok(out)
}

/// Fixed-length atomic register; bit 0 of the string is the most significant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Register {
    pub bits: u64,
    pub len: usize,
}

impl Register {
    pub fn new(bits: u64, len: usize) -> Self {
        debug_assert!(len <= 63 && bits < (1u64 << len));
        Register { bits, len }
    }

    /// Value of atom `j` (0-based, leftmost first).
    pub fn bit(&self, j: usize) -> bool {
        (self.bits >> (self.len - 1 - j)) & 1 == 1
    }
}

impl fmt::Display for Register {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", bitstring(self.bits, self.len))
    }
}

impl FromStr for Register {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.is_empty() || s.len() > 63 || !s.chars().all(|c| c == '0' || c == '1') {
            return Err(Error::Parse(format!("bad bitstring `{s}`")));
        }
        Ok(Register::new(u64::from_str_radix(s, 2).unwrap(), s.len()))
    }
}

pub fn bitstring(bits: u64, len: usize) -> String {
    (0..len)
        .map(|j| if (bits >> (len - 1 - j)) & 1 == 1 { '1' } else { '0' })
        .collect()
}

/// Superposition of (atomic register ⊗ Fock state) terms.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    n_atoms: usize,
    terms: BTreeMap<(u64, FockState), C64>,
}

impl HybridState {
    pub fn new(n_atoms: usize) -> Self {
        HybridState { n_atoms, terms: BTreeMap::new() }
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn insert(&mut self, atoms: Register, photons: FockState, amp: C64) -> Result<()> {
        if atoms.len != self.n_atoms {
            return Err(Error::RegisterMismatch { expected: self.n_atoms, found: atoms.len });
        }
        *self.terms.entry((atoms.bits, photons)).or_default() += amp;
        Ok(())
    }

    pub fn canonicalize(&mut self) {
        self.terms.retain(|_, a| a.norm() >= CANON_TOL);
    }

    pub fn terms(&self) -> impl Iterator<Item = (Register, &FockState, C64)> + '_ {
        let n = self.n_atoms;
        self.terms.iter().map(move |((b, f), a)| (Register::new(*b, n), f, *a))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn amplitude(&self, atoms: Register, photons: &FockState) -> C64 {
        self.terms
            .get(&(atoms.bits, photons.clone()))
            .copied()
            .unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn max_port(&self) -> u16 {
        self.terms.keys().map(|(_, f)| f.max_port()).max().unwrap_or(0)
    }

    /// Set of modes occupied in any term.
    pub fn occupied_modes(&self) -> Vec<Mode> {
        let mut v: Vec<Mode> = self.terms.keys().flat_map(|(_, f)| f.modes()).collect();
        v.sort();
        v.dedup();
        v
    }
}

/// Maps each monomial to a Fock state with the bosonic normalization factor.
pub fn expand_to_fock(poly: &PhotonPolynomial, atoms: Register) -> HybridState {
    let mut out = HybridState::new(atoms.len);
    for (m, c) in poly.terms() {
        out.terms.insert((atoms.bits, m.clone()), c * m.bosonic_factor());
    }
    out
}

/// `⟨a|b⟩` summed over matching (register, Fock) keys.
pub fn inner_product(a: &HybridState, b: &HybridState) -> Result<C64> {
    if a.n_atoms != b.n_atoms {
        return Err(Error::RegisterMismatch { expected: a.n_atoms, found: b.n_atoms });
    }
    let mut s = C64::new(0.0, 0.0);
    for (k, x) in &a.terms {
        if let Some(y) = b.terms.get(k) {
            s += x.conj() * y;
        }
    }
    Ok(s)
}

/// Tensor product; `b`'s ports are shifted by `port_offset` when given.
pub fn tensor(a: &HybridState, b: &HybridState, port_offset: Option<u16>) -> Result<HybridState> {
    let shift = port_offset.unwrap_or(0);
    let a_modes = a.occupied_modes();
    for m in b.occupied_modes() {
        let m = m.with_port(m.port + shift);
        if a_modes.binary_search(&m).is_ok() {
            return Err(Error::PortCollision(m.to_string()));
        }
    }
    let n = a.n_atoms + b.n_atoms;
    if n > 63 {
        return Err(out_of_range("atoms", n, "at most 63"));
    }
    let mut out = HybridState::new(n);
    for ((ab, af), aa) in &a.terms {
        for ((bb, bf), ba) in &b.terms {
            let bits = (ab << b.n_atoms) | bb;
            let fock = af.merge(&bf.shifted(shift));
            *out.terms.entry((bits, fock)).or_default() += aa * ba;
        }
    }
    out.canonicalize();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interferometer::{beam_splitter, inverse, quarter};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn single_photon_through_bs() {
        let inv = inverse(&beam_splitter()).unwrap();
        let p = PhotonPolynomial::monomial(c(1.0, 0.0), Occupation::from_modes([Mode::h(1)]));
        let out = apply_mode_transform(&p, &inv).unwrap();
        assert_eq!(out.len(), 2);
        assert!(close(out.coeff(&Occupation::from_modes([Mode::h(1)])), c(FRAC_1_SQRT_2, 0.0)));
        assert!(close(out.coeff(&Occupation::from_modes([Mode::h(2)])), c(0.0, -FRAC_1_SQRT_2)));
    }

    #[test]
    fn hom_bunching() {
        let inv = inverse(&beam_splitter()).unwrap();
        let p = PhotonPolynomial::monomial(c(1.0, 0.0), Occupation::from_modes([Mode::h(1), Mode::h(2)]));
        let out = apply_mode_transform(&p, &inv).unwrap();
        // a1 a2 -> (b1 - i b2)(-i b1 + b2)/2 = -i/2 (b1² + b2²)
        assert_eq!(out.len(), 2);
        let half_i = c(0.0, -0.5);
        assert!(close(out.coeff(&Occupation::from_counts([(Mode::h(1), 2)])), half_i));
        assert!(close(out.coeff(&Occupation::from_counts([(Mode::h(2), 2)])), half_i));
        let fock = expand_to_fock(&out, Register::new(0, 0));
        assert!((fock.norm_sqr() - 1.0).abs() < 1e-12);
        for (_, _, a) in fock.terms() {
            assert!((a.norm_sqr() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn quarter_first_row() {
        let inv = inverse(&quarter()).unwrap();
        let p = PhotonPolynomial::monomial(c(1.0, 0.0), Occupation::from_modes([Mode::h(1)]));
        let out = apply_mode_transform(&p, &inv).unwrap();
        let want = [c(0.5, 0.0), c(0.0, -0.5), c(-0.5, 0.0), c(0.0, -0.5)];
        for (k, w) in want.iter().enumerate() {
            assert!(close(out.coeff(&Occupation::from_modes([Mode::h(k as u16 + 1)])), *w));
        }
    }

    #[test]
    fn dimension_mismatch_names_port() {
        let inv = inverse(&beam_splitter()).unwrap();
        let p = PhotonPolynomial::monomial(c(1.0, 0.0), Occupation::from_modes([Mode::v(3)]));
        match apply_mode_transform(&p, &inv) {
            Err(Error::DimensionMismatch { port: 3, dim: 2 }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fock_factors() {
        let p = PhotonPolynomial::monomial(c(1.0, 0.0), Occupation::from_modes([Mode::h(1), Mode::v(1)]));
        let f = expand_to_fock(&p, Register::new(0, 1));
        assert!(close(f.amplitude(Register::new(0, 1), &Occupation::from_modes([Mode::h(1), Mode::v(1)])), c(1.0, 0.0)));
        let p = PhotonPolynomial::monomial(c(1.0, 0.0), Occupation::from_counts([(Mode::h(1), 2)]));
        let f = expand_to_fock(&p, Register::new(0, 1));
        let a = f.amplitude(Register::new(0, 1), &Occupation::from_counts([(Mode::h(1), 2)]));
        assert!(close(a, c(2f64.sqrt(), 0.0)));
    }

    #[test]
    fn pattern_roundtrip() {
        let o: Occupation = "h1^2 h2 v1".parse().unwrap();
        assert_eq!(o.total(), 4);
        assert_eq!(o.to_string(), "h1^2 h2 v1");
        let o: Occupation = "v1 h2 h1^2".parse().unwrap();
        assert_eq!(o.to_string(), "h1^2 h2 v1");
        assert!("x1".parse::<Occupation>().is_err());
        assert!("h0".parse::<Occupation>().is_err());
    }

    fn bell(sign: f64) -> HybridState {
        let mut s = HybridState::new(1);
        let a = FRAC_1_SQRT_2;
        s.insert(Register::new(0, 1), Occupation::from_modes([Mode::h(1)]), c(a, 0.0)).unwrap();
        s.insert(Register::new(1, 1), Occupation::from_modes([Mode::v(1)]), c(sign * a, 0.0)).unwrap();
        s
    }

    #[test]
    fn tensor_products() {
        let mut z = HybridState::new(1);
        z.insert(Register::new(0, 1), Occupation::vacuum(), c(1.0, 0.0)).unwrap();
        let mut o = HybridState::new(1);
        o.insert(Register::new(1, 1), Occupation::vacuum(), c(1.0, 0.0)).unwrap();
        let t = tensor(&z, &o, None).unwrap();
        assert_eq!(t.len(), 1);
        assert!(close(t.amplitude("01".parse().unwrap(), &Occupation::vacuum()), c(1.0, 0.0)));

        let b = bell(1.0);
        assert!(matches!(tensor(&b, &b, None), Err(Error::PortCollision(_))));
        let two = tensor(&b, &b, Some(1)).unwrap();
        assert_eq!(two.len(), 4);
        for (_, _, a) in two.terms() {
            assert!(close(a, c(0.5, 0.0)));
        }
        let three = tensor(&two, &b, Some(2)).unwrap();
        let four = tensor(&three, &b, Some(3)).unwrap();
        assert_eq!(four.len(), 16);
        assert!((four.norm_sqr() - 1.0).abs() < 1e-12);
        for (_, _, a) in four.terms() {
            assert!(close(a, c(0.25, 0.0)));
        }
    }

    #[test]
    fn inner_products() {
        let p = bell(1.0);
        let m = bell(-1.0);
        assert!(close(inner_product(&p, &p).unwrap(), c(1.0, 0.0)));
        assert!(close(inner_product(&p, &m).unwrap(), c(0.0, 0.0)));
        assert!(inner_product(&p, &HybridState::new(2)).is_err());
    }

    #[test]
    fn capacity_guard() {
        let inv = inverse(&crate::interferometer::symmetric_multiport(5).unwrap()).unwrap();
        let modes: Vec<Mode> = (1..=16).map(Mode::h).collect();
        let p = PhotonPolynomial::monomial(c(1.0, 0.0), Occupation::from_modes(modes));
        assert!(matches!(apply_mode_transform(&p, &inv), Err(Error::Capacity { .. })));
    }
}
