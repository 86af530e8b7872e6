//! Shared helpers for integration tests: a brute-force swap oracle and
//! golden-file access.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use heralded::interferometer::MultiportMatrix;
use heralded::C64;

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join("golden").join(name)
}

/// Pattern name built from sorted (polarization, port) pairs, `h` before `v`.
pub fn pattern_name(modes: &[(u8, usize)]) -> String {
    let mut counts: BTreeMap<(u8, usize), u32> = BTreeMap::new();
    for m in modes {
        *counts.entry(*m).or_default() += 1;
    }
    counts
        .iter()
        .map(|(&(pol, port), &k)| {
            let tag = if pol == 0 { 'h' } else { 'v' };
            if k > 1 {
                format!("{tag}{}^{k}", port + 1)
            } else {
                format!("{tag}{}", port + 1)
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Entanglement swapping computed by summing over every assignment of the
/// N photons to output ports: amplitude `Π_j conj(U[k_j][j])` times the sign
/// product, times `√(Π mult!)` for the resulting occupation.
///
/// Returns pattern → (probability, unnormalized atomic amplitudes).
pub fn brute_force_swap(u: &MultiportMatrix, n: usize, signs: &[f64]) -> BTreeMap<String, (f64, Vec<C64>)> {
    let dim = u.dim();
    let uinv = |j: usize, k: usize| u.get(k, j).conj();
    let mut acc: BTreeMap<Vec<(u8, usize)>, Vec<C64>> = BTreeMap::new();
    let norm = 2f64.powf(-(n as f64) / 2.0);
    for atoms in 0..1usize << n {
        let bit = |j: usize| ((atoms >> (n - 1 - j)) & 1) as u8;
        let sign: f64 = (0..n).filter(|&j| bit(j) == 1).map(|j| signs[j]).product();
        let total = dim.pow(n as u32);
        for mut code in 0..total {
            let mut c = C64::new(norm * sign, 0.0);
            let mut modes = Vec::with_capacity(n);
            for j in 0..n {
                let k = code % dim;
                code /= dim;
                c *= uinv(j, k);
                modes.push((bit(j), k));
            }
            modes.sort();
            acc.entry(modes).or_insert_with(|| vec![C64::new(0.0, 0.0); 1 << n])[atoms] += c;
        }
    }
    let mut out = BTreeMap::new();
    for (modes, amps) in acc {
        let mut counts: BTreeMap<(u8, usize), u32> = BTreeMap::new();
        for m in &modes {
            *counts.entry(*m).or_default() += 1;
        }
        let fac: f64 = counts.values().map(|&k| (1..=k).map(f64::from).product::<f64>()).product();
        let amps: Vec<C64> = amps.into_iter().map(|a| a * fac.sqrt()).collect();
        let p: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if p > 1e-20 {
            out.insert(pattern_name(&modes), (p, amps));
        }
    }
    out
}

pub fn overlap_fidelity(a: &[C64], b: &[C64]) -> f64 {
    let na: f64 = a.iter().map(|x| x.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|x| x.norm_sqr()).sum();
    let ip: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    ip.norm_sqr() / (na * nb)
}

/// Writes one line to the real stderr, bypassing libtest's capture.
pub fn report(line: &str) {
    use std::io::Write;
    let mut e = std::io::stderr().lock();
    let _ = writeln!(e, "{line}");
}
