//! Heralding simulation: entanglement swapping through a generalized Bell
//! analyser and which-path erasing.
//!
//! Every enumeration keys rows by the exact output Fock occupation. Threshold
//! detection is a coarsening applied afterwards, so one table serves both
//! detector models.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{check_unit, out_of_range, Error, Result};
use crate::exec::Exec;
use crate::interferometer::{inverse, MultiportMatrix};
use crate::photonics::{
    apply_mode_transform, FockState, HybridState, Mode, Occupation, PhotonPolynomial, Polarization, Register,
    CANON_TOL, TERM_LIMIT,
};
use crate::states::{dicke_state, QubitState, Sign};
use crate::C64;

/// Largest atomic register handled by the dense projection.
pub const MAX_ATOMS: usize = 16;

/// Detector clicks: photon count per output mode.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DetectionPattern(FockState);

impl DetectionPattern {
    pub fn new(occ: FockState) -> Self {
        DetectionPattern(occ)
    }

    pub fn occupation(&self) -> &FockState {
        &self.0
    }

    /// Photons registered by number-resolving detectors.
    pub fn total(&self) -> u32 {
        self.0.total()
    }

    /// Detectors that fired at all.
    pub fn detectors_fired(&self) -> u32 {
        self.0.distinct() as u32
    }

    pub fn max_per_detector(&self) -> u32 {
        self.0.max_occupation()
    }
}

impl fmt::Display for DetectionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl FromStr for DetectionPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(DetectionPattern(s.parse()?))
    }
}

/// A detection pattern, the normalized atomic state it projects onto, and its probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionRow {
    pub pattern: DetectionPattern,
    pub state: QubitState,
    pub probability: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectorModel {
    Threshold,
    NumberResolved,
}

impl DetectorModel {
    /// Clicks the model reports for a pattern.
    pub fn observed_clicks(self, p: &DetectionPattern) -> u32 {
        match self {
            DetectorModel::Threshold => p.detectors_fired(),
            DetectorModel::NumberResolved => p.total(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EntanglementFilter {
    /// Accept every projected state.
    Any,
    /// No bipartition leaves a pure reduced state.
    #[default]
    Genuine,
    /// At least one qubit is entangled with the rest.
    NotFullySeparable,
}

impl EntanglementFilter {
    pub fn passes(self, s: &QubitState) -> bool {
        match self {
            EntanglementFilter::Any => true,
            EntanglementFilter::Genuine => s.is_genuinely_entangled(),
            EntanglementFilter::NotFullySeparable => s.is_entangled(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeraldRule {
    pub required_clicks: u32,
    pub distinct_detectors_only: bool,
    pub filter: EntanglementFilter,
}

impl HeraldRule {
    pub fn new(required_clicks: u32, distinct_detectors_only: bool) -> Self {
        HeraldRule { required_clicks, distinct_detectors_only, filter: EntanglementFilter::default() }
    }

    pub fn with_filter(mut self, filter: EntanglementFilter) -> Self {
        self.filter = filter;
        self
    }

    pub fn accepts(&self, pattern: &DetectionPattern, model: DetectorModel) -> bool {
        model.observed_clicks(pattern) == self.required_clicks
            && (!self.distinct_detectors_only || pattern.max_per_detector() < 2)
    }
}

/// `⊗_n (|0⟩ a†_{h,n} ± |1⟩ a†_{v,n})/√2 |vac⟩` with photon `n` on port `n`.
pub fn prepare_swap_input(n: usize, signs: &[Sign]) -> Result<HybridState> {
    if !(2..=8).contains(&n) {
        return Err(out_of_range("N", n, "2..=8"));
    }
    let ports: Vec<u16> = (1..=n as u16).collect();
    prepare_swap_input_on(signs, &ports)
}

/// As [`prepare_swap_input`], with atom `j`'s photon entering `ports[j]`.
pub fn prepare_swap_input_on(signs: &[Sign], ports: &[u16]) -> Result<HybridState> {
    let n = ports.len();
    if signs.len() != n {
        return Err(out_of_range("signs", signs.len(), "one sign per pair"));
    }
    if n == 0 || n > MAX_ATOMS {
        return Err(out_of_range("pairs", n, "1..=16"));
    }
    let distinct: BTreeSet<u16> = ports.iter().copied().collect();
    if distinct.len() != n || ports.contains(&0) {
        return Err(out_of_range("ports", format!("{ports:?}"), "distinct 1-based ports"));
    }
    let amp = 2f64.powf(-(n as f64) / 2.0);
    let mut s = HybridState::new(n);
    for bits in 0..1u64 << n {
        let reg = Register::new(bits, n);
        let mut a = amp;
        let mut modes = Vec::with_capacity(n);
        for (j, &port) in ports.iter().enumerate() {
            if reg.bit(j) {
                a *= signs[j].value();
                modes.push(Mode::v(port));
            } else {
                modes.push(Mode::h(port));
            }
        }
        s.insert(reg, Occupation::from_modes(modes), C64::new(a, 0.0))?;
    }
    Ok(s)
}

/// Routes every photonic term through `u` and groups by output pattern.
/// Rows with no amplitude above the canonicalization tolerance are dropped.
fn project(input: &HybridState, u: &MultiportMatrix, exec: Exec) -> Result<Vec<ProjectionRow>> {
    let n = input.n_atoms();
    if n > MAX_ATOMS {
        return Err(out_of_range("atoms", n, "at most 16"));
    }
    let dim = u.dim();
    let port = input.max_port();
    if port as usize > dim {
        return Err(Error::DimensionMismatch { port, dim });
    }
    let inv = inverse(u)?;
    let terms: Vec<(u64, PhotonPolynomial)> = input
        .terms()
        .map(|(r, f, a)| (r.bits, PhotonPolynomial::from_fock(a, f)))
        .collect();
    let estimate = terms
        .iter()
        .map(|(_, p)| p.expansion_estimate(dim))
        .fold(0u128, |a, b| a.saturating_add(b));
    if estimate > TERM_LIMIT {
        return Err(Error::Capacity { estimate, limit: TERM_LIMIT });
    }

    let outputs = exec.map(&terms, |(_, poly)| -> Result<Vec<(FockState, C64)>> {
        let out = apply_mode_transform(poly, &inv)?;
        Ok(out.terms().map(|(m, c)| (m.clone(), c * m.bosonic_factor())).collect())
    });

    let width = 1usize << n;
    let mut groups: BTreeMap<FockState, Vec<C64>> = BTreeMap::new();
    for ((bits, _), out) in terms.iter().zip(outputs) {
        for (fock, amp) in out? {
            groups.entry(fock).or_insert_with(|| vec![C64::new(0.0, 0.0); width])[*bits as usize] += amp;
        }
    }

    let mut rows = Vec::with_capacity(groups.len());
    for (fock, amps) in groups {
        if amps.iter().all(|a| a.norm() < CANON_TOL) {
            continue;
        }
        let probability = amps.iter().map(|a| a.norm_sqr()).sum();
        rows.push(ProjectionRow {
            pattern: DetectionPattern(fock),
            state: QubitState::from_amplitudes(n, amps)?,
            probability,
        });
    }
    Ok(rows)
}

/// Full detection-pattern table for `input` sent through `u`, sorted by pattern.
pub fn run_gbsa(input: &HybridState, u: &MultiportMatrix) -> Result<Vec<ProjectionRow>> {
    run_gbsa_with(input, u, Exec::default())
}

pub fn run_gbsa_with(input: &HybridState, u: &MultiportMatrix, exec: Exec) -> Result<Vec<ProjectionRow>> {
    let mut rows = project(input, u, exec)?;
    rows.retain(|r| !r.pattern.occupation().is_vacuum());
    Ok(rows)
}

/// Patterns with `total_clicks` photons that some input term could reach
/// mode by mode, yet whose amplitude cancels.
pub fn suppressed_patterns(input: &HybridState, u: &MultiportMatrix, total_clicks: u32) -> Result<Vec<DetectionPattern>> {
    let present: BTreeSet<DetectionPattern> = run_gbsa(input, u)?.into_iter().map(|r| r.pattern).collect();
    let inv = inverse(u)?;
    let sources: BTreeSet<FockState> = input
        .terms()
        .filter(|(_, f, _)| f.total() == total_clicks)
        .map(|(_, f, _)| f.clone())
        .collect();
    let pols: BTreeSet<Option<Polarization>> = sources.iter().flat_map(|f| f.modes().map(|m| m.pol)).collect();
    let outputs: Vec<Mode> = pols
        .iter()
        .flat_map(|&pol| (1..=u.dim() as u16).map(move |port| Mode { pol, port }))
        .collect();

    let mut out = Vec::new();
    for_each_multiset(&outputs, total_clicks as usize, &mut |slots| {
        let pattern = DetectionPattern(Occupation::from_modes(slots.iter().copied()));
        if present.contains(&pattern) {
            return;
        }
        if sources.iter().any(|src| reachable(src, slots, &inv)) {
            out.push(pattern);
        }
    });
    out.sort();
    Ok(out)
}

fn for_each_multiset(items: &[Mode], k: usize, f: &mut dyn FnMut(&[Mode])) {
    fn rec(items: &[Mode], start: usize, k: usize, cur: &mut Vec<Mode>, f: &mut dyn FnMut(&[Mode])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..items.len() {
            cur.push(items[i]);
            rec(items, i, k, cur, f);
            cur.pop();
        }
    }
    rec(items, 0, k, &mut Vec::with_capacity(k), f);
}

/// Whether the photons of `src` can be assigned one-to-one to `slots` through
/// nonzero, polarization-preserving matrix elements.
fn reachable(src: &FockState, slots: &[Mode], inv: &MultiportMatrix) -> bool {
    let photons: Vec<Mode> = src.iter().flat_map(|(m, k)| std::iter::repeat_n(m, k as usize)).collect();
    if photons.len() != slots.len() {
        return false;
    }
    let edge = |p: Mode, s: Mode| p.pol == s.pol && inv.get(p.port as usize - 1, s.port as usize - 1).norm() > CANON_TOL;
    let mut owner: Vec<Option<usize>> = vec![None; slots.len()];
    fn augment(
        p: usize,
        photons: &[Mode],
        slots: &[Mode],
        seen: &mut [bool],
        owner: &mut [Option<usize>],
        edge: &dyn Fn(Mode, Mode) -> bool,
    ) -> bool {
        for s in 0..slots.len() {
            if seen[s] || !edge(photons[p], slots[s]) {
                continue;
            }
            seen[s] = true;
            if owner[s].is_none() || augment(owner[s].unwrap(), photons, slots, seen, owner, edge) {
                owner[s] = Some(p);
                return true;
            }
        }
        false
    }
    (0..photons.len()).all(|p| {
        let mut seen = vec![false; slots.len()];
        augment(p, &photons, slots, &mut seen, &mut owner, &edge)
    })
}

/// Total probability of rows accepted by the detector model and herald rule
/// whose projected state also passes the rule's entanglement filter.
pub fn aggregate_heralding(rows: &[ProjectionRow], model: DetectorModel, rule: &HeraldRule) -> f64 {
    rows.iter()
        .filter(|r| rule.accepts(&r.pattern, model) && rule.filter.passes(&r.state))
        .map(|r| r.probability)
        .sum()
}

/// `m` Bell pairs on input ports `1..=m` of `u`, the rest left in vacuum.
pub fn subnetwork_swap(m: usize, u: &MultiportMatrix) -> Result<Vec<ProjectionRow>> {
    if m < 2 || m > u.dim() {
        return Err(out_of_range("m", m, "2..=dim"));
    }
    let ports: Vec<u16> = (1..=m as u16).collect();
    subnetwork_swap_on(&ports, u)
}

pub fn subnetwork_swap_on(ports: &[u16], u: &MultiportMatrix) -> Result<Vec<ProjectionRow>> {
    if ports.len() < 2 || ports.iter().any(|&p| p as usize > u.dim()) {
        return Err(out_of_range("ports", format!("{ports:?}"), "at least two ports within the device"));
    }
    let input = prepare_swap_input_on(&vec![Sign::Plus; ports.len()], ports)?;
    run_gbsa(&input, u)
}

/// Post-excitation state `⊗_n (√(1−p)|0, vac⟩ + √p e^{iφ_n}|1, 1_n⟩)`, one
/// unpolarized photonic mode per atom.
pub fn wpe_state(n: usize, p: f64, phases: &[f64]) -> Result<HybridState> {
    if !(1..=8).contains(&n) {
        return Err(out_of_range("N", n, "1..=8"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(out_of_range("p", p, "(0, 1)"));
    }
    if phases.len() != n {
        return Err(out_of_range("phases", phases.len(), "one phase per atom"));
    }
    let (g, e) = ((1.0 - p).sqrt(), p.sqrt());
    let mut s = HybridState::new(n);
    for bits in 0..1u64 << n {
        let reg = Register::new(bits, n);
        let mut amp = C64::new(1.0, 0.0);
        let mut modes = Vec::new();
        for (j, phi) in phases.iter().enumerate() {
            if reg.bit(j) {
                amp *= C64::from_polar(e, *phi);
                modes.push(Mode::scalar(j as u16 + 1));
            } else {
                amp *= g;
            }
        }
        s.insert(reg, Occupation::from_modes(modes), amp)?;
    }
    Ok(s)
}

/// Largest deviation between each photon-number sector of [`wpe_state`] and
/// `√(C(N,k) p^k (1−p)^{N−k}) · dicke_state(k, N, phases)`.
pub fn wpe_dicke_residual(n: usize, p: f64, phases: &[f64]) -> Result<f64> {
    let s = wpe_state(n, p, phases)?;
    let mut worst: f64 = 0.0;
    for k in 0..=n {
        let mut sector = vec![C64::new(0.0, 0.0); 1usize << n];
        for (reg, fock, a) in s.terms() {
            if fock.total() as usize == k {
                sector[reg.bits as usize] += a;
            }
        }
        let weight = (crate::states::binomial(n as u64, k as u64) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)).sqrt();
        let d = dicke_state(k, n, phases)?;
        let r: f64 = sector
            .iter()
            .zip(d.amplitudes())
            .map(|(x, y)| (x - y * weight).norm_sqr())
            .sum::<f64>()
            .sqrt();
        worst = worst.max(r);
    }
    Ok(worst)
}

/// A which-path-erasing row with its heralding bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct WpeRow {
    pub row: ProjectionRow,
    /// Photons emitted for this pattern.
    pub photons: u32,
    /// Clicks the detector model reports without loss.
    pub observed_clicks: u32,
    /// `observed_clicks == m`.
    pub accepted: bool,
    /// Weight of the projected state on the `m`-excitation Dicke subspace.
    pub target_fidelity: f64,
}

/// Routes the photonic modes through the eraser `u` and returns every pattern
/// with at least `m` photons, since with lossy detectors each of them can
/// yield an `m`-click herald.
pub fn wpe_herald(state: &HybridState, u: &MultiportMatrix, m: u32, model: DetectorModel) -> Result<Vec<WpeRow>> {
    wpe_herald_with(state, u, m, model, Exec::default())
}

pub fn wpe_herald_with(
    state: &HybridState,
    u: &MultiportMatrix,
    m: u32,
    model: DetectorModel,
    exec: Exec,
) -> Result<Vec<WpeRow>> {
    if m == 0 {
        return Err(out_of_range("m", m, "at least 1"));
    }
    let rows = project(state, u, exec)?;
    Ok(rows
        .into_iter()
        .filter(|r| r.pattern.total() >= m)
        .map(|row| {
            let observed_clicks = model.observed_clicks(&row.pattern);
            let target_fidelity = excitation_weight(&row.state, m);
            WpeRow { photons: row.pattern.total(), observed_clicks, accepted: observed_clicks == m, target_fidelity, row }
        })
        .collect())
}

fn excitation_weight(s: &QubitState, m: u32) -> f64 {
    s.amplitudes()
        .iter()
        .enumerate()
        .filter(|(i, _)| (*i as u64).count_ones() == m)
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

/// Heralding figures obtained by brute-force enumeration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WpeSimulation {
    /// Probability that at least `m` photons are emitted.
    pub herald_probability: f64,
    /// Fidelity of an `m`-click herald when any `n ≥ m` photons can produce it.
    pub fidelity: f64,
    /// Fidelity with lossless threshold detectors (exactly `m` detectors fire);
    /// `None` when interference forbids `m` distinct clicks.
    pub threshold_fidelity: Option<f64>,
}

impl WpeSimulation {
    pub fn rate(&self, m: u32, eta_det: f64) -> f64 {
        eta_det.powi(m as i32) * self.herald_probability
    }
}

pub fn wpe_simulate(n: usize, m: u32, p: f64, phases: &[f64], u: &MultiportMatrix, exec: Exec) -> Result<WpeSimulation> {
    if m == 0 || m as usize > n {
        return Err(out_of_range("m", m, "1..=N"));
    }
    check_unit("p", p)?;
    let state = wpe_state(n, p, phases)?;
    let rows = wpe_herald_with(&state, u, m, DetectorModel::Threshold, exec)?;
    let herald_probability: f64 = rows.iter().map(|r| r.row.probability).sum();
    let good: f64 = rows.iter().map(|r| r.row.probability * r.target_fidelity).sum();
    let (acc, acc_good) = rows
        .iter()
        .filter(|r| r.accepted)
        .fold((0.0, 0.0), |(a, g), r| (a + r.row.probability, g + r.row.probability * r.target_fidelity));
    if herald_probability == 0.0 {
        return Err(Error::ZeroDenominator("herald probability"));
    }
    let threshold_fidelity = (acc > CANON_TOL).then(|| acc_good / acc);
    Ok(WpeSimulation { herald_probability, fidelity: good / herald_probability, threshold_fidelity })
}

/// Among rows carrying exactly `photons` photons, the probability share in
/// which every photon reaches a different detector.
pub fn distinct_detector_fraction(rows: &[ProjectionRow], photons: u32) -> f64 {
    let (all, distinct) = rows
        .iter()
        .filter(|r| r.pattern.total() == photons)
        .fold((0.0, 0.0), |(a, d), r| {
            let hit = if r.pattern.max_per_detector() < 2 { r.probability } else { 0.0 };
            (a + r.probability, d + hit)
        });
    if all == 0.0 {
        0.0
    } else {
        distinct / all
    }
}

/// All rows of the WPE enumeration, vacuum included.
pub fn wpe_table(state: &HybridState, u: &MultiportMatrix) -> Result<Vec<ProjectionRow>> {
    project(state, u, Exec::default())
}
