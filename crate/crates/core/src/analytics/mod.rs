//! Closed-form fidelity, rate and success-probability formulas.
//!
//! Rates that are only known up to a constant come back as a
//! [`FidelityResult`] with `is_proportional` set; the value is the variable
//! part with a unit constant.

mod itinerant;

pub use itinerant::{
    calibrate_depolarizing, itinerant_ghz_fidelity_closed_form, itinerant_ghz_fidelity_sim,
    itinerant_ghz_fidelity_sim_with, MIN_CALIBRATABLE_F_PA,
};

use serde::Serialize;

use crate::error::{check_unit, out_of_range, Error, Result};
use crate::exec::Exec;
use crate::states::{binomial, dicke_state, QubitState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FidelityResult {
    pub value: f64,
    pub is_proportional: bool,
}

impl FidelityResult {
    pub fn exact(value: f64) -> Self {
        FidelityResult { value, is_proportional: false }
    }

    pub fn proportional(value: f64) -> Self {
        FidelityResult { value, is_proportional: true }
    }
}

/// Efficiencies, probabilities and rates shared by the schemes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemeParams {
    pub eta_det: f64,
    pub eta_abs: f64,
    pub eta_t: f64,
    pub eta_c: f64,
    pub eta_p: f64,
    pub eta_out: f64,
    pub eta_net: f64,
    /// Absorption-side efficiency of the single-photon schemes, written η_ENT
    /// for two nodes and P_ENT for many; one symbol covers both.
    pub eta_ent: f64,
    pub eta_a0an: f64,
    pub p: f64,
    pub p_epr: f64,
    pub p_ghz_n: f64,
    pub p_dark: f64,
    pub p_real: f64,
    pub f_pa: f64,
    pub f_ph: f64,
    pub r_t: f64,
}

impl Default for SchemeParams {
    fn default() -> Self {
        SchemeParams {
            eta_det: 1.0,
            eta_abs: 1.0,
            eta_t: 1.0,
            eta_c: 1.0,
            eta_p: 1.0,
            eta_out: 1.0,
            eta_net: 1.0,
            eta_ent: 1.0,
            eta_a0an: 1.0,
            p: 0.5,
            p_epr: 1.0,
            p_ghz_n: 1.0,
            p_dark: 0.0,
            p_real: 1.0,
            f_pa: 1.0,
            f_ph: 1.0,
            r_t: 1.0,
        }
    }
}

impl SchemeParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("eta_det", self.eta_det),
            ("eta_abs", self.eta_abs),
            ("eta_t", self.eta_t),
            ("eta_c", self.eta_c),
            ("eta_p", self.eta_p),
            ("eta_out", self.eta_out),
            ("eta_net", self.eta_net),
            ("eta_ent", self.eta_ent),
            ("eta_a0an", self.eta_a0an),
            ("p", self.p),
            ("p_epr", self.p_epr),
            ("p_ghz_n", self.p_ghz_n),
            ("p_dark", self.p_dark),
            ("p_real", self.p_real),
            ("f_pa", self.f_pa),
            ("f_ph", self.f_ph),
        ];
        for (name, v) in fields {
            check_unit(name, v)?;
        }
        if !(self.r_t >= 0.0 && self.r_t.is_finite()) {
            return Err(out_of_range("r_t", self.r_t, "a nonnegative rate"));
        }
        Ok(())
    }
}

fn check_nodes(n: usize, min: usize) -> Result<()> {
    if n < min || n > 64 {
        return Err(out_of_range("N", n, "a supported node count"));
    }
    Ok(())
}

/// `(1 + √η)² / 4`.
pub fn st_fidelity_2(eta: f64) -> Result<FidelityResult> {
    check_unit("eta", eta)?;
    Ok(FidelityResult::exact(0.25 * (1.0 + eta.sqrt()).powi(2)))
}

/// `η_P η_OUT η_NET η_ENT η_DET`.
pub fn st_rate_2(params: &SchemeParams) -> Result<FidelityResult> {
    params.validate()?;
    Ok(FidelityResult::proportional(
        params.eta_p * params.eta_out * params.eta_net * params.eta_ent * params.eta_det,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StNode {
    pub state: QubitState,
    pub fidelity: FidelityResult,
    pub rate: FidelityResult,
}

/// Single-photon scheme across `n` nodes: the one-excitation W state.
pub fn st_n_node(params: &SchemeParams, n: usize) -> Result<StNode> {
    params.validate()?;
    check_nodes(n, 2)?;
    Ok(StNode {
        state: dicke_state(1, n, &vec![0.0; n])?,
        fidelity: FidelityResult::proportional(params.eta_a0an),
        rate: FidelityResult::proportional(
            params.eta_p * params.eta_out * params.eta_net * params.eta_a0an * params.eta_ent * params.eta_det,
        ),
    })
}

/// `2 F_PA − 1`, clamped to [0, 1].
pub fn itinerant_fidelity_2(f_pa: f64) -> Result<f64> {
    if !(0.5..=1.0).contains(&f_pa) {
        return Err(out_of_range("f_pa", f_pa, "[0.5, 1]"));
    }
    Ok((2.0 * f_pa - 1.0).clamp(0.0, 1.0))
}

/// `η_T^{N−1} η_C^N η_DET`.
pub fn itinerant_success(n: usize, eta_t: f64, eta_c: f64, eta_det: f64) -> Result<FidelityResult> {
    check_nodes(n, 2)?;
    check_unit("eta_t", eta_t)?;
    check_unit("eta_c", eta_c)?;
    check_unit("eta_det", eta_det)?;
    Ok(FidelityResult::proportional(
        eta_t.powi(n as i32 - 1) * eta_c.powi(n as i32) * eta_det,
    ))
}

/// `p (½ η_ABS η_DET)^N` with `p = p_EPR` for two nodes and `p_GHZ,N` beyond.
pub fn em_success(n: usize, params: &SchemeParams) -> Result<FidelityResult> {
    params.validate()?;
    check_nodes(n, 2)?;
    let source = if n == 2 { params.p_epr } else { params.p_ghz_n };
    Ok(FidelityResult::proportional(
        source * (0.5 * params.eta_abs * params.eta_det).powi(n as i32),
    ))
}

/// Probability that `N` herald clicks include at least one dark count:
/// `Σ_{n=0}^{N−1} C(N,n) p_real^n p_dark^{N−n}`.
pub fn em_false_herald(n: usize, p_real: f64, p_dark: f64) -> Result<f64> {
    check_nodes(n, 1)?;
    check_unit("p_real", p_real)?;
    check_unit("p_dark", p_dark)?;
    let n64 = n as u64;
    Ok((0..n64)
        .map(|k| binomial(n64, k) * p_real.powi(k as i32) * p_dark.powi((n64 - k) as i32))
        .sum())
}

/// `(F_ph p_em + 2^{−N} p_false) / (p_em + p_false)`.
pub fn em_fidelity(n: usize, f_ph: f64, p_em: f64, p_false: f64) -> Result<f64> {
    check_nodes(n, 2)?;
    check_unit("f_ph", f_ph)?;
    check_unit("p_em", p_em)?;
    check_unit("p_false", p_false)?;
    let den = p_em + p_false;
    if den == 0.0 {
        return Err(Error::ZeroDenominator("em_fidelity"));
    }
    Ok((f_ph * p_em + 2f64.powi(-(n as i32)) * p_false) / den)
}

fn check_wpe(m: usize, n: usize, p: f64) -> Result<()> {
    check_nodes(n, 1)?;
    if m < 1 || m > n {
        return Err(out_of_range("m", m, "1..=N"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(out_of_range("p", p, "(0, 1)"));
    }
    Ok(())
}

fn emission(n: usize, k: usize, p: f64) -> f64 {
    binomial(n as u64, k as u64) * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}

/// `C(N,m) p^m (1−p)^{N−m} / Σ_{n≥m} C(N,n) p^n (1−p)^{N−n}`.
pub fn wpe_fidelity(m: usize, n: usize, p: f64) -> Result<f64> {
    check_wpe(m, n, p)?;
    let den: f64 = (m..=n).map(|k| emission(n, k, p)).sum();
    Ok(emission(n, m, p) / den)
}

/// `η^m Σ_{n≥m} C(N,n) p^n (1−p)^{N−n}`.
pub fn wpe_rate(m: usize, n: usize, p: f64, eta_det: f64) -> Result<FidelityResult> {
    check_wpe(m, n, p)?;
    check_unit("eta_det", eta_det)?;
    let s: f64 = (m..=n).map(|k| emission(n, k, p)).sum();
    Ok(FidelityResult::proportional(eta_det.powi(m as i32) * s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WpeSweepRow {
    pub p: f64,
    pub m: usize,
    pub fidelity: f64,
    pub rate: f64,
}

/// Rows ordered by `p`, then by `m` in the order given.
pub fn wpe_fidelity_sweep(n: usize, m_list: &[usize], p_grid: &[f64], eta_det: f64) -> Result<Vec<WpeSweepRow>> {
    wpe_fidelity_sweep_with(n, m_list, p_grid, eta_det, Exec::default())
}

pub fn wpe_fidelity_sweep_with(
    n: usize,
    m_list: &[usize],
    p_grid: &[f64],
    eta_det: f64,
    exec: Exec,
) -> Result<Vec<WpeSweepRow>> {
    if m_list.is_empty() || p_grid.is_empty() {
        return Err(out_of_range("grid", 0, "a nonempty grid"));
    }
    let points: Vec<(f64, usize)> = p_grid.iter().flat_map(|&p| m_list.iter().map(move |&m| (p, m))).collect();
    exec.map(&points, |&(p, m)| {
        Ok(WpeSweepRow { p, m, fidelity: wpe_fidelity(m, n, p)?, rate: wpe_rate(m, n, p, eta_det)?.value })
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    pub eta: f64,
    /// `½ η² r_T`.
    pub r_bell: f64,
    /// Upper bound for four nodes built from pairs, `R_Bell / 4`.
    pub r_bell_chain: f64,
    /// `(7/32) η⁴ r_T`.
    pub r_quad: f64,
    /// η at which `R_Bell / 4 = R_Quad`.
    pub crossover_eta: f64,
}

pub const P_BSA_QUARTER: f64 = 7.0 / 32.0;

pub fn compare_4node(eta_det: f64, r_t: f64) -> Result<Comparison> {
    check_unit("eta_det", eta_det)?;
    if !(r_t >= 0.0 && r_t.is_finite()) {
        return Err(out_of_range("r_t", r_t, "a nonnegative rate"));
    }
    let r_bell = 0.5 * eta_det.powi(2) * r_t;
    Ok(Comparison {
        eta: eta_det,
        r_bell,
        r_bell_chain: r_bell / 4.0,
        r_quad: P_BSA_QUARTER * eta_det.powi(4) * r_t,
        crossover_eta: ((0.5 / 4.0) / P_BSA_QUARTER).sqrt(),
    })
}

pub fn compare_sweep(eta_grid: &[f64], r_t: f64, exec: Exec) -> Result<Vec<Comparison>> {
    if eta_grid.is_empty() {
        return Err(out_of_range("grid", 0, "a nonempty grid"));
    }
    exec.map(eta_grid, |&e| compare_4node(e, r_t)).into_iter().collect()
}

/// `p_BSA η^N`.
pub fn swap_rate(n: usize, p_bsa: f64, eta_det: f64) -> Result<FidelityResult> {
    check_nodes(n, 2)?;
    check_unit("p_bsa", p_bsa)?;
    check_unit("eta_det", eta_det)?;
    Ok(FidelityResult::proportional(p_bsa * eta_det.powi(n as i32)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_photon_two_nodes() {
        assert_eq!(st_fidelity_2(1.0).unwrap().value, 1.0);
        assert_eq!(st_fidelity_2(0.0).unwrap().value, 0.25);
        assert_abs_diff_eq!(st_fidelity_2(0.81).unwrap().value, 0.9025, epsilon = 1e-12);
        assert!(st_fidelity_2(1.1).is_err());

        let unit = SchemeParams::default();
        let r = st_rate_2(&unit).unwrap();
        assert!(r.is_proportional && r.value == 1.0);
        let p = SchemeParams { eta_p: 0.5, eta_out: 0.9, eta_net: 0.8, eta_ent: 0.02, eta_det: 0.5, ..unit };
        assert_abs_diff_eq!(st_rate_2(&p).unwrap().value, 0.0036, epsilon = 1e-15);
        let z = SchemeParams { eta_ent: 0.0, ..unit };
        assert_eq!(st_rate_2(&z).unwrap().value, 0.0);
    }

    #[test]
    fn single_photon_many_nodes() {
        let p = SchemeParams { eta_a0an: 0.5, ..Default::default() };
        let s = st_n_node(&p, 3).unwrap();
        assert_eq!(s.fidelity.value, 0.5);
        let w = dicke_state(1, 3, &[0.0; 3]).unwrap();
        assert_abs_diff_eq!(crate::states::fidelity(&s.state, &w).unwrap(), 1.0, epsilon = 1e-12);
        assert!(st_n_node(&p, 1).is_err());
    }

    #[test]
    fn itinerant_formulas() {
        assert_eq!(itinerant_fidelity_2(1.0).unwrap(), 1.0);
        assert_abs_diff_eq!(itinerant_fidelity_2(0.75).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(itinerant_fidelity_2(5.0 / 6.0).unwrap(), 2.0 / 3.0, epsilon = 1e-12);
        assert!(itinerant_fidelity_2(0.4).is_err());
        assert_eq!(itinerant_success(3, 1.0, 1.0, 1.0).unwrap().value, 1.0);
        assert_abs_diff_eq!(itinerant_success(2, 0.5, 1.0, 1.0).unwrap().value, 0.5);
        assert_abs_diff_eq!(
            itinerant_success(4, 0.9, 0.95, 0.5).unwrap().value,
            0.9f64.powi(3) * 0.95f64.powi(4) * 0.5,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(itinerant_success(4, 0.9, 0.95, 0.5).unwrap().value, 0.2969, epsilon = 1e-4);
    }

    #[test]
    fn photon_mapping() {
        let p = SchemeParams { eta_abs: 1e-4, eta_det: 0.05, p_epr: 2.5e-3, ..Default::default() };
        let v = em_success(2, &p).unwrap().value;
        assert_abs_diff_eq!(v, 1.5625e-14, epsilon = 1e-20);
        assert_eq!(em_success(2, &SchemeParams::default()).unwrap().value, 0.25);
        assert_eq!(em_success(4, &SchemeParams::default()).unwrap().value, 1.0 / 16.0);

        assert_eq!(em_false_herald(3, 0.4, 0.0).unwrap(), 0.0);
        assert_abs_diff_eq!(em_false_herald(1, 0.3, 0.02).unwrap(), 0.02);
        assert_abs_diff_eq!(em_false_herald(2, 0.1, 0.01).unwrap(), 0.0021, epsilon = 1e-15);

        assert_abs_diff_eq!(em_fidelity(3, 0.9, 0.2, 0.0).unwrap(), 0.9);
        assert_abs_diff_eq!(em_fidelity(3, 0.9, 0.0, 0.2).unwrap(), 0.125);
        assert_abs_diff_eq!(em_fidelity(2, 0.95, 1e-13, 1e-13).unwrap(), 0.6, epsilon = 1e-12);
        assert!(matches!(em_fidelity(2, 0.9, 0.0, 0.0), Err(Error::ZeroDenominator(_))));
    }

    #[test]
    fn wpe_values() {
        assert_abs_diff_eq!(wpe_fidelity(1, 2, 0.06).unwrap(), 0.969, epsilon = 5e-4);
        assert_abs_diff_eq!(wpe_fidelity(1, 3, 0.06).unwrap(), 0.9388, epsilon = 5e-4);
        assert_abs_diff_eq!(wpe_fidelity(2, 3, 0.06).unwrap(), 0.9791, epsilon = 5e-4);
        let p = 0.06;
        assert_abs_diff_eq!(
            wpe_rate(1, 2, p, 0.3).unwrap().value,
            0.3 * (2.0 * p * (1.0 - p) + p * p),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(wpe_rate(3, 3, 0.2, 0.5).unwrap().value, 0.5f64.powi(3) * 0.2f64.powi(3), epsilon = 1e-15);
        assert!(wpe_fidelity(0, 3, 0.1).is_err());
        assert!(wpe_fidelity(4, 3, 0.1).is_err());
    }

    #[test]
    fn wpe_sweep_values() {
        let rows = wpe_fidelity_sweep(4, &[1, 2, 3], &[1e-6, 0.06, 0.5], 0.05).unwrap();
        assert_eq!(rows.len(), 9);
        assert_abs_diff_eq!(rows[0].fidelity, 1.0, epsilon = 1e-5);
        let r = rows.iter().find(|r| r.m == 3 && r.p == 0.5).unwrap();
        assert_abs_diff_eq!(r.fidelity, 0.8, epsilon = 1e-12);
        let r = rows.iter().find(|r| r.m == 1 && r.p == 0.06).unwrap();
        assert_abs_diff_eq!(r.rate, 0.05 * (1.0 - 0.94f64.powi(4)), epsilon = 1e-15);
        assert_abs_diff_eq!(r.rate, 0.01096, epsilon = 1e-5);
        assert!(wpe_fidelity_sweep(4, &[], &[0.1], 0.05).is_err());
    }

    #[test]
    fn comparison() {
        let c = compare_4node(1.0, 1.0).unwrap();
        assert_abs_diff_eq!(c.r_quad, 7.0 / 32.0);
        assert_abs_diff_eq!(c.r_bell_chain, 0.125);
        assert_abs_diff_eq!(c.crossover_eta, 2.0 / 7f64.sqrt(), epsilon = 1e-15);
        let x = compare_4node(c.crossover_eta, 1.0).unwrap();
        assert_abs_diff_eq!(x.r_bell_chain, x.r_quad, epsilon = 1e-12);
        let z = compare_4node(0.0, 3.0).unwrap();
        assert_eq!((z.r_bell, z.r_quad), (0.0, 0.0));
        assert!(compare_sweep(&[], 1.0, Exec::Sequential).is_err());
    }

    #[test]
    fn swap_rates() {
        assert_eq!(swap_rate(2, 0.5, 1.0).unwrap().value, 0.5);
        assert_eq!(swap_rate(4, 7.0 / 32.0, 1.0).unwrap().value, 7.0 / 32.0);
        assert_eq!(swap_rate(3, 0.25, 0.0).unwrap().value, 0.0);
    }

    #[test]
    fn params_validation_names_field() {
        let p = SchemeParams { p_dark: 1.5, ..Default::default() };
        match p.validate() {
            Err(Error::OutOfRange { name, .. }) => assert_eq!(name, "p_dark"),
            other => panic!("{other:?}"),
        }
    }
}
