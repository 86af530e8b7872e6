//! Acceptance suite: one test and one PASS/FAIL line per criterion.

mod common;

use std::time::{Duration, Instant};

use common::report;
use heralded::analytics::{
    compare_4node, itinerant_fidelity_2, itinerant_ghz_fidelity_sim, st_fidelity_2, wpe_fidelity, wpe_rate,
};
use heralded::herald::{
    aggregate_heralding, prepare_swap_input, prepare_swap_input_on, run_gbsa, subnetwork_swap, suppressed_patterns,
    wpe_simulate, DetectorModel, HeraldRule, ProjectionRow,
};
use heralded::interferometer::{
    beam_splitter, eraser, inverse, quarter, symmetric_multiport, tritter, with_phases, MultiportMatrix,
};
use heralded::photonics::{apply_mode_transform, expand_to_fock, Mode, Occupation, PhotonPolynomial, Register};
use heralded::states::{fidelity, ghz_basis_state, verify_pair_decomposition, GhzIndex, Sign};
use heralded::table::{compare_golden, load_golden_table, load_suppressed, GoldenReport};
use heralded::{Exec, C64};

fn line(id: u32, title: &str, ok: bool, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    report(&format!("[{tag}] criterion {id}: {title} :: {detail}"));
}

fn golden_run(u: &MultiportMatrix, n: usize, stem: &str) -> (GoldenReport, Duration) {
    let t0 = Instant::now();
    let input = prepare_swap_input(n, &vec![Sign::Plus; n]).unwrap();
    let rows = run_gbsa(&input, u).unwrap();
    let sup = suppressed_patterns(&input, u, n as u32).unwrap();
    let elapsed = t0.elapsed();
    let golden = load_golden_table(&common::golden_path(&format!("{stem}_table.csv"))).unwrap();
    let golden_sup = load_suppressed(&common::golden_path(&format!("{stem}_suppressed.txt"))).unwrap();
    (compare_golden(&rows, &sup, &golden, &golden_sup), elapsed)
}

fn golden_detail(r: &GoldenReport, elapsed: Duration) -> String {
    let first: Vec<String> = r
        .mismatches
        .iter()
        .take(3)
        .map(|m| format!("{} (got p={:.6e}, F={:.4}, printed {})", m.pattern, m.probability, m.fidelity, m.expected_probability))
        .collect();
    format!(
        "{} rows checked, {} mismatched, {} missing, {} extra, suppressed set {}, {:.3}s{}",
        r.rows_checked,
        r.mismatches.len(),
        r.missing.len(),
        r.extra.len(),
        if r.suppressed_match() { "equal" } else { "differs" },
        elapsed.as_secs_f64(),
        if first.is_empty() { String::new() } else { format!("; e.g. {}", first.join(", ")) }
    )
}

#[test]
fn criterion_1_quarter_golden() {
    let (r, t) = golden_run(&quarter(), 4, "quarter");
    let ok = r.is_match() && t < Duration::from_secs(10);
    line(1, "quarter tables and suppressed set", ok, &golden_detail(&r, t));
    assert!(ok, "{r:?}");
}

#[test]
fn criterion_2_tritter_golden() {
    let (r, t) = golden_run(&tritter(), 3, "tritter");
    let ok = r.is_match() && t < Duration::from_secs(2);
    line(2, "tritter tables and suppressed set", ok, &golden_detail(&r, t));
    assert!(ok, "{} of {} printed tritter rows disagree with the computed table", r.mismatches.len(), r.rows_checked);
}

#[test]
fn criterion_3_aggregates() {
    let swap = |u: &MultiportMatrix, n: usize| run_gbsa(&prepare_swap_input(n, &vec![Sign::Plus; n]).unwrap(), u).unwrap();
    let q = swap(&quarter(), 4);
    let t = swap(&tritter(), 3);
    let b = swap(&beam_splitter(), 2);
    let sub = subnetwork_swap(2, &quarter()).unwrap();
    let thr = |rows: &[ProjectionRow], m| aggregate_heralding(rows, DetectorModel::Threshold, &HeraldRule::new(m, true));
    let num = |rows: &[ProjectionRow], m| aggregate_heralding(rows, DetectorModel::NumberResolved, &HeraldRule::new(m, false));
    let checks = [
        ("quarter threshold", thr(&q, 4), 7.0 / 32.0),
        ("quarter resolved", num(&q, 4), 7.0 / 8.0),
        ("tritter threshold", thr(&t, 3), 0.25),
        ("tritter resolved", num(&t, 3), 0.75),
        ("2-port BSA", thr(&b, 2), 0.5),
        ("quarter m=2 subnetwork", thr(&sub, 2), 0.5),
    ];
    let ok = checks.iter().all(|(_, got, want)| (got - want).abs() < 1e-9);
    let detail: Vec<String> = checks.iter().map(|(n, g, w)| format!("{n} {g:.12} (want {w})")).collect();
    line(3, "aggregate heralding probabilities", ok, &detail.join("; "));
    assert!(ok);
}

#[test]
fn criterion_4_wpe() {
    let anchors = [(1, 2, 0.969), (1, 3, 0.9388), (2, 3, 0.9791)];
    let mut worst_anchor: f64 = 0.0;
    for (m, n, want) in anchors {
        worst_anchor = worst_anchor.max((wpe_fidelity(m, n, 0.06).unwrap() - want).abs());
    }
    let mut worst_sim: f64 = 0.0;
    let mut cases = 0;
    for n in 2..=5usize {
        let u = eraser(n).unwrap();
        let phases: Vec<f64> = (0..n).map(|j| 0.37 * j as f64).collect();
        for m in 1..=n {
            for p in [0.01, 0.06, 0.2] {
                let sim = wpe_simulate(n, m as u32, p, &phases, &u, Exec::default()).unwrap();
                worst_sim = worst_sim
                    .max((sim.fidelity - wpe_fidelity(m, n, p).unwrap()).abs())
                    .max((sim.rate(m as u32, 0.05) - wpe_rate(m, n, p, 0.05).unwrap().value).abs());
                cases += 1;
            }
        }
    }
    let ok = worst_anchor <= 5e-4 && worst_sim < 1e-9;
    line(
        4,
        "which-path-erasing anchors and simulation agreement",
        ok,
        &format!("max anchor deviation {worst_anchor:.2e}; {cases} simulated cases, max deviation {worst_sim:.2e}"),
    );
    assert!(ok);
}

#[test]
fn criterion_5_basis_identities() {
    let mut gram: f64 = 0.0;
    for n in 2..=6 {
        let basis: Vec<_> = GhzIndex::all(n).unwrap().into_iter().map(ghz_basis_state).collect();
        assert_eq!(basis.len(), 1 << n);
        for (i, a) in basis.iter().enumerate() {
            for (j, b) in basis.iter().enumerate() {
                let d = if i == j { 1.0 } else { 0.0 };
                gram = gram.max((a.inner(b).unwrap() - C64::new(d, 0.0)).norm());
            }
        }
    }
    let mut pair: f64 = 0.0;
    for n in 2..=6usize {
        for pattern in 0..1u32 << n {
            let signs: Vec<Sign> = (0..n).map(|j| if pattern >> j & 1 == 1 { Sign::Minus } else { Sign::Plus }).collect();
            pair = pair.max(verify_pair_decomposition(n, &signs).unwrap());
        }
    }
    let ok = gram < 1e-9 && pair < 1e-9;
    line(5, "GHZ basis orthonormality and pair decomposition", ok, &format!("Gram residual {gram:.2e}; pair residual {pair:.2e} over all sign patterns"));
    assert!(ok);
}

#[test]
fn criterion_6_crossover() {
    let c = compare_4node(0.5, 1.0).unwrap();
    let ok = (c.crossover_eta - 0.75593).abs() <= 1e-4 && c.crossover_eta < 0.76;
    line(6, "rate crossover", ok, &format!("eta* = {:.6}", c.crossover_eta));
    assert!(ok);
}

fn printed_q_inverse() -> MultiportMatrix {
    let h = 0.5;
    let e = [
        (h, 0.0), (0.0, -h), (-h, 0.0), (0.0, -h),
        (0.0, -h), (h, 0.0), (0.0, -h), (-h, 0.0),
        (-h, 0.0), (0.0, -h), (h, 0.0), (0.0, -h),
        (0.0, -h), (-h, 0.0), (0.0, -h), (h, 0.0),
    ];
    MultiportMatrix::from_entries(4, e.iter().map(|&(r, i)| C64::new(r, i)).collect(), "printed Q^-1")
}

fn printed_t_inverse() -> MultiportMatrix {
    let s3 = 3f64.sqrt();
    let a = C64::new(1.0 / s3, 0.0);
    let b = C64::new(-s3, -3.0) / 6.0;
    let c = C64::new(0.0, -1.0) * C64::new(s3, -3.0) / 6.0;
    let d = C64::new(0.0, -1.0 / s3);
    let e = C64::new(3.0, s3) / 6.0;
    MultiportMatrix::from_entries(3, vec![a, b, c, d, e, b, d, d, a], "printed T^-1")
}

#[test]
fn criterion_7_interferometers() {
    let dq = inverse(&quarter()).unwrap().max_abs_diff(&printed_q_inverse());
    let dt = inverse(&tritter()).unwrap().max_abs_diff(&printed_t_inverse());
    let mut exit: f64 = 0.0;
    let mut unit: f64 = 0.0;
    for d in 1..=5u32 {
        let u = symmetric_multiport(d).unwrap();
        unit = unit.max(u.unitarity_residual());
        let inv = inverse(&u).unwrap();
        let target = 2f64.powi(-(d as i32));
        for j in 1..=u.dim() as u16 {
            let p = PhotonPolynomial::monomial(C64::new(1.0, 0.0), Occupation::from_modes([Mode::h(j)]));
            let out = apply_mode_transform(&p, &inv).unwrap();
            for k in 1..=u.dim() as u16 {
                let a = out.coeff(&Occupation::from_modes([Mode::h(k)]));
                exit = exit.max((a.norm_sqr() - target).abs());
            }
        }
    }
    let ok = dq < 1e-12 && dt < 1e-12 && unit < 1e-9 && exit < 1e-9;
    line(
        7,
        "interferometer inverses and symmetric multiports",
        ok,
        &format!("|Q^-1 diff| {dq:.1e}, |T^-1 diff| {dt:.1e}, unitarity {unit:.1e}, exit probability {exit:.1e}"),
    );
    assert!(ok);
}

#[test]
fn criterion_8_properties() {
    let mut failures: Vec<String> = Vec::new();

    // completeness
    let devices = [(beam_splitter(), 2usize), (tritter(), 3), (quarter(), 4)];
    for (u, n) in &devices {
        for pattern in 0..1u32 << n {
            let signs: Vec<Sign> = (0..*n).map(|j| if pattern >> j & 1 == 1 { Sign::Minus } else { Sign::Plus }).collect();
            let rows = run_gbsa(&prepare_swap_input(*n, &signs).unwrap(), u).unwrap();
            let s: f64 = rows.iter().map(|r| r.probability).sum();
            if (s - 1.0).abs() > 1e-9 {
                failures.push(format!("completeness {} {s}", u.label()));
            }
        }
    }
    let sub = subnetwork_swap(3, &symmetric_multiport(3).unwrap()).unwrap();
    let s: f64 = sub.iter().map(|r| r.probability).sum();
    if (s - 1.0).abs() > 1e-9 {
        failures.push(format!("completeness subnetwork {s}"));
    }

    // norm preservation: two-photon polarization states through every device
    for u in [beam_splitter(), tritter(), quarter(), symmetric_multiport(3).unwrap()] {
        let inv = inverse(&u).unwrap();
        let mut poly = PhotonPolynomial::zero();
        poly.add_term(C64::new(0.6, 0.0), Occupation::from_modes([Mode::h(1), Mode::v(2)]));
        poly.add_term(C64::new(0.0, 0.8), Occupation::from_counts([(Mode::h(2), 2)]));
        let before = expand_to_fock(&poly, Register::new(0, 1)).norm_sqr();
        let after = expand_to_fock(&apply_mode_transform(&poly, &inv).unwrap(), Register::new(0, 1)).norm_sqr();
        if (before - after).abs() > 1e-9 {
            failures.push(format!("norm {} {before} -> {after}", u.label()));
        }
    }

    // HOM on phased 50:50 splitters
    for k in 0..8 {
        let phi = 0.41 * k as f64;
        let u = with_phases(&beam_splitter(), &[phi, -phi / 3.0], &[0.2 * phi, 1.0 - phi]).unwrap();
        let p = PhotonPolynomial::monomial(C64::new(1.0, 0.0), Occupation::from_modes([Mode::h(1), Mode::h(2)]));
        let out = apply_mode_transform(&p, &inverse(&u).unwrap()).unwrap();
        let c = out.coeff(&Occupation::from_modes([Mode::h(1), Mode::h(2)]));
        if c.norm() >= 1e-12 {
            failures.push(format!("HOM coincidence {c}"));
        }
    }

    // permutation covariance of the quarter table
    let base = run_gbsa(&prepare_swap_input(4, &[Sign::Plus; 4]).unwrap(), &quarter()).unwrap();
    for perm in permutations(4) {
        let ports: Vec<u16> = perm.iter().map(|&p| p as u16 + 1).collect();
        let rows = run_gbsa(&prepare_swap_input_on(&[Sign::Plus; 4], &ports).unwrap(), &quarter()).unwrap();
        for (a, b) in base.iter().zip(&rows) {
            let moved = a.state.permute_qubits(&perm);
            let f = fidelity(&moved, &b.state).unwrap();
            if a.pattern != b.pattern || (a.probability - b.probability).abs() > 1e-9 || f < 1.0 - 1e-9 {
                failures.push(format!("permutation {perm:?} at {}", a.pattern));
                break;
            }
        }
    }

    // monotonicity
    for (m, n) in [(1, 2), (1, 3), (2, 3), (1, 4), (3, 4)] {
        let vals: Vec<f64> = (1..100).map(|i| wpe_fidelity(m, n, i as f64 / 100.0).unwrap()).collect();
        if vals.windows(2).any(|w| w[1] >= w[0]) {
            failures.push(format!("wpe fidelity not decreasing for m={m} N={n}"));
        }
    }
    let st: Vec<f64> = (0..=100).map(|i| st_fidelity_2(i as f64 / 100.0).unwrap().value).collect();
    if st.windows(2).any(|w| w[1] <= w[0]) {
        failures.push("st fidelity not increasing".into());
    }

    // itinerant anchor and decrease in N
    for f in [0.7, 0.8, 0.9, 0.99] {
        let two = itinerant_ghz_fidelity_sim(2, f).unwrap();
        if (two - itinerant_fidelity_2(f).unwrap()).abs() > 1e-9 {
            failures.push(format!("itinerant anchor f={f}: {two}"));
        }
        let curve: Vec<f64> = (2..=8).map(|n| itinerant_ghz_fidelity_sim(n, f).unwrap()).collect();
        if curve.windows(2).any(|w| w[1] >= w[0]) {
            failures.push(format!("itinerant not decreasing f={f}: {curve:?}"));
        }
    }

    let ok = failures.is_empty();
    line(
        8,
        "property suite",
        ok,
        &if ok { "completeness, norm, HOM, permutation covariance, monotonicity, itinerant anchor".to_string() } else { failures.join("; ") },
    );
    assert!(ok, "{failures:?}");
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}
