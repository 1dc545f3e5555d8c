//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! Runs without the libtest harness so the lines are always printed.

use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use annealchem::cli::{fit, fit_minimum, qubit_report, scan, Method, Problem, ProblemOptions, SamplerConfig};
use annealchem::ising::{
    anneal, exact_solve, exact_solve_polynomial, quadratize, AnnealParams, ExactSampler, QuadraticModel, SimulatedAnnealer,
    ZPolynomial,
};
use annealchem::molham::{build_hamiltonian, number_operator, FermionOperator, LadderOp};
use annealchem::pauli::{
    eigenvalues, expectation, ground_state, jordan_wigner, restricted_ground_energy, to_dense, Encoding, Pauli, PauliSum,
    PauliWord,
};
use annealchem::qcc::{
    bloch_energy, entangler_curvature, entangler_gradient, entangler_pool, qcc_optimize, qcc_transform, BlochState,
    EntanglerSet, QccOptions,
};
use annealchem::xbk::{diagonal_minimum, recover_state, xbk_ground_state, XbkOptions};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn pattern(dir: &str) -> String {
    fixtures().join(dir).join("*.fcidump").display().to_string()
}

fn load(rel: &str) -> Problem {
    Problem::load(&fixtures().join(rel), &ProblemOptions::default()).expect("fixture loads")
}

fn fixture_paths(dir: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = glob::glob(&pattern(dir)).unwrap().filter_map(Result::ok).collect();
    v.sort();
    v
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c1_table1_exact() -> Outcome {
    let t = Instant::now();
    let report = scan(&pattern("h3p"), &[], &ProblemOptions::default(), &SamplerConfig::default(), 1).unwrap();
    let f = fit(&report.points, "exact", None).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let pass = report.ok()
        && (f.binding_energy - 0.339).abs() <= 0.002
        && (f.minimum_location - 0.984).abs() <= 0.01
        && secs < 120.0;
    outcome(
        pass,
        format!(
            "H3+ exact: BE {:.4} Eh (0.339±0.002), R {:.4} Å (0.984±0.01), {} points, {secs:.1}s (<120s)",
            f.binding_energy,
            f.minimum_location,
            report.points.len()
        ),
    )
}

fn c2_table2_exact() -> Outcome {
    let opts = ProblemOptions::default();
    let bond = scan(&pattern("h2o_bond"), &[], &opts, &SamplerConfig::default(), 1).unwrap();
    let angle = scan(&pattern("h2o_angle"), &[], &opts, &SamplerConfig::default(), 1).unwrap();
    let f = fit(&bond.points, "exact", None).unwrap();
    let (a, _) = fit_minimum(&angle.points, "exact", None).unwrap();
    let pass = bond.ok()
        && angle.ok()
        && (f.binding_energy - 0.265).abs() <= 0.005
        && (f.minimum_location - 0.968).abs() <= 0.01
        && (a - 109.4).abs() <= 0.5;
    outcome(
        pass,
        format!(
            "H2O exact: BE {:.4} Eh (0.265±0.005), R {:.4} Å (0.968±0.01), angle {:.2}° (109.4±0.5)",
            f.binding_energy, f.minimum_location, a
        ),
    )
}

/// `(label, oracle, qcc, qmf)` per point.
fn qcc_series(dir: &str) -> Vec<(f64, f64, f64, f64)> {
    let sampler = SimulatedAnnealer::new(AnnealParams::default());
    let opts = QccOptions::default();
    fixture_paths(dir)
        .iter()
        .map(|p| {
            let prob = Problem::load(p, &ProblemOptions::default()).unwrap();
            let exact = ground_state(&prob.hamiltonian).unwrap().energy;
            let r = qcc_optimize(&prob.hamiltonian, &opts, &sampler).unwrap();
            (prob.label.unwrap(), exact, r.energy, r.qmf_energy)
        })
        .collect()
}

fn c3_qcc_accuracy(h3p: &[(f64, f64, f64, f64)], secs: f64) -> Outcome {
    let worst = h3p.iter().map(|r| (r.0, (r.2 - r.1).abs())).fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let pass = h3p.len() == 102 && worst.1 < 0.002 && secs < 900.0;
    outcome(
        pass,
        format!("QCC N_ent=4 SA: max |E_QCC − E_exact| {:.2e} Eh at {} Å over {} points, {secs:.1}s (<900s)", worst.1, worst.0, h3p.len()),
    )
}

fn c4_xbk_suite() -> Outcome {
    let p = load("h2/h2_0.7414.fcidump");
    let h = &p.hamiltonian;
    let m = h.n_qubits();
    let oracle = ground_state(h).unwrap().energy;
    let mut energies = Vec::new();
    let mut notes = Vec::new();
    let mut pass = true;
    for r in 1..=4 {
        let res = xbk_ground_state(h, r, &ExactSampler, &XbkOptions::default()).unwrap();
        let (_, psi) = recover_state(&res.assignment, m, r, res.sector).unwrap();
        let rq = expectation(h, &psi).unwrap();
        let a = res.energy >= oracle - 1e-9;
        let b = (res.energy - rq).abs() <= 1e-8;
        pass &= a && b;
        notes.push(format!("r={r}: {:.8}", res.energy));
        energies.push(res.energy);
    }
    let c = energies[2] <= energies[0] + 1e-9 && energies[3] <= energies[1] + 1e-9;
    let dense = to_dense(h).unwrap();
    let brute = (0..dense.nrows()).map(|i| dense[(i, i)].re).fold(f64::INFINITY, f64::min);
    let d = (energies[0] - brute).abs() <= 1e-9 && (diagonal_minimum(h).unwrap() - brute).abs() <= 1e-9;
    let x = PauliSum::from_pairs(&[(1.0, "X")]).unwrap();
    let single = xbk_ground_state(&x, 2, &ExactSampler, &XbkOptions::default()).unwrap().energy;
    let worked = (single + 1.0).abs() <= 1e-12;
    pass &= c && d && worked;
    outcome(
        pass,
        format!(
            "XBK H2 oracle {oracle:.8}; {}; monotone {c}; r=1 = diagonal min {d}; H=X r=2 → {single}",
            notes.join(", ")
        ),
    )
}

fn random_polynomial(rng: &mut ChaCha8Rng) -> ZPolynomial {
    let n = rng.random_range(2..=7usize);
    let mut p = ZPolynomial::new(n);
    for _ in 0..rng.random_range(1..=12) {
        let k = rng.random_range(1..=4usize.min(n));
        let mut vars: Vec<u32> = (0..n as u32).collect();
        for i in 0..k {
            let j = rng.random_range(i..n);
            vars.swap(i, j);
        }
        p.add_term(&vars[..k], rng.random_range(-1.0..1.0));
    }
    p.add_term(&[], rng.random_range(-1.0..1.0));
    p
}

fn c5_quadratization() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut failures = 0;
    let mut max_aux = 0;
    for _ in 0..200 {
        let p = random_polynomial(&mut rng);
        let q = quadratize(&p);
        max_aux = max_aux.max(q.n_aux());
        let orig = exact_solve_polynomial(&p).unwrap();
        let ext = exact_solve(&q).unwrap();
        let same = (orig.best().unwrap().energy - ext.best().unwrap().energy).abs() <= 1e-9;
        let consistent = ext.samples().iter().all(|s| q.aux_consistent(&s.assignment));
        if !(same && consistent) {
            failures += 1;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        failures == 0 && secs < 60.0,
        format!("200 random polynomials: {failures} mismatches, up to {max_aux} auxiliaries, {secs:.1}s (<60s)"),
    )
}

fn random_number_conserving(rng: &mut ChaCha8Rng, n: usize) -> FermionOperator {
    let mut f = FermionOperator::zero();
    let c = |rng: &mut ChaCha8Rng| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    for p in 0..n {
        for q in p..n {
            let v = c(rng);
            let v = if p == q { Complex64::new(v.re, 0.0) } else { v };
            f.add_term(vec![LadderOp::create(p), LadderOp::annihilate(q)], v);
            if p != q {
                f.add_term(vec![LadderOp::create(q), LadderOp::annihilate(p)], v.conj());
            }
        }
    }
    for _ in 0..4 {
        let (p, q, r, s) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n));
        let v = c(rng);
        f.add_term(vec![LadderOp::create(p), LadderOp::create(q), LadderOp::annihilate(r), LadderOp::annihilate(s)], v);
        f.add_term(vec![LadderOp::create(s), LadderOp::create(r), LadderOp::annihilate(q), LadderOp::annihilate(p)], v.conj());
    }
    f.simplify()
}

fn c6_transform_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let f = random_number_conserving(&mut rng, 3);
        let a = eigenvalues(&Encoding::JordanWigner.transform(&f, 3).unwrap()).unwrap();
        let b = eigenvalues(&Encoding::BravyiKitaev.transform(&f, 3).unwrap()).unwrap();
        worst = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(worst, f64::max);
    }
    outcome(worst <= 1e-10, format!("50 random 3-mode operators: max JW/BK eigenvalue gap {worst:.2e} (≤1e-10)"))
}

fn c7_penalty() -> Outcome {
    let opts = ProblemOptions { no_spin_penalty: true, ..Default::default() };
    let p = Problem::load(&fixtures().join("h2/h2_0.7414.fcidump"), &opts).unwrap();
    let n_modes = p.integrals.n_spin_orbitals();
    let g = ground_state(&p.hamiltonian).unwrap();
    let n_op = Encoding::BravyiKitaev.transform(&number_operator(n_modes), n_modes).unwrap();
    let n_exp = expectation(&n_op, &g.state).unwrap();
    let bare_jw = jordan_wigner(&build_hamiltonian(&p.integrals), n_modes).unwrap();
    let sector = restricted_ground_energy(&bare_jw, |i| i.count_ones() as usize == p.integrals.n_electrons).unwrap();
    let pass = (n_exp - 2.0).abs() <= 1e-8 && (g.energy - sector).abs() <= 1e-8;
    outcome(
        pass,
        format!(
            "H2 w={:.4}: ⟨N⟩ = {n_exp:.10}, E(H′) − E_N=2(H) = {:.2e}",
            p.penalty_weight,
            g.energy - sector
        ),
    )
}

fn c8_energy_chain(series: &[(&str, Vec<(f64, f64, f64, f64)>)]) -> Outcome {
    let mut n = 0;
    let mut bad = Vec::new();
    for (name, pts) in series {
        for &(label, oracle, qcc, qmf) in pts {
            n += 1;
            if !(oracle <= qcc + 1e-9 && qcc <= qmf + 1e-9) {
                bad.push(format!("{name} {label}"));
            }
        }
    }
    outcome(bad.is_empty(), format!("E_oracle ≤ E_QCC ≤ E_QMF + 1e-9 on {n} points; violations: {bad:?}"))
}

fn random_sum(rng: &mut ChaCha8Rng, m: usize) -> PauliSum {
    let mut h = PauliSum::new(m);
    for _ in 0..rng.random_range(3..=8) {
        let mut w = PauliWord::identity(m);
        for q in 0..m {
            let p = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][rng.random_range(0..4)];
            w = w.multiply(&PauliWord::single(m, q, p)).unwrap().1;
        }
        h.add_term(w, Complex64::new(rng.random_range(-1.0..1.0), 0.0));
    }
    h.simplify()
}

fn c9_gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut done = 0;
    let mut skipped = 0;
    let mut worst = 0.0f64;
    let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
    while done < 100 {
        let m = rng.random_range(1..=4);
        let h = random_sum(&mut rng, m);
        let pool = entangler_pool(&h);
        if pool.is_empty() {
            continue;
        }
        let s = BlochState::new(
            (0..m).map(|_| rng.random_range(0.0..std::f64::consts::PI)).collect(),
            (0..m).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect(),
        )
        .unwrap();
        // The word screening would rank first; an all-zero pool has no defined relative error.
        let (p, g) = pool
            .iter()
            .map(|p| (*p, entangler_gradient(&h, &s, p).unwrap()))
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap();
        if g.abs() < 1e-8 {
            skipped += 1;
            continue;
        }
        let e = |t: f64| bloch_energy(&qcc_transform(&h, &EntanglerSet::new(vec![p], vec![t]).unwrap()).unwrap(), &s).unwrap();
        let d = 1e-3;
        let (em2, em1, e0, ep1, ep2) = (e(-2.0 * d), e(-d), e(0.0), e(d), e(2.0 * d));
        let fd1 = (em2 - 8.0 * em1 + 8.0 * ep1 - ep2) / (12.0 * d);
        let fd2 = (-em2 + 16.0 * em1 - 30.0 * e0 + 16.0 * ep1 - ep2) / (12.0 * d * d);
        let c = entangler_curvature(&h, &s, &p).unwrap();
        worst = worst.max(rel(g, fd1)).max(rel(c, fd2));
        done += 1;
    }
    outcome(worst < 1e-5, format!(
            "100 random draws (m ≤ 4), top-gradient word: max relative error of dE/dτ, d²E/dτ² = {worst:.2e} (<1e-5); {skipped} zero-gradient draws redrawn"
        ))
}

fn c10_sampler_quality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut hits = 0;
    for k in 0..30 {
        let mut q = QuadraticModel::new(16);
        for i in 0..16u32 {
            q.add_linear(i, rng.random_range(-1.0..1.0));
            for j in i + 1..16 {
                q.add_quadratic(i, j, rng.random_range(-1.0..1.0));
            }
        }
        let exact = exact_solve(&q).unwrap().best().unwrap().energy;
        let sa = anneal(&q, &AnnealParams { seed: k, ..Default::default() }).best().unwrap().energy;
        if (sa - exact).abs() <= 1e-9 {
            hits += 1;
        }
    }
    outcome(hits >= 27, format!("SA default schedule matched exact enumeration on {hits}/30 models (≥27)"))
}

fn strictly_increasing(v: &[usize]) -> bool {
    v.windows(2).all(|w| w[1] > w[0])
}

fn c11_scaling() -> Outcome {
    let mut pass = true;
    let mut notes = Vec::new();
    for rel in ["h3p_eq/h3p_0.984.fcidump", "h2o_bond/h2o_0.96.fcidump"] {
        let p = load(rel);
        let m = p.n_qubits();
        let xbk = qubit_report(&p, &Method::xbk_default(), &[1, 2, 3]).unwrap();
        let qcc = qubit_report(&p, &Method::qcc_default(), &[1, 2, 3, 4]).unwrap();
        let xbk_post: Vec<usize> = xbk.iter().map(|r| r.post).collect();
        let qcc_post: Vec<usize> = qcc.iter().map(|r| r.post).collect();
        let xbk_pre_ok = xbk.iter().all(|r| r.pre == r.parameter * m);
        let qcc_pre_ok = qcc.iter().all(|r| r.pre == 3 * m + 2 * r.parameter);
        pass &= strictly_increasing(&xbk_post) && strictly_increasing(&qcc_post) && xbk_pre_ok && qcc_pre_ok;
        notes.push(format!(
            "{} (m={m}): XBK r=1..3 post {xbk_post:?}, QCC N_ent=1..4 pre {:?} post {qcc_post:?}",
            rel.split('/').next().unwrap(),
            qcc.iter().map(|r| r.pre).collect::<Vec<_>>()
        ));
    }
    outcome(pass, notes.join("; "))
}

fn main() {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut record = |i: usize, name: &'static str, o: Outcome| {
        println!("[{}] {i:>2}. {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((i, name, o));
    };
    record(1, "H3+ exact fit", c1_table1_exact());
    record(2, "H2O exact fit", c2_table2_exact());
    let t = Instant::now();
    let h3p = qcc_series("h3p");
    let h3p_secs = t.elapsed().as_secs_f64();
    record(3, "QCC chemical accuracy", c3_qcc_accuracy(&h3p, h3p_secs));
    record(4, "XBK correctness", c4_xbk_suite());
    record(5, "Quadratization equivalence", c5_quadratization());
    record(6, "Transform equivalence", c6_transform_equivalence());
    record(7, "Penalty effectiveness", c7_penalty());
    let series = vec![("h3p", h3p), ("h2_scan", qcc_series("h2_scan")), ("h2o_bond", qcc_series("h2o_bond"))];
    record(8, "Energy chain", c8_energy_chain(&series));
    record(9, "Screening gradient check", c9_gradient_check());
    record(10, "Sampler quality gate", c10_sampler_quality());
    record(11, "Scaling report", c11_scaling());
    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("acceptance: {}/{} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
