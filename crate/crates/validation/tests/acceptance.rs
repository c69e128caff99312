//! Acceptance checks. Each test writes one `[name] PASS|FAIL ...` line to
//! stderr (bypassing output capture) before asserting, so the full list is
//! visible in the test log whether or not a check holds.
//!
//! Every reference value here comes from an oracle written independently of
//! the library: closed-form spectra, Clebsch–Gordan counting, a sparse
//! Hamiltonian with a fixed-step RK4 integrator, and a Taylor-series
//! propagator for single-step outcome probabilities.

use std::io::Write;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use spin_triangle::dicke::{default_time_grid, dicke_state, evolve, magnetization_trace, DickeIndex};
use spin_triangle::entanglement::{
    one_vs_rest_negativity, pair_negativity, partial_trace, thermal_state, threshold_temperature,
    tripartite_negativity, Measure,
};
use spin_triangle::fit::fit_power_law;
use spin_triangle::sectors::{sector_analysis, DEFAULT_SECTOR_TOL};
use spin_triangle::sensing::{
    default_tau, fisher_information_series, trajectory_probabilities, ProtocolConfig, DEFAULT_DELTA_B,
};
use spin_triangle::spin::{level_crossing_fields, total_sz};
use spin_triangle::thermo::{detect_plateaus, eigenstate_sz, magnetization, magnetization_curve};
use spin_triangle::{
    build_hamiltonian_local_x, build_hamiltonian_z, diagonalize, Execution, ModelParameters, SpinQuantum,
};

fn report(name: &str, pass: bool, detail: impl AsRef<str>) -> bool {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr().lock(), "[{name}] {verdict} {}", detail.as_ref());
    pass
}

fn fe3() -> ModelParameters {
    ModelParameters::fe3()
}

const CM_TO_K: f64 = 1.4387769;
const MU_B_K: f64 = 0.67171381;

fn j_k() -> f64 {
    12.56 * CM_TO_K
}

fn gmu() -> f64 {
    2.0 * MU_B_K
}

/// Independent model: basis index `i1·36 + i2·6 + i3` with level `i = 5/2 - m`.
mod oracle {
    use super::*;

    pub const D: usize = 6;
    pub const DIM: usize = 216;

    pub fn m_of(level: usize) -> f64 {
        2.5 - level as f64
    }

    pub fn levels(i: usize) -> [usize; 3] {
        [i / 36, (i / 6) % 6, i % 6]
    }

    pub fn index(l: [usize; 3]) -> usize {
        l[0] * 36 + l[1] * 6 + l[2]
    }

    /// `⟨m+1|S+|m⟩`.
    fn raise(m: f64) -> f64 {
        (2.5 * 3.5 - m * (m + 1.0)).sqrt()
    }

    /// Sparse rows of `J Σ S_a·S_b - gμ_B B_x S_1^x`, real.
    pub fn sparse_local_x(jk: f64, zeeman_x: f64) -> Vec<Vec<(usize, f64)>> {
        let pairs = [(0, 1), (1, 2), (0, 2)];
        (0..DIM)
            .map(|i| {
                let l = levels(i);
                let mut row: Vec<(usize, f64)> = Vec::new();
                let diag: f64 = pairs.iter().map(|&(a, b)| m_of(l[a]) * m_of(l[b])).sum::<f64>() * jk;
                row.push((i, diag));
                for &(a, b) in &pairs {
                    // S+_a S-_b and S-_a S+_b, each with weight J/2
                    for (up, down) in [(a, b), (b, a)] {
                        if l[up] == 0 || l[down] == D - 1 {
                            continue;
                        }
                        let (mu, md) = (m_of(l[up]), m_of(l[down]));
                        let mut n = l;
                        n[up] -= 1;
                        n[down] += 1;
                        row.push((index(n), 0.5 * jk * raise(mu) * raise(md - 1.0)));
                    }
                }
                // S^x = (S+ + S-)/2 on site 1
                let m1 = m_of(l[0]);
                if l[0] > 0 {
                    let mut n = l;
                    n[0] -= 1;
                    row.push((index(n), -zeeman_x * 0.5 * raise(m1)));
                }
                if l[0] < D - 1 {
                    let mut n = l;
                    n[0] += 1;
                    row.push((index(n), -zeeman_x * 0.5 * raise(m1 - 1.0)));
                }
                row
            })
            .collect()
    }

    pub fn dense(rows: &[Vec<(usize, f64)>]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(DIM, DIM);
        for (i, row) in rows.iter().enumerate() {
            for &(j, v) in row {
                m[(i, j)] += v;
            }
        }
        m
    }

    fn binomial(n: usize, k: usize) -> f64 {
        (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
    }

    /// Symmetric state with `k` excitations: amplitude `sqrt(Π C(5, n_a) / C(15, k))`
    /// on every configuration with `n_a` excitations on site `a`.
    pub fn dicke(k: usize) -> DVector<Complex64> {
        let mut v = DVector::zeros(DIM);
        for i in 0..DIM {
            let n: Vec<usize> = levels(i).iter().map(|&l| D - 1 - l).collect();
            if n.iter().sum::<usize>() == k {
                let w: f64 = n.iter().map(|&na| binomial(5, na)).product::<f64>() / binomial(15, k);
                v[i] = Complex64::new(w.sqrt(), 0.0);
            }
        }
        v
    }

    /// Compressed rows of a real sparse matrix.
    struct Csr {
        start: Vec<usize>,
        col: Vec<usize>,
        val: Vec<f64>,
    }

    impl Csr {
        fn new(rows: &[Vec<(usize, f64)>], shift: f64) -> Self {
            let mut csr = Csr { start: vec![0], col: Vec::new(), val: Vec::new() };
            for (i, row) in rows.iter().enumerate() {
                for &(j, v) in row {
                    csr.col.push(j);
                    csr.val.push(if i == j { v - shift } else { v });
                }
                csr.start.push(csr.col.len());
            }
            csr
        }

        /// `out = -i A (v + c·w)`.
        fn apply(&self, v: &[Complex64], w: &[Complex64], c: f64, out: &mut [Complex64]) {
            for (i, o) in out.iter_mut().enumerate().take(DIM) {
                let mut acc = Complex64::new(0.0, 0.0);
                for n in self.start[i]..self.start[i + 1] {
                    let j = self.col[n];
                    acc += (v[j] + w[j] * c) * self.val[n];
                }
                *o = Complex64::new(acc.im, -acc.re);
            }
        }
    }

    /// Fixed-step RK4 for `i dψ/dθ = (H - ⟨H⟩_0) ψ`; returns the states at the sample times
    /// (with the phase of the shift restored), and the largest norm drift seen.
    pub fn rk4_trace(
        rows: &[Vec<(usize, f64)>],
        psi0: &DVector<Complex64>,
        samples: &[f64],
        substeps: usize,
    ) -> (Vec<DVector<Complex64>>, f64) {
        let hpsi: Complex64 =
            (0..DIM).map(|i| rows[i].iter().map(|&(j, h)| psi0[i].conj() * psi0[j] * h).sum::<Complex64>()).sum();
        let a = Csr::new(rows, hpsi.re);
        let mut psi: Vec<Complex64> = psi0.iter().copied().collect();
        let zero = vec![Complex64::new(0.0, 0.0); DIM];
        let (mut k1, mut k2, mut k3, mut k4) = (zero.clone(), zero.clone(), zero.clone(), zero.clone());
        let mut t = samples[0];
        let mut out = vec![psi0.clone()];
        let mut drift: f64 = 0.0;
        for &target in &samples[1..] {
            let h = (target - t) / substeps as f64;
            for _ in 0..substeps {
                a.apply(&psi, &zero, 0.0, &mut k1);
                a.apply(&psi, &k1, 0.5 * h, &mut k2);
                a.apply(&psi, &k2, 0.5 * h, &mut k3);
                a.apply(&psi, &k3, h, &mut k4);
                for i in 0..DIM {
                    psi[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (h / 6.0);
                }
            }
            t = target;
            let v = DVector::from_vec(psi.clone());
            drift = drift.max((v.norm() - 1.0).abs());
            out.push(v * Complex64::from_polar(1.0, -hpsi.re * t));
        }
        (out, drift)
    }

    pub fn site_sz(psi: &DVector<Complex64>, site: usize) -> f64 {
        (0..DIM).map(|i| psi[i].norm_sqr() * m_of(levels(i)[site])).sum()
    }

    /// `exp(-i H τ)` by scaling and squaring a 30-term Taylor series.
    pub fn propagator(h: &DMatrix<f64>, tau: f64) -> DMatrix<Complex64> {
        let a: DMatrix<Complex64> = h.map(|x| Complex64::new(0.0, -x * tau));
        let norm = h.iter().map(|x| x.abs()).fold(0.0, f64::max) * DIM as f64 * tau;
        let squarings = (norm / 0.5).log2().ceil().max(0.0) as i32;
        let a = a.unscale(2f64.powi(squarings));
        let mut term = DMatrix::<Complex64>::identity(DIM, DIM);
        let mut sum = term.clone();
        for n in 1..=30 {
            term = &term * &a / Complex64::new(n as f64, 0.0);
            sum += &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }

    /// Site-3 readout probabilities after one step, ordered m = 5/2 … -5/2.
    pub fn step_probabilities(jk: f64, zeeman_x: f64, k: usize, tau: f64) -> [f64; 6] {
        let u = propagator(&dense(&sparse_local_x(jk, zeeman_x)), tau);
        let psi = u * dicke(k);
        let mut p = [0.0; 6];
        for i in 0..DIM {
            p[i % 6] += psi[i].norm_sqr();
        }
        p
    }

    /// Clebsch–Gordan count of total spin `twice/2` in 5/2 ⊗ 5/2 ⊗ 5/2.
    pub fn multiplicity(twice: i32) -> usize {
        (0..=5)
            .filter(|&s12: &i32| {
                let lo = (2 * s12 - 5).abs();
                twice >= lo && twice <= 2 * s12 + 5 && (twice - lo) % 2 == 0
            })
            .count()
    }
}

fn fmt_dur(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

#[test]
fn spectrum_matches_closed_form() {
    let start = Instant::now();
    let p = fe3();
    let d = diagonalize(&build_hamiltonian_z(&p).unwrap()).unwrap();
    let report_s = sector_analysis(&d, &p, DEFAULT_SECTOR_TOL).unwrap();
    let elapsed = start.elapsed();

    let mut expected = Vec::new();
    for twice in (1..=15).step_by(2) {
        let s = twice as f64 / 2.0;
        let e = 0.5 * j_k() * (s * (s + 1.0) - 105.0 / 4.0);
        for _ in 0..oracle::multiplicity(twice) * (twice as usize + 1) {
            expected.push(e);
        }
    }
    expected.sort_by(f64::total_cmp);
    let max_dev = d.eigenvalues().iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let census = report_s.census();
    let pass = expected.len() == 216
        && max_dev < 1e-6
        && census == vec![1, 2, 3, 4, 5, 6, 4, 2]
        && report_s.total_states() == 216
        && elapsed < Duration::from_secs(1);
    assert!(report(
        "spectrum",
        pass,
        format!(
            "max |E - E_closed| = {max_dev:.2e} K, census {census:?}, total {}, runtime {}",
            report_s.total_states(),
            fmt_dur(elapsed)
        ),
    ));
}

#[test]
fn ground_state_crossings() {
    let p = fe3();
    let ground_sz = |b: f64| -> f64 {
        let d = diagonalize(&build_hamiltonian_z(&p.with_b_z(b)).unwrap()).unwrap();
        eigenstate_sz(&d)[0]
    };
    let analytic = level_crossing_fields(&p);
    let mut max_dev: f64 = 0.0;
    let mut computed = Vec::new();
    for (i, twice) in (1..=13).step_by(2).enumerate() {
        let below = twice as f64 / 2.0;
        let s = below;
        let oracle_field = (s + 1.0) * j_k() / gmu();
        // bisect on the diagonalized ground state around the closed-form guess
        let (mut lo, mut hi) = (oracle_field - 2.0, oracle_field + 2.0);
        assert!(ground_sz(lo) < below + 0.5 && ground_sz(hi) > below + 0.5);
        while hi - lo > 1e-9 {
            let mid = 0.5 * (lo + hi);
            if ground_sz(mid) > below + 0.5 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let b = 0.5 * (lo + hi);
        computed.push(b);
        max_dev = max_dev.max((b - oracle_field).abs()).max((analytic[i] - oracle_field).abs());
    }
    let first = computed[0];
    let last = computed[6];
    let pass = max_dev < 1e-6 && (first - 20.18).abs() <= 0.05 && (last - 100.9).abs() <= 0.3;
    assert!(report(
        "level-crossings",
        pass,
        format!("first {first:.4} T, saturation {last:.4} T, max |B - (S+1)J/(gμ_B)| = {max_dev:.2e} T"),
    ));
}

#[test]
fn magnetization_plateaus() {
    let p = fe3();
    let crossings: Vec<f64> = (0..7).map(|i| (i as f64 + 1.5) * j_k() / gmu()).collect();
    let grid: Vec<f64> = (0..600).map(|i| 110.0 * i as f64 / 599.0).collect();

    let start = Instant::now();
    let cold = magnetization_curve(&p, 0.02, &grid, Execution::Parallel).unwrap();
    let elapsed = start.elapsed();

    let mut max_dev: f64 = 0.0;
    let mut seen = std::collections::BTreeSet::new();
    for pt in &cold.points {
        let interior = pt.b_z > 0.5 && crossings.iter().all(|c| (pt.b_z - c).abs() > 0.5);
        if !interior {
            continue;
        }
        let steps = crossings.iter().filter(|&&c| c < pt.b_z).count();
        let frac = (2 * steps + 1) as f64 / 15.0;
        max_dev = max_dev.max((pt.m_normalized - frac).abs());
        seen.insert(2 * steps + 1);
    }
    let all_fractions = seen.iter().copied().collect::<Vec<_>>() == vec![1, 3, 5, 7, 9, 11, 13, 15];

    let warm_grid: Vec<f64> = (0..600).map(|i| 60.0 * i as f64 / 599.0).collect();
    let warm = magnetization_curve(&p, 1.8, &warm_grid, Execution::Parallel).unwrap();
    let found: Vec<u32> = detect_plateaus(&warm, 5e-3, 1.0).iter().map(|pl| pl.nearest_fraction()).collect();
    let first_four = found.len() >= 4 && found[..4] == [1, 3, 5, 7];

    let pass = max_dev < 1e-6 && all_fractions && first_four && elapsed < Duration::from_secs(30);
    assert!(report(
        "plateaus",
        pass,
        format!(
            "T=0.02 K: max interior deviation {max_dev:.2e}, fractions k/15 seen {seen:?}, 600-point sweep {}; T=1.8 K plateaus (k/15) {found:?}",
            fmt_dur(elapsed)
        ),
    ));
}

#[test]
fn magnetization_cross_check() {
    let p = fe3();
    let mut rng = StdRng::seed_from_u64(0x05ee_dfe3);
    let mut worst: f64 = 0.0;
    let mut worst_at = (0.0, 0.0);
    for _ in 0..50 {
        let t = rng.random_range(0.5..100.0);
        let b = rng.random_range(0.0..110.0);
        let m = magnetization(&p.with_b_z(b), t).unwrap();
        if m.discrepancy() > worst {
            worst = m.discrepancy();
            worst_at = (t, b);
        }
    }
    assert!(report(
        "magnetization-cross-check",
        worst < 1e-4,
        format!(
            "50 seeded points, max |M_thermal - M_dG/dB| = {worst:.2e} (T = {:.2} K, B = {:.2} T)",
            worst_at.0, worst_at.1
        ),
    ));
}

#[test]
fn negativity_anchors_and_thresholds() {
    let p = fe3();
    let n_at = |b: f64, t: f64| -> f64 {
        let d = diagonalize(&build_hamiltonian_z(&p.with_b_z(b)).unwrap()).unwrap();
        pair_negativity(&thermal_state(&d, t).unwrap(), 1, 2).unwrap().value
    };
    let n0 = n_at(0.0, 1.0);
    let n10 = n_at(10.0, 1.0);

    let start = Instant::now();
    let bip: Vec<f64> = [0.0, 10.0, 30.0]
        .iter()
        .map(|&b| threshold_temperature(&p.with_b_z(b), Measure::Bipartite, (1.0, 200.0)).unwrap())
        .collect();
    let trip = threshold_temperature(&p.with_b_z(10.0), Measure::Tripartite, (1.0, 300.0)).unwrap();
    let elapsed = start.elapsed();

    let mut failures = Vec::new();
    if (n0 - 0.24).abs() > 0.02 {
        failures.push("N_bip(0 T, 1 K)");
    }
    if (n10 - 0.36).abs() > 0.02 {
        failures.push("N_bip(10 T, 1 K)");
    }
    for (b, t) in ["T_bip(0 T)", "T_bip(10 T)", "T_bip(30 T)"].iter().zip(&bip) {
        if (t - 27.5).abs() > 1.0 {
            failures.push(b);
        }
    }
    if (trip - 70.0).abs() > 3.0 {
        failures.push("T_trip(10 T)");
    }
    if elapsed > Duration::from_secs(120) {
        failures.push("runtime");
    }
    assert!(report(
        "negativity",
        failures.is_empty(),
        format!(
            "N_bip(0 T,1 K) = {n0:.4}, N_bip(10 T,1 K) = {n10:.4}; bipartite thresholds {:.2}/{:.2}/{:.2} K at 0/10/30 T (target 27.5 ± 1); tripartite threshold {trip:.2} K at 10 T (target 70 ± 3); bisections {}; out of tolerance: {failures:?}",
            bip[0], bip[1], bip[2], fmt_dur(elapsed)
        ),
    ));
}

#[test]
fn threefold_symmetry() {
    let p = fe3();
    let mut pair_dev: f64 = 0.0;
    let mut cut_dev: f64 = 0.0;
    let mut trip_dev: f64 = 0.0;
    for &(b, t) in &[(0.0, 1.0), (10.0, 1.0), (10.0, 20.0), (30.0, 5.0), (60.0, 0.5)] {
        let d = diagonalize(&build_hamiltonian_z(&p.with_b_z(b)).unwrap()).unwrap();
        let rho = thermal_state(&d, t).unwrap();
        let r12 = partial_trace(&rho, 3).unwrap();
        let r13 = partial_trace(&rho, 2).unwrap();
        let r23 = partial_trace(&rho, 1).unwrap();
        let dev = |a: &DMatrix<Complex64>, b: &DMatrix<Complex64>| (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max);
        pair_dev = pair_dev.max(dev(r12.matrix(), r13.matrix())).max(dev(r12.matrix(), r23.matrix()));
        let cuts: Vec<f64> = (1..=3).map(|s| one_vs_rest_negativity(&rho, s).unwrap().value).collect();
        cut_dev = cut_dev.max((cuts[0] - cuts[1]).abs()).max((cuts[0] - cuts[2]).abs());
        trip_dev = trip_dev.max((tripartite_negativity(&rho).unwrap().value - cuts[0]).abs());
    }
    let pass = pair_dev < 1e-10 && cut_dev < 1e-8 && trip_dev < 1e-8;
    assert!(report(
        "c3-symmetry",
        pass,
        format!("pair reduced states max deviation {pair_dev:.2e}, one-vs-rest spread {cut_dev:.2e}, |N_trip - N_1|23| = {trip_dev:.2e}"),
    ));
}

#[test]
fn dicke_states() {
    let sz = total_sz(SpinQuantum::FE3);
    let perms = [[1, 2, 3], [1, 3, 2], [2, 1, 3], [2, 3, 1], [3, 1, 2], [3, 2, 1]];
    let mut norm_dev: f64 = 0.0;
    let mut perm_dev: f64 = 0.0;
    let mut sz_dev: f64 = 0.0;
    let mut oracle_dev: f64 = 0.0;
    for k in DickeIndex::all() {
        let v = dicke_state(k).unwrap();
        norm_dev = norm_dev.max((v.norm() - 1.0).abs());
        for perm in perms {
            let w = v.permute_sites(perm);
            perm_dev = perm_dev.max((w.amplitudes() - v.amplitudes()).camax());
        }
        sz_dev = sz_dev.max((v.expectation(&sz).unwrap() - (-7.5 + k.get() as f64)).abs());
        oracle_dev = oracle_dev.max((v.amplitudes() - oracle::dicke(k.get() as usize)).camax());
    }

    // Explicit coefficients for one, two and three excitations.
    let amp = |k: u32, twice_m: [i32; 3]| -> f64 {
        let v = dicke_state(DickeIndex::new(k).unwrap()).unwrap();
        let l = twice_m.map(|t| ((5 - t) / 2) as usize);
        v.amplitudes()[oracle::index(l)].re
    };
    let listed = [
        (1, [-3, -5, -5], (1.0f64 / 3.0).sqrt()),
        (2, [-1, -5, -5], (2.0f64 / 21.0).sqrt()),
        (2, [-3, -3, -5], (5.0f64 / 21.0).sqrt()),
        (3, [-1, -3, -5], (10.0f64 / 91.0).sqrt()),
        (3, [1, -5, -5], (2.0f64 / 91.0).sqrt()),
        (3, [-3, -3, -3], 5.0 * (1.0f64 / 91.0).sqrt()),
    ];
    let coeff_dev = listed.iter().map(|&(k, m, c)| (amp(k, m) - c).abs()).fold(0.0, f64::max);

    let pass = norm_dev < 1e-12 && perm_dev < 1e-12 && sz_dev < 1e-10 && coeff_dev < 1e-12 && oracle_dev < 1e-12;
    assert!(report(
        "dicke",
        pass,
        format!(
            "16 states: norm dev {norm_dev:.1e}, permutation dev {perm_dev:.1e}, <S_T^z> dev {sz_dev:.1e}; listed coefficients dev {coeff_dev:.1e}; binomial oracle dev {oracle_dev:.1e}"
        ),
    ));
}

#[test]
fn dynamics() {
    let p = fe3();
    let grid = default_time_grid(&p);

    let mut static_drift: f64 = 0.0;
    for k in DickeIndex::all() {
        let rec = magnetization_trace(k, &p, &grid).unwrap();
        for series in [&rec.sz1, &rec.sz2, &rec.sz3] {
            static_drift = static_drift.max(series.iter().map(|x| (x - series[0]).abs()).fold(0.0, f64::max));
        }
    }

    let configs: Vec<(u32, f64)> = [1.0, 5.0].iter().flat_map(|&b| (0..4).map(move |k| (k, b))).collect();
    let results = Execution::Parallel.map(&configs, |&(k, b_x)| {
        let q = p.with_b_x(b_x);
        let rec = magnetization_trace(DickeIndex::new(k).unwrap(), &q, &grid).unwrap();
        let rows = oracle::sparse_local_x(j_k(), gmu() * b_x);
        let (states, norm_drift) = oracle::rk4_trace(&rows, &oracle::dicke(k as usize), &grid, 600);
        let mut dev: f64 = 0.0;
        for (n, psi) in states.iter().enumerate() {
            dev = dev
                .max((oracle::site_sz(psi, 0) - rec.sz1[n]).abs())
                .max((oracle::site_sz(psi, 1) - rec.sz2[n]).abs())
                .max((oracle::site_sz(psi, 2) - rec.sz3[n]).abs());
        }
        let d = diagonalize(&build_hamiltonian_local_x(&q).unwrap()).unwrap();
        let last = *grid.last().unwrap();
        let spectral = evolve(&dicke_state(DickeIndex::new(k).unwrap()).unwrap(), &d, last).unwrap();
        let state_dev = (spectral.amplitudes() - states.last().unwrap()).norm();
        (dev, norm_drift, rec.sensor_readout_correlation(), state_dev)
    });
    let max_state_dev = results.iter().map(|r| r.3).fold(0.0, f64::max);
    let max_dev = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let max_norm_drift = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let min_corr = results.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);

    let pass = static_drift < 1e-9 && max_dev < 1e-6 && max_state_dev < 1e-6 && min_corr >= 0.9;
    assert!(report(
        "dynamics",
        pass,
        format!(
            "B_x=0 drift {static_drift:.1e}; spectral vs RK4 max |Δ<S_i^z>| {max_dev:.1e}, final-state |Δψ| {max_state_dev:.1e} (RK4 norm drift {max_norm_drift:.1e}); min sensor-readout correlation {min_corr:.4} over k=0..3, B_x=1,5 T"
        ),
    ));
}

#[test]
fn sequential_sensing() {
    let model = fe3();
    let tau = default_tau(&model).unwrap();
    let configs: Vec<(u32, f64)> = [1.0, 5.0].iter().flat_map(|&b| (0..4).map(move |k| (k, b))).collect();
    let start = Instant::now();

    // Completeness of the exhaustive trees.
    let mut sum_dev: f64 = 0.0;
    for &(k, b) in &configs {
        for n in 1..=6 {
            let c = ProtocolConfig::uniform(model.with_b_x(b), DickeIndex::new(k).unwrap(), n, tau);
            let tree = trajectory_probabilities(&c, Execution::Parallel).unwrap();
            let total: f64 = tree.leaves.iter().map(|l| l.probability).sum();
            sum_dev = sum_dev.max((total - 1.0).abs());
        }
    }

    let mut oracle_dev: f64 = 0.0;
    let mut all_decreasing = true;
    let mut betas = Vec::new();
    for &(k, b) in &configs {
        let c = ProtocolConfig::uniform(model.with_b_x(b), DickeIndex::new(k).unwrap(), 6, tau);
        let series = fisher_information_series(&c, DEFAULT_DELTA_B, Execution::Parallel).unwrap();

        // five-point derivative of the six single-step probabilities
        let h = 1e-2;
        let probs: Vec<[f64; 6]> = [-2.0, -1.0, 1.0, 2.0, 0.0]
            .iter()
            .map(|s| oracle::step_probabilities(j_k(), gmu() * (b + s * h), k as usize, tau))
            .collect();
        let f1: f64 = (0..6)
            .filter(|&o| probs[4][o] >= 1e-12)
            .map(|o| {
                let dp = (probs[0][o] - 8.0 * probs[1][o] + 8.0 * probs[2][o] - probs[3][o]) / (12.0 * h);
                dp * dp / probs[4][o]
            })
            .sum();
        oracle_dev = oracle_dev.max((series[0].f_value - f1).abs() / f1);

        all_decreasing &= series.windows(2).all(|w| w[1].inverse < w[0].inverse);
        let pts: Vec<(f64, f64)> = series.iter().map(|e| (e.n_seq as f64, e.inverse)).collect();
        betas.push(fit_power_law(&pts).unwrap().beta);
    }
    let elapsed = start.elapsed();
    let min_beta = betas.iter().copied().fold(f64::INFINITY, f64::min);

    let pass =
        sum_dev < 1e-9 && oracle_dev < 1e-6 && all_decreasing && min_beta > 1.0 && elapsed < Duration::from_secs(300);
    let beta_list: Vec<String> = betas.iter().map(|b| format!("{b:.3}")).collect();
    assert!(report(
        "sensing",
        pass,
        format!(
            "tau = {tau}; max |ΣP - 1| {sum_dev:.1e} for n_seq 1..6; F(1) vs oracle rel. dev {oracle_dev:.1e}; 1/F strictly decreasing: {all_decreasing}; beta per (k, B_x) {beta_list:?}; runtime {}",
            fmt_dur(elapsed)
        ),
    ));
}
