//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line (run with `cargo test --test acceptance -- --nocapture`).

use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use hrmod_core::ci::{
    check_global_markov, ci_general_mhr, ci_sigma2, ci_singleton, sigma2_gap_polynomial,
    CiStatement, Ternary,
};
use hrmod_core::elliptope::{
    classify_correlation, map_gamma_of_r, map_r_of_gamma, sample_boundary_star, sample_f3,
    ElliptopeTag, F3Filters,
};
use hrmod_core::gen::{random_emtp2_variogram, random_variogram};
use hrmod_core::graph::MarkovGraph;
use hrmod_core::index_set::{disjoint_triples, IndexSet};
use hrmod_core::linalg::SymMatrix;
use hrmod_core::model::{
    fiedler_bapat, validate_variogram, variogram_from_precision, DensityEvaluator, Variogram,
};
use hrmod_core::quad::simpson_box;
use hrmod_core::setfn::{
    m_hr, m_hr_integral, m_hr_minor_det, m_hr_rep, modularity_gap, sigma2, sigma2_rep,
    sigma2_theta_sum, MhrRep, ModularityVerdict, SetFunctionKind, Sigma2Rep,
};
use hrmod_core::tol::Tol;

fn finish(criterion: &str, started: Instant, budget: Duration) {
    let elapsed = started.elapsed();
    println!("ACCEPTANCE PASS {criterion} ({elapsed:.2?}, budget {budget:.2?})");
    assert!(
        elapsed <= budget,
        "{criterion} exceeded its runtime budget: {elapsed:.2?}"
    );
}

fn unit_four_cycle_laplacian() -> SymMatrix {
    SymMatrix::from_upper(DMatrix::from_row_slice(
        4,
        4,
        &[
            2.0, -1.0, 0.0, -1.0, //
            -1.0, 2.0, -1.0, 0.0, //
            0.0, -1.0, 2.0, -1.0, //
            -1.0, 0.0, -1.0, 2.0,
        ],
    ))
    .unwrap()
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// A planted M-matrix instance whose barycentric vector is nonnegative
/// (the hypothesis of the sigma^2 submodularity theorem).
fn emtp2_p_nonneg_instance(d: usize, start_seed: u64) -> (Variogram, MarkovGraph, u64) {
    let tol = Tol::default();
    for seed in start_seed..start_seed + 200 {
        let (v, g) = random_emtp2_variogram(d, seed);
        let block = fiedler_bapat(&v, &IndexSet::full(d)).unwrap();
        if block.p.iter().all(|&pi| pi >= -tol.rel) {
            return (v, g, seed);
        }
    }
    panic!("no nonnegative-p instance found in 200 seeds");
}

#[test]
fn criterion_1_four_cycle_end_to_end() {
    let started = Instant::now();
    let tol = Tol::default();

    // precision -> variogram: adjacent 3/4, opposite 1
    let theta = unit_four_cycle_laplacian();
    let v = variogram_from_precision(&theta, tol).unwrap();
    for (i, j, expected) in [
        (0, 1, 0.75),
        (1, 2, 0.75),
        (2, 3, 0.75),
        (0, 3, 0.75),
        (0, 2, 1.0),
        (1, 3, 1.0),
    ] {
        assert!(
            (v.entry(i, j) - expected).abs() <= 1e-10,
            "G[{i}{j}] = {} != {expected}",
            v.entry(i, j)
        );
    }

    // structural zeros of the recovered precision matrix
    let block = fiedler_bapat(&v, &IndexSet::full(4)).unwrap();
    assert!(block.theta.at(0, 2).abs() <= 1e-10);
    assert!(block.theta.at(1, 3).abs() <= 1e-10);

    // m^HR modularity for both diagonals, with v(ABC) = log 2
    for (a, b) in [(0usize, 2usize), (1, 3)] {
        let c = IndexSet::full(4).minus(&IndexSet::new(vec![a, b]));
        let report = modularity_gap(
            &v,
            &IndexSet::singleton(a),
            &IndexSet::singleton(b),
            &c,
            SetFunctionKind::Mhr,
            tol,
        )
        .unwrap();
        assert!(rel_err(report.v_abc, 2.0f64.ln()) <= 1e-9);
        assert!(report.gap.abs() <= 1e-9);
        assert_eq!(report.verdict, ModularityVerdict::Modular);
    }

    // sigma^2 values and both modularity equations of the running example
    let s_full = sigma2(&v, &IndexSet::full(4)).unwrap();
    let s_24 = sigma2(&v, &IndexSet::new(vec![1, 3])).unwrap();
    let s_124 = sigma2(&v, &IndexSet::new(vec![0, 1, 3])).unwrap();
    let s_234 = sigma2(&v, &IndexSet::new(vec![1, 2, 3])).unwrap();
    assert!(rel_err(s_full, 5.0 / 16.0) <= 1e-10);
    assert!(rel_err(s_24, 0.25) <= 1e-10);
    assert!(rel_err(s_124, 9.0 / 32.0) <= 1e-10);
    assert!(rel_err(s_234, 9.0 / 32.0) <= 1e-10);
    let s_13 = sigma2(&v, &IndexSet::new(vec![0, 2])).unwrap();
    let s_123 = sigma2(&v, &IndexSet::new(vec![0, 1, 2])).unwrap();
    let s_134 = sigma2(&v, &IndexSet::new(vec![0, 2, 3])).unwrap();
    assert!((s_full + s_24 - s_124 - s_234).abs() <= 1e-9);
    assert!((s_full + s_13 - s_123 - s_134).abs() <= 1e-9);

    // both reduced polynomials vanish on the instance
    assert!(sigma2_gap_polynomial(&block, 0, 2).abs() <= 1e-12);
    assert!(sigma2_gap_polynomial(&block, 1, 3).abs() <= 1e-12);

    finish("1 four-cycle end-to-end", started, Duration::from_secs(1));
}

#[test]
fn criterion_2_representation_equivalence() {
    let started = Instant::now();
    let tol = Tol::default();
    let mut rng = ChaCha12Rng::seed_from_u64(2024);

    for n in 0..50u64 {
        let d = 2 + (n % 5) as usize; // cycles 2..=6
        let v = random_variogram(d, 1000 + n);
        let full = IndexSet::full(d);

        // m^HR: cheap representations at 1e-9 relative, all anchors
        let m_ref = m_hr(&v, &full).unwrap();
        for rep in [
            MhrRep::Definition,
            MhrRep::CmDet,
            MhrRep::PseudoDet,
            MhrRep::SpanningTree,
        ] {
            let got = m_hr_rep(&v, &full, rep, tol).unwrap();
            assert!(
                rel_err(got, m_ref) <= 1e-9,
                "instance {n} rep {:?}: {got} vs {m_ref}",
                rep
            );
        }
        for k in 0..d {
            let got = m_hr_minor_det(&v, &full, k).unwrap();
            assert!(
                (got - m_ref).abs() <= 1e-10 * m_ref.abs().max(1.0),
                "anchor {k}"
            );
        }

        // sigma^2: cheap representations at 1e-9 relative, all anchors
        let s_ref = sigma2(&v, &full).unwrap();
        for rep in [
            Sigma2Rep::InverseRowsum,
            Sigma2Rep::DetQuotient,
            Sigma2Rep::MaxQuadratic,
            Sigma2Rep::Trace,
        ] {
            let got = sigma2_rep(&v, &full, rep, tol).unwrap();
            assert!(rel_err(got, s_ref) <= 1e-9, "instance {n} rep {:?}", rep);
        }
        for k in 0..d {
            let got = sigma2_theta_sum(&v, &full, k).unwrap();
            assert!(
                (got - s_ref).abs() <= 1e-10 * s_ref.abs().max(1.0),
                "anchor {k}"
            );
        }

        // the maximizer route: random feasible points never beat sigma^2
        let gsub = v.gamma().as_dmatrix().clone();
        for _ in 0..200 {
            let mut x = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
            let s: f64 = x.iter().sum();
            if s.abs() < 0.1 {
                continue;
            }
            x /= s;
            let q = 0.5 * (x.transpose() * &gsub * &x)[0];
            assert!(q <= s_ref + 1e-12);
        }

        // a proper margin exercises the same representations
        if d >= 4 {
            let margin = IndexSet::new(vec![0, 2, d - 1]);
            let m_ref = m_hr(&v, &margin).unwrap();
            let s_ref = sigma2(&v, &margin).unwrap();
            for rep in [MhrRep::MinorDet, MhrRep::PseudoDet, MhrRep::SpanningTree] {
                assert!(rel_err(m_hr_rep(&v, &margin, rep, tol).unwrap(), m_ref) <= 1e-9);
            }
            for rep in [
                Sigma2Rep::DetQuotient,
                Sigma2Rep::ThetaSum,
                Sigma2Rep::Trace,
            ] {
                assert!(rel_err(sigma2_rep(&v, &margin, rep, tol).unwrap(), s_ref) <= 1e-9);
            }
        }

        // integral representations where they are defined
        if d <= 3 {
            let k = 0;
            let m_int = m_hr_integral(&v, &full, k).unwrap();
            assert!(
                (m_int - m_ref).abs() <= 1e-3 * m_ref.abs().max(1.0),
                "instance {n}: integral m = {m_int} vs {m_ref}"
            );
            let s_int = sigma2_rep(&v, &full, Sigma2Rep::Integral, tol).unwrap();
            assert!(
                (s_int - s_ref).abs() <= 5e-2 * s_ref.abs().max(1.0),
                "instance {n}: integral sigma^2 = {s_int} vs {s_ref}"
            );
        }
    }

    finish(
        "2 representation equivalence",
        started,
        Duration::from_secs(30),
    );
}

#[test]
fn criterion_3_modularity_sweeps() {
    let started = Instant::now();
    let tol = Tol::default();
    let d = 5;
    let triples = disjoint_triples(d, true);
    assert!(!triples.is_empty());

    // supermodularity of m^HR on arbitrary valid variograms
    for seed in 0..10u64 {
        let v = random_variogram(d, 3000 + seed);
        for (a, b, c) in &triples {
            let report = modularity_gap(&v, a, b, c, SetFunctionKind::Mhr, tol).unwrap();
            let scale = [report.v_abc, report.v_c, report.v_ac, report.v_bc]
                .iter()
                .fold(1.0f64, |m, x| m.max(x.abs()));
            assert!(
                report.gap >= -1e-9 * scale,
                "seed {seed} triple ({a},{b},{c}): supermodular gap {}",
                report.gap
            );
        }
    }

    // submodularity of sigma^2 on M-matrix instances with nonnegative p
    let mut start = 4000;
    for _ in 0..10 {
        let (v, _g, seed) = emtp2_p_nonneg_instance(d, start);
        start = seed + 1;
        for (a, b, c) in &triples {
            let report = modularity_gap(&v, a, b, c, SetFunctionKind::Sigma2, tol).unwrap();
            let scale = [report.v_abc, report.v_c, report.v_ac, report.v_bc]
                .iter()
                .fold(1.0f64, |m, x| m.max(x.abs()));
            assert!(
                report.gap >= -1e-9 * scale,
                "seed {seed} triple ({a},{b},{c}): submodular gap {}",
                report.gap
            );
        }
    }

    finish(
        "3 super/submodularity sweeps",
        started,
        Duration::from_secs(60),
    );
}

#[test]
fn criterion_4_planted_ci_recovery() {
    let started = Instant::now();
    let tol = Tol::default();
    for n in 0..20u64 {
        let d = 4 + (n % 3) as usize;
        let (v, truth) = random_emtp2_variogram(d, 5000 + n);
        let report = check_global_markov(&v, &truth, 7, tol).unwrap();
        assert!(
            report.passed(),
            "instance {n}: true graph violated: {:?}",
            report.violations
        );

        // every single-edge deletion invents at least one false separation
        for &(i, j) in truth.edges() {
            let sparser = truth.without_edge(i, j);
            let report = check_global_markov(&v, &sparser, 7, tol).unwrap();
            assert!(
                !report.passed(),
                "instance {n}: removing edge ({i},{j}) went undetected"
            );
        }
    }
    finish("4 planted-CI recovery", started, Duration::from_secs(60));
}

#[test]
fn criterion_5_singleton_criterion_agreement() {
    let started = Instant::now();
    let tol = Tol::default();
    let mut rng = ChaCha12Rng::seed_from_u64(7000);

    // instance pool: planted M-matrix models and generic point clouds
    let mut pool: Vec<Variogram> = Vec::new();
    for seed in 0..10u64 {
        let d = 3 + (seed % 4) as usize;
        pool.push(random_emtp2_variogram(d, 6000 + seed).0);
        pool.push(random_variogram(d, 6500 + seed));
    }

    let mut holds = 0usize;
    let mut fails = 0usize;
    for draw in 0..1000 {
        let v = &pool[rng.gen_range(0..pool.len())];
        let d = v.dim();
        let i = rng.gen_range(0..d);
        let j = loop {
            let j = rng.gen_range(0..d);
            if j != i {
                break j;
            }
        };
        let rest: Vec<usize> = (0..d).filter(|&q| q != i && q != j).collect();
        let mask = rng.gen_range(1u32..(1 << rest.len()));
        let c = IndexSet::new(
            rest.iter()
                .enumerate()
                .filter(|(pos, _)| mask >> pos & 1 == 1)
                .map(|(_, &q)| q)
                .collect(),
        );
        match ci_singleton(v, i, j, &c, tol) {
            Ok(verdict) => match verdict.verdict {
                Ternary::Holds => holds += 1,
                Ternary::Fails => fails += 1,
                Ternary::Indeterminate => {}
            },
            Err(e) => panic!("draw {draw}: criteria disagreed: {e}"),
        }
    }
    assert!(holds > 0, "no conditional independencies in 1000 draws");
    assert!(fails > 0, "no dependent draws in 1000 draws");

    finish(
        "5 singleton-criterion agreement",
        started,
        Duration::from_secs(30),
    );
}

#[test]
fn criterion_6_density_normalization() {
    let started = Instant::now();
    for &gamma in &[0.5f64, 1.0, 2.0] {
        let g = DMatrix::from_row_slice(2, 2, &[0.0, gamma, gamma, 0.0]);
        let v = validate_variogram(&g, Tol::default()).unwrap();
        let density = DensityEvaluator::new(&v).unwrap();
        // y = (t, t + z): the halfspace y_1 > 0 becomes t > 0, unit Jacobian
        let sd = gamma.sqrt();
        let mean = -gamma / 2.0;
        let mass = simpson_box(
            &[0.0, mean - 9.5 * sd],
            &[38.0, mean + 9.5 * sd],
            &[256, 192],
            |tz| density.eval(&[tz[0], tz[0] + tz[1]]),
        );
        assert!(
            (mass - 1.0).abs() <= 1e-3,
            "gamma = {gamma}: halfspace mass {mass} is not 1"
        );
    }
    finish("6 density normalization", started, Duration::from_secs(10));
}

#[test]
fn criterion_7_elliptope_geometry() {
    let started = Instant::now();
    let tol = Tol::default();

    // 10^3 usable-boundary samples map to variograms with sigma^2 = 1
    let stars = sample_boundary_star(3, 1100, 71, tol);
    assert!(stars.len() >= 1000, "only {} usable samples", stars.len());
    for r in stars.iter().take(1000) {
        let g = map_gamma_of_r(r, tol).unwrap();
        let block = fiedler_bapat(&g.variogram, &IndexSet::full(3)).unwrap();
        assert!((block.sigma2 - 1.0).abs() <= 1e-8);
    }

    // every elliptope sample maps into the usable part of the boundary
    let pts = sample_f3(3000, 72, F3Filters::default(), tol);
    assert!(!pts.is_empty());
    for p in &pts {
        let [g12, g13, g23] = p.coords;
        let m = DMatrix::from_row_slice(3, 3, &[0.0, g12, g13, g12, 0.0, g23, g13, g23, 0.0]);
        let v = validate_variogram(&m, tol).unwrap();
        let r = map_r_of_gamma(&v).unwrap();
        let tag = classify_correlation(&r, tol).tag;
        assert!(
            tag == ElliptopeTag::InteriorE || tag == ElliptopeTag::BoundaryStar,
            "sample mapped to {tag:?}"
        );
    }

    // for d = 3 the M-matrix property coincides with nonnegative p
    let pts = sample_f3(10_000, 73, F3Filters::default(), tol);
    for p in &pts {
        assert_eq!(p.emtp2, p.p_nonneg, "flags split at {:?}", p.coords);
    }

    // determinism under a fixed seed
    let again = sample_f3(10_000, 73, F3Filters::default(), tol);
    assert_eq!(pts.len(), again.len());
    for (x, y) in pts.iter().zip(&again) {
        assert_eq!(x.coords, y.coords);
        assert_eq!(x.sigma2.to_bits(), y.sigma2.to_bits());
    }

    finish("7 elliptope geometry", started, Duration::from_secs(60));
}

#[test]
fn criterion_8_reconstruction_identities() {
    let started = Instant::now();
    let mut instances: Vec<Variogram> =
        vec![variogram_from_precision(&unit_four_cycle_laplacian(), Tol::default()).unwrap()];
    for seed in 0..20u64 {
        let d = 2 + (seed % 6) as usize;
        instances.push(random_variogram(d, 8000 + seed));
    }
    for v in &instances {
        let d = v.dim();
        for i in 0..d {
            for j in (i + 1)..d {
                let pair = IndexSet::new(vec![i, j]);
                let m = m_hr(v, &pair).unwrap();
                let s = sigma2(v, &pair).unwrap();
                let gij = v.entry(i, j);
                assert!(rel_err((-2.0 * m).exp(), gij) <= 1e-12);
                assert!(rel_err(4.0 * s, gij) <= 1e-12);
            }
        }
    }
    finish(
        "8 reconstruction identities",
        started,
        Duration::from_secs(10),
    );
}

#[test]
fn criterion_cross_check_ci_methods_agree_on_the_four_cycle() {
    // auto-mode contract: whenever sigma^2 is applicable its verdict matches
    // the m^HR verdict; exercised here on the canonical instance
    let tol = Tol::default();
    let v = variogram_from_precision(&unit_four_cycle_laplacian(), tol).unwrap();
    for (a, b, c) in disjoint_triples(4, true) {
        let s = CiStatement::new(a, b, c);
        let mhr = ci_general_mhr(&v, &s, tol).unwrap();
        let sig = ci_sigma2(&v, &s, tol).unwrap();
        if let Some(app) = sig.applicability {
            if app.emtp2_on_margin && app.p_positive_on_margin {
                assert_eq!(mhr.verdict, sig.verdict, "methods split on {s}");
            }
        }
    }
}
