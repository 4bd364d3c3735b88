//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run alone with `cargo test --test acceptance`.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{max_abs_diff, naive_kendall, random_series, rng, vector_kendall};
use mkfactor::harness::bench::{run_bench, BenchConfig};
use mkfactor::harness::simulate::{run_simulate, write_simulate, Scenario, SimulateConfig, SimulateReport};
use mkfactor::kendall::{random_orthogonal, EllipticalLaw};
use mkfactor::{kendall, population_kendall_mc, sym_eigen, Dist, Method, Side};
use nalgebra::{DMatrix, DVector};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn simulate(scenario: Scenario, dist: Dist, t: usize, p: usize, methods: &[Method], threads: usize) -> SimulateReport {
    let cfg = SimulateConfig {
        methods: methods.to_vec(),
        threads,
        ..SimulateConfig::new(scenario, dist, t, p, p)
    };
    run_simulate(&cfg).expect("simulation runs")
}

fn in_range(x: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x)
}

/// Grid runs shared by several criteria.
struct Runs {
    normal: SimulateReport,
    t1: SimulateReport,
    t2: SimulateReport,
    t3: SimulateReport,
}

impl Runs {
    fn all(&self) -> [(&str, &SimulateReport); 4] {
        [("normal", &self.normal), ("t1", &self.t1), ("t2", &self.t2), ("t3", &self.t3)]
    }
}

fn criterion_1(runs: &Runs) -> Outcome {
    let s = runs.normal.summary_for(Method::Mrts).unwrap();
    let pass = in_range(s.d_r.0, 0.030, 0.048) && in_range(s.d_c.0, 0.030, 0.048);
    outcome(pass, format!("normal mrts mean D_R = {:.4}, D_C = {:.4} (band [0.030, 0.048])", s.d_r.0, s.d_c.0))
}

fn criterion_2(runs: &Runs) -> Outcome {
    let m = runs.t1.summary_for(Method::Mrts).unwrap();
    let a = runs.t1.summary_for(Method::Apca).unwrap();
    let pass = m.d_r.0 < 0.06
        && m.d_c.0 < 0.06
        && a.d_r.0 > 3.0 * m.d_r.0
        && a.d_c.0 > 3.0 * m.d_c.0;
    outcome(
        pass,
        format!(
            "t1 mrts D = ({:.4}, {:.4}) < 0.06; apca D = ({:.4}, {:.4}) > 3x mrts",
            m.d_r.0, m.d_c.0, a.d_r.0, a.d_c.0
        ),
    )
}

fn criterion_3(runs: &Runs) -> Outcome {
    let n = runs.normal.summary_for(Method::Mrts).unwrap().mse.0;
    let t3 = runs.t3.summary_for(Method::Mrts).unwrap().mse.0;
    let pass = in_range(n, 0.0055, 0.0075) && in_range(t3, 0.012, 0.030);
    outcome(
        pass,
        format!("mrts MSE normal = {n:.5} (band [0.0055, 0.0075]), t3 = {t3:.5} (band [0.012, 0.030])"),
    )
}

fn criterion_4(runs: &Runs) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, r) in runs.all() {
        let er = r.summary_for(Method::Mrts).unwrap().exact_both;
        pass &= er >= 0.97;
        parts.push(format!("{name} {er:.2}"));
    }
    let apca = runs.t1.summary_for(Method::Apca).unwrap().exact_both;
    pass &= apca <= 0.6;
    outcome(
        pass,
        format!("MKER exact recovery {} (>= 0.97); apca at t1 {apca:.2} (<= 0.6)", parts.join(", ")),
    )
}

fn criterion_5(runs: &Runs) -> Outcome {
    let b = simulate(Scenario::B, Dist::Normal, 50, 50, &[Method::Mrts], 1);
    let sb = b.summary_for(Method::Mrts).unwrap();
    let sa = runs.normal.summary_for(Method::Mrts).unwrap();
    let (dr, dc) = ((sb.d_r.0 - sa.d_r.0).abs(), (sb.d_c.0 - sa.d_c.0).abs());
    outcome(
        dr <= 0.005 && dc <= 0.005,
        format!(
            "scenario B mean D = ({:.4}, {:.4}) vs A ({:.4}, {:.4}); |diff| = ({dr:.4}, {dc:.4}) <= 0.005",
            sb.d_r.0, sb.d_c.0, sa.d_r.0, sa.d_c.0
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut g = rng(606);
    let mut fails = Vec::new();
    let mut worst = [0.0f64; 6];

    // symmetry, PSD, trace; oracle equivalence for T <= 30
    for (case, &(t, p1, p2, heavy)) in [(4, 3, 2, false), (17, 5, 4, true), (30, 6, 7, false), (30, 4, 4, true)]
        .iter()
        .enumerate()
    {
        let x = random_series(t, p1, p2, heavy, &mut g);
        for side in [Side::Row, Side::Column] {
            let k = kendall(&x, side, None).unwrap().mat;
            worst[0] = worst[0].max(max_abs_diff(&k, &k.transpose()));
            let min_eig = sym_eigen(&k).unwrap().values.min();
            if min_eig < -1e-10 {
                fails.push(format!("case {case} {side:?}: min eigenvalue {min_eig:e}"));
            }
            worst[1] = worst[1].max((k.trace() - 1.0).abs());
            worst[2] = worst[2].max(max_abs_diff(&k, &naive_kendall(&x, side)));
        }
    }

    // translation and scale invariance
    let x = random_series(25, 5, 6, true, &mut g);
    let shift = common::gaussian(5, 6, &mut g) * 3.0;
    let shifted = x.map(|m| m + &shift).unwrap();
    let scaled = x.map(|m| m * 7.5).unwrap();
    for side in [Side::Row, Side::Column] {
        let k = kendall(&x, side, None).unwrap().mat;
        worst[3] = worst[3]
            .max(max_abs_diff(&k, &kendall(&shifted, side, None).unwrap().mat))
            .max(max_abs_diff(&k, &kendall(&scaled, side, None).unwrap().mat));
    }

    // orthogonal equivariance over 50 random (P, Q)
    let x = random_series(20, 5, 4, false, &mut g);
    let k_row = kendall(&x, Side::Row, None).unwrap().mat;
    let k_col = kendall(&x, Side::Column, None).unwrap().mat;
    for _ in 0..50 {
        let p = random_orthogonal(5, &mut g);
        let q = random_orthogonal(4, &mut g);
        let y = x.map(|m| &p * m * q.transpose()).unwrap();
        let ky_row = kendall(&y, Side::Row, None).unwrap().mat;
        let ky_col = kendall(&y, Side::Column, None).unwrap().mat;
        worst[4] = worst[4]
            .max(max_abs_diff(&ky_row, &(&p * &k_row * p.transpose())))
            .max(max_abs_diff(&ky_col, &(&q * &k_col * q.transpose())));
    }

    // single-column observations reduce to the vector Kendall's tau
    let x = random_series(30, 6, 1, true, &mut g);
    let vs: Vec<DVector<f64>> = x.slices().iter().map(|m| m.column(0).into_owned()).collect();
    worst[5] = max_abs_diff(&kendall(&x, Side::Row, None).unwrap().mat, &vector_kendall(&vs));

    let limits = [1e-12, 1e-10, 1e-12, 1e-12, 1e-10, 1e-12];
    let names = ["asymmetry", "trace error", "oracle diff", "translation/scale diff", "equivariance diff", "q=1 diff"];
    for i in 0..6 {
        if worst[i] > limits[i] {
            fails.push(format!("{} {:e} > {:e}", names[i], worst[i], limits[i]));
        }
    }
    let detail = if fails.is_empty() {
        names
            .iter()
            .zip(worst)
            .map(|(n, w)| format!("{n} {w:.1e}"))
            .collect::<Vec<_>>()
            .join(", ")
    } else {
        fails.join("; ")
    };
    outcome(fails.is_empty(), detail)
}

fn criterion_7() -> Outcome {
    // The trailing block is 0.5 I so that e_3 is an isolated eigenvector; with
    // a unit trailing block the third eigenvalue would be tied with it.
    let mut sigma = DMatrix::from_diagonal_element(6, 6, 0.5);
    sigma[(0, 0)] = 4.0;
    sigma[(1, 1)] = 2.0;
    sigma[(2, 2)] = 1.0;
    let omega = DMatrix::identity(4, 4);
    let n_pairs = 200_000;
    let law = |dist| EllipticalLaw {
        sigma: sigma.clone(),
        omega: omega.clone(),
        dist,
    };
    let k_normal = population_kendall_mc(&law(Dist::Normal), Side::Row, n_pairs, &mut rng(71)).unwrap().mat;
    let k_t2 = population_kendall_mc(&law(Dist::T(2)), Side::Row, n_pairs, &mut rng(72)).unwrap().mat;

    let eig = sym_eigen(&k_normal).unwrap();
    let align: Vec<f64> = (0..3).map(|j| eig.vectors[(j, j)].abs()).collect();
    let v = &eig.values;
    let decreasing = v[0] > v[1] && v[1] > v[2] && v[2] > v[3];
    let diff = max_abs_diff(&k_normal, &k_t2);
    let pass = align.iter().all(|&a| a > 0.98) && decreasing && diff < 0.02;
    outcome(
        pass,
        format!(
            "alignment ({:.4}, {:.4}, {:.4}) > 0.98; eigenvalues ({:.4}, {:.4}, {:.4}, {:.4}) decreasing; normal vs t2 max-abs {diff:.4} < 0.02",
            align[0], align[1], align[2], v[0], v[1], v[2], v[3]
        ),
    )
}

fn criterion_8() -> Outcome {
    let small = simulate(Scenario::A, Dist::Normal, 20, 20, &[Method::Mrts], 1);
    let large = simulate(Scenario::A, Dist::Normal, 100, 50, &[Method::Mrts], 1);
    let (s, l) = (small.summary_for(Method::Mrts).unwrap(), large.summary_for(Method::Mrts).unwrap());
    let d_ok = l.d_r.0 < s.d_r.0 && l.d_c.0 < s.d_c.0;

    let ps = [10, 20, 40];
    let mse_f: Vec<f64> = ps
        .iter()
        .map(|&p| {
            simulate(Scenario::A, Dist::Normal, 50, p, &[Method::Mrts], 1)
                .summary_for(Method::Mrts)
                .unwrap()
                .mse_f
                .0
        })
        .collect();
    let f_ok = mse_f.windows(2).all(|w| w[1] < w[0]);
    outcome(
        d_ok && f_ok,
        format!(
            "mean D (T,p)=(100,50): ({:.4}, {:.4}) < (20,20): ({:.4}, {:.4}); factor MSE at T=50, p=10/20/40: {:.5}/{:.5}/{:.5} decreasing",
            l.d_r.0, l.d_c.0, s.d_r.0, s.d_c.0, mse_f[0], mse_f[1], mse_f[2]
        ),
    )
}

fn criterion_9(runs: &Runs) -> Outcome {
    let eight = simulate(Scenario::A, Dist::Normal, 50, 50, &[Method::Mrts, Method::Apca], 8);
    let dir = tempfile::tempdir().unwrap();
    let (d1, d8) = (dir.path().join("threads1"), dir.path().join("threads8"));
    let o1 = write_simulate(&runs.normal, &runs.normal.config.echo(), &d1).unwrap();
    let o8 = write_simulate(&eight, &eight.config.echo(), &d8).unwrap();
    let (b1, b8) = (std::fs::read(&o1.reps).unwrap(), std::fs::read(&o8.reps).unwrap());
    let (s1, s8) = (std::fs::read(&o1.summary).unwrap(), std::fs::read(&o8.summary).unwrap());
    outcome(
        b1 == b8 && s1 == s8,
        format!(
            "per-replication CSV {} bytes, identical: {}; summary identical: {}",
            b1.len(),
            b1 == b8,
            s1 == s8
        ),
    )
}

fn criterion_10() -> Outcome {
    let time_t = run_bench(&BenchConfig {
        ts: vec![60, 120],
        ps: vec![30],
        repeats: 5,
        ..BenchConfig::default()
    })
    .unwrap();
    let time_p = run_bench(&BenchConfig {
        ts: vec![30],
        ps: vec![80, 160],
        repeats: 5,
        ..BenchConfig::default()
    })
    .unwrap();
    let rt = time_t[1].kendall_secs / time_t[0].kendall_secs;
    let rp = time_p[1].kendall_secs / time_p[0].kendall_secs;
    outcome(
        in_range(rt, 2.5, 6.0) && in_range(rp, 4.0, 16.0),
        format!("Kendall time ratio doubling T (60->120, p=30) = {rt:.2} in [2.5, 6]; doubling p (80->160, T=30) = {rp:.2} in [4, 16]"),
    )
}

fn report(id: usize, name: &str, started: Instant, o: &Outcome) {
    println!(
        "criterion {id:>2} [{}] {name}: {} ({:.1}s)",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail,
        started.elapsed().as_secs_f64()
    );
}

fn main() -> ExitCode {
    // `cargo test -- --list` and similar probes pass flags; run only the suite.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let both = [Method::Mrts, Method::Apca];
    let start = Instant::now();
    let runs = Runs {
        normal: simulate(Scenario::A, Dist::Normal, 50, 50, &both, 1),
        t1: simulate(Scenario::A, Dist::T(1), 50, 50, &both, 1),
        t2: simulate(Scenario::A, Dist::T(2), 50, 50, &both, 1),
        t3: simulate(Scenario::A, Dist::T(3), 50, 50, &both, 1),
    };
    println!("scenario A grid (T = p1 = p2 = 50, k = 3, 100 reps) simulated in {:.1}s", start.elapsed().as_secs_f64());

    let mut all_pass = true;
    let mut run = |id: usize, name: &str, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        report(id, name, t, &o);
        all_pass &= o.pass;
    };
    run(1, "loading accuracy, normal", &|| criterion_1(&runs));
    run(2, "robustness at t1", &|| criterion_2(&runs));
    run(3, "common-component MSE", &|| criterion_3(&runs));
    run(4, "rank recovery", &|| criterion_4(&runs));
    run(5, "weak temporal dependence", &|| criterion_5(&runs));
    run(6, "Kendall's tau invariants", &criterion_6);
    run(7, "population eigenstructure", &criterion_7);
    run(8, "consistency ordering", &criterion_8);
    run(9, "thread-count determinism", &|| criterion_9(&runs));
    run(10, "complexity scaling", &criterion_10);

    if all_pass {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: FAILED");
        ExitCode::FAILURE
    }
}
