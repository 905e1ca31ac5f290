//! Acceptance criteria, one pass/fail line each.
//!
//! Exits 0 after printing the summary; set `SPECLAB_ACCEPTANCE_STRICT=1` to
//! exit 1 when any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use faer::Mat;
use speclab::calculus::{
    chebyshev_apply, heat_operator, kernel_tail_fraction, spectral_sup, verify_davies_gaffney, verify_finite_speed,
    wave_cosine,
};
use speclab::estimates::{
    atom_ensemble, criterion_check, norm_2_to_2, offdiag_decay, restriction_exponent, spectral_measure_norm,
    spectral_power_law, KernelBlock,
};
use speclab::harness::{run, ExperimentConfig};
use speclab::multiplier::{besov_norm, phi_window, sobolev_norm, LineFunction, LineGrid};
use speclab::space::{build_grid_space, Topology};
use speclab::{
    apply_multiplier, multiplier_kernel, spectral_decompose, Ball, KernelMatrix, MetricMeasureSpace, Multiplier,
    SelfAdjointOperator, SpectralDecomposition,
};

struct Outcome {
    passed: bool,
    detail: String,
}

fn torus(dim: usize, side: usize, h: f64) -> SpectralDecomposition {
    let s = Arc::new(build_grid_space(dim, side, h, Topology::Torus).unwrap());
    spectral_decompose(&SelfAdjointOperator::second_difference(s).unwrap()).unwrap()
}

fn two_point() -> SpectralDecomposition {
    let s = Arc::new(MetricMeasureSpace::from_line_points(vec![0.0, 1.0], vec![1.0, 1.0], "pair").unwrap());
    let a = Mat::from_fn(2, 2, |i, j| if i == j { 1.0 } else { -1.0 });
    spectral_decompose(&SelfAdjointOperator::from_dense(s, a, "pair").unwrap()).unwrap()
}

fn c1() -> Outcome {
    let spaces = [("two-point", two_point()), ("torus 256", torus(1, 256, 1.0)), ("torus 32x32", torus(2, 32, 1.0))];
    let mut worst = [0.0f64; 4];
    for (_, d) in &spaces {
        let space = d.space().clone();
        let id = multiplier_kernel(d, &Multiplier::one()).unwrap();
        worst[0] = worst[0].max(id.relative_distance(&KernelMatrix::identity(space.clone())));

        let (t, s) = (0.3, 0.7);
        let lhs = heat_operator(d, t).unwrap().compose(&heat_operator(d, s).unwrap()).unwrap();
        worst[1] = worst[1].max(lhs.relative_distance(&heat_operator(d, t + s).unwrap()));

        let f = Multiplier::gaussian(1.5);
        let g = Multiplier::bochner_riesz(1.5, 1.0).unwrap();
        let fg = multiplier_kernel(d, &f.product(&g)).unwrap();
        let composed = multiplier_kernel(d, &f).unwrap().compose(&multiplier_kernel(d, &g).unwrap()).unwrap();
        worst[2] = worst[2].max(fg.relative_distance(&composed));

        let all: Vec<usize> = (0..d.len()).collect();
        let k = multiplier_kernel(d, &g).unwrap();
        let (norm, _) = norm_2_to_2(&space, &KernelBlock::from_kernel(&k, all.clone(), all)).unwrap();
        let sup = spectral_sup(d, &g).unwrap();
        worst[3] = worst[3].max((norm - sup).abs() / sup.max(1.0));
    }
    let passed = worst[0] <= 1e-10 && worst[1] <= 1e-9 && worst[2] <= 1e-9 && worst[3] <= 1e-10;
    Outcome {
        passed,
        detail: format!(
            "identity {:.1e} (≤1e-10), semigroup {:.1e} (≤1e-9), homomorphism {:.1e} (≤1e-9), contraction/attainment {:.1e} (≤1e-10)",
            worst[0], worst[1], worst[2], worst[3]
        ),
    }
}

fn c2(d: &SpectralDecomposition) -> Outcome {
    let wave = kernel_tail_fraction(&wave_cosine(d, 10.0).unwrap(), 11.0);
    let sinc = kernel_tail_fraction(&multiplier_kernel(d, &Multiplier::sinc(5.0)).unwrap(), 5.0 * 1.1);
    Outcome {
        passed: wave <= 1e-3 && sinc <= 1e-3,
        detail: format!("cos(10√L) mass outside 11: {wave:.2e} (≤1e-3); sinc ρ=5 mass outside 5.5: {sinc:.2e} (≤1e-3)"),
    }
}

fn c3(d: &SpectralDecomposition) -> Outcome {
    let space = d.space();
    let from0 = space.distances_from(0);
    let pairs: Vec<(Vec<usize>, Vec<usize>)> = [8.0, 16.0, 32.0]
        .iter()
        .map(|&dist: &f64| (vec![0], (0..space.len()).filter(|&y| (from0[y] - dist).abs() < 1e-9).collect()))
        .collect();
    let rep = verify_davies_gaffney(d, &pairs, &[1.0, 2.0, 4.0, 8.0, 16.0]).unwrap();
    Outcome {
        passed: (2.0..=8.0).contains(&rep.fitted_c),
        detail: format!(
            "fitted c = {:.3} (in [2, 8]), residual {:.3}, worst violation {:.3}",
            rep.fitted_c, rep.residual, rep.worst_violation
        ),
    }
}

fn c4() -> Outcome {
    let expected = restriction_exponent(1.0, 1.0);
    let lambdas: Vec<f64> = (0..7).map(|k| 0.5 + 0.25 * k as f64).collect();
    let mut slopes = Vec::new();
    for (n, h) in [(256, 0.25), (512, 0.125)] {
        let d = torus(1, n, h);
        let est: Vec<_> = lambdas
            .iter()
            .map(|&l| spectral_measure_norm(&d, l, 0.1, 1.0, 0).unwrap())
            .collect();
        slopes.push((n, spectral_power_law(&est).unwrap().slope));
    }
    Outcome {
        passed: slopes.iter().all(|(_, s)| (s - expected).abs() <= 0.3),
        detail: format!("expected exponent {expected}; fitted {slopes:?} (each within ±0.3)"),
    }
}

fn c5(d: &SpectralDecomposition) -> Outcome {
    let fs = verify_finite_speed(d, 10.0, 1e-3).unwrap();
    let ball = Ball::new(0, 1.0).unwrap();
    let j: Vec<u32> = (2..=6).collect();
    let fit = |delta: f64, s: f64| {
        let f = Multiplier::bochner_riesz(1.0, delta).unwrap();
        offdiag_decay(d, &fs, &f, 1.0, &ball, 1.0, 2.0, s, &j, 1.0, 0).unwrap()
    };
    let (a, b) = (fit(2.0, 1.0), fit(4.0, 2.0));
    let passed = a.fitted_slope <= -0.5 && a.residual < 0.3 && b.fitted_slope <= a.fitted_slope - 0.5;
    Outcome {
        passed,
        detail: format!(
            "δ=2: slope {:.3} (≤ −0.5), residual {:.3} (< 0.3); δ=4, s=2: slope {:.3} (steeper by {:.3}, ≥ 0.5)",
            a.fitted_slope,
            a.residual,
            b.fitted_slope,
            a.fitted_slope - b.fitted_slope
        ),
    }
}

fn c6(d: &SpectralDecomposition) -> Outcome {
    let ball = Ball::new(0, 1.0).unwrap();
    let j: Vec<u32> = (2..=6).collect();
    let f = Multiplier::bochner_riesz(1.0, 2.0).unwrap();
    let rep = criterion_check(d, &f, 2, &ball, &atom_ensemble(d.space(), &ball), &j, 1.0, 0).unwrap();
    let past: Vec<f64> = rep.rows.iter().filter(|r| r.j >= 3 && r.above_floor).map(|r| r.upper).collect();
    let monotone = past.windows(2).all(|w| w[1] <= w[0]);
    let ratios: Vec<String> = rep.rows.iter().map(|r| format!("{:.2e}", r.upper)).collect();
    Outcome {
        passed: monotone && rep.fitted_slope <= -0.5,
        detail: format!(
            "ratios j=2..6 [{}], non-increasing past j=2: {monotone}, slope {:.3} (≤ −0.5)",
            ratios.join(", "),
            rep.fitted_slope
        ),
    }
}

fn c8() -> Outcome {
    let (beta, q) = (1.0, 2.0);
    let threshold = beta - 1.0 / q;
    let norm = |delta: f64, step: f64| {
        let f = phi_window().product(&Multiplier::bochner_riesz(1.0, delta).unwrap().dilate(2.0).unwrap());
        sobolev_norm(&LineFunction::sample(&f, LineGrid::new(8.0, step).unwrap()).unwrap(), beta, q).unwrap()
    };
    let change = |delta: f64| norm(delta, 1.0 / 128.0) / norm(delta, 1.0 / 64.0) - 1.0;
    let above = change(threshold + 0.25);
    let below = change(threshold - 0.25);

    let (s, eps) = (1.0, 0.1);
    let bound = 1.0 / (1.0 - 2f64.powf(-eps));
    let grid = LineGrid::new(8.0, 1.0 / 64.0).unwrap();
    let mut family: Vec<Multiplier> = Vec::new();
    for &delta in &[1.0, 1.5, 2.0, 3.0, 4.0] {
        family.push(phi_window().product(&Multiplier::bochner_riesz(1.0, delta).unwrap().dilate(2.0).unwrap()));
    }
    for &w in &[0.25, 0.5, 1.0, 2.0, 4.0] {
        family.push(phi_window().product(&Multiplier::gaussian(w)));
    }
    let ratios: Vec<f64> = family
        .iter()
        .map(|f| {
            let g = LineFunction::sample(f, grid).unwrap();
            besov_norm(&g, s - eps, q).unwrap().value / sobolev_norm(&g, s, q).unwrap()
        })
        .collect();
    let worst = ratios.iter().copied().fold(0.0, f64::max);
    let embedding = ratios.iter().all(|r| r.is_finite() && *r > 0.0) && worst <= bound;
    Outcome {
        passed: above.abs() < 0.05 && below >= 0.25 && embedding,
        detail: format!(
            "δ = {:.2}: change {:.2}% (< 5%); δ = {:.2}: growth {:.2}% (≥ 25%); Besov/Sobolev max {:.3} over {} multipliers (≤ {:.3})",
            threshold + 0.25,
            100.0 * above,
            threshold - 0.25,
            100.0 * below,
            worst,
            ratios.len(),
            bound
        ),
    }
}

fn c9() -> Outcome {
    let g = Multiplier::gaussian(1.0);
    let big = Arc::new(build_grid_space(1, 100_000, 1.0, Topology::Torus).unwrap());
    let op = SelfAdjointOperator::second_difference(big).unwrap();
    let mut f = vec![0.0; op.len()];
    f[0] = 1.0;
    f[50_000] = -2.0;
    let t0 = Instant::now();
    let r = chebyshev_apply(&op, &g, &f, 128).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let finite = r.values.iter().all(|v| v.is_finite());

    let small = Arc::new(build_grid_space(1, 1024, 1.0, Topology::Torus).unwrap());
    let op = SelfAdjointOperator::second_difference(small).unwrap();
    let d = spectral_decompose(&op).unwrap();
    let f: Vec<f64> = (0..1024).map(|i| ((i * 37 % 101) as f64 / 50.0) - 1.0).collect();
    let fast = chebyshev_apply(&op, &g, &f, 128).unwrap();
    let exact = apply_multiplier(&d, &g, &f).unwrap();
    let err = fast.values.iter().zip(&exact).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Outcome {
        passed: secs < 5.0 && finite && err <= 1e-6,
        detail: format!("N=1e5 degree 128 in {secs:.3} s (< 5 s); N=1024 max error {err:.2e} (≤ 1e-6)"),
    }
}

const C7_CONFIG: &str = r#"
name = "bochner-riesz-threshold"
seed = 20240601
resolutions = [128, 256, 512]

[scenario]
kind = "torus1d"
spacing = 1.0

[[experiment]]
kind = "riesz_sweep"
p = 1.0
q = 2.0
deltas = [-0.25, 0.25, 1.0]
cutoffs = { mode_fractions = [0.125, 0.25] }
"#;

/// Max ratio per (δ, N) from the merged CSV, independent of the sweep's
/// own verdict logic.
fn maxima_from_csv(path: &Path) -> BTreeMap<String, BTreeMap<usize, f64>> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let h = rdr.headers().unwrap().clone();
    let col = |name: &str| h.iter().position(|c| c == name).unwrap();
    let (cd, cn, cr) = (col("delta"), col("n_points"), col("ratio"));
    let mut out: BTreeMap<String, BTreeMap<usize, f64>> = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.unwrap();
        let n: usize = rec[cn].parse().unwrap();
        let r: f64 = rec[cr].parse().unwrap();
        let m = out.entry(rec[cd].to_string()).or_default().entry(n).or_insert(0.0);
        *m = m.max(r);
    }
    out
}

fn c7_c10(dir: &Path) -> ((Outcome, f64), (Outcome, f64)) {
    let mut config = ExperimentConfig::parse(C7_CONFIG).unwrap();
    config.output = dir.join("first");
    let t0 = Instant::now();
    let report = run(&config).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let csv = &report.outputs[0].csv;
    let maxima = maxima_from_csv(csv);
    let series = |d: &str| maxima[d].values().copied().collect::<Vec<f64>>();
    let low = series("-0.25");
    let mid = series("0.25");
    let increasing = low.windows(2).all(|w| w[1] > w[0]);
    let growth = low[low.len() - 1] / low[0];
    let spread = {
        let mut rdr = csv::Reader::from_path(csv).unwrap();
        let h = rdr.headers().unwrap().clone();
        let (cd, cr) = (h.iter().position(|c| c == "delta").unwrap(), h.iter().position(|c| c == "ratio").unwrap());
        let r: Vec<f64> = rdr
            .records()
            .map(|x| x.unwrap())
            .filter(|x| &x[cd] == "1.0")
            .map(|x| x[cr].parse().unwrap())
            .collect();
        r.iter().copied().fold(0.0, f64::max) / r.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let reported: Vec<&str> = report.verdicts.iter().map(|v| v.statement.as_str()).collect();
    let consistent = reported.iter().any(|s| s.starts_with("delta = 1 ") && s.contains(": bounded"));
    let c7 = Outcome {
        passed: increasing && growth >= 2.0 && spread <= 2.0 && secs < 600.0 && report.failures.is_empty(),
        detail: format!(
            "δ=−0.25 max by N {low:.3?}, growth {growth:.3} (increasing and ≥ 2: {}); δ=1.0 spread {spread:.3} (≤ 2); δ=0.25 max by N {mid:.3?} (recorded); report agrees on δ=1: {consistent}; {secs:.1} s (< 600 s)",
            increasing && growth >= 2.0
        ),
    };

    config.output = dir.join("second");
    let t1 = Instant::now();
    let again = run(&config).unwrap();
    let rerun = t1.elapsed().as_secs_f64();
    let mut identical = report.outputs.len() == again.outputs.len();
    let mut compared = 0;
    for (a, b) in report.outputs.iter().zip(&again.outputs) {
        identical &= std::fs::read(&a.csv).unwrap() == std::fs::read(&b.csv).unwrap();
        compared += 1;
    }
    let c10 = Outcome {
        passed: identical && compared > 0,
        detail: format!("{compared} CSV file(s) byte-identical across reruns: {identical}"),
    };
    ((c7, secs), (c10, rerun))
}

fn timed(id: u32, name: &'static str, budget: f64, f: impl FnOnce() -> Outcome) -> (u32, &'static str, Outcome, f64, f64) {
    let t0 = Instant::now();
    let out = f();
    (id, name, out, t0.elapsed().as_secs_f64(), budget)
}

fn main() {
    let mut results = vec![timed(1, "functional calculus", 10.0, c1)];
    let d512 = torus(1, 512, 0.5);
    results.push(timed(2, "finite speed propagation", 30.0, || c2(&d512)));
    results.push(timed(3, "Davies-Gaffney fit", 30.0, || c3(&d512)));
    results.push(timed(4, "restriction power law", 60.0, c4));
    results.push(timed(5, "off-diagonal decay", 120.0, || c5(&d512)));
    results.push(timed(6, "criterion decay", 120.0, || c6(&d512)));
    let dir = tempfile::tempdir().unwrap();
    let ((c7, s7), (c10, s10)) = c7_c10(dir.path());
    results.push((7, "Bochner-Riesz sharpness sweep", c7, s7, 600.0));
    results.push(timed(8, "multiplier norms", 60.0, c8));
    results.push(timed(9, "Chebyshev performance path", f64::INFINITY, c9));
    results.push((10, "determinism", c10, s10, f64::INFINITY));
    results.sort_by_key(|r| r.0);

    let mut failed = 0;
    for (id, name, out, secs, budget) in &results {
        let ok = out.passed && secs < budget;
        if !ok {
            failed += 1;
        }
        let limit = if budget.is_finite() { format!(" (< {budget} s)") } else { String::new() };
        println!(
            "{} C{id} {name}: {} [{secs:.2} s{limit}]",
            if ok { "PASS" } else { "FAIL" },
            out.detail
        );
    }
    println!("acceptance: {}/{} criteria passed", results.len() - failed, results.len());
    if failed > 0 && std::env::var("SPECLAB_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
