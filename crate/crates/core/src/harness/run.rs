//! Experiment orchestration: decompositions per resolution, one cell per
//! (experiment, resolution), per-cell CSV files merged in key order.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde::Serialize;

use super::config::{ExperimentConfig, ExperimentSpec};
use crate::calculus::{spectral_decompose, verify_davies_gaffney, verify_finite_speed, SpectralDecomposition};
use crate::estimates::{
    atom_ensemble, condition_cross_report, criterion_check, offdiag_decay, restriction_constant,
    restriction_exponent, spectral_measure_norm, spectral_power_law, ConditionReport, ConditionSample,
    DecayFitReport,
};
use crate::hardy::{
    default_k, hardy_operator_ratio, riesz_threshold_sweep, RieszSweep, SquareFunction, SweepResolution, TGrid,
};
use crate::plot::{loglog_svg, Series};
use crate::space::Ball;
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct ResolutionInfo {
    pub resolution: usize,
    pub points: Option<usize>,
    pub dimension_n: Option<f64>,
    pub setup_seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputFile {
    pub experiment: usize,
    pub kind: String,
    pub csv: PathBuf,
    pub svg: Option<PathBuf>,
    pub rows: usize,
}

/// One conclusion drawn from a CSV. `rows` are zero-based data-row indices
/// (the header is not counted).
#[derive(Clone, Debug, Serialize)]
pub struct VerdictLine {
    pub experiment: usize,
    pub kind: String,
    pub statement: String,
    pub csv: PathBuf,
    pub rows: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CellFailureRecord {
    pub experiment: usize,
    pub kind: String,
    pub resolution: Option<usize>,
    pub parameters: String,
    pub message: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub tool_version: String,
    pub parallel: bool,
    pub config: ExperimentConfig,
    pub resolutions: Vec<ResolutionInfo>,
    pub outputs: Vec<OutputFile>,
    pub verdicts: Vec<VerdictLine>,
    pub failures: Vec<CellFailureRecord>,
    pub wall_clock_seconds: f64,
}

impl ExperimentReport {
    pub fn verdicts_for(&self, experiment: usize) -> impl Iterator<Item = &VerdictLine> {
        self.verdicts.iter().filter(move |v| v.experiment == experiment)
    }
}

struct Resolved {
    resolution: usize,
    decomp: Arc<SpectralDecomposition>,
    dimension_n: f64,
}

/// What a cell returns besides its CSV file.
struct CellOutput {
    rows: usize,
    verdicts: Vec<(String, Vec<usize>)>,
    series: Vec<Series>,
}

struct Cell {
    experiment: usize,
    /// Index into the resolutions; `None` for cross-resolution cells.
    resolution: Option<usize>,
}

/// Serializes flat rows to `path` with a header line.
fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<usize> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(rows.len())
}

pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let start = Instant::now();
    fs::create_dir_all(&config.output)?;
    let scratch = tempfile::Builder::new().prefix(".cells").tempdir_in(&config.output)?;

    let built = crate::par::map(&config.resolutions, |&res| {
        let t0 = Instant::now();
        let r = (|| -> Result<Resolved> {
            let op = config.scenario.build(res)?;
            let decomp = spectral_decompose(&op)?;
            let dimension_n = match config.dimension {
                Some(n) => n,
                None => config.scenario.dimension(decomp.space())?,
            };
            Ok(Resolved {
                resolution: res,
                decomp: Arc::new(decomp),
                dimension_n,
            })
        })();
        (r, t0.elapsed().as_secs_f64())
    });
    let mut resolutions = Vec::new();
    let mut resolved: Vec<Option<Resolved>> = Vec::new();
    let mut failures = Vec::new();
    for (&res, (r, secs)) in config.resolutions.iter().zip(built) {
        match r {
            Ok(r) => {
                resolutions.push(ResolutionInfo {
                    resolution: res,
                    points: Some(r.decomp.len()),
                    dimension_n: Some(r.dimension_n),
                    setup_seconds: secs,
                });
                resolved.push(Some(r));
            }
            Err(e) => {
                log::error!("scenario {} at resolution {res} failed: {e}", config.scenario.name());
                for (k, exp) in config.experiments.iter().enumerate() {
                    failures.push(CellFailureRecord {
                        experiment: k,
                        kind: exp.kind().into(),
                        resolution: Some(res),
                        parameters: format!("{:?}", config.scenario),
                        message: format!("scenario setup: {e}"),
                    });
                }
                resolutions.push(ResolutionInfo {
                    resolution: res,
                    points: None,
                    dimension_n: None,
                    setup_seconds: secs,
                });
                resolved.push(None);
            }
        }
    }

    let mut cells = Vec::new();
    for (k, exp) in config.experiments.iter().enumerate() {
        if matches!(exp, ExperimentSpec::RieszSweep { .. }) {
            cells.push(Cell {
                experiment: k,
                resolution: None,
            });
        } else {
            for (i, r) in resolved.iter().enumerate() {
                if r.is_some() {
                    cells.push(Cell {
                        experiment: k,
                        resolution: Some(i),
                    });
                }
            }
        }
    }

    let results = crate::par::map(&cells, |cell| {
        let exp = &config.experiments[cell.experiment];
        let path = cell_path(scratch.path(), cell, config);
        let out = match cell.resolution {
            Some(i) => run_cell(exp, resolved[i].as_ref().expect("resolved"), config.seed, &path),
            None => run_sweep(exp, &resolved, config, &path),
        };
        if let Err(e) = &out {
            let _ = fs::remove_file(&path);
            log::error!(
                "cell failed: experiment {} ({}) resolution {:?} parameters {:?} seed {}: {e}",
                cell.experiment,
                exp.kind(),
                cell.resolution.map(|i| config.resolutions[i]),
                exp,
                config.seed
            );
        }
        out
    });

    // Single-threaded merge in (experiment, resolution) order.
    let mut outputs = Vec::new();
    let mut verdicts = Vec::new();
    for (k, exp) in config.experiments.iter().enumerate() {
        let stem = format!("{k:02}_{}", exp.kind());
        let csv_path = config.output.join(format!("{stem}.csv"));
        let mut writer: Option<csv::Writer<fs::File>> = None;
        let mut offset = 0;
        let mut series = Vec::new();
        for (cell, result) in cells.iter().zip(&results).filter(|(c, _)| c.experiment == k) {
            let out = match result {
                Ok(out) => out,
                Err(e) => {
                    failures.push(CellFailureRecord {
                        experiment: k,
                        kind: exp.kind().into(),
                        resolution: cell.resolution.map(|i| config.resolutions[i]),
                        parameters: format!("{exp:?}"),
                        message: e.to_string(),
                    });
                    continue;
                }
            };
            let mut reader = csv::Reader::from_path(cell_path(scratch.path(), cell, config))?;
            let w = match writer.as_mut() {
                Some(w) => w,
                None => {
                    let mut w = csv::Writer::from_path(&csv_path)?;
                    w.write_record(reader.headers()?)?;
                    writer.insert(w)
                }
            };
            let mut copied = 0;
            for rec in reader.records() {
                w.write_record(&rec?)?;
                copied += 1;
            }
            debug_assert_eq!(copied, out.rows);
            for (statement, rows) in &out.verdicts {
                verdicts.push(VerdictLine {
                    experiment: k,
                    kind: exp.kind().into(),
                    statement: statement.clone(),
                    csv: csv_path.clone(),
                    rows: rows.iter().map(|r| r + offset).collect(),
                });
            }
            offset += copied;
            series.extend(out.series.iter().cloned());
        }
        let Some(mut w) = writer else { continue };
        w.flush()?;
        let svg = if series.is_empty() {
            None
        } else {
            let (title, x, y) = plot_labels(exp);
            let p = config.output.join(format!("{stem}.svg"));
            fs::write(&p, loglog_svg(title, x, y, &series))?;
            Some(p)
        };
        outputs.push(OutputFile {
            experiment: k,
            kind: exp.kind().into(),
            csv: csv_path,
            svg,
            rows: offset,
        });
    }
    for f in &failures {
        log::warn!(
            "failed cell: experiment {} ({}) resolution {:?}: {}",
            f.experiment,
            f.kind,
            f.resolution,
            f.message
        );
    }

    let report = ExperimentReport {
        name: config.name.clone(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        parallel: crate::par::is_parallel(),
        config: config.clone(),
        resolutions,
        outputs,
        verdicts,
        failures,
        wall_clock_seconds: start.elapsed().as_secs_f64(),
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(config.output.join("report.json"), json)?;
    Ok(report)
}

fn cell_path(dir: &Path, cell: &Cell, config: &ExperimentConfig) -> PathBuf {
    let res = cell.resolution.map_or(0, |i| config.resolutions[i]);
    dir.join(format!("e{:03}_r{res:010}.csv", cell.experiment))
}

fn plot_labels(exp: &ExperimentSpec) -> (&'static str, &'static str, &'static str) {
    match exp {
        ExperimentSpec::RieszSweep { .. } => ("Bochner-Riesz Hardy ratios", "N", "max ratio over R"),
        ExperimentSpec::Restriction { .. } => ("Restriction-type ratios", "r", "ratio"),
        ExperimentSpec::SpectralMeasure { .. } => ("Smoothed spectral measure", "lambda", "upper bound"),
        ExperimentSpec::OffdiagDecay { .. } => ("Off-diagonal decay", "2^j", "upper bound"),
        ExperimentSpec::CriterionDecay { .. } => ("Criterion decay", "2^j", "worst ratio"),
        ExperimentSpec::Conditions { .. } => ("Heat and resolvent conditions", "r / t", "ratio"),
        ExperimentSpec::DaviesGaffney { .. } => ("Davies-Gaffney", "t", "norm"),
        _ => ("", "", ""),
    }
}

fn run_sweep(exp: &ExperimentSpec, resolved: &[Option<Resolved>], config: &ExperimentConfig, path: &Path) -> Result<CellOutput> {
    let ExperimentSpec::RieszSweep {
        p,
        q,
        deltas,
        cutoffs,
        ensemble,
        points_per_decade,
    } = exp
    else {
        return Err(Error::invalid("not a sweep"));
    };
    let available: Vec<&Resolved> = resolved.iter().flatten().collect();
    if available.len() != resolved.len() {
        return Err(Error::InsufficientData("a resolution failed to build".into()));
    }
    let spacing = config.scenario.spacing();
    let res: Vec<SweepResolution> = available
        .iter()
        .map(|r| SweepResolution {
            n_points: r.resolution,
            decomp: &r.decomp,
            cutoffs: cutoffs.resolve(spacing),
        })
        .collect();
    let sweep = RieszSweep {
        p: *p,
        q: *q,
        deltas: deltas.clone(),
        dimension_n: available[0].dimension_n,
        ensemble: ensemble.clone(),
        points_per_decade: *points_per_decade,
        seed: config.seed,
    };
    let table = riesz_threshold_sweep(&res, &sweep)?;
    for f in &table.failures {
        log::error!(
            "sweep cell delta={} R={} N={} failed: {}",
            f.delta,
            f.cutoff,
            f.n_points,
            f.message
        );
    }
    if table.rows.is_empty() {
        return Err(Error::InsufficientData("every sweep cell failed".into()));
    }
    let rows = write_rows(path, &table.rows)?;
    let mut verdicts: Vec<(String, Vec<usize>)> = table
        .verdicts
        .iter()
        .map(|v| {
            let maxes: Vec<String> = v
                .max_by_resolution
                .iter()
                .map(|(n, r)| format!("N={n}: {r:.4}"))
                .collect();
            (
                format!(
                    "delta = {} (threshold {:.3}): {}; max ratio {}; spread {:.3}; growth {:.3}",
                    v.delta,
                    table.threshold,
                    v.verdict,
                    maxes.join(", "),
                    v.spread,
                    v.growth
                ),
                v.rows.clone(),
            )
        })
        .collect();
    for f in &table.failures {
        verdicts.push((
            format!("cell delta = {} R = {} N = {} failed: {}", f.delta, f.cutoff, f.n_points, f.message),
            Vec::new(),
        ));
    }
    let series = table
        .verdicts
        .iter()
        .map(|v| Series {
            label: format!("delta = {} ({})", v.delta, v.verdict),
            points: v.max_by_resolution.iter().map(|&(n, r)| (n as f64, r)).collect(),
        })
        .collect();
    Ok(CellOutput { rows, verdicts, series })
}

#[derive(Serialize)]
struct HardyRow<'a> {
    resolution: usize,
    multiplier: &'a str,
    p: f64,
    k: u32,
    points_per_decade: usize,
    members: usize,
    ratio: f64,
    argmax: usize,
    seed: u64,
}

#[derive(Serialize)]
struct FiniteSpeedRow {
    resolution: usize,
    t: f64,
    mass_tol: f64,
    effective_radius: f64,
    worst_tail_in_cone: f64,
    slack: f64,
    passed: bool,
    seed: u64,
}

#[derive(Serialize)]
struct DaviesGaffneyRow {
    resolution: usize,
    pair: usize,
    distance: f64,
    t: f64,
    norm: f64,
    used_in_fit: bool,
    seed: u64,
}

#[derive(Serialize)]
struct RestrictionCsvRow<'a> {
    resolution: usize,
    multiplier: &'a str,
    cutoff: f64,
    p0: f64,
    q: f64,
    center: usize,
    radius: f64,
    volume: f64,
    lhs_lower: f64,
    lhs_upper: f64,
    rhs: f64,
    ratio: f64,
    seed: u64,
}

#[derive(Serialize)]
struct SpectralMeasureRow {
    resolution: usize,
    lambda: f64,
    half_width: f64,
    p0: f64,
    eigenvalue_count: usize,
    lower: f64,
    upper: f64,
    seed: u64,
}

#[derive(Serialize)]
struct DecayCsvRow<'a> {
    resolution: usize,
    quantity: &'a str,
    center: usize,
    radius: f64,
    regime: &'a str,
    j: u32,
    lower: f64,
    upper: f64,
    prefactor: f64,
    normalized: Option<f64>,
    above_floor: bool,
    seed: u64,
}

#[derive(Serialize)]
struct ConditionCsvRow {
    resolution: usize,
    condition: String,
    p0: f64,
    center: usize,
    radius: f64,
    t: f64,
    lhs_upper: f64,
    rhs: f64,
    ratio: f64,
    seed: u64,
}

fn run_cell(exp: &ExperimentSpec, r: &Resolved, seed: u64, path: &Path) -> Result<CellOutput> {
    let d = &*r.decomp;
    let space = d.space().clone();
    let n = r.dimension_n;
    let res = r.resolution;
    let tag = |s: String| format!("N={res}: {s}");
    match exp {
        ExperimentSpec::HardyRatio {
            multiplier,
            p,
            ensemble,
            points_per_decade,
        } => {
            let f = multiplier.build()?;
            let k = default_k(*p, n);
            let engine = SquareFunction::new(d, k, TGrid::standard(&space, *points_per_decade)?)?;
            let members = ensemble.build(d, *p, n, seed)?;
            let h = hardy_operator_ratio(&engine, &f, *p, &members, None)?;
            let rows = write_rows(
                path,
                &[HardyRow {
                    resolution: res,
                    multiplier: f.label(),
                    p: *p,
                    k,
                    points_per_decade: *points_per_decade,
                    members: members.len(),
                    ratio: h.ratio,
                    argmax: h.argmax,
                    seed,
                }],
            )?;
            Ok(CellOutput {
                rows,
                verdicts: vec![(
                    tag(format!(
                        "max Hardy ratio {:.6} over {} members (argmax {})",
                        h.ratio,
                        members.len(),
                        h.argmax
                    )),
                    vec![0],
                )],
                series: Vec::new(),
            })
        }
        ExperimentSpec::FiniteSpeed { times, mass_tol } => {
            let reports = crate::par::map(times, |&t| verify_finite_speed(d, t, *mass_tol))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            let csv: Vec<FiniteSpeedRow> = reports
                .iter()
                .map(|f| FiniteSpeedRow {
                    resolution: res,
                    t: f.t,
                    mass_tol: f.mass_tol,
                    effective_radius: f.effective_radius,
                    worst_tail_in_cone: f.worst_tail_in_cone,
                    slack: f.slack,
                    passed: f.passed,
                    seed,
                })
                .collect();
            let rows = write_rows(path, &csv)?;
            let verdicts = reports
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    (
                        tag(format!(
                            "t = {}: effective radius {:.4} vs cone {:.4}, tail {:.3e}: {}",
                            f.t,
                            f.effective_radius,
                            f.t * (1.0 + f.slack),
                            f.worst_tail_in_cone,
                            if f.passed { "finite speed holds" } else { "finite speed violated" }
                        )),
                        vec![i],
                    )
                })
                .collect();
            Ok(CellOutput {
                rows,
                verdicts,
                series: Vec::new(),
            })
        }
        ExperimentSpec::DaviesGaffney {
            distances,
            times,
            set_radius,
        } => {
            let from0 = space.distances_from(0);
            let tol = 1e-9 * space.diameter().max(1.0);
            let pairs: Vec<(Vec<usize>, Vec<usize>)> = distances
                .iter()
                .map(|&dist| {
                    let inner: Vec<usize> = (0..space.len()).filter(|&y| from0[y] <= set_radius + tol).collect();
                    let lo = set_radius + dist - tol;
                    let hi = 3.0 * set_radius + dist + tol;
                    let outer: Vec<usize> = (0..space.len()).filter(|&y| from0[y] >= lo && from0[y] <= hi).collect();
                    (inner, outer)
                })
                .collect();
            let rep = verify_davies_gaffney(d, &pairs, times)?;
            let csv: Vec<DaviesGaffneyRow> = rep
                .samples
                .iter()
                .map(|s| DaviesGaffneyRow {
                    resolution: res,
                    pair: s.pair,
                    distance: s.distance,
                    t: s.t,
                    norm: s.norm,
                    used_in_fit: s.used_in_fit,
                    seed,
                })
                .collect();
            let rows = write_rows(path, &csv)?;
            let fitted: Vec<usize> = (0..rep.samples.len()).filter(|&i| rep.samples[i].used_in_fit).collect();
            let series = (0..pairs.len())
                .map(|k| Series {
                    label: format!("N={res} dist={}", distances[k]),
                    points: rep.samples.iter().filter(|s| s.pair == k).map(|s| (s.t, s.norm)).collect(),
                })
                .collect();
            Ok(CellOutput {
                rows,
                verdicts: vec![(
                    tag(format!(
                        "fitted c = {:.4}, C = {:.4}, worst violation {:.4}, residual {:.4}",
                        rep.fitted_c, rep.fitted_constant, rep.worst_violation, rep.residual
                    )),
                    fitted,
                )],
                series,
            })
        }
        ExperimentSpec::Restriction {
            multiplier,
            cutoff,
            p0,
            q,
            radii,
            centers,
        } => {
            let f = multiplier.build()?;
            let balls = centers
                .iter()
                .flat_map(|&c| radii.iter().map(move |&k| Ball::new(c, k / cutoff)))
                .collect::<Result<Vec<_>>>()?;
            check_centers(centers, space.len())?;
            let rep = restriction_constant(d, &f, *cutoff, *p0, *q, &balls, n, seed)?;
            if rep.rows.is_empty() {
                return Err(Error::InsufficientData(format!(
                    "every ball was below r = max(1/R, spacing); {} skipped",
                    rep.skipped
                )));
            }
            let csv: Vec<RestrictionCsvRow> = rep
                .rows
                .iter()
                .map(|r| RestrictionCsvRow {
                    resolution: res,
                    multiplier: f.label(),
                    cutoff: *cutoff,
                    p0: *p0,
                    q: *q,
                    center: r.center,
                    radius: r.radius,
                    volume: r.volume,
                    lhs_lower: r.lhs_lower,
                    lhs_upper: r.lhs_upper,
                    rhs: r.rhs,
                    ratio: r.ratio,
                    seed,
                })
                .collect();
            let rows = write_rows(path, &csv)?;
            let lo = rep.rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
            Ok(CellOutput {
                rows,
                verdicts: vec![(
                    tag(format!(
                        "empirical constant {:.4}, max/min ratio over balls {:.4}, {} balls skipped below r = max(1/R, spacing)",
                        rep.empirical_constant,
                        rep.empirical_constant / lo,
                        rep.skipped
                    )),
                    (0..rows).collect(),
                )],
                series: vec![Series {
                    label: format!("N={res}"),
                    points: rep.rows.iter().map(|r| (r.radius, r.ratio)).collect(),
                }],
            })
        }
        ExperimentSpec::SpectralMeasure {
            p0,
            lambdas,
            half_width,
        } => {
            let ests = crate::par::map(lambdas, |&l| spectral_measure_norm(d, l, *half_width, *p0, seed))
                .into_iter()
                .collect::<Result<Vec<_>>>()?;
            let csv: Vec<SpectralMeasureRow> = ests
                .iter()
                .map(|e| SpectralMeasureRow {
                    resolution: res,
                    lambda: e.lambda,
                    half_width: e.half_width,
                    p0: e.p0,
                    eigenvalue_count: e.eigenvalue_count,
                    lower: e.lower,
                    upper: e.upper,
                    seed,
                })
                .collect();
            let rows = write_rows(path, &csv)?;
            let fit = spectral_power_law(&ests)?;
            let used: Vec<usize> = (0..ests.len()).filter(|&i| ests[i].upper > 0.0).collect();
            Ok(CellOutput {
                rows,
                verdicts: vec![(
                    tag(format!(
                        "fitted exponent {:.4} (expected {:.4}), residual {:.4}",
                        fit.slope,
                        restriction_exponent(n, *p0),
                        fit.residual
                    )),
                    used,
                )],
                series: vec![Series {
                    label: format!("N={res}"),
                    points: ests.iter().map(|e| (e.lambda, e.upper)).collect(),
                }],
            })
        }
        ExperimentSpec::OffdiagDecay {
            multiplier,
            cutoff,
            p0,
            q,
            s,
            radius,
            j,
            wave_time,
            center,
        } => {
            let f = multiplier.build()?;
            check_centers(&[*center], space.len())?;
            let fs = verify_finite_speed(d, *wave_time, crate::calculus::DEFAULT_MASS_TOL)?;
            let ball = Ball::new(*center, *radius)?;
            let rep = offdiag_decay(d, &fs, &f, *cutoff, &ball, *p0, *q, *s, j, n, seed)?;
            decay_output(&rep, res, seed, path)
        }
        ExperimentSpec::CriterionDecay {
            multiplier,
            m,
            s,
            radius,
            j,
            center,
        } => {
            let f = multiplier.build()?;
            check_centers(&[*center], space.len())?;
            let ball = Ball::new(*center, *radius)?;
            let ens = atom_ensemble(&space, &ball);
            let rep = criterion_check(d, &f, *m, &ball, &ens, j, *s, seed)?;
            decay_output(&rep, res, seed, path)
        }
        ExperimentSpec::Conditions {
            p0,
            power,
            radii,
            times,
            centers,
        } => {
            check_centers(centers, space.len())?;
            let samples: Vec<ConditionSample> = centers
                .iter()
                .flat_map(|&center| {
                    radii
                        .iter()
                        .flat_map(move |&radius| times.iter().map(move |&t| ConditionSample { center, radius, t }))
                })
                .collect();
            let rep = condition_cross_report(d, *p0, *power, &samples, n)?;
            let mut csv = Vec::new();
            let mut push = |c: &ConditionReport| {
                let start = csv.len();
                for r in &c.rows {
                    csv.push(ConditionCsvRow {
                        resolution: res,
                        condition: c.condition.clone(),
                        p0: *p0,
                        center: r.sample.center,
                        radius: r.sample.radius,
                        t: r.sample.t,
                        lhs_upper: r.lhs_upper,
                        rhs: r.rhs,
                        ratio: r.ratio,
                        seed,
                    });
                }
                start..csv.len()
            };
            let g_rows = push(&rep.g);
            let e_rows = push(&rep.e);
            let r_start = csv.len();
            for rr in &rep.restriction {
                for row in &rr.rows {
                    csv.push(ConditionCsvRow {
                        resolution: res,
                        condition: "R".into(),
                        p0: *p0,
                        center: row.center,
                        radius: row.radius,
                        t: 1.0 / rr.r_cutoff,
                        lhs_upper: row.lhs_upper,
                        rhs: row.rhs,
                        ratio: row.ratio,
                        seed,
                    });
                }
            }
            let r_rows = r_start..csv.len();
            let series = [("G", g_rows.clone()), ("E", e_rows.clone()), ("R", r_rows.clone())]
                .into_iter()
                .map(|(name, range)| Series {
                    label: format!("N={res} {name}"),
                    points: csv[range].iter().map(|c| (c.radius / c.t, c.ratio)).collect(),
                })
                .collect();
            let rows = write_rows(path, &csv)?;
            let mut verdicts = vec![
                (
                    tag(format!("G empirical constant {:.4}", rep.g.empirical_constant)),
                    g_rows.clone().collect(),
                ),
                (
                    tag(format!(
                        "E empirical constant {:.4}{}",
                        rep.e.empirical_constant,
                        if rep.e.below_threshold { " (power at or below threshold)" } else { "" }
                    )),
                    e_rows.clone().collect(),
                ),
                (
                    tag(format!("restriction (q = inf) empirical constant {:.4}", rep.restriction_constant)),
                    r_rows.clone().collect(),
                ),
            ];
            verdicts.push((
                tag(format!(
                    "G/E = {:.4}, G/R = {:.4}, all finite: {}",
                    rep.g_over_e, rep.g_over_restriction, rep.all_finite
                )),
                (0..rows).collect(),
            ));
            Ok(CellOutput { rows, verdicts, series })
        }
        ExperimentSpec::RieszSweep { .. } => Err(Error::invalid("sweeps span resolutions")),
    }
}

fn check_centers(centers: &[usize], len: usize) -> Result<()> {
    match centers.iter().find(|&&c| c >= len) {
        Some(c) => Err(Error::invalid(format!("center {c} outside a space of {len} points"))),
        None => Ok(()),
    }
}

fn decay_output(rep: &DecayFitReport, res: usize, seed: u64, path: &Path) -> Result<CellOutput> {
    let regime = match rep.regime {
        crate::estimates::DecayRegime::LargeBall => "large_ball",
        crate::estimates::DecayRegime::SmallBall => "small_ball",
    };
    let csv: Vec<DecayCsvRow> = rep
        .rows
        .iter()
        .map(|r| DecayCsvRow {
            resolution: res,
            quantity: &rep.quantity,
            center: rep.center,
            radius: rep.radius,
            regime,
            j: r.j,
            lower: r.lower,
            upper: r.upper,
            prefactor: r.prefactor,
            normalized: r.normalized,
            above_floor: r.above_floor,
            seed,
        })
        .collect();
    let rows = write_rows(path, &csv)?;
    let fitted: Vec<usize> = (0..rep.rows.len()).filter(|&i| rep.rows[i].above_floor).collect();
    Ok(CellOutput {
        rows,
        verdicts: vec![(
            format!(
                "N={res}: fitted slope {:.4} ± {:.4} (model {:.4}), residual {:.4} log2, {} points above floor {:.3e}, monotone: {}",
                rep.fitted_slope,
                rep.slope_width,
                rep.model_slope,
                rep.residual,
                rep.fitted_points,
                rep.floor,
                rep.monotone
            ),
            fitted,
        )],
        series: vec![Series {
            label: format!("N={res}"),
            points: rep.rows.iter().map(|r| (2f64.powi(r.j as i32), r.upper)).collect(),
        }],
    })
}
