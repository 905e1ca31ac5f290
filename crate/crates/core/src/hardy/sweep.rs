//! Bochner-Riesz threshold sweep: Hardy-space ratios of `(1 − λ²/R²)^δ₊`
//! over resolutions, cutoffs and orders, with a trend verdict per order.

use std::io::Write;

use serde::Serialize;

use super::ratio::{ensemble_norms, hardy_operator_ratio, default_k, EnsembleSpec};
use super::square::{SquareFunction, TGrid};
use crate::calculus::SpectralDecomposition;
use crate::multiplier::Multiplier;
use crate::plot::{loglog_svg, Series};
use crate::{Error, Result};

/// Spread tolerated by a "bounded" verdict, and growth demanded by "growing".
pub const VERDICT_FACTOR: f64 = 2.0;
pub const MIN_RESOLUTIONS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Bounded,
    Growing,
    Indeterminate,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Bounded => "bounded",
            Verdict::Growing => "growing",
            Verdict::Indeterminate => "indeterminate",
        })
    }
}

/// One space in the refinement family with the cutoffs used on it.
pub struct SweepResolution<'a> {
    pub n_points: usize,
    pub decomp: &'a SpectralDecomposition,
    pub cutoffs: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RieszSweep {
    pub p: f64,
    pub q: f64,
    pub deltas: Vec<f64>,
    pub dimension_n: f64,
    pub ensemble: EnsembleSpec,
    pub points_per_decade: usize,
    pub seed: u64,
}

impl RieszSweep {
    /// `n(1/p − 1/2) − 1/q`.
    pub fn threshold(&self) -> f64 {
        self.dimension_n * (1.0 / self.p - 0.5) - 1.0 / self.q
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HardyRatioRow {
    pub delta: f64,
    pub cutoff: f64,
    pub n_points: usize,
    pub ratio: f64,
    pub argmax: usize,
    pub members: usize,
    pub k: u32,
    pub points_per_decade: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DeltaVerdict {
    pub delta: f64,
    pub verdict: Verdict,
    /// Largest ratio over cutoffs, per resolution in sweep order.
    pub max_by_resolution: Vec<(usize, f64)>,
    /// Max over min of all ratios for this order.
    pub spread: f64,
    /// Last over first entry of `max_by_resolution`.
    pub growth: f64,
    /// Indices into the table rows.
    pub rows: Vec<usize>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CellFailure {
    pub delta: f64,
    pub cutoff: f64,
    pub n_points: usize,
    pub message: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct HardyRatioTable {
    pub p: f64,
    pub q: f64,
    pub threshold: f64,
    pub ensemble: String,
    pub rows: Vec<HardyRatioRow>,
    pub verdicts: Vec<DeltaVerdict>,
    pub failures: Vec<CellFailure>,
}

fn classify(max_by_resolution: &[(usize, f64)], all: &[f64]) -> (Verdict, f64, f64) {
    let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = all.iter().copied().fold(0.0, f64::max);
    let spread = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    let first = max_by_resolution.first().map_or(0.0, |m| m.1);
    let last = max_by_resolution.last().map_or(0.0, |m| m.1);
    let growth = if first > 0.0 { last / first } else { f64::INFINITY };
    let increasing = max_by_resolution.windows(2).all(|w| w[1].1 > w[0].1);
    let verdict = if spread <= VERDICT_FACTOR {
        Verdict::Bounded
    } else if increasing && growth >= VERDICT_FACTOR {
        Verdict::Growing
    } else {
        Verdict::Indeterminate
    };
    (verdict, spread, growth)
}

pub fn riesz_threshold_sweep(resolutions: &[SweepResolution], sweep: &RieszSweep) -> Result<HardyRatioTable> {
    if resolutions.len() < MIN_RESOLUTIONS {
        return Err(Error::InsufficientData(format!(
            "{} resolutions give no trend; at least {MIN_RESOLUTIONS} are needed",
            resolutions.len()
        )));
    }
    if sweep.deltas.is_empty() {
        return Err(Error::invalid("no Bochner-Riesz orders to sweep"));
    }
    sweep.ensemble.validate()?;
    let k = default_k(sweep.p, sweep.dimension_n);
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for res in resolutions {
        let grid = TGrid::standard(res.decomp.space(), sweep.points_per_decade)?;
        let engine = SquareFunction::new(res.decomp, k, grid)?;
        let ensemble = sweep.ensemble.build(res.decomp, sweep.p, sweep.dimension_n, sweep.seed)?;
        let den = ensemble_norms(&engine, &ensemble, sweep.p)?;
        let cells: Vec<(f64, f64)> = sweep
            .deltas
            .iter()
            .flat_map(|&d| res.cutoffs.iter().map(move |&r| (d, r)))
            .collect();
        let results = crate::par::map(&cells, |&(delta, cutoff)| {
            let f = Multiplier::bochner_riesz(cutoff, delta)?;
            hardy_operator_ratio(&engine, &f, sweep.p, &ensemble, Some(&den))
        });
        for (&(delta, cutoff), r) in cells.iter().zip(results) {
            match r {
                Ok(r) => rows.push(HardyRatioRow {
                    delta,
                    cutoff,
                    n_points: res.n_points,
                    ratio: r.ratio,
                    argmax: r.argmax,
                    members: ensemble.len(),
                    k,
                    points_per_decade: sweep.points_per_decade,
                    seed: sweep.seed,
                }),
                Err(e) => {
                    log::error!("cell delta={delta} R={cutoff} N={} failed: {e}", res.n_points);
                    failures.push(CellFailure {
                        delta,
                        cutoff,
                        n_points: res.n_points,
                        message: e.to_string(),
                    });
                }
            }
        }
    }
    rows.sort_by(|a, b| {
        a.delta
            .total_cmp(&b.delta)
            .then(a.n_points.cmp(&b.n_points))
            .then(a.cutoff.total_cmp(&b.cutoff))
    });
    let verdicts = sweep
        .deltas
        .iter()
        .map(|&delta| {
            let idx: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].delta == delta).collect();
            let all: Vec<f64> = idx.iter().map(|&i| rows[i].ratio).collect();
            let max_by_resolution: Vec<(usize, f64)> = resolutions
                .iter()
                .map(|res| {
                    let m = idx
                        .iter()
                        .filter(|&&i| rows[i].n_points == res.n_points)
                        .map(|&i| rows[i].ratio)
                        .fold(0.0, f64::max);
                    (res.n_points, m)
                })
                .collect();
            let (verdict, spread, growth) = classify(&max_by_resolution, &all);
            DeltaVerdict {
                delta,
                verdict,
                max_by_resolution,
                spread,
                growth,
                rows: idx,
            }
        })
        .collect();
    Ok(HardyRatioTable {
        p: sweep.p,
        q: sweep.q,
        threshold: sweep.threshold(),
        ensemble: format!("{:?} (seed {})", sweep.ensemble, sweep.seed),
        rows,
        verdicts,
        failures,
    })
}

impl HardyRatioTable {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        for row in &self.rows {
            out.serialize(row)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Max ratio against `N`, one series per order.
    pub fn to_svg(&self) -> String {
        let series: Vec<Series> = self
            .verdicts
            .iter()
            .map(|v| Series {
                label: format!("delta = {} ({})", v.delta, v.verdict),
                points: v.max_by_resolution.iter().map(|&(n, r)| (n as f64, r)).collect(),
            })
            .collect();
        loglog_svg(
            &format!("Bochner-Riesz Hardy ratios, p = {}, threshold {:.3}", self.p, self.threshold),
            "N",
            "max ratio over R",
            &series,
        )
    }

    pub fn verdict(&self, delta: f64) -> Option<&DeltaVerdict> {
        self.verdicts.iter().find(|v| v.delta == delta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{spectral_decompose, SelfAdjointOperator};
    use crate::space::{build_grid_space, Topology};
    use std::sync::Arc;

    fn torus(n: usize) -> SpectralDecomposition {
        let s = Arc::new(build_grid_space(1, n, 1.0, Topology::Torus).unwrap());
        spectral_decompose(&SelfAdjointOperator::second_difference(s).unwrap()).unwrap()
    }

    fn sweep(deltas: Vec<f64>, p: f64) -> RieszSweep {
        RieszSweep {
            p,
            q: 2.0,
            deltas,
            dimension_n: 1.0,
            ensemble: EnsembleSpec {
                random: 1,
                radii: vec![1.0, 4.0],
                ..Default::default()
            },
            points_per_decade: 12,
            seed: 5,
        }
    }

    #[test]
    fn classification() {
        let by = |v: &[f64]| v.iter().enumerate().map(|(i, &r)| (i, r)).collect::<Vec<_>>();
        assert_eq!(classify(&by(&[1.0, 1.2, 1.5]), &[1.0, 1.2, 1.5, 1.1]).0, Verdict::Bounded);
        assert_eq!(classify(&by(&[1.0, 2.0, 4.0]), &[1.0, 2.0, 4.0]).0, Verdict::Growing);
        assert_eq!(classify(&by(&[1.0, 4.0, 3.0]), &[1.0, 4.0, 3.0]).0, Verdict::Indeterminate);
    }

    #[test]
    fn needs_three_resolutions() {
        let (a, b) = (torus(16), torus(32));
        let res = vec![
            SweepResolution { n_points: 16, decomp: &a, cutoffs: vec![1.0] },
            SweepResolution { n_points: 32, decomp: &b, cutoffs: vec![1.0] },
        ];
        assert!(riesz_threshold_sweep(&res, &sweep(vec![1.0], 1.0)).is_err());
    }

    #[test]
    fn smooth_order_is_bounded_and_projector_contracts_at_p2() {
        let ds: Vec<SpectralDecomposition> = [32, 64, 128].iter().map(|&n| torus(n)).collect();
        let res: Vec<SweepResolution> = ds
            .iter()
            .map(|d| SweepResolution {
                n_points: d.len(),
                decomp: d,
                cutoffs: vec![std::f64::consts::PI / 4.0, std::f64::consts::PI / 2.0],
            })
            .collect();
        let t = riesz_threshold_sweep(&res, &sweep(vec![2.0], 1.0)).unwrap();
        assert_eq!(t.verdict(2.0).unwrap().verdict, Verdict::Bounded);
        assert!(t.failures.is_empty());
        let mut csv = Vec::new();
        t.write_csv(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 1 + 6);
        assert!(t.to_svg().contains("<polyline"));

        let t2 = riesz_threshold_sweep(&res, &sweep(vec![0.0], 2.0)).unwrap();
        assert!(t2.threshold < 0.0);
        assert!(t2.rows.iter().all(|r| r.ratio <= 1.0 + 1e-9));
    }
}
