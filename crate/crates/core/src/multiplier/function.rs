use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::{Error, Result};

type Rule = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A scalar symbol `F: [0, ∞) → ℝ`, evaluated through its even extension.
#[derive(Clone)]
pub struct Multiplier {
    label: String,
    rule: Rule,
    support_radius: Option<f64>,
}

impl fmt::Debug for Multiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Multiplier")
            .field("label", &self.label)
            .field("support_radius", &self.support_radius)
            .finish()
    }
}

impl Multiplier {
    pub fn new(label: impl Into<String>, rule: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            label: label.into(),
            rule: Arc::new(rule),
            support_radius: None,
        }
    }

    /// Declares `supp F ⊂ [0, radius]`. Evaluation beyond it returns 0.
    pub fn with_support(self, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("support radius must be positive, got {radius}")));
        }
        Ok(Self {
            support_radius: Some(radius),
            ..self
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn support_radius(&self) -> Option<f64> {
        self.support_radius
    }

    /// `F(|λ|)`.
    pub fn eval(&self, lambda: f64) -> f64 {
        let l = lambda.abs();
        match self.support_radius {
            Some(r) if l > r * (1.0 + 1e-14) => 0.0,
            _ => (self.rule)(l),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("const({c})"), move |_| c)
    }

    pub fn one() -> Self {
        Self::new("one", |_| 1.0)
    }

    pub fn zero() -> Self {
        Self::new("zero", |_| 0.0)
    }

    /// `exp(−(λ/w)²)`.
    pub fn gaussian(width: f64) -> Self {
        Self::new(format!("gaussian(w={width})"), move |l| (-(l / width).powi(2)).exp())
    }

    /// `sin(ρλ)/(ρλ)`; its Fourier transform is supported in `[−ρ, ρ]`.
    pub fn sinc(rho: f64) -> Self {
        Self::new(format!("sinc(rho={rho})"), move |l| {
            let x = rho * l;
            if x.abs() < 1e-8 {
                1.0 - x * x / 6.0
            } else {
                x.sin() / x
            }
        })
    }

    /// `1_{[0, R]}`.
    pub fn indicator(radius: f64) -> Result<Self> {
        Self::new(format!("indicator(R={radius})"), |_| 1.0).with_support(radius)
    }

    /// `(1 − λ²/R²)_+^δ`. At `λ = R` the value is 0 for `δ > 0`, 1 for
    /// `δ = 0` and `+∞` for `δ < 0`.
    pub fn bochner_riesz(radius: f64, delta: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("Bochner-Riesz radius must be positive, got {radius}")));
        }
        if !(delta > -1.0 && delta.is_finite()) {
            return Err(Error::invalid(format!("Bochner-Riesz order must exceed −1, got {delta}")));
        }
        Self::new(format!("bochner_riesz(R={radius}, delta={delta})"), move |l| {
            let x = l / radius;
            if x < 1.0 {
                (1.0 - x * x).powf(delta)
            } else if x == 1.0 {
                if delta > 0.0 {
                    0.0
                } else if delta == 0.0 {
                    1.0
                } else {
                    f64::INFINITY
                }
            } else {
                0.0
            }
        })
        .with_support(radius)
    }

    /// Piecewise-linear interpolation of `(λ, F(λ))` pairs; NaN outside the
    /// tabulated range so that applying it there fails loudly.
    pub fn table(label: impl Into<String>, mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid("a tabulated multiplier needs at least two points"));
        }
        if points.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
            return Err(Error::invalid("tabulated values must be finite"));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::invalid("tabulated abscissae must be distinct"));
        }
        let points = Arc::new(points);
        Ok(Self::new(label, move |l| {
            let k = points.partition_point(|p| p.0 < l);
            if k == 0 {
                return if l == points[0].0 { points[0].1 } else { f64::NAN };
            }
            if k == points.len() {
                return f64::NAN;
            }
            let (a, b) = (points[k - 1], points[k]);
            a.1 + (b.1 - a.1) * (l - a.0) / (b.0 - a.0)
        }))
    }

    /// Two-column text file `λ F(λ)`; `#` starts a comment.
    pub fn from_table_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut pts = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse {
                    path: PathBuf::from(path),
                    line: k + 1,
                    message: "expected two numbers".into(),
                })?;
            if cols.len() != 2 {
                return Err(Error::Parse {
                    path: PathBuf::from(path),
                    line: k + 1,
                    message: "expected two numbers".into(),
                });
            }
            pts.push((cols[0], cols[1]));
        }
        Self::table(format!("table({})", path.display()), pts)
    }

    /// `δ_R F: λ ↦ F(Rλ)`.
    pub fn dilate(&self, r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::invalid(format!("dilation factor must be positive, got {r}")));
        }
        let inner = self.clone();
        let out = Self::new(format!("dilate({}, {r})", self.label), move |l| inner.eval(r * l));
        match self.support_radius {
            Some(s) => out.with_support(s / r),
            None => Ok(out),
        }
    }

    /// Pointwise product; the support is the smaller one.
    pub fn product(&self, other: &Multiplier) -> Self {
        let (a, b) = (self.clone(), other.clone());
        let support = match (self.support_radius, other.support_radius) {
            (Some(x), Some(y)) => Some(x.min(y)),
            (x, y) => x.or(y),
        };
        Self {
            label: format!("{}*{}", self.label, other.label),
            rule: Arc::new(move |l| a.eval(l) * b.eval(l)),
            support_radius: support,
        }
    }
}

/// `‖δ_R F‖_{L^q}` over `[0, R_F/R]` by the composite midpoint rule;
/// `q = ∞` takes the maximum over the nodes.
pub fn dilated_lq_norm(f: &Multiplier, r: f64, q: f64) -> Result<f64> {
    let support = f
        .support_radius()
        .ok_or_else(|| Error::invalid(format!("multiplier `{}` has no declared support", f.label())))?;
    if !(r > 0.0) {
        return Err(Error::invalid("dilation must be positive"));
    }
    if !(q >= 1.0) {
        return Err(Error::invalid(format!("q must be at least 1, got {q}")));
    }
    const NODES: usize = 1 << 14;
    let end = support / r;
    let h = end / NODES as f64;
    let vals = (0..NODES).map(|k| f.eval(r * (k as f64 + 0.5) * h).abs());
    if q.is_infinite() {
        return Ok(vals.fold(f.eval(0.0).abs(), f64::max));
    }
    Ok((vals.map(|v| v.powf(q)).sum::<f64>() * h).powf(1.0 / q))
}
