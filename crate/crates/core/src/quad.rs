//! Adaptive Gauss-Kronrod quadrature.
//!
//! A globally adaptive bisection scheme on top of the 15-point Kronrod rule
//! (7-point Gauss embedded), QUADPACK style: the panel with the largest
//! error estimate is split until the summed estimate meets the requested
//! tolerance. Semi-infinite and doubly infinite ranges are folded onto
//! (0, 1] with the substitution x = a + (1 - t)/t, whose Jacobian 1/t² is
//! applied inside the evaluator; the rule is open, so domain endpoints are
//! never evaluated.

use std::collections::BinaryHeap;

use thiserror::Error;

/// One end of an integration range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    Finite(f64),
    NegInfinity,
    Infinity,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub relative_tolerance: f64,
    pub absolute_tolerance: f64,
    /// Cap on the number of panels the adaptive loop may create.
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            relative_tolerance: 1e-10,
            absolute_tolerance: 1e-300,
            max_subdivisions: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    /// Conservative absolute error estimate.
    pub error_estimate: f64,
    /// Number of integrand evaluations.
    pub evaluations: usize,
}

#[derive(Debug, Error)]
pub enum QuadratureError {
    #[error(
        "quadrature did not reach tolerance after {} panels (best {:.6e} ± {:.3e})",
        best.evaluations, best.value, best.error_estimate
    )]
    DidNotConverge { best: QuadratureResult },
    #[error("integrand returned a non-finite value at x = {x:.6e}")]
    NonFinite { x: f64 },
    #[error("invalid bounds: {0}")]
    InvalidBounds(String),
    #[error("invalid quadrature config: {0}")]
    InvalidConfig(String),
}

// 15-point Kronrod nodes on [-1, 1]; even indices are Kronrod-only, odd
// indices carry the embedded 7-point Gauss rule, last entry is the centre.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[derive(Clone, Copy)]
enum Transform {
    /// x = t.
    Identity,
    /// x = a + (1 - t)/t on t in (0, 1].
    LowerFinite { a: f64 },
    /// x = b - (1 - t)/t on t in (0, 1].
    UpperFinite { b: f64 },
    /// x = ±(1 - t)/t, both signs summed, t in (0, 1].
    DoubleInfinite,
}

struct Evaluator<'a> {
    f: &'a mut dyn FnMut(f64) -> f64,
    transform: Transform,
    evaluations: usize,
    bad_point: Option<f64>,
}

impl<'a> Evaluator<'a> {
    fn call(&mut self, x: f64) -> f64 {
        let y = (self.f)(x);
        self.evaluations += 1;
        if !y.is_finite() && self.bad_point.is_none() {
            self.bad_point = Some(x);
        }
        y
    }

    /// Integrand in transformed coordinates.
    fn eval(&mut self, t: f64) -> f64 {
        match self.transform {
            Transform::Identity => self.call(t),
            Transform::LowerFinite { a } => {
                let y = self.call(a + (1.0 - t) / t);
                // Avoid 0 * inf when the integrand has already decayed to
                // zero far out on the tail.
                if y == 0.0 {
                    0.0
                } else {
                    y / (t * t)
                }
            }
            Transform::UpperFinite { b } => {
                let y = self.call(b - (1.0 - t) / t);
                if y == 0.0 {
                    0.0
                } else {
                    y / (t * t)
                }
            }
            Transform::DoubleInfinite => {
                let u = (1.0 - t) / t;
                let y = self.call(u) + self.call(-u);
                if y == 0.0 {
                    0.0
                } else {
                    y / (t * t)
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// QUADPACK error rescale: sharpens the raw Gauss/Kronrod difference while
/// keeping a floor of 50 eps times the L1 norm.
fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let err = err.abs();
    let mut out = err;
    if resasc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / resasc).powf(1.5);
        out = if scale < 1.0 { resasc * scale } else { resasc };
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        out = out.max(50.0 * f64::EPSILON * resabs);
    }
    out
}

fn qk15(eval: &mut Evaluator, lo: f64, hi: f64) -> Panel {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);

    let fc = eval.eval(center);
    let mut fv1 = [0.0f64; 7];
    let mut fv2 = [0.0f64; 7];
    let mut res_gauss = fc * WG[3];
    let mut res_kronrod = fc * WGK[7];
    let mut res_abs = fc.abs() * WGK[7];

    for j in 0..3 {
        let jtw = 2 * j + 1;
        let absc = half * XGK[jtw];
        let f1 = eval.eval(center - absc);
        let f2 = eval.eval(center + absc);
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        let fsum = f1 + f2;
        res_gauss += WG[j] * fsum;
        res_kronrod += WGK[jtw] * fsum;
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..4 {
        let jtwm1 = 2 * j;
        let absc = half * XGK[jtwm1];
        let f1 = eval.eval(center - absc);
        let f2 = eval.eval(center + absc);
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        let fsum = f1 + f2;
        res_kronrod += WGK[jtwm1] * fsum;
        res_abs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }

    let res_kh = res_kronrod * 0.5;
    let mut res_asc = WGK[7] * (fc - res_kh).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - res_kh).abs() + (fv2[j] - res_kh).abs());
    }

    let raw_err = ((res_kronrod - res_gauss) * half).abs();
    Panel {
        lo,
        hi,
        value: res_kronrod * half,
        error: rescale_error(raw_err, res_abs * half.abs(), res_asc * half.abs()),
    }
}

fn validate_config(cfg: &QuadratureConfig) -> Result<(), QuadratureError> {
    if !(cfg.relative_tolerance > 0.0) || !(cfg.absolute_tolerance > 0.0) {
        return Err(QuadratureError::InvalidConfig(
            "tolerances must be strictly positive".to_string(),
        ));
    }
    if cfg.max_subdivisions == 0 {
        return Err(QuadratureError::InvalidConfig(
            "max_subdivisions must be at least 1".to_string(),
        ));
    }
    Ok(())
}

fn adapt(
    eval: &mut Evaluator,
    lo: f64,
    hi: f64,
    cfg: &QuadratureConfig,
    initial_subdivisions: usize,
) -> Result<QuadratureResult, QuadratureError> {
    let n0 = initial_subdivisions.max(1).min(cfg.max_subdivisions);
    let mut heap = BinaryHeap::with_capacity(2 * n0);
    let mut total_value = 0.0;
    let mut total_error = 0.0;

    let step = (hi - lo) / n0 as f64;
    for i in 0..n0 {
        let a = lo + step * i as f64;
        let b = if i + 1 == n0 { hi } else { lo + step * (i + 1) as f64 };
        let panel = qk15(eval, a, b);
        if let Some(x) = eval.bad_point {
            return Err(QuadratureError::NonFinite { x });
        }
        total_value += panel.value;
        total_error += panel.error;
        heap.push(panel);
    }

    loop {
        let tolerance = cfg
            .absolute_tolerance
            .max(cfg.relative_tolerance * total_value.abs());
        if total_error <= tolerance {
            return Ok(QuadratureResult {
                value: total_value,
                error_estimate: total_error,
                evaluations: eval.evaluations,
            });
        }
        let best = QuadratureResult {
            value: total_value,
            error_estimate: total_error,
            evaluations: eval.evaluations,
        };
        if heap.len() >= cfg.max_subdivisions {
            return Err(QuadratureError::DidNotConverge { best });
        }
        let worst = heap.pop().expect("heap never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(mid > worst.lo && mid < worst.hi) {
            // Panel is at the resolution limit of f64; no further progress
            // is possible.
            return Err(QuadratureError::DidNotConverge { best });
        }
        let left = qk15(eval, worst.lo, mid);
        let right = qk15(eval, mid, worst.hi);
        if let Some(x) = eval.bad_point {
            return Err(QuadratureError::NonFinite { x });
        }
        total_value += left.value + right.value - worst.value;
        total_error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
}

fn run_1d(
    f: &mut dyn FnMut(f64) -> f64,
    bounds: (Bound, Bound),
    cfg: &QuadratureConfig,
    initial_subdivisions: usize,
) -> Result<QuadratureResult, QuadratureError> {
    validate_config(cfg)?;
    let (transform, lo, hi) = match bounds {
        (Bound::Finite(a), Bound::Finite(b)) => {
            if !a.is_finite() || !b.is_finite() {
                return Err(QuadratureError::InvalidBounds(
                    "finite bounds must hold finite values".to_string(),
                ));
            }
            if a > b {
                return Err(QuadratureError::InvalidBounds(format!(
                    "lower bound {a} exceeds upper bound {b}"
                )));
            }
            (Transform::Identity, a, b)
        }
        (Bound::Finite(a), Bound::Infinity) => {
            if !a.is_finite() {
                return Err(QuadratureError::InvalidBounds(
                    "finite bounds must hold finite values".to_string(),
                ));
            }
            (Transform::LowerFinite { a }, 0.0, 1.0)
        }
        (Bound::NegInfinity, Bound::Finite(b)) => {
            if !b.is_finite() {
                return Err(QuadratureError::InvalidBounds(
                    "finite bounds must hold finite values".to_string(),
                ));
            }
            (Transform::UpperFinite { b }, 0.0, 1.0)
        }
        (Bound::NegInfinity, Bound::Infinity) => (Transform::DoubleInfinite, 0.0, 1.0),
        _ => {
            return Err(QuadratureError::InvalidBounds(
                "bounds must be ordered: lower may be -inf, upper may be +inf".to_string(),
            ))
        }
    };
    let mut eval = Evaluator {
        f,
        transform,
        evaluations: 0,
        bad_point: None,
    };
    adapt(&mut eval, lo, hi, cfg, initial_subdivisions)
}

/// Adaptive integral of `f` over `bounds`.
pub fn integrate_adaptive_1d(
    mut f: impl FnMut(f64) -> f64,
    bounds: (Bound, Bound),
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult, QuadratureError> {
    run_1d(&mut f, bounds, cfg, 1)
}

/// Like [`integrate_adaptive_1d`] but seeding the panel list with
/// `initial_subdivisions` equal panels before adapting. Callers that know
/// the oscillation scale of the integrand use this to make sure the first
/// error estimates already resolve it.
pub fn integrate_adaptive_1d_seeded(
    mut f: impl FnMut(f64) -> f64,
    bounds: (Bound, Bound),
    cfg: &QuadratureConfig,
    initial_subdivisions: usize,
) -> Result<QuadratureResult, QuadratureError> {
    run_1d(&mut f, bounds, cfg, initial_subdivisions)
}

/// Iterated-integral domain. `outer` is integrated adaptively over the
/// results of the adaptive `inner` integral.
#[derive(Debug, Clone, Copy)]
pub struct Domain2d {
    pub outer: (Bound, Bound),
    pub inner: (Bound, Bound),
    /// Initial panel count seeded on the inner axis.
    pub inner_initial_subdivisions: usize,
}

/// Iterated 2D integral of `f(outer, inner)`.
///
/// The inner integrals run at 10x tighter tolerance than `cfg` so their
/// residual noise stays below the reported outer error estimate, which is
/// what `error_estimate` carries.
pub fn integrate_adaptive_2d(
    f: impl Fn(f64, f64) -> f64,
    domain: &Domain2d,
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult, QuadratureError> {
    validate_config(cfg)?;
    let inner_cfg = QuadratureConfig {
        relative_tolerance: cfg.relative_tolerance * 0.1,
        absolute_tolerance: cfg.absolute_tolerance * 0.1,
        max_subdivisions: cfg.max_subdivisions,
    };
    let mut inner_evaluations = 0usize;
    let mut inner_failure: Option<QuadratureError> = None;
    let mut g = |x: f64| -> f64 {
        if inner_failure.is_some() {
            return 0.0;
        }
        match integrate_adaptive_1d_seeded(
            |y| f(x, y),
            domain.inner,
            &inner_cfg,
            domain.inner_initial_subdivisions,
        ) {
            Ok(r) => {
                inner_evaluations += r.evaluations;
                r.value
            }
            Err(e) => {
                inner_failure = Some(e);
                0.0
            }
        }
    };
    let outer = run_1d(&mut g, domain.outer, cfg, 1);
    // Borrow of the counters ends with the closure; report errors from the
    // inner axis first since they poison the outer result.
    match (inner_failure, outer) {
        (Some(e), _) => Err(e),
        (None, Err(e)) => Err(e),
        (None, Ok(r)) => Ok(QuadratureResult {
            value: r.value,
            error_estimate: r.error_estimate,
            evaluations: inner_evaluations,
        }),
    }
}
