//! Adaptive Gauss–Kronrod (7/15) integration with explicit error control.
//!
//! Refinement is global: the panel with the largest error estimate is bisected
//! until the summed estimate meets the tolerance. Panels live in a binary heap
//! keyed by `(error, sequence number)`, so the refinement order, and with it
//! every returned bit, is fixed for fixed inputs.
//!
//! Integrable `1/√` singularities are handled by change of variables rather
//! than extrapolation:
//!
//! * at a declared endpoint `a`, `x = a + u²`;
//! * along a lightcone `|c − x| = L`, `u = √((c − x)² − L²)` on the timelike
//!   side, which turns `1/√((c − x)² − L²) dx` into `du/√(u² + L²)`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

/// Kronrod abscissae; odd indices are the Gauss-7 nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
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

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    pub evaluations: usize,
}

impl QuadResult {
    pub const ZERO: QuadResult = QuadResult {
        value: 0.0,
        abs_error_estimate: 0.0,
        evaluations: 0,
    };

    fn combine(self, other: QuadResult) -> QuadResult {
        QuadResult {
            value: self.value + other.value,
            abs_error_estimate: self.abs_error_estimate + other.abs_error_estimate,
            evaluations: self.evaluations + other.evaluations,
        }
    }

    pub fn scale(self, factor: f64) -> QuadResult {
        QuadResult {
            value: self.value * factor,
            abs_error_estimate: self.abs_error_estimate * factor.abs(),
            evaluations: self.evaluations,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadError {
    #[error("invalid interval [{a}, {b}]")]
    InvalidInterval { a: f64, b: f64 },
    #[error("tolerance must be positive (abs {abs_tol}, rel {rel_tol})")]
    InvalidTolerance { abs_tol: f64, rel_tol: f64 },
    #[error(
        "no convergence within {budget} evaluations: best {} ± {}",
        best.value,
        best.abs_error_estimate
    )]
    NonConvergence { best: QuadResult, budget: usize },
    #[error("integrand is not finite at x = {x}")]
    NonFinite { x: f64 },
    #[error("integrand is not finite at ({t1}, {t2}); a lightcone crossing the domain must be declared")]
    UndeclaredSingularity { t1: f64, t2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Integrand evaluation budget.
    pub max_evals: usize,
    /// Widest initial panel. Oscillatory integrands should set this to a
    /// fraction of the shortest period.
    pub max_panel: Option<f64>,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-8,
            rel_tol: 0.0,
            max_evals: 1_000_000,
            max_panel: None,
        }
    }
}

impl QuadOptions {
    pub fn with_abs_tol(mut self, tol: f64) -> Self {
        self.abs_tol = tol;
        self
    }

    pub fn with_rel_tol(mut self, tol: f64) -> Self {
        self.rel_tol = tol;
        self
    }

    pub fn with_max_panel(mut self, width: f64) -> Self {
        self.max_panel = Some(width);
        self
    }

    pub fn with_max_evals(mut self, n: usize) -> Self {
        self.max_evals = n;
        self
    }

    fn validate(&self) -> Result<(), QuadError> {
        let ok = self.abs_tol >= 0.0
            && self.rel_tol >= 0.0
            && (self.abs_tol > 0.0 || self.rel_tol > 0.0)
            && self.abs_tol.is_finite()
            && self.rel_tol.is_finite();
        if ok {
            Ok(())
        } else {
            Err(QuadError::InvalidTolerance {
                abs_tol: self.abs_tol,
                rel_tol: self.rel_tol,
            })
        }
    }
}

/// One integrand evaluation. Iterated integrals feed the inner integral's
/// error estimate and evaluation count through here.
#[derive(Debug, Clone, Copy)]
struct Sample {
    value: f64,
    error: f64,
    evals: usize,
}

impl From<QuadResult> for Sample {
    fn from(r: QuadResult) -> Self {
        Sample {
            value: r.value,
            error: r.abs_error_estimate,
            evals: r.evaluations,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    /// Part of `error` that bisection cannot remove: the roundoff floor plus
    /// errors inherited from inner integrals.
    floor: f64,
    seq: u64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.error - self.floor)
            .total_cmp(&(other.error - other.floor))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

#[allow(clippy::needless_range_loop)]
fn gk15<F>(f: &mut F, a: f64, b: f64, evals: &mut usize) -> Result<Panel, QuadError>
where
    F: FnMut(f64) -> Result<Sample, QuadError>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut inherited = 0.0;
    let mut eval = |x: f64, w: f64, evals: &mut usize| -> Result<f64, QuadError> {
        let s = f(x)?;
        if !s.value.is_finite() {
            return Err(QuadError::NonFinite { x });
        }
        *evals += s.evals;
        inherited += w * s.error;
        Ok(s.value)
    };

    let fc = eval(center, WGK[7], evals)?;
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..3 {
        let jtw = 2 * j + 1;
        let dx = half * XGK[jtw];
        let f1 = eval(center - dx, WGK[jtw], evals)?;
        let f2 = eval(center + dx, WGK[jtw], evals)?;
        fv1[jtw] = f1;
        fv2[jtw] = f2;
        res_g += WG[j] * (f1 + f2);
        res_k += WGK[jtw] * (f1 + f2);
        res_abs += WGK[jtw] * (f1.abs() + f2.abs());
    }
    for j in 0..4 {
        let jtwm1 = 2 * j;
        let dx = half * XGK[jtwm1];
        let f1 = eval(center - dx, WGK[jtwm1], evals)?;
        let f2 = eval(center + dx, WGK[jtwm1], evals)?;
        fv1[jtwm1] = f1;
        fv2[jtwm1] = f2;
        res_k += WGK[jtwm1] * (f1 + f2);
        res_abs += WGK[jtwm1] * (f1.abs() + f2.abs());
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let scale = half.abs();
    let value = res_k * half;
    res_abs *= scale;
    res_asc *= scale;
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    let roundoff = 50.0 * f64::EPSILON * res_abs;
    err = err.max(roundoff);
    let inherited = inherited * scale;
    Ok(Panel {
        a,
        b,
        value,
        error: err + inherited,
        floor: roundoff + inherited,
        seq: 0,
    })
}

/// Global adaptive driver shared by every public entry point.
fn adaptive<F>(mut f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult, QuadError>
where
    F: FnMut(f64) -> Result<Sample, QuadError>,
{
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(QuadError::InvalidInterval { a, b });
    }
    opts.validate()?;

    let n0 = match opts.max_panel {
        Some(w) if w > 0.0 => (((b - a) / w).ceil() as usize).max(1),
        _ => 1,
    };
    let mut evals = 0usize;
    let mut seq = 0u64;
    let mut heap = BinaryHeap::with_capacity(n0 * 2);
    let mut value = 0.0;
    let mut error = 0.0;
    let mut reducible = 0.0;
    for i in 0..n0 {
        let lo = a + (b - a) * (i as f64) / (n0 as f64);
        let hi = if i + 1 == n0 { b } else { a + (b - a) * ((i + 1) as f64) / (n0 as f64) };
        let mut p = gk15(&mut f, lo, hi, &mut evals)?;
        p.seq = seq;
        seq += 1;
        value += p.value;
        error += p.error;
        reducible += p.error - p.floor;
        heap.push(p);
    }

    let total = |heap: &BinaryHeap<Panel>| {
        let mut panels: Vec<&Panel> = heap.iter().collect();
        panels.sort_by(|x, y| x.a.total_cmp(&y.a));
        panels.iter().fold((0.0, 0.0, 0.0), |acc, p| {
            (acc.0 + p.value, acc.1 + p.error, acc.2 + (p.error - p.floor))
        })
    };

    loop {
        let target = opts.abs_tol.max(opts.rel_tol * value.abs());
        if error <= target || reducible <= 0.1 * target {
            // running sums drift, confirm on an exact recount
            let (v, e, r) = total(&heap);
            let target = opts.abs_tol.max(opts.rel_tol * v.abs());
            if e <= target || r <= 0.1 * target {
                return Ok(QuadResult {
                    value: v,
                    abs_error_estimate: e,
                    evaluations: evals,
                });
            }
            value = v;
            error = e;
            reducible = r;
        }
        if evals >= opts.max_evals {
            let (v, e, _) = total(&heap);
            return Err(QuadError::NonConvergence {
                best: QuadResult {
                    value: v,
                    abs_error_estimate: e,
                    evaluations: evals,
                },
                budget: opts.max_evals,
            });
        }
        let worst = heap.pop().expect("at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if !(worst.a < mid && mid < worst.b) || (worst.b - worst.a) < 8.0 * f64::EPSILON * mid.abs().max(1.0) {
            heap.push(worst);
            let (v, e, _) = total(&heap);
            return Err(QuadError::NonConvergence {
                best: QuadResult {
                    value: v,
                    abs_error_estimate: e,
                    evaluations: evals,
                },
                budget: opts.max_evals,
            });
        }
        let mut left = gk15(&mut f, worst.a, mid, &mut evals)?;
        let mut right = gk15(&mut f, mid, worst.b, &mut evals)?;
        left.seq = seq;
        right.seq = seq + 1;
        seq += 2;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        reducible += (left.error - left.floor) + (right.error - right.floor) - (worst.error - worst.floor);
        heap.push(left);
        heap.push(right);
    }
}

fn plain<F: FnMut(f64) -> f64>(mut f: F) -> impl FnMut(f64) -> Result<Sample, QuadError> {
    move |x| {
        Ok(Sample {
            value: f(x),
            error: 0.0,
            evals: 1,
        })
    }
}

/// Integrates a finite integrand over `[a, b]`.
pub fn integrate_1d<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult, QuadError> {
    adaptive(plain(f), a, b, opts)
}

/// Endpoints at which the integrand may blow up like `|x − endpoint|^(−1/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndpointSingularity {
    None,
    Lower,
    Upper,
    Both,
}

/// Integrates over `[a, b]` with integrable singularities at declared endpoints.
pub fn integrate_1d_singular<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    singular: EndpointSingularity,
    opts: &QuadOptions,
) -> Result<QuadResult, QuadError> {
    let mut f = f;
    let mut sampler = |x: f64| -> Result<Sample, QuadError> {
        Ok(Sample {
            value: f(x),
            error: 0.0,
            evals: 1,
        })
    };
    substituted(&mut sampler, a, b, singular, opts)
}

/// Applies the `x = a + u²` / `x = b − u²` substitutions around a sampler.
fn substituted<F>(
    f: &mut F,
    a: f64,
    b: f64,
    singular: EndpointSingularity,
    opts: &QuadOptions,
) -> Result<QuadResult, QuadError>
where
    F: FnMut(f64) -> Result<Sample, QuadError>,
{
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(QuadError::InvalidInterval { a, b });
    }
    let u_opts = |width: f64| {
        let mut o = *opts;
        // dx/du = 2u never exceeds 2√width
        o.max_panel = opts.max_panel.map(|w| w / (2.0 * width.sqrt()));
        o
    };
    match singular {
        EndpointSingularity::None => adaptive(&mut *f, a, b, opts),
        EndpointSingularity::Lower => {
            let w = b - a;
            adaptive(
                |u| {
                    let s = f(a + u * u)?;
                    Ok(Sample {
                        value: s.value * 2.0 * u,
                        error: s.error * 2.0 * u,
                        evals: s.evals,
                    })
                },
                0.0,
                w.sqrt(),
                &u_opts(w),
            )
        }
        EndpointSingularity::Upper => {
            let w = b - a;
            adaptive(
                |u| {
                    let s = f(b - u * u)?;
                    Ok(Sample {
                        value: s.value * 2.0 * u,
                        error: s.error * 2.0 * u,
                        evals: s.evals,
                    })
                },
                0.0,
                w.sqrt(),
                &u_opts(w),
            )
        }
        EndpointSingularity::Both => {
            let mid = 0.5 * (a + b);
            let half = QuadOptions {
                abs_tol: 0.5 * opts.abs_tol,
                ..*opts
            };
            let lo = substituted(f, a, mid, EndpointSingularity::Lower, &half)?;
            let hi = substituted(f, mid, b, EndpointSingularity::Upper, &half)?;
            Ok(lo.combine(hi))
        }
    }
}

/// The line `|y − x| = separation` in the `(x, y)` plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightconeLine {
    pub separation: f64,
}

/// Breakpoints of `[a, b]` where `|center − x| = l`, in increasing order.
fn cone_points(a: f64, b: f64, center: f64, l: f64) -> Vec<f64> {
    let mut pts: Vec<f64> = [center - l, center + l]
        .into_iter()
        .filter(|&x| a < x && x < b)
        .collect();
    pts.dedup();
    pts
}

fn across_lightcone<F>(
    f: &mut F,
    a: f64,
    b: f64,
    center: f64,
    l: f64,
    opts: &QuadOptions,
) -> Result<QuadResult, QuadError>
where
    F: FnMut(f64) -> Result<Sample, QuadError>,
{
    let mut edges = vec![a];
    edges.extend(cone_points(a, b, center, l));
    edges.push(b);
    let pieces = edges.len() - 1;
    let piece_opts = QuadOptions {
        abs_tol: opts.abs_tol / pieces as f64,
        ..*opts
    };
    let mut total = QuadResult::ZERO;
    for w in edges.windows(2) {
        let (xa, xb) = (w[0], w[1]);
        let mid = 0.5 * (xa + xb);
        let sign = if center - mid >= 0.0 { 1.0 } else { -1.0 };
        let s_mid = (center - mid).abs();
        let r = if s_mid > l {
            // timelike piece: x = center − sign·√(u² + l²)
            let s_near = (center - xb).abs().min((center - xa).abs());
            let s_far = (center - xb).abs().max((center - xa).abs());
            let u_of = |s: f64| ((s - l).max(0.0) * (s + l)).sqrt();
            let (u0, u1) = (u_of(s_near), u_of(s_far));
            if u1 <= u0 {
                continue;
            }
            adaptive(
                |u| {
                    let s = (u * u + l * l).sqrt();
                    let jac = if s > 0.0 { u / s } else { 1.0 };
                    let x = (center - sign * s).clamp(xa, xb);
                    let v = f(x)?;
                    Ok(Sample {
                        value: v.value * jac,
                        error: v.error * jac,
                        evals: v.evals,
                    })
                },
                u0,
                u1,
                &piece_opts,
            )?
        } else {
            adaptive(&mut *f, xa, xb, &piece_opts)?
        };
        total = total.combine(r);
    }
    Ok(total)
}

/// Integrates over `[a, b]` an integrand with an integrable inverse-square-root
/// singularity wherever `|center − x| = l`.
pub fn integrate_across_lightcone<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    center: f64,
    l: f64,
    opts: &QuadOptions,
) -> Result<QuadResult, QuadError> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(QuadError::InvalidInterval { a, b });
    }
    let mut f = f;
    let mut sampler = |x: f64| {
        Ok(Sample {
            value: f(x),
            error: 0.0,
            evals: 1,
        })
    };
    across_lightcone(&mut sampler, a, b, center, l, opts)
}

/// Axis-aligned rectangle; `x` is the inner variable (`t1`), `y` the outer (`t2`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x: (f64, f64),
    pub y: (f64, f64),
}

impl Rect {
    pub fn new(x: (f64, f64), y: (f64, f64)) -> Self {
        Self { x, y }
    }
}

/// Iterated adaptive integral of `f(x, y)` over `rect`.
///
/// Inner integrals run at a tenth of the outer tolerance per unit outer
/// length; their error estimates are carried into the outer estimate. With a
/// declared `singular_line` the inner integral is split where `|y − x| = L`
/// with the timelike substitution, and the outer range is split wherever the
/// line meets a corner of the inner range, with `y = y_b ± v²` at those
/// breakpoints to absorb the resulting square-root kinks.
pub fn integrate_2d_rect<F: Fn(f64, f64) -> f64>(
    f: F,
    rect: Rect,
    opts: &QuadOptions,
    singular_line: Option<LightconeLine>,
) -> Result<QuadResult, QuadError> {
    let (x0, x1) = rect.x;
    let (y0, y1) = rect.y;
    if !(x0.is_finite() && x1.is_finite() && x0 < x1) {
        return Err(QuadError::InvalidInterval { a: x0, b: x1 });
    }
    if !(y0.is_finite() && y1.is_finite() && y0 < y1) {
        return Err(QuadError::InvalidInterval { a: y0, b: y1 });
    }
    opts.validate()?;

    let inner_opts = QuadOptions {
        abs_tol: opts.abs_tol / (10.0 * (y1 - y0)),
        rel_tol: opts.rel_tol / 10.0,
        ..*opts
    };
    let mut inner = |y: f64| -> Result<Sample, QuadError> {
        let mut g = |x: f64| {
            Ok(Sample {
                value: f(x, y),
                error: 0.0,
                evals: 1,
            })
        };
        let r = match singular_line {
            Some(line) => across_lightcone(&mut g, x0, x1, y, line.separation, &inner_opts),
            None => adaptive(&mut g, x0, x1, &inner_opts).map_err(|e| match e {
                QuadError::NonFinite { x } => QuadError::UndeclaredSingularity { t1: x, t2: y },
                other => other,
            }),
        }?;
        Ok(r.into())
    };

    match singular_line {
        None => adaptive(&mut inner, y0, y1, opts),
        Some(line) => {
            let l = line.separation;
            let mut breaks: Vec<f64> = [x0 - l, x0 + l, x1 - l, x1 + l]
                .into_iter()
                .filter(|&y| y0 < y && y < y1)
                .collect();
            breaks.sort_by(f64::total_cmp);
            breaks.dedup();
            let mut edges = vec![y0];
            edges.extend(&breaks);
            edges.push(y1);
            let piece_opts = QuadOptions {
                abs_tol: opts.abs_tol / (edges.len() - 1) as f64,
                ..*opts
            };
            let mut total = QuadResult::ZERO;
            for w in edges.windows(2) {
                let lower = breaks.contains(&w[0]);
                let upper = breaks.contains(&w[1]);
                let kind = match (lower, upper) {
                    (true, true) => EndpointSingularity::Both,
                    (true, false) => EndpointSingularity::Lower,
                    (false, true) => EndpointSingularity::Upper,
                    (false, false) => EndpointSingularity::None,
                };
                total = total.combine(substituted(&mut inner, w[0], w[1], kind, &piece_opts)?);
            }
            Ok(total)
        }
    }
}
