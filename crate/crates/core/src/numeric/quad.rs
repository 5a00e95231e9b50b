//! Globally adaptive Gauss–Kronrod (10/21-point) integration.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

pub const DEFAULT_MAX_INTERVALS: usize = 4000;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Estimated absolute error.
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut fv = [(0.0, 0.0); 10];
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    for (j, &x) in XGK.iter().enumerate().take(10) {
        let dx = half * x;
        let (f1, f2) = (f(center - dx), f(center + dx));
        fv[j] = (f1, f2);
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    // QUADPACK error heuristic: scale the Gauss/Kronrod difference by the
    // mean absolute deviation of f on the segment.
    let mean = 0.5 * kronrod;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for (j, &(f1, f2)) in fv.iter().enumerate() {
        resasc += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let resasc = resasc * half.abs();
    let value = kronrod * half;
    let raw = ((kronrod - gauss) * half).abs();
    let mut error = raw;
    if resasc != 0.0 && raw != 0.0 {
        error = resasc * (200.0 * raw / resasc).powf(1.5).min(1.0);
    }
    let error = error.max(50.0 * f64::EPSILON * value.abs());
    Segment { a, b, value, error }
}

/// Integrates `f` over `[a, b]` until the estimated error is below
/// `max(abs_tol, rel_tol * |value|)`.
pub fn integrate<F>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64, max_intervals: usize) -> Result<Quadrature>
where
    F: Fn(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain("integration limits must be finite".into()));
    }
    if a == b {
        return Ok(Quadrature { value: 0.0, error: 0.0, intervals: 0 });
    }
    let first = gk21(&f, a, b);
    if !first.value.is_finite() {
        return Err(Error::Numeric {
            message: "integrand is not finite".into(),
            estimate: first.value,
            achieved: f64::INFINITY,
        });
    }
    let mut heap = BinaryHeap::new();
    let mut total = first.value;
    let mut err = first.error;
    heap.push(first);
    // The roundoff floor keeps a zero relative tolerance from demanding the impossible.
    let target = |v: f64| abs_tol.max(rel_tol * v.abs()).max(100.0 * f64::EPSILON * v.abs());
    while err > target(total) {
        if heap.len() >= max_intervals {
            return Err(Error::Numeric {
                message: format!("adaptive quadrature did not converge in {max_intervals} intervals"),
                estimate: total,
                achieved: err,
            });
        }
        let worst = heap.pop().expect("heap is never empty here");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval can no longer be split in floating point.
            heap.push(worst);
            return Err(Error::Numeric {
                message: "quadrature hit the floating-point resolution limit".into(),
                estimate: total,
                achieved: err,
            });
        }
        let left = gk21(&f, worst.a, mid);
        let right = gk21(&f, mid, worst.b);
        heap.push(left);
        heap.push(right);
        // Running updates lose everything when a huge segment is replaced, so resum.
        total = heap.iter().map(|s| s.value).sum();
        err = heap.iter().map(|s| s.error).sum();
        if !total.is_finite() {
            return Err(Error::Numeric {
                message: "integrand is not finite".into(),
                estimate: total,
                achieved: f64::INFINITY,
            });
        }
    }
    // Recompute sums to shed accumulated cancellation from the running updates.
    let value = heap.iter().map(|s| s.value).sum();
    let error = heap.iter().map(|s| s.error).sum();
    Ok(Quadrature { value, error, intervals: heap.len() })
}

/// Integrates `f` over `[0, inf)` through `t = scale * u / (1 - u)`, `u in [0, 1)`.
///
/// `scale` should be the length over which `f` decays; `f` must decay
/// exponentially for the mapped integrand to stay smooth at `u = 1`.
pub fn integrate_semi_infinite<F>(
    f: F,
    scale: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<Quadrature>
where
    F: Fn(f64) -> f64,
{
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Domain(format!("scale must be positive, got {scale}")));
    }
    let g = |u: f64| {
        let s = 1.0 - u;
        if s <= 0.0 {
            return 0.0;
        }
        let t = scale * u / s;
        if !t.is_finite() {
            return 0.0;
        }
        let v = f(t);
        if v == 0.0 {
            0.0
        } else {
            v * scale / (s * s)
        }
    };
    integrate(g, 0.0, 1.0, abs_tol, rel_tol, max_intervals)
}
