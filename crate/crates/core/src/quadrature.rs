//! Globally adaptive Gauss-Kronrod (10/21 point) quadrature.
//!
//! Integration ranges are given as a sorted list of breakpoints; either end
//! may be infinite. Each segment is integrated in its own coordinate: finite
//! segments directly, half-infinite segments through
//! `x = a + scale ((1 - u)^(-4) - 1)`, which turns algebraic tails down to
//! `x^(-1.25)` into bounded integrands on `[0, 1)`. Breakpoints should sit at
//! support endpoints, where densities have square-root-type singularities;
//! the Kronrod rule never evaluates segment ends.
//!
//! The error estimate is the QUADPACK `qk21` one. Panels are refined in order
//! of decreasing error until the summed error meets the tolerance.

#![allow(clippy::excessive_precision)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::stats::NeumaierSum;

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

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_478_281,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

const TAIL_POWER: i32 = 4;

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
    /// Panels each segment starts with.
    pub initial_panels: usize,
    /// Length scale used by the half-infinite maps.
    pub tail_scale: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 1e-12,
            max_panels: 20_000,
            initial_panels: 4,
            tail_scale: 1.0,
        }
    }
}

impl QuadConfig {
    pub fn with_abs_tol(mut self, tol: f64) -> Self {
        self.abs_tol = tol;
        self
    }

    pub fn with_rel_tol(mut self, tol: f64) -> Self {
        self.rel_tol = tol;
        self
    }

    pub fn with_tail_scale(mut self, scale: f64) -> Self {
        self.tail_scale = scale;
        self
    }

    pub fn with_initial_panels(mut self, panels: usize) -> Self {
        self.initial_panels = panels.max(1);
        self
    }
}

/// Value and error estimate of a definite integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub abs_error: f64,
    pub panels: usize,
}

#[derive(Debug, Clone, Copy)]
enum Segment {
    Finite { a: f64, b: f64 },
    Upper { a: f64, scale: f64 },
    Lower { b: f64, scale: f64 },
}

impl Segment {
    fn domain(&self) -> (f64, f64) {
        match *self {
            Segment::Finite { a, b } => (a, b),
            _ => (0.0, 1.0),
        }
    }

    /// Maps the working coordinate to `x` and returns `(x, dx/du)`.
    fn map(&self, u: f64) -> (f64, f64) {
        match *self {
            Segment::Finite { .. } => (u, 1.0),
            Segment::Upper { a, scale } => {
                let r = 1.0 - u;
                let rp = r.powi(-TAIL_POWER);
                (a + scale * (rp - 1.0), scale * f64::from(TAIL_POWER) * rp / r)
            }
            Segment::Lower { b, scale } => {
                let r = 1.0 - u;
                let rp = r.powi(-TAIL_POWER);
                (b - scale * (rp - 1.0), scale * f64::from(TAIL_POWER) * rp / r)
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    segment: usize,
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
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
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, seg: &Segment, lo: f64, hi: f64) -> (f64, f64) {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let eval = |u: f64| {
        // Nodes that round onto the panel ends are dropped.
        if u <= lo || u >= hi {
            return 0.0;
        }
        let (x, jac) = seg.map(u);
        let y = f(x);
        if y == 0.0 {
            0.0
        } else {
            y * jac
        }
    };

    let fc = eval(center);
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = eval(center - dx);
        let f2 = eval(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (value, err)
}

fn segments(points: &[f64], scale: f64) -> Result<Vec<Segment>> {
    if points.len() < 2 {
        return Err(Error::Domain("integration needs at least two breakpoints".into()));
    }
    if points.iter().any(|x| x.is_nan()) {
        return Err(Error::Domain("breakpoint is NaN".into()));
    }
    let mut out = Vec::with_capacity(points.len());
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        if a > b {
            return Err(Error::Domain(format!("breakpoints not sorted: {a} > {b}")));
        }
        if a == b {
            continue;
        }
        match (a.is_finite(), b.is_finite()) {
            (true, true) => out.push(Segment::Finite { a, b }),
            (true, false) => out.push(Segment::Upper { a, scale }),
            (false, true) => out.push(Segment::Lower { b, scale }),
            (false, false) => {
                out.push(Segment::Lower { b: 0.0, scale });
                out.push(Segment::Upper { a: 0.0, scale });
            }
        }
    }
    Ok(out)
}

/// Integrates `f` over `[points[0], points[last]]`, split at every breakpoint.
pub fn integrate<F: Fn(f64) -> f64>(f: F, points: &[f64], cfg: &QuadConfig) -> Result<Integral> {
    let segs = segments(points, cfg.tail_scale)?;
    let mut heap = BinaryHeap::new();
    let mut frozen_value = NeumaierSum::default();
    let mut frozen_error = 0.0;
    let mut panels = 0usize;

    for (i, seg) in segs.iter().enumerate() {
        let (lo, hi) = seg.domain();
        let n = cfg.initial_panels.max(1);
        let width = (hi - lo) / n as f64;
        for j in 0..n {
            let a = lo + width * j as f64;
            let b = if j + 1 == n { hi } else { a + width };
            let (value, error) = kronrod(&f, seg, a, b);
            heap.push(Panel {
                segment: i,
                lo: a,
                hi: b,
                value,
                error,
            });
            panels += 1;
        }
    }

    let totals = |heap: &BinaryHeap<Panel>, fv: &NeumaierSum, fe: f64| {
        let mut v = fv.clone();
        let mut e = fe;
        for p in heap.iter() {
            v.add(p.value);
            e += p.error;
        }
        (v.sum(), e)
    };

    let mut value_sum: f64 = heap.iter().map(|p| p.value).sum();
    let mut error_sum: f64 = heap.iter().map(|p| p.error).sum();
    loop {
        let tol = cfg.abs_tol.max(cfg.rel_tol * value_sum.abs());
        if error_sum <= tol || heap.is_empty() {
            let (value, error) = totals(&heap, &frozen_value, frozen_error);
            let tol = cfg.abs_tol.max(cfg.rel_tol * value.abs());
            if !value.is_finite() || !error.is_finite() {
                return Err(Error::Quadrature {
                    estimate: value,
                    achieved: error,
                    requested: tol,
                });
            }
            if error <= tol {
                return Ok(Integral {
                    value,
                    abs_error: error,
                    panels,
                });
            }
            if heap.is_empty() {
                return Err(Error::Quadrature {
                    estimate: value,
                    achieved: error,
                    requested: tol,
                });
            }
            value_sum = value;
            error_sum = error;
            continue;
        }
        if panels >= cfg.max_panels {
            let (value, error) = totals(&heap, &frozen_value, frozen_error);
            return Err(Error::Quadrature {
                estimate: value,
                achieved: error,
                requested: tol,
            });
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if !(mid > worst.lo && mid < worst.hi) {
            // Panel is at floating-point resolution; keep it as is.
            frozen_value.add(worst.value);
            frozen_error += worst.error;
            continue;
        }
        let seg = &segs[worst.segment];
        let (v1, e1) = kronrod(&f, seg, worst.lo, mid);
        let (v2, e2) = kronrod(&f, seg, mid, worst.hi);
        value_sum += v1 + v2 - worst.value;
        error_sum += e1 + e2 - worst.error;
        heap.push(Panel {
            segment: worst.segment,
            lo: worst.lo,
            hi: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            segment: worst.segment,
            lo: mid,
            hi: worst.hi,
            value: v2,
            error: e2,
        });
        panels += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomial_is_exact() {
        let r = integrate(|x| 3.0 * x * x, &[0.0, 2.0], &QuadConfig::default()).unwrap();
        assert_abs_diff_eq!(r.value, 8.0, epsilon = 1e-13);
    }

    #[test]
    fn exponential_tail() {
        let r = integrate(|x: f64| (-x).exp(), &[0.0, f64::INFINITY], &QuadConfig::default()).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn heavy_algebraic_tail() {
        // Density of GP(1, 2): (1 + 2x)^(-3/2).
        let cfg = QuadConfig::default().with_abs_tol(1e-11);
        let r = integrate(|x: f64| (1.0 + 2.0 * x).powf(-1.5), &[0.0, f64::INFINITY], &cfg).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn endpoint_square_root_singularity() {
        let cfg = QuadConfig::default().with_abs_tol(1e-7);
        let r = integrate(|x: f64| 1.0 / (1.0 - x).sqrt(), &[0.0, 1.0], &cfg).unwrap();
        assert_abs_diff_eq!(r.value, 2.0, epsilon = 1e-7);
    }

    #[test]
    fn doubly_infinite() {
        let r = integrate(
            |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            &[f64::NEG_INFINITY, f64::INFINITY],
            &QuadConfig::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-11);
    }

    #[test]
    fn reports_non_convergence() {
        let cfg = QuadConfig {
            max_panels: 10,
            ..QuadConfig::default().with_abs_tol(1e-15)
        };
        let err = integrate(|x: f64| x.abs().sqrt().recip(), &[-1.0, 1.0], &cfg).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }

    #[test]
    fn rejects_bad_breakpoints() {
        assert!(integrate(|x| x, &[1.0], &QuadConfig::default()).is_err());
        assert!(integrate(|x| x, &[1.0, 0.0], &QuadConfig::default()).is_err());
    }
}
