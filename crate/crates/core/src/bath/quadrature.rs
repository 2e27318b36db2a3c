//! Globally adaptive Gauss–Kronrod (7/15) quadrature with a hard panel budget.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the odd-indexed Kronrod nodes 1, 3, 5 and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// An integral value together with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub const ZERO: Estimate = Estimate {
        value: 0.0,
        error: 0.0,
    };

    pub fn exact(value: f64) -> Self {
        Estimate { value, error: 0.0 }
    }
}

/// Tolerances and panel budget for [`Quadrature::integrate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            abs_tol: 1e-9,
            rel_tol: 0.0,
            max_panels: 4000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
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

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Panel {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

impl Quadrature {
    pub fn with_tolerance(abs_tol: f64) -> Self {
        Quadrature {
            abs_tol,
            ..Default::default()
        }
    }

    /// Integrate `f` over `[a, b]`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> Result<Estimate> {
        self.integrate_pieces(f, &[a, b])
    }

    /// Integrate `f` over `[points[0], points[last]]`, starting from one panel
    /// per consecutive pair of break points. Break points should sit on
    /// discontinuities or kinks of the integrand; they are never evaluated.
    pub fn integrate_pieces<F: Fn(f64) -> f64>(&self, f: F, points: &[f64]) -> Result<Estimate> {
        if points.len() < 2 {
            return Ok(Estimate::ZERO);
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::Usage(format!(
                "non-finite quadrature break point in {points:?}"
            )));
        }
        if points.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Usage(format!(
                "quadrature break points must be non-decreasing: {points:?}"
            )));
        }

        let mut heap = BinaryHeap::new();
        for w in points.windows(2) {
            if w[1] > w[0] {
                heap.push(gk15(&f, w[0], w[1]));
            }
        }
        let mut panels = heap.len();
        loop {
            let (value, error) = heap
                .iter()
                .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error));
            if !value.is_finite() || !error.is_finite() {
                return Err(Error::Numerical(format!(
                    "integrand produced a non-finite value on [{}, {}]",
                    points[0],
                    points[points.len() - 1]
                )));
            }
            let target = self.abs_tol.max(self.rel_tol * value.abs());
            if error <= target {
                return Ok(Estimate { value, error });
            }
            let Some(worst) = heap.pop() else {
                return Ok(Estimate { value, error });
            };
            let mid = 0.5 * (worst.a + worst.b);
            if panels >= self.max_panels || mid <= worst.a || mid >= worst.b {
                return Err(Error::Numerical(format!(
                    "quadrature did not converge on [{}, {}]: estimate {value:.6e}, \
                     error {error:.3e} > tolerance {target:.3e} after {panels} panels \
                     (worst panel [{:.6e}, {:.6e}] error {:.3e})",
                    points[0],
                    points[points.len() - 1],
                    worst.a,
                    worst.b,
                    worst.error
                )));
            }
            heap.push(gk15(&f, worst.a, mid));
            heap.push(gk15(&f, mid, worst.b));
            panels += 1;
        }
    }
}
