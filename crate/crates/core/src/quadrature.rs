//! Adaptive Gauss–Kronrod (7/15) quadrature on finite intervals.

use alloc::collections::BinaryHeap;
use core::cmp::Ordering;

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
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("quadrature did not converge: value {value}, error estimate {error}")]
pub struct QuadratureError {
    pub value: f64,
    pub error: f64,
}

fn kronrod<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Estimate {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    Estimate { value: k * h, error: libm::fabs((k - g) * h) }
}

struct Piece {
    a: f64,
    b: f64,
    est: Estimate,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.est.error == o.est.error
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> Ordering {
        self.est.error.total_cmp(&o.est.error)
    }
}

/// Integrates `f` over [a,b] until the summed error estimate is at most `abs_tol`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    max_pieces: usize,
) -> Result<Estimate, QuadratureError> {
    if a == b {
        return Ok(Estimate { value: 0.0, error: 0.0 });
    }
    let first = kronrod(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    let mut value = first.value;
    let mut error = first.error;
    heap.push(Piece { a, b, est: first });
    while error > abs_tol {
        if heap.len() >= max_pieces {
            return Err(QuadratureError { value, error });
        }
        let p = heap.pop().expect("non-empty");
        let m = 0.5 * (p.a + p.b);
        if !(m > p.a && m < p.b) {
            return Err(QuadratureError { value, error });
        }
        let l = kronrod(&mut f, p.a, m);
        let r = kronrod(&mut f, m, p.b);
        value += l.value + r.value - p.est.value;
        error += l.error + r.error - p.est.error;
        heap.push(Piece { a: p.a, b: m, est: l });
        heap.push(Piece { a: m, b: p.b, est: r });
    }
    // Re-sum to shed accumulated cancellation in the running totals.
    let mut pieces = heap.into_vec();
    pieces.sort_by(|x, y| x.a.total_cmp(&y.a));
    let value = pieces.iter().map(|p| p.est.value).sum();
    let error = pieces.iter().map(|p| p.est.error).sum();
    Ok(Estimate { value, error })
}
