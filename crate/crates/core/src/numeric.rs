//! Scalar root bracketing and adaptive quadrature.

use alloc::vec::Vec;

/// Bracketed root of `f` on `[a, b]`, where `f(a)` and `f(b)` have opposite
/// signs. Illinois-modified false position, falling back to bisection
/// whenever the bracket fails to halve over two consecutive iterations.
///
/// Returns `None` if the bracket is invalid or `max_iter` is exhausted.
pub fn bracketed_root<F>(mut f: F, mut a: f64, mut b: f64, xtol: f64, max_iter: usize) -> Option<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut fa = f(a);
    let mut fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return None;
    }
    // which end was retained on the previous iteration: -1 = a, 1 = b
    let mut retained = 0i8;
    let mut width = (b - a).abs();
    let mut stalls = 0u8;
    for _ in 0..max_iter {
        let mut c = if stalls >= 2 {
            stalls = 0;
            0.5 * (a + b)
        } else {
            (a * fb - b * fa) / (fb - fa)
        };
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        if !(c > lo && c < hi) {
            c = 0.5 * (a + b);
        }
        let fc = f(c);
        if fc == 0.0 || !fc.is_finite() {
            return fc.is_finite().then_some(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if retained == -1 {
                fa *= 0.5;
            }
            retained = -1;
        } else {
            a = c;
            fa = fc;
            if retained == 1 {
                fb *= 0.5;
            }
            retained = 1;
        }
        let new_width = (b - a).abs();
        if new_width <= xtol {
            return Some(if fa.abs() < fb.abs() { a } else { b });
        }
        if new_width > 0.5 * width {
            stalls += 1;
        } else {
            stalls = 0;
        }
        width = new_width;
    }
    None
}

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

/// One 15-point Kronrod panel: (kronrod estimate, |kronrod - gauss|).
fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Globally adaptive Gauss-Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// Bisects the panel with the largest error estimate until the summed
/// estimate is below `max(abs_tol, rel_tol * |I|)`. Returns `None` when
/// `max_panels` is exceeded.
pub fn integrate<F>(mut f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64, max_panels: usize) -> Option<f64>
where
    F: FnMut(f64) -> f64,
{
    if a == b {
        return Some(0.0);
    }
    let (value, err) = gk15(&mut f, a, b);
    let mut panels: Vec<(f64, f64, f64, f64)> = alloc::vec![(a, b, value, err)];
    let mut total = value;
    let mut total_err = err;
    while total_err > abs_tol.max(rel_tol * total.abs()) {
        if panels.len() >= max_panels || !total.is_finite() {
            return None;
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)?;
        let (lo, hi, v, e) = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        total += v1 + v2 - v;
        total_err += e1 + e2 - e;
        panels.push((lo, mid, v1, e1));
        panels.push((mid, hi, v2, e2));
    }
    // re-sum to shed the drift of the running updates
    Some(panels.iter().map(|p| p.2).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn root_of_cubic() {
        let r = bracketed_root(|x| x * x * x - 2.0, 0.0, 2.0, 1e-15, 200).unwrap();
        assert!((r - libm::cbrt(2.0)).abs() < 1e-14);
    }

    #[test]
    fn root_rejects_bad_bracket() {
        assert!(bracketed_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12, 100).is_none());
    }

    #[test]
    fn root_handles_flat_side() {
        // strongly skewed: plain false position would crawl
        let r = bracketed_root(|x| libm::exp(20.0 * x) - 1.0, -1.0, 1.0, 1e-15, 200).unwrap();
        assert!(r.abs() < 1e-14);
    }

    #[test]
    fn quadrature_polynomial_and_log() {
        let v = integrate(|x| x * x, 0.0, 3.0, 1e-12, 0.0, 1000).unwrap();
        assert!((v - 9.0).abs() < 1e-12);
        let v = integrate(|x| 1.0 / x, 1.0, 1e3, 1e-12, 0.0, 1000).unwrap();
        assert!((v - libm::log(1e3)).abs() < 1e-10);
    }

    #[test]
    fn quadrature_reversed_limits() {
        let v = integrate(libm::sin, core::f64::consts::PI, 0.0, 1e-12, 0.0, 1000).unwrap();
        assert!((v + 2.0).abs() < 1e-12);
    }
}
