//! Adaptive Simpson quadrature, used for kernel constants and for
//! population functionals of simulation designs.

const MAX_DEPTH: u32 = 48;

/// Integrates `f` over `[a, b]` to roughly `tol` absolute accuracy.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Integrates `f` over the box `lo[j]..hi[j]` by nesting the 1D rule.
/// Cost grows exponentially with the dimension; intended for `d <= 3`.
pub fn integrate_box<F: Fn(&[f64]) -> f64>(f: &F, lo: &[f64], hi: &[f64], tol: f64) -> f64 {
    assert_eq!(lo.len(), hi.len());
    nested(f, lo, hi, tol, &[])
}

fn nested<F: Fn(&[f64]) -> f64>(f: &F, lo: &[f64], hi: &[f64], tol: f64, prefix: &[f64]) -> f64 {
    let axis = prefix.len();
    if axis == lo.len() {
        return f(prefix);
    }
    let inner = |t: f64| {
        let mut p = prefix.to_vec();
        p.push(t);
        nested(f, lo, hi, tol, &p)
    };
    adaptive_simpson(&inner, lo[axis], hi[axis], tol)
}
