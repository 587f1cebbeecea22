//! Adaptive Simpson quadrature for smooth scalar integrands.

const MAX_DEPTH: usize = 40;

struct Panel {
    a: f64,
    m: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    estimate: f64,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) * (fa + 4.0 * fm + fb) / 6.0
}

fn refine<F: Fn(f64) -> f64>(f: &F, p: Panel, tol: f64, depth: usize) -> f64 {
    let lm = 0.5 * (p.a + p.m);
    let rm = 0.5 * (p.m + p.b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(p.a, p.m, p.fa, flm, p.fm);
    let right = simpson(p.m, p.b, p.fm, frm, p.fb);
    let whole = left + right;
    if depth == 0 || (whole - p.estimate).abs() <= 15.0 * tol {
        whole + (whole - p.estimate) / 15.0
    } else {
        let lp = Panel {
            a: p.a,
            m: lm,
            b: p.m,
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            estimate: left,
        };
        let rp = Panel {
            a: p.m,
            m: rm,
            b: p.b,
            fa: p.fm,
            fm: frm,
            fb: p.fb,
            estimate: right,
        };
        refine(f, lp, 0.5 * tol, depth - 1) + refine(f, rp, 0.5 * tol, depth - 1)
    }
}

/// ∫ₐᵇ f dx to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let estimate = simpson(a, b, fa, fm, fb);
    refine(
        &f,
        Panel {
            a,
            m,
            b,
            fa,
            fm,
            fb,
            estimate,
        },
        tol,
        MAX_DEPTH,
    )
}
