// SPDX-License-Identifier: Apache-2.0

//! Adaptive Simpson quadrature.

/// Integral together with an estimate of its absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

impl std::ops::Add for Quadrature {
    type Output = Quadrature;
    fn add(self, o: Quadrature) -> Quadrature {
        Quadrature {
            value: self.value + o.value,
            error: self.error + o.error,
            evaluations: self.evaluations + o.evaluations,
        }
    }
}

const MAX_DEPTH: u32 = 40;

/// Integrate `f` over `[a, b]` split into `panels` equal pieces, refining each
/// piece until the Richardson error estimate is below `rel_tol` times the
/// magnitude of the local estimate (or `abs_tol`, whichever is larger).
pub fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    panels: usize,
    rel_tol: f64,
    abs_tol: f64,
) -> Quadrature {
    let panels = panels.max(1);
    let h = (b - a) / panels as f64;
    let mut total = Quadrature::default();
    let mut left = f(a);
    total.evaluations += 1;
    for k in 0..panels {
        let x0 = a + k as f64 * h;
        let x2 = if k + 1 == panels { b } else { x0 + h };
        let x1 = 0.5 * (x0 + x2);
        let (f1, f2) = (f(x1), f(x2));
        total.evaluations += 2;
        let whole = simpson(x0, x2, left, f1, f2);
        let mut part = Quadrature::default();
        refine(f, x0, x2, left, f1, f2, whole, rel_tol, abs_tol / panels as f64, MAX_DEPTH, &mut part);
        total = total + part;
        left = f2;
    }
    total
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    rel_tol: f64,
    abs_tol: f64,
    depth: u32,
    out: &mut Quadrature,
) {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    out.evaluations += 2;
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    let tol = (rel_tol * (left + right).abs()).max(abs_tol);
    if depth == 0 || delta.abs() <= 15.0 * tol {
        out.value += left + right + delta / 15.0;
        out.error += delta.abs() / 15.0;
        return;
    }
    refine(f, a, m, fa, flm, fm, left, rel_tol, 0.5 * abs_tol, depth - 1, out);
    refine(f, m, b, fm, frm, fb, right, rel_tol, 0.5 * abs_tol, depth - 1, out);
}
