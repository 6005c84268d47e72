//! Central finite differences for checking analytic gradients.

/// Largest relative disagreement found by [`check_gradient`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    /// Parameter index where the worst disagreement occurred.
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub checked: usize,
}

/// `(f(p + h e_i) - f(p - h e_i)) / 2h`.
pub fn central_difference(params: &[f64], i: usize, h: f64, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let mut p = params.to_vec();
    p[i] = params[i] + h;
    let up = f(&p);
    p[i] = params[i] - h;
    let down = f(&p);
    (up - down) / (2.0 * h)
}

/// Compares `analytic[i]` with a central difference for every `i` in
/// `indices`. The relative error is `|a - n| / max(|a|, |n|, floor)`, so
/// gradients below `floor` are judged on absolute error.
pub fn check_gradient(
    params: &[f64],
    analytic: &[f64],
    indices: &[usize],
    h: f64,
    floor: f64,
    mut f: impl FnMut(&[f64]) -> f64,
) -> GradCheck {
    let mut out = GradCheck { max_rel_error: 0.0, worst_index: 0, analytic: 0.0, numeric: 0.0, checked: 0 };
    for &i in indices {
        let n = central_difference(params, i, h, &mut f);
        let a = analytic[i];
        let rel = (a - n).abs() / a.abs().max(n.abs()).max(floor);
        if rel > out.max_rel_error || out.checked == 0 {
            out = GradCheck { max_rel_error: rel, worst_index: i, analytic: a, numeric: n, checked: out.checked };
        }
        out.checked += 1;
    }
    out
}
