//! Table interpolation shared by the component models. Queries outside the axis clamp to the edge.

pub(crate) fn strictly_increasing(xs: &[f64]) -> bool {
    xs.iter().all(|x| x.is_finite()) && xs.windows(2).all(|w| w[0] < w[1])
}

/// Bracketing segment index `i` and weight `t` such that x ≈ xs[i]·(1−t) + xs[i+1]·t.
pub(crate) fn bracket(xs: &[f64], x: f64) -> (usize, f64) {
    let n = xs.len();
    if n == 1 || x <= xs[0] {
        return (0, 0.0);
    }
    if x >= xs[n - 1] {
        return (n - 2, 1.0);
    }
    // first index with xs[i] > x
    let hi = xs.partition_point(|&v| v <= x);
    let lo = hi - 1;
    (lo, (x - xs[lo]) / (xs[hi] - xs[lo]))
}

pub(crate) fn interp1(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    if xs.len() == 1 {
        return ys[0];
    }
    let (i, t) = bracket(xs, x);
    if t == 0.0 {
        ys[i]
    } else if t == 1.0 {
        ys[i + 1]
    } else {
        ys[i] + t * (ys[i + 1] - ys[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interp_nodes_midpoints_and_clamps() {
        let xs = [0.0, 1.0, 3.0];
        let ys = [10.0, 20.0, 0.0];
        assert_eq!(interp1(&xs, &ys, 1.0), 20.0);
        assert_eq!(interp1(&xs, &ys, 0.5), 15.0);
        assert_eq!(interp1(&xs, &ys, 2.0), 10.0);
        assert_eq!(interp1(&xs, &ys, -4.0), 10.0);
        assert_eq!(interp1(&xs, &ys, 9.0), 0.0);
        assert_eq!(interp1(&xs, &ys, 3.0), 0.0);
    }

    #[test]
    fn monotonicity_check() {
        assert!(strictly_increasing(&[0.0, 1.0]));
        assert!(!strictly_increasing(&[0.0, 0.0]));
        assert!(!strictly_increasing(&[0.0, f64::NAN]));
    }
}
