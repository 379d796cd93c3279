/// Euclidean projection onto `{w : ||w||_1 <= r}`.
///
/// Sort-and-threshold: the result is `sign(z) * max(|z| - θ, 0)` with the
/// threshold θ picked by the sorted cumulative-sum rule, so ties resolve
/// deterministically.
pub fn project_l1_ball(z: &[f64], r: f64) -> Vec<f64> {
    let mut out = vec![0.0; z.len()];
    let mut scratch = Vec::with_capacity(z.len());
    project_l1_ball_into(z, r, &mut out, &mut scratch);
    out
}

/// Allocation-free form of [`project_l1_ball`]; `scratch` is reused storage.
pub fn project_l1_ball_into(z: &[f64], r: f64, out: &mut [f64], scratch: &mut Vec<f64>) {
    debug_assert!(r >= 0.0);
    debug_assert_eq!(z.len(), out.len());
    let l1: f64 = z.iter().map(|v| v.abs()).sum();
    if l1 <= r {
        out.copy_from_slice(z);
        return;
    }
    if r <= 0.0 {
        out.fill(0.0);
        return;
    }
    scratch.clear();
    scratch.extend(z.iter().map(|v| v.abs()));
    scratch.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in scratch.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - r) / (j + 1) as f64;
        if u > t {
            theta = t;
        } else {
            break;
        }
    }
    for (o, &v) in out.iter_mut().zip(z) {
        *o = v.signum() * (v.abs() - theta).max(0.0);
    }
}

/// Entrywise `sign(z_i) * max(|z_i| - tau, 0)`, the proximal map of `tau ||.||_1`.
pub fn soft_threshold(z: &[f64], tau: f64) -> Vec<f64> {
    debug_assert!(tau >= 0.0);
    z.iter()
        .map(|&v| {
            let m = v.abs() - tau;
            if m > 0.0 {
                v.signum() * m
            } else {
                0.0
            }
        })
        .collect()
}
