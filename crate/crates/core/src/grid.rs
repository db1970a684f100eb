//! Evenly spaced sample points.

/// `n` points from `start` to `stop` inclusive. `n = 1` yields `[start]`.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (n - 1) as f64;
            (0..n)
                .map(|k| {
                    if k == n - 1 {
                        stop
                    } else {
                        start + step * k as f64
                    }
                })
                .collect()
        }
    }
}

/// `n` log-spaced points from `start` to `stop` inclusive; both must be > 0.
pub fn logspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    linspace(start.ln(), stop.ln(), n)
        .into_iter()
        .enumerate()
        .map(|(k, x)| match k {
            0 => start,
            k if k == n - 1 => stop,
            _ => x.exp(),
        })
        .collect()
}

/// The `k`-th of `n` points on `[0, 1]`.
pub fn unit_point(k: usize, n: usize) -> f64 {
    if n <= 1 {
        0.0
    } else if k == n - 1 {
        1.0
    } else {
        k as f64 / (n - 1) as f64
    }
}
