use modal_core::error::{Error, Result};

/// Lowest frequency of the sampling grid.
pub const BARK_GRID_START_HZ: f64 = 20.0;

/// Traunmüller's approximation, `z = 26.81 f / (1960 + f) - 0.53`.
pub fn hz_to_bark(f: f64) -> f64 {
    26.81 * f / (1960.0 + f) - 0.53
}

/// Exact inverse of [`hz_to_bark`].
pub fn bark_to_hz(z: f64) -> f64 {
    1960.0 * (z + 0.53) / (26.28 - z)
}

/// `n` frequencies uniformly spaced in Bark between 20 Hz and `f_max`.
pub fn bark_grid(n: usize, f_max: f64, sample_rate: f64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::arg("a Bark grid needs at least two points"));
    }
    if !(f_max > BARK_GRID_START_HZ && f_max <= 0.5 * sample_rate) {
        return Err(Error::arg(format!(
            "f_max {f_max} Hz must lie in ({BARK_GRID_START_HZ}, {}] Hz",
            0.5 * sample_rate
        )));
    }
    let (z0, z1) = (hz_to_bark(BARK_GRID_START_HZ), hz_to_bark(f_max));
    let mut grid: Vec<f64> =
        (0..n).map(|i| bark_to_hz(z0 + (z1 - z0) * i as f64 / (n - 1) as f64)).collect();
    grid[0] = BARK_GRID_START_HZ;
    grid[n - 1] = f_max;
    Ok(grid)
}
