//! Toroidal grid geometry and run configuration.

/// Whether smaller or larger fitness values win.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Minimize,
    Maximize,
}

impl Orientation {
    /// True when `a` is strictly better than `b`.
    #[inline]
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Orientation::Minimize => a < b,
            Orientation::Maximize => a > b,
        }
    }

    /// The better of two values (`a` on ties).
    #[inline]
    pub fn best(self, a: f64, b: f64) -> f64 {
        if self.better(b, a) {
            b
        } else {
            a
        }
    }
}

/// Grid shape, selection parameter and optimization direction of a run.
///
/// Cells are indexed row-major: index = row * width + column.
#[derive(Debug, Clone, Copy)]
pub struct GridConfig {
    pub width: usize,
    pub height: usize,
    /// Probability of drawing the center cell per selection draw; each of
    /// the four compass neighbors is drawn with probability `(1 - beta) / 4`.
    pub beta: f64,
    pub orientation: Orientation,
}

impl GridConfig {
    pub fn new(width: usize, height: usize, beta: f64, orientation: Orientation) -> Self {
        assert!(width >= 1, "grid width must be >= 1");
        assert!(height >= 1, "grid height must be >= 1");
        assert!(
            (0.0..=1.0).contains(&beta),
            "beta must lie in [0, 1], got {beta}"
        );
        GridConfig {
            width,
            height,
            beta,
            orientation,
        }
    }

    pub fn square(side: usize, beta: f64, orientation: Orientation) -> Self {
        GridConfig::new(side, side, beta, orientation)
    }

    /// Population size.
    #[inline]
    pub fn lambda(&self) -> usize {
        self.width * self.height
    }
}

/// Von Neumann neighborhood of a cell with toroidal wrap-around.
///
/// Returns `[center, north, south, east, west]`; the entries coincide on
/// degenerate grids (width or height below 3).
#[inline]
pub fn neighborhood(index: usize, config: &GridConfig) -> [usize; 5] {
    let (w, h) = (config.width, config.height);
    assert!(index < w * h, "cell index {index} out of range");
    let row = index / w;
    let col = index % w;
    let north = ((row + h - 1) % h) * w + col;
    let south = ((row + 1) % h) * w + col;
    let east = row * w + (col + 1) % w;
    let west = row * w + (col + w - 1) % w;
    [index, north, south, east, west]
}
