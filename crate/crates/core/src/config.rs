use crate::resistance::ResistanceOptions;
use serde::{Deserialize, Serialize};

pub fn log2_ceil(x: usize) -> usize {
    if x <= 1 {
        0
    } else {
        (usize::BITS - (x - 1).leading_zeros()) as usize
    }
}

/// ⌈log₂ max(x, 2)⌉, never zero.
pub fn lg(x: usize) -> usize {
    log2_ceil(x.max(2))
}

/// Constants of the static, spanner, online and dynamic pipelines.
///
/// With `polylog` off (the default) the round count is
/// `c_rounds · r · ⌈log₂n⌉`, the oversampling rate is `c_lambda / ε'²`, and
/// the bundle size is `c_bundle · t / ε'²`. With `polylog` on, the extra
/// `⌈log₂m⌉` factors of the asymptotic statements are applied.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsifyConfig {
    pub c_rounds: f64,
    /// Round constant of the spanner-based pipelines (static spanner engine,
    /// online, dynamic), which recover more per round than resistance sampling.
    pub c_rounds_spanner: f64,
    pub c_lambda: f64,
    pub c_bundle: f64,
    pub bundle_cap: usize,
    pub eps_split: bool,
    pub polylog: bool,
    /// Level budget; `None` means ⌈log₂m⌉ + 10.
    pub max_levels: Option<usize>,
    /// Inner recursion depth of the spanner engine; `None` means ⌈log₂m⌉.
    pub inner_levels: Option<usize>,
    /// Overrides the spanner stretch threshold.
    pub stretch: Option<usize>,
    /// Overrides the vertex-sampling rate.
    pub p_override: Option<f64>,
    /// The sampling rate is raised so that about this many vertices are
    /// sampled per round on small vertex sets.
    pub min_round_vertices: f64,
    pub resistance: ResistanceOptions,
    pub seed: u64,
}

impl Default for SparsifyConfig {
    fn default() -> Self {
        SparsifyConfig {
            c_rounds: 1.0,
            c_rounds_spanner: 0.35,
            c_lambda: 0.07,
            c_bundle: 0.1,
            bundle_cap: 4096,
            eps_split: false,
            polylog: false,
            max_levels: None,
            inner_levels: None,
            stretch: None,
            p_override: None,
            min_round_vertices: 8.0,
            resistance: ResistanceOptions::default(),
            seed: 0,
        }
    }
}

impl SparsifyConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// max(1/r, min_round_vertices/n), capped at 1.
    pub fn sample_rate(&self, r: usize, n: usize) -> f64 {
        self.p_override
            .unwrap_or_else(|| (1.0 / r.max(1) as f64).max(self.min_round_vertices / n.max(1) as f64))
            .min(1.0)
    }

    pub fn rounds(&self, r: usize, n: usize, m: usize) -> usize {
        self.rounds_with(self.c_rounds, r, n, m)
    }

    pub fn spanner_rounds(&self, r: usize, n: usize, m: usize) -> usize {
        self.rounds_with(self.c_rounds_spanner, r, n, m)
    }

    fn rounds_with(&self, c: f64, r: usize, n: usize, m: usize) -> usize {
        let mut x = c * r as f64 * lg(n) as f64;
        if self.polylog {
            x *= lg(m) as f64;
        }
        (x.ceil() as usize).max(1)
    }

    pub fn lambda(&self, eps: f64, n: usize, m: usize) -> f64 {
        let mut x = self.c_lambda / (eps * eps);
        if self.polylog {
            x *= (lg(n) * lg(m) * lg(m)) as f64;
        }
        x
    }

    pub fn levels(&self, m: usize) -> usize {
        self.max_levels.unwrap_or(lg(m) + 10)
    }

    pub fn inner_levels(&self, m: usize) -> usize {
        self.inner_levels.unwrap_or(lg(m))
    }

    /// t = ⌈log₂ n'⌉ with minimum 2, on the projected vertex count.
    pub fn stretch_for(&self, n_projected: usize) -> usize {
        self.stretch.unwrap_or(lg(n_projected).max(2))
    }

    pub fn bundle_size(&self, t: usize, eps: f64, n: usize, m: usize) -> usize {
        let mut x = self.c_bundle * t as f64 / (eps * eps);
        if self.polylog {
            x = self.c_bundle * (lg(n) * lg(n) * lg(m) * lg(m)) as f64 / (eps * eps);
        }
        (x.ceil() as usize).clamp(1, self.bundle_cap.max(1))
    }
}
