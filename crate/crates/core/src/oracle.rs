//! Ground-truth latent structure used to score neighbor rankings.

use alloc::vec::Vec;

/// Squared length of the direction vector (4, 6, 9) of the linear benchmark.
const LINE_DIR_SQ: f64 = 16.0 + 36.0 + 81.0;

/// Exact latent geodesic structure for a dataset.
///
/// Continuous variants carry per-point latent parameters and a closed-form
/// arc-length distance on them; `Components` partitions the points into
/// disconnected clusters where every member of a component is a neighbor
/// and no point outside it is.
#[derive(Debug, Clone, PartialEq)]
pub enum GeodesicOracle {
    /// Segment (4t, 6t, 9t): distance is `|ti - tj| * sqrt(133)`.
    Line { t: Vec<f64> },
    /// Helix (t cos t, t sin t, t): arc length of the speed `sqrt(2 + t^2)`.
    Helix { t: Vec<f64> },
    /// Sphere of the given radius; points indexed by angles (u, v).
    Sphere { radius: f64, uv: Vec<[f64; 2]> },
    /// Euclidean distance on arbitrary latent coordinates (row-major,
    /// `dim` values per point). Used when ingesting external datasets.
    LatentL2 { dim: usize, params: Vec<f64> },
    /// Disconnected components identified by integer label.
    Components { labels: Vec<u32> },
}

/// Antiderivative of `sqrt(t^2 + 2)`, the helix speed:
/// `F(t) = (t/2) sqrt(t^2 + 2) + ln(t + sqrt(t^2 + 2))`.
pub fn helix_arc_length(t: f64) -> f64 {
    let r = libm::sqrt(t * t + 2.0);
    0.5 * t * r + libm::log(t + r)
}

fn sphere_point(u: f64, v: f64) -> [f64; 3] {
    [
        libm::cos(u) * libm::sin(v),
        libm::sin(u) * libm::sin(v),
        libm::cos(v),
    ]
}

impl GeodesicOracle {
    /// Number of points the oracle covers.
    pub fn len(&self) -> usize {
        match self {
            GeodesicOracle::Line { t } | GeodesicOracle::Helix { t } => t.len(),
            GeodesicOracle::Sphere { uv, .. } => uv.len(),
            GeodesicOracle::LatentL2 { dim, params } => params.len() / (*dim).max(1),
            GeodesicOracle::Components { labels } => labels.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, GeodesicOracle::Components { .. })
    }

    /// Latent geodesic distance between points `i` and `j`.
    ///
    /// `None` for the disconnected (component) oracle, which has no finite
    /// cross-component distance.
    pub fn distance(&self, i: usize, j: usize) -> Option<f64> {
        match self {
            GeodesicOracle::Line { t } => Some(libm::fabs(t[i] - t[j]) * libm::sqrt(LINE_DIR_SQ)),
            GeodesicOracle::Helix { t } => {
                Some(libm::fabs(helix_arc_length(t[j]) - helix_arc_length(t[i])))
            }
            GeodesicOracle::Sphere { radius, uv } => {
                if uv[i] == uv[j] {
                    // Exact zero for identical latent parameters; the dot
                    // product of a unit vector with itself can round below 1.
                    return Some(0.0);
                }
                let a = sphere_point(uv[i][0], uv[i][1]);
                let b = sphere_point(uv[j][0], uv[j][1]);
                let mut dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
                dot = dot.clamp(-1.0, 1.0);
                Some(radius * libm::acos(dot))
            }
            GeodesicOracle::LatentL2 { dim, params } => {
                let (a, b) = (&params[i * dim..(i + 1) * dim], &params[j * dim..(j + 1) * dim]);
                let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                Some(libm::sqrt(sq))
            }
            GeodesicOracle::Components { .. } => None,
        }
    }

    /// Component labels, for the disconnected oracle.
    pub fn labels(&self) -> Option<&[u32]> {
        match self {
            GeodesicOracle::Components { labels } => Some(labels),
            _ => None,
        }
    }

    /// Whether `i` and `j` are latent neighbors in the disconnected sense.
    pub fn same_component(&self, i: usize, j: usize) -> Option<bool> {
        self.labels().map(|l| l[i] == l[j])
    }
}
