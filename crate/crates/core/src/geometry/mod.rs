//! Charts, metric jets, conformal rescaling, embeddings and the library of
//! manifolds and vector fields.
//!
//! Sign and scale conventions: library spheres have radius 1, and the unit
//! normal of a library embedding points outward so that the unit sphere has
//! mean curvature `H = +1`. Other sources may differ from these by a sign or
//! a radius factor.

pub mod chart;
pub mod embedding;
pub mod fields;
pub mod library;
pub mod params;
pub mod revolution;
pub mod vector_fields;

pub use chart::{Chart, ChartKind, Face, MetricJet, MetricProvider, Reduction, MAX_METRIC_ORDER};
pub use embedding::{embed_induced, library_embedding, EmbeddingSpec, InducedGeometry};
pub use fields::{AnalyticScalar, Bump, FieldKind, ScalarField, SymTensorField, VectorField, VectorFieldSpec};
pub use library::{build_manifold, conformal_rescale, OmegaSpec};
pub use params::{Param, Params};
pub use revolution::{conformal_immersion_revolution, ConformalImmersion, Profile};
pub use vector_fields::build_vector_field;

use crate::jet::Jet;

/// Sample points drawn uniformly from the chart's integration region,
/// shrunk by `margin` (a fraction of each side) away from its faces.
pub fn sample_points(chart: &Chart, count: usize, margin: f64, seed: u64) -> Vec<Vec<f64>> {
    use rand::{RngExt, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            chart
                .region
                .iter()
                .map(|&(lo, hi)| {
                    let pad = margin * (hi - lo);
                    rng.random_range(lo + pad..hi - pad)
                })
                .collect()
        })
        .collect()
}

/// Coordinate jets `x_k` at `p` truncated at `order`.
pub fn coordinates(p: &[f64], order: usize) -> Vec<Jet> {
    Jet::variables(p, order)
}
