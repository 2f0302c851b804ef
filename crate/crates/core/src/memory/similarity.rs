use super::{MemoryError, MemoryParams, TopoNode};
use crate::retrieval::embed::{dot, normalize};

/// Spatial proximity term: `exp(-d / delta_spatial)`.
pub fn spatial_affinity(distance: f64, delta_spatial: f64) -> f64 {
    (-distance / delta_spatial).exp()
}

/// Hybrid similarity of two nodes: a convex combination of spatial
/// proximity and embedding agreement, with cosine mapped into [0, 1].
/// Symmetric and bounded in [0, 1].
pub fn pairwise_similarity(a: &TopoNode, b: &TopoNode, params: &MemoryParams) -> f64 {
    let phi = spatial_affinity(a.position.distance(&b.position), params.delta_spatial);
    let cos = dot(&a.embedding, &b.embedding).clamp(-1.0, 1.0);
    let psi = 0.5 * (1.0 + cos);
    (params.omega * phi + (1.0 - params.omega) * psi).clamp(0.0, 1.0)
}

/// Weighted sum of the normalized spatial and semantic features, the
/// shorter one zero-padded, renormalized to unit length.
pub fn fuse_features(node: &TopoNode, params: &MemoryParams) -> Result<Vec<f64>, MemoryError> {
    let mut spa = node.spatial_feature.clone();
    let mut sem = node.embedding.clone();
    if normalize(&mut spa).is_none() || normalize(&mut sem).is_none() {
        return Err(MemoryError::ZeroVector(node.id));
    }
    let len = spa.len().max(sem.len());
    let mut out = vec![0.0; len];
    for (o, s) in out.iter_mut().zip(&spa) {
        *o += params.alpha * s;
    }
    for (o, s) in out.iter_mut().zip(&sem) {
        *o += (1.0 - params.alpha) * s;
    }
    normalize(&mut out).ok_or(MemoryError::ZeroVector(node.id))?;
    Ok(out)
}
