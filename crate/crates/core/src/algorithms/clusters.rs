//! RRH serving clusters read off sparse beamformers.

use serde::{Deserialize, Serialize};

use crate::ran::BeamformerSet;

/// Default cluster threshold as a fraction of the RRH power limit.
pub const DEFAULT_CLUSTER_THRESHOLD: f64 = 1e-6;

/// Serving sets C_i as a membership mask indexed i * L + j.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RrhClusters {
    num_rrh: usize,
    serving: Vec<bool>,
}

impl RrhClusters {
    /// Every RRH serves every UE.
    pub fn full(num_ue: usize, num_rrh: usize) -> Self {
        RrhClusters {
            num_rrh,
            serving: vec![true; num_ue * num_rrh],
        }
    }

    pub fn num_ue(&self) -> usize {
        self.serving.len() / self.num_rrh.max(1)
    }

    pub fn num_rrh(&self) -> usize {
        self.num_rrh
    }

    pub fn serves(&self, i: usize, j: usize) -> bool {
        self.serving[i * self.num_rrh + j]
    }

    pub fn serving_set(&self, i: usize) -> &[bool] {
        &self.serving[i * self.num_rrh..(i + 1) * self.num_rrh]
    }

    pub fn size(&self, i: usize) -> usize {
        self.serving_set(i).iter().filter(|&&s| s).count()
    }

    /// Mask over all (i, j) blocks, suitable as a solver support.
    pub fn mask(&self) -> &[bool] {
        &self.serving
    }

    /// Mean |C_i| over the UEs selected by `include`.
    pub fn mean_size(&self, include: impl Fn(usize) -> bool) -> f64 {
        let ues: Vec<usize> = (0..self.num_ue()).filter(|&i| include(i)).collect();
        if ues.is_empty() {
            return 0.0;
        }
        ues.iter().map(|&i| self.size(i)).sum::<usize>() as f64 / ues.len() as f64
    }
}

/// j ∈ C_i iff ‖v_ij‖² > threshold · P_j. Blocks outside the clusters are
/// zeroed in the returned beamformers.
pub fn extract_rrh_clusters(
    bf: &BeamformerSet,
    power_limits: &[f64],
    threshold: f64,
) -> (RrhClusters, BeamformerSet) {
    let (n, l) = (bf.num_ue(), bf.num_rrh());
    let mut out = bf.clone();
    let mut serving = vec![false; n * l];
    for i in 0..n {
        for j in 0..l {
            if bf.block_power(i, j) > threshold * power_limits[j] {
                serving[i * l + j] = true;
            } else {
                out.block_mut(i, j).iter_mut().for_each(|v| *v = 0.0.into());
            }
        }
    }
    (
        RrhClusters {
            num_rrh: l,
            serving,
        },
        out,
    )
}
