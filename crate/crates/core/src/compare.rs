//! Side-by-side halfspaces of one sampled obstacle against a fixed ego point.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ConvexShape;
use crate::halfspace::{compute_halfspace, normal_from_positions, SafeHalfspace};
use crate::risk::{RiskKind, RiskSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ComparisonConfig {
    pub ego_reference: Vec<f64>,
    pub obstacle_nominal: Vec<f64>,
    pub ego_radius: f64,
    pub obstacle_radius: f64,
    /// Diagonal of the Gaussian sample covariance.
    pub noise_variance: Vec<f64>,
    pub sample_count: usize,
    pub alpha: f64,
    pub delta: f64,
}

impl Default for ComparisonConfig {
    fn default() -> Self {
        ComparisonConfig {
            ego_reference: vec![-0.9, -0.8],
            obstacle_nominal: vec![0.5, 0.0],
            ego_radius: 0.3,
            obstacle_radius: 0.3,
            noise_variance: vec![0.01, 0.01],
            sample_count: 100,
            alpha: 0.2,
            delta: 0.1,
        }
    }
}

impl ComparisonConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ego_reference.len() != 2 || self.obstacle_nominal.len() != 2 || self.noise_variance.len() != 2 {
            return Err(Error::InvalidParameter("comparison vectors must be 2-dimensional".into()));
        }
        if self.sample_count == 0 {
            return Err(Error::EmptySamples);
        }
        if self.noise_variance.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidParameter("noise variances must be nonnegative".into()));
        }
        ConvexShape::disk(self.ego_radius)?;
        ConvexShape::disk(self.obstacle_radius)?;
        RiskSpec::cvar(self.alpha, self.delta).validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub metric: RiskKind,
    /// Ambiguity radius; `None` for metrics without one.
    pub epsilon: Option<f64>,
    pub halfspace: SafeHalfspace,
    /// `h·y + g*` at the ego reference; nonpositive means satisfied.
    pub ego_residual: f64,
}

impl ComparisonRow {
    pub fn ego_safe(&self) -> bool {
        self.ego_residual <= 0.0
    }

    pub fn label(&self) -> String {
        match self.epsilon {
            Some(eps) => format!("{}(eps={eps})", self.metric),
            None => self.metric.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfspaceComparison {
    pub config: ComparisonConfig,
    pub samples: Vec<Vec<f64>>,
    pub h: Vec<f64>,
    pub rows: Vec<ComparisonRow>,
}

pub fn sample_obstacle(config: &ComparisonConfig, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..config.sample_count)
        .map(|_| {
            config
                .obstacle_nominal
                .iter()
                .zip(&config.noise_variance)
                .map(|(c, v)| {
                    let z: f64 = rng.sample(StandardNormal);
                    c + v.sqrt() * z
                })
                .collect()
        })
        .collect()
}

/// Draws one sample set and computes a halfspace per metric, with one
/// DR-CVaR row per radius. The normal is taken from the nominal obstacle
/// position, as in the single-step setting.
pub fn compare_halfspaces(
    config: &ComparisonConfig,
    metrics: &[RiskKind],
    epsilons: &[f64],
    rng: &mut impl Rng,
) -> Result<HalfspaceComparison> {
    config.validate()?;
    let samples = sample_obstacle(config, rng);
    let h = normal_from_positions(&config.obstacle_nominal, &config.ego_reference, None);
    let ego = ConvexShape::Disk {
        radius: config.ego_radius,
    };
    let obstacle = ConvexShape::Disk {
        radius: config.obstacle_radius,
    };
    let mut rows = Vec::new();
    let mut push = |spec: RiskSpec, epsilon: Option<f64>| -> Result<()> {
        let halfspace = compute_halfspace(&samples, &h, &spec, &obstacle, &ego)?;
        let ego_residual = halfspace.ego_residual(&config.ego_reference);
        rows.push(ComparisonRow {
            metric: spec.kind,
            epsilon,
            halfspace,
            ego_residual,
        });
        Ok(())
    };
    for &metric in metrics {
        match metric {
            RiskKind::Mean => push(RiskSpec::mean(config.delta), None)?,
            RiskKind::Cvar => push(RiskSpec::cvar(config.alpha, config.delta), None)?,
            RiskKind::DrCvar => {
                for &eps in epsilons {
                    push(RiskSpec::drcvar(config.alpha, config.delta, eps), Some(eps))?;
                }
            }
        }
    }
    Ok(HalfspaceComparison {
        config: config.clone(),
        samples,
        h,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rows_follow_requested_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cmp = compare_halfspaces(
            &ComparisonConfig::default(),
            &RiskKind::ALL,
            &[0.05, 0.1, 0.2],
            &mut rng,
        )
        .unwrap();
        let labels: Vec<String> = cmp.rows.iter().map(ComparisonRow::label).collect();
        assert_eq!(
            labels,
            ["mean", "cvar", "drcvar(eps=0.05)", "drcvar(eps=0.1)", "drcvar(eps=0.2)"]
        );
        assert!((cmp.h[0] - 0.868_243_142).abs() < 1e-8);
        // offsets grow with conservatism
        for pair in cmp.rows.windows(2) {
            assert!(pair[0].halfspace.g_tilde <= pair[1].halfspace.g_tilde);
        }
    }
}
