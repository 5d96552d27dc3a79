//! Halfspace timing over fresh random sample sets.

use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ConvexShape;
use crate::halfspace::{compute_halfspace_timed, normal_from_positions};
use crate::program::{build_drcvar_program, DrcvarProblem, SolveStatus};
use crate::risk::{RiskSpec, Support, SupportPolytope};
use crate::stats::{summarize, Summary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchVariant {
    /// Sorted-sample CVaR.
    Cvar,
    /// DR-CVaR over an unbounded support in closed form.
    Drcvar,
    /// CVaR as a linear program (the conic program with zero radius and no
    /// support constraints).
    CvarProgram,
    /// DR-CVaR conic program with a box support around the samples.
    DrcvarProgram,
}

impl BenchVariant {
    pub const ALL: [BenchVariant; 4] = [
        BenchVariant::Cvar,
        BenchVariant::Drcvar,
        BenchVariant::CvarProgram,
        BenchVariant::DrcvarProgram,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BenchVariant::Cvar => "cvar",
            BenchVariant::Drcvar => "drcvar",
            BenchVariant::CvarProgram => "cvar_program",
            BenchVariant::DrcvarProgram => "drcvar_program",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub variant: BenchVariant,
    pub samples: usize,
    pub build_ms: Summary,
    pub solve_ms: Summary,
    pub total_ms: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub sample_counts: Vec<usize>,
    pub repetitions: usize,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn row(&self, variant: BenchVariant, samples: usize) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.variant == variant && r.samples == samples)
    }
}

const NOMINAL: [f64; 2] = [0.5, 0.0];
const EGO: [f64; 2] = [-0.9, -0.8];

fn draw_samples(count: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            NOMINAL
                .iter()
                .map(|c| {
                    let z: f64 = rng.sample(StandardNormal);
                    c + 0.1 * z
                })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Times {
    build: f64,
    solve: f64,
    total: f64,
}

fn time_variant(variant: BenchVariant, samples: &[Vec<f64>], h: &[f64]) -> Result<Times> {
    let disk = ConvexShape::Disk { radius: 0.3 };
    let spec = RiskSpec::drcvar(0.2, 0.1, 0.05);
    let ms = |d: std::time::Duration| d.as_secs_f64() * 1e3;
    match variant {
        BenchVariant::Cvar | BenchVariant::Drcvar => {
            let spec = if variant == BenchVariant::Cvar {
                RiskSpec::cvar(0.2, 0.1)
            } else {
                spec
            };
            let (_, timing) = compute_halfspace_timed(samples, h, &spec, &disk, &disk)?;
            Ok(Times {
                build: 0.0,
                solve: ms(timing.total),
                total: ms(timing.total),
            })
        }
        BenchVariant::DrcvarProgram => {
            let support = Support::Polytope(SupportPolytope::square(-1.5, 1.5));
            let spec = spec.with_support(support);
            let (_, timing) = compute_halfspace_timed(samples, h, &spec, &disk, &disk)?;
            Ok(Times {
                build: ms(timing.build),
                solve: ms(timing.solve),
                total: ms(timing.total),
            })
        }
        BenchVariant::CvarProgram => {
            let start = Instant::now();
            let program = build_drcvar_program(&DrcvarProblem {
                samples,
                h,
                alpha: 0.2,
                delta: 0.1,
                epsilon: 0.0,
                support: &Support::Unbounded,
                inflation: 0.6,
                ground_norm: Default::default(),
            })?;
            let build = start.elapsed();
            let solve_start = Instant::now();
            let solution = program.solve();
            let solve = solve_start.elapsed();
            if solution.status != SolveStatus::Optimal {
                return Err(Error::Solver(solution.status));
            }
            let _g = solution.primal[program.block("g").expect("g is always named").start];
            Ok(Times {
                build: ms(build),
                solve: ms(solve),
                total: ms(start.elapsed()),
            })
        }
    }
}

/// Times each variant on `repetitions` fresh sample sets per count. The
/// sample sets are shared across variants so they see identical inputs.
pub fn bench_halfspace(
    sample_counts: &[usize],
    repetitions: usize,
    variants: &[BenchVariant],
    rng: &mut impl Rng,
) -> Result<BenchReport> {
    if repetitions == 0 {
        return Err(Error::InvalidParameter("repetitions must be at least 1".into()));
    }
    if sample_counts.contains(&0) {
        return Err(Error::InvalidParameter("sample counts must be positive".into()));
    }
    let mut rows = Vec::new();
    for &count in sample_counts {
        let mut times: Vec<Vec<Times>> = vec![Vec::with_capacity(repetitions); variants.len()];
        for _ in 0..repetitions {
            let samples = draw_samples(count, rng);
            let h = normal_from_positions(&crate::vector::mean(&samples), &EGO, None);
            for (slot, &variant) in times.iter_mut().zip(variants) {
                slot.push(time_variant(variant, &samples, &h)?);
            }
        }
        for (variant, runs) in variants.iter().zip(times) {
            let pick = |f: fn(&Times) -> f64| {
                summarize(&runs.iter().map(f).collect::<Vec<_>>()).expect("repetitions >= 1")
            };
            rows.push(BenchRow {
                variant: *variant,
                samples: count,
                build_ms: pick(|t| t.build),
                solve_ms: pick(|t| t.solve),
                total_ms: pick(|t| t.total),
            });
        }
    }
    Ok(BenchReport {
        sample_counts: sample_counts.to_vec(),
        repetitions,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn one_row_per_count_and_variant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let report = bench_halfspace(&[5, 20], 1, &BenchVariant::ALL, &mut rng).unwrap();
        assert_eq!(report.rows.len(), 8);
        for row in &report.rows {
            assert_eq!(row.total_ms.count, 1);
            assert!(row.total_ms.min >= 0.0 && row.build_ms.min >= 0.0);
        }
        assert!(report.row(BenchVariant::DrcvarProgram, 20).is_some());
    }

    #[test]
    fn rejects_zero_repetitions() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!(bench_halfspace(&[5], 0, &BenchVariant::ALL, &mut rng).is_err());
    }
}
