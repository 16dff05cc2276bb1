//! Seeded random conductivity ensembles and test vectors.
//!
//! Sample `i` draws from its own ChaCha stream, so any sample can be
//! regenerated alone and parallel generation is reproducible.

use crate::conductivity::ConductivityField;
use crate::error::{Error, Result};
use crate::mesh::DiskMesh;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Largest ensemble the harness accepts.
pub const MAX_ENSEMBLE: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnsembleRule {
    /// `σ = exp(c + h·tanh(Σ a_i exp(-|x - x_i|²/w²)))`, which stays strictly
    /// inside the bounds.
    SmoothBumps { bumps: usize, width: f64 },
    /// Up to `max_inclusions` disks in a constant background, each at
    /// `background·contrast` or `background/contrast`, clamped to the bounds.
    Inclusions {
        max_inclusions: usize,
        contrast: f64,
        background: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConductivityEnsemble {
    pub seed: u64,
    pub count: usize,
    pub rule: EnsembleRule,
    pub lower: f64,
    pub upper: f64,
    /// Every `constant_every`-th sample (starting with the first) is a
    /// constant; 0 disables constants.
    pub constant_every: usize,
}

pub fn sample_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// A uniformly random point of the disk of radius `r`.
fn point_in_disk(rng: &mut ChaCha8Rng, r: f64) -> [f64; 2] {
    let rho = r * rng.random::<f64>().sqrt();
    let phi = std::f64::consts::TAU * rng.random::<f64>();
    [rho * phi.cos(), rho * phi.sin()]
}

impl ConductivityEnsemble {
    pub fn new(seed: u64, count: usize, rule: EnsembleRule, lower: f64, upper: f64) -> Result<Self> {
        let e = ConductivityEnsemble {
            seed,
            count,
            rule,
            lower,
            upper,
            constant_every: 0,
        };
        e.validate()?;
        Ok(e)
    }

    pub fn with_constants(mut self, every: usize) -> Self {
        self.constant_every = every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lower > 0.0 && self.lower <= self.upper && self.upper.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "ensemble bounds [{}, {}] must satisfy 0 < lower <= upper < inf",
                self.lower, self.upper
            )));
        }
        if self.count == 0 || self.count > MAX_ENSEMBLE {
            return Err(Error::InvalidInput(format!(
                "ensemble size {} outside 1..={MAX_ENSEMBLE}",
                self.count
            )));
        }
        match self.rule {
            EnsembleRule::SmoothBumps { bumps, width } if bumps == 0 || !(width > 0.0) => Err(Error::InvalidInput(
                "smooth ensembles need at least one bump of positive width".into(),
            )),
            EnsembleRule::Inclusions {
                max_inclusions,
                contrast,
                background,
            } if max_inclusions == 0 || !(contrast >= 1.0) || !(background >= self.lower && background <= self.upper) => {
                Err(Error::InvalidInput(
                    "inclusion ensembles need inclusions, contrast >= 1 and an admissible background".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    /// Radius of the origin-centred `L^∞` ball containing every `log σ`.
    pub fn log_radius(&self) -> f64 {
        self.lower.ln().abs().max(self.upper.ln().abs())
    }

    /// The `index`-th conductivity.
    pub fn sample(&self, mesh: &DiskMesh<f64>, index: usize) -> ConductivityField<f64> {
        let mut rng = sample_rng(self.seed, index as u64);
        let (lo, hi) = (self.lower.ln(), self.upper.ln());
        if self.constant_every > 0 && index.is_multiple_of(self.constant_every) {
            let k = lo + (hi - lo) * rng.random::<f64>();
            return ConductivityField::constant(mesh, k.exp().clamp(self.lower, self.upper));
        }
        match self.rule {
            EnsembleRule::SmoothBumps { bumps, width } => {
                let centers: Vec<([f64; 2], f64)> = (0..bumps)
                    .map(|_| (point_in_disk(&mut rng, 0.8), rng.random_range(-2.0..2.0)))
                    .collect();
                let (c, h) = ((lo + hi) / 2.0, (hi - lo) / 2.0);
                ConductivityField::from_fn(mesh, |x, y| {
                    let s: f64 = centers
                        .iter()
                        .map(|(p, a)| a * (-((x - p[0]).powi(2) + (y - p[1]).powi(2)) / (width * width)).exp())
                        .sum();
                    (c + h * s.tanh()).exp().clamp(self.lower, self.upper)
                })
            }
            EnsembleRule::Inclusions {
                max_inclusions,
                contrast,
                background,
            } => {
                let n = rng.random_range(1..=max_inclusions);
                let disks: Vec<([f64; 2], f64, f64)> = (0..n)
                    .map(|_| {
                        let radius = rng.random_range(0.1..0.3);
                        let center = point_in_disk(&mut rng, 0.9 - radius);
                        let value = if rng.random::<bool>() {
                            background * contrast
                        } else {
                            background / contrast
                        };
                        (center, radius, value.clamp(self.lower, self.upper))
                    })
                    .collect();
                ConductivityField::from_fn(mesh, |x, y| {
                    disks
                        .iter()
                        .rev()
                        .find(|(p, r, _)| (x - p[0]).powi(2) + (y - p[1]).powi(2) < r * r)
                        .map_or(background, |d| d.2)
                })
            }
        }
    }

    pub fn generate(&self, mesh: &DiskMesh<f64>) -> Vec<ConductivityField<f64>> {
        (0..self.count).into_par_iter().map(|i| self.sample(mesh, i)).collect()
    }

    /// `(σ₁, σ₂)` with `σ₁ ≤ σ₂`: `σ₂` adds a nonnegative bump to a sample,
    /// clamped to the upper bound.
    pub fn monotone_pair(
        &self,
        mesh: &DiskMesh<f64>,
        index: usize,
    ) -> (ConductivityField<f64>, ConductivityField<f64>) {
        let s1 = self.sample(mesh, index);
        let mut rng = sample_rng(self.seed ^ 0x6d6f_6e6f_746f_6e65, index as u64);
        let p = point_in_disk(&mut rng, 0.7);
        let amp = rng.random_range(0.2..1.0);
        let w = rng.random_range(0.2..0.5);
        let bump = ConductivityField::from_fn(mesh, |x, y| {
            amp * (-((x - p[0]).powi(2) + (y - p[1]).powi(2)) / (w * w)).exp()
        });
        let upper = self.upper;
        let s2 = s1
            .zip_with(&bump, |a, b| (a + b).min(upper).max(a))
            .expect("fields share the mesh");
        (s1, s2)
    }
}

/// `count` columns of length `dim` with entries uniform in `[-1, 1]`.
pub fn random_vectors(dim: usize, count: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = sample_rng(seed, u64::MAX);
    DMatrix::from_fn(dim, count, |_, _| rng.random_range(-1.0..1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_disk_mesh;

    fn mesh() -> DiskMesh<f64> {
        build_disk_mesh(2).unwrap()
    }

    #[test]
    fn bounds_and_determinism() {
        let m = mesh();
        for rule in [
            EnsembleRule::SmoothBumps { bumps: 3, width: 0.4 },
            EnsembleRule::Inclusions {
                max_inclusions: 3,
                contrast: 4.0,
                background: 1.0,
            },
        ] {
            let e = ConductivityEnsemble::new(7, 12, rule, 0.5, 2.0).unwrap().with_constants(4);
            let a = e.generate(&m);
            assert_eq!(a, e.generate(&m));
            assert_eq!(a[5], e.sample(&m, 5));
            for (i, s) in a.iter().enumerate() {
                assert!(s.min() >= 0.5 && s.max() <= 2.0);
                assert_eq!(s.min() == s.max(), i % 4 == 0, "sample {i}");
            }
            let other = ConductivityEnsemble { seed: 8, ..e.clone() };
            assert_ne!(a[1], other.sample(&m, 1));
        }
    }

    #[test]
    fn monotone_pairs_are_ordered() {
        let m = mesh();
        let e = ConductivityEnsemble::new(1, 5, EnsembleRule::SmoothBumps { bumps: 2, width: 0.5 }, 0.5, 2.0).unwrap();
        for i in 0..5 {
            let (a, b) = e.monotone_pair(&m, i);
            assert!(a.dominated_by(&b));
            assert!(b.max() <= 2.0);
            assert_ne!(a, b);
        }
    }

    #[test]
    fn validation() {
        let smooth = EnsembleRule::SmoothBumps { bumps: 1, width: 0.3 };
        assert!(ConductivityEnsemble::new(0, 0, smooth.clone(), 0.5, 2.0).is_err());
        assert!(ConductivityEnsemble::new(0, 201, smooth.clone(), 0.5, 2.0).is_err());
        assert!(ConductivityEnsemble::new(0, 3, smooth, 2.0, 0.5).is_err());
        let inc = EnsembleRule::Inclusions {
            max_inclusions: 2,
            contrast: 2.0,
            background: 3.0,
        };
        assert!(ConductivityEnsemble::new(0, 3, inc, 0.5, 2.0).is_err());
    }
}
