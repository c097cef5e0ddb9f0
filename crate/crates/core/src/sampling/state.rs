use rand::SeedableRng;

use super::problem::{Particle, ProblemSpec, StreamRng};
use super::schedule::BudgetSchedule;
use super::{check_normalizer, rho_from_sums, ParticleMeasure};
use crate::compression::{mmd_omp_with, OmpOptions, DUPLICATE_DISTANCE};
use crate::embedding::Embedding;
use crate::{Error, Kernel, Result};

/// What one call to [`EstimatorState::step`] did.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub n: usize,
    pub epsilon: f64,
    pub achieved_mmd: f64,
    pub model_order: usize,
    pub cumulative_budget: f64,
    pub jitter: f64,
}

/// Per-step histories, index `n - 1` for step `n`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub model_order: Vec<usize>,
    pub epsilon: Vec<f64>,
    pub achieved_mmd: Vec<f64>,
    pub cumulative_budget: Vec<f64>,
    pub max_jitter: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct WeightSums {
    sum: f64,
    sum_sq: f64,
    sum_phi: f64,
}

/// Streaming importance-sampling state.
///
/// Without a budget schedule every particle is kept (uncompressed SNIS);
/// with one, the embedding is pruned by MMD-OMP after every `batch`
/// particles. The embedding's atoms and coefficients are the particle
/// measure.
#[derive(Debug, Clone)]
pub struct EstimatorState {
    kernel: Kernel,
    schedule: Option<BudgetSchedule>,
    options: OmpOptions,
    batch: usize,
    seed: u64,
    rng: StreamRng,
    step: usize,
    embedding: Embedding,
    /// `φ(d_u)` for each retained atom, aligned with the embedding
    phi_values: Vec<f64>,
    history: WeightSums,
    diagnostics: Diagnostics,
}

impl EstimatorState {
    pub fn uncompressed(kernel: Kernel, seed: u64) -> Self {
        Self::build(kernel, None, seed)
    }

    pub fn compressed(kernel: Kernel, schedule: BudgetSchedule, seed: u64) -> Self {
        Self::build(kernel, Some(schedule), seed)
    }

    fn build(kernel: Kernel, schedule: Option<BudgetSchedule>, seed: u64) -> Self {
        EstimatorState {
            kernel,
            schedule,
            options: OmpOptions::default(),
            batch: 1,
            seed,
            rng: StreamRng::seed_from_u64(seed),
            step: 0,
            embedding: Embedding::empty(kernel),
            phi_values: Vec::new(),
            history: WeightSums::default(),
            diagnostics: Diagnostics::default(),
        }
    }

    /// Compress only after every `batch`-th particle.
    pub fn with_batch(mut self, batch: usize) -> Result<Self> {
        if batch == 0 {
            return Err(Error::InvalidArgument("batch must be at least 1".into()));
        }
        self.batch = batch;
        Ok(self)
    }

    pub fn with_options(mut self, options: OmpOptions) -> Self {
        self.options = options;
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn schedule(&self) -> Option<&BudgetSchedule> {
        self.schedule.as_ref()
    }

    pub fn is_compressed(&self) -> bool {
        self.schedule.is_some()
    }

    pub fn steps(&self) -> usize {
        self.step
    }

    pub fn model_order(&self) -> usize {
        self.embedding.model_order()
    }

    pub fn embedding(&self) -> &Embedding {
        &self.embedding
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    /// The Dirac measure carried by the embedding.
    pub fn measure(&self) -> ParticleMeasure {
        let normalizer = if self.is_compressed() {
            self.embedding.coeff_sum()
        } else {
            self.history.sum
        };
        ParticleMeasure::from_parts(
            self.embedding.atoms().to_vec(),
            self.embedding.coeffs().to_vec(),
            normalizer,
        )
    }

    /// Draws one particle from the state's own generator and absorbs it.
    pub fn step(&mut self, spec: &ProblemSpec) -> Result<StepRecord> {
        let particle = spec.draw(&mut self.rng)?;
        self.absorb(particle)
    }

    /// Absorbs an externally drawn particle (paired streams share draws).
    pub fn absorb(&mut self, particle: Particle) -> Result<StepRecord> {
        let Particle { point, weight, phi } = particle;
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::InvalidArgument(format!("invalid weight {weight}")));
        }
        self.embedding.push(point, weight)?;
        self.phi_values.push(phi);
        self.step += 1;
        self.history.sum += weight;
        self.history.sum_sq += weight * weight;
        self.history.sum_phi += weight * phi;

        let n = self.step;
        let (epsilon, cumulative) = match self.schedule {
            Some(s) => (s.epsilon(n), s.cumulative(n)),
            None => (0.0, 0.0),
        };
        let mut achieved = 0.0;
        let mut jitter = 0.0;
        if self.schedule.is_some() && n.is_multiple_of(self.batch) {
            let fresh = self.batch.min(self.embedding.model_order());
            if epsilon == 0.0 {
                self.merge_fresh_duplicates(fresh);
            } else {
                let (compressed, report) = mmd_omp_with(&self.embedding, epsilon, self.options)?;
                let mut removed = vec![false; self.embedding.model_order()];
                for &i in &report.removed_indices {
                    removed[i] = true;
                }
                let mut idx = 0;
                self.phi_values.retain(|_| {
                    let keep = !removed[idx];
                    idx += 1;
                    keep
                });
                self.embedding = compressed;
                achieved = report.achieved_mmd;
                jitter = report.jitter_used;
            }
        }

        let record = StepRecord {
            n,
            epsilon,
            achieved_mmd: achieved,
            model_order: self.embedding.model_order(),
            cumulative_budget: cumulative,
            jitter,
        };
        let d = &mut self.diagnostics;
        d.model_order.push(record.model_order);
        d.epsilon.push(epsilon);
        d.achieved_mmd.push(achieved);
        d.cumulative_budget.push(cumulative);
        d.max_jitter = d.max_jitter.max(jitter);
        Ok(record)
    }

    /// Zero-budget compression: only exact duplicates of the newest atoms are
    /// folded into their first occurrence. Same result as `mmd_omp(β̃, 0)`
    /// without its O(M log M) scan of the whole dictionary.
    fn merge_fresh_duplicates(&mut self, fresh: usize) {
        let m = self.embedding.model_order();
        let mut target: Vec<Option<usize>> = vec![None; m];
        let atoms = self.embedding.atoms();
        for j in (m - fresh)..m {
            let lead = atoms[j][0];
            target[j] = (0..j).find(|&i| {
                (atoms[i][0] - lead).abs() < DUPLICATE_DISTANCE && target[i].is_none() && {
                    let sq: f64 = atoms[i]
                        .iter()
                        .zip(&atoms[j])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    sq.sqrt() < DUPLICATE_DISTANCE
                }
            });
        }
        if target.iter().all(Option::is_none) {
            return;
        }
        let kernel = *self.embedding.kernel();
        let (atoms, mut coeffs) = std::mem::replace(&mut self.embedding, Embedding::empty(kernel))
            .into_parts();
        for (j, t) in target.iter().enumerate() {
            if let Some(i) = *t {
                coeffs[i] += coeffs[j];
            }
        }
        let keep = |j: &usize| target[*j].is_none();
        let kept_atoms = atoms
            .into_iter()
            .enumerate()
            .filter(|(j, _)| keep(j))
            .map(|(_, a)| a)
            .collect();
        let kept_coeffs = coeffs
            .into_iter()
            .enumerate()
            .filter(|(j, _)| keep(j))
            .map(|(_, c)| c)
            .collect();
        let mut idx = 0;
        self.phi_values.retain(|_| {
            let k = target[idx].is_none();
            idx += 1;
            k
        });
        self.embedding = Embedding::from_parts_unchecked(kernel, kept_atoms, kept_coeffs);
    }

    /// Self-normalized estimate of `E_q[φ]` over the current atoms.
    pub fn estimate<F>(&self, phi: F) -> Result<f64>
    where
        F: Fn(&[f64]) -> f64,
    {
        self.measure().estimate(phi)
    }

    /// [`estimate`](Self::estimate) for the problem's own test function,
    /// using the `φ` values cached at draw time.
    pub fn current_estimate(&self) -> Result<f64> {
        let (weighted, sum) = if self.is_compressed() {
            let coeffs = self.embedding.coeffs();
            let weighted: f64 = coeffs.iter().zip(&self.phi_values).map(|(g, p)| g * p).sum();
            (weighted, coeffs.iter().sum::<f64>())
        } else {
            (self.history.sum_phi, self.history.sum)
        };
        check_normalizer(sum)?;
        Ok(weighted / sum)
    }

    /// `Ẑ = (1/n) Σ g`: historical weights when uncompressed, current
    /// coefficients when compressed.
    pub fn estimate_normalizer(&self) -> Result<f64> {
        if self.step == 0 {
            return Err(Error::InvalidArgument("no particles drawn yet".into()));
        }
        let sum = if self.is_compressed() {
            self.embedding.coeff_sum()
        } else {
            self.history.sum
        };
        Ok(sum / self.step as f64)
    }

    /// Historical `Σ g` over every particle drawn so far.
    pub fn historical_weight_sum(&self) -> f64 {
        self.history.sum
    }

    /// `n Σg² / (Σg)²` over every particle drawn so far.
    pub fn rho_hat(&self) -> Result<f64> {
        rho_from_sums(self.step, self.history.sum, self.history.sum_sq)
    }
}
