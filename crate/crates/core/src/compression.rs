//! Destructive MMD-based orthogonal matching pursuit.
//!
//! Atoms are removed greedily from a target embedding while the projection of
//! the target onto the remaining atoms stays within an MMD budget `ε`. After
//! each removal the coefficients are refit by least squares,
//! `g = K_DD⁻¹ K_DT g_T`.
//!
//! Candidate scores `γ_j` are the post-refit residuals
//! `‖T − P_{D∖j} T‖_H`. Two equivalent routes are provided:
//!
//! * [`Scoring::LeaveOneOut`] uses one inverse per sweep and the identity
//!   `γ_j² = ‖T − P_D T‖² + c_j² / (K_DD⁻¹)_jj`, where `c = P_D` coefficients.
//! * [`Scoring::Refit`] solves one reduced least-squares problem per candidate.
//!   The candidates are independent and are evaluated under
//!   [`OmpOptions::execution`].
//!
//! Every accepted removal is re-checked against the budget with a direct MMD
//! evaluation before it is committed.

use nalgebra::{DMatrix, DVector};

use crate::embedding::{mmd, Embedding};
use crate::exec::Execution;
use crate::kernel::PdFactor;
use crate::{Error, Kernel, Point, Result};

/// Atoms closer than this are merged before pruning.
pub const DUPLICATE_DISTANCE: f64 = 1e-12;

/// Absolute slack on the returned `achieved_mmd ≤ ε` contract.
pub const CONTRACT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scoring {
    #[default]
    LeaveOneOut,
    Refit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OmpOptions {
    pub scoring: Scoring,
    pub execution: Execution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressionReport {
    pub initial_order: usize,
    pub final_order: usize,
    /// Indices into the input dictionary, in removal order. Merged duplicates
    /// come first.
    pub removed_indices: Vec<usize>,
    pub achieved_mmd: f64,
    /// Largest diagonal jitter any solve needed.
    pub jitter_used: f64,
}

/// Least-squares coefficients of the projection of `target` onto
/// `span{κ(d, ·) : d ∈ dictionary}`.
pub fn refit(target: &Embedding, dictionary: &[Point]) -> Result<Vec<f64>> {
    refit_with_jitter(target, dictionary).map(|(g, _)| g)
}

pub(crate) fn refit_with_jitter(
    target: &Embedding,
    dictionary: &[Point],
) -> Result<(Vec<f64>, f64)> {
    let kernel = target.kernel();
    let gram = kernel.gram(dictionary)?;
    if target.is_empty() {
        return Ok((vec![0.0; dictionary.len()], 0.0));
    }
    let cross = kernel.cross_gram_unchecked(dictionary, target.atoms());
    let rhs = cross * DVector::from_column_slice(target.coeffs());
    let factor = PdFactor::new(gram.matrix())?;
    Ok((factor.solve_vec(rhs.as_slice()), factor.jitter))
}

/// RKHS distance from `κ(x, ·)` to the span of the dictionary's feature maps.
pub fn subspace_distance(kernel: &Kernel, x: &[f64], dictionary: &[Point]) -> Result<f64> {
    kernel.check_point(x)?;
    let gram = kernel.gram(dictionary)?;
    let k_x: Vec<f64> = dictionary
        .iter()
        .map(|d| kernel.eval_unchecked(d, x))
        .collect();
    let factor = PdFactor::new(gram.matrix())?;
    let alpha = factor.solve_vec(&k_x);
    let explained: f64 = k_x.iter().zip(&alpha).map(|(a, b)| a * b).sum();
    Ok((1.0 - explained).max(0.0).sqrt())
}

/// Prunes `target` to the smallest greedy dictionary within MMD `budget`.
pub fn mmd_omp(target: &Embedding, budget: f64) -> Result<(Embedding, CompressionReport)> {
    mmd_omp_with(target, budget, OmpOptions::default())
}

pub fn mmd_omp_with(
    target: &Embedding,
    budget: f64,
    options: OmpOptions,
) -> Result<(Embedding, CompressionReport)> {
    if !(budget >= 0.0) || budget.is_infinite() {
        return Err(Error::InvalidArgument(format!(
            "budget must be finite and nonnegative, got {budget}"
        )));
    }
    if target.is_empty() {
        return Err(Error::InvalidArgument("cannot compress an empty embedding".into()));
    }
    let initial_order = target.model_order();
    let merged = merge_duplicates(target);
    let mut removed_indices = merged.removed.clone();

    let mut jitter_used = 0.0;
    let pruned = if budget > 0.0 && merged.embedding.model_order() > 1 {
        let mut pursuit = Pursuit::new(&merged.embedding, options.execution);
        while pursuit.active.len() > 1 {
            let scores = pursuit.scores(options)?;
            let (pos, gamma) = argmin(&scores);
            if !(gamma <= budget) {
                break;
            }
            if !pursuit.try_remove(pos, budget)? {
                break;
            }
            removed_indices.push(merged.origin[pursuit.last_removed]);
        }
        jitter_used = pursuit.max_jitter;
        pursuit.into_embedding()
    } else {
        merged.embedding.clone()
    };

    let result = if removed_indices.is_empty() {
        target.clone()
    } else {
        pruned
    };
    let achieved_mmd = if removed_indices.is_empty() {
        0.0
    } else {
        mmd(target, &result)?
    };
    if achieved_mmd > budget + CONTRACT_SLACK {
        return Err(Error::Contract {
            achieved: achieved_mmd,
            budget,
        });
    }
    let report = CompressionReport {
        initial_order,
        final_order: result.model_order(),
        removed_indices,
        achieved_mmd,
        jitter_used,
    };
    debug_assert_eq!(
        report.final_order,
        report.initial_order - report.removed_indices.len()
    );
    Ok((result, report))
}

/// Lowest index wins ties; NaN never wins.
fn argmin(scores: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, &s) in scores.iter().enumerate() {
        if s < best.1 {
            best = (i, s);
        }
    }
    best
}

struct Merged {
    embedding: Embedding,
    /// merged position → index of the first occurrence in the input
    origin: Vec<usize>,
    removed: Vec<usize>,
}

fn merge_duplicates(target: &Embedding) -> Merged {
    let atoms = target.atoms();
    let coeffs = target.coeffs();
    let m = atoms.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| atoms[a][0].total_cmp(&atoms[b][0]).then(a.cmp(&b)));

    // representative[i] = first (lowest) input index of i's duplicate group
    let mut representative: Vec<usize> = (0..m).collect();
    for (pos, &i) in order.iter().enumerate() {
        for &j in &order[pos + 1..] {
            if atoms[j][0] - atoms[i][0] >= DUPLICATE_DISTANCE {
                break;
            }
            let sq: f64 = atoms[i]
                .iter()
                .zip(&atoms[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            if sq.sqrt() < DUPLICATE_DISTANCE {
                let (ri, rj) = (representative[i], representative[j]);
                let root = ri.min(rj);
                for r in representative.iter_mut() {
                    if *r == ri || *r == rj {
                        *r = root;
                    }
                }
            }
        }
    }

    let mut slot = vec![usize::MAX; m];
    let mut out_atoms = Vec::new();
    let mut out_coeffs: Vec<f64> = Vec::new();
    let mut origin = Vec::new();
    let mut removed = Vec::new();
    for i in 0..m {
        let root = representative[i];
        if slot[root] == usize::MAX {
            slot[root] = out_atoms.len();
            out_atoms.push(atoms[root].clone());
            out_coeffs.push(0.0);
            origin.push(root);
        }
        out_coeffs[slot[root]] += coeffs[i];
        if root != i {
            removed.push(i);
        }
    }
    Merged {
        embedding: Embedding::from_parts_unchecked(*target.kernel(), out_atoms, out_coeffs),
        origin,
        removed,
    }
}

/// Pruning state over index subsets of one target dictionary, sharing its
/// Gram matrix.
struct Pursuit<'a> {
    target: &'a Embedding,
    gram: DMatrix<f64>,
    /// `K_TT g_T`, whose restriction to `D` is `K_DT g_T`
    projected: Vec<f64>,
    active: Vec<usize>,
    coeffs: Vec<f64>,
    max_jitter: f64,
    last_removed: usize,
}

impl<'a> Pursuit<'a> {
    fn new(target: &'a Embedding, exec: Execution) -> Self {
        let gram = target.kernel().gram_unchecked(target.atoms(), exec);
        let projected = (&gram * DVector::from_column_slice(target.coeffs()))
            .as_slice()
            .to_vec();
        let m = target.model_order();
        Pursuit {
            target,
            gram,
            projected,
            active: (0..m).collect(),
            coeffs: target.coeffs().to_vec(),
            max_jitter: 0.0,
            last_removed: usize::MAX,
        }
    }

    fn sub_gram(&self, idx: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(idx.len(), idx.len(), |a, b| self.gram[(idx[a], idx[b])])
    }

    fn solve(&self, idx: &[usize]) -> Result<(Vec<f64>, f64)> {
        let factor = PdFactor::new(&self.sub_gram(idx))?;
        let rhs: Vec<f64> = idx.iter().map(|&i| self.projected[i]).collect();
        Ok((factor.solve_vec(&rhs), factor.jitter))
    }

    /// `‖T − Σ_{a} c_a κ(d_{idx[a]}, ·)‖²` via the difference vector on T's
    /// full index set.
    fn residual_sq(&self, idx: &[usize], c: &[f64]) -> f64 {
        let mut delta = self.target.coeffs().to_vec();
        for (&i, &ci) in idx.iter().zip(c) {
            delta[i] -= ci;
        }
        let d = DVector::from_vec(delta);
        d.dot(&(&self.gram * &d)).max(0.0)
    }

    fn scores(&mut self, options: OmpOptions) -> Result<Vec<f64>> {
        match options.scoring {
            Scoring::LeaveOneOut => self.scores_leave_one_out(),
            Scoring::Refit => self.scores_refit(options.execution),
        }
    }

    fn scores_leave_one_out(&mut self) -> Result<Vec<f64>> {
        let factor = PdFactor::new(&self.sub_gram(&self.active))?;
        self.max_jitter = self.max_jitter.max(factor.jitter);
        let inv_diag = factor.inverse_diagonal();
        let res_sq = self.residual_sq(&self.active, &self.coeffs);
        Ok(self
            .coeffs
            .iter()
            .zip(&inv_diag)
            .map(|(c, d)| (res_sq + c * c / d).max(0.0).sqrt())
            .collect())
    }

    fn scores_refit(&mut self, exec: Execution) -> Result<Vec<f64>> {
        let active = &self.active;
        let results = exec.map_indices(active.len(), |a| {
            let idx: Vec<usize> = active
                .iter()
                .enumerate()
                .filter(|&(b, _)| b != a)
                .map(|(_, &i)| i)
                .collect();
            self.solve(&idx)
                .map(|(c, jitter)| (self.residual_sq(&idx, &c).sqrt(), jitter))
        });
        let mut scores = Vec::with_capacity(results.len());
        for r in results {
            let (gamma, jitter) = r?;
            self.max_jitter = self.max_jitter.max(jitter);
            scores.push(gamma);
        }
        Ok(scores)
    }

    /// Removes active position `pos` if the refit residual is within budget.
    fn try_remove(&mut self, pos: usize, budget: f64) -> Result<bool> {
        let mut idx = self.active.clone();
        let removed = idx.remove(pos);
        let (c, jitter) = self.solve(&idx)?;
        if !(self.residual_sq(&idx, &c).sqrt() <= budget) {
            return Ok(false);
        }
        self.max_jitter = self.max_jitter.max(jitter);
        self.active = idx;
        self.coeffs = c;
        self.last_removed = removed;
        Ok(true)
    }

    fn into_embedding(self) -> Embedding {
        let atoms = self
            .active
            .iter()
            .map(|&i| self.target.atoms()[i].clone())
            .collect();
        Embedding::from_parts_unchecked(*self.target.kernel(), atoms, self.coeffs)
    }
}
