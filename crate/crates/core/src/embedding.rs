//! Kernel mean embeddings `β = Σ_u g(u) κ(d_u, ·)` of weighted Dirac measures.

use std::collections::HashMap;

use crate::sampling::ParticleMeasure;
use crate::{Error, Kernel, Point, Result};

/// Dictionary atoms with (possibly signed) coefficients in the RKHS of `kernel`.
///
/// The model order is the dictionary length; zero coefficients are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    kernel: Kernel,
    atoms: Vec<Point>,
    coeffs: Vec<f64>,
}

impl Embedding {
    pub fn empty(kernel: Kernel) -> Self {
        Embedding {
            kernel,
            atoms: Vec::new(),
            coeffs: Vec::new(),
        }
    }

    pub fn new(kernel: Kernel, atoms: Vec<Point>, coeffs: Vec<f64>) -> Result<Self> {
        if atoms.len() != coeffs.len() {
            return Err(Error::InvalidArgument(format!(
                "{} atoms but {} coefficients",
                atoms.len(),
                coeffs.len()
            )));
        }
        for p in &atoms {
            kernel.check_point(p)?;
        }
        if let Some(c) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite coefficient {c}")));
        }
        Ok(Embedding {
            kernel,
            atoms,
            coeffs,
        })
    }

    pub(crate) fn from_parts_unchecked(kernel: Kernel, atoms: Vec<Point>, coeffs: Vec<f64>) -> Self {
        debug_assert_eq!(atoms.len(), coeffs.len());
        Embedding {
            kernel,
            atoms,
            coeffs,
        }
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn atoms(&self) -> &[Point] {
        &self.atoms
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn model_order(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn coeff_sum(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    pub fn into_parts(self) -> (Vec<Point>, Vec<f64>) {
        (self.atoms, self.coeffs)
    }

    /// `β + w κ(x, ·)` as a new embedding.
    pub fn append(&self, x: Point, w: f64) -> Result<Embedding> {
        let mut out = self.clone();
        out.push(x, w)?;
        Ok(out)
    }

    /// In-place [`append`](Self::append).
    pub fn push(&mut self, x: Point, w: f64) -> Result<()> {
        self.kernel.check_point(&x)?;
        if !w.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite weight {w}")));
        }
        self.atoms.push(x);
        self.coeffs.push(w);
        Ok(())
    }

    pub fn norm_sq(&self) -> f64 {
        quadratic_form(&self.kernel, &self.atoms, &self.coeffs)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().max(0.0).sqrt()
    }

    /// `β(x) = Σ_u g(u) κ(d_u, x)`.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.kernel.check_point(x)?;
        Ok(self
            .atoms
            .iter()
            .zip(&self.coeffs)
            .map(|(d, g)| g * self.kernel.eval_unchecked(d, x))
            .sum())
    }
}

/// Embeds a weighted Dirac measure: same dictionary, unnormalized weights as
/// coefficients.
pub fn embed(measure: &ParticleMeasure, kernel: Kernel) -> Result<Embedding> {
    Embedding::new(kernel, measure.atoms().to_vec(), measure.weights().to_vec())
}

/// Dirac pre-image: the measure with the embedding's dictionary and
/// coefficients. The normalizer is the current coefficient sum.
pub fn preimage(beta: &Embedding) -> ParticleMeasure {
    ParticleMeasure::from_parts(beta.atoms.clone(), beta.coeffs.clone(), beta.coeff_sum())
}

fn check_same_kernel(a: &Embedding, b: &Embedding) -> Result<()> {
    if a.kernel != b.kernel {
        return Err(Error::InvalidArgument(format!(
            "kernel mismatch: {:?} vs {:?}",
            a.kernel, b.kernel
        )));
    }
    Ok(())
}

/// `⟨a, b⟩_H = a.gᵀ K_ab b.g`.
pub fn rkhs_inner(a: &Embedding, b: &Embedding) -> Result<f64> {
    check_same_kernel(a, b)?;
    let k = &a.kernel;
    Ok(a.atoms
        .iter()
        .zip(&a.coeffs)
        .map(|(x, ga)| {
            ga * b
                .atoms
                .iter()
                .zip(&b.coeffs)
                .map(|(y, gb)| gb * k.eval_unchecked(x, y))
                .sum::<f64>()
        })
        .sum())
}

/// `‖a − b‖_H`.
///
/// Evaluated as the norm of the difference embedding with coincident atoms
/// merged first, which equals `sqrt(⟨a,a⟩ − 2⟨a,b⟩ + ⟨b,b⟩)` but avoids the
/// cancellation between large norms when `b` is a pruned copy of `a`.
pub fn mmd(a: &Embedding, b: &Embedding) -> Result<f64> {
    check_same_kernel(a, b)?;
    let (atoms, coeffs) = difference(a, b);
    Ok(quadratic_form(&a.kernel, &atoms, &coeffs).max(0.0).sqrt())
}

fn point_key(p: &[f64]) -> Vec<u64> {
    // +0.0 and -0.0 must collide
    p.iter().map(|v| (v + 0.0).to_bits()).collect()
}

fn difference(a: &Embedding, b: &Embedding) -> (Vec<Point>, Vec<f64>) {
    let mut index: HashMap<Vec<u64>, usize> = HashMap::with_capacity(a.atoms.len() + b.atoms.len());
    let mut atoms: Vec<Point> = Vec::with_capacity(a.atoms.len() + b.atoms.len());
    let mut coeffs: Vec<f64> = Vec::with_capacity(a.atoms.len() + b.atoms.len());
    let signed = a
        .atoms
        .iter()
        .zip(a.coeffs.iter().copied())
        .chain(b.atoms.iter().zip(b.coeffs.iter().map(|c| -c)));
    for (p, c) in signed {
        match index.entry(point_key(p)) {
            std::collections::hash_map::Entry::Occupied(e) => coeffs[*e.get()] += c,
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(atoms.len());
                atoms.push(p.clone());
                coeffs.push(c);
            }
        }
    }
    (atoms, coeffs)
}

fn quadratic_form(kernel: &Kernel, atoms: &[Point], coeffs: &[f64]) -> f64 {
    let mut diag = 0.0;
    let mut off = 0.0;
    for s in 0..atoms.len() {
        let cs = coeffs[s];
        if cs == 0.0 {
            continue;
        }
        diag += cs * cs;
        for u in (s + 1)..atoms.len() {
            off += cs * coeffs[u] * kernel.eval_unchecked(&atoms[s], &atoms[u]);
        }
    }
    diag + 2.0 * off
}
