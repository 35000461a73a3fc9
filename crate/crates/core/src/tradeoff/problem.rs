//! The Lagrangian objective E[Δ] + λ·d(p_X, p_X̂) over kernels, in flat form.

use crate::divergence::{self, DivergenceKind};
use crate::error::{Error, Result};
use crate::model::{CostTable, DegradationModel, DistortionMeasure};

#[derive(Debug, Clone)]
pub(crate) struct Geometry {
    pub xhat: Vec<f64>,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct Lagrangian {
    pub p_y: Vec<f64>,
    pub f: CostTable,
    pub kind: DivergenceKind,
    pub lambda: f64,
    /// Reference law over X.
    pub p_x: Vec<f64>,
    /// Scalar values for Wasserstein-1.
    pub geometry: Option<Geometry>,
    /// Allowed (y, x̂) pairs, row-major; `None` allows all.
    pub allowed: Option<Vec<bool>>,
    /// Floor applied to reconstruction masses inside derivatives.
    pub eps: f64,
}

impl Lagrangian {
    pub fn new(
        model: &DegradationModel,
        dist: &DistortionMeasure,
        kind: DivergenceKind,
        lambda: f64,
        eps: f64,
    ) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda {lambda} must be finite and nonnegative"
            )));
        }
        let geometry = if kind == DivergenceKind::Wasserstein1 {
            Some(Geometry {
                xhat: dist
                    .target()
                    .require_scalars("Wasserstein-1 reconstruction alphabet")?,
                x: model
                    .x_alphabet()
                    .require_scalars("Wasserstein-1 signal alphabet")?,
            })
        } else {
            crate::bounds::require_x_output(model, dist)?;
            None
        };
        Ok(Self {
            p_y: model.p_y().weights().to_vec(),
            f: model.conditional_cost(dist)?,
            kind,
            lambda,
            p_x: model.prior().weights().to_vec(),
            geometry,
            allowed: None,
            eps,
        })
    }

    pub fn n_y(&self) -> usize {
        self.f.n_y()
    }

    pub fn n_xhat(&self) -> usize {
        self.f.n_xhat()
    }

    pub fn is_allowed(&self, y: usize, k: usize) -> bool {
        self.allowed
            .as_ref()
            .map_or(true, |a| a[y * self.n_xhat() + k])
    }

    pub fn marginal(&self, q: &[f64]) -> Vec<f64> {
        let m = self.n_xhat();
        let mut r = vec![0.0; m];
        for (py, row) in self.p_y.iter().zip(q.chunks(m)) {
            for (acc, v) in r.iter_mut().zip(row) {
                *acc += py * v;
            }
        }
        r
    }

    pub fn distortion(&self, q: &[f64]) -> f64 {
        let m = self.n_xhat();
        self.p_y
            .iter()
            .zip(q.chunks(m))
            .enumerate()
            .map(|(y, (py, row))| {
                py * self
                    .f
                    .row(y)
                    .iter()
                    .zip(row)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            })
            .sum()
    }

    /// Unsmoothed d(p_X, r).
    pub fn perception(&self, r: &[f64]) -> f64 {
        match &self.geometry {
            Some(g) => w1_atoms(g, &self.p_x, r),
            None => divergence::separable_value(self.kind, &self.p_x, r),
        }
    }

    pub fn objective(&self, q: &[f64]) -> f64 {
        let p = self.perception(&self.marginal(q));
        if self.lambda == 0.0 {
            return self.distortion(q);
        }
        self.distortion(q) + self.lambda * p
    }

    /// λ·∂φ/∂r for symbol `k`, with r floored at ε.
    pub fn slope(&self, k: usize, r: f64) -> f64 {
        self.lambda * divergence::term_derivative(self.kind, self.p_x[k], r.max(self.eps))
    }

    /// λ·(sub)gradient of the perception term with respect to the reconstruction law.
    pub fn perception_gradient(&self, r: &[f64]) -> Vec<f64> {
        match &self.geometry {
            Some(g) => w1_subgradient(g, &self.p_x, r)
                .into_iter()
                .map(|v| self.lambda * v)
                .collect(),
            None => (0..r.len()).map(|k| self.slope(k, r[k])).collect(),
        }
    }

    /// Conditional-gradient gap Σ_y p_Y(y)(⟨q_y, G_y⟩ − min_allowed G_y).
    pub fn fw_gap(&self, q: &[f64]) -> f64 {
        let m = self.n_xhat();
        let psi = self.perception_gradient(&self.marginal(q));
        let mut gap = 0.0;
        for (y, row) in q.chunks(m).enumerate() {
            let g = |k: usize| self.f.get(y, k) + psi[k];
            let inner: f64 = row.iter().enumerate().map(|(k, v)| v * g(k)).sum();
            let best = (0..m)
                .filter(|&k| self.is_allowed(y, k))
                .map(g)
                .fold(f64::INFINITY, f64::min);
            gap += self.p_y[y] * (inner - best).max(0.0);
        }
        gap
    }
}

fn merged_atoms(g: &Geometry, p_x: &[f64], r: &[f64]) -> Vec<(f64, f64)> {
    let mut atoms: Vec<(f64, f64)> = g
        .xhat
        .iter()
        .zip(r)
        .map(|(&v, &w)| (v, w))
        .chain(g.x.iter().zip(p_x).map(|(&v, &w)| (v, -w)))
        .collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    atoms
}

/// W1 between the reconstruction law r (on x̂ values) and p_X (on x values).
fn w1_atoms(g: &Geometry, p_x: &[f64], r: &[f64]) -> f64 {
    let atoms = merged_atoms(g, p_x, r);
    let mut gap = 0.0;
    let mut area = 0.0;
    for w in atoms.windows(2) {
        gap += w[0].1;
        area += gap.abs() * (w[1].0 - w[0].0);
    }
    area
}

/// ∂W1/∂r_k = ∫_{v_k}^∞ sign(F_r − F_p) (one-sided choice 0 at F_r = F_p).
fn w1_subgradient(g: &Geometry, p_x: &[f64], r: &[f64]) -> Vec<f64> {
    let atoms = merged_atoms(g, p_x, r);
    let mut gap = 0.0;
    // cumulative signed length from each atom position to +∞
    let mut tail = vec![0.0; atoms.len()];
    let mut signs = Vec::with_capacity(atoms.len());
    for w in atoms.windows(2) {
        gap += w[0].1;
        let s = if gap > 1e-15 {
            1.0
        } else if gap < -1e-15 {
            -1.0
        } else {
            0.0
        };
        signs.push(s * (w[1].0 - w[0].0));
    }
    for i in (0..signs.len()).rev() {
        tail[i] = signs[i] + tail[i + 1];
    }
    g.xhat
        .iter()
        .map(|&v| {
            let i = atoms.partition_point(|a| a.0 < v);
            tail[i]
        })
        .collect()
}
