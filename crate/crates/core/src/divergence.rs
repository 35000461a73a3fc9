//! Divergences between discrete distributions, discrimination probability and
//! the log-likelihood quality decomposition.
//!
//! Every divergence is `d(p, q)` with `p` the reference (natural) law and `q`
//! the reconstruction law. Infinite values are returned as `f64::INFINITY`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Alphabet, DiscreteDistribution};

/// Default number of bins for [`bin_onto_common_grid`].
pub const COMMON_GRID_BINS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DivergenceKind {
    TotalVariation,
    KullbackLeibler,
    JensenShannon,
    /// Squared Hellinger distance ½ Σ (√p − √q)².
    Hellinger,
    /// Pearson χ²: Σ (p − q)² / q.
    ChiSquare,
    Wasserstein1,
}

impl DivergenceKind {
    pub const ALL: [DivergenceKind; 6] = [
        DivergenceKind::TotalVariation,
        DivergenceKind::KullbackLeibler,
        DivergenceKind::JensenShannon,
        DivergenceKind::Hellinger,
        DivergenceKind::ChiSquare,
        DivergenceKind::Wasserstein1,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            DivergenceKind::TotalVariation => "tv",
            DivergenceKind::KullbackLeibler => "kl",
            DivergenceKind::JensenShannon => "js",
            DivergenceKind::Hellinger => "hellinger",
            DivergenceKind::ChiSquare => "chi2",
            DivergenceKind::Wasserstein1 => "w1",
        }
    }

    /// Differentiable in the second argument on the open simplex.
    pub fn is_smooth(self) -> bool {
        !matches!(
            self,
            DivergenceKind::TotalVariation | DivergenceKind::Wasserstein1
        )
    }

    pub fn is_convex_in_second_arg(self) -> bool {
        true
    }

    /// Separable as Σ_x φ(p_x, q_x).
    pub fn is_separable(self) -> bool {
        self != DivergenceKind::Wasserstein1
    }
}

impl fmt::Display for DivergenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for DivergenceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "tv" | "total-variation" => DivergenceKind::TotalVariation,
            "kl" => DivergenceKind::KullbackLeibler,
            "js" => DivergenceKind::JensenShannon,
            "hellinger" => DivergenceKind::Hellinger,
            "chi2" | "chi-square" => DivergenceKind::ChiSquare,
            "w1" | "wasserstein1" => DivergenceKind::Wasserstein1,
            _ => return Err(Error::Parse(format!("unknown divergence {s:?}"))),
        })
    }
}

/// x ln(x / y) with 0 ln 0 = 0.
fn xlogxy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if y == 0.0 {
        f64::INFINITY
    } else {
        x * (x / y).ln()
    }
}

/// Per-symbol term φ(p, q) of a separable divergence.
pub(crate) fn term(kind: DivergenceKind, p: f64, q: f64) -> f64 {
    match kind {
        DivergenceKind::TotalVariation => 0.5 * (p - q).abs(),
        DivergenceKind::KullbackLeibler => xlogxy(p, q),
        DivergenceKind::JensenShannon => {
            let m = 0.5 * (p + q);
            0.5 * (xlogxy(p, m) + xlogxy(q, m))
        }
        DivergenceKind::Hellinger => {
            let d = p.sqrt() - q.sqrt();
            0.5 * d * d
        }
        DivergenceKind::ChiSquare => {
            if q == 0.0 {
                if p == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (p - q) * (p - q) / q
            }
        }
        DivergenceKind::Wasserstein1 => unreachable!("not separable"),
    }
}

/// ∂φ/∂q; for TV the subgradient ½·sign(q − p) (0 at the kink).
pub(crate) fn term_derivative(kind: DivergenceKind, p: f64, q: f64) -> f64 {
    match kind {
        DivergenceKind::TotalVariation => 0.5 * (q - p).signum() * f64::from(q != p),
        DivergenceKind::KullbackLeibler => {
            if p == 0.0 {
                0.0
            } else {
                -p / q
            }
        }
        DivergenceKind::JensenShannon => {
            if q == 0.0 {
                if p == 0.0 {
                    0.5 * std::f64::consts::LN_2
                } else {
                    f64::NEG_INFINITY
                }
            } else {
                0.5 * (2.0 * q / (p + q)).ln()
            }
        }
        DivergenceKind::Hellinger if p == 0.0 => 0.5,
        DivergenceKind::Hellinger => 0.5 * (1.0 - (p / q).sqrt()),
        DivergenceKind::ChiSquare if p == 0.0 => 1.0,
        DivergenceKind::ChiSquare => 1.0 - (p / q) * (p / q),
        DivergenceKind::Wasserstein1 => unreachable!("not separable"),
    }
}

/// The q ≥ 0 at which ∂φ/∂q equals `s` (+∞ past the supremum of the
/// derivative). For p = 0 the derivative is constant and the answer is 0 or +∞.
pub(crate) fn term_derivative_inverse(kind: DivergenceKind, p: f64, s: f64) -> f64 {
    let constant = term_derivative_sup(kind);
    if p == 0.0 || s >= constant {
        return if s <= constant && p == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    match kind {
        DivergenceKind::KullbackLeibler => -p / s,
        DivergenceKind::Hellinger => p / ((1.0 - 2.0 * s) * (1.0 - 2.0 * s)),
        DivergenceKind::ChiSquare => p / (1.0 - s).sqrt(),
        DivergenceKind::JensenShannon => {
            let e = (2.0 * s).exp();
            p * e / (2.0 - e)
        }
        _ => unreachable!(),
    }
}

/// ∂²φ/∂q² for p > 0 and q > 0.
pub(crate) fn term_second_derivative(kind: DivergenceKind, p: f64, q: f64) -> f64 {
    match kind {
        DivergenceKind::KullbackLeibler => p / (q * q),
        DivergenceKind::Hellinger => 0.25 * p.sqrt() / (q * q.sqrt()),
        DivergenceKind::ChiSquare => 2.0 * p * p / (q * q * q),
        DivergenceKind::JensenShannon => 0.5 * p / (q * (p + q)),
        DivergenceKind::TotalVariation | DivergenceKind::Wasserstein1 => unreachable!("not smooth"),
    }
}

/// Supremum of ∂φ/∂q over q > 0 (approached as q → ∞).
pub(crate) fn term_derivative_sup(kind: DivergenceKind) -> f64 {
    match kind {
        DivergenceKind::KullbackLeibler => 0.0,
        DivergenceKind::Hellinger => 0.5,
        DivergenceKind::ChiSquare => 1.0,
        DivergenceKind::JensenShannon => 0.5 * std::f64::consts::LN_2,
        DivergenceKind::TotalVariation | DivergenceKind::Wasserstein1 => unreachable!("not smooth"),
    }
}

fn check_shared(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<()> {
    if !p.alphabet().same_labels(q.alphabet()) {
        return Err(Error::AlphabetMismatch(
            "divergence arguments must share an alphabet".into(),
        ));
    }
    Ok(())
}

/// d(p, q). Wasserstein-1 uses the scalar values of both alphabets, which
/// need not coincide; every other kind requires a shared alphabet.
pub fn divergence(
    kind: DivergenceKind,
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
) -> Result<f64> {
    if kind == DivergenceKind::Wasserstein1 {
        return wasserstein1_between(p, q);
    }
    check_shared(p, q)?;
    Ok(separable_value(kind, p.weights(), q.weights()))
}

pub(crate) fn separable_value(kind: DivergenceKind, p: &[f64], q: &[f64]) -> f64 {
    let s: f64 = p.iter().zip(q).map(|(&a, &b)| term(kind, a, b)).sum();
    // rounding can push the sum slightly below zero; NaN must survive
    if s < 0.0 {
        0.0
    } else {
        s
    }
}

/// Total variation over the union of labels (a label missing from one side has mass 0 there).
pub fn total_variation_by_label(p: &DiscreteDistribution, q: &DiscreteDistribution) -> f64 {
    let mut sum = 0.0;
    let pa = p.alphabet();
    let qa = q.alphabet();
    if pa.same_labels(qa) {
        return separable_value(DivergenceKind::TotalVariation, p.weights(), q.weights());
    }
    let mut matched = vec![false; q.len()];
    for (i, l) in pa.labels().iter().enumerate() {
        match qa.index_of(l) {
            Some(j) => {
                matched[j] = true;
                sum += (p.get(i) - q.get(j)).abs();
            }
            None => sum += p.get(i),
        }
    }
    for (j, m) in matched.iter().enumerate() {
        if !m {
            sum += q.get(j);
        }
    }
    0.5 * sum
}

/// ∫ |F_p − F_q| for two laws on a shared list of scalar support points
/// (the points need not be sorted).
pub fn wasserstein1(values: &[f64], p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != values.len() || q.len() != values.len() {
        return Err(Error::LengthMismatch {
            expected: values.len(),
            got: p.len().min(q.len()),
        });
    }
    let atoms = values
        .iter()
        .zip(p.iter().zip(q))
        .map(|(&v, (&a, &b))| (v, a - b))
        .collect();
    Ok(cdf_gap_area(atoms))
}

/// Wasserstein-1 between two distributions with scalar values on possibly different supports.
pub fn wasserstein1_between(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    let pv = p
        .alphabet()
        .require_scalars("Wasserstein-1 first argument")?;
    let qv = q
        .alphabet()
        .require_scalars("Wasserstein-1 second argument")?;
    let atoms = pv
        .iter()
        .zip(p.weights())
        .map(|(&v, &w)| (v, w))
        .chain(qv.iter().zip(q.weights()).map(|(&v, &w)| (v, -w)))
        .collect();
    Ok(cdf_gap_area(atoms))
}

fn cdf_gap_area(mut atoms: Vec<(f64, f64)>) -> f64 {
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut area = 0.0;
    let mut gap = 0.0;
    for w in atoms.windows(2) {
        gap += w[0].1;
        area += gap.abs() * (w[1].0 - w[0].0);
    }
    area
}

/// Probability that the optimal real-vs-fake test succeeds: ½·TV + ½.
pub fn success_probability(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    check_shared(p, q)?;
    let tv = separable_value(DivergenceKind::TotalVariation, p.weights(), q.weights());
    Ok(0.5 * tv + 0.5)
}

/// Shannon entropy in nats.
pub fn entropy(p: &DiscreteDistribution) -> f64 {
    -p.weights()
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| w * w.ln())
        .sum::<f64>()
}

/// Decomposition of the mean log-likelihood Σ p_X̂ log p_X.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QualityIdentity {
    /// Σ_x p_X̂(x) ln p_X(x); −∞ when p_X̂ charges a zero of p_X.
    pub lhs: f64,
    /// KL(p_X̂ ‖ p_X).
    pub d_kl: f64,
    /// H(p_X̂).
    pub entropy: f64,
    /// lhs − (−d_kl − entropy): vanishes identically.
    pub residual: f64,
    /// lhs − (−d_kl + entropy): the sign convention with +H, which does not hold in general.
    pub plus_entropy_residual: f64,
}

pub fn mean_quality_identity(
    p_x: &DiscreteDistribution,
    p_xhat: &DiscreteDistribution,
) -> Result<QualityIdentity> {
    check_shared(p_x, p_xhat)?;
    let mut lhs = 0.0;
    for (&a, &b) in p_xhat.weights().iter().zip(p_x.weights()) {
        if a > 0.0 {
            lhs += if b > 0.0 {
                a * b.ln()
            } else {
                f64::NEG_INFINITY
            };
        }
    }
    let d_kl = separable_value(
        DivergenceKind::KullbackLeibler,
        p_xhat.weights(),
        p_x.weights(),
    );
    let h = entropy(p_xhat);
    let diff = |rhs: f64| if lhs == rhs { 0.0 } else { lhs - rhs };
    Ok(QualityIdentity {
        lhs,
        d_kl,
        entropy: h,
        residual: diff(-d_kl - h),
        plus_entropy_residual: diff(-d_kl + h),
    })
}

/// Histograms both laws onto one uniform grid of `n_bins` bins spanning the
/// union of their scalar supports, so that label-based divergences apply.
pub fn bin_onto_common_grid(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    n_bins: usize,
) -> Result<(DiscreteDistribution, DiscreteDistribution)> {
    if n_bins == 0 {
        return Err(Error::InvalidParameter("need at least one bin".into()));
    }
    let pv = p.alphabet().require_scalars("binning first argument")?;
    let qv = q.alphabet().require_scalars("binning second argument")?;
    let (lo, hi) = pv
        .iter()
        .chain(&qv)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    let width = (hi - lo) / n_bins as f64;
    let bin = |v: f64| {
        if width > 0.0 {
            (((v - lo) / width) as usize).min(n_bins - 1)
        } else {
            0
        }
    };
    let centers: Vec<Vec<f64>> = (0..n_bins)
        .map(|k| vec![lo + (k as f64 + 0.5) * width])
        .collect();
    let alphabet = std::sync::Arc::new(Alphabet::with_values(
        (0..n_bins).map(|k| format!("b{k}")).collect(),
        centers,
    )?);
    let hist = |values: &[f64], w: &[f64]| {
        let mut h = vec![0.0; n_bins];
        for (&v, &m) in values.iter().zip(w) {
            h[bin(v)] += m;
        }
        h
    };
    Ok((
        DiscreteDistribution::new(alphabet.clone(), hist(&pv, p.weights()))?,
        DiscreteDistribution::new(alphabet, hist(&qv, q.weights()))?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(w: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::new(Alphabet::indexed(w.len()).unwrap(), w.to_vec()).unwrap()
    }

    fn on_values(values: &[f64], w: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::new(Alphabet::from_scalars(values).unwrap(), w.to_vec()).unwrap()
    }

    #[test]
    fn total_variation_examples() {
        let tv = |a: &[f64], b: &[f64]| {
            divergence(DivergenceKind::TotalVariation, &dist(a), &dist(b)).unwrap()
        };
        assert_eq!(tv(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
        assert_eq!(tv(&[0.5, 0.5], &[0.75, 0.25]), 0.25);
    }

    #[test]
    fn kl_infinite_when_support_missing() {
        let d = divergence(
            DivergenceKind::KullbackLeibler,
            &dist(&[0.5, 0.5]),
            &dist(&[1.0, 0.0]),
        )
        .unwrap();
        assert_eq!(d, f64::INFINITY);
        let d = divergence(
            DivergenceKind::KullbackLeibler,
            &dist(&[1.0, 0.0]),
            &dist(&[0.5, 0.5]),
        )
        .unwrap();
        assert!((d - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(
            divergence(
                DivergenceKind::ChiSquare,
                &dist(&[0.5, 0.5]),
                &dist(&[1.0, 0.0])
            )
            .unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn js_and_hellinger_of_disjoint_laws() {
        let p = dist(&[1.0, 0.0]);
        let q = dist(&[0.0, 1.0]);
        let js = divergence(DivergenceKind::JensenShannon, &p, &q).unwrap();
        assert!((js - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((divergence(DivergenceKind::Hellinger, &p, &q).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn alphabet_mismatch() {
        let p = dist(&[0.5, 0.5]);
        let q = DiscreteDistribution::new(
            Alphabet::new(vec!["a".into(), "b".into()]).unwrap(),
            vec![0.5, 0.5],
        )
        .unwrap();
        assert!(matches!(
            divergence(DivergenceKind::KullbackLeibler, &p, &q),
            Err(Error::AlphabetMismatch(_))
        ));
        assert!(success_probability(&p, &q).is_err());
        assert_eq!(total_variation_by_label(&p, &q), 1.0);
    }

    #[test]
    fn wasserstein_examples() {
        assert_eq!(
            wasserstein1(&[0.0, 3.0], &[1.0, 0.0], &[0.0, 1.0]).unwrap(),
            3.0
        );
        assert_eq!(
            wasserstein1(&[0.0, 1.0], &[0.5, 0.5], &[1.0, 0.0]).unwrap(),
            0.5
        );
        assert_eq!(
            wasserstein1(&[2.0, 0.0, 1.0], &[0.2, 0.3, 0.5], &[0.2, 0.3, 0.5]).unwrap(),
            0.0
        );
        let p = on_values(&[0.0], &[1.0]);
        let q = on_values(&[3.0], &[1.0]);
        assert_eq!(
            divergence(DivergenceKind::Wasserstein1, &p, &q).unwrap(),
            3.0
        );
    }

    #[test]
    fn success_probability_examples() {
        let p = dist(&[0.5, 0.5]);
        assert_eq!(success_probability(&p, &p).unwrap(), 0.5);
        assert_eq!(
            success_probability(&dist(&[1.0, 0.0]), &dist(&[0.0, 1.0])).unwrap(),
            1.0
        );
        assert_eq!(
            success_probability(&p, &dist(&[0.75, 0.25])).unwrap(),
            0.625
        );
    }

    #[test]
    fn quality_identity() {
        let u = dist(&[0.25; 4]);
        let r = mean_quality_identity(&u, &u).unwrap();
        assert!((r.lhs + 4f64.ln()).abs() < 1e-15);
        assert_eq!(r.d_kl, 0.0);
        assert!(r.residual.abs() < 1e-15);
        assert!((r.plus_entropy_residual + 2.0 * 4f64.ln()).abs() < 1e-14);

        let r = mean_quality_identity(&dist(&[1.0, 0.0]), &dist(&[0.5, 0.5])).unwrap();
        assert_eq!(r.lhs, f64::NEG_INFINITY);
        assert_eq!(r.residual, 0.0);
    }

    #[test]
    fn common_grid_binning() {
        let p = on_values(&[-1.0, 0.0, 1.0], &[0.25, 0.5, 0.25]);
        let q = on_values(&[-0.5, 0.5], &[0.5, 0.5]);
        let (bp, bq) = bin_onto_common_grid(&p, &q, 4).unwrap();
        assert_eq!(bp.weights(), &[0.25, 0.0, 0.5, 0.25]);
        assert_eq!(bq.weights(), &[0.0, 0.5, 0.0, 0.5]);
    }

    #[test]
    fn parse_kinds() {
        for k in DivergenceKind::ALL {
            assert_eq!(k.short_name().parse::<DivergenceKind>().unwrap(), k);
        }
        assert!("renyi".parse::<DivergenceKind>().is_err());
    }
}
