use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DenseBlock, Pencil};
use crate::preconditioner::{Preconditioner, PreconditionerSpec, Variant};
use crate::solver::{psd_id_step, DeflationSet, StepSettings};

use super::bounds::{kappa, single_step_factor};
use super::oracle::SpectralOracle;

const GRID: usize = 2000;
const GOLDEN_ITERS: usize = 80;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SharpnessPoint {
    /// Starting ratio `(ρ(z)−λⱼ)/(λⱼ₊₁−ρ(z))`.
    pub delta: f64,
    /// Mixing angle between `vⱼ₊₁` and `vₙ` that maximizes the factor.
    pub phi: f64,
    /// Largest observed one-step reduction of the ratio.
    pub observed: f64,
    /// `observed / limit`; absent when the limit is zero.
    pub relative: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessReport {
    pub j: usize,
    pub nu: f64,
    pub kappa: f64,
    /// `(κ/(2−κ))²`.
    pub limit: f64,
    pub points: Vec<SharpnessPoint>,
}

struct Probe<'a> {
    p: &'a Pencil,
    oracle: &'a SpectralOracle,
    defl: DeflationSet,
    k: Preconditioner,
    j: usize,
    /// `λⱼ₊₁ = λₙ`: the invariant subspace is only two-dimensional.
    collapsed: bool,
}

impl Probe<'_> {
    /// Ratio of `x` computed from its eigen-coefficients so that no
    /// cancellation happens near `λⱼ`.
    fn ratio_of(&self, x: &[f64]) -> Result<f64> {
        let xb = DenseBlock::from_col_major(x.len(), 1, x.to_vec())?;
        let c = self.oracle.coefficients(self.p, 1, &xb);
        let eigs = self.oracle.values();
        let (lj, lnext) = (eigs[self.j - 1], eigs[self.j]);
        let (mut num, mut den) = (0.0, 0.0);
        for (k, &l) in eigs.iter().enumerate() {
            let w = c[(k, 0)] * c[(k, 0)];
            num += w * (l - lj);
            den += w * (lnext - l);
        }
        Ok(num / den)
    }

    /// Starting vector with ratio `delta` and mixing angle `phi`.
    fn start(&self, delta: f64, phi: f64) -> Vec<f64> {
        let eigs = self.oracle.values();
        let n = eigs.len();
        let (lj, lnext, ln) = (eigs[self.j - 1], eigs[self.j], eigs[n - 1]);
        let (cphi, sphi) = if self.collapsed {
            (1.0, 0.0)
        } else {
            (phi.cos(), phi.sin())
        };
        // tan² of the angle to vⱼ solving ratio = δ.
        let excess = cphi * cphi * (lnext - lj) + sphi * sphi * (ln - lj);
        let t2 = delta * (lnext - lj) / (excess + delta * sphi * sphi * (ln - lnext));
        let (a, b) = (1.0, t2.sqrt());
        let v = self.oracle.vectors();
        let mut z = vec![0.0; n];
        for (r, zr) in z.iter_mut().enumerate() {
            *zr = a * v[(r, self.j - 1)] + b * cphi * v[(r, self.j)];
            if !self.collapsed {
                *zr += b * sphi * v[(r, n - 1)];
            }
        }
        z
    }

    fn factor(&self, delta: f64, phi: f64) -> Result<f64> {
        let z = self.start(delta, phi);
        let before = self.ratio_of(&z)?;
        let (_, next) = psd_id_step(&z, &self.defl, &self.k, self.p, StepSettings::default())?;
        Ok(self.ratio_of(&next)? / before)
    }

    fn maximize(&self, delta: f64) -> Result<(f64, f64)> {
        if self.collapsed {
            return Ok((0.0, self.factor(delta, 0.0)?));
        }
        let half_pi = std::f64::consts::FRAC_PI_2;
        let h = half_pi / GRID as f64;
        let mut best = (0.0, f64::NEG_INFINITY);
        for g in 0..=GRID {
            let phi = h * g as f64;
            let f = self.factor(delta, phi)?;
            if f > best.1 {
                best = (phi, f);
            }
        }
        // Golden-section refinement on the bracketing grid cell pair.
        let (mut lo, mut hi) = ((best.0 - h).max(0.0), (best.0 + h).min(half_pi));
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let mut f1 = self.factor(delta, x1)?;
        let mut f2 = self.factor(delta, x2)?;
        for _ in 0..GOLDEN_ITERS {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = self.factor(delta, x2)?;
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = self.factor(delta, x1)?;
            }
        }
        for (phi, f) in [(x1, f1), (x2, f2)] {
            if f > best.1 {
                best = (phi, f);
            }
        }
        Ok(best)
    }
}

/// Worst-case one-step reduction of PSD-id with exact shift-invert at
/// `σ = ν` for starting vectors in `span{vⱼ, vⱼ₊₁, vₙ}`, one value per
/// starting ratio in `deltas`. The eigenvectors below `vⱼ` are deflated.
///
/// As the starting ratio goes to zero the observed factor approaches
/// `(κ/(2−κ))²`. Only `ε = 0` can be realized here.
pub fn sharpness_probe(
    p: &Pencil,
    oracle: &SpectralOracle,
    j: usize,
    nu: f64,
    epsilon_target: f64,
    deltas: &[f64],
) -> Result<SharpnessReport> {
    if epsilon_target != 0.0 {
        return Err(Error::InvalidSpec(
            "sharpness probe only realizes ε = 0 (exact shift-invert)".into(),
        ));
    }
    if p.fingerprint() != oracle.fingerprint() {
        return Err(Error::Domain("oracle was built for a different pencil".into()));
    }
    let n = oracle.n();
    if j == 0 || j >= n {
        return Err(Error::Domain(format!("need 1 ≤ j < n = {n}, got {j}")));
    }
    let (lj, lnext, ln) = (oracle.lambda(j), oracle.lambda(j + 1), oracle.lambda_max());
    let kap = kappa(lj, lnext, ln, nu)?;
    let limit = single_step_factor(kap, 0.0)?;
    if deltas.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
        return Err(Error::Domain("starting ratios must be positive".into()));
    }

    let defl = DeflationSet::from_parts(oracle.deflated_basis(j), oracle.values()[..j - 1].to_vec())?;
    let k = Preconditioner::build(PreconditionerSpec::new(Variant::ExactShiftInvert, nu), p)?;
    let probe = Probe {
        p,
        oracle,
        defl,
        k,
        j,
        collapsed: lnext == ln,
    };
    let points = deltas
        .iter()
        .map(|&delta| {
            let (phi, observed) = probe.maximize(delta)?;
            Ok(SharpnessPoint {
                delta,
                phi,
                observed,
                relative: (limit > 0.0).then(|| observed / limit),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SharpnessReport {
        j,
        nu,
        kappa: kap,
        limit,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::dense_oracle;
    use crate::linalg::SparseMatrix;

    fn setup(d: &[f64]) -> (Pencil, SpectralOracle) {
        let p = Pencil::standard(SparseMatrix::diagonal(d)).unwrap();
        let o = dense_oracle(&p, 100).unwrap();
        (p, o)
    }

    #[test]
    fn limit_is_attained() {
        let d: Vec<f64> = (1..=10).map(f64::from).collect();
        let (p, o) = setup(&d);
        let rep = sharpness_probe(&p, &o, 1, 0.0, 0.0, &[1e-8]).unwrap();
        let rel = rep.points[0].relative.unwrap();
        assert!((0.99..=1.0 + 1e-9).contains(&rel), "{rep:?}");
    }

    #[test]
    fn large_ratio_stays_below_limit() {
        let d: Vec<f64> = (1..=10).map(f64::from).collect();
        let (p, o) = setup(&d);
        let rep = sharpness_probe(&p, &o, 2, 0.5, 0.0, &[0.5, 1e-2, 1e-4]).unwrap();
        for pt in &rep.points {
            assert!(pt.observed <= rep.limit * (1.0 + 1e-10), "{rep:?}");
        }
        // Monotone approach.
        assert!(rep
            .points
            .windows(2)
            .all(|w| w[0].observed <= w[1].observed * (1.0 + 1e-9)));
    }

    #[test]
    fn zero_kappa_converges_in_one_step() {
        let (p, o) = setup(&[1.0, 3.0, 3.0]);
        let rep = sharpness_probe(&p, &o, 1, 0.0, 0.0, &[0.3]).unwrap();
        assert_eq!(rep.kappa, 0.0);
        assert!(rep.points[0].observed * 0.3 <= 1e-12, "{rep:?}");
        assert!(rep.points[0].relative.is_none());
    }

    #[test]
    fn rejects_degenerate_and_inexact() {
        let (p, o) = setup(&[1.0, 1.0, 4.0]);
        assert!(sharpness_probe(&p, &o, 1, 0.0, 0.0, &[1e-3]).is_err());
        let (p, o) = setup(&[1.0, 2.0, 4.0]);
        assert!(matches!(
            sharpness_probe(&p, &o, 1, 0.0, 0.1, &[1e-3]),
            Err(Error::InvalidSpec(_))
        ));
    }
}
