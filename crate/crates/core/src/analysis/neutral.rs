use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::tolerances;

/// A neutral matrix `L = sum_k U_k J_k V_k`, similar to a block rotation,
/// with the limiting deviation covariance `Phi` of a quantizer with
/// covariance `Psi`.
#[derive(Clone, Debug)]
pub struct NeutralSpec {
    pub r: usize,
    pub u: DMatrix<f64>,
    /// `U^{-1}`; rows `2k, 2k+1` form `V_k`.
    pub v: DMatrix<f64>,
    pub theta: Vec<f64>,
    pub l: DMatrix<f64>,
    pub psi: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub phi: DMatrix<f64>,
    /// `sqrt(Phi) = [sigma_1 U_1, ..., sigma_r U_r] / sqrt(2)`.
    pub phi_root: DMatrix<f64>,
    /// `Phi^{-1/2} = sqrt(Phi)^{-1}`.
    pub phi_root_inv: DMatrix<f64>,
}

fn rotation_block(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

fn distinct_spectrum(theta: &[f64]) -> Result<()> {
    let tau = std::f64::consts::TAU;
    let eps = tolerances::INTEGRALITY;
    for (i, &a) in theta.iter().enumerate() {
        if !(a > 0.0 && a < tau) || (a - std::f64::consts::PI).abs() < eps {
            return Err(Error::InvalidInput(format!("angle {a} must lie in (0, 2 pi) and differ from pi")));
        }
        for &b in &theta[..i] {
            if (a - b).abs() < eps || (a + b - tau).abs() < eps {
                return Err(Error::InvalidInput(format!("angles {b} and {a} give a repeated eigenvalue")));
            }
        }
    }
    Ok(())
}

pub fn neutral_build(u: &DMatrix<f64>, theta: &[f64], psi: &DMatrix<f64>) -> Result<NeutralSpec> {
    let n = u.nrows();
    if !u.is_square() || !n.is_multiple_of(2) || n == 0 {
        return Err(Error::InvalidInput(format!("U must be square of even size, got {}x{}", u.nrows(), u.ncols())));
    }
    let r = n / 2;
    if theta.len() != r {
        return Err(Error::DimensionMismatch { expected: r, got: theta.len() });
    }
    if psi.shape() != (n, n) {
        return Err(Error::DimensionMismatch { expected: n, got: psi.nrows() });
    }
    distinct_spectrum(theta)?;
    let v = u.clone().try_inverse().ok_or_else(|| Error::Singular("U has no inverse".into()))?;
    let mut j = DMatrix::zeros(n, n);
    for (k, &t) in theta.iter().enumerate() {
        j.view_mut((2 * k, 2 * k), (2, 2)).copy_from(&rotation_block(t));
    }
    let l = u * &j * &v;
    let mut sum = DMatrix::zeros(n, n);
    for (k, &t) in theta.iter().enumerate() {
        sum += u.columns(2 * k, 2) * rotation_block(t) * v.rows(2 * k, 2);
    }
    if (&l - sum).amax() > tolerances::INVERSE_RESIDUAL {
        return Err(Error::Consistency("block decomposition of L does not reassemble".into()));
    }
    let sigma: Vec<f64> = (0..r)
        .map(|k| {
            let vk = v.rows(2 * k, 2);
            (vk * psi * vk.transpose()).trace().sqrt()
        })
        .collect();
    let mut phi = DMatrix::zeros(n, n);
    let mut phi_root = DMatrix::zeros(n, n);
    for k in 0..r {
        let uk = u.columns(2 * k, 2);
        phi += uk * uk.transpose() * (0.5 * sigma[k] * sigma[k]);
        phi_root.columns_mut(2 * k, 2).copy_from(&(uk * (sigma[k] / 2f64.sqrt())));
    }
    if phi.clone().cholesky().is_none() {
        return Err(Error::NotPositiveDefinite);
    }
    let phi_root_inv = phi_root
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("sqrt(Phi) has no inverse".into()))?;
    let spec = NeutralSpec { r, u: u.clone(), v, theta: theta.to_vec(), l, psi: psi.clone(), sigma, phi, phi_root, phi_root_inv };
    spec.validate()?;
    Ok(spec)
}

impl NeutralSpec {
    pub fn dim(&self) -> usize {
        2 * self.r
    }

    /// `Phi^{-1/2} L sqrt(Phi)`, which equals the block rotation `J`.
    pub fn normal_form(&self) -> DMatrix<f64> {
        &self.phi_root_inv * &self.l * &self.phi_root
    }

    fn validate(&self) -> Result<()> {
        let tol = tolerances::NEUTRAL_IDENTITY;
        let invariance = (&self.l * &self.phi * self.l.transpose() - &self.phi).amax();
        if invariance > tol {
            return Err(Error::Consistency(format!("|L Phi L^T - Phi| = {invariance:e}")));
        }
        let root = (&self.phi_root * self.phi_root.transpose() - &self.phi).amax();
        if root > tolerances::INVERSE_RESIDUAL {
            return Err(Error::Consistency(format!("|sqrt(Phi) sqrt(Phi)^T - Phi| = {root:e}")));
        }
        let m = self.normal_form();
        for a in 0..self.r {
            for b in 0..self.r {
                let block = m.view((2 * a, 2 * b), (2, 2));
                let bad = if a == b {
                    (block.transpose() * block - DMatrix::<f64>::identity(2, 2)).amax()
                } else {
                    block.amax()
                };
                if bad > tol {
                    return Err(Error::Consistency(format!(
                        "Phi^(-1/2) L sqrt(Phi) block ({a},{b}) is off by {bad:e}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `Phi_N = (1/N) sum_{l=1}^N L^{-l} Psi L^{-l}^T`.
    pub fn phi_partial(&self, n: usize) -> Result<DMatrix<f64>> {
        if n == 0 {
            return Err(Error::InvalidInput("N must be positive".into()));
        }
        let l_inv = &self.u * {
            let mut j = DMatrix::zeros(self.dim(), self.dim());
            for (k, &t) in self.theta.iter().enumerate() {
                j.view_mut((2 * k, 2 * k), (2, 2)).copy_from(&rotation_block(-t));
            }
            j
        } * &self.v;
        let mut power = DMatrix::identity(self.dim(), self.dim());
        let mut acc = DMatrix::zeros(self.dim(), self.dim());
        for _ in 0..n {
            power = &power * &l_inv;
            acc += &power * &self.psi * power.transpose();
        }
        Ok(acc / n as f64)
    }
}
