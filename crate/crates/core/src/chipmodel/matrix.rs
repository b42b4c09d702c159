use std::ops::Mul;

use num_complex::Complex64;

use crate::qstate::{StateVector, DIM};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub type Mat2 = [[Complex64; 2]; 2];

/// Field transfer matrix of a four-rail chip.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferMatrix(pub [[Complex64; DIM]; DIM]);

impl TransferMatrix {
    pub fn identity() -> Self {
        let mut m = [[ZERO; DIM]; DIM];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = ONE;
        }
        TransferMatrix(m)
    }

    pub fn diagonal(d: [Complex64; DIM]) -> Self {
        let mut m = [[ZERO; DIM]; DIM];
        for i in 0..DIM {
            m[i][i] = d[i];
        }
        TransferMatrix(m)
    }

    /// Identity with a 2×2 block acting on rails `a` and `b`.
    pub fn embed(block: &Mat2, a: usize, b: usize) -> Self {
        let mut m = Self::identity();
        m.0[a][a] = block[0][0];
        m.0[a][b] = block[0][1];
        m.0[b][a] = block[1][0];
        m.0[b][b] = block[1][1];
        m
    }

    pub fn adjoint(&self) -> Self {
        let mut m = [[ZERO; DIM]; DIM];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.0[j][i].conj();
            }
        }
        TransferMatrix(m)
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.0[row][col]
    }

    /// Applies the matrix to a field vector. Panics if `psi` is not four-dimensional.
    pub fn apply(&self, psi: &StateVector) -> StateVector {
        let x = psi.amplitudes();
        assert_eq!(x.len(), DIM, "transfer matrix expects a {DIM}-mode field");
        let out = self
            .0
            .iter()
            .map(|row| row.iter().zip(x).map(|(m, v)| m * v).sum())
            .collect();
        StateVector::from_amplitudes(out)
    }

    /// `max |(U†U − I)_ij|`.
    pub fn unitarity_error(&self) -> f64 {
        let g = self.adjoint() * *self;
        let mut worst = 0.0f64;
        for i in 0..DIM {
            for j in 0..DIM {
                let expected = if i == j { ONE } else { ZERO };
                worst = worst.max((g.0[i][j] - expected).norm());
            }
        }
        worst
    }
}

impl Mul for TransferMatrix {
    type Output = TransferMatrix;

    fn mul(self, rhs: TransferMatrix) -> TransferMatrix {
        let mut m = [[ZERO; DIM]; DIM];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..DIM).map(|k| self.0[i][k] * rhs.0[k][j]).sum();
            }
        }
        TransferMatrix(m)
    }
}

/// Transfer matrix of a Mach–Zehnder interferometer with internal phase `theta`.
///
/// Two 50/50 couplers `C = [[1, i], [i, 1]]/√2` around a phase on the upper
/// arm: `C · diag(e^{iθ}, 1) · C`. `θ = 0` crosses, `θ = π` is a bar state and
/// `θ = π/2` is a 3 dB splitter.
pub fn mzi_transfer(theta: f64) -> Mat2 {
    let e = Complex64::from_polar(1.0, theta);
    let i = Complex64::i();
    let half = 0.5;
    [
        [(e - ONE) * half, i * (e + ONE) * half],
        [i * (e + ONE) * half, (ONE - e) * half],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    #[test]
    fn mzi_cross_at_zero() {
        let m = mzi_transfer(0.0);
        let i = Complex64::i();
        assert!((m[0][0]).norm() < 1e-15);
        assert!((m[1][1]).norm() < 1e-15);
        assert!((m[0][1] - i).norm() < 1e-15);
        assert!((m[1][0] - i).norm() < 1e-15);
    }

    #[test]
    fn mzi_bar_at_pi() {
        let m = mzi_transfer(PI);
        assert!((m[0][0].norm_sqr() - 1.0).abs() < 1e-15);
        assert!((m[1][1].norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mzi_splitter_at_half_pi() {
        let m = mzi_transfer(PI / 2.0);
        for row in &m {
            for v in row {
                assert!((v.norm() - FRAC_1_SQRT_2).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn mzi_matches_closed_form() {
        // i e^{iθ/2} [[sin θ/2, cos θ/2], [cos θ/2, −sin θ/2]]
        for k in 0..64 {
            let theta = -3.0 + k as f64 * 0.1;
            let m = mzi_transfer(theta);
            let pre = Complex64::i() * Complex64::from_polar(1.0, theta / 2.0);
            let (s, c) = (theta / 2.0).sin_cos();
            let expect = [[pre * s, pre * c], [pre * c, -pre * s]];
            for r in 0..2 {
                for col in 0..2 {
                    assert!((m[r][col] - expect[r][col]).norm() < 1e-14);
                }
            }
        }
    }
}
