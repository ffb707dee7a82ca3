//! su(2)-valued 1-forms and 2-forms on R^4.
//!
//! Lie algebra values are imaginary quaternions stored as `Vector3`. For
//! imaginary `a, b` the quaternion product is `ab = -a.b + a x b`, so
//! `[a, b] = 2 a x b`.

use std::ops::{Add, Mul, Sub};

use nalgebra::{Matrix3, Vector3};

use crate::algebra::CurvatureMatrix;

/// Cyclic triples `(c, a, b)` pairing `dx0 dx_c` with `dx_a dx_b`.
pub const CYCLIC: [(usize, usize, usize); 3] = [(1, 2, 3), (2, 3, 1), (3, 1, 2)];

/// Components `A_mu`, `mu = 0..4`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneForm(pub [Vector3<f64>; 4]);

impl OneForm {
    pub fn zero() -> Self {
        OneForm([Vector3::zeros(); 4])
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt()
    }

    /// Left multiplication by a rotation on every component.
    pub fn rotate(&self, r: &Matrix3<f64>) -> Self {
        OneForm(self.0.map(|v| r * v))
    }

    /// `A ^ A`, i.e. `(A ^ A)_{mu nu} = [A_mu, A_nu] = 2 A_mu x A_nu`.
    pub fn wedge_self(&self) -> TwoForm {
        let a = &self.0;
        TwoForm::from_fn(|m, n| a[m].cross(&a[n]) * 2.0)
    }

    /// `A ^ B + B ^ A`.
    pub fn wedge_sym(&self, other: &OneForm) -> TwoForm {
        let (a, b) = (&self.0, &other.0);
        TwoForm::from_fn(|m, n| (a[m].cross(&b[n]) - a[n].cross(&b[m])) * 2.0)
    }
}

impl Add for OneForm {
    type Output = OneForm;
    fn add(self, o: OneForm) -> OneForm {
        OneForm(std::array::from_fn(|m| self.0[m] + o.0[m]))
    }
}

impl Sub for OneForm {
    type Output = OneForm;
    fn sub(self, o: OneForm) -> OneForm {
        OneForm(std::array::from_fn(|m| self.0[m] - o.0[m]))
    }
}

impl Mul<f64> for OneForm {
    type Output = OneForm;
    fn mul(self, s: f64) -> OneForm {
        OneForm(self.0.map(|v| v * s))
    }
}

/// `(df ^ A)_{mu nu} = d_mu f A_nu - d_nu f A_mu` for a scalar gradient `df`.
pub fn scalar_wedge(df: &[f64; 4], a: &OneForm) -> TwoForm {
    TwoForm::from_fn(|m, n| a.0[n] * df[m] - a.0[m] * df[n])
}

/// Antisymmetric components `F_{mu nu}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoForm(pub [[Vector3<f64>; 4]; 4]);

impl TwoForm {
    pub fn zero() -> Self {
        TwoForm([[Vector3::zeros(); 4]; 4])
    }

    /// Builds from `f(mu, nu)` evaluated for `mu < nu`, antisymmetrizing.
    pub fn from_fn(mut f: impl FnMut(usize, usize) -> Vector3<f64>) -> Self {
        let mut out = TwoForm::zero();
        for m in 0..4 {
            for n in (m + 1)..4 {
                let v = f(m, n);
                out.0[m][n] = v;
                out.0[n][m] = -v;
            }
        }
        out
    }

    pub fn get(&self, m: usize, n: usize) -> Vector3<f64> {
        self.0[m][n]
    }

    /// `d A + A ^ A` from `dA[mu][nu] = d_mu A_nu`.
    pub fn curvature(jac: &[[Vector3<f64>; 4]; 4], a: &OneForm) -> Self {
        TwoForm::from_fn(|m, n| jac[m][n] - jac[n][m] + a.0[m].cross(&a.0[n]) * 2.0)
    }

    /// The ASD matrix: column `c` is `(F_{0c} - F_{ab}) / 4`.
    pub fn asd_matrix(&self) -> CurvatureMatrix {
        let mut m = Matrix3::zeros();
        for (col, &(c, a, b)) in CYCLIC.iter().enumerate() {
            m.set_column(col, &((self.0[0][c] - self.0[a][b]) * 0.25));
        }
        CurvatureMatrix(m)
    }

    /// The self-dual counterpart: column `c` is `(F_{0c} + F_{ab}) / 4`.
    pub fn sd_matrix(&self) -> Matrix3<f64> {
        let mut m = Matrix3::zeros();
        for (col, &(c, a, b)) in CYCLIC.iter().enumerate() {
            m.set_column(col, &((self.0[0][c] + self.0[a][b]) * 0.25));
        }
        m
    }

    /// The ASD 2-form whose [`asd_matrix`](Self::asd_matrix) is `p`.
    pub fn from_asd_matrix(p: &CurvatureMatrix) -> Self {
        let mut out = TwoForm::zero();
        for (col, &(c, a, b)) in CYCLIC.iter().enumerate() {
            let v = p.0.column(col) * 2.0;
            out.0[0][c] = v;
            out.0[c][0] = -v;
            out.0[a][b] = -v;
            out.0[b][a] = v;
        }
        out
    }

    /// `|F|^2 = sum over all ordered (mu, nu) of |F_{mu nu}|^2`, the trace norm
    /// in which the unit instanton has `|F|^2 = 48` at its center.
    pub fn norm_sq(&self) -> f64 {
        let mut s = 0.0;
        for m in 0..4 {
            for n in 0..4 {
                s += self.0[m][n].norm_squared();
            }
        }
        s
    }

    pub fn max_abs_diff(&self, o: &TwoForm) -> f64 {
        let mut d: f64 = 0.0;
        for m in 0..4 {
            for n in 0..4 {
                d = d.max((self.0[m][n] - o.0[m][n]).abs().max());
            }
        }
        d
    }

    pub fn rotate(&self, r: &Matrix3<f64>) -> Self {
        TwoForm(self.0.map(|row| row.map(|v| r * v)))
    }
}

impl Add for TwoForm {
    type Output = TwoForm;
    fn add(self, o: TwoForm) -> TwoForm {
        TwoForm(std::array::from_fn(|m| std::array::from_fn(|n| self.0[m][n] + o.0[m][n])))
    }
}

impl Sub for TwoForm {
    type Output = TwoForm;
    fn sub(self, o: TwoForm) -> TwoForm {
        TwoForm(std::array::from_fn(|m| std::array::from_fn(|n| self.0[m][n] - o.0[m][n])))
    }
}

impl Mul<f64> for TwoForm {
    type Output = TwoForm;
    fn mul(self, s: f64) -> TwoForm {
        TwoForm(self.0.map(|row| row.map(|v| v * s)))
    }
}

/// Central-difference curvature `dA + A ^ A` of a connection given pointwise.
pub fn finite_difference_curvature<F>(conn: F, x: [f64; 4], h: f64) -> TwoForm
where
    F: Fn([f64; 4]) -> OneForm,
{
    let mut jac = [[Vector3::zeros(); 4]; 4];
    for (m, row) in jac.iter_mut().enumerate() {
        let mut xp = x;
        let mut xm = x;
        xp[m] += h;
        xm[m] -= h;
        let (ap, am) = (conn(xp), conn(xm));
        for n in 0..4 {
            row[n] = (ap.0[n] - am.0[n]) / (2.0 * h);
        }
    }
    TwoForm::curvature(&jac, &conn(x))
}
