//! Small dense complex matrices for the channel dimension (n ≤ 4 in
//! practice). Hand-rolled so the propagator inner loop runs without
//! allocations: every operation writes into a caller-supplied buffer.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Square complex matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix {
            n,
            data: vec![Complex64::ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::ONE;
        }
        m
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let mut m = CMatrix::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn from_rows(n: usize, rows: &[Complex64]) -> Self {
        assert_eq!(rows.len(), n * n);
        CMatrix {
            n,
            data: rows.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn fill_zero(&mut self) {
        self.data.fill(Complex64::ZERO);
    }

    pub fn set_identity(&mut self) {
        self.fill_zero();
        for i in 0..self.n {
            self[(i, i)] = Complex64::ONE;
        }
    }

    pub fn copy_from(&mut self, other: &CMatrix) {
        debug_assert_eq!(self.n, other.n);
        self.data.copy_from_slice(&other.data);
    }

    /// self = a * b. `self` must not alias either operand.
    pub fn mul_into(&mut self, a: &CMatrix, b: &CMatrix) {
        let n = self.n;
        debug_assert!(a.n == n && b.n == n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = Complex64::ZERO;
                for k in 0..n {
                    acc += a.data[i * n + k] * b.data[k * n + j];
                }
                self.data[i * n + j] = acc;
            }
        }
    }

    pub fn sub_into(&mut self, a: &CMatrix, b: &CMatrix) {
        for (dst, (x, y)) in self.data.iter_mut().zip(a.data.iter().zip(&b.data)) {
            *dst = x - y;
        }
    }

    pub fn sub_assign(&mut self, other: &CMatrix) {
        for (dst, x) in self.data.iter_mut().zip(&other.data) {
            *dst -= x;
        }
    }

    pub fn add_assign(&mut self, other: &CMatrix) {
        for (dst, x) in self.data.iter_mut().zip(&other.data) {
            *dst += x;
        }
    }

    pub fn scale(&mut self, c: Complex64) {
        for x in &mut self.data {
            *x *= c;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius-like max-entry distance to `other`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// In-place LU factorization with partial pivoting.
    /// Returns the permutation sign, or an error if a pivot vanishes.
    pub fn lu_in_place(&mut self) -> Result<f64> {
        let n = self.n;
        let mut sign = 1.0;
        for col in 0..n {
            // pivot search
            let mut p = col;
            let mut best = self.data[col * n + col].norm();
            for row in col + 1..n {
                let v = self.data[row * n + col].norm();
                if v > best {
                    best = v;
                    p = row;
                }
            }
            if best == 0.0 {
                return Err(Error::SingularPropagation { node: usize::MAX });
            }
            if p != col {
                for j in 0..n {
                    self.data.swap(col * n + j, p * n + j);
                }
                sign = -sign;
            }
            let piv = self.data[col * n + col];
            for row in col + 1..n {
                let f = self.data[row * n + col] / piv;
                self.data[row * n + col] = f;
                for j in col + 1..n {
                    let sub = f * self.data[col * n + j];
                    self.data[row * n + j] -= sub;
                }
            }
        }
        Ok(sign)
    }

    /// Diagonal of an LU-factored matrix (the pivots).
    pub fn lu_pivots(&self) -> impl Iterator<Item = Complex64> + '_ {
        (0..self.n).map(move |i| self.data[i * self.n + i])
    }

    /// Determinant of a fresh (non-factored) copy of `self`.
    pub fn det(&self) -> Complex64 {
        let mut lu = self.clone();
        match lu.lu_in_place() {
            Ok(sign) => lu
                .lu_pivots()
                .fold(Complex64::new(sign, 0.0), |acc, p| acc * p),
            Err(_) => Complex64::ZERO,
        }
    }

    /// inv(self) * rhs written into `rhs`, using an already LU-factored self.
    /// The factorization comes from `lu_in_place`; pivoting is re-applied
    /// through the stored row order, so this must be called on the factored
    /// matrix produced by that routine (which folded the permutation in).
    fn lu_solve_in_place(&self, rhs: &mut CMatrix) {
        let n = self.n;
        // forward substitution with unit lower triangle
        for col in 0..n {
            for i in 0..n {
                let mut acc = rhs.data[i * n + col];
                for k in 0..i {
                    acc -= self.data[i * n + k] * rhs.data[k * n + col];
                }
                rhs.data[i * n + col] = acc;
            }
            // back substitution
            for i in (0..n).rev() {
                let mut acc = rhs.data[i * n + col];
                for k in i + 1..n {
                    acc -= self.data[i * n + k] * rhs.data[k * n + col];
                }
                rhs.data[i * n + col] = acc / self.data[i * n + i];
            }
        }
    }

    /// out = inv(self) * rhs. Overwrites `self` with its LU factors and
    /// applies the row permutation to a scratch copy of `rhs`.
    pub fn solve_into(&mut self, rhs: &CMatrix, out: &mut CMatrix) -> Result<Complex64> {
        let n = self.n;
        // Track the permutation explicitly so rhs rows can be reordered.
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        for col in 0..n {
            let mut p = col;
            let mut best = self.data[col * n + col].norm();
            for row in col + 1..n {
                let v = self.data[row * n + col].norm();
                if v > best {
                    best = v;
                    p = row;
                }
            }
            if best == 0.0 {
                return Err(Error::SingularPropagation { node: usize::MAX });
            }
            if p != col {
                for j in 0..n {
                    self.data.swap(col * n + j, p * n + j);
                }
                perm.swap(col, p);
                sign = -sign;
            }
            let piv = self.data[col * n + col];
            for row in col + 1..n {
                let f = self.data[row * n + col] / piv;
                self.data[row * n + col] = f;
                for j in col + 1..n {
                    let sub = f * self.data[col * n + j];
                    self.data[row * n + j] -= sub;
                }
            }
        }
        for (i, &src) in perm.iter().enumerate() {
            for j in 0..n {
                out.data[i * n + j] = rhs.data[src * n + j];
            }
        }
        self.lu_solve_in_place(out);
        let det = self
            .lu_pivots()
            .fold(Complex64::new(sign, 0.0), |acc, p| acc * p);
        Ok(det)
    }

    /// out = inv(self); self is overwritten with LU factors.
    pub fn inverse_into(&mut self, out: &mut CMatrix) -> Result<Complex64> {
        let id = CMatrix::identity(self.n);
        self.solve_into(&id, out)
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

/// Complex product kept in range by renormalizing the mantissa after every
/// factor; used when balancing k-powers against LU pivots.
#[derive(Debug, Clone, Copy)]
pub struct ScaledProduct {
    mantissa: Complex64,
    exponent: i64,
}

impl ScaledProduct {
    pub fn one() -> Self {
        ScaledProduct {
            mantissa: Complex64::ONE,
            exponent: 0,
        }
    }

    pub fn mul(&mut self, z: Complex64) {
        self.mantissa *= z;
        self.renorm();
    }

    pub fn div(&mut self, z: Complex64) {
        self.mantissa /= z;
        self.renorm();
    }

    fn renorm(&mut self) {
        let m = self.mantissa.norm();
        if m == 0.0 || !m.is_finite() {
            return;
        }
        let e = m.log2().floor() as i64;
        if e.abs() > 16 {
            let s = (-e as f64).exp2();
            self.mantissa *= s;
            self.exponent += e;
        }
    }

    pub fn value(&self) -> Complex64 {
        self.mantissa * (self.exponent as f64).exp2()
    }

    /// Mantissa alone; combined with `log2_abs` this represents values
    /// far outside the double-precision range.
    pub fn mantissa(&self) -> Complex64 {
        self.mantissa
    }

    pub fn log2_abs(&self) -> f64 {
        self.exponent as f64 + self.mantissa.norm().log2()
    }

    /// Phase factor value/|value|.
    pub fn phase(&self) -> Complex64 {
        let n = self.mantissa.norm();
        if n == 0.0 {
            Complex64::ZERO
        } else {
            self.mantissa / n
        }
    }
}
