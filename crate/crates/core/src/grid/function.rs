use crate::scalar::Real;

/// Piecewise-constant grid function: one `R^m` value per cell, stored flat.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction<S> {
    m: usize,
    values: Vec<S>,
}

impl<S: Real> GridFunction<S> {
    /// All entries NaN until filled.
    pub fn undefined(n_cells: usize, m: usize) -> Self {
        Self { m, values: vec![S::nan(); n_cells * m] }
    }

    pub fn constant(n_cells: usize, w: &[S]) -> Self {
        let m = w.len();
        let mut values = Vec::with_capacity(n_cells * m);
        for _ in 0..n_cells {
            values.extend_from_slice(w);
        }
        Self { m, values }
    }

    pub fn from_scalar_values(values: Vec<S>) -> Self {
        Self { m: 1, values }
    }

    pub fn from_flat(m: usize, values: Vec<S>) -> Self {
        assert!(m > 0 && values.len().is_multiple_of(m), "flat storage must be a multiple of m");
        Self { m, values }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_cells(&self) -> usize {
        self.values.len() / self.m
    }

    #[inline]
    pub fn get(&self, cell: usize) -> &[S] {
        &self.values[cell * self.m..(cell + 1) * self.m]
    }

    #[inline]
    pub fn get_mut(&mut self, cell: usize) -> &mut [S] {
        &mut self.values[cell * self.m..(cell + 1) * self.m]
    }

    #[inline]
    pub fn set(&mut self, cell: usize, w: &[S]) {
        self.get_mut(cell).copy_from_slice(w);
    }

    /// First component of a cell value; convenient for scalar laws.
    #[inline]
    pub fn scalar(&self, cell: usize) -> S {
        self.values[cell * self.m]
    }

    pub fn is_defined(&self, cell: usize) -> bool {
        self.get(cell).iter().all(|v| !v.is_nan())
    }

    pub fn as_flat(&self) -> &[S] {
        &self.values
    }

    /// Pointwise map into a new grid function of size `m_out`.
    pub fn map<F: FnMut(&[S], &mut [S])>(&self, m_out: usize, mut f: F) -> Self {
        let n = self.n_cells();
        let mut out = Self { m: m_out, values: vec![S::zero(); n * m_out] };
        for c in 0..n {
            let (src, dst) = (self.get(c), &mut out.values[c * m_out..(c + 1) * m_out]);
            f(src, dst);
        }
        out
    }
}
