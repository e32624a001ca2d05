use crate::error::{Result, TuckerError};

/// Mode sizes `I_1..I_N` of a tensor.
///
/// Every size is positive and the element count fits in `usize`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Shape {
    dims: Vec<usize>,
}

impl Shape {
    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.is_empty() {
            return Err(TuckerError::InvalidShape("tensor order must be at least 1".into()));
        }
        if let Some(pos) = dims.iter().position(|&d| d == 0) {
            return Err(TuckerError::InvalidShape(format!("mode {pos} has size 0")));
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| TuckerError::InvalidShape(format!("element count of {dims:?} overflows")))?;
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self, mode: usize) -> usize {
        self.dims[mode]
    }

    /// Total number of elements.
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Product of all mode sizes except `mode`.
    pub fn len_without(&self, mode: usize) -> usize {
        self.dims.iter().enumerate().filter(|&(k, _)| k != mode).map(|(_, &d)| d).product()
    }

    /// Copy of this shape with mode `mode` resized.
    pub fn with_dim(&self, mode: usize, size: usize) -> Result<Self> {
        let mut dims = self.dims.clone();
        dims[mode] = size;
        Self::new(dims)
    }

    pub fn check_mode(&self, mode: usize) -> Result<()> {
        if mode < self.order() {
            Ok(())
        } else {
            Err(TuckerError::ModeOutOfRange { mode, order: self.order() })
        }
    }

    /// Linear offset of a zero-based multi-index, first mode fastest.
    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.order());
        let mut offset = 0;
        let mut stride = 1;
        for (&i, &d) in index.iter().zip(&self.dims) {
            debug_assert!(i < d);
            offset += i * stride;
            stride *= d;
        }
        offset
    }

    /// Inverse of [`Shape::offset`].
    pub fn index_of(&self, mut offset: usize, index: &mut [usize]) {
        for (slot, &d) in index.iter_mut().zip(&self.dims) {
            *slot = offset % d;
            offset /= d;
        }
    }

    /// Column of the mode-`mode` unfolding holding `index`:
    /// `j = sum_{k != n} i_k * J_k` with `J_k = prod_{m != n, m < k} I_m`.
    pub fn unfolding_column(&self, mode: usize, index: &[usize]) -> usize {
        let mut col = 0;
        let mut stride = 1;
        for (k, (&i, &d)) in index.iter().zip(&self.dims).enumerate() {
            if k == mode {
                continue;
            }
            col += i * stride;
            stride *= d;
        }
        col
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        write!(f, "{}", parts.join("x"))
    }
}
