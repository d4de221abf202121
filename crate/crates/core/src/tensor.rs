//! Dense component arrays indexed by coordinate slots.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tensor<T> {
    dim: usize,
    rank: usize,
    data: Vec<T>,
}

impl<T: Clone> Tensor<T> {
    pub fn filled(dim: usize, rank: usize, value: T) -> Self {
        Tensor {
            dim,
            rank,
            data: vec![value; dim.pow(rank as u32)],
        }
    }
}

impl<T> Tensor<T> {
    pub fn from_fn(dim: usize, rank: usize, mut f: impl FnMut(&[usize]) -> T) -> Self {
        let len = dim.pow(rank as u32);
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; rank];
        for _ in 0..len {
            data.push(f(&idx));
            for slot in idx.iter_mut().rev() {
                *slot += 1;
                if *slot < dim {
                    break;
                }
                *slot = 0;
            }
        }
        Tensor { dim, rank, data }
    }

    pub fn try_from_fn<E>(dim: usize, rank: usize, mut f: impl FnMut(&[usize]) -> Result<T, E>) -> Result<Self, E> {
        let mut err = None;
        let t = Tensor::from_fn(dim, rank, |i| {
            if err.is_some() {
                return None;
            }
            match f(i) {
                Ok(v) => Some(v),
                Err(e) => {
                    err = Some(e);
                    None
                }
            }
        });
        match err {
            Some(e) => Err(e),
            None => Ok(Tensor {
                dim: t.dim,
                rank: t.rank,
                data: t.data.into_iter().map(|v| v.expect("filled")).collect(),
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, &i| {
            debug_assert!(i < self.dim);
            acc * self.dim + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> &T {
        &self.data[self.offset(idx)]
    }

    pub fn get_mut(&mut self, idx: &[usize]) -> &mut T {
        let o = self.offset(idx);
        &mut self.data[o]
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Tensor<U> {
        Tensor {
            dim: self.dim,
            rank: self.rank,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn zip_map<U, V>(&self, other: &Tensor<U>, f: impl Fn(&T, &U) -> V) -> Tensor<V> {
        assert_eq!((self.dim, self.rank), (other.dim, other.rank));
        Tensor {
            dim: self.dim,
            rank: self.rank,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(a, b)).collect(),
        }
    }
}

impl<T: Copy> Tensor<T> {
    pub fn at(&self, idx: &[usize]) -> T {
        self.data[self.offset(idx)]
    }
}

impl Tensor<f64> {
    pub fn zeros(dim: usize, rank: usize) -> Self {
        Tensor::filled(dim, rank, 0.0)
    }

    pub fn from_vec(dim: usize, rank: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), dim.pow(rank as u32));
        Tensor { dim, rank, data }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_abs_diff(&self, other: &Tensor<f64>) -> f64 {
        self.zip_map(other, |a, b| (a - b).abs()).max_abs()
    }

    pub fn scale(&self, s: f64) -> Tensor<f64> {
        self.map(|x| x * s)
    }

    /// Rank-2 components as nested rows.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        assert_eq!(self.rank, 2);
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_layout() {
        let t = Tensor::from_fn(3, 2, |i| (10 * i[0] + i[1]) as f64);
        assert_eq!(t.at(&[2, 1]), 21.0);
        assert_eq!(t.data()[5], 12.0);
        assert_eq!(t.rows()[1], vec![10.0, 11.0, 12.0]);
    }

    #[test]
    fn try_from_fn_stops_on_error() {
        let r: Result<Tensor<f64>, &str> = Tensor::try_from_fn(2, 2, |i| if i == [1, 0] { Err("bad") } else { Ok(1.0) });
        assert_eq!(r, Err("bad"));
    }
}
