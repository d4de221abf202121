//! One-dimensional rules, tensor-product quadrature and deterministic sums.

use rayon::prelude::*;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n
        let mut z = ((i as f64 + 0.75) / (nf + 0.5) * std::f64::consts::PI).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Rule for one coordinate direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rule1D {
    /// Equispaced trapezoid on a periodic interval.
    Periodic { lo: f64, hi: f64, n: usize },
    /// Gauss–Legendre on `[lo, hi]`; nodes never touch the ends.
    Gauss { lo: f64, hi: f64, n: usize },
    /// Polar angle on `[0, π]`: Gauss–Legendre in `cos θ`, weights divided by
    /// `sin θ` so the density can carry its own sine factor.
    Polar { n: usize },
}

impl Rule1D {
    pub fn nodes_weights(&self) -> (Vec<f64>, Vec<f64>) {
        match *self {
            Rule1D::Periodic { lo, hi, n } => {
                let h = (hi - lo) / n as f64;
                ((0..n).map(|i| lo + i as f64 * h).collect(), vec![h; n])
            }
            Rule1D::Gauss { lo, hi, n } => {
                let (x, w) = gauss_legendre(n);
                let (c, r) = ((hi + lo) / 2.0, (hi - lo) / 2.0);
                (x.iter().map(|t| c + r * t).collect(), w.iter().map(|t| r * t).collect())
            }
            Rule1D::Polar { n } => {
                let (x, w) = gauss_legendre(n);
                let th: Vec<f64> = x.iter().rev().map(|z| z.acos()).collect();
                let w = w.iter().rev().zip(&th).map(|(w, t)| w / t.sin()).collect();
                (th, w)
            }
        }
    }

    pub fn with_nodes(&self, n: usize) -> Rule1D {
        match *self {
            Rule1D::Periodic { lo, hi, .. } => Rule1D::Periodic { lo, hi, n },
            Rule1D::Gauss { lo, hi, .. } => Rule1D::Gauss { lo, hi, n },
            Rule1D::Polar { .. } => Rule1D::Polar { n },
        }
    }

    pub fn len(&self) -> usize {
        match *self {
            Rule1D::Periodic { n, .. } | Rule1D::Gauss { n, .. } | Rule1D::Polar { n } => n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Sum with a fixed binary reduction tree.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n if n <= 8 => v.iter().sum(),
        n => {
            let (a, b) = v.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Nodes and positive weights (including the volume density).
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl Quadrature {
    /// Tensor product of coordinate rules, weights multiplied by `density`.
    pub fn tensor_product<E>(rules: &[Rule1D], density: impl Fn(&[f64]) -> Result<f64, E> + Sync) -> Result<Quadrature, E>
    where
        E: Send,
    {
        let per: Vec<(Vec<f64>, Vec<f64>)> = rules.iter().map(|r| r.nodes_weights()).collect();
        let total: usize = per.iter().map(|p| p.0.len()).product();
        let pts: Vec<(Vec<f64>, f64)> = (0..total)
            .map(|mut k| {
                let mut x = vec![0.0; rules.len()];
                let mut w = 1.0;
                for d in (0..rules.len()).rev() {
                    let m = per[d].0.len();
                    x[d] = per[d].0[k % m];
                    w *= per[d].1[k % m];
                    k /= m;
                }
                (x, w)
            })
            .collect();
        let weights: Vec<f64> = pts.par_iter().map(|(x, w)| density(x).map(|d| d * w)).collect::<Result<_, E>>()?;
        Ok(Quadrature {
            nodes: pts.into_iter().map(|p| p.0).collect(),
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn volume(&self) -> f64 {
        pairwise_sum(&self.weights)
    }

    /// `Σ w_i f(p_i)`; evaluation is parallel, the sum order is fixed.
    pub fn integrate<E: Send>(&self, f: impl Fn(&[f64]) -> Result<f64, E> + Sync) -> Result<f64, E> {
        let terms: Vec<f64> = self
            .nodes
            .par_iter()
            .zip(&self.weights)
            .map(|(x, w)| f(x).map(|v| v * w))
            .collect::<Result<_, E>>()?;
        Ok(pairwise_sum(&terms))
    }

    /// Several integrands at once; `f` returns one value per integrand.
    pub fn integrate_many<E: Send>(&self, k: usize, f: impl Fn(&[f64]) -> Result<Vec<f64>, E> + Sync) -> Result<Vec<f64>, E> {
        let rows: Vec<Vec<f64>> = self.nodes.par_iter().map(|x| f(x)).collect::<Result<_, E>>()?;
        Ok((0..k)
            .map(|j| {
                let terms: Vec<f64> = rows.iter().zip(&self.weights).map(|(r, w)| r[j] * w).collect();
                pairwise_sum(&terms)
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..2 * n {
                let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let want = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((got - want).abs() < 1e-13, "n={n} deg={deg}: {got}");
            }
        }
    }

    #[test]
    fn sphere_area_and_moment() {
        let rules = [
            Rule1D::Gauss {
                lo: 0.0,
                hi: std::f64::consts::PI,
                n: 24,
            },
            Rule1D::Periodic {
                lo: 0.0,
                hi: 2.0 * std::f64::consts::PI,
                n: 8,
            },
        ];
        let q = Quadrature::tensor_product(&rules, |x| Ok::<_, Infallible>(x[0].sin())).unwrap();
        let pi = std::f64::consts::PI;
        assert!((q.volume() - 4.0 * pi).abs() < 1e-12);
        let z2 = q.integrate(|x| Ok::<_, Infallible>(x[0].cos().powi(2))).unwrap();
        assert!((z2 - 4.0 * pi / 3.0).abs() < 1e-12);
        let z = q.integrate(|x| Ok::<_, Infallible>(x[0].cos())).unwrap();
        assert!(z.abs() < 1e-13);
    }

    #[test]
    fn pairwise_sum_is_order_fixed() {
        let v: Vec<f64> = (0..1000).map(|i| 1.0 / (i as f64 + 1.0)).collect();
        assert_eq!(pairwise_sum(&v).to_bits(), pairwise_sum(&v).to_bits());
        assert!((pairwise_sum(&v) - v.iter().sum::<f64>()).abs() < 1e-12);
    }
}
