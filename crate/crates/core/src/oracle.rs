//! Curvature from nested finite differences of metric values.
//!
//! Shares nothing with the jet pipeline except the [`Tensor`] container: the
//! metric is sampled as plain numbers and every derivative is a central
//! difference of the previous level.

use crate::fd::{directional, Stencil};
use crate::tensor::Tensor;

/// Step paired with the default 8th-order stencil.
pub const DEFAULT_STEP: f64 = 0.02;

pub type MetricFn<'a> = dyn Fn(&[f64]) -> Vec<f64> + Sync + 'a;

#[derive(Debug, Clone)]
pub struct OracleCurvature {
    pub christoffel: Tensor<f64>,
    pub riemann: Tensor<f64>,
    pub ricci: Tensor<f64>,
    pub scalar: f64,
    pub grad_scalar: Vec<f64>,
    pub hess_scalar: Tensor<f64>,
    pub lap_scalar: f64,
    pub nabla_ricci: Tensor<f64>,
    pub lap_ricci: Tensor<f64>,
    pub schouten: Option<Tensor<f64>>,
    pub cotton: Option<Tensor<f64>>,
    pub weyl: Option<Tensor<f64>>,
    pub bach: Option<Tensor<f64>>,
}

pub struct Oracle<'a> {
    metric: &'a MetricFn<'a>,
    n: usize,
    h: f64,
    stencil: Stencil,
}

struct L1 {
    g: Tensor<f64>,
    ginv: Tensor<f64>,
    gamma: Tensor<f64>,
}

struct L2 {
    l1: L1,
    riemann: Tensor<f64>,
    ricci: Tensor<f64>,
    scalar: f64,
    schouten: Tensor<f64>,
}

struct L3 {
    l2: L2,
    nabla_ricci: Tensor<f64>,
    grad_scalar: Tensor<f64>,
    cotton: Tensor<f64>,
}

fn inverse(g: &Tensor<f64>) -> Tensor<f64> {
    // Gauss–Jordan with partial pivoting
    let n = g.dim();
    let mut a = g.data().to_vec();
    let mut inv: Vec<f64> = (0..n * n).map(|k| if k / n == k % n { 1.0 } else { 0.0 }).collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[x * n + c].abs().total_cmp(&a[y * n + c].abs())).unwrap();
        for k in 0..n {
            a.swap(p * n + k, c * n + k);
            inv.swap(p * n + k, c * n + k);
        }
        let d = a[c * n + c];
        for k in 0..n {
            a[c * n + k] /= d;
            inv[c * n + k] /= d;
        }
        for r in 0..n {
            if r != c {
                let f = a[r * n + c];
                for k in 0..n {
                    a[r * n + k] -= f * a[c * n + k];
                    inv[r * n + k] -= f * inv[c * n + k];
                }
            }
        }
    }
    Tensor::from_vec(n, 2, inv)
}

/// `∇_m T_{i…}` from values and coordinate derivatives `dt[m]`.
fn cov(t: &Tensor<f64>, dt: &[Tensor<f64>], gamma: &Tensor<f64>) -> Tensor<f64> {
    let n = t.dim();
    let r = t.rank();
    Tensor::from_fn(n, r + 1, |ix| {
        let m = ix[0];
        let rest = &ix[1..];
        let mut v = dt[m].at(rest);
        let mut moved = rest.to_vec();
        for s in 0..r {
            for p in 0..n {
                moved[s] = p;
                v -= gamma.at(&[p, m, rest[s]]) * t.at(&moved);
            }
            moved[s] = rest[s];
        }
        v
    })
}

fn split(v: &[f64], sizes: &[(usize, usize)]) -> Vec<Tensor<f64>> {
    let mut out = Vec::new();
    let mut at = 0;
    for &(n, rank) in sizes {
        let len = n.pow(rank as u32);
        out.push(Tensor::from_vec(n, rank, v[at..at + len].to_vec()));
        at += len;
    }
    out
}

impl<'a> Oracle<'a> {
    /// `metric` returns the `n×n` components row-major.
    pub fn new(metric: &'a MetricFn<'a>, n: usize, h: f64) -> Self {
        Oracle {
            metric,
            n,
            h,
            stencil: Stencil::Eighth,
        }
    }

    pub fn with_stencil(mut self, stencil: Stencil) -> Self {
        self.stencil = stencil;
        self
    }

    fn d<F: Fn(&[f64]) -> Vec<f64>>(&self, f: F, p: &[f64], m: usize) -> Vec<f64> {
        directional(&f, p, m, self.stencil, self.h)
    }

    fn l1(&self, p: &[f64]) -> L1 {
        let n = self.n;
        let g = Tensor::from_vec(n, 2, (self.metric)(p));
        let ginv = inverse(&g);
        let dg: Vec<Tensor<f64>> = (0..n).map(|m| Tensor::from_vec(n, 2, self.d(|q| (self.metric)(q), p, m))).collect();
        let gamma = Tensor::from_fn(n, 3, |ix| {
            let (k, i, j) = (ix[0], ix[1], ix[2]);
            let mut v = 0.0;
            for l in 0..n {
                v += 0.5 * ginv.at(&[k, l]) * (dg[i].at(&[j, l]) + dg[j].at(&[i, l]) - dg[l].at(&[i, j]));
            }
            v
        });
        L1 { g, ginv, gamma }
    }

    fn l2(&self, p: &[f64]) -> L2 {
        let n = self.n;
        let l1 = self.l1(p);
        let dgamma: Vec<Tensor<f64>> = (0..n)
            .map(|m| Tensor::from_vec(n, 3, self.d(|q| self.l1(q).gamma.data().to_vec(), p, m)))
            .collect();
        let gm = &l1.gamma;
        let rup = Tensor::from_fn(n, 4, |ix| {
            let (l, i, j, k) = (ix[0], ix[1], ix[2], ix[3]);
            let mut v = dgamma[i].at(&[l, j, k]) - dgamma[j].at(&[l, i, k]);
            for m in 0..n {
                v += gm.at(&[l, i, m]) * gm.at(&[m, j, k]) - gm.at(&[l, j, m]) * gm.at(&[m, i, k]);
            }
            v
        });
        let riemann = Tensor::from_fn(n, 4, |ix| {
            (0..n).map(|m| l1.g.at(&[ix[3], m]) * rup.at(&[m, ix[0], ix[1], ix[2]])).sum()
        });
        let ricci = Tensor::from_fn(n, 2, |ix| (0..n).map(|i| rup.at(&[i, i, ix[0], ix[1]])).sum());
        let mut scalar = 0.0;
        for i in 0..n {
            for j in 0..n {
                scalar += l1.ginv.at(&[i, j]) * ricci.at(&[i, j]);
            }
        }
        let nf = n as f64;
        let schouten = if n >= 3 {
            Tensor::from_fn(n, 2, |ix| (ricci.at(ix) - scalar * l1.g.at(ix) / (2.0 * (nf - 1.0))) / (nf - 2.0))
        } else {
            Tensor::zeros(n, 2)
        };
        L2 {
            l1,
            riemann,
            ricci,
            scalar,
            schouten,
        }
    }

    fn l2_flat(&self, p: &[f64]) -> Vec<f64> {
        let l = self.l2(p);
        let mut v = l.ricci.data().to_vec();
        v.extend_from_slice(l.schouten.data());
        v.push(l.scalar);
        v
    }

    fn l3(&self, p: &[f64]) -> L3 {
        let n = self.n;
        let l2 = self.l2(p);
        let parts: Vec<Vec<Tensor<f64>>> = (0..n)
            .map(|m| {
                let v = self.d(|q| self.l2_flat(q), p, m);
                split(&v, &[(n, 2), (n, 2), (n, 0)])
            })
            .collect();
        let gm = &l2.l1.gamma;
        let d_ric: Vec<_> = parts.iter().map(|x| x[0].clone()).collect();
        let d_p: Vec<_> = parts.iter().map(|x| x[1].clone()).collect();
        let nabla_ricci = cov(&l2.ricci, &d_ric, gm);
        let nabla_p = cov(&l2.schouten, &d_p, gm);
        let grad_scalar = Tensor::from_fn(n, 1, |ix| parts[ix[0]][2].data()[0]);
        let cotton = Tensor::from_fn(n, 3, |ix| nabla_p.at(&[ix[0], ix[1], ix[2]]) - nabla_p.at(&[ix[1], ix[0], ix[2]]));
        L3 {
            l2,
            nabla_ricci,
            grad_scalar,
            cotton,
        }
    }

    fn l3_flat(&self, p: &[f64]) -> Vec<f64> {
        let l = self.l3(p);
        let mut v = l.nabla_ricci.data().to_vec();
        v.extend_from_slice(l.cotton.data());
        v.extend_from_slice(l.grad_scalar.data());
        v
    }

    pub fn curvature(&self, p: &[f64]) -> OracleCurvature {
        let n = self.n;
        let l3 = self.l3(p);
        let parts: Vec<Vec<Tensor<f64>>> = (0..n)
            .map(|m| {
                let v = self.d(|q| self.l3_flat(q), p, m);
                split(&v, &[(n, 3), (n, 3), (n, 1)])
            })
            .collect();
        let l2 = &l3.l2;
        let l1 = &l2.l1;
        let gm = &l1.gamma;
        let gi = &l1.ginv;
        let nn_ric = cov(&l3.nabla_ricci, &parts.iter().map(|x| x[0].clone()).collect::<Vec<_>>(), gm);
        let nabla_c = cov(&l3.cotton, &parts.iter().map(|x| x[1].clone()).collect::<Vec<_>>(), gm);
        let hess_scalar = cov(&l3.grad_scalar, &parts.iter().map(|x| x[2].clone()).collect::<Vec<_>>(), gm);
        let lap_ricci = Tensor::from_fn(n, 2, |ix| {
            let mut v = 0.0;
            for a in 0..n {
                for b in 0..n {
                    v += gi.at(&[a, b]) * nn_ric.at(&[a, b, ix[0], ix[1]]);
                }
            }
            v
        });
        let mut lap_scalar = 0.0;
        for a in 0..n {
            for b in 0..n {
                lap_scalar += gi.at(&[a, b]) * hess_scalar.at(&[a, b]);
            }
        }
        let (mut schouten, mut cotton, mut weyl, mut bach) = (None, None, None, None);
        if n >= 3 {
            let pv = &l2.schouten;
            let g = &l1.g;
            let w = Tensor::from_fn(n, 4, |ix| {
                let (i, j, k, l) = (ix[0], ix[1], ix[2], ix[3]);
                l2.riemann.at(ix)
                    - (pv.at(&[i, l]) * g.at(&[j, k]) + pv.at(&[j, k]) * g.at(&[i, l])
                        - pv.at(&[i, k]) * g.at(&[j, l])
                        - pv.at(&[j, l]) * g.at(&[i, k]))
            });
            if n == 4 {
                bach = Some(Tensor::from_fn(n, 2, |ix| {
                    let (i, j) = (ix[0], ix[1]);
                    let mut v = 0.0;
                    for k in 0..n {
                        for l in 0..n {
                            v += gi.at(&[k, l]) * nabla_c.at(&[l, k, i, j]);
                            for a in 0..n {
                                for b in 0..n {
                                    v += gi.at(&[k, a]) * gi.at(&[l, b]) * pv.at(&[a, b]) * w.at(&[k, i, j, l]);
                                }
                            }
                        }
                    }
                    v
                }));
            }
            schouten = Some(pv.clone());
            cotton = Some(l3.cotton.clone());
            weyl = Some(w);
        }
        OracleCurvature {
            christoffel: gm.clone(),
            riemann: l2.riemann.clone(),
            ricci: l2.ricci.clone(),
            scalar: l2.scalar,
            grad_scalar: l3.grad_scalar.data().to_vec(),
            hess_scalar,
            lap_scalar,
            nabla_ricci: l3.nabla_ricci.clone(),
            lap_ricci,
            schouten,
            cotton,
            weyl,
            bach,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_sphere_by_differences() {
        let metric = |p: &[f64]| vec![1.0, 0.0, 0.0, p[0].sin().powi(2)];
        let o = Oracle::new(&metric, 2, DEFAULT_STEP);
        let c = o.curvature(&[1.0, 0.5]);
        assert!((c.scalar - 2.0).abs() < 1e-9);
        assert!((c.christoffel.at(&[0, 1, 1]) + (1.0f64).sin() * (1.0f64).cos()).abs() < 1e-11);
        assert!(c.lap_scalar.abs() < 1e-8);
        assert!(c.lap_ricci.max_abs() < 1e-8);
    }
}
