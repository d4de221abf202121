//! Curvature of a metric from its order-4 jet.
//!
//! Index conventions (all lower indices unless stated):
//!
//! | object | formula |
//! |---|---|
//! | `Γ^k_ij` | `½ g^kl (∂_i g_jl + ∂_j g_il − ∂_l g_ij)` |
//! | `R^l_ijk` | `∂_i Γ^l_jk − ∂_j Γ^l_ik + Γ^l_im Γ^m_jk − Γ^l_jm Γ^m_ik` |
//! | `Rm_ijkl` | `g_lm R^m_ijk` (unit sphere: `g_jk g_il − g_ik g_jl`) |
//! | `Ric_jk` | `R^i_ijk` |
//! | `P` | `(Ric − S g / (2(n−1))) / (n−2)` |
//! | `W` | `Rm − P ⊙ g`, `(P⊙g)_ijkl = P_il g_jk + P_jk g_il − P_ik g_jl − P_jl g_ik` |
//! | `C_kij` | `∇_k P_ij − ∇_i P_kj` |
//! | `B_ij` | `g^kl ∇_l C_kij + P^kl W_kijl` |
//! | `∇_m T_i…` | new slot first: `(∇T)[m, i, …]` |
//! | `Δ` | `tr_g Hess` (so `Δ cos θ = −2 cos θ` on the unit sphere) |
//!
//! Jet orders are tracked explicitly: every covariant derivative lowers the
//! order by one and fails loudly when nothing is left.

use thiserror::Error;

use crate::jet::{Jet, JetError, Shape};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurvatureError {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("metric is not symmetric at entry ({i},{j})")]
    NotSymmetric { i: usize, j: usize },
    #[error("metric is not positive definite (pivot {pivot:e})")]
    NotPositiveDefinite { pivot: f64 },
    #[error("{what} needs jet order {needed}, only {available} available")]
    InsufficientOrder {
        what: &'static str,
        needed: usize,
        available: usize,
    },
    #[error("{what} requires dimension {requirement}, got {dim}")]
    Dimension {
        what: &'static str,
        requirement: &'static str,
        dim: usize,
    },
}

type Result<T> = std::result::Result<T, CurvatureError>;

fn fit(j: &Jet, order: usize, what: &'static str) -> Result<Jet> {
    if j.order() < order {
        return Err(CurvatureError::InsufficientOrder {
            what,
            needed: order,
            available: j.order(),
        });
    }
    Ok(j.at_most(order))
}

fn min_order<'a>(js: impl IntoIterator<Item = &'a Jet>) -> usize {
    js.into_iter().map(|j| j.order()).min().unwrap_or(0)
}

/// Metric components and their inverse as jets.
#[derive(Debug, Clone)]
pub struct MetricJet {
    g: Tensor<Jet>,
    ginv: Tensor<Jet>,
}

impl MetricJet {
    pub fn new(g: Tensor<Jet>) -> Result<MetricJet> {
        let n = g.dim();
        assert_eq!(g.rank(), 2);
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (g.get(&[i, j]), g.get(&[j, i]));
                let scale = a.max_abs().max(b.max_abs()).max(1.0);
                if a.checked_sub(b)?.max_abs() > 1e-13 * scale {
                    return Err(CurvatureError::NotSymmetric { i, j });
                }
            }
        }
        cholesky_check(&g.map(|j| j.value()))?;
        let ginv = invert(&g)?;
        Ok(MetricJet { g, ginv })
    }

    /// Build from a component function; only `j ≥ i` is queried.
    pub fn from_fn<E>(shape: Shape, mut entry: impl FnMut(usize, usize) -> std::result::Result<Jet, E>) -> std::result::Result<MetricJet, E>
    where
        E: From<CurvatureError>,
    {
        let n = shape.dim();
        let mut upper = vec![shape.zero(); n * n];
        for i in 0..n {
            for j in i..n {
                let v = entry(i, j)?;
                upper[i * n + j] = v;
                upper[j * n + i] = v;
            }
        }
        let g = Tensor::from_fn(n, 2, |ix| upper[ix[0] * n + ix[1]]);
        Ok(MetricJet::new(g)?)
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn order(&self) -> usize {
        self.g.data()[0].order()
    }

    pub fn shape(&self) -> Shape {
        self.g.data()[0].shape()
    }

    pub fn g(&self) -> &Tensor<Jet> {
        &self.g
    }

    pub fn ginv(&self) -> &Tensor<Jet> {
        &self.ginv
    }

    pub fn g_value(&self) -> Tensor<f64> {
        self.g.map(|j| j.value())
    }

    pub fn ginv_value(&self) -> Tensor<f64> {
        self.ginv.map(|j| j.value())
    }

    /// `e^{2u} g`
    pub fn conformal(&self, u: &Jet) -> Result<MetricJet> {
        let w = (*u * 2.0).exp();
        MetricJet::new(self.g.map(|gij| *gij * w))
    }

    /// Square root of the determinant at the base point.
    pub fn volume_density(&self) -> f64 {
        determinant(&self.g_value()).sqrt()
    }
}

fn cholesky_check(g: &Tensor<f64>) -> Result<()> {
    let n = g.dim();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = g.at(&[i, j]);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return Err(CurvatureError::NotPositiveDefinite { pivot: s });
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(())
}

/// Determinant of a small matrix by Gaussian elimination.
pub fn determinant(m: &Tensor<f64>) -> f64 {
    let n = m.dim();
    let mut a: Vec<f64> = m.data().to_vec();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&x, &y| a[x * n + c].abs().total_cmp(&a[y * n + c].abs()))
            .expect("nonempty");
        if a[p * n + c] == 0.0 {
            return 0.0;
        }
        if p != c {
            for k in 0..n {
                a.swap(p * n + k, c * n + k);
            }
            det = -det;
        }
        det *= a[c * n + c];
        for r in c + 1..n {
            let f = a[r * n + c] / a[c * n + c];
            for k in c..n {
                a[r * n + k] -= f * a[c * n + k];
            }
        }
    }
    det
}

/// Inverse of a small matrix of f64.
pub fn invert_values(m: &Tensor<f64>) -> Tensor<f64> {
    let shape = Shape::new(m.dim(), 0).expect("dim ≤ 4");
    invert(&m.map(|&v| shape.constant(v))).expect("invertible").map(|j| j.value())
}

fn invert(g: &Tensor<Jet>) -> Result<Tensor<Jet>> {
    let n = g.dim();
    let shape = g.data()[0].shape();
    let mut a: Vec<Jet> = g.data().to_vec();
    let mut inv: Vec<Jet> = (0..n * n).map(|k| shape.constant(if k / n == k % n { 1.0 } else { 0.0 })).collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&x, &y| a[x * n + c].value().abs().total_cmp(&a[y * n + c].value().abs()))
            .expect("nonempty");
        if p != c {
            for k in 0..n {
                a.swap(p * n + k, c * n + k);
                inv.swap(p * n + k, c * n + k);
            }
        }
        let piv = a[c * n + c].recip()?;
        for k in 0..n {
            a[c * n + k] = a[c * n + k] * piv;
            inv[c * n + k] = inv[c * n + k] * piv;
        }
        for r in 0..n {
            if r == c {
                continue;
            }
            let f = a[r * n + c];
            for k in 0..n {
                a[r * n + k] = a[r * n + k] - f * a[c * n + k];
                inv[r * n + k] = inv[r * n + k] - f * inv[c * n + k];
            }
        }
    }
    Ok(Tensor::from_fn(n, 2, |ix| inv[ix[0] * n + ix[1]]))
}

/// Metric jets together with the Levi-Civita connection.
#[derive(Debug, Clone)]
pub struct Geometry {
    metric: MetricJet,
    gamma: Tensor<Jet>,
}

impl Geometry {
    pub fn new(metric: MetricJet) -> Result<Geometry> {
        let gamma = christoffel(&metric)?;
        Ok(Geometry { metric, gamma })
    }

    pub fn n(&self) -> usize {
        self.metric.dim()
    }

    pub fn metric(&self) -> &MetricJet {
        &self.metric
    }

    /// `Γ^k_ij` stored at `[k, i, j]`.
    pub fn gamma(&self) -> &Tensor<Jet> {
        &self.gamma
    }

    fn g_at(&self, i: usize, j: usize, order: usize) -> Jet {
        self.metric.g.get(&[i, j]).at_most(order)
    }

    fn ginv_at(&self, i: usize, j: usize, order: usize) -> Jet {
        self.metric.ginv.get(&[i, j]).at_most(order)
    }

    fn gamma_at(&self, k: usize, i: usize, j: usize, order: usize) -> Result<Jet> {
        fit(self.gamma.get(&[k, i, j]), order, "Christoffel symbols")
    }

    /// Covariant derivative of an all-covariant tensor; the new index comes
    /// first and the order drops by one.
    pub fn covariant(&self, t: &Tensor<Jet>) -> Result<Tensor<Jet>> {
        let n = self.n();
        let k = min_order(t.data());
        if k == 0 {
            return Err(CurvatureError::InsufficientOrder {
                what: "covariant derivative",
                needed: 1,
                available: 0,
            });
        }
        let out_order = k - 1;
        let rank = t.rank();
        Tensor::try_from_fn(n, rank + 1, |ix| {
            let m = ix[0];
            let rest = &ix[1..];
            let mut acc = t.get(rest).at_most(k).derivative(m)?;
            let mut moved = rest.to_vec();
            for s in 0..rank {
                for p in 0..n {
                    moved[s] = p;
                    let gm = self.gamma_at(p, m, rest[s], out_order)?;
                    acc -= gm * t.get(&moved).at_most(out_order);
                }
                moved[s] = rest[s];
            }
            Ok(acc)
        })
    }

    /// `X_i = g_ij X^j`
    pub fn lower(&self, x: &[Jet]) -> Vec<Jet> {
        let n = self.n();
        let k = min_order(x);
        (0..n)
            .map(|i| {
                (0..n).fold(self.g_at(i, 0, k).shape().zero(), |acc, j| {
                    acc + self.g_at(i, j, k) * x[j].at_most(k)
                })
            })
            .collect()
    }

    /// `X^i = g^ij ω_j`
    pub fn raise(&self, w: &[Jet]) -> Vec<Jet> {
        let n = self.n();
        let k = min_order(w);
        (0..n)
            .map(|i| {
                (0..n).fold(self.ginv_at(i, 0, k).shape().zero(), |acc, j| {
                    acc + self.ginv_at(i, j, k) * w[j].at_most(k)
                })
            })
            .collect()
    }

    /// Exterior derivative of a scalar as a covector, one order lower.
    pub fn differential(&self, f: &Jet) -> Result<Vec<Jet>> {
        (0..self.n()).map(|i| Ok(f.derivative(i)?)).collect()
    }

    /// `∇f` with the index raised.
    pub fn gradient(&self, f: &Jet) -> Result<Vec<Jet>> {
        Ok(self.raise(&self.differential(f)?))
    }

    pub fn hessian(&self, f: &Jet) -> Result<Tensor<Jet>> {
        let df = self.differential(f)?;
        let n = self.n();
        self.covariant(&Tensor::from_fn(n, 1, |ix| df[ix[0]]))
    }

    pub fn laplacian(&self, f: &Jet) -> Result<Jet> {
        Ok(self.trace(&self.hessian(f)?))
    }

    /// `g^ij T_ij`
    pub fn trace(&self, t: &Tensor<Jet>) -> Jet {
        let n = self.n();
        let k = min_order(t.data());
        let mut acc = self.ginv_at(0, 0, k).shape().zero();
        for i in 0..n {
            for j in 0..n {
                acc += self.ginv_at(i, j, k) * t.get(&[i, j]).at_most(k);
            }
        }
        acc
    }

    /// `T − (tr T / n) g`
    pub fn trace_free(&self, t: &Tensor<Jet>) -> Tensor<Jet> {
        let k = min_order(t.data());
        let tr = self.trace(t) * (1.0 / self.n() as f64);
        Tensor::from_fn(self.n(), 2, |ix| t.get(ix).at_most(k) - tr * self.g_at(ix[0], ix[1], k))
    }

    /// `g^ik g^jl A_ij B_kl`
    pub fn inner_sym2(&self, a: &Tensor<Jet>, b: &Tensor<Jet>) -> Jet {
        let n = self.n();
        let k = min_order(a.data()).min(min_order(b.data()));
        let araised = Tensor::from_fn(n, 2, |ix| {
            let mut acc = self.ginv_at(0, 0, k).shape().zero();
            for p in 0..n {
                for q in 0..n {
                    acc += self.ginv_at(ix[0], p, k) * self.ginv_at(ix[1], q, k) * a.get(&[p, q]).at_most(k);
                }
            }
            acc
        });
        let mut acc = self.ginv_at(0, 0, k).shape().zero();
        for (x, y) in araised.data().iter().zip(b.data()) {
            acc += *x * y.at_most(k);
        }
        acc
    }

    /// `(L_X g)_ij = ∇_i X_j + ∇_j X_i` for `X` given with upper index.
    pub fn lie_derivative_metric(&self, x: &[Jet]) -> Result<Tensor<Jet>> {
        let n = self.n();
        let low = self.lower(x);
        let nabla = self.covariant(&Tensor::from_fn(n, 1, |ix| low[ix[0]]))?;
        Ok(Tensor::from_fn(n, 2, |ix| {
            *nabla.get(&[ix[0], ix[1]]) + *nabla.get(&[ix[1], ix[0]])
        }))
    }

    /// `div X = g^ij ∇_i X_j`
    pub fn divergence_vector(&self, x: &[Jet]) -> Result<Jet> {
        let n = self.n();
        let low = self.lower(x);
        let nabla = self.covariant(&Tensor::from_fn(n, 1, |ix| low[ix[0]]))?;
        Ok(self.trace(&nabla))
    }

    /// `(div T)_j = g^ik ∇_i T_kj`
    pub fn divergence_sym2(&self, t: &Tensor<Jet>) -> Result<Vec<Jet>> {
        let n = self.n();
        let nabla = self.covariant(t)?;
        let k = min_order(nabla.data());
        Ok((0..n)
            .map(|j| {
                let mut acc = self.ginv_at(0, 0, k).shape().zero();
                for i in 0..n {
                    for l in 0..n {
                        acc += self.ginv_at(i, l, k) * *nabla.get(&[i, l, j]);
                    }
                }
                acc
            })
            .collect())
    }

    /// `(i_X T)_j = X^i T_ij`
    pub fn contract_vector(&self, t: &Tensor<Jet>, x: &[Jet]) -> Vec<Jet> {
        let n = self.n();
        let k = min_order(t.data()).min(min_order(x));
        (0..n)
            .map(|j| {
                (0..n).fold(x[0].shape().with_order(k).expect("order").zero(), |acc, i| {
                    acc + x[i].at_most(k) * t.get(&[i, j]).at_most(k)
                })
            })
            .collect()
    }

    /// Rough Laplacian `g^kl ∇_k ∇_l T` of a covariant 2-tensor.
    pub fn laplacian_sym2(&self, t: &Tensor<Jet>) -> Result<Tensor<Jet>> {
        let n = self.n();
        let nn = self.covariant(&self.covariant(t)?)?;
        let k = min_order(nn.data());
        Ok(Tensor::from_fn(n, 2, |ix| {
            let mut acc = self.ginv_at(0, 0, k).shape().zero();
            for a in 0..n {
                for b in 0..n {
                    acc += self.ginv_at(a, b, k) * *nn.get(&[a, b, ix[0], ix[1]]);
                }
            }
            acc
        }))
    }

    /// Pointwise metric norm of a covariant 2-tensor of values.
    pub fn norm_sq_values(&self, t: &Tensor<f64>) -> f64 {
        let gi = self.metric.ginv_value();
        norm_sq_sym2(t, &gi)
    }
}

/// `g^ik g^jl T_ij T_kl` for value tensors.
pub fn norm_sq_sym2(t: &Tensor<f64>, ginv: &Tensor<f64>) -> f64 {
    let n = t.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    acc += ginv.at(&[i, k]) * ginv.at(&[j, l]) * t.at(&[i, j]) * t.at(&[k, l]);
                }
            }
        }
    }
    acc
}

/// `Γ^k_ij`, one order below the metric.
pub fn christoffel(m: &MetricJet) -> Result<Tensor<Jet>> {
    let n = m.dim();
    let k = m.order();
    if k == 0 {
        return Err(CurvatureError::InsufficientOrder {
            what: "Christoffel symbols",
            needed: 1,
            available: 0,
        });
    }
    let o = k - 1;
    // ∂_a g_bc
    let dg = Tensor::try_from_fn(n, 3, |ix| m.g.get(&[ix[1], ix[2]]).derivative(ix[0]))?;
    let lower = Tensor::from_fn(n, 3, |ix| {
        // Γ_{l i j} = ½ (∂_i g_jl + ∂_j g_il − ∂_l g_ij)
        let (l, i, j) = (ix[0], ix[1], ix[2]);
        (*dg.get(&[i, j, l]) + *dg.get(&[j, i, l]) - *dg.get(&[l, i, j])) * 0.5
    });
    Ok(Tensor::from_fn(n, 3, |ix| {
        let (kk, i, j) = (ix[0], ix[1], ix[2]);
        (0..n).fold(m.shape().with_order(o).expect("order").zero(), |acc, l| {
            acc + m.ginv.get(&[kk, l]).at_most(o) * *lower.get(&[l, i, j])
        })
    }))
}

/// Every curvature quantity at one point.
#[derive(Debug, Clone)]
pub struct CurvaturePack {
    pub n: usize,
    pub g: Tensor<f64>,
    pub ginv: Tensor<f64>,
    /// `Γ^k_ij` at `[k, i, j]`, order 3.
    pub christoffel: Tensor<Jet>,
    /// `R^l_ijk` at `[l, i, j, k]`, order 2.
    pub riemann_up: Tensor<Jet>,
    /// `Rm_ijkl`, order 2.
    pub riemann: Tensor<Jet>,
    pub ricci: Tensor<Jet>,
    pub scalar: Jet,
    pub grad_scalar: Vec<f64>,
    pub hess_scalar: Tensor<f64>,
    pub lap_scalar: f64,
    /// `∇_m Ric_ij` at `[m, i, j]`.
    pub nabla_ricci: Tensor<f64>,
    pub lap_ricci: Tensor<f64>,
    pub ricci_sq: Tensor<f64>,
    pub ricci_norm_sq: f64,
    /// Present for `n ≥ 3`.
    pub schouten: Option<Tensor<Jet>>,
    /// `C_kij`, present for `n ≥ 3`.
    pub cotton: Option<Tensor<f64>>,
    /// `W_ijkl`, present for `n ≥ 3`.
    pub weyl: Option<Tensor<f64>>,
    /// Present for `n = 4`.
    pub bach: Option<Tensor<f64>>,
}

impl CurvaturePack {
    pub fn compute(geo: &Geometry) -> Result<CurvaturePack> {
        let n = geo.n();
        let m = geo.metric();
        if m.order() < 4 {
            return Err(CurvatureError::InsufficientOrder {
                what: "curvature pack",
                needed: 4,
                available: m.order(),
            });
        }
        let gamma = geo.gamma();
        let z2 = m.shape().with_order(2)?.zero();

        let riemann_up = Tensor::try_from_fn(n, 4, |ix| -> Result<Jet> {
            let (l, i, j, k) = (ix[0], ix[1], ix[2], ix[3]);
            let mut r = gamma.get(&[l, j, k]).derivative(i)? - gamma.get(&[l, i, k]).derivative(j)?;
            for mm in 0..n {
                r += gamma.get(&[l, i, mm]).at_most(2) * gamma.get(&[mm, j, k]).at_most(2);
                r -= gamma.get(&[l, j, mm]).at_most(2) * gamma.get(&[mm, i, k]).at_most(2);
            }
            Ok(r)
        })?;
        let riemann = Tensor::from_fn(n, 4, |ix| {
            let (i, j, k, l) = (ix[0], ix[1], ix[2], ix[3]);
            (0..n).fold(z2, |acc, mm| acc + m.g().get(&[l, mm]).at_most(2) * *riemann_up.get(&[mm, i, j, k]))
        });
        let ricci = Tensor::from_fn(n, 2, |ix| (0..n).fold(z2, |acc, i| acc + *riemann_up.get(&[i, i, ix[0], ix[1]])));
        let scalar = geo.trace(&ricci);

        let ginv = m.ginv_value();
        let g = m.g_value();

        let hess = geo.hessian(&scalar)?;
        let hess_scalar = hess.map(|j| j.value());
        let lap_scalar = trace_values(&hess_scalar, &ginv);
        let grad_scalar = (0..n).map(|i| scalar.d(i)).collect();

        let nabla_ric_j = geo.covariant(&ricci)?;
        let nabla_ricci = nabla_ric_j.map(|j| j.value());
        let nn_ric = geo.covariant(&nabla_ric_j)?;
        let lap_ricci = Tensor::from_fn(n, 2, |ix| {
            let mut acc = 0.0;
            for a in 0..n {
                for b in 0..n {
                    acc += ginv.at(&[a, b]) * nn_ric.get(&[a, b, ix[0], ix[1]]).value();
                }
            }
            acc
        });

        let ric_v = ricci.map(|j| j.value());
        let ricci_sq = Tensor::from_fn(n, 2, |ix| {
            let mut acc = 0.0;
            for k in 0..n {
                for l in 0..n {
                    acc += ric_v.at(&[ix[0], k]) * ginv.at(&[k, l]) * ric_v.at(&[l, ix[1]]);
                }
            }
            acc
        });
        let ricci_norm_sq = norm_sq_sym2(&ric_v, &ginv);

        let mut pack = CurvaturePack {
            n,
            g,
            ginv,
            christoffel: gamma.clone(),
            riemann_up,
            riemann,
            ricci,
            scalar,
            grad_scalar,
            hess_scalar,
            lap_scalar,
            nabla_ricci,
            lap_ricci,
            ricci_sq,
            ricci_norm_sq,
            schouten: None,
            cotton: None,
            weyl: None,
            bach: None,
        };
        if n >= 3 {
            pack.conformal_part(geo)?;
        }
        Ok(pack)
    }

    fn conformal_part(&mut self, geo: &Geometry) -> Result<()> {
        let n = self.n;
        let nf = n as f64;
        let m = geo.metric();
        let gj = m.g().map(|j| j.at_most(2));
        let p = Tensor::from_fn(n, 2, |ix| {
            (*self.ricci.get(ix) - self.scalar * *gj.get(ix) * (1.0 / (2.0 * (nf - 1.0)))) * (1.0 / (nf - 2.0))
        });
        let pv = p.map(|j| j.value());
        let g = &self.g;
        let weyl = Tensor::from_fn(n, 4, |ix| {
            let (i, j, k, l) = (ix[0], ix[1], ix[2], ix[3]);
            let kn = pv.at(&[i, l]) * g.at(&[j, k]) + pv.at(&[j, k]) * g.at(&[i, l])
                - pv.at(&[i, k]) * g.at(&[j, l])
                - pv.at(&[j, l]) * g.at(&[i, k]);
            self.riemann.get(ix).value() - kn
        });
        let nabla_p = geo.covariant(&p)?;
        let cotton_j = Tensor::from_fn(n, 3, |ix| {
            let (k, i, j) = (ix[0], ix[1], ix[2]);
            *nabla_p.get(&[k, i, j]) - *nabla_p.get(&[i, k, j])
        });
        if n == 4 {
            let nabla_c = geo.covariant(&cotton_j)?;
            let gi = &self.ginv;
            let p_up = Tensor::from_fn(n, 2, |ix| {
                let mut acc = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        acc += gi.at(&[ix[0], a]) * gi.at(&[ix[1], b]) * pv.at(&[a, b]);
                    }
                }
                acc
            });
            let bach = Tensor::from_fn(n, 2, |ix| {
                let (i, j) = (ix[0], ix[1]);
                let mut acc = 0.0;
                for k in 0..n {
                    for l in 0..n {
                        acc += gi.at(&[k, l]) * nabla_c.get(&[l, k, i, j]).value();
                        acc += p_up.at(&[k, l]) * weyl.at(&[k, i, j, l]);
                    }
                }
                acc
            });
            self.bach = Some(bach);
        }
        self.cotton = Some(cotton_j.map(|j| j.value()));
        self.weyl = Some(weyl);
        self.schouten = Some(p);
        Ok(())
    }

    pub fn ricci_value(&self) -> Tensor<f64> {
        self.ricci.map(|j| j.value())
    }

    pub fn scalar_value(&self) -> f64 {
        self.scalar.value()
    }

    pub fn riemann_value(&self) -> Tensor<f64> {
        self.riemann.map(|j| j.value())
    }

    pub fn christoffel_value(&self) -> Tensor<f64> {
        self.christoffel.map(|j| j.value())
    }

    pub fn schouten_value(&self) -> Result<Tensor<f64>> {
        self.schouten
            .as_ref()
            .map(|p| p.map(|j| j.value()))
            .ok_or(CurvatureError::Dimension {
                what: "Schouten tensor",
                requirement: "n ≥ 3",
                dim: self.n,
            })
    }

    pub fn cotton_value(&self) -> Result<&Tensor<f64>> {
        self.cotton.as_ref().ok_or(CurvatureError::Dimension {
            what: "Cotton tensor",
            requirement: "n ≥ 3",
            dim: self.n,
        })
    }

    pub fn weyl_value(&self) -> Result<&Tensor<f64>> {
        self.weyl.as_ref().ok_or(CurvatureError::Dimension {
            what: "Weyl tensor",
            requirement: "n ≥ 3",
            dim: self.n,
        })
    }

    pub fn bach_value(&self) -> Result<&Tensor<f64>> {
        self.bach.as_ref().ok_or(CurvatureError::Dimension {
            what: "Bach tensor",
            requirement: "n = 4",
            dim: self.n,
        })
    }

    /// The flow tensor `B + (1/12) ΔS g` (dimension 4).
    pub fn bach_flow_value(&self) -> Result<Tensor<f64>> {
        let b = self.bach_value()?;
        Ok(b.zip_map(&self.g, |bij, gij| bij + self.lap_scalar / 12.0 * gij))
    }

    /// `(div Ric)_j − ½ ∂_j S`, a consequence of the second Bianchi identity.
    pub fn bianchi_defect(&self) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|j| {
                let mut acc = 0.0;
                for i in 0..n {
                    for k in 0..n {
                        acc += self.ginv.at(&[i, k]) * self.nabla_ricci.at(&[i, k, j]);
                    }
                }
                acc - 0.5 * self.grad_scalar[j]
            })
            .collect()
    }
}

/// `g^ij T_ij` for value tensors.
pub fn trace_values(t: &Tensor<f64>, ginv: &Tensor<f64>) -> f64 {
    let n = t.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += ginv.at(&[i, j]) * t.at(&[i, j]);
        }
    }
    acc
}

/// Divergence `g^ik ∇_i T_kj` of a symmetric 2-tensor field known only
/// through pointwise values; partial derivatives come from a 6th-order
/// central difference with step `h`.
pub fn divergence_by_differences<F, E>(
    field: F,
    point: &[f64],
    ginv: &Tensor<f64>,
    gamma: &Tensor<f64>,
    h: f64,
) -> std::result::Result<Vec<f64>, E>
where
    F: Fn(&[f64]) -> std::result::Result<Tensor<f64>, E>,
{
    let n = ginv.dim();
    let t0 = field(point)?;
    let mut dt = Vec::with_capacity(n);
    for dir in 0..n {
        let mut err = None;
        let d = crate::fd::directional(
            |q| match field(q) {
                Ok(t) => t.data().to_vec(),
                Err(e) => {
                    err.get_or_insert(e);
                    vec![0.0; n * n]
                }
            },
            point,
            dir,
            crate::fd::Stencil::Sixth,
            h,
        );
        if let Some(e) = err {
            return Err(e);
        }
        dt.push(Tensor::from_vec(n, 2, d));
    }
    Ok((0..n)
        .map(|j| {
            let mut acc = 0.0;
            for i in 0..n {
                for k in 0..n {
                    let mut nab = dt[i].at(&[k, j]);
                    for p in 0..n {
                        nab -= gamma.at(&[p, i, k]) * t0.at(&[p, j]);
                        nab -= gamma.at(&[p, i, j]) * t0.at(&[k, p]);
                    }
                    acc += ginv.at(&[i, k]) * nab;
                }
            }
            acc
        })
        .collect())
}
