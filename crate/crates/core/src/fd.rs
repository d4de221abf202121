//! Central finite differences.
//!
//! Used as an oracle for the jet engine and for the few fifth-order
//! quantities that sit above the jet order cap.

/// Accuracy order of a first-derivative central stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    Fourth,
    Sixth,
    Eighth,
}

impl Stencil {
    /// `(k, w)` pairs with `f'(x) ≈ Σ w (f(x + k h) − f(x − k h)) / h`.
    pub fn taps(self) -> &'static [(f64, f64)] {
        match self {
            Stencil::Fourth => &[(1.0, 2.0 / 3.0), (2.0, -1.0 / 12.0)],
            Stencil::Sixth => &[(1.0, 0.75), (2.0, -0.15), (3.0, 1.0 / 60.0)],
            Stencil::Eighth => &[(1.0, 0.8), (2.0, -0.2), (3.0, 4.0 / 105.0), (4.0, -1.0 / 280.0)],
        }
    }
}

/// Derivative of a vector-valued function along coordinate `dir`.
pub fn directional<F>(mut f: F, p: &[f64], dir: usize, stencil: Stencil, h: f64) -> Vec<f64>
where
    F: FnMut(&[f64]) -> Vec<f64>,
{
    let mut q = p.to_vec();
    let mut acc: Option<Vec<f64>> = None;
    for &(k, w) in stencil.taps() {
        q[dir] = p[dir] + k * h;
        let fp = f(&q);
        q[dir] = p[dir] - k * h;
        let fm = f(&q);
        let acc = acc.get_or_insert_with(|| vec![0.0; fp.len()]);
        for ((a, x), y) in acc.iter_mut().zip(&fp).zip(&fm) {
            *a += w * (x - y);
        }
    }
    acc.unwrap_or_default().into_iter().map(|a| a / h).collect()
}

/// `∂^α f(p)` by nesting first-derivative stencils.
pub fn nested_partial(f: &dyn Fn(&[f64]) -> f64, p: &[f64], exps: &[u8], stencil: Stencil, h: f64) -> f64 {
    let Some(dir) = exps.iter().position(|&e| e > 0) else {
        return f(p);
    };
    let mut rest = exps.to_vec();
    rest[dir] -= 1;
    let inner = |q: &[f64]| nested_partial(f, q, &rest, stencil, h);
    let mut q = p.to_vec();
    let mut acc = 0.0;
    for &(k, w) in stencil.taps() {
        q[dir] = p[dir] + k * h;
        let a = inner(&q);
        q[dir] = p[dir] - k * h;
        let b = inner(&q);
        acc += w * (a - b);
    }
    acc / h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_derivatives_are_exact() {
        // every stencil differentiates quartics exactly (up to roundoff)
        let f = |q: &[f64]| q[0].powi(4) + q[0] * q[1] * q[1];
        for s in [Stencil::Fourth, Stencil::Sixth, Stencil::Eighth] {
            let d = nested_partial(&f, &[0.5, 0.3], &[1, 2], s, 0.1);
            assert!((d - 2.0).abs() < 1e-9, "{s:?}: {d}");
            let d = nested_partial(&f, &[0.5, 0.3], &[2, 0], s, 0.1);
            assert!((d - 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn directional_of_vector_function() {
        let f = |q: &[f64]| vec![q[0].sin(), q[0] * q[1]];
        let d = directional(f, &[0.2, 3.0], 0, Stencil::Sixth, 0.01);
        assert!((d[0] - 0.2f64.cos()).abs() < 1e-12);
        assert!((d[1] - 3.0).abs() < 1e-12);
    }
}
