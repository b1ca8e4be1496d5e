use super::kernel::{Kernel, KernelMatrix};
use crate::error::{out_of_range, Error, Result};
use crate::graphs::Graph;
use crate::linalg::{symmetric_eigen, DenseMatrix};
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Largest `|theta| max |rho|` accepted by the exponential weights.
pub const WEIGHT_OVERFLOW_GUARD: f64 = 300.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exponent {
    One,
    Two,
    Inf,
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Exponent::One => "1",
            Exponent::Two => "2",
            Exponent::Inf => "inf",
        })
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" => Ok(Exponent::One),
            "2" => Ok(Exponent::Two),
            "inf" | "infinity" | "∞" => Ok(Exponent::Inf),
            other => Err(Error::UnsupportedExponentPair {
                p_in: other.to_string(),
                q_out: "?".into(),
            }),
        }
    }
}

fn positive<T: Scalar>(m: &[T]) -> Result<()> {
    match m.iter().position(|&v| !(v > T::zero())) {
        Some(x) => Err(Error::DegenerateMeasure { vertex: x }),
        None => Ok(()),
    }
}

/// Norm of `(A f)(x) = sum_y A(x, y) f(y)` from `L^p(in)` to `L^q(out)`:
/// columns of `A` are weighted by `in_measure`, rows by `out_measure`.
pub fn weighted_norm<T: Scalar>(
    a: &DenseMatrix<T>,
    p_in: Exponent,
    q_out: Exponent,
    in_measure: &[T],
    out_measure: &[T],
) -> Result<T> {
    positive(in_measure)?;
    positive(out_measure)?;
    assert_eq!(a.cols(), in_measure.len());
    assert_eq!(a.rows(), out_measure.len());
    let (rows, cols) = (a.rows(), a.cols());
    let max = |it: &mut dyn Iterator<Item = T>| it.fold(T::zero(), T::max);
    use Exponent::*;
    let value = match (p_in, q_out) {
        // Extreme points of the L^1 ball are normalized point masses.
        (One, Inf) => max(&mut (0..rows).flat_map(|x| (0..cols).map(move |y| (x, y))).map(|(x, y)| a[(x, y)].abs() / in_measure[y])),
        (One, One) => max(&mut (0..cols).map(|y| {
            (0..rows).map(|x| out_measure[x] * a[(x, y)].abs()).sum::<T>() / in_measure[y]
        })),
        (One, Two) => max(&mut (0..cols).map(|y| {
            (0..rows).map(|x| out_measure[x] * a[(x, y)].powi(2)).sum::<T>().sqrt() / in_measure[y]
        })),
        // Row functionals, dual norm in L^{p'}(in).
        (Two, Inf) => max(&mut (0..rows).map(|x| {
            (0..cols).map(|y| a[(x, y)].powi(2) / in_measure[y]).sum::<T>().sqrt()
        })),
        (Inf, Inf) => max(&mut (0..rows).map(|x| a.row(x).iter().map(|v| v.abs()).sum::<T>())),
        (Two, Two) => {
            let b = DenseMatrix::from_fn(rows, cols, |x, y| {
                out_measure[x].sqrt() * a[(x, y)] / in_measure[y].sqrt()
            });
            let gram = b.transpose().matmul(&b);
            let top = symmetric_eigen(&gram).values.last().copied().unwrap_or(T::zero());
            top.max(T::zero()).sqrt()
        }
        _ => {
            return Err(Error::UnsupportedExponentPair {
                p_in: p_in.to_string(),
                q_out: q_out.to_string(),
            })
        }
    };
    Ok(value)
}

/// Adjoint of `A : L^2(in) -> L^2(out)`, i.e. `A*(y, x) = out(x) A(x, y) / in(y)`.
pub fn adjoint<T: Scalar>(a: &DenseMatrix<T>, in_measure: &[T], out_measure: &[T]) -> DenseMatrix<T> {
    DenseMatrix::from_fn(a.cols(), a.rows(), |y, x| out_measure[x] * a[(x, y)] / in_measure[y])
}

impl<T: Scalar> Kernel<T> {
    /// Operator norm from `L^p(target)` to `L^q(source)`.
    pub fn norm(&self, p_in: Exponent, q_out: Exponent) -> Result<T> {
        weighted_norm(&self.dense(), p_in, q_out, self.target_measure(), self.source_measure())
    }

    /// `L^2` adjoint with the roles of the two measures swapped.
    pub fn adjoint(&self) -> Kernel<T> {
        let a = adjoint(&self.dense(), self.target_measure(), self.source_measure());
        Kernel::new(
            KernelMatrix::Dense(a),
            self.t(),
            self.s(),
            self.target_measure().to_vec(),
            self.source_measure().to_vec(),
        )
    }
}

/// Exponential weights `w_theta(x) = e^{theta rho(x)}` for an `L`-Lipschitz `rho`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightField {
    pub theta: f64,
    pub rho: Vec<f64>,
    pub lipschitz: f64,
}

impl WeightField {
    /// Verifies `|rho(x) - rho(y)| <= L d(x, y)` on every edge.
    pub fn new(graph: &Graph, theta: f64, rho: Vec<f64>, lipschitz: f64) -> Result<Self> {
        if rho.len() != graph.vertex_count() {
            return Err(Error::InvalidConfig("rho length != vertex count".into()));
        }
        for &(a, b) in graph.edges() {
            let gap = (rho[a] - rho[b]).abs();
            let allowed = lipschitz * graph.distance(a, b) as f64;
            if gap > allowed + 1e-12 {
                return Err(out_of_range(
                    &format!("|rho({a}) - rho({b})|"),
                    gap,
                    &format!("[0, {allowed}] (Lipschitz constant {lipschitz})"),
                ));
            }
        }
        Ok(Self { theta, rho, lipschitz })
    }

    /// `rho = d(., x0)`, Lipschitz constant 1.
    pub fn distance_from(graph: &Graph, theta: f64, x0: usize) -> Result<Self> {
        let rho = (0..graph.vertex_count())
            .map(|x| graph.distance(x0, x) as f64)
            .collect();
        Self::new(graph, theta, rho, 1.0)
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        Self {
            theta,
            ..self.clone()
        }
    }

    pub fn weight(&self, x: usize) -> f64 {
        (self.theta * self.rho[x]).exp()
    }

    fn check_overflow(&self) -> Result<()> {
        let m = self.rho.iter().fold(0.0f64, |a, &r| a.max(r.abs()));
        let value = self.theta.abs() * m;
        if value > WEIGHT_OVERFLOW_GUARD {
            return Err(Error::Overflow { value });
        }
        Ok(())
    }
}

/// `K^theta(x, y) = e^{theta (rho(y) - rho(x))} K(x, y)`, same measures.
pub fn perturbed_kernel<T: Scalar>(kernel: &Kernel<T>, weight: &WeightField) -> Result<Kernel<T>> {
    weight.check_overflow()?;
    let m = kernel.dense();
    let n = m.rows();
    let th = weight.theta;
    let out = DenseMatrix::from_fn(n, n, |x, y| {
        m[(x, y)] * T::of((th * (weight.rho[y] - weight.rho[x])).exp())
    });
    Ok(Kernel::new(
        KernelMatrix::Dense(out),
        kernel.s(),
        kernel.t(),
        kernel.source_measure().to_vec(),
        kernel.target_measure().to_vec(),
    ))
}

/// `Q(x, y) = (1 / mu(x)) sum_z nu(z) K(z, x) K(z, y)` with `mu = nu K`;
/// `mu` sits on both sides of the result.
pub fn dual_kernel<T: Scalar>(kernel: &Kernel<T>, nu: &[T]) -> Result<Kernel<T>> {
    let k = kernel.dense();
    let mu = k.vec_mul(nu);
    positive(&mu)?;
    let weighted = DenseMatrix::from_fn(k.rows(), k.cols(), |z, y| nu[z] * k[(z, y)]);
    let mut q = k.transpose().matmul(&weighted);
    for (x, &m) in mu.iter().enumerate() {
        for v in q.row_mut(x) {
            *v /= m;
        }
    }
    Ok(Kernel::new(KernelMatrix::Dense(q), kernel.t(), kernel.t(), mu.clone(), mu))
}

/// `E_{Q,mu}(f, f) = (1/2) sum_{x,y} (f(x) - f(y))^2 Q(x, y) mu(x)`.
pub fn dirichlet_form<T: Scalar>(q: &DenseMatrix<T>, mu: &[T], f: &[T]) -> T {
    let n = q.rows();
    let mut e = T::zero();
    for x in 0..n {
        for y in 0..n {
            let d = f[x] - f[y];
            e += d * d * q[(x, y)] * mu[x];
        }
    }
    e / T::of(2.0)
}

/// `||f||^2_{L^2(mu)}`.
pub fn l2_norm_sq<T: Scalar>(f: &[T], mu: &[T]) -> T {
    f.iter().zip(mu).map(|(&v, &m)| v * v * m).sum()
}

/// `||f||_{L^1(mu)}`.
pub fn l1_norm<T: Scalar>(f: &[T], mu: &[T]) -> T {
    f.iter().zip(mu).map(|(&v, &m)| v.abs() * m).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_norms_are_one() {
        let a = DenseMatrix::<f64>::identity(4);
        let m = vec![0.5, 1.0, 2.0, 0.25];
        for (p, q) in [
            (Exponent::One, Exponent::One),
            (Exponent::Two, Exponent::Two),
            (Exponent::Inf, Exponent::Inf),
        ] {
            assert!((weighted_norm(&a, p, q, &m, &m).unwrap() - 1.0).abs() < 1e-14);
        }
        assert!(weighted_norm(&a, Exponent::Inf, Exponent::One, &m, &m).is_err());
    }

    #[test]
    fn exponent_parsing() {
        assert_eq!("inf".parse::<Exponent>().unwrap(), Exponent::Inf);
        assert!("3".parse::<Exponent>().is_err());
    }
}
