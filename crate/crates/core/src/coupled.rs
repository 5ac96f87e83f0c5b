//! Coupled-domain block systems. The state is `z = (u, x)` with `n`
//! interior and `m` boundary coordinates; the constraint `L u = x` is built
//! in by storing boundary values once, so the coupled operator
//!
//! ```text
//! 𝐀 = [[A_int, A_bnd + B], [C_int, C_bnd + D]]
//! ```
//!
//! is an ordinary `(n+m)`-square matrix. `D_λ = -(A_int - λ)^{-1} A_bnd`
//! solves `(A_max - λ) [D_λ x; x] = 0` on interior rows.

use serde::{Deserialize, Serialize};

use crate::blocksg::BlockSystem;
use crate::error::{Error, Result};
use crate::matcore::{operator_norm, reciprocal_condition, solve, spectral_abscissa, Matrix};
use crate::models::Mesh1D;
use crate::semigroup::growth_bound;
use crate::stability::{stabilizability_certificate, Certificate};

/// Maximal operator `A_max = [A_int | A_bnd]` with the trace `L` selecting
/// the last `m` coordinates.
#[derive(Debug, Clone)]
pub struct MaximalPair {
    pub a_max: Matrix,
    pub n: usize,
    pub m: usize,
}

impl MaximalPair {
    pub fn new(a_max: Matrix, m: usize) -> Result<Self> {
        let (n, cols) = a_max.shape();
        if m == 0 || cols != n + m {
            return Err(Error::DimensionMismatch {
                context: "maximal operator [A_int | A_bnd]",
                expected: (n, n + m.max(1)),
                got: (n, cols),
            });
        }
        Ok(Self { a_max, n, m })
    }

    pub fn a_int(&self) -> Matrix {
        self.a_max.block(0, 0, self.n, self.n)
    }

    pub fn a_bnd(&self) -> Matrix {
        self.a_max.block(0, self.n, self.n, self.m)
    }

    /// `L = [0 | I]`, `m x (n+m)`.
    pub fn trace_selector(&self) -> Matrix {
        let mut l = Matrix::zeros(self.m, self.n + self.m);
        l.set_block(0, self.n, &Matrix::identity(self.m));
        l
    }
}

#[derive(Debug, Clone)]
pub struct CoupledSystem {
    pub pair: MaximalPair,
    /// `n x m`, acts on boundary values.
    pub b: Matrix,
    /// `m x (n+m)`, reads the full state.
    pub c: Matrix,
    pub d: Matrix,
    pub mesh: Option<Mesh1D>,
}

impl CoupledSystem {
    pub fn new(pair: MaximalPair, b: Matrix, c: Matrix, d: Matrix) -> Result<Self> {
        let (n, m) = (pair.n, pair.m);
        for (context, got, expected) in [
            ("coupled block B", b.shape(), (n, m)),
            ("coupled block C", c.shape(), (m, n + m)),
            ("coupled block D", d.shape(), (m, m)),
        ] {
            if got != expected {
                return Err(Error::DimensionMismatch {
                    context,
                    expected,
                    got,
                });
            }
        }
        Ok(Self {
            pair,
            b,
            c,
            d,
            mesh: None,
        })
    }

    pub fn with_mesh(mut self, mesh: Mesh1D) -> Self {
        self.mesh = Some(mesh);
        self
    }

    pub fn n(&self) -> usize {
        self.pair.n
    }

    pub fn m(&self) -> usize {
        self.pair.m
    }

    pub fn c_int(&self) -> Matrix {
        self.c.block(0, 0, self.m(), self.n())
    }

    pub fn c_bnd(&self) -> Matrix {
        self.c.block(0, self.n(), self.m(), self.m())
    }

    pub fn assemble(&self) -> Matrix {
        let top = &self.pair.a_bnd() + &self.b;
        let bottom = &self.c_bnd() + &self.d;
        Matrix::block2x2(&self.pair.a_int(), &top, &self.c_int(), &bottom)
            .expect("dimensions validated on construction")
    }
}

/// `D_λ = -(A_int - λ)^{-1} A_bnd`, the solution operator of
/// `A_max u = λ u`, `L u = x` restricted to interior coordinates.
pub fn dirichlet_operator(pair: &MaximalPair, lambda: f64) -> Result<Matrix> {
    let shifted = pair.a_int().shift(-lambda);
    match solve(&shifted, &pair.a_bnd()) {
        Ok(x) => Ok(-&x),
        Err(Error::Singular { rcond }) => Err(Error::LambdaInSpectrum { lambda, rcond }),
        Err(e) => Err(e),
    }
}

/// `D + C [D_λ; I]`, the boundary block of the reduced operator.
pub fn dtn_operator(pair: &MaximalPair, c: &Matrix, d: &Matrix, lambda: f64) -> Result<Matrix> {
    let (n, m) = (pair.n, pair.m);
    if c.shape() != (m, n + m) || d.shape() != (m, m) {
        return Err(Error::DimensionMismatch {
            context: "boundary blocks C, D",
            expected: (m, n + m),
            got: c.shape(),
        });
    }
    let extension = Matrix::vstack(&dirichlet_operator(pair, lambda)?, &Matrix::identity(m))?;
    Ok(d + &(c * &extension))
}

#[derive(Debug, Clone)]
pub struct FactorizationResult {
    pub lambda: f64,
    /// Diagonal-domain operator similar to `𝐀 - λ`.
    pub a_tilde: BlockSystem,
    /// `[[A_int - λ, B], [C_int, D + C[D_λ; I] - λ]]`, with `𝐀 - λ = 𝐀_λ M̄`.
    pub a_lambda: Matrix,
    /// `M̄ = [[I, -D_λ], [0, I]]`.
    pub m_bar: Matrix,
    pub dirichlet: Matrix,
    /// `||M̄ (𝐀 - λ) M̄^{-1} - assemble(a_tilde)||`.
    pub residual: f64,
    /// `||(𝐀 - λ) - 𝐀_λ M̄||`.
    pub factorization_residual: f64,
    /// `1 + ||𝐀|| + |λ|`, the scale for both residuals.
    pub scale: f64,
}

impl FactorizationResult {
    pub fn relative_residual(&self) -> f64 {
        self.residual.max(self.factorization_residual) / self.scale
    }
}

pub fn factorize(sys: &CoupledSystem, lambda: f64) -> Result<FactorizationResult> {
    let (n, m) = (sys.n(), sys.m());
    let dl = dirichlet_operator(&sys.pair, lambda)?;
    let c_int = sys.c_int();
    let boundary = dtn_operator(&sys.pair, &sys.c, &sys.d, lambda)?.shift(-lambda);

    let a_tilde = BlockSystem::new(
        &sys.pair.a_int().shift(-lambda) - &(&dl * &c_int),
        &sys.b - &(&dl * &boundary),
        c_int.clone(),
        boundary.clone(),
    )?;
    let a_lambda = Matrix::block2x2(&sys.pair.a_int().shift(-lambda), &sys.b, &c_int, &boundary)?;
    let mut m_bar = Matrix::identity(n + m);
    m_bar.set_block(0, n, &(-&dl));
    let mut m_bar_inv = Matrix::identity(n + m);
    m_bar_inv.set_block(0, n, &dl);

    let full = sys.assemble();
    let shifted = full.shift(-lambda);
    let similar = &(&m_bar * &shifted) * &m_bar_inv;
    let residual = operator_norm(&(&similar - &a_tilde.assemble()));
    let factorization_residual = operator_norm(&(&shifted - &(&a_lambda * &m_bar)));
    Ok(FactorizationResult {
        lambda,
        a_tilde,
        a_lambda,
        m_bar,
        dirichlet: dl,
        residual,
        factorization_residual,
        scale: 1.0 + operator_norm(&full) + lambda.abs(),
    })
}

/// For `C = 0`: the upper-triangular system `[[A_int, B - D_0 D], [0, D]]`
/// similar to `𝐀` through `M̄_0`. With `check`, the similarity residual
/// must also be at rounding level.
pub fn reduced_triangular(sys: &CoupledSystem, check: bool) -> Result<BlockSystem> {
    if !sys.c.is_zero() {
        return Err(Error::Unsupported(
            "reduced triangular form needs C = 0".into(),
        ));
    }
    let f = factorize(sys, 0.0).map_err(|e| match e {
        Error::LambdaInSpectrum { rcond, .. } => Error::InvalidArgument(format!(
            "interior operator A0 must be invertible (reciprocal condition {rcond:.3e})"
        )),
        e => e,
    })?;
    if check && f.relative_residual() > 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "similarity residual {:.3e} exceeds 1e-10 relative",
            f.relative_residual()
        )));
    }
    Ok(f.a_tilde)
}

/// Magnitudes entering the coupled-domain assumptions at one `λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionAudit {
    pub lambda: f64,
    /// `sup ||C z|| / sqrt(||z||² + ||A_max z||²)`.
    pub norm_c_graph: f64,
    pub norm_c: f64,
    pub norm_dirichlet: f64,
    /// `||B - D_λ D||`.
    pub norm_feedthrough: f64,
    pub a_int_invertible: bool,
    /// Condition number `σ_max / σ_min` of `A_int`.
    pub a_int_condition: f64,
}

pub fn assumption_audit(sys: &CoupledSystem, lambda: f64) -> Result<AssumptionAudit> {
    let dl = dirichlet_operator(&sys.pair, lambda)?;
    let rcond = reciprocal_condition(&sys.pair.a_int())?;
    Ok(AssumptionAudit {
        lambda,
        norm_c_graph: graph_norm(&sys.c, &sys.pair.a_max)?,
        norm_c: operator_norm(&sys.c),
        norm_dirichlet: operator_norm(&dl),
        norm_feedthrough: operator_norm(&(&sys.b - &(&dl * &sys.d))),
        a_int_invertible: rcond >= crate::matcore::SINGULAR_RCOND,
        a_int_condition: if rcond > 0.0 {
            1.0 / rcond
        } else {
            f64::INFINITY
        },
    })
}

/// Norm of `C` on the graph space of `A_max`: with `G = I + A^* A = R^* R`
/// (Cholesky), the norm is `||C R^{-1}||`.
fn graph_norm(c: &Matrix, a_max: &Matrix) -> Result<f64> {
    if c.is_zero() {
        return Ok(0.0);
    }
    let gram = (&a_max.adjoint() * a_max).shift(1.0);
    let chol =
        gram.inner().clone().cholesky().ok_or_else(|| {
            Error::InvalidArgument("graph Gram matrix not positive definite".into())
        })?;
    // R = L^*, and C R^{-1} = (L^{-1} C^*)^*
    let lower = Matrix::new(chol.l())?;
    let x = solve(&lower, &c.adjoint())?;
    Ok(operator_norm(&x))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub lambda: f64,
    /// Abscissa of `A_int - D_λ C_int`.
    pub abscissa_interior: f64,
    /// Abscissa of `D + C [D_λ; I]`.
    pub abscissa_dtn: f64,
    pub abscissa_full: f64,
}

pub fn generation_report(sys: &CoupledSystem, lambda: f64) -> Result<GenerationReport> {
    let dl = dirichlet_operator(&sys.pair, lambda)?;
    let interior = &sys.pair.a_int() - &(&dl * &sys.c_int());
    Ok(GenerationReport {
        lambda,
        abscissa_interior: spectral_abscissa(&interior)?,
        abscissa_dtn: spectral_abscissa(&dtn_operator(&sys.pair, &sys.c, &sys.d, lambda)?)?,
        abscissa_full: spectral_abscissa(&sys.assemble())?,
    })
}

/// Feedback criterion at `λ = 0`, with growth constants of the two
/// diagonal blocks of the reduced operator from [`growth_bound`] and
/// `||C||` the norm of its lower-left block `C_int`.
pub fn stabilizability_for_system(
    sys: &CoupledSystem,
    margin: f64,
    horizon: f64,
) -> Result<Certificate> {
    let f = factorize(sys, 0.0)?;
    let g1 = growth_bound(&f.a_tilde.a, margin, horizon)?;
    let g2 = growth_bound(&f.a_tilde.d, margin, horizon)?;
    stabilizability_certificate(
        g1.m,
        g1.omega,
        g2.m,
        g2.omega,
        operator_norm(&f.a_tilde.c),
        operator_norm(&f.a_tilde.b),
    )
}
