//! Mass action rate vectors, full and reduced vector fields with exact
//! polynomial derivatives, charts on positive stoichiometric classes, and an
//! adaptive Runge-Kutta integrator for sanity checks.

use nalgebra::{DMatrix, DVector};

use crate::error::AnalysisError;
use crate::exact::{rat, reduce_by_gcd, IMat, QMat, Rat};
use crate::network::{Network, RateConstant};
use crate::poly::{Poly, Scalar};

/// Local affine coordinates theta on the positive stoichiometric class of
/// `x_base`: x = x_base + Gamma0 * theta, with Gamma = Gamma0 * Lambda exact.
#[derive(Debug, Clone)]
pub struct Chart {
    pub x_base: Vec<f64>,
    /// n x r integer basis of im Gamma
    pub gamma0: IMat,
    /// r x m rational factor with Gamma = Gamma0 * Lambda
    pub lambda: QMat,
}

impl Chart {
    pub fn dim(&self) -> usize {
        self.gamma0.cols
    }

    pub fn x_of_theta(&self, theta: &[f64]) -> Vec<f64> {
        let shift = self.gamma0.mul_vec_f64(theta);
        self.x_base
            .iter()
            .zip(shift.iter())
            .map(|(x, d)| x + d)
            .collect()
    }

    /// Least-squares projection of a state onto chart coordinates.
    pub fn theta_of_x(&self, x: &[f64]) -> Vec<f64> {
        let n = self.x_base.len();
        let r = self.dim();
        let g = DMatrix::from_fn(n, r, |i, j| self.gamma0.get(i, j) as f64);
        let d = DVector::from_fn(n, |i, _| x[i] - self.x_base[i]);
        let sol = g
            .svd(true, true)
            .solve(&d, 1e-13)
            .expect("least squares solve");
        sol.iter().copied().collect()
    }
}

/// Build the chart at `x_base`: Gamma0 is the lexicographically first set of
/// r linearly independent columns of Gamma, each divided by the gcd of its
/// entries; Lambda is solved exactly from Gamma = Gamma0 * Lambda.
pub fn make_chart(net: &Network, x_base: &[f64]) -> Result<Chart, AnalysisError> {
    if x_base.len() != net.n_species() {
        return Err(AnalysisError::DimensionMismatch {
            expected: net.n_species(),
            got: x_base.len(),
        });
    }
    if x_base.iter().any(|&x| x <= 0.0) {
        return Err(AnalysisError::NonpositiveBasePoint);
    }
    let r = net.rank();
    if r == 0 {
        return Err(AnalysisError::RankZero);
    }
    let gq = net.gamma().to_qmat();
    let cols = gq.lex_independent_columns();
    debug_assert_eq!(cols.len(), r);
    let n = net.n_species();
    let mut gamma0 = IMat::zeros(n, r);
    for (k, &j) in cols.iter().enumerate() {
        let col = reduce_by_gcd(&net.gamma().column(j));
        for i in 0..n {
            gamma0.set(i, k, col[i]);
        }
    }
    chart_with_basis(net, x_base, gamma0)
}

/// Build a chart from a caller-supplied integer basis of im Gamma.
pub fn chart_with_basis(
    net: &Network,
    x_base: &[f64],
    gamma0: IMat,
) -> Result<Chart, AnalysisError> {
    let g0q = gamma0.to_qmat();
    let lambda = g0q
        .solve_full_column_rank(&net.gamma().to_qmat())
        .ok_or(AnalysisError::RankZero)?;
    Ok(Chart {
        x_base: x_base.to_vec(),
        gamma0,
        lambda,
    })
}

/// One additive term of a rate-constant expression: coeff * eps^eps_pow * kappa_param.
#[derive(Debug, Clone, PartialEq)]
pub struct RateTerm<S: Scalar> {
    pub coeff: S,
    pub eps_pow: i32,
    pub param: Option<usize>,
}

/// A rate-constant expression in (eps, free parameters): a sum of terms.
/// Plain network rates are single terms with eps_pow = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RateExpr<S: Scalar>(pub Vec<RateTerm<S>>);

impl<S: Scalar> RateExpr<S> {
    pub fn fixed(coeff: S) -> Self {
        RateExpr(vec![RateTerm {
            coeff,
            eps_pow: 0,
            param: None,
        }])
    }

    pub fn param(idx: usize) -> Self {
        RateExpr(vec![RateTerm {
            coeff: S::one(),
            eps_pow: 0,
            param: Some(idx),
        }])
    }

    pub fn eps_pow(pow: i32) -> Self {
        RateExpr(vec![RateTerm {
            coeff: S::one(),
            eps_pow: pow,
            param: None,
        }])
    }

    /// Multiply the whole expression by coeff * eps^pow.
    pub fn scaled(&self, coeff: &S, pow: i32) -> Self {
        RateExpr(
            self.0
                .iter()
                .map(|t| RateTerm {
                    coeff: t.coeff.clone() * coeff.clone(),
                    eps_pow: t.eps_pow + pow,
                    param: t.param,
                })
                .collect(),
        )
    }

    pub fn add_term(&mut self, term: RateTerm<S>) {
        self.0.push(term);
    }

    /// Evaluate at fixed eps and kappa.
    pub fn eval(&self, eps: &S, kappa: &[S]) -> S {
        let mut acc = S::zero();
        for t in &self.0 {
            let mut v = t.coeff.clone();
            if t.eps_pow != 0 {
                let mut f = S::one();
                for _ in 0..t.eps_pow.unsigned_abs() {
                    f = f * eps.clone();
                }
                if t.eps_pow > 0 {
                    v = v * f;
                } else {
                    v = v / f;
                }
            }
            if let Some(p) = t.param {
                v = v * kappa[p].clone();
            }
            acc = acc + v;
        }
        acc
    }

    /// The expression as a polynomial in variables laid out as
    /// [state..(n_state), params..(n_param), eps (when `with_eps`)].
    /// With `fixed_eps` given, eps powers are folded into the coefficients.
    pub fn to_poly(
        &self,
        n_state: usize,
        n_param: usize,
        with_eps: bool,
        fixed_eps: Option<&S>,
    ) -> Poly<S> {
        let nvars = n_state + n_param + usize::from(with_eps);
        let mut p = Poly::zero(nvars);
        for t in &self.0 {
            let mut coeff = t.coeff.clone();
            let mut exps = vec![0i32; nvars];
            match (with_eps, fixed_eps) {
                (true, _) => exps[nvars - 1] = t.eps_pow,
                (false, Some(e)) => {
                    if t.eps_pow != 0 {
                        let mut f = S::one();
                        for _ in 0..t.eps_pow.unsigned_abs() {
                            f = f * e.clone();
                        }
                        if t.eps_pow > 0 {
                            coeff = coeff * f;
                        } else {
                            coeff = coeff / f;
                        }
                    }
                }
                (false, None) => {
                    assert_eq!(t.eps_pow, 0, "eps-dependent rate in eps-free context")
                }
            }
            if let Some(k) = t.param {
                exps[n_state + k] = 1;
            }
            p = p.add(&Poly::monomial(nvars, exps, coeff));
        }
        p
    }

    pub fn display(&self, param_names: &[String]) -> String {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|t| {
                let mut factors = Vec::new();
                let coeff = t.coeff.to_f64();
                if coeff != 1.0 || (t.eps_pow == 0 && t.param.is_none()) {
                    factors.push(format_coeff(coeff));
                }
                if t.eps_pow == 1 {
                    factors.push("eps".to_string());
                } else if t.eps_pow != 0 {
                    factors.push(format!("eps^{}", t.eps_pow));
                }
                if let Some(p) = t.param {
                    factors.push(param_names[p].clone());
                }
                factors.join("*")
            })
            .collect();
        parts.join(" + ")
    }
}

fn format_coeff(c: f64) -> String {
    if c == c.trunc() && c.abs() < 1e15 {
        format!("{}", c as i64)
    } else {
        format!("{c}")
    }
}

/// Rate expressions for a plain network: fixed rationals or named parameters,
/// with parameter indices referring to `net.free_params()` order.
pub fn base_schedule<S: Scalar>(net: &Network) -> Vec<RateExpr<S>> {
    let params = net.free_params();
    net.reactions()
        .iter()
        .map(|r| match &r.rate {
            RateConstant::Fixed(q) => RateExpr::fixed(S::from_rat(q)),
            RateConstant::Param(p) => {
                let idx = params
                    .iter()
                    .position(|q| q == p)
                    .expect("param registered");
                RateExpr::param(idx)
            }
        })
        .collect()
}

/// Mass action rate vector v_j = kappa_j * prod_i x_i^(Gamma_l)_ij.
pub fn rate_vector(net: &Network, x: &[f64], kappa: &[f64]) -> Result<Vec<f64>, AnalysisError> {
    if x.iter().any(|&v| v <= 0.0) {
        return Err(AnalysisError::LeftPositiveOrthant);
    }
    let schedule = base_schedule::<f64>(net);
    Ok(rate_vector_scheduled(net, &schedule, 0.0, x, kappa))
}

pub fn rate_vector_scheduled(
    net: &Network,
    schedule: &[RateExpr<f64>],
    eps: f64,
    x: &[f64],
    kappa: &[f64],
) -> Vec<f64> {
    let gl = net.gamma_l();
    (0..net.n_reactions())
        .map(|j| {
            let mut v = schedule[j].eval(&eps, kappa);
            for i in 0..net.n_species() {
                let e = gl.get(i, j);
                if e != 0 {
                    v *= x[i].powi(e as i32);
                }
            }
            v
        })
        .collect()
}

/// Full mass action field xdot = Gamma (kappa o x^Gamma_l^T).
pub fn full_field(net: &Network, x: &[f64], kappa: &[f64]) -> Result<Vec<f64>, AnalysisError> {
    let v = rate_vector(net, x, kappa)?;
    Ok(net.gamma().mul_vec_f64(&v))
}

pub fn full_field_scheduled(
    net: &Network,
    schedule: &[RateExpr<f64>],
    eps: f64,
    x: &[f64],
    kappa: &[f64],
) -> Vec<f64> {
    let v = rate_vector_scheduled(net, schedule, eps, x, kappa);
    net.gamma().mul_vec_f64(&v)
}

/// Jacobian of the full field with respect to x, analytic.
pub fn full_jacobian_scheduled(
    net: &Network,
    schedule: &[RateExpr<f64>],
    eps: f64,
    x: &[f64],
    kappa: &[f64],
) -> DMatrix<f64> {
    let n = net.n_species();
    let m = net.n_reactions();
    let gl = net.gamma_l();
    let g = net.gamma();
    let mut jac = DMatrix::zeros(n, n);
    for j in 0..m {
        let k = schedule[j].eval(&eps, kappa);
        for d in 0..n {
            let ed = gl.get(d, j);
            if ed == 0 {
                continue;
            }
            let mut dv = k * ed as f64;
            for i in 0..n {
                let e = gl.get(i, j) as i32 - i32::from(i == d);
                if e != 0 {
                    dv *= x[i].powi(e);
                }
            }
            for i in 0..n {
                jac[(i, d)] += g.get(i, j) as f64 * dv;
            }
        }
    }
    jac
}

/// A polynomial vector field in state and parameter variables, with cached
/// symbolic derivatives up to third order in the state.
///
/// Variable layout: [theta_0 .. theta_{dim-1}, kappa_0 .. kappa_{p-1}].
pub struct ReducedField {
    pub dim: usize,
    pub n_param: usize,
    pub param_names: Vec<String>,
    pub chart: Option<Chart>,
    polys: Vec<Poly<f64>>,
    grad: Vec<Vec<Poly<f64>>>,
    hess: Vec<Vec<Vec<Poly<f64>>>>,
    third: Vec<Vec<Vec<Vec<Poly<f64>>>>>,
}

impl ReducedField {
    pub fn from_polys(
        dim: usize,
        n_param: usize,
        polys: Vec<Poly<f64>>,
        param_names: Vec<String>,
        chart: Option<Chart>,
    ) -> Self {
        assert_eq!(polys.len(), dim);
        let nvars = dim + n_param;
        for p in &polys {
            assert_eq!(p.nvars, nvars);
        }
        let grad: Vec<Vec<Poly<f64>>> = polys
            .iter()
            .map(|p| (0..nvars).map(|v| p.partial(v)).collect())
            .collect();
        let hess: Vec<Vec<Vec<Poly<f64>>>> = grad
            .iter()
            .map(|g| {
                g.iter()
                    .map(|p| (0..nvars).map(|v| p.partial(v)).collect())
                    .collect()
            })
            .collect();
        let third: Vec<Vec<Vec<Vec<Poly<f64>>>>> = hess
            .iter()
            .map(|h| {
                h[..dim]
                    .iter()
                    .map(|row| {
                        row[..dim]
                            .iter()
                            .map(|p| (0..nvars).map(|v| p.partial(v)).collect())
                            .collect()
                    })
                    .collect()
            })
            .collect();
        ReducedField {
            dim,
            n_param,
            param_names,
            chart,
            polys,
            grad,
            hess,
            third,
        }
    }

    pub fn polys(&self) -> &[Poly<f64>] {
        &self.polys
    }

    fn point(&self, theta: &[f64], kappa: &[f64]) -> Vec<f64> {
        debug_assert_eq!(theta.len(), self.dim);
        debug_assert_eq!(kappa.len(), self.n_param);
        let mut pt = Vec::with_capacity(self.dim + self.n_param);
        pt.extend_from_slice(theta);
        pt.extend_from_slice(kappa);
        pt
    }

    pub fn value(&self, theta: &[f64], kappa: &[f64]) -> DVector<f64> {
        let pt = self.point(theta, kappa);
        DVector::from_fn(self.dim, |i, _| self.polys[i].eval(&pt))
    }

    /// D_theta f, dim x dim.
    pub fn jac_state(&self, theta: &[f64], kappa: &[f64]) -> DMatrix<f64> {
        let pt = self.point(theta, kappa);
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.grad[i][j].eval(&pt))
    }

    /// D_kappa f over all parameters, dim x n_param.
    pub fn jac_param(&self, theta: &[f64], kappa: &[f64]) -> DMatrix<f64> {
        let pt = self.point(theta, kappa);
        DMatrix::from_fn(self.dim, self.n_param, |i, j| {
            self.grad[i][self.dim + j].eval(&pt)
        })
    }

    /// Symmetric bilinear form B(u, v) of second state derivatives.
    pub fn bilinear(&self, theta: &[f64], kappa: &[f64], u: &[f64], v: &[f64]) -> DVector<f64> {
        let pt = self.point(theta, kappa);
        DVector::from_fn(self.dim, |i, _| {
            let mut acc = 0.0;
            for a in 0..self.dim {
                for b in 0..self.dim {
                    let c = self.hess[i][a][b].eval(&pt);
                    if c != 0.0 {
                        acc += c * u[a] * v[b];
                    }
                }
            }
            acc
        })
    }

    /// Symmetric trilinear form C(u, v, w) of third state derivatives.
    pub fn trilinear(
        &self,
        theta: &[f64],
        kappa: &[f64],
        u: &[f64],
        v: &[f64],
        w: &[f64],
    ) -> DVector<f64> {
        let pt = self.point(theta, kappa);
        DVector::from_fn(self.dim, |i, _| {
            let mut acc = 0.0;
            for a in 0..self.dim {
                for b in 0..self.dim {
                    for c in 0..self.dim {
                        let t = self.third[i][a][b][c].eval(&pt);
                        if t != 0.0 {
                            acc += t * u[a] * v[b] * w[c];
                        }
                    }
                }
            }
            acc
        })
    }

    /// Derivative of D_theta f with respect to variable `var` (a state index,
    /// or dim + param index), as a dim x dim matrix.
    pub fn jac_state_derivative(&self, var: usize, theta: &[f64], kappa: &[f64]) -> DMatrix<f64> {
        let pt = self.point(theta, kappa);
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.hess[i][j][var].eval(&pt))
    }

    /// Third partial of component i: d^3 f_i / (d theta_a d theta_b d var).
    pub fn third_partial(
        &self,
        i: usize,
        a: usize,
        b: usize,
        var: usize,
        theta: &[f64],
        kappa: &[f64],
    ) -> f64 {
        let pt = self.point(theta, kappa);
        self.third[i][a][b][var].eval(&pt)
    }

    pub fn x_of_theta(&self, theta: &[f64]) -> Option<Vec<f64>> {
        self.chart.as_ref().map(|c| c.x_of_theta(theta))
    }

    /// True when the chart (if any) keeps the state strictly positive.
    pub fn state_positive(&self, theta: &[f64]) -> bool {
        match &self.chart {
            Some(c) => c.x_of_theta(theta).iter().all(|&x| x > 0.0),
            None => true,
        }
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.param_names.iter().position(|p| p == name)
    }
}

/// Reduced mass action field f(theta, kappa) = Lambda v(x_base + Gamma0 theta, kappa).
pub fn reduced_field(net: &Network, chart: &Chart) -> ReducedField {
    let schedule = base_schedule::<f64>(net);
    reduced_field_scheduled(net, &schedule, chart, 0.0)
}

/// Reduced field with an explicit rate schedule evaluated at fixed eps.
pub fn reduced_field_scheduled(
    net: &Network,
    schedule: &[RateExpr<f64>],
    chart: &Chart,
    eps: f64,
) -> ReducedField {
    let params = net.free_params();
    let x_base = chart.x_base.clone();
    let polys = reduced_polys(net, schedule, &x_base, chart, params.len(), Some(&eps));
    ReducedField::from_polys(
        chart.dim(),
        params.len(),
        polys,
        params,
        Some(chart.clone()),
    )
}

/// The reduced field as polynomials, generic over the scalar type.
/// Variables: [theta.., kappa.., eps (when `fixed_eps` is None)].
pub fn reduced_polys<S: Scalar>(
    net: &Network,
    schedule: &[RateExpr<S>],
    x_base: &[S],
    chart: &Chart,
    n_param: usize,
    fixed_eps: Option<&S>,
) -> Vec<Poly<S>> {
    let r = chart.dim();
    let with_eps = fixed_eps.is_none();
    let nvars = r + n_param + usize::from(with_eps);
    let n = net.n_species();
    let z: Vec<Poly<S>> = (0..n)
        .map(|i| {
            let mut p = Poly::constant(nvars, x_base[i].clone());
            for k in 0..r {
                let g = chart.gamma0.get(i, k);
                if g != 0 {
                    p = p.add(&Poly::var(nvars, k).scale(&S::from_int(g)));
                }
            }
            p
        })
        .collect();
    let v = rate_polys(net, schedule, &z, r, n_param, fixed_eps);
    (0..r)
        .map(|i| {
            let mut f = Poly::zero(nvars);
            for j in 0..net.n_reactions() {
                let lam = chart.lambda.get(i, j);
                if !num_traits::Zero::is_zero(lam) {
                    f = f.add(&v[j].scale(&S::from_rat(lam)));
                }
            }
            f
        })
        .collect()
}

/// Mass action rate polynomials v_j = rate_j(kappa, eps) * prod z_i^(Gamma_l)_ij
/// where z are polynomials for the species concentrations.
pub fn rate_polys<S: Scalar>(
    net: &Network,
    schedule: &[RateExpr<S>],
    z: &[Poly<S>],
    n_state: usize,
    n_param: usize,
    fixed_eps: Option<&S>,
) -> Vec<Poly<S>> {
    let with_eps = fixed_eps.is_none();
    let gl = net.gamma_l();
    (0..net.n_reactions())
        .map(|j| {
            let mut p = schedule[j].to_poly(n_state, n_param, with_eps, fixed_eps);
            for i in 0..net.n_species() {
                let e = gl.get(i, j);
                if e > 0 {
                    p = p.mul(&z[i].pow(e as u32));
                }
            }
            p
        })
        .collect()
}

/// Options for the adaptive Dormand-Prince 5(4) integrator.
#[derive(Debug, Clone)]
pub struct IntegrateOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub positivity_floor: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            rtol: 1e-9,
            atol: 1e-11,
            max_steps: 200_000,
            positivity_floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HaltReason {
    PositivityFloor { t: f64, species: usize },
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub halted: Option<HaltReason>,
}

impl Trajectory {
    pub fn to_csv(&self, species_names: &[String]) -> String {
        let mut out = String::from("t");
        for name in species_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (t, x) in self.times.iter().zip(self.states.iter()) {
            out.push_str(&format!("{t:.12e}"));
            for v in x {
                out.push_str(&format!(",{v:.12e}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Integrate the full mass action ODE with adaptive Dormand-Prince 5(4).
pub fn integrate(
    net: &Network,
    x0: &[f64],
    kappa: &[f64],
    t_span: (f64, f64),
    opts: &IntegrateOptions,
) -> Result<Trajectory, AnalysisError> {
    let schedule = base_schedule::<f64>(net);
    integrate_scheduled(net, &schedule, 0.0, x0, kappa, t_span, opts)
}

pub fn integrate_scheduled(
    net: &Network,
    schedule: &[RateExpr<f64>],
    eps: f64,
    x0: &[f64],
    kappa: &[f64],
    t_span: (f64, f64),
    opts: &IntegrateOptions,
) -> Result<Trajectory, AnalysisError> {
    if x0.iter().any(|&v| v <= 0.0) {
        return Err(AnalysisError::LeftPositiveOrthant);
    }
    let (t0, t1) = t_span;
    let mut traj = Trajectory {
        times: vec![t0],
        states: vec![x0.to_vec()],
        halted: None,
    };
    if t1 == t0 {
        return Ok(traj);
    }
    let f = |x: &[f64]| full_field_scheduled(net, schedule, eps, x, kappa);

    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const B5: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];

    let n = x0.len();
    let dir = (t1 - t0).signum();
    let mut t = t0;
    let mut x = x0.to_vec();
    let mut h = (t1 - t0).abs().min(1e-2) * dir;
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    for _ in 0..opts.max_steps {
        if (t - t1) * dir >= 0.0 {
            return Ok(traj);
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        k[0] = f(&x);
        let mut failed_positivity = false;
        for s in 0..6 {
            let mut xs = x.clone();
            for (j, kj) in k.iter().enumerate().take(s + 1) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..n {
                        xs[i] += h * a * kj[i];
                    }
                }
            }
            if xs.iter().any(|&v| v <= 0.0) {
                failed_positivity = true;
                break;
            }
            k[s + 1] = f(&xs);
        }
        if failed_positivity {
            h *= 0.5;
            if h.abs() < 1e-14 * (1.0 + t.abs()) {
                return Err(AnalysisError::StepSizeUnderflow { t, h });
            }
            continue;
        }
        let mut x5 = x.clone();
        let mut x4 = x.clone();
        let mut err = 0.0f64;
        for i in 0..n {
            for s in 0..7 {
                x5[i] += h * B5[s] * k[s][i];
                x4[i] += h * B4[s] * k[s][i];
            }
            let sc = opts.atol + opts.rtol * x[i].abs().max(x5[i].abs());
            let e = (x5[i] - x4[i]) / sc;
            err += e * e;
        }
        let err = (err / n as f64).sqrt();
        if err <= 1.0 {
            t += h;
            x = x5;
            traj.times.push(t);
            traj.states.push(x.clone());
            if let Some(i) = x.iter().position(|&v| v <= opts.positivity_floor) {
                traj.halted = Some(HaltReason::PositivityFloor { t, species: i });
                return Ok(traj);
            }
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h.abs() < 1e-14 * (1.0 + t.abs()) {
            return Err(AnalysisError::StepSizeUnderflow { t, h });
        }
    }
    Err(AnalysisError::StepSizeUnderflow { t, h })
}

/// Exact check that Gamma0 * Lambda = Gamma for a chart.
pub fn chart_factorization_exact(net: &Network, chart: &Chart) -> bool {
    chart.gamma0.to_qmat().mul(&chart.lambda) == net.gamma().to_qmat()
}

/// Conservation residual w . f(x) for every conservation vector.
pub fn conservation_residuals(net: &Network, x: &[f64], kappa: &[f64]) -> Vec<f64> {
    let w = net.conservation_basis();
    let f = full_field(net, x, kappa).unwrap_or_else(|_| vec![f64::NAN; net.n_species()]);
    (0..w.rows)
        .map(|i| {
            (0..net.n_species())
                .map(|j| crate::exact::rat_to_f64(w.get(i, j)) * f[j])
                .sum::<f64>()
        })
        .collect()
}

/// Rational one, convenient in generic contexts.
pub fn rat_one() -> Rat {
    rat(1)
}
