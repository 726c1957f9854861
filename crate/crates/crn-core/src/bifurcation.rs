//! Equilibrium location, bifurcation test functions, full Newton on the
//! combined system h = (f, g), transversality certificates, and
//! pseudo-arclength continuation for bracketing candidates.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::massaction::ReducedField;

/// Supported local bifurcations and their codimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BifKind {
    Fold,
    Hopf,
    Cusp,
}

impl BifKind {
    pub fn codim(&self) -> usize {
        match self {
            BifKind::Fold | BifKind::Hopf => 1,
            BifKind::Cusp => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BifKind::Fold => "fold",
            BifKind::Hopf => "hopf",
            BifKind::Cusp => "cusp",
        }
    }
}

/// Numerical tolerances; defaults match double-precision Newton practice.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tolerances {
    /// infinity-norm bound on f at equilibria
    pub eq_tol: f64,
    /// bound on scaled test-function values at a bifurcation point
    pub bif_tol: f64,
    /// transversality margin, relative to the norm of Dh
    pub trans_tol: f64,
    pub max_iter: usize,
    /// Hopf guard: |Re lambda| bound for the imaginary pair
    pub hopf_re_tol: f64,
    /// Hopf guard: minimal |Im lambda| of the pair
    pub hopf_im_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eq_tol: 1e-12,
            bif_tol: 1e-8,
            trans_tol: 1e-6,
            max_iter: 50,
            hopf_re_tol: 1e-8,
            hopf_im_tol: 1e-6,
        }
    }
}

/// Scaled test-function values for one bifurcation kind. Determinant-type
/// values are divided by max(1, Hadamard bound) so the bif_tol gate is
/// meaningful uniformly across stiff and non-stiff systems; zeros and signs
/// are unchanged by the scaling.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestFunctionValue {
    pub kind: BifKind,
    pub values: Vec<f64>,
    pub raw: Vec<f64>,
}

fn hadamard_bound(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows()).map(|i| m.row(i).norm()).product()
}

fn scaled_det(m: &DMatrix<f64>) -> (f64, f64) {
    if m.nrows() == 0 {
        return (1.0, 1.0);
    }
    let raw = m.determinant();
    (raw, raw / hadamard_bound(m).max(1.0))
}

/// Fold test function det(D_theta f): (raw, scaled).
pub fn fold_test(jac: &DMatrix<f64>) -> (f64, f64) {
    scaled_det(jac)
}

/// Hopf test function det(2 J (.) I): determinant of the bialternate product
/// with the identity, which vanishes iff some pair of eigenvalues sums to
/// zero. Returns (raw, scaled).
pub fn hopf_test(jac: &DMatrix<f64>) -> (f64, f64) {
    let m = bialternate_2ji(jac);
    scaled_det(&m)
}

/// Bialternate product 2 A (.) I_n with rows/columns indexed by pairs (p,q),
/// p > q, in lexicographic order.
pub fn bialternate_2ji(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|p| (0..p).map(move |q| (p, q))).collect();
    let nn = pairs.len();
    DMatrix::from_fn(nn, nn, |row, col| {
        let (p, q) = pairs[row];
        let (r, s) = pairs[col];
        if r == p && s == q {
            a[(p, p)] + a[(q, q)]
        } else if r == q {
            -a[(p, s)]
        } else if s == q {
            a[(p, r)]
        } else if r == p {
            a[(q, s)]
        } else if s == p {
            -a[(q, r)]
        } else {
            0.0
        }
    })
}

/// Eigenvalues of a real matrix, sorted by (re, im) for determinism.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    let mut ev: Vec<Complex<f64>> = m.clone().complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
    ev
}

/// Outcome of the Hopf eigenvalue guard.
#[derive(Debug, Clone, PartialEq)]
pub enum HopfGuard {
    /// exactly one conjugate pair with small real part and Im >= im_tol
    ImaginaryPair { omega: f64 },
    /// the zero-sum pair is real (+lambda, -lambda): a neutral saddle
    RealPair,
    /// no eigenvalue pair sums to near zero
    NotNearZero,
}

pub fn hopf_guard(jac: &DMatrix<f64>, tol: &Tolerances) -> HopfGuard {
    let ev = eigenvalues(jac);
    let n = ev.len();
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..n {
        for j in 0..i {
            let s = (ev[i] + ev[j]).norm();
            if best.map(|(b, _, _)| s < b).unwrap_or(true) {
                best = Some((s, i, j));
            }
        }
    }
    let Some((s, i, j)) = best else {
        return HopfGuard::NotNearZero;
    };
    let scale = jac.norm().max(1.0);
    if s > 1e-5 * scale {
        return HopfGuard::NotNearZero;
    }
    let imaginary_pairs = ev
        .iter()
        .filter(|l| l.im >= tol.hopf_im_tol && l.re.abs() <= tol.hopf_re_tol.max(1e-7 * scale))
        .count();
    if ev[i].im.abs() >= tol.hopf_im_tol && ev[j].im.abs() >= tol.hopf_im_tol {
        if imaginary_pairs == 1 {
            HopfGuard::ImaginaryPair {
                omega: ev[i].im.abs().max(ev[j].im.abs()),
            }
        } else {
            HopfGuard::NotNearZero
        }
    } else {
        HopfGuard::RealPair
    }
}

/// Left/right null vectors (p, q) of a nearly singular matrix, via SVD,
/// normalized so <p, q> = 1 and q has unit norm.
pub fn fold_null_vectors(jac: &DMatrix<f64>) -> Option<(DVector<f64>, DVector<f64>)> {
    let svd = jac.clone().svd(true, true);
    let u = svd.u.as_ref()?;
    let vt = svd.v_t.as_ref()?;
    let k = jac.nrows() - 1; // smallest singular value position
    let q = vt.row(k).transpose();
    let p = u.column(k).clone_owned();
    let dot = p.dot(&q);
    if dot.abs() < 1e-12 {
        return None;
    }
    Some((p / dot, q))
}

/// Evaluate the test functions of `kind` at (theta, kappa). For Hopf, the
/// eigenvalue guard is consulted when the value is near zero and a real
/// zero-sum pair is reported as a neutral saddle.
pub fn test_functions(
    field: &ReducedField,
    theta: &[f64],
    kappa: &[f64],
    kind: BifKind,
    tol: &Tolerances,
) -> Result<TestFunctionValue, AnalysisError> {
    let jac = field.jac_state(theta, kappa);
    match kind {
        BifKind::Fold => {
            let (raw, scaled) = fold_test(&jac);
            Ok(TestFunctionValue {
                kind,
                values: vec![scaled],
                raw: vec![raw],
            })
        }
        BifKind::Hopf => {
            let (raw, scaled) = hopf_test(&jac);
            if scaled.abs() <= tol.bif_tol * 10.0 {
                if let HopfGuard::RealPair = hopf_guard(&jac, tol) {
                    return Err(AnalysisError::NeutralSaddle);
                }
            }
            Ok(TestFunctionValue {
                kind,
                values: vec![scaled],
                raw: vec![raw],
            })
        }
        BifKind::Cusp => {
            if field.dim != 1 {
                return Err(AnalysisError::CuspRequiresRankOne);
            }
            let (raw, scaled) = fold_test(&jac);
            let quad = field.bilinear(theta, kappa, &[1.0], &[1.0])[0];
            Ok(TestFunctionValue {
                kind,
                values: vec![scaled, quad],
                raw: vec![raw, quad],
            })
        }
    }
}

/// Newton iteration for an equilibrium of f(., kappa) from `theta_guess`.
pub fn find_equilibrium(
    field: &ReducedField,
    theta_guess: &[f64],
    kappa: &[f64],
    tol: &Tolerances,
) -> Result<Vec<f64>, AnalysisError> {
    let mut theta = DVector::from_column_slice(theta_guess);
    for _ in 0..tol.max_iter {
        let f = field.value(theta.as_slice(), kappa);
        let res = f.amax();
        if res <= tol.eq_tol {
            return Ok(theta.as_slice().to_vec());
        }
        let jac = field.jac_state(theta.as_slice(), kappa);
        let delta = jac
            .lu()
            .solve(&(-&f))
            .ok_or(AnalysisError::SingularJacobian { residual: res })?;
        // damped step: backtrack while the residual grows
        let mut lam = 1.0;
        let mut accepted = false;
        for _ in 0..10 {
            let cand = &theta + lam * &delta;
            let fc = field.value(cand.as_slice(), kappa);
            if fc.norm() < f.norm() || fc.amax() <= tol.eq_tol {
                theta = cand;
                accepted = true;
                break;
            }
            lam *= 0.5;
        }
        if !accepted {
            theta += delta;
        }
        if !theta.iter().all(|v| v.is_finite()) {
            return Err(AnalysisError::NewtonDiverged {
                iters: tol.max_iter,
                residual: res,
            });
        }
    }
    let res = field.value(theta.as_slice(), kappa).amax();
    if res <= tol.eq_tol {
        Ok(theta.as_slice().to_vec())
    } else {
        Err(AnalysisError::NewtonDiverged {
            iters: tol.max_iter,
            residual: res,
        })
    }
}

/// Pass/fail flags attached to a located bifurcation point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PassFlags {
    pub equilibrium: bool,
    pub test_functions: bool,
    pub transversal: bool,
    pub positive: bool,
}

impl PassFlags {
    pub fn all(&self) -> bool {
        self.equilibrium && self.test_functions && self.transversal && self.positive
    }
}

/// A located bifurcation point with diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BifPoint {
    pub kind: BifKind,
    pub theta: Vec<f64>,
    /// full species state x = x_base + Gamma0 theta (empty without a chart)
    pub x: Vec<f64>,
    /// all parameter values at the solution
    pub kappa: Vec<f64>,
    pub param_names: Vec<String>,
    pub free_params: Vec<String>,
    /// eigenvalues of D_theta f as (re, im)
    pub eigenvalues: Vec<(f64, f64)>,
    pub test_values: Vec<f64>,
    pub test_values_raw: Vec<f64>,
    /// smallest singular value of D_(theta,kappa_free) h
    pub sigma_min: f64,
    /// largest singular value of the same matrix
    pub dh_norm: f64,
    /// smallest singular value after row equilibration (the PASS margin)
    pub sigma_min_scaled: f64,
    /// smallest singular value of the D_theta block (B3 rank condition)
    pub sigma_min_state_block: f64,
    pub residual: f64,
    /// fold: <p, B(q,q)>; cusp: the same quadratic coefficient
    pub quad_coeff: Option<f64>,
    /// fold with one free parameter: <p, D_kappa f>
    pub param_slope: Option<f64>,
    /// Hopf frequency
    pub omega: Option<f64>,
    /// first Lyapunov coefficient (Hopf only)
    pub l1: Option<f64>,
    pub pass: PassFlags,
}

impl BifPoint {
    pub fn free_param_indices(&self) -> Vec<usize> {
        self.free_params
            .iter()
            .map(|f| {
                self.param_names
                    .iter()
                    .position(|p| p == f)
                    .expect("free param known")
            })
            .collect()
    }
}

struct NewtonSystem<'a> {
    field: &'a ReducedField,
    kind: BifKind,
    free: Vec<usize>,
}

impl<'a> NewtonSystem<'a> {
    fn dim(&self) -> usize {
        self.field.dim + self.kind.codim()
    }

    fn split(&self, u: &DVector<f64>, kappa_base: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let r = self.field.dim;
        let theta: Vec<f64> = u.as_slice()[..r].to_vec();
        let mut kappa = kappa_base.to_vec();
        for (k, &idx) in self.free.iter().enumerate() {
            kappa[idx] = u[r + k];
        }
        (theta, kappa)
    }

    fn residual(&self, u: &DVector<f64>, kappa_base: &[f64]) -> DVector<f64> {
        let (theta, kappa) = self.split(u, kappa_base);
        let f = self.field.value(&theta, &kappa);
        let jac = self.field.jac_state(&theta, &kappa);
        let mut out = DVector::zeros(self.dim());
        for i in 0..self.field.dim {
            out[i] = f[i];
        }
        match self.kind {
            BifKind::Fold => {
                out[self.field.dim] = jac.determinant();
            }
            BifKind::Hopf => {
                out[self.field.dim] = bialternate_2ji(&jac).determinant();
            }
            BifKind::Cusp => {
                out[self.field.dim] = jac[(0, 0)];
                out[self.field.dim + 1] = self.field.bilinear(&theta, &kappa, &[1.0], &[1.0])[0];
            }
        }
        out
    }

    /// Line-search merit: equilibrium residuals plus Hadamard-scaled test
    /// values, so both blocks are comparable regardless of stiffness.
    fn merit(&self, u: &DVector<f64>, kappa_base: &[f64]) -> f64 {
        let (theta, kappa) = self.split(u, kappa_base);
        let f = self.field.value(&theta, &kappa);
        let jac = self.field.jac_state(&theta, &kappa);
        let mut acc: f64 = f.iter().map(|v| v * v).sum();
        match self.kind {
            BifKind::Fold => {
                let (_, s) = fold_test(&jac);
                acc += s * s;
            }
            BifKind::Hopf => {
                let (_, s) = hopf_test(&jac);
                acc += s * s;
            }
            BifKind::Cusp => {
                let (_, s) = fold_test(&jac);
                let quad = self.field.bilinear(&theta, &kappa, &[1.0], &[1.0])[0];
                acc += s * s + quad * quad;
            }
        }
        acc.sqrt()
    }

    fn jacobian(&self, u: &DVector<f64>, kappa_base: &[f64]) -> DMatrix<f64> {
        let (theta, kappa) = self.split(u, kappa_base);
        let r = self.field.dim;
        let c = self.kind.codim();
        let jac = self.field.jac_state(&theta, &kappa);
        let jp = self.field.jac_param(&theta, &kappa);
        let mut out = DMatrix::zeros(r + c, r + c);
        for i in 0..r {
            for j in 0..r {
                out[(i, j)] = jac[(i, j)];
            }
            for (k, &idx) in self.free.iter().enumerate() {
                out[(i, r + k)] = jp[(i, idx)];
            }
        }
        // variables of the combined system in field-variable indexing
        let vars: Vec<usize> = (0..r).chain(self.free.iter().map(|&idx| r + idx)).collect();
        match self.kind {
            BifKind::Fold => {
                let adj = adjugate(&jac);
                for (col, &var) in vars.iter().enumerate() {
                    let dj = self.field.jac_state_derivative(var, &theta, &kappa);
                    out[(r, col)] = (adj.clone() * dj).trace();
                }
            }
            BifKind::Hopf => {
                let m = bialternate_2ji(&jac);
                let adj = adjugate(&m);
                for (col, &var) in vars.iter().enumerate() {
                    let dj = self.field.jac_state_derivative(var, &theta, &kappa);
                    let dm = bialternate_2ji(&dj);
                    out[(r, col)] = (adj.clone() * dm).trace();
                }
            }
            BifKind::Cusp => {
                // g1 = f_theta, g2 = f_thetatheta for the 1-d reduced system
                for (col, &var) in vars.iter().enumerate() {
                    let dj = self.field.jac_state_derivative(var, &theta, &kappa);
                    out[(r, col)] = dj[(0, 0)];
                    out[(r + 1, col)] = self.field.third_partial(0, 0, 0, var, &theta, &kappa);
                }
            }
        }
        out
    }
}

/// Row- then column-equilibrated copy of a matrix (nonzero rows and columns
/// scaled to unit norm). Diagonal scalings preserve regularity, so the rank
/// condition is unchanged, while the singular-value margin becomes
/// meaningful when test-function rows dwarf equilibrium rows and fast
/// coordinates dwarf slow ones.
fn equilibrated(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    // alternate row and column normalization until balanced; one pass is
    // not enough when a single fast column dominates every row
    for _ in 0..25 {
        let mut spread: f64 = 1.0;
        for i in 0..out.nrows() {
            let n = out.row(i).norm();
            if n > 0.0 {
                spread = spread.max(n).max(1.0 / n);
                for j in 0..out.ncols() {
                    out[(i, j)] /= n;
                }
            }
        }
        for j in 0..out.ncols() {
            let n = out.column(j).norm();
            if n > 0.0 {
                spread = spread.max(n).max(1.0 / n);
                for i in 0..out.nrows() {
                    out[(i, j)] /= n;
                }
            }
        }
        if (spread - 1.0).abs() < 1e-3 {
            break;
        }
    }
    out
}

/// Adjugate via cofactor expansion; fine for the small dimensions used here.
pub fn adjugate(m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    if n == 1 {
        return DMatrix::from_element(1, 1, 1.0);
    }
    let mut adj = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let minor = m.clone().remove_row(i).remove_column(j);
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            adj[(j, i)] = sign * minor.determinant();
        }
    }
    adj
}

/// Full Newton on h = (f, g)(theta, kappa_free) = 0 from a seed, then
/// assembly of the BifPoint with diagnostics and a transversality margin.
/// A non-transverse solution is returned flagged, not treated as an error.
pub fn locate_bifurcation(
    field: &ReducedField,
    kind: BifKind,
    seed_theta: &[f64],
    seed_kappa: &[f64],
    free: &[usize],
    tol: &Tolerances,
) -> Result<BifPoint, AnalysisError> {
    let c = kind.codim();
    if free.len() != c {
        return Err(AnalysisError::WrongFreeParamCount {
            expected: c,
            codim: c,
            got: free.len(),
        });
    }
    if kind == BifKind::Cusp && field.dim != 1 {
        return Err(AnalysisError::CuspRequiresRankOne);
    }
    let sys = NewtonSystem {
        field,
        kind,
        free: free.to_vec(),
    };
    let r = field.dim;
    let mut u = DVector::zeros(r + c);
    for i in 0..r {
        u[i] = seed_theta[i];
    }
    for (k, &idx) in free.iter().enumerate() {
        u[r + k] = seed_kappa[idx];
    }

    let mut converged = false;
    for _ in 0..tol.max_iter {
        let fval = sys.residual(&u, seed_kappa);
        let (theta, kappa) = sys.split(&u, seed_kappa);
        if equilibrium_and_test_converged(field, kind, &theta, &kappa, &fval, tol) {
            converged = true;
            break;
        }
        let jac = sys.jacobian(&u, seed_kappa);
        let delta = jac
            .lu()
            .solve(&(-&fval))
            .ok_or(AnalysisError::SingularJacobian {
                residual: fval.amax(),
            })?;
        let base_merit = sys.merit(&u, seed_kappa);
        let mut lam = 1.0;
        let mut stepped = false;
        for _ in 0..8 {
            let cand = &u + lam * &delta;
            // require a real decrease; an undamped step is preferred over
            // crawling when no backtracked step helps
            if sys.merit(&cand, seed_kappa) < base_merit * (1.0 - 0.2 * lam) {
                u = cand;
                stepped = true;
                break;
            }
            lam *= 0.5;
        }
        if !stepped {
            u += delta;
        }
        if !u.iter().all(|v| v.is_finite()) {
            return Err(AnalysisError::NewtonDiverged {
                iters: tol.max_iter,
                residual: f64::INFINITY,
            });
        }
    }
    let fval = sys.residual(&u, seed_kappa);
    let (theta, kappa) = sys.split(&u, seed_kappa);
    if !converged && !equilibrium_and_test_converged(field, kind, &theta, &kappa, &fval, tol) {
        return Err(AnalysisError::NewtonDiverged {
            iters: tol.max_iter,
            residual: fval.amax(),
        });
    }

    assemble_bif_point(field, kind, &theta, &kappa, free, tol)
}

fn equilibrium_and_test_converged(
    field: &ReducedField,
    kind: BifKind,
    theta: &[f64],
    kappa: &[f64],
    fval: &DVector<f64>,
    tol: &Tolerances,
) -> bool {
    let r = field.dim;
    if (0..r).any(|i| fval[i].abs() > tol.eq_tol) {
        return false;
    }
    let jac = field.jac_state(theta, kappa);
    match kind {
        BifKind::Fold => fold_test(&jac).1.abs() <= tol.bif_tol,
        BifKind::Hopf => hopf_test(&jac).1.abs() <= tol.bif_tol,
        BifKind::Cusp => fold_test(&jac).1.abs() <= tol.bif_tol && fval[r + 1].abs() <= tol.bif_tol,
    }
}

/// Build the diagnostics for a converged combined-system solution.
pub fn assemble_bif_point(
    field: &ReducedField,
    kind: BifKind,
    theta: &[f64],
    kappa: &[f64],
    free: &[usize],
    tol: &Tolerances,
) -> Result<BifPoint, AnalysisError> {
    let sys = NewtonSystem {
        field,
        kind,
        free: free.to_vec(),
    };
    let r = field.dim;
    let mut u = DVector::zeros(r + kind.codim());
    for i in 0..r {
        u[i] = theta[i];
    }
    for (k, &idx) in free.iter().enumerate() {
        u[r + k] = kappa[idx];
    }
    let fval = sys.residual(&u, kappa);
    let jac = field.jac_state(theta, kappa);
    let eig = eigenvalues(&jac);

    let dh = sys.jacobian(&u, kappa);
    let svals = dh.clone().svd(false, false).singular_values;
    let sigma_min = svals[svals.len() - 1];
    let dh_norm = svals[0];
    let eq = equilibrated(&dh);
    let esv = eq.clone().svd(false, false).singular_values;
    let sigma_min_scaled = esv[esv.len() - 1];
    let state_block = dh.columns(0, r).clone_owned();
    let bsv = state_block.svd(false, false).singular_values;
    let sigma_min_state_block = bsv[bsv.len() - 1];
    let eq_state = eq.columns(0, r).clone_owned();
    let esb = eq_state.svd(false, false).singular_values;
    let sigma_min_state_scaled = esb[esb.len() - 1];

    let tv = match kind {
        BifKind::Fold => {
            let (raw, scaled) = fold_test(&jac);
            TestFunctionValue {
                kind,
                values: vec![scaled],
                raw: vec![raw],
            }
        }
        BifKind::Hopf => {
            let (raw, scaled) = hopf_test(&jac);
            TestFunctionValue {
                kind,
                values: vec![scaled],
                raw: vec![raw],
            }
        }
        BifKind::Cusp => {
            let (raw, scaled) = fold_test(&jac);
            let quad = field.bilinear(theta, kappa, &[1.0], &[1.0])[0];
            TestFunctionValue {
                kind,
                values: vec![scaled, quad],
                raw: vec![raw, quad],
            }
        }
    };

    let mut quad_coeff = None;
    let mut param_slope = None;
    let mut omega = None;
    let mut l1 = None;
    match kind {
        BifKind::Fold => {
            if let Some((p, q)) = fold_null_vectors(&jac) {
                let b = field.bilinear(theta, kappa, q.as_slice(), q.as_slice());
                quad_coeff = Some(p.dot(&b));
                if free.len() == 1 {
                    let jp = field.jac_param(theta, kappa);
                    param_slope = Some(p.dot(&jp.column(free[0]).clone_owned()));
                }
            }
        }
        BifKind::Hopf => match hopf_guard(&jac, tol) {
            HopfGuard::ImaginaryPair { omega: w } => {
                omega = Some(w);
                l1 = crate::lyapunov::first_lyapunov(field, theta, kappa, tol)
                    .ok()
                    .map(|r| r.l1);
            }
            HopfGuard::RealPair => return Err(AnalysisError::NeutralSaddle),
            HopfGuard::NotNearZero => {}
        },
        BifKind::Cusp => {
            quad_coeff = Some(field.bilinear(theta, kappa, &[1.0], &[1.0])[0]);
        }
    }

    let x = field.x_of_theta(theta).unwrap_or_default();
    let positive = field.state_positive(theta) && kappa.iter().all(|&k| k > 0.0);
    let equilibrium_ok = (0..r).all(|i| fval[i].abs() <= 1e-10);
    let test_ok = tv.values.iter().all(|v| v.abs() <= tol.bif_tol);
    let transversal = sigma_min_scaled > tol.trans_tol && sigma_min_state_scaled > tol.trans_tol;

    Ok(BifPoint {
        kind,
        theta: theta.to_vec(),
        x,
        kappa: kappa.to_vec(),
        param_names: field.param_names.clone(),
        free_params: free.iter().map(|&i| field.param_names[i].clone()).collect(),
        eigenvalues: eig.iter().map(|l| (l.re, l.im)).collect(),
        test_values: tv.values,
        test_values_raw: tv.raw,
        sigma_min,
        dh_norm,
        sigma_min_scaled,
        sigma_min_state_block,
        residual: (0..r).map(|i| fval[i].abs()).fold(0.0, f64::max),
        quad_coeff,
        param_slope,
        omega,
        l1,
        pass: PassFlags {
            equilibrium: equilibrium_ok,
            test_functions: test_ok,
            transversal,
            positive,
        },
    })
}

/// Transversality certificate for a located point: the singular values of
/// D_(theta,kappa_free) h, the rank condition on the state block, and the
/// parameters used.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransversalityReport {
    pub sigma_min: f64,
    pub dh_norm: f64,
    pub sigma_min_scaled: f64,
    pub sigma_min_state_block: f64,
    pub state_rank_full: bool,
    pub free_params: Vec<String>,
    pub pass: bool,
}

pub fn transversality_certificate(
    field: &ReducedField,
    bp: &BifPoint,
    tol: &Tolerances,
) -> TransversalityReport {
    let free = bp.free_param_indices();
    let sys = NewtonSystem {
        field,
        kind: bp.kind,
        free: free.clone(),
    };
    let r = field.dim;
    let mut u = DVector::zeros(r + bp.kind.codim());
    for i in 0..r {
        u[i] = bp.theta[i];
    }
    for (k, &idx) in free.iter().enumerate() {
        u[r + k] = bp.kappa[idx];
    }
    let dh = sys.jacobian(&u, &bp.kappa);
    let svals = dh.clone().svd(false, false).singular_values;
    let sigma_min = svals[svals.len() - 1];
    let dh_norm = svals[0];
    let eq = equilibrated(&dh);
    let esv = eq.clone().svd(false, false).singular_values;
    let sigma_min_scaled = esv[esv.len() - 1];
    let state_block = dh.columns(0, r).clone_owned();
    let bsv = state_block.svd(false, false).singular_values;
    let sigma_min_state_block = bsv[bsv.len() - 1];
    let eq_state = eq.columns(0, r).clone_owned();
    let esb = eq_state.svd(false, false).singular_values;
    let state_rank_full = esb[esb.len() - 1] > tol.trans_tol;
    let pass = sigma_min_scaled > tol.trans_tol && state_rank_full;
    TransversalityReport {
        sigma_min,
        dh_norm,
        sigma_min_scaled,
        sigma_min_state_block,
        state_rank_full,
        free_params: bp.free_params.clone(),
        pass,
    }
}

/// Choose `c` unfolding parameters by column-pivoted QR of the parameter
/// block of Dh at a candidate point.
pub fn choose_unfolding_params(
    field: &ReducedField,
    kind: BifKind,
    theta: &[f64],
    kappa: &[f64],
    tol: &Tolerances,
) -> Result<Vec<usize>, AnalysisError> {
    let c = kind.codim();
    if field.n_param < c {
        return Err(AnalysisError::WrongFreeParamCount {
            expected: c,
            codim: c,
            got: field.n_param,
        });
    }
    let _ = tol;
    // parameter block of Dh over all parameters
    let r = field.dim;
    let jp = field.jac_param(theta, kappa);
    let jac = field.jac_state(theta, kappa);
    let mut block = DMatrix::zeros(r + c, field.n_param);
    for i in 0..r {
        for j in 0..field.n_param {
            block[(i, j)] = jp[(i, j)];
        }
    }
    for j in 0..field.n_param {
        let dj = field.jac_state_derivative(r + j, theta, kappa);
        match kind {
            BifKind::Fold => {
                let adj = adjugate(&jac);
                block[(r, j)] = (adj * dj).trace();
            }
            BifKind::Hopf => {
                let m = bialternate_2ji(&jac);
                let adj = adjugate(&m);
                block[(r, j)] = (adj * bialternate_2ji(&dj)).trace();
            }
            BifKind::Cusp => {
                block[(r, j)] = dj[(0, 0)];
                block[(r + 1, j)] = field.third_partial(0, 0, 0, r + j, theta, kappa);
            }
        }
    }
    let qr = block.col_piv_qr();
    let perm = qr.p();
    let mut order = DVector::from_fn(field.n_param, |i, _| i as f64);
    perm.permute_rows(&mut order);
    Ok(order.iter().take(c).map(|&v| v as usize).collect())
}

/// One accepted point on a continuation branch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BranchPoint {
    pub theta: Vec<f64>,
    pub kappa_free: f64,
    pub test_fold: f64,
    pub test_hopf: f64,
    pub eigenvalues: Vec<(f64, f64)>,
}

/// A bracketed sign change of a test function along a branch.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Bracket {
    pub kind: BifKind,
    pub index: usize,
    pub kappa_lo: f64,
    pub kappa_hi: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub brackets: Vec<Bracket>,
    pub truncated: Option<String>,
    pub notice: Option<String>,
}

/// Options for pseudo-arclength continuation.
#[derive(Debug, Clone)]
pub struct ContinuationOptions {
    pub step: f64,
    pub min_step: f64,
    pub max_step: f64,
    pub max_points: usize,
}

impl Default for ContinuationOptions {
    fn default() -> Self {
        ContinuationOptions {
            step: 0.05,
            min_step: 1e-6,
            max_step: 0.25,
            max_points: 400,
        }
    }
}

/// Pseudo-arclength continuation of the equilibrium branch through the seed,
/// sweeping the free parameter over `range` in both directions and recording
/// test-function sign changes as bracketed candidate intervals.
pub fn continue_equilibrium(
    field: &ReducedField,
    seed_theta: &[f64],
    kappa: &[f64],
    free_idx: usize,
    range: (f64, f64),
    opts: &ContinuationOptions,
    tol: &Tolerances,
) -> Branch {
    let (lo, hi) = (range.0.min(range.1), range.0.max(range.1));
    let seed = match find_equilibrium(field, seed_theta, kappa, tol) {
        Ok(t) => t,
        Err(e) => {
            return Branch {
                points: Vec::new(),
                brackets: Vec::new(),
                truncated: None,
                notice: Some(format!("no seed equilibrium: {e}")),
            }
        }
    };
    let mut truncated = None;
    let forward = run_direction(field, &seed, kappa, free_idx, (lo, hi), 1.0, opts, tol);
    let backward = run_direction(field, &seed, kappa, free_idx, (lo, hi), -1.0, opts, tol);
    if let Some(t) = forward.1 {
        truncated = Some(t);
    }
    if let Some(t) = backward.1 {
        truncated = Some(truncated.map(|s| format!("{s}; ")).unwrap_or_default() + &t);
    }
    let mut points: Vec<BranchPoint> = backward.0.into_iter().rev().collect();
    points.push(make_branch_point(field, &seed, kappa, free_idx));
    points.extend(forward.0);

    let mut brackets = Vec::new();
    for i in 1..points.len() {
        let (a, b) = (&points[i - 1], &points[i]);
        if a.test_fold * b.test_fold < 0.0 {
            brackets.push(Bracket {
                kind: BifKind::Fold,
                index: i,
                kappa_lo: a.kappa_free.min(b.kappa_free),
                kappa_hi: a.kappa_free.max(b.kappa_free),
            });
        }
        if a.test_hopf * b.test_hopf < 0.0 {
            brackets.push(Bracket {
                kind: BifKind::Hopf,
                index: i,
                kappa_lo: a.kappa_free.min(b.kappa_free),
                kappa_hi: a.kappa_free.max(b.kappa_free),
            });
        }
    }
    Branch {
        points,
        brackets,
        truncated,
        notice: None,
    }
}

fn make_branch_point(
    field: &ReducedField,
    theta: &[f64],
    kappa: &[f64],
    free_idx: usize,
) -> BranchPoint {
    let jac = field.jac_state(theta, kappa);
    let (_, tf) = fold_test(&jac);
    let (_, th) = hopf_test(&jac);
    BranchPoint {
        theta: theta.to_vec(),
        kappa_free: kappa[free_idx],
        test_fold: tf,
        test_hopf: th,
        eigenvalues: eigenvalues(&jac).iter().map(|l| (l.re, l.im)).collect(),
    }
}

fn branch_tangent(
    field: &ReducedField,
    theta: &[f64],
    kappa: &[f64],
    free_idx: usize,
) -> Option<DVector<f64>> {
    let r = field.dim;
    let jac = field.jac_state(theta, kappa);
    let jp = field.jac_param(theta, kappa);
    // pad with a zero row so the full V is available (nalgebra SVD is thin)
    let mut ext = DMatrix::zeros(r + 1, r + 1);
    for i in 0..r {
        for j in 0..r {
            ext[(i, j)] = jac[(i, j)];
        }
        ext[(i, r)] = jp[(i, free_idx)];
    }
    let svd = ext.svd(false, true);
    let vt = svd.v_t?;
    let t = vt.row(r).transpose();
    let norm = t.norm();
    if norm < 1e-12 {
        return None;
    }
    Some(t / norm)
}

#[allow(clippy::too_many_arguments)]
fn run_direction(
    field: &ReducedField,
    seed_theta: &[f64],
    kappa_base: &[f64],
    free_idx: usize,
    range: (f64, f64),
    direction: f64,
    opts: &ContinuationOptions,
    tol: &Tolerances,
) -> (Vec<BranchPoint>, Option<String>) {
    let r = field.dim;
    let mut points = Vec::new();
    let mut kappa = kappa_base.to_vec();
    let mut theta = seed_theta.to_vec();
    let Some(mut tangent) = branch_tangent(field, &theta, &kappa, free_idx) else {
        return (points, Some("no branch tangent at seed".into()));
    };
    if tangent[r] * direction < 0.0 || (tangent[r] == 0.0 && direction < 0.0) {
        tangent = -tangent;
    }
    let mut h = opts.step;
    let mut truncated = None;
    let mut failures = 0usize;
    while points.len() < opts.max_points {
        // predictor
        let mut u = DVector::zeros(r + 1);
        for i in 0..r {
            u[i] = theta[i] + h * tangent[i];
        }
        u[r] = kappa[free_idx] + h * tangent[r];
        // corrector: bordered Newton orthogonal to the tangent
        let mut ok = false;
        for _ in 0..tol.max_iter.min(25) {
            let mut kap = kappa.clone();
            kap[free_idx] = u[r];
            let th: Vec<f64> = u.as_slice()[..r].to_vec();
            let f = field.value(&th, &kap);
            if f.amax() <= tol.eq_tol.max(1e-11) {
                ok = true;
                break;
            }
            let jac = field.jac_state(&th, &kap);
            let jp = field.jac_param(&th, &kap);
            let mut bord = DMatrix::zeros(r + 1, r + 1);
            for i in 0..r {
                for j in 0..r {
                    bord[(i, j)] = jac[(i, j)];
                }
                bord[(i, r)] = jp[(i, free_idx)];
            }
            for j in 0..r + 1 {
                bord[(r, j)] = tangent[j];
            }
            let mut rhs = DVector::zeros(r + 1);
            for i in 0..r {
                rhs[i] = -f[i];
            }
            match bord.lu().solve(&rhs) {
                Some(delta) => u += delta,
                None => break,
            }
            if !u.iter().all(|v| v.is_finite()) {
                break;
            }
        }
        if !ok {
            failures += 1;
            h *= 0.5;
            if h < opts.min_step || failures > 20 {
                break;
            }
            continue;
        }
        failures = 0;
        let th: Vec<f64> = u.as_slice()[..r].to_vec();
        let mut kap = kappa.clone();
        kap[free_idx] = u[r];
        if kap[free_idx] < range.0 || kap[free_idx] > range.1 {
            break;
        }
        if !field.state_positive(&th) || kap[free_idx] <= 0.0 {
            truncated = Some("branch left the positive orthant".into());
            break;
        }
        points.push(make_branch_point(field, &th, &kap, free_idx));
        let Some(mut new_tangent) = branch_tangent(field, &th, &kap, free_idx) else {
            break;
        };
        if new_tangent.dot(&tangent) < 0.0 {
            new_tangent = -new_tangent;
        }
        tangent = new_tangent;
        theta = th;
        kappa = kap;
        h = (h * 1.3).min(opts.max_step);
    }
    (points, truncated)
}

/// Scan the free parameter over a grid, tracking the equilibrium by Newton
/// continuation, and bisect the first sign change of the scaled test
/// function. Returns the refined parameter value and equilibrium.
#[allow(clippy::too_many_arguments)]
pub fn scan_and_bisect(
    field: &ReducedField,
    kind: BifKind,
    theta_seed: &[f64],
    kappa: &[f64],
    free_idx: usize,
    lo: f64,
    hi: f64,
    grid: usize,
    tol: &Tolerances,
) -> Result<(Vec<f64>, f64), AnalysisError> {
    let test_at = |theta_guess: &[f64], k: f64| -> Option<(Vec<f64>, f64)> {
        let mut kap = kappa.to_vec();
        kap[free_idx] = k;
        let th = find_equilibrium(field, theta_guess, &kap, tol).ok()?;
        if !field.state_positive(&th) {
            return None;
        }
        let jac = field.jac_state(&th, &kap);
        let v = match kind {
            BifKind::Fold | BifKind::Cusp => fold_test(&jac).1,
            BifKind::Hopf => hopf_test(&jac).1,
        };
        Some((th, v))
    };
    let mut prev: Option<(f64, Vec<f64>, f64)> = None;
    let mut theta_guess = theta_seed.to_vec();
    for i in 0..=grid {
        let k = lo + (hi - lo) * i as f64 / grid as f64;
        let Some((th, v)) = test_at(&theta_guess, k) else {
            prev = None;
            continue;
        };
        theta_guess = th.clone();
        if let Some((pk, pth, pv)) = prev.take() {
            if pv * v < 0.0 || (v == 0.0 && pv != 0.0) {
                // bisect
                let (mut a, mut fa, mut tha) = (pk, pv, pth);
                let (mut b, _fb) = (k, v);
                for _ in 0..80 {
                    let mid = 0.5 * (a + b);
                    match test_at(&tha, mid) {
                        Some((thm, fm)) => {
                            if fa * fm <= 0.0 {
                                b = mid;
                            } else {
                                a = mid;
                                fa = fm;
                                tha = thm;
                            }
                        }
                        None => break,
                    }
                    if (b - a).abs() < 1e-13 * (1.0 + a.abs()) {
                        break;
                    }
                }
                let kmid = 0.5 * (a + b);
                let (thm, _) = test_at(&tha, kmid).ok_or(AnalysisError::NoBracket)?;
                return Ok((thm, kmid));
            }
        }
        prev = Some((k, th, v));
    }
    Err(AnalysisError::NoBracket)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::massaction::{make_chart, reduced_field};
    use crate::parser::parse_network;
    use crate::poly::Poly;

    fn r0_field() -> ReducedField {
        let net = parse_network("X1 + 2 X2 -> 3 X2 @ 1 ; X2 -> X1 @ k").unwrap();
        let chart = make_chart(&net, &[1.0, 1.0]).unwrap();
        reduced_field(&net, &chart)
    }

    #[test]
    fn find_equilibrium_r0() {
        // kappa = 0.75: equilibrium theta* = 0.5 since 1 - 0.75 - theta^2 = 0
        let f = r0_field();
        let tol = Tolerances::default();
        let th = find_equilibrium(&f, &[0.4], &[0.75], &tol).unwrap();
        assert!((th[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn find_equilibrium_linear_one_step() {
        // linear field converges in one Newton step
        let p = Poly::<f64>::var(1, 0)
            .scale(&-2.0)
            .add(&Poly::constant(1, 3.0));
        let f = ReducedField::from_polys(1, 0, vec![p], vec![], None);
        let tol = Tolerances {
            max_iter: 1,
            ..Default::default()
        };
        let th = find_equilibrium(&f, &[10.0], &[], &tol).unwrap();
        assert!((th[0] - 1.5).abs() < 1e-14);
    }

    #[test]
    fn brusselator_equilibrium() {
        let net =
            parse_network("0 -> X @ k1 ; X -> 0 @ k2 ; X -> Y @ k3 ; 2 X + Y -> 3 X @ k4").unwrap();
        let chart = make_chart(&net, &[0.9, 1.2]).unwrap();
        let f = reduced_field(&net, &chart);
        let tol = Tolerances::default();
        let th = find_equilibrium(&f, &[0.0, 0.0], &[1.0, 1.0, 1.0, 1.0], &tol).unwrap();
        let x = f.x_of_theta(&th).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-10);
        assert!((x[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn bialternate_eigenvalue_sum_oracle() {
        // eigenvalues of 2A (.) I are exactly the pairwise sums of
        // eigenvalues of A
        let a = DMatrix::from_row_slice(3, 3, &[0.3, -1.2, 0.8, 2.0, 0.1, -0.5, 0.7, 0.4, -1.1]);
        let m = bialternate_2ji(&a);
        let ev_a = eigenvalues(&a);
        let mut sums: Vec<Complex<f64>> = Vec::new();
        for i in 0..3 {
            for j in 0..i {
                sums.push(ev_a[i] + ev_a[j]);
            }
        }
        let mut ev_m = eigenvalues(&m);
        sums.sort_by(|x, y| (x.re, x.im).partial_cmp(&(y.re, y.im)).unwrap());
        ev_m.sort_by(|x, y| (x.re, x.im).partial_cmp(&(y.re, y.im)).unwrap());
        for (s, e) in sums.iter().zip(ev_m.iter()) {
            assert!((s - e).norm() < 1e-10, "{s} vs {e}");
        }
    }

    #[test]
    fn locate_fold_r0() {
        let f = r0_field();
        let tol = Tolerances::default();
        let bp = locate_bifurcation(&f, BifKind::Fold, &[0.2], &[0.8], &[0], &tol).unwrap();
        assert!(bp.theta[0].abs() < 1e-10);
        assert!((bp.kappa[0] - 1.0).abs() < 1e-10);
        assert!(bp.pass.all(), "{:?}", bp.pass);
        // f_thetatheta = -2 < 0 and f_kappa = -1 < 0 recorded
        assert!((bp.quad_coeff.unwrap() + 2.0).abs() < 1e-9);
        assert!((bp.param_slope.unwrap() + 1.0).abs() < 1e-9);
        // transversality: Dh = [[0,-1],[-2,-1]], sigma_min = sqrt(3 - sqrt(5))
        let expect = (3.0f64 - 5.0f64.sqrt()).sqrt();
        assert!((bp.sigma_min - expect).abs() < 1e-8, "{}", bp.sigma_min);
    }

    #[test]
    fn locate_hopf_brusselator() {
        // trace zero at k3 = k2 + k4 (k1/k2)^2 = 2 for unit rates
        let net =
            parse_network("0 -> X @ k1 ; X -> 0 @ k2 ; X -> Y @ k3 ; 2 X + Y -> 3 X @ k4").unwrap();
        let chart = make_chart(&net, &[1.0, 1.5]).unwrap();
        let f = reduced_field(&net, &chart);
        let tol = Tolerances::default();
        let th = find_equilibrium(&f, &[0.0, 0.0], &[1.0, 1.0, 1.8, 1.0], &tol).unwrap();
        let k3 = f.param_index("k3").unwrap();
        let bp =
            locate_bifurcation(&f, BifKind::Hopf, &th, &[1.0, 1.0, 1.8, 1.0], &[k3], &tol).unwrap();
        assert!((bp.kappa[k3] - 2.0).abs() < 1e-9, "k3 = {}", bp.kappa[k3]);
        let x = f.x_of_theta(&bp.theta).unwrap();
        // equilibrium x* = k1/k2 = 1, y* = k3/(k4 x*) = 2
        assert!((x[0] - 1.0).abs() < 1e-9);
        assert!((x[1] - 2.0).abs() < 1e-9);
        assert!(bp.pass.all());
        assert!(bp.omega.unwrap() > 0.5);
    }

    #[test]
    fn hopf_scan_oracle_brusselator() {
        // independent oracle: eigenvalue scan over a k3 grid using the
        // analytic Jacobian of the full 2-d system
        let jac = |k3: f64| -> DMatrix<f64> {
            // equilibrium (1, k3) for k1=k2=k4=1
            let (x, y) = (1.0, k3);
            DMatrix::from_row_slice(
                2,
                2,
                &[-1.0 - k3 + 2.0 * x * y, x * x, k3 - 2.0 * x * y, -x * x],
            )
        };
        let mut bracket = None;
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..=40 {
            let k3 = 1.5 + i as f64 * (2.5 - 1.5) / 40.0;
            let ev = eigenvalues(&jac(k3));
            let re = ev.iter().map(|l| l.re).fold(f64::NEG_INFINITY, f64::max);
            if let Some((pk, pre)) = prev {
                if pre < 0.0 && re >= 0.0 {
                    bracket = Some((pk, k3));
                    break;
                }
            }
            prev = Some((k3, re));
        }
        let (lo, hi) = bracket.expect("oracle bracket");
        assert!(lo < 2.0 && hi >= 2.0);
    }

    #[test]
    fn cusp_synthetic_field() {
        // f(theta, k1, k2) = (k1 - 1) + (k2 - 1) theta - theta^3:
        // cusp at theta = 0, k = (1, 1)
        let t = Poly::<f64>::var(3, 0);
        let k1 = Poly::<f64>::var(3, 1);
        let k2 = Poly::<f64>::var(3, 2);
        let one = Poly::constant(3, 1.0);
        let p = k1.sub(&one).add(&k2.sub(&one).mul(&t)).sub(&t.pow(3));
        let f = ReducedField::from_polys(1, 2, vec![p], vec!["k1".into(), "k2".into()], None);
        let tol = Tolerances::default();
        let tv = test_functions(&f, &[0.0], &[1.0, 1.0], BifKind::Cusp, &tol).unwrap();
        assert!(tv.values[0].abs() < 1e-14 && tv.values[1].abs() < 1e-14);
        let bp = locate_bifurcation(&f, BifKind::Cusp, &[0.2], &[1.3, 0.8], &[0, 1], &tol).unwrap();
        assert!(bp.theta[0].abs() < 1e-8);
        assert!((bp.kappa[0] - 1.0).abs() < 1e-8);
        assert!((bp.kappa[1] - 1.0).abs() < 1e-8);
        assert!(bp.pass.transversal);
    }

    #[test]
    fn degenerate_parameter_fails_transversality() {
        // f(theta, k) = (k - 1)^2 - theta^2 - 0.0: at the fold candidate
        // theta=0, k=1 the kappa-derivative vanishes: sigma_min = 0
        let t = Poly::<f64>::var(2, 0);
        let k = Poly::<f64>::var(2, 1);
        let one = Poly::constant(2, 1.0);
        let p = k.sub(&one).pow(2).sub(&t.pow(2));
        let f = ReducedField::from_polys(1, 1, vec![p], vec!["k".into()], None);
        let tol = Tolerances::default();
        let bp = assemble_bif_point(&f, BifKind::Fold, &[0.0], &[1.0], &[0], &tol).unwrap();
        assert!(!bp.pass.transversal);
        assert!(bp.sigma_min < 1e-12);
    }

    #[test]
    fn neutral_saddle_rejected() {
        // 2-d saddle with eigenvalues +1, -1: hopf test vanishes but the
        // pair is real
        let p1 = Poly::<f64>::var(2, 0);
        let p2 = Poly::<f64>::var(2, 1).neg();
        let f = ReducedField::from_polys(2, 0, vec![p1, p2], vec![], None);
        let tol = Tolerances::default();
        let err = test_functions(&f, &[0.0, 0.0], &[], BifKind::Hopf, &tol).unwrap_err();
        assert!(matches!(err, AnalysisError::NeutralSaddle));
    }

    #[test]
    fn continuation_brackets_r0_fold() {
        let f = r0_field();
        let tol = Tolerances::default();
        let opts = ContinuationOptions::default();
        // seed on the branch at kappa = 0.75 (theta = 0.5), sweep [0.5, 2]
        let branch = continue_equilibrium(&f, &[0.5], &[0.75], 0, (0.5, 2.0), &opts, &tol);
        assert!(branch.points.len() > 5);
        let folds: Vec<&Bracket> = branch
            .brackets
            .iter()
            .filter(|b| b.kind == BifKind::Fold)
            .collect();
        assert!(!folds.is_empty(), "no fold bracket found");
        assert!(folds[0].kappa_lo < 1.0 && folds[0].kappa_hi > 0.97);
    }

    #[test]
    fn continuation_no_equilibrium_notice() {
        // constant field 0 -> X has no equilibrium
        let net = parse_network("0 -> X @ k").unwrap();
        let chart = make_chart(&net, &[1.0]).unwrap();
        let f = reduced_field(&net, &chart);
        let branch = continue_equilibrium(
            &f,
            &[0.0],
            &[1.0],
            0,
            (0.5, 2.0),
            &ContinuationOptions::default(),
            &Tolerances::default(),
        );
        assert!(branch.points.is_empty());
        assert!(branch.notice.is_some());
    }

    #[test]
    fn scan_bisect_finds_brusselator_hopf() {
        // grid scanning sees sign changes of test functions along a branch
        // that persists; folds where the branch itself turns are the job of
        // pseudo-arclength continuation instead
        let net =
            parse_network("0 -> X @ k1 ; X -> 0 @ k2 ; X -> Y @ k3 ; 2 X + Y -> 3 X @ k4").unwrap();
        let chart = make_chart(&net, &[1.0, 1.5]).unwrap();
        let f = reduced_field(&net, &chart);
        let tol = Tolerances::default();
        let k3 = f.param_index("k3").unwrap();
        let (th, k) = scan_and_bisect(
            &f,
            BifKind::Hopf,
            &[0.0, 0.0],
            &[1.0, 1.0, 1.5, 1.0],
            k3,
            1.5,
            2.5,
            40,
            &tol,
        )
        .unwrap();
        assert!((k - 2.0).abs() < 1e-9, "k = {k}");
        let x = f.x_of_theta(&th).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-6);
    }
}
