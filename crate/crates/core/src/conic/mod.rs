//! Solver-agnostic conic programs over real variables.
//!
//! A [`ConeProgram`] is a linear objective (maximized) plus affine
//! expressions constrained to the zero cone, the nonnegative orthant, the
//! exponential cone `{(x, y, z) : y·e^{x/y} ≤ z, y > 0}` and real PSD cones.
//! Complex Hermitian PSD variables are carried through the real embedding
//! `[[Re A, −Im A], [Im A, Re A]] ⪰ 0`, built from one shared set of real
//! unknowns so the symmetric / antisymmetric structure holds exactly.
//!
//! The backend contract is [`StandardForm`] → [`BackendOutput`]; the only
//! shipped backend is [`ClarabelBackend`].

mod affine;
mod clarabel_backend;
mod dump;

use std::collections::HashMap;
use std::ops::Range;

use thiserror::Error;

use crate::linalg::{min_eigenvalue, trace_re, CMat, CVec};

pub use affine::AffineExpr;
pub use clarabel_backend::ClarabelBackend;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConicError {
    #[error("duplicate variable name `{0}`")]
    DuplicateName(String),
    #[error("`e^t ≥ rhs` is not a convex constraint; linearize it first")]
    NonConvex,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid program: {0}")]
    Invalid(String),
}

/// Index of a scalar real decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// Handle to an `n × n` Hermitian matrix variable.
///
/// `re` holds the upper triangle of `Re A` (diagonal included) in row-major
/// order, `im` the strict upper triangle of `Im A`. The lower triangles follow
/// from Hermitian symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianSlice {
    pub name: String,
    pub n: usize,
    re: Vec<VarId>,
    im: Vec<VarId>,
}

impl HermitianSlice {
    fn tri_index(n: usize, i: usize, j: usize) -> usize {
        debug_assert!(i <= j && j < n);
        i * n - i * (i + 1) / 2 + j
    }

    fn strict_index(n: usize, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < n);
        i * (n - 1) - i * (i + 1) / 2 + j - 1
    }

    /// Variable holding `Re A_ij` (symmetric, so the order of `i, j` is free).
    pub fn re_var(&self, i: usize, j: usize) -> VarId {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        self.re[Self::tri_index(self.n, a, b)]
    }

    /// `Im A_ij` as `(sign, var)`; `None` on the diagonal.
    pub fn im_var(&self, i: usize, j: usize) -> Option<(f64, VarId)> {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Equal => None,
            Less => Some((1.0, self.im[Self::strict_index(self.n, i, j)])),
            Greater => Some((-1.0, self.im[Self::strict_index(self.n, j, i)])),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.re.len() + self.im.len()
    }

    /// `Re Tr(C A)` as an affine expression.
    pub fn trace_product(&self, coeff: &CMat) -> AffineExpr {
        assert_eq!(coeff.nrows(), self.n, "coefficient dimension");
        let mut expr = AffineExpr::zero();
        for i in 0..self.n {
            expr.add_term(self.re_var(i, i), coeff[(i, i)].re);
            for j in (i + 1)..self.n {
                // C_ji A_ij + C_ij A_ji with A_ij = x + iy, A_ji = x − iy
                let (cji, cij) = (coeff[(j, i)], coeff[(i, j)]);
                expr.add_term(self.re_var(i, j), cji.re + cij.re);
                let (_, y) = self.im_var(i, j).expect("off-diagonal");
                expr.add_term(y, cij.im - cji.im);
            }
        }
        expr
    }

    /// `r A r^H` for a fixed row `r`.
    pub fn row_form(&self, row: &CVec) -> AffineExpr {
        self.trace_product(&crate::linalg::outer_row(row))
    }

    /// `c^H A c` for a fixed column `c`.
    pub fn col_form(&self, col: &CVec) -> AffineExpr {
        self.trace_product(&crate::linalg::outer_col(col))
    }

    /// `Tr(A)`.
    pub fn trace(&self) -> AffineExpr {
        let mut expr = AffineExpr::zero();
        for i in 0..self.n {
            expr.add_term(self.re_var(i, i), 1.0);
        }
        expr
    }

    /// Entry `(r, c)` of the `2n × 2n` real embedding.
    fn embedding_entry(&self, r: usize, c: usize) -> AffineExpr {
        let n = self.n;
        let mut expr = AffineExpr::zero();
        match (r < n, c < n) {
            (true, true) => expr.add_term(self.re_var(r, c), 1.0),
            (false, false) => expr.add_term(self.re_var(r - n, c - n), 1.0),
            // upper-right block is −Im A
            (true, false) => {
                if let Some((sign, y)) = self.im_var(r, c - n) {
                    expr.add_term(y, -sign);
                }
            }
            // lower-left block is Im A
            (false, true) => {
                if let Some((sign, y)) = self.im_var(r - n, c) {
                    expr.add_term(y, sign);
                }
            }
        }
        expr
    }

    /// Reads the matrix back from a primal vector.
    pub fn extract(&self, x: &[f64]) -> CMat {
        CMat::from_fn(self.n, self.n, |i, j| {
            let re = x[self.re_var(i, j).0];
            let im = self.im_var(i, j).map_or(0.0, |(s, v)| s * x[v.0]);
            num_complex::Complex64::new(re, im)
        })
    }

    /// Writes a numeric Hermitian matrix into a primal vector.
    pub fn assign(&self, a: &CMat, x: &mut [f64]) {
        for i in 0..self.n {
            for j in i..self.n {
                x[self.re_var(i, j).0] = 0.5 * (a[(i, j)].re + a[(j, i)].re);
                if let Some((_, v)) = self.im_var(i, j) {
                    x[v.0] = 0.5 * (a[(i, j)].im - a[(j, i)].im);
                }
            }
        }
    }
}

/// Cone of a constraint block, in backend order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeKind {
    Zero(usize),
    Nonnegative(usize),
    Exponential,
    /// Real symmetric PSD cone of the given side, rows in scaled upper-triangle order.
    PsdTriangle(usize),
}

impl ConeKind {
    pub fn rows(&self) -> usize {
        match *self {
            ConeKind::Zero(m) | ConeKind::Nonnegative(m) => m,
            ConeKind::Exponential => 3,
            ConeKind::PsdTriangle(d) => d * (d + 1) / 2,
        }
    }
}

#[derive(Debug, Clone)]
struct PsdBlock {
    side: usize,
    /// Scaled upper triangle, column-major: `(0,0), (0,1), (1,1), (0,2), …`,
    /// off-diagonals multiplied by √2.
    entries: Vec<AffineExpr>,
}

/// One convex program. Variables are created through [`ConeProgram::scalar`]
/// and [`ConeProgram::embed_hermitian`].
#[derive(Debug, Clone, Default)]
pub struct ConeProgram {
    var_names: Vec<String>,
    names: HashMap<String, VarId>,
    blocks: Vec<HermitianSlice>,
    objective: AffineExpr,
    zero_rows: Vec<AffineExpr>,
    nonneg_rows: Vec<AffineExpr>,
    exp_triples: Vec<[AffineExpr; 3]>,
    psd_blocks: Vec<PsdBlock>,
}

impl ConeProgram {
    pub fn new() -> Self {
        Self::default()
    }

    fn claim(&mut self, name: &str) -> Result<(), ConicError> {
        if self.names.contains_key(name) || self.blocks.iter().any(|b| b.name == name) {
            return Err(ConicError::DuplicateName(name.to_owned()));
        }
        Ok(())
    }

    fn fresh(&mut self, label: String) -> VarId {
        let id = VarId(self.var_names.len());
        self.var_names.push(label);
        id
    }

    /// Registers a free scalar variable.
    pub fn scalar(&mut self, name: &str) -> Result<VarId, ConicError> {
        self.claim(name)?;
        let id = self.fresh(name.to_owned());
        self.names.insert(name.to_owned(), id);
        Ok(id)
    }

    pub fn var(&self, name: &str) -> Option<VarId> {
        self.names.get(name).copied()
    }

    /// Registers an `n × n` Hermitian PSD matrix variable. For `n = 1` the
    /// variable is a single nonnegative real.
    pub fn embed_hermitian(&mut self, name: &str, n: usize) -> Result<HermitianSlice, ConicError> {
        if n == 0 {
            return Err(ConicError::Dimension(format!("`{name}` must have n ≥ 1")));
        }
        self.claim(name)?;
        let mut re = Vec::with_capacity(n * (n + 1) / 2);
        let mut im = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i..n {
                re.push(self.fresh(format!("{name}.re[{i},{j}]")));
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                im.push(self.fresh(format!("{name}.im[{i},{j}]")));
            }
        }
        let slice = HermitianSlice {
            name: name.to_owned(),
            n,
            re,
            im,
        };
        if n == 1 {
            self.nonneg_rows.push(AffineExpr::var(slice.re_var(0, 0)));
        } else {
            let side = 2 * n;
            let mut entries = Vec::with_capacity(side * (side + 1) / 2);
            for c in 0..side {
                for r in 0..=c {
                    let mut e = slice.embedding_entry(r, c);
                    if r != c {
                        e.scale(std::f64::consts::SQRT_2);
                    }
                    entries.push(e);
                }
            }
            self.psd_blocks.push(PsdBlock { side, entries });
        }
        self.blocks.push(slice.clone());
        Ok(slice)
    }

    pub fn hermitian(&self, name: &str) -> Option<&HermitianSlice> {
        self.blocks.iter().find(|b| b.name == name)
    }

    pub fn maximize(&mut self, objective: AffineExpr) {
        self.objective = objective;
    }

    pub fn objective(&self) -> &AffineExpr {
        &self.objective
    }

    /// `lhs = rhs`.
    pub fn add_eq(&mut self, lhs: AffineExpr, rhs: AffineExpr) {
        self.zero_rows.push(lhs - rhs);
    }

    /// `lhs ≥ rhs`.
    pub fn add_ge(&mut self, lhs: AffineExpr, rhs: AffineExpr) {
        self.nonneg_rows.push(lhs - rhs);
    }

    /// `lhs ≤ rhs`.
    pub fn add_le(&mut self, lhs: AffineExpr, rhs: AffineExpr) {
        self.nonneg_rows.push(rhs - lhs);
    }

    /// `e^t ≤ rhs`, encoded as `(t, 1, rhs) ∈ K_exp`.
    pub fn exp_upper(&mut self, t: impl Into<AffineExpr>, rhs: AffineExpr) {
        self.exp_triples
            .push([t.into(), AffineExpr::constant(1.0), rhs]);
    }

    /// `e^t ≥ rhs` is not representable; always an error.
    pub fn exp_lower(
        &mut self,
        _t: impl Into<AffineExpr>,
        _rhs: AffineExpr,
    ) -> Result<(), ConicError> {
        Err(ConicError::NonConvex)
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn var_name(&self, v: VarId) -> &str {
        &self.var_names[v.0]
    }

    pub fn scalar_names(&self) -> impl Iterator<Item = (&str, VarId)> {
        self.names.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn hermitian_blocks(&self) -> &[HermitianSlice] {
        &self.blocks
    }

    pub fn num_exp_cones(&self) -> usize {
        self.exp_triples.len()
    }

    pub fn num_psd_cones(&self) -> usize {
        self.psd_blocks.len()
    }

    pub fn num_nonneg_rows(&self) -> usize {
        self.nonneg_rows.len()
    }

    pub fn num_zero_rows(&self) -> usize {
        self.zero_rows.len()
    }

    pub fn psd_sides(&self) -> Vec<usize> {
        self.psd_blocks.iter().map(|b| b.side).collect()
    }

    /// Lowers the program to `min q'x  s.t.  b − A x ∈ K`.
    pub fn standard_form(&self) -> Result<StandardForm, ConicError> {
        let n = self.num_vars();
        for expr in self.all_exprs() {
            if let Some(&(v, _)) = expr.terms().iter().find(|(v, _)| v.0 >= n) {
                return Err(ConicError::Invalid(format!(
                    "expression references unknown variable {}",
                    v.0
                )));
            }
        }
        let mut q = vec![0.0; n];
        for &(v, c) in self.objective.terms() {
            q[v.0] -= c;
        }
        let mut rows: Vec<&AffineExpr> = Vec::new();
        let mut cones = Vec::new();
        if !self.zero_rows.is_empty() {
            rows.extend(self.zero_rows.iter());
            cones.push(ConeKind::Zero(self.zero_rows.len()));
        }
        if !self.nonneg_rows.is_empty() {
            rows.extend(self.nonneg_rows.iter());
            cones.push(ConeKind::Nonnegative(self.nonneg_rows.len()));
        }
        for triple in &self.exp_triples {
            rows.extend(triple.iter());
            cones.push(ConeKind::Exponential);
        }
        for block in &self.psd_blocks {
            rows.extend(block.entries.iter());
            cones.push(ConeKind::PsdTriangle(block.side));
        }
        // s = b − A x equals the affine expression c + Σ a_i x_i, so A = −a, b = c
        let mut a_rows = Vec::with_capacity(rows.len());
        let mut b = Vec::with_capacity(rows.len());
        for expr in rows {
            a_rows.push(
                expr.terms()
                    .iter()
                    .map(|&(v, c)| (v.0, -c))
                    .collect::<Vec<_>>(),
            );
            b.push(expr.constant_term());
        }
        Ok(StandardForm {
            n,
            q,
            objective_offset: self.objective.constant_term(),
            a_rows,
            b,
            cones,
        })
    }

    fn all_exprs(&self) -> impl Iterator<Item = &AffineExpr> {
        std::iter::once(&self.objective)
            .chain(self.zero_rows.iter())
            .chain(self.nonneg_rows.iter())
            .chain(self.exp_triples.iter().flat_map(|t| t.iter()))
            .chain(self.psd_blocks.iter().flat_map(|b| b.entries.iter()))
    }

    /// Largest cone violation of a primal point, in absolute units.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for e in &self.zero_rows {
            worst = worst.max(e.eval(x).abs());
        }
        for e in &self.nonneg_rows {
            worst = worst.max(-e.eval(x));
        }
        for [a, b, c] in &self.exp_triples {
            worst = worst.max(exp_cone_violation(a.eval(x), b.eval(x), c.eval(x)));
        }
        for slice in &self.blocks {
            if slice.n > 1 {
                let m = slice.extract(x);
                worst = worst.max(-min_eigenvalue(&m));
            }
        }
        worst
    }

    /// Solves with the default backend.
    pub fn solve(&self, settings: &SolverSettings) -> Result<ConeSolution, ConicError> {
        self.solve_with(&ClarabelBackend, settings)
    }

    pub fn solve_with<B: ConicBackend>(
        &self,
        backend: &B,
        settings: &SolverSettings,
    ) -> Result<ConeSolution, ConicError> {
        let form = self.standard_form()?;
        let out = backend.solve(&form, settings);
        let objective = if out.status.has_point() {
            -out.objective + form.objective_offset
        } else {
            f64::NAN
        };
        let max_violation = if out.status.has_point() {
            self.max_violation(&out.x)
        } else {
            f64::NAN
        };
        let mut status = out.status;
        // the backend's own certificate is re-checked against the cones
        if status.has_point() && (max_violation.is_nan() || max_violation > settings.certify_tol) {
            status = SolveStatus::NumericalFailure;
        }
        Ok(ConeSolution {
            status,
            x: out.x,
            objective,
            diagnostics: Diagnostics {
                iterations: out.iterations,
                primal_residual: out.primal_residual,
                dual_residual: out.dual_residual,
                max_violation,
                attempts: out.attempts,
                solve_time: out.solve_time,
            },
        })
    }

    /// Plain-text dump in a CBF-like layout.
    pub fn dump(&self) -> String {
        dump::render(self)
    }
}

fn exp_cone_violation(x: f64, y: f64, z: f64) -> f64 {
    if y > 0.0 {
        (y * (x / y).exp() - z).max(0.0)
    } else {
        // closure at y = 0: x ≤ 0, z ≥ 0
        x.max(0.0).max(-z).max(-y)
    }
}

/// `min q'x + offset  s.t.  b − A x ∈ K₁ × … × K_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardForm {
    pub n: usize,
    pub q: Vec<f64>,
    pub objective_offset: f64,
    /// Sparse rows of `A` as `(column, value)`.
    pub a_rows: Vec<Vec<(usize, f64)>>,
    pub b: Vec<f64>,
    pub cones: Vec<ConeKind>,
}

impl StandardForm {
    pub fn num_rows(&self) -> usize {
        self.b.len()
    }

    pub fn row_ranges(&self) -> Vec<Range<usize>> {
        let mut start = 0;
        self.cones
            .iter()
            .map(|c| {
                let r = start..start + c.rows();
                start = r.end;
                r
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// Converged to the backend's reduced tolerances only.
    AlmostOptimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

impl SolveStatus {
    pub fn has_point(&self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::AlmostOptimal)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSettings {
    /// Feasibility and duality-gap tolerance.
    pub tol: f64,
    pub max_iter: u32,
    /// Largest cone violation accepted when re-checking a returned point.
    pub certify_tol: f64,
    pub verbose: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            certify_tol: 1e-5,
            verbose: false,
        }
    }
}

impl SolverSettings {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// What a backend hands back.
#[derive(Debug, Clone, PartialEq)]
pub struct BackendOutput {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    /// Backend objective `q'x` (minimization sense, offset excluded).
    pub objective: f64,
    pub iterations: u32,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// Settings profiles tried before this result.
    pub attempts: u32,
    pub solve_time: f64,
}

/// Adapter to a numerical conic solver. One backend value may be shared,
/// but each call owns its own solver instance.
pub trait ConicBackend {
    fn solve(&self, form: &StandardForm, settings: &SolverSettings) -> BackendOutput;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub iterations: u32,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub max_violation: f64,
    pub attempts: u32,
    pub solve_time: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeSolution {
    pub status: SolveStatus,
    pub x: Vec<f64>,
    /// Objective in the program's maximization sense.
    pub objective: f64,
    pub diagnostics: Diagnostics,
}

impl ConeSolution {
    pub fn value(&self, v: VarId) -> f64 {
        self.x[v.0]
    }

    pub fn eval(&self, e: &AffineExpr) -> f64 {
        e.eval(&self.x)
    }

    pub fn hermitian(&self, slice: &HermitianSlice) -> CMat {
        slice.extract(&self.x)
    }

    /// `min eig / trace` of every Hermitian block, for PSD sanity checks.
    pub fn psd_margins(&self, program: &ConeProgram) -> Vec<f64> {
        program
            .hermitian_blocks()
            .iter()
            .map(|b| {
                let m = self.hermitian(b);
                min_eigenvalue(&m) / trace_re(&m).abs().max(f64::MIN_POSITIVE)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests;
