//! Consequences of the main dissipativity theorem beyond the certificate:
//! behaviors whose controllable part is static, autonomous lossless
//! behaviors, Σ-orthogonality of possibly uncontrollable behaviors, and
//! behaviors embeddable in both a Σ- and a −Σ-dissipative controllable one.

use num_complex::Complex64;
use serde::Serialize;

use crate::behavior::{Behavior, ModeSet};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat, RMat};
use crate::polymat::{two_var_from_images, PolyMatrix};
use crate::realization::StateSpace;
use crate::report::{complex_list, Report, Status};
use crate::riccati::{self, popov, CertifyOptions};

/// Required uniform margin for the strict Popov checks of the embedding.
pub const STRICT_MARGIN: f64 = 1e-6;

/// Relative threshold for the eigenspaces of imaginary-axis eigenvalues.
const EIGENSPACE_TOL: f64 = 1e-6;

fn imaginary_within(z: Complex64, tol: f64, scale: f64) -> bool {
    z.re.abs() <= tol * scale
}

/// What the pipeline said about the same data.
#[derive(Clone, Debug, Serialize)]
pub struct PipelineCheck {
    pub verdict: String,
    pub refused: bool,
    pub error: Option<String>,
}

impl PipelineCheck {
    fn run(ss: &StateSpace, j: &RMat, opts: &CertifyOptions) -> Self {
        match riccati::certify_state_space(ss, j, opts) {
            Ok(out) => PipelineCheck {
                verdict: out.verdict(),
                refused: !out.is_dissipative(),
                error: out.error_code().map(str::to_owned),
            },
            Err(e) => PipelineCheck { verdict: "input-error".into(), refused: true, error: Some(e.code().into()) },
        }
    }
}

// ---------------------------------------------------------------------------
// static controllable part

#[derive(Clone, Debug, Serialize)]
pub struct StaticNonexistence {
    /// `σ(A)`, all on the imaginary axis.
    #[serde(serialize_with = "ser_modes")]
    pub eigenvalues: Vec<Complex64>,
    pub pipeline: PipelineCheck,
    /// Error from solving the Riccati equation without the unmixing gate.
    pub direct_solve_error: Option<String>,
    /// Both the pipeline and the direct solve failed.
    pub confirmed: bool,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "applicability", rename_all = "kebab-case")]
pub enum StaticFinding {
    NotApplicable { reason: String },
    Applicable(StaticNonexistence),
}

fn ser_modes<S: serde::Serializer>(v: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
    complex_list(v).serialize(s)
}

impl StaticFinding {
    pub fn is_applicable(&self) -> bool {
        matches!(self, StaticFinding::Applicable(_))
    }

    pub fn to_report(&self) -> Report {
        match self {
            StaticFinding::NotApplicable { reason } => {
                Report::new("static-nonexistence", "not-applicable", Status::Affirmative).with("reason", reason)
            }
            StaticFinding::Applicable(f) => {
                let (verdict, status) = if f.confirmed {
                    ("are-unsolvable", Status::Negative)
                } else {
                    ("inconclusive:pipeline-disagrees", Status::Inconclusive)
                };
                Report::new("static-nonexistence", verdict, status)
                    .with("offending_eigenvalues", complex_list(&f.eigenvalues))
                    .with("pipeline", &f.pipeline)
                    .with("direct_solve_error", &f.direct_solve_error)
            }
        }
    }
}

/// When `B = 0`, `(C, A)` is observable, `I + DᵀJD ≻ 0` and `σ(A) ⊂ jℝ`, the
/// Riccati equation has no symmetric solution. The claim is checked by
/// running the certification pipeline and an ungated solve on the data.
pub fn static_part_nonexistence(ss: &StateSpace, j: &RMat, tol: f64) -> Result<StaticFinding> {
    if j.shape() != (ss.p(), ss.p()) {
        return Err(Error::ShapeMismatch(format!("J must be {0}x{0}", ss.p())));
    }
    let na = |reason: &str| Ok(StaticFinding::NotApplicable { reason: reason.into() });
    if ss.n() == 0 {
        return na("no states");
    }
    if ss.m() > 0 && linalg::norm2_real(&ss.b) > tol {
        return na("B is nonzero, so the controllable part is not static");
    }
    if !ss.is_observable(tol) {
        return na("(C, A) is not observable");
    }
    let s = riccati::strictness_at_infinity(&ss.d, j);
    if s <= tol {
        return na("I + DᵀJD is not positive definite");
    }
    let scale = linalg::norm2_real(&ss.a).max(1.0);
    let eigs = linalg::eigenvalues_real(&ss.a);
    if !eigs.iter().all(|&z| imaginary_within(z, tol, scale)) {
        return na("σ(A) has eigenvalues off the imaginary axis");
    }
    let opts = CertifyOptions { tol, ..Default::default() };
    let pipeline = PipelineCheck::run(ss, j, &opts);
    let lambda_un = ModeSet::new(eigs.clone());
    let direct_solve_error = riccati::solve_storage(ss, j, &lambda_un, &opts).err().map(|e| e.code().to_owned());
    let confirmed = pipeline.refused && direct_solve_error.is_some();
    Ok(StaticFinding::Applicable(StaticNonexistence { eigenvalues: lambda_un.modes, pipeline, direct_solve_error, confirmed }))
}

// ---------------------------------------------------------------------------
// lossless autonomous behaviors

#[derive(Clone, Debug, Serialize)]
pub struct ImaginaryMode {
    pub eigenvalue: [f64; 2],
    /// `‖Cx‖` for an orthonormal basis of the eigenspace.
    pub residuals: Vec<f64>,
    /// Largest `‖Cx‖` over unit eigenvectors, basis independent.
    pub max_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LosslessObstruction {
    pub modes: Vec<ImaginaryMode>,
    /// Some imaginary mode is visible in `w = Cx`, so no observable storage
    /// function exists for the supply `−wᵀw`.
    pub unobservable_storage_required: bool,
    pub pipeline: PipelineCheck,
}

impl LosslessObstruction {
    pub fn verdict(&self) -> &'static str {
        if self.unobservable_storage_required {
            "unobservable storage required"
        } else {
            "no obstruction"
        }
    }

    pub fn to_report(&self) -> Report {
        let status = match (self.unobservable_storage_required, self.pipeline.refused) {
            (true, true) => Status::Negative,
            (true, false) => Status::Inconclusive,
            (false, _) => Status::Affirmative,
        };
        Report::new("lossless-unobservable", self.verdict(), status)
            .with("modes", &self.modes)
            .with("pipeline", &self.pipeline)
    }
}

/// For `ẋ = Ax, w = Cx` and supply `−wᵀw`: report `‖Cx‖` on every eigenspace of
/// an imaginary-axis eigenvalue. A nonzero value rules out storage functions
/// of the observable state.
pub fn lossless_obstruction(a: &RMat, c: &RMat, tol: f64) -> Result<LosslessObstruction> {
    let n = a.nrows();
    if !a.is_square() || c.ncols() != n {
        return Err(Error::ShapeMismatch(format!("A is {:?}, C is {:?}", a.shape(), c.shape())));
    }
    let scale = linalg::norm2_real(a).max(1.0);
    let eigs = linalg::eigenvalues_real(a);
    let ac = linalg::to_complex(a);
    let cc = linalg::to_complex(c);
    let mut modes = Vec::new();
    for group in linalg::cluster(&eigs, EIGENSPACE_TOL * scale) {
        let pts: Vec<Complex64> = group.iter().map(|&i| eigs[i]).collect();
        let lam = linalg::mean(&pts);
        if !imaginary_within(lam, tol.max(EIGENSPACE_TOL), scale) {
            continue;
        }
        let lam = Complex64::new(0.0, lam.im);
        let shifted = &ac - CMat::identity(n, n) * lam;
        let x = linalg::null_space_abs(&shifted, EIGENSPACE_TOL * scale);
        let cx = &cc * &x;
        let residuals = (0..x.ncols()).map(|k| cx.column(k).norm()).collect();
        modes.push(ImaginaryMode { eigenvalue: [lam.re, lam.im], residuals, max_residual: linalg::norm2(&cx) });
    }
    modes.sort_by(|p, q| p.eigenvalue[1].partial_cmp(&q.eigenvalue[1]).unwrap());
    let required = modes.iter().any(|m| m.max_residual > tol);

    let p = c.nrows();
    let ss = StateSpace::new(a.clone(), RMat::zeros(n, 0), c.clone(), RMat::zeros(p, 0))?;
    let j = -RMat::identity(p, p);
    let pipeline = PipelineCheck::run(&ss, &j, &CertifyOptions { tol, ..Default::default() });
    Ok(LosslessObstruction { modes, unobservable_storage_required: required, pipeline })
}

// ---------------------------------------------------------------------------
// orthogonality

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrthogonalityVerdict {
    /// Both controllable and `∂(M₁ᵀΣM₂) ≡ 0`.
    Orthogonal,
    /// Both controllable and `∂(M₁ᵀΣM₂) ≢ 0`.
    NotOrthogonal,
    /// `m(B₁) + m(B₂) ≥ w` with an uncontrollable behavior involved.
    FailNecessity,
    /// The default smallest controllable superbehaviors are orthogonal.
    WitnessOrthogonal,
    /// The default superbehaviors are not orthogonal; other witnesses may be.
    Inconclusive,
}

impl OrthogonalityVerdict {
    pub fn label(self) -> &'static str {
        match self {
            OrthogonalityVerdict::Orthogonal => "orthogonal",
            OrthogonalityVerdict::NotOrthogonal => "not-orthogonal",
            OrthogonalityVerdict::FailNecessity => "not-orthogonal:cardinality",
            OrthogonalityVerdict::WitnessOrthogonal => "witness-based: PASS",
            OrthogonalityVerdict::Inconclusive => "default-witness FAIL (inconclusive)",
        }
    }

    pub fn status(self) -> Status {
        match self {
            OrthogonalityVerdict::Orthogonal | OrthogonalityVerdict::WitnessOrthogonal => Status::Affirmative,
            OrthogonalityVerdict::NotOrthogonal | OrthogonalityVerdict::FailNecessity => Status::Negative,
            OrthogonalityVerdict::Inconclusive => Status::Inconclusive,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OrthogonalityReport {
    pub verdict: OrthogonalityVerdict,
    pub w: usize,
    pub m1: usize,
    pub m2: usize,
    pub controllable1: bool,
    pub controllable2: bool,
    /// `M₁ᵀ(−ξ)ΣM₂(ξ)` for the (super)behaviors that were compared.
    pub partial: Option<PolyMatrix>,
    /// Kernel matrices of the default superbehaviors, when they were used.
    pub superbehaviors: Option<[PolyMatrix; 2]>,
}

impl OrthogonalityReport {
    pub fn to_report(&self) -> Report {
        Report::new("orthogonality", self.verdict.label(), self.verdict.status())
            .with("w", self.w)
            .with("m1", self.m1)
            .with("m2", self.m2)
            .with("controllable1", self.controllable1)
            .with("controllable2", self.controllable2)
            .with("partial", &self.partial)
            .with("superbehaviors", &self.superbehaviors)
    }
}

/// `∂(M₁ᵀΣM₂)` for controllable behaviors, exactly.
fn controllable_partial(b1: &Behavior, b2: &Behavior, sigma: &RMat) -> Result<PolyMatrix> {
    let m1 = b1.observable_image()?;
    let m2 = b2.observable_image()?;
    Ok(two_var_from_images(&m1, sigma, &m2)?.partial_op())
}

/// Σ-orthogonality: `B₁ ⊥_Σ B₂` when controllable behaviors containing them
/// are Σ-orthogonal. Exact for controllable inputs; otherwise the input
/// cardinality bound is checked first and the default smallest controllable
/// superbehaviors serve as witnesses.
pub fn orthogonality_check(b1: &Behavior, b2: &Behavior, sigma: &RMat) -> Result<OrthogonalityReport> {
    let w = b1.w();
    if b2.w() != w || sigma.shape() != (w, w) {
        return Err(Error::ShapeMismatch(format!(
            "behaviors on {} and {} variables with Σ {:?}",
            w,
            b2.w(),
            sigma.shape()
        )));
    }
    let (m1, m2) = (b1.input_cardinality(), b2.input_cardinality());
    let (c1, c2) = (b1.is_controllable(), b2.is_controllable());
    let mut rep = OrthogonalityReport {
        verdict: OrthogonalityVerdict::Inconclusive,
        w,
        m1,
        m2,
        controllable1: c1,
        controllable2: c2,
        partial: None,
        superbehaviors: None,
    };
    if c1 && c2 {
        let d = controllable_partial(b1, b2, sigma)?;
        rep.verdict = if d.is_zero() { OrthogonalityVerdict::Orthogonal } else { OrthogonalityVerdict::NotOrthogonal };
        rep.partial = Some(d);
        return Ok(rep);
    }
    if m1 + m2 >= w {
        rep.verdict = OrthogonalityVerdict::FailNecessity;
        return Ok(rep);
    }
    let s1 = b1.superbehavior(None, None)?;
    let s2 = b2.superbehavior(None, None)?;
    let d = controllable_partial(&s1, &s2, sigma)?;
    rep.verdict = if d.is_zero() { OrthogonalityVerdict::WitnessOrthogonal } else { OrthogonalityVerdict::Inconclusive };
    rep.partial = Some(d);
    rep.superbehaviors = Some([s1.kernel_matrix(), s2.kernel_matrix()]);
    Ok(rep)
}

// ---------------------------------------------------------------------------
// both-ways embedding

#[derive(Clone, Debug, Serialize)]
pub struct CardinalityBounds {
    pub m: usize,
    pub sigma_plus: usize,
    pub sigma_minus: usize,
    pub controllable: bool,
    /// `m ≤ σ₊`, necessary for Σ-dissipativity.
    pub dissipativity: bool,
    /// `m ≤ min(σ₊, σ₋)`, necessary for embedding in a Σ- and a
    /// −Σ-dissipative controllable behavior; strict when uncontrollable.
    pub two_sided: bool,
}

impl CardinalityBounds {
    pub fn to_report(&self) -> Report {
        let (verdict, status) = if self.dissipativity {
            ("necessary-condition-holds", Status::Affirmative)
        } else {
            ("not-dissipative", Status::Negative)
        };
        Report::new("cardinality", verdict, status).with("bounds", self)
    }
}

pub fn cardinality_bounds(b: &Behavior, sigma: &RMat) -> Result<CardinalityBounds> {
    if sigma.shape() != (b.w(), b.w()) {
        return Err(Error::ShapeMismatch(format!("Σ is {:?} for {} variables", sigma.shape(), b.w())));
    }
    let (plus, minus) = riccati::supply::inertia(sigma)?;
    let m = b.input_cardinality();
    let controllable = b.is_controllable();
    let lo = plus.min(minus);
    Ok(CardinalityBounds {
        m,
        sigma_plus: plus,
        sigma_minus: minus,
        controllable,
        dissipativity: m <= plus,
        two_sided: if controllable { m <= lo } else { m < lo },
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Margin {
    /// Smallest eigenvalue of `M*(jω)(±Σ)M(jω)` over the grid.
    pub min_eig: f64,
    pub witness: f64,
    pub grid_points: usize,
    pub label: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct EmbeddingReport {
    pub plus: Margin,
    pub minus: Margin,
    pub kernel: PolyMatrix,
    pub autonomous: bool,
    /// Degree of `det R` for a square kernel, the state dimension of `B`.
    pub dimension: Option<usize>,
    pub bounds: CardinalityBounds,
}

impl EmbeddingReport {
    pub fn to_report(&self) -> Report {
        let ok = self.autonomous && self.bounds.two_sided;
        let (verdict, status) = if ok {
            ("autonomous", Status::Affirmative)
        } else {
            ("not-autonomous", Status::Negative)
        };
        Report::new("embedding", verdict, status)
            .with("plus_margin", &self.plus)
            .with("minus_margin", &self.minus)
            .with("kernel", &self.kernel)
            .with("autonomous", self.autonomous)
            .with("dimension", self.dimension)
            .with("bounds", &self.bounds)
    }
}

fn strict_margin(m: &PolyMatrix, sigma: &RMat, grid: &[f64], name: &str) -> Result<Margin> {
    let v = popov::controllable_dissipativity(m, sigma, grid, 0.0)?;
    let margin = Margin { min_eig: v.min_raw, witness: v.witness, grid_points: v.grid_points, label: v.label };
    if !(v.min_raw >= STRICT_MARGIN) {
        // the raw minimum may sit elsewhere than the normalized witness
        let w = grid
            .iter()
            .chain(&v.boundary)
            .copied()
            .map(|w| {
                let mj = m.eval(Complex64::new(0.0, w));
                let pi = mj.adjoint() * linalg::to_complex(sigma) * mj;
                (w, linalg::herm_eigs(&pi).first().copied().unwrap_or(f64::INFINITY))
            })
            .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .map_or(0.0, |p| p.0);
        return Err(Error::StrictnessNotVerified(format!(
            "{name}: margin {:.3e} < {STRICT_MARGIN:e} at ω = {w}",
            v.min_raw
        )));
    }
    Ok(margin)
}

/// Intersect `im M₊` (strictly Σ-dissipative) with `im M₋` (strictly
/// −Σ-dissipative). Strictness means `M*(jω)(±Σ)M(jω) ≥ εI` on the grid
/// with `ε = STRICT_MARGIN`.
pub fn embed_both_ways(
    sigma: &RMat,
    m_plus: &PolyMatrix,
    m_minus: &PolyMatrix,
    grid: &[f64],
) -> Result<(Behavior, EmbeddingReport)> {
    let w = sigma.nrows();
    if sigma.ncols() != w || m_plus.nrows() != w || m_minus.nrows() != w {
        return Err(Error::ShapeMismatch(format!(
            "Σ is {:?}, M₊ has {} rows, M₋ has {} rows",
            sigma.shape(),
            m_plus.nrows(),
            m_minus.nrows()
        )));
    }
    riccati::supply::inertia(sigma)?;
    let plus = strict_margin(m_plus, sigma, grid, "M₊")?;
    let minus = strict_margin(m_minus, &(-sigma), grid, "M₋")?;
    let b = Behavior::image(m_plus.clone()).intersect(&Behavior::image(m_minus.clone()))?;
    let kernel = b.kernel_matrix();
    let dimension = if kernel.is_square() { kernel.det()?.degree() } else { None };
    let bounds = cardinality_bounds(&b, sigma)?;
    let rep = EmbeddingReport { plus, minus, kernel, autonomous: b.is_autonomous(), dimension, bounds };
    Ok((b, rep))
}
