//! The certification pipeline: from a behavior and a supply rate to either a
//! quadratic storage function `xᵀKx` or a refusal naming the first failed
//! assumption.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use super::hamiltonian::{self, HamiltonianData, SpectrumReport};
use super::popov::{self, PopovVerdict};
use super::subspace::{self, CSet, Spectrum, SubspaceOptions, TieBreak};
use super::supply;
use crate::behavior::{unmixing_witness, Behavior, IoPartition, ModeSet, Representation, PAIRING_TOL};
use crate::error::{Error, Result};
use crate::linalg::{self, fmt_c, CMat, RMat};
use crate::polymat::PolyMatrix;
use crate::realization::{self, StateMap, StateSpace};
use crate::report::{cmat_rows, complex_list, mat_rows, Report, Status};

#[derive(Clone, Debug)]
pub struct CertifyOptions {
    /// Certificate tolerance (strictness margin, Popov margin, residuals).
    pub tol: f64,
    /// Number of Popov grid frequencies.
    pub grid: usize,
    pub cluster_tol: f64,
    /// Tolerance for pairing `σ(H)` with its predicted spectrum.
    pub spectrum_tol: f64,
    pub cond_max: f64,
    pub herm_tol: f64,
    /// Invariance and neutrality tolerance for the computed subspace.
    pub subspace_tol: f64,
    /// Input/output split to use instead of the behavior's own or a search.
    pub partition: Option<IoPartition>,
    pub tie_break: TieBreak,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            tol: 1e-8,
            grid: 2000,
            cluster_tol: subspace::CLUSTER_TOL,
            spectrum_tol: 1e-6,
            cond_max: 1e10,
            herm_tol: 1e-8,
            subspace_tol: 1e-8,
            partition: None,
            tie_break: TieBreak::UpperHalfPlane,
        }
    }
}

impl CertifyOptions {
    fn subspace(&self) -> SubspaceOptions {
        SubspaceOptions {
            rank_tol: self.tol,
            subspace_tol: self.subspace_tol,
            cond_max: self.cond_max,
            herm_tol: self.herm_tol,
            real_tol: self.tol,
        }
    }
}

/// A verified quadratic storage function in the state of the realization.
#[derive(Clone, Debug)]
pub struct StorageCertificate {
    pub k: RMat,
    pub cset: CSet,
    pub basis: CMat,
    pub are_residual: f64,
    pub lmi_max_eig: f64,
    pub graph_residual: f64,
    /// `x = X(d/dt) w` in the caller's coordinates, when the state is observable.
    pub state_map: Option<StateMap>,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageRecord {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Refusal {
    pub stage: &'static str,
    pub code: &'static str,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct MultiplicityRecord {
    pub eigenvalue: [f64; 2],
    pub sizes: Vec<usize>,
}

#[derive(Clone, Debug, Default)]
pub struct CertifyOutcome {
    pub certificate: Option<StorageCertificate>,
    pub refusal: Option<Refusal>,
    pub assumptions: BTreeMap<String, bool>,
    pub stages: Vec<StageRecord>,
    pub m: usize,
    pub sigma_plus: usize,
    pub sigma_minus: usize,
    pub lambda_un: ModeSet,
    /// Realization in signature coordinates, with its output signature.
    pub realization: Option<StateSpace>,
    pub j: Option<RMat>,
    pub partition: Option<IoPartition>,
    pub spectrum: Option<SpectrumReport>,
    pub multiplicities: Vec<MultiplicityRecord>,
    pub popov: Option<PopovVerdict>,
    pub hamiltonian_eigenvalues: Vec<Complex64>,
    pub notes: Vec<String>,
    pub tolerances: BTreeMap<String, f64>,
}

impl CertifyOutcome {
    pub fn is_dissipative(&self) -> bool {
        self.certificate.is_some()
    }

    pub fn verdict(&self) -> String {
        match &self.refusal {
            None => "dissipative".into(),
            Some(r) => format!("refused:{}", r.stage),
        }
    }

    pub fn refused_stage(&self) -> Option<&'static str> {
        self.refusal.as_ref().map(|r| r.stage)
    }

    pub fn error_code(&self) -> Option<&'static str> {
        self.refusal.as_ref().map(|r| r.code)
    }

    fn pass(&mut self, name: &'static str, detail: impl Into<String>) {
        self.stages.push(StageRecord { name, passed: true, detail: detail.into() });
    }

    fn refuse(&mut self, stage: &'static str, err: &Error) {
        self.stages.push(StageRecord { name: stage, passed: false, detail: err.to_string() });
        self.refusal = Some(Refusal { stage, code: err.code(), reason: err.to_string() });
    }

    fn assume(&mut self, name: &str, ok: bool) {
        self.assumptions.insert(name.into(), ok);
    }

    pub fn to_report(&self) -> Report {
        let status = if self.is_dissipative() { Status::Affirmative } else { Status::Negative };
        let mut r = Report::new("certificate", self.verdict(), status)
            .with("assumptions", &self.assumptions)
            .with("stages", &self.stages)
            .with("input_cardinality", self.m)
            .with("sigma_plus", self.sigma_plus)
            .with("sigma_minus", self.sigma_minus)
            .with("uncontrollable_modes", &self.lambda_un)
            .with("multiplicities", &self.multiplicities)
            .with("hamiltonian_eigenvalues", complex_list(&self.hamiltonian_eigenvalues))
            .with("notes", &self.notes)
            .with("tolerances", &self.tolerances);
        if let Some(rf) = &self.refusal {
            r.insert("reason", &rf.reason);
            r.insert("error", rf.code);
        }
        if let Some(ss) = &self.realization {
            r.insert("realization", ss);
        }
        if let Some(j) = &self.j {
            r.insert("J", mat_rows(j));
        }
        if let Some(p) = &self.partition {
            r.insert("partition", p);
        }
        if let Some(s) = &self.spectrum {
            r.insert("spectrum_identity", s);
        }
        if let Some(p) = &self.popov {
            r.insert("popov", p);
        }
        match &self.certificate {
            Some(c) => {
                r.insert("K", mat_rows(&c.k));
                r.insert("cset", &c.cset.members);
                r.insert("are_residual", c.are_residual);
                r.insert("lmi_max_eig", c.lmi_max_eig);
                r.insert("graph_residual", c.graph_residual);
                r.insert("basis", cmat_rows(&c.basis));
                if let Some(sm) = &c.state_map {
                    r.insert("state_map", sm);
                }
            }
            None => {
                r.insert("K", serde_json::Value::Null);
            }
        }
        r
    }
}

/// Where the Popov function and the predicted spectrum come from.
enum Frequency {
    /// Observable image of the controllable part with the original Σ.
    Image { m: PolyMatrix, sigma: RMat },
    /// Transfer matrix of the realization in signature coordinates.
    Transfer,
}

struct Realized {
    ss: StateSpace,
    j: RMat,
    partition: IoPartition,
    state_map: Option<StateMap>,
}

fn rmat_inverse(w: &RMat) -> Result<RMat> {
    w.clone().try_inverse().ok_or(Error::SingularSigma)
}

fn transform_state_map(sm: StateMap, right: &RMat) -> StateMap {
    let coeffs = (0..sm.coeffs.len()).map(|k| mat_rows(&(sm.coeff(k) * right))).collect();
    StateMap { coeffs }
}

/// Observable realization of a kernel behavior in the coordinates `w = W w̃`
/// where Σ becomes `diag(signs)`; the input set must sit in positive
/// coordinates.
fn realize_kernel(
    b: &Behavior,
    sigma: &RMat,
    preferred: Option<&IoPartition>,
    notes: &mut Vec<String>,
) -> Result<Realized> {
    let w = b.w();
    let m = b.input_cardinality();
    let r = b.kernel_matrix();
    let (wmat, signs) = supply::congruence(sigma)?;
    let diagonal = (0..w).all(|i| (0..w).all(|k| i == k || sigma[(i, k)] == 0.0));
    let r_t = r.mul(&PolyMatrix::from_real(&wmat))?;
    let w_inv = rmat_inverse(&wmat)?;

    let mut candidates: Vec<IoPartition> = Vec::new();
    match preferred {
        Some(p) if diagonal => {
            p.validate(w)?;
            if p.inputs.len() != m {
                return Err(Error::InvalidInput(format!(
                    "partition has {} inputs but the behavior has {m}",
                    p.inputs.len()
                )));
            }
            if let Some(&bad) = p.inputs.iter().find(|&&i| signs[i] < 0.0) {
                return Err(Error::InvalidInput(format!(
                    "input variable {bad} carries negative supply; inputs must lie in the positive part of Σ"
                )));
            }
            candidates.push(p.clone());
        }
        Some(_) => {
            notes.push("Σ is not diagonal: the given partition is replaced by a search in eigen-coordinates".into());
            candidates = search_partitions(&signs, m);
        }
        None => candidates = search_partitions(&signs, m),
    }
    let mut last = Error::SingularOutputBlock;
    for part in candidates {
        match realization::realize(&r_t, &part) {
            Ok(ss) => {
                let j = RMat::from_diagonal(&nalgebra::DVector::from_iterator(
                    part.outputs.len(),
                    part.outputs.iter().map(|&o| signs[o]),
                ));
                let state_map = realization::state_map(&ss, &part).ok().map(|sm| transform_state_map(sm, &w_inv));
                return Ok(Realized { ss, j, partition: part, state_map });
            }
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// Size-`m` subsets of the positive coordinates, lexicographically.
fn search_partitions(signs: &[f64], m: usize) -> Vec<IoPartition> {
    fn combos(pool: &[usize], k: usize, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if acc.len() == k {
            out.push(acc.clone());
            return;
        }
        for (i, &x) in pool.iter().enumerate() {
            acc.push(x);
            combos(&pool[i + 1..], k, acc, out);
            acc.pop();
        }
    }
    let pos: Vec<usize> = (0..signs.len()).filter(|&i| signs[i] > 0.0).collect();
    let mut sets = Vec::new();
    combos(&pos, m, &mut Vec::new(), &mut sets);
    sets.into_iter()
        .map(|inputs| {
            let outputs = (0..signs.len()).filter(|v| !inputs.contains(v)).collect();
            IoPartition { inputs, outputs }
        })
        .collect()
}

/// Iso data with Σ block diagonal along its io split: rescale inputs and
/// outputs so that Σ becomes `diag(I, J)`.
fn realize_iso(ss: &StateSpace, io: &IoPartition, sigma: &RMat) -> Result<Realized> {
    let (w_u, w_y, j) = supply::block_congruence(sigma, io)?;
    let wy_inv = rmat_inverse(&w_y)?;
    let st = StateSpace::new(ss.a.clone(), &ss.b * &w_u, &wy_inv * &ss.c, &wy_inv * &ss.d * &w_u)?;
    let lead = IoPartition::leading_inputs(st.m(), st.m() + st.p());
    let state_map = if st.is_observable(1e-10) {
        realization::state_map(&st, &lead).ok().map(|sm| {
            // columns of X̃ act on (ũ, ỹ); map back to the caller's w
            let (m, p) = (st.m(), st.p());
            let wu_inv = rmat_inverse(&w_u).unwrap_or_else(|_| RMat::zeros(m, m));
            let mut back = RMat::zeros(m + p, m + p);
            for (a, &var) in io.inputs.iter().enumerate() {
                for c in 0..m {
                    back[(c, var)] = wu_inv[(c, a)];
                }
            }
            for (a, &var) in io.outputs.iter().enumerate() {
                for c in 0..p {
                    back[(m + c, var)] = wy_inv[(c, a)];
                }
            }
            transform_state_map(sm, &back)
        })
    } else {
        None
    };
    Ok(Realized { ss: st, j, partition: io.clone(), state_map })
}

/// State scaling `x = T x̃`, `T` diagonal, that balances `A`. Companion-form
/// realizations carry large coefficients, and the graph subspace of the
/// scaled system is much better conditioned.
fn balanced(ss: &StateSpace) -> (StateSpace, Vec<f64>) {
    let mut a = ss.a.clone();
    let t = linalg::balance(&mut a);
    let b = RMat::from_fn(ss.b.nrows(), ss.b.ncols(), |i, j| ss.b[(i, j)] / t[i]);
    let c = RMat::from_fn(ss.c.nrows(), ss.c.ncols(), |i, j| ss.c[(i, j)] * t[j]);
    let st = StateSpace::new(a, b, c, ss.d.clone()).expect("scaling preserves shapes");
    (st, t)
}

/// Map `K̃` and `[X̃₁; X̃₂]` of the scaled system back: `K = T⁻¹K̃T⁻¹`,
/// `X₁ = T X̃₁`, `X₂ = T⁻¹ X̃₂`.
fn unscale(k: &RMat, basis: &CMat, t: &[f64]) -> (RMat, CMat) {
    let n = t.len();
    let k = RMat::from_fn(n, n, |i, j| k[(i, j)] / (t[i] * t[j]));
    let x = CMat::from_fn(2 * n, basis.ncols(), |i, j| {
        if i < n {
            basis[(i, j)] * t[i]
        } else {
            basis[(i, j)] / t[i - n]
        }
    });
    let x = if n == 0 { x } else { x.qr().q() };
    (k, x)
}

fn hamiltonian_of(ss: &StateSpace, j: &RMat, tol: f64) -> Result<HamiltonianData> {
    hamiltonian::build_hamiltonian(&hamiltonian::build_tilde(ss, j, tol)?)
}

/// Stages from the Hamiltonian to the verified `K`, without gating on
/// unmixing or on the Popov test. Used to cross-check refusals.
pub fn solve_storage(
    ss: &StateSpace,
    j: &RMat,
    lambda_un: &ModeSet,
    opts: &CertifyOptions,
) -> Result<(RMat, CSet, CMat)> {
    let (bss, t) = balanced(ss);
    let hd = hamiltonian_of(&bss, j, opts.tol)?;
    let spec = Spectrum::new(&hd.m, opts.cluster_tol);
    let (cset, basis, k) = graph_stages(&hd, &spec, lambda_un, opts).0.map_err(|(_, e)| e)?;
    let (k, basis) = unscale(&k, &basis, &t);
    Ok((k, cset, basis))
}

type StageResult = std::result::Result<(CSet, CMat, RMat), (&'static str, Error)>;

/// c-set, invariant subspace and `K` for one tie-break rule; errors carry
/// the stage name.
fn graph_stages_with(hd: &HamiltonianData, spec: &Spectrum, lambda_un: &ModeSet, tie: TieBreak, opts: &CertifyOptions) -> StageResult {
    let sopts = opts.subspace();
    let cset = subspace::build_cset_with(spec, lambda_un, opts.spectrum_tol * spec.scale, tie).map_err(|e| ("cset", e))?;
    let basis = subspace::neutral_invariant_subspace(hd, spec, &cset, &sopts).map_err(|e| ("subspace", e))?;
    let k = subspace::extract_k(&basis, &sopts).map_err(|e| ("graph-subspace", e))?;
    Ok((cset, basis, k))
}

/// The configured tie-break first. Every c-set containing jΛun yields a
/// storage function, so on a numerical failure the mirrored rule is tried;
/// it often avoids a nearly singular X₁. Returns a note when it was used.
fn graph_stages(hd: &HamiltonianData, spec: &Spectrum, lambda_un: &ModeSet, opts: &CertifyOptions) -> (StageResult, Option<String>) {
    let first = graph_stages_with(hd, spec, lambda_un, opts.tie_break, opts);
    match &first {
        Err((_, e)) if numerical_failure(e) => {
            let other = match opts.tie_break {
                TieBreak::UpperHalfPlane => TieBreak::LowerHalfPlane,
                TieBreak::LowerHalfPlane => TieBreak::UpperHalfPlane,
            };
            match graph_stages_with(hd, spec, lambda_un, other, opts) {
                Ok(ok) => (Ok(ok), Some(format!("configured tie-break failed ({e}); used the mirrored rule"))),
                Err(_) => (first, None),
            }
        }
        _ => (first, None),
    }
}

fn numerical_failure(e: &Error) -> bool {
    matches!(e, Error::NonHermitian(_) | Error::NonReal(_) | Error::NotGraphSubspace(_) | Error::IllConditioned | Error::NeutralityFailed(_))
}

fn verification_scale(ss: &StateSpace, k: &RMat) -> f64 {
    let data = linalg::norm2_real(&ss.a) + linalg::norm2_real(&ss.b) + linalg::norm2_real(&ss.c) + linalg::norm2_real(&ss.d);
    linalg::norm2_real(k).max(1.0) * data.max(1.0).powi(2)
}

fn kalman_modes(ss: &StateSpace) -> ModeSet {
    ModeSet::new(ss.kalman(1e-10).uncontrollable_modes())
}

/// Predicted spectrum source for the transfer path: `σ(H)` of the
/// controllable subsystem.
fn controllable_hamiltonian_eigs(ss: &StateSpace, j: &RMat, tol: f64) -> Vec<Complex64> {
    let kf = ss.kalman(1e-10);
    if kf.n_c == 0 {
        return Vec::new();
    }
    let sub = StateSpace::new(kf.a_c.clone(), kf.b_c.clone(), kf.c_c.clone(), ss.d.clone());
    match sub.and_then(|s| hamiltonian_of(&s, j, tol)) {
        Ok(hd) => linalg::eigenvalues_real(&hd.h),
        Err(_) => Vec::new(),
    }
}

impl CertifyOutcome {
    /// Stages from strictness onward on a realization in signature coordinates.
    fn run_riccati(
        &mut self,
        rz: Realized,
        freq: Frequency,
        opts: &CertifyOptions,
    ) {
        let Realized { ss, j, partition, state_map } = rz;
        self.realization = Some(ss.clone());
        self.j = Some(j.clone());
        self.partition = Some(partition);

        let s = hamiltonian::strictness_at_infinity(&ss.d, &j);
        self.assume("strict_at_infinity", s > opts.tol);
        if s <= opts.tol {
            self.refuse("strictness", &Error::StrictnessViolated(s));
            return;
        }
        self.pass("strictness", format!("min eig(I + DᵀJD) = {s:.6e}"));

        let (bss, t) = balanced(&ss);
        let hd = match hamiltonian_of(&bss, &j, opts.tol) {
            Ok(hd) => hd,
            Err(e) => {
                self.refuse("hamiltonian", &e);
                return;
            }
        };
        self.hamiltonian_eigenvalues = linalg::eigenvalues_real(&hd.h);
        hamiltonian::sort_c(&mut self.hamiltonian_eigenvalues);
        let roots = match &freq {
            Frequency::Image { m, sigma } => popov::partial_determinant(m, sigma).map(|d| d.roots()).unwrap_or_default(),
            Frequency::Transfer => controllable_hamiltonian_eigs(&ss, &j, opts.tol),
        };
        let rep = hamiltonian::spectrum_identity_check(&hd.h, &roots, &self.lambda_un, opts.spectrum_tol * hd_scale(&hd));
        self.assume("spectrum_identity", rep.pass);
        self.spectrum = Some(rep);
        self.pass("hamiltonian", "P-self-adjointness verified");

        let spec = Spectrum::new(&hd.m, opts.cluster_tol);
        for g in spec.real_clusters() {
            let center = spec.clusters[g].center;
            match spec.block_sizes(g, opts.tol) {
                Ok(sizes) => {
                    let odd = sizes.iter().any(|s| s % 2 == 1);
                    self.multiplicities.push(MultiplicityRecord { eigenvalue: [center.re, center.im], sizes: sizes.clone() });
                    if odd {
                        self.assume("even_multiplicities", false);
                        self.refuse("partial-multiplicities", &Error::OddMultiplicity { eigenvalue: fmt_c(center), sizes });
                        return;
                    }
                }
                Err(e) => {
                    self.refuse("partial-multiplicities", &e);
                    return;
                }
            }
        }
        self.assume("even_multiplicities", true);
        self.pass("partial-multiplicities", format!("{} real eigenvalue cluster(s) of M", self.multiplicities.len()));

        let scale = 1.0 + linalg::norm2_real(&ss.a);
        let grid = popov::default_grid(opts.grid, scale);
        let verdict = match &freq {
            Frequency::Image { m, sigma } => match popov::controllable_dissipativity(m, sigma, &grid, opts.tol) {
                Ok(v) => v,
                Err(e) => {
                    self.refuse("popov", &e);
                    return;
                }
            },
            Frequency::Transfer => {
                let boundary = popov::imaginary_axis_frequencies(&self.hamiltonian_eigenvalues);
                popov::transfer_dissipativity(&ss, &j, &grid, &boundary, opts.tol)
            }
        };
        self.assume("controllable_part_dissipative", verdict.pass);
        let passed = verdict.pass;
        let detail = format!(
            "min normalized eigenvalue {:.6e} at ω = {:.6e} ({})",
            verdict.min_normalized, verdict.witness, verdict.label
        );
        self.popov = Some(verdict);
        if !passed {
            self.refuse("popov", &Error::InvalidInput(format!("Popov function is not positive semidefinite: {detail}")));
            if let Some(r) = self.refusal.as_mut() {
                r.code = "popov_violated";
            }
            return;
        }
        self.pass("popov", detail);

        let (attempt, note) = graph_stages(&hd, &spec, &self.lambda_un, opts);
        self.notes.extend(note);
        let (cset, basis, k) = match attempt {
            Ok(v) => v,
            Err((stage, e)) => {
                match stage {
                    "subspace" if matches!(e, Error::OddMultiplicity { .. }) => self.assume("even_multiplicities", false),
                    "graph-subspace" => self.assume("graph_subspace", false),
                    _ => {}
                }
                self.refuse(stage, &e);
                return;
            }
        };
        self.pass("cset", format!("{} member(s)", cset.members().len()));
        self.pass("subspace", "M-invariant and P-neutral");
        self.assume("graph_subspace", true);
        self.pass("graph-subspace", format!("cond(X₁) = {:.3e}", linalg::cond(&basis.rows(0, hd.n()).into_owned())));

        let (k, basis) = unscale(&k, &basis, &t);
        let (are, lmi) = hamiltonian::verify_certificate(&ss, &j, &k);
        let graph = hamiltonian_of(&ss, &j, opts.tol).map(|h| hamiltonian::graph_residual(&h, &k)).unwrap_or(f64::NAN);
        let vtol = opts.tol * verification_scale(&ss, &k);
        self.tolerances.insert("verification".into(), vtol);
        let ok = are <= vtol && lmi <= vtol;
        self.assume("certificate_verified", ok);
        if !ok {
            self.refuse(
                "verification",
                &Error::InvalidInput(format!("ARE residual {are:.3e}, LMI max eigenvalue {lmi:.3e} exceed {vtol:.3e}")),
            );
            if let Some(r) = self.refusal.as_mut() {
                r.code = "verification_failed";
            }
            return;
        }
        self.pass("verification", format!("ARE residual {are:.3e}, LMI max eigenvalue {lmi:.3e}"));
        if state_map.is_none() {
            self.notes.push("state is not observable from w; no state map reported".into());
        }
        self.certificate = Some(StorageCertificate {
            k,
            cset,
            basis,
            are_residual: are,
            lmi_max_eig: lmi,
            graph_residual: graph,
            state_map,
        });
    }

    fn record_tolerances(&mut self, opts: &CertifyOptions) {
        for (k, v) in [
            ("tol", opts.tol),
            ("cluster", opts.cluster_tol),
            ("spectrum", opts.spectrum_tol),
            ("cond_max", opts.cond_max),
            ("hermitian", opts.herm_tol),
            ("subspace", opts.subspace_tol),
            ("unmixing", PAIRING_TOL),
        ] {
            self.tolerances.insert(k.into(), v);
        }
        self.tolerances.insert("grid".into(), opts.grid as f64);
    }

    fn check_unmixing(&mut self) -> bool {
        let w = unmixing_witness(&self.lambda_un, PAIRING_TOL);
        self.assume("unmixing", w.is_none());
        match w {
            Some((a, b)) => {
                self.refuse("unmixing", &Error::UnmixingViolated(fmt_c(a), fmt_c(b)));
                false
            }
            None => {
                self.pass("unmixing", format!("{} uncontrollable mode(s)", self.lambda_un.len()));
                true
            }
        }
    }
}

fn hd_scale(hd: &HamiltonianData) -> f64 {
    linalg::norm2_real(&hd.h).max(1.0)
}

fn block_diagonal(sigma: &RMat, io: &IoPartition) -> bool {
    let scale = sigma.amax().max(f64::MIN_POSITIVE);
    io.inputs.iter().all(|&i| io.outputs.iter().all(|&o| sigma[(i, o)].abs() <= 1e-12 * scale))
}

/// Decide dissipativity of `b` with respect to `wᵀΣw` and construct a storage
/// function. `Err` is reserved for malformed input; every violated hypothesis
/// is reported as a refusal inside the outcome.
pub fn certify(b: &Behavior, sigma: &RMat, opts: &CertifyOptions) -> Result<CertifyOutcome> {
    let w = b.w();
    if sigma.shape() != (w, w) {
        return Err(Error::ShapeMismatch(format!("Σ is {:?} but the behavior has {w} variables", sigma.shape())));
    }
    let (plus, minus) = supply::inertia(sigma)?;
    let mut out = CertifyOutcome { sigma_plus: plus, sigma_minus: minus, ..Default::default() };
    out.record_tolerances(opts);

    let m = b.input_cardinality();
    out.m = m;
    out.assume("input_cardinality", m <= plus);
    if m > plus {
        out.refuse("input-cardinality", &Error::InputCardinalityExceeded { m, sigma_plus: plus });
        return Ok(out);
    }
    out.pass("input-cardinality", format!("m = {m} ≤ σ₊ = {plus}"));

    out.lambda_un = b.uncontrollable_modes();
    if !out.check_unmixing() {
        return Ok(out);
    }

    let preferred = opts.partition.as_ref().or(b.io());
    let iso_direct = match (b.representation(), b.io()) {
        (Representation::Iso(ss), Some(io)) if opts.partition.as_ref().is_none_or(|p| p == io) => {
            block_diagonal(sigma, io).then(|| (ss.clone(), io.clone()))
        }
        _ => None,
    };
    let (realized, freq) = match iso_direct {
        Some((ss, io)) => (realize_iso(&ss, &io, sigma), Frequency::Transfer),
        None => {
            let rz = realize_kernel(b, sigma, preferred, &mut out.notes);
            let freq = match b.controllable_part().observable_image() {
                Ok(mi) => Frequency::Image { m: mi, sigma: sigma.clone() },
                Err(_) => Frequency::Transfer,
            };
            (rz, freq)
        }
    };
    let rz = match realized {
        Ok(rz) => rz,
        Err(e) => {
            out.refuse("realization", &e);
            return Ok(out);
        }
    };
    let km = kalman_modes(&rz.ss);
    let (_, ua, ub) = linalg::match_multisets(&km.modes, &out.lambda_un.modes, opts.spectrum_tol * (1.0 + linalg::norm2_real(&rz.ss.a)));
    out.assume("kalman_modes_match", ua.is_empty() && ub.is_empty());
    out.assume("observable_realization", rz.ss.is_observable(1e-10));
    out.pass(
        "realization",
        format!("n = {}, inputs {:?}, outputs {:?}", rz.ss.n(), rz.partition.inputs, rz.partition.outputs),
    );
    out.run_riccati(rz, freq, opts);
    Ok(out)
}

/// Certification for state-space data already in signature coordinates
/// (`Σ = diag(I_m, J)` with inputs first). Uncontrollable modes come from the
/// Kalman staircase.
pub fn certify_state_space(ss: &StateSpace, j: &RMat, opts: &CertifyOptions) -> Result<CertifyOutcome> {
    if j.shape() != (ss.p(), ss.p()) {
        return Err(Error::ShapeMismatch(format!("J must be {0}x{0}", ss.p())));
    }
    let mut out = CertifyOutcome::default();
    out.record_tolerances(opts);
    let mut sigma = RMat::identity(ss.m() + ss.p(), ss.m() + ss.p());
    sigma.view_mut((ss.m(), ss.m()), (ss.p(), ss.p())).copy_from(j);
    let (plus, minus) = supply::inertia(&sigma)?;
    out.sigma_plus = plus;
    out.sigma_minus = minus;
    out.m = ss.m();
    out.assume("input_cardinality", true);
    out.pass("input-cardinality", format!("m = {} ≤ σ₊ = {plus}", ss.m()));
    out.lambda_un = kalman_modes(ss);
    if !out.check_unmixing() {
        return Ok(out);
    }
    out.assume("observable_realization", ss.is_observable(1e-10));
    let part = IoPartition::leading_inputs(ss.m(), ss.m() + ss.p());
    let state_map = if ss.is_observable(1e-10) { realization::state_map(ss, &part).ok() } else { None };
    out.pass("realization", format!("n = {}", ss.n()));
    out.run_riccati(Realized { ss: ss.clone(), j: j.clone(), partition: part, state_map }, Frequency::Transfer, opts);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polymat::PolyMatrix;

    fn diag(v: &[f64]) -> RMat {
        RMat::from_diagonal(&nalgebra::DVector::from_vec(v.to_vec()))
    }

    fn ex1() -> Behavior {
        Behavior::kernel(PolyMatrix::from_ints(&[&[&[1, 2, 1], &[-1, -3, -2]]]))
            .with_io(IoPartition { inputs: vec![0], outputs: vec![1] })
            .unwrap()
    }

    fn ex2() -> Behavior {
        Behavior::iso(
            StateSpace::from_rows(&[&[0.0, -1.0], &[4.0, -4.0]], &[&[1.0], &[2.0]], &[&[0.0, 1.0]], &[&[0.0]]).unwrap(),
        )
    }

    #[test]
    fn first_example_certificate() {
        let out = certify(&ex1(), &diag(&[1.0, -1.0]), &CertifyOptions::default()).unwrap();
        assert!(out.is_dissipative(), "{:?}", out.refusal);
        let c = out.certificate.as_ref().unwrap();
        let want = RMat::from_row_slice(2, 2, &[7.0, -1.0, -1.0, 1.0]);
        assert!((&c.k * 6.0 - want).amax() <= 1e-6, "{}", c.k);
        assert!(c.are_residual <= 1e-8 && c.lmi_max_eig <= 1e-8);
        assert!(out.assumptions.values().all(|&v| v), "{:?}", out.assumptions);
        assert_eq!(out.verdict(), "dissipative");
    }

    #[test]
    fn rlc_certificate_matches_reference() {
        let out = certify(&ex2(), &diag(&[1.0, -1.0]), &CertifyOptions::default()).unwrap();
        assert!(out.is_dissipative(), "{:?}", out.refusal);
        let k = &out.certificate.as_ref().unwrap().k;
        let want = RMat::from_row_slice(2, 2, &[3.0, -0.5, -0.5, 0.25]);
        assert!((k - want).amax() < 1e-6, "{k}");
    }

    #[test]
    fn mirrored_uncontrollable_modes_are_refused() {
        // (ξ² − 1) w₁ = (ξ² − 1) w₂ has Λun = {−1, 1}
        let b = Behavior::kernel(PolyMatrix::from_ints(&[&[&[-1, 0, 1], &[1, 0, -1]]]));
        let out = certify(&b, &diag(&[1.0, -1.0]), &CertifyOptions::default()).unwrap();
        assert_eq!(out.verdict(), "refused:unmixing");
        assert_eq!(out.error_code(), Some("unmixing_violated"));
    }

    #[test]
    fn odd_multiplicity_refusal() {
        // image [ξ+1; 2]: det ∂Φ = −ξ² − 3
        let b = Behavior::image(PolyMatrix::from_ints(&[&[&[1, 1]], &[&[2]]]));
        let out = certify(&b, &diag(&[1.0, -1.0]), &CertifyOptions::default()).unwrap();
        assert_eq!(out.verdict(), "refused:partial-multiplicities");
        assert_eq!(out.error_code(), Some("odd_multiplicity"));
    }

    #[test]
    fn too_many_inputs() {
        let out = certify(&Behavior::full(2), &diag(&[1.0, -1.0]), &CertifyOptions::default()).unwrap();
        assert_eq!(out.verdict(), "refused:input-cardinality");
    }

    #[test]
    fn static_supply_and_search() {
        // w₂ = 0.5 w₁ with outputs searched: Σ = diag(−1, 1) puts the input second
        let b = Behavior::kernel(PolyMatrix::from_ints(&[&[&[2], &[-1]]]));
        let out = certify(&b, &diag(&[-1.0, 1.0]), &CertifyOptions::default()).unwrap();
        assert!(out.is_dissipative(), "{:?}", out.refusal);
        assert_eq!(out.partition.as_ref().unwrap().inputs, vec![1]);
        assert_eq!(out.certificate.unwrap().k.shape(), (0, 0));
    }

    #[test]
    fn report_envelope() {
        let out = certify(&ex1(), &diag(&[1.0, -1.0]), &CertifyOptions::default()).unwrap();
        let v = out.to_report().to_json();
        for key in ["K", "cset", "are_residual", "lmi_max_eig", "assumptions", "verdict"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn partitions_enumerated_in_order() {
        let p = search_partitions(&[1.0, -1.0, 1.0, 1.0], 2);
        let ins: Vec<Vec<usize>> = p.into_iter().map(|p| p.inputs).collect();
        assert_eq!(ins, vec![vec![0, 2], vec![0, 3], vec![2, 3]]);
        assert_eq!(search_partitions(&[1.0, -1.0], 0).len(), 1);
        assert!(search_partitions(&[-1.0], 1).is_empty());
    }
}
