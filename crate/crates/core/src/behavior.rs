//! Linear differential behaviors: kernel, image and input/state/output
//! representations, controllability, controllable parts and superbehaviors.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RMat;
use crate::poly::{rat_from_f64, Poly};
use crate::polymat::PolyMatrix;
use crate::realization::StateSpace;

/// Absolute tolerance used to snap computed roots into conjugate pairs.
pub const PAIRING_TOL: f64 = 1e-7;

/// Which external variables are inputs and which are outputs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IoPartition {
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
}

impl IoPartition {
    /// Inputs `0..m`, outputs `m..w`.
    pub fn leading_inputs(m: usize, w: usize) -> Self {
        IoPartition { inputs: (0..m).collect(), outputs: (m..w).collect() }
    }

    pub fn validate(&self, w: usize) -> Result<()> {
        let mut seen = vec![false; w];
        for &i in self.inputs.iter().chain(&self.outputs) {
            if i >= w || seen[i] {
                return Err(Error::InvalidInput(format!(
                    "partition {:?}/{:?} is not a split of 0..{w}",
                    self.inputs, self.outputs
                )));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidInput(format!(
                "partition {:?}/{:?} does not cover 0..{w}",
                self.inputs, self.outputs
            )));
        }
        Ok(())
    }
}

/// Multiset of complex modes, closed under conjugation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModeSet {
    pub modes: Vec<Complex64>,
}

impl ModeSet {
    /// Snap nearly-real values to the real axis and average conjugate partners.
    pub fn new(mut modes: Vec<Complex64>) -> Self {
        let n = modes.len();
        let mut done = vec![false; n];
        for i in 0..n {
            if done[i] {
                continue;
            }
            if modes[i].im.abs() <= PAIRING_TOL {
                modes[i].im = 0.0;
                done[i] = true;
                continue;
            }
            let target = modes[i].conj();
            let partner = (0..n)
                .filter(|&j| j != i && !done[j])
                .min_by(|&a, &b| {
                    (modes[a] - target).norm().partial_cmp(&(modes[b] - target).norm()).unwrap()
                });
            if let Some(j) = partner {
                if (modes[j] - target).norm() <= PAIRING_TOL * (1.0 + target.norm()) {
                    let avg = (modes[i] + modes[j].conj()) * 0.5;
                    modes[i] = avg;
                    modes[j] = avg.conj();
                    done[j] = true;
                }
            }
            done[i] = true;
        }
        modes.sort_by(|a, b| {
            a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap())
        });
        ModeSet { modes }
    }

    pub fn empty() -> Self {
        ModeSet { modes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Complex64> {
        self.modes.iter()
    }

    pub fn negated(&self) -> ModeSet {
        ModeSet { modes: self.modes.iter().map(|z| -z).collect() }
    }

    /// Every mode on the imaginary axis (within `tol`).
    pub fn all_imaginary(&self, tol: f64) -> bool {
        self.modes.iter().all(|z| z.re.abs() <= tol * (1.0 + z.norm()))
    }
}

impl Serialize for ModeSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<[f64; 2]> = self.modes.iter().map(|z| [z.re, z.im]).collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ModeSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v: Vec<[f64; 2]> = Vec::deserialize(d)?;
        Ok(ModeSet { modes: v.into_iter().map(|[re, im]| Complex64::new(re, im)).collect() })
    }
}

/// No λ, μ in the set with `|λ + μ| ≤ tol·(1 + max|λ|)`; a mode may pair with itself.
pub fn unmixing_check(modes: &ModeSet, tol: f64) -> bool {
    unmixing_witness(modes, tol).is_none()
}

/// First offending pair, if any.
pub fn unmixing_witness(modes: &ModeSet, tol: f64) -> Option<(Complex64, Complex64)> {
    let scale = 1.0 + modes.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let v = &modes.modes;
    for i in 0..v.len() {
        for j in i..v.len() {
            if (v[i] + v[j]).norm() <= tol * scale {
                return Some((v[i], v[j]));
            }
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq)]
pub enum Representation {
    /// `R(d/dt) w = 0`, stored with full row rank.
    Kernel(PolyMatrix),
    /// `w = M(d/dt) ℓ`.
    Image(PolyMatrix),
    /// State-space data; the io partition says where `u` and `y` sit in `w`.
    Iso(StateSpace),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Behavior {
    w: usize,
    rep: Representation,
    io: Option<IoPartition>,
}

/// Keep the rows of `U⁻¹R` that survive the Smith form, giving an
/// equivalent kernel matrix of full row rank.
fn full_row_rank(r: &PolyMatrix) -> PolyMatrix {
    if r.nrows() == 0 {
        return r.clone();
    }
    let sd = r.smith_form();
    let rank = sd.rank();
    if rank == r.nrows() {
        return r.clone();
    }
    let idx: Vec<usize> = (0..rank).collect();
    sd.u_inv.select_rows(&idx).mul(r).expect("shapes agree")
}

/// Minimal left annihilator of `m` (rows spanning all `x` with `x M = 0`).
pub fn left_annihilator(m: &PolyMatrix) -> PolyMatrix {
    let rows = m.nrows();
    if m.ncols() == 0 {
        return PolyMatrix::identity(rows);
    }
    let sd = m.smith_form();
    let idx: Vec<usize> = (sd.rank()..rows).collect();
    sd.u_inv.select_rows(&idx)
}

/// Solve `big = X · small` exactly; `None` when no polynomial `X` exists.
pub fn row_combination(small: &PolyMatrix, big: &PolyMatrix) -> Option<PolyMatrix> {
    assert_eq!(small.ncols(), big.ncols());
    let pb = big.nrows();
    if small.nrows() == 0 {
        return big.is_zero().then(|| PolyMatrix::zeros(pb, 0));
    }
    // small = U S V  ⇒  (X U) S = big V⁻¹
    let sd = small.smith_form();
    let y = big.mul(&sd.v_inv).expect("shapes agree");
    let r = sd.rank();
    for i in 0..pb {
        for j in r..big.ncols() {
            if !y.get(i, j).is_zero() {
                return None;
            }
        }
    }
    let mut z = PolyMatrix::zeros(pb, small.nrows());
    for j in 0..r {
        let d = &sd.invariant_factors[j];
        for i in 0..pb {
            z.set(i, j, y.get(i, j).exact_div(d)?);
        }
    }
    Some(z.mul(&sd.u_inv).expect("shapes agree"))
}

fn exact_inverse_constant(s: &RMat) -> Result<PolyMatrix> {
    let sp = PolyMatrix::from_real(s);
    let det = sp.det()?;
    if det.is_zero() {
        return Err(Error::SingularSigma);
    }
    Ok(sp.adjugate()?.scale(&det.coeff(0).recip()))
}

impl Behavior {
    /// Kernel behavior; redundant rows are removed.
    pub fn kernel(r: PolyMatrix) -> Self {
        let w = r.ncols();
        Behavior { w, rep: Representation::Kernel(full_row_rank(&r)), io: None }
    }

    /// The unconstrained behavior on `w` variables.
    pub fn full(w: usize) -> Self {
        Self::kernel(PolyMatrix::zeros(0, w))
    }

    pub fn image(m: PolyMatrix) -> Self {
        Behavior { w: m.nrows(), rep: Representation::Image(m), io: None }
    }

    /// State-space behavior with inputs first.
    pub fn iso(ss: StateSpace) -> Self {
        let w = ss.m() + ss.p();
        let io = IoPartition::leading_inputs(ss.m(), w);
        Behavior { w, rep: Representation::Iso(ss), io: Some(io) }
    }

    pub fn with_io(mut self, io: IoPartition) -> Result<Self> {
        io.validate(self.w)?;
        if let Representation::Iso(ss) = &self.rep {
            if io.inputs.len() != ss.m() {
                return Err(Error::InvalidInput(format!(
                    "partition has {} inputs but the state-space data has {}",
                    io.inputs.len(),
                    ss.m()
                )));
            }
        }
        self.io = Some(io);
        Ok(self)
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn io(&self) -> Option<&IoPartition> {
        self.io.as_ref()
    }

    pub fn representation(&self) -> &Representation {
        &self.rep
    }

    pub fn kind(&self) -> &'static str {
        match self.rep {
            Representation::Kernel(_) => "kernel",
            Representation::Image(_) => "image",
            Representation::Iso(_) => "iso",
        }
    }

    pub fn state_space(&self) -> Option<&StateSpace> {
        match &self.rep {
            Representation::Iso(ss) => Some(ss),
            _ => None,
        }
    }

    /// A full-row-rank kernel matrix of the behavior.
    pub fn kernel_matrix(&self) -> PolyMatrix {
        match &self.rep {
            Representation::Kernel(r) => r.clone(),
            Representation::Image(m) => full_row_rank(&left_annihilator(m)),
            Representation::Iso(ss) => {
                let io = self.io.clone().unwrap_or_else(|| IoPartition::leading_inputs(ss.m(), self.w));
                full_row_rank(&iso_kernel(ss, &io, self.w))
            }
        }
    }

    pub fn input_cardinality(&self) -> usize {
        match &self.rep {
            Representation::Kernel(r) => self.w - r.normal_rank(),
            Representation::Image(m) => m.normal_rank(),
            Representation::Iso(ss) => ss.m(),
        }
    }

    /// Number of nontrivial invariant factors of the kernel matrix.
    pub fn nontrivial_factor_count(&self) -> usize {
        match &self.rep {
            Representation::Image(_) => 0,
            _ => self.kernel_matrix().smith_form().nontrivial_factors().len(),
        }
    }

    pub fn uncontrollable_modes(&self) -> ModeSet {
        match &self.rep {
            Representation::Image(_) => ModeSet::empty(),
            Representation::Kernel(r) => {
                let sd = r.smith_form();
                let mut roots = Vec::new();
                for d in sd.nontrivial_factors() {
                    roots.extend(d.roots());
                }
                ModeSet::new(roots)
            }
            Representation::Iso(ss) => ModeSet::new(ss.kalman(1e-10).uncontrollable_modes()),
        }
    }

    pub fn is_controllable(&self) -> bool {
        match &self.rep {
            Representation::Image(_) => true,
            Representation::Kernel(r) => r.smith_form().nontrivial_factors().is_empty(),
            Representation::Iso(ss) => ss.kalman(1e-10).n_u == 0,
        }
    }

    /// Kernel `[I_r 0]·V` from `R = U [diag(d) 0] V`.
    pub fn controllable_part(&self) -> Behavior {
        if let Representation::Image(_) = self.rep {
            return self.clone();
        }
        let r = self.kernel_matrix();
        let sd = r.smith_form();
        let idx: Vec<usize> = (0..sd.rank()).collect();
        let mut out = Behavior::kernel(sd.v.select_rows(&idx));
        out.io = self.io.clone();
        out
    }

    /// Observable image representation of a controllable behavior: the last
    /// `w − r` columns of `V⁻¹`.
    pub fn observable_image(&self) -> Result<PolyMatrix> {
        if !self.is_controllable() {
            return Err(Error::NotControllable);
        }
        let r = self.kernel_matrix();
        let sd = r.smith_form();
        let idx: Vec<usize> = (sd.rank()..self.w).collect();
        Ok(sd.v_inv.select_cols(&idx))
    }

    /// Controllable behavior containing `self`, obtained by keeping the
    /// trivial invariant-factor rows (mixed by `F₁`) and absorbing the
    /// nontrivial ones through `F₂`.
    pub fn superbehavior(&self, f1: Option<&PolyMatrix>, f2: Option<&PolyMatrix>) -> Result<Behavior> {
        let r = self.kernel_matrix();
        let sd = r.smith_form();
        let rank = sd.rank();
        let k = sd.nontrivial_factors().len();
        let keep = rank - k;
        let f1 = match f1 {
            Some(f) => {
                if f.shape() != (keep, keep) || !f.is_unimodular() {
                    return Err(Error::NotUnimodular);
                }
                f.clone()
            }
            None => PolyMatrix::identity(keep),
        };
        let f2 = match f2 {
            Some(f) => {
                if f.shape() != (keep, k) {
                    return Err(Error::ShapeMismatch(format!(
                        "F₂ must be {keep}x{k}, got {}x{}",
                        f.nrows(),
                        f.ncols()
                    )));
                }
                f.clone()
            }
            None => PolyMatrix::zeros(keep, k),
        };
        // [F₁  F₂·D  0] in Smith coordinates, mapped back through V
        let mut t = PolyMatrix::zeros(keep, self.w);
        for i in 0..keep {
            for j in 0..keep {
                t.set(i, j, f1.get(i, j).clone());
            }
            for j in 0..k {
                let d = &sd.invariant_factors[keep + j];
                t.set(i, keep + j, f2.get(i, j) * d);
            }
        }
        let mut out = Behavior::kernel(t.mul(&sd.v)?);
        out.io = self.io.clone();
        Ok(out)
    }

    pub fn intersect(&self, other: &Behavior) -> Result<Behavior> {
        if self.w != other.w {
            return Err(Error::ShapeMismatch(format!(
                "intersecting behaviors on {} and {} variables",
                self.w, other.w
            )));
        }
        Ok(Behavior::kernel(self.kernel_matrix().vstack(&other.kernel_matrix())?))
    }

    pub fn is_autonomous(&self) -> bool {
        self.kernel_matrix().normal_rank() == self.w
    }

    /// `Σ·B`: kernel `R Σ⁻¹` or image `Σ M`.
    pub fn sigma_image(&self, sigma: &RMat) -> Result<Behavior> {
        if sigma.shape() != (self.w, self.w) {
            return Err(Error::ShapeMismatch("Σ must be w×w".into()));
        }
        let inv = exact_inverse_constant(sigma)?;
        match &self.rep {
            Representation::Image(m) => Ok(Behavior::image(PolyMatrix::from_real(sigma).mul(m)?)),
            _ => Ok(Behavior::kernel(self.kernel_matrix().mul(&inv)?)),
        }
    }

    /// `other ⊆ self`.
    pub fn contains(&self, other: &Behavior) -> bool {
        self.w == other.w && row_combination(&other.kernel_matrix(), &self.kernel_matrix()).is_some()
    }

    /// Mutual inclusion.
    pub fn same_as(&self, other: &Behavior) -> bool {
        self.contains(other) && other.contains(self)
    }
}

/// Eliminate the state from `ξx = Ax + Bu, y = Cx + Du`.
fn iso_kernel(ss: &StateSpace, io: &IoPartition, w: usize) -> PolyMatrix {
    let (n, m, p) = (ss.n(), ss.m(), ss.p());
    let q = |x: f64| Poly::constant(rat_from_f64(x));
    let rx = PolyMatrix::from_fn(n + p, n, |i, j| {
        if i < n {
            let mut e = q(-ss.a[(i, j)]);
            if i == j {
                e = &e + &Poly::xi();
            }
            e
        } else {
            q(-ss.c[(i - n, j)])
        }
    });
    // columns: u (m) then y (p)
    let rw = PolyMatrix::from_fn(n + p, m + p, |i, j| match (i < n, j < m) {
        (true, true) => q(-ss.b[(i, j)]),
        (true, false) => Poly::zero(),
        (false, true) => q(-ss.d[(i - n, j)]),
        (false, false) => {
            if i - n == j - m {
                Poly::one()
            } else {
                Poly::zero()
            }
        }
    });
    let ann = left_annihilator(&rx);
    let r_uy = ann.mul(&rw).expect("shapes agree");
    let mut r = PolyMatrix::zeros(r_uy.nrows(), w);
    for i in 0..r_uy.nrows() {
        for (c, &var) in io.inputs.iter().enumerate() {
            r.set(i, var, r_uy.get(i, c).clone());
        }
        for (c, &var) in io.outputs.iter().enumerate() {
            r.set(i, var, r_uy.get(i, m + c).clone());
        }
    }
    r
}

#[derive(Serialize, Deserialize)]
struct BehaviorFile {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    w: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<PolyMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    statespace: Option<StateSpace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    io: Option<IoPartition>,
}

impl Serialize for Behavior {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (matrix, statespace) = match &self.rep {
            Representation::Kernel(m) | Representation::Image(m) => (Some(m.clone()), None),
            Representation::Iso(ss) => (None, Some(ss.clone())),
        };
        BehaviorFile { kind: self.kind().into(), w: Some(self.w), matrix, statespace, io: self.io.clone() }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Behavior {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let f = BehaviorFile::deserialize(d)?;
        let b = match f.kind.as_str() {
            "kernel" => {
                let m = f.matrix.ok_or_else(|| D::Error::custom("kernel behavior needs \"matrix\""))?;
                let w = f.w.unwrap_or(m.ncols());
                let m = if m.nrows() == 0 { PolyMatrix::zeros(0, w) } else { m };
                if m.ncols() != w {
                    return Err(D::Error::custom(format!("kernel has {} columns, w = {w}", m.ncols())));
                }
                Behavior::kernel(m)
            }
            "image" => {
                let m = f.matrix.ok_or_else(|| D::Error::custom("image behavior needs \"matrix\""))?;
                if f.w.is_some_and(|w| w != m.nrows()) {
                    return Err(D::Error::custom("image row count differs from w"));
                }
                Behavior::image(m)
            }
            "iso" => {
                let ss = f.statespace.ok_or_else(|| D::Error::custom("iso behavior needs \"statespace\""))?;
                let b = Behavior::iso(ss);
                if f.w.is_some_and(|w| w != b.w) {
                    return Err(D::Error::custom("state-space dimensions differ from w"));
                }
                b
            }
            other => return Err(D::Error::custom(format!("unknown behavior kind {other:?}"))),
        };
        match f.io {
            Some(io) => b.with_io(io).map_err(D::Error::custom),
            None => Ok(b),
        }
    }
}
