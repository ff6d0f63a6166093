use crate::error::{Error, Result};
use crate::linalg::{self, cr, CMatrix, Subsystem};
use crate::quantum::state::DensityMatrix;

/// Tolerance on the completely-positive trace-preserving checks.
pub const CPTP_TOL: f64 = 1e-9;
/// Choi eigenvalues below this fraction of `Tr J` are dropped when extracting Kraus operators.
pub const KRAUS_RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RepresentationKind {
    Kraus,
    Stinespring,
    Choi,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Representation {
    Kraus(Vec<CMatrix>),
    /// Isometry into `output ⊗ environment`, environment the fast index.
    Stinespring { isometry: CMatrix, env_dim: usize },
    /// `J = Σ_ij N(|i⟩⟨j|) ⊗ |i⟩⟨j|` on `output ⊗ input`.
    Choi(CMatrix),
}

/// A completely positive trace-preserving map.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    dim_in: usize,
    dim_out: usize,
    repr: Representation,
}

impl Channel {
    pub fn from_kraus(ops: Vec<CMatrix>) -> Result<Self> {
        let first = ops.first().ok_or_else(|| Error::InvalidChannel("empty Kraus list".into()))?;
        let (dim_out, dim_in) = first.shape();
        if ops.iter().any(|k| k.shape() != (dim_out, dim_in)) {
            return Err(Error::DimensionMismatch("Kraus operators of different shapes".into()));
        }
        for k in &ops {
            linalg::ensure_finite(k)?;
        }
        let mut sum = CMatrix::zeros(dim_in, dim_in);
        for k in &ops {
            sum += k.adjoint() * k;
        }
        let defect = linalg::operator_norm(&(sum - linalg::identity(dim_in)));
        if defect > CPTP_TOL {
            return Err(Error::InvalidChannel(format!("Σ K†K deviates from identity by {defect:.3e}")));
        }
        Ok(Self { dim_in, dim_out, repr: Representation::Kraus(ops) })
    }

    pub fn from_stinespring(isometry: CMatrix, dim_out: usize, env_dim: usize) -> Result<Self> {
        if isometry.nrows() != dim_out * env_dim {
            return Err(Error::DimensionMismatch(format!(
                "isometry has {} rows, expected {}x{}",
                isometry.nrows(),
                dim_out,
                env_dim
            )));
        }
        linalg::ensure_finite(&isometry)?;
        let defect = linalg::unitarity_defect(&isometry);
        if defect > CPTP_TOL {
            return Err(Error::InvalidChannel(format!("V†V deviates from identity by {defect:.3e}")));
        }
        let dim_in = isometry.ncols();
        Ok(Self { dim_in, dim_out, repr: Representation::Stinespring { isometry, env_dim } })
    }

    pub fn from_choi(choi: CMatrix, dim_in: usize, dim_out: usize) -> Result<Self> {
        if choi.nrows() != dim_in * dim_out || choi.ncols() != dim_in * dim_out {
            return Err(Error::DimensionMismatch(format!("Choi matrix of size {} for {}->{}", choi.nrows(), dim_in, dim_out)));
        }
        let j = linalg::hermitize(&choi).map_err(|e| Error::InvalidChannel(e.to_string()))?;
        let eig = linalg::eigh(&j)?;
        let min = eig.eigenvalues.last().copied().unwrap_or(0.0);
        if min < -CPTP_TOL {
            return Err(Error::InvalidChannel(format!("Choi matrix has eigenvalue {min:.3e}")));
        }
        let reduced = linalg::partial_trace(&j, Subsystem::A, (dim_out, dim_in))?;
        let defect = linalg::operator_norm(&(reduced - linalg::identity(dim_in)));
        if defect > CPTP_TOL {
            return Err(Error::InvalidChannel(format!("Tr_out J deviates from identity by {defect:.3e}")));
        }
        Ok(Self { dim_in, dim_out, repr: Representation::Choi(j) })
    }

    pub fn identity(d: usize) -> Self {
        Self { dim_in: d, dim_out: d, repr: Representation::Kraus(vec![linalg::identity(d)]) }
    }

    pub fn unitary(u: CMatrix) -> Result<Self> {
        let defect = linalg::unitarity_defect(&u);
        if u.nrows() != u.ncols() || defect > 1e-10 {
            return Err(Error::NotUnitary { deviation: defect });
        }
        let d = u.nrows();
        Ok(Self { dim_in: d, dim_out: d, repr: Representation::Kraus(vec![u]) })
    }

    /// `X ↦ Tr(X) τ` on inputs of dimension `dim_in`.
    pub fn replacement(tau: &DensityMatrix, dim_in: usize) -> Self {
        let eig = linalg::eigh(tau.matrix()).expect("density matrices are Hermitian");
        let dim_out = tau.dim();
        let mut ops = Vec::new();
        for (k, &t) in eig.eigenvalues.iter().enumerate() {
            if t <= 0.0 {
                continue;
            }
            let phi = eig.eigenvectors.column(k).into_owned() * cr(t.sqrt());
            for i in 0..dim_in {
                let mut op = CMatrix::zeros(dim_out, dim_in);
                op.set_column(i, &phi);
                ops.push(op);
            }
        }
        Self { dim_in, dim_out, repr: Representation::Kraus(ops) }
    }

    /// Measure-and-forget in the orthonormal basis given by the columns of `basis`.
    pub fn dephasing(basis: &CMatrix) -> Result<Self> {
        if !linalg::is_unitary(basis, 1e-10) {
            return Err(Error::NotUnitary { deviation: linalg::unitarity_defect(basis) });
        }
        let ops = (0..basis.ncols()).map(|i| linalg::projector(&basis.column(i).into_owned())).collect();
        Self::from_kraus(ops)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn representation(&self) -> &Representation {
        &self.repr
    }

    pub fn kind(&self) -> RepresentationKind {
        match self.repr {
            Representation::Kraus(_) => RepresentationKind::Kraus,
            Representation::Stinespring { .. } => RepresentationKind::Stinespring,
            Representation::Choi(_) => RepresentationKind::Choi,
        }
    }

    pub fn kraus(&self) -> Vec<CMatrix> {
        match &self.repr {
            Representation::Kraus(ks) => ks.clone(),
            Representation::Stinespring { isometry, env_dim } => {
                (0..*env_dim).map(|e| stinespring_slice(isometry, self.dim_out, *env_dim, e)).collect()
            }
            Representation::Choi(j) => kraus_from_choi(j, self.dim_in, self.dim_out),
        }
    }

    /// Native isometry for Kraus and Stinespring forms; Choi input goes through Kraus first.
    pub fn stinespring(&self) -> (CMatrix, usize) {
        match &self.repr {
            Representation::Stinespring { isometry, env_dim } => (isometry.clone(), *env_dim),
            _ => {
                let ks = self.kraus();
                (stack_kraus(&ks, self.dim_out), ks.len())
            }
        }
    }

    pub fn choi(&self) -> CMatrix {
        match &self.repr {
            Representation::Choi(j) => j.clone(),
            _ => choi_from_kraus(&self.kraus(), self.dim_in, self.dim_out),
        }
    }

    pub fn convert(&self, kind: RepresentationKind) -> Result<Channel> {
        let repr = match kind {
            RepresentationKind::Kraus => Representation::Kraus(self.kraus()),
            RepresentationKind::Stinespring => {
                let (isometry, env_dim) = self.stinespring();
                Representation::Stinespring { isometry, env_dim }
            }
            RepresentationKind::Choi => Representation::Choi(self.choi()),
        };
        Ok(Channel { dim_in: self.dim_in, dim_out: self.dim_out, repr })
    }

    /// Number of Kraus operators in the native form (environment dimension).
    pub fn kraus_count(&self) -> usize {
        match &self.repr {
            Representation::Kraus(ks) => ks.len(),
            Representation::Stinespring { env_dim, .. } => *env_dim,
            Representation::Choi(j) => kraus_from_choi(j, self.dim_in, self.dim_out).len(),
        }
    }

    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.nrows() != self.dim_in || x.ncols() != self.dim_in {
            return Err(Error::DimensionMismatch(format!("channel input {} got {}x{}", self.dim_in, x.nrows(), x.ncols())));
        }
        Ok(match &self.repr {
            Representation::Kraus(ks) => {
                let mut out = CMatrix::zeros(self.dim_out, self.dim_out);
                for k in ks {
                    out += k * x * k.adjoint();
                }
                out
            }
            Representation::Stinespring { isometry, env_dim } => {
                let big = isometry * x * isometry.adjoint();
                linalg::partial_trace(&big, Subsystem::B, (self.dim_out, *env_dim))?
            }
            Representation::Choi(j) => apply_choi(j, x, self.dim_in, self.dim_out),
        })
    }

    pub fn apply_state(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::repaired(self.apply(rho.matrix())?)
    }

    /// `S` with `vec(N(X)) = S vec(X)` for row-major `vec`.
    pub fn superoperator(&self) -> CMatrix {
        let (di, dout) = (self.dim_in, self.dim_out);
        match &self.repr {
            Representation::Choi(j) => CMatrix::from_fn(dout * dout, di * di, |r, col| {
                let (a, b) = (r / dout, r % dout);
                let (i, k) = (col / di, col % di);
                j[(a * di + i, b * di + k)]
            }),
            _ => {
                let mut s = CMatrix::zeros(dout * dout, di * di);
                for k in self.kraus() {
                    s += k.kronecker(&k.map(|z| z.conj()));
                }
                s
            }
        }
    }

    /// Replaces a redundant Kraus list with the minimal one from the Choi matrix.
    pub fn compressed(self) -> Channel {
        if self.kraus_count() <= self.dim_in * self.dim_out {
            return self;
        }
        let ks = kraus_from_choi(&self.choi(), self.dim_in, self.dim_out);
        Channel { dim_in: self.dim_in, dim_out: self.dim_out, repr: Representation::Kraus(ks) }
    }
}

/// `outer ∘ inner`.
pub fn compose(outer: &Channel, inner: &Channel) -> Result<Channel> {
    if outer.dim_in != inner.dim_out {
        return Err(Error::DimensionMismatch(format!("compose {} after {}", outer.dim_in, inner.dim_out)));
    }
    let mut ops = Vec::new();
    let inner_k = inner.kraus();
    for a in outer.kraus() {
        for b in &inner_k {
            ops.push(&a * b);
        }
    }
    Ok(Channel { dim_in: inner.dim_in, dim_out: outer.dim_out, repr: Representation::Kraus(ops) }.compressed())
}

pub fn convex_combine(weights: &[f64], channels: &[Channel]) -> Result<Channel> {
    if weights.len() != channels.len() || channels.is_empty() {
        return Err(Error::InvalidWeights(format!("{} weights for {} channels", weights.len(), channels.len())));
    }
    if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
        return Err(Error::InvalidWeights("negative or non-finite weight".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidWeights(format!("weights sum to {total}")));
    }
    let (di, dout) = (channels[0].dim_in, channels[0].dim_out);
    if channels.iter().any(|c| c.dim_in != di || c.dim_out != dout) {
        return Err(Error::DimensionMismatch("channels of different dimensions".into()));
    }
    let mut ops = Vec::new();
    for (w, ch) in weights.iter().zip(channels) {
        if *w == 0.0 {
            continue;
        }
        let s = cr(w.sqrt());
        ops.extend(ch.kraus().into_iter().map(|k| k * s));
    }
    Ok(Channel { dim_in: di, dim_out: dout, repr: Representation::Kraus(ops) }.compressed())
}

pub fn replacement_channel(tau: &DensityMatrix) -> Channel {
    Channel::replacement(tau, tau.dim())
}

pub fn dephasing_channel(basis: &CMatrix) -> Result<Channel> {
    Channel::dephasing(basis)
}

pub(crate) fn stinespring_slice(v: &CMatrix, dim_out: usize, env_dim: usize, e: usize) -> CMatrix {
    CMatrix::from_fn(dim_out, v.ncols(), |b, a| v[(b * env_dim + e, a)])
}

pub(crate) fn stack_kraus(ks: &[CMatrix], dim_out: usize) -> CMatrix {
    let env = ks.len();
    let dim_in = ks[0].ncols();
    CMatrix::from_fn(dim_out * env, dim_in, |r, a| ks[r % env][(r / env, a)])
}

fn choi_from_kraus(ks: &[CMatrix], dim_in: usize, dim_out: usize) -> CMatrix {
    let n = dim_in * dim_out;
    let cols = CMatrix::from_fn(n, ks.len(), |r, k| ks[k][(r / dim_in, r % dim_in)]);
    &cols * cols.adjoint()
}

fn kraus_from_choi(j: &CMatrix, dim_in: usize, dim_out: usize) -> Vec<CMatrix> {
    let eig = linalg::eigh(j).expect("validated Choi matrix");
    let tr = j.trace().re;
    let mut ops = Vec::new();
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l < KRAUS_RANK_TOL * tr {
            continue;
        }
        let s = l.sqrt();
        ops.push(CMatrix::from_fn(dim_out, dim_in, |a, i| eig.eigenvectors[(a * dim_in + i, k)] * s));
    }
    if ops.is_empty() {
        ops.push(CMatrix::zeros(dim_out, dim_in));
    }
    ops
}

fn apply_choi(j: &CMatrix, x: &CMatrix, dim_in: usize, dim_out: usize) -> CMatrix {
    CMatrix::from_fn(dim_out, dim_out, |a, b| {
        let mut acc = linalg::ZERO;
        for i in 0..dim_in {
            for k in 0..dim_in {
                acc += j[(a * dim_in + i, b * dim_in + k)] * x[(i, k)];
            }
        }
        acc
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{hs_norm, random_isometry, seeded_rng, trace_norm};
    use crate::quantum::random::random_density;

    fn random_channel(d: usize, env: usize, seed: u64) -> Channel {
        Channel::from_stinespring(random_isometry(d, d * env, seed).unwrap(), d, env).unwrap()
    }

    #[test]
    fn identity_and_replacement_examples() {
        let mut rng = seeded_rng(2);
        let rho = random_density(3, &mut rng);
        let id = Channel::identity(3);
        assert!(hs_norm(&(id.apply(rho.matrix()).unwrap() - rho.matrix())) < 1e-15);
        let tau = random_density(3, &mut rng);
        let r = replacement_channel(&tau);
        assert!(hs_norm(&(r.apply(rho.matrix()).unwrap() - tau.matrix())) < 1e-12);
    }

    #[test]
    fn apply_matches_choi_contraction_oracle() {
        let mut rng = seeded_rng(4);
        let ch = random_channel(3, 2, 7);
        let rho = random_density(3, &mut rng);
        // Oracle: Σ_ij ρ_ij N(|i⟩⟨j|), each term evaluated through Kraus form.
        let mut want = CMatrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                let unit = linalg::outer(&linalg::ket(3, i), &linalg::ket(3, j));
                want += ch.apply(&unit).unwrap() * rho.matrix()[(i, j)];
            }
        }
        let choi = ch.convert(RepresentationKind::Choi).unwrap();
        assert!(hs_norm(&(choi.apply(rho.matrix()).unwrap() - want)) < 1e-12);
    }

    #[test]
    fn identity_choi_is_unnormalized_bell() {
        let j = Channel::identity(2).choi();
        assert!((j.trace().re - 2.0).abs() < 1e-15);
        for (r, cc) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert!((j[(r, cc)].re - 1.0).abs() < 1e-15);
        }
        let back = Channel::identity(2).convert(RepresentationKind::Choi).unwrap().kraus();
        assert_eq!(back.len(), 1);
        let phase = back[0][(0, 0)];
        assert!(hs_norm(&(&back[0] - linalg::identity(2) * phase)) < 1e-12);
    }

    #[test]
    fn conversions_agree() {
        let mut rng = seeded_rng(6);
        for seed in 0..10 {
            let ch = random_channel(4, 3, seed);
            let rho = random_density(4, &mut rng);
            let base = ch.apply(rho.matrix()).unwrap();
            for kind in [RepresentationKind::Kraus, RepresentationKind::Stinespring, RepresentationKind::Choi] {
                let out = ch.convert(kind).unwrap().apply(rho.matrix()).unwrap();
                assert!(trace_norm(&(out - &base)) < 1e-9);
            }
            let round = ch.convert(RepresentationKind::Choi).unwrap().convert(RepresentationKind::Stinespring).unwrap();
            assert!(trace_norm(&(round.apply(rho.matrix()).unwrap() - &base)) < 1e-9);
        }
    }

    #[test]
    fn compose_and_combine() {
        let n = random_channel(3, 2, 1);
        let c1 = compose(&Channel::identity(3), &n).unwrap();
        assert!(hs_norm(&(c1.choi() - n.choi())) < 1e-10);
        let c2 = convex_combine(&[1.0], std::slice::from_ref(&n)).unwrap();
        assert!(hs_norm(&(c2.choi() - n.choi())) < 1e-12);
        assert!(convex_combine(&[0.5, 0.6], &[n.clone(), n.clone()]).is_err());

        let mut rng = seeded_rng(8);
        let tau = random_density(3, &mut rng);
        let rho = random_density(3, &mut rng);
        let lam = 0.3;
        let m = convex_combine(&[1.0 - lam, lam], &[Channel::identity(3), replacement_channel(&tau)]).unwrap();
        let want = rho.matrix() * cr(1.0 - lam) + tau.matrix() * cr(lam);
        assert!(hs_norm(&(m.apply(rho.matrix()).unwrap() - want)) < 1e-12);
    }

    #[test]
    fn superoperator_matches_apply() {
        let mut rng = seeded_rng(10);
        let ch = random_channel(3, 2, 3);
        let rho = random_density(3, &mut rng);
        for variant in [ch.clone(), ch.convert(RepresentationKind::Choi).unwrap()] {
            let s = variant.superoperator();
            let v = crate::linalg::CVector::from_iterator(9, rho.matrix().transpose().iter().cloned());
            let out = s * v;
            let want = ch.apply(rho.matrix()).unwrap();
            for a in 0..3 {
                for b in 0..3 {
                    assert!((out[a * 3 + b] - want[(a, b)]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn rejects_invalid() {
        let k = linalg::identity(2) * cr(0.5);
        assert!(matches!(Channel::from_kraus(vec![k]), Err(Error::InvalidChannel(_))));
        assert!(Channel::from_choi(linalg::identity(4), 2, 2).is_err());
        assert!(Channel::unitary(linalg::diag_real(&[1.0, 0.5])).is_err());
    }

    #[test]
    fn dephasing_kills_coherences() {
        let ch = dephasing_channel(&linalg::identity(2)).unwrap();
        let plus = linalg::CVector::from_vec(vec![cr(0.5f64.sqrt()), cr(0.5f64.sqrt())]);
        let out = ch.apply(&linalg::projector(&plus)).unwrap();
        assert!(out[(0, 1)].norm() < 1e-15);
        assert!((out[(0, 0)].re - 0.5).abs() < 1e-15);
    }
}
