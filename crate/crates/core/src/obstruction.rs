//! Flat splitting subalgebras, the rank inequality, and the classification
//! table of positively curved normal homogeneous spaces.

use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::lie::{MatrixLieAlgebra, ReductiveDecomposition};
use crate::util::{self, columns, null_space};

/// Bracket tolerance for commuting pairs and abelian subalgebras.
pub const BRACKET_TOL: f64 = 1e-8;
/// Tolerance for `pr_h`/`pr_m` mapping a subalgebra into itself.
pub const SPLIT_TOL: f64 = 1e-10;
/// Default number of multi-start seeds for the commuting pair search.
pub const DEFAULT_BUDGET: usize = 64;

const SUBSPACE_TOL: f64 = 1e-9;

fn cols(m: &DMatrix<f64>) -> Vec<DVector<f64>> {
    m.column_iter().map(|c| c.into_owned()).collect()
}

/// Q-orthonormal basis of `span(a) ∩ ker(p)`.
fn restrict_kernel(alg: &MatrixLieAlgebra, a: &DMatrix<f64>, p: &DMatrix<f64>) -> DMatrix<f64> {
    if a.ncols() == 0 {
        return a.clone();
    }
    let k = null_space(&(p * a), SUBSPACE_TOL);
    alg.q_orthonormal(&(a * k))
}

/// Center of the centralizer of `s`: the smallest intersection of Cartan
/// subalgebras containing an abelian `s`.
fn toral_closure(alg: &MatrixLieAlgebra, s: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    let c = alg.centralizer(s)?;
    let d = alg.dim();
    let k = c.ncols();
    if k == 0 {
        return Ok(c);
    }
    let mut stacked = DMatrix::zeros(d * k, k);
    for (j, cj) in c.column_iter().enumerate() {
        let ad = alg.ad(&cj.into_owned())?;
        stacked.view_mut((j * d, 0), (d, k)).copy_from(&(ad * &c));
    }
    let z = null_space(&stacked, SUBSPACE_TOL);
    Ok(alg.q_orthonormal(&(&c * z)))
}

/// Largest residual of projecting the columns of `w` onto the Q-orthonormal
/// columns of `basis`.
fn span_residual(alg: &MatrixLieAlgebra, basis: &DMatrix<f64>, w: &DMatrix<f64>) -> f64 {
    let q = alg.inner_product();
    let mut worst = 0.0f64;
    for c in w.column_iter() {
        let c = c.into_owned();
        let proj = basis * (basis.transpose() * q * &c);
        worst = worst.max(alg.norm(&(c - proj)));
    }
    worst
}

/// Rank of a Gram matrix, relative to its largest eigenvalue.
fn gram_rank(alg: &MatrixLieAlgebra, vs: &[DVector<f64>]) -> usize {
    if vs.is_empty() {
        return 0;
    }
    let m = columns(alg.dim(), vs);
    let gram = m.transpose() * alg.inner_product() * &m;
    let eig = gram.symmetric_eigen();
    let scale = eig.eigenvalues.amax().max(1e-300);
    eig.eigenvalues.iter().filter(|&&l| l > 1e-8 * scale).count()
}

/// A linearly independent commuting pair in `m`.
#[derive(Clone, Debug)]
pub struct CommutingPair {
    pub u: DVector<f64>,
    pub v: DVector<f64>,
    pub bracket: f64,
    pub gram: f64,
}

/// Smallest singular value of `v -> [u, v]` on the complement of `u` in `m`
/// (the second one on all of `m`), with its right singular vector in
/// m-coordinates.
fn second_singular(
    dec: &ReductiveDecomposition,
    ads: &[DMatrix<f64>],
    lt: &DMatrix<f64>,
    a: &DVector<f64>,
) -> (f64, DVector<f64>) {
    let d = dec.algebra().dim();
    let mut ad = DMatrix::zeros(d, d);
    for (c, m) in a.iter().zip(ads) {
        ad += m * *c;
    }
    let complement = null_space(&DMatrix::from_row_slice(1, a.len(), a.as_slice()), 1e-12);
    let b = lt * ad * dec.m_matrix() * &complement;
    let svd = b.clone().svd(false, true);
    let vt = svd.v_t.expect("requested");
    let k = complement.ncols();
    if svd.singular_values.len() < k {
        let kernel = null_space(&b, 1e-12);
        return (0.0, &complement * kernel.column(0));
    }
    let i = svd.singular_values.imin();
    let w = &complement * vt.row(i).transpose();
    (svd.singular_values[i].max(0.0), w)
}

/// Multi-start search for independent commuting pairs `(u, v)` in `m`.
///
/// Minimizes the second singular value of `v -> [u, v]` restricted to `m`
/// over unit `u` (the first one is always zero, at `v = u`), starting from the
/// `m` basis and then `samples` random directions.
pub fn commuting_pairs_in_m(decomposition: &ReductiveDecomposition, samples: usize, seed: u64) -> Vec<CommutingPair> {
    let n = decomposition.dim_m();
    if n < 2 {
        return Vec::new();
    }
    let alg = decomposition.algebra();
    let Some(chol) = alg.inner_product().clone().cholesky() else {
        return Vec::new();
    };
    let lt = chol.l().transpose();
    let ads: Vec<DMatrix<f64>> = match decomposition.m_basis().iter().map(|m| alg.ad(m)).collect() {
        Ok(a) => a,
        Err(_) => return Vec::new(),
    };
    let scale = 1.0 + ads.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let mut r = util::rng(seed);
    let mut starts: Vec<DVector<f64>> = (0..n).map(|i| util::unit(n, i)).collect();
    starts.extend((0..samples).map(|_| util::random_unit(n, &mut r)));

    let mut found: Vec<CommutingPair> = Vec::new();
    let mut spans: Vec<DMatrix<f64>> = Vec::new();
    for start in starts {
        let mut a = start;
        let (mut f, _) = second_singular(decomposition, &ads, &lt, &a);
        let mut step = 0.5;
        while step > 1e-12 && f > 1e-14 * scale {
            let mut improved = false;
            for k in 0..n {
                for s in [step, -step] {
                    let mut trial = a.clone();
                    trial[k] += s;
                    let trial = trial.normalize();
                    let (ft, _) = second_singular(decomposition, &ads, &lt, &trial);
                    if ft < f {
                        a = trial;
                        f = ft;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        let (_, w) = second_singular(decomposition, &ads, &lt, &a);
        let u = decomposition.m_matrix() * &a;
        let v = decomposition.m_matrix() * &w;
        let bracket = match alg.bracket(&u, &v) {
            Ok(b) => alg.norm(&b),
            Err(_) => continue,
        };
        let (uu, vv, uv) = (alg.dot(&u, &u), alg.dot(&v, &v), alg.dot(&u, &v));
        let gram = uu * vv - uv * uv;
        if bracket > BRACKET_TOL || gram < 1e-6 {
            continue;
        }
        let pair = columns(n, &[a.clone(), w.clone()]);
        let seen = spans.iter().any(|s| {
            let p = s * s.transpose();
            (&pair - &p * &pair).norm() < 1e-6
        });
        if !seen {
            let q = pair.qr().q();
            spans.push(q);
            found.push(CommutingPair { u, v, bracket, gram });
        }
    }
    found
}

/// How a flat splitting subalgebra candidate was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FssSource {
    /// A Cartan subalgebra of `h` extended inside its centralizer.
    CartanExtension,
    /// The toral closure of a commuting pair in `m` plus `h`-parts of its centralizer.
    CommutingPair,
}

/// Checks of a candidate flat splitting subalgebra.
#[derive(Clone, Debug)]
pub struct FssCertificate {
    /// Q-orthonormal basis: the `h`-part followed by the `m`-part.
    pub basis: Vec<DVector<f64>>,
    pub h_part: Vec<DVector<f64>>,
    pub m_part: Vec<DVector<f64>>,
    /// Abelian, ad-skew, and equal to the center of its centralizer.
    pub toral: bool,
    pub splits: bool,
    pub m_part_dim: usize,
    pub bracket_defect: f64,
    pub split_defect: f64,
    /// True when the subalgebra is a Cartan subalgebra of `g`.
    pub cartan: bool,
    pub source: FssSource,
}

impl FssCertificate {
    pub fn verdict(&self) -> bool {
        self.toral && self.splits && self.m_part_dim >= 2
    }

    /// `m`-part in m-coordinates (columns), the tangent space of the flat.
    pub fn flat_subspace(&self, decomposition: &ReductiveDecomposition) -> DMatrix<f64> {
        let vs: Vec<DVector<f64>> = self.m_part.iter().map(|v| decomposition.to_m() * v).collect();
        columns(decomposition.dim_m(), &vs)
    }
}

/// Recomputes all checks for the span of `vectors`.
pub fn validate_fss(
    decomposition: &ReductiveDecomposition,
    vectors: &[DVector<f64>],
    source: FssSource,
) -> Result<FssCertificate> {
    let alg = decomposition.algebra();
    let d = alg.dim();
    for v in vectors {
        crate::error::check_dim(d, v.len())?;
    }
    let basis_m = alg.q_orthonormal(&columns(d, vectors));
    let basis = cols(&basis_m);
    let bracket_defect = alg.commutator_defect(&basis)?;
    let q = alg.inner_product();
    let mut skew = 0.0f64;
    for b in &basis {
        let ad = alg.ad(b)?;
        skew = skew.max((ad.transpose() * q + q * &ad).norm());
    }
    let closure = toral_closure(alg, &basis)?;
    let closed = closure.ncols() == basis.len() && span_residual(alg, &basis_m, &closure) <= 1e-7;
    let toral = bracket_defect <= BRACKET_TOL && skew <= 1e-8 * (1.0 + q.norm()) && closed;

    let split_defect = span_residual(alg, &basis_m, &(decomposition.pr_h() * &basis_m));
    let splits = split_defect <= SPLIT_TOL;
    let h_part = cols(&restrict_kernel(alg, &basis_m, decomposition.pr_m()));
    let m_part = cols(&restrict_kernel(alg, &basis_m, decomposition.pr_h()));
    let projected: Vec<DVector<f64>> = basis.iter().map(|b| decomposition.pr_m() * b).collect();
    let m_part_dim = if splits { gram_rank(alg, &projected) } else { m_part.len() };
    let rank = alg.rank(util::DEFAULT_SEED);
    let mut ordered = h_part.clone();
    ordered.extend(m_part.iter().cloned());
    Ok(FssCertificate {
        basis: if ordered.len() == basis.len() { ordered } else { basis.clone() },
        h_part,
        m_part,
        toral,
        splits,
        m_part_dim,
        bracket_defect,
        split_defect,
        cartan: toral && basis.len() == rank,
        source,
    })
}

/// Cartan subalgebra of `h`: the centralizer in `h` of a generic element.
pub fn cartan_of_h(decomposition: &ReductiveDecomposition, seed: u64) -> Result<Vec<DVector<f64>>> {
    let alg = decomposition.algebra();
    if decomposition.dim_h() == 0 {
        return Ok(Vec::new());
    }
    let mut r = util::rng(seed);
    let x = decomposition.h_matrix() * util::gaussian_vector(decomposition.dim_h(), &mut r);
    let c = alg.centralizer(&[x])?;
    let t = cols(&restrict_kernel(alg, &c, decomposition.pr_m()));
    let defect = alg.commutator_defect(&t)?;
    if defect > BRACKET_TOL {
        return Err(Error::Numeric(format!("centralizer in h is not abelian ({defect:e})")));
    }
    Ok(t)
}

/// Grows `t` by elements of `pool` (a subspace, columns) that commute with
/// everything collected so far.
fn extend_abelian(alg: &MatrixLieAlgebra, mut t: Vec<DVector<f64>>, pool: &DMatrix<f64>, pr_out: &DMatrix<f64>) -> Result<Vec<DVector<f64>>> {
    let q = alg.inner_product();
    for _ in 0..alg.dim() {
        let c = if t.is_empty() { DMatrix::identity(alg.dim(), alg.dim()) } else { alg.centralizer(&t)? };
        let c = restrict_kernel(alg, &c, pr_out);
        let mut best: Option<DVector<f64>> = None;
        let mut best_norm = 1e-6;
        for col in c.column_iter() {
            let mut v = col.into_owned();
            let inside = pool * (pool.transpose() * q * &v);
            if alg.norm(&(&v - &inside)) > 1e-7 {
                continue;
            }
            for e in &t {
                v -= e * alg.dot(e, &v);
            }
            let n = alg.norm(&v);
            if n > best_norm {
                best_norm = n;
                best = Some(v / n);
            }
        }
        match best {
            Some(v) => t.push(v),
            None => break,
        }
    }
    Ok(t)
}

/// Extension of a Cartan subalgebra of `h` by an abelian subspace of `m`
/// commuting with it.
pub fn cartan_extension(decomposition: &ReductiveDecomposition, seed: u64) -> Result<FssCertificate> {
    let alg = decomposition.algebra();
    let t_h = cartan_of_h(decomposition, seed)?;
    let m_space = alg.q_orthonormal(decomposition.m_matrix());
    let t = extend_abelian(alg, t_h, &m_space, decomposition.pr_h())?;
    validate_fss(decomposition, &t, FssSource::CartanExtension)
}

/// Budgeted search for a flat splitting subalgebra. Tries the Cartan
/// extension of `h` first, then the toral closures of commuting pairs in `m`.
/// `None` means nothing was found within `budget` random starts.
pub fn fss_search(decomposition: &ReductiveDecomposition, budget: usize) -> Option<FssCertificate> {
    fss_search_seeded(decomposition, budget, util::DEFAULT_SEED)
}

pub fn fss_search_seeded(decomposition: &ReductiveDecomposition, budget: usize, seed: u64) -> Option<FssCertificate> {
    if decomposition.dim_m() < 2 {
        return None;
    }
    if let Ok(cert) = cartan_extension(decomposition, seed) {
        if cert.verdict() {
            return Some(cert);
        }
    }
    let alg = decomposition.algebra();
    let h_space = alg.q_orthonormal(decomposition.h_matrix());
    for pair in commuting_pairs_in_m(decomposition, budget, seed) {
        let Ok(closure) = toral_closure(alg, &[pair.u.clone(), pair.v.clone()]) else {
            continue;
        };
        if let Ok(cert) = validate_fss(decomposition, &cols(&closure), FssSource::CommutingPair) {
            if cert.verdict() {
                return Some(cert);
            }
        }
        // add a maximal abelian family of h-parts of the centralizer, then close again
        let Ok(grown) = extend_abelian(alg, vec![pair.u.clone(), pair.v.clone()], &h_space, decomposition.pr_m()) else {
            continue;
        };
        let Ok(closure) = toral_closure(alg, &grown) else {
            continue;
        };
        if let Ok(cert) = validate_fss(decomposition, &cols(&closure), FssSource::CommutingPair) {
            if cert.verdict() {
                return Some(cert);
            }
        }
    }
    None
}

/// Outcome of `rank g <= rank h + 1`.
#[derive(Clone, Debug)]
pub struct RankCheck {
    pub rank_g: usize,
    pub rank_h: usize,
    pub pass: bool,
    /// A Cartan subalgebra of `g` extending one of `h`, reported on failure.
    pub enlargement: Option<FssCertificate>,
}

/// Rank of the subalgebra `h`.
pub fn rank_h(decomposition: &ReductiveDecomposition, seed: u64) -> Result<usize> {
    Ok(cartan_of_h(decomposition, seed)?.len())
}

pub fn rank_inequality_check(decomposition: &ReductiveDecomposition) -> Result<RankCheck> {
    let seed = util::DEFAULT_SEED;
    let rank_g = decomposition.algebra().rank(seed);
    let rank_h = rank_h(decomposition, seed)?;
    let pass = rank_g <= rank_h + 1;
    let enlargement = if pass { None } else { Some(cartan_extension(decomposition, seed)?) };
    Ok(RankCheck { rank_g, rank_h, pass, enlargement })
}

/// Compact simple and abelian factors appearing in the table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GroupName {
    SO,
    SU,
    Sp,
    U,
    Spin,
    G2,
    F4,
}

impl fmt::Display for GroupName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GroupName::SO => "SO",
            GroupName::SU => "SU",
            GroupName::Sp => "Sp",
            GroupName::U => "U",
            GroupName::Spin => "Spin",
            GroupName::G2 => "G2",
            GroupName::F4 => "F4",
        };
        f.write_str(s)
    }
}

/// `a * n + b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Affine {
    pub a: i64,
    pub b: i64,
}

impl Affine {
    pub fn at(&self, n: i64) -> i64 {
        self.a * n + self.b
    }

    pub fn is_symbolic(&self) -> bool {
        self.a != 0
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.a, self.b) {
            (0, b) => write!(f, "{b}"),
            (a, b) => {
                match a {
                    1 => write!(f, "n")?,
                    -1 => write!(f, "-n")?,
                    a => write!(f, "{a}n")?,
                }
                match b {
                    0 => Ok(()),
                    b if b > 0 => write!(f, "+{b}"),
                    b => write!(f, "{b}"),
                }
            }
        }
    }
}

/// One factor `Name(arg)` of a group label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Factor {
    pub name: GroupName,
    pub arg: Affine,
}

impl Factor {
    fn trivial_at(&self, n: i64) -> bool {
        let k = self.arg.at(n);
        match self.name {
            GroupName::SO | GroupName::SU | GroupName::Spin => k <= 1,
            GroupName::Sp | GroupName::U => k <= 0,
            GroupName::G2 | GroupName::F4 => false,
        }
    }
}

fn parse_affine(s: &str) -> Result<Affine> {
    let s: String = s.chars().filter(|c| !c.is_whitespace()).map(|c| if c == '−' { '-' } else { c }).collect();
    let bad = || Error::Label(format!("cannot parse argument '{s}'"));
    if let Some(pos) = s.find('n') {
        let coef = &s[..pos];
        let a = match coef {
            "" | "+" => 1,
            "-" => -1,
            c => c.parse::<i64>().map_err(|_| bad())?,
        };
        let rest = &s[pos + 1..];
        let b = if rest.is_empty() {
            0
        } else {
            rest.strip_prefix('+').unwrap_or(rest).parse::<i64>().map_err(|_| bad())?
        };
        Ok(Affine { a, b })
    } else {
        Ok(Affine { a: 0, b: s.parse::<i64>().map_err(|_| bad())? })
    }
}

/// Parses a group label such as `SU(3)×SO(3)`, `Sp(n-1)Sp(1)` or `Sp(2)S^1`.
/// `S^1` and `S¹` mean `U(1)`; `e`, `{e}`, `1` and `trivial` are the trivial group.
pub fn parse_group_label(label: &str) -> Result<Vec<Factor>> {
    let t = label.trim();
    if matches!(t, "" | "e" | "{e}" | "1" | "trivial" | "{1}") {
        return Ok(Vec::new());
    }
    let chars: Vec<char> = t.chars().collect();
    let mut i = 0;
    let mut out = Vec::new();
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() || matches!(c, '×' | 'x' | '*' | '·' | '⋅') {
            i += 1;
            continue;
        }
        let rest: String = chars[i..].iter().collect();
        if let Some(len) = ["S^1", "S¹", "S^{1}"].iter().find(|p| rest.starts_with(**p)).map(|p| p.chars().count()) {
            out.push(Factor { name: GroupName::U, arg: Affine { a: 0, b: 1 } });
            i += len;
            continue;
        }
        let start = i;
        while i < chars.len() && (chars[i].is_ascii_alphabetic() || chars[i] == '_') {
            i += 1;
        }
        let ident: String = chars[start..i].iter().filter(|c| **c != '_').collect();
        match ident.as_str() {
            "G" | "F" => {
                let digit = chars.get(i).copied();
                i += 1;
                let name = match (ident.as_str(), digit) {
                    ("G", Some('2')) => GroupName::G2,
                    ("F", Some('4')) => GroupName::F4,
                    _ => return Err(Error::Label(format!("unknown exceptional group in '{label}'"))),
                };
                out.push(Factor { name, arg: Affine { a: 0, b: 0 } });
                continue;
            }
            _ => {}
        }
        let name = match ident.as_str() {
            "SO" => GroupName::SO,
            "SU" => GroupName::SU,
            "Sp" => GroupName::Sp,
            "U" => GroupName::U,
            "Spin" => GroupName::Spin,
            "" => return Err(Error::Label(format!("unexpected character '{c}' in '{label}'"))),
            other => return Err(Error::Label(format!("unknown group '{other}' in '{label}'"))),
        };
        if chars.get(i) != Some(&'(') {
            return Err(Error::Label(format!("missing '(' after {name} in '{label}'")));
        }
        let close = chars[i..]
            .iter()
            .position(|&c| c == ')')
            .map(|p| p + i)
            .ok_or_else(|| Error::Label(format!("unbalanced parentheses in '{label}'")))?;
        let arg: String = chars[i + 1..close].iter().collect();
        out.push(Factor { name, arg: parse_affine(&arg)? });
        i = close + 1;
    }
    Ok(out)
}

/// Parity of the dimension of a table entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
    DependsOnN,
}

/// One item of the classification list.
#[derive(Clone, Debug)]
pub struct ClassificationEntry {
    /// List item 1 to 4.
    pub family: u8,
    pub family_label: &'static str,
    pub space: &'static str,
    /// `(G, H)` labels, all presenting the same space.
    pub presentations: &'static [(&'static str, &'static str)],
    /// Dimension `a * n + b`.
    pub dimension: Affine,
    /// Smallest `n` for which the entry is a space of dimension at least 2.
    pub min_n: i64,
    pub note: Option<&'static str>,
}

impl ClassificationEntry {
    pub fn parity(&self) -> Parity {
        if self.dimension.a % 2 != 0 {
            Parity::DependsOnN
        } else if self.dimension.b % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn dimension_formula(&self) -> String {
        self.dimension.to_string()
    }
}

const RANK_ONE: &str = "rank one compact symmetric space";
const SPHERES: &str = "homogeneous sphere or complex projective space";
const BERGER: &str = "Berger space";
const WILKING: &str = "Wilking space";

static TABLE: &[ClassificationEntry] = &[
    ClassificationEntry {
        family: 1,
        family_label: RANK_ONE,
        space: "S^{n-1}",
        presentations: &[("SO(n)", "SO(n-1)")],
        dimension: Affine { a: 1, b: -1 },
        min_n: 3,
        note: None,
    },
    ClassificationEntry {
        family: 1,
        family_label: RANK_ONE,
        space: "CP^{n-1}",
        presentations: &[("SU(n)", "U(n-1)")],
        dimension: Affine { a: 2, b: -2 },
        min_n: 2,
        note: Some("source lists H = SU(n-1), which presents S^{2n-1} (family 2); stored with H = U(n-1)"),
    },
    ClassificationEntry {
        family: 1,
        family_label: RANK_ONE,
        space: "HP^{n-1}",
        presentations: &[("Sp(n)", "Sp(n-1)Sp(1)")],
        dimension: Affine { a: 4, b: -4 },
        min_n: 2,
        note: None,
    },
    ClassificationEntry {
        family: 1,
        family_label: RANK_ONE,
        space: "OP^2",
        presentations: &[("F4", "Spin(9)")],
        dimension: Affine { a: 0, b: 16 },
        min_n: 0,
        note: None,
    },
    ClassificationEntry {
        family: 2,
        family_label: SPHERES,
        space: "S^{2n-1}",
        presentations: &[("SU(n)", "SU(n-1)"), ("U(n)", "U(n-1)")],
        dimension: Affine { a: 2, b: -1 },
        min_n: 2,
        note: None,
    },
    ClassificationEntry {
        family: 2,
        family_label: SPHERES,
        space: "S^{4n-1}",
        presentations: &[("Sp(n)", "Sp(n-1)"), ("Sp(n)U(1)", "Sp(n-1)U(1)"), ("Sp(n)Sp(1)", "Sp(n-1)Sp(1)")],
        dimension: Affine { a: 4, b: -1 },
        min_n: 1,
        note: None,
    },
    ClassificationEntry {
        family: 2,
        family_label: SPHERES,
        space: "S^6",
        presentations: &[("G2", "SU(3)")],
        dimension: Affine { a: 0, b: 6 },
        min_n: 0,
        note: None,
    },
    ClassificationEntry {
        family: 2,
        family_label: SPHERES,
        space: "S^7",
        presentations: &[("Spin(7)", "G2")],
        dimension: Affine { a: 0, b: 7 },
        min_n: 0,
        note: None,
    },
    ClassificationEntry {
        family: 2,
        family_label: SPHERES,
        space: "S^15",
        presentations: &[("Spin(9)", "Spin(7)")],
        dimension: Affine { a: 0, b: 15 },
        min_n: 0,
        note: None,
    },
    ClassificationEntry {
        family: 2,
        family_label: SPHERES,
        space: "CP^{2n-1}",
        presentations: &[("Sp(n)", "Sp(n-1)U(1)")],
        dimension: Affine { a: 4, b: -2 },
        min_n: 1,
        note: None,
    },
    ClassificationEntry {
        family: 3,
        family_label: BERGER,
        space: "B^13",
        presentations: &[("SU(5)", "Sp(2)S^1")],
        dimension: Affine { a: 0, b: 13 },
        min_n: 0,
        note: None,
    },
    ClassificationEntry {
        family: 3,
        family_label: BERGER,
        space: "B^7",
        presentations: &[("Sp(2)", "SU(2)")],
        dimension: Affine { a: 0, b: 7 },
        min_n: 0,
        note: None,
    },
    ClassificationEntry {
        family: 4,
        family_label: WILKING,
        space: "S^{1,1}",
        presentations: &[("SU(3)×SO(3)", "U(2)")],
        dimension: Affine { a: 0, b: 7 },
        min_n: 0,
        note: None,
    },
];

/// The static classification table.
pub fn classification_table() -> &'static [ClassificationEntry] {
    TABLE
}

/// A successful [`classification_lookup`].
#[derive(Clone, Debug)]
pub struct ClassificationMatch {
    pub entry: &'static ClassificationEntry,
    /// Index into `entry.presentations`.
    pub presentation: usize,
    /// Value of `n` for concrete labels.
    pub n: Option<i64>,
    /// Dimension for concrete labels.
    pub dimension: Option<i64>,
}

fn sorted(mut f: Vec<Factor>) -> Vec<Factor> {
    f.sort();
    f
}

fn instantiate(f: &[Factor], n: i64) -> Vec<(GroupName, i64)> {
    let mut out: Vec<(GroupName, i64)> = f.iter().filter(|x| !x.trivial_at(n)).map(|x| (x.name, x.arg.at(n))).collect();
    out.sort();
    out
}

const MAX_N: i64 = 64;

/// Matches a `(G, H)` pair of labels against the table. Symbolic labels in
/// `n` must agree factor by factor; concrete labels are matched by searching
/// `n`, ignoring trivial factors such as `SU(1)` or `Sp(0)`.
pub fn classification_lookup(g: &str, h: &str) -> Result<Option<ClassificationMatch>> {
    let qg = parse_group_label(g)?;
    let qh = parse_group_label(h)?;
    let symbolic = qg.iter().chain(&qh).any(|f| f.arg.is_symbolic());
    let (qg_s, qh_s) = (sorted(qg.clone()), sorted(qh.clone()));
    let (qg_c, qh_c) = (instantiate(&qg, 0), instantiate(&qh, 0));
    for entry in TABLE {
        for (idx, (pg, ph)) in entry.presentations.iter().enumerate() {
            let pg = parse_group_label(pg)?;
            let ph = parse_group_label(ph)?;
            if symbolic {
                if sorted(pg) == qg_s && sorted(ph) == qh_s {
                    return Ok(Some(ClassificationMatch { entry, presentation: idx, n: None, dimension: None }));
                }
                continue;
            }
            let depends = pg.iter().chain(&ph).any(|f| f.arg.is_symbolic());
            let range = if depends { entry.min_n..=MAX_N } else { 0..=0 };
            for n in range {
                if instantiate(&pg, n) == qg_c && instantiate(&ph, n) == qh_c {
                    return Ok(Some(ClassificationMatch {
                        entry,
                        presentation: idx,
                        n: depends.then_some(n),
                        dimension: Some(entry.dimension.at(n)),
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// Lookup of a single `G/H` label, split at the last `/`.
pub fn classification_lookup_quotient(label: &str) -> Result<Option<ClassificationMatch>> {
    let (g, h) = label
        .rsplit_once('/')
        .ok_or_else(|| Error::Label(format!("expected G/H, got '{label}'")))?;
    classification_lookup(g, h)
}

/// Admissibility of positively curved invariant metrics.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Yes,
    No,
    InconclusiveAtBudget,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::InconclusiveAtBudget => "inconclusive at budget",
        })
    }
}

/// Result of [`positive_curvature_verdict`].
#[derive(Clone, Debug)]
pub struct PositiveCurvatureReport {
    pub fss: Option<FssCertificate>,
    pub rank_check: Option<RankCheck>,
    pub classification: Option<ClassificationMatch>,
    pub verdict: Verdict,
    pub budget: usize,
}

/// An FSS witness rules out positively curved delta-homogeneous metrics; a
/// table match means such metrics exist. Only the positive curvature
/// direction is decided; flag-wise positivity is not.
pub fn positive_curvature_verdict(
    decomposition: Option<&ReductiveDecomposition>,
    labels: Option<(&str, &str)>,
    budget: usize,
) -> Result<PositiveCurvatureReport> {
    let (fss, rank_check) = match decomposition {
        Some(d) => (fss_search(d, budget), Some(rank_inequality_check(d)?)),
        None => (None, None),
    };
    let classification = match labels {
        Some((g, h)) => classification_lookup(g, h)?,
        None => None,
    };
    let verdict = if fss.is_some() {
        Verdict::No
    } else if classification.is_some() {
        Verdict::Yes
    } else {
        Verdict::InconclusiveAtBudget
    };
    Ok(PositiveCurvatureReport { fss, rank_check, classification, verdict, budget })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_parsing() {
        assert_eq!(parse_affine("n-1").unwrap(), Affine { a: 1, b: -1 });
        assert_eq!(parse_affine("n−1").unwrap(), Affine { a: 1, b: -1 });
        assert_eq!(parse_affine("2n+3").unwrap(), Affine { a: 2, b: 3 });
        assert_eq!(parse_affine("7").unwrap(), Affine { a: 0, b: 7 });
        assert!(parse_affine("m").is_err());
    }

    #[test]
    fn labels_with_circles_and_products() {
        let f = parse_group_label("Sp(2)S^1").unwrap();
        assert_eq!(f.len(), 2);
        assert_eq!(f[1], Factor { name: GroupName::U, arg: Affine { a: 0, b: 1 } });
        assert_eq!(parse_group_label("SU(3) x SO(3)").unwrap().len(), 2);
        assert_eq!(parse_group_label("F_4").unwrap()[0].name, GroupName::F4);
        assert!(parse_group_label("E8").is_err());
        assert!(parse_group_label("SO(3").is_err());
    }
}
