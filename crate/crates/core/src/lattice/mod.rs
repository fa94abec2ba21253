//! Exact lattice representation and the classical algorithms built on it.
//!
//! A [`Basis`] stores its rows as exact rationals; everything that decides
//! lattice membership goes through that exact form. Floating-point views
//! (Gram-Schmidt data, embeddings, norms) are derived from it and cached.

mod babai;
mod enumerate;
mod gso;
mod lll;

use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

pub use babai::{babai_bound_sq, babai_nearest_plane};
pub use enumerate::{enumerate_ball, enumerate_ball_capped, for_each_in_ball, BallPoint};
pub use gso::{gram_schmidt, GramSchmidt};
pub use lll::{lll_reduce, lll_reduce_with_transform, DEFAULT_LLL_DELTA};

/// A full-rank lattice basis; rows are the basis vectors `b_1..b_n`.
#[derive(Clone)]
pub struct Basis {
    rows: Vec<Vec<Rational>>,
    provenance: String,
    seed: Option<u64>,
    float_rows: Vec<Vec<f64>>,
    integral: Option<IntegralRows>,
    gso: OnceLock<GramSchmidt>,
    exact_gso: OnceLock<gso::ExactGso>,
    dual: OnceLock<Vec<Vec<Rational>>>,
    reduction: OnceLock<Box<Reduction>>,
}

/// Rows written as `num / den` with a common denominator, when everything fits in `i128`.
#[derive(Clone, Debug)]
struct IntegralRows {
    num: Vec<Vec<i128>>,
    den: i128,
}

/// LLL-reduced form of a basis together with the unimodular transform
/// `reduced = transform * original`.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub basis: Basis,
    pub transform: Vec<Vec<i64>>,
}

impl Reduction {
    /// Maps coefficients with respect to the reduced basis back to the original basis.
    pub fn to_original(&self, reduced_coeffs: &[i64]) -> Result<Vec<i64>> {
        let n = reduced_coeffs.len();
        let mut out = vec![0i64; n];
        for (i, &z) in reduced_coeffs.iter().enumerate() {
            if z == 0 {
                continue;
            }
            for (k, o) in out.iter_mut().enumerate() {
                let term = z.checked_mul(self.transform[i][k]).ok_or(Error::Overflow("coefficient mapping"))?;
                *o = o.checked_add(term).ok_or(Error::Overflow("coefficient mapping"))?;
            }
        }
        Ok(out)
    }
}

impl fmt::Debug for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Basis")
            .field("n", &self.n())
            .field("rows", &self.rows.iter().map(|r| r.iter().map(rational::format).collect::<Vec<_>>()).collect::<Vec<_>>())
            .field("provenance", &self.provenance)
            .field("seed", &self.seed)
            .finish()
    }
}

impl PartialEq for Basis {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows
    }
}

impl Basis {
    /// Validates squareness and exact nonsingularity.
    pub fn new(rows: Vec<Vec<Rational>>, provenance: impl Into<String>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::MalformedBasis("dimension must be at least 1".into()));
        }
        if let Some(bad) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::MalformedBasis(format!("row {bad} has length {} (expected {n})", rows[bad].len())));
        }
        let rank = rational::rank(&rows);
        if rank < n {
            return Err(Error::SingularBasis { rank, n });
        }
        Ok(Self::new_unchecked(rows, provenance.into(), None))
    }

    pub fn from_integer_rows(rows: &[Vec<i64>], provenance: impl Into<String>) -> Result<Self> {
        Self::new(rows.iter().map(|r| r.iter().map(|&v| rational::int(v)).collect()).collect(), provenance)
    }

    /// The standard lattice `Z^n`.
    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect())
            .collect();
        Self::new_unchecked(rows, "Z^n".into(), None)
    }

    fn new_unchecked(rows: Vec<Vec<Rational>>, provenance: String, seed: Option<u64>) -> Self {
        let float_rows = rows.iter().map(|r| r.iter().map(rational::to_f64).collect()).collect();
        let integral = IntegralRows::from_rows(&rows);
        Basis {
            rows,
            provenance,
            seed,
            float_rows,
            integral,
            gso: OnceLock::new(),
            exact_gso: OnceLock::new(),
            dual: OnceLock::new(),
            reduction: OnceLock::new(),
        }
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.rows
    }

    pub fn float_rows(&self) -> &[Vec<f64>] {
        &self.float_rows
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn determinant(&self) -> Rational {
        rational::determinant(&self.rows)
    }

    pub fn is_integral(&self) -> bool {
        self.rows.iter().flatten().all(rational::is_integer)
    }

    pub fn gram_schmidt(&self) -> &GramSchmidt {
        self.gso.get_or_init(|| GramSchmidt::from_exact(self.exact_gso()))
    }

    pub(crate) fn exact_gso(&self) -> &gso::ExactGso {
        self.exact_gso.get_or_init(|| gso::ExactGso::compute(&self.rows))
    }

    /// Rows `d_i` of the dual basis, `<d_i, b_j> = [i == j]`.
    pub fn dual_rows(&self) -> &[Vec<Rational>] {
        self.dual.get_or_init(|| {
            let inv = rational::inverse(&self.rows).expect("validated basis is nonsingular");
            rational::transpose(&inv)
        })
    }

    /// LLL reduction with the default delta, cached.
    pub fn reduction(&self) -> &Reduction {
        self.reduction.get_or_init(|| {
            let (basis, transform) = lll::reduce_exact(self, &lll::default_delta());
            let transform = transform
                .iter()
                .map(|r| r.iter().map(|v| v.to_i64().expect("unimodular transform entry fits in i64")).collect())
                .collect();
            Box::new(Reduction { basis, transform })
        })
    }

    /// Basis scaled uniformly by an exact rational `c > 0`.
    pub fn scaled(&self, c: &Rational) -> Result<Basis> {
        if *c <= Rational::zero() {
            return Err(Error::InvalidParameter("scale must be positive".into()));
        }
        let rows = self.rows.iter().map(|r| r.iter().map(|v| v * c).collect()).collect();
        Ok(Self::new_unchecked(rows, format!("scaled({}) of {}", rational::format(c), self.provenance), self.seed))
    }

    /// Real embedding `sum_i z_i b_i`.
    pub fn embed(&self, coeffs: &[i64]) -> Vec<f64> {
        if let Some(int) = &self.integral {
            if let Some(v) = int.embed(coeffs) {
                return v;
            }
        }
        self.exact_embedding(coeffs).iter().map(rational::to_f64).collect()
    }

    /// Exact embedding over the rationals.
    pub fn exact_embedding(&self, coeffs: &[i64]) -> Vec<Rational> {
        let n = self.n();
        let mut out = vec![Rational::zero(); n];
        for (i, &z) in coeffs.iter().enumerate() {
            if z == 0 {
                continue;
            }
            let z = rational::int(z);
            for (o, b) in out.iter_mut().zip(&self.rows[i]) {
                *o += &z * b;
            }
        }
        out
    }

    pub fn vector(&self, coeffs: Vec<i64>) -> Result<LatticeVector> {
        if coeffs.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: coeffs.len() });
        }
        let embedding = self.embed(&coeffs);
        let norm_sq = embedding.iter().map(|x| x * x).sum();
        Ok(LatticeVector { coeffs, embedding, norm_sq })
    }

    /// Exact coefficients of a point (read as an exact rational vector) in this basis.
    pub fn coefficients_of(&self, point: &[Rational]) -> Result<Vec<Rational>> {
        if point.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: point.len() });
        }
        Ok(self
            .dual_rows()
            .iter()
            .map(|d| d.iter().zip(point).fold(Rational::zero(), |acc, (a, b)| acc + a * b))
            .collect())
    }

    /// Exact test of `point` (a double vector, read exactly) lying in the lattice.
    pub fn contains_exact(&self, point: &[f64]) -> Result<Option<Vec<i64>>> {
        let exact = point.iter().map(|&x| rational::from_f64(x)).collect::<Result<Vec<_>>>()?;
        let coeffs = self.coefficients_of(&exact)?;
        if coeffs.iter().all(rational::is_integer) {
            let z = coeffs
                .iter()
                .map(|c| c.to_integer().to_i64().ok_or(Error::Overflow("membership coefficients")))
                .collect::<Result<Vec<_>>>()?;
            Ok(Some(z))
        } else {
            Ok(None)
        }
    }

    /// SHA-256 over the canonical `p/q` rendering of the rows.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("n={};", self.n()).as_bytes());
        for row in &self.rows {
            for v in row {
                h.update(rational::format(v).as_bytes());
                h.update(b",");
            }
            h.update(b";");
        }
        hex::encode(h.finalize())
    }
}

impl IntegralRows {
    fn from_rows(rows: &[Vec<Rational>]) -> Option<Self> {
        let den = rational::lcm_of_denominators(rows.iter().flatten());
        let den_i = den.to_i128()?;
        let num = rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|v| (v * Rational::from_integer(den.clone())).to_integer().to_i128())
                    .collect::<Option<Vec<_>>>()
            })
            .collect::<Option<Vec<_>>>()?;
        Some(IntegralRows { num, den: den_i })
    }

    fn embed(&self, coeffs: &[i64]) -> Option<Vec<f64>> {
        let n = self.num.len();
        let mut acc = vec![0i128; n];
        for (i, &z) in coeffs.iter().enumerate() {
            if z == 0 {
                continue;
            }
            let z = z as i128;
            for (a, &b) in acc.iter_mut().zip(&self.num[i]) {
                *a = a.checked_add(z.checked_mul(b)?)?;
            }
        }
        let den = self.den as f64;
        Some(acc.into_iter().map(|a| if self.den == 1 { a as f64 } else { a as f64 / den }).collect())
    }
}

/// A lattice point: exact integer coefficients plus its floating-point view.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeVector {
    pub coeffs: Vec<i64>,
    pub embedding: Vec<f64>,
    pub norm_sq: f64,
}

impl LatticeVector {
    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&z| z == 0)
    }
}

/// A decoding target `t` with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Target(Vec<f64>);

impl Target {
    pub fn new(t: Vec<f64>) -> Result<Self> {
        if t.is_empty() {
            return Err(Error::InvalidParameter("empty target".into()));
        }
        if let Some(x) = t.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite target entry {x}")));
        }
        Ok(Target(t))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Dual basis `D` with `D * B^T = I`; its rows generate `L*`.
pub fn dual_basis(basis: &Basis) -> Basis {
    Basis::new_unchecked(basis.dual_rows().to_vec(), format!("dual of {}", basis.provenance()), basis.seed())
}

/// Shapes of generated test bases.
#[derive(Clone, Debug, PartialEq)]
pub enum BasisStyle {
    /// Entries uniform in `[-bound, bound]`.
    UniformInteger { bound: i64 },
    /// `b_1 = q e_1`, `b_i = x_i e_1 + e_i` with `q` of the given bit length and `x_i < q`.
    Knapsack { modulus_bits: u32 },
    /// `c * I`.
    ScaledIdentity { scale: i64 },
}

impl BasisStyle {
    pub fn name(&self) -> &'static str {
        match self {
            BasisStyle::UniformInteger { .. } => "uniform-integer",
            BasisStyle::Knapsack { .. } => "knapsack",
            BasisStyle::ScaledIdentity { .. } => "scaled-identity",
        }
    }
}

/// Deterministic random basis; singular draws are redrawn and counted in the provenance.
pub fn random_basis(n: usize, style: &BasisStyle, seed: u64) -> Result<Basis> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut retries = 0usize;
    loop {
        let rows: Vec<Vec<i64>> = match *style {
            BasisStyle::UniformInteger { bound } => {
                if bound < 1 {
                    return Err(Error::InvalidParameter("entry bound must be at least 1".into()));
                }
                (0..n).map(|_| (0..n).map(|_| rng.random_range(-bound..=bound)).collect()).collect()
            }
            BasisStyle::Knapsack { modulus_bits } => {
                if !(2..=40).contains(&modulus_bits) {
                    return Err(Error::InvalidParameter("modulus bits must lie in 2..=40".into()));
                }
                let q: i64 = rng.random_range((1i64 << (modulus_bits - 1))..(1i64 << modulus_bits));
                (0..n)
                    .map(|i| {
                        let mut row = vec![0i64; n];
                        if i == 0 {
                            row[0] = q;
                        } else {
                            row[0] = rng.random_range(0..q);
                            row[i] = 1;
                        }
                        row
                    })
                    .collect()
            }
            BasisStyle::ScaledIdentity { scale } => {
                if scale == 0 {
                    return Err(Error::InvalidParameter("scale must be nonzero".into()));
                }
                (0..n).map(|i| (0..n).map(|j| if i == j { scale } else { 0 }).collect()).collect()
            }
        };
        let exact: Vec<Vec<Rational>> = rows.iter().map(|r| r.iter().map(|&v| rational::int(v)).collect()).collect();
        if rational::rank(&exact) == n {
            let provenance = match *style {
                BasisStyle::UniformInteger { bound } => format!("uniform-integer(bound={bound}, retries={retries})"),
                BasisStyle::Knapsack { modulus_bits } => format!("knapsack(bits={modulus_bits}, retries={retries})"),
                BasisStyle::ScaledIdentity { scale } => format!("scaled-identity(scale={scale})"),
            };
            return Ok(Basis::new_unchecked(exact, provenance, Some(seed)));
        }
        retries += 1;
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm_sq(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub(crate) fn big_to_i64(v: &BigInt) -> Result<i64> {
    v.to_i64().ok_or(Error::Overflow("integer coefficient"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(p: i64, d: i64) -> Rational {
        Rational::new(p.into(), d.into())
    }

    #[test]
    fn rejects_singular_and_ragged() {
        let err = Basis::from_integer_rows(&[vec![1, 2], vec![2, 4]], "t").unwrap_err();
        assert!(matches!(err, Error::SingularBasis { rank: 1, n: 2 }));
        assert!(Basis::from_integer_rows(&[vec![1, 2], vec![2]], "t").is_err());
        assert!(Basis::new(vec![], "t").is_err());
    }

    #[test]
    fn dual_of_identity_and_diagonal() {
        let id = Basis::identity(3);
        assert_eq!(dual_basis(&id).rows(), id.rows());
        let d = Basis::from_integer_rows(&[vec![2, 0], vec![0, 3]], "diag").unwrap();
        let dual = dual_basis(&d);
        assert_eq!(dual.rows()[0], vec![q(1, 2), q(0, 1)]);
        assert_eq!(dual.rows()[1], vec![q(0, 1), q(1, 3)]);
    }

    #[test]
    fn dual_rows_have_integer_products_with_primal_rows() {
        let b = random_basis(3, &BasisStyle::UniformInteger { bound: 5 }, 11).unwrap();
        let d = dual_basis(&b);
        for (i, di) in d.rows().iter().enumerate() {
            for (j, bj) in b.rows().iter().enumerate() {
                let ip = di.iter().zip(bj).fold(Rational::zero(), |a, (x, y)| a + x * y);
                assert!(rational::is_integer(&ip));
                assert_eq!(ip, if i == j { Rational::one() } else { Rational::zero() });
            }
        }
    }

    #[test]
    fn random_basis_styles() {
        let s = random_basis(2, &BasisStyle::ScaledIdentity { scale: 3 }, 0).unwrap();
        assert_eq!(s.rows(), Basis::from_integer_rows(&[vec![3, 0], vec![0, 3]], "").unwrap().rows());

        let a = random_basis(3, &BasisStyle::UniformInteger { bound: 5 }, 7).unwrap();
        let b = random_basis(3, &BasisStyle::UniformInteger { bound: 5 }, 7).unwrap();
        assert_eq!(a, b);
        assert!(!a.determinant().is_zero());
        assert!(a.rows().iter().flatten().all(|v| rational::abs(v) <= rational::int(5)));

        let k = random_basis(4, &BasisStyle::Knapsack { modulus_bits: 12 }, 3).unwrap();
        let det = k.determinant();
        assert!(det >= rational::int(1 << 11) && det < rational::int(1 << 12));
    }

    #[test]
    fn embeddings_and_membership() {
        let b = Basis::new(vec![vec![q(1, 2), q(0, 1)], vec![q(1, 3), q(2, 1)]], "rat").unwrap();
        let v = b.vector(vec![3, -1]).unwrap();
        assert!((v.embedding[0] - (1.5 - 1.0 / 3.0)).abs() < 1e-15);
        assert!((v.embedding[1] + 2.0).abs() < 1e-15);
        let z = Basis::identity(2);
        assert_eq!(z.contains_exact(&[3.0, -4.0]).unwrap(), Some(vec![3, -4]));
        assert_eq!(z.contains_exact(&[3.5, -4.0]).unwrap(), None);
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = Basis::identity(2);
        let b = a.scaled(&rational::int(2)).unwrap();
        assert_eq!(a.hash(), Basis::identity(2).hash());
        assert_ne!(a.hash(), b.hash());
    }
}
