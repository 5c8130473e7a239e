//! Lie algebras given by rational structure constants, and their cohomology
//! with trivial real coefficients in degrees 1 and 2.
//!
//! Conventions: `{E_i, E_j} = C^k_ij E_k`, indices are zero-based in the API.
//! The differentials are
//!
//! * `(d1 nu)_ij = -nu_l C^l_ij`
//! * `(d2 mu)_ijk = mu_il C^l_jk + mu_jl C^l_ki + mu_kl C^l_ij`
//!
//! so that a 1-cochain is closed iff `nu_l C^l_ij = 0` and `d2 . d1 = 0`.

pub mod catalog;

use std::fmt;

use num_traits::Zero;
use thiserror::Error;

use crate::exactlin::{self, LinearSolution, RatMatrix};
use crate::rational::{self, Rational};

pub use catalog::{catalog, CATALOG_NAMES};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("C^{k}_{i}{j} = {ij} but C^{k}_{j}{i} = {ji}; constants must be antisymmetric", k = .k + 1, i = .i + 1, j = .j + 1)]
    NotAntisymmetric { i: usize, j: usize, k: usize, ij: String, ji: String },
    #[error("Jacobi identity fails for (i, j, k) = ({}, {}, {}) in component {}: cyclic sum is {value}", .i + 1, .j + 1, .k + 1, .m + 1)]
    Jacobi { i: usize, j: usize, k: usize, m: usize, value: String },
    #[error("index {index} out of range 1..{dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("bracket ({i}, {j}) must have i < j")]
    NotIncreasing { i: usize, j: usize },
    #[error("constant C^{k}_{i}{j} given twice")]
    Duplicate { i: usize, j: usize, k: usize },
    #[error("{names} names given for dimension {dim}")]
    NameCount { names: usize, dim: usize },
}

/// A finite-dimensional Lie algebra with a chosen basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LieAlgebra {
    names: Vec<String>,
    /// `c[(k * n + i) * n + j] = C^k_ij`.
    c: Vec<Rational>,
}

impl LieAlgebra {
    /// Abelian algebra with the given basis names.
    pub fn abelian_named(names: Vec<String>) -> Self {
        let n = names.len();
        Self {
            names,
            c: vec![Rational::zero(); n * n * n],
        }
    }

    /// Builds from brackets `(i, j, k, C^k_ij)` with `i < j`, zero-based;
    /// the remaining constants follow by antisymmetry.
    pub fn from_brackets(names: Vec<String>, brackets: &[(usize, usize, usize, Rational)]) -> Result<Self, StructureError> {
        let n = names.len();
        let mut alg = Self::abelian_named(names);
        let mut seen = std::collections::BTreeSet::new();
        for (i, j, k, v) in brackets {
            let (i, j, k) = (*i, *j, *k);
            if let Some(&index) = [i, j, k].iter().find(|&&x| x >= n) {
                return Err(StructureError::IndexOutOfRange { index: index + 1, dim: n });
            }
            if i >= j {
                return Err(StructureError::NotIncreasing { i: i + 1, j: j + 1 });
            }
            if !seen.insert((i, j, k)) {
                return Err(StructureError::Duplicate { i: i + 1, j: j + 1, k: k + 1 });
            }
            *alg.c_mut(k, i, j) = v.clone();
            *alg.c_mut(k, j, i) = -v.clone();
        }
        Ok(alg)
    }

    /// Builds from a full table `table[k][i][j] = C^k_ij` without enforcing
    /// antisymmetry; use [`LieAlgebra::validate`] afterwards.
    pub fn from_table(names: Vec<String>, table: &[Vec<Vec<Rational>>]) -> Result<Self, StructureError> {
        let n = names.len();
        if table.len() != n || table.iter().any(|m| m.len() != n || m.iter().any(|r| r.len() != n)) {
            return Err(StructureError::NameCount { names: n, dim: table.len() });
        }
        let c = table.iter().flatten().flatten().cloned().collect();
        Ok(Self { names, c })
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// `C^k_ij`.
    pub fn c(&self, k: usize, i: usize, j: usize) -> &Rational {
        let n = self.dim();
        &self.c[(k * n + i) * n + j]
    }

    fn c_mut(&mut self, k: usize, i: usize, j: usize) -> &mut Rational {
        let n = self.dim();
        &mut self.c[(k * n + i) * n + j]
    }

    pub fn is_abelian(&self) -> bool {
        self.c.iter().all(Zero::is_zero)
    }

    /// Nonzero constants `(i, j, k, C^k_ij)` with `i < j`.
    pub fn brackets(&self) -> Vec<(usize, usize, usize, Rational)> {
        let n = self.dim();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for k in 0..n {
                    let v = self.c(k, i, j);
                    if !v.is_zero() {
                        out.push((i, j, k, v.clone()));
                    }
                }
            }
        }
        out
    }

    /// Bracket of two coordinate vectors.
    pub fn bracket(&self, a: &[Rational], b: &[Rational]) -> Vec<Rational> {
        let n = self.dim();
        (0..n)
            .map(|k| {
                let mut acc = Rational::zero();
                for i in 0..n {
                    if a[i].is_zero() {
                        continue;
                    }
                    for j in 0..n {
                        acc += &a[i] * &b[j] * self.c(k, i, j);
                    }
                }
                acc
            })
            .collect()
    }

    /// Checks antisymmetry and the Jacobi identity exactly, reporting the
    /// first violation.
    pub fn validate(&self) -> Result<(), StructureError> {
        let n = self.dim();
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    if self.c(k, i, j) != &-self.c(k, j, i) {
                        return Err(StructureError::NotAntisymmetric {
                            i,
                            j,
                            k,
                            ij: rational::format(self.c(k, i, j)),
                            ji: rational::format(self.c(k, j, i)),
                        });
                    }
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    for m in 0..n {
                        let value = self.jacobi_sum(i, j, k, m);
                        if !value.is_zero() {
                            return Err(StructureError::Jacobi {
                                i,
                                j,
                                k,
                                m,
                                value: rational::format(&value),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `sum_cyc C^l_ij C^m_lk` over cyclic permutations of `(i, j, k)`.
    fn jacobi_sum(&self, i: usize, j: usize, k: usize, m: usize) -> Rational {
        let mut acc = Rational::zero();
        for (a, b, c) in [(i, j, k), (j, k, i), (k, i, j)] {
            for l in 0..self.dim() {
                acc += self.c(l, a, b) * self.c(m, l, c);
            }
        }
        acc
    }

    pub fn d1(&self, nu: &Cochain1) -> Cochain2 {
        let n = self.dim();
        let mut out = Cochain2::zero(n);
        for i in 0..n {
            for j in i + 1..n {
                let mut acc = Rational::zero();
                for l in 0..n {
                    acc -= &nu.0[l] * self.c(l, i, j);
                }
                out.set(i, j, acc);
            }
        }
        out
    }

    pub fn d2(&self, mu: &Cochain2) -> Cochain3 {
        let n = self.dim();
        let mut out = Cochain3::zero(n);
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let mut acc = Rational::zero();
                    for l in 0..n {
                        acc += mu.get(i, l) * self.c(l, j, k);
                        acc += mu.get(j, l) * self.c(l, k, i);
                        acc += mu.get(k, l) * self.c(l, i, j);
                    }
                    out.set(i, j, k, acc);
                }
            }
        }
        out
    }

    /// Matrix of `nu -> nu_l C^l_ij`, rows indexed by pairs `i < j`.
    fn contraction_matrix(&self) -> RatMatrix {
        let n = self.dim();
        let mut m = RatMatrix::zeros(0, n);
        for (i, j) in pairs(n) {
            m.push_row((0..n).map(|l| self.c(l, i, j).clone()).collect());
        }
        m
    }

    /// Matrix of `d2` acting on the independent components `mu_ij`, `i < j`.
    fn d2_matrix(&self) -> RatMatrix {
        let n = self.dim();
        let basis = pairs(n);
        let mut m = RatMatrix::zeros(0, basis.len());
        let images: Vec<Cochain3> = basis
            .iter()
            .map(|&(a, b)| {
                let mut mu = Cochain2::zero(n);
                mu.set(a, b, Rational::from_integer(1.into()));
                self.d2(&mu)
            })
            .collect();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    m.push_row(images.iter().map(|img| img.get(i, j, k).clone()).collect());
                }
            }
        }
        m
    }

    /// `(dim H^1, dim H^2)`, computed by exact ranks.
    pub fn cohomology_dims(&self) -> (usize, usize) {
        let n = self.dim();
        let rank_d1 = self.contraction_matrix().rank();
        let npairs = n * n.saturating_sub(1) / 2;
        let ker_d2 = npairs - self.d2_matrix().rank();
        (n - rank_d1, ker_d2 - rank_d1)
    }

    /// Solves `theta_k C^k_ij = mu_ij` for all `i < j`.
    pub fn solve_coboundary(&self, mu: &Cochain2) -> Result<LinearSolution, NotCoboundary> {
        let rhs: Vec<Rational> = pairs(self.dim()).into_iter().map(|(i, j)| mu.get(i, j).clone()).collect();
        exactlin::solve(&self.contraction_matrix(), &rhs).map_err(|_| NotCoboundary)
    }

    /// The doubled algebra on `e_1..e_n, W_1..W_n` with
    /// `[e_i, e_j] = C^k_ij e_k`, `[e_i, W_j] = C^k_ij W_k`, `[W_i, W_j] = 0`.
    pub fn doubled(&self) -> LieAlgebra {
        let n = self.dim();
        let names = self
            .names
            .iter()
            .map(|s| format!("e_{s}"))
            .chain(self.names.iter().map(|s| format!("W_{s}")))
            .collect();
        let mut out = Self::abelian_named(names);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let v = self.c(k, i, j).clone();
                    if v.is_zero() {
                        continue;
                    }
                    *out.c_mut(k, i, j) = v.clone();
                    *out.c_mut(n + k, i, n + j) = v.clone();
                    *out.c_mut(n + k, n + j, i) = -v;
                }
            }
        }
        out
    }
}

impl fmt::Display for LieAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let br = self.brackets();
        if br.is_empty() {
            return write!(f, "abelian, basis {}", self.names.join(", "));
        }
        let mut first = true;
        let n = self.dim();
        for i in 0..n {
            for j in i + 1..n {
                let terms: Vec<String> = br
                    .iter()
                    .filter(|(a, b, _, _)| (*a, *b) == (i, j))
                    .map(|(_, _, k, v)| format!("{}*{}", rational::format(v), self.names[*k]))
                    .collect();
                if terms.is_empty() {
                    continue;
                }
                if !first {
                    write!(f, ", ")?;
                }
                first = false;
                write!(f, "{{{}, {}}} = {}", self.names[i], self.names[j], terms.join(" + "))?;
            }
        }
        Ok(())
    }
}

/// All pairs `i < j` below `n`, in lexicographic order.
pub fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("2-cochain is not a coboundary")]
pub struct NotCoboundary;

/// Linear form `nu` on the algebra.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cochain1(pub Vec<Rational>);

impl Cochain1 {
    pub fn zero(n: usize) -> Self {
        Self(vec![Rational::zero(); n])
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }
}

/// Skew bilinear form `mu`; setting `mu_ij` also sets `mu_ji = -mu_ij`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cochain2 {
    n: usize,
    data: Vec<Rational>,
}

impl Cochain2 {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            data: vec![Rational::zero(); n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Rational) {
        self.data[j * self.n + i] = -value.clone();
        self.data[i * self.n + j] = value;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    /// Components `mu_ij` with `i < j`.
    pub fn upper(&self) -> Vec<((usize, usize), Rational)> {
        pairs(self.n).into_iter().map(|(i, j)| ((i, j), self.get(i, j).clone())).collect()
    }
}

/// Alternating 3-form, stored for `i < j < k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cochain3 {
    n: usize,
    data: Vec<Rational>,
}

impl Cochain3 {
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            data: vec![Rational::zero(); n * n * n],
        }
    }

    /// Component for arbitrary indices, using total antisymmetry.
    pub fn get(&self, i: usize, j: usize, k: usize) -> Rational {
        let mut idx = [i, j, k];
        let mut sign = 1;
        for a in 0..3 {
            for b in 0..2 - a {
                if idx[b] > idx[b + 1] {
                    idx.swap(b, b + 1);
                    sign = -sign;
                }
            }
        }
        if idx[0] == idx[1] || idx[1] == idx[2] {
            return Rational::zero();
        }
        let v = &self.data[(idx[0] * self.n + idx[1]) * self.n + idx[2]];
        if sign > 0 {
            v.clone()
        } else {
            -v.clone()
        }
    }

    fn set(&mut self, i: usize, j: usize, k: usize, value: Rational) {
        self.data[(i * self.n + j) * self.n + k] = value;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};
    use proptest::prelude::*;

    fn names(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("w{i}")).collect()
    }

    #[test]
    fn catalog_algebras_validate() {
        for name in CATALOG_NAMES {
            let alg = catalog(name).unwrap();
            assert_eq!(alg.validate(), Ok(()), "{name}");
        }
    }

    #[test]
    fn inconsistent_antisymmetry_is_rejected() {
        // {E1,E2} = E1 + E2 but {E2,E1} = E1
        let mut t = vec![vec![vec![int(0); 2]; 2]; 2];
        t[0][0][1] = int(1);
        t[1][0][1] = int(1);
        t[0][1][0] = int(1);
        let alg = LieAlgebra::from_table(names(2), &t).unwrap();
        assert!(matches!(alg.validate(), Err(StructureError::NotAntisymmetric { .. })));
    }

    #[test]
    fn jacobi_violation_is_reported() {
        // {E1,E2}=E3, {E2,E3}=E1, {E3,E1}=E3: the cyclic sum is -E1
        let alg = LieAlgebra::from_brackets(names(3), &[(0, 1, 2, int(1)), (1, 2, 0, int(1)), (0, 2, 2, int(-1))]).unwrap();
        assert!(matches!(alg.validate(), Err(StructureError::Jacobi { i: 0, j: 1, k: 2, .. })));
    }

    #[test]
    fn bracket_input_errors() {
        assert!(matches!(
            LieAlgebra::from_brackets(names(2), &[(1, 0, 0, int(1))]),
            Err(StructureError::NotIncreasing { .. })
        ));
        assert!(matches!(
            LieAlgebra::from_brackets(names(2), &[(0, 1, 2, int(1))]),
            Err(StructureError::IndexOutOfRange { index: 3, dim: 2 })
        ));
    }

    #[test]
    fn d1_examples() {
        let h = catalog("heisenberg3").unwrap();
        let d = h.d1(&Cochain1(vec![int(0), int(1), int(0)]));
        assert_eq!(d.get(0, 2), &int(-1));
        assert_eq!(d.get(2, 0), &int(1));
        assert_eq!(d.get(0, 1), &int(0));
        assert_eq!(d.get(1, 2), &int(0));

        let a = catalog("affine_line").unwrap();
        assert_eq!(a.d1(&Cochain1(vec![int(0), int(1)])).get(0, 1), &int(-1));

        let ab = catalog("abelian3").unwrap();
        assert!(ab.d1(&Cochain1(vec![int(4), int(-1), frac(1, 2)])).is_zero());
    }

    #[test]
    fn a48_mu_is_cocycle() {
        let a = catalog("a4_8").unwrap();
        let mut mu = Cochain2::zero(4);
        mu.set(1, 2, int(-1));
        assert!(a.d2(&mu).is_zero());
    }

    #[test]
    fn cohomology_examples() {
        assert_eq!(catalog("abelian3").unwrap().cohomology_dims(), (3, 3));
        assert_eq!(catalog("heisenberg3").unwrap().cohomology_dims(), (2, 2));
        assert_eq!(catalog("affine_line").unwrap().cohomology_dims(), (1, 0));
    }

    #[test]
    fn coboundary_examples() {
        let a = catalog("a4_8").unwrap();
        let mut mu = Cochain2::zero(4);
        mu.set(1, 2, int(-1));
        let sol = a.solve_coboundary(&mu).unwrap();
        assert_eq!(sol.particular, vec![int(-1), int(0), int(0), int(0)]);
        assert_eq!(sol.free, vec![3]);

        let zero = a.solve_coboundary(&Cochain2::zero(4)).unwrap();
        assert!(zero.particular.iter().all(Zero::is_zero));

        let h = catalog("heisenberg3").unwrap();
        let mut mu = Cochain2::zero(3);
        mu.set(0, 1, int(1));
        assert_eq!(h.solve_coboundary(&mu), Err(NotCoboundary));
    }

    #[test]
    fn doubled_tables() {
        let h = catalog("heisenberg3").unwrap().doubled();
        assert_eq!(h.validate(), Ok(()));
        // [e1, W3] = W2
        assert_eq!(h.c(3 + 1, 0, 3 + 2), &int(1));
        assert!((0..6).all(|k| h.c(k, 3, 5).is_zero()));
        let a = catalog("affine_line").unwrap().doubled();
        assert_eq!(a.c(1, 0, 1), &int(1));
        assert!(catalog("abelian3").unwrap().doubled().is_abelian());
    }

    fn cochain1(n: usize) -> impl Strategy<Value = Cochain1> {
        prop::collection::vec((-5i64..6, 1i64..4), n).prop_map(|v| Cochain1(v.into_iter().map(|(a, b)| frac(a, b)).collect()))
    }

    proptest! {
        #[test]
        fn d2_after_d1_vanishes(idx in 0usize..CATALOG_NAMES.len(), nu in cochain1(4)) {
            let alg = catalog(CATALOG_NAMES[idx]).unwrap();
            let nu = Cochain1(nu.0[..alg.dim()].to_vec());
            prop_assert!(alg.d2(&alg.d1(&nu)).is_zero());
        }

        #[test]
        fn coboundary_of_d1_is_solvable(idx in 0usize..CATALOG_NAMES.len(), nu in cochain1(4)) {
            let alg = catalog(CATALOG_NAMES[idx]).unwrap();
            let nu = Cochain1(nu.0[..alg.dim()].to_vec());
            let mu = alg.d1(&nu);
            let theta = Cochain1(alg.solve_coboundary(&mu).unwrap().particular);
            // theta_k C^k_ij = mu_ij = -nu_k C^k_ij
            let mut neg = alg.d1(&nu);
            for ((i, j), v) in mu.upper() {
                neg.set(i, j, -v);
            }
            prop_assert_eq!(alg.d1(&theta), neg);
        }

        #[test]
        fn abelian_cohomology(n in 1usize..6) {
            let alg = catalog::abelian(n);
            prop_assert_eq!(alg.cohomology_dims(), (n, n * (n - 1) / 2));
        }
    }
}
