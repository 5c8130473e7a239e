//! Named algebras.

use num_traits::Zero;

use super::LieAlgebra;
use crate::rational::{int, Rational};

/// One representative per catalog entry (the abelian family at n = 3).
pub const CATALOG_NAMES: [&str; 5] = ["abelian3", "heisenberg3", "a4_8", "affine_line", "bloch_iserles_2"];

/// Looks up a named algebra. Abelian algebras are written `abelian(n)` or
/// `abelianN`.
pub fn catalog(name: &str) -> Option<LieAlgebra> {
    let name = name.trim();
    if let Some(rest) = name.strip_prefix("abelian") {
        let digits = rest.trim_start_matches('(').trim_end_matches(')');
        let n: usize = digits.parse().ok().filter(|&n| n > 0)?;
        return Some(abelian(n));
    }
    match name {
        "heisenberg3" => Some(heisenberg3()),
        "a4_8" => Some(a4_8()),
        "affine_line" => Some(affine_line()),
        "bloch_iserles_2" => Some(bloch_iserles_2()),
        _ => None,
    }
}

fn standard_names(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("w{i}")).collect()
}

fn named(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

pub fn abelian(n: usize) -> LieAlgebra {
    LieAlgebra::abelian_named(standard_names(n))
}

/// `{E1, E3} = E2`.
pub fn heisenberg3() -> LieAlgebra {
    LieAlgebra::from_brackets(standard_names(3), &[(0, 2, 1, int(1))]).expect("static table")
}

/// `{E2, E3} = E1`, `{E2, E4} = E2`, `{E3, E4} = -E3`.
pub fn a4_8() -> LieAlgebra {
    LieAlgebra::from_brackets(standard_names(4), &[(1, 2, 0, int(1)), (1, 3, 1, int(1)), (2, 3, 2, int(-1))]).expect("static table")
}

/// Matrices `[[x, y], [0, 0]]`: `{E_x, E_y} = E_y`.
pub fn affine_line() -> LieAlgebra {
    LieAlgebra::from_brackets(named(&["x", "y"]), &[(0, 1, 1, int(1))]).expect("static table")
}

type Mat2 = [[Rational; 2]; 2];

fn mat(rows: [[i64; 2]; 2]) -> Mat2 {
    rows.map(|r| r.map(int))
}

fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    std::array::from_fn(|i| std::array::from_fn(|j| &a[i][0] * &b[0][j] + &a[i][1] * &b[1][j]))
}

fn matsub(a: &Mat2, b: &Mat2) -> Mat2 {
    std::array::from_fn(|i| std::array::from_fn(|j| &a[i][j] - &b[i][j]))
}

/// Symmetric 2x2 matrices `[[x, y], [y, z]]` with the bracket
/// `{w1, w2} = w1 N w2 - w2 N w1`, `N = [[0, 1], [-1, 0]]`.
///
/// The constants are computed from the matrices here rather than copied from
/// a printed table.
pub fn bloch_iserles_2() -> LieAlgebra {
    let basis = [mat([[1, 0], [0, 0]]), mat([[0, 1], [1, 0]]), mat([[0, 0], [0, 1]])];
    let n_mat = mat([[0, 1], [-1, 0]]);
    let mut brackets = Vec::new();
    for i in 0..3 {
        for j in i + 1..3 {
            let left = matmul(&matmul(&basis[i], &n_mat), &basis[j]);
            let right = matmul(&matmul(&basis[j], &n_mat), &basis[i]);
            let m = matsub(&left, &right);
            debug_assert_eq!(m[0][1], m[1][0], "bracket of symmetric matrices is symmetric");
            let coords = [m[0][0].clone(), m[0][1].clone(), m[1][1].clone()];
            for (k, v) in coords.into_iter().enumerate() {
                if !v.is_zero() {
                    brackets.push((i, j, k, v));
                }
            }
        }
    }
    LieAlgebra::from_brackets(named(&["x", "y", "z"]), &brackets).expect("derived table")
}
