use num_traits::{One, Zero};

use crate::rational::Rational;

/// Solves `a·x = b` exactly. `None` when `a` is singular.
pub(crate) fn solve_dense(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = Rational::one() / &a[col][col];
        for c in col..n {
            a[col][c] = &a[col][c] * &inv;
        }
        b[col] = &b[col] * &inv;
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = a[r][col].clone();
            for c in col..n {
                let d = &factor * &a[col][c];
                a[r][c] -= d;
            }
            let d = &factor * &b[col];
            b[r] -= d;
        }
    }
    Some(b)
}
