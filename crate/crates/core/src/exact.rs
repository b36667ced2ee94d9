//! Exact rank by fraction-free (Bareiss) elimination.
//!
//! Works over any integral domain where the Bareiss divisions are exact:
//! `BigInt` for 0/1 design matrices and `Complex<BigInt>` (Gaussian integers)
//! for channel matrices with rational coefficients.

use num_bigint::BigInt;
use num_complex::Complex;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Num, One, Zero};

/// Rank of `rows` (row-major, all rows the same length).
///
/// Every intermediate entry is a minor of the input, so each division by the
/// previous pivot is exact.
pub fn bareiss_rank<T: Clone + Num>(mut rows: Vec<Vec<T>>) -> usize {
    let nrows = rows.len();
    if nrows == 0 {
        return 0;
    }
    let ncols = rows[0].len();
    let mut prev = T::one();
    let mut rank = 0;
    for col in 0..ncols {
        if rank == nrows {
            break;
        }
        let Some(p) = (rank..nrows).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank][col].clone();
        for r in rank + 1..nrows {
            let lead = rows[r][col].clone();
            for c in col + 1..ncols {
                let v = pivot.clone() * rows[r][c].clone() - lead.clone() * rows[rank][c].clone();
                rows[r][c] = v / prev.clone();
            }
            rows[r][col] = T::zero();
        }
        prev = pivot;
        rank += 1;
    }
    rank
}

/// Rank of a 0/1 matrix given as `u8` rows.
pub fn binary_rank(rows: &[Vec<u8>]) -> usize {
    bareiss_rank(
        rows.iter()
            .map(|r| r.iter().map(|&b| BigInt::from(b)).collect())
            .collect(),
    )
}

/// A complex number with rational real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRational {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussRational {
    pub fn zero() -> Self {
        GaussRational { re: BigRational::zero(), im: BigRational::zero() }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn to_f64(&self) -> num_complex::Complex64 {
        use num_traits::ToPrimitive;
        num_complex::Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }
}

/// Rank over Q(i) of a matrix of Gaussian rationals.
///
/// Each row is scaled by the lcm of its denominators (rank preserving) to
/// get a Gaussian-integer matrix, which is then eliminated fraction-free.
pub fn gauss_rational_rank(rows: &[Vec<GaussRational>]) -> usize {
    let int_rows = rows
        .iter()
        .map(|row| {
            let lcm = row.iter().fold(BigInt::one(), |acc, z| {
                acc.lcm(z.re.denom()).lcm(z.im.denom())
            });
            row.iter()
                .map(|z| {
                    let re = z.re.numer() * (&lcm / z.re.denom());
                    let im = z.im.numer() * (&lcm / z.im.denom());
                    Complex::new(re, im)
                })
                .collect::<Vec<Complex<BigInt>>>()
        })
        .collect();
    bareiss_rank(int_rows)
}
