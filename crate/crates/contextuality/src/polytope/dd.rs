//! Double description method over exact rationals.
//!
//! Computes the extreme rays of a pointed polyhedral cone
//! `{ y : R y >= 0 }` given the constraint rows `R`. Facet enumeration and
//! vertex enumeration are both one homogenization away from this kernel:
//! facets of `conv(V)` are the extreme rays of the cone of valid inequalities
//! `{ (b, -a) : a.v <= b for all v }`, and vertices of `{ x : A x <= b }` are
//! the extreme rays with positive first coordinate of the homogenization
//! cone.
//!
//! Rays are kept as coprime integer vectors so coordinate growth stays tame,
//! and adjacency uses the combinatorial test (no third ray's zero set contains
//! the intersection of the candidates' zero sets).

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DdError {
    #[error("constraint rows span only {rank} of {dim} dimensions; cone is not pointed")]
    NotPointed { rank: usize, dim: usize },
    #[error("no constraints given")]
    Empty,
}

/// Bitset over constraint indices, used for ray zero sets.
#[derive(Clone, Debug, PartialEq, Eq)]
struct ZeroSet(Vec<u64>);

impl ZeroSet {
    fn new(n: usize) -> Self {
        ZeroSet(vec![0; n.div_ceil(64)])
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn intersect(&self, other: &Self) -> Self {
        ZeroSet(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a & b)
                .collect(),
        )
    }
    fn contains_all(&self, other: &Self) -> bool {
        self.0
            .iter()
            .zip(&other.0)
            .all(|(a, b)| a & b == *b)
    }
}

#[derive(Clone, Debug)]
struct Ray {
    v: Vec<BigInt>,
    zeros: ZeroSet,
}

/// Scale a rational vector to a coprime integer vector (direction preserved).
fn integerize(v: &[BigRational]) -> Vec<BigInt> {
    let mut lcm = BigInt::from(1);
    for x in v {
        lcm = lcm.lcm(x.denom());
    }
    let ints: Vec<BigInt> = v.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    reduce(ints)
}

/// Divide out the gcd of an integer vector.
fn reduce(mut v: Vec<BigInt>) -> Vec<BigInt> {
    let mut g = BigInt::zero();
    for x in &v {
        g = g.gcd(x);
    }
    if !g.is_zero() && g != BigInt::from(1) {
        for x in v.iter_mut() {
            *x /= &g;
        }
    }
    v
}

fn dot(a: &[BigRational], b: &[BigInt]) -> BigRational {
    let mut s = BigRational::zero();
    for (x, y) in a.iter().zip(b) {
        s += x * BigRational::from_integer(y.clone());
    }
    s
}

/// Find `dim` rows of `rows` forming an invertible matrix; return their
/// indices and the inverse of that submatrix (its columns seed the ray set).
fn initial_basis(
    rows: &[Vec<BigRational>],
    dim: usize,
) -> Result<(Vec<usize>, Vec<Vec<BigRational>>), DdError> {
    let mut chosen: Vec<usize> = Vec::new();
    let mut reduced: Vec<Vec<BigRational>> = Vec::new();
    let mut pivots: Vec<usize> = Vec::new();
    for (ri, row) in rows.iter().enumerate() {
        if chosen.len() == dim {
            break;
        }
        let mut r = row.clone();
        for (k, &p) in pivots.iter().enumerate() {
            if r[p].is_zero() {
                continue;
            }
            let f = r[p].clone();
            for j in 0..dim {
                let rj = reduced[k][j].clone();
                r[j] -= &f * rj;
            }
        }
        let Some(p) = (0..dim).find(|&j| !r[j].is_zero()) else {
            continue;
        };
        let f = r[p].clone();
        for x in r.iter_mut() {
            *x /= &f;
        }
        reduced.push(r);
        pivots.push(p);
        chosen.push(ri);
    }
    if chosen.len() < dim {
        return Err(DdError::NotPointed {
            rank: chosen.len(),
            dim,
        });
    }
    let a: Vec<Vec<BigRational>> = chosen.iter().map(|&ri| rows[ri].clone()).collect();
    let inv = invert(&a).expect("selected rows are independent");
    Ok((chosen, inv))
}

/// Dense rational matrix inverse; `None` when singular.
fn invert(a: &[Vec<BigRational>]) -> Option<Vec<Vec<BigRational>>> {
    let n = a.len();
    let mut m: Vec<Vec<BigRational>> = a.to_vec();
    let mut inv: Vec<Vec<BigRational>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        BigRational::from_integer(BigInt::from(1))
                    } else {
                        BigRational::zero()
                    }
                })
                .collect()
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        inv.swap(col, piv);
        let f = m[col][col].clone();
        for j in 0..n {
            m[col][j] /= &f;
            inv[col][j] /= &f;
        }
        for r in 0..n {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let f = m[r][col].clone();
            for j in 0..n {
                let (mj, ij) = (m[col][j].clone(), inv[col][j].clone());
                m[r][j] -= &f * mj;
                inv[r][j] -= &f * ij;
            }
        }
    }
    Some(inv)
}

/// Extreme rays of the pointed cone `{ y : rows . y >= 0 }`.
///
/// Output rays are coprime integer vectors, sorted lexicographically for
/// deterministic downstream listings.
pub fn extreme_rays(rows: &[Vec<BigRational>]) -> Result<Vec<Vec<BigInt>>, DdError> {
    if rows.is_empty() {
        return Err(DdError::Empty);
    }
    let dim = rows[0].len();
    let n = rows.len();
    let (chosen, inverse) = initial_basis(rows, dim)?;

    // initial rays: columns of the inverse of the chosen row submatrix
    let mut rays: Vec<Ray> = (0..dim)
        .map(|c| {
            let col: Vec<BigRational> = (0..dim).map(|r| inverse[r][c].clone()).collect();
            let v = integerize(&col);
            let mut zeros = ZeroSet::new(n);
            for (k, &ri) in chosen.iter().enumerate() {
                if k != c {
                    zeros.set(ri);
                }
            }
            Ray { v, zeros }
        })
        .collect();

    for (ri, row) in rows.iter().enumerate() {
        if chosen.contains(&ri) {
            continue;
        }
        let vals: Vec<BigRational> = rays.iter().map(|r| dot(row, &r.v)).collect();
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        let mut zero = Vec::new();
        for (i, s) in vals.iter().enumerate() {
            if s.is_positive() {
                pos.push(i);
            } else if s.is_negative() {
                neg.push(i);
            } else {
                zero.push(i);
            }
        }
        if neg.is_empty() {
            for &i in &zero {
                rays[i].zeros.set(ri);
            }
            continue;
        }
        let mut next: Vec<Ray> = Vec::with_capacity(pos.len() + zero.len());
        for &i in pos.iter().chain(&zero) {
            let mut r = rays[i].clone();
            if vals[i].is_zero() {
                r.zeros.set(ri);
            }
            next.push(r);
        }
        for &p in &pos {
            for &q in &neg {
                let meet = rays[p].zeros.intersect(&rays[q].zeros);
                // combinatorial adjacency: no other ray's zero set contains
                // the intersection
                let adjacent = !rays.iter().enumerate().any(|(k, other)| {
                    k != p && k != q && other.zeros.contains_all(&meet)
                });
                if !adjacent {
                    continue;
                }
                // s_p * ray_q - s_q * ray_p  (positive combination)
                let sp = &vals[p];
                let sq = &vals[q];
                let combo: Vec<BigRational> = rays[q]
                    .v
                    .iter()
                    .zip(&rays[p].v)
                    .map(|(vq, vp)| {
                        sp * BigRational::from_integer(vq.clone())
                            - sq * BigRational::from_integer(vp.clone())
                    })
                    .collect();
                let mut zeros = meet.clone();
                zeros.set(ri);
                next.push(Ray {
                    v: integerize(&combo),
                    zeros,
                });
            }
        }
        rays = next;
    }

    let mut out: Vec<Vec<BigInt>> = rays.into_iter().map(|r| r.v).collect();
    out.sort();
    out.dedup();
    Ok(out)
}
