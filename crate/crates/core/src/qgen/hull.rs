//! Affine hull plus bounding box of a finite set of integer points.

use num_integer::Integer;
use num_rational::Ratio;

use crate::term::Term;

type Q = Ratio<i128>;

/// `sum(coeffs[k] * x_k) = rhs` for every equality, and `lo <= x_k <= hi` for
/// every bounded (free) coordinate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hull {
    pub dim: usize,
    pub equalities: Vec<(Vec<i64>, i64)>,
    pub bounds: Vec<(usize, i64, i64)>,
}

/// Reduced row echelon form choosing pivot columns in `order`; returns the
/// nonzero rows and their pivot columns.
fn rref(mut rows: Vec<Vec<Q>>, order: &[usize]) -> (Vec<Vec<Q>>, Vec<usize>) {
    let mut pivots = Vec::new();
    let mut r = 0;
    for &c in order {
        let Some(p) = (r..rows.len()).find(|&k| rows[k][c] != Q::from(0)) else { continue };
        rows.swap(r, p);
        let inv = Q::from(1) / rows[r][c];
        for x in rows[r].iter_mut() {
            *x *= inv;
        }
        for k in 0..rows.len() {
            if k != r && rows[k][c] != Q::from(0) {
                let f = rows[k][c];
                let pivot_row = rows[r].clone();
                for (x, y) in rows[k].iter_mut().zip(pivot_row) {
                    *x -= f * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    (rows, pivots)
}

/// Scale a rational vector to coprime integers with a positive leading entry at `lead`.
fn integerize(v: &[Q], lead: usize) -> Vec<i64> {
    let l = v.iter().fold(1i128, |acc, x| acc.lcm(x.denom()));
    let ints: Vec<i128> = v.iter().map(|x| (x * Q::from(l)).to_integer()).collect();
    let g = ints.iter().fold(0i128, |acc, x| acc.gcd(x)).max(1);
    let sign = if ints[lead] < 0 { -1 } else { 1 };
    ints.iter().map(|x| i64::try_from(sign * x / g).expect("hull coefficient overflow")).collect()
}

/// Affine hull (equalities solved for the highest-index coordinates) conjoined
/// with interval bounds on the remaining coordinates.
pub fn ch(points: &[Vec<i64>]) -> Hull {
    assert!(!points.is_empty(), "hull of no points");
    let dim = points[0].len();
    assert!(points.iter().all(|p| p.len() == dim), "points differ in dimension");
    let p0 = &points[0];
    let diffs: Vec<Vec<Q>> = points[1..].iter().map(|p| p.iter().zip(p0).map(|(a, b)| Q::from((a - b) as i128)).collect()).collect();
    let forward: Vec<usize> = (0..dim).collect();
    let (red, piv) = rref(diffs, &forward);
    // null space basis: one vector per free column
    let mut basis: Vec<Vec<Q>> = Vec::new();
    for f in (0..dim).filter(|c| !piv.contains(c)) {
        let mut v = vec![Q::from(0); dim];
        v[f] = Q::from(1);
        for (row, &pc) in red.iter().zip(&piv) {
            v[pc] = -row[f];
        }
        basis.push(v);
    }
    let backward: Vec<usize> = (0..dim).rev().collect();
    let (eqs, dependent) = rref(basis, &backward);
    let mut equalities = Vec::new();
    for (row, &pc) in eqs.iter().zip(&dependent) {
        let coeffs = integerize(row, pc);
        let rhs = coeffs.iter().zip(p0).map(|(a, x)| a * x).sum();
        equalities.push((coeffs, rhs));
    }
    let mut bounds = Vec::new();
    for k in (0..dim).filter(|k| !dependent.contains(k)) {
        let lo = points.iter().map(|p| p[k]).min().unwrap();
        let hi = points.iter().map(|p| p[k]).max().unwrap();
        bounds.push((k, lo, hi));
    }
    Hull { dim, equalities, bounds }
}

impl Hull {
    pub fn contains(&self, point: &[i64]) -> bool {
        self.equalities.iter().all(|(a, c)| a.iter().zip(point).map(|(x, y)| x * y).sum::<i64>() == *c)
            && self.bounds.iter().all(|(k, lo, hi)| *lo <= point[*k] && point[*k] <= *hi)
    }

    /// The hull as literals over the given Int terms (bounds first, then equalities).
    pub fn literals(&self, vars: &[Term]) -> Vec<Term> {
        assert_eq!(vars.len(), self.dim);
        let mut out = Vec::new();
        for (k, lo, hi) in &self.bounds {
            out.push(Term::le(&Term::int(*lo), &vars[*k]));
            out.push(Term::le(&vars[*k], &Term::int(*hi)));
        }
        for (a, c) in &self.equalities {
            let lhs = Term::add(a.iter().zip(vars).map(|(x, v)| Term::mul(*x, v)));
            out.push(Term::eq(&lhs, &Term::int(*c)));
        }
        out
    }

    pub fn to_term(&self, vars: &[Term]) -> Term {
        Term::and(self.literals(vars))
    }
}
