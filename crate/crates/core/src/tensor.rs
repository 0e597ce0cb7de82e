//! Dense complex operator algebra over ordered tensor slots.
//!
//! A [`TensorOp`] stores the full matrix of an operator acting on a tensor
//! product of finite-dimensional slots, with the row-major multi-index
//! convention: the leftmost slot is the most significant digit. Under this
//! convention fusing two adjacent slots of dimensions M and N into one slot
//! of dimension M*N is a pure relabeling with joint index `i * N + a`
//! (M-part most significant), which is the factorization used by the
//! composite GL(NM) construction.
//!
//! Structural misuse (mismatched shapes, out-of-range slots) panics; these
//! are programmer errors, mirroring how dense linear-algebra crates treat
//! dimension mismatches.

use ndarray::Array2;
use num_complex::Complex64;

/// Upper bound on the total dimension of a slot shape; keeps dense matrices
/// within a sane memory budget (a 4096^2 complex matrix is 256 MiB).
pub const MAX_TOTAL_DIM: usize = 4096;

/// Ordered list of per-slot dimensions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlotShape {
    dims: Vec<usize>,
}

impl SlotShape {
    pub fn new(dims: impl Into<Vec<usize>>) -> Self {
        let dims = dims.into();
        assert!(!dims.is_empty(), "shape needs at least one slot");
        assert!(dims.iter().all(|&d| d > 0), "slot dimensions must be positive");
        let total: usize = dims.iter().product();
        assert!(
            total <= MAX_TOTAL_DIM,
            "total dimension {total} exceeds the {MAX_TOTAL_DIM} budget"
        );
        SlotShape { dims }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn num_slots(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self, slot: usize) -> usize {
        self.dims[slot]
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    /// Row-major strides: `strides[s]` is the index weight of slot `s`.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.dims.len()];
        for s in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[s] = strides[s + 1] * self.dims[s + 1];
        }
        strides
    }

    /// Decompose a flat index into per-slot digits.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0usize; self.dims.len()];
        for s in (0..self.dims.len()).rev() {
            out[s] = index % self.dims[s];
            index /= self.dims[s];
        }
        out
    }
}

/// Dense complex operator on an ordered list of tensor slots.
#[derive(Clone, Debug)]
pub struct TensorOp {
    shape: SlotShape,
    mat: Array2<Complex64>,
}

impl TensorOp {
    pub fn from_matrix(shape: SlotShape, mat: Array2<Complex64>) -> Self {
        let t = shape.total();
        assert_eq!(mat.dim(), (t, t), "matrix size inconsistent with shape");
        TensorOp { shape, mat }
    }

    pub fn zeros(shape: SlotShape) -> Self {
        let t = shape.total();
        TensorOp {
            shape,
            mat: Array2::zeros((t, t)),
        }
    }

    pub fn identity(shape: SlotShape) -> Self {
        let t = shape.total();
        let mut mat = Array2::zeros((t, t));
        for k in 0..t {
            mat[[k, k]] = Complex64::new(1.0, 0.0);
        }
        TensorOp { shape, mat }
    }

    /// Single-slot matrix unit e_{ij} (0-based) on a slot of dimension `dim`.
    pub fn basis_unit(dim: usize, i: usize, j: usize) -> Self {
        assert!(i < dim && j < dim, "basis index ({i}, {j}) out of range for dim {dim}");
        let mut op = TensorOp::zeros(SlotShape::new(vec![dim]));
        op.mat[[i, j]] = Complex64::new(1.0, 0.0);
        op
    }

    /// The operator exchanging slots `a` and `b` of `shape` (equal dims).
    pub fn permutation(a: usize, b: usize, shape: &SlotShape) -> Self {
        assert_ne!(a, b, "permutation slots must differ");
        assert_eq!(
            shape.dim(a),
            shape.dim(b),
            "permutation requires equal slot dimensions"
        );
        let t = shape.total();
        let mut mat = Array2::zeros((t, t));
        for col in 0..t {
            let mut digits = shape.digits(col);
            digits.swap(a, b);
            let strides = shape.strides();
            let row: usize = digits
                .iter()
                .zip(strides.iter())
                .map(|(d, s)| d * s)
                .sum();
            mat[[row, col]] = Complex64::new(1.0, 0.0);
        }
        TensorOp {
            shape: shape.clone(),
            mat,
        }
    }

    pub fn shape(&self) -> &SlotShape {
        &self.shape
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.mat
    }

    pub fn matrix_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.mat
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.mat[[row, col]]
    }

    /// Kronecker-extend this operator into `shape`, acting on the listed
    /// slot positions (this operator's slot m goes to position `slots[m]`)
    /// and as identity elsewhere.
    pub fn embed(&self, slots: &[usize], shape: &SlotShape) -> TensorOp {
        assert_eq!(
            slots.len(),
            self.shape.num_slots(),
            "embed: one target position per operator slot"
        );
        for (m, &s) in slots.iter().enumerate() {
            assert!(s < shape.num_slots(), "embed: slot {s} out of range");
            assert_eq!(
                self.shape.dim(m),
                shape.dim(s),
                "embed: dimension mismatch at position {s}"
            );
        }
        let mut seen = vec![false; shape.num_slots()];
        for &s in slots {
            assert!(!seen[s], "embed: repeated target position {s}");
            seen[s] = true;
        }

        let strides = shape.strides();
        let own_total = self.shape.total();

        // Flat-offset table for this operator's multi-indices placed at the
        // target positions.
        let mut offsets = vec![0usize; own_total];
        for (flat, off) in offsets.iter_mut().enumerate() {
            let digits = self.shape.digits(flat);
            *off = digits
                .iter()
                .zip(slots.iter())
                .map(|(d, &s)| d * strides[s])
                .sum();
        }

        let comp: Vec<usize> = (0..shape.num_slots()).filter(|s| !seen[*s]).collect();
        let comp_dims: Vec<usize> = comp.iter().map(|&s| shape.dim(s)).collect();
        let comp_total: usize = comp_dims.iter().product();

        let mut out = TensorOp::zeros(shape.clone());
        let mut comp_digits = vec![0usize; comp.len()];
        for _ in 0..comp_total {
            let base: usize = comp_digits
                .iter()
                .zip(comp.iter())
                .map(|(d, &s)| d * strides[s])
                .sum();
            for r in 0..own_total {
                for cidx in 0..own_total {
                    let v = self.mat[[r, cidx]];
                    if v != Complex64::default() {
                        out.mat[[base + offsets[r], base + offsets[cidx]]] = v;
                    }
                }
            }
            // Odometer increment over the complement slots.
            for d in (0..comp_digits.len()).rev() {
                comp_digits[d] += 1;
                if comp_digits[d] < comp_dims[d] {
                    break;
                }
                comp_digits[d] = 0;
            }
        }
        out
    }

    /// Tensor product, concatenating slot lists (self's slots first).
    pub fn kron(&self, other: &TensorOp) -> TensorOp {
        let mut dims = self.shape.dims().to_vec();
        dims.extend_from_slice(other.shape.dims());
        let (ta, tb) = (self.shape.total(), other.shape.total());
        let mut mat = Array2::zeros((ta * tb, ta * tb));
        for r1 in 0..ta {
            for c1 in 0..ta {
                let a = self.mat[[r1, c1]];
                if a == Complex64::default() {
                    continue;
                }
                for r2 in 0..tb {
                    for c2 in 0..tb {
                        let b = other.mat[[r2, c2]];
                        if b != Complex64::default() {
                            mat[[r1 * tb + r2, c1 * tb + c2]] = a * b;
                        }
                    }
                }
            }
        }
        TensorOp::from_matrix(SlotShape::new(dims), mat)
    }

    /// Conjugation by the permutation of slots `a` and `b`: P A P.
    pub fn adjoint_swap(&self, a: usize, b: usize) -> TensorOp {
        let p = TensorOp::permutation(a, b, &self.shape);
        &(&p * self) * &p
    }

    /// Move slots to new positions: slot m of `self` becomes slot `dest[m]`
    /// of the result.
    pub fn reorder_slots(&self, dest: &[usize]) -> TensorOp {
        assert_eq!(dest.len(), self.shape.num_slots());
        let mut dims = vec![0usize; dest.len()];
        for (m, &d) in dest.iter().enumerate() {
            dims[d] = self.shape.dim(m);
        }
        self.embed(dest, &SlotShape::new(dims))
    }

    /// Fuse adjacent slots: `groups[g]` consecutive slots merge into one slot
    /// whose dimension is their product. Entries are unchanged (row-major
    /// relabeling).
    pub fn fuse_slots(&self, groups: &[usize]) -> TensorOp {
        assert_eq!(
            groups.iter().sum::<usize>(),
            self.shape.num_slots(),
            "fuse groups must cover all slots"
        );
        let mut dims = Vec::with_capacity(groups.len());
        let mut at = 0usize;
        for &g in groups {
            assert!(g > 0);
            dims.push(self.shape.dims()[at..at + g].iter().product());
            at += g;
        }
        TensorOp {
            shape: SlotShape::new(dims),
            mat: self.mat.clone(),
        }
    }

    /// Drop all dimension-1 slots (keeping one if every slot is trivial).
    pub fn squeeze(&self) -> TensorOp {
        let mut dims: Vec<usize> = self
            .shape
            .dims()
            .iter()
            .copied()
            .filter(|&d| d > 1)
            .collect();
        if dims.is_empty() {
            dims.push(1);
        }
        TensorOp {
            shape: SlotShape::new(dims),
            mat: self.mat.clone(),
        }
    }

    /// Submatrix obtained by fixing row digits and column digits on a common
    /// subset of slots; the result acts on the remaining slots. `rows` and
    /// `cols` list `(slot, digit)` pairs over the same slot set.
    pub fn fixed_block(&self, rows: &[(usize, usize)], cols: &[(usize, usize)]) -> TensorOp {
        let mut row_fix = vec![None; self.shape.num_slots()];
        let mut col_fix = vec![None; self.shape.num_slots()];
        for &(s, d) in rows {
            assert!(d < self.shape.dim(s), "fixed_block: digit out of range");
            row_fix[s] = Some(d);
        }
        for &(s, d) in cols {
            assert!(d < self.shape.dim(s), "fixed_block: digit out of range");
            col_fix[s] = Some(d);
        }
        assert!(
            row_fix
                .iter()
                .zip(col_fix.iter())
                .all(|(r, c)| r.is_some() == c.is_some()),
            "fixed_block: rows and cols must fix the same slots"
        );

        let keep: Vec<usize> = (0..self.shape.num_slots())
            .filter(|&s| row_fix[s].is_none())
            .collect();
        let keep_dims: Vec<usize> = keep.iter().map(|&s| self.shape.dim(s)).collect();
        let sub = SlotShape::new(if keep_dims.is_empty() {
            vec![1]
        } else {
            keep_dims
        });
        let strides = self.shape.strides();
        let sub_total = sub.total();
        let mut mat = Array2::zeros((sub_total, sub_total));

        let full_index = |fix: &[Option<usize>], free_digits: &[usize]| -> usize {
            let mut idx = 0usize;
            let mut fd = free_digits.iter();
            for s in 0..self.shape.num_slots() {
                let d = match fix[s] {
                    Some(d) => d,
                    None => *fd.next().unwrap(),
                };
                idx += d * strides[s];
            }
            idx
        };

        for r in 0..sub_total {
            let rd = sub.digits(r);
            let rfull = full_index(&row_fix, &rd);
            for cidx in 0..sub_total {
                let cd = sub.digits(cidx);
                let cfull = full_index(&col_fix, &cd);
                mat[[r, cidx]] = self.mat[[rfull, cfull]];
            }
        }
        TensorOp::from_matrix(sub, mat)
    }

    pub fn scale(&self, factor: Complex64) -> TensorOp {
        TensorOp {
            shape: self.shape.clone(),
            mat: self.mat.mapv(|v| v * factor),
        }
    }

    /// Entrywise supremum norm; the residual metric of all checkers.
    pub fn max_abs(&self) -> f64 {
        self.mat
            .iter()
            .map(|v| v.norm_sqr())
            .fold(0.0f64, f64::max)
            .sqrt()
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.diag().sum()
    }
}

/// A B - B A.
pub fn commutator(a: &TensorOp, b: &TensorOp) -> TensorOp {
    &(a * b) - &(b * a)
}

impl std::ops::Mul for &TensorOp {
    type Output = TensorOp;
    fn mul(self, rhs: &TensorOp) -> TensorOp {
        assert_eq!(self.shape, rhs.shape, "operator product: shape mismatch");
        TensorOp {
            shape: self.shape.clone(),
            mat: self.mat.dot(&rhs.mat),
        }
    }
}

impl std::ops::Add for &TensorOp {
    type Output = TensorOp;
    fn add(self, rhs: &TensorOp) -> TensorOp {
        assert_eq!(self.shape, rhs.shape, "operator sum: shape mismatch");
        TensorOp {
            shape: self.shape.clone(),
            mat: &self.mat + &rhs.mat,
        }
    }
}

impl std::ops::Sub for &TensorOp {
    type Output = TensorOp;
    fn sub(self, rhs: &TensorOp) -> TensorOp {
        assert_eq!(self.shape, rhs.shape, "operator difference: shape mismatch");
        TensorOp {
            shape: self.shape.clone(),
            mat: &self.mat - &rhs.mat,
        }
    }
}

impl std::ops::Neg for &TensorOp {
    type Output = TensorOp;
    fn neg(self) -> TensorOp {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

impl std::ops::Mul<Complex64> for &TensorOp {
    type Output = TensorOp;
    fn mul(self, rhs: Complex64) -> TensorOp {
        self.scale(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c1() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn basis_unit_products() {
        let e11 = TensorOp::basis_unit(2, 0, 0);
        let e12 = TensorOp::basis_unit(2, 0, 1);
        assert_eq!((&e11 * &e12).matrix(), e12.matrix());
        assert!((&e12 * &e12).max_abs() < 1e-300);
        let sum = (0..3).fold(TensorOp::zeros(SlotShape::new(vec![3])), |acc, i| {
            &acc + &TensorOp::basis_unit(3, i, i)
        });
        assert_eq!(sum.matrix(), TensorOp::identity(SlotShape::new(vec![3])).matrix());
    }

    #[test]
    #[should_panic(expected = "out of range")]
    fn basis_unit_rejects_bad_index() {
        TensorOp::basis_unit(2, 2, 0);
    }

    #[test]
    fn permutation_squares_to_identity_and_has_trace_n() {
        for n in [2usize, 3] {
            let shape = SlotShape::new(vec![n, n]);
            let p = TensorOp::permutation(0, 1, &shape);
            let p2 = &p * &p;
            assert_eq!(p2.matrix(), TensorOp::identity(shape.clone()).matrix());
            let tr = p.trace();
            assert!((tr - Complex64::new(n as f64, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn permutation_swaps_product_vectors() {
        // P (u (x) v) = v (x) u, checked entrywise through matrix action.
        let shape = SlotShape::new(vec![2, 2]);
        let p = TensorOp::permutation(0, 1, &shape);
        let u = [c1() * 2.0, c1() * 3.0];
        let v = [c1() * 5.0, c1() * 7.0];
        let uv: Vec<Complex64> = (0..4).map(|k| u[k / 2] * v[k % 2]).collect();
        let vu: Vec<Complex64> = (0..4).map(|k| v[k / 2] * u[k % 2]).collect();
        for r in 0..4 {
            let got: Complex64 = (0..4).map(|k| p.entry(r, k) * uv[k]).sum();
            assert!((got - vu[r]).norm() < 1e-14);
        }
    }

    #[test]
    fn embed_places_slots_in_order() {
        // embed(A (x) B, [2, 0]) puts B at slot 0, identity at slot 1, A at slot 2.
        let a = TensorOp::basis_unit(2, 0, 1);
        let b = TensorOp::basis_unit(3, 1, 2);
        let ab = a.kron(&b);
        let shape = SlotShape::new(vec![3, 2, 2]);
        let direct = ab.embed(&[2, 0], &shape);
        let expect = b
            .embed(&[0], &shape)
            .matrix()
            .dot(a.embed(&[2], &shape).matrix());
        assert_eq!(direct.matrix(), &expect);
    }

    #[test]
    fn embed_matches_kronecker_expansion() {
        // Two-slot operator into slots (0, 2) of a 3-slot space equals the
        // explicit sum of e_ij (x) 1 (x) e_kl terms.
        let n = 2usize;
        let shape = SlotShape::new(vec![n, n, n]);
        let mut r = TensorOp::zeros(SlotShape::new(vec![n, n]));
        let vals = [0.3, -1.2, 0.7, 2.1];
        let mut k = 0usize;
        for i in 0..n * n {
            for j in 0..n * n {
                r = &r
                    + &TensorOp::from_matrix(SlotShape::new(vec![n, n]), {
                        let mut m = Array2::zeros((n * n, n * n));
                        m[[i, j]] = Complex64::new(vals[k % 4] + i as f64, j as f64);
                        k += 1;
                        m
                    });
            }
        }
        let embedded = r.embed(&[0, 2], &shape);
        // Oracle: brute-force entry formula with an explicit middle delta.
        let t = shape.total();
        for row in 0..t {
            for col in 0..t {
                let rd = shape.digits(row);
                let cd = shape.digits(col);
                let expect = if rd[1] == cd[1] {
                    r.entry(rd[0] * n + rd[2], cd[0] * n + cd[2])
                } else {
                    Complex64::default()
                };
                assert_eq!(embedded.entry(row, col), expect);
            }
        }
    }

    #[test]
    fn adjoint_swap_fixes_permutation() {
        let shape = SlotShape::new(vec![2, 2]);
        let p = TensorOp::permutation(0, 1, &shape);
        assert_eq!(p.adjoint_swap(0, 1).matrix(), p.matrix());
    }

    #[test]
    fn compose_with_identity_and_max_abs() {
        let shape = SlotShape::new(vec![2, 3]);
        let id = TensorOp::identity(shape.clone());
        let a = TensorOp::basis_unit(2, 0, 1).embed(&[0], &shape);
        assert_eq!((&id * &a).matrix(), a.matrix());
        assert_eq!((&a - &a).max_abs(), 0.0);
    }

    #[test]
    fn fuse_is_a_relabeling() {
        let a = TensorOp::basis_unit(2, 0, 1);
        let b = TensorOp::basis_unit(3, 2, 1);
        let ab = a.kron(&b);
        let fused = ab.fuse_slots(&[2]);
        assert_eq!(fused.shape().dims(), &[6]);
        assert_eq!(fused.matrix(), ab.matrix());
        // Joint index i*N + a with the left factor most significant.
        assert!((fused.entry(0 * 3 + 2, 1 * 3 + 1) - c1()).norm() < 1e-15);
    }

    #[test]
    fn fixed_block_extracts_components() {
        let e01 = TensorOp::basis_unit(2, 0, 1);
        let x = TensorOp::basis_unit(3, 1, 2);
        let op = e01.kron(&x);
        let block = op.fixed_block(&[(0, 0)], &[(0, 1)]);
        assert_eq!(block.matrix(), x.matrix());
        let zero_block = op.fixed_block(&[(0, 1)], &[(0, 1)]);
        assert!(zero_block.max_abs() < 1e-300);
    }

    #[test]
    fn reorder_slots_moves_factors() {
        let a = TensorOp::basis_unit(2, 0, 1);
        let b = TensorOp::basis_unit(3, 1, 0);
        let ab = a.kron(&b);
        let ba = b.kron(&a);
        assert_eq!(ab.reorder_slots(&[1, 0]).matrix(), ba.matrix());
    }
}
