//! Dense third-order tensors, Tucker decomposition (HOSVD-initialised HOOI)
//! and the energy-ordered angular components of a view stack.
//!
//! Tensors are stored with the first index fastest. The mode-`k` unfolding
//! places mode `k` on the rows and flattens the remaining two indices in
//! increasing mode order with the smaller mode fastest:
//!
//! * mode 1: column `i2 + K2·i3`
//! * mode 2: column `i1 + K1·i3`
//! * mode 3: column `i1 + K1·i2`
//!
//! so row `j` of the mode-3 unfolding is frontal slice `j` flattened
//! column-major.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::Array2;

use crate::error::{Error, Result};
use crate::viewstack::ViewStack;

/// Stopping tolerance on the change of fit between HOOI sweeps.
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITERS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    One,
    Two,
    Three,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::One, Mode::Two, Mode::Three];

    pub fn index(self) -> usize {
        match self {
            Mode::One => 0,
            Mode::Two => 1,
            Mode::Three => 2,
        }
    }
}

/// Dense `K1 × K2 × K3` real tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    dims: [usize; 3],
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dims: [usize; 3]) -> Self {
        assert!(
            dims.iter().all(|&d| d > 0),
            "tensor dims must be positive: {dims:?}"
        );
        Self {
            dims,
            data: vec![0.0; dims[0] * dims[1] * dims[2]],
        }
    }

    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(dims);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    t.data[i + dims[0] * (j + dims[1] * k)] = f(i, j, k);
                }
            }
        }
        t
    }

    /// Wraps raw first-index-fastest data.
    pub fn from_vec(dims: [usize; 3], data: Vec<f64>) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) || data.len() != dims[0] * dims[1] * dims[2] {
            return Err(Error::Shape(format!(
                "tensor dims {dims:?} do not match {} elements",
                data.len()
            )));
        }
        Ok(Self { dims, data })
    }

    /// Stacks equally-sized images as frontal slices (`X × Y × V`).
    pub fn from_slices(slices: &[Array2<f64>]) -> Result<Self> {
        let first = slices
            .first()
            .ok_or_else(|| Error::Shape("cannot build a tensor from zero slices".into()))?;
        let (x_len, y_len) = first.dim();
        let mut data = Vec::with_capacity(x_len * y_len * slices.len());
        for s in slices {
            if s.dim() != (x_len, y_len) {
                return Err(Error::Shape(format!(
                    "slice shape {:?} differs from {:?}",
                    s.dim(),
                    (x_len, y_len)
                )));
            }
            for y in 0..y_len {
                for x in 0..x_len {
                    data.push(s[[x, y]]);
                }
            }
        }
        Self::from_vec([x_len, y_len, slices.len()], data)
    }

    /// Frontal slice `k` as an `K1 × K2` image.
    pub fn slice3(&self, k: usize) -> Array2<f64> {
        let [k1, k2, _] = self.dims;
        let off = k * k1 * k2;
        Array2::from_shape_fn((k1, k2), |(i, j)| self.data[off + i + k1 * j])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[i + self.dims[0] * (j + self.dims[1] * k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let d = self.dims;
        self.data[i + d[0] * (j + d[1] * k)] = v;
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `‖self − other‖_F`; panics on shape mismatch.
    pub fn distance(&self, other: &Tensor3) -> f64 {
        assert_eq!(self.dims, other.dims, "tensor shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Squared Frobenius norm of each frontal slice.
    pub fn slice_energies(&self) -> Vec<f64> {
        let n = self.dims[0] * self.dims[1];
        self.data
            .chunks(n)
            .map(|c| c.iter().map(|v| v * v).sum())
            .collect()
    }
}

/// Column index of element `(i1, i2, i3)` in the mode unfolding.
#[inline]
fn unfold_col(dims: [usize; 3], idx: [usize; 3], mode: Mode) -> usize {
    match mode {
        Mode::One => idx[1] + dims[1] * idx[2],
        Mode::Two => idx[0] + dims[0] * idx[2],
        Mode::Three => idx[0] + dims[0] * idx[1],
    }
}

/// Mode-`k` unfolding (`K_k × ∏_{m≠k} K_m`).
pub fn unfold(t: &Tensor3, mode: Mode) -> DMatrix<f64> {
    let d = t.dims;
    let m = mode.index();
    let cols = d[0] * d[1] * d[2] / d[m];
    let mut out = DMatrix::zeros(d[m], cols);
    for k in 0..d[2] {
        for j in 0..d[1] {
            for i in 0..d[0] {
                let idx = [i, j, k];
                out[(idx[m], unfold_col(d, idx, mode))] = t.get(i, j, k);
            }
        }
    }
    out
}

/// Inverse of [`unfold`] for a tensor of shape `dims`.
pub fn fold(mat: &DMatrix<f64>, mode: Mode, dims: [usize; 3]) -> Result<Tensor3> {
    let m = mode.index();
    let cols = dims[0] * dims[1] * dims[2] / dims[m].max(1);
    if mat.nrows() != dims[m] || mat.ncols() != cols || dims.iter().any(|&d| d == 0) {
        return Err(Error::Shape(format!(
            "cannot fold a {}x{} matrix into {dims:?} along mode {}",
            mat.nrows(),
            mat.ncols(),
            m + 1
        )));
    }
    let mut t = Tensor3::zeros(dims);
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                let idx = [i, j, k];
                t.set(i, j, k, mat[(idx[m], unfold_col(dims, idx, mode))]);
            }
        }
    }
    Ok(t)
}

/// Mode-`k` product `t ×_k m` with `m` of shape `J × K_k`.
pub fn mode_product(t: &Tensor3, m: &DMatrix<f64>, mode: Mode) -> Result<Tensor3> {
    let k = mode.index();
    if m.ncols() != t.dims[k] {
        return Err(Error::Shape(format!(
            "mode-{} product needs {} matrix columns, got {}x{}",
            k + 1,
            t.dims[k],
            m.nrows(),
            m.ncols()
        )));
    }
    let mut dims = t.dims;
    dims[k] = m.nrows();
    if mode == Mode::Three {
        // Mode-3 unfolding is the transpose of the column-major data buffer.
        let flat = DMatrix::from_column_slice(t.dims[0] * t.dims[1], t.dims[2], &t.data);
        let prod = flat * m.transpose();
        return Tensor3::from_vec(dims, prod.as_slice().to_vec());
    }
    fold(&(m * unfold(t, mode)), mode, dims)
}

/// Flips columns so each has a nonnegative entry sum. Columns whose sum is
/// negligible use the sign of their largest-magnitude entry instead.
fn fix_column_signs(u: &mut DMatrix<f64>) {
    for mut col in u.column_iter_mut() {
        let sum: f64 = col.iter().sum();
        let scale: f64 = col.iter().map(|v| v.abs()).sum();
        let negative = if sum.abs() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            sum < 0.0
        } else {
            col.iter()
                .copied()
                .fold((0.0f64, 0.0f64), |(best, sign), v| {
                    if v.abs() > best {
                        (v.abs(), v)
                    } else {
                        (best, sign)
                    }
                })
                .1
                < 0.0
        };
        if negative {
            col.neg_mut();
        }
    }
}

/// Eigenvectors of a symmetric matrix ordered by eigenvalue descending.
fn sorted_eigen(gram: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = gram.nrows();
    if gram.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite entries in Gram matrix".into()));
    }
    let eig = SymmetricEigen::try_new(gram, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("symmetric eigendecomposition did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

/// Leading `r` left singular vectors of `a`, via the eigenvectors of `a·aᵀ`
/// so a full orthonormal basis is available even when `a` is wide-short.
fn leading_left_vectors(a: &DMatrix<f64>, r: usize) -> Result<DMatrix<f64>> {
    let (_, v) = sorted_eigen(a * a.transpose())?;
    Ok(v.columns(0, r).into_owned())
}

#[derive(Debug, Clone)]
pub struct TuckerFactors {
    /// `U1 (K1×R1)`, `U2 (K2×R2)`, `U3 (K3×R3)`, each with orthonormal columns.
    pub factors: [DMatrix<f64>; 3],
    pub core: Tensor3,
    /// Fit `1 − ‖t − t̂‖/‖t‖` after HOSVD and after each HOOI sweep.
    pub fits: Vec<f64>,
    pub sweeps: usize,
}

impl TuckerFactors {
    pub fn reconstruct(&self) -> Tensor3 {
        let [u1, u2, u3] = &self.factors;
        let t = mode_product(&self.core, u1, Mode::One).expect("factor shape");
        let t = mode_product(&t, u2, Mode::Two).expect("factor shape");
        mode_product(&t, u3, Mode::Three).expect("factor shape")
    }
}

fn project_core(t: &Tensor3, f: &[DMatrix<f64>; 3]) -> Result<Tensor3> {
    let c = mode_product(t, &f[0].transpose(), Mode::One)?;
    let c = mode_product(&c, &f[1].transpose(), Mode::Two)?;
    mode_product(&c, &f[2].transpose(), Mode::Three)
}

/// Projects `t` onto the factors of every mode except `skip`.
fn project_except(t: &Tensor3, f: &[DMatrix<f64>; 3], skip: Mode) -> Result<Tensor3> {
    let mut y = t.clone();
    for mode in Mode::ALL {
        if mode != skip {
            y = mode_product(&y, &f[mode.index()].transpose(), mode)?;
        }
    }
    Ok(y)
}

/// Tucker decomposition by alternating least squares: HOSVD initialisation
/// followed by HOOI sweeps until the fit changes by less than `tol`.
pub fn tucker_als(
    t: &Tensor3,
    ranks: [usize; 3],
    max_iters: usize,
    tol: f64,
) -> Result<TuckerFactors> {
    for (k, (&r, &d)) in ranks.iter().zip(&t.dims).enumerate() {
        if r == 0 || r > d {
            return Err(Error::InvalidArgument(format!(
                "rank R{} = {r} must lie in 1..={d}",
                k + 1
            )));
        }
    }
    let norm = t.frobenius_norm();
    if norm == 0.0 {
        let factors = [0, 1, 2].map(|k| DMatrix::identity(t.dims[k], ranks[k]));
        return Ok(TuckerFactors {
            factors,
            core: Tensor3::zeros(ranks),
            fits: Vec::new(),
            sweeps: 0,
        });
    }

    let mut factors = [
        leading_left_vectors(&unfold(t, Mode::One), ranks[0])?,
        leading_left_vectors(&unfold(t, Mode::Two), ranks[1])?,
        leading_left_vectors(&unfold(t, Mode::Three), ranks[2])?,
    ];
    let fit_of = |f: &[DMatrix<f64>; 3]| -> Result<(Tensor3, f64)> {
        let core = project_core(t, f)?;
        let tf = TuckerFactors {
            factors: f.clone(),
            core,
            fits: Vec::new(),
            sweeps: 0,
        };
        let fit = 1.0 - t.distance(&tf.reconstruct()) / norm;
        Ok((tf.core, fit))
    };
    let (_, fit0) = fit_of(&factors)?;
    let mut fits = vec![fit0];
    let mut sweeps = 0;
    while sweeps < max_iters {
        for mode in Mode::ALL {
            let y = project_except(t, &factors, mode)?;
            factors[mode.index()] = leading_left_vectors(&unfold(&y, mode), ranks[mode.index()])?;
        }
        sweeps += 1;
        let (_, fit) = fit_of(&factors)?;
        let prev = *fits.last().expect("fit history");
        fits.push(fit);
        if (fit - prev).abs() < tol {
            break;
        }
    }
    for f in factors.iter_mut() {
        fix_column_signs(f);
    }
    let core = project_core(t, &factors)?;
    Ok(TuckerFactors {
        factors,
        core,
        fits,
        sweeps,
    })
}

/// Angular decomposition components of a view stack.
#[derive(Debug, Clone)]
pub struct ComponentStack {
    /// `X × Y × R3`, slices in descending energy order.
    pub components: Tensor3,
    /// Squared Frobenius norm of each slice.
    pub energies: Vec<f64>,
    /// `V × R3` angular factor, columns aligned with `components`.
    pub angular_factor: DMatrix<f64>,
}

impl ComponentStack {
    pub fn first(&self) -> Array2<f64> {
        self.components.slice3(0)
    }

    /// Energy of each component over the total; all zero for a zero stack.
    pub fn energy_fractions(&self) -> Vec<f64> {
        let total: f64 = self.energies.iter().sum();
        if total == 0.0 {
            return vec![0.0; self.energies.len()];
        }
        self.energies.iter().map(|e| e / total).collect()
    }

    /// Permutes slices into descending-energy order (stable).
    fn sorted(self) -> Self {
        let mut order: Vec<usize> = (0..self.energies.len()).collect();
        order.sort_by(|&a, &b| {
            self.energies[b]
                .total_cmp(&self.energies[a])
                .then(a.cmp(&b))
        });
        if order.iter().enumerate().all(|(i, &o)| i == o) {
            return self;
        }
        let [x, y, r] = self.components.dims();
        let n = x * y;
        let mut data = Vec::with_capacity(n * r);
        for &o in &order {
            data.extend_from_slice(&self.components.data()[o * n..(o + 1) * n]);
        }
        let af = &self.angular_factor;
        Self {
            components: Tensor3::from_vec([x, y, r], data).expect("same size"),
            energies: order.iter().map(|&o| self.energies[o]).collect(),
            angular_factor: DMatrix::from_fn(af.nrows(), r, |i, j| af[(i, order[j])]),
        }
    }
}

/// Components `𝒞 = 𝒢 ×₁ U1 ×₂ U2` at full rank, computed as the mode-3
/// projection `C ×₃ U3ᵀ` with `U3` from the `V × V` Gram matrix of the
/// mode-3 unfolding.
pub fn angular_components(stack: &ViewStack) -> Result<ComponentStack> {
    let t = &stack.data;
    let [x, y, v] = t.dims();
    if v == 1 {
        return Ok(ComponentStack {
            energies: vec![t.norm_sq()],
            components: t.clone(),
            angular_factor: DMatrix::from_element(1, 1, 1.0),
        });
    }
    let flat = DMatrix::from_column_slice(x * y, v, t.data());
    let (_, mut u3) = sorted_eigen(flat.tr_mul(&flat))?;
    fix_column_signs(&mut u3);
    let comps = flat * &u3;
    let components = Tensor3::from_vec([x, y, v], comps.as_slice().to_vec())?;
    let energies = components.slice_energies();
    Ok(ComponentStack {
        components,
        energies,
        angular_factor: u3,
    }
    .sorted())
}

/// The same components through a full-rank Tucker decomposition
/// (`𝒢 ×₁ U1 ×₂ U2`). Slower; kept as an independent route.
pub fn angular_components_via_tucker(stack: &ViewStack) -> Result<ComponentStack> {
    let t = &stack.data;
    let dims = t.dims();
    let tf = tucker_als(t, dims, DEFAULT_MAX_ITERS, DEFAULT_TOL)?;
    let c = mode_product(&tf.core, &tf.factors[0], Mode::One)?;
    let components = mode_product(&c, &tf.factors[1], Mode::Two)?;
    let energies = components.slice_energies();
    let [_, _, u3] = tf.factors;
    Ok(ComponentStack {
        components,
        energies,
        angular_factor: u3,
    }
    .sorted())
}

/// The highest-energy angular component `M` of a view stack.
pub fn first_principal_component(stack: &ViewStack) -> Result<Array2<f64>> {
    Ok(angular_components(stack)?.first())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_tensor(dims: [usize; 3], seed: u64) -> Tensor3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor3::from_fn(dims, |_, _, _| rng.random_range(-1.0..1.0))
    }

    fn max_abs_diff(a: &Tensor3, b: &Tensor3) -> f64 {
        a.data()
            .iter()
            .zip(b.data())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    fn orthonormality_error(u: &DMatrix<f64>) -> f64 {
        let g = u.tr_mul(u);
        let id = DMatrix::<f64>::identity(g.nrows(), g.ncols());
        (g - id).amax()
    }

    #[test]
    fn unfold_mode3_rows_are_slices() {
        let t = Tensor3::from_fn([2, 2, 2], |i, j, k| (i + 2 * j + 4 * k) as f64);
        let m = unfold(&t, Mode::Three);
        assert_eq!(m.shape(), (2, 4));
        for k in 0..2 {
            let row: Vec<f64> = m.row(k).iter().copied().collect();
            let expect: Vec<f64> = (0..4).map(|c| (c + 4 * k) as f64).collect();
            assert_eq!(row, expect);
        }
        assert_eq!(
            unfold(&Tensor3::zeros([2, 3, 4]), Mode::Two),
            DMatrix::zeros(3, 8)
        );
    }

    #[test]
    fn fold_inverts_unfold() {
        let t = random_tensor([3, 4, 5], 1);
        for mode in Mode::ALL {
            assert_eq!(fold(&unfold(&t, mode), mode, t.dims()).unwrap(), t);
        }
        assert!(fold(&DMatrix::zeros(2, 2), Mode::One, [3, 2, 2]).is_err());
    }

    #[test]
    fn mode_product_identity_and_mean() {
        let t = random_tensor([3, 4, 5], 2);
        for mode in Mode::ALL {
            let id = DMatrix::identity(t.dims()[mode.index()], t.dims()[mode.index()]);
            assert_eq!(mode_product(&t, &id, mode).unwrap(), t);
        }
        let mean = mode_product(&t, &DMatrix::from_element(1, 5, 0.2), Mode::Three).unwrap();
        assert_eq!(mean.dims(), [3, 4, 1]);
        for i in 0..3 {
            for j in 0..4 {
                let m: f64 = (0..5).map(|k| t.get(i, j, k)).sum::<f64>() / 5.0;
                assert!((mean.get(i, j, 0) - m).abs() < 1e-14);
            }
        }
        assert!(mode_product(&t, &DMatrix::zeros(2, 3), Mode::Three).is_err());
    }

    #[test]
    fn mode_product_matches_triple_loop() {
        let t = random_tensor([3, 3, 3], 3);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mats: Vec<DMatrix<f64>> = (0..3)
            .map(|_| DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0)))
            .collect();
        // Brute force: out[a,b,c] = Σ_ijk t[i,j,k] A[a,i] B[b,j] C[c,k].
        let brute = Tensor3::from_fn([3, 3, 3], |a, b, c| {
            let mut s = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        s += t.get(i, j, k) * mats[0][(a, i)] * mats[1][(b, j)] * mats[2][(c, k)];
                    }
                }
            }
            s
        });
        let orders = [
            [Mode::One, Mode::Two, Mode::Three],
            [Mode::Three, Mode::One, Mode::Two],
            [Mode::Two, Mode::Three, Mode::One],
        ];
        for order in orders {
            let mut out = t.clone();
            for m in order {
                out = mode_product(&out, &mats[m.index()], m).unwrap();
            }
            assert!(max_abs_diff(&out, &brute) < 1e-12);
        }
    }

    #[test]
    fn full_rank_tucker_is_exact() {
        let t = random_tensor([6, 5, 4], 5);
        let tf = tucker_als(&t, [6, 5, 4], DEFAULT_MAX_ITERS, DEFAULT_TOL).unwrap();
        let err = t.distance(&tf.reconstruct()) / t.frobenius_norm();
        assert!(err < 1e-10, "relative error {err}");
        for u in &tf.factors {
            assert!(orthonormality_error(u) < 1e-8);
        }
    }

    #[test]
    fn rank_one_outer_product_recovered() {
        let a = [1.0, -2.0, 0.5, 3.0];
        let b = [0.3, 0.1, -0.7];
        let c = [2.0, 1.0, 1.5, -0.5, 0.25];
        let t = Tensor3::from_fn([4, 3, 5], |i, j, k| a[i] * b[j] * c[k]);
        let tf = tucker_als(&t, [1, 1, 1], DEFAULT_MAX_ITERS, DEFAULT_TOL).unwrap();
        let err = t.distance(&tf.reconstruct()) / t.frobenius_norm();
        assert!(err < 1e-10, "relative error {err}");
        // Factor 1 is a/‖a‖ up to sign.
        let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        let u = &tf.factors[0];
        let dot: f64 = (0..4).map(|i| u[(i, 0)] * a[i] / na).sum();
        assert!((dot.abs() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn higher_rank_fits_better_and_hooi_is_monotone() {
        let t = random_tensor([8, 8, 8], 6);
        let r1 = tucker_als(&t, [1, 1, 1], DEFAULT_MAX_ITERS, DEFAULT_TOL).unwrap();
        let r2 = tucker_als(&t, [2, 2, 2], DEFAULT_MAX_ITERS, DEFAULT_TOL).unwrap();
        assert!(r2.fits.last().unwrap() >= r1.fits.last().unwrap());
        for tf in [&r1, &r2] {
            for w in tf.fits.windows(2) {
                assert!(w[1] >= w[0] - 1e-12, "fit decreased: {:?}", tf.fits);
            }
            for u in &tf.factors {
                assert!(orthonormality_error(u) < 1e-8);
            }
        }
    }

    #[test]
    fn zero_tensor_is_canonical() {
        let tf = tucker_als(&Tensor3::zeros([3, 3, 2]), [2, 2, 2], 10, 1e-6).unwrap();
        assert_eq!(tf.core, Tensor3::zeros([2, 2, 2]));
        assert_eq!(tf.factors[0], DMatrix::identity(3, 2));
        assert!(tucker_als(&Tensor3::zeros([3, 3, 2]), [4, 1, 1], 10, 1e-6).is_err());
    }

    fn stack_of(slices: Vec<Array2<f64>>) -> ViewStack {
        ViewStack::from_views(slices)
    }

    fn random_stack(x: usize, y: usize, v: usize, seed: u64) -> ViewStack {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        stack_of(
            (0..v)
                .map(|_| Array2::from_shape_fn((x, y), |_| rng.random_range(0.0..1.0)))
                .collect(),
        )
    }

    #[test]
    fn identical_views_give_rank_one_components() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let img = Array2::from_shape_fn((12, 10), |_| rng.random_range(0.0..1.0));
        let cs = angular_components(&stack_of(vec![img.clone(); 5])).unwrap();
        assert!((cs.energy_fractions()[0] - 1.0).abs() < 1e-10);
        let pc = cs.first();
        let scale = 5f64.sqrt();
        for (p, i) in pc.iter().zip(img.iter()) {
            assert!((p - scale * i).abs() < 1e-12);
        }
    }

    #[test]
    fn single_view_is_returned_exactly() {
        let s = random_stack(9, 7, 1, 8);
        let pc = first_principal_component(&s).unwrap();
        assert_eq!(pc, s.data.slice3(0));
    }

    #[test]
    fn fast_path_matches_tucker_path() {
        let s = random_stack(16, 16, 5, 9);
        let fast = angular_components(&s).unwrap();
        let general = angular_components_via_tucker(&s).unwrap();
        assert!(max_abs_diff(&fast.components, &general.components) < 1e-8);
        let total = s.data.norm_sq();
        let sum: f64 = fast.energies.iter().sum();
        assert!((sum - total).abs() < 1e-6 * total);
        for w in fast.energies.windows(2) {
            assert!(w[0] >= w[1]);
        }
        for col in fast.angular_factor.column_iter() {
            assert!(col.iter().sum::<f64>() >= 0.0);
        }
    }

    #[test]
    fn deterministic_and_order_reversal_invariant() {
        let s = random_stack(10, 8, 6, 10);
        let a = first_principal_component(&s).unwrap();
        let b = first_principal_component(&s).unwrap();
        assert_eq!(a, b);
        let mut rev: Vec<Array2<f64>> = (0..6).map(|k| s.data.slice3(k)).collect();
        rev.reverse();
        let r = angular_components(&stack_of(rev)).unwrap();
        let f = angular_components(&s).unwrap();
        assert!(max_abs_diff(&r.components, &f.components) < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn fast_and_general_paths_agree(seed in 0u64..10_000, v in 2usize..6, x in 4usize..10) {
            let s = random_stack(x, x + 1, v, seed);
            let fast = angular_components(&s).unwrap();
            let general = angular_components_via_tucker(&s).unwrap();
            prop_assert!(max_abs_diff(&fast.components, &general.components) < 1e-8);
            let total = s.data.norm_sq();
            prop_assert!((fast.energies.iter().sum::<f64>() - total).abs() < 1e-6 * total);
        }
    }
}
