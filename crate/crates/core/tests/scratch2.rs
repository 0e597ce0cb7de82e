use num_complex::Complex64;
use rmatrix_core::special::FunctionVariant;
use rmatrix_core::tensor::TensorOp;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

// Rebuild the belavin eval by hand (bypassing certification) to study the
// unitarity product structure.
fn belavin_eval(
    n: usize,
    tau: Complex64,
    h: Complex64,
    z: Complex64,
) -> TensorOp {
    use ndarray::Array2;
    use rmatrix_core::tensor::SlotShape;
    use std::f64::consts::PI;
    let variant = FunctionVariant::Elliptic { tau };
    let eps = Complex64::new(0.0, 2.0 * PI / n as f64).exp();
    let mut q_mat = Array2::<Complex64>::zeros((n, n));
    let mut shift = Array2::<Complex64>::zeros((n, n));
    for j in 0..n {
        q_mat[[j, j]] = eps.powu(j as u32);
        shift[[j, (j + 1) % n]] = Complex64::new(1.0, 0.0);
    }
    let matpow = |base: &Array2<Complex64>, k: usize| {
        let mut out = Array2::eye(n);
        for _ in 0..k {
            out = out.dot(base);
        }
        out
    };
    let one_slot = SlotShape::new(vec![n]);
    let mut acc = TensorOp::zeros(SlotShape::new(vec![n, n]));
    for a1 in 0..n {
        for a2 in 0..n {
            let t = matpow(&q_mat, a1).dot(&matpow(&shift, a2));
            let t_inv = matpow(&shift, (n - a2) % n).dot(&matpow(&q_mat, (n - a1) % n));
            let omega = (Complex64::new(a1 as f64, 0.0) + tau * a2 as f64) / n as f64;
            let phase = (Complex64::new(0.0, 2.0 * PI * a2 as f64 / n as f64) * z).exp();
            let coeff = phase * variant.phi(h + omega, z).unwrap();
            let kron = TensorOp::from_matrix(one_slot.clone(), t)
                .kron(&TensorOp::from_matrix(one_slot.clone(), t_inv));
            acc = &acc + &kron.scale(coeff);
        }
    }
    acc
}

#[test]
fn unitarity_structure() {
    let tau = c(0.0, 1.0);
    for n in [2usize, 3] {
        let variant = FunctionVariant::Elliptic { tau };
        println!("=== N = {n}");
        for (h, z) in [
            (c(0.21, 0.06), c(0.33, -0.11)),
            (c(-0.13, 0.09), c(0.12, 0.21)),
            (c(0.31, -0.04), c(-0.23, 0.07)),
        ] {
            let r12 = belavin_eval(n, tau, h, z);
            let r21 = belavin_eval(n, tau, h, -z).adjoint_swap(0, 1);
            let prod = &r12 * &r21;
            // how close to scalar * Id?
            let d00 = prod.entry(0, 0);
            let id = TensorOp::identity(prod.shape().clone());
            let dev = (&prod - &id.scale(d00)).max_abs();
            let wp_h = variant.wp(h).unwrap();
            let wp_z = variant.wp(z).unwrap();
            let coarse = wp_h - wp_z;
            // refined candidate: N^2 wp(N h) - wp(z)
            let refined = Complex64::new((n * n) as f64, 0.0) * variant.wp(h * n as f64).unwrap() - wp_z;
            // sum candidate: sum_a wp(h + omega_a) - wp(z)
            let mut sum_wp = Complex64::default();
            for a1 in 0..n {
                for a2 in 0..n {
                    let omega = (Complex64::new(a1 as f64, 0.0) + tau * a2 as f64) / n as f64;
                    sum_wp += variant.wp(h + omega).unwrap();
                }
            }
            let sum_cand = sum_wp - wp_z;
            println!(
                "h={h:.2} z={z:.2}: offdiag_dev={dev:.2e}  d00={d00:.6}\n   d00-coarse={:.6}  d00-refined={:.6}  d00-sum={:.6}",
                d00 - coarse,
                d00 - refined,
                d00 - sum_cand
            );
        }
    }
}
