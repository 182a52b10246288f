//! Exact rotation of a velocity vector about an axis.

/// Rotates `v` about the direction of `axis` by `angle` (right-handed).
/// A zero axis leaves `v` unchanged.
pub fn rotate_velocity(v: [f64; 3], axis: [f64; 3], angle: f64) -> [f64; 3] {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    if n == 0.0 || angle == 0.0 {
        return v;
    }
    let k = [axis[0] / n, axis[1] / n, axis[2] / n];
    let (s, c) = angle.sin_cos();
    let kv = k[0] * v[0] + k[1] * v[1] + k[2] * v[2];
    let cross = [
        k[1] * v[2] - k[2] * v[1],
        k[2] * v[0] - k[0] * v[2],
        k[0] * v[1] - k[1] * v[0],
    ];
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = v[i] * c + cross[i] * s + k[i] * kv * (1.0 - c);
    }
    out
}

/// Velocity after time `t` under `dv/dt = coef * v x b` with constant `b`.
pub fn gyrate(v: [f64; 3], b: [f64; 3], coef: f64, t: f64) -> [f64; 3] {
    let bn = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
    // v x b = -|b| (b_hat x v): rotation about b_hat by -coef |b| t
    rotate_velocity(v, b, -coef * bn * t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rk4(v: [f64; 3], b: [f64; 3], coef: f64, t: f64, n: usize) -> [f64; 3] {
        let rhs = |v: [f64; 3]| {
            [
                coef * (v[1] * b[2] - v[2] * b[1]),
                coef * (v[2] * b[0] - v[0] * b[2]),
                coef * (v[0] * b[1] - v[1] * b[0]),
            ]
        };
        let h = t / n as f64;
        let mut v = v;
        for _ in 0..n {
            let k1 = rhs(v);
            let a = |k: [f64; 3], s: f64| [v[0] + s * k[0], v[1] + s * k[1], v[2] + s * k[2]];
            let k2 = rhs(a(k1, h / 2.0));
            let k3 = rhs(a(k2, h / 2.0));
            let k4 = rhs(a(k3, h));
            for i in 0..3 {
                v[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        v
    }

    #[test]
    fn quarter_turn_about_z() {
        let r = rotate_velocity([1.0, 0.0, 0.0], [0.0, 0.0, 2.0], std::f64::consts::FRAC_PI_2);
        assert!((r[0]).abs() < 1e-15 && (r[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gyration_matches_ode() {
        let v = [0.3, -1.2, 0.7];
        let b = [0.2, -0.5, 1.1];
        let exact = gyrate(v, b, 1.7, 0.9);
        let num = rk4(v, b, 1.7, 0.9, 2000);
        for i in 0..3 {
            assert!((exact[i] - num[i]).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn preserves_norm_and_axis_component(
            v in prop::array::uniform3(-5.0f64..5.0),
            b in prop::array::uniform3(-3.0f64..3.0),
            ang in -10.0f64..10.0,
        ) {
            let r = rotate_velocity(v, b, ang);
            let n0 = v.iter().map(|x| x * x).sum::<f64>();
            let n1 = r.iter().map(|x| x * x).sum::<f64>();
            prop_assert!((n0 - n1).abs() < 1e-12 * (1.0 + n0));
            let p0: f64 = v.iter().zip(&b).map(|(a, c)| a * c).sum();
            let p1: f64 = r.iter().zip(&b).map(|(a, c)| a * c).sum();
            prop_assert!((p0 - p1).abs() < 1e-11 * (1.0 + p0.abs()));
        }
    }
}
