//! Independent oracles shared by the integration and acceptance targets.
#![allow(dead_code)]

/// `Σ p log2(p / q)` over a flat array, with `0 log 0 = 0`.
pub fn kl(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(&a, &b)| {
            if a <= 0.0 {
                0.0
            } else if b <= 0.0 {
                f64::INFINITY
            } else {
                a * (a / b).log2()
            }
        })
        .sum()
}

pub fn h(p: &[f64]) -> f64 {
    p.iter().filter(|&&a| a > 0.0).map(|&a| -a * a.log2()).sum()
}

/// Liu–Hughes exponent for binary X, Y, Z with |U| = 1, by exhaustive search
/// over `V_XY(0,0)` and `V_{Z|XY}` on a lattice of the given step.
///
/// `w[x][y]` is `W(1 | x, y)`; `px`, `py` are `P(X = 0)`, `P(Y = 0)` and must
/// sit on the lattice so that the transportation polytope has lattice points.
pub fn lh_grid_binary(w: [[f64; 2]; 2], px: f64, py: f64, r1: f64, r2: f64, step: f64) -> f64 {
    let k = (1.0 / step).round() as usize;
    let lattice: Vec<f64> = (0..=k).map(|i| i as f64 * step).collect();
    let lo = (px + py - 1.0).max(0.0);
    let hi = px.min(py);
    let mut best = f64::INFINITY;
    for &t in lattice.iter().filter(|&&t| t >= lo - 1e-12 && t <= hi + 1e-12) {
        // V_XY cells (0,0), (0,1), (1,0), (1,1)
        let vxy = [t, px - t, py - t, 1.0 - px - py + t];
        if vxy.iter().any(|&v| v < -1e-12) {
            continue;
        }
        let vxy = vxy.map(|v| v.max(0.0));
        let pxy = [px * py, px * (1.0 - py), (1.0 - px) * py, (1.0 - px) * (1.0 - py)];
        for &a in &lattice {
            for &b in &lattice {
                for &c in &lattice {
                    for &d in &lattice {
                        let zrow = [a, b, c, d];
                        let mut v = [0.0f64; 8];
                        for cell in 0..4 {
                            v[cell * 2 + 1] = vxy[cell] * zrow[cell];
                            v[cell * 2] = vxy[cell] * (1.0 - zrow[cell]);
                        }
                        let cond: f64 = (0..4)
                            .map(|cell| {
                                let (x, y) = (cell / 2, cell % 2);
                                vxy[cell] * kl(&[1.0 - zrow[cell], zrow[cell]], &[1.0 - w[x][y], w[x][y]])
                            })
                            .sum();
                        let d = cond + kl(&vxy, &pxy);
                        if !d.is_finite() || d >= best {
                            continue;
                        }
                        let e = d + lh_brackets(&v, r1, r2);
                        if e < best {
                            best = e;
                        }
                    }
                }
            }
        }
    }
    best
}

/// `min` over the three brackets of `|T - R|^+`, for a law on (X, Y, Z)
/// stored at index `4x + 2y + z`.
fn lh_brackets(v: &[f64; 8], r1: f64, r2: f64) -> f64 {
    let marg = |keep: &dyn Fn(usize) -> usize, size: usize| {
        let mut m = vec![0.0; size];
        for (i, &p) in v.iter().enumerate() {
            m[keep(i)] += p;
        }
        m
    };
    let hx = h(&marg(&|i| i / 4, 2));
    let hy = h(&marg(&|i| (i / 2) % 2, 2));
    let hz = h(&marg(&|i| i % 2, 2));
    let hyz = h(&marg(&|i| i % 4, 4));
    let hxz = h(&marg(&|i| (i / 4) * 2 + i % 2, 4));
    let hxyz = h(v);
    let ix = hx + hyz - hxyz;
    let iy = hy + hxz - hxyz;
    let ixy = hx + hy + hz - hxyz;
    (ix - r1).max(0.0).min((iy - r2).max(0.0)).min((ixy - r1 - r2).max(0.0))
}
