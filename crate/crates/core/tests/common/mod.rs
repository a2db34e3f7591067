#![allow(dead_code, clippy::excessive_precision)]

use levywave::noise::{sample_path, LevyModel, NoisePath};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let x = h * XGK[j];
        let s = f(c - x) + f(c + x);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (k, err) = gk15(f, a, b);
    if err <= tol || depth == 0 {
        return k;
    }
    let m = 0.5 * (a + b);
    adapt(f, a, m, 0.5 * tol, depth - 1) + adapt(f, m, b, 0.5 * tol, depth - 1)
}

/// Adaptive Gauss-Kronrod integral over `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if a >= b {
        return 0.0;
    }
    adapt(&f, a, b, 1e-14, 50)
}

/// Integral over `[0, b]` after `z = t^m`, which flattens an integrable
/// `z^{1/m - 1}` singularity at the origin.
pub fn integrate_from_origin(f: impl Fn(f64) -> f64, b: f64, m: f64) -> f64 {
    let g = |t: f64| {
        if t > 0.0 {
            f(t.powf(m)) * m * t.powf(m - 1.0)
        } else {
            0.0
        }
    };
    adapt(&g, 0.0, b.powf(1.0 / m), 1e-14, 50)
}

/// Integral over `[a, inf)` through `z = a + t / (1 - t)`.
pub fn integrate_to_infinity(f: impl Fn(f64) -> f64, a: f64) -> f64 {
    let g = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - t;
        f(a + t / s) / (s * s)
    };
    adapt(&g, 0.0, 1.0, 1e-14, 50)
}

/// Closed-form solution of `u'' + kappa u' + lambda u = 0` with
/// `u(0) = u0`, `u'(0) = v0`, returning `(u(t), u'(t))`.
pub fn damped_oscillator(kappa: f64, lambda: f64, u0: f64, v0: f64, t: f64) -> (f64, f64) {
    let g = 0.5 * kappa;
    let disc = g * g - lambda;
    if disc.abs() < 1e-14 {
        let b = v0 + g * u0;
        let e = (-g * t).exp();
        ((u0 + b * t) * e, (b - g * (u0 + b * t)) * e)
    } else if disc < 0.0 {
        let w = (-disc).sqrt();
        let b = (v0 + g * u0) / w;
        let e = (-g * t).exp();
        let (s, c) = (w * t).sin_cos();
        let u = e * (u0 * c + b * s);
        let du = e * (-g * (u0 * c + b * s) + w * (-u0 * s + b * c));
        (u, du)
    } else {
        let r = disc.sqrt();
        let (r1, r2) = (-g + r, -g - r);
        let a1 = (v0 - r2 * u0) / (r1 - r2);
        let a2 = u0 - a1;
        let (e1, e2) = ((r1 * t).exp(), (r2 * t).exp());
        (a1 * e1 + a2 * e2, a1 * r1 * e1 + a2 * r2 * e2)
    }
}

/// Classical RK4 for the same oscillator, used as a second opinion.
pub fn rk4_oscillator(kappa: f64, lambda: f64, u0: f64, v0: f64, t: f64, steps: usize) -> (f64, f64) {
    let h = t / steps as f64;
    let f = |u: f64, v: f64| (v, -lambda * u - kappa * v);
    let (mut u, mut v) = (u0, v0);
    for _ in 0..steps {
        let k1 = f(u, v);
        let k2 = f(u + 0.5 * h * k1.0, v + 0.5 * h * k1.1);
        let k3 = f(u + 0.5 * h * k2.0, v + 0.5 * h * k2.1);
        let k4 = f(u + h * k3.0, v + h * k3.1);
        u += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        v += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    (u, v)
}

/// Density of a one-sided tempered-stable measure on `z > 0`.
pub fn tempered_density(c: f64, alpha: f64, eta: f64) -> impl Fn(f64) -> f64 {
    move |z: f64| {
        if z > 0.0 {
            c * (-eta * z).exp() * z.powf(-1.0 - alpha)
        } else {
            0.0
        }
    }
}

/// The reference configuration: `theta_bar = 0.5`, `theta_under = 0.2`
/// with marks uniform on `|z| <= 17/15` at density 0.75 per side.
pub fn worked_model() -> LevyModel {
    LevyModel::uniform_band(0.0, 17.0 / 15.0, 0.75, true).unwrap()
}

pub fn path(model: &LevyModel, horizon: f64, seed: u64, stream: u64) -> NoisePath {
    sample_path(model, horizon, seed, stream).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
