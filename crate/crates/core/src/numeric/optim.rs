//! Derivative-free minimizers and bracketed root finders.

#[derive(Debug, Clone)]
pub struct Minimum<T> {
    pub x: T,
    pub fx: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Brent's bounded scalar minimization (golden section plus parabolic steps).
pub fn brent_minimize<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, xtol: f64, max_iter: usize) -> Minimum<f64> {
    let golden = 0.5 * (3.0 - 5f64.sqrt());
    let sqrt_eps = 1.49e-8;
    let (mut a, mut b) = (lo, hi);
    let mut x = a + golden * (b - a);
    let (mut w, mut v) = (x, x);
    let mut fx = f(x);
    let (mut fw, mut fv) = (fx, fx);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    for it in 0..max_iter {
        let xm = 0.5 * (a + b);
        let tol1 = sqrt_eps * x.abs() + xtol / 3.0;
        let tol2 = 2.0 * tol1;
        if (x - xm).abs() <= tol2 - 0.5 * (b - a) {
            return Minimum { x, fx, iterations: it, converged: true };
        }
        let mut golden_step = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                let u = x + d;
                if u - a < tol2 || b - u < tol2 {
                    d = if xm >= x { tol1 } else { -tol1 };
                }
                golden_step = false;
            }
        }
        if golden_step {
            e = if x >= xm { a - x } else { b - x };
            d = golden * e;
        }
        let u = if d.abs() >= tol1 { x + d } else if d > 0.0 { x + tol1 } else { x - tol1 };
        let fu = f(u);
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    Minimum { x, fx, iterations: max_iter, converged: false }
}

/// Nelder–Mead simplex minimization on an unconstrained domain.
///
/// `step` sets the initial simplex edge per coordinate.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    step: &[f64],
    xtol: f64,
    ftol: f64,
    max_iter: usize,
) -> Minimum<Vec<f64>> {
    let n = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() { f64::INFINITY } else { v }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step[i];
        let fx = eval(&x);
        simplex.push((x, fx));
    }
    let centroid = |s: &[(Vec<f64>, f64)]| {
        let mut c = vec![0.0; n];
        for (x, _) in &s[..n] {
            for j in 0..n {
                c[j] += x[j] / n as f64;
            }
        }
        c
    };
    let along = |c: &[f64], x: &[f64], t: f64| -> Vec<f64> {
        c.iter().zip(x).map(|(ci, xi)| ci + t * (xi - ci)).collect()
    };
    for it in 0..max_iter {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].clone();
        let spread_x = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&best.0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let spread_f = simplex[1..].iter().map(|(_, fx)| (fx - best.1).abs()).fold(0.0, f64::max);
        if spread_x <= xtol && spread_f <= ftol {
            return Minimum { x: best.0, fx: best.1, iterations: it, converged: true };
        }
        let c = centroid(&simplex);
        let worst = simplex[n].clone();
        let xr = along(&c, &worst.0, -1.0);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(&c, &worst.0, -2.0);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst.1 {
                let xc = along(&c, &worst.0, -0.5);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = along(&c, &worst.0, 0.5);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < worst.1.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for s in simplex.iter_mut().skip(1) {
                    let xs = along(&x_best, &s.0, 0.5);
                    let fs = eval(&xs);
                    *s = (xs, fs);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, fx) = simplex.swap_remove(0);
    Minimum { x, fx, iterations: max_iter, converged: false }
}

/// Root of an increasing function known to change sign on `[lo, hi]`.
///
/// `f` returns the value and derivative; Newton steps are used while they
/// stay inside the current bracket, bisection otherwise.
pub fn solve_increasing<F: Fn(f64) -> (f64, f64)>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    x0: f64,
    rel_tol: f64,
    max_iter: usize,
) -> Option<f64> {
    let mut x = x0.clamp(lo, hi);
    if x <= lo || x >= hi {
        x = 0.5 * (lo + hi);
    }
    let mut prev_step = hi - lo;
    for _ in 0..max_iter {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return Some(x);
        }
        if !fx.is_finite() {
            return None;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = if dfx > 0.0 && dfx.is_finite() { x - fx / dfx } else { f64::NAN };
        let width = hi - lo;
        let next = if newton > lo && newton < hi && (newton - x).abs() < 0.5 * prev_step {
            newton
        } else if lo > 0.0 && hi / lo > 1e3 {
            // Geometric bisection when the bracket spans decades.
            (lo * hi).sqrt()
        } else if lo == 0.0 && hi < 1e-3 {
            hi * 1e-3
        } else {
            lo + 0.5 * width
        };
        prev_step = (next - x).abs();
        x = next;
        if prev_step <= rel_tol * x.abs() || width <= rel_tol * x.abs().max(f64::MIN_POSITIVE) {
            return Some(x);
        }
    }
    Some(x)
}

/// Plain bisection for an increasing function, to absolute tolerance.
pub fn bisect_increasing<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64, max_iter: usize) -> f64 {
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol {
            return mid;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Maps an unbounded coordinate into `(lo, hi)` and back.
#[derive(Debug, Clone, Copy)]
pub struct BoxTransform {
    pub lo: f64,
    pub hi: f64,
}

impl BoxTransform {
    pub fn to_bounded(&self, z: f64) -> f64 {
        self.lo + (self.hi - self.lo) / (1.0 + (-z).exp())
    }

    pub fn to_free(&self, x: f64) -> f64 {
        let p = ((x - self.lo) / (self.hi - self.lo)).clamp(1e-9, 1.0 - 1e-9);
        (p / (1.0 - p)).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn brent_finds_parabola_vertex() {
        let m = brent_minimize(|x| (x - 1.3).powi(2) + 2.0, -5.0, 5.0, 1e-10, 200);
        assert!(m.converged);
        assert_relative_eq!(m.x, 1.3, epsilon = 1e-7);
    }

    #[test]
    fn brent_respects_bounds() {
        let m = brent_minimize(|x| x, 2.0, 3.0, 1e-9, 200);
        assert!(m.x >= 2.0 && m.x < 2.0 + 1e-6);
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let f = |x: &[f64]| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2);
        let m = nelder_mead(f, &[-1.2, 1.0], &[0.1, 0.1], 1e-10, 1e-14, 5000);
        assert!(m.converged);
        assert_relative_eq!(m.x[0], 1.0, epsilon = 1e-6);
        assert_relative_eq!(m.x[1], 1.0, epsilon = 1e-6);
    }

    #[test]
    fn newton_bisection_hybrid() {
        let r = solve_increasing(|x| (x.powi(3) - 2.0, 3.0 * x * x), 0.0, 2.0, 1.0, 1e-15, 100).unwrap();
        assert_relative_eq!(r, 2f64.cbrt(), epsilon = 1e-14);
        // Tiny root reached through geometric steps.
        let r = solve_increasing(|x| (x - 1e-200, 1.0), 0.0, 1.0, 0.5, 1e-14, 2000).unwrap();
        assert_relative_eq!(r, 1e-200, max_relative = 1e-10);
    }

    #[test]
    fn box_transform_roundtrip() {
        let t = BoxTransform { lo: 2.0, hi: 30.0 };
        for &x in &[2.5, 10.0, 29.0] {
            assert_relative_eq!(t.to_bounded(t.to_free(x)), x, epsilon = 1e-9);
        }
    }
}
