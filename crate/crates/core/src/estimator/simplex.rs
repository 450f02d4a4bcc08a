//! Nelder-Mead simplex descent.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Offset of each initial vertex from the start point, per coordinate.
    pub initial_step: f64,
    /// Shrink factor towards the best vertex.
    pub shrink: f64,
    pub max_evals: usize,
    /// Convergence threshold on the best-value improvement over a full
    /// cycle of `dim + 1` iterations, and on the spread of vertex values.
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;

fn affine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t (b - a)
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

pub fn minimize<F>(mut f: F, x0: &[f64], opts: &SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut verts: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    verts.push(x0.to_vec());
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += opts.initial_step;
        verts.push(v);
    }
    let mut vals: Vec<f64> = verts.iter().map(|v| eval(v, &mut evals)).collect();

    let mut converged = false;
    let mut iter = 0usize;
    let mut cycle_best = f64::INFINITY;
    while evals < opts.max_evals {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        verts = order.iter().map(|&i| verts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        if iter.is_multiple_of(dim + 1) {
            let spread = vals[dim] - vals[0];
            if cycle_best - vals[0] < opts.tol && spread < opts.tol {
                converged = true;
                break;
            }
            cycle_best = vals[0];
        }
        iter += 1;

        let mut centroid = vec![0.0; dim];
        for v in &verts[..dim] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / dim as f64;
            }
        }
        let worst = verts[dim].clone();
        let xr = affine(&centroid, &worst, -REFLECT);
        let fr = eval(&xr, &mut evals);
        if fr < vals[0] {
            let xe = affine(&centroid, &worst, -EXPAND);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                verts[dim] = xe;
                vals[dim] = fe;
            } else {
                verts[dim] = xr;
                vals[dim] = fr;
            }
            continue;
        }
        if fr < vals[dim - 1] {
            verts[dim] = xr;
            vals[dim] = fr;
            continue;
        }
        let (xc, fc) = if fr < vals[dim] {
            let xc = affine(&centroid, &xr, CONTRACT);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = affine(&centroid, &worst, CONTRACT);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < vals[dim].min(fr) {
            verts[dim] = xc;
            vals[dim] = fc;
            continue;
        }
        let best = verts[0].clone();
        for i in 1..=dim {
            verts[i] = affine(&best, &verts[i], opts.shrink);
            vals[i] = eval(&verts[i], &mut evals);
        }
    }

    let (bi, _) = vals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("simplex is nonempty");
    SimplexResult {
        x: verts[bi].clone(),
        f: vals[bi],
        evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(max_evals: usize) -> SimplexOptions {
        SimplexOptions {
            initial_step: 0.05,
            shrink: 0.5,
            max_evals,
            tol: 1e-14,
        }
    }

    #[test]
    fn minimizes_rosenbrock() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = minimize(rosen, &[-1.2, 1.0], &opts(20_000));
        assert!(r.converged);
        assert!(
            (r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5,
            "{r:?}"
        );
    }

    #[test]
    fn minimizes_a_cone() {
        let cone = |x: &[f64]| x.iter().map(|v| (v - 0.3).powi(2)).sum::<f64>().sqrt();
        let r = minimize(cone, &[0.0; 5], &opts(20_000));
        assert!(r.f < 1e-10, "{r:?}");
    }

    #[test]
    fn respects_budget() {
        let r = minimize(|x: &[f64]| x[0].abs(), &[1.0], &opts(10));
        assert!(r.evals <= 12);
        assert!(!r.converged);
        assert!(r.f <= 1.0);
    }

    #[test]
    fn infinite_regions_are_avoided() {
        let f = |x: &[f64]| {
            if x[0] < 0.0 {
                f64::INFINITY
            } else {
                (x[0] - 0.2).powi(2)
            }
        };
        let r = minimize(f, &[0.5], &opts(2000));
        assert!((r.x[0] - 0.2).abs() < 1e-6);
    }
}
