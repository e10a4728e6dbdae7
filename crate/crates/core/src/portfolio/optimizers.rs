//! The in-repo optimizers. Each one loops until the objective reports that
//! the budget is gone (or the run was aborted).

use rand::Rng as _;
use rand_distr::StandardNormal;

use super::{Algorithm, Objective, OptimizerSpec};
use crate::problem::{DOMAIN_HI, DOMAIN_LO};
use crate::seed::Rng;

const WIDTH: f64 = DOMAIN_HI - DOMAIN_LO;

fn uniform_point(rng: &mut Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(DOMAIN_LO..DOMAIN_HI)).collect()
}

fn clamp_into_domain(x: &mut [f64]) {
    for v in x {
        *v = v.clamp(DOMAIN_LO, DOMAIN_HI);
    }
}

pub(super) fn run(spec: &OptimizerSpec, obj: &mut Objective<'_>, rng: &mut Rng) {
    match spec.algorithm {
        Algorithm::RandomSearch => random_search(obj, rng),
        Algorithm::OnePlusOneEs => one_plus_one_es(spec, obj, rng),
        Algorithm::DifferentialEvolution => differential_evolution(spec, obj, rng),
        Algorithm::ParticleSwarm => particle_swarm(spec, obj, rng),
        Algorithm::NelderMead => nelder_mead(spec, obj, rng),
        Algorithm::QuasiNewton => quasi_newton(spec, obj, rng),
    }
}

fn random_search(obj: &mut Objective<'_>, rng: &mut Rng) {
    let d = obj.dim();
    loop {
        let x = uniform_point(rng, d);
        if obj.eval(&x).is_none() {
            return;
        }
    }
}

fn one_plus_one_es(spec: &OptimizerSpec, obj: &mut Objective<'_>, rng: &mut Rng) {
    let d = obj.dim();
    let sigma0 = spec.param("sigma0") * WIDTH;
    let min_sigma = spec.param("min_sigma");
    // success -> exp(1/3), failure -> exp(-1/12): stationary at 1/5 success
    let up = (1.0f64 / 3.0).exp();
    let down = (-1.0f64 / 12.0).exp();
    'restart: loop {
        let mut x = uniform_point(rng, d);
        let Some(mut fx) = obj.eval(&x) else { return };
        let mut sigma = sigma0;
        loop {
            let y: Vec<f64> = x
                .iter()
                .map(|v| v + sigma * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let Some(fy) = obj.eval(&y) else { return };
            if fy <= fx {
                x = y;
                fx = fy;
                sigma *= up;
            } else {
                sigma *= down;
            }
            if sigma < min_sigma || fx == 0.0 {
                continue 'restart;
            }
        }
    }
}

fn differential_evolution(spec: &OptimizerSpec, obj: &mut Objective<'_>, rng: &mut Rng) {
    let d = obj.dim();
    let np = ((spec.param("pop_factor") * d as f64).round() as usize).max(4);
    let f = spec.param("f");
    let cr = spec.param("cr");
    let mut pop = Vec::with_capacity(np);
    let mut fit = Vec::with_capacity(np);
    for _ in 0..np {
        let x = uniform_point(rng, d);
        let Some(fx) = obj.eval(&x) else { return };
        pop.push(x);
        fit.push(fx);
    }
    loop {
        for i in 0..np {
            let mut pick = || loop {
                let r = rng.random_range(0..np);
                if r != i {
                    break r;
                }
            };
            let a = pick();
            let b = loop {
                let r = pick();
                if r != a {
                    break r;
                }
            };
            let c = loop {
                let r = pick();
                if r != a && r != b {
                    break r;
                }
            };
            let jrand = rng.random_range(0..d);
            let mut trial = pop[i].clone();
            for j in 0..d {
                if j == jrand || rng.random::<f64>() < cr {
                    trial[j] = pop[a][j] + f * (pop[b][j] - pop[c][j]);
                }
            }
            clamp_into_domain(&mut trial);
            let Some(ft) = obj.eval(&trial) else { return };
            if ft <= fit[i] {
                pop[i] = trial;
                fit[i] = ft;
            }
        }
    }
}

fn particle_swarm(spec: &OptimizerSpec, obj: &mut Objective<'_>, rng: &mut Rng) {
    let d = obj.dim();
    let np = ((spec.param("pop_factor") * d as f64).round() as usize).max(2);
    let w = spec.param("inertia");
    let c1 = spec.param("c1");
    let c2 = spec.param("c2");
    let vmax = WIDTH;
    let mut pos = Vec::with_capacity(np);
    let mut vel = Vec::with_capacity(np);
    let mut pbest = Vec::with_capacity(np);
    let mut pbest_f = Vec::with_capacity(np);
    let mut g = 0;
    for i in 0..np {
        let x = uniform_point(rng, d);
        let v: Vec<f64> = (0..d)
            .map(|_| rng.random_range(-WIDTH..WIDTH) * 0.5)
            .collect();
        let Some(fx) = obj.eval(&x) else { return };
        pos.push(x.clone());
        vel.push(v);
        pbest.push(x);
        pbest_f.push(fx);
        if fx < pbest_f[g] {
            g = i;
        }
    }
    loop {
        for i in 0..np {
            for j in 0..d {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                let v = w * vel[i][j]
                    + c1 * r1 * (pbest[i][j] - pos[i][j])
                    + c2 * r2 * (pbest[g][j] - pos[i][j]);
                vel[i][j] = v.clamp(-vmax, vmax);
                pos[i][j] += vel[i][j];
            }
            clamp_into_domain(&mut pos[i]);
            let Some(fx) = obj.eval(&pos[i]) else { return };
            if fx <= pbest_f[i] {
                pbest[i] = pos[i].clone();
                pbest_f[i] = fx;
                if fx < pbest_f[g] {
                    g = i;
                }
            }
        }
    }
}

fn nelder_mead(spec: &OptimizerSpec, obj: &mut Objective<'_>, rng: &mut Rng) {
    let d = obj.dim();
    let step = spec.param("initial_step") * WIDTH;
    let tol = spec.param("collapse_tol");
    let (alpha, gamma, rho, shrink) = (1.0, 2.0, 0.5, 0.5);
    'restart: loop {
        let x0 = uniform_point(rng, d);
        let mut simplex = vec![x0.clone()];
        for j in 0..d {
            let mut x = x0.clone();
            // step towards the interior
            x[j] += if x[j] + step <= DOMAIN_HI { step } else { -step };
            simplex.push(x);
        }
        let mut fs = Vec::with_capacity(d + 1);
        for x in &simplex {
            let Some(fx) = obj.eval(x) else { return };
            fs.push(fx);
        }
        loop {
            let mut order: Vec<usize> = (0..=d).collect();
            order.sort_by(|&a, &b| fs[a].total_cmp(&fs[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            fs = order.iter().map(|&i| fs[i]).collect();

            let diameter = simplex[1..]
                .iter()
                .map(|x| crate::stats::euclidean(x, &simplex[0]))
                .fold(0.0, f64::max);
            if diameter < tol || fs[d] - fs[0] <= 0.0 && diameter < tol.sqrt() {
                continue 'restart;
            }

            let centroid: Vec<f64> = (0..d)
                .map(|j| simplex[..d].iter().map(|x| x[j]).sum::<f64>() / d as f64)
                .collect();
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[d])
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };
            let xr = along(alpha);
            let Some(fr) = obj.eval(&xr) else { return };
            if fr < fs[0] {
                let xe = along(gamma);
                let Some(fe) = obj.eval(&xe) else { return };
                if fe < fr {
                    simplex[d] = xe;
                    fs[d] = fe;
                } else {
                    simplex[d] = xr;
                    fs[d] = fr;
                }
            } else if fr < fs[d - 1] {
                simplex[d] = xr;
                fs[d] = fr;
            } else {
                let (xc, fc_ref) = if fr < fs[d] {
                    (along(rho), fr)
                } else {
                    (along(-rho), fs[d])
                };
                let Some(fc) = obj.eval(&xc) else { return };
                if fc < fc_ref {
                    simplex[d] = xc;
                    fs[d] = fc;
                } else {
                    for i in 1..=d {
                        let xi: Vec<f64> = simplex[0]
                            .iter()
                            .zip(&simplex[i])
                            .map(|(b, v)| b + shrink * (v - b))
                            .collect();
                        let Some(fi) = obj.eval(&xi) else { return };
                        simplex[i] = xi;
                        fs[i] = fi;
                    }
                }
            }
        }
    }
}

/// Central-difference gradient; `None` when the budget runs out.
fn gradient(obj: &mut Objective<'_>, x: &[f64], h: f64) -> Option<Vec<f64>> {
    let mut g = vec![0.0; x.len()];
    let mut probe = x.to_vec();
    for j in 0..x.len() {
        probe[j] = x[j] + h;
        let fp = obj.eval(&probe)?;
        probe[j] = x[j] - h;
        let fm = obj.eval(&probe)?;
        probe[j] = x[j];
        g[j] = (fp - fm) / (2.0 * h);
    }
    Some(g)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

fn quasi_newton(spec: &OptimizerSpec, obj: &mut Objective<'_>, rng: &mut Rng) {
    let d = obj.dim();
    let h = spec.param("fd_step");
    let gtol = spec.param("grad_tol");
    let max_backtracks = 30;
    loop {
        let mut x = uniform_point(rng, d);
        let Some(mut fx) = obj.eval(&x) else { return };
        let Some(mut g) = gradient(obj, &x, h) else { return };
        // inverse Hessian approximation, row-major
        let mut hinv = identity(d);
        loop {
            if !g.iter().all(|v| v.is_finite()) || dot(&g, &g).sqrt() < gtol {
                break;
            }
            let mut p: Vec<f64> = (0..d).map(|i| -dot(&hinv[i * d..(i + 1) * d], &g)).collect();
            let mut slope = dot(&g, &p);
            if slope >= 0.0 {
                hinv = identity(d);
                p = g.iter().map(|v| -v).collect();
                slope = -dot(&g, &g);
            }
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..max_backtracks {
                let xn: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + t * b).collect();
                let Some(fnew) = obj.eval(&xn) else { return };
                if fnew <= fx + 1e-4 * t * slope {
                    accepted = Some((xn, fnew));
                    break;
                }
                t *= 0.5;
            }
            let Some((xn, fnew)) = accepted else { break };
            let Some(gn) = gradient(obj, &xn, h) else { return };
            let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() && sy > 0.0 {
                bfgs_update(&mut hinv, &s, &y, sy);
            }
            if dot(&s, &s).sqrt() < 1e-12 {
                break;
            }
            x = xn;
            fx = fnew;
            g = gn;
        }
    }
}

fn identity(d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    m
}

fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let d = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..d).map(|i| dot(&h[i * d..(i + 1) * d], y)).collect();
    let yhy = dot(y, &hy);
    for i in 0..d {
        for j in 0..d {
            h[i * d + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}
