//! Steady-state solvers for the mass-action model.
//!
//! `Integrate` runs an explicit Dormand-Prince 5(4) scheme from the empty
//! state until the scaled derivative norm drops below tolerance; it is the
//! dynamical route and doubles as a stability check. `Newton` applies damped
//! root finding with the analytic Jacobian, seeded from the reduced model's
//! equilibrium mapped back to full coordinates; it stays cheap at binding
//! rates far beyond what an explicit integrator can step through.

use crate::error::{Error, Result};
use crate::rre::{closed_form_steady_state, rre_rhs, RreParameters, RreState};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteadyStateMethod {
    Integrate,
    Newton,
}

#[derive(Debug, Clone)]
pub struct SteadyStateOptions {
    /// Relative integration tolerance.
    pub rtol: f64,
    /// Absolute integration tolerance.
    pub atol: f64,
    /// Stop when `max_i |dx_i/dt| / max(|x_i|, floor)` falls below this.
    pub stop_tol: f64,
    /// Concentration floor in the stopping criterion.
    pub floor: f64,
    pub max_steps: usize,
    /// Newton iteration cap.
    pub max_newton: usize,
}

impl Default for SteadyStateOptions {
    fn default() -> Self {
        SteadyStateOptions {
            rtol: 1e-10,
            atol: 1e-14,
            stop_tol: 1e-10,
            floor: 1e-12,
            max_steps: 5_000_000,
            max_newton: 100,
        }
    }
}

/// Compute the steady state of the full model at inputs `u`.
pub fn steady_state(
    params: &RreParameters,
    u: &[f64],
    method: SteadyStateMethod,
    opts: &SteadyStateOptions,
) -> Result<RreState> {
    params.validate()?;
    match method {
        SteadyStateMethod::Integrate => integrate_to_steady_state(params, u, opts),
        SteadyStateMethod::Newton => newton_steady_state(params, u, opts),
    }
}

fn scaled_residual(x: &[f64], dx: &[f64], floor: f64) -> f64 {
    x.iter()
        .zip(dx.iter())
        .map(|(xi, di)| di.abs() / xi.abs().max(floor))
        .fold(0.0, f64::max)
}

fn integrate_to_steady_state(
    params: &RreParameters,
    u: &[f64],
    opts: &SteadyStateOptions,
) -> Result<RreState> {
    let n = params.n_modules();
    let dim = params.dim();
    let rhs = |x: &[f64], out: &mut [f64]| -> Result<()> {
        let state = RreState::from_flat(n, x)?;
        let d = rre_rhs(&state, params, u)?;
        out.copy_from_slice(&d.to_flat());
        Ok(())
    };

    // Dormand-Prince 5(4) coefficients.
    const A21: f64 = 1.0 / 5.0;
    const A31: f64 = 3.0 / 40.0;
    const A32: f64 = 9.0 / 40.0;
    const A41: f64 = 44.0 / 45.0;
    const A42: f64 = -56.0 / 15.0;
    const A43: f64 = 32.0 / 9.0;
    const A51: f64 = 19372.0 / 6561.0;
    const A52: f64 = -25360.0 / 2187.0;
    const A53: f64 = 64448.0 / 6561.0;
    const A54: f64 = -212.0 / 729.0;
    const A61: f64 = 9017.0 / 3168.0;
    const A62: f64 = -355.0 / 33.0;
    const A63: f64 = 46732.0 / 5247.0;
    const A64: f64 = 49.0 / 176.0;
    const A65: f64 = -5103.0 / 18656.0;
    const B1: f64 = 35.0 / 384.0;
    const B3: f64 = 500.0 / 1113.0;
    const B4: f64 = 125.0 / 192.0;
    const B5: f64 = -2187.0 / 6784.0;
    const B6: f64 = 11.0 / 84.0;
    // Embedded 4th-order weights.
    const C1: f64 = 5179.0 / 57600.0;
    const C3: f64 = 7571.0 / 16695.0;
    const C4: f64 = 393.0 / 640.0;
    const C5: f64 = -92097.0 / 339200.0;
    const C6: f64 = 187.0 / 2100.0;
    const C7: f64 = 1.0 / 40.0;

    let mut x = vec![0.0; dim];
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut k5 = vec![0.0; dim];
    let mut k6 = vec![0.0; dim];
    let mut k7 = vec![0.0; dim];
    let mut xt = vec![0.0; dim];
    let mut x_new = vec![0.0; dim];

    rhs(&x, &mut k1)?;
    if scaled_residual(&x, &k1, opts.floor) < opts.stop_tol {
        return RreState::from_flat(n, &x);
    }

    // Initial step from the fastest rate in the system.
    let fastest = fastest_rate(params, &x);
    let mut h = (0.1 / fastest.max(1.0)).min(0.1);

    // Phase one: adaptive steps through the transient. An explicit method
    // dancing at its stability boundary keeps re-injecting local error onto
    // the fast binding modes, so the scaled derivative bottoms out near
    // (fastest rate) * rtol; run adaptively only down to a coarse target.
    let coarse_target = opts.stop_tol.max(1e3 * opts.rtol * fastest).min(1e-6);
    let mut steps_used = 0usize;
    let mut reached_coarse = false;
    while steps_used < opts.max_steps {
        steps_used += 1;
        for i in 0..dim {
            xt[i] = x[i] + h * A21 * k1[i];
        }
        rhs(&xt, &mut k2)?;
        for i in 0..dim {
            xt[i] = x[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        rhs(&xt, &mut k3)?;
        for i in 0..dim {
            xt[i] = x[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs(&xt, &mut k4)?;
        for i in 0..dim {
            xt[i] = x[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs(&xt, &mut k5)?;
        for i in 0..dim {
            xt[i] =
                x[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        rhs(&xt, &mut k6)?;
        for i in 0..dim {
            x_new[i] =
                x[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        rhs(&x_new, &mut k7)?;

        let mut err_norm = 0.0f64;
        for i in 0..dim {
            let e4 = x[i]
                + h * (C1 * k1[i] + C3 * k3[i] + C4 * k4[i] + C5 * k5[i] + C6 * k6[i]
                    + C7 * k7[i]);
            let sc = opts.atol + opts.rtol * x[i].abs().max(x_new[i].abs());
            let e = (x_new[i] - e4) / sc;
            err_norm += e * e;
        }
        err_norm = (err_norm / dim as f64).sqrt();

        if err_norm <= 1.0 {
            x.copy_from_slice(&x_new);
            k1.copy_from_slice(&k7);
            let resid = scaled_residual(&x, &k1, opts.floor);
            if resid < opts.stop_tol {
                return RreState::from_flat(n, &x);
            }
            if resid < coarse_target {
                reached_coarse = true;
                break;
            }
        }
        let factor = if err_norm == 0.0 {
            5.0
        } else {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
    }

    if reached_coarse {
        // Phase two: fixed small steps strictly inside the stability region,
        // so the fast-mode residue contracts every step instead of being
        // re-excited; the slow tail decays on its own timescale. Classic RK4
        // is enough here.
        let mut h_fix = 0.3 / fastest_rate(params, &x).max(1.0);
        let mut k_a = vec![0.0; dim];
        let mut k_b = vec![0.0; dim];
        let mut k_c = vec![0.0; dim];
        while steps_used < opts.max_steps {
            steps_used += 1;
            for i in 0..dim {
                xt[i] = x[i] + 0.5 * h_fix * k1[i];
            }
            rhs(&xt, &mut k_a)?;
            for i in 0..dim {
                xt[i] = x[i] + 0.5 * h_fix * k_a[i];
            }
            rhs(&xt, &mut k_b)?;
            for i in 0..dim {
                xt[i] = x[i] + h_fix * k_b[i];
            }
            rhs(&xt, &mut k_c)?;
            for i in 0..dim {
                x[i] += h_fix / 6.0 * (k1[i] + 2.0 * k_a[i] + 2.0 * k_b[i] + k_c[i]);
            }
            rhs(&x, &mut k1)?;
            if scaled_residual(&x, &k1, opts.floor) < opts.stop_tol {
                return RreState::from_flat(n, &x);
            }
            if steps_used % 4096 == 0 {
                h_fix = 0.3 / fastest_rate(params, &x).max(1.0);
            }
        }
    }

    let resid = scaled_residual(&x, &k1, opts.floor);
    Err(Error::Convergence(format!(
        "integration hit the {}-step budget with scaled derivative {resid:.3e} \
         (target {:.1e}); try the newton method for stiff rates",
        opts.max_steps, opts.stop_tol
    )))
}

/// Upper estimate of the fastest linearized rate at the current state.
fn fastest_rate(params: &RreParameters, x: &[f64]) -> f64 {
    let n = params.n_modules();
    let mut fastest = 0.0f64;
    for (i, m) in params.modules.iter().enumerate() {
        let load = params.total_ribosome + x[3 * i + 1].abs();
        fastest = fastest
            .max(m.binding * load + m.unbinding + m.catalytic)
            .max(m.mrna_decay)
            .max(m.protein_decay);
    }
    let h = &params.host;
    let load = params.total_ribosome + x[3 * n + 1].abs();
    fastest
        .max(h.binding * load + h.unbinding + h.catalytic)
        .max(h.mrna_decay)
        .max(h.protein_decay)
}

fn newton_steady_state(
    params: &RreParameters,
    u: &[f64],
    opts: &SteadyStateOptions,
) -> Result<RreState> {
    let n = params.n_modules();
    let dim = params.dim();
    // Seed from the reduced model's equilibrium lifted to full coordinates.
    let mut x = closed_form_steady_state(params, u)?.to_flat();

    let residual = |x: &[f64], out: &mut [f64]| -> Result<()> {
        let state = RreState::from_flat(n, x)?;
        let d = rre_rhs(&state, params, u)?;
        out.copy_from_slice(&d.to_flat());
        Ok(())
    };

    let mut f = vec![0.0; dim];
    let mut f_try = vec![0.0; dim];
    let mut jac = vec![0.0; dim * dim];
    let mut pivot = vec![0usize; dim];
    let mut step = vec![0.0; dim];
    let mut x_try = vec![0.0; dim];

    residual(&x, &mut f)?;
    for _iter in 0..opts.max_newton {
        let scale = flux_scale(params, &x, u);
        let fnorm = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if fnorm <= 1e-12 * scale {
            return RreState::from_flat(n, &x);
        }

        jacobian(params, &x, &mut jac);
        step.copy_from_slice(&f);
        lu_solve_in_place(&mut jac, &mut pivot, &mut step, dim)?;

        // Damped update: x <- x - lambda * J^-1 F with backtracking on the
        // residual norm.
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            for i in 0..dim {
                x_try[i] = x[i] - lambda * step[i];
            }
            if residual(&x_try, &mut f_try).is_ok() {
                let fnorm_try = f_try.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                if fnorm_try < fnorm * (1.0 - 1e-4 * lambda) || fnorm_try <= 1e-12 * scale {
                    x.copy_from_slice(&x_try);
                    f.copy_from_slice(&f_try);
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::Convergence(format!(
                "newton stalled at residual {fnorm:.3e} (scale {scale:.3e})"
            )));
        }
    }
    let fnorm = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Err(Error::Convergence(format!(
        "newton used all {} iterations, residual {fnorm:.3e}",
        opts.max_newton
    )))
}

/// Magnitude of the largest one-sided flux, used to scale residual targets.
fn flux_scale(params: &RreParameters, x: &[f64], u: &[f64]) -> f64 {
    let n = params.n_modules();
    let free = {
        let mut bound = x[3 * n + 2];
        for i in 0..n {
            bound += x[3 * i + 2];
        }
        (params.total_ribosome - bound).abs()
    };
    let mut scale = 1e-12f64;
    for (i, m) in params.modules.iter().enumerate() {
        let fbar = m.regulator.eval(u[i]);
        scale = scale
            .max(fbar * m.dna)
            .max(m.binding * x[3 * i + 1].abs() * free)
            .max((m.unbinding + m.catalytic) * x[3 * i + 2].abs())
            .max(m.mrna_decay * x[3 * i + 1].abs())
            .max(m.protein_decay * x[3 * i].abs());
    }
    let h = &params.host;
    scale
        .max(h.transcription * h.dna)
        .max(h.binding * x[3 * n + 1].abs() * free)
        .max((h.unbinding + h.catalytic) * x[3 * n + 2].abs())
        .max(h.mrna_decay * x[3 * n + 1].abs())
        .max(h.protein_decay * x[3 * n].abs())
}

/// Analytic Jacobian of the flattened right-hand side. Free ribosome is
/// `R_T - sum of complexes`, so every complex column picks up cross terms.
fn jacobian(params: &RreParameters, x: &[f64], jac: &mut [f64]) {
    let n = params.n_modules();
    let dim = 3 * n + 3;
    debug_assert_eq!(jac.len(), dim * dim);
    jac.iter_mut().for_each(|v| *v = 0.0);

    let mut bound = x[3 * n + 2];
    for i in 0..n {
        bound += x[3 * i + 2];
    }
    let free = params.total_ribosome - bound;

    let complex_cols: Vec<usize> = (0..n).map(|j| 3 * j + 2).chain([3 * n + 2]).collect();

    let mut unit = |base: usize, binding: f64, unbinding: f64, catalytic: f64,
                    protein_decay: f64, mrna_decay: f64| {
        let mrna = x[base + 1];
        // protein row
        jac[base * dim + base] = -protein_decay;
        jac[base * dim + base + 2] = catalytic;
        // mrna row
        jac[(base + 1) * dim + base + 1] = -binding * free - mrna_decay;
        for &c in &complex_cols {
            jac[(base + 1) * dim + c] += binding * mrna;
        }
        jac[(base + 1) * dim + base + 2] += unbinding + catalytic;
        // complex row
        jac[(base + 2) * dim + base + 1] = binding * free;
        for &c in &complex_cols {
            jac[(base + 2) * dim + c] -= binding * mrna;
        }
        jac[(base + 2) * dim + base + 2] -= unbinding + catalytic;
    };

    for (i, m) in params.modules.iter().enumerate() {
        unit(3 * i, m.binding, m.unbinding, m.catalytic, m.protein_decay, m.mrna_decay);
    }
    let h = &params.host;
    unit(3 * n, h.binding, h.unbinding, h.catalytic, h.protein_decay, h.mrna_decay);
}

/// Partial-pivot LU factorization and solve, in place: on return `b` holds
/// the solution of `A x = b`.
fn lu_solve_in_place(a: &mut [f64], pivot: &mut [usize], b: &mut [f64], n: usize) -> Result<()> {
    for (i, p) in pivot.iter_mut().enumerate() {
        *p = i;
    }
    for k in 0..n {
        let mut max_val = a[k * n + k].abs();
        let mut max_row = k;
        for i in (k + 1)..n {
            let v = a[i * n + k].abs();
            if v > max_val {
                max_val = v;
                max_row = i;
            }
        }
        if max_val < 1e-300 {
            return Err(Error::Singular("singular jacobian in newton solve".into()));
        }
        if max_row != k {
            pivot.swap(k, max_row);
            for j in 0..n {
                a.swap(k * n + j, max_row * n + j);
            }
            b.swap(k, max_row);
        }
        let akk = a[k * n + k];
        for i in (k + 1)..n {
            a[i * n + k] /= akk;
            let lik = a[i * n + k];
            if lik != 0.0 {
                for j in (k + 1)..n {
                    a[i * n + j] -= lik * a[k * n + j];
                }
                b[i] -= lik * b[k];
            }
        }
    }
    for i in (0..n).rev() {
        for j in (i + 1)..n {
            b[i] -= a[i * n + j] * b[j];
        }
        b[i] /= a[i * n + i];
    }
    Ok(())
}
