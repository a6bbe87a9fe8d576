//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::time::Instant;

use critlen_core::bessel::{
    bessel_deriv_zero, bessel_stack, bessel_zero, spherical_deriv_zero, spherical_from_series, spherical_zero,
    BesselOrder,
};
use critlen_core::critlen::estimate_critical_length;
use critlen_core::determinants::{symbolic_minor, symbolic_v, symbolic_w, MinorEvaluator};
use critlen_core::eval::TrigEval;
use critlen_core::grid::GridSpec;
use critlen_core::identities::{
    spherical_big_v_poly, spherical_v_growth_poly, spherical_w_growth_poly, verify_all, CoeffModel, IdentityId,
    Solution, Status,
};
use critlen_core::trigpoly::{spherical_fn, TrigPoly};

type Outcome = Result<String, String>;

fn check(cond: bool, ok: String, bad: String) -> Outcome {
    if cond {
        Ok(ok)
    } else {
        Err(bad)
    }
}

/// Samples `(lo, hi]` with `points` linear steps, excluding `lo`.
fn open_left(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    (1..=points).map(|i| lo + (hi - lo) * i as f64 / points as f64).collect()
}

/// Worst value of `value / magnitude` over the grid, for sign checks.
fn min_scaled(e: &TrigEval, xs: &[f64]) -> Result<(f64, f64), String> {
    let mut worst = (f64::INFINITY, 0.0);
    for &x in xs {
        let d = e.eval_detail(x).map_err(|e| e.to_string())?;
        let s = d.value.to_f64() / d.magnitude.max(f64::MIN_POSITIVE);
        if s < worst.0 {
            worst = (s, x);
        }
    }
    Ok(worst)
}

fn c1_closed_forms() -> Outcome {
    let mut worst = (-1.0f64, 0usize, 0.0f64);
    for n in 0..=8usize {
        let f = spherical_fn(n).map_err(|e| e.to_string())?.compile();
        for x in open_left(0.1, 30.0, 25) {
            let a = f.eval(x).map_err(|e| e.to_string())?;
            let b = spherical_from_series(n, x, 1e-16).map_err(|e| e.to_string())?;
            let rel = (a - b).abs() / a.abs().max(b.abs());
            if rel > worst.0 {
                worst = (rel, n, x);
            }
        }
    }
    let msg = format!("max relative gap {:.2e} (n = {}, x = {:.3})", worst.0, worst.1, worst.2);
    check(worst.0 <= 1e-11, msg.clone(), msg)
}

fn c2_ring_identities() -> Outcome {
    let x = TrigPoly::x();
    for n in 1..=10usize {
        let f = spherical_fn(n).map_err(|e| e.to_string())?;
        let d = f.derivatives(2);
        let ode = &(&(&x * &d[2]) - &d[1].scale_int(2 * n as i64)) + &(&x * &f);
        if !ode.is_zero() {
            return Err(format!("x f'' - 2n f' + x f != 0 for n = {n}"));
        }
        let g = spherical_fn(n - 1).map_err(|e| e.to_string())?;
        if d[1] != &x * &g {
            return Err(format!("f_n' != x f_(n-1) for n = {n}"));
        }
    }
    Ok("both identities vanish exactly for n = 1..10".into())
}

fn c3_v_positive_monotone() -> Outcome {
    let xs = open_left(1e-3, 30.0, 2000);
    for n in 1..=8usize {
        let v = symbolic_v(&spherical_fn(n).map_err(|e| e.to_string())?);
        let d = v.derivatives(2);
        let (v0, _) = min_scaled(&d[0].compile(), &xs)?;
        if !(v0 > 0.0) {
            return Err(format!("v(f_{n}) not positive"));
        }
        for (k, name) in [(1, "v'"), (2, "v''")] {
            let (m, x) = min_scaled(&d[k].compile(), &xs)?;
            if m < -1e-12 {
                return Err(format!("{name}(f_{n}) = {m:.2e} * scale at x = {x}"));
            }
        }
    }
    Ok("v > 0, v' and v'' >= -1e-12 scale for n = 1..8 on 2000 points".into())
}

fn c4_w_positive() -> Outcome {
    let mut worst_growth = f64::INFINITY;
    for n in 1..=8usize {
        let f = spherical_fn(n).map_err(|e| e.to_string())?;
        let j1 = spherical_zero(n, 1, 1e-13).map_err(|e| e.to_string())?.value;
        let w = symbolic_w(&f).compile();
        for x in open_left(1e-3, j1 - 1e-3, 2000) {
            let val = w.eval_detail(x).map_err(|e| e.to_string())?;
            if !(val.value.to_f64() > 0.0) {
                return Err(format!("w(f_{n})({x}) = {:.3e}", val.value.to_f64()));
            }
        }
        let jp = spherical_deriv_zero(n, 1, 1e-13).map_err(|e| e.to_string())?.value;
        let g = spherical_w_growth_poly(n).map_err(|e| e.to_string())?.compile();
        let (m, x) = min_scaled(&g, &open_left(1e-3, jp, 2000))?;
        if m < -1e-10 {
            return Err(format!("w' - 3(n-1)w/x = {m:.2e} * scale at x = {x} for n = {n}"));
        }
        worst_growth = worst_growth.min(m);
    }
    Ok(format!(
        "w(f_n) > 0 before j_1(f_n) and the growth condition holds for n = 1..8 (worst scaled {worst_growth:.2e})"
    ))
}

fn c5_big_v_positive() -> Outcome {
    for n in 2..=8usize {
        // x^3 V has the sign of V
        let t = spherical_big_v_poly(n).map_err(|e| e.to_string())?.compile();
        let (m, x) = min_scaled(&t, &open_left(1e-3, 30.0, 2000))?;
        if m < -1e-12 {
            return Err(format!("V(f_{n}) = {m:.2e} * scale at x = {x}"));
        }
        let jp = bessel_deriv_zero(BesselOrder::half_integer(n), 1, 1e-13)
            .map_err(|e| e.to_string())?
            .value;
        let u = spherical_v_growth_poly(n).map_err(|e| e.to_string())?.compile();
        let (m, x) = min_scaled(&u, &open_left(1e-3, jp, 2000))?;
        if m < -1e-10 {
            return Err(format!("V' - 2nV/x = {m:.2e} * scale at x = {x} for n = {n}"));
        }
    }
    Ok("V(f_n) >= 0 and x^(-2n) V nondecreasing before j'_(n+1/2,1) for n = 2..8".into())
}

fn c6_registry() -> Outcome {
    let grid = GridSpec::log(1e-2, 30.0, 500).map_err(|e| e.to_string())?;
    let mut cases = Vec::new();
    for n in [1usize, 2, 3, 4, 6] {
        cases.push((CoeffModel::spherical(n), Solution::spherical(n).map_err(|e| e.to_string())?));
    }
    for nu in [1.5, 2.0, 3.4] {
        let o = BesselOrder::new(nu).map_err(|e| e.to_string())?;
        cases.push((CoeffModel::bessel(o), Solution::bessel(o)));
    }
    let mut applied = [false; 19];
    let (mut passed, mut skipped, mut worst) = (0usize, 0usize, 0.0f64);
    for (model, sol) in &cases {
        for rep in verify_all(model, sol, &grid, None).map_err(|e| format!("{}: {e}", model.name()))? {
            let i = IdentityId::ALL.iter().position(|&t| t == rep.identity).unwrap();
            match rep.status {
                Status::Pass => {
                    passed += 1;
                    applied[i] |= rep.applicable;
                    worst = worst.max(rep.max_rel_residual / rep.tolerance);
                }
                Status::NotApplicable => skipped += 1,
                Status::Fail => {
                    return Err(format!(
                        "{} on {}: residual {:.2e} > {:.0e} at x = {:?}",
                        rep.identity, rep.model, rep.max_rel_residual, rep.tolerance, rep.worst_x
                    ))
                }
            }
        }
    }
    if let Some(i) = applied.iter().position(|a| !a) {
        return Err(format!("{} was never applicable", IdentityId::ALL[i]));
    }
    Ok(format!(
        "{passed} checks pass, {skipped} outside their hypotheses; worst residual/tolerance {worst:.1e}"
    ))
}

fn c7_critical_length() -> Outcome {
    let mut parts = Vec::new();
    for n in 0..=6usize {
        let t = Instant::now();
        let r = estimate_critical_length(n, None, 1e-13).map_err(|e| e.to_string())?;
        let secs = t.elapsed().as_secs_f64();
        if n <= 2 && r.gap.abs() > 1e-8 {
            return Err(format!("n = {n}: |gap| = {:.2e}", r.gap.abs()));
        }
        if r.estimate > r.reference + 1e-8 {
            return Err(format!("n = {n}: estimate {} exceeds reference {}", r.estimate, r.reference));
        }
        if n == 6 && secs > 60.0 {
            return Err(format!("n = 6 took {secs:.1} s"));
        }
        parts.push(format!("n={n} gap {:.1e}", r.gap));
        if n == 6 {
            parts.push(format!("n=6 in {secs:.2} s"));
        }
    }
    Ok(parts.join(", "))
}

fn c8_bessel_v() -> Outcome {
    let xs = open_left(1e-3, 20.0, 2000);
    let mut sign_changes = 0;
    for nu in [0.0, 1.0, 2.5, 3.4] {
        let o = BesselOrder::new(nu).map_err(|e| e.to_string())?;
        let mut vs = Vec::with_capacity(xs.len());
        for &x in &xs {
            let s = bessel_stack(o, x, 2, 1e-16).map_err(|e| e.to_string())?;
            let v = s[1] * s[1] - s[2] * s[0];
            if v < -1e-10 {
                return Err(format!("v(J_{nu})({x}) = {v:.3e}"));
            }
            vs.push(v);
        }
        if nu == 3.4 {
            let diffs: Vec<f64> = vs.windows(2).map(|w| w[1] - w[0]).collect();
            sign_changes = diffs.windows(2).filter(|d| (d[0] < 0.0) != (d[1] < 0.0)).count();
        }
    }
    check(
        sign_changes > 0,
        format!("v(J_nu) >= -1e-10 for nu in {{0, 1, 2.5, 3.4}}; v(J_3.4)' changes sign {sign_changes} times"),
        "v(J_3.4) is monotone on (0, 20]".into(),
    )
}

fn c9_zero_structure() -> Outcome {
    for nu in [0.5, 1.5, 2.5, 3.5] {
        let z = |order: f64, k| -> Result<f64, String> {
            Ok(bessel_zero(BesselOrder::new(order).map_err(|e| e.to_string())?, k, 1e-13)
                .map_err(|e| e.to_string())?
                .value)
        };
        let (a, b, c) = (z(nu, 1)?, z(nu + 1.0, 1)?, z(nu, 2)?);
        if !(0.0 < a && a + 1e-9 < b && b + 1e-9 < c) {
            return Err(format!("interlacing fails for nu = {nu}: {a}, {b}, {c}"));
        }
    }
    for n in 1..=8usize {
        let jp = spherical_deriv_zero(n, 1, 1e-13).map_err(|e| e.to_string())?.value;
        if !(jp > n as f64 + 0.5) {
            return Err(format!("j_1(f_{n}') = {jp} <= n + 1/2"));
        }
    }
    Ok("interlacing for nu in {0.5, 1.5, 2.5, 3.5}; j_1(f_n') > n + 1/2 for n = 1..8".into())
}

fn c10_dual_path() -> Outcome {
    let mut worst = (-1.0f64, 0, 0, 0.0);
    let xs = open_left(0.0, 20.0, 200);
    for n in 0..=4usize {
        for j in n + 1..=2 * n + 1 {
            let sym = symbolic_minor(n, j).map_err(|e| e.to_string())?.compile();
            let num = MinorEvaluator::new(n, j).map_err(|e| e.to_string())?;
            for &x in &xs {
                let a = sym.eval_detail(x).map_err(|e| e.to_string())?;
                let b = num.eval(x).map_err(|e| e.to_string())?;
                let av = a.value.to_f64();
                // relative to the value, or to the term scale at a near-zero sample
                let denom = av.abs().max(b.abs()).max(1e-10 * a.magnitude);
                let rel = (av - b).abs() / denom;
                if !(rel <= 1e-10) {
                    return Err(format!("n = {n}, j = {j}, x = {x}: {av:e} vs {b:e}"));
                }
                if rel > worst.0 {
                    worst = (rel, n, j, x);
                }
            }
        }
    }
    let msg = format!(
        "max relative gap {:.2e} (n = {}, j = {}, x = {:.2})",
        worst.0, worst.1, worst.2, worst.3
    );
    check(worst.0 <= 1e-10, msg.clone(), msg)
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("closed forms of f_n against the Bessel series", c1_closed_forms),
        ("exact ring identities for f_n", c2_ring_identities),
        ("v(f_n) positive, increasing, convex", c3_v_positive_monotone),
        ("w(f_n) positive with growth condition", c4_w_positive),
        ("V(f_n) positive and x^(-2n) V nondecreasing", c5_big_v_positive),
        ("identity registry on both model families", c6_registry),
        ("critical length estimates", c7_critical_length),
        ("v(J_nu) nonnegative, non-monotone for nu = 3.4", c8_bessel_v),
        ("zero interlacing and j_1(f_n') > n + 1/2", c9_zero_structure),
        ("symbolic and numeric minors agree", c10_dual_path),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (tag, detail) = match run() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "criterion {:>2} {tag}: {name} ({detail}) [{:.2} s]",
            i + 1,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria pass in {:.1} s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
