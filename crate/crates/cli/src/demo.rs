//! The worked example: the classical dyadic martingale of diag(4,0,0,0) on
//! four atoms, walked end to end with every intermediate object printed.

use ncmartingale::*;

use crate::{dump_dir, write_decomposition_dump, write_projection_dump, Resolved};

/// Prints a small operator: `diag(…)` when it is diagonal to working
/// precision, otherwise the full matrix.
fn show(op: &Operator) -> String {
    let d = op.dim();
    let mat = op.matrix();
    let mut diagonal = true;
    for i in 0..d {
        for j in 0..d {
            if i != j && mat[(i, j)].norm() > 1e-10 {
                diagonal = false;
            }
        }
    }
    fn fmt(re: f64, im: f64) -> String {
        if im.abs() > 1e-10 {
            return format!("{re:.4}{im:+.4}i");
        }
        if (re - re.round()).abs() < 1e-10 {
            format!("{}", re.round())
        } else {
            format!("{re:.4}")
        }
    }
    if diagonal {
        let entries: Vec<String> = (0..d).map(|i| fmt(mat[(i, i)].re, mat[(i, i)].im)).collect();
        format!("diag({})", entries.join(", "))
    } else {
        let rows: Vec<String> = (0..d)
            .map(|i| {
                let cols: Vec<String> = (0..d).map(|j| fmt(mat[(i, j)].re, mat[(i, j)].im)).collect();
                format!("[{}]", cols.join(", "))
            })
            .collect();
        format!("[{}]", rows.join("; "))
    }
}

fn ok(flag: bool) -> &'static str {
    if flag {
        "ok"
    } else {
        "VIOLATED"
    }
}

pub(crate) fn run(opts: &Resolved) -> Result<()> {
    let tol = opts.tol;
    let (_, m) = worked_example();
    println!("== worked example: terminal diag(4, 0, 0, 0) on four atoms ==");
    println!("filtration: tensor factors [1, 2, 2]  (d = 4, N = 3, τ = tr/4)");
    println!();

    println!("-- martingale levels x_n = E_n(x) --");
    for n in 1..=m.levels() {
        println!("x[{n}] = {}", show(m.level(n)));
    }
    let dx = m.differences();
    for (n, d) in dx.iter().enumerate() {
        println!("dx[{}] = {}", n + 1, show(d));
    }
    println!("k-regularity: is_2_regular = {}", m.is_k_regular(2.0)?);
    println!();

    println!("-- stopping projections q_n^(λ) --");
    let fams = dyadic_families(&m)?;
    for fam in fams.iter() {
        for n in 1..=m.levels() {
            println!("q[{n}]^(λ={}) = {}", fam.lambda(), show(fam.q(n).as_operator()));
        }
        println!(
            "τ(1 − q[N]^(λ={})) = {:.4}  (≤ 1/λ = {:.4}: {})",
            fam.lambda(),
            fam.tail_mass(),
            1.0 / fam.lambda(),
            ok(fam.tail_mass() <= 1.0 / fam.lambda() + tol)
        );
    }
    println!();

    println!("-- spectral layers p_(i,n) (k_max = {}) --", fams.k_max());
    let ls = layers_from(&m, &fams)?;
    for n in 1..=m.levels() {
        for i in 0..ls.layer_count() {
            println!("p[i={i},n={n}] = {}", show(ls.layer(i, n).as_operator()));
        }
    }
    println!();

    println!("-- support projections r_(i,n) and level sums h_n --");
    let sup = supports(&m, &ls)?;
    for n in 2..=m.levels() {
        for i in 1..=ls.k_max() + 1 {
            println!("r[i={i},n={n}] = {}", show(sup.r(i, n).as_operator()));
        }
        println!("h[{n}] = {}", show(sup.h(n)));
    }
    for m0 in 0..=ls.k_max() {
        let mass = sup.tail_mass(m0);
        let bound = 4.0 * 0.5_f64.powi(m0 as i32);
        println!("support mass above m0={m0}: {mass:.4} (≤ {bound}: {})", ok(mass <= bound + tol));
    }
    println!(
        "max(sup ‖h_n‖_∞, ‖h‖₂) = {:.4} (≤ 2: {})",
        sup.h_sup_norm().max(sup.h_l2_norm()),
        ok(sup.h_sup_norm().max(sup.h_l2_norm()) <= 2.0 + tol)
    );
    println!();

    println!("-- compressed increment energy at λ = 2 --");
    let energy = compression_energy(&m, 2.0)?;
    println!("‖q_1 x_1 q_1‖₂ = {:.4}", energy.first_level);
    for (n, (lhs, rhs)) in energy.per_level.iter().enumerate() {
        println!(
            "level {}: ‖q_n dx_n q_(n−1)‖₂ = {lhs:.4} ≤ ‖q_n x_n q_n − q_(n−1) x_(n−1) q_(n−1)‖₂ = {rhs:.4}: {}",
            n + 2,
            ok(lhs <= &(rhs + tol))
        );
    }
    println!(
        "total = {:.4} (≤ 2λ = {}: {})",
        energy.total,
        energy.bound(),
        ok(energy.total <= energy.bound() + tol)
    );
    println!();

    println!("-- three-way decomposition dx = a + b + c --");
    let triple = abc_decompose_with(&m, &ls)?;
    for n in 0..m.levels() {
        println!("a[{}] = {}", n + 1, show(&triple.a[n]));
        println!("b[{}] = {}", n + 1, show(&triple.b[n]));
        println!("c[{}] = {}", n + 1, show(&triple.c[n]));
    }
    let l2 = abc_l2_report(&triple, &m);
    println!(
        "L² report: ‖a‖ + ‖b‖ + ‖c‖ = {:.4} (≤ 5‖x‖₂ = {:.4}: {})",
        l2.total(),
        5.0 * m.terminal().lp_norm(2.0)?,
        ok(l2.total() <= 5.0 * m.terminal().lp_norm(2.0)? + tol)
    );
    let weak = abc_weak_report(&triple, &m)?;
    println!(
        "weak report: diag = {:.4} (≤ 144), σ_col = {:.4} (≤ 36), σ_row = {:.4} (≤ 36): {}",
        weak.diag_weak,
        weak.sigma_col_weak,
        weak.sigma_row_weak,
        ok(weak.diag_weak <= 144.0 && weak.sigma_col_weak <= 36.0 && weak.sigma_row_weak <= 36.0)
    );
    println!(
        "layer-resolved square expansions: residual = {:.2e}",
        square_expansion_residual(&m, &ls, &triple)?
    );
    println!();

    println!("-- two-way split dx = dy + dz --");
    let pair = yz_decompose_with(&m, &ls)?;
    let dy = pair.y.differences();
    let dz = pair.z.differences();
    for n in 0..m.levels() {
        println!("dy[{}] = {}", n + 1, show(&dy[n]));
        println!("dz[{}] = {}", n + 1, show(&dz[n]));
    }
    let (s_y, s_z) = regular_weak_report(&m, 2.0)?;
    println!(
        "k = 2 split: ‖σ_C(y)‖_(1,∞) = {s_y:.4}, ‖σ_R(z)‖_(1,∞) = {s_z:.4} (≤ {}: {})",
        regular_weak_threshold(2.0),
        ok(s_y <= regular_weak_threshold(2.0) && s_z <= regular_weak_threshold(2.0))
    );
    println!();

    println!("-- square functions and norms --");
    println!("S_C = {}", show(&s_col(&m)));
    println!("σ_C = {}", show(&sigma_col(&m)));
    for p in [1.0, 2.0, 4.0] {
        let report = NormReport::compute(&m, p)?;
        println!(
            "p = {p}: ‖x‖_p = {:.4}, hardy = {:.4} (exact: {}), h = {:.4} (exact: {}), bmo = {:.4}",
            m.terminal().lp_norm(p)?,
            report.hardy_p,
            report.hardy_exact,
            report.h_p,
            report.h_exact,
            report.bmo
        );
    }
    println!("‖x‖_(1,∞) = {:.4}", m.terminal().weak_l1_norm());

    if opts.dump_projections {
        write_projection_dump(&m, &dump_dir(opts)).map_err(Error::Degenerate)?;
    }
    if opts.dump_decomposition {
        write_decomposition_dump(&m, &dump_dir(opts)).map_err(Error::Degenerate)?;
    }
    Ok(())
}
