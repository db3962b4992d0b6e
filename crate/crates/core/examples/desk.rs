//! Solves the desk instance for all strategies and prints a small table.
//!
//! `cargo run --release -p lexcvar --example desk`

use lexcvar::domains::build_desk_instance;
use lexcvar::exec::{evaluate, EvalSettings, Plan};
use lexcvar::solver::{
    build_ygrid, cvar_value_iteration, estimate_var, query_value, solve_constrained_ev,
    solve_expected_value, solve_worst_case, CostAxis, SweepSettings, VarSettings,
};
use lexcvar::Execution;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let alpha = 0.1;
    let mdp = build_desk_instance();
    let set = SweepSettings::default();
    let ev = solve_expected_value(&mdp, &set)?;
    let worst = solve_worst_case(&mdp, &set)?;
    let cvar = cvar_value_iteration(&mdp, &build_ygrid(30, 1e-3)?, &worst, &set)?;
    let var = estimate_var(
        &mdp,
        &cvar,
        alpha,
        &VarSettings::default(),
        &Default::default(),
        Execution::Parallel,
    )?;
    let lex = solve_constrained_ev(&mdp, &worst, &var, CostAxis::default(), &set)?;
    println!(
        "CVaR_{alpha} at s0: {:.3}, VaR {:.3}",
        query_value(&cvar, mdp.initial(), alpha)?,
        var.value
    );

    let settings = EvalSettings {
        alphas: vec![alpha],
        ..EvalSettings::default()
    };
    for plan in [
        Plan::Ev(&ev),
        Plan::CvarWc { cvar: &cvar, alpha },
        Plan::CvarEv {
            cvar: &cvar,
            lex: &lex,
            alpha,
        },
    ] {
        let (s, _) = evaluate(&mdp, &plan, &settings)?;
        let t = &s.tails[0];
        println!(
            "{:<8} mean {:>6.3} ({:.3})  CVaR {:>6.3} ({:.3})",
            s.name, s.mean, s.mean_se, t.cvar, t.cvar_se
        );
    }
    Ok(())
}
