//! Runs a small grid of exponent audits, fits beta in |A(A+1)| ~ |A|^beta,
//! and writes the reports as JSON and CSV.
//!
//!     cargo run --release --example exponent_grid -- /tmp/grid

use growth_lab::families::{FamilyKind, FamilySpec};
use growth_lab::grid::{fit_exponent, run_grid, AuditKind, AuditOptions, GridCell};
use growth_lab::report::{emit_report, ReportFormat};

fn main() -> growth_lab::Result<()> {
    let out = std::path::PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "grid-out".into()));
    std::fs::create_dir_all(&out)?;

    let mut plan = Vec::new();
    for kind in [FamilyKind::Random, FamilyKind::Ap, FamilyKind::Gp] {
        for size in [20, 35, 50, 70, 99] {
            plan.push(GridCell { audit: AuditKind::Thm1, family: FamilySpec::new(kind, 10007, size, 0) });
        }
    }
    let outcome = run_grid(&plan, 42, &AuditOptions::default())?;

    for kind in ["random", "ap", "gp"] {
        let points: Vec<(f64, f64)> = outcome
            .reports
            .iter()
            .filter(|r| r.family.starts_with(&format!("kind={kind} ")))
            .map(|r| (r.sizes["card_a"] as f64, r.sizes["card_shifted"] as f64))
            .collect();
        let fit = fit_exponent(&points)?;
        println!("{kind:>6}: beta = {:.3}, r^2 = {:.4}", fit.beta, fit.r_squared);
    }
    emit_report(&outcome.reports, ReportFormat::Json, &out.join("reports.json"))?;
    emit_report(&outcome.reports, ReportFormat::Csv, &out.join("reports.csv"))?;
    println!("wrote {} reports to {}", outcome.reports.len(), out.display());
    Ok(())
}
