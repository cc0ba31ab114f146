//! Samples the structural hypotheses for the three bundled nonlinearities and
//! a deliberately broken linear one.

use nehari::problem::{check_hypotheses, AR_CHECK};
use nehari::scenario::{ScenarioConfig, BUNDLED};
use nehari::Nonlinearity;

fn main() -> nehari::Result<()> {
    for name in BUNDLED {
        let spec = ScenarioConfig::bundled(name)?.spec()?;
        let report = check_hypotheses(&spec, 400, 1e3)?;
        println!("{name}: required {}, ar_satisfied {}", report.all_required_pass(), report.ar_satisfied());
        if let Some(ar) = report.get(AR_CHECK).filter(|c| !c.pass) {
            println!("  AR fails near t = {:.3e}: {}", ar.witness_t.unwrap_or(f64::NAN), ar.detail);
        }
    }

    let mut spec = ScenarioConfig::bundled("power")?.spec()?;
    spec.nonlinearity = Nonlinearity::linear();
    let report = check_hypotheses(&spec, 400, 1e3)?;
    for check in report.checks.iter().filter(|c| !c.pass) {
        println!("linear f: {} fails, witness t = {:?} ({})", check.name, check.witness_t, check.detail);
    }
    Ok(())
}
