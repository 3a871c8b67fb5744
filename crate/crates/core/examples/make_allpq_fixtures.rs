//! Regenerates `cases/case14_allpq.m` and `cases/case14_allpq_q393.m` from
//! `cases/case14.m`.

use std::path::PathBuf;

use helmgrid_core::netmodel::MatpowerCase;
use helmgrid_core::weakbus::all_pq_variant;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../cases");
    let case = MatpowerCase::parse(&std::fs::read_to_string(dir.join("case14.m"))?)?;
    let all_pq = all_pq_variant(&case)?;
    std::fs::write(dir.join("case14_allpq.m"), all_pq.to_text("case14_allpq"))?;
    let mut stressed = all_pq;
    stressed.scale_reactive_load(3.93);
    std::fs::write(dir.join("case14_allpq_q393.m"), stressed.to_text("case14_allpq_q393"))?;
    Ok(())
}
