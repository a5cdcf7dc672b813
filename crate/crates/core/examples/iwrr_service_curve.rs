//! Strict service curve of a flow under IWRR, built two independent ways.

use iwrr::service::{FlowSpec, SystemSpec};
use iwrr::Rat;

fn main() -> iwrr::Result<()> {
    let r = Rat::int;
    let sys = SystemSpec::unit_rate(vec![FlowSpec::fixed(2, r(1))?, FlowSpec::fixed(3, r(1))?])?;
    for x in 0..6u64 {
        println!("φ(1,2)({x}) = {}", sys.phi(0, 1, x)?);
    }
    println!("ψ_1(0) = {}, ψ_1(1) = {}", sys.psi(0, r(0))?, sys.psi(0, r(1))?);
    let gamma = sys.gamma(0)?;
    println!("γ_1 = ψ_1^↓ = {gamma:?}");
    println!("same as λ1 ⊗ U_1: {}", gamma.same_function(&sys.gamma_via_u(0)?));
    let beta = sys.iwrr_service_curve(0)?;
    for t in [2, 3, 5, 7, 12] {
        println!("β_1({t}) = {}", beta.value_at(r(t)));
    }
    Ok(())
}
