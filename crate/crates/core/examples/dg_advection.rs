//! Discontinuous Galerkin for `beta . grad u + mu u = f` with centered and
//! upwind fluxes, degrees 0 to 2.

use fekit::dg::{advection_study, Flux};
use fekit::problems::advection_smooth;

fn main() -> fekit::Result<()> {
    let problem = advection_smooth();
    println!("flux,degree,final_dg_error,rate");
    for flux in [Flux::Centered, Flux::Upwind] {
        for degree in 0..=2 {
            let table = advection_study(&[4, 8, 16], degree, flux, 1.0, &problem)?;
            let err = table.errors("dg");
            println!("{flux:?},{degree},{:.4e},{:.3}", err[err.len() - 1], table.final_rate("dg"));
        }
    }
    Ok(())
}
