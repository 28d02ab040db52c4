//! Two-photon interference at a beamsplitter of reflectivity η: the
//! coincidence amplitude is 2η − 1, vanishing at η = 1/2.
//!
//!     cargo run --example hom_dip

use gatebench::linalg::c;
use gatebench::photonic::{beamsplitter, evolve, FockState, MAX_MODES};

fn main() -> gatebench::Result<()> {
    let mut both = [0u8; MAX_MODES];
    both[0] = 1;
    both[1] = 1;
    for i in 0..=10 {
        let eta = i as f64 / 10.0;
        let mut s = FockState::empty(2);
        s.add(both, c(1.0, 0.0))?;
        let out = evolve(&s, &beamsplitter(2, 0, 1, eta))?;
        let a = out.amplitude(&both).re;
        println!("eta {eta:.1}  amplitude {a:+.3}  coincidence {:.3}  {}", a * a, "#".repeat((40.0 * a * a) as usize));
    }
    Ok(())
}
