//! Exact rates, Wilson intervals and exact McNemar tests on small paired counts.
//!
//! ```bash
//! cargo run --example statistics
//! ```

use stalectx::analysis::{delta, format_p, mcnemar_exact, wilson_interval, Proportion, WILSON_Z_95};

fn main() {
    let current = Proportion::new(0, 17);
    let stale = Proportion::new(15, 17);
    println!("stale-only SRR   {stale}");
    println!("current-only SRR {current}");
    println!("delta            {}", delta(stale, current));

    let (lo, hi) = wilson_interval(stale.k, stale.n, WILSON_Z_95);
    println!("Wilson 95%       [{:.1}%, {:.1}%]", lo * 100.0, hi * 100.0);

    for (b, c) in [(15, 0), (13, 0), (8, 0), (12, 1), (0, 0)] {
        println!("McNemar b={b:<2} c={c}  p = {}", format_p(mcnemar_exact(b, c)));
    }
}
