//! Total variation never grows under a pushforward; on products it sits
//! between the larger and the sum of the factor distances.

use uqsens::metrics::{pushforward_weights, tv_discrete, tv_product};

fn main() -> uqsens::Result<()> {
    let p = [0.1, 0.4, 0.3, 0.2];
    let q = [0.25, 0.25, 0.25, 0.25];
    let tv = tv_discrete(&p, &q)?;
    for map in [[0, 1, 2, 3], [0, 0, 1, 1], [0, 1, 1, 0], [0, 0, 0, 0]] {
        let tp = pushforward_weights(&p, &map, 4)?;
        let tq = pushforward_weights(&q, &map, 4)?;
        println!("map {map:?}: {:.3} <= {tv:.3}", tv_discrete(&tp, &tq)?);
    }
    let (p2, q2) = ([0.5, 0.5], [0.9, 0.1]);
    let tv2 = tv_discrete(&p2, &q2)?;
    let prod = tv_product(&p, &p2, &q, &q2)?;
    println!("product: {:.3} <= {prod:.3} <= {:.3}", tv.max(tv2), tv + tv2);
    Ok(())
}
