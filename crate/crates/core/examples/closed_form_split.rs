//! Splitting a user across a two-rectangle region: closed form against bisection.

use rsma::splitter::{closed_form_placement, placement_rects, select_case};
use rsma::{epsilon_bisection, Power, Rate, Rect, Region, Tolerance};

fn main() -> Result<(), rsma::Error> {
    let upper = Rect::new(2.809254, 4.190746)?;
    let lower = Rect::new(1.190746, 1.0)?;
    let (pj, rj) = (2.0, 7f64.log2() / 6.0);

    let case = select_case(upper, lower, pj, rj, Tolerance::default());
    let closed = closed_form_placement(upper, lower, pj, rj, case);
    let parent = Region::Double { upper, lower };
    let oracle = epsilon_bisection(case.pattern(), &parent, Power::new(pj)?, Rate::new(rj)?)?;
    println!("case {case:?}, filling {:?}", case.pattern());
    println!("closed form epsilon {:.12}", closed.epsilon);
    println!("bisection   epsilon {:.12}", oracle.epsilon);
    for r in placement_rects(&closed, Power::new(pj)?) {
        println!("  piece: power {:.6} at NIS {:.6}", r.power, r.nis);
    }
    Ok(())
}
