//! Fixtures shared by the benchmarks.

use rcp_core::{InterarrivalLaw, SpaceTimeBox};

pub fn pareto() -> InterarrivalLaw {
    InterarrivalLaw::pareto_tail(0.7, 1.0).expect("valid law")
}

pub fn line_box(half: i64, horizon: f64) -> SpaceTimeBox {
    SpaceTimeBox::new(vec![-half], vec![half], 0.0, horizon).expect("valid box")
}
