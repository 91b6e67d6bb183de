use crate::num::Scalar;

/// A point on the deployment field, in meters.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point<S> {
    pub x: S,
    pub y: S,
}

impl<S: Scalar> Point<S> {
    pub fn new(x: S, y: S) -> Self {
        Self { x, y }
    }

    pub fn distance_to(&self, other: &Point<S>) -> S {
        distance(*self, *other)
    }
}

/// Euclidean distance between two positions.
pub fn distance<S: Scalar>(a: Point<S>, b: Point<S>) -> S {
    (a.x - b.x).hypot(a.y - b.y)
}
