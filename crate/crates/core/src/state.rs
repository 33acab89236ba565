use crate::error::Result;

/// Maps a raw employee feature vector to the non-resignation probability S.
///
/// The trained network is the production implementation; the planner and the
/// search oracle are generic over this trait so they can also run against
/// hand-built synthetic models.
pub trait StateFunction {
    fn feature_count(&self) -> usize;

    fn calculate_s(&self, raw: &[f64]) -> Result<f64>;
}

impl<T: StateFunction + ?Sized> StateFunction for &T {
    fn feature_count(&self) -> usize {
        (**self).feature_count()
    }

    fn calculate_s(&self, raw: &[f64]) -> Result<f64> {
        (**self).calculate_s(raw)
    }
}
